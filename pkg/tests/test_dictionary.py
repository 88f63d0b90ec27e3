from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cspq.csp import Csp, Kernel, Measure, standalone_distribution, validate_csp
from cspq.dictionary import (
    UnitaryFamily,
    backward_translate,
    config_basis,
    extract_phases,
    forward_translate,
    initial_density,
    pvm_check,
    standalone_via_trace,
    trace_probability,
    transition_probabilities,
)
from cspq.dynamics import PhaseField, unitarity_residual
from cspq.errors import PreconditionError, StructuralError
from cspq.sampling import random_csp, random_measure, random_unitary, random_unitary_family

S = 1 / np.sqrt(2)
HALF_I = S * np.array([[1, 1j], [1j, 1]])
CYCLIC3 = 0.5 * np.array([[1, 1, 0], [0, 1, 1], [1, 0, 1]], dtype=float)


def rotation(a):
    return np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])


class TestBasis:
    def test_example(self):
        rep = config_basis(Measure([0.25, 0.75]))
        np.testing.assert_allclose(rep.basis_coords[0], [2, 0])
        np.testing.assert_allclose(rep.basis_coords[1], [0, 2 / np.sqrt(3)])
        assert rep.inner(rep.basis_coords[0], rep.basis_coords[0]) == pytest.approx(1.0)

    @pytest.mark.parametrize("n", [1, 2, 5, 16])
    def test_uniform(self, n):
        rep = config_basis(Measure.uniform(n))
        np.testing.assert_allclose(rep.basis_coords, np.sqrt(n) * np.eye(n), rtol=1e-15)

    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 12))
    @settings(max_examples=40, deadline=None)
    def test_weighted_orthonormal(self, seed, n):
        rep = config_basis(random_measure(np.random.default_rng(seed), n))
        gram = np.array([[rep.inner(a, b) for b in rep.basis_coords] for a in rep.basis_coords])
        np.testing.assert_allclose(gram, np.eye(n), atol=1e-12)

    def test_coefficients_expand(self):
        rep = config_basis(Measure([0.2, 0.3, 0.5]))
        f = np.array([1.0, -2.0, 0.5j])
        c = rep.coefficients(f)
        np.testing.assert_allclose(c @ rep.basis_coords, f)

    def test_invalid_measure(self):
        with pytest.raises(PreconditionError):
            config_basis(Measure([1.0, 0.0]))


class TestPvm:
    def test_constructed_passes(self):
        assert pvm_check(config_basis(Measure([0.1, 0.2, 0.7]))).passed

    def test_tampered_idempotence(self):
        rep = config_basis(Measure([0.5, 0.5]))
        d = np.array(rep.projection_diags)
        d[0, 0] = 0.5
        r = pvm_check(replace(rep, projection_diags=d))
        assert "idempotence" in r.kinds()

    def test_deleted_projection(self):
        rep = config_basis(Measure([0.2, 0.3, 0.5]))
        r = pvm_check(replace(rep, projection_diags=np.array(rep.projection_diags)[[0, 2]]))
        assert r.kinds() == {"completeness"}

    def test_overlapping_projections(self):
        rep = config_basis(Measure([0.5, 0.5]))
        r = pvm_check(replace(rep, projection_diags=np.array([[1.0, 1.0], [0.0, 1.0]])))
        assert "orthogonality" in r.kinds()

    def test_full_matrices_satisfy_identities(self):
        rep = config_basis(Measure([0.2, 0.3, 0.5]))
        ps = [rep.projection(j) for j in (1, 2, 3)]
        for j, pj in enumerate(ps):
            for k, pk in enumerate(ps):
                np.testing.assert_array_equal(pj @ pk, pj if j == k else 0)
        np.testing.assert_array_equal(sum(ps), np.eye(3))


class TestTrace:
    def test_identity(self):
        for j in (1, 2, 3):
            for k in (1, 2, 3):
                assert trace_probability(np.eye(3), j, k) == (1.0 if j == k else 0.0)

    def test_example(self):
        assert trace_probability(HALF_I, 1, 2) == pytest.approx(0.5, abs=1e-15)

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            trace_probability(np.eye(2), 0, 1)
        with pytest.raises(IndexError):
            trace_probability(np.eye(2), 1, 3)

    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 8), unitary=st.booleans())
    @settings(max_examples=60, deadline=None)
    def test_equals_modulus_squared(self, seed, n, unitary):
        rng = np.random.default_rng(seed)
        u = random_unitary(rng, n) if unitary else rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        direct = np.abs(u) ** 2
        for j in range(n):
            for k in range(n):
                assert abs(trace_probability(u, j + 1, k + 1) - direct[j, k]) <= 1e-12 * max(1, direct[j, k])


class TestDensity:
    def test_examples(self):
        np.testing.assert_array_equal(initial_density(Measure([0.25, 0.75])).matrix, np.diag([0.25, 0.75]))
        np.testing.assert_allclose(initial_density(Measure.uniform(4)).matrix, np.eye(4) / 4)
        np.testing.assert_array_equal(initial_density(Measure([1.0])).matrix, [[1.0]])

    def test_standalone_identity(self):
        mu = Measure([0.1, 0.3, 0.6])
        np.testing.assert_allclose(standalone_via_trace(np.eye(3), initial_density(mu)).probs, mu.weights)

    def test_standalone_uniform(self):
        rho = initial_density(Measure([0.25, 0.75]))
        np.testing.assert_allclose(standalone_via_trace(HALF_I, rho).probs, [0.5, 0.5], atol=1e-15)

    def test_rotation_quarter(self):
        rho = initial_density(Measure([0.5, 0.5]))
        np.testing.assert_allclose(standalone_via_trace(rotation(np.pi / 4), rho).probs, [0.5, 0.5], atol=1e-15)

    def test_literal_trace_agrees(self):
        rng = np.random.default_rng(4)
        u = random_unitary(rng, 5)
        mu = random_measure(rng, 5)
        rho = initial_density(mu).matrix
        d = standalone_via_trace(u, initial_density(mu)).probs
        for j in range(5):
            pj = np.zeros((5, 5))
            pj[j, j] = 1
            assert d[j] == pytest.approx(np.trace(u.conj().T @ pj @ u @ rho).real, abs=1e-14)

    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 10))
    @settings(max_examples=40, deadline=None)
    def test_matches_csp_side(self, seed, n):
        rng = np.random.default_rng(seed)
        fam = random_unitary_family(rng, n, (0.0, 1.0))
        mu = random_measure(rng, n)
        c = backward_translate(fam, mu)
        via_trace = standalone_via_trace(fam.at(1.0), initial_density(mu))
        np.testing.assert_allclose(via_trace.probs, standalone_distribution(c, 1.0).probs, atol=1e-10)
        assert abs(via_trace.probs.sum() - 1.0) <= 1e-10


class TestForward:
    def test_identity_only(self):
        ft = forward_translate(Csp(Measure([0.5, 0.5]), Kernel.identity(2)))
        assert ft.residuals == (0.0,)
        assert ft.family.times == (0.0,)
        np.testing.assert_array_equal(ft.family.matrices[0], np.eye(2))

    def test_uniform_fit(self):
        c = Csp(Measure([0.25, 0.75]), Kernel((0.0, 1.0), [np.eye(2), np.full((2, 2), 0.5)]))
        ft = forward_translate(c, "fit")
        assert all(ft.unitary)
        assert max(ft.residuals) <= 1e-9
        for u, p in zip(ft.family.matrices, c.kernel.matrices):
            for j in (1, 2):
                for k in (1, 2):
                    assert trace_probability(u, j, k) == pytest.approx(p[j - 1, k - 1], abs=1e-10)

    def test_non_unistochastic_sqrt(self):
        c = Csp(Measure.uniform(3), Kernel((0.0, 1.0), [np.eye(3), CYCLIC3]))
        ft = forward_translate(c, PhaseField.zeros((0.0, 1.0), 3))
        assert ft.unitary == (True, False)
        assert ft.residuals[1] == pytest.approx(np.sqrt(1.5))
        u = ft.maps[1].matrix
        for j in range(3):
            for k in range(3):
                assert trace_probability(u, j + 1, k + 1) == pytest.approx(CYCLIC3[j, k], abs=1e-10)

    def test_phase_times_must_cover(self):
        c = Csp(Measure.uniform(2), Kernel((0.0, 1.0), [np.eye(2), np.full((2, 2), 0.5)]))
        with pytest.raises(StructuralError):
            forward_translate(c, PhaseField.zeros((0.0,), 2))

    def test_rejects_invalid_csp(self):
        c = Csp(Measure([0.9, 0.9]), Kernel.identity(2))
        with pytest.raises(PreconditionError):
            forward_translate(c)


class TestBackward:
    def test_identity(self):
        c = backward_translate(UnitaryFamily((0.0,), [np.eye(2)]), Measure([0.5, 0.5]))
        np.testing.assert_array_equal(c.kernel.matrices[0], np.eye(2))

    def test_rotation(self):
        fam = UnitaryFamily((0.0, 1.0), [np.eye(2), rotation(1.0)])
        c = backward_translate(fam, Measure([0.3, 0.7]))
        c2, s2 = np.cos(1.0) ** 2, np.sin(1.0) ** 2
        np.testing.assert_allclose(c.kernel.snapshot(1.0), [[c2, s2], [s2, c2]], atol=1e-15)
        assert validate_csp(c).passed

    def test_half_i(self):
        c = backward_translate(UnitaryFamily((0.0, 1.0), [np.eye(2), HALF_I]), Measure([0.5, 0.5]))
        np.testing.assert_allclose(c.kernel.snapshot(1.0), np.full((2, 2), 0.5), atol=1e-15)

    def test_non_unitary_names_time(self):
        fam = UnitaryFamily((0.0, 2.5), [np.eye(2), S * np.ones((2, 2))])
        with pytest.raises(PreconditionError, match="t=2.5"):
            backward_translate(fam, Measure([0.5, 0.5]))

    def test_u0_must_be_identity(self):
        fam = UnitaryFamily((0.0,), [np.diag([1, -1])])
        with pytest.raises(PreconditionError):
            backward_translate(fam, Measure([0.5, 0.5]))

    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 12))
    @settings(max_examples=60, deadline=None)
    def test_always_valid(self, seed, n):
        rng = np.random.default_rng(seed)
        c = backward_translate(random_unitary_family(rng, n), random_measure(rng, n))
        assert validate_csp(c, 1e-9).passed


class TestRoundTrips:
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6))
    @settings(max_examples=40, deadline=None)
    def test_forward_then_backward(self, seed, n):
        rng = np.random.default_rng(seed)
        c = random_csp(rng, n, (0.0, 1.0, 2.0))
        thetas = rng.uniform(-np.pi, np.pi, (3, n, n))
        thetas[0] = 0.0
        ft = forward_translate(c, PhaseField(c.kernel.times, thetas))
        back = backward_translate(ft.family, c.measure)
        for t in back.kernel.times:
            np.testing.assert_allclose(back.kernel.snapshot(t), c.kernel.snapshot(t), rtol=0, atol=1e-10)

    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 10), sparse=st.booleans())
    @settings(max_examples=60, deadline=None)
    def test_backward_then_forward(self, seed, n, sparse):
        rng = np.random.default_rng(seed)
        fam = random_unitary_family(rng, n)
        if sparse:
            # exact zeros: a permutation and a permuted block-diagonal unitary
            perm = np.eye(n)[rng.permutation(n)]
            cut = n // 2
            block = np.zeros((n, n), dtype=complex)
            block[:cut, :cut] = random_unitary(rng, cut) if cut else 0
            block[cut:, cut:] = random_unitary(rng, n - cut)
            fam = UnitaryFamily(fam.times, [fam.matrices[0], perm, perm @ block])
        c = backward_translate(fam, random_measure(rng, n))
        ft = forward_translate(c, extract_phases(fam), tol=1e-8)
        for u, m, p in zip(ft.maps, fam.matrices, c.kernel.matrices):
            # moduli of the lift are sqrt(p); sqrt(fl(x^2)) recovers x exactly
            np.testing.assert_array_equal(np.sqrt(p), np.abs(m))
            np.testing.assert_allclose(np.abs(u.matrix), np.abs(m), rtol=4e-16, atol=0)

    def test_extracted_phases_reproduce_gauge_class(self):
        rng = np.random.default_rng(9)
        fam = random_unitary_family(rng, 4)
        c = backward_translate(fam, Measure.uniform(4))
        ft = forward_translate(c, extract_phases(fam))
        assert all(ft.unitary)
        for u in ft.maps:
            assert unitarity_residual(u) <= 1e-12


def test_transition_probabilities_vectorized():
    rng = np.random.default_rng(0)
    u = random_unitary(rng, 4)
    p = transition_probabilities(u)
    for j in range(4):
        for k in range(4):
            assert p[j, k] == pytest.approx(trace_probability(u, j + 1, k + 1), abs=1e-15)
