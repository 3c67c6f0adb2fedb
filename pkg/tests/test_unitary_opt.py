from dataclasses import replace

import numpy as np
import pytest

from src.entropy import Spectrum
from src.errors import DomainError, SingularityError
from src.linalg import identity, kron, sample_haar_unitary, unitarity_defect
from src.orbit import orbit_extremes
from src.unitary_opt import (
    Manifold,
    Mode,
    Objective,
    OptimizerConfig,
    directional_derivative,
    finite_difference,
    local_evidence,
    optimize_full,
    optimize,
    optimize_local,
    riemannian_gradient,
)

RHO_2 = np.diag([0.9, 0.1])
SIGMA_2 = np.diag([0.8, 0.2])


def _random_skew(dim, rng):
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    k = g - g.conj().T
    return k / np.linalg.norm(k)


def _extremes(rho, sigma):
    return orbit_extremes(Spectrum.of(rho), Spectrum.of(sigma))


class TestGradient:
    @pytest.mark.parametrize("dim", [2, 4])
    def test_matches_finite_difference(self, dim, random_state, rng):
        for _ in range(50):
            rho, sigma = random_state(dim), random_state(dim)
            u = sample_haar_unitary(dim, rng)
            k = _random_skew(dim, rng)
            analytic = directional_derivative(k, riemannian_gradient(u, rho, sigma))
            numeric = finite_difference(u, k, rho, sigma, OptimizerConfig(fd_epsilon=1e-5))
            assert abs(analytic - numeric) <= 1e-5 * max(1.0, abs(analytic))

    def test_gradient_is_skew_hermitian(self, random_state, rng):
        m = riemannian_gradient(sample_haar_unitary(3, rng), random_state(3), random_state(3))
        np.testing.assert_allclose(m, -m.conj().T, atol=1e-14)

    def test_commuting_is_stationary(self):
        m = riemannian_gradient(identity(3), np.diag([0.6, 0.3, 0.1]), np.diag([0.2, 0.5, 0.3]))
        np.testing.assert_allclose(m, np.zeros((3, 3)), atol=1e-15)

    def test_maximally_mixed_rho_is_stationary(self, random_state, rng):
        sigma = random_state(4)
        for _ in range(5):
            m = riemannian_gradient(sample_haar_unitary(4, rng), np.eye(4) / 4, sigma)
            np.testing.assert_allclose(m, np.zeros((4, 4)), atol=1e-14)

    def test_singular_sigma(self):
        with pytest.raises(SingularityError):
            riemannian_gradient(identity(2), RHO_2, np.diag([1.0, 0.0]))


class TestOptimizerConfig:
    @pytest.mark.parametrize("field, value", [
        ("step_size", 0.0),
        ("grad_norm_tol", -1.0),
        ("fd_epsilon", 0.0),
        ("max_iters", 0),
        ("restarts", 0),
    ])
    def test_rejects(self, field, value):
        with pytest.raises(DomainError, match=field):
            OptimizerConfig(**{field: value})

    def test_to_dict_uses_enum_values(self):
        data = OptimizerConfig(mode=Mode.MINIMIZE, objective=Objective.SUPERADDITIVITY_GAP).to_dict()
        assert data["mode"] == "minimize"
        assert data["manifold"] == "full"
        assert data["objective"] == "gap"
        assert data["restarts"] == 20


class TestOptimizeFull:
    def test_two_level_maximum(self, rng):
        trace = optimize_full(RHO_2, SIGMA_2, OptimizerConfig(), rng)
        assert trace.final_value == pytest.approx(1.652932, abs=1e-6)
        assert trace.final_value == pytest.approx(_extremes(RHO_2, SIGMA_2).max_value, abs=1e-6)
        assert trace.max_unitarity_defect <= 1e-8

    def test_equal_states_minimum(self, random_state, rng):
        rho = random_state(4)
        trace = optimize_full(rho, rho, OptimizerConfig(mode=Mode.MINIMIZE), rng)
        assert trace.final_value == pytest.approx(0.0, abs=1e-8)

    def test_accepted_iterates_improve(self, random_state, rng):
        trace = optimize_full(random_state(4), random_state(4), OptimizerConfig(max_iters=200, restarts=1), rng)
        values = [r.value for r in trace.iterates]
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))
        assert len(trace.restart_values) == 1
        assert unitarity_defect(trace.final_unitary) <= 1e-8

    @pytest.mark.slow
    def test_converged_runs_reach_the_analytic_extremes(self, random_state, rng):
        converged = 0
        for _ in range(50):
            rho, sigma = random_state(4), random_state(4)
            ext = _extremes(rho, sigma)
            for mode, target in ((Mode.MAXIMIZE, ext.max_value), (Mode.MINIMIZE, ext.min_value)):
                trace = optimize_full(rho, sigma, OptimizerConfig(mode=mode), rng)
                if trace.converged:
                    converged += 1
                    assert trace.final_value == pytest.approx(target, abs=1e-6)
                assert trace.max_unitarity_defect <= 1e-8
        assert converged >= 75


LOCAL = OptimizerConfig(manifold=Manifold.LOCAL_PRODUCT, restarts=5, max_iters=500)


class TestOptimizeLocal:
    def test_product_states_add(self, random_state, rng):
        rho_a, rho_b, sigma_a, sigma_b = (random_state(2) for _ in range(4))
        trace = optimize_local(kron(rho_a, rho_b), kron(sigma_a, sigma_b), LOCAL, rng)
        expected = _extremes(rho_a, sigma_a).max_value + _extremes(rho_b, sigma_b).max_value
        assert trace.final_value == pytest.approx(expected, abs=1e-6)
        assert len(trace.restart_values) == 5
        u_a, u_b = trace.factors
        np.testing.assert_allclose(trace.final_unitary, kron(u_a, u_b))

    def test_maximally_mixed_is_flat(self, rng):
        mixed = np.eye(4) / 4
        trace = optimize_local(mixed, mixed, LOCAL, rng)
        assert trace.final_value == pytest.approx(0.0, abs=1e-12)
        assert trace.iterates[0].grad_norm == pytest.approx(0.0, abs=1e-12)
        assert trace.converged

    def test_stays_inside_full_orbit(self, random_state, rng):
        rho, sigma = random_state(4), random_state(4)
        ext = _extremes(rho, sigma)
        high = optimize_local(rho, sigma, LOCAL, rng)
        low = optimize_local(rho, sigma, replace(LOCAL, mode=Mode.MINIMIZE), rng)
        assert high.final_value <= ext.max_value + 1e-9
        assert low.final_value >= ext.min_value - 1e-9
        assert max(high.max_unitarity_defect, low.max_unitarity_defect) <= 1e-8

    def test_gap_objective_matches_evidence(self, random_state, rng):
        rho, sigma = random_state(4), random_state(4)
        config = replace(LOCAL, objective=Objective.SUPERADDITIVITY_GAP, restarts=3, max_iters=300)
        trace = optimize_local(rho, sigma, config, rng)
        evidence = local_evidence(rho, sigma, *trace.factors)
        assert trace.final_value == pytest.approx(evidence.gap, abs=1e-10)
        assert trace.final_value >= trace.iterates[0].value - 1e-12

    def test_rejects_non_qubit_pair(self, random_state, rng):
        with pytest.raises(DomainError, match="two-qubit"):
            optimize_local(random_state(3), random_state(3), LOCAL, rng)


def test_local_evidence_for_product_states(random_state, rng):
    rho = kron(random_state(2), random_state(2))
    sigma = kron(random_state(2), random_state(2))
    evidence = local_evidence(rho, sigma, sample_haar_unitary(2, rng), sample_haar_unitary(2, rng))
    assert evidence.gap == pytest.approx(0.0, abs=1e-10)
    assert evidence.satisfied


class TestManifoldDispatch:
    def test_full_optimizer_rejects_local_config(self, random_state, rng):
        with pytest.raises(DomainError, match="local-product"):
            optimize_full(random_state(4), random_state(4), LOCAL, rng)

    def test_local_optimizer_rejects_full_config(self, random_state, rng):
        with pytest.raises(DomainError, match="full"):
            optimize_local(random_state(4), random_state(4), OptimizerConfig(restarts=2), rng)

    def test_optimize_follows_manifold(self, random_state):
        rho, sigma = random_state(4), random_state(4)
        local = optimize(rho, sigma, LOCAL, np.random.default_rng(3))
        again = optimize_local(rho, sigma, LOCAL, np.random.default_rng(3))
        assert local.factors is not None
        assert local.final_value == again.final_value

        full = optimize(rho, sigma, OptimizerConfig(), np.random.default_rng(3))
        assert full.factors is None


def test_finite_difference_uses_configured_step(random_state, rng):
    rho, sigma = random_state(4), random_state(4)
    u = sample_haar_unitary(4, rng)
    k = _random_skew(4, rng)
    fine = finite_difference(u, k, rho, sigma, OptimizerConfig(fd_epsilon=1e-5))
    coarse = finite_difference(u, k, rho, sigma, OptimizerConfig(fd_epsilon=0.5))
    assert fine == pytest.approx(finite_difference(u, k, rho, sigma), abs=1e-12)
    assert coarse != fine
