import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.deltas import (
    QUANTITIES,
    compute_deltas,
    compute_deltas_batch,
    delta_s,
    gap_terms,
    state_delta_report,
)
from src.entropy import Spectrum
from src.errors import DomainError
from src.linalg import kron
from src.marginal import QubitMarginTriple, sample_triple

seeds = st.integers(min_value=0, max_value=2**63 - 1)

# Product of two diag(0.9, 0.1) qubits against a classically correlated
# reference with maximally mixed margins.
VIOLATING_RHO = np.diag([0.81, 0.09, 0.09, 0.01])
VIOLATING_SIGMA = np.diag([0.4, 0.1, 0.1, 0.4])


def triple(joint, la, lb):
    return QubitMarginTriple(joint=Spectrum(joint), margin_a=la, margin_b=lb)


class TestComputeDeltas:
    def test_maximally_mixed(self):
        t = triple((0.25,) * 4, 0.5, 0.5)
        report = compute_deltas(t, t)
        for q in QUANTITIES:
            assert getattr(report, q) == pytest.approx(0.0, abs=1e-15)

    def test_identical_triples(self):
        t = triple((0.4, 0.3, 0.2, 0.1), 0.3, 0.4)
        report = compute_deltas(t, t)
        assert report.delta_min == pytest.approx(0.0, abs=1e-15)
        assert report.delta_max == pytest.approx(0.05254679, abs=1e-8)
        assert report.delta_mix == pytest.approx(0.16953929, abs=1e-8)
        assert report.delta == pytest.approx(0.65849625, abs=1e-8)
        assert report.delta_bar == pytest.approx(-0.60594946, abs=1e-8)
        assert report.modified_holds
        assert report.ordering_violations() == []

    def test_delta_max_by_hand(self):
        t = triple((0.4, 0.3, 0.2, 0.1), 0.3, 0.4)
        joint = 0.4 * 2 + 0.3 * math.log2(1.5) + 0.2 * math.log2(2 / 3) + 0.1 * math.log2(0.25)
        margin_a = 0.7 * math.log2(7 / 3) + 0.3 * math.log2(3 / 7)
        margin_b = 0.6 * math.log2(1.5) + 0.4 * math.log2(2 / 3)
        assert compute_deltas(t, t).delta_max == pytest.approx(joint - margin_a - margin_b, abs=1e-14)

    def test_singular_sigma(self):
        with pytest.raises(DomainError, match="strictly positive"):
            compute_deltas(triple((0.4, 0.3, 0.2, 0.1), 0.3, 0.4), triple((1.0, 0.0, 0.0, 0.0), 0.3, 0.3))

    def test_report_dict_carries_inputs(self):
        t = triple((0.4, 0.3, 0.2, 0.1), 0.3, 0.4)
        data = compute_deltas(t, t).to_dict()
        assert data["inputs"]["rho"] == [0.4, 0.3, 0.2, 0.1, 0.3, 0.4]
        assert data["delta_s"] is None

    @settings(max_examples=200, deadline=None)
    @given(seeds)
    def test_ordering_chain(self, seed):
        rng = np.random.default_rng(seed)
        rho, _ = sample_triple(rng)
        sigma, _ = sample_triple(rng, require_full_rank=True)
        report = compute_deltas(rho, sigma)
        assert report.ordering_violations() == []
        assert report.delta >= report.delta_min - 1e-10


def test_batch_matches_single(rng):
    pairs = [(sample_triple(rng)[0], sample_triple(rng, require_full_rank=True)[0]) for _ in range(50)]
    batch = compute_deltas_batch(
        np.array([r.lambdas for r, _ in pairs]),
        np.array([r.margin_a for r, _ in pairs]),
        np.array([r.margin_b for r, _ in pairs]),
        np.array([s.lambdas for _, s in pairs]),
        np.array([s.margin_a for _, s in pairs]),
        np.array([s.margin_b for _, s in pairs]),
    )
    assert batch.as_matrix().shape == (50, 5)
    assert not batch.ordering_violations().any()
    for i, (r, s) in enumerate(pairs):
        single = compute_deltas(r, s).values()
        for q in QUANTITIES:
            assert batch.column(q)[i] == pytest.approx(single[q], abs=1e-14)


class TestDeltaS:
    def test_equal_states(self, random_state):
        rho = random_state(4)
        assert delta_s(rho, rho) == pytest.approx(0.0, abs=1e-12)

    def test_product_states(self, random_state):
        rho = kron(random_state(2), random_state(2))
        sigma = kron(random_state(2), random_state(2))
        assert delta_s(rho, sigma) == pytest.approx(0.0, abs=1e-10)

    def test_maximally_mixed_reference(self, random_state):
        # against I/4 the gap is the mutual information of rho
        for _ in range(20):
            assert delta_s(random_state(4), np.eye(4) / 4) >= -1e-12

    def test_negative_full_rank_pair(self):
        assert delta_s(VIOLATING_RHO, VIOLATING_SIGMA) == pytest.approx(-0.318072, abs=1e-6)

    def test_support_violation(self, random_state, bell_state):
        terms = gap_terms(random_state(4), bell_state)
        assert terms.support_violation
        assert terms.value == math.inf


class TestStateDeltaReport:
    def test_sandwich_on_violating_pair(self):
        report = state_delta_report(VIOLATING_RHO, VIOLATING_SIGMA)
        assert report.delta_bar == pytest.approx(-0.478072, abs=1e-6)
        assert report.delta == pytest.approx(1.121928, abs=1e-6)
        assert report.delta_bar <= report.delta_s <= report.delta
        assert report.sandwich_holds()

    def test_sandwich_on_random_pairs(self, random_state):
        for _ in range(200):
            report = state_delta_report(random_state(4), random_state(4))
            assert report.sandwich_holds()
            assert report.ordering_violations() == []
