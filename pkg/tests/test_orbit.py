import math

import numpy as np
import pytest

from src.entropy import Spectrum, relative_entropy_classical, relative_entropy_quantum, shannon_entropy
from src.errors import DomainError
from src.linalg import dagger, identity, sample_haar_unitaries
from src.orbit import OrbitObjective, aligned_unitaries, orbit_extremes, verify_orbit_interval


class TestOrbitExtremes:
    def test_equal_flat_spectra(self):
        ext = orbit_extremes(Spectrum((0.5, 0.5)), Spectrum((0.5, 0.5)))
        assert (ext.min_value, ext.max_value) == pytest.approx((0.0, 0.0), abs=1e-15)

    def test_two_level_example(self):
        ext = orbit_extremes(Spectrum((0.9, 0.1)), Spectrum((0.8, 0.2)))
        assert ext.min_value == pytest.approx(0.9 * math.log2(0.9 / 0.8) - 0.1, abs=1e-14)
        assert ext.min_value == pytest.approx(0.05293, abs=1e-5)
        assert ext.max_value == pytest.approx(1.65293, abs=1e-5)

    def test_input_order_is_irrelevant(self):
        a = orbit_extremes(Spectrum((0.1, 0.9)), Spectrum((0.2, 0.8)))
        b = orbit_extremes(Spectrum((0.9, 0.1)), Spectrum((0.8, 0.2)))
        assert a == b

    @pytest.mark.parametrize("rho", [(0.7, 0.2, 0.1), (0.4, 0.3, 0.2, 0.1)])
    def test_uniform_sigma_collapses(self, rho):
        d = len(rho)
        ext = orbit_extremes(Spectrum(rho), Spectrum(tuple([1.0 / d] * d)))
        expected = math.log2(d) - shannon_entropy(Spectrum(rho))
        assert ext.min_value == pytest.approx(expected, abs=1e-14)
        assert ext.max_value == pytest.approx(expected, abs=1e-14)
        assert ext.width == pytest.approx(0.0, abs=1e-14)

    def test_singular_sigma(self):
        with pytest.raises(DomainError, match="invertible"):
            orbit_extremes(Spectrum((0.5, 0.5)), Spectrum((1.0, 0.0)))

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            orbit_extremes(Spectrum((0.5, 0.5)), Spectrum((0.5, 0.25, 0.25)))


def test_aligned_unitaries_hit_the_ends(rotated_diagonal):
    rho = rotated_diagonal([0.5, 0.3, 0.15, 0.05])
    sigma = rotated_diagonal([0.4, 0.3, 0.2, 0.1])
    ext = orbit_extremes(Spectrum.of(rho), Spectrum.of(sigma))
    u_min, u_max = aligned_unitaries(rho, sigma)
    assert relative_entropy_quantum(u_min @ rho @ dagger(u_min), sigma) == pytest.approx(ext.min_value, abs=1e-10)
    assert relative_entropy_quantum(u_max @ rho @ dagger(u_max), sigma) == pytest.approx(ext.max_value, abs=1e-10)


@pytest.mark.parametrize("dim", [2, 3, 4])
def test_relative_entropy_lies_between_spectral_bounds(dim, random_state):
    for _ in range(200):
        rho, sigma = random_state(dim), random_state(dim)
        r, s = Spectrum.of(rho), Spectrum.of(sigma)
        lower = relative_entropy_classical(r.sorted_desc(), s.sorted_desc())
        upper = relative_entropy_classical(r.sorted_desc(), s.sorted_asc())
        value = relative_entropy_quantum(rho, sigma)
        assert lower - 1e-10 <= value <= upper + 1e-10


class TestOrbitObjective:
    def test_matches_relative_entropy(self, random_state, rng):
        rho, sigma = random_state(4), random_state(4)
        f = OrbitObjective(rho, sigma)
        for u in sample_haar_unitaries(4, 5, rng):
            expected = relative_entropy_quantum(u @ rho @ dagger(u), sigma)
            assert f(u) == pytest.approx(expected, abs=1e-10)

    def test_batch_matches_scalar(self, random_state, rng):
        f = OrbitObjective(random_state(3), random_state(3))
        us = sample_haar_unitaries(3, 8, rng)
        np.testing.assert_allclose(f.batch(us), [f(u) for u in us], atol=1e-12)

    def test_commuting_aligned_is_minimum(self):
        rho, sigma = np.diag([0.6, 0.3, 0.1]), np.diag([0.5, 0.3, 0.2])
        ext = orbit_extremes(Spectrum.of(rho), Spectrum.of(sigma))
        assert OrbitObjective(rho, sigma)(identity(3)) == pytest.approx(ext.min_value, abs=1e-10)


class TestVerifyOrbitInterval:
    def test_equal_states(self, random_state, rng):
        rho = random_state(4)
        report = verify_orbit_interval(rho, rho, 500, rng)
        assert report.min_value == pytest.approx(0.0, abs=1e-12)
        assert report.observed_min >= -1e-9
        assert report.aligned_min == pytest.approx(0.0, abs=1e-10)
        assert report.violations == 0

    @pytest.mark.parametrize("dim", [2, 3, 4])
    def test_random_pair(self, dim, random_state, rng):
        report = verify_orbit_interval(random_state(dim), random_state(dim), 10_000, rng)
        assert report.violations == 0
        assert report.attained
        assert report.n_samples == 10_000
        assert report.coverage > 0.0

    def test_report_dict(self, random_state, rng):
        data = verify_orbit_interval(random_state(2), random_state(2), 10, rng).to_dict()
        assert data["dim"] == 2
        assert "coverage" in data
