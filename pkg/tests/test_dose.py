import numpy as np
import pytest

from hdrec import rng
from hdrec.dose import (
    DoseBudget,
    acquisition_photons,
    build_hybrid_scheme,
    poisson_counts,
    simulate_hybrid_acquisition,
    simulate_low_dose,
    total_photons,
    uniform_equivalent_b0,
)
from hdrec.errors import DomainTagError, ParameterError
from hdrec.types import AcquisitionScheme, Domain, ProjectionStack, T_MAX


def transmission(values):
    values = np.asarray(values, dtype=np.float64)
    angles = np.linspace(0, np.pi, values.shape[0], endpoint=False)
    return ProjectionStack(angles, values, Domain.TRANSMISSION)


class TestPoissonCore:
    def test_zero_mean_gives_zero(self):
        gen = rng.stream(0, 99)
        counts = poisson_counts(np.zeros(1000), gen)
        assert not counts.any()

    @pytest.mark.parametrize("lam", [0.5, 5.0, 29.9, 30.1, 250.0])
    def test_moments(self, lam):
        gen = rng.stream(7, 98, int(lam * 10))
        n = 40000
        k = poisson_counts(np.full(n, lam), gen)
        mean_se = np.sqrt(lam / n)
        var_se = lam * np.sqrt(2.0 / n)
        assert abs(k.mean() - lam) <= 4 * mean_se
        #

        # rounding the normal branch adds at most 1/12 variance
        assert abs(k.var() - lam) <= 4 * var_se + 1.0 / 12.0

    def test_integer_valued(self):
        gen = rng.stream(1, 97)
        k = poisson_counts(np.full(500, 17.3), gen)
        assert np.array_equal(k, np.rint(k))

    def test_rejects_negative_mean(self):
        with pytest.raises(ParameterError):
            poisson_counts(np.array([-1.0]), rng.stream(0, 96))


class TestSimulateLowDose:
    def test_zero_stays_zero(self):
        p = transmission(np.zeros((4, 16)))
        for b0 in (10, 50, 100, 500, 1000):
            out = simulate_low_dose(p, b0, seed=5)
            assert not out.values.any()

    def test_sweep_grid_accepted(self):
        p = transmission(np.full((2, 8), 0.5))
        for b0 in (10, 50, 100, 500, 1000):
            simulate_low_dose(p, b0, seed=1)

    def test_clamped_to_ceiling(self):
        p = transmission(np.full((1, 4000), 1.0))
        out = simulate_low_dose(p, 10, seed=2)
        assert out.values.max() <= np.float32(T_MAX)
        # with lam = 10 some draws exceed the ceiling before clamping
        assert (out.values == np.float32(T_MAX)).any()

    def test_parameter_and_domain_errors(self):
        p = transmission(np.full((1, 4), 0.5))
        with pytest.raises(ParameterError):
            simulate_low_dose(p, 0.0, seed=0)
        li = ProjectionStack(np.array([0.0]), np.array([[0.5]]), Domain.LINE_INTEGRAL)
        with pytest.raises(DomainTagError):
            simulate_low_dose(li, 100, seed=0)
        with pytest.raises(ParameterError):
            simulate_low_dose(transmission(np.full((1, 4), 1.1)), 100, seed=0)

    def test_deterministic_and_per_angle_streams(self):
        gen = np.random.default_rng(3)
        p = transmission(gen.uniform(0.2, 1.0, (6, 32)))
        a = simulate_low_dose(p, 100, seed=9)
        b = simulate_low_dose(p, 100, seed=9)
        assert np.array_equal(a.values, b.values)
        # row for angle k only depends on (seed, k): simulating a sub-stack
        sub = ProjectionStack(p.angles[:3].copy(), p.values[:3], Domain.TRANSMISSION)
        c = simulate_low_dose(sub, 100, seed=9)
        assert np.array_equal(c.values, a.values[:3])


class TestScheme:
    def test_paper_angle_layout(self):
        scheme = build_hybrid_scheme(1500, 4, 5000, 100)
        assert scheme.normal_indices.tolist() == [0, 375, 750, 1125]
        assert total_photons(scheme).total_photons == 4 * 5000 + 1496 * 100 == 169600

    def test_degenerate_uniform_normal(self):
        scheme = build_hybrid_scheme(1500, 1500, 5000, 5000)
        assert scheme.n_pairs == 1500
        assert np.all(scheme.b0_per_angle == 5000.0)

    def test_pair_count_bounds(self):
        with pytest.raises(ParameterError):
            build_hybrid_scheme(10, 11, 5000, 100)
        with pytest.raises(ParameterError):
            build_hybrid_scheme(10, 0, 5000, 100)
        with pytest.raises(ParameterError):
            build_hybrid_scheme(10, 2, 100, 5000)

    def test_total_photons_examples(self):
        assert total_photons(build_hybrid_scheme(1500, 1500, 5000, 5000)).total_photons == 7_500_000
        assert total_photons(build_hybrid_scheme(1, 1, 4321, 4321)).total_photons == 4321

    def test_all_low_scheme_budget_exact(self):
        scheme = AcquisitionScheme(
            np.full(360, 100.0), np.array([], dtype=np.int64), 5000.0, 100.0
        )
        assert total_photons(scheme).total_photons == 360 * 100.0

    def test_uniform_equivalent_matches_quoted_values(self):
        # 32-pair acquisitions: budget counts the low-dose shot at every angle
        # plus the sparse normal shots.
        glass = acquisition_photons(build_hybrid_scheme(1500, 32, 5000, 100))
        assert uniform_equivalent_b0(glass, 1500) == pytest.approx(206, abs=1.0)
        shale = acquisition_photons(build_hybrid_scheme(1501, 32, 4000, 200))
        assert uniform_equivalent_b0(shale, 1501) == pytest.approx(285, abs=1.0)
        assert uniform_equivalent_b0(DoseBudget(169600), 1500) == pytest.approx(113.0667, abs=1e-3)


class TestHybridAcquisition:
    def test_pair_count_and_full_view(self, disk64_transmission):
        scheme = build_hybrid_scheme(90, 4, 5000, 100)
        pairs, p_l = simulate_hybrid_acquisition(disk64_transmission, scheme, seed=4)
        assert len(pairs) == 4
        assert p_l.n_angles == 90
        assert p_l.domain is Domain.TRANSMISSION

    def test_pairs_cover_every_angle_when_degenerate(self, disk64_transmission):
        scheme = build_hybrid_scheme(90, 90, 5000, 5000)
        pairs, _ = simulate_hybrid_acquisition(disk64_transmission, scheme, seed=4)
        assert [p.angle_index for p in pairs] == list(range(90))

    def test_paired_rows_share_noise_with_full_view(self, disk64_transmission):
        scheme = build_hybrid_scheme(90, 4, 5000, 100)
        pairs, p_l = simulate_hybrid_acquisition(disk64_transmission, scheme, seed=4)
        for pair in pairs:
            assert np.array_equal(
                pair.low, p_l.values[pair.angle_index].astype(np.float64)
            )
            # default target: the noiseless transmission
            assert np.array_equal(
                pair.normal,
                disk64_transmission.values[pair.angle_index].astype(np.float64),
            )

    def test_full_view_equals_plain_low_dose(self, disk64_transmission):
        scheme = build_hybrid_scheme(90, 4, 5000, 100)
        _, p_l = simulate_hybrid_acquisition(disk64_transmission, scheme, seed=4)
        direct = simulate_low_dose(disk64_transmission, 100, seed=4)
        assert np.array_equal(p_l.values, direct.values)

    def test_renoised_targets(self, disk64_transmission):
        scheme = build_hybrid_scheme(90, 4, 5000, 100)
        pairs, _ = simulate_hybrid_acquisition(
            disk64_transmission, scheme, seed=4, renoise_normal=True
        )
        for pair in pairs:
            clean = disk64_transmission.values[pair.angle_index].astype(np.float64)
            assert not np.array_equal(pair.normal, clean)
            assert np.max(np.abs(pair.normal - clean)) < 0.2  # b0=5000 noise is small

    def test_deterministic(self, disk64_transmission):
        scheme = build_hybrid_scheme(90, 4, 5000, 100)
        p1, l1 = simulate_hybrid_acquisition(disk64_transmission, scheme, seed=4)
        p2, l2 = simulate_hybrid_acquisition(disk64_transmission, scheme, seed=4)
        assert np.array_equal(l1.values, l2.values)
        for a, b in zip(p1, p2):
            assert np.array_equal(a.low, b.low) and np.array_equal(a.normal, b.normal)

    def test_scheme_mismatch(self, disk64_transmission):
        scheme = build_hybrid_scheme(91, 4, 5000, 100)
        with pytest.raises(ParameterError):
            simulate_hybrid_acquisition(disk64_transmission, scheme, seed=0)
