import math

import numpy as np
import pytest

from chemotax.bubbles import (
    SLOPE_ZERO_BAND,
    band_sensitivity,
    bubble_density,
    bubble_species_density,
    collapse_experiment,
    expansion_report,
    liouville_bubble,
    slope_verdict,
)
from chemotax.functionals import free_energy
from chemotax.greens import green_convolve
from chemotax.grid import integrate_field, make_disk_grid
from chemotax.measure import EIGHT_PI, make_measure

LADDER = (0.2, 0.141, 0.1, 0.071, 0.05)


class TestLiouvilleBubble:
    def test_center_value(self, disk256):
        eps = 0.07
        u = liouville_bubble(disk256, eps)
        k = disk256.cell_at(0.0, 0.0)
        # the center cell sits h/sqrt(2) away from the true center
        assert u[k] == pytest.approx(
            math.log(8 * eps**2 / (eps**2 + disk256.xc[k]**2 + disk256.yc[k]**2)**2),
            rel=1e-14)
        assert u.max() <= math.log(8.0 / eps**2) + 1e-12

    def test_satisfies_liouville_equation_away_from_boundary(self):
        errs = {}
        for n in (128, 256):
            g = make_disk_grid(n, 1.0)
            u = liouville_bubble(g, 0.2)
            lap = g.laplacian_dirichlet_matrix @ u
            interior = (np.hypot(g.xc, g.yc) < 0.5) & (g.n_boundary_faces == 0)
            errs[n] = np.max(np.abs(-lap[interior] - np.exp(u[interior])))
        assert 3.3 < errs[128] / errs[256] < 4.7  # O(h^2)

    def test_rescaled_quadrature_identity(self, disk256):
        # int over B_{r/eps} of (1+|y|^2)^-2 equals pi (1 - 1/(1 + (r/eps)^2))
        eps, radius = 0.05, 1.0
        scaled = (1.0 + (disk256.xc**2 + disk256.yc**2) / eps**2) ** -2
        lhs = integrate_field(scaled, disk256) / eps**2
        rhs = math.pi * (1.0 - 1.0 / (1.0 + (radius / eps) ** 2))
        assert lhs == pytest.approx(rhs, rel=0.02)

    def test_rejects_nonpositive_epsilon(self, disk256):
        with pytest.raises(ValueError):
            liouville_bubble(disk256, 0.0)


class TestBubbleDensity:
    def test_mass_exact(self, disk256):
        lam = 4 * math.pi
        for eps in LADDER:
            psi = bubble_density(disk256, eps, lam)
            assert integrate_field(psi, disk256) == pytest.approx(lam, rel=1e-13)
            assert psi.min() > 0.0

    def test_entropy_expansion(self, disk256):
        lam = EIGHT_PI
        offsets = []
        for eps in (0.2, 0.1, 0.05):
            psi = bubble_density(disk256, eps, lam)
            val = integrate_field(psi * np.log(psi), disk256)
            offsets.append(val - lam * math.log(1.0 / eps**2))
        # the remainder is O(1): bounded on the ladder, settling as eps -> 0
        assert all(abs(o) < 20.0 for o in offsets)
        assert offsets[0] > offsets[1] > offsets[2] > 0.0

    def test_interaction_expansion(self, disk256, green_disk256):
        lam = EIGHT_PI
        for eps in (0.2, 0.1, 0.05):
            psi = bubble_density(disk256, eps, lam)
            val = integrate_field(psi * green_convolve(psi, green_disk256), disk256)
            leading = lam**2 / EIGHT_PI * math.log(1.0 / eps**4)
            assert abs(val - leading) < 120.0  # O(1) remainder, desk bound


class TestBubbleSpeciesDensity:
    def test_single_atom_family_is_bubble(self, disk256, delta_one):
        lam = 4 * math.pi
        stack = bubble_species_density(disk256, 0.1, lam, delta_one, eta=0.3)
        psi = bubble_density(disk256, 0.1, lam)
        assert np.array_equal(stack[0], psi)

    def test_measure_weighted_mass(self, disk256, two_positive):
        lam = 4 * math.pi
        for eta in (0.3, 0.8):  # band {1} and band {1, 1/2}
            stack = bubble_species_density(disk256, 0.1, lam, two_positive, eta)
            w = two_positive.weights_array
            total = float(w @ (disk256.h**2 * stack.sum(axis=1)))
            assert total == pytest.approx(lam, rel=1e-13)

    def test_mirrored_band(self, disk256):
        m = make_measure([(-1.0, 0.5), (-0.9, 0.5)])
        stack = bubble_species_density(disk256, 0.1, 2.0, m, eta=0.05)
        assert stack[0].max() > 0.0   # alpha = -1 atom carries the bubble
        assert np.all(stack[1] == 0.0)
        assert band_sensitivity(m, 0.05) == pytest.approx(-1.0)

    def test_no_atoms_in_band(self, disk256):
        m = make_measure([(0.5, 1.0)])
        with pytest.raises(ValueError):
            bubble_species_density(disk256, 0.1, 1.0, m, eta=0.2)

    def test_factorization_identity(self, disk128, green_disk128, two_positive):
        # quadratic interaction of the family factorizes through the band
        # sensitivity; pure algebra, holds to solver rounding
        lam = 4 * math.pi
        for eta in (0.3, 0.8):
            stack = bubble_species_density(disk128, 0.1, lam, two_positive, eta)
            w, a = two_positive.weights_array, two_positive.alphas_array
            signed = (w * a) @ stack
            lhs = integrate_field(signed * green_convolve(signed, green_disk128),
                                  disk128)
            psi = bubble_density(disk128, 0.1, lam)
            quad = integrate_field(psi * green_convolve(psi, green_disk128), disk128)
            rhs = band_sensitivity(two_positive, eta) ** 2 * quad
            assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs))

    def test_entropy_identity_full_band(self, disk128, delta_one, two_positive):
        # with the whole band carrying the bubble (band mass 1) the family's
        # entropy integral equals the single-species one exactly
        lam = 4 * math.pi
        for measure, eta in ((delta_one, 0.5), (two_positive, 0.8)):
            stack = bubble_species_density(disk128, 0.1, lam, measure, eta)
            w = measure.weights_array
            per_atom = np.array([
                integrate_field(np.where(f > 0, f * np.log(np.where(f > 0, f, 1.0)),
                                         0.0), disk128) for f in stack])
            lhs = float(w @ per_atom)
            psi = bubble_density(disk128, 0.1, lam)
            rhs = integrate_field(psi * np.log(psi), disk128)
            assert abs(lhs - rhs) <= 1e-12 * abs(rhs)

    def test_entropy_identity_partial_band_offset(self, disk128, two_positive):
        # with a partial band the identity picks up the constant
        # -lam * log(band mass): the family is scaled by 1/P(band)
        lam = 4 * math.pi
        eta = 0.3  # band {1}, mass 1/2
        stack = bubble_species_density(disk128, 0.1, lam, two_positive, eta)
        w = two_positive.weights_array
        per_atom = np.array([
            integrate_field(np.where(f > 0, f * np.log(np.where(f > 0, f, 1.0)),
                                     0.0), disk128) for f in stack])
        lhs = float(w @ per_atom)
        psi = bubble_density(disk128, 0.1, lam)
        rhs = integrate_field(psi * np.log(psi), disk128) - lam * math.log(0.5)
        assert abs(lhs - rhs) <= 1e-12 * abs(rhs)


class TestExpansionReport:
    def test_ladder_validation(self, disk256, green_disk256):
        with pytest.raises(ValueError):
            expansion_report(disk256, (0.1, 0.2), green_disk256)  # not decreasing
        with pytest.raises(ValueError):
            expansion_report(disk256, (0.3,), green_disk256)      # above R/4
        with pytest.raises(ValueError):
            expansion_report(disk256, (0.2, 0.01), green_disk256)  # below 4h

    def test_mass_column_matches_plane_formula(self, disk256, green_disk256):
        scan = expansion_report(disk256, LADDER, green_disk256)
        for eps, val in zip(scan.epsilons, scan.int_exp_u):
            expected = EIGHT_PI * (1.0 - eps**2 / (1.0 + eps**2))
            assert val == pytest.approx(expected, rel=0.02)

    def test_entropy_ratio_monotone_to_one(self, disk256, green_disk256):
        scan = expansion_report(disk256, LADDER, green_disk256)
        r = scan.ratio_entropy
        assert all(a > b for a, b in zip(r, r[1:]))  # decreasing toward 1
        assert all(x > 1.0 for x in r)
        assert abs(r[-1] - 1.0) < 0.05

    def test_interaction_ratio_monotone(self, disk256, green_disk256):
        scan = expansion_report(disk256, LADDER, green_disk256)
        r = scan.ratio_interaction
        assert all(a < b for a, b in zip(r, r[1:]))  # increasing toward 1
        assert all(x < 1.0 for x in r)

    def test_projection_gap_grows_with_epsilon(self, disk256, green_disk256):
        scan = expansion_report(disk256, (0.1, 0.05), green_disk256)
        gaps = dict(zip(scan.epsilons, scan.projection_gap))
        assert gaps[0.1] > gaps[0.05]
        # O(eps^2) + O(h^2): the continuum part alone is 2 log(1 + eps^2)
        assert gaps[0.1] > 2.0 * math.log(1.0 + 0.01) - 1e-6

    def test_threads_deterministic(self, disk128, green_disk128):
        ladder = (0.2, 0.141, 0.1)
        a = expansion_report(disk128, ladder, green_disk128, threads=1)
        b = expansion_report(disk128, ladder, green_disk128, threads=3)
        assert a.free_energy_values == b.free_energy_values
        assert a.slope == b.slope


class TestCollapseExperiment:
    # oracle slopes lam (1 - c^2 lam / 8pi), c = 1 for a single atom:
    # 4pi -> 2pi, 8pi -> 0, 16pi -> -16pi (frozen before implementation)
    def test_subcritical_slope_and_verdict(self, disk256, green_disk256, delta_one):
        scan = collapse_experiment(disk256, delta_one, 4 * math.pi, 1.0, LADDER,
                                   green_disk256)
        assert abs(scan.slope - 2 * math.pi) <= 0.15 * 2 * math.pi
        assert scan.verdict == "bounded"

    def test_supercritical_slope_and_verdict(self, disk256, green_disk256,
                                             delta_one):
        scan = collapse_experiment(disk256, delta_one, 16 * math.pi, 1.0, LADDER,
                                   green_disk256)
        assert abs(scan.slope + 16 * math.pi) <= 0.15 * 16 * math.pi
        assert scan.verdict == "unbounded"

    def test_critical_slope_near_zero(self, disk256, green_disk256, delta_one):
        scan = collapse_experiment(disk256, delta_one, EIGHT_PI, 1.0, LADDER,
                                   green_disk256)
        assert abs(scan.slope) <= 0.15 * EIGHT_PI
        assert scan.verdict == "bounded"

    def test_free_energy_column_matches_functional(self, disk128, green_disk128,
                                                   two_positive):
        ladder = (0.2, 0.141, 0.1, 0.063)
        scan = collapse_experiment(disk128, two_positive, 4 * math.pi, 0.8,
                                   ladder, green_disk128)
        stack = bubble_species_density(disk128, 0.1, 4 * math.pi, two_positive, 0.8)
        direct = free_energy(stack, two_positive, disk128, green_disk128).value
        k = scan.epsilons.index(0.1)
        assert scan.free_energy_values[k] == pytest.approx(direct, rel=1e-12)

    def test_sign_flip_at_band_threshold(self, disk256, green_disk256,
                                         two_positive):
        # threshold for the two-atom band {1, 1/2}: 8pi / c^2 with c = 3/4
        c = band_sensitivity(two_positive, 1.0)
        threshold = EIGHT_PI / c**2
        slopes = []
        for lam in (0.7 * threshold, 1.4 * threshold):
            scan = collapse_experiment(disk256, two_positive, lam, 1.0, LADDER,
                                       green_disk256)
            slopes.append(scan.slope)
        signs = [s > 0 for s in slopes]
        assert signs == [True, False]

    def test_fit_validation(self, disk256, green_disk256, delta_one):
        with pytest.raises(ValueError):
            collapse_experiment(disk256, delta_one, 1.0, 1.0, (0.2, 0.1, 0.05),
                                green_disk256)  # fewer than 4 points
        with pytest.raises(ValueError):
            collapse_experiment(disk256, delta_one, 1.0, 1.0,
                                (0.2, 0.17, 0.14, 0.12), green_disk256)  # narrow


def test_slope_verdict_band():
    assert slope_verdict(-0.5 * SLOPE_ZERO_BAND, 0.01) == "bounded"
    assert slope_verdict(-2.0 * SLOPE_ZERO_BAND, 0.01) == "unbounded"
    assert slope_verdict(1.0, 0.01) == "bounded"


class TestRectangleGeometry:
    def test_projection_gap_nan_off_disk(self, square64, green64):
        # the Robin term is closed-form only for the centered disk; the scan
        # still runs on a rectangle, with the projection column marked NaN
        ladder = (0.12, 0.1, 0.08, 0.071)
        scan = expansion_report(square64, ladder, green64, lam=4 * math.pi)
        assert all(math.isnan(g) for g in scan.projection_gap)
        assert all(math.isfinite(v) for v in scan.free_energy_values)
        assert all(v > 0 for v in scan.int_exp_u)

    def test_projection_gap_small_when_resolved(self, disk256, green_disk256):
        scan = expansion_report(disk256, (0.1, 0.05), green_disk256)
        assert scan.projection_gap[1] < 0.05
