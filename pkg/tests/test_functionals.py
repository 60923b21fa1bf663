import math

import numpy as np
import pytest

from chemotax.bubbles import bubble_density, liouville_bubble
from chemotax.functionals import (
    ExponentOverflowError,
    admissible_check,
    average_mass,
    dirichlet_energy,
    entropy,
    entropy_integrand,
    free_energy,
    gibbs_density,
    individual_mean_field_energy,
    induced_potential,
    lyapunov,
    mean_field_energy,
    single_species_free_energy,
    species_masses,
)
from chemotax.grid import field_inner, integrate_field, laplacian_dirichlet
from chemotax.sampling import admissible_density, single_density, smooth_potential

LAM = 4.0 * math.pi


def report_is_consistent(report):
    return abs(report.value - sum(report.breakdown.values())) <= \
        1e-13 * max(1.0, abs(report.value))


class TestEntropy:
    def test_uniform_one(self, square64, delta_one):
        rho = np.ones((1, square64.ncells))
        assert entropy(rho, delta_one, square64) == pytest.approx(-1.0, abs=1e-12)

    def test_zero_density(self, square64, delta_one):
        assert entropy(np.zeros((1, square64.ncells)), delta_one, square64) == 0.0

    def test_uniform_e(self, square64, delta_one):
        rho = np.full((1, square64.ncells), math.e)
        assert entropy(rho, delta_one, square64) == pytest.approx(0.0, abs=1e-12)

    def test_rejects_negative(self, square64, delta_one):
        rho = np.ones((1, square64.ncells))
        rho[0, 3] = -1e-8
        with pytest.raises(ValueError):
            entropy(rho, delta_one, square64)


class TestLyapunov:
    def test_uniform_density_zero_potential(self, square64, delta_one):
        rho = np.full((1, square64.ncells), LAM)  # mass LAM on the unit square
        rep = lyapunov(rho, square64.zeros(), delta_one, square64)
        assert rep.value == pytest.approx(LAM * (math.log(LAM) - 1.0), rel=1e-12)
        assert report_is_consistent(rep)

    def test_minimizer_attains_mean_field_energy(self, square64, delta_one,
                                                 two_positive, rng):
        for measure in (delta_one, two_positive):
            for _ in range(10):
                v = smooth_potential(rng, square64)
                rho_v = gibbs_density(v, measure, square64, LAM)
                l_val = lyapunov(rho_v, v, measure, square64).value
                j_val = mean_field_energy(v, measure, square64, LAM).value
                assert abs(l_val - j_val) <= 1e-10 * max(1.0, abs(j_val))

    def test_symmetric_pair_has_no_coupling(self, square64, attract_repel, rng):
        base = np.abs(rng.normal(size=square64.ncells)) + 0.1
        rho = np.stack([base, base])
        v = smooth_potential(rng, square64)
        rep = lyapunov(rho, v, attract_repel, square64)
        assert rep.breakdown["coupling"] == pytest.approx(0.0, abs=1e-14)
        expected = entropy(rho, attract_repel, square64) + dirichlet_energy(v, square64)
        assert rep.value == pytest.approx(expected, rel=1e-13)


class TestFreeEnergy:
    def test_zero_density(self, square64, delta_one, green64):
        rep = free_energy(np.zeros((1, square64.ncells)), delta_one, square64, green64)
        assert rep.value == 0.0

    def test_single_species_reduction(self, square64, delta_one, green64, rng):
        psi = single_density(rng, square64, LAM)
        rep = free_energy(psi[np.newaxis, :], delta_one, square64, green64)
        f0 = single_species_free_energy(psi, square64, green64)
        assert rep.value == pytest.approx(f0, rel=1e-13)

    def test_equals_lyapunov_at_induced_potential(self, square64, green64, rng,
                                                  delta_one, attract_repel,
                                                  two_positive):
        for measure in (delta_one, attract_repel, two_positive):
            rho = admissible_density(rng, square64, measure, LAM)
            v_rho = induced_potential(rho, measure, square64, green64)
            l_val = lyapunov(rho, v_rho, measure, square64).value
            f_val = free_energy(rho, measure, square64, green64).value
            assert abs(l_val - f_val) <= 1e-10 * max(1.0, abs(f_val))


class TestMeanFieldEnergy:
    def test_flat_potential_lambda_one(self, square64, delta_one):
        rep = mean_field_energy(square64.zeros(), delta_one, square64, 1.0)
        assert rep.value == pytest.approx(-1.0, rel=1e-12)
        assert report_is_consistent(rep)

    def test_flat_potential_critical_mass(self, square64, delta_one):
        lam = 8.0 * math.pi
        rep = mean_field_energy(square64.zeros(), delta_one, square64, lam)
        assert rep.value == pytest.approx(lam * (math.log(lam) - 1.0), rel=1e-12)

    def test_rejects_nonpositive_mass(self, square64, delta_one):
        with pytest.raises(ValueError):
            mean_field_energy(square64.zeros(), delta_one, square64, 0.0)


class TestIndividualEnergy:
    def test_single_atom_equals_average_variant(self, square64, delta_one, rng):
        v = smooth_potential(rng, square64)
        a = mean_field_energy(v, delta_one, square64, LAM).value
        b = individual_mean_field_energy(v, delta_one, square64, LAM).value
        assert a == pytest.approx(b, rel=1e-14)

    def test_flat_potential_matches_average(self, square64, two_positive):
        v = square64.zeros()
        a = mean_field_energy(v, two_positive, square64, LAM).value
        b = individual_mean_field_energy(v, two_positive, square64, LAM).value
        assert a == pytest.approx(b, rel=1e-14)

    def test_jensen_ordering(self, square64, attract_repel, two_positive, rng):
        for measure in (attract_repel, two_positive):
            for _ in range(50):
                v = smooth_potential(rng, square64)
                i_val = individual_mean_field_energy(v, measure, square64, LAM).value
                j_val = mean_field_energy(v, measure, square64, LAM).value
                assert i_val >= j_val - 1e-12 * max(1.0, abs(j_val))


class TestSingleSpeciesFreeEnergy:
    def test_zero(self, square64, green64):
        assert single_species_free_energy(square64.zeros(), square64, green64) == 0.0

    def test_scaling_inequality(self, square64, green64, rng):
        lam = 8.0 * math.pi
        for _ in range(25):
            psi = single_density(rng, square64, lam)
            f_psi = single_species_free_energy(psi, square64, green64)
            t = rng.uniform(0.0, 1.0)
            f_scaled = single_species_free_energy(t * psi, square64, green64)
            assert f_scaled >= t * f_psi - lam / math.e - 1e-12

    def test_critical_bubbles_bounded_below(self, disk256, green_disk256):
        lam = 8.0 * math.pi
        values = [single_species_free_energy(
            bubble_density(disk256, eps, lam), disk256, green_disk256)
            for eps in (0.2, 0.1, 0.05)]
        assert min(values) > -60.0
        assert max(values) - min(values) < 5.0


class TestGibbsDensity:
    def test_flat_potential_is_uniform(self, square64, two_positive):
        rho = gibbs_density(square64.zeros(), two_positive, square64, LAM)
        assert np.allclose(rho, LAM, rtol=1e-13)  # |Omega| = 1

    def test_total_mass_is_exact(self, square64, attract_repel, rng):
        v = smooth_potential(rng, square64)
        rho = gibbs_density(v, attract_repel, square64, LAM)
        assert average_mass(rho, attract_repel, square64) == pytest.approx(
            LAM, rel=1e-13)

    def test_minimality_among_admissible_densities(self, square64, two_positive, rng):
        for _ in range(20):
            v = smooth_potential(rng, square64)
            rho_v = gibbs_density(v, two_positive, square64, LAM)
            best = lyapunov(rho_v, v, two_positive, square64).value
            for _ in range(50):
                rho = admissible_density(rng, square64, two_positive, LAM)
                assert lyapunov(rho, v, two_positive, square64).value >= best - 1e-12

    def test_bubble_potential_recovers_bubble_density(self, disk256, delta_one):
        eps = 0.1
        v = liouville_bubble(disk256, eps) + 3.7  # additive constants drop out
        rho = gibbs_density(v, delta_one, disk256, LAM)
        psi = bubble_density(disk256, eps, LAM)
        assert np.max(np.abs(rho[0] - psi)) <= 1e-12 * np.max(psi)

    def test_exponent_guard(self, square64, delta_one):
        v = np.full(square64.ncells, 800.0)
        with pytest.raises(ExponentOverflowError):
            gibbs_density(v, delta_one, square64, LAM)


class TestInducedPotential:
    def test_zero_density(self, square64, delta_one, green64):
        v = induced_potential(np.zeros((1, square64.ncells)), delta_one,
                              square64, green64)
        assert np.all(v == 0.0)

    def test_minimality_under_potential_perturbations(self, square64, two_positive,
                                                      green64, rng):
        rho = admissible_density(rng, square64, two_positive, LAM)
        v_rho = induced_potential(rho, two_positive, square64, green64)
        best = lyapunov(rho, v_rho, two_positive, square64).value
        for _ in range(50):
            xi = smooth_potential(rng, square64, amplitude=0.3)
            assert lyapunov(rho, v_rho + xi, two_positive, square64).value >= \
                best - 1e-11 * max(1.0, abs(best))

    def test_energy_identity(self, square64, attract_repel, green64, rng):
        rho = admissible_density(rng, square64, attract_repel, LAM)
        v_rho = induced_potential(rho, attract_repel, square64, green64)
        dirichlet = -field_inner(laplacian_dirichlet(v_rho, square64), v_rho, square64)
        w, a = attract_repel.weights_array, attract_repel.alphas_array
        signed = (w * a) @ rho
        quad = field_inner(signed, v_rho, square64)
        assert abs(dirichlet - quad) <= 1e-11 * max(abs(dirichlet), abs(quad))


class TestCellwiseInequalities:
    def test_signed_aggregate_bounded_by_total(self, square64, attract_repel,
                                               two_positive, rng):
        for measure in (attract_repel, two_positive):
            rho = np.abs(rng.normal(size=(2, square64.ncells)))
            w, a = measure.weights_array, measure.alphas_array
            signed = np.abs((w * a) @ rho)
            total = w @ rho
            assert np.all(signed <= total + 1e-14)

    def test_entropy_integrand_of_aggregate(self, square64, attract_repel, rng):
        rho = np.abs(rng.normal(size=(2, square64.ncells)))
        w, a = attract_repel.weights_array, attract_repel.alphas_array
        psi_rho = np.abs((w * a) @ rho)
        total = w @ rho
        assert np.all(entropy_integrand(psi_rho) <=
                      entropy_integrand(total) + 1.0 + 1e-14)

    def test_jensen_for_entropy(self, square64, attract_repel, rng):
        # integral of f(average density) <= averaged entropy
        rho = np.abs(rng.normal(size=(2, square64.ncells)))
        w = attract_repel.weights_array
        lhs = integrate_field(entropy_integrand(w @ rho), square64)
        rhs = entropy(rho, attract_repel, square64)
        assert lhs <= rhs + 1e-12


class TestAdmissibleCheck:
    def test_individual_implies_average(self, square64, two_positive):
        rho = np.tile(np.full(square64.ncells, LAM), (2, 1))
        chk = admissible_check(rho, two_positive, square64, LAM)
        assert chk.membership == "individual"
        assert chk.nonneg
        assert chk.total_mass == pytest.approx(LAM, rel=1e-12)

    def test_average_only(self, square64, two_positive):
        rho = np.stack([np.full(square64.ncells, 1.5 * LAM),
                        np.full(square64.ncells, 0.5 * LAM)])
        chk = admissible_check(rho, two_positive, square64, LAM)
        assert chk.membership == "average"
        assert chk.per_species_mass[0] == pytest.approx(1.5 * LAM, rel=1e-12)

    def test_neither(self, square64, two_positive):
        rho = np.tile(np.full(square64.ncells, 0.9 * LAM), (2, 1))
        assert admissible_check(rho, two_positive, square64, LAM).membership == "neither"
        rho = np.tile(np.full(square64.ncells, LAM), (2, 1))
        rho[0, 0] = -1.0
        chk = admissible_check(rho, two_positive, square64, LAM)
        assert not chk.nonneg
        assert chk.membership == "neither"


def test_breakdowns_sum_to_values(square64, green64, two_positive, rng):
    v = smooth_potential(rng, square64)
    rho = admissible_density(rng, square64, two_positive, LAM)
    reports = [
        lyapunov(rho, v, two_positive, square64),
        free_energy(rho, two_positive, square64, green64),
        mean_field_energy(v, two_positive, square64, LAM),
        individual_mean_field_energy(v, two_positive, square64, LAM),
    ]
    assert all(report_is_consistent(rep) for rep in reports)


def test_species_masses_shape(square64, two_positive, rng):
    rho = admissible_density(rng, square64, two_positive, LAM)
    masses = species_masses(rho, two_positive, square64)
    assert masses.shape == (2,)
    assert average_mass(rho, two_positive, square64) == pytest.approx(LAM, rel=1e-12)
