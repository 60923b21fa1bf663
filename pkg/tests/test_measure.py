import itertools
import math

import pytest

from chemotax.measure import (
    EIGHT_PI,
    critical_mass_average,
    critical_mass_individual,
    integrate_alpha,
    make_measure,
    parse_measure_literal,
)


def test_single_atom_classical_case():
    m = make_measure([(1.0, 1.0)])
    assert m.alphas == (1.0,)
    assert m.weights == (1.0,)
    assert m.touches_extremes()


def test_two_species_symmetric():
    m = make_measure([(1.0, 0.5), (-1.0, 0.5)])
    assert m.alphas == (-1.0, 1.0)  # sorted by alpha
    assert m.weights == (0.5, 0.5)


def test_weights_renormalized():
    m = make_measure([(1.0, 2.0), (0.5, 2.0)])
    assert m.weights == (0.5, 0.5)
    assert abs(sum(m.weights) - 1.0) <= 1e-12


@pytest.mark.parametrize("atoms", [
    [],
    [(1.5, 1.0)],
    [(-1.2, 0.5), (0.0, 0.5)],
    [(0.5, 0.0)],
    [(0.5, -1.0)],
    [(0.5, 0.5), (0.5, 0.5)],
])
def test_make_measure_rejects_bad_atoms(atoms):
    with pytest.raises(ValueError):
        make_measure(atoms)


def test_integrate_alpha_examples():
    assert integrate_alpha(make_measure([(1.0, 1.0)]), lambda a: a) == 1.0
    sym = make_measure([(1.0, 0.5), (-1.0, 0.5)])
    assert integrate_alpha(sym, lambda a: a) == 0.0
    two = make_measure([(1.0, 0.5), (0.5, 0.5)])
    assert integrate_alpha(two, lambda a: a) == pytest.approx(0.75, abs=1e-15)


def test_integrate_alpha_linear_and_single_atom():
    m = make_measure([(0.3, 1.0)])
    g = lambda a: a**3 - 2.0
    assert integrate_alpha(m, g) == pytest.approx(g(0.3), abs=1e-15)
    mix = make_measure([(-0.5, 0.25), (0.1, 0.5), (0.9, 0.25)])
    f = lambda a: math.sin(a)
    combo = lambda a: 2.0 * g(a) + 3.0 * f(a)
    lhs = integrate_alpha(mix, combo)
    rhs = 2.0 * integrate_alpha(mix, g) + 3.0 * integrate_alpha(mix, f)
    assert lhs == pytest.approx(rhs, rel=1e-14)


def test_critical_mass_average_covered_cases():
    assert critical_mass_average(make_measure([(1.0, 1.0)])) == pytest.approx(EIGHT_PI)
    sym = make_measure([(1.0, 0.5), (-1.0, 0.5)])
    assert critical_mass_average(sym) == pytest.approx(EIGHT_PI)
    assert critical_mass_average(make_measure([(-1.0, 1.0)])) == pytest.approx(EIGHT_PI)


def test_critical_mass_average_not_covered():
    assert critical_mass_average(make_measure([(0.5, 1.0)])) is None


# hand enumeration (the independent oracle): for (d_1 + d_{1/2})/2 the three
# nonempty subsets give 8pi*0.5/1**2 * 4 = 16pi, 8pi*0.5/0.25**2 = 64pi,
# and 8pi*1/0.75**2 = 128pi/9, whose minimum is 128pi/9
@pytest.mark.parametrize("atoms,expected", [
    ([(1.0, 1.0)], EIGHT_PI),
    ([(1.0, 0.5), (0.5, 0.5)], 128.0 * math.pi / 9.0),
    ([(1.0, 0.5), (-1.0, 0.5)], 16.0 * math.pi),
    ([(0.5, 1.0)], 32.0 * math.pi),
])
def test_critical_mass_individual_oracle_values(atoms, expected):
    value = critical_mass_individual(make_measure(atoms))
    assert abs(value - expected) <= 1e-12 * expected


def test_critical_mass_individual_single_atom_formula():
    for alpha in (1.0, -1.0, 0.5, -0.25, 0.125):
        m = make_measure([(alpha, 1.0)])
        assert critical_mass_individual(m) == pytest.approx(
            EIGHT_PI / alpha**2, rel=1e-14)


def test_critical_mass_individual_permutation_invariant():
    atoms = [(1.0, 0.3), (0.4, 0.2), (-0.7, 0.1), (0.9, 0.25), (-0.2, 0.15)]
    reference = critical_mass_individual(make_measure(atoms))
    for perm in itertools.permutations(atoms):
        assert critical_mass_individual(make_measure(list(perm))) == reference


def test_critical_mass_individual_witness_bound():
    for w in (0.2, 0.5, 0.8):
        m = make_measure([(1.0, w), (0.1, 1.0 - w)])
        assert critical_mass_individual(m) <= EIGHT_PI / w + 1e-12


def test_alpha_zero_atoms_enumerated_but_guarded():
    # a zero-sensitivity atom may join a positive subset but never stand alone
    m = make_measure([(0.0, 0.5), (1.0, 0.5)])
    expected = min(EIGHT_PI * 0.5 / 0.5**2, EIGHT_PI * 1.0 / 0.5**2)
    assert critical_mass_individual(m) == pytest.approx(expected, rel=1e-14)
    with pytest.raises(ValueError):
        critical_mass_individual(make_measure([(0.0, 1.0)]))


def test_enumeration_size_guard():
    atoms = [((k + 1) / 40.0, 1.0) for k in range(31)]
    with pytest.raises(ValueError):
        critical_mass_individual(make_measure(atoms))


def test_parse_measure_literal():
    m = parse_measure_literal([{"alpha": 1.0, "weight": 2.0},
                               {"alpha": -0.5, "weight": 2.0}])
    assert m.alphas == (-0.5, 1.0)
    assert m.weights == (0.5, 0.5)
    with pytest.raises(ValueError):
        parse_measure_literal([{"a": 1.0}])
