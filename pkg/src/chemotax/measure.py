"""Atomic probability measures over the chemotactic sensitivity index.

Each species is labelled by a sensitivity ``alpha`` in [-1, 1] (positive:
attracted by the chemical, negative: repelled).  A ``SpeciesMeasure`` is a
finite atomic probability measure on that interval; every alpha-integral in
the model reduces to a weighted sum over its atoms.

Two critical-mass constants are attached to a measure:

* under the *average* mass constraint (total P-weighted mass fixed) the
  threshold is 8*pi whenever the support touches -1 or +1;
* under the *individual* mass constraint (each species' mass fixed) the
  threshold is the minimum of ``8*pi * P(K) / (sum_{j in K} w_j a_j)**2``
  over nonempty subsets K of same-sign atoms.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

EIGHT_PI = 8.0 * math.pi

# Enumeration of same-sign atom subsets is exhaustive; cap the blow-up.
MAX_ATOMS_PER_SIGN = 30


@dataclass(frozen=True)
class SpeciesMeasure:
    """Atomic probability measure on [-1, 1], atoms sorted by alpha."""

    alphas: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")

    @property
    def natoms(self) -> int:
        return len(self.alphas)

    @property
    def alphas_array(self) -> np.ndarray:
        return np.asarray(self.alphas)

    @property
    def weights_array(self) -> np.ndarray:
        return np.asarray(self.weights)

    def support(self) -> tuple[float, ...]:
        """Support of the measure; exact on atoms."""
        return self.alphas

    def touches_extremes(self) -> bool:
        """True iff an atom sits exactly at alpha = -1 or alpha = +1."""
        return any(a == 1.0 or a == -1.0 for a in self.alphas)


def make_measure(atoms: Iterable[tuple[float, float]]) -> SpeciesMeasure:
    """Validate and normalize a list of (alpha, weight) atoms.

    Weights are renormalized to sum to 1; atoms are sorted by alpha.
    Raises ValueError on an empty list, alpha outside [-1, 1], nonpositive
    weight, or duplicate alphas.
    """
    atoms = list(atoms)
    if not atoms:
        raise ValueError("measure needs at least one atom")
    alphas = [float(a) for a, _ in atoms]
    weights = [float(w) for _, w in atoms]
    for a in alphas:
        if not -1.0 <= a <= 1.0:
            raise ValueError(f"alpha {a} outside [-1, 1]")
    for w in weights:
        if not w > 0.0:
            raise ValueError(f"weight {w} must be positive")
    if len(set(alphas)) != len(alphas):
        raise ValueError("duplicate alpha values")
    order = np.argsort(alphas)
    sorted_alphas = tuple(alphas[k] for k in order)
    sorted_weights = [weights[k] for k in order]
    # normalize after sorting so the result is independent of the input order
    total = sum(sorted_weights)
    return SpeciesMeasure(
        alphas=sorted_alphas,
        weights=tuple(w / total for w in sorted_weights),
    )


def integrate_alpha(measure: SpeciesMeasure, g: Callable[[float], float]) -> float:
    """Weighted sum of g over the atoms: the alpha-integral of g dP."""
    return float(sum(w * g(a) for a, w in zip(measure.alphas, measure.weights)))


def critical_mass_average(measure: SpeciesMeasure) -> float | None:
    """Critical total mass under the average-mass constraint.

    Returns 8*pi when the support contains -1 or +1.  Outside that
    hypothesis the threshold is an open problem, and None is returned
    rather than a guess.
    """
    if measure.touches_extremes():
        return EIGHT_PI
    return None


def critical_mass_individual(measure: SpeciesMeasure) -> float:
    """Critical mass under the individual-mass constraint.

    Minimizes ``8*pi * P(K) / (sum_{j in K} w_j a_j)**2`` over all nonempty
    subsets K of nonnegative-alpha atoms and, separately, of negative-alpha
    atoms.  Subsets with a vanishing denominator (e.g. K = {alpha=0}) are
    skipped.  Exhaustive enumeration; atom count per sign is capped.
    """
    positive = [(a, w) for a, w in zip(measure.alphas, measure.weights) if a >= 0.0]
    negative = [(a, w) for a, w in zip(measure.alphas, measure.weights) if a < 0.0]
    if all(a == 0.0 for a, _ in positive) and not negative:
        raise ValueError("all atoms have alpha = 0; critical mass undefined")
    for group in (positive, negative):
        if len(group) > MAX_ATOMS_PER_SIGN:
            raise ValueError(
                f"more than {MAX_ATOMS_PER_SIGN} atoms of one sign; "
                "exhaustive enumeration refused"
            )
    best = math.inf
    for group in (positive, negative):
        for r in range(1, len(group) + 1):
            for subset in itertools.combinations(group, r):
                mass = sum(w for _, w in subset)
                coupling = sum(w * a for a, w in subset)
                if coupling == 0.0:
                    continue
                best = min(best, EIGHT_PI * mass / coupling**2)
    if not math.isfinite(best):
        raise ValueError("all atoms have alpha = 0; critical mass undefined")
    return best


def parse_measure_literal(spec: Sequence[dict]) -> SpeciesMeasure:
    """Build a measure from config records [{"alpha": a, "weight": w}, ...]."""
    try:
        atoms = [(rec["alpha"], rec["weight"]) for rec in spec]
    except (TypeError, KeyError) as exc:
        raise ValueError(
            "measure literal must be a list of {alpha, weight} records"
        ) from exc
    return make_measure(atoms)
