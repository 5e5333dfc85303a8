"""Smoothed orbit ranks.

After each observation is folded into the orbit summary, its rank
within the orbit is the invariant-measure mass of group elements that
would have produced a strictly larger newest score, plus a randomized
share theta of the mass that ties.  Under the null hypothesis of
invariance the resulting sequence is i.i.d. uniform on [0, 1]; any
systematic departure from uniformity is evidence against invariance.

Large newest values map to small ranks: every formula below is a
complementary conditional CDF evaluated at the newest score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .groups import (
    DESIGN_ISOTROPY,
    FULL_ORTHOGONAL,
    FULL_PERMUTATION,
    LABEL_PERMUTATION,
    MODULAR_PERMUTATION,
    IsotropyState,
    Observation,
    OrbitState,
    PermutationState,
    LabelPermutationState,
    ModularPermutationState,
    SphericalState,
    class_counts,
)
from .special import Tolerance, cap_measure

__all__ = [
    "OrbitRank",
    "rank_permutation",
    "rank_spherical",
    "rank_isotropy",
    "orbit_rank",
]

# Relative residual mass below which the isotropy orbit counts as a point.
_RSS_TOL = 1e-12
# Leverage this close to 1 pins the newest response; the rank degenerates.
_LEVERAGE_TOL = 1e-10


@dataclass(frozen=True)
class OrbitRank:
    """One smoothed orbit rank.

    Attributes
    ----------
    r : float in [0, 1]
        The rank, ``upper_mass + theta * tie_mass``.
    theta : float in [0, 1]
        The randomization draw consumed by this rank.
    n : int
        Time index (1-based).
    upper_mass : float
        Invariant mass of group elements with strictly larger newest score.
    tie_mass : float
        Invariant mass of exact ties (always positive for finite groups;
        zero for the continuous families except in degenerate cases).
    degenerate : bool
        True when the rank fell back to pure randomization because the
        orbit carried no usable information (single-point orbit, zero
        radius, leverage ~ 1, or a too-short prefix for the family).
    """

    r: float
    theta: float
    n: int
    upper_mass: float
    tie_mass: float
    degenerate: bool = False


def _pure_theta(theta: float, n: int) -> OrbitRank:
    return OrbitRank(r=theta, theta=theta, n=n, upper_mass=0.0, tie_mass=1.0,
                     degenerate=True)


def rank_permutation(state: OrbitState, obs: Observation, theta: float) -> OrbitRank:
    """Sequential rank of the newest value within its permutation class.

    ``state`` must already include ``obs``.  The reference class is the
    full multiset for ``perm``, the residue class of the newest index
    for ``perm-mod``, and the same-label score class for ``perm-label``.
    """
    if not isinstance(state, (PermutationState, ModularPermutationState,
                              LabelPermutationState)):
        raise TypeError(f"not a permutation-family state: {state!r}")
    ref = state.reference_class(obs)
    greater, equal, size = class_counts(ref, obs.value)
    if equal < 1:
        raise ValueError("state does not include the observation being ranked")
    upper = greater / size
    tie = equal / size
    return OrbitRank(r=upper + theta * tie, theta=theta, n=state.n,
                     upper_mass=upper, tie_mass=tie)


def _cap_rank(c: float, m: int, theta: float, n: int,
              tol: Tolerance | None) -> OrbitRank:
    # Rounding can push the cosine marginally outside [-1, 1]; clamp it
    # back but do not round it away from the endpoints, since even a
    # one-ulp gap carries real (tiny) cap mass.
    c = min(1.0, max(-1.0, c))
    r = cap_measure(c, m, tol)
    return OrbitRank(r=r, theta=theta, n=n, upper_mass=r, tie_mass=0.0)


def rank_spherical(state: OrbitState, obs: Observation, theta: float,
                   tol: Tolerance | None = None) -> OrbitRank:
    """Orbit rank under full rotational symmetry.

    The orbit of the prefix is the sphere of radius ``|X^n|``; the rank
    is the relative area of the cap above the newest coordinate.  At
    n = 1 the rank is the raw randomization draw (the two-point orbit of
    a scalar carries only its sign, and the uniform convention keeps the
    first rank exactly uniform); a zero-radius prefix likewise
    degenerates to the draw.
    """
    if not isinstance(state, SphericalState):
        raise TypeError(f"not a spherical state: {state!r}")
    n = state.n
    if n < 1:
        raise ValueError("empty state cannot be ranked")
    if n == 1:
        return _pure_theta(theta, n)
    if state.sum_sq <= 0.0:
        return _pure_theta(theta, n)
    c = obs.value / math.sqrt(state.sum_sq)
    return _cap_rank(c, n, theta, n, tol)


def rank_isotropy(state: OrbitState, obs: Observation, theta: float,
                  tol: Tolerance | None = None) -> OrbitRank:
    """Orbit rank under rotations fixing the design columns.

    The orbit of the response vector is the sphere of radius sqrt(rss)
    around its projection onto the design's column space; the rank is
    the cap area above the newest residual, corrected for the leverage
    of the newest design row.  Until n reaches d + 2 the orbit carries
    no continuous information and the rank degenerates to the draw.
    """
    if not isinstance(state, IsotropyState):
        raise TypeError(f"not an isotropy state: {state!r}")
    d = state.spec.n_covariates
    n = state.n
    if n < 1:
        raise ValueError("empty state cannot be ranked")
    if state.last_z is None or not np.array_equal(state.last_z, obs.covariates) \
            or state.last_y != obs.value:
        raise ValueError("state does not include the observation being ranked")
    if n < d + 2:
        return _pure_theta(theta, n)
    if d == 1:
        g = float(state.gram[0, 0])
        z = float(state.last_z[0])
        beta = float(state.zty[0]) / g
        h = z * z / g
        e = obs.value - z * beta
        rss = state.yty - float(state.zty[0]) * beta
    else:
        z = state.last_z
        beta = np.linalg.solve(state.gram, state.zty)
        h = float(z @ np.linalg.solve(state.gram, z))
        e = obs.value - float(z @ beta)
        rss = state.yty - float(state.zty @ beta)
    rss = max(rss, 0.0)
    if rss <= _RSS_TOL * max(state.yty, 1e-300):
        return _pure_theta(theta, n)
    if h >= 1.0 - _LEVERAGE_TOL:
        return _pure_theta(theta, n)
    c = e / (math.sqrt(rss) * math.sqrt(1.0 - h))
    return _cap_rank(c, n - d, theta, n, tol)


def orbit_rank(state: OrbitState, obs: Observation, theta: float,
               tol: Tolerance | None = None) -> OrbitRank:
    """Dispatch to the rank computation for the state's group family."""
    family = state.spec.family
    if family in (FULL_PERMUTATION, MODULAR_PERMUTATION, LABEL_PERMUTATION):
        return rank_permutation(state, obs, theta)
    if family == FULL_ORTHOGONAL:
        return rank_spherical(state, obs, theta, tol)
    if family == DESIGN_ISOTROPY:
        return rank_isotropy(state, obs, theta, tol)
    raise ValueError(f"unknown group family {family!r}")
