"""Ground-truth oracles for the rank computations.

Everything here recomputes orbit ranks the expensive way -- by literal
group enumeration or by uniform sampling from the orbit -- so the
closed-form streaming implementations have an independent arbiter.
The samplers work from the raw observation prefix rather than the
compressed streaming summary, because the design-isotropy orbit needs
the full design matrix that the O(d^2) summary deliberately forgets.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .groups import (
    DESIGN_ISOTROPY,
    FULL_ORTHOGONAL,
    FULL_PERMUTATION,
    LABEL_PERMUTATION,
    MODULAR_PERMUTATION,
    GroupSpec,
    PermutationState,
)
from .ranks import OrbitRank

__all__ = [
    "EnumerationLimitError",
    "TiesError",
    "ReconstructionError",
    "EXACT_CLASS_LIMIT",
    "acting_class_indices",
    "orthonormal_complement",
    "haar_sample",
    "haar_last_coordinates",
    "brute_force_rank",
    "reconstruct",
]

# Largest permutation class enumerated exactly (8! = 40320 arrangements).
EXACT_CLASS_LIMIT = 8
_GS_TOL = 1e-10


class EnumerationLimitError(ValueError):
    """Exact enumeration requested beyond the supported class size."""


class TiesError(ValueError):
    """Reconstruction is not unique in the presence of tied values."""


class ReconstructionError(ValueError):
    """A rank is inconsistent with the supplied summary."""


def _values(observations) -> np.ndarray:
    return np.array([obs.value for obs in observations], dtype=float)


def acting_class_indices(spec: GroupSpec, observations) -> list[int]:
    """0-based indices of the permutation class containing the newest point."""
    n = len(observations)
    if spec.family == FULL_PERMUTATION:
        return list(range(n))
    if spec.family == MODULAR_PERMUTATION:
        k = spec.period
        return [i for i in range(n) if (i + 1) % k == n % k]
    if spec.family == LABEL_PERMUTATION:
        newest = observations[-1].label
        return [i for i in range(n) if observations[i].label == newest]
    raise ValueError(f"{spec.family} is not a permutation family")


def orthonormal_complement(design: np.ndarray, tol: float = _GS_TOL) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of the design columns.

    Modified Gram-Schmidt with a second re-orthogonalization pass, seeded
    with coordinate vectors; columns of the result span col(design)^perp.
    """
    design = np.asarray(design, dtype=float)
    n = design.shape[0]

    def _orthogonalize(v, basis):
        for _ in range(2):
            for u in basis:
                v = v - (u @ v) * u
        return v

    span: list[np.ndarray] = []
    for col in design.T:
        scale = np.linalg.norm(col)
        v = _orthogonalize(col.copy(), span)
        norm = np.linalg.norm(v)
        if norm > tol * max(scale, 1.0):
            span.append(v / norm)
    rank = len(span)
    comp: list[np.ndarray] = []
    for i in range(n):
        if len(comp) == n - rank:
            break
        v = np.zeros(n)
        v[i] = 1.0
        v = _orthogonalize(v, span + comp)
        norm = np.linalg.norm(v)
        if norm > tol:
            comp.append(v / norm)
    return np.column_stack(comp) if comp else np.zeros((n, 0))


def _design_and_response(observations) -> tuple[np.ndarray, np.ndarray]:
    design = np.array([obs.covariates for obs in observations], dtype=float)
    response = _values(observations)
    return design, response


def haar_sample(spec: GroupSpec, observations, rng: np.random.Generator) -> np.ndarray:
    """One draw, uniform on the orbit of the observed prefix.

    Returns the score channel of the sampled orbit point as an array of
    length n (values for the scalar families, responses for isotropy);
    labels and covariates are fixed by the group action and unchanged.
    """
    if not observations:
        raise ValueError("cannot sample from an empty prefix")
    n = len(observations)
    values = _values(observations)
    if spec.family == FULL_PERMUTATION:
        return rng.permutation(values)
    if spec.family in (MODULAR_PERMUTATION, LABEL_PERMUTATION):
        out = values.copy()
        if spec.family == MODULAR_PERMUTATION:
            groups = [[i for i in range(n) if (i + 1) % spec.period == resid]
                      for resid in range(spec.period)]
        else:
            groups = [[i for i in range(n) if observations[i].label == lab]
                      for lab in range(spec.n_labels)]
        for idx in groups:
            if len(idx) > 1:
                out[idx] = rng.permutation(values[idx])
        return out
    if spec.family == FULL_ORTHOGONAL:
        radius = math.sqrt(float(values @ values))
        if radius == 0.0:
            return np.zeros(n)
        u = rng.standard_normal(n)
        return u * (radius / np.linalg.norm(u))
    if spec.family == DESIGN_ISOTROPY:
        design, response = _design_and_response(observations)
        coef, *_ = np.linalg.lstsq(design, response, rcond=None)
        center = design @ coef
        residual = response - center
        radius = np.linalg.norm(residual)
        comp = orthonormal_complement(design)
        if radius == 0.0 or comp.shape[1] == 0:
            return center
        u = rng.standard_normal(comp.shape[1])
        return center + comp @ (u * (radius / np.linalg.norm(u)))
    raise ValueError(f"unknown group family {spec.family!r}")


def haar_last_coordinates(spec: GroupSpec, observations,
                          rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` independent draws of the newest coordinate of a uniform
    orbit point.

    Distributionally identical to ``haar_sample(...)[-1]`` repeated, but
    vectorized: the permutation families reduce to uniform draws from
    the acting class multiset, and the rotation families to normalized
    Gaussian directions.
    """
    if not observations:
        raise ValueError("cannot sample from an empty prefix")
    n = len(observations)
    if spec.family in (FULL_PERMUTATION, MODULAR_PERMUTATION, LABEL_PERMUTATION):
        class_values = _values(observations)[acting_class_indices(spec, observations)]
        return rng.choice(class_values, size=size)
    if spec.family == FULL_ORTHOGONAL:
        values = _values(observations)
        radius = math.sqrt(float(values @ values))
        if radius == 0.0:
            return np.zeros(size)
        directions = rng.standard_normal((size, n))
        return radius * directions[:, -1] / np.linalg.norm(directions, axis=1)
    if spec.family == DESIGN_ISOTROPY:
        design, response = _design_and_response(observations)
        coef, *_ = np.linalg.lstsq(design, response, rcond=None)
        center = design @ coef
        radius = np.linalg.norm(response - center)
        comp = orthonormal_complement(design)
        if radius == 0.0 or comp.shape[1] == 0:
            return np.full(size, center[-1])
        directions = rng.standard_normal((size, comp.shape[1]))
        unit_last = (directions @ comp[-1]) / np.linalg.norm(directions, axis=1)
        return center[-1] + radius * unit_last
    raise ValueError(f"unknown group family {spec.family!r}")


def brute_force_rank(spec: GroupSpec, observations, theta: float,
                     mode: str = "exact", n_samples: int = 100_000,
                     rng: np.random.Generator | None = None) -> float:
    """Rank of the newest observation, straight from the defining measure.

    ``mode="exact"`` enumerates the acting permutation class (the factors
    of the product group moving other coordinates cancel) and is only
    available for permutation families with class size <= 8.
    ``mode="mc"`` estimates the upper and tie masses from ``n_samples``
    uniform orbit draws and works for every family.
    """
    if not observations:
        raise ValueError("cannot rank an empty prefix")
    newest = observations[-1].value
    if mode == "exact":
        if spec.family not in (FULL_PERMUTATION, MODULAR_PERMUTATION,
                               LABEL_PERMUTATION):
            raise EnumerationLimitError(
                f"exact enumeration is not available for {spec.family}")
        class_idx = acting_class_indices(spec, observations)
        if len(class_idx) > EXACT_CLASS_LIMIT:
            raise EnumerationLimitError(
                f"class size {len(class_idx)} exceeds the exact limit "
                f"{EXACT_CLASS_LIMIT}")
        class_values = [observations[i].value for i in class_idx]
        greater = equal = total = 0
        for arrangement in itertools.permutations(class_values):
            last = arrangement[-1]
            greater += last > newest
            equal += last == newest
            total += 1
        # Same evaluation shape as the streaming rank (mass ratios first,
        # then the randomized tie share) so agreement is bit-exact.
        return greater / total + theta * (equal / total)
    if mode == "mc":
        if rng is None:
            raise ValueError("mode='mc' requires an rng")
        values = _values(observations)
        if spec.family == FULL_ORTHOGONAL and float(values @ values) == 0.0:
            return theta
        draws = haar_last_coordinates(spec, observations, rng, n_samples)
        greater = int((draws > newest).sum())
        equal = int((draws == newest).sum())
        return greater / n_samples + theta * (equal / n_samples)
    raise ValueError(f"unknown mode {mode!r}")


def reconstruct(ranks, final_state: PermutationState) -> tuple[list[float], list[float]]:
    """Recover the observation sequence (and draws) from ranks + order statistics.

    Only the full-permutation family without ties is supported: each rank
    then identifies which order statistic arrived last, and its
    fractional part identifies the randomization draw.  Returns
    ``(values, thetas)`` in arrival order.
    """
    remaining = list(final_state.values)
    n = len(remaining)
    rs = [rank.r if isinstance(rank, OrbitRank) else float(rank) for rank in ranks]
    if len(rs) != n:
        raise ReconstructionError(
            f"{len(rs)} ranks for a summary of {n} values")
    if any(a == b for a, b in zip(remaining, remaining[1:])):
        raise TiesError("tied values cannot be reconstructed uniquely")
    values: list[float] = []
    thetas: list[float] = []
    for i in range(n, 0, -1):
        r = rs[i - 1]
        if not (0.0 <= r <= 1.0):
            raise ReconstructionError(f"rank {r} outside [0, 1] at step {i}")
        scaled = r * i
        greater = min(int(math.floor(scaled)), i - 1)
        theta = scaled - greater
        if not (0.0 <= theta <= 1.0):
            raise ReconstructionError(f"rank {r} inconsistent at step {i}")
        pick = i - 1 - greater
        values.append(remaining.pop(pick))
        thetas.append(theta)
    values.reverse()
    thetas.reverse()
    return values, thetas
