"""Group families and their streaming orbit summaries.

A stream of observations is tested for invariance under one of five
group families acting on the data prefix:

* ``perm``        -- all permutations of the prefix (exchangeability),
* ``perm-mod:k``  -- permutations within residue classes of the time
                     index (cyclic patterns with period k),
* ``perm-label:K``-- permutations among points sharing a label
                     (within-label exchangeability of scores),
* ``sphere``      -- rotations and reflections of the prefix
                     (spherical symmetry about the origin),
* ``isotropy:d``  -- rotations fixing the columns of a streaming design
                     matrix (linear-model error symmetry; d covariates).

Each family keeps an online summary of everything the group action
cannot change: sorted value multisets for the permutation families, the
squared norm for the sphere, and Gram-matrix accumulators for the
design-isotropy family.  The summary is exactly the information needed
to place the newest point within its orbit.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right, insort
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FULL_PERMUTATION",
    "MODULAR_PERMUTATION",
    "LABEL_PERMUTATION",
    "FULL_ORTHOGONAL",
    "DESIGN_ISOTROPY",
    "GroupSpec",
    "Observation",
    "PayloadMismatchError",
    "DegenerateDesignError",
    "OrbitState",
    "PermutationState",
    "ModularPermutationState",
    "LabelPermutationState",
    "SphericalState",
    "IsotropyState",
    "init_state",
    "update_state",
    "state_footprint",
]

FULL_PERMUTATION = "perm"
MODULAR_PERMUTATION = "perm-mod"
LABEL_PERMUTATION = "perm-label"
FULL_ORTHOGONAL = "sphere"
DESIGN_ISOTROPY = "isotropy"

_FAMILIES = (
    FULL_PERMUTATION,
    MODULAR_PERMUTATION,
    LABEL_PERMUTATION,
    FULL_ORTHOGONAL,
    DESIGN_ISOTROPY,
)

# Relative pivot threshold below which a stacked design counts as
# rank-deficient.
_RANK_TOL = 1e-10


class PayloadMismatchError(ValueError):
    """Observation payload does not match the group family's contract."""


class DegenerateDesignError(ValueError):
    """Stacked design matrix lost full rank past n = d rows."""


@dataclass(frozen=True)
class GroupSpec:
    """Declarative description of a sequential group family.

    Parameters
    ----------
    family : str
        One of ``perm``, ``perm-mod``, ``perm-label``, ``sphere``,
        ``isotropy``.
    period : int, optional
        Residue period k; required for ``perm-mod``.
    n_labels : int, optional
        Label alphabet size; required for ``perm-label``.
    n_covariates : int, optional
        Covariate dimension d; required for ``isotropy``.
    """

    family: str
    period: int | None = None
    n_labels: int | None = None
    n_covariates: int | None = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown group family {self.family!r}")
        if self.family == MODULAR_PERMUTATION:
            if self.period is None or self.period < 1:
                raise ValueError(f"perm-mod requires period >= 1, got {self.period}")
        elif self.period is not None:
            raise ValueError("period is only valid for perm-mod")
        if self.family == LABEL_PERMUTATION:
            if self.n_labels is None or self.n_labels < 1:
                raise ValueError(f"perm-label requires n_labels >= 1, got {self.n_labels}")
        elif self.n_labels is not None:
            raise ValueError("n_labels is only valid for perm-label")
        if self.family == DESIGN_ISOTROPY:
            if self.n_covariates is None or self.n_covariates < 1:
                raise ValueError(f"isotropy requires n_covariates >= 1, got {self.n_covariates}")
        elif self.n_covariates is not None:
            raise ValueError("n_covariates is only valid for isotropy")

    @property
    def score(self) -> str:
        """Nonconformity score channel: what gets compared within an orbit."""
        return "covariate-projection" if self.family == LABEL_PERMUTATION else "identity"

    @classmethod
    def parse(cls, text: str) -> "GroupSpec":
        """Parse a CLI-style group string such as ``perm-mod:3`` or ``isotropy:2``."""
        name, _, arg = text.partition(":")
        try:
            if name == FULL_PERMUTATION or name == FULL_ORTHOGONAL:
                if arg:
                    raise ValueError(f"{name} takes no parameter")
                return cls(name)
            if name == MODULAR_PERMUTATION:
                return cls(name, period=int(arg))
            if name == LABEL_PERMUTATION:
                return cls(name, n_labels=int(arg))
            if name == DESIGN_ISOTROPY:
                return cls(name, n_covariates=int(arg))
        except ValueError as exc:
            raise ValueError(f"invalid group spec {text!r}: {exc}") from None
        raise ValueError(f"unknown group family {text!r}")

    def __str__(self) -> str:
        if self.family == MODULAR_PERMUTATION:
            return f"{self.family}:{self.period}"
        if self.family == LABEL_PERMUTATION:
            return f"{self.family}:{self.n_labels}"
        if self.family == DESIGN_ISOTROPY:
            return f"{self.family}:{self.n_covariates}"
        return self.family


@dataclass(frozen=True, eq=False)
class Observation:
    """One stream element: a scalar score plus optional payload.

    ``value`` is the scalar being ranked (the response for regression
    families, the covariate score for label permutation).  ``label`` is
    required for ``perm-label``; ``covariates`` for ``isotropy``.
    """

    value: float
    label: int | None = None
    covariates: np.ndarray | None = None

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"observation value must be finite, got {self.value}")
        if self.label is not None and not isinstance(self.label, (int, np.integer)):
            raise ValueError(f"label must be an integer, got {self.label!r}")
        if self.covariates is not None:
            cov = np.asarray(self.covariates, dtype=float)
            if cov.ndim != 1:
                raise ValueError("covariates must be a flat vector")
            if not np.all(np.isfinite(cov)):
                raise ValueError("covariates must be finite")
            object.__setattr__(self, "covariates", cov)


def _check_payload(spec_family: str, obs: Observation, n_labels: int | None = None,
                   n_covariates: int | None = None) -> None:
    if spec_family == LABEL_PERMUTATION:
        if obs.label is None:
            raise PayloadMismatchError("perm-label observations require a label")
        if not (0 <= obs.label < n_labels):
            raise PayloadMismatchError(
                f"label {obs.label} outside [0, {n_labels})")
    elif obs.label is not None:
        raise PayloadMismatchError(f"{spec_family} observations take no label")
    if spec_family == DESIGN_ISOTROPY:
        if obs.covariates is None:
            raise PayloadMismatchError("isotropy observations require covariates")
        if obs.covariates.shape != (n_covariates,):
            raise PayloadMismatchError(
                f"covariates must have length {n_covariates}, got {obs.covariates.shape}")
    elif obs.covariates is not None:
        raise PayloadMismatchError(f"{spec_family} observations take no covariates")


class OrbitState:
    """Base class for streaming orbit summaries."""

    spec: GroupSpec
    n: int

    def update(self, obs: Observation) -> "OrbitState":
        raise NotImplementedError

    def clone(self) -> "OrbitState":
        raise NotImplementedError


@dataclass
class PermutationState(OrbitState):
    spec: GroupSpec
    values: list[float] = field(default_factory=list)
    n: int = 0

    def update(self, obs: Observation) -> "PermutationState":
        _check_payload(self.spec.family, obs)
        insort(self.values, obs.value)
        self.n += 1
        return self

    def clone(self) -> "PermutationState":
        return PermutationState(self.spec, list(self.values), self.n)

    def reference_class(self, obs: Observation) -> list[float]:
        return self.values


@dataclass
class ModularPermutationState(OrbitState):
    spec: GroupSpec
    classes: list[list[float]] = None  # type: ignore[assignment]
    n: int = 0

    def __post_init__(self):
        if self.classes is None:
            self.classes = [[] for _ in range(self.spec.period)]

    def _class_index(self, position: int) -> int:
        # Observations are 1-indexed; residue 0 collects indices divisible
        # by the period.
        return position % self.spec.period

    def update(self, obs: Observation) -> "ModularPermutationState":
        _check_payload(self.spec.family, obs)
        self.n += 1
        insort(self.classes[self._class_index(self.n)], obs.value)
        return self

    def clone(self) -> "ModularPermutationState":
        return ModularPermutationState(self.spec, [list(c) for c in self.classes], self.n)

    def reference_class(self, obs: Observation) -> list[float]:
        return self.classes[self._class_index(self.n)]


@dataclass
class LabelPermutationState(OrbitState):
    spec: GroupSpec
    classes: list[list[float]] = None  # type: ignore[assignment]
    n: int = 0

    def __post_init__(self):
        if self.classes is None:
            self.classes = [[] for _ in range(self.spec.n_labels)]

    def update(self, obs: Observation) -> "LabelPermutationState":
        _check_payload(self.spec.family, obs, n_labels=self.spec.n_labels)
        insort(self.classes[obs.label], obs.value)
        self.n += 1
        return self

    def clone(self) -> "LabelPermutationState":
        return LabelPermutationState(self.spec, [list(c) for c in self.classes], self.n)

    def reference_class(self, obs: Observation) -> list[float]:
        return self.classes[obs.label]


@dataclass
class SphericalState(OrbitState):
    spec: GroupSpec
    sum_sq: float = 0.0
    n: int = 0

    def update(self, obs: Observation) -> "SphericalState":
        _check_payload(self.spec.family, obs)
        self.sum_sq += obs.value * obs.value
        self.n += 1
        return self

    def clone(self) -> "SphericalState":
        return SphericalState(self.spec, self.sum_sq, self.n)


@dataclass
class IsotropyState(OrbitState):
    """Gram-accumulator summary for the design-isotropy family.

    Stores Z'Z, Z'y and |y|^2 for the stacked design Z (n rows, d
    columns) and response y, plus the newest row, so the state stays
    O(d^2) regardless of stream length.
    """

    spec: GroupSpec
    gram: np.ndarray = None  # type: ignore[assignment]
    zty: np.ndarray = None  # type: ignore[assignment]
    yty: float = 0.0
    n: int = 0
    last_z: np.ndarray | None = None
    last_y: float = 0.0

    def __post_init__(self):
        d = self.spec.n_covariates
        if self.gram is None:
            self.gram = np.zeros((d, d))
        if self.zty is None:
            self.zty = np.zeros(d)

    def update(self, obs: Observation) -> "IsotropyState":
        d = self.spec.n_covariates
        _check_payload(self.spec.family, obs, n_covariates=d)
        z = obs.covariates
        self.gram += np.outer(z, z)
        self.zty += z * obs.value
        self.yty += obs.value * obs.value
        self.n += 1
        self.last_z = z
        self.last_y = obs.value
        if self.n > d and not self._full_rank():
            raise DegenerateDesignError(
                f"design lost full rank at n={self.n} (d={d})")
        return self

    def _full_rank(self) -> bool:
        # Pivot test on the correlation-normalized Gram: detects
        # collinearity without tripping over covariate-scale mismatches.
        diag = self.gram.diagonal()
        if np.any(diag <= 0.0):
            return False
        scale = np.sqrt(diag)
        normalized = self.gram / np.outer(scale, scale)
        try:
            pivots = np.linalg.cholesky(normalized).diagonal() ** 2
        except np.linalg.LinAlgError:
            return False
        return pivots.min() > _RANK_TOL * pivots.max()

    def clone(self) -> "IsotropyState":
        return IsotropyState(
            self.spec, self.gram.copy(), self.zty.copy(), self.yty, self.n,
            None if self.last_z is None else self.last_z.copy(), self.last_y,
        )


def init_state(spec: GroupSpec) -> OrbitState:
    """Empty orbit summary for a fresh stream under ``spec``."""
    if spec.family == FULL_PERMUTATION:
        return PermutationState(spec)
    if spec.family == MODULAR_PERMUTATION:
        return ModularPermutationState(spec)
    if spec.family == LABEL_PERMUTATION:
        return LabelPermutationState(spec)
    if spec.family == FULL_ORTHOGONAL:
        return SphericalState(spec)
    if spec.family == DESIGN_ISOTROPY:
        return IsotropyState(spec)
    raise ValueError(f"unknown group family {spec.family!r}")


def update_state(state: OrbitState, obs: Observation) -> OrbitState:
    """Fold one observation into the summary (in place) and return it.

    A state belongs to exactly one stream; use ``clone()`` before folding
    if the previous summary must be retained.
    """
    return state.update(obs)


def state_footprint(state: OrbitState) -> int:
    """Number of stored scalars in the summary (memory accounting)."""
    if isinstance(state, PermutationState):
        return len(state.values) + 1
    if isinstance(state, (ModularPermutationState, LabelPermutationState)):
        return sum(len(c) for c in state.classes) + len(state.classes) + 1
    if isinstance(state, SphericalState):
        return 2
    if isinstance(state, IsotropyState):
        d = state.spec.n_covariates
        return d * d + d + 2 + (d + 1)
    raise TypeError(f"not an orbit state: {state!r}")


def class_counts(values: list[float], x: float) -> tuple[int, int, int]:
    """(#greater, #equal, class size) of x within a sorted reference class."""
    lo = bisect_left(values, x)
    hi = bisect_right(values, x)
    return len(values) - hi, hi - lo, len(values)
