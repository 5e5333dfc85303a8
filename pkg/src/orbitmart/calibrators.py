"""Calibrators: predictable densities on the unit cube.

A calibrator turns a stream of orbit ranks into martingale factors.
Because each state's density integrates to one and is chosen before the
rank it is applied to, the running product of factors has unit
expectation under the null no matter how the calibrator adapts.

Four families are provided: a fixed power density, a mixture of power
densities (the default: no tuning, sensitive to stochastically small
ranks), an adaptive smoothed histogram, and its multivariate analogue
for joint ranks.  A product wrapper composes univariate calibrators
into a (dependence-blind) joint one.
"""

from __future__ import annotations

import warnings

import numpy as np

__all__ = [
    "Calibrator",
    "PowerFixed",
    "PowerMixture",
    "Histogram1D",
    "HistogramKD",
    "ProductCalibrator",
    "parse_calibrator",
    "DEFAULT_UNIVARIATE",
    "DEFAULT_JOINT",
]

# Floor applied to ranks before power evaluation.  It only guards
# against log(0) on an exact-zero rank: the mean of the evaluated
# density over [0, 1] stays within ~1e-15 of one for every exponent in
# (0, 1], and no power of the floor can overflow a double.
_RANK_FLOOR = 1e-300

DEFAULT_UNIVARIATE = "power-mixture"
DEFAULT_JOINT = "histkd:4:1"


def _as_point(r, dim: int) -> np.ndarray:
    point = np.atleast_1d(np.asarray(r, dtype=float))
    if point.shape != (dim,):
        raise ValueError(f"expected a point in [0,1]^{dim}, got shape {point.shape}")
    if np.any(point < 0.0) or np.any(point > 1.0):
        raise ValueError(f"rank point {point} outside the unit cube")
    return point


class Calibrator:
    """Base class; subclasses hold the (possibly adaptive) density state."""

    dim: int = 1

    def evaluate(self, r) -> float:
        """Density value at r; must be called before ``observe(r)``."""
        raise NotImplementedError

    def observe(self, r) -> "Calibrator":
        """Fold r into the state (in place) and return self."""
        raise NotImplementedError

    def clone(self) -> "Calibrator":
        raise NotImplementedError


class PowerFixed(Calibrator):
    """Density kappa * r^(kappa-1) on [0, 1]; kappa = 1 is the uniform density."""

    def __init__(self, kappa: float):
        if not (0.0 < kappa <= 1.0):
            raise ValueError(f"kappa must be in (0, 1], got {kappa}")
        self.kappa = float(kappa)

    def evaluate(self, r) -> float:
        (point,) = _as_point(r, 1)
        point = max(point, _RANK_FLOOR)
        return self.kappa * point ** (self.kappa - 1.0)

    def observe(self, r) -> "PowerFixed":
        _as_point(r, 1)
        return self

    def clone(self) -> "PowerFixed":
        return PowerFixed(self.kappa)

    def __repr__(self):
        return f"PowerFixed(kappa={self.kappa})"


class PowerMixture(Calibrator):
    """Weighted mixture of power densities.

    The default grid kappa = 0.05, 0.10, ..., 0.95 with equal weights
    needs no tuning and grows against any stochastically small rank
    stream.
    """

    def __init__(self, kappas=None, weights=None):
        if kappas is None:
            kappas = np.arange(1, 20) * 0.05
        self.kappas = np.asarray(kappas, dtype=float)
        if self.kappas.ndim != 1 or len(self.kappas) == 0:
            raise ValueError("kappas must be a nonempty vector")
        if np.any(self.kappas <= 0.0) or np.any(self.kappas > 1.0):
            raise ValueError(f"exponents must lie in (0, 1], got {self.kappas}")
        if weights is None:
            weights = np.full(len(self.kappas), 1.0 / len(self.kappas))
        self.weights = np.asarray(weights, dtype=float)
        if self.weights.shape != self.kappas.shape or np.any(self.weights < 0.0):
            raise ValueError("weights must be nonnegative and match kappas")
        total = self.weights.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {total}")

    def evaluate(self, r) -> float:
        (point,) = _as_point(r, 1)
        point = max(point, _RANK_FLOOR)
        return float(self.weights @ (self.kappas * point ** (self.kappas - 1.0)))

    def observe(self, r) -> "PowerMixture":
        _as_point(r, 1)
        return self

    def clone(self) -> "PowerMixture":
        return PowerMixture(self.kappas.copy(), self.weights.copy())

    def __repr__(self):
        return f"PowerMixture({len(self.kappas)} exponents)"


def _bin_index(point: float, n_bins: int) -> int:
    # Half-open bins [i/B, (i+1)/B); the last bin is closed at 1.
    return min(int(point * n_bins), n_bins - 1)


class Histogram1D(Calibrator):
    """Adaptive histogram density on [0, 1] with a flat pseudocount prior."""

    def __init__(self, n_bins: int, pseudocount: float = 1.0, counts=None):
        if n_bins < 1:
            raise ValueError(f"n_bins must be >= 1, got {n_bins}")
        if pseudocount <= 0.0:
            raise ValueError(f"pseudocount must be positive, got {pseudocount}")
        self.n_bins = int(n_bins)
        self.pseudocount = float(pseudocount)
        self.counts = np.zeros(self.n_bins, dtype=np.int64) if counts is None \
            else np.asarray(counts, dtype=np.int64).copy()
        self.n_seen = int(self.counts.sum())

    def evaluate(self, r) -> float:
        (point,) = _as_point(r, 1)
        count = self.counts[_bin_index(point, self.n_bins)]
        denom = self.n_seen + self.pseudocount * self.n_bins
        return self.n_bins * (count + self.pseudocount) / denom

    def observe(self, r) -> "Histogram1D":
        (point,) = _as_point(r, 1)
        self.counts[_bin_index(point, self.n_bins)] += 1
        self.n_seen += 1
        return self

    def clone(self) -> "Histogram1D":
        return Histogram1D(self.n_bins, self.pseudocount, self.counts)

    def __repr__(self):
        return f"Histogram1D(n_bins={self.n_bins}, pseudocount={self.pseudocount}, n={self.n_seen})"


class HistogramKD(Calibrator):
    """Adaptive histogram density on [0, 1]^K over a B x ... x B grid."""

    def __init__(self, n_bins: int, dim: int, pseudocount: float = 1.0, counts=None):
        if n_bins < 1:
            raise ValueError(f"n_bins must be >= 1, got {n_bins}")
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        if pseudocount <= 0.0:
            raise ValueError(f"pseudocount must be positive, got {pseudocount}")
        self.n_bins = int(n_bins)
        self.dim = int(dim)
        self.pseudocount = float(pseudocount)
        n_cells = self.n_bins ** self.dim
        if n_cells > 10 ** 6:
            warnings.warn(
                f"joint histogram has {n_cells} cells; memory may suffer",
                RuntimeWarning, stacklevel=2)
        self.counts = np.zeros((self.n_bins,) * self.dim, dtype=np.int64) \
            if counts is None else np.asarray(counts, dtype=np.int64).copy()
        self.n_seen = int(self.counts.sum())

    def _cell(self, point: np.ndarray) -> tuple[int, ...]:
        return tuple(_bin_index(p, self.n_bins) for p in point)

    def evaluate(self, r) -> float:
        point = _as_point(r, self.dim)
        count = self.counts[self._cell(point)]
        n_cells = self.n_bins ** self.dim
        denom = self.n_seen + self.pseudocount * n_cells
        return n_cells * (count + self.pseudocount) / denom

    def observe(self, r) -> "HistogramKD":
        point = _as_point(r, self.dim)
        self.counts[self._cell(point)] += 1
        self.n_seen += 1
        return self

    def clone(self) -> "HistogramKD":
        return HistogramKD(self.n_bins, self.dim, self.pseudocount, self.counts)

    def __repr__(self):
        return (f"HistogramKD(n_bins={self.n_bins}, dim={self.dim}, "
                f"pseudocount={self.pseudocount}, n={self.n_seen})")


class ProductCalibrator(Calibrator):
    """Joint calibrator that multiplies independent univariate calibrators.

    Blind to dependence between coordinates by construction; useful as a
    baseline and for testing the joint machinery.
    """

    def __init__(self, components):
        self.components = list(components)
        if not self.components:
            raise ValueError("need at least one component")
        for comp in self.components:
            if comp.dim != 1:
                raise ValueError("components must be univariate")
        self.dim = len(self.components)

    def evaluate(self, r) -> float:
        point = _as_point(r, self.dim)
        out = 1.0
        for comp, coord in zip(self.components, point):
            out *= comp.evaluate(coord)
        return out

    def observe(self, r) -> "ProductCalibrator":
        point = _as_point(r, self.dim)
        for comp, coord in zip(self.components, point):
            comp.observe(coord)
        return self

    def clone(self) -> "ProductCalibrator":
        return ProductCalibrator([comp.clone() for comp in self.components])

    def __repr__(self):
        return f"ProductCalibrator({self.components!r})"


def parse_calibrator(text: str, dim: int = 1) -> Calibrator:
    """Build a calibrator from a config string.

    Recognized forms: ``power:<kappa>``, ``power-mixture``,
    ``hist:<bins>:<pseudocount>``, ``histkd:<bins>:<pseudocount>``.
    ``dim`` is the joint dimension (1 for univariate streams).
    """
    parts = text.split(":")
    name, args = parts[0], parts[1:]
    try:
        if name == "power":
            (kappa,) = args
            cal = PowerFixed(float(kappa))
        elif name == "power-mixture":
            if args:
                raise ValueError("power-mixture takes no arguments")
            cal = PowerMixture()
        elif name == "hist":
            bins, lam = args
            cal = Histogram1D(int(bins), float(lam))
        elif name == "histkd":
            bins, lam = args
            return HistogramKD(int(bins), dim, float(lam))
        else:
            raise ValueError(f"unknown calibrator family {name!r}")
    except ValueError as exc:
        raise ValueError(f"invalid calibrator spec {text!r}: {exc}") from None
    if dim == 1:
        return cal
    return ProductCalibrator([cal] + [cal.clone() for _ in range(dim - 1)])
