"""Estimator-style front end for sequential invariance testing.

``InvarianceMartingale`` and ``IndependenceMartingale`` wrap the
streaming machinery in the scikit-learn idiom: hyperparameters in
``__init__`` (so ``get_params``/``set_params``/``clone`` compose with
the wider ecosystem), state built lazily on the first ``partial_fit``
or ``update``, fitted attributes with trailing underscores.

``fit(X, y)`` consumes a whole sequence in order; ``partial_fit``
continues an open stream; ``update`` advances it one observation at a
time.  The test is anytime-valid, so monitoring ``rejected_`` after
every update and stopping whenever convenient does not inflate the
type-I error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted, column_or_1d

from . import rng as _rng
from .calibrators import DEFAULT_JOINT, DEFAULT_UNIVARIATE, parse_calibrator
from .groups import (
    DESIGN_ISOTROPY,
    LABEL_PERMUTATION,
    GroupSpec,
    Observation,
    init_state,
    update_state,
)
from .independence import step_joint
from .martingale import MartingaleState, step
from .ranks import orbit_rank

__all__ = ["StepRecord", "InvarianceMartingale", "IndependenceMartingale"]


@dataclass(frozen=True)
class StepRecord:
    """Per-observation output: the rank, the draw it consumed, and wealth."""

    n: int
    r: float | tuple[float, ...]
    theta: float | tuple[float, ...]
    log10_wealth: float
    rejected: bool
    degenerate: bool


def _resolve_group(group) -> GroupSpec:
    return group if isinstance(group, GroupSpec) else GroupSpec.parse(group)


class InvarianceMartingale(BaseEstimator):
    """Anytime-valid sequential test of group invariance for one stream.

    Parameters
    ----------
    group : str or GroupSpec, default="perm"
        Group family: ``perm``, ``perm-mod:<k>``, ``perm-label:<K>``,
        ``sphere``, or ``isotropy:<d>``.
    calibrator : str, default="power-mixture"
        Calibrator spec; see :func:`orbitmart.calibrators.parse_calibrator`.
    alpha : float, default=0.05
        Anytime type-I error level; the test rejects when the wealth
        ever reaches ``1 / alpha``.
    random_state : int, default=0
        Seed for the randomization-draw substream.  Draws never come
        from system entropy, so runs are reproducible.
    record_history : bool, default=True
        Keep the per-step records on ``history_``.  Disable for long
        streams where only the verdict matters.

    Attributes
    ----------
    n_seen_ : int
        Observations consumed so far.
    log10_wealth_ : float
        Current evidence, log10 of the martingale value.
    rejected_ : bool
        Whether the wealth ever crossed ``1 / alpha`` (latching).
    rejection_time_ : int or None
        First n at which the threshold was crossed.
    history_ : list of StepRecord
        Per-step records, if ``record_history``.

    Examples
    --------
    >>> est = InvarianceMartingale(group="perm", alpha=0.05, random_state=7)
    >>> est = est.fit([0.3, 1.2, -0.5, 0.8, 2.1])
    >>> bool(est.rejected_)
    False
    """

    def __init__(self, group="perm", calibrator=DEFAULT_UNIVARIATE, alpha=0.05,
                 random_state=0, record_history=True):
        self.group = group
        self.calibrator = calibrator
        self.alpha = alpha
        self.random_state = random_state
        self.record_history = record_history

    def _start(self):
        spec = _resolve_group(self.group)
        self.spec_ = spec
        self.state_ = init_state(spec)
        self.calibrator_ = parse_calibrator(self.calibrator, dim=1)
        self.martingale_ = MartingaleState(alpha=self.alpha)
        self.theta_rng_ = _rng.substream(self.random_state, 0, _rng.THETA_STREAM)
        self.n_seen_ = 0
        self.rejection_time_ = None
        self.history_ = []

    def update(self, value, label=None, covariates=None) -> StepRecord:
        """Consume one observation and return its step record."""
        if not hasattr(self, "state_"):
            self._start()
        obs = Observation(float(value), label=label, covariates=covariates)
        theta = float(self.theta_rng_.uniform())
        update_state(self.state_, obs)
        rank = orbit_rank(self.state_, obs, theta)
        was_rejected = self.martingale_.rejected
        step(self.martingale_, self.calibrator_, rank)
        self.n_seen_ = self.martingale_.n
        if self.martingale_.rejected and not was_rejected:
            self.rejection_time_ = self.n_seen_
        record = StepRecord(
            n=self.n_seen_, r=rank.r, theta=rank.theta,
            log10_wealth=self.martingale_.log10_wealth,
            rejected=self.martingale_.rejected, degenerate=rank.degenerate,
        )
        if self.record_history:
            self.history_.append(record)
        return record

    def partial_fit(self, X, y=None):
        """Continue the stream with a batch of observations, in order."""
        spec = _resolve_group(self.group)
        if spec.family == DESIGN_ISOTROPY:
            X = check_array(X, ensure_2d=True, dtype=float)
            if y is None:
                raise ValueError("isotropy streams need the response as y")
            y = column_or_1d(y)
            if len(y) != X.shape[0]:
                raise ValueError(f"X has {X.shape[0]} rows but y has {len(y)}")
            for row, response in zip(X, y):
                self.update(response, covariates=row)
            return self
        values = column_or_1d(check_array(X, ensure_2d=False, dtype=float))
        if spec.family == LABEL_PERMUTATION:
            if y is None:
                raise ValueError("perm-label streams need labels as y")
            labels = column_or_1d(y)
            if len(labels) != len(values):
                raise ValueError(f"got {len(values)} values but {len(labels)} labels")
            for value, label in zip(values, labels):
                self.update(value, label=int(label))
            return self
        if y is not None:
            raise ValueError(f"{spec.family} streams take no y")
        for value in values:
            self.update(value)
        return self

    def fit(self, X, y=None):
        """Reset and run the test over a complete sequence."""
        self._start()
        return self.partial_fit(X, y)

    @property
    def log10_wealth_(self) -> float:
        check_is_fitted(self, "martingale_")
        return self.martingale_.log10_wealth

    @property
    def rejected_(self) -> bool:
        check_is_fitted(self, "martingale_")
        return self.martingale_.rejected


class IndependenceMartingale(BaseEstimator):
    """Anytime-valid joint test of invariance and mutual independence.

    Observations arrive as K-vectors; each coordinate is a stream under
    the same (scalar-payload) group family, and a joint calibrator on
    the unit cube bets on dependence between the per-stream ranks.

    Parameters are as in :class:`InvarianceMartingale` except that
    ``n_streams`` fixes K and the default calibrator is a smoothed
    joint histogram (``histkd:4:1``).
    """

    def __init__(self, group="perm", n_streams=2, calibrator=DEFAULT_JOINT,
                 alpha=0.05, random_state=0, record_history=True):
        self.group = group
        self.n_streams = n_streams
        self.calibrator = calibrator
        self.alpha = alpha
        self.random_state = random_state
        self.record_history = record_history

    def _start(self):
        if self.n_streams < 1:
            raise ValueError(f"n_streams must be >= 1, got {self.n_streams}")
        spec = _resolve_group(self.group)
        if spec.family in (LABEL_PERMUTATION, DESIGN_ISOTROPY):
            raise ValueError(
                f"joint testing supports scalar-payload families only, got {spec.family}")
        self.spec_ = spec
        self.states_ = [init_state(spec) for _ in range(self.n_streams)]
        self.calibrator_ = parse_calibrator(self.calibrator, dim=self.n_streams)
        self.martingale_ = MartingaleState(alpha=self.alpha)
        self.theta_rng_ = _rng.substream(self.random_state, 0, _rng.THETA_STREAM)
        self.n_seen_ = 0
        self.rejection_time_ = None
        self.history_ = []

    def update(self, values) -> StepRecord:
        """Consume one K-vector of simultaneous observations."""
        if not hasattr(self, "states_"):
            self._start()
        values = np.asarray(values, dtype=float)
        if values.shape != (self.n_streams,):
            raise ValueError(
                f"expected {self.n_streams} simultaneous values, got shape {values.shape}")
        observations = [Observation(float(v)) for v in values]
        thetas = self.theta_rng_.uniform(size=self.n_streams)
        was_rejected = self.martingale_.rejected
        joint = step_joint(self.states_, self.calibrator_, self.martingale_,
                           observations, thetas)
        self.n_seen_ = self.martingale_.n
        if self.martingale_.rejected and not was_rejected:
            self.rejection_time_ = self.n_seen_
        record = StepRecord(
            n=joint.n,
            r=tuple(rank.r for rank in joint.components),
            theta=tuple(rank.theta for rank in joint.components),
            log10_wealth=self.martingale_.log10_wealth,
            rejected=self.martingale_.rejected,
            degenerate=any(rank.degenerate for rank in joint.components),
        )
        if self.record_history:
            self.history_.append(record)
        return record

    def partial_fit(self, X, y=None):
        """Continue the stream with rows of simultaneous observations."""
        if y is not None:
            raise ValueError("joint streams take no y")
        X = check_array(X, ensure_2d=True, dtype=float)
        if X.shape[1] != self.n_streams:
            raise ValueError(
                f"X has {X.shape[1]} columns but n_streams={self.n_streams}")
        for row in X:
            self.update(row)
        return self

    def fit(self, X, y=None):
        """Reset and run the joint test over a complete sequence of rows."""
        self._start()
        return self.partial_fit(X, y)

    @property
    def log10_wealth_(self) -> float:
        check_is_fitted(self, "martingale_")
        return self.martingale_.log10_wealth

    @property
    def rejected_(self) -> bool:
        check_is_fitted(self, "martingale_")
        return self.martingale_.rejected
