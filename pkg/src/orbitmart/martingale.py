"""Log-space test-martingale accounting and the anytime-valid threshold.

Wealth is the running product of calibrator factors, accumulated in log
space so thousand-step streams neither overflow nor lose the running
maximum.  Rejection latches as soon as the running maximum reaches
1/alpha: the guarantee is about ever crossing, so a later drawdown
cannot un-reject.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .calibrators import Calibrator
from .ranks import OrbitRank

__all__ = ["MartingaleState", "step", "combine"]

# Slack for the threshold comparison: log(1/alpha) and a log-wealth that
# should equal it exactly can differ by an ulp.
_THRESHOLD_SLACK = 1e-12


@dataclass
class MartingaleState:
    """Accumulated evidence against invariance for one stream.

    ``rejected`` means the running maximum of the wealth ever reached
    1/alpha; it never resets.
    """

    alpha: float
    log_wealth: float = 0.0
    max_log_wealth: float = 0.0
    n: int = 0
    rejected: bool = False

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")

    @property
    def threshold(self) -> float:
        """log(1/alpha), the rejection boundary in log space."""
        return -math.log(self.alpha)

    @property
    def wealth(self) -> float:
        """Wealth on the linear scale, clamped to inf past float range."""
        try:
            return math.exp(self.log_wealth)
        except OverflowError:
            return math.inf

    @property
    def log10_wealth(self) -> float:
        return self.log_wealth / math.log(10.0)

    def _refresh_rejected(self):
        if self.max_log_wealth >= self.threshold - _THRESHOLD_SLACK:
            self.rejected = True

    def clone(self) -> "MartingaleState":
        return MartingaleState(self.alpha, self.log_wealth, self.max_log_wealth,
                               self.n, self.rejected)


def step(m: MartingaleState, cal: Calibrator, rank: OrbitRank | float) -> MartingaleState:
    """Consume one rank: bet the current calibrator, then let it adapt.

    The evaluate-then-observe order is what keeps the calibrator
    predictable (the factor applied to rank n depends only on ranks
    1..n-1), which is precisely the martingale property.
    """
    r = rank.r if isinstance(rank, OrbitRank) else rank
    factor = cal.evaluate(r)
    if not factor > 0.0:
        raise ArithmeticError(f"calibrator produced a nonpositive factor {factor}")
    cal.observe(r)
    m.log_wealth += math.log(factor)
    if m.log_wealth > m.max_log_wealth:
        m.max_log_wealth = m.log_wealth
    m.n += 1
    m._refresh_rejected()
    return m


def combine(a: MartingaleState, b: MartingaleState) -> MartingaleState:
    """Pool evidence from two independent stopped streams by product.

    The combined running maximum treats b's trajectory as a continuation
    of a's stopped wealth; rejection is latched if either input had
    already rejected.
    """
    if a.alpha != b.alpha:
        raise ValueError(f"cannot combine levels alpha={a.alpha} and alpha={b.alpha}")
    out = MartingaleState(
        alpha=a.alpha,
        log_wealth=a.log_wealth + b.log_wealth,
        max_log_wealth=max(a.max_log_wealth, a.log_wealth + b.max_log_wealth),
        n=a.n + b.n,
        rejected=a.rejected or b.rejected,
    )
    out._refresh_rejected()
    return out
