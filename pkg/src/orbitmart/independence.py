"""Joint-rank testing of mutual independence across invariant streams.

K parallel streams, each invariant under the same group family, yield a
vector of orbit ranks at every step.  Under the conjunction null (every
stream invariant and the streams mutually independent) the rank vectors
are i.i.d. uniform on the unit cube, so any joint calibrator that
learns structure in the cube -- concentration near a diagonal, say --
turns dependence into wealth growth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calibrators import Calibrator
from .groups import Observation, OrbitState, update_state
from .martingale import MartingaleState, step
from .ranks import OrbitRank, orbit_rank

__all__ = ["JointRank", "step_joint"]


@dataclass(frozen=True)
class JointRank:
    """Vector of per-stream orbit ranks sharing one time index."""

    components: tuple[OrbitRank, ...]
    n: int

    @property
    def point(self) -> np.ndarray:
        """The rank vector as a point in the unit cube."""
        return np.array([rank.r for rank in self.components])


def step_joint(states: list[OrbitState], cal: Calibrator, m: MartingaleState,
               observations: list[Observation], thetas) -> JointRank:
    """Advance all K streams one step and bet on the joint rank vector.

    Every stream must carry the same group specification; ``thetas``
    supplies one independent uniform draw per stream.  States, the
    calibrator, and the martingale are updated in place.
    """
    n_streams = len(states)
    if n_streams == 0:
        raise ValueError("need at least one stream")
    if len(observations) != n_streams or len(thetas) != n_streams:
        raise ValueError(
            f"got {len(observations)} observations and {len(thetas)} draws "
            f"for {n_streams} streams")
    first = states[0].spec
    for state in states[1:]:
        if state.spec != first:
            raise ValueError(
                f"all streams must share one group spec; got {state.spec} != {first}")
    if getattr(cal, "dim", 1) != n_streams:
        raise ValueError(
            f"joint calibrator has dim {cal.dim}, expected {n_streams}")
    ranks = []
    for state, obs, theta in zip(states, observations, thetas):
        update_state(state, obs)
        ranks.append(orbit_rank(state, obs, float(theta)))
    joint = JointRank(components=tuple(ranks), n=ranks[0].n)
    step(m, cal, joint.point)
    return joint
