"""Streaming state stays within its advertised memory envelope."""

from orbitmart.groups import GroupSpec, Observation, init_state, state_footprint
from orbitmart.rng import substream

N = 100_000


def test_permutation_state_is_linear():
    rng = substream(80, 0)
    state = init_state(GroupSpec.parse("perm"))
    for v in rng.normal(size=N):
        state.update(Observation(float(v)))
    assert state_footprint(state) == N + 1


def test_sphere_state_is_constant():
    rng = substream(80, 1)
    state = init_state(GroupSpec.parse("sphere"))
    footprints = set()
    for i, v in enumerate(rng.normal(size=N)):
        state.update(Observation(float(v)))
        if i % 10_000 == 0:
            footprints.add(state_footprint(state))
    assert footprints == {2}


def test_isotropy_state_is_quadratic_in_d_only():
    rng = substream(80, 2)
    d = 3
    state = init_state(GroupSpec.parse(f"isotropy:{d}"))
    covariates = rng.normal(size=(N, d))
    footprints = set()
    for i, v in enumerate(rng.normal(size=N)):
        state.update(Observation(float(v), covariates=covariates[i]))
        if i % 10_000 == 0 and i > 0:
            footprints.add(state_footprint(state))
    assert footprints == {d * d + d + 2 + (d + 1)}
