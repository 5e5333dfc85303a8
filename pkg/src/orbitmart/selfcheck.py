"""Fast built-in verification: special functions against closed forms,
streaming ranks against brute-force oracles, and determinism.

Each check returns (passed, detail); the whole battery runs in well
under a minute and is exposed as ``orbitmart selfcheck``.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np

from . import special
from .groups import GroupSpec, Observation, init_state
from .martingale import MartingaleState, step
from .calibrators import parse_calibrator
from .oracle import brute_force_rank, haar_sample, reconstruct
from .ranks import orbit_rank
from .rng import replication_streams, substream

__all__ = ["run_selfcheck", "CHECKS"]


def _check_beta_identities():
    worst = 0.0
    for x in (0.0, 0.3, 1.0):
        worst = max(worst, abs(special.reg_inc_beta(x, 1, 1) - x))
    for a in (0.5, 2.0, 7.5):
        worst = max(worst, abs(special.reg_inc_beta(0.5, a, a) - 0.5))
    worst = max(worst, abs(special.reg_inc_beta(0.25, 2, 2) - 0.15625))
    rng = substream(2024, 90)
    for _ in range(200):
        x = float(rng.uniform())
        a = float(rng.uniform(0.2, 20.0))
        b = float(rng.uniform(0.2, 20.0))
        gap = special.reg_inc_beta(x, a, b) + special.reg_inc_beta(1 - x, b, a) - 1.0
        worst = max(worst, abs(gap))
    return worst < 1e-12, f"worst deviation {worst:.3e}"


def _check_cap_circle():
    worst = 0.0
    for c in np.linspace(-1, 1, 201):
        worst = max(worst, abs(special.cap_measure(float(c), 2)
                               - math.acos(float(c)) / math.pi))
    return worst < 1e-12, f"worst deviation {worst:.3e}"


def _check_t_consistency():
    worst = abs(special.t_upper_tail(1.0, 1) - 0.25)
    worst = max(worst, abs(special.t_upper_tail(1.0, 2)
                           - (0.5 - 1.0 / (2.0 * math.sqrt(3.0)))))
    for nu in (1, 2, 5, 30, 200):
        for t in np.linspace(-6, 6, 41):
            c = float(t) / math.sqrt(nu + t * t)
            gap = special.cap_measure(c, nu + 1) - special.t_upper_tail(float(t), nu)
            worst = max(worst, abs(gap))
    return worst < 1e-12, f"worst deviation {worst:.3e}"


def _check_permutation_oracle():
    rng = substream(2024, 91)
    worst = 0.0
    for case in range(40):
        spec = [GroupSpec.parse("perm"), GroupSpec.parse("perm-mod:2"),
                GroupSpec.parse("perm-mod:3")][case % 3]
        n = int(rng.integers(1, 9 if spec.family == "perm" else 16))
        values = rng.normal(size=n)
        if rng.uniform() < 0.3 and n > 1:
            values[rng.integers(0, n)] = values[rng.integers(0, n)]
        observations = [Observation(float(v)) for v in values]
        state = init_state(spec)
        for obs in observations:
            state.update(obs)
        theta = float(rng.uniform())
        try:
            expected = brute_force_rank(spec, observations, theta, mode="exact")
        except ValueError:
            continue
        got = orbit_rank(state, observations[-1], theta).r
        worst = max(worst, abs(got - expected))
    return worst == 0.0, f"worst deviation {worst:.3e}"


def _mc_check(spec_text, observations, n_samples, seed):
    spec = GroupSpec.parse(spec_text)
    state = init_state(spec)
    for obs in observations:
        state.update(obs)
    theta = 0.5
    got = orbit_rank(state, observations[-1], theta).r
    rng = substream(seed, 92)
    est = brute_force_rank(spec, observations, theta, mode="mc",
                           n_samples=n_samples, rng=rng)
    se = math.sqrt(max(got * (1 - got), 1.0 / n_samples) / n_samples)
    return abs(got - est), 3.0 * se + 1e-9


def _check_sphere_oracle():
    rng = substream(2024, 93)
    for case in range(3):
        n = int(rng.integers(3, 9))
        observations = [Observation(float(v)) for v in rng.normal(size=n)]
        gap, bound = _mc_check("sphere", observations, 20000, 3000 + case)
        if gap > bound:
            return False, f"gap {gap:.4f} above bound {bound:.4f}"
    return True, "3 Monte Carlo cases within 3 standard errors"


def _check_isotropy_oracle():
    rng = substream(2024, 94)
    for case in range(3):
        d = int(rng.integers(1, 3))
        n = int(rng.integers(d + 2, d + 9))
        observations = [
            Observation(float(v), covariates=rng.normal(size=d))
            for v in rng.normal(size=n)
        ]
        gap, bound = _mc_check(f"isotropy:{d}", observations, 20000, 4000 + case)
        if gap > bound:
            return False, f"gap {gap:.4f} above bound {bound:.4f}"
    return True, "3 Monte Carlo cases within 3 standard errors"


def _check_haar_norms():
    rng = substream(2024, 95)
    observations = [Observation(float(v)) for v in rng.normal(size=12)]
    radius = math.sqrt(sum(o.value ** 2 for o in observations))
    spec = GroupSpec.parse("sphere")
    worst = 0.0
    for _ in range(200):
        point = haar_sample(spec, observations, rng)
        worst = max(worst, abs(np.linalg.norm(point) - radius))
    return worst < 1e-10, f"worst radius deviation {worst:.3e}"


def _check_reconstruction():
    rng = substream(2024, 96)
    for _ in range(20):
        n = int(rng.integers(1, 30))
        values = rng.normal(size=n)
        spec = GroupSpec.parse("perm")
        state = init_state(spec)
        ranks = []
        for v in values:
            obs = Observation(float(v))
            state.update(obs)
            ranks.append(orbit_rank(state, obs, float(rng.uniform())))
        recovered, _ = reconstruct(ranks, state)
        if list(values) != recovered:
            return False, "round trip mismatch"
    return True, "20 random sequences round-trip exactly"


def _check_determinism():
    digests = []
    for _ in range(2):
        data_rng, theta_rng = replication_streams(77, 0)
        values = data_rng.normal(size=400)
        state = init_state(GroupSpec.parse("perm"))
        cal = parse_calibrator("power-mixture")
        m = MartingaleState(alpha=0.05)
        hasher = hashlib.sha256()
        for v in values:
            obs = Observation(float(v))
            state.update(obs)
            rank = orbit_rank(state, obs, float(theta_rng.uniform()))
            step(m, cal, rank)
            hasher.update(repr(m.log_wealth).encode())
        digests.append(hasher.hexdigest())
    return digests[0] == digests[1], f"digest {digests[0][:12]}"


CHECKS = [
    ("beta-identities", _check_beta_identities),
    ("cap-circle-closed-form", _check_cap_circle),
    ("t-tail-consistency", _check_t_consistency),
    ("permutation-rank-vs-enumeration", _check_permutation_oracle),
    ("sphere-rank-vs-haar-mc", _check_sphere_oracle),
    ("isotropy-rank-vs-haar-mc", _check_isotropy_oracle),
    ("haar-sphere-radius", _check_haar_norms),
    ("reconstruction-round-trip", _check_reconstruction),
    ("pipeline-determinism", _check_determinism),
]


def run_selfcheck() -> list[tuple[str, bool, str]]:
    """Run every check; returns (name, passed, detail) triples."""
    results = []
    for name, check in CHECKS:
        try:
            passed, detail = check()
        except Exception as exc:  # a crashed check is a failed check
            passed, detail = False, f"raised {exc!r}"
        results.append((name, bool(passed), detail))
    return results
