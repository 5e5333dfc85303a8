"""Scenario simulation: null calibration checks and power studies.

A scenario bundles a group family, a data generator, a calibrator, a
level, and Monte Carlo sizes.  Each replication gets its own pair of
counter-based substreams (data, randomization draws) derived from the
master seed and the replication index, so reports are bit-identical
across runs and across worker counts.
"""

from __future__ import annotations

import csv
import json
import math
import pathlib
from dataclasses import dataclass, field

import numpy as np
import yaml
from joblib import Parallel, delayed
from scipy import stats

from .calibrators import parse_calibrator
from .groups import DESIGN_ISOTROPY, LABEL_PERMUTATION, GroupSpec, Observation, init_state
from .independence import step_joint
from .martingale import MartingaleState, step
from .ranks import orbit_rank
from .rng import replication_streams

__all__ = ["Scenario", "load_scenario", "run_scenario", "write_report"]

_SCENARIO_KEYS = {"group", "generator", "horizon", "replications", "seed",
                  "calibrator", "alpha"}


@dataclass(frozen=True)
class Scenario:
    """One simulation configuration."""

    group: str
    generator: str
    horizon: int
    replications: int
    seed: int = 0
    calibrator: str = "power-mixture"
    alpha: float = 0.05
    gen_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications}")
        spec = GroupSpec.parse(self.group)
        if self.generator not in _GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}; "
                             f"choose from {sorted(_GENERATORS)}")
        needs_design = spec.family == DESIGN_ISOTROPY
        makes_design = self.generator == "linear_model"
        if needs_design != makes_design:
            raise ValueError(
                f"group {self.group!r} and generator {self.generator!r} are "
                f"incompatible: isotropy streams pair with linear_model only")


def load_scenario(path) -> Scenario:
    """Read a scenario from a YAML key-value file.

    Keys other than the scenario fields are passed through as generator
    parameters.
    """
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"scenario file {path} must hold a key-value mapping")
    known = {k: raw[k] for k in _SCENARIO_KEYS if k in raw}
    extra = {k: v for k, v in raw.items() if k not in _SCENARIO_KEYS}
    return Scenario(gen_params=extra, **known)


# ---------------------------------------------------------------------------
# Data generators.  Each returns the per-replication payload: a values
# array for scalar families, (values, labels) for label streams,
# (design, response) for isotropy, or an (N, K) matrix for joint tests.


def _gen_iid_gaussian(rng, n, params):
    mu = float(params.get("mu", 0.0))
    sigma = float(params.get("sigma", 1.0))
    streams = int(params.get("streams", 1))
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if streams < 1:
        raise ValueError(f"streams must be >= 1, got {streams}")
    shape = (n,) if streams == 1 else (n, streams)
    return mu + sigma * rng.standard_normal(shape)


def _gen_changepoint(rng, n, params):
    n0 = int(params.get("n0", n // 2))
    shift = float(params.get("mu_shift", 2.0))
    sigma = float(params.get("sigma", 1.0))
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not (0 <= n0 <= n):
        raise ValueError(f"n0 must be in [0, {n}], got {n0}")
    values = sigma * rng.standard_normal(n)
    values[n0:] += shift * sigma
    return values


def _gen_ar1(rng, n, params):
    rho = float(params.get("rho", 0.5))
    sigma = float(params.get("sigma", 1.0))
    if not abs(rho) < 1:
        raise ValueError(f"ar1 requires |rho| < 1, got {rho}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    innov = rng.standard_normal(n)
    values = np.empty(n)
    values[0] = sigma * innov[0]
    scale = sigma * math.sqrt(1.0 - rho * rho)
    for i in range(1, n):
        values[i] = rho * values[i - 1] + scale * innov[i]
    return values


def _gen_heavy_tail(rng, n, params):
    df = float(params.get("df", 3.0))
    if df <= 0:
        raise ValueError(f"df must be positive, got {df}")
    return rng.standard_t(df, size=n)


def _gen_dependent_pair(rng, n, params):
    rho = float(params.get("rho", 0.8))
    if not abs(rho) < 1:
        raise ValueError(f"dependent_pair requires |rho| < 1, got {rho}")
    first = rng.standard_normal(n)
    second = rho * first + math.sqrt(1.0 - rho * rho) * rng.standard_normal(n)
    return np.column_stack([first, second])


def _gen_linear_model(rng, n, params):
    beta = np.atleast_1d(np.asarray(params.get("beta", [1.0]), dtype=float))
    noise = float(params.get("noise", 1.0))
    if noise <= 0:
        raise ValueError(f"noise must be positive, got {noise}")
    d = len(beta)
    design = rng.standard_normal((n, d))
    response = design @ beta + noise * rng.standard_normal(n)
    return design, response


_GENERATORS = {
    "iid_gaussian": _gen_iid_gaussian,
    "changepoint": _gen_changepoint,
    "ar1": _gen_ar1,
    "heavy_tail": _gen_heavy_tail,
    "dependent_pair": _gen_dependent_pair,
    "linear_model": _gen_linear_model,
}


def _checkpoints(horizon: int) -> list[int]:
    stride = max(1, horizon // 100)
    points = list(range(stride, horizon + 1, stride))
    if points[-1] != horizon:
        points.append(horizon)
    return points


def _replication(scenario: Scenario, spec: GroupSpec, rep: int, checkpoints):
    data_rng, theta_rng = replication_streams(scenario.seed, rep)
    payload = _GENERATORS[scenario.generator](data_rng, scenario.horizon,
                                              scenario.gen_params)
    horizon = scenario.horizon
    m = MartingaleState(alpha=scenario.alpha)
    joint = isinstance(payload, np.ndarray) and payload.ndim == 2 \
        and scenario.generator != "linear_model"
    if joint:
        n_streams = payload.shape[1]
        states = [init_state(spec) for _ in range(n_streams)]
        cal = parse_calibrator(scenario.calibrator, dim=n_streams)
        thetas = theta_rng.uniform(size=(horizon, n_streams))
        ranks = np.empty((horizon, n_streams))
    else:
        state = init_state(spec)
        cal = parse_calibrator(scenario.calibrator, dim=1)
        thetas = theta_rng.uniform(size=horizon)
        ranks = np.empty(horizon)
        if spec.family == LABEL_PERMUTATION:
            labels = data_rng.integers(0, spec.n_labels, size=horizon)
        elif spec.family == DESIGN_ISOTROPY:
            design, response = payload

    trajectory = np.empty(len(checkpoints))
    crossing_time = 0
    checkpoint_iter = 0
    for i in range(horizon):
        if joint:
            observations = [Observation(float(v)) for v in payload[i]]
            jr = step_joint(states, cal, m, observations, thetas[i])
            ranks[i] = [rank.r for rank in jr.components]
        else:
            if spec.family == LABEL_PERMUTATION:
                obs = Observation(float(payload[i]), label=int(labels[i]))
            elif spec.family == DESIGN_ISOTROPY:
                obs = Observation(float(response[i]), covariates=design[i])
            else:
                obs = Observation(float(payload[i]))
            state.update(obs)
            rank = orbit_rank(state, obs, float(thetas[i]))
            ranks[i] = rank.r
            step(m, cal, rank)
        if not crossing_time and m.rejected:
            crossing_time = m.n
        if i + 1 == checkpoints[checkpoint_iter]:
            trajectory[checkpoint_iter] = m.log10_wealth
            checkpoint_iter += 1
    return ranks, trajectory, crossing_time


def run_scenario(scenario: Scenario, jobs: int = 1) -> dict:
    """Run all replications and fold them into a deterministic report.

    Returns a dict with the aggregate report under ``"report"`` and the
    per-replication wealth trajectories under ``"trajectories"`` (rows =
    replications, columns = the checkpoint time grid).
    """
    spec = GroupSpec.parse(scenario.group)
    checkpoints = _checkpoints(scenario.horizon)
    runner = delayed(_replication)
    results = Parallel(n_jobs=jobs)(
        runner(scenario, spec, rep, checkpoints)
        for rep in range(scenario.replications))

    all_ranks = np.concatenate([ranks.reshape(-1) for ranks, _, _ in results])
    trajectories = np.vstack([traj for _, traj, _ in results])
    crossing_times = [ct for _, _, ct in results]

    # Lag-1 correlation of consecutive ranks, pooled within replications.
    sum_x = sum_y = sum_xx = sum_yy = sum_xy = 0.0
    pairs = 0
    for ranks, _, _ in results:
        flat = ranks if ranks.ndim == 1 else ranks[:, 0]
        x, y = flat[:-1], flat[1:]
        sum_x += x.sum(); sum_y += y.sum()
        sum_xx += (x * x).sum(); sum_yy += (y * y).sum()
        sum_xy += (x * y).sum()
        pairs += len(x)
    if pairs > 1:
        cov = sum_xy / pairs - (sum_x / pairs) * (sum_y / pairs)
        var_x = sum_xx / pairs - (sum_x / pairs) ** 2
        var_y = sum_yy / pairs - (sum_y / pairs) ** 2
        lag1 = cov / math.sqrt(max(var_x * var_y, 1e-300))
    else:
        lag1 = 0.0

    ks_stat, ks_pvalue = stats.kstest(all_ranks, "uniform")
    final = trajectories[:, -1]
    crossed = np.array([ct > 0 for ct in crossing_times])
    report = {
        "scenario": {
            "group": scenario.group,
            "generator": scenario.generator,
            "gen_params": dict(sorted(scenario.gen_params.items())),
            "horizon": scenario.horizon,
            "replications": scenario.replications,
            "seed": scenario.seed,
            "calibrator": scenario.calibrator,
            "alpha": scenario.alpha,
        },
        "pooled_ranks": {
            "count": int(all_ranks.size),
            "ks_stat": float(ks_stat),
            "ks_pvalue": float(ks_pvalue),
            "lag1_correlation": float(lag1),
        },
        "crossing": {
            "threshold": 1.0 / scenario.alpha,
            "frequency": float(crossed.mean()),
            "times": sorted(int(ct) for ct in crossing_times if ct > 0),
        },
        "log10_wealth_final": {
            "mean": float(final.mean()),
            "median": float(np.median(final)),
            "q10": float(np.quantile(final, 0.10)),
            "q90": float(np.quantile(final, 0.90)),
        },
        "log10_wealth_curve": {
            "checkpoints": [int(c) for c in checkpoints],
            "mean": [float(v) for v in trajectories.mean(axis=0)],
            "median": [float(v) for v in np.median(trajectories, axis=0)],
        },
    }
    return {"report": report, "trajectories": trajectories,
            "checkpoints": checkpoints}


def write_report(result: dict, out_dir) -> None:
    """Write report.json and trajectories.csv under out_dir."""
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w") as fh:
        json.dump(result["report"], fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "trajectories.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["replication"] + [f"n={c}" for c in result["checkpoints"]])
        for rep, row in enumerate(result["trajectories"]):
            writer.writerow([rep] + [repr(float(v)) for v in row])
