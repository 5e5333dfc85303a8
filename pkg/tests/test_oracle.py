"""Brute-force oracles: sampler contracts, enumeration agreement, round trips."""

import itertools
import math

import numpy as np
import pytest
from scipy import stats

from orbitmart.groups import GroupSpec, Observation, init_state, update_state
from orbitmart.oracle import (
    EnumerationLimitError,
    ReconstructionError,
    TiesError,
    acting_class_indices,
    brute_force_rank,
    haar_last_coordinates,
    haar_sample,
    orthonormal_complement,
    reconstruct,
)
from orbitmart.ranks import orbit_rank
from orbitmart.rng import substream
from orbitmart.special import cap_measure


def scalar_obs(values):
    return [Observation(float(v)) for v in values]


class TestHaarSample:
    def test_permutation_orderings_uniform(self):
        rng = substream(42, 0)
        spec = GroupSpec.parse("perm")
        observations = scalar_obs([1.0, 2.0, 3.0])
        counts = {perm: 0 for perm in itertools.permutations((1.0, 2.0, 3.0))}
        draws = 60_000
        for _ in range(draws):
            counts[tuple(haar_sample(spec, observations, rng))] += 1
        se = math.sqrt((1 / 6) * (5 / 6) / draws)
        for count in counts.values():
            assert abs(count / draws - 1 / 6) <= 3 * se

    def test_modular_classes_fixed(self):
        rng = substream(42, 1)
        spec = GroupSpec.parse("perm-mod:2")
        observations = scalar_obs([5.0, 1.0, 7.0, 2.0])
        for _ in range(200):
            point = haar_sample(spec, observations, rng)
            assert sorted(point[[0, 2]]) == [5.0, 7.0]
            assert sorted(point[[1, 3]]) == [1.0, 2.0]

    def test_label_classes_fixed(self):
        rng = substream(42, 2)
        spec = GroupSpec.parse("perm-label:2")
        observations = [Observation(1.0, label=0), Observation(5.0, label=1),
                        Observation(3.0, label=0)]
        for _ in range(200):
            point = haar_sample(spec, observations, rng)
            assert sorted(point[[0, 2]]) == [1.0, 3.0]
            assert point[1] == 5.0

    def test_sphere_norm_preserved(self):
        rng = substream(42, 3)
        spec = GroupSpec.parse("sphere")
        observations = scalar_obs(rng.normal(size=10))
        radius = math.sqrt(sum(o.value ** 2 for o in observations))
        for _ in range(500):
            point = haar_sample(spec, observations, rng)
            assert abs(np.linalg.norm(point) - radius) < 1e-10

    def test_isotropy_orbit_constraints(self):
        rng = substream(42, 4)
        spec = GroupSpec.parse("isotropy:2")
        design = rng.normal(size=(9, 2))
        response = rng.normal(size=9)
        observations = [Observation(float(y), covariates=z)
                        for y, z in zip(response, design)]
        for _ in range(300):
            point = haar_sample(spec, observations, rng)
            np.testing.assert_allclose(design.T @ point, design.T @ response, atol=1e-9)
            assert abs(np.linalg.norm(point) - np.linalg.norm(response)) < 1e-9

    def test_sphere_last_coordinate_distribution(self):
        # Mapping each sampled last coordinate through the cap area must
        # produce uniforms if and only if the sampler and the closed form
        # agree.
        rng = substream(42, 5)
        spec = GroupSpec.parse("sphere")
        observations = scalar_obs(rng.normal(size=8))
        radius = math.sqrt(sum(o.value ** 2 for o in observations))
        draws = haar_last_coordinates(spec, observations, rng, 100_000)
        transformed = [cap_measure(float(v) / radius, 8) for v in draws]
        assert stats.kstest(transformed, "uniform").pvalue > 0.01

    def test_empty_prefix_rejected(self):
        with pytest.raises(ValueError):
            haar_sample(GroupSpec.parse("perm"), [], substream(0, 0))


class TestBruteForceRank:
    def test_exact_three_point_case(self):
        spec = GroupSpec.parse("perm")
        assert brute_force_rank(spec, scalar_obs([0.5, 0.2, 0.9]), 0.5) == pytest.approx(1 / 6, abs=0)

    def test_exact_matches_streaming_rank(self):
        rng = substream(43, 0)
        specs = [GroupSpec.parse("perm"), GroupSpec.parse("perm-mod:2"),
                 GroupSpec.parse("perm-mod:3"), GroupSpec.parse("perm-label:2")]
        checked = 0
        for case in range(100):
            spec = specs[case % len(specs)]
            max_n = 8 if spec.family == "perm" else 14
            n = int(rng.integers(1, max_n + 1))
            values = np.round(rng.normal(size=n), 1)  # rounding forces ties
            if spec.family == "perm-label":
                observations = [Observation(float(v), label=int(lab))
                                for v, lab in zip(values, rng.integers(0, 2, size=n))]
            else:
                observations = scalar_obs(values)
            if len(acting_class_indices(spec, observations)) > 8:
                continue
            state = init_state(spec)
            for obs in observations:
                update_state(state, obs)
            theta = float(rng.uniform())
            expected = brute_force_rank(spec, observations, theta, mode="exact")
            assert orbit_rank(state, observations[-1], theta).r == expected
            checked += 1
        assert checked >= 80

    def test_mc_sphere_quarter_circle(self):
        spec = GroupSpec.parse("sphere")
        estimate = brute_force_rank(spec, scalar_obs([1.0, 1.0]), 0.5, mode="mc",
                                    n_samples=100_000, rng=substream(43, 1))
        se = math.sqrt(0.25 * 0.75 / 100_000)
        assert abs(estimate - 0.25) <= 3 * se

    def test_mc_degenerate_zero_prefix(self):
        spec = GroupSpec.parse("sphere")
        value = brute_force_rank(spec, scalar_obs([0.0, 0.0]), 0.37, mode="mc",
                                 n_samples=10, rng=substream(43, 2))
        assert value == 0.37

    def test_enumeration_limit(self):
        spec = GroupSpec.parse("perm")
        with pytest.raises(EnumerationLimitError):
            brute_force_rank(spec, scalar_obs(range(9)), 0.5, mode="exact")
        with pytest.raises(EnumerationLimitError):
            brute_force_rank(GroupSpec.parse("sphere"), scalar_obs([1.0]), 0.5,
                             mode="exact")

    def test_mc_requires_rng(self):
        with pytest.raises(ValueError):
            brute_force_rank(GroupSpec.parse("perm"), scalar_obs([1.0]), 0.5, mode="mc")


class TestOrthonormalComplement:
    def test_spans_complement(self):
        rng = substream(44, 0)
        design = rng.normal(size=(12, 3))
        comp = orthonormal_complement(design)
        assert comp.shape == (12, 9)
        np.testing.assert_allclose(comp.T @ comp, np.eye(9), atol=1e-10)
        np.testing.assert_allclose(design.T @ comp, 0.0, atol=1e-10)

    def test_rank_deficient_design(self):
        base = np.array([[1.0, 2.0], [3.0, 6.0], [0.5, 1.0], [2.0, 4.0]])
        comp = orthonormal_complement(base)  # second column is redundant
        assert comp.shape == (4, 3)
        np.testing.assert_allclose(base.T @ comp, 0.0, atol=1e-10)


class TestReconstruct:
    def run_pipeline(self, values, thetas):
        spec = GroupSpec.parse("perm")
        state = init_state(spec)
        ranks = []
        for value, theta in zip(values, thetas):
            obs = Observation(float(value))
            update_state(state, obs)
            ranks.append(orbit_rank(state, obs, float(theta)))
        return ranks, state

    def test_three_point_round_trip(self):
        ranks, state = self.run_pipeline([0.5, 0.2, 0.9], [0.8, 0.2, 0.6])
        values, thetas = reconstruct(ranks, state)
        assert values == [0.5, 0.2, 0.9]
        np.testing.assert_allclose(thetas, [0.8, 0.2, 0.6], atol=1e-9)

    def test_single_point(self):
        ranks, state = self.run_pipeline([3.13], [0.5])
        values, _ = reconstruct(ranks, state)
        assert values == [3.13]

    def test_random_round_trips(self):
        rng = substream(44, 1)
        for _ in range(30):
            n = int(rng.integers(1, 51))
            values = list(rng.normal(size=n))
            thetas = list(rng.uniform(size=n))
            ranks, state = self.run_pipeline(values, thetas)
            recovered, rec_thetas = reconstruct(ranks, state)
            assert recovered == values
            np.testing.assert_allclose(rec_thetas, thetas, atol=1e-9)

    def test_ties_detected(self):
        ranks, state = self.run_pipeline([1.0, 1.0, 2.0], [0.3, 0.4, 0.5])
        with pytest.raises(TiesError):
            reconstruct(ranks, state)

    def test_inconsistent_inputs(self):
        ranks, state = self.run_pipeline([1.0, 2.0], [0.3, 0.4])
        with pytest.raises(ReconstructionError):
            reconstruct(ranks[:1], state)
        with pytest.raises(ReconstructionError):
            reconstruct([1.5, 0.2], state)
