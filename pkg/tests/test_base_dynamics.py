from __future__ import annotations

import numpy as np
import pytest

from cocstab import (
    CirclePoint,
    CircleRotation,
    DoublingMap,
    FlowPoint,
    FullShift,
    MeasurableSet,
    SubshiftOfFiniteType,
    Suspension,
    enumerate_periodic_orbits,
    flow_step,
    membership,
    sample_point,
    step,
    step_n,
)


class TestSampling:
    def test_bernoulli_frequencies_within_3_sigma(self, bernoulli_half):
        rng = np.random.default_rng(7)
        draws = 10**5
        count = sum(bernoulli_half.sample_point(rng).window[0] for _ in range(draws))
        sigma = np.sqrt(draws * 0.25)
        assert abs(count - draws / 2) <= 3 * sigma

    def test_identity_rotation_orbit_is_constant(self):
        rot = CircleRotation(0.0)
        q = sample_point(rot, seed=5)
        assert 0.0 <= q.x < 1.0
        assert step(rot, q).x == q.x

    def test_doubling_birkhoff_average_equidistributes(self):
        dm = DoublingMap()
        q = sample_point(dm, seed=1)
        coords = dm.orbit_coordinates(q, 10**5)
        assert abs(float(np.mean(coords)) - 0.5) <= 0.01

    def test_sampling_deterministic_given_seed(self, bernoulli_half):
        assert sample_point(bernoulli_half, 3) == sample_point(bernoulli_half, 3)


class TestStep:
    def test_doubling_step_doubles_coordinate(self):
        dm = DoublingMap()
        q = dm.point_from_coordinate(0.3)
        assert dm.coordinate(step(dm, q)) == pytest.approx(0.6, abs=1e-12)

    def test_rotation_wraps_mod_one(self):
        rot = CircleRotation.from_string("0.25")
        assert step(rot, CirclePoint(0.9)).x == pytest.approx(0.15, abs=1e-12)

    def test_shift_drops_first_symbol(self, bernoulli_half):
        q = bernoulli_half.point_from_word([0, 1, 1], tail_seed=9)
        assert step(bernoulli_half, q).window[:2] == (1, 1)

    def test_step_composition_is_exact_bookkeeping(self, bernoulli_half):
        q = sample_point(bernoulli_half, 11)
        one_by_one = q
        for _ in range(200):
            one_by_one = step(bernoulli_half, one_by_one)
        assert bernoulli_half.orbit_symbols(one_by_one, 32).tolist() == (
            bernoulli_half.orbit_symbols(step_n(bernoulli_half, q, 200), 32).tolist()
        )

    def test_invalid_point_rejected(self, bernoulli_half):
        with pytest.raises(ValueError, match="not valid"):
            step(bernoulli_half, CirclePoint(0.5))


class TestFlow:
    def test_unit_roof_full_turn(self, rotation_tenth, unit_suspension):
        q = FlowPoint(CirclePoint(0.3), 0.0)
        moved = flow_step(unit_suspension, q, 1.0)
        assert moved.base.x == pytest.approx(0.4, abs=1e-12)
        assert moved.height == 0.0

    def test_time_zero_is_identity(self, unit_suspension):
        q = FlowPoint(CirclePoint(0.3), 0.25)
        assert flow_step(unit_suspension, q, 0.0) == q

    def test_vertical_translation_below_roof(self, unit_suspension):
        q = FlowPoint(CirclePoint(0.3), 0.0)
        moved = flow_step(unit_suspension, q, 0.5)
        assert moved.base.x == 0.3 and moved.height == 0.5

    def test_semigroup_property_exact_for_dyadic_times(self, unit_suspension):
        q = FlowPoint(CirclePoint(0.125), 0.0)
        for t, s in [(0.5, 0.25), (1.0, 0.75), (2.25, 1.5)]:
            once = flow_step(unit_suspension, q, t + s)
            twice = flow_step(unit_suspension, flow_step(unit_suspension, q, s), t)
            assert once.height == pytest.approx(twice.height, abs=1e-12)
            assert once.base.x == pytest.approx(twice.base.x, abs=1e-12)

    def test_negative_time_rejected(self, unit_suspension):
        with pytest.raises(ValueError, match="nonnegative"):
            flow_step(unit_suspension, FlowPoint(CirclePoint(0.0), 0.0), -1.0)

    def test_map_is_not_a_semi_flow(self, bernoulli_half):
        with pytest.raises(ValueError, match="semi-flow"):
            flow_step(bernoulli_half, sample_point(bernoulli_half, 1), 1.0)


class TestMembership:
    def test_cylinder_prefix_match(self, bernoulli_half):
        e = MeasurableSet.cylinder(bernoulli_half, [0])
        assert membership(e, bernoulli_half.point_from_word([0, 1], tail_seed=1))
        assert not membership(e, bernoulli_half.point_from_word([1, 0], tail_seed=1))

    def test_interval_half_open_boundary(self):
        rot = CircleRotation.from_string("0.25")
        e = MeasurableSet.interval_union(rot, [(0.0, 0.25)])
        assert not membership(e, CirclePoint(0.25))
        assert membership(e, CirclePoint(0.0))

    def test_cylinder_measure_is_product_of_weights(self):
        fs = FullShift(2, (0.3, 0.7))
        assert MeasurableSet.cylinder(fs, [0, 1, 1]).measure == pytest.approx(0.3 * 0.7 * 0.7)

    def test_markov_cylinder_measure(self, no_11_sft):
        pi = no_11_sft.stationary_distribution()
        e = MeasurableSet.cylinder(no_11_sft, [0, 1])
        assert e.measure == pytest.approx(pi[0] * no_11_sft.markov[0][1])

    def test_measure_preservation_of_preimage(self, bernoulli_half):
        # Monte Carlo estimate of mu(f^-1 E) against the exact mu(E)
        e = MeasurableSet.cylinder(bernoulli_half, [0, 1])
        rng = np.random.default_rng(123)
        samples = 2 * 10**4
        hits = sum(membership(e, step(bernoulli_half, bernoulli_half.sample_point(rng))) for _ in range(samples))
        mu = e.measure
        sigma = np.sqrt(samples * mu * (1 - mu))
        assert abs(hits - samples * mu) <= 3 * sigma

    def test_exclusion_set_has_full_measure(self, bernoulli_half):
        e = MeasurableSet.exclude_periodic(bernoulli_half, [[0]])
        assert e.measure == 1.0
        all_zeros = bernoulli_half.point_from_word([0] * 8, tail_seed=1)
        assert not membership(e, all_zeros)
        assert membership(e, bernoulli_half.point_from_word([1, 0], tail_seed=1))


class TestPeriodicOrbits:
    def test_full_shift_orbit_count_up_to_period_two(self, bernoulli_half):
        orbits = enumerate_periodic_orbits(bernoulli_half, 2)
        assert sorted(orbits) == [((0,), 1), ((0, 1), 2), ((1,), 1)]

    def test_sft_excludes_forbidden_word(self, no_11_sft):
        orbits = enumerate_periodic_orbits(no_11_sft, 2)
        assert sorted(orbits) == [((0,), 1), ((0, 1), 2)]

    def test_fixed_points_of_k_shift(self):
        fs = FullShift(3, (1 / 3, 1 / 3, 1 / 3))
        assert len(enumerate_periodic_orbits(fs, 1)) == 3

    def test_words_admissible_and_non_cyclic_equivalent(self, no_11_sft):
        orbits = enumerate_periodic_orbits(no_11_sft, 6)
        seen = set()
        for word, period in orbits:
            assert len(word) == period
            cyclic = word + word
            for a, b in zip(cyclic, cyclic[1:]):
                assert no_11_sft.adjacency[a][b] == 1
            rotations = {word[i:] + word[:i] for i in range(len(word))}
            assert not (rotations & seen)
            seen |= rotations

    def test_rational_rotation_returns_one_orbit(self):
        rot = CircleRotation.from_string("0.25")
        orbits = enumerate_periodic_orbits(rot, 4)
        assert orbits == [((0.0, 0.25, 0.5, 0.75), 4)]

    def test_irrational_rotation_returns_empty(self):
        rot = CircleRotation(0.1234567891011)
        assert enumerate_periodic_orbits(rot, 10) == []

    def test_unsupported_system_raises(self, unit_suspension):
        with pytest.raises(ValueError, match="not enumerable"):
            enumerate_periodic_orbits(unit_suspension, 2)


class TestValidation:
    def test_bad_weights_rejected(self):
        with pytest.raises(ValueError, match="sum to 1"):
            FullShift(2, (0.5, 0.6))

    def test_empty_row_rejected(self):
        with pytest.raises(ValueError, match="needs a 1"):
            SubshiftOfFiniteType.from_matrix([[1, 1], [0, 0]])

    def test_markov_on_forbidden_transition_rejected(self):
        with pytest.raises(ValueError, match="forbidden transition"):
            SubshiftOfFiniteType.from_matrix([[1, 1], [1, 0]], markov=[[0.5, 0.5], [0.5, 0.5]])

    def test_roof_must_be_positive(self, bernoulli_half):
        with pytest.raises(ValueError, match="bounded away"):
            Suspension(bernoulli_half, 0.0)
