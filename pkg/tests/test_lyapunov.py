from __future__ import annotations

import numpy as np
import pytest

from cocstab import (
    CircleRotation,
    CocycleHandle,
    DoublingMap,
    FullShift,
    Generator,
    closed_form_exponent,
    estimate_exponent,
    estimate_exponent_flow,
    fekete_upper_bounds,
)
from tests.conftest import DIAG_EXPONENT


class TestClosedForms:
    def test_triangular_constant_spectral_radius(self, bernoulli_half):
        handle = CocycleHandle(bernoulli_half, Generator.constant([[0.5, 1.0], [0.0, 0.5]]))
        assert closed_form_exponent(handle) == pytest.approx(np.log(0.5))

    def test_weighted_scalar_average(self):
        fs = FullShift(2, (0.3, 0.7))
        handle = CocycleHandle(fs, Generator.per_symbol([[[2.0]], [[0.25]]]))
        expected = 0.3 * np.log(2.0) + 0.7 * np.log(0.25)
        assert closed_form_exponent(handle) == pytest.approx(expected)

    def test_diagonal_family_takes_best_coordinate(self, diagonal_handle):
        assert closed_form_exponent(diagonal_handle) == pytest.approx(DIAG_EXPONENT)

    def test_noncommuting_family_is_unavailable(self, bernoulli_half):
        gen = Generator.per_symbol([[[0.0, 1.0], [0.3, 0.0]], [[0.5, 0.1], [0.0, 0.5]]])
        assert closed_form_exponent(CocycleHandle(bernoulli_half, gen)) is None

    def test_scalar_rotation_integral(self):
        rot = CircleRotation.from_string("0.137")
        handle = CocycleHandle(rot, Generator.closed_form([["exp(-1+0.5*cos(2*pi*q))"]]))
        assert closed_form_exponent(handle) == pytest.approx(-1.0, abs=1e-10)

    def test_continuous_constant_field_spectrum(self, decay_flow_handle):
        assert closed_form_exponent(decay_flow_handle) == pytest.approx(-1.0)


class TestDiscreteEstimates:
    def test_constant_is_exact_with_zero_dispersion(self, bernoulli_half):
        handle = CocycleHandle(bernoulli_half, Generator.constant(0.5 * np.eye(2)))
        est = estimate_exponent(handle, orbits=4, n_max=1024, seed=1)
        assert est.value == pytest.approx(np.log(0.5), abs=1e-12)
        assert est.dispersion == 0.0
        for _, rate in est.trajectory:
            assert rate == pytest.approx(np.log(0.5), abs=1e-12)

    def test_diagonal_fixture_within_error_budget(self, diagonal_handle):
        orbits, n_max = 64, 2**14
        est = estimate_exponent(diagonal_handle, orbits=orbits, n_max=n_max, seed=42)
        budget = 5.0 / np.sqrt(orbits * n_max) + 10.0 / n_max
        assert abs(est.value - DIAG_EXPONENT) <= budget
        assert abs(est.value - DIAG_EXPONENT) <= 0.01

    def test_scalar_rotation_birkhoff_average(self):
        rot = CircleRotation.from_string("0.3819660112501051")
        handle = CocycleHandle(rot, Generator.closed_form([["exp(-1+0.5*cos(2*pi*q))"]]))
        est = estimate_exponent(handle, orbits=16, n_max=2**14, seed=3)
        assert abs(est.value - (-1.0)) <= 1e-3

    def test_scale_equivariance_is_exact(self, bernoulli_half):
        gen = Generator.per_symbol([np.diag([0.9, 0.2]), np.diag([0.3, 0.8])])
        base = estimate_exponent(CocycleHandle(bernoulli_half, gen), orbits=8, n_max=512, seed=7)
        c = 1.7
        scaled = estimate_exponent(CocycleHandle(bernoulli_half, gen.scaled(c)), orbits=8, n_max=512, seed=7)
        assert scaled.value - base.value == pytest.approx(np.log(c), abs=1e-12)

    def test_dispersion_shrinks_with_horizon_on_doubling(self):
        dm = DoublingMap()
        gen = Generator.per_symbol([np.diag([0.9, 0.2]), np.diag([0.3, 0.8])])
        handle = CocycleHandle(dm, gen)
        short = estimate_exponent(handle, orbits=32, n_max=256, seed=5)
        long = estimate_exponent(handle, orbits=32, n_max=2**13, seed=5)
        assert long.dispersion < short.dispersion

    def test_zero_product_reports_minus_inf(self, bernoulli_half):
        handle = CocycleHandle(bernoulli_half, Generator.constant(np.zeros((2, 2))))
        est = estimate_exponent(handle, orbits=2, n_max=16, seed=1)
        assert est.value == float("-inf")
        assert est.degenerate_zero

    def test_trajectory_records_doubling_times(self, diagonal_handle):
        est = estimate_exponent(diagonal_handle, orbits=4, n_max=1024, seed=2)
        assert [t for t, _ in est.trajectory] == [8, 16, 32, 64, 128, 256, 512, 1024]

    def test_preconditions(self, diagonal_handle):
        with pytest.raises(ValueError, match="n_max"):
            estimate_exponent(diagonal_handle, orbits=4, n_max=4, seed=1)
        with pytest.raises(ValueError, match="orbits"):
            estimate_exponent(diagonal_handle, orbits=0, n_max=64, seed=1)


class TestFlowEstimates:
    def test_constant_decay_field(self, decay_flow_handle):
        est = estimate_exponent_flow(decay_flow_handle, orbits=2, t_max=16.0, seed=4)
        assert est.value == pytest.approx(-1.0, abs=1e-10)

    def test_rotation_driven_field_average(self, unit_suspension):
        handle = CocycleHandle(
            unit_suspension,
            Generator.closed_form([["-1+sin(2*pi*q)"]]),
            time_kind="continuous",
            step_h=1e-3,
        )
        # 30 time units cover three whole coordinate periods, so the
        # oscillatory part of the quadrature cancels exactly
        est = estimate_exponent_flow(handle, orbits=4, t_max=30.0, seed=5)
        assert abs(est.value - (-1.0)) <= 1e-3

    def test_time_one_restriction_matches_continuous(self, unit_suspension):
        g = np.array([[-0.8, 0.3], [0.0, -0.5]])
        handle = CocycleHandle(unit_suspension, Generator.constant(g), time_kind="continuous")
        est = estimate_exponent_flow(handle, orbits=1, t_max=32.0, seed=6)
        assert est.restriction_value == pytest.approx(est.value, abs=1e-6)


class TestConsistencyAcrossModules:
    def test_fekete_bound_dominates_estimate(self, diagonal_handle):
        est = estimate_exponent(diagonal_handle, orbits=16, n_max=4096, seed=9)
        bounds = fekete_upper_bounds(diagonal_handle, [1, 2, 4, 8])
        assert min(bounds.values()) >= est.value - 1e-3
