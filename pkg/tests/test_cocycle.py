from __future__ import annotations

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from cocstab import (
    CirclePoint,
    CocycleHandle,
    DoublingMap,
    FlowPoint,
    Generator,
    apply_to_vector,
    evaluate_product,
    evaluate_propagator,
    fit_exponential_bound,
    sample_point,
    step_n,
    verify_cocycle_law,
)
from cocstab.cocycle import matrix_log_norms, propagator_at_times
from cocstab.expressions import ExpressionError, compile_entry
from cocstab.scaled import relative_difference


class TestProducts:
    def test_scalar_power_log_norm(self, bernoulli_half):
        handle = CocycleHandle(bernoulli_half, Generator.constant(0.5 * np.eye(2)))
        q = sample_point(bernoulli_half, 0)
        assert evaluate_product(handle, q, 10).log_norm == pytest.approx(10 * np.log(0.5), abs=1e-12)

    def test_time_zero_is_identity(self, diagonal_handle, bernoulli_half):
        q = sample_point(bernoulli_half, 1)
        product = evaluate_product(diagonal_handle, q, 0)
        assert product.log_norm == 0.0
        assert np.array_equal(product.to_matrix(), np.eye(2))

    def test_word_product_matches_direct_oracle(self, bernoulli_half):
        a0 = np.array([[0.3, 0.1], [0.0, 0.4]])
        a1 = np.array([[0.2, 0.0], [0.5, 0.1]])
        handle = CocycleHandle(bernoulli_half, Generator.per_symbol([a0, a1]))
        q = bernoulli_half.point_from_word([0, 1, 1, 0], tail_seed=3)
        produced = evaluate_product(handle, q, 4).to_matrix()
        direct = a0 @ a1 @ a1 @ a0
        assert np.allclose(produced, direct, rtol=1e-12)

    def test_one_step_equals_generator(self, diagonal_handle, bernoulli_half):
        q = bernoulli_half.point_from_word([1, 0], tail_seed=2)
        assert np.allclose(evaluate_product(diagonal_handle, q, 1).to_matrix(), np.diag([0.3, 0.8]))

    def test_diagonal_fast_path_matches_generic(self, diagonal_handle, bernoulli_half):
        q = sample_point(bernoulli_half, 5)
        times = [0, 3, 17, 64, 200]
        fast = matrix_log_norms(diagonal_handle, q, times)
        slow = [evaluate_product(diagonal_handle, q, n).log_norm for n in times]
        assert np.allclose(fast, slow, atol=1e-12)

    def test_zero_generator_gives_minus_inf(self, bernoulli_half):
        handle = CocycleHandle(bernoulli_half, Generator.constant(np.zeros((2, 2))))
        q = sample_point(bernoulli_half, 1)
        assert evaluate_product(handle, q, 3).log_norm == float("-inf")


class TestVectorAction:
    def test_diagonal_action(self, bernoulli_half):
        handle = CocycleHandle(bernoulli_half, Generator.constant(np.diag([0.5, 0.25])))
        q = sample_point(bernoulli_half, 2)
        _, logmag = apply_to_vector(handle, q, 4, np.array([1.0, 0.0]))
        assert logmag == pytest.approx(4 * np.log(0.5), abs=1e-12)

    def test_time_zero_returns_input(self, diagonal_handle, bernoulli_half):
        q = sample_point(bernoulli_half, 3)
        unit, logmag = apply_to_vector(diagonal_handle, q, 0, np.array([3.0, 4.0]))
        assert logmag == pytest.approx(np.log(5.0), abs=1e-12)
        assert np.allclose(unit, [0.6, 0.8])

    def test_agrees_with_matrix_product(self, bernoulli_half):
        rng = np.random.default_rng(8)
        mats = [0.6 * rng.standard_normal((2, 2)) for _ in range(2)]
        handle = CocycleHandle(DoublingMap(), Generator.per_symbol(mats))
        q = sample_point(DoublingMap(), 4)
        x = np.array([0.3, -1.2])
        unit, logmag = apply_to_vector(handle, q, 20, x)
        expected_unit, expected_log = evaluate_product(handle, q, 20).apply(x)
        assert logmag == pytest.approx(expected_log, rel=1e-10)
        assert np.allclose(unit, expected_unit, atol=1e-10)

    def test_zero_vector_returns_sentinel(self, diagonal_handle, bernoulli_half):
        q = sample_point(bernoulli_half, 3)
        _, logmag = apply_to_vector(diagonal_handle, q, 5, np.zeros(2))
        assert logmag == float("-inf")

    def test_dimension_mismatch_rejected(self, diagonal_handle, bernoulli_half):
        q = sample_point(bernoulli_half, 3)
        with pytest.raises(ValueError, match="shape"):
            apply_to_vector(diagonal_handle, q, 5, np.ones(3))


class TestCocycleLaw:
    def test_constant_generator_residual_is_rounding(self, constant_half_handle):
        assert verify_cocycle_law(constant_half_handle, 20, seed=1) <= 1e-13

    def test_locally_constant_sft_residual(self, no_11_sft):
        handle = CocycleHandle(
            no_11_sft,
            Generator.per_symbol([np.array([[0.4, 0.2], [0.0, 0.7]]), np.array([[0.1, 0.0], [0.3, 0.5]])]),
        )
        assert verify_cocycle_law(handle, 100, seed=2) <= 1e-12

    def test_suspension_flow_residual(self, cosine_flow_handle, unit_suspension):
        q = FlowPoint(CirclePoint(0.2), 0.0)
        whole = evaluate_propagator(cosine_flow_handle, q, 2.0)
        first = evaluate_propagator(cosine_flow_handle, q, 0.7)
        second = evaluate_propagator(cosine_flow_handle, unit_suspension.flow(q, 0.7), 1.3)
        assert relative_difference(whole, second.matmul(first)) <= 1e-8
        assert verify_cocycle_law(cosine_flow_handle, 5, seed=3) <= 1e-8

    def test_submultiplicativity_on_sampled_triples(self, diagonal_handle, bernoulli_half):
        rng = np.random.default_rng(9)
        for _ in range(50):
            q = bernoulli_half.sample_point(rng)
            n, m = int(rng.integers(0, 20)), int(rng.integers(0, 20))
            whole = evaluate_product(diagonal_handle, q, n + m).log_norm
            first = evaluate_product(diagonal_handle, q, m).log_norm
            second = evaluate_product(diagonal_handle, step_n(bernoulli_half, q, m), n).log_norm
            assert whole <= first + second + 1e-10


class TestPropagator:
    def test_scalar_decay(self, decay_flow_handle, unit_suspension):
        q = sample_point(unit_suspension, 2)
        assert evaluate_propagator(decay_flow_handle, q, 3.0).log_norm == pytest.approx(-3.0, abs=1e-8)

    def test_time_zero_identity(self, decay_flow_handle, unit_suspension):
        q = sample_point(unit_suspension, 2)
        assert evaluate_propagator(decay_flow_handle, q, 0.0).log_norm == 0.0

    def test_constant_matrix_semigroup(self, unit_suspension):
        g = np.array([[-1.0, 0.5], [0.0, -0.4]])
        handle = CocycleHandle(unit_suspension, Generator.constant(g), time_kind="continuous")
        q = sample_point(unit_suspension, 7)
        whole = evaluate_propagator(handle, q, 1.0)
        half = evaluate_propagator(handle, q, 0.5)
        half2 = evaluate_propagator(handle, unit_suspension.flow(q, 0.5), 0.5)
        assert relative_difference(whole, half2.matmul(half)) <= 1e-8
        assert np.allclose(whole.to_matrix(), expm(g), rtol=1e-10)

    def test_rotation_driven_field_matches_reference_integrator(self, unit_suspension):
        handle = CocycleHandle(
            unit_suspension, Generator.closed_form([["sin(2*pi*q)"]]), time_kind="continuous"
        )
        q = FlowPoint(CirclePoint(0.3), 0.0)
        ours = evaluate_propagator(handle, q, 10.0).log_norm

        def rhs(t, y):
            return [np.sin(2 * np.pi * ((0.3 + 0.1 * t) % 1.0)) * y[0]]

        reference = solve_ivp(rhs, (0.0, 10.0), [1.0], rtol=1e-12, atol=1e-14)
        assert ours == pytest.approx(float(np.log(reference.y[0, -1])), abs=1e-6)

    def test_checkpoint_times_snap_to_grid(self, decay_flow_handle, unit_suspension):
        q = sample_point(unit_suspension, 1)
        mats, actual = propagator_at_times(decay_flow_handle, q, [0.5, 1.0, 2.0])
        assert np.allclose(actual, [0.5, 1.0, 2.0], atol=1e-9)
        assert mats[1].log_norm == pytest.approx(-1.0, abs=1e-8)

    def test_per_symbol_field_over_shift_suspension(self, bernoulli_half):
        susp_shift = __import__("cocstab").Suspension(bernoulli_half, 1.0)
        handle = CocycleHandle(
            susp_shift, Generator.per_symbol([[[-1.0]], [[-2.0]]]), time_kind="continuous"
        )
        q = FlowPoint(bernoulli_half.point_from_word([0, 1, 0], tail_seed=1), 0.0)
        # piecewise-constant rates integrate to the sum over visited symbols
        assert evaluate_propagator(handle, q, 3.0).log_norm == pytest.approx(-(1 + 2 + 1), abs=1e-6)


class TestExponentialBound:
    def test_decaying_field_fits_trivial_bound(self, decay_flow_handle):
        K, omega = fit_exponential_bound(decay_flow_handle)
        assert K >= 1.0
        assert omega == pytest.approx(0.0, abs=1e-8)

    def test_bound_holds_on_sampled_times(self, cosine_flow_handle, unit_suspension):
        K, omega = fit_exponential_bound(cosine_flow_handle)
        rng = np.random.default_rng(4)
        for _ in range(10):
            q = unit_suspension.sample_point(rng)
            t = float(rng.uniform(0.0, 5.0))
            log_norm = evaluate_propagator(cosine_flow_handle, q, t).log_norm
            assert log_norm <= np.log(K) + omega * t + 1e-9


class TestExpressionGrammar:
    def test_whitelisted_functions_evaluate(self):
        fn = compile_entry("exp(-1+0.5*cos(2*pi*q))")
        assert fn(0.0) == pytest.approx(np.exp(-0.5))

    def test_rejects_unknown_names(self):
        with pytest.raises(ExpressionError, match="only q and pi"):
            compile_entry("q + eps")

    def test_rejects_calls_outside_whitelist(self):
        with pytest.raises(ExpressionError, match="sin/cos/exp"):
            compile_entry("__import__('os')")

    def test_rejects_attribute_access(self):
        with pytest.raises(ExpressionError):
            compile_entry("q.real")


class TestHandleValidation:
    def test_per_symbol_needs_matching_alphabet(self, bernoulli_half):
        with pytest.raises(ValueError, match="one matrix per alphabet symbol"):
            CocycleHandle(bernoulli_half, Generator.per_symbol([np.eye(2)] * 3))

    def test_closed_form_needs_circle_coordinate(self, bernoulli_half):
        with pytest.raises(ValueError, match="circle coordinate"):
            CocycleHandle(bernoulli_half, Generator.closed_form([["q"]]))

    def test_continuous_needs_suspension(self, bernoulli_half):
        with pytest.raises(ValueError, match="suspension"):
            CocycleHandle(bernoulli_half, Generator.constant([[1.0]]), time_kind="continuous")

    def test_nonfinite_matrix_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            Generator.constant([[np.inf]])
