from __future__ import annotations

import numpy as np
import pytest

from cocstab import (
    CocycleHandle,
    Generator,
    build_tempered_envelope,
    compute_envelope,
    drift_check,
    envelope_along_orbit,
    evaluate_product,
    sample_point,
)
from cocstab.cocycle import matrix_log_norms
from tests.conftest import DIAG_EXPONENT

EPS = abs(DIAG_EXPONENT) / 2.0


class TestEnvelope:
    def test_contracting_constant_peaks_at_zero(self, constant_half_handle, bernoulli_half):
        q = sample_point(bernoulli_half, 1)
        env = compute_envelope(constant_half_handle, q, np.log(0.5), 0.1)
        assert env.log_value == 0.0 and env.argmax == 0 and env.converged

    def test_triangular_constant_peak_matches_direct_scan(self, bernoulli_half):
        handle = CocycleHandle(bernoulli_half, Generator.constant([[0.5, 10.0], [0.0, 0.5]]))
        q = sample_point(bernoulli_half, 2)
        lam = np.log(0.5)
        env = compute_envelope(handle, q, lam, 0.05, n_max=1024)
        scan = [evaluate_product(handle, q, n).log_norm - n * (lam + 0.05) for n in range(1000)]
        assert env.argmax == int(np.argmax(scan)) > 0
        assert env.log_value == pytest.approx(max(scan), abs=1e-10)

    def test_diagonal_fixture_finite_at_sampled_points(self, diagonal_handle, bernoulli_half):
        rng = np.random.default_rng(3)
        for _ in range(100):
            q = diagonal_handle.system.sample_point(rng)
            env = compute_envelope(diagonal_handle, q, DIAG_EXPONENT, EPS)
            assert env.converged and np.isfinite(env.log_value)
            assert env.log_value >= 0.0  # the n = 0 term forces C >= 1

    def test_definition_bound_is_exact(self, diagonal_handle, bernoulli_half):
        q = sample_point(bernoulli_half, 4)
        env = compute_envelope(diagonal_handle, q, DIAG_EXPONENT, EPS)
        times = np.arange(env.n_max + 1)
        norms = matrix_log_norms(diagonal_handle, q, times)
        assert np.all(norms <= env.log_value + times * (DIAG_EXPONENT + EPS) + 1e-12)

    def test_monotone_in_epsilon(self, diagonal_handle, bernoulli_half):
        q = sample_point(bernoulli_half, 5)
        tighter = compute_envelope(diagonal_handle, q, DIAG_EXPONENT, EPS / 2)
        looser = compute_envelope(diagonal_handle, q, DIAG_EXPONENT, EPS)
        assert looser.log_value <= tighter.log_value

    def test_stability_regime_required(self, diagonal_handle, bernoulli_half):
        q = sample_point(bernoulli_half, 6)
        with pytest.raises(ValueError, match="stability regime"):
            compute_envelope(diagonal_handle, q, DIAG_EXPONENT, 2 * abs(DIAG_EXPONENT))


class TestDrift:
    def test_constant_cocycle_has_zero_slope(self, constant_half_handle, bernoulli_half):
        q = sample_point(bernoulli_half, 1)
        report = drift_check(constant_half_handle, q, np.log(0.5), 0.1, n_max=128)
        assert report.slope == pytest.approx(0.0, abs=1e-12)
        assert report.endpoint_rate == pytest.approx(0.0, abs=1e-12)

    def test_diagonal_fixture_slope_vanishes(self, diagonal_handle, bernoulli_half):
        q = sample_point(bernoulli_half, 7)
        report = drift_check(diagonal_handle, q, DIAG_EXPONENT, EPS, n_max=2**10)
        assert abs(report.slope) <= 0.05
        assert abs(report.endpoint_rate) <= 0.05

    def test_one_step_increment_bounded_by_psi(self, diagonal_handle, bernoulli_half):
        q = sample_point(bernoulli_half, 8)
        report = drift_check(diagonal_handle, q, DIAG_EXPONENT, EPS, n_max=512)
        expected_psi = max(0.0, -(DIAG_EXPONENT + EPS) + np.log(0.9))
        assert report.psi == pytest.approx(expected_psi, abs=1e-12)
        assert report.max_increment <= report.psi + 1e-9


class TestTemperedEnvelope:
    def test_constant_gives_flat_unit_envelope(self, constant_half_handle, bernoulli_half):
        q = sample_point(bernoulli_half, 1)
        tempered = build_tempered_envelope(constant_half_handle, q, np.log(0.5), 0.1, horizon=256)
        assert np.allclose(tempered.log_tempered, 0.0, atol=1e-12)
        assert tempered.decay_violation <= 1e-12
        assert tempered.growth_violation <= 1e-12

    def test_growth_inequality_is_algebraically_exact(self, diagonal_handle, bernoulli_half):
        q = sample_point(bernoulli_half, 9)
        tempered = build_tempered_envelope(diagonal_handle, q, DIAG_EXPONENT, EPS, horizon=512)
        assert tempered.growth_violation <= 1e-12

    def test_decay_inequality_on_window(self, diagonal_handle, bernoulli_half):
        q = sample_point(bernoulli_half, 10)
        tempered = build_tempered_envelope(diagonal_handle, q, DIAG_EXPONENT, EPS, horizon=512)
        assert tempered.decay_violation <= 1e-12

    def test_tempered_dominates_envelope(self, diagonal_handle, bernoulli_half):
        q = sample_point(bernoulli_half, 11)
        tempered = build_tempered_envelope(diagonal_handle, q, DIAG_EXPONENT, EPS, horizon=512)
        half = len(tempered.log_tempered)
        assert np.all(tempered.log_tempered >= tempered.log_envelope[:half] - 1e-12)

    def test_too_small_horizon_rejected(self, diagonal_handle, bernoulli_half):
        with pytest.raises(ValueError, match="at least 256"):
            build_tempered_envelope(diagonal_handle, sample_point(bernoulli_half, 1), DIAG_EXPONENT, EPS, horizon=64)

    def test_unstabilized_sup_rejected(self, bernoulli_half):
        # growth faster than the eps discount keeps the sup on the horizon edge
        handle = CocycleHandle(bernoulli_half, Generator.constant([[1.2]]))
        q = sample_point(bernoulli_half, 1)
        with pytest.raises(ValueError, match="horizon too small"):
            build_tempered_envelope(handle, q, np.log(1.2), 0.05, horizon=256, envelope_n_max=64)


class TestOrbitEnvelopes:
    def test_vectorized_matches_pointwise(self, diagonal_handle, bernoulli_half):
        q = sample_point(bernoulli_half, 12)
        orbit = envelope_along_orbit(diagonal_handle, q, DIAG_EXPONENT, EPS, positions=16, n_max=128)
        point = q
        for j in range(16):
            single = compute_envelope(diagonal_handle, point, DIAG_EXPONENT, EPS, n_max=128)
            assert orbit.log_envelope[j] == pytest.approx(single.log_value, abs=1e-12)
            point = bernoulli_half.step(point)

    def test_generic_path_matches_fast_path(self, bernoulli_half):
        # non-diagonal generator exercises the per-position loop
        gen = Generator.per_symbol([np.array([[0.5, 0.2], [0.0, 0.4]]), np.array([[0.3, 0.0], [0.1, 0.6]])])
        handle = CocycleHandle(bernoulli_half, gen)
        q = sample_point(bernoulli_half, 13)
        orbit = envelope_along_orbit(handle, q, np.log(0.6), 0.1, positions=8, n_max=64)
        point = q
        for j in range(8):
            single = compute_envelope(handle, point, np.log(0.6), 0.1, n_max=64)
            assert orbit.log_envelope[j] == pytest.approx(single.log_value, abs=1e-12)
            point = bernoulli_half.step(point)
