import numpy as np
import pytest

from pardefl import (ConfigError, DegenerateSpectrumError, NumericalError,
                     Top1Config, contraction_estimate, exact_top1, hebb,
                     normalize, pow_iter, top1)
from pardefl.metrics import random_covariance, spectrum_expdecay


def tan_to_axis(v, u):
    """Tangent of the angle between v and the line spanned by unit u."""
    c = abs(float(v @ u))
    s = float(np.linalg.norm(v - float(v @ u) * u))
    return s / c


class TestConfig:
    def test_zero_steps_rejected(self):
        with pytest.raises(ConfigError):
            Top1Config(steps=0)

    def test_hebb_needs_eta(self):
        with pytest.raises(ConfigError):
            Top1Config(method="hebb", steps=3)

    def test_unknown_method(self):
        with pytest.raises(ConfigError):
            Top1Config(method="lanczos")


class TestPowerIteration:
    def test_tangent_halves_each_step(self):
        # diag(2,1): tan(theta_t) = (1/2)^t tan(theta_0), closed form
        sigma = np.diag([2.0, 1.0])
        v0 = normalize([1.0, 1.0])
        out = pow_iter(sigma, v0, 10)
        got = tan_to_axis(out, np.array([1.0, 0.0]))
        assert abs(got - 0.5 ** 10) <= 1e-10 * 0.5 ** 10

    def test_fixed_point(self, rng):
        sigma, truth = random_covariance(np.array([2.0, 1.0, 0.5]), seed=1)
        u = truth.vectors[0]
        for t_steps in (1, 7):
            assert np.allclose(pow_iter(sigma, u, t_steps), u, atol=1e-12)

    def test_converges_to_oracle(self, rng):
        d = 6
        sigma = np.diag([1.0] + [1e-6] * (d - 1))
        v0 = normalize(rng.standard_normal(d))
        out = pow_iter(sigma, v0, 50)
        e1 = np.eye(d)[0]
        assert min(np.linalg.norm(out - e1), np.linalg.norm(out + e1)) <= 1e-4

    def test_null_space_start(self):
        with pytest.raises(NumericalError):
            pow_iter(np.diag([1.0, 0.0]), np.array([0.0, 1.0]), 1)

    def test_zero_matrix_rejected(self):
        with pytest.raises(ConfigError):
            pow_iter(np.zeros((2, 2)), np.array([1.0, 0.0]), 1)

    def test_output_unit_norm(self, rng):
        for _ in range(10):
            d = int(rng.integers(2, 16))
            sigma, _ = random_covariance(np.sort(rng.uniform(0.1, 1, d))[::-1],
                                         seed=int(rng.integers(0, 100)))
            v0 = normalize(rng.standard_normal(d))
            out = pow_iter(sigma, v0, int(rng.integers(1, 6)))
            assert abs(np.linalg.norm(out) - 1.0) <= 1e-12

    def test_rate_on_diagonal(self, rng):
        # tangent contraction per step is exactly lambda_2/lambda_1
        for _ in range(10):
            lam = np.sort(rng.uniform(0.1, 2.0, 5))[::-1]
            sigma = np.diag(lam)
            v0 = normalize(rng.standard_normal(5))
            v0[0] = abs(v0[0]) + 0.3
            v0 = normalize(v0)
            before = pow_iter(sigma, v0, 3)
            after = pow_iter(sigma, before, 1)
            e1 = np.eye(5)[0]
            t0 = tan_to_axis(before, e1)
            t1 = tan_to_axis(after, e1)
            # the dominated components each shrink by lam_j/lam_1 <= lam_2/lam_1
            assert t1 <= (lam[1] / lam[0]) * t0 * (1.0 + 1e-10)

    def test_exact_rate_in_2d(self):
        sigma = np.diag([1.7, 0.6])
        v0 = normalize([0.9, 0.45])
        out = pow_iter(sigma, v0, 1)
        e1 = np.array([1.0, 0.0])
        ratio = tan_to_axis(out, e1) / tan_to_axis(v0, e1)
        assert abs(ratio - 0.6 / 1.7) <= 1e-10 * ratio

    def test_single_step_tangent_contraction(self, rng):
        # the true per-step guarantee: the tangent to the top eigenvector
        # contracts by at least the eigenvalue-magnitude ratio
        for _ in range(50):
            d = int(rng.integers(2, 16))
            spec = np.sort(rng.uniform(0.05, 1.0, d))[::-1]
            spec[0] = 1.0
            if (spec[0] - spec[1]) < 1e-6:
                continue
            sigma, truth = random_covariance(spec, seed=int(rng.integers(0, 10_000)))
            u = truth.vectors[0]
            v0 = normalize(u + 0.8 * rng.standard_normal(d))
            if float(v0 @ u) < 0.1:
                continue
            out = pow_iter(sigma, v0, 1)
            f = contraction_estimate(sigma).F
            assert tan_to_axis(out, u) <= f * tan_to_axis(v0, u) * (1 + 1e-10) + 1e-15


class TestHebb:
    def test_fixed_point(self):
        sigma, truth = random_covariance(np.array([2.0, 1.0]), seed=2)
        u = truth.vectors[0]
        assert np.allclose(hebb(sigma, u, 5, 0.7), u, atol=1e-12)

    def test_hand_single_step(self):
        # x + 0.5 Sigma x = (2, 1.5)/sqrt(2), normalized (0.8, 0.6)
        out = hebb(np.diag([2.0, 1.0]), normalize([1.0, 1.0]), 1, 0.5)
        assert np.allclose(out, [0.8, 0.6], atol=1e-15)

    def test_large_eta_is_power_step(self, rng):
        sigma, _ = random_covariance(np.array([1.5, 0.9, 0.3]), seed=5)
        v0 = normalize(rng.standard_normal(3))
        big = hebb(sigma, v0, 1, 1e3 / 1.5)
        power = pow_iter(sigma, v0, 1)
        angle = np.arccos(np.clip(abs(float(big @ power)), 0, 1))
        assert angle <= 1e-3

    def test_unit_output(self, rng):
        sigma, _ = random_covariance(np.array([1.0, 0.4]), seed=6)
        out = hebb(sigma, normalize(rng.standard_normal(2)), 4, 0.2)
        assert abs(np.linalg.norm(out) - 1.0) <= 1e-12


class TestTop1Dispatch:
    def test_power_dispatch(self, rng):
        sigma, _ = random_covariance(np.array([1.0, 0.5, 0.2]), seed=7)
        v0 = normalize(rng.standard_normal(3))
        cfg = Top1Config(method="power_iteration", steps=4)
        assert np.array_equal(top1(sigma, v0, cfg), pow_iter(sigma, v0, 4))

    def test_hebb_dispatch(self, rng):
        sigma, _ = random_covariance(np.array([1.0, 0.5, 0.2]), seed=8)
        v0 = normalize(rng.standard_normal(3))
        cfg = Top1Config(method="hebb", steps=3, eta=0.4)
        assert np.array_equal(top1(sigma, v0, cfg), hebb(sigma, v0, 3, 0.4))

    def test_exact_top1_matches_oracle(self):
        sigma, truth = random_covariance(np.array([1.0, 0.6, 0.3]), seed=9)
        got = exact_top1(sigma, truth.vectors[0])
        assert np.allclose(got, truth.vectors[0], atol=1e-12)


class TestContractionEstimate:
    def test_diagonal_ratio(self):
        assert contraction_estimate(np.diag([2.0, 1.0])).F == 0.5

    def test_expdecay_ratio(self):
        sigma = np.diag(spectrum_expdecay(6))
        est = contraction_estimate(sigma)
        assert abs(est.F - 1.0 / 1.1) <= 1e-12

    def test_zero_gap(self):
        with pytest.raises(DegenerateSpectrumError):
            contraction_estimate(np.diag([1.0, 1.0]))

    def test_magnitude_ordering(self):
        # a large negative eigenvalue dominates
        est = contraction_estimate(np.diag([-2.0, 1.0]))
        assert est.F == 0.5
