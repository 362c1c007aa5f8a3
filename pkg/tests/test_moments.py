from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import derivative_moment_joint_gaussian

from pamfk import (
    Bounded,
    CovarianceModel,
    DerivativeSpec,
    DomainError,
    MCConfig,
    NumericalError,
    SignedMeasure,
    SubGaussian,
    corollary_bound,
    corollary_sweep,
    heat_convolve,
    heat_kernel,
    moment_derivative,
    moment_u_bridge,
    moment_u_free,
    second_moment_series,
)

GAUSS = CovarianceModel.gaussian(1.0)
ONE = SignedMeasure.constant(1.0)
COSINE = SignedMeasure.from_density(lambda y: np.cos(2.0 * y[:, 0]), Bounded(1.0), name="cos")
SMALL = MCConfig(samples=4000, steps_per_segment=32, seed=3)


def within(est, exact, k=4.0):
    return abs(est.mean - exact) <= k * est.standard_error + 1e-12


class TestConfig:
    @pytest.mark.parametrize("kw", [{"samples": 1}, {"workers": 0}, {"seed": -1}, {"steps_per_segment": 0}])
    def test_rejects(self, kw):
        with pytest.raises(DomainError):
            MCConfig(**kw)

    def test_replace(self):
        assert SMALL.replace(seed=9).seed == 9 and SMALL.replace(seed=9).samples == SMALL.samples


class TestZeroModel:
    """Without noise every representation collapses to the heat semigroup."""

    def test_free(self):
        est = moment_u_free(3, 0.4, 0.2, COSINE, CovarianceModel.zero(), 0.1, SMALL)
        assert est.standard_error == 0 and est.details["exact"]
        assert est.mean == pytest.approx((math.exp(-0.8) * math.cos(0.4)) ** 3, rel=1e-9)

    def test_bridge_dirac(self):
        est = moment_u_bridge(2, 1.0, 0.5, SignedMeasure.dirac(0.0), CovarianceModel.zero(), 0.1, SMALL)
        assert est.mean == pytest.approx(heat_kernel(1.0, 0.5) ** 2, rel=1e-13)

    def test_derivative(self):
        spec = DerivativeSpec((0.2,), [[0.3]], k=2)
        est = moment_derivative(spec, 1.0, 0.0, SignedMeasure.dirac(0.0), CovarianceModel.zero(), 0.1, SMALL)
        expect = (heat_kernel(0.8, -0.3) * heat_kernel(0.2, 0.3)) ** 2
        assert est.mean == pytest.approx(expect, rel=1e-12)


class TestFirstMoment:
    def test_free_recovers_heat_flow(self):
        est = moment_u_free(1, 0.4, 0.3, COSINE, CovarianceModel.white_noise(), 0.05, SMALL)
        assert est.representation_tag == "free_bm"
        assert within(est, math.exp(-0.8) * math.cos(0.6))

    def test_bridge_mixed_initial_data(self):
        u0 = SignedMeasure.dirac(0.3) + ONE
        est = moment_u_bridge(1, 0.5, 0.0, u0, GAUSS, 0.1, SMALL)
        assert within(est, heat_kernel(0.5, 0.3) + 1.0)

    def test_bridge_signed_atoms_exact_sum(self):
        u0 = SignedMeasure.atoms([[0.5], [-0.5]], [1.0, -2.0])
        est = moment_u_bridge(1, 0.5, 0.1, u0, GAUSS, 0.1, SMALL)
        # k = 1 has no interaction and the atom sum is exact
        assert est.mean == pytest.approx(heat_convolve(u0, 0.5, 0.1), rel=1e-12)


class TestSecondMoment:
    def test_free_against_chaos(self):
        mc = SMALL.replace(samples=20000)
        est = moment_u_free(2, 0.5, 0.0, ONE, GAUSS, 0.0, mc)
        ref = second_moment_series(0.5, 0.0, GAUSS, 8)
        assert within(est, ref.value)

    def test_bridge_against_free(self):
        mc = SMALL.replace(samples=20000)
        a = moment_u_free(2, 0.5, 0.0, ONE, GAUSS, 0.0, mc)
        b = moment_u_bridge(2, 0.5, 0.0, ONE, GAUSS, 0.0, mc.replace(seed=99))
        assert abs(a.mean - b.mean) <= 4 * math.hypot(a.standard_error, b.standard_error)
        assert b.representation_tag == "bridge_conditioned"

    def test_ladder_details(self):
        est = moment_u_free(2, 0.25, 0.0, ONE, CovarianceModel.white_noise(), [0.02, 0.01, 0.005], SMALL.replace(samples=500))
        d = est.details
        assert len(d["ladder_means"]) == 3 and len(d["ladder_standard_errors"]) == 3
        assert d["ladder_means"][0] < d["ladder_means"][1] < d["ladder_means"][2]
        assert sum(d["extrapolation_coefficients"]) == pytest.approx(1.0)
        assert d["extrapolation_residual"] >= 0

    def test_log_weight_stats(self):
        est = moment_u_free(2, 0.5, 0.0, ONE, GAUSS, 0.0, SMALL)
        # the pair integral is between 0 and t * Lambda(0)
        assert 0 < est.log_weight_stats.mean < 0.5 * GAUSS.at_zero(0.0)
        assert est.log_weight_stats.max <= 0.5 * GAUSS.at_zero(0.0)
        assert 0 < est.ess <= est.samples and not est.ess_flagged

    def test_overflow_is_reported(self):
        hot = CovarianceModel.gaussian(1e-5)
        with pytest.raises(NumericalError) as info:
            # one step per segment: both copies sit at x and at the atom, so G = t * Lambda(0) > 709
            moment_u_bridge(2, 20.0, 0.0, SignedMeasure.dirac(0.0), hot, 0.0, MCConfig(samples=8, steps_per_segment=1))
        assert "log_weights" in info.value.diagnostics


class TestDeterminism:
    @given(st.integers(0, 2**63), st.integers(1, 4))
    @settings(max_examples=5, deadline=None)
    def test_workers_do_not_change_results(self, seed, workers):
        mc = MCConfig(samples=300, steps_per_segment=8, seed=seed, block_size=64)
        a = moment_u_bridge(2, 0.5, 0.0, ONE, GAUSS, 0.0, mc)
        b = moment_u_bridge(2, 0.5, 0.0, ONE, GAUSS, 0.0, mc.replace(workers=workers))
        assert a.to_record() == b.to_record()

    def test_seed_matters(self):
        a = moment_u_free(2, 0.5, 0.0, ONE, GAUSS, 0.0, SMALL)
        b = moment_u_free(2, 0.5, 0.0, ONE, GAUSS, 0.0, SMALL.replace(seed=4))
        assert a.mean != b.mean


class TestGuards:
    def test_free_refuses_atoms(self):
        with pytest.raises(DomainError):
            moment_u_free(2, 0.5, 0.0, SignedMeasure.dirac(0.0), GAUSS, 0.0, SMALL)

    def test_free_refuses_unbounded_density(self):
        u0 = SignedMeasure.from_density(lambda y: np.exp(np.abs(y[:, 0])), SubGaussian(1.0, 1.0, 1.0))
        with pytest.raises(DomainError):
            moment_u_free(2, 0.5, 0.0, u0, GAUSS, 0.0, SMALL)

    def test_tuple_cap(self):
        u0 = SignedMeasure.atoms(np.linspace(-1, 1, 70)[:, None], np.ones(70))
        with pytest.raises(DomainError, match="tuple_cap"):
            moment_u_bridge(2, 0.5, 0.0, u0, GAUSS, 0.0, SMALL)

    def test_white_noise_needs_eps(self):
        with pytest.raises(DomainError):
            moment_u_free(2, 0.5, 0.0, ONE, CovarianceModel.white_noise(), 0.0, SMALL)

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            moment_u_free(2, 0.5, 0.0, SignedMeasure.constant(1.0, 2), GAUSS, 0.0, SMALL)

    @pytest.mark.parametrize("r", [(0.3, 0.2), (0.0,), (0.2, 0.2)])
    def test_derivative_spec_order(self, r):
        with pytest.raises(DomainError):
            DerivativeSpec(r, np.zeros((len(r), 1)))

    def test_derivative_horizon(self):
        spec = DerivativeSpec((0.2, 0.6), [[0.0], [0.0]])
        with pytest.raises(DomainError):
            moment_derivative(spec, 0.5, 0.0, SignedMeasure.dirac(0.0), GAUSS, 0.0, SMALL)


class TestDerivative:
    def test_against_joint_gaussian_oracle(self):
        """Pinned paths built two different ways must agree on the moment."""
        r, z = (0.1, 0.3), [[0.2], [-0.1]]
        spec = DerivativeSpec(r, z, k=2)
        mc = MCConfig(samples=20000, steps_per_segment=16, seed=21)
        est = moment_derivative(spec, 0.5, 0.0, SignedMeasure.dirac(0.0), GAUSS, 0.0, mc)
        ref, ref_se = derivative_moment_joint_gaussian(0.5, 0.0, r, np.ravel(z), 1.0, 16, 20000, seed=8)
        assert abs(est.mean - ref) <= 4 * math.hypot(est.standard_error, ref_se)
        assert est.details["order"] == 2 and est.representation_tag == "derivative"

    def test_bound_is_prefactor_times_convolution(self):
        spec = DerivativeSpec((0.2,), [[0.4]], k=2)
        b = corollary_bound(spec, 1.0, 0.0, SignedMeasure.dirac(0.0), 4.0)
        assert b == pytest.approx(2.0 * heat_kernel(0.2, 0.4) * heat_kernel(0.8, -0.4), rel=1e-12)

    def test_sweep(self):
        mc = MCConfig(samples=1000, steps_per_segment=8, seed=5)
        sw = corollary_sweep(0.5, 0.0, SignedMeasure.dirac(0.0), GAUSS, 0.0, mc, [0.1, 0.2], [[0.0], [0.3]])
        assert sw.ratios.shape == (2, 2)
        # noise only raises moments, so every ratio is at least one
        assert np.all(sw.ratios > 1.0)
        assert sw.constant == pytest.approx(sw.ratios.max() ** 2)
