from __future__ import annotations

import math

import numpy as np
import pytest

from pamfk import DomainError, SchemeParams, StreamKey, derive_stream, direct_moment, heat_kernel, lattice_second_moment, simulate_she_1d
from pamfk.spde import simulate_she_batch


class TestSchemeParams:
    def test_stability(self):
        with pytest.raises(DomainError):
            SchemeParams(0.1, 0.006, 2.0)

    def test_grid_divides(self):
        with pytest.raises(DomainError):
            SchemeParams(0.3, 0.01, 1.0)

    def test_time_multiple(self):
        with pytest.raises(DomainError):
            SchemeParams(0.1, 0.005, 2.0).steps(0.0123)

    def test_node_near_centre(self):
        p = SchemeParams(0.1, 0.005, 2.0)
        assert p.x[p.node(0.0)] == pytest.approx(0.0)
        with pytest.raises(DomainError):
            p.node(1.5)

    def test_unknown_initial_data(self):
        with pytest.raises(DomainError):
            SchemeParams(0.1, 0.005, 2.0).initial("two")


class TestDeterministicLimit:
    def test_flat_stays_flat(self):
        f = simulate_she_1d(0.1, 0.005, 0.5, 2.0, "one", None, noise=False)
        assert np.allclose(f.values, 1.0, atol=1e-13)

    def test_delta_approaches_heat_kernel(self):
        """Error at x = 0 shrinks by about 4 per halving of dx."""
        errs = []
        for dx in (0.1, 0.05, 0.025):
            f = simulate_she_1d(dx, dx * dx / 4, 0.5, 4.0, "delta", None, noise=False)
            errs.append(abs(f.at(0.0) - heat_kernel(0.5, 0.0)))
        assert errs[2] < errs[1] < errs[0]
        assert errs[0] / errs[1] > 3.0 and errs[1] / errs[2] > 3.0

    def test_noise_needs_stream(self):
        with pytest.raises(DomainError):
            simulate_she_1d(0.1, 0.005, 0.1, 2.0, "one", None)


class TestNoise:
    def test_batch_matches_single_runs(self):
        p = SchemeParams(0.2, 0.02, 2.0)
        batch = simulate_she_batch(p, 0.2, "one", 12, [0, 5])
        single = simulate_she_1d(0.2, 0.02, 0.2, 2.0, "one", derive_stream(StreamKey(12, 5, 0)))
        assert np.allclose(batch[1], single.values, rtol=1e-14)

    def test_first_moment_is_heat_flow(self):
        p = SchemeParams(0.1, 0.005, 2.0)
        est = direct_moment(1, 0.25, 0.0, p, "one", reps=2000, seed=1)
        assert abs(est.mean - 1.0) < 4 * est.standard_error
        assert est.representation_tag == "spde_direct"

    def test_second_moment_matches_lattice_recursion(self):
        p = SchemeParams(0.1, 0.005, 2.0)
        exact = lattice_second_moment(p, 0.25, 0.0, "one")
        est = direct_moment(2, 0.25, 0.0, p, "one", reps=6000, seed=2)
        assert abs(est.mean - exact) < 4 * est.standard_error

    def test_lattice_converges_towards_continuum(self):
        exact = 2 * math.exp(0.0625) * 0.5 * (1 + math.erf(math.sqrt(0.125) / math.sqrt(2)))
        vals = [lattice_second_moment(SchemeParams(dx, dx * dx / 2, 4.0), 0.25, 0.0, "one") for dx in (0.1, 0.05, 0.025)]
        gaps = [v - exact for v in vals]
        assert all(g > 0 for g in gaps) and gaps[2] < gaps[1] < gaps[0]

    def test_workers_do_not_change_results(self):
        p = SchemeParams(0.2, 0.02, 2.0)
        a = direct_moment(2, 0.2, 0.0, p, "one", reps=300, seed=4, block_size=64)
        b = direct_moment(2, 0.2, 0.0, p, "one", reps=300, seed=4, workers=3, block_size=64)
        assert a.to_record() == b.to_record()

    def test_order_limit(self):
        with pytest.raises(DomainError):
            direct_moment(4, 0.2, 0.0, SchemeParams(0.2, 0.02, 2.0), "one", reps=10, seed=0)
