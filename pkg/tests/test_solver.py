import numpy as np
import pytest

from barenblatt import comparison as cmp
from barenblatt.profiles import RadialData, bump_data, const_data, log_tail_data, zero_data
from barenblatt.solver import (Grid, SolverConfig, SolverError, default_xi_max, run_sandwich,
                               sandwich_check, solve)
from barenblatt.special_functions import ModelParams

P5 = ModelParams(5, 1.0, 0.5)


def add_data(d1: RadialData, d2: RadialData) -> RadialData:
    return RadialData(lambda xi: d1.at_xi(xi) + d2.at_xi(xi), "sum",
                      {"family": "sum", "parts": [d1.descriptor, d2.descriptor]})


class TestConfig:
    def test_defaults(self):
        c = SolverConfig(t_end=1e4)
        assert c.xi_max == default_xi_max(1e4) == 810.0
        assert c.n_xi == 2048 and c.bc == "pinned"
        assert c.resolved_output_times()[0] == 0.0

    @pytest.mark.parametrize("kw", [dict(t_end=0), dict(bc="free"), dict(n_xi=4),
                                    dict(t_end=1e4, xi_max=12.0),
                                    dict(t_end=1, output_times=(0.5, 0.2)),
                                    dict(t_end=1, output_times=(2.0,))])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            SolverConfig(**kw)

    def test_grid_shape(self):
        g = Grid.build(SolverConfig(t_end=1.0, n_xi=257))
        assert g.s[0] == 0 and g.s[-1] == pytest.approx(40 + np.log(2))
        assert np.all(np.diff(g.s) > 0)
        assert g.xi[0] == -np.inf
        assert g.xi[-1] == pytest.approx(40.0, abs=1e-12)


class TestFixedPoints:
    def test_zero_stays_zero(self):
        tr = solve(zero_data(), SolverConfig(t_end=10.0), P5)
        assert np.max(np.abs(tr.phi)) <= 1e-6

    @pytest.mark.parametrize("c", [0.7, 2.0])
    def test_constant_preserved(self, c):
        tr = solve(const_data(c), SolverConfig(t_end=10.0), P5)
        assert np.max(np.abs(tr.phi[-1] - c)) <= 1e-6


class TestDynamics:
    def test_positivity_and_decay(self):
        cfg = SolverConfig(t_end=20.0, n_xi=513, output_times=(1.0, 5.0, 20.0))
        tr = solve(bump_data(), cfg, P5)
        assert tr.phi.min() >= -1e-10
        sup = tr.sup()
        assert np.all(np.diff(sup[1:]) < 0)

    def test_discrete_comparison(self):
        rng = np.random.default_rng(7)
        cfg = SolverConfig(t_end=0.5, n_xi=257, error_target=1e-6, output_times=(0.1, 0.5))
        for _ in range(3):
            ra = rng.uniform(0, 2)
            low = bump_data(rng.uniform(0.1, 2), ra, ra + rng.uniform(0.5, 3))
            high = add_data(low, log_tail_data(rng.uniform(0.1, 1), rng.uniform(0.1, 0.9)))
            t1, t2 = solve(low, cfg, P5), solve(high, cfg, P5)
            assert np.all(t1.phi <= t2.phi + 1e-6)

    def test_boundary_insensitivity(self):
        d = log_tail_data(1.0, 0.5)
        base = SolverConfig(t_end=10.0, n_xi=513, output_times=(10.0,))
        a = solve(d, base, P5)
        b = solve(d, base.with_(bc="zero-curvature"), P5)
        assert abs(a.phi[-1, 0] - b.phi[-1, 0]) < 1e-6

    def test_spatial_order(self):
        res = {}
        for n in (257, 513, 1025):
            cfg = SolverConfig(t_end=1.0, n_xi=n, output_times=(1.0,))
            res[n] = solve(bump_data(), cfg, P5).phi[-1]
        e1 = np.max(np.abs(res[513][::2] - res[257]))
        e2 = np.max(np.abs(res[1025][::2] - res[513]))
        assert e1 / e2 >= 3

    def test_deterministic(self):
        cfg = SolverConfig(t_end=0.2, n_xi=129)
        a, b = solve(bump_data(), cfg, P5), solve(bump_data(), cfg, P5)
        assert np.array_equal(a.phi, b.phi) and a.config_hash == b.config_hash

    def test_step_collapse_reported(self):
        with pytest.raises(SolverError):
            solve(bump_data(), SolverConfig(t_end=1.0, n_xi=129, error_target=1e-30), P5)

    def test_rejects_negative_data(self):
        neg = RadialData(lambda xi: -np.ones_like(xi), "neg", {})
        with pytest.raises(ValueError):
            solve(neg, SolverConfig(t_end=1.0, n_xi=129), P5)


@pytest.fixture(scope="module")
def traj():
    return solve(log_tail_data(1.0, 0.5), SolverConfig(t_end=2.0, n_xi=257), P5)


@pytest.fixture(scope="module")
def pair():
    d = log_tail_data(1.0, 0.5)
    sp = cmp.select_super_params(P5)
    upper = cmp.matched_super(sp.with_A(cmp.select_A(d, sp, 1.0)))
    sb = cmp.select_sub_params(P5)
    a = cmp.select_a(d, 1.0, sb)
    return d, sb, a, upper, cmp.sub_solution(sb.with_a(a))


class TestTrajectory:
    def test_views(self, traj):
        xi, chi = traj.chi(0)
        assert xi.size == chi.size == traj.phi.shape[1] - 1
        assert np.allclose(chi, log_tail_data(1.0, 0.5).at_xi(xi))
        v = traj.v(0)
        ok = np.isfinite(traj.r) & (traj.r < 1e100)
        assert np.all(v[ok] <= (traj.r[ok] ** 2 + 1.0) ** -1.5)
        assert traj.index_of(2.0) == traj.times.size - 1
        with pytest.raises(KeyError):
            traj.index_of(1.2345)

    def test_sup_equals_origin_for_nonincreasing_data(self, traj):
        assert np.allclose(traj.sup(), traj.origin())


class TestSandwich:
    def test_log_tail_between_bounds(self, pair):
        d, _, _, upper, lower = pair
        cfg = SolverConfig(t_end=10.0, n_xi=513, output_times=tuple(np.geomspace(0.1, 10, 6)))
        rep, tr = run_sandwich(d, cfg, P5, lower, upper)
        assert rep.passed
        assert rep.times.size == 7

    def test_zero_lower_bound(self, pair):
        d, _, _, upper, _ = pair
        tr = solve(d, SolverConfig(t_end=1.0, n_xi=257), P5)
        assert sandwich_check(tr, None, upper).passed

    def test_violated_ordering_stops_before_stepping(self, pair):
        d, sb, a, upper, _ = pair
        too_big = cmp.sub_solution(sb.with_a(min(10 * a, 0.999)))
        rep, tr = run_sandwich(d, SolverConfig(t_end=1.0), P5, too_big, upper)
        assert tr is None and not rep.ran
        assert not rep.passed and rep.failed_side == "lower"
