"""Radial method-of-lines solver for the perturbation phi of the Barenblatt profile.

The equation is discretised on one stretched grid in s = asinh(r).  This
coordinate is r near the origin and ln(2r) in the far field, so the origin
and the logarithmic tail are both covered without an interface.  In s the
equation reads

    phi_t = tanh^2 phi_ss + (tanh / cosh^2) phi_s
            + (D + phi) / cosh^2 * W^{-1} (W phi_s)_s
            - ((n-2)/2) phi_s^2 / cosh^2,          W = sinh^{n-1} / cosh,

which is the same operator as in r after the drift cancels against the
r^2 part of the Laplacian.  Time stepping is backward Euler with lagged
coefficients and an adaptive step.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .comparison import ComparisonSolution
from .profiles import RadialData, v_from_phi
from .special_functions import ModelParams

LN2 = math.log(2.0)


class SolverError(RuntimeError):
    """Step-size collapse or non-finite values during time stepping."""


def default_xi_max(t_end: float) -> float:
    """Far-field cut-off well beyond the diffusive scale sqrt(t) in ln r."""
    return max(40.0, 10.0 + 8.0 * math.sqrt(t_end))


@dataclass(frozen=True)
class SolverConfig:
    """Discretisation and time-stepping settings.

    ``xi_max`` defaults to :func:`default_xi_max`.  ``bc`` is ``"pinned"``
    (Dirichlet at the initial far-field value) or ``"zero-curvature"``.
    """

    t_end: float = 1.0
    n_xi: int = 2048
    xi_max: float | None = None
    bc: str = "pinned"
    error_target: float = 1e-7
    output_times: tuple | None = None
    stretch: float = 3.0
    dt_initial: float = 1e-8
    corrections: int = 2

    def __post_init__(self):
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if self.n_xi < 16:
            raise ValueError("n_xi must be at least 16")
        if self.bc not in ("pinned", "zero-curvature"):
            raise ValueError(f"unknown boundary condition {self.bc!r}")
        if self.xi_max is None:
            object.__setattr__(self, "xi_max", default_xi_max(self.t_end))
        if self.xi_max - 0.5 * math.log(max(self.t_end, 1.0)) < 10:
            raise ValueError("xi_max too small for the requested final time")
        if self.output_times is not None:
            ts = tuple(float(t) for t in self.output_times)
            if any(t < 0 or t > self.t_end for t in ts) or list(ts) != sorted(set(ts)):
                raise ValueError("output times must be increasing and inside [0, t_end]")
            object.__setattr__(self, "output_times", ts)

    def resolved_output_times(self) -> np.ndarray:
        if self.output_times is None:
            ts = np.geomspace(self.t_end * 1e-3, self.t_end, 16)
        else:
            ts = np.asarray(self.output_times, dtype=float)
        return np.unique(np.concatenate([[0.0], ts]))

    def with_(self, **kw) -> "SolverConfig":
        d = asdict(self)
        d.update(kw)
        if "t_end" in kw and "xi_max" not in kw:
            d["xi_max"] = None
        return SolverConfig(**d)


@dataclass(frozen=True)
class Grid:
    """Nodes in s = asinh(r) with s_0 = 0, mapped from a uniform parameter."""

    s: np.ndarray

    @classmethod
    def build(cls, config: SolverConfig) -> "Grid":
        s_max = config.xi_max + LN2
        c = config.stretch
        kappa = math.asinh(s_max / c)
        q = np.linspace(0.0, 1.0, config.n_xi)
        s = c * np.sinh(kappa * q)
        s[-1] = s_max
        return cls(s)

    @property
    def xi(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return _log_sinh(self.s)

    @property
    def r(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.sinh(self.s)


def _log_sinh(s):
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore"):
        return s + np.log(-np.expm1(-2 * s)) - LN2


def _log_cosh(s):
    s = np.asarray(s, dtype=float)
    return s + np.log1p(np.exp(-2 * s)) - LN2


class _Operator:
    """Precomputed geometry of the discrete operator on a fixed grid."""

    def __init__(self, grid: Grid, params: ModelParams):
        s = grid.s
        n = params.n
        self.n = n
        self.D = params.D
        h = np.diff(s)
        hm, hp = h[:-1], h[1:]
        si = s[1:-1]
        self.hm, self.hp = hm, hp
        self.h0 = h[0]
        th = np.tanh(si)
        sech2 = np.exp(-2 * _log_cosh(si))
        self.sech2 = sech2
        self.a = th * th
        self.b = th * sech2
        den = hm + hp
        self.d2 = (2 / (hm * den), -2 / (hm * hp), 2 / (hp * den))
        self.d1 = (-hp / (hm * den), (hp - hm) / (hm * hp), hm / (hp * den))
        lw = lambda x: (n - 1) * _log_sinh(x) - _log_cosh(x)
        lwi = lw(si)
        mid = 0.5 * (s[:-1] + s[1:])
        lwm = lw(mid)
        self.wm = np.exp(lwm[:-1] - lwi) / (hm * 0.5 * den)
        self.wp = np.exp(lwm[1:] - lwi) / (hp * 0.5 * den)

    def coefficients(self, phi):
        """Tridiagonal coefficients (lower, diag, upper) of the interior operator."""
        pl, pc, pr = phi[:-2], phi[1:-1], phi[2:]
        dm, dc, dp = self.d1
        grad = dm * pl + dc * pc + dp * pr
        drift = self.b - 0.5 * (self.n - 2) * grad * self.sech2
        e = (self.D + pc) * self.sech2
        lo = self.a * self.d2[0] + drift * dm + e * self.wm
        up = self.a * self.d2[2] + drift * dp + e * self.wp
        di = self.a * self.d2[1] + drift * dc - e * (self.wm + self.wp)
        return lo, di, up

    def origin_rate(self, phi):
        # Laplacian at the origin is n phi_rr, and phi_rr = 2 (phi_1 - phi_0) / h0^2
        return self.n * (self.D + phi[0]) * 2 / self.h0**2

    def rhs(self, phi, bc):
        """Semi-discrete time derivative (boundary rows excluded from the far node)."""
        lo, di, up = self.coefficients(phi)
        out = np.zeros_like(phi)
        out[1:-1] = lo * phi[:-2] + di * phi[1:-1] + up * phi[2:]
        out[0] = self.origin_rate(phi) * (phi[1] - phi[0])
        return out


def _config_hash(config: SolverConfig, params: ModelParams, descriptor: dict) -> str:
    payload = json.dumps({"config": asdict(config), "params": asdict(params),
                          "data": descriptor}, sort_keys=True, default=str)
    return hashlib.sha256(payload.encode()).hexdigest()


@dataclass
class Trajectory:
    """Stored solution snapshots; ``phi[k]`` lives on ``grid`` at ``times[k]``."""

    times: np.ndarray
    grid: Grid
    phi: np.ndarray
    params: ModelParams
    config: SolverConfig
    descriptor: dict
    config_hash: str
    stats: dict = field(default_factory=dict)

    @property
    def xi(self) -> np.ndarray:
        return self.grid.xi

    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    def chi(self, k: int):
        """chi view (xi, values) without the origin node, where xi = -inf."""
        return self.xi[1:], self.phi[k, 1:]

    def v(self, k: int) -> np.ndarray:
        r = self.r
        out = np.zeros_like(r)
        ok = np.isfinite(r) & (r < 1e150)
        out[ok] = v_from_phi(self.params, self.phi[k, ok], r[ok])
        return out

    def sup(self) -> np.ndarray:
        return self.phi.max(axis=1)

    def origin(self) -> np.ndarray:
        return self.phi[:, 0].copy()

    def index_of(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if not math.isclose(self.times[k], t, rel_tol=1e-12, abs_tol=1e-300):
            raise KeyError(f"time {t} is not an output time")
        return k


def solve(phi0: RadialData, config: SolverConfig, params: ModelParams) -> Trajectory:
    """Integrate the radial equation from ``phi0`` to ``config.t_end``."""
    grid = Grid.build(config)
    op = _Operator(grid, params)
    xi = grid.xi
    phi = np.asarray(phi0.at_xi(xi), dtype=float).copy()
    if np.any(~np.isfinite(phi)) or np.any(phi < 0):
        raise ValueError("initial data must be finite and nonnegative on the grid")
    N = phi.size
    far = phi[-1]
    outputs = config.resolved_output_times()
    t_end = config.t_end
    tol = config.error_target
    store = [phi.copy()]
    k_out = 1
    t = 0.0
    dt = config.dt_initial
    n_steps = n_rej = 0
    ab = np.zeros((4, N))  # lower bandwidth 2 for the extrapolation row

    def step(phi_old, dt):
        it = phi_old
        for _ in range(config.corrections + 1):
            lo, di, up = op.coefficients(it)
            ab[:] = 0.0
            # row 0: origin
            c0 = op.origin_rate(it)
            ab[1, 0] = 1 + dt * c0
            ab[0, 1] = -dt * c0
            ab[1, 1:-1] = 1 - dt * di
            ab[0, 2:] = -dt * up
            ab[2, :-2] = -dt * lo
            rhs = phi_old.copy()
            if config.bc == "pinned":
                ab[1, -1] = 1.0
                ab[2, -2] = 0.0
                rhs[-1] = far
            else:
                ratio = (grid.s[-1] - grid.s[-2]) / (grid.s[-2] - grid.s[-3])
                ab[1, -1] = 1.0
                ab[2, -2] = -(1 + ratio)
                ab[3, -3] = ratio
                rhs[-1] = 0.0
            it = solve_banded((2, 1), ab, rhs, check_finite=False)
        return it

    while k_out < outputs.size:
        target = outputs[k_out]
        clipped = t + dt >= target * (1 - 1e-14)
        h = target - t if clipped else dt
        f_old = op.rhs(phi, config.bc)
        new = step(phi, h)
        if not np.all(np.isfinite(new)):
            raise SolverError(f"non-finite values at t={t:.6g} (dt={h:.3g})")
        err = 0.5 * float(np.max(np.abs(new[:-1] - phi[:-1] - h * f_old[:-1])))
        fac = 2.0 if err == 0 else min(2.0, max(0.2, 0.9 * math.sqrt(tol / err)))
        if err <= tol:
            t = target if clipped else t + h
            phi = new
            n_steps += 1
            if clipped:
                store.append(phi.copy())
                k_out += 1
                # landing on an output time must not throttle the step size
                dt = max(dt, h * fac)
            else:
                dt = h * fac
        else:
            n_rej += 1
            dt = h * fac
        if dt < 1e-12 * t_end:
            raise SolverError(f"step size collapsed to {dt:.3g} at t={t:.6g}")
    return Trajectory(
        times=outputs, grid=grid, phi=np.array(store), params=params, config=config,
        descriptor=dict(phi0.descriptor), config_hash=_config_hash(config, params, phi0.descriptor),
        stats={"steps": n_steps, "rejected": n_rej},
    )


# --------------------------------------------------------------------------
# Sandwich between comparison functions
# --------------------------------------------------------------------------

@dataclass
class SandwichReport:
    precondition: dict
    times: np.ndarray = field(default_factory=lambda: np.empty(0))
    upper_margin: np.ndarray = field(default_factory=lambda: np.empty(0))
    lower_margin: np.ndarray = field(default_factory=lambda: np.empty(0))
    tol: float = 0.0
    ran: bool = False

    @property
    def precondition_ok(self) -> bool:
        return all(v >= 0 for v in self.precondition.values())

    @property
    def failed_side(self) -> str | None:
        for side, v in self.precondition.items():
            if v < 0:
                return side
        return None

    @property
    def passed(self) -> bool:
        return (self.precondition_ok and self.ran
                and bool(np.all(self.upper_margin >= -self.tol))
                and bool(np.all(self.lower_margin >= -self.tol)))


def _initial_margins(phi0: RadialData, lower, upper, r_max=1e6, per_decade=400):
    r = np.concatenate([[0.0], np.geomspace(1e-4, r_max, int(10 * per_decade))])
    vals = phi0(r)
    out = {}
    if upper is not None:
        out["upper"] = float(np.min(upper.value_r(r, 0.0) - vals))
    if lower is not None:
        out["lower"] = float(np.min(vals - lower.value_r(r, 0.0)))
    return out


def sandwich_check(traj: Trajectory, lower: ComparisonSolution | None,
                   upper: ComparisonSolution | None, tol: float | None = None) -> SandwichReport:
    """Per output time, min of (upper - phi) and (phi - lower) on the solver grid.

    ``None`` stands for the zero function on the lower side and for no bound
    on the upper side.
    """
    xi = traj.xi
    phi_init = traj.phi[0]
    if tol is None:
        tol = 1e-4 * float(phi_init.max())
    pre = {}
    if upper is not None:
        pre["upper"] = float(np.min(upper.value_xi(xi, 0.0) - phi_init))
    pre["lower"] = float(np.min(phi_init - (lower.value_xi(xi, 0.0) if lower is not None else 0.0)))
    rep = SandwichReport(pre, tol=tol)
    if not rep.precondition_ok:
        return rep
    um, lm = [], []
    for k, t in enumerate(traj.times):
        ph = traj.phi[k]
        um.append(float(np.min(upper.value_xi(xi, t) - ph)) if upper is not None else math.inf)
        lm.append(float(np.min(ph - (lower.value_xi(xi, t) if lower is not None else 0.0))))
    rep.times = traj.times.copy()
    rep.upper_margin = np.array(um)
    rep.lower_margin = np.array(lm)
    rep.ran = True
    return rep


def run_sandwich(phi0: RadialData, config: SolverConfig, params: ModelParams,
                 lower: ComparisonSolution | None, upper: ComparisonSolution | None,
                 tol: float | None = None):
    """Check the initial ordering first and time-step only if it holds.

    Returns ``(report, trajectory)``; the trajectory is ``None`` when the
    precondition fails.
    """
    pre = _initial_margins(phi0, lower, upper)
    if any(v < 0 for v in pre.values()):
        return SandwichReport(pre), None
    traj = solve(phi0, config, params)
    return sandwich_check(traj, lower, upper, tol), traj
