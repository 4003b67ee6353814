"""Explicit super- and subsolutions of the rescaled equation and their certification.

Every comparison function exposes analytic partial derivatives in both the
radial variable r and the logarithmic variable xi = ln r.  Parameters that
the construction only asserts to exist are computed by grid scans with a
10% safety factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import brentq

from .profiles import RadialData
from .special_functions import (
    ModelParams,
    hat_phi_profile,
    matching_factor,
    phi_limit_constant,
    phi_profile,
    rho_profile,
    sigma0_of,
)

SAFETY = 1.1
RESIDUAL_TOL = 1e-9
HEAT_TOL = 1e-10
DRIFT_TOL = 1e-12
MATCH_TOL = 1e-10


class Partials(NamedTuple):
    """Value and partials (first, second space derivative, time derivative)."""

    value: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    dt: np.ndarray


def _chi_from_phi(p: Partials, r) -> Partials:
    return Partials(p.value, r * p.d1, r * r * p.d2 + r * p.d1, p.dt)


def _phi_from_chi(p: Partials, r) -> Partials:
    return Partials(p.value, p.d1 / r, (p.d2 - p.d1) / (r * r), p.dt)


# --------------------------------------------------------------------------
# Operators
# --------------------------------------------------------------------------

def operator_P(fn, r, t=None, params: ModelParams | None = None):
    """Residual of the phi-equation for a comparison function or radial partials.

    ``fn`` is either a :class:`ComparisonSolution` (evaluated at (r, t)) or
    a :class:`Partials` tuple already sampled at ``r``; in the latter case
    ``params`` is required.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ZeroDivisionError("operator_P is singular at r = 0")
    if isinstance(fn, ComparisonSolution):
        params = fn.model
        p = fn.phi(r, t)
    else:
        p = fn
    n, D = params.n, params.D
    return (p.dt - (r * r + D + p.value) * (p.d2 + (n - 1) * p.d1 / r)
            + (n - 2) * r * p.d1 + 0.5 * (n - 2) * p.d1**2)


def operator_Q(fn, xi, t=None, params: ModelParams | None = None):
    """Residual of the chi-equation (phi in logarithmic radius)."""
    xi = np.asarray(xi, dtype=float)
    if isinstance(fn, ComparisonSolution):
        params = fn.model
        p = fn.chi(xi, t)
    else:
        p = fn
    n, D = params.n, params.D
    bracket = (D + p.value) * (p.d2 + (n - 2) * p.d1) - 0.5 * (n - 2) * p.d1**2
    return p.dt - p.d2 - np.exp(-2 * xi) * bracket


# --------------------------------------------------------------------------
# Parameters
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SuperParams:
    """Free parameters of the matched supersolution and the constants behind them.

    ``constants`` records every scanned constant (z0, c1, c2, C(xi0), ...).
    """

    model: ModelParams
    xi0: float
    t0: float
    A: float = 1.0
    constants: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (self.xi0 > 0 and self.t0 > 0 and self.A > 0):
            raise ValueError("xi0, t0 and A must be positive")

    @property
    def sigma0(self) -> float:
        return sigma0_of(self.model.lam)

    def with_A(self, A: float) -> "SuperParams":
        return replace(self, A=A)

    def violations(self) -> list:
        """Names of the selection conditions this parameter set does not meet."""
        c = self.constants
        out = []
        if not self.t0 > self.sigma0**-2:
            out.append("t0>sigma0^-2")
        for key in ("t_star", "t_upperstar"):
            if key in c and not self.t0 > c[key]:
                out.append(f"t0>{key}")
        if not self.t0 > self.xi0**2:
            out.append("t0>xi0^2")
        if "corner_c1" in c:
            rho0 = float(rho_profile(self.model.lam)(self.sigma0))
            if not self.xi0 > c["corner_c1"] / (c["corner_c2"] * rho0):
                out.append("xi0>c1/(c2 rho(sigma0))")
        return out


@dataclass(frozen=True)
class SubParams:
    model: ModelParams
    xi0: float
    a: float = 0.5
    constants: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.xi0 > 1:
            raise ValueError("xi0 must exceed 1")
        if not self.a > 0:
            raise ValueError(f"a must be positive, got {self.a}")

    def validate(self):
        if not self.a < 1:
            raise ValueError(f"a must lie in (0, 1), got {self.a}")

    @property
    def r0(self) -> float:
        return math.exp(self.xi0)

    @property
    def c2_min(self) -> float:
        return min(1 / 16, 1 / (4 * self.xi0**2))

    def with_a(self, a: float) -> "SubParams":
        return replace(self, a=a)


# --------------------------------------------------------------------------
# Comparison functions
# --------------------------------------------------------------------------

class ComparisonSolution:
    """A space-time function with analytic partials.

    ``inner(r, t)`` returns r-level partials, ``outer(xi, t)`` xi-level
    partials.  Matched kinds use ``inner`` for xi <= xi_match and ``outer``
    beyond.
    """

    def __init__(self, kind: str, model: ModelParams, params,
                 inner: Callable | None = None, outer: Callable | None = None,
                 xi_match: float | None = None):
        self.kind = kind
        self.model = model
        self.params = params
        self._inner = inner
        self._outer = outer
        self.xi_match = xi_match

    def __repr__(self):
        return f"ComparisonSolution(kind={self.kind!r}, params={self.params!r})"

    @property
    def matched(self) -> bool:
        return self._inner is not None and self._outer is not None

    @property
    def time_shift(self) -> float:
        return self.params.t0 if isinstance(self.params, SuperParams) else 1.0

    def residual_scale(self, t):
        return (np.asarray(t, dtype=float) + self.time_shift) ** (self.model.gamma / 2 + 1)

    def phi(self, r, t) -> Partials:
        r, t = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(t, dtype=float))
        if self._outer is None:
            return self._inner(r, t)
        if self._inner is None:
            return _phi_from_chi(self._outer(np.log(r), t), r)
        inside = r <= math.exp(self.xi_match)
        out = [np.empty_like(r) for _ in range(4)]
        if inside.any():
            p = self._inner(r[inside], t[inside])
            for o, v in zip(out, p):
                o[inside] = v
        if (~inside).any():
            ro = r[~inside]
            p = _phi_from_chi(self._outer(np.log(ro), t[~inside]), ro)
            for o, v in zip(out, p):
                o[~inside] = v
        return Partials(*out)

    def chi(self, xi, t) -> Partials:
        xi, t = np.broadcast_arrays(np.asarray(xi, dtype=float), np.asarray(t, dtype=float))
        if self._inner is None:
            return self._outer(xi, t)
        if self._outer is None:
            r = np.exp(xi)
            return _chi_from_phi(self._inner(r, t), r)
        inside = xi <= self.xi_match
        out = [np.empty_like(xi) for _ in range(4)]
        if inside.any():
            r = np.exp(xi[inside])
            p = _chi_from_phi(self._inner(r, t[inside]), r)
            for o, v in zip(out, p):
                o[inside] = v
        if (~inside).any():
            p = self._outer(xi[~inside], t[~inside])
            for o, v in zip(out, p):
                o[~inside] = v
        return Partials(*out)

    def value_xi(self, xi, t):
        """Value on the whole half-line in logarithmic radius (xi = -inf is r = 0)."""
        xi, t = np.broadcast_arrays(np.asarray(xi, dtype=float), np.asarray(t, dtype=float))
        if self._inner is None:
            return self._outer(xi, t).value
        split = self.xi_match if self._outer is not None else math.inf
        out = np.empty_like(xi)
        inside = xi <= split
        if inside.any():
            out[inside] = self._inner(np.exp(xi[inside]), t[inside]).value
        if (~inside).any():
            out[~inside] = self._outer(xi[~inside], t[~inside]).value
        return out

    def value_r(self, r, t):
        with np.errstate(divide="ignore"):
            return self.value_xi(np.log(np.asarray(r, dtype=float)), t)


def _self_similar(profile, amp, tau, z, gamma):
    """Partials of amp tau^{-g/2} F(z) with z = (shifted xi) tau^{-1/2}."""
    F, F1, F2 = profile.evaluate(z)
    base = amp * tau ** (-gamma / 2)
    return Partials(
        base * F,
        base * tau**-0.5 * F1,
        base / tau * F2,
        -0.5 * base / tau * (z * F1 + gamma * F),
    )


def outer_super(params: SuperParams) -> ComparisonSolution:
    """chi(xi, t) = A (t+t0)^{-g/2} Phi((xi+xi0)(t+t0)^{-1/2}), used for xi >= 0."""
    g = params.model.gamma
    phi = phi_profile(g)

    def outer(xi, t):
        tau = t + params.t0
        return _self_similar(phi, params.A, tau, (xi + params.xi0) * tau**-0.5, g)

    return ComparisonSolution("outer_super", params.model, params, outer=outer)


def inner_super(params: SuperParams, *, validate: bool = True) -> ComparisonSolution:
    """phi(r, t) = A f(t) (t+t0)^{-g/2} rho(r (t+t0)^{-1/2}), used for r in [0, 1]."""
    model = params.model
    g = model.gamma
    rho = rho_profile(model.lam)
    f = matching_factor(model, params.xi0, params.t0, validate=validate)

    def inner(r, t):
        tau = t + params.t0
        sigma = r * tau**-0.5
        R, R1, R2 = rho.evaluate(sigma)
        fv, f1, _ = f.evaluate(t)
        base = params.A * fv * tau ** (-g / 2)
        return Partials(
            base * R,
            base * tau**-0.5 * R1,
            base / tau * R2,
            -0.5 * base / tau * (sigma * R1 + g * R)
            + params.A * f1 * tau ** (-g / 2) * R,
        )

    return ComparisonSolution("inner_super", model, params, inner=inner)


def matched_super(params: SuperParams, *, validate: bool = True) -> ComparisonSolution:
    """Inner profile on [0, 1] glued to the outer profile on r > 1."""
    if validate and params.model.gamma >= 1:
        raise ValueError("the supersolution needs gamma in (0, 1)")
    inner = inner_super(params, validate=validate)._inner
    outer = outer_super(params)._outer
    return ComparisonSolution("matched_super", params.model, params,
                              inner=inner, outer=outer, xi_match=0.0)


def corner_slopes(params: SuperParams, t, *, validate: bool = True):
    """One-sided radial derivatives (I1 from inside, I2 from outside) at r = 1."""
    t = np.asarray(t, dtype=float)
    fn = matched_super(params, validate=validate)
    one = np.ones_like(t)
    I1 = fn._inner(one, t).d1
    I2 = fn._outer(np.zeros_like(t), t).d1  # d/dr = d/dxi at r = 1
    return I1, I2


def sub_outer(params: SubParams, *, validate: bool = True) -> ComparisonSolution:
    """hat chi(xi, t) = a (t+1)^{-g/2} hat Phi((xi-xi0)/sqrt(t+1)), xi >= xi0."""
    if validate:
        params.validate()
    g = params.model.gamma
    hat = hat_phi_profile(g)

    def outer(xi, t):
        tau = t + 1.0
        return _self_similar(hat, params.a, tau, (xi - params.xi0) * tau**-0.5, g)

    return ComparisonSolution("sub", params.model, params, outer=outer)


def sub_solution(params: SubParams, *, validate: bool = True) -> ComparisonSolution:
    """Flat value a (t+1)^{-g/2} on [0, r0] glued C^1 to the explicit profile beyond.

    ``validate=False`` admits a >= 1, which is only useful for negative controls.
    """
    if validate:
        params.validate()
    g = params.model.gamma

    def inner(r, t):
        tau = t + 1.0
        v = params.a * tau ** (-g / 2) * np.ones_like(r)
        z = np.zeros_like(v)
        return Partials(v, z, z.copy(), -0.5 * g * v / tau)

    outer = sub_outer(params, validate=False)._outer
    return ComparisonSolution("matched_sub", params.model, params,
                              inner=inner, outer=outer, xi_match=params.xi0)


# --------------------------------------------------------------------------
# Parameter selection
# --------------------------------------------------------------------------

def _first_zero(fun, lo, hi, points=4001):
    x = np.linspace(lo, hi, points)
    y = fun(x)
    idx = np.nonzero(np.sign(y[1:]) != np.sign(y[:-1]))[0]
    if idx.size == 0:
        return None
    i = idx[0]
    return brentq(fun, x[i], x[i + 1], xtol=1e-14)


def select_super_params(model: ModelParams, *, z_max: float = 400.0,
                        points: int = 20001) -> SuperParams:
    """Constructive choice of (xi0, t0); A is left at 1."""
    g, n = model.gamma, model.n
    if not 0 < g < 1:
        raise ValueError("supersolution parameters need gamma in (0, 1)")
    phi = phi_profile(g)
    lam = model.lam
    rho = rho_profile(lam)
    s0 = sigma0_of(lam)
    rho_s0 = float(rho(s0))

    # Phi'' <= 0 on [0, z0]
    z0_exact = _first_zero(lambda z: phi.d2(z), 0.0, 20.0)
    if z0_exact is None:
        raise ArithmeticError("Phi'' has no sign change on [0, 20]")
    z0 = z0_exact / SAFETY
    z = np.geomspace(z0, z_max, points)[1:]
    _, d1, d2 = phi.evaluate(z)
    cinf = phi_limit_constant(g)
    slope = np.append(-d1 * z ** (g + 1), g * cinf)
    curv = np.append(d2 * z ** (g + 2), g * (g + 1) * cinf)
    if np.any(slope <= 0):
        raise ArithmeticError("could not certify Phi' < 0 beyond z0")
    drift_c1 = float(slope.min()) / SAFETY
    drift_c2 = float(max(curv.max(), 0.0)) * SAFETY
    t_star = max(1.0, (drift_c2 / ((n - 2) * drift_c1 * z0)) ** 2)

    # slopes at the corner
    sg = np.linspace(0, s0, points)[1:]
    corner_c1 = float(np.max(-rho.d1(sg) / sg)) * SAFETY
    zz = np.linspace(0, 1, points)[1:]
    q = -phi.d1(zz) / zz
    if np.any(q <= 0):
        raise ArithmeticError("could not certify Phi'(z) <= -c z on (0, 1)")
    corner_c2 = float(q.min()) / SAFETY
    xi0 = SAFETY * corner_c1 / (corner_c2 * rho_s0)

    f = matching_factor(model, xi0, 2 * s0**-2)
    C_xi0 = f.meta["C"]
    t_upper = SAFETY * max(s0**-2, C_xi0 / float(phi(xi0)))
    t0 = SAFETY * max(t_star, t_upper, xi0**2, s0**-2)

    constants = {
        "sigma0": s0, "lambda": lam, "rho_sigma0": rho_s0,
        "z0": z0, "z0_exact": z0_exact,
        "drift_c1": drift_c1, "drift_c2": drift_c2, "t_star": t_star,
        "corner_c1": corner_c1, "corner_c2": corner_c2,
        "C_xi0": C_xi0, "t_upperstar": t_upper,
    }
    sp = SuperParams(model, xi0, t0, 1.0, constants)
    tt = np.geomspace(1e-3, 1e6, 200)
    I1, I2 = corner_slopes(sp, tt)
    if np.any(I1 - I2 <= 0):
        raise ArithmeticError("selected parameters violate the corner condition")
    return sp


def amplitude_terms(phi0: RadialData, params: SuperParams, B: float,
                    *, z_max: float = 400.0, points: int = 20001) -> dict:
    """The three lower bounds on A that make the supersolution dominate phi0."""
    model = params.model
    g = model.gamma
    xi0, t0 = params.xi0, params.t0
    phi = phi_profile(g)
    rho = rho_profile(model.lam)
    f = matching_factor(model, xi0, t0)
    zs = (math.log(2) + xi0) * t0**-0.5
    z = np.geomspace(zs, max(z_max, 10 * zs), points)
    c1 = min(float(np.min(z**g * phi(z))), phi_limit_constant(g)) / SAFETY
    rr = np.linspace(0, 2, 4001)
    c2 = float(np.max(phi0(rr))) * SAFETY
    return {
        "inner": c2 * t0 ** (g / 2) / (float(f(0.0)) * float(rho(t0**-0.5))),
        "middle": c2 * t0 ** (g / 2) / float(phi(zs)),
        "tail": B / c1 * (1 + xi0 / math.log(2)) ** g,
        "dom_c1": c1, "dom_c2": c2, "z0_prime": zs,
    }


def domination_margin(upper: ComparisonSolution, phi0: RadialData,
                      r_max: float = 1e6, per_decade: int = 400) -> float:
    """min over r in [0, r_max] of upper(r, 0) - phi0(r)."""
    r = np.concatenate([[0.0], np.geomspace(1e-4, r_max, int(10 * per_decade))])
    return float(np.min(upper.value_r(r, 0.0) - phi0(r)))


def ordering_margin(lower: ComparisonSolution, phi0: RadialData,
                    r_max: float = 1e6, per_decade: int = 400) -> float:
    """min over r in [0, r_max] of phi0(r) - lower(r, 0)."""
    r = np.concatenate([[0.0], np.geomspace(1e-4, r_max, int(10 * per_decade))])
    return float(np.min(phi0(r) - lower.value_r(r, 0.0)))


def select_A(phi0: RadialData, params: SuperParams, B: float) -> float:
    """Amplitude making the matched supersolution dominate phi0 at t = 0."""
    terms = amplitude_terms(phi0, params, B)
    A = SAFETY * max(terms["inner"], terms["middle"], terms["tail"])
    margin = domination_margin(matched_super(params.with_A(A)), phi0)
    if not margin > 0:
        raise ArithmeticError(f"amplitude {A:.6g} does not dominate the data (margin {margin:.3g})")
    return A


def _sub_conditions(model: ModelParams, xi0: float, margin: float = 0.9):
    g, n, D = model.gamma, model.n, model.D
    e = math.exp(-2 * xi0)
    third = margin / 3
    return (
        (g + 1) * (D + 1) * e <= third,
        (n - 2) * (D + 1) * e / (2 * math.e) <= third,
        (n - 2) * g / 2 * e <= third,
    )


def select_sub_params(model: ModelParams, a: float = 0.5, step: float = 0.01) -> SubParams:
    """Smallest xi0 > 1 on a ``step`` grid meeting the three smallness conditions."""
    k = 1
    while True:
        xi0 = round(1 + k * step, 10)
        if all(_sub_conditions(model, xi0)):
            break
        k += 1
    return SubParams(model, xi0, a, {"c2_min": min(1 / 16, 1 / (4 * xi0**2))})


def select_a(phi0: RadialData, b: float, params: SubParams) -> float:
    """Largest safe amplitude of the subsolution below phi0."""
    g = params.model.gamma
    r = np.linspace(0, params.r0, 20001)
    c1 = float(np.min(phi0(r)))
    if not c1 > 0:
        raise ArithmeticError("phi0 vanishes on [0, r0]; no admissible amplitude")
    a = 0.9 * min(c1, b * params.c2_min ** (g / 2), 0.999)
    margin = ordering_margin(sub_solution(params.with_a(a)), phi0)
    if not margin > 0:
        raise ArithmeticError(f"amplitude {a:.6g} is not below the data (margin {margin:.3g})")
    return a


# --------------------------------------------------------------------------
# Certification
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CertGrid:
    r: np.ndarray
    t: np.ndarray
    r_match: float
    exclusion: float
    preset: str

    def describe(self) -> str:
        return (f"{self.preset}: {self.r.size} radii in [{self.r.min():.3g}, {self.r.max():.3g}] "
                f"excluding |r/r_match - 1| < {self.exclusion:g}; {self.t.size} times in "
                f"[{self.t.min():.3g}, {self.t.max():.3g}]")


GRID_DENSITY = {"fast": 16, "full": 64}


def certification_grid(fn: ComparisonSolution, preset: str = "full", *,
                       t_max: float = 1e4, r_min: float = 1e-3, xi_span: float = 30.0,
                       exclusion: float = 1e-2) -> CertGrid:
    """Geometric grid in r and in (t + shift), skipping a band around the matching radius."""
    per = GRID_DENSITY[preset]
    xm = fn.xi_match if fn.xi_match is not None else 0.0
    r_match = math.exp(xm)
    r_hi = math.exp(xm + xi_span)
    nd = lambda lo, hi: max(int(math.ceil(per * math.log10(hi / lo))), 2)
    left = np.geomspace(r_min, r_match * (1 - exclusion), nd(r_min, r_match))
    right = np.geomspace(r_match * (1 + exclusion), r_hi, nd(r_match, r_hi))
    r = np.concatenate([left, right])
    s = fn.time_shift
    tau = np.geomspace(s, s + t_max, nd(s, s + t_max))
    t = np.concatenate([[0.0], tau[1:] - s])
    return CertGrid(r, t, r_match, exclusion, preset)


@dataclass(frozen=True)
class Check:
    id: str
    statistic: float
    relation: str
    threshold: float

    @property
    def passed(self) -> bool:
        s, th = self.statistic, self.threshold
        if not math.isfinite(s):
            return False
        return {">=": s >= th, "<=": s <= th, ">": s > th, "<": s < th}[self.relation]


@dataclass
class CertificationReport:
    kind: str
    sense: str
    grid: str
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def get(self, check_id: str) -> Check:
        for c in self.checks:
            if c.id == check_id:
                return c
        raise KeyError(check_id)

    def summary_line(self) -> str:
        failed = [c.id for c in self.checks if not c.passed]
        return "PASS" if not failed else "FAIL " + failed[0]

    def rows(self) -> list:
        return [(c.id, c.statistic, c.relation, c.threshold, "pass" if c.passed else "fail")
                for c in self.checks]


def certify(fn: ComparisonSolution, grid: CertGrid | None = None, sense: str | None = None,
            phi0: RadialData | None = None) -> CertificationReport:
    """Evaluate every inequality of the construction on a space-time grid.

    Failures are recorded in the report, never raised.
    """
    if grid is None:
        grid = certification_grid(fn)
    if sense is None:
        sense = "super" if isinstance(fn.params, SuperParams) else "sub"
    model = fn.model
    n = model.n
    g = model.gamma
    rep = CertificationReport(fn.kind, sense, grid.describe())
    R, T = np.meshgrid(grid.r, grid.t, indexing="ij")
    scale = fn.residual_scale(T)
    inside = R < grid.r_match
    Tpos = T > 0

    with np.errstate(all="ignore"):
        if fn._outer is not None:
            Ro, To = R[~inside], T[~inside]
            Xo = np.log(Ro)
            po = fn.chi(Xo, To)
            q = operator_Q(po, Xo, params=model) * scale[~inside]
            if sense == "super":
                rep.checks.append(Check("Q_outer", float(np.min(q)), ">=", -RESIDUAL_TOL))
                heat = np.abs(po.dt - po.d2) * scale[~inside]
                rep.checks.append(Check("heat_identity", float(np.max(heat)), "<=", HEAT_TOL))
                drift = -(po.d2 + (n - 2) * po.d1) * scale[~inside]
                rep.checks.append(Check("drift_sign", float(np.min(drift[Tpos[~inside]])),
                                        ">=", -DRIFT_TOL))
            else:
                rep.checks.append(Check("Q_outer", float(np.max(q)), "<=", RESIDUAL_TOL))
        if fn._inner is not None:
            Ri, Ti = R[inside], T[inside]
            p = operator_P(fn, Ri, Ti) * scale[inside]
            if sense == "super":
                rep.checks.append(Check("P_inner", float(np.min(p)), ">=", -RESIDUAL_TOL))
            else:
                rep.checks.append(Check("P_inner", float(np.max(p)), "<=", RESIDUAL_TOL))
                closed = -0.5 * fn.params.a * g * (Ti + 1.0) ** (-g / 2 - 1) * scale[inside]
                rep.checks.append(Check("P_inner_closed_form", float(np.max(np.abs(p - closed))),
                                        "<=", MATCH_TOL))

        if fn.matched:
            t = grid.t
            xm = fn.xi_match
            rm = math.exp(xm)
            pin = fn._inner(np.full_like(t, rm), t)
            pout = _phi_from_chi(fn._outer(np.full_like(t, xm), t), rm)
            sc = fn.residual_scale(t)
            # value gap relative to the natural size amp (t + shift)^{-g/2}
            amp = fn.params.A if isinstance(fn.params, SuperParams) else fn.params.a
            gap = np.abs(pin.value - pout.value) * (t + fn.time_shift) ** (g / 2) / amp
            rep.checks.append(Check("continuity", float(np.max(gap)), "<=", MATCH_TOL))
            if sense == "super":
                corner = (pin.d1 - pout.d1) * sc
                rep.checks.append(Check("corner_gap", float(np.min(corner)), ">", 0.0))
                c = fn.params.constants
                if "corner_c1" in c:
                    lower = fn.params.A * (c["corner_c2"] * fn.params.xi0
                                           - c["corner_c1"] / c["rho_sigma0"])
                    rep.checks.append(Check("corner_bound", float(np.min(corner - lower)),
                                            ">=", -RESIDUAL_TOL))
            else:
                rep.checks.append(Check("c1_matching", float(np.max(np.abs(pin.d1 - pout.d1))),
                                        "<=", MATCH_TOL))

    if phi0 is not None:
        if sense == "super":
            rep.checks.append(Check("initial_domination", domination_margin(fn, phi0), ">", 0.0))
        else:
            rep.checks.append(Check("initial_ordering", ordering_margin(fn, phi0), ">", 0.0))
    return rep
