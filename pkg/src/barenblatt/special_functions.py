"""Analytic ingredients of the comparison functions.

Every profile is returned as a :class:`ClosedFormFunction` bundling the value
and the first two derivatives.  All evaluators are vectorised over numpy
arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln, j0, j1

# Crossover between the power series and the large-argument expansion of M.
KUMMER_SERIES_MAX = 30.0
_EPS = np.finfo(float).eps
# log of the largest finite double
_LOG_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class ModelParams:
    """Dimension, profile constant and tail exponent of one experiment.

    The exponent ``m`` is the critical value ``(n-4)/(n-2)``; it is stored as
    an exact fraction so the derived constants follow from it without
    rounding.
    """

    n: int
    D: float = 1.0
    gamma: float = 0.5

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"dimension must be an integer >= 3, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if not self.D > 0:
            raise ValueError(f"D must be positive, got {self.D}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    @property
    def m_exact(self) -> Fraction:
        return Fraction(self.n - 4, self.n - 2)

    @property
    def m(self) -> float:
        return float(self.m_exact)

    @property
    def mu(self) -> float:
        # 2/(1-m) = n-2
        return float(2 / (1 - self.m_exact))

    @property
    def beta(self) -> float:
        # 1/(n(1-m)-2) = (n-2)/4
        return float(1 / (self.n * (1 - self.m_exact) - 2))

    @property
    def lam(self) -> float:
        return (self.gamma / 2 + 1) / self.D

    def with_gamma(self, gamma: float) -> "ModelParams":
        return ModelParams(self.n, self.D, gamma)


@dataclass(frozen=True)
class ClosedFormFunction:
    """A scalar profile with value, first and second derivative.

    ``func(x)`` must return the triple ``(value, d1, d2)`` as arrays of the
    broadcast shape of ``x``.
    """

    func: Callable[[np.ndarray], tuple]
    label: str
    domain: tuple = (0.0, math.inf)
    exploratory: bool = False
    meta: dict = field(default_factory=dict)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        v, d1, d2 = self.func(x)
        if x.ndim == 0:
            return float(v), float(d1), float(d2)
        return v, d1, d2

    def __call__(self, x):
        return self.evaluate(x)[0]

    def d1(self, x):
        return self.evaluate(x)[1]

    def d2(self, x):
        return self.evaluate(x)[2]


# --------------------------------------------------------------------------
# Kummer's confluent hypergeometric function
# --------------------------------------------------------------------------

def _is_nonpositive_integer(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def _kummer_series(a, b, zeta):
    """Power series of M(a, b, zeta) with Kahan-compensated summation."""
    total = np.ones_like(zeta)
    comp = np.zeros_like(zeta)
    term = np.ones_like(zeta)
    for k in range(5000):
        if _is_nonpositive_integer(a) and k >= -a + 1:
            break
        term = term * ((a + k) / (b + k)) * zeta / (k + 1)
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if np.all(np.abs(term) <= _EPS * 0.25 * np.abs(total)):
            break
    else:  # pragma: no cover - zeta is capped well below this
        raise ArithmeticError("Kummer series failed to converge")
    return total


def _kummer_scaled_asymptotic(a, b, zeta):
    """e^{-zeta} M(a, b, zeta) from the large-argument expansion.

    The expansion is summed up to its smallest term; for zeta >= 30 the
    truncation error is below 1e-12 relative.
    """
    sign = math.copysign(1.0, math.gamma(a)) if a < 0 else 1.0
    logpref = gammaln(b) - gammaln(a) + (a - b) * np.log(zeta)
    total = np.ones_like(zeta)
    term = np.ones_like(zeta)
    active = np.ones(zeta.shape, dtype=bool)
    for k in range(200):
        nxt = term * (b - a + k) * (1 - a + k) / ((k + 1) * zeta)
        grow = np.abs(nxt) >= np.abs(term)
        active &= ~grow
        term = np.where(active, nxt, term)
        total = total + np.where(active, nxt, 0.0)
        active &= np.abs(nxt) > _EPS * 0.25 * np.abs(total)
        if not active.any():
            break
    return sign * np.exp(logpref) * total


def kummer_scaled(a: float, b: float, zeta):
    """Return ``exp(-zeta) * M(a, b, zeta)`` without overflow."""
    if _is_nonpositive_integer(b):
        raise ValueError(f"b must not be a nonpositive integer, got {b}")
    zeta = np.asarray(zeta, dtype=float)
    if np.any(zeta < 0):
        raise ValueError("zeta must be nonnegative")
    out = np.empty_like(zeta)
    if _is_nonpositive_integer(a):
        # M is a polynomial of degree -a.
        out[...] = np.exp(-zeta) * _kummer_series(a, b, zeta)
        return out
    small = zeta <= KUMMER_SERIES_MAX
    if small.any():
        zs = zeta[small]
        out[small] = np.exp(-zs) * _kummer_series(a, b, zs)
    if (~small).any():
        out[~small] = _kummer_scaled_asymptotic(a, b, zeta[~small])
    return out


def kummer_m(a: float, b: float, zeta):
    """Kummer's function M(a, b, zeta) for zeta >= 0.

    Series below ``KUMMER_SERIES_MAX``, asymptotic expansion above.  Raises
    ``OverflowError`` when the result exceeds the double range instead of
    returning ``inf``.
    """
    z = np.asarray(zeta, dtype=float)
    scaled = kummer_scaled(a, b, z)
    with np.errstate(divide="ignore"):
        logmag = z + np.log(np.abs(scaled))
    if np.any(logmag > _LOG_MAX):
        raise OverflowError("M(a, b, zeta) exceeds the floating point range")
    out = np.exp(z) * scaled
    return float(out) if z.ndim == 0 else out


# --------------------------------------------------------------------------
# Outer self-similar profile
# --------------------------------------------------------------------------

def _check_gamma_phi(gamma: float) -> bool:
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if gamma > 2:
        raise ValueError(f"gamma must be at most 2, got {gamma}")
    return gamma >= 1


def _phi_value_d1(gamma, z):
    a = (1 - gamma) / 2
    zeta = z * z / 4
    value = kummer_scaled(a, 0.5, zeta)
    # Kummer transformation keeps every series term positive:
    # Phi'(z) = -(gamma z / 2) e^{-zeta} M(a, 3/2, zeta)
    d1 = -0.5 * gamma * z * kummer_scaled(a, 1.5, zeta)
    return value, d1


def phi_profile(gamma: float) -> ClosedFormFunction:
    """Decaying solution of Phi'' + (z/2) Phi' + (gamma/2) Phi = 0, Phi(0)=1, Phi'(0)=0.

    Phi(z) = exp(-z^2/4) M((1-gamma)/2, 1/2, z^2/4).  The second derivative
    is taken from the ODE.  Values gamma in [1, 2] are accepted and tagged
    ``exploratory``.
    """
    exploratory = _check_gamma_phi(gamma)

    def func(z):
        z = np.abs(z)
        v, d1 = _phi_value_d1(gamma, z)
        d2 = -0.5 * z * d1 - 0.5 * gamma * v
        return v, d1, d2

    return ClosedFormFunction(func, label="Phi", exploratory=exploratory,
                              meta={"gamma": gamma})


def phi_second_derivative_kummer(gamma: float, z):
    """Phi'' computed from Kummer functions, independently of the ODE."""
    _check_gamma_phi(gamma)
    z = np.abs(np.asarray(z, dtype=float))
    a = (1 - gamma) / 2
    zeta = z * z / 4
    g = kummer_scaled(a, 1.5, zeta)
    # d/dzeta [e^{-zeta} M(a, 3/2, zeta)] = -((3/2 - a)/(3/2)) e^{-zeta} M(a, 5/2, zeta)
    dg = -((1.5 - a) / 1.5) * kummer_scaled(a, 2.5, zeta)
    return -0.5 * gamma * g - 0.25 * gamma * z * z * dg


def phi_limit_constant(gamma: float) -> float:
    """lim z^gamma Phi(z) = 2^gamma Gamma(1/2)/Gamma((1-gamma)/2)."""
    a = (1 - gamma) / 2
    if _is_nonpositive_integer(a):
        return 0.0
    return 2.0**gamma * math.gamma(0.5) / math.gamma(a)


@dataclass(frozen=True)
class EnclosureConstants:
    """Grid ranges of z^g Phi, -z^{g+1} Phi', z^{g+2}|Phi''| on [z_lo, z_hi]."""

    value: tuple
    slope: tuple
    curvature: tuple
    z_lo: float
    z_hi: float

    @property
    def c(self) -> float:
        return min(self.value[0], self.slope[0])

    @property
    def C(self) -> float:
        return max(self.value[1], self.slope[1], self.curvature[1])


def phi_asymptotic_constants(gamma: float, z_lo: float = 1.0, z_hi: float = 50.0,
                             points: int = 20001) -> EnclosureConstants:
    """Empirical enclosure constants for the algebraic decay of Phi and its derivatives."""
    if not (1 <= z_lo < z_hi):
        raise ValueError("need 1 <= z_lo < z_hi")
    phi = phi_profile(gamma)
    z = np.geomspace(z_lo, z_hi, points)
    v, d1, d2 = phi.evaluate(z)
    if np.any(v <= 0):
        raise ArithmeticError("Phi is not positive on the window")
    if np.any(d1 >= 0):
        raise ArithmeticError("Phi' is not negative on the window")
    r0 = z**gamma * v
    r1 = -(z ** (gamma + 1)) * d1
    r2 = z ** (gamma + 2) * np.abs(d2)
    return EnclosureConstants(
        value=(float(r0.min()), float(r0.max())),
        slope=(float(r1.min()), float(r1.max())),
        curvature=(float(r2.min()), float(r2.max())),
        z_lo=z_lo, z_hi=z_hi,
    )


# --------------------------------------------------------------------------
# Inner profile (scaled Bessel J0)
# --------------------------------------------------------------------------

def _rho_series(lam, sigma):
    # rho = sum c_k sigma^{2k}, c_k = (-lam/4)^k / (k!)^2
    q = -lam * sigma * sigma / 4
    v = np.ones_like(sigma)
    d1 = np.zeros_like(sigma)
    d2 = np.zeros_like(sigma)
    term = np.ones_like(sigma)  # c_k sigma^{2k}
    ck = 1.0
    smax = max(float(np.max(sigma, initial=0.0)), 1.0)
    for k in range(1, 400):
        ck = ck * (-lam / 4) / (k * k)
        term = term * q / (k * k)
        v = v + term
        d1 = d1 + 2 * k * ck * sigma ** (2 * k - 1)
        d2 = d2 + 2 * k * (2 * k - 1) * ck * sigma ** (2 * k - 2)
        if k > 2 and abs(ck) * (2 * k) ** 2 * smax ** (2 * k) < 1e-19:
            break
    return v, d1, d2


RHO_SERIES_MAX = 4.0  # series in x = sqrt(lam) sigma up to here, Bessel routines beyond


def _rho_bessel(lam, sigma):
    k = math.sqrt(lam)
    x = k * sigma
    J0, J1 = j0(x), j1(x)
    return J0, -k * J1, -lam * (J0 - J1 / x)


def rho_profile(lam: float) -> ClosedFormFunction:
    """Solution of rho'' + rho'/sigma + lam rho = 0, rho(0)=1, rho'(0)=0.

    This is J0(sqrt(lam) sigma). The even power series is used while
    sqrt(lam) sigma <= RHO_SERIES_MAX; past that the alternating series
    loses digits to cancellation and scipy's j0/j1 take over.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")

    def func(sigma):
        sigma = np.abs(np.asarray(sigma, dtype=float))
        near = math.sqrt(lam) * sigma <= RHO_SERIES_MAX
        if near.all():
            return _rho_series(lam, sigma)
        out = [np.empty_like(sigma) for _ in range(3)]
        for o, a, b in zip(out, _rho_series(lam, sigma[near]), _rho_bessel(lam, sigma[~near])):
            o[near], o[~near] = a, b
        return tuple(out)

    return ClosedFormFunction(func, label="rho", meta={"lambda": lam})


def rho_first_zero(lam: float) -> float:
    """First positive zero of rho, by bracketing and bisection on the series."""
    rho = rho_profile(lam)
    hi = 3.0 / math.sqrt(lam)
    lo = 0.0
    return brentq(lambda s: rho(s), lo, hi, xtol=1e-14, rtol=4 * _EPS)


def sigma0_of(lam: float) -> float:
    """Radius on which rho is certified positive and decreasing."""
    return min(0.99, 0.9 * rho_first_zero(lam))


# --------------------------------------------------------------------------
# Matching factor
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MatchingBound:
    """Constants behind the bound |f'(t)| <= C / (t+t0)^2."""

    rho_min: float
    phi_slope: float
    rho_slope: float
    xi0: float

    @property
    def C(self) -> float:
        return (self.phi_slope * self.xi0**2 / (2 * self.rho_min)
                + self.rho_slope / (2 * self.rho_min**2))


def matching_bound(params: ModelParams, xi0: float, points: int = 4001,
                   safety: float = 1.1) -> MatchingBound:
    """Grid-estimated constants for the derivative bound of the matching factor.

    ``rho_min`` is shrunk and both slope constants are inflated by ``safety``.
    """
    lam = params.lam
    s0 = sigma0_of(lam)
    phi = phi_profile(params.gamma)
    rho = rho_profile(lam)
    z = np.linspace(0, xi0, points)[1:]
    s = np.linspace(0, s0, points)[1:]
    phi_slope = float(np.max(np.abs(phi.d1(z)) / z))
    rho_slope = float(np.max(np.abs(rho.d1(s)) / s))
    return MatchingBound(rho_min=float(rho(s0)) / safety,
                         phi_slope=safety * phi_slope,
                         rho_slope=safety * rho_slope, xi0=xi0)


def matching_factor(params: ModelParams, xi0: float, t0: float,
                    *, validate: bool = True) -> ClosedFormFunction:
    """f(t) = Phi(xi0 s) / rho(s), s = (t+t0)^{-1/2}, as a function of t.

    ``meta['C']`` carries the constant of the bound |f'| <= C/(t+t0)^2.
    """
    if not xi0 > 0:
        raise ValueError("xi0 must be positive")
    lam = params.lam
    s0 = sigma0_of(lam)
    if validate and not t0 > s0**-2:
        raise ValueError(f"t0={t0} must exceed sigma0^-2={s0**-2:.6g}")
    phi = phi_profile(params.gamma)
    rho = rho_profile(lam)

    def func(t):
        s = (t + t0) ** -0.5
        P, P1, P2 = phi.evaluate(xi0 * s)
        R, R1, R2 = rho.evaluate(s)
        g = P / R
        g1 = xi0 * P1 / R - P * R1 / R**2
        g2 = (xi0**2 * P2 / R - 2 * xi0 * P1 * R1 / R**2
              - P * R2 / R**2 + 2 * P * R1**2 / R**3)
        ds = -0.5 * s**3
        dds = 0.75 * s**5
        return g, g1 * ds, g2 * ds * ds + g1 * dds

    bound = matching_bound(params, xi0)
    return ClosedFormFunction(func, label="f", domain=(0.0, math.inf),
                              meta={"xi0": xi0, "t0": t0, "C": bound.C,
                                    "bound": bound})


# --------------------------------------------------------------------------
# Explicit subsolution profile
# --------------------------------------------------------------------------

def hat_phi_profile(gamma: float) -> ClosedFormFunction:
    """(1 + z^2/4)^{-gamma/2} with its closed-form derivatives."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")

    def func(z):
        w = 1 + z * z / 4
        v = w ** (-gamma / 2)
        d1 = -(gamma / 4) * z * w ** (-gamma / 2 - 1)
        d2 = (gamma * (gamma + 2) / 16) * z * z * w ** (-gamma / 2 - 2) \
            - (gamma / 4) * w ** (-gamma / 2 - 1)
        return v, d1, d2

    return ClosedFormFunction(func, label="hat_Phi", meta={"gamma": gamma})


def hat_phi_inequality_residual(gamma: float, z):
    """LHS minus RHS of the differential inequality satisfied by hat_Phi (>= 0)."""
    v, d1, d2 = hat_phi_profile(gamma).evaluate(z)
    z = np.asarray(z, dtype=float)
    rhs = (gamma / 4) * (1 + z * z / 4) ** (-gamma / 2 - 1)
    return d2 + 0.5 * z * d1 + 0.5 * gamma * v - rhs
