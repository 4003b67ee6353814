"""Barenblatt solutions, self-similar variables and the phi/chi perturbation stack."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .special_functions import ModelParams


def barenblatt_V(params: ModelParams, x, D: float | None = None):
    """Stationary profile V_D(x) = (D + |x|^2)^{-(n-2)/2}."""
    D = params.D if D is None else D
    x = np.asarray(x, dtype=float)
    return (D + x * x) ** (-(params.n - 2) / 2)


@dataclass(frozen=True)
class BarenblattProfile:
    params: ModelParams

    def __call__(self, x):
        return barenblatt_V(self.params, x)

    @property
    def peak(self) -> float:
        return self.params.D ** (-(self.params.n - 2) / 2)


def barenblatt_U(params: ModelParams, D_profile: float, T: float, y, tau):
    """Self-similar Barenblatt solution U_{D,T}(y, tau) of the original equation."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau >= T) or np.any(tau < 0):
        raise ValueError("tau must lie in [0, T)")
    m = params.m_exact
    R = (T - tau) ** (-params.beta)
    y = np.asarray(y, dtype=float)
    coef = float(params.beta * (1 - m) / 2)
    return R ** (-params.n) * (D_profile + coef * (y / R) ** 2) ** float(-1 / (1 - m))


@dataclass(frozen=True)
class VariableStack:
    """Maps between original (y, tau, u), rescaled (x, t, v) and perturbation variables.

    ``T`` is the extinction time fixing R(tau) = (T - tau)^{-beta}.
    """

    params: ModelParams
    T: float = 1.0

    def R(self, tau):
        return (self.T - np.asarray(tau, dtype=float)) ** (-self.params.beta)

    def t_of_tau(self, tau):
        return np.log(self.R(tau) / self.R(0.0)) / self.params.mu

    def tau_of_t(self, t):
        R = self.R(0.0) * np.exp(self.params.mu * np.asarray(t, dtype=float))
        return self.T - R ** (-1 / self.params.beta)

    def x_of_y(self, y, tau):
        p = self.params
        return math.sqrt(p.beta / p.mu) * np.asarray(y, dtype=float) / self.R(tau)

    def y_of_x(self, x, tau):
        p = self.params
        return np.asarray(x, dtype=float) * self.R(tau) / math.sqrt(p.beta / p.mu)

    def v_of_u(self, u, tau):
        return self.R(tau) ** self.params.n * np.asarray(u, dtype=float)

    def u_of_v(self, v, tau):
        return np.asarray(v, dtype=float) / self.R(tau) ** self.params.n

    def v_of_phi(self, phi, r):
        return v_from_phi(self.params, phi, r)

    def phi_of_v(self, v, r):
        return phi_from_v(self.params, v, r)

    @staticmethod
    def xi_of_r(r):
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(r, dtype=float))

    @staticmethod
    def r_of_xi(xi):
        return np.exp(np.asarray(xi, dtype=float))


def v_from_phi(params: ModelParams, phi, r):
    """v = (r^2 + D + phi)^{-(n-2)/2}."""
    base = np.asarray(r, dtype=float) ** 2 + params.D + np.asarray(phi, dtype=float)
    if np.any(base <= 0):
        raise ValueError("r^2 + D + phi must be positive")
    return base ** (-(params.n - 2) / 2)


def phi_from_v(params: ModelParams, v, r):
    """Inverse of :func:`v_from_phi`."""
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0):
        raise ValueError("v must be positive")
    return v ** (-2 / (params.n - 2)) - np.asarray(r, dtype=float) ** 2 - params.D


# --------------------------------------------------------------------------
# Radial initial data at the phi level
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialData:
    """Nonnegative radial initial datum phi0.

    ``at_xi`` evaluates in logarithmic radius, which keeps far-field values
    finite where r = e^xi overflows.  ``xi = -inf`` is the origin.
    """

    at_xi: Callable[[np.ndarray], np.ndarray]
    label: str
    descriptor: dict

    def __call__(self, r):
        with np.errstate(divide="ignore"):
            return self.at_xi(np.log(np.asarray(r, dtype=float)))


def initial_phi_from_psi(psi0: Callable, label: str = "custom") -> RadialData:
    """Wrap a radial function psi0(r) >= 0 as phi-level initial data.

    The perturbation of the initial profile is the identity at the phi level,
    so this only validates and radialises.
    """

    def at_xi(xi):
        xi = np.asarray(xi, dtype=float)
        with np.errstate(over="ignore"):
            r = np.exp(xi)
        out = np.asarray(psi0(r), dtype=float) * np.ones_like(xi)
        if np.any(out < 0) or np.any(~np.isfinite(out)):
            raise ValueError("psi0 must be finite and nonnegative")
        return out

    return RadialData(at_xi, label, {"family": label})


def zero_data() -> RadialData:
    return RadialData(lambda xi: np.zeros_like(np.asarray(xi, dtype=float)),
                      "zero", {"family": "zero"})


def const_data(c: float) -> RadialData:
    if c < 0:
        raise ValueError("constant must be nonnegative")
    return RadialData(lambda xi: np.full_like(np.asarray(xi, dtype=float), c),
                      "const", {"family": "const", "c": c})


def _hermite_cap(B: float, gamma: float):
    """Monotone cubic on [0, 2] with zero slope at 0 matching value and slope at r = 2."""
    l2 = math.log(2.0)
    g2 = B * l2 ** (-gamma)
    s2 = -B * gamma * l2 ** (-gamma - 1) / 2
    # Endpoint drop of |s2| h / 2 keeps the Fritsch-Carlson ratio at 2.
    c0 = g2 + abs(s2)
    h = 2.0

    def cap(r):
        u = r / h
        h00 = 2 * u**3 - 3 * u**2 + 1
        h01 = -2 * u**3 + 3 * u**2
        h11 = u**3 - u**2
        return h00 * c0 + h01 * g2 + h11 * h * s2

    return cap, c0


def log_tail_data(B: float = 1.0, gamma: float = 0.5) -> RadialData:
    """phi0 = B (ln r)^{-gamma} for r > 2 with a cubic Hermite cap on [0, 2].

    gamma = 0 gives the constant datum B.
    """
    if B <= 0 or gamma < 0:
        raise ValueError("need B > 0 and gamma >= 0")
    cap, c0 = _hermite_cap(B, gamma)
    l2 = math.log(2.0)

    def at_xi(xi):
        xi = np.asarray(xi, dtype=float)
        out = np.empty_like(xi)
        tail = xi > l2
        out[tail] = B * xi[tail] ** (-gamma)
        with np.errstate(under="ignore"):
            r = np.exp(xi[~tail])
        out[~tail] = cap(r)
        return out

    return RadialData(at_xi, "log-tail",
                      {"family": "log-tail", "B": B, "gamma": gamma, "cap_peak": c0})


def bump_data(amplitude: float = 1.0, r_a: float = 1.0, r_b: float = 3.0) -> RadialData:
    """Smooth compactly supported bump on (r_a, r_b)."""
    if not (0 <= r_a < r_b) or amplitude <= 0:
        raise ValueError("need 0 <= r_a < r_b and amplitude > 0")
    mid = 0.5 * (r_a + r_b)
    half = 0.5 * (r_b - r_a)

    def at_xi(xi):
        xi = np.asarray(xi, dtype=float)
        with np.errstate(over="ignore", under="ignore"):
            r = np.exp(xi)
        u = (r - mid) / half
        out = np.zeros_like(xi)
        inside = np.abs(u) < 1
        out[inside] = amplitude * np.exp(1 - 1 / (1 - u[inside] ** 2))
        return out

    return RadialData(at_xi, "bump",
                      {"family": "bump", "amplitude": amplitude, "r_a": r_a, "r_b": r_b})


def tail_ratio_bounds(phi0: RadialData, gamma: float, xi_max: float = 60.0,
                      points: int = 20001) -> tuple:
    """min and max of phi0(r) (ln r)^gamma over r > 2 (grid scan in ln r).

    These are the largest admissible lower constant b and the smallest
    admissible upper constant B on the scanned window.
    """
    xi = np.linspace(math.log(2.0), xi_max, points)[1:]
    ratio = phi0.at_xi(xi) * xi**gamma
    return float(ratio.min()), float(ratio.max())
