"""Closed-form radial trajectory process for the annular-sector neighborhood.

A drone that takes off at ``T`` alternates outbound and inbound legs of
length ``tau``. On an outbound leg its radius grows like the square root of
elapsed time, which makes the time it spends at radius ``r`` proportional to
``r``; with ``T`` uniform on ``(0, tau)`` this gives the area-uniform radial
density ``2r / (rho^2 - gamma^2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import AnnularSector


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class IdealParams:
    sector: AnnularSector
    v_avg: float = 10.0
    drones: int = 10
    houses: int = 100
    tau: float = field(init=False)

    def __post_init__(self):
        if not (self.v_avg > 0):
            raise ValueError(f"v_avg must be positive, got {self.v_avg}")
        if self.drones < 1 or self.houses < 1:
            raise ValueError("need at least one drone and one house")
        object.__setattr__(self, "tau", (self.sector.rho - self.sector.gamma) / self.v_avg)

    @property
    def gamma(self) -> float:
        return self.sector.gamma

    @property
    def rho(self) -> float:
        return self.sector.rho

    @property
    def span2(self) -> float:
        """rho^2 - gamma^2."""
        return self.sector.rho**2 - self.sector.gamma**2


def sample_takeoffs(params: IdealParams, rng_seed) -> np.ndarray:
    """``D`` take-off times, i.i.d. uniform on the open interval ``(0, tau)``."""
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    t = rng.uniform(0.0, params.tau, size=params.drones)
    # uniform() is half-open; redraw the (probability ~0) left endpoint
    while np.any(t <= 0.0):
        bad = t <= 0.0
        t[bad] = rng.uniform(0.0, params.tau, size=int(bad.sum()))
    return t


def sample_house_angles(params: IdealParams, rng) -> np.ndarray:
    return rng.uniform(0.0, params.sector.theta_max, size=params.houses)


def _leg(t, takeoff, tau):
    u = np.asarray(t, dtype=float) - takeoff
    if np.any(u < 0):
        raise DomainError("time precedes take-off")
    k = np.floor(u / tau)
    return u - k * tau, k


def radius_at(t, takeoff, params: IdealParams):
    """Radius of a drone at time ``t`` (scalar or array)."""
    w, k = _leg(t, takeoff, params.tau)
    odd = np.mod(k, 2.0) == 1.0
    frac = np.where(odd, params.tau - w, w) / params.tau
    r = np.sqrt(params.span2 * frac + params.gamma**2)
    r = np.clip(r, params.gamma, params.rho)
    return float(r) if np.ndim(r) == 0 else r


def speed_at(t, takeoff, params: IdealParams):
    """Signed radial speed; positive outbound, negative inbound.

    At a leg boundary the leg that starts at ``t`` is used.
    """
    w, k = _leg(t, takeoff, params.tau)
    odd = np.mod(k, 2.0) == 1.0
    elapsed = np.where(odd, params.tau - w, w)
    v = params.span2 / (2.0 * np.sqrt(params.tau * (params.span2 * elapsed + params.tau * params.gamma**2)))
    v = np.where(odd, -v, v)
    return float(v) if np.ndim(v) == 0 else v


def time_at_radius(r, leg_start: float, outbound: bool, params: IdealParams):
    """Inverse of :func:`radius_at` on one leg: when the drone is at radius ``r``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < params.gamma) or np.any(r > params.rho):
        raise DomainError(f"radius outside [{params.gamma}, {params.rho}]")
    frac = (r * r - params.gamma**2) / params.span2
    out = leg_start + params.tau * (frac if outbound else 1.0 - frac)
    return float(out) if out.ndim == 0 else out


def radial_pdf(r, params: IdealParams):
    r = np.asarray(r, dtype=float)
    if np.any(r < params.gamma) or np.any(r > params.rho):
        raise DomainError(f"radius outside [{params.gamma}, {params.rho}]")
    out = 2.0 * r / params.span2
    return float(out) if out.ndim == 0 else out


def radial_cdf(r, params: IdealParams):
    r = np.asarray(r, dtype=float)
    if np.any(r < params.gamma) or np.any(r > params.rho):
        raise DomainError(f"radius outside [{params.gamma}, {params.rho}]")
    out = (r * r - params.gamma**2) / params.span2
    return float(out) if out.ndim == 0 else out


def lower_bound_time(m: int, params: IdealParams) -> float:
    """Smallest possible time to deliver ``m`` packages with ``D`` drones: 2 m tau / D."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return 2.0 * m * params.tau / params.drones


def upper_bound_time(m: int, params: IdealParams) -> float:
    return lower_bound_time(m, params) + params.tau


def efficiency_bound(m: int, drones: int) -> float:
    if m < 1 or drones < 1:
        raise ValueError("m and drones must be >= 1")
    return 1.0 / (1.0 + drones / (2.0 * m))


def outbound_speed_extremes(params: IdealParams) -> tuple[float, float]:
    """Speed at the start and at the end of an outbound leg."""
    return (
        params.span2 / (2.0 * params.tau * params.gamma),
        params.span2 / (2.0 * params.tau * params.rho),
    )


def inverse_cdf_radii(u, params: IdealParams):
    """Radii with the area-uniform law, by inverse transform of ``u`` in [0, 1]."""
    return np.sqrt(params.gamma**2 + np.asarray(u) * params.span2)


def is_leg_boundary(t, takeoff, params: IdealParams, clearance: float) -> np.ndarray:
    w, _ = _leg(t, takeoff, params.tau)
    return (w < clearance) | (params.tau - w < clearance)


__all__ = [
    "DomainError",
    "IdealParams",
    "sample_takeoffs",
    "sample_house_angles",
    "radius_at",
    "speed_at",
    "time_at_radius",
    "radial_pdf",
    "radial_cdf",
    "lower_bound_time",
    "upper_bound_time",
    "efficiency_bound",
    "outbound_speed_extremes",
    "inverse_cdf_radii",
    "is_leg_boundary",
]
