"""Numerical certificates for computed orbits.

Any true drive-periodic solution z(t) satisfies two integral identities
over one period, obtained by multiplying the equation of motion by z' and
integrating, then by eliminating the drive's time derivative:

    energy:  int |F(t, z)|^2 dt  =  - int dV/dt (t, z) dt
    force:   int |F(t, z)|^2 dt  =  -(b f0 / 2k) int cos^2(kz - bt/2) f'(z) dt

Both sides are evaluated here by adaptive Gauss-Lobatto quadrature on the
orbit's dense output; small relative residuals certify that a computed
orbit behaves like a genuine periodic solution rather than a numerical
coincidence.  The fixed-point scan certifies the complementary structural
fact that the flow has no rest points, separating double-precision
underflow from genuine zeros of the envelope.
"""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

from conveyor.errors import ConveyorError
from conveyor.integrate import IntegratorConfig, flow_T
from conveyor.model import (
    FP_GENUINE,
    ConveyorParams,
    envelope_d1,
    fixed_point_classify,
    force_closure,
    potential_dt_closure,
)
from conveyor.periodic import PeriodicOrbit

QUAD_TOL = 1e-10
_RESIDUAL_EPS = 1e-30
# Gauss-Lobatto 4-point nodes/weights on [-1, 1] and their 7-point
# Kronrod extension (shared end and 1/sqrt(5) nodes)
_X2 = math.sqrt(2.0 / 3.0)
_X3 = 1.0 / math.sqrt(5.0)
_GL4_W = (1.0 / 6.0, 5.0 / 6.0)
_GK7_W = (11.0 / 210.0, 72.0 / 245.0, 125.0 / 294.0, 16.0 / 35.0)
_MAX_DEPTH = 48


class IdentityResult(NamedTuple):
    lhs: float
    rhs: float
    rel_residual: float


class MultiplierCheck(NamedTuple):
    variational: float
    finite_difference: float
    rel_error: float


def gauss_lobatto(fn: Callable[[float], float], a: float, b: float,
                  tol: float = QUAD_TOL) -> float:
    """Adaptive Gauss-Lobatto integral of fn over [a, b].

    Each interval is accepted when the 7-point Kronrod extension agrees
    with the embedded 4-point rule to the interval's share of ``tol``,
    otherwise it is bisected; the absolute error budget is conserved
    across splits.
    """
    if a == b:
        return 0.0
    fa, fb = fn(a), fn(b)

    def recurse(lo: float, hi: float, flo: float, fhi: float,
                budget: float, depth: int) -> float:
        c = 0.5 * (lo + hi)
        hw = 0.5 * (hi - lo)
        f_m2, f_p2 = fn(c - _X2 * hw), fn(c + _X2 * hw)
        f_m3, f_p3 = fn(c - _X3 * hw), fn(c + _X3 * hw)
        f_c = fn(c)
        i4 = hw * (_GL4_W[0] * (flo + fhi) + _GL4_W[1] * (f_m3 + f_p3))
        i7 = hw * (
            _GK7_W[0] * (flo + fhi)
            + _GK7_W[1] * (f_m2 + f_p2)
            + _GK7_W[2] * (f_m3 + f_p3)
            + _GK7_W[3] * f_c
        )
        if abs(i7 - i4) <= budget or depth >= _MAX_DEPTH:
            return i7
        return recurse(lo, c, flo, f_c, 0.5 * budget, depth + 1) + recurse(
            c, hi, f_c, fhi, 0.5 * budget, depth + 1
        )

    return recurse(a, b, fa, fb, tol, 0)


def _require_certified(orbit: PeriodicOrbit):
    if orbit.residual > 1e-6:
        raise ConveyorError(
            f"orbit is not certified (residual {orbit.residual:.3e}); "
            "identities only hold on periodic solutions"
        )


def identity_energy(orbit: PeriodicOrbit, tol: float = QUAD_TOL) -> IdentityResult:
    """Energy-balance certificate: int |F|^2 dt vs -int dV/dt dt."""
    _require_certified(orbit)
    p = orbit.trajectory.params
    traj = orbit.trajectory
    rhs = force_closure(p)
    pot_t = potential_dt_closure(p)

    lhs = gauss_lobatto(lambda t: rhs(t, traj.interp(t)) ** 2, 0.0, orbit.period, tol)
    rhs_val = -gauss_lobatto(lambda t: pot_t(t, traj.interp(t)), 0.0, orbit.period, tol)
    rel = abs(lhs - rhs_val) / (abs(lhs) + abs(rhs_val) + _RESIDUAL_EPS)
    return IdentityResult(lhs, rhs_val, rel)


def identity_force(orbit: PeriodicOrbit, tol: float = QUAD_TOL) -> IdentityResult:
    """Drive-elimination certificate:

    int |F|^2 dt vs -(b f0 / 2k) int cos^2(kz - bt/2) f'(z) dt.

    With a plane envelope the right side vanishes identically, so plane
    waves admit no non-trivial periodic solutions; for decaying envelopes
    a positive right side forces the orbit to sit where f' < 0 on average.
    """
    _require_certified(orbit)
    p = orbit.trajectory.params
    traj = orbit.trajectory
    rhs = force_closure(p)
    e = p.envelope
    half_b = 0.5 * p.b
    k = p.k

    def weighted_slope(t: float) -> float:
        z = traj.interp(t)
        c = math.cos(k * z - half_b * t)
        return c * c * envelope_d1(e, z)

    lhs = gauss_lobatto(lambda t: rhs(t, traj.interp(t)) ** 2, 0.0, orbit.period, tol)
    factor = -(p.b * p.f0) / (2.0 * p.k)
    rhs_val = factor * gauss_lobatto(weighted_slope, 0.0, orbit.period, tol)
    rel = abs(lhs - rhs_val) / (abs(lhs) + abs(rhs_val) + _RESIDUAL_EPS)
    return IdentityResult(lhs, rhs_val, rel)


def fixed_point_scan(p: ConveyorParams, z_lo: float, z_hi: float, n: int,
                     tol: float = 1e-12) -> list[float]:
    """Grid scan for genuine rest points of the flow; expected empty.

    Applies the numeric rest-point test at each grid point and keeps only
    hits that survive log-space classification: positions where the
    envelope merely underflowed double precision are artifacts, not rest
    points, and are excluded.
    """
    if not z_lo < z_hi:
        raise ValueError(f"need z_lo < z_hi, got [{z_lo!r}, {z_hi!r}]")
    if n < 2:
        raise ValueError(f"need n >= 2 grid points, got {n!r}")
    flagged = []
    for i in range(n):
        z = z_lo + (z_hi - z_lo) * i / (n - 1)
        if fixed_point_classify(p, z, tol) == FP_GENUINE:
            flagged.append(z)
    return flagged


def multiplier_cross_check(p: ConveyorParams, orbit: PeriodicOrbit,
                           cfg: IntegratorConfig | None = None,
                           h: float = 1e-6) -> MultiplierCheck:
    """Variational multiplier vs central finite difference of the period map."""
    rhs = force_closure(p)
    plus = flow_T(p, orbit.z_star + h, cfg, rhs=rhs)
    minus = flow_T(p, orbit.z_star - h, cfg, rhs=rhs)
    fd = (plus - minus) / (2.0 * h)
    rel = abs(orbit.multiplier - fd) / max(abs(fd), 1e-300)
    return MultiplierCheck(orbit.multiplier, fd, rel)
