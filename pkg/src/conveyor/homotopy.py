"""Homotopy continuation from a linear decay problem to the full conveyor.

The auxiliary family blends a trivially solvable linear problem into the
equation of motion:

    dz/dt = -(1 - lam) * z + lam * F(t, z),     z(0) = z(T),

for lam in (0, 1].  At lam -> 0 the unique periodic solution is z == 0; the
branch z0(lam) of periodic initial conditions is followed with adaptive
steps up to lam = 1, where it must land on a fixed point of the plain
period map.  This realises constructively the existence argument that the
shooting solver certifies independently, so the two endpoints agreeing is a
meaningful cross-check, not a tautology.

Also here: the closed-form solver for the linear boundary-value problem
dy/dt = -y + q(t), y(0) - y(T) = c0 that anchors the homotopy argument,
and the randomized audit of its stability bound
||y||_C <= (1 + 1/(1 - exp(-T))) * (|c0| + ||q||_L1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from conveyor._newton import solve_fixed_point
from conveyor.errors import ContinuationStall, EmptyAudit, NoConvergence
from conveyor.integrate import (
    IntegratorConfig,
    Trajectory,
    flow_T,
    flow_T_with_sensitivity,
    integrate,
)
from conveyor.model import ConveyorParams, force_closure, force_dz_closure

LAMBDA_START = 0.01
LAMBDA_STEP_INIT = 0.05
LAMBDA_STEP_MAX = 0.1
LAMBDA_STEP_MIN = 1e-6
BVP_TOL = 1e-9


class ContinuationStep(NamedTuple):
    lambda_h: float
    z0: float
    residual: float
    sup_norm: float


@dataclass(frozen=True)
class ContinuationTrace:
    """Accepted (lambda, z0) branch points with per-step certificates."""

    steps: tuple[ContinuationStep, ...]
    converged: bool

    @property
    def final(self) -> ContinuationStep:
        if not self.steps:
            raise EmptyAudit("continuation trace has no accepted steps")
        return self.steps[-1]


def homotopy_rhs(p: ConveyorParams, lambda_h: float, t: float, z: float) -> float:
    """Right-hand side of the blended problem, -(1-lam)*z + lam*F(t, z)."""
    _check_lambda(lambda_h)
    return -(1.0 - lambda_h) * z + lambda_h * force_closure(p)(t, z)


def _check_lambda(lambda_h: float):
    if not 0.0 <= lambda_h <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lambda_h!r}")


def _lambda_closures(p: ConveyorParams, lambda_h: float,
                     ) -> tuple[Callable[[float, float], float], Callable[[float, float], float]]:
    force = force_closure(p)
    force_dz = force_dz_closure(p)
    decay = 1.0 - lambda_h
    lam = lambda_h

    def rhs(t: float, z: float) -> float:
        return -decay * z + lam * force(t, z)

    def rhs_dz(t: float, z: float) -> float:
        return -decay + lam * force_dz(t, z)

    return rhs, rhs_dz


def solve_at_lambda(p: ConveyorParams, lambda_h: float, z_guess: float,
                    cfg: IntegratorConfig | None = None,
                    tol: float = BVP_TOL) -> tuple[float, Trajectory]:
    """Periodic initial condition of the blended problem at one lambda.

    Newton shooting on the lambda-flow's period map, certified to
    |z(T) - z(0)| < tol; returns the fixed point and one dense period.
    Raises NoConvergence like the plain orbit solver.
    """
    _check_lambda(lambda_h)
    rhs, rhs_dz = _lambda_closures(p, lambda_h)
    res = solve_fixed_point(
        lambda z: flow_T_with_sensitivity(p, z, cfg, rhs=rhs, rhs_dz=rhs_dz),
        lambda z: flow_T(p, z, cfg, rhs=rhs),
        z_guess,
        tol,
    )
    traj = integrate(p, rhs, res.z_star, 0.0, p.period, cfg)
    return res.z_star, traj


def continue_to_one(p: ConveyorParams, cfg: IntegratorConfig | None = None,
                    tol: float = BVP_TOL) -> ContinuationTrace:
    """Follow the branch of periodic solutions from lambda ~ 0 to lambda = 1.

    Starts at lambda = 0.01 seeded with z = 0 (the analytic solution of the
    pure-decay endpoint); steps adapt by halving on failure and growing
    1.5x on success, capped at 0.1.  Raises ContinuationStall, carrying the
    partial trace, if the step underflows below 1e-6 before reaching 1.
    """
    steps: list[ContinuationStep] = []
    lam = LAMBDA_START
    dlam = LAMBDA_STEP_INIT
    z_prev = 0.0

    while True:
        try:
            z0, traj = solve_at_lambda(p, lam, z_prev, cfg, tol)
        except NoConvergence:
            if not steps:
                raise  # could not even start the branch
            dlam *= 0.5
            if dlam < LAMBDA_STEP_MIN:
                raise ContinuationStall(ContinuationTrace(tuple(steps), False))
            lam = min(steps[-1].lambda_h + dlam, 1.0)
            continue
        residual = abs(float(traj.states[-1]) - z0)
        steps.append(ContinuationStep(lam, z0, residual, traj.sup_norm()))
        z_prev = z0
        if lam >= 1.0:
            return ContinuationTrace(tuple(steps), True)
        dlam = min(dlam * 1.5, LAMBDA_STEP_MAX)
        lam = min(lam + dlam, 1.0)


def rho_audit(trace: ContinuationTrace) -> float:
    """Largest sup-norm along the branch: the empirical uniform bound that
    the existence argument requires of the whole family."""
    if not trace.steps:
        raise EmptyAudit("rho audit needs a non-empty continuation trace")
    return max(s.sup_norm for s in trace.steps)


# ---------------------------------------------------------------------------
# linear boundary-value kernel


def linear_bvp(t: Sequence[float], q: Sequence[float], c0: float) -> np.ndarray:
    """Solve dy/dt = -y + q(t) with y(0) - y(T) = c0 in closed form.

    ``q`` is sampled on the grid ``t`` (t[0] = 0, strictly increasing) and
    interpreted piecewise-linearly; the convolution integral
    int_0^t exp(s - t) q(s) ds is then exact per segment, so the returned
    samples satisfy the boundary condition to roundoff and the ODE to the
    interpolation error of q.
    """
    t = np.asarray(t, dtype=float)
    q = np.asarray(q, dtype=float)
    if t.ndim != 1 or t.shape != q.shape or t.size < 2:
        raise ValueError("t and q must be equal-length 1-d arrays with at least 2 samples")
    if t[0] != 0.0:
        raise ValueError(f"grid must start at 0, got t[0] = {t[0]!r}")
    dt = np.diff(t)
    if not (dt > 0.0).all():
        raise ValueError("grid must be strictly increasing")
    T = float(t[-1])

    # I(t_j) = int_0^{t_j} exp(s - t_j) q(s) ds by segment-exact recurrence
    conv = np.empty_like(q)
    conv[0] = 0.0
    acc = 0.0
    for j, h in enumerate(dt):
        eh = math.exp(-h)
        slope = (q[j + 1] - q[j]) / h
        acc = acc * eh + q[j] * (-math.expm1(-h)) + slope * (h + math.expm1(-h))
        conv[j + 1] = acc

    y_T = (math.exp(-T) * c0 + conv[-1]) / (-math.expm1(-T))
    y_0 = y_T + c0
    return np.exp(-t) * y_0 + conv


def piecewise_linear_l1(t: Sequence[float], q: Sequence[float]) -> float:
    """Exact L1 norm of the piecewise-linear interpolant of (t, q)."""
    t = np.asarray(t, dtype=float)
    q = np.asarray(q, dtype=float)
    total = 0.0
    for j in range(t.size - 1):
        h = t[j + 1] - t[j]
        a, b = q[j], q[j + 1]
        if a * b >= 0.0:
            total += 0.5 * h * (abs(a) + abs(b))
        else:
            total += 0.5 * h * (a * a + b * b) / (abs(a) + abs(b))
    return total


class BetaBoundReport(NamedTuple):
    beta: float
    max_ratio: float
    n_cases: int
    passed: bool


def beta_bound_audit(period: float, n_cases: int = 100, seed: int = 20260810,
                     n_grid: int = 512) -> BetaBoundReport:
    """Randomized audit of ||y||_C <= beta * (|c0| + ||q||_L1).

    beta = 1 + 1/(1 - exp(-T)) follows from chaining |y(T)| through the
    boundary condition and the convolution bound; each case draws a smooth
    random trig polynomial q and a random c0 and checks the solved y.
    Reports the worst observed ratio.
    """
    if not period > 0.0:
        raise ValueError(f"period must be > 0, got {period!r}")
    beta = 1.0 + 1.0 / (-math.expm1(-period))
    rng = np.random.default_rng(seed)
    ts = np.linspace(0.0, period, n_grid)
    max_ratio = 0.0
    for _ in range(n_cases):
        n_modes = int(rng.integers(1, 6))
        q = np.zeros_like(ts)
        for m in range(n_modes + 1):
            w = 2.0 * math.pi * m / period
            q += rng.normal() / (m + 1.0) * np.cos(w * ts)
            q += rng.normal() / (m + 1.0) * np.sin(w * ts)
        c0 = float(rng.normal()) * 2.0
        y = linear_bvp(ts, q, c0)
        ratio = float(np.abs(y).max()) / (abs(c0) + piecewise_linear_l1(ts, q) + 1e-300)
        if ratio > max_ratio:
            max_ratio = ratio
    return BetaBoundReport(beta, max_ratio, n_cases, max_ratio <= beta)
