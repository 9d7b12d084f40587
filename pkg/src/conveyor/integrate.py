"""Adaptive Dormand-Prince 5(4) integration with dense output.

The drive oscillates at angular rate b, so the default step ceiling is a
twentieth of the drive period and the ceiling is never allowed past a
quarter period: a controller that skated over the fast phase factor while
the solution is nearly constant would silently lose the forcing.

Two specialisations of the same embedded pair live here: a scalar core for
plain trajectories, and a two-component core that carries the variational
equation dw/dt = dF/dz(t, z(t)) * w alongside the state, yielding the exact
derivative of the period map in one pass.  The right-hand side is always a
caller-supplied (t, z) callable so the homotopy solver can reuse the engine
with its own blend of force and linear decay.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from conveyor.errors import StepSizeUnderflow
from conveyor.model import ConveyorParams, force_closure, force_dz_closure

# Dormand-Prince 5(4) tableau
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
# y5 - y4 error weights
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)
# quartic dense-output weights
_D1 = -12715105075.0 / 11282082432.0
_D3 = 87487479700.0 / 32700410799.0
_D4 = -10690763975.0 / 1880347072.0
_D5 = 701980252875.0 / 199316789632.0
_D6 = -1453857185.0 / 822651844.0
_D7 = 69997945.0 / 29380423.0

# PI controller constants (classic choices for this pair)
_SAFETY = 0.9
_BETA = 0.04
_EXPO1 = 0.2 - 0.75 * _BETA
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0

_STEP_FLOOR_REL = 1e-14


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and step bounds for the adaptive integrator.

    ``max_step`` and ``initial_step`` default to period/20 and period/1000
    when left as None; a ``max_step`` beyond period/4 is rejected because
    the drive would then go unresolved on near-constant stretches.
    """

    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float | None = None
    initial_step: float | None = None

    def __post_init__(self):
        if not self.rtol > 0.0:
            raise ValueError(f"rtol must be > 0, got {self.rtol!r}")
        if not self.atol > 0.0:
            raise ValueError(f"atol must be > 0, got {self.atol!r}")

    def resolved(self, period: float) -> tuple[float, float, float, float]:
        """Concrete (rtol, atol, max_step, initial_step) for a drive period."""
        max_step = period / 20.0 if self.max_step is None else self.max_step
        if not 0.0 < max_step <= period / 4.0:
            raise ValueError(
                f"max_step must lie in (0, period/4] = (0, {period / 4.0:.6g}], got {max_step!r}"
            )
        h0 = period / 1000.0 if self.initial_step is None else self.initial_step
        if not 0.0 < h0 <= max_step:
            raise ValueError(f"initial_step must lie in (0, max_step], got {h0!r}")
        return self.rtol, self.atol, max_step, h0


class Trajectory:
    """Densely sampled solution path with quartic interpolation.

    Knot times are the integrator's accepted steps; interpolation at a knot
    returns the stored knot value exactly, and queries anywhere between the
    endpoints evaluate the per-step dense polynomial.
    """

    __slots__ = ("params", "config", "_kt", "_kz", "_seg_t", "_seg_h", "_seg_c", "_lo", "_hi")

    def __init__(self, params: ConveyorParams, config: IntegratorConfig,
                 knot_t: Sequence[float], knot_z: Sequence[float],
                 seg_t: Sequence[float], seg_h: Sequence[float], seg_c):
        if knot_t[-1] < knot_t[0]:  # normalise backward runs to ascending time
            knot_t = knot_t[::-1]
            knot_z = knot_z[::-1]
            seg_t = seg_t[::-1]
            seg_h = seg_h[::-1]
            seg_c = seg_c[::-1]
        self.params = params
        self.config = config
        self._kt = np.asarray(knot_t, dtype=float)
        self._kz = np.asarray(knot_z, dtype=float)
        self._seg_t = list(seg_t)
        self._seg_h = list(seg_h)
        self._seg_c = list(seg_c)
        self._lo = float(self._kt[0])
        self._hi = float(self._kt[-1])

    @property
    def t0(self) -> float:
        return self._lo

    @property
    def t1(self) -> float:
        return self._hi

    @property
    def times(self) -> np.ndarray:
        return self._kt

    @property
    def states(self) -> np.ndarray:
        return self._kz

    @property
    def samples(self) -> np.ndarray:
        """Accepted (t, z) pairs as an (n, 2) array, ascending in t."""
        return np.column_stack((self._kt, self._kz))

    def __call__(self, t: float) -> float:
        return self.interp(t)

    def interp(self, t: float) -> float:
        """z(t) for t between the trajectory endpoints."""
        slack = 1e-12 * (self._hi - self._lo)
        if t < self._lo - slack or t > self._hi + slack:
            raise ValueError(f"t={t!r} outside trajectory span [{self._lo!r}, {self._hi!r}]")
        kt = self._kt
        j = bisect_right(kt, t) - 1
        if j < 0:
            j = 0
        elif j >= len(self._seg_t):
            j = len(self._seg_t) - 1
        if t == kt[j]:
            return float(self._kz[j])
        if t == kt[j + 1]:
            return float(self._kz[j + 1])
        c1, c2, c3, c4, c5 = self._seg_c[j]
        th = (t - self._seg_t[j]) / self._seg_h[j]
        th1 = 1.0 - th
        return c1 + th * (c2 + th1 * (c3 + th * (c4 + th1 * c5)))

    def sample(self, ts) -> np.ndarray:
        """Vector of interpolated values at the given times."""
        return np.array([self.interp(float(t)) for t in np.asarray(ts, dtype=float).ravel()])

    def sup_norm(self, refine: int = 8) -> float:
        """max |z| over the span, sampling each step's interpolant."""
        best = float(np.abs(self._kz).max())
        for c1, c2, c3, c4, c5 in self._seg_c:
            for i in range(1, refine):
                th = i / refine
                th1 = 1.0 - th
                v = abs(c1 + th * (c2 + th1 * (c3 + th * (c4 + th1 * c5))))
                if v > best:
                    best = v
        return best


def _error_norm(err: float, y0: float, y1: float, rtol: float, atol: float) -> float:
    return abs(err) / (atol + rtol * max(abs(y0), abs(y1)))


def _dp45_scalar(rhs: Callable[[float, float], float], z0: float, t0: float, t1: float,
                 rtol: float, atol: float, max_step: float, h0: float,
                 collect: bool):
    """Core scalar stepper.  Returns (z1, knots_t, knots_z, seg_t, seg_h, seg_c)."""
    span = t1 - t0
    direction = 1.0 if span > 0.0 else -1.0
    h_floor = _STEP_FLOOR_REL * abs(span)
    h = direction * min(h0, max_step, abs(span))

    t, y = t0, z0
    k1 = rhs(t, y)
    facold = 1e-4
    rejected = False

    knots_t = [t0]
    knots_z = [z0]
    seg_t: list[float] = []
    seg_h: list[float] = []
    seg_c: list[tuple] = []

    while (t1 - t) * direction > 0.0:
        if abs(h) < h_floor:
            raise StepSizeUnderflow(t, h)
        if (t + h - t1) * direction > 0.0:
            h = t1 - t

        k2 = rhs(t + _C2 * h, y + h * (_A21 * k1))
        k3 = rhs(t + _C3 * h, y + h * (_A31 * k1 + _A32 * k2))
        k4 = rhs(t + _C4 * h, y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3))
        k5 = rhs(t + _C5 * h, y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4))
        k6 = rhs(t + h, y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5))
        y1 = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        k7 = rhs(t + h, y1)

        err = h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
        err_norm = _error_norm(err, y, y1, rtol, atol)

        if err_norm <= 1.0:
            if collect:
                dy = y1 - y
                bspl = h * k1 - dy
                c4_ = dy - h * k7 - bspl
                c5_ = h * (_D1 * k1 + _D3 * k3 + _D4 * k4 + _D5 * k5 + _D6 * k6 + _D7 * k7)
                seg_t.append(t)
                seg_h.append(h)
                seg_c.append((y, dy, bspl, c4_, c5_))
                knots_t.append(t + h)
                knots_z.append(y1)
            t += h
            y = y1
            k1 = k7  # FSAL

            fac11 = max(err_norm, 1e-10) ** _EXPO1
            factor = min(_MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * (facold ** _BETA) / fac11))
            facold = max(err_norm, 1e-4)
            if rejected:
                factor = min(1.0, factor)
                rejected = False
            h *= factor
            if abs(h) > max_step:
                h = direction * max_step
        else:
            rejected = True
            h *= max(_MIN_FACTOR, _SAFETY / (err_norm ** _EXPO1))

    return y, knots_t, knots_z, seg_t, seg_h, seg_c


def _dp45_pair(rhs: Callable[[float, float], float], rhs_dz: Callable[[float, float], float],
               z0: float, t0: float, t1: float,
               rtol: float, atol: float, max_step: float, h0: float) -> tuple[float, float]:
    """State plus variational companion; returns (z(t1), w(t1)) with w(t0) = 1."""
    span = t1 - t0
    direction = 1.0 if span > 0.0 else -1.0
    h_floor = _STEP_FLOOR_REL * abs(span)
    h = direction * min(h0, max_step, abs(span))

    t, ya, yb = t0, z0, 1.0

    def f(tt: float, za: float, zb: float) -> tuple[float, float]:
        return rhs(tt, za), rhs_dz(tt, za) * zb

    k1a, k1b = f(t, ya, yb)
    facold = 1e-4
    rejected = False

    while (t1 - t) * direction > 0.0:
        if abs(h) < h_floor:
            raise StepSizeUnderflow(t, h)
        if (t + h - t1) * direction > 0.0:
            h = t1 - t

        k2a, k2b = f(t + _C2 * h, ya + h * (_A21 * k1a), yb + h * (_A21 * k1b))
        k3a, k3b = f(t + _C3 * h, ya + h * (_A31 * k1a + _A32 * k2a), yb + h * (_A31 * k1b + _A32 * k2b))
        k4a, k4b = f(
            t + _C4 * h,
            ya + h * (_A41 * k1a + _A42 * k2a + _A43 * k3a),
            yb + h * (_A41 * k1b + _A42 * k2b + _A43 * k3b),
        )
        k5a, k5b = f(
            t + _C5 * h,
            ya + h * (_A51 * k1a + _A52 * k2a + _A53 * k3a + _A54 * k4a),
            yb + h * (_A51 * k1b + _A52 * k2b + _A53 * k3b + _A54 * k4b),
        )
        k6a, k6b = f(
            t + h,
            ya + h * (_A61 * k1a + _A62 * k2a + _A63 * k3a + _A64 * k4a + _A65 * k5a),
            yb + h * (_A61 * k1b + _A62 * k2b + _A63 * k3b + _A64 * k4b + _A65 * k5b),
        )
        y1a = ya + h * (_B1 * k1a + _B3 * k3a + _B4 * k4a + _B5 * k5a + _B6 * k6a)
        y1b = yb + h * (_B1 * k1b + _B3 * k3b + _B4 * k4b + _B5 * k5b + _B6 * k6b)
        k7a, k7b = f(t + h, y1a, y1b)

        erra = h * (_E1 * k1a + _E3 * k3a + _E4 * k4a + _E5 * k5a + _E6 * k6a + _E7 * k7a)
        errb = h * (_E1 * k1b + _E3 * k3b + _E4 * k4b + _E5 * k5b + _E6 * k6b + _E7 * k7b)
        sa = atol + rtol * max(abs(ya), abs(y1a))
        sb = atol + rtol * max(abs(yb), abs(y1b))
        err_norm = math.sqrt(0.5 * ((erra / sa) ** 2 + (errb / sb) ** 2))

        if err_norm <= 1.0:
            t += h
            ya, yb = y1a, y1b
            k1a, k1b = k7a, k7b

            fac11 = max(err_norm, 1e-10) ** _EXPO1
            factor = min(_MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * (facold ** _BETA) / fac11))
            facold = max(err_norm, 1e-4)
            if rejected:
                factor = min(1.0, factor)
                rejected = False
            h *= factor
            if abs(h) > max_step:
                h = direction * max_step
        else:
            rejected = True
            h *= max(_MIN_FACTOR, _SAFETY / (err_norm ** _EXPO1))

    return ya, yb


def integrate(p: ConveyorParams, rhs: Callable[[float, float], float], z_i: float,
              t0: float, t1: float, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate dz/dt = rhs(t, z) from (t0, z_i) to t1 with dense output.

    Backward spans (t1 < t0) are supported so that runs can be retraced;
    the returned trajectory is always ordered by ascending time.

    Raises StepSizeUnderflow when the controller cannot make progress.
    """
    if t1 == t0:
        raise ValueError("integration span is empty (t1 == t0)")
    cfg = cfg or IntegratorConfig()
    rtol, atol, max_step, h0 = cfg.resolved(p.period)
    _, kt, kz, st, sh, sc = _dp45_scalar(rhs, z_i, t0, t1, rtol, atol, max_step, h0, collect=True)
    return Trajectory(p, cfg, kt, kz, st, sh, sc)


def propagate(p: ConveyorParams, rhs: Callable[[float, float], float], z_i: float,
              t0: float, t1: float, cfg: IntegratorConfig | None = None) -> float:
    """Final value z(t1) without storing the path (fast path for maps)."""
    if t1 == t0:
        return z_i
    cfg = cfg or IntegratorConfig()
    rtol, atol, max_step, h0 = cfg.resolved(p.period)
    z1, *_ = _dp45_scalar(rhs, z_i, t0, t1, rtol, atol, max_step, h0, collect=False)
    return z1


def flow_T(p: ConveyorParams, z0: float, cfg: IntegratorConfig | None = None,
           rhs: Callable[[float, float], float] | None = None) -> float:
    """Period map P(z0) = z(T; 0, z0), the map whose fixed points are the
    drive-periodic solutions.  ``rhs`` defaults to the conveyor force field."""
    if rhs is None:
        rhs = force_closure(p)
    return propagate(p, rhs, z0, 0.0, p.period, cfg)


def flow_T_with_sensitivity(p: ConveyorParams, z0: float,
                            cfg: IntegratorConfig | None = None,
                            rhs: Callable[[float, float], float] | None = None,
                            rhs_dz: Callable[[float, float], float] | None = None,
                            ) -> tuple[float, float]:
    """(P(z0), dP/dz0) in one pass via the variational equation.

    The second component integrates dw/dt = rhs_dz(t, z(t)) * w from w = 1;
    at a fixed point it is the orbit's stability multiplier.
    """
    if rhs is None:
        rhs = force_closure(p)
    if rhs_dz is None:
        rhs_dz = force_dz_closure(p)
    cfg = cfg or IntegratorConfig()
    rtol, atol, max_step, h0 = cfg.resolved(p.period)
    return _dp45_pair(rhs, rhs_dz, z0, 0.0, p.period, rtol, atol, max_step, h0)
