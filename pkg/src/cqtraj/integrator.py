"""Dormand-Prince 5(4) stepper for small complex-valued autonomous systems.

Written out by hand rather than wrapping ``scipy.integrate`` because the
trajectory code needs per-step hooks: a step-size cap that keeps the turn
around each pole below pi, and retry-with-smaller-step when a stage lands
inside the pole guard.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import PoleProximity

# Butcher tableau
C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
A_MAT = np.zeros((7, 7))
for _i, _row in enumerate(A):
    A_MAT[_i, : len(_row)] = _row
B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
# difference between the 5th and embedded 4th order weights
E = np.array([71 / 57600, 0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# continuous extension, y(t + s h) = y + h K^T (P @ [s, s^2, s^3, s^4])
P = np.array(
    [
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


class DormandPrince:
    """Adaptive integrator for ``dy/dt = rhs(y)`` with complex ``y``.

    Parameters
    ----------
    rhs : callable
        Maps a complex state vector to its derivative.  May raise
        :class:`PoleProximity`; the step is then retried with a quarter of
        the step size.
    y0 : array_like
        Initial state.
    rtol, atol : float
        Local error tolerances, applied per component to the modulus.
    max_step : float
        Upper bound on the step size.
    step_cap : callable, optional
        ``step_cap(y, f) -> float`` extra bound on the next step.
    """

    def __init__(self, rhs, y0, *, rtol=1e-10, atol=1e-12, max_step=np.inf, step_cap=None, t0=0.0):
        self.rhs = rhs
        self.rtol = rtol
        self.atol = atol
        self.max_step = max_step
        self.step_cap = step_cap
        self.t = t0
        self.y = np.array(y0, dtype=complex)
        self.f = np.asarray(rhs(self.y), dtype=complex)
        self.t_old = None
        self.y_old = None
        self.h_last = None
        self.K = np.empty((7, self.y.size), dtype=complex)
        self.nfev = 1
        self.nrejected = 0
        self.h = self._initial_step()

    def _norm(self, e, y_a, y_b):
        scale = self.atol + self.rtol * np.maximum(np.abs(y_a), np.abs(y_b))
        r = np.abs(e) / scale
        return math.sqrt(float(r @ r) / r.size)

    def _initial_step(self):
        scale = self.atol + self.rtol * np.abs(self.y)
        d0 = math.sqrt(float(np.mean(np.abs(self.y / scale) ** 2)))
        d1 = math.sqrt(float(np.mean(np.abs(self.f / scale) ** 2)))
        h = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
        return min(h, self.max_step, self._cap(self.y, self.f))

    def _cap(self, y, f):
        return self.step_cap(y, f) if self.step_cap is not None else np.inf

    def step(self):
        """Advance by one accepted step."""
        y, f = self.y, self.f
        h = min(self.h, self.max_step, self._cap(y, f))
        K = self.K
        h_min = 1e-14 * max(1.0, abs(self.t))
        while True:
            if h < h_min:
                raise PoleProximity(f"step size underflow at t={self.t}", point=complex(y[0]))
            K[0] = f
            try:
                for s in range(1, 7):
                    K[s] = self.rhs(y + h * (A_MAT[s, :s] @ K[:s]))
                self.nfev += 6
            except PoleProximity:
                self.nrejected += 1
                h *= 0.25
                continue
            y_new = y + h * (B @ K)
            err = self._norm(h * (E @ K), y, y_new)
            if not math.isfinite(err):
                self.nrejected += 1
                h *= MIN_FACTOR
                continue
            if err <= 1.0:
                factor = MAX_FACTOR if err == 0 else min(MAX_FACTOR, SAFETY * err**-0.2)
                break
            self.nrejected += 1
            h *= max(MIN_FACTOR, SAFETY * err**-0.2)
        self.t_old, self.y_old = self.t, y
        self.t = self.t + h
        self.y = y_new
        self.f = K[6].copy()
        self.h_last = h
        self.h = h * factor
        self._K_last = K.copy()
        return self.t, self.y

    def dense(self, t):
        """Interpolated state at ``t`` inside the last accepted step."""
        s = (t - self.t_old) / self.h_last
        q = P @ np.array([s, s * s, s * s * s, s**4])
        return self.y_old + self.h_last * (q @ self._K_last)
