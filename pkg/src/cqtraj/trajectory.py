"""Complex trajectories: integration, real-axis crossings, closure and orbit type."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .eigenstate import (
    OscillatorModel,
    field_structure,
    log_level,
    velocity,
)
from .errors import BudgetExceeded, DegenerateStart, PoleProximity
from .integrator import DormandPrince

log = logging.getLogger(__name__)

DEGENERATE_SPEED = 1e-13


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = 0.25
    max_time: float = 50.0
    closure_tol: float = 1e-8

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "max_step", "max_time", "closure_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class CrossingEvent:
    """Real-axis crossing.  ``t`` is physical time relative to the start."""

    t: float
    x_r: float
    direction: int


@dataclass
class Trajectory:
    """Sampled orbit.

    ``times`` are integrator times (always increasing).  For ``direction=-1``
    the orbit was integrated on the negated field, so physical time is
    ``-times``.  ``kinetic`` and ``potential`` hold the running integrals of
    Im(v^2 / 2) and Im V = X_r X_i over integrator time.
    """

    model: OscillatorModel
    times: np.ndarray
    points: np.ndarray
    kinetic: np.ndarray
    potential: np.ndarray
    crossings: list[CrossingEvent] = field(default_factory=list)
    closed: bool = False
    period: float | None = None
    winding_turns: dict[float, float] = field(default_factory=dict)
    winding_numbers: dict[float, int] = field(default_factory=dict)
    direction: int = 1
    stop_reason: str = ""
    mass: np.ndarray | None = None

    @property
    def start(self) -> complex:
        return complex(self.points[0])

    @property
    def end(self) -> complex:
        return complex(self.points[-1])


class OrbitKind(enum.Enum):
    NEST = "nest"
    SUBNEST = "subnest"
    OPEN = "open"


def _rhs(model: OscillatorModel, direction: int, mass_anchor: float | None):
    """State is [X, J, (M)] with J = int Im(v^2/2) + i int Im V.

    With ``mass_anchor`` set, M accumulates the orbit mass integrands
    rho|v|^2 for the conserved (real part) and psi*psi (imag part) densities
    anchored at a Born value ``mass_anchor`` at the start.
    """

    def rhs(y):
        X = y[0]
        v = velocity(model, X)
        dJ = complex((v * v).imag / 2, X.real * X.imag)
        if mass_anchor is None:
            return np.array([direction * v, dJ])
        J = y[1]
        speed2 = v.real * v.real + v.imag * v.imag
        # J is accumulated in integrator time; physical integrals carry the direction sign
        wyatt = mass_anchor * math.exp(-4 * direction * J.real) * speed2
        conserved = mass_anchor * math.exp(-4 * direction * (J.real + J.imag)) * speed2
        return np.array([direction * v, dJ, complex(conserved, wyatt)])

    return rhs


def _winding_cap(poles: np.ndarray):
    if len(poles) == 0:
        return None

    def cap(y, f):
        d = float(np.min(np.abs(y[0] - poles)))
        speed = abs(f[0])
        return 0.5 * d / speed if speed > 0 else math.inf

    return cap


def integrate(
    model: OscillatorModel,
    start: complex,
    config: IntegratorConfig | None = None,
    *,
    direction: int = 1,
    until: str = "closure",
    stop_radius: float | None = None,
    mass_anchor: float | None = None,
    strict: bool = False,
) -> Trajectory:
    """Integrate dX/dT = velocity(X) from ``start``.

    Parameters
    ----------
    until : {"closure", "crossing"}
        Stop at orbit closure, or at the first real-axis crossing after the
        start.
    stop_radius : float, optional
        Also stop once the orbit comes within this distance of a pole.
    mass_anchor : float, optional
        Accumulate orbit-mass integrals (see :func:`_rhs`).
    strict : bool
        Raise :class:`BudgetExceeded` instead of returning an unclosed orbit
        when ``max_time`` runs out.

    Raises
    ------
    DegenerateStart
        ``start`` is a stagnation point.
    PoleProximity
        ``start`` is a pole, or the integrator cannot step past one; the
        partial trajectory is attached to the exception.
    """
    config = config or IntegratorConfig()
    start = complex(start)
    if not (math.isfinite(start.real) and math.isfinite(start.imag)):
        raise ValueError("start must be finite")
    v0 = velocity(model, start)
    if abs(v0) < DEGENERATE_SPEED:
        raise DegenerateStart(f"start {start!r} is a stagnation point")

    fs = field_structure(model)
    poles = fs.poles
    y0 = [start, 0j] if mass_anchor is None else [start, 0j, 0j]
    solver = DormandPrince(
        _rhs(model, direction, mass_anchor),
        y0,
        rtol=config.rel_tol,
        atol=config.abs_tol,
        max_step=config.max_step,
        step_cap=_winding_cap(poles),
    )

    times = [0.0]
    states = [solver.y.copy()]
    crossings: list[CrossingEvent] = []
    turns = np.zeros(len(poles))
    section_dir = direction * v0 / abs(v0)
    max_dist = 0.0
    closed = False
    period = None
    reason = "budget"

    def sigma(X):
        return ((X - start) * section_dir.conjugate()).real

    def make_traj(reason_):
        states_arr = np.array(states)
        winding_turns = {float(p): float(w) for p, w in zip(poles, turns)}
        windings = {p: int(round(w)) for p, w in winding_turns.items()} if closed else {}
        return Trajectory(
            model=model,
            times=np.array(times),
            points=states_arr[:, 0],
            kinetic=states_arr[:, 1].real,
            potential=states_arr[:, 1].imag,
            crossings=crossings,
            closed=closed,
            period=period,
            winding_turns=winding_turns,
            winding_numbers=windings,
            direction=direction,
            stop_reason=reason_,
            mass=states_arr[:, 2] if mass_anchor is not None else None,
        )

    def add_turns(X_old, X_new):
        if len(poles):
            turns[:] += np.angle((X_new - poles) / (X_old - poles)) / (2 * math.pi)

    while solver.t < config.max_time:
        t_old, X_old = solver.t, complex(solver.y[0])
        try:
            t_new, y_new = solver.step()
        except PoleProximity as exc:
            exc.partial = make_traj("pole")
            raise
        X_new = complex(y_new[0])

        # events inside this step, earliest first
        t_stop = None
        stop_kind = None

        xi_old, xi_new = X_old.imag, X_new.imag
        crossing_here = None
        if xi_old * xi_new < 0 or (xi_new == 0.0 and xi_old != 0.0):
            tc = t_new if xi_new == 0.0 else brentq(
                lambda t: solver.dense(t)[0].imag, t_old, t_new, xtol=1e-15, rtol=4 * np.finfo(float).eps
            )
            crossing_here = tc

        dist_new = abs(X_new - start)
        closure_here = None
        if max_dist > 10 * config.closure_tol and until == "closure":
            s_old, s_new = sigma(X_old), sigma(X_new)
            if s_old < 0 <= s_new:
                tc = t_new if s_new == 0 else brentq(
                    lambda t: sigma(complex(solver.dense(t)[0])), t_old, t_new, xtol=1e-15, rtol=4 * np.finfo(float).eps
                )
                Xc = complex(solver.dense(tc)[0])
                if abs(Xc - start) < 0.05 * max_dist:
                    closure_here = tc

        pole_here = None
        if stop_radius is not None and len(poles):
            d_new = float(np.min(np.abs(X_new - poles)))
            if d_new < stop_radius:
                j = int(np.argmin(np.abs(X_new - poles)))
                f = lambda t: abs(complex(solver.dense(t)[0]) - poles[j]) - stop_radius
                pole_here = brentq(f, t_old, t_new) if f(t_old) > 0 else t_new

        candidates = [(tc, k) for tc, k in ((crossing_here, "crossing"), (closure_here, "closure"), (pole_here, "pole_radius")) if tc is not None]
        candidates.sort()
        for tc, kind in candidates:
            if kind == "crossing":
                yc = solver.dense(tc)
                Xc = complex(yc[0])
                vc = velocity(model, complex(Xc.real, 0.0))
                sign = 1 if direction * vc.imag > 0 else -1
                crossings.append(CrossingEvent(t=direction * tc, x_r=Xc.real, direction=sign))
                if until == "crossing":
                    t_stop, stop_kind = tc, "crossing"
                    break
            else:
                t_stop, stop_kind = tc, kind
                break

        if t_stop is not None:
            yc = solver.dense(t_stop)
            if stop_kind == "crossing":
                yc[0] = complex(yc[0].real, 0.0)
            X_end = complex(yc[0])
            add_turns(X_old, X_end)
            times.append(t_stop)
            states.append(yc)
            if stop_kind == "closure":
                gap = abs(X_end - start)
                if gap <= config.closure_tol:
                    closed = True
                    period = t_stop
                    reason = "closure"
                else:
                    reason = "closure_miss"
                    log.warning("orbit from %r misses closure by %.3g", start, gap)
            else:
                reason = stop_kind
            break

        add_turns(X_old, X_new)
        times.append(t_new)
        states.append(y_new.copy())
        max_dist = max(max_dist, dist_new)
    else:
        reason = "budget"

    traj = make_traj(reason)
    if reason == "budget" and strict:
        raise BudgetExceeded(f"no {until} within max_time={config.max_time}", partial=traj)
    return traj


def _level_classify(model: OscillatorModel, x_r: float) -> OrbitKind:
    """Level test from a real-axis point of the orbit.

    The orbit through ``x_r`` circulates around the stagnation point s_j of
    the pole interval containing ``x_r``; it is a subnest while its level is
    below both neighbouring pole levels (for n <= 2 this is just
    ``level < separatrix``).
    """
    fs = field_structure(model)
    if len(fs.poles) == 0:
        return OrbitKind.SUBNEST
    u = log_level(model, x_r)
    j = int(np.searchsorted(fs.poles, x_r))
    bounds = []
    if j > 0:
        bounds.append(fs.pole_log_levels[j - 1])
    if j < len(fs.poles):
        bounds.append(fs.pole_log_levels[j])
    return OrbitKind.SUBNEST if u <= min(bounds) else OrbitKind.NEST


def classify_by_level(model: OscillatorModel, point: complex, config: IntegratorConfig | None = None) -> OrbitKind:
    """Subnest/nest decision from the stream invariant alone.

    For n <= 2 this is a pure predicate (boundary assigned to the subnest).
    For n >= 3 the pole levels differ and the lobe containing ``point`` is
    found from its anchor crossing.
    """
    fs = field_structure(model)
    if len(fs.poles) == 0:
        return OrbitKind.SUBNEST
    if fs.levels_coincide:
        return OrbitKind.SUBNEST if log_level(model, point) <= fs.separatrix_log_level else OrbitKind.NEST
    return _level_classify(model, anchor_crossing(model, point, config).x_r)


def classify(model: OscillatorModel, traj: Trajectory) -> OrbitKind:
    """Classify a trajectory by its winding numbers around the poles."""
    if not traj.closed:
        return OrbitKind.OPEN
    if any(w != 0 for w in traj.winding_numbers.values()):
        kind = OrbitKind.NEST
    else:
        kind = OrbitKind.SUBNEST
    crossing = traj.crossings[0].x_r if traj.crossings else (traj.start.real if traj.start.imag == 0 else None)
    if crossing is not None:
        by_level = _level_classify(model, crossing)
        if by_level is not kind:
            log.warning("winding (%s) and level (%s) classifiers disagree for start %r", kind, by_level, traj.start)
    return kind


@dataclass(frozen=True)
class _Anchor:
    event: CrossingEvent
    kinetic: float
    potential: float


def _find_anchor(model: OscillatorModel, point: complex, config: IntegratorConfig | None) -> _Anchor:
    """Nearest-in-time real-axis crossing, with the path integrals to reach it.

    The integrals are physical-time integrals from ``point`` to the crossing
    (negative time for a backward anchor).
    """
    config = config or IntegratorConfig()
    point = complex(point)
    if point.imag == 0.0:
        v = velocity(model, point)
        return _Anchor(CrossingEvent(0.0, point.real, 1 if v.imag > 0 else -1), 0.0, 0.0)

    best = None
    budget = config.max_time
    for direction in (1, -1):
        cfg = config if budget == config.max_time else IntegratorConfig(
            config.rel_tol, config.abs_tol, config.max_step, budget, config.closure_tol
        )
        traj = integrate(model, point, cfg, direction=direction, until="crossing")
        if traj.stop_reason != "crossing":
            continue
        ev = traj.crossings[-1]
        anchor = _Anchor(ev, direction * float(traj.kinetic[-1]), direction * float(traj.potential[-1]))
        if best is None or abs(ev.t) < abs(best.event.t):
            best = anchor
            budget = abs(ev.t)
    if best is None:
        raise BudgetExceeded(f"no real-axis crossing from {point!r} within max_time={config.max_time}")
    return best


def anchor_crossing(model: OscillatorModel, point: complex, config: IntegratorConfig | None = None) -> CrossingEvent:
    """First real-axis crossing of the orbit through ``point``.

    Both time directions are searched and the temporally nearer crossing is
    returned; a point already on the axis is its own anchor at ``t = 0``.
    """
    return _find_anchor(model, point, config).event


def winding_number(points: np.ndarray, center: complex) -> float:
    """Total argument change of ``points - center`` over 2 pi (unrounded)."""
    z = np.asarray(points) - center
    return float(np.sum(np.angle(z[1:] / z[:-1])) / (2 * math.pi))


def start_on_level(model: OscillatorModel, value: float, *, side: str = "right") -> float:
    """Real-axis point on the given stream-invariant level.

    Returns the outermost solution to the right (``side="right"``) of the
    largest stagnation point, i.e. the right lobe below the separatrix and
    the enclosing nest above it.
    """
    fs = field_structure(model)
    s_max = fs.stagnation_points[-1]
    target = math.log(value) / fs.level_exponent if value > 0 else -math.inf
    if not math.isfinite(target):
        return float(s_max)
    f = lambda x: log_level(model, x) - target
    hi = s_max + 1.0
    while f(hi) < 0:
        hi = s_max + 2 * (hi - s_max)
    lo = s_max + 1e-12 * max(1.0, abs(s_max))
    if f(lo) > 0:
        return float(lo) if side == "right" else float(-lo)
    x = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return float(x) if side == "right" else float(-x)


__all__ = [
    "CrossingEvent",
    "IntegratorConfig",
    "OrbitKind",
    "Trajectory",
    "anchor_crossing",
    "classify",
    "classify_by_level",
    "integrate",
    "start_on_level",
    "winding_number",
]
