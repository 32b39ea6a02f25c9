"""Probability densities on the real line and in the complex position plane.

Four constructions are provided:

* ``born``: |psi|^2 on the real axis, also rebuilt as the exponential of a
  line integral of the imaginary velocity (:func:`born_density_by_integral`).
* ``conserved``: propagated along trajectories from a Born-valued anchor on
  the real axis with exponent -4 int Im(v^2/2 + V) dT.  Satisfies the
  stationary continuity equation.
* ``wyatt``: psi*(X) psi(X), equivalently the same propagation without the
  potential term.  Its flux has a source 4 psi*psi Im V.
* ``combined``: ``wyatt`` inside subnests, ``conserved`` elsewhere.

All values are in oscillator units (densities per unit X).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .eigenstate import (
    OscillatorModel,
    field_structure,
    in_pole_guard,
    psi_abs2,
    velocity,
    velocity_array,
)
from .errors import NodeSingularity, StencilCrossesBoundary
from .trajectory import (
    CrossingEvent,
    IntegratorConfig,
    OrbitKind,
    _Anchor,
    _find_anchor,
    classify_by_level,
    integrate,
)

METHODS = ("born", "conserved", "wyatt", "combined")


@dataclass(frozen=True)
class DensitySample:
    point: complex
    value: float
    method: str
    anchor: CrossingEvent | None = None
    path_integral_value: float | None = None
    branch: str | None = None


@dataclass(frozen=True)
class NormalizationContext:
    """Normalisation of a density over a finite domain.

    ``norm_constant`` multiplies raw density values so that the domain
    carries unit mass.
    """

    norm_constant: float
    domain: dict
    total_mass: float


# ---------------------------------------------------------------------------
# Born density


def born_density(model: OscillatorModel, x_r):
    """|psi(x_r)|^2 on the real axis (closed form, log-space evaluation)."""
    return psi_abs2(model, np.asarray(x_r, dtype=float) + 0j)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(40)


def _born_exponent(model: OscillatorModel, x: float) -> float:
    """-2 int_0^x Im(v) dx' with the node poles integrated in log form.

    Im(v) = -sum_k 1/(x - x_k) + r(x) on the real axis; the pole part gives
    2 sum_k ln|x - x_k| exactly and the smooth remainder r is integrated by
    Gauss-Legendre quadrature.
    """
    poles = field_structure(model).poles
    log_part = 2.0 * float(np.sum(np.log(np.abs(x - poles)))) if len(poles) else 0.0
    if x == 0.0:
        return log_part
    s = 0.5 * x * (_GL_X + 1.0)
    vi = velocity_array(model, s + 0j).imag
    if len(poles):
        vi = vi + np.sum(1.0 / (s[:, None] - poles[None, :]), axis=1)
    regular = 0.5 * x * float(_GL_W @ vi)
    return log_part - 2.0 * regular


@lru_cache(maxsize=None)
def _born_integral_norm(n: int) -> float:
    model = OscillatorModel(n=n)
    poles = list(field_structure(model).poles)
    limit = math.sqrt(2 * n + 1) + 9.0
    edges = [-limit] + poles + [limit]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = quad(lambda x: math.exp(_born_exponent(model, x)), a, b, epsabs=0, epsrel=1e-13, limit=200)
        total += val
    return total


def born_density_by_integral(model: OscillatorModel, x_r: float) -> float:
    """Born density from the exponential of the velocity line integral.

    The normalisation is fixed numerically so that the result integrates to
    one over the real line.

    Raises
    ------
    NodeSingularity
        At a node of psi, where the line integrand has a pole.
    """
    x_r = float(x_r)
    if model.n > 0 and in_pole_guard(model.n, complex(x_r)):
        raise NodeSingularity(f"x_r={x_r} is a node of psi_{model.n}")
    return math.exp(_born_exponent(model, x_r)) / _born_integral_norm(model.n)


# ---------------------------------------------------------------------------
# trajectory-integral densities


def _anchored(model, point, config, anchor):
    config = config or IntegratorConfig()
    if anchor == "nearest":
        return _find_anchor(model, point, config)
    direction = {"forward": 1, "backward": -1}[anchor]
    point = complex(point)
    if point.imag == 0.0:
        return _find_anchor(model, point, config)
    traj = integrate(model, point, config, direction=direction, until="crossing", strict=True)
    return _Anchor(traj.crossings[-1], direction * float(traj.kinetic[-1]), direction * float(traj.potential[-1]))


def conserved_density(
    model: OscillatorModel,
    point: complex,
    config: IntegratorConfig | None = None,
    *,
    anchor: str = "nearest",
) -> DensitySample:
    """Trajectory-integral density anchored to the Born value on the real axis.

    rho(p) = P(x_r0) exp[-4 int_{t0}^{t} Im(v^2/2 + V) dt'] with the integral
    along the orbit from its real-axis crossing x_r0 to ``point``.  By
    default the temporally nearest crossing is used; ``anchor="forward"`` or
    ``"backward"`` forces a direction.
    """
    a = _anchored(model, point, config, anchor)
    rho0 = float(born_density(model, a.event.x_r))
    exponent = 4.0 * (a.kinetic + a.potential)
    return DensitySample(
        point=complex(point),
        value=rho0 * math.exp(exponent),
        method="conserved",
        anchor=a.event,
        path_integral_value=exponent,
    )


def wyatt_density(model: OscillatorModel, point):
    """psi*(X) psi(X) at complex ``point`` (vectorised)."""
    return psi_abs2(model, point)


def wyatt_density_by_path(
    model: OscillatorModel,
    point: complex,
    config: IntegratorConfig | None = None,
    *,
    anchor: str = "nearest",
) -> DensitySample:
    """psi*psi rebuilt from the trajectory integral of Im(v^2/2) alone.

    The proportionality constant is fixed by the Born value at the anchor.
    """
    a = _anchored(model, point, config, anchor)
    rho0 = float(born_density(model, a.event.x_r))
    exponent = 4.0 * a.kinetic
    return DensitySample(
        point=complex(point),
        value=rho0 * math.exp(exponent),
        method="wyatt",
        anchor=a.event,
        path_integral_value=exponent,
    )


def in_subnest(model: OscillatorModel, point: complex, config: IntegratorConfig | None = None) -> bool:
    """True when the orbit through ``point`` encloses no pole.

    The separatrix itself counts as subnest.
    """
    return classify_by_level(model, point, config) is OrbitKind.SUBNEST


def combined_density(model: OscillatorModel, point: complex, config: IntegratorConfig | None = None) -> DensitySample:
    """psi*psi inside subnests, the conserved density elsewhere.

    Not defined for n = 0, where every orbit is a subnest and psi*psi is not
    normalisable; ask for ``wyatt`` or ``conserved`` explicitly there.
    """
    if model.n == 0:
        raise ValueError("combined density is undefined for n=0; choose 'wyatt' or 'conserved'")
    point = complex(point)
    if in_subnest(model, point, config):
        return DensitySample(point, float(wyatt_density(model, point)), "combined", branch="wyatt")
    s = conserved_density(model, point, config)
    return DensitySample(point, s.value, "combined", s.anchor, s.path_integral_value, branch="conserved")


def source_density(model: OscillatorModel, point):
    """Probability source 4 psi*psi Im V for the psi*psi density (vectorised)."""
    point = np.asarray(point, dtype=complex)
    out = 4.0 * psi_abs2(model, point) * point.real * point.imag
    return out if np.ndim(out) else float(out)


def crossing_mismatch(model: OscillatorModel, x_r: float, config: IntegratorConfig | None = None) -> dict:
    """Propagate the conserved density from real point ``x_r`` to the next crossing.

    Returns the propagated value, the Born value there and their ratio.  The
    ratio is one for nests and generally not for subnests.
    """
    config = config or IntegratorConfig()
    traj = integrate(model, complex(x_r, 0.0), config, until="crossing", strict=True)
    x_next = traj.crossings[-1].x_r
    exponent = -4.0 * (float(traj.kinetic[-1]) + float(traj.potential[-1]))
    propagated = float(born_density(model, x_r)) * math.exp(exponent)
    born = float(born_density(model, x_next))
    return {
        "x_start": float(x_r),
        "x_next": x_next,
        "propagated": propagated,
        "born": born,
        "ratio": propagated / born,
    }


# ---------------------------------------------------------------------------
# continuity equation checks


def flux_derivatives(model: OscillatorModel, point: complex, density_fn, h: float = 1e-3, *, richardson=True, branch_fn=None):
    """Central-difference d(rho v_r)/dX_r and d(rho v_i)/dX_i at ``point``.

    ``density_fn`` maps a complex point to a density value.  With
    ``richardson`` the h and h/2 differences are combined once.  If
    ``branch_fn`` is given, every stencil point must fall in the same branch
    as ``point``.
    """
    point = complex(point)
    branch = branch_fn(point) if branch_fn is not None else None

    def flux(q):
        if branch_fn is not None and branch_fn(q) != branch:
            raise StencilCrossesBoundary(f"stencil point {q!r} leaves branch {branch!r}")
        return density_fn(q) * velocity(model, q)

    def diffs(step):
        fr = (flux(point + step) - flux(point - step)) / (2 * step)
        fi = (flux(point + 1j * step) - flux(point - 1j * step)) / (2 * step)
        return fr.real, fi.imag

    dr, di = diffs(h)
    if richardson:
        dr2, di2 = diffs(h / 2)
        dr, di = (4 * dr2 - dr) / 3, (4 * di2 - di) / 3
    return dr, di


def continuity_residual(model: OscillatorModel, point: complex, density_fn, h: float = 1e-3, *, richardson=True, branch_fn=None) -> float:
    """Stationary flux divergence d(rho v_r)/dX_r + d(rho v_i)/dX_i.

    Zero for the conserved density; equal to :func:`source_density` for
    psi*psi.
    """
    dr, di = flux_derivatives(model, point, density_fn, h, richardson=richardson, branch_fn=branch_fn)
    return dr + di


def density_function(model: OscillatorModel, method: str, config: IntegratorConfig | None = None):
    """Scalar ``point -> value`` callable for a method name."""
    if method == "wyatt":
        return lambda p: float(wyatt_density(model, p))
    if method == "conserved":
        return lambda p: conserved_density(model, p, config).value
    if method == "combined":
        return lambda p: combined_density(model, p, config).value
    if method == "born":
        return lambda p: float(born_density(model, complex(p).real))
    if method == "source":
        return lambda p: source_density(model, p)
    raise ValueError(f"unknown density method {method!r}")
