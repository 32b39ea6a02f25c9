"""Harmonic-oscillator eigenstates and the complex velocity field they induce.

Everything here works in oscillator units: ``X = alpha * x``, ``T = omega * t``
and energies in units of ``hbar * omega``.  In these units the equation of
motion is ``dX/dT = -i * (H_n'(X) / H_n(X) - X)`` and the potential is
``X**2 / 2``.  :class:`OscillatorModel` carries the SI parameters so that
callers can convert at the boundary.

Functions accept Python complex scalars or numpy arrays unless noted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import hermite as npherm
from numpy.polynomial import polynomial as nppoly
from scipy.optimize import brentq

from .errors import PoleProximity, RootFindingFailure

#: Relative size of the guard zone around nodes of psi.
POLE_GUARD = 1e-12


@dataclass(frozen=True)
class OscillatorModel:
    """Physical parameters of a 1-D oscillator eigenstate.

    Defaults give oscillator units (``m = omega = hbar = 1``), in which case
    ``alpha == 1`` and dimensionless and physical positions coincide.
    """

    n: int = 1
    mass: float = 1.0
    angular_frequency: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"level n must be a non-negative integer, got {self.n!r}")
        for name in ("mass", "angular_frequency", "hbar"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")

    @property
    def alpha(self) -> float:
        """Inverse length scale sqrt(m * omega / hbar), in 1/m for SI inputs."""
        return math.sqrt(self.mass * self.angular_frequency / self.hbar)

    @property
    def energy(self) -> float:
        return self.hbar * self.angular_frequency * (self.n + 0.5)

    @property
    def dimensionless_energy(self) -> float:
        return self.n + 0.5

    def to_dimensionless(self, x):
        return self.alpha * x

    def to_physical(self, X):
        return X / self.alpha


def hermite_pair(n: int, z):
    """Return ``(H_{n-1}(z), H_n(z))`` from the three-term recurrence.

    ``H_{-1}`` is taken as zero.
    """
    h_prev = z * 0
    h = z * 0 + 1
    for k in range(n):
        h_prev, h = h, 2 * z * h - 2 * k * h_prev
    return h_prev, h


def hermite(n: int, z):
    """Physicists' Hermite polynomial H_n(z)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return hermite_pair(n, z)[1]


def hermite_derivative(n: int, z):
    if n == 0:
        return z * 0
    return 2 * n * hermite_pair(n, z)[0]


def norm_constant(n: int) -> float:
    """C_n such that C_n H_n(X) exp(-X^2/2) has unit L2 norm on the real line."""
    return 1.0 / math.sqrt(2.0**n * math.factorial(n) * math.sqrt(math.pi))


def psi(model: OscillatorModel, X):
    """Analytically continued eigenfunction at dimensionless position ``X``."""
    return norm_constant(model.n) * hermite(model.n, X) * np.exp(-X * X / 2)


def log_psi(model: OscillatorModel, X):
    """Principal-branch ln psi(X).

    The complex action in units of hbar is ``-1j * log_psi``.
    """
    return math.log(norm_constant(model.n)) + np.log(hermite(model.n, X) + 0j) - X * X / 2


def psi_abs2(model: OscillatorModel, X):
    """|psi(X)|^2 evaluated in log space.

    Off the real axis psi grows like exp(+X_i^2 / 2); the log form keeps the
    intermediate values finite.
    """
    X = np.asarray(X, dtype=complex)
    h = np.abs(hermite(model.n, X))
    with np.errstate(divide="ignore"):
        logval = 2 * math.log(norm_constant(model.n)) + 2 * np.log(h) - (X * X).real
    out = np.exp(logval)
    return out if out.ndim else float(out)


def in_pole_guard(n: int, X) -> bool:
    h = hermite(n, X)
    return abs(h) < POLE_GUARD * max(1.0, abs(X) ** n)


def log_derivative(model: OscillatorModel, X):
    """d(ln psi)/dX = H_n'/H_n - X, without forming psi itself."""
    n = model.n
    if n == 0:
        return -X
    h_prev, h = hermite_pair(n, X)
    return 2 * n * h_prev / h - X


def velocity(model: OscillatorModel, X: complex) -> complex:
    """Complex velocity dX/dT at a scalar point.

    Raises
    ------
    PoleProximity
        If ``X`` lies in the guard zone of a node of psi.
    """
    n = model.n
    if n == 0:
        return 1j * X
    h_prev, h = hermite_pair(n, X)
    if abs(h) < POLE_GUARD * max(1.0, abs(X) ** n):
        raise PoleProximity(f"velocity undefined at pole X={X!r}", point=X)
    return -1j * (2 * n * h_prev / h - X)


def velocity_array(model: OscillatorModel, X):
    """Vectorised velocity; guard-zone points come back as NaN."""
    X = np.asarray(X, dtype=complex)
    n = model.n
    if n == 0:
        return 1j * X
    h_prev, h = hermite_pair(n, X)
    guard = np.abs(h) < POLE_GUARD * np.maximum(1.0, np.abs(X) ** n)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = -1j * (2 * n * h_prev / h - X)
    return np.where(guard, np.nan + 0j, v)


def velocity_physical(model: OscillatorModel, x: complex) -> complex:
    """dx/dt in SI units for a physical complex position ``x``."""
    return velocity(model, model.alpha * x) * model.angular_frequency / model.alpha


def potential(model: OscillatorModel, X):
    """V(X) / (hbar omega) = X^2 / 2.  Its imaginary part is X_r * X_i."""
    return X * X / 2


def potential_physical(model: OscillatorModel, x):
    return 0.5 * model.mass * model.angular_frequency**2 * x * x


# ---------------------------------------------------------------------------
# poles, stagnation points and the stream invariant


@dataclass(frozen=True)
class FieldStructure:
    """Singular points of the velocity field for level ``n``.

    ``weights`` are the partial-fraction coefficients c_j of H_n / P at the
    stagnation points s_j, where P = H_n' - X H_n.  Along any trajectory
    ``dT = i * sum_j c_j dX / (X - s_j)``, so ``-sum_j c_j ln|X - s_j|`` is
    conserved; see :func:`log_level`.

    ``pole_levels`` holds the stream invariant at each pole.  These coincide
    for n <= 2; for n >= 3 inner poles sit on lower levels than the outer
    ones and ``separatrix_level`` is the outermost (largest) of them.
    """

    n: int
    poles: np.ndarray
    stagnation_points: np.ndarray
    weights: np.ndarray
    pole_levels: np.ndarray
    pole_log_levels: np.ndarray
    separatrix_level: float | None
    separatrix_log_level: float | None
    level_exponent: float = field(repr=False, default=1.0)

    @property
    def levels_coincide(self) -> bool:
        if len(self.pole_log_levels) < 2:
            return True
        spread = np.ptp(self.pole_log_levels)
        return bool(spread <= 1e-9 * max(1.0, np.max(np.abs(self.pole_log_levels))))


def _hermite_roots(n: int) -> np.ndarray:
    if n == 0:
        return np.empty(0)
    bound = math.sqrt(2 * n + 2)
    grid = np.linspace(-bound, bound, 64 * n + 1)
    values = hermite(n, grid)
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(brentq(lambda z: hermite(n, z), a, b, xtol=1e-15, rtol=1e-15))
    if values[-1] == 0.0:
        roots.append(grid[-1])
    roots = np.array(roots)
    # Newton polish; H_n' = 2n H_{n-1}
    for _ in range(3):
        h_prev, h = hermite_pair(n, roots)
        roots = roots - h / (2 * n * h_prev)
    if len(roots) != n:
        raise RootFindingFailure(f"found {len(roots)} Hermite roots for n={n}")
    roots = np.sort(roots)
    roots = 0.5 * (roots - roots[::-1])
    roots[np.abs(roots) < 1e-14] = 0.0
    scale = np.maximum(1.0, np.abs(roots) ** n)
    if np.any(np.abs(hermite(n, roots)) > 1e-9 * scale):
        raise RootFindingFailure(f"Hermite root polishing failed for n={n}")
    return roots


def _stagnation_polynomial(n: int, X):
    """P(X) = H_n'(X) - X H_n(X) and its derivative X H_n' - (2n+1) H_n."""
    h_prev, h = hermite_pair(n, X)
    dh = 2 * n * h_prev
    return dh - X * h, X * dh - (2 * n + 1) * h


def _stagnation_points(n: int) -> np.ndarray:
    h_coef = npherm.herm2poly([0] * n + [1])
    p_coef = nppoly.polysub(nppoly.polyder(h_coef), nppoly.polymulx(h_coef))
    roots = nppoly.polyroots(p_coef)
    if np.any(np.abs(roots.imag) > 1e-6 * np.maximum(1.0, np.abs(roots))):
        raise RootFindingFailure(f"non-real stagnation points for n={n}: {roots}")
    roots = np.sort(roots.real)
    for _ in range(4):
        p, dp = _stagnation_polynomial(n, roots)
        roots = roots - p / dp
    p, dp = _stagnation_polynomial(n, roots)
    if np.any(np.abs(p) > 1e-9 * np.maximum(1.0, np.abs(dp))):
        raise RootFindingFailure(f"stagnation point polishing failed for n={n}")
    roots = 0.5 * (roots - roots[::-1])
    roots[np.abs(roots) < 1e-14] = 0.0
    return roots


def level_exponent(n: int, weights: np.ndarray) -> float:
    """Power mapping exp(log_level) onto the conventional invariant.

    Chosen so n=1 gives the Cassinian constant |X^2 - 1| and n=2 gives
    |X|^2 |X^2 - 5/2|^4.  Other levels use 1 / min|c_j|.
    """
    if n == 1:
        return 2.0
    if n == 2:
        return 10.0
    return float(1.0 / np.min(np.abs(weights)))


@lru_cache(maxsize=None)
def _structure(n: int) -> FieldStructure:
    poles = _hermite_roots(n)
    stag = _stagnation_points(n)
    h = hermite(n, stag)
    _, dp = _stagnation_polynomial(n, stag)
    weights = h / dp
    lam = level_exponent(n, weights)
    if len(poles):
        logs = np.array([_log_level(stag, weights, p) for p in poles])
        if n <= 2:
            levels = np.asarray(stream_invariant(OscillatorModel(n=n), poles + 0j))
        else:
            levels = np.exp(lam * logs)
        sep_log = float(np.max(logs))
        sep = float(np.max(levels))
    else:
        logs = levels = np.empty(0)
        sep_log = sep = None
    for arr in (poles, stag, weights, logs, levels):
        arr.setflags(write=False)
    return FieldStructure(
        n=n,
        poles=poles,
        stagnation_points=stag,
        weights=weights,
        pole_levels=levels,
        pole_log_levels=logs,
        separatrix_level=sep,
        separatrix_log_level=sep_log,
        level_exponent=lam,
    )


def field_structure(model: OscillatorModel) -> FieldStructure:
    """Poles, stagnation points and separatrix level (dimensionless X)."""
    return _structure(model.n)


def _log_level(stag, weights, X):
    X = np.asarray(X, dtype=complex)
    with np.errstate(divide="ignore"):
        out = -sum(c * np.log(np.abs(X - s)) for c, s in zip(weights, stag))
    return out if np.ndim(out) else float(out)


def log_level(model: OscillatorModel, X):
    """Harmonic stream function u(X) = -sum_j c_j ln|X - s_j|.

    Constant along trajectories, -inf at stagnation points, finite (a saddle)
    at poles.  Monotone transforms of it give :func:`stream_invariant`.
    """
    fs = field_structure(model)
    return _log_level(fs.stagnation_points, fs.weights, X)


def log_level_gradient(model: OscillatorModel, X):
    """Complex gradient du/dX_r + i du/dX_i = conj(H_n / P)."""
    fs = field_structure(model)
    X = np.asarray(X, dtype=complex)
    g = -sum(c / (X - s) for c, s in zip(fs.weights, fs.stagnation_points))
    g = np.conj(g)
    return g if np.ndim(g) else complex(g)


def stream_invariant(model: OscillatorModel, X):
    """Level value conserved along trajectories.

    n=1 returns the Cassinian constant A with
    A^2 = (X_r^2 - X_i^2 - 1)^2 + 4 X_r^2 X_i^2, n=2 returns
    [(X_r^2+X_i^2)^2 - 5(X_r^2-X_i^2) + 25/4]^2 (X_r^2+X_i^2), and any other
    level the partial-fraction product prod_j |X - s_j|^(-lambda c_j).
    """
    n = model.n
    X = np.asarray(X, dtype=complex)
    xr, xi = X.real, X.imag
    if n == 1:
        out = np.sqrt((xr**2 - xi**2 - 1) ** 2 + 4 * xr**2 * xi**2)
    elif n == 2:
        r2 = xr**2 + xi**2
        out = (r2**2 - 5 * (xr**2 - xi**2) + 6.25) ** 2 * r2
    else:
        fs = field_structure(model)
        out = np.exp(fs.level_exponent * log_level(model, X))
    return out if np.ndim(out) else float(out)


def level_from_invariant(model: OscillatorModel, value: float) -> float:
    """Inverse of ``stream_invariant`` in terms of :func:`log_level`."""
    if value <= 0:
        return -math.inf
    return math.log(value) / field_structure(model).level_exponent


def invariant_from_level(model: OscillatorModel, u: float) -> float:
    return math.exp(field_structure(model).level_exponent * u)
