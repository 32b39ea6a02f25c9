import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import hermite as npherm
from scipy.integrate import quad

from cqtraj.eigenstate import (
    OscillatorModel,
    field_structure,
    hermite,
    hermite_derivative,
    log_level,
    log_level_gradient,
    potential,
    psi,
    psi_abs2,
    stream_invariant,
    velocity,
    velocity_array,
)
from cqtraj.errors import PoleProximity

coords = st.floats(-3, 3, allow_nan=False)


def _sympy_psi(n):
    X = sp.symbols("X")
    expr = sp.hermite(n, X) * sp.exp(-X**2 / 2) / sp.sqrt(2**n * sp.factorial(n) * sp.sqrt(sp.pi))
    return X, expr


@pytest.mark.parametrize("n", range(0, 11))
def test_hermite_matches_numpy_series(n):
    z = np.array([0.3 - 0.7j, 1.9 + 0.2j, -2.5 + 1.1j])
    coef = [0] * n + [1]
    assert np.allclose(hermite(n, z), npherm.hermval(z, coef), rtol=1e-12)
    assert np.allclose(hermite_derivative(n, z), npherm.hermval(z, npherm.hermder(coef)), rtol=1e-12)


@pytest.mark.parametrize("n", [0, 1, 2, 5])
def test_psi_matches_symbolic_eigenfunction(n):
    X, expr = _sympy_psi(n)
    f = sp.lambdify(X, expr, "numpy")
    z = 0.4 + 0.9j
    assert psi(OscillatorModel(n=n), z) == pytest.approx(complex(f(z)), rel=1e-12)


@pytest.mark.parametrize("n", [0, 1, 3])
def test_psi_solves_schrodinger_equation(n):
    X, expr = _sympy_psi(n)
    residual = sp.simplify(-sp.diff(expr, X, 2) / 2 + X**2 * expr / 2 - (n + sp.Rational(1, 2)) * expr)
    assert residual == 0


@pytest.mark.parametrize("n", [0, 1, 4])
def test_psi_normalised_on_real_line(n):
    m = OscillatorModel(n=n)
    total, _ = quad(lambda x: psi_abs2(m, x), -np.inf, np.inf)
    assert total == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("n", [1, 2, 4])
def test_velocity_is_minus_i_log_derivative(n):
    X, expr = _sympy_psi(n)
    f = sp.lambdify(X, -sp.I * sp.diff(expr, X) / expr, "numpy")
    z = 0.7 + 0.35j
    assert velocity(OscillatorModel(n=n), z) == pytest.approx(complex(f(z)), rel=1e-12)


def test_velocity_n0_is_rotation():
    assert velocity(OscillatorModel(n=0), 0.3 + 0.2j) == pytest.approx(1j * (0.3 + 0.2j))


def test_velocity_raises_at_pole(m1):
    with pytest.raises(PoleProximity):
        velocity(m1, 0j)
    assert np.isnan(velocity_array(m1, np.array([0j]))[0])


def test_potential_imaginary_part():
    assert potential(OscillatorModel(), 1.5 + 0.4j).imag == pytest.approx(1.5 * 0.4)


@pytest.mark.parametrize("n", range(1, 11))
def test_field_structure(n):
    fs = field_structure(OscillatorModel(n=n))
    assert np.allclose(np.sort(fs.poles), npherm.hermroots([0] * n + [1]), atol=1e-12)
    assert len(fs.stagnation_points) == n + 1
    # stagnation points and poles interlace on the real axis
    merged = np.empty(2 * n + 1)
    merged[0::2], merged[1::2] = fs.stagnation_points, fs.poles
    assert np.all(np.diff(merged) > 0)
    for s in fs.stagnation_points:
        assert abs(velocity(OscillatorModel(n=n), complex(s))) < 1e-10
    assert np.all(fs.weights < 0)
    assert fs.weights.sum() == pytest.approx(-1.0, abs=1e-12)


def test_pole_levels_coincide_only_up_to_two():
    assert field_structure(OscillatorModel(n=1)).levels_coincide
    assert field_structure(OscillatorModel(n=2)).levels_coincide
    fs3 = field_structure(OscillatorModel(n=3))
    assert not fs3.levels_coincide
    assert fs3.separatrix_log_level == pytest.approx(max(fs3.pole_log_levels))


def test_separatrix_levels_low_n():
    # n=1: |X^2 - 1| = 1 at the pole; n=2: |X|^2 |X^2 - 5/2|^4 at +-1/sqrt(2) is 8
    assert field_structure(OscillatorModel(n=1)).separatrix_level == pytest.approx(1.0)
    assert field_structure(OscillatorModel(n=2)).separatrix_level == pytest.approx(8.0)


@given(coords, coords)
def test_n1_invariant_is_cassinian(xr, xi):
    z = complex(xr, xi)
    assert stream_invariant(OscillatorModel(n=1), z) == pytest.approx(abs(z * z - 1), rel=1e-12, abs=1e-14)


@given(coords, coords)
def test_n2_invariant_matches_product_form(xr, xi):
    z = complex(xr, xi)
    expected = abs(z) ** 2 * abs(z * z - 2.5) ** 4
    assert stream_invariant(OscillatorModel(n=2), z) == pytest.approx(expected, rel=1e-10, abs=1e-12)


@settings(max_examples=60)
@given(st.integers(1, 6), coords, st.floats(0.05, 2.0))
def test_flow_is_tangent_to_levels(n, xr, xi):
    m = OscillatorModel(n=n)
    z = complex(xr, xi)
    g = log_level_gradient(m, z)
    v = velocity(m, z)
    assert abs((g.conjugate() * v).real) <= 1e-9 * abs(g) * abs(v)


@settings(max_examples=30)
@given(st.integers(1, 5), coords, st.floats(0.05, 2.0))
def test_level_gradient_matches_finite_difference(n, xr, xi):
    m = OscillatorModel(n=n)
    z = complex(xr, xi)
    h = 1e-6
    du_r = (log_level(m, z + h) - log_level(m, z - h)) / (2 * h)
    du_i = (log_level(m, z + 1j * h) - log_level(m, z - 1j * h)) / (2 * h)
    g = log_level_gradient(m, z)
    assert g.real == pytest.approx(du_r, rel=1e-5, abs=1e-6)
    assert g.imag == pytest.approx(du_i, rel=1e-5, abs=1e-6)


@given(coords, st.floats(-2, 2))
def test_psi_abs2_log_space_matches_direct(xr, xi):
    m = OscillatorModel(n=3)
    z = complex(xr, xi)
    assert psi_abs2(m, z) == pytest.approx(abs(psi(m, z)) ** 2, rel=1e-10, abs=1e-300)


@pytest.mark.parametrize("bad", [dict(n=-1), dict(n=1.5), dict(mass=0.0), dict(angular_frequency=-1.0), dict(hbar=math.inf)])
def test_model_validation(bad):
    with pytest.raises(ValueError):
        OscillatorModel(**bad)


def test_unit_conversion_round_trip():
    m = OscillatorModel(n=1, mass=4.0, angular_frequency=9.0)
    assert m.alpha == pytest.approx(6.0)
    assert m.to_physical(m.to_dimensionless(0.25)) == pytest.approx(0.25)
    assert m.energy == pytest.approx(13.5)
