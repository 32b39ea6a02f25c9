import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cqtraj.eigenstate import OscillatorModel, field_structure, stream_invariant
from cqtraj.errors import BudgetExceeded, DegenerateStart, PoleProximity
from cqtraj.trajectory import (
    IntegratorConfig,
    OrbitKind,
    anchor_crossing,
    classify,
    classify_by_level,
    integrate,
    start_on_level,
    winding_number,
)


@pytest.mark.parametrize("x0", [1.5, 2.0, 3.0])
def test_n1_nest_period_and_winding(m1, x0):
    traj = integrate(m1, complex(x0, 0.0))
    assert traj.closed
    # dT = i sum c_j dX/(X - s_j): a nest enclosing both stagnation points takes 2 pi
    assert traj.period == pytest.approx(2 * math.pi, rel=1e-8)
    assert traj.winding_numbers == {0.0: 1}
    assert classify(m1, traj) is OrbitKind.NEST


@pytest.mark.parametrize("start", [1.2 + 0j, 1.0158 + 0j, 0.3 + 0.2j])
def test_n1_subnest_period(m1, start):
    traj = integrate(m1, start)
    assert traj.closed
    # a lobe around one stagnation point takes 2 pi |c_j| = pi
    assert traj.period == pytest.approx(math.pi, rel=1e-8)
    assert classify(m1, traj) is OrbitKind.SUBNEST


def test_period_of_lobes_follows_weights(m2):
    fs = field_structure(m2)
    for s, c in zip(fs.stagnation_points, fs.weights):
        traj = integrate(m2, complex(s + 0.05, 0.0))
        assert traj.period == pytest.approx(2 * math.pi * abs(c), rel=1e-7)


def test_invariant_conserved_on_n2_orbit(m2):
    traj = integrate(m2, 1.9 + 0.1j)
    vals = stream_invariant(m2, traj.points)
    assert np.ptp(vals) / vals[0] < 1e-8


def test_crossings_alternate_direction(m1):
    traj = integrate(m1, 0.6 + 0.3j)
    assert len(traj.crossings) == 2
    assert {c.direction for c in traj.crossings} == {1, -1}
    for c in traj.crossings:
        assert abs(c.x_r * c.x_r - 1) == pytest.approx(stream_invariant(m1, 0.6 + 0.3j), rel=1e-8)


def test_until_crossing_stops_on_axis(m1):
    traj = integrate(m1, 1.5 + 0.5j, until="crossing")
    assert traj.stop_reason == "crossing"
    assert traj.end.imag == 0.0


def test_backward_direction_reverses_time(m1):
    fwd = integrate(m1, 1.5 + 0.5j, until="crossing")
    bwd = integrate(m1, 1.5 + 0.5j, until="crossing", direction=-1)
    assert fwd.crossings[0].t > 0 > bwd.crossings[0].t
    assert fwd.end.real != pytest.approx(bwd.end.real)


def test_stagnation_start_rejected(m1):
    with pytest.raises(DegenerateStart):
        integrate(m1, 1.0 + 0j)


def test_pole_start_rejected(m1):
    with pytest.raises(PoleProximity):
        integrate(m1, 0j)


def test_budget(m1):
    cfg = IntegratorConfig(max_time=0.5)
    traj = integrate(m1, 2.0 + 0j, cfg)
    assert traj.stop_reason == "budget" and not traj.closed
    with pytest.raises(BudgetExceeded) as info:
        integrate(m1, 2.0 + 0j, cfg, strict=True)
    assert info.value.partial is not None


def test_stop_radius(m1):
    traj = integrate(m1, 1e-3 * np.exp(0.25j * math.pi), stop_radius=5e-4)
    assert traj.stop_reason in ("pole_radius", "crossing", "closure")


def test_anchor_lands_on_level(m1):
    z = 1.5 * np.exp(0.25j * math.pi)
    A = stream_invariant(m1, z)
    ev = anchor_crossing(m1, z)
    assert ev.x_r == pytest.approx(math.sqrt(1 + A), rel=1e-9)


def test_start_on_level(m1):
    assert start_on_level(m1, 0.44) == pytest.approx(math.sqrt(1.44))
    assert start_on_level(m1, 3.0) == pytest.approx(2.0)


def test_winding_number_of_circle():
    pts = np.exp(1j * np.linspace(0, 2 * math.pi, 200))
    assert winding_number(pts, 0) == pytest.approx(1.0)
    assert winding_number(pts, 3) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 2), st.floats(-2.2, 2.2), st.floats(0.05, 1.0))
def test_classifiers_agree(n, xr, xi):
    m = OscillatorModel(n=n)
    fs = field_structure(m)
    z = complex(xr, xi)
    if np.min(np.abs(z - np.concatenate([fs.poles, fs.stagnation_points]))) < 1e-2:
        return
    from cqtraj.eigenstate import log_level

    if abs(log_level(m, z) - fs.separatrix_log_level) < 1e-4:
        return
    traj = integrate(m, z, strict=True)
    assert classify(m, traj) is classify_by_level(m, z)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 4), st.floats(-2.5, 2.5), st.floats(0.05, 1.2))
def test_invariant_drift_is_small(n, xr, xi):
    m = OscillatorModel(n=n)
    fs = field_structure(m)
    z = complex(xr, xi)
    if np.min(np.abs(z - np.concatenate([fs.poles, fs.stagnation_points]))) < 1e-2:
        return
    traj = integrate(m, z, until="crossing")
    from cqtraj.eigenstate import log_level

    u = log_level(m, traj.points)
    assert np.max(np.abs(u - u[0])) < 1e-7
