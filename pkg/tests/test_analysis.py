import math

import numpy as np
import pytest
from scipy.special import i1

from _oracles import separatrix_xi_max
from cqtraj.analysis import (
    ELECTRON_MASS,
    RegionSpec,
    band_mass,
    classical_width,
    fraction_inside,
    integrate_region,
    lobe_geometry,
    net_source,
    orbit_bands,
    orbit_mass,
    si_model,
    xi_max,
)
from cqtraj.eigenstate import OscillatorModel
from cqtraj.probability import source_density, wyatt_density

# n=1 closed forms.  Inside the lemniscate psi*psi integrates to
# 2 sqrt(pi) I_1(1) / e; outside, the conserved density
# (2/sqrt(pi)) |X|^2 exp(-1 - A) integrates to 4 sqrt(pi) / e^2.
M_IN_N1 = 2 * math.sqrt(math.pi) * i1(1.0) / math.e
M_OUT_N1 = 4 * math.sqrt(math.pi) / math.e**2


def psi2(m):
    return lambda X: wyatt_density(m, X)


def test_unit_density_over_box():
    res = integrate_region(lambda X: np.ones(np.shape(X)), RegionSpec(1, "box", box=((0, 1), (0, 1))))
    assert res.value == pytest.approx(1.0, abs=1e-12)


def test_region_predicate(m1):
    inside = RegionSpec(1, "inside_separatrix")
    assert inside.contains(0.7 + 0.2j) and not inside.contains(1.5 + 0.5j)
    q1 = RegionSpec(1, "inside_separatrix", quadrant=1)
    assert q1.contains(0.7 + 0.2j) and not q1.contains(0.7 - 0.2j)
    lobe = RegionSpec(1, "lobe", lobe=0)
    assert lobe.contains(-0.7 + 0.2j) and not lobe.contains(0.7 + 0.2j)


def test_lobe_geometry_n1(m1):
    g = lobe_geometry(m1, 1)
    assert (g.left, g.right) == pytest.approx((0.0, math.sqrt(2)))


@pytest.mark.parametrize("method", ["polar", "cartesian"])
def test_inside_mass_n1(m1, method):
    res = integrate_region(psi2(m1), RegionSpec(1, "inside_separatrix"), 1e-12, method)
    assert res.value == pytest.approx(M_IN_N1, rel=1e-10)


def test_masked_route_is_rough_but_close(m1):
    res = integrate_region(psi2(m1), RegionSpec(1, "inside_separatrix"), 1e-6, "masked", max_panels=2000)
    assert res.value == pytest.approx(M_IN_N1, rel=1e-2)


@pytest.mark.parametrize("n", [1, 2])
def test_polar_and_cartesian_agree(n):
    m = OscillatorModel(n=n)
    region = RegionSpec(n, "inside_separatrix")
    a = integrate_region(psi2(m), region, 1e-12, "polar").value
    b = integrate_region(psi2(m), region, 1e-12, "cartesian").value
    assert a == pytest.approx(b, rel=1e-8)


@pytest.mark.parametrize("n", [1, 2])
def test_lobes_partition_inside(n):
    m = OscillatorModel(n=n)
    whole = integrate_region(psi2(m), RegionSpec(n, "inside_separatrix"), 1e-12, "cartesian").value
    parts = [integrate_region(psi2(m), RegionSpec(n, "lobe", lobe=j), 1e-12).value for j in range(n + 1)]
    assert math.fsum(parts) == pytest.approx(whole, rel=1e-9)


@pytest.mark.parametrize("n", [1, 2])
def test_net_source_vanishes(n):
    m = OscillatorModel(n=n)
    assert abs(net_source(m, RegionSpec(n, "inside_separatrix")).value) < 1e-10


def test_quadrant_sign_pattern(m1):
    q = {k: net_source(m1, RegionSpec(1, "inside_separatrix", quadrant=k)).value for k in (1, 2, 3, 4)}
    assert q[1] > 0 and q[3] > 0 and q[2] < 0 and q[4] < 0
    assert q[1] == pytest.approx(-q[4], abs=1e-10)


def test_net_source_cartesian_route(m1):
    res = integrate_region(lambda X: source_density(m1, X), RegionSpec(1, "inside_separatrix"), 1e-12, "cartesian")
    assert abs(res.value) < 1e-10


def test_orbit_bands_n1(m1):
    bands = orbit_bands(m1)
    assert [(b.branch, b.inside) for b in bands] == [("wyatt", True), ("wyatt", True), ("conserved", False)]
    assert bands[1].b == pytest.approx(math.sqrt(2))


def test_orbit_bands_n3_have_a_nest_band_inside():
    bands = orbit_bands(OscillatorModel(n=3))
    assert any(b.branch == "conserved" and b.inside for b in bands)
    assert sum(not b.inside for b in bands) == 1


def test_orbit_mass_matches_both_densities(m1):
    conserved, wyatt = orbit_mass(m1, 1.2)
    assert conserved > 0 and wyatt > 0
    # the two agree only at the anchor; the subnest value is the psi*psi one
    assert conserved != pytest.approx(wyatt)


def test_lobe_mass_in_orbit_coordinates(m1):
    res = band_mass(m1, orbit_bands(m1)[1], tol=1e-9)
    assert res.value == pytest.approx(M_IN_N1 / 2, rel=1e-8)


def test_outside_mass_in_orbit_coordinates(m1):
    res = band_mass(m1, orbit_bands(m1)[2], tol=1e-9, x_max=6.5)
    assert res.value == pytest.approx(M_OUT_N1, rel=1e-8)


@pytest.mark.slow
def test_fraction_n1(m1):
    rep = fraction_inside(m1)
    expected = M_IN_N1 / (M_IN_N1 + M_OUT_N1)
    assert rep.computed_value == pytest.approx(expected, rel=1e-8)
    assert rep.details["mass_inside"] == pytest.approx(M_IN_N1, rel=1e-8)
    assert rep.details["mass_total"] == pytest.approx(M_IN_N1 + M_OUT_N1, rel=1e-8)
    assert 0 < rep.computed_value < 1
    assert rep.details["shift_truncation_doubled"] < 1e-4
    assert rep.details["shift_order_doubled"] < 1e-4


def test_xi_max_n1_exact(m1):
    rep = xi_max(m1)
    assert rep.computed_value == pytest.approx(0.5, abs=1e-9)
    assert rep.details["paper_discrepant"]


@pytest.mark.parametrize("n", [2, 3])
def test_xi_max_matches_brute_force(n):
    y, _ = separatrix_xi_max(n)
    assert xi_max(OscillatorModel(n=n)).computed_value == pytest.approx(y, abs=2e-6)


def test_xi_max_decreases_with_n():
    vals = [xi_max(OscillatorModel(n=n)).computed_value for n in (1, 2, 3)]
    assert vals[0] > vals[1] > vals[2]


def test_classical_width_scaling():
    a = classical_width(si_model(1, 1.0, 1.0), 0.5).computed_value
    b = classical_width(si_model(1, 4.0, 1.0), 0.5).computed_value
    c = classical_width(si_model(1, 1.0, 9.0), 0.5).computed_value
    assert b == pytest.approx(a / 2) and c == pytest.approx(a / 3)


def test_classical_width_magnitudes():
    unit = classical_width(si_model(1, 1.0, 1.0), 0.5)
    assert 1e-17 / 3 <= unit.computed_value <= 3e-17 and unit.passed
    electron = classical_width(si_model(1, ELECTRON_MASS, 100.0), 0.5)
    assert electron.computed_value * math.sqrt(100.0) == pytest.approx(0.00538, rel=1e-2)
