"""Complex quantum trajectories and extended probability densities for
harmonic-oscillator eigenstates."""

from .analysis import RegionSpec, fraction_inside, integrate_region, net_source, xi_max
from .eigenstate import OscillatorModel, field_structure, psi, stream_invariant, velocity
from .probability import (
    born_density,
    combined_density,
    conserved_density,
    source_density,
    wyatt_density,
)
from .report import Report
from .trajectory import IntegratorConfig, OrbitKind, classify, integrate

__all__ = [
    "IntegratorConfig",
    "OrbitKind",
    "OscillatorModel",
    "RegionSpec",
    "Report",
    "born_density",
    "classify",
    "combined_density",
    "conserved_density",
    "field_structure",
    "fraction_inside",
    "integrate",
    "integrate_region",
    "net_source",
    "psi",
    "source_density",
    "stream_invariant",
    "velocity",
    "wyatt_density",
    "xi_max",
]
