"""Numerical laboratory for the non-Hermitian Haldane model with dissipation domain walls."""

from .lattice import (SiteGraph, LatticeOperator, DissipationProfile, build_honeycomb,
                      build_haldane, make_profile, apply_dissipation, bloch_reduce)
from .spectra import (ComplexSpectrum, eigensolve, classify_edge_states, particle_distribution,
                      fit_localization_length, inverse_participation_ratio)
from .topology import BlochMap, chern_number, edge_velocity
from .continuum import (DissipationField, detect_gddws, chiral_wavefunction,
                        localization_predicate, pair_gddw_solution, multi_gddw_solution)
from .hatano_nelson import HNParams, hn_matrix, half_hn_dispersion
from .circuit import build_circuit, verify_haldane_equivalence, export_netlist

__version__ = "0.1.0"
