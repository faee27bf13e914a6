"""Reflectionless multi-soliton solutions of the matrix BdG / Zakharov-Shabat problem."""
from .scattering_data import Background, Soliton, Symmetry, ValidatedSpec, apply_symmetry, validate
from .construct import bound_states, gap_function, scattering_state
from .asymptotics import decompose, approx_profile
from .direct_scattering import reflection_scan, scattering_matrix, soliton_slab
from .gap_equation import bound_orthonormality, filling_rates, gap_residual
from .nls_evolution import evolve, pde_residual

__version__ = "0.1.0"
