"""Isotropic quantum Boltzmann solver for four fermionic spin-1/2 species
with spin-dependent pair-conversion interactions.

State: one 2x2 Hermitian occupation (Wigner) block per species and energy
shell.  Dynamics: dissipative collision operator plus a conservative
effective-Hamiltonian commutator, discretized on a uniform energy grid whose
quadrature preserves the density and energy conservation laws exactly and
satisfies a discrete H-theorem.
"""

from .collision import (
    CollisionOutput,
    collision_tables,
    cons_operator,
    diss_integrand,
    diss_operator,
    effective_hamiltonian,
    heff_integrand,
    rhs,
)
from .conservation import (
    StructureClass,
    classify_vop,
    conserved_functionals,
    conserved_names,
    drift_report,
    evaluate_conserved,
)
from .entropy import entropy, entropy_production
from .equilibrium import (
    EquilibriumParams,
    chemical_potentials,
    fermi_dirac,
    fit_equilibrium,
    stationarity_residual,
)
from .errors import (
    FitFailure,
    GridMismatchError,
    InvariantFailure,
    StepRejected,
    ValidationError,
)
from .grid import (
    EnergyGrid,
    WignerField,
    density_matrix,
    l1_distance,
    moment_weights,
    total_density,
    total_energy,
)
from .initial import StateSpec, benchmark_state, build_state, special, zeta_complex
from .integrator import StepConfig, Trajectory, midpoint_step, run
from .model import (
    DEFAULT_MASSES,
    SPECIES,
    GaugeRotation,
    InteractionSet,
    Model,
    beta_decay_interactions,
    build_vop,
    gauge_blocks,
    gauge_interactions,
    gauge_vop,
    momentum_from_energy,
    rotation_2d,
    species_vops,
)
from .presets import PRESET_NAMES, make_preset

__version__ = "0.1.0"
