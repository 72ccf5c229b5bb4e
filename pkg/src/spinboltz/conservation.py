"""Structure classes of the pair tensor and the conserved functionals they imply.

In the standard product basis |uu>, |ud>, |du>, |dd> three zero patterns of
the 4x4 pair tensor matter (all modulo per-species unitary rotations, which
must be supplied explicitly when a rotated model is classified):

  identity family   vop = c_eq * 1 + c_x * T          -> full total density
                                                         matrix conserved
  zero outer frame  only the middle 2x2 block nonzero -> adds the sigma_z
                                                         projection of a+c
  diagonal pattern  corners + middle block nonzero    -> adds the two diagonal
                                                         entries of the total
                                                         density

Every class also conserves tr rho, tr(rho_a+rho_b), tr(rho_a+rho_d) and the
total energy; average momentum is identically zero for isotropic states and
is not tracked.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .grid import species_densities, total_energy
from .model import GaugeRotation, gauge_blocks, gauge_vop
from .spinalg import I4, SIGMA_Z, T_SWAP

GENERAL = "General"
DIAGONAL_PATTERN = "DiagonalPattern"
IDENTITY_FAMILY = "IdentityFamily"
ZERO_OUTER_FRAME = "ZeroOuterFrame"

PATTERN_TOL = 1e-12

# entry masks in the fixed basis order
_MIDDLE = np.zeros((4, 4), dtype=bool)
_MIDDLE[1:3, 1:3] = True
_DIAG_PATTERN = _MIDDLE.copy()
_DIAG_PATTERN[0, 0] = True
_DIAG_PATTERN[3, 3] = True


@dataclass(frozen=True)
class StructureClass:
    variant: str
    gauge: GaugeRotation | None = None
    residuals: dict = field(default_factory=dict)

    def conserves_rho_diag(self):
        return self.variant in (DIAGONAL_PATTERN, IDENTITY_FAMILY, ZERO_OUTER_FRAME)


def identity_family_residual(vop):
    """Best-fit coefficients and residual of vop ~ c_eq 1 + c_x T."""
    # Gram system for the (1, T) pair: <1,1>=<T,T>=4, <1,T>=2.
    b1 = np.sum(vop * I4).real, np.sum(vop * I4).imag
    bt = np.sum(vop * T_SWAP).real, np.sum(vop * T_SWAP).imag
    g = np.array([[4.0, 2.0], [2.0, 4.0]])
    ce_re, cx_re = np.linalg.solve(g, [b1[0], bt[0]])
    ce_im, cx_im = np.linalg.solve(g, [b1[1], bt[1]])
    c_eq = ce_re + 1j * ce_im
    c_x = cx_re + 1j * cx_im
    resid = float(np.max(np.abs(vop - c_eq * I4 - c_x * T_SWAP)))
    return c_eq, c_x, resid


def classify_vop(vop, tol=PATTERN_TOL, gauge=None):
    """Classify the pair tensor, optionally in a supplied gauge frame.

    Tests run from the most restrictive pattern outward and the first match
    wins: identity family, zero outer frame, diagonal pattern, general.
    """
    if not (1e-14 <= tol <= 1e-6):
        raise ValidationError(f"pattern tolerance {tol:g} outside [1e-14, 1e-6]")
    vop = np.asarray(vop, dtype=complex)
    if gauge is not None:
        vop = gauge_vop(gauge, vop)

    _, _, ident_resid = identity_family_residual(vop)
    frame_resid = float(np.max(np.abs(vop[~_MIDDLE])))
    diag_resid = float(np.max(np.abs(vop[~_DIAG_PATTERN])))
    residuals = {
        "identity_family": ident_resid,
        "zero_outer_frame": frame_resid,
        "diagonal_pattern": diag_resid,
    }
    if ident_resid <= tol:
        variant = IDENTITY_FAMILY
    elif frame_resid <= tol:
        variant = ZERO_OUTER_FRAME
    elif diag_resid <= tol:
        variant = DIAGONAL_PATTERN
    else:
        variant = GENERAL
    return StructureClass(variant=variant, gauge=gauge, residuals=residuals)


def conserved_names(sclass):
    """Ordered names of the tracked conserved quantities for a class."""
    names = ["tr_rho", "tr_ab", "tr_ad", "energy"]
    if sclass.variant == DIAGONAL_PATTERN:
        names += ["rho_uu", "rho_dd"]
    elif sclass.variant == IDENTITY_FAMILY:
        names += ["rho_uu", "rho_dd", "rho_ud_re", "rho_ud_im"]
    elif sclass.variant == ZERO_OUTER_FRAME:
        names += ["rho_uu", "rho_dd", "sigma_z_ac"]
    return names


def conserved_functionals(sclass):
    """Evaluator descriptors (name, fn(field, masses) -> float) per class."""
    names = conserved_names(sclass)

    def make(idx):
        return lambda fld, masses: evaluate_conserved(fld, masses, sclass)[idx]

    return [(name, make(i)) for i, name in enumerate(names)]


def species_densities_in_frame(field, masses, sclass):
    """Per-species densities, rotated into the class frame when one is attached."""
    rho = species_densities(field, masses)
    if sclass is not None and sclass.gauge is not None:
        rho = gauge_blocks(sclass.gauge, rho)
    return rho


def evaluate_conserved_blocks(rho, energy, sclass=None, variant=None):
    """Conserved vector from precomputed densities; used by the fit loop."""
    variant = variant or (sclass.variant if sclass else GENERAL)
    total = rho.sum(axis=0)
    values = [
        float(np.trace(total).real),
        float((np.trace(rho[0]) + np.trace(rho[1])).real),
        float((np.trace(rho[0]) + np.trace(rho[3])).real),
        float(energy),
    ]
    if variant == DIAGONAL_PATTERN:
        values += [float(total[0, 0].real), float(total[1, 1].real)]
    elif variant == IDENTITY_FAMILY:
        values += [
            float(total[0, 0].real),
            float(total[1, 1].real),
            float(total[0, 1].real),
            float(total[0, 1].imag),
        ]
    elif variant == ZERO_OUTER_FRAME:
        sz = np.trace(SIGMA_Z @ (rho[0] + rho[2])).real
        values += [float(total[0, 0].real), float(total[1, 1].real), float(sz)]
    return np.array(values)


def evaluate_conserved(field, masses, sclass):
    """Conserved vector of a field for the given structure class."""
    rho = species_densities_in_frame(field, masses, sclass)
    return evaluate_conserved_blocks(rho, total_energy(field, masses), variant=sclass.variant)


def conserved_rates(coll_blocks, grid, masses, sclass):
    """Time derivative of the conserved vector along a collision output.

    All tracked functionals are linear, so this is the same evaluation with
    the collision blocks in place of the field blocks.
    """
    from .grid import moment_weights

    w = moment_weights(grid, masses)
    rho_dot = np.einsum("sj,sjkl->skl", w, coll_blocks)
    if sclass is not None and sclass.gauge is not None:
        rho_dot = gauge_blocks(sclass.gauge, rho_dot)
    eps = grid.energies
    traces = np.trace(coll_blocks, axis1=-2, axis2=-1).real
    e_dot = float(np.einsum("sj,j,sj->", w, eps, traces))
    return evaluate_conserved_blocks(rho_dot, e_dot, variant=sclass.variant)


def drift_report(trajectory):
    """Max relative drift per conserved quantity over a trajectory."""
    q = np.asarray(trajectory.conserved)
    q0 = q[0]
    scale = np.maximum(np.abs(q0), 1.0)
    drift = np.max(np.abs(q - q0[None, :]), axis=0) / scale
    return dict(zip(trajectory.conserved_names, drift))
