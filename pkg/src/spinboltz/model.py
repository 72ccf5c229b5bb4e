"""Physical model: species masses, dispersion, interaction matrices and the
4x4 pair-interaction tensor through which they enter the dynamics.

Four distinguishable spin-1/2 species a, b, c, d interact through
pair-conversion channels (a<->b together with c<->d, and a<->d together with
c<->b), described by constant 2x2 coupling matrices V_ab, V_cd, V_ad, V_cb.
The collision operator depends on them only through

    vop = (V_ab (x) V_cd) + (V_ad (x) V_cb) T,

with T the swap of the two tensor factors.  Each species' own component of
the collision integrand uses a permuted variant of vop (see SPECIES_TUPLES).
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .spinalg import I2, T_SWAP, tensor

SPECIES = ("a", "b", "c", "d")

# Fig.-style default masses for (a, b, c, d), natural units.
DEFAULT_MASSES = (1.0, 4.0 / 5.0, 1.0 / 5.0, 1.0 / 2.0)

# Slot -> species wiring of the collision integrand per output species.
# Row alpha lists the species sitting at energy slots (e1, e2, e3, e4) of the
# alpha-component: a:(a,b,c,d), b:(b,a,d,c), c:(c,d,a,b), d:(d,c,b,a).
SPECIES_TUPLES = np.array(
    [
        [0, 1, 2, 3],
        [1, 0, 3, 2],
        [2, 3, 0, 1],
        [3, 2, 1, 0],
    ],
    dtype=np.int64,
)

RANK_TOL = 1e-12
UNITARITY_TOL = 1e-12


def _as_2x2(m, name):
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2):
        raise ValidationError(f"{name} must be 2x2, got shape {m.shape}")
    return m


@dataclass(frozen=True)
class InteractionSet:
    """The four 2x2 coupling matrices (dimensionless, stored complex)."""

    vab: np.ndarray
    vcd: np.ndarray
    vad: np.ndarray
    vcb: np.ndarray

    def __post_init__(self):
        for name in ("vab", "vcd", "vad", "vcb"):
            m = _as_2x2(getattr(self, name), name)
            object.__setattr__(self, name, m)
            if abs(np.linalg.det(m)) <= RANK_TOL:
                raise ValidationError(f"interaction matrix {name} is rank-deficient")

    def warn_if_complex(self):
        """Physical coupling inputs are real; gauge-rotated forms may not be."""
        for name in ("vab", "vcd", "vad", "vcb"):
            if np.max(np.abs(getattr(self, name).imag)) > 1e-12:
                warnings.warn(f"interaction matrix {name} has imaginary parts > 1e-12")

    def as_tuple(self):
        return (self.vab, self.vcd, self.vad, self.vcb)


def build_vop(interactions):
    """Assemble the 4x4 pair tensor (V_ab (x) V_cd) + (V_ad (x) V_cb) T."""
    V = interactions
    return tensor(V.vab, V.vcd) + tensor(V.vad, V.vcb) @ T_SWAP


def species_vops(vop):
    """Per-species variants of the pair tensor, order (a, b, c, d).

    The b/c/d components of the collision integrand are the a-component with
    species permuted (a<->b,c<->d / a<->c,b<->d / a<->d,b<->c); on the tensor
    this acts as dagger, swap conjugation, and both.
    """
    vop = np.asarray(vop, dtype=complex)
    T = T_SWAP
    return np.stack(
        [
            vop,
            vop.conj().T,
            T @ vop @ T,
            T @ vop.conj().T @ T,
        ]
    )


def beta_decay_interactions(c_v, c_a):
    """Coupling set for the weak-decay channel n + nu <-> p + e.

    All four matrices are proportional to the identity:
    V_ab=(C_V-C_A) 1, V_cd=1, V_ad=1, V_cb=2 C_A 1 with species
    (a,b,c,d) = (n,p,nu,e).  C_A=0 or C_V=C_A would make a matrix singular.
    """
    if abs(c_v - c_a) <= RANK_TOL:
        raise ValidationError("beta-decay couplings need C_V != C_A (V_ab would vanish)")
    if abs(c_a) <= RANK_TOL:
        raise ValidationError("beta-decay couplings need C_A != 0 (V_cb would vanish)")
    return InteractionSet(
        vab=(c_v - c_a) * I2,
        vcd=I2.copy(),
        vad=I2.copy(),
        vcb=2.0 * c_a * I2,
    )


@dataclass(frozen=True)
class GaugeRotation:
    """One fixed 2x2 unitary per species, acting as W_a -> U_a W_a U_a^dag."""

    u: np.ndarray  # (4, 2, 2) complex

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex)
        if u.shape != (4, 2, 2):
            raise ValidationError(f"gauge rotation must have shape (4,2,2), got {u.shape}")
        object.__setattr__(self, "u", u)
        for k, tag in enumerate(SPECIES):
            defect = np.max(np.abs(u[k].conj().T @ u[k] - I2))
            if defect > UNITARITY_TOL:
                raise ValidationError(
                    f"gauge matrix for species {tag} is not unitary (defect {defect:.3e})"
                )

    @staticmethod
    def identity():
        return GaugeRotation(np.broadcast_to(I2, (4, 2, 2)).copy())

    @staticmethod
    def single(species_index, u2):
        mats = np.broadcast_to(I2, (4, 2, 2)).copy()
        mats[species_index] = np.asarray(u2, dtype=complex)
        return GaugeRotation(mats)

    def inverse(self):
        return GaugeRotation(self.u.conj().transpose(0, 2, 1).copy())

    def compose(self, other):
        """Rotation equivalent to applying `other` first, then `self`."""
        return GaugeRotation(np.einsum("sij,sjk->sik", self.u, other.u))


def rotation_2d(phi):
    """Real 2x2 rotation [[cos, sin], [-sin, cos]]."""
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, s], [-s, c]], dtype=complex)


def gauge_vop(g, vop):
    """Transform the pair tensor: vop -> (U_a (x) U_c) vop (U_b (x) U_d)^dag."""
    left = tensor(g.u[0], g.u[2])
    right = tensor(g.u[1], g.u[3])
    return left @ np.asarray(vop, dtype=complex) @ right.conj().T


def gauge_interactions(g, interactions):
    """Transform each coupling matrix: V_ab -> U_a V_ab U_b^dag etc."""
    u = g.u
    return InteractionSet(
        vab=u[0] @ interactions.vab @ u[1].conj().T,
        vcd=u[2] @ interactions.vcd @ u[3].conj().T,
        vad=u[0] @ interactions.vad @ u[3].conj().T,
        vcb=u[2] @ interactions.vcb @ u[1].conj().T,
    )


def gauge_blocks(g, blocks):
    """Rotate a (4, ..., 2, 2) per-species block stack, W -> U W U^dag."""
    blocks = np.asarray(blocks, dtype=complex)
    out = np.empty_like(blocks)
    for s in range(4):
        out[s] = np.einsum("ij,...jk,lk->...il", g.u[s], blocks[s], g.u[s].conj())
    return out


def momentum_from_energy(mass, eps):
    """Invert the quadratic dispersion: |p| = sqrt(2 m eps)."""
    eps = np.asarray(eps, dtype=float)
    if np.any(eps < 0):
        raise ValidationError("energy must be non-negative")
    return np.sqrt(2.0 * mass * eps)


@dataclass(frozen=True)
class Model:
    """Masses plus the pair tensor (and, when known, its V-matrix factors)."""

    masses: np.ndarray
    vop: np.ndarray
    interactions: InteractionSet | None = None
    gauge: GaugeRotation | None = None  # rotation that exhibits a zero pattern
    vops: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        masses = np.asarray(self.masses, dtype=float)
        if masses.shape != (4,) or np.any(masses <= 0):
            raise ValidationError("need exactly four strictly positive masses")
        vop = np.asarray(self.vop, dtype=complex)
        if vop.shape != (4, 4):
            raise ValidationError(f"pair tensor must be 4x4, got {vop.shape}")
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "vop", vop)
        object.__setattr__(self, "vops", species_vops(vop))

    @staticmethod
    def from_interactions(interactions, masses=DEFAULT_MASSES, gauge=None):
        return Model(
            masses=np.asarray(masses, dtype=float),
            vop=build_vop(interactions),
            interactions=interactions,
            gauge=gauge,
        )

    @staticmethod
    def from_vop(vop, masses=DEFAULT_MASSES, gauge=None):
        return Model(masses=np.asarray(masses, dtype=float), vop=vop, gauge=gauge)

    def rotated(self, g):
        """The gauge-transformed model (V and vop rotated covariantly)."""
        inter = gauge_interactions(g, self.interactions) if self.interactions else None
        return Model(
            masses=self.masses.copy(),
            vop=gauge_vop(g, self.vop),
            interactions=inter,
            gauge=None,
        )

    def with_gauge(self, g):
        return Model(
            masses=self.masses.copy(),
            vop=self.vop.copy(),
            interactions=self.interactions,
            gauge=g,
        )
