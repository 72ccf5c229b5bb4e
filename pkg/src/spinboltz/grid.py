"""Uniform energy grid, Wigner field storage and isotropic-3d moment functionals.

States are isotropic, so each species is stored as one 2x2 Hermitian block
per energy shell eps_j = h*j.  Moments use the measure d^3p written in the
energy variable, d^3p = 4 pi m |p| deps with |p| = sqrt(2 m eps), evaluated
with a plain uniform-weight rule:

    w[alpha, j] = 4 pi m_alpha sqrt(2 m_alpha eps_j) h.

The j=0 weight vanishes with |p|.  No endpoint halving is applied anywhere:
the same uniform weights make the discrete conservation identities of the
collision quadrature exact (see collision module), and the sqrt(eps) factor
already suppresses the boundary.
"""

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, ValidationError
from .model import SPECIES
from .spinalg import eigvals_batch, hermitian_part, hermiticity_defect

# Physical-occupation guard bands for eigenvalues of Wigner blocks.
CLAMP_BAND = 1e-9   # excursions up to this size are silently clamped
REJECT_BAND = 1e-6  # beyond this the state is rejected as unphysical


@dataclass(frozen=True)
class EnergyGrid:
    """Uniform energy shells eps_j = h*j, j = 0..n-1."""

    n: int
    h: float

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError("grid needs at least 2 shells")
        if not (self.h > 0):
            raise ValidationError("grid spacing must be positive")

    @property
    def energies(self):
        return self.h * np.arange(self.n, dtype=float)

    @property
    def eps_max(self):
        return self.h * (self.n - 1)

    def refine(self, factor):
        """Same eps_max, spacing h/factor (shell count (n-1)*factor + 1)."""
        if factor < 1 or int(factor) != factor:
            raise ValidationError("refinement factor must be a positive integer")
        return EnergyGrid(n=(self.n - 1) * int(factor) + 1, h=self.h / int(factor))


def moment_weights(grid, masses):
    """Measure weights w[alpha, j] = 4 pi m sqrt(2 m eps_j) h, shape (4, n)."""
    masses = np.asarray(masses, dtype=float)
    eps = grid.energies
    return 4.0 * np.pi * masses[:, None] * np.sqrt(2.0 * masses[:, None] * eps[None, :]) * grid.h


class WignerField:
    """Per-species, per-shell 2x2 Hermitian occupation blocks.

    data has shape (4, n, 2, 2); blocks are kept exactly Hermitian in storage.
    """

    __slots__ = ("grid", "data")

    def __init__(self, grid, data, validate=True):
        data = np.asarray(data, dtype=complex)
        if data.shape != (4, grid.n, 2, 2):
            raise ValidationError(f"field data must have shape (4,{grid.n},2,2), got {data.shape}")
        self.grid = grid
        self.data = data
        if validate:
            self.validate()

    @staticmethod
    def zeros(grid):
        return WignerField(grid, np.zeros((4, grid.n, 2, 2), dtype=complex), validate=False)

    @staticmethod
    def uniform(grid, level):
        if not (-REJECT_BAND <= level <= 1.0 + REJECT_BAND):
            raise ValidationError("uniform fill level must lie in [0, 1]")
        data = np.zeros((4, grid.n, 2, 2), dtype=complex)
        data[:, :, 0, 0] = level
        data[:, :, 1, 1] = level
        return WignerField(grid, data, validate=False)

    def copy(self):
        return WignerField(self.grid, self.data.copy(), validate=False)

    def species(self, index):
        return self.data[index]

    def eigenvalues(self):
        """Occupation eigenvalues, shape (4, n, 2), ascending per block."""
        return eigvals_batch(self.data)

    def hermitize(self):
        self.data = hermitian_part(self.data)
        return self

    def validate(self, hermit_tol=1e-12, reject_band=REJECT_BAND):
        defect = hermiticity_defect(self.data)
        if defect > hermit_tol:
            raise ValidationError(f"Wigner block not Hermitian: defect {defect:.3e}")
        lam = self.eigenvalues()
        excess = np.maximum(-lam, lam - 1.0)
        if float(excess.max()) > reject_band:
            s, j, k = np.unravel_index(int(np.argmax(excess)), lam.shape)
            raise ValidationError(
                f"unphysical occupation eigenvalue {lam[s, j, k]:.12g} at species"
                f" {SPECIES[s]}, shell {j}"
            )
        return self

    def clamp(self, band=CLAMP_BAND):
        """Clamp round-off eigenvalue excursions within `band` back into [0, 1].

        Returns the number of clamped blocks.  Excursions beyond the band are
        left alone (the caller decides whether to reject).
        """
        lam = self.eigenvalues()
        bad = (lam < 0) & (lam >= -band) | (lam > 1.0) & (lam <= 1.0 + band)
        hit = np.any(bad, axis=-1)
        count = int(np.count_nonzero(hit))
        if count:
            idx = np.argwhere(hit)
            for s, j in idx:
                w, v = np.linalg.eigh(self.data[s, j])
                w = np.clip(w, 0.0, 1.0)
                self.data[s, j] = (v * w) @ v.conj().T
        return count


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatchError(f"fields live on different grids: {a.grid} vs {b.grid}")


def density_matrix(field, masses, species):
    """Spin density of one species: rho_alpha = sum_j w[alpha,j] W_alpha(eps_j)."""
    w = moment_weights(field.grid, masses)
    return np.einsum("j,jkl->kl", w[species], field.data[species])


def total_density(field, masses):
    """Total spin density matrix, summed over the four species."""
    w = moment_weights(field.grid, masses)
    return np.einsum("sj,sjkl->kl", w, field.data)


def species_densities(field, masses):
    """All four spin densities at once, shape (4, 2, 2)."""
    w = moment_weights(field.grid, masses)
    return np.einsum("sj,sjkl->skl", w, field.data)


def total_energy(field, masses):
    """Kinetic energy functional sum_alpha sum_j w eps_j tr W."""
    w = moment_weights(field.grid, masses)
    eps = field.grid.energies
    traces = np.trace(field.data, axis1=-2, axis2=-1).real
    return float(np.einsum("sj,j,sj->", w, eps, traces))


def l1_distance(a, b, masses):
    """Weighted L1 distance: sum of absolute eigenvalues of the block differences."""
    _check_same_grid(a, b)
    w = moment_weights(a.grid, masses)
    lam = eigvals_batch(a.data - b.data)
    return float(np.einsum("sj,sjk->", w, np.abs(lam)))


def random_physical_field(grid, rng, lo=0.05, hi=0.95):
    """Random Hermitian blocks with eigenvalues in [lo, hi] (tests, checks)."""
    lam = rng.uniform(lo, hi, size=(4, grid.n, 2))
    z = rng.normal(size=(4, grid.n, 2, 2)) + 1j * rng.normal(size=(4, grid.n, 2, 2))
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    q = q * (diag / np.abs(diag))[..., None, :]
    data = np.einsum("sjik,sjk,sjlk->sjil", q, lam, q.conj())
    return WignerField(grid, data)


# -- snapshot CSV format ------------------------------------------------------
#
# One record per (species, shell).  A Hermitian 2x2 block is fully described
# by Re W11, Re W22, Re W12, Im W12.

SNAPSHOT_HEADER = "species,energy,w11_re,w22_re,w12_re,w12_im"


def _fmt(x):
    return format(float(x), ".17g")


def write_snapshot(field, path):
    lines = [SNAPSHOT_HEADER]
    eps = field.grid.energies
    for s, tag in enumerate(SPECIES):
        for j in range(field.grid.n):
            blk = field.data[s, j]
            lines.append(
                ",".join(
                    [
                        tag,
                        _fmt(eps[j]),
                        _fmt(blk[0, 0].real),
                        _fmt(blk[1, 1].real),
                        _fmt(blk[0, 1].real),
                        _fmt(blk[0, 1].imag),
                    ]
                )
            )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_snapshot(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != SNAPSHOT_HEADER:
        raise ValidationError(f"{path}: not a field snapshot (bad header)")
    rows = [ln.split(",") for ln in lines[1:]]
    per_species = {tag: [] for tag in SPECIES}
    for row in rows:
        if len(row) != 6:
            raise ValidationError(f"{path}: malformed snapshot row {row!r}")
        per_species[row[0]].append([float(v) for v in row[1:]])
    counts = {tag: len(v) for tag, v in per_species.items()}
    n = counts["a"]
    if any(c != n for c in counts.values()) or n < 2:
        raise ValidationError(f"{path}: inconsistent shell counts {counts}")
    eps = np.array([r[0] for r in per_species["a"]])
    h = eps[1] - eps[0]
    if not np.allclose(np.diff(eps), h, rtol=0, atol=1e-12 * max(1.0, h)):
        raise ValidationError(f"{path}: energies are not uniformly spaced")
    grid = EnergyGrid(n=n, h=float(h))
    data = np.zeros((4, n, 2, 2), dtype=complex)
    for s, tag in enumerate(SPECIES):
        for j, (_, w11, w22, w12r, w12i) in enumerate(per_species[tag]):
            data[s, j, 0, 0] = w11
            data[s, j, 1, 1] = w22
            data[s, j, 0, 1] = w12r + 1j * w12i
            data[s, j, 1, 0] = w12r - 1j * w12i
    return WignerField(grid, data)
