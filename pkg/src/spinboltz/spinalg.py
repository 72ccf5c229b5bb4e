"""Exact small-matrix algebra for 2x2 spin blocks and 4x4 pair blocks.

Pair blocks act on the tensor product of two spin spaces with the fixed
basis order |uu>, |ud>, |du>, |dd>; all 4x4 literals in this package use
that convention.  Everything here is value-semantics and thread-safe.
"""

import numpy as np

from .errors import ValidationError

HERMITICITY_TOL = 1e-12

I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

# Swap of the two tensor factors, |ij> -> |ji>.
T_SWAP = np.array(
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ],
    dtype=complex,
)


def tensor(a, b):
    """Tensor product of two 2x2 blocks: entry ((i,k),(j,l)) = a[i,j] b[k,l]."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_trace(side, m):
    """Trace a 4x4 pair block over one factor.

    side="first" traces out the first spin space and returns the second
    (result[k,l] = sum_i m[(i,k),(i,l)]); side="second" the other way round.
    """
    m4 = np.asarray(m, dtype=complex).reshape(2, 2, 2, 2)
    if side == "first":
        return np.einsum("ikil->kl", m4)
    if side == "second":
        return np.einsum("ikjk->ij", m4)
    raise ValidationError(f"partial_trace side must be 'first' or 'second', got {side!r}")


def hermitian_part(m):
    """(m + m^dagger)/2; used to strip round-off drift from nominally Hermitian blocks."""
    m = np.asarray(m, dtype=complex)
    return 0.5 * (m + m.conj().swapaxes(-1, -2))


def hermiticity_defect(m):
    """Largest |m - m^dagger| entry."""
    m = np.asarray(m, dtype=complex)
    return float(np.max(np.abs(m - m.conj().swapaxes(-1, -2))))


def check_hermitian(m, tol=HERMITICITY_TOL, what="matrix"):
    defect = hermiticity_defect(m)
    if defect > tol:
        raise ValidationError(f"{what} is not Hermitian: defect {defect:.3e} > {tol:.1e}")


def eig_hermitian(m, tol=HERMITICITY_TOL):
    """Closed-form spectral decomposition of a 2x2 Hermitian matrix.

    Returns (lam, projectors) with lam[0] <= lam[1] and m = sum lam[i] P[i].
    Degenerate input yields the coordinate-axis projectors.
    """
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2):
        raise ValidationError(f"expected a 2x2 matrix, got shape {m.shape}")
    check_hermitian(m, tol)

    a = m[0, 0].real
    d = m[1, 1].real
    b = 0.5 * (m[0, 1] + np.conj(m[1, 0]))
    mean = 0.5 * (a + d)
    delta = 0.5 * (a - d)
    r = np.hypot(delta, abs(b))

    lam = np.array([mean - r, mean + r])
    if r <= 1e-15 * max(1.0, abs(mean)):
        # degenerate: deterministic coordinate projectors
        P = np.zeros((2, 2, 2), dtype=complex)
        P[0, 0, 0] = 1.0
        P[1, 1, 1] = 1.0
        return lam, P

    if abs(b) == 0.0:
        P = np.zeros((2, 2, 2), dtype=complex)
        if a <= d:
            P[0, 0, 0] = 1.0
            P[1, 1, 1] = 1.0
        else:
            P[0, 1, 1] = 1.0
            P[1, 0, 0] = 1.0
        return lam, P

    # eigenvector for lam[1]: (b, lam1 - a), the other is its orthogonal complement
    v = np.array([b, lam[1] - a])
    v = v / np.linalg.norm(v)
    P1 = np.outer(v, v.conj())
    P = np.stack([I2 - P1, P1])
    return lam, P


def eigvals_batch(blocks):
    """Eigenvalues of a (..., 2, 2) stack of Hermitian blocks, ascending."""
    return np.linalg.eigvalsh(blocks)


def eig_batch(blocks):
    """Eigenvalues and eigenvector columns of a (..., 2, 2) Hermitian stack."""
    return np.linalg.eigh(blocks)


def random_hermitian(rng, scale=1.0):
    """Random 2x2 Hermitian matrix with entries of order `scale` (test helper)."""
    a = rng.uniform(-scale, scale)
    d = rng.uniform(-scale, scale)
    b = rng.uniform(-scale, scale) + 1j * rng.uniform(-scale, scale)
    return np.array([[a, b], [np.conj(b), d]], dtype=complex)


def random_unitary(rng):
    """Haar-ish random 2x2 unitary from the QR of a complex Gaussian matrix."""
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))
