"""Entropy functional and entropy-production rate.

S[W] = -sum_{alpha,j} w[alpha,j] sum_sigma ( lam log lam + (1-lam) log(1-lam) )
over block eigenvalues, with the 0 log 0 = 0 convention.  The production rate
is the discrete analogue of the Boltzmann entropy balance: a sum over on-shell
quadruples and eigenmode combinations of

    log(Lg/Ll) (Lg - Ll) |<13|V|24>|^2 >= 0,

with Lg = l1 (1-l2) l3 (1-l4) and Ll its mirror, weighted consistently with
the collision quadrature so that it equals -sum w tr[(log W - log Wt) C_diss]
identically.  Each summand is non-negative, so sigma >= 0 holds at the level
of floating-point sign, not just analytically.  The conservative operator is
a commutator and contributes nothing.
"""

import math

import numpy as np

from .collision import collision_tables
from .grid import moment_weights

EIG_CLAMP = 1e-12

# sigma quadruple weight: (moment weight) x (collision prefactor) x D, with the
# sqrt(min m eps) factor kept per quadruple: 4 sqrt(2) pi prod(m) h^3.
_OMEGA_CONST = 4.0 * math.sqrt(2.0) * math.pi


def _slogs(lam):
    """lam log lam with the 0 log 0 := 0 convention, elementwise."""
    out = np.zeros_like(lam)
    pos = lam > 0.0
    out[pos] = lam[pos] * np.log(lam[pos])
    return out


def entropy(field, masses):
    """Total entropy; deterministic exact summation over all modes."""
    w = moment_weights(field.grid, masses)
    lam = field.eigenvalues()
    terms = w[:, :, None] * (_slogs(lam) + _slogs(1.0 - lam))
    return -math.fsum(terms.ravel().tolist())


def entropy_production(field, model, tables=None):
    """Entropy production rate sigma >= 0 of the dissipative operator."""
    tables = tables or collision_tables(field.grid, model.masses)
    lam, vec = np.linalg.eigh(field.data)  # (4,n,2), (4,n,2,2)
    lam = np.clip(lam, EIG_CLAMP, 1.0 - EIG_CLAMP)

    I1, I2, I3, I4 = tables.i1, tables.i2, tables.i3, tables.i4

    # eigenvector amplitudes <v1 v3| V |v2 v4> for all 16 mode combinations
    U13 = np.einsum("tik,tjl->tijkl", vec[0][I1], vec[2][I3]).reshape(-1, 4, 4)
    U24 = np.einsum("tik,tjl->tijkl", vec[1][I2], vec[3][I4]).reshape(-1, 4, 4)
    M = np.einsum("tqi,qr,trj->tij", U13.conj(), model.vop, U24)
    amp2 = (M.real**2 + M.imag**2).reshape(-1, 2, 2, 2, 2)  # [t, s1, s3, s2, s4]
    amp2 = amp2.transpose(0, 1, 3, 2, 4)  # -> [t, s1, s2, s3, s4]

    l1 = lam[0][I1]
    l2 = lam[1][I2]
    l3 = lam[2][I3]
    l4 = lam[3][I4]
    lg = np.einsum("ti,tj,tk,tl->tijkl", l1, 1.0 - l2, l3, 1.0 - l4)
    ll = np.einsum("ti,tj,tk,tl->tijkl", 1.0 - l1, l2, 1.0 - l3, l4)
    F = (np.log(lg) - np.log(ll)) * (lg - ll)

    per_quadruple = np.einsum("tijkl,tijkl->t", F, amp2)
    total = float(np.dot(tables.sqrt_min, per_quadruple))
    return 2.0 * _OMEGA_CONST * np.prod(model.masses) * tables.h**3 * total


def entropy_production_direct(field, model, tables=None, diss=None, engine=None):
    """-sum w tr[(log W - log Wt) C_diss]; cross-check route for sigma."""
    from .collision import diss_operator

    if diss is None:
        diss = diss_operator(field, model, tables=tables, engine=engine)
    lam, vec = np.linalg.eigh(field.data)
    lam = np.clip(lam, EIG_CLAMP, 1.0 - EIG_CLAMP)
    phi = np.log(lam) - np.log1p(-lam)
    phi_blocks = np.einsum("snik,snk,snjk->snij", vec, phi, vec.conj())
    w = moment_weights(field.grid, model.masses)
    traces = np.einsum("snij,snji->sn", phi_blocks, diss).real
    return -float(np.einsum("sn,sn->", w, traces))
