"""Collision operators on the uniform energy grid.

Dissipative part (per output species alpha, shell i1):

    C_diss[i1] = (m_b m_c m_d) h^2
                 * sum over pairs (i2, i4), i3 = i2+i4-i1 in [0, n-1],
                   D * ( {Wt1, Lg} - {W1, Ll} )

with the kinematic factor D = sqrt(min(x1,x2,x3,x4)/x1), x_k = m_k eps_k,
and the 4x4 pair contractions

    Lg[i,j] = sum_kl  Wt3[k,l] * (V (W2 (x) W4) V^dag)[(i,l),(j,k)]
    Ll[i,j] = sum_kl  W3[k,l]  * (V (Wt2 (x) Wt4) V^dag)[(i,l),(j,k)],

where Wt = 1 - W and V is the species-permuted pair tensor.  The species at
the four energy slots follow model.SPECIES_TUPLES, and the mass prefactor is
the product of the three non-output masses.

Conservative part: an effective Hamiltonian built from the same pair
contractions with the resonance kernel 1/(eps1-eps2+eps3-eps4); exactly
resonant grid triples are omitted (discrete principal value), and

    H_eff[i1] = -(1/pi) (m_b m_c m_d) h^3
                * sum over triples (i2,i3,i4) of D * (Lg + Ll) / denom,
    C_cons    = -i [H_eff, W].

Normalization: resolving the momentum delta and the angular integrals of the
primary operator definitions (which carry 1/(2pi)^3) contributes 8 pi^2 and
the mass product; combined with the on-shell pi this leaves exactly m_b m_c
m_d for the dissipative part and (1/pi) m_b m_c m_d for the conservative
kernel.  This normalization sets the physical timescale: relaxation rates
are O(10) for order-unity couplings, so the default dt = 1e-3 resolves them
comfortably.

The quadrature uses uniform weights (h^2 resp. h^3 per node).  Together with
the uniform moment weights this makes the on-shell quadruple weight symmetric
under the interchanges 1<->3, 2<->4 and (1,3)<->(2,4), so density and energy
conservation hold at the level of round-off.

Evaluation order is fixed (shells accumulate independently, lexicographic
inner order), so results are bitwise reproducible for any thread count.
"""

import os
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .model import SPECIES_TUPLES
from .spinalg import hermitian_part

try:  # pragma: no cover - exercised implicitly by engine selection
    from . import _kernels

    HAVE_NUMBA = _kernels.NUMBA_OK
except Exception:  # pragma: no cover
    _kernels = None
    HAVE_NUMBA = False

DEFAULT_ENGINE = os.environ.get("SPINBOLTZ_ENGINE", "auto")

DISS_PREFACTOR = 1.0
CONS_PREFACTOR = 1.0 / np.pi


def d_factor(x1, x2, x3, x4):
    """Kinematic weight sqrt(min(x)/x1) with the x1=0 limit convention.

    As eps1 -> 0 with the other energies positive the ratio tends to 1; if
    another energy vanishes as well the weight tends to 0.
    """
    if x1 <= 0.0:
        return 1.0 if min(x2, x3, x4) > 0.0 else 0.0
    m = min(x1, x2, x3, x4)
    return float(np.sqrt(m / x1))


@dataclass(frozen=True)
class CollisionTables:
    """Precomputed quadrature data for one (grid, masses) combination."""

    n: int
    h: float
    masses: np.ndarray
    xm: np.ndarray          # (4, n) m_s * eps_j
    sqrt_xm: np.ndarray     # (4, n)
    i1: np.ndarray          # (T,) on-shell triples, i1-major order
    i2: np.ndarray
    i3: np.ndarray
    i4: np.ndarray
    offsets: np.ndarray     # (n+1,) triple range per shell
    d_diss: np.ndarray      # (4, T) species D factors
    sqrt_min: np.ndarray    # (T,) sqrt(min_k x_k) in canonical slot order
    inv_k: np.ndarray       # (4n-3,) 1/(h*k) with the k=0 entry zeroed


_TABLE_CACHE = {}


def collision_tables(grid, masses):
    key = (grid.n, grid.h, tuple(np.asarray(masses, dtype=float)))
    cached = _TABLE_CACHE.get(key)
    if cached is not None:
        return cached

    n = grid.n
    masses = np.asarray(masses, dtype=float)
    eps = grid.energies
    xm = masses[:, None] * eps[None, :]
    sqrt_xm = np.sqrt(xm)

    # On-shell triples (i1; i2, i4) with i3 = i2 + i4 - i1 inside the box,
    # enumerated i1-major so each shell owns a contiguous range.
    i1g, i2g, i4g = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    i3g = i2g + i4g - i1g
    keep = (i3g >= 0) & (i3g <= n - 1)
    I1 = i1g[keep].astype(np.int64)
    I2 = i2g[keep].astype(np.int64)
    I4 = i4g[keep].astype(np.int64)
    I3 = (I2 + I4 - I1).astype(np.int64)

    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(I1, minlength=n), out=offsets[1:])
    if np.any(np.diff(offsets) == 0):
        raise ValidationError("internal error: empty on-shell segment")

    # Per-species D factors: slot species from SPECIES_TUPLES.
    T = I1.shape[0]
    d_diss = np.empty((4, T))
    for alpha in range(4):
        s1, s2, s3, s4 = SPECIES_TUPLES[alpha]
        x1 = xm[s1, I1]
        x2 = xm[s2, I2]
        x3 = xm[s3, I3]
        x4 = xm[s4, I4]
        others = np.minimum(np.minimum(x2, x3), x4)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.sqrt(np.minimum(x1, others) / x1)
        d[x1 <= 0.0] = (others[x1 <= 0.0] > 0.0).astype(float)
        d_diss[alpha] = d

    x1 = xm[0, I1]
    x2 = xm[1, I2]
    x3 = xm[2, I3]
    x4 = xm[3, I4]
    sqrt_min = np.sqrt(np.minimum(np.minimum(x1, x2), np.minimum(x3, x4)))

    # Resonance kernel 1/(h*k) indexed by k + 2(n-1); the k=0 slot stays 0,
    # which implements the principal-value omission rule.
    kvals = np.arange(-2 * (n - 1), 2 * (n - 1) + 1, dtype=float)
    inv_k = np.zeros_like(kvals)
    nz = kvals != 0
    inv_k[nz] = 1.0 / (grid.h * kvals[nz])

    tables = CollisionTables(
        n=n,
        h=grid.h,
        masses=masses,
        xm=xm,
        sqrt_xm=sqrt_xm,
        i1=I1,
        i2=I2,
        i3=I3,
        i4=I4,
        offsets=offsets,
        d_diss=d_diss,
        sqrt_min=sqrt_min,
        inv_k=inv_k,
    )
    _TABLE_CACHE[key] = tables
    return tables


# -- pair products shared by both operators ------------------------------------


def pair_products(field, model):
    """G arrays per species: V (W_s2 (x) W_s4) V^dag over all (i2, i4) pairs.

    Returns (Gg, Gl) of shape (4, n, n, 4, 4); Gl uses the hole blocks 1-W.
    """
    W = field.data
    Wt = np.broadcast_to(np.eye(2, dtype=complex), W.shape) - W
    n = field.grid.n
    Gg = np.empty((4, n, n, 4, 4), dtype=complex)
    Gl = np.empty((4, n, n, 4, 4), dtype=complex)
    for alpha in range(4):
        _, s2, _, s4 = SPECIES_TUPLES[alpha]
        V = model.vops[alpha]
        Vh = V.conj().T
        for blocks, out in ((W, Gg), (Wt, Gl)):
            K = np.einsum("pik,qjl->pqijkl", blocks[s2], blocks[s4]).reshape(n, n, 4, 4)
            out[alpha] = V @ K @ Vh
    return Gg, Gl


def hole_blocks(field):
    return np.broadcast_to(np.eye(2, dtype=complex), field.data.shape) - field.data


def _b_stacks(field, gain):
    """Per-species B blocks at the third slot: gain uses 1-W_s3, loss W_s3."""
    W = field.data
    Wt = hole_blocks(field)
    src = Wt if gain else W
    out = np.empty_like(W)
    for alpha in range(4):
        out[alpha] = src[SPECIES_TUPLES[alpha][2]]
    return out


def contract_pair(B, G):
    """L[i,j] = sum_kl B[k,l] G[(i,l),(j,k)] for stacks of 2x2/4x4 blocks."""
    B = np.asarray(B, dtype=complex)
    G4 = np.asarray(G, dtype=complex).reshape(B.shape[:-2] + (2, 2, 2, 2))
    return np.einsum("...kl,...iljk->...ij", B, G4)


# -- single-quadruple integrands (production form; also used by oracles) -------


def diss_integrand(vops, w1, w2, w3, w4):
    """Per-species dissipative integrand at one (e1, e2, e3, e4) quadruple.

    w1..w4 are (4, 2, 2) per-species block stacks at the four energy slots;
    the result is the (4, 2, 2) stack of output components.
    """
    blocks = [np.asarray(w, dtype=complex) for w in (w1, w2, w3, w4)]
    holes = [np.eye(2, dtype=complex) - b for b in blocks]
    out = np.empty((4, 2, 2), dtype=complex)
    for alpha in range(4):
        s1, s2, s3, s4 = SPECIES_TUPLES[alpha]
        V = vops[alpha]
        Vh = V.conj().T
        A1, A2, A3, A4 = blocks[0][s1], blocks[1][s2], blocks[2][s3], blocks[3][s4]
        H1, H2, H3, H4 = holes[0][s1], holes[1][s2], holes[2][s3], holes[3][s4]
        Lg = contract_pair(H3, V @ np.kron(A2, A4) @ Vh)
        Ll = contract_pair(A3, V @ np.kron(H2, H4) @ Vh)
        out[alpha] = (H1 @ Lg + Lg @ H1) - (A1 @ Ll + Ll @ A1)
    return out


def heff_integrand(vops, w2, w3, w4):
    """Per-species effective-Hamiltonian integrand at one (e2, e3, e4) triple.

    Sign convention: the gain+loss trace form enters with an overall minus,
    so that C_cons = -i[H_eff, W] with H_eff built from this integrand.
    """
    blocks = [np.asarray(w, dtype=complex) for w in (w2, w3, w4)]
    holes = [np.eye(2, dtype=complex) - b for b in blocks]
    out = np.empty((4, 2, 2), dtype=complex)
    for alpha in range(4):
        _, s2, s3, s4 = SPECIES_TUPLES[alpha]
        V = vops[alpha]
        Vh = V.conj().T
        A2, A3, A4 = blocks[0][s2], blocks[1][s3], blocks[2][s4]
        H2, H3, H4 = holes[0][s2], holes[1][s3], holes[2][s4]
        Lg = contract_pair(H3, V @ np.kron(A2, A4) @ Vh)
        Ll = contract_pair(A3, V @ np.kron(H2, H4) @ Vh)
        out[alpha] = -(Lg + Ll)
    return out


# -- engine selection -----------------------------------------------------------


def resolve_engine(engine=None):
    engine = (engine or DEFAULT_ENGINE).lower()
    if engine == "auto":
        return "numba" if HAVE_NUMBA else "numpy"
    if engine == "numba":
        if not HAVE_NUMBA:
            raise ValidationError("numba engine requested but numba is unavailable")
        return "numba"
    if engine == "numpy":
        return "numpy"
    raise ValidationError(f"unknown collision engine {engine!r}")


def set_threads(count):
    """Worker-thread count for the numba engine (no-op without numba)."""
    if HAVE_NUMBA and count:
        _kernels.set_threads(int(count))


# -- dissipative operator --------------------------------------------------------


def _diss_lambdas_numpy(field, model, tables):
    Gg, Gl = pair_products(field, model)
    Bg = _b_stacks(field, gain=True)
    Bl = _b_stacks(field, gain=False)
    n = tables.n
    seg = tables.offsets[:-1]
    lam_g = np.empty((4, n, 2, 2), dtype=complex)
    lam_l = np.empty((4, n, 2, 2), dtype=complex)
    for alpha in range(4):
        Gt = Gg[alpha][tables.i2, tables.i4]
        Lt = contract_pair(Bg[alpha][tables.i3], Gt)
        Lt *= tables.d_diss[alpha][:, None, None]
        lam_g[alpha] = np.add.reduceat(Lt, seg, axis=0)
        Gt = Gl[alpha][tables.i2, tables.i4]
        Lt = contract_pair(Bl[alpha][tables.i3], Gt)
        Lt *= tables.d_diss[alpha][:, None, None]
        lam_l[alpha] = np.add.reduceat(Lt, seg, axis=0)
    return lam_g, lam_l


def _diss_lambdas_numba(field, model, tables):
    Gg, Gl = pair_products(field, model)
    Bg = _b_stacks(field, gain=True)
    Bl = _b_stacks(field, gain=False)
    return _kernels.diss_lambdas(
        np.ascontiguousarray(Gg),
        np.ascontiguousarray(Gl),
        np.ascontiguousarray(Bg),
        np.ascontiguousarray(Bl),
        tables.i2,
        tables.i3,
        tables.i4,
        tables.offsets,
        tables.d_diss,
    )


def diss_operator(field, model, tables=None, engine=None):
    """Dissipative collision operator, shape (4, n, 2, 2)."""
    tables = tables or collision_tables(field.grid, model.masses)
    engine = resolve_engine(engine)
    if engine == "numba":
        lam_g, lam_l = _diss_lambdas_numba(field, model, tables)
    else:
        lam_g, lam_l = _diss_lambdas_numpy(field, model, tables)

    W = field.data
    Wt = hole_blocks(field)
    pref = DISS_PREFACTOR * np.prod(model.masses) / model.masses
    out = np.empty_like(W)
    for alpha in range(4):
        anticomm = (
            Wt[alpha] @ lam_g[alpha]
            + lam_g[alpha] @ Wt[alpha]
            - W[alpha] @ lam_l[alpha]
            - lam_l[alpha] @ W[alpha]
        )
        out[alpha] = (pref[alpha] * tables.h**2) * anticomm
    return hermitian_part(out)


# -- conservative operator --------------------------------------------------------


def _heff_numpy(field, model, tables):
    Gg, Gl = pair_products(field, model)
    Bg = _b_stacks(field, gain=True)
    Bl = _b_stacks(field, gain=False)
    n = tables.n
    xm = tables.xm
    H = np.zeros((4, n, 2, 2), dtype=complex)
    idx = np.arange(n)
    for alpha in range(4):
        s1, s2, s3, s4 = SPECIES_TUPLES[alpha]
        x2 = xm[s2]
        x3 = xm[s3]
        x4 = xm[s4]
        G4g = Gg[alpha].reshape(n, n, 2, 2, 2, 2)
        G4l = Gl[alpha].reshape(n, n, 2, 2, 2, 2)
        oth = np.minimum(np.minimum(x2[:, None, None], x3[None, :, None]), x4[None, None, :])
        for i1 in range(n):
            x1 = xm[s1, i1]
            if x1 > 0.0:
                d = np.sqrt(np.minimum(x1, oth) / x1)
            else:
                d = (oth > 0.0).astype(float)
            kern = tables.inv_k[i1 - idx[:, None, None] + idx[None, :, None] - idx[None, None, :] + 2 * (n - 1)]
            dk = d * kern
            bw_g = np.einsum("qsr,sij->qrij", dk, Bg[alpha])
            bw_l = np.einsum("qsr,sij->qrij", dk, Bl[alpha])
            H[alpha, i1] = np.einsum("qrkl,qriljk->ij", bw_g, G4g) + np.einsum(
                "qrkl,qriljk->ij", bw_l, G4l
            )
    return H


def _heff_numba(field, model, tables):
    Gg, Gl = pair_products(field, model)
    Bg = _b_stacks(field, gain=True)
    Bl = _b_stacks(field, gain=False)
    return _kernels.heff_sums(
        np.ascontiguousarray(Gg),
        np.ascontiguousarray(Gl),
        np.ascontiguousarray(Bg),
        np.ascontiguousarray(Bl),
        tables.xm,
        tables.sqrt_xm,
        SPECIES_TUPLES,
        tables.inv_k,
    )


def effective_hamiltonian(field, model, tables=None, engine=None):
    """H_eff per species and shell, shape (4, n, 2, 2), Hermitian."""
    tables = tables or collision_tables(field.grid, model.masses)
    engine = resolve_engine(engine)
    if engine == "numba":
        H = _heff_numba(field, model, tables)
    else:
        H = _heff_numpy(field, model, tables)
    pref = CONS_PREFACTOR * np.prod(model.masses) / model.masses
    H *= -(pref * tables.h**3)[:, None, None, None]
    return hermitian_part(H)


def cons_operator(field, model, tables=None, engine=None):
    """Conservative (Vlasov-type) operator -i[H_eff, W]."""
    H = effective_hamiltonian(field, model, tables=tables, engine=engine)
    W = field.data
    comm = H @ W - W @ H
    return hermitian_part(-1j * comm)


@dataclass
class CollisionOutput:
    """Split collision output; `total` is what the integrator consumes."""

    diss: np.ndarray
    cons: np.ndarray | None

    @property
    def total(self):
        if self.cons is None:
            return self.diss
        return self.diss + self.cons


def rhs(field, model, include_cons=True, tables=None, engine=None):
    tables = tables or collision_tables(field.grid, model.masses)
    diss = diss_operator(field, model, tables=tables, engine=engine)
    cons = cons_operator(field, model, tables=tables, engine=engine) if include_cons else None
    return CollisionOutput(diss=diss, cons=cons)
