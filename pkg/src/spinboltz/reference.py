"""Reference implementations used as independent cross-checks.

The integrands here follow the 8x8 block-matrix formulation: species blocks
are coupled through the two channel matrices

    V_eq: (a<-b, c<-d) pattern,   V_x: (a<-d, c<-b) pattern,

a per-block trace, and the block swap Y exchanging (a,b) <-> (c,d).  The
production code never calls these in the time loop; they exist so the test
suite and the `check` command can compare two structurally different
evaluation routes of the same operators.
"""

import numpy as np

from .collision import CONS_PREFACTOR, DISS_PREFACTOR, d_factor, diss_integrand, heff_integrand
from .errors import ValidationError
from .model import SPECIES_TUPLES

_I8 = np.eye(8, dtype=complex)

# block swap (a,b) <-> (c,d)
_Y = np.kron(
    np.array(
        [[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]],
        dtype=complex,
    ),
    np.eye(2, dtype=complex),
)


def _block(m8, alpha, beta):
    return m8[2 * alpha : 2 * alpha + 2, 2 * beta : 2 * beta + 2]


def _set_block(m8, alpha, beta, value):
    m8[2 * alpha : 2 * alpha + 2, 2 * beta : 2 * beta + 2] = value


def channel_matrices(interactions):
    """The 8x8 channel matrices (V_eq, V_x) from the four couplings."""
    if interactions is None:
        raise ValidationError("matrix-form reference needs the interaction matrices")
    v_eq = np.zeros((8, 8), dtype=complex)
    _set_block(v_eq, 0, 1, interactions.vab)
    _set_block(v_eq, 1, 0, interactions.vab.conj().T)
    _set_block(v_eq, 2, 3, interactions.vcd)
    _set_block(v_eq, 3, 2, interactions.vcd.conj().T)
    v_x = np.zeros((8, 8), dtype=complex)
    _set_block(v_x, 0, 3, interactions.vad)
    _set_block(v_x, 3, 0, interactions.vad.conj().T)
    _set_block(v_x, 2, 1, interactions.vcb)
    _set_block(v_x, 1, 2, interactions.vcb.conj().T)
    return v_eq, v_x


def block_diag8(blocks):
    """(4,2,2) species blocks -> 8x8 block-diagonal matrix."""
    m = np.zeros((8, 8), dtype=complex)
    for s in range(4):
        _set_block(m, s, s, blocks[s])
    return m


def _blocktrace(m8):
    """Replace each diagonal 2x2 block by its trace times the identity."""
    out = np.zeros_like(m8)
    for s in range(4):
        tr = np.trace(_block(m8, s, s))
        _set_block(out, s, s, tr * np.eye(2, dtype=complex))
    return out


def _hc(m8):
    return m8.conj().T


def matrix_diss_integrand(interactions, w1, w2, w3, w4):
    """Quadratic plus trace parts of the dissipative integrand, (4,2,2)."""
    v_eq, v_x = channel_matrices(interactions)
    W1, W2, W3, W4 = (block_diag8(np.asarray(w)) for w in (w1, w2, w3, w4))
    Wt1, Wt2, Wt3, Wt4 = (_I8 - W for W in (W1, W2, W3, W4))

    quad = (
        Wt1 @ v_eq @ W2 @ v_x @ Wt3 @ v_eq @ W4 @ v_x
        - W1 @ v_eq @ Wt2 @ v_x @ W3 @ v_eq @ Wt4 @ v_x
        + Wt1 @ v_x @ W4 @ v_eq @ Wt3 @ v_x @ W2 @ v_eq
        - W1 @ v_x @ Wt4 @ v_eq @ W3 @ v_x @ Wt2 @ v_eq
    )
    quad = quad + _hc(quad)

    t1 = Wt1 @ v_eq @ W2 @ v_eq
    t2 = W1 @ v_eq @ Wt2 @ v_eq
    t3 = Wt1 @ v_x @ W4 @ v_x
    t4 = W1 @ v_x @ Wt4 @ v_x
    tr = (
        (t1 + _hc(t1)) @ _blocktrace(_Y @ Wt3 @ v_eq @ W4 @ v_eq @ _Y)
        - (t2 + _hc(t2)) @ _blocktrace(_Y @ W3 @ v_eq @ Wt4 @ v_eq @ _Y)
        + (t3 + _hc(t3)) @ _blocktrace(_Y @ Wt3 @ v_x @ W2 @ v_x @ _Y)
        - (t4 + _hc(t4)) @ _blocktrace(_Y @ W3 @ v_x @ Wt2 @ v_x @ _Y)
    )

    total = quad + tr
    return np.stack([_block(total, s, s) for s in range(4)])


def matrix_heff_integrand(interactions, w2, w3, w4):
    """Effective-Hamiltonian integrand in matrix form, (4,2,2)."""
    v_eq, v_x = channel_matrices(interactions)
    W2, W3, W4 = (block_diag8(np.asarray(w)) for w in (w2, w3, w4))
    Wt2, Wt3, Wt4 = (_I8 - W for W in (W2, W3, W4))

    h = (
        -(v_eq @ W2 @ v_x @ Wt3 @ v_eq @ W4 @ v_x)
        - (v_x @ W4 @ v_eq @ Wt3 @ v_x @ W2 @ v_eq)
        - (v_eq @ Wt2 @ v_x @ W3 @ v_eq @ Wt4 @ v_x)
        - (v_x @ Wt4 @ v_eq @ W3 @ v_x @ Wt2 @ v_eq)
        - (v_eq @ W2 @ v_eq) @ _blocktrace(_Y @ Wt3 @ v_eq @ W4 @ v_eq @ _Y)
        - (v_eq @ Wt2 @ v_eq) @ _blocktrace(_Y @ W3 @ v_eq @ Wt4 @ v_eq @ _Y)
        - (v_x @ W4 @ v_x) @ _blocktrace(_Y @ Wt3 @ v_x @ W2 @ v_x @ _Y)
        - (v_x @ Wt4 @ v_x) @ _blocktrace(_Y @ W3 @ v_x @ Wt2 @ v_x @ _Y)
    )
    return np.stack([_block(h, s, s) for s in range(4)])


# -- brute-force operators -------------------------------------------------------


def _integrand_fn(model, form):
    if form == "matrix":
        inter = model.interactions
        return lambda w1, w2, w3, w4: matrix_diss_integrand(inter, w1, w2, w3, w4)
    if form == "tensor":
        return lambda w1, w2, w3, w4: diss_integrand(model.vops, w1, w2, w3, w4)
    raise ValidationError(f"unknown integrand form {form!r}")


def brute_diss_operator(field, model, form="tensor"):
    """Plain quadruple-loop evaluation of the dissipative operator."""
    n = field.grid.n
    h = field.grid.h
    masses = model.masses
    xm = masses[:, None] * field.grid.energies[None, :]
    W = field.data
    integrand = _integrand_fn(model, form)
    pref = DISS_PREFACTOR * np.prod(masses) / masses

    out = np.zeros((4, n, 2, 2), dtype=complex)
    for i1 in range(n):
        for i2 in range(n):
            for i4 in range(n):
                i3 = i2 + i4 - i1
                if i3 < 0 or i3 > n - 1:
                    continue
                val = integrand(W[:, i1], W[:, i2], W[:, i3], W[:, i4])
                for alpha in range(4):
                    s1, s2, s3, s4 = SPECIES_TUPLES[alpha]
                    d = d_factor(xm[s1, i1], xm[s2, i2], xm[s3, i3], xm[s4, i4])
                    out[alpha, i1] += pref[alpha] * h**2 * d * val[alpha]
    return out


def brute_effective_hamiltonian(field, model, form="tensor"):
    """Plain triple-loop evaluation of H_eff with the resonance-omission rule."""
    n = field.grid.n
    h = field.grid.h
    masses = model.masses
    xm = masses[:, None] * field.grid.energies[None, :]
    W = field.data
    if form == "matrix":
        inter = model.interactions
        integrand = lambda w2, w3, w4: matrix_heff_integrand(inter, w2, w3, w4)
    elif form == "tensor":
        integrand = lambda w2, w3, w4: heff_integrand(model.vops, w2, w3, w4)
    else:
        raise ValidationError(f"unknown integrand form {form!r}")
    pref = CONS_PREFACTOR * np.prod(masses) / masses

    out = np.zeros((4, n, 2, 2), dtype=complex)
    for i1 in range(n):
        for i2 in range(n):
            for i3 in range(n):
                for i4 in range(n):
                    k = i1 - i2 + i3 - i4
                    if k == 0:
                        continue
                    val = integrand(W[:, i2], W[:, i3], W[:, i4])
                    for alpha in range(4):
                        s1, s2, s3, s4 = SPECIES_TUPLES[alpha]
                        d = d_factor(xm[s1, i1], xm[s2, i2], xm[s3, i3], xm[s4, i4])
                        out[alpha, i1] += pref[alpha] * h**3 * d / (h * k) * val[alpha]
    return out


def brute_cons_operator(field, model, form="tensor"):
    H = brute_effective_hamiltonian(field, model, form=form)
    W = field.data
    return -1j * (H @ W - W @ H)
