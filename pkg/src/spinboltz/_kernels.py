"""Numba kernels for the collision quadrature hot loops.

Each (species, output shell) task accumulates its own sums in a fixed inner
order, so results do not depend on the worker-thread count.  fastmath stays
off: the conservation identities rely on plain IEEE arithmetic.
"""

import numpy as np

try:
    import numba
    from numba import njit, prange

    NUMBA_OK = True
except Exception:  # pragma: no cover
    NUMBA_OK = False

    def njit(*args, **kwargs):  # type: ignore
        def deco(fn):
            return fn

        return deco

    prange = range  # type: ignore


def set_threads(count):
    if NUMBA_OK:
        numba.set_num_threads(max(1, min(int(count), numba.config.NUMBA_NUM_THREADS)))


@njit(cache=True, parallel=True, fastmath=False)
def _diss_lambdas_impl(Gg, Gl, Bg, Bl, I2, I3, I4, offsets, D):
    nsp = Gg.shape[0]
    n = Gg.shape[1]
    lam_g = np.zeros((nsp, n, 2, 2), dtype=np.complex128)
    lam_l = np.zeros((nsp, n, 2, 2), dtype=np.complex128)
    for task in prange(nsp * n):
        alpha = task // n
        i1 = task % n
        Ga = Gg[alpha]
        La = Gl[alpha]
        Ba = Bg[alpha]
        Bb = Bl[alpha]
        Da = D[alpha]
        g00 = 0.0 + 0.0j
        g01 = 0.0 + 0.0j
        g10 = 0.0 + 0.0j
        g11 = 0.0 + 0.0j
        l00 = 0.0 + 0.0j
        l01 = 0.0 + 0.0j
        l10 = 0.0 + 0.0j
        l11 = 0.0 + 0.0j
        for t in range(offsets[i1], offsets[i1 + 1]):
            d = Da[t]
            if d == 0.0:
                continue
            i2 = I2[t]
            i3 = I3[t]
            i4 = I4[t]
            G = Ga[i2, i4]
            B = Ba[i3]
            # L[i,j] = sum_kl B[k,l] G[2i+l, 2j+k]
            g00 += d * (
                B[0, 0] * G[0, 0] + B[0, 1] * G[1, 0] + B[1, 0] * G[0, 1] + B[1, 1] * G[1, 1]
            )
            g01 += d * (
                B[0, 0] * G[0, 2] + B[0, 1] * G[1, 2] + B[1, 0] * G[0, 3] + B[1, 1] * G[1, 3]
            )
            g10 += d * (
                B[0, 0] * G[2, 0] + B[0, 1] * G[3, 0] + B[1, 0] * G[2, 1] + B[1, 1] * G[3, 1]
            )
            g11 += d * (
                B[0, 0] * G[2, 2] + B[0, 1] * G[3, 2] + B[1, 0] * G[2, 3] + B[1, 1] * G[3, 3]
            )
            G = La[i2, i4]
            B = Bb[i3]
            l00 += d * (
                B[0, 0] * G[0, 0] + B[0, 1] * G[1, 0] + B[1, 0] * G[0, 1] + B[1, 1] * G[1, 1]
            )
            l01 += d * (
                B[0, 0] * G[0, 2] + B[0, 1] * G[1, 2] + B[1, 0] * G[0, 3] + B[1, 1] * G[1, 3]
            )
            l10 += d * (
                B[0, 0] * G[2, 0] + B[0, 1] * G[3, 0] + B[1, 0] * G[2, 1] + B[1, 1] * G[3, 1]
            )
            l11 += d * (
                B[0, 0] * G[2, 2] + B[0, 1] * G[3, 2] + B[1, 0] * G[2, 3] + B[1, 1] * G[3, 3]
            )
        lam_g[alpha, i1, 0, 0] = g00
        lam_g[alpha, i1, 0, 1] = g01
        lam_g[alpha, i1, 1, 0] = g10
        lam_g[alpha, i1, 1, 1] = g11
        lam_l[alpha, i1, 0, 0] = l00
        lam_l[alpha, i1, 0, 1] = l01
        lam_l[alpha, i1, 1, 0] = l10
        lam_l[alpha, i1, 1, 1] = l11
    return lam_g, lam_l


def diss_lambdas(Gg, Gl, Bg, Bl, I2, I3, I4, offsets, D):
    return _diss_lambdas_impl(Gg, Gl, Bg, Bl, I2, I3, I4, offsets, D)


@njit(cache=True, parallel=True, fastmath=False)
def _heff_sums_impl(Gg, Gl, Bg, Bl, xm, sqrt_xm, tuples, inv_k):
    # The i3 sum for one (i1, i2, i4) is sum_i3 sm(i3) inv_k[d + i3] B[i3]
    # with sm = sqrt(x3[i3]) below the threshold c = min(x1, x2, x4) and
    # sm = sqrt(c) above it (x3 is monotone in i3).  Splitting at the
    # threshold turns the inner loop into two table lookups:
    #     Q[d][j] = sum_{i3 <  j} sqrt(x3[i3]) inv_k[d + i3] B[i3]
    #     S[d][j] = sum_{i3 >= j} inv_k[d + i3] B[i3],
    # indexed by the shift d = i1 - i2 - i4 (offset by 2(n-1)), which is what
    # makes the tables shell-independent.  d spans [0, 3(n-1)] and the inv_k
    # lookups d + i3 stay within its 4(n-1)+1 entries.
    nsp = Gg.shape[0]
    n = Gg.shape[1]
    nd = 3 * (n - 1) + 1
    Qg = np.zeros((nsp, nd, n + 1, 2, 2), dtype=np.complex128)
    Sg = np.zeros((nsp, nd, n + 1, 2, 2), dtype=np.complex128)
    Ql = np.zeros((nsp, nd, n + 1, 2, 2), dtype=np.complex128)
    Sl = np.zeros((nsp, nd, n + 1, 2, 2), dtype=np.complex128)
    for task in prange(nsp * nd):
        alpha = task // nd
        d = task % nd
        s3 = tuples[alpha, 2]
        sx3row = sqrt_xm[s3]
        Ba = Bg[alpha]
        Bb = Bl[alpha]
        for j in range(n):
            kern = inv_k[d + j]
            skern = sx3row[j] * kern
            for k in range(2):
                for l in range(2):
                    Qg[alpha, d, j + 1, k, l] = Qg[alpha, d, j, k, l] + skern * Ba[j, k, l]
                    Ql[alpha, d, j + 1, k, l] = Ql[alpha, d, j, k, l] + skern * Bb[j, k, l]
        for j in range(n - 1, -1, -1):
            kern = inv_k[d + j]
            for k in range(2):
                for l in range(2):
                    Sg[alpha, d, j, k, l] = Sg[alpha, d, j + 1, k, l] + kern * Ba[j, k, l]
                    Sl[alpha, d, j, k, l] = Sl[alpha, d, j + 1, k, l] + kern * Bb[j, k, l]

    H = np.zeros((nsp, n, 2, 2), dtype=np.complex128)
    for task in prange(nsp * n):
        alpha = task // n
        i1 = task % n
        s1 = tuples[alpha, 0]
        s2 = tuples[alpha, 1]
        s3 = tuples[alpha, 2]
        s4 = tuples[alpha, 3]
        x1 = xm[s1, i1]
        sx1 = sqrt_xm[s1, i1]
        Ga = Gg[alpha]
        La = Gl[alpha]
        x3row = xm[s3]
        h00 = 0.0 + 0.0j
        h01 = 0.0 + 0.0j
        h10 = 0.0 + 0.0j
        h11 = 0.0 + 0.0j
        for i2 in range(n):
            x2 = xm[s2, i2]
            sx2 = sqrt_xm[s2, i2]
            if x1 <= 0.0 and x2 <= 0.0:
                continue
            for i4 in range(n):
                x4 = xm[s4, i4]
                if x2 < x4:
                    c = x2
                    sc = sx2
                else:
                    c = x4
                    sc = sqrt_xm[s4, i4]
                d = i1 - i2 - i4 + 2 * (n - 1)
                if x1 > 0.0:
                    if x1 < c:
                        c = x1
                        sc = sx1
                    # first index with x3 >= c (x3row is ascending)
                    lo = 0
                    hi = n
                    while lo < hi:
                        mid = (lo + hi) // 2
                        if x3row[mid] < c:
                            lo = mid + 1
                        else:
                            hi = mid
                    bg00 = Qg[alpha, d, lo, 0, 0] + sc * Sg[alpha, d, lo, 0, 0]
                    bg01 = Qg[alpha, d, lo, 0, 1] + sc * Sg[alpha, d, lo, 0, 1]
                    bg10 = Qg[alpha, d, lo, 1, 0] + sc * Sg[alpha, d, lo, 1, 0]
                    bg11 = Qg[alpha, d, lo, 1, 1] + sc * Sg[alpha, d, lo, 1, 1]
                    bl00 = Ql[alpha, d, lo, 0, 0] + sc * Sl[alpha, d, lo, 0, 0]
                    bl01 = Ql[alpha, d, lo, 0, 1] + sc * Sl[alpha, d, lo, 0, 1]
                    bl10 = Ql[alpha, d, lo, 1, 0] + sc * Sl[alpha, d, lo, 1, 0]
                    bl11 = Ql[alpha, d, lo, 1, 1] + sc * Sl[alpha, d, lo, 1, 1]
                else:
                    # eps1 = 0 limit: unit weight when every other energy is
                    # positive, zero otherwise (skip the i3 = 0 node)
                    if c <= 0.0:
                        continue
                    bg00 = Sg[alpha, d, 1, 0, 0]
                    bg01 = Sg[alpha, d, 1, 0, 1]
                    bg10 = Sg[alpha, d, 1, 1, 0]
                    bg11 = Sg[alpha, d, 1, 1, 1]
                    bl00 = Sl[alpha, d, 1, 0, 0]
                    bl01 = Sl[alpha, d, 1, 0, 1]
                    bl10 = Sl[alpha, d, 1, 1, 0]
                    bl11 = Sl[alpha, d, 1, 1, 1]
                G = Ga[i2, i4]
                h00 += bg00 * G[0, 0] + bg01 * G[1, 0] + bg10 * G[0, 1] + bg11 * G[1, 1]
                h01 += bg00 * G[0, 2] + bg01 * G[1, 2] + bg10 * G[0, 3] + bg11 * G[1, 3]
                h10 += bg00 * G[2, 0] + bg01 * G[3, 0] + bg10 * G[2, 1] + bg11 * G[3, 1]
                h11 += bg00 * G[2, 2] + bg01 * G[3, 2] + bg10 * G[2, 3] + bg11 * G[3, 3]
                G = La[i2, i4]
                h00 += bl00 * G[0, 0] + bl01 * G[1, 0] + bl10 * G[0, 1] + bl11 * G[1, 1]
                h01 += bl00 * G[0, 2] + bl01 * G[1, 2] + bl10 * G[0, 3] + bl11 * G[1, 3]
                h10 += bl00 * G[2, 0] + bl01 * G[3, 0] + bl10 * G[2, 1] + bl11 * G[3, 1]
                h11 += bl00 * G[2, 2] + bl01 * G[3, 2] + bl10 * G[2, 3] + bl11 * G[3, 3]
        scale = 1.0 if x1 <= 0.0 else 1.0 / sx1
        H[alpha, i1, 0, 0] = scale * h00
        H[alpha, i1, 0, 1] = scale * h01
        H[alpha, i1, 1, 0] = scale * h10
        H[alpha, i1, 1, 1] = scale * h11
    return H


def heff_sums(Gg, Gl, Bg, Bl, xm, sqrt_xm, tuples, inv_k):
    return _heff_sums_impl(Gg, Gl, Bg, Bl, xm, sqrt_xm, tuples, inv_k)
