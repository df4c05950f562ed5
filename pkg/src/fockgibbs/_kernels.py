"""Hot loops for Fock-space assembly and density-matrix contraction.

Each kernel is a plain loop over occupation vectors. At import time the
loops are compiled with numba unless FOCKGIBBS_DISABLE_NUMBA=1 is set (or
numba is missing), in which case the very same functions run interpreted on
numpy arrays. ``benchmarks/bench_kernels.py`` times one path against the
other; the ``*_py`` names always refer to the interpreted versions.

Basis states are addressed by integer keys (the occupation vector read as
base-radix digits); lookups go through a sorted key table via
np.searchsorted so the loops stay dictionary-free.

Sign convention (fermions): creation operators act in increasing mode
order, so moving a particle from mode j to mode i picks up the parity of
the occupations strictly below j and below i (on the intermediate vector).
"""

import os

import numpy as np

DISABLE_ENV = "FOCKGIBBS_DISABLE_NUMBA"


def _numba_enabled():
    flag = os.environ.get(DISABLE_ENV, "").strip().lower()
    if flag in ("1", "true", "yes", "on"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ACTIVE = _numba_enabled()


def backend():
    """Dispatch path selected at import time: 'numba' or 'python'."""
    return "numba" if NUMBA_ACTIVE else "python"


def _compiled(fn):
    if not NUMBA_ACTIVE:
        return fn
    from numba import njit

    return njit(cache=True)(fn)


def onebody_matrix_py(occ, keys, pows, sorted_keys, order, amat, fermionic):
    # Lift of an m x m one-body matrix A: out[t, s] = <t| sum_ij A_ij adag_i a_j |s>.
    dim, m = occ.shape
    out = np.zeros((dim, dim), np.complex128)
    for s in range(dim):
        for j in range(m):
            nj = occ[s, j]
            if nj == 0:
                continue
            out[s, s] += amat[j, j] * nj
            parity_j = 0
            if fermionic:
                for k in range(j):
                    parity_j += occ[s, k]
            for i in range(m):
                if i == j or amat[i, j] == 0:
                    continue
                if fermionic:
                    if occ[s, i] != 0:
                        continue
                    parity_i = 0
                    for k in range(i):
                        parity_i += occ[s, k]
                    if j < i:
                        parity_i -= 1  # mode j already emptied
                    amp = 1.0 if (parity_i + parity_j) % 2 == 0 else -1.0
                else:
                    amp = np.sqrt(nj * (occ[s, i] + 1.0))
                key = keys[s] - pows[j] + pows[i]
                t = order[np.searchsorted(sorted_keys, key)]
                out[t, s] += amat[i, j] * amp
    return out


def pair_diagonal_py(occ, pairw):
    # Diagonal of a pair multiplication operator: for state nu the value is
    #   sum_{i<j} pairw[i,j] nu_i nu_j + sum_i pairw[i,i] nu_i (nu_i - 1) / 2.
    # Only the upper triangle (and diagonal) of pairw is read.
    dim, m = occ.shape
    out = np.zeros(dim, np.float64)
    for s in range(dim):
        acc = 0.0
        for i in range(m):
            ni = occ[s, i]
            if ni == 0:
                continue
            if ni > 1:
                acc += 0.5 * pairw[i, i] * ni * (ni - 1)
            for j in range(i + 1, m):
                nj = occ[s, j]
                if nj != 0:
                    acc += pairw[i, j] * ni * nj
        out[s] = acc
    return out


def rdm1_py(occ, keys, pows, sorted_keys, order, rho, fermionic):
    # One-particle density matrix: out[i, j] = Tr(adag_j a_i rho).
    dim, m = occ.shape
    out = np.zeros((m, m), np.complex128)
    for u in range(dim):
        for i in range(m):
            ni = occ[u, i]
            if ni == 0:
                continue
            out[i, i] += ni * rho[u, u]
            parity_i = 0
            if fermionic:
                for k in range(i):
                    parity_i += occ[u, k]
            for j in range(m):
                if j == i:
                    continue
                if fermionic:
                    if occ[u, j] != 0:
                        continue
                    parity_j = 0
                    for k in range(j):
                        parity_j += occ[u, k]
                    if i < j:
                        parity_j -= 1
                    amp = 1.0 if (parity_i + parity_j) % 2 == 0 else -1.0
                else:
                    amp = np.sqrt(ni * (occ[u, j] + 1.0))
                key = keys[u] - pows[i] + pows[j]
                t = order[np.searchsorted(sorted_keys, key)]
                out[i, j] += amp * rho[u, t]
    return out


def rdm2_py(occ, keys, pows, sorted_keys, order, rho, pair_index, n_pairs, fermionic):
    # Two-particle density matrix on the symmetrized/antisymmetrized pair basis:
    #   out[P, Q] = 0.5 g_P g_Q Tr(adag_k adag_l a_j a_i rho),
    # with P = (i <= j), Q = (k <= l) and g = sqrt(2) for distinct indices, 1
    # for a doubly occupied bosonic pair.
    dim, m = occ.shape
    out = np.zeros((n_pairs, n_pairs), np.complex128)
    work = np.zeros(m, np.int64)
    sqrt2 = np.sqrt(2.0)
    for u in range(dim):
        for i in range(m):
            if occ[u, i] == 0:
                continue
            for j in range(i, m):
                if fermionic and j == i:
                    continue
                for k in range(m):
                    work[k] = occ[u, k]
                amp = 1.0
                ni = work[i]
                if fermionic:
                    p = 0
                    for k in range(i):
                        p += work[k]
                    if p % 2 == 1:
                        amp = -amp
                else:
                    amp *= np.sqrt(float(ni))
                work[i] = ni - 1
                nj = work[j]
                if nj == 0:
                    continue
                if fermionic:
                    p = 0
                    for k in range(j):
                        p += work[k]
                    if p % 2 == 1:
                        amp = -amp
                else:
                    amp *= np.sqrt(float(nj))
                work[j] = nj - 1
                key2 = keys[u] - pows[i] - pows[j]
                row = pair_index[i, j]
                g_row = 1.0 if i == j else sqrt2
                for k in range(m):
                    for l in range(k, m):
                        if fermionic and (l == k or work[l] != 0 or work[k] != 0):
                            continue
                        amp2 = amp
                        nl = work[l]
                        if fermionic:
                            p = 0
                            for q in range(l):
                                p += work[q]
                            if p % 2 == 1:
                                amp2 = -amp2
                        else:
                            amp2 *= np.sqrt(nl + 1.0)
                        work[l] = nl + 1
                        if fermionic:
                            p = 0
                            for q in range(k):
                                p += work[q]
                            if p % 2 == 1:
                                amp2 = -amp2
                        else:
                            amp2 *= np.sqrt(work[k] + 1.0)
                        work[l] = nl
                        key = key2 + pows[k] + pows[l]
                        t = order[np.searchsorted(sorted_keys, key)]
                        col = pair_index[k, l]
                        g_col = 1.0 if k == l else sqrt2
                        out[row, col] += 0.5 * g_row * g_col * amp2 * rho[u, t]
    return out


onebody_matrix = _compiled(onebody_matrix_py)
pair_diagonal = _compiled(pair_diagonal_py)
rdm1 = _compiled(rdm1_py)
rdm2 = _compiled(rdm2_py)
