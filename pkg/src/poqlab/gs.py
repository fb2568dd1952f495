"""Guruswami-Sudan list decoding kernels for (generalized) Reed-Solomon codes.

Interpolation solves the multiplicity-s linear system by Gaussian elimination;
factorization uses Roth-Ruckenstein.  The hot loops are compiled with numba and
operate on integer-encoded field elements through log/antilog tables.
"""
from __future__ import annotations

import functools
import math

import numpy as np
from numba import njit
from numba.typed import List

from .gf_core import GF

MAX_CONSTRAINTS = 2500


@njit(cache=True)
def _fmul(a, b, exp, log):
    if a == 0 or b == 0:
        return 0
    return exp[log[a] + log[b]]


@njit(cache=True)
def _fadd(a, b, p, r, addt):
    if p == 2:
        return a ^ b
    if r == 1:
        t = a + b
        return t - p if t >= p else t
    if addt.shape[0] > 1:
        return addt[a, b]
    res = 0
    place = 1
    for _ in range(r):
        res += ((a % p + b % p) % p) * place
        a //= p
        b //= p
        place *= p
    return res


@njit(cache=True)
def _finv(a, exp, log, q):
    return exp[(q - 1 - log[a]) % (q - 1)]


@njit(cache=True)
def _interpolate(xs, ys, s, mono_a, mono_b, binom, p, r, q, exp, log, negt, addt, multab):
    """Nonzero Q with multiplicity >= s at every (xs[j], ys[j]).

    Returns the coefficient of each monomial X^mono_a Y^mono_b.  The system
    is solved by forward elimination and back substitution with one free
    unknown set to 1.
    """
    npts = xs.shape[0]
    nmono = mono_a.shape[0]
    ncons = npts * s * (s + 1) // 2
    maxa = 0
    maxb = 0
    for c in range(nmono):
        maxa = max(maxa, mono_a[c])
        maxb = max(maxb, mono_b[c])
    mat = np.zeros((ncons, nmono), multab.dtype)
    xp = np.zeros(maxa + 1, np.int64)
    yp = np.zeros(maxb + 1, np.int64)
    row = 0
    for j in range(npts):
        xp[0] = 1
        for e in range(1, maxa + 1):
            xp[e] = _fmul(xp[e - 1], xs[j], exp, log)
        yp[0] = 1
        for e in range(1, maxb + 1):
            yp[e] = _fmul(yp[e - 1], ys[j], exp, log)
        for u in range(s):
            for w in range(s - u):
                for c in range(nmono):
                    a = mono_a[c]
                    b = mono_b[c]
                    if a >= u and b >= w:
                        coef = binom[a, u] * binom[b, w] % p
                        if coef != 0:
                            mat[row, c] = _fmul(coef, _fmul(xp[a - u], yp[b - w], exp, log), exp, log)
                row += 1
    use_tab = multab.shape[0] > 1
    binary = p == 2
    pivcol = np.full(ncons, -1, np.int64)
    rank = 0
    for c in range(nmono):
        if rank == ncons:
            break
        piv = -1
        for i in range(rank, ncons):
            if mat[i, c] != 0:
                piv = i
                break
        if piv < 0:
            continue
        if piv != rank:
            for cc in range(c, nmono):
                t = mat[rank, cc]
                mat[rank, cc] = mat[piv, cc]
                mat[piv, cc] = t
        iv = _finv(mat[rank, c], exp, log, q)
        for cc in range(c, nmono):
            mat[rank, cc] = _fmul(mat[rank, cc], iv, exp, log)
        for i in range(rank + 1, ncons):
            f = mat[i, c]
            if f == 0:
                continue
            nf = negt[f]
            if use_tab and binary:
                for cc in range(c, nmono):
                    mat[i, cc] ^= multab[nf, mat[rank, cc]]
            elif use_tab:
                for cc in range(c, nmono):
                    mat[i, cc] = _fadd(mat[i, cc], multab[nf, mat[rank, cc]], p, r, addt)
            else:
                for cc in range(c, nmono):
                    v = mat[rank, cc]
                    if v != 0:
                        mat[i, cc] = _fadd(mat[i, cc], _fmul(nf, v, exp, log), p, r, addt)
        pivcol[rank] = c
        rank += 1
    is_piv = np.zeros(nmono, np.bool_)
    for i in range(rank):
        is_piv[pivcol[i]] = True
    free = -1
    for c in range(nmono):
        if not is_piv[c]:
            free = c
            break
    sol = np.zeros(nmono, np.int64)
    if free < 0:
        return sol
    sol[free] = 1
    for i in range(rank - 1, -1, -1):
        c = pivcol[i]
        acc = 0
        for cc in range(c + 1, nmono):
            if mat[i, cc] != 0 and sol[cc] != 0:
                acc = _fadd(acc, _fmul(mat[i, cc], sol[cc], exp, log), p, r, addt)
        sol[c] = negt[acc]
    return sol


@njit(cache=True)
def _strip_x(qmat):
    """Divide by the largest power of X dividing the bivariate polynomial."""
    nb, na = qmat.shape
    shift = -1
    for a in range(na):
        for b in range(nb):
            if qmat[b, a] != 0:
                shift = a
                break
        if shift >= 0:
            break
    out = np.zeros_like(qmat)
    if shift < 0:
        return out
    out[:, : na - shift] = qmat[:, shift:]
    return out


@njit(cache=True)
def _substitute(qmat, c, binom, p, r, exp, log, addt):
    """Q(X, X*Y + c)."""
    nb, na = qmat.shape
    out = np.zeros_like(qmat)
    cp = np.zeros(nb, np.int64)
    cp[0] = 1
    for e in range(1, nb):
        cp[e] = _fmul(cp[e - 1], c, exp, log)
    for b in range(nb):
        for a in range(na):
            v = qmat[b, a]
            if v == 0:
                continue
            for w in range(b + 1):
                coef = binom[b, w] % p
                if coef == 0:
                    continue
                term = _fmul(_fmul(v, coef, exp, log), cp[b - w], exp, log)
                if term != 0:
                    if a + w >= na:
                        raise ValueError("substitution overflow")
                    out[w, a + w] = _fadd(out[w, a + w], term, p, r, addt)
    return out


@njit(cache=True)
def _rr_roots(qmat, deg, binom, p, r, q, exp, log, addt):
    """Candidate f of degree <= deg with (Y - f(X)) | Q, Roth-Ruckenstein style.

    Returns a superset of the true roots; callers verify each candidate.
    """
    nb = qmat.shape[0]
    found = List()
    stack_q = List()
    stack_i = List()
    stack_f = List()
    stack_q.append(_strip_x(qmat))
    stack_i.append(0)
    stack_f.append(np.zeros(deg + 1, np.int64))
    while len(stack_q) > 0:
        cur = stack_q.pop()
        i = stack_i.pop()
        f = stack_f.pop()
        for g in range(q):
            val = 0
            gp = 1
            for b in range(nb):
                coef = cur[b, 0]
                if coef != 0:
                    val = _fadd(val, _fmul(coef, gp, exp, log), p, r, addt)
                gp = _fmul(gp, g, exp, log)
            if val != 0:
                continue
            f2 = f.copy()
            f2[i] = g
            if i == deg:
                found.append(f2)
                continue
            nxt = _strip_x(_substitute(cur, g, binom, p, r, exp, log, addt))
            zero_y = True
            for a in range(nxt.shape[1]):
                if nxt[0, a] != 0:
                    zero_y = False
                    break
            if zero_y:
                found.append(f2)
            stack_q.append(nxt)
            stack_i.append(i + 1)
            stack_f.append(f2)
    return found


@functools.lru_cache(maxsize=64)
def _binom_mod(n: int, p: int) -> np.ndarray:
    b = np.zeros((n + 1, n + 1), dtype=np.int64)
    b[:, 0] = 1
    for i in range(1, n + 1):
        b[i, 1:] = (b[i - 1, :-1] + b[i - 1, 1:]) % p
    b.setflags(write=False)
    return b


@functools.lru_cache(maxsize=256)
def _monomials(d: int, D: int, count: int) -> tuple[np.ndarray, np.ndarray]:
    """The `count` monomials of least (1,d)-weighted degree, ties by Y-degree."""
    monos = sorted((a + d * b, b, a) for b in range(D // d + 1) for a in range(D - d * b + 1))[:count]
    mono_a = np.array([m[2] for m in monos], dtype=np.int64)
    mono_b = np.array([m[1] for m in monos], dtype=np.int64)
    mono_a.setflags(write=False)
    mono_b.setflags(write=False)
    return mono_a, mono_b


def _monomial_count(D: int, d: int) -> int:
    return sum(D - d * b + 1 for b in range(D // d + 1))


def _min_degree(cons: int, d: int) -> int:
    D = max(0, math.isqrt(2 * d * cons) - 2 * d - 1)
    while D > 0 and _monomial_count(D - 1, d) > cons:
        D -= 1
    while _monomial_count(D, d) <= cons:
        D += 1
    return D


@functools.lru_cache(maxsize=1024)
def gs_parameters(N: int, d: int, radius: int, max_constraints: int = MAX_CONSTRAINTS) -> tuple[int, int] | None:
    """Smallest multiplicity s (and weighted degree D) that decodes `radius` errors.

    Requires t*s > D where t = N - radius agreements and D is the least
    (1,d)-weighted degree with more monomials than the N*s(s+1)/2 constraints.
    """
    if d < 1:
        return None
    t = N - radius
    s = 1
    while N * s * (s + 1) // 2 <= max_constraints:
        D = _min_degree(N * s * (s + 1) // 2, d)
        if t * s > D:
            return s, D
        s += 1
    return None


def within_bound(N: int, d: int, radius: int) -> bool:
    """radius < N - sqrt(d N), tested exactly."""
    t = N - radius
    return t > 0 and t * t > d * N


MUL_TABLE_LIMIT = 1 << 10


@functools.lru_cache(maxsize=None)
def _kernel_tables(gf: GF):
    if gf.exp is None:
        raise NotImplementedError(f"list decoding needs log tables; q={gf.q} too large")
    addt = gf.add_tab if gf.add_tab is not None else np.zeros((1, 1), dtype=np.int64)
    if gf.q <= MUL_TABLE_LIMIT:
        elems = np.arange(gf.q)
        dtype = np.uint8 if gf.q <= 256 else np.uint16
        multab = gf.mul(elems[:, None], elems[None, :]).astype(dtype)
    else:
        multab = np.zeros((1, 1), dtype=np.uint32)
    arrs = [np.array(a) for a in (gf.exp, gf.log, gf.neg_tab, addt)]
    return (gf.p, gf.r, gf.q, *arrs), multab


def field_kernel_args(gf: GF):
    return _kernel_tables(gf)[0]


def gs_candidates(gf: GF, xs: np.ndarray, ys: np.ndarray, d: int, radius: int, s: int | None = None) -> np.ndarray:
    """Candidate message polynomials (rows of d+1 coefficients) for a plain RS code.

    Every polynomial of degree <= d agreeing with (xs, ys) on at least
    N - radius points is among the rows.
    """
    N = len(xs)
    if not within_bound(N, d, radius):
        raise ValueError(f"radius {radius} not below N - sqrt(dN) for N={N}, d={d}")
    if d == 0:
        vals = np.unique(np.asarray(ys, dtype=np.int64))
        return vals[:, None]
    if s is None:
        params = gs_parameters(N, d, radius)
        if params is None:
            raise ValueError("no multiplicity within limits reaches this radius")
        s, D = params
    else:
        D = _min_degree(N * s * (s + 1) // 2, d)
        if (N - radius) * s <= D:
            raise ValueError(f"multiplicity {s} too small for radius {radius}")
    cons = N * s * (s + 1) // 2
    mono_a, mono_b = _monomials(d, D, cons + 1)
    (p, r, q, exp, log, negt, addt), multab = _kernel_tables(gf)
    nb = int(mono_b.max()) + 1
    width = int(mono_a.max()) + 1 + nb * (d + 2)
    binom = _binom_mod(max(width, nb) + 1, p)
    coef = _interpolate(np.asarray(xs, np.int64), np.asarray(ys, np.int64), s, mono_a, mono_b,
                        binom, p, r, q, exp, log, negt, addt, multab)
    if not coef.any():
        raise AssertionError("interpolation returned the zero polynomial")
    qmat = np.zeros((nb, width), dtype=np.int64)
    qmat[mono_b, mono_a] = coef
    found = _rr_roots(qmat, d, binom, p, r, q, exp, log, addt)
    if len(found) == 0:
        return np.zeros((0, d + 1), dtype=np.int64)
    return np.unique(np.array(list(found), dtype=np.int64), axis=0)
