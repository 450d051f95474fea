"""Numba kernels for the per-draw hot path.

Everything here operates on pre-sorted float64 arrays and is deterministic:
no RNG, no threading, fixed summation order for a given input.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# Fast Gauss transform tuning. Boxes are one kernel width h wide, sources and
# targets interact within _FGT_CUTOFF box widths, expansions carry _FGT_TERMS
# terms. Validated to <=1e-10 relative error against brute force in tests.
_FGT_TERMS = 18
_FGT_CUTOFF = 8.0
# rough per-unit costs used to choose between the expansion path and direct
# windowed summation: one exp() weighs about eight multiply-adds
_EXP_COST = 8.0


@njit(cache=True)
def _occupied_boxes(u):
    """Box index (floor of u) runs for a sorted array; returns (ids, starts, count)."""
    n = u.size
    ids = np.empty(n, dtype=np.int64)
    starts = np.empty(n + 1, dtype=np.int64)
    nb = 0
    prev = np.int64(0)
    for j in range(n):
        b = np.int64(np.floor(u[j]))
        if nb == 0 or b != prev:
            ids[nb] = b
            starts[nb] = j
            nb += 1
            prev = b
    starts[nb] = n
    return ids, starts, nb


@njit(cache=True, fastmath=True)
def _hermite_taylor_sums(su, tu, ids, starts, nb):
    """Sum over targets of sum_j exp(-(tu_i - su_j)^2), via Hermite expansions
    per source box translated to a Taylor expansion per target box."""
    p = _FGT_TERMS
    # source moments A[b, k] = sum_j d^k / k!, d = su_j - c_b, |d| <= 0.5
    A = np.zeros((nb, p))
    centers = np.empty(nb)
    for b in range(nb):
        c = ids[b] + 0.5
        centers[b] = c
        for j in range(starts[b], starts[b + 1]):
            d = su[j] - c
            term = 1.0
            A[b, 0] += term
            for k in range(1, p):
                term *= d / k
                A[b, k] += term

    t_ids, t_starts, t_nb = _occupied_boxes(tu)
    herm = np.empty(2 * p)
    loc = np.empty(p)
    total = 0.0
    b_lo = 0
    for tb in range(t_nb):
        ct = t_ids[tb] + 0.5
        while b_lo < nb and centers[b_lo] < ct - _FGT_CUTOFF:
            b_lo += 1
        for k in range(p):
            loc[k] = 0.0
        b = b_lo
        while b < nb and centers[b] <= ct + _FGT_CUTOFF:
            x0 = ct - centers[b]
            # Hermite functions h_j(x0) up to order 2p-1
            h0 = np.exp(-x0 * x0)
            herm[0] = h0
            herm[1] = 2.0 * x0 * h0
            for j in range(2, 2 * p):
                herm[j] = 2.0 * x0 * herm[j - 1] - 2.0 * (j - 1) * herm[j - 2]
            # L_m = (-1)^m / m! * sum_k A_k h_{k+m}(x0)
            fact = 1.0
            sign = 1.0
            for m in range(p):
                if m > 0:
                    fact *= m
                    sign = -sign
                s = 0.0
                for k in range(p):
                    s += A[b, k] * herm[k + m]
                loc[m] += sign * s / fact
            b += 1
        # evaluate the local polynomial at each target in this box (Horner)
        for i in range(t_starts[tb], t_starts[tb + 1]):
            d = tu[i] - ct
            acc = loc[p - 1]
            for m in range(p - 2, -1, -1):
                acc = acc * d + loc[m]
            total += acc
    return total


@njit(cache=True, fastmath=True)
def _windowed_direct_sum(su, tu):
    """Brute-force sum with a sliding cutoff window (narrow-kernel regime)."""
    m = su.size
    total = 0.0
    lo = 0
    hi = 0
    for i in range(tu.size):
        t = tu[i]
        while lo < m and su[lo] < t - _FGT_CUTOFF:
            lo += 1
        if hi < lo:
            hi = lo
        while hi < m and su[hi] <= t + _FGT_CUTOFF:
            hi += 1
        acc = 0.0
        for j in range(lo, hi):
            d = t - su[j]
            acc += np.exp(-d * d)
        total += acc
    return total


@njit(cache=True)
def _direct_pairs_estimate(su, tu):
    """Number of (source, target) pairs within the cutoff window."""
    m = su.size
    lo = 0
    hi = 0
    total = 0
    for i in range(tu.size):
        t = tu[i]
        while lo < m and su[lo] < t - _FGT_CUTOFF:
            lo += 1
        if hi < lo:
            hi = lo
        while hi < m and su[hi] <= t + _FGT_CUTOFF:
            hi += 1
        total += hi - lo
    return total


@njit(cache=True)
def _box_pairs_estimate(centers, nb, t_centers, t_nb):
    """Number of (source box, target box) interactions within the cutoff."""
    lo = 0
    total = 0
    for i in range(t_nb):
        c = t_centers[i]
        while lo < nb and centers[lo] < c - _FGT_CUTOFF:
            lo += 1
        b = lo
        while b < nb and centers[b] <= c + _FGT_CUTOFF:
            total += 1
            b += 1
    return total


@njit(cache=True)
def _gauss_one(su, tu, ids, starts, nb):
    """Pick the cheaper of the expansion path and direct windowed summation."""
    p = _FGT_TERMS
    t_ids, t_starts, t_nb = _occupied_boxes(tu)
    centers = np.empty(nb)
    for b in range(nb):
        centers[b] = ids[b] + 0.5
    t_centers = np.empty(t_nb)
    for b in range(t_nb):
        t_centers[b] = t_ids[b] + 0.5
    pairs = _box_pairs_estimate(centers, nb, t_centers, t_nb)
    cost_fgt = (su.size + tu.size) * p + pairs * (p * p + 6.0 * p + _EXP_COST)
    cost_direct = _direct_pairs_estimate(su, tu) * _EXP_COST
    if cost_fgt <= cost_direct:
        return _hermite_taylor_sums(su, tu, ids, starts, nb)
    return _windowed_direct_sum(su, tu)


@njit(cache=True)
def gauss_sum(src, tgt, h):
    """sum_i sum_j exp(-((tgt_i - src_j) / h)^2) for sorted src and tgt."""
    if src.size == 0 or tgt.size == 0:
        return 0.0
    base = src[0]
    su = (src - base) / h
    tu = (tgt - base) / h
    ids, starts, nb = _occupied_boxes(su)
    return _gauss_one(su, tu, ids, starts, nb)


@njit(cache=True)
def gauss_pair_sums(y, z, h):
    """(sum_ij g(z_i,z_j), sum_ij g(y_i,z_j)) with the Gaussian kernel
    exp(-(d/h)^2), sources z shared between both sums; y, z sorted."""
    base = z[0]
    su = (z - base) / h
    ids, starts, nb = _occupied_boxes(su)
    s_zz = _gauss_one(su, su, ids, starts, nb)
    s_yz = _gauss_one(su, (y - base) / h, ids, starts, nb)
    return s_zz, s_yz


@njit(cache=True)
def cvm_rank_sums(y, z):
    """(sum_i (r_i - i)^2, sum_j (s_j - j)^2) over pooled ranks of two sorted
    samples, ties resolved by average ranks."""
    n = y.size
    m = z.size
    i = 0
    j = 0
    pos = 0
    sy = 0.0
    sz = 0.0
    while i < n or j < m:
        if j >= m or (i < n and y[i] <= z[j]):
            v = y[i]
        else:
            v = z[j]
        ty = 0
        tz = 0
        while i < n and y[i] == v:
            ty += 1
            i += 1
        while j < m and z[j] == v:
            tz += 1
            j += 1
        avg = pos + (ty + tz + 1) / 2.0
        for a in range(ty):
            d = avg - (i - ty + a + 1)
            sy += d * d
        for a in range(tz):
            d = avg - (j - tz + a + 1)
            sz += d * d
        pos += ty + tz
    return sy, sz


@njit(cache=True)
def wasserstein_cdf_area(a, b):
    """integral |F_a - F_b| dx for the ECDFs of two sorted samples (any sizes)."""
    n = a.size
    m = b.size
    inv_n = 1.0 / n
    inv_m = 1.0 / m
    i = 0
    j = 0
    fa = 0.0
    fb = 0.0
    prev = a[0] if a[0] <= b[0] else b[0]
    area = 0.0
    while i < n or j < m:
        if j >= m or (i < n and a[i] <= b[j]):
            v = a[i]
        else:
            v = b[j]
        area += abs(fa - fb) * (v - prev)
        prev = v
        while i < n and a[i] == v:
            fa += inv_n
            i += 1
        while j < m and b[j] == v:
            fb += inv_m
            j += 1
    return area


@njit(cache=True)
def cross_abs_sum(a, b):
    """sum_ij |a_i - b_j| for sorted arrays, via merged prefix sums."""
    n = a.size
    m = b.size
    s_all = 0.0
    for t in range(n):
        s_all += a[t]
    total = 0.0
    pref = 0.0
    i = 0
    for j in range(m):
        while i < n and a[i] <= b[j]:
            pref += a[i]
            i += 1
        # i entries of a lie at or below b_j and sum to pref
        total += i * b[j] - pref + (s_all - pref) - (n - i) * b[j]
    return total


@njit(cache=True)
def self_abs_sum(a):
    """sum_{i != j} |a_i - a_j| for a sorted array."""
    n = a.size
    total = 0.0
    for j in range(n):
        total += (2 * j - n + 1) * a[j]
    return 2.0 * total


@njit(cache=True)
def toad_walk(model, steps, u_ret, u_pick, p0, d0, out):
    """Simulate daytime refuge locations for independent toads.

    steps, u_ret, u_pick: (n_days-1, n_toads) arrays of stable steps and
    uniforms; out: (n_days, n_toads), filled in place. Row 0 is 0 (start).
    model 1: constant-probability return to a uniformly chosen previous site;
    model 2: constant-probability return to the site nearest the foraging
    endpoint; model 3: per-refuge return probability p0*exp(-d/d0) measured
    from the foraging endpoint, unique refuges only.
    """
    nd = out.shape[0]
    nt = out.shape[1]
    refs = np.empty(nd)
    pret = np.empty(nd)
    for t in range(nt):
        out[0, t] = 0.0
        n_ref = 1
        refs[0] = 0.0
        for d in range(1, nd):
            x = out[d - 1, t] + steps[d - 1, t]
            u = u_ret[d - 1, t]
            if model == 1:
                if u < p0:
                    idx = int(u_pick[d - 1, t] * d)
                    if idx >= d:
                        idx = d - 1
                    out[d, t] = out[idx, t]
                else:
                    out[d, t] = x
            elif model == 2:
                if u < p0:
                    best = 0
                    bd = abs(x - out[0, t])
                    for i in range(1, d):
                        di = abs(x - out[i, t])
                        if di < bd:
                            bd = di
                            best = i
                    out[d, t] = out[best, t]
                else:
                    out[d, t] = x
            else:
                pstay = 1.0
                psum = 0.0
                for i in range(n_ref):
                    pr = p0 * np.exp(-abs(x - refs[i]) / d0)
                    pret[i] = pr
                    pstay *= 1.0 - pr
                    psum += pr
                if u < pstay or psum == 0.0:
                    out[d, t] = x
                    refs[n_ref] = x
                    n_ref += 1
                else:
                    acc = pstay
                    chosen = n_ref - 1
                    scale = (1.0 - pstay) / psum
                    for i in range(n_ref):
                        acc += pret[i] * scale
                        if u < acc:
                            chosen = i
                            break
                    out[d, t] = refs[chosen]


def warmup():
    """Force JIT compilation of all kernels (call once before forking workers)."""
    a = np.array([0.0, 0.5, 1.0])
    b = np.array([0.25, 0.75, 2.0])
    gauss_sum(a, b, 1.0)
    gauss_pair_sums(a, b, 1.0)
    cvm_rank_sums(a, b)
    wasserstein_cdf_area(a, b)
    cross_abs_sum(a, b)
    self_abs_sum(a)
    out = np.zeros((3, 2))
    u = np.full((2, 2), 0.5)
    toad_walk(1, u, u, u, 0.5, 100.0, out)
    toad_walk(2, u, u, u, 0.5, 100.0, out)
    toad_walk(3, u, u, u, 0.5, 100.0, out)
