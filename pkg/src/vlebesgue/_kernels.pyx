# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: PV quadrature, maximal sweep, sharp maximal intervals.

Semantics match ``_fallback`` point for point; see the docstrings there.
"""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange, parallel
from libc.math cimport fabs, log, sqrt, pow, hypot
from libc.stdlib cimport malloc, free, qsort

cnp.import_array()

cdef enum:
    N_LEVELS = 64


cdef struct Pair:
    double v
    double w
    int idx


cdef int _asc(const void* a, const void* b) noexcept nogil:
    cdef Pair* x = <Pair*>a
    cdef Pair* y = <Pair*>b
    if x.v < y.v:
        return -1
    if x.v > y.v:
        return 1
    return x.idx - y.idx


cdef int _desc(const void* a, const void* b) noexcept nogil:
    cdef Pair* x = <Pair*>a
    cdef Pair* y = <Pair*>b
    if x.v > y.v:
        return -1
    if x.v < y.v:
        return 1
    return x.idx - y.idx


cdef void _pv_one(double x, Py_ssize_t t, const double[::1] cell_a,
                  const double[::1] cell_b, const double[::1] ref_x,
                  const double[::1] ref_w, const double[::1] bary,
                  const double[:, ::1] dmat, const double[:, ::1] vr,
                  const double[:, ::1] vi, double near,
                  double[:, ::1] out_r, double[:, ::1] out_i, double[::1] jump,
                  double* buf) noexcept nogil:
    cdef Py_ssize_t C = cell_a.shape[0]
    cdef Py_ssize_t k = ref_x.shape[0]
    cdef Py_ssize_t m = vr.shape[1]
    cdef double* acc_r = buf
    cdef double* acc_i = buf + m
    cdef double* p_r = buf + 2 * m
    cdef double* p_i = buf + 3 * m
    cdef double* j_r = buf + 4 * m
    cdef double* j_i = buf + 5 * m
    cdef double* lag = buf + 6 * m
    cdef Py_ssize_t c, j, mm, base, ii
    cdef int exact, same, hit_end = 0
    cdef double a, b, mid, hw, tn, d, kw, s, ksum, da, db, logt, fac, dr, di, src
    for mm in range(m):
        acc_r[mm] = 0.0
        acc_i[mm] = 0.0
        j_r[mm] = 0.0
        j_i[mm] = 0.0
    for c in range(C):
        a = cell_a[c]
        b = cell_b[c]
        mid = 0.5 * (a + b)
        hw = 0.5 * (b - a)
        tn = (x - mid) / hw
        base = c * k
        if fabs(tn) > near:
            for j in range(k):
                d = (mid + hw * ref_x[j]) - x
                kw = (hw * ref_w[j]) / d
                for mm in range(m):
                    acc_r[mm] += kw * vr[base + j, mm]
                    acc_i[mm] += kw * vi[base + j, mm]
            continue
        exact = -1
        s = 0.0
        for j in range(k):
            d = tn - ref_x[j]
            if d == 0:
                exact = <int>j
                break
            lag[j] = bary[j] / d
            s += lag[j]
        for j in range(k):
            if exact >= 0:
                lag[j] = 1.0 if j == exact else 0.0
            else:
                lag[j] = lag[j] / s
        for mm in range(m):
            p_r[mm] = 0.0
            p_i[mm] = 0.0
            for j in range(k):
                p_r[mm] += lag[j] * vr[base + j, mm]
                p_i[mm] += lag[j] * vi[base + j, mm]
        ksum = 0.0
        same = -1
        for j in range(k):
            src = mid + hw * ref_x[j]
            d = src - x
            if d == 0:
                same = <int>j
                continue
            kw = (hw * ref_w[j]) / d
            ksum += kw
            for mm in range(m):
                acc_r[mm] += kw * vr[base + j, mm]
                acc_i[mm] += kw * vi[base + j, mm]
        db = fabs(b - x)
        da = fabs(a - x)
        logt = 0.0
        if db != 0:
            logt += log(db)
        if da != 0:
            logt -= log(da)
        fac = logt - ksum
        for mm in range(m):
            acc_r[mm] += p_r[mm] * fac
            acc_i[mm] += p_i[mm] * fac
        if same >= 0:
            for mm in range(m):
                dr = 0.0
                di = 0.0
                for ii in range(k):
                    dr += dmat[same, ii] * vr[base + ii, mm]
                    di += dmat[same, ii] * vi[base + ii, mm]
                acc_r[mm] += (ref_w[same] * hw) * (dr / hw)
                acc_i[mm] += (ref_w[same] * hw) * (di / hw)
        if db == 0:
            hit_end = 1
            for mm in range(m):
                j_r[mm] += p_r[mm]
                j_i[mm] += p_i[mm]
        if da == 0:
            hit_end = 1
            for mm in range(m):
                j_r[mm] -= p_r[mm]
                j_i[mm] -= p_i[mm]
    s = 0.0
    for mm in range(m):
        out_r[t, mm] = acc_r[mm]
        out_i[t, mm] = acc_i[mm]
        if hit_end:
            d = hypot(j_r[mm], j_i[mm])
            if d > s:
                s = d
    jump[t] = s


def pv_apply(targets, cell_a, cell_b, ref_x, ref_w, bary, dmat, vals, double near,
             int nthreads=1):
    cdef const double[::1] tg = np.ascontiguousarray(targets, dtype=np.float64)
    cdef const double[::1] ca = np.ascontiguousarray(cell_a, dtype=np.float64)
    cdef const double[::1] cb = np.ascontiguousarray(cell_b, dtype=np.float64)
    cdef const double[::1] rx = np.ascontiguousarray(ref_x, dtype=np.float64)
    cdef const double[::1] rw = np.ascontiguousarray(ref_w, dtype=np.float64)
    cdef const double[::1] by = np.ascontiguousarray(bary, dtype=np.float64)
    cdef const double[:, ::1] dm = np.ascontiguousarray(dmat, dtype=np.float64)
    v = np.asarray(vals, dtype=np.complex128)
    if v.ndim != 2 or v.shape[0] != ca.shape[0] * rx.shape[0]:
        raise ValueError("vals must have shape (n_cells * order, m)")
    cdef const double[:, ::1] vr = np.ascontiguousarray(v.real)
    cdef const double[:, ::1] vi = np.ascontiguousarray(v.imag)
    cdef Py_ssize_t T = tg.shape[0]
    cdef Py_ssize_t m = vr.shape[1]
    cdef Py_ssize_t k = rx.shape[0]
    out_r = np.zeros((T, m))
    out_i = np.zeros((T, m))
    jump = np.zeros(T)
    cdef double[:, ::1] orr = out_r
    cdef double[:, ::1] oii = out_i
    cdef double[::1] jj = jump
    cdef Py_ssize_t t
    cdef double* buf
    cdef int nt = nthreads if nthreads > 0 else 1
    with nogil, parallel(num_threads=nt):
        buf = <double*>malloc((6 * m + k) * sizeof(double))
        for t in prange(T, schedule="static"):
            _pv_one(tg[t], t, ca, cb, rx, rw, by, dm, vr, vi, near, orr, oii, jj, buf)
        free(buf)
    return out_r + 1j * out_i, jump


def maximal_sweep(cum, nodes):
    cdef const double[::1] cu = np.ascontiguousarray(cum, dtype=np.float64)
    cdef const double[::1] nd = np.ascontiguousarray(nodes, dtype=np.float64)
    cdef Py_ssize_t C = nd.shape[0] - 1
    node_vals = np.zeros(C + 1)
    cell_vals = np.zeros(C)
    sm_arr = np.zeros(C)
    cdef double[::1] nv = node_vals
    cdef double[::1] cv = cell_vals
    cdef double[::1] sm = sm_arr
    cdef Py_ssize_t i, j, mm, jj
    cdef double best, avg
    with nogil:
        for i in range(C):
            best = -1.0
            for j in range(C - 1, i - 1, -1):
                avg = (cu[j + 1] - cu[i]) / (nd[j + 1] - nd[i])
                if avg > best:
                    best = avg
                sm[j] = best
            for j in range(i, C):
                if sm[j] > cv[j]:
                    cv[j] = sm[j]
            for mm in range(i, C + 1):
                jj = mm - 1 if mm - 1 > i else i
                if sm[jj] > nv[mm]:
                    nv[mm] = sm[jj]
    return node_vals, cell_vals


cdef inline void _insert(Pair* arr, Py_ssize_t n, double v, double w, int idx) noexcept nogil:
    # stable insertion: equal keys keep index order
    cdef Py_ssize_t p = n
    while p > 0 and arr[p - 1].v > v:
        arr[p] = arr[p - 1]
        p -= 1
    arr[p].v = v
    arr[p].w = w
    arr[p].idx = idx


cdef void _sharp_row(Py_ssize_t i, Py_ssize_t C, Py_ssize_t k, const double[::1] re,
                     const double[::1] im, const double[::1] w, double delta,
                     double lam, double[:, ::1] fd, double[:, ::1] ml, Pair* sr,
                     Pair* si, Pair* tmp, double* cw, double* cands) noexcept nogil:
    cdef Py_ssize_t lo = i * k
    cdef Py_ssize_t n = 0
    cdef Py_ssize_t j, s, q, pos, a, b, nc = 2 * N_LEVELS + 1
    cdef Py_ssize_t n_im = 0
    cdef double W, acc, target, ci, c, best_f, best_m, val, t, da, db
    for j in range(i, C):
        for s in range(n, n + k):
            _insert(sr, s, re[lo + s], w[lo + s], <int>s)
            _insert(si, s, im[lo + s], w[lo + s], <int>s)
            if im[lo + s] != 0:
                n_im += 1
        n += k
        ci = 0.0
        if n_im:
            acc = 0.0
            for s in range(n):
                acc += si[s].w
                cw[s] = acc
            target = 0.5 * acc
            pos = n - 1
            for s in range(n):
                if cw[s] >= target:
                    pos = s
                    break
            ci = si[pos].v
        acc = 0.0
        for s in range(n):
            acc += sr[s].w
            cw[s] = acc
        W = acc
        pos = 0
        for q in range(N_LEVELS + 1):
            target = (<double>q / N_LEVELS) * W
            while pos < n - 1 and cw[pos] < target:
                pos += 1
            cands[q] = sr[pos].v
        for q in range(N_LEVELS):
            cands[N_LEVELS + 1 + q] = 0.5 * (cands[q + 1] + cands[q])
        t = lam * W * (1.0 + 1e-12)
        best_f = 1e308
        best_m = 1e308
        for q in range(nc):
            c = cands[q]
            acc = 0.0
            if delta == 1.0:
                for s in range(n):
                    acc += hypot(re[lo + s] - c, im[lo + s] - ci) * w[lo + s]
                val = acc / W
            elif delta == 0.5:
                for s in range(n):
                    acc += sqrt(hypot(re[lo + s] - c, im[lo + s] - ci)) * w[lo + s]
                val = (acc / W) * (acc / W)
            else:
                for s in range(n):
                    acc += pow(hypot(re[lo + s] - c, im[lo + s] - ci), delta) * w[lo + s]
                val = pow(acc / W, 1.0 / delta)
            if val < best_f:
                best_f = val
            acc = 0.0
            val = 0.0
            if n_im == 0:
                # distances to c decrease from both ends of the sorted values
                a = 0
                b = n - 1
                while a <= b:
                    da = fabs(sr[a].v - c)
                    db = fabs(sr[b].v - c)
                    if da >= db:
                        acc += sr[a].w
                        a += 1
                        if acc > t:
                            val = da
                            break
                    else:
                        acc += sr[b].w
                        b -= 1
                        if acc > t:
                            val = db
                            break
            else:
                for s in range(n):
                    tmp[s].v = hypot(re[lo + s] - c, im[lo + s] - ci)
                    tmp[s].w = w[lo + s]
                    tmp[s].idx = <int>s
                qsort(tmp, n, sizeof(Pair), _desc)
                for s in range(n):
                    acc += tmp[s].w
                    if acc > t:
                        val = tmp[s].v
                        break
            if val < best_m:
                best_m = val
        fd[i, j] = best_f
        ml[i, j] = best_m


def sharp_intervals(re, im, w, Py_ssize_t C, Py_ssize_t k, double delta, double lam,
                    int nthreads=1):
    cdef const double[::1] r = np.ascontiguousarray(re, dtype=np.float64)
    cdef const double[::1] s = np.ascontiguousarray(im, dtype=np.float64)
    cdef const double[::1] ww = np.ascontiguousarray(w, dtype=np.float64)
    Fd = np.zeros((C, C))
    Ml = np.zeros((C, C))
    cdef double[:, ::1] fd = Fd
    cdef double[:, ::1] ml = Ml
    cdef Py_ssize_t i, n = C * k
    cdef Pair* sr
    cdef Pair* si
    cdef Pair* tmp
    cdef double* cw
    cdef double* cands
    cdef int nt = nthreads if nthreads > 0 else 1
    with nogil, parallel(num_threads=nt):
        sr = <Pair*>malloc(n * sizeof(Pair))
        si = <Pair*>malloc(n * sizeof(Pair))
        tmp = <Pair*>malloc(n * sizeof(Pair))
        cw = <double*>malloc(n * sizeof(double))
        cands = <double*>malloc((2 * N_LEVELS + 1) * sizeof(double))
        for i in prange(C, schedule="dynamic"):
            _sharp_row(i, C, k, r, s, ww, delta, lam, fd, ml, sr, si, tmp, cw, cands)
        free(sr)
        free(si)
        free(tmp)
        free(cw)
        free(cands)
    return Fd, Ml
