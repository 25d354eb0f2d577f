"""Pure numpy versions of the hot kernels (same signatures as ``_kernels``)."""
from __future__ import annotations

import numpy as np

N_LEVELS = 64
TARGET_CHUNK = 256


def _lagrange(t: np.ndarray, ref_x: np.ndarray, bary: np.ndarray) -> np.ndarray:
    diff = t[:, None] - ref_x[None, :]
    exact = diff == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        q = bary[None, :] / diff
        lag = q / q.sum(axis=1, keepdims=True)
    rows = exact.any(axis=1)
    if np.any(rows):
        lag[rows] = exact[rows].astype(float)
    return lag


def pv_apply(targets, cell_a, cell_b, ref_x, ref_w, bary, dmat, vals, near):
    """Principal value ``int f(tau)/(tau - x) dtau`` over the grid cells.

    ``vals`` has shape ``(n_cells * k, m)``.  Cells whose centre is within
    ``near`` half-widths of the target are integrated exactly for the cell's
    interpolating polynomial; other cells use the plain Gauss rule.  Returns
    the integrals and, per target, the size of the logarithmic term that was
    dropped because the target sits on a cell endpoint (nonzero at jumps).
    """
    targets = np.ascontiguousarray(targets, dtype=float)
    vals = np.ascontiguousarray(vals, dtype=complex)
    C = len(cell_a)
    k = len(ref_x)
    m = vals.shape[1]
    mid = 0.5 * (cell_a + cell_b)
    hw = 0.5 * (cell_b - cell_a)
    src = (mid[:, None] + hw[:, None] * ref_x[None, :]).ravel()
    wts = (hw[:, None] * ref_w[None, :]).ravel()
    vc = vals.reshape(C, k, m)
    out = np.zeros((len(targets), m), dtype=complex)
    jump = np.zeros(len(targets))
    kk = np.arange(k)
    for s in range(0, len(targets), TARGET_CHUNK):
        x = targets[s:s + TARGET_CHUNK]
        diff = src[None, :] - x[:, None]
        same = diff == 0
        with np.errstate(divide="ignore"):
            K = np.where(same, 0.0, wts[None, :] / np.where(same, 1.0, diff))
        res = K @ vals
        t = (x[:, None] - mid[None, :]) / hw[None, :]
        ti, ci = np.nonzero(np.abs(t) <= near)
        if ti.size:
            lag = _lagrange(t[ti, ci], ref_x, bary)
            Vc = vc[ci]
            Px = np.einsum("pk,pkm->pm", lag, Vc)
            cols = ci[:, None] * k + kk[None, :]
            ksum = K[ti[:, None], cols].sum(axis=1)
            xa = x[ti]
            a, b = cell_a[ci], cell_b[ci]
            db, da = np.abs(b - xa), np.abs(a - xa)
            logt = (np.log(np.where(db == 0, 1.0, db))
                    - np.log(np.where(da == 0, 1.0, da)))
            corr = Px * (logt - ksum)[:, None]
            sm = same[ti[:, None], cols]
            hit = np.nonzero(sm)
            if hit[0].size:
                p_idx, j_idx = hit
                deriv = np.einsum("pi,pim->pm", dmat[j_idx], Vc[p_idx]) / hw[ci[p_idx]][:, None]
                corr[p_idx] += (ref_w[j_idx] * hw[ci[p_idx]])[:, None] * deriv
            np.add.at(res, ti, corr)
            sgn = np.where(db == 0, 1.0, 0.0) - np.where(da == 0, 1.0, 0.0)
            if np.any(sgn):
                acc = np.zeros((len(x), m), dtype=complex)
                np.add.at(acc, ti, Px * sgn[:, None])
                jump[s:s + len(x)] = np.max(np.abs(acc), axis=1)
        out[s:s + len(x)] = res
    return out, jump


def maximal_sweep(cum, nodes):
    """Sup of interval averages over all cell-aligned intervals.

    ``cum`` are prefix sums of the cell integrals of ``|f|``.  Returns the sup
    over intervals containing each mesh point, and over intervals containing
    each cell.
    """
    C = len(nodes) - 1
    node_vals = np.zeros(C + 1)
    cell_vals = np.zeros(C)
    for i in range(C):
        avg = (cum[i + 1:] - cum[i]) / (nodes[i + 1:] - nodes[i])
        sm = np.maximum.accumulate(avg[::-1])[::-1]
        np.maximum(cell_vals[i:], sm, out=cell_vals[i:])
        idx = np.maximum(np.arange(i, C + 1) - 1, i) - i
        np.maximum(node_vals[i:], sm[idx], out=node_vals[i:])
    return node_vals, cell_vals


def interval_sup(F):
    """Given ``F[i, j]`` for cell ranges ``i..j``, sups over intervals
    containing each mesh point and each cell."""
    C = F.shape[0]
    node_vals = np.zeros(C + 1)
    cell_vals = np.zeros(C)
    for i in range(C):
        row = F[i, i:]
        sm = np.maximum.accumulate(row[::-1])[::-1]
        np.maximum(cell_vals[i:], sm, out=cell_vals[i:])
        idx = np.maximum(np.arange(i, C + 1) - 1, i) - i
        np.maximum(node_vals[i:], sm[idx], out=node_vals[i:])
    return node_vals, cell_vals


def _candidates(re, w):
    order = np.argsort(re, kind="stable")
    v = re[order]
    cw = np.cumsum(w[order])
    W = cw[-1]
    levels = np.arange(N_LEVELS + 1) / N_LEVELS
    pos = np.searchsorted(cw, levels * W, side="left")
    pos = np.minimum(pos, len(v) - 1)
    q = v[pos]
    return np.concatenate((q, 0.5 * (q[1:] + q[:-1]))), W


def _wmedian(x, w):
    order = np.argsort(x, kind="stable")
    cw = np.cumsum(w[order])
    i = min(int(np.searchsorted(cw, 0.5 * cw[-1], side="left")), len(x) - 1)
    return x[order][i]


def sharp_intervals(re, im, w, C, k, delta, lam):
    """Best-constant deviations on every cell range ``i..j``.

    Returns matrices ``(Fd, Ml)`` where ``Fd[i, j]`` is
    ``min_c (avg |f - c|**delta)**(1/delta)`` and ``Ml[i, j]`` is
    ``min_c ((f - c) chi_Q)^*(lam |Q|)``, both over the same candidate set.
    """
    Fd = np.zeros((C, C))
    Ml = np.zeros((C, C))
    for i in range(C):
        for j in range(i, C):
            sl = slice(i * k, (j + 1) * k)
            r, s, ww = re[sl], im[sl], w[sl]
            cands, W = _candidates(r, ww)
            ci = _wmedian(s, ww) if np.any(s) else 0.0
            D = np.hypot(r[None, :] - cands[:, None], s[None, :] - ci)
            Fd[i, j] = np.min(((D ** delta) @ ww / W) ** (1.0 / delta))
            order = np.argsort(-D, axis=1, kind="stable")
            ds = np.take_along_axis(D, order, axis=1)
            cw = np.cumsum(ww[order], axis=1)
            t = lam * W * (1.0 + 1e-12)
            first = np.argmax(cw > t, axis=1)
            ok = cw[:, -1] > t
            vals = np.where(ok, ds[np.arange(len(cands)), first], 0.0)
            Ml[i, j] = np.min(vals)
    return Fd, Ml
