"""Numba kernels for the sampling hot loops.

Trial factor parameters are passed as plain floats ``(a, ell, k, A)``;
``k == 0`` encodes the free case f = 1. Cell lists are doubly linked lists
over ``nc**3`` cells of side ``L / nc >= ell``; ``nc < 3`` means no cells
(every particle is scanned).
"""
import math

import numpy as np
from numba import njit

# f below this is treated as a hard-core overlap
F_FLOOR = 1e-30


@njit(cache=True, nogil=True, inline="always")
def trial_f(r, a, ell, k, A):
    if k == 0.0:
        return 1.0
    if r <= a:
        return 0.0
    if r >= ell:
        return 1.0
    return A * math.sin(k * (r - a)) / r


@njit(cache=True, nogil=True, inline="always")
def trial_fp(r, a, ell, k, A):
    if k == 0.0 or r < a or r >= ell:
        return 0.0
    ph = k * (r - a)
    return A * (k * r * math.cos(ph) - math.sin(ph)) / (r * r)


@njit(cache=True, nogil=True, inline="always")
def wrap_comp(d, L):
    d = d - L * round(d / L)
    if d <= -0.5 * L:
        d += L
    return d


@njit(cache=True, nogil=True, inline="always")
def wrap_pos(x, L):
    w = x - L * math.floor((x + 0.5 * L) / L)
    if w >= 0.5 * L:
        w -= L
    return w


@njit(cache=True, nogil=True, inline="always")
def cell_coord(x, L, nc):
    c = int(math.floor((x + 0.5 * L) / L * nc))
    if c < 0:
        c = 0
    elif c >= nc:
        c = nc - 1
    return c


@njit(cache=True, nogil=True, inline="always")
def cell_index(x, y, z, L, nc):
    return (cell_coord(x, L, nc) * nc + cell_coord(y, L, nc)) * nc + cell_coord(z, L, nc)


@njit(cache=True, nogil=True)
def build_cells(pos, L, nc, head, nxt, prv, cell_of):
    head[:] = -1
    n = pos.shape[0]
    for p in range(n):
        c = cell_index(pos[p, 0], pos[p, 1], pos[p, 2], L, nc) if nc >= 3 else 0
        cell_of[p] = c
        prv[p] = -1
        nxt[p] = head[c]
        if head[c] >= 0:
            prv[head[c]] = p
        head[c] = p


@njit(cache=True, nogil=True)
def _unlink(p, head, nxt, prv, cell_of):
    c = cell_of[p]
    if prv[p] >= 0:
        nxt[prv[p]] = nxt[p]
    else:
        head[c] = nxt[p]
    if nxt[p] >= 0:
        prv[nxt[p]] = prv[p]
    nxt[p] = -1
    prv[p] = -1


@njit(cache=True, nogil=True)
def _link(p, c, head, nxt, prv, cell_of):
    cell_of[p] = c
    prv[p] = -1
    nxt[p] = head[c]
    if head[c] >= 0:
        prv[head[c]] = p
    head[c] = p


@njit(cache=True, nogil=True)
def neighbor_candidates(x, y, z, L, nc, head, nxt, out):
    """Fill ``out`` with particles in the 27 cells around (x, y, z); return count."""
    m = 0
    if nc < 3:
        q = head[0]
        while q >= 0:
            out[m] = q
            m += 1
            q = nxt[q]
        return m
    cx = cell_coord(x, L, nc)
    cy = cell_coord(y, L, nc)
    cz = cell_coord(z, L, nc)
    for dx in range(-1, 2):
        ix = (cx + dx) % nc
        for dy in range(-1, 2):
            iy = (cy + dy) % nc
            for dz in range(-1, 2):
                iz = (cz + dz) % nc
                q = head[(ix * nc + iy) * nc + iz]
                while q >= 0:
                    out[m] = q
                    m += 1
                    q = nxt[q]
    return m


@njit(cache=True, nogil=True)
def _row_log_f(pos, p, x, y, z, L, nc, head, nxt, a, ell, k, A, buf):
    """Sum of 2 ln f(|(x,y,z) - x_q|) over q != p in range; -inf on overlap."""
    m = neighbor_candidates(x, y, z, L, nc, head, nxt, buf)
    s = 0.0
    for t in range(m):
        q = buf[t]
        if q == p:
            continue
        dx = wrap_comp(x - pos[q, 0], L)
        dy = wrap_comp(y - pos[q, 1], L)
        dz = wrap_comp(z - pos[q, 2], L)
        r = math.sqrt(dx * dx + dy * dy + dz * dz)
        if r >= ell:
            continue
        f = trial_f(r, a, ell, k, A)
        if f < F_FLOOR:
            return -np.inf
        s += 2.0 * math.log(f)
    return s


@njit(cache=True, nogil=True)
def delta_log_weight(pos, p, x, y, z, L, nc, head, nxt, a, ell, k, A, buf):
    new = _row_log_f(pos, p, x, y, z, L, nc, head, nxt, a, ell, k, A, buf)
    if new == -np.inf:
        return -np.inf
    old = _row_log_f(pos, p, pos[p, 0], pos[p, 1], pos[p, 2], L, nc, head, nxt,
                     a, ell, k, A, buf)
    return new - old


@njit(cache=True, nogil=True)
def sweep(pos, L, nc, head, nxt, prv, cell_of, a, ell, k, A, rand, step):
    """One Metropolis sweep: particle ``p`` uses row ``p`` of ``rand`` (shape (N, 4))."""
    n = pos.shape[0]
    buf = np.empty(n, dtype=np.int64)
    accepted = 0
    for p in range(n):
        x = wrap_pos(pos[p, 0] + step * (2.0 * rand[p, 0] - 1.0), L)
        y = wrap_pos(pos[p, 1] + step * (2.0 * rand[p, 1] - 1.0), L)
        z = wrap_pos(pos[p, 2] + step * (2.0 * rand[p, 2] - 1.0), L)
        dlw = delta_log_weight(pos, p, x, y, z, L, nc, head, nxt, a, ell, k, A, buf)
        if dlw == -np.inf:
            continue
        if dlw >= 0.0 or rand[p, 3] < math.exp(dlw):
            accepted += 1
            pos[p, 0] = x
            pos[p, 1] = y
            pos[p, 2] = z
            if nc >= 3:
                c = cell_index(x, y, z, L, nc)
                if c != cell_of[p]:
                    _unlink(p, head, nxt, prv, cell_of)
                    _link(p, c, head, nxt, prv, cell_of)
    return accepted


@njit(cache=True, nogil=True)
def pair_list(pos, L, nc, head, nxt, cutoff):
    """All pairs ``i < j`` with torus distance ``<= cutoff``."""
    n = pos.shape[0]
    buf = np.empty(n, dtype=np.int64)
    cap = 16
    ii = np.empty(cap, dtype=np.int64)
    jj = np.empty(cap, dtype=np.int64)
    m = 0
    for i in range(n):
        c = neighbor_candidates(pos[i, 0], pos[i, 1], pos[i, 2], L, nc, head, nxt, buf)
        for t in range(c):
            j = buf[t]
            if j <= i:
                continue
            dx = wrap_comp(pos[i, 0] - pos[j, 0], L)
            dy = wrap_comp(pos[i, 1] - pos[j, 1], L)
            dz = wrap_comp(pos[i, 2] - pos[j, 2], L)
            if math.sqrt(dx * dx + dy * dy + dz * dz) <= cutoff:
                if m == cap:
                    cap *= 2
                    ii2 = np.empty(cap, dtype=np.int64)
                    jj2 = np.empty(cap, dtype=np.int64)
                    ii2[:m] = ii[:m]
                    jj2[:m] = jj[:m]
                    ii = ii2
                    jj = jj2
                ii[m] = i
                jj[m] = j
                m += 1
    return ii[:m], jj[:m]


@njit(cache=True, nogil=True)
def log_weight(pos, L, nc, head, nxt, a, ell, k, A):
    """Sum over pairs of 2 ln f, summed in sorted order (label independent)."""
    n = pos.shape[0]
    buf = np.empty(n, dtype=np.int64)
    terms = np.empty(n * n, dtype=np.float64)
    m = 0
    for i in range(n):
        c = neighbor_candidates(pos[i, 0], pos[i, 1], pos[i, 2], L, nc, head, nxt, buf)
        for t in range(c):
            j = buf[t]
            if j <= i:
                continue
            dx = wrap_comp(pos[i, 0] - pos[j, 0], L)
            dy = wrap_comp(pos[i, 1] - pos[j, 1], L)
            dz = wrap_comp(pos[i, 2] - pos[j, 2], L)
            r = math.sqrt(dx * dx + dy * dy + dz * dz)
            if r >= ell:
                continue
            f = trial_f(r, a, ell, k, A)
            if f < F_FLOOR:
                return -np.inf
            terms[m] = 2.0 * math.log(f)
            m += 1
    return np.sum(np.sort(terms[:m]))


@njit(cache=True, nogil=True)
def local_energy(pos, L, nc, head, nxt, a, ell, k, A):
    """Return ``(ordered pair count within ell, three-body sum, overlap flag)``.

    three-body = sum_j |sum_i eta_ji|^2 - sum_i |eta_ji|^2 with
    eta_ji = f'(r)/f(r) * (x_j - x_i)/r. Row sums are taken in sorted order
    so the result does not depend on particle labels.
    """
    n = pos.shape[0]
    buf = np.empty(n, dtype=np.int64)
    ex = np.empty(n, dtype=np.float64)
    ey = np.empty(n, dtype=np.float64)
    ez = np.empty(n, dtype=np.float64)
    e2 = np.empty(n, dtype=np.float64)
    rows = np.empty(n, dtype=np.float64)
    count = 0
    for j in range(n):
        c = neighbor_candidates(pos[j, 0], pos[j, 1], pos[j, 2], L, nc, head, nxt, buf)
        m = 0
        for t in range(c):
            i = buf[t]
            if i == j:
                continue
            dx = wrap_comp(pos[j, 0] - pos[i, 0], L)
            dy = wrap_comp(pos[j, 1] - pos[i, 1], L)
            dz = wrap_comp(pos[j, 2] - pos[i, 2], L)
            r = math.sqrt(dx * dx + dy * dy + dz * dz)
            if r > ell:
                continue
            count += 1
            f = trial_f(r, a, ell, k, A)
            if f < F_FLOOR:
                return 0, 0.0, True
            g = trial_fp(r, a, ell, k, A) / (f * r)
            ex[m] = g * dx
            ey[m] = g * dy
            ez[m] = g * dz
            e2[m] = g * g * r * r
            m += 1
        if m < 2:
            # no cross terms; skip the identity so round-off cannot leak in
            rows[j] = 0.0
            continue
        sx = np.sum(np.sort(ex[:m]))
        sy = np.sum(np.sort(ey[:m]))
        sz = np.sum(np.sort(ez[:m]))
        rows[j] = sx * sx + sy * sy + sz * sz - np.sum(np.sort(e2[:m]))
    return count, np.sum(np.sort(rows)), False


@njit(cache=True, nogil=True)
def insertion_weights(pos, L, nc, head, nxt, ys, a, ell, k, A):
    """prod_j f(|y - x_j|)^2 for each insertion point y (rows of ``ys``)."""
    n = pos.shape[0]
    buf = np.empty(max(n, 1), dtype=np.int64)
    out = np.empty(ys.shape[0], dtype=np.float64)
    for t in range(ys.shape[0]):
        y0 = ys[t, 0]
        y1 = ys[t, 1]
        y2 = ys[t, 2]
        c = neighbor_candidates(y0, y1, y2, L, nc, head, nxt, buf)
        w = 1.0
        for s in range(c):
            q = buf[s]
            dx = wrap_comp(y0 - pos[q, 0], L)
            dy = wrap_comp(y1 - pos[q, 1], L)
            dz = wrap_comp(y2 - pos[q, 2], L)
            r = math.sqrt(dx * dx + dy * dy + dz * dz)
            if r < ell:
                f = trial_f(r, a, ell, k, A)
                w *= f * f
                if w == 0.0:
                    break
        out[t] = w
    return out
