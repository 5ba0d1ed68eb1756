"""Pure Python/NumPy implementations of the raster kernels.

Every function here has a twin in ``_core.pyx`` with the same signature and
bit-identical results; ``kernels`` picks one at import time.
"""

import heapq
import math
from collections import deque

import numpy as np
from scipy import ndimage

# neighbour i = 0..7 clockwise from east; D8 code / MFD bit is 1 << i
DR = (0, 1, 1, 1, 0, -1, -1, -1)
DC = (1, 1, 0, -1, -1, -1, 0, 1)

FLAT_SEED = 1
TRACED = 2


def _shifted(a, i, fill):
    """``out[r, c] = a[r + DR[i], c + DC[i]]``, ``fill`` outside the grid."""
    rows, cols = a.shape
    out = np.full_like(a, fill)
    dr, dc = DR[i], DC[i]
    r0, r1 = max(0, -dr), rows - max(0, dr)
    c0, c1 = max(0, -dc), cols - max(0, dc)
    if r1 > r0 and c1 > c0:
        out[r0:r1, c0:c1] = a[r0 + dr:r1 + dr, c0 + dc:c1 + dc]
    return out


def d8_directions(z, valid, cellsize):
    z = np.asarray(z, dtype=np.float64)
    valid = np.asarray(valid, dtype=bool)
    diag = cellsize * math.sqrt(2.0)
    slopes = np.full((8,) + z.shape, -np.inf)
    for i in range(8):
        zn = _shifted(z, i, np.nan)
        vn = _shifted(valid, i, False)
        dist = diag if (i & 1) else cellsize
        with np.errstate(invalid="ignore"):
            drop = z - zn
            s = drop / dist
        # lowness is decided on the drop; the ratio may underflow to 0
        slopes[i] = np.where(vn & valid & (drop > 0), s, -np.inf)
    best = np.argmax(slopes, axis=0)
    top = np.take_along_axis(slopes, best[None], axis=0)[0]
    codes = np.where(top > -np.inf, np.left_shift(1, best), 0).astype(np.uint8)
    codes[~valid] = 0
    return codes


def mfd_masks(z, valid):
    z = np.asarray(z, dtype=np.float64)
    valid = np.asarray(valid, dtype=bool)
    out = np.zeros(z.shape, dtype=np.uint8)
    for i in range(8):
        zn = _shifted(z, i, np.nan)
        vn = _shifted(valid, i, False)
        with np.errstate(invalid="ignore"):
            lower = vn & ((z - zn) > 0)
        out |= np.where(lower, np.uint8(1 << i), np.uint8(0))
    out[~valid] = 0
    return out


def fill_depressions(z, valid):
    z = np.array(z, dtype=np.float64)
    valid = np.asarray(valid, dtype=bool)
    rows, cols = z.shape
    interior = np.ones_like(valid)
    for i in range(8):
        interior &= _shifted(valid, i, False)
    seeds = valid & ~interior
    closed = ~valid
    flat = z.ravel()
    closed_f = closed.ravel()
    heap = []
    for idx in np.flatnonzero(seeds.ravel()).tolist():
        closed_f[idx] = True
        heap.append((flat[idx], idx))
    heapq.heapify(heap)
    while heap:
        zc, c = heapq.heappop(heap)
        r, col = divmod(c, cols)
        for i in range(8):
            nr, nc = r + DR[i], col + DC[i]
            if nr < 0 or nr >= rows or nc < 0 or nc >= cols:
                continue
            n = nr * cols + nc
            if closed_f[n]:
                continue
            closed_f[n] = True
            if flat[n] <= zc:
                flat[n] = math.nextafter(zc, math.inf)
            heapq.heappush(heap, (flat[n], n))
    return z


def _receivers(codes, valid):
    """Flat index of each cell's D8 receiver, -1 for outlets and nodata."""
    codes = np.asarray(codes)
    valid = np.asarray(valid, dtype=bool)
    rows, cols = codes.shape
    rec = np.full(codes.size, -1, dtype=np.int64)
    rr, cc = np.divmod(np.arange(codes.size), cols)
    flat = codes.ravel().astype(np.int64)
    vflat = valid.ravel()
    bad = vflat & (flat != 0) & ((flat & (flat - 1)) != 0)
    if bad.any():
        raise ValueError("flow codes must be 0 or a single power of two up to 128")
    for i in range(8):
        sel = vflat & (flat == (1 << i))
        nr = rr[sel] + DR[i]
        nc = cc[sel] + DC[i]
        inside = (nr >= 0) & (nr < rows) & (nc >= 0) & (nc < cols)
        tgt = np.where(inside, nr * cols + nc, -1)
        ok = inside.copy()
        ok[inside] = vflat[tgt[inside]]
        rec[np.flatnonzero(sel)] = np.where(ok, tgt, -1)
    return rec


def _topological_order(rec, vflat):
    """Valid cells ordered upstream-first (Kahn)."""
    n = rec.size
    indeg = np.bincount(rec[rec >= 0], minlength=n)
    queue = deque(np.flatnonzero(vflat & (indeg == 0)).tolist())
    order = []
    rec_l = rec.tolist()
    indeg_l = indeg.tolist()
    while queue:
        c = queue.popleft()
        order.append(c)
        t = rec_l[c]
        if t >= 0:
            indeg_l[t] -= 1
            if indeg_l[t] == 0:
                queue.append(t)
    if len(order) != int(vflat.sum()):
        raise ValueError("flow field contains a cycle")
    return order


def flow_accumulation(codes, valid):
    valid = np.asarray(valid, dtype=bool)
    rec = _receivers(codes, valid)
    order = _topological_order(rec, valid.ravel())
    acc = [0] * rec.size
    rec_l = rec.tolist()
    for c in order:
        t = rec_l[c]
        if t >= 0:
            acc[t] += acc[c] + 1
    return np.array(acc, dtype=np.int64).reshape(valid.shape)


def downstream_labels(codes, valid, seeds):
    valid = np.asarray(valid, dtype=bool)
    rec = _receivers(codes, valid)
    order = _topological_order(rec, valid.ravel())
    lab = np.asarray(seeds, dtype=np.int64).ravel().tolist()
    rec_l = rec.tolist()
    for c in reversed(order):
        if lab[c] == 0:
            t = rec_l[c]
            if t >= 0:
                lab[c] = lab[t]
    out = np.array(lab, dtype=np.int64).reshape(valid.shape)
    out[~valid] = 0
    return out


def mfd_grow(mask, valid, seed_labels, seed_order, threshold_cells):
    mask = np.asarray(mask, dtype=np.uint8)
    valid = np.asarray(valid, dtype=bool)
    rows, cols = mask.shape
    mflat = mask.ravel().tolist()
    vflat = valid.ravel().tolist()
    labels = [0] * mask.size
    kinds = [0]

    comp_cells = {}
    sl = np.asarray(seed_labels, dtype=np.int64).ravel()
    nz = np.flatnonzero(sl)
    for idx, lab in zip(nz.tolist(), sl[nz].tolist()):
        comp_cells.setdefault(lab, []).append(idx)
    starts = deque((comp_cells[int(s)], FLAT_SEED) for s in seed_order)

    def neighbours(c):
        r, col = divmod(c, cols)
        for i in range(8):
            nr, nc = r + DR[i], col + DC[i]
            if 0 <= nr < rows and 0 <= nc < cols:
                n = nr * cols + nc
                if vflat[n]:
                    yield i, n

    zone = 0
    while starts:
        cells, kind = starts.popleft()
        cells = [c for c in cells if labels[c] == 0]
        if not cells:
            continue
        zone += 1
        kinds.append(kind)
        for c in cells:
            labels[c] = zone
        count = len(cells)
        region = list(cells)
        closed = count >= threshold_cells
        head = 0
        while not closed and head < len(region):
            r = region[head]
            head += 1
            for i, n in neighbours(r):
                if labels[n] == 0 and mflat[n] & (1 << ((i + 4) & 7)):
                    labels[n] = zone
                    region.append(n)
                    count += 1
                    if count >= threshold_cells:
                        closed = True
                        break
        if not closed:
            continue
        frontier = set()
        for r in region:
            for i, n in neighbours(r):
                if labels[n] == 0 and mflat[n] & (1 << ((i + 4) & 7)):
                    frontier.add(n)
        seen = set()
        for f in sorted(frontier):
            if f in seen:
                continue
            seen.add(f)
            comp = [f]
            k = 0
            while k < len(comp):
                for _, n in neighbours(comp[k]):
                    if n in frontier and n not in seen:
                        seen.add(n)
                        comp.append(n)
                k += 1
            starts.append((sorted(comp), TRACED))

    # cells no seed reached join the lowest-labelled zone they drain into
    changed = True
    while changed:
        changed = False
        for c in range(mask.size):
            if labels[c] or not vflat[c]:
                continue
            best = 0
            for i, n in neighbours(c):
                if mflat[c] & (1 << i) and labels[n] and (best == 0 or labels[n] < best):
                    best = labels[n]
            if best:
                labels[c] = best
                changed = True

    return np.array(labels, dtype=np.int64).reshape(mask.shape), np.array(kinds, dtype=np.int64)


def squared_edt(mask):
    mask = np.asarray(mask, dtype=bool)
    ir, ic = ndimage.distance_transform_edt(~mask, return_distances=False, return_indices=True)
    rr, cc = np.indices(mask.shape)
    return ((ir - rr) ** 2 + (ic - cc) ** 2).astype(np.float64)


def _prefix(values, weights):
    W = np.concatenate(([0.0], np.cumsum(weights)))
    S1 = np.concatenate(([0.0], np.cumsum(weights * values)))
    S2 = np.concatenate(([0.0], np.cumsum(weights * values * values)))
    return W, S1, S2


def jenks_dp(values, weights, k):
    """Class start indices of the optimal k-class weighted SSE partition."""
    values = np.asarray(values, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    d = values.size
    values = values - values[(d - 1) // 2]
    W, S1, S2 = _prefix(values, weights)

    def cost(a, b):
        s = S1[b] - S1[a]
        c = (S2[b] - S2[a]) - s * s / (W[b] - W[a])
        return np.maximum(c, 0.0)

    F_prev = cost(np.zeros(d + 1, dtype=np.int64)[1:], np.arange(1, d + 1))
    F_prev = np.concatenate(([np.inf], F_prev))
    arg = np.zeros((k + 1, d + 1), dtype=np.int64)
    for m in range(2, k + 1):
        F_cur = np.full(d + 1, np.inf)
        stack = [(m, d, m - 1, d - 1)]
        while stack:
            lo, hi, olo, ohi = stack.pop()
            if lo > hi:
                continue
            mid = (lo + hi) // 2
            a0 = max(olo, m - 1)
            a1 = min(mid - 1, ohi)
            cand = np.arange(a0, a1 + 1)
            tot = F_prev[cand] + cost(cand, np.full(cand.size, mid))
            j = int(np.argmin(tot))
            F_cur[mid] = tot[j]
            best = a0 + j
            arg[m, mid] = best
            stack.append((mid + 1, hi, best, ohi))
            stack.append((lo, mid - 1, olo, best))
        F_prev = F_cur
    starts = [0] * k
    b = d
    for m in range(k, 1, -1):
        a = int(arg[m, b])
        starts[m - 1] = a
        b = a
    return np.array(starts, dtype=np.int64)
