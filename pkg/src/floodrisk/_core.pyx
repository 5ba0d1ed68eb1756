# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# distutils: language = c++
"""Compiled raster kernels; mirrors ``_fallback`` function for function."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, nextafter, INFINITY
from libcpp.vector cimport vector
from libcpp.queue cimport priority_queue
from libcpp.utility cimport pair
from libcpp.algorithm cimport sort as cpp_sort

cnp.import_array()

cdef int DR[8]
cdef int DC[8]
DR[:] = [0, 1, 1, 1, 0, -1, -1, -1]
DC[:] = [1, 1, 0, -1, -1, -1, 0, 1]

cdef enum:
    FLAT_SEED = 1
    TRACED = 2


def d8_directions(double[:, ::1] z, cnp.uint8_t[:, ::1] valid, double cellsize):
    cdef Py_ssize_t rows = z.shape[0], cols = z.shape[1]
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] out = np.zeros((rows, cols), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] codes = out
    cdef double diag = cellsize * sqrt(2.0)
    cdef double best, s, dist
    cdef int i, besti
    cdef Py_ssize_t r, c, nr, nc
    for r in range(rows):
        for c in range(cols):
            if not valid[r, c]:
                continue
            best = -INFINITY
            besti = -1
            for i in range(8):
                nr = r + DR[i]
                nc = c + DC[i]
                if nr < 0 or nr >= rows or nc < 0 or nc >= cols or not valid[nr, nc]:
                    continue
                if not z[r, c] - z[nr, nc] > 0:
                    continue
                # lowness is decided on the drop; the ratio may underflow to 0
                dist = diag if (i & 1) else cellsize
                s = (z[r, c] - z[nr, nc]) / dist
                if s > best:
                    best = s
                    besti = i
            if besti >= 0:
                codes[r, c] = 1 << besti
    return out


def mfd_masks(double[:, ::1] z, cnp.uint8_t[:, ::1] valid):
    cdef Py_ssize_t rows = z.shape[0], cols = z.shape[1]
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] out = np.zeros((rows, cols), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] m = out
    cdef int i
    cdef cnp.uint8_t bits
    cdef Py_ssize_t r, c, nr, nc
    for r in range(rows):
        for c in range(cols):
            if not valid[r, c]:
                continue
            bits = 0
            for i in range(8):
                nr = r + DR[i]
                nc = c + DC[i]
                if nr < 0 or nr >= rows or nc < 0 or nc >= cols or not valid[nr, nc]:
                    continue
                if z[r, c] - z[nr, nc] > 0:
                    bits |= (1 << i)
            m[r, c] = bits
    return out


ctypedef pair[double, Py_ssize_t] Entry


def fill_depressions(double[:, ::1] z_in, cnp.uint8_t[:, ::1] valid):
    cdef Py_ssize_t rows = z_in.shape[0], cols = z_in.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.array(z_in, dtype=np.float64, copy=True)
    cdef double[:, ::1] z = out
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] closed_arr = np.zeros((rows, cols), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] closed = closed_arr
    # min-heap via negated keys; (z, idx) pops in ascending lexicographic order
    cdef priority_queue[Entry] heap
    cdef Entry e
    cdef Py_ssize_t r, c, nr, nc, idx, n
    cdef int i
    cdef bint edge
    cdef double zc
    for r in range(rows):
        for c in range(cols):
            if not valid[r, c]:
                closed[r, c] = 1
                continue
            edge = False
            for i in range(8):
                nr = r + DR[i]
                nc = c + DC[i]
                if nr < 0 or nr >= rows or nc < 0 or nc >= cols or not valid[nr, nc]:
                    edge = True
                    break
            if edge:
                closed[r, c] = 1
                heap.push(Entry(-z[r, c], -(r * cols + c)))
    while not heap.empty():
        e = heap.top()
        heap.pop()
        zc = -e.first
        idx = -e.second
        r = idx // cols
        c = idx % cols
        for i in range(8):
            nr = r + DR[i]
            nc = c + DC[i]
            if nr < 0 or nr >= rows or nc < 0 or nc >= cols or closed[nr, nc]:
                continue
            closed[nr, nc] = 1
            if z[nr, nc] <= zc:
                z[nr, nc] = nextafter(zc, INFINITY)
            n = nr * cols + nc
            heap.push(Entry(-z[nr, nc], -n))
    return out


cdef int _code_index(int code):
    cdef int i
    for i in range(8):
        if code == (1 << i):
            return i
    return -1


cdef cnp.ndarray _receivers(cnp.uint8_t[:, ::1] codes, cnp.uint8_t[:, ::1] valid):
    cdef Py_ssize_t rows = codes.shape[0], cols = codes.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] rec_arr = np.full(rows * cols, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] rec = rec_arr
    cdef Py_ssize_t r, c, nr, nc
    cdef int i
    for r in range(rows):
        for c in range(cols):
            if not valid[r, c] or codes[r, c] == 0:
                continue
            i = _code_index(codes[r, c])
            if i < 0:
                raise ValueError("flow codes must be 0 or a single power of two up to 128")
            nr = r + DR[i]
            nc = c + DC[i]
            if nr < 0 or nr >= rows or nc < 0 or nc >= cols or not valid[nr, nc]:
                continue
            rec[r * cols + c] = nr * cols + nc
    return rec_arr


cdef cnp.ndarray _topological_order(cnp.int64_t[::1] rec, cnp.uint8_t[::1] vflat):
    cdef Py_ssize_t n = rec.shape[0], c, t, head = 0, tail = 0, nvalid = 0
    cdef cnp.ndarray[cnp.int64_t, ndim=1] indeg_arr = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] indeg = indeg_arr
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] order = order_arr
    for c in range(n):
        if rec[c] >= 0:
            indeg[rec[c]] += 1
        if vflat[c]:
            nvalid += 1
    for c in range(n):
        if vflat[c] and indeg[c] == 0:
            order[tail] = c
            tail += 1
    while head < tail:
        c = order[head]
        head += 1
        t = rec[c]
        if t >= 0:
            indeg[t] -= 1
            if indeg[t] == 0:
                order[tail] = t
                tail += 1
    if tail != nvalid:
        raise ValueError("flow field contains a cycle")
    return order_arr[:tail]


def flow_accumulation(cnp.uint8_t[:, ::1] codes, cnp.uint8_t[:, ::1] valid):
    cdef Py_ssize_t rows = codes.shape[0], cols = codes.shape[1], k, c, t
    cdef cnp.int64_t[::1] rec = _receivers(codes, valid)
    cdef cnp.int64_t[::1] order = _topological_order(rec, np.asarray(valid).ravel())
    cdef cnp.ndarray[cnp.int64_t, ndim=1] acc_arr = np.zeros(rows * cols, dtype=np.int64)
    cdef cnp.int64_t[::1] acc = acc_arr
    for k in range(order.shape[0]):
        c = order[k]
        t = rec[c]
        if t >= 0:
            acc[t] += acc[c] + 1
    return acc_arr.reshape(rows, cols)


def downstream_labels(cnp.uint8_t[:, ::1] codes, cnp.uint8_t[:, ::1] valid, seeds):
    cdef Py_ssize_t rows = codes.shape[0], cols = codes.shape[1], k, c, t
    cdef cnp.int64_t[::1] rec = _receivers(codes, valid)
    cdef cnp.int64_t[::1] order = _topological_order(rec, np.asarray(valid).ravel())
    cdef cnp.ndarray[cnp.int64_t, ndim=1] lab_arr = np.array(seeds, dtype=np.int64).ravel()
    cdef cnp.int64_t[::1] lab = lab_arr
    cdef cnp.uint8_t[::1] vflat = np.asarray(valid).ravel()
    for k in range(order.shape[0] - 1, -1, -1):
        c = order[k]
        if lab[c] == 0:
            t = rec[c]
            if t >= 0:
                lab[c] = lab[t]
    for c in range(rows * cols):
        if not vflat[c]:
            lab[c] = 0
    return lab_arr.reshape(rows, cols)


def mfd_grow(cnp.uint8_t[:, ::1] mask, cnp.uint8_t[:, ::1] valid_in, seed_labels, seed_order,
             double threshold_cells):
    cdef Py_ssize_t rows = mask.shape[0], cols = mask.shape[1], ncell = rows * cols
    cdef cnp.uint8_t[::1] m = np.asarray(mask).ravel()
    cdef cnp.uint8_t[::1] v = np.asarray(valid_in).ravel()
    cdef cnp.ndarray[cnp.int64_t, ndim=1] lab_arr = np.zeros(ncell, dtype=np.int64)
    cdef cnp.int64_t[::1] labels = lab_arr
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] fmark_arr = np.zeros(ncell, dtype=np.uint8)
    cdef cnp.uint8_t[::1] fmark = fmark_arr
    cdef vector[cnp.int64_t] kinds
    # queue of zone starts: flat cell-index storage with [begin, end) spans
    cdef vector[Py_ssize_t] store
    cdef vector[Py_ssize_t] span_begin, span_end
    cdef vector[int] span_kind
    cdef vector[Py_ssize_t] cells, region, frontier, comp
    cdef Py_ssize_t qhead = 0, j, k, c, n, r, col, nr, nc, head, count, f, b
    cdef cnp.int64_t zone = 0, best
    cdef int i, kind
    cdef bint closed, changed

    kinds.push_back(0)
    sl = np.asarray(seed_labels, dtype=np.int64).ravel()
    order = np.argsort(sl, kind="stable")
    sorted_labels = sl[order]
    for s in seed_order:
        lo = np.searchsorted(sorted_labels, s, side="left")
        hi = np.searchsorted(sorted_labels, s, side="right")
        span_begin.push_back(store.size())
        for idx in order[lo:hi]:
            store.push_back(idx)
        span_end.push_back(store.size())
        span_kind.push_back(FLAT_SEED)

    while qhead < <Py_ssize_t>span_begin.size():
        b = span_begin[qhead]
        f = span_end[qhead]
        kind = span_kind[qhead]
        qhead += 1
        cells.clear()
        for j in range(b, f):
            if labels[store[j]] == 0:
                cells.push_back(store[j])
        if cells.size() == 0:
            continue
        zone += 1
        kinds.push_back(kind)
        region.clear()
        for j in range(<Py_ssize_t>cells.size()):
            labels[cells[j]] = zone
            region.push_back(cells[j])
        count = cells.size()
        closed = count >= threshold_cells
        head = 0
        while not closed and head < <Py_ssize_t>region.size():
            c = region[head]
            head += 1
            r = c // cols
            col = c % cols
            for i in range(8):
                nr = r + DR[i]
                nc = col + DC[i]
                if nr < 0 or nr >= rows or nc < 0 or nc >= cols:
                    continue
                n = nr * cols + nc
                if not v[n] or labels[n] != 0:
                    continue
                if m[n] & (1 << ((i + 4) & 7)):
                    labels[n] = zone
                    region.push_back(n)
                    count += 1
                    if count >= threshold_cells:
                        closed = True
                        break
        if not closed:
            continue
        frontier.clear()
        for j in range(<Py_ssize_t>region.size()):
            c = region[j]
            r = c // cols
            col = c % cols
            for i in range(8):
                nr = r + DR[i]
                nc = col + DC[i]
                if nr < 0 or nr >= rows or nc < 0 or nc >= cols:
                    continue
                n = nr * cols + nc
                if not v[n] or labels[n] != 0 or fmark[n]:
                    continue
                if m[n] & (1 << ((i + 4) & 7)):
                    fmark[n] = 1
                    frontier.push_back(n)
        cpp_sort(frontier.begin(), frontier.end())
        # fmark: 1 = frontier not yet grouped, 2 = grouped
        for j in range(<Py_ssize_t>frontier.size()):
            f = frontier[j]
            if fmark[f] != 1:
                continue
            fmark[f] = 2
            comp.clear()
            comp.push_back(f)
            k = 0
            while k < <Py_ssize_t>comp.size():
                c = comp[k]
                k += 1
                r = c // cols
                col = c % cols
                for i in range(8):
                    nr = r + DR[i]
                    nc = col + DC[i]
                    if nr < 0 or nr >= rows or nc < 0 or nc >= cols:
                        continue
                    n = nr * cols + nc
                    if v[n] and fmark[n] == 1:
                        fmark[n] = 2
                        comp.push_back(n)
            cpp_sort(comp.begin(), comp.end())
            span_begin.push_back(store.size())
            for k in range(<Py_ssize_t>comp.size()):
                store.push_back(comp[k])
            span_end.push_back(store.size())
            span_kind.push_back(TRACED)
        for j in range(<Py_ssize_t>frontier.size()):
            fmark[frontier[j]] = 0

    changed = True
    while changed:
        changed = False
        for c in range(ncell):
            if labels[c] != 0 or not v[c]:
                continue
            best = 0
            r = c // cols
            col = c % cols
            for i in range(8):
                nr = r + DR[i]
                nc = col + DC[i]
                if nr < 0 or nr >= rows or nc < 0 or nc >= cols:
                    continue
                n = nr * cols + nc
                if v[n] and (m[c] & (1 << i)) and labels[n] != 0 and (best == 0 or labels[n] < best):
                    best = labels[n]
            if best != 0:
                labels[c] = best
                changed = True

    kinds_arr = np.empty(kinds.size(), dtype=np.int64)
    for j in range(<Py_ssize_t>kinds.size()):
        kinds_arr[j] = kinds[j]
    return lab_arr.reshape(rows, cols), kinds_arr


cdef void _edt_1d(double* f, Py_ssize_t n, double* d, Py_ssize_t* vtx, double* zb) nogil:
    # lower envelope of parabolas; f holds squared distances, INFINITY for none
    cdef Py_ssize_t k = -1, q, j
    cdef double s
    for q in range(n):
        if f[q] == INFINITY:
            continue
        while True:
            if k < 0:
                k = 0
                vtx[0] = q
                zb[0] = -INFINITY
                zb[1] = INFINITY
                break
            s = ((f[q] + <double>(q * q)) - (f[vtx[k]] + <double>(vtx[k] * vtx[k]))) / (2.0 * (q - vtx[k]))
            if s <= zb[k]:
                k -= 1
                continue
            k += 1
            vtx[k] = q
            zb[k] = s
            zb[k + 1] = INFINITY
            break
    if k < 0:
        for q in range(n):
            d[q] = INFINITY
        return
    j = 0
    for q in range(n):
        while zb[j + 1] < q:
            j += 1
        d[q] = <double>((q - vtx[j]) * (q - vtx[j])) + f[vtx[j]]


def squared_edt(cnp.uint8_t[:, ::1] mask):
    cdef Py_ssize_t rows = mask.shape[0], cols = mask.shape[1], r, c, n
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((rows, cols), dtype=np.float64)
    cdef double[:, ::1] g = out
    n = rows if rows > cols else cols
    cdef vector[double] f, d, zb
    cdef vector[Py_ssize_t] vtx
    f.resize(n)
    d.resize(n)
    zb.resize(n + 1)
    vtx.resize(n)
    with nogil:
        for c in range(cols):
            for r in range(rows):
                f[r] = 0.0 if mask[r, c] else INFINITY
            _edt_1d(&f[0], rows, &d[0], &vtx[0], &zb[0])
            for r in range(rows):
                g[r, c] = d[r]
        for r in range(rows):
            for c in range(cols):
                f[c] = g[r, c]
            _edt_1d(&f[0], cols, &d[0], &vtx[0], &zb[0])
            for c in range(cols):
                g[r, c] = d[c]
    return out


def jenks_dp(values, weights, int k):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.asarray(values, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w = np.asarray(weights, dtype=np.float64)
    cdef Py_ssize_t d = x.shape[0]
    x = x - x[(d - 1) // 2]
    Wa = np.concatenate(([0.0], np.cumsum(w)))
    S1a = np.concatenate(([0.0], np.cumsum(w * x)))
    S2a = np.concatenate(([0.0], np.cumsum(w * x * x)))
    cdef double[::1] W = Wa, S1 = S1a, S2 = S2a
    cdef cnp.ndarray[cnp.float64_t, ndim=1] Fp_arr = np.full(d + 1, INFINITY)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] Fc_arr = np.full(d + 1, INFINITY)
    cdef double[::1] Fp = Fp_arr, Fc = Fc_arr, tmp
    cdef cnp.ndarray[cnp.int64_t, ndim=2] arg_arr = np.zeros((k + 1, d + 1), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] arg = arg_arr
    cdef Py_ssize_t b, a, a0, a1, lo, hi, olo, ohi, mid, besta
    cdef int mm
    cdef double s, cst, tot, best
    cdef vector[Py_ssize_t] stack
    for b in range(1, d + 1):
        s = S1[b] - S1[0]
        cst = (S2[b] - S2[0]) - s * s / (W[b] - W[0])
        Fp[b] = cst if cst > 0.0 else 0.0
    for mm in range(2, k + 1):
        for b in range(d + 1):
            Fc[b] = INFINITY
        stack.clear()
        stack.push_back(mm)
        stack.push_back(d)
        stack.push_back(mm - 1)
        stack.push_back(d - 1)
        while stack.size() > 0:
            ohi = stack.back(); stack.pop_back()
            olo = stack.back(); stack.pop_back()
            hi = stack.back(); stack.pop_back()
            lo = stack.back(); stack.pop_back()
            if lo > hi:
                continue
            mid = (lo + hi) // 2
            a0 = olo if olo > mm - 1 else mm - 1
            a1 = mid - 1 if mid - 1 < ohi else ohi
            best = INFINITY
            besta = a0
            for a in range(a0, a1 + 1):
                s = S1[mid] - S1[a]
                cst = (S2[mid] - S2[a]) - s * s / (W[mid] - W[a])
                if not (cst > 0.0):
                    cst = 0.0
                tot = Fp[a] + cst
                if tot < best:
                    best = tot
                    besta = a
            Fc[mid] = best
            arg[mm, mid] = besta
            stack.push_back(lo)
            stack.push_back(mid - 1)
            stack.push_back(olo)
            stack.push_back(besta)
            stack.push_back(mid + 1)
            stack.push_back(hi)
            stack.push_back(besta)
            stack.push_back(ohi)
        tmp = Fp
        Fp = Fc
        Fc = tmp
    starts = np.zeros(k, dtype=np.int64)
    b = d
    for mm in range(k, 1, -1):
        a = arg[mm, b]
        starts[mm - 1] = a
        b = a
    return starts
