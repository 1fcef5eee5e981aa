# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: cluster labeling, crossing tests, arm-event summaries,
pivotal counts and truth-table tabulation.  Semantics match ``_kernels_py``.
"""

import numpy as np

cimport cython
from libc.string cimport memcpy, memset

ctypedef signed char i8
ctypedef unsigned char u8
ctypedef int i32


# ---------------------------------------------------------------------------
# Crossing tests.
# ---------------------------------------------------------------------------


def crossing_site_many(i8[:, ::1] colors, i32[::1] indptr, i32[::1] indices,
                       u8[::1] src, u8[::1] dst):
    cdef Py_ssize_t m = colors.shape[0]
    cdef Py_ssize_t n = colors.shape[1]
    out_np = np.zeros(m, dtype=np.uint8)
    cdef u8[::1] out = out_np
    visited_np = np.zeros(n, dtype=np.uint8)
    stack_np = np.empty(n, dtype=np.int32)
    cdef u8[::1] visited = visited_np
    cdef i32[::1] stack = stack_np
    cdef Py_ssize_t i, v, u, k, top
    cdef u8 hit
    for i in range(m):
        memset(&visited[0], 0, n)
        top = 0
        hit = 0
        for v in range(n):
            if src[v] and colors[i, v] > 0:
                visited[v] = 1
                stack[top] = v
                top += 1
        while top > 0 and not hit:
            top -= 1
            v = stack[top]
            if dst[v]:
                hit = 1
                break
            for k in range(indptr[v], indptr[v + 1]):
                u = indices[k]
                if not visited[u] and colors[i, u] > 0:
                    visited[u] = 1
                    stack[top] = u
                    top += 1
        out[i] = hit
    return out_np


def crossing_bond_many(i8[:, ::1] bits, i32 nv, i32[::1] vindptr,
                       i32[::1] vbit, i32[::1] vother,
                       u8[::1] src, u8[::1] dst):
    cdef Py_ssize_t m = bits.shape[0]
    out_np = np.zeros(m, dtype=np.uint8)
    cdef u8[::1] out = out_np
    visited_np = np.zeros(nv, dtype=np.uint8)
    stack_np = np.empty(nv, dtype=np.int32)
    cdef u8[::1] visited = visited_np
    cdef i32[::1] stack = stack_np
    cdef Py_ssize_t i, v, u, k, top
    cdef u8 hit
    for i in range(m):
        memset(&visited[0], 0, nv)
        top = 0
        hit = 0
        for v in range(nv):
            if src[v]:
                visited[v] = 1
                stack[top] = v
                top += 1
        while top > 0 and not hit:
            top -= 1
            v = stack[top]
            if dst[v]:
                hit = 1
                break
            for k in range(vindptr[v], vindptr[v + 1]):
                if bits[i, vbit[k]] > 0:
                    u = vother[k]
                    if not visited[u]:
                        visited[u] = 1
                        stack[top] = u
                        top += 1
        out[i] = hit
    return out_np


# ---------------------------------------------------------------------------
# Arm-event summaries.
# ---------------------------------------------------------------------------


cdef int _cluster_crosses(i32[::1] label, i32 cid, i32[::1] indptr,
                          i32[::1] indices, u8[::1] inner, u8[::1] outer,
                          i32 skip, u8[::1] visited, i32[::1] stack) nogil:
    cdef Py_ssize_t n = label.shape[0]
    cdef Py_ssize_t v, u, k, top = 0
    memset(&visited[0], 0, n)
    for v in range(n):
        if label[v] == cid and inner[v] and v != skip:
            visited[v] = 1
            stack[top] = v
            top += 1
    while top > 0:
        top -= 1
        v = stack[top]
        if outer[v]:
            return 1
        for k in range(indptr[v], indptr[v + 1]):
            u = indices[k]
            if label[u] == cid and u != skip and not visited[u]:
                visited[u] = 1
                stack[top] = u
                top += 1
    return 0


cdef int _white_double(i32[::1] label, i32 ncl, i8[::1] ccol, u8[::1] creach,
                       i32[::1] indptr, i32[::1] indices,
                       u8[::1] inner, u8[::1] outer,
                       u8[::1] visited, i32[::1] stack,
                       i32[::1] parent, i32[::1] queue) nogil:
    cdef Py_ssize_t n = label.shape[0]
    cdef Py_ssize_t cid, v, u, k, head, tail, plen, p
    cdef i32 endv
    cdef int ok
    for cid in range(ncl):
        if ccol[cid] <= 0 or not creach[cid]:
            continue
        # BFS with parents to extract one inner->outer path.
        for v in range(n):
            parent[v] = -3
        head = 0
        tail = 0
        for v in range(n):
            if label[v] == cid and inner[v]:
                parent[v] = -1
                queue[tail] = v
                tail += 1
        endv = -1
        while head < tail:
            v = queue[head]
            head += 1
            if outer[v]:
                endv = v
                break
            for k in range(indptr[v], indptr[v + 1]):
                u = indices[k]
                if label[u] == cid and parent[u] == -3:
                    parent[u] = v
                    queue[tail] = u
                    tail += 1
        if endv < 0:
            continue
        ok = 1
        v = endv
        while True:
            if not _cluster_crosses(label, cid, indptr, indices, inner, outer,
                                    v, visited, stack):
                ok = 0
                break
            if parent[v] == -1:
                break
            v = parent[v]
        if ok:
            return 1
    return 0


def arm_summary_many(i8[:, ::1] bits, i8[::1] template, i32[::1] bit_node,
                     i32[::1] indptr, i32[::1] indices,
                     u8[::1] inner, u8[::1] outer, i32[::1] walk,
                     bint cyclic, i32 mult_cc):
    cdef Py_ssize_t m = bits.shape[0]
    cdef Py_ssize_t nb = bits.shape[1]
    cdef Py_ssize_t nn = template.shape[0]
    cdef Py_ssize_t nw = walk.shape[0]
    summary_np = np.zeros((m, 6), dtype=np.int32)
    wmult_np = np.zeros(m, dtype=np.uint8)
    cdef i32[:, ::1] summary = summary_np
    cdef u8[::1] wmult = wmult_np

    colors_np = np.empty(nn, dtype=np.int8)
    label_np = np.empty(nn, dtype=np.int32)
    stack_np = np.empty(nn, dtype=np.int32)
    visited_np = np.empty(nn, dtype=np.uint8)
    parent_np = np.empty(nn, dtype=np.int32)
    queue_np = np.empty(nn, dtype=np.int32)
    ccol_np = np.empty(nn + 1, dtype=np.int8)
    creach_np = np.empty(nn + 1, dtype=np.uint8)
    cseen_np = np.empty(nn + 1, dtype=np.uint8)
    word_np = np.empty(nw + 1, dtype=np.int32)
    wcol_np = np.empty(nw + 1, dtype=np.int8)
    cdef i8[::1] colors = colors_np
    cdef i32[::1] label = label_np
    cdef i32[::1] stack = stack_np
    cdef u8[::1] visited = visited_np
    cdef i32[::1] parent = parent_np
    cdef i32[::1] queue = queue_np
    cdef i8[::1] ccol = ccol_np
    cdef u8[::1] creach = creach_np
    cdef u8[::1] cseen = cseen_np
    cdef i32[::1] word = word_np
    cdef i8[::1] wcol = wcol_np

    cdef Py_ssize_t i, v, u, k, w, top, b
    cdef i32 ncl, cid, wlen, n_w, n_b, cc, runs, max_run, cur, first, last
    cdef i8 col, prev
    cdef int anomaly = 0

    for i in range(m):
        memcpy(&colors[0], &template[0], nn)
        for b in range(nb):
            colors[bit_node[b]] = bits[i, b]
        memset(&label[0], 0xFF, nn * sizeof(i32))
        ncl = 0
        for w in range(nw):
            v = walk[w]
            if label[v] >= 0:
                continue
            cid = ncl
            ncl += 1
            col = colors[v]
            ccol[cid] = col
            creach[cid] = outer[v]
            label[v] = cid
            top = 0
            stack[top] = v
            top += 1
            while top > 0:
                top -= 1
                v = stack[top]
                for k in range(indptr[v], indptr[v + 1]):
                    u = indices[k]
                    if label[u] < 0 and colors[u] == col:
                        label[u] = cid
                        if outer[u]:
                            creach[cid] = 1
                        stack[top] = u
                        top += 1
        # Word of crossing clusters in walk order, adjacent duplicates merged.
        wlen = 0
        for w in range(nw):
            cid = label[walk[w]]
            if cid >= 0 and creach[cid]:
                if wlen == 0 or word[wlen - 1] != cid:
                    word[wlen] = cid
                    wlen += 1
        if cyclic and wlen > 1 and word[0] == word[wlen - 1]:
            wlen -= 1
        for k in range(ncl):
            cseen[k] = 0
        for k in range(wlen):
            if cseen[word[k]]:
                anomaly = 1
            cseen[word[k]] = 1
            wcol[k] = 1 if ccol[word[k]] > 0 else -1
        if anomaly:
            break
        n_w = 0
        for k in range(wlen):
            if wcol[k] > 0:
                n_w += 1
        n_b = wlen - n_w
        if cyclic:
            cc = 0
            if wlen > 1:
                for k in range(wlen):
                    if wcol[k] != wcol[(k + 1) % wlen]:
                        cc += 1
            # Longest cyclic run of white entries.
            if n_b == 0:
                max_run = n_w
            else:
                max_run = 0
                cur = 0
                for k in range(2 * wlen):
                    if wcol[k % wlen] > 0:
                        cur += 1
                        if cur > max_run:
                            max_run = cur
                        if max_run > wlen:
                            max_run = wlen
                    else:
                        cur = 0
            summary[i, 0] = n_w
            summary[i, 1] = n_b
            summary[i, 2] = cc
            summary[i, 3] = max_run
            if mult_cc > 0 and cc == mult_cc and max_run < 2 and n_w >= 1:
                wmult[i] = _white_double(label, ncl, ccol, creach, indptr,
                                         indices, inner, outer, visited,
                                         stack, parent, queue)
        else:
            runs = 0
            prev = 0
            first = 0
            last = 0
            for k in range(wlen):
                if wcol[k] != prev:
                    runs += 1
                    prev = wcol[k]
            if wlen > 0:
                first = wcol[0]
                last = wcol[wlen - 1]
            summary[i, 0] = n_w
            summary[i, 1] = n_b
            summary[i, 2] = runs
            summary[i, 4] = first
            summary[i, 5] = last
    if anomaly:
        raise RuntimeError("interleaved crossing clusters in boundary walk")
    return summary_np, wmult_np


# ---------------------------------------------------------------------------
# Pivotal counts for rectangle-LR quads.
# ---------------------------------------------------------------------------


def pivotal_site_many(i8[:, ::1] colors, i32[::1] indptr, i32[::1] indices,
                      u8[::1] left, u8[::1] right, u8[::1] top_, u8[::1] bottom):
    cdef Py_ssize_t m = colors.shape[0]
    cdef Py_ssize_t n = colors.shape[1]
    out_np = np.zeros(m, dtype=np.int32)
    cdef i32[::1] out = out_np
    label_np = np.empty(n, dtype=np.int32)
    stack_np = np.empty(n, dtype=np.int32)
    fa_np = np.empty(n + 1, dtype=np.uint8)
    fb_np = np.empty(n + 1, dtype=np.uint8)
    cdef i32[::1] label = label_np
    cdef i32[::1] stack = stack_np
    cdef u8[::1] fa = fa_np
    cdef u8[::1] fb = fb_np
    cdef Py_ssize_t i, v, u, k, topq
    cdef i32 ncl, cid, count
    cdef i8 col
    cdef u8 crossing, hasA, hasB
    for i in range(m):
        # White clusters with left/right reach flags.
        for v in range(n):
            label[v] = -1
        ncl = 0
        for v in range(n):
            if colors[i, v] > 0 and label[v] < 0:
                cid = ncl
                ncl += 1
                fa[cid] = 0
                fb[cid] = 0
                label[v] = cid
                topq = 0
                stack[topq] = v
                topq += 1
                while topq > 0:
                    topq -= 1
                    u = stack[topq]
                    if left[u]:
                        fa[cid] = 1
                    if right[u]:
                        fb[cid] = 1
                    for k in range(indptr[u], indptr[u + 1]):
                        if colors[i, indices[k]] > 0 and label[indices[k]] < 0:
                            label[indices[k]] = cid
                            stack[topq] = indices[k]
                            topq += 1
        crossing = 0
        for cid in range(ncl):
            if fa[cid] and fb[cid]:
                crossing = 1
                break
        count = 0
        if not crossing:
            for v in range(n):
                if colors[i, v] > 0:
                    continue
                hasA = left[v]
                hasB = right[v]
                for k in range(indptr[v], indptr[v + 1]):
                    u = indices[k]
                    if label[u] >= 0:
                        if fa[label[u]]:
                            hasA = 1
                        if fb[label[u]]:
                            hasB = 1
                if hasA and hasB:
                    count += 1
        else:
            # Black clusters with top/bottom reach flags.
            for v in range(n):
                label[v] = -1
            ncl = 0
            for v in range(n):
                if colors[i, v] < 0 and label[v] < 0:
                    cid = ncl
                    ncl += 1
                    fa[cid] = 0
                    fb[cid] = 0
                    label[v] = cid
                    topq = 0
                    stack[topq] = v
                    topq += 1
                    while topq > 0:
                        topq -= 1
                        u = stack[topq]
                        if top_[u]:
                            fa[cid] = 1
                        if bottom[u]:
                            fb[cid] = 1
                        for k in range(indptr[u], indptr[u + 1]):
                            if colors[i, indices[k]] < 0 and label[indices[k]] < 0:
                                label[indices[k]] = cid
                                stack[topq] = indices[k]
                                topq += 1
            for v in range(n):
                if colors[i, v] < 0:
                    continue
                hasA = top_[v]
                hasB = bottom[v]
                for k in range(indptr[v], indptr[v + 1]):
                    u = indices[k]
                    if label[u] >= 0:
                        if fa[label[u]]:
                            hasA = 1
                        if fb[label[u]]:
                            hasB = 1
                if hasA and hasB:
                    count += 1
        out[i] = count
    return out_np


def pivotal_bond_many(i8[:, ::1] bits, i32 nv, i32[::1] vindptr,
                      i32[::1] vbit, i32[::1] vother,
                      u8[::1] src, u8[::1] dst,
                      i32[::1] eu, i32[::1] ev,
                      i32 nd, i32[::1] dindptr, i32[::1] dbit, i32[::1] dother,
                      i32[::1] du, i32[::1] dv,
                      u8[::1] dual_top, u8[::1] dual_bottom):
    cdef Py_ssize_t m = bits.shape[0]
    cdef Py_ssize_t ne = bits.shape[1]
    out_np = np.zeros(m, dtype=np.int32)
    cdef i32[::1] out = out_np
    cdef Py_ssize_t nmax = nv if nv > nd else nd
    label_np = np.empty(nmax, dtype=np.int32)
    stack_np = np.empty(nmax, dtype=np.int32)
    fa_np = np.empty(nmax + 1, dtype=np.uint8)
    fb_np = np.empty(nmax + 1, dtype=np.uint8)
    cdef i32[::1] label = label_np
    cdef i32[::1] stack = stack_np
    cdef u8[::1] fa = fa_np
    cdef u8[::1] fb = fb_np
    cdef Py_ssize_t i, v, u, k, topq, e
    cdef i32 ncl, cid, count, a, b
    cdef u8 crossing, hasA, hasB
    for i in range(m):
        for v in range(nv):
            label[v] = -1
        ncl = 0
        for v in range(nv):
            if label[v] < 0:
                cid = ncl
                ncl += 1
                fa[cid] = 0
                fb[cid] = 0
                label[v] = cid
                topq = 0
                stack[topq] = v
                topq += 1
                while topq > 0:
                    topq -= 1
                    u = stack[topq]
                    if src[u]:
                        fa[cid] = 1
                    if dst[u]:
                        fb[cid] = 1
                    for k in range(vindptr[u], vindptr[u + 1]):
                        if bits[i, vbit[k]] > 0 and label[vother[k]] < 0:
                            label[vother[k]] = cid
                            stack[topq] = vother[k]
                            topq += 1
        crossing = 0
        for cid in range(ncl):
            if fa[cid] and fb[cid]:
                crossing = 1
                break
        count = 0
        if not crossing:
            for e in range(ne):
                if bits[i, e] > 0:
                    continue
                a = label[eu[e]]
                b = label[ev[e]]
                if (fa[a] or fa[b]) and (fb[a] or fb[b]):
                    count += 1
        else:
            for v in range(nd):
                label[v] = -1
            ncl = 0
            for v in range(nd):
                if label[v] < 0:
                    cid = ncl
                    ncl += 1
                    fa[cid] = 0
                    fb[cid] = 0
                    label[v] = cid
                    topq = 0
                    stack[topq] = v
                    topq += 1
                    while topq > 0:
                        topq -= 1
                        u = stack[topq]
                        if dual_top[u]:
                            fa[cid] = 1
                        if dual_bottom[u]:
                            fb[cid] = 1
                        for k in range(dindptr[u], dindptr[u + 1]):
                            if bits[i, dbit[k]] < 0 and label[dother[k]] < 0:
                                label[dother[k]] = cid
                                stack[topq] = dother[k]
                                topq += 1
            for e in range(ne):
                if bits[i, e] < 0 or du[e] < 0:
                    continue
                a = label[du[e]]
                b = label[dv[e]]
                if (fa[a] or fa[b]) and (fb[a] or fb[b]):
                    count += 1
        out[i] = count
    return out_np


# ---------------------------------------------------------------------------
# Truth-table tabulation.
# ---------------------------------------------------------------------------


def tabulate_site(i32 nbits, i32[::1] indptr, i32[::1] indices,
                  u8[::1] src, u8[::1] dst):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t size = 1 << nbits
    out_np = np.zeros(size, dtype=np.int8)
    cdef i8[::1] out = out_np
    colors_np = np.empty(n, dtype=np.int8)
    visited_np = np.empty(n, dtype=np.uint8)
    stack_np = np.empty(n, dtype=np.int32)
    cdef i8[::1] colors = colors_np
    cdef u8[::1] visited = visited_np
    cdef i32[::1] stack = stack_np
    cdef Py_ssize_t mask, b, v, u, k, top
    cdef u8 hit
    for mask in range(size):
        for b in range(nbits):
            colors[b] = 1 if (mask >> b) & 1 else -1
        memset(&visited[0], 0, n)
        top = 0
        hit = 0
        for v in range(n):
            if src[v] and colors[v] > 0:
                visited[v] = 1
                stack[top] = v
                top += 1
        while top > 0 and not hit:
            top -= 1
            v = stack[top]
            if dst[v]:
                hit = 1
                break
            for k in range(indptr[v], indptr[v + 1]):
                u = indices[k]
                if not visited[u] and colors[u] > 0:
                    visited[u] = 1
                    stack[top] = u
                    top += 1
        out[mask] = hit
    return out_np


def tabulate_bond(i32 nbits, i32 nv, i32[::1] vindptr, i32[::1] vbit,
                  i32[::1] vother, u8[::1] src, u8[::1] dst):
    cdef Py_ssize_t size = 1 << nbits
    out_np = np.zeros(size, dtype=np.int8)
    cdef i8[::1] out = out_np
    bitsrow_np = np.empty(nbits, dtype=np.int8)
    visited_np = np.empty(nv, dtype=np.uint8)
    stack_np = np.empty(nv, dtype=np.int32)
    cdef i8[::1] row = bitsrow_np
    cdef u8[::1] visited = visited_np
    cdef i32[::1] stack = stack_np
    cdef Py_ssize_t mask, b, v, u, k, top
    cdef u8 hit
    for mask in range(size):
        for b in range(nbits):
            row[b] = 1 if (mask >> b) & 1 else -1
        memset(&visited[0], 0, nv)
        top = 0
        hit = 0
        for v in range(nv):
            if src[v]:
                visited[v] = 1
                stack[top] = v
                top += 1
        while top > 0 and not hit:
            top -= 1
            v = stack[top]
            if dst[v]:
                hit = 1
                break
            for k in range(vindptr[v], vindptr[v + 1]):
                if row[vbit[k]] > 0:
                    u = vother[k]
                    if not visited[u]:
                        visited[u] = 1
                        stack[top] = u
                        top += 1
        out[mask] = hit
    return out_np
