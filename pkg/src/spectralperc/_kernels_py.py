"""Pure-Python reference implementation of the hot kernels.

Selected at import time when the compiled extension is unavailable; also the
correctness reference the compiled kernels are tested against.  Same
signatures and semantics as ``_kernels.pyx``, written for clarity over speed.
"""

from __future__ import annotations

import numpy as np


def _bfs_site(colors, indptr, indices, seeds, blocked=-2):
    """Visit the white component(s) containing the white seed nodes."""
    n = len(colors)
    visited = np.zeros(n, dtype=bool)
    stack = [s for s in seeds if colors[s] > 0]
    for s in stack:
        visited[s] = True
    while stack:
        v = stack.pop()
        for k in range(indptr[v], indptr[v + 1]):
            u = indices[k]
            if not visited[u] and colors[u] > 0:
                visited[u] = True
                stack.append(u)
    return visited


def crossing_site_many(colors, indptr, indices, src, dst):
    colors = np.asarray(colors)
    m = colors.shape[0]
    out = np.zeros(m, dtype=np.uint8)
    seeds = np.nonzero(src)[0]
    dst_ids = np.nonzero(dst)[0]
    for i in range(m):
        visited = _bfs_site(colors[i], indptr, indices, seeds)
        out[i] = 1 if visited[dst_ids].any() else 0
    return out


def crossing_bond_many(bits, nv, vindptr, vbit, vother, src, dst):
    bits = np.asarray(bits)
    m = bits.shape[0]
    out = np.zeros(m, dtype=np.uint8)
    seeds = np.nonzero(src)[0]
    for i in range(m):
        row = bits[i]
        visited = np.zeros(nv, dtype=bool)
        stack = list(seeds)
        visited[seeds] = True
        hit = False
        while stack:
            v = stack.pop()
            if dst[v]:
                hit = True
                break
            for k in range(vindptr[v], vindptr[v + 1]):
                if row[vbit[k]] > 0:
                    u = vother[k]
                    if not visited[u]:
                        visited[u] = True
                        stack.append(u)
        out[i] = 1 if hit else 0
    return out


def _label_from_seeds(colors, indptr, indices, seeds, outer):
    """Label same-color components containing the seeds.

    Returns (label array, list of (color, reaches_outer) per cluster).
    """
    n = len(colors)
    label = np.full(n, -1, dtype=np.int64)
    clusters = []
    for s in seeds:
        if label[s] >= 0:
            continue
        cid = len(clusters)
        col = colors[s]
        reach = bool(outer[s])
        label[s] = cid
        stack = [s]
        while stack:
            v = stack.pop()
            for k in range(indptr[v], indptr[v + 1]):
                u = indices[k]
                if label[u] < 0 and colors[u] == col:
                    label[u] = cid
                    if outer[u]:
                        reach = True
                    stack.append(u)
        clusters.append([col, reach])
    return label, clusters


def _cluster_crosses(colors, indptr, indices, label, cid, inner, outer, skip=-1):
    """Does cluster cid still connect inner to outer when node ``skip`` is removed?"""
    n = len(colors)
    visited = np.zeros(n, dtype=bool)
    stack = [
        v
        for v in range(n)
        if label[v] == cid and inner[v] and v != skip
    ]
    for v in stack:
        visited[v] = True
    while stack:
        v = stack.pop()
        if outer[v]:
            return True
        for k in range(indptr[v], indptr[v + 1]):
            u = indices[k]
            if label[u] == cid and not visited[u] and u != skip:
                visited[u] = True
                stack.append(u)
    return False


def _find_crossing_path(indptr, indices, label, cid, inner, outer):
    """One inner->outer path within the cluster (list of nodes), or None."""
    n = len(label)
    parent = np.full(n, -3, dtype=np.int64)
    queue = [v for v in range(n) if label[v] == cid and inner[v]]
    for v in queue:
        parent[v] = -1
    head = 0
    while head < len(queue):
        v = queue[head]
        head += 1
        if outer[v]:
            path = [v]
            while parent[v] != -1:
                v = parent[v]
                path.append(v)
            return path
        for k in range(indptr[v], indptr[v + 1]):
            u = indices[k]
            if label[u] == cid and parent[u] == -3:
                parent[u] = v
                queue.append(u)
    return None


def _white_double_crossing(colors, indptr, indices, label, clusters, inner, outer):
    """Some white crossing cluster supports two node-disjoint crossings."""
    for cid, (col, reach) in enumerate(clusters):
        if col <= 0 or not reach:
            continue
        path = _find_crossing_path(indptr, indices, label, cid, inner, outer)
        if path is None:
            continue
        if all(
            _cluster_crosses(colors, indptr, indices, label, cid, inner, outer, skip=v)
            for v in path
        ):
            return True
    return False


def arm_summary_many(
    bits, template, bit_node, indptr, indices, inner, outer, walk, cyclic, mult_cc
):
    """Crossing-cluster word summary per configuration.

    Returns ``(summary, wmult)`` where summary[i] is
    ``[n_white_cross, n_black_cross, cc_or_runs, max_white_run, first, last]``:
    color-change count around the cyclic word (full annuli) or the number of
    runs in the linear word (half/quarter), plus the word's end colors
    (linear only).  wmult[i] is 1 when some white crossing cluster admits two
    node-disjoint crossings; it is only computed when the change count
    equals ``mult_cc`` and no white run has length >= 2.
    """
    bits = np.asarray(bits)
    m = bits.shape[0]
    nn = len(template)
    summary = np.zeros((m, 6), dtype=np.int32)
    wmult = np.zeros(m, dtype=np.uint8)
    walk = np.asarray(walk)
    for i in range(m):
        colors = template.copy()
        colors[bit_node] = bits[i]
        label, clusters = _label_from_seeds(colors, indptr, indices, walk, outer)
        word = []
        for v in walk:
            cid = label[v]
            if cid >= 0 and clusters[cid][1]:
                if not word or word[-1] != cid:
                    word.append(cid)
        if cyclic and len(word) > 1 and word[0] == word[-1]:
            word.pop()
        if len(set(word)) != len(word):
            raise RuntimeError("interleaved crossing clusters in boundary walk")
        wcol = [1 if clusters[cid][0] > 0 else -1 for cid in word]
        n_w = sum(1 for c in wcol if c > 0)
        n_b = len(wcol) - n_w
        L = len(wcol)
        if cyclic:
            cc = sum(1 for k in range(L) if wcol[k] != wcol[(k + 1) % L]) if L > 1 else 0
            max_w_run = _max_cyclic_run(wcol, 1)
            summary[i] = (n_w, n_b, cc, max_w_run, 0, 0)
            if (
                mult_cc > 0
                and cc == mult_cc
                and max_w_run < 2
                and n_w >= 1
            ):
                wmult[i] = _white_double_crossing(
                    colors, indptr, indices, label, clusters, inner, outer
                )
        else:
            runs = 0
            prev = 0
            for c in wcol:
                if c != prev:
                    runs += 1
                    prev = c
            first = wcol[0] if wcol else 0
            last = wcol[-1] if wcol else 0
            summary[i] = (n_w, n_b, runs, 0, first, last)
    return summary, wmult


def _max_cyclic_run(wcol, value):
    L = len(wcol)
    if L == 0:
        return 0
    if all(c == value for c in wcol):
        return L
    best = cur = 0
    for c in wcol + wcol:  # doubling handles the wrap
        if c == value:
            cur += 1
            best = max(best, min(cur, L))
        else:
            cur = 0
    return best


def pivotal_site_many(colors, indptr, indices, left, right, top, bottom):
    colors = np.asarray(colors)
    m, n = colors.shape
    out = np.zeros(m, dtype=np.int32)
    for i in range(m):
        row = colors[i]
        out[i] = _pivotal_site_one(row, indptr, indices, left, right, top, bottom)
    return out


def _label_all(row, indptr, indices, color):
    n = len(row)
    label = np.full(n, -1, dtype=np.int64)
    ncl = 0
    for s in range(n):
        if row[s] != color or label[s] >= 0:
            continue
        label[s] = ncl
        stack = [s]
        while stack:
            v = stack.pop()
            for k in range(indptr[v], indptr[v + 1]):
                u = indices[k]
                if label[u] < 0 and row[u] == color:
                    label[u] = ncl
                    stack.append(u)
        ncl += 1
    return label, ncl


def _pivotal_site_one(row, indptr, indices, left, right, top, bottom):
    n = len(row)
    wl, nw = _label_all(row, indptr, indices, 1)
    wL = np.zeros(nw, dtype=bool)
    wR = np.zeros(nw, dtype=bool)
    for v in range(n):
        if wl[v] >= 0:
            if left[v]:
                wL[wl[v]] = True
            if right[v]:
                wR[wl[v]] = True
    crossing = bool(np.any(wL & wR))
    count = 0
    if not crossing:
        for x in range(n):
            if row[x] > 0:
                continue
            hasL = bool(left[x])
            hasR = bool(right[x])
            for k in range(indptr[x], indptr[x + 1]):
                u = indices[k]
                if wl[u] >= 0:
                    hasL = hasL or wL[wl[u]]
                    hasR = hasR or wR[wl[u]]
            if hasL and hasR:
                count += 1
    else:
        bl, nb = _label_all(row, indptr, indices, -1)
        bT = np.zeros(nb, dtype=bool)
        bB = np.zeros(nb, dtype=bool)
        for v in range(n):
            if bl[v] >= 0:
                if top[v]:
                    bT[bl[v]] = True
                if bottom[v]:
                    bB[bl[v]] = True
        for x in range(n):
            if row[x] < 0:
                continue
            hasT = bool(top[x])
            hasB = bool(bottom[x])
            for k in range(indptr[x], indptr[x + 1]):
                u = indices[k]
                if bl[u] >= 0:
                    hasT = hasT or bT[bl[u]]
                    hasB = hasB or bB[bl[u]]
            if hasT and hasB:
                count += 1
    return count


def pivotal_bond_many(
    bits,
    nv,
    vindptr,
    vbit,
    vother,
    src,
    dst,
    eu,
    ev,
    nd,
    dindptr,
    dbit,
    dother,
    du,
    dv,
    dual_top,
    dual_bottom,
):
    bits = np.asarray(bits)
    m, ne = bits.shape
    out = np.zeros(m, dtype=np.int32)
    for i in range(m):
        row = bits[i]
        vlabel, nclv = _label_bond(row, nv, vindptr, vbit, vother, open_edges=True)
        cL = np.zeros(nclv, dtype=bool)
        cR = np.zeros(nclv, dtype=bool)
        for v in range(nv):
            if src[v]:
                cL[vlabel[v]] = True
            if dst[v]:
                cR[vlabel[v]] = True
        crossing = bool(np.any(cL & cR))
        count = 0
        if not crossing:
            for e in range(ne):
                if row[e] > 0:
                    continue
                a, b = vlabel[eu[e]], vlabel[ev[e]]
                if (cL[a] or cL[b]) and (cR[a] or cR[b]):
                    count += 1
        else:
            dlabel, ncld = _label_bond(
                row, nd, dindptr, dbit, dother, open_edges=False
            )
            cT = np.zeros(ncld, dtype=bool)
            cB = np.zeros(ncld, dtype=bool)
            for v in range(nd):
                if dual_top[v]:
                    cT[dlabel[v]] = True
                if dual_bottom[v]:
                    cB[dlabel[v]] = True
            for e in range(ne):
                if row[e] < 0 or du[e] < 0:
                    continue
                a, b = dlabel[du[e]], dlabel[dv[e]]
                if (cT[a] or cT[b]) and (cB[a] or cB[b]):
                    count += 1
        out[i] = count
    return out


def _label_bond(row, nv, vindptr, vbit, vother, open_edges):
    label = np.full(nv, -1, dtype=np.int64)
    ncl = 0
    for s in range(nv):
        if label[s] >= 0:
            continue
        label[s] = ncl
        stack = [s]
        while stack:
            v = stack.pop()
            for k in range(vindptr[v], vindptr[v + 1]):
                passable = row[vbit[k]] > 0 if open_edges else row[vbit[k]] < 0
                if passable:
                    u = vother[k]
                    if label[u] < 0:
                        label[u] = ncl
                        stack.append(u)
        ncl += 1
    return label, ncl


def tabulate_site(nbits, indptr, indices, src, dst):
    out = np.zeros(1 << nbits, dtype=np.int8)
    colors = np.empty(nbits, dtype=np.int8)
    seeds = np.nonzero(src)[0]
    dst_ids = np.nonzero(dst)[0]
    for mask in range(1 << nbits):
        for b in range(nbits):
            colors[b] = 1 if (mask >> b) & 1 else -1
        visited = _bfs_site(colors, indptr, indices, seeds)
        out[mask] = 1 if visited[dst_ids].any() else 0
    return out


def tabulate_bond(nbits, nv, vindptr, vbit, vother, src, dst):
    out = np.zeros(1 << nbits, dtype=np.int8)
    row = np.empty(nbits, dtype=np.int8)
    for mask in range(1 << nbits):
        for b in range(nbits):
            row[b] = 1 if (mask >> b) & 1 else -1
        out[mask] = crossing_bond_many(
            row[None, :], nv, vindptr, vbit, vother, src, dst
        )[0]
    return out
