"""Finite lattice regions, percolation configurations, quads and crossing events.

Two lattices are supported:

* ``triangular-site``: site percolation on the triangular lattice, stored in
  axial coordinates.  Site ``(c, r)`` has tile (hexagon) center
  ``(c + r/2, r*sqrt(3)/2)`` and the six neighbors
  ``(c+-1, r), (c, r+-1), (c+1, r-1), (c-1, r+1)``.
* ``square-bond``: bond percolation on Z^2.  Bits are edges; the plane is
  tiled by half-unit squares: vertex tiles (always white), face tiles
  (always black) and edge tiles colored by the edge state.

A bit value of +1 means white/open, -1 black/closed.  All region/quad
objects are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

SQRT3_2 = math.sqrt(3.0) / 2.0

TRI_STENCIL = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1))


class LatticeKind(str, Enum):
    TRIANGULAR = "triangular-site"
    SQUARE_BOND = "square-bond"


class QuadShape(str, Enum):
    RECT_LR = "rectangle-LR"
    RADIAL = "radial-annulus"
    HALF_PLANE = "half-plane"
    QUARTER_PLANE = "quarter-plane"


class ValueMode(str, Enum):
    PLUS_MINUS_ONE = "plus-minus-one"
    ZERO_ONE = "zero-one"


class ClipKind(str, Enum):
    FULL = "full"
    HALF = "half-plane"
    QUARTER = "quarter-plane"


def tri_center(c, r):
    """Tile center of axial site (c, r)."""
    return (c + 0.5 * r, r * SQRT3_2)


def _csr_from_pairs(n, a, b):
    """Symmetric CSR adjacency from directed pair arrays (a[i] -> b[i])."""
    src = np.concatenate([a, b]).astype(np.int64)
    dst = np.concatenate([b, a]).astype(np.int64)
    order = np.argsort(src, kind="stable")
    src = src[order]
    dst = dst[order]
    indptr = np.zeros(n + 1, dtype=np.int32)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr.astype(np.int32), dst.astype(np.int32)


# --------------------------------------------------------------------------
# Node graphs used by the kernels.
# --------------------------------------------------------------------------


@dataclass
class SiteGraphSpec:
    """Crossing problem on a site graph: white path from src whites to dst whites."""

    indptr: np.ndarray
    indices: np.ndarray
    src: np.ndarray  # uint8 flags per node
    dst: np.ndarray


@dataclass
class BondGraphSpec:
    """Crossing problem on a bond graph: path through open edges between
    flagged vertex sets.  Vertices are always traversable."""

    n_vertices: int
    vindptr: np.ndarray  # CSR over vertices
    vbit: np.ndarray  # incident edge (bit) ids
    vother: np.ndarray  # opposite endpoint ids
    src: np.ndarray  # uint8 flags per vertex
    dst: np.ndarray


@dataclass
class PivotalSiteSpec:
    indptr: np.ndarray
    indices: np.ndarray
    left: np.ndarray
    right: np.ndarray
    top: np.ndarray
    bottom: np.ndarray


@dataclass
class PivotalBondSpec:
    primal: BondGraphSpec
    eu: np.ndarray  # primal endpoints per bit
    ev: np.ndarray
    n_dual: int
    dindptr: np.ndarray
    dbit: np.ndarray
    dother: np.ndarray
    du: np.ndarray  # dual endpoints per bit (-1 where the bit has no dual edge)
    dv: np.ndarray
    dual_top: np.ndarray  # uint8 flags per dual node
    dual_bottom: np.ndarray


# --------------------------------------------------------------------------
# Regions.
# --------------------------------------------------------------------------


class LatticeRegion:
    """A finite set of bits with canonical indexing and tile geometry.

    Attributes
    ----------
    kind : LatticeKind
    bit_count : int
    centers : float64[bit_count, 2], tile centers in plane coordinates.
    """

    kind: LatticeKind
    bit_count: int
    centers: np.ndarray

    def bit_ids(self):
        return np.arange(self.bit_count, dtype=np.int64)


class TriRectRegion(LatticeRegion):
    """w x h parallelogram of triangular sites, row-major bit order."""

    def __init__(self, width, height):
        if width < 1 or height < 1:
            raise ValueError("region must contain at least one site")
        self.kind = LatticeKind.TRIANGULAR
        self.width = width
        self.height = height
        self.bit_count = width * height
        cs, rs = np.meshgrid(np.arange(width), np.arange(height))
        cs = cs.ravel()
        rs = rs.ravel()
        self.cols = cs
        self.rows = rs
        self.centers = np.column_stack([cs + 0.5 * rs, rs * SQRT3_2])
        a, b = [], []
        idx = lambda c, r: r * width + c
        for dc, dr in TRI_STENCIL:
            nc, nr = cs + dc, rs + dr
            ok = (nc >= 0) & (nc < width) & (nr >= 0) & (nr < height)
            a.append(idx(cs[ok], rs[ok]))
            b.append(idx(nc[ok], nr[ok]))
        a = np.concatenate(a)
        b = np.concatenate(b)
        keep = a < b
        self.indptr, self.indices = _csr_from_pairs(self.bit_count, a[keep], b[keep])

    def describe(self):
        return {"lattice": "tri", "shape": "rect", "w": self.width, "h": self.height}


class BondRectRegion(LatticeRegion):
    """Rectangle of Z^2 bonds spanning width x height edges.

    Vertices form a (width+1) x (height+1) grid.  Bits are the horizontal
    edges (row-major), then the vertical edges (row-major).
    """

    def __init__(self, width, height):
        if width < 1 or height < 1:
            raise ValueError("region must span at least one edge each way")
        self.kind = LatticeKind.SQUARE_BOND
        self.width = width
        self.height = height
        w, h = width, height
        self.n_horizontal = w * (h + 1)
        self.n_vertical = (w + 1) * h
        self.bit_count = self.n_horizontal + self.n_vertical

        hx, hy = np.meshgrid(np.arange(w), np.arange(h + 1))
        vx, vy = np.meshgrid(np.arange(w + 1), np.arange(h))
        hx, hy, vx, vy = hx.ravel(), hy.ravel(), vx.ravel(), vy.ravel()
        self.centers = np.concatenate(
            [
                np.column_stack([hx + 0.5, hy.astype(float)]),
                np.column_stack([vx.astype(float), vy + 0.5]),
            ]
        )
        self.is_horizontal = np.zeros(self.bit_count, dtype=bool)
        self.is_horizontal[: self.n_horizontal] = True

        nv = (w + 1) * (h + 1)
        vid = lambda x, y: y * (w + 1) + x
        self.n_vertices = nv
        eu = np.concatenate([vid(hx, hy), vid(vx, vy)])
        ev = np.concatenate([vid(hx + 1, hy), vid(vx, vy + 1)])
        self.eu = eu.astype(np.int32)
        self.ev = ev.astype(np.int32)
        self.vindptr, self.vbit, self.vother = _vertex_incidence(nv, self.eu, self.ev)

        # Dual graph: inner faces + virtual top/bottom nodes.  Vertical edges
        # on the left/right boundary have no dual edge.
        nf = w * h
        self.n_dual = nf + 2
        self.DUAL_TOP = nf
        self.DUAL_BOTTOM = nf + 1
        fid = lambda x, y: y * w + x
        du = np.full(self.bit_count, -1, dtype=np.int32)
        dv = np.full(self.bit_count, -1, dtype=np.int32)
        hid = np.arange(self.n_horizontal)
        du[hid] = np.where(hy > 0, fid(hx, hy - 1), self.DUAL_BOTTOM)
        dv[hid] = np.where(hy < h, fid(hx, np.minimum(hy, h - 1)), self.DUAL_TOP)
        vid_bits = self.n_horizontal + np.arange(self.n_vertical)
        has_dual = (vx > 0) & (vx < w)
        du[vid_bits[has_dual]] = fid(vx[has_dual] - 1, vy[has_dual])
        dv[vid_bits[has_dual]] = fid(vx[has_dual], vy[has_dual])
        self.du, self.dv = du, dv
        mask = du >= 0
        self.dindptr, self.dbit, self.dother = _vertex_incidence(
            self.n_dual, du[mask], dv[mask], bit_ids=np.nonzero(mask)[0]
        )

    def describe(self):
        return {"lattice": "z2", "shape": "rect", "w": self.width, "h": self.height}


def _vertex_incidence(n, eu, ev, bit_ids=None):
    """CSR incidence over n vertices: (vindptr, vbit, vother)."""
    if bit_ids is None:
        bit_ids = np.arange(len(eu))
    src = np.concatenate([eu, ev]).astype(np.int64)
    bit = np.concatenate([bit_ids, bit_ids]).astype(np.int64)
    oth = np.concatenate([ev, eu]).astype(np.int64)
    order = np.argsort(src, kind="stable")
    src, bit, oth = src[order], bit[order], oth[order]
    indptr = np.zeros(n + 1, dtype=np.int32)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr.astype(np.int32), bit.astype(np.int32), oth.astype(np.int32)


def _in_box(x, y, half):
    return (x >= -half) & (x < half) & (y >= -half) & (y < half)


def _clip_ok(x, y, clip):
    if clip is ClipKind.FULL:
        return np.ones_like(x, dtype=bool)
    if clip is ClipKind.HALF:
        return y >= 0
    return (y >= 0) & (x >= 0)


class TriAnnulusRegion(LatticeRegion):
    """Triangular sites with tile centers in the box annulus
    ``[-R, R)^2 \\ [-r, r)^2`` (optionally clipped to the upper half plane
    or the first quadrant).  Bit order: sorted by (row, col)."""

    def __init__(self, r_inner, r_outer, clip=ClipKind.FULL):
        if r_outer <= 0:
            raise ValueError("outer radius must be positive")
        self.kind = LatticeKind.TRIANGULAR
        self.r_inner = float(r_inner)
        self.r_outer = float(r_outer)
        self.clip = clip
        R = self.r_outer
        rmax = int(math.floor(R / SQRT3_2)) + 1
        rr = np.arange(-rmax, rmax + 1)
        cmax = int(math.ceil(R + rmax / 2)) + 1
        cc = np.arange(-cmax, cmax + 1)
        C, Rw = np.meshgrid(cc, rr)
        C, Rw = C.ravel(), Rw.ravel()
        x = C + 0.5 * Rw
        y = Rw * SQRT3_2
        keep = _in_box(x, y, R) & ~_in_box(x, y, self.r_inner) & _clip_ok(x, y, clip)
        C, Rw, x, y = C[keep], Rw[keep], x[keep], y[keep]
        order = np.lexsort((C, Rw))
        self.cols = C[order]
        self.rows = Rw[order]
        self.centers = np.column_stack([x[order], y[order]])
        self.bit_count = len(self.cols)

        cmin, cspan = self.cols.min(), self.cols.max() - self.cols.min() + 1
        rmin, rspan = self.rows.min(), self.rows.max() - self.rows.min() + 1
        grid = np.full((rspan, cspan), -1, dtype=np.int32)
        grid[self.rows - rmin, self.cols - cmin] = np.arange(self.bit_count)

        a, b = [], []
        inner_touch = np.zeros(self.bit_count, dtype=np.uint8)
        outer_touch = np.zeros(self.bit_count, dtype=np.uint8)
        for dc, dr in TRI_STENCIL:
            nc, nr = self.cols + dc, self.rows + dr
            nx = nc + 0.5 * nr
            ny = nr * SQRT3_2
            inner_touch |= _in_box(nx, ny, self.r_inner).astype(np.uint8)
            outer_touch |= (~_in_box(nx, ny, R)).astype(np.uint8)
            ok = (
                (nc >= cmin)
                & (nc < cmin + cspan)
                & (nr >= rmin)
                & (nr < rmin + rspan)
            )
            nid = np.full(self.bit_count, -1, dtype=np.int32)
            nid[ok] = grid[nr[ok] - rmin, nc[ok] - cmin]
            sel = nid >= 0
            a.append(np.nonzero(sel)[0])
            b.append(nid[sel])
        a = np.concatenate(a)
        b = np.concatenate(b)
        keep = a < b
        self.indptr, self.indices = _csr_from_pairs(self.bit_count, a[keep], b[keep])
        self.inner_touch = inner_touch
        self.outer_touch = outer_touch
        self.walk = _boundary_walk(self.centers, inner_touch, clip)
        # Arm kernels see sites directly: node == bit.
        self.node_bit = np.arange(self.bit_count, dtype=np.int32)
        self.bit_node = np.arange(self.bit_count, dtype=np.int32)
        self.node_template = np.zeros(self.bit_count, dtype=np.int8)

    def describe(self):
        return {
            "lattice": "tri",
            "shape": "annulus",
            "r": self.r_inner,
            "R": self.r_outer,
            "clip": self.clip.value,
        }


class BondAnnulusRegion(LatticeRegion):
    """Z^2 edges with tile centers in the box annulus around a vertex.

    The arm/crossing machinery runs on the refined half-unit tile grid:
    vertex tiles (always white), face tiles (always black), edge tiles
    colored by their bit.  Refined tiles at doubled coordinates (i, j) have
    center (i/2, j/2); parity (even, even) = vertex, (odd, odd) = face,
    mixed = edge.
    """

    def __init__(self, r_inner, r_outer, clip=ClipKind.FULL):
        if r_outer <= 0:
            raise ValueError("outer radius must be positive")
        self.kind = LatticeKind.SQUARE_BOND
        self.r_inner = float(r_inner)
        self.r_outer = float(r_outer)
        self.clip = clip
        R = self.r_outer
        imax = int(math.ceil(2 * R)) + 1
        ii = np.arange(-imax, imax + 1)
        I, J = np.meshgrid(ii, ii)
        I, J = I.ravel(), J.ravel()
        x = I / 2.0
        y = J / 2.0
        keep = _in_box(x, y, R) & ~_in_box(x, y, self.r_inner) & _clip_ok(x, y, clip)
        I, J, x, y = I[keep], J[keep], x[keep], y[keep]
        order = np.lexsort((I, J))
        I, J, x, y = I[order], J[order], x[order], y[order]
        self.node_i = I
        self.node_j = J
        self.node_centers = np.column_stack([x, y])
        n_nodes = len(I)
        self.n_nodes = n_nodes

        even_i = I % 2 == 0
        even_j = J % 2 == 0
        is_vertex = even_i & even_j
        is_face = ~even_i & ~even_j
        is_edge = ~is_vertex & ~is_face
        self.node_template = np.where(
            is_vertex, 1, np.where(is_face, -1, 0)
        ).astype(np.int8)
        edge_nodes = np.nonzero(is_edge)[0]
        self.bit_count = len(edge_nodes)
        self.centers = self.node_centers[edge_nodes]
        self.is_horizontal = (~even_i & even_j)[edge_nodes]
        node_bit = np.full(n_nodes, -1, dtype=np.int32)
        node_bit[edge_nodes] = np.arange(self.bit_count)
        self.node_bit = node_bit
        self.bit_node = edge_nodes.astype(np.int32)

        imin, ispan = I.min(), I.max() - I.min() + 1
        jmin, jspan = J.min(), J.max() - J.min() + 1
        grid = np.full((jspan, ispan), -1, dtype=np.int32)
        grid[J - jmin, I - imin] = np.arange(n_nodes)

        a, b = [], []
        inner_touch = np.zeros(n_nodes, dtype=np.uint8)
        outer_touch = np.zeros(n_nodes, dtype=np.uint8)
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nI, nJ = I + di, J + dj
            nx, ny = nI / 2.0, nJ / 2.0
            inner_touch |= _in_box(nx, ny, self.r_inner).astype(np.uint8)
            outer_touch |= (~_in_box(nx, ny, R)).astype(np.uint8)
            ok = (
                (nI >= imin)
                & (nI < imin + ispan)
                & (nJ >= jmin)
                & (nJ < jmin + jspan)
            )
            nid = np.full(n_nodes, -1, dtype=np.int32)
            nid[ok] = grid[nJ[ok] - jmin, nI[ok] - imin]
            sel = nid >= 0
            a.append(np.nonzero(sel)[0])
            b.append(nid[sel])
        a = np.concatenate(a)
        b = np.concatenate(b)
        keep = a < b
        self.indptr, self.indices = _csr_from_pairs(n_nodes, a[keep], b[keep])
        self.inner_touch = inner_touch
        self.outer_touch = outer_touch
        self.walk = _boundary_walk(self.node_centers, inner_touch, clip)

    def describe(self):
        return {
            "lattice": "z2",
            "shape": "annulus",
            "r": self.r_inner,
            "R": self.r_outer,
            "clip": self.clip.value,
        }


def _boundary_walk(centers, inner_touch, clip):
    """Inner-boundary walk order: touching nodes sorted by angle about the
    center, lexicographic tie-break.  Cyclic for the full annulus, linear
    (one end of the clipped arc to the other) otherwise."""
    ids = np.nonzero(inner_touch)[0]
    if len(ids) == 0:
        raise ValueError("annulus has no inner-touching tiles; radii too small")
    x = centers[ids, 0]
    y = centers[ids, 1]
    ang = np.arctan2(y, x)
    if clip is not ClipKind.FULL:
        # Keep the walk within [0, pi]; nudge tiny negatives from rounding.
        ang = np.where(ang < -1e-12, ang + 2 * math.pi, ang)
    order = np.lexsort((ids, x, ang))
    return ids[order].astype(np.int32)


def norm_lattice(lattice):
    """Canonical short name ('tri' or 'z2') for any accepted lattice spelling."""
    if lattice in ("tri", LatticeKind.TRIANGULAR, LatticeKind.TRIANGULAR.value):
        return "tri"
    if lattice in ("z2", LatticeKind.SQUARE_BOND, LatticeKind.SQUARE_BOND.value):
        return "z2"
    raise ValueError(f"unknown lattice {lattice!r}")


def annulus_region(lattice, r_inner, r_outer, clip=ClipKind.FULL):
    if norm_lattice(lattice) == "tri":
        return TriAnnulusRegion(r_inner, r_outer, clip)
    return BondAnnulusRegion(r_inner, r_outer, clip)


def rect_region(lattice, width, height):
    if norm_lattice(lattice) == "tri":
        return TriRectRegion(width, height)
    return BondRectRegion(width, height)


# --------------------------------------------------------------------------
# Configurations.
# --------------------------------------------------------------------------


@dataclass
class Configuration:
    """An assignment of +-1 to every bit of a region."""

    region: LatticeRegion
    bits: np.ndarray

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.int8)
        if self.bits.shape != (self.region.bit_count,):
            raise ValueError("bit vector length does not match region")

    def flipped(self):
        return Configuration(self.region, -self.bits)


def sample_configuration(region, rng_seed):
    """Independent fair +-1 bits; deterministic given the seed."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(rng_seed)))
    bits = rng.integers(0, 2, size=region.bit_count, dtype=np.int8) * 2 - 1
    return Configuration(region, bits)


def sample_bits(region_or_n, rng, m):
    """m independent configurations as an (m, n) int8 matrix.

    Bits are unpacked from raw generator bytes, which is much faster than
    per-bit integer draws at Monte Carlo scale.
    """
    n = region_or_n if isinstance(region_or_n, int) else region_or_n.bit_count
    row_bytes = (n + 7) // 8
    raw = np.frombuffer(rng.bytes(m * row_bytes), dtype=np.uint8)
    unpacked = np.unpackbits(raw.reshape(m, row_bytes), axis=1, count=n)
    out = unpacked.astype(np.int8)
    out *= 2
    out -= 1
    return np.ascontiguousarray(out)


# --------------------------------------------------------------------------
# Quads and crossing functions.
# --------------------------------------------------------------------------


@dataclass
class Quad:
    region: LatticeRegion
    shape: QuadShape

    def __post_init__(self):
        if self.shape is QuadShape.RECT_LR:
            if not isinstance(self.region, (TriRectRegion, BondRectRegion)):
                raise ValueError("rectangle-LR quad needs a rectangle region")
        elif isinstance(self.region, (TriRectRegion, BondRectRegion)):
            raise ValueError(f"{self.shape.value} quad needs an annulus region")


class CrossingFunction:
    """Crossing indicator of a quad; monotone in the bits.

    ``plus-minus-one`` mode returns +-1, ``zero-one`` mode 0/1.
    """

    def __init__(self, quad, value_mode=ValueMode.PLUS_MINUS_ONE):
        self.quad = quad
        self.value_mode = ValueMode(value_mode)
        self.monotone = True
        self.region = quad.region
        self._site_spec = None
        self._bond_spec = None
        self._pivotal_site = None
        self._pivotal_bond = None
        self._build()

    # -- construction ------------------------------------------------------

    def _build(self):
        region = self.region
        if isinstance(region, TriRectRegion):
            left = (region.cols == 0).astype(np.uint8)
            right = (region.cols == region.width - 1).astype(np.uint8)
            top = (region.rows == region.height - 1).astype(np.uint8)
            bottom = (region.rows == 0).astype(np.uint8)
            self._site_spec = SiteGraphSpec(region.indptr, region.indices, left, right)
            self._pivotal_site = PivotalSiteSpec(
                region.indptr, region.indices, left, right, top, bottom
            )
        elif isinstance(region, BondRectRegion):
            nv = region.n_vertices
            vx = np.arange(nv) % (region.width + 1)
            left = (vx == 0).astype(np.uint8)
            right = (vx == region.width).astype(np.uint8)
            self._bond_spec = BondGraphSpec(
                nv, region.vindptr, region.vbit, region.vother, left, right
            )
            dual_top = np.zeros(region.n_dual, dtype=np.uint8)
            dual_bottom = np.zeros(region.n_dual, dtype=np.uint8)
            dual_top[region.DUAL_TOP] = 1
            dual_bottom[region.DUAL_BOTTOM] = 1
            self._pivotal_bond = PivotalBondSpec(
                self._bond_spec,
                region.eu,
                region.ev,
                region.n_dual,
                region.dindptr,
                region.dbit,
                region.dother,
                region.du,
                region.dv,
                dual_top,
                dual_bottom,
            )
        elif isinstance(region, TriAnnulusRegion):
            self._site_spec = SiteGraphSpec(
                region.indptr, region.indices, region.inner_touch, region.outer_touch
            )
        elif isinstance(region, BondAnnulusRegion):
            # Radial crossing on the refined tile grid: start from white
            # tiles touching the inner box, reach tiles touching the outside.
            self._site_spec = SiteGraphSpec(
                region.indptr, region.indices, region.inner_touch, region.outer_touch
            )
            self._refined = True
        else:  # pragma: no cover - defensive
            raise TypeError(f"unsupported region {type(region)}")

    def _node_colors_many(self, bits):
        """Per-row refined node colors for annulus bond regions."""
        region = self.region
        m = bits.shape[0]
        colors = np.broadcast_to(region.node_template, (m, region.n_nodes)).copy()
        colors[:, region.bit_node] = bits
        return colors

    # -- evaluation --------------------------------------------------------

    def evaluate_many(self, bits):
        """Vectorized crossing values for an (m, bit_count) int8 matrix."""
        from . import _backend as K

        bits = np.ascontiguousarray(bits, dtype=np.int8)
        if bits.ndim != 2 or bits.shape[1] != self.region.bit_count:
            raise ValueError("bit matrix does not match region")
        if self._bond_spec is not None:
            s = self._bond_spec
            out = K.crossing_bond_many(
                bits, s.n_vertices, s.vindptr, s.vbit, s.vother, s.src, s.dst
            )
        elif isinstance(self.region, BondAnnulusRegion):
            s = self._site_spec
            colors = self._node_colors_many(bits)
            out = K.crossing_site_many(colors, s.indptr, s.indices, s.src, s.dst)
        else:
            s = self._site_spec
            out = K.crossing_site_many(bits, s.indptr, s.indices, s.src, s.dst)
        if self.value_mode is ValueMode.PLUS_MINUS_ONE:
            return out.astype(np.int8) * 2 - 1
        return out.astype(np.int8)

    def __call__(self, omega):
        return int(self.evaluate_many(omega.bits[None, :])[0])


def evaluate_crossing(f, omega):
    """Crossing indicator of configuration ``omega`` in the mode of ``f``."""
    if omega.region is not f.region:
        raise ValueError("configuration region does not match crossing function")
    return f(omega)


# --------------------------------------------------------------------------
# Pivotality.
# --------------------------------------------------------------------------


def pivotal_set(f, omega):
    """Exact pivotal set of a monotone crossing function.

    Bit x is pivotal iff setting it white and black give different values;
    for monotone f this two-point test is complete.
    """
    if not f.monotone:
        raise ValueError("pivotal_set requires a monotone function")
    if omega.region is not f.region:
        raise ValueError("configuration region does not match crossing function")
    n = f.region.bit_count
    up = np.repeat(omega.bits[None, :], n, axis=0)
    dn = up.copy()
    up[np.arange(n), np.arange(n)] = 1
    dn[np.arange(n), np.arange(n)] = -1
    vu = f.evaluate_many(up)
    vd = f.evaluate_many(dn)
    return np.nonzero(vu != vd)[0]


def pivotal_for_box(f, omega, box_bits):
    """True iff making the box all-white vs all-black changes f (monotone)."""
    if not f.monotone:
        raise ValueError("pivotal_for_box requires a monotone function")
    box_bits = np.asarray(box_bits, dtype=np.int64)
    if len(box_bits) == 0:
        raise ValueError("box must be nonempty")
    if box_bits.min() < 0 or box_bits.max() >= f.region.bit_count:
        raise ValueError("box not within region")
    up = omega.bits.copy()
    dn = omega.bits.copy()
    up[box_bits] = 1
    dn[box_bits] = -1
    pair = np.stack([up, dn])
    vals = f.evaluate_many(pair)
    return bool(vals[0] != vals[1])


def pivotal_count_many(f, bits):
    """Pivotal-set sizes for rectangle-LR quads, one per configuration row.

    Uses primal/dual cluster labeling (a flipped bit is pivotal iff the
    clusters around it span the relevant pair of arcs), which matches the
    two-point substitution test bit for bit.
    """
    from . import _backend as K

    bits = np.ascontiguousarray(bits, dtype=np.int8)
    if f._pivotal_site is not None:
        s = f._pivotal_site
        return K.pivotal_site_many(
            bits, s.indptr, s.indices, s.left, s.right, s.top, s.bottom
        )
    if f._pivotal_bond is not None:
        s = f._pivotal_bond
        return K.pivotal_bond_many(
            bits,
            s.primal.n_vertices,
            s.primal.vindptr,
            s.primal.vbit,
            s.primal.vother,
            s.primal.src,
            s.primal.dst,
            s.eu,
            s.ev,
            s.n_dual,
            s.dindptr,
            s.dbit,
            s.dother,
            s.du,
            s.dv,
            s.dual_top,
            s.dual_bottom,
        )
    raise ValueError("fast pivotal counting is only built for rectangle-LR quads")


def rect_lr_crossing(lattice, width, height, value_mode=ValueMode.PLUS_MINUS_ONE):
    """Left-right crossing function of a width x height rectangle quad."""
    region = rect_region(lattice, width, height)
    f = CrossingFunction(Quad(region, QuadShape.RECT_LR), value_mode)
    f.factory_spec = ("rect", norm_lattice(lattice), width, height, ValueMode(value_mode))
    return f


def radial_crossing(lattice, r_inner, r_outer, value_mode=ValueMode.ZERO_ONE):
    """Crossing from the inner box boundary to the outer box boundary."""
    region = annulus_region(lattice, r_inner, r_outer)
    f = CrossingFunction(Quad(region, QuadShape.RADIAL), value_mode)
    f.factory_spec = (
        "radial",
        norm_lattice(lattice),
        r_inner,
        r_outer,
        ValueMode(value_mode),
    )
    return f
