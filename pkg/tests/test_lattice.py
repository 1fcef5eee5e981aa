import numpy as np
import pytest

from spectralperc import lattice as L
from spectralperc import mc

from oracles import dfs_bond_crossing, dfs_crossing


def all_configs(n):
    masks = np.arange(1 << n, dtype=np.uint32)
    return ((masks[:, None] >> np.arange(n)[None, :]) & 1).astype(np.int8) * 2 - 1


def test_sample_configuration_deterministic():
    region = L.rect_region("tri", 4, 4)
    a = L.sample_configuration(region, 123)
    b = L.sample_configuration(region, 123)
    c = L.sample_configuration(region, 124)
    assert (a.bits == b.bits).all()
    assert (a.bits != c.bits).any()
    assert set(np.unique(a.bits)) <= {-1, 1}


def test_sample_mean_lln():
    # One bit over many draws: empirical mean within 4/sqrt(n) of 0.
    n_draws = 10**6
    rng = mc.chunk_rng(5, 0)
    bits = L.sample_bits(1, rng, n_draws)
    assert abs(bits.mean()) < 4 / np.sqrt(n_draws)


def test_adjacency_symmetric_and_degree():
    region = L.rect_region("tri", 5, 4)
    pairs = set()
    for v in range(region.bit_count):
        for k in range(region.indptr[v], region.indptr[v + 1]):
            pairs.add((v, int(region.indices[k])))
    for v, u in pairs:
        assert (u, v) in pairs
    degrees = np.diff(region.indptr)
    assert degrees.max() <= 6


@pytest.mark.parametrize(
    "lattice,w,h",
    [("tri", 3, 3), ("tri", 4, 3), ("z2", 2, 2)],
)
def test_crossing_matches_dfs_oracle_exhaustive(lattice, w, h):
    f = L.rect_lr_crossing(lattice, w, h)
    region = f.region
    n = region.bit_count
    bits = all_configs(n)
    got = f.evaluate_many(bits)
    if lattice == "tri":
        s = f._site_spec
        src = np.nonzero(s.src)[0]
        dst = np.nonzero(s.dst)[0]
        for m in range(1 << n):
            expect = dfs_crossing(bits[m], s.indptr, s.indices, src, dst)
            assert (got[m] > 0) == expect
    else:
        s = f._bond_spec
        src = np.nonzero(s.src)[0]
        dst = np.nonzero(s.dst)[0]
        for m in range(1 << n):
            expect = dfs_bond_crossing(
                bits[m], s.n_vertices, s.vindptr, s.vbit, s.vother, src, dst
            )
            assert (got[m] > 0) == expect


def test_crossing_trivial_values():
    for lattice in ("tri", "z2"):
        f = L.rect_lr_crossing(lattice, 3, 2)
        n = f.region.bit_count
        assert f(L.Configuration(f.region, np.ones(n, dtype=np.int8))) == 1
        assert f(L.Configuration(f.region, -np.ones(n, dtype=np.int8))) == -1
    fz = L.rect_lr_crossing("tri", 3, 2, L.ValueMode.ZERO_ONE)
    n = fz.region.bit_count
    assert fz(L.Configuration(fz.region, -np.ones(n, dtype=np.int8))) == 0


@pytest.mark.parametrize("lattice,w,h", [("tri", 3, 3), ("z2", 2, 2)])
def test_monotone_exhaustive(lattice, w, h):
    f = L.rect_lr_crossing(lattice, w, h)
    n = f.region.bit_count
    bits = all_configs(n)
    vals = f.evaluate_many(bits)
    for b in range(n):
        lo = np.nonzero(bits[:, b] == -1)[0]
        hi = lo + (1 << b)  # flipping bit b up
        assert (vals[hi] >= vals[lo]).all()


@pytest.mark.parametrize("lattice,w,h", [("tri", 3, 3), ("z2", 2, 2)])
def test_pivotal_set_matches_flip_oracle(lattice, w, h):
    f = L.rect_lr_crossing(lattice, w, h)
    n = f.region.bit_count
    rng = np.random.default_rng(0)
    for _ in range(40):
        bits = (rng.integers(0, 2, n, dtype=np.int8) * 2 - 1).astype(np.int8)
        omega = L.Configuration(f.region, bits)
        piv = set(L.pivotal_set(f, omega).tolist())
        expect = set()
        for b in range(n):
            up = bits.copy()
            dn = bits.copy()
            up[b] = 1
            dn[b] = -1
            if f(L.Configuration(f.region, up)) != f(L.Configuration(f.region, dn)):
                expect.add(b)
        assert piv == expect


def test_pivotal_single_bit_dictator():
    f = L.rect_lr_crossing("tri", 1, 1)
    for v in (-1, 1):
        omega = L.Configuration(f.region, np.array([v], dtype=np.int8))
        assert L.pivotal_set(f, omega).tolist() == [0]


def test_pivotal_all_white_wide_region_empty():
    # Two disjoint rows: no single site can disconnect the crossing.
    f = L.rect_lr_crossing("tri", 3, 2)
    omega = L.Configuration(f.region, np.ones(6, dtype=np.int8))
    assert len(L.pivotal_set(f, omega)) == 0


@pytest.mark.parametrize("lattice,w,h", [("tri", 3, 3), ("z2", 2, 2)])
def test_pivotal_count_kernel_matches_pivotal_set(lattice, w, h):
    f = L.rect_lr_crossing(lattice, w, h)
    n = f.region.bit_count
    bits = all_configs(n)
    counts = L.pivotal_count_many(f, bits)
    rng = np.random.default_rng(1)
    for m in rng.integers(0, 1 << n, size=80):
        omega = L.Configuration(f.region, bits[m])
        assert counts[m] == len(L.pivotal_set(f, omega))


def test_pivotal_count_kernel_exhaustive_tiny():
    f = L.rect_lr_crossing("tri", 2, 2)
    bits = all_configs(4)
    counts = L.pivotal_count_many(f, bits)
    for m in range(16):
        omega = L.Configuration(f.region, bits[m])
        assert counts[m] == len(L.pivotal_set(f, omega))


def test_pivotal_for_box():
    f = L.rect_lr_crossing("tri", 4, 4)
    n = f.region.bit_count
    rng = np.random.default_rng(2)
    omega = L.Configuration(f.region, L.sample_bits(n, mc.chunk_rng(0, 0), 1)[0])
    # Single bit agrees with pivotal_set membership.
    piv = set(L.pivotal_set(f, omega).tolist())
    for b in range(n):
        assert L.pivotal_for_box(f, omega, [b]) == (b in piv)
    # All bits: pivotal iff f non-constant (crossing functions always are).
    assert L.pivotal_for_box(f, omega, list(range(n)))
    with pytest.raises(ValueError):
        L.pivotal_for_box(f, omega, [])
    with pytest.raises(ValueError):
        L.pivotal_for_box(f, omega, [n + 3])


def test_pivotal_for_box_matches_definitional_oracle():
    # On a monotone function, box pivotality equals "exists omega' agreeing
    # off B with a different value", checked exhaustively on a 2x2 box in a
    # 4x4 quad.
    f = L.rect_lr_crossing("tri", 4, 4)
    region = f.region
    box = [b for b in range(16) if region.cols[b] in (1, 2) and region.rows[b] in (1, 2)]
    n = 16
    bits = all_configs(n)
    vals = f.evaluate_many(bits)
    box_mask = sum(1 << b for b in box)
    for m in range(0, 1 << n, 7):  # stride keeps runtime small; still 9k configs
        others = m & ~box_mask
        sub_vals = set()
        sub = box_mask
        while True:
            sub_vals.add(int(vals[others | sub]))
            if sub == 0:
                break
            sub = (sub - 1) & box_mask
        omega = L.Configuration(region, bits[m])
        assert L.pivotal_for_box(f, omega, box) == (len(sub_vals) > 1)


def test_color_flip_pivotal_size_invariance_transposed_arcs():
    # On the triangular parallelogram the left-right white crossing is the
    # exact complement of the top-bottom black crossing, so the pivotal set
    # is invariant under flipping every color and transposing the arcs.
    # The transposed-arc quad is the transposed parallelogram with axial
    # coordinates swapped (the six-neighbor stencil is symmetric under the
    # swap).  Exhaustive at 4x3.
    w, h = 4, 3
    f = L.rect_lr_crossing("tri", w, h)
    ft = L.rect_lr_crossing("tri", h, w)
    tmap = np.array(
        [c * h + r for r, c in zip(f.region.rows, f.region.cols)]
    )
    n = f.region.bit_count
    bits = all_configs(n)
    counts = L.pivotal_count_many(f, bits)
    flipped = np.empty_like(bits)
    flipped[:, tmap] = -bits
    counts_t = L.pivotal_count_many(ft, np.ascontiguousarray(flipped))
    assert (counts == counts_t).all()


def test_pivotal_count_kernel_exhaustive_bond():
    f = L.rect_lr_crossing("z2", 2, 2)
    bits = all_configs(12)
    counts = L.pivotal_count_many(f, bits)
    for m in range(0, 1 << 12, 5):
        omega = L.Configuration(f.region, bits[m])
        assert counts[m] == len(L.pivotal_set(f, omega))


def test_mismatched_region_rejected():
    f = L.rect_lr_crossing("tri", 3, 3)
    other = L.rect_region("tri", 2, 2)
    omega = L.Configuration(other, np.ones(4, dtype=np.int8))
    with pytest.raises(ValueError):
        L.evaluate_crossing(f, omega)


def test_empty_region_rejected():
    with pytest.raises(ValueError):
        L.rect_region("tri", 0, 3)


def test_annulus_bits_inside_outer_box():
    for lattice in ("tri", "z2"):
        reg = L.annulus_region(lattice, 2, 6)
        assert (np.abs(reg.centers) < 6 + 1).all()
        inner = (
            (reg.centers[:, 0] >= -2)
            & (reg.centers[:, 0] < 2)
            & (reg.centers[:, 1] >= -2)
            & (reg.centers[:, 1] < 2)
        )
        assert not inner.any()


def test_radial_crossing_modes():
    f = L.radial_crossing("tri", 1, 3, L.ValueMode.ZERO_ONE)
    n = f.region.bit_count
    assert f(L.Configuration(f.region, np.ones(n, dtype=np.int8))) == 1
    assert f(L.Configuration(f.region, -np.ones(n, dtype=np.int8))) == 0


def test_radial_crossing_bond_lattice():
    f = L.radial_crossing("z2", 1, 4, L.ValueMode.ZERO_ONE)
    n = f.region.bit_count
    assert f(L.Configuration(f.region, np.ones(n, dtype=np.int8))) == 1
    assert f(L.Configuration(f.region, -np.ones(n, dtype=np.int8))) == 0
    # Monotone in every bit on random configurations.
    rng = mc.chunk_rng(5, 0)
    bits = L.sample_bits(n, rng, 50)
    vals = f.evaluate_many(bits)
    for i in range(50):
        up = bits[i].copy()
        b = int(rng.integers(0, n))
        up[b] = 1
        assert f(L.Configuration(f.region, up)) >= vals[i]
