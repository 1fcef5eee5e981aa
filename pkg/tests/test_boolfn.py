import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectralperc import boolfn as B
from spectralperc import lattice as L


def test_tabulate_dictator_and_parity():
    assert B.dictator_table().values.tolist() == [-1.0, 1.0]
    assert B.parity_table(2).values.tolist() == [1.0, -1.0, -1.0, 1.0]


def test_tabulate_crossing_matches_direct_eval():
    f = L.rect_lr_crossing("tri", 3, 3)
    tab = B.tabulate(f)
    masks = np.arange(1 << 9, dtype=np.uint32)
    bits = ((masks[:, None] >> np.arange(9)[None, :]) & 1).astype(np.int8) * 2 - 1
    assert (tab.values == f.evaluate_many(bits)).all()


def test_tabulate_cap():
    f = L.rect_lr_crossing("tri", 6, 6)
    with pytest.raises(B.BitCapExceeded):
        B.tabulate(f)


def test_walsh_maj3():
    d = B.walsh_transform(B.majority3_table())
    expect = np.zeros(8)
    expect[[1, 2, 4]] = 0.5
    expect[7] = -0.5
    assert np.allclose(d.coeffs, expect, atol=1e-14)


def test_walsh_parity_and_constant():
    d = B.walsh_transform(B.parity_table(4))
    assert abs(d.coeffs[15] - 1.0) < 1e-14
    assert np.abs(np.delete(d.coeffs, 15)).max() < 1e-14
    dc = B.walsh_transform(B.TruthTable(3, np.ones(8)))
    assert abs(dc.coeffs[0] - 1.0) < 1e-14
    assert np.abs(dc.coeffs[1:]).max() < 1e-14


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_fwht_involution_and_parseval(n, seed):
    rng = np.random.default_rng(seed)
    vals = rng.normal(size=1 << n)
    back = B.fwht(B.fwht(vals)) / (1 << n)
    assert np.abs(back - vals).max() <= 1e-10 * max(1.0, np.abs(vals).max())
    d = B.walsh_transform(B.TruthTable(n, vals))
    assert abs(d.norm_sq - (vals**2).mean()) <= 1e-10 * max(1.0, (vals**2).mean())


def test_empty_coefficient_is_mean():
    f = L.rect_lr_crossing("z2", 2, 2)
    tab = B.tabulate(f)
    d = B.walsh_transform(tab)
    assert abs(d.coeffs[0] - tab.values.mean()) < 1e-12


def test_spectral_probability_maj3():
    d = B.walsh_transform(B.majority3_table())
    p1 = B.spectral_probability(d, predicate=lambda m: bin(m).count("1") == 1)
    p3 = B.spectral_probability(d, predicate=lambda m: bin(m).count("1") == 3)
    assert abs(p1 - 0.75) < 1e-12
    assert abs(p3 - 0.25) < 1e-12
    pe = B.spectral_probability(d, predicate=lambda m: m == 0)
    assert abs(pe - (d.coeffs[0] ** 2)) < 1e-12


def test_single_tile_identity_tiny_crossing():
    # P[x in S] equals the two-point pivotality probability, and the
    # singleton weight is its square, for every bit of a tiny monotone
    # crossing function.
    f = L.rect_lr_crossing("tri", 3, 3)
    tab = B.tabulate(f)
    d = B.walsh_transform(tab)
    per_bit = B.pivotal_probability_per_bit(tab)
    for x in range(9):
        p_in = B.spectral_bit_probability(d, x)
        assert abs(p_in - per_bit[x]) < 1e-12
        p_only = B.spectral_probability(d, predicate=lambda m: m == (1 << x))
        assert abs(p_only - p_in**2) < 1e-12


def test_moments_match_pivotal_exhaustively():
    for lattice, w, h in [("tri", 3, 3), ("tri", 4, 3), ("z2", 2, 2)]:
        f = L.rect_lr_crossing(lattice, w, h)
        tab = B.tabulate(f)
        d = B.walsh_transform(tab)
        s1, s2 = B.spectral_moments(d)
        p1, p2 = B.pivotal_moments_exact(tab)
        assert abs(s1 - p1) < 1e-10
        assert abs(s2 - p2) < 1e-10


def test_parity_moments():
    d = B.walsh_transform(B.parity_table(5))
    m1, m2 = B.spectral_moments(d)
    assert abs(m1 - 5) < 1e-12
    assert abs(m2 - 25) < 1e-12


def test_sample_spectral_dictator_and_determinism():
    d = B.walsh_transform(B.dictator_table())
    draws = B.sample_spectral(d, 1, 100)
    assert (draws == 1).all()
    a = B.sample_spectral(d, 7, 10)
    b = B.sample_spectral(d, 7, 10)
    assert (a == b).all()


def test_sample_spectral_maj3_frequencies():
    d = B.walsh_transform(B.majority3_table())
    n = 10**5
    draws = B.sample_spectral(d, 3, n)
    frac3 = (draws == 7).mean()
    sigma = math.sqrt(0.25 * 0.75 / n)
    assert abs(frac3 - 0.25) < 4 * sigma


def test_sample_spectral_empty_frequency_tiny_crossing():
    f = L.rect_lr_crossing("tri", 3, 2)
    d = B.walsh_transform(B.tabulate(f))
    p_empty = d.coeffs[0] ** 2 / d.norm_sq
    n = 10**5
    draws = B.sample_spectral(d, 11, n)
    frac = (draws == 0).mean()
    sigma = math.sqrt(max(p_empty * (1 - p_empty), 1e-12) / n)
    assert abs(frac - p_empty) <= 4 * sigma + 1e-12


def test_zero_function_rejected():
    d = B.SpectralDistribution(2, np.zeros(4))
    with pytest.raises(ValueError):
        B.sample_spectral(d, 0)


def test_restrict_and_project_edges():
    maj = B.majority3_table()
    g = B.restrict_and_project(maj, 0b111, 0)
    assert (g.values == maj.values).all()
    for y in range(8):
        g0 = B.restrict_and_project(maj, 0, y)
        assert g0.n == 0
        assert g0.values[0] == maj.values[y]


def test_lmn_maj3_single_bit():
    # Averaging the restricted singleton weights equals P[bit in S] = 1/2.
    direct, avg = B.lmn_marginal(B.majority3_table(), 0b001)
    assert np.allclose(direct, avg, atol=1e-12)
    assert abs(avg[1] - 0.5) < 1e-12


@pytest.mark.parametrize("lattice,w,h", [("tri", 3, 3), ("z2", 2, 2)])
def test_lmn_random_subsets(lattice, w, h):
    f = L.rect_lr_crossing(lattice, w, h)
    tab = B.tabulate(f)
    rng = np.random.default_rng(5)
    for _ in range(10):
        A = int(rng.integers(0, 1 << tab.n))
        direct, avg = B.lmn_marginal(tab, A)
        assert np.abs(direct - avg).max() < 1e-10


def test_laplace_identity_exact():
    f = L.rect_lr_crossing("tri", 3, 3)
    tab = B.tabulate(f)
    d = B.walsh_transform(tab)
    for eps in (0.1, 0.45, 0.9):
        assert (
            abs(B.noise_correlation_exact(d, eps) - B.noise_correlation_bruteforce(tab, eps))
            < 1e-10
        )


def test_coarse_statistics_basics():
    f = L.rect_lr_crossing("tri", 3, 3)
    grid = B.CoarseGrid(f.region, 1.5)
    size, diam, occ = B.coarse_statistics(0, grid, f.region.centers)
    assert size == 0 and diam == 0.0 and occ.sum() == 0
    size, diam, occ = B.coarse_statistics(1 << 4, grid, f.region.centers)
    assert size == 1 and diam == 0.0 and occ.sum() == 1


def test_coarse_distribution_exact_vs_sampled():
    f = L.rect_lr_crossing("tri", 3, 3)
    d = B.walsh_transform(B.tabulate(f))
    grid = B.CoarseGrid(f.region, 1.5)
    exact = B.coarse_size_distribution(d, grid)
    n = 10**5
    draws = B.sample_spectral(d, 17, n)
    counts = np.zeros(len(exact))
    for c in range(grid.n_cells):
        counts += 0  # placeholder keeps shape explicit
    sizes = np.zeros(n, dtype=np.int64)
    for c in range(grid.n_cells):
        sizes += (draws & int(grid.cell_masks[c])) != 0
    emp = np.bincount(sizes, minlength=len(exact)) / n
    for k, (pe, pm) in enumerate(zip(exact, emp)):
        sigma = math.sqrt(max(pe * (1 - pe), 1e-12) / n)
        assert abs(pe - pm) <= 4 * sigma + 1e-9, f"k={k}"


def test_entropy_examples():
    assert B.spectral_entropy(B.walsh_transform(B.dictator_table())) < 1e-12
    assert B.spectral_entropy(B.walsh_transform(B.parity_table(4))) < 1e-12
    ent = B.spectral_entropy(B.walsh_transform(B.majority3_table()))
    assert abs(ent - math.log(4)) < 1e-12


def test_export_import_roundtrip(tmp_path):
    f = L.rect_lr_crossing("tri", 3, 2)
    d = B.walsh_transform(B.tabulate(f))
    path = tmp_path / "spec.bin"
    B.export_binary(d, path)
    back = B.import_binary(path)
    assert back.n == d.n
    assert np.abs(back.coeffs - d.coeffs).max() == 0.0
    csv_path = tmp_path / "spec.csv"
    B.export_csv(d, csv_path)
    lines = csv_path.read_text().strip().split("\n")
    assert lines[0] == "mask,coefficient"
    assert len(lines) == (1 << d.n) + 1


def test_identity_suite_passes_tiny():
    checks = B.identity_suite(L.rect_lr_crossing("tri", 3, 3), seed=1)
    assert all(c["ok"] for c in checks)
