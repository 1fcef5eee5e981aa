import numpy as np
import pytest

from spectralperc import boolfn as B
from spectralperc import coupled as C
from spectralperc import lattice as L


@pytest.fixture(scope="module")
def tiny():
    f = L.rect_lr_crossing("tri", 3, 3)
    tab = B.tabulate(f)
    dist = B.walsh_transform(tab)
    return f, tab, dist


def test_sample_coupled_edges():
    region = L.rect_region("tri", 3, 3)
    pair = C.sample_coupled(region, 0, 4)
    assert (pair.omega_prime.bits == pair.omega_second.bits).all()
    pair = C.sample_coupled(region, (1 << 9) - 1, 4)
    assert (pair.omega_prime.bits != pair.omega_second.bits).any()


def test_sample_coupled_correlations():
    region = L.rect_region("tri", 2, 2)
    W = [0, 2]
    n = 20000
    from spectralperc import mc

    rng = mc.chunk_rng(8, 0)
    a, b = C._coupled_pair_bits(rng, 4, C.as_flag(W, 4), n)
    assert (a[:, 1] == b[:, 1]).all() and (a[:, 3] == b[:, 3]).all()
    corr = (a[:, 0].astype(float) * b[:, 0]).mean()
    assert abs(corr) < 4 / np.sqrt(n)


def test_estimate_S_subset_edges(tiny):
    f, tab, dist = tiny
    full = (1 << 9) - 1
    est = C.estimate_S_subset(f, full, 3000, 1)
    assert est.value == 1.0  # f is +-1-valued, so E[f^2] = 1 exactly
    est0 = C.estimate_S_subset(f, 0, 30000, 1)
    expect = float(tab.values.mean()) ** 2
    assert abs(est0.value - expect) <= 4 * est0.stderr + 1e-9


def test_estimate_S_subset_matches_exact(tiny):
    f, tab, dist = tiny
    rng = np.random.default_rng(2)
    for _ in range(5):
        A = int(rng.integers(0, 1 << 9))
        exact = B.q_subset_of(dist, A)
        est = C.estimate_S_subset(f, A, 60000, int(rng.integers(1 << 30)))
        assert abs(est.value - exact) <= 4 * est.stderr


def test_sba_estimator(tiny):
    f, tab, dist = tiny
    full = (1 << 9) - 1
    est = C.estimate_S_hits_B_avoids_W(f, full, 0, 50000, 3)
    expect = B.q_hits_B_avoids_W(dist, full, 0)
    mean_f = float(tab.values.mean())
    assert abs(expect - (1.0 - mean_f**2)) < 1e-12
    assert abs(est.value - expect) <= 4 * est.stderr
    rng = np.random.default_rng(4)
    for _ in range(4):
        Bm = int(rng.integers(1, 1 << 9))
        Wm = int(rng.integers(0, 1 << 9)) & ~Bm
        exact = B.q_hits_B_avoids_W(dist, Bm, Wm)
        est = C.estimate_S_hits_B_avoids_W(f, Bm, Wm, 60000, int(rng.integers(1 << 30)))
        assert abs(est.value - exact) <= 4 * est.stderr
    with pytest.raises(ValueError):
        C.estimate_S_hits_B_avoids_W(f, 3, 1, 100, 0)


def test_sba_bounded_by_lambda(tiny):
    f, tab, dist = tiny
    rng = np.random.default_rng(6)
    for _ in range(4):
        Bm = int(rng.integers(1, 1 << 9))
        Wm = int(rng.integers(0, 1 << 9)) & ~Bm
        sba = B.q_hits_B_avoids_W(dist, Bm, Wm)
        lam = C.lambda_sq_exact(tab, Bm, Wm)
        assert sba <= 4.0 * lam + 1e-12


def test_lambda_sq_exact_identities(tiny):
    f, tab, dist = tiny
    Bm = 0b000011011
    idx = np.arange(1 << 9)
    p_lam = float((tab.values[idx | Bm] != tab.values[idx & ~Bm]).mean())
    assert abs(C.lambda_sq_exact(tab, Bm, 0) - p_lam) < 1e-12
    Wc = ((1 << 9) - 1) & ~Bm
    assert abs(C.lambda_sq_exact(tab, Bm, Wc) - p_lam**2) < 1e-12


def test_lambda_sq_mc_matches_exact(tiny):
    f, tab, dist = tiny
    rng = np.random.default_rng(7)
    for _ in range(4):
        Bm = int(rng.integers(1, 1 << 9))
        Wm = int(rng.integers(0, 1 << 9)) & ~Bm
        exact = C.lambda_sq_exact(tab, Bm, Wm)
        est = C.estimate_lambda_sq(f, Bm, Wm, 60000, int(rng.integers(1 << 30)))
        assert abs(est.value - exact) <= 4 * est.stderr + 1e-9


def test_lambda_sq_empty_W_equals_direct_pivotality_stream(tiny):
    # With no resample set the coupled pair collapses, so the estimator's
    # replicas are exactly the single-configuration box-pivotality events.
    f, tab, dist = tiny
    Bm = 0b000010010
    n = 9
    est = C.estimate_lambda_sq(f, Bm, 0, 5000, 31)
    from spectralperc import mc

    bf = C.as_flag(Bm, n)
    wf = np.zeros(n, dtype=bool)
    hits = 0
    for ci, m in enumerate(mc.chunk_sizes(5000)):
        rng = mc.chunk_rng(31, ci)
        a, b = C._coupled_pair_bits(rng, n, wf, m)
        assert (a == b).all()
        hits += int(C._box_pivotal_many(f, a, bf).sum())
    assert est.value == hits / 5000


def test_lambda_twopoint_requires_monotone(tiny):
    f, _, _ = tiny
    f_not = L.rect_lr_crossing("tri", 3, 3)
    f_not.monotone = False
    with pytest.raises(ValueError):
        C.estimate_lambda_sq(f_not, 1, 0, 100, 0)


def test_x_in_S_avoids_W_equals_lambda_for_single_bit(tiny):
    # Exact single-bit identity for monotone +-1 functions.
    f, tab, dist = tiny
    rng = np.random.default_rng(8)
    for _ in range(6):
        x = int(rng.integers(0, 9))
        Wm = int(rng.integers(0, 1 << 9)) & ~(1 << x)
        a = C.x_in_S_avoids_W_exact(dist, x, Wm)
        b = C.lambda_sq_exact(tab, 1 << x, Wm)
        assert abs(a - b) < 1e-12


def test_monotone_coupling_exact(tiny):
    # Enlarging W shrinks the subset weight (complement shrinks).
    f, tab, dist = tiny
    rng = np.random.default_rng(9)
    full = (1 << 9) - 1
    for _ in range(6):
        W1 = int(rng.integers(0, 1 << 9))
        W2 = W1 | int(rng.integers(0, 1 << 9))
        q1 = B.q_subset_of(dist, full & ~W1)
        q2 = B.q_subset_of(dist, full & ~W2)
        assert q2 <= q1 + 1e-12


def test_beta_reduces_to_alpha_for_empty_W():
    from spectralperc import arms

    est_b = C.estimate_beta("tri", 4, 0, 1, 5, 20000, 12)
    est_a = arms.estimate_alpha(arms.ArmSpec("tri", 4, 1, 5), 20000, 21)
    sig = np.hypot(est_b.stderr, est_a.stderr)
    assert abs(est_b.value - est_a.value) <= 4 * sig


def test_beta_full_W_squares_alpha():
    from spectralperc import arms

    region = L.annulus_region("tri", 1, 5)
    W = np.ones(region.bit_count, dtype=bool)
    est_b = C.estimate_beta("tri", 4, W, 1, 5, 40000, 13)
    est_a = arms.estimate_alpha(arms.ArmSpec("tri", 4, 1, 5), 40000, 31)
    sig = np.hypot(est_b.stderr, 2 * est_a.value * est_a.stderr)
    assert abs(est_b.value - est_a.value**2) <= 4 * sig


def test_beta_monotone_in_W():
    # Bigger resample sets decorrelate more: beta decreases.
    region = L.annulus_region("tri", 1, 5)
    n = region.bit_count
    rng = np.random.default_rng(3)
    w_small = rng.random(n) < 0.2
    w_big = w_small | (rng.random(n) < 0.4)
    b_small = C.estimate_beta("tri", 4, w_small, 1, 5, 40000, 17)
    b_big = C.estimate_beta("tri", 4, w_big, 1, 5, 40000, 18)
    sig = np.hypot(b_small.stderr, b_big.stderr)
    assert b_big.value <= b_small.value + 4 * sig


def test_beta_per_replica_supermultiplicativity():
    events = C.beta_both_events_chunked(
        "tri", 4, 0, [(1, 4), (4, 16), (1, 16)], 3000, 19
    )
    # event over the big annulus implies both sub-events, replica by replica
    assert (events[:, 2] <= events[:, 0] * events[:, 1]).all()


def test_box_window_and_thinning(tiny):
    f, tab, dist = tiny
    win = C.BoxWindow(f.region, (1.5, 0.9), 1.5)
    assert len(win.B) > 0 and len(win.B_prime) > 0
    res = C.thinning_experiment(dist, win, 0.7, 50000, 23)
    assert res["n_conditioned"] > 100
    lo, hi = res["wilson"]
    # 2-sigma Wilson interval + slack must cover the exact value
    assert lo - 0.02 <= res["exact"] <= hi + 0.02
    assert res["value"] > 0

    # density extremes
    res0 = C.thinning_experiment(dist, win, 0.0, 2000, 5)
    assert res0["value"] == 0.0 and res0["exact"] == 0.0
    res1 = C.thinning_experiment(dist, win, 1.0, 2000, 5)
    # with density 1 the hit happens iff S meets B'; exact may be < 1, but
    # if B' covers B the conditional probability is exactly 1
    win_full = C.BoxWindow(f.region, (1.5, 0.9), 4.5)
    # B' of radius 1.5 = the earlier B; make a window whose B' contains all
    # bits so conditioning implies a hit
    if len(win_full.B_prime) == f.region.bit_count:
        r2 = C.thinning_experiment(dist, win_full, 1.0, 2000, 5)
        assert r2["value"] == 1.0


def test_thinning_invalid_density(tiny):
    f, tab, dist = tiny
    win = C.BoxWindow(f.region, (1.5, 0.9), 1.5)
    with pytest.raises(ValueError):
        C.thinning_experiment(dist, win, 1.5, 100, 0)


def test_box_window_rejects_overlapping_W(tiny):
    f, _, _ = tiny
    with pytest.raises(ValueError):
        C.BoxWindow(f.region, (1.5, 0.9), 1.5, W=[0, 1, 2, 3, 4, 5, 6, 7, 8])


def test_moment_ratio_check(tiny):
    f, tab, dist = tiny
    win = C.BoxWindow(f.region, (1.5, 0.9), 1.5)
    rep = C.moment_ratio_check(f, tab, dist, win, alpha4_r=1.0)
    assert rep["ok"]
    for row in rep["rows"]:
        assert row["identity_gap"] < 1e-10
