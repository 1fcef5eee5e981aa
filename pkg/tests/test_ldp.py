import math

import pytest

from spectralperc import boolfn as B
from spectralperc import lattice as L
from spectralperc import ldp


def test_y_equals_x_holds_at_one():
    pmf = ldp.thinning_instance(3, 1.0, 0)
    rep = ldp.check_hypothesis(pmf, 1.0)
    assert rep.holds
    assert rep.max_valid_a == 1.0


def test_thinning_equality_at_a():
    pmf = ldp.thinning_instance(4, 0.35, 1)
    rep = ldp.check_hypothesis(pmf, 0.35)
    assert rep.holds
    assert abs(rep.max_valid_a - 0.35) < 1e-9
    assert not ldp.check_hypothesis(pmf, 0.36).holds


def test_y_zero_max_valid_zero():
    probs = {}
    for xm in range(4):
        probs[(xm, 0)] = 0.25
    pmf = ldp.JointPmf(2, probs)
    rep = ldp.check_hypothesis(pmf, 0.5)
    assert not rep.holds
    assert rep.max_valid_a == 0.0


def test_support_validation():
    with pytest.raises(ValueError):
        ldp.JointPmf(2, {(0b01, 0b10): 1.0})
    with pytest.raises(ValueError):
        ldp.JointPmf(2, {(0b01, 0b01): 0.5})


def test_conclusion_closed_form_n1():
    pmf = ldp.thinning_instance(1, 0.5, 0)
    conc = ldp.check_conclusion(pmf, 0.5)
    assert abs(conc["y0"]["lhs"] - 0.5) < 1e-12
    assert abs(conc["y0"]["rhs"] - 2 * math.exp(-0.5 / math.e)) < 1e-12
    assert conc["y0"]["holds"]


def test_conclusion_y_equals_x():
    pmf = ldp.thinning_instance(2, 1.0, 0)
    conc = ldp.check_conclusion(pmf, 1.0)
    assert conc["y0"]["lhs"] == 0.0
    assert conc["all_hold"]


def test_st_large_s_covers():
    pmf = ldp.thinning_instance(3, 0.5, 2)
    conc = ldp.check_conclusion(pmf, 0.5, t_grid=(0.0,), s_grid=(10**6,))
    row = conc["st"][0]
    assert row["holds"] and row["rhs"] >= 1.0 - 1e-9


def test_generators_pass_checker():
    for pmf, a in ldp.generate_instances("thinning", 4, 5, count=5):
        assert ldp.check_hypothesis(pmf, a).holds


def test_theorem_as_test_many_instances():
    instances = ldp.generate_instances("adversarial-random", 4, 11, count=60)
    instances += ldp.generate_instances("thinning", 4, 99, count=40)
    res = ldp.theorem_as_test(instances)
    assert res["checked"] >= 100 - 20  # a few adversarial draws may be degenerate
    assert not res["violations"]


def test_spectral_instance_pipeline():
    f = L.rect_lr_crossing("tri", 3, 3)
    dist = B.walsh_transform(B.tabulate(f))
    grid = B.CoarseGrid(f.region, 1.5)
    assert 2 <= grid.n_cells <= 6
    pmf = ldp.spectral_instance(dist, grid, 0.5)
    rep = ldp.check_hypothesis(pmf, 1e-6)
    assert rep.max_valid_a > 0
    conc = ldp.check_conclusion(pmf, rep.max_valid_a)
    assert conc["all_hold"]


def test_generate_spectral_derived_kind():
    f = L.rect_lr_crossing("tri", 3, 3)
    dist = B.walsh_transform(B.tabulate(f))
    grid = B.CoarseGrid(f.region, 1.5)
    (pmf, a), = ldp.generate_instances(
        "spectral-derived", grid.n_cells, 0, count=1, dist=dist, grid=grid
    )
    assert a > 0
    assert ldp.check_hypothesis(pmf, a).holds


def test_max_valid_a_monotone_in_thinning_parameter():
    prev = 0.0
    for a in (0.2, 0.4, 0.6, 0.8):
        rep = ldp.check_hypothesis(ldp.thinning_instance(3, a, 7), 1e-9)
        assert rep.max_valid_a >= prev - 1e-12
        prev = rep.max_valid_a
