"""Brute-force verification of a general lower-tail inequality for pairs of
0/1 vectors y <= x.

The hypothesis: for some a in (0, 1], conditioning on any set of coordinates
of y vanishing, each remaining y_j retains at least an a-fraction of the
conditional probability of x_j.  The conclusions bound P[Y = 0 | X > 0] and
the full lower tail of Y by exponential moments of X.  Everything here is
exact enumeration on small n, used as a theorem-as-test harness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import boolfn as B

MAX_N = 12

E_ST_T_GRID = (0.0, 0.5, 1.0, 2.0)
E_ST_S_GRID = (0.1, 1.0, 10.0)


@dataclass
class JointPmf:
    """Joint law of (x, y) in {0,1}^n x {0,1}^n with y <= x coordinatewise."""

    n: int
    probs: dict  # (x_mask, y_mask) -> probability

    def __post_init__(self):
        if self.n > MAX_N:
            raise ValueError(f"n must be <= {MAX_N} for exhaustive checking")
        total = 0.0
        for (xm, ym), p in self.probs.items():
            if p < 0:
                raise ValueError("negative probability")
            if ym & ~xm:
                raise ValueError("support must satisfy y <= x")
            total += p
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total}, not 1")

    def arrays(self):
        items = sorted(self.probs.items())
        xm = np.array([k[0] for k, _ in items], dtype=np.int64)
        ym = np.array([k[1] for k, _ in items], dtype=np.int64)
        p = np.array([v for _, v in items], dtype=np.float64)
        return xm, ym, p


@dataclass
class HypothesisReport:
    a: float
    violations: list = field(default_factory=list)
    max_valid_a: float = 0.0

    @property
    def holds(self):
        return not self.violations


def check_hypothesis(pmf: JointPmf, a):
    """Exhaustive conditional check over every coordinate j and every
    conditioning set I not containing j; zero-mass conditionings are vacuous."""
    if not 0.0 < a <= 1.0:
        raise ValueError("a must be in (0, 1]")
    xm, ym, p = pmf.arrays()
    n = pmf.n
    violations = []
    max_valid = math.inf
    for j in range(n):
        jbit = 1 << j
        yj = (ym & jbit) != 0
        xj = (xm & jbit) != 0
        for I in range(1 << n):
            if I & jbit:
                continue
            cond = (ym & I) == 0
            mass = p[cond].sum()
            if mass <= 0:
                continue
            py = p[cond & yj].sum() / mass
            px = p[cond & xj].sum() / mass
            if px > 0:
                max_valid = min(max_valid, py / px)
            if py + 1e-15 < a * px:
                violations.append(
                    {"j": j, "I": I, "lhs": float(py), "rhs": float(a * px)}
                )
    if max_valid is math.inf:
        max_valid = 1.0
    return HypothesisReport(a, violations, float(min(max_valid, 1.0)))


def check_conclusion(pmf: JointPmf, a, t_grid=E_ST_T_GRID, s_grid=E_ST_S_GRID):
    """Exact evaluation of both conclusion inequalities.

    The first bounds P[Y=0 | X>0]; the second bounds P[Y <= t] on a (t, s)
    grid.  Returns each side and a holds flag per inequality.
    """
    xm, ym, p = pmf.arrays()
    pc = B.popcounts(pmf.n)
    X = pc[xm].astype(np.float64)
    Y = pc[ym].astype(np.float64)

    p_xpos = p[X > 0].sum()
    result = {"a": a}
    if p_xpos <= 0:
        result["y0"] = {"vacuous": True, "holds": True}
    else:
        lhs = p[(Y == 0) & (X > 0)].sum() / p_xpos
        rhs = (p[X > 0] * np.exp(-a * X[X > 0] / math.e)).sum() / p_xpos / a
        result["y0"] = {
            "vacuous": False,
            "lhs": float(lhs),
            "rhs": float(rhs),
            "holds": bool(lhs <= rhs + 1e-12),
        }

    exp_moment = float((p * np.exp(-a * X / math.e)).sum())
    st_rows = []
    for t in t_grid:
        for s in s_grid:
            lhs = float(p[Y <= t].sum())
            rhs = float(
                p[X < (math.e / a) * (t + s)].sum()
                + (math.exp(t - 1.0) / s) * exp_moment
            )
            st_rows.append(
                {
                    "t": t,
                    "s": s,
                    "lhs": lhs,
                    "rhs": rhs,
                    "holds": bool(lhs <= rhs + 1e-12),
                }
            )
    result["st"] = st_rows
    result["all_hold"] = result["y0"]["holds"] and all(r["holds"] for r in st_rows)
    return result


# --------------------------------------------------------------------------
# Instance generators.
# --------------------------------------------------------------------------


def thinning_instance(n, a, seed, p_x=0.5):
    """x_i iid Bernoulli(p_x); y_i = x_i * Bernoulli(a) independently.

    The independent coin makes the hypothesis hold with equality at a.
    """
    probs = {}
    for xm in range(1 << n):
        px = 1.0
        for b in range(n):
            px *= p_x if (xm >> b) & 1 else (1.0 - p_x)
        sub = xm
        while True:
            k_kept = bin(sub).count("1")
            k_dropped = bin(xm ^ sub).count("1")
            py = (a**k_kept) * ((1.0 - a) ** k_dropped)
            probs[(xm, sub)] = probs.get((xm, sub), 0.0) + px * py
            if sub == 0:
                break
            sub = (sub - 1) & xm
    return JointPmf(n, probs)


def spectral_instance(dist, grid, density, core_fraction=1.0):
    """Joint law of cell-hit indicators of a spectral sample and its thinning.

    x_j = 1 iff S meets cell j; given S, y_j = 1 with probability
    1 - (1-density)^{|S /\\ cell_j|} independently across cells (the thinning
    set is iid over bits).
    """
    n_cells = grid.n_cells
    if n_cells > MAX_N:
        raise ValueError("too many coarse cells for exhaustive checking")
    w = dist.probabilities()
    pc = B.popcounts(dist.n)
    probs = {}
    for m in range(1 << dist.n):
        pm = w[m]
        if pm == 0:
            continue
        counts = [int(pc[m & int(grid.cell_masks[c])]) for c in range(n_cells)]
        xm = 0
        for c, k in enumerate(counts):
            if k:
                xm |= 1 << c
        hit_p = [1.0 - (1.0 - density) ** k for k in counts]
        sub = xm
        while True:
            py = 1.0
            for c in range(n_cells):
                if not (xm >> c) & 1:
                    continue
                py *= hit_p[c] if (sub >> c) & 1 else (1.0 - hit_p[c])
            probs[(xm, sub)] = probs.get((xm, sub), 0.0) + pm * py
            if sub == 0:
                break
            sub = (sub - 1) & xm
    return JointPmf(n_cells, probs)


def adversarial_instance(n, seed, sparsity=0.5):
    """Random joint pmf on pairs y <= x; no hypothesis guarantee."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    probs = {}
    for xm in range(1 << n):
        sub = xm
        while True:
            if rng.random() < sparsity:
                probs[(xm, sub)] = float(rng.random())
            if sub == 0:
                break
            sub = (sub - 1) & xm
    if not probs:
        probs[(0, 0)] = 1.0
    total = sum(probs.values())
    probs = {k: v / total for k, v in probs.items()}
    return JointPmf(n, probs)


def generate_instances(kind, n, seed, count=1, **kw):
    out = []
    for i in range(count):
        if kind == "thinning":
            a = kw.get("a", 0.25 + 0.5 * ((seed + i) % 3) / 2)
            out.append((thinning_instance(n, a, seed + i), a))
        elif kind == "adversarial-random":
            pmf = adversarial_instance(n, seed + i)
            rep = check_hypothesis(pmf, 1e-9)
            a = rep.max_valid_a
            out.append((pmf, a))
        elif kind == "spectral-derived":
            pmf = spectral_instance(kw["dist"], kw["grid"], kw.get("density", 0.5))
            a = check_hypothesis(pmf, 1e-9).max_valid_a
            out.append((pmf, a))
        else:
            raise ValueError(f"unknown instance kind {kind!r}")
    return out


def theorem_as_test(instances):
    """Every instance passing the hypothesis must satisfy both conclusions."""
    results = []
    for pmf, a in instances:
        if a <= 0:
            results.append({"a": a, "skipped": True})
            continue
        rep = check_hypothesis(pmf, a)
        if not rep.holds:
            results.append({"a": a, "hypothesis": False})
            continue
        conc = check_conclusion(pmf, a)
        results.append(
            {"a": a, "hypothesis": True, "conclusions_hold": conc["all_hold"],
             "detail": conc}
        )
    checked = [r for r in results if r.get("hypothesis")]
    violations = [r for r in checked if not r["conclusions_hold"]]
    return {"results": results, "checked": len(checked), "violations": violations}
