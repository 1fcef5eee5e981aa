"""Noise sensitivity and dynamical-percolation experiments.

Noise resamples bits (a resampled bit gets a fresh fair value, so it only
flips half the time).  Dynamical evolution resamples each bit at rate-1
Poisson clocks; the configuration at time t is exactly an eps-noise of the
initial one with eps = 1 - e^{-t}, which gives two independent estimators of
the same correlation: the direct noise path and an event-driven clock path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import boolfn as B
from . import coupled as CP
from . import mc
from .lattice import sample_bits


@dataclass
class NoiseSpec:
    """How to perturb a configuration: uniform eps, a fixed resample set, or
    wholesale block resampling."""

    mode: str  # "uniform-eps" | "selective-set" | "block"
    eps: float = 0.0
    resample_set: object = None
    block_partition: object = None  # list of index arrays

    def __post_init__(self):
        if self.mode not in ("uniform-eps", "selective-set", "block"):
            raise ValueError(f"unknown noise mode {self.mode!r}")
        if self.mode in ("uniform-eps", "block") and not 0.0 <= self.eps <= 1.0:
            raise ValueError("eps must be a probability")


def apply_noise_many(bits, spec, rng):
    """Noisy copies of an (m, n) configuration matrix."""
    m, n = bits.shape
    fresh = sample_bits(n, rng, m)
    if spec.mode == "uniform-eps":
        mask = rng.random((m, n)) < spec.eps
    elif spec.mode == "selective-set":
        flags = CP.as_flag(spec.resample_set, n)
        mask = np.broadcast_to(flags, (m, n))
    else:
        blocks = spec.block_partition
        pick = rng.random((m, len(blocks))) < spec.eps
        mask = np.zeros((m, n), dtype=bool)
        for bi, idx in enumerate(blocks):
            mask[:, idx] = pick[:, bi : bi + 1]
    return np.where(mask, fresh, bits)


def apply_noise(omega, spec, seed):
    rng = mc.chunk_rng(seed, 0)
    out = apply_noise_many(omega.bits[None, :], spec, rng)[0]
    return type(omega)(omega.region, out)


# --------------------------------------------------------------------------
# Noise correlation.
# --------------------------------------------------------------------------


def _noise_chunk(args, f=None):
    spec_f, noise_args, n, seed, ci, m = args
    if f is None:
        f = CP._build_function(spec_f)
    mode, eps, rs_bytes, blocks = noise_args
    rng = mc.chunk_rng(seed, ci)
    x = sample_bits(n, rng, m)
    nspec = NoiseSpec(
        mode,
        eps,
        np.frombuffer(rs_bytes, dtype=bool) if rs_bytes is not None else None,
        blocks,
    )
    y = apply_noise_many(x, nspec, rng)
    fx = f.evaluate_many(x).astype(np.int64)
    fy = f.evaluate_many(y).astype(np.int64)
    prod = fx * fy
    return (
        int(prod.sum()),
        int((prod * prod).sum()),
        int(fx.sum()),
        int(fy.sum()),
        int((fx * fx).sum()),
    )


def noise_correlation(f, spec, n_samples, seed):
    """E[f(x) f(y)] for a noisy pair, and the centered excess psi.

    Returns a dict with the correlation Estimate, psi = corr - E[f(x)]E[f(y)]
    and a conservative stderr for psi.
    """
    n = f.region.bit_count
    rs = CP.as_flag(spec.resample_set, n).tobytes() if spec.mode == "selective-set" else None
    blocks = (
        [np.asarray(ix, dtype=np.int64) for ix in spec.block_partition]
        if spec.mode == "block"
        else None
    )
    noise_args = (spec.mode, spec.eps, rs, blocks)
    with mc.Stopwatch() as sw:
        args = [
            (CP.function_spec(f), noise_args, n, seed, ci, m)
            for ci, m in enumerate(mc.chunk_sizes(n_samples))
        ]
        parts = CP._eval_chunks(f, _noise_chunk, args)
    s_prod = sum(p[0] for p in parts)
    s_prod2 = sum(p[1] for p in parts)
    s_fx = sum(p[2] for p in parts)
    s_fy = sum(p[3] for p in parts)
    s_fx2 = sum(p[4] for p in parts)
    corr = mc.mean_estimate(s_prod, s_prod2, n_samples, seed, sw.ms)
    mfx = s_fx / n_samples
    mfy = s_fy / n_samples
    var_f = max(s_fx2 / n_samples - mfx * mfx, 0.0)
    psi = corr.value - mfx * mfy
    psi_stderr = math.sqrt(
        corr.stderr**2 + (mfy**2 + mfx**2) * var_f / n_samples
    )
    return {
        "corr": corr,
        "mean_fx": mfx,
        "mean_fy": mfy,
        "psi": psi,
        "psi_stderr": psi_stderr,
        "n": n_samples,
        "seed": seed,
    }


def clueless_decisive_probe(f, U, n_samples, seed):
    """MC estimates of the weights of {0 != S subseteq U} and {S not subseteq U}.

    The first vanishing makes U clueless, the second vanishing makes it
    decisive.
    """
    n = f.region.bit_count
    uf = CP.as_flag(U, n)
    sub = CP.estimate_S_subset(f, uf, n_samples, seed)

    # E[f] and E[f^2] on an independent stream.
    rng = mc.chunk_rng(seed, 10**6)
    x = sample_bits(n, rng, min(n_samples, 200000))
    fx = f.evaluate_many(x).astype(np.float64)
    mean_f = float(fx.mean())
    mean_f2 = float((fx * fx).mean())
    se_f = float(fx.std(ddof=1) / math.sqrt(len(fx))) if len(fx) > 1 else 0.0

    nonempty_in_U = sub.value - mean_f**2
    not_in_U = mean_f2 - sub.value
    aux = math.sqrt((2 * abs(mean_f) * se_f) ** 2 + sub.stderr**2)
    if uf.all():
        not_in_U = 0.0
    if not uf.any():
        nonempty_in_U = 0.0
    return {
        "q_nonempty_subset": nonempty_in_U,
        "q_nonempty_subset_stderr": aux,
        "q_not_subset": not_in_U,
        "q_not_subset_stderr": aux,
        "subset_estimate": sub,
        "mean_f": mean_f,
    }


# --------------------------------------------------------------------------
# Event-driven dynamics.
# --------------------------------------------------------------------------


@dataclass
class DynamicalTrace:
    """Rate-1 resampling clocks on every bit, logged event by event."""

    region: object
    horizon: float
    initial: np.ndarray
    times: np.ndarray
    bit_ids: np.ndarray
    new_values: np.ndarray


def simulate_dynamics(region, horizon, seed):
    """Poisson event log up to the horizon; gaps are Exp(bit_count)."""
    n = region.bit_count
    rng = mc.chunk_rng(seed, 0)
    initial = sample_bits(n, rng, 1)[0]
    times = []
    t = 0.0
    if horizon > 0 and n > 0:
        while True:
            t += rng.exponential(1.0 / n)
            if t >= horizon:
                break
            times.append(t)
    k = len(times)
    bit_ids = rng.integers(0, n, size=k) if k else np.empty(0, dtype=np.int64)
    new_values = (
        rng.integers(0, 2, size=k, dtype=np.int8) * 2 - 1
        if k
        else np.empty(0, dtype=np.int8)
    )
    return DynamicalTrace(
        region, horizon, initial, np.array(times), bit_ids, new_values
    )


def state_at(trace, t):
    state = trace.initial.copy()
    sel = trace.times <= t
    state[trace.bit_ids[sel]] = trace.new_values[sel]
    return state


def switch_statistics(f, trace):
    """Sign changes of f along the trace and the sojourn-time histogram."""
    state = trace.initial.copy()
    current = f.evaluate_many(state[None, :])[0]
    switches = 0
    sojourns = []
    last_switch = 0.0
    for t, b, v in zip(trace.times, trace.bit_ids, trace.new_values):
        if state[b] == v:
            continue
        state[b] = v
        val = f.evaluate_many(state[None, :])[0]
        if val != current:
            switches += 1
            sojourns.append(t - last_switch)
            last_switch = t
            current = val
    sojourns.append(trace.horizon - last_switch)
    return switches, np.array(sojourns)


def _clock_chunk(args, f=None):
    spec_f, t, n, seed, ci, m = args
    if f is None:
        f = CP._build_function(spec_f)
    rng = mc.chunk_rng(seed, ci)
    x0 = sample_bits(n, rng, m)
    xt = x0.copy()
    counts = rng.poisson(n * t, size=m)
    for i in range(m):
        k = int(counts[i])
        if k == 0:
            continue
        bits = rng.integers(0, n, size=k)
        vals = rng.integers(0, 2, size=k, dtype=np.int8) * 2 - 1
        # Fancy assignment applies events in time order; last write wins.
        xt[i, bits] = vals
    f0 = f.evaluate_many(x0).astype(np.int64)
    ft = f.evaluate_many(xt).astype(np.int64)
    prod = f0 * ft
    return int(prod.sum()), int((prod * prod).sum())


def dynamical_correlation(f, t, n_samples, seed):
    """E[f(w_0) f(w_t)] two ways: the eps-noise equivalence (primary) and an
    explicit Poisson-clock simulation (validation)."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    eps = 1.0 - math.exp(-t)
    noise = noise_correlation(f, NoiseSpec("uniform-eps", eps), n_samples, seed)
    n = f.region.bit_count
    with mc.Stopwatch() as sw:
        args = [
            (CP.function_spec(f), t, n, seed + 1, ci, m)
            for ci, m in enumerate(mc.chunk_sizes(n_samples))
        ]
        parts = CP._eval_chunks(f, _clock_chunk, args)
    s = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    clock = mc.mean_estimate(s, s2, n_samples, seed + 1, sw.ms)
    return {"noise_path": noise["corr"], "clock_path": clock, "t": t, "eps": eps}


# --------------------------------------------------------------------------
# Correlation curves along a single trajectory.
# --------------------------------------------------------------------------


def _curve_chunk(args, f=None):
    spec_f, times, n, seed, ci, m = args
    if f is None:
        f = CP._build_function(spec_f)
    rng = mc.chunk_rng(seed, ci)
    x = sample_bits(n, rng, m)
    f0 = f.evaluate_many(x).astype(np.int64)
    sums = np.zeros(len(times), dtype=np.int64)
    sums_sq = np.zeros(len(times), dtype=np.int64)
    prev = 0.0
    for k, t in enumerate(times):
        eps = 1.0 - math.exp(-(t - prev))
        fresh = sample_bits(n, rng, m)
        mask = rng.random((m, n)) < eps
        x = np.where(mask, fresh, x)
        prev = t
        ft = f.evaluate_many(x).astype(np.int64)
        prod = f0 * ft
        sums[k] = prod.sum()
        sums_sq[k] = (prod * prod).sum()
    return sums, sums_sq, int(f0.sum()), int((f0 * f0).sum())


def correlation_curve(f, times, n_samples, seed):
    """E[f(w_0) f(w_t)] on a time grid, one evolving trajectory per replica.

    Returns per-time Estimates plus the estimated E[f] and E[f^2].
    """
    times = sorted(float(t) for t in times)
    if times and times[0] < 0:
        raise ValueError("times must be nonnegative")
    n = f.region.bit_count
    with mc.Stopwatch() as sw:
        args = [
            (CP.function_spec(f), tuple(times), n, seed, ci, m)
            for ci, m in enumerate(mc.chunk_sizes(n_samples))
        ]
        parts = CP._eval_chunks(f, _curve_chunk, args)
    sums = np.sum([p[0] for p in parts], axis=0)
    sums_sq = np.sum([p[1] for p in parts], axis=0)
    s_f0 = sum(p[2] for p in parts)
    s_f02 = sum(p[3] for p in parts)
    ests = [
        mc.mean_estimate(int(sums[k]), int(sums_sq[k]), n_samples, seed, sw.ms)
        for k in range(len(times))
    ]
    mean_f = s_f0 / n_samples
    mean_f2 = s_f02 / n_samples
    se_f = math.sqrt(max(mean_f2 - mean_f**2, 0.0) / n_samples)
    return {
        "times": times,
        "corr": ests,
        "mean_f": mean_f,
        "mean_f_stderr": se_f,
        "mean_f2": mean_f2,
        "n": n_samples,
        "seed": seed,
    }


def energy_integral(f, gamma, n_samples, seed, u_min=1e-4, grid_points=25):
    """Frostman-type energy of the correlation ratio over the unit time square.

    Reduces the double integral to int 2(1-u) g(u) u^{-gamma} du with
    g(u) = corr(u)/E[f]^2, evaluated on a log-spaced grid with the explicit
    small-u cutoff reported alongside; partial sums exhibit convergence.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must be in (0, 1)")
    grid = np.geomspace(u_min, 1.0, grid_points)
    curve = correlation_curve(f, grid, n_samples, seed)
    mean_f = curve["mean_f"]
    if mean_f == 0:
        raise ZeroDivisionError("E[f] = 0; the correlation ratio is undefined")
    g = np.array([e.value for e in curve["corr"]]) / mean_f**2
    integrand = 2.0 * (1.0 - grid) * g * grid ** (-gamma)
    # Trapezoid in log u: du = u dv.
    v = np.log(grid)
    seg = 0.5 * (integrand[1:] * grid[1:] + integrand[:-1] * grid[:-1]) * np.diff(v)
    partial = np.concatenate([[0.0], np.cumsum(seg)])
    return {
        "gamma": gamma,
        "u_grid": grid,
        "correlation_ratio": g,
        "value": float(partial[-1]),
        "partial_sums": partial,
        "u_min": u_min,
        "mean_f": mean_f,
        "n": n_samples,
        "seed": seed,
    }


def energy_integral_analytic_constant(gamma):
    """Closed form for f constant: int int |t-s|^{-gamma} over the unit square."""
    return 2.0 / ((1.0 - gamma) * (2.0 - gamma))


# --------------------------------------------------------------------------
# rho(s) and lower-tail profiles.
# --------------------------------------------------------------------------


@dataclass
class RhoTable:
    """Least r with r^2 alpha4(r) >= s, per requested s."""

    entries: list = field(default_factory=list)

    def rho(self, s):
        for e in self.entries:
            if e["s"] == s:
                return e["rho"]
        raise KeyError(s)


def alpha4_interpolator(radii, values):
    """Geometric interpolation of measured alpha4(r) = alpha4(8, r), with the
    convention alpha4(r) = 1 for r <= 8."""
    radii = np.asarray(radii, dtype=float)
    values = np.asarray(values, dtype=float)
    order = np.argsort(radii)
    radii, values = radii[order], values[order]

    def alpha4(r):
        if r <= 8:
            return 1.0
        if r <= radii[0]:
            lo_r, lo_v = 8.0, 1.0
            hi_r, hi_v = radii[0], values[0]
        elif r >= radii[-1]:
            if len(radii) < 2:
                return float(values[-1])
            lo_r, lo_v = radii[-2], values[-2]
            hi_r, hi_v = radii[-1], values[-1]
        else:
            k = np.searchsorted(radii, r)
            lo_r, lo_v = radii[k - 1], values[k - 1]
            hi_r, hi_v = radii[k], values[k]
        t = (math.log(r) - math.log(lo_r)) / (math.log(hi_r) - math.log(lo_r))
        return float(math.exp((1 - t) * math.log(lo_v) + t * math.log(hi_v)))

    return alpha4


def rho_table(alpha4, s_values, r_max=100000):
    """Scan radii upward for the least r with r^2 alpha4(r) >= s."""
    out = RhoTable()
    for s in s_values:
        rho = None
        for r in range(1, r_max + 1):
            a = alpha4(r)
            if r * r * a >= s:
                rho = r
                break
        if rho is None:
            raise ValueError(f"no radius up to {r_max} reaches s={s}")
        a = alpha4(rho)
        out.entries.append(
            {"s": s, "rho": rho, "rho_sq_alpha4": rho * rho * a, "alpha4": a}
        )
    return out


def lower_tail_profile(dist, lambdas):
    """Exact P[0 < |S| <= lam * E|S|] on a lambda grid."""
    p = B.size_distribution(dist)
    mean = float((np.arange(len(p)) * p).sum())
    ks = np.arange(len(p))
    rows = []
    for lam in lambdas:
        cut = lam * mean
        mass = float(p[(ks >= 1) & (ks <= cut)].sum())
        rows.append({"lambda": lam, "threshold": cut, "probability": mass})
    return {"mean_size": mean, "rows": rows}


def laplace_probe(f, eps_grid, n_samples, seed):
    """Psi(eps) on an eps grid at Monte Carlo scale (indirect lower-tail probe).

    All grid points share the seed, so the resample masks are nested in eps
    and the monotone trend is visible without independent-sample noise.
    """
    rows = []
    for eps in eps_grid:
        r = noise_correlation(f, NoiseSpec("uniform-eps", eps), n_samples, seed)
        rows.append({"eps": eps, **{kk: r[kk] for kk in ("psi", "psi_stderr")},
                     "corr": r["corr"]})
    return rows
