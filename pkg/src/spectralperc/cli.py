"""Experiment runner: configuration parsing, seed management, JSONL result
persistence and slope reports.

Usage:
    spectral-perc <experiment> --lattice {tri|z2} --R <int> [--r <int>]
        [--j <int>] [--eps <grid>] [--t <grid>] [--samples <int>]
        --seed <u64> --out <path>

Exit codes: 0 all checks passed, 1 a check failed, 2 configuration error.
Worker count comes from the SPECTRAL_PERC_WORKERS environment variable; the
chunked accumulators make results independent of it.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from . import arms
from . import boolfn as B
from . import coupled as CP
from . import dynamics as D
from . import ldp
from . import mc
from .lattice import ValueMode, radial_crossing, rect_lr_crossing

EXPERIMENTS = {}


def experiment(name):
    def reg(fn):
        EXPERIMENTS[name] = fn
        return fn

    return reg


class ConfigError(ValueError):
    pass


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


@dataclass
class ResultRecord:
    experiment: str
    params: dict
    value: float
    stderr: float
    n: int
    seed: int
    wall_ms: int
    version: str = __version__
    timestamp: float = 0.0

    def line(self):
        return json.dumps(_jsonable(asdict(self)), sort_keys=True)


class Writer:
    def __init__(self, path):
        self.path = path
        self.fh = open(path, "a") if path else None
        self.records = []

    def emit(self, record):
        self.records.append(record)
        if self.fh:
            self.fh.write(record.line() + "\n")

    def close(self):
        if self.fh:
            self.fh.close()


def _record(cfg, value, stderr, n, extra=None, wall_ms=0):
    params = {
        k: v
        for k, v in vars(cfg).items()
        if k not in ("out", "func") and v is not None
    }
    if extra:
        params.update(extra)
    return ResultRecord(
        cfg.experiment,
        params,
        float(value),
        float(stderr),
        int(n),
        int(cfg.seed),
        int(wall_ms),
        timestamp=time.time(),
    )


def _grid(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _build_rect(cfg, mode=ValueMode.PLUS_MINUS_ONE):
    R = cfg.R
    if R is None:
        raise ConfigError("--R is required")
    return rect_lr_crossing(cfg.lattice, R, R, mode)


# --------------------------------------------------------------------------
# Experiments.
# --------------------------------------------------------------------------


@experiment("identity-suite")
def run_identity_suite(cfg, writer):
    f = _build_rect(cfg)
    if f.region.bit_count > cfg.bit_cap:
        raise ConfigError(
            f"identity-suite needs <= {cfg.bit_cap} bits; "
            f"{cfg.lattice} R={cfg.R} has {f.region.bit_count}"
        )
    checks = B.identity_suite(f, seed=cfg.seed)
    ok = True
    for c in checks:
        ok = ok and c["ok"]
        writer.emit(
            _record(cfg, c["gap"], 0.0, 1, extra={"check": c["name"], "ok": c["ok"]})
        )
    return ok


@experiment("exact-spectrum")
def run_exact_spectrum(cfg, writer):
    f = _build_rect(cfg)
    n = f.region.bit_count
    if n > cfg.bit_cap:
        raise ConfigError(
            f"exact-spectrum refuses {n} bits (cap {cfg.bit_cap}): "
            f"the table would hold 2^{n} values"
        )
    dist = B.walsh_transform(B.tabulate(f, bit_cap=cfg.bit_cap))
    m1, m2 = B.spectral_moments(dist)
    ent = B.spectral_entropy(dist)
    writer.emit(_record(cfg, m1, 0.0, 1, extra={"stat": "mean_size"}))
    writer.emit(_record(cfg, m2, 0.0, 1, extra={"stat": "second_moment"}))
    writer.emit(_record(cfg, ent, 0.0, 1, extra={"stat": "entropy_nats"}))
    writer.emit(
        _record(cfg, ent / max(m1, 1e-300), 0.0, 1, extra={"stat": "entropy_ratio"})
    )
    if cfg.spectrum_out:
        B.export_binary(dist, cfg.spectrum_out)
    return True


@experiment("arm-prob")
def run_arm_prob(cfg, writer):
    spec = arms.ArmSpec(cfg.lattice, cfg.j, cfg.r, cfg.R, cfg.geometry)
    est = arms.estimate_alpha(spec, cfg.samples, cfg.seed)
    writer.emit(
        _record(cfg, est.value, est.stderr, est.n, wall_ms=est.wall_ms)
    )
    return True


@experiment("quasimult")
def run_quasimult(cfg, writer):
    radii = cfg.radii or [4, 16, 64]
    rep = arms.quasimult_report(
        cfg.lattice, cfg.j, tuple(radii), cfg.samples, cfg.seed
    )
    writer.emit(
        _record(
            cfg,
            rep["direct_over_product"],
            rep["ratio_stderr"],
            cfg.samples,
            extra={"radii": radii, "orientation": "direct_over_product"},
        )
    )
    writer.emit(
        _record(
            cfg,
            rep["product_over_direct"],
            rep["ratio_stderr"],
            cfg.samples,
            extra={"radii": radii, "orientation": "product_over_direct"},
        )
    )
    return True


@experiment("beffara")
def run_beffara(cfg, writer):
    Rs = [int(x) for x in (cfg.R_grid or [16, 32, 64])]
    rep = arms.beffara_check(cfg.lattice, cfg.r or 4, Rs, cfg.samples, cfg.seed)
    for row in rep["rows"]:
        writer.emit(
            _record(
                cfg,
                row["ratio"],
                row["ratio_stderr"],
                cfg.samples,
                extra={"R": row["R"]},
            )
        )
    return rep["non_increasing_3sigma"]


@experiment("coupled-prob")
def run_coupled_prob(cfg, writer):
    f = _build_rect(cfg)
    n = f.region.bit_count
    rng = mc.chunk_rng(cfg.seed, 2**31)
    A = int(rng.integers(0, 1 << min(n, 62)))
    est = CP.estimate_S_subset(f, A, cfg.samples, cfg.seed)
    writer.emit(
        _record(cfg, est.value, est.stderr, est.n, extra={"A_mask": A},
                wall_ms=est.wall_ms)
    )
    return True


@experiment("lambda-sq")
def run_lambda_sq(cfg, writer):
    f = _build_rect(cfg)
    window = CP.BoxWindow(
        f.region, _region_center(f.region), max(cfg.r or 1, 1)
    )
    est = CP.estimate_lambda_sq(f, window.B, 0, cfg.samples, cfg.seed)
    writer.emit(_record(cfg, est.value, est.stderr, est.n, wall_ms=est.wall_ms))
    return True


@experiment("thinning")
def run_thinning(cfg, writer):
    f = _build_rect(cfg)
    if f.region.bit_count > cfg.bit_cap:
        raise ConfigError("thinning runs at exact scale; reduce --R")
    dist = B.walsh_transform(B.tabulate(f, bit_cap=cfg.bit_cap))
    radius = cfg.r if cfg.r else max(cfg.R / 3.0, 1.0)
    window = CP.BoxWindow(f.region, _region_center(f.region), radius)
    density = cfg.density
    if density is None:
        pc4 = B.popcounts(dist.n)
        density = min(1.0, 1.0 / max(radius * radius, 1.0))
    stream = []
    res = CP.thinning_experiment(
        dist, window, density, cfg.samples, cfg.seed, emit=stream.append
    )
    writer.emit(
        _record(
            cfg,
            res["value"],
            (res["wilson"][1] - res["wilson"][0]) / 2,
            res["n_conditioned"],
            extra={
                "exact": res["exact"],
                "density": density,
                "inconclusive": res["inconclusive"],
            },
        )
    )
    if cfg.stream_out:
        with open(cfg.stream_out, "w") as fh:
            for row in stream:
                fh.write(json.dumps(row) + "\n")
    return not res["inconclusive"]


@experiment("noise-corr")
def run_noise_corr(cfg, writer):
    f = _build_rect(cfg)
    ok = True
    prev = None
    for eps in cfg.eps or [0.1]:
        r = D.noise_correlation(f, D.NoiseSpec("uniform-eps", eps), cfg.samples, cfg.seed)
        writer.emit(
            _record(
                cfg,
                r["corr"].value,
                r["corr"].stderr,
                r["n"],
                extra={"eps": eps, "psi": r["psi"], "psi_stderr": r["psi_stderr"]},
            )
        )
        mean_sq = r["mean_fx"] * r["mean_fy"]
        ok = ok and r["corr"].value >= mean_sq - 4 * r["corr"].stderr
    return ok


@experiment("selective-noise")
def run_selective_noise(cfg, writer):
    if cfg.lattice != "z2":
        raise ConfigError("selective-noise resamples vertical edges of z2")
    f = _build_rect(cfg)
    resample = ~f.region.is_horizontal
    r = D.noise_correlation(
        f, D.NoiseSpec("selective-set", resample_set=resample), cfg.samples, cfg.seed
    )
    writer.emit(
        _record(
            cfg,
            r["corr"].value,
            r["corr"].stderr,
            r["n"],
            extra={"psi": r["psi"], "psi_stderr": r["psi_stderr"]},
        )
    )
    return True


@experiment("block-noise")
def run_block_noise(cfg, writer):
    f = _build_rect(cfg)
    grid = B.CoarseGrid(f.region, cfg.r or max(cfg.R // 4, 1))
    blocks = [np.nonzero(grid.cell_of_bit == c)[0] for c in range(grid.n_cells)]
    for eps in cfg.eps or [0.1]:
        r = D.noise_correlation(
            f,
            D.NoiseSpec("block", eps=eps, block_partition=blocks),
            cfg.samples,
            cfg.seed,
        )
        writer.emit(
            _record(
                cfg,
                r["corr"].value,
                r["corr"].stderr,
                r["n"],
                extra={"eps": eps, "blocks": len(blocks), "psi": r["psi"]},
            )
        )
    return True


@experiment("dynamics-corr")
def run_dynamics_corr(cfg, writer):
    f = radial_crossing(cfg.lattice, 1, cfg.R, ValueMode.ZERO_ONE)
    ok = True
    for t in cfg.t or [0.1]:
        r = D.dynamical_correlation(f, t, cfg.samples, cfg.seed)
        gap = abs(r["noise_path"].value - r["clock_path"].value)
        tol = 4 * (r["noise_path"].stderr + r["clock_path"].stderr)
        writer.emit(
            _record(
                cfg,
                r["noise_path"].value,
                r["noise_path"].stderr,
                cfg.samples,
                extra={"t": t, "path": "noise"},
            )
        )
        writer.emit(
            _record(
                cfg,
                r["clock_path"].value,
                r["clock_path"].stderr,
                cfg.samples,
                extra={"t": t, "path": "clock"},
            )
        )
        ok = ok and gap <= tol
    return ok


@experiment("energy")
def run_energy(cfg, writer):
    f = radial_crossing(cfg.lattice, 1, cfg.R, ValueMode.ZERO_ONE)
    res = D.energy_integral(f, cfg.gamma, cfg.samples, cfg.seed)
    writer.emit(
        _record(
            cfg,
            res["value"],
            0.0,
            cfg.samples,
            extra={"gamma": cfg.gamma, "u_min": res["u_min"], "mean_f": res["mean_f"]},
        )
    )
    return bool(np.isfinite(res["value"]))


@experiment("ldp-check")
def run_ldp_check(cfg, writer):
    n = min(cfg.j or 4, 6)
    instances = ldp.generate_instances("adversarial-random", n, cfg.seed, count=60)
    instances += ldp.generate_instances("thinning", n, cfg.seed + 10**6, count=40)
    res = ldp.theorem_as_test(instances)
    writer.emit(
        _record(
            cfg,
            len(res["violations"]),
            0.0,
            res["checked"],
            extra={"checked": res["checked"]},
        )
    )
    return not res["violations"]


@experiment("pivotal-moments")
def run_pivotal_moments(cfg, writer):
    from .lattice import pivotal_count_many, sample_bits

    f = _build_rect(cfg)
    n = f.region.bit_count
    total = 0
    total_sq = 0
    for ci, m in enumerate(mc.chunk_sizes(cfg.samples)):
        rng = mc.chunk_rng(cfg.seed, ci)
        bits = sample_bits(n, rng, m)
        c = pivotal_count_many(f, bits).astype(np.int64)
        total += int(c.sum())
        total_sq += int((c * c).sum())
    e1 = mc.mean_estimate(total, total_sq, cfg.samples, cfg.seed)
    writer.emit(_record(cfg, e1.value, e1.stderr, cfg.samples, extra={"moment": 1}))
    mean2 = total_sq / cfg.samples
    writer.emit(_record(cfg, mean2, 0.0, cfg.samples, extra={"moment": 2}))
    return True


@experiment("lower-tail")
def run_lower_tail(cfg, writer):
    f = _build_rect(cfg)
    if f.region.bit_count > cfg.bit_cap:
        raise ConfigError("lower-tail profile runs at exact scale; reduce --R")
    dist = B.walsh_transform(B.tabulate(f, bit_cap=cfg.bit_cap))
    prof = D.lower_tail_profile(dist, cfg.lam or [0.25, 0.5, 1.0, 2.0])
    for row in prof["rows"]:
        writer.emit(
            _record(
                cfg,
                row["probability"],
                0.0,
                1,
                extra={"lambda": row["lambda"], "mean_size": prof["mean_size"]},
            )
        )
    return True


@experiment("clueless-probe")
def run_clueless_probe(cfg, writer):
    f = _build_rect(cfg)
    n = f.region.bit_count
    rng = mc.chunk_rng(cfg.seed, 2**31)
    U = rng.random(n) < 0.5
    res = D.clueless_decisive_probe(f, U, cfg.samples, cfg.seed)
    writer.emit(
        _record(
            cfg,
            res["q_nonempty_subset"],
            res["q_nonempty_subset_stderr"],
            cfg.samples,
            extra={"stat": "q_nonempty_subset"},
        )
    )
    writer.emit(
        _record(
            cfg,
            res["q_not_subset"],
            res["q_not_subset_stderr"],
            cfg.samples,
            extra={"stat": "q_not_subset"},
        )
    )
    return True


def _region_center(region):
    c = region.centers
    return (float(c[:, 0].mean()), float(c[:, 1].mean()))


# --------------------------------------------------------------------------
# Report: slope fits over JSONL records.
# --------------------------------------------------------------------------


def run_report(argv):
    p = argparse.ArgumentParser(prog="spectral-perc report")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--x", default="R", help="params field for the x axis")
    p.add_argument("--y", default="value", help="record field for the y axis")
    p.add_argument("--experiment", default=None)
    p.add_argument("--out", default=None, help="CSV output path")
    cfg = p.parse_args(argv)
    xs, ys = [], []
    with open(cfg.inp) as fh:
        for line in fh:
            rec = json.loads(line)
            if cfg.experiment and rec.get("experiment") != cfg.experiment:
                continue
            x = rec["params"].get(cfg.x, rec.get(cfg.x))
            y = rec.get(cfg.y, rec["params"].get(cfg.y))
            if x is None or y is None:
                continue
            xs.append(float(x))
            ys.append(float(y))
    if len(xs) < 3:
        print("report error: fewer than 3 points", file=sys.stderr)
        return 2
    fit = arms.log_log_slope(xs, ys)
    print(
        f"slope {fit['slope']:.6f} stderr {fit['stderr']:.6f} "
        f"intercept {fit['intercept']:.6f} points {len(xs)}"
    )
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write("x,y\n")
            for x, y in zip(xs, ys):
                fh.write(f"{x!r},{y!r}\n")
    return 0


# --------------------------------------------------------------------------
# Entry point.
# --------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(
        prog="spectral-perc",
        description="Percolation spectrum experiments",
    )
    p.add_argument("experiment", choices=sorted(EXPERIMENTS))
    p.add_argument("--lattice", choices=["tri", "z2"], default="tri")
    p.add_argument("--R", type=int, default=None)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--j", type=int, default=4)
    p.add_argument("--eps", type=_grid, default=None)
    p.add_argument("--t", type=_grid, default=None)
    p.add_argument("--lam", type=_grid, default=None)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--geometry", choices=sorted(arms.GEOMETRIES), default="full")
    p.add_argument("--radii", type=lambda s: [float(x) for x in s.split(",")],
                   default=None)
    p.add_argument("--R-grid", dest="R_grid", type=lambda s: [int(x) for x in s.split(",")],
                   default=None)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--density", type=float, default=None)
    p.add_argument("--bit-cap", dest="bit_cap", type=int, default=B.DEFAULT_BIT_CAP)
    p.add_argument("--spectrum-out", dest="spectrum_out", default=None)
    p.add_argument("--stream-out", dest="stream_out", default=None)
    return p


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if argv and argv[0] == "report":
        return run_report(argv[1:])
    parser = build_parser()
    try:
        cfg = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    if cfg.samples < 1:
        print("config error: --samples must be positive", file=sys.stderr)
        return 2
    writer = Writer(cfg.out)
    try:
        ok = EXPERIMENTS[cfg.experiment](cfg, writer)
    except (ConfigError, B.BitCapExceeded) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    finally:
        writer.close()
    for rec in writer.records:
        print(rec.line())
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
