"""Command-line harness: solvers, thresholds, sweeps, hashing and checks.

Every subcommand writes CSV (default) or JSON to --out or stdout and exits
0 on success, 1 on a domain error and 2 on a usage error.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import itertools
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import clwe, lsh, matrix_io, theory, thresholds
from .core import ChvInstance, Seed, achieved_ratio
from .errors import ChvError, DomainError
from .kernel import KernelConfig, kernel_round
from .online import DEFAULT_K, build_schedule, run_cool, track_trajectory
from .oracle import brute_force_best

ALGORITHMS = ("cool", "kernel", "brute")


# ---------------------------------------------------------------- output


def _fmt(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, np.ndarray):
        return " ".join(str(int(t)) for t in v)
    return v


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [int(t) for t in v]
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def emit(rows, fields, args):
    """Write rows as CSV or JSON to args.out (or stdout)."""
    rows = list(rows)
    buf = io.StringIO()
    if args.format == "json":
        json.dump([{k: _jsonable(r.get(k)) for k in fields} for r in rows], buf, indent=1)
        buf.write("\n")
    else:
        w = csv.DictWriter(buf, fields, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k)) for k in fields})
    text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _with_optional(fields, args, *, timing=True):
    fields = list(fields)
    if timing and args.timing:
        fields.append("wall_time_ms")
    if getattr(args, "dump_solutions", False):
        fields.append("x")
    return fields


# ---------------------------------------------------------------- solvers


def _instance(args) -> ChvInstance:
    if getattr(args, "matrix", None):
        return ChvInstance.from_matrix(matrix_io.read_matrix(args.matrix), args.B, args.kappa)
    return ChvInstance.sample(args.n, args.m, args.B, args.kappa, Seed(args.seed, 0))


def _solution_row(inst, x, algorithm, seed, elapsed):
    ratio = achieved_ratio(inst, x)
    return {
        "n": inst.n, "m": inst.m, "B": inst.bound_b, "kappa": inst.kappa, "seed": seed,
        "algorithm": algorithm, "achieved_ratio": ratio, "is_solution": ratio < inst.kappa,
        "x_norm_sq": int(x @ x), "wall_time_ms": elapsed, "x": x,
    }


SOLVE_FIELDS = ["n", "m", "B", "kappa", "seed", "algorithm", "achieved_ratio", "is_solution", "x_norm_sq"]


def cmd_solve_cool(args):
    if args.matrix:
        m, n, _ = matrix_io.read_header(args.matrix)
        sched = build_schedule(n, m, args.B, args.K)
        t0 = time.perf_counter()
        x = run_cool(matrix_io.iter_columns(args.matrix), sched)
        elapsed = 1000 * (time.perf_counter() - t0)
        inst = _instance(args)
    else:
        sched = build_schedule(args.n, args.m, args.B, args.K)
        inst = _instance(args)
        t0 = time.perf_counter()
        x = run_cool(inst.a, sched)
        elapsed = 1000 * (time.perf_counter() - t0)
    emit([_solution_row(inst, x, "cool", args.seed, elapsed)], _with_optional(SOLVE_FIELDS, args), args)


def cmd_solve_kernel(args):
    inst = _instance(args)
    t0 = time.perf_counter()
    x = kernel_round(inst, KernelConfig(args.B, args.K), Seed(args.seed, 1))
    elapsed = 1000 * (time.perf_counter() - t0)
    emit([_solution_row(inst, x, "kernel", args.seed, elapsed)], _with_optional(SOLVE_FIELDS, args), args)


def cmd_brute_force(args):
    inst = _instance(args)
    t0 = time.perf_counter()
    res = brute_force_best(inst)
    elapsed = 1000 * (time.perf_counter() - t0)
    row = {"n": inst.n, "m": inst.m, "B": inst.bound_b, "kappa": inst.kappa, "seed": args.seed,
           "best_x": res.best_x, "best_ratio": res.best_ratio, "count": res.solution_count_at[1],
           "wall_time_ms": elapsed}
    fields = ["n", "m", "B", "kappa", "seed", "best_x", "best_ratio", "count"]
    emit([row], fields + (["wall_time_ms"] if args.timing else []), args)


THRESHOLD_FIELDS = ["n", "m", "B", "kappa_ref", "kappa_exact", "log10_expected_count"]


def threshold_row(n, m, bound_b):
    rep = thresholds.kappa_stat(n, m, bound_b)
    log_c = thresholds.log_expected_solution_count(n, m, bound_b, rep.kappa_ref)
    return {"n": n, "m": m, "B": bound_b, "kappa_ref": rep.kappa_ref, "kappa_exact": rep.kappa_stat,
            "log10_expected_count": log_c / math.log(10)}


def cmd_threshold(args):
    rows = [threshold_row(n, m, b) for n, m, b in itertools.product(args.n, args.m, args.B) if n > m]
    if not rows:
        raise DomainError("no grid point with n > m")
    emit(rows, THRESHOLD_FIELDS, args)


def cmd_trajectory(args):
    inst = ChvInstance.sample(args.n, args.m, args.B, args.kappa, Seed(args.seed, 0))
    if args.temperature is not None:
        tr = track_trajectory(inst.a, temperature=args.temperature)
    else:
        tr = track_trajectory(inst.a, build_schedule(args.n, args.m, args.B, args.K))
    rows = [{"t": t, "norm_y": l, "temp": b, "u": l / (b * args.m)}
            for t, l, b in tr.rows() if t % args.every == 0 or t == args.n]
    emit(rows, ["t", "norm_y", "temp", "u"], args)


# ---------------------------------------------------------------- sweep


@dataclass(frozen=True)
class SweepConfig:
    """Grid of (n, m or alpha, B, kappa) points, each run for ``trials`` seeds.

    Point i uses seed ``seed ^ i``; trial t builds its instance from stream
    2t and feeds the solver stream 2t + 1.
    """

    n: tuple[int, ...]
    m: tuple[int, ...]
    alpha: tuple[float, ...]
    bound_b: tuple[int, ...]
    kappa: tuple[float, ...]
    algorithm: str = "cool"
    trials: int = 1
    seed: int = 0
    k_const: int | None = None
    output: str | None = None

    def points(self):
        second = self.m if self.m else self.alpha
        for n, mm, b, k in itertools.product(self.n, second, self.bound_b, self.kappa):
            m = mm if self.m else max(1, round(mm * n))
            yield n, m, b, k

    @property
    def k_value(self) -> int:
        if self.k_const is not None:
            return self.k_const
        return DEFAULT_K if self.algorithm == "cool" else 2


class ConfigError(DomainError):
    pass


def _key_lines(text):
    lines = {}
    section = None
    for no, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
        elif "=" in s and not s.startswith(("#", ";")):
            lines[(section, s.split("=", 1)[0].strip().lower())] = no
    return lines


def load_sweep_config(path) -> SweepConfig:
    """Parse an INI file with a [sweep] section.

    Grids are comma-separated. Either ``m`` or ``alpha`` (= m/n) must be given.
    """
    path = Path(path)
    text = path.read_text()
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not cp.has_section("sweep"):
        raise ConfigError(f"{path}: missing [sweep] section")
    sec = cp["sweep"]
    lines = _key_lines(text)

    def where(key):
        no = lines.get(("sweep", key))
        return f"{path}:{no}: field '{key}'" if no else f"{path}: field '{key}'"

    def grid(key, kind, required=True):
        if key not in sec:
            if required:
                raise ConfigError(f"{where(key)} is required")
            return ()
        try:
            vals = tuple(kind(v.strip()) for v in sec[key].split(",") if v.strip())
        except ValueError:
            raise ConfigError(f"{where(key)}: cannot parse {sec[key]!r}") from None
        if not vals:
            raise ConfigError(f"{where(key)}: grid is empty")
        return vals

    def scalar(key, kind, default):
        if key not in sec:
            return default
        try:
            return kind(sec[key].strip())
        except ValueError:
            raise ConfigError(f"{where(key)}: cannot parse {sec[key]!r}") from None

    known = {"n", "m", "alpha", "b", "kappa", "algorithm", "trials", "seed", "k_const", "output"}
    for key in sec:
        if key not in known:
            raise ConfigError(f"{where(key)}: unknown field")
    ns = grid("n", int)
    ms = grid("m", int, required=False)
    alphas = grid("alpha", float, required=False)
    if bool(ms) == bool(alphas):
        raise ConfigError(f"{path}: give exactly one of 'm' or 'alpha'")
    cfg = SweepConfig(
        n=ns, m=ms, alpha=alphas, bound_b=grid("b", int), kappa=grid("kappa", float),
        algorithm=scalar("algorithm", str, "cool"), trials=scalar("trials", int, 1),
        seed=scalar("seed", int, 0), k_const=scalar("k_const", int, None),
        output=scalar("output", str, None),
    )
    if cfg.algorithm not in ALGORITHMS:
        raise ConfigError(f"{where('algorithm')}: must be one of {', '.join(ALGORITHMS)}")
    if cfg.trials < 1:
        raise ConfigError(f"{where('trials')}: must be >= 1")
    if not 0 <= cfg.seed < 2**63:
        raise ConfigError(f"{where('seed')}: must be a nonnegative 63-bit integer")
    for n, m, b, k in cfg.points():
        if not 1 <= m < n:
            raise ConfigError(f"{where('n')}: need 1 <= m < n, got n={n}, m={m}")
        if b < 1:
            raise ConfigError(f"{where('b')}: B must be >= 1")
        if not 0 < k < 1:
            raise ConfigError(f"{where('kappa')}: kappa must lie in (0, 1)")
        if cfg.algorithm == "cool":
            try:
                build_schedule(n, m, b, cfg.k_value)
            except ChvError as exc:
                raise ConfigError(f"{where('n')}: {exc}") from None
    return cfg


SWEEP_FIELDS = ["point", "trial", "n", "m", "alpha", "B", "kappa", "K", "algorithm", "seed",
                "achieved_ratio", "is_solution", "kappa_stat_ref", "kappa_comp_ref"]


def _sweep_task(cfg: SweepConfig, point: int, trial: int, params):
    n, m, b, kappa = params
    ps = cfg.seed ^ point
    inst = ChvInstance.sample(n, m, b, kappa, Seed(ps, 2 * trial))
    t0 = time.perf_counter()
    if cfg.algorithm == "cool":
        x = run_cool(inst.a, build_schedule(n, m, b, cfg.k_value))
    elif cfg.algorithm == "kernel":
        x = kernel_round(inst, KernelConfig(b, cfg.k_value), Seed(ps, 2 * trial + 1))
    else:
        x = brute_force_best(inst, with_count=False).best_x
    elapsed = 1000 * (time.perf_counter() - t0)
    ratio = achieved_ratio(inst, x)
    return {
        "point": point, "trial": trial, "n": n, "m": m, "alpha": m / n, "B": b, "kappa": kappa,
        "K": cfg.k_value, "algorithm": cfg.algorithm, "seed": ps, "achieved_ratio": ratio,
        "is_solution": ratio < kappa, "kappa_stat_ref": thresholds.kappa_reference(n, m, b),
        "kappa_comp_ref": thresholds.kappa_comp_reference(n, m, b), "wall_time_ms": elapsed, "x": x,
    }


def run_sweep(cfg: SweepConfig, threads: int = 1) -> list[dict]:
    """All (point, trial) rows, sorted by (point, trial) whatever the thread count."""
    tasks = [(i, t, p) for i, p in enumerate(cfg.points()) for t in range(cfg.trials)]
    if threads <= 1:
        return [_sweep_task(cfg, *task) for task in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda task: _sweep_task(cfg, *task), tasks))


def cmd_sweep(args):
    cfg = load_sweep_config(args.config)
    if args.out is None and cfg.output:
        args.out = cfg.output
    emit(run_sweep(cfg, args.threads), _with_optional(SWEEP_FIELDS, args), args)


# ---------------------------------------------------------------- lsh


def _parse_vector(text):
    text = text.strip()
    if text.startswith("@"):
        text = Path(text[1:]).read_text()
    try:
        return np.array([int(v) for v in text.replace(",", " ").split()], dtype=np.int64)
    except ValueError:
        raise DomainError(f"cannot parse integer vector from {text[:40]!r}") from None


def _load_key(path):
    return lsh.deserialize_key(Path(path).read_bytes())


def cmd_lsh_keygen(args):
    key = lsh.keygen(args.n, args.m, args.B, args.kappa, Seed(args.seed, 0))
    blob = lsh.serialize_key(key)
    if args.key_out:
        Path(args.key_out).write_bytes(blob)
    else:
        sys.stderr.write(blob.hex() + "\n")
    d = key.distortion
    row = {"n": key.n, "m": key.m, "B": key.bound_b, "kappa": key.kappa, "seed": key.seed,
           "gamma": key.gamma, "r_ball": key.r_ball, "alpha": d.alpha, "beta": d.beta, "xi": d.xi,
           "compression_margin_bits": lsh.compression_margin(key.n, key.m, key.bound_b, key.kappa),
           "key_bytes": len(blob)}
    emit([row], list(row), args)


def cmd_lsh_hash(args):
    key = _load_key(args.key)
    x = _parse_vector(args.x)
    dg = lsh.hash_point(key, x)
    blob = lsh.serialize_digest(dg)
    if args.digest_out:
        Path(args.digest_out).write_bytes(blob)
    row = {"overflow": dg.is_overflow_zero, "q": dg.q, "digest_hex": blob.hex()}
    emit([row], list(row), args)


def cmd_lsh_verify(args):
    key = _load_key(args.key)
    if (args.y is None) != (args.z is None):
        raise DomainError("give both --y and --z, or neither")
    if args.y is not None:
        res = lsh.reduce_contraction_to_chv(key, _parse_vector(args.y), _parse_vector(args.z))
        row = {"violating": res.violating, "chv_solution": res.is_chv_solution,
               "hash_distance": res.hash_distance, "input_distance": res.input_distance,
               "achieved_ratio": res.ratio, "kappa": key.kappa, "x": res.x}
        fields = ["violating", "chv_solution", "hash_distance", "input_distance", "achieved_ratio", "kappa"]
        if args.dump_solutions:
            fields.append("x")
        emit([row], fields, args)
        return
    rep = lsh.check_non_expansion(key, args.trials, Seed(args.seed, 0))
    row = {"pairs": rep.pairs, "max_ratio": rep.max_ratio, "spectral_norm": rep.spectral_norm,
           "certificate_bound": rep.certificate_bound, "violated": rep.violated,
           "alpha": key.distortion.alpha}
    emit([row], list(row), args)


# ---------------------------------------------------------------- clwe, theory


def cmd_clwe_demo(args):
    demo = clwe.reduction_demo(args.n, args.m, args.B, args.gamma, args.beta, Seed(args.seed, 0),
                               args.trials, null_only=args.null_only)
    emit([demo.row()], list(clwe.ReductionDemo.CSV_FIELDS), args)


def cmd_theory_checks(args):
    rows = theory.run_theory_checks(args.samples, Seed(args.seed, 0))
    emit([r.as_dict() for r in rows], theory.REPORT_FIELDS, args)
    if not all(r.holds for r in rows):
        raise ChvError("a theory check failed")


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base random seed (default 0)")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--timing", action="store_true", help="add a wall_time_ms column")
    common.add_argument("--dump-solutions", action="store_true", help="add the solution vector x")

    def instance_args(p, K=None):
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--m", type=int, required=True)
        p.add_argument("--B", type=int, required=True)
        p.add_argument("--kappa", type=float, default=0.5, help="target contraction (default 0.5)")
        if K is not None:
            p.add_argument("--K", type=int, default=K, help=f"schedule constant (default {K})")

    parser = argparse.ArgumentParser(prog="chvlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("solve-cool", parents=[common], help="online cooling solver")
    instance_args(p, DEFAULT_K)
    p.add_argument("--matrix", help="stream columns from a matrix file instead of sampling")
    p.set_defaults(func=cmd_solve_cool)

    p = sub.add_parser("solve-kernel", parents=[common], help="kernel rounding solver")
    instance_args(p, 2)
    p.add_argument("--matrix", help="read A from a matrix file")
    p.set_defaults(func=cmd_solve_kernel)

    p = sub.add_parser("brute-force", parents=[common], help="exhaustive oracle")
    instance_args(p)
    p.add_argument("--matrix", help="read A from a matrix file")
    p.set_defaults(func=cmd_brute_force)

    p = sub.add_parser("threshold", parents=[common], help="statistical threshold kappa_stat")
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--m", type=int, nargs="+", required=True)
    p.add_argument("--B", type=int, nargs="+", required=True)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("sweep", parents=[common], help="seeded parameter sweep from an INI file")
    p.add_argument("config")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("trajectory", parents=[common], help="||y_t|| along a cooling run")
    instance_args(p, DEFAULT_K)
    p.add_argument("--temperature", type=int, help="run at one fixed temperature instead")
    p.add_argument("--every", type=int, default=1, help="keep every k-th step")
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser("lsh-keygen", parents=[common], help="sample a hash key")
    instance_args(p)
    p.add_argument("--key-out", help="binary key file (hex goes to stderr if omitted)")
    p.set_defaults(func=cmd_lsh_keygen)

    p = sub.add_parser("lsh-hash", parents=[common], help="hash a vector in [0, B]^n")
    p.add_argument("--key", required=True)
    p.add_argument("--x", required=True, help="comma/space separated integers, or @file")
    p.add_argument("--digest-out", help="binary digest file")
    p.set_defaults(func=cmd_lsh_hash)

    p = sub.add_parser("lsh-verify", parents=[common],
                       help="reduce a contracting pair to a CHV solution, or check non-expansion")
    p.add_argument("--key", required=True)
    p.add_argument("--y")
    p.add_argument("--z")
    p.add_argument("--trials", type=int, default=1000, help="random pairs for the non-expansion check")
    p.set_defaults(func=cmd_lsh_verify)

    p = sub.add_parser("clwe-demo", parents=[common], help="distinguisher run with a synthetic witness")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--m", type=int, default=16)
    p.add_argument("--B", type=int, default=4)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1e-6)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--null-only", action="store_true")
    p.set_defaults(func=cmd_clwe_demo)

    p = sub.add_parser("theory-checks", parents=[common], help="verify the explicit finite bounds")
    p.add_argument("--samples", type=int, default=10_000)
    p.set_defaults(func=cmd_theory_checks)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except (ChvError, OSError) as exc:
        print(f"chvlab {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
