"""Command-line entry point: ``dmlab solve | verify | tails``.

Exit codes: 0 success, 1 I/O failure, 2 non-convergence or failed check,
64 usage error (bad arguments or an invalid config file).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import bilinear, bounds, tails
from .bilinear import CheckRecord
from .functionals import eval_Q3, eval_Q4, eval_R
from .grid import FREQUENCY, POSITION, Grid, inner, read_snapshot, set_workers, write_snapshot
from .propagator import ChirpedGaussian
from .quadrature import gauss_legendre
from .solver import SolverConfig, rayleigh_omega, residual, solve_ground_state

log = logging.getLogger("dmlab")

EXIT_OK = 0
EXIT_IO = 1
EXIT_FAIL = 2
EXIT_USAGE = 64

SUITES = ("bounds", "bilinear", "quasilocal", "duality", "strichartz", "all")


class ConfigError(ValueError):
    """Invalid run configuration."""


# -- configuration ------------------------------------------------------------------

@dataclass
class GridSection:
    n: int = 1024
    length: float = 80.0

    def build(self) -> Grid:
        return Grid(self.n, self.length)


@dataclass
class SolverSection:
    lam: float = 1.0
    max_iters: int = 2000
    tol_step: float = 1e-10
    tol_residual: float = 1e-8
    theta: float = 1.0
    # [re, im] of the initial chirped-Gaussian width; null for the optimal chirp
    init_sigma0: list | None = None


@dataclass
class VerifySection:
    samples: int = 200
    strichartz_extent: float = 64.0
    strichartz_grid: GridSection = field(default_factory=lambda: GridSection(8192, 1400.0))
    strichartz_random: int = 20
    bilinear_dists: list = field(default_factory=lambda: [1.0, 2.0, 4.0, 8.0])
    bilinear_extent: float = 20.0
    adjoint_pairs: int = 20


@dataclass
class TailsSection:
    s_points: int = 200
    residual_threshold: float = 1e-6
    tol: float = 1e-4
    soliton: str | None = None


@dataclass
class RunConfig:
    grid: GridSection = field(default_factory=GridSection)
    quadrature_nodes: int = 128
    solver: SolverSection = field(default_factory=SolverSection)
    verify: VerifySection = field(default_factory=VerifySection)
    tails: TailsSection = field(default_factory=TailsSection)
    suite: str = "all"
    seed: int = 0
    out: str | None = None
    deterministic: bool = False

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def solver_config(self) -> SolverConfig:
        s = self.solver
        init = None
        if s.init_sigma0 is not None:
            init = ChirpedGaussian.normalized(complex(*s.init_sigma0), s.lam)
        return SolverConfig(
            lam=s.lam, max_iters=s.max_iters, tol_step=s.tol_step, tol_residual=s.tol_residual, init=init, theta=s.theta
        )


_NESTED = {
    (RunConfig, "grid"): GridSection,
    (RunConfig, "solver"): SolverSection,
    (RunConfig, "verify"): VerifySection,
    (RunConfig, "tails"): TailsSection,
    (VerifySection, "strichartz_grid"): GridSection,
}


def _coerce(cls, name: str, value, default, where: str):
    kind = type(default)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected a boolean")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number")
        return float(value)
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list")
        return list(value)
    if value is None or isinstance(value, (str, list)):
        return value
    raise ConfigError(f"{where}: unsupported value of type {type(value).__name__}, expected {kind.__name__}")


def _build(cls, data, where: str = "config"):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(names))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    base = cls()
    kwargs = {}
    for key, value in data.items():
        sub = _NESTED.get((cls, key))
        if sub is not None:
            kwargs[key] = _build(sub, value, f"{where}.{key}")
        else:
            kwargs[key] = _coerce(cls, key, value, getattr(base, key), f"{where}.{key}")
    return cls(**kwargs)


def validate(cfg: RunConfig) -> RunConfig:
    try:
        cfg.grid.build()
        cfg.verify.strichartz_grid.build()
        cfg.solver_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.quadrature_nodes < 1:
        raise ConfigError("quadrature_nodes must be positive")
    if cfg.suite not in SUITES:
        raise ConfigError(f"unknown suite {cfg.suite!r}")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    s0 = cfg.solver.init_sigma0
    if s0 is not None and (len(s0) != 2 or not all(isinstance(v, (int, float)) for v in s0)):
        raise ConfigError("solver.init_sigma0 must be [re, im]")
    v = cfg.verify
    if v.samples < 1 or v.strichartz_random < 0 or v.adjoint_pairs < 1:
        raise ConfigError("verify sample counts must be positive")
    if not (v.strichartz_extent > 0 and v.bilinear_extent > 0):
        raise ConfigError("time extents must be positive")
    if not v.bilinear_dists or any(not d > 0 for d in v.bilinear_dists):
        raise ConfigError("bilinear_dists must be positive")
    if cfg.tails.s_points < 2:
        raise ConfigError("tails.s_points must be at least 2")
    return cfg


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return validate(RunConfig())
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return validate(_build(RunConfig, data))


def dump_json(obj, path: Path) -> Path:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")
    return path


# -- solve ----------------------------------------------------------------------------

def _rule(cfg: RunConfig):
    return gauss_legendre(cfg.quadrature_nodes)


def cmd_solve(cfg: RunConfig, out: Path) -> int:
    grid = cfg.grid.build()
    result = solve_ground_state(cfg.solver_config(), _rule(cfg), grid)
    write_snapshot(result.field, out / "soliton.csv")
    summary = result.summary()
    summary["grid"] = {"n": grid.n, "length": grid.length}
    summary["quadrature_nodes"] = cfg.quadrature_nodes
    summary["omega_window"] = [bounds.gaussian_lower_bound(bounds.optimize_delta()[0]), bounds.CONSTANTS.P1_upper]
    dump_json(summary, out / "solve_result.json")
    if not result.converged:
        with (out / "solve_trace.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "q", "residual", "step"])
            for i, row in enumerate(zip(result.q_history, result.residual_history, result.step_history), 1):
                w.writerow([i, *(repr(float(v)) for v in row)])
        log.error("solver did not converge in %d iterations (residual %.3e)", result.iterations, result.residual)
        return EXIT_FAIL
    log.info("omega = %.12f, residual = %.3e, %d iterations", result.omega, result.residual, result.iterations)
    return EXIT_OK


# -- verify -----------------------------------------------------------------------------

def suite_bounds(cfg: RunConfig) -> list[CheckRecord]:
    rule = _rule(cfg)
    grid = cfg.grid.build()
    recs = []
    delta, value = bounds.optimize_delta()
    recs.append(CheckRecord("optimal_delta", {"delta": delta, "target": 3.32}, abs(delta - 3.32), 0.05))
    recs.append(
        CheckRecord("gaussian_lower_bound", {"delta": delta}, value, bounds.CONSTANTS.P1_lower_factor, sense="ge")
    )
    f = ChirpedGaussian.normalized(1.0).sample(grid)
    q = eval_Q4(f, f, f, f, rule).real
    exact = bounds._gaussian_value(1.0 + 0j)
    recs.append(CheckRecord("gaussian_Q4_closed_form", {"sigma0": 1.0, "Q4": q, "exact": exact}, abs(q - exact) / exact, 1e-6))

    est = bounds.p1_estimate_random(cfg.verify.samples, cfg.seed, grid, rule)
    recs.append(
        CheckRecord(
            "P1_upper",
            {"samples": cfg.verify.samples, "seed": cfg.seed, "argmax": est.argmax.to_dict()},
            est.max_Q,
            bounds.CONSTANTS.P1_upper + 1e-6,
        )
    )
    recs.append(CheckRecord("P1_lower", {"samples": cfg.verify.samples}, est.max_Q, est.gaussian_floor - 1e-6, sense="ge"))
    fields = [g for _, g in bounds.seed_set(grid) + bounds.random_fields(grid, cfg.verify.samples, cfg.seed)]
    r_max = max(abs(eval_R(g, g, g, g, rule)) / g.norm() ** 4 for g in fields)
    recs.append(CheckRecord("R_bound", {"samples": len(fields)}, r_max, bounds.CONSTANTS.R_bound + 1e-6))

    worst = 0.0
    pairs = bounds.random_fields(grid, 2 * cfg.verify.adjoint_pairs, cfg.seed + 1)
    for (_, g), (_, h) in zip(pairs[0::2], pairs[1::2]):
        lhs = inner(g, eval_Q3(h, h, h, rule))
        rhs = eval_Q4(g, h, h, h, rule)
        worst = max(worst, abs(lhs - rhs) / (g.norm() * h.norm() ** 3))
    recs.append(CheckRecord("adjoint_identity", {"pairs": cfg.verify.adjoint_pairs}, worst, 1e-10))
    return recs


def suite_strichartz(cfg: RunConfig) -> list[CheckRecord]:
    v = cfg.verify
    grid = v.strichartz_grid.build()
    f = ChirpedGaussian.normalized(1.0).sample(grid)
    res = bounds.strichartz_check(f, v.strichartz_extent)
    params = {
        "t_extent": v.strichartz_extent,
        "truncated": res.lhs,
        "tail_bound": res.tail_bound,
        "tail_estimate": res.tail_estimate,
        "corrected": res.corrected,
        "target": res.rhs,
    }
    recs = [CheckRecord("strichartz_gaussian", params, abs(res.lhs - res.rhs), 1e-3)]
    worst = -math.inf
    for desc, g in bounds.random_fields(grid, v.strichartz_random, cfg.seed):
        r = bounds.strichartz_check(g, v.strichartz_extent)
        worst = max(worst, r.lhs - r.rhs)
    if v.strichartz_random:
        recs.append(CheckRecord("strichartz_random", {"fields": v.strichartz_random}, worst, 1e-6))
    return recs


def suite_bilinear(cfg: RunConfig) -> list[CheckRecord]:
    v = cfg.verify
    T = v.bilinear_extent
    recs = []
    for d in v.bilinear_dists:
        s1, s2 = bilinear.separated_pair(d, FREQUENCY)
        g = bilinear.family_grid(d, FREQUENCY, T)
        f1, f2 = bilinear.bump(g, *s1.intervals[0], FREQUENCY), bilinear.bump(g, *s2.intervals[0], FREQUENCY)
        n = bilinear.bilinear_norm(f1, f2, (-T, T), 0, panels=16)
        bound = bilinear.fourier_bilinear_bound(f1, f2, s1, s2)
        recs.append(CheckRecord("bilinear_fourier", {"dist": d, "window": [-T, T], "n": g.n, "length": g.length}, n.value, bound))
    for d in v.bilinear_dists:
        s1, s2 = bilinear.separated_pair(d, POSITION)
        g = bilinear.family_grid(d, POSITION, T)
        f1, f2 = bilinear.bump(g, *s1.intervals[0]), bilinear.bump(g, *s2.intervals[0])
        n = bilinear.bilinear_norm(f1, f2, (1e-3, T), -1, two_sided=True, panels=4)
        bound = bilinear.position_bilinear_bound(f1, f2, s1, s2)
        # the measured window plus the dispersive bound for |t| > T
        value = math.sqrt(n.value**2 + n.tail_bound)
        params = {"dist": d, "window": [1e-3, T], "two_sided": True, "truncated": n.value, "tail_bound": n.tail_bound}
        recs.append(CheckRecord("bilinear_position", params, value, bound))

    for space, d in ((POSITION, 4.0), (FREQUENCY, 2.0), (POSITION, 0.0)):
        g = bilinear.multilinear_grid(space)
        fields, supports = bilinear.multilinear_quadruple(g, d, space)
        r = bilinear.multilinear_bound_check(fields, (0, 1), supports, space, _rule(cfg))
        recs.append(CheckRecord("multilinear", {"space": space, "dist": d}, r.value, r.bound + 1e-8))
    return recs


DUALITY_PAIRS = ((1.0, 2.0), (0.5, 1.0), (complex(1.0, -1.0), complex(2.0, 0.5)))


def suite_duality(cfg: RunConfig) -> list[CheckRecord]:
    grid = Grid(2048, 80.0)
    recs = []
    for s1, s2 in DUALITY_PAIRS:
        f1 = ChirpedGaussian.normalized(complex(s1)).sample(grid)
        f2 = ChirpedGaussian.normalized(complex(s2)).sample(grid)
        r = bilinear.duality_check(f1, f2, (0.1, 1.0), _rule(cfg))
        params = {"sigma1": [complex(s1).real, complex(s1).imag], "sigma2": [complex(s2).real, complex(s2).imag]}
        params.update(r.to_dict())
        recs.append(CheckRecord("duality", params, r.rel_err, 1e-5))
    return recs


def suite_quasilocal(cfg: RunConfig) -> list[CheckRecord]:
    rule = _rule(cfg)
    recs = []
    for space in (POSITION, FREQUENCY):
        g = bilinear.quasilocal_grid(space)
        s = bilinear.QUASILOCAL_S[space]
        fields, supports = bilinear.quasilocal_family(g, space)
        r = bilinear.quasilocality_check(fields, s, 0, supports, space, rule)
        recs.append(CheckRecord("quasilocality", {"space": space, "s": s}, r, 1e-8))
        fields, _ = bilinear.quasilocal_family(g, space, violated=True)
        neg = bilinear.quasilocal_value(fields, bilinear.quasilocal_rule(space))
        recs.append(CheckRecord("quasilocality_negative_control", {"space": space, "s": s}, neg, 1e-3, sense="ge"))
    return recs


SUITE_FUNCS = {
    "bounds": suite_bounds,
    "strichartz": suite_strichartz,
    "bilinear": suite_bilinear,
    "duality": suite_duality,
    "quasilocal": suite_quasilocal,
}


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    names = list(SUITE_FUNCS) if cfg.suite == "all" else [cfg.suite]
    records = []
    for name in names:
        log.info("running suite %s", name)
        recs = SUITE_FUNCS[name](cfg)
        for r in recs:
            log.info("  %-32s value=%.6e bound=%.6e %s", r.check, r.value, r.bound, "pass" if r.passed else "FAIL")
        records.extend(recs)
    bilinear.write_report(records, out / f"verify_{cfg.suite}.json")
    return EXIT_OK if all(r.passed for r in records) else EXIT_FAIL


# -- tails ----------------------------------------------------------------------------

def cmd_tails(cfg: RunConfig, out: Path, soliton: str | None) -> int:
    path = Path(soliton or cfg.tails.soliton or out / "soliton.csv")
    try:
        f = read_snapshot(path)
    except (OSError, ValueError, KeyError) as exc:
        log.error("cannot read soliton file %s: %s", path, exc)
        return EXIT_IO
    rule = _rule(cfg)
    omega = rayleigh_omega(f, rule)
    res = residual(f, omega, rule)
    prof = tails.tail_profile(f, tails.default_s_grid(f, cfg.tails.s_points))
    sc = {
        side: tails.selfconsistency_check(prof, side, res, cfg.tails.residual_threshold, cfg.tails.tol)
        for side in ("x", "fourier")
    }
    env = tails.decay_envelope(prof, side="x")
    env_k = tails.decay_envelope(prof, side="fourier")
    prof.write_csv(out / "tails.csv")
    advisory = sc["x"].advisory
    passed = all(r.passed for r in sc.values()) and env.passed and env_k.passed
    pointwise = []
    for s in (1.0, 2.0, 4.0, 8.0):
        if s < f.grid.length / 2:
            p = tails.pointwise_decay(f, s)
            pointwise.append({"s": s, "value": p.value, "bound": p.bound, "ok": p.ok, "interpolated": p.interpolated})
    report = {
        "soliton": str(path),
        "omega": omega,
        "residual": res,
        "advisory": advisory,
        "self_consistency": {k: r.to_dict() for k, r in sc.items()},
        "envelope": {"x": env.to_dict(), "fourier": env_k.to_dict()},
        "pointwise": pointwise,
        "exponential_fit": tails.fit_exponential_tail(prof),
        "pass": passed,
    }
    dump_json(report, out / "tails.json")
    if advisory:
        log.warning("input is not a converged soliton (residual %.3e); checks are advisory", res)
        return EXIT_OK
    return EXIT_OK if passed else EXIT_FAIL


# -- argument handling ------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=_u64, help="seed for random field samples")
    common.add_argument("--threads", type=_positive, help="cap on FFT worker threads")
    common.add_argument("--deterministic", action="store_true", default=None, help="single-threaded, reproducible run")
    common.add_argument("--out", help="output directory (default: $DMLAB_OUT or ./dmlab_out)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = _Parser(prog="dmlab", description="Dispersion-managed soliton numerical laboratory.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="compute the ground-state soliton")
    v = sub.add_parser("verify", parents=[common], help="run verification suites")
    v.add_argument("suite", nargs="?", choices=SUITES, help="suite to run (default from config: all)")
    t = sub.add_parser("tails", parents=[common], help="tail analysis of a soliton snapshot")
    t.add_argument("soliton", nargs="?", help="soliton CSV written by 'solve'")
    return p


def resolve(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.deterministic:
        cfg.deterministic = True
    if getattr(args, "suite", None):
        cfg.suite = args.suite
    cfg.out = args.out or cfg.out or os.environ.get("DMLAB_OUT") or "dmlab_out"
    return validate(cfg)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = resolve(args)
    except ConfigError as exc:
        print(f"dmlab: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"dmlab: cannot read configuration: {exc}", file=sys.stderr)
        return EXIT_IO
    set_workers(1 if cfg.deterministic else (args.threads or 1))
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        dump_json(cfg.to_dict(), out / "effective_config.json")
        if args.command == "solve":
            return cmd_solve(cfg, out)
        if args.command == "verify":
            return cmd_verify(cfg, out)
        return cmd_tails(cfg, out, args.soliton)
    except OSError as exc:
        print(f"dmlab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
