"""Command-line front end: experiment configuration, synthetic data
generation, recovery runs, and CSV/JSON result emission.

Usage: hidden-basis <subcommand> --config <path> [--seed S] [--out <path>]
       [--strict] [--strict-paper] [--figures] [--jobs N]

All randomness flows from one root seed: repeat r derives its data,
recovery, and perturbation streams from SeedSequence([root, r, k]) with a
fixed stream index k, so runs are reproducible and repeats can execute in
parallel without changing the output bytes (rows are ordered by repeat).

Exit codes: 0 success, 1 usage/config error, 2 failed repeats under --strict.
"""

from __future__ import annotations

import argparse
import csv
import json
import statistics
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .applications import gmm_recover, ica_oracle, spectral_oracle, tensor_oracle
from .bef import ExactBef, bef_from_dict, perturb_oracle, to_oracle
from .contrasts import RobustnessCertificate, make_contrast_monomial
from .datagen import GeneratedProblem, generate, load_samples_csv, save_samples_csv
from .iteration import run_to_convergence
from .recovery import (
    RecoveryConfig,
    default_config,
    match_basis,
    robust_gi_recovery,
    theoretical_params,
)
from .reference import enumerate_fixed_points

_SEED_MOD = 2**63

STREAM_DATA = 0
STREAM_RECOVERY = 1
STREAM_PERTURBATION = 2


def derive_seed(root: int, *path: int) -> int:
    """Per-repeat seed splitting: hash the root with the index path."""
    ss = np.random.SeedSequence([int(root) % _SEED_MOD, *[int(p) % _SEED_MOD for p in path]])
    return int(ss.generate_state(1, np.uint64)[0])


class ConfigError(Exception):
    pass


@dataclass
class ExperimentSpec:
    problem: str
    repeats: int = 1
    recovery: object = "default"
    perturbation: Optional[dict] = None
    bef: Optional[dict] = None
    generator: Optional[dict] = None
    input: Optional[str] = None
    output: Optional[str] = None
    seed: int = 0
    failure_threshold: float = 0.1

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        spec = cls(**raw)
        if spec.problem not in ("synthetic-bef", "ica", "tensor", "spectral", "gmm"):
            raise ConfigError(f"unknown problem kind {spec.problem!r}")
        if spec.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if spec.problem == "synthetic-bef" and spec.bef is None:
            raise ConfigError("synthetic-bef runs need a 'bef' section")
        if spec.problem != "synthetic-bef" and spec.generator is None and spec.input is None:
            raise ConfigError(f"problem {spec.problem!r} needs a 'generator' section or an 'input' path")
        return spec


def _load_config(path: Optional[str]) -> dict:
    if path is None:
        raise ConfigError("--config is required")
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc


def _monomial_certificate(weights, power) -> RobustnessCertificate:
    coeffs = [abs(w) * power * (power - 2.0) / 4.0 for w in weights]
    e = (power - 2.0) / 2.0
    return RobustnessCertificate(alpha=max(coeffs), beta=min(coeffs), gamma=e, delta=e)


def _recovery_config(spec: ExperimentSpec, m: int, d: int, seed: int, cert, epsilon: float) -> RecoveryConfig:
    r = spec.recovery
    if r == "default":
        return default_config(m, seed=seed)
    if r == "theoretical":
        if cert is None:
            raise ConfigError("theoretical recovery parameters need a certified contrast family")
        params = theoretical_params(cert, m=m, d=d, epsilon=epsilon, p=0.1, seed=seed)
        return params.config
    if isinstance(r, dict):
        fields = dict(r)
        fields.setdefault("m_hat", m)
        fields.setdefault("tol", 1e-10)
        fields["seed"] = seed  # per-repeat stream wins over any pinned value
        try:
            return RecoveryConfig(**fields)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad recovery config: {exc}") from exc
    raise ConfigError(f"unknown recovery setting {r!r}")


@dataclass
class _Instance:
    oracle: object
    truth: np.ndarray
    certificate: object = None


def _load_input_problem(spec: ExperimentSpec) -> GeneratedProblem:
    path = Path(spec.input)
    if not path.exists():
        raise ConfigError(f"input file not found: {spec.input}")
    meta_path = path.with_suffix(path.suffix + ".meta.json")
    if not meta_path.exists():
        raise ConfigError(f"ground-truth metadata not found: {meta_path}")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    truth = np.asarray(meta["truth"], dtype=float)
    samples = load_samples_csv(path)
    return GeneratedProblem(kind=spec.problem, truth=truth, samples=samples, meta=meta)


def _build_instance(spec: ExperimentSpec, data_seed: int) -> _Instance:
    if spec.problem == "synthetic-bef":
        bef = bef_from_dict(spec.bef)
        return _Instance(oracle=to_oracle(bef), truth=bef.basis, certificate=bef.certificate)

    prob = _load_input_problem(spec) if spec.input else generate(spec.generator, data_seed)
    if spec.problem == "ica":
        return _Instance(oracle=ica_oracle(prob.samples), truth=prob.truth)
    if spec.problem == "tensor":
        if prob.tensor is None:
            raise ConfigError("tensor runs need an 'odeco' generator")
        cert = _monomial_certificate(prob.tensor.weights, float(prob.tensor.order))
        return _Instance(oracle=tensor_oracle(prob.tensor), truth=prob.truth, certificate=cert)
    if spec.problem == "spectral":
        return _Instance(oracle=spectral_oracle(prob.samples).oracle, truth=prob.truth)
    raise ConfigError(f"problem {spec.problem!r} is not oracle-driven")


def _run_repeat(spec: ExperimentSpec, root_seed: int, repeat: int, strict_paper: bool) -> dict:
    data_seed = derive_seed(root_seed, repeat, STREAM_DATA)
    rec_seed = derive_seed(root_seed, repeat, STREAM_RECOVERY)

    if spec.problem == "gmm":
        prob = _load_input_problem(spec) if spec.input else generate(spec.generator, data_seed)
        d = prob.samples.dimension
        config = _recovery_config(spec, d, d, rec_seed, None, 0.0)
        est = gmm_recover(prob.samples, config=config, strict=strict_paper)
        if "degenerate" in est.flags:
            return {
                "repeat": repeat,
                "seed": rec_seed,
                "m": prob.truth.shape[0],
                "d": d,
                "epsilon": 0.0,
                "max_error": float("nan"),
                "jumps_used": est.jumps_used,
                "failed": True,
            }
        dirs = est.means / np.linalg.norm(est.means, axis=1, keepdims=True)
        report = match_basis(dirs, prob.truth)
        failed = not np.isfinite(report.max_error) or report.max_error > spec.failure_threshold
        return {
            "repeat": repeat,
            "seed": rec_seed,
            "m": prob.truth.shape[0],
            "d": d,
            "epsilon": 0.0,
            "max_error": report.max_error,
            "jumps_used": est.jumps_used,
            "failed": failed,
        }

    inst = _build_instance(spec, data_seed)
    oracle = inst.oracle
    epsilon = 0.0
    if spec.perturbation:
        pert = dict(spec.perturbation)
        epsilon = float(pert.get("epsilon", 0.0))
        pert_seed = pert.get("seed")
        if pert_seed is None:
            pert_seed = derive_seed(root_seed, repeat, STREAM_PERTURBATION)
        oracle = perturb_oracle(oracle, epsilon, mode=pert.get("mode", "deterministic-adversarial"), seed=int(pert_seed))

    m, d = inst.truth.shape
    config = _recovery_config(spec, m, d, rec_seed, inst.certificate, epsilon)
    basis = robust_gi_recovery(oracle, config, strict=strict_paper)
    report = match_basis(basis, inst.truth)
    jumps = sum(di.jumps_used for di in basis.diagnostics)
    failed = bool(basis.duplicates) or not np.isfinite(report.max_error) or report.max_error > spec.failure_threshold
    return {
        "repeat": repeat,
        "seed": rec_seed,
        "m": m,
        "d": d,
        "epsilon": oracle.epsilon,
        "max_error": report.max_error,
        "jumps_used": jumps,
        "failed": failed,
    }


def _write_csv(path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x) -> str:
    return repr(float(x))


def cmd_recover(args) -> int:
    spec = ExperimentSpec.from_dict(_load_config(args.config))
    root_seed = args.seed if args.seed is not None else spec.seed
    out = args.out or spec.output
    if out is None:
        raise ConfigError("an output path is required (--out or config 'output')")

    runner = lambda r: _run_repeat(spec, root_seed, r, args.strict_paper)
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(runner, range(spec.repeats)))
    else:
        results = [runner(r) for r in range(spec.repeats)]
    results.sort(key=lambda row: row["repeat"])

    header = ["repeat", "seed", "m", "d", "epsilon", "max_error", "jumps_used"]
    rows = [
        [r["repeat"], r["seed"], r["m"], r["d"], _fmt(r["epsilon"]), _fmt(r["max_error"]), r["jumps_used"]]
        for r in results
    ]
    _write_csv(out, header, rows)

    errors = [r["max_error"] for r in results if np.isfinite(r["max_error"])]
    summary = {
        "median_max_error": float(statistics.median(errors)) if errors else float("nan"),
        "failure_rate": sum(1 for r in results if r["failed"]) / len(results),
        "mean_jumps": sum(r["jumps_used"] for r in results) / len(results),
    }
    summary_path = Path(out).with_suffix(".summary.json")
    summary_path.write_text(json.dumps(summary, sort_keys=True) + "\n", encoding="utf-8")

    if args.figures:
        from . import plots

        plots.save_error_histogram(errors, Path(out).with_suffix(".errors.png"))

    if args.strict and any(r["failed"] for r in results):
        return 2
    return 0


def cmd_convergence_order(args) -> int:
    cfg = _load_config(args.config)
    root_seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    out = args.out or cfg.get("output")
    if out is None:
        raise ConfigError("an output path is required (--out or config 'output')")
    d = int(cfg.get("d", 6))
    powers = [float(p) for p in cfg.get("powers", [3, 4])]
    n_seeds = int(cfg.get("seeds", 20))
    max_steps = int(cfg.get("max_steps", 80))

    rows = []
    fig_pows, fig_orders = [], []
    for pi, power in enumerate(powers):
        contrasts = tuple(make_contrast_monomial(1.0, power) for _ in range(d))
        bef = ExactBef(basis=np.eye(d), contrasts=contrasts, dimension=d)
        oracle = to_oracle(bef)
        for s in range(n_seeds):
            rng = np.random.default_rng(derive_seed(root_seed, pi, s))
            u0 = rng.standard_normal(d)
            u0 /= np.linalg.norm(u0)
            rep = run_to_convergence(oracle, u0, tol=1e-13, max_steps=max_steps)
            order = rep.estimated_order
            if order is None:
                continue
            rows.append([_fmt(power), _fmt(order)])
            fig_pows.append(power)
            fig_orders.append(order)

    if cfg.get("include_matrix", False):
        md = int(cfg.get("matrix_dim", 5))
        for s in range(n_seeds):
            rng = np.random.default_rng(derive_seed(root_seed, 10_000, s))
            a = rng.standard_normal((md, md))
            a = (a + a.T) / 2.0
            from .applications import matrix_oracle

            oracle = matrix_oracle(a)
            u0 = rng.standard_normal(md)
            u0 /= np.linalg.norm(u0)
            rep = run_to_convergence(oracle, u0, tol=1e-12, max_steps=400)
            if rep.estimated_order is None:
                continue
            rows.append([_fmt(2.0), _fmt(rep.estimated_order)])
            fig_pows.append(2.0)
            fig_orders.append(rep.estimated_order)

    _write_csv(out, ["power", "measured_order"], rows)
    if args.figures:
        from . import plots

        plots.save_order_scatter(fig_pows, fig_orders, Path(out).with_suffix(".orders.png"))
    return 0


def cmd_perturb_sweep(args) -> int:
    cfg = _load_config(args.config)
    root_seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    out = args.out or cfg.get("output")
    if out is None:
        raise ConfigError("an output path is required (--out or config 'output')")
    if "bef" not in cfg:
        raise ConfigError("perturbation sweeps need a 'bef' section")
    bef = bef_from_dict(cfg["bef"])
    base = to_oracle(bef)
    epsilons = [float(e) for e in cfg.get("epsilons", [1e-6, 1e-5, 1e-4])]
    n_seeds = int(cfg.get("seeds", 50))
    mode = cfg.get("mode", "seeded-random")
    m = bef.num_directions

    rows = []
    medians, p90s = [], []
    for ei, eps in enumerate(epsilons):
        errors = []
        for s in range(n_seeds):
            pert_seed = derive_seed(root_seed, ei, s, STREAM_PERTURBATION)
            rec_seed = derive_seed(root_seed, ei, s, STREAM_RECOVERY)
            oracle = perturb_oracle(base, eps, mode=mode, seed=pert_seed) if eps > 0 else base
            # Residuals cannot resolve below the perturbation level, so the
            # convergence threshold tracks it.
            tol = max(1e-10, eps / 4.0)
            config = default_config(m, seed=rec_seed, tol=tol)
            basis = robust_gi_recovery(oracle, config, strict=args.strict_paper)
            report = match_basis(basis, bef.basis)
            errors.append(report.max_error)
        errs = np.asarray(errors)
        med = float(np.median(errs))
        p90 = float(np.quantile(errs, 0.9))
        rows.append([_fmt(eps), _fmt(med), _fmt(p90)])
        medians.append(med)
        p90s.append(p90)

    _write_csv(out, ["epsilon", "median_error", "p90_error"], rows)
    if args.figures:
        from . import plots

        plots.save_perturbation_sweep(epsilons, medians, p90s, Path(out).with_suffix(".sweep.png"))
    return 0


def cmd_fixed_points(args) -> int:
    cfg = _load_config(args.config)
    out = args.out or cfg.get("output")
    if out is None:
        raise ConfigError("an output path is required (--out or config 'output')")
    if "bef" not in cfg:
        raise ConfigError("fixed-point enumeration needs a 'bef' section")
    bef = bef_from_dict(cfg["bef"])
    tol = float(cfg.get("tol", 1e-12))
    oracle = to_oracle(bef)
    points = enumerate_fixed_points(bef, tol=tol)

    from .iteration import gi_step, sign_symmetric_residual

    rows = []
    supports, residuals = [], []
    for support, v in points:
        res = sign_symmetric_residual(gi_step(oracle, v), v)
        rows.append(["|".join(str(i) for i in support)] + [_fmt(x) for x in v] + [_fmt(res)])
        supports.append(support)
        residuals.append(res)
    header = ["support"] + [f"u_{i}" for i in range(bef.dimension)] + ["residual"]
    _write_csv(out, header, rows)
    if args.figures:
        from . import plots

        plots.save_fixed_point_spectrum(supports, residuals, Path(out).with_suffix(".fixed_points.png"))
    return 0


def cmd_gen(args) -> int:
    cfg = _load_config(args.config)
    root_seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    out = args.out or cfg.get("output")
    if out is None:
        raise ConfigError("an output path is required (--out or config 'output')")
    gen_spec = cfg.get("generator", cfg)
    prob = generate(gen_spec, derive_seed(root_seed, 0, STREAM_DATA))
    meta = {"kind": prob.kind, "truth": prob.truth.tolist(), **prob.meta}
    if prob.samples is not None:
        save_samples_csv(out, prob.samples)
        meta_path = Path(out).with_suffix(Path(out).suffix + ".meta.json")
    else:
        meta["tensor_weights"] = prob.tensor.weights.tolist()
        meta["tensor_directions"] = prob.tensor.directions.tolist()
        meta["tensor_order"] = prob.tensor.order
        meta_path = Path(out)
    meta_path.write_text(json.dumps(meta, sort_keys=True) + "\n", encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hidden-basis", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "recover": cmd_recover,
        "convergence-order": cmd_convergence_order,
        "perturb-sweep": cmd_perturb_sweep,
        "fixed-points": cmd_fixed_points,
        "gen": cmd_gen,
    }
    for name, fn in commands.items():
        p = sub.add_parser(name)
        p.add_argument("--config", required=False, help="JSON experiment configuration")
        p.add_argument("--seed", type=int, default=None, help="root seed (overrides the config)")
        p.add_argument("--out", default=None, help="output path (overrides the config)")
        p.add_argument("--strict", action="store_true", help="exit 2 when any repeat fails")
        p.add_argument("--strict-paper", action="store_true", help="disable practical shortcuts (early exit)")
        p.add_argument("--figures", action="store_true", help="render figures next to the delimited output")
        p.add_argument("--jobs", type=int, default=1, help="parallel repeats")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (KeyError, TypeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
