"""Command-line front end: benchmark runs, one-shot fits, and self-checks."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from .bench import ExperimentRecord, aggregate, make_model, run_experiment
from .domain import Role, SampleSet, fit_domain_box, scale
from .estimators import Method
from .selection import DEFAULT_SIGMA2_MULTIPLIERS, CvPlan

DEFAULT_MODELS = [1, 2, 3, 4, 5, 6, 7]
DEFAULT_METHODS = ["dre-v", "dre-vk-ink", "dre-vk-rbf", "ulsif"]
SIZES_1D = [50, 100, 200]
SIZES_20D = [100, 200, 500]


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    models: list[int] = field(default_factory=lambda: list(DEFAULT_MODELS))
    sizes: list[int] | None = None  # None -> per-model defaults by dimension
    methods: list[str] = field(default_factory=lambda: list(DEFAULT_METHODS))
    draws: int = 20
    folds: int = 5
    seed: int = 0
    margin: float = 0.0
    nonneg: bool = False
    gamma_min: float = 1e-5
    gamma_max: float = 10.0
    gamma_count: int = 15
    gamma_scaled: bool = True  # grid values are multipliers of tr(M)/n
    sigma2_multipliers: list[float] = field(
        default_factory=lambda: list(DEFAULT_SIGMA2_MULTIPLIERS)
    )
    out_csv: str = "results.csv"
    out_json: str = "results.json"

    def validate(self):
        if not self.models or not self.methods:
            raise ConfigError("models and methods must be nonempty")
        for mid in self.models:
            if mid not in DEFAULT_MODELS:
                raise ConfigError(f"unknown model id {mid}")
        for meth in self.methods:
            if meth not in DEFAULT_METHODS:
                raise ConfigError(f"unknown method '{meth}'")
        if self.sizes is not None and (not self.sizes or any(m < 1 for m in self.sizes)):
            raise ConfigError("sizes must be nonempty positive integers")
        if self.draws < 1:
            raise ConfigError("draws must be at least 1")
        if self.folds < 2:
            raise ConfigError("folds must be at least 2")
        if self.margin < 0:
            raise ConfigError("margin must be nonnegative")
        if self.gamma_min <= 0 or self.gamma_max < self.gamma_min or self.gamma_count < 1:
            raise ConfigError("gamma grid spec must satisfy 0 < min <= max, count >= 1")
        if not self.sigma2_multipliers or any(v <= 0 for v in self.sigma2_multipliers):
            raise ConfigError("sigma2 multipliers must be positive")

    def sizes_for(self, model_id: int) -> list[int]:
        if self.sizes is not None:
            return self.sizes
        return SIZES_20D if make_model(model_id).d == 20 else SIZES_1D

    def gamma_grid(self) -> np.ndarray:
        if self.gamma_count == 1:
            return np.array([self.gamma_min])
        return np.logspace(np.log10(self.gamma_min), np.log10(self.gamma_max), self.gamma_count)

    def to_text(self) -> str:
        """Resolved key=value echo; parse_config reads it back to an equal config."""
        lines = [
            "models = " + ",".join(str(v) for v in self.models),
            "sizes = " + ("" if self.sizes is None else ",".join(str(v) for v in self.sizes)),
            "methods = " + ",".join(self.methods),
            f"draws = {self.draws}",
            f"folds = {self.folds}",
            f"seed = {self.seed}",
            f"margin = {self.margin!r}",
            f"nonneg = {str(self.nonneg).lower()}",
            f"gamma_min = {self.gamma_min!r}",
            f"gamma_max = {self.gamma_max!r}",
            f"gamma_count = {self.gamma_count}",
            f"gamma_scaled = {str(self.gamma_scaled).lower()}",
            "sigma2_multipliers = " + ",".join(repr(v) for v in self.sigma2_multipliers),
            f"out_csv = {self.out_csv}",
            f"out_json = {self.out_json}",
        ]
        return "\n".join(lines) + "\n"


def _parse_bool(text: str) -> bool:
    if text.lower() in ("true", "1", "yes"):
        return True
    if text.lower() in ("false", "0", "no"):
        return False
    raise ConfigError(f"cannot parse boolean from '{text}'")


def _parse_list(text: str, conv):
    text = text.strip()
    if not text:
        return []
    try:
        return [conv(tok.strip()) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"unparsable list '{text}': {exc}") from exc


_KEY_PARSERS = {
    "models": lambda v: _parse_list(v, int),
    "sizes": lambda v: _parse_list(v, int) or None,
    "methods": lambda v: _parse_list(v, str),
    "draws": int,
    "folds": int,
    "seed": int,
    "margin": float,
    "nonneg": _parse_bool,
    "gamma_min": float,
    "gamma_max": float,
    "gamma_count": int,
    "gamma_scaled": _parse_bool,
    "sigma2_multipliers": lambda v: _parse_list(v, float),
    "out_csv": str,
    "out_json": str,
}


def parse_config(text: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Build a config from key=value text plus flag overrides (flags win)."""
    values = {}
    if text is not None:
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value, got '{raw.strip()}'")
            key, val = (part.strip() for part in line.split("=", 1))
            if key not in _KEY_PARSERS:
                raise ConfigError(f"line {lineno}: unknown key '{key}'")
            try:
                values[key] = _KEY_PARSERS[key](val)
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: cannot parse '{key}': {exc}") from exc
    for key, val in (overrides or {}).items():
        if key not in _KEY_PARSERS:
            raise ConfigError(f"unknown configuration key '{key}'")
        if val is not None:
            values[key] = val
    known = {f.name for f in fields(ExperimentConfig)}
    assert set(_KEY_PARSERS) == known
    config = ExperimentConfig(**values)
    config.validate()
    return config


def _record_rows(records: list[ExperimentRecord]):
    for rec in sorted(records, key=lambda r: (r.model_id, r.m, r.method.value, r.draw)):
        yield [
            rec.model_id,
            rec.m,
            rec.method.value,
            rec.draw,
            rec.seed,
            "" if rec.gamma is None else repr(rec.gamma),
            "" if rec.sigma2 is None else repr(rec.sigma2),
            "" if rec.nrmse is None else repr(rec.nrmse),
            rec.status,
        ]


def write_csv(path: str, records: list[ExperimentRecord]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["model", "m", "method", "draw", "seed", "gamma_selected",
             "sigma2_selected", "nrmse", "status"]
        )
        writer.writerows(_record_rows(records))


def write_json(path: str, config: ExperimentConfig, records: list[ExperimentRecord]):
    agg = aggregate(records)
    cells = [
        {"model": mid, "m": m, "method": meth.value, **stats}
        for (mid, m, meth), stats in agg.items()
    ]
    payload = {"config": config.to_text(), "cells": cells}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def print_table(config: ExperimentConfig, records: list[ExperimentRecord], out=sys.stdout):
    """Mean (std) NRMSE per model/size row and method column."""
    agg = aggregate(records)
    header = f"{'model':>5} {'m':>5}" + "".join(f" {meth:>16}" for meth in config.methods)
    print(header, file=out)
    keys = sorted({(mid, m) for (mid, m, _) in agg})
    for mid, m in keys:
        row = f"{mid:>5} {m:>5}"
        for meth in config.methods:
            stats = agg.get((mid, m, Method(meth)))
            if stats is None or stats["mean"] is None:
                row += f" {'failed':>16}"
            else:
                row += f" {stats['mean']:>8.3f} ({stats['std']:.3f})"
        print(row, file=out)


def run(config: ExperimentConfig) -> int:
    config.validate()
    plan = CvPlan(
        k=config.folds,
        gamma_grid=config.gamma_grid(),
        sigma2_grid=None,  # per-draw median heuristic times the configured multipliers
        seed=config.seed,
        scale_gamma=config.gamma_scaled,
        sigma2_multipliers=tuple(config.sigma2_multipliers),
    )
    records: list[ExperimentRecord] = []
    for model_id in config.models:
        for m in config.sizes_for(model_id):
            for meth in config.methods:
                records.extend(
                    run_experiment(
                        model_id, m, Method(meth), config.draws, plan, config.seed,
                        margin=config.margin, nonneg=config.nonneg,
                    )
                )
    write_csv(config.out_csv, records)
    write_json(config.out_json, config, records)
    print_table(config, records)
    agg = aggregate(records)
    any_dead = any(stats["failures"] == stats["draws"] for stats in agg.values())
    partial = any(stats["failures"] > 0 for stats in agg.values())
    return 1 if (any_dead or partial) else 0


def _load_points(path: str) -> np.ndarray:
    pts = np.loadtxt(path, ndmin=2)
    if pts.size == 0:
        raise ConfigError(f"no points in {path}")
    return pts


def fit_command(args) -> int:
    num = SampleSet(_load_points(args.numerator), Role.NUMERATOR)
    den = SampleSet(_load_points(args.denominator), Role.DENOMINATOR)
    box = fit_domain_box(num, den, margin=args.margin)
    s = scale(num, den, box)
    plan = CvPlan(k=args.folds, seed=args.seed)
    from .selection import cross_validate

    report = cross_validate(s, Method(args.method), plan)
    weights = report.estimate.predict(den.points)
    np.savetxt(args.out, weights)
    sigma_info = "" if report.selected_sigma2 is None else f", sigma2={report.selected_sigma2:g}"
    print(f"selected gamma={report.selected_gamma:g}{sigma_info}; wrote {len(weights)} "
          f"weights to {args.out}")
    return 0


def _self_checks() -> list[tuple[str, bool, str]]:
    """Quick property checks mirroring the oracle-backed test suite."""
    from .estimators import fit_dre_v, fit_dre_v_expansion, fit_dre_vk, kernel_spec_for
    from .kernels import KernelKind, KernelSpec, gram, ink1
    from .domain import DomainBox, ScaledSamples
    from .vmatrix import build_v_matrices

    checks = []
    rng = np.random.default_rng(20240)

    # PSD of V'' and kernel Gram matrices
    worst = 0.0
    for _ in range(10):
        pts = rng.random((30, 2))
        box = DomainBox(np.zeros(2), np.ones(2))
        s = ScaledSamples(pts, rng.random((10, 2)), box)
        vdd = build_v_matrices(s).v_dd
        worst = min(worst, float(np.linalg.eigvalsh(vdd).min()))
        for spec in (KernelSpec(KernelKind.INK_SPLINE_LINEAR, 2),
                     KernelSpec(KernelKind.RBF, 2, sigma2=0.5)):
            worst = min(worst, float(np.linalg.eigvalsh(gram(spec, pts)).min()))
    checks.append(("gram matrices PSD (min eig >= -1e-8)", worst >= -1e-8, f"min eig {worst:.2e}"))

    # closed-form INK kernel vs quadrature of its defining integral
    ts = np.linspace(0.0, 1.0, 100_001)
    err = 0.0
    for x in np.linspace(0.0, 1.0, 6):
        for y in np.linspace(0.0, 1.0, 6):
            integral = np.trapezoid(np.maximum(x - ts, 0) * np.maximum(y - ts, 0), ts)
            err = max(err, abs(ink1(x, y) - (1.0 + x * y + integral)))
    checks.append(("INK closed form matches integral (<= 1e-6)", err <= 1e-6, f"max err {err:.2e}"))

    # direct vs CV-form solution at the sample points
    box = DomainBox(np.zeros(1), np.ones(1))
    s = ScaledSamples(rng.random((25, 1)), rng.random((25, 1)), box)
    rel = 0.0
    for gamma in (1e-4, 1e-2, 1.0):
        direct = fit_dre_v(s, gamma).coef
        via_alpha = fit_dre_v_expansion(s, gamma).predict_scaled(s.x_prime)
        rel = max(rel, float(np.linalg.norm(direct - via_alpha) / np.linalg.norm(direct)))
    checks.append(("point-value and expansion forms agree (<= 1e-8)", rel <= 1e-8,
                   f"max rel err {rel:.2e}"))

    # matching measures => ratio near one
    pts = rng.random((20, 1))
    s_same = ScaledSamples(pts, pts, box)
    ok = True
    for est in (fit_dre_v(s_same, 1e-6),
                fit_dre_vk(s_same, kernel_spec_for(Method.DRE_VK_INK, 1), 1e-6)):
        vals = est.predict_scaled(pts)
        ok = ok and bool(np.all((vals >= 0.9) & (vals <= 1.1)))
    checks.append(("matching samples give ratio near 1", ok, ""))
    return checks


def validate_command(_args) -> int:
    failures = 0
    for name, ok, detail in _self_checks():
        status = "PASS" if ok else "FAIL"
        suffix = f" [{detail}]" if detail else ""
        print(f"[{status}] {name}{suffix}")
        failures += 0 if ok else 1
    return 0 if failures == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vratio", description="V-matrix density ratio estimation")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the synthetic benchmark")
    p_run.add_argument("--config", help="key=value config file")
    p_run.add_argument("--models", help="comma-separated model ids (1-7)")
    p_run.add_argument("--sizes", help="comma-separated sample sizes")
    p_run.add_argument("--methods", help="comma-separated methods: " + ",".join(DEFAULT_METHODS))
    p_run.add_argument("--draws", type=int)
    p_run.add_argument("--folds", type=int)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--margin", type=float)
    p_run.add_argument("--nonneg", action="store_const", const=True, default=None)
    p_run.add_argument("--gamma-min", type=float, dest="gamma_min")
    p_run.add_argument("--gamma-max", type=float, dest="gamma_max")
    p_run.add_argument("--gamma-count", type=int, dest="gamma_count")
    p_run.add_argument("--out-csv", dest="out_csv")
    p_run.add_argument("--out-json", dest="out_json")

    p_fit = sub.add_parser("fit", help="estimate weights for two point files")
    p_fit.add_argument("numerator", help="text file, one point per line")
    p_fit.add_argument("denominator", help="text file, one point per line")
    p_fit.add_argument("--method", default="dre-vk-ink", choices=DEFAULT_METHODS)
    p_fit.add_argument("--folds", type=int, default=5)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--margin", type=float, default=0.0)
    p_fit.add_argument("--out", default="weights.txt")

    sub.add_parser("validate", help="run built-in property checks")
    return parser


def _run_overrides(args) -> dict:
    overrides = {}
    for key in ("draws", "folds", "seed", "margin", "nonneg", "gamma_min", "gamma_max",
                "gamma_count", "out_csv", "out_json"):
        overrides[key] = getattr(args, key)
    if args.models is not None:
        overrides["models"] = _parse_list(args.models, int)
    if args.sizes is not None:
        overrides["sizes"] = _parse_list(args.sizes, int)
    if args.methods is not None:
        overrides["methods"] = _parse_list(args.methods, str)
    return overrides


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            text = None
            if args.config:
                with open(args.config) as fh:
                    text = fh.read()
            config = parse_config(text, _run_overrides(args))
            return run(config)
        if args.command == "fit":
            return fit_command(args)
        return validate_command(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
