"""Command-line front-end: batch simulation, parameter sweeps, the equation
shape audit, and Wiener-solution export.

Exit codes: 0 success, 2 spec/parameter validation failure, 3 divergence
when --fail-on-diverge is set, 4 audit regression.  All artifacts are pure
functions of the spec file: UTF-8, LF line endings, %.17g float cells in
CSVs, sorted keys in JSON.  Artifacts are staged and moved into the output
directory only after the whole batch succeeded.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import shutil
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import analysis, shapecheck
from .errors import ExperimentSpecError, HarxlabError, ScenarioError
from .filters import POWER_INTERPRETATIONS, VARIANTS, FilterConfig
from .plant import HarxPlant, generate_sequence, load_scenario, muscle_preset

OUTDIR_ENV = "HARXLAB_OUTDIR"
EMIT_MODES = ("curves", "summary", "both")
SWEEP_PARAMS = ("eta", "beta", "v")

# Frozen at the first verified build; `harxlab audit` exits 4 on any drift.
GOLDEN_AUDIT: tuple[tuple[str, str], ...] = (
    (
        "eq8_original",
        "mismatch(mul-inner-dim: cannot multiply matrix(1,2) and vector(3): inner dimensions 2 and 3 differ)",
    ),
    ("eq10star_corrected", "well_formed(scalar)"),
    ("eq23", "mismatch(add-shape: cannot add scalar and vector(9))"),
    (
        "eq24",
        "mismatch(mul-vector-vector: cannot multiply vector(9) and vector(9): the plain product of two "
        "vectors is undefined (transpose one side for a dyad or an inner product))",
    ),
    ("eq25", "mismatch(equation-sides: left side is vector(9), right side is scalar)"),
    (
        "eq27",
        "mismatch(mul-vector-vector: cannot multiply vector(9) and vector(9): the plain product of two "
        "vectors is undefined (transpose one side for a dyad or an inner product))",
    ),
    ("F", "unsatisfiable(F: scalar vs matrix(9,9))"),
)


def _g(x: float) -> str:
    return format(float(x), ".17g")


def _jsonable(obj):
    """Make a document JSON-clean: numpy scalars/arrays to native types and
    non-finite floats to null."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _dumps(doc) -> str:
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# Experiment spec files: sectioned "key = value" text.
#
# [experiment]       plant, T, seeds, outputs, emit, input
# [filter NAME]      variant, eta, beta, v, power_interpretation, epsilon_guard


@dataclass(frozen=True)
class ExperimentSpec:
    path: Path
    plant: HarxPlant
    plant_ref: str
    filters: tuple[tuple[str, FilterConfig], ...]
    T: int
    seeds: tuple[int, ...]
    outputs: Path
    emit: str
    input_kind: str


def _parse_sections(text: str, path: str) -> list[tuple[str, int, dict[str, tuple[str, int]]]]:
    sections: list[tuple[str, int, dict[str, tuple[str, int]]]] = []
    current: dict[str, tuple[str, int]] | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ExperimentSpecError("unterminated section header", path, lineno)
            current = {}
            sections.append((line[1:-1].strip(), lineno, current))
            continue
        if current is None:
            raise ExperimentSpecError("key outside any [section]", path, lineno)
        if "=" not in line:
            raise ExperimentSpecError("expected 'key = value'", path, lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        if key in current:
            raise ExperimentSpecError(f"duplicate key {key!r}", path, lineno)
        current[key] = (value.strip(), lineno)
    return sections


def _pop_value(items, key, path, section_line, required=True, default=None):
    if key in items:
        return items.pop(key)
    if required:
        raise ExperimentSpecError(f"missing required key {key!r}", path, section_line)
    return default, section_line


def _as_int(value: str, key: str, path: str, line: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise ExperimentSpecError(f"{key} must be an integer, got {value!r}", path, line) from None


def _as_float(value: str, key: str, path: str, line: int) -> float:
    try:
        return float(value)
    except ValueError:
        raise ExperimentSpecError(f"{key} must be a number, got {value!r}", path, line) from None


def _reject_unknown(items, path: str) -> None:
    for key, (_, lineno) in items.items():
        raise ExperimentSpecError(f"unknown key {key!r}", path, lineno)


def load_experiment_spec(path) -> ExperimentSpec:
    """Parse and validate an experiment spec; every failure names the field
    and carries the offending line."""
    spec_path = Path(path)
    try:
        text = spec_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ExperimentSpecError(str(exc), str(spec_path)) from None
    pstr = str(spec_path)

    experiment = None
    filter_sections: list[tuple[str, int, dict]] = []
    for name, lineno, items in _parse_sections(text, pstr):
        if name == "experiment":
            if experiment is not None:
                raise ExperimentSpecError("duplicate [experiment] section", pstr, lineno)
            experiment = (lineno, items)
        elif name.startswith("filter"):
            parts = name.split(None, 1)
            if len(parts) != 2 or not re.fullmatch(r"[A-Za-z0-9_\-]+", parts[1]):
                raise ExperimentSpecError("filter section must be named like [filter NAME]", pstr, lineno)
            if any(parts[1] == existing for existing, _, _ in filter_sections):
                raise ExperimentSpecError(f"duplicate filter name {parts[1]!r}", pstr, lineno)
            filter_sections.append((parts[1], lineno, items))
        else:
            raise ExperimentSpecError(f"unknown section [{name}]", pstr, lineno)

    if experiment is None:
        raise ExperimentSpecError("missing [experiment] section", pstr)
    if not filter_sections:
        raise ExperimentSpecError("at least one [filter NAME] section is required", pstr)

    exp_line, items = experiment
    plant_ref, plant_line = _pop_value(items, "plant", pstr, exp_line)
    if plant_ref == "builtin:muscle":
        plant = muscle_preset()
    else:
        scenario_path = (spec_path.parent / plant_ref).resolve()
        try:
            plant = load_scenario(scenario_path)
        except OSError as exc:
            raise ExperimentSpecError(f"plant: {exc}", pstr, plant_line) from None

    value, line = _pop_value(items, "T", pstr, exp_line)
    T = _as_int(value, "T", pstr, line)
    if T <= plant.m:
        raise ExperimentSpecError(f"T must exceed the plant memory m={plant.m}; got T={T}", pstr, line)

    value, line = _pop_value(items, "seeds", pstr, exp_line)
    try:
        seeds = tuple(int(s) for s in value.split(","))
    except ValueError:
        raise ExperimentSpecError(f"seeds must be comma-separated integers, got {value!r}", pstr, line) from None
    if not seeds:
        raise ExperimentSpecError("seeds must be non-empty", pstr, line)
    if len(set(seeds)) != len(seeds):
        raise ExperimentSpecError("seeds must be distinct", pstr, line)

    value, _ = _pop_value(items, "outputs", pstr, exp_line, required=False, default="harxlab_out")
    outputs = spec_path.parent / value

    emit, line = _pop_value(items, "emit", pstr, exp_line, required=False, default="both")
    if emit not in EMIT_MODES:
        raise ExperimentSpecError(f"emit must be one of {EMIT_MODES}, got {emit!r}", pstr, line)

    input_kind, line = _pop_value(items, "input", pstr, exp_line, required=False, default="white_gaussian")
    if input_kind not in ("white_gaussian", "uniform"):
        raise ExperimentSpecError(f"input must be white_gaussian or uniform, got {input_kind!r}", pstr, line)
    _reject_unknown(items, pstr)

    filters = []
    for name, sec_line, fitems in filter_sections:
        variant, line = _pop_value(fitems, "variant", pstr, sec_line)
        if variant not in VARIANTS:
            raise ExperimentSpecError(f"variant must be one of {VARIANTS}, got {variant!r}", pstr, line)
        value, line = _pop_value(fitems, "eta", pstr, sec_line)
        eta = _as_float(value, "eta", pstr, line)
        if eta <= 0.0:
            raise ExperimentSpecError(f"eta must be > 0, got {eta}", pstr, line)
        value, line = _pop_value(fitems, "beta", pstr, sec_line, required=False, default="0")
        beta = _as_float(value, "beta", pstr, line)
        if not 0.0 <= beta < 1.0:
            raise ExperimentSpecError(f"beta must lie in [0, 1), got {beta}", pstr, line)
        value, line = _pop_value(fitems, "v", pstr, sec_line, required=False, default="1.0")
        v = _as_float(value, "v", pstr, line)
        if not 0.0 < v <= 1.0:
            raise ExperimentSpecError(f"v must lie in (0, 1], got {v}", pstr, line)
        interp, line = _pop_value(
            fitems, "power_interpretation", pstr, sec_line, required=False, default="elementwise_abs"
        )
        if interp not in POWER_INTERPRETATIONS:
            raise ExperimentSpecError(
                f"power_interpretation must be one of {POWER_INTERPRETATIONS}, got {interp!r}", pstr, line
            )
        value, line = _pop_value(fitems, "epsilon_guard", pstr, sec_line, required=False, default="0")
        guard = _as_float(value, "epsilon_guard", pstr, line)
        if guard < 0.0:
            raise ExperimentSpecError(f"epsilon_guard must be >= 0, got {guard}", pstr, line)
        _reject_unknown(fitems, pstr)
        filters.append(
            (
                name,
                FilterConfig(
                    variant=variant,
                    eta=eta,
                    dim=plant.n,
                    beta=beta,
                    v=v,
                    power_interpretation=interp,
                    epsilon_guard=guard,
                ),
            )
        )

    return ExperimentSpec(
        path=spec_path,
        plant=plant,
        plant_ref=plant_ref,
        filters=tuple(filters),
        T=T,
        seeds=seeds,
        outputs=outputs,
        emit=emit,
        input_kind=input_kind,
    )


# ---------------------------------------------------------------------------
# Artifact writing


def _resolve_outdir(spec: ExperimentSpec) -> Path:
    override = os.environ.get(OUTDIR_ENV)
    return Path(override) if override else spec.outputs


def _write_artifacts(outdir: Path, files: dict[str, str]) -> None:
    """Write all artifacts to a staging directory, then move them over.

    Nothing lands in ``outdir`` unless every artifact was produced.
    """
    outdir = Path(outdir)
    staging = outdir.parent / f".{outdir.name}.staging"
    if staging.exists():
        shutil.rmtree(staging)
    staging.mkdir(parents=True)
    for name in sorted(files):
        (staging / name).write_bytes(files[name].encode("utf-8"))
    outdir.mkdir(parents=True, exist_ok=True)
    for name in sorted(files):
        os.replace(staging / name, outdir / name)
    shutil.rmtree(staging)


# ---------------------------------------------------------------------------
# simulate


def _summary_doc(name: str, cfg: FilterConfig, spec: ExperimentSpec, records) -> dict:
    per_seed = []
    for seed, rec in records:
        per_seed.append({"seed": seed, **analysis.run_summary(rec)})
    ok = [rec for _, rec in records if not rec.diverged]
    aggregate = {
        "diverged_count": sum(1 for _, rec in records if rec.diverged),
        "terminal_mse_mean": float(np.mean([r.mse_curve[-1] for r in ok])) if ok else None,
        "terminal_weight_error_mean": float(np.mean([r.weight_error_curve[-1] for r in ok])) if ok else None,
        "terminal_weight_error_max": float(np.max([r.weight_error_curve[-1] for r in ok])) if ok else None,
        "leak_fraction_mean": float(np.mean([s["leak_fraction"] for s in per_seed])),
        "max_imag": float(np.max([s["max_imag"] for s in per_seed])),
    }
    return {
        "config": {
            "name": name,
            "variant": cfg.variant,
            "eta": cfg.eta,
            "beta": cfg.beta,
            "v": cfg.v,
            "power_interpretation": cfg.power_interpretation,
            "epsilon_guard": cfg.epsilon_guard,
            "dim": cfg.dim,
        },
        "plant": {
            "scenario": spec.plant_ref,
            "m": spec.plant.m,
            "l": spec.plant.basis.l,
            "noise_std": spec.plant.noise_std,
            "seed": spec.plant.seed,
        },
        "T": spec.T,
        "seeds": list(spec.seeds),
        "input": spec.input_kind,
        "per_seed": per_seed,
        "aggregate": aggregate,
    }


def cmd_simulate(args) -> int:
    spec = load_experiment_spec(args.spec)
    files: dict[str, str] = {}
    any_diverged = False
    for name, cfg in spec.filters:
        records = []
        for seed in spec.seeds:
            rec = analysis.run_experiment(spec.plant, cfg, spec.T, seed, spec.input_kind)
            any_diverged = any_diverged or rec.diverged
            records.append((seed, rec))
            if spec.emit in ("curves", "both"):
                files[f"{name}_seed{seed}.csv"] = analysis.run_record_csv(rec)
        if spec.emit in ("summary", "both"):
            files[f"{name}_summary.json"] = _dumps(_summary_doc(name, cfg, spec, records))
    outdir = _resolve_outdir(spec)
    _write_artifacts(outdir, files)
    print(f"wrote {len(files)} artifact(s) to {outdir}")
    if any_diverged and args.fail_on_diverge:
        print("at least one run diverged", file=sys.stderr)
        return 3
    return 0


# ---------------------------------------------------------------------------
# audit


def cmd_audit(args) -> int:
    rows = shapecheck.audit_corpus()
    got = [(eq_id, verdict.describe()) for eq_id, verdict in rows]
    if args.format == "json":
        print(json.dumps(shapecheck.audit_report(), sort_keys=True, indent=2))
    else:
        width = max(len(eq_id) for eq_id, _ in got)
        print(f"{'equation':<{width}}  verdict")
        for eq_id, described in got:
            print(f"{eq_id:<{width}}  {described}")
    if args.out:
        Path(args.out).write_text(_dumps(shapecheck.audit_report()), encoding="utf-8")
    expected = list(GOLDEN_AUDIT)
    if got != expected:
        print("audit regression against the golden verdict table:", file=sys.stderr)
        for i in range(max(len(got), len(expected))):
            have = got[i] if i < len(got) else None
            want = expected[i] if i < len(expected) else None
            if have != want:
                print(f"  row {i}: expected {want}, got {have}", file=sys.stderr)
        return 4
    return 0


# ---------------------------------------------------------------------------
# sweep

_PARAM_RANGES = {
    "eta": (lambda x: x > 0.0, "eta must be > 0"),
    "beta": (lambda x: 0.0 <= x < 1.0, "beta must lie in [0, 1)"),
    "v": (lambda x: 0.0 < x <= 1.0, "v must lie in (0, 1]"),
}


def cmd_sweep(args) -> int:
    spec = load_experiment_spec(args.spec)
    param = args.param
    try:
        grid = [float(x) for x in args.grid.split(",")]
    except ValueError:
        raise ExperimentSpecError(f"--grid must be comma-separated numbers, got {args.grid!r}") from None
    if not grid:
        raise ExperimentSpecError("--grid must be non-empty")
    legal, why = _PARAM_RANGES[param]
    for value in grid:
        if not legal(value):
            raise ExperimentSpecError(f"illegal {param} value {value}: {why}")
    if param == "eta" and any(b <= a for a, b in zip(grid, grid[1:])):
        raise ExperimentSpecError("eta grid must be strictly ascending")

    name, cfg = spec.filters[0]
    rows: list[tuple[str, analysis.SweepCell]] = []
    lambda_max = None
    eta_reference = None
    if param == "eta":
        probe = analysis.stability_probe(spec.plant, cfg, grid, spec.T, spec.seeds, spec.input_kind)
        lambda_max = probe.lambda_max
        eta_reference = probe.eta_reference
        for i, eta in enumerate(grid):
            rows.append(
                (
                    _g(eta),
                    analysis.SweepCell(
                        diverged_fraction=float(probe.diverged_fraction[i]),
                        terminal_weight_error_mean=float(probe.terminal_weight_error_mean[i]),
                        leak_fraction_mean=float(probe.leak_fraction_mean[i]),
                    ),
                )
            )
        ref_cell = analysis.sweep_cell(
            spec.plant, replace(cfg, eta=eta_reference), spec.T, spec.seeds, spec.input_kind
        )
        rows.append(("2/lambda_max", ref_cell))
    else:
        for value in grid:
            cell = analysis.sweep_cell(
                spec.plant, replace(cfg, **{param: value}), spec.T, spec.seeds, spec.input_kind
            )
            rows.append((_g(value), cell))

    lines = ["param_value,diverged_fraction,terminal_weight_error_mean,leak_fraction_mean"]
    for label, cell in rows:
        lines.append(
            f"{label},{_g(cell.diverged_fraction)},{_g(cell.terminal_weight_error_mean)},{_g(cell.leak_fraction_mean)}"
        )
    summary = {
        "param": param,
        "grid": grid,
        "config": name,
        "T": spec.T,
        "seeds": list(spec.seeds),
        "lambda_max": lambda_max,
        "eta_reference_2_over_lambda_max": eta_reference,
        "cells": [
            {
                "param_value": label,
                "diverged_fraction": cell.diverged_fraction,
                "terminal_weight_error_mean": cell.terminal_weight_error_mean,
                "leak_fraction_mean": cell.leak_fraction_mean,
            }
            for label, cell in rows
        ],
    }
    outdir = _resolve_outdir(spec)
    _write_artifacts(
        outdir,
        {f"sweep_{param}.csv": "\n".join(lines) + "\n", f"sweep_{param}.json": _dumps(summary)},
    )
    print(f"wrote sweep_{param}.csv and sweep_{param}.json to {outdir}")
    return 0


# ---------------------------------------------------------------------------
# wiener


def cmd_wiener(args) -> int:
    spec = load_experiment_spec(args.spec)
    data = generate_sequence(spec.plant, input_kind=spec.input_kind, T=spec.T, rng=np.random.default_rng(spec.seeds[0]))
    est = analysis.estimate_correlations(data)
    omega = analysis.wiener_solution(est, ridge=args.ridge)
    doc = analysis.correlation_summary(est, omega_opt=omega)
    doc["ridge"] = args.ridge
    doc["true_weight_vector"] = data.plant_truth.tolist()
    text = _dumps(doc)
    print(text, end="")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    return 0


# ---------------------------------------------------------------------------
# entry points


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="harxlab",
        description="Adaptive-filtering experiments on Hammerstein ARX plants, plus the equation shape audit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run every (filter, seed) cell of an experiment spec")
    p_sim.add_argument("spec", help="experiment spec file")
    p_sim.add_argument("--fail-on-diverge", action="store_true", help="exit 3 if any run diverged")
    p_sim.set_defaults(func=cmd_simulate)

    p_audit = sub.add_parser("audit", help="run the equation shape audit against the golden table")
    p_audit.add_argument("--format", choices=("text", "json"), default="text")
    p_audit.add_argument("--out", help="also write the JSON report to this path")
    p_audit.set_defaults(func=cmd_audit)

    p_sweep = sub.add_parser("sweep", help="sweep eta, beta, or v for the first filter config")
    p_sweep.add_argument("spec", help="experiment spec file")
    p_sweep.add_argument("--param", choices=SWEEP_PARAMS, required=True)
    p_sweep.add_argument("--grid", required=True, help="comma-separated parameter values")
    p_sweep.set_defaults(func=cmd_sweep)

    p_wiener = sub.add_parser("wiener", help="emit empirical correlations and the Wiener solution as JSON")
    p_wiener.add_argument("spec", help="experiment spec file")
    p_wiener.add_argument("--ridge", type=float, default=0.0)
    p_wiener.add_argument("--out", help="also write the JSON document to this path")
    p_wiener.set_defaults(func=cmd_wiener)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ExperimentSpecError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except HarxlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main_entry() -> None:
    raise SystemExit(main())
