import json
from pathlib import Path

import numpy as np
import pytest

from harxlab import analysis, cli
from harxlab.filters import FilterConfig

SCENARIO = """\
m = 3
l = 1
basis = polynomial
q = 0.6, 0.3, 0.1
c = 1.0
noise_std = 0.01
seed = 3
"""

SPEC = """\
[experiment]
plant = lin.scenario
T = 300
seeds = 1, 2, 3
outputs = out
emit = both

[filter lms_small]
variant = lms
eta = 0.05

[filter mom]
variant = momentum_lms
eta = 0.05
beta = 0.4
"""


def write_spec(tmp_path, spec_text=SPEC, scenario_text=SCENARIO):
    (tmp_path / "lin.scenario").write_text(scenario_text, encoding="utf-8")
    spec = tmp_path / "run.spec"
    spec.write_text(spec_text, encoding="utf-8")
    return spec


def read_artifacts(outdir: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(outdir.iterdir())}


# ---------------------------------------------------------------------------
# simulate


def test_simulate_artifact_counts(tmp_path, capsys):
    spec = write_spec(tmp_path)
    assert cli.main(["simulate", str(spec)]) == 0
    outdir = tmp_path / "out"
    names = sorted(p.name for p in outdir.iterdir())
    csvs = [n for n in names if n.endswith(".csv")]
    summaries = [n for n in names if n.endswith("_summary.json")]
    assert len(csvs) == 6  # 2 configs x 3 seeds
    assert len(summaries) == 2
    doc = json.loads((outdir / "lms_small_summary.json").read_text())
    assert doc["aggregate"]["diverged_count"] == 0
    assert len(doc["per_seed"]) == 3
    assert doc["config"]["variant"] == "lms"


def test_simulate_validation_exit_2_names_field(tmp_path, capsys):
    spec = write_spec(tmp_path, SPEC.replace("T = 300", "T = 3"))
    assert cli.main(["simulate", str(spec)]) == 2
    err = capsys.readouterr().err
    assert "T" in err and ":3:" in err  # line-anchored, names the field
    assert not (tmp_path / "out").exists()  # nothing written on failure


def test_simulate_byte_identical_reruns(tmp_path):
    spec = write_spec(tmp_path)
    assert cli.main(["simulate", str(spec)]) == 0
    first = read_artifacts(tmp_path / "out")
    assert cli.main(["simulate", str(spec)]) == 0
    second = read_artifacts(tmp_path / "out")
    assert first == second
    assert all(b"\r" not in content for content in first.values())


def test_simulate_fail_on_diverge(tmp_path):
    diverging = SPEC.replace("eta = 0.05\n\n[filter mom]", "eta = 40.0\n\n[filter mom]")
    spec = write_spec(tmp_path, diverging)
    assert cli.main(["simulate", str(spec)]) == 0  # without the flag: artifacts, exit 0
    assert cli.main(["simulate", str(spec), "--fail-on-diverge"]) == 3


def test_simulate_emit_modes(tmp_path):
    spec = write_spec(tmp_path, SPEC.replace("emit = both", "emit = curves"))
    assert cli.main(["simulate", str(spec)]) == 0
    names = [p.name for p in (tmp_path / "out").iterdir()]
    assert all(n.endswith(".csv") for n in names)


def test_simulate_outdir_env_override(tmp_path, monkeypatch):
    spec = write_spec(tmp_path)
    override = tmp_path / "elsewhere"
    monkeypatch.setenv(cli.OUTDIR_ENV, str(override))
    assert cli.main(["simulate", str(spec)]) == 0
    assert override.exists() and not (tmp_path / "out").exists()


def test_spec_parse_errors(tmp_path, capsys):
    bad = [
        ("[experiment]\nT = 10\n\n[filter f]\nvariant = lms\neta = 0.1\n", "missing required key"),
        ("key = 1\n", "outside any"),
        (SPEC.replace("seeds = 1, 2, 3", "seeds = 1, 1"), "distinct"),
        (SPEC.replace("variant = lms", "variant = rls"), "variant"),
        (SPEC + "\n[filter lms_small]\nvariant = lms\neta = 0.1\n", "duplicate filter"),
        (SPEC.replace("eta = 0.05\n\n[filter mom]", "eta = 0.05\nbogus = 1\n\n[filter mom]"), "unknown key"),
    ]
    for text, needle in bad:
        spec = write_spec(tmp_path, text)
        assert cli.main(["simulate", str(spec)]) == 2, text
        assert needle in capsys.readouterr().err


def test_builtin_muscle_plant_reference(tmp_path):
    spec_text = SPEC.replace("plant = lin.scenario", "plant = builtin:muscle").replace("eta = 0.05", "eta = 0.002")
    spec = write_spec(tmp_path, spec_text)
    assert cli.main(["simulate", str(spec)]) == 0
    doc = json.loads((tmp_path / "out" / "lms_small_summary.json").read_text())
    assert doc["plant"]["m"] == 3 and doc["plant"]["l"] == 3


# ---------------------------------------------------------------------------
# audit


def test_audit_exit_zero_and_table(capsys):
    assert cli.main(["audit"]) == 0
    out = capsys.readouterr().out
    lines = [line for line in out.splitlines() if line.strip()]
    assert len(lines) == 8  # header + 7 corpus rows
    for eq_id, _ in cli.GOLDEN_AUDIT:
        assert any(line.startswith(eq_id) for line in lines)


def test_audit_json_format(capsys, tmp_path):
    out_path = tmp_path / "report.json"
    assert cli.main(["audit", "--format", "json", "--out", str(out_path)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert isinstance(doc, list) and len(doc) == 7
    for row in doc:
        assert set(row) == {"equation_id", "verdict", "message"}
        assert row["verdict"] in ("well_formed", "mismatch", "unsatisfiable")
    assert json.loads(out_path.read_text())[0]["equation_id"] == "eq8_original"


def test_audit_regression_guard(monkeypatch, capsys):
    # simulate a mutated checker: the scalar+vector defect goes undetected
    from harxlab import shapecheck

    real_rows = shapecheck.audit_corpus()

    def mutated():
        rows = []
        for eq_id, verdict in real_rows:
            if eq_id == "eq23":
                verdict = shapecheck.ShapeVerdict.well_formed(shapecheck.Shape.vector(9))
            rows.append((eq_id, verdict))
        return rows

    monkeypatch.setattr(cli.shapecheck, "audit_corpus", mutated)
    assert cli.main(["audit"]) == 4
    err = capsys.readouterr().err
    assert "eq23" in err and "regression" in err


# ---------------------------------------------------------------------------
# sweep


def test_sweep_beta_grid_validation(tmp_path, capsys):
    spec = write_spec(tmp_path)
    assert cli.main(["sweep", str(spec), "--param", "beta", "--grid", "0.0,0.5,1.0"]) == 2
    assert "beta" in capsys.readouterr().err


def test_sweep_eta_includes_reference_row(tmp_path):
    spec = write_spec(tmp_path)
    assert cli.main(["sweep", str(spec), "--param", "eta", "--grid", "0.02,0.2,8.0"]) == 0
    lines = (tmp_path / "out" / "sweep_eta.csv").read_text().splitlines()
    assert lines[0] == "param_value,diverged_fraction,terminal_weight_error_mean,leak_fraction_mean"
    assert len(lines) == 5  # header + 3 grid rows + reference row
    assert lines[-1].startswith("2/lambda_max,")
    fractions = [float(line.split(",")[1]) for line in lines[1:4]]
    assert fractions == sorted(fractions)
    assert fractions[0] == 0.0 and fractions[-1] == 1.0
    doc = json.loads((tmp_path / "out" / "sweep_eta.json").read_text())
    assert doc["eta_reference_2_over_lambda_max"] == pytest.approx(2.0 / doc["lambda_max"])


def test_sweep_eta_must_ascend(tmp_path, capsys):
    spec = write_spec(tmp_path)
    assert cli.main(["sweep", str(spec), "--param", "eta", "--grid", "0.2,0.1"]) == 2
    assert "ascending" in capsys.readouterr().err


def test_sweep_v_singleton_matches_momentum_double_step(tmp_path):
    spec_text = """\
[experiment]
plant = lin.scenario
T = 400
seeds = 1, 2
outputs = out
emit = summary

[filter frac]
variant = mflms_modulus
eta = 0.05
beta = 0.3
v = 0.5
"""
    spec = write_spec(tmp_path, spec_text)
    assert cli.main(["sweep", str(spec), "--param", "v", "--grid", "1.0"]) == 0
    lines = (tmp_path / "out" / "sweep_v.csv").read_text().splitlines()
    swept = float(lines[1].split(",")[2])

    # direct momentum run at 2*eta over the same plant/seeds
    from harxlab.plant import load_scenario

    plant = load_scenario(tmp_path / "lin.scenario")
    cfg = FilterConfig(variant="momentum_lms", eta=0.1, dim=plant.n, beta=0.3)
    terminal = np.mean(
        [analysis.run_experiment(plant, cfg, 400, s).weight_error_curve[-1] for s in (1, 2)]
    )
    assert abs(swept - float(terminal)) <= 1e-12


# ---------------------------------------------------------------------------
# wiener


def test_wiener_json_document(tmp_path, capsys):
    spec = write_spec(tmp_path, SPEC.replace("T = 300", "T = 4000"))
    assert cli.main(["wiener", str(spec)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["sample_count"] == 4000 - 3
    assert len(doc["omega_opt"]) == 3 and len(doc["R"]) == 3
    assert doc["eta_stability_reference"] == pytest.approx(2.0 / doc["lambda_max"])
    gap = np.linalg.norm(np.array(doc["omega_opt"]) - np.array(doc["true_weight_vector"]))
    assert gap < 0.05
