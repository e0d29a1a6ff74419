"""Command-line interface: output shapes, exit codes, refusal paths."""

import json
from pathlib import Path

import pytest

from kwsnas.archspec import (
    ConvLayerSpec,
    NetworkArch,
    TensorShape,
    arch_to_dict,
    derive_space,
    save_space,
)
from kwsnas.cli import main
from kwsnas.engine import canonical_record

REPO = Path(__file__).resolve().parents[1]
SEED_ARCH = str(REPO / "configs" / "seed_arch.json")


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_small_experiment(tmp_path):
    seed = NetworkArch(
        input=TensorShape(c=1, h=8, w=8),
        layers=(ConvLayerSpec(kh=3, kw=3, m=6), ConvLayerSpec(kh=3, kw=3, m=6)),
    )
    save_space(derive_space(seed), tmp_path / "space.json")
    cfg = {
        "space_file": "space.json",
        "phases": [
            {"budget": 3, "solver": {"optimizer": "adam", "lr": 1e-3, "batch": 25, "iterations": 2000, "decay": None}},
            {"budget": 3, "solver": {"optimizer": "adam", "lr": 1e-3, "batch": 25, "iterations": 2000, "decay": None}},
        ],
        "finetune_iterations": 4000,
        "seed": 3,
        "evaluator": {"kind": "surrogate"},
    }
    cfg_path = tmp_path / "experiment.json"
    cfg_path.write_text(json.dumps(cfg))
    return cfg_path


def write_synthetic_log(tmp_path):
    records = [
        {"event": "proposed", "run": "x", "id": 1, "phase": 0,
         "assignment": {"kh0": 1}, "ops": 500_000, "params": 10},
        {"event": "evaluated", "run": "x", "id": 1, "top1": 0.8901,
         "iterations": 100, "samples": 10_000},
        {"event": "proposed", "run": "x", "id": 2, "phase": 0,
         "assignment": {"kh0": 2}, "ops": 400_000, "params": 8},
        {"event": "evaluated", "run": "x", "id": 2, "top1": 0.8899,
         "iterations": 100, "samples": 10_000},
    ]
    path = tmp_path / "synthetic.log"
    path.write_text("".join(canonical_record(r) + "\n" for r in records))
    return path


# ---------------------------------------------------------------------------
# cost


def test_cost_text_seed(capsys):
    code, out, _ = run_cli(capsys, "cost", SEED_ARCH)
    assert code == 0
    assert "total ops 613184000 (613.18 MFLOPs), params 454000" in out
    assert sum(1 for line in out.splitlines() if line.startswith("layer ")) == 6


def test_cost_csv_seed(capsys):
    code, out, _ = run_cli(capsys, "cost", SEED_ARCH, "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "layer,kh,kw,m,sh,sw,padding,out_h,out_w,ops,params"
    assert len(lines) == 8
    assert lines[-1] == "total,,,,,,,,,613184000,454000"


def test_cost_minimal_network(tmp_path, capsys):
    arch = NetworkArch(input=TensorShape(c=1, h=1, w=1), layers=(ConvLayerSpec(kh=1, kw=1, m=1),))
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(arch_to_dict(arch)))
    code, out, _ = run_cli(capsys, "cost", str(path))
    assert code == 0
    assert "total ops 3 (0.00 MFLOPs), params 1" in out


def test_cost_bad_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"layers": []}')
    code, _, err = run_cli(capsys, "cost", str(bad))
    assert code == 1
    assert err.startswith("error:")
    code, _, err = run_cli(capsys, "cost", str(tmp_path / "missing.json"))
    assert code == 1


# ---------------------------------------------------------------------------
# compare


def test_compare_identity(capsys):
    code, out, _ = run_cli(capsys, "compare", "100", "100", "0.9", "0.9")
    assert code == 0
    assert "speedup 1.00×" in out
    assert "delta_top1 +0.00" in out


def test_compare_published_style_row(capsys):
    code, out, _ = run_cli(
        capsys, "compare", "581.12M", "167.68M", "0.9423", "0.9425", "--format", "csv"
    )
    assert code == 0
    assert out.splitlines() == [
        "label,top1,mflops,delta_top1,speedup",
        "model,0.9425,167.68,+0.02,3.47",
    ]


def test_compare_csv_byte_stable(capsys):
    args = ("compare", "613184000", "17.22M", "0.9423", "0.8960", "--format", "csv")
    _, first, _ = run_cli(capsys, *args)
    _, second, _ = run_cli(capsys, *args)
    assert first == second


def test_compare_rejects_nonpositive_ops(capsys):
    code, _, err = run_cli(capsys, "compare", "0", "100", "0.9", "0.9")
    assert code == 1 and "error:" in err
    code, _, err = run_cli(capsys, "compare", "100", "-5", "0.9", "0.9")
    assert code == 1


def test_compare_rejects_garbage_ops(capsys):
    code, _, err = run_cli(capsys, "compare", "fast", "100", "0.9", "0.9")
    assert code == 1
    assert "not an operation count" in err


def test_compare_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["compare", "100"])
    assert exc.value.code == 2


# ---------------------------------------------------------------------------
# search / resume


def test_search_resume_pareto_report_roundtrip(tmp_path, capsys):
    cfg_path = write_small_experiment(tmp_path)
    log_path = tmp_path / "trial.log"

    code, out, _ = run_cli(capsys, "search", str(cfg_path), "--log", str(log_path))
    assert code == 0
    assert "frontier:" in out
    assert log_path.exists()
    saved = log_path.read_bytes()

    # a second search on the same log must refuse
    code, _, err = run_cli(capsys, "search", str(cfg_path), "--log", str(log_path))
    assert code == 1
    assert "use resume" in err

    # resume over a complete log verifies and leaves it unchanged
    code, out, _ = run_cli(capsys, "resume", str(cfg_path), "--log", str(log_path))
    assert code == 0
    assert log_path.read_bytes() == saved

    code, out, _ = run_cli(capsys, "pareto", str(log_path))
    assert code == 0
    assert out.strip().endswith("frontier models")

    code, out, _ = run_cli(capsys, "pareto", str(log_path), "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "trial_id,top1,mflops,assignment"
    costs = [float(line.split(",")[2]) for line in lines[1:]]
    assert costs == sorted(costs, reverse=True)

    code, out, _ = run_cli(
        capsys, "report", str(log_path),
        "--seed-arch", SEED_ARCH, "--seed-top1", "0.9423", "--format", "csv",
    )
    assert code == 0
    blocks = out.split("\n\n")
    assert len(blocks) == 2
    scatter = blocks[0].splitlines()
    assert scatter[0] == "trial_id,ops,top1,phase,is_pareto,is_finetuned"
    assert len(scatter) == 7  # six trials evaluated
    deltas = blocks[1].splitlines()
    assert deltas[0] == "label,top1,mflops,delta_top1,speedup,in_band"
    assert deltas[1].startswith("seed,0.9423,613.18,+0.00,1.00,")


def test_search_seed_override_changes_log(tmp_path, capsys):
    cfg_path = write_small_experiment(tmp_path)
    run_cli(capsys, "search", str(cfg_path), "--log", str(tmp_path / "a.log"))
    run_cli(capsys, "search", str(cfg_path), "--log", str(tmp_path / "b.log"), "--seed", "99")
    assert (tmp_path / "a.log").read_bytes() != (tmp_path / "b.log").read_bytes()


def test_resume_requires_existing_log(tmp_path, capsys):
    cfg_path = write_small_experiment(tmp_path)
    code, _, err = run_cli(capsys, "resume", str(cfg_path), "--log", str(tmp_path / "none.log"))
    assert code == 1
    assert "does not exist" in err


def test_search_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    code, _, err = run_cli(capsys, "search", str(bad), "--log", str(tmp_path / "x.log"))
    assert code == 1
    assert "error:" in err


# ---------------------------------------------------------------------------
# report details


def test_report_band_edges(tmp_path, capsys):
    log_path = write_synthetic_log(tmp_path)
    code, out, _ = run_cli(
        capsys, "report", str(log_path),
        "--seed-ops", "1M", "--seed-top1", "0.9", "--format", "csv",
    )
    assert code == 0
    deltas = {row.split(",")[0]: row.split(",") for row in out.split("\n\n")[1].splitlines()[1:]}
    assert deltas["trial-1"][3] == "-0.99" and deltas["trial-1"][5] == "1"
    assert deltas["trial-2"][3] == "-1.01" and deltas["trial-2"][5] == "0"
    assert deltas["trial-1"][4] == "2.00"
    assert deltas["trial-2"][4] == "2.50"


def test_report_band_is_adjustable(tmp_path, capsys):
    log_path = write_synthetic_log(tmp_path)
    code, out, _ = run_cli(
        capsys, "report", str(log_path),
        "--seed-ops", "1M", "--seed-top1", "0.9", "--band", "2.0", "--format", "csv",
    )
    assert code == 0
    rows = out.split("\n\n")[1].splitlines()[1:]
    assert all(row.endswith(",1") for row in rows)


def test_report_seed_sources_are_exclusive(tmp_path):
    log_path = str(write_synthetic_log(tmp_path))
    with pytest.raises(SystemExit) as exc:
        main(["report", log_path, "--seed-ops", "1M", "--seed-arch", SEED_ARCH, "--seed-top1", "0.9"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["report", log_path, "--seed-top1", "0.9"])
    assert exc.value.code == 2


def test_report_empty_log(tmp_path, capsys):
    empty = tmp_path / "empty.log"
    empty.write_text("")
    code, _, err = run_cli(capsys, "report", str(empty), "--seed-ops", "1M", "--seed-top1", "0.9")
    assert code == 1
    assert "no evaluated trials" in err


# ---------------------------------------------------------------------------
# parser


def test_unknown_command():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_no_command():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
