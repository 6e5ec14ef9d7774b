import csv
import json
from pathlib import Path

import numpy as np
import pytest

from sc2adapt.cli import main
from sc2adapt.pipeline import (FULL_SINGLES, SC2, ConfigError, StageError, WorkflowConfig,
                               emit_results, load_record, new_record, run_stages, run_workflow)
from sc2adapt.pool import PoolLabel, generate_full_pool
from sc2adapt.schwinger import CONTINUUM_CONDENSATE


def small_config(tmp_path, **kw):
    base = dict(couplings=[0.8, 1.0], surrogate_volume=8, adapt_volume=8, output_dir=str(tmp_path))
    base.update(kw)
    return WorkflowConfig(**base)


@pytest.fixture(scope="module")
def small_record(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs")
    cfg = WorkflowConfig(couplings=[0.6, 0.8, 1.0, 1.2], surrogate_volume=10, adapt_volume=10,
                         delta=1e-2, output_dir=str(out))
    return cfg, run_workflow(cfg)


@pytest.mark.parametrize("bad", [
    dict(couplings=[]), dict(couplings=[1.0, 1.0]), dict(couplings=[-0.5]),
    dict(adapt_volume=7), dict(surrogate_volume=0), dict(delta=-1.0), dict(epsilon=0.0),
    dict(optimizer_tol=1e-2), dict(mode="bogus"), dict(workers=0), dict(spacing=0.0),
])
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        WorkflowConfig(**bad)


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        WorkflowConfig.from_dict({"coupling": [1.0]})


def test_config_yaml_roundtrip(tmp_path):
    cfg = WorkflowConfig(couplings=[0.5, 1.0], delta=1e-3)
    path = tmp_path / "c.yaml"
    path.write_text("couplings: [0.5, 1.0]\ndelta: 1.0e-3\n")
    assert WorkflowConfig.load(path) == cfg
    assert WorkflowConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.resolved_run_id() == WorkflowConfig.load(path).resolved_run_id()


def test_coupling_sets_g_at_fixed_spacing():
    p = WorkflowConfig(spacing=2.0).params(0.8, 6)
    assert p.ag == pytest.approx(0.8) and p.spacing == 2.0


def test_record_contents(small_record):
    cfg, rec = small_record
    assert rec["errors"] == [] and rec["config"] == cfg.to_dict()
    for entry in rec["couplings"]:
        assert entry["surrogate"]["residual"] < cfg.surrogate_tol
        assert max(s["ratio"] for s in entry["scores"]) == 1.0
        assert entry["adapt"]["history"]["converged"]
        vols = [v["volume"] for v in entry["volumes"]]
        assert vols == list(range(10, entry["min_volume"] - 1, -2))
        for v in entry["volumes"]:
            assert v["energy"] >= v["exact_energy"] - 1e-9
    assert np.isfinite(rec["continuum"]["limit"])
    assert load_record(tmp_record_path(cfg, rec)) == rec


def tmp_record_path(cfg, rec):
    return Path(cfg.output_dir) / rec["run_id"] / "record.json"


def test_sc2_sweep_reuses_top_circuit(small_record):
    _, rec = small_record
    for entry in rec["couplings"]:
        labels = [[lab for lab, _ in v["circuit"]] for v in entry["volumes"]]
        assert all(lab == labels[0] for lab in labels)


def test_emit_is_idempotent(small_record, tmp_path):
    _, rec = small_record
    first = {p.name: p.read_bytes() for p in emit_results(rec, "csv", tmp_path)}
    second = {p.name: p.read_bytes() for p in emit_results(rec, "csv", tmp_path)}
    assert first == second
    assert {"continuum.csv", "continuum_curve.csv", "condensate_ag1.csv", "scores_ag0.8.csv",
            "selections_ag1.csv", "angles_ag1.csv", "observables_ag1.csv"} <= set(first)


def test_emitted_numbers_come_from_record(small_record, tmp_path):
    _, rec = small_record
    emit_results(rec, "csv", tmp_path)
    run_dir = tmp_path / rec["run_id"]
    with open(run_dir / "condensate_ag1.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["volume", "value", "fit_value", "fit_err"]
    entry = rec["couplings"][2]
    expect = {v["volume"]: v["condensate_over_g"] for v in entry["volumes"]}
    assert {int(r["volume"]): float(r["value"]) for r in rows} == expect
    with open(run_dir / "continuum.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0]["kind"] == "analytic"
    assert float(rows[0]["value"]) == pytest.approx(CONTINUUM_CONDENSATE, abs=1e-6)
    assert float(rows[-1]["value"]) == rec["continuum"]["limit"]


def test_emit_json(small_record, tmp_path):
    _, rec = small_record
    paths = emit_results(rec, "json", tmp_path)
    data = json.loads(next(p for p in paths if p.name == "continuum.json").read_text())
    assert data[0]["kind"] == "analytic"
    with pytest.raises(ValueError):
        emit_results(rec, "xml", tmp_path)


def test_zero_depth_record_emits(tmp_path):
    cfg = small_config(tmp_path, couplings=[1.0], epsilon=1e3)
    rec = run_stages(cfg, new_record(cfg), ["score", "adapt"])
    assert rec["couplings"][0]["adapt"]["depth"] == 0
    names = {p.name for p in emit_results(rec, "csv", tmp_path)}
    assert "selections_ag1.csv" in names


def test_full_singles_keeps_every_label(tmp_path, monkeypatch):
    import sc2adapt.pipeline as mod

    def forbidden(*a, **k):
        raise AssertionError("truncation filter called in full-singles mode")

    monkeypatch.setattr(mod, "truncate_pool", forbidden)
    cfg = small_config(tmp_path, couplings=[1.0], mode=FULL_SINGLES, delta=0.0)
    rec = run_stages(cfg, new_record(cfg), ["score"], persist=False)
    entry = rec["couplings"][0]
    assert entry["truncated_pool"] == [str(lab) for lab in generate_full_pool(8)]
    assert entry["min_volume"] is None


def test_full_singles_runs_adapt_per_volume(tmp_path):
    cfg = small_config(tmp_path, couplings=[1.0], mode=FULL_SINGLES, full_singles_min_volume=4)
    rec = run_stages(cfg, new_record(cfg), ["score", "adapt", "sweep"], persist=False)
    vols = rec["couplings"][0]["volumes"]
    assert [v["volume"] for v in vols] == [8, 6, 4]
    assert all(v["history"]["converged"] for v in vols)


def test_heavier_cut_gives_smaller_pool(tmp_path):
    light = small_config(tmp_path, couplings=[1.0], delta=1e-5)
    heavy = small_config(tmp_path, couplings=[1.0], delta=1e-3)
    a = run_stages(light, new_record(light), ["score"], persist=False)["couplings"][0]
    b = run_stages(heavy, new_record(heavy), ["score"], persist=False)["couplings"][0]
    assert set(b["truncated_pool"]) <= set(a["truncated_pool"])
    assert b["min_volume"] <= a["min_volume"]


def test_stage_failure_keeps_partial_record(tmp_path, monkeypatch):
    import sc2adapt.pipeline as mod

    def boom(config, entry):
        raise RuntimeError("boom")

    monkeypatch.setitem(mod.COUPLING_STAGES, "adapt", boom)
    cfg = small_config(tmp_path)
    with pytest.raises(StageError) as info:
        run_stages(cfg, new_record(cfg), ["score", "adapt"])
    rec = info.value.record
    assert info.value.path.exists()
    assert all("scores" in e for e in rec["couplings"])
    assert [e["stage"] for e in rec["errors"]] == ["adapt", "adapt"]


def test_cli_config_error_writes_nothing(tmp_path, capsys):
    assert main(["score", "--couplings", "", "--out", str(tmp_path)]) == 2
    assert list(tmp_path.iterdir()) == []
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("epsilon: -1\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()


def test_cli_staged_run_matches_single_run(tmp_path, capsys):
    args = ["--couplings", "0.8,0.9,1.0,1.1", "--max-volume", "8", "--delta", "1e-2"]
    assert main(["score", *args, "--out", str(tmp_path / "a")]) == 0
    rec_path = next((tmp_path / "a").glob("*/record.json"))
    for verb in ("adapt", "sweep", "extrapolate"):
        assert main([verb, "--record", str(rec_path)]) == 0
    staged = json.loads(rec_path.read_text())
    assert main(["run", *args, "--out", str(tmp_path / "b")]) == 0
    whole = json.loads(next((tmp_path / "b").glob("*/record.json")).read_text())
    assert staged["continuum"]["limit"] == whole["continuum"]["limit"]
    assert "continuum condensate" in capsys.readouterr().out


def test_cli_stage_failure_exit_code(tmp_path, monkeypatch):
    import sc2adapt.pipeline as mod

    def boom(config, entry):
        raise RuntimeError("boom")

    monkeypatch.setitem(mod.COUPLING_STAGES, "score", boom)
    assert main(["score", "--couplings", "1.0", "--max-volume", "4", "--out", str(tmp_path)]) == 1
    assert next(tmp_path.glob("*/record.json")).exists()


def test_labels_in_record_parse(small_record):
    _, rec = small_record
    for entry in rec["couplings"]:
        for s in entry["truncated_pool"]:
            PoolLabel.parse(s)
        assert entry["adapt"]["history"]["steps"][0]["label"] == "V(1)"
    assert rec["config"]["mode"] == SC2
