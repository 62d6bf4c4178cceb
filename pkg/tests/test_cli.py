"""Command-line interface: subcommands, exit codes, error categories."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
from PIL import Image

from icl_xray.cli import main
from icl_xray.runner import RunConfig

from conftest import correct_label, make_image
from test_runner import build_script


def test_validate_prints_counts(paper_tree, capsys):
    assert main(["validate", str(paper_tree)]) == 0
    out = capsys.readouterr().out
    assert "total 181" in out
    assert "total 46" in out


def test_validate_bad_root_reports_structural_category(tmp_path, capsys):
    assert main(["validate", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error:structural:")


def test_unknown_flag_is_usage_error(paper_tree):
    with pytest.raises(SystemExit) as excinfo:
        main(["validate", str(paper_tree), "--bogus"])
    assert excinfo.value.code == 2


def test_compose_writes_png(tmp_path, capsys):
    files = [str(make_image(tmp_path / f"img{i}.png", color=(i * 40, 10, 10)))
             for i in range(3)]
    out = tmp_path / "grid.png"
    assert main(["compose", *files, "--out", str(out)]) == 0
    with Image.open(out) as im:
        assert im.size == (3 * 512 + 4 * 8, 512 + 32 + 2 * 8)


def test_compose_capacity_error_category(tmp_path, capsys):
    files = [str(make_image(tmp_path / f"img{i}.png")) for i in range(4)]
    code = main(["compose", *files, "--out", str(tmp_path / "g.png"),
                 "--rows", "1", "--cols", "3"])
    assert code == 1
    assert capsys.readouterr().err.startswith("error:capacity:")


def write_mock_script(path: Path, entries: list) -> Path:
    path.write_text("\n".join(json.dumps(e) for e in entries) + "\n",
                    encoding="utf-8")
    return path


def test_run_with_mock_script_writes_manifest(small_tree, small_dataset,
                                              tmp_path, capsys):
    config = RunConfig(dataset_root=small_tree, strategy="naive", seed=7,
                       out_dir=tmp_path / "out")
    script = build_script(config, small_dataset, correct_label)
    script_path = write_mock_script(tmp_path / "script.jsonl", script)
    code = main(["run", "--dataset", str(small_tree), "--strategy", "naive",
                 "--seed", "7", "--out", str(tmp_path / "out"),
                 "--mock-script", str(script_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "manifest:" in out
    assert "accuracy=1.00" in out
    assert (tmp_path / "out" / "naive-seed7.jsonl").exists()


def test_run_icl_r1_uses_reasoning_flag(small_tree, small_dataset,
                                        tmp_path, capsys):
    config = RunConfig(dataset_root=small_tree, strategy="icl_r1", seed=7,
                       out_dir=tmp_path / "out", reasoning_text="hazy patches")
    script = build_script(config, small_dataset, correct_label)
    script_path = write_mock_script(tmp_path / "script.jsonl", script)
    code = main(["run", "--dataset", str(small_tree), "--strategy", "icl_r1",
                 "--seed", "7", "--out", str(tmp_path / "out"),
                 "--reasoning", "hazy patches",
                 "--mock-script", str(script_path)])
    assert code == 0
    manifest_text = (tmp_path / "out" / "icl_r1-seed7.jsonl").read_text()
    assert "hazy patches" in manifest_text


def test_score_round_trip_and_truncation(small_tree, small_dataset,
                                         tmp_path, capsys):
    config = RunConfig(dataset_root=small_tree, strategy="naive", seed=3,
                       out_dir=tmp_path / "out")
    script = build_script(config, small_dataset, correct_label)
    script_path = write_mock_script(tmp_path / "script.jsonl", script)
    main(["run", "--dataset", str(small_tree), "--strategy", "naive",
          "--seed", "3", "--out", str(tmp_path / "out"),
          "--mock-script", str(script_path)])
    manifest = tmp_path / "out" / "naive-seed3.jsonl"

    assert main(["score", str(manifest)]) == 0
    assert "matches embedded report: yes" in capsys.readouterr().out

    text = manifest.read_text(encoding="utf-8")
    manifest.write_text(text[:len(text) - 40], encoding="utf-8")
    assert main(["score", str(manifest)]) == 1
    assert capsys.readouterr().err.startswith("error:integrity:")


def test_report_aggregates_runs(small_tree, small_dataset, tmp_path, capsys):
    manifests = []
    for strategy in ("naive", "icl2"):
        out_dir = tmp_path / strategy
        config = RunConfig(dataset_root=small_tree, strategy=strategy, seed=5,
                           out_dir=out_dir)
        script = build_script(config, small_dataset, correct_label)
        script_path = write_mock_script(tmp_path / f"{strategy}.jsonl", script)
        main(["run", "--dataset", str(small_tree), "--strategy", strategy,
              "--seed", "5", "--out", str(out_dir),
              "--mock-script", str(script_path)])
        manifests.append(str(out_dir / f"{strategy}-seed5.jsonl"))
    out_csv = tmp_path / "summary.csv"
    assert main(["report", *manifests, "--out", str(out_csv)]) == 0
    lines = out_csv.read_text().strip().splitlines()
    assert len(lines) == 3
    assert lines[1].startswith("naive,5,")
    assert lines[2].startswith("icl2,5,")


def test_run_rejects_unknown_strategy(small_tree, tmp_path):
    with pytest.raises(SystemExit) as excinfo:
        main(["run", "--dataset", str(small_tree), "--strategy", "bogus",
              "--out", str(tmp_path)])
    assert excinfo.value.code == 2


def test_run_with_limit_smoke(small_tree, small_dataset, tmp_path, capsys):
    config = RunConfig(dataset_root=small_tree, strategy="icl2", seed=7,
                       out_dir=tmp_path / "out", limit=1)
    script = build_script(config, small_dataset, correct_label)
    script_path = write_mock_script(tmp_path / "script.jsonl", script)
    code = main(["run", "--dataset", str(small_tree), "--strategy", "icl2",
                 "--seed", "7", "--limit", "1", "--out", str(tmp_path / "out"),
                 "--mock-script", str(script_path)])
    assert code == 0
    assert "scored=1" in capsys.readouterr().out
