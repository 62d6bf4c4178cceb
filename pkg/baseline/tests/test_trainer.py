"""Training pipeline mechanics on synthetic data (offline, random init)."""

from __future__ import annotations

import pytest
import torch
from torchvision import models as tv_models

from xray_baseline.config import BaselineConfig, SetupError
from xray_baseline.trainer import (build_model, evaluate_rows,
                                   read_prediction_csv, train_and_predict)


def offline_config(**overrides) -> BaselineConfig:
    defaults = dict(backbone="resnet18", mode="fewshot", epochs=0,
                    seeds=(0,), pretrained=False)
    defaults.update(overrides)
    return BaselineConfig(**defaults)


def test_config_defaults_match_training_recipe():
    rn18 = BaselineConfig(backbone="resnet18")
    vgg = BaselineConfig(backbone="vgg16")
    assert rn18.learning_rate == 0.1
    assert vgg.learning_rate == 0.001
    assert rn18.epochs == 20
    assert rn18.batch_size == 2
    assert rn18.lr_decay_epochs == (10, 15)
    assert rn18.lr_decay_factor == 5.0
    assert BaselineConfig(mode="fewshot").run_seeds == (0, 1, 2, 3, 4)
    assert BaselineConfig(mode="full").run_seeds == (0,)


def test_model_head_has_two_outputs():
    model = build_model("resnet18", pretrained=False)
    assert model.fc.out_features == 2
    logits = model(torch.zeros(1, 3, 224, 224))
    assert logits.shape == (1, 2)


def test_missing_pretrained_weights_is_setup_error(monkeypatch):
    def refuse(**kwargs):
        raise RuntimeError("weights unavailable")

    monkeypatch.setattr(tv_models, "resnet18", refuse)
    with pytest.raises(SetupError, match="resnet18"):
        build_model("resnet18", pretrained=True)


def test_epochs_zero_passthrough_emits_scorable_csv(tiny_tree, tmp_path, capsys):
    results = train_and_predict(offline_config(), tiny_tree, tmp_path / "out")
    assert len(results) == 1
    rows = read_prediction_csv(results[0].csv_path)
    # every test item exactly once, predictions drawn from the task classes
    assert sorted(r[0] for r in rows) == sorted(
        f"test/{c}/{n}" for c, k in (("COVID", 3), ("Normal", 2))
        for n in (f"t{i:03d}.png" for i in range(k)))
    assert all(r[2] in ("COVID", "Normal") for r in rows)
    assert "mean accuracy" in capsys.readouterr().out


def test_fewshot_training_runs_per_seed(tiny_tree, tmp_path):
    config = offline_config(epochs=1, seeds=(0, 1), lr=0.01)
    results = train_and_predict(config, tiny_tree, tmp_path / "out")
    assert [r.seed for r in results] == [0, 1]
    for result in results:
        assert result.csv_path.exists()
        assert 0.0 <= result.accuracy <= 1.0


def test_full_mode_uses_whole_training_split(tiny_tree, tmp_path):
    config = offline_config(mode="full", epochs=1, lr=0.01, seeds=(3,))
    (result,) = train_and_predict(config, tiny_tree, tmp_path / "out")
    assert result.csv_path.name == "predictions_resnet18_full_seed3.csv"
    assert len(read_prediction_csv(result.csv_path)) == 5


def test_internal_metrics_agree_with_harness_scoring(tiny_tree, tmp_path):
    """Cross-component check: the CSV scores identically in the harness."""
    icl_xray = pytest.importorskip("icl_xray")
    (result,) = train_and_predict(offline_config(), tiny_tree, tmp_path / "out")
    rows = read_prediction_csv(result.csv_path)

    covid, normal = icl_xray.ClassLabel("COVID"), icl_xray.ClassLabel("Normal")
    by_name = {"COVID": covid, "Normal": normal}
    predictions = [
        icl_xray.Prediction(item_id=item_id, predicted=by_name[predicted],
                            status=icl_xray.ParseStatus.PARSED,
                            explanation="", matched_line=predicted)
        for item_id, _truth, predicted in rows
    ]
    truths = {item_id: by_name[truth] for item_id, truth, _ in rows}
    harness_report = icl_xray.score_predictions(
        predictions, truths, covid,
        positive_name="COVID", negative_name="Normal")

    assert harness_report.accuracy == pytest.approx(result.accuracy, abs=1e-4)
    for name, block in (("COVID", harness_report.positive),
                        ("Normal", harness_report.negative)):
        assert block.precision == pytest.approx(
            result.per_class[name]["precision"], abs=1e-4)
        assert block.recall == pytest.approx(
            result.per_class[name]["recall"], abs=1e-4)
        assert block.f1 == pytest.approx(result.per_class[name]["f1"], abs=1e-4)


def test_evaluate_rows_arithmetic():
    rows = [("a", "COVID", "COVID"), ("b", "COVID", "Normal"),
            ("c", "Normal", "Normal"), ("d", "Normal", "Normal")]
    accuracy, per_class = evaluate_rows(rows, ("COVID", "Normal"))
    assert accuracy == pytest.approx(0.75)
    assert per_class["COVID"]["precision"] == pytest.approx(1.0)
    assert per_class["COVID"]["recall"] == pytest.approx(0.5)
    assert per_class["Normal"]["recall"] == pytest.approx(1.0)


def test_cli_smoke(tiny_tree, tmp_path):
    from xray_baseline.cli import main
    code = main(["--data", str(tiny_tree), "--out", str(tmp_path / "out"),
                 "--mode", "fewshot", "--epochs", "0", "--seeds", "0",
                 "--no-pretrained"])
    assert code == 0
    assert (tmp_path / "out" / "predictions_resnet18_fewshot_seed0.csv").exists()


def test_cli_reports_dataset_error(tmp_path, capsys):
    from xray_baseline.cli import main
    code = main(["--data", str(tmp_path), "--out", str(tmp_path / "out"),
                 "--no-pretrained"])
    assert code == 1
    assert "error:" in capsys.readouterr().err
