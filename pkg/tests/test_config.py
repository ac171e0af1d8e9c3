import math

import pytest

from mmdnet.config import SCHEMA, ConfigError, RunConfig
from mmdnet.reports import read_csv, render_csv, write_csv


def test_defaults():
    cfg = RunConfig()
    assert cfg["loss.alpha_pair"] == 0.01
    assert cfg["synth.noise_sigma"] == math.sqrt(0.1)
    assert cfg.kernel_spec().scales[0] == pytest.approx(0.01)
    assert cfg.train_config().epochs_pretrain == 4000


def test_parse_comments_and_lists():
    cfg = RunConfig.parse("# a comment\n\nkernel.base_scale = 10\nmodel.hidden = 8, 4\nmodel.bias = no\n")
    assert cfg["kernel.base_scale"] == 10.0
    assert cfg["model.hidden"] == (8, 4)
    assert cfg["model.bias"] is False


@pytest.mark.parametrize("text,match", [
    ("nonsense.key = 1", "x.cfg:1: unknown"),
    ("\nrun.seed = abc", "x.cfg:2: bad value"),
    ("run.seed", "x.cfg:1: expected"),
])
def test_parse_errors_name_the_line(text, match):
    with pytest.raises(ConfigError, match=match):
        RunConfig.parse(text, "x.cfg")


@pytest.mark.parametrize("key,value", [
    ("loss.alpha_pair", "1.5"),
    ("kernel.num_scales", "0"),
    ("model.activation", "softmax"),
    ("translate.method", "knn"),
    ("sweep.grid", "loss.alpha_pair"),
    ("sweep.grid", "model.hidden=1,2"),
    ("synth.alpha_sweep", "2"),
])
def test_semantic_validation(key, value):
    cfg = RunConfig()
    cfg.set(key, value)
    with pytest.raises(ConfigError):
        cfg.validate()


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        RunConfig.load(tmp_path / "nope.cfg")


def test_round_trip_equals_effective_settings():
    cfg = RunConfig().updated(kernel__base_scale=0.1, model__hidden=(5,), loss__alpha_pair=0.5)
    again = RunConfig.parse(cfg.to_text())
    assert again.values == cfg.values
    assert set(again.values) == set(SCHEMA)


def test_grid_parsing():
    cfg = RunConfig().updated(sweep__grid="kernel.base_scale=0.1, 1;loss.alpha_pair=0.5")
    assert cfg.grid() == [("kernel.base_scale", ("0.1", "1")), ("loss.alpha_pair", ("0.5",))]


def test_csv_header_round_trip(tmp_path):
    cfg = RunConfig()
    path = write_csv(tmp_path / "r.csv", ("a", "b", "ok"), [(1, 0.1, True), ("x", float("nan"), False)],
                     cfg.to_text())
    settings, rows = read_csv(path)
    assert RunConfig.parse("\n".join(f"{k} = {v}" for k, v in settings.items())).values == cfg.values
    assert rows[0] == {"a": "1", "b": "0.1", "ok": "true"}
    assert rows[1]["b"] == "nan"


def test_render_csv_dict_header():
    text = render_csv(("x",), [(1,)], {"seed": "3"})
    assert text == "# seed = 3\nx\n1\n"
