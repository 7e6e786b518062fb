from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from acvspec.cli import main
from acvspec.config import ConfigError, ExperimentConfig, parse_seed_range
from acvspec.linear_process import FilterCoefficients
from acvspec.noise import TailDistribution
from acvspec.reports import config_hash, read_header, read_matrix, write_csv, write_matrix

SMALL = """\
p = 30
n = 200
lags = [[0, 0], [1, 1]]
seeds = [1, 2, 3]
k = 2

[filter]
d = [2.0, 1.0, -1.0]
c = [1.0, 1.0, 1.0]

[dist]
kind = "student_t"
alpha = 1.5
"""


def _write(tmp_path: Path, text: str, name: str = "cfg.toml") -> Path:
    path = tmp_path / name
    path.write_text(text)
    return path


def test_config_round_trip() -> None:
    cfg = ExperimentConfig(
        kind="compare",
        filter=FilterCoefficients(np.array([[1.0, 2.0], [0.5, -1.0]]), k_min=-1),
        dist=TailDistribution.symmetric_pareto(1.2, 0.3),
        p=40,
        n=100,
        lags=[(0, 0), (0, 2)],
        seeds=[3, 4],
        symmetrized=True,
        thresholds={"alignment_min": 0.95},
    )
    again = ExperimentConfig.loads(cfg.dumps())
    assert again == cfg
    assert config_hash(again.to_dict()) == config_hash(cfg.to_dict())


def test_config_kind_comes_from_subcommand() -> None:
    cfg = ExperimentConfig.loads(SMALL, kind="predict")
    assert cfg.kind == "predict"
    assert cfg.filter.coeffs.shape == (3, 3)


def test_malformed_config_names_key() -> None:
    with pytest.raises(ConfigError, match="config key 'n'"):
        ExperimentConfig.loads(SMALL.replace("n = 200", "n = 200x"), kind="compare")
    with pytest.raises(ConfigError, match="config key 'bogus'"):
        ExperimentConfig.loads("bogus = 1\n" + SMALL, kind="compare")
    with pytest.raises(ConfigError, match="config key 'p'"):
        ExperimentConfig.loads(SMALL.replace("p = 30", "p = -3"), kind="compare")


def test_tail_index_four_rejected() -> None:
    text = SMALL.replace("alpha = 1.5", "alpha = 4.0")
    with pytest.raises(ConfigError, match="dist.alpha"):
        ExperimentConfig.loads(text, kind="compare")
    # the LSD needs finite variance instead
    ExperimentConfig.loads(text, kind="lsd")
    with pytest.raises(ConfigError, match="finite variance"):
        ExperimentConfig.loads(SMALL, kind="lsd")


def test_parse_seed_range() -> None:
    assert parse_seed_range("3..6") == [3, 4, 5, 6]
    assert parse_seed_range("1,5") == [1, 5]
    with pytest.raises(ValueError):
        parse_seed_range("6..3")


def test_cli_compare_writes_outputs(tmp_path, capsys) -> None:
    cfg = _write(tmp_path, SMALL)
    assert main(["compare", "--config", str(cfg), "--out", str(tmp_path / "run")]) == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed["kind"] == "compare"
    summary = json.loads((tmp_path / "run" / "compare_summary.json").read_text())
    assert summary["header"]["config_sha256"]
    assert summary["ratios"]["1-1/0-0"]["predicted"] == pytest.approx(4 / 9)
    header = read_header(tmp_path / "run" / "compare_seed1_lag0-0.csv")
    assert header["p"] == 30 and header["seed"] == 1


def test_cli_is_deterministic_across_threads(tmp_path) -> None:
    cfg = _write(tmp_path, SMALL)
    assert main(["compare", "--config", str(cfg), "--out", str(tmp_path / "a"), "--threads", "1"]) == 0
    assert main(["compare", "--config", str(cfg), "--out", str(tmp_path / "b"), "--threads", "3"]) == 0
    files_a = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files_a == sorted(p.name for p in (tmp_path / "b").iterdir())
    for name in files_a:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_cli_seed_override(tmp_path) -> None:
    cfg = _write(tmp_path, SMALL)
    assert main(["predict", "--config", str(cfg), "--out", str(tmp_path / "o"), "--seeds", "7..8"]) == 0
    names = {p.name for p in (tmp_path / "o").iterdir()}
    assert "predict_seed7_lag0-0.csv" in names and "predict_seed8_lag1-1.csv" in names
    assert "predict_seed1_lag0-0.csv" not in names


def test_cli_null_K_aborts(tmp_path, capsys) -> None:
    cfg = _write(tmp_path, SMALL.replace("lags = [[0, 0], [1, 1]]", "lags = [[3, 3]]"))
    assert main(["predict", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "null K-matrix at lags (3, 3)" in capsys.readouterr().err


def test_cli_empty_seed_set(tmp_path, capsys) -> None:
    cfg = _write(tmp_path, SMALL.replace("seeds = [1, 2, 3]", "seeds = []"))
    assert main(["compare", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "empty replication set" in capsys.readouterr().err


def test_cli_bad_alpha_and_missing_file(tmp_path, capsys) -> None:
    cfg = _write(tmp_path, SMALL.replace("alpha = 1.5", "alpha = 4.5"))
    assert main(["limits", "--config", str(cfg)]) == 2
    assert "dist.alpha" in capsys.readouterr().err
    assert main(["spectrum", "--config", str(tmp_path / "nope.toml")]) == 2


def test_cli_lsd_mass(tmp_path) -> None:
    text = """\
p = 200
n = 400
seeds = [0]

[filter]
coeffs = [[1.0, 1.0]]

[dist]
kind = "gaussian"
"""
    cfg = _write(tmp_path, text)
    assert main(["lsd", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    summary = json.loads((tmp_path / "o" / "lsd_summary.json").read_text())
    assert summary["mass"]["pass"]
    assert summary["mass"]["total"] == pytest.approx(1.0, abs=0.01)


def test_cli_spectrum_from_data(tmp_path) -> None:
    M = np.random.default_rng(0).normal(size=(6, 25))
    write_matrix(tmp_path / "data.csv", M)
    text = f"""\
p = 6
n = 24
lags = [[0, 1]]
data = "{tmp_path / 'data.csv'}"
dump_matrix = true

[filter]
coeffs = [[1.0]]

[dist]
kind = "gaussian"
"""
    cfg = _write(tmp_path, text)
    assert main(["spectrum", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    P = read_matrix(tmp_path / "o" / "matrix_data_lag0-1.csv")
    X0, X1 = M[:, :24], M[:, 1:25]
    expect = (X0 @ X0.T) @ (X0 @ X0.T).T + (X0 @ X1.T) @ (X0 @ X1.T).T
    assert np.allclose(P, expect, rtol=1e-12)


def test_csv_writer_header(tmp_path) -> None:
    path = write_csv(tmp_path / "t.csv", ["a", "b"], [[1, 2.5], [3, None]], {"seed": 4, "name": "x"})
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ")
    assert read_header(path) == {"seed": 4, "name": "x"}
    assert lines[-1].split(",")[0] == "3"


@pytest.mark.parametrize("name", sorted(p.name for p in (Path(__file__).parent.parent / "configs").glob("*.toml")))
def test_shipped_configs_load(name) -> None:
    path = Path(__file__).parent.parent / "configs" / name
    kind = {"separable_compare.toml": "compare", "example_filter_predict.toml": "predict",
            "frechet_limits.toml": "limits", "lsd_time_filter.toml": "lsd"}[name]
    cfg = ExperimentConfig.load(path, kind=kind)
    assert ExperimentConfig.loads(cfg.dumps()) == cfg
