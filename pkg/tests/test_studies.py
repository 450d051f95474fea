import json
import os

import numpy as np
import pytest

from abcselect.cli import main as cli_main
from abcselect.errors import ConfigError
from abcselect.reporting import emit_outputs
from abcselect.seeding import SeedSpec
from abcselect.studies import parse_config, run_study
from abcselect.toads import ToadConfig, simulate_toads


def _smoke_config(**overrides):
    raw = {
        "study": "normal_known",
        "n": 50,
        "n_datasets": 1,
        "draws": 100,
        "methods": ["stat", "cvm", "wass", "mmd"],
        "quantiles": [0.05],
        "true_model": "M0",
        "master_seed": 5,
    }
    raw.update(overrides)
    return parse_config(raw)


def test_parse_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        parse_config({"study": "normal_known", "n": 50, "methods": ["stat"],
                      "quantiles": [0.1], "true_model": "M0", "typo_key": 1})


def test_parse_config_validates_study_fields():
    with pytest.raises(ConfigError):
        parse_config({"study": "unknown", "methods": ["stat"], "quantiles": [0.1]})
    with pytest.raises(ConfigError):
        parse_config({"study": "expo_family", "methods": ["stat"], "quantiles": [0.1]})
    with pytest.raises(ConfigError):
        parse_config({"study": "normal_known", "n": 50, "methods": ["nope"],
                      "quantiles": [0.1]})
    with pytest.raises(ConfigError):
        parse_config({"study": "normal_known", "n": 50, "methods": ["stat"],
                      "quantiles": [0.0]})
    with pytest.raises(ConfigError):
        parse_config({"study": "normal_known", "n": 50, "methods": ["stat"],
                      "quantiles": [0.1], "true_model": "M1"})  # missing true_mu
    with pytest.raises(ConfigError):
        parse_config({"study": "normal_known", "n": 50, "methods": ["stat"],
                      "quantiles": [0.1], "study_params": {"bogus": 1}})
    with pytest.raises(ConfigError):
        parse_config({"study": "toad_real", "methods": ["cvm"], "quantiles": [0.1]})


def test_smoke_study_produces_rows_and_estimates():
    table = run_study(_smoke_config())
    assert len(table.rows) == 4  # one per (method, quantile)
    assert len(table.estimates) == 4
    for row in table.rows:
        assert row["per"] in (0.0, 1.0)
        assert row["mae"] is not None
        assert 0 <= row["mae"] <= 1
    for est in table.estimates:
        assert abs(sum(est["probs"]) - 1.0) < 1e-12
        assert est["exact"] is not None


def test_expo_study_exact_truth_and_all_models():
    cfg = parse_config({
        "study": "expo_family", "n": 60, "n_datasets": 1, "draws": 150,
        "methods": ["stat", "cvm"], "quantiles": [0.1], "true_model": "all",
        "master_seed": 6,
    })
    table = run_study(cfg)
    # 3 true models x 1 dataset x 2 methods x 1 quantile
    assert len(table.estimates) == 6
    labels = {e["true_model"] for e in table.estimates}
    assert labels == {"M1", "M2", "M3"}
    for est in table.estimates:
        assert est["exact"] is not None
        assert abs(sum(est["exact"]) - 1.0) < 1e-9


def test_normal_unknown_uses_stat_benchmark():
    cfg = parse_config({
        "study": "normal_unknown", "n": 40, "n_datasets": 2, "draws": 200,
        "methods": ["stat", "wass"], "quantiles": [0.05, 0.5], "true_model": "M0",
        "master_seed": 7,
    })
    table = run_study(cfg)
    stat_small_q = {
        e["dataset"]: e["probs"] for e in table.estimates
        if e["method_key"] == "stat" and e["quantile"] == 0.05
    }
    for e in table.estimates:
        assert e["exact"] == stat_small_q[e["dataset"]]
    stat_rows = [r for r in table.rows if r["method"] == "ABC-Stat"]
    assert all(r["mae"] is None for r in stat_rows)  # no self-scoring
    wass_rows = [r for r in table.rows if r["method"] == "ABC-Wass"]
    assert all(r["mae"] is not None for r in wass_rows)


def test_normal_unknown_requires_stat_method():
    cfg = parse_config({
        "study": "normal_unknown", "n": 40, "n_datasets": 1, "draws": 100,
        "methods": ["wass"], "quantiles": [0.1], "true_model": "M0",
        "master_seed": 7,
    })
    with pytest.raises(ConfigError):
        run_study(cfg)


def test_toad_sim_study_smoke():
    cfg = parse_config({
        "study": "toad_sim", "n_days": 20, "n_toads": 8, "n_datasets": 1,
        "draws": 60, "methods": ["cvm", "wass_log"], "quantiles": [0.1],
        "true_model": "M2", "master_seed": 8, "omega": 0.2,
    })
    table = run_study(cfg)
    assert len(table.estimates) == 2
    for est in table.estimates:
        assert len(est["probs"]) == 3
        assert abs(sum(est["probs"]) - 1.0) < 1e-12


def test_toad_real_study_smoke(tmp_path):
    mat = simulate_toads(ToadConfig(model=3, params=(1.65, 32.0, 0.43, 758.0),
                                    n_days=20, n_toads=8), SeedSpec(9))
    mat[3, 2] = np.nan
    path = tmp_path / "toads.csv"
    np.savetxt(path, mat, delimiter=",", fmt="%.6f")
    text = path.read_text().splitlines()
    text[3] = text[3].replace("nan", "")
    path.write_text("\n".join(text) + "\n")

    cfg = parse_config({
        "study": "toad_real", "n_days": 20, "n_toads": 8, "n_datasets": 1,
        "draws": 60, "methods": ["stat", "cvm", "wass_log"], "quantiles": [0.1],
        "master_seed": 10, "data_file": str(path),
    })
    table = run_study(cfg)
    assert len(table.rows) == 3
    for row in table.rows:
        assert row["per"] is None  # no truth for the real data
    for est in table.estimates:
        assert len(est["probs"]) == 3
        assert abs(sum(est["probs"]) - 1.0) < 1e-12
    assert table.metadata["toad_data"]["n_missing"] == 1


def test_run_reuse_across_quantiles():
    # all quantile rows derive from one stored run: draw counts match exactly
    cfg = _smoke_config(quantiles=[0.02, 0.1, 0.5], draws=200)
    table = run_study(cfg)
    for est in table.estimates:
        expected = int(np.ceil(est["quantile"] * 200))
        assert est["n_accepted"] == expected


def test_emit_outputs_deterministic_bytes(tmp_path):
    cfg = _smoke_config(draws=150)
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    emit_outputs(run_study(cfg), out1)
    emit_outputs(run_study(cfg), out2)
    for name in ("summary.csv", "estimates.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_emit_outputs_worker_invariance(tmp_path):
    cfg1 = _smoke_config(draws=200, workers=1)
    cfg8 = _smoke_config(draws=200, workers=8)
    out1 = tmp_path / "w1"
    out8 = tmp_path / "w8"
    emit_outputs(run_study(cfg1), out1)
    emit_outputs(run_study(cfg8), out8)
    for name in ("summary.csv", "estimates.csv"):
        assert (out1 / name).read_bytes() == (out8 / name).read_bytes()


def test_emit_outputs_plots_and_metadata(tmp_path):
    cfg = _smoke_config(draws=150)
    table = run_study(cfg)
    written = emit_outputs(table, tmp_path / "out", plots=True)
    assert os.path.exists(written["summary"])
    assert os.path.exists(written["metadata"])
    with open(written["metadata"]) as fh:
        meta = json.load(fh)
    # every documented decision lands in the metadata
    for key in ("quantile_rule", "cvm_ties", "variance_prior_on",
                "toad_summary_count", "mmd_engine_path", "bayes_factor_exponent"):
        assert key in meta["decisions"]
    svg = [k for k in written if k.startswith(("scatter", "boxplot"))]
    assert svg, "expected at least one plot"
    for k in svg:
        body = open(written[k]).read()
        assert body.startswith("<svg") and body.endswith("</svg>")


def test_empty_table_emits_headers(tmp_path):
    from abcselect.studies import ResultTable

    table = ResultTable("normal_known", ("M0", "M1"), [], [], {}, None)
    written = emit_outputs(table, tmp_path / "empty")
    lines = open(written["summary"]).read().splitlines()
    assert len(lines) == 1 and lines[0].startswith("study,")
    with open(written["metadata"]) as fh:
        json.load(fh)


# ---------------------------------------------------------------------------
# CLI


def test_cli_distance_identical_files(tmp_path, capsys):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    data = "\n".join(str(v) for v in [1.0, 2.0, 3.5, -1.0])
    a.write_text(data)
    b.write_text(data)
    rc = cli_main(["distance", "wasserstein1", str(a), str(b)])
    assert rc == 0
    assert float(capsys.readouterr().out.strip()) == 0.0


def test_cli_distance_mmd_and_log(tmp_path, capsys):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    a.write_text("\n".join(str(v) for v in [1.0, 2.0, 3.5, 4.0]))
    b.write_text("\n".join(str(v) for v in [1.5, 2.5, 3.0, 5.0]))
    rc = cli_main(["distance", "mmd", str(a), str(b), "--bandwidth", "1.0"])
    assert rc == 0
    float(capsys.readouterr().out.strip())
    rc = cli_main(["distance", "cvm", str(a), str(b), "--log"])
    assert rc == 0


def test_cli_oracle_expo(tmp_path, capsys):
    data = SeedSpec(11).generator().gamma(2.0, 1.0, 200)
    path = tmp_path / "y.csv"
    path.write_text("\n".join(repr(float(v)) for v in data))
    rc = cli_main(["oracle", "expo_family", str(path)])
    assert rc == 0
    probs = [float(x) for x in capsys.readouterr().out.strip().split(",")]
    assert len(probs) == 3
    assert sum(probs) == pytest.approx(1.0, abs=1e-9)


def test_cli_simulate_and_toad_load(tmp_path, capsys):
    out = tmp_path / "draws.csv"
    rc = cli_main(["simulate", "gandk", "--n", "50", "--seed", "3",
                   "--param", "g=1", "--param", "k=2", "--out", str(out)])
    assert rc == 0
    assert len(out.read_text().splitlines()) == 50

    toadcsv = tmp_path / "toads.csv"
    rc = cli_main(["simulate", "toad2", "--param", "days=15", "--param", "toads=4",
                   "--seed", "4", "--out", str(toadcsv)])
    assert rc == 0
    capsys.readouterr()
    rc = cli_main(["toad-load", str(toadcsv)])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["n_days"] == 15 and report["n_toads"] == 4


def test_cli_run_smoke(tmp_path, capsys):
    config = {
        "study": "normal_known", "n": 40, "n_datasets": 1, "draws": 100,
        "methods": ["stat", "wass"], "quantiles": [0.1], "true_model": "M0",
        "master_seed": 12, "out_dir": str(tmp_path / "res"),
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(config))
    rc = cli_main(["run", str(cfg_path)])
    assert rc == 0
    assert (tmp_path / "res" / "summary.csv").exists()
    assert "ABC-Stat" in capsys.readouterr().out


def test_cli_errors_exit_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"study": "normal_known", "typo": 1,
                               "methods": ["stat"], "quantiles": [0.1], "n": 10}))
    rc = cli_main(["run", str(bad)])
    assert rc == 1
    assert "error" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        cli_main(["distance", "nonsense", "a", "b"])
    assert exc.value.code == 2
