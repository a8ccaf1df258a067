import dataclasses
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from typedbandits.bounds import eq1_lower_bound, gamma, thm1_bound, thm3_bound
from typedbandits.cli import (
    ExperimentConfig,
    config_to_dict,
    load_config,
    main,
    preset_fig1,
    preset_fig2,
    run,
)
from typedbandits.env import AlgorithmSpec, ArrivalConfig

REPO_CONFIGS = "configs"


def tiny_config(**overrides):
    base = ExperimentConfig(
        parameter_set=((0.6, 0.5, 0.5, 0.5), (0.5, 0.6, 0.5, 0.5)),
        arrival=ArrivalConfig(num_users=8, tau=25, type_probs=(0.5, 0.5)),
        algorithms=(
            AlgorithmSpec("oracle"),
            AlgorithmSpec("per-user-ucb"),
            AlgorithmSpec("unif-cluster-et", {"m0": 3, "delta": 0.01}),
        ),
        runs=3,
        seed=99,
        checkpoint_every=50,
    )
    return dataclasses.replace(base, **overrides) if overrides else base


class TestPresets:
    def test_fig1_matrix(self):
        cfg = preset_fig1()
        matrix = np.array(cfg.parameter_set)
        assert matrix.shape == (21, 21)
        assert matrix[0, 0] == 0.55
        assert (matrix[0, 1:] == 0.5).all()
        assert matrix[7, 7] == 0.6
        assert matrix[7, 0] == 0.55
        assert matrix[12, 3] == 0.5

    def test_fig1_mixture_and_arrival(self):
        cfg = preset_fig1()
        assert cfg.arrival.num_users == 1
        assert cfg.arrival.tau == 5_000
        assert cfg.arrival.type_probs[0] == 0.5
        assert cfg.arrival.type_probs[1:] == (1 / 40,) * 20
        assert cfg.runs == 100
        names = [s.name for s in cfg.algorithms]
        assert names == ["ucb", "ucb-kt"]
        assert cfg.algorithms[0].params == {"elite_only": True}

    def test_fig1_horizon_flag(self):
        assert preset_fig1(horizon=777).arrival.tau == 777

    def test_fig2_contents(self):
        cfg = preset_fig2()
        assert cfg.parameter_set == ((0.6, 0.5, 0.5, 0.5), (0.5, 0.6, 0.5, 0.5))
        assert cfg.arrival.num_users == 2_000
        assert cfg.arrival.tau == 100
        assert cfg.arrival.type_probs == (0.5, 0.5)
        assert cfg.runs == 20
        by_name = {s.name: s.params for s in cfg.algorithms}
        assert by_name["unif-cluster-et"] == {"m0": 40, "delta": 0.01}
        assert by_name["ucb-cluster-et"] == {"m0": 40, "delta": 0.01}
        assert list(by_name) == ["per-user-ucb", "cluster-ucb-continuous",
                                 "unif-cluster-et", "ucb-cluster-et",
                                 "ucb-on-types"]

    def test_committed_configs_match_presets(self):
        for name, preset in (("fig1", preset_fig1()), ("fig2", preset_fig2())):
            on_disk = load_config(f"{REPO_CONFIGS}/{name}.json")
            assert on_disk == preset


class TestConfigIO:
    def test_round_trip(self, tmp_path):
        cfg = tiny_config()
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(config_to_dict(cfg)))
        assert load_config(str(path)) == cfg

    def test_json_error_reports_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "runs": 3,\n  oops\n}')
        with pytest.raises(ValueError, match=r"bad\.json:3"):
            load_config(str(path))

    def test_unknown_algorithm_named(self, tmp_path):
        data = config_to_dict(tiny_config())
        data["algorithms"][0]["name"] = "zigzag"
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ValueError, match="zigzag"):
            load_config(str(path))

    def test_missing_key_named(self, tmp_path):
        data = config_to_dict(tiny_config())
        del data["seed"]
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ValueError, match="seed"):
            load_config(str(path))


class TestRun:
    def test_oracle_rows_all_zero(self, tmp_path):
        cfg = tiny_config(algorithms=(AlgorithmSpec("oracle"),), runs=1)
        curve = run(cfg, parallelism=1, out_dir=str(tmp_path))
        assert (curve.mean_regret == 0.0).all()
        assert (curve.stderr == 0.0).all()

    def test_csv_schema_and_determinism(self, tmp_path):
        cfg = tiny_config()
        run(cfg, parallelism=1, out_dir=str(tmp_path / "a"))
        run(cfg, parallelism=1, out_dir=str(tmp_path / "b"))
        a = (tmp_path / "a" / "regret.csv").read_bytes()
        b = (tmp_path / "b" / "regret.csv").read_bytes()
        assert a == b
        header = a.decode().splitlines()[0]
        assert header == "t,algorithm,mean_regret,stderr,runs"
        assert b"\r" not in a

    def test_parallelism_does_not_change_output(self, tmp_path):
        cfg = tiny_config()
        run(cfg, parallelism=1, out_dir=str(tmp_path / "serial"))
        run(cfg, parallelism=4, out_dir=str(tmp_path / "pool"))
        assert (tmp_path / "serial" / "regret.csv").read_bytes() == \
               (tmp_path / "pool" / "regret.csv").read_bytes()

    def test_mean_regret_monotone_per_algorithm(self, tmp_path):
        cfg = tiny_config()
        curve = run(cfg, parallelism=1)
        for name in {s.name for s in cfg.algorithms}:
            series = [curve.mean_regret[i] for i in range(curve.t.shape[0])
                      if curve.algorithm[i] == name]
            assert all(b >= a - 1e-12 for a, b in zip(series, series[1:]))

    def test_checkpoint_grid(self):
        cfg = tiny_config(checkpoint_every=60)  # horizon 200 -> 60,120,180,200
        curve = run(cfg, parallelism=1)
        assert sorted(set(curve.t.tolist())) == [60, 120, 180, 200]

    def test_svg_written_and_well_formed(self, tmp_path):
        cfg = tiny_config()
        run(cfg, parallelism=1, out_dir=str(tmp_path))
        svg = (tmp_path / "regret.svg").read_text()
        assert svg.startswith("<svg ")
        assert svg.rstrip().endswith("</svg>")
        for spec in cfg.algorithms:
            assert spec.name in svg


class TestCliEntry:
    def test_run_subcommand(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config_to_dict(tiny_config())))
        code = main(["run", "--config", str(cfg_path), "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "regret.csv").exists()
        assert (tmp_path / "regret.svg").exists()

    def test_run_bad_config_nonzero_exit(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text("{ not json")
        assert main(["run", "--config", str(cfg_path)]) == 1
        assert "error:" in capsys.readouterr().err

    def test_bounds_kinds_match_library(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config_to_dict(tiny_config())))
        params = tiny_config().params()

        assert main(["bounds", "--config", str(cfg_path), "--kind", "lemma1",
                     "--epsilon", "0.4", "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "bounds.json").read_text())
        assert report["value"] == pytest.approx(gamma(0.4), rel=1e-12)

        assert main(["bounds", "--config", str(cfg_path), "--kind", "thm1",
                     "--type", "0", "--horizon", "1000",
                     "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "bounds.json").read_text())
        assert report["value"] == pytest.approx(
            thm1_bound(params, 0, 1000).value, rel=1e-12)

        assert main(["bounds", "--config", str(cfg_path), "--kind", "thm3",
                     "--m0", "3", "--tau", "25", "--delta", "0.01",
                     "--g", "0.5", "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "bounds.json").read_text())
        assert report["value"] == pytest.approx(
            thm3_bound(params, 3, 25, 0.01, 0.5, 200).value, rel=1e-12)

        capsys.readouterr()

    def test_lower_bound_subcommand(self, tmp_path, capsys):
        fig1 = preset_fig1()
        cfg_path = tmp_path / "fig1.json"
        cfg_path.write_text(json.dumps(config_to_dict(fig1)))
        assert main(["lower-bound", "--config", str(cfg_path),
                     "--type", "0"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["value"] == pytest.approx(
            eq1_lower_bound(fig1.params(), 0), rel=1e-9)

    def test_bounds_missing_flag_errors(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config_to_dict(tiny_config())))
        assert main(["bounds", "--config", str(cfg_path),
                     "--kind", "lemma1"]) == 1
        assert "--epsilon" in capsys.readouterr().err

    def test_console_entry_point_runs(self, tmp_path):
        # cross-process determinism: the same config yields identical CSVs
        # from independent interpreter invocations
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config_to_dict(tiny_config())))
        env = dict(os.environ)
        src = os.path.abspath("src")
        env["PYTHONPATH"] = src + os.pathsep + env.get("PYTHONPATH", "")
        outs = []
        for sub in ("p", "q"):
            out_dir = tmp_path / sub
            res = subprocess.run(
                [sys.executable, "-m", "typedbandits.cli", "run",
                 "--config", str(cfg_path), "--out", str(out_dir)],
                capture_output=True, text=True, check=True, env=env,
            )
            assert "regret.csv" in res.stdout
            outs.append((out_dir / "regret.csv").read_bytes())
        assert outs[0] == outs[1]
