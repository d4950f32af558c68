import json
import warnings

import pytest

from subtree_align.cli import main
from subtree_align.errors import ConfigError, IncompleteGridError
from subtree_align.harness import (
    CSV_HEADER,
    ExperimentConfig,
    crossover_line,
    read_csv,
    run_experiment,
    select_optimal_depth,
)


def _rows(overlaps, n=100, lam=1.4, s=0.8):
    return [{"n": n, "lambda": lam, "s": s, "d": d, "overlap_mean": ov, "overlap_se": 0.01}
            for d, ov in enumerate(overlaps, start=1)]


class TestConfig:
    def test_from_json(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"n": [50], "lambda": [1.4], "s": [0.8], "d_max": 3}))
        cfg = ExperimentConfig.from_json(path)
        assert cfg.lam == [1.4] and cfg.d_max == 3
        assert json.loads(cfg.to_json())["lambda"] == [1.4]

    @pytest.mark.parametrize("bad", [
        {"n": [], "lam": [1.0], "s": [0.5]},
        {"n": [10], "lam": [1.0], "s": [0.5], "d_max": 0},
        {"n": [10], "lam": [1.0], "s": [0.5], "samples": 0},
        {"n": [10], "lam": [1.0], "s": [0.5], "ensemble": "sbm"},
        {"n": [10], "lam": [1.0], "s": [0.5], "colour": "red"},
    ])
    def test_invalid(self, bad):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(bad)


class TestRunExperiment:
    def test_rows_and_determinism(self, tmp_path):
        cfg = dict(n=[60], lam=[1.4], s=[0.9], d_max=3, samples=2, seed=4)
        a = run_experiment(ExperimentConfig(**cfg, out=str(tmp_path / "a.csv")))
        run_experiment(ExperimentConfig(**cfg, out=str(tmp_path / "b.csv")))
        text = (tmp_path / "a.csv").read_text()
        assert text == (tmp_path / "b.csv").read_text()
        assert text.splitlines()[0] == ",".join(CSV_HEADER)
        assert [r["d"] for r in a.rows] == [1, 2, 3]
        assert all(r["status"] == "ok" and r["samples"] == 2 for r in a.rows)
        back = read_csv(tmp_path / "a.csv")
        assert back[2]["overlap_mean"] == a.rows[2]["overlap_mean"]

    def test_depth_one_only(self):
        res = run_experiment(ExperimentConfig(n=[40], lam=[1.4], s=[0.8], d_max=1, samples=1))
        assert [r["d"] for r in res.rows] == [1]

    def test_grid_order_does_not_change_samples(self):
        a = run_experiment(ExperimentConfig(n=[50], lam=[1.4], s=[0.7, 0.9], d_max=2, samples=2))
        b = run_experiment(ExperimentConfig(n=[50], lam=[1.4], s=[0.9, 0.7], d_max=2, samples=2))
        key = lambda r: (r["s"], r["d"])
        assert sorted(a.rows, key=key) == sorted(b.rows, key=key)

    def test_capacity_failures_are_recorded(self):
        with pytest.warns(UserWarning):
            res = run_experiment(ExperimentConfig(n=[60], lam=[5.0], s=[0.9], d_max=2,
                                                  samples=2, degree_cap=1))
        assert all(r["status"] == "failed" and r["samples"] == 0 for r in res.rows)

    def test_threshold_sweep(self, tmp_path):
        cfg = ExperimentConfig(n=[60], lam=[1.6], s=[0.9], d_max=2, samples=2,
                               thresholds=[0.0, 0.5, 0.99],
                               thresholds_out=str(tmp_path / "t.csv"))
        res = run_experiment(cfg)
        assert len(res.threshold_rows) == 2 * 3
        for d in (1, 2):
            ft = [r["fT"] for r in res.threshold_rows if r["d"] == d]
            assert ft == sorted(ft, reverse=True)
        assert (tmp_path / "t.csv").read_text().startswith("n,lambda,s,d,T,")

    @pytest.mark.parametrize("ensemble,extra", [
        ("config", {}), ("weighted", {"weight_model": {"kind": "gaussian_correlated", "rho": 0.5}})])
    def test_other_ensembles(self, ensemble, extra):
        res = run_experiment(ExperimentConfig(n=[60], lam=[1.4], s=[0.8], d_max=2, samples=1,
                                              ensemble=ensemble, **extra))
        assert len(res.rows) == 2


class TestOptimalDepth:
    def test_interior_peak(self):
        ov = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.65, 0.6]
        assert next(iter(select_optimal_depth(_rows(ov)).values())).d_star == 7

    def test_monotone_warns(self):
        with pytest.warns(UserWarning, match="d_max"):
            best = select_optimal_depth(_rows([0.1, 0.2, 0.3]))
        assert next(iter(best.values())).truncated

    def test_flat_picks_smallest(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            best = select_optimal_depth(_rows([0.2, 0.2, 0.2]))
        assert next(iter(best.values())).d_star == 1

    def test_missing_depth(self):
        rows = _rows([0.1, 0.2, 0.3])
        del rows[1]
        with pytest.raises(IncompleteGridError):
            select_optimal_depth(rows)


class TestCrossover:
    def test_step(self):
        rows = []
        for s, ov in [(0.5, 0.01), (0.55, 0.01), (0.6, 0.01), (0.65, 0.3), (0.7, 0.4)]:
            rows += _rows([ov / 2, ov], s=s)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            assert crossover_line(rows, 0.1) == {(100, 1.4): 0.65}

    def test_none(self):
        rows = _rows([0.02, 0.01], s=0.5) + _rows([0.03, 0.01], s=0.6)
        assert crossover_line(rows, 0.1) == {(100, 1.4): None}


class TestCli:
    def test_generate_align(self, tmp_path, capsys):
        pair = tmp_path / "p.txt"
        assert main(["generate", "-n", "80", "--lam", "1.5", "-s", "0.9", "--seed", "1",
                     "--out", str(pair)]) == 0
        out = tmp_path / "m.txt"
        assert main(["align", str(pair), "--lam", "1.5", "-s", "0.9", "--d-max", "4",
                     "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 80
        assert main(["align", str(pair), "--lam", "1.5", "-s", "0.9", "--threshold", "0.5",
                     "--out", str(out)]) == 0

    def test_sweep(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"n": [40], "lambda": [1.4], "s": [0.8], "d_max": 2,
                                   "samples": 1}))
        out = tmp_path / "o.csv"
        with pytest.warns(UserWarning):
            assert main(["sweep", str(cfg), "--out", str(out), "--seed", "3"]) == 0
        assert len(out.read_text().splitlines()) == 3

    def test_tree_kl_and_bound(self, tmp_path, capsys):
        assert main(["tree-kl", "--lam", "1.5", "-s", "0.6", "--d-max", "2", "--samples", "20",
                     "--out", str(tmp_path / "kl.csv")]) == 0
        assert main(["bound", "2.0"]) == 0
        assert capsys.readouterr().out.startswith("2.0 0.79681")

    def test_exit_codes(self, tmp_path):
        bad_cfg = tmp_path / "bad.json"
        bad_cfg.write_text(json.dumps({"n": [40], "lambda": [1.4], "s": [1.7]}))
        assert main(["sweep", str(bad_cfg)]) == 2
        assert main(["nonsense"]) == 2
        bad_pair = tmp_path / "bad.txt"
        bad_pair.write_text("1 2\n")
        assert main(["align", str(bad_pair), "--lam", "1.4", "-s", "0.8"]) == 4
        pair = tmp_path / "p.txt"
        main(["generate", "-n", "60", "--lam", "4", "-s", "0.9", "--out", str(pair)])
        assert main(["align", str(pair), "--lam", "4", "-s", "0.9", "--degree-cap", "1"]) == 3
