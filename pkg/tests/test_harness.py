import csv

import numpy as np
import pytest

from dmdextrap.cli import main
from dmdextrap.exceptions import InvariantViolation
from dmdextrap.harness import (
    COMPARISON_HEADER,
    ComparisonRow,
    ExperimentConfig,
    compare_methods,
    config_from_mapping,
    read_comparison,
    read_config,
    resolve_observable,
    run_experiment,
    run_sweep,
)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _row(method, total, err):
    return ComparisonRow(method, "", 1, 0.0, total, total, err, err)


class TestConfig:
    def test_defaults_resolved_per_test(self):
        cfg = ExperimentConfig(test_id="4").resolved()
        assert (cfg.n_grid, cfg.n_snapshots_total, cfg.m) == (512, 41, 20)
        assert cfg.observables == ("identity", "nls_cubic")
        cfg = ExperimentConfig(test_id="3").resolved()
        assert (cfg.n_grid, cfg.n_snapshots_total, cfg.m) == (500, 500, 200)
        assert cfg.observables == ("identity", "kirchhoff")

    def test_aliases(self):
        assert resolve_observable("g2", "2b") == "cubic"
        assert resolve_observable("g1", "4") == "identity"
        assert resolve_observable("kirchhoff", "1a") == "kirchhoff"

    @pytest.mark.parametrize("kw", [{"m": 500}, {"m": 1}, {"rank_eps": 1.0},
                                    {"methods": ("dmd", "svm")}, {"test_id": "7"}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            ExperimentConfig(**kw).resolved()

    def test_file_and_flag_precedence(self, tmp_path):
        f = tmp_path / "c.txt"
        f.write_text("# sweep base\ntest=2b\nm=150\nrank_eps=1e-10\nobservables=g1, g2\n")
        cfg = read_config(f)
        assert (cfg.test_id, cfg.m, cfg.rank_eps) == ("2b", 150, 1e-10)
        cfg = config_from_mapping({"m": "200"}, base=cfg)
        assert cfg.m == 200 and cfg.rank_eps == 1e-10
        assert cfg.observables == ("g1", "g2")

    def test_unknown_key(self, tmp_path):
        f = tmp_path / "c.txt"
        f.write_text("colour=blue\n")
        with pytest.raises(ValueError):
            read_config(f)


class TestCompare:
    def test_ranks(self):
        s = compare_methods([_row("a", 2.0, 1e-3), _row("b", 1.0, 1e-5)])
        assert s.time_rank == (2, 1) and s.error_rank == (2, 1)
        assert s.by_time == (1, 0)

    def test_stable_ties(self):
        s = compare_methods([_row("a", 1.0, 1e-3), _row("b", 1.0, 1e-3), _row("c", 1.0, 1e-3)])
        assert s.by_time == (0, 1, 2) and s.by_error == (0, 1, 2)

    def test_single_row(self):
        s = compare_methods([_row("a", 1.0, 0.0)])
        assert s.time_rank == (1,) and s.by_error == (0,)

    def test_row_invariants(self):
        with pytest.raises(ValueError):
            _row("a", -1.0, 0.0)
        with pytest.raises(ValueError):
            _row("a", 1.0, float("nan"))


@pytest.fixture(scope="module")
def run_2b(tmp_path_factory):
    out = tmp_path_factory.mktemp("run2b")
    cfg = ExperimentConfig(test_id="2b", n_grid=40, n_snapshots_total=100, m=40,
                           output_dir=str(out), repeats=1)
    return run_experiment(cfg), out


class TestRunExperiment:
    def test_files(self, run_2b):
        _, out = run_2b
        names = {p.name for p in out.iterdir()}
        assert {"config.txt", "reference.traj", "reference.csv", "comparison.csv",
                "timings.csv", "summary.csv", "summary_by_error.csv",
                "error_dmd_identity.csv", "error_dmd_cubic.csv", "prediction_dmd_cubic.csv",
                "error_pod_deim.csv", "prediction_pod_deim.csv"} <= names

    def test_comparison_table(self, run_2b):
        res, out = run_2b
        rows = _rows(out / "comparison.csv")
        assert tuple(rows[0].keys()) == COMPARISON_HEADER
        assert [(r["method"], r["observable"]) for r in rows] == [
            ("resolved", ""), ("dmd", "identity"), ("dmd", "cubic"), ("pod_deim", "")]
        assert read_comparison(out / "comparison.csv") == res.rows

    def test_reports(self, run_2b):
        res, _ = run_2b
        rep = res.reports["cubic"]
        assert rep.steps[0] == 40 and rep.steps[-1] == 99
        by = {(r.method, r.observable): r for r in res.rows}
        assert by[("dmd", "cubic")].max_error == pytest.approx(rep.e_measured.max())

    def test_dmd_only_has_no_pod_rows(self, tmp_path):
        cfg = ExperimentConfig(test_id="1a", n_grid=30, n_snapshots_total=60, m=30,
                               methods=("dmd",), observables=("g1",),
                               output_dir=str(tmp_path), repeats=1)
        res = run_experiment(cfg)
        assert [r.method for r in res.rows] == ["dmd"]
        assert not (tmp_path / "error_pod_deim.csv").exists()

    def test_assert_bound_raises_after_writing(self, tmp_path, monkeypatch):
        import dmdextrap.harness as h

        real = h.error_report

        def broken(model, reference):
            rep = real(model, reference)
            rep.e_bound[:] = 0.0
            return rep

        monkeypatch.setattr(h, "error_report", broken)
        cfg = ExperimentConfig(test_id="1a", n_grid=20, n_snapshots_total=50, m=20,
                               methods=("dmd",), observables=("g1",), assert_bound=True,
                               output_dir=str(tmp_path), repeats=1)
        with pytest.raises(InvariantViolation):
            run_experiment(cfg)
        assert (tmp_path / "comparison.csv").exists()

    def test_sweep(self, tmp_path):
        cfg = ExperimentConfig(test_id="1a", n_grid=20, n_snapshots_total=60,
                               methods=("dmd",), observables=("g1",),
                               output_dir=str(tmp_path), repeats=1)
        results = run_sweep(cfg, "m", ["20", "30"])
        assert [r.config.m for r in results] == [20, 30]
        rows = _rows(tmp_path / "sweep.csv")
        assert [r["m"] for r in rows] == ["20", "30"]
        assert (tmp_path / "m=20" / "comparison.csv").exists()


class TestCli:
    def test_run_exit_zero(self, tmp_path, capsys):
        code = main(["run", "--test", "1a", "--n-grid", "20", "--n-snapshots", "50",
                     "--m", "20", "--methods", "dmd,resolved", "--observables", "g1",
                     "--repeats", "1", "--out", str(tmp_path), "--assert-bound"])
        assert code == 0
        assert "dmd" in capsys.readouterr().out

    def test_config_file(self, tmp_path):
        cfg = tmp_path / "c.txt"
        cfg.write_text(f"test=1a\nn_grid=20\nn_snapshots=50\nm=20\nmethods=dmd\n"
                       f"repeats=1\nout={tmp_path / 'a'}\n")
        assert main(["run", "--config", str(cfg), "--m", "25"]) == 0
        text = (tmp_path / "a" / "config.txt").read_text()
        assert "m=25" in text.splitlines()

    def test_error_exit_one(self, tmp_path, capsys):
        assert main(["run", "--test", "9", "--out", str(tmp_path)]) == 1
        assert "error" in capsys.readouterr().err

    def test_invariant_exit_two(self, tmp_path, monkeypatch):
        import dmdextrap.cli as cli

        def boom(cfg):
            raise InvariantViolation("bound violated")

        monkeypatch.setattr(cli, "run_experiment", boom)
        assert main(["run", "--test", "1a", "--out", str(tmp_path)]) == 2

    def test_compare(self, tmp_path, run_2b):
        _, out = run_2b
        dest = tmp_path / "merged"
        assert main(["compare", str(out / "comparison.csv"), str(out / "comparison.csv"),
                     "--out", str(dest)]) == 0
        rows = _rows(dest / "summary.csv")
        assert len(rows) == 8
        assert sorted(int(r["time_rank"]) for r in rows) == list(range(1, 9))

    def test_sweep_cli(self, tmp_path):
        assert main(["sweep", "--test", "1a", "--n-grid", "20", "--n-snapshots", "50",
                     "--methods", "dmd", "--observables", "g1", "--repeats", "1",
                     "--param", "rank_eps", "--values", "1e-8,1e-12",
                     "--m", "20", "--out", str(tmp_path)]) == 0
        assert len(_rows(tmp_path / "sweep.csv")) == 2

    def test_reference_binary_matches_result(self, run_2b):
        from dmdextrap.snapshots import load_trajectory

        res, out = run_2b
        back = load_trajectory(out / "reference.traj")
        np.testing.assert_array_equal(back.states, res.reference.states)
