import json

import pytest

from returnlab.graphcore import GraphError, build_cycle, build_halfline, write_edgelist
from returnlab.harness.cli import EXIT_FAIL, EXIT_GUARD, EXIT_OK, EXIT_USAGE, main, parse_args
from returnlab.harness.config import ConfigError, dump_json, jsonable
from returnlab.harness.graphspec import parse_graph, parse_params
from returnlab.harness.suite import (
    CorpusEntry,
    bound_checks,
    default_corpus,
    identity_checks,
    rational_checks,
    small_corpus,
)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out), err


class TestGraphSpec:
    @pytest.mark.parametrize("spec,n", [("path:5", 6), ("halfline:7", 8), ("segment:3", 7),
                                        ("cycle:9", 9), ("complete:4", 4), ("torus:3:4", 12),
                                        ("expander:16:3", 16), ("decorated:16:3", 17),
                                        ("star:3:2", 6)])
    def test_sizes(self, spec, n):
        g, v = parse_graph(spec)
        assert g.n_vertices == n and 0 <= v < n

    def test_segment_center(self):
        g, v = parse_graph("segment:4")
        assert v == g.meta["center"]

    def test_file(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text(write_edgelist(build_cycle(5)))
        g, _ = parse_graph(f"file:{p}")
        assert g == build_cycle(5)

    @pytest.mark.parametrize("spec", ["bogus:1", "path", "path:x", "torus:3", "Gt:10:2"])
    def test_bad(self, spec):
        with pytest.raises(GraphError):
            parse_graph(spec)

    def test_params(self):
        p = parse_params("4,16:64,4096")
        assert p.heights == (4, 16) and p.expander_sizes == (64, 4096)
        with pytest.raises(GraphError):
            parse_params("4,16")


class TestSerialization:
    def test_nan_and_sorting(self):
        text = dump_json({"b": float("nan"), "a": [1.5, float("inf")]})
        d = json.loads(text)
        assert d == {"a": [1.5, "inf"], "b": None, "schema_version": 1}
        assert text.index('"a"') < text.index('"b"')

    def test_numpy(self):
        import numpy as np
        assert jsonable({"x": np.arange(3), "y": np.float64(0.5), "z": np.bool_(True)}) == \
            {"x": [0, 1, 2], "y": 0.5, "z": True}


class TestConfig:
    def test_file_values(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# comment\ngraph = path:6\nhorizon=12\nrational = yes\n")
        code, d, _ = run_json(capsys, "dist", "--config", str(cfg))
        assert code == EXIT_OK
        assert d["config"]["graph"] == "path:6" and d["config"]["horizon"] == 12
        assert d["config"]["rational"] is True and d["report"]["exact"] is True

    def test_cli_overrides_file(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("graph=path:6\nhorizon=12\n")
        args = parse_args(["dist", "--config", str(cfg), "--horizon", "20"])
        assert args.horizon == 20 and args.graph == "path:6"

    def test_append_key(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("graph = path:3 cycle:5\nno-default = true\n")
        args = parse_args(["verify", "--config", str(cfg)])
        assert args.graph == ["path:3", "cycle:5"] and args.no_default

    @pytest.mark.parametrize("body,line", [("graph=path:3\nhorizn=4\n", 2),
                                           ("horizon=ten\n", 1),
                                           ("graph=path:3\n\nrational=maybe\n", 3),
                                           ("format=xml\n", 1),
                                           ("just a line\n", 1)])
    def test_errors_carry_line(self, tmp_path, capsys, body, line):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text(body)
        with pytest.raises(ConfigError, match=f"bad.cfg:{line}:"):
            parse_args(["dist", "--config", str(cfg)])
        code, _, err = run(capsys, "dist", "--config", str(cfg))
        assert code == EXIT_USAGE and f"bad.cfg:{line}:" in err

    def test_missing_graph(self, capsys):
        code, _, err = run(capsys, "dist")
        assert code == EXIT_USAGE and "--graph is required" in err

    def test_missing_file(self, capsys):
        code, _, err = run(capsys, "dist", "--config", "/nonexistent/x.cfg")
        assert code == EXIT_USAGE and "cannot read" in err


class TestExitCodes:
    def test_ok(self, capsys):
        code, d, _ = run_json(capsys, "dist", "--graph", "segment:20", "--horizon", "20")
        assert code == EXIT_OK and d["passed"] and d["schema_version"] == 1

    def test_truncation_warning_and_strict(self, capsys):
        code, _, err = run(capsys, "dist", "--graph", "halfline:10", "--horizon", "50")
        assert code == EXIT_OK and "warning" in err
        code, out, err = run(capsys, "dist", "--graph", "halfline:10", "--horizon", "50", "--strict")
        assert code == EXIT_FAIL and out == "" and "truncation radius" in err

    def test_check_failure(self, capsys):
        code, d, _ = run_json(capsys, "sharpness", "--graph", "Gt:200:0.1:3", "--t", "200")
        assert code == EXIT_FAIL and not d["passed"]
        assert d["report"]["ratio"] < 5

    def test_guard(self, capsys):
        code, out, err = run(capsys, "collide", "--params", "small", "--trials", "100",
                             "--step-budget", "1000")
        assert code == EXIT_GUARD and out == "" and "resource guard" in err

    def test_usage(self, capsys):
        assert run(capsys, "dist", "--graph", "bogus:3")[0] == EXIT_USAGE
        assert run(capsys, "nosuchcommand")[0] == EXIT_USAGE
        assert run(capsys, "dist", "--graph", "path:3", "--workers", "0")[0] == EXIT_USAGE

    def test_malformed_edgelist(self, tmp_path, capsys):
        p = tmp_path / "bad.txt"
        p.write_text("3 1\n0 7\n")
        code, _, err = run(capsys, "dist", "--graph", f"file:{p}")
        assert code == EXIT_USAGE and "[vertex-range]" in err and "line 2" in err


class TestCommands:
    def test_dist_rational_csv(self, capsys):
        code, out, _ = run(capsys, "dist", "--graph", "path:4", "--horizon", "8", "--rational",
                           "--format", "csv")
        assert code == EXIT_OK
        lines = out.splitlines()
        assert lines[0] == "t,p,s,hazard" and lines[2] == "2,0.5,1,0.5" and lines[4] == "4,0.125,0.5,0.25"

    def test_resistance(self, capsys):
        code, d, _ = run_json(capsys, "resistance", "--graph", "path:6", "--source", "0",
                              "--sink", "6", "--cut", "2.5")
        assert code == EXIT_OK and d["report"]["resistance"] == pytest.approx(6)
        code, out, _ = run(capsys, "resistance", "--graph", "path:6", "--flow", "--format", "csv")
        assert out.splitlines()[:2] == ["u,v,i", "0,1,1"]

    def test_escape(self, capsys):
        code, d, _ = run_json(capsys, "escape", "--graph", "path:20", "--x", "0", "--y", "20",
                              "--trials", "3000")
        assert code == EXIT_OK
        assert [r["epsilon"] for r in d["report"]["results"]] == [0.1, 0.25]

    def test_expander(self, capsys):
        code, d, _ = run_json(capsys, "expander", "--n", "64", "--window", "--trials", "400")
        assert code == EXIT_OK and 0 < d["report"]["expander"]["lambda2_abs"] < 1
        assert d["report"]["mixing"]["ok"]

    def test_collide_zero_trials(self, capsys):
        code, d, _ = run_json(capsys, "collide", "--params", "small", "--trials", "0")
        assert code == EXIT_OK and d["report"]["main"]["trials"] == 0

    def test_construct(self, capsys, tmp_path):
        out = tmp_path / "g.txt"
        assert main(["construct", "--graph", "halfline:3", "--format", "csv", "--out", str(out)]) == 0
        assert out.read_text() == write_edgelist(build_halfline(3))

    def test_verify_rational(self, capsys):
        code, d, _ = run_json(capsys, "verify", "--rational")
        assert code == EXIT_OK and all(c["passed"] for c in d["report"]["checks"])


class TestDeterminism:
    @pytest.mark.parametrize("argv", [
        ["escape", "--graph", "torus:8:8", "--trials", "3000"],
        ["collide", "--params", "small", "--trials", "40"],
        ["expander", "--n", "64", "--window", "--trials", "500"],
    ])
    def test_workers_do_not_change_output(self, capsys, argv):
        outs = {run(capsys, *argv, "--workers", str(w))[1] for w in (1, 3, 1)}
        assert len(outs) == 1

    def test_seed_changes_output(self, capsys):
        a = run(capsys, "escape", "--graph", "torus:8:8", "--trials", "3000", "--seed", "1")[1]
        b = run(capsys, "escape", "--graph", "torus:8:8", "--trials", "3000", "--seed", "2")[1]
        assert a != b


class TestSuite:
    def test_small_corpus_rational(self):
        for entry in small_corpus():
            assert all(c.passed for c in rational_checks(entry)), entry.name

    def test_checks_detect_violation(self):
        # a table whose hazard has been inflated beyond e^10 must fail the bound
        entry = CorpusEntry(build_halfline(40), 0, 40)
        from returnlab.exactwalk import return_time_distribution
        table = return_time_distribution(entry.graph, 0, 40)
        table.hazard[20] = 1e6
        res = {c.check: c for c in bound_checks(entry, table)}
        assert not res["hazard-bound"].passed

    def test_identity_checks_small(self):
        entry = CorpusEntry(build_cycle(9), 0, 40)
        res = identity_checks(entry, expand_horizon=20)
        assert res and all(c.passed for c in res)

    def test_default_corpus_members(self):
        names = [e.name for e in default_corpus(horizon=60)]
        assert len(names) == len(set(names)) >= 6
