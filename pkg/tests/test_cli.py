"""End-to-end tests of the command-line interface."""
import json

import pytest

from dqmforge.cli import main
from dqmforge.model import BinaryModel, DiscreteModel, Vartype
from dqmforge.problems import Graph, coloring_dqm


def run(*argv):
    return main([str(a) for a in argv])


def load(path):
    return json.loads(path.read_text())


@pytest.fixture
def triangle(tmp_path):
    path = tmp_path / "tri.dqm.json"
    path.write_text(json.dumps(coloring_dqm(Graph(3, [(0, 1), (1, 2), (0, 2)]), 3).to_json()))
    return path


class TestGen:
    def test_coloring(self, tmp_path):
        assert run("gen", "coloring", "--nodes", 15, "--colors", 3, "--edge-prob", 0.5, "--count", 100, "--seed", 7,
                   "--out", tmp_path) == 0
        files = sorted(tmp_path.glob("*.dqm.json"))
        assert len(files) == 100
        payload = load(files[0])
        assert payload["dqm"]["n"] == 15 and payload["dqm"]["m"] == 3
        assert payload["run_config"]["seed"] == 7

    def test_fga_and_determinism(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run("gen", "fga", "--count", 2, "--seed", 1, "--out", a) == 0
        assert run("gen", "fga", "--count", 2, "--seed", 1, "--out", b) == 0
        for f in a.iterdir():
            assert f.read_bytes() == (b / f.name).read_bytes()

    def test_seed_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("DQMFORGE_SEED", "11")
        assert run("gen", "coloring", "--nodes", 4, "--out", tmp_path) == 0
        assert next(tmp_path.glob("*s11-*.dqm.json"))


class TestStages:
    def test_encode_exact_decode_round_trip(self, tmp_path, triangle):
        enc, sol, dec = tmp_path / "enc.json", tmp_path / "sol.json", tmp_path / "dec.json"
        assert run("encode", "--encoding", "domainwall", triangle, enc) == 0
        model = load(enc)
        assert model["vartype"] == "SPIN" and model["num_vars"] == 6
        assert run("exact", enc, sol) == 0
        assert run("decode", "--dqm", triangle, enc, sol, dec) == 0
        reads = load(dec)["reads"]
        assert len(reads) == 6 and all(r["valid"] and r["dqm_energy"] == 0.0 for r in reads)
        assert {tuple(r["assignment"]) for r in reads} == {(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1),
                                                           (2, 1, 0)}

    def test_exact_on_dqm(self, tmp_path, triangle):
        out = tmp_path / "x.json"
        assert run("exact", triangle, out) == 0
        assert load(out)["energy"] == 0.0 and len(load(out)["assignments"]) == 6

    def test_encode_vartype_conversion(self, tmp_path, triangle):
        out = tmp_path / "oh.json"
        assert run("encode", "--encoding", "one-hot", "--vartype", "spin", triangle, out) == 0
        assert load(out)["vartype"] == "SPIN"
        assert load(out)["run_config"]["penalty_strength"] == 1.0

    def test_sample_then_decode(self, tmp_path, triangle):
        enc, ss, dec = tmp_path / "enc.json", tmp_path / "ss.json", tmp_path / "dec.json"
        run("encode", "--encoding", "one-hot", triangle, enc)
        assert run("sample", "--reads", 20, "--sweeps", 200, "--seed", 3, enc, ss) == 0
        assert load(ss)["run_config"]["sampler"]["num_reads"] == 20
        assert run("decode", enc, ss, dec) == 0
        assert any(r["valid"] for r in load(dec)["reads"])

    def test_embedded_sample(self, tmp_path, triangle):
        enc, emb, ss, dec = (tmp_path / f for f in ("enc.json", "emb.json", "ss.json", "dec.json"))
        run("encode", "--encoding", "one-hot", triangle, enc)
        assert run("embed", "--hardware", "chimera:4,4,4", "--seed", 1, enc, emb) == 0
        assert load(emb)["status"] == "ok"
        assert run("sample", "--embedding", emb, "--reads", 30, "--sweeps", 200, enc, ss) == 0
        assert len(load(ss)["chain_breaks"]) == 30
        assert run("decode", enc, ss, dec) == 0
        assert sum(r["valid"] * r["count"] for r in load(dec)["reads"]) >= 15

    def test_embed_fail_exits_zero(self, tmp_path):
        big = tmp_path / "k6.json"
        model = BinaryModel(6, Vartype.SPIN, quadratic={(i, j): 1.0 for i in range(6) for j in range(i + 1, 6)})
        big.write_text(json.dumps(model.to_json()))
        out = tmp_path / "emb.json"
        assert run("embed", "--hardware", "chimera:1,1,2", big, out) == 0
        assert load(out)["status"] == "FAIL"
        assert run("sample", "--embedding", out, big, tmp_path / "ss.json") == 0
        assert load(tmp_path / "ss.json")["status"] == "FAIL"

    def test_identical_argv_identical_bytes(self, tmp_path, triangle):
        enc = tmp_path / "enc.json"
        run("encode", triangle, enc)
        run("sample", "--reads", 10, "--sweeps", 50, "--seed", 2, enc, tmp_path / "a.json")
        run("sample", "--reads", 10, "--sweeps", 50, "--seed", 2, "--threads", 4, enc, tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


class TestBench:
    @pytest.fixture
    def instances(self, tmp_path):
        d = tmp_path / "inst"
        run("gen", "coloring", "--nodes", 6, "--count", 4, "--seed", 2, "--out", d)
        return d

    def test_run_and_compare(self, tmp_path, instances, capsys):
        dw, oh = tmp_path / "dw.json", tmp_path / "oh.json"
        common = ["--reads", 20, "--sweeps", 100, "--seed", 5]
        assert run("bench", "run", "--encoding", "domain-wall", *common, "-o", dw, instances) == 0
        assert run("bench", "run", "--encoding", "one-hot", "--name", "oh", *common, "-o", oh, instances) == 0
        assert load(dw)["kind"] == "report" and len(load(dw)["instances"]) == 4
        capsys.readouterr()
        assert run("bench", "compare", dw, oh) == 0
        header = capsys.readouterr().out.splitlines()[0].split()
        assert header == ["comparison", "n_b", "n_w", "p", "verdict"]
        out = tmp_path / "cmp.json"
        assert run("bench", "compare", "--format", "json", "-o", out, dw, oh) == 0
        assert load(out)["kind"] == "comparison"

    def test_csv_to_stdout(self, instances, capsys):
        assert run("bench", "run", "--reads", 5, "--sweeps", 20, "--format", "csv", instances) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("instance_id,encoding,hardware,chain_mode") and len(lines) == 5

    def test_sweep(self, tmp_path, instances):
        out = tmp_path / "sweep.json"
        assert run("bench", "sweep", "--encoding", "one-hot", "--multipliers", "0.25,1", "--reads", 10,
                   "--sweeps", 50, "-o", out, instances) == 0
        assert [p["multiplier"] for p in load(out)["points"]] == [0.25, 1.0]

    def test_experiment_config(self, tmp_path, capsys):
        cfg = tmp_path / "exp.json"
        sampler = {"num_reads": 10, "num_sweeps": 50}
        cfg.write_text(json.dumps({"family": "coloring", "params": {"nodes": 5, "count": 3},
                                   "pipelines": [{"name": "dw", "encoding": "domain-wall", "sampler": sampler},
                                                 {"name": "oh", "encoding": "one-hot", "sampler": sampler}]}))
        assert run("bench", "run", "--config", cfg, "-o", tmp_path / "out") == 0
        assert (tmp_path / "out" / "dw__vs__oh.comparison.json").exists()
        assert "dw/oh" in capsys.readouterr().out


class TestExitCodes:
    def test_unknown_flag_is_usage_error(self, triangle, tmp_path):
        assert run("encode", "--bogus", triangle, tmp_path / "o.json") == 1

    def test_missing_subcommand(self):
        assert run() == 1

    def test_help_lists_flags(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run("sample", "--help")
        assert exc.value.code == 0
        text = capsys.readouterr().out
        for flag in ("--reads", "--sweeps", "--beta", "--seed", "--threads", "--embedding", "--repair"):
            assert flag in text

    def test_missing_file(self, tmp_path):
        assert run("encode", tmp_path / "nope.json", tmp_path / "o.json") == 2

    def test_schema_error_names_field(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"n": 2, "linear": [], "quadratic": []}))
        assert run("encode", bad, tmp_path / "o.json") == 2
        assert "'m'" in capsys.readouterr().err

    def test_bad_penalty(self, triangle, tmp_path):
        assert run("encode", "--penalty", "fixed:-1", triangle, tmp_path / "o.json") == 2

    def test_bad_hardware(self, tmp_path):
        model = tmp_path / "m.json"
        model.write_text(json.dumps(BinaryModel(2, Vartype.SPIN, quadratic={(0, 1): 1.0}).to_json()))
        assert run("embed", "--hardware", "native", model, tmp_path / "e.json") == 2

    def test_bad_seed_env(self, monkeypatch, tmp_path):
        monkeypatch.setenv("DQMFORGE_SEED", "abc")
        assert run("gen", "coloring", "--nodes", 3, "--out", tmp_path) == 1

    def test_dqm_model_file_accepted(self, tmp_path):
        path = tmp_path / "d.json"
        path.write_text(json.dumps(DiscreteModel(2, 2).to_json()))
        assert run("encode", path, tmp_path / "o.json") == 0
