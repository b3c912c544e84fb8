import json
import math

import pytest

from ftqc import cli, report
from ftqc.gates import GateSeq, dist, rz, seq_to_matrix


@pytest.fixture
def run(capsys, net_cache, monkeypatch):
    monkeypatch.delenv("FTQC_CONFIG", raising=False)

    def _run(*argv, net=True):
        args = list(argv)
        if net:
            args += ["--net-cache-path", str(net_cache)]
        code = cli.main(args)
        out, err = capsys.readouterr()
        return code, out, err

    return _run


def test_compile_t_angle(run):
    code, out, _ = run("compile", "--angle", "0.7853981634", "--eps", "1e-6")
    rec = json.loads(out)
    assert code == 0
    assert rec["N_T"] == 1 and rec["achieved_eps"] <= 1e-6


def test_compile_certified(run):
    code, out, err = run("compile", "--angle", "0.1", "--eps", "1e-3", "--include-sequence")
    rec = json.loads(out)
    assert code == 0
    assert rec["achieved_eps"] <= 1e-3
    seq = GateSeq.from_string(rec["sequence"])
    assert dist(seq_to_matrix(seq), rz(0.1)) <= 1e-3
    assert "depth" in err


def test_compile_missing_cache(run, tmp_path):
    code, out, err = run("compile", "--angle", "0.1", "--eps", "1e-3",
                         "--net-cache-path", str(tmp_path / "none.json"), net=False)
    assert code != 0 and out == ""
    assert "net_cache_path" in err


def test_compile_build_net(run, tmp_path):
    path = tmp_path / "built.json"
    code, _, _ = run("compile", "--angle", "0.1", "--eps", "1e-2", "--build-net",
                     "--net-cache-path", str(path), net=False)
    assert code == 0 and path.exists()


def test_net_build_and_info(run, tmp_path):
    path = tmp_path / "n.json"
    code, out, _ = run("net", "build", "--net-cache-path", str(path), net=False)
    built = json.loads(out)
    code2, out2, _ = run("net", "info", "--net-cache-path", str(path), net=False)
    assert code == code2 == 0
    assert json.loads(out2) == built
    assert built["entries"] > 1000


def test_estimate_concat_no_ec(run, tmp_path):
    code, out, err = run("estimate", "concat", "-N", "100", "-M", "3",
                         "--net-cache-path", str(tmp_path / "absent.json"), net=False)
    rec = json.loads(out)
    assert code == 0
    assert rec["ec_needed"] is False and rec["level"] == 0
    assert "ec_needed=false" in err


def test_estimate_surface_rejects_r0(run):
    code, _, err = run("estimate", "surface", "--r", "0")
    assert code == 2 and "r" in err


def test_estimate_surface_infeasible(run):
    # p/p_th close to 1 cannot reach the budget below the distance cap
    code, _, err = run("estimate", "surface", "-N", "100", "-M", "16", "--p-ratio", "0.999")
    assert code == 3
    assert "d" in err


def test_simulate_cap(run):
    code, _, err = run("simulate", "-N", "9", "-M", "4")
    assert code == 4 and "cap" in err


def test_simulate_exact(run):
    code, out, err = run("simulate", "-N", "2", "-M", "8", "--mode", "exact", "--seeds", "3")
    recs = [json.loads(line) for line in out.splitlines()]
    assert code == 0 and len(recs) == 3
    assert [r["seed"] for r in recs] == [0, 1, 2]
    assert "mean |E - E0|" in err


@pytest.mark.parametrize("rng", ["5..4", ",", "a..b"])
def test_sweep_bad_range(run, rng):
    code, _, _ = run("sweep", "concat", "-M", rng)
    assert code == 2


def test_unknown_flag_is_usage(run):
    code, _, err = run("estimate", "surface", "--bogus", "1")
    assert code == 2 and "bogus" in err


def test_sweep_concat_outputs(run, tmp_path):
    out = tmp_path / "a"
    code, _, _ = run("sweep", "concat", "-N", "100", "-M", "2..6", "--out", str(out),
                     "--format", "csv,json,svg")
    assert code == 0
    rows = report.csv_to_rows((out / "sweep_concat.csv").read_text(), "concat")
    assert [r["M"] for r in rows] == [2, 3, 4, 5, 6]
    assert [r["ec_needed"] for r in rows] == [False, False, False, True, True]
    Ks = [r["K"] for r in rows]
    assert Ks[3] / Ks[2] > 100
    assert {p.name for p in out.glob("*.svg")} == {
        "sweep_concat_K.svg", "sweep_concat_physical_qubits.svg",
        "sweep_concat_wall_seconds.svg", "sweep_concat_level.svg",
    }


def test_sweep_deterministic_across_jobs(run, tmp_path):
    texts = []
    for i, jobs in enumerate(("1", "3", "3")):
        out = tmp_path / f"o{i}"
        code, _, _ = run("sweep", "surface", "-N", "50", "-M", "4..7", "--r", "1,0.1",
                         "--jobs", jobs, "--out", str(out), "--format", "csv,json,svg")
        assert code == 0
        texts.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert texts[0] == texts[1] == texts[2]
    rows = report.csv_to_rows(texts[0]["sweep_surface.csv"].decode(), "surface")
    assert [(r["M"], r["r"]) for r in rows] == [(M, r) for M in range(4, 8) for r in (0.1, 1.0)]


def test_sweep_partial_failure_rows(run):
    code, out, _ = run("sweep", "surface", "-N", "100", "-M", "2,16", "--p-ratio", "0.93")
    rows = report.csv_to_rows(out, "surface")
    assert code == 0
    assert rows[0]["error"] is None and rows[0]["d"] is not None
    assert rows[1]["error"] and rows[1]["d"] is None


def test_config_file_and_override(run, tmp_path, monkeypatch):
    cfg = tmp_path / "run.conf"
    cfg.write_text("p-ratio = 0.03\nt_phys = 1e-5\nstrict-sk-budget = false\n")
    _, base, _ = run("estimate", "surface", "-N", "50", "-M", "6", "--p-ratio", "0.03", "--t-phys", "1e-5")
    _, from_file, _ = run("--config", str(cfg), "estimate", "surface", "-N", "50", "-M", "6")
    assert json.loads(base) == json.loads(from_file)
    _, flagged, _ = run("--config", str(cfg), "estimate", "surface", "-N", "50", "-M", "6",
                        "--p-ratio", "0.1")
    assert json.loads(flagged)["problem"]["p_ratio"] == 0.1
    monkeypatch.setenv("FTQC_CONFIG", str(cfg))
    _, from_env, _ = run("estimate", "surface", "-N", "50", "-M", "6")
    assert json.loads(from_env) == json.loads(base)


def test_config_unknown_key(run, tmp_path):
    cfg = tmp_path / "bad.conf"
    cfg.write_text("no_such_option = 1\n")
    code, _, err = run("--config", str(cfg), "estimate", "concat", "-M", "3")
    assert code == 2 and "no_such_option" in err


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit):
        cli.main(["estimate", "--help"])
    text = capsys.readouterr().out
    assert "default 0.1" in text and "default 10" in text


def test_m_range_forms():
    assert cli.m_range("4..6") == [4, 5, 6]
    assert cli.m_range("4:6") == [4, 5, 6]
    assert cli.m_range("8,4,8") == [4, 8]
    assert math.isclose(cli.float_list("0.1, 1")[0], 0.1)
