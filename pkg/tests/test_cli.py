import json
import math
import subprocess
import sys

import numpy as np
import pytest

from phasesense import io
from phasesense.cli import CliError, config_seed, main, parse_grid, verify_outputs
from phasesense.fock import DensityMatrix

from test_channels import quadrature_output


def run(*argv):
    return main([str(a) for a in argv])


def test_parse_grid():
    np.testing.assert_allclose(parse_grid("0.1,0.2,0.5"), [0.1, 0.2, 0.5])
    np.testing.assert_allclose(parse_grid("0:1:5"), np.linspace(0, 1, 5))
    np.testing.assert_allclose(parse_grid("0.001:1:4:log"), np.geomspace(0.001, 1, 4))
    for bad in ("", "0.3,0.1", "0:1", "0:1:0", "0:1:3:lin", "0:1:3:log", "0.2,0.2"):
        with pytest.raises(CliError):
            parse_grid(bad)


def test_config_seed_is_stable():
    assert config_seed({"a": 1, "b": 2}) == config_seed({"b": 2, "a": 1})
    assert config_seed({"a": 1}) != config_seed({"a": 2})


def test_channel_vacuum_poisson(tmp_path):
    out = tmp_path / "vac.csv"
    assert run("channel", "--state", "fock:0", "--alpha", 0.5, "--out", out) == 0
    rows = io.read_records(out)
    for r in rows:
        n = r["n"]
        assert r["p_out"] == pytest.approx(math.exp(-0.25) * 0.25**n / math.factorial(n), abs=1e-15)


def test_channel_fock_one_matches_quadrature(tmp_path):
    out = tmp_path / "f1.jsonl"
    assert run("channel", "--state", "fock:1", "--alpha", 0.4, "--out", out, "--format", "jsonl") == 0
    rows = io.read_records(out)
    ref = quadrature_output(DensityMatrix.fock(1).elems, 0.4, 1).diagonal().real
    got = np.array([r["p_out"] for r in rows])
    np.testing.assert_allclose(got, ref[: got.size], atol=1e-9)


def test_channel_zero_alpha_echoes_input(tmp_path):
    out = tmp_path / "cat.csv"
    assert run("channel", "--state", "cat:size=1.2", "--alpha", 0, "--out", out) == 0
    rows = io.read_records(out)
    assert all(r["p_in"] == r["p_out"] for r in rows)


def test_channel_full_matrix(tmp_path):
    out = tmp_path / "c.csv"
    assert run("channel", "--state", "cat:size=1.0", "--alpha", 0.3, "--variant", 2,
               "--full", "--out", out) == 0
    recs = io.read_records(str(out) + ".full.jsonl")
    mat = np.array([np.array(r["re"]) + 1j * np.array(r["im"]) for r in recs])
    diag = np.array([r["p_out"] for r in io.read_records(out)])
    k = min(mat.shape[0], diag.size)
    np.testing.assert_allclose(mat.diagonal().real[:k], diag[:k], atol=1e-12)


def test_channel_respects_dim_env(tmp_path, monkeypatch):
    monkeypatch.setenv("PHASESENSE_DIM", "12")
    out = tmp_path / "d.csv"
    assert run("channel", "--state", "fock:1", "--alpha", 0, "--out", out) == 0
    assert len(io.read_records(out)) == 12
    assert run("channel", "--state", "fock:1", "--alpha", 0, "--dim", 7, "--out", out) == 0
    assert len(io.read_records(out)) == 7


def test_state_from_json_config(tmp_path):
    spec = tmp_path / "moon.json"
    spec.write_text(json.dumps({"family": "moon", "params": {"size": 2.0, "delta": 1.0}}))
    out = tmp_path / "m.csv"
    assert run("channel", "--state", spec, "--alpha", 0.1, "--out", out) == 0
    assert io.read_records(out)


def test_fisher_scan_bound_and_baseline(tmp_path):
    out = tmp_path / "scan.csv"
    ranges = tmp_path / "ranges.csv"
    assert run("fisher-scan", "--state", "fock:5", "--state", "gaussian:5", "--state", "coherent:0",
               "--grid", "0.001,0.01,0.1", "--tau", "0,0.001", "--ranges-out", ranges,
               "--out", out) == 0
    rows = io.read_records(out)
    assert len(rows) == 3 * 2 * 3
    for r in rows:
        assert r["gain"] <= r["bound"] + 1e-6
        if r["state"].startswith("coherent"):
            assert r["gain"] == pytest.approx(1.0, abs=1e-9)
    fock = [r for r in rows if r["state"] == "fock:n=5" and r["tau"] == 0 and r["alpha"] == 0.001]
    assert fock[0]["gain"] == pytest.approx(11.0, abs=1e-4)
    gauss = [r for r in io.read_records(ranges) if r["state"].startswith("gaussian") and r["tau"] == 0.001]
    assert len(gauss) == 1 and gauss[0]["lo"] < gauss[0]["hi"]


def test_fisher_scan_rejects_bad_grid(capsys):
    assert run("fisher-scan", "--grid", "0.5,0.1") == 2
    assert "not strictly increasing" in capsys.readouterr().err
    assert run("fisher-scan", "--grid", "0:1:3") == 2


def test_fisher_scan_parallel_matches_serial(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["fisher-scan", "--state", "cat:size=1.5", "--grid", "0.01:0.5:4", "--tau", "0,1e-3"]
    assert run(*args, "--out", a) == 0
    assert run(*args, "--out", b, "--workers", 2) == 0
    assert a.read_text() == b.read_text()


def test_decohere(tmp_path, capsys):
    out = tmp_path / "d.csv"
    assert run("decohere", "--state", "fock:4", "--tau", 1e-3, "--alpha", 0.1, "--out", out) == 0
    rows = io.read_records(out)
    assert rows[3]["p_out"] == pytest.approx(4e-3)
    summary = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert summary["parity_deviation"] == pytest.approx(8e-3)
    assert run("decohere", "--state", "fock:1", "--tau", 1.0, "--regime", "exact", "--out", out) == 0
    assert io.read_records(out)[1]["p_out"] == pytest.approx(math.exp(-1.0), abs=1e-12)


def test_zoo_subset(tmp_path):
    outdir = tmp_path / "zoo"
    assert run("zoo", "--state", "fock:8", "--state", "gkp", "--grid=-1:1:3", "--out", outdir) == 0
    summary = io.read_records(outdir / "zoo_summary.csv")
    assert len(summary) == 2
    for row in summary:
        assert row["mean_n"] == pytest.approx(8.0, abs=1e-3)
        rho = io.read_state(outdir / f"{row['label']}.csv")
        assert rho.mean() == pytest.approx(8.0, abs=1e-3)
        assert len(io.read_records(outdir / f"{row['label']}_wigner.csv")) == 9
    fock = io.read_state(outdir / "fock_n8.csv").diagonal()
    assert fock[8] == pytest.approx(1.0)


def test_zoo_unreachable_target(tmp_path, capsys):
    assert run("zoo", "--state", "fock:1", "--target", 2.5, "--out", tmp_path) == 2


def test_optimize_zero_time(tmp_path):
    pulses, summary = tmp_path / "p.jsonl", tmp_path / "s.csv"
    assert run("optimize", "--times", "0", "--seeds", "1,2", "--out", pulses, "--summary", summary) == 0
    rows = io.read_records(summary)
    assert len(rows) == 2
    for r in rows:
        assert r["gain"] == pytest.approx(1.0, abs=1e-9)
        assert r["mean_n"] == 0.0


def test_optimize_with_config_and_noise(tmp_path):
    cfg = tmp_path / "reward.json"
    cfg.write_text(json.dumps({"alpha": 0.1, "eps_ratio": 0.01, "n_target": 2.0, "lam": 10.0,
                               "regime": "loss"}))
    pulses, summary = tmp_path / "p.jsonl", tmp_path / "s.jsonl"
    assert run("optimize", "--config", cfg, "--times", "0.1", "--super-iterations", 1,
               "--max-evals", 15, "--steps", 100, "--dim", 8, "--seed", 4, "--prep-gamma", 0.2,
               "--out", pulses, "--summary", summary, "--format", "jsonl") == 0
    rec = io.read_records(pulses)[0]
    for key in ("seed", "T", "N_p", "nu", "a", "b", "final_reward", "final_mean_n", "final_diagonal"):
        assert key in rec
    assert rec["seed"] == 4 and rec["reward_config"]["alpha"] == 0.1
    row = io.read_records(summary)[0]
    assert "gain_noisy" in row and row["evaluations"] == 15


def test_reproduce_fig2_round_trip(tmp_path):
    outdir = tmp_path / "fig2"
    assert run("reproduce", "fig2", "--out", outdir) == 0
    manifest = json.loads((outdir / "manifest.json").read_text())
    assert manifest["figure"] == "fig2"
    checked, bad = verify_outputs(outdir)
    assert checked > 0 and bad == []
    assert run("verify", outdir) == 0


def test_reproduce_skips_only_invalid_small_time_points(tmp_path):
    from phasesense.channels import SmallTimeConfig, small_time_diagonal
    from phasesense.fock import diagonal_of

    outdir = tmp_path / "s5"
    assert run("reproduce", "figS5", "--out", outdir) == 0
    sweep = json.loads((outdir / "manifest.json").read_text())["files"]["sweeps"][0]
    rows = io.read_records(outdir / sweep["table"])
    done = {(r["state"], r["tau"]) for r in rows}
    states = {lab: diagonal_of(io.read_state(outdir / path)) for lab, path in sweep["states"].items()}
    assert sweep["skipped"]
    for sk in sweep["skipped"]:
        assert (sk["state"], sk["tau"]) not in done
        p = states[sk["state"]]
        assert small_time_diagonal(p, SmallTimeConfig.heating(sk["tau"])).min() < -1e-12
    # every label and the noiseless point are present
    assert {lab for lab, t in done if t == 0.0} == set(states)
    assert len(rows) + 2 * len(sweep["skipped"]) == len(states) * 14 * 2


def test_verify_detects_tampering(tmp_path):
    outdir = tmp_path / "fig2"
    assert run("reproduce", "fig2", "--out", outdir, "--format", "jsonl") == 0
    table = outdir / "fig2_tau.jsonl"
    rows = io.read_records(table)
    rows[3]["gain"] += 1e-6
    io.write_records(rows, table)
    checked, bad = verify_outputs(outdir)
    assert len(bad) == 1 and bad[0][1] == 3
    assert run("verify", outdir) == 1


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "phasesense.cli", "--help"], capture_output=True,
                         text=True, check=True)
    for cmd in ("channel", "fisher-scan", "decohere", "zoo", "optimize", "reproduce"):
        assert cmd in out.stdout
