"""Command-line front end: ``phasesense <subcommand> ...``."""

import argparse
import concurrent.futures as cf
import hashlib
import json
import math
import os
import sys
import traceback
from pathlib import Path

import numpy as np

from . import io
from .channels import (
    ChannelVariant,
    Regime,
    SmallTimeConfig,
    ThermalBathConfig,
    apply_decoherence,
    channel_probabilities,
    phase_randomized_full,
    small_time_diagonal,
)
from .control import (
    RewardConfig,
    dcrab_optimize,
    evaluate_under_preparation_noise,
    evolve,
    pulse_from_record,
    pulse_record,
)
from .fock import NEG_CLAMP, DensityMatrix, TruncationPolicy, default_policy, diagonal_of, wigner_grid
from .metrology import (
    dynamical_range,
    fisher_information,
    occupation_bound,
    parity_deviation,
)
from .states import StateSpec, amplitudes, build, solve_for_occupation, zoo

__all__ = ["main", "build_parser", "parse_grid", "verify_outputs"]

FIGURES = ("fig2", "fig3", "figS4", "figS5")


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


class CliError(Exception):
    pass


def parse_grid(text):
    """``a,b,c`` | ``start:stop:num`` | ``start:stop:num:log``; must be strictly increasing."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] != "log"):
            raise CliError(f"bad grid {text!r}; use start:stop:num[:log]")
        start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
        if num < 1:
            raise CliError("grid needs at least one point")
        if len(parts) == 4:
            if start <= 0 or stop <= 0:
                raise CliError("log grids need positive endpoints")
            values = np.geomspace(start, stop, num)
        else:
            values = np.linspace(start, stop, num)
    else:
        values = np.array([float(v) for v in text.split(",") if v.strip()])
    if values.size == 0:
        raise CliError("empty grid")
    if values.size > 1 and np.any(np.diff(values) <= 0):
        raise CliError(f"grid {text!r} is not strictly increasing")
    return values


def _policy(args):
    if getattr(args, "dim", None):
        return TruncationPolicy(dim=args.dim)
    return default_policy()


def _spec(text):
    if text.endswith(".json") and Path(text).exists():
        return StateSpec.from_dict(io.read_json(text))
    return StateSpec.parse(text)


def config_seed(config):
    """Seed derived from a stable hash of a JSON-serialisable config."""
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return int(hashlib.sha256(blob).hexdigest()[:8], 16)


def _decoherence(regime, tau, nbar):
    if tau == 0:
        return None
    regime = regime.lower()
    if regime == "loss":
        return SmallTimeConfig.loss(tau)
    if regime == "heating":
        return SmallTimeConfig(tau, nbar if nbar > 0 else 1.0, Regime.HEATING)
    if regime == "general":
        return SmallTimeConfig(tau, nbar, Regime.GENERAL)
    if regime == "exact":
        return (ThermalBathConfig(1.0, nbar), tau)
    raise CliError(f"unknown regime {regime!r}")


def _run(fn, tasks, workers):
    """Apply ``fn`` to every task; returns ``(results, failures)`` in task order."""
    results = [None] * len(tasks)
    failures = []
    if workers > 1 and len(tasks) > 1:
        with cf.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(fn, t): i for i, t in enumerate(tasks)}
            for fut in cf.as_completed(futures):
                i = futures[fut]
                try:
                    results[i] = fut.result()
                except Exception as exc:  # noqa: BLE001 - reported per grid point
                    failures.append((i, tasks[i], exc))
    else:
        for i, t in enumerate(tasks):
            try:
                results[i] = fn(t)
            except Exception as exc:  # noqa: BLE001
                failures.append((i, t, exc))
    failures.sort(key=lambda f: f[0])
    return results, failures


def _report(failures, keys=None):
    for i, task, exc in failures:
        where = keys[i] if keys is not None else task
        print(f"failed grid point {i} {where!r}: {exc}", file=sys.stderr)
    return 1 if failures else 0


def _small_time_valid(probs, regime, tau, nbar):
    """False when the first-order map would leave negative occupations."""
    dec = _decoherence(regime, tau, nbar)
    if not isinstance(dec, SmallTimeConfig):
        return True
    return float(small_time_diagonal(probs, dec).min()) >= -NEG_CLAMP


def _gain_task(task):
    probs, regime, tau, nbar, alpha = task
    state = apply_decoherence(probs, _decoherence(regime, tau, nbar))
    res = fisher_information(state, alpha)
    return res.gain, res.fisher


def _probs_for(spec, policy):
    amp = amplitudes(spec, policy)
    return amp, amp * amp


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_channel(args):
    spec = _spec(args.state)
    policy = _policy(args)
    rho = build(spec, policy)
    p_in = rho.diagonal()
    if args.alpha < 0:
        raise CliError("alpha must be non-negative")
    if args.alpha == 0:
        p_out, dp = p_in, None
    else:
        p_out, dp = channel_probabilities(p_in, args.alpha, policy.tail_budget)
    rows = []
    for n in range(p_out.size):
        row = {"n": n, "p_in": float(p_in[n]) if n < p_in.size else 0.0, "p_out": float(p_out[n])}
        if dp is not None:
            row["dp_out"] = float(dp[n])
        rows.append(row)
    io.write_records(rows, args.out, args.format)
    if args.full:
        if not args.out or args.out == "-":
            raise CliError("--full needs --out")
        full = phase_randomized_full(rho, args.alpha, ChannelVariant(args.variant))
        mat = full.elems
        recs = [{"m": m, "re": mat[m].real.tolist(), "im": mat[m].imag.tolist()} for m in range(mat.shape[0])]
        io.write_records(recs, str(args.out) + ".full.jsonl", "jsonl")
    return 0


def cmd_fisher_scan(args):
    policy = _policy(args)
    specs = [_spec(s) for s in (args.state or ["fock:5", "gaussian:5", "coherent:0"])]
    alphas = parse_grid(args.grid)
    if np.any(alphas <= 0):
        raise CliError("alpha grid must be positive")
    taus = parse_grid(args.tau) if args.tau else np.array([0.0])
    probs = {s.label(): _probs_for(s, policy)[1] for s in specs}
    tasks = [
        (probs[s.label()], args.regime, float(t), args.nbar, float(a))
        for s in specs
        for t in taus
        for a in alphas
    ]
    keys = [(s.label(), float(t), float(a)) for s in specs for t in taus for a in alphas]
    results, failures = _run(_gain_task, tasks, args.workers)
    rows = []
    for (label, t, a), res in zip(keys, results):
        if res is None:
            continue
        p = probs[label]
        rows.append({
            "state": label,
            "regime": args.regime,
            "tau": t,
            "nbar": args.nbar,
            "alpha": a,
            "gain": res[0],
            "fisher": res[1],
            "bound": occupation_bound(p),
            "mean_n": float(np.arange(p.size) @ p),
        })
    io.write_records(rows, args.out, args.format)
    if args.ranges_out or args.ranges:
        ranges = []
        for s in specs:
            for t in taus:
                dec = _decoherence(args.regime, float(t), args.nbar)
                for lo, hi in dynamical_range(probs[s.label()], dec, alphas):
                    ranges.append({"state": s.label(), "regime": args.regime, "tau": float(t),
                                   "nbar": args.nbar, "lo": lo, "hi": hi})
        if args.ranges_out:
            io.write_records(ranges, args.ranges_out, args.format)
        else:
            for rec in ranges:
                print(json.dumps(rec), file=sys.stderr)
    return _report(failures)


def cmd_decohere(args):
    policy = _policy(args)
    spec = _spec(args.state)
    rho = build(spec, policy)
    dec = _decoherence(args.regime, args.tau, args.nbar)
    out = apply_decoherence(rho, dec)
    p_in, p_out = rho.diagonal(), diagonal_of(out)
    rows = [
        {"n": n, "p_in": float(p_in[n]) if n < p_in.size else 0.0, "p_out": float(p_out[n])}
        for n in range(p_out.size)
    ]
    io.write_records(rows, args.out, args.format)
    summary = {"state": spec.label(), "regime": args.regime, "tau": args.tau, "nbar": args.nbar,
               "parity_deviation": parity_deviation(out)}
    if args.alpha:
        summary["gain"] = fisher_information(out, args.alpha).gain
    print(json.dumps(summary), file=sys.stderr)
    return 0


def _zoo_specs(args, policy):
    if args.state:
        out = []
        for text in args.state:
            spec = _spec(text)
            fixed = {k: v for k, v in spec.params.items() if k in ("delta", "parity", "spacing", "offset", "levels")}
            solved = solve_for_occupation(spec.family, args.target, 1e-6, policy, **fixed)
            out.append((solved.label().replace(":", "_").replace(",", "_").replace("=", ""), solved))
        return out
    return zoo(args.target, 1e-6, policy)


def cmd_zoo(args):
    policy = _policy(args)
    outdir = Path(args.out or "zoo")
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        members = _zoo_specs(args, policy)
    except (ValueError, RuntimeError) as exc:
        raise CliError(f"could not solve for <N>={args.target}: {exc}") from exc
    axis = parse_grid(args.grid) if args.grid else np.linspace(-4.0, 4.0, 21)
    summary = []
    for label, spec in members:
        amp = amplitudes(spec, policy)
        io.write_state(outdir / f"{label}.csv", None, amplitudes=amp)
        p = amp * amp
        summary.append({"label": label, "spec": spec.label(), "mean_n": float(np.arange(p.size) @ p),
                        "dim": int(amp.size)})
        if not args.no_wigner:
            w = wigner_grid(DensityMatrix.from_pure(amp), axis, axis)
            recs = [{"re": float(x), "im": float(y), "w": float(w[i, j])}
                    for i, y in enumerate(axis) for j, x in enumerate(axis)]
            io.write_records(recs, outdir / f"{label}_wigner.csv", "csv")
    io.write_records(summary, outdir / "zoo_summary.csv", "csv")
    io.write_records([{"label": lab, **s.to_dict()} for lab, s in members], outdir / "zoo_specs.jsonl", "jsonl")
    return 0


def _reward_config(args):
    if args.config:
        return RewardConfig.from_dict(io.read_json(args.config))
    return RewardConfig(args.alpha, args.zeta, args.ntarget, args.lam, args.regime)


def _optimize_task(task):
    cfg_dict, T, seed, budget, dim, steps, bath = task
    cfg = RewardConfig.from_dict(cfg_dict)
    dt = T / steps if T > 0 else None
    res = dcrab_optimize(cfg, T, budget[0], budget[1], dim=dim, dt=dt, seed=seed)
    rec = pulse_record(res, cfg, dim=dim, dt=dt)
    state = res.state
    p = state.diagonal()
    row = {
        "T_over_2pi": T / (2.0 * math.pi),
        "T": T,
        "seed": seed,
        "reward": res.reward,
        "gain": fisher_information(state, cfg.alpha).gain,
        "mean_n": float(np.arange(p.size) @ p),
        "minority_parity": float(min(p[::2].sum(), p[1::2].sum())),
        "evaluations": res.evaluations,
    }
    if bath is not None:
        row["gain_noisy"] = evaluate_under_preparation_noise(
            res.pulse, ThermalBathConfig(*bath), cfg, dt=dt, dim=dim).gain
        rec["preparation_bath"] = {"gamma": bath[0], "nbar": bath[1]}
        rec["gain_noisy"] = row["gain_noisy"]
    return rec, row


def cmd_optimize(args):
    cfg = _reward_config(args)
    times = parse_grid(args.times) * 2.0 * math.pi
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else [
        args.seed if args.seed is not None else config_seed({"cfg": cfg.to_dict(), "times": args.times})
    ]
    bath = (args.prep_gamma, args.prep_nbar) if args.prep_gamma else None
    dim = args.dim or 32
    tasks = [(cfg.to_dict(), float(T), s, (args.super_iterations, args.max_evals), dim, args.steps, bath)
             for T in times for s in seeds]
    results, failures = _run(_optimize_task, tasks, args.workers)
    pulses = [r[0] for r in results if r is not None]
    rows = [r[1] for r in results if r is not None]
    io.write_records(pulses, args.out, "jsonl")
    io.write_records(rows, args.summary, args.format)
    return _report(failures)


# ---------------------------------------------------------------------------
# reproduce / verify
# ---------------------------------------------------------------------------


def _write_sweep(outdir, name, states, regimes, taus, alphas, nbar, workers, fmt):
    """Gain sweep over (state, regime, tau, alpha); state files go to ``states/``."""
    ext = "jsonl" if fmt == "jsonl" else "csv"
    state_files = {}
    probs = {}
    for label, amp in states.items():
        path = Path("states") / f"{label}.{ext}"
        io.write_state(outdir / path, None, amplitudes=amp, fmt=fmt)
        state_files[label] = str(path)
        probs[label] = diagonal_of(io.read_state(outdir / path, fmt))
    # Broad states leave the first-order map's validity (negative tails) at
    # large tau; those points are listed in the manifest, not computed.
    valid = {(lab, reg, float(t)): _small_time_valid(probs[lab], reg, float(t), nbar)
             for lab in states for reg in regimes for t in taus}
    skipped = [{"state": lab, "regime": reg, "tau": t, "reason": "small-time map negative"}
               for (lab, reg, t), ok in valid.items() if not ok]
    keys = [(lab, reg, float(t), float(a)) for lab in states for reg in regimes for t in taus for a in alphas
            if valid[(lab, reg, float(t))]]
    tasks = [(probs[lab], reg, t, nbar, a) for lab, reg, t, a in keys]
    results, failures = _run(_gain_task, tasks, workers)
    failures = [(i, keys[i], exc) for i, _, exc in failures]
    rows = []
    for (lab, reg, t, a), res in zip(keys, results):
        if res is not None:
            rows.append({"state": lab, "regime": reg, "tau": t, "nbar": nbar, "alpha": a,
                         "gain": res[0], "bound": occupation_bound(probs[lab])})
    io.write_records(rows, outdir / f"{name}.{ext}", fmt)
    return {"table": f"{name}.{ext}", "states": state_files, "skipped": skipped}, failures


def _fig2(outdir, args):
    policy = _policy(args)
    states = {
        "fock_5": amplitudes(StateSpec("fock", {"n": 5}), policy),
        "gaussian_5": amplitudes(StateSpec("gaussian", {"nbar": 5.0}), policy),
        "coherent_0": amplitudes(StateSpec("coherent", {"beta": 0.0}), policy),
    }
    alphas = np.geomspace(1e-3, 1.0, 31)
    taus = [0.0, 1e-4, 1e-3, 1e-2]
    # "exact" is the master-equation loss channel (nbar = 0), valid at every tau
    regimes = ["loss", "heating", "exact"]
    entry, failures = _write_sweep(outdir, "fig2_gain", states, regimes, taus, alphas,
                                   0.0, args.workers, args.format)
    entry2, f2 = _write_sweep(outdir, "fig2_tau", states, regimes,
                              [0.0] + list(np.geomspace(1e-6, 1e-2, 17)), [0.005], 0.0,
                              args.workers, args.format)
    ranges = []
    for lab in ("fock_5", "gaussian_5"):
        p = states[lab] ** 2
        for reg in regimes:
            for t in taus:
                if not _small_time_valid(p, reg, t, 0.0):
                    continue
                for lo, hi in dynamical_range(p, _decoherence(reg, t, 0.0), alphas):
                    ranges.append({"state": lab, "regime": reg, "tau": t, "lo": lo, "hi": hi})
    ext = "jsonl" if args.format == "jsonl" else "csv"
    io.write_records(ranges, outdir / f"fig2_ranges.{ext}", args.format)
    files = {"sweeps": [entry, entry2], "ranges": f"fig2_ranges.{ext}"}
    return files, failures + f2


def _zoo_sweep(outdir, args, regime, name):
    policy = _policy(args)
    members = zoo(8.0, 1e-6, policy)
    states = {lab: amplitudes(spec, policy) for lab, spec in members}
    taus = [0.0] + list(np.geomspace(1e-6, 1e-2, 13))
    entry, failures = _write_sweep(outdir, name, states, [regime], taus, [0.005, 0.2], 0.0,
                                   args.workers, args.format)
    io.write_records([{"label": lab, **s.to_dict()} for lab, s in members], outdir / "zoo_specs.jsonl", "jsonl")
    return {"sweeps": [entry]}, failures


def _fig3(outdir, args):
    cfg = RewardConfig(args.alpha if args.alpha else 0.005, 0.01, 4.0, 10.0)
    times = parse_grid(args.times) * 2.0 * math.pi if args.times else np.array([0.2, 0.4]) * 2 * math.pi
    seed = args.seed if args.seed is not None else config_seed({"fig3": cfg.to_dict()})
    dim = args.dim or 32
    tasks = [(cfg.to_dict(), float(T), seed, (args.super_iterations, args.max_evals), dim, args.steps, None)
             for T in times]
    results, failures = _run(_optimize_task, tasks, args.workers)
    pulses = [r[0] for r in results if r is not None]
    rows = [r[1] for r in results if r is not None]
    for rec, row in zip(pulses, rows):
        rho = evolve(pulse_from_record(rec), dt=rec["dt"], dim=rec["dim"]).boson
        row["gain_at_0.2"] = fisher_information(rho, 0.2).gain
    io.write_records(pulses, outdir / "fig3_pulses.jsonl", "jsonl")
    ext = "jsonl" if args.format == "jsonl" else "csv"
    io.write_records(rows, outdir / f"fig3_summary.{ext}", args.format)
    return {"pulses": "fig3_pulses.jsonl", "summary": f"fig3_summary.{ext}",
            "reward_config": cfg.to_dict()}, failures


def cmd_reproduce(args):
    outdir = Path(args.out or f"reproduce_{args.figure}")
    outdir.mkdir(parents=True, exist_ok=True)
    if args.figure == "fig2":
        files, failures = _fig2(outdir, args)
    elif args.figure == "figS4":
        files, failures = _zoo_sweep(outdir, args, "loss", "figS4")
    elif args.figure == "figS5":
        files, failures = _zoo_sweep(outdir, args, "heating", "figS5")
    else:
        files, failures = _fig3(outdir, args)
    manifest = {"figure": args.figure, "format": args.format, "files": files}
    with open(outdir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
    return _report(failures)


def verify_outputs(outdir, tol=1e-10):
    """Recompute every emitted gain from the re-ingested files.

    Returns ``(checked, mismatches)`` where mismatches lists
    ``(file, row_index, emitted, recomputed)``.
    """
    outdir = Path(outdir)
    manifest = io.read_json(outdir / "manifest.json")
    fmt = manifest.get("format", "csv")
    files = manifest["files"]
    checked = 0
    bad = []
    for sweep in files.get("sweeps", []):
        probs = {lab: diagonal_of(io.read_state(outdir / path, fmt)) for lab, path in sweep["states"].items()}
        for i, row in enumerate(io.read_records(outdir / sweep["table"], fmt)):
            p = probs[row["state"]]
            dec = _decoherence(row["regime"], float(row["tau"]), float(row["nbar"]))
            got = fisher_information(apply_decoherence(p, dec), float(row["alpha"])).gain
            checked += 1
            if not abs(got - float(row["gain"])) <= tol:
                bad.append((sweep["table"], i, row["gain"], got))
    if "pulses" in files:
        cfg = RewardConfig.from_dict(files["reward_config"])
        summary = io.read_records(outdir / files["summary"], fmt)
        for i, (rec, row) in enumerate(zip(io.read_records(outdir / files["pulses"], "jsonl"), summary)):
            rho = evolve(pulse_from_record(rec), dt=rec["dt"], dim=rec["dim"]).boson
            got = fisher_information(rho, cfg.alpha).gain
            diag = rho.diagonal()
            checked += 1
            if not abs(got - float(row["gain"])) <= tol:
                bad.append((files["summary"], i, row["gain"], got))
            if not np.allclose(diag, rec["final_diagonal"], rtol=0, atol=tol):
                bad.append((files["pulses"], i, "final_diagonal", "mismatch"))
    return checked, bad


def cmd_verify(args):
    checked, bad = verify_outputs(args.directory, args.tol)
    for item in bad:
        print("mismatch", *item, file=sys.stderr)
    print(json.dumps({"checked": checked, "mismatches": len(bad)}))
    return 1 if bad or checked == 0 else 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dim", type=int, default=None,
                        help="Fock cutoff (default: PHASESENSE_DIM or automatic)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", default=None, help="output file or directory ('-' for stdout)")
    common.add_argument("--format", choices=io.FORMATS, default="csv")
    common.add_argument("--workers", type=int, default=1)

    parser = argparse.ArgumentParser(prog="phasesense", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("channel", parents=[common], help="phase-randomised displacement of a state")
    p.add_argument("--state", required=True, help="state spec, e.g. fock:1, or a JSON spec file")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--variant", type=int, choices=(1, 2, 3), default=1)
    p.add_argument("--full", action="store_true", help="also write the full output matrix")
    p.set_defaults(func=cmd_channel)

    p = sub.add_parser("fisher-scan", parents=[common], help="gain versus alpha per state")
    p.add_argument("--state", action="append")
    p.add_argument("--grid", default="0.001:1:30:log", help="alpha grid")
    p.add_argument("--tau", default=None, help="decoherence grid (default 0)")
    p.add_argument("--nbar", type=float, default=0.0)
    p.add_argument("--regime", choices=("loss", "heating", "general", "exact"), default="loss")
    p.add_argument("--ranges", action="store_true", help="print dynamical ranges to stderr")
    p.add_argument("--ranges-out", default=None, help="file for dynamical-range intervals")
    p.set_defaults(func=cmd_fisher_scan)

    p = sub.add_parser("decohere", parents=[common], help="apply thermal decoherence to a state")
    p.add_argument("--state", required=True)
    p.add_argument("--tau", type=float, required=True, help="gamma t")
    p.add_argument("--nbar", type=float, default=0.0)
    p.add_argument("--regime", choices=("loss", "heating", "general", "exact"), default="loss")
    p.add_argument("--alpha", type=float, default=None, help="also report the gain at this alpha")
    p.set_defaults(func=cmd_decohere)

    p = sub.add_parser("zoo", parents=[common], help="build states at a common <N>")
    p.add_argument("--state", action="append", help="families to solve (default: all twelve)")
    p.add_argument("--target", "--nbar", dest="target", type=float, default=8.0)
    p.add_argument("--grid", default=None, help="Wigner axis grid (default -4:4:21)")
    p.add_argument("--no-wigner", action="store_true")
    p.set_defaults(func=cmd_zoo)

    p = sub.add_parser("optimize", parents=[common], help="optimise drive pulses")
    p.add_argument("--config", default=None, help="RewardConfig JSON file")
    p.add_argument("--alpha", type=float, default=0.005)
    p.add_argument("--zeta", "--tau", dest="zeta", type=float, default=0.01,
                   help="noise strength per alpha^2")
    p.add_argument("--ntarget", type=float, default=4.0)
    p.add_argument("--lam", type=float, default=10.0)
    p.add_argument("--regime", choices=("loss", "heating"), default="loss")
    p.add_argument("--times", "--grid", dest="times", default="0.4", help="T / 2pi grid")
    p.add_argument("--seeds", default=None, help="comma-separated seeds")
    p.add_argument("--super-iterations", type=int, default=5)
    p.add_argument("--max-evals", type=int, default=10000)
    p.add_argument("--steps", type=int, default=2000, help="time steps per pulse")
    p.add_argument("--prep-gamma", type=float, default=0.0, help="re-evaluate with this loss rate")
    p.add_argument("--prep-nbar", type=float, default=0.0)
    p.add_argument("--summary", default=None, help="summary table path (default stdout)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("reproduce", parents=[common], help="emit figure data")
    p.add_argument("figure", choices=FIGURES)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--times", default=None, help="T / 2pi grid for fig3")
    p.add_argument("--super-iterations", type=int, default=1)
    p.add_argument("--max-evals", type=int, default=200)
    p.add_argument("--steps", type=int, default=2000)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("verify", help="recompute emitted values from reproduce output")
    p.add_argument("directory")
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OverflowError) as exc:
        if os.environ.get("PHASESENSE_DEBUG"):
            traceback.print_exc()
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
