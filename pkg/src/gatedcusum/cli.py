"""Command-line front end.

Subcommands: stationary | constants | predict | simulate | report.
Global flags: --config PATH, --seed U64, --workers N, --out DIR.
Exit codes: 0 ok, 1 config error, 2 regime/precondition error,
3 numerical non-convergence.

Configuration is flat INI-style text with sections [model], [harvest],
[detector], [experiment]; see README for a worked example.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import (
    predict_delay_deficit,
    predict_delay_surplus,
    predict_fa_deficit,
    predict_fa_surplus,
)
from .change_model import ChangeModel, llr_stats
from .errors import ConfigError, ConvergenceError, RegimeError
from .harvest import HarvestModel
from .montecarlo import (
    ExperimentConfig,
    run_delay_experiment,
    run_fa_experiment,
)
from .renewal import EstimatorSizes, RenewalConstants, estimate_constants
from .report import load_manifest, new_manifest, write_csv
from .stationary import solve_stationary_density, transition_probs


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return e.exit_code
    except RegimeError as e:
        print(f"regime error: {e}", file=sys.stderr)
        return e.exit_code
    except ConvergenceError as e:
        print(f"convergence error: {e}", file=sys.stderr)
        return e.exit_code


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gatedcusum", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="INI config file")
        sp.add_argument("--seed", type=int, default=0, help="master seed (u64)")
        sp.add_argument("--workers", type=int, default=1, help="worker threads")
        sp.add_argument("--out", default="out", help="output directory")

    sp = sub.add_parser("stationary", help="solve the stationary battery density")
    common(sp)
    sp.set_defaults(func=cmd_stationary)

    sp = sub.add_parser("constants", help="estimate the renewal constants")
    common(sp)
    sp.set_defaults(func=cmd_constants)

    sp = sub.add_parser("predict", help="asymptotic predictions over the H-bar grid")
    common(sp)
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("simulate", help="Monte Carlo delay or false-alarm experiment")
    common(sp)
    sp.add_argument("--mode", choices=("delay", "fa"), required=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("report", help="join prediction and simulation manifests")
    sp.add_argument("manifests", nargs="+", help="manifest.json paths")
    sp.add_argument("--out", default="out", help="output directory")
    sp.set_defaults(func=cmd_report)
    return p


# ---------------------------------------------------------------- config ---

def _load_config(path: str) -> tuple[dict, str]:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    text = p.read_text(encoding="utf-8")
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}") from e
    cfg = {s: dict(cp.items(s)) for s in cp.sections()}
    return cfg, text


def _require(cfg: dict, section: str, key: str) -> str:
    try:
        return cfg[section][key]
    except KeyError:
        raise ConfigError(f"missing config key: {section}.{key}") from None


def _get(cfg: dict, section: str, key: str, default=None):
    return cfg.get(section, {}).get(key, default)


def _as_float(raw: str, where: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{where} must be a number, got {raw!r}") from None


def _as_int(raw: str, where: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{where} must be an integer, got {raw!r}") from None


def _parse_model(cfg: dict) -> ChangeModel:
    try:
        return ChangeModel(
            m0=_as_float(_require(cfg, "model", "m0"), "model.m0"),
            m1=_as_float(_require(cfg, "model", "m1"), "model.m1"),
            sigma=_as_float(_require(cfg, "model", "sigma"), "model.sigma"),
        )
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _parse_harvest(cfg: dict, mean: float | None = None) -> HarvestModel:
    family = _require(cfg, "harvest", "family")
    if mean is None:
        mean = _as_float(_require(cfg, "harvest", "mean"), "harvest.mean")
    scale = _get(cfg, "harvest", "scale")
    try:
        return HarvestModel(
            family=family,
            mean=mean,
            scale=_as_float(scale, "harvest.scale") if scale is not None else None,
        )
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _parse_detector(cfg: dict) -> tuple[float, float]:
    e_s = _as_float(_require(cfg, "detector", "e_s"), "detector.e_s")
    h = _as_float(_require(cfg, "detector", "h"), "detector.h")
    if e_s <= 0:
        raise ConfigError("detector.e_s must be positive")
    if h <= 0:
        raise ConfigError("detector.h must be positive")
    return e_s, h


def _solver_params(cfg: dict) -> dict:
    out = {}
    gp = _get(cfg, "experiment", "grid_points")
    if gp is not None:
        out["n_points"] = _as_int(gp, "experiment.grid_points")
    gm = _get(cfg, "experiment", "grid_max")
    if gm is not None:
        out["grid_max"] = _as_float(gm, "experiment.grid_max")
    return out


def _estimator_sizes(cfg: dict) -> EstimatorSizes:
    kw = {}
    for key in ("ladder_reps", "delta_reps", "minwalk_reps", "minwalk_horizon", "descent_reps"):
        raw = _get(cfg, "experiment", key)
        if raw is not None:
            kw[key] = _as_int(raw, f"experiment.{key}")
    return EstimatorSizes(**kw)


# ------------------------------------------------------------- commands ---

def cmd_stationary(args) -> int:
    cfg, text = _load_config(args.config)
    harvest = _parse_harvest(cfg)
    e_s, _h = _parse_detector(cfg)
    density = solve_stationary_density(harvest, e_s, **_solver_params(cfg))
    chain = transition_probs(density, harvest, e_s)

    man = new_manifest("stationary", __version__, args.seed, cfg, text)
    outdir = _outdir(args)
    density_csv = outdir / f"density-{man.manifest_id}.csv"
    chain_csv = outdir / f"chain-{man.manifest_id}.csv"
    write_csv(
        density_csv,
        ["b", "f_B", "manifest"],
        ((b, f, man.manifest_id) for b, f in zip(density.grid, density.values)),
    )
    pi1_mass = density.mass_above(e_s)
    write_csv(
        chain_csv,
        ["alpha", "beta", "pi0", "pi1", "pi1_mass", "residual", "iterations", "manifest"],
        [(chain.alpha, chain.beta, chain.pi0, chain.pi1, pi1_mass,
          density.residual, density.iterations, man.manifest_id)],
    )
    man.params = {"hbar": harvest.mean, "e_s": e_s, "family": harvest.family}
    man.results = {"alpha": chain.alpha, "beta": chain.beta, "pi0": chain.pi0,
                   "pi1": chain.pi1, "pi1_mass": pi1_mass}
    man.outputs = [density_csv.name, chain_csv.name]
    man.save(outdir / f"manifest-{man.manifest_id}.json")
    print(f"stationary: pi1={chain.pi1:.6f} (mass {pi1_mass:.6f}) -> {density_csv}")
    return 0


def _constants_for(
    model: ChangeModel,
    harvest: HarvestModel,
    e_s: float,
    hbar: float,
    seed: int,
    sizes: EstimatorSizes,
    solver_kw: dict,
    outdir: Path,
) -> tuple[RenewalConstants, float]:
    """Constants (cached on disk) and pi1 for one H-bar; pi1=1 in surplus."""
    deficit = hbar < e_s
    # surplus constants do not depend on the harvest mean: one cache entry
    key_payload = {
        "model": [model.m0, model.m1, model.sigma],
        "harvest": [harvest.family, hbar if deficit else None, harvest.scale],
        "e_s": e_s,
        "seed": seed,
        "sizes": asdict(sizes),
        "regime": "deficit" if deficit else "surplus",
    }
    import hashlib

    key = hashlib.sha256(json.dumps(key_payload, sort_keys=True).encode()).hexdigest()[:12]
    cache = outdir / f"constants-{key_payload['regime']}-{key}.json"
    if cache.exists():
        data = json.loads(cache.read_text())
        return RenewalConstants(**data["constants"]), data["pi1"]

    if deficit:
        h_model = HarvestModel(family=harvest.family, mean=hbar, scale=harvest.scale)
        density = solve_stationary_density(h_model, e_s, **solver_kw)
        chain = transition_probs(density, h_model, e_s)
        consts = estimate_constants(model, chain=chain, seed=seed, sizes=sizes)
        pi1 = chain.pi1
    else:
        consts = estimate_constants(model, chain=None, seed=seed, sizes=sizes)
        pi1 = 1.0
    cache.write_text(json.dumps({"constants": asdict(consts), "pi1": pi1}, sort_keys=True))
    return consts, pi1


def cmd_constants(args) -> int:
    cfg, text = _load_config(args.config)
    model = _parse_model(cfg)
    harvest = _parse_harvest(cfg)
    e_s, _h = _parse_detector(cfg)
    outdir = _outdir(args)
    sizes = _estimator_sizes(cfg)
    consts, pi1 = _constants_for(
        model, harvest, e_s, harvest.mean, args.seed, sizes, _solver_params(cfg), outdir
    )
    man = new_manifest("constants", __version__, args.seed, cfg, text)
    out_csv = outdir / f"constants-{man.manifest_id}.csv"
    rows = []
    data = asdict(consts)
    stderr = data.pop("stderr")
    for k, v in data.items():
        if k == "gated":
            continue
        rows.append((k, v, stderr.get(k), man.manifest_id))
    rows.append(("overshoot_limit", consts.overshoot_limit,
                 stderr.get("overshoot_limit"), man.manifest_id))
    write_csv(out_csv, ["key", "value", "stderr", "manifest"], rows)
    man.params = {"hbar": harvest.mean, "e_s": e_s, "pi1": pi1}
    man.results = {k: v for k, v in data.items() if v is not None}
    man.outputs = [out_csv.name]
    man.save(outdir / f"manifest-{man.manifest_id}.json")
    print(f"constants: wrote {out_csv}")
    return 0


def _hbar_list(cfg: dict) -> list[float]:
    raw = _get(cfg, "experiment", "hbar_list", "")
    return [_as_float(tok, "experiment.hbar_list") for tok in raw.split()]


def cmd_predict(args) -> int:
    cfg, text = _load_config(args.config)
    model = _parse_model(cfg)
    stats = llr_stats(model)
    harvest = _parse_harvest(cfg)
    e_s, h = _parse_detector(cfg)
    outdir = _outdir(args)
    sizes = _estimator_sizes(cfg)
    solver_kw = _solver_params(cfg)

    man = new_manifest("predict", __version__, args.seed, cfg, text)
    rows = []
    surplus_beta = None
    for hbar in _hbar_list(cfg):
        consts, pi1 = _constants_for(model, harvest, e_s, hbar, args.seed, sizes, solver_kw, outdir)
        if hbar >= e_s:
            delay = predict_delay_surplus(stats, consts, h)
            beta, arl = predict_fa_surplus(stats, consts, h)
            rows.append(("surplus", hbar, e_s, h, 1.0, delay, beta, arl, None, man.manifest_id))
            surplus_beta = beta
        else:
            if surplus_beta is None:
                ungated, _ = _constants_for(
                    model, harvest, e_s, e_s, args.seed, sizes, solver_kw, outdir
                )
                surplus_beta, _ = predict_fa_surplus(stats, ungated, h)
            delay = predict_delay_deficit(stats, consts, pi1, h)
            beta, arl = predict_fa_deficit(stats, consts, pi1, h)
            rows.append(
                ("deficit", hbar, e_s, h, pi1, delay, beta, arl,
                 pi1 * surplus_beta, man.manifest_id)
            )
    out_csv = outdir / f"predictions-{man.manifest_id}.csv"
    header = ["regime", "hbar", "e_s", "h", "pi1", "expected_delay",
              "fa_exponent", "arl2fa", "fa_exponent_proxy", "manifest"]
    write_csv(out_csv, header, rows)
    man.params = {"e_s": e_s, "h": h, "m0": model.m0, "m1": model.m1,
                  "sigma": model.sigma, "family": harvest.family}
    man.results = {"rows": [list(r[:-1]) for r in rows]}
    man.outputs = [out_csv.name]
    man.save(outdir / f"manifest-{man.manifest_id}.json")
    print(f"predict: wrote {len(rows)} rows -> {out_csv}")
    return 0


def _resolve_gate_mode(cfg: dict, hbar: float, e_s: float) -> str:
    mode = _get(cfg, "experiment", "gate_mode", "auto")
    if mode == "auto":
        return "always-on" if hbar >= e_s else "full-battery"
    return mode


def cmd_simulate(args) -> int:
    cfg, text = _load_config(args.config)
    model = _parse_model(cfg)
    harvest = _parse_harvest(cfg)
    e_s, h = _parse_detector(cfg)
    n_runs = _as_int(_require(cfg, "experiment", "n_runs"), "experiment.n_runs")
    outdir = _outdir(args)
    gate_mode = _resolve_gate_mode(cfg, harvest.mean, e_s)

    chain = density = None
    if gate_mode in ("full-battery", "stationary-chain") and harvest.mean < e_s:
        density = solve_stationary_density(harvest, e_s, **_solver_params(cfg))
        chain = transition_probs(density, harvest, e_s)
    battery_init = _get(cfg, "experiment", "battery_init",
                        "stationary" if density is not None else "fixed")

    max_steps_raw = _get(cfg, "experiment", "max_steps")
    change_point = (
        _as_int(_get(cfg, "experiment", "change_point", "1"), "experiment.change_point")
        if args.mode == "delay"
        else None
    )
    exp_cfg = ExperimentConfig(
        model=model,
        harvest=harvest if gate_mode == "full-battery" else None,
        e_s=e_s,
        h=h,
        n_runs=n_runs,
        master_seed=args.seed,
        max_steps=_as_int(max_steps_raw, "experiment.max_steps") if max_steps_raw else None,
        change_point=change_point,
        gate_mode=gate_mode,
        chain=chain,
        density=density,
        battery_init=battery_init,
    )
    if args.mode == "delay":
        result = run_delay_experiment(exp_cfg, workers=args.workers)
    else:
        result = run_fa_experiment(exp_cfg, workers=args.workers)

    cfg_for_id = {**cfg, "_invocation": {"mode": args.mode}}
    man = new_manifest(f"simulate-{args.mode}", __version__, args.seed, cfg_for_id, text)
    runs_csv = outdir / f"runs-{man.manifest_id}.csv"
    write_csv(
        runs_csv,
        ["run_index", "stop_time", "overshoot", "censored", "manifest"],
        (
            (i, int(result.stop_times[i]),
             None if result.censored[i] else float(result.overshoots[i]),
             bool(result.censored[i]), man.manifest_id)
            for i in range(n_runs)
        ),
    )
    summary_csv = outdir / f"summary-{man.manifest_id}.csv"
    write_csv(
        summary_csv,
        ["mode", "m0", "m1", "sigma", "family", "hbar", "e_s", "h", "n_runs", "seed",
         "gate_mode", "change_point", "mean_stop", "stderr", "censored_count",
         "censoring_flagged", "fitted_exponent", "fit_r2", "manifest"],
        [(args.mode, model.m0, model.m1, model.sigma, harvest.family, harvest.mean,
          e_s, h, n_runs, args.seed, gate_mode, change_point, result.mean_stop,
          result.stderr, result.censored_count, result.censoring_flagged,
          result.fitted_exponent, result.fit_r2, man.manifest_id)],
    )
    outputs = [runs_csv.name, summary_csv.name]
    if args.mode == "fa" and result.run_lengths.size:
        x = np.sort(np.exp(-h) * result.run_lengths)
        surv = 1.0 - np.arange(1, x.size + 1) / x.size
        surv_csv = outdir / f"survival-{man.manifest_id}.csv"
        write_csv(
            surv_csv,
            ["x", "log_survival", "manifest"],
            ((float(xi), float(np.log(si)) if si > 0 else None, man.manifest_id)
             for xi, si in zip(x[:-1], surv[:-1])),
        )
        outputs.append(surv_csv.name)
    man.params = {"mode": args.mode, "hbar": harvest.mean, "e_s": e_s, "h": h,
                  "m0": model.m0, "m1": model.m1, "sigma": model.sigma,
                  "family": harvest.family, "n_runs": n_runs, "gate_mode": gate_mode}
    man.results = {"mean_stop": result.mean_stop, "stderr": result.stderr,
                   "censored_count": result.censored_count,
                   "fitted_exponent": result.fitted_exponent, "fit_r2": result.fit_r2}
    man.outputs = outputs
    man.save(outdir / f"manifest-{man.manifest_id}.json")
    if result.censoring_flagged:
        print(f"warning: {result.censored_count} of {n_runs} runs censored "
              "(horizon too small)", file=sys.stderr)
    print(f"simulate {args.mode}: mean_stop={result.mean_stop:.4f} -> {summary_csv}")
    return 0


def cmd_report(args) -> int:
    if len(args.manifests) < 2:
        raise ConfigError("report needs at least one prediction and one simulation manifest")
    manifests = [load_manifest(Path(p)) for p in args.manifests]
    predictions = [m for m in manifests if m.command == "predict"]
    simulations = [m for m in manifests if m.command.startswith("simulate")]
    if not predictions or not simulations:
        raise ConfigError("report needs at least one prediction and one simulation manifest")

    shared_keys = ("m0", "m1", "sigma", "e_s", "h", "family")
    ref = {k: predictions[0].params.get(k) for k in shared_keys}
    mismatched = set()
    for m in predictions + simulations:
        for k in shared_keys:
            if m.params.get(k) != ref[k]:
                mismatched.add(k)
    if mismatched:
        raise ConfigError(f"manifest configs disagree on: {', '.join(sorted(mismatched))}")

    pred_rows = {}
    for m in predictions:
        for row in m.results["rows"]:
            regime, hbar, e_s, h, pi1, delay, beta, arl, proxy = row
            pred_rows[(hbar, h)] = (regime, pi1, delay, beta, arl, proxy)

    out_rows = []
    for m in simulations:
        if m.params.get("mode") != "delay":
            continue
        key = (m.params["hbar"], m.params["h"])
        if key not in pred_rows:
            raise ConfigError(f"no prediction row for hbar={key[0]}, h={key[1]}")
        regime, pi1, delay, beta, arl, proxy = pred_rows[key]
        sim = m.results["mean_stop"]
        rel = abs(sim - delay) / delay
        out_rows.append((key[0], regime, delay, sim, rel, beta, proxy, m.manifest_id))
    out_rows.sort(key=lambda r: -r[0])

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    report_csv = outdir / "report.csv"
    header = ["hbar", "regime", "theoretical_delay", "simulated_delay",
              "delay_rel_error", "fa_exponent", "fa_exponent_proxy", "manifest"]
    write_csv(report_csv, header, out_rows)
    print(",".join(header))
    for row in out_rows:
        print(",".join("" if v is None else (repr(v) if isinstance(v, float) else str(v))
                       for v in row))
    return 0


def _outdir(args) -> Path:
    p = Path(args.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


if __name__ == "__main__":
    sys.exit(main())
