"""Command-line front end.

    python -m lindblad_pptt ensemble --dims 2 --samples 2000 --seed 7 --out runs/d2
    python -m lindblad_pptt single --preset depolarizing-qubit
    python -m lindblad_pptt scenarios --dims 2x2 --trace superlinear --rank matched --out runs/s4
    python -m lindblad_pptt compare-methods --dims 2,3,4 --samples 50
    python -m lindblad_pptt fit runs/d2/samples.csv

Flags override values from an optional ``--config`` JSON file.
"""
from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .ensembles import RngStream
from .generator import (
    dephasing_qubit,
    depolarizing_qubit,
    generator_from_dict,
    generator_to_dict,
)
from .pptt import pptt_search, pptt_search_batch, write_negativity_trace
from .propagators import Method, PropagatorConfig
from .scenarios import (
    Correlation,
    ScenarioSpec,
    draw_generator,
    read_samples_csv,
    run_ensemble,
    sample_set_metadata,
    write_samples_csv,
)
from . import stats

PRESETS = {"depolarizing-qubit": depolarizing_qubit, "dephasing-qubit": dephasing_qubit}

DEFAULTS = {
    "dims": "2",
    "correlation": "glb",
    "trace": "canonical",
    "rank": "full",
    "k": 0.0,
    "gamma": 1.0,
    "samples": 2000,
    "dx": 1e-3,
    "x_max": 10.0,
    "method": "caolu",
    "seed": 0,
    "workers": None,
    "out": None,
}


class ConfigError(ValueError):
    pass


def parse_dims(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(int(d) for d in text)
    try:
        dims = tuple(int(p) for p in str(text).lower().split("x"))
    except ValueError:
        raise ConfigError(f"--dims expects e.g. 4 or 2x2x2, got {text!r}") from None
    return dims


def parse_rule(text, kind: str, names: tuple):
    if isinstance(text, (list, tuple)):
        return tuple(text)
    if text in names:
        return text
    cast = float if kind == "trace" else int
    try:
        return tuple(cast(p) for p in str(text).split(","))
    except ValueError:
        raise ConfigError(f"--{kind} expects one of {names} or a comma list, got {text!r}") from None


def parse_list(text, cast=float) -> list:
    if isinstance(text, (list, tuple)):
        return [cast(v) for v in text]
    return [cast(v) for v in str(text).split(",") if v.strip()]


def effective_config(args, keys) -> dict:
    """Defaults, then the config file, then explicitly given flags."""
    cfg = {k: DEFAULTS.get(k) for k in keys}
    if getattr(args, "config", None):
        try:
            doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from None
        for k, v in doc.items():
            k = k.replace("-", "_")
            if k not in cfg:
                raise ConfigError(f"unknown config key {k!r}")
            cfg[k] = v
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    if "workers" in cfg and cfg["workers"] is None:
        cfg["workers"] = os.cpu_count() or 1
    return cfg


def build_spec(cfg: dict, correlation=None) -> ScenarioSpec:
    try:
        return ScenarioSpec(
            parse_dims(cfg["dims"]),
            Correlation(correlation or cfg["correlation"]),
            parse_rule(cfg["trace"], "trace", ("canonical", "superlinear")),
            parse_rule(cfg["rank"], "rank", ("full", "matched")),
            float(cfg["k"]),
            float(cfg.get("gamma", 1.0)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_propagator(cfg: dict) -> PropagatorConfig:
    try:
        return PropagatorConfig(Method(cfg["method"]), float(cfg["dx"]), float(cfg["x_max"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _progress(total: int, label: str = ""):
    start = time.perf_counter()

    def report(done: int) -> None:
        el = time.perf_counter() - start
        print(f"\r{label}{done}/{total} samples, {el:.1f} s", end="", file=sys.stderr, flush=True)
        if done >= total:
            print(file=sys.stderr)

    return report


class _Outputs:
    """Tracks files written to an output directory so a failed run leaves nothing behind."""

    def __init__(self, out):
        self.dir = Path(out)
        self.created_dir = not self.dir.exists()
        self.files: list = []

    def path(self, name: str) -> Path:
        p = self.dir / name
        p.parent.mkdir(parents=True, exist_ok=True)
        self.files.append(p)
        return p

    def cleanup(self) -> None:
        for p in self.files:
            p.unlink(missing_ok=True)
        for d in sorted({p.parent for p in self.files}, key=lambda q: len(q.parts), reverse=True):
            if d != self.dir and d.exists() and not any(d.iterdir()):
                d.rmdir()
        if self.created_dir and self.dir.exists() and not any(self.dir.iterdir()):
            self.dir.rmdir()


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n", encoding="utf-8")


def _grid_meta(pc: PropagatorConfig) -> dict:
    return {"dx": pc.dx, "x_max": pc.x_max, "n_points": int(len(pc.grid())), "method": pc.method.value}


# --- commands --------------------------------------------------------------------

ENSEMBLE_KEYS = ("dims", "correlation", "trace", "rank", "k", "gamma", "samples", "dx", "x_max",
                 "method", "seed", "workers", "out")


def cmd_ensemble(args) -> int:
    cfg = effective_config(args, ENSEMBLE_KEYS)
    spec = build_spec(cfg)
    pc = build_propagator(cfg)
    n = int(cfg["samples"])
    if n < 1:
        raise ConfigError("--samples must be >= 1")
    if not cfg["out"]:
        raise ConfigError("--out is required")
    out = _Outputs(cfg["out"])
    try:
        t0 = time.perf_counter()
        s = run_ensemble(spec, n, pc, int(cfg["seed"]), int(cfg["workers"]), progress=_progress(n))
        elapsed = time.perf_counter() - t0
        write_samples_csv(s, out.path("samples.csv"))
        summary = {
            "code_version": __version__,
            "config": cfg,
            "master_seed": int(cfg["seed"]),
            "grid": _grid_meta(pc),
            "metadata": sample_set_metadata(s),
            "wall_time_s": elapsed,
        }
        try:
            summary.update(stats.fit_report(s, seed=int(cfg["seed"])))
        except ValueError as exc:
            summary["stats"] = {"error": str(exc), "censored_count": int(s.censored.sum())}
        _write_json(out.path("summary.json"), summary)
    except BaseException:
        out.cleanup()
        raise
    st = summary.get("stats", {})
    print(json.dumps({"out": str(out.dir), "n": n, "mean": st.get("mean"), "stdev": st.get("stdev"),
                      "censored": int(s.censored.sum())}))
    return 0


SINGLE_KEYS = ("dims", "correlation", "trace", "rank", "k", "gamma", "dx", "x_max", "method", "seed")


def cmd_single(args) -> int:
    cfg = effective_config(args, SINGLE_KEYS)
    pc = build_propagator(cfg)
    if args.preset and args.generator:
        raise ConfigError("--preset and --generator are mutually exclusive")
    if args.preset:
        gen = PRESETS[args.preset]()
    elif args.generator:
        try:
            gen = generator_from_dict(json.loads(Path(args.generator).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError, ValueError) as exc:
            raise ConfigError(f"cannot load generator {args.generator}: {exc}") from None
    else:
        spec = build_spec(cfg)
        gen = draw_generator(spec, RngStream(int(cfg["seed"]), int(args.index)))
    if args.save_generator:
        _write_json(Path(args.save_generator), generator_to_dict(gen))
    res = pptt_search(gen, pc, record_trace=bool(args.negativity_trace), interpolate=args.interpolate)
    if args.negativity_trace:
        write_negativity_trace(res, args.negativity_trace)
    doc = {"x_ppt": res.x_ppt, "censored": res.censored, "dim": gen.dim_d, "grid": _grid_meta(pc),
           "provenance": gen.provenance, "code_version": __version__}
    print(json.dumps(doc))
    return 0


SCEN_KEYS = ("dims", "trace", "rank", "k", "gamma", "samples", "dx", "x_max", "method", "seed",
             "workers", "out")


def _pair_report(a, b, seed: int) -> dict:
    lo, hi = stats.bootstrap_diff_ci(a, b, "median", 1000, 0.95, seed)
    return {
        "median_difference": float(np.median(a.uncensored_x()) - np.median(b.uncensored_x())),
        "median_difference_ci95": [lo, hi],
        "ks_distance": stats.ks_distance(stats.ecdf(a), stats.ecdf(b)),
    }


def cmd_scenarios(args) -> int:
    cfg = effective_config(args, SCEN_KEYS)
    dims = parse_dims(cfg["dims"])
    names = parse_list(args.correlations, str) if args.correlations else (
        ["glb", "iloc", "cloc"] if len(set(dims)) == 1 else ["glb", "iloc"])
    specs = {c: build_spec(cfg, c) for c in names}
    pc = build_propagator(cfg)
    if not cfg["out"]:
        raise ConfigError("--out is required")
    n, seed = int(cfg["samples"]), int(cfg["seed"])
    out = _Outputs(cfg["out"])
    try:
        sets, summaries = {}, {}
        for c, spec in specs.items():
            s = run_ensemble(spec, n, pc, seed, int(cfg["workers"]), progress=_progress(n, f"{c}: "))
            sets[c] = s
            write_samples_csv(s, out.path(f"{c}/samples.csv"))
            summaries[c] = {"metadata": sample_set_metadata(s), **stats.fit_report(s, seed=seed)}
        pairs = {f"{a}-{b}": _pair_report(sets[a], sets[b], seed) for a, b in itertools.combinations(sets, 2)}
        doc = {"code_version": __version__, "config": cfg, "master_seed": seed, "grid": _grid_meta(pc),
               "scenarios": summaries, "comparisons": pairs}
        _write_json(out.path("comparison.json"), doc)
    except BaseException:
        out.cleanup()
        raise
    print(json.dumps({c: summaries[c]["stats"]["median"] for c in summaries}))
    return 0


COMPARE_KEYS = ("k", "samples", "dx", "x_max", "seed", "out")


def compare_methods(dims, k_values, n: int, dx: float, x_max: float, seed: int) -> dict:
    """Cross-method agreement and per-sample timings, one generator at a time."""
    rows = []
    times = {m.value: [] for m in Method}
    for D in dims:
        per_method = {m.value: 0.0 for m in Method}
        for kv in k_values:
            spec = ScenarioSpec((D,), Correlation.GLB, "canonical", "full", kv)
            gens = [draw_generator(spec, RngStream(seed, i)) for i in range(n)]
            xs = {}
            for m in Method:
                pc = PropagatorConfig(m, dx, x_max)
                t0 = time.perf_counter()
                xs[m.value] = np.array([pptt_search(g, pc).x_ppt for g in gens])
                per_method[m.value] += time.perf_counter() - t0
            diff = np.abs(xs["caolu"] - xs["standard"])
            rows.append({"dim": D, "k": kv, "n": n, "max_abs_diff": float(diff.max()),
                         "mean_standard": float(xs["standard"].mean()),
                         "mean_caolu": float(xs["caolu"].mean())})
        for m in per_method:
            times[m].append(per_method[m] / (n * len(k_values)))
    fits = {m: stats.fit_power_law(dims, t) for m, t in times.items()} if len(dims) > 1 else {}
    return {"agreement": rows, "seconds_per_sample": {"dims": list(dims), **times}, "timing_fits": fits,
            "note": "both prefactors are reported; no method is declared faster"}


def cmd_compare_methods(args) -> int:
    cfg = effective_config(args, COMPARE_KEYS)
    dims = parse_list(args.dims or "2,3,4", int)
    k_values = parse_list(cfg["k"] if args.k is not None else "0,1", float)
    n = int(args.samples or 50)
    PropagatorConfig(Method.CAOLU, float(cfg["dx"]), float(cfg["x_max"]))
    rep = compare_methods(dims, k_values, n, float(cfg["dx"]), float(cfg["x_max"]), int(cfg["seed"]))
    rep.update(code_version=__version__, config={**cfg, "dims": dims, "k": k_values, "samples": n})
    if cfg["out"]:
        out = _Outputs(cfg["out"])
        _write_json(out.path("compare_methods.json"), rep)
    print(json.dumps(rep, indent=2))
    return 0


def _dim_of(csv_path: Path):
    meta = csv_path.parent / "summary.json"
    if meta.exists():
        try:
            dims = parse_dims(json.loads(meta.read_text(encoding="utf-8"))["config"]["dims"])
            return int(np.prod(dims))
        except (KeyError, ValueError, json.JSONDecodeError):
            return None
    return None


def cmd_fit(args) -> int:
    reports, mean_pts, sd_pts = {}, [], []
    for p in args.paths:
        path = Path(p)
        try:
            s = read_samples_csv(path)
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from None
        rep = stats.fit_report(s, B=args.bootstrap, seed=args.seed)
        D = _dim_of(path)
        rep["dim"] = D
        reports[str(path)] = rep
        if D is not None:
            mean_pts.append((D, rep["stats"]["mean"]))
            sd_pts.append((D, rep["stats"]["stdev"]))
    doc = {"code_version": __version__, "fits": reports, "scaling_fits": {}}
    if len({d for d, _ in mean_pts}) > 1:
        doc["scaling_fits"] = {"mean_log2_theta": stats.fit_log_scaling(mean_pts),
                               "stdev_inverse_theta": stats.fit_inverse_scaling(sd_pts)}
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


# --- argument parsing ----------------------------------------------------------

def _add_scenario_flags(p, with_corr=True) -> None:
    p.add_argument("--dims", help="subsystem dimensions, e.g. 4 or 2x2x2")
    if with_corr:
        p.add_argument("--correlation", choices=[c.value for c in Correlation])
    p.add_argument("--trace", help="canonical, superlinear or a comma list of traces")
    p.add_argument("--rank", help="full, matched or a comma list of rank bounds")
    p.add_argument("--k", type=float, help="Hamiltonian coefficient")
    p.add_argument("--gamma", type=float)


def _add_grid_flags(p) -> None:
    p.add_argument("--dx", type=float)
    p.add_argument("--x-max", dest="x_max", type=float)
    p.add_argument("--method", choices=[m.value for m in Method])
    p.add_argument("--seed", type=int, help="master seed (u64)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lindblad-pptt", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ensemble", help="Monte Carlo PPTT ensemble for one scenario")
    _add_scenario_flags(p)
    _add_grid_flags(p)
    p.add_argument("--samples", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.add_argument("--config")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("single", help="PPTT of one generator")
    _add_scenario_flags(p)
    _add_grid_flags(p)
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--generator", help="generator JSON file")
    p.add_argument("--index", type=int, default=0, help="stream index for seed-drawn generators")
    p.add_argument("--save-generator")
    p.add_argument("--negativity-trace", help="write x,negativity CSV here")
    p.add_argument("--interpolate", action="store_true")
    p.add_argument("--config")
    p.set_defaults(func=cmd_single)

    p = sub.add_parser("scenarios", help="GLB / iLOC / cLOC comparison on matched seeds")
    _add_scenario_flags(p, with_corr=False)
    _add_grid_flags(p)
    p.add_argument("--correlations", help="comma list, default all applicable")
    p.add_argument("--samples", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.add_argument("--config")
    p.set_defaults(func=cmd_scenarios)

    p = sub.add_parser("compare-methods", help="standard vs Cao-Lu agreement and timing")
    p.add_argument("--dims", help="comma list of Hilbert dimensions, default 2,3,4")
    p.add_argument("--k", help="comma list of Hamiltonian coefficients, default 0,1")
    p.add_argument("--samples", type=int, help="generators per (dim, k), default 50")
    p.add_argument("--dx", type=float)
    p.add_argument("--x-max", dest="x_max", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--config")
    p.set_defaults(func=cmd_compare_methods)

    p = sub.add_parser("fit", help="summary statistics and 3-parameter fits of samples.csv files")
    p.add_argument("paths", nargs="+")
    p.add_argument("--bootstrap", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
