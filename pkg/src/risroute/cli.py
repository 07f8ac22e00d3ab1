"""Command line front end.

    risroute run --preset fig6-throughput --reps 20 --out results
    risroute validate-config my.ini
    risroute presets

Every run writes ``figure.csv``, ``raw.csv``, ``summary.csv`` and
``manifest.json`` under ``<out>/<preset>/``.  Exit codes: 0 ok, 1 bad
configuration or arguments, 2 runtime failure (including unwritable output),
3 finished but some replication hit the slot cap.
"""
import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from importlib import metadata

from . import experiments as ex
from .config import apply_values, defaults, load_file, parse_overrides, to_text
from .errors import ConfigError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_PARTIAL = 0, 1, 2, 3
OUT_ENV = "RISROUTE_OUT"
STRATEGIES = ("proposed", "LRD", "MRIRS", "RAND")

# Time scales for network presets.  A batch of 10^7 bits takes seconds to
# minutes per hop, so delay budgets and ON/OFF sojourns are stretched to match.
NETWORK_SCALE = {
    "packets": 10_000_000,
    "delay_budget": 4000.0,
    "mean_off": 12000.0,
    "mean_on": 200.0,
    "retry_slots": 400_000,
    "max_slots": 100_000_000,
    "spacing_x": 1 / 64,
    "spacing_y": 1 / 64,
}


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    kind: str  # "surface" or "network"
    param: str  # swept quantity
    values: tuple
    reps: int
    metric: str | None = None  # network presets: d_t, e_c or e_eff
    value_name: str | None = None
    overrides: dict = field(default_factory=dict)
    strategies: tuple = STRATEGIES

    def __post_init__(self):
        if not self.values:
            raise ValueError(f"preset {self.name} sweeps no values")


_KG = (4, 10, 25, 50)
PRESETS = {p.name: p for p in (
    ExperimentPreset("fig3-rate-vs-groups", "surface", "groups", (1, 2, 4, 5, 8, 10, 16, 20, 25, 40, 50, 80,
                                                                   100, 200, 400), 200),
    ExperimentPreset("fig4-rate-vs-spacing", "surface", "dy_wavelengths", (1 / 12, 1 / 10, 1 / 8), 200),
    ExperimentPreset("fig5-rate-vs-patches", "surface", "patches", (4, 9, 16, 25, 36, 49, 64, 100), 1000),
    ExperimentPreset("fig6-throughput", "network", "group_size", _KG, 100, "d_t", "k_g", NETWORK_SCALE),
    ExperimentPreset("fig7-energy", "network", "group_size", _KG, 100, "e_c", "k_g", NETWORK_SCALE),
    ExperimentPreset("fig8-efficiency", "network", "group_size", _KG, 100, "e_eff", "k_g", NETWORK_SCALE),
    # mobility is studied for the proposed scheme alone
    ExperimentPreset("fig9-mobility", "network", "v_max", (0.0, 1.0, 2.0, 4.0), 50, "d_t", "v_max",
                     NETWORK_SCALE, ("proposed",)),
)}


def version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def preset_config(preset, config_path=None, overrides=None):
    """Defaults, then the preset's scale, then a config file, then ``k=v`` overrides."""
    cfg = defaults().replace(**preset.overrides)
    if config_path:
        cfg = load_file(config_path, base=cfg)
    if overrides:
        cfg = apply_values(cfg, overrides)
    return cfg


def _fmt(v):
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return "" if v is None else str(v)


def csv_text(rows, columns=None):
    columns = columns or (list(rows[0]) if rows else [])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def _surface(preset, cfg, seeds):
    if preset.name.startswith("fig3"):
        raw = ex.groups_raw(cfg, seeds, [b for b in preset.values if cfg.elements % b == 0])
        cols = ("correlated_rate", "independent_rate")
    elif preset.name.startswith("fig4"):
        raw = ex.spacing_raw(cfg, seeds, preset.values)
        cols = ("rate",)
    else:
        raw = ex.patches_raw(cfg, seeds, preset.values)
        cols = ("optimal", "bits2", "bits4", "random")
    key = preset.param
    figure = ex.column_means(raw, key, cols)
    return {"figure.csv": csv_text(figure, [key, *cols]),
            "raw.csv": csv_text(raw, [key, "seed", *cols]),
            "summary.csv": csv_text(ex.column_summary(raw, key, cols), [key, "column", "mean", "se", "n"])}, False


def _network(preset, cfg, seeds, workers, trace):
    strategies = preset.strategies
    res = ex.network_sweep(cfg, seeds, preset.param, preset.values, strategies, workers, trace)
    raw, traces, qlog = res if trace else (res, None, None)
    summary = ex.summarize(raw, strategies)
    figure = ex.figure_rows(summary, strategies, preset.metric, preset.value_name)
    for r in summary:
        r[preset.value_name] = r.pop("value")
    for r in raw:
        r[preset.value_name] = r.pop("value")
    files = {
        "figure.csv": csv_text(figure, [preset.value_name, *strategies]),
        "raw.csv": csv_text(raw, [preset.value_name, "seed", "strategy", "d_t", "e_c", "e_eff",
                                  "delivered", "requests", "partial"]),
        "summary.csv": csv_text(summary, [preset.value_name, "strategy", "reps"]
                                + [f"{m}_{s}" for m in ("d_t", "e_c", "e_eff") for s in ("mean", "se", "n")]),
    }
    if trace:
        files["routes.ndjson"] = "".join(json.dumps(t, sort_keys=True) + "\n" for t in traces)
        files["queue.ndjson"] = "".join(json.dumps(q, sort_keys=True) + "\n" for q in qlog)
    return files, any(r["partial"] for r in raw)


def run_preset(name, out_root, seed=0, reps=None, workers=1, config_path=None, overrides=None,
               trace=False):
    """Run one preset and write its files; returns ``(directory, partial)``."""
    if name not in PRESETS:
        raise ConfigError([f"preset: unknown preset {name!r}; choose from {', '.join(PRESETS)}"])
    preset = PRESETS[name]
    cfg = preset_config(preset, config_path, overrides)
    reps = preset.reps if reps is None else reps
    if reps < 1:
        raise ConfigError(["reps: must be at least 1"])
    seeds = list(range(seed, seed + reps))
    if preset.kind == "surface":
        files, partial = _surface(preset, cfg, seeds)
    else:
        files, partial = _network(preset, cfg, seeds, workers, trace)
    files["manifest.json"] = json.dumps({
        "preset": name, "version": version(), "seeds": seeds, "swept": preset.param,
        "values": list(preset.values), "config": cfg.as_sections(), "partial": partial,
    }, indent=2, sort_keys=True, default=_fmt) + "\n"
    outdir = os.path.join(out_root, name)
    os.makedirs(outdir, exist_ok=True)
    for fname, text in files.items():
        with open(os.path.join(outdir, fname), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return outdir, partial


def _parser():
    ap = argparse.ArgumentParser(prog="risroute", description="RIS-assisted multihop routing experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a preset sweep")
    run.add_argument("--preset", required=True)
    run.add_argument("--config", help="INI file applied on top of the preset")
    run.add_argument("--seed", type=int, default=0, help="first seed")
    run.add_argument("--reps", type=int, help="number of seeds (preset default otherwise)")
    run.add_argument("--out", default=None, help=f"output root (default ${OUT_ENV} or ./results)")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    run.add_argument("--trace", action="store_true", help="also write route traces and the queue log")
    val = sub.add_parser("validate-config", help="check a config file and print it normalised")
    val.add_argument("file")
    val.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    sub.add_parser("presets", help="list presets")
    return ap


def main(argv=None):
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        if args.command == "presets":
            for p in PRESETS.values():
                print(f"{p.name:24s} {p.kind:8s} sweeps {p.param} over {list(p.values)} ({p.reps} seeds)")
            return EXIT_OK
        if args.command == "validate-config":
            cfg = load_file(args.file)
            if args.override:
                cfg = apply_values(cfg, parse_overrides(args.override))
            sys.stdout.write(to_text(cfg))
            return EXIT_OK
        out = args.out or os.environ.get(OUT_ENV) or "results"
        outdir, partial = run_preset(args.preset, out, args.seed, args.reps, args.workers, args.config,
                                     parse_overrides(args.override), args.trace)
    except ConfigError as exc:
        for msg in exc.problems:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - report any simulation failure as a runtime error
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(outdir)
    if partial:
        print("warning: some replications hit the slot cap", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
