"""Command-line entry points.

Subcommands: validate, cca, awd, segment, segment-grid, sts, run. The
`run` subcommand drives every analysis from a single versioned JSON
configuration, isolates per-(model, layer) failures, and writes
deterministic CSVs plus a JSON summary (and figures) into the output
directory. PROBE_WORKERS bounds parallelism.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__
from .errors import ProbeError
from .featurestore import (
    FeatureStore,
    build_onehot_table,
    load_alignments,
    load_attribute_table,
    sample_word_instances,
)
from .pooling import PoolingSpec, pool_samples
from .cca import cca_protocol
from .awd import awd_run
from .wordseg import (
    DEFAULT_PROMINENCES,
    DEFAULT_TOLERANCE_S,
    DEFAULT_WINDOWS,
    METRICS,
    SegConfig,
    evaluate_layer,
    grid_search_layer,
)
from .sts import load_sts_pairs, sts_run
from .report import fmt, fmt_g, render_layer_figure, write_csv

log = logging.getLogger(__name__)

CONFIG_VERSION = 1
PROPERTY_TO_TABLE = {
    "word_id": "word_id",
    "agwe": "agwe",
    "ptb": "ptb_pos",
    "semcor": "semcor",
}

CCA_HEADER = ["model", "layer", "property", "pool", "mean", "min", "max",
              "val_mean", "val_min", "val_max", "n_samples", "n_dropped"]
AWD_HEADER = ["model", "layer", "mode", "ap", "n_segments", "n_pairs"]
SEG_HEADER = ["model", "layer", "metric", "prominence", "window",
              "precision", "recall", "f1", "rvalue"]
STS_HEADER = ["model", "layer", "spearman", "n_pairs", "n_skipped"]


def _workers() -> int:
    env = os.environ.get("PROBE_WORKERS", "")
    if env.strip():
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def parse_layers(spec, store: FeatureStore) -> list[int]:
    available = store.layers()
    if spec in (None, "all", ["all"]):
        return available
    if isinstance(spec, str):
        wanted = [int(tok) for tok in spec.split(",") if tok.strip()]
    else:
        wanted = [int(v) for v in spec]
    missing = [l for l in wanted if l not in available]
    if missing:
        raise ProbeError(f"layers {missing} not in manifest (has {available})")
    return sorted(wanted)


# ---------------------------------------------------------------------------
# Analysis drivers shared by the standalone subcommands and `run`
# ---------------------------------------------------------------------------


def run_cca_analysis(model, store, spans, params, seed):
    prop = params.get("property", "word_id")
    if prop not in PROPERTY_TO_TABLE:
        raise ProbeError(f"unknown property {prop!r}")
    samples = sample_word_instances(
        spans,
        vocab_size=int(params.get("vocab_size", 500)),
        max_instances=int(params.get("max_instances", 20)),
        duration_range=None,
        seed=seed,
    )
    if prop == "word_id":
        table = build_onehot_table({s.word for s in samples})
    else:
        table_path = params.get("attribute_table")
        if not table_path:
            raise ProbeError(f"property {prop!r} requires an attribute table")
        table = load_attribute_table(table_path, PROPERTY_TO_TABLE[prop])
    pool_spec = PoolingSpec.parse(params.get("pool", "mean"))
    splits = int(params.get("splits", 5))
    layers = parse_layers(params.get("layers"), store)

    def job(layer):
        pooled = pool_samples(samples, store, layer, pool_spec)
        res = cca_protocol(pooled, table, n_splits=splits, seed=seed)
        t_mean, t_min, t_max = res.test_stats
        v_mean, v_min, v_max = res.val_stats
        return [{
            "model": model, "layer": layer, "property": prop,
            "pool": pool_spec.label, "mean": t_mean, "min": t_min, "max": t_max,
            "val_mean": v_mean, "val_min": v_min, "val_max": v_max,
            "n_samples": res.n_samples, "n_dropped": res.n_dropped,
        }]

    return [(layer, job) for layer in layers]


def run_awd_analysis(model, store, spans, params, seed):
    mode = params.get("mode", "pool")
    duration = (float(params.get("min_dur", 0.5)), float(params.get("max_dur", 2.0)))
    samples = sample_word_instances(
        spans,
        vocab_size=int(params.get("vocab_size", 500)),
        max_instances=int(params.get("max_instances", 20)),
        duration_range=duration,
        seed=seed,
    )
    pool_spec = PoolingSpec.parse(params.get("pool", "mean")) if mode == "pool" else None
    layers = parse_layers(params.get("layers"), store)

    def job(layer):
        res = awd_run(samples, store, mode, pooling_spec=pool_spec,
                      duration_range=None, layers=[layer])[0]
        return [{
            "model": model, "layer": layer, "mode": mode, "ap": res.ap,
            "n_segments": res.n_segments, "n_pairs": res.n_pairs,
        }]

    return [(layer, job) for layer in layers]


def run_segment_analysis(model, store, spans, params, seed):
    tolerance = float(params.get("tolerance_s", DEFAULT_TOLERANCE_S))
    layers = parse_layers(params.get("layers"), store)

    per_layer: dict[int, SegConfig] = {}
    best_path = params.get("best_config")
    if best_path:
        # per-layer configurations produced by a previous grid search
        best = json.loads(Path(best_path).read_text(encoding="utf-8"))
        chosen = best.get(model, {})
        if not chosen:
            raise ProbeError(f"best-config file has no entry for model {model!r}")
        for layer in list(layers):
            entry = chosen.get(str(layer))
            if entry is None:
                log.warning("no best config for %s layer %d; skipping", model, layer)
                layers = [l for l in layers if l != layer]
                continue
            per_layer[layer] = SegConfig(entry["metric"], int(entry["window"]),
                                         float(entry["prominence"]))
    else:
        fixed = SegConfig(
            metric=params.get("metric", "euclidean"),
            window=int(params.get("window", 3)),
            prominence=float(params.get("prominence", 0.5)),
        )
        per_layer = {layer: fixed for layer in layers}

    def job(layer):
        config = per_layer[layer]
        score = evaluate_layer(store, spans, layer, config, tolerance_s=tolerance)
        return [{
            "model": model, "layer": layer, "metric": config.metric,
            "prominence": config.prominence, "window": config.window,
            "precision": score.precision, "recall": score.recall,
            "f1": score.f1, "rvalue": score.r_value,
        }]

    return [(layer, job) for layer in layers]


def run_segment_grid_analysis(model, store, spans, params, seed):
    metrics = tuple(params.get("metrics", METRICS))
    windows = tuple(int(w) for w in params.get("windows", DEFAULT_WINDOWS))
    prominences = tuple(float(p) for p in params.get("prominences", DEFAULT_PROMINENCES))
    tolerance = float(params.get("tolerance_s", DEFAULT_TOLERANCE_S))
    layers = parse_layers(params.get("layers"), store)

    def job(layer):
        best, cells = grid_search_layer(
            store, spans, layer, metrics=metrics, windows=windows,
            prominences=prominences, tolerance_s=tolerance,
        )
        rows = []
        for cell in cells:
            rows.append({
                "model": model, "layer": layer, "metric": cell.config.metric,
                "prominence": cell.config.prominence, "window": cell.config.window,
                "precision": cell.score.precision, "recall": cell.score.recall,
                "f1": cell.score.f1, "rvalue": cell.score.r_value,
                "best": cell is best,
            })
        return rows

    return [(layer, job) for layer in layers]


def _sts_rows(rows):
    return [{
        "model": r.stream, "layer": r.layer, "spearman": r.rho,
        "n_pairs": r.n_pairs, "n_skipped": r.n_skipped,
    } for r in rows]


def run_sts_analysis(model, store, params, seed):
    """Per-model sentence-similarity job; baselines run separately."""
    pairs = load_sts_pairs(params["gold"])
    layers = parse_layers(params.get("layers"), store)

    def job(_key):
        return _sts_rows(sts_run(pairs, {model: (store, layers)}, text_baseline=False))

    return [(model, job)]


def run_sts_baselines(params, seed):
    """One job for the model-independent fbank and text-overlap baselines."""
    pairs = load_sts_pairs(params["gold"])
    baselines = params.get("baselines", [])
    streams = {}
    if "fbank" in baselines:
        fb_path = params.get("fbank_manifest")
        if not fb_path:
            raise ProbeError("fbank baseline requires fbank_manifest")
        fb_store = FeatureStore(fb_path)
        streams["fbank"] = (fb_store, fb_store.layers())

    def job(_key):
        return _sts_rows(sts_run(pairs, streams, text_baseline="text" in baselines))

    if not streams and "text" not in baselines:
        return []
    return [("baselines", job)]


# ---------------------------------------------------------------------------
# CSV serialization
# ---------------------------------------------------------------------------


def _cca_csv_rows(rows):
    rows = sorted(rows, key=lambda r: (r["model"], r["layer"], r["property"], r["pool"]))
    return [[r["model"], str(r["layer"]), r["property"], r["pool"],
             fmt(r["mean"]), fmt(r["min"]), fmt(r["max"]),
             fmt(r["val_mean"]), fmt(r["val_min"]), fmt(r["val_max"]),
             str(r["n_samples"]), str(r["n_dropped"])] for r in rows]


def _awd_csv_rows(rows):
    rows = sorted(rows, key=lambda r: (r["model"], r["layer"], r["mode"]))
    return [[r["model"], str(r["layer"]), r["mode"], fmt(r["ap"]),
             str(r["n_segments"]), str(r["n_pairs"])] for r in rows]


def _segment_csv_rows(rows):
    rows = sorted(rows, key=lambda r: (r["model"], r["layer"], r["metric"],
                                       r["window"], r["prominence"]))
    return [[r["model"], str(r["layer"]), r["metric"], fmt_g(r["prominence"]),
             str(r["window"]), fmt(r["precision"], 4), fmt(r["recall"], 4),
             fmt(r["f1"], 4), fmt(r["rvalue"], 4)] for r in rows]


def _sts_csv_rows(rows):
    rows = sorted(rows, key=lambda r: (r["model"], r["layer"]))
    return [[r["model"], str(r["layer"]), fmt(r["spearman"]),
             str(r["n_pairs"]), str(r["n_skipped"])] for r in rows]


_ANALYSES = {
    "cca": (CCA_HEADER, _cca_csv_rows, "mean", "test PWCCA"),
    "awd": (AWD_HEADER, _awd_csv_rows, "ap", "average precision"),
    "segment": (SEG_HEADER, _segment_csv_rows, "f1", "boundary F1 (%)"),
    "segment_grid": (SEG_HEADER + ["best"], None, "f1", "boundary F1 (%)"),
    "sts": (STS_HEADER, _sts_csv_rows, "spearman", "Spearman rho"),
}


def _segment_grid_csv_rows(rows):
    rows = sorted(rows, key=lambda r: (r["model"], r["layer"], r["metric"],
                                       r["window"], r["prominence"]))
    return [[r["model"], str(r["layer"]), r["metric"], fmt_g(r["prominence"]),
             str(r["window"]), fmt(r["precision"], 4), fmt(r["recall"], 4),
             fmt(r["f1"], 4), fmt(r["rvalue"], 4), str(int(r["best"]))] for r in rows]


def write_analysis_outputs(name, rows, out_dir, figures=True):
    """Write one analysis as CSV and JSON rows (sorted, fixed format) plus
    its layer-curve figure."""
    out_dir = Path(out_dir)
    header, to_csv, y_field, ylabel = _ANALYSES[name]
    if name == "segment_grid":
        csv_rows = _segment_grid_csv_rows(rows)
    else:
        csv_rows = to_csv(rows)
    csv_path = out_dir / f"{name}.csv"
    write_csv(csv_path, header, csv_rows)
    json_rows = [dict(zip(header, row)) for row in csv_rows]
    (out_dir / f"{name}.json").write_text(
        json.dumps(json_rows, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    if name == "segment_grid":
        best = {}
        for r in rows:
            if r["best"]:
                best.setdefault(r["model"], {})[str(r["layer"])] = {
                    "metric": r["metric"], "window": r["window"],
                    "prominence": r["prominence"], "f1": round(r["f1"], 4),
                }
        best_path = out_dir / "segment_best.json"
        best_path.write_text(
            json.dumps(best, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    if figures:
        fig_rows = rows
        if name == "segment_grid":
            fig_rows = [r for r in rows if r["best"]]
        plottable = [r for r in fig_rows if isinstance(r.get("layer"), int) and r["layer"] >= 0]
        if plottable:
            render_layer_figure(
                out_dir / "figures" / f"{name}_{y_field}.png",
                plottable, y_field=y_field, ylabel=ylabel,
                title=f"{name}: {ylabel} by layer",
            )
    return csv_path


# ---------------------------------------------------------------------------
# Config handling, validation, run
# ---------------------------------------------------------------------------


def load_config(path) -> dict:
    cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    base = Path(path).resolve().parent
    return resolve_config_paths(cfg, base)


def resolve_config_paths(cfg: dict, base: Path) -> dict:
    """Make every path in the config absolute, relative to the config file."""

    def resolve(p):
        p = Path(p)
        return str(p if p.is_absolute() else base / p)

    cfg = json.loads(json.dumps(cfg))  # deep copy
    for model_cfg in cfg.get("models", {}).values():
        if "manifest" in model_cfg:
            model_cfg["manifest"] = resolve(model_cfg["manifest"])
    if "alignments" in cfg:
        cfg["alignments"] = resolve(cfg["alignments"])
    analyses = cfg.get("analyses", {})
    for key, pathkey in (("cca", "attribute_table"), ("sts", "gold"),
                         ("sts", "fbank_manifest"), ("segment", "best_config")):
        params = analyses.get(key)
        if params and params.get(pathkey):
            params[pathkey] = resolve(params[pathkey])
    return cfg


def config_hash(cfg: dict) -> str:
    """Hash of the semantically meaningful configuration fields."""
    significant = {k: v for k, v in cfg.items() if k != "output_dir"}
    blob = json.dumps(significant, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def validate_config(cfg: dict) -> list[str]:
    """Diagnostics for an already path-resolved configuration."""
    diags = []
    if cfg.get("version", CONFIG_VERSION) != CONFIG_VERSION:
        diags.append(f"unsupported config version {cfg.get('version')}")
    models = cfg.get("models", {})
    if not models:
        diags.append("no models configured")
    analyses = cfg.get("analyses", {})
    if not analyses:
        diags.append("no analyses selected")
    for name in analyses:
        if name not in _ANALYSES:
            diags.append(f"unknown analysis {name!r}")

    stores = {}
    for model, model_cfg in models.items():
        manifest = model_cfg.get("manifest")
        if not manifest:
            diags.append(f"model {model!r}: no manifest configured")
            continue
        if not Path(manifest).is_file():
            diags.append(f"model {model!r}: manifest not readable: {manifest}")
            continue
        try:
            store = FeatureStore(manifest)
        except ProbeError as exc:
            diags.append(f"model {model!r}: {exc}")
            continue
        stores[model] = store
        layer_spec = model_cfg.get("layers")
        if layer_spec not in (None, "all"):
            available = store.layers()
            for layer in layer_spec:
                if int(layer) not in available:
                    diags.append(
                        f"model {model!r}: layer {layer} outside manifest range {available}"
                    )

    needs_alignments = any(k in analyses for k in ("cca", "awd", "segment", "segment_grid"))
    if needs_alignments:
        alignments = cfg.get("alignments")
        if not alignments:
            diags.append("word-level analyses selected but no alignments configured")
        elif not Path(alignments).is_file():
            diags.append(f"alignments not readable: {alignments}")

    cca_params = analyses.get("cca") or {}
    prop = cca_params.get("property", "word_id")
    if prop not in PROPERTY_TO_TABLE:
        diags.append(f"cca: unknown property {prop!r}")
    elif prop != "word_id":
        table = cca_params.get("attribute_table")
        if not table:
            diags.append(f"cca: property {prop!r} requires attribute_table")
        elif not Path(table).is_file():
            diags.append(f"cca: attribute table not readable: {table}")

    seg_params = analyses.get("segment") or {}
    best = seg_params.get("best_config")
    if best and not Path(best).is_file():
        diags.append(f"segment: best-config file not readable: {best}")

    sts_params = analyses.get("sts")
    if sts_params is not None:
        gold = sts_params.get("gold")
        if not gold:
            diags.append("sts: no gold file configured")
        elif not Path(gold).is_file():
            diags.append(f"sts: gold file not readable: {gold}")
        if "fbank" in sts_params.get("baselines", []):
            fb = sts_params.get("fbank_manifest")
            if not fb:
                diags.append("sts: fbank baseline requires fbank_manifest")
            elif not Path(fb).is_file():
                diags.append(f"sts: fbank manifest not readable: {fb}")
    return diags


def run_config(cfg: dict, output_dir, figures: bool = True) -> int:
    """Execute every configured analysis; returns the process exit code."""
    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = int(cfg.get("seed", 0))
    analyses = cfg.get("analyses", {})
    models = cfg.get("models", {})

    spans = None
    if any(k in analyses for k in ("cca", "awd", "segment", "segment_grid")):
        spans = load_alignments(cfg["alignments"])

    summary = {
        "toolkit_version": __version__,
        "config_version": cfg.get("version", CONFIG_VERSION),
        "config_hash": config_hash(cfg),
        "analyses": {},
        "failures": [],
    }

    all_rows: dict[str, list[dict]] = {name: [] for name in analyses if name in _ANALYSES}
    jobs = []  # (analysis, model, key, callable)
    for name, params in analyses.items():
        if name not in _ANALYSES:
            continue
        base_params = dict(params or {})
        for model, model_cfg in sorted(models.items()):
            try:
                store = FeatureStore(model_cfg["manifest"])
                mparams = dict(base_params)
                if model_cfg.get("layers") not in (None, "all"):
                    mparams["layers"] = model_cfg["layers"]
                if name == "cca":
                    pending = run_cca_analysis(model, store, spans, mparams, seed)
                elif name == "awd":
                    pending = run_awd_analysis(model, store, spans, mparams, seed)
                elif name == "segment":
                    pending = run_segment_analysis(model, store, spans, mparams, seed)
                elif name == "segment_grid":
                    pending = run_segment_grid_analysis(model, store, spans, mparams, seed)
                else:
                    pending = run_sts_analysis(model, store, mparams, seed)
            except Exception as exc:  # per-model isolation
                log.error("%s/%s failed to start: %s", name, model, exc)
                summary["failures"].append(
                    {"analysis": name, "model": model, "key": "setup", "error": str(exc)}
                )
                continue
            jobs.extend((name, model, key, job) for key, job in pending)
        if name == "sts":
            try:
                jobs.extend(("sts", "baselines", key, job)
                            for key, job in run_sts_baselines(base_params, seed))
            except Exception as exc:
                log.error("sts baselines failed to start: %s", exc)
                summary["failures"].append(
                    {"analysis": "sts", "model": "baselines", "key": "setup",
                     "error": str(exc)}
                )

    started = time.monotonic()
    timings: dict[str, float] = {name: 0.0 for name in all_rows}

    def execute(entry):
        name, model, key, job = entry
        t0 = time.monotonic()
        rows = job(key)
        return name, model, key, rows, time.monotonic() - t0

    with concurrent.futures.ThreadPoolExecutor(max_workers=_workers()) as pool:
        futures = {pool.submit(execute, entry): entry for entry in jobs}
        for future in concurrent.futures.as_completed(futures):
            name, model, key, _job = futures[future]
            try:
                name, model, key, rows, elapsed = future.result()
            except Exception as exc:  # per-layer isolation
                log.error("%s/%s layer %s failed: %s", name, model, key, exc)
                summary["failures"].append(
                    {"analysis": name, "model": model, "key": str(key), "error": str(exc)}
                )
                continue
            all_rows[name].extend(rows)
            timings[name] += elapsed

    exit_code = 0
    for name in sorted(all_rows):
        rows = all_rows[name]
        summary["analyses"][name] = {
            "rows": len(rows),
            "seconds": round(timings[name], 3),
        }
        if not rows:
            log.error("analysis %s produced no output", name)
            exit_code = 1
            continue
        csv_path = write_analysis_outputs(name, rows, out_dir, figures=figures)
        summary["analyses"][name]["csv"] = csv_path.name
    summary["wall_seconds"] = round(time.monotonic() - started, 3)

    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return exit_code


# ---------------------------------------------------------------------------
# argparse wiring
# ---------------------------------------------------------------------------


def _add_common(sub, alignments=True):
    sub.add_argument("--manifest", required=True, help="feature manifest (JSON lines)")
    sub.add_argument("--model-name", default="model", help="model label in reports")
    if alignments:
        sub.add_argument("--alignments", required=True, help="word alignment CSV")
    sub.add_argument("--layers", default="all", help="comma-separated layers or 'all'")
    sub.add_argument("--out", default="probe_out", help="output directory")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--no-figures", action="store_true", help="skip PNG rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="probe",
        description="Layer-wise word and sentence analyses over speech-model features",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a run configuration without running")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="run all configured analyses")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="override the config output_dir")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("cca", help="PWCCA against an attribute-vector family")
    _add_common(p)
    p.add_argument("--property", required=True, choices=sorted(PROPERTY_TO_TABLE))
    p.add_argument("--attribute-table", default=None, help="TSV for agwe/ptb/semcor")
    p.add_argument("--pool", default="mean", help="mean | q1..q4 | f0..f4")
    p.add_argument("--splits", type=int, default=5)
    p.add_argument("--vocab-size", type=int, default=500)
    p.add_argument("--max-instances", type=int, default=20)
    p.set_defaults(func=cmd_cca)

    p = sub.add_parser("awd", help="acoustic word discrimination")
    _add_common(p)
    p.add_argument("--mode", default="pool", choices=["pool", "dtw"])
    p.add_argument("--pool", default="mean")
    p.add_argument("--min-dur", type=float, default=0.5)
    p.add_argument("--max-dur", type=float, default=2.0)
    p.add_argument("--vocab-size", type=int, default=500)
    p.add_argument("--max-instances", type=int, default=20)
    p.set_defaults(func=cmd_awd)

    p = sub.add_parser("segment", help="word segmentation with one configuration")
    _add_common(p)
    p.add_argument("--metric", default="euclidean", choices=list(METRICS))
    p.add_argument("--prominence", type=float, default=0.5)
    p.add_argument("--window", type=int, default=3)
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE_S)
    p.add_argument("--best-config", default=None,
                   help="per-layer configs from segment-grid (segment_best.json); "
                        "overrides --metric/--prominence/--window")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("segment-grid", help="grid search segmentation parameters")
    p.add_argument("--dev-manifest", required=True, help="feature manifest of the dev subset")
    p.add_argument("--model-name", default="model")
    p.add_argument("--alignments", required=True)
    p.add_argument("--layers", default="all")
    p.add_argument("--out", default="probe_out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--metrics", default=",".join(METRICS))
    p.add_argument("--windows", default=",".join(str(w) for w in DEFAULT_WINDOWS))
    p.add_argument("--prominences", default=None,
                   help="comma-separated thresholds (default: 16 log-spaced in [0.05, 4])")
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE_S)
    p.set_defaults(func=cmd_segment_grid)

    p = sub.add_parser("sts", help="spoken sentence similarity")
    _add_common(p, alignments=False)
    p.add_argument("--gold", required=True, help="gold pair TSV")
    p.add_argument("--baselines", default="", help="comma list from: fbank,text")
    p.add_argument("--fbank-manifest", default=None)
    p.set_defaults(func=cmd_sts)
    return parser


def _single_model_run(args, analysis, params):
    """Shared driver for the standalone analysis subcommands."""
    cfg = {
        "version": CONFIG_VERSION,
        "seed": args.seed,
        "models": {args.model_name: {"manifest": args.manifest, "layers": "all"}},
        "analyses": {analysis: params},
    }
    if getattr(args, "alignments", None):
        cfg["alignments"] = args.alignments
    return run_config(cfg, args.out, figures=not args.no_figures)


def cmd_cca(args):
    return _single_model_run(args, "cca", {
        "property": args.property, "attribute_table": args.attribute_table,
        "pool": args.pool, "splits": args.splits, "vocab_size": args.vocab_size,
        "max_instances": args.max_instances, "layers": args.layers,
    })


def cmd_awd(args):
    return _single_model_run(args, "awd", {
        "mode": args.mode, "pool": args.pool, "min_dur": args.min_dur,
        "max_dur": args.max_dur, "vocab_size": args.vocab_size,
        "max_instances": args.max_instances, "layers": args.layers,
    })


def cmd_segment(args):
    return _single_model_run(args, "segment", {
        "metric": args.metric, "prominence": args.prominence,
        "window": args.window, "tolerance_s": args.tolerance,
        "layers": args.layers, "best_config": args.best_config,
    })


def cmd_segment_grid(args):
    params = {
        "metrics": [m for m in args.metrics.split(",") if m],
        "windows": [int(w) for w in args.windows.split(",") if w],
        "tolerance_s": args.tolerance,
        "layers": args.layers,
    }
    if args.prominences:
        params["prominences"] = [float(p) for p in args.prominences.split(",") if p]
    args.manifest = args.dev_manifest
    return _single_model_run(args, "segment_grid", params)


def cmd_sts(args):
    return _single_model_run(args, "sts", {
        "gold": args.gold,
        "baselines": [b for b in args.baselines.split(",") if b],
        "fbank_manifest": args.fbank_manifest,
        "layers": args.layers,
    })


def cmd_validate(args):
    cfg = load_config(args.config)
    diags = validate_config(cfg)
    for d in diags:
        print(d)
    if not diags:
        print("configuration OK")
        return 0
    return 2


def cmd_run(args):
    cfg = load_config(args.config)
    diags = validate_config(cfg)
    if diags:
        for d in diags:
            print(d, file=sys.stderr)
        return 2
    out_dir = args.out or cfg.get("output_dir", "probe_out")
    return run_config(cfg, out_dir, figures=not args.no_figures)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ProbeError as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
