"""Command line entry points.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 numeric
failure. Every run that writes result files also writes a ``*.manifest.json``
next to them (resolved config, input digests, seed, version, timestamp, and
the produced files); JSON results carry the manifest name. Flag values beat
config-file fields, which beat built-in defaults. Log verbosity comes from
the MDDA_LOG_LEVEL environment variable only.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    DomainPair,
    FeatureMatrix,
    ShiftSpec,
    load_features,
    make_shift_dataset,
    write_features,
)
from .divergence import estimate_mu, mu_schedule
from .exceptions import ConfigError, DataError, NumericError
from .kernel import KernelSpec
from .manifold import gfk, l2_normalize_rows, pca_basis
from .pipeline import MddaConfig, evaluate, fit
from .srm import load_model, predict_raw, save_model

CONFIG_KEYS = {
    "d", "iterations", "lambda", "lam", "eta", "rho", "p",
    "kernel", "bandwidth", "mu", "seed", "use_manifold", "label_column",
}
SHIFT_KEYS = {"kind", "classes", "n_per_class", "magnitude", "seed", "dim", "separation", "noise"}


def _parse_mu(text: str, seed: int):
    if text == "estimate":
        return mu_schedule("estimate")
    if text == "grid":
        return mu_schedule("grid")
    if text.startswith("fixed:"):
        try:
            value = float(text.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"cannot parse fixed mu value from {text!r}") from None
        return mu_schedule("fixed", value=value)
    if text.startswith("random:"):
        try:
            draws = int(text.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"cannot parse random draw count from {text!r}") from None
        return mu_schedule("random", draws=draws, seed=seed)
    raise ConfigError(
        f"unknown mu strategy {text!r}; expected fixed:V, estimate, grid, or random:T"
    )


def _load_config_file(path: Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    unknown = sorted(set(raw) - CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"{path}: unknown config field(s): {', '.join(unknown)}")
    if "lambda" in raw:
        raw["lam"] = raw.pop("lambda")
    return raw


def _resolve_config(args) -> tuple[MddaConfig, str]:
    """Merge defaults, config file, and flags into (MddaConfig, label column)."""
    merged: dict = {}
    if args.config is not None:
        merged.update(_load_config_file(args.config))
    label_column = merged.pop("label_column", "label")
    if getattr(args, "label_column", None) is not None:
        label_column = args.label_column
    for name in ("seed", "d", "iterations", "lam", "eta", "rho", "p"):
        value = getattr(args, name, None)
        if value is not None:
            merged[name] = value
    if getattr(args, "kernel", None) is not None:
        merged["kernel"] = args.kernel
    if getattr(args, "bandwidth", None) is not None:
        merged["bandwidth"] = args.bandwidth
    if getattr(args, "mu", None) is not None:
        merged["mu"] = args.mu
    if getattr(args, "use_manifold", None) is not None:
        merged["use_manifold"] = args.use_manifold

    if "d" not in merged:
        raise ConfigError("subspace dimension d is required (--d or config field)")
    try:
        seed = int(merged.get("seed", 0))
        kernel = KernelSpec(str(merged.get("kernel", "rbf")), merged.get("bandwidth"))
        mu_text = merged.get("mu", "estimate")
        mu = _parse_mu(mu_text, seed) if isinstance(mu_text, str) else mu_text
        cfg = MddaConfig(
            d=int(merged["d"]),
            iterations=int(merged.get("iterations", 10)),
            lam=float(merged.get("lam", 4.5)),
            eta=float(merged.get("eta", 0.1)),
            rho=float(merged.get("rho", 1.0)),
            p=int(merged.get("p", 10)),
            kernel=kernel,
            mu=mu,
            seed=seed,
            use_manifold=bool(merged.get("use_manifold", True)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid configuration: {exc}") from exc
    return cfg, label_column


def _config_dict(cfg: MddaConfig) -> dict:
    body = dataclasses.asdict(cfg)
    body["kernel"] = {"kind": cfg.kernel.kind, "bandwidth": cfg.kernel.bandwidth}
    body["mu"] = repr(cfg.mu)
    return body


def _digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _manifest_path(anchor: Path) -> Path:
    return anchor.parent / (anchor.stem + ".manifest.json")


def _write_manifest(
    anchor: Path, command: str, config: dict, inputs: list[Path], seed: int | None,
    outputs: list[Path],
) -> str:
    path = _manifest_path(anchor)
    body = {
        "command": command,
        "config": config,
        "inputs": {str(p): _digest(p) for p in inputs},
        "seed": seed,
        "version": __version__,
        "created": datetime.now(timezone.utc).isoformat(),
        "outputs": [str(p) for p in outputs],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path.name


def _maybe_labeled(path: Path, label_column: str) -> FeatureMatrix:
    """Load with labels when the file's header carries the label column."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            first = next(csv.reader(fh), None)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if first is not None and label_column in first:
        return load_features(path, label_column)
    return load_features(path)


def _align_target(target: FeatureMatrix, source_names: tuple[str, ...] | None) -> FeatureMatrix:
    """Re-encode target labels under the source token order."""
    if target.labels is None or source_names is None:
        return target
    if target.label_names == source_names:
        return target
    mapping = {name: idx + 1 for idx, name in enumerate(source_names)}
    assert target.label_names is not None
    tokens = [target.label_names[lab - 1] for lab in target.labels]
    unknown = sorted({t for t in tokens if t not in mapping})
    if unknown:
        raise DataError(f"target label token(s) absent from source: {', '.join(unknown)}")
    labels = np.array([mapping[t] for t in tokens], dtype=np.int64)
    return FeatureMatrix(target.values, labels, source_names)


def _load_pair(source: Path, target: Path, label_column: str, target_labels: str) -> DomainPair:
    src = load_features(source, label_column)
    if target_labels == "require":
        tgt = load_features(target, label_column)
    elif target_labels == "maybe":
        tgt = _maybe_labeled(target, label_column)
    else:
        tgt = load_features(target)
    return DomainPair(src, _align_target(tgt, src.label_names))


def _cmd_fit(args) -> int:
    cfg, label_column = _resolve_config(args)
    pair = _load_pair(args.source, args.target, label_column, "maybe")
    model, report = fit(pair, cfg)
    out_model = args.out
    out_report = (
        args.report
        if args.report is not None
        else out_model.parent / (out_model.stem + ".report.jsonl")
    )
    manifest_name = _manifest_path(out_model).name
    save_model(model, out_model)
    with open(out_report, "w", encoding="utf-8") as fh:
        for record in report.records:
            body = record.as_json_record()
            body["manifest"] = manifest_name
            fh.write(json.dumps(body) + "\n")
    _write_manifest(
        out_model, "fit", _config_dict(cfg), [args.source, args.target], cfg.seed,
        [out_model, out_report],
    )
    print(f"fitted model -> {out_model} (final mu {model.mu_final:.4f})")
    return 0


def _cmd_predict(args) -> int:
    model = load_model(args.model)
    features = load_features(args.features)
    labels = predict_raw(model, features)
    tokens = (
        [model.label_names[lab - 1] for lab in labels]
        if model.label_names
        else [str(int(lab)) for lab in labels]
    )
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label"])
        for token in tokens:
            writer.writerow([token])
    _write_manifest(args.out, "predict", {}, [args.model, args.features], None, [args.out])
    print(f"wrote {len(tokens)} predictions -> {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    cfg, label_column = _resolve_config(args)
    pair = _load_pair(args.source, args.target, label_column, "require")
    result = evaluate(pair, cfg)
    manifest_name = _manifest_path(args.out).name
    out_csv = args.out.parent / (args.out.stem + ".csv")

    body = {
        "accuracy": result.accuracy,
        "mu_final": result.mu_final,
        "per_iteration": (
            [r.as_json_record() for r in result.report.records] if result.report else None
        ),
        "per_mu": (
            [
                {"mu": value, "accuracy": report.final_accuracy}
                for value, report in result.per_mu
            ]
            if result.per_mu
            else None
        ),
        "manifest": manifest_name,
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(body, fh, indent=2)
        fh.write("\n")

    with open(out_csv, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "mu", "accuracy"])
        if result.report is not None:
            for r in result.report.records:
                writer.writerow([r.iteration, repr(r.mu), repr(r.accuracy)])
        else:
            assert result.per_mu is not None
            for value, report in result.per_mu:
                writer.writerow(
                    [report.records[-1].iteration, repr(value), repr(report.final_accuracy)]
                )

    _write_manifest(
        args.out, "evaluate", _config_dict(cfg), [args.source, args.target], cfg.seed,
        [args.out, out_csv],
    )
    print(f"accuracy {result.accuracy:.4f} -> {args.out}")
    return 0


def _cmd_estimate_mu(args) -> int:
    src = load_features(args.source, args.label_column)
    target_column = args.target_label_column or args.label_column
    tgt = _align_target(load_features(args.target, target_column), src.label_names)
    est = estimate_mu(
        src, tgt, tgt.require_labels(), args.seed, args.rounds,
        class_count=len(src.label_names) if src.label_names else None,
    )
    body = {
        "mu": est.mu,
        "d_marginal": est.d_marginal,
        "d_conditional": list(est.d_conditional),
        "rounds": est.rounds,
        "skipped_classes": list(est.skipped_classes),
    }
    if args.out is not None:
        body["manifest"] = _manifest_path(args.out).name
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(body, fh, indent=2)
            fh.write("\n")
        _write_manifest(
            args.out, "estimate-mu", {"rounds": args.rounds}, [args.source, args.target],
            args.seed, [args.out],
        )
    print(json.dumps(body, indent=2))
    return 0


def _cmd_gfk_transform(args) -> int:
    src = _maybe_labeled(args.source, args.label_column or "label")
    tgt = _maybe_labeled(args.target, args.label_column or "label")
    if src.dim != tgt.dim:
        raise DataError(f"source and target dimensions differ: {src.dim} vs {tgt.dim}")
    xs = l2_normalize_rows(src.values)
    xt = l2_normalize_rows(tgt.values)
    geo = gfk(pca_basis(xs, args.d), pca_basis(xt, args.d))
    prefix = args.out
    out_source = prefix.parent / (prefix.name + "_source.csv")
    out_target = prefix.parent / (prefix.name + "_target.csv")
    write_features(FeatureMatrix(xs @ geo.sqrt_kernel, src.labels, src.label_names), out_source)
    write_features(FeatureMatrix(xt @ geo.sqrt_kernel, tgt.labels, tgt.label_names), out_target)
    outputs = [out_source, out_target]
    if args.dump_kernel:
        out_g = prefix.parent / (prefix.name + "_G.csv")
        out_sqrt = prefix.parent / (prefix.name + "_sqrtG.csv")
        write_features(FeatureMatrix(geo.kernel), out_g)
        write_features(FeatureMatrix(geo.sqrt_kernel), out_sqrt)
        outputs += [out_g, out_sqrt]
    _write_manifest(
        prefix, "gfk-transform", {"d": args.d}, [args.source, args.target], None, outputs
    )
    print(f"wrote {', '.join(str(p) for p in outputs)}")
    return 0


def _cmd_synth(args) -> int:
    try:
        with open(args.spec, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read spec {args.spec}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.spec}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{args.spec}: spec must be a JSON object")
    unknown = sorted(set(raw) - SHIFT_KEYS)
    if unknown:
        raise ConfigError(f"{args.spec}: unknown spec field(s): {', '.join(unknown)}")
    try:
        spec = ShiftSpec(**raw)
    except TypeError as exc:
        raise ConfigError(f"{args.spec}: {exc}") from exc
    pair = make_shift_dataset(spec)
    write_features(pair.source, args.out_source)
    write_features(pair.target, args.out_target)
    _write_manifest(
        args.out_source, "synth", dataclasses.asdict(spec), [args.spec], spec.seed,
        [args.out_source, args.out_target],
    )
    print(f"wrote {args.out_source} and {args.out_target}")
    return 0


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--mu", default=None, help="fixed:V | estimate | grid | random:T")
    parser.add_argument("--d", type=int, default=None, help="subspace dimension")
    parser.add_argument("--lambda", dest="lam", type=float, default=None,
                        help="distribution alignment weight")
    parser.add_argument("--eta", type=float, default=None, help="ridge weight")
    parser.add_argument("--rho", type=float, default=None, help="graph Laplacian weight")
    parser.add_argument("--p", type=int, default=None, help="graph neighbors")
    parser.add_argument("--kernel", choices=("rbf", "linear"), default=None)
    parser.add_argument("--bandwidth", type=float, default=None, help="rbf variance")
    parser.add_argument("--iterations", type=int, default=None)
    parser.add_argument("--no-manifold", dest="use_manifold", action="store_const",
                        const=False, default=None, help="skip the geodesic feature step")
    parser.add_argument("--label-column", default=None, help="label column name (default: label)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mdda",
        description="Manifold dynamic distribution adaptation for unsupervised domain transfer",
    )
    parser.add_argument("--version", action="version", version=f"mdda {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit an adapted classifier")
    p_fit.add_argument("source", type=Path)
    p_fit.add_argument("target", type=Path)
    p_fit.add_argument("--out", type=Path, required=True, help="model bundle path")
    p_fit.add_argument("--report", type=Path, default=None,
                       help="iteration report JSONL (default: <out>.report.jsonl)")
    _add_config_flags(p_fit)
    p_fit.set_defaults(func=_cmd_fit)

    p_pred = sub.add_parser("predict", help="score a feature file with a saved model")
    p_pred.add_argument("model", type=Path)
    p_pred.add_argument("features", type=Path)
    p_pred.add_argument("--out", type=Path, required=True, help="predictions CSV")
    p_pred.set_defaults(func=_cmd_predict)

    p_eval = sub.add_parser("evaluate", help="fit and score against labeled targets")
    p_eval.add_argument("source", type=Path)
    p_eval.add_argument("target", type=Path)
    p_eval.add_argument("--out", type=Path, required=True, help="metrics JSON")
    _add_config_flags(p_eval)
    p_eval.set_defaults(func=_cmd_evaluate)

    p_mu = sub.add_parser("estimate-mu", help="adaptive factor between two labeled files")
    p_mu.add_argument("source", type=Path)
    p_mu.add_argument("target", type=Path)
    p_mu.add_argument("--label-column", default="label")
    p_mu.add_argument("--target-label-column", default=None,
                      help="target (pseudo-)label column, defaults to --label-column")
    p_mu.add_argument("--seed", type=int, default=0)
    p_mu.add_argument("--rounds", type=int, default=5)
    p_mu.add_argument("--out", type=Path, default=None, help="also write the JSON here")
    p_mu.set_defaults(func=_cmd_estimate_mu)

    p_gfk = sub.add_parser("gfk-transform", help="map both domains through the geodesic kernel")
    p_gfk.add_argument("source", type=Path)
    p_gfk.add_argument("target", type=Path)
    p_gfk.add_argument("--d", type=int, required=True)
    p_gfk.add_argument("--out", type=Path, required=True, help="output path prefix")
    p_gfk.add_argument("--label-column", default=None)
    p_gfk.add_argument("--dump-kernel", action="store_true",
                       help="also write G and sqrt(G) as CSV")
    p_gfk.set_defaults(func=_cmd_gfk_transform)

    p_synth = sub.add_parser("synth", help="generate a synthetic shifted-domain pair")
    p_synth.add_argument("spec", type=Path, help="shift spec JSON")
    p_synth.add_argument("out_source", type=Path)
    p_synth.add_argument("out_target", type=Path)
    p_synth.set_defaults(func=_cmd_synth)

    return parser


def main(argv=None) -> int:
    level = os.environ.get("MDDA_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; those are config errors here
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
