"""Command line interface.

Subcommands: synthesize, mask, featurize, vad, train, detect, evaluate,
discriminate, trials. Every subcommand accepts --config (key=value file
whose keys match the long flag names; explicit flags win), --seed, --jobs,
and --out. Exit codes: 0 success, 1 validation error, 2 I/O error.
Output files are written atomically and the run manifest last.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .audio import read_wav, write_wav
from .backend import (EmbeddingSet, build_trials, cosine_distance, eer,
                      import_embeddings, load_lda, load_plda, load_wccn,
                      plda_score_many, save_lda, save_plda, save_wccn,
                      train_lda, train_plda, train_wccn)
from .corpus import (load_annotations, load_manifest, save_annotations,
                     save_manifest, stitch_code_switched, apply_gaussian_mask)
from .detect import (ChangePointSet, DetectorConfig, ModelBundle,
                     detect_changes_from_features)
from .errors import SwitchDetError
from .evaluate import (EvalConfig, EvalReport, discrimination_study,
                       evaluate_corpus, segment_duration_stats)
from .features import (FEATURE_KINDS, extract_features, load_features,
                       save_features)
from .gaussian import (DiagGmm, load_gmm, map_adapt_means, occupancy_vector,
                       class_occupancy_vector, save_gmm, train_gmm_em)
from .seeding import derive_rng
from .vad import (DEFAULT_RATIO, energy_vad, save_vad, select_voiced,
                  select_voiced_from_mask)

log = logging.getLogger("switchdet")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


class CliParser(argparse.ArgumentParser):
    # argparse defaults to exit code 2 on bad usage; we keep 2 for I/O errors
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def _atomic_write_text(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _config_hash(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _write_run_manifest(out_dir: Path, command: str, args: argparse.Namespace,
                        extra: dict | None = None) -> None:
    payload = {k: v for k, v in sorted(vars(args).items())
               if k not in ("func",) and not k.startswith("_")}
    for k, v in payload.items():
        if isinstance(v, Path):
            payload[k] = str(v)
    doc = {"tool": "switchdet", "version": __version__, "command": command,
           "config": payload, "config_hash": _config_hash(payload)}
    if extra:
        doc.update(extra)
    _atomic_write_text(out_dir / "run.json", json.dumps(doc, sort_keys=True,
                                                        indent=2) + "\n")


def _parse_config_file(path: Path) -> dict:
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    values = {}
    for ln, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{ln}: expected key=value, got {line!r}")
        key, _, val = line.partition("=")
        values[key.strip().replace("-", "_")] = val.strip()
    return values


def _coerce_config(sub: argparse.ArgumentParser, raw: dict) -> dict:
    by_dest = {}
    for action in sub._actions:
        by_dest[action.dest] = action
    typed = {}
    for key, val in raw.items():
        if key not in by_dest:
            raise ValueError(f"unknown config key {key!r} for this subcommand")
        action = by_dest[key]
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)) \
                or isinstance(action.const, bool):
            typed[key] = val.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            typed[key] = action.type(val)
        else:
            typed[key] = val
    return typed


def _add_common(sub: argparse.ArgumentParser, out_required: bool = True):
    sub.add_argument("--config", type=Path, help="key=value config file; flags win")
    sub.add_argument("--seed", type=int, default=0, help="run seed")
    sub.add_argument("--jobs", type=int, default=1, help="parallel workers")
    sub.add_argument("--out", type=Path, required=out_required, help="output directory")


def _ensure_out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_audio_or_features(path_str: str, feature_kind: str,
                            vad_ratio: float):
    """Voiced-selected features from a wav or a binary feature dump."""
    path = Path(path_str)
    if path.suffix == ".ftr":
        return select_voiced_from_mask(load_features(path))
    buf = read_wav(path)
    fm = extract_features(buf, feature_kind)
    vad = energy_vad(buf, vad_ratio)
    return select_voiced(fm, vad)


# ---------------------------------------------------------------- synthesize

def _parse_pool_arg(specs: list[str]) -> dict:
    pools = {}
    for spec in specs:
        if "=" not in spec:
            raise ValueError(f"--pool expects LABEL=DIR, got {spec!r}")
        label, _, d = spec.partition("=")
        pools[label] = Path(d)
    return pools


def cmd_synthesize(args) -> int:
    pool_dirs = _parse_pool_arg(args.pool)
    if len(pool_dirs) != 2:
        raise ValueError("synthesize needs exactly two --pool LABEL=DIR arguments")
    if not 1 <= args.min_changes <= args.max_changes <= 5:
        raise ValueError("change counts must satisfy 1 <= min <= max <= 5")
    pools = {}
    for label, d in pool_dirs.items():
        if not d.is_dir():
            raise FileNotFoundError(f"pool directory not found: {d}")
        wavs = sorted(d.glob("*.wav"))
        pools[label] = [read_wav(w, expected_rate=args.rate) for w in wavs]
    out = _ensure_out(args)
    wav_dir = out / "wav"
    wav_dir.mkdir(exist_ok=True)
    annotations, manifest_rows = [], []
    for i in range(args.count):
        utt_id = f"utt{i:04d}"
        rng = derive_rng(args.seed, utt_id)
        n_changes = int(rng.integers(args.min_changes, args.max_changes + 1))
        stitch_seed = int(rng.integers(2 ** 31))
        buf, ann = stitch_code_switched(pools, n_changes, stitch_seed,
                                        utt_id=utt_id,
                                        crossfade_sec=args.crossfade_sec,
                                        vad_ratio=args.vad_ratio)
        wav_path = wav_dir / f"{utt_id}.wav"
        write_wav(wav_path, buf)
        annotations.append(ann)
        manifest_rows.append((utt_id, str(wav_path)))
        log.info("synthesized %s: %.2f s, %d changes", utt_id,
                 buf.duration_sec, n_changes)
    save_annotations(out / "annotations.tsv", annotations)
    save_manifest(out / "corpus.tsv", manifest_rows)
    stats = segment_duration_stats(annotations)
    _write_run_manifest(out, "synthesize", args, {"segment_stats": stats})
    return EXIT_OK


# ---------------------------------------------------------------------- mask

def cmd_mask(args) -> int:
    buf = read_wav(args.wav)
    if args.change_sample is not None:
        change = args.change_sample
    elif args.change_sec is not None:
        change = int(round(args.change_sec * buf.rate))
    else:
        raise ValueError("mask needs --change-sec or --change-sample")
    out = _ensure_out(args)
    masked = apply_gaussian_mask(buf, change, args.nvf, args.vad_ratio)
    out_path = out / f"{Path(args.wav).stem}.nvf{args.nvf}.wav"
    write_wav(out_path, masked)
    log.info("masked %s -> %s (%.2f s)", args.wav, out_path, masked.duration_sec)
    _write_run_manifest(out, "mask", args,
                        {"output_wav": str(out_path),
                         "masked_duration_sec": masked.duration_sec})
    return EXIT_OK


# ----------------------------------------------------------------- featurize

def cmd_featurize(args) -> int:
    rows = load_manifest(args.manifest)
    out = _ensure_out(args)
    ftr_dir = out / "features"
    ftr_dir.mkdir(exist_ok=True)
    manifest_rows = []
    for row in rows:
        utt_id, wav_path = row[0], row[1]
        buf = read_wav(wav_path)
        fm = extract_features(buf, args.feature)
        vad = energy_vad(buf, args.vad_ratio)
        fm.voiced_mask = vad.voiced_mask
        dump = ftr_dir / f"{utt_id}.ftr"
        save_features(dump, fm)
        manifest_rows.append((utt_id, str(dump)) + tuple(row[2:]))
    save_manifest(out / "features.tsv", manifest_rows)
    _write_run_manifest(out, "featurize", args)
    return EXIT_OK


# ----------------------------------------------------------------------- vad

def cmd_vad(args) -> int:
    rows = load_manifest(args.manifest)
    out = _ensure_out(args)
    vad_dir = out / "vad"
    vad_dir.mkdir(exist_ok=True)
    for row in rows:
        utt_id, wav_path = row[0], row[1]
        result = energy_vad(read_wav(wav_path), args.ratio)
        save_vad(vad_dir / f"{utt_id}.vad", result)
    _write_run_manifest(out, "vad", args)
    return EXIT_OK


# --------------------------------------------------------------------- train

def _disjoint_window_vectors(fm_rows: np.ndarray, window: int,
                             extractor: str, ubm: DiagGmm,
                             class_models: list[DiagGmm]) -> np.ndarray:
    vecs = []
    for start in range(0, fm_rows.shape[0] - window + 1, window):
        chunk = fm_rows[start:start + window]
        if extractor == "class":
            vecs.append(class_occupancy_vector(class_models, chunk).values)
        else:
            vecs.append(occupancy_vector(ubm, chunk).values)
    return np.stack(vecs) if vecs else np.empty((0, 0))


def cmd_train(args) -> int:
    rows = load_manifest(args.manifest)
    if any(len(r) < 3 for r in rows):
        raise ValueError("training manifest needs utt_id, path, label columns")
    by_label: dict[str, list[np.ndarray]] = {}
    for utt_id, path, label in rows:
        fm = _load_audio_or_features(path, args.feature, args.vad_ratio)
        by_label.setdefault(label, []).append(fm.rows)
    labels = sorted(by_label)
    if len(labels) < 2:
        raise ValueError("training needs at least two class labels")
    pooled = {lab: np.vstack(chunks) for lab, chunks in by_label.items()}
    everything = np.vstack([pooled[lab] for lab in labels])

    out = _ensure_out(args)
    log.info("training UBM: M=%d on %d frames", args.components, len(everything))
    ubm = train_gmm_em(everything, args.components, n_iters=args.em_iters,
                       seed=args.seed)
    save_gmm(out / "ubm.gmm", ubm)
    log_lines = ["# ubm em mean log-likelihood per iteration"]
    log_lines += [f"{i}\t{ll:.17g}" for i, ll in enumerate(ubm.ll_trace)]

    class_models = {}
    for lab in labels:
        adapted = map_adapt_means(ubm, pooled[lab], relevance=args.relevance)
        class_models[lab] = adapted
        save_gmm(out / f"class_{lab}.gmm", adapted, label=lab)

    extra = {"labels": labels, "n_frames": int(everything.shape[0])}
    if args.lda_dim or args.wccn or args.plda:
        ordered = [class_models[lab] for lab in labels]
        vec_blocks, vec_labels = [], []
        for lab in labels:
            V = _disjoint_window_vectors(pooled[lab], args.embed_window,
                                         args.embedding, ubm, ordered)
            if V.shape[0] == 0:
                raise ValueError(f"class {lab} has fewer than {args.embed_window} "
                                 "voiced frames; no training vectors")
            vec_blocks.append(V)
            vec_labels += [lab] * V.shape[0]
        V = np.vstack(vec_blocks)
        y = np.array(vec_labels)
        extra["n_training_vectors"] = int(V.shape[0])
        if args.lda_dim:
            P = train_lda(EmbeddingSet(V, y), args.lda_dim)
            save_lda(out / "lda.mat", P)
            V = V @ P.T
        if args.wccn:
            B = train_wccn(EmbeddingSet(V, y))
            save_wccn(out / "wccn.mat", B)
            V = V @ B.T
        if args.plda:
            model = train_plda(EmbeddingSet(V, y), n_iters=args.plda_iters)
            save_plda(out / "plda.mat", model)
            log_lines.append("# plda em marginal log-likelihood per iteration")
            log_lines += [f"{i}\t{ll:.17g}" for i, ll in enumerate(model.ll_trace)]
    _atomic_write_text(out / "training.log", "\n".join(log_lines) + "\n")
    _write_run_manifest(out, "train", args, extra)
    return EXIT_OK


# -------------------------------------------------------------------- detect

def load_model_bundle(models_dir, length_norm: bool = True) -> ModelBundle:
    models_dir = Path(models_dir)
    bundle = ModelBundle(length_norm=length_norm)
    ubm_path = models_dir / "ubm.gmm"
    if ubm_path.exists():
        bundle.ubm, _ = load_gmm(ubm_path)
    for path in sorted(models_dir.glob("class_*.gmm")):
        gmm, label = load_gmm(path)
        bundle.class_models[label if label is not None else path.stem] = gmm
    if (models_dir / "lda.mat").exists():
        bundle.lda = load_lda(models_dir / "lda.mat")
    if (models_dir / "wccn.mat").exists():
        bundle.wccn = load_wccn(models_dir / "wccn.mat")
    if (models_dir / "plda.mat").exists():
        bundle.plda = load_plda(models_dir / "plda.mat")
    return bundle


def _detect_one(task) -> tuple[str, list[tuple[float, float]]]:
    (utt_id, path, cfg_fields, feature, vad_ratio, models_dir,
     embeddings_dir, extractor, length_norm) = task
    cfg = DetectorConfig(**cfg_fields)
    bundle = None
    if cfg.mode != "gaussian-kl":
        bundle = load_model_bundle(models_dir, length_norm) if models_dir else \
            ModelBundle(length_norm=length_norm)
        if embeddings_dir:
            emb_path = Path(embeddings_dir) / f"{utt_id}.emb"
            bundle.embedding_track = import_embeddings(emb_path)
        if extractor == "ubm":
            bundle.class_models = {}
    fm = _load_audio_or_features(path, feature, vad_ratio)
    cps = detect_changes_from_features(fm, cfg, bundle)
    return utt_id, list(zip(cps.times_sec.tolist(), cps.scores.tolist()))


def cmd_detect(args) -> int:
    rows = load_manifest(args.manifest)
    cfg_fields = dict(window=args.window, alpha=args.alpha, gamma=args.gamma,
                      delta=args.delta, mode=args.mode)
    DetectorConfig(**cfg_fields)  # validate before any work
    if args.mode != "gaussian-kl" and not args.models and not args.embeddings:
        raise ValueError(f"mode {args.mode} needs --models or --embeddings")
    tasks = [(row[0], row[1], cfg_fields, args.feature, args.vad_ratio,
              str(args.models) if args.models else None,
              str(args.embeddings) if args.embeddings else None,
              args.extractor, not args.no_length_norm)
             for row in rows]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_detect_one, tasks))
    else:
        results = [_detect_one(t) for t in tasks]

    out = _ensure_out(args)
    per_dir = out / "detections"
    per_dir.mkdir(exist_ok=True)
    all_lines = []
    for utt_id, points in results:
        lines = [f"{utt_id}\t{t:.6f}\t{s:.6f}" for t, s in points]
        _atomic_write_text(per_dir / f"{utt_id}.tsv",
                           "\n".join(lines) + ("\n" if lines else ""))
        all_lines += lines
        log.info("detected %d change points in %s", len(points), utt_id)
    _atomic_write_text(out / "detections.tsv",
                       "\n".join(all_lines) + ("\n" if all_lines else ""))
    _write_run_manifest(out, "detect", args, {"n_utterances": len(results)})
    return EXIT_OK


def load_detections(path) -> dict:
    """detections.tsv rows grouped into per-utterance ChangePointSets."""
    by_utt: dict[str, list] = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        utt_id, t, s = line.split("\t")
        by_utt.setdefault(utt_id, []).append((float(t), float(s)))
    out = {}
    for utt_id, pts in by_utt.items():
        pts.sort()
        out[utt_id] = ChangePointSet.from_times([p[0] for p in pts],
                                                [p[1] for p in pts])
    return out


# ------------------------------------------------------------------ evaluate

def _report_csv(report: EvalReport, manifest_json: str) -> str:
    lines = [f"# run: {manifest_json}", "metric,value"]
    for name in ("idr", "far", "mdr", "dm_sec"):
        lines.append(f"{name},{getattr(report, name):.6f}")
    for name in ("n_ref", "n_identified", "n_missed", "n_multi"):
        lines.append(f"{name},{getattr(report, name)}")
    lines.append(f"collar_sec,{report.collar_sec:.6f}")
    for row in report.rows:
        dm = float(np.mean(np.abs(row.deviations))) if row.deviations else 0.0
        lines.append(f"utt,{row.utt_id},{row.n_ref},{row.n_identified},"
                     f"{row.n_missed},{row.n_multi},{dm:.6f}")
    return "\n".join(lines) + "\n"


def _report_table(report: EvalReport) -> str:
    lines = ["change point detection report",
             f"collar        {report.collar_sec:.3f} s",
             f"references    {report.n_ref}",
             f"IDR           {report.idr:6.2f} %  ({report.n_identified} identified)",
             f"FAR           {report.far:6.2f} %  ({report.n_multi} false-alarm cases)",
             f"MDR           {report.mdr:6.2f} %  ({report.n_missed} missed)",
             f"Dm            {report.dm_sec:.3f} s",
             "",
             "utt           refs  ident  miss  multi  dm_sec"]
    for row in report.rows:
        dm = float(np.mean(np.abs(row.deviations))) if row.deviations else 0.0
        lines.append(f"{row.utt_id:<13} {row.n_ref:>4}  {row.n_identified:>5}  "
                     f"{row.n_missed:>4}  {row.n_multi:>5}  {dm:.3f}")
    return "\n".join(lines) + "\n"


def cmd_evaluate(args) -> int:
    annotations = load_annotations(args.annotations)
    detections = load_detections(args.detections)
    unknown = sorted(set(detections) - set(annotations))
    if unknown:
        raise ValueError(f"detections for unknown utterances: {unknown[:5]}")
    cfg = EvalConfig(collar_sec=args.collar_sec)
    pairs = {}
    for utt_id, ann in annotations.items():
        refs = ChangePointSet.from_times(ann.change_points)
        hyps = detections.get(utt_id, ChangePointSet.from_times([]))
        pairs[utt_id] = (refs, hyps)
    report = evaluate_corpus(pairs, cfg)
    out = _ensure_out(args)
    payload = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    manifest_json = json.dumps({k: str(v) if isinstance(v, Path) else v
                                for k, v in payload.items()}, sort_keys=True)
    _atomic_write_text(out / "report.csv", _report_csv(report, manifest_json))
    _atomic_write_text(out / "report.txt", _report_table(report))
    _write_run_manifest(out, "evaluate", args,
                        {"idr": report.idr, "far": report.far,
                         "mdr": report.mdr, "dm_sec": report.dm_sec})
    print(_report_table(report), end="")
    return EXIT_OK


# -------------------------------------------------------------- discriminate

def _parse_int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.replace(",", " ").split()]


def cmd_discriminate(args) -> int:
    rows = load_manifest(args.manifest)
    annotations = load_annotations(args.annotations)
    items = []
    for row in rows:
        utt_id, path = row[0], row[1]
        if utt_id not in annotations:
            raise ValueError(f"no annotation for utterance {utt_id}")
        if len(annotations[utt_id].change_points) != 1:
            log.info("skipping %s: study needs exactly one change point", utt_id)
            continue
        fm = _load_audio_or_features(path, args.feature, args.vad_ratio)
        items.append((utt_id, fm, annotations[utt_id]))
    if not items:
        raise ValueError("no single-change utterances in the manifest")
    xs = _parse_int_list(args.nvf_list)
    results = discrimination_study(items, xs, seed=args.seed)
    out = _ensure_out(args)
    lines = ["x,F,n_true,n_false"]
    for res in results:
        lines.append(f"{res.x},{res.f_stat:.6f},{res.true_dists.size},"
                     f"{res.false_dists.size}")
        if res.n_skipped:
            log.info("x=%d: skipped %d utterances without margin",
                     res.x, res.n_skipped)
    _atomic_write_text(out / "discrimination.csv", "\n".join(lines) + "\n")
    _write_run_manifest(out, "discriminate", args,
                        {"skipped": {str(r.x): r.n_skipped for r in results}})
    return EXIT_OK


# -------------------------------------------------------------------- trials

def cmd_trials(args) -> int:
    rows = load_manifest(args.manifest)
    if any(len(r) < 3 for r in rows):
        raise ValueError("trials manifest needs utt_id, path, label columns")
    bundle = load_model_bundle(args.models, length_norm=not args.no_length_norm)
    if args.extractor == "class" and not bundle.class_models:
        raise ValueError("class extractor needs class_*.gmm models")
    if bundle.ubm is None:
        raise ValueError("models directory lacks ubm.gmm")
    ordered = bundle.ordered_class_models()
    by_label: dict[str, list[np.ndarray]] = {}
    for utt_id, path, label in rows:
        fm = _load_audio_or_features(path, args.feature, args.vad_ratio)
        by_label.setdefault(label, []).append(fm.rows)
    vec_blocks, vec_labels = [], []
    for lab in sorted(by_label):
        pooled = np.vstack(by_label[lab])
        V = _disjoint_window_vectors(pooled, args.embed_window,
                                     args.extractor, bundle.ubm, ordered)
        if V.shape[0]:
            vec_blocks.append(V)
            vec_labels += [lab] * V.shape[0]
    if not vec_blocks:
        raise ValueError("no class yielded a full embedding window")
    V = bundle.transform(np.vstack(vec_blocks))
    y = np.array(vec_labels)
    trials = build_trials(EmbeddingSet(V, y), n_each=args.n_each, seed=args.seed)
    if args.scorer == "plda":
        if bundle.plda is None:
            raise ValueError("plda scorer needs plda.mat in the models directory")
        idx_u = np.array([t[0] for t in trials])
        idx_v = np.array([t[1] for t in trials])
        scores = plda_score_many(bundle.plda, V[idx_u], V[idx_v])
    else:
        scores = np.array([1.0 - cosine_distance(V[i], V[j])
                           for i, j, _ in trials])
    is_same = np.array([t[2] for t in trials])
    rate = eer(scores, is_same)
    out = _ensure_out(args)
    lines = [f"{i}\t{j}\t{int(s)}\t{sc:.6f}"
             for (i, j, s), sc in zip(trials, scores)]
    _atomic_write_text(out / "trials.tsv", "\n".join(lines) + "\n")
    _atomic_write_text(out / "eer.txt", f"eer_percent\t{rate:.6f}\n"
                       f"n_same\t{int(is_same.sum())}\n"
                       f"n_diff\t{int((~is_same).sum())}\n")
    _write_run_manifest(out, "trials", args, {"eer_percent": rate})
    print(f"EER {rate:.2f}% over {len(trials)} trials")
    return EXIT_OK


# -------------------------------------------------------------------- parser

def build_parser() -> tuple[CliParser, dict]:
    parser = CliParser(prog="switchdet",
                       description="language/speaker change point detection toolkit")
    subs = parser.add_subparsers(dest="command", required=True)
    table = {}

    p = subs.add_parser("synthesize", parents=[], help="stitch a code-switched corpus")
    p.add_argument("--pool", action="append", required=True,
                   metavar="LABEL=DIR", help="labelled pool directory (give twice)")
    p.add_argument("--count", type=int, default=50, help="utterances to produce")
    p.add_argument("--min-changes", type=int, default=1)
    p.add_argument("--max-changes", type=int, default=5)
    p.add_argument("--rate", type=int, default=16000, help="required sample rate")
    p.add_argument("--crossfade-sec", type=float, default=0.01)
    p.add_argument("--vad-ratio", type=float, default=DEFAULT_RATIO)
    _add_common(p)
    p.set_defaults(func=cmd_synthesize)
    table["synthesize"] = p

    p = subs.add_parser("mask", help="Gaussian-mask audio around a change point")
    p.add_argument("--wav", required=True)
    p.add_argument("--change-sec", type=float)
    p.add_argument("--change-sample", type=int)
    p.add_argument("--nvf", type=int, required=True,
                   help="voiced frames to keep at half amplitude per side")
    p.add_argument("--vad-ratio", type=float, default=DEFAULT_RATIO)
    _add_common(p)
    p.set_defaults(func=cmd_mask)
    table["mask"] = p

    p = subs.add_parser("featurize", help="dump binary feature files")
    p.add_argument("--manifest", required=True)
    p.add_argument("--feature", choices=FEATURE_KINDS, default="mfcc13")
    p.add_argument("--vad-ratio", type=float, default=DEFAULT_RATIO)
    _add_common(p)
    p.set_defaults(func=cmd_featurize)
    table["featurize"] = p

    p = subs.add_parser("vad", help="dump voice activity decisions")
    p.add_argument("--manifest", required=True)
    p.add_argument("--ratio", type=float, default=DEFAULT_RATIO)
    _add_common(p)
    p.set_defaults(func=cmd_vad)
    table["vad"] = p

    p = subs.add_parser("train", help="train UBM, class models, and backend")
    p.add_argument("--manifest", required=True,
                   help="rows: utt_id, wav-or-ftr path, class label")
    p.add_argument("--feature", choices=FEATURE_KINDS, default="mfcc39")
    p.add_argument("--components", type=int, default=32, help="mixture size")
    p.add_argument("--em-iters", type=int, default=20)
    p.add_argument("--relevance", type=float, default=16.0)
    p.add_argument("--vad-ratio", type=float, default=DEFAULT_RATIO)
    p.add_argument("--embedding", dest="embedding", choices=("ubm", "class"),
                   default="class", help="training vector extractor")
    p.add_argument("--embed-window", type=int, default=200,
                   help="voiced frames per training vector")
    p.add_argument("--lda-dim", type=int, default=0, help="0 disables LDA")
    p.add_argument("--wccn", action="store_true")
    p.add_argument("--plda", action="store_true")
    p.add_argument("--plda-iters", type=int, default=10)
    _add_common(p)
    p.set_defaults(func=cmd_train)
    table["train"] = p

    p = subs.add_parser("detect", help="detect change points")
    p.add_argument("--manifest", required=True, help="rows: utt_id, wav-or-ftr path")
    p.add_argument("--mode", choices=("gaussian-kl", "embedding-cosine",
                                      "embedding-plda"), default="gaussian-kl")
    p.add_argument("--window", type=int, default=150,
                   help="voiced frames per side of the comparison")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--delta", type=float, default=1.3)
    p.add_argument("--feature", choices=FEATURE_KINDS, default="mfcc13")
    p.add_argument("--vad-ratio", type=float, default=DEFAULT_RATIO)
    p.add_argument("--models", type=Path, help="directory from the train step")
    p.add_argument("--embeddings", type=Path,
                   help="directory of <utt_id>.emb imported embedding tracks")
    p.add_argument("--extractor", choices=("ubm", "class"), default="class")
    p.add_argument("--no-length-norm", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_detect)
    table["detect"] = p

    p = subs.add_parser("evaluate", help="score detections against annotations")
    p.add_argument("--annotations", required=True)
    p.add_argument("--detections", required=True)
    p.add_argument("--collar-sec", type=float, default=1.0)
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)
    table["evaluate"] = p

    p = subs.add_parser("discriminate",
                        help="true vs false distance study over window sizes")
    p.add_argument("--manifest", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--feature", choices=FEATURE_KINDS, default="mfcc13")
    p.add_argument("--vad-ratio", type=float, default=DEFAULT_RATIO)
    p.add_argument("--nvf-list", default="10,20,30,50,75,100,150,200,250,300")
    _add_common(p)
    p.set_defaults(func=cmd_discriminate)
    table["discriminate"] = p

    p = subs.add_parser("trials", help="same/different trials and EER")
    p.add_argument("--manifest", required=True,
                   help="rows: utt_id, wav-or-ftr path, class label")
    p.add_argument("--models", type=Path, required=True)
    p.add_argument("--feature", choices=FEATURE_KINDS, default="mfcc39")
    p.add_argument("--vad-ratio", type=float, default=DEFAULT_RATIO)
    p.add_argument("--extractor", choices=("ubm", "class"), default="class")
    p.add_argument("--embed-window", type=int, default=200)
    p.add_argument("--scorer", choices=("cosine", "plda"), default="cosine")
    p.add_argument("--n-each", type=int, default=2000)
    p.add_argument("--no-length-norm", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_trials)
    table["trials"] = p

    return parser, table


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    parser, table = build_parser()
    try:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config", type=Path)
        known, _ = pre.parse_known_args(argv)
        if known.config is not None:
            command = next((a for a in argv if not a.startswith("-")), None)
            if command not in table:
                raise ValueError("--config requires a known subcommand")
            raw = _parse_config_file(known.config)
            table[command].set_defaults(**_coerce_config(table[command], raw))
        args = parser.parse_args(argv)
        return args.func(args)
    except (SwitchDetError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
