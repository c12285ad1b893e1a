"""Command-line pipeline: each stage is a file-to-file transform.

Stages communicate only through manifests in the work directory, so the
neural pieces of a full detection/recognition system (detector, word
recognizer) can run out-of-process and plug back in through the detections
and recognitions files. Manifests carry relative paths and a provenance
header with the effective algorithmic config; reruns with identical seeds
rewrite identical bytes.

Exit codes: 0 success, 1 input error, 2 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import augment as aug
from . import dataset, evaluate, figures, mser, recognize, samples, segment
from .config import ConfigError, PipelineConfig, load_config
from .geometry import BBox
from .jsonl import ManifestError, read_jsonl, write_jsonl
from .raster import load_raster, rescale_page, save_raster, crop

logger = logging.getLogger(__name__)

CORPUS_MANIFEST = "corpus.jsonl"
SPLIT_MANIFEST = "split.jsonl"
AUGMENTED_MANIFEST = "augmented.jsonl"
PROPOSALS_MANIFEST = "proposals.jsonl"
SAMPLES_MANIFEST = "samples.jsonl"
SEGMENTS_MANIFEST = "segments.jsonl"
CROPS_MANIFEST = "crops.jsonl"
RECOGNITIONS_MANIFEST = "recognitions.jsonl"


class StageInputError(ValueError):
    pass


def _require(path: Path, prior_stage: str) -> Path:
    if not path.exists():
        raise StageInputError(
            f"{path.name} not found in {path.parent}; run '{prior_stage}' first")
    return path


def _header(stage: str, config: PipelineConfig, **extra) -> dict:
    header = {"stage": stage, "config": config.to_header()}
    header.update(extra)
    return header


def _parallel_map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _load_pages(work: Path, prefer_split: bool = True) -> list[dataset.PageAnnotation]:
    split_path = work / SPLIT_MANIFEST
    corpus_path = work / CORPUS_MANIFEST
    if prefer_split and split_path.exists():
        _, pages = dataset.read_manifest(split_path)
        return pages
    _require(corpus_path, "ingest")
    _, pages = dataset.read_manifest(corpus_path)
    return pages


def _page_image(work: Path, page: dataset.PageAnnotation):
    return load_raster(work / page.image_path)


# ---------------------------------------------------------------- stages


def cmd_ingest(args, config: PipelineConfig) -> int:
    corpus_dir = Path(args.corpus)
    work = Path(args.work)
    if not corpus_dir.is_dir():
        raise StageInputError(f"corpus directory not found: {corpus_dir}")
    annotation_files = sorted(corpus_dir.glob("*.json"))
    if not annotation_files:
        raise StageInputError(f"no LabelMe .json files in {corpus_dir}")

    pages = []
    errors = []
    for ann_path in annotation_files:
        try:
            page = dataset.parse_labelme(ann_path.read_text(encoding="utf-8"),
                                         page_id=ann_path.stem)
            image_file = corpus_dir / page.image_path
            if not image_file.exists():
                for ext in (".png", ".pgm"):
                    alt = corpus_dir / (ann_path.stem + ext)
                    if alt.exists():
                        image_file = alt
                        break
            if not image_file.exists():
                raise dataset.LabelMeParseError(
                    f"image file not found: {page.image_path}")
            image = load_raster(image_file)
            if image.shape != (page.height, page.width):
                raise dataset.LabelMeParseError(
                    f"image is {image.shape[1]}x{image.shape[0]} but annotation "
                    f"says {page.width}x{page.height}")
            pages.append((page, image))
        except (dataset.LabelMeParseError, ValueError) as exc:
            errors.append(f"{ann_path.name}: {exc}")
    if errors:
        raise ManifestError(f"{len(errors)} annotation file(s) failed to parse",
                            errors)

    pages.sort(key=lambda pi: pi[0].page_id)
    (work / "pages").mkdir(parents=True, exist_ok=True)

    def process(item):
        page, image = item
        if config.rescale:
            image, boxes = rescale_page(image, page.marginalia,
                                        config.rescale_width,
                                        config.rescale_height)
        else:
            boxes = page.marginalia
        rel_path = f"pages/{page.page_id}.png"
        save_raster(work / rel_path, image)
        return dataset.PageAnnotation(
            page_id=page.page_id, image_path=rel_path,
            width=image.shape[1], height=image.shape[0], marginalia=boxes)

    out_pages = _parallel_map(process, pages, config.jobs)
    dataset.write_manifest(out_pages, work / CORPUS_MANIFEST,
                           header=_header("ingest", config))
    print(f"ingested {len(out_pages)} pages -> {work / CORPUS_MANIFEST}")
    return 0


def cmd_split(args, config: PipelineConfig) -> int:
    work = Path(args.work)
    _, pages = dataset.read_manifest(_require(work / CORPUS_MANIFEST, "ingest"))
    split = dataset.split_corpus(pages, config.split_ratio, config.seed)
    split_pages = dataset.apply_split(pages, split)
    dataset.write_manifest(split_pages, work / SPLIT_MANIFEST,
                           header=_header("split", config,
                                          n_train=len(split.train),
                                          n_test=len(split.test)))
    print(f"split {len(pages)} pages: {len(split.train)} train, "
          f"{len(split.test)} test -> {work / SPLIT_MANIFEST}")
    return 0


def cmd_augment(args, config: PipelineConfig) -> int:
    work = Path(args.work)
    _, pages = dataset.read_manifest(_require(work / SPLIT_MANIFEST, "split"))
    train = [p for p in pages if p.split == "train"]
    (work / "aug").mkdir(parents=True, exist_ok=True)
    params = config.augment_params()

    def process(page):
        image = _page_image(work, page)
        variants = aug.augment_page(page.page_id, image, page.marginalia,
                                    config.seed, params)
        records = []
        for sample in variants:
            rel_path = f"aug/{sample.sample_id}.png"
            save_raster(work / rel_path, sample.image)
            records.append({
                "sample_id": sample.sample_id,
                "page_id": sample.source_page_id,
                "variant": sample.variant,
                "seed": sample.seed,
                "image_path": rel_path,
                "width": sample.image.shape[1],
                "height": sample.image.shape[0],
                "boxes": [b.as_list() for b in sample.boxes],
            })
        return records

    all_records = [record
                   for records in _parallel_map(process, train, config.jobs)
                   for record in records]
    write_jsonl(work / AUGMENTED_MANIFEST, all_records,
                header=_header("augment", config, n_train_pages=len(train)))
    print(f"augmented {len(train)} train pages into {len(all_records)} samples "
          f"-> {work / AUGMENTED_MANIFEST}")
    return 0


def _proposal_sources(work: Path, source: str):
    """(id, image loader, width, height) tuples for the chosen manifest."""
    if source == "augmented":
        _, records = read_jsonl(_require(work / AUGMENTED_MANIFEST, "augment"))
        return [(r["sample_id"], work / r["image_path"]) for r in records]
    pages = _load_pages(work, prefer_split=(source != "corpus"))
    return [(p.page_id, work / p.image_path) for p in pages]


def cmd_proposals(args, config: PipelineConfig) -> int:
    work = Path(args.work)
    sources = _proposal_sources(work, args.source)
    params = config.mser_params()

    def process(item):
        item_id, image_path = item
        scored = mser.scored_proposals(load_raster(image_path), params)
        return {"page_id": item_id,
                "boxes": [b.as_list() for b, _ in scored],
                "scores": [v for _, v in scored]}

    records = _parallel_map(process, sources, config.jobs)
    write_jsonl(work / PROPOSALS_MANIFEST, records,
                header=_header("proposals", config, source=args.source))
    total = sum(len(r["boxes"]) for r in records)
    print(f"proposed {total} boxes on {len(records)} images "
          f"-> {work / PROPOSALS_MANIFEST}")
    return 0


def cmd_samples(args, config: PipelineConfig) -> int:
    work = Path(args.work)
    _, records = read_jsonl(_require(work / AUGMENTED_MANIFEST, "augment"))
    (work / "rois").mkdir(parents=True, exist_ok=True)
    params = config.mser_params()

    def process(record):
        image = load_raster(work / record["image_path"])
        boxes = [BBox.from_list(b) for b in record["boxes"]]
        page_samples, warnings = samples.build_training_set(
            [(record["sample_id"], image, boxes)], params, seed=config.seed,
            n_negatives=config.n_negatives, roi_size=config.roi_size)
        rows = []
        for roi in page_samples:
            rel_path = f"rois/{roi.sample_id}.png"
            save_raster(work / rel_path, roi.image)
            rows.append({
                "sample_id": roi.sample_id,
                "page_id": roi.page_id,
                "label": roi.label,
                "source_box": roi.source_box.as_list(),
                "tile_index": roi.tile_index,
                "image_path": rel_path,
            })
        return rows, [w.as_record() for w in warnings]

    results = _parallel_map(process, records, config.jobs)
    rows = [row for page_rows, _ in results for row in page_rows]
    warnings = [w for _, page_warnings in results for w in page_warnings]
    n_pos = sum(r["label"] == samples.LABEL_POSITIVE for r in rows)
    write_jsonl(work / SAMPLES_MANIFEST, rows,
                header=_header("samples", config, shortfalls=warnings,
                               n_positive=n_pos, n_negative=len(rows) - n_pos))
    print(f"built {len(rows)} ROI samples ({n_pos} positive) from "
          f"{len(records)} images -> {work / SAMPLES_MANIFEST}")
    if warnings:
        print(f"warning: {len(warnings)} page(s) had fewer than "
              f"{config.n_negatives} IoU=0 negatives", file=sys.stderr)
    return 0


def _detections_by_page(args, work: Path, pages) -> dict[str, list[BBox]]:
    """Boxes to segment per page: an imported detections file, or ground
    truth when none is given."""
    if args.detections:
        dets = evaluate.import_detections(Path(args.detections), pages)
        by_page: dict[str, list[BBox]] = {p.page_id: [] for p in pages}
        for det in dets:
            by_page[det.page_id].append(det.box)
        return by_page
    return {p.page_id: list(p.marginalia) for p in pages}


def cmd_segment(args, config: PipelineConfig) -> int:
    work = Path(args.work)
    pages = _load_pages(work)
    by_page = _detections_by_page(args, work, pages)

    def process(page):
        image = _page_image(work, page)
        seg_records = []
        crops = []
        for det_idx, box in enumerate(by_page.get(page.page_id, [])):
            region = crop(image, box)
            lines = segment.split_lines(region)
            line_rows = []
            for line_idx, line in enumerate(lines):
                words = segment.split_words(line.image)
                line_rows.append({
                    "row_start": line.row_start,
                    "row_stop": line.row_stop,
                    "words": [[w.col_start, w.col_stop] for w in words],
                })
                for word_idx, word in enumerate(words):
                    crops.append((page.page_id, det_idx, line_idx, word_idx,
                                  word.image))
            seg_records.append({"page_id": page.page_id,
                                "detection_index": det_idx,
                                "box": box.as_list(),
                                "lines": line_rows})
        return seg_records, crops

    results = _parallel_map(process, pages, config.jobs)
    seg_records = [r for page_records, _ in results for r in page_records]
    all_crops = [c for _, page_crops in results for c in page_crops]
    write_jsonl(work / SEGMENTS_MANIFEST, seg_records,
                header=_header("segment", config,
                               boxes_from="detections" if args.detections
                               else "ground_truth"))
    entries = recognize.export_word_crops(all_crops, work / "crops")
    entries = [recognize.WordCropEntry(
        crop_id=e.crop_id, image_path=f"crops/{e.image_path}",
        page_id=e.page_id, detection_index=e.detection_index,
        line_index=e.line_index, word_index=e.word_index) for e in entries]
    recognize.write_crop_manifest(entries, work / CROPS_MANIFEST,
                                  header=_header("segment", config))
    print(f"segmented {len(seg_records)} boxes into {len(all_crops)} word "
          f"crops -> {work / CROPS_MANIFEST}")
    return 0


def cmd_recognize_mock(args, config: PipelineConfig) -> int:
    work = Path(args.work)
    _, entries = recognize.read_crop_manifest(_require(work / CROPS_MANIFEST,
                                                       "segment"))
    lexicon_path = Path(args.lexicon)
    if not lexicon_path.exists():
        raise StageInputError(f"lexicon file not found: {lexicon_path}")
    lexicon = [w for w in lexicon_path.read_text(encoding="utf-8").split()
               if w]
    results = recognize.mock_recognize(entries, lexicon, config.seed)
    recognize.write_recognitions(results, work / RECOGNITIONS_MANIFEST,
                                 header=_header("recognize-mock", config,
                                                lexicon_size=len(lexicon)))
    print(f"mock-recognized {len(results)} word crops "
          f"-> {work / RECOGNITIONS_MANIFEST}")
    return 0


def _load_truth(path: Path) -> dict[str, str]:
    text = path.read_text(encoding="utf-8").strip()
    if text.startswith("{"):
        return {str(k): str(v) for k, v in json.loads(text).items()}
    truth = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        record = json.loads(line)
        if "crop_id" not in record or "text" not in record:
            raise ManifestError(f"{path.name}:{lineno}: need crop_id and text")
        truth[str(record["crop_id"])] = str(record["text"])
    return truth


def cmd_score_words(args, config: PipelineConfig) -> int:
    work = Path(args.work)
    _, entries = recognize.read_crop_manifest(_require(work / CROPS_MANIFEST,
                                                       "segment"))
    results, unrecognized = recognize.import_recognitions(
        _require(work / RECOGNITIONS_MANIFEST, "recognize-mock"), entries)
    truth = _load_truth(Path(args.truth))
    report = recognize.word_accuracy(results, truth,
                                     case_sensitive=not args.ignore_case)

    payload = {
        "accuracy": report.accuracy,
        "mean_cer": report.mean_cer,
        "n_scored": len(report.scores),
        "unrecognized_crops": unrecognized,
        "skipped_ids": report.skipped_ids,
        "words": [{"crop_id": s.crop_id, "reference": s.reference,
                   "prediction": s.prediction, "correct": s.correct,
                   "cer": s.cer} for s in report.scores],
    }
    (work / "word_report.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    width = max([len("crop_id")] + [len(s.crop_id) for s in report.scores])
    lines = [f"{'crop_id':<{width}}  {'reference':<12}  {'prediction':<12}  ok  cer"]
    for s in report.scores:
        lines.append(f"{s.crop_id:<{width}}  {s.reference:<12}  "
                     f"{s.prediction:<12}  {'y' if s.correct else 'n'}   {s.cer:.3f}")
    lines.append("")
    lines.append(f"accuracy: {report.accuracy if report.accuracy is not None else 'n/a'}")
    lines.append(f"mean CER: {report.mean_cer if report.mean_cer is not None else 'n/a'}")
    (work / "word_report.txt").write_text("\n".join(lines) + "\n",
                                          encoding="utf-8")
    (work / "report_figures").mkdir(exist_ok=True)
    figures.save_cer_histogram([s.cer for s in report.scores],
                               work / "report_figures" / "cer_hist.png")
    print(f"scored {len(report.scores)} words: accuracy="
          f"{report.accuracy}, mean CER={report.mean_cer}")
    return 0


def _format_eval_table(report: evaluate.EvalReport) -> str:
    rows = [("page", "n_gt", "n_pred", "matched", "mean_iou")]
    for page in report.per_page:
        page_mean = (sum(p.iou for p in page.pairs) / len(page.pairs)
                     if page.pairs else float("nan"))
        rows.append((page.page_id, str(page.n_gt), str(page.n_pred),
                     str(len(page.pairs)),
                     f"{page_mean:.4f}" if page.pairs else "-"))
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    lines = ["  ".join(f"{cell:<{widths[i]}}" for i, cell in enumerate(row))
             for row in rows]
    fmt = lambda v: f"{v:.6f}" if v is not None else "n/a"  # noqa: E731
    lines += [
        "",
        f"IoU threshold:        {report.iou_threshold}",
        f"mean IoU (penalized): {fmt(report.mean_iou_penalized)}",
        f"mean IoU (matched):   {fmt(report.mean_iou_matched_only)}",
        f"precision:            {fmt(report.precision)}",
        f"recall:               {fmt(report.recall)}",
        f"TP/FP/FN:             {report.true_positives}/"
        f"{report.false_positives}/{report.false_negatives}",
    ]
    lines += [f"note: {d}" for d in report.diagnostics]
    return "\n".join(lines) + "\n"


def cmd_eval(args, config: PipelineConfig) -> int:
    work = Path(args.work)
    pages = _load_pages(work)
    detections = evaluate.import_detections(Path(args.detections), pages)
    report = evaluate.evaluate_detections(pages, detections,
                                          config.eval_iou_threshold)

    payload = {
        "iou_threshold": report.iou_threshold,
        "mean_iou_penalized": report.mean_iou_penalized,
        "mean_iou_matched_only": report.mean_iou_matched_only,
        "precision": report.precision,
        "recall": report.recall,
        "true_positives": report.true_positives,
        "false_positives": report.false_positives,
        "false_negatives": report.false_negatives,
        "diagnostics": report.diagnostics,
        "per_page": [{
            "page_id": p.page_id, "n_gt": p.n_gt, "n_pred": p.n_pred,
            "pairs": [{"pred_index": m.pred_index, "gt_index": m.gt_index,
                       "iou": m.iou} for m in p.pairs],
        } for p in report.per_page],
    }
    (work / "eval_report.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (work / "eval_report.txt").write_text(_format_eval_table(report),
                                          encoding="utf-8")
    fig_dir = work / "report_figures"
    fig_dir.mkdir(exist_ok=True)
    figures.save_iou_histogram(report.matched_ious(), fig_dir / "iou_hist.png")
    page_means = [(p.page_id,
                   sum(m.iou for m in p.pairs) / len(p.pairs) if p.pairs else 0.0)
                  for p in report.per_page]
    figures.save_page_iou_chart([pid for pid, _ in page_means],
                                [v for _, v in page_means],
                                fig_dir / "page_iou.png")
    print(f"evaluated {len(detections)} detections on {len(pages)} pages; "
          f"mean IoU (penalized) = {report.mean_iou_penalized}")
    return 0


def cmd_overlay(args, config: PipelineConfig) -> int:
    work = Path(args.work)
    pages = _load_pages(work)
    detections = evaluate.import_detections(Path(args.detections), pages)
    by_page: dict[str, list[BBox]] = {}
    for det in detections:
        by_page.setdefault(det.page_id, []).append(det.box)
    out_dir = Path(args.out_dir) if args.out_dir else work / "overlays"
    out_dir.mkdir(parents=True, exist_ok=True)

    def process(page):
        image = _page_image(work, page)
        rgb = evaluate.render_overlay(image, page.marginalia,
                                      by_page.get(page.page_id, []))
        from PIL import Image
        Image.fromarray(rgb, mode="RGB").save(out_dir / f"{page.page_id}.png")

    _parallel_map(process, pages, config.jobs)
    print(f"wrote {len(pages)} overlays -> {out_dir}")
    return 0


# ------------------------------------------------------------- wiring


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--work", default=".", help="work directory for stage manifests")
    parser.add_argument("--config", default=None, help="key=value config file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--jobs", type=int, default=None,
                        help="parallel workers for per-page stages")


_OVERRIDE_KEYS = ("seed", "jobs", "split_ratio", "rescale_width",
                  "rescale_height", "rescale", "augment_sigma", "mser_delta",
                  "mser_max_variation", "mser_min_area", "mser_max_area",
                  "mser_tiny_min_area", "mser_polarity", "n_negatives",
                  "roi_size", "eval_iou_threshold")


def _effective_config(args) -> PipelineConfig:
    overrides = {key: getattr(args, key, None) for key in _OVERRIDE_KEYS}
    return load_config(args.config, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="marginalia",
        description="Handwritten-marginalia pipeline: ingest, augment, "
                    "propose, sample, segment, evaluate, bridge recognizers.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse LabelMe corpus, rescale pages")
    p.add_argument("--corpus", required=True, help="directory of LabelMe .json + images")
    p.add_argument("--rescale-width", type=int, dest="rescale_width")
    p.add_argument("--rescale-height", type=int, dest="rescale_height")
    p.add_argument("--no-rescale", dest="rescale", action="store_const",
                   const=False, default=None)
    _add_common(p)
    p.set_defaults(handler=cmd_ingest)

    p = sub.add_parser("split", help="deterministic train/test split")
    p.add_argument("--split-ratio", type=float, dest="split_ratio")
    _add_common(p)
    p.set_defaults(handler=cmd_split)

    p = sub.add_parser("augment", help="expand the train split 4x")
    p.add_argument("--augment-sigma", type=float, dest="augment_sigma")
    _add_common(p)
    p.set_defaults(handler=cmd_augment)

    p = sub.add_parser("proposals", help="dump MSER proposal boxes")
    p.add_argument("--source", choices=("split", "corpus", "augmented"),
                   default="split")
    p.add_argument("--mser-delta", type=int, dest="mser_delta")
    p.add_argument("--mser-max-variation", type=float, dest="mser_max_variation")
    p.add_argument("--mser-min-area", type=int, dest="mser_min_area")
    p.add_argument("--mser-max-area", type=int, dest="mser_max_area")
    p.add_argument("--mser-tiny-min-area", type=int, dest="mser_tiny_min_area")
    p.add_argument("--mser-polarity", choices=("dark", "bright", "both"),
                   dest="mser_polarity")
    _add_common(p)
    p.set_defaults(handler=cmd_proposals)

    p = sub.add_parser("samples", help="build ROI training samples")
    p.add_argument("--n-negatives", type=int, dest="n_negatives")
    p.add_argument("--roi-size", type=int, dest="roi_size")
    _add_common(p)
    p.set_defaults(handler=cmd_samples)

    p = sub.add_parser("segment", help="split boxes into line/word crops")
    p.add_argument("--detections", default=None,
                   help="detections file; defaults to ground-truth boxes")
    _add_common(p)
    p.set_defaults(handler=cmd_segment)

    p = sub.add_parser("recognize-mock", help="deterministic mock recognizer")
    p.add_argument("--lexicon", required=True, help="word list, one per line")
    _add_common(p)
    p.set_defaults(handler=cmd_recognize_mock)

    p = sub.add_parser("score-words", help="word accuracy + CER report")
    p.add_argument("--truth", required=True,
                   help="ground-truth words: JSON object or JSONL of "
                        "{crop_id, text}")
    p.add_argument("--ignore-case", action="store_true")
    _add_common(p)
    p.set_defaults(handler=cmd_score_words)

    p = sub.add_parser("eval", help="score detections against ground truth")
    p.add_argument("--detections", required=True)
    p.add_argument("--eval-iou-threshold", type=float, dest="eval_iou_threshold")
    _add_common(p)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("overlay", help="draw gt (green) and predictions (red)")
    p.add_argument("--detections", required=True)
    p.add_argument("--out-dir", default=None)
    _add_common(p)
    p.set_defaults(handler=cmd_overlay)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _effective_config(args)
        return args.handler(args, config)
    except (StageInputError, ConfigError, ManifestError,
            dataset.LabelMeParseError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except AssertionError as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
