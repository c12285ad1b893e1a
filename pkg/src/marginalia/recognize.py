"""File-protocol bridge to external word recognizers, plus text metrics.

The contract an external recognizer sees: read the word-crop manifest
(JSON lines of crop_id + image_path + provenance indices), run whatever
model it likes on the PNGs, and write results as JSON lines of
``{crop_id, text, confidence}``. A deterministic mock recognizer, driven
by a lexicon and a seed, stands in for a real model in end-to-end tests.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

from .jsonl import ManifestError, read_jsonl, write_jsonl
from .raster import Raster, save_raster
from .seeding import derive_seed, unit_float

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WordCropEntry:
    crop_id: str
    image_path: str
    page_id: str
    detection_index: int
    line_index: int
    word_index: int

    def as_record(self) -> dict:
        return {"crop_id": self.crop_id, "image_path": self.image_path,
                "page_id": self.page_id, "detection_index": self.detection_index,
                "line_index": self.line_index, "word_index": self.word_index}


@dataclass(frozen=True)
class RecognitionResult:
    crop_id: str
    text: str
    confidence: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


def crop_id_for(page_id: str, detection_index: int, line_index: int,
                word_index: int) -> str:
    """Naming scheme {page}_{det}_{line}_{word}; indices are zero-padded so
    lexicographic order equals pipeline order."""
    return f"{page_id}_{detection_index:03d}_{line_index:03d}_{word_index:03d}"


def export_word_crops(crops, out_dir) -> list[WordCropEntry]:
    """Write word-crop PNGs plus manifest entries, sorted by crop id.

    ``crops`` yields ``(page_id, detection_index, line_index, word_index,
    image)`` tuples. Re-exporting over the same directory rewrites
    identical files.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries: list[WordCropEntry] = []
    for page_id, det_idx, line_idx, word_idx, image in crops:
        crop_id = crop_id_for(page_id, det_idx, line_idx, word_idx)
        filename = f"{crop_id}.png"
        save_raster(out_dir / filename, image)
        entries.append(WordCropEntry(crop_id=crop_id, image_path=filename,
                                     page_id=page_id, detection_index=det_idx,
                                     line_index=line_idx, word_index=word_idx))
    entries.sort(key=lambda e: e.crop_id)
    ids = [e.crop_id for e in entries]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate crop ids in export")
    return entries


def write_crop_manifest(entries: list[WordCropEntry], path,
                        header: dict | None = None) -> None:
    write_jsonl(path, (e.as_record() for e in entries), header=header)


def read_crop_manifest(path) -> tuple[dict | None, list[WordCropEntry]]:
    header, records = read_jsonl(path)
    entries = []
    errors = []
    seen: set[str] = set()
    for i, record in enumerate(records, start=1):
        missing = [k for k in ("crop_id", "image_path", "page_id",
                               "detection_index", "line_index", "word_index")
                   if k not in record]
        if missing:
            errors.append(f"record {i}: missing required key: {missing[0]}")
            continue
        crop_id = str(record["crop_id"])
        if crop_id in seen:
            errors.append(f"record {i}: duplicate crop_id {crop_id!r}")
            continue
        seen.add(crop_id)
        entries.append(WordCropEntry(
            crop_id=crop_id, image_path=str(record["image_path"]),
            page_id=str(record["page_id"]),
            detection_index=int(record["detection_index"]),
            line_index=int(record["line_index"]),
            word_index=int(record["word_index"])))
    if errors:
        raise ManifestError(f"{len(errors)} bad crop record(s) in {path}", errors)
    return header, entries


def import_recognitions(path, manifest: list[WordCropEntry],
                        ) -> tuple[list[RecognitionResult], list[str]]:
    """Read recognizer output and join it to the crop manifest.

    Unknown crop ids and out-of-range confidences are per-line errors;
    duplicate crop ids resolve last-wins with a warning. Returns the
    results plus the crop ids the recognizer never answered for.
    """
    header, records = read_jsonl(path)
    del header
    known = {e.crop_id for e in manifest}
    by_id: dict[str, RecognitionResult] = {}
    errors = []
    for i, record in enumerate(records, start=1):
        missing = [k for k in ("crop_id", "text", "confidence") if k not in record]
        if missing:
            errors.append(f"record {i}: missing required key: {missing[0]}")
            continue
        crop_id = str(record["crop_id"])
        if crop_id not in known:
            errors.append(f"record {i}: unknown crop_id {crop_id!r}")
            continue
        confidence = float(record["confidence"])
        if not 0.0 <= confidence <= 1.0:
            errors.append(f"record {i}: confidence {confidence} outside [0, 1]")
            continue
        if crop_id in by_id:
            logger.warning("duplicate result for crop %s: keeping the later line",
                           crop_id)
        by_id[crop_id] = RecognitionResult(crop_id=crop_id,
                                           text=str(record["text"]),
                                           confidence=confidence)
    if errors:
        raise ManifestError(f"{len(errors)} bad recognition line(s) in {path}",
                            errors)
    results = [by_id[e.crop_id] for e in manifest if e.crop_id in by_id]
    unrecognized = [e.crop_id for e in manifest if e.crop_id not in by_id]
    return results, unrecognized


def mock_recognize(manifest: list[WordCropEntry], lexicon: list[str],
                   seed: int) -> list[RecognitionResult]:
    """Deterministic stand-in recognizer: hash each crop id into the
    lexicon and into a confidence. Pure function of (manifest, lexicon, seed)."""
    if not lexicon:
        raise ValueError("mock recognizer needs a non-empty lexicon")
    results = []
    for entry in manifest:
        word = lexicon[derive_seed(seed, entry.crop_id, "word") % len(lexicon)]
        confidence = unit_float(seed, entry.crop_id, "confidence")
        results.append(RecognitionResult(crop_id=entry.crop_id, text=word,
                                         confidence=confidence))
    return results


def write_recognitions(results: list[RecognitionResult], path,
                       header: dict | None = None) -> None:
    write_jsonl(path, ({"crop_id": r.crop_id, "text": r.text,
                        "confidence": r.confidence} for r in results),
                header=header)


def levenshtein(a: str, b: str) -> int:
    """Edit distance (insert/delete/substitute, unit costs)."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(min(previous[j] + 1,
                               current[j - 1] + 1,
                               previous[j - 1] + (ca != cb)))
        previous = current
    return previous[-1]


def cer(reference: str, prediction: str) -> float:
    """Character error rate: edit distance over max(1, reference length)."""
    return levenshtein(reference, prediction) / max(1, len(reference))


@dataclass
class WordScore:
    crop_id: str
    reference: str
    prediction: str
    correct: bool
    cer: float


@dataclass
class WordReport:
    scores: list[WordScore]
    accuracy: float | None
    mean_cer: float | None
    skipped_ids: list[str]


def word_accuracy(results: list[RecognitionResult],
                  ground_truth: dict[str, str],
                  case_sensitive: bool = True) -> WordReport:
    """Exact-match word accuracy plus per-word character error rate.

    Scored on the intersection of result crop ids and ground-truth ids;
    anything outside it is listed as skipped with a warning.
    """
    by_id = {r.crop_id: r for r in results}
    common = sorted(set(by_id) & set(ground_truth))
    skipped = sorted(set(by_id) ^ set(ground_truth))
    if skipped:
        logger.warning("%d crop id(s) missing from one side, scoring %d common",
                       len(skipped), len(common))
    scores = []
    for crop_id in common:
        ref = ground_truth[crop_id]
        pred = by_id[crop_id].text
        ref_cmp, pred_cmp = (ref, pred) if case_sensitive else (ref.lower(), pred.lower())
        scores.append(WordScore(crop_id=crop_id, reference=ref, prediction=pred,
                                correct=ref_cmp == pred_cmp,
                                cer=cer(ref_cmp, pred_cmp)))
    if not scores:
        return WordReport(scores=[], accuracy=None, mean_cer=None,
                          skipped_ids=skipped)
    accuracy = sum(s.correct for s in scores) / len(scores)
    mean_cer = sum(s.cer for s in scores) / len(scores)
    return WordReport(scores=scores, accuracy=accuracy, mean_cer=mean_cer,
                      skipped_ids=skipped)
