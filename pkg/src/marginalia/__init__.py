"""Handwritten-marginalia pipeline tooling.

Classical building blocks of a marginalia detection and recognition
system: LabelMe corpus ingest and splitting, training-set augmentation,
MSER region proposals, ROI sample generation, projection-profile line and
word segmentation, detection evaluation, and a file-protocol bridge to
external neural detectors and recognizers.
"""

from .augment import AugmentParams, AugmentedSample, augment_page, brightness_contrast, gaussian_noise, hflip
from .dataset import CorpusSplit, PageAnnotation, parse_labelme, read_manifest, split_corpus, write_manifest
from .evaluate import Detection, EvalReport, classification_accuracy, evaluate_detections, match_detections, mean_iou, render_overlay
from .geometry import BBox, iou
from .mser import ComponentTree, MserParams, Region, component_tree, extract_mser, proposals, stability
from .raster import BinaryRaster, Raster, crop, load_raster, rescale_page, resize, save_raster
from .recognize import RecognitionResult, WordCropEntry, cer, export_word_crops, levenshtein, mock_recognize, word_accuracy
from .samples import RoiSample, build_training_set, negative_rois, positive_rois
from .segment import binarize, horizontal_projection, otsu_threshold, segment_marginalia, sobel_magnitude, split_lines, split_words

__version__ = "0.1.0"

__all__ = [
    "AugmentParams", "AugmentedSample", "augment_page", "brightness_contrast",
    "gaussian_noise", "hflip",
    "CorpusSplit", "PageAnnotation", "parse_labelme", "read_manifest",
    "split_corpus", "write_manifest",
    "Detection", "EvalReport", "classification_accuracy",
    "evaluate_detections", "match_detections", "mean_iou", "render_overlay",
    "BBox", "iou",
    "ComponentTree", "MserParams", "Region", "component_tree", "extract_mser",
    "proposals", "stability",
    "BinaryRaster", "Raster", "crop", "load_raster", "rescale_page", "resize",
    "save_raster",
    "RecognitionResult", "WordCropEntry", "cer", "export_word_crops",
    "levenshtein", "mock_recognize", "word_accuracy",
    "RoiSample", "build_training_set", "negative_rois", "positive_rois",
    "binarize", "horizontal_projection", "otsu_threshold",
    "segment_marginalia", "sobel_magnitude", "split_lines", "split_words",
    "__version__",
]
