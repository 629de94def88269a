"""Detection post-processing and dataset utilities.

Confidence filtering, IoU, class-aware greedy NMS, YOLO-style label-file
parsing, dataset statistics, and precision/recall/F1 evaluation with
greedy one-to-one matching.  Boxes are continuous (sub-pixel); nothing
here rounds to integer pixels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import PixelPoint

DEFAULT_CLASS_NAMES = ("apple", "banana", "orange", "seed")
DEFAULT_CONFIDENCE_THRESHOLD = 0.67
DEFAULT_NMS_IOU_THRESHOLD = 0.45
DEFAULT_MATCH_IOU = 0.5


class DetectionError(Exception):
    pass


class MalformedLine(DetectionError):
    def __init__(self, line_number: int, reason: str, file_name: str | None = None):
        self.line_number = line_number
        self.reason = reason
        self.file_name = file_name
        where = f"{file_name}:{line_number}" if file_name else f"line {line_number}"
        super().__init__(f"{where}: {reason}")


@dataclass(frozen=True)
class BoundingBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError("box min must not exceed max")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)


@dataclass(frozen=True)
class Detection:
    class_id: int
    label: str
    confidence: float
    box: BoundingBox

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must be in [0, 1]")
        if self.class_id < 0:
            raise ValueError("class_id must be nonnegative")


@dataclass(frozen=True)
class ClassList:
    names: tuple[str, ...] = DEFAULT_CLASS_NAMES

    def __post_init__(self):
        names = tuple(self.names)
        if not names or len(set(names)) != len(names):
            raise ValueError("class names must be nonempty and unique")
        object.__setattr__(self, "names", names)

    def __len__(self) -> int:
        return len(self.names)

    def label(self, class_id: int) -> str:
        return self.names[class_id]


@dataclass(frozen=True)
class AnnotationRecord:
    """One YOLO label line: class id plus normalized center-format box."""

    class_id: int
    cx: float
    cy: float
    w: float
    h: float


@dataclass(frozen=True)
class DatasetSummary:
    images: int
    per_class_object_counts: dict[str, int]
    objects_per_image_histogram: dict[int, int]

    def total_objects(self) -> int:
        return sum(self.per_class_object_counts.values())


@dataclass(frozen=True)
class ClassMetrics:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class DetectionMetrics:
    per_class: dict[str, ClassMetrics]
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union; 0 when the union is empty (degenerate boxes)."""
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    inter = max(ix, 0.0) * max(iy, 0.0)
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def filter_by_confidence(dets: list[Detection], threshold: float) -> list[Detection]:
    """Keep detections with confidence >= threshold, order preserved."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    return [d for d in dets if d.confidence >= threshold]


def nms(dets: list[Detection], iou_threshold: float = DEFAULT_NMS_IOU_THRESHOLD) -> list[Detection]:
    """Greedy class-aware non-maximum suppression.

    Detections are taken in confidence-descending order (ties broken by
    lower class_id, then input order, for reproducibility); each kept
    detection suppresses remaining same-class detections whose IoU with it
    exceeds the threshold.  Output keeps that order.
    """
    if not 0.0 <= iou_threshold <= 1.0:
        raise ValueError("iou_threshold must be in [0, 1]")
    order = sorted(
        range(len(dets)), key=lambda i: (-dets[i].confidence, dets[i].class_id, i)
    )
    kept: list[Detection] = []
    suppressed = [False] * len(dets)
    for pos, i in enumerate(order):
        if suppressed[i]:
            continue
        kept.append(dets[i])
        for j in order[pos + 1 :]:
            if suppressed[j] or dets[j].class_id != dets[i].class_id:
                continue
            if iou(dets[i].box, dets[j].box) > iou_threshold:
                suppressed[j] = True
    return kept


def box_center(b: BoundingBox) -> PixelPoint:
    return PixelPoint((b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0)


def parse_annotation_file(
    text: str, num_classes: int | None = None, file_name: str | None = None
) -> list[AnnotationRecord]:
    """Parse YOLO label text: one "class_id cx cy w h" per nonempty line,
    coordinates normalized to [0, 1]."""
    records = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 5:
            raise MalformedLine(lineno, f"expected 5 fields, got {len(fields)}", file_name)
        try:
            class_id = int(fields[0])
            coords = [float(f) for f in fields[1:]]
        except ValueError:
            raise MalformedLine(lineno, "non-numeric field", file_name) from None
        if class_id < 0 or (num_classes is not None and class_id >= num_classes):
            raise MalformedLine(lineno, f"class id {class_id} out of range", file_name)
        if any(not 0.0 <= c <= 1.0 for c in coords):
            raise MalformedLine(lineno, "coordinate outside [0, 1]", file_name)
        records.append(AnnotationRecord(class_id, *coords))
    return records


def summarize_dataset(
    label_files: dict[str, str], classes: ClassList = ClassList()
) -> DatasetSummary:
    """Per-class object totals and objects-per-image histogram over a
    mapping of file name -> label-file text (one file per image)."""
    per_class = {name: 0 for name in classes.names}
    histogram: dict[int, int] = {}
    for name, text in label_files.items():
        records = parse_annotation_file(text, num_classes=len(classes), file_name=name)
        for rec in records:
            per_class[classes.label(rec.class_id)] += 1
        if records:
            histogram[len(records)] = histogram.get(len(records), 0) + 1
        else:
            histogram[0] = histogram.get(0, 0) + 1
    return DatasetSummary(len(label_files), per_class, dict(sorted(histogram.items())))


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp > 0 else 0.0
    r = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f1


def evaluate_detections(
    preds: list[Detection],
    truths: list[tuple[int, BoundingBox]],
    match_iou: float = DEFAULT_MATCH_IOU,
    classes: ClassList = ClassList(),
) -> DetectionMetrics:
    """Greedy one-to-one matching per class in descending prediction
    confidence; a prediction matches the unmatched same-class truth with
    the highest IoU >= match_iou.  Aggregate precision/recall/F1 are
    unweighted means over classes present in the ground truth."""
    if not 0.0 < match_iou <= 1.0:
        raise ValueError("match_iou must be in (0, 1]")
    per_class: dict[str, ClassMetrics] = {}
    truth_classes = {cid for cid, _ in truths}
    pred_classes = {d.class_id for d in preds}
    for cid in sorted(truth_classes | pred_classes):
        cls_preds = sorted(
            (d for d in preds if d.class_id == cid), key=lambda d: -d.confidence
        )
        cls_truths = [box for tcid, box in truths if tcid == cid]
        matched = [False] * len(cls_truths)
        tp = 0
        for d in cls_preds:
            best, best_iou = -1, 0.0
            for ti, tbox in enumerate(cls_truths):
                if matched[ti]:
                    continue
                overlap = iou(d.box, tbox)
                if overlap >= match_iou and overlap > best_iou:
                    best, best_iou = ti, overlap
            if best >= 0:
                matched[best] = True
                tp += 1
        fp = len(cls_preds) - tp
        fn = len(cls_truths) - tp
        p, r, f1 = _prf(tp, fp, fn)
        per_class[classes.label(cid)] = ClassMetrics(tp, fp, fn, p, r, f1)

    present = [classes.label(cid) for cid in sorted(truth_classes)]
    if present:
        agg_p = sum(per_class[n].precision for n in present) / len(present)
        agg_r = sum(per_class[n].recall for n in present) / len(present)
        agg_f1 = sum(per_class[n].f1 for n in present) / len(present)
    else:
        agg_p = agg_r = agg_f1 = 0.0
    return DetectionMetrics(
        per_class,
        tp=sum(m.tp for m in per_class.values()),
        fp=sum(m.fp for m in per_class.values()),
        fn=sum(m.fn for m in per_class.values()),
        precision=agg_p,
        recall=agg_r,
        f1=agg_f1,
    )
