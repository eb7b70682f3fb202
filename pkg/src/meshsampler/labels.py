"""Back-projection of per-point logits to faces and the segmentation metric suite.

The confusion matrix counts faces; ground-truth class 0 ("unclassified") is
excluded from evaluation, so the matrix covers classes 1..class_count-1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import LogitTable, PointCloud, TexturedMesh
from .grid import UniformGrid3D

log = logging.getLogger(__name__)


def face_logits(cloud: PointCloud, logits: LogitTable, mesh: TexturedMesh,
                report: dict | None = None) -> LogitTable:
    """Sum the logit rows of all points sampled from each face.

    Faces no point was sampled from receive the row of the sampled point
    nearest to their centroid; the number of such faces is reported.
    """
    if logits.per_face:
        raise ValueError("expected per-point logits")
    if len(logits) != len(cloud):
        raise ValueError(f"logit rows ({len(logits)}) do not align with cloud ({len(cloud)})")
    faces = np.asarray(cloud.face_index, np.int64)
    if len(faces) and faces.max() >= mesh.n_faces:
        raise ValueError(f"face_index {faces.max()} out of range for mesh with {mesh.n_faces} faces")

    acc = np.zeros((mesh.n_faces, logits.class_count))
    np.add.at(acc, faces, logits.rows.astype(np.float64))
    hit = np.zeros(mesh.n_faces, bool)
    hit[faces] = True

    missed = np.nonzero(~hit)[0]
    if len(missed):
        index = UniformGrid3D(cloud.positions, _spacing(cloud.positions))
        centroids = mesh.vertices[mesh.face_vertices[missed]].mean(axis=1)
        for f, centroid in zip(missed, centroids):
            acc[f] = logits.rows[index.knn(centroid, 1)[0]]
        log.warning("face_logits: %d faces without samples used nearest-point fallback",
                    len(missed))
    if report is not None:
        report["faces_without_samples"] = len(missed)
    return LogitTable(acc.astype(np.float32), per_face=True)


def _spacing(points: np.ndarray) -> float:
    extent = max(np.ptp(points, axis=0).max(), 1e-6)
    return extent / max(len(points) ** (1 / 3), 1.0) * 4


def predict_faces(table: LogitTable) -> np.ndarray:
    """Argmax class per row; ties go to the lowest class id."""
    if not table.per_face:
        raise ValueError("expected per-face logits")
    return np.argmax(table.rows, axis=1).astype(np.int32)


@dataclass
class ConfusionMatrix:
    """n[i][j] = faces of ground-truth class i+1 predicted as class j+1."""

    n: np.ndarray
    classes: np.ndarray          # class ids for the rows/columns

    @property
    def total(self) -> int:
        return int(self.n.sum())


def confusion(pred: np.ndarray, mesh: TexturedMesh) -> ConfusionMatrix:
    """Count faces by (ground truth, prediction), real classes only.

    Faces labeled unclassified (class 0) or unlabeled are excluded. An
    evaluated face predicted outside the real classes is an error.
    """
    pred = np.asarray(pred)
    if len(pred) != mesh.n_faces:
        raise ValueError(f"prediction length {len(pred)} != face count {mesh.n_faces}")
    classes = np.arange(1, mesh.class_count)
    gt = mesh.face_labels
    evaluated = gt >= 1
    if (pred[evaluated] < 1).any() or (pred[evaluated] >= mesh.class_count).any():
        bad = int(np.nonzero(evaluated)[0][np.argmax((pred[evaluated] < 1)
                                                     | (pred[evaluated] >= mesh.class_count))])
        raise ValueError(f"face {bad}: predicted class {pred[bad]} outside evaluated range")
    c = len(classes)
    flat = (gt[evaluated] - 1) * c + (pred[evaluated] - 1)
    n = np.bincount(flat, minlength=c * c).reshape(c, c)
    return ConfusionMatrix(n, classes)


def metrics(cm: ConfusionMatrix) -> dict:
    """IoU, Acc per class plus OA, mIoU, mAcc.

    Classes with no ground-truth faces get NaN per-class values and are
    excluded from the means.
    """
    n = cm.n.astype(np.float64)
    if n.sum() == 0:
        raise ValueError("empty confusion matrix")
    diag = np.diag(n)
    row = n.sum(axis=1)
    col = n.sum(axis=0)
    defined = row > 0

    iou = np.full(len(diag), np.nan)
    acc = np.full(len(diag), np.nan)
    union = row + col - diag
    iou[defined] = diag[defined] / union[defined]
    acc[defined] = diag[defined] / row[defined]
    return {
        "iou": iou,
        "acc": acc,
        "oa": diag.sum() / n.sum(),
        "miou": float(iou[defined].mean()),
        "macc": float(acc[defined].mean()),
        "classes": cm.classes,
        "defined": defined,
    }


def format_metrics(m: dict) -> str:
    """Human-readable metric report."""
    lines = [f"{'class':>8} {'IoU':>10} {'Acc':>10}"]
    for i, c in enumerate(m["classes"]):
        if m["defined"][i]:
            lines.append(f"{c:>8} {m['iou'][i]:>10.4f} {m['acc'][i]:>10.4f}")
        else:
            lines.append(f"{c:>8} {'undefined':>10} {'undefined':>10}")
    lines.append("")
    lines.append(f"OA   = {m['oa']:.4f}")
    lines.append(f"mIoU = {m['miou']:.4f}")
    lines.append(f"mAcc = {m['macc']:.4f}")
    return "\n".join(lines)


def metrics_keyvalues(m: dict) -> str:
    """Machine-readable `name=value` lines, 6-decimal fixed point."""
    lines = []
    for i, c in enumerate(m["classes"]):
        if m["defined"][i]:
            lines.append(f"iou_{c}={m['iou'][i]:.6f}")
            lines.append(f"acc_{c}={m['acc'][i]:.6f}")
    lines.append(f"oa={m['oa']:.6f}")
    lines.append(f"miou={m['miou']:.6f}")
    lines.append(f"macc={m['macc']:.6f}")
    return "\n".join(lines) + "\n"
