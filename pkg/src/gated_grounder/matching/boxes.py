"""Box geometry on (center-x, center-y, width, height) boxes."""

import numpy as np


def to_corners(box) -> np.ndarray:
    """(x1, y1, x2, y2) of a center-size box."""
    cx, cy, w, h = np.asarray(box, dtype=np.float64)
    return np.array([cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2])


def iou(box_a, box_b) -> float:
    """Intersection over union of two center-size boxes, in [0, 1]."""
    a, b = to_corners(box_a), to_corners(box_b)
    inter_w = max(0.0, min(a[2], b[2]) - max(a[0], b[0]))
    inter_h = max(0.0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = inter_w * inter_h
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    if union <= 0.0:
        return 0.0
    return float(min(1.0, max(0.0, inter / union)))


def iou_to_all(boxes: np.ndarray, target) -> np.ndarray:
    """IoU of every row of `boxes` with `target`."""
    return np.array([iou(box, target) for box in np.asarray(boxes)])
