"""Geometric predicates behind the relation vocabulary.

Boxes are (center-x, center-y, width, height) with y growing downward,
so "above" means a smaller center-y.
"""

from typing import Callable, Dict

import numpy as np

from gated_grounder.config import RELATION_NAMES


def _overlap_area(a: np.ndarray, b: np.ndarray) -> float:
    dx = min(a[0] + a[2] / 2, b[0] + b[2] / 2) - max(a[0] - a[2] / 2, b[0] - b[2] / 2)
    dy = min(a[1] + a[3] / 2, b[1] + b[3] / 2) - max(a[1] - a[3] / 2, b[1] - b[3] / 2)
    return max(dx, 0.0) * max(dy, 0.0)


_PREDICATES: Dict[str, Callable[[np.ndarray, np.ndarray, float], bool]] = {
    "left of": lambda s, a, m: a[0] - s[0] > m,
    "right of": lambda s, a, m: s[0] - a[0] > m,
    "above": lambda s, a, m: a[1] - s[1] > m,
    "below": lambda s, a, m: s[1] - a[1] > m,
    # proxy for "holding": the boxes touch
    "holding": lambda s, a, m: _overlap_area(s, a) > 0.0,
}

assert set(_PREDICATES) == set(RELATION_NAMES)


def relation_holds(
    relation: str, subject_box: np.ndarray, anchor_box: np.ndarray, margin: float
) -> bool:
    """Check `subject <relation> anchor` on two boxes.

    Args:
        relation: One of RELATION_NAMES
        subject_box: Box of the described object
        anchor_box: Box of the reference object
        margin: Minimum center offset for directional relations

    Returns:
        True if the predicate holds
    """
    try:
        predicate = _PREDICATES[relation]
    except KeyError:
        raise ValueError(f"Unknown relation: {relation}") from None
    return bool(predicate(np.asarray(subject_box), np.asarray(anchor_box), margin))
