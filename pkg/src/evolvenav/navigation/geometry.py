"""Planar geometry for group hulls: quickhull, point-segment distance, containment."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GeometryError(ValueError):
    pass


def cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _quickhull_side(pts: np.ndarray, a: np.ndarray, b: np.ndarray, out: list) -> None:
    """Append hull vertices strictly left of a->b, in order from a to b (exclusive)."""
    if len(pts) == 0:
        return
    d = (b[0] - a[0]) * (pts[:, 1] - a[1]) - (b[1] - a[1]) * (pts[:, 0] - a[0])
    k = int(np.argmax(d))
    far = pts[k]
    left_af = pts[((far[0] - a[0]) * (pts[:, 1] - a[1]) - (far[1] - a[1]) * (pts[:, 0] - a[0])) > 0]
    left_fb = pts[((b[0] - far[0]) * (pts[:, 1] - far[1]) - (b[1] - far[1]) * (pts[:, 0] - far[0])) > 0]
    _quickhull_side(left_af, a, far, out)
    out.append(far)
    _quickhull_side(left_fb, far, b, out)


def quickhull(points) -> np.ndarray:
    """Convex hull vertices in counter-clockwise order, collinear points dropped.

    Recursive divide and conquer: split by the extreme-x chord, then keep
    the farthest point of each side and recurse on the outer subsets.
    Degenerate inputs return one point or the two segment endpoints.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise GeometryError("convex hull of an empty point set")
    pts = np.unique(pts, axis=0)  # lexicographic order: pts[0] min-x, pts[-1] max-x
    if len(pts) == 1:
        return pts.copy()
    a, b = pts[0], pts[-1]
    d = (b[0] - a[0]) * (pts[:, 1] - a[1]) - (b[1] - a[1]) * (pts[:, 0] - a[0])
    upper, lower = [], []
    _quickhull_side(pts[d > 0], a, b, upper)  # above the chord, from a to b
    _quickhull_side(pts[d < 0], b, a, lower)  # below the chord, from b to a
    if not upper and not lower:
        return np.array([a, b])
    # a -> upper -> b -> lower is clockwise; reverse for counter-clockwise order
    return np.array([a] + upper + [b] + lower)[::-1].copy()


def _signed_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def polygon_area(poly) -> float:
    poly = np.asarray(poly, dtype=float).reshape(-1, 2)
    return abs(_signed_area(poly)) if len(poly) >= 3 else 0.0


def point_segment_distance(p, a, b) -> float:
    p, a, b = (np.asarray(v, dtype=float) for v in (p, a, b))
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom == 0 else min(1.0, max(0.0, float((p - a) @ ab) / denom))
    return float(np.linalg.norm(p - (a + t * ab)))


def boundary_distance(p, poly) -> float:
    """Distance from ``p`` to the polygon boundary (point / segment for degenerate hulls)."""
    poly = np.asarray(poly, dtype=float).reshape(-1, 2)
    if len(poly) == 1:
        return float(np.linalg.norm(np.asarray(p, float) - poly[0]))
    if len(poly) == 2:
        return point_segment_distance(p, poly[0], poly[1])
    return min(point_segment_distance(p, poly[k], poly[(k + 1) % len(poly)]) for k in range(len(poly)))


def strictly_inside(p, poly, tol: float = 1e-12) -> bool:
    """True iff ``p`` lies in the interior of a CCW convex polygon with positive area."""
    poly = np.asarray(poly, dtype=float).reshape(-1, 2)
    if len(poly) < 3:
        return False
    return all(cross(poly[k], poly[(k + 1) % len(poly)], p) > tol for k in range(len(poly)))


@dataclass
class GroupHull:
    vertices: np.ndarray  # [K, 2] CCW
    area: float
    group_id: int = -1

    @classmethod
    def from_points(cls, points, group_id: int = -1) -> "GroupHull":
        v = quickhull(points)
        return cls(v, polygon_area(v), group_id)

    def distance(self, p) -> float:
        return boundary_distance(p, self.vertices)

    def contains(self, p) -> bool:
        return self.area > 0 and strictly_inside(p, self.vertices)


def convex_hull(points, group_id: int = -1) -> GroupHull:
    return GroupHull.from_points(points, group_id)
