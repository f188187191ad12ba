"""Areas of unions and intersections of disks in the plane.

Exact for up to three disks: pairwise lenses in closed form and the triple
intersection by integrating ``(x dy - y dx)/2`` along the boundary arcs of the
intersection region. Larger sets fall back to a quadtree over the bounding box
with inside/outside/boundary cell classification.

The ``*_arrays`` functions are vectorised over any broadcastable shape and are
what the quadrature integrands call; :func:`lens_area` and :func:`union_area`
are the scalar front ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "Disk",
    "lens_area",
    "union_area",
    "union_area_grid",
    "lens_area_arrays",
    "triple_intersection_arrays",
    "union_area_arrays",
]

TWO_PI = 2.0 * math.pi
_TANGENCY_EPS = 1e-12


@dataclass(frozen=True)
class Disk:
    x: float
    y: float
    radius: float

    def __post_init__(self):
        if not self.radius >= 0:
            raise ValueError("radius must be >= 0")

    @property
    def area(self) -> float:
        return math.pi * self.radius**2


def lens_area_arrays(x1, y1, r1, x2, y2, r2):
    """Area of intersection of two disks, elementwise."""
    x1, y1, r1, x2, y2, r2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x1, y1, r1, x2, y2, r2)))
    d = np.hypot(x2 - x1, y2 - y1)
    rmin = np.minimum(r1, r2)
    scale = np.maximum(np.maximum(r1, r2), d)
    tol = _TANGENCY_EPS * scale
    disjoint = d >= r1 + r2 - tol
    nested = d <= np.abs(r1 - r2) + tol
    partial = ~(disjoint | nested)
    out = np.where(nested & ~disjoint, math.pi * rmin**2, 0.0)
    if np.any(partial):
        dp, a, b = d[partial], r1[partial], r2[partial]
        c1 = np.clip((dp * dp + a * a - b * b) / (2.0 * dp * a), -1.0, 1.0)
        c2 = np.clip((dp * dp + b * b - a * a) / (2.0 * dp * b), -1.0, 1.0)
        kite = (-dp + a + b) * (dp + a - b) * (dp - a + b) * (dp + a + b)
        out[partial] = a * a * np.arccos(c1) + b * b * np.arccos(c2) - 0.5 * np.sqrt(np.maximum(kite, 0.0))
    return out


def _arc_inside(xi, yi, ri, xj, yj, rj, i_after_j):
    """Arc ``(start, length)`` of circle i lying inside closed disk j.

    ``i_after_j`` breaks the tie for coincident circles so their shared
    boundary is counted once (by the lower index).
    """
    dx, dy = xj - xi, yj - yi
    d = np.hypot(dx, dy)
    scale = np.maximum(np.maximum(ri, rj), d)
    tol = _TANGENCY_EPS * np.maximum(scale, 1e-300)
    same = (d <= tol) & (np.abs(ri - rj) <= tol)
    full = (d + ri <= rj + tol) & ~(same & i_after_j)
    empty = (d >= ri + rj - tol) | (ri >= d + rj - tol) | (same & i_after_j) | (ri <= 0)
    empty &= ~full | (ri <= 0)
    full &= ri > 0
    gamma = np.arctan2(dy, dx)
    with np.errstate(divide="ignore", invalid="ignore"):
        cosd = (ri * ri + d * d - rj * rj) / (2.0 * ri * d)
    delta = np.arccos(np.clip(np.nan_to_num(cosd, nan=1.0), -1.0, 1.0))
    start = np.where(full, 0.0, gamma - delta)
    length = np.where(full, TWO_PI, np.where(empty, 0.0, 2.0 * delta))
    return start, length


def _green_arc(cx, cy, r, ta, tb):
    """Contribution ``1/2 int (x dy - y dx)`` of the CCW arc ``[ta, tb]``."""
    return 0.5 * (
        r * r * (tb - ta) + r * cx * (np.sin(tb) - np.sin(ta)) - r * cy * (np.cos(tb) - np.cos(ta))
    )


def triple_intersection_arrays(xs, ys, rs):
    """Area of the intersection of three disks, elementwise.

    ``xs``, ``ys``, ``rs`` are sequences of three broadcastable arrays.
    """
    xs = [np.asarray(v, dtype=float) for v in xs]
    ys = [np.asarray(v, dtype=float) for v in ys]
    rs = [np.asarray(v, dtype=float) for v in rs]
    shape = np.broadcast_shapes(*(a.shape for a in xs + ys + rs))
    xs = [np.broadcast_to(a, shape) for a in xs]
    ys = [np.broadcast_to(a, shape) for a in ys]
    rs = [np.broadcast_to(a, shape) for a in rs]
    total = np.zeros(shape)
    for i in range(3):
        j, k = [m for m in range(3) if m != i]
        a1, l1 = _arc_inside(xs[i], ys[i], rs[i], xs[j], ys[j], rs[j], i > j)
        a2, l2 = _arc_inside(xs[i], ys[i], rs[i], xs[k], ys[k], rs[k], i > k)
        # Two arcs on one circle meet in at most two pieces.
        s = a1 + np.mod(a2 - a1, TWO_PI)
        end1 = a1 + l1
        e_a = np.minimum(s + l2, end1)
        has_a = (s < end1) & (l1 > 0) & (l2 > 0)
        e_b = np.minimum(s + l2 - TWO_PI, end1)
        has_b = (s + l2 > a1 + TWO_PI) & (l1 > 0) & (l2 > 0)
        total += np.where(has_a, _green_arc(xs[i], ys[i], rs[i], s, e_a), 0.0)
        total += np.where(has_b & (e_b > a1), _green_arc(xs[i], ys[i], rs[i], a1, e_b), 0.0)
    return np.maximum(total, 0.0)


def union_area_arrays(xs: Sequence, ys: Sequence, rs: Sequence):
    """Exact area of the union of one to three disks by inclusion-exclusion."""
    n = len(xs)
    if not 1 <= n <= 3:
        raise ValueError("vectorised exact union supports 1 to 3 disks")
    rs = [np.asarray(r, dtype=float) for r in rs]
    total = sum(math.pi * r * r for r in rs)
    for i in range(n):
        for j in range(i + 1, n):
            total = total - lens_area_arrays(xs[i], ys[i], rs[i], xs[j], ys[j], rs[j])
    if n == 3:
        total = total + triple_intersection_arrays(xs, ys, rs)
    return total


def lens_area(d1: Disk, d2: Disk) -> float:
    """Area of ``d1 ∩ d2``."""
    return float(lens_area_arrays(d1.x, d1.y, d1.radius, d2.x, d2.y, d2.radius))


def union_area(disks: Sequence[Disk], abs_tol: float = 1e-6) -> float:
    """Area of the union of the disks; exact for up to three, grid otherwise."""
    disks = list(disks)
    if not disks:
        raise ValueError("need at least one disk")
    if len(disks) <= 3:
        v = union_area_arrays([d.x for d in disks], [d.y for d in disks], [d.radius for d in disks])
        return float(v)
    return union_area_grid(disks, abs_tol)[0]


def union_area_grid(disks: Sequence[Disk], abs_tol: float = 1e-6, max_depth: int = 24) -> tuple[float, float]:
    """Quadtree estimate of the union area with a deterministic error bound.

    Cells wholly inside some disk or wholly outside all disks are resolved;
    boundary cells are split until half their total area is below
    ``abs_tol``. Unresolved cells count half their area, so the returned
    ``(area, bound)`` satisfies ``|area - true| <= bound``.
    """
    disks = [d for d in disks if d.radius > 0]
    if not disks:
        return 0.0, 0.0
    cx = np.array([d.x for d in disks])
    cy = np.array([d.y for d in disks])
    cr = np.array([d.radius for d in disks])
    x0, x1 = float((cx - cr).min()), float((cx + cr).max())
    y0, y1 = float((cy - cr).min()), float((cy + cr).max())
    side = max(x1 - x0, y1 - y0)
    # cells stored by lower-left corner; all cells of a level share one side length
    llx, lly = np.array([x0]), np.array([y0])
    inside_area = 0.0
    h = side
    for _ in range(max_depth + 1):
        ux, uy = llx + h, lly + h
        px = cx[None, :]
        py = cy[None, :]
        # farthest corner distance -> fully inside that disk
        fx = np.maximum(np.abs(llx[:, None] - px), np.abs(ux[:, None] - px))
        fy = np.maximum(np.abs(lly[:, None] - py), np.abs(uy[:, None] - py))
        inside = (fx * fx + fy * fy <= cr * cr).any(axis=1)
        # nearest point distance -> disjoint from that disk
        nx = np.maximum(np.maximum(llx[:, None] - px, px - ux[:, None]), 0.0)
        ny = np.maximum(np.maximum(lly[:, None] - py, py - uy[:, None]), 0.0)
        outside = (nx * nx + ny * ny >= cr * cr).all(axis=1)
        inside_area += inside.sum() * h * h
        boundary = ~inside & ~outside
        llx, lly = llx[boundary], lly[boundary]
        bound = 0.5 * llx.size * h * h
        if bound <= abs_tol or llx.size == 0 or _ == max_depth:
            return inside_area + bound, bound
        h2 = 0.5 * h
        llx = np.concatenate([llx, llx + h2, llx, llx + h2])
        lly = np.concatenate([lly, lly, lly + h2, lly + h2])
        h = h2
    raise AssertionError("unreachable")
