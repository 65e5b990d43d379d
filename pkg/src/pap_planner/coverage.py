"""Disc covering by multi-tier circle packing, LoI selection, IRS placement and routing."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .irs import IrsModule

_RING = {u: 1.0 + 2.0 * math.cos(2.0 * math.pi / (u - 1)) for u in (8, 9, 10)}

# Enlargement factor: u discs of radius R / LAMBDA[u] cover a disc of radius R.
LAMBDA = {
    1: 1.0,
    2: 1.0,
    3: 2.0 / math.sqrt(3.0),
    4: math.sqrt(2.0),
    5: 1.641,
    6: 1.7968,  # certified by the coordinates below; the best known covering reaches 1.7988
    7: 2.0,
    **_RING,
}

# Coverings of the unit disc by 5 and 6 equal discs, found numerically (minimax over
# Voronoi vertices and bisector/boundary crossings, radii 0.6093829 and 0.5565265) and
# validated by the sampled-coverage test at radius 1/LAMBDA[u].
_CENTERS_5 = (
    (-0.1291356, -0.78228929),
    (0.57804273, 0.54269616),
    (-0.62696777, -0.08249525),
    (-0.28042558, 0.56679409),
    (0.51241917, -0.27349111),
)
_CENTERS_6 = (
    (-0.33791567, -0.42115545),
    (0.19885506, -0.63291579),
    (0.8243391, -0.10365017),
    (0.33791567, 0.42115545),
    (-0.19885506, 0.63291579),
    (-0.8243391, 0.10365017),
)


def _ring_centers(u: int) -> np.ndarray:
    r = 1.0 / LAMBDA[u]
    n = u - 1
    d = 2.0 * r * math.cos(math.pi / n)
    ang = 2.0 * math.pi * np.arange(n) / n
    return np.vstack([[0.0, 0.0], np.c_[d * np.cos(ang), d * np.sin(ang)]])


def _pattern_centers(u: int) -> np.ndarray:
    if u in (1, 2):
        return np.zeros((u, 2))
    if u == 3:
        ang = 2.0 * math.pi * np.arange(3) / 3
        return 0.5 * np.c_[np.cos(ang), np.sin(ang)]
    if u == 4:
        return np.array([[0.5, 0.5], [-0.5, 0.5], [-0.5, -0.5], [0.5, -0.5]])
    if u == 5:
        return np.array(_CENTERS_5)
    if u == 6:
        return np.array(_CENTERS_6)
    if u == 7:
        ang = 2.0 * math.pi * np.arange(6) / 6
        return np.vstack([[0.0, 0.0], math.sqrt(3.0) / 2 * np.c_[np.cos(ang), np.sin(ang)]])
    return _ring_centers(u)


@dataclass(frozen=True)
class PackingPattern:
    u: int
    lam: float
    centers: np.ndarray  # offsets for a unit target disc

    @property
    def small_radius(self) -> float:
        return 1.0 / self.lam


PATTERNS = {u: PackingPattern(u, LAMBDA[u], _pattern_centers(u)) for u in range(1, 11)}


@dataclass
class CoverSet:
    circle_centers: np.ndarray  # (n, 2)
    radius_final: float  # radius of the covering discs actually placed (<= radius_small)
    radius_small: float
    tiers: int
    patterns: tuple = ()

    def __len__(self):
        return len(self.circle_centers)


@dataclass
class FlightPath:
    waypoints: np.ndarray  # (M+1, 3)
    seg_len: float  # discretisation bound
    loi_indices: tuple  # visit order into the LoI list
    loi_waypoint_index: tuple = ()  # waypoint index at which each visited LoI is reached

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.waypoints[1:] + self.waypoints[:-1])

    @property
    def n_segments(self) -> int:
        return len(self.waypoints) - 1

    @property
    def length(self) -> float:
        return float(self.segment_lengths.sum())


def pattern_cost_exponent(u: int) -> float:
    """log(u)/log(Lambda(u)); u^mu(u) = ratio ** this."""
    return math.log(u) / math.log(LAMBDA[u])


@lru_cache(maxsize=4096)
def _best_multiset(log_ratio_q: int) -> tuple:
    """Cheapest multiset of patterns (by product of u) whose enlargements reach the ratio."""
    log_ratio = log_ratio_q / 1e12
    cands = [u for u in range(3, 11)]
    best = [math.inf, ()]

    def dfs(remaining, start, cost, chosen):
        if remaining <= 1e-12:
            key = (cost, len(chosen))
            if key < (best[0], len(best[1])) or best[0] == math.inf:
                best[0], best[1] = cost, tuple(chosen)
            return
        if cost >= best[0] - 1e-12:
            return
        for j in range(start, len(cands)):
            u = cands[j]
            dfs(remaining - math.log(LAMBDA[u]), j, cost + math.log(u), chosen + [u])

    # descending u explores good covers first, tightening the bound
    cands.sort(reverse=True)
    dfs(log_ratio, 0, 0.0, [])
    return best[1]


def optimal_pattern(r_target: float, r_small: float, exact: bool = False) -> int:
    """Pattern size for the outermost tier.

    With ``exact=False`` this is argmin_u u**mu(u), mu(u) = log2(R_t/R_s)/log2(Lambda(u)),
    over the patterns that enlarge (u >= 3).  ``exact=True`` instead returns the first
    pattern of the integer-optimal tier sequence (fewest discs in total).
    """
    if r_target <= r_small:
        return 1
    ratio = r_target / r_small
    if exact:
        seq = _best_multiset(int(round(math.log(ratio) * 1e12)))
        return max(seq)
    costs = {u: u ** (math.log2(ratio) / math.log2(LAMBDA[u])) for u in range(3, 11)}
    return min(costs, key=lambda u: (costs[u], u))


def exact_circle_count(ratio: float) -> int:
    if ratio <= 1:
        return 1
    return int(np.prod(_best_multiset(int(round(math.log(ratio) * 1e12)))))


def fixed_pattern_count(ratio: float, u: int) -> int:
    """Discs used by a multilevel packing that applies the u-circle pattern at every level."""
    if ratio <= 1:
        return 1
    levels = math.ceil(math.log(ratio) / math.log(LAMBDA[u]) - 1e-12)
    return u ** levels


def multi_tier_pack(r_geo: float, r_small: float, center=(0.0, 0.0), fixed_u: int | None = None) -> CoverSet:
    """Cover the disc of radius ``r_geo`` with discs of radius at most ``r_small``.

    Each tier replaces every disc of the previous tier by a packing pattern scaled to it.
    ``fixed_u`` forces one pattern at every tier (the multilevel baseline).
    """
    if r_geo <= 0 or r_small <= 0:
        raise ValueError("radii must be positive")
    centers = np.atleast_2d(np.asarray(center, dtype=float))
    radius = float(r_geo)
    used = []
    while radius > r_small * (1 + 1e-12):
        u = fixed_u if fixed_u is not None else optimal_pattern(radius, r_small, exact=True)
        pat = PATTERNS[u]
        centers = (centers[:, None, :] + radius * pat.centers[None, :, :]).reshape(-1, 2)
        radius /= pat.lam
        used.append(u)
    return CoverSet(centers, radius, float(r_small), len(used), tuple(used))


def covers_disc(centers, radius: float, r_target: float, center=(0.0, 0.0), n_samples: int = 10_000,
                seed: int = 0, tol: float = 1e-9) -> int:
    """Number of sampled points of the target disc (interior + rim) left uncovered."""
    rng = np.random.default_rng(seed)
    n_rim = n_samples // 5
    n_in = n_samples - n_rim
    rr = r_target * np.sqrt(rng.random(n_in))
    th = rng.random(n_in) * 2 * np.pi
    th_rim = np.linspace(0, 2 * np.pi, n_rim, endpoint=False)
    pts = np.vstack([np.c_[rr * np.cos(th), rr * np.sin(th)],
                     r_target * np.c_[np.cos(th_rim), np.sin(th_rim)]]) + np.asarray(center)
    centers = np.atleast_2d(centers)
    d2 = np.full(len(pts), np.inf)
    for chunk in np.array_split(centers, max(1, len(centers) // 256)):
        d2 = np.minimum(d2, ((pts[:, None, :] - chunk[None, :, :]) ** 2).sum(-1).min(axis=1))
    return int(np.sum(np.sqrt(d2) > radius * (1 + tol)))


def select_lois(cover: CoverSet, gns, radius: float | None = None, minimal: bool = True) -> np.ndarray:
    """Indices of cover circles kept as locations of interest.

    Candidates are the circles (closed discs of ``radius``, default the cover's small
    radius) holding at least one GN.  With ``minimal`` the smallest candidate subset that
    still covers every GN is returned.
    """
    gns = np.atleast_2d(np.asarray(gns, dtype=float))
    if gns.size == 0:
        return np.zeros(0, dtype=int)
    radius = cover.radius_small if radius is None else radius
    c = cover.circle_centers
    d = np.linalg.norm(gns[:, None, :2] - c[None, :, :], axis=2)
    member = d <= radius * (1 + 1e-12)  # (N, C)
    if not np.all(member.any(axis=1)):
        raise ValueError("cover leaves a GN outside every circle")
    cand = np.flatnonzero(member.any(axis=0))
    if not minimal:
        return cand
    sets = [frozenset(np.flatnonzero(member[:, j])) for j in cand]
    everyone = frozenset(range(len(gns)))
    budget = 200_000
    for size in range(1, len(cand) + 1):
        if math.comb(len(cand), size) > budget:
            break
        best = None
        for combo in itertools.combinations(range(len(cand)), size):
            if frozenset().union(*(sets[k] for k in combo)) == everyone:
                # prefer the subset whose circles sit closest to the GNs they serve
                score = sum(d[:, cand[k]][list(sets[k])].sum() for k in combo)
                if best is None or score < best[0]:
                    best = (score, combo)
        if best is not None:
            return np.array(sorted(cand[k] for k in best[1]))
    chosen, left = [], set(everyone)
    while left:
        k = max(range(len(cand)), key=lambda j: (len(sets[j] & left), -j))
        chosen.append(cand[k])
        left -= sets[k]
    return np.array(sorted(chosen))


def _route_length(pts, order, start, end):
    seq = [start] + [pts[i] for i in order] + [end]
    return float(sum(np.linalg.norm(np.subtract(b, a)) for a, b in zip(seq, seq[1:])))


def _held_karp(pts, start, end):
    n = len(pts)
    D = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    ds = np.linalg.norm(pts - start, axis=1)
    de = np.linalg.norm(pts - end, axis=1)
    best = {(1 << i, i): (ds[i], -1) for i in range(n)}
    for size in range(2, n + 1):
        for subset in itertools.combinations(range(n), size):
            mask = sum(1 << i for i in subset)
            for j in subset:
                prev = mask & ~(1 << j)
                best[(mask, j)] = min((best[(prev, k)][0] + D[k, j], k) for k in subset if k != j)
    full = (1 << n) - 1
    _, last = min((best[(full, j)][0] + de[j], j) for j in range(n))
    order, mask = [], full
    while last != -1:
        order.append(last)
        _, prev = best[(mask, last)]
        mask &= ~(1 << last)
        last = prev
    return order[::-1]


def _nn_two_opt(pts, start, end):
    n = len(pts)
    left = set(range(n))
    cur = np.asarray(start)
    order = []
    while left:
        j = min(left, key=lambda k: (np.linalg.norm(pts[k] - cur), k))
        order.append(j)
        left.remove(j)
        cur = pts[j]
    improved = True
    while improved:
        improved = False
        for i in range(n - 1):
            for k in range(i + 1, n):
                cand = order[:i] + order[i:k + 1][::-1] + order[k + 1:]
                if _route_length(pts, cand, start, end) < _route_length(pts, order, start, end) - 1e-9:
                    order = cand
                    improved = True
    return order


def shortest_visit_order(lois, p_start, p_end, exact_limit: int = 10) -> list[int]:
    pts = np.atleast_2d(np.asarray(lois, dtype=float))[:, :2]
    if len(pts) == 0:
        return []
    start = np.asarray(p_start, dtype=float)[:2]
    end = np.asarray(p_end, dtype=float)[:2]
    if len(pts) <= exact_limit:
        return _held_karp(pts, start, end)
    return _nn_two_opt(pts, start, end)


def discretize(points, delta: float):
    """Split each straight leg into equal pieces no longer than ``delta``."""
    pts = np.asarray(points, dtype=float)
    out, marks = [pts[0]], [0]
    for a, b in zip(pts[:-1], pts[1:]):
        length = np.linalg.norm(b - a)
        n = max(1, math.ceil(length / delta - 1e-12)) if length > 0 else 0
        for s in range(1, n + 1):
            out.append(a + (b - a) * s / n)
        marks.append(len(out) - 1)
    return np.array(out), marks


def build_path(lois, p_I, p_F, delta: float, h_p: float) -> FlightPath:
    if delta <= 0:
        raise ValueError("delta must be positive")
    lois = np.atleast_2d(np.asarray(lois, dtype=float)) if len(lois) else np.zeros((0, 2))
    order = shortest_visit_order(lois, p_I, p_F)
    start = np.array([p_I[0], p_I[1], h_p], dtype=float)
    end = np.array([p_F[0], p_F[1], h_p], dtype=float)
    stops = [start] + [np.array([lois[i, 0], lois[i, 1], h_p]) for i in order] + [end]
    wps, marks = discretize(stops, delta)
    return FlightPath(wps, float(delta), tuple(int(i) for i in order), tuple(marks[1:-1]))


def place_irs(sites, gns, n_elements: int, elem_dx: float, elem_dz: float, cover_radius: float = 20.0,
              offset: float = 20.0, height: float = 10.0) -> list[IrsModule]:
    """One IRS per site, ``offset`` metres (2D) beyond the farthest GN that site covers.

    The surface faces the centroid of the covered GNs; if that leaves a covered GN behind
    it, it faces the site instead, which keeps the whole covered disc in front.
    """
    gns = np.atleast_2d(np.asarray(gns, dtype=float)) if len(gns) else np.zeros((0, 3))
    out = []
    if len(gns) == 0:
        return out
    for s in np.atleast_2d(np.asarray(sites, dtype=float)):
        s2 = s[:2]
        d = np.linalg.norm(gns[:, :2] - s2, axis=1)
        covered = gns[d <= cover_radius * (1 + 1e-12)]
        if len(covered) == 0:
            continue
        far = covered[np.argmax(np.linalg.norm(covered[:, :2] - s2, axis=1)), :2]
        u = far - s2
        nu = np.linalg.norm(u)
        u = u / nu if nu > 1e-9 else np.array([1.0, 0.0])
        pos2 = far + offset * u
        centroid = covered[:, :2].mean(axis=0)
        facing = centroid - pos2
        az = math.atan2(facing[1], facing[0])
        irs = IrsModule((float(pos2[0]), float(pos2[1]), float(height)), n_elements, elem_dx, elem_dz, az)
        off = covered[:, :2] - pos2
        if np.any(off @ irs.normal <= 1e-12):
            back = s2 - pos2
            irs = IrsModule(irs.ref_position, n_elements, elem_dx, elem_dz, math.atan2(back[1], back[0]))
        out.append(irs)
    return out
