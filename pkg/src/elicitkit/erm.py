"""Empirical risk minimization over report boxes.

Strategy: evaluate the expected loss on a full tensor grid, refine the best
cell (and any cells tied with it) by cyclic coordinate-wise golden-section
search with a pattern step, then scan outward along each coordinate to
detect flat minimizer sets.  Discontinuous losses skip the local search and
enumerate their candidate reports instead.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage

from .distributions import FiniteDistribution, Interval, SampleSet, from_samples
from .errors import (
    DimensionTooLarge,
    DomainMismatch,
    EmptySample,
    InvalidParameter,
    NonFiniteObjective,
    ParseError,
)
from .properties import ReportValue

MAX_DIM = 6
CONVERGED = "Converged"
GRID_ONLY = "GridOnly"
NOT_ATTAINED = "NotAttained"
STATUSES = (CONVERGED, GRID_ONLY, NOT_ATTAINED)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
LINE_XTOL = 1e-11
MERGE_TOL = 1e-6
# a scanned side counts as flat only if the objective at half the scanned
# distance is still this fraction of the tolerance band above the minimum
FLAT_RATIO = 0.05
GAP_PROBES = 64
CHUNK_CELLS = 2_000_000


@dataclass(frozen=True)
class ERMConfig:
    """Search settings.  ``domain=None`` means the loss's default box for the data."""

    domain: tuple | None = None
    grid_points: int | tuple = 101
    refine_iterations: int = 200
    refine_tolerance: float = 1e-8
    flat_tolerance: float = 1e-9
    max_grid_size: int = 200_000

    def __post_init__(self):
        gp = self.grid_points
        counts = (gp,) if isinstance(gp, (int, np.integer)) else tuple(gp)
        if any(int(c) < 3 for c in counts):
            raise InvalidParameter("grid_points must be at least 3")
        if not (self.refine_tolerance > 0 and self.flat_tolerance > 0):
            raise InvalidParameter("tolerances must be positive")
        if self.refine_iterations < 0:
            raise InvalidParameter("refine_iterations must be nonnegative")
        if self.domain is not None:
            object.__setattr__(self, "domain", tuple((float(lo), float(hi)) for lo, hi in self.domain))
        if not isinstance(gp, (int, np.integer)):
            object.__setattr__(self, "grid_points", tuple(int(c) for c in gp))

    def to_json(self) -> dict:
        gp = self.grid_points
        return {
            "domain": None if self.domain is None else [list(b) for b in self.domain],
            "grid_points": gp if isinstance(gp, int) else list(gp),
            "refine_iterations": self.refine_iterations,
            "refine_tolerance": self.refine_tolerance,
            "flat_tolerance": self.flat_tolerance,
            "max_grid_size": self.max_grid_size,
        }


def erm_config_from_json(obj) -> ERMConfig:
    if obj is None:
        return ERMConfig()
    if not isinstance(obj, dict):
        raise ParseError("ERM config must be a JSON object")
    known = set(ERMConfig.__dataclass_fields__)
    extra = set(obj) - known
    if extra:
        raise ParseError(f"unknown ERM config fields: {sorted(extra)}")
    try:
        return ERMConfig(**obj)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidParameter):
            raise
        raise ParseError(f"bad ERM config: {exc}") from None


@dataclass
class ERMResult:
    minimizers: list[ReportValue]
    min_value: float
    status: str
    evaluations: int
    grid_value: float = field(default=math.nan)

    def points(self) -> np.ndarray:
        """One representative report per minimizer (interval midpoints)."""
        return np.array([m.point() for m in self.minimizers])

    @property
    def minimizer(self) -> ReportValue:
        return self.minimizers[0]

    def to_json(self) -> dict:
        return {
            "minimizers": [m.to_json() for m in self.minimizers],
            "min_value": self.min_value,
            "status": self.status,
            "evaluations": self.evaluations,
        }


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("ELICITKIT_THREADS", "1")))
    except ValueError:
        return 1


def _grid_counts(loss, cfg: ERMConfig, box) -> list[int]:
    k = loss.dim
    gp = cfg.grid_points
    counts = [int(gp)] * k if isinstance(gp, (int, np.integer)) else list(gp)
    if len(counts) != k:
        raise DomainMismatch(f"grid_points has {len(counts)} entries for a dim-{k} loss")
    free = [i for i in range(k) if i not in loss.discrete]
    fixed = 1
    for i in range(k):
        if i in loss.discrete:
            counts[i] = len(loss.discrete[i])
            fixed *= counts[i]
    total = fixed * math.prod(counts[i] for i in free)
    if total > cfg.max_grid_size and free:
        budget = max(cfg.max_grid_size // fixed, 3 ** len(free))
        scale = (budget / math.prod(counts[i] for i in free)) ** (1.0 / len(free))
        for i in free:
            counts[i] = max(3, int(counts[i] * scale))
    return counts


def grid_points_for_resolution(loss, box, resolution: float, max_grid_size: int = 200_000):
    """Per-coordinate grid counts giving step ``resolution``, shrunk to the size cap."""
    counts = []
    for i, (lo, hi) in enumerate(box):
        if i in loss.discrete:
            counts.append(3)
        else:
            counts.append(max(3, int(math.ceil((hi - lo) / resolution)) + 1))
    free = [i for i in range(len(box)) if i not in loss.discrete]
    total = math.prod(counts[i] for i in free) if free else 1
    if total > max_grid_size:
        scale = (max_grid_size / total) ** (1.0 / len(free))
        for i in free:
            counts[i] = max(3, int(counts[i] * scale))
    return tuple(counts)


class _Objective:
    """Expected loss with an evaluation counter."""

    def __init__(self, loss, p: FiniteDistribution):
        self.loss = loss
        self.p = p
        self.count = 0

    def __call__(self, x: np.ndarray) -> float:
        self.count += 1
        return float(self.loss.risk(x, self.p))

    def batch(self, xs: np.ndarray) -> np.ndarray:
        self.count += len(xs)
        return np.atleast_1d(self.loss.risk(xs, self.p))


def _resolve_box(loss, p, cfg: ERMConfig):
    box = cfg.domain if cfg.domain is not None else loss.default_domain(p)
    box = [tuple(map(float, b)) for b in box]
    if len(box) != loss.dim:
        raise DomainMismatch(f"domain has {len(box)} coordinates, loss has {loss.dim}")
    for lo, hi in box:
        if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
            raise DomainMismatch(f"bad domain interval [{lo}, {hi}]")
    return box


def _axes(loss, box, counts):
    axes = []
    for i, (lo, hi) in enumerate(box):
        if i in loss.discrete:
            axes.append(np.asarray(sorted(loss.discrete[i]), dtype=float))
        else:
            axes.append(np.linspace(lo, hi, counts[i]))
    return axes


def _grid_values(obj: _Objective, axes) -> np.ndarray:
    shape = tuple(len(a) for a in axes)
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
    rows = max(1, CHUNK_CELLS // max(1, obj.p.size))
    chunks = [mesh[s : s + rows] for s in range(0, len(mesh), rows)]
    loss, p = obj.loss, obj.p
    workers = min(_threads(), len(chunks))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda c: np.atleast_1d(loss.risk(c, p)), chunks))
    else:
        parts = [np.atleast_1d(loss.risk(c, p)) for c in chunks]
    obj.count += len(mesh)
    vals = np.concatenate(parts).reshape(shape)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteObjective("expected loss is not finite somewhere on the grid")
    return vals


def _golden(f, lo: float, hi: float, xtol: float):
    """Golden-section search on ``[lo, hi]``; returns the best point evaluated."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    best = (fc, c) if fc <= fd else (fd, d)
    while b - a > xtol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
            if fc < best[0]:
                best = (fc, c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
            if fd < best[0]:
                best = (fd, d)
    return best[1], best[0]


def _refine(obj: _Objective, loss, x0: np.ndarray, f0: float, box, spacing, cfg: ERMConfig):
    """Cyclic coordinate search; returns (x, f, converged)."""
    x, fx = x0.copy(), f0
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    k = loss.dim
    for _ in range(cfg.refine_iterations):
        x_start, f_start = x.copy(), fx
        for i in range(k):
            if i in loss.discrete:
                vals = np.asarray(sorted(loss.discrete[i]), dtype=float)
                trial = np.repeat(x[None, :], len(vals), axis=0)
                trial[:, i] = vals
                fv = obj.batch(trial)
                j = int(np.argmin(fv))
                # ties within the flat band stay put so each tied index survives
                if fv[j] < fx - cfg.flat_tolerance:
                    x, fx = trial[j], float(fv[j])
                continue
            if spacing[i] == 0:
                continue
            a = max(lo[i], x[i] - spacing[i])
            b = min(hi[i], x[i] + spacing[i])
            trial = x.copy()

            def line(t, trial=trial, i=i):
                trial[i] = t
                return obj(trial)

            t, ft = _golden(line, a, b, LINE_XTOL * max(1.0, abs(x[i])))
            if ft < fx:
                x = x.copy()
                x[i], fx = t, ft
        step = x - x_start
        for i in loss.discrete:
            step[i] = 0.0
        if np.any(step != 0):
            # pattern move: line search along the net displacement of the cycle
            base = x.copy()

            def along(t):
                return obj(np.clip(base + t * step, lo, hi))

            span = np.max(np.abs(step))
            ttol = min(1e-3, LINE_XTOL * max(1.0, np.max(np.abs(base))) / span)
            t, ft = _golden(along, 0.0, 4.0, ttol)
            if ft < fx:
                x, fx = np.clip(base + t * step, lo, hi), ft
        move = np.max(np.abs(x - x_start) / np.maximum(1.0, np.abs(x_start)))
        if move <= cfg.refine_tolerance or f_start - fx <= 1e-15 * max(1.0, abs(fx)):
            return x, fx, True
    return x, fx, False


def _flat_extent(
    obj: _Objective, x: np.ndarray, i: int, direction: float, limit: float, thresh: float, band: float, v0: float,
    breaks=None,
):
    """Distance one can move along ``direction * e_i`` staying within ``thresh``.

    Step doubling can leap over a gap in the sub-level set, so the extent is
    re-probed densely (and between consecutive ``breaks``, coordinates where
    a piecewise-constant objective may jump) and cut at the first failure.
    """
    if limit <= 0:
        return 0.0
    trial = x.copy()

    def at(t):
        trial[i] = x[i] + direction * t
        return obj(trial)

    good, bad = 0.0, None
    t = min(limit, 1e-7 * max(1.0, abs(x[i])))
    while True:
        if at(t) <= thresh:
            good = t
            if t >= limit:
                break
            t = min(limit, 2.0 * t)
        else:
            bad = t
            break
    def bisect(good, bad):
        for _ in range(60):
            if bad - good <= 1e-13 * max(1.0, abs(x[i])):
                break
            mid = 0.5 * (good + bad)
            if at(mid) <= thresh:
                good = mid
            else:
                bad = mid
        return good

    if bad is not None:
        good = bisect(good, bad)
    if good > 0.0:
        ts = np.linspace(0.0, good, GAP_PROBES + 1)[1:]
        if breaks is not None:
            b = np.sort(direction * (np.asarray(breaks, dtype=float) - x[i]))
            b = b[(b > 0.0) & (b < good)]
            if b.size:
                edges = np.concatenate([[0.0], b, [good]])
                ts = np.union1d(ts, 0.5 * (edges[1:] + edges[:-1]))
        prev = 0.0
        for t in ts:
            if at(t) > thresh:
                good = bisect(prev, t)
                break
            prev = t
    if good == 0.0:
        return 0.0
    # reject smooth bowls: a flat set keeps the objective at the minimum
    if at(0.5 * good) - v0 > FLAT_RATIO * band:
        return 0.0
    return good


def _flat_box(obj, loss, x, v0, box, cfg: ERMConfig, breaks=None):
    band = cfg.flat_tolerance
    thresh = v0 + band
    comps = []
    for i in range(loss.dim):
        if i in loss.discrete:
            comps.append(float(x[i]))
            continue
        lo, hi = box[i]
        bi = None if breaks is None else breaks[:, i]
        left = _flat_extent(obj, x, i, -1.0, x[i] - lo, thresh, band, v0, bi)
        right = _flat_extent(obj, x, i, 1.0, hi - x[i], thresh, band, v0, bi)
        # sub-resolution widths come from comparison slack, not a flat set
        if left + right <= 1e-9 * max(1.0, abs(x[i])):
            comps.append(float(x[i]))
        else:
            comps.append(Interval(float(x[i] - left), float(x[i] + right)))
    return comps


def _comp_bounds(c):
    return (c.lo, c.hi) if isinstance(c, Interval) else (c, c)


def _merge(boxes: list[list]) -> list[list]:
    """Union minimizer boxes that touch within ``MERGE_TOL`` in every coordinate."""
    out: list[list] = []
    for comps in sorted(boxes, key=lambda cs: [_comp_bounds(c)[0] for c in cs]):
        for j, other in enumerate(out):
            if all(
                _comp_bounds(a)[0] <= _comp_bounds(b)[1] + MERGE_TOL
                and _comp_bounds(b)[0] <= _comp_bounds(a)[1] + MERGE_TOL
                for a, b in zip(comps, other)
            ):
                merged = []
                for a, b in zip(comps, other):
                    lo = min(_comp_bounds(a)[0], _comp_bounds(b)[0])
                    hi = max(_comp_bounds(a)[1], _comp_bounds(b)[1])
                    merged.append(lo if hi - lo <= 0 else Interval(lo, hi))
                out[j] = merged
                break
        else:
            out.append(list(comps))
    out.sort(key=lambda cs: [_comp_bounds(c)[0] for c in cs])
    return out


def _boundary_status(obj, loss, x, fx, box) -> str:
    """Classify a minimizer touching the box boundary."""
    improving = []
    for i, (lo, hi) in enumerate(box):
        if i in loss.discrete or hi == lo:
            continue
        width = hi - lo
        for side, edge, direction in ((0, lo, -1.0), (1, hi, 1.0)):
            if abs(x[i] - edge) > 1e-9 * max(1.0, width):
                continue
            trial = x.copy()
            trial[i] = edge + direction * 1e-6 * max(1.0, width)
            if obj(trial) < fx - 1e-12 * max(1.0, abs(fx)):
                improving.append((i, edge, direction, width))
    if not improving:
        return CONVERGED
    for i, edge, direction, width in improving:
        prev = fx
        keeps_falling = True
        trial = x.copy()
        for mult in (1.0, 10.0, 100.0, 1000.0):
            trial[i] = edge + direction * mult * max(1.0, width)
            with np.errstate(all="ignore"):
                val = obj(trial)
            if not math.isfinite(val) or val >= prev:
                keeps_falling = False
                break
            prev = val
        if keeps_falling:
            return NOT_ATTAINED
    return GRID_ONLY


def _tie_seeds(loss, vals: np.ndarray, thresh: float) -> list[tuple]:
    """One representative grid cell per connected cluster of near-minimal cells."""
    mask = vals <= thresh
    k = vals.ndim
    structure = ndimage.generate_binary_structure(k, k)
    for i in loss.discrete:
        sl = [slice(None)] * k
        sl[i] = [0, 2]
        structure[tuple(sl)] = False
    labels, n = ndimage.label(mask, structure=structure)
    seeds = []
    for lab in range(1, n + 1):
        idx = np.argwhere(labels == lab)
        cell_vals = vals[tuple(idx.T)]
        seeds.append(tuple(idx[int(np.argmin(cell_vals))]))
    return seeds


def minimize(loss, p: FiniteDistribution, cfg: ERMConfig | None = None) -> ERMResult:
    """Minimize ``E_p[loss(r, .)]`` over the configured report box."""
    cfg = ERMConfig() if cfg is None else cfg
    if loss.dim > MAX_DIM:
        raise DimensionTooLarge(f"report dimension {loss.dim} exceeds {MAX_DIM}")
    box = _resolve_box(loss, p, cfg)
    counts = _grid_counts(loss, cfg, box)
    axes = _axes(loss, box, counts)
    obj = _Objective(loss, p)
    vals = _grid_values(obj, axes)
    grid_best = float(vals.min())
    spacing = np.array(
        [0.0 if (i in loss.discrete or len(a) < 2) else a[1] - a[0] for i, a in enumerate(axes)]
    )

    if loss.discontinuous and loss.candidates is not None:
        return _minimize_by_candidates(obj, loss, p, box, axes, vals, cfg, grid_best)

    seeds = _tie_seeds(loss, vals, grid_best + cfg.flat_tolerance)
    refined = []
    for cell in seeds:
        x0 = np.array([axes[i][c] for i, c in enumerate(cell)])
        f0 = float(vals[cell])
        if cfg.refine_iterations > 0:
            x, fx, conv = _refine(obj, loss, x0, f0, box, spacing, cfg)
        else:
            x, fx, conv = x0, f0, False
        refined.append((fx, x, conv))
    best = min(fx for fx, _, _ in refined)
    keep = [(fx, x, conv) for fx, x, conv in refined if fx <= best + cfg.flat_tolerance]

    statuses = []
    boxes = []
    for fx, x, conv in keep:
        if not conv:
            statuses.append(GRID_ONLY)
        else:
            statuses.append(_boundary_status(obj, loss, x, fx, box))
        boxes.append(_flat_box(obj, loss, x, best, box, cfg))
    status = _worst(statuses)
    minimizers = [ReportValue(c) for c in _merge(boxes)]
    return ERMResult(minimizers, best, status, obj.count, grid_best)


def _worst(statuses) -> str:
    for s in (NOT_ATTAINED, GRID_ONLY):
        if s in statuses:
            return s
    return CONVERGED


def _minimize_by_candidates(obj, loss, p, box, axes, vals, cfg, grid_best):
    cands = np.atleast_2d(np.asarray(loss.candidates(p), dtype=float))
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    inside = np.all((cands >= lo) & (cands <= hi), axis=1)
    cands = cands[inside]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, loss.dim)
    pool = np.concatenate([cands, mesh]) if len(cands) else mesh
    pool_vals = np.concatenate([obj.batch(cands), vals.ravel()]) if len(cands) else vals.ravel()
    best = float(pool_vals.min())
    winners = pool[pool_vals <= best + cfg.flat_tolerance]
    boxes = []
    for x in winners:
        # grid winners inside an already scanned box add nothing
        if any(all(_comp_bounds(c)[0] <= xi <= _comp_bounds(c)[1] for c, xi in zip(b, x)) for b in boxes):
            continue
        boxes.append(_flat_box(obj, loss, x.copy(), best, box, cfg, cands))
    minimizers = [ReportValue(c) for c in _merge(boxes)]
    status = CONVERGED if len(cands) else GRID_ONLY
    return ERMResult(minimizers, best, status, obj.count, grid_best)


def minimize_empirical(loss, s, cfg: ERMConfig | None = None) -> ERMResult:
    """ERM over the empirical distribution of a sample."""
    if isinstance(s, SampleSet):
        values = s.values
    else:
        values = tuple(np.asarray(s, dtype=float).ravel().tolist())
        if not values:
            raise EmptySample("sample is empty")
    return minimize(loss, from_samples(values), cfg)


def expected_loss_curve(loss, p: FiniteDistribution, coordinate: int, grid: Sequence[float], fixed) -> list[float]:
    """Expected loss along ``coordinate`` with the other coordinates held at ``fixed``."""
    base = fixed.point() if isinstance(fixed, ReportValue) else np.asarray(fixed, dtype=float).ravel()
    if len(base) != loss.dim:
        raise DomainMismatch(f"fixed report has {len(base)} entries, loss has {loss.dim}")
    if not 0 <= coordinate < loss.dim:
        raise DomainMismatch(f"coordinate {coordinate} out of range for dim {loss.dim}")
    g = np.asarray(grid, dtype=float)
    pts = np.repeat(base[None, :], len(g), axis=0)
    pts[:, coordinate] = g
    return [float(v) for v in np.atleast_1d(loss.risk(pts, p))]


def component_residual(found, target) -> float:
    """Distance from an ERM component to an oracle component.

    Interval oracles count containment: a point or interval inside the
    oracle interval has residual zero.
    """
    f_lo, f_hi = _comp_bounds(found)
    t_lo, t_hi = _comp_bounds(target)
    if isinstance(target, Interval):
        return max(0.0, t_lo - f_lo, f_hi - t_hi)
    return max(abs(f_lo - t_lo), abs(f_hi - t_hi))


def match_targets(minimizers: Sequence[ReportValue], targets: Sequence[ReportValue], tol: float = 1e-4):
    """Pair each minimizer with its closest oracle report.

    Returns ``(ok, residuals)`` where ``residuals[i]`` is the per-coordinate
    residual vector of minimizer ``i``.  ``ok`` requires every minimizer to
    match some target within ``tol`` and every target to be matched.
    """
    if not minimizers or not targets:
        return False, []
    residuals, hit = [], set()
    for m in minimizers:
        best = None
        for j, t in enumerate(targets):
            if len(t) != len(m):
                continue
            res = [component_residual(a, b) for a, b in zip(m, t)]
            if best is None or max(res) < max(best[1]):
                best = (j, res)
        if best is None:
            return False, []
        residuals.append(best[1])
        if max(best[1]) <= tol:
            hit.add(best[0])
    ok = all(max(r) <= tol for r in residuals) and len(hit) == len(targets)
    return ok, residuals
