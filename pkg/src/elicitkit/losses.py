"""Loss constructors.

A :class:`Loss` wraps a vectorized map ``fn(r, y)``: ``r`` has shape
``(..., dim)`` and is read componentwise as ``r[..., i]``, ``y`` is an array
of outcomes, and the usual broadcasting rules give the result shape.  With
``r`` of shape ``(m, 1, dim)`` and ``y`` of shape ``(n,)`` one call evaluates
an ``(m, n)`` table, which is how the ERM engine scans its grids.

User-supplied maps (``f``, ``g`` for quantile losses, ``G``/``dG``/``X`` for
Bregman losses, ``h``/``H`` weight pairs) must likewise act elementwise on
numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

from .distributions import FiniteDistribution, Interval, cdf, expectation, quantile_set
from .errors import (
    FNotMonotone,
    GNotConvex,
    InvalidParameter,
    InvalidWeightPair,
    ParseError,
    UnsupportedSpec,
)
from .properties import (
    ReportValue,
    SpectralMeasure,
    _check_level,
    modal_candidates,
    oracle_expectile,
    oracle_expected_shortfall,
    oracle_modal_mass,
    oracle_spectral_risk,
    oracle_variantile,
    window_contains,
)

REPORT_CLAMP = 50.0

Box = list[tuple[float, float]]


@dataclass(frozen=True)
class Loss:
    """An evaluable loss ``L(r, y)`` on reports in ``R^dim``.

    ``target`` (when known) maps a distribution to the list of report values
    the loss should elicit, computed by the independent oracles.  ``discrete``
    pins coordinates to finite index sets; ``candidates`` replaces local
    refinement for discontinuous losses.
    """

    dim: int
    fn: Callable = field(repr=False)
    label: str
    domain_fn: Callable[[FiniteDistribution], Box] = field(repr=False)
    target: Callable[[FiniteDistribution], list[ReportValue]] | None = field(default=None, repr=False)
    discrete: dict = field(default_factory=dict, repr=False)
    discontinuous: bool = False
    candidates: Callable[[FiniteDistribution], np.ndarray] | None = field(default=None, repr=False)
    smooth: bool = True
    spec: dict | None = None

    def eval(self, r, y):
        return self.fn(np.asarray(r, dtype=float), np.asarray(y, dtype=float))

    __call__ = eval

    def risk(self, r, p: FiniteDistribution):
        """Expected loss ``E_p[L(r, .)]``; ``r`` may be a batch of shape ``(m, dim)``."""
        r = np.asarray(r, dtype=float)
        vals = np.asarray(self.fn(r[..., None, :], p.outcomes), dtype=float)
        vals = np.broadcast_to(vals, r.shape[:-1] + (p.size,))
        out = vals @ p.probs
        return float(out) if out.ndim == 0 else out

    def default_domain(self, p: FiniteDistribution) -> Box:
        return [tuple(map(float, b)) for b in self.domain_fn(p)]


# -- weight pairs ------------------------------------------------------------


@dataclass(frozen=True)
class WeightPair:
    """Positive strictly decreasing ``h`` and its antiderivative ``H`` with ``H(0) = 0``."""

    name: str
    h: Callable = field(repr=False)
    H: Callable = field(repr=False)

    def __post_init__(self):
        self.check()

    def check(self, grid=None, eps: float = 1e-5, tol: float = 1e-4):
        grid = np.linspace(-5.0, 5.0, 101) if grid is None else np.asarray(grid, dtype=float)
        h = np.asarray(self.h(grid), dtype=float)
        if not np.all(h > 0):
            raise InvalidWeightPair(f"{self.name}: h must be positive")
        if not np.all(np.diff(h) < 0):
            raise InvalidWeightPair(f"{self.name}: h must be strictly decreasing")
        if abs(float(self.H(np.array(0.0)))) > 1e-12:
            raise InvalidWeightPair(f"{self.name}: H(0) must be 0")
        fd = (np.asarray(self.H(grid + eps)) - np.asarray(self.H(grid))) / eps
        # relative to max(1, h): forward differences of steep h carry O(eps*h') error
        if np.any(np.abs(fd - h) > tol * np.maximum(1.0, np.abs(h))):
            raise InvalidWeightPair(f"{self.name}: H' does not match h")


def _exp_neg_h(r):
    return np.exp(-r)


def _exp_neg_H(r):
    return -np.expm1(-r)


def _logistic_h(r):
    return expit(-r)


def _logistic_H(r):
    # integral of 1/(1+e^x) from 0 to r
    return np.log(2.0) - np.logaddexp(0.0, -np.asarray(r, dtype=float))


EXP_NEG = WeightPair("exp_neg", _exp_neg_h, _exp_neg_H)
LOGISTIC = WeightPair("logistic", _logistic_h, _logistic_H)
WEIGHT_PAIRS = {"exp_neg": EXP_NEG, "logistic": LOGISTIC}


def weight_pair(name: str | WeightPair) -> WeightPair:
    if isinstance(name, WeightPair):
        return name
    try:
        return WEIGHT_PAIRS[name]
    except KeyError:
        raise UnsupportedSpec(f"unknown weight pair {name!r}") from None


# -- domains -----------------------------------------------------------------


def _clamp(lo, hi):
    return (max(lo, -REPORT_CLAMP), min(hi, REPORT_CLAMP))


def location_box(p: FiniteDistribution) -> tuple[float, float]:
    return (p.min - 1.0, p.max + 1.0)


def risk_box(p: FiniteDistribution) -> tuple[float, float]:
    m = float(np.max(np.abs(p.outcomes)))
    return _clamp(-m - 1.0, m + 1.0)


def variance_box(p: FiniteDistribution) -> tuple[float, float]:
    return (-1.0, (p.max - p.min) ** 2 / 4.0 + 1.0)


def bayes_risk_box(base: Loss, p: FiniteDistribution, points: int = 21) -> tuple[float, float]:
    """Bracket for the Bayes risk of ``base`` under ``p``.

    Any report's expected loss is an upper bound; the smallest pointwise loss
    seen on a coarse grid is a working lower bound.  One unit of slack is
    added on each side.
    """
    axes = _coarse_axes(base, base.default_domain(p), points)
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, base.dim)
    table = np.asarray(base.fn(mesh[:, None, :], p.outcomes), dtype=float)
    table = np.broadcast_to(table, (len(mesh), p.size))
    lower = float(table.min()) - 1.0
    upper = float((table @ p.probs).min()) + 1.0
    return _clamp(lower, upper)


def _coarse_axes(loss: Loss, box: Box, points: int):
    per = max(3, int(round(points ** (2.0 / max(loss.dim, 2)))) if loss.dim > 2 else points)
    axes = []
    for i, (lo, hi) in enumerate(box):
        if i in loss.discrete:
            axes.append(np.asarray(loss.discrete[i], dtype=float))
        else:
            axes.append(np.linspace(lo, hi, per))
    return axes


# -- elementary losses -------------------------------------------------------


def _identity(x):
    return np.asarray(x, dtype=float)


def _zero(y):
    return np.zeros_like(np.asarray(y, dtype=float))


MONOTONE_MAPS = {"identity": _identity, "arctan": np.arctan}


def squared_loss() -> Loss:
    def fn(r, y):
        return (r[..., 0] - y) ** 2

    return Loss(
        1,
        fn,
        "squared",
        lambda p: [location_box(p)],
        target=lambda p: [ReportValue([p.mean])],
        spec={"loss": "squared"},
    )


def pinball_loss(alpha: float, f: Callable | None = None, g: Callable | None = None) -> Loss:
    """Generalized piecewise-linear quantile loss ``(1{a>=y} - alpha)(f(a) - f(y)) + g(y)``."""
    alpha = _check_level("alpha", alpha)
    f = _identity if f is None else f
    g = _zero if g is None else g
    grid = np.linspace(-50.0, 50.0, 2001)
    if np.any(np.diff(np.asarray(f(grid), dtype=float)) < -1e-12):
        raise FNotMonotone("f must be nondecreasing")

    def fn(r, y):
        a = r[..., 0]
        return ((a >= y) - alpha) * (f(a) - f(y)) + g(y)

    return Loss(
        1,
        fn,
        f"pinball(alpha={alpha:g})",
        lambda p: [location_box(p)],
        target=lambda p: [ReportValue([quantile_set(p, alpha)])],
        smooth=False,
        spec={"loss": "pinball", "alpha": alpha},
    )


def asymmetric_squared_loss(tau: float) -> Loss:
    tau = _check_level("tau", tau)

    def fn(r, y):
        x = r[..., 0]
        return np.abs((x >= y) - tau) * (x - y) ** 2

    return Loss(
        1,
        fn,
        f"asymmetric_squared(tau={tau:g})",
        lambda p: [location_box(p)],
        target=lambda p: [ReportValue([oracle_expectile(p, tau)])],
        spec={"loss": "asymmetric_squared", "tau": tau},
    )


def _features(X, y):
    y = np.asarray(y, dtype=float)
    v = np.asarray(X(y), dtype=float)
    if v.shape == y.shape:
        v = v[..., None]
    return v


def bregman_loss(G: Callable, dG: Callable, X: Callable, dim: int, check_box: float = 5.0) -> Loss:
    """``-(G(r) + dG(r)·(X(y) - r))``: elicits ``E_p[X]`` with Bayes risk ``-G(E_p[X])``."""
    rng = np.random.default_rng(0)
    a = rng.uniform(-check_box, check_box, size=(500, dim))
    b = rng.uniform(-check_box, check_box, size=(500, dim))
    ga, gb, gm = (np.asarray(G(v), dtype=float) for v in (a, b, 0.5 * (a + b)))
    if np.any(gm > 0.5 * (ga + gb) + 1e-12 * (1 + np.abs(ga) + np.abs(gb))):
        raise GNotConvex("G fails the midpoint convexity check")

    def fn(r, y):
        x = _features(X, y)
        return -(G(r) + np.sum(dG(r) * (x - r), axis=-1))

    def domain(p):
        vals = _features(X, p.outcomes)
        return [(float(c.min()) - 1.0, float(c.max()) + 1.0) for c in vals.T]

    def target(p):
        return [ReportValue(np.atleast_1d(expectation(p, lambda y: _features(X, y))))]

    return Loss(dim, fn, "bregman", domain, target=target, spec={"loss": "bregman"})


def sqnorm_bregman_loss(features: str = "identity") -> Loss:
    from .properties import FEATURE_MAPS, _sqnorm

    X = FEATURE_MAPS[features]
    dim = _features(X, np.zeros(1)).shape[-1]
    loss = bregman_loss(_sqnorm, lambda r: 2.0 * r, X, dim)
    return _respec(loss, {"loss": "bregman", "G": "sqnorm", "X": features})


def es_base_loss(alpha: float) -> Loss:
    """``(a - y) 1{a >= y} / alpha - a``, whose Bayes risk is expected shortfall."""
    alpha = _check_level("alpha", alpha)

    def fn(r, y):
        a = r[..., 0]
        return (a - y) * (a >= y) / alpha - a

    return Loss(
        1,
        fn,
        f"es_base(alpha={alpha:g})",
        lambda p: [location_box(p)],
        target=lambda p: [ReportValue([quantile_set(p, alpha)])],
        smooth=False,
        spec={"loss": "es_base", "alpha": alpha},
    )


def modal_interval_loss(beta: float) -> Loss:
    """0/1 miss indicator ``1{|x - y| > beta}``; one minus its Bayes risk is modal mass."""
    beta = float(beta)
    if not beta > 0:
        raise InvalidParameter(f"beta must be positive, got {beta}")

    def fn(r, y):
        return 1.0 - window_contains(r[..., 0], y, beta).astype(float)

    def candidates(p):
        b, mids = modal_candidates(p, beta)
        return np.sort(np.concatenate([b, mids]))[:, None]

    def target(p):
        return [ReportValue([c]) for c in oracle_modal_mass(p, beta).centers]

    return Loss(
        1,
        fn,
        f"modal(beta={beta:g})",
        lambda p: [(p.min - beta - 1.0, p.max + beta + 1.0)],
        target=target,
        discontinuous=True,
        candidates=candidates,
        smooth=False,
        spec={"loss": "modal", "beta": beta},
    )


def cdf_loss(points: Sequence[float], beta: float = 0.5) -> Loss:
    """Separable loss ``sum_i beta^i (r_i - 1{y <= q_i})^2`` eliciting ``F(q_i)``."""
    q = np.asarray(points, dtype=float)
    if q.ndim != 1 or len(q) < 1:
        raise InvalidParameter("cdf_loss needs at least one point")
    beta = float(beta)
    if not 0.0 < beta < 1.0:
        raise InvalidParameter(f"beta must lie in (0, 1), got {beta}")
    weights = beta ** np.arange(1, len(q) + 1)

    def fn(r, y):
        y = np.asarray(y, dtype=float)
        total = 0.0
        for i in range(len(q)):
            total = total + weights[i] * (r[..., i] - (y <= q[i])) ** 2
        return total

    return Loss(
        len(q),
        fn,
        f"cdf(K={len(q)})",
        lambda p: [(-0.5, 1.5)] * len(q),
        target=lambda p: [ReportValue(np.atleast_1d(cdf(p, q)))],
        spec={"loss": "cdf", "points": q.tolist(), "beta": beta},
    )


# -- Bayes-risk constructions ------------------------------------------------


@dataclass(frozen=True)
class IndexedFamily:
    """Functions ``X_a(y)`` indexed by ``a`` in a box or a finite index list.

    ``X(a, y)`` receives ``a`` with shape ``(..., k)``.  ``oracle`` optionally
    returns the exact ``[(min_a E_p[X_a], a*), ...]`` reports for checking.
    """

    X: Callable = field(repr=False)
    k: int = 1
    box: Callable | Box | None = field(default=None, repr=False)
    indices: tuple | None = None
    oracle: Callable | None = field(default=None, repr=False)
    name: str = "family"

    def __post_init__(self):
        if (self.box is None) == (self.indices is None):
            raise InvalidParameter("give exactly one of box or indices")
        if self.indices is not None and self.k != 1:
            raise InvalidParameter("finite index lists are one-dimensional")

    def index_box(self, p: FiniteDistribution) -> Box:
        if self.indices is not None:
            return [(float(min(self.indices)), float(max(self.indices)))]
        return list(self.box(p)) if callable(self.box) else list(self.box)

    @classmethod
    def from_table(cls, indices, outcomes, table, name: str = "table") -> "IndexedFamily":
        """Family given as ``table[i][j] = X_{indices[i]}(outcomes[j])``."""
        idx = np.asarray(indices, dtype=float)
        out = np.asarray(outcomes, dtype=float)
        tab = np.asarray(table, dtype=float)
        if tab.shape != (len(idx), len(out)):
            raise InvalidParameter(f"table shape {tab.shape} != ({len(idx)}, {len(out)})")
        io_, oo = np.argsort(idx), np.argsort(out)
        idx, out, tab = idx[io_], out[oo], tab[io_][:, oo]

        def lookup(sorted_vals, x):
            j = np.clip(np.searchsorted(sorted_vals, x), 0, len(sorted_vals) - 1)
            return j, sorted_vals[j] == x

        def X(a, y):
            a0 = np.asarray(a, dtype=float)[..., 0]
            ia, oka = lookup(idx, a0)
            iy, oky = lookup(out, np.asarray(y, dtype=float))
            ia, iy = np.broadcast_arrays(ia, iy)
            vals = tab[ia, iy]
            return np.where(oka & oky, vals, np.nan)

        def oracle(p):
            means = np.array([p.probs @ X(np.array([a]), p.outcomes) for a in idx])
            best = means.min()
            return [ReportValue([best, a]) for a, m in zip(idx, means) if m <= best + 1e-12]

        return cls(X, 1, indices=tuple(idx.tolist()), oracle=oracle, name=name)


def squared_deviation_family() -> IndexedFamily:
    """``X_a(y) = (y - a)^2`` over a data-driven box; the minimum is the variance at the mean."""

    def X(a, y):
        return (y - np.asarray(a)[..., 0]) ** 2

    def oracle(p):
        m = p.mean
        return [ReportValue([float(p.probs @ (p.outcomes - m) ** 2), m])]

    return IndexedFamily(X, 1, box=lambda p: [location_box(p)], oracle=oracle, name="squared_deviation")


def min_construction_loss(family: IndexedFamily, w: WeightPair | str = "exp_neg") -> Loss:
    """``H(r) + h(r)(X_a(y) - r)`` on joint reports ``(r, a)``."""
    w = weight_pair(w)
    k = family.k

    def fn(r, y):
        s = r[..., 0]
        return w.H(s) + w.h(s) * (family.X(r[..., 1:], y) - s)

    def domain(p):
        abox = family.index_box(p)
        if family.indices is not None:
            grid = np.asarray(family.indices, dtype=float)[:, None]
        else:
            axes = [np.linspace(lo, hi, 21 if k <= 2 else 7) for lo, hi in abox]
            grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, k)
        vals = np.asarray(family.X(grid[:, None, :], p.outcomes), dtype=float)
        return [_clamp(float(np.nanmin(vals)) - 1.0, float(np.nanmax(vals)) + 1.0)] + abox

    discrete = {1: family.indices} if family.indices is not None else {}
    return Loss(
        1 + k,
        fn,
        f"min_construction({family.name}, {w.name})",
        domain,
        target=family.oracle,
        discrete=discrete,
        smooth=family.indices is None,
        spec={"loss": "min_construction", "family": family.name, "h": w.name},
    )


def bayes_risk_joint_loss(
    base: Loss, surrogate: Loss | None = None, w: WeightPair | str = "exp_neg"
) -> Loss:
    """``L'(a, y) + H(r) + h(r)(L(a, y) - r)`` on joint reports ``(r, a)``.

    Elicits the Bayes risk of ``base`` together with the property ``base``
    elicits.  ``surrogate`` defaults to the zero map.
    """
    w = weight_pair(w)
    if surrogate is not None and surrogate.dim != base.dim:
        raise InvalidParameter("surrogate must share the base loss dimension")
    k = base.dim

    def fn(r, y):
        s, a = r[..., 0], r[..., 1:]
        val = w.H(s) + w.h(s) * (base.fn(a, y) - s)
        if surrogate is not None:
            val = val + surrogate.fn(a, y)
        return val

    def domain(p):
        return [bayes_risk_box(base, p)] + base.default_domain(p)

    target = None
    if base.target is not None:

        def target(p):
            out = []
            for rv in base.target(p):
                risk = base.risk(rv.point(), p)
                out.append(ReportValue([risk, *rv]))
            return out

    discrete = {i + 1: v for i, v in base.discrete.items()}
    spec = {"loss": "bayes_risk_joint", "base": base.spec, "h": w.name}
    if surrogate is not None:
        spec["surrogate"] = surrogate.spec
    return Loss(
        1 + k,
        fn,
        f"bayes_risk_joint({base.label}, {w.name})",
        domain,
        target=target,
        discrete=discrete,
        smooth=base.smooth and (surrogate is None or surrogate.smooth),
        spec=spec,
    )


def _respec(loss: Loss, spec: dict, target=None, domain_fn=None, label=None) -> Loss:
    from dataclasses import replace

    kw = {"spec": spec}
    if target is not None:
        kw["target"] = target
    if domain_fn is not None:
        kw["domain_fn"] = domain_fn
    if label is not None:
        kw["label"] = label
    return replace(loss, **kw)


def variance_joint_loss(w: WeightPair | str = "exp_neg") -> Loss:
    """Squared loss lifted to jointly elicit ``(variance, mean)``."""
    w = weight_pair(w)
    loss = bayes_risk_joint_loss(squared_loss(), None, w)

    def target(p):
        m = p.mean
        return [ReportValue([float(p.probs @ (p.outcomes - m) ** 2), m])]

    def domain(p):
        return [variance_box(p), location_box(p)]

    return _respec(loss, {"loss": "variance_joint", "h": w.name}, target, domain, f"variance_joint({w.name})")


def variance_alt_loss() -> Loss:
    """Polynomial loss on ``(x, v)`` eliciting ``(mean, variance)`` outside the lifted family."""

    def fn(r, y):
        x, v = r[..., 0], r[..., 1]
        s = x + y
        d = x - y
        return v**2 + v * d * (2 * s + 1) + d**2 * (s**2 + s + 1)

    def target(p):
        m = p.mean
        return [ReportValue([m, float(p.probs @ (p.outcomes - m) ** 2)])]

    return Loss(
        2,
        fn,
        "variance_alt",
        lambda p: [location_box(p), variance_box(p)],
        target=target,
        spec={"loss": "variance_alt"},
    )


def es_joint_loss(
    alpha: float,
    f: Callable | None = None,
    g: Callable | None = None,
    w: WeightPair | str = "exp_neg",
) -> Loss:
    """Joint loss on ``(r, a)`` eliciting ``(ES_alpha, q_alpha)``.

    ``(1{a>=y} - alpha)(f(a) - f(y)) + h(r) 1{a>=y}(a - y)/alpha - h(r)(a + r) + H(r) + g(y)``
    with ``f`` nondecreasing.
    """
    alpha = _check_level("alpha", alpha)
    w = weight_pair(w)
    f = _identity if f is None else f
    g = _zero if g is None else g
    grid = np.linspace(-50.0, 50.0, 2001)
    if np.any(np.diff(np.asarray(f(grid), dtype=float)) < -1e-12):
        raise FNotMonotone("f must be nondecreasing")

    def fn(r, y):
        s, a = r[..., 0], r[..., 1]
        hit = a >= y
        hs = w.h(s)
        return (
            (hit - alpha) * (f(a) - f(y))
            + hs * hit * (a - y) / alpha
            - hs * (a + s)
            + w.H(s)
            + g(y)
        )

    def target(p):
        return [ReportValue([oracle_expected_shortfall(p, alpha), quantile_set(p, alpha)])]

    return Loss(
        2,
        fn,
        f"es_joint(alpha={alpha:g}, {w.name})",
        lambda p: [risk_box(p), location_box(p)],
        target=target,
        smooth=False,
        spec={"loss": "es_joint", "alpha": alpha, "h": w.name},
    )


def spectral_joint_loss(
    measure: SpectralMeasure | Sequence, w: WeightPair | str = "exp_neg", quantile_surrogate: bool = False
) -> Loss:
    """Joint loss on ``(r, z_1..z_k)`` eliciting a spectral risk and its quantiles.

    One ``z`` coordinate per atom with level below one; atoms at level one are
    absorbed by the ``-y`` term of the variational objective.
    """
    if not isinstance(measure, SpectralMeasure):
        measure = SpectralMeasure(tuple(map(tuple, measure)))
    w = weight_pair(w)
    tail = measure.tail_atoms
    levels = np.array([a for a, _ in tail])
    coefs = np.array([b / a for a, b in tail])
    k = len(tail)

    def objective(z, y):
        total = -np.asarray(y, dtype=float)
        for i in range(k):
            zi = z[..., i]
            total = total + coefs[i] * (zi - y) * ((zi >= y) - levels[i])
        return total

    def fn(r, y):
        s = r[..., 0]
        val = w.H(s) + w.h(s) * (objective(r[..., 1:], y) - s)
        if quantile_surrogate:
            for i in range(k):
                zi = r[..., 1 + i]
                val = val + ((zi >= y) - levels[i]) * (zi - y)
        return val

    def target(p):
        return [ReportValue([oracle_spectral_risk(p, measure)] + [quantile_set(p, a) for a in levels])]

    return Loss(
        1 + k,
        fn,
        f"spectral({measure.to_json()}, {w.name})",
        lambda p: [risk_box(p)] + [location_box(p)] * k,
        target=target,
        smooth=k == 0,
        spec={
            "loss": "spectral",
            "atoms": measure.to_json(),
            "h": w.name,
            "quantile_surrogate": bool(quantile_surrogate),
        },
    )


def variantile_joint_loss(tau: float, w: WeightPair | str = "exp_neg") -> Loss:
    """Asymmetric squared loss lifted to jointly elicit ``(variantile, expectile)``."""
    tau = _check_level("tau", tau)
    w = weight_pair(w)
    loss = bayes_risk_joint_loss(asymmetric_squared_loss(tau), None, w)

    def target(p):
        return [ReportValue([oracle_variantile(p, tau), oracle_expectile(p, tau)])]

    def domain(p):
        return [variance_box(p), location_box(p)]

    return _respec(
        loss, {"loss": "variantile_joint", "tau": tau, "h": w.name}, target, domain,
        f"variantile_joint(tau={tau:g}, {w.name})",
    )


# -- JSON --------------------------------------------------------------------


def loss_from_json(obj) -> Loss:
    """Build a loss from a spec such as ``{"loss": "es_joint", "alpha": 0.5, "h": "exp_neg"}``."""
    if not isinstance(obj, dict) or "loss" not in obj:
        raise ParseError('loss JSON needs a "loss" field')
    name = obj["loss"]
    h = obj.get("h", "exp_neg")
    try:
        if name == "squared":
            return squared_loss()
        if name == "pinball":
            return pinball_loss(obj["alpha"], _monotone(obj.get("f", "identity")))
        if name == "asymmetric_squared":
            return asymmetric_squared_loss(obj["tau"])
        if name == "bregman":
            if obj.get("G", "sqnorm") != "sqnorm":
                raise UnsupportedSpec("only G = sqnorm is available from JSON")
            return sqnorm_bregman_loss(obj.get("X", "identity"))
        if name == "es_base":
            return es_base_loss(obj["alpha"])
        if name == "min_construction":
            if obj.get("family") == "squared_deviation":
                fam = squared_deviation_family()
            else:
                fam = IndexedFamily.from_table(obj["indices"], obj["outcomes"], obj["table"])
            return min_construction_loss(fam, h)
        if name == "bayes_risk_joint":
            sur = obj.get("surrogate")
            return bayes_risk_joint_loss(
                loss_from_json(obj["base"]), None if sur is None else loss_from_json(sur), h
            )
        if name == "variance_joint":
            return variance_joint_loss(h)
        if name == "variance_alt":
            return variance_alt_loss()
        if name == "es_joint":
            return _respec(
                es_joint_loss(obj["alpha"], _monotone(obj.get("f", "identity")), None, h),
                dict(obj),
            )
        if name == "spectral":
            return spectral_joint_loss(obj["atoms"], h, bool(obj.get("quantile_surrogate", False)))
        if name == "variantile_joint":
            return variantile_joint_loss(obj["tau"], h)
        if name == "modal":
            return modal_interval_loss(obj["beta"])
        if name == "cdf":
            return cdf_loss(obj["points"], obj.get("beta", 0.5))
    except KeyError as exc:
        raise ParseError(f"{name} loss spec is missing field {exc}") from None
    except TypeError as exc:
        raise ParseError(f"bad {name} loss spec: {exc}") from None
    raise UnsupportedSpec(f"unknown loss {name!r}")


def _monotone(name: str) -> Callable:
    try:
        return MONOTONE_MAPS[name]
    except KeyError:
        raise UnsupportedSpec(f"unknown monotone map {name!r}") from None
