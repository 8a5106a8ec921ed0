"""Sampled tests of structural facts: convex level sets and concave Bayes risks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .distributions import FiniteDistribution, make_finite, mix
from .errors import PairNotOnCommonLevelSet, PairOnSameLevelSet
from .properties import PropertySpec, oracle_bayes_risk

LEVEL_TOL = 1e-8
VIOLATION_TOL = 1e-4
SEPARATION_TOL = 1e-4
DEFAULT_LAMBDAS = tuple(round(0.1 * i, 1) for i in range(1, 10))


def _gap(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        return float("inf")
    return float(np.max(np.abs(a - b))) if a.size else 0.0


@dataclass
class ConvexityReport:
    passed: bool
    counterexample: tuple | None = None
    tested: int = 0
    max_violation: float = 0.0

    def to_json(self) -> dict:
        ce = None
        if self.counterexample is not None:
            p, q, lam, gp, gm = self.counterexample
            ce = {"p": p.to_dict(), "q": q.to_dict(), "lambda": lam, "value_p": gp.tolist(), "value_mix": gm.tolist()}
        return {
            "passed": self.passed,
            "counterexample": ce,
            "tested": self.tested,
            "max_violation": self.max_violation,
        }


def level_set_convexity_check(
    spec: PropertySpec,
    pairs: Sequence[tuple[FiniteDistribution, FiniteDistribution]],
    lambdas: Sequence[float] = DEFAULT_LAMBDAS,
    violation_tol: float = VIOLATION_TOL,
) -> ConvexityReport:
    """Look for a mixture leaving the common level set of each pair.

    Stops at the first mixture whose property value moves by more than
    ``violation_tol``; the counterexample is ``(p, q, lam, G(p), G(mix))``.
    """
    for idx, (p, q) in enumerate(pairs):
        gp, gq = spec.vector(p), spec.vector(q)
        if _gap(gp, gq) >= LEVEL_TOL:
            raise PairNotOnCommonLevelSet(f"pair {idx}: values {gp.tolist()} and {gq.tolist()} differ")
    tested, worst = 0, 0.0
    for p, q in pairs:
        gp = spec.vector(p)
        for lam in lambdas:
            gm = spec.vector(mix(p, q, lam))
            tested += 1
            dev = _gap(gm, gp)
            worst = max(worst, dev)
            if dev > violation_tol:
                return ConvexityReport(False, (p, q, float(lam), gp, gm), tested, worst)
    return ConvexityReport(True, None, tested, worst)


@dataclass
class ConcavityReport:
    strict_ok: bool
    min_gap: float
    tested_pairs: int
    nonstrict_ok: bool = True
    gaps: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "strict_ok": self.strict_ok,
            "nonstrict_ok": self.nonstrict_ok,
            "min_gap": self.min_gap,
            "tested_pairs": self.tested_pairs,
            "gaps": [list(g) for g in self.gaps],
        }


def concavity_gaps(
    risk: Callable[[FiniteDistribution], float],
    p: FiniteDistribution,
    q: FiniteDistribution,
    lambdas: Sequence[float] = DEFAULT_LAMBDAS,
) -> np.ndarray:
    """``risk(mix) - chord`` at each mixing weight."""
    rp, rq = risk(p), risk(q)
    return np.array([risk(mix(p, q, lam)) - (lam * rp + (1 - lam) * rq) for lam in lambdas])


def bayes_risk_concavity_check(
    base,
    spec: PropertySpec,
    pairs: Sequence[tuple[FiniteDistribution, FiniteDistribution]],
    lambdas: Sequence[float] = DEFAULT_LAMBDAS,
    strictness: float = 1e-6,
    risk: Callable[[FiniteDistribution], float] | None = None,
    nonstrict_tol: float = 1e-9,
) -> ConcavityReport:
    """Check the Bayes risk of ``base`` lies strictly above every chord.

    Pairs must have property values at least ``1e-4`` apart.  ``risk``
    defaults to the ERM-based Bayes-risk oracle.
    """
    for idx, (p, q) in enumerate(pairs):
        if _gap(spec.vector(p), spec.vector(q)) <= SEPARATION_TOL:
            raise PairOnSameLevelSet(f"pair {idx} shares a property value")
    if risk is None:
        def risk(d):
            return oracle_bayes_risk(d, base)
    gaps = [concavity_gaps(risk, p, q, lambdas) for p, q in pairs]
    min_gap = float(min(g.min() for g in gaps)) if gaps else float("inf")
    return ConcavityReport(
        strict_ok=min_gap > strictness,
        min_gap=min_gap,
        tested_pairs=len(pairs),
        nonstrict_ok=min_gap >= -nonstrict_tol,
        gaps=[g.tolist() for g in gaps],
    )


# -- pair construction helpers ------------------------------------------------


def shift(p: FiniteDistribution, c: float) -> FiniteDistribution:
    return make_finite(p.outcomes + c, p.probs)


def random_dyadic(rng: np.random.Generator, support: Sequence[float], denominator: int = 8, atoms: int = 3):
    """Random distribution on ``atoms`` points of ``support`` with masses in ``1/denominator`` units."""
    pts = rng.choice(np.asarray(support, dtype=float), size=atoms, replace=False)
    cuts = np.sort(rng.choice(np.arange(1, denominator), size=atoms - 1, replace=False))
    units = np.diff(np.concatenate([[0], cuts, [denominator]]))
    return make_finite(pts, units / denominator)


def search_convexity_counterexample(
    spec: PropertySpec,
    seed: int,
    support: Sequence[float],
    trials: int = 400,
    denominator: int = 8,
    atoms: int = 3,
    lambdas: Sequence[float] = (0.5,),
):
    """Seeded random search for a pair on one level set whose mixture leaves it.

    Returns ``(p, q)`` or ``None``.
    """
    rng = np.random.default_rng(seed)
    seen: list[tuple[np.ndarray, FiniteDistribution]] = []
    for _ in range(trials):
        p = random_dyadic(rng, support, denominator, atoms)
        gp = spec.vector(p)
        for gq, q in seen:
            if q == p or _gap(gp, gq) >= LEVEL_TOL:
                continue
            report = level_set_convexity_check(spec, [(q, p)], lambdas)
            if not report.passed:
                return q, p
        seen.append((gp, p))
    return None
