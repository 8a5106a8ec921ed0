"""Identification functions and the numeric diagnostics built on them.

An :class:`IdentificationFunction` maps a single report ``r`` (shape
``(arity,)``) and an outcome array ``y`` (shape ``(n,)``) to an ``(n, dim)``
array.  Its expectation vanishes exactly on the level set of the property it
identifies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .distributions import FiniteDistribution
from .errors import (
    DimensionMismatch,
    EmptyFamily,
    FamilyTooSmall,
    NotOnLevelSet,
    UnsupportedSpec,
)
from .properties import PropertySpec, ReportValue

ZERO_TOL = 1e-8
RANK_RTOL = 1e-8


@dataclass(frozen=True)
class IdentificationFunction:
    dim: int
    fn: Callable = field(repr=False)
    label: str
    arity: int | None = None

    def __post_init__(self):
        if self.arity is None:
            object.__setattr__(self, "arity", self.dim)

    def eval(self, r, y) -> np.ndarray:
        r = _as_report(r)
        if len(r) != self.arity:
            raise DimensionMismatch(f"{self.label} takes {self.arity} report entries, got {len(r)}")
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.asarray(self.fn(r, y), dtype=float)
        return out.reshape(len(y), self.dim)

    __call__ = eval

    def expect(self, r, p: FiniteDistribution) -> np.ndarray:
        """``E_p[V(r, .)]`` as a length-``dim`` vector."""
        return p.probs @ self.eval(r, p.outcomes)


def _as_report(r) -> np.ndarray:
    if isinstance(r, ReportValue):
        return r.point()
    return np.atleast_1d(np.asarray(r, dtype=float))


def _column(v):
    return np.asarray(v, dtype=float)[:, None]


def mean_identification() -> IdentificationFunction:
    return IdentificationFunction(1, lambda r, y: _column(y - r[0]), "mean")


def raw_moment_identification(k: int) -> IdentificationFunction:
    return IdentificationFunction(1, lambda r, y: _column(y**k - r[0]), f"raw_moment({k})")


def quantile_identification(alpha: float) -> IdentificationFunction:
    return IdentificationFunction(1, lambda r, y: _column((r[0] >= y) - alpha), f"quantile({alpha:g})")


def expectile_identification(tau: float) -> IdentificationFunction:
    def fn(r, y):
        x = r[0]
        return _column(np.abs((x >= y) - tau) * (x - y))

    return IdentificationFunction(1, fn, f"expectile({tau:g})")


def standard_identification(spec: PropertySpec) -> IdentificationFunction:
    """Identification for Mean, RawMoment, Quantile or Expectile specs."""
    if spec.kind == "Mean":
        return mean_identification()
    if spec.kind == "RawMoment":
        return raw_moment_identification(spec.order)
    if spec.kind == "Quantile":
        return quantile_identification(spec.alpha)
    if spec.kind == "Expectile":
        return expectile_identification(spec.tau)
    raise UnsupportedSpec(f"no standard identification for {spec.kind}")


def central_moment_identification(n: int) -> IdentificationFunction:
    """Joint identification of ``(mean, mu_n)``: ``(y - r0, (y - r0)^n - r1)``."""
    if int(n) != n or n < 2:
        raise UnsupportedSpec(f"central moment order must be an integer >= 2, got {n}")
    n = int(n)

    def fn(r, y):
        d = y - r[0]
        return np.stack([d, d**n - r[1]], axis=-1)

    return IdentificationFunction(2, fn, f"central_moment({n})")


def conditional_central_moment(n: int) -> IdentificationFunction:
    """``mu_n`` given the mean: ``V(r, r') = (y - r')^n - r`` on inputs ``(r, r')``."""
    n = int(n)
    return IdentificationFunction(
        1, lambda r, y: _column((y - r[1]) ** n - r[0]), f"central_moment({n}) | mean", arity=2
    )


def feature_mean_identification(X: Callable, k: int) -> IdentificationFunction:
    """``X(y) - r`` for a feature map ``X`` into ``R^k``."""

    def fn(r, y):
        v = np.asarray(X(y), dtype=float).reshape(len(y), k)
        return v - r[None, :]

    return IdentificationFunction(k, fn, "feature_mean")


def cdf_identification(points: Sequence[float]) -> IdentificationFunction:
    q = np.asarray(points, dtype=float)
    return IdentificationFunction(
        len(q), lambda r, y: (y[:, None] <= q[None, :]) - r[None, :], f"cdf(K={len(q)})"
    )


def bayes_risk_identification(V: IdentificationFunction, base) -> IdentificationFunction:
    """Identification of ``(Bayes risk, property)`` on joint reports ``(r, a)``.

    Output is ``(V(a, y), L(a, y) - r)`` where ``L`` is the base loss.
    """
    if V.arity != base.dim:
        raise DimensionMismatch(f"{V.label} takes {V.arity} entries but {base.label} has dim {base.dim}")

    def fn(r, y):
        a = r[1:]
        risk = np.asarray(base.fn(a[None, :], y), dtype=float).reshape(len(y))
        return np.concatenate([V.fn(a, y).reshape(len(y), V.dim), _column(risk - r[0])], axis=1)

    return IdentificationFunction(V.dim + 1, fn, f"bayes_risk({V.label}; {base.label})", arity=1 + base.dim)


def stack_identifications(
    V1: IdentificationFunction,
    V2: IdentificationFunction,
    inputs1: Sequence[int] | None = None,
    inputs2: Sequence[int] | None = None,
) -> IdentificationFunction:
    """Concatenate two identifications reading declared coordinates of one report.

    ``inputs1`` / ``inputs2`` list which report coordinates feed each map (in
    the order the map expects them); they default to the leading coordinates.
    """
    in1 = list(range(V1.arity)) if inputs1 is None else list(inputs1)
    in2 = list(range(V2.arity)) if inputs2 is None else list(inputs2)
    if len(in1) != V1.arity or len(in2) != V2.arity:
        raise DimensionMismatch("declared inputs do not match the identification arities")
    if min(in1 + in2) < 0:
        raise DimensionMismatch("report coordinates must be nonnegative")
    arity = max(in1 + in2) + 1
    if set(in1) | set(in2) != set(range(arity)):
        raise DimensionMismatch("every report coordinate must feed one of the maps")

    def fn(r, y):
        a = V1.fn(r[in1], y).reshape(len(y), V1.dim)
        b = V2.fn(r[in2], y).reshape(len(y), V2.dim)
        return np.concatenate([a, b], axis=1)

    return IdentificationFunction(V1.dim + V2.dim, fn, f"[{V1.label}; {V2.label}]", arity=arity)


def zero_identification(dim: int = 1, arity: int = 1) -> IdentificationFunction:
    return IdentificationFunction(dim, lambda r, y: np.zeros((len(y), dim)), "zero", arity=arity)


def linear_recombination(V: IdentificationFunction, M) -> IdentificationFunction:
    """``M @ V``: same level sets whenever ``M`` is invertible."""
    M = np.asarray(M, dtype=float)
    if M.shape != (V.dim, V.dim):
        raise DimensionMismatch(f"mixing matrix must be {V.dim}x{V.dim}")
    return IdentificationFunction(
        V.dim, lambda r, y: V.fn(r, y).reshape(len(y), V.dim) @ M.T, f"mix({V.label})", arity=V.arity
    )


def verify_zero(V: IdentificationFunction, report, p: FiniteDistribution, tol: float = ZERO_TOL):
    """Return ``(ok, residual)`` with ``ok`` iff ``max|E_p V(report, .)| < tol``.

    Interval components of ``report`` are evaluated at their midpoints.
    """
    res = V.expect(report, p)
    return bool(np.max(np.abs(res)) < tol), res


def expectation_matrix(V: IdentificationFunction, r, family: Sequence[FiniteDistribution]) -> np.ndarray:
    return np.array([V.expect(r, p) for p in family])


def numeric_rank(A, rtol: float = RANK_RTOL) -> int:
    s = np.linalg.svd(np.atleast_2d(np.asarray(A, dtype=float)), compute_uv=False)
    if len(s) == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def identification_rank(V: IdentificationFunction, r, family: Sequence[FiniteDistribution]) -> int:
    """Rank of the span of ``{E_p[V(r, .)] : p in family}``."""
    if len(family) == 0:
        raise EmptyFamily("identification_rank needs at least one distribution")
    return numeric_rank(expectation_matrix(V, r, family))


# -- obstruction diagnostic ---------------------------------------------------

EVIDENCE_NOTE = (
    "The conditional identification's sensitivity to the conditioning report "
    "changes across the level set while the other two derivative blocks stay "
    "fixed. Under the smoothness and richness assumptions this rules out joint "
    "elicitation by twice differentiable losses whose gradients commute with "
    "expectation; a finite family gives evidence only, never a certificate."
)
CLEAR_NOTE = "No variation of the conditional derivative block was detected on this family."
BLOCKS_NOTE = "Derivative blocks that should be constant vary; the test does not apply."


@dataclass
class ObstructionReport:
    flagged: bool
    witness: tuple | None
    varying_block_values: tuple
    constant_blocks_ok: bool
    family_size: int
    variation: float
    constant_variation: tuple
    note: str

    def to_json(self) -> dict:
        return {
            "flagged": self.flagged,
            "witness": None if self.witness is None else [w.to_dict() for w in self.witness],
            "varying_block_values": [np.asarray(b).tolist() for b in self.varying_block_values],
            "constant_blocks_ok": self.constant_blocks_ok,
            "family_size": self.family_size,
            "variation": self.variation,
            "constant_variation": list(self.constant_variation),
            "note": self.note,
        }


def _jacobian(V: IdentificationFunction, r: np.ndarray, p: FiniteDistribution, cols: Sequence[int], step: float):
    """Central-difference Jacobian of ``E_p V`` with respect to ``r[cols]``."""
    out = np.empty((V.dim, len(cols)))
    for j, c in enumerate(cols):
        h = step * max(1.0, abs(r[c]))
        up, dn = r.copy(), r.copy()
        up[c] += h
        dn[c] -= h
        out[:, j] = (V.expect(up, p) - V.expect(dn, p)) / (2.0 * h)
    return out


def _spread(blocks: list[np.ndarray]):
    """Largest max-norm deviation among blocks, and the pair attaining it."""
    best, pair = 0.0, (0, 0)
    for i in range(len(blocks)):
        for j in range(i + 1, len(blocks)):
            d = float(np.max(np.abs(blocks[i] - blocks[j]))) if blocks[i].size else 0.0
            if d > best:
                best, pair = d, (i, j)
    return best, pair


def joint_obstruction_diagnostic(
    Vprime: IdentificationFunction,
    V: IdentificationFunction,
    family: Sequence[FiniteDistribution],
    r_prime,
    r,
    fd_step: float = 1e-5,
    vary_tol: float = 1e-4,
    const_tol: float = 1e-6,
) -> ObstructionReport:
    """Finite-difference test for the joint-elicitation obstruction.

    ``Vprime`` identifies ``G'`` at ``r_prime``; ``V`` identifies ``G`` given
    ``G'`` and reads the report ``(r, r_prime)``.  Every family member must
    sit on the common level set.
    """
    family = list(family)
    if len(family) < 2:
        raise FamilyTooSmall("the diagnostic needs at least two distributions")
    rp = _as_report(r_prime)
    rr = _as_report(r)
    k, kp = len(rr), len(rp)
    if Vprime.arity != kp or V.arity != k + kp:
        raise DimensionMismatch("report sizes do not match the identification arities")
    joint = np.concatenate([rr, rp])
    for idx, p in enumerate(family):
        res = np.concatenate([Vprime.expect(rp, p), V.expect(joint, p)])
        if np.max(np.abs(res)) >= ZERO_TOL:
            raise NotOnLevelSet(f"family member {idx} has residual {np.max(np.abs(res)):.3g}")

    cols_r, cols_rp = list(range(k)), list(range(k, k + kp))
    d_cond = [_jacobian(V, joint, p, cols_rp, fd_step) for p in family]
    d_prime = [_jacobian(Vprime, rp, p, list(range(kp)), fd_step) for p in family]
    d_own = [_jacobian(V, joint, p, cols_r, fd_step) for p in family]

    variation, (i, j) = _spread(d_cond)
    c1, _ = _spread(d_prime)
    c2, _ = _spread(d_own)
    constant_ok = c1 < const_tol and c2 < const_tol
    flagged = variation > vary_tol and constant_ok
    if flagged:
        note = EVIDENCE_NOTE
    elif not constant_ok:
        note = BLOCKS_NOTE
    else:
        note = CLEAR_NOTE
    return ObstructionReport(
        flagged=flagged,
        witness=(family[i], family[j]) if flagged else None,
        varying_block_values=(d_cond[i], d_cond[j]),
        constant_blocks_ok=constant_ok,
        family_size=len(family),
        variation=variation,
        constant_variation=(c1, c2),
        note=note,
    )


# -- named property pairs -----------------------------------------------------


def moment_pair(n: int):
    """``(V', V)`` for the mean and the ``n``-th central moment given the mean."""
    return mean_identification(), conditional_central_moment(n)


def bayes_risk_pair(V: IdentificationFunction, base, label: str):
    """``(V', V)`` for a property and the Bayes risk of ``base`` given it."""

    def fn(r, y):
        risk = np.asarray(base.fn(r[1:][None, :], y), dtype=float).reshape(len(y))
        return _column(risk - r[0])

    return V, IdentificationFunction(1, fn, f"{label} | {V.label}", arity=1 + base.dim)


def variance_mean_pair():
    from .losses import squared_loss

    return bayes_risk_pair(mean_identification(), squared_loss(), "variance")


def es_quantile_pair(alpha: float):
    from .losses import es_base_loss

    return bayes_risk_pair(quantile_identification(alpha), es_base_loss(alpha), f"ES({alpha:g})")


def variantile_expectile_pair(tau: float):
    from .losses import asymmetric_squared_loss

    return bayes_risk_pair(expectile_identification(tau), asymmetric_squared_loss(tau), f"variantile({tau:g})")


def es_joint_identification(alpha: float) -> IdentificationFunction:
    """Identification of ``(ES_alpha, q_alpha)`` on reports ``(r, a)``."""
    from .losses import es_base_loss

    return bayes_risk_identification(quantile_identification(alpha), es_base_loss(alpha))


PAIRS = {
    "moment": moment_pair,
    "variance_mean": variance_mean_pair,
    "es_quantile": es_quantile_pair,
    "variantile_expectile": variantile_expectile_pair,
}
