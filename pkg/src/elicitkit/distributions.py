"""Finite-support distributions on the real line.

Every oracle and every ERM run in the toolkit works over a
:class:`FiniteDistribution`, so expectations, CDFs and quantile sets are exact
sums over the support rather than numerical integrals.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    AlphaOutOfRange,
    ElicitError,
    EmptySample,
    InvalidInterval,
    LambdaOutOfRange,
    LengthMismatch,
    NegativeProbability,
    NonFiniteValue,
    NotNormalized,
    ParseError,
    ZeroTotalMass,
)

__all__ = [
    "FiniteDistribution",
    "Interval",
    "SampleSet",
    "bernoulli",
    "cdf",
    "discretized_normal",
    "expectation",
    "from_samples",
    "load_distribution",
    "make_finite",
    "mix",
    "point_mass",
    "quantile_set",
    "random_finite",
    "read_samples_csv",
    "uniform",
]

INPUT_MASS_TOL = 1e-9
# slack used when comparing accumulated CDF values against a level alpha
CDF_TOL = 1e-12


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lo, hi]``; degenerate when ``lo == hi``."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not lo <= hi:
            raise InvalidInterval(f"interval needs lo <= hi, got [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, x: float) -> "Interval":
        return cls(x, x)

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def degenerate(self) -> bool:
        return self.lo == self.hi

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= x <= self.hi + tol

    def covers(self, other: "Interval", tol: float = 0.0) -> bool:
        """True if ``other`` lies inside this interval, up to ``tol``."""
        return self.lo - tol <= other.lo and other.hi <= self.hi + tol

    def as_list(self) -> list[float]:
        return [self.lo, self.hi]

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"


@dataclass(frozen=True)
class SampleSet:
    """A nonempty bag of i.i.d. draws."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise EmptySample("sample set is empty")
        if not all(math.isfinite(v) for v in vals):
            raise NonFiniteValue("sample contains a non-finite value")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)


class FiniteDistribution:
    """Probability measure with finitely many atoms on the real line.

    Instances are canonical: outcomes strictly increasing, every atom carries
    positive mass, and the masses sum to one to within ``1e-12``.  Build them
    with :func:`make_finite` (or the helpers below) rather than directly.
    """

    __slots__ = ("_outcomes", "_probs", "_cum")

    def __init__(self, outcomes: np.ndarray, probs: np.ndarray):
        outcomes = np.array(outcomes, dtype=float)
        probs = np.array(probs, dtype=float)
        outcomes.setflags(write=False)
        probs.setflags(write=False)
        cum = np.cumsum(probs)
        cum.setflags(write=False)
        self._outcomes = outcomes
        self._probs = probs
        self._cum = cum

    @property
    def outcomes(self) -> np.ndarray:
        return self._outcomes

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    @property
    def size(self) -> int:
        return len(self._outcomes)

    @property
    def min(self) -> float:
        return float(self._outcomes[0])

    @property
    def max(self) -> float:
        return float(self._outcomes[-1])

    @property
    def mean(self) -> float:
        return float(self._probs @ self._outcomes)

    def expect(self, f) -> float | np.ndarray:
        return expectation(self, f)

    def cdf(self, x):
        return cdf(self, x)

    def quantile_set(self, alpha: float) -> Interval:
        return quantile_set(self, alpha)

    def to_dict(self) -> dict:
        return {"outcomes": self._outcomes.tolist(), "probs": self._probs.tolist()}

    def __eq__(self, other):
        if not isinstance(other, FiniteDistribution):
            return NotImplemented
        return np.array_equal(self._outcomes, other._outcomes) and np.array_equal(
            self._probs, other._probs
        )

    def __hash__(self):
        return hash((self._outcomes.tobytes(), self._probs.tobytes()))

    def __repr__(self):
        pairs = ", ".join(f"{y:g}: {w:.6g}" for y, w in zip(self._outcomes, self._probs))
        return f"FiniteDistribution({{{pairs}}})"


def make_finite(outcomes: Sequence[float], probs: Sequence[float]) -> FiniteDistribution:
    """Canonical distribution from parallel outcome/probability lists.

    Duplicate outcomes are merged by summing their mass and zero-mass atoms are
    dropped.  The masses must already sum to one within ``1e-9``; they are then
    renormalized exactly.
    """
    y = np.asarray(outcomes, dtype=float).ravel()
    w = np.asarray(probs, dtype=float).ravel()
    if y.shape != w.shape:
        raise LengthMismatch(f"{len(y)} outcomes but {len(w)} probabilities")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(w))):
        raise NonFiniteValue("outcomes and probabilities must be finite")
    if np.any(w < 0):
        raise NegativeProbability(f"negative probability {w.min()!r}")
    total = w.sum()
    if total <= 0:
        raise ZeroTotalMass("probabilities sum to zero")
    if abs(total - 1.0) > INPUT_MASS_TOL:
        raise NotNormalized(f"probabilities sum to {total!r}, not 1")
    uniq, inverse = np.unique(y, return_inverse=True)
    merged = np.zeros(len(uniq))
    np.add.at(merged, inverse, w)
    keep = merged > 0
    uniq, merged = uniq[keep], merged[keep]
    return FiniteDistribution(uniq, merged / merged.sum())


def point_mass(c: float) -> FiniteDistribution:
    return FiniteDistribution(np.array([float(c)]), np.array([1.0]))


def uniform(values: Iterable[float]) -> FiniteDistribution:
    values = list(values)
    return make_finite(values, np.full(len(values), 1.0 / len(values)))


def bernoulli(p: float, lo: float = 0.0, hi: float = 1.0) -> FiniteDistribution:
    return make_finite([lo, hi], [1.0 - p, p])


def discretized_normal(
    loc: float = 0.0, scale: float = 1.0, n: int = 21, width: float = 3.0
) -> FiniteDistribution:
    """``n`` equally spaced atoms over ``loc ± width*scale`` with Gaussian weights."""
    z = np.linspace(-width, width, n)
    w = np.exp(-0.5 * z**2)
    return make_finite(loc + scale * z, w / w.sum())


def random_finite(
    rng: np.random.Generator, n: int = 5, low: float = -2.0, high: float = 3.0, decimals: int = 2
) -> FiniteDistribution:
    """Random ``n``-atom distribution: rounded uniform outcomes, Dirichlet(1) masses."""
    while True:
        y = np.round(rng.uniform(low, high, size=n), decimals)
        if len(np.unique(y)) == n:
            break
    w = rng.dirichlet(np.ones(n))
    return make_finite(y, w / w.sum())


def mix(p: FiniteDistribution, q: FiniteDistribution, lam: float) -> FiniteDistribution:
    """The mixture ``lam*p + (1-lam)*q``."""
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise LambdaOutOfRange(f"mixing weight must lie in [0, 1], got {lam}")
    y = np.concatenate([p.outcomes, q.outcomes])
    w = np.concatenate([lam * p.probs, (1.0 - lam) * q.probs])
    return make_finite(y, w)


def expectation(p: FiniteDistribution, f: Callable) -> float | np.ndarray:
    """``sum_i probs_i * f(outcomes_i)``.

    ``f`` receives the whole outcome array and must act elementwise; it may
    return one value per outcome (shape ``(n,)``) or a vector per outcome
    (shape ``(n, k)``), in which case a length-``k`` array comes back.
    """
    vals = np.asarray(f(p.outcomes), dtype=float)
    if vals.ndim == 0:
        vals = np.full(p.size, float(vals))
    if vals.shape[0] != p.size:
        raise LengthMismatch(f"f returned shape {vals.shape} for {p.size} outcomes")
    if not np.all(np.isfinite(vals)):
        raise NonFiniteValue("f is not finite on the support")
    out = p.probs @ vals
    return float(out) if np.ndim(out) == 0 else out


def cdf(p: FiniteDistribution, x):
    """Right-continuous CDF ``P[y <= x]``; vectorized over ``x``."""
    idx = np.searchsorted(p.outcomes, x, side="right")
    cum = np.concatenate([[0.0], p._cum])
    out = np.minimum(cum[idx], 1.0)
    return float(out) if np.ndim(out) == 0 else out


def quantile_set(p: FiniteDistribution, alpha: float) -> Interval:
    """All ``x`` with ``F(x-) <= alpha <= F(x)``.

    The set is a closed interval: its left end is the generalized inverse of
    the CDF, and it extends to the next atom whenever the CDF sits exactly at
    ``alpha`` there.
    """
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise AlphaOutOfRange(f"alpha must lie in (0, 1), got {alpha}")
    cum = p._cum
    j = int(np.searchsorted(cum, alpha - CDF_TOL, side="left"))
    j = min(j, p.size - 1)
    lo = p.outcomes[j]
    if abs(cum[j] - alpha) <= CDF_TOL and j + 1 < p.size:
        return Interval(lo, p.outcomes[j + 1])
    return Interval(lo, lo)


def from_samples(s: SampleSet | Sequence[float]) -> FiniteDistribution:
    """Empirical distribution: weight ``count/n`` per distinct value."""
    if not isinstance(s, SampleSet):
        s = SampleSet(tuple(s))
    vals, counts = np.unique(np.asarray(s.values), return_counts=True)
    return FiniteDistribution(vals, counts / counts.sum())


# -- serialization ----------------------------------------------------------


def distribution_from_dict(obj) -> FiniteDistribution:
    if not isinstance(obj, dict) or "outcomes" not in obj or "probs" not in obj:
        raise ParseError('distribution JSON needs "outcomes" and "probs"')
    try:
        return make_finite(obj["outcomes"], obj["probs"])
    except ElicitError:
        raise
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad distribution: {exc}") from exc


def read_samples_csv(source: str | Path | io.TextIOBase) -> SampleSet:
    """Samples from CSV text: one real per row, optional header ``y``.

    Any row that does not parse as a single finite real aborts with
    :class:`ParseError`; nothing is silently dropped.
    """
    if isinstance(source, (str, Path)) and Path(source).exists():
        text = Path(source).read_text()
    elif isinstance(source, io.TextIOBase):
        text = source.read()
    else:
        text = str(source)
    values = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 1:
            raise ParseError(f"line {lineno}: expected one column, got {len(row)}")
        cell = row[0].strip()
        if lineno == 1 and cell == "y":
            continue
        try:
            v = float(cell)
        except ValueError:
            raise ParseError(f"line {lineno}: cannot parse {cell!r} as a real") from None
        if not math.isfinite(v):
            raise ParseError(f"line {lineno}: non-finite value {cell!r}")
        values.append(v)
    if not values:
        raise ParseError("no samples found")
    return SampleSet(tuple(values))


def load_distribution(path: str | Path) -> FiniteDistribution:
    """Load ``.json`` (distribution) or anything else as a sample CSV."""
    path = Path(path)
    try:
        raw = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if path.suffix.lower() == ".json":
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON: {exc}") from exc
        return distribution_from_dict(obj)
    return from_samples(read_samples_csv(io.StringIO(raw)))
