"""Direct, loss-free evaluators for every property the toolkit elicits.

These oracles are the ground truth that ERM runs are checked against, so they
are computed straight from the definitions: moments by summation, expectiles
by bisection on their first-order condition, expected shortfall by scanning
its piecewise-linear variational objective at every atom, and so on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import bisect

from .distributions import FiniteDistribution, Interval, expectation, quantile_set
from .errors import (
    AlphaOutOfRange,
    InvalidParameter,
    NonFiniteValue,
    ParseError,
    UnsupportedSpec,
)

EXPECTILE_XTOL = 1e-12

KINDS = (
    "Mean",
    "RawMoment",
    "CentralMoment",
    "Variance",
    "Quantile",
    "Expectile",
    "Variantile",
    "ExpectedShortfall",
    "SpectralRisk",
    "ModalMass",
    "ConvexOfMean",
    "BayesRisk",
)


def _check_level(name: str, value: float, upper_closed: bool = False) -> float:
    value = float(value)
    ok = 0.0 < value <= 1.0 if upper_closed else 0.0 < value < 1.0
    if not ok:
        interval = "(0, 1]" if upper_closed else "(0, 1)"
        raise AlphaOutOfRange(f"{name} must lie in {interval}, got {value}")
    return value


@dataclass(frozen=True)
class SpectralMeasure:
    """Finitely supported mixing measure ``sum_i beta_i * delta(alpha_i)``."""

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        atoms = tuple((float(a), float(b)) for a, b in self.atoms)
        if not atoms:
            raise InvalidParameter("spectral measure needs at least one atom")
        for a, b in atoms:
            _check_level("atom level", a, upper_closed=True)
            if not b > 0:
                raise InvalidParameter(f"atom weight must be positive, got {b}")
        levels = [a for a, _ in atoms]
        if len(set(levels)) != len(levels):
            raise InvalidParameter("atom levels must be distinct")
        if abs(sum(b for _, b in atoms) - 1.0) > 1e-12:
            raise InvalidParameter("atom weights must sum to 1")
        object.__setattr__(self, "atoms", tuple(sorted(atoms)))

    @property
    def tail_atoms(self) -> tuple[tuple[float, float], ...]:
        """Atoms with level below one; each needs its own quantile coordinate."""
        return tuple((a, b) for a, b in self.atoms if a < 1.0)

    @property
    def unit_weight(self) -> float:
        return sum(b for a, b in self.atoms if a == 1.0)

    def to_json(self) -> list[list[float]]:
        return [[a, b] for a, b in self.atoms]


class ReportValue(tuple):
    """A report vector whose components are reals or :class:`Interval` sets."""

    def __new__(cls, components: Sequence = ()):
        comps = []
        for c in components:
            if isinstance(c, Interval):
                comps.append(c)
            elif isinstance(c, (list, tuple)) and len(c) == 2:
                comps.append(Interval(c[0], c[1]))
            else:
                comps.append(float(c))
        return super().__new__(cls, comps)

    def point(self) -> np.ndarray:
        """Scalar representative: interval components collapse to their midpoint."""
        return np.array([c.mid if isinstance(c, Interval) else c for c in self])

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([c.lo if isinstance(c, Interval) else c for c in self])
        hi = np.array([c.hi if isinstance(c, Interval) else c for c in self])
        return lo, hi

    def to_json(self) -> list:
        return [c.as_list() if isinstance(c, Interval) else c for c in self]

    def __repr__(self):
        return f"ReportValue({list(self)!r})"


class ModalMass(NamedTuple):
    mass: float
    centers: list[Interval]


# -- oracles ------------------------------------------------------------------


def oracle_mean_and_moments(p: FiniteDistribution, spec: "PropertySpec") -> float:
    y = p.outcomes
    if spec.kind == "Mean":
        return p.mean
    if spec.kind == "RawMoment":
        return float(p.probs @ y**spec.order)
    if spec.kind == "CentralMoment":
        return float(p.probs @ (y - p.mean) ** spec.order)
    if spec.kind == "Variance":
        return float(p.probs @ (y - p.mean) ** 2)
    raise UnsupportedSpec(f"{spec.kind} is not a moment property")


def expectile_identification_value(p: FiniteDistribution, tau: float, x: float) -> float:
    """``E_p[|1{x >= y} - tau| (x - y)]``; increasing in ``x``."""
    y = p.outcomes
    w = np.abs((x >= y).astype(float) - tau)
    return float(p.probs @ (w * (x - y)))


def oracle_expectile(p: FiniteDistribution, tau: float) -> float:
    tau = _check_level("tau", tau)
    lo, hi = p.min, p.max
    if lo == hi:
        return lo
    f = lambda x: expectile_identification_value(p, tau, x)  # noqa: E731
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    return float(bisect(f, lo, hi, xtol=EXPECTILE_XTOL, maxiter=500))


def oracle_variantile(p: FiniteDistribution, tau: float) -> float:
    tau = _check_level("tau", tau)
    mu = oracle_expectile(p, tau)
    y = p.outcomes
    w = np.abs((mu >= y).astype(float) - tau)
    return float(p.probs @ (w * (mu - y) ** 2))


def es_objective(p: FiniteDistribution, alpha: float, z) -> float | np.ndarray:
    """``E_p[(z - y) 1{z >= y} / alpha - z]``, vectorized over ``z``."""
    z = np.asarray(z, dtype=float)
    y = p.outcomes
    zz = z[..., None]
    vals = ((zz - y) * (zz >= y)) @ p.probs / alpha - z
    return float(vals) if vals.ndim == 0 else vals


def oracle_expected_shortfall(p: FiniteDistribution, alpha: float) -> float:
    """Infimum of :func:`es_objective` over ``z``.

    The objective is convex and piecewise linear with kinks only at atoms, so
    its minimum is attained at one of them.  ``alpha = 1`` is accepted and
    gives ``-mean``.
    """
    alpha = _check_level("alpha", alpha, upper_closed=True)
    return float(np.min(es_objective(p, alpha, p.outcomes)))


def oracle_spectral_risk(p: FiniteDistribution, measure: SpectralMeasure) -> float:
    return float(sum(b * oracle_expected_shortfall(p, a) for a, b in measure.atoms))


def window_contains(x, y, beta: float):
    """Closed-window membership ``|x - y| <= beta`` with rounding slack."""
    return np.abs(np.asarray(x) - np.asarray(y)) <= beta + 1e-12 * (1.0 + abs(beta))


def modal_candidates(p: FiniteDistribution, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Window-mass breakpoints ``y ± beta`` and the midpoints between them."""
    b = np.unique(np.concatenate([p.outcomes - beta, p.outcomes + beta]))
    mids = 0.5 * (b[:-1] + b[1:])
    return b, mids


def oracle_modal_mass(p: FiniteDistribution, beta: float) -> ModalMass:
    """Largest mass of a closed window ``[x - beta, x + beta]`` and all its centers.

    Window mass, as a function of the center, is piecewise constant and upper
    semicontinuous with breakpoints at ``y ± beta``; checking every breakpoint
    and every gap midpoint therefore sees every value, and the maximizing set
    is a union of closed intervals between breakpoints.
    """
    beta = float(beta)
    if not beta > 0:
        raise InvalidParameter(f"beta must be positive, got {beta}")
    b, mids = modal_candidates(p, beta)
    seq = np.empty(2 * len(b) - 1)
    seq[0::2] = b
    seq[1::2] = mids
    mass = window_contains(seq[:, None], p.outcomes[None, :], beta).astype(float) @ p.probs
    best = float(mass.max())
    hit = mass >= best - 1e-15
    centers = []
    i = 0
    while i < len(seq):
        if hit[i]:
            j = i
            while j + 1 < len(seq) and hit[j + 1]:
                j += 1
            centers.append(Interval(seq[i], seq[j]))
            i = j + 1
        else:
            i += 1
    return ModalMass(best, centers)


def oracle_convex_of_mean(p: FiniteDistribution, G: Callable, X: Callable) -> float:
    m = expectation(p, X)
    val = float(G(np.asarray(m, dtype=float)))
    if not math.isfinite(val):
        raise NonFiniteValue("G is not finite at the mean")
    return val


def oracle_bayes_risk(
    p: FiniteDistribution,
    loss,
    domain: Sequence[tuple[float, float]] | None = None,
    resolution: float = 1e-3,
    config=None,
) -> float:
    """Minimum expected loss, by grid scan plus local refinement.

    The value is an upper bound on the true infimum, accurate to the
    refinement tolerance.  ``resolution`` sets the grid step along each
    continuous report coordinate (subject to the ERM grid-size cap).
    """
    from .erm import ERMConfig, grid_points_for_resolution, minimize

    if config is None:
        box = list(domain) if domain is not None else loss.default_domain(p)
        config = ERMConfig(
            domain=box, grid_points=grid_points_for_resolution(loss, box, resolution)
        )
    return minimize(loss, p, config).min_value


# -- property descriptors -------------------------------------------------------


def _sqnorm(v):
    v = np.asarray(v, dtype=float)
    return np.sum(v * v, axis=-1)


def _identity_features(y):
    return np.asarray(y, dtype=float)


def _moment_features(y):
    y = np.asarray(y, dtype=float)
    return np.stack([y, y * y], axis=-1)


# Named callables usable from JSON specs.
CONVEX_MAPS: dict[str, Callable] = {"sqnorm": _sqnorm}
FEATURE_MAPS: dict[str, Callable] = {"identity": _identity_features, "moments2": _moment_features}


@dataclass(frozen=True)
class PropertySpec:
    """Descriptor of a target property plus its oracle.

    Only the parameters relevant to ``kind`` are set; use the classmethod
    constructors rather than filling fields by hand.
    """

    kind: str
    alpha: float | None = None
    tau: float | None = None
    order: int | None = None
    beta: float | None = None
    measure: SpectralMeasure | None = None
    G: Callable | None = field(default=None, compare=False)
    X: Callable | None = field(default=None, compare=False)
    base: Any = field(default=None, compare=False)
    domain: tuple | None = None
    link: Callable | None = field(default=None, compare=False)
    names: tuple = ()

    def __post_init__(self):
        k = self.kind
        if k not in KINDS:
            raise UnsupportedSpec(f"unknown property kind {k!r}")
        if k in ("Quantile", "ExpectedShortfall"):
            object.__setattr__(self, "alpha", _check_level("alpha", self.alpha))
        if k in ("Expectile", "Variantile"):
            object.__setattr__(self, "tau", _check_level("tau", self.tau))
        if k in ("RawMoment", "CentralMoment"):
            if self.order is None or int(self.order) != self.order or self.order < 1:
                raise InvalidParameter(f"{k} needs a positive integer order")
            object.__setattr__(self, "order", int(self.order))
        if k == "ModalMass" and not (self.beta is not None and self.beta > 0):
            raise InvalidParameter("ModalMass needs beta > 0")
        if k == "SpectralRisk" and not isinstance(self.measure, SpectralMeasure):
            raise InvalidParameter("SpectralRisk needs a SpectralMeasure")
        if k == "ConvexOfMean" and (self.G is None or self.X is None):
            raise InvalidParameter("ConvexOfMean needs G and X")
        if k == "BayesRisk" and self.base is None:
            raise InvalidParameter("BayesRisk needs a base loss")

    # constructors
    @classmethod
    def mean(cls):
        return cls("Mean")

    @classmethod
    def raw_moment(cls, k: int):
        return cls("RawMoment", order=k)

    @classmethod
    def central_moment(cls, n: int):
        return cls("CentralMoment", order=n)

    @classmethod
    def variance(cls):
        return cls("Variance")

    @classmethod
    def quantile(cls, alpha: float):
        return cls("Quantile", alpha=alpha)

    @classmethod
    def expectile(cls, tau: float):
        return cls("Expectile", tau=tau)

    @classmethod
    def variantile(cls, tau: float):
        return cls("Variantile", tau=tau)

    @classmethod
    def expected_shortfall(cls, alpha: float):
        return cls("ExpectedShortfall", alpha=alpha)

    @classmethod
    def spectral_risk(cls, atoms):
        m = atoms if isinstance(atoms, SpectralMeasure) else SpectralMeasure(tuple(map(tuple, atoms)))
        return cls("SpectralRisk", measure=m)

    @classmethod
    def modal_mass(cls, beta: float):
        return cls("ModalMass", beta=beta)

    @classmethod
    def convex_of_mean(cls, G: Callable, X: Callable, names: tuple = ()):
        return cls("ConvexOfMean", G=G, X=X, names=names)

    @classmethod
    def bayes_risk(cls, base, domain=None):
        return cls("BayesRisk", base=base, domain=None if domain is None else tuple(map(tuple, domain)))

    @property
    def is_set_valued(self) -> bool:
        return self.kind in ("Quantile", "ModalMass")

    def evaluate(self, p: FiniteDistribution):
        """Oracle value: a float, an :class:`Interval` (quantiles) or :class:`ModalMass`."""
        k = self.kind
        if k in ("Mean", "RawMoment", "CentralMoment", "Variance"):
            val = oracle_mean_and_moments(p, self)
        elif k == "Quantile":
            return quantile_set(p, self.alpha)
        elif k == "Expectile":
            val = oracle_expectile(p, self.tau)
        elif k == "Variantile":
            val = oracle_variantile(p, self.tau)
        elif k == "ExpectedShortfall":
            val = oracle_expected_shortfall(p, self.alpha)
        elif k == "SpectralRisk":
            val = oracle_spectral_risk(p, self.measure)
        elif k == "ModalMass":
            return oracle_modal_mass(p, self.beta)
        elif k == "ConvexOfMean":
            val = oracle_convex_of_mean(p, self.G, self.X)
        else:
            val = oracle_bayes_risk(p, self.base, domain=self.domain)
        return self.link(val) if self.link is not None else val

    def vector(self, p: FiniteDistribution) -> np.ndarray:
        """Numeric fingerprint used to compare level sets.

        Set-valued quantiles are represented by both endpoints so two
        distributions share a level set only if their quantile sets coincide;
        modal mass is represented by the maximal mass alone.
        """
        val = self.evaluate(p)
        if isinstance(val, Interval):
            return np.array([val.lo, val.hi])
        if isinstance(val, ModalMass):
            return np.array([val.mass])
        return np.atleast_1d(np.asarray(val, dtype=float))

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.alpha is not None:
            out["alpha"] = self.alpha
        if self.tau is not None:
            out["tau"] = self.tau
        if self.kind == "RawMoment":
            out["k"] = self.order
        if self.kind == "CentralMoment":
            out["n"] = self.order
        if self.beta is not None:
            out["beta"] = self.beta
        if self.measure is not None:
            out["atoms"] = self.measure.to_json()
        if self.kind == "ConvexOfMean":
            out["G"], out["X"] = self.names or ("<callable>", "<callable>")
        if self.kind == "BayesRisk":
            out["base"] = getattr(self.base, "spec", None) or self.base.label
        return out


def property_from_json(obj) -> PropertySpec:
    """Parse e.g. ``{"kind": "ExpectedShortfall", "alpha": 0.25}``."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ParseError('property JSON needs a "kind" field')
    kind = obj["kind"]
    try:
        if kind in ("Mean", "Variance"):
            return PropertySpec(kind)
        if kind == "RawMoment":
            return PropertySpec.raw_moment(obj["k"])
        if kind == "CentralMoment":
            return PropertySpec.central_moment(obj["n"])
        if kind in ("Quantile", "ExpectedShortfall"):
            return PropertySpec(kind, alpha=obj["alpha"])
        if kind in ("Expectile", "Variantile"):
            return PropertySpec(kind, tau=obj["tau"])
        if kind == "SpectralRisk":
            return PropertySpec.spectral_risk(obj["atoms"])
        if kind == "ModalMass":
            return PropertySpec.modal_mass(obj["beta"])
        if kind == "ConvexOfMean":
            g, x = obj.get("G", "sqnorm"), obj.get("X", "identity")
            if g not in CONVEX_MAPS or x not in FEATURE_MAPS:
                raise UnsupportedSpec(f"unknown G/X names {g!r}/{x!r}")
            return PropertySpec.convex_of_mean(CONVEX_MAPS[g], FEATURE_MAPS[x], names=(g, x))
        if kind == "BayesRisk":
            from .losses import loss_from_json

            return PropertySpec.bayes_risk(loss_from_json(obj["base"]), obj.get("domain"))
    except KeyError as exc:
        raise ParseError(f"{kind} spec is missing field {exc}") from None
    except TypeError as exc:
        raise ParseError(f"bad {kind} spec: {exc}") from None
    raise UnsupportedSpec(f"unknown property kind {kind!r}")
