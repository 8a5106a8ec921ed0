"""The standard collection of test distributions."""

from __future__ import annotations

import numpy as np

from .distributions import (
    FiniteDistribution,
    bernoulli,
    discretized_normal,
    point_mass,
    random_finite,
    uniform,
)

SUITE_SEED = 20240611


def standard_suite() -> list[tuple[str, FiniteDistribution]]:
    """Named distributions: small uniforms, point masses, a bell curve and seeded random draws."""
    rng = np.random.default_rng(SUITE_SEED)
    out = [
        ("uniform4", uniform([1, 2, 3, 4])),
        ("delta0", point_mass(0.0)),
        ("delta3", point_mass(3.0)),
        ("bernoulli_half", bernoulli(0.5)),
        ("uniform_pm1", uniform([-1, 1])),
        ("bell21", discretized_normal(0.0, 1.0, n=21)),
    ]
    for i in range(3):
        out.append((f"random5_{i}", random_finite(rng, n=5)))
    return out
