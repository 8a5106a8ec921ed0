"""Regenerate the frozen fixture files in this directory.

Run ``python3 tests/fixtures/generate.py``.  Randomized searches use fixed
seeds, so the output is reproducible; the committed JSON files are what the
tests read.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from elicitkit.analysis import search_convexity_counterexample
from elicitkit.distributions import make_finite, uniform
from elicitkit.properties import PropertySpec

HERE = Path(__file__).parent
MODAL_SEED = 0
CONCAVITY_SEED = 7


def d(p):
    return p.to_dict()


def write(name, obj):
    (HERE / name).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def concavity_pairs():
    """Ten pairs of 3-point uniforms whose means differ and whose medians are disjoint."""
    rng = np.random.default_rng(CONCAVITY_SEED)
    pairs = []
    while len(pairs) < 10:
        a = np.round(np.sort(rng.uniform(-3, 3, size=3)), 2)
        b = np.round(np.sort(rng.uniform(-3, 3, size=3)), 2)
        if len(set(a)) < 3 or len(set(b)) < 3:
            continue
        if abs(a[1] - b[1]) < 0.25 or abs(a.mean() - b.mean()) < 0.25:
            continue
        pairs.append([d(uniform(a)), d(uniform(b))])
    return pairs


def main():
    write("u4.json", d(uniform([1, 2, 3, 4])))
    (HERE / "samples.csv").write_text("y\n1\n2\n3\n4\n")
    (HERE / "single.csv").write_text("y\n2.5\n")
    (HERE / "corrupted.csv").write_text("y\n1\n2\nthree\n4\n")

    write("variance_pairs.json", {
        "property": {"kind": "Variance"},
        "pairs": [[d(uniform([-1, 1])), d(uniform([9, 11]))], [d(uniform([0, 2])), d(uniform([-6, -4]))]],
        "expected": "counterexample",
    })
    modal = search_convexity_counterexample(PropertySpec.modal_mass(0.5), MODAL_SEED, range(0, 8))
    write("modal_pairs.json", {
        "property": {"kind": "ModalMass", "beta": 0.5},
        "pairs": [[d(modal[0]), d(modal[1])]],
        "search": {"seed": MODAL_SEED, "support": list(range(0, 8)), "denominator": 8, "atoms": 3},
        "expected": "counterexample",
    })
    write("mean_pairs.json", {
        "property": {"kind": "Mean"},
        "pairs": [
            [d(uniform([-1, 1])), d(uniform([-3, 0, 3]))],
            [d(uniform([1, 2, 3, 4])), d(make_finite([0, 5], [0.5, 0.5]))],
            [d(make_finite([0, 4], [0.75, 0.25])), d(uniform([-2, 1, 4]))],
        ],
        "expected": "passed",
    })
    write("median_pairs.json", {
        "property": {"kind": "Quantile", "alpha": 0.5},
        "pairs": [
            [d(uniform([-1, 0, 5])), d(uniform([-3, 0, 1]))],
            [d(uniform([1, 2, 3, 4, 9])), d(uniform([-7, 0, 3, 5, 6]))],
            [d(make_finite([0, 2, 3], [0.25, 0.5, 0.25])), d(uniform([1, 2, 8]))],
        ],
        "expected": "passed",
    })
    pairs = concavity_pairs()
    write("concavity_pairs_squared.json", {
        "loss": {"loss": "squared"}, "property": {"kind": "Mean"}, "pairs": pairs, "expected": "strict",
    })
    write("concavity_pairs_pinball.json", {
        "loss": {"loss": "pinball", "alpha": 0.5}, "property": {"kind": "Quantile", "alpha": 0.5},
        "pairs": pairs, "expected": "strict",
    })

    write("mu3_family.json", {
        "pair": {"name": "moment", "n": 3},
        "family": [d(uniform([-1, 1])), d(uniform([-2, 2]))],
        "r_prime": [0.0], "r": [0.0], "expected": "flagged",
    })
    write("mu4_family.json", {
        "pair": {"name": "moment", "n": 4},
        "family": [d(make_finite([-2, 0, 2], [3 / 16, 5 / 8, 3 / 16])), d(make_finite([-1, 2], [2 / 3, 1 / 3]))],
        "r_prime": [0.0], "r": [6.0], "expected": "flagged",
    })
    var_family = [d(uniform([-1, 1])), d(make_finite([-2, 0, 2], [1 / 8, 3 / 4, 1 / 8]))]
    write("variance_mean_family.json", {
        "pair": {"name": "variance_mean"}, "family": var_family,
        "r_prime": [0.0], "r": [1.0], "expected": "not_flagged",
    })
    write("es_quantile_family.json", {
        "pair": {"name": "es_quantile", "alpha": 0.25},
        "family": [d(make_finite([-2, 1], [0.25, 0.75])), d(make_finite([-3, -1, 2, 5], [0.125, 0.125, 0.25, 0.5]))],
        "r_prime": [0.0], "r": [2.0], "expected": "not_flagged",
    })
    write("variantile_family.json", {
        "pair": {"name": "variantile_expectile", "tau": 0.5}, "family": var_family,
        "r_prime": [0.0], "r": [0.5], "expected": "not_flagged",
    })

    locs = np.linspace(-1.0, 1.0, 5)
    scales = [0.6, 1.0, 1.4, 2.0]
    ls_family = {"discretized_normal": [[float(m), s] for m in locs for s in scales], "n": 21}
    levels = {1: [0.5], 2: [0.25, 0.75], 3: [0.25, 0.5, 0.75]}
    reports = {1: [0.1], 2: [-0.5, 0.5], 3: [-0.5, 0.1, 0.5]}
    for k in (1, 2, 3):
        write(f"quantiles{k}.json", {
            "identification": {"stack": [{"kind": "Quantile", "alpha": a} for a in levels[k]]},
            "report": reports[k], "family": ls_family, "expected": k,
        })
    p0 = uniform([-1, 0, 2])
    write("features_affhull.json", {
        "identification": {"features": [1, 1, 2]},
        "report": [p0.mean, p0.mean, float(p0.probs @ p0.outcomes**2)],
        "family": [d(p0), d(uniform([0, 1])), d(uniform([-2, 1, 3])), d(make_finite([1, 4], [0.3, 0.7])), d(uniform([-1, 5]))],
        "expected": 2,
    })
    write("dup_mean.json", {
        "identification": {"stack": [{"kind": "Mean"}, {"kind": "Mean"}]},
        "report": [0.5, 0.5], "family": ls_family, "expected": 1,
    })


if __name__ == "__main__":
    main()
