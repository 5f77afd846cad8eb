"""Independent Mamdani evaluator used as a reference in tests.

Membership shapes are written out from the documented defaults rather than
read from the package, evaluated with ``np.interp`` on corner points, and the
centroid is a numerical integral over a fine output grid.
"""

import numpy as np
from scipy import integrate

T = 1 / 3
Q1, Q2 = 1 + 4 / 3, 1 + 8 / 3

# label -> corner points (x, y) of the piecewise-linear membership
SHAPES = {
    "preference": {
        "hates": [(0, 1), (T, 0)],
        "lukewarm": [(0, 0), (T, 1), (2 * T, 0)],
        "likes": [(T, 0), (2 * T, 1), (1, 0)],
        "loves": [(2 * T, 0), (1, 1)],
    },
    "spread": {
        "tight": [(1, 1), (1.75, 1), (3.25, 0)],
        "wide": [(1.75, 0), (3.25, 1), (4, 1)],
    },
    "bias": {
        "low": [(1, 1), (3, 0)],
        "mid": [(1, 0), (3, 1), (5, 0)],
        "high": [(3, 0), (5, 1)],
    },
    "quality": {
        "bad": [(1, 1), (Q1, 0)],
        "ok": [(1, 0), (Q1, 1), (Q2, 0)],
        "good": [(Q1, 0), (Q2, 1), (5, 0)],
        "great": [(Q2, 0), (5, 1)],
    },
    "rating": {
        "vlow": [(1, 1), (2, 0)],
        "low": [(1, 0), (2, 1), (3, 0)],
        "mid": [(2, 0), (3, 1), (4, 0)],
        "high": [(3, 0), (4, 1), (5, 0)],
        "vhigh": [(4, 0), (5, 1)],
    },
}
UNIVERSE = {"preference": (0, 1), "spread": (1, 4), "bias": (1, 5), "quality": (1, 5), "rating": (1, 5)}


def mu(var, label, x):
    pts = SHAPES[var][label]
    xs, ys = zip(*pts)
    # zero outside the listed corners
    return np.interp(x, xs, ys, left=0.0 if ys[0] == 0 else ys[0], right=0.0 if ys[-1] == 0 else ys[-1])


def centroid(rules, inputs, step=0.001, discrete=False):
    """Crisp output for ``inputs`` under ``rules`` given as ((var, label), ...) -> label."""
    lo, hi = UNIVERSE["rating"]
    x = np.linspace(lo, hi, int(round((hi - lo) / step)) + 1)
    agg = np.zeros_like(x)
    for antecedent, out_label in rules:
        strength = min(mu(v, lbl, np.clip(inputs[v], *UNIVERSE[v])) for v, lbl in antecedent)
        if strength > 0:
            agg = np.maximum(agg, np.minimum(strength, mu("rating", out_label, x)))
    if discrete:
        return float((x * agg).sum() / agg.sum())
    return float(integrate.trapezoid(x * agg, x) / integrate.trapezoid(agg, x))


def rules_of(rulebase):
    return [(tuple(r.antecedent), r.consequent[1]) for r in rulebase]
