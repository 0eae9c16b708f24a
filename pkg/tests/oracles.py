"""Independent reference implementations the tests compare against.

Everything here is deliberately written in the most obvious way
available, separate from the package's implementations: an adaptive
high-precision integrator instead of fixed-step RK4, brute-force scans
instead of vectorized assignment, direct product formulas instead of
log-space recursions. Slow is fine; these only run in tests.
"""

from __future__ import annotations

import itertools
import math

from scipy.integrate import solve_ivp

from betamix import vomm

LORENZ_A, LORENZ_R, LORENZ_B = 16.0, 45.0, 4.0


def reference_endpoint(ic, t_end, a=LORENZ_A, r=LORENZ_R, b=LORENZ_B):
    """High-precision endpoint of the Lorenz flow (adaptive DOP853)."""

    def deriv(_t, s):
        x, y, z = s
        return [a * (y - x), x * (r - z) - y, x * y - b * z]

    sol = solve_ivp(deriv, (0.0, t_end), list(ic), method="DOP853", rtol=1e-12, atol=1e-12)
    return tuple(sol.y[:, -1])


def rk4_endpoint_textbook(ic, h, steps, a=LORENZ_A, r=LORENZ_R, b=LORENZ_B):
    """A second, independently written classical RK4 (tuple arithmetic)."""

    def f(s):
        x, y, z = s
        return (a * (y - x), x * (r - z) - y, x * y - b * z)

    def step(s):
        k1 = f(s)
        k2 = f(tuple(s[i] + 0.5 * h * k1[i] for i in range(3)))
        k3 = f(tuple(s[i] + 0.5 * h * k2[i] for i in range(3)))
        k4 = f(tuple(s[i] + h * k3[i] for i in range(3)))
        return tuple(s[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(3))

    s = tuple(ic)
    for _ in range(steps):
        s = step(s)
    return s


def nna_scan(target, points, mode, plane="xy", dabby_rule="ge"):
    """Brute-force nearest neighbor over explicit candidate lists."""
    axes = {"xy": (0, 1), "xz": (0, 2), "yz": (1, 2)}[plane]
    if mode == "euclid2d":
        dists = [
            (target[axes[0]] - p[axes[0]]) ** 2 + (target[axes[1]] - p[axes[1]]) ** 2
            for p in points
        ]
    elif mode == "euclid3d":
        dists = [sum((target[i] - p[i]) ** 2 for i in range(3)) for p in points]
    elif mode == "dabbyx":
        best = None
        for index, p in enumerate(points):
            admissible = p[0] >= target[0] if dabby_rule == "ge" else p[0] <= target[0]
            if not admissible:
                continue
            d = abs(p[0] - target[0])
            if best is None or d < best[0]:
                best = (d, index)
        return best[1] if best is not None else None
    else:
        raise ValueError(mode)
    best_index = 0
    for index in range(1, len(dists)):
        if dists[index] < dists[best_index]:
            best_index = index
    return best_index


def assignment_metrics_scan(ks):
    """Effect and change computed the obvious way."""
    changed = [j for j, k in enumerate(ks) if k != j]
    effect = len(changed)
    displacements = [abs(ks[j] - j) for j in changed if ks[j] is not None]
    change = sum(displacements) / len(displacements) if displacements else 0.0
    return effect, change


def kt_probability(zeros, ones):
    """KT estimator by sequential product: P = prod (count + 1/2)/(total + 1)."""
    p = 1.0
    a = b = 0
    for _ in range(zeros):
        p *= (a + 0.5) / (a + b + 1.0)
        a += 1
    for _ in range(ones):
        p *= (b + 0.5) / (a + b + 1.0)
        b += 1
    return p


def brute_interpolate(model, prefix, suffix, j_max):
    """Re-enumerate every insertion and rescore through the public API."""
    head = list(prefix)[-model.max_order :]
    tail = list(suffix)[: model.max_order]
    best = None
    count = 0
    for length in range(j_max + 1):
        for combo in itertools.product(model.alphabet, repeat=length):
            count += 1
            bits = vomm.likelihood(model, head + list(combo) + tail).total_bits
            if best is None or bits < best[1]:
                best = (combo, bits)
    return best[0], best[1], count


def shannon_bits(probabilities):
    """-log2 of a probability product, for hand-built chains."""
    total = 0.0
    for p in probabilities:
        total -= math.log2(p)
    return total
