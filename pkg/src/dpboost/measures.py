"""Measures over a finite sample and KL projection onto dense measures.

A measure assigns each of ``n`` examples a weight in [0, 1]. Its density is
``mass / n``; normalizing a measure of density at least ``kappa`` gives a
distribution whose largest entry is at most ``1 / (kappa * n)``.
"""

from __future__ import annotations

import numpy as np

MASS_TOL = 1e-12


def as_measure(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim != 1:
        raise ValueError("a measure is a 1-d weight vector")
    if np.any(~np.isfinite(w)) or np.any(w < 0) or np.any(w > 1):
        raise ValueError("measure weights must lie in [0, 1]")
    return w


def mass(w) -> float:
    return float(np.sum(w))


def density(w) -> float:
    """Fraction ``mass(w) / n`` of the full measure carried by ``w``."""
    w = as_measure(w)
    if w.size == 0:
        raise ValueError("density of an empty measure is undefined")
    return mass(w) / w.size


def normalize(w) -> np.ndarray:
    """Rescale a measure to a probability vector."""
    w = as_measure(w)
    total = mass(w)
    if total <= 0:
        raise ValueError("cannot normalize a measure with zero mass")
    return w / total


def is_smooth(p, kappa: float, tol: float = 1e-12) -> bool:
    """True when no entry of ``p`` exceeds ``1 / (kappa * n)``."""
    p = np.asarray(p, dtype=float)
    return bool(np.max(p) <= 1.0 / (kappa * p.size) + tol)


def statistical_distance(a, b) -> float:
    """Total variation distance ``0.5 * sum |a_i - b_i|``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return 0.5 * float(np.sum(np.abs(a - b)))


def kl_divergence(m, ref) -> float:
    """Generalized KL divergence between nonnegative measures.

    ``sum m_i ln(m_i / ref_i) - m_i + ref_i`` with ``0 ln 0 = 0``.
    """
    m = np.asarray(m, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if m.shape != ref.shape:
        raise ValueError(f"length mismatch: {m.shape} vs {ref.shape}")
    if np.any((m > 0) & (ref <= 0)):
        raise ValueError("infinite divergence: m has mass where ref has none")
    pos = m > 0
    out = np.sum(m[pos] * np.log(m[pos] / ref[pos]))
    return float(out - m.sum() + ref.sum())


def projection_scale(w: np.ndarray, target: float) -> float:
    """Scale ``c >= 1`` with ``sum(min(1, c * w)) == target``.

    Sort weights descending; if the top ``k`` entries are capped at one the
    rest must carry ``target - k`` so ``c = (target - k) / tail_sum(k)``.
    The smallest ``k`` consistent with the cap ordering is the solution.
    """
    s = np.sort(w)[::-1]
    s = s[s > 0]
    if s.size < target - MASS_TOL:
        raise ValueError(
            f"measure has only {s.size} positive weights; cannot reach mass {target}"
        )
    # tail[k] = sum of s[k:]
    tail = np.cumsum(s[::-1])[::-1]
    k = np.arange(s.size)
    with np.errstate(over="ignore", divide="ignore"):
        c = (target - k) / tail
    prev = np.concatenate([[np.inf], s[:-1]])
    ok = (c * s <= 1.0 + 1e-15) & (c * prev >= 1.0 - 1e-15)
    hits = np.flatnonzero(ok)
    if hits.size:
        return max(float(c[hits[0]]), 1.0)
    return _bisect_scale(s, target)


def _bisect_scale(s: np.ndarray, target: float) -> float:
    lo, hi = 1.0, 1.0 / s[-1]
    while np.minimum(1.0, hi * s).sum() < target - MASS_TOL:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        got = np.minimum(1.0, mid * s).sum()
        if abs(got - target) <= MASS_TOL:
            return mid
        if got < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bregman_project(w, kappa: float) -> np.ndarray:
    """KL projection of a measure onto the measures of density >= ``kappa``.

    The minimizer is ``min(1, c * w)`` with the smallest ``c >= 1`` that
    reaches mass ``kappa * n``; a measure that is already dense is returned
    as is.
    """
    if not 0 < kappa < 1:
        raise ValueError(f"kappa must lie in (0, 1), got {kappa}")
    w = as_measure(w)
    total = mass(w)
    if total <= 0:
        raise ValueError("cannot project the zero measure")
    target = kappa * w.size
    if total >= target:
        return w.copy()
    c = projection_scale(w, target)
    out = np.minimum(1.0, c * w)
    # absorb rounding so that the mass is kappa * n to machine precision
    free = out < 1.0
    if out[free].sum() > 0:
        out[free] *= (target - (~free).sum()) / out[free].sum()
    return np.minimum(out, 1.0)
