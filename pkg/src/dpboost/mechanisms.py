"""Noise primitives, selection mechanisms and privacy accounting.

Selection mechanisms operate on a vector of quality scores and release only
the selected index. The weighted exponential mechanism samples index ``i``
with probability proportional to ``exp(eta * q_i)``; weighted report-noisy-max
returns ``argmax_i (q_i + Z_i)`` with ``Z_i ~ Laplace(1 / eta)``. Both are
``(2 * eta * Delta, 0, zeta)``-private weak learners when the scores have
robust sensitivity ``Delta`` for distributions at distance below ``zeta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import RngStream


@dataclass(frozen=True)
class PrivacyBudget:
    epsilon: float
    delta: float = 0.0
    zeta: float = 1.0

    def __post_init__(self):
        if not (self.epsilon >= 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be finite and >= 0, got {self.epsilon}")
        if not 0 <= self.delta < 1:
            raise ValueError(f"delta must lie in [0, 1), got {self.delta}")
        if not 0 < self.zeta <= 1:
            raise ValueError(f"zeta must lie in (0, 1], got {self.zeta}")


def check_noise_rate(eta: float) -> float:
    eta = float(eta)
    if not (eta > 0 and math.isfinite(eta)):
        raise ValueError(f"noise rate must be positive and finite, got {eta}")
    return eta


# -- noise -------------------------------------------------------------------

def laplace_from_uniform(u, scale: float):
    """Inverse CDF of the centred Laplace distribution with the given scale."""
    u = np.asarray(u, dtype=float) - 0.5
    return -scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def sample_laplace(scale: float, rng: RngStream, size=None):
    """Laplace(0, scale) draw(s) by inverse-CDF sampling of a uniform."""
    if not scale > 0:
        raise ValueError(f"Laplace scale must be positive, got {scale}")
    z = laplace_from_uniform(rng.uniform(size), scale)
    return float(z) if size is None else z


# -- selection ---------------------------------------------------------------

def _check_scores(scores) -> np.ndarray:
    q = np.asarray(scores, dtype=float)
    if q.ndim != 1 or q.size == 0:
        raise ValueError("scores must be a non-empty 1-d vector")
    if not np.all(np.isfinite(q)):
        raise ValueError("scores must be finite")
    return q


def exponential_probabilities(scores, eta: float) -> np.ndarray:
    """Softmax of ``eta * scores`` computed with a max shift."""
    q = _check_scores(scores)
    logits = eta * (q - q.max())
    p = np.exp(logits)
    return p / p.sum()


def weighted_exponential_mechanism(scores, eta: float, rng: RngStream, size=None):
    """Sample an index with probability proportional to ``exp(eta * score)``.

    ``eta == 0`` is accepted here and gives the uniform distribution.
    """
    if not (eta >= 0 and math.isfinite(eta)):
        raise ValueError(f"eta must be finite and >= 0, got {eta}")
    p = exponential_probabilities(scores, eta)
    cdf = np.cumsum(p)
    u = rng.uniform(size) * cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    idx = np.minimum(idx, p.size - 1)
    return int(idx) if size is None else idx


def weighted_report_noisy_max(scores, eta: float, rng: RngStream, size=None):
    """Index of the largest score after i.i.d. Laplace(1/eta) perturbation.

    Ties after noise go to the lowest index.
    """
    q = _check_scores(scores)
    eta = check_noise_rate(eta)
    shape = q.shape if size is None else (size, q.size)
    noisy = q + laplace_from_uniform(rng.uniform(shape), 1.0 / eta)
    idx = np.argmax(noisy, axis=-1)
    return int(idx) if size is None else idx


# -- composition -------------------------------------------------------------

def basic_composition(k: int, eps0: float, delta0: float = 0.0) -> tuple[float, float]:
    if k < 1:
        raise ValueError("need at least one mechanism to compose")
    return k * eps0, k * delta0


def advanced_composition(
    k: int, eps0: float, delta0: float, delta_prime: float
) -> tuple[float, float]:
    """``(sqrt(2k ln(1/d')) e0 + k e0 (e^e0 - 1), d' + k d0)``."""
    if k < 1:
        raise ValueError("need at least one mechanism to compose")
    if not 0 < delta_prime < 1:
        raise ValueError(f"delta' must lie in (0, 1), got {delta_prime}")
    eps = math.sqrt(2 * k * math.log(1 / delta_prime)) * eps0 + k * eps0 * math.expm1(eps0)
    return eps, delta_prime + k * delta0


def topdown_internal_budget_advanced(t: int, eta: float, zeta: float, delta_tilde: float) -> float:
    """Advanced-composition cost of ``t`` split selections at ``8 eta zeta`` each.

    ``t (8 eta zeta)^2 + 8 eta zeta sqrt(t log(1/delta_tilde))``; the whole
    tree, with leaf labeling at the same budget, is then
    ``(2 * this, delta_tilde, zeta)``-private.
    """
    if not 0 < delta_tilde < 1:
        raise ValueError("delta_tilde must lie in (0, 1)")
    step = 8 * eta * zeta
    return t * step**2 + step * math.sqrt(t * math.log(1 / delta_tilde))


def solve_round_budget_approx(eps_total: float, delta_total: float, tau: int) -> float:
    """Largest per-round epsilon whose ``tau``-fold advanced composition fits.

    Uses ``delta' = delta_total`` because the weak learners are pure DP.
    """
    if not 0 < delta_total < 1:
        raise ValueError("approximate accounting needs delta in (0, 1)")
    if tau < 1:
        raise ValueError("tau must be >= 1")
    if not eps_total > 0:
        raise ValueError("no positive per-round budget for epsilon <= 0")

    def total(e):
        return advanced_composition(tau, e, 0.0, delta_total)[0]

    lo, hi = 0.0, eps_total  # total(e) >= e, so the root lies below eps_total
    while hi - lo > 1e-9 * hi:
        mid = 0.5 * (lo + hi)
        if total(mid) <= eps_total:
            lo = mid
        else:
            hi = mid
    return lo


# -- noise calibration -------------------------------------------------------

def _positive(**kw):
    for name, value in kw.items():
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value}")


def noise_rate_1r(eps_total: float, kappa: float, n: int, tau: int) -> float:
    """``eta = eps kappa n / (4 tau)`` for boosting ``tau`` DP 1-rules."""
    _positive(tau=tau, n=n, kappa=kappa, epsilon=eps_total)
    return check_noise_rate(eps_total * kappa * n / (4 * tau))


def noise_rate_topdown(eps_total: float, kappa: float, n: int, tau: int, t: int) -> float:
    """``eta = eps kappa n / (16 tau t)`` for boosting ``tau`` DP TopDown trees."""
    _positive(tau=tau, n=n, kappa=kappa, epsilon=eps_total, t=t)
    return check_noise_rate(eps_total * kappa * n / (16 * tau * t))


def weak_learner_epsilon(kind: str, eta: float, zeta: float, t: int = 1) -> float:
    """Per-call privacy cost of a weak learner at noise rate ``eta``."""
    if kind == "dp-1r":
        return 4 * eta * zeta
    if kind == "dp-topdown":
        return 16 * t * eta * zeta
    raise ValueError(f"no privacy cost defined for learner {kind!r}")


def eta_for_round_budget(kind: str, eps_round: float, zeta: float, t: int = 1) -> float:
    """Inverse of :func:`weak_learner_epsilon`."""
    return check_noise_rate(eps_round / weak_learner_epsilon(kind, 1.0, zeta, t))
