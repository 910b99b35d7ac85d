"""Monte Carlo privacy audits.

A mechanism is run many times on each of two neighbouring inputs; for every
outcome seen often enough the log ratio of its empirical frequencies is a
lower estimate of the privacy loss. The reported epsilon-hat is the largest
such ratio.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .data import BooleanDataset, DataError, differing_records
from .learners import OneRule, train_1r
from .measures import statistical_distance
from .rng import RngStream

MIN_TRIALS = 10_000
MIN_COUNT = 100


@dataclass
class AuditRow:
    outcome: str
    count: int
    count_prime: int
    freq: float
    freq_prime: float
    log_ratio: float


@dataclass
class AuditReport:
    trials: int
    epsilon_hat: float
    rows: list[AuditRow] = field(default_factory=list)

    def csv_lines(self) -> list[str]:
        lines = ["outcome,freq,freq_prime,log_ratio"]
        for row in self.rows:
            outcome = row.outcome.replace('"', '""')
            lines.append(f'"{outcome}",{row.freq:.6g},{row.freq_prime:.6g},{row.log_ratio:.6g}')
        return lines


def _outcome_label(h) -> str:
    if isinstance(h, (int, np.integer)):
        return str(int(h))
    if hasattr(h, "to_json"):
        return json.dumps(h.to_json(), sort_keys=True)
    return str(h)


def _outcome_key(h):
    if isinstance(h, (OneRule, int, np.integer)):
        return h
    return _outcome_label(h)


def empirical_epsilon(outcomes, outcomes_prime, min_count: int = MIN_COUNT) -> AuditReport:
    """Largest ``|ln(freq / freq')|`` over outcomes observed ``min_count`` times."""
    counts = Counter(_outcome_key(o) for o in outcomes)
    counts_prime = Counter(_outcome_key(o) for o in outcomes_prime)
    trials, trials_prime = sum(counts.values()), sum(counts_prime.values())
    rows = []
    for key in set(counts) | set(counts_prime):
        c, c2 = counts.get(key, 0), counts_prime.get(key, 0)
        if max(c, c2) < min_count:
            continue
        f, f2 = c / trials, c2 / trials_prime
        ratio = math.inf if min(c, c2) == 0 else abs(math.log(f / f2))
        rows.append(AuditRow(_outcome_label(key), c, c2, f, f2, ratio))
    rows.sort(key=lambda r: (-r.log_ratio, r.outcome))
    eps_hat = max((r.log_ratio for r in rows), default=0.0)
    return AuditReport(trials, eps_hat, rows)


def audit_weak_learner(mechanism, ds: BooleanDataset, ds_prime: BooleanDataset, mu, mu_prime,
                       trials: int, rng: RngStream, zeta: float | None = None,
                       min_count: int = MIN_COUNT) -> AuditReport:
    """Run ``mechanism(ds, mu, rng)`` ``trials`` times on each input and compare.

    The two datasets must differ in at most one record; when ``zeta`` is given
    the two distributions must be closer than ``zeta``.
    """
    if trials < MIN_TRIALS:
        raise ValueError(f"an audit needs at least {MIN_TRIALS} trials")
    if differing_records(ds, ds_prime) > 1:
        raise DataError("audit inputs are not neighbouring datasets")
    if zeta is not None and not statistical_distance(mu, mu_prime) < zeta:
        raise ValueError("audit distributions are not within the promised distance")
    a, b = rng.child(0), rng.child(1)
    outcomes = [mechanism(ds, mu, a) for _ in range(trials)]
    outcomes_prime = [mechanism(ds_prime, mu_prime, b) for _ in range(trials)]
    return empirical_epsilon(outcomes, outcomes_prime, min_count)


def audit_selection(select, scores, scores_prime, eta: float, trials: int, rng: RngStream,
                    min_count: int = MIN_COUNT) -> AuditReport:
    """Audit a vectorized score-selection mechanism on two score vectors."""
    if trials < MIN_TRIALS:
        raise ValueError(f"an audit needs at least {MIN_TRIALS} trials")
    out = select(scores, eta, rng.child(0), size=trials)
    out_prime = select(scores_prime, eta, rng.child(1), size=trials)
    return empirical_epsilon(out.tolist(), out_prime.tolist(), min_count)


def toy_neighboring_pair() -> tuple[BooleanDataset, BooleanDataset]:
    """Eight examples over two features whose last record flips the best literal.

    On the first dataset ``x0`` is error-free and ``x1`` errs once; the
    neighbour swaps the feature values of record 7 so the roles reverse.
    """
    x = np.array([[1, 1], [1, 1], [1, 1], [0, 0], [0, 0], [0, 0], [1, 1], [0, 1]], dtype=np.uint8)
    y = np.array([1, 1, 1, -1, -1, -1, 1, -1], dtype=np.int8)
    ds = BooleanDataset(x, y, ("a", "b"))
    return ds, ds.with_record(7, [1, 0], -1)


def nonprivate_1r(ds: BooleanDataset, mu, rng: RngStream) -> OneRule:
    """Exact argmin 1-rule; the control that an audit must flag."""
    return train_1r(ds, mu)
