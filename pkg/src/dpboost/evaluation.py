"""Cross-validation, grid search and model reports."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .boosting import BoostConfig, Ensemble, accuracy, lazybb, margins
from .data import BooleanDataset, make_folds
from .rng import RngStream

DEFAULT_TAUS = (5, 9, 15, 19, 25, 29, 39, 49, 65, 75, 99)
DEFAULT_RATES = (0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5)
DEFAULT_EPSILONS = (0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 1.0, 3.0, 5.0)
DEFAULT_REPEATS = 5


def worker_count() -> int:
    env = os.environ.get("DPBOOST_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class GridSpec:
    tau_values: tuple[int, ...] = DEFAULT_TAUS
    lambda_values: tuple[float, ...] = DEFAULT_RATES
    kappa_values: tuple[float, ...] = DEFAULT_RATES
    epsilon_values: tuple[float, ...] = DEFAULT_EPSILONS
    folds: int = 5

    def __post_init__(self):
        for name in ("tau_values", "lambda_values", "kappa_values", "epsilon_values"):
            if not getattr(self, name):
                raise ValueError(f"grid {name} is empty")
        if any(t < 1 for t in self.tau_values):
            raise ValueError("grid rounds must be >= 1")
        if any(not 0 < v < 1 for v in self.lambda_values + self.kappa_values):
            raise ValueError("grid learning rates and densities must lie in (0, 1)")
        if any(e <= 0 for e in self.epsilon_values):
            raise ValueError("grid epsilons must be positive")
        if self.folds < 2:
            raise ValueError("grid needs at least 2 folds")

    def cells(self):
        for tau in self.tau_values:
            for lam in self.lambda_values:
                for kappa in self.kappa_values:
                    yield tau, lam, kappa


@dataclass
class CVResult:
    accuracies: list[float]
    feature_counts: list[int]

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.accuracies))


def cross_validate(ds: BooleanDataset, cfg: BoostConfig, folds: int = 5, repeats: int = 1,
                   seed: int = 0, stream: tuple[int, ...] = ()) -> CVResult:
    """Validation accuracy over ``folds`` splits, each trained ``repeats`` times."""
    accs, counts = [], []
    split = make_folds(ds, folds, seed)
    for rep in range(repeats):
        for j, (train, val) in enumerate(split):
            if np.intersect1d(train, val).size:
                raise AssertionError("training and validation folds overlap")
            rng = RngStream(seed, stream + (rep, j))
            ens = lazybb(ds.subset(train), cfg, rng)
            accs.append(accuracy(ens, ds.subset(val)))
            counts.append(len(ens.features_used()))
    return CVResult(accs, counts)


@dataclass
class GridRow:
    epsilon: float
    tau: int
    lam: float
    kappa: float
    mean_accuracy: float
    std_accuracy: float
    mean_features: float
    selected: bool = False


GRID_HEADER = "epsilon,tau,lambda,kappa,mean_accuracy,std_accuracy,mean_features,selected"


def grid_search(ds: BooleanDataset, grid: GridSpec, base: BoostConfig, repeats: int = 1,
                seed: int = 0, workers: int | None = None) -> list[GridRow]:
    """Cross-validate every (epsilon, tau, lambda, kappa) cell and mark per-epsilon winners.

    Winners maximize mean validation accuracy; ties go to fewer rounds, then
    the smaller learning rate, then the smaller density.
    """
    jobs = []
    for e_idx, eps in enumerate(grid.epsilon_values):
        for c_idx, (tau, lam, kappa) in enumerate(grid.cells()):
            cfg = replace(base, epsilon=eps if base.private else None,
                          tau=tau, lam=lam, kappa=kappa)
            jobs.append((eps, cfg, (e_idx, c_idx)))

    def run(job):
        eps, cfg, stream = job
        res = cross_validate(ds, cfg, grid.folds, repeats, seed, stream)
        return GridRow(eps, cfg.tau, cfg.lam, cfg.kappa, res.mean, res.std,
                       float(np.mean(res.feature_counts)))

    with ThreadPoolExecutor(max_workers=workers or worker_count()) as pool:
        rows = list(pool.map(run, jobs))
    rows.sort(key=lambda r: (r.epsilon, r.tau, r.lam, r.kappa))
    for eps in grid.epsilon_values:
        group = [r for r in rows if r.epsilon == eps]
        best = min(group, key=lambda r: (-r.mean_accuracy, r.tau, r.lam, r.kappa))
        best.selected = True
    return rows


def grid_csv(rows: list[GridRow]) -> list[str]:
    lines = [GRID_HEADER]
    for r in rows:
        lines.append(f"{r.epsilon:g},{r.tau},{r.lam:g},{r.kappa:g},{r.mean_accuracy:.6f},"
                     f"{r.std_accuracy:.6f},{r.mean_features:.4f},{int(r.selected)}")
    return lines


# -- reports -------------------------------------------------------------------------

def feature_usage(models: list[Ensemble]) -> dict:
    """Distinct-feature counts per model with mean, std and share of all features."""
    counts = [len(m.features_used()) for m in models]
    r = models[0].n_features
    mean = float(np.mean(counts))
    return {"counts": counts, "mean": mean, "std": float(np.std(counts)),
            "percent": 100.0 * mean / r if r else 0.0, "n_features": r}


def margin_histogram(ens: Ensemble, ds: BooleanDataset, bins: int = 21):
    """Counts of normalized margins in ``bins`` equal bins over [-1, 1]."""
    _, norm = margins(ens, ds)
    counts, edges = np.histogram(norm, bins=bins, range=(-1.0, 1.0))
    return counts, edges


def estimate_rademacher(ds: BooleanDataset, draws: int, rng: RngStream,
                        batch: int = 64) -> float:
    """Monte Carlo empirical Rademacher complexity of the 1-rule class on ``ds``.

    Averages ``max_h (1/n) sum_i s_i h(x_i)`` over random sign vectors ``s``.
    For a literal ``2x - 1`` the correlation is ``2 s.x - sum(s)``; negation
    flips it and the constants give ``+-sum(s)``, so the max is an absolute value.
    """
    if draws < 100:
        raise ValueError("need at least 100 Rademacher draws")
    total = 0.0
    done = 0
    while done < draws:
        m = min(batch, draws - done)
        s = np.where(rng.uniform((m, ds.n)) < 0.5, -1.0, 1.0)
        ssum = s.sum(axis=1)
        lit = 2.0 * (s @ ds.xf) - ssum[:, None]
        best = np.maximum(np.abs(lit).max(axis=1, initial=0.0), np.abs(ssum))
        total += float(best.sum()) / ds.n
        done += m
    return total / draws


def margin_bound_accuracy(ens: Ensemble, ds: BooleanDataset, rademacher: float,
                          confidence: float = 0.05, grid: int = 20) -> tuple[float, float]:
    """Pessimistic test-accuracy estimate from a voting-classifier margin bound.

    ``1 - [P(margin <= theta) + 2 R / theta + sqrt(ln(1/confidence) / 2n)]``,
    maximized over ``theta`` on an even grid in (0, 1]. Returns (estimate, theta).
    """
    _, norm = margins(ens, ds)
    slack = math.sqrt(math.log(1 / confidence) / (2 * ds.n))
    best, best_theta = -math.inf, None
    for theta in np.linspace(1.0 / grid, 1.0, grid):
        est = 1.0 - (np.mean(norm <= theta) + 2 * rademacher / theta + slack)
        if est > best:
            best, best_theta = est, float(theta)
    return max(best, 0.0), best_theta
