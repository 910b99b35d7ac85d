"""Lazy-Bregman smooth boosting with a majority-vote ensemble.

Each round normalizes the current dense measure, hands the resulting smooth
distribution to the weak learner, and re-weights every example by
``kappa * exp(-lambda * margin)`` before projecting back onto the measures of
density ``kappa``. Because the learner only ever sees distributions capped at
``1 / (kappa n)``, a private weak learner calibrated to ``zeta = 1/(kappa n)``
keeps the whole run private under composition.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import mechanisms as mech
from .data import BooleanDataset
from .learners import (
    hypothesis_from_json,
    train_1r,
    train_dp_1r,
    train_dp_topdown,
    weighted_error,
)
from .measures import bregman_project, normalize
from .rng import RngStream

LEARNERS = ("1r", "dp-1r", "dp-topdown")
ACCOUNTING = ("basic", "advanced")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BoostConfig:
    kappa: float
    lam: float
    tau: int
    learner: str = "dp-1r"
    tree_nodes: int = 1
    epsilon: float | None = None
    delta: float = 0.0
    accounting: str = "basic"
    beta: float = 0.05
    seed: int = 0
    early_stop: int | None = None

    def __post_init__(self):
        if not 0 < self.kappa < 1:
            raise ConfigError(f"kappa must lie in (0, 1), got {self.kappa}")
        if not 0 < self.lam < 1:
            raise ConfigError(f"learning rate must lie in (0, 1), got {self.lam}")
        if not (isinstance(self.tau, (int, np.integer)) and self.tau >= 1):
            raise ConfigError(f"rounds must be a positive integer, got {self.tau}")
        if self.learner not in LEARNERS:
            raise ConfigError(f"unknown learner {self.learner!r}")
        if self.tree_nodes < 1:
            raise ConfigError("tree_nodes must be >= 1")
        if self.accounting not in ACCOUNTING:
            raise ConfigError(f"unknown accounting {self.accounting!r}")
        if not 0 <= self.delta < 1:
            raise ConfigError(f"delta must lie in [0, 1), got {self.delta}")
        if self.accounting == "basic" and self.delta > 0:
            raise ConfigError("delta > 0 needs advanced accounting")
        if self.accounting == "advanced" and self.delta == 0:
            raise ConfigError("advanced accounting needs delta > 0")
        if self.private:
            if self.epsilon is None or not self.epsilon > 0:
                raise ConfigError(f"learner {self.learner} needs epsilon > 0")
        if not 0 < self.beta < 1:
            raise ConfigError("beta must lie in (0, 1)")
        if self.early_stop is not None and self.early_stop < 1:
            raise ConfigError("early_stop window must be >= 1")

    @property
    def private(self) -> bool:
        return self.learner != "1r"

    def zeta(self, n: int) -> float:
        """Distance promise for neighbouring runs, ``1 / (kappa n)``."""
        return 1.0 / (self.kappa * n)

    def round_epsilon(self, n: int) -> float | None:
        if not self.private:
            return None
        if self.accounting == "advanced":
            return mech.solve_round_budget_approx(self.epsilon, self.delta, self.tau)
        return self.epsilon / self.tau

    def noise_rate(self, n: int) -> float | None:
        """Per-round noise rate for the weak learner, ``None`` when non-private."""
        if not self.private:
            return None
        if self.accounting == "basic":
            if self.learner == "dp-1r":
                return mech.noise_rate_1r(self.epsilon, self.kappa, n, self.tau)
            return mech.noise_rate_topdown(self.epsilon, self.kappa, n, self.tau, self.tree_nodes)
        return mech.eta_for_round_budget(
            self.learner, self.round_epsilon(n), self.zeta(n), self.tree_nodes
        )


def privacy_spent(cfg: BoostConfig, n: int, eta: float, rounds: int) -> tuple[float, float]:
    """Recompute (epsilon, delta) for ``rounds`` weak-learner calls at noise ``eta``."""
    if not cfg.private:
        return math.inf, 0.0
    eps_round = mech.weak_learner_epsilon(cfg.learner, eta, cfg.zeta(n), cfg.tree_nodes)
    if cfg.accounting == "basic":
        return mech.basic_composition(rounds, eps_round, 0.0)
    return mech.advanced_composition(rounds, eps_round, 0.0, cfg.delta)


def theorem_rounds(gamma: float, kappa: float) -> int:
    """Round count ``ceil(16 ln(1/kappa) / gamma^2)`` for the margin guarantee."""
    return math.ceil(16 * math.log(1 / kappa) / gamma**2)


def theorem_learning_rate(gamma: float) -> float:
    return gamma / 4


@dataclass
class Ensemble:
    hypotheses: list
    config: BoostConfig
    trace: list[dict] = field(default_factory=list)
    n_features: int = 0
    feature_names: list[str] = field(default_factory=list)
    n_train: int = 0
    eta: float | None = None

    @property
    def rounds(self) -> int:
        return len(self.hypotheses)

    def votes(self, x: np.ndarray) -> np.ndarray:
        if not self.hypotheses:
            raise ValueError("empty ensemble")
        x = np.asarray(x)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[1] != self.n_features:
            raise ValueError(f"model expects {self.n_features} features, data has {x.shape[1]}")
        return np.sum([h.predict(x).astype(np.int64) for h in self.hypotheses], axis=0)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.where(self.votes(x) >= 0, 1, -1).astype(np.int8)

    def features_used(self) -> set[int]:
        out = set()
        for h in self.hypotheses:
            out |= h.features_used()
        return out

    def privacy(self) -> dict:
        eps, delta = (privacy_spent(self.config, self.n_train, self.eta, self.rounds)
                      if self.config.private else (None, 0.0))
        return {"epsilon": eps, "delta": delta,
                "zeta": self.config.zeta(self.n_train) if self.n_train else None,
                "eta": self.eta}

    def to_json(self) -> dict:
        return {
            "config": asdict(self.config),
            "n_features": self.n_features,
            "n_train": self.n_train,
            "feature_names": list(self.feature_names),
            "privacy": self.privacy(),
            "hypotheses": [h.to_json() for h in self.hypotheses],
            "trace": self.trace,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Ensemble":
        return cls(
            hypotheses=[hypothesis_from_json(h) for h in obj["hypotheses"]],
            config=BoostConfig(**obj["config"]),
            trace=list(obj.get("trace", [])),
            n_features=int(obj["n_features"]),
            feature_names=list(obj.get("feature_names", [])),
            n_train=int(obj.get("n_train", 0)),
            eta=obj.get("privacy", {}).get("eta"),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "Ensemble":
        return cls.from_json(json.loads(Path(path).read_text()))


Learner = Callable[[BooleanDataset, np.ndarray, RngStream], object]


def _make_learner(cfg: BoostConfig, eta: float | None, zeta: float) -> Learner:
    if cfg.learner == "1r":
        return lambda ds, mu, rng: train_1r(ds, mu)
    if cfg.learner == "dp-1r":
        return lambda ds, mu, rng: train_dp_1r(ds, mu, eta, rng)
    return lambda ds, mu, rng: train_dp_topdown(ds, mu, cfg.tree_nodes, eta, rng, zeta)


def lazybb(ds: BooleanDataset, cfg: BoostConfig, rng: RngStream | None = None,
           learner: Learner | None = None, callback=None) -> Ensemble:
    """Run ``cfg.tau`` rounds of lazy-Bregman boosting on ``ds``.

    ``learner`` overrides the configured weak learner (it is then charged no
    privacy). ``callback(round, mu_hat, h)`` sees every intermediate
    distribution.
    """
    if ds.n == 0:
        raise ValueError("cannot boost on an empty dataset")
    rng = rng if rng is not None else RngStream(cfg.seed)
    zeta = cfg.zeta(ds.n)
    eta = None
    if learner is None:
        eta = cfg.noise_rate(ds.n)
        if eta is not None:
            eta = mech.check_noise_rate(eta)
        learner = _make_learner(cfg, eta, zeta)

    kappa, lam = cfg.kappa, cfg.lam
    log_kappa = math.log(kappa)
    mu = np.full(ds.n, kappa)
    margin = np.zeros(ds.n)
    hypotheses, trace = [], []
    bad_streak = 0
    for t in range(1, cfg.tau + 1):
        mu_hat = normalize(mu)
        try:
            h = learner(ds, mu_hat, rng.child(t))
        except Exception as exc:
            raise RuntimeError(f"weak learner failed in round {t}: {exc}") from exc
        if callback is not None:
            callback(t, mu_hat, h)
        advantage = 0.5 - weighted_error(ds, mu_hat, h)
        hypotheses.append(h)
        trace.append({"round": t, "advantage": advantage, "mass": float(mu.sum()), "eta": eta})
        margin += ds.y * h.predict(ds.x)
        # Weights above 1 are capped before projecting; min(1, c*w) with c >= 1
        # is unchanged by the cap and it keeps exp() from overflowing.
        mu = bregman_project(np.exp(np.minimum(log_kappa - lam * margin, 0.0)), kappa)
        bad_streak = bad_streak + 1 if advantage < 0 else 0
        if cfg.early_stop is not None and bad_streak >= cfg.early_stop:
            break

    return Ensemble(hypotheses, cfg, trace, ds.r, list(ds.feature_names), ds.n, eta)


def margins(ens: Ensemble, ds: BooleanDataset) -> tuple[np.ndarray, np.ndarray]:
    """Raw margins ``y_i sum_j h_j(x_i)`` and their normalization by the round count."""
    raw = ds.y.astype(np.int64) * ens.votes(ds.x)
    return raw, raw / ens.rounds


def majority_predict(ens: Ensemble, x) -> np.ndarray | int:
    """Unweighted majority vote; a tied vote predicts +1."""
    x = np.asarray(x)
    out = ens.predict(x)
    return int(out[0]) if x.ndim == 1 else out


def advantage_curve(ens: Ensemble) -> np.ndarray:
    if not ens.trace:
        raise ValueError("ensemble carries no training trace")
    return np.array([rec["advantage"] for rec in ens.trace])


def accuracy(ens: Ensemble, ds: BooleanDataset) -> float:
    return float(np.mean(ens.predict(ds.x) == ds.y))
