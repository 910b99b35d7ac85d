from pathlib import Path

import numpy as np
import pytest

from dpboost.data import BooleanDataset

ROOT = Path(__file__).resolve().parent.parent
ADULT = ROOT / "data" / "adult"


def random_dataset(rng: np.random.Generator, n: int, r: int) -> BooleanDataset:
    x = rng.integers(0, 2, size=(n, r), dtype=np.uint8)
    y = np.where(rng.random(n) < 0.5, -1, 1).astype(np.int8)
    return BooleanDataset(x, y, tuple(f"f{j}" for j in range(r)))


def random_distribution(rng: np.random.Generator, n: int) -> np.ndarray:
    w = rng.random(n) + 1e-3
    return w / w.sum()


@pytest.fixture
def adult_paths():
    files = [ADULT / "adult.train.csv", ADULT / "adult.test.csv", ADULT / "adult.schema.json"]
    if not all(f.exists() for f in files):
        pytest.skip("Adult data not present; run scripts/fetch_adult.py")
    return files
