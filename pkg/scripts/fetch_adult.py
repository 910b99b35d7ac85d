"""Fetch the UCI Adult census files and write them as headed CSVs.

The sandboxed build only reaches PyPI, so the raw files are taken from the
``responsibly`` wheel, which ships unmodified copies of ``adult.data`` and
``adult.test``. Output goes to ``data/adult/`` next to this script's parent.

    python scripts/fetch_adult.py [--wheel path/to/responsibly.whl]
"""

import argparse
import csv
import glob
import io
import subprocess
import sys
import tempfile
import zipfile
from pathlib import Path

COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education-num",
    "marital-status", "occupation", "relationship", "race", "sex",
    "capital-gain", "capital-loss", "hours-per-week", "native-country",
    "income",
]
OUT_DIR = Path(__file__).resolve().parent.parent / "data" / "adult"


def _download_wheel(dest):
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "--no-deps", "-q",
         "responsibly==0.1.2", "-d", dest],
        check=True,
    )
    return glob.glob(f"{dest}/responsibly-*.whl")[0]


def _convert(raw: bytes, out: Path):
    rows = []
    for line in io.StringIO(raw.decode("ascii")):
        line = line.strip()
        if not line or line.startswith("|"):
            continue
        fields = [f.strip() for f in line.split(",")]
        # test-set labels carry a trailing period
        fields[-1] = fields[-1].rstrip(".")
        rows.append(fields)
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        writer.writerows(rows)
    return len(rows)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--wheel", help="local responsibly wheel")
    args = parser.parse_args()
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        wheel = args.wheel or _download_wheel(tmp)
        with zipfile.ZipFile(wheel) as zf:
            for member, name in [("adult.data", "adult.train.csv"),
                                 ("adult.test", "adult.test.csv")]:
                raw = zf.read(f"responsibly/dataset/adult/{member}")
                n = _convert(raw, OUT_DIR / name)
                print(f"{name}: {n} rows")


if __name__ == "__main__":
    main()
