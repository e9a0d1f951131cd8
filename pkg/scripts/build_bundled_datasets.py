#!/usr/bin/env python3
"""Materialize the bundled iris and wine CSVs from scikit-learn's copies.

scikit-learn ships the classic UCI Iris and Wine data inside the wheel, so
this runs offline.  The other benchmark datasets (zoo, liver, abalone) are
not redistributed here; download them from the UCI archive and point
PHC_DATA_DIR at the directory holding them (see README).

Run from the repository root:

    python3 scripts/build_bundled_datasets.py
"""

from pathlib import Path

from sklearn.datasets import load_iris, load_wine

OUT_DIR = Path(__file__).resolve().parent.parent / "src" / "phc" / "data"


def fmt(value: float) -> str:
    return format(value, "g")


def build_iris(path: Path) -> None:
    bunch = load_iris()
    lines = []
    for features, target in zip(bunch.data, bunch.target):
        name = bunch.target_names[target]
        lines.append(",".join(fmt(v) for v in features) + f",{name}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {path} ({len(lines)} rows)")


def build_wine(path: Path) -> None:
    bunch = load_wine()
    lines = []
    for features, target in zip(bunch.data, bunch.target):
        # archive layout: class number (1-3) first, then the 13 measurements
        lines.append(f"{target + 1}," + ",".join(fmt(v) for v in features))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {path} ({len(lines)} rows)")


if __name__ == "__main__":
    build_iris(OUT_DIR / "iris.csv")
    build_wine(OUT_DIR / "wine.csv")
