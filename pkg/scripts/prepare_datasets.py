#!/usr/bin/env python3
"""Convert the raw UCI benchmark files into the CSVs under data/.

Sources (both redistributed by PyPI packages, original data from the UCI
repository):
  - Pima Indians Diabetes (768 rows, 8 features): `pima.dat` as shipped in
    the `common-datasets` package (KEEL copy, canonical row order).
  - Statlog Heart (270 rows, 13 attributes): `heart.dat` as shipped in the
    `keel-ds` package (KEEL copy; ST depression is stored x10 there and is
    rescaled back to the usual units here).

Usage:
  python scripts/prepare_datasets.py --pima pima.dat --heart heart.dat --out data/
"""
from __future__ import annotations

import argparse
import csv
from pathlib import Path

PIMA_COLUMNS = [
    "pregnancies", "glucose", "blood_pressure", "skin_thickness",
    "insulin", "bmi", "pedigree", "age",
]

HEART_COLUMNS = [
    "age", "sex", "chest_pain", "resting_bp", "cholesterol", "fbs_over_120",
    "resting_ecg", "max_heart_rate", "exercise_angina", "st_depression",
    "slope", "major_vessels", "thalassemia",
]

# Nominal codes per the UCI Statlog documentation.
HEART_CATEGORIES = {
    "sex": {"0": "female", "1": "male"},
    "chest_pain": {"1": "typical_angina", "2": "atypical_angina",
                   "3": "non_anginal", "4": "asymptomatic"},
    "fbs_over_120": {"0": "false", "1": "true"},
    "resting_ecg": {"0": "normal", "1": "st_t_abnormality", "2": "lv_hypertrophy"},
    "exercise_angina": {"0": "no", "1": "yes"},
    "slope": {"1": "upsloping", "2": "flat", "3": "downsloping"},
    "thalassemia": {"3": "normal", "6": "fixed_defect", "7": "reversable_defect"},
}
HEART_LABELS = {"1": "absent", "2": "present"}


def data_rows(path: Path) -> list[list[str]]:
    rows = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("@"):
            continue
        rows.append([c.strip() for c in line.split(",")])
    return rows


def write_pima(src: Path, dst: Path) -> None:
    rows = data_rows(src)
    assert len(rows) == 768, f"expected 768 rows, got {len(rows)}"
    with dst.open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(PIMA_COLUMNS + ["diabetes"])
        for r in rows:
            label = "positive" if r[-1].lower().endswith("positive") else "negative"
            w.writerow(r[:-1] + [label])


def _fmt(x: float) -> str:
    return f"{x:g}"


def write_heart(src: Path, dst: Path) -> None:
    rows = data_rows(src)
    assert len(rows) == 270, f"expected 270 rows, got {len(rows)}"
    with dst.open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(HEART_COLUMNS + ["disease"])
        for r in rows:
            out = []
            for name, val in zip(HEART_COLUMNS, r[:-1]):
                code = _fmt(float(val))
                if name in HEART_CATEGORIES:
                    out.append(HEART_CATEGORIES[name][code])
                elif name == "st_depression":
                    out.append(_fmt(float(val) / 10.0))  # KEEL stores x10
                else:
                    out.append(code)
            out.append(HEART_LABELS[_fmt(float(r[-1]))])
            w.writerow(out)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pima", type=Path, required=True)
    ap.add_argument("--heart", type=Path, required=True)
    ap.add_argument("--out", type=Path, default=Path("data"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    write_pima(args.pima, args.out / "diabetes.csv")
    write_heart(args.heart, args.out / "heart.csv")
    print(f"wrote {args.out / 'diabetes.csv'} and {args.out / 'heart.csv'}")


if __name__ == "__main__":
    main()
