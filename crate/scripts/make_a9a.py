#!/usr/bin/env python3
"""Rebuild the a9a LIBSVM encoding of UCI Adult from the raw files.

Continuous columns become one-hot quantile bins (5 bins, 2 for the capital
columns: zero / nonzero), categorical columns one-hot in adult.names order.
Missing values ("?") produce no feature. 123 features in total; the sex
column occupies 1-based indices 72 (Female) and 73 (Male).

Usage:
    make_a9a.py --raw DIR OUT_DIR        # DIR holds adult.data, adult.test
    make_a9a.py --wheel WHEEL OUT_DIR    # read them from a wheel/zip archive
"""

import argparse
import bisect
import os
import zipfile

CATEGORIES = {
    "workclass": "Private, Self-emp-not-inc, Self-emp-inc, Federal-gov, Local-gov, State-gov, Without-pay, Never-worked",
    "education": "Bachelors, Some-college, 11th, HS-grad, Prof-school, Assoc-acdm, Assoc-voc, 9th, 7th-8th, 12th, Masters, 1st-4th, 10th, Doctorate, 5th-6th, Preschool",
    "marital-status": "Married-civ-spouse, Divorced, Never-married, Separated, Widowed, Married-spouse-absent, Married-AF-spouse",
    "occupation": "Tech-support, Craft-repair, Other-service, Sales, Exec-managerial, Prof-specialty, Handlers-cleaners, Machine-op-inspct, Adm-clerical, Farming-fishing, Transport-moving, Priv-house-serv, Protective-serv, Armed-Forces",
    "relationship": "Wife, Own-child, Husband, Not-in-family, Other-relative, Unmarried",
    "race": "White, Asian-Pac-Islander, Amer-Indian-Eskimo, Other, Black",
    "sex": "Female, Male",
    "native-country": "United-States, Cambodia, England, Puerto-Rico, Canada, Germany, Outlying-US(Guam-USVI-etc), India, Japan, Greece, South, China, Cuba, Iran, Honduras, Philippines, Italy, Poland, Jamaica, Vietnam, Mexico, Portugal, Ireland, France, Dominican-Republic, Laos, Ecuador, Taiwan, Haiti, Columbia, Hungary, Guatemala, Nicaragua, Scotland, Thailand, Yugoslavia, El-Salvador, Trinadad&Tobago, Peru, Hong, Holand-Netherlands",
}

# (column name, kind) in file order; kind is "cat", "q5" or "zero".
COLUMNS = [
    ("age", "q5"),
    ("workclass", "cat"),
    ("fnlwgt", "q5"),
    ("education", "cat"),
    ("education-num", "q5"),
    ("marital-status", "cat"),
    ("occupation", "cat"),
    ("relationship", "cat"),
    ("race", "cat"),
    ("sex", "cat"),
    ("capital-gain", "zero"),
    ("capital-loss", "zero"),
    ("hours-per-week", "q5"),
    ("native-country", "cat"),
]

EXPECTED_ROWS = {"adult.data": 32561, "adult.test": 16281}


def read_rows(text):
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("|"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 15:
            raise ValueError(f"bad row: {line!r}")
        rows.append(fields)
    return rows


def quintile_cuts(values):
    values = sorted(values)
    return [values[len(values) * k // 5] for k in range(1, 5)]


def encode(rows, cuts):
    out = []
    for fields in rows:
        label = "+1" if fields[14].rstrip(".") == ">50K" else "-1"
        feats = []
        offset = 0
        for col, ((name, kind), raw) in enumerate(zip(COLUMNS, fields)):
            if kind == "cat":
                cats = [c.strip() for c in CATEGORIES[name].split(",")]
                if raw in cats:
                    feats.append(offset + cats.index(raw) + 1)
                elif raw != "?":
                    raise ValueError(f"unknown {name} value {raw!r}")
                offset += len(cats)
            elif kind == "q5":
                feats.append(offset + bisect.bisect_right(cuts[col], float(raw)) + 1)
                offset += 5
            else:
                feats.append(offset + (1 if float(raw) == 0 else 2))
                offset += 2
        assert offset == 123
        out.append(label + "".join(f" {i}:1" for i in feats))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--raw", help="directory with adult.data and adult.test")
    src.add_argument("--wheel", help="zip archive containing adult.data and adult.test")
    ap.add_argument("out_dir")
    args = ap.parse_args()

    texts = {}
    if args.raw:
        for name in EXPECTED_ROWS:
            with open(os.path.join(args.raw, name), encoding="utf-8") as f:
                texts[name] = f.read()
    else:
        with zipfile.ZipFile(args.wheel) as z:
            for name in EXPECTED_ROWS:
                member = next(n for n in z.namelist() if n.endswith("/" + name) or n == name)
                texts[name] = z.read(member).decode("utf-8")

    train = read_rows(texts["adult.data"])
    test = read_rows(texts["adult.test"])
    for name, rows in (("adult.data", train), ("adult.test", test)):
        if len(rows) != EXPECTED_ROWS[name]:
            raise SystemExit(f"{name}: expected {EXPECTED_ROWS[name]} rows, found {len(rows)}")

    cuts = {col: quintile_cuts([float(r[col]) for r in train]) for col, (_, kind) in enumerate(COLUMNS) if kind == "q5"}
    os.makedirs(args.out_dir, exist_ok=True)
    for name, rows in (("a9a", train), ("a9a.t", test)):
        with open(os.path.join(args.out_dir, name), "w", encoding="utf-8", newline="\n") as f:
            f.write("\n".join(encode(rows, cuts)) + "\n")
        print(f"wrote {name}: {len(rows)} rows")


if __name__ == "__main__":
    main()
