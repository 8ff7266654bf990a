"""Write the bundled ARFF files under datasets/ from the KEEL raw copies.

The UCI hosts are not always reachable, but the ``keel-ds`` wheel ships the
raw comma-separated files for iris, vowel and letter. This script rewrites
them as Weka-style ARFF with the usual UCI attribute names.

    pip install --no-deps keel-ds
    python scripts/build_datasets.py
"""

import argparse
from importlib import resources
from pathlib import Path

IRIS_ATTRS = ["sepallength", "sepalwidth", "petallength", "petalwidth"]
LETTER_ATTRS = [
    "x-box", "y-box", "width", "high", "onpix", "x-bar", "y-bar", "x2bar",
    "y2bar", "xybar", "x2ybr", "xy2br", "x-ege", "xegvy", "y-ege", "yegvx",
]
# Train/test flag, speaker and sex are integer codes in the KEEL copy; they are
# kept nominal (as in Weka's vowel.arff) with the codes as value names.
VOWEL_NOMINAL = {"train-or-test": 2, "speaker-number": 15, "sex": 2}
VOWEL_FEATURES = [f"feature-{i}" for i in range(10)]


def _raw_rows(name):
    path = resources.files("keel_ds") / "data" / "balanced" / "raw" / f"{name}.dat"
    rows = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if line:
            rows.append([cell.strip() for cell in line.split(",")])
    return rows


def _write(path, relation, attributes, rows):
    lines = [f"@relation {relation}", ""]
    for name, kind in attributes:
        if isinstance(kind, list):
            lines.append(f"@attribute {name} {{{','.join(kind)}}}")
        else:
            lines.append(f"@attribute {name} {kind}")
    lines += ["", "@data"]
    lines += [",".join(row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    print(f"wrote {path} ({len(rows)} instances)")


def _classes_in_order(rows):
    seen = []
    for row in rows:
        if row[-1] not in seen:
            seen.append(row[-1])
    return seen


def build(out_dir):
    out_dir.mkdir(parents=True, exist_ok=True)

    rows = _raw_rows("iris")
    attrs = [(a, "numeric") for a in IRIS_ATTRS] + [("class", _classes_in_order(rows))]
    _write(out_dir / "iris.arff", "iris", attrs, rows)

    rows = _raw_rows("vowel")
    attrs = [(a, [str(v) for v in range(n)]) for a, n in VOWEL_NOMINAL.items()]
    attrs += [(a, "numeric") for a in VOWEL_FEATURES]
    attrs.append(("class", [str(v) for v in range(11)]))
    _write(out_dir / "vowel.arff", "vowel", attrs, rows)

    rows = _raw_rows("letter")
    attrs = [(a, "integer") for a in LETTER_ATTRS]
    attrs.append(("class", [chr(ord("A") + i) for i in range(26)]))
    _write(out_dir / "letter.arff", "letter", attrs, rows)


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "datasets")
    build(parser.parse_args().out)
