"""Rebuild data/reference_survey.csv from data/reference_means.csv.

Per-participant responses behind the reference means table are not
available, only per-item means and SDs rounded to two decimals.  For every
item this searches all integer 1..5 response vectors (n <= 30) whose sample
mean and SD round to the tabled values, and keeps the smallest pair of
vectors (fewest responses, then lexicographic) whose exact mean difference
also rounds to the tabled difference.  The result is one response set
consistent with every published cell; it is not the original raw data.
"""

import csv
import sys
from pathlib import Path

from skatectl.stats import LikertDataset, expand_counts, reconstruct_responses, write_survey

DATA = Path(__file__).resolve().parents[1] / "src" / "skatectl" / "data"


def pick(row):
    ma, sa, mb, sb, d = (float(row[k]) for k in ("mean_a", "sd_a", "mean_b", "sd_b", "diff"))
    cands_a = reconstruct_responses(ma, sa)
    cands_b = reconstruct_responses(mb, sb)
    best = None
    for ca in cands_a:
        mean_a = sum(v * c for v, c in zip(range(1, 6), ca)) / sum(ca)
        for cb in cands_b:
            mean_b = sum(v * c for v, c in zip(range(1, 6), cb)) / sum(cb)
            if abs((mean_b - mean_a) - d) <= 0.005 + 1e-9:
                key = (sum(ca) + sum(cb), sum(ca), ca, cb)
                if best is None or key < best:
                    best = key
    if best is None:
        raise SystemExit(f"no consistent reconstruction for {row['question']}")
    return best[2], best[3]


def main():
    with open(DATA / "reference_means.csv", newline="") as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    cols_a, cols_b = [], []
    for row in rows:
        ca, cb = pick(row)
        cols_a.append(expand_counts(ca))
        cols_b.append(expand_counts(cb))
        print(row["question"], ca, cb, file=sys.stderr)
    questions = [r["question"] for r in rows]
    a = LikertDataset.from_columns("nunchuck", cols_a, questions)
    b = LikertDataset.from_columns("skate", cols_b, questions)
    with open(DATA / "reference_survey.csv", "w", newline="") as fh:
        write_survey([a, b], fh)


if __name__ == "__main__":
    main()
