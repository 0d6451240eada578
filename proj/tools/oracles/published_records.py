#!/usr/bin/env python3
"""Builds a participant CSV whose per-condition summaries round to the published ones.

Eighteen included participants per condition with integer scores. The printed
SDs are only reachable with integer data under an n denominator, so each cell
targets a sum and sum of squares chosen for that convention. Two excluded rows
are appended with values far from the rest, so a filter bug shows up. Writes
tests/fixtures/published_records.csv and published_records.json (scipy results on the
included rows).

    python3 tools/oracles/published_records.py
"""

import csv
import json
import pathlib
import random

from scipy import stats

N = 18
# (sum, sum of squares, lo, hi) per cell
CELLS = {
    ("reflection", "learning"): (106, 692, 0, 10),
    ("standard", "learning"): (117, 837, 0, 10),
    ("reflection", "attractiveness"): (472, 12754, 6, 42),
    ("standard", "attractiveness"): (532, 16012, 6, 42),
    ("reflection", "stimulation"): (382, 8350, 4, 28),
    ("standard", "stimulation"): (417, 10087, 4, 28),
}


def solve(total, squares, lo, hi, rng):
    """Integer vector with the given sum and sum of squares, by local search."""
    while True:
        base = total // N
        x = [base] * N
        for i in range(total - base * N):
            x[i] += 1
        for _ in range(200000):
            err = sum(v * v for v in x) - squares
            if err == 0:
                return sorted(x)
            i, j = rng.sample(range(N), 2)
            # moving one unit from i to j keeps the sum and changes squares by 2(x_j - x_i) + 2
            delta = 2 * (x[j] - x[i]) + 2
            if x[i] - 1 < lo or x[j] + 1 > hi:
                continue
            if abs(err + delta) < abs(err) or rng.random() < 0.02:
                x[i] -= 1
                x[j] += 1


def split_items(total, count, rng):
    """count Likert items in 1..7 that add up to total."""
    items = [1] * count
    left = total - count
    while left:
        k = rng.randrange(count)
        if items[k] < 7:
            items[k] += 1
            left -= 1
    rng.shuffle(items)
    return items


def main():
    rng = random.Random(20240518)
    data = {cell: solve(*target, rng) for cell, target in CELLS.items()}
    for cell, values in data.items():
        rng.shuffle(values)

    root = pathlib.Path(__file__).resolve().parents[2] / "tests" / "fixtures"
    rows = []
    for cond in ("reflection", "standard"):
        for k in range(N):
            attr = split_items(data[(cond, "attractiveness")][k], 6, rng)
            stim = split_items(data[(cond, "stimulation")][k], 4, rng)
            rows.append([f"{cond[0].upper()}{k + 1:02d}", cond, "false", data[(cond, "learning")][k], *attr, *stim])
    rows.append(["X01", "reflection", "true", 10, *([7] * 10)])
    rows.append(["X02", "standard", "true", 0, *([1] * 10)])

    with open(root / "published_records.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["participant_id", "condition", "excluded", "learning_correct"] + [f"ueq_{i}" for i in range(1, 11)])
        w.writerows(rows)

    expected = {}
    for var in ("learning", "attractiveness", "stimulation"):
        r = data[("reflection", var)]
        s = data[("standard", var)]
        res = stats.ttest_ind(s, r, equal_var=True)
        sp = ((17 * stats.tstd(r) ** 2 + 17 * stats.tstd(s) ** 2) / 34) ** 0.5
        expected[var] = {
            "reflection": {"mean": float(sum(r) / N), "sd_population": float(stats.tstd(r) * (17 / 18) ** 0.5)},
            "standard": {"mean": float(sum(s) / N), "sd_population": float(stats.tstd(s) * (17 / 18) ** 0.5)},
            "t": float(res.statistic),
            "p": float(res.pvalue),
            "d": float(abs(sum(s) - sum(r)) / N / sp),
        }
        print(var, {k: (round(v, 4) if isinstance(v, float) else v) for k, v in expected[var].items()})
    (root / "published_records.json").write_text(json.dumps(expected, indent=2) + "\n")


if __name__ == "__main__":
    main()
