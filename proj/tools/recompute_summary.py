#!/usr/bin/env python3
"""Recompute per-cell summaries from results.csv and compare with summary.csv."""

import argparse
import csv
import math
import sys

SUMMARY_FIELDS = [
    "q1_estimate",
    "median_estimate",
    "q3_estimate",
    "iqr_estimate",
    "median_abs_error",
    "fraction_within_one_sample",
]


def quantile(sorted_values, p):
    # Hyndman-Fan type 7.
    h = (len(sorted_values) - 1) * p
    lo = math.floor(h)
    if lo + 1 >= len(sorted_values):
        return sorted_values[-1]
    return sorted_values[lo] + (h - lo) * (sorted_values[lo + 1] - sorted_values[lo])


def recompute(rows, dt):
    cells = {}
    order = []
    for r in rows:
        key = (r["scenario"], float(r["tve"]), float(r["true_delay"]))
        if key not in cells:
            cells[key] = []
            order.append(key)
        cells[key].append(r)

    out = {}
    for key in order:
        group = cells[key]
        ok = [r for r in group if r["status"] == "ok"]
        s = {"n_trials": len(group), "n_failed": len(group) - len(ok)}
        if not ok:
            for f in SUMMARY_FIELDS[:-1]:
                s[f] = math.nan
            s["fraction_within_one_sample"] = 0.0
        else:
            est = sorted(float(r["estimated_delay"]) for r in ok)
            err = sorted(int(r["abs_error"]) * dt for r in ok)
            s["q1_estimate"] = quantile(est, 0.25)
            s["median_estimate"] = quantile(est, 0.5)
            s["q3_estimate"] = quantile(est, 0.75)
            s["iqr_estimate"] = s["q3_estimate"] - s["q1_estimate"]
            s["median_abs_error"] = quantile(err, 0.5)
            s["fraction_within_one_sample"] = sum(1 for r in ok if int(r["abs_error"]) <= 1) / len(ok)
        out[key] = s
    return out


def same(a, b):
    return (math.isnan(a) and math.isnan(b)) or a == b


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("results")
    ap.add_argument("summary")
    ap.add_argument("--dt", type=float, default=1.0 / 60.0, help="reporting interval (s)")
    args = ap.parse_args()

    with open(args.results, newline="") as f:
        expected = recompute(list(csv.DictReader(f)), args.dt)
    with open(args.summary, newline="") as f:
        emitted = list(csv.DictReader(f))

    mismatches = 0
    if len(emitted) != len(expected):
        print(f"cell count differs: summary {len(emitted)}, recomputed {len(expected)}")
        mismatches += 1
    for row in emitted:
        key = (row["scenario"], float(row["tve"]), float(row["true_delay"]))
        if key not in expected:
            print(f"cell {key} missing from results")
            mismatches += 1
            continue
        ref = expected[key]
        for f in ("n_trials", "n_failed"):
            if int(row[f]) != ref[f]:
                print(f"{key} {f}: summary {row[f]}, recomputed {ref[f]}")
                mismatches += 1
        for f in SUMMARY_FIELDS:
            if not same(float(row[f]), ref[f]):
                print(f"{key} {f}: summary {row[f]}, recomputed {ref[f]!r}")
                mismatches += 1

    print(f"{len(emitted)} cells checked, {mismatches} mismatches")
    return 1 if mismatches else 0


if __name__ == "__main__":
    sys.exit(main())
