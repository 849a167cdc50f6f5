"""Benchmark aggregation: delimited summary tables and rendered figures.

Consumes the per-query records the bench command emits (as dicts) and writes
a CSV summary plus PNG figures into a report directory, alongside the
JSON-lines stream on stdout.
"""

from __future__ import annotations

import csv
import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

SUMMARY_COLUMNS = [
    "model",
    "queries",
    "pct_yes",
    "avg_cnf_vars",
    "avg_cnf_clauses",
    "max_wall_ms",
    "avg_wall_ms",
    "max_sat_calls",
    "avg_sat_calls",
    "max_predict_calls",
    "avg_predict_calls",
]


def summarize(records: list[dict]) -> list[dict]:
    """Per-model aggregate rows (max/avg runtime and call counts)."""
    grouped: dict[str, list[dict]] = defaultdict(list)
    for record in records:
        grouped[record["model"]].append(record)
    rows = []
    for model in sorted(grouped):
        bucket = grouped[model]
        stats = [r.get("stats", {}) for r in bucket]

        def _col(key):
            return [s.get(key, 0) or 0 for s in stats]

        wall = _col("wall_ms")
        sat = _col("sat_calls")
        predict = _col("predict_calls")
        rows.append(
            {
                "model": model,
                "queries": len(bucket),
                "pct_yes": round(
                    100.0 * sum(1 for r in bucket if r.get("answer") == "yes") / len(bucket), 1
                ),
                "avg_cnf_vars": round(sum(_col("cnf_vars")) / len(bucket), 1),
                "avg_cnf_clauses": round(sum(_col("cnf_clauses")) / len(bucket), 1),
                "max_wall_ms": round(max(wall), 2),
                "avg_wall_ms": round(sum(wall) / len(bucket), 2),
                "max_sat_calls": max(sat),
                "avg_sat_calls": round(sum(sat) / len(bucket), 1),
                "max_predict_calls": max(predict),
                "avg_predict_calls": round(sum(predict) / len(bucket), 1),
            }
        )
    return rows


def write_report(records: list[dict], out_dir: str) -> dict[str, str]:
    """Write summary.csv and the figures; returns the paths produced."""
    os.makedirs(out_dir, exist_ok=True)
    paths: dict[str, str] = {}

    rows = summarize(records)
    summary_path = os.path.join(out_dir, "summary.csv")
    with open(summary_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=SUMMARY_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    paths["summary"] = summary_path

    wall = [r.get("stats", {}).get("wall_ms", 0.0) or 0.0 for r in records]
    if wall:
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.hist(wall, bins=min(40, max(5, len(wall) // 5)), color="#4878d0", edgecolor="white")
        ax.set_xlabel("query runtime (ms)")
        ax.set_ylabel("queries")
        ax.set_title("Relevancy query runtime")
        fig.tight_layout()
        hist_path = os.path.join(out_dir, "runtime_hist.png")
        fig.savefig(hist_path, dpi=120)
        plt.close(fig)
        paths["runtime_hist"] = hist_path

    if rows:
        fig, ax = plt.subplots(figsize=(7, 4))
        labels = [os.path.basename(r["model"]) for r in rows]
        x = range(len(rows))
        width = 0.4
        ax.bar(
            [i - width / 2 for i in x],
            [r["avg_sat_calls"] for r in rows],
            width=width,
            label="avg solver calls",
            color="#4878d0",
        )
        ax.bar(
            [i + width / 2 for i in x],
            [r["avg_predict_calls"] for r in rows],
            width=width,
            label="avg classifier calls",
            color="#ee854a",
        )
        ax.set_xticks(list(x))
        ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
        ax.set_ylabel("calls per query")
        ax.set_title("Oracle usage by model")
        ax.legend()
        fig.tight_layout()
        calls_path = os.path.join(out_dir, "query_calls.png")
        fig.savefig(calls_path, dpi=120)
        plt.close(fig)
        paths["query_calls"] = calls_path

    return paths
