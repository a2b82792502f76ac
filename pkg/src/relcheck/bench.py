"""Timing report for the chain family: CSV rows plus a rendered figure."""

import csv
import time
from dataclasses import dataclass
from pathlib import Path

from .families import chain_point, chain_structure
from .machine import normal_run


@dataclass
class BenchRow:
    size: int
    cells: int
    ports: int
    displacements: int
    unifications: int
    seconds: float


CSV_FIELDS = ["size", "cells", "ports", "displacements", "unifications", "seconds"]


def run_benchmark(sizes, repeats: int = 3) -> list[BenchRow]:
    rows = []
    for n in sizes:
        ps = chain_structure(n)
        point = chain_point(n)
        best = None
        result = None
        for _ in range(max(1, repeats)):
            t0 = time.perf_counter()
            result = normal_run(ps, point)
            elapsed = time.perf_counter() - t0
            best = elapsed if best is None else min(best, elapsed)
        if not result.accepted:
            raise RuntimeError(f"chain of size {n} was rejected: {result.reason}")
        rows.append(
            BenchRow(n, len(ps.cells), len(ps.ports), result.displacements,
                     result.unifications, best)
        )
    return rows


def write_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_FIELDS)
        for r in rows:
            writer.writerow([r.size, r.cells, r.ports, r.displacements,
                             r.unifications, f"{r.seconds:.6f}"])


def write_figure(rows, path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    sizes = [r.size for r in rows]
    times = [r.seconds for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.loglog(sizes, times, "o-", label="measured wall time")
    if len(rows) >= 2:
        scale = times[0] / sizes[0]
        ax.loglog(sizes, [scale * n for n in sizes], "--", color="gray",
                  label="linear reference")
    ax.set_xlabel("axioms in the chain")
    ax.set_ylabel("seconds per accepting run")
    ax.set_title("Token machine on the chain family")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_report(rows, out_dir) -> tuple:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "bench.csv"
    png_path = out / "bench.png"
    write_csv(rows, csv_path)
    write_figure(rows, png_path)
    return csv_path, png_path
