"""Alignment-vs-capability trend fitting and out-of-population evaluation.

A linear trend (alignment as a function of benchmark performance) is fitted
by ordinary least squares on a base model population. Extrapolation to a new
population is scored with the generalized R-squared,

    R2(new) = 1 - sum((a_i - pred_i)^2) / sum((a_i - mean(a_new))^2),

which is negative whenever the fitted line predicts worse than the new
population's own mean.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class TrendError(ValueError):
    """Raised for degenerate populations."""


@dataclass(frozen=True)
class ModelPoint:
    model_id: str
    population: str  # "base" or "new"
    performance: float
    alignment: float
    benchmark: str = ""
    vision_variant: str = ""

    def __post_init__(self):
        if self.population not in ("base", "new"):
            raise TrendError(
                f"population must be 'base' or 'new', got {self.population!r}"
            )
        if not (np.isfinite(self.performance) and np.isfinite(self.alignment)):
            raise TrendError(f"non-finite point for model {self.model_id!r}")


@dataclass(frozen=True)
class TrendReport:
    slope: float
    intercept: float
    r2_base: float
    r2_new: float
    n_base: int
    n_new: int
    benchmark: str = ""
    vision_variant: str = ""

    def to_dict(self) -> dict:
        return {
            "benchmark": self.benchmark,
            "vision_variant": self.vision_variant,
            "slope": self.slope,
            "intercept": self.intercept,
            "r2_base": self.r2_base,
            "r2_new": self.r2_new,
            "n_base": self.n_base,
            "n_new": self.n_new,
        }


def fit_trend(base: Sequence[ModelPoint]) -> tuple[float, float, float]:
    """OLS fit of alignment on performance; returns (slope, intercept, r2).

    r2 on the fit population is the squared Pearson correlation.
    """
    if len(base) < 2:
        raise TrendError(f"need >= 2 base points, got {len(base)}")
    p = np.array([pt.performance for pt in base], dtype=np.float64)
    a = np.array([pt.alignment for pt in base], dtype=np.float64)
    p_mean, a_mean = p.mean(), a.mean()
    dp = p - p_mean
    da = a - a_mean
    ssp = float(dp @ dp)
    if ssp == 0.0:
        raise TrendError("degenerate fit: all base performances are equal")
    slope = float(dp @ da) / ssp
    intercept = float(a_mean - slope * p_mean)
    ssa = float(da @ da)
    r2 = 1.0 if ssa == 0.0 else float(dp @ da) ** 2 / (ssp * ssa)
    return slope, intercept, r2


def generalized_r2(
    fit: tuple[float, float], new: Sequence[ModelPoint]
) -> float:
    """Generalized R-squared of an externally fitted line on new points."""
    if len(new) < 2:
        raise TrendError(f"need >= 2 new points, got {len(new)}")
    slope, intercept = fit
    p = np.array([pt.performance for pt in new], dtype=np.float64)
    a = np.array([pt.alignment for pt in new], dtype=np.float64)
    residual = a - (slope * p + intercept)
    total = a - a.mean()
    denom = float(total @ total)
    if denom == 0.0:
        raise TrendError(
            "generalized R2 undefined: all new alignments are equal"
        )
    return 1.0 - float(residual @ residual) / denom


def trend_table(points: Sequence[ModelPoint]) -> dict:
    """Per-(benchmark, vision_variant) trend reports plus per-benchmark
    unweighted averages across vision variants.

    Returns {"cells": [TrendReport...], "averages": [{benchmark,
    r2_avg_base, r2_avg_new, n_variants}...]}.
    """
    cells: dict[tuple[str, str], dict[str, list[ModelPoint]]] = {}
    for pt in points:
        key = (pt.benchmark, pt.vision_variant)
        cells.setdefault(key, {"base": [], "new": []})[pt.population].append(pt)

    reports = []
    for (benchmark, variant) in sorted(cells):
        pops = cells[(benchmark, variant)]
        try:
            slope, intercept, r2_base = fit_trend(pops["base"])
            r2_new = generalized_r2((slope, intercept), pops["new"])
        except TrendError as exc:
            raise TrendError(
                f"cell (benchmark={benchmark!r}, variant={variant!r}): {exc}"
            )
        reports.append(
            TrendReport(
                slope=slope,
                intercept=intercept,
                r2_base=r2_base,
                r2_new=r2_new,
                n_base=len(pops["base"]),
                n_new=len(pops["new"]),
                benchmark=benchmark,
                vision_variant=variant,
            )
        )

    averages = []
    for benchmark in sorted({r.benchmark for r in reports}):
        group = [r for r in reports if r.benchmark == benchmark]
        averages.append(
            {
                "benchmark": benchmark,
                "r2_avg_base": float(np.mean([r.r2_base for r in group])),
                "r2_avg_new": float(np.mean([r.r2_new for r in group])),
                "n_variants": len(group),
            }
        )
    return {"cells": reports, "averages": averages}


# ---------------------------------------------------------------------------
# CSV / JSON interfaces
# ---------------------------------------------------------------------------

SCORES_FIELDS = (
    "model_id", "population", "benchmark", "vision_variant",
    "performance", "alignment",
)


def load_scores_csv(path) -> list[ModelPoint]:
    points = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(SCORES_FIELDS) - set(reader.fieldnames or [])
        if missing:
            raise TrendError(
                f"{path}: missing columns {sorted(missing)}"
            )
        for lineno, row in enumerate(reader, start=2):
            try:
                points.append(
                    ModelPoint(
                        model_id=row["model_id"],
                        population=row["population"],
                        performance=float(row["performance"]),
                        alignment=float(row["alignment"]),
                        benchmark=row["benchmark"],
                        vision_variant=row["vision_variant"],
                    )
                )
            except (TrendError, ValueError) as exc:
                raise TrendError(f"{path}:{lineno}: {exc}")
    return points


def write_table_csv(path, table: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["benchmark", "r2_avg_base", "r2_avg_new", "n_variants"])
        for row in table["averages"]:
            writer.writerow(
                [row["benchmark"], row["r2_avg_base"], row["r2_avg_new"],
                 row["n_variants"]]
            )


def write_table_json(path, table: dict, config=None) -> None:
    payload = {
        "cells": [r.to_dict() for r in table["cells"]],
        "averages": table["averages"],
    }
    if config is not None:
        payload["config"] = config
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
