"""Ledger scoring: per-cell metric reports, pre/post splits, exports."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, asdict

import numpy as np

from .backtest import ForecastRecord
from .errors import EmptySplit
from .metrics import score_all
from .quarters import QuarterIndex


@dataclass(frozen=True)
class MetricReport:
    model_id: str
    spec_id: str
    horizon: int
    rmse: float
    mdrae: float
    smape: float
    theil_u: float
    n: int


def _group_key(r: ForecastRecord):
    return (r.model_id, r.spec_id, r.horizon)


def group_records(records) -> dict:
    groups: dict = {}
    for r in records:
        groups.setdefault(_group_key(r), []).append(r)
    for key in groups:
        groups[key].sort(key=lambda r: r.target)
    return groups


def score_ledger(records) -> list[MetricReport]:
    reports = []
    for (model_id, spec_id, horizon), recs in sorted(group_records(records).items()):
        actual = np.array([r.actual for r in recs])
        pred = np.array([r.prediction for r in recs])
        m = score_all(actual, pred)
        reports.append(MetricReport(model_id, spec_id, horizon,
                                    m["rmse"], m["mdrae"], m["smape"], m["theil_u"],
                                    len(recs)))
    return reports


def split_eval(records, breakpoint: QuarterIndex):
    """Score separately before and from the breakpoint (by target quarter)."""
    pre = [r for r in records if r.target < breakpoint]
    post = [r for r in records if r.target >= breakpoint]
    if not pre or not post:
        raise EmptySplit(f"breakpoint {breakpoint} leaves an empty side "
                         f"(pre={len(pre)}, post={len(post)})")
    return score_ledger(pre), score_ledger(post)


# --- exports ------------------------------------------------------------

LEDGER_COLUMNS = ["origin", "horizon", "model", "spec", "prediction", "actual", "train_n"]


def write_ledger_csv(records, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LEDGER_COLUMNS)
        for r in records:
            writer.writerow([str(r.origin), r.horizon, r.model_id, r.spec_id,
                             repr(float(r.prediction)), repr(float(r.actual)), r.train_n])


def ledger_to_json(records) -> str:
    return json.dumps([
        {"origin": str(r.origin), "horizon": r.horizon, "model": r.model_id,
         "spec": r.spec_id, "prediction": r.prediction, "actual": r.actual,
         "train_n": r.train_n, "features": list(r.features)}
        for r in records
    ], indent=2)


def ledger_from_json(text: str) -> list[ForecastRecord]:
    return [
        ForecastRecord(QuarterIndex.parse(row["origin"]), row["horizon"],
                       row["model"], row["spec"], row["prediction"],
                       row["actual"], row["train_n"],
                       tuple(row.get("features", ())))
        for row in json.loads(text)
    ]


def write_metric_csv(reports: list[MetricReport], path) -> None:
    """Specification x model x horizon table with the four metrics."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["spec", "model", "horizon", "mdrae", "rmse", "smape", "theil_u", "n"])
        for r in sorted(reports, key=lambda r: (r.spec_id, r.model_id, r.horizon)):
            writer.writerow([r.spec_id, r.model_id, r.horizon,
                             f"{r.mdrae:.6g}", f"{r.rmse:.6g}",
                             f"{r.smape:.6g}", f"{r.theil_u:.6g}", r.n])


def reports_to_json(reports: list[MetricReport]) -> str:
    return json.dumps([asdict(r) for r in reports], indent=2)
