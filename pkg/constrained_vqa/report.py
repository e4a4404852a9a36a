# This module aggregates a sweep directory into CSV tables
import logging
import os
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .config import MANIFEST_DB_NAME
from .database import list_runs
from .errors import ParameterError
from .harness import RunResult, RunSpec, read_trace

logger = logging.getLogger(__name__)

DEFAULT_GROUP_BY = ("problem_class", "algorithm", "method", "n_vars", "qaoa_depth")
SUMMARY_METRICS = ("approximation_ratio", "in_constraint_probability", "optimal_mass_fraction")
CURVE_METRICS = ("approximation_ratio", "optimal_mass_fraction", "in_constraint_probability")
EMPTY_GROUP_WARNING = "no completed runs"


def _group_key(spec: Dict, group_by: Sequence[str]) -> tuple:
    return tuple(spec.get(field) for field in group_by)


def _padded(values: List[Optional[float]], length: int) -> List[float]:
    """Per-evaluation series extended to `length` by repeating its last value"""
    series = [np.nan if v is None else float(v) for v in values]
    if not series:
        return [np.nan] * length
    return series + [series[-1]] * (length - len(series))


def load_results(result_dir: str) -> tuple:
    """
    Read the manifest and every completed run of a sweep directory

    Returns:
        (runs, loaded): manifest rows, and (RunResult, trace records) per completed hash
    """
    db_path = os.path.join(result_dir, MANIFEST_DB_NAME)
    if not os.path.exists(db_path):
        raise ParameterError(f"No sweep manifest in {result_dir}")
    runs = list_runs(db_path)
    loaded = {}
    for run in runs:
        if run["status"] != "completed":
            continue
        with open(os.path.join(result_dir, run["result_path"]), encoding="utf-8") as f:
            result = RunResult.model_validate_json(f.read())
        records = read_trace(os.path.join(result_dir, "traces", f"{run['spec_hash']}.jsonl"))
        loaded[run["spec_hash"]] = (result, records)
    logger.info(f"Loaded {len(loaded)} completed runs out of {len(runs)} in {result_dir}")
    return runs, loaded


def summary_table(runs, loaded, group_by: Sequence[str]) -> pd.DataFrame:
    """Five-number summaries of the final metrics per group"""
    groups: Dict[tuple, List[RunResult]] = {}
    for run in runs:
        key = _group_key(run["spec"], group_by)
        groups.setdefault(key, [])
        if run["spec_hash"] in loaded:
            groups[key].append(loaded[run["spec_hash"]][0])

    rows = []
    for key in sorted(groups, key=str):
        base = dict(zip(group_by, key))
        results = groups[key]
        if not results:
            logger.warning(f"Group {base} has no completed runs")
            rows.append({**base, "metric": None, "count": 0, "warning": EMPTY_GROUP_WARNING})
            continue
        for metric in SUMMARY_METRICS:
            values = pd.Series([getattr(r.final, metric) for r in results], dtype=float).dropna()
            row = {**base, "metric": metric, "count": int(values.size)}
            if values.size:
                q = values.quantile([0.0, 0.25, 0.5, 0.75, 1.0]).tolist()
                row.update(min=q[0], q1=q[1], median=q[2], q3=q[3], max=q[4], warning="")
            else:
                row["warning"] = "metric undefined for every run"
            rows.append(row)
    return pd.DataFrame(rows, columns=[*group_by, "metric", "count", "min", "q1", "median", "q3", "max", "warning"])


def quartile_curves(runs, loaded, group_by: Sequence[str]) -> pd.DataFrame:
    """
    25/50/75% of each metric against the evaluation index (1-based)

    Curves run to the longest trace of the group; shorter traces repeat their
    last logged value.
    """
    traces: Dict[tuple, List] = {}
    for run in runs:
        if run["spec_hash"] in loaded:
            traces.setdefault(_group_key(run["spec"], group_by), []).append(loaded[run["spec_hash"]][1])

    frames = []
    for key in sorted(traces, key=str):
        group = traces[key]
        length = max(len(records) for records in group)
        for metric in CURVE_METRICS:
            matrix = pd.DataFrame([_padded([getattr(r, metric) for r in records], length) for records in group])
            quantiles = matrix.quantile([0.25, 0.5, 0.75]).T
            frame = pd.DataFrame({
                "metric": metric,
                "evaluation": np.arange(1, length + 1),
                "q25": quantiles[0.25].to_numpy(),
                "q50": quantiles[0.5].to_numpy(),
                "q75": quantiles[0.75].to_numpy(),
            })
            for field, value in zip(group_by, key):
                frame[field] = value
            frames.append(frame)
    columns = [*group_by, "metric", "evaluation", "q25", "q50", "q75"]
    if not frames:
        return pd.DataFrame(columns=columns)
    return pd.concat(frames, ignore_index=True)[columns]


def modal_table(runs, loaded, group_by: Sequence[str]) -> pd.DataFrame:
    """Fraction of runs whose final state has an optimal solution as its most likely feasible state"""
    groups: Dict[tuple, List] = {}
    for run in runs:
        key = _group_key(run["spec"], group_by)
        groups.setdefault(key, [])
        if run["spec_hash"] in loaded:
            groups[key].append(loaded[run["spec_hash"]][0].final.is_optimum_modal)

    rows = []
    for key in sorted(groups, key=str):
        flags = groups[key]
        row = dict(zip(group_by, key))
        if not flags:
            rows.append({**row, "runs": 0, "modal_runs": 0, "modal_fraction": None, "warning": EMPTY_GROUP_WARNING})
            continue
        modal = sum(1 for flag in flags if flag)
        rows.append({**row, "runs": len(flags), "modal_runs": modal, "modal_fraction": modal / len(flags), "warning": ""})
    return pd.DataFrame(rows, columns=[*group_by, "runs", "modal_runs", "modal_fraction", "warning"])


def report(result_dir: str, group_by: Sequence[str] = DEFAULT_GROUP_BY, out_dir: Optional[str] = None) -> Dict[str, str]:
    """
    Write summary.csv, quartiles.csv and modal.csv for a sweep directory

    Args:
        result_dir: Sweep directory (holds manifest.db)
        group_by: RunSpec fields that define a group
        out_dir: Where to write the tables; defaults to <result_dir>/report

    Returns:
        Dict of table name to file path
    """
    group_by = tuple(group_by)
    unknown = [field for field in group_by if field not in RunSpec.model_fields]
    if unknown:
        raise ParameterError(f"Unknown group_by fields: {unknown}")
    out_dir = out_dir or os.path.join(result_dir, "report")
    os.makedirs(out_dir, exist_ok=True)

    runs, loaded = load_results(result_dir)
    tables = {
        "summary": summary_table(runs, loaded, group_by),
        "quartiles": quartile_curves(runs, loaded, group_by),
        "modal": modal_table(runs, loaded, group_by),
    }
    paths = {}
    for name, table in tables.items():
        paths[name] = os.path.join(out_dir, f"{name}.csv")
        table.to_csv(paths[name], index=False)
        logger.info(f"Wrote {paths[name]} ({len(table)} rows)")
    return paths
