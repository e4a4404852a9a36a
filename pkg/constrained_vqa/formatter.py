from typing import Any, Dict, Optional

from .harness import GridResult, RunResult


def format_field_name(field_name: str) -> str:
    """
    Format field name from snake_case to Title Case.

    Args:
        field_name: Field name in snake_case

    Returns:
        Formatted field name
    """
    return field_name.replace('_', ' ').title()


def format_value(value: Any) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def format_block(title: str, fields: Dict[str, Any]) -> str:
    """Aligned `Key: value` lines under a title"""
    width = max((len(format_field_name(k)) for k in fields), default=0)
    lines = [title]
    for key, value in fields.items():
        lines.append(f"  {format_field_name(key).ljust(width)} : {format_value(value)}")
    return "\n".join(lines)


def format_run_summary(result: RunResult) -> str:
    """
    Format a run result as a console text block.

    Args:
        result: Finished run

    Returns:
        Multi-line string
    """
    spec = result.spec
    trace = result.trace
    setup = {
        "problem": result.problem.label,
        "algorithm": spec.algorithm if spec.algorithm == "vqe" else f"qaoa (p={spec.qaoa_depth})",
        "method": spec.method,
        "lambda": result.lambda_used,
        "mode": result.shots_mode,
    }
    optimizer = {
        "evaluations": len(trace.records),
        "termination": trace.termination_reason,
        "best_objective": trace.best_objective,
        "constraint_violated": trace.constraint_violated,
        "wall_time": result.wall_time,
    }
    final = result.final.model_dump(
        include={
            "energy",
            "in_constraint_energy",
            "in_constraint_probability",
            "approximation_ratio",
            "optimal_mass_fraction",
            "is_optimum_modal",
        }
    )
    oracle = {"f_min": result.oracle.f_min, "f_max": result.oracle.f_max, "feasible_count": result.oracle.feasible_count}
    blocks = [
        format_block("Run", setup),
        format_block("Optimizer", optimizer),
        format_block("Final state", final),
        format_block("Oracle", oracle),
    ]
    return "\n\n".join(blocks)


def format_grid_summary(grid: GridResult, top: Optional[int] = 5) -> str:
    """Grid size, baseline point and the best points by approximation ratio"""
    meta = grid.metadata
    lines = [format_block("Grid", {
        "size": f"{meta['grid_gamma']}x{meta['grid_beta']}",
        "baseline_p_ic": meta["baseline"]["in_constraint_probability"],
        "baseline_ratio": meta["baseline"]["approximation_ratio"],
        "max_ratio": meta["max_ratio"],
    })]
    ranked = sorted(
        (p for p in grid.points if p.approximation_ratio is not None),
        key=lambda p: -p.approximation_ratio,
    )
    for point in ranked[:top]:
        lines.append(
            f"  gamma={point.gamma:.4f} beta={point.beta:.4f} "
            f"P_IC={point.in_constraint_probability:.4f} rho={point.approximation_ratio:.4f}"
        )
    return "\n".join(lines)
