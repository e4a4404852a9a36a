import json
import logging
import os
import sys

import click

from constrained_vqa.config import GRID_BETA, GRID_GAMMA, HOST, LOG_DIR, LOG_LEVEL, PORT, RESULTS_DIR, SWEEP_PARALLELISM
from constrained_vqa.errors import ConstrainedVQAError
from constrained_vqa.formatter import format_grid_summary, format_run_summary
from constrained_vqa.harness import (
    RunSpec,
    build_instance,
    expand_profile,
    load_profile,
    load_specs,
    run_grid,
    run_single,
    sweep,
    write_trace,
)
from constrained_vqa.instances import PROBLEM_CLASSES
from constrained_vqa.report import DEFAULT_GROUP_BY, report
from constrained_vqa.solver import METHODS

logger = logging.getLogger(__name__)


def setup_logging():
    if not os.path.exists(LOG_DIR):
        os.makedirs(LOG_DIR)

    logging.basicConfig(
        level=getattr(logging, LOG_LEVEL.upper(), logging.INFO),
        format='%(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(os.path.join(LOG_DIR, 'constrained_vqa.log')),
            logging.StreamHandler()
        ]
    )


def run_options(func):
    """Flags mirroring the RunSpec fields"""
    options = [
        click.option("--problem-class", type=click.Choice(PROBLEM_CLASSES), default="portfolio", show_default=True),
        click.option("--n-vars", type=int, default=6, show_default=True),
        click.option("--algorithm", type=click.Choice(["vqe", "qaoa"]), default="vqe", show_default=True),
        click.option("--qaoa-depth", type=int, default=1, show_default=True),
        click.option("--method", type=click.Choice(METHODS), default="ic_energy_bounded", show_default=True),
        click.option("--pic-bound", type=float, default=0.05, show_default=True),
        click.option("--penalty-lambda", default="auto", show_default=True, help="Number or 'auto'"),
        click.option("--max-evals", type=int, default=300, show_default=True),
        click.option("--seed", "instance_seed", type=int, default=0, show_default=True, help="Instance seed"),
        click.option("--param-seed", type=int, default=None, help="Defaults to --seed"),
        click.option("--shots", default="exact", show_default=True, help="Integer or 'exact'"),
        click.option("--qaoa-phase", type=click.Choice(["penalized", "plain"]), default="penalized", show_default=True),
        click.option("--objective", type=click.Choice(["cut", "same_side"]), default="cut", show_default=True),
        click.option("--spec", "spec_file", type=click.Path(exists=True), default=None,
                     help="RunSpec JSON file; overrides the flags"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def spec_from_options(spec_file, param_seed, **fields) -> RunSpec:
    if spec_file:
        with open(spec_file, encoding="utf-8") as f:
            return RunSpec.model_validate(json.load(f))
    fields["param_seed"] = fields["instance_seed"] if param_seed is None else param_seed
    return RunSpec(**fields)


@click.group()
def cli():
    """Constrained combinatorial optimization with simulated VQE and QAOA"""
    setup_logging()


@cli.command()
@click.option("--problem-class", type=click.Choice(PROBLEM_CLASSES), required=True)
@click.option("--n-vars", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--count", type=int, default=1, show_default=True)
@click.option("--out", "out_dir", default=os.path.join(RESULTS_DIR, "instances"), show_default=True)
def generate(problem_class, n_vars, seed, count, out_dir):
    """Write instance files (instance, problem and oracle)"""
    os.makedirs(out_dir, exist_ok=True)
    for k in range(count):
        spec = RunSpec(problem_class=problem_class, n_vars=n_vars, instance_seed=seed + k)
        instance, problem, oracle = build_instance(spec)
        path = os.path.join(out_dir, f"{problem.label}.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump({
                "instance": instance.model_dump(mode="json"),
                "problem": problem.model_dump(mode="json"),
                "oracle": oracle.model_dump(mode="json"),
            }, f, indent=2)
        click.echo(path)


@cli.command()
@run_options
@click.option("--out", "out_dir", default=None, help="Write result JSON and trace here")
def run(out_dir, **options):
    """Run one optimization and print its summary"""
    spec = spec_from_options(**options)
    try:
        result = run_single(spec)
    except ConstrainedVQAError as e:
        logger.error(f"Run failed: {str(e)}")
        sys.exit(1)
    click.echo(format_run_summary(result))
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        spec_hash = spec.spec_hash()
        with open(os.path.join(out_dir, f"{spec_hash}.json"), "w", encoding="utf-8") as f:
            f.write(result.model_dump_json(indent=2))
        write_trace(os.path.join(out_dir, f"{spec_hash}.jsonl"), result.trace)


@cli.command()
@run_options
@click.option("--grid-gamma", type=int, default=GRID_GAMMA, show_default=True)
@click.option("--grid-beta", type=int, default=GRID_BETA, show_default=True)
@click.option("--with-traces", is_flag=True, help="Overlay the traces of all three methods")
@click.option("--out", "out_dir", default=os.path.join(RESULTS_DIR, "grid"), show_default=True)
def grid(grid_gamma, grid_beta, with_traces, out_dir, **options):
    """p=1 QAOA grid search over [0, 2pi) x [0, pi)"""
    options["algorithm"] = "qaoa"
    options["qaoa_depth"] = 1
    spec = spec_from_options(**options)
    result = run_grid(spec, grid_gamma, grid_beta, with_traces)
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"grid_{spec.spec_hash()}.json")
    with open(path, "w", encoding="utf-8") as f:
        f.write(result.model_dump_json(indent=2))
    click.echo(format_grid_summary(result))
    click.echo(path)


@cli.command("sweep")
@click.option("--profile", default=None, help="desk, paper or a YAML profile path")
@click.option("--specs", "spec_file", type=click.Path(exists=True), default=None,
              help="JSON spec list or YAML profile")
@click.option("--seed", type=int, default=0, show_default=True, help="Base seed of the profile")
@click.option("--parallelism", type=int, default=SWEEP_PARALLELISM, show_default=True)
@click.option("--out", "out_dir", default=os.path.join(RESULTS_DIR, "sweep"), show_default=True)
def sweep_command(profile, spec_file, seed, parallelism, out_dir):
    """Run a profile or spec list; exits with 2 when any run failed"""
    if spec_file:
        specs = load_specs(spec_file)
    else:
        specs = expand_profile(load_profile(profile or "desk"), base_seed=seed)
    outcome = sweep(specs, out_dir, parallelism)
    click.echo(
        f"{outcome.completed} completed, {outcome.skipped} skipped, {outcome.failed} failed -> {outcome.path}"
    )
    if outcome.failed:
        sys.exit(2)


@cli.command("report")
@click.argument("result_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--group-by", multiple=True, default=DEFAULT_GROUP_BY, show_default=True)
@click.option("--out", "out_dir", default=None)
def report_command(result_dir, group_by, out_dir):
    """Write summary, quartile and modal-fraction CSV tables"""
    for name, path in report(result_dir, group_by, out_dir).items():
        click.echo(f"{name}: {path}")


@cli.command()
@click.option("--host", default=HOST, show_default=True)
@click.option("--port", type=int, default=PORT, show_default=True)
def serve(host, port):
    """Start the HTTP API"""
    import uvicorn

    from constrained_vqa.api import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    cli()
