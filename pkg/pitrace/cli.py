import logging
import re
from pathlib import Path
from typing import Optional, Tuple

import click

from .bench import format_csv, format_json, run_bench
from .config import (
    BENCH_FORMATS,
    PitraceConfig,
    create_example_config,
    get_default_config_path,
    load_config,
)
from .constants import (
    EXIT_BUDGET,
    EXIT_EVALUATION,
    EXIT_IO,
    EXIT_OK,
    EXIT_VALIDATION,
    EXIT_VERIFY,
    LOG_FORMAT,
    Criterion,
    TieMode,
)
from .errors import (
    AmbiguousArgmax,
    FormatError,
    IllDefinedTotalReward,
    InstanceError,
    IterationBudgetExceeded,
    PitraceError,
    SingularSystem,
    TraceMismatch,
)
from .instance import EXIT_EDGE_MODES, InstanceParams, build, initial_policy
from .iteration import RunConfig, default_max_iterations, run
from .mdp import validate
from .models import Mdp, Policy
from .serialize import (
    load_instance,
    read_trace,
    report_to_dict,
    to_dot,
    write_instance,
    write_report,
    write_trace,
)
from .verify import (
    Strictness,
    verify_assumptions,
    verify_closed_forms,
    verify_counter,
    verify_criterion_equivalence,
    verify_monotonicity,
    verify_phases,
)

logger = logging.getLogger(__name__)


def parse_n_range(ctx, param, value):
    """Accept "A..B" or a single integer; all values must be >= 1."""
    if value is None:
        return value
    match = re.match(r"^\s*(\d+)\s*(?:\.\.\s*(\d+)\s*)?$", value)
    if not match:
        raise click.BadParameter(f"Expected N or A..B, got {value!r}")
    low = int(match.group(1))
    high = int(match.group(2) or low)
    if low < 1 or high < low:
        raise click.BadParameter(f"Range {value!r} is empty or starts below 1")
    return list(range(low, high + 1))


def _fail(ctx, code: int, message: str):
    logger.error(message)
    click.echo(f"Error: {message}", err=True)
    ctx.exit(code)


def _output_path(config: PitraceConfig, explicit: Optional[str], name: str) -> Path:
    if explicit:
        return Path(explicit)
    return Path(config.output_dir) / name


def _prepare(ctx, path: Path) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        _fail(ctx, EXIT_IO, f"Cannot create directory for {path}: {e}")
    return path


def _resolve_instance(
    ctx, n: Optional[int], instance_path: Optional[str]
) -> Tuple[Mdp, Optional[InstanceParams], Tuple[str, ...], str]:
    """Return (mdp, params or None, state names, file stem) from --n or --instance."""
    if (n is None) == (instance_path is None):
        raise click.UsageError("Give exactly one of --n or --instance")
    if n is not None:
        params = InstanceParams(n)
        instance = build(params)
        return instance.mdp, params, instance.names, f"n{n}"

    try:
        loaded = load_instance(instance_path)
    except (FormatError, InstanceError) as e:
        _fail(ctx, EXIT_VALIDATION, f"Cannot load {instance_path}: {e}")
    except OSError as e:
        _fail(ctx, EXIT_IO, f"Cannot read {instance_path}: {e}")
    report = validate(loaded.mdp)
    if not report.ok:
        _fail(ctx, EXIT_VALIDATION, f"Invalid MDP in {instance_path}: {report}")
    names = loaded.names or tuple(str(s) for s in loaded.mdp.states)
    params = loaded.params
    if params is not None and build(params).mdp != loaded.mdp:
        logger.warning(
            f"{instance_path} declares n={params.n} but differs from the generated "
            "instance; treating it as a generic MDP"
        )
        params = None
    stem = f"n{params.n}" if params else Path(instance_path).stem
    return loaded.mdp, params, names, stem


@click.group()
@click.option("--config", type=click.Path(), help="Path to configuration file")
@click.option("--debug", is_flag=True, help="Enable debug logging")
@click.pass_context
def main(ctx, config, debug):
    """Pitrace - greedy policy iteration and its exponential lower-bound family."""
    ctx.ensure_object(dict)
    try:
        settings = load_config(config)
    except PitraceError as e:
        _fail(ctx, EXIT_VALIDATION, str(e))
    ctx.obj["config"] = settings

    log_level = logging.DEBUG if debug else getattr(logging, settings.log_level.upper())
    logging.basicConfig(level=log_level, format=LOG_FORMAT)
    if settings.log_file:
        try:
            handler = logging.FileHandler(settings.log_file)
        except OSError as e:
            _fail(ctx, EXIT_IO, f"Cannot open log file {settings.log_file}: {e}")
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logging.getLogger().addHandler(handler)


@main.command()
@click.option("--n", "n", type=click.IntRange(min=1), required=True, help="Number of bits")
@click.option("--out", type=click.Path(dir_okay=False), help="Instance JSON path")
@click.option("--dot", type=click.Path(dir_okay=False), help="Also write a Graphviz file")
@click.option(
    "--exit-edges",
    type=click.Choice(EXIT_EDGE_MODES),
    default="upward",
    show_default=True,
    help="Which (b_i, f_j) actions to generate",
)
@click.pass_context
def generate(ctx, n, out, dot, exit_edges):
    """Write the lower-bound instance for n bits."""
    config = ctx.obj["config"]
    instance = build(InstanceParams(n, exit_edges))
    report = validate(instance.mdp)
    if not report.ok:
        _fail(ctx, EXIT_VALIDATION, f"Generated instance is invalid: {report}")

    path = _prepare(ctx, _output_path(config, out, f"instance-n{n}.json"))
    try:
        write_instance(instance, path)
        if dot:
            Path(dot).write_text(to_dot(instance, initial_policy(instance.params)))
    except OSError as e:
        _fail(ctx, EXIT_IO, f"Cannot write instance: {e}")
    click.echo(f"Wrote {instance.mdp.n_states} states to {path}")


@main.command("run")
@click.option("--n", "n", type=click.IntRange(min=1), help="Generate instance n")
@click.option("--instance", "instance_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--criterion", type=click.Choice([c.value for c in Criterion]))
@click.option("--tie-mode", type=click.Choice([t.value for t in TieMode]))
@click.option("--max-iterations", type=click.IntRange(min=1))
@click.option("--trace-out", type=click.Path(dir_okay=False), help="Trace JSONL path")
@click.option("--record-values/--no-record-values", default=None)
@click.pass_context
def run_command(
    ctx, n, instance_path, criterion, tie_mode, max_iterations, trace_out, record_values
):
    """Run greedy policy iteration and write its trace."""
    config = ctx.obj["config"]
    criterion = Criterion(criterion or config.run.criterion)
    tie_mode = TieMode(tie_mode or config.run.tie_mode)
    if record_values is None:
        record_values = config.run.record_values

    mdp, params, names, stem = _resolve_instance(ctx, n, instance_path)
    if max_iterations is None:
        max_iterations = config.run.max_iterations or default_max_iterations(
            params.n if params else None
        )
    initial = initial_policy(params) if params else Policy((0,) * mdp.n_states)
    run_config = RunConfig(criterion, max_iterations, tie_mode, record_values)

    code = EXIT_OK
    try:
        trace = run(mdp, initial, run_config)
    except IterationBudgetExceeded as e:
        trace = e.trace
        code = EXIT_BUDGET
    except (IllDefinedTotalReward, AmbiguousArgmax) as e:
        _fail(ctx, EXIT_EVALUATION, f"{e} (state {names[e.state]})")
    except SingularSystem as e:
        _fail(ctx, EXIT_EVALUATION, f"Evaluation failed: {e}")

    path = _prepare(
        ctx, _output_path(config, trace_out, f"trace-{stem}-{criterion.value}.jsonl")
    )
    try:
        write_trace(trace, path)
    except OSError as e:
        _fail(ctx, EXIT_IO, f"Cannot write trace: {e}")

    shown_n = params.n if params else "-"
    click.echo(
        f"n={shown_n} criterion={criterion.value} "
        f"iterations={trace.iteration_count} "
        f"terminated={str(trace.terminated).lower()}"
    )
    if code == EXIT_BUDGET:
        _fail(ctx, EXIT_BUDGET, f"Iteration budget of {max_iterations} exhausted")


@main.command()
@click.option("--trace", "trace_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--n", "n", type=click.IntRange(min=1))
@click.option("--instance", "instance_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--tier", type=click.Choice(["1", "2"]))
@click.option("--report-out", type=click.Path(dir_okay=False))
@click.option("--check-criteria", is_flag=True, help="Also rerun under both criteria")
@click.pass_context
def verify(ctx, trace_path, n, instance_path, tier, report_out, check_criteria):
    """Check a trace against the predicted binary-counter behaviour."""
    config = ctx.obj["config"]
    tier = int(tier or config.verify.tier)
    mdp, params, _, _ = _resolve_instance(ctx, n, instance_path)
    if params is None:
        raise click.UsageError("verify needs a generated instance (--n or a generated file)")

    try:
        trace, report = read_trace(mdp, initial_policy(params), trace_path)
    except (FormatError, TraceMismatch) as e:
        _fail(ctx, EXIT_VALIDATION, f"Trace does not match instance n={params.n}: {e}")

    milestones = verify_counter(trace, params)
    report.merge(milestones.to_checks())
    report.merge(verify_assumptions(trace, params))
    report.merge(verify_closed_forms(trace, params))
    report.merge(verify_monotonicity(trace, mdp))
    if check_criteria:
        report.merge(verify_criterion_equivalence(params))
    if tier == 2:
        report.merge(verify_phases(trace, params, Strictness.REPORT))

    path = _prepare(ctx, _output_path(config, report_out, f"report-n{params.n}.json"))
    try:
        write_report(report_to_dict(params.n, trace, milestones.milestones, report), path)
    except OSError as e:
        _fail(ctx, EXIT_IO, f"Cannot write report: {e}")

    failed = sorted({f.name for f in report.failures})
    click.echo(
        f"n={params.n} milestones={len(milestones.milestones)}/{2**params.n} "
        f"checks={len(report.counts)} failed={len(failed)} "
        f"mismatches={len(report.mismatches)}"
    )
    if failed:
        _fail(ctx, EXIT_VERIFY, f"Failed checks: {', '.join(failed)}")


@main.command()
@click.option("--n", "ns", required=True, callback=parse_n_range, help="Range A..B")
@click.option("--criterion", type=click.Choice([c.value for c in Criterion]))
@click.option("--format", "fmt", type=click.Choice(BENCH_FORMATS))
@click.option("--workers", type=click.IntRange(min=1))
@click.option("--out", type=click.Path(dir_okay=False), help="Write the table here")
@click.pass_context
def bench(ctx, ns, criterion, fmt, workers, out):
    """Measure iteration counts over a range of n."""
    config = ctx.obj["config"]
    results = run_bench(
        ns,
        Criterion(criterion or config.bench.criterion),
        workers or config.bench.workers,
        config.bench.record_values,
    )
    text = (format_json if (fmt or config.bench.format) == "json" else format_csv)(results)
    if out:
        path = _prepare(ctx, Path(out))
        try:
            path.write_text(text)
        except OSError as e:
            _fail(ctx, EXIT_IO, f"Cannot write bench table: {e}")
        click.echo(f"Bench table written to {path}")
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--output", type=click.Path(), help="Output path for example config")
def init_config(output):
    """Create an example configuration file."""
    if output:
        config_path = Path(output)
    else:
        config_path = get_default_config_path().parent / "config.example.yaml"

    create_example_config(str(config_path))
    click.echo(f"Example configuration created at: {config_path}")


if __name__ == "__main__":
    main()
