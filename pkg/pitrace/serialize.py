"""
File formats.

Instance JSON follows {"n_states", "actions"} with rationals as "p/q"
strings; generated instances add "state_names" and "params". Traces are
JSONL, one line per iteration. Reports are a single JSON object.
"""

import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

from .constants import Criterion
from .errors import FormatError, InvalidSwitchError, TraceMismatch
from .evaluation import ValueReport
from .instance import HardInstance, InstanceParams, bits_to_int
from .iteration import IterationRecord, SwitchDecision, TraceRecord
from .mdp import switch
from .models import Action, Mdp, Policy
from .rational import format_rational, parse_rational
from .verify import CheckReport

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _parse_index(value, what: str) -> int:
    """Accept JSON integers only; floats and booleans are rejected."""
    if isinstance(value, bool) or not isinstance(value, int):
        raise FormatError(f"{what} must be an integer, got {value!r}")
    return value


@dataclass
class LoadedInstance:
    mdp: Mdp
    names: Optional[Tuple[str, ...]] = None
    params: Optional[InstanceParams] = None


def mdp_to_dict(mdp: Mdp) -> dict:
    return {
        "n_states": mdp.n_states,
        "actions": [
            [
                {
                    "reward": format_rational(action.reward),
                    "label": action.label,
                    "transitions": [
                        [target, format_rational(prob)]
                        for target, prob in action.transitions
                    ],
                }
                for action in actions
            ]
            for actions in mdp.actions
        ],
    }


def mdp_from_dict(data: dict) -> Mdp:
    try:
        n_states = data["n_states"]
        rows = data["actions"]
        if len(rows) != n_states:
            raise FormatError(
                f"n_states is {n_states} but {len(rows)} action lists are given"
            )
        return Mdp(
            tuple(
                tuple(
                    Action(
                        parse_rational(entry["reward"]),
                        tuple(
                            (
                                _parse_index(target, "Transition target"),
                                parse_rational(prob),
                            )
                            for target, prob in entry["transitions"]
                        ),
                        entry.get("label"),
                    )
                    for entry in row
                )
                for row in rows
            )
        )
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise FormatError(f"Malformed MDP description: {e}")


def instance_to_dict(instance: HardInstance) -> dict:
    data = mdp_to_dict(instance.mdp)
    data["state_names"] = {str(sid): name for sid, name in enumerate(instance.names)}
    data["params"] = {
        "n": instance.params.n,
        "exit_edges": instance.params.exit_edges,
    }
    return data


def write_instance(instance: HardInstance, path: PathLike) -> Path:
    path = Path(path)
    path.write_text(json.dumps(instance_to_dict(instance), indent=2) + "\n")
    logger.info(f"Instance n={instance.params.n} written to {path}")
    return path


def load_instance(path: PathLike) -> LoadedInstance:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise FormatError(f"{path} is not valid JSON: {e}")
    mdp = mdp_from_dict(data)
    names = None
    params = None
    try:
        if "state_names" in data:
            table = data["state_names"]
            names = tuple(table[str(sid)] for sid in range(mdp.n_states))
        if "params" in data:
            params = InstanceParams(
                _parse_index(data["params"]["n"], "params.n"),
                data["params"].get("exit_edges", "upward"),
            )
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise FormatError(f"Malformed state_names or params in {path}: {e}")
    return LoadedInstance(mdp, names, params)


def _vector(values) -> Dict[str, str]:
    return {str(sid): format_rational(v) for sid, v in enumerate(values)}


def trace_lines(trace: TraceRecord) -> Iterable[str]:
    for record in trace.iterations:
        entry = {
            "iter": record.index,
            "switches": [
                dict(
                    {
                        "state": d.state,
                        "from": d.from_action,
                        "to": d.to_action,
                        "gap": format_rational(d.appeal_gap),
                    },
                    **({"via_gain": True} if d.via_gain else {}),
                )
                for d in record.switches
            ],
        }
        if record.values is not None:
            entry["values"] = _vector(record.values.values)
            if record.values.gain is not None:
                entry["gain"] = _vector(record.values.gain)
        yield json.dumps(entry)


def write_trace(trace: TraceRecord, path: PathLike) -> Path:
    path = Path(path)
    with open(path, "w") as f:
        for line in trace_lines(trace):
            f.write(line + "\n")
    logger.info(f"Trace with {len(trace.iterations)} records written to {path}")
    return path


def _parse_vector(table: dict, n_states: int) -> Tuple[Fraction, ...]:
    if not isinstance(table, dict):
        raise FormatError(f"Value table must be an object, got {table!r}")
    if set(table) != {str(s) for s in range(n_states)}:
        raise TraceMismatch(f"Value table does not cover exactly {n_states} states")
    return tuple(parse_rational(table[str(s)]) for s in range(n_states))


def replay_trace(mdp: Mdp, initial: Policy, lines: Iterable[str]):
    """
    Rebuild a TraceRecord from JSONL lines by applying the recorded switches.

    Returns (trace, report); report holds one "trace-replay" check per line
    confirming that the recorded from-actions match the replayed policy.

    Raises:
        FormatError: a line is not valid JSON or not shaped like an iteration
        TraceMismatch: a line names a state or action the MDP does not have
    """
    report = CheckReport()
    trace = TraceRecord()
    policy = initial
    entries = [line for line in lines if line.strip()]
    for k, line in enumerate(entries):
        try:
            entry = json.loads(line)
        except json.JSONDecodeError as e:
            raise FormatError(f"Trace line {k} is not valid JSON: {e}")
        if not isinstance(entry, dict) or not isinstance(
            entry.get("switches", []), list
        ):
            raise FormatError(f"Trace line {k} is not an iteration object")
        report.check(
            "trace-replay",
            entry.get("iter") == k,
            iteration=k,
            detail=f"line carries iter={entry.get('iter')}",
        )
        decisions = []
        for item in entry.get("switches", []):
            try:
                state, src, dst = (
                    _parse_index(item[key], f"Trace line {k} switch {key!r}")
                    for key in ("state", "from", "to")
                )
            except (KeyError, TypeError):
                raise FormatError(f"Trace line {k} has a malformed switch: {item!r}")
            if not (0 <= state < mdp.n_states) or not all(
                0 <= a < len(mdp.actions[state]) for a in (src, dst)
            ):
                raise TraceMismatch(
                    f"Line {k} switches state {state} from {src} to {dst}, "
                    f"which the instance does not have"
                )
            report.check(
                "trace-replay",
                policy[state] == src,
                iteration=k,
                state=str(state),
                detail=f"recorded from-action {src}, replayed policy has {policy[state]}",
            )
            decisions.append(
                SwitchDecision(
                    state,
                    src,
                    dst,
                    parse_rational(item.get("gap", "0")),
                    bool(item.get("via_gain", False)),
                )
            )
        values = None
        if "values" in entry:
            gain = None
            if "gain" in entry:
                gain = _parse_vector(entry["gain"], mdp.n_states)
            values = ValueReport(
                Criterion.AVERAGE if gain is not None else Criterion.TOTAL,
                _parse_vector(entry["values"], mdp.n_states),
                gain,
            )
        is_last = k == len(entries) - 1
        if not decisions and not is_last:
            report.check(
                "trace-replay", False, iteration=k, detail="empty switch set mid-trace"
            )
        trace.iterations.append(IterationRecord(k, policy, values, tuple(decisions)))
        try:
            policy = switch(mdp, policy, [(d.state, d.to_action) for d in decisions])
        except InvalidSwitchError as e:
            raise TraceMismatch(f"Line {k}: {e}")
    trace.terminated = bool(trace.iterations) and not trace.iterations[-1].switches
    return trace, report


def read_trace(mdp: Mdp, initial: Policy, path: PathLike):
    with open(path) as f:
        return replay_trace(mdp, initial, f.readlines())


def _witness(failure) -> dict:
    witness = {}
    if failure.iteration is not None:
        witness["iteration"] = failure.iteration
    if failure.state is not None:
        witness["state"] = failure.state
    if failure.left is not None:
        witness["left"] = format_rational(failure.left)
    if failure.right is not None:
        witness["right"] = format_rational(failure.right)
    if failure.detail:
        witness["detail"] = failure.detail
    return witness


def report_to_dict(
    n: Optional[int],
    trace: TraceRecord,
    milestones: List[Tuple[int, frozenset]],
    report,
) -> dict:
    checks = []
    for name in report.counts:
        entry = {"name": name, "pass": not report.failed(name)}
        first = report.first_failure(name)
        if first is not None:
            entry["witness"] = _witness(first)
        checks.append(entry)
    return {
        "n": n,
        "iterations": trace.iteration_count,
        "terminated": trace.terminated,
        "milestones": [[k, bits_to_int(bits)] for k, bits in milestones],
        "checks": checks,
        "mismatches": [dict(_witness(m), name=m.name) for m in report.mismatches],
    }


def write_report(data: dict, path: PathLike) -> Path:
    path = Path(path)
    path.write_text(json.dumps(data, indent=2) + "\n")
    logger.info(f"Report written to {path}")
    return path


def to_dot(instance: HardInstance, policy: Optional[Policy] = None) -> str:
    """Graphviz rendering; actions chosen by policy are drawn bold."""
    lines = [f'digraph "instance-n{instance.params.n}" {{', "  rankdir=LR;"]
    for sid, name in enumerate(instance.names):
        shape = "doublecircle" if sid == instance.mdp.n_states - 1 else "circle"
        lines.append(f'  "{name}" [shape={shape}];')
    for sid, actions in enumerate(instance.mdp.actions):
        source = instance.names[sid]
        for index, action in enumerate(actions):
            bold = policy is not None and policy[sid] == index
            style = ", style=bold" if bold else ""
            for target, prob in action.transitions:
                label = format_rational(action.reward)
                if prob != 1:
                    label = f"{action.label} p={format_rational(prob)}"
                lines.append(
                    f'  "{source}" -> "{instance.names[target]}" [label="{label}"{style}];'
                )
    lines.append("}")
    return "\n".join(lines) + "\n"
