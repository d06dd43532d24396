"""Command-line interface: validate, solve, play, assess, protocol, serve.

Exit codes: 0 success, 1 domain error (diagnostics emitted), 2 usage error.
With --format json every result is a single JSON object on stdout and every
error/diagnostic is one JSON object per line on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys

from .assessment import (StepRecord, Trajectory, TrajectoryIntegrityError,
                         build_report, report_to_document, score_trajectory,
                         trajectory_from_jsonl, trajectory_to_jsonl)
from .model import available_actions, step
from .protocol import (ProtocolError, evaluate_protocol, compare_protocols,
                       parse_protocol)
from .scenario_io import (BUILTIN_SCENARIOS, parse_scenario, scenario_hash)
from .solver import (SolveConfig, pmovi, solution_from_document,
                     solution_to_json)

TEXT = "text"
JSON = "json"

DEFAULT_PORT = 8080
DEFAULT_DATA_DIR = "./sessions"


class CliFailure(Exception):
    """Raised by subcommands to abort with a structured error."""

    def __init__(self, exit_code: int, code: str, message: str, **details):
        super().__init__(message)
        self.exit_code = exit_code
        self.code = code
        self.details = details


def _print_error(fmt: str, code: str, message: str, **details) -> None:
    if fmt == JSON:
        record = {"severity": "error", "code": code, "message": message}
        if details:
            record["details"] = details
        print(json.dumps(record), file=sys.stderr)
    else:
        print(f"error[{code}]: {message}", file=sys.stderr)


def _print_diagnostics(fmt: str, diagnostics) -> None:
    for d in diagnostics:
        if fmt == JSON:
            print(json.dumps({
                "severity": d.severity, "code": d.code,
                "location": d.location, "message": d.message,
                "line": d.line, "column": d.column}), file=sys.stderr)
        else:
            print(str(d), file=sys.stderr)


def _read_text(path: str) -> str:
    if not os.path.exists(path):
        raise CliFailure(2, "no-such-file", f"file not found: {path}",
                         path=path)
    with open(path, encoding="utf-8") as f:
        return f.read()


def _load_scenario(ref: str, fmt: str):
    """A scenario argument is either a file path or a built-in name."""
    if ref in BUILTIN_SCENARIOS and not os.path.exists(ref):
        return BUILTIN_SCENARIOS[ref]()
    model, diagnostics = parse_scenario(_read_text(ref))
    _print_diagnostics(fmt, diagnostics)
    if model is None:
        raise CliFailure(1, "invalid-scenario",
                         f"scenario {ref} failed validation")
    return model


def _make_config(args) -> SolveConfig:
    try:
        return SolveConfig(gamma=args.gamma, horizon=args.horizon)
    except ValueError as exc:
        raise CliFailure(2, "bad-config", str(exc)) from None


def _parse_weights(text, value_names):
    if text is None:
        return None
    try:
        weights = tuple(float(w) for w in text.split(","))
    except ValueError:
        raise CliFailure(2, "bad-weights",
                         f"weights must be comma-separated numbers, "
                         f"got {text!r}") from None
    if len(weights) != len(value_names):
        raise CliFailure(2, "bad-weights",
                         f"expected {len(value_names)} weights "
                         f"({', '.join(value_names)}), got {len(weights)}")
    return weights


# --- validate ----------------------------------------------------------------

def cmd_validate(args) -> int:
    model, diagnostics = parse_scenario(_read_text(args.scenario))
    _print_diagnostics(args.format, diagnostics)
    if model is None:
        return 1
    summary = {
        "ok": True,
        "name": model.name,
        "variables": len(model.variables),
        "states": model.state_count(),
        "actions": len(model.actions),
        "values": len(model.value_names),
        "warnings": sum(1 for d in diagnostics if d.severity == "warning"),
    }
    if args.format == JSON:
        print(json.dumps(summary))
    else:
        print(f"OK: {summary['variables']} variables, "
              f"{summary['states']} states, {summary['actions']} actions, "
              f"{summary['values']} values")
    return 0


# --- solve -------------------------------------------------------------------

def cmd_solve(args) -> int:
    model = _load_scenario(args.scenario, args.format)
    config = _make_config(args)
    solution = pmovi(model, config, scenario_hash=scenario_hash(model))
    output = args.output or f"{model.name}.front.json"
    with open(output, "w", encoding="utf-8") as f:
        f.write(solution_to_json(solution, model))
    front = solution.front_at(model.initial_state)
    summary = {
        "scenario": model.name,
        "output": output,
        "gamma": config.gamma,
        "horizon": config.horizon,
        "sweeps": solution.sweeps,
        "converged": solution.converged,
        "approximate": solution.approximate,
        "front_size": len(front),
        "front": [list(v) for v in front],
        "per_value_max": {
            name: max(v[k] for v in front)
            for k, name in enumerate(model.value_names)},
    }
    if args.format == JSON:
        print(json.dumps(summary))
    else:
        print(f"solved {model.name}: {len(front)} non-dominated "
              f"policies at the initial state "
              f"({solution.sweeps} sweeps, "
              f"{'converged' if solution.converged else 'NOT converged'})")
        for v in front:
            print("  " + "  ".join(f"{name}={x:.6g}" for name, x in
                                   zip(model.value_names, v)))
        print(f"front written to {output}")
    if solution.approximate:
        _print_error(args.format, "approximate-front",
                     "per-state vector cap was hit; front is a lower bound")
    if not solution.converged:
        _print_error(args.format, "not-converged",
                     f"solver stopped after {solution.sweeps} sweeps without "
                     f"reaching the convergence threshold")
        return 1
    return 0


# --- play --------------------------------------------------------------------

def _read_script(path: str) -> list[str]:
    names = []
    for line in _read_text(path).splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            names.append(line)
    return names


def _prompt_action(model, state, index):
    actions = available_actions(model, state)
    print(f"\n-- step {index} --")
    for name, level in model.levels_of(state).items():
        print(f"  {name}: {level}")
    for i, action in enumerate(actions, start=1):
        print(f"  [{i}] {action}")
    while True:
        try:
            raw = input("action (number/name, q to stop): ").strip()
        except EOFError:
            return None
        if raw.lower() in ("q", "quit", ""):
            return None
        if raw.isdigit() and 1 <= int(raw) <= len(actions):
            return actions[int(raw) - 1]
        if raw in actions:
            return raw
        print(f"  unknown action {raw!r}")


def cmd_play(args) -> int:
    model = _load_scenario(args.scenario, args.format)
    script = _read_script(args.script) if args.script else None
    rng = random.Random(args.seed)
    state = model.initial_state
    steps = []
    terminal = None
    index = 0
    while index < args.max_steps and terminal is None:
        if script is not None:
            if index >= len(script):
                break
            action = script[index]
            if action not in available_actions(model, state):
                raise CliFailure(
                    1, "illegal-action",
                    f"step {index}: action {action!r} is not available",
                    step=index, available=available_actions(model, state))
        else:
            action = _prompt_action(model, state, index)
            if action is None:
                break
        out = step(model, state, action, rng)
        steps.append(StepRecord(index, state, action, out.alignment,
                                out.next_state))
        if script is None and args.reveal:
            print("  alignment: " +
                  "  ".join(f"{name}={x:+g}" for name, x in
                            zip(model.value_names, out.alignment)))
        state = out.next_state
        terminal = out.terminal
        index += 1
    outcome = terminal or "truncated"
    trajectory = Trajectory(model.name, scenario_hash(model), args.seed,
                            args.gamma, tuple(steps), outcome)
    output = args.output or f"{model.name}.traj.jsonl"
    with open(output, "w", encoding="utf-8") as f:
        f.write(trajectory_to_jsonl(model, trajectory))
    cumulative, _ = score_trajectory(model, trajectory, args.gamma)
    summary = {
        "scenario": model.name,
        "output": output,
        "seed": args.seed,
        "steps": len(steps),
        "outcome": outcome,
        "cumulative": dict(zip(model.value_names, cumulative)),
    }
    if args.format == JSON:
        print(json.dumps(summary))
    else:
        print(f"{outcome} after {len(steps)} steps; cumulative " +
              "  ".join(f"{name}={x:g}" for name, x in
                        zip(model.value_names, cumulative)))
        print(f"trajectory written to {output}")
    return 0


# --- assess ------------------------------------------------------------------

def cmd_assess(args) -> int:
    model = _load_scenario(args.scenario, args.format)
    try:
        trajectory = trajectory_from_jsonl(model, _read_text(args.trajectory))
    except TrajectoryIntegrityError as exc:
        raise CliFailure(1, "bad-trajectory", str(exc)) from None
    try:
        front_doc = json.loads(_read_text(args.front))
        solution = solution_from_document(front_doc, model)
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise CliFailure(1, "bad-front", f"cannot load front file "
                         f"{args.front}: {exc}") from None
    if solution.scenario_hash and \
            solution.scenario_hash != scenario_hash(model):
        raise CliFailure(1, "hash-mismatch",
                         "front file was solved for a different scenario")
    weights = _parse_weights(args.weights, model.value_names)
    try:
        report = build_report(model, trajectory, solution,
                              preference=weights,
                              expected_hash=scenario_hash(model))
    except TrajectoryIntegrityError as exc:
        raise CliFailure(1, "integrity", str(exc),
                         step=exc.step_index) from None
    doc = report_to_document(model, report)
    output = args.output or os.path.splitext(
        os.path.splitext(args.trajectory)[0])[0] + ".report.json"
    with open(output, "w", encoding="utf-8") as f:
        f.write(json.dumps(doc, indent=2) + "\n")
    if args.format == JSON:
        print(json.dumps(doc))
    else:
        print(f"outcome: {report.outcome}")
        for s in report.per_step:
            scores = "  ".join(f"{name}={x:+g}" for name, x in
                               zip(model.value_names, s.alignment))
            print(f"  step {s.index}: {s.action:<28} {scores}")
        print("cumulative: " + "  ".join(
            f"{name}={x:g}" for name, x in
            zip(model.value_names, report.cumulative)))
        print(f"dominance: {report.comparison.status}")
        for member, regret in report.comparison.regrets:
            print(f"  bettered by {tuple(member)} (regret {tuple(regret)})")
        for rec in report.recommendations:
            actions = [a for _, a in rec.trace.steps] or \
                [a for _, a in rec.trace.decisions]
            print(f"recommended [{rec.label}] -> "
                  f"{tuple(rec.trace.target)}: {', '.join(actions)}")
        for remark in report.remarks:
            print(f"note: {remark}")
        print(f"report written to {output}")
    return 0


# --- protocol ----------------------------------------------------------------

def _load_protocol_file(path, model, fmt):
    protocol, diagnostics = parse_protocol(_read_text(path), model)
    _print_diagnostics(fmt, diagnostics)
    if protocol is None:
        raise CliFailure(1, "invalid-protocol",
                         f"protocol {path} failed validation")
    return protocol


def _evaluation_doc(model, ev):
    return {
        "protocol": ev.protocol_name,
        "sound": ev.sound,
        "hypervolume": ev.hypervolume,
        "unrestricted_hypervolume": ev.unrestricted_hypervolume,
        "front": [list(v) for v in ev.restricted_front],
        "unrestricted_front": [list(v) for v in ev.unrestricted_front],
        "per_value_max": ev.per_value_max,
        "removed_transitions": ev.removed_transitions,
        "removed_samples": [
            {"state": model.levels_of(s), "action": a}
            for s, a in ev.removed_samples],
    }


def _print_evaluation(model, ev):
    print(f"protocol {ev.protocol_name}:")
    print(f"  sound: {ev.sound}")
    print(f"  hypervolume: {ev.hypervolume:.6g} "
          f"(unrestricted {ev.unrestricted_hypervolume:.6g})")
    print(f"  removed transitions: {ev.removed_transitions}")
    print(f"  front ({len(ev.restricted_front)} vectors):")
    for v in ev.restricted_front:
        print("    " + "  ".join(f"{name}={x:.6g}" for name, x in
                                 zip(model.value_names, v)))


def cmd_protocol_eval(args) -> int:
    model = _load_scenario(args.scenario, args.format)
    protocol = _load_protocol_file(args.protocol, model, args.format)
    config = _make_config(args)
    try:
        ev = evaluate_protocol(model, protocol, config,
                               scenario_hash=scenario_hash(model))
    except ProtocolError as exc:
        _print_diagnostics(args.format, exc.diagnostics)
        return 1
    if args.format == JSON:
        print(json.dumps(_evaluation_doc(model, ev)))
    else:
        _print_evaluation(model, ev)
    return 0


def cmd_protocol_compare(args) -> int:
    model = _load_scenario(args.scenario, args.format)
    protocol_a = _load_protocol_file(args.protocol_a, model, args.format)
    protocol_b = _load_protocol_file(args.protocol_b, model, args.format)
    config = _make_config(args)
    try:
        comparison = compare_protocols(model, protocol_a, protocol_b, config,
                                       scenario_hash=scenario_hash(model))
    except ProtocolError as exc:
        _print_diagnostics(args.format, exc.diagnostics)
        return 1
    doc = {
        "a": _evaluation_doc(model, comparison.evaluation_a),
        "b": _evaluation_doc(model, comparison.evaluation_b),
        "a_members_dominated_by_b": [
            list(v) for v in comparison.a_members_dominated_by_b],
        "b_members_dominated_by_a": [
            list(v) for v in comparison.b_members_dominated_by_a],
    }
    if args.format == JSON:
        print(json.dumps(doc))
    else:
        _print_evaluation(model, comparison.evaluation_a)
        _print_evaluation(model, comparison.evaluation_b)
        print(f"members of {protocol_a.name} dominated by {protocol_b.name}: "
              f"{len(comparison.a_members_dominated_by_b)}")
        print(f"members of {protocol_b.name} dominated by {protocol_a.name}: "
              f"{len(comparison.b_members_dominated_by_a)}")
    return 0


# --- serve -------------------------------------------------------------------

def cmd_serve(args) -> int:
    if not 1 <= args.port <= 65535:
        raise CliFailure(2, "bad-port",
                         f"port must be in 1..65535, got {args.port}")
    import uvicorn

    from .service import create_app
    app = create_app(args.data_dir)
    print(f"serving on http://{args.host}:{args.port} "
          f"(sessions in {args.data_dir})")
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except (OSError, SystemExit) as exc:
        raise CliFailure(1, "serve-failed", str(exc)) from None
    return 0


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="valence",
        description="Value-aligned decision training: scenario validation, "
                    "multi-objective solving, simulated play, trajectory "
                    "assessment, and protocol analysis.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=(TEXT, JSON), default=TEXT,
                        help="output format (default text)")

    solveish = argparse.ArgumentParser(add_help=False)
    solveish.add_argument("--gamma", type=float, default=1.0,
                          help="discount factor (default 1)")
    solveish.add_argument("--horizon", type=int, default=50,
                          help="episode horizon (default 50)")

    p = sub.add_parser("validate", parents=[common],
                       help="validate a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", parents=[common, solveish],
                       help="compute the Pareto front of a scenario")
    p.add_argument("scenario")
    p.add_argument("-o", "--output", help="front file path")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("play", parents=[common],
                       help="play an episode (interactive or scripted)")
    p.add_argument("scenario")
    p.add_argument("--gamma", type=float, default=1.0,
                   help="discount used for the final cumulative score")
    p.add_argument("--script", help="file with one action name per line; "
                                    "omit for interactive play")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reveal", action="store_true",
                   help="show per-step alignment scores during play")
    p.add_argument("--max-steps", type=int, default=50)
    p.add_argument("-o", "--output", help="trajectory file path")
    p.set_defaults(func=cmd_play)

    p = sub.add_parser("assess", parents=[common],
                       help="debrief a recorded trajectory against a front")
    p.add_argument("scenario")
    p.add_argument("trajectory")
    p.add_argument("front")
    p.add_argument("--weights", help="comma-separated value weights")
    p.add_argument("-o", "--output", help="report file path")
    p.set_defaults(func=cmd_assess)

    p = sub.add_parser("protocol", help="evaluate or compare protocols")
    psub = p.add_subparsers(dest="subcommand", required=True)
    q = psub.add_parser("eval", parents=[common, solveish])
    q.add_argument("scenario")
    q.add_argument("protocol")
    q.set_defaults(func=cmd_protocol_eval)
    q = psub.add_parser("compare", parents=[common, solveish])
    q.add_argument("scenario")
    q.add_argument("protocol_a")
    q.add_argument("protocol_b")
    q.set_defaults(func=cmd_protocol_compare)

    p = sub.add_parser("serve", parents=[common],
                       help="run the training session HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int,
                   default=int(os.environ.get("VALENCE_PORT", DEFAULT_PORT)))
    p.add_argument("--data-dir",
                   default=os.environ.get("VALENCE_DATA_DIR",
                                          DEFAULT_DATA_DIR))
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliFailure as exc:
        args_format = getattr(args, "format", TEXT)
        _print_error(args_format, exc.code, str(exc), **exc.details)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
