"""Command-line runner: ``simulate``, ``prepare``, ``verify`` and ``ghz``.

Reports are JSON on stdout, a short summary goes to stderr. Exit status is 0
when every check passes, 1 when a check fails and 2 for usage or input
errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import broadcast, dag as dagmod, oracle, prepare
from .dag import DagNetwork
from .errors import GatecastError, ParseError, ValidationError
from .qudit import Register, SiteLayout, fidelity, make_state, overlap, reorder, tensor

FIDELITY_TOL = 1e-9
STABILIZER_TOL = 1e-10
AUTO_ENUMERATE = 1024


@dataclass
class Scenario:
    graph: DagNetwork
    phases: dict[int, float]
    psi: object
    mode: Optional[str] = None
    seed: Optional[int] = None
    detach: list[int] = field(default_factory=list)
    raw: dict = field(default_factory=dict, repr=False)


def _psi_spec(doc, g: DagNetwork):
    if doc is None:
        return "plus"
    if not isinstance(doc, dict):
        raise ParseError("field 'psi': expected an object")
    if "preset" in doc:
        if doc["preset"] not in ("plus", "zero"):
            raise ParseError(f"field 'psi.preset': unknown preset {doc['preset']!r}")
        return doc["preset"]
    if "amps" in doc:
        try:
            amps = np.array([complex(re, im) for re, im in doc["amps"]])
        except (TypeError, ValueError) as exc:
            raise ParseError(f"field 'psi.amps': expected [re, im] pairs ({exc})") from None
        want = math.prod(g.dims[v] for v in g.sink_list())
        if amps.size != want:
            raise ParseError(f"field 'psi.amps': expected {want} amplitudes, got {amps.size}")
        return amps
    if "digits" in doc:
        return tuple(int(k) for k in doc["digits"])
    raise ParseError("field 'psi': needs 'preset', 'amps' or 'digits'")


def parse_scenario(path) -> Scenario:
    """Read and validate a scenario file; non-sink dims are always recomputed."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be a JSON object")
    for key in ("vertices", "edges"):
        if key not in doc:
            raise ParseError(f"missing field {key!r}")
    try:
        topology = DagNetwork(int(doc["vertices"]), tuple(tuple(e) for e in doc["edges"]))
    except (TypeError, ValueError) as exc:
        raise ParseError(f"field 'edges': {exc}") from None
    except GatecastError as exc:
        raise ParseError(f"field 'edges': unknown vertex {exc}") from None
    problems = dagmod.validate(topology)
    if "not acyclic" in problems:
        raise ValidationError("not acyclic")
    try:
        sink_dims = {int(k): int(v) for k, v in doc.get("sink_dims", {}).items()}
    except (TypeError, ValueError, AttributeError) as exc:
        raise ParseError(f"field 'sink_dims': {exc}") from None
    g = dagmod.assign_dims(topology, sink_dims)
    problems = dagmod.validate(g)
    if problems:
        raise ValidationError("; ".join(problems))
    try:
        phases = {int(k): float(v) for k, v in doc.get("phases", {}).items()}
    except (TypeError, ValueError, AttributeError) as exc:
        raise ParseError(f"field 'phases': {exc}") from None
    for v in phases:
        if not 0 <= v < g.vertex_count:
            raise ValidationError(f"field 'phases': unknown vertex {v}")
    mode = doc.get("mode")
    if mode not in (None, "sample", "enumerate"):
        raise ParseError(f"field 'mode': expected 'sample' or 'enumerate', got {mode!r}")
    seed = doc.get("seed")
    if seed is not None and (not isinstance(seed, int) or not 0 <= seed < 2**64):
        raise ParseError("field 'seed': expected an unsigned 64-bit integer")
    detach = [int(v) for v in doc.get("detach", [])]
    for v in detach:
        if not 0 <= v < g.vertex_count or g.is_sink(v):
            raise ValidationError(f"field 'detach': {v} is not a non-sink vertex")
    return Scenario(g, phases, _psi_spec(doc.get("psi"), g), mode, seed, detach, doc)


def _config_hash(command: str, payload) -> str:
    blob = json.dumps({"command": command, "payload": payload}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def _check(name, value, threshold, passed) -> dict:
    return {"name": name, "value": value, "threshold": threshold, "passed": bool(passed)}


def _pick_mode(sc: Scenario, branches: int) -> str:
    if sc.mode:
        mode = sc.mode
    else:
        mode = "enumerate" if branches <= AUTO_ENUMERATE else "sample"
    if mode == "sample" and sc.seed is None:
        raise ValidationError("sample mode requires a seed")
    return mode


def _phase_note(ref: Register, got: Register) -> float:
    """Global phase of ``got`` relative to ``ref`` (radians)."""
    return float(np.angle(overlap(ref, got)))


def cmd_simulate(sc: Scenario) -> tuple[dict, list]:
    g = sc.graph
    mode = _pick_mode(sc, broadcast.branch_count(g))
    oracle_state = broadcast.expected_sink_state(g, sc.phases, sc.psi)
    if mode == "sample":
        results = [broadcast.run_protocol(g, sc.phases, sc.psi, seed=sc.seed)]
    else:
        results = broadcast.run_protocol(g, sc.phases, sc.psi)
    branches, checks = [], []
    worst = 1.0
    for r in results:
        f = fidelity(r.sink_state, oracle_state)
        worst = min(worst, f)
        branches.append(
            {
                "outcomes": {str(k): v for k, v in r.outcomes.items()},
                "probability": r.probability,
                "transcript": r.transcript.to_json(),
                "sink_state": r.sink_state.dump(),
                "fidelity": f,
            }
        )
    checks.append(_check("sink_fidelity_vs_oracle", worst, 1 - FIDELITY_TOL, worst >= 1 - FIDELITY_TOL))
    body = {
        "mode": mode,
        "dims": list(g.dims),
        "theta_effective": {str(k): v for k, v in broadcast.theta_effective(g, sc.phases).items()},
        "oracle_state": oracle_state.dump(),
        "branches": branches,
    }
    return body, checks


def _detached_reference(g_now: DagNetwork, g0: DagNetwork, psi, detached) -> Register:
    """Resource state of the cut network; detached vertices hold ``|+>``."""
    psi_reg = broadcast.sink_register(g0, psi)
    plus = [
        make_state(SiteLayout((g0.dims[v],), (v,)), "plus") for v in sorted(detached)
    ]
    joined = reorder(tensor(psi_reg, *plus), g_now.sink_list())
    return broadcast.build_resource_state(g_now, joined)


def cmd_prepare(sc: Scenario) -> tuple[dict, list]:
    g = sc.graph
    prep = prepare.build_prep_state(g, sc.psi)
    rng = np.random.default_rng(sc.seed if sc.seed is not None else 0)
    detach_log = []
    for v in sc.detach:
        ell, prep, residual = prepare.detach_vertex(prep, v, rng=rng)
        prep = prepare.PrepState(residual.cancel(prep.register), prep.graph, prep.ancillas)
        detach_log.append({"vertex": v, "outcome": ell, "residual": residual.to_json(), "cancelled": True})
    remaining = math.prod(g.dims[v] for v in prep.unmeasured())
    mode = _pick_mode(sc, remaining)
    if mode == "sample":
        results = [prepare.finish_preparation(prep, rng=rng)]
    else:
        results = prepare.finish_preparation(prep)
    ref = _detached_reference(prep.graph, g, sc.psi, sc.detach)
    branches = []
    worst_f, worst_stab = 1.0, 0.0
    for r in results:
        f = fidelity(ref, r.state)
        rep = prepare.check_stabilizers(r.state, prep.graph)
        worst_f = min(worst_f, f)
        worst_stab = max(worst_stab, rep.max_deviation())
        branches.append(
            {
                "outcomes": {str(k): v for k, v in r.outcomes.items()},
                "probability": r.probability,
                "corrections": [list(c) for c in r.corrections],
                "fidelity": f,
                "global_phase": _phase_note(ref, r.state) if f > 1 - FIDELITY_TOL else None,
                "stabilizers": rep.to_json(),
            }
        )
    checks = [
        _check("prepared_fidelity_vs_resource", worst_f, 1 - FIDELITY_TOL, worst_f >= 1 - FIDELITY_TOL),
        _check("stabilizer_deviation", worst_stab, STABILIZER_TOL, worst_stab <= STABILIZER_TOL),
    ]
    body = {
        "mode": mode,
        "dims": list(g.dims),
        "detached": detach_log,
        "edges_after": [list(e) for e in prep.graph.edges],
        "reference_state": ref.dump(),
        "branches": branches,
    }
    return body, checks


def cmd_ghz(n: int) -> tuple[dict, list]:
    if n < 2:
        raise ValidationError("ghz needs n >= 2")
    g = dagmod.chain(n)
    target = prepare.ghz_state(n)
    branches, worst = [], 1.0
    for r in prepare.prepare_resource(g, "plus"):
        f = fidelity(target, r.state)
        worst = min(worst, f)
        branches.append(
            {
                "outcomes": {str(k): v for k, v in r.outcomes.items()},
                "corrections": [list(c) for c in r.corrections],
                "fidelity": f,
            }
        )
    checks = [_check("ghz_fidelity", worst, 1 - FIDELITY_TOL, worst >= 1 - FIDELITY_TOL)]
    return {"n": n, "target": target.dump(), "branches": branches}, checks


def cmd_verify(dmax: int) -> tuple[dict, list]:
    if dmax < 2:
        raise ValidationError("--dmax must be at least 2")
    results = oracle.run_props(dmax)
    checks = [_check(k, v["max_deviation"], 1e-12, v["passed"]) for k, v in results.items()]
    return {"dmax": dmax, "sweeps": results}, checks


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gatecast", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("simulate", help="run the broadcast protocol on a scenario")
    s.add_argument("--scenario", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--no-timing", action="store_true")
    s = sub.add_parser("prepare", help="measurement-based preparation of the resource state")
    s.add_argument("--scenario", required=True)
    s.add_argument("--detach", help="comma-separated vertices to detach first")
    s.add_argument("--seed", type=int)
    s.add_argument("--no-timing", action="store_true")
    s = sub.add_parser("verify", help="dense-matrix sweeps of the qudit identities")
    s.add_argument("--props", action="store_true", required=True)
    s.add_argument("--dmax", type=int, default=7)
    s.add_argument("--no-timing", action="store_true")
    s = sub.add_parser("ghz", help="prepare a GHZ chain over all outcome patterns")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--no-timing", action="store_true")
    return p


def _emit(report: dict, out, err) -> None:
    out.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
    failed = report.get("failed", [])
    if "error" in report:
        err.write(f"gatecast {report['command']}: error: {report['error']}\n")
    elif failed:
        err.write(f"gatecast {report['command']}: FAILED {', '.join(failed)}\n")
    else:
        err.write(f"gatecast {report['command']}: all {len(report['checks'])} checks passed\n")


def run_command(argv, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    started = time.perf_counter()
    report: dict = {"command": args.command, "argv": list(argv)}
    try:
        if args.command in ("simulate", "prepare"):
            sc = parse_scenario(args.scenario)
            if args.seed is not None:
                sc.seed = args.seed
            if args.command == "prepare" and args.detach:
                try:
                    sc.detach = [int(x) for x in args.detach.split(",") if x.strip()]
                except ValueError:
                    raise ParseError(f"--detach: expected comma-separated integers, got {args.detach!r}")
                for v in sc.detach:
                    if not 0 <= v < sc.graph.vertex_count or sc.graph.is_sink(v):
                        raise ValidationError(f"--detach: {v} is not a non-sink vertex")
            payload = {"scenario": sc.raw, "seed": sc.seed, "detach": sc.detach}
            body, checks = cmd_simulate(sc) if args.command == "simulate" else cmd_prepare(sc)
        elif args.command == "ghz":
            payload = {"n": args.n}
            body, checks = cmd_ghz(args.n)
        else:
            payload = {"dmax": args.dmax}
            body, checks = cmd_verify(args.dmax)
    except GatecastError as exc:
        report.update({"error": f"{type(exc).__name__}: {exc}", "checks": [], "failed": []})
        _emit(report, out, err)
        return 2
    report["config_hash"] = _config_hash(args.command, payload)
    report["result"] = body
    report["checks"] = checks
    report["failed"] = [c["name"] for c in checks if not c["passed"]]
    report["passed"] = not report["failed"]
    if not args.no_timing:
        report["timing"] = {"seconds": round(time.perf_counter() - started, 6)}
    _emit(report, out, err)
    return 0 if report["passed"] else 1


def main(argv=None) -> int:
    return run_command(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
