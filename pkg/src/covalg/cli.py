"""Command-line front end.

    covalg validate|build|structure|pv|toeplitz FILE [--seed N] [--tol X]
                                                     [--max-level N] [--pretty]
    covalg gallery [NAME] [--run]

FILE is a JSON description or ``gallery:NAME``. Reports go to stdout as JSON
with sorted keys (or a table with ``--pretty``). The exit status is 0 when
every check passes, 1 when some check fails and 2 for unusable input.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Callable

import numpy as np

from . import __version__
from .checks import Check, Report, sig3
from .covariance import UnboundedChainError
from .description import (DescriptionError, SystemDescription, gallery_index, gallery_text,
                          load_description, parse_description)
from .ktheory import diagram_check, pv_verify
from .structure import build_theta_lambda, regularity_witness
from .suites import (build_suite, dual_roundtrip_suite, structure_suite, toeplitz_suite,
                     validate_suite)

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class UsageError(Exception):
    pass


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return sig3(x) if x >= 0 else -sig3(-x)
    return x


def report_dict(command: str, desc: SystemDescription, rep: Report, seed: int,
                tol: float) -> dict:
    checks = sorted(rep.checks, key=lambda c: c.name)
    return _jsonable({
        "command": command,
        "system": desc.name,
        "fingerprint": desc.fingerprint,
        "seed": seed,
        "tolerance": tol,
        "version": __version__,
        "checks": [c.to_json() for c in checks],
        "data": rep.data,
        "ok": rep.ok,
    })


def render(report: dict, pretty: bool) -> str:
    if not pretty:
        return json.dumps(report, sort_keys=True, indent=2)
    lines = [f"{report['command']}  {report.get('system', '')}  "
             f"(seed {report.get('seed')}, tol {report.get('tolerance')}, "
             f"version {report.get('version')})"]
    width = max((len(c["name"]) for c in report["checks"]), default=4)
    for c in report["checks"]:
        lines.append(f"  {c['status'].upper():4}  {c['name']:<{width}}  {c['residual']:.3g}")
    for key, value in sorted(report.get("data", {}).items()):
        lines.append(f"  {key}: {json.dumps(value, sort_keys=True)}")
    lines.append("ok" if report["ok"] else "FAILED")
    return "\n".join(lines)


# ---------------------------------------------------------------- commands
def _theta(desc: SystemDescription, args):
    return desc.system(args.tol)


def cmd_validate(desc: SystemDescription, args) -> Report:
    return validate_suite(_theta(desc, args), seed=args.seed, tol=args.tol)


def cmd_build(desc: SystemDescription, args) -> Report:
    return build_suite(_theta(desc, args), seed=args.seed, tol=args.tol, level=args.max_level)


def cmd_structure(desc: SystemDescription, args) -> Report:
    if args.dual:
        try:
            return dual_roundtrip_suite(_theta(desc, args), seed=args.seed, tol=args.tol)
        except UnboundedChainError as e:
            raise UsageError(f"--dual needs a realizable covariance algebra: {e}") from None
    act = desc.action()
    if act is None:
        raise UsageError(f"{desc.name}: missing weights (add a 'weights' field, or use --dual "
                         f"to test the dual action of the realized covariance algebra)")
    return structure_suite(act, seed=args.seed, tol=args.tol)


def _derived_theta(desc: SystemDescription, args):
    act = desc.action()
    if act is None:
        raise UsageError(f"{desc.name}: --from-weights needs a 'weights' field")
    return build_theta_lambda(regularity_witness(act, args.seed)).theta


def cmd_pv(desc: SystemDescription, args) -> Report:
    theta = _derived_theta(desc, args) if args.from_weights else _theta(desc, args)
    try:
        seq = pv_verify(theta, seed=args.seed)
        diag = diagram_check(theta, seed=args.seed)
    except UnboundedChainError as e:
        raise UsageError(f"{desc.name}: {e}; the exact sequence still holds but its "
                         f"groups are not finitely computable here") from None
    rep = Report()
    rep.extend(seq.checks)
    rep.extend(diag.checks)
    rep.data = {"sequence": seq.data, "diagram": diag.data,
                "system_blocks": list(theta.algebra.block_sizes)}
    return rep


def cmd_toeplitz(desc: SystemDescription, args) -> Report:
    try:
        return toeplitz_suite(_theta(desc, args), seed=args.seed, tol=args.tol)
    except UnboundedChainError as e:
        raise UsageError(f"{desc.name}: {e}") from None


COMMANDS: dict[str, Callable[[SystemDescription, argparse.Namespace], Report]] = {
    "validate": cmd_validate,
    "build": cmd_build,
    "structure": cmd_structure,
    "pv": cmd_pv,
    "toeplitz": cmd_toeplitz,
}


def run_command(command: str, path: str, argv_flags: list[str] | None = None,
                seed: int = 0, tol: float = 1e-9) -> dict:
    """Run one command on a file and return the report dictionary."""
    args = _parser().parse_args([command, path, "--seed", str(seed), "--tol", repr(tol),
                                 *(argv_flags or [])])
    desc = load_description(path, args.tol)
    return report_dict(command, desc, COMMANDS[command](desc, args), args.seed, args.tol)


def cmd_gallery(args) -> tuple[dict | str, bool]:
    index = gallery_index()
    if args.name:
        return gallery_text(args.name), True
    if not args.run:
        systems = []
        for name, cmds in index.items():
            desc = parse_description(gallery_text(name), f"{name}.json")
            systems.append({"name": name, "description": desc.description,
                            "commands": [" ".join(c) for c in cmds]})
        return {"command": "gallery", "systems": systems, "version": __version__}, True
    rep = Report()
    for name, cmds in index.items():
        for cmd in cmds:
            label = f"{name}: {' '.join(cmd)}"
            try:
                out = run_command(cmd[0], f"gallery:{name}", cmd[1:], args.seed, args.tol)
                failed = [c["name"] for c in out["checks"] if c["status"] != "pass"]
                rep.add(Check(label, out["ok"], float(len(failed)), {"failed": failed}))
            except (DescriptionError, UsageError, ValueError) as e:
                rep.add(Check(label, False, 1.0, {"error": str(e)}))
    checks = sorted(rep.checks, key=lambda c: c.name)
    return _jsonable({"command": "gallery --run", "seed": args.seed, "tolerance": args.tol,
                      "version": __version__, "checks": [c.to_json() for c in checks],
                      "data": {"systems": len(index)}, "ok": rep.ok}), rep.ok


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="covalg",
                                description="Covariance algebras of partial automorphisms "
                                            "of finite-dimensional C*-algebras.")
    p.add_argument("--version", action="version", version=f"covalg {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0, help="seed for random batteries")
        sp.add_argument("--tol", type=float, default=1e-9, help="check tolerance")
        sp.add_argument("--pretty", action="store_true", help="human-readable table")

    for name, help_ in [("validate", "core checks and the L-algebra battery"),
                        ("build", "realize the covariance algebra"),
                        ("structure", "structure theorem for a circle action"),
                        ("pv", "K_0 exact sequence and the Toeplitz diagram"),
                        ("toeplitz", "Toeplitz extension checks")]:
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("file", help="JSON description or gallery:NAME")
        common(sp)
        sp.add_argument("--max-level", type=int, default=None,
                        help="regular-representation level override")
        if name == "structure":
            sp.add_argument("--dual", action="store_true",
                            help="use the dual action on the realized covariance algebra")
        if name == "pv":
            sp.add_argument("--from-weights", action="store_true",
                            help="use the partial automorphism derived from the weights")
    g = sub.add_parser("gallery", help="list, print or run the bundled systems")
    g.add_argument("name", nargs="?", help="print this system's description")
    g.add_argument("--run", action="store_true", help="run every designated command")
    common(g)
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "gallery":
            out, ok = cmd_gallery(args)
            if isinstance(out, str):
                sys.stdout.write(out)
            elif args.pretty and "checks" in out:
                print(render(out, True))
            elif args.pretty:
                for s in out["systems"]:
                    print(f"{s['name']:<18} {'; '.join(s['commands'])}")
            else:
                print(json.dumps(out, sort_keys=True, indent=2))
            return EXIT_OK if ok else EXIT_FAIL
        desc = load_description(args.file, args.tol)
        rep = COMMANDS[args.command](desc, args)
    except (DescriptionError, UsageError) as e:
        print(f"covalg: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    report = report_dict(args.command, desc, rep, args.seed, args.tol)
    print(render(report, args.pretty))
    return EXIT_OK if report["ok"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
