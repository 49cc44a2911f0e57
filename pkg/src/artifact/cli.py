"""Batch front end.

    artifact COMMAND --config graph.json [--out DIR] [--seed N] [--max-terms N]
             [--format json|pretty]

Every run writes <command>.json and report.json into --out.  The exit code
is 0 when every residue asserted to vanish does, 1 otherwise, and a
distinct nonzero code for each kind of error.
"""

import argparse
import json
import os
import sys

from .anchored import AnchoredError, quantise_imd, quantum_hamiltonian
from .cycles import CycleError, UnsupportedDegenerateReading, hamiltonian, imd_total
from .flatness import (FlatnessError, ResourceLimit, check_classical_flatness, check_connection,
                       check_quantum_flatness, intersection_census)
from .quiver import QuiverError, graph_from_json
from .reductions import (MomentData, ReductionError, classical_moment_pullback, correction_difference,
                         diffop_apply, dual_star_correction, fmtv_jmms_difference,
                         graph_hamiltonians, hamiltonian_node, parse_polynomial, polynomial_to_text,
                         quantum_moment_pullback, triangle_positions, weyl_module_action,
                         weyl_to_diffop)
from .scalars import ScalarError
from .weyl import WeylAlgebra, WeylError, element_from_json

EXIT_OK = 0
EXIT_RESIDUE = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_UNSUPPORTED = 4
EXIT_RESOURCE = 5
EXIT_COMPUTE = 6

COMMANDS = ("potentials", "hamiltonians", "check-flatness", "reduce", "diffop", "intersections")


class CliError(Exception):
    def __init__(self, kind, message, code):
        super().__init__(message)
        self.kind = kind
        self.code = code


def _load(path):
    if path is None:
        raise CliError("ConfigError", "--config is required", EXIT_CONFIG)
    try:
        with open(path) as fh:
            spec = json.load(fh)
    except OSError as e:
        raise CliError("ConfigError", f"cannot read {path}: {e.strerror}", EXIT_CONFIG)
    except json.JSONDecodeError as e:
        raise CliError("ConfigError", f"{path} is not valid JSON: {e}", EXIT_CONFIG)
    return graph_from_json(spec)


def _residue(x):
    return "0" if x.is_zero() else repr(x)


# commands

def cmd_potentials(g, s, args):
    out = []
    for i in g.dynamical_nodes():
        w = imd_total(g, i)
        out.append({"node": i, "classical": w.to_json(), "quantum": quantise_imd(w).to_json()})
    return {"potentials": out}, True


def cmd_hamiltonians(g, s, args):
    alg = WeylAlgebra(s)
    out = []
    for i in g.dynamical_nodes():
        out.append({"node": i, "time": str(g.time(i)),
                    "classical": hamiltonian(g, i).to_json(),
                    "quantum": quantum_hamiltonian(g, alg, i).to_json()})
    return {"hamiltonians": out}, True


def _load_overrides(path, g, s):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise CliError("ConfigError", f"cannot read overrides {path}: {e}", EXIT_CONFIG)
    alg = WeylAlgebra(s)
    try:
        return {int(h["node"]): element_from_json(alg, h["element"]) for h in data["hamiltonians"]}
    except (KeyError, TypeError, ValueError) as e:
        raise CliError("ConfigError", f"bad override file: {e}", EXIT_CONFIG)


def cmd_check_flatness(g, s, args):
    out = {}
    ok = True
    modes = []
    if args.override:
        modes = ["override"]
    else:
        if args.classical or not args.quantum:
            modes.append("classical")
        if args.quantum or not args.classical:
            modes.append("quantum")
    for mode in modes:
        if mode == "classical":
            r = check_classical_flatness(g, s)
        elif mode == "quantum":
            r = check_quantum_flatness(g, s, max_terms=args.max_terms, seed=args.seed,
                                       fallback=args.fallback)
        else:
            r = check_connection(g, s, _load_overrides(args.override, g, s),
                                 max_terms=args.max_terms, seed=args.seed, fallback=args.fallback)
        out[mode] = r
        ok = ok and r["summary"]["all_zero"]
    return out, ok


def _reduce_kz(md, compare):
    hams = graph_hamiltonians("kz", md)
    out = {"hamiltonians": [h.to_json() for h in hams]}
    ok = True
    if compare:
        rows = []
        for hk, hs in zip(hams, graph_hamiltonians("schlesinger", md)):
            node = hamiltonian_node(hk, md)
            q = quantum_moment_pullback(hk.element, md) - md.hamiltonian(node)
            c = classical_moment_pullback(hs.element, md) - hamiltonian(md.graph, node)
            rows.append({"node": node, "quantum_residue": _residue(q), "classical_residue": _residue(c)})
            ok = ok and q.is_zero() and c.is_zero()
        out["compare"] = rows
    return out, ok


def _reduce_dmt(md, compare):
    hams = graph_hamiltonians("dmt", md)
    out = {"hamiltonians": [h.to_json() for h in hams]}
    ok = True
    if compare:
        corr = dict(correction_difference("dual_star", md))
        expected = dict(dual_star_correction(md))
        rows = []
        for hd, hs in zip(hams, graph_hamiltonians("dual_schlesinger", md)):
            node = hamiltonian_node(hd, md)
            raw = quantum_moment_pullback(hd.element, md) - md.hamiltonian(node)
            c = classical_moment_pullback(hs.element, md) - hamiltonian(md.graph, node)
            row = {"node": node, "raw_residue": _residue(raw), "classical_residue": _residue(c)}
            vanishes = raw.is_zero() or raw.order() < 4
            row["raw_vanishes_semiclassically"] = vanishes
            if node in corr:
                d = corr[node]
                row["correction"] = _residue(d)
                row["correction_order"] = d.order() if not d.is_zero() else None
                row["correction_vanishes_semiclassically"] = d.is_zero() or d.order() < 4
                row["correction_matches_trace_formula"] = d == expected[node]
                vanishes = (vanishes and row["correction_vanishes_semiclassically"]
                            and row["correction_matches_trace_formula"])
            rows.append(row)
            ok = ok and vanishes and c.is_zero()
        out["compare"] = rows
    return out, ok


def _reduce_jmms(md, compare):
    hams = graph_hamiltonians("jmms", md)
    out = {"hamiltonians": [h.to_json() for h in hams]}
    ok = True
    if compare:
        rows = []
        for h in hams:
            node = hamiltonian_node(h, md)
            if node not in md.graph.dynamical_nodes():
                continue
            c = classical_moment_pullback(h.element, md) - hamiltonian(md.graph, node)
            rows.append({"node": node, "kind": h.kind, "classical_residue": _residue(c)})
            ok = ok and c.is_zero()
        out["compare"] = rows
    return out, ok


def _reduce_fmtv(md, compare):
    hams = graph_hamiltonians("fmtv", md)
    out = {"hamiltonians": [h.to_json() for h in hams]}
    ok = True
    if compare:
        rows = []
        for node, d in correction_difference("bipartite", md):
            small = d.is_zero() or d.order() < 4
            rows.append({"node": node, "difference": _residue(d),
                         "order": d.order() if not d.is_zero() else None,
                         "vanishes_semiclassically": small})
            ok = ok and small
        ident = []
        for j, diff, expected in fmtv_jmms_difference(md.m, md.d, md.times_inf(), md.times_zero()):
            holds = (diff - expected).is_zero()
            ident.append({"index": j, "fmtv_minus_pbw_jmms": _residue(diff), "identity_holds": holds})
            ok = ok and holds
        out["compare"] = rows
        out["pbw_identity"] = ident
    return out, ok


def cmd_reduce(g, s, args):
    md = MomentData(g, s)
    table = {"kz": _reduce_kz, "dmt": _reduce_dmt, "jmms": _reduce_jmms, "fmtv": _reduce_fmtv}
    out, ok = table[args.system](md, args.compare)
    out["system"] = args.system
    return out, ok


def cmd_diffop(g, s, args):
    if args.node is None:
        raise CliError("UsageError", "diffop needs --node", EXIT_USAGE)
    alg = WeylAlgebra(s)
    h = quantum_hamiltonian(g, alg, args.node)
    try:
        positions = triangle_positions(g)
    except ReductionError:
        positions = s.positive
    d = weyl_to_diffop(h, positions)
    out = {"node": args.node, "positions": sorted(str(a) for a in positions), "diffop": d.to_json()}
    ok = True
    if args.apply is not None:
        p = parse_polynomial(args.apply)
        r = diffop_apply(d, p)
        direct = weyl_module_action(h, positions, p)
        out.update({"input": polynomial_to_text(p), "result": polynomial_to_text(r),
                    "agrees_with_weyl_action": r == direct})
        ok = r == direct
    return out, ok


def cmd_intersections(g, s, args):
    return intersection_census(g, s), True


HANDLERS = {
    "potentials": cmd_potentials,
    "hamiltonians": cmd_hamiltonians,
    "check-flatness": cmd_check_flatness,
    "reduce": cmd_reduce,
    "diffop": cmd_diffop,
    "intersections": cmd_intersections,
}


def build_parser():
    p = argparse.ArgumentParser(prog="artifact", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="graph JSON file")
    common.add_argument("--out", default=".", help="directory for the JSON artifacts")
    common.add_argument("--seed", type=int, default=0, help="seed of the random-evaluation fallback")
    common.add_argument("--max-terms", type=int, default=None,
                        help="term budget for a symbolic commutator")
    common.add_argument("--format", choices=("json", "pretty"), default="json")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("potentials", parents=[common], help="emit W_i and their quantisations")
    sub.add_parser("hamiltonians", parents=[common], help="emit H_i and the quantum H_i")
    f = sub.add_parser("check-flatness", parents=[common], help="curl and commutator checks")
    f.add_argument("--classical", action="store_true")
    f.add_argument("--quantum", action="store_true")
    f.add_argument("--override", metavar="FILE", help="JSON file of Hamiltonian overrides")
    f.add_argument("--fallback", action="store_true",
                   help="evaluate at a random point instead of failing on --max-terms")
    r = sub.add_parser("reduce", parents=[common], help="named reductions")
    r.add_argument("system", choices=("kz", "dmt", "fmtv", "jmms"))
    r.add_argument("--compare", action="store_true")
    d = sub.add_parser("diffop", parents=[common], help="differential-operator form of H_N")
    d.add_argument("--node", type=int)
    d.add_argument("--apply", metavar="POLY", help="polynomial in q_i_j to act on")
    sub.add_parser("intersections", parents=[common], help="classes of IMD-cycle intersections")
    return p


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _pretty(obj, indent=0):
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for k in sorted(obj):
            v = obj[k]
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines.append(_pretty(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {v}")
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, (dict, list)):
                lines.append(f"{pad}-")
                lines.append(_pretty(v, indent + 1))
            else:
                lines.append(f"{pad}- {v}")
    else:
        lines.append(f"{pad}{obj}")
    return "\n".join(lines)


def _write(out_dir, name, obj):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, name), "w") as fh:
        fh.write(_dump(obj))


def run(argv=None):
    """Run one command; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    command = args.command
    try:
        try:
            g, s = _load(args.config)
            payload, ok = HANDLERS[command](g, s, args)
        except CliError:
            raise
        except UnsupportedDegenerateReading as e:
            raise CliError("UnsupportedDegenerateReading", str(e), EXIT_UNSUPPORTED)
        except ResourceLimit as e:
            raise CliError("ResourceLimit", f"{e} ({e.suggestion})", EXIT_RESOURCE)
        except QuiverError as e:
            raise CliError(type(e).__name__, str(e), EXIT_CONFIG)
        except (CycleError, AnchoredError, WeylError, FlatnessError, ReductionError, ScalarError) as e:
            raise CliError(type(e).__name__, str(e), EXIT_COMPUTE)
    except CliError as e:
        err = {"command": command, "status": "error", "exit_code": e.code,
               "error": {"type": e.kind, "message": str(e)}}
        _write(args.out, "report.json", err)
        sys.stdout.write(_dump(err))
        return e.code
    code = EXIT_OK if ok else EXIT_RESIDUE
    report = {"command": command, "status": "ok" if ok else "nonzero_residue", "exit_code": code,
              "artifact": f"{command}.json"}
    _write(args.out, f"{command}.json", payload)
    _write(args.out, "report.json", report)
    if args.format == "pretty":
        sys.stdout.write(_pretty(payload) + "\n")
    else:
        sys.stdout.write(_dump(report))
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
