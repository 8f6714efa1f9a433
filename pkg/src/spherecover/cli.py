"""Command line interface: gen / inspect / surgery / normalize / verify / net."""

from __future__ import annotations

import argparse
import json
import sys

from . import generators, io, oracle
from .normalize import certify as pipeline_certify
from .normalize import normalize as run_pipeline
from .surface import SurfaceError, functionals, is_better_than, validate
from .geometry import Rotation
from .surgery import (
    SurfacePath,
    cut_interior,
    cut_to_boundary,
    sew,
    sew_annulus,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _report_dict(rep):
    return {
        "A": rep.area,
        "L": rep.boundary_length,
        "R": rep.reduced_area,
        "H": rep.ratio,
        "sum": rep.covering_sum,
        "topology": rep.topology,
        "degree": rep.degree,
        "n_bar": rep.n_bar,
        "n_point": rep.n_point,
        "B_special": rep.b_special,
        "B_nonspecial": rep.b_nonspecial,
        "branch_points": [
            {"vertex": sh.vertex, "interior": sh.interior, "v_f": sh.multiplicity,
             "folded": sh.folded, "special": sh.special}
            for sh in rep.sheets if sh.is_branch or sh.folded],
        "flags": rep.flags,
    }


def cmd_gen(args):
    meta = {"seed": args.seed, "jitter": 1e-6,
            "tolerances": {"eps_unit": 1e-12, "eps_sep": 1e-9}}
    if args.closed_degree:
        s = generators.generate_closed_cyclic_cover(
            args.closed_degree, q=args.q, branch_special=not args.nonspecial_branch)
    else:
        s = generators.generate_disk_covering(
            args.seed, max_sheets=args.max_sheets, q=args.q,
            branch_budget=args.branch_budget)
    bad = validate(s)
    if bad:
        print("generated surface invalid: %s" % "; ".join(bad), file=sys.stderr)
        return EXIT_FAIL
    io.save_surface(s, args.out, metadata=meta)
    print("wrote %s" % args.out)
    return EXIT_OK


def cmd_inspect(args):
    try:
        s = io.load_surface(args.file)
    except io.SurfaceFileError as err:
        print("parse error: %s" % err, file=sys.stderr)
        return EXIT_FAIL
    bad = validate(s)
    if bad:
        print("invalid surface: %s" % "; ".join(bad), file=sys.stderr)
        return EXIT_FAIL
    rep = functionals(s)
    if args.format == "json":
        json.dump(_report_dict(rep), sys.stdout, indent=1, sort_keys=True)
        print()
    else:
        d = _report_dict(rep)
        for k in ("topology", "A", "L", "R", "H", "sum", "degree"):
            print("%-12s %r" % (k, d[k]))
        print("%-12s %r" % ("n_bar", d["n_bar"]))
        print("%-12s %d special, %d non-special" %
              ("B", d["B_special"], d["B_nonspecial"]))
    return EXIT_OK


def cmd_surgery(args):
    try:
        s = io.load_surface(args.file)
    except io.SurfaceFileError as err:
        print("parse error: %s" % err, file=sys.stderr)
        return EXIT_FAIL
    params = json.loads(args.params) if args.params else {}
    try:
        if args.op in ("cut_to_boundary", "cut_interior"):
            path = SurfacePath([tuple(x) for x in params["sides"]])
            out = (cut_to_boundary if args.op == "cut_to_boundary" else cut_interior)(s, path)
        elif args.op in ("sew", "sew_annulus"):
            run_a = [tuple(x) for x in params["run_a"]]
            run_b = [tuple(x) for x in params["run_b"]]
            if args.op == "sew":
                out, case = sew(s, run_a, run_b)
                print("sew case %s" % case)
            else:
                out = sew_annulus(s, run_a, run_b)
        else:
            print("unknown operation %r" % args.op, file=sys.stderr)
            return EXIT_USAGE
    except Exception as err:
        print("surgery failed: %s" % err, file=sys.stderr)
        return EXIT_FAIL
    io.save_surface(out, args.out, metadata={"surgery": args.op})
    print("wrote %s" % args.out)
    return EXIT_OK


def cmd_normalize(args):
    try:
        s = io.load_surface(args.file)
    except io.SurfaceFileError as err:
        print("parse error: %s" % err, file=sys.stderr)
        return EXIT_FAIL
    try:
        out, trace = run_pipeline(s)
        ok, report = pipeline_certify(out, s, trace)
    except SurfaceError as err:
        print("normalize failed: %s" % err, file=sys.stderr)
        return EXIT_FAIL
    io.save_surface(out, args.out, metadata={"normalized": True})
    if args.trace_out:
        steps = [{
            "op": st.op, "case": st.case, "pre": st.pre, "post": st.post,
            "note": st.note, "certificate": st.certificate,
        } for st in trace.steps]
        doc = {
            "steps": steps,
            "iterations": trace.iterations,
            "iteration_bound": trace.iteration_bound,
            "rotation": io.rotation_to_dict(trace.composed_rotation()),
            "certificate_ok": ok,
        }
        with open(args.trace_out, "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")
    print("wrote %s (%d steps, certificate %s)"
          % (args.out, len(trace.steps), "ok" if ok else "FAILED"))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(args):
    try:
        s = io.load_surface(args.file)
    except io.SurfaceFileError as err:
        print("parse error: %s" % err, file=sys.stderr)
        return EXIT_FAIL
    bad = validate(s)
    if bad:
        print("invalid surface: %s" % "; ".join(bad), file=sys.stderr)
        return EXIT_FAIL
    mismatches = oracle.oracle_verify(s)
    for m in mismatches:
        print("oracle mismatch: %s" % m, file=sys.stderr)
    status = EXIT_FAIL if mismatches else EXIT_OK
    if args.against:
        try:
            original = io.load_surface(args.against)
        except io.SurfaceFileError as err:
            print("parse error: %s" % err, file=sys.stderr)
            return EXIT_FAIL
        rot = Rotation.identity()
        if args.trace:
            with open(args.trace) as fh:
                doc = json.load(fh)
            rot = io.rotation_from_dict(doc["rotation"])
        ok, report = is_better_than(s, original, rot, h_tol=args.tol)
        print("better-than certificate: %s" % ("ok" if ok else "FAILED"))
        for clause, val in report.items():
            print("  %-8s %s" % (clause, "ok" if val[0] else "FAILED"))
        if not ok:
            status = EXIT_FAIL
    if status == EXIT_OK:
        print("all checks passed")
    return status


def cmd_net(args):
    try:
        s = io.load_surface(args.file)
    except io.SurfaceFileError as err:
        print("parse error: %s" % err, file=sys.stderr)
        return EXIT_FAIL
    lines = ["graph gluing {"]
    for c in s.live_copy_ids():
        lines.append('  c%d [label="copy %d / face %d"];' % (c, c, s.copies[c]))
    seen = set()
    for (c, p), (c2, p2) in s.pairing.items():
        key = tuple(sorted([(c, p), (c2, p2)]))
        if key in seen:
            continue
        seen.add(key)
        e = s.dart_of((c, p)) >> 1
        lines.append('  c%d -- c%d [label="e%d"];' % (c, c2, e))
    for side in s.free_sides():
        lines.append('  c%d -- boundary [style=dashed];' % side[0])
    lines.append('  boundary [shape=plaintext];')
    lines.append("}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print("wrote %s" % args.out)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(
        prog="spherecover",
        description="Branched covering surfaces of the sphere: build, inspect, "
                    "operate, normalize.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a surface file")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--q", type=int, default=3)
    g.add_argument("--max-sheets", type=int, default=8)
    g.add_argument("--branch-budget", type=int, default=6)
    g.add_argument("--closed-degree", type=int, default=0,
                   help="generate a closed cyclic cover of this degree instead")
    g.add_argument("--nonspecial-branch", action="store_true")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    i = sub.add_parser("inspect", help="print the functional report")
    i.add_argument("file")
    i.add_argument("--format", choices=["text", "json"], default="text")
    i.set_defaults(func=cmd_inspect)

    srg = sub.add_parser("surgery", help="apply one named surgery")
    srg.add_argument("file")
    srg.add_argument("--op", required=True,
                     choices=["cut_to_boundary", "cut_interior", "sew", "sew_annulus"])
    srg.add_argument("--params", help="JSON parameters for the operation")
    srg.add_argument("--out", required=True)
    srg.set_defaults(func=cmd_surgery)

    n = sub.add_parser("normalize", help="run the normalization pipeline")
    n.add_argument("file")
    n.add_argument("--out", required=True)
    n.add_argument("--trace-out")
    n.set_defaults(func=cmd_normalize)

    v = sub.add_parser("verify", help="oracle checks, optional better-than certificate")
    v.add_argument("file")
    v.add_argument("--against", help="earlier surface file to certify against")
    v.add_argument("--trace", help="trace file holding the composed rotation")
    v.add_argument("--tol", type=float, default=1e-9,
                   help="absolute tolerance for the ratio comparison")
    v.set_defaults(func=cmd_verify)

    net = sub.add_parser("net", help="emit the face-copy gluing graph (DOT)")
    net.add_argument("file")
    net.add_argument("--out")
    net.set_defaults(func=cmd_net)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as err:
        print("file not found: %s" % err, file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
