"""Command-line front end.

Every subcommand builds a :class:`~johnlimits.pipeline.RunConfig` from its
flags, then applies ``--config FILE`` on top, validates it and runs the
stages it needs.  Exit status is 0 iff no invariant was violated, 1 when
one was, and 2 for rejected input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from . import render
from .errors import GeometryError
from .generators import GENERATORS
from .john import JohnProfile
from .maps import MAPS
from .metric import parse_length, save_domain
from .pipeline import OUT_ENV, Pipeline, RunConfig, _clean, dump_json, write_csv
from .trace import GaugeFunction, gauge_integral, profile_for

COMMANDS = ("generate", "decompose", "curves", "shadows", "trace", "gauges", "uniqueness", "render", "report")


def _kv(text):
    key, _, value = text.partition("=")
    if not key or not _:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key, float(parse_length(value))
    except ValueError:
        return key, value


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON run configuration; its keys override flags")
    p.add_argument("--domain", help=f"generator: {', '.join(GENERATORS)}")
    p.add_argument("--eps", help="resolution, fractions allowed (e.g. 1/128)")
    p.add_argument("--s", dest="cusp_s", help="cusp exponent")
    p.add_argument("--map", help=f"map: {', '.join(MAPS)}")
    p.add_argument("--map-param", action="append", type=_kv, default=[], metavar="KEY=VALUE")
    p.add_argument("--delta")
    p.add_argument("--c1")
    p.add_argument("--C1")
    p.add_argument("--a")
    p.add_argument("--phi", choices=("identity", "power"))
    p.add_argument("--c", type=float, help="John constant")
    p.add_argument("--K", type=float)
    p.add_argument("--exponent", type=float)
    p.add_argument("--tol", type=float, help="tail tolerance for boundary limits")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./johnlimits_out)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    return p


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="johnlimits", description="Boundary limits of maps on sampled John domains")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="write a domain and a map manifest")
    sub.add_parser("decompose", parents=[common], help="dyadic cubes and Whitney decomposition")
    sub.add_parser("curves", parents=[common], help="John curves to every boundary sample")
    sub.add_parser("shadows", parents=[common], help="shadow bounds per level")
    sub.add_parser("trace", parents=[common], help="discrete lengths and boundary limits")
    g = sub.add_parser("gauges", parents=[common], help="gauge integral verdicts")
    g.add_argument("--h", choices=("power", "log"))
    g.add_argument("--param", type=float, help="alpha (power) or beta (log)")
    g.add_argument("--q", type=float, default=None)
    g.add_argument("--variant", choices=("A1", "A2", "uniqueness"))
    u = sub.add_parser("uniqueness", parents=[common], help="chain estimate and limit gap at a boundary point")
    u.add_argument("--point", default="1,0", help="boundary location x,y (nearest sample is used)")
    u.add_argument("--scales", default="1/8,1/16,1/32,1/64")
    r = sub.add_parser("render", parents=[common], help="SVG figures from an export directory")
    r.add_argument("input", help="directory holding domain.json and exports")
    rep = sub.add_parser("report", parents=[common], help="run every stage and write the bundle")
    rep.add_argument("--uniqueness-point", help="also run the uniqueness check at boundary location x,y")
    return parser


def config_from_args(args):
    cfg = RunConfig()
    if args.domain:
        cfg.domain = args.domain
    if args.eps:
        cfg.eps = args.eps
    if args.cusp_s:
        cfg.domain_params["s"] = args.cusp_s
    if args.map:
        cfg.map = args.map
    cfg.map_params.update(dict(args.map_param))
    for key in ("delta", "c1", "C1", "a"):
        v = getattr(args, key)
        if v is not None:
            cfg.whitney[key] = v
    if args.phi or args.c is not None:
        john = {"phi": args.phi or "identity", "c": args.c if args.c is not None else 2.0}
        if args.K is not None:
            john["K"] = args.K
        if args.exponent is not None:
            john["exponent"] = args.exponent
        cfg.john = john
    if args.tol is not None:
        cfg.limit_tol = args.tol
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out:
        cfg.out = args.out
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        merged = cfg.to_dict()
        merged.update(data)
        cfg = RunConfig.from_dict(merged)
    return cfg


def _emit(obj, fmt, stream):
    obj = _clean(obj)
    if fmt == "json":
        json.dump(obj, stream, sort_keys=True, indent=1)
        stream.write("\n")
        return
    rows = obj if isinstance(obj, list) else [{"key": k, "value": json.dumps(v, sort_keys=True)} for k, v in sorted(obj.items())]
    buf = io.StringIO()
    if rows:
        cols = sorted({k for r in rows for k in r})
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: json.dumps(v) if isinstance(v, (dict, list)) else v for k, v in r.items()})
    stream.write(buf.getvalue())


def _status(pipe):
    return 0 if not pipe.violations else 1


def cmd_generate(pipe, args):
    dom = pipe.domain
    out = pipe.config.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    save_domain(dom, out, "domain")
    f = pipe.fmap
    manifest = {
        "map": f.name,
        "params": f.params,
        "domain": dom.name,
        "target_dim": f.target_dim,
        "has_density": f.density is not None,
    }
    dump_json(manifest, out / "map.json")
    john = dom.meta.get("john", {})
    summary = {
        "domain": dom.name,
        "epsilon": pipe.config.eps,
        "q": dom.q,
        "interior": int(len(dom.interior)),
        "boundary": int(len(dom.boundary)),
        "john": john,
        "phi_length_john": bool(john.get("phi") == "power"),
        "violations": pipe.violations,
        "files": ["domain.json", "domain_points.csv", "map.json"],
    }
    return summary


def cmd_decompose(pipe, args):
    sec = pipe.decompose_section()
    out = pipe.config.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    save_domain(pipe.domain, out, "domain")
    pipe.decomp.write_jsonl(out / "whitney.jsonl")
    pipe.decomp.cubes.write_jsonl(out / "cubes.jsonl")
    sec["violations"] = pipe.violations
    return sec


def cmd_curves(pipe, args):
    sec = pipe.curves_section()
    out = pipe.config.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    save_domain(pipe.domain, out, "domain")
    dump_json({str(k): v.to_dict() for k, v in pipe.curves.items()}, out / "curves.json")
    sec["violations"] = pipe.violations
    return sec


def cmd_shadows(pipe, args):
    sec = pipe.shadows_section()
    out = pipe.config.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    write_csv(sec["level_sums"], out / "level_sums.csv", ["level", "lhs", "rhs", "ratio", "holds"])
    if args.format == "csv":
        return sec["level_sums"]
    sec["violations"] = pipe.violations
    return sec


def cmd_trace(pipe, args):
    sec, rows = pipe.trace_section()
    out = pipe.config.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    write_csv(rows, out / "traces.csv")
    if args.format == "csv":
        return rows
    sec["violations"] = pipe.violations
    return sec


def cmd_gauges(pipe, args):
    if args.h is None:
        rows = pipe.gauges_section()
        return rows if args.format == "csv" else {"cells": rows, "violations": pipe.violations}
    q = args.q if args.q is not None else 2.0
    if args.phi == "power":
        prof = JohnProfile.power(args.K or 2.0, args.exponent or 0.5, 1.0)
    else:
        prof = profile_for("t")
    param = args.param if args.param is not None else 1.0
    h = GaugeFunction(args.h, alpha=param) if args.h == "power" else GaugeFunction(args.h, beta=param)
    v = gauge_integral(prof, h, q, args.variant or "A1")
    row = v.to_dict()
    row.update(phi=prof.label, h=h.label)
    return [row] if args.format == "csv" else row


def cmd_uniqueness(pipe, args):
    x, y = (float(parse_length(t)) for t in args.point.split(","))
    pipe.config.uniqueness = {"point": [x, y], "scales": args.scales.split(",")}
    rep = pipe.uniqueness_section()
    if args.format == "csv":
        return rep["scales"]
    rep["violations"] = pipe.violations
    return rep


def cmd_report(pipe, args):
    report = pipe.run(write=True)
    if args.format == "csv":
        return report["violations"]
    return {
        "ok": report["ok"],
        "violations": report["violations"],
        "out": str(pipe.config.out_dir()),
        "max_overlap": report["decompose"]["max_overlap"],
        "uniqueness": None if report["uniqueness"] is None else report["uniqueness"]["verdict"],
    }


HANDLERS = {
    "generate": cmd_generate,
    "decompose": cmd_decompose,
    "curves": cmd_curves,
    "shadows": cmd_shadows,
    "trace": cmd_trace,
    "gauges": cmd_gauges,
    "uniqueness": cmd_uniqueness,
    "report": cmd_report,
}


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "render":
            written = render.render_dir(args.input, args.out)
            _emit({"written": [str(p) for p in written]}, args.format, stdout)
            return 0
        cfg = config_from_args(args)
        if args.command == "report" and args.uniqueness_point:
            x, y = (float(parse_length(t)) for t in args.uniqueness_point.split(","))
            cfg.uniqueness = {"point": [x, y]}
        pipe = Pipeline(cfg)
        result = HANDLERS[args.command](pipe, args)
    except (GeometryError, OSError, ValueError) as exc:
        stderr.write(f"johnlimits: error: {exc}\n")
        return 2
    _emit(result, args.format, stdout)
    if pipe.violations:
        for v in pipe.violations[:20]:
            stderr.write(f"johnlimits: violated {v['stage']}/{v['invariant']} witness={v['witness']}\n")
    return _status(pipe)


if __name__ == "__main__":
    sys.exit(main())
