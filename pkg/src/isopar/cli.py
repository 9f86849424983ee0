"""Command-line entry points: `isopar`, `meshgen`, `flowcheck`."""

from __future__ import annotations

import argparse
import json
import sys

from . import experiments, geometry as geo, meshgen as mg, report
from .experiments import EXPERIMENTS, ExperimentConfig


def _float_list(text):
    return tuple(float(v) for v in text.split(","))


def _add_common(p):
    # defaults stay None so the precedence is: explicit flag, then config
    # file, then the built-in default
    p.add_argument("--domain", default=None,
                   help="one of %s, or use --domain-file" % (geo.DOMAIN_NAMES,))
    p.add_argument("--domain-file", default=None,
                   help="custom domain description file")
    p.add_argument("--degree", type=int, default=None, choices=(1, 2, 3))
    p.add_argument("--hs", type=_float_list, default=None,
                   help="comma-separated decreasing mesh sizes")
    p.add_argument("--t", dest="ts", type=_float_list, default=None,
                   help="comma-separated flow times")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--quad-order", type=int, default=None)
    p.add_argument("--config", default=None,
                   help="JSON file mirroring the experiment config")
    p.add_argument("--no-plots", action="store_true")
    p.add_argument("--dump-matrix", action="store_true",
                   help="write assembled matrices in coordinate text format")


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="isopar",
        description="Curved-domain finite element experiment suite")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        _add_common(sub.add_parser(name))
    args = parser.parse_args(argv)

    fields = {"experiment": args.experiment}
    if args.config:
        with open(args.config) as fh:
            fields.update(json.load(fh))
    for key in ("domain", "degree", "hs", "ts", "seed", "out", "quad_order"):
        val = getattr(args, key)
        if val is not None:
            fields[key] = val
    fields.setdefault("domain", "disk")
    fields.setdefault("out", "out")
    if "hs" not in fields and args.experiment == "converge" \
            and fields.get("domain") == "flower":
        fields["hs"] = experiments.FLOWER_CONVERGE_HS
    config = ExperimentConfig(**{k: v for k, v in fields.items()
                                 if v is not None})

    if args.domain_file:
        raise SystemExit("custom domain files are supported by meshgen/flowcheck; "
                         "experiments need a registered domain name")

    kwargs = {}
    if args.experiment == "matident" and args.dump_matrix:
        import os
        os.makedirs(config.out or "out", exist_ok=True)
        kwargs["dump_dir"] = config.out or "out"
    table = experiments.run(config, **kwargs)
    report.emit(table, config, config.out or "out", plots=not args.no_plots)
    for row in table.rows:
        print("  ".join("%s=%.6g" % (k, v) for k, v in row.items()))
    for key, fit in table.fits.items():
        print("%s slope: %.3f +- %.3f (%s)" % (key, fit.slope, fit.band95, fit.model))
    for key, val in table.extra.items():
        print("%s: %.6g" % (key, val))
    return 0


def _resolve_domain(args):
    if args.domain_file:
        return geo.load_domain_file(args.domain_file)
    return geo.get_domain(args.domain).polygon


def meshgen_main(argv=None):
    parser = argparse.ArgumentParser(
        prog="meshgen", description="Generate a boundary-fitted triangulation")
    parser.add_argument("--domain", default="disk")
    parser.add_argument("--domain-file", default=None)
    parser.add_argument("--h", type=float, required=True)
    parser.add_argument("--seed", type=int, default=mg.DEFAULT_SEED)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    polygon = _resolve_domain(args)
    mesh = mg.generate(polygon, args.h, seed=args.seed)
    rep = mg.validate(mesh, polygon)
    mg.write_mesh(mesh, args.out)
    print("wrote %s: %d vertices, %d triangles, h=%.4g, ok=%s"
          % (args.out, mesh.num_vertices, mesh.num_triangles, mesh.h, rep.ok))
    return 0 if rep.ok else 1


def flowcheck_main(argv=None):
    parser = argparse.ArgumentParser(
        prog="flowcheck", description="Verify the outward flow construction")
    parser.add_argument("--domain", default="lens")
    parser.add_argument("--domain-file", default=None)
    parser.add_argument("--t", type=_float_list, default=experiments.DEFAULT_TS)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    from . import flowmap
    polygon = _resolve_domain(args)
    fld = flowmap.build_field(polygon)
    rep = flowmap.verify_sandwich(fld, args.t)
    with open(args.out, "w") as fh:
        fh.write("# schema: isopar.flow.v1\n")
        fh.write("t,min_dist,max_dist,min_jacobian\n")
        for row in rep.rows:
            fh.write("%.17g,%.17g,%.17g,%.17g\n"
                     % (row["t"], row["min_dist"], row["max_dist"],
                        row["min_jacobian"]))
    print("lambda=%.4g min_jacobian=%.4g min_normal_product=%.4g"
          % (rep.lam, rep.min_jacobian, fld.min_normal_product))
    return 0


if __name__ == "__main__":
    sys.exit(main())
