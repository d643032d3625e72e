"""Command-line entry point.

Subcommands: ``rep`` (build/check representations), ``metric`` (ratio
metric tables), ``holder`` (regularity experiments), ``bouquet`` (point
cloud export), ``prox`` (proximality surveys).  Outputs are deterministic
for a fixed config and seed, and every file embeds the tool version, a
config hash, the seed and the truncation length.

Exit codes: 0 success, 2 certification failure, 3 numerical failure,
4 bad configuration.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import __version__, holder, limits, linalg, metrics, prox, reps
from . import errors as err

NUMERICAL_ERRORS = (
    err.NonInvertible,
    err.EigenFailure,
    err.NonTransverse,
    err.NotLoxodromic,
    err.EmptyBall,
    err.UndefinedForSmallN,
    err.NarrowCloud,
)
CONFIG_ERRORS = (
    err.InadmissibleParameter,
    err.BudgetExceeded,
    ValueError,
    KeyError,
    FileNotFoundError,
    json.JSONDecodeError,
)


def _config_hash(args):
    payload = json.dumps(
        {k: v for k, v in sorted(vars(args).items()) if k != "func"},
        sort_keys=True, default=str,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def _meta(args, L):
    return {
        "tool": "hitchinlab",
        "version": __version__,
        "config": _config_hash(args),
        "seed": getattr(args, "seed", 0),
        "L": L,
    }


def _meta_line(meta):
    return ("# " + ",".join(f"{k}={meta[k]}" for k in ("tool", "version", "config", "seed", "L")))


def write_csv(path, meta, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(_meta_line(meta) + "\r\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def write_json(path, meta, payload):
    body = {"meta": meta, **payload}
    with open(path, "w") as fh:
        json.dump(body, fh, indent=1, sort_keys=True)
        fh.write("\n")


def write_ply(path, meta, vertices):
    """ASCII point cloud with per-vertex (k, x_angle, y_angle) attributes."""
    lines = [
        "ply",
        "format ascii 1.0",
        "comment " + _meta_line(meta)[2:],
        f"element vertex {len(vertices)}",
        "property float x",
        "property float y",
        "property float z",
        "property float k",
        "property float x_angle",
        "property float y_angle",
        "end_header",
    ]
    for v in vertices:
        lines.append(" ".join(repr(float(c)) for c in v))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _threads(args):
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("HITCHIN_LAB_THREADS")
    return max(1, int(env)) if env else 1


# ---------------------------------------------------------------------------
# rep


def cmd_rep(args):
    if args.subcommand == "build":
        if args.fuchsian is not None:
            trace = reps.REGULAR_OCTAGON_TRACE if args.fuchsian == "regular" else args.even_trace
            if trace is None:
                raise ValueError("--even-trace is required for a stretched octagon")
            rho = reps.fuchsian_octagon(trace, label=args.label)
        elif args.sym is not None:
            rho = reps.sym_power(reps.load_representation(args.infile), args.sym,
                                 label=args.label)
        elif args.twist is not None:
            base = reps.load_representation(args.infile)
            rho = reps.twist_deform(base, "abAB", args.twist, label=args.label)
        else:
            raise ValueError("one of --fuchsian/--sym/--twist is required")
        report = reps.certify(rho, L=args.L, seed=args.seed)
        reps.save_representation(rho, args.out)
        print(report.summary())
        if not report.passed:
            raise err.CertificationFailure(report.summary())
        return 0
    else:  # check
        rho = reps.load_representation(args.infile)
        report = reps.certify(rho, L=args.L, seed=args.seed)
        print(report.summary())
        if not report.passed:
            raise err.CertificationFailure(report.summary())
        return 0


# ---------------------------------------------------------------------------
# metric


def _metric_rows(kind, rho_a, rho_b, L, k, threads):
    if kind == "stretch":
        ks = [k] if k else range(1, rho_a.n)
        return [metrics.stretch_metric(rho_a, rho_b, kk, L, threads) for kk in ks]
    if kind == "flag":
        return [metrics.flag_coupling_exponent(rho_a, rho_b, L, threads)]
    if kind == "bouquet-bounds":
        return list(metrics.bouquet_bounds(rho_a, rho_b, L, threads))
    if kind == "bi-bounds":
        return list(metrics.bi_coupling_bounds(rho_a, rho_b, L, threads))
    raise ValueError(f"unknown metric kind {kind!r}")


def cmd_metric(args):
    rho_a = reps.load_representation(args.a)
    rho_b = reps.load_representation(args.b)
    if rho_a.presentation != rho_b.presentation:
        raise ValueError("representations have mismatched presentations")
    threads = _threads(args)
    Ls = range(1, args.L + 1) if args.sweep_L else [args.L]
    rows = []
    for L in Ls:
        for est in _metric_rows(args.kind, rho_a, rho_b, L, args.k, threads):
            if args.kind == "stretch" and est.value == 0.0 and rho_a.fingerprint == rho_b.fingerprint:
                continue  # identical representations produce no stretch rows
            rows.append(est.row())
    write_csv(args.out, _meta(args, args.L),
              ["kind", "k", "L", "value", "witness", "direction"], rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# holder


def cmd_holder(args):
    rho_a = reps.load_representation(args.a)
    rho_b = reps.load_representation(args.b)
    ref = reps.load_representation(args.ref) if args.ref else reps.fuchsian_octagon()
    report = holder.coupling_experiment(
        rho_a, rho_b, args.kind, args.L,
        bins=args.bins, ref_rho=ref, k=args.k,
        max_scale_fraction=args.max_scale_fraction,
        threads=_threads(args),
    )
    meta = _meta(args, args.L)
    write_json(args.out, meta, report.to_dict())
    if args.cloud:
        cloud = report.cloud
        rows = [
            [repr(float(np.log(s))), repr(float(np.log(t)))]
            for s, t in zip(cloud.d_source, cloud.d_target)
        ]
        write_csv(args.cloud, {**meta, "alpha_hat": report.alpha_hat},
                  ["log_d_source", "log_d_target"], rows)
    print(f"alpha_hat={report.alpha_hat:.6f} predicted={report.predicted}")
    return 0


# ---------------------------------------------------------------------------
# bouquet


def cmd_bouquet(args):
    rho = reps.load_representation(args.infile)
    if rho.n <= 3:
        raise err.UndefinedForSmallN("undefined-for-n<=3")
    ref = reps.load_representation(args.ref) if args.ref else reps.fuchsian_octagon()
    atlas = limits.boundary_atlas(ref, args.L)
    grid = holder._thin(atlas, args.angles)
    samples = limits.sample_bouquet(rho, grid)
    chart = args.chart
    vertices = []
    for s in samples:
        p = s.point
        if abs(p[chart]) < 1e-9:
            continue  # point at infinity in this chart
        coords = np.delete(p / p[chart], chart)
        vertices.append(list(coords[:3]) + [float(s.k), s.x.angle, s.y.angle])
    meta = _meta(args, args.L)
    if args.export == "ply":
        write_ply(args.out, meta, vertices)
    else:
        write_csv(args.out, meta,
                  ["x", "y", "z", "k", "x_angle", "y_angle"],
                  [[repr(float(c)) for c in v] for v in vertices])
    print(f"wrote {len(vertices)} bouquet points to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# prox


def cmd_prox(args):
    rho = reps.load_representation(args.infile)
    rows = prox.proximality_survey(rho, args.L, sample_count=args.samples,
                                   seed=args.seed)
    n = rho.n
    header = ["word", "length", "hilbert"]
    for k in range(1, n):
        header += [f"r_{k}", f"eps_{k}"]
    header.append("biloxodromic")
    table = []
    for row in rows:
        flat = [row["word"], row["length"],
                repr(row["hilbert"]) if row["hilbert"] != "" else ""]
        per_k = {k: (r, e) for k, r, e in row["per_k"]}
        for k in range(1, n):
            if k in per_k:
                r, e = per_k[k]
                flat += [repr(r), repr(e) if math.isfinite(e) else "inf"]
            else:
                flat += ["", ""]
        flat.append(str(row["biloxodromic"]).lower())
        table.append(flat)
    write_csv(args.out, _meta(args, args.L), header, table)
    print(f"wrote {len(table)} survey rows to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser():
    p = argparse.ArgumentParser(prog="hitchinlab", description=__doc__)
    p.add_argument("--version", action="version", version=f"hitchinlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    rep = sub.add_parser("rep", help="build or check representations")
    rep.add_argument("subcommand", choices=["build", "check"])
    rep.add_argument("--fuchsian", choices=["regular", "stretched"])
    rep.add_argument("--even-trace", type=float, dest="even_trace")
    rep.add_argument("--sym", type=int)
    rep.add_argument("--twist", type=float)
    rep.add_argument("--in", dest="infile")
    rep.add_argument("--out")
    rep.add_argument("--label", default="")
    rep.add_argument("--L", type=int, default=3)
    rep.add_argument("--seed", type=int, default=0)
    rep.add_argument("--threads", type=int)
    rep.set_defaults(func=cmd_rep)

    met = sub.add_parser("metric", help="ratio metric estimates as CSV")
    met.add_argument("--kind", required=True,
                     choices=["stretch", "flag", "bouquet-bounds", "bi-bounds"])
    met.add_argument("--a", required=True)
    met.add_argument("--b", required=True)
    met.add_argument("--L", type=int, default=5)
    met.add_argument("--k", type=int)
    met.add_argument("--sweep-L", action="store_true", dest="sweep_L")
    met.add_argument("--out", required=True)
    met.add_argument("--seed", type=int, default=0)
    met.add_argument("--threads", type=int)
    met.set_defaults(func=cmd_metric)

    hol = sub.add_parser("holder", help="regularity experiment reports")
    hol.add_argument("--a", required=True)
    hol.add_argument("--b", required=True)
    hol.add_argument("--kind", required=True, choices=["circle", "grassmann_k", "bouquet"])
    hol.add_argument("--L", type=int, default=5)
    hol.add_argument("--k", type=int)
    hol.add_argument("--bins", type=int, default=holder.DEFAULT_BINS)
    hol.add_argument("--max-scale-fraction", type=float,
                     default=holder.DEFAULT_MAX_SCALE_FRACTION, dest="max_scale_fraction")
    hol.add_argument("--ref")
    hol.add_argument("--out", required=True)
    hol.add_argument("--cloud")
    hol.add_argument("--seed", type=int, default=0)
    hol.add_argument("--threads", type=int)
    hol.set_defaults(func=cmd_holder)

    bou = sub.add_parser("bouquet", help="bouquet point-cloud export")
    bou.add_argument("--in", dest="infile", required=True)
    bou.add_argument("--ref")
    bou.add_argument("--L", type=int, default=5)
    bou.add_argument("--angles", type=int, default=60)
    bou.add_argument("--export", choices=["ply", "csv"], default="ply")
    bou.add_argument("--chart", type=int, default=3)
    bou.add_argument("--out", required=True)
    bou.add_argument("--seed", type=int, default=0)
    bou.add_argument("--threads", type=int)
    bou.set_defaults(func=cmd_bouquet)

    prx = sub.add_parser("prox", help="proximality survey CSV")
    prx.add_argument("--in", dest="infile", required=True)
    prx.add_argument("--L", type=int, default=3)
    prx.add_argument("--samples", type=int, default=80)
    prx.add_argument("--out", required=True)
    prx.add_argument("--seed", type=int, default=0)
    prx.add_argument("--threads", type=int)
    prx.set_defaults(func=cmd_prox)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code not in (0, None):
            sys.exit(4)
        raise
    try:
        sys.exit(args.func(args) or 0)
    except err.CertificationFailure as exc:
        print(f"certification failure: {exc}", file=sys.stderr)
        sys.exit(2)
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        sys.exit(3)
    except CONFIG_ERRORS as exc:
        print(f"bad configuration: {exc}", file=sys.stderr)
        sys.exit(4)


if __name__ == "__main__":
    main()
