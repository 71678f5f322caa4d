"""Command-line batch tool: corpora, verification runs, chains.

The run verbs take --body pointing at a JSON file holding one body spec
or an array of them. Every body gets its own trace files under --out
(run_000.csv / run_000.json, chain_000.json) plus a shared summary.json.
Exit status 0 means every body passed its checks, 1 means at least one
failed, 2 means a run aborted on a kernel error.
"""

import argparse
import json
import os
import sys

from .bodies import dump_specs, load_specs
from .errors import StarBodyError
from .experiments import (GEOMETRIES, ExperimentConfig, emit, emit_chain,
                          generate_corpus, run_experiment)


def _run_flags(p, iterations=None):
    p.add_argument("--geometry", choices=GEOMETRIES, default=None,
                   help="geometry check; specs without one inherit it")
    p.add_argument("--body", required=True,
                   help="path to a JSON body spec or an array of specs")
    p.add_argument("--resolution", type=int, default=720)
    if iterations is not None:
        p.add_argument("--iterations", type=int, default=iterations)
        p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps-quad", type=float, default=None,
                   help="override the calibrated quadrature tolerance")
    p.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="starbodies",
        description="Projection-inequality experiments for star bodies in "
                    "Euclidean, spherical and hyperbolic space.")
    sub = top.add_subparsers(dest="verb", required=True)

    g = sub.add_parser("gen-corpus",
                       help="draw a deterministic corpus of body specs")
    g.add_argument("--geometry", choices=GEOMETRIES, required=True)
    g.add_argument("--dim", type=int, choices=(2, 3), default=2)
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--family", default="mixed",
                   choices=("mixed", "caps", "balls", "ellipsoids",
                            "trig-radial"))
    g.add_argument("--alphas", default=None,
                   help="comma-separated cap angles for --family caps")
    g.add_argument("--degree", type=int, default=4,
                   help="largest trig-radial frequency")
    g.add_argument("--floor", type=float, default=0.1,
                   help="smallest accepted inscribed radius")
    g.add_argument("--out", required=True, help="output JSON path")

    v = sub.add_parser("verify",
                       help="symmetrization runs checking the projection "
                            "inequality")
    _run_flags(v, iterations=20)
    c = sub.add_parser("converge",
                       help="long random-schedule runs checking convergence "
                            "to the rearrangement")
    _run_flags(c, iterations=200)
    ch = sub.add_parser("isoperimetric-chain",
                        help="four-term isoperimetric chain per body")
    _run_flags(ch)
    return top


def _resolve_geometry(spec: dict, flag):
    spec = dict(spec)
    geom = spec.get("geometry")
    if geom is None:
        geom = flag if flag is not None else "euclidean"
    elif flag is not None and geom != flag:
        print(f"spec geometry {geom!r} conflicts with --geometry {flag!r}",
              file=sys.stderr)
        raise SystemExit(2)
    spec["geometry"] = geom
    return spec, geom


def _write_summary(out_dir: str, payload: dict):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "summary.json")
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def _cmd_gen_corpus(args) -> int:
    alphas = None
    if args.alphas is not None:
        alphas = [float(a) for a in args.alphas.split(",") if a.strip()]
    specs = generate_corpus(args.seed, args.count, args.geometry,
                            dim=args.dim, family=args.family, alphas=alphas,
                            degree=args.degree, floor=args.floor)
    out_dir = os.path.dirname(args.out)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    dump_specs(specs, args.out)
    print(f"wrote {len(specs)} specs to {args.out}")
    return 0


def _cmd_run(args, mode: str) -> int:
    specs = load_specs(args.body)
    chain = mode == "chain"
    rows = []
    for i, raw in enumerate(specs):
        spec, geom = _resolve_geometry(raw, args.geometry)
        stem = f"{'chain' if chain else 'run'}_{i:03d}"
        cfg = ExperimentConfig(
            geometry=geom, body=spec, resolution=args.resolution,
            iterations=1 if chain else args.iterations,
            seed=0 if chain else args.seed,
            eps_quad=args.eps_quad, mode=mode, out=args.out)
        try:
            report = run_experiment(cfg)
        except StarBodyError as e:
            rows.append({"stem": stem, "kind": spec.get("kind"),
                         "status": "error", "error": str(e)})
            _write_summary(args.out, {
                "verb": mode, "body_file": args.body,
                "resolution": args.resolution, "aborted_at": stem,
                "runs": rows, "all_passed": False})
            print(f"{stem} aborted: {e}", file=sys.stderr)
            return 2
        if chain:
            emit_chain(report, args.out, stem)
        else:
            emit(report, args.out, stem)
        row = report.summary()
        row["stem"] = stem
        row["kind"] = spec.get("kind")
        rows.append(row)
        print(f"{stem} {spec.get('kind')}: "
              f"{'pass' if report.passed else 'FAIL'}")
    all_passed = all(r.get("passed", False) for r in rows)
    payload = {"verb": mode, "body_file": args.body,
               "resolution": args.resolution, "runs": rows,
               "all_passed": all_passed}
    if not chain:
        payload["seed"] = args.seed
        payload["iterations"] = args.iterations
    path = _write_summary(args.out, payload)
    print(f"{'all passed' if all_passed else 'FAILURES'}; summary at {path}")
    return 0 if all_passed else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.verb == "gen-corpus":
        return _cmd_gen_corpus(args)
    mode = {"verify": "verify", "converge": "converge",
            "isoperimetric-chain": "chain"}[args.verb]
    return _cmd_run(args, mode)


if __name__ == "__main__":
    sys.exit(main())
