"""Command-line entry point: ``nilclt analyze | simulate | compare``.

Exit codes: 0 ok, 1 validation failure, 2 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .graph import ValidationError, build_hexagonal_heisenberg, validate
from .harmonic import NumericalError, RealizationFamily, analyze
from .io import load_graph, read_samples, write_samples
from .simulate import sample_diffusion, sample_walk
from .stats import compare, ecdf_points

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC = 0, 1, 2


def parse_grid(text: str) -> list[float]:
    """``"0.25,0.5,1"`` or an integer ``M`` for ``{0, 1/M, ..., 1}``."""
    text = text.strip()
    if "," not in text and text.isdigit():
        m = int(text)
        if m < 1:
            raise ValueError("grid resolution must be positive")
        return [j / m for j in range(m + 1)]
    return [float(s) for s in text.split(",") if s.strip()]


def _add_graph_args(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--graph", type=Path, help="graph-spec JSON file")
    src.add_argument("--preset", choices=["hex"], help="built-in Heisenberg hexagonal lattice")
    third = 1.0 / 3.0
    for name in ("alpha", "beta", "gamma", "alpha-prime", "beta-prime", "gamma-prime"):
        p.add_argument(f"--{name}", type=float, default=third, help="hex preset probability (default 1/3)")
    p.add_argument("--gauge", choices=["anchor", "mean"], default="anchor",
                   help="normalisation of the realization family")


def _load(args):
    if args.graph is not None:
        graph, kernel = load_graph(args.graph)
    else:
        graph, kernel = build_hexagonal_heisenberg(
            args.alpha, args.beta, args.gamma, args.alpha_prime, args.beta_prime, args.gamma_prime
        )
    validate(graph, kernel).raise_if_failed()
    return graph, kernel


def _graph_config(args):
    if args.graph is not None:
        return {"graph": str(args.graph)}
    return {
        "preset": "hex",
        "params": [args.alpha, args.beta, args.gamma, args.alpha_prime, args.beta_prime, args.gamma_prime],
    }


def _emit(doc, out_dir, name):
    text = json.dumps(doc, indent=2)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / name).write_text(text)
    print(text)


def cmd_analyze(args) -> int:
    _, kernel = _load(args)
    if not 0.0 <= args.eps <= 1.0:
        raise ValidationError(f"--eps must lie in [0, 1], got {args.eps}")
    doc = analyze(kernel, args.eps, gauge=args.gauge)
    doc["version"] = __version__
    doc["config"] = _graph_config(args)
    _emit(doc, args.out, "analysis.json")
    return EXIT_OK


def cmd_simulate(args) -> int:
    graph, kernel = _load(args)
    grid = parse_grid(args.grid)
    config = dict(_graph_config(args), kind=args.kind, grid=grid, seed=args.seed, paths=args.paths,
                  gauge=args.gauge, version=__version__)
    if args.kind == "walk":
        fam = RealizationFamily(kernel, gauge=args.gauge)
        samples = sample_walk(fam, args.n, grid, args.paths, args.seed, center=args.center,
                              workers=args.workers, chunk=args.chunk)
        config.update(n=args.n, center=args.center)
    else:
        info = analyze(kernel, 0.0, gauge=args.gauge)
        samples = sample_diffusion(graph.algebra, info["frame"], info["rho"], grid, args.steps, args.paths,
                                   args.seed, noise_steps=args.noise_steps, workers=args.workers,
                                   chunk=args.chunk)
        config.update(steps=args.steps, noise_steps=args.noise_steps or args.steps)
    args.out.mkdir(parents=True, exist_ok=True)
    csv_path, sidecar = write_samples(samples, args.out / f"{args.kind}.csv", config)
    print(json.dumps({"samples": str(csv_path), "sidecar": str(sidecar), "rows": samples.n_paths * len(grid)}))
    return EXIT_OK


def cmd_compare(args) -> int:
    a = read_samples(args.file_a)
    b = read_samples(args.file_b)
    if not a.algebra.same_as(b.algebra):
        raise ValidationError("the two sample files use different algebras")
    gaps = [float(g) for g in args.gaps.split(",")] if args.gaps else None
    report = compare(a, b, ks_c=args.ks_c, exponent_gaps=gaps)
    doc = json.loads(report.to_json())
    doc["version"] = __version__
    doc["files"] = [str(args.file_a), str(args.file_b)]
    if args.ecdf and args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        t = report.times[-1]
        rows = []
        for name, s in (("A", a), ("B", b)):
            for flat in range(s.algebra.dim):
                xs, fs = ecdf_points(s.at(t)[:, flat])
                rows += [f"{name},{flat},{x!r},{f!r}" for x, f in zip(xs.tolist(), fs.tolist())]
        (args.out / "ecdf.csv").write_text("sample,coordinate,x,F\n" + "\n".join(rows) + "\n")
    _emit(doc, args.out, "report.json")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nilclt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="invariant measure, directions, Albanese metric, beta")
    _add_graph_args(pa)
    pa.add_argument("--eps", type=float, default=1.0)
    pa.add_argument("--out", type=Path)
    pa.set_defaults(func=cmd_analyze)

    ps = sub.add_parser("simulate", help="sample scaled walks or the limiting diffusion")
    ps.add_argument("kind", choices=["walk", "sde"])
    _add_graph_args(ps)
    ps.add_argument("--n", type=int, default=1024, help="walk length (eps = n^-1/2)")
    ps.add_argument("--paths", type=int, default=1000)
    ps.add_argument("--grid", default="0.5,1", help="times, comma-separated, or M for j/M")
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--steps", type=int, default=1024, help="SDE step count")
    ps.add_argument("--noise-steps", type=int, default=None, help="SDE Brownian resolution")
    ps.add_argument("--center", action="store_true", help="start the walk at the identity")
    ps.add_argument("--workers", type=int, default=1)
    ps.add_argument("--chunk", type=int, default=4096, help="paths per work unit")
    ps.add_argument("--out", type=Path, required=True)
    ps.set_defaults(func=cmd_simulate)

    pc = sub.add_parser("compare", help="moments and KS distances between two sample files")
    pc.add_argument("file_a", type=Path)
    pc.add_argument("file_b", type=Path)
    pc.add_argument("--ks-c", type=float, default=1.63, help="KS threshold constant")
    pc.add_argument("--gaps", default=None, help="comma-separated gaps for the moment exponent fit")
    pc.add_argument("--ecdf", action="store_true", help="also write ecdf.csv")
    pc.add_argument("--out", type=Path)
    pc.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        err = {"error": str(exc), "kind": "validation"}
        if exc.report is not None:
            err["report"] = exc.report.to_dict()
        print(json.dumps(err), file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(json.dumps({"error": str(exc), "kind": "numeric"}), file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(json.dumps({"error": str(exc), "kind": "validation"}), file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
