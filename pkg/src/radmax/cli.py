"""Command line entry point: ``radmax rmf|sqfn|decompose|weights|experiment|gen``."""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .corpus import GENERATORS, CorpusSpec, gen_corpus
from .decomp import atom_defects, atomic_decompose, calderon_zygmund, gundy
from .experiments import EXPERIMENTS, ExperimentConfig, run
from .maximal import rmf, square_function
from .rademacher import EstimatorConfig
from .rmxio import read_config, read_rmx, write_csv, write_rmx
from .space import parse_space
from .stepfn import lp_norm, maximal_values
from .weights import ap_characteristic, fair_share_ratio, self_improvement_scan


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--in", dest="inp", help="input function file (.rmx)")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--seed", type=int)
    p.add_argument("--space", help="value space, e.g. lp:1 or lp:inf")
    p.add_argument("--dim", type=int, help="dimension d of the value space")
    p.add_argument("--depth", type=int, help="tree depth N")
    p.add_argument("--n", type=int, help="spatial dimension n")
    p.add_argument("--estimator", choices=("greedy", "oracle"))
    p.add_argument("--max-len", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--config", help="flat key = value config file")


def _estimator(args, base: dict | None = None) -> EstimatorConfig:
    kw = {}
    base = base or {}
    mode = args.estimator or base.get("estimator")
    if mode:
        kw["mode"] = mode
    for name in ("max_len", "restarts", "seed"):
        val = getattr(args, name, None)
        if val is None and name in base:
            val = int(base[name])
        if val is not None:
            kw[name] = val
    return EstimatorConfig(**kw)


def _config(args) -> dict:
    return read_config(args.config) if getattr(args, "config", None) else {}


def _load(args):
    if not args.inp:
        raise SystemExit("--in is required")
    f = read_rmx(args.inp)
    if args.space:
        f = f.__class__(f.tree, parse_space(args.space, f.space.dim), f.values)
    return f


def _emit(args, statement, header, rows):
    text = write_csv(args.out, statement, header, rows)
    if not args.out or args.out == "-":
        sys.stdout.write(text)


def cmd_rmf(args):
    f = _load(args)
    cfg = _estimator(args, _config(args))
    F = rmf(f, cfg, min_level=args.min_level)
    mf = maximal_values(f, args.min_level)
    rows = [[i, F.lower[i], F.upper[i], mf[i]] for i in range(f.tree.size)]
    _emit(args, f"rademacher maximal function, estimator {cfg.fingerprint}",
          ["leaf_morton", "lower", "upper", "dyadic_max"], rows)


def cmd_sqfn(args):
    f = _load(args)
    cfg = _estimator(args, _config(args))
    S = square_function(f, cfg)
    rows = [[i, S.lower[i], S.upper[i]] for i in range(f.tree.size)]
    _emit(args, "dyadic square function", ["leaf_morton", "lower", "upper"], rows)


def cmd_decompose(args):
    f = _load(args)
    header = ["check", "value", "bound", "slack", "ok"]
    rows = []

    def check(name, value, bound):
        rows.append([name, value, bound, bound - value, value <= bound])

    if args.kind == "atomic":
        q = math.inf if args.q == "inf" else float(args.q)
        A = atomic_decompose(f, q)
        err = float(np.abs(A.reconstruct().values - np.asarray(f.values, dtype=float)).max())
        check("reconstruction", err, 1e-10)
        for j, at in enumerate(A.atoms):
            spill, mean, excess = atom_defects(at.a, at.cube, q)
            check(f"atom{j}:{at.cube.literal()}:support", spill, 0.0)
            check(f"atom{j}:{at.cube.literal()}:mean", mean, 1e-12)
            check(f"atom{j}:{at.cube.literal()}:size", excess, 1e-12)
        rows.append(["coefficient_sum/h1", A.ratio, "", "", ""])
        _emit(args, "atomic decomposition into q-atoms", header, rows)
        return
    if args.lam is None:
        raise SystemExit("--lambda is required")
    lam = args.lam
    l1 = lp_norm(f, 1)
    vals = np.asarray(f.values, dtype=float)
    if args.kind == "cz":
        R = calderon_zygmund(f, lam)
        res = vals - np.asarray(R.g.values, dtype=float) - np.asarray(R.bad_total().values, dtype=float)
        check("reconstruction", float(np.abs(res).max()), 1e-12)
        for Q, b in R.bad:
            check(f"mean:{Q.literal()}", float(b.space.norm(np.asarray(b.integral(), dtype=float))), 1e-12)
        check("stopped_mass", R.stopped_mass(), l1 / lam)
        root_mean = float(np.dot(np.asarray(f.tree.leaf_mass, dtype=float), f.leaf_norms()))
        if f.tree.uniform and root_mean <= lam:
            check("g_sup", lp_norm(R.g, math.inf), 2 ** f.tree.n * lam)
        check("g_l1", lp_norm(R.g, 1), l1)
        _emit(args, "Calderon-Zygmund decomposition at height lambda", header, rows)
        return
    G = gundy(f, lam, args.min_level)
    res = vals - np.asarray((G.g + G.h + G.b).values, dtype=float)
    check("reconstruction", float(np.abs(res).max()), 1e-12)
    check("g_sup", lp_norm(G.g, math.inf), 3 * lam)
    check("g_l1", lp_norm(G.g, 1), 3 * l1)
    check("h_variation", G.h_variation(), 4 * l1)
    check("bad_support", G.bad_support_mass(), l1 / lam)
    _emit(args, "Gundy decomposition at height lambda", header, rows)


def cmd_weights(args):
    w = _load(args)
    if args.kind == "ap":
        rows = [[args.p, ap_characteristic(w, args.p)]]
        _emit(args, "dyadic A_p characteristic", ["p", "characteristic"], rows)
    elif args.kind == "fairshare":
        seed = args.seed or 0
        rows = [[args.gamma, fair_share_ratio(w, args.gamma, args.samples, seed)]]
        _emit(args, "fair share: w(E)/w(Q) against (|E|/|Q|)^gamma", ["gamma", "max_ratio"], rows)
    else:
        grid = [float(x) for x in args.q_grid.replace(",", " ").split()]
        rows = [list(r) for r in self_improvement_scan(w, args.p, grid)]
        _emit(args, "self-improvement: characteristic at exponent p/q", ["q", "characteristic"], rows)


def cmd_experiment(args):
    data = _config(args)
    data["experiment"] = args.name
    for key in ("seed", "space", "dim", "depth", "n", "estimator", "max_len", "restarts"):
        val = getattr(args, key)
        if val is not None:
            data[key] = str(val)
    if args.corpus:
        data["corpus"] = args.corpus
    if args.count is not None:
        data["count"] = str(args.count)
    cfg = ExperimentConfig.from_mapping(data)
    statement, header, rows = run(cfg)
    if not args.out and cfg.out:
        args.out = cfg.out
    _emit(args, statement, header, rows)


def cmd_gen(args):
    data = _config(args)
    spec = CorpusSpec(
        generator=args.corpus or data.get("corpus", "random-gaussian"),
        n=args.n or int(data.get("n", 1)),
        depth=args.depth or int(data.get("depth", 4)),
        dim=args.dim or int(data.get("dim", 2)),
        p=parse_space(args.space or data.get("space", "lp:2"), 1).p,
        count=args.count or int(data.get("count", 1)),
        seed=args.seed if args.seed is not None else int(data.get("seed", 0)),
        measure=data.get("measure", "uniform"),
    )
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    for i, item in enumerate(gen_corpus(spec)):
        path = out / f"{spec.generator}-{i:03d}.rmx"
        write_rmx(path, item.f)
        print(path)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="radmax", description="Rademacher maximal function laboratory")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rmf", help="per-leaf rmf interval field")
    _add_common(p)
    p.add_argument("--min-level", type=int, default=0)
    p.set_defaults(func=cmd_rmf)

    p = sub.add_parser("sqfn", help="dyadic square function")
    _add_common(p)
    p.set_defaults(func=cmd_sqfn)

    p = sub.add_parser("decompose", help="cz, gundy or atomic decomposition report")
    p.add_argument("kind", choices=("cz", "gundy", "atomic"))
    _add_common(p)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--min-level", type=int, default=0)
    p.add_argument("--q", default="inf", help="atom exponent (atomic only)")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("weights", help="A_p diagnostics for a scalar weight file")
    p.add_argument("kind", choices=("ap", "fairshare", "scan"))
    _add_common(p)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--q-grid", default="1.1 1.5")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("experiment", help="run a named experiment")
    p.add_argument("name", choices=EXPERIMENTS)
    _add_common(p)
    p.add_argument("--corpus", choices=GENERATORS)
    p.add_argument("--count", type=int)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("gen", help="write corpus items as .rmx files")
    _add_common(p)
    p.add_argument("--corpus", choices=GENERATORS)
    p.add_argument("--count", type=int)
    p.set_defaults(func=cmd_gen)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"radmax: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
