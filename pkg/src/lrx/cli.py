"""Command-line entry point: ``python -m lrx <subcommand> [flags]``.

Every subcommand writes its files into ``--out`` together with a
``run.json`` manifest (config, versions, timing, peak memory).  All other
files depend only on the config and seed.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import resource
import sys
import time

import numpy as np

from . import __version__
from .errors import ResourceLimitError

FORMAT_VERSION = 1


def _perm_arg(text: str):
    return tuple(int(t) for t in text.replace(" ", "").split(",") if t)


def _float_list(text: str):
    return [float(t) for t in text.replace(" ", "").split(",") if t]


def _dump(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _spec(args, kind: str | None = None):
    from .space import GraphSpec

    return GraphSpec(kind or args.kind, args.n, getattr(args, "x_trick", False))


def _default_start(spec):
    from .space import coset_long_element, longest_element

    return coset_long_element(spec.n) if spec.is_coset else longest_element(spec.n)


def _walk_cfg(args):
    from .walks import WalkConfig

    kmax = args.kmax if args.kmax is not None else args.n * (args.n - 1) // 2
    return WalkConfig(args.walk, kmax, args.walks, args.seed, args.history_depth or 1)


def _model_cfg(args):
    from .estimator import ModelConfig

    return ModelConfig(
        hidden=args.hidden,
        epochs_warmup=args.epochs_warmup,
        epochs_dqn=args.epochs_dqn,
        batch_size=args.batch_size,
        lr=args.lr,
        optimizer=args.optimizer,
        seed=args.seed,
    )


# ---------------------------------------------------------------------------
# subcommands; each returns a JSON-able summary


def cmd_bfs(args, kind="full"):
    from .search import bfs, farthest_states

    spec = _spec(args, kind)
    profile, table = bfs(spec, mem_budget=args.mem_budget_bytes, threads=args.threads)
    profile.write_csv(os.path.join(args.out, "layers.csv"))
    far = farthest_states(table)
    with open(os.path.join(args.out, "farthest.txt"), "w") as fh:
        for s in far:
            fh.write(spec.format(s) + "\n")
    return {"diameter": profile.diameter, "states": profile.total, "farthest": len(far)}


def cmd_coset_bfs(args):
    return cmd_bfs(args, "coset")


def cmd_dp(args):
    from .bellman import DpConfig, dp_solve

    spec = _spec(args)
    cfg = DpConfig(args.tolerance, args.alpha, args.max_iter, args.init, args.layer_k, args.sigma, args.seed)
    res = dp_solve(spec, cfg)
    res.write_trace_csv(os.path.join(args.out, "dp_trace.csv"))
    res.write_values_csv(os.path.join(args.out, "distances.csv"))
    return {"iterations": res.iterations, "converged": res.converged}


def cmd_tropical(args):
    from .bellman import lex_order, tropical_adjacency, tropical_power
    from .search import GraphIndex

    spec = _spec(args)
    index = GraphIndex.build(spec, mem_budget=args.mem_budget_bytes)
    if len(index) > 720:
        raise ResourceLimitError("tropical power limited to 720 states")
    T = tropical_power(tropical_adjacency(index), len(index) - 1)
    states = index.states()
    order = lex_order(states)
    names = [spec.format(states[i]) for i in order]
    with open(os.path.join(args.out, "apsp.csv"), "w") as fh:
        fh.write("state," + ",".join(f'"{s}"' for s in names) + "\n")
        for name, i in zip(names, order):
            fh.write(f'"{name}",' + ",".join(str(int(v)) for v in T[i, order]) + "\n")
    match = all((T[i] == index.bfs_from(i)).all() for i in range(len(index)))
    return {"states": len(index), "matches_bfs": bool(match)}


def cmd_walks(args):
    from .walks import generate_walks

    spec = _spec(args)
    ts = generate_walks(spec, _walk_cfg(args), args.threads)
    ts.write_csv(os.path.join(args.out, "training.csv"))
    return {"pairs": len(ts)}


def cmd_dd_exact(args):
    from .search import GraphIndex
    from .walks import exact_diffusion_distance, layer_means

    spec = _spec(args)
    index = GraphIndex.build(spec, mem_budget=args.mem_budget_bytes)
    kmax = args.kmax if args.kmax is not None else index.diameter
    dd = exact_diffusion_distance(spec, kmax, args.mode, index)
    dd.write_csv(os.path.join(args.out, "dd.csv"), spec)
    means = layer_means(index, dd)
    with open(os.path.join(args.out, "layer_means.csv"), "w") as fh:
        fh.write("distance,mean_dd\n")
        for d, m in enumerate(means):
            fh.write(f"{d},{float(m)!r}\n")
    return {"k_max": kmax, "mode": args.mode, "states": int(dd.values.size)}


def cmd_mixing(args):
    from .walks import WalkConfig, mixing_curve

    spec = _spec(args)
    kmax = args.kmax if args.kmax is not None else 10 * args.n**3
    cfg = WalkConfig(args.walk, kmax, args.trials, args.seed, args.history_depth or 1)
    curve = mixing_curve(spec, cfg, args.trials, args.threads)
    curve.write_csv(os.path.join(args.out, "mixing.csv"))
    return {"final_mean": float(curve.mean[-1]), "final_stderr": float(curve.stderr[-1]), "plateau_reference": args.n * (args.n - 1) / 4}


def _evaluate(spec, est, args) -> dict:
    if spec.is_coset or spec.n > 9:
        return {}
    from .bellman import spearman
    from .search import GraphIndex

    index = GraphIndex.build(spec, mem_budget=args.mem_budget_bytes)
    return {"spearman": spearman(est.predict_batch(index.states()), index.dist)}


def _write_history(path, rows) -> None:
    with open(path, "w") as fh:
        fh.write("epoch,loss\n")
        for i, v in enumerate(rows):
            fh.write(f"{i},{float(v)!r}\n")


def cmd_train(args):
    from .estimator import train_warmup
    from .walks import generate_walks

    spec = _spec(args)
    wc = _walk_cfg(args)
    hist = []
    est = train_warmup(generate_walks(spec, wc, args.threads), _model_cfg(args), history=hist)
    path = args.checkpoint or os.path.join(args.out, "model.json")
    est.save(path)
    _write_history(os.path.join(args.out, "warmup_loss.csv"), hist)
    return {"checkpoint": os.path.basename(path), **_evaluate(spec, est, args)}


def cmd_dqn(args):
    from .estimator import DistanceEstimator, train_dqn, train_warmup
    from .walks import generate_walks

    spec = _spec(args)
    wc = _walk_cfg(args)
    mc = _model_cfg(args)
    if args.checkpoint:
        est = DistanceEstimator.load(args.checkpoint, spec.n)
    else:
        est = train_warmup(generate_walks(spec, wc, args.threads), mc)
    out = {"warmup": _evaluate(spec, est, args)}
    hist = []
    est = train_dqn(spec, est, mc, wc, args.threads, history=hist)
    est.save(os.path.join(args.out, "model_dqn.json"))
    _write_history(os.path.join(args.out, "dqn_loss.csv"), hist)
    out["dqn"] = _evaluate(spec, est, args)
    return out


def _beam_cfg(args):
    from .beam import BeamConfig

    return BeamConfig(
        width=args.width,
        max_steps=args.max_steps,
        history=args.history_depth if args.history_depth is not None else 1,
        x_trick=args.x_trick,
        seed=args.seed,
        heuristic=args.heuristic,
        mem_budget=args.mem_budget_bytes,
    )


def _beam_inputs(spec, args):
    est = oracle = None
    if args.heuristic == "model":
        from .estimator import DistanceEstimator

        if not args.checkpoint:
            raise ValueError("--heuristic model requires --checkpoint")
        est = DistanceEstimator.load(args.checkpoint, spec.n)
    elif args.heuristic == "oracle":
        from .search import bfs
        from .space import GraphSpec

        oracle = bfs(GraphSpec(spec.kind, spec.n), mem_budget=args.mem_budget_bytes)[1]
    return est, oracle


def cmd_beam(args):
    from .beam import beam_search

    spec = _spec(args)
    start = spec.parse(args.start) if args.start else _default_start(spec)
    est, oracle = _beam_inputs(spec, args)
    res = beam_search(spec, start, _beam_cfg(args), est, oracle)
    _dump(os.path.join(args.out, "result.json"), res.to_json(args.seed))
    return {"found": res.found, "length": res.length}


def cmd_solve_batch(args):
    from .beam import solve_batch
    from .space import GraphSpec

    spec = _spec(args)
    if args.starts:
        with open(args.starts) as fh:
            starts = [spec.parse(line) for line in fh if line.strip()]
    else:
        base = GraphSpec(spec.kind, spec.n)
        rng = np.random.default_rng([args.seed, 11])
        starts = [tuple(int(v) for v in rng.permutation(base.identity())) for _ in range(args.random)]
    est, oracle = _beam_inputs(spec, args)
    report, _ = solve_batch(spec, starts, _beam_cfg(args), args.repeats, est, oracle)
    report.write_csv(os.path.join(args.out, "report.csv"), timings=args.timings)
    summary = report.summary()
    if not args.timings:
        summary.pop("total_seconds")
    _dump(os.path.join(args.out, "summary.json"), summary)
    return summary


def cmd_longest_word(args):
    from .perm import apply_word, identity
    from .solvers import longest_word
    from .space import longest_element

    w = longest_word(args.n)
    target = longest_element(args.n)
    valid = apply_word(identity(args.n), w) == target and apply_word(target, w) == identity(args.n)
    if not valid:
        raise RuntimeError("longest word failed replay")
    _dump(os.path.join(args.out, "longest_word.json"), {"n": args.n, "word": w, "length": len(w), "target": list(target), "valid": True})
    return {"length": len(w)}


def cmd_construct(args):
    from .solvers import constructive_solve, upper_bound, verify

    if args.perm:
        perms = [_perm_arg(args.perm)]
    else:
        rng = np.random.default_rng([args.seed, 13])
        perms = [tuple(int(v) for v in rng.permutation(args.n)) for _ in range(args.random)]
    rows = []
    for p in perms:
        w = constructive_solve(p, args.candidates)
        if not verify(p, w):
            raise RuntimeError("constructive word failed replay")
        rows.append({"perm": ",".join(map(str, p)), "word": w, "length": len(w), "bound": upper_bound(len(p)), "valid": True})
    if args.perm:
        _dump(os.path.join(args.out, "construct.json"), {k: rows[0][k] for k in ("word", "length", "bound", "valid")})
    else:
        with open(os.path.join(args.out, "construct.csv"), "w") as fh:
            fh.write("perm,length,bound\n")
            for r in rows:
                fh.write(f'"{r["perm"]}",{r["length"]},{r["bound"]}\n')
    return {"count": len(rows), "max_length": max(r["length"] for r in rows), "within_bound": all(r["length"] <= r["bound"] for r in rows)}


def cmd_bounds(args):
    from .solvers import axial_lower_bound, upper_bound

    n = args.n
    out = {
        "n": n,
        "axial_lower_bound": axial_lower_bound(n),
        "diameter_lower_bound": n * (n - 1) // 2 - n // 2 - 1,
        "conjectured_diameter": n * (n - 1) // 2,
        "upper_bound": upper_bound(n),
    }
    _dump(os.path.join(args.out, "bounds.json"), out)
    return out


def cmd_growth(args):
    from .analysis import growth_stats
    from .search import bfs

    profile, _ = bfs(_spec(args), mem_budget=args.mem_budget_bytes, threads=args.threads)
    profile.write_csv(os.path.join(args.out, "layers.csv"))
    stats = growth_stats(profile)
    _dump(os.path.join(args.out, "growth.json"), stats)
    return stats


def cmd_gumbel(args):
    from .analysis import gumbel_fit
    from .search import LayerProfile, bfs

    if args.profile:
        import csv

        with open(args.profile, newline="") as fh:
            sizes = [int(r["layer_size"]) for r in csv.DictReader(fh)]
        profile = LayerProfile(sizes, args.n, args.kind)
    else:
        profile, _ = bfs(_spec(args), mem_budget=args.mem_budget_bytes, threads=args.threads)
    fit = gumbel_fit(profile, args.objective)
    _dump(os.path.join(args.out, "gumbel.json"), fit.to_json())
    return {"mu": fit.params.mu, "beta": fit.params.beta}


def cmd_fit(args):
    from .analysis import poly_fit

    coef = poly_fit(_float_list(args.x), _float_list(args.y), args.degree)
    out = {"coefficients": [float(c) for c in coef], "degree": args.degree}
    _dump(os.path.join(args.out, "fit.json"), out)
    return out


def cmd_spectrum(args):
    from .analysis import spectrum, write_spectrum

    eig = spectrum(_spec(args), args.method)
    write_spectrum(os.path.join(args.out, "spectrum.csv"), os.path.join(args.out, "spectrum_hist.csv"), eig, args.bins)
    meta = {"operator": "adjacency", "count": int(eig.size), "max": float(eig.max()), "sum": float(eig.sum())}
    _dump(os.path.join(args.out, "spectrum.json"), {**meta, "max": round(meta["max"], 9), "sum": round(meta["sum"], 6)})
    return meta


def cmd_sortnet(args):
    from .search import geodesic_ensemble
    from .space import longest_element

    source = _perm_arg(args.start) if args.start else longest_element(args.n)
    geo = geodesic_ensemble(args.n, source)
    geo.write_csv(os.path.join(args.out, "trajectory.csv"))
    out = {"geodesics": str(geo.count), "length": geo.length}
    _dump(os.path.join(args.out, "sortnet.json"), out)
    return out


COMMANDS = {
    "bfs": cmd_bfs,
    "coset-bfs": cmd_coset_bfs,
    "dp": cmd_dp,
    "tropical": cmd_tropical,
    "walks": cmd_walks,
    "dd-exact": cmd_dd_exact,
    "mixing": cmd_mixing,
    "train": cmd_train,
    "dqn": cmd_dqn,
    "beam": cmd_beam,
    "solve-batch": cmd_solve_batch,
    "longest-word": cmd_longest_word,
    "construct": cmd_construct,
    "solve": cmd_construct,
    "bounds": cmd_bounds,
    "growth": cmd_growth,
    "gumbel": cmd_gumbel,
    "fit": cmd_fit,
    "spectrum": cmd_spectrum,
    "sortnet": cmd_sortnet,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=6)
    common.add_argument("--kind", choices=["full", "coset"], default="full")
    common.add_argument("--x-trick", action="store_true")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default="out")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--mem-budget-bytes", type=int, default=4 << 30)

    walk = argparse.ArgumentParser(add_help=False)
    walk.add_argument("--walk", choices=["plain", "nbt", "x_trick"], default="plain")
    walk.add_argument("--kmax", type=int)
    walk.add_argument("--walks", type=int, default=1000)
    walk.add_argument("--history-depth", type=int)

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--epochs-warmup", type=int, default=50)
    model.add_argument("--epochs-dqn", type=int, default=50)
    model.add_argument("--lr", type=float, default=1e-3)
    model.add_argument("--hidden", type=int, default=128)
    model.add_argument("--batch-size", type=int, default=1024)
    model.add_argument("--optimizer", choices=["adam", "sgd"], default="adam")
    model.add_argument("--checkpoint")

    beam = argparse.ArgumentParser(add_help=False)
    beam.add_argument("--width", type=int, default=1024)
    beam.add_argument("--max-steps", type=int, default=1000)
    beam.add_argument("--history-depth", type=int)
    beam.add_argument("--heuristic", choices=["model", "hamming", "oracle"], default="model")
    beam.add_argument("--checkpoint")

    p = argparse.ArgumentParser(prog="lrx", description="LRX Cayley graph toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("bfs", parents=[common], help="exhaustive BFS of the full graph")
    sub.add_parser("coset-bfs", parents=[common], help="exhaustive BFS of the coset graph")

    s = sub.add_parser("dp", parents=[common], help="value iteration against BFS")
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--tolerance", type=float, default=1e-9)
    s.add_argument("--max-iter", type=int, default=1000)
    s.add_argument("--init", default="zero")
    s.add_argument("--layer-k", type=int, default=0)
    s.add_argument("--sigma", type=float)

    sub.add_parser("tropical", parents=[common], help="min-plus adjacency power")
    sub.add_parser("walks", parents=[common, walk], help="random-walk training pairs")

    s = sub.add_parser("dd-exact", parents=[common], help="exact diffusion distance")
    s.add_argument("--kmax", type=int)
    s.add_argument("--mode", choices=["walk", "first_visit"], default="walk")

    s = sub.add_parser("mixing", parents=[common], help="mean inversions along walks")
    s.add_argument("--walk", choices=["plain", "nbt", "x_trick"], default="plain")
    s.add_argument("--kmax", type=int)
    s.add_argument("--trials", type=int, default=5000)
    s.add_argument("--history-depth", type=int)

    sub.add_parser("train", parents=[common, walk, model], help="warm-up regression on walk labels")
    sub.add_parser("dqn", parents=[common, walk, model], help="modified DQN training")

    for name in ("beam", "solve-batch"):
        s = sub.add_parser(name, parents=[common, beam], help="guided beam search")
        if name == "beam":
            s.add_argument("--start", type=str)
        else:
            s.add_argument("--starts", help="file with one state per line")
            s.add_argument("--random", type=int, default=10)
            s.add_argument("--repeats", type=int, default=1)
            s.add_argument("--timings", action="store_true", help="record wall-clock seconds in report.csv")

    sub.add_parser("longest-word", parents=[common], help="closed-form word for the longest element")
    for name in ("construct", "solve"):
        s = sub.add_parser(name, parents=[common], help="constructive decomposition")
        s.add_argument("--perm", type=str)
        s.add_argument("--random", type=int, default=10)
        s.add_argument("--candidates", type=int, default=1)
    sub.add_parser("bounds", parents=[common], help="lower and upper diameter bounds")
    sub.add_parser("growth", parents=[common], help="growth moments")

    s = sub.add_parser("gumbel", parents=[common], help="Gumbel fit of the growth profile")
    s.add_argument("--objective", choices=["l2", "linf", "ks"], default="l2")
    s.add_argument("--profile", help="layers.csv to fit instead of running BFS")

    s = sub.add_parser("fit", parents=[common], help="least-squares polynomial fit")
    s.add_argument("--x", required=True)
    s.add_argument("--y", required=True)
    s.add_argument("--degree", type=int, default=2)

    s = sub.add_parser("spectrum", parents=[common], help="adjacency eigenvalues")
    s.add_argument("--method", choices=["auto", "jacobi", "lapack"], default="auto")
    s.add_argument("--bins", type=int, default=50)

    s = sub.add_parser("sortnet", parents=[common], help="geodesic ensemble trajectories")
    s.add_argument("--start", type=str)
    return p


def _versions() -> dict:
    return {"lrx": __version__, "python": platform.python_version(), "numpy": np.__version__, "format": FORMAT_VERSION}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    os.makedirs(args.out, exist_ok=True)
    t0 = time.perf_counter()
    try:
        from threadpoolctl import threadpool_limits

        # BLAS stays single-threaded so float results do not depend on --threads
        with threadpool_limits(limits=1):
            result = COMMANDS[args.command](args)
    except ResourceLimitError as exc:
        print(f"lrx: resource limit: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError) as exc:
        print(f"lrx: error: {exc}", file=sys.stderr)
        return 2
    manifest = {
        "command": args.command,
        "argv": list(sys.argv[1:] if argv is None else argv),
        "config": {k: v for k, v in vars(args).items()},
        "versions": _versions(),
        "seconds": time.perf_counter() - t0,
        "peak_rss_kib": resource.getrusage(resource.RUSAGE_SELF).ru_maxrss,
        "result": result,
    }
    _dump(os.path.join(args.out, "run.json"), manifest)
    print(json.dumps(result, sort_keys=True))
    return 0


def main() -> None:
    sys.exit(run())
