"""``oversmooth`` command line: gen, spectrum, trace, verify, experiment.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O error,
4 numeric error.
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
import tempfile
import warnings
from pathlib import Path

import numpy as np

from . import graph as gc
from .config import RunConfig, model_from_params
from .errors import DegenerateSpectrumError, OversmoothError, ParameterError
from .gcn import Activation, forward_trace, random_network
from .perturb import run_experiment, summarize, write_summary_csv
from .spectral import ZERO_TOL, contraction_factors, eigendecompose, write_spectrum_csv
from .svgplot import write_scatter_svg
from .verify import (Check, Report, propagation_graph_suite, search_activation_counterexample,
                     verify_activation_bound, verify_propagation_bound, verify_theorem,
                     verify_weight_bound)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3, 4
SIGNAL_LABELS = ("x", "Px", "P^2x")


def _out_dir(args) -> Path:
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load(args) -> gc.Graph:
    return gc.load_edge_list(args.graph, getattr(args, "expected_nodes", None))


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------

_REQUIRED = {"er": ("n", "p"), "rgg": ("n", "radius"), "ba": ("n", "m"), "ws": ("n",),
             "regular": ("n", "d"), "sbm": ("sizes", "p_in", "p_out"), "sbm2": (), "sbm4": ()}


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",")]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",")]


def cmd_gen(args, parser) -> int:
    missing = [f"--{f.replace('_', '-')}" for f in _REQUIRED[args.model] if getattr(args, f) is None]
    if missing:
        parser.error(f"--model {args.model} requires {', '.join(missing)}")
    params = {"model": args.model}
    for name in ("n", "p", "radius", "dim", "m", "k", "d", "p_out"):
        if getattr(args, name) is not None:
            params[name] = getattr(args, name)
    if args.sizes is not None:
        params["sizes"] = args.sizes
    if args.p_in is not None:
        params["p_in"] = args.p_in[0] if len(args.p_in) == 1 else args.p_in
    model = model_from_params(params, args.seed)
    g = gc.generate(model)
    out = Path(args.out) if args.out else _out_dir(args) / f"{args.model}_seed{args.seed}.edges"
    out.parent.mkdir(parents=True, exist_ok=True)
    gc.write_edge_list(g, out)
    sidecar = dict(model.params(), preset=args.model, n_nodes=g.n_nodes, n_edges=g.n_edges)
    _write_json(out.with_suffix(".json"), sidecar)
    print(f"wrote {out} ({g.n_nodes} nodes, {g.n_edges} edges)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------

def cmd_spectrum(args, parser) -> int:
    g = _load(args)
    spec = eigendecompose(gc.augmented_laplacian(g), args.zero_tol)
    out = Path(args.out) if args.out else _out_dir(args) / f"{Path(args.graph).stem}_spectrum.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_spectrum_csv(spec, out, vectors=args.vectors)
    n_comp = len(gc.connected_components(g))
    print(f"nodes={g.n_nodes} edges={g.n_edges} components={n_comp} zero_eigenvalues={spec.n_zero}")
    try:
        f = contraction_factors(spec)
    except DegenerateSpectrumError as exc:
        print(f"warning: degenerate spectrum: {exc}", file=sys.stderr)
    else:
        print(f"lambda={f.lambda_smallest_nonzero!r} paper_factor={f.paper_factor!r} "
              f"safe_factor={f.safe_factor!r}")
        if not f.coincide:
            print("note: lambda_max > 2 - lambda, so (1-lambda)^2 understates the contraction")
    if n_comp != spec.n_zero:
        print(f"warning: {spec.n_zero} eigenvalues below zero_tol but {n_comp} components",
              file=sys.stderr)
    print(f"wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# trace
# ---------------------------------------------------------------------------

def cmd_trace(args, parser) -> int:
    g = _load(args)
    act = Activation.parse(args.activation)
    net = random_network(args.layers, args.c, args.target_s, act, args.depth, args.seed)
    x0 = np.random.default_rng(args.seed).standard_normal((g.n_nodes, args.c))
    trace = forward_trace(net, g, x0, seed=args.seed, zero_tol=args.zero_tol)
    if not act.positively_homogeneous:
        print(f"warning: {act} is outside the bound's hypotheses; the bound column is "
              "reported but no decay is asserted", file=sys.stderr)
    out = Path(args.out) if args.out else _out_dir(args) / f"{Path(args.graph).stem}_trace.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    trace.to_csv(out)
    meta = dict(trace.metadata, layers=args.layers, target_s=args.target_s, c=args.c,
                depth=args.depth, activation=str(act))
    _write_json(out.with_suffix(".json"), meta)
    last = trace.records[-1]
    print(f"layers={args.layers} E0={trace.records[0].energy!r} E_last={last.energy!r} "
          f"bound_last={last.bound!r} factor={trace.factor_used!r}")
    print(f"wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _suite_propagation(args) -> list[Report]:
    reports = []
    for g in propagation_graph_suite(args.seed):
        r = verify_propagation_bound(g, trials=args.trials, seed=args.seed, workers=args.workers)
        r.suite = f"propagation:{g.name}"
        reports.append(r)
    return reports


def _suite_weight(args) -> list[Report]:
    return [verify_weight_bound(args.trials, args.seed, args.workers)]


def _suite_activation(args) -> list[Report]:
    if args.activation:
        act = Activation.parse(args.activation)
        classes = [args.graph_class] if args.graph_class else ["any"]
        reports = [verify_activation_bound(act, gc_, args.trials, args.seed, args.workers)
                   for gc_ in classes]
        if not act.positively_homogeneous and "any" in classes:
            reports.append(_counterexample_report(act, args, asserted=False))
        return reports
    reports = [verify_activation_bound(a, "any", args.trials, args.seed, args.workers)
               for a in ("relu", "leaky_relu:0.01")]
    reports += [verify_activation_bound(a, "regular", args.trials, args.seed, args.workers)
                for a in ("tanh", "sigmoid")]
    reports.append(_counterexample_report(Activation("sigmoid"), args, asserted=True))
    return reports


def _counterexample_report(act, args, asserted: bool) -> Report:
    budget = 10000
    found = search_activation_counterexample(act, budget, args.seed)
    r = Report(f"counterexample:{act}")
    if found.found:
        r.checks.append(Check(found.attempts, f"E({act}(X))<=E(X)", found.energy_activated,
                              found.energy, False, asserted=False))
        r.notes.append(f"violation on {found.graph.name} after {found.attempts} attempt(s): "
                       f"E(sigma(X))={found.energy_activated:.6g} > E(X)={found.energy:.6g}")
    r.checks.append(Check(found.attempts, "violation found within budget", float(found.attempts),
                          float(budget), found.found, asserted=asserted))
    return r


def _suite_theorem(args) -> list[Report]:
    g = gc.generate(gc.ErdosRenyi(200, 0.05, seed=args.seed))
    act = Activation.parse(args.activation) if args.activation else Activation("relu")
    net = random_network(args.layers, 8, 1.0, act, 2, args.seed)
    return [verify_theorem(net, g, args.trials, args.seed, args.workers)]


SUITES = {
    "propagation": _suite_propagation,
    "weight": _suite_weight,
    "activation": _suite_activation,
    "theorem": _suite_theorem,
}


def cmd_verify(args, parser) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    reports = []
    for name in names:
        if args.suite == "all" and name == "activation":
            sub = argparse.Namespace(**{**vars(args), "activation": None, "graph_class": None})
            reports += SUITES[name](sub)
        else:
            reports += SUITES[name](args)
    report = Report.merge(args.suite, reports)
    out = Path(args.out) if args.out else _out_dir(args) / f"verify_{args.suite}.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    report.to_csv(out)
    for r in reports:
        print(r.summary())
    for note in report.notes:
        print(f"note: {note}")
    print(f"wrote {out}")
    if report.failures:
        print(f"FAILED: {len(report.failures)} assertion failure(s)", file=sys.stderr)
        for c in report.failures[:10]:
            print(f"  trial={c.trial} {c.quantity}: lhs={c.lhs!r} rhs={c.rhs!r}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# ---------------------------------------------------------------------------
# experiment
# ---------------------------------------------------------------------------

def run_config(cfg: RunConfig, zero_tol: float = ZERO_TOL) -> list[Path]:
    """Execute ``cfg`` and write its outputs; nothing is left behind on failure."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".partial-", dir=out_dir))
    try:
        model = cfg.model()
        result = run_experiment(model, cfg.kind, cfg.ratios, cfg.trials, cfg.t_mix, cfg.seed,
                                cfg.new_weight, cfg.remix, zero_tol, cfg.workers)
        result.to_csv(tmp / "experiment.csv")
        result.eigenvalues_to_csv(tmp / "eigenvalues.csv")
        summary = summarize(result)
        write_summary_csv(summary, tmp / "summary.csv")
        name = result.metadata["graph"]
        for ratio in result.ratios:
            rows = result.rows_for(ratio)
            series = [(SIGNAL_LABELS[k], [r.e_orig for r in rows if r.k == k],
                       [r.e_pert for r in rows if r.k == k]) for k in range(3)]
            write_scatter_svg(tmp / f"scatter_{cfg.kind}_{ratio!r}.svg", series,
                              title=f"{name}: {cfg.kind} {ratio:.0%} of edges",
                              xlabel="energy, original graph", ylabel="energy, perturbed graph")
        if cfg.network:
            net_cfg = cfg.network
            g = gc.generate(model)
            c = net_cfg.get("c", 16)
            net = random_network(net_cfg.get("layers", 10), c, net_cfg.get("target_s", 1.0),
                                 Activation.parse(net_cfg.get("activation", "relu")),
                                 net_cfg.get("depth", 1), cfg.seed)
            x0 = np.random.default_rng(cfg.seed).standard_normal((g.n_nodes, c))
            forward_trace(net, g, x0, seed=cfg.seed, zero_tol=zero_tol).to_csv(tmp / "trace.csv")
        _write_json(tmp / "config.resolved.json", cfg.to_dict())
        written = []
        for f in sorted(tmp.iterdir()):
            dest = out_dir / f.name
            os.replace(f, dest)
            written.append(dest)
        return written
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


def cmd_experiment(args, parser) -> int:
    cfg = RunConfig.load(args.config)
    for name in ("seed", "trials", "t_mix", "workers"):
        if getattr(args, name) is not None:
            setattr(cfg, name, getattr(args, name))
    if args.out_dir is not None:
        cfg.out_dir = args.out_dir
    if args.ratios is not None:
        cfg.ratios = args.ratios
    if args.kind is not None:
        cfg.kind = args.kind
    written = run_config(cfg, args.zero_tol)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def _common(config_overrides: bool = False) -> argparse.ArgumentParser:
    # experiment leaves these unset so the config file supplies them
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None if config_overrides else 0,
                        help="base random seed (default 0)")
    common.add_argument("--out-dir", default=None if config_overrides else "out",
                        help="output directory (default ./out)")
    common.add_argument("--zero-tol", type=float, default=ZERO_TOL,
                        help="eigenvalues at or below this count as zero")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="oversmooth", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="sample a random graph to an edge-list file")
    p.add_argument("--model", required=True, choices=sorted(_REQUIRED))
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=float, help="edge probability (er) or rewiring probability (ws)")
    p.add_argument("--radius", type=float)
    p.add_argument("--dim", type=int)
    p.add_argument("--m", type=int, help="edges per new node (ba)")
    p.add_argument("--k", type=int, help="ring neighbours (ws, default 4)")
    p.add_argument("--d", type=int, help="degree (regular)")
    p.add_argument("--sizes", type=_ints, help="comma-separated block sizes (sbm)")
    p.add_argument("--p-in", type=_floats, help="within-block probability, one or per block")
    p.add_argument("--p-out", type=float)
    p.add_argument("--out", help="edge-list path (default <out-dir>/<model>_seed<seed>.edges)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("spectrum", parents=[common], help="eigenvalues of the augmented Laplacian")
    p.add_argument("graph")
    p.add_argument("--expected-nodes", type=int)
    p.add_argument("--vectors", action="store_true", help="also export eigenvectors")
    p.add_argument("--out")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("trace", parents=[common], help="energy trace of a random GCN")
    p.add_argument("graph")
    p.add_argument("--expected-nodes", type=int)
    p.add_argument("--layers", type=int, default=10)
    p.add_argument("--target-s", type=float, default=1.0,
                   help="product of squared spectral norms per layer")
    p.add_argument("--activation", default="relu")
    p.add_argument("--c", type=int, default=16, help="channels (default 16)")
    p.add_argument("--depth", type=int, default=1, help="weight matrices per layer")
    p.add_argument("--out")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("verify", parents=[common], help="randomized checks of the energy bounds")
    p.add_argument("suite", choices=[*SUITES, "all"])
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--activation")
    p.add_argument("--graph-class", choices=["any", "regular"])
    p.add_argument("--layers", type=int, default=10, help="network depth for the theorem suite")
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("experiment", parents=[_common(True)], help="edge drop / reweight experiment")
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--trials", type=int)
    p.add_argument("--t-mix", type=int)
    p.add_argument("--ratios", type=_floats)
    p.add_argument("--kind", choices=["drop", "reweight"])
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    with warnings.catch_warnings():
        warnings.simplefilter("always")
        warnings.showwarning = lambda msg, cat, *a, **k: print(f"warning: {msg}", file=sys.stderr)
        try:
            return args.func(args, parser)
        except ParameterError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except OversmoothError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return exc.exit_code
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
