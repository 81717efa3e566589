"""Acceptance gate: one PASS/FAIL line per criterion, at the stated tolerances.

Lines are printed in the terminal summary under "acceptance criteria".
Real-data criterion 10 reads edge lists from ``$OVERSMOOTH_CORA_EDGES`` and
``$OVERSMOOTH_CITESEER_EDGES`` (default ``data/cora.edges``,
``data/citeseer.edges``) and fails when they are missing.
"""

import json
import os
import time
from pathlib import Path

import numpy as np
import pytest

from oversmooth.cli import main
from oversmooth.energy import dirichlet_energy_edgesum, dirichlet_energy_quadratic
from oversmooth.gcn import forward_trace, random_network
from oversmooth.graph import (SYNTHETIC_MODELS, EdgeListFile, Graph, augmented_laplacian, complete_graph, generate,
                              load_edge_list, propagation_operator, write_edge_list)
from oversmooth.perturb import DROP, REWEIGHT, run_experiment, summarize
from oversmooth.spectral import contraction_factors, eigendecompose
from oversmooth.verify import (propagation_graph_suite, search_activation_counterexample,
                               verify_activation_bound, verify_propagation_bound,
                               verify_weight_bound)

from conftest import ACCEPTANCE_LINES, random_graph

ROOT = Path(__file__).resolve().parents[1]
BASELINE = Path(__file__).parent / "baselines" / "rgg_fraction_increased.json"
REAL_DATA = {
    "cora": (os.environ.get("OVERSMOOTH_CORA_EDGES", str(ROOT / "data" / "cora.edges")), 2708, 5278, 400),
    "citeseer": (os.environ.get("OVERSMOOTH_CITESEER_EDGES", str(ROOT / "data" / "citeseer.edges")),
                 3327, 4552, 600),
}
# reduced grid for the N ~ 3000 runs, see README
REAL_RATIOS, REAL_TRIALS = (0.1, 0.5, 0.9), 3


def record(number, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    return line


def test_c1_eigenvalue_range():
    t0 = time.perf_counter()
    lo_l, hi_l, lo_p, hi_p = np.inf, -np.inf, np.inf, -np.inf
    for model in SYNTHETIC_MODELS.values():
        for seed in range(20):
            g = generate(model.with_seed(seed))
            lam = np.linalg.eigvalsh(augmented_laplacian(g).matrix)
            mu = np.linalg.eigvalsh(propagation_operator(g).matrix)
            lo_l, hi_l = min(lo_l, lam[0]), max(hi_l, lam[-1])
            lo_p, hi_p = min(lo_p, mu[0]), max(hi_p, mu[-1])
    dt = time.perf_counter() - t0
    ok = lo_l >= -1e-9 and hi_l < 2 and lo_p > -1 and hi_p <= 1 + 1e-9 and dt < 120
    line = record(1, ok, f"{len(SYNTHETIC_MODELS)} models x 20 seeds, L in [{lo_l:.3g}, {hi_l:.6g}], "
                         f"P in [{lo_p:.6g}, {hi_p:.6g}], {dt:.1f}s")
    assert ok, line


def test_c2_energy_formula_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(1000):
        g = random_graph(rng, n_max=40)
        x = rng.standard_normal((g.n_nodes, int(rng.integers(1, 5)))) * 10.0 ** rng.uniform(-2, 2)
        a = dirichlet_energy_quadratic(x, augmented_laplacian(g))
        b = dirichlet_energy_edgesum(x, g)
        worst = max(worst, abs(a - b) / (1 + b))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and dt < 60
    line = record(2, ok, f"1000 pairs, max |quad - edgesum|/(1+E) = {worst:.2e}, {dt:.1f}s")
    assert ok, line


def test_c3_spectral_identity():
    rng = np.random.default_rng(3)
    worst = 0.0
    spectra = {}
    for i in range(100):
        name = ("er", "rgg", "sbm4", "ba")[i % 4]
        if name not in spectra:
            g = generate(SYNTHETIC_MODELS[name].with_seed(3))
            op = augmented_laplacian(g)
            spectra[name] = (g, op, eigendecompose(op))
        g, op, s = spectra[name]
        f = rng.standard_normal((g.n_nodes, 1))
        e = dirichlet_energy_quadratic(f, op)
        c = s.coefficients(f)
        spec = float(np.sum(c[:, 0] ** 2 * s.eigenvalues))
        worst = max(worst, abs(e - spec) / e)
    ok = worst <= 1e-9
    line = record(3, ok, f"100 signals, max relative error {worst:.2e}")
    assert ok, line


def test_c4_propagation_bound():
    failures, names, observed, where = 0, [], 0, []
    for g in propagation_graph_suite(seed=0):
        r = verify_propagation_bound(g, trials=1000, seed=4)
        failures += len(r.failures)
        observed += len(r.observed_violations)
        names.append(g.name)
        if r.observed_violations:
            where.append(g.name)
    k2 = complete_graph(2)
    f = np.random.default_rng(4).standard_normal((2, 3))
    tight = dirichlet_energy_edgesum(propagation_operator(k2).matrix @ f, k2)
    ok = failures == 0 and tight <= 1e-12
    line = record(4, ok, f"{len(names)} graph classes x 1000 trials, {failures} safe-factor violations "
                         f"({observed} against (1-lambda)^2, on {', '.join(where) or 'none'}), K2 E(Pf) = {tight:.1e}")
    assert ok, line


def test_c5_weight_bound():
    r = verify_weight_bound(trials=1000, seed=5)
    rect = sum(1 for c in r.checks if c.quantity == "E(XW)<=s*E(X)" and c.trial % 2 == 0)
    bound_viol = r.violations("E(XW)<=s*E(X)")
    chain_viol = len(r.failures) - bound_viol
    ok = r.ok and r.count("E(XW)<=s*E(X)") == 1000
    line = record(5, ok, f"1000 trials ({rect}+ rectangular), {bound_viol} bound violations, "
                         f"{chain_viol} trace-chain disagreements")
    assert ok, line


def test_c6_activation_bound():
    parts, ok = [], True
    for act in ("relu", "leaky_relu:0.01"):
        r = verify_activation_bound(act, "any", trials=1000, seed=6)
        ok &= r.ok and r.count(asserted=True) == 1000
        parts.append(f"{act} non-regular {len(r.failures)}/1000")
    for act in ("tanh", "sigmoid"):
        r = verify_activation_bound(act, "regular", trials=1000, seed=6)
        ok &= r.ok and r.count(asserted=True) == 1000
        parts.append(f"{act} regular {len(r.failures)}/1000")
    ce = search_activation_counterexample("sigmoid", attempts=10000, seed=6)
    ok &= ce.found
    parts.append(f"sigmoid counterexample after {ce.attempts} attempt(s)" if ce.found
                 else "no sigmoid counterexample in 10000 attempts")
    line = record(6, ok, "; ".join(parts))
    assert ok, line


def test_c7_layer_bound_and_depth(er200):
    t0 = time.perf_counter()
    f = contraction_factors(eigendecompose(augmented_laplacian(er200)))
    safe = f.safe_factor
    # 16 channels: with very narrow layers ReLU can zero the whole signal early
    net = random_network(50, 16, target_s=1.0, activation="relu", depth=1, seed=7)
    x0 = np.random.default_rng(7).standard_normal((er200.n_nodes, 16))
    tr = forward_trace(net, er200, x0, factors=f)
    e = tr.energies
    bound = safe ** np.arange(51) * e[0] * (1 + 1e-9)
    layer_ok = bool(np.all(e <= bound))
    decay_required = safe <= 0.75
    decay_ok = e[-1] < 1e-6 * e[0]
    s_ok = all(abs(layer.s_l - 1.0) <= 1e-9 for layer in net.layers)
    dt = time.perf_counter() - t0
    ok = layer_ok and s_ok and (decay_ok or not decay_required) and dt < 60
    alive = bool(np.all(e > 0))
    line = record(7, ok, f"safe factor {safe:.4f} ({'<=' if decay_required else '>'} 0.75), "
                         f"bound holds at all 50 layers: {layer_ok}, E50/E0 = {e[-1] / e[0]:.2e}, "
                         f"signal nonzero throughout: {alive}, {dt:.1f}s")
    assert ok, line


def test_c8_protocol_reproduction():
    t0 = time.perf_counter()
    model = SYNTHETIC_MODELS["rgg"]
    drop = run_experiment(model, DROP, trials=20, t_mix=20, base_seed=0)
    reweight = run_experiment(model, REWEIGHT, trials=20, t_mix=20, base_seed=0, new_weight=1e4)
    summarize(reweight)
    dt = time.perf_counter() - t0
    counts = drop.points_per_ratio()
    fractions = {r: drop.fraction_increased(r) for r in drop.ratios}
    rw = {r: reweight.fraction_increased(r) for r in reweight.ratios}

    got = {"drop": {repr(r): v for r, v in fractions.items()},
           "reweight": {repr(r): v for r, v in rw.items()}}
    if BASELINE.exists():
        baseline_ok = json.loads(BASELINE.read_text())["fraction_increased"] == got
    else:
        BASELINE.write_text(json.dumps({"model": "RandomGeometric(200, 0.2)", "trials": 20,
                                        "t_mix": 20, "base_seed": 0, "remix": True,
                                        "fraction_increased": got}, indent=2) + "\n")
        baseline_ok = True

    counts_ok = set(counts.values()) == {120} and len(counts) == 9
    bad = [r for r, v in fractions.items() if not v > 0.5]
    ok = counts_ok and not bad and dt < 600
    fmt = lambda d: " ".join(f"{r:g}:{v:.2f}" for r, v in d.items())
    line = record(8, ok, f"120 points per ratio: {counts_ok}; drop fraction increased "
                         f"[{fmt(fractions)}]; not > 0.5 at {bad or 'none'}; reweight (reported) "
                         f"[{fmt(rw)}]; matches recorded baseline: {baseline_ok}; {dt:.1f}s")
    assert baseline_ok
    assert ok, line


def test_c9_determinism(tmp_path):
    def run_all(d):
        d.mkdir()
        cfg = d / "run.json"
        cfg.write_text(json.dumps({"graph": {"model": "sbm4"}, "perturbation": {"kind": "reweight"},
                                   "ratios": [0.3], "trials": 2, "t_mix": 10,
                                   "out_dir": str(d / "exp"), "network": {"layers": 4}}))
        commands = [
            ["gen", "--model", "ws", "--n", "120", "--seed", "9", "--out", str(d / "g.edges")],
            ["spectrum", str(d / "g.edges"), "--vectors", "--out", str(d / "spectrum.csv")],
            ["trace", str(d / "g.edges"), "--layers", "8", "--seed", "9", "--out", str(d / "trace.csv")],
            ["verify", "all", "--trials", "20", "--seed", "9", "--layers", "3",
             "--out", str(d / "verify.csv")],
            ["experiment", "--config", str(cfg), "--seed", "9"],
        ]
        for argv in commands:
            assert main(argv) in (0, 1), argv
        return {p.relative_to(d): p.read_bytes() for p in sorted(d.rglob("*.csv"))}

    a, b = run_all(tmp_path / "a"), run_all(tmp_path / "b")
    same = a.keys() == b.keys() and all(a[k] == b[k] for k in a)
    line = record(9, same, f"{len(a)} CSVs from gen/spectrum/trace/verify/experiment byte-identical: {same}")
    assert same, line


def _scale_run(path, n_nodes, n_edges, t_mix):
    t0 = time.perf_counter()
    g = load_edge_list(path, expected_nodes=n_nodes)
    assert (g.n_nodes, g.n_edges) == (n_nodes, n_edges), (g.n_nodes, g.n_edges)
    s = eigendecompose(augmented_laplacian(g))
    s.check(augmented_laplacian(g))
    r = run_experiment(EdgeListFile(str(path), n_nodes), DROP, ratios=REAL_RATIOS,
                       trials=REAL_TRIALS, t_mix=t_mix)
    assert r.metadata["n_edges"] == n_edges
    assert set(r.points_per_ratio().values()) == {2 * 3 * REAL_TRIALS}
    return time.perf_counter() - t0


def test_c10_real_data_scale():
    missing = [f"{name} ({path})" for name, (path, *_) in REAL_DATA.items() if not Path(path).is_file()]
    if missing:
        line = record(10, False, f"edge lists not available: {', '.join(missing)}; see README")
        pytest.fail(line)
    total, parts = 0.0, []
    for name, (path, n, m, t) in REAL_DATA.items():
        dt = _scale_run(path, n, m, t)
        total += dt
        parts.append(f"{name} {n}/{m} T={t} {dt:.0f}s")
    ok = total < 1800
    line = record(10, ok, "; ".join(parts) + f"; total {total / 60:.1f} min")
    assert ok, line


@pytest.mark.slow
def test_c10_scale_surrogate(tmp_path):
    """Same pipeline on synthetic graphs with the real node and edge counts.

    Not a substitute for criterion 10; it shows load, decompose and the
    experiment run at that size within the time budget.
    """
    total, parts = 0.0, []
    for name, (_, n, m, t) in REAL_DATA.items():
        rng = np.random.default_rng(n)
        pairs = set()
        while len(pairs) < m:
            i, j = sorted(rng.integers(0, n, size=2))
            if i != j:
                pairs.add((int(i), int(j)))
        path = tmp_path / f"{name}_surrogate.edges"
        write_edge_list(Graph.from_edges(n, sorted(pairs), name), path)
        dt = _scale_run(path, n, m, t)
        total += dt
        parts.append(f"{name}-sized {n}/{m} T={t} {dt:.0f}s")
    ok = total < 1800
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion 10 (synthetic surrogate, "
                            f"informational): " + "; ".join(parts) + f"; total {total / 60:.1f} min")
    assert ok
