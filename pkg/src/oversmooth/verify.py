"""Randomized checks of the energy inequalities behind over-smoothing.

Every suite returns a :class:`Report` of per-trial checks. A check is either
asserted (it counts as a failure if it does not hold) or observed (recorded
for inspection only, e.g. the ``(1 - lambda)^2`` constant or Tanh on a
non-regular graph). All inequalities allow slack ``1e-9 * (1 + E(X))``.
"""

from __future__ import annotations

import csv
import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .energy import dirichlet_energy_edgesum
from .errors import DegenerateSpectrumError, ParameterError
from .gcn import Activation, NetworkSpec, layer_steps
from .graph import (SYNTHETIC_MODELS, BarabasiAlbert, ErdosRenyi, Graph, RandomRegular,
                    StochasticBlock, augmented_laplacian, complete_bipartite, complete_graph,
                    cycle_graph, generate, is_regular, path_graph, propagation_operator, star_graph)
from .spectral import Spectrum, contraction_factors, eigendecompose, spectral_norm_squared

SLACK = 1e-9


def holds(lhs: float, rhs: float, ref: float) -> bool:
    return lhs <= rhs + SLACK * (1.0 + abs(ref))


def close(a: float, b: float, rtol: float = SLACK) -> bool:
    return abs(a - b) <= rtol * (1.0 + max(abs(a), abs(b)))


@dataclass(frozen=True)
class Check:
    trial: int
    quantity: str
    lhs: float
    rhs: float
    passed: bool
    asserted: bool = True


@dataclass
class Report:
    suite: str
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if c.asserted and not c.passed]

    @property
    def observed_violations(self) -> list:
        return [c for c in self.checks if not c.asserted and not c.passed]

    @property
    def ok(self) -> bool:
        return not self.failures

    def count(self, quantity: str | None = None, asserted: bool | None = None) -> int:
        return sum(1 for c in self.checks
                   if (quantity is None or c.quantity == quantity)
                   and (asserted is None or c.asserted == asserted))

    def violations(self, quantity: str) -> int:
        return sum(1 for c in self.checks if c.quantity == quantity and not c.passed)

    def summary(self) -> str:
        n_obs = self.count(asserted=False)
        line = (f"{self.suite}: {self.count(asserted=True)} asserted checks, "
                f"{len(self.failures)} failures")
        if n_obs:
            line += f"; {n_obs} observed, {len(self.observed_violations)} observed violations"
        return line

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["trial", "quantity", "lhs", "rhs", "pass"])
            for c in self.checks:
                q = c.quantity if c.asserted else f"{c.quantity} [observed]"
                out.writerow([c.trial, q, repr(float(c.lhs)), repr(float(c.rhs)), int(c.passed)])

    @classmethod
    def merge(cls, suite: str, reports: Sequence["Report"]) -> "Report":
        merged = cls(suite)
        for r in reports:
            merged.checks.extend(Check(c.trial, f"{r.suite}/{c.quantity}", c.lhs, c.rhs,
                                       c.passed, c.asserted) for c in r.checks)
            merged.notes.extend(f"{r.suite}: {n}" for n in r.notes)
        return merged


def run_trials(fn: Callable[[int, np.random.Generator], list], trials: int, seed: int,
               workers: int | None = None) -> list:
    """Call ``fn(trial, rng)`` with ``rng`` seeded by ``seed + trial``; results in trial order."""
    def one(t):
        return fn(t, np.random.default_rng(seed + t))

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            chunks = list(pool.map(one, range(trials)))
    else:
        chunks = [one(t) for t in range(trials)]
    return [c for chunk in chunks for c in chunk]


def _random_signal(rng, n, c=None):
    c = int(rng.integers(1, 5)) if c is None else c
    scale = 10.0 ** rng.uniform(-1.0, 1.5)
    return scale * (rng.standard_normal((n, c)) + rng.uniform(-2.0, 2.0))


# ---------------------------------------------------------------------------
# E(PX) <= factor * E(X)
# ---------------------------------------------------------------------------

def verify_propagation_bound(g: Graph, spectrum: Spectrum | None = None, trials: int = 1000,
                             seed: int = 0, workers: int | None = None) -> Report:
    """Check the propagation contraction on random and eigen-aligned signals.

    Trials cycle through Gaussian signals and signals concentrated on the
    eigenvectors of the smallest nonzero and the largest eigenvalue, where the
    two factors are tight.
    """
    report = Report("propagation")
    if spectrum is None:
        spectrum = eigendecompose(augmented_laplacian(g))
    try:
        f = contraction_factors(spectrum)
        safe, paper = f.safe_factor, f.paper_factor
        if not f.coincide:
            report.notes.append(
                f"{g.name}: lambda_max={f.lambda_max:.6g} > 2 - lambda={2 - f.lambda_smallest_nonzero:.6g};"
                f" (1-lambda)^2={paper:.6g} understates the contraction {safe:.6g}")
    except DegenerateSpectrumError:
        safe = paper = 0.0
        report.notes.append(f"{g.name}: edgeless graph, every energy is zero")
    p = propagation_operator(g).matrix
    vals, vecs = spectrum.eigenvalues, spectrum.eigenvectors
    nonzero = np.flatnonzero(vals > spectrum.zero_tol)
    special = [nonzero[0], nonzero[-1]] if len(nonzero) else []

    def trial(t, rng):
        kind = t % 3
        if kind == 0 or not special:
            x = _random_signal(rng, g.n_nodes)
        else:
            v = vecs[:, special[kind - 1]][:, None]
            x = v * rng.uniform(0.5, 2.0) + 1e-3 * rng.standard_normal((g.n_nodes, 1))
        e = dirichlet_energy_edgesum(x, g)
        lhs = dirichlet_energy_edgesum(p @ x, g)
        return [
            Check(t, "E(PX)<=safe*E(X)", lhs, safe * e, holds(lhs, safe * e, e)),
            Check(t, "E(PX)<=paper*E(X)", lhs, paper * e, holds(lhs, paper * e, e), asserted=False),
        ]

    report.checks = run_trials(trial, trials, seed, workers)
    return report


# ---------------------------------------------------------------------------
# E(XW) <= ||W||_2^2 E(X)
# ---------------------------------------------------------------------------

def _draw(model) -> Graph:
    # random test graphs may legitimately be edgeless; skip the warning
    model.validate()
    return model.sample(np.random.default_rng(int(model.seed)))


def _random_small_graph(rng) -> Graph:
    n = int(rng.integers(2, 41))
    g = _draw(ErdosRenyi(n, float(rng.uniform(0.05, 0.6)), seed=int(rng.integers(2**32))))
    if rng.random() < 0.5 and g.n_edges:
        g = g.with_weights(rng.uniform(0.1, 5.0, g.n_edges))
    return g


def verify_weight_bound(trials: int = 1000, seed: int = 0, workers: int | None = None) -> Report:
    """Direct edge-sum check plus the matrix trace chain as an independent oracle.

    The trace chain is ``tr(W'X'LXW) = tr(X'LX WW') <= tr(X'LX) lambda_max(WW')``
    with ``lambda_max`` from a dense symmetric eigensolver rather than the
    power iteration behind ``s``.
    """
    report = Report("weight")

    def trial(t, rng):
        g = _random_small_graph(rng)
        c = int(rng.integers(1, 9))
        c2 = int(rng.integers(1, 9))
        if t % 2 == 0 and c2 == c:
            c2 = c % 8 + 1
        x = _random_signal(rng, g.n_nodes, c)
        w = rng.standard_normal((c, c2)) * 10.0 ** rng.uniform(-1.0, 1.0)
        s = spectral_norm_squared(w)
        e = dirichlet_energy_edgesum(x, g)
        lhs = dirichlet_energy_edgesum(x @ w, g)

        lap = augmented_laplacian(g).matrix
        m = x.T @ lap @ x
        t1 = float(np.trace(w.T @ m @ w))
        t2 = float(np.trace(m @ w @ w.T))
        lam = float(np.linalg.eigvalsh(w @ w.T)[-1])
        t3 = float(np.trace(m)) * lam
        return [
            Check(t, "E(XW)<=s*E(X)", lhs, s * e, holds(lhs, s * e, e)),
            Check(t, "E(XW)=tr(W'X'LXW)", lhs, t1, close(lhs, t1)),
            Check(t, "tr(W'X'LXW)=tr(X'LXWW')", t1, t2, close(t1, t2)),
            Check(t, "tr(X'LXWW')<=tr(X'LX)*lmax(WW')", t2, t3, holds(t2, t3, e)),
            Check(t, "s=lmax(WW')", s, lam, abs(s - lam) <= 1e-8 * lam),
        ]

    report.checks = run_trials(trial, trials, seed, workers)
    return report


# ---------------------------------------------------------------------------
# E(sigma(X)) <= E(X)
# ---------------------------------------------------------------------------

def regular_graph_pool(seed: int = 0) -> list:
    return [cycle_graph(10), cycle_graph(50),
            _draw(RandomRegular(20, 3, seed=seed)), _draw(RandomRegular(50, 3, seed=seed + 1))]


def _nonregular_graph(rng) -> Graph:
    kind = int(rng.integers(5))
    s = int(rng.integers(2**32))
    if kind == 0:
        g = _draw(ErdosRenyi(int(rng.integers(5, 60)), float(rng.uniform(0.05, 0.5)), seed=s))
    elif kind == 1:
        g = star_graph(int(rng.integers(2, 20)))
    elif kind == 2:
        g = _draw(BarabasiAlbert(int(rng.integers(6, 60)), int(rng.integers(1, 5)), seed=s))
    elif kind == 3:
        g = _draw(StochasticBlock((int(rng.integers(3, 20)), int(rng.integers(3, 20))),
                                  0.5, 0.1, seed=s))
    else:
        g = path_graph(int(rng.integers(3, 30)))
    if rng.random() < 0.5 and g.n_edges:
        g = g.with_weights(rng.uniform(0.1, 5.0, g.n_edges))
    return g


def verify_activation_bound(activation: Activation | str, graph_class: str = "any",
                            trials: int = 1000, seed: int = 0, workers: int | None = None) -> Report:
    """Check ``E(sigma(X)) <= E(X)``.

    Asserted for ReLU, LeakyReLU and identity on any graph, and for every
    activation on regular graphs. Tanh and Sigmoid on non-regular graphs
    are observed only.
    """
    if isinstance(activation, str):
        activation = Activation.parse(activation)
    if graph_class not in ("any", "regular"):
        raise ParameterError(f"graph_class must be 'any' or 'regular', got {graph_class!r}")
    report = Report(f"activation:{activation}:{graph_class}")
    pool = regular_graph_pool(seed) if graph_class == "regular" else None

    def trial(t, rng):
        g = pool[t % len(pool)] if pool else _nonregular_graph(rng)
        x = _random_signal(rng, g.n_nodes)
        e = dirichlet_energy_edgesum(x, g)
        lhs = dirichlet_energy_edgesum(activation(x), g)
        asserted = activation.positively_homogeneous or is_regular(g)
        return [Check(t, f"E({activation}(X))<=E(X)", lhs, e, holds(lhs, e, e), asserted)]

    report.checks = run_trials(trial, trials, seed, workers)
    return report


@dataclass
class Counterexample:
    found: bool
    attempts: int
    graph: Graph | None = None
    signal: np.ndarray | None = None
    energy: float = float("nan")
    energy_activated: float = float("nan")


def _skewed_graph(rng) -> Graph:
    """Star plus a few random leaf-to-leaf edges, so degrees are strongly unequal."""
    leaves = int(rng.integers(2, 25))
    g = star_graph(leaves)
    extra = int(rng.integers(0, leaves // 2 + 1))
    if extra:
        pairs = {(int(a), int(b)) for a, b in rng.integers(1, leaves + 1, size=(extra, 2)) if a != b}
        edges = g.edges + [(min(a, b), max(a, b), 1.0) for a, b in pairs]
        g = Graph.from_edges(g.n_nodes, {(e[0], e[1]): e for e in edges}.values(), f"skewed{leaves}")
    return g


def search_activation_counterexample(activation: Activation | str, attempts: int = 10000,
                                     seed: int = 0) -> Counterexample:
    """Randomized search for ``E(sigma(X)) > E(X)`` on degree-skewed graphs.

    Signals follow the pattern ``c_i a = c_j b`` with ``c_i = 1/sqrt(1+d_i)``:
    ``x_i = t sqrt(1+d_i)`` makes every degree-scaled difference vanish, so
    ``E(X)`` is zero while a non-homogeneous activation breaks the balance.
    Every other attempt perturbs the pattern with noise.
    """
    if isinstance(activation, str):
        activation = Activation.parse(activation)
    rng = np.random.default_rng(seed)
    for k in range(1, attempts + 1):
        g = _skewed_graph(rng)
        t = rng.uniform(-3.0, 3.0)
        x = t * np.sqrt(1.0 + g.degrees)[:, None]
        if k % 2 == 0:
            x = x + rng.standard_normal(x.shape) * rng.uniform(0.0, 1.0)
        e = dirichlet_energy_edgesum(x, g)
        ea = dirichlet_energy_edgesum(activation(x), g)
        if not holds(ea, e, e):
            return Counterexample(True, k, g, x, e, ea)
    return Counterexample(False, attempts)


# ---------------------------------------------------------------------------
# Per-layer bound and its product over depth
# ---------------------------------------------------------------------------

def verify_theorem(net: NetworkSpec, g: Graph, trials: int = 100, seed: int = 0,
                   workers: int | None = None) -> Report:
    """Per-layer bound ``E(f_l(X)) <= s_l * safe * E(X)``, per sub-step, and cumulatively.

    Sub-steps follow the running product: ``safe`` after propagation, ``s_lh``
    after weight ``h``, factor 1 after each activation.
    """
    for layer in net.layers:
        if not layer.activation.positively_homogeneous:
            raise ParameterError(
                f"the layer bound needs ReLU or LeakyReLU, got {layer.activation}")
    report = Report("theorem")
    try:
        f = contraction_factors(eigendecompose(augmented_laplacian(g)))
        safe = f.safe_factor
    except DegenerateSpectrumError:
        safe = 0.0
    for l, layer in enumerate(net.layers, start=1):
        if layer.s_l * safe >= 1.0:
            report.notes.append(f"layer {l}: s_l*factor={layer.s_l * safe:.4g} >= 1, "
                                "bound is vacuous and no decay is asserted")
    p = propagation_operator(g).matrix

    def trial(t, rng):
        checks = []
        x = _random_signal(rng, g.n_nodes, net.input_dim)
        e0 = dirichlet_energy_edgesum(x, g)
        cumulative = e0
        for l, layer in enumerate(net.layers, start=1):
            e_in = dirichlet_energy_edgesum(x, g)
            running = e_in
            h = 0
            for label, y in layer_steps(layer, p, x):
                if label == "P":
                    running *= safe
                elif label.startswith("W"):
                    running *= layer.s_lh[h]
                    h += 1
                e = dirichlet_energy_edgesum(y, g)
                # only failing sub-steps are recorded to keep reports small
                if not holds(e, running, e_in):
                    checks.append(Check(t, f"layer{l}:substep:{label}", e, running, False))
                x = y
            e_out = dirichlet_energy_edgesum(x, g)
            rhs = layer.s_l * safe * e_in
            checks.append(Check(t, f"layer{l}:E(f_l(X))<=s_l*safe*E(X)", e_out, rhs,
                                holds(e_out, rhs, e_in)))
            cumulative *= layer.s_l * safe
            checks.append(Check(t, f"layer{l}:E(X_l)<=prod(s_k*safe)*E(X0)", e_out, cumulative,
                                holds(e_out, cumulative, e0)))
        return checks

    report.checks = run_trials(trial, trials, seed, workers)
    return report


def propagation_graph_suite(seed: int = 0) -> list:
    """The synthetic experiment graphs plus small graphs with known spectra."""
    graphs = [dataclasses.replace(generate(m.with_seed(seed)), name=name)
              for name, m in SYNTHETIC_MODELS.items()]
    return graphs + [complete_graph(2), complete_bipartite(3, 3), star_graph(6)]
