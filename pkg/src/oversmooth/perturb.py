"""Edge drop / edge reweight perturbations and the low-eigenvector energy experiment."""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Sequence

import numpy as np

from .energy import dirichlet_energy_edgesum
from .errors import NumericError, ParameterError
from .graph import EdgeListFile, Graph, GraphModel, augmented_laplacian, generate, propagation_operator
from .spectral import ZERO_TOL, Spectrum, eigendecompose, low_eig_mix, mix_coefficients

DROP = "drop"
REWEIGHT = "reweight"
DEFAULT_NEW_WEIGHT = 10000.0
DEFAULT_RATIOS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


@dataclass(frozen=True)
class PerturbationSpec:
    kind: str
    ratio: float
    new_weight: float = DEFAULT_NEW_WEIGHT
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (DROP, REWEIGHT):
            raise ParameterError(f"perturbation kind must be 'drop' or 'reweight', got {self.kind!r}")
        if not 0.0 <= self.ratio <= 1.0:
            raise ParameterError(f"ratio must lie in [0, 1], got {self.ratio}")
        if not self.new_weight > 0:
            raise ParameterError(f"new_weight must be positive, got {self.new_weight}")


def n_selected(ratio: float, n_edges: int) -> int:
    """``round(ratio * n_edges)`` with halves rounded up, on the decimal value of ``ratio``."""
    exact = Decimal(repr(float(ratio))) * n_edges
    return int(exact.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def select_edges(g: Graph, ratio: float, seed) -> np.ndarray:
    """Sorted indices of ``round(ratio * |E|)`` edges drawn without replacement."""
    k = n_selected(ratio, g.n_edges)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(g.n_edges, size=k, replace=False))


def perturb(g: Graph, spec: PerturbationSpec) -> Graph:
    idx = select_edges(g, spec.ratio, spec.seed)
    if len(idx) == 0:
        return g
    if spec.kind == DROP:
        keep = np.ones(g.n_edges, dtype=bool)
        keep[idx] = False
        return g.subgraph_edges(keep)
    w = np.array(g.weight)
    w[idx] = spec.new_weight
    return g.with_weights(w)


@dataclass(frozen=True)
class EnergyRow:
    ratio: float
    trial: int
    k: int
    e_orig: float
    e_pert: float


@dataclass
class ExperimentResult:
    rows: list
    eigenvalues: dict = field(default_factory=dict)  # (ratio, trial) -> (original, perturbed)
    metadata: dict = field(default_factory=dict)

    @property
    def ratios(self) -> list:
        return sorted({r.ratio for r in self.rows})

    def rows_for(self, ratio: float) -> list:
        return [r for r in self.rows if r.ratio == ratio]

    def points_per_ratio(self) -> dict:
        """Energy values per ratio, counting the original and perturbed sides separately."""
        return {ratio: 2 * len(self.rows_for(ratio)) for ratio in self.ratios}

    def fraction_increased(self, ratio: float) -> float:
        rows = self.rows_for(ratio)
        return sum(r.e_pert > r.e_orig for r in rows) / len(rows)

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["ratio", "trial", "k", "e_orig", "e_pert"])
            for r in self.rows:
                out.writerow([repr(r.ratio), r.trial, r.k, repr(r.e_orig), repr(r.e_pert)])

    def eigenvalues_to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["ratio", "trial", "which", "index", "eigenvalue"])
            for (ratio, trial), (orig, pert) in sorted(self.eigenvalues.items()):
                for which, vals in (("original", orig), ("perturbed", pert)):
                    for i, lam in enumerate(vals):
                        out.writerow([repr(ratio), trial, which, i, repr(float(lam))])


def signal_energies(g: Graph, x: np.ndarray, hops: int = 2) -> list[float]:
    """Energies of ``x, Px, ..., P^hops x`` on ``g``."""
    p = propagation_operator(g).matrix
    out = []
    for _ in range(hops + 1):
        out.append(dirichlet_energy_edgesum(x, g))
        x = p @ x
    return out


def _spectrum(g: Graph, zero_tol: float, context: str) -> Spectrum:
    try:
        return eigendecompose(augmented_laplacian(g), zero_tol)
    except NumericError as exc:
        raise NumericError(f"{context}: {exc}") from exc


def run_experiment(model: GraphModel, kind: str, ratios: Sequence[float] = DEFAULT_RATIOS,
                   trials: int = 20, t_mix: int = 20, base_seed: int = 0,
                   new_weight: float = DEFAULT_NEW_WEIGHT, remix: bool = True,
                   zero_tol: float = ZERO_TOL, workers: int | None = None) -> ExperimentResult:
    """Energies of ``x, Px, P^2 x`` before and after perturbing a share of edges.

    Trial ``t`` uses seed ``base_seed + t`` for the graph sample, the edge
    selection and the mixing coefficients ``c_i``. The original side mixes the
    original graph's ``t_mix`` lowest eigenvectors. With ``remix`` (default)
    the perturbed side mixes the perturbed graph's own lowest eigenvectors
    with the same coefficients and propagates with its own operator; without
    it the original ``x`` is reused on the perturbed graph.
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    ratios = [float(r) for r in ratios]
    fixed_graph = isinstance(model, EdgeListFile)
    shared: dict = {}

    def original(trial):
        key = 0 if fixed_graph else trial
        if key not in shared:
            g = generate(model if fixed_graph else model.with_seed(base_seed + trial))
            if t_mix > g.n_nodes:
                raise ParameterError(f"T={t_mix} exceeds the graph's {g.n_nodes} nodes")
            shared[key] = (g, _spectrum(g, zero_tol, f"trial {trial}, original graph"))
        return shared[key]

    def one(job):
        ratio, trial = job
        seed = base_seed + trial
        g, spec = original(trial)
        coeffs = mix_coefficients(t_mix, seed)
        x = low_eig_mix(spec, t_mix, seed, coeffs)
        e = signal_energies(g, x)
        g2 = perturb(g, PerturbationSpec(kind, ratio, new_weight, seed))
        if g2 is g:
            spec2, e2 = spec, e
        else:
            spec2 = _spectrum(g2, zero_tol, f"ratio {ratio}, trial {trial}, perturbed graph")
            x2 = low_eig_mix(spec2, t_mix, seed, coeffs) if remix else x
            e2 = signal_energies(g2, x2)
        rows = [EnergyRow(ratio, trial, k, e[k], e2[k]) for k in range(3)]
        return rows, (spec.eigenvalues, spec2.eigenvalues)

    # originals are built up front so worker threads only read the cache
    for trial in range(trials):
        original(trial)
    jobs = [(ratio, trial) for ratio in ratios for trial in range(trials)]
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, jobs))
    else:
        results = [one(j) for j in jobs]

    rows, eig = [], {}
    for job, (r, ev) in zip(jobs, results):
        rows.extend(r)
        eig[job] = ev
    g0 = shared[0][0]
    meta = {"graph": g0.name, "n_nodes": g0.n_nodes, "n_edges": g0.n_edges, "kind": kind,
            "ratios": ratios, "trials": trials, "t_mix": t_mix, "base_seed": base_seed,
            "new_weight": new_weight, "remix": remix, "model": model.params()}
    return ExperimentResult(rows, eig, meta)


def _quartiles(values: np.ndarray) -> list[float]:
    return [float(q) for q in np.quantile(values, [0.25, 0.5, 0.75])]


def summarize(r: ExperimentResult) -> list[dict]:
    """One row per ``(ratio, k)``: delta statistics and pooled eigenvalue quartiles."""
    if not r.rows:
        raise ParameterError("cannot summarize an empty experiment")
    out = []
    for ratio in r.ratios:
        rows = r.rows_for(ratio)
        orig = np.concatenate([ev[0] for (rt, _), ev in sorted(r.eigenvalues.items()) if rt == ratio])
        pert = np.concatenate([ev[1] for (rt, _), ev in sorted(r.eigenvalues.items()) if rt == ratio])
        q_orig, q_pert = _quartiles(orig), _quartiles(pert)
        for k in sorted({row.k for row in rows}):
            delta = np.array([row.e_pert - row.e_orig for row in rows if row.k == k])
            out.append({
                "ratio": ratio, "k": k, "n": len(delta),
                "median_delta": float(np.median(delta)),
                "mean_delta": float(np.mean(delta)),
                "fraction_increased": float(np.mean(delta > 0)),
                "eig_q1_orig": q_orig[0], "eig_median_orig": q_orig[1], "eig_q3_orig": q_orig[2],
                "eig_q1_pert": q_pert[0], "eig_median_pert": q_pert[1], "eig_q3_pert": q_pert[2],
            })
    return out


SUMMARY_COLUMNS = ["ratio", "k", "n", "median_delta", "mean_delta", "fraction_increased",
                   "eig_q1_orig", "eig_median_orig", "eig_q3_orig",
                   "eig_q1_pert", "eig_median_pert", "eig_q3_pert"]


def write_summary_csv(summary: list[dict], path) -> None:
    with Path(path).open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(SUMMARY_COLUMNS)
        for row in summary:
            out.writerow([repr(row[c]) if isinstance(row[c], float) else row[c]
                          for c in SUMMARY_COLUMNS])
