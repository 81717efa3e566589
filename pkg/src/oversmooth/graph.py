"""Weighted undirected graphs, random generators, and the augmented operators.

Edges are stored once per unordered pair with ``i < j``. Self-loops are never
stored; the augmentation ``A + I`` is applied analytically when the operators
are built.
"""

from __future__ import annotations

import dataclasses
import enum
import math
import re
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import ClassVar, Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as _cc
from scipy.spatial.distance import pdist

from .errors import ParameterError, ParseError, ValidationError


class DegenerateGraphWarning(UserWarning):
    pass


class EdgeListWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected graph with positive edge weights.

    Parameters
    ----------
    n_nodes : int
        Number of nodes ``N``; nodes are ``0 .. N-1``.
    src, dst : ndarray of int
        Edge endpoints with ``src < dst`` elementwise.
    weight : ndarray of float
        Strictly positive edge weights.
    name : str
        Free-form identifier carried into reports.
    """

    n_nodes: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    name: str = ""

    def __post_init__(self):
        src = np.asarray(self.src, dtype=np.int64).reshape(-1)
        dst = np.asarray(self.dst, dtype=np.int64).reshape(-1)
        w = np.asarray(self.weight, dtype=np.float64).reshape(-1)
        n = int(self.n_nodes)
        if n < 1:
            raise ValidationError(f"graph needs at least one node, got {n}")
        if not (len(src) == len(dst) == len(w)):
            raise ValidationError("src, dst and weight must have equal length")
        if len(src):
            if src.min() < 0 or dst.max() >= n:
                raise ValidationError("node index out of range")
            if np.any(src >= dst):
                raise ValidationError("edges must satisfy i < j (no self-loops)")
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise ValidationError("edge weights must be finite and positive")
            keys = src * n + dst
            if len(np.unique(keys)) != len(keys):
                raise ValidationError("duplicate unordered edge")
        for a in (src, dst, w):
            a.setflags(write=False)
        object.__setattr__(self, "n_nodes", n)
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)
        object.__setattr__(self, "weight", w)

    @classmethod
    def from_edges(cls, n_nodes: int, edges: Iterable[Sequence], name: str = "") -> "Graph":
        """Build from ``(i, j)`` or ``(i, j, w)`` tuples in any orientation."""
        src, dst, w = [], [], []
        for e in edges:
            i, j = int(e[0]), int(e[1])
            src.append(min(i, j))
            dst.append(max(i, j))
            w.append(float(e[2]) if len(e) > 2 else 1.0)
        if any(i == j for i, j in zip(src, dst)):
            raise ValidationError("self-loops are not stored")
        return cls(n_nodes, np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64),
                   np.array(w, dtype=np.float64), name)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(i), int(j), float(w)) for i, j, w in zip(self.src, self.dst, self.weight)]

    @cached_property
    def degrees(self) -> np.ndarray:
        d = np.zeros(self.n_nodes)
        np.add.at(d, self.src, self.weight)
        np.add.at(d, self.dst, self.weight)
        d.setflags(write=False)
        return d

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n_nodes, self.n_nodes))
        a[self.src, self.dst] = self.weight
        a[self.dst, self.src] = self.weight
        return a

    def with_weights(self, weight: np.ndarray) -> "Graph":
        return Graph(self.n_nodes, self.src, self.dst, weight, self.name)

    def subgraph_edges(self, keep: np.ndarray) -> "Graph":
        """Graph on the same nodes keeping only edges where ``keep`` is true."""
        keep = np.asarray(keep, dtype=bool)
        return Graph(self.n_nodes, self.src[keep], self.dst[keep], self.weight[keep], self.name)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.n_nodes == other.n_nodes
                and np.array_equal(self.src, other.src)
                and np.array_equal(self.dst, other.dst)
                and np.array_equal(self.weight, other.weight))

    __hash__ = None

    def __repr__(self):
        return f"Graph(name={self.name!r}, n_nodes={self.n_nodes}, n_edges={self.n_edges})"


def _from_pairs(n, i, j, name, weight=None) -> Graph:
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    lo, hi = np.minimum(i, j), np.maximum(i, j)
    order = np.lexsort((hi, lo))
    lo, hi = lo[order], hi[order]
    w = np.ones(len(lo)) if weight is None else np.asarray(weight, dtype=float)[order]
    return Graph(n, lo, hi, w, name)


# ---------------------------------------------------------------------------
# Deterministic shapes used by the verification suites
# ---------------------------------------------------------------------------

def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise ParameterError("cycle needs n >= 3")
    u = np.arange(n)
    return _from_pairs(n, u, (u + 1) % n, f"cycle{n}")


def path_graph(n: int) -> Graph:
    u = np.arange(n - 1)
    return _from_pairs(n, u, u + 1, f"path{n}")


def star_graph(leaves: int) -> Graph:
    """Hub 0 joined to ``leaves`` leaf nodes."""
    return _from_pairs(leaves + 1, np.zeros(leaves, dtype=int), np.arange(1, leaves + 1),
                       f"star{leaves}")


def complete_graph(n: int) -> Graph:
    i, j = np.triu_indices(n, 1)
    return _from_pairs(n, i, j, f"complete{n}")


def complete_bipartite(a: int, b: int) -> Graph:
    i, j = np.meshgrid(np.arange(a), np.arange(a, a + b), indexing="ij")
    return _from_pairs(a + b, i.ravel(), j.ravel(), f"bipartite{a}x{b}")


def disjoint_union(*graphs: Graph) -> Graph:
    offset, src, dst, w = 0, [], [], []
    for g in graphs:
        src.append(g.src + offset)
        dst.append(g.dst + offset)
        w.append(g.weight)
        offset += g.n_nodes
    return Graph(offset, np.concatenate(src), np.concatenate(dst), np.concatenate(w),
                 "+".join(g.name for g in graphs))


def permute_nodes(g: Graph, perm: Sequence[int]) -> Graph:
    """Relabel node ``i`` as ``perm[i]``."""
    perm = np.asarray(perm, dtype=np.int64)
    if sorted(perm.tolist()) != list(range(g.n_nodes)):
        raise ParameterError("perm must be a permutation of range(n_nodes)")
    return _from_pairs(g.n_nodes, perm[g.src], perm[g.dst], g.name, g.weight)


# ---------------------------------------------------------------------------
# Random graph models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GraphModel:
    """Base for random graph models; ``seed`` fixes the sample."""

    tag: ClassVar[str] = "model"
    seed: int = field(default=0, kw_only=True)

    def validate(self) -> None:
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2**64:
            raise ParameterError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")

    def sample(self, rng: np.random.Generator) -> Graph:
        raise NotImplementedError

    def with_seed(self, seed: int) -> "GraphModel":
        return dataclasses.replace(self, seed=seed)

    def params(self) -> dict:
        d = {"model": self.tag}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            d[f.name] = list(v) if isinstance(v, tuple) else v
        return d


def _check_prob(name, p):
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"{name} must lie in [0, 1], got {p}")


def _check_n(n, minimum=1):
    if int(n) != n or n < minimum:
        raise ParameterError(f"n must be an integer >= {minimum}, got {n}")


@dataclass(frozen=True)
class ErdosRenyi(GraphModel):
    tag: ClassVar[str] = "er"
    n: int
    p: float

    def validate(self):
        super().validate()
        _check_n(self.n)
        _check_prob("p", self.p)

    def sample(self, rng):
        i, j = np.triu_indices(self.n, 1)
        keep = rng.random(len(i)) < self.p
        return Graph(self.n, i[keep], j[keep], np.ones(int(keep.sum())), f"er{self.n}")


@dataclass(frozen=True)
class RandomGeometric(GraphModel):
    """Points uniform in the unit square (``dim=2``); edges at distance <= radius."""

    tag: ClassVar[str] = "rgg"
    n: int
    radius: float
    dim: int = 2

    def validate(self):
        super().validate()
        _check_n(self.n)
        if not self.radius > 0:
            raise ParameterError(f"radius must be positive, got {self.radius}")
        if self.dim < 1:
            raise ParameterError("dim must be >= 1")

    def sample(self, rng):
        pos = rng.random((self.n, self.dim))
        i, j = np.triu_indices(self.n, 1)
        keep = pdist(pos) <= self.radius
        return Graph(self.n, i[keep], j[keep], np.ones(int(keep.sum())), f"rgg{self.n}")


@dataclass(frozen=True)
class StochasticBlock(GraphModel):
    """Block model; ``p_in`` is one probability or one per block."""

    tag: ClassVar[str] = "sbm"
    sizes: tuple[int, ...]
    p_in: float | tuple[float, ...]
    p_out: float

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        if not isinstance(self.p_in, (int, float)):
            object.__setattr__(self, "p_in", tuple(float(p) for p in self.p_in))

    def validate(self):
        super().validate()
        if not self.sizes or min(self.sizes) < 1:
            raise ParameterError("block sizes must be positive")
        p_in = self.block_p_in()
        if len(p_in) != len(self.sizes):
            raise ParameterError("need one p_in per block")
        for p in p_in:
            _check_prob("p_in", p)
        _check_prob("p_out", self.p_out)

    def block_p_in(self) -> tuple[float, ...]:
        if isinstance(self.p_in, tuple):
            return self.p_in
        return (float(self.p_in),) * len(self.sizes)

    def probability_matrix(self) -> np.ndarray:
        k = len(self.sizes)
        pm = np.full((k, k), float(self.p_out))
        np.fill_diagonal(pm, self.block_p_in())
        return pm

    def labels(self) -> np.ndarray:
        return np.repeat(np.arange(len(self.sizes)), self.sizes)

    def sample(self, rng):
        n = sum(self.sizes)
        b = self.labels()
        i, j = np.triu_indices(n, 1)
        keep = rng.random(len(i)) < self.probability_matrix()[b[i], b[j]]
        return Graph(n, i[keep], j[keep], np.ones(int(keep.sum())), f"sbm{len(self.sizes)}")


@dataclass(frozen=True)
class BarabasiAlbert(GraphModel):
    """Preferential attachment from ``m`` seed nodes; ``m * (n - m)`` edges."""

    tag: ClassVar[str] = "ba"
    n: int
    m: int

    def validate(self):
        super().validate()
        _check_n(self.n, 2)
        if not 1 <= self.m < self.n:
            raise ParameterError(f"need 1 <= m < n, got m={self.m}, n={self.n}")

    def sample(self, rng):
        src, dst = [], []
        targets = list(range(self.m))
        repeated: list[int] = []
        for new in range(self.m, self.n):
            src.extend([new] * self.m)
            dst.extend(targets)
            repeated.extend(targets)
            repeated.extend([new] * self.m)
            chosen: list[int] = []
            while len(chosen) < self.m:
                t = repeated[int(rng.integers(len(repeated)))]
                if t not in chosen:
                    chosen.append(t)
            targets = chosen
        return _from_pairs(self.n, src, dst, f"ba{self.n}")


@dataclass(frozen=True)
class WattsStrogatz(GraphModel):
    tag: ClassVar[str] = "ws"
    n: int
    k: int = 4
    p: float = 0.1

    def validate(self):
        super().validate()
        _check_n(self.n, 3)
        if not (0 < self.k < self.n and self.k % 2 == 0):
            raise ParameterError(f"k must be even with 0 < k < n, got {self.k}")
        _check_prob("p", self.p)

    def sample(self, rng):
        n = self.n
        nbrs = [set() for _ in range(n)]
        for j in range(1, self.k // 2 + 1):
            for u in range(n):
                v = (u + j) % n
                nbrs[u].add(v)
                nbrs[v].add(u)
        for j in range(1, self.k // 2 + 1):
            for u in range(n):
                v = (u + j) % n
                if rng.random() >= self.p or v not in nbrs[u]:
                    continue
                if len(nbrs[u]) >= n - 1:
                    continue
                w = int(rng.integers(n))
                while w == u or w in nbrs[u]:
                    w = int(rng.integers(n))
                nbrs[u].discard(v)
                nbrs[v].discard(u)
                nbrs[u].add(w)
                nbrs[w].add(u)
        pairs = [(u, v) for u in range(n) for v in nbrs[u] if u < v]
        i, j = zip(*pairs) if pairs else ((), ())
        return _from_pairs(n, i, j, f"ws{n}")


@dataclass(frozen=True)
class RandomRegular(GraphModel):
    """Uniform-ish simple ``d``-regular graph via rejection on stub pairings."""

    tag: ClassVar[str] = "regular"
    n: int
    d: int
    max_tries: ClassVar[int] = 10000

    def validate(self):
        super().validate()
        _check_n(self.n, 2)
        if not 0 <= self.d < self.n or (self.n * self.d) % 2:
            raise ParameterError("need 0 <= d < n and n*d even")

    def sample(self, rng):
        stubs = np.repeat(np.arange(self.n), self.d)
        for _ in range(self.max_tries):
            rng.shuffle(stubs)
            i, j = stubs[0::2], stubs[1::2]
            lo, hi = np.minimum(i, j), np.maximum(i, j)
            if np.any(lo == hi) or len(np.unique(lo * self.n + hi)) != len(lo):
                continue
            return _from_pairs(self.n, lo, hi, f"regular{self.d}n{self.n}")
        raise ParameterError(f"no simple {self.d}-regular pairing found in {self.max_tries} tries")


@dataclass(frozen=True)
class EdgeListFile(GraphModel):
    tag: ClassVar[str] = "file"
    path: str
    expected_nodes: int | None = None

    def validate(self):
        super().validate()
        if not Path(self.path).is_file():
            raise ParameterError(f"edge-list file not found: {self.path}")

    def sample(self, rng):
        return load_edge_list(self.path, self.expected_nodes)


def generate(model: GraphModel) -> Graph:
    """Draw a graph from ``model``; identical output for identical seeds."""
    model.validate()
    g = model.sample(np.random.default_rng(int(model.seed)))
    if g.n_edges == 0:
        warnings.warn(f"{g.name or model.tag}: generated graph has no edges",
                      DegenerateGraphWarning, stacklevel=2)
    return g


# Parameters listed for the synthetic experiment graphs.
SYNTHETIC_MODELS: dict[str, GraphModel] = {
    "er": ErdosRenyi(200, 0.05),
    "rgg": RandomGeometric(200, 0.2),
    "sbm2": StochasticBlock((100, 100), 0.1, 0.01),
    "sbm4": StochasticBlock((50, 50, 50, 50), (0.1, 0.2, 0.3, 0.4), 0.08),
    "ba": BarabasiAlbert(200, 4),
    "ws": WattsStrogatz(200, 4, 0.1),
}


# ---------------------------------------------------------------------------
# Edge-list files
# ---------------------------------------------------------------------------

_NODES_HEADER = re.compile(r"#\s*nodes\s*[:=]?\s*(\d+)\s*$", re.IGNORECASE)


def load_edge_list(path, expected_nodes: int | None = None) -> Graph:
    """Read a whitespace-separated ``i j [w]`` edge list.

    A ``# nodes N`` comment declares the node count so trailing isolated
    nodes survive a round trip; every other ``#`` line is ignored.
    Reciprocal or repeated pairs keep the first weight; self-loops are
    dropped. Both emit an :class:`EdgeListWarning`.
    """
    path = Path(path)
    declared = None
    seen: dict[tuple[int, int], float] = {}
    n_dupes = n_loops = 0
    max_idx = -1
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                m = _NODES_HEADER.match(line)
                if m:
                    declared = int(m.group(1))
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise ParseError(f"expected 'i j [w]', got {line!r}", lineno)
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(f"node indices must be integers, got {line!r}", lineno) from None
            if i < 0 or j < 0:
                raise ParseError("node indices must be non-negative", lineno)
            w = 1.0
            if len(parts) == 3:
                try:
                    w = float(parts[2])
                except ValueError:
                    raise ParseError(f"bad weight {parts[2]!r}", lineno) from None
                if not (math.isfinite(w) and w > 0):
                    raise ParseError(f"weight must be positive, got {parts[2]}", lineno)
            max_idx = max(max_idx, i, j)
            if i == j:
                n_loops += 1
                continue
            key = (min(i, j), max(i, j))
            if key in seen:
                n_dupes += 1
                continue
            seen[key] = w
    if n_loops:
        warnings.warn(f"{path.name}: dropped {n_loops} self-loop line(s)", EdgeListWarning,
                      stacklevel=2)
    if n_dupes:
        warnings.warn(f"{path.name}: merged {n_dupes} duplicate edge(s), kept first weight",
                      EdgeListWarning, stacklevel=2)

    inferred = max_idx + 1
    n = expected_nodes if expected_nodes is not None else declared
    if expected_nodes is not None and declared is not None and declared != expected_nodes:
        raise ValidationError(f"file declares {declared} nodes, expected {expected_nodes}")
    if n is None:
        n = inferred
    if inferred > n:
        raise ValidationError(f"node index {max_idx} exceeds node count {n}")
    if n < 1:
        raise ValidationError(f"{path}: empty edge list and no node count given")
    if not seen:
        return Graph(n, [], [], [], path.stem)
    keys = sorted(seen)
    return Graph(n, [k[0] for k in keys], [k[1] for k in keys], [seen[k] for k in keys], path.stem)


def write_edge_list(g: Graph, path) -> None:
    with Path(path).open("w") as fh:
        fh.write(f"# nodes {g.n_nodes}\n")
        for i, j, w in zip(g.src, g.dst, g.weight):
            fh.write(f"{i} {j} {float(w)!r}\n")


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------

class OperatorKind(enum.Enum):
    AUGMENTED_LAPLACIAN = "augmented_laplacian"
    PROPAGATION = "propagation"


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    matrix: np.ndarray
    kind: OperatorKind

    def __post_init__(self):
        self.matrix.setflags(write=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def _propagation_matrix(g: Graph) -> np.ndarray:
    deg = 1.0 + g.degrees
    p = np.zeros((g.n_nodes, g.n_nodes))
    # w / sqrt((1+d_i)(1+d_j)); the product is commutative so P is exactly symmetric
    scale = np.sqrt(deg[g.src] * deg[g.dst])
    p[g.src, g.dst] = g.weight / scale
    p[g.dst, g.src] = g.weight / scale
    p[np.diag_indices(g.n_nodes)] = 1.0 / deg
    return p


def augmented_laplacian(g: Graph) -> OperatorMatrix:
    """``I - D~^{-1/2} (A + I) D~^{-1/2}`` as a dense matrix."""
    lap = -_propagation_matrix(g)
    lap[np.diag_indices(g.n_nodes)] += 1.0
    return OperatorMatrix(lap, OperatorKind.AUGMENTED_LAPLACIAN)


def propagation_operator(g: Graph) -> OperatorMatrix:
    """``D~^{-1/2} (A + I) D~^{-1/2}``, the GCN smoothing step."""
    return OperatorMatrix(_propagation_matrix(g), OperatorKind.PROPAGATION)


def is_regular(g: Graph, tol: float = 1e-12) -> bool:
    deg = 1.0 + g.degrees
    return bool(np.ptp(deg) <= tol * max(1.0, float(deg.max())))


def connected_components(g: Graph) -> list[frozenset[int]]:
    """Components ordered by their smallest node."""
    adj = coo_matrix((np.ones(g.n_edges), (g.src, g.dst)), shape=(g.n_nodes, g.n_nodes))
    k, labels = _cc(adj, directed=False)
    comps = [frozenset(np.flatnonzero(labels == c).tolist()) for c in range(k)]
    return sorted(comps, key=min)


def null_vector(g: Graph) -> np.ndarray:
    """``sqrt(1 + d_i)``, which spans the null space of each component."""
    return np.sqrt(1.0 + g.degrees)
