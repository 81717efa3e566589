"""Simulated GCN forward pass with per-layer Dirichlet energy tracking.

A layer computes ``sigma(... sigma(sigma(P X) W_1) W_2 ... W_H)``: one
activation after propagation and one after every weight matrix.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
from scipy.special import expit

from .energy import as_signal, dirichlet_energy_edgesum, rayleigh_quotient
from .errors import DegenerateSpectrumError, ParameterError, ShapeError, UndefinedQuotientError
from .graph import Graph, OperatorKind, OperatorMatrix, augmented_laplacian, propagation_operator
from .spectral import ZERO_TOL, ContractionFactors, eigenvalues, factors_from_eigenvalues, spectral_norm_squared

OPERATOR_ORDER = "sigma(P X), then sigma(. W_h) for h = 1..H"

_KINDS = ("identity", "relu", "leaky_relu", "tanh", "sigmoid")
_ALIASES = {"leakyrelu": "leaky_relu", "leaky": "leaky_relu", "lrelu": "leaky_relu",
            "linear": "identity", "none": "identity"}


@dataclass(frozen=True)
class Activation:
    kind: str = "relu"
    slope: float = 0.01

    def __post_init__(self):
        kind = _ALIASES.get(self.kind.lower(), self.kind.lower())
        if kind not in _KINDS:
            raise ParameterError(f"unknown activation {self.kind!r}; choose from {', '.join(_KINDS)}")
        if kind == "leaky_relu" and not 0.0 < self.slope <= 1.0:
            raise ParameterError(f"LeakyReLU slope must lie in (0, 1], got {self.slope}")
        object.__setattr__(self, "kind", kind)

    @classmethod
    def parse(cls, text: str) -> "Activation":
        """``relu``, ``tanh``, ``leaky_relu`` or ``leaky_relu:0.2``."""
        name, _, slope = text.partition(":")
        return cls(name, float(slope)) if slope else cls(name)

    @property
    def positively_homogeneous(self) -> bool:
        """True when ``sigma(c x) = c sigma(x)`` for ``c >= 0``, which the energy bound needs."""
        return self.kind in ("identity", "relu", "leaky_relu")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "identity":
            return x
        if self.kind == "relu":
            return np.maximum(x, 0.0)
        if self.kind == "leaky_relu":
            return np.where(x >= 0.0, x, self.slope * x)
        if self.kind == "tanh":
            return np.tanh(x)
        return expit(x)

    def __str__(self):
        return f"leaky_relu:{self.slope!r}" if self.kind == "leaky_relu" else self.kind


@dataclass(frozen=True, eq=False)
class LayerSpec:
    """Weights ``W_1 .. W_H`` and their cached squared spectral norms."""

    weights: tuple
    activation: Activation = Activation()
    s_lh: tuple = field(init=False)
    s_l: float = field(init=False)

    def __post_init__(self):
        ws = []
        for w in self.weights:
            w = np.array(w, dtype=float, ndmin=2)
            w.setflags(write=False)
            ws.append(w)
        if not ws:
            raise ParameterError("a layer needs at least one weight matrix")
        for a, b in zip(ws, ws[1:]):
            if a.shape[1] != b.shape[0]:
                raise ShapeError(f"weight shapes do not chain: {a.shape} then {b.shape}")
        s = tuple(spectral_norm_squared(w) for w in ws)
        object.__setattr__(self, "weights", tuple(ws))
        object.__setattr__(self, "s_lh", s)
        object.__setattr__(self, "s_l", math.prod(s))

    @property
    def c_in(self) -> int:
        return self.weights[0].shape[0]

    @property
    def c_out(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def depth(self) -> int:
        return len(self.weights)


@dataclass(frozen=True, eq=False)
class NetworkSpec:
    layers: tuple
    input_dim: int

    def __post_init__(self):
        layers = tuple(self.layers)
        dim = self.input_dim
        for i, layer in enumerate(layers):
            if layer.c_in != dim:
                raise ShapeError(f"layer {i + 1} expects {layer.c_in} channels, receives {dim}")
            dim = layer.c_out
        object.__setattr__(self, "layers", layers)

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def s_max(self) -> float:
        return max((layer.s_l for layer in self.layers), default=0.0)


def random_layer(c_in: int, c_out: int, h: int = 1, target_s: float = 1.0,
                 activation: Activation | str = "relu", seed=0,
                 hidden: int | None = None) -> LayerSpec:
    """Gaussian weights rescaled so each ``s_lh = target_s ** (1/h)``.

    Hidden widths default to ``c_out``.
    """
    if not target_s > 0:
        raise ParameterError(f"target_s must be positive, got {target_s}")
    if h < 1:
        raise ParameterError("depth h must be >= 1")
    if isinstance(activation, str):
        activation = Activation.parse(activation)
    hidden = c_out if hidden is None else hidden
    dims = [c_in] + [hidden] * (h - 1) + [c_out]
    rng = np.random.default_rng(seed)
    per = target_s ** (1.0 / h)
    ws = []
    for a, b in zip(dims, dims[1:]):
        w = rng.standard_normal((a, b))
        ws.append(w * math.sqrt(per / spectral_norm_squared(w)))
    return LayerSpec(tuple(ws), activation)


def identity_layer(c: int, activation: Activation | str = "relu") -> LayerSpec:
    if isinstance(activation, str):
        activation = Activation.parse(activation)
    return LayerSpec((np.eye(c),), activation)


def random_network(n_layers: int, c: int, target_s: float = 1.0, activation="relu",
                   depth: int = 1, seed=0) -> NetworkSpec:
    """Constant-width network; layer ``l`` draws its weights from ``seed + l``."""
    layers = [random_layer(c, c, depth, target_s, activation, seed + l) for l in range(n_layers)]
    return NetworkSpec(tuple(layers), c)


def _propagation(p) -> np.ndarray:
    if isinstance(p, OperatorMatrix):
        if p.kind is not OperatorKind.PROPAGATION:
            raise ParameterError(f"layer needs the propagation operator, got {p.kind.value}")
        return p.matrix
    return np.asarray(p, dtype=float)


def layer_steps(layer: LayerSpec, p, x) -> Iterator[tuple[str, np.ndarray]]:
    """Yield every intermediate ``(label, value)`` of one layer in order."""
    pm = _propagation(p)
    x = as_signal(x, pm.shape[0])
    if x.shape[1] != layer.c_in:
        raise ShapeError(f"signal has {x.shape[1]} channels, layer expects {layer.c_in}")
    y = pm @ x
    yield "P", y
    y = layer.activation(y)
    yield "sigma", y
    for h, w in enumerate(layer.weights, start=1):
        y = y @ w
        yield f"W{h}", y
        y = layer.activation(y)
        yield "sigma", y


def apply_layer(layer: LayerSpec, p, x) -> np.ndarray:
    for _, y in layer_steps(layer, p, x):
        pass
    return y


@dataclass(frozen=True)
class TraceRecord:
    layer: int
    energy: float
    rayleigh: float
    bound: float


@dataclass
class EnergyTrace:
    records: list
    factor_used: float
    metadata: dict = field(default_factory=dict)

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])

    @property
    def bounds(self) -> np.ndarray:
        return np.array([r.bound for r in self.records])

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["layer", "energy", "rayleigh", "bound", "factor_used"])
            for r in self.records:
                out.writerow([r.layer, repr(r.energy), repr(r.rayleigh), repr(r.bound),
                              repr(self.factor_used)])


def graph_factors(g: Graph, zero_tol: float = ZERO_TOL) -> ContractionFactors | None:
    """Contraction factors of ``g``, or None when the graph has no edges."""
    try:
        return factors_from_eigenvalues(eigenvalues(augmented_laplacian(g)), zero_tol)
    except DegenerateSpectrumError:
        return None


def _rayleigh(x, lap) -> float:
    try:
        return rayleigh_quotient(x, lap)
    except UndefinedQuotientError:
        return float("nan")


def forward_trace(net: NetworkSpec, g: Graph, x0, factors: ContractionFactors | None = None,
                  seed=None, zero_tol: float = ZERO_TOL) -> EnergyTrace:
    """Run ``net`` on ``g`` from ``x0`` and record energy and the running bound.

    The bound after layer ``l`` is ``E(X0) * prod_{k<=l} s_k * safe_factor**l``.
    On an edgeless graph every energy is zero and the factor is reported as 0.
    """
    x = as_signal(x0, g.n_nodes)
    if x.shape[1] != net.input_dim:
        raise ShapeError(f"x0 has {x.shape[1]} channels, network expects {net.input_dim}")
    if factors is None:
        factors = graph_factors(g, zero_tol)
    factor = factors.safe_factor if factors is not None else 0.0
    lap, p = augmented_laplacian(g), propagation_operator(g)

    e0 = dirichlet_energy_edgesum(x, g)
    records = [TraceRecord(0, e0, _rayleigh(x, lap), e0)]
    bound = e0
    for l, layer in enumerate(net.layers, start=1):
        x = apply_layer(layer, p, x)
        bound *= layer.s_l * factor
        records.append(TraceRecord(l, dirichlet_energy_edgesum(x, g), _rayleigh(x, lap), bound))

    meta = {
        "graph": g.name,
        "seed": seed,
        "operator_order": OPERATOR_ORDER,
        "factor": "safe",
        "safe_factor": factor,
        "paper_factor": factors.paper_factor if factors is not None else 0.0,
        "lambda": factors.lambda_smallest_nonzero if factors is not None else float("nan"),
        "activations": sorted({str(layer.activation) for layer in net.layers}),
        "bound_asserted": all(layer.activation.positively_homogeneous for layer in net.layers),
    }
    return EnergyTrace(records, factor, meta)


def null_space_signal(g: Graph, w: Sequence[float]) -> np.ndarray:
    """Rows ``sqrt(1 + d_i) * w``; zero Dirichlet energy on every graph."""
    return np.sqrt(1.0 + g.degrees)[:, None] * np.asarray(w, dtype=float)[None, :]
