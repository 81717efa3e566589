"""JSON run configuration for ``oversmooth experiment``."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .errors import ParameterError
from .graph import (SYNTHETIC_MODELS, BarabasiAlbert, EdgeListFile, ErdosRenyi, GraphModel,
                    RandomGeometric, RandomRegular, StochasticBlock, WattsStrogatz)
from .perturb import DEFAULT_NEW_WEIGHT, DEFAULT_RATIOS

_prob = {"type": "number", "minimum": 0, "maximum": 1}

GRAPH_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["model"],
    "properties": {
        "model": {"enum": ["er", "rgg", "sbm2", "sbm4", "sbm", "ba", "ws", "regular", "file"]},
        "n": {"type": "integer", "minimum": 1},
        "p": _prob,
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "dim": {"type": "integer", "minimum": 1},
        "m": {"type": "integer", "minimum": 1},
        "k": {"type": "integer", "minimum": 2},
        "d": {"type": "integer", "minimum": 0},
        "sizes": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "p_in": {"oneOf": [_prob, {"type": "array", "items": _prob, "minItems": 1}]},
        "p_out": _prob,
        "path": {"type": "string"},
        "expected_nodes": {"type": "integer", "minimum": 1},
    },
    "allOf": [
        {"if": {"properties": {"model": {"const": "er"}}}, "then": {"required": ["n", "p"]}},
        {"if": {"properties": {"model": {"const": "rgg"}}}, "then": {"required": ["n", "radius"]}},
        {"if": {"properties": {"model": {"const": "ba"}}}, "then": {"required": ["n", "m"]}},
        {"if": {"properties": {"model": {"const": "ws"}}}, "then": {"required": ["n"]}},
        {"if": {"properties": {"model": {"const": "regular"}}}, "then": {"required": ["n", "d"]}},
        {"if": {"properties": {"model": {"const": "sbm"}}},
         "then": {"required": ["sizes", "p_in", "p_out"]}},
        {"if": {"properties": {"model": {"const": "file"}}}, "then": {"required": ["path"]}},
    ],
}

NETWORK_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "layers": {"type": "integer", "minimum": 0},
        "target_s": {"type": "number", "exclusiveMinimum": 0},
        "activation": {"type": "string"},
        "c": {"type": "integer", "minimum": 1},
        "depth": {"type": "integer", "minimum": 1},
    },
}

RUN_CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "oversmooth run configuration",
    "type": "object",
    "additionalProperties": False,
    "required": ["graph", "perturbation"],
    "properties": {
        "graph": GRAPH_SCHEMA,
        "perturbation": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["drop", "reweight"]},
                "new_weight": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "ratios": {"type": "array", "items": _prob, "minItems": 1},
        "trials": {"type": "integer", "minimum": 1},
        "t_mix": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "out_dir": {"type": "string"},
        "remix": {"type": "boolean"},
        "workers": {"type": "integer", "minimum": 1},
        "network": NETWORK_SCHEMA,
    },
}


def model_from_params(params: dict, seed: int = 0, base_dir: Path | None = None) -> GraphModel:
    """Build a :class:`GraphModel` from the ``graph`` section of a config."""
    p = dict(params)
    name = p.pop("model")
    if name in ("sbm2", "sbm4"):
        preset = SYNTHETIC_MODELS[name]
        return StochasticBlock(tuple(p.get("sizes", preset.sizes)), p.get("p_in", preset.p_in),
                               p.get("p_out", preset.p_out), seed=seed)
    if name == "sbm":
        return StochasticBlock(tuple(p["sizes"]), p["p_in"], p["p_out"], seed=seed)
    if name == "file":
        path = Path(p["path"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return EdgeListFile(str(path), p.get("expected_nodes"), seed=seed)
    builders = {
        "er": lambda: ErdosRenyi(p["n"], p["p"], seed=seed),
        "rgg": lambda: RandomGeometric(p["n"], p["radius"], p.get("dim", 2), seed=seed),
        "ba": lambda: BarabasiAlbert(p["n"], p["m"], seed=seed),
        "ws": lambda: WattsStrogatz(p["n"], p.get("k", 4), p.get("p", 0.1), seed=seed),
        "regular": lambda: RandomRegular(p["n"], p["d"], seed=seed),
    }
    try:
        return builders[name]()
    except KeyError as exc:
        raise ParameterError(f"model {name!r} is missing parameter {exc}") from None


@dataclass
class RunConfig:
    graph: dict
    kind: str
    new_weight: float = DEFAULT_NEW_WEIGHT
    ratios: list = field(default_factory=lambda: list(DEFAULT_RATIOS))
    trials: int = 20
    t_mix: int = 20
    seed: int = 0
    out_dir: str = "out"
    remix: bool = True
    workers: int | None = None
    network: dict | None = None
    base_dir: Path | None = None

    @classmethod
    def from_dict(cls, doc: dict, base_dir: Path | None = None) -> "RunConfig":
        try:
            jsonschema.validate(doc, RUN_CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(x) for x in exc.absolute_path) or "<root>"
            raise ParameterError(f"invalid run config at {where}: {exc.message}") from None
        pert = doc["perturbation"]
        return cls(
            graph=dict(doc["graph"]),
            kind=pert["kind"],
            new_weight=float(pert.get("new_weight", DEFAULT_NEW_WEIGHT)),
            ratios=[float(r) for r in doc.get("ratios", DEFAULT_RATIOS)],
            trials=doc.get("trials", 20),
            t_mix=doc.get("t_mix", 20),
            seed=doc.get("seed", 0),
            out_dir=doc.get("out_dir", "out"),
            remix=doc.get("remix", True),
            workers=doc.get("workers"),
            network=doc.get("network"),
            base_dir=base_dir,
        )

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ParameterError(f"{path}: not valid JSON: {exc}") from None
        return cls.from_dict(doc, base_dir=path.parent)

    def model(self) -> GraphModel:
        return model_from_params(self.graph, self.seed, self.base_dir)

    def to_dict(self) -> dict:
        doc = {
            "graph": self.graph,
            "perturbation": {"kind": self.kind, "new_weight": self.new_weight},
            "ratios": self.ratios,
            "trials": self.trials,
            "t_mix": self.t_mix,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "remix": self.remix,
        }
        if self.workers is not None:
            doc["workers"] = self.workers
        if self.network is not None:
            doc["network"] = self.network
        return doc
