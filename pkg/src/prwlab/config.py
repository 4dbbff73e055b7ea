"""Experiment configuration: a JSON document validated against a fixed schema
before anything is simulated."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import jsonschema

from . import laws
from .laws import JointLaw
from .verdicts import VerdictConfig

EXPERIMENTS = ("classify", "moments", "verify", "shotnoise", "renewal", "scenario")
FAMILIES = ("point", "two_point", "discrete", "uniform", "exponential", "normal", "pareto",
            "lognormal", "neg_log_beta", "mixture")

_NUM = {"type": "number"}
_NUMS = {"oneOf": [_NUM, {"type": "array", "items": _NUM, "minItems": 1}]}

MARGINAL_SCHEMA = {
    "type": "object",
    "required": ["family"],
    "additionalProperties": False,
    "properties": {
        "family": {"enum": list(FAMILIES)},
        "params": {"type": "object"},
    },
}

LAW_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "required": ["preset"],
            "additionalProperties": False,
            "properties": {"preset": {"type": "string"}},
        },
        {
            "type": "object",
            "required": ["xi"],
            "additionalProperties": False,
            "properties": {
                "xi": MARGINAL_SCHEMA,
                "eta": MARGINAL_SCHEMA,
                "coupling": {
                    "type": "object",
                    "required": ["type"],
                    "additionalProperties": False,
                    "properties": {
                        "type": {"enum": ["independent", "functional", "bernoulli_sieve"]},
                        "map": {"enum": ["identity", "negate", "affine"]},
                        "slope": _NUM,
                        "intercept": _NUM,
                        "a": {"type": "number", "exclusiveMinimum": 0},
                        "b": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
            },
        },
    ]
}

RESPONSE_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["IndicatorOfEta", "DeterministicF", "MultiplicativeEtaF"]},
        "f": {"enum": ["step", "ramp", "zero", "exp"]},
        "rate": {"type": "number", "exclusiveMinimum": 0},
    },
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "law": LAW_SCHEMA,
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "theorem": {"type": "string"},
                "scenario": {"enum": ["bernoulli-sieve", "gig-infty-queue"]},
                "functional": {"enum": ["tau", "tau_star", "N", "rho", "nu", "sigma"]},
                "kind": {"enum": ["PlainU", "LadderU_gt", "ExpV", "PowerU", "duality"]},
                "a": _NUMS,
                "p": _NUMS,
                "x": _NUMS,
                "t": _NUMS,
                "q": _NUMS,
                "c": {"type": "number", "minimum": 0},
                "grid": {"type": "array", "items": _NUM, "minItems": 1},
                "interval": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                "response": RESPONSE_SCHEMA,
            },
        },
        "budget": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "paths": {"type": "integer", "minimum": 1},
                "horizon": {"type": "integer", "minimum": 1},
                "n_max": {"type": "integer", "minimum": 1},
                "threads": {"type": "integer", "minimum": 1},
            },
        },
        "verdict": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "stabilization_tol": {"type": "number", "exclusiveMinimum": 0},
                "divergence_slope": {"type": "number", "exclusiveMinimum": 0},
                "censor_cap": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "max_relative_se": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "format": {"enum": ["json", "csv", "both"]},
                "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
            },
        },
    },
}


class ConfigError(ValueError):
    """Schema or semantic error in an experiment configuration."""


def _path(err: jsonschema.ValidationError) -> str:
    return ".".join(str(p) for p in err.absolute_path) or "<root>"


def validate(doc: dict[str, Any]) -> None:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        # oneOf failures hide the useful message in their context
        err = errors[0]
        if err.context:
            err = max(err.context, key=lambda e: len(list(e.absolute_path)))
        raise ConfigError(f"{_path(err)}: {err.message}")


PRESETS: dict[str, dict[str, Any]] = {
    "two-point": {"xi": {"family": "two_point", "params": {"values": [-1, 1], "probs": [0.2, 0.8]}},
                  "eta": {"family": "exponential", "params": {"rate": 1.0}}},
    "symmetric": {"xi": {"family": "two_point", "params": {"values": [-1, 1], "probs": [0.5, 0.5]}},
                  "eta": {"family": "exponential", "params": {"rate": 1.0}}},
    "normal": {"xi": {"family": "normal", "params": {"mean": 1.0, "std": 1.0}},
               "eta": {"family": "exponential", "params": {"rate": 1.0}}},
    "exp-exp": {"xi": {"family": "exponential", "params": {"rate": 1.0}},
                "eta": {"family": "exponential", "params": {"rate": 1.0}}},
    "heavy-oscillating": {"xi": {"family": "point", "params": {"value": 1.0}},
                          "eta": {"family": "pareto", "params": {"alpha": 0.5, "sign": -1}}},
    "bernoulli-sieve": {"xi": {"family": "neg_log_beta", "params": {"a": 1.0, "b": 1.0}},
                        "coupling": {"type": "bernoulli_sieve", "a": 1.0, "b": 1.0}},
    "queue": {"xi": {"family": "exponential", "params": {"rate": 1.0}},
              "eta": {"family": "exponential", "params": {"rate": 0.5}}},
}


def build_law(desc: dict[str, Any]) -> JointLaw:
    """Joint law from a validated law descriptor (or preset name)."""
    if "preset" in desc:
        if desc["preset"] not in PRESETS:
            raise ConfigError(f"law.preset: unknown preset {desc['preset']!r}; "
                              f"expected one of {sorted(PRESETS)}")
        desc = PRESETS[desc["preset"]]
    coupling = desc.get("coupling", {"type": "independent"})
    kind = coupling["type"]
    try:
        if kind == "bernoulli_sieve":
            return JointLaw.bernoulli_sieve(coupling.get("a", 1.0), coupling.get("b", 1.0))
        xi = laws.make_marginal(desc["xi"])
        if kind == "functional":
            return JointLaw.functional(xi, coupling.get("map", "affine"), coupling.get("slope", 1.0),
                                       coupling.get("intercept", 0.0))
        if "eta" not in desc:
            raise ConfigError("law.eta: required for an independent coupling")
        return JointLaw.independent(xi, laws.make_marginal(desc["eta"]))
    except laws.LawError as exc:
        raise ConfigError(f"law: {exc}") from None


@dataclass
class ExperimentConfig:
    experiment: str
    law: dict[str, Any]
    seed: int = 0
    params: dict[str, Any] = field(default_factory=dict)
    paths: int = 100_000
    horizon: int = 10_000
    n_max: int = 1000
    threads: int = 1
    verdict: VerdictConfig = field(default_factory=VerdictConfig)
    out_dir: str = "."
    fmt: str = "both"
    name: str = ""

    def resolved(self) -> dict[str, Any]:
        """Plain-data view, as recorded in reports."""
        return {
            "experiment": self.experiment, "law": self.law, "seed": self.seed, "params": self.params,
            "budget": {"paths": self.paths, "horizon": self.horizon, "n_max": self.n_max,
                       "threads": self.threads},
            "verdict": vars(self.verdict),
        }


def from_document(doc: dict[str, Any]) -> ExperimentConfig:
    validate(doc)
    if "experiment" not in doc:
        raise ConfigError("experiment: required")
    if "law" not in doc and doc["experiment"] != "scenario":
        raise ConfigError("law: required")
    budget = doc.get("budget", {})
    out = doc.get("output", {})
    return ExperimentConfig(
        experiment=doc["experiment"],
        law=doc.get("law", {}),
        seed=doc.get("seed", 0),
        params=dict(doc.get("params", {})),
        paths=budget.get("paths", 100_000),
        horizon=budget.get("horizon", 10_000),
        n_max=budget.get("n_max", 1000),
        threads=budget.get("threads", 1),
        verdict=VerdictConfig(**doc.get("verdict", {})),
        out_dir=out.get("dir", "."),
        fmt=out.get("format", "both"),
        name=out.get("name", ""),
    )


def load(path: str) -> dict[str, Any]:
    """Read a config document; JSON syntax errors surface as :class:`ConfigError`."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError("<root>: a config must be a JSON object")
    return doc
