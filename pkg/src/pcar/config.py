"""Declarative run configuration (JSON) and its translation to library objects."""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema

from .inference import McmcConfig, PriorConfig
from .priors import (
    Ar1Base1Prior,
    ApproxReferencePrior,
    FixedPrecision,
    FlatZPrior,
    Gumbel2PrecisionPrior,
    SequentialPcPrior,
    TailStatement,
    theta_from_tail_base1,
)
from .study import AR3_BENCHMARK_CASES, StudyCase, StudyConfig

__all__ = ["CONFIG_VERSION", "SCHEMA", "ConfigError", "load_config", "validate", "prior_from_doc", "mcmc_from_doc", "study_from_doc"]

CONFIG_VERSION = 1

_pos = {"type": "number", "exclusiveMinimum": 0}
_unit = {"type": "number", "minimum": 0, "maximum": 1}
_tail = {
    "type": "object",
    "properties": {"U": {"type": "number"}, "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
    "required": ["U", "alpha"],
    "additionalProperties": False,
}

_PACF = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "family": {"enum": ["pc", "sequential-pc"]},
                "thetas": {"type": "array", "items": _pos, "minItems": 1},
            },
            "required": ["family", "thetas"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "family": {"enum": ["pc", "sequential-pc"]},
                "schedule": {
                    "type": "object",
                    "properties": {"a": _unit, "b": _unit},
                    "required": ["a", "b"],
                    "additionalProperties": False,
                },
            },
            "required": ["family", "schedule"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"family": {"enum": ["reference", "approximate-reference", "flat-z"]}},
            "required": ["family"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "family": {"const": "ar1-base1"},
                "theta": _pos,
                "tail": _tail,
                "sign": {"enum": [1, -1]},
            },
            "required": ["family"],
            "oneOf": [{"required": ["theta"]}, {"required": ["tail"]}],
            "additionalProperties": False,
        },
    ]
}

_PRECISION = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"family": {"const": "gumbel2"}, "lambda": _pos, "tail": _tail},
            "required": ["family"],
            "oneOf": [{"required": ["lambda"]}, {"required": ["tail"]}],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"family": {"const": "fixed"}, "tau": _pos},
            "required": ["family", "tau"],
            "additionalProperties": False,
        },
    ]
}

_PRIOR = {
    "type": "object",
    "properties": {"pacf": _PACF, "precision": _PRECISION},
    "required": ["pacf"],
    "additionalProperties": False,
}

_MCMC = {
    "type": "object",
    "properties": {
        "iterations": {"type": "integer", "minimum": 1},
        "burn_in": {"type": "integer", "minimum": 0},
        "thin": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "adapt_target": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    },
    "additionalProperties": False,
}

_CASE = {
    "type": "object",
    "properties": {
        "label": {"type": "string"},
        "pacf": {"type": "array", "items": {"type": "number", "exclusiveMinimum": -1, "exclusiveMaximum": 1}},
        "tau": _pos,
        "n": {"type": "integer", "minimum": 2},
    },
    "required": ["pacf"],
    "additionalProperties": False,
}

_STUDY = {
    "type": "object",
    "properties": {
        "cases": {"type": "array", "items": _CASE, "minItems": 1},
        "preset": {"const": "ar3-benchmark"},
        "preset_cases": {"type": "array", "items": {"type": "string"}},
        "n": {"type": "integer", "minimum": 2},
        "m": {"type": "integer", "minimum": 1},
        "fit_order": {"type": "integer", "minimum": 1},
        "priors": {"type": "array", "items": _PRIOR, "minItems": 1},
        "estimator": {"enum": ["mean", "median"]},
        "hpd_prob": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "master_seed": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"const": CONFIG_VERSION},
        "prior": _PRIOR,
        "mcmc": _MCMC,
        "study": _STUDY,
    },
    "required": ["version"],
    "additionalProperties": False,
}


class ConfigError(ValueError):
    """The configuration document is malformed or inconsistent."""


def validate(doc: dict) -> dict:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(v) for v in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from None
    return doc


def load_config(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return validate(doc)


def prior_from_doc(doc: dict | None, order: int) -> PriorConfig:
    """Build a `PriorConfig`; the default is the PC prior with ``a = b = 0.5``."""
    doc = doc or {"pacf": {"family": "pc", "schedule": {"a": 0.5, "b": 0.5}}}
    pacf = doc["pacf"]
    fam = pacf["family"]
    if fam in ("pc", "sequential-pc"):
        if "thetas" in pacf:
            if len(pacf["thetas"]) != order:
                raise ConfigError(f"{len(pacf['thetas'])} rates given for order {order}")
            pp = SequentialPcPrior(tuple(pacf["thetas"]))
        else:
            pp = SequentialPcPrior.from_schedule(pacf["schedule"]["a"], pacf["schedule"]["b"], order)
    elif fam in ("reference", "approximate-reference"):
        pp = ApproxReferencePrior(order)
    elif fam == "flat-z":
        pp = FlatZPrior(order)
    else:
        if order != 1:
            raise ConfigError("the ar1-base1 prior is only defined for order 1")
        theta = pacf.get("theta")
        if theta is None:
            theta = theta_from_tail_base1(TailStatement(pacf["tail"]["U"], pacf["tail"]["alpha"]))
        pp = Ar1Base1Prior(theta, pacf.get("sign", 1))

    prec = doc.get("precision", {"family": "gumbel2", "tail": {"U": 1.0, "alpha": 0.01}})
    if prec["family"] == "fixed":
        pr = FixedPrecision(prec["tau"])
    elif "lambda" in prec:
        pr = Gumbel2PrecisionPrior(prec["lambda"])
    else:
        pr = Gumbel2PrecisionPrior.from_tail(prec["tail"]["U"], prec["tail"]["alpha"])
    return PriorConfig(pp, pr)


def mcmc_from_doc(doc: dict | None, seed: int | None = None) -> McmcConfig:
    doc = dict(doc or {})
    if seed is not None:
        doc["seed"] = seed
    try:
        return McmcConfig(**doc)
    except ValueError as exc:
        raise ConfigError(f"mcmc: {exc}") from None


def study_from_doc(doc: dict, mcmc: McmcConfig, seed: int | None = None) -> StudyConfig:
    doc = dict(doc)
    n = doc.get("n", 50)
    if "cases" in doc:
        cases = tuple(
            StudyCase(c.get("label", str(i + 1)), tuple(c["pacf"]), c.get("tau", 1.0), c.get("n", n))
            for i, c in enumerate(doc["cases"])
        )
    else:
        wanted = doc.get("preset_cases")
        cases = tuple(StudyCase(lab, psi, 1.0, n) for lab, psi in AR3_BENCHMARK_CASES if wanted is None or lab in wanted)
        if not cases:
            raise ConfigError(f"no benchmark case matches {wanted}")
    order = doc.get("fit_order", 3)
    priors = tuple(prior_from_doc(p, order) for p in doc.get("priors", [None]))
    master = seed if seed is not None else doc.get("master_seed", 2016)
    try:
        return StudyConfig(
            cases=cases,
            priors=priors,
            fit_order=order,
            m=doc.get("m", 1000),
            estimator=doc.get("estimator", "mean"),
            hpd_prob=doc.get("hpd_prob", 0.95),
            master_seed=master,
            mcmc=mcmc,
        )
    except ValueError as exc:
        raise ConfigError(f"study: {exc}") from None
