"""Run configuration: schema, validation and deterministic hashing.

A run is described by one YAML (or JSON) key-tree.  Unknown keys are
rejected everywhere and the seed is mandatory, so a configuration file
plus the package version pins a run exactly.
"""

from __future__ import annotations

import json

import jsonschema
import yaml

from sparsetvp.gibbs import fingerprint

__all__ = ["RUN_CONFIG_SCHEMA", "load_config", "validate_config", "config_hash"]

_PRIOR_KINDS = ["ridge", "lasso", "double-gamma", "triple-gamma", "horseshoe", "inverse-gamma", "spike-slab"]

_SHRINKAGE_BRANCH = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "a": {"type": "number"},
        "c": {"type": ["number", "string"]},
        "kappa2": {"type": "number"},
        "learn_a": {"type": "boolean"},
        "alpha_a": {"type": "number"},
        "beta_a": {"type": "number"},
        "learn_c": {"type": "boolean"},
        "alpha_c": {"type": "number"},
        "beta_c": {"type": "number"},
        "learn_phi": {"type": "boolean"},
        "learn_kappa": {"type": "boolean"},
        "d1": {"type": "number"},
        "d2": {"type": "number"},
    },
}

_FAMILY = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": _PRIOR_KINDS},
        # ridge
        "tau": {"type": "number"},
        "tau_beta": {"type": "number"},
        "scale_by_sigma2": {"type": "boolean"},
        # inverse gamma
        "s0": {"type": "number"},
        "S0": {"type": "number"},
        "beta_var": {"type": "number"},
        # triple gamma family
        "variance": _SHRINKAGE_BRANCH,
        "mean": _SHRINKAGE_BRANCH,
        # spike and slab
        "slab": {"enum": ["gaussian", "fractional", "student-t"]},
        "slab_scale_beta": {"type": "number"},
        "slab_scale_theta": {"type": "number"},
        "b_frac": {"type": "number"},
        "a_tau": {"type": "number"},
        "a_xi": {"type": "number"},
        "a_lambda": {"type": "number"},
        "a_kappa": {"type": "number"},
        "pi_fixed": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "a0_delta": {"type": "number"},
        "b0_delta": {"type": "number"},
        "a0_gamma": {"type": "number"},
        "b0_gamma": {"type": "number"},
        "enumeration_cap": {"type": "integer"},
    },
}

_SIGMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["inverse-gamma", "sv"]},
        "c0": {"type": "number"},
        "C0": {"type": "number"},
        "learn_C0": {"type": "boolean"},
        "g1": {"type": "number"},
        "g2": {"type": "number"},
        "mu0": {"type": "number"},
        "var_mu": {"type": "number"},
        "a_phi": {"type": "number"},
        "b_phi": {"type": "number"},
        "B_sigma": {"type": "number"},
    },
}

RUN_CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["seed", "data"],
    "properties": {
        "seed": {"type": "integer"},
        "output": {"type": "string"},
        "threads": {"type": "integer", "minimum": 1},
        "data": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "csv": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["path", "response"],
                    "properties": {
                        "path": {"type": "string"},
                        "response": {"type": ["string", "array"]},
                        "regressors": {"type": "array", "items": {"type": "string"}},
                        "transform": {"type": "object", "additionalProperties": {"type": "integer"}},
                        "intercept": {"type": "boolean"},
                    },
                },
                "simulate": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["T", "beta", "theta"],
                    "properties": {
                        "T": {"type": "integer", "minimum": 2},
                        "beta": {"type": "array", "items": {"type": "number"}},
                        "theta": {"type": "array", "items": {"type": "number"}},
                        "sigma2": {"type": ["number", "object"]},
                        "intercept": {"type": "boolean"},
                        "seed": {"type": "integer"},
                    },
                },
            },
        },
        "model": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["univariate", "cholesky-sv", "tvp-var"]},
                "lags": {"type": "integer", "minimum": 1},
            },
        },
        "prior": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"family": _FAMILY, "sigma": _SIGMA},
        },
        "chain": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "burn": {"type": "integer", "minimum": 0},
                "draws": {"type": "integer", "minimum": 1},
                "thin": {"type": "integer", "minimum": 1},
                "chains": {"type": "integer", "minimum": 1},
                "path_sampler": {"enum": ["awol", "ffbs"]},
                "store_paths": {"type": "boolean"},
            },
        },
        "evaluate": {
            "type": "object",
            "additionalProperties": False,
            "required": ["t0"],
            "properties": {
                "t0": {"type": "integer", "minimum": 2},
                "t_end": {"type": "integer"},
                "priors": {"type": "array", "items": {"type": ["string", "object"]}},
                "draws_per_window": {"type": "integer", "minimum": 1},
                "burn_per_window": {"type": "integer", "minimum": 0},
            },
        },
        "classify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"threshold": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
        },
        "profile": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "a_xi": {"type": "number"},
                "c_xi": {"type": "number"},
                "phi_xi": {"type": "number"},
                "grid": {"type": "integer", "minimum": 8},
                "bivariate": {"type": "boolean"},
                "scale_grid": {"type": "boolean"},
            },
        },
    },
}


def validate_config(cfg):
    """Schema-validate a raw configuration mapping; returns it unchanged."""
    jsonschema.validate(cfg, RUN_CONFIG_SCHEMA)
    data = cfg.get("data", {})
    if ("csv" in data) == ("simulate" in data):
        raise ValueError("data must specify exactly one of 'csv' or 'simulate'")
    return cfg


def load_config(path):
    """Read and validate a YAML/JSON run configuration file."""
    with open(path) as fh:
        cfg = yaml.safe_load(fh)
    if not isinstance(cfg, dict):
        raise ValueError(f"{path}: configuration must be a mapping")
    return validate_config(cfg)


def config_hash(cfg):
    """Stable short hash of a configuration mapping."""
    return fingerprint(json.loads(json.dumps(cfg)))
