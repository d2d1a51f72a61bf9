"""JSON Schemas for the stage reports written by the pipeline."""
from __future__ import annotations

import jsonschema

NUM = {"type": "number"}
NUM_OR_NULL = {"type": ["number", "null"]}
NUM_OR_INF = {"anyOf": [{"type": "number"}, {"enum": ["Infinity"]}]}
NUM_MAP = {"type": "object", "additionalProperties": NUM}
NUM_LIST = {"type": "array", "items": NUM}
STR_LIST = {"type": "array", "items": {"type": "string"}}
CLASS = {"enum": ["carbus", "truck"]}


def _stage(name, props, required):
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "type": "object",
        "properties": {"stage": {"const": name}, "schema_version": {"const": 1}, **props},
        "required": ["stage", "schema_version", *required],
    }


REGRESSION_FIT = {
    "type": "object",
    "properties": {
        "method": {"enum": ["ols", "glm", "ridge", "lasso"]},
        "response": {"enum": ["gdp", "ln_gdp"]},
        "n_obs": {"type": "integer", "minimum": 1},
        "coefficients": {"type": "object", "required": ["intercept"], "additionalProperties": NUM},
        "standardized_coefficients": {"anyOf": [NUM_MAP, {"type": "null"}]},
        "r_squared": {"type": "number", "maximum": 1},
        "rmse": {"type": "number", "minimum": 0},
        "vif": {"anyOf": [{"type": "object", "additionalProperties": NUM_OR_INF}, {"type": "null"}]},
        "lambda": NUM_OR_NULL,
        "selected_features": STR_LIST,
        "residuals": NUM_LIST,
        "standardized_residuals": NUM_LIST,
        "leverage": {"type": "array", "items": {"type": "number", "minimum": -1e-9, "maximum": 1.000000001}},
        "cv": {
            "type": "object",
            "properties": {"grid": NUM_LIST, "scores": NUM_LIST, "best_lambda": NUM},
            "required": ["grid", "scores", "best_lambda"],
        },
    },
    "required": ["method", "response", "n_obs", "coefficients", "r_squared", "rmse",
                 "selected_features", "residuals"],
}

DIAGNOSTICS = {
    "type": "object",
    "properties": {
        "residual_vs_fitted": {"type": "array", "items": {"type": "array", "items": NUM, "minItems": 2, "maxItems": 2}},
        "qq": {"type": "array", "items": {"type": "array", "items": NUM, "minItems": 2, "maxItems": 2}},
        "scale_location": {"type": "array", "items": {"type": "array", "items": NUM, "minItems": 2, "maxItems": 2}},
        "leverage": NUM_LIST,
        "correlation_labels": STR_LIST,
        "correlation": {"type": "array", "items": {"type": "array", "items": NUM_OR_NULL}},
    },
    "required": ["residual_vs_fitted", "qq", "scale_location", "leverage",
                 "correlation_labels", "correlation"],
}

GRAVITY_FIT = {
    "type": "object",
    "properties": {
        "year": {"type": "integer"},
        "vehicle_class": CLASS,
        "method": {"enum": ["loglinear", "minimax", "null"]},
        "beta": NUM,
        "attractions": NUM_MAP,
        "k_constant": NUM_OR_NULL,
        "fit_metric": NUM,
        "fit_metric_name": {"enum": ["r_squared", "max_abs_deviation", "slope_r_squared"]},
        "excluded_zero_flows": {"type": "integer", "minimum": 0},
        "n_pairs": {"type": "integer", "minimum": 0},
    },
    "required": ["year", "vehicle_class", "method", "beta", "attractions", "fit_metric",
                 "excluded_zero_flows"],
}

SUBNETWORK = {
    "type": "object",
    "properties": {
        "component_index": {"type": "integer", "minimum": 1},
        "loading_threshold": NUM,
        "score_threshold": NUM,
        "signed": {"type": "boolean"},
        "origins": STR_LIST,
        "destinations": STR_LIST,
        "edges": {"type": "array", "items": {
            "type": "object",
            "properties": {"origin": {"type": "string"}, "destination": {"type": "string"}, "flow": NUM},
            "required": ["origin", "destination", "flow"]}},
    },
    "required": ["component_index", "origins", "destinations", "edges"],
}

PCA_RESULT = {
    "type": "object",
    "properties": {
        "standardized": {"type": "boolean"},
        "origins": STR_LIST,
        "destinations": STR_LIST,
        "explained_variance_ratio": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1.000000001}},
        "explained_variance": NUM_LIST,
        "loadings": {"type": "object", "additionalProperties": NUM_LIST},
        "scores": {"type": "object", "additionalProperties": NUM_LIST},
    },
    "required": ["standardized", "explained_variance_ratio", "loadings", "scores"],
}

SCHEMAS = {
    "features": _stage("features", {
        "columns": STR_LIST,
        "rows": {"type": "array", "items": {
            "type": "object",
            "properties": {"city": {"type": "string"}, "year": {"type": "integer"}},
            "required": ["city", "year"],
            "additionalProperties": NUM_OR_NULL}},
        "undefined": {"type": "array", "items": {
            "type": "object",
            "properties": {"city": {"type": "string"}, "year": {"type": "integer"},
                           "column": {"type": "string"}},
            "required": ["city", "year", "column"]}},
    }, ["columns", "rows", "undefined"]),
    "regression": _stage("regression", {
        "columns": STR_LIST,
        "n_obs": {"type": "integer"},
        "excluded_rows": {"type": "array"},
        "vif": {"type": "object", "additionalProperties": NUM_OR_INF},
        "fits": {"type": "object", "additionalProperties": REGRESSION_FIT},
        "diagnostics": {"type": "object", "additionalProperties": DIAGNOSTICS},
    }, ["columns", "n_obs", "fits"]),
    "gravity": _stage("gravity", {
        "fits": {"type": "array", "items": GRAVITY_FIT},
    }, ["fits"]),
    "network": _stage("network", {
        "years": {"type": "object", "additionalProperties": {
            "type": "object",
            "properties": {
                "distance": {"type": "object", "properties": {"betweenness": NUM_MAP, "closeness": NUM_MAP}},
                "carbus": {"type": "object", "properties": {"closeness": NUM_MAP, "pagerank": NUM_MAP}},
                "truck": {"type": "object", "properties": {"closeness": NUM_MAP, "pagerank": NUM_MAP}},
                "correlation_with_gdp": {"type": "object", "additionalProperties": NUM_OR_NULL},
                "correlation_table": {"type": "object", "properties": {
                    "labels": STR_LIST,
                    "matrix": {"type": "array", "items": {"type": "array", "items": NUM_OR_NULL}}},
                    "required": ["labels", "matrix"]},
                "unreachable_pairs": {"type": "integer", "minimum": 0},
            },
            "required": ["correlation_with_gdp"]}},
    }, ["years"]),
    "pca": _stage("pca", {
        "results": {"type": "array", "items": {
            "type": "object",
            "properties": {"year": {"type": "integer"}, "vehicle_class": CLASS,
                           "pca": PCA_RESULT, "subnetworks": {"type": "array", "items": SUBNETWORK}},
            "required": ["year", "vehicle_class", "pca", "subnetworks"]}},
    }, ["results"]),
    "distfit": _stage("distfit", {
        "n": {"type": "integer", "minimum": 10},
        "models": {"type": "object",
                   "properties": {m: {"type": "object",
                                      "properties": {"params": NUM_MAP, "log_likelihood": NUM, "aic": NUM},
                                      "required": ["params", "log_likelihood", "aic"]}
                                  for m in ("normal", "lognormal", "gamma", "weibull")},
                   "required": ["normal", "lognormal", "gamma", "weibull"]},
        "best_model": {"enum": ["normal", "lognormal", "gamma", "weibull"]},
        "skewness": NUM,
        "kurtosis": NUM,
        "bootstrap_n": {"type": "integer", "minimum": 0},
    }, ["models", "best_model", "skewness", "kurtosis"]),
}


def validate_report(stage: str, obj) -> None:
    """Raise ``jsonschema.ValidationError`` if ``obj`` does not match the stage schema."""
    jsonschema.validate(obj, SCHEMAS[stage])
