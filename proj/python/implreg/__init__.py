"""Label-noise SGD toolkit: thin Python layer over the C++ core.

Report-producing calls return plain dicts (decoded from the JSON the C++ side
serializes), everything else returns lists and floats.
"""

import json as _json

from ._implreg import (  # noqa: F401
    Activation,
    AnalysisError,
    Architecture,
    ImplregError,
    NoiseKind,
    builtin_dataset,
    curve_length,
    forward,
    loss,
    optimal_h,
    param_gradient,
    param_hessian,
    pretrain_to_zero_error,
    r_o,
    r_o_prime,
    r_sum,
    random_init,
    read_trajectory_csv,
    sgd_label_noise,
)
from . import _implreg as _core

__all__ = [
    "Activation", "AnalysisError", "Architecture", "ImplregError", "NoiseKind", "builtin_dataset",
    "builtin_experiment", "characterize", "classify_repellence", "convexity_certificate",
    "curve_length", "forward", "list_experiments", "loss", "lyapunov_equivalence",
    "optimal_h", "param_gradient", "param_hessian", "pretrain_to_zero_error", "r_o",
    "r_o_prime", "r_sum", "random_init", "read_trajectory_csv", "run", "sgd_label_noise",
    "spectrum", "validate_config",
]


def spectrum(arch, theta, xs, ys):
    return _json.loads(_core._spectrum(arch, theta, xs, ys))


def classify_repellence(arch, theta, xs, ys):
    return _json.loads(_core._classify_repellence(arch, theta, xs, ys))


def lyapunov_equivalence(arch, theta, xs, ys, eta, eps):
    return _json.loads(_core._lyapunov_equivalence(arch, theta, xs, ys, eta, eps))


def convexity_certificate(arch, theta, xs, ys, tol_line=1e-3):
    return _json.loads(_core._convexity_certificate(arch, theta, xs, ys, tol_line))


def characterize(arch, theta, x, tol):
    return _json.loads(_core._characterize(arch, theta, x, tol))


def list_experiments():
    return dict(_core._list_experiments())


def builtin_experiment(name):
    return _json.loads(_core._builtin_experiment(name))


def validate_config(config):
    """Returns the config with every default filled in; raises ValueError."""
    return _json.loads(_core._validate_config(_json.dumps(config)))


def run(config):
    """Runs an experiment config (dict) and returns its manifest."""
    return _json.loads(_core._run(_json.dumps(config)))
