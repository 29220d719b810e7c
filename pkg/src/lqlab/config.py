"""Flat JSON experiment configs with dotted keys and strict validation.

Unknown keys are rejected so a config file documents exactly what ran; every
key carries a type and default.  ``canonical_hash`` fingerprints the fully
normalized config for the run record.
"""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any

from .errors import ConfigError
from .grid import Grid1D
from .hjb import CONTRACTIVE, UPWIND, SchemeConfig
from .model import DiscreteMdp, LqProblem
from .qlearn import CONSTANT as Q_CONSTANT
from .qlearn import QLearnConfig
from .linfa import BOUND_SCALED

KINDS = ("hjb-vi", "hjb-pi", "qlearn", "linfa", "probe")

_PROBLEM_FIELDS = {
    "problem.drift": (float, 0.5),
    "problem.discount_rate": (float, 1.0),
    "problem.state_cost": (float, 1.0),
    "problem.control_cost": (float, 1.0),
    "problem.control_gain": (float, 1.0),
    "problem.x_min": (float, -2.0),
    "problem.x_max": (float, 2.0),
    "problem.u_min": (float, -4.0),
    "problem.u_max": (float, 4.0),
}

_SCHEME_FIELDS = {
    "grid.n_nodes": (int, 401),
    "grid.dx": (float, None),
    "scheme.relaxation_rate": ("float_or_auto", "auto"),
    "scheme.differencing": (str, UPWIND),
    "scheme.tol": (float, 1e-8),
    "scheme.max_iters": (int, 10**6),
    "scheme.coefficient_form": (str, CONTRACTIVE),
    "monitor.threshold": (float, 1e6),
}

_PI_FIELDS = {
    "scheme.eval_tol": (float, 1e-10),
    "scheme.policy_tol": (float, 1e-8),
    "scheme.max_eval_iters": (int, 10**6),
    "scheme.max_improve_rounds": (int, 100),
    "pi.u0": (float, 1.0),
}

_SWEEP_FIELDS = {
    "sweep.param": (str, None),
    "sweep.values": (list, None),
}

_COMMON = {"kind": (str, None), "seed": (int, 0)}

SCHEMAS: dict[str, dict[str, tuple]] = {
    "hjb-vi": {**_COMMON, **_PROBLEM_FIELDS, **_SCHEME_FIELDS, **_SWEEP_FIELDS},
    "hjb-pi": {**_COMMON, **_PROBLEM_FIELDS, **_SCHEME_FIELDS, **_PI_FIELDS, **_SWEEP_FIELDS},
    "probe": {
        **_COMMON, **_PROBLEM_FIELDS, **_SCHEME_FIELDS, **_SWEEP_FIELDS,
        "probe.n_pairs": (int, 1000),
        "probe.reference": (str, "analytic"),
    },
    "qlearn": {
        **_COMMON, **_PROBLEM_FIELDS, **_SWEEP_FIELDS,
        "mdp.dt": (float, 0.1),
        "grid.n_nodes": (int, 161),
        "action_grid.n_nodes": (int, 41),
        "qlearn.learning_rate": (float, 0.8),
        "qlearn.schedule": (str, Q_CONSTANT),
        "qlearn.epsilon": (float, 0.1),
        "qlearn.n_episodes": (int, 5000),
        "qlearn.episode_len": (int, 50),
        "monitor.threshold": (float, 1e6),
    },
    "linfa": {
        **_COMMON, **_PROBLEM_FIELDS, **_SWEEP_FIELDS,
        "mdp.dt": (float, 0.1),
        "grid.n_nodes": (int, 161),
        "fa.lr_mode": (str, BOUND_SCALED),
        "fa.fraction": (float, 0.5),
        "fa.lr": (float, 0.01),
        "fa.n_steps": (int, 100000),
        "fa.log_every": (int, 1000),
        "monitor.threshold": (float, 1e6),
    },
}


def _coerce(key: str, spec_type, value):
    if spec_type is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number, got {value!r}", field=key)
        return float(value)
    if spec_type is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer, got {value!r}", field=key)
        return value
    if spec_type is str:
        if not isinstance(value, str):
            raise ConfigError(f"{key} must be a string, got {value!r}", field=key)
        return value
    if spec_type is list:
        if not isinstance(value, list):
            raise ConfigError(f"{key} must be a list, got {value!r}", field=key)
        return value
    if spec_type == "float_or_auto":
        if value == "auto":
            return "auto"
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number or 'auto', got {value!r}", field=key)
        return float(value)
    raise AssertionError(f"unhandled spec type for {key}")


def validate_config(raw: dict[str, Any]) -> dict[str, Any]:
    """Check kinds/keys/types and fill defaults; returns the normalized dict."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    kind = raw.get("kind")
    if kind is None:
        raise ConfigError("missing required key 'kind'", field="kind")
    if kind not in SCHEMAS:
        raise ConfigError(
            f"kind must be one of {', '.join(KINDS)}; got {kind!r}", field="kind"
        )
    schema = SCHEMAS[kind]
    for key in raw:
        if key not in schema:
            raise ConfigError(f"unknown config key {key!r} for kind {kind!r}", field=key)
    out: dict[str, Any] = {}
    for key, (spec_type, default) in schema.items():
        if key in raw:
            out[key] = _coerce(key, spec_type, raw[key])
        elif default is not None or key in ("sweep.param", "sweep.values", "grid.dx"):
            out[key] = default
    out["kind"] = kind
    if out.get("grid.dx") is not None and "grid.n_nodes" in raw:
        raise ConfigError("give either grid.dx or grid.n_nodes, not both", field="grid.dx")
    return out


def load_config(path: str) -> dict[str, Any]:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}")
    return validate_config(raw)


def canonical_hash(cfg: dict[str, Any]) -> str:
    """Deterministic fingerprint of a normalized config."""
    payload = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def build_problem(cfg: dict[str, Any]) -> LqProblem:
    try:
        return LqProblem(
            drift=cfg["problem.drift"],
            discount_rate=cfg["problem.discount_rate"],
            state_cost=cfg["problem.state_cost"],
            control_cost=cfg["problem.control_cost"],
            control_gain=cfg["problem.control_gain"],
            x_min=cfg["problem.x_min"],
            x_max=cfg["problem.x_max"],
            u_min=cfg["problem.u_min"],
            u_max=cfg["problem.u_max"],
        )
    except ValueError as e:
        raise ConfigError(str(e), field="problem") from e


def build_grid(cfg: dict[str, Any], problem: LqProblem) -> Grid1D:
    span = problem.x_max - problem.x_min
    dx = cfg.get("grid.dx")
    if dx is not None:
        if not dx > 0:
            raise ConfigError("grid.dx must be positive", field="grid.dx")
        n_cells = span / dx
        n_round = round(n_cells)
        if n_round < 2 or abs(n_cells - n_round) > 1e-9 * max(1.0, n_cells):
            raise ConfigError(
                f"grid.dx={dx} does not tile [{problem.x_min}, {problem.x_max}]",
                field="grid.dx",
            )
        n_nodes = n_round + 1
    else:
        n_nodes = cfg["grid.n_nodes"]
    try:
        return Grid1D(problem.x_min, problem.x_max, n_nodes)
    except ValueError as e:
        raise ConfigError(str(e), field="grid.n_nodes") from e


def build_scheme(cfg: dict[str, Any]) -> SchemeConfig:
    rate = cfg["scheme.relaxation_rate"]
    kwargs = dict(
        relaxation_rate=None if rate == "auto" else rate,
        differencing=cfg["scheme.differencing"],
        tol=cfg["scheme.tol"],
        max_iters=cfg["scheme.max_iters"],
        coefficient_form=cfg["scheme.coefficient_form"],
    )
    if cfg["kind"] == "hjb-pi":
        kwargs.update(
            eval_tol=cfg["scheme.eval_tol"],
            policy_tol=cfg["scheme.policy_tol"],
            max_eval_iters=cfg["scheme.max_eval_iters"],
            max_improve_rounds=cfg["scheme.max_improve_rounds"],
        )
    return SchemeConfig(**kwargs)


def build_mdp(cfg: dict[str, Any], problem: LqProblem) -> DiscreteMdp:
    dt = cfg["mdp.dt"]
    if not dt > 0:
        raise ConfigError("mdp.dt must be positive", field="mdp.dt")
    gamma = math.exp(-problem.discount_rate * dt)
    if not 0.0 < gamma < 1.0:
        raise ConfigError("discount factor exp(-rate*dt) left (0, 1)", field="mdp.dt")
    n_actions = cfg.get("action_grid.n_nodes", 81)
    return DiscreteMdp.from_problem(
        problem, dt=dt,
        n_state_nodes=cfg["grid.n_nodes"],
        n_action_nodes=n_actions,
    )


def build_qlearn(cfg: dict[str, Any]) -> QLearnConfig:
    return QLearnConfig(
        learning_rate=cfg["qlearn.learning_rate"],
        schedule=cfg["qlearn.schedule"],
        epsilon=cfg["qlearn.epsilon"],
        n_episodes=cfg["qlearn.n_episodes"],
        episode_len=cfg["qlearn.episode_len"],
        seed=cfg["seed"],
    )
