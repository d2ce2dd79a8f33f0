"""Experiment configuration: TOML files with sections ``model``, ``space_grid``,
``families``, ``mc``, ``optimizer``, ``bands`` (plus top-level ``pq_list`` and
``suites``). A run manifest (JSON with a ``config`` key) is accepted too, so
a run can be replayed from its manifest.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import LqJumpsError
from .families import FAMILIES, make_integrand
from .norms import SpaceGrid
from .oracle import MAX_ENUM_CELLS
from .random_measure import BernoulliCellsModel, PoissonModel

__all__ = ["SUITES", "ConfigError", "Experiment", "read_config", "resolve", "validate_config", "load_experiment"]

SUITES = ("ratios", "isometry", "hilbert", "bdg", "davis", "lemma", "oracle")

DEFAULTS = {
    "suites": ["ratios"],
    "mc": {"replicas": 10_000, "seed": 0, "workers": 1, "se_method": "delta"},
    "optimizer": {"tol": 1e-8, "max_iter": 10_000},
    "bands": {
        "ratio_low": 1 / 64,
        "ratio_high": 64.0,
        "spread": 64.0,
        "bdg_low": 1 / 64,
        "bdg_high": 64.0,
        "hilbert_bound": 64.0,
        "sigmas": 3.0,
        "oracle_coverage": 0.95,
        "identity_tol": 1e-10,
    },
    "hilbert": {"sqh": [1.5, 2.0], "mejeto": [1.25, 2.0], "mejo": [2.0, 3.0, 4.0]},
    "davis": {"realizations": 1000},
    "lemma": {"instances": 1000, "points": 6},
}

_SECTIONS = {"model", "space_grid", "families", "pq_list", "suites", "mc", "optimizer", "bands", "hilbert", "davis", "lemma"}


class ConfigError(LqJumpsError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


def read_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"cannot read config {path}: {exc}"]) from exc
    try:
        if path.suffix == ".json":
            raw = json.loads(text)
            return raw["config"] if "config" in raw else raw
        return tomllib.loads(text)
    except (ValueError, KeyError) as exc:
        raise ConfigError([f"cannot parse config {path}: {exc}"]) from exc


def resolve(raw):
    """Fill defaults into a raw config mapping (does not validate)."""
    cfg = copy.deepcopy(raw)
    for key, value in DEFAULTS.items():
        if isinstance(value, dict):
            merged = dict(value)
            merged.update(cfg.get(key, {}) or {})
            cfg[key] = merged
        else:
            cfg.setdefault(key, copy.deepcopy(value))
    cfg.setdefault("families", [])
    return cfg


def _is_exponent(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and 1 < x < math.inf


def _check_model(model, out):
    if not isinstance(model, dict):
        out.append("model: missing section")
        return
    variant = model.get("variant", "Poisson")
    if variant == "Poisson":
        if "time_edges" not in model and "horizon" not in model:
            out.append("model.horizon: required (or model.time_edges)")
        rates = model.get("rates", model.get("rate"))
        if rates is None:
            out.append("model.rates: required (or model.rate)")
        elif np.any(np.asarray(rates, dtype=float) < 0):
            out.append("model.rates: intensities must be nonnegative")
    elif variant == "BernoulliCells":
        for key in ("times", "probs", "horizon"):
            if key not in model:
                out.append(f"model.{key}: required for BernoulliCells")
        probs = np.asarray(model.get("probs", []), dtype=float)
        if np.any(probs < 0) or np.any(probs > 1):
            out.append("model.probs: probabilities must lie in [0, 1]")
    else:
        out.append(f"model.variant: unknown variant {variant!r}; expected 'Poisson' or 'BernoulliCells'")


def _diagnose(cfg):
    out = []
    for key in cfg:
        if key not in _SECTIONS:
            out.append(f"{key}: unknown section")
    _check_model(cfg.get("model"), out)

    grid = cfg.get("space_grid")
    if not isinstance(grid, dict) or "weights" not in grid:
        out.append("space_grid.weights: required")
    else:
        w = np.asarray(grid["weights"], dtype=float)
        if w.ndim != 1 or w.size == 0:
            out.append("space_grid.weights: must be a nonempty list")
        elif np.any(w <= 0) or not np.all(np.isfinite(w)):
            out.append("space_grid.weights: weights must be positive and finite")

    pq = cfg.get("pq_list")
    if not isinstance(pq, list) or not pq:
        out.append("pq_list: must be a nonempty list of [p, q] pairs")
    else:
        for i, pair in enumerate(pq):
            if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
                out.append(f"pq_list[{i}]: expected a [p, q] pair")
            elif not all(_is_exponent(e) for e in pair):
                out.append(f"pq_list[{i}]: exponent must lie in (1, ∞), got {list(pair)}")

    fams = cfg.get("families")
    if not isinstance(fams, list) or not fams:
        out.append("families: at least one integrand family is required")
    else:
        for i, fam in enumerate(fams):
            gen = fam.get("generator") if isinstance(fam, dict) else None
            if gen not in FAMILIES:
                out.append(f"families[{i}].generator: unknown family {gen!r}; known families: {', '.join(sorted(FAMILIES))}")

    suites = cfg.get("suites")
    if not isinstance(suites, list) or any(s not in SUITES for s in suites):
        out.append(f"suites: entries must be among {', '.join(SUITES)}")

    mc = cfg.get("mc", {})
    if not (isinstance(mc.get("replicas"), int) and mc["replicas"] >= 2):
        out.append("mc.replicas: must be an integer >= 2")
    if not (isinstance(mc.get("seed"), int) and mc["seed"] >= 0):
        out.append("mc.seed: must be a nonnegative integer")
    if not (isinstance(mc.get("workers"), int) and mc["workers"] >= 1):
        out.append("mc.workers: must be a positive integer")
    if mc.get("se_method") not in ("delta", "bootstrap"):
        out.append("mc.se_method: must be 'delta' or 'bootstrap'")

    opt = cfg.get("optimizer", {})
    if not (isinstance(opt.get("tol"), (int, float)) and opt["tol"] > 0):
        out.append("optimizer.tol: must be positive")
    if not (isinstance(opt.get("max_iter"), int) and opt["max_iter"] > 0):
        out.append("optimizer.max_iter: must be a positive integer")

    for name in cfg.get("hilbert", {}):
        if name not in DEFAULTS["hilbert"]:
            out.append(f"hilbert.{name}: unknown inequality")

    variant = (cfg.get("model") or {}).get("variant", "Poisson")
    if isinstance(suites, list):
        if "isometry" in suites and variant != "Poisson":
            out.append("suites: 'isometry' requires a Poisson model")
        if "oracle" in suites:
            if variant != "BernoulliCells":
                out.append("suites: 'oracle' requires a BernoulliCells model")
            elif len(cfg["model"].get("times", [])) > MAX_ENUM_CELLS:
                out.append(f"model.times: 'oracle' supports at most {MAX_ENUM_CELLS} cells")
    return out


def validate_config(path):
    """All diagnostics for the config at ``path``; empty when valid."""
    try:
        raw = read_config(path)
    except ConfigError as exc:
        if exc.diagnostics and exc.diagnostics[0].startswith("cannot read"):
            raise
        return exc.diagnostics
    return _diagnose(resolve(raw))


@dataclass
class Experiment:
    config: dict
    model: object
    grid: SpaceGrid
    families: list
    pq_list: list


def build_model(m):
    if m.get("variant", "Poisson") == "BernoulliCells":
        return BernoulliCellsModel(m["times"], m["probs"], m["horizon"], m.get("marks"))
    if "time_edges" in m:
        edges = np.asarray(m["time_edges"], dtype=float)
    else:
        edges = np.linspace(0.0, float(m["horizon"]), int(m.get("time_cells", 1)) + 1)
    if "rates" in m:
        rates = np.asarray(m["rates"], dtype=float)
    else:
        rates = np.full((edges.size - 1, int(m.get("marks", 1))), float(m["rate"]))
    return PoissonModel(edges, rates)


def load_experiment(raw, overrides=None):
    """Resolve, apply overrides (``seed``, ``replicas``, ``workers``, ``suites``),
    validate, and build the model, grid and integrands."""
    cfg = resolve(raw)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "suites":
            cfg["suites"] = list(value)
        else:
            cfg["mc"][key] = value
    problems = _diagnose(cfg)
    if problems:
        raise ConfigError(problems)
    try:
        model = build_model(cfg["model"])
        grid = SpaceGrid(cfg["space_grid"]["weights"], tuple(cfg["space_grid"].get("points", ())))
        families = []
        for fam in cfg["families"]:
            params = {k: v for k, v in fam.items() if k not in ("generator", "label")}
            families.append(make_integrand(fam["generator"], model, grid, fam.get("label", ""), **params))
    except (LqJumpsError, TypeError, ValueError) as exc:
        raise ConfigError([f"model/families: {exc}"]) from exc
    labels = [f.label for f in families]
    if len(set(labels)) != len(labels):
        raise ConfigError(["families: labels must be unique"])
    pq = [(float(p), float(q)) for p, q in cfg["pq_list"]]
    return Experiment(cfg, model, grid, families, pq)
