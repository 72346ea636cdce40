"""Flat ``key = value`` experiment configuration.

Lines starting with ``#`` and blank lines are ignored.  Lists are comma
separated.  Unknown keys, bad values and missing referenced files raise
:class:`ConfigError`.

Keys (defaults in :class:`ExperimentConfig`):

    experiment          free-form name
    seed                64-bit integer driving every random choice
    out                 output directory
    workers             threads for embarrassingly parallel loops

    integrator_mode     product | monte_carlo
    integrator_tol      target absolute error of LHV probabilities
    integrator_samples  Monte Carlo samples (minimum)
    integrator_max_samples
    integrator_n_theta  product rule starting size (polar)
    integrator_n_phi    product rule starting size (azimuth)

    states_file         optional file with 15 reals per state (a, b, T row-major)
    n_random            random states from the noisy ball
    visibility          v of the noisy ball
    families            include T = +-eps u u^T, u in {x, y, z} (true/false)
    include_mixed       include the maximally mixed state (true/false)
    eps                 strength of the analytic families
    n_settings          random setting pairs per state (static sweep)
    static_tol          pass threshold of the static sweep

    omega               coupling of the Heisenberg Hamiltonian
    grid_n_theta        dynamics grid per sphere (Gauss-Legendre nodes)
    grid_n_phi          dynamics grid per sphere (azimuth nodes)
    L_list              velocity basis degrees
    kink_radius         exclusion radius around kink sets (radians)
    lsqr_tol            LSQR stopping tolerance
    control_n_states    Bloch vectors in the single-qubit control
    control_n_theta     control grid (polar)
    control_n_phi       control grid (azimuth)
    control_tol         pass threshold of the control residual
    chain_n_pairs       node pairs used by the chain check

    D_list, d_list, N_max, kernel     dimension-counting table

    l_max, n_trials, corrupt          covariance suite (corrupt > 0 is a negative control)
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field

from .errors import ConfigError


@dataclass
class ExperimentConfig:
    experiment: str = "default"
    seed: int = 0
    out: str = "out"
    workers: int = 1

    integrator_mode: str = "product"
    integrator_tol: float = 5e-3
    integrator_samples: int = 1_000_000
    integrator_max_samples: int = 4_000_000
    integrator_n_theta: int = 64
    integrator_n_phi: int = 128

    states_file: str = ""
    n_random: int = 32
    visibility: float = 0.2
    families: bool = True
    include_mixed: bool = True
    eps: float = 0.1
    n_settings: int = 20
    static_tol: float = 5e-3

    omega: float = 1.0
    grid_n_theta: int = 16
    grid_n_phi: int = 32
    L_list: list = field(default_factory=lambda: [2, 4, 6, 8])
    kink_radius: float = 1e-3
    lsqr_tol: float = 1e-10
    control_n_states: int = 20
    control_n_theta: int = 24
    control_n_phi: int = 48
    control_tol: float = 1e-6
    chain_n_pairs: int = 4000

    D_list: list = field(default_factory=lambda: [2, 3])
    d_list: list = field(default_factory=lambda: [2, 20])
    N_max: int = 10
    kernel: int = 0

    l_max: int = 5
    n_trials: int = 100
    corrupt: float = 0.0

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **kw) -> ExperimentConfig:
        return dataclasses.replace(self, **kw)


_LIST_TYPES = {"L_list": int, "D_list": int, "d_list": int}


def _coerce(key: str, raw: str, default):
    try:
        if key in _LIST_TYPES:
            items = [x.strip() for x in raw.split(",") if x.strip()]
            return [_LIST_TYPES[key](x) for x in items]
        if isinstance(default, bool):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc


def parse_config(text: str, base_dir: str = ".") -> ExperimentConfig:
    defaults = ExperimentConfig()
    known = {f.name: getattr(defaults, f.name) for f in dataclasses.fields(ExperimentConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _coerce(key, raw, known[key])
    if values.get("states_file"):
        path = values["states_file"]
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        values["states_file"] = path
    cfg = ExperimentConfig(**values)
    validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return parse_config(text, os.path.dirname(os.path.abspath(path)))


def validate(cfg: ExperimentConfig) -> None:
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    if cfg.integrator_mode not in ("product", "monte_carlo"):
        raise ConfigError(f"unknown integrator_mode {cfg.integrator_mode!r}")
    if not 0.0 <= cfg.visibility <= 1.0:
        raise ConfigError("visibility must lie in [0, 1]")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    if any(L < 1 for L in cfg.L_list):
        raise ConfigError("L_list entries must be >= 1")
    if cfg.states_file and not os.path.isfile(cfg.states_file):
        raise ConfigError(f"states_file {cfg.states_file!r} does not exist")
    for name in ("n_random", "n_settings", "control_n_states", "N_max", "n_trials", "kernel"):
        if getattr(cfg, name) < 0:
            raise ConfigError(f"{name} must be non-negative")
