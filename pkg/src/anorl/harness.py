"""Experiment orchestration: config parsing, runs, metrics, SVG plots.

Configs are flat key/value text with INI-style sections ([experiment],
[model], [dqn], [a3c]); metrics go to one CSV per run, flushed after
every episode so a crash loses at most the episode in flight.
"""

from __future__ import annotations

import configparser
import io
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import a3c as a3c_mod
from . import dqn as dqn_mod
from .envs import make_env
from .errors import ValidationError
from .qmodel import Mode, QModelConfig

CODE_VERSION = "anorl-0.1.0"

ENV_ACTIONS = {
    "cartpole": 2,
    "mountaincar": 3,
    "minigrid8x8": 3,
    "simplecrossing": 3,
    "grid": 3,
}

DQN_HEADER = ["episode", "reward", "epsilon", "mean_loss"]
A3C_HEADER = ["global_episode", "worker", "reward"]


@dataclass
class ExperimentConfig:
    algorithm: str = "dqn"
    env: str = "cartpole"
    seed: int = 0
    episodes: int = 500
    out_dir: str = "runs"
    grid_size: int = 8
    sparse_reward: bool = False
    # model
    mode: Mode = Mode.ANO_WITH_ROTATION
    locality: int = 3
    n_qubits: int = 4
    n_layers: int = 1
    # dqn
    gamma: float = 0.99
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay: float = 0.99
    batch_size: int = 32
    capacity: int = 10_000
    target_period: int = 50
    update_every: int = 1
    # a3c
    workers: int = 4
    n_step: int = 5
    value_weight: float = 0.5
    entropy_weight: float = 0.01
    grad_clip: float = 5.0
    audit: bool = False

    def n_actions(self) -> int:
        return ENV_ACTIONS[self.env]

    def model_config(self, n_outputs: Optional[int] = None) -> QModelConfig:
        return QModelConfig(
            n_qubits=self.n_qubits,
            n_layers=self.n_layers,
            locality=self.locality if self.mode.uses_ano else 1,
            mode=self.mode,
            n_outputs=self.n_actions() if n_outputs is None else n_outputs,
        )

    def dqn_config(self) -> dqn_mod.DqnConfig:
        return dqn_mod.DqnConfig(
            gamma=self.gamma,
            eps_start=self.eps_start,
            eps_end=self.eps_end,
            eps_decay=self.eps_decay,
            batch_size=self.batch_size,
            capacity=self.capacity,
            target_period=self.target_period,
            episodes=self.episodes,
            update_every=self.update_every,
        )

    def a3c_config(self) -> a3c_mod.A3cConfig:
        return a3c_mod.A3cConfig(
            workers=self.workers,
            n_step=self.n_step,
            gamma=self.gamma,
            value_weight=self.value_weight,
            entropy_weight=self.entropy_weight,
            episodes=self.episodes,
            grad_clip=self.grad_clip,
            audit=self.audit,
        )


_SECTIONS: Dict[str, Dict[str, type]] = {
    "experiment": {
        "algorithm": str,
        "env": str,
        "seed": int,
        "episodes": int,
        "out_dir": str,
        "grid_size": int,
        "sparse_reward": bool,
    },
    "model": {"mode": str, "locality": int, "n_qubits": int, "n_layers": int},
    "dqn": {
        "gamma": float,
        "eps_start": float,
        "eps_end": float,
        "eps_decay": float,
        "batch_size": int,
        "capacity": int,
        "target_period": int,
        "update_every": int,
    },
    "a3c": {
        "workers": int,
        "n_step": int,
        "gamma": float,
        "value_weight": float,
        "entropy_weight": float,
        "grad_clip": float,
        "audit": bool,
    },
}

_MODE_ALIASES = {
    "ano_with_rotation": Mode.ANO_WITH_ROTATION,
    "rotation_only": Mode.ROTATION_ONLY,
    "measurement_only": Mode.MEASUREMENT_ONLY,
}


def parse_config(text: str, seed_override: Optional[int] = None) -> ExperimentConfig:
    """Parse and validate; reports every violation, not just the first."""
    parser = configparser.ConfigParser()
    violations: List[str] = []
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ValidationError([f"malformed config: {exc}"]) from exc

    values: Dict[str, object] = {}
    locality_given = False
    for section in parser.sections():
        if section not in _SECTIONS:
            violations.append(f"unknown section [{section}]")
            continue
        for key, raw in parser.items(section):
            spec = _SECTIONS[section].get(key)
            if spec is None:
                violations.append(f"unknown key {section}.{key}")
                continue
            try:
                if spec is bool:
                    values[key] = raw.strip().lower() in ("1", "true", "yes", "on")
                else:
                    values[key] = spec(raw)
            except ValueError:
                violations.append(
                    f"{section}.{key}: cannot parse {raw!r} as {spec.__name__}"
                )
            if section == "model" and key == "locality":
                locality_given = True

    if seed_override is not None:
        values["seed"] = int(seed_override)
    if "seed" not in values:
        violations.append("experiment.seed: required (no wall-clock seeding)")

    mode_raw = values.pop("mode", "ano_with_rotation")
    mode = _MODE_ALIASES.get(str(mode_raw))
    if mode is None:
        violations.append(f"model.mode: unknown mode {mode_raw!r}")
        mode = Mode.ANO_WITH_ROTATION
    values["mode"] = mode

    config = ExperimentConfig(**{**values, "seed": int(values.get("seed", 0))})

    if config.algorithm not in ("dqn", "a3c"):
        violations.append(f"experiment.algorithm: unknown {config.algorithm!r}")
    if config.env not in ENV_ACTIONS:
        violations.append(f"experiment.env: unknown {config.env!r}")
    if config.episodes < 0:
        violations.append("experiment.episodes: must be >= 0")
    if not 1 <= config.n_qubits <= 8:
        violations.append("model.n_qubits: must be in [1, 8]")
    if mode is Mode.ROTATION_ONLY and locality_given:
        violations.append(
            "model.locality: rotation_only uses fixed Pauli Z; locality must not be set"
        )
    if mode.uses_ano and config.locality > config.n_qubits:
        violations.append("model.locality: locality exceeds qubit count")
    if mode.uses_ano and config.locality < 1:
        violations.append("model.locality: must be >= 1")
    if config.env in ENV_ACTIONS and config.n_actions() > config.n_qubits:
        violations.append(
            "model.n_qubits: fewer qubits than actions (one logit per window)"
        )
    if not 0.0 <= config.gamma <= 1.0:
        violations.append("gamma: must be in [0, 1]")
    if config.eps_end > config.eps_start:
        violations.append("dqn.eps_end: must be <= eps_start")
    if config.workers < 1:
        violations.append("a3c.workers: must be >= 1")

    if violations:
        raise ValidationError(violations)
    return config


def render_config(config: ExperimentConfig) -> str:
    parser = configparser.ConfigParser()
    data = asdict(config)
    data["mode"] = config.mode.value
    for section, keys in _SECTIONS.items():
        parser[section] = {}
        for key in keys:
            if section == "model" and key == "locality" and not config.mode.uses_ano:
                continue
            parser[section][key] = str(data[key])
    out = io.StringIO()
    parser.write(out)
    return out.getvalue()


@dataclass
class RunRecord:
    config: ExperimentConfig
    rows: List[List[object]] = field(default_factory=list)
    header: List[str] = field(default_factory=list)
    csv_path: Optional[str] = None
    duration_s: float = 0.0
    code_version: str = CODE_VERSION
    name: Optional[str] = None

    def rewards(self) -> List[float]:
        col = self.header.index("reward")
        return [float(r[col]) for r in self.rows]

    def label(self) -> str:
        if self.name:
            return self.name
        return f"{self.config.algorithm}/{self.config.env}/{self.config.mode.value}/seed{self.config.seed}"


def _csv_name(config: ExperimentConfig) -> str:
    return (
        f"{config.algorithm}_{config.env}_{config.mode.value}"
        f"_seed{config.seed}.csv"
    )


def run_experiment(
    config: ExperimentConfig, out_dir: Optional[str] = None
) -> RunRecord:
    """Dispatch to the DQN or A3C driver, streaming rows to CSV."""
    out = Path(out_dir if out_dir is not None else config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / _csv_name(config)
    header = DQN_HEADER if config.algorithm == "dqn" else A3C_HEADER
    record = RunRecord(config=config, header=list(header), csv_path=str(path))
    start = time.monotonic()
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        fh.flush()

        def write(row: List[object]) -> None:
            record.rows.append(row)
            fh.write(",".join(str(v) for v in row) + "\n")
            fh.flush()

        if config.algorithm == "dqn":
            dqn_mod.run_dqn(
                config.dqn_config(),
                config.env,
                config.model_config(),
                config.seed,
                env=make_env(
                    config.env,
                    seed=config.seed,
                    grid_size=config.grid_size,
                    sparse_reward=config.sparse_reward,
                ),
                on_episode=lambda r: write(
                    [r.episode, r.reward, r.epsilon, r.mean_loss]
                ),
            )
        else:
            actor_cfg = config.model_config()
            critic_cfg = config.model_config(n_outputs=1)
            a3c_mod.run_a3c(
                config.a3c_config(),
                config.env,
                actor_cfg,
                critic_cfg,
                config.seed,
                on_row=lambda r: write([r.global_episode, r.worker, r.reward]),
                env_factory=lambda: make_env(
                    config.env,
                    seed=config.seed,
                    grid_size=config.grid_size,
                    sparse_reward=config.sparse_reward,
                ),
            )
    record.duration_s = time.monotonic() - start
    return record


def moving_average(
    series: Sequence[float], window: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Trailing mean and sample standard deviation over ``window`` points.

    Points before a full window use the available prefix; a single-point
    window has zero deviation.
    """
    if window < 1:
        raise ValidationError(["moving_average window must be >= 1"])
    series = np.asarray(series, dtype=np.float64)
    means = np.zeros(len(series))
    stds = np.zeros(len(series))
    for i in range(len(series)):
        chunk = series[max(0, i - window + 1) : i + 1]
        means[i] = chunk.mean()
        stds[i] = chunk.std(ddof=1) if len(chunk) > 1 else 0.0
    return means, stds


# ---------------------------------------------------------------------------
# SVG emission (hand-rolled: diff-able, dependency-free vector output).
# ---------------------------------------------------------------------------

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def emit_plot(
    records: Sequence[RunRecord],
    path: str,
    window: int = 100,
    width: int = 720,
    height: int = 480,
) -> None:
    """Reward curves (trailing moving average) with +-1 sigma bands."""
    if not records:
        raise ValidationError(["emit_plot needs at least one run record"])
    margin = 60
    plot_w = width - 2 * margin
    plot_h = height - 2 * margin
    curves = []
    for record in records:
        rewards = record.rewards()
        means, stds = moving_average(rewards, window) if rewards else (
            np.zeros(0),
            np.zeros(0),
        )
        curves.append((record.label(), means, stds))
    xmax = max((len(m) for _, m, _ in curves), default=1)
    xmax = max(xmax, 2)
    lo = min((float(np.min(m - s)) for _, m, s in curves if len(m)), default=0.0)
    hi = max((float(np.max(m + s)) for _, m, s in curves if len(m)), default=1.0)
    if hi <= lo:
        hi = lo + 1.0

    def sx(i: float) -> float:
        return margin + plot_w * i / (xmax - 1)

    def sy(v: float) -> float:
        return margin + plot_h * (1.0 - (v - lo) / (hi - lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="{height - 15}" text-anchor="middle" '
        f'font-size="14">episode</text>',
        f'<text x="18" y="{height / 2:.1f}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 18 {height / 2:.1f})">reward (window {window})</text>',
        f'<text x="{margin}" y="{height - margin + 20}" font-size="12">0</text>',
        f'<text x="{width - margin}" y="{height - margin + 20}" '
        f'text-anchor="end" font-size="12">{xmax - 1}</text>',
        f'<text x="{margin - 8}" y="{height - margin}" text-anchor="end" '
        f'font-size="12">{lo:.3g}</text>',
        f'<text x="{margin - 8}" y="{margin + 4}" text-anchor="end" '
        f'font-size="12">{hi:.3g}</text>',
    ]
    for idx, (label, means, stds) in enumerate(curves):
        color = _PALETTE[idx % len(_PALETTE)]
        if len(means) == 0:
            continue
        upper = [f"{sx(i):.2f},{sy(means[i] + stds[i]):.2f}" for i in range(len(means))]
        lower = [
            f"{sx(i):.2f},{sy(means[i] - stds[i]):.2f}"
            for i in range(len(means) - 1, -1, -1)
        ]
        parts.append(
            f'<polygon points="{" ".join(upper + lower)}" fill="{color}" '
            f'opacity="0.18" stroke="none"/>'
        )
        pts = " ".join(f"{sx(i):.2f},{sy(means[i]):.2f}" for i in range(len(means)))
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        legend_y = margin + 18 * idx + 6
        parts.append(
            f'<line x1="{width - margin - 150}" y1="{legend_y}" '
            f'x2="{width - margin - 120}" y2="{legend_y}" stroke="{color}" '
            f'stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{width - margin - 112}" y="{legend_y + 4}" '
            f'font-size="11">{label}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts))


def read_csv_record(path: str) -> RunRecord:
    """Rehydrate the reward series of a previously written CSV."""
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    config = ExperimentConfig(algorithm="dqn" if header == DQN_HEADER else "a3c")
    record = RunRecord(
        config=config, header=header, csv_path=str(path), name=Path(path).stem
    )
    record.rows = rows
    return record
