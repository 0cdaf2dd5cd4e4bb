"""Sweep orchestration: configs, cell execution, CSV and manifest output.

A sweep walks the (jitter width, photon number) grid over a fixed state
sample, runs the full simulate-and-reconstruct pipeline per state, and
aggregates metrics into one CSV row per cell.  Randomness is derived per
(master seed, state index, setting index), so results are byte-identical
for a given config and seed no matter how the work is scheduled.
"""

from __future__ import annotations

import dataclasses
import json
import math
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .counts import (
    MAX_SEED,
    NoiseConfig,
    coincidence_count_set,
    qubit_count_set,
)
from .dynamics import DynamicsParams
from .estimator import EstimatorConfig, estimate_state
from .measurement import (
    JitterModel,
    MeasurementSchedule,
    bloch_trajectory,
    evolved_matrices,
    ic_povm_schedule,
    jittered_matrices,
    polarization_projector,
)
from .metrics import aggregate, chsh_guarantee, concurrence, fidelity, trace_distance
from .states import (
    bell_state,
    bloch_state,
    orthogonal_pairs,
    sample_bell_states,
    sample_mixed_qubits,
    sample_pure_qubits,
)

SWEEP_MODES = ("qubit-mixed", "qubit-pure", "qubit-orthogonal-pairs", "entangled")
TRAJECTORY_OPERATORS = ("H", "V", "D", "A", "R", "L")

CSV_HEADER = "sigma_over_T,n_photons,metric,mean,sd,stderr,n_states"
COUNTS_HEADER = "state_id,t_i_over_T,t_j_over_T,expected,measured"
TRAJECTORY_HEADER = "t_over_T,x,y,z,purity"

# Fraction of non-converged estimates above which a cell gets flagged.
CONVERGENCE_WARN_FRACTION = 0.1


@dataclass(frozen=True)
class SampleSizes:
    """Grid sizes; only the fields relevant to a mode are set."""

    n_r: int | None = None
    n_theta: int | None = None
    n_phi: int | None = None
    n_states: int | None = None


DESK_SAMPLES = {
    "qubit-mixed": SampleSizes(n_r=8, n_theta=8, n_phi=8),
    "qubit-pure": SampleSizes(n_theta=8, n_phi=8),
    "qubit-orthogonal-pairs": SampleSizes(n_theta=8, n_phi=8),
    "entangled": SampleSizes(n_states=50),
}

PAPER_SAMPLES = {
    "qubit-mixed": SampleSizes(n_r=21, n_theta=21, n_phi=20),
    "qubit-pure": SampleSizes(n_theta=21, n_phi=20),
    "qubit-orthogonal-pairs": SampleSizes(n_theta=21, n_phi=20),
    "entangled": SampleSizes(n_states=200),
}

_SAMPLE_KEYS = {
    "qubit-mixed": ("n_r", "n_theta", "n_phi"),
    "qubit-pure": ("n_theta", "n_phi"),
    "qubit-orthogonal-pairs": ("n_theta", "n_phi"),
    "entangled": ("n_states",),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep: mode, grid axes, sample sizes, seed, estimator, output."""

    mode: str
    sigma_list: tuple[float, ...]
    photon_list: tuple[float, ...]
    seed: int = 0
    out_dir: str = "results"
    sample: SampleSizes | None = None
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    periods: tuple[float, float, float] = (4.0, 1.0, 2.0)

    def __post_init__(self):
        if self.mode not in SWEEP_MODES:
            raise ValueError(f"mode must be one of {SWEEP_MODES}, got {self.mode!r}")
        sigmas = tuple(float(s) for s in self.sigma_list)
        if not sigmas or any(not (math.isfinite(s) and s >= 0) for s in sigmas):
            raise ValueError("sigma_list must be nonempty with nonnegative finite entries")
        photons = tuple(float(n) for n in self.photon_list)
        if not photons or any(not (math.isfinite(n) and n > 0) for n in photons):
            raise ValueError("photon_list must be nonempty with positive entries")
        if not (0 <= int(self.seed) <= MAX_SEED):
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        sample = self.sample if self.sample is not None else DESK_SAMPLES[self.mode]
        for key in _SAMPLE_KEYS[self.mode]:
            value = getattr(sample, key)
            if value is None or int(value) < 1:
                raise ValueError(f"sample.{key} must be a positive integer for mode {self.mode}")
        DynamicsParams(*self.periods)  # validates
        object.__setattr__(self, "sigma_list", sigmas)
        object.__setattr__(self, "photon_list", photons)
        object.__setattr__(self, "sample", sample)
        object.__setattr__(self, "periods", tuple(float(p) for p in self.periods))

    @property
    def dynamics(self) -> DynamicsParams:
        return DynamicsParams(*self.periods)


@dataclass(frozen=True)
class TrajectoryConfig:
    """Bloch-trajectory emission: which projector, jitter width, time grid."""

    operator: str = "H"
    sigma_over_T: float = 0.0
    points: int = 500
    t_max_over_T: float = 2.0
    seed: int = 0
    out_dir: str = "results"
    periods: tuple[float, float, float] = (4.0, 1.0, 2.0)

    def __post_init__(self):
        if self.operator not in TRAJECTORY_OPERATORS:
            raise ValueError(f"operator must be one of {TRAJECTORY_OPERATORS}")
        if not (math.isfinite(self.sigma_over_T) and self.sigma_over_T >= 0):
            raise ValueError("sigma_over_T must be nonnegative")
        if self.points < 2:
            raise ValueError("points must be at least 2")
        if not (math.isfinite(self.t_max_over_T) and self.t_max_over_T > 0):
            raise ValueError("t_max_over_T must be positive")
        DynamicsParams(*self.periods)
        object.__setattr__(self, "periods", tuple(float(p) for p in self.periods))

    @property
    def dynamics(self) -> DynamicsParams:
        return DynamicsParams(*self.periods)


@dataclass(frozen=True)
class SweepRow:
    sigma: float
    n_photons: float
    metric: str
    mean: float
    sd: float
    stderr: float
    n: int


def _reject_unknown(mapping: dict, allowed, where: str):
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ValueError(f"unknown {where} keys: {', '.join(unknown)}")


def _build_sample(mode: str, raw: dict) -> SampleSizes:
    _reject_unknown(raw, _SAMPLE_KEYS[mode], f"sample ({mode})")
    merged = dataclasses.asdict(DESK_SAMPLES[mode])
    merged.update({k: int(v) for k, v in raw.items()})
    return SampleSizes(**merged)


def load_config(source, *, seed=None, out_dir=None, paper_scale=False):
    """Parse a JSON config into an ExperimentConfig or TrajectoryConfig.

    ``source`` is a path or an already-parsed dict.  Unknown keys raise.
    ``seed`` / ``out_dir`` override the config; ``paper_scale`` swaps in the
    full-size sample grids.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    else:
        raw = dict(source)
    if not isinstance(raw, dict):
        raise ValueError("config document must be a JSON object")
    mode = raw.get("mode")
    if mode is None:
        raise ValueError("config is missing the required 'mode' key")

    if mode == "trajectory":
        allowed = ("mode", "operator", "sigma_over_T", "points", "t_max_over_T", "seed", "out_dir", "periods")
        _reject_unknown(raw, allowed, "config")
        kwargs = {k: raw[k] for k in allowed[1:] if k in raw}
        if "periods" in kwargs:
            kwargs["periods"] = tuple(kwargs["periods"])
        cfg = TrajectoryConfig(**kwargs)
        if seed is not None:
            cfg = dataclasses.replace(cfg, seed=int(seed))
        if out_dir is not None:
            cfg = dataclasses.replace(cfg, out_dir=str(out_dir))
        return cfg

    if mode not in SWEEP_MODES:
        raise ValueError(f"mode must be 'trajectory' or one of {SWEEP_MODES}, got {mode!r}")
    allowed = ("mode", "sigma_list", "photon_list", "seed", "out_dir", "sample", "estimator", "periods")
    _reject_unknown(raw, allowed, "config")
    for key in ("sigma_list", "photon_list"):
        if key not in raw:
            raise ValueError(f"config is missing the required {key!r} key")
    est_raw = raw.get("estimator", {})
    est_fields = tuple(f.name for f in dataclasses.fields(EstimatorConfig))
    _reject_unknown(est_raw, est_fields, "estimator")
    sample = _build_sample(mode, raw.get("sample", {})) if "sample" in raw else None
    cfg = ExperimentConfig(
        mode=mode,
        sigma_list=tuple(raw["sigma_list"]),
        photon_list=tuple(raw["photon_list"]),
        seed=int(raw.get("seed", 0)),
        out_dir=str(raw.get("out_dir", "results")),
        sample=sample,
        estimator=EstimatorConfig(**est_raw),
        periods=tuple(raw.get("periods", (4.0, 1.0, 2.0))),
    )
    if paper_scale:
        cfg = dataclasses.replace(cfg, sample=PAPER_SAMPLES[mode])
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=int(seed))
    if out_dir is not None:
        cfg = dataclasses.replace(cfg, out_dir=str(out_dir))
    return cfg


def estimation_rng(seed: int, state_index: int) -> np.random.Generator:
    """Restart-perturbation stream, disjoint from the counting streams."""
    return np.random.default_rng([int(seed), 1, int(state_index)])


# ---------------------------------------------------------------------------
# per-state workers (module level so process pools can pickle them)


def _qubit_worker(task):
    (bloch, state_index, sigma, n_photons, seed, est_cfg, params, instants, jit_mats, ideal_mats) = task
    rho_in = bloch_state(bloch)
    noise = NoiseConfig(mean_photons=n_photons, seed=seed, poisson_enabled=True)
    records = qubit_count_set(
        rho_in,
        params,
        JitterModel(sigma),
        noise,
        state_index=state_index,
        schedule=MeasurementSchedule(instants),
        jittered_mats=jit_mats,
        ideal_mats=ideal_mats,
    )
    est = estimate_state(
        records, 2, est_cfg, estimation_rng(seed, state_index), mean_photons=n_photons, dynamics=params
    )
    fid = fidelity(rho_in, est.rho_out)
    return state_index, fid, est, records


def _pair_worker(task):
    (pair, pair_index, sigma, n_photons, seed, est_cfg, params, instants, jit_mats, ideal_mats) = task
    outputs = []
    for offset, bloch in enumerate(pair):
        state_index = 2 * pair_index + offset
        _, fid, est, records = _qubit_worker(
            (bloch, state_index, sigma, n_photons, seed, est_cfg, params, instants, jit_mats, ideal_mats)
        )
        outputs.append((state_index, fid, est, records))
    distance = trace_distance(outputs[0][2].rho_out, outputs[1][2].rho_out)
    return pair_index, distance, outputs


def _entangled_worker(task):
    (bell, state_index, sigma, n_photons, seed, est_cfg, params, instants, jit_mats, ideal_mats) = task
    rho_in = bell_state(bell)
    noise = NoiseConfig(mean_photons=n_photons, seed=seed, poisson_enabled=True)
    records = coincidence_count_set(
        rho_in,
        params,
        JitterModel(sigma),
        noise,
        state_index=state_index,
        schedule=MeasurementSchedule(instants),
        jittered_mats=jit_mats,
        ideal_mats=ideal_mats,
    )
    est = estimate_state(
        records, 4, est_cfg, estimation_rng(seed, state_index), mean_photons=n_photons, dynamics=params
    )
    fid = fidelity(rho_in, est.rho_out)
    conc = concurrence(est.rho_out)
    return state_index, fid, conc, est, records


def _map_tasks(worker, tasks, workers: int):
    if workers <= 1:
        return [worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, len(tasks) // (4 * workers))
        return list(pool.map(worker, tasks, chunksize=chunk))


# ---------------------------------------------------------------------------
# sweep drivers


def _arm_stacks(params, sigma, schedule):
    proj = polarization_projector("H")
    times = np.asarray(schedule.instants)
    ideal = evolved_matrices(proj, params, times)
    smeared = jittered_matrices(proj, params, JitterModel(sigma), times)
    return ideal, smeared


def _warning_row(sigma, n_photons, converged_flags) -> SweepRow | None:
    flags = np.asarray(converged_flags, dtype=bool)
    frac = 1.0 - float(flags.mean())
    if frac > CONVERGENCE_WARN_FRACTION:
        return SweepRow(sigma, n_photons, "convergence_warning", frac, 0.0, 0.0, int(flags.size))
    return None


def _summary_row(sigma, n_photons, name, values) -> SweepRow:
    agg = aggregate(values, name)
    return SweepRow(sigma, n_photons, name, agg.mean, agg.sd, agg.stderr, agg.n)


class _CellArtifacts:
    """Optional per-cell side outputs: raw counts CSV and estimate log."""

    def __init__(self, directory, dump_counts: bool, state_log: bool):
        self.directory = Path(directory) if directory is not None else None
        self.dump_counts = dump_counts and self.directory is not None
        self.state_log = state_log and self.directory is not None

    def write(self, sigma, n_photons, per_state):
        if not (self.dump_counts or self.state_log):
            return
        tag = f"sigma{sigma:g}_N{n_photons:g}"
        if self.dump_counts:
            lines = [COUNTS_HEADER]
            for state_index, _, _, records in per_state:
                for rec in records:
                    t_second = _fmt(rec.times[1]) if len(rec.times) == 2 else ""
                    lines.append(
                        f"{state_index},{_fmt(rec.times[0])},{t_second},"
                        f"{_fmt(rec.expected)},{_fmt(rec.measured)}"
                    )
            (self.directory / f"counts_{tag}.csv").write_text("\n".join(lines) + "\n")
        if self.state_log:
            lines = []
            for state_index, fid, est, _ in per_state:
                lines.append(
                    json.dumps(
                        {
                            "state_id": state_index,
                            "objective": est.objective,
                            "iterations": est.iterations,
                            "converged": est.converged,
                            "fidelity": fid,
                        },
                        sort_keys=True,
                    )
                )
            (self.directory / f"estimates_{tag}.jsonl").write_text("\n".join(lines) + "\n")


def run_qubit_sweep(
    cfg: ExperimentConfig,
    *,
    workers: int = 1,
    artifact_dir=None,
    dump_counts: bool = False,
    state_log: bool = False,
) -> list[SweepRow]:
    """Fidelity sweep over mixed-ball or pure-sphere state grids."""
    if cfg.mode not in ("qubit-mixed", "qubit-pure"):
        raise ValueError(f"run_qubit_sweep expects a qubit mode, got {cfg.mode!r}")
    if cfg.mode == "qubit-mixed":
        sample = sample_mixed_qubits(cfg.sample.n_r, cfg.sample.n_theta, cfg.sample.n_phi)
    else:
        sample = sample_pure_qubits(cfg.sample.n_theta, cfg.sample.n_phi)
    schedule = ic_povm_schedule()
    params = cfg.dynamics
    artifacts = _CellArtifacts(artifact_dir, dump_counts, state_log)
    rows = []
    for sigma in cfg.sigma_list:
        ideal, smeared = _arm_stacks(params, sigma, schedule)
        for n_photons in cfg.photon_list:
            tasks = [
                (b, i, sigma, n_photons, cfg.seed, cfg.estimator, params, schedule.instants, smeared, ideal)
                for i, b in enumerate(sample)
            ]
            per_state = _map_tasks(_qubit_worker, tasks, workers)
            rows.append(_summary_row(sigma, n_photons, "fidelity", [r[1] for r in per_state]))
            warning = _warning_row(sigma, n_photons, [r[2].converged for r in per_state])
            if warning:
                rows.append(warning)
            artifacts.write(sigma, n_photons, per_state)
    return rows


def run_orthogonality_sweep(
    cfg: ExperimentConfig,
    *,
    workers: int = 1,
    artifact_dir=None,
    dump_counts: bool = False,
    state_log: bool = False,
) -> list[SweepRow]:
    """Trace distance between independently reconstructed orthogonal partners."""
    if cfg.mode != "qubit-orthogonal-pairs":
        raise ValueError(f"run_orthogonality_sweep expects qubit-orthogonal-pairs, got {cfg.mode!r}")
    pairs = orthogonal_pairs(cfg.sample.n_theta, cfg.sample.n_phi)
    schedule = ic_povm_schedule()
    params = cfg.dynamics
    artifacts = _CellArtifacts(artifact_dir, dump_counts, state_log)
    rows = []
    for sigma in cfg.sigma_list:
        ideal, smeared = _arm_stacks(params, sigma, schedule)
        for n_photons in cfg.photon_list:
            tasks = [
                (pair, i, sigma, n_photons, cfg.seed, cfg.estimator, params, schedule.instants, smeared, ideal)
                for i, pair in enumerate(pairs)
            ]
            per_pair = _map_tasks(_pair_worker, tasks, workers)
            rows.append(_summary_row(sigma, n_photons, "trace_distance", [r[1] for r in per_pair]))
            flat = [entry for r in per_pair for entry in r[2]]
            warning = _warning_row(sigma, n_photons, [e[2].converged for e in flat])
            if warning:
                rows.append(warning)
            artifacts.write(sigma, n_photons, flat)
    return rows


def run_entangled_sweep(
    cfg: ExperimentConfig,
    *,
    workers: int = 1,
    artifact_dir=None,
    dump_counts: bool = False,
    state_log: bool = False,
) -> list[SweepRow]:
    """Concurrence, fidelity, and the three-sigma CHSH guarantee for pairs."""
    if cfg.mode != "entangled":
        raise ValueError(f"run_entangled_sweep expects entangled mode, got {cfg.mode!r}")
    sample = sample_bell_states(cfg.sample.n_states)
    schedule = ic_povm_schedule()
    params = cfg.dynamics
    artifacts = _CellArtifacts(artifact_dir, dump_counts, state_log)
    rows = []
    for sigma in cfg.sigma_list:
        ideal, smeared = _arm_stacks(params, sigma, schedule)
        for n_photons in cfg.photon_list:
            tasks = [
                (b, i, sigma, n_photons, cfg.seed, cfg.estimator, params, schedule.instants, smeared, ideal)
                for i, b in enumerate(sample)
            ]
            per_state = _map_tasks(_entangled_worker, tasks, workers)
            conc_summary = aggregate([r[2] for r in per_state], "concurrence")
            rows.append(
                SweepRow(sigma, n_photons, "concurrence", conc_summary.mean, conc_summary.sd,
                         conc_summary.stderr, conc_summary.n)
            )
            rows.append(_summary_row(sigma, n_photons, "fidelity", [r[1] for r in per_state]))
            rows.append(
                SweepRow(sigma, n_photons, "chsh_guarantee",
                         1.0 if chsh_guarantee(conc_summary) else 0.0, 0.0, 0.0, conc_summary.n)
            )
            warning = _warning_row(sigma, n_photons, [r[3].converged for r in per_state])
            if warning:
                rows.append(warning)
            artifacts.write(sigma, n_photons, [(r[0], r[1], r[3], r[4]) for r in per_state])
    return rows


def emit_trajectory(cfg: TrajectoryConfig, out_dir=None) -> Path:
    """Write the Bloch-trajectory CSV and return its path."""
    directory = Path(out_dir if out_dir is not None else cfg.out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    grid = np.linspace(0.0, cfg.t_max_over_T, cfg.points)
    table = bloch_trajectory(
        polarization_projector(cfg.operator), cfg.dynamics, JitterModel(cfg.sigma_over_T), grid
    )
    lines = [TRAJECTORY_HEADER]
    for row in table:
        lines.append(",".join(f"{value:.6g}" for value in row))
    path = directory / "trajectory.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


# ---------------------------------------------------------------------------
# output documents


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def sweep_rows_to_csv(rows: list[SweepRow]) -> str:
    lines = [CSV_HEADER]
    for row in rows:
        lines.append(
            f"{_fmt(row.sigma)},{_fmt(row.n_photons)},{row.metric},"
            f"{_fmt(row.mean)},{_fmt(row.sd)},{_fmt(row.stderr)},{row.n}"
        )
    return "\n".join(lines) + "\n"


def write_sweep_csv(path, rows: list[SweepRow]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(sweep_rows_to_csv(rows))
    return path


def _config_document(cfg) -> dict:
    doc = dataclasses.asdict(cfg)
    for key, value in doc.items():
        if isinstance(value, tuple):
            doc[key] = list(value)
    return doc


def run_manifest(command: str, cfg) -> dict:
    """Reproducibility record: the resolved config plus tool versions."""
    return {
        "command": command,
        "config": _config_document(cfg),
        "versions": {
            "timetomo": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }


def write_manifest(path, manifest: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
