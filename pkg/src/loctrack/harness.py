"""Seeded Monte Carlo campaign driver and figure-data emission.

A campaign turns a JSON experiment description into a long-format result
table plus a manifest.  Runs are independent work items keyed by
``base_seed + run_index``; aggregation is an ordered reduce over run
indices, so the size of the worker pool never changes the output bytes.
Reruns with the same spec and seed are byte-identical.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .asymptotics import ASYMPTOTIC_LARGE, ASYMPTOTIC_SMALL
from .coupling import build_ptpm, eoc_report, split_d_a
from .errors import CampaignAborted, SchemaMismatch
from .fim import assemble_efim, measurement_fim, prior_fim
from .recursive import constant_inputs, run_recursion, stationary_point
from .scenario import (
    PRIOR_L1,
    AlignedPhases,
    RandomPhases,
    ScenarioConfig,
    load_scenario,
    prior_model,
    random_walk_trajectory,
    sample_trajectory_ensemble,
)

KIND_EOC_VS_SNR = "EOC_VS_SNR"
KIND_EOC_VS_NUM_RIS = "EOC_VS_NUM_RIS"
KIND_EP_CONVERGENCE = "EP_CONVERGENCE"
KIND_ASYMPTOTIC_SPATIAL = "ASYMPTOTIC_SPATIAL"
KIND_ASYMPTOTIC_TEMPORAL = "ASYMPTOTIC_TEMPORAL"
KIND_TRAJECTORY = "TRAJECTORY"

EXPERIMENT_KINDS = (
    KIND_EOC_VS_SNR,
    KIND_EOC_VS_NUM_RIS,
    KIND_EP_CONVERGENCE,
    KIND_ASYMPTOTIC_SPATIAL,
    KIND_ASYMPTOTIC_TEMPORAL,
    KIND_TRAJECTORY,
)

SWEEP_SNR_DB = "snr-db"
SWEEP_SIGMA_S = "sigma-s-inv2"
SWEEP_SIGMA_T = "sigma-t-inv2"
SWEEP_NUM_RIS = "num-ris"

# Which sweep parameters each experiment kind accepts.  TRAJECTORY runs
# take no sweep at all.
_SWEEPABLE = {
    KIND_EOC_VS_SNR: (SWEEP_SNR_DB, SWEEP_SIGMA_S, SWEEP_SIGMA_T),
    KIND_EOC_VS_NUM_RIS: (SWEEP_NUM_RIS,),
    KIND_EP_CONVERGENCE: (SWEEP_SIGMA_T, SWEEP_SIGMA_S, SWEEP_SNR_DB),
    KIND_ASYMPTOTIC_SPATIAL: (SWEEP_SIGMA_S,),
    KIND_ASYMPTOTIC_TEMPORAL: (SWEEP_SIGMA_T,),
    KIND_TRAJECTORY: (),
}

FIGURE_KINDS = {
    "fig3": KIND_TRAJECTORY,
    "fig4": KIND_EOC_VS_SNR,
    "fig5": KIND_EOC_VS_SNR,
    "fig6": KIND_EOC_VS_NUM_RIS,
    "fig8": KIND_EP_CONVERGENCE,
    "fig9": KIND_ASYMPTOTIC_SPATIAL,
    "fig10": KIND_ASYMPTOTIC_TEMPORAL,
}

THREADS_ENV = "LOCTRACK_THREADS"
FAILURE_ABORT_FRACTION = 0.1
TREND_MARGIN = 1e-9

# Deviation sample count used to Monte Carlo the prior Hessian when a
# campaign scenario carries the non-Gaussian prior.
_L1_ENSEMBLE = 100


def _fmt(value: float) -> str:
    """Shortest round-trip decimal form, for byte-stable CSV output."""
    return repr(float(value))


@dataclasses.dataclass(frozen=True)
class ExperimentSpec:
    """One campaign: scenario, kind, sweep grid, seeds, output location.

    ``disturbance_steps`` and ``constant_from_step`` use 1-based step
    labels matching the CSV convention; step handling converts to 0-based
    indices internally.
    """

    scenario_path: str
    kind: str
    sweep_parameter: str | None
    sweep_values: tuple
    num_monte_carlo: int
    base_seed: int
    output_dir: str
    snr_db_offset: float = 0.0
    disturbance_steps: tuple = ()
    disturbance_scale: float = 1.0
    constant_from_step: int | None = 2

    def __post_init__(self) -> None:
        if self.kind not in EXPERIMENT_KINDS:
            raise SchemaMismatch(f"unknown experiment kind {self.kind!r}")
        if self.num_monte_carlo < 1:
            raise SchemaMismatch("num-monte-carlo must be at least 1")
        values = tuple(float(v) for v in self.sweep_values)
        object.__setattr__(self, "sweep_values", values)
        if any(not math.isfinite(v) for v in values):
            raise SchemaMismatch("sweep values must be finite")
        if list(values) != sorted(values):
            raise SchemaMismatch("sweep values must be sorted ascending")
        allowed = _SWEEPABLE[self.kind]
        if self.sweep_parameter is None:
            if values:
                raise SchemaMismatch("sweep values given without a parameter")
        elif self.sweep_parameter not in allowed:
            raise SchemaMismatch(
                f"kind {self.kind} cannot sweep {self.sweep_parameter!r}"
            )
        elif not values:
            raise SchemaMismatch("sweep parameter given without values")
        object.__setattr__(
            self, "disturbance_steps", tuple(int(s) for s in self.disturbance_steps)
        )


def experiment_from_json(payload: dict, base_dir: str = ".") -> ExperimentSpec:
    """Build a spec from its JSON form; relative paths resolve against
    ``base_dir`` (normally the directory holding the spec file)."""
    for key in ("scenario", "kind", "num-monte-carlo", "base-seed", "output-dir"):
        if key not in payload:
            raise SchemaMismatch(f"experiment spec missing key {key!r}")

    def resolve(path):
        return path if os.path.isabs(path) else os.path.join(base_dir, path)

    sweep = payload.get("sweep") or {}
    disturbance = payload.get("disturbance") or {}
    return ExperimentSpec(
        scenario_path=resolve(payload["scenario"]),
        kind=payload["kind"],
        sweep_parameter=sweep.get("parameter"),
        sweep_values=tuple(sweep.get("values", ())),
        num_monte_carlo=int(payload["num-monte-carlo"]),
        base_seed=int(payload["base-seed"]),
        output_dir=resolve(payload["output-dir"]),
        snr_db_offset=float(payload.get("snr-db-offset", 0.0)),
        disturbance_steps=tuple(disturbance.get("steps", ())),
        disturbance_scale=float(disturbance.get("scale", 1.0)),
        constant_from_step=payload.get("constant-from-step", 2),
    )


def load_experiment(path: str) -> ExperimentSpec:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return experiment_from_json(payload, base_dir=os.path.dirname(os.path.abspath(path)))


@dataclasses.dataclass(frozen=True)
class ResultRow:
    """One aggregated metric.  ``t`` and ``k`` are 1-based labels; 0 means
    the metric aggregates over that axis."""

    experiment: str
    sweep_value: float
    t: int
    k: int
    metric_name: str
    mean: float
    stderr: float
    n: int


@dataclasses.dataclass(frozen=True)
class ResultTable:
    """Long-format campaign output plus its manifest."""

    rows: tuple
    manifest: dict

    @property
    def experiment(self) -> str:
        return self.manifest["kind"]

    def is_empty(self) -> bool:
        return not self.rows

    def to_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("experiment,sweep_value,t,k,metric_name,mean,stderr,n\n")
            for row in self.rows:
                fh.write(
                    f"{row.experiment},{_fmt(row.sweep_value)},{row.t},{row.k},"
                    f"{row.metric_name},{_fmt(row.mean)},{_fmt(row.stderr)},{row.n}\n"
                )

    @classmethod
    def from_csv(cls, path: str) -> "ResultTable":
        manifest_path = os.path.join(os.path.dirname(os.path.abspath(path)), "manifest.json")
        if not os.path.exists(manifest_path):
            raise SchemaMismatch(f"no manifest.json beside {path}")
        with open(manifest_path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        rows = []
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != "experiment,sweep_value,t,k,metric_name,mean,stderr,n":
                raise SchemaMismatch(f"unexpected table header {header!r}")
            for line in fh:
                parts = line.strip().split(",")
                if len(parts) != 8:
                    raise SchemaMismatch(f"malformed table row {line!r}")
                rows.append(
                    ResultRow(
                        experiment=parts[0],
                        sweep_value=float(parts[1]),
                        t=int(parts[2]),
                        k=int(parts[3]),
                        metric_name=parts[4],
                        mean=float(parts[5]),
                        stderr=float(parts[6]),
                        n=int(parts[7]),
                    )
                )
        return cls(rows=tuple(rows), manifest=manifest)


def _worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    if raw.strip():
        return max(1, int(raw))
    return max(1, os.cpu_count() or 1)


def _apply_sweep(config: ScenarioConfig, parameter: str, value: float) -> ScenarioConfig:
    if parameter == SWEEP_SNR_DB:
        return config.with_snr_offset_db(value)
    if parameter == SWEEP_SIGMA_S:
        return config.with_spatial_precision(value)
    if parameter == SWEEP_SIGMA_T:
        return config.with_temporal_precision(value)
    if parameter == SWEEP_NUM_RIS:
        return config.with_num_ris(int(round(value)))
    raise SchemaMismatch(f"unknown sweep parameter {parameter!r}")


def _draw(config: ScenarioConfig, seed: int):
    """Generate one random-walk track; for the deviation prior also draw
    the ensemble the prior Hessian Monte Carlo will consume."""
    trajectory = random_walk_trajectory(config, seed)
    if config.prior_kind == PRIOR_L1:
        return trajectory, sample_trajectory_ensemble(config, _L1_ENSEMBLE, seed)
    return trajectory, None


def _eoc_pipeline(config: ScenarioConfig, trajectory: Trajectory, ensemble):
    mfim = measurement_fim(config, trajectory)
    pfim = prior_fim(
        config, prior_model(config, include_anchor=True), trajectory_ensemble=ensemble
    )
    efim = assemble_efim(mfim, pfim)
    split = split_d_a(efim, mfim, pfim)
    ptpm = build_ptpm(split, mfim)
    return eoc_report(efim, split, ptpm)


def _run_eoc_point(config: ScenarioConfig, seed: int):
    trajectory, ensemble = _draw(config, seed)
    report = _eoc_pipeline(config, trajectory, ensemble)
    return [
        (0, 0, "eoc-mean", report.mean_eoc),
        (0, 0, "bcrb-mean", report.mean_bcrb),
    ]


def _run_num_ris_point(config: ScenarioConfig, seed: int):
    # The prior does not involve the surfaces, so both beam families share
    # one sampled trajectory and differ only in the phase profile.
    trajectory, ensemble = _draw(config, seed)
    out = []
    for mode in ("aligned", "random"):
        profile = AlignedPhases() if mode == "aligned" else RandomPhases(seed)
        cfg = dataclasses.replace(config, ris_phase_profiles=profile)
        report = _eoc_pipeline(cfg, trajectory, ensemble)
        out.append((0, 0, f"eoc-mean-{mode}", report.mean_eoc))
        out.append((0, 0, f"bcrb-mean-{mode}", report.mean_bcrb))
    return out


def _run_recursion_point(config: ScenarioConfig, seed: int, spec: ExperimentSpec,
                         with_theory: bool):
    trajectory, ensemble = _draw(config, seed)
    constant = spec.constant_from_step
    constant0 = None if constant is None else constant - 1
    states = run_recursion(
        config,
        trajectory,
        constant_from_step=constant0,
        disturbance_steps=tuple(s - 1 for s in spec.disturbance_steps),
        disturbance_scale=spec.disturbance_scale,
        trajectory_ensemble=ensemble,
    )
    out = []
    for t_idx, state in enumerate(states):
        out.append((t_idx + 1, 0, "bcrb-mean", state.bcrb_mean))
        out.append((t_idx + 1, 0, "eoc-mean", state.eoc_mean))
    if with_theory and constant0 is not None:
        inputs = constant_inputs(
            config, trajectory, step=constant0, trajectory_ensemble=ensemble
        )
        point = stationary_point(inputs.m_full, inputs.t_full)
        theory = float(np.trace(np.linalg.inv(point.j_star))) / point.j_star.shape[0]
        out.append((0, 0, "theory-bcrb-star", theory))
    return out


def _run_trajectory_point(config: ScenarioConfig, seed: int):
    trajectory, _ = _draw(config, seed)
    out = []
    for t in range(config.num_steps):
        for k in range(config.num_users):
            out.append((t + 1, k + 1, "x", float(trajectory.positions[t, k, 0])))
            out.append((t + 1, k + 1, "y", float(trajectory.positions[t, k, 1])))
    return out


def _run_one(spec: ExperimentSpec, config: ScenarioConfig, seed: int):
    if spec.kind in (KIND_EOC_VS_SNR,):
        return _run_eoc_point(config, seed)
    if spec.kind == KIND_EOC_VS_NUM_RIS:
        return _run_num_ris_point(config, seed)
    if spec.kind == KIND_EP_CONVERGENCE:
        return _run_recursion_point(config, seed, spec, with_theory=True)
    if spec.kind in (KIND_ASYMPTOTIC_SPATIAL, KIND_ASYMPTOTIC_TEMPORAL):
        return _run_recursion_point(config, seed, spec, with_theory=False)
    return _run_trajectory_point(config, seed)


def _uniform_spatial_precision(config: ScenarioConfig):
    values = {p for step in config.spatial_precision for p in step}
    if len(values) == 1:
        return float(next(iter(values)))
    return None


def _uniform_temporal_precision(config: ScenarioConfig):
    cov = np.asarray(config.temporal_covariance)
    if cov.shape[0] == 0:
        return None
    first = cov[0, 0, 0, 0]
    if np.allclose(cov, first * np.broadcast_to(np.eye(2), cov.shape)):
        return float(1.0 / first)
    return None


def trend_warnings(spec: ExperimentSpec, aggregated: dict) -> list:
    """Post-campaign monotonicity screens.  Warnings, not failures: a run
    that breaks an expected trend still produces a valid table."""

    def series(metric):
        points = []
        for value in spec.sweep_values:
            stats = aggregated.get((value, 0, 0, metric))
            if stats is not None:
                points.append((value, stats[0]))
        return points

    def check(metric, direction):
        points = series(metric)
        sign = 1.0 if direction == "nondecreasing" else -1.0
        for (v0, m0), (v1, m1) in zip(points, points[1:]):
            if sign * (m1 - m0) < -TREND_MARGIN:
                warnings.append(
                    f"{metric} not {direction} across {spec.sweep_parameter}: "
                    f"{_fmt(m0)} at {_fmt(v0)} vs {_fmt(m1)} at {_fmt(v1)}"
                )

    warnings: list = []
    if spec.kind == KIND_EOC_VS_SNR and spec.sweep_parameter == SWEEP_SNR_DB:
        check("eoc-mean", "nondecreasing")
        check("bcrb-mean", "nonincreasing")
    elif spec.kind == KIND_EOC_VS_SNR:
        # Tighter prior precision feeds the information matrix, so both the
        # coupling efficiency and the bound move down.
        check("eoc-mean", "nonincreasing")
        check("bcrb-mean", "nonincreasing")
    elif spec.kind == KIND_EOC_VS_NUM_RIS:
        check("eoc-mean-aligned", "nondecreasing")
        check("bcrb-mean-aligned", "nonincreasing")
    return warnings


def run_experiment(spec: ExperimentSpec) -> ResultTable:
    """Execute every sweep value x Monte Carlo run and aggregate.

    Run ``r`` of every sweep value uses seed ``base_seed + r``, so sweep
    points are paired across the grid.  Failures are recorded in the
    manifest and skipped; a failure fraction of 10 percent or more aborts
    the campaign.
    """
    with open(spec.scenario_path, "rb") as fh:
        scenario_bytes = fh.read()
    base_config = load_scenario(spec.scenario_path)
    if spec.snr_db_offset:
        base_config = base_config.with_snr_offset_db(spec.snr_db_offset)

    values = spec.sweep_values if spec.sweep_parameter else (0.0,)
    configs = {}
    for value in values:
        if spec.sweep_parameter:
            configs[value] = _apply_sweep(base_config, spec.sweep_parameter, value)
        else:
            configs[value] = base_config

    jobs = [
        (value, spec.base_seed + run_idx)
        for value in values
        for run_idx in range(spec.num_monte_carlo)
    ]

    def work(job):
        value, seed = job
        try:
            return ("ok", job, _run_one(spec, configs[value], seed))
        except Exception as exc:  # noqa: BLE001 - every run failure is recorded
            return ("fail", job, f"{type(exc).__name__}: {exc}")

    with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
        outcomes = list(pool.map(work, jobs))

    samples: dict = {}
    failures = []
    for status, (value, seed), payload in outcomes:
        if status == "fail":
            failures.append(
                {"error": payload, "seed": seed, "sweep-value": float(value)}
            )
            continue
        for t, k, metric, number in payload:
            samples.setdefault((value, t, k, metric), []).append(float(number))

    if len(failures) >= FAILURE_ABORT_FRACTION * len(jobs):
        raise CampaignAborted(
            f"{len(failures)} of {len(jobs)} runs failed; first: "
            f"{failures[0]['error']}"
        )

    aggregated = {}
    for key, vals in samples.items():
        n = len(vals)
        mean = float(np.mean(vals))
        stderr = float(np.std(vals, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        aggregated[key] = (mean, stderr, n)

    rows = []
    for value in values:
        keys = sorted(
            (key for key in aggregated if key[0] == value),
            key=lambda key: (key[1], key[2], key[3]),
        )
        for _, t, k, metric in keys:
            mean, stderr, n = aggregated[(value, t, k, metric)]
            rows.append(
                ResultRow(
                    experiment=spec.kind,
                    sweep_value=float(value),
                    t=t,
                    k=k,
                    metric_name=metric,
                    mean=mean,
                    stderr=stderr,
                    n=n,
                )
            )

    manifest = {
        "base-seed": spec.base_seed,
        "disturbance-scale": spec.disturbance_scale,
        "disturbance-steps": list(spec.disturbance_steps),
        "failures": failures,
        "kind": spec.kind,
        "num-monte-carlo": spec.num_monte_carlo,
        "scenario-file": os.path.basename(spec.scenario_path),
        "scenario-sha256": hashlib.sha256(scenario_bytes).hexdigest(),
        "sigma-s-inv2": _uniform_spatial_precision(base_config),
        "sigma-t-inv2": _uniform_temporal_precision(base_config),
        "snr-db-offset": spec.snr_db_offset,
        "sweep-parameter": spec.sweep_parameter,
        "sweep-values": [float(v) for v in spec.sweep_values],
        "trend-warnings": trend_warnings(spec, aggregated),
    }
    return ResultTable(rows=tuple(rows), manifest=manifest)


def write_outputs(table: ResultTable, output_dir: str):
    """Persist ``table.csv`` and ``manifest.json``; returns both paths."""
    os.makedirs(output_dir, exist_ok=True)
    table_path = os.path.join(output_dir, "table.csv")
    manifest_path = os.path.join(output_dir, "manifest.json")
    table.to_csv(table_path)
    with open(manifest_path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(table.manifest, sort_keys=True, indent=2))
        fh.write("\n")
    return table_path, manifest_path


def _rows_by(table: ResultTable, metric: str):
    return [row for row in table.rows if row.metric_name == metric]


def _aggregate_value(table: ResultTable, value: float, metric: str) -> float:
    for row in table.rows:
        if row.sweep_value == value and row.t == 0 and row.k == 0 \
                and row.metric_name == metric:
            return row.mean
    raise SchemaMismatch(f"table has no {metric!r} at sweep value {value}")


def _require_kind(table: ResultTable, figure: str) -> None:
    expected = FIGURE_KINDS[figure]
    if table.experiment != expected:
        raise SchemaMismatch(
            f"figure {figure} needs a {expected} table, got {table.experiment}"
        )


def _regime_label(value: float, axis: str) -> str:
    if value <= ASYMPTOTIC_SMALL:
        return f"{axis}-zero"
    if value >= ASYMPTOTIC_LARGE:
        return f"{axis}-inf"
    return "finite"


def emit_figure_data(table: ResultTable, figure: str, output_dir: str):
    """Write one figure-panel CSV; returns the list of paths written.

    No plotting: the files carry exactly the columns a plotting script
    needs, one row per curve point.
    """
    if figure not in FIGURE_KINDS:
        raise SchemaMismatch(f"unknown figure kind {figure!r}")
    if table.is_empty():
        raise SchemaMismatch("cannot emit figure data from an empty table")
    _require_kind(table, figure)
    os.makedirs(output_dir, exist_ok=True)
    path = os.path.join(output_dir, f"{figure}.csv")
    sweep_values = sorted({row.sweep_value for row in table.rows})

    lines = []
    if figure == "fig3":
        lines.append("t,k,x,y")
        xs = {(row.t, row.k): row.mean for row in _rows_by(table, "x")}
        ys = {(row.t, row.k): row.mean for row in _rows_by(table, "y")}
        if not xs or set(xs) != set(ys):
            raise SchemaMismatch("trajectory table missing coordinate rows")
        for t, k in sorted(xs):
            lines.append(f"{t},{k},{_fmt(xs[(t, k)])},{_fmt(ys[(t, k)])}")
    elif figure in ("fig4", "fig5"):
        if table.manifest.get("sweep-parameter") != SWEEP_SNR_DB:
            raise SchemaMismatch(f"{figure} needs an {SWEEP_SNR_DB} sweep")
        const_key = "sigma-s-inv2" if figure == "fig4" else "sigma-t-inv2"
        constant = table.manifest.get(const_key)
        if constant is None:
            raise SchemaMismatch(
                f"{figure} needs a uniform {const_key} in the manifest"
            )
        lines.append(f"snr_db,{const_key.replace('-', '_')},eoc_mean,bcrb_mean")
        for value in sweep_values:
            eoc = _aggregate_value(table, value, "eoc-mean")
            bcrb = _aggregate_value(table, value, "bcrb-mean")
            lines.append(
                f"{_fmt(value)},{_fmt(constant)},{_fmt(eoc)},{_fmt(bcrb)}"
            )
    elif figure == "fig6":
        lines.append("num_ris,beam_mode,eoc_mean,bcrb_mean")
        for value in sweep_values:
            for mode in ("aligned", "random"):
                eoc = _aggregate_value(table, value, f"eoc-mean-{mode}")
                bcrb = _aggregate_value(table, value, f"bcrb-mean-{mode}")
                lines.append(
                    f"{int(round(value))},{mode},{_fmt(eoc)},{_fmt(bcrb)}"
                )
    elif figure == "fig8":
        if table.manifest.get("sweep-parameter") != SWEEP_SIGMA_T:
            raise SchemaMismatch(f"fig8 needs a {SWEEP_SIGMA_T} sweep")
        lines.append("t,sigma_t_inv2,bcrb_mean,eoc_mean,theory_bcrb_star")
        for value in sweep_values:
            theory = _aggregate_value(table, value, "theory-bcrb-star")
            bcrbs = {
                row.t: row.mean
                for row in _rows_by(table, "bcrb-mean")
                if row.sweep_value == value and row.t > 0
            }
            eocs = {
                row.t: row.mean
                for row in _rows_by(table, "eoc-mean")
                if row.sweep_value == value and row.t > 0
            }
            for t in sorted(bcrbs):
                lines.append(
                    f"{t},{_fmt(value)},{_fmt(bcrbs[t])},{_fmt(eocs[t])},"
                    f"{_fmt(theory)}"
                )
    else:  # fig9 / fig10
        axis = "spatial" if figure == "fig9" else "temporal"
        lines.append("t,regime,bcrb_mean,eoc_mean")
        for value in sweep_values:
            label = _regime_label(value, axis)
            bcrbs = {
                row.t: row.mean
                for row in _rows_by(table, "bcrb-mean")
                if row.sweep_value == value and row.t > 0
            }
            eocs = {
                row.t: row.mean
                for row in _rows_by(table, "eoc-mean")
                if row.sweep_value == value and row.t > 0
            }
            for t in sorted(bcrbs):
                lines.append(
                    f"{t},{label},{_fmt(bcrbs[t])},{_fmt(eocs[t])}"
                )

    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")
    return [path]
