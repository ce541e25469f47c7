"""Batch experiment runner: configuration, replicate orchestration, seeding,
persistence, and plot-data emission."""
from __future__ import annotations

import csv
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .baselines import AprbsConfig, aprbs, multisine
from .core import (
    ConfigurationError,
    Dataset,
    InitialState,
    NarxConfig,
    Region,
    build_regressors,
)
from .designer import DesignerConfig, DesignMode, DesignRun, design
from .metrics import (
    DEFAULT_BINS_PER_AXIS,
    DEFAULT_N_E,
    EvaluationSet,
    MetricValues,
    evaluation_set,
    score_design,
)
from .process import Plant, make_plant, simulate
from .sampling import SupportingSet, default_n_psi, supporting_set
from .surrogate import (
    DEFAULT_MAX_MODELS,
    DEFAULT_SIGMA_FACTOR,
    lti_from_time_constant,
)

METHODS = ("proposed-adaptive", "proposed-fixed", "aprbs", "multisine")


@dataclass(frozen=True)
class ExperimentConfig:
    plant_name: str = "hammerstein"
    plant_params: dict = field(default_factory=dict)
    narx: NarxConfig = field(default_factory=NarxConfig)
    u_region: Region = field(default_factory=lambda: Region.unit(1))
    x_region: Region = field(default_factory=lambda: Region.unit(2))
    c_region: Region | None = None
    N: int = 300
    L: int | None = None
    n_psi: int | None = None
    n_e: int = DEFAULT_N_E
    bins_per_axis: int = DEFAULT_BINS_PER_AXIS
    methods: tuple = ("proposed-fixed", "aprbs")
    replicates: int = 10
    base_seed: int = 0
    restarts: int = 5
    max_grad_steps: int = 50
    state_penalty_weight: float = 1e3
    surrogate_T: float = 5.0
    surrogate_K: float = 1.0
    lolimot_max_models: int = DEFAULT_MAX_MODELS
    lolimot_sigma_factor: float = DEFAULT_SIGMA_FACTOR
    aprbs_t_hold: float = 1.0
    multisine_harmonics: int = 30

    def __post_init__(self):
        for m in self.methods:
            if m not in METHODS:
                raise ConfigurationError(f"unknown method '{m}', expected one of {METHODS}")
        if self.u_region.dim != self.narx.n_u:
            raise ConfigurationError("input region dimension must equal n_u")
        if self.x_region.dim != self.narx.p:
            raise ConfigurationError("state region dimension must equal p")
        if self.c_region is not None and self.c_region.dim != self.narx.p:
            raise ConfigurationError("region-of-interest dimension must equal p")

    @property
    def horizon(self) -> int:
        if self.L is not None:
            return self.L
        return max(1, round(4.0 * self.surrogate_T / self.narx.T_s))

    @property
    def n_psi_effective(self) -> int:
        return self.n_psi if self.n_psi is not None else default_n_psi(self.N)

    @property
    def region_of_interest(self) -> Region:
        return self.c_region if self.c_region is not None else self.x_region

    def to_dict(self) -> dict:
        return {
            "plant": {"name": self.plant_name, **self.plant_params},
            "narx": self.narx.to_dict(),
            "regions": {
                "u": self.u_region.to_dict(),
                "x": self.x_region.to_dict(),
                "c": self.region_of_interest.to_dict(),
            },
            "N": self.N,
            "L": self.horizon,
            "n_psi": self.n_psi_effective,
            "n_e": self.n_e,
            "bins_per_axis": self.bins_per_axis,
            "methods": list(self.methods),
            "replicates": self.replicates,
            "base_seed": self.base_seed,
            "restarts": self.restarts,
            "max_grad_steps": self.max_grad_steps,
            "state_penalty_weight": self.state_penalty_weight,
            "surrogate": {"T": self.surrogate_T, "K": self.surrogate_K,
                          "lolimot_max_models": self.lolimot_max_models,
                          "lolimot_sigma_factor": self.lolimot_sigma_factor},
            "baselines": {"aprbs_t_hold": self.aprbs_t_hold,
                          "multisine_harmonics": self.multisine_harmonics},
        }

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


def load_config(path: str | Path) -> ExperimentConfig:
    """Read an experiment configuration from a TOML file."""
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)

    narx_raw = raw.get("narx", {})
    narx = NarxConfig(
        n_u=narx_raw.get("n_u", 1), n_y=narx_raw.get("n_y", 1),
        m=narx_raw.get("m", 1), T_s=narx_raw.get("T_s", 1.0),
    )
    reg = raw.get("regions", {})
    u_region = Region(np.asarray(reg.get("u_lower", [0.0])),
                      np.asarray(reg.get("u_upper", [1.0])))
    x_region = Region(np.asarray(reg.get("x_lower", [0.0] * narx.p)),
                      np.asarray(reg.get("x_upper", [1.0] * narx.p)))
    c_region = None
    if "c_lower" in reg or "c_upper" in reg:
        c_region = Region(np.asarray(reg["c_lower"]), np.asarray(reg["c_upper"]))

    plant = raw.get("plant", {})
    des = raw.get("design", {})
    sur = raw.get("surrogate", {})
    met = raw.get("metrics", {})
    exp = raw.get("experiment", {})
    base = raw.get("baselines", {})
    return ExperimentConfig(
        plant_name=plant.get("name", "hammerstein"),
        plant_params={k: v for k, v in plant.items() if k != "name"},
        narx=narx,
        u_region=u_region,
        x_region=x_region,
        c_region=c_region,
        N=des.get("N", 300),
        L=des.get("L"),
        n_psi=des.get("n_psi"),
        n_e=met.get("n_e", DEFAULT_N_E),
        bins_per_axis=met.get("bins_per_axis", DEFAULT_BINS_PER_AXIS),
        methods=tuple(exp.get("methods", ["proposed-fixed", "aprbs"])),
        replicates=exp.get("replicates", 10),
        base_seed=exp.get("base_seed", 0),
        restarts=des.get("restarts", 5),
        max_grad_steps=des.get("max_grad_steps", 50),
        state_penalty_weight=des.get("state_penalty_weight", 1e3),
        surrogate_T=sur.get("T", 5.0),
        surrogate_K=sur.get("K", 1.0),
        lolimot_max_models=sur.get("lolimot_max_models", DEFAULT_MAX_MODELS),
        lolimot_sigma_factor=sur.get("lolimot_sigma_factor", DEFAULT_SIGMA_FACTOR),
        aprbs_t_hold=base.get("aprbs_t_hold", 1.0),
        multisine_harmonics=base.get("multisine_harmonics", 30),
    )


def build_plant(config: ExperimentConfig) -> Plant:
    params = dict(config.plant_params)
    params.setdefault("T_s", config.narx.T_s)
    return make_plant(config.plant_name, **params)


def generate_signal(config: ExperimentConfig, method: str, seed: int,
                    psi: SupportingSet) -> tuple[np.ndarray, DesignRun | None]:
    """One excitation signal (N, n_u) for a method, plus designer provenance."""
    plant = build_plant(config)
    if method in ("proposed-fixed", "proposed-adaptive"):
        mode = (DesignMode.OFFLINE_FIXED if method == "proposed-fixed"
                else DesignMode.ONLINE_ADAPTIVE)
        dconf = DesignerConfig(
            N=config.N, L=config.horizon, mode=mode,
            restarts=config.restarts, max_grad_steps=config.max_grad_steps,
            state_penalty_weight=config.state_penalty_weight, rng_seed=seed,
            lolimot_max_models=config.lolimot_max_models,
            lolimot_sigma_factor=config.lolimot_sigma_factor,
        )
        surrogate = lti_from_time_constant(
            config.surrogate_T, config.surrogate_K, config.narx.T_s
        )
        run = design(dconf, surrogate,
                     plant if mode is DesignMode.ONLINE_ADAPTIVE else None,
                     psi, config.u_region, config.x_region, plant.initial)
        if not run.completed:
            raise RuntimeError("design run aborted before completing the signal")
        return run.inputs, run
    if method == "aprbs":
        sig = aprbs(AprbsConfig(config.N, config.aprbs_t_hold, config.u_region, seed),
                    config.narx.T_s)
        return sig, None
    if method == "multisine":
        return multisine(config.N, config.multisine_harmonics,
                         config.u_region, seed), None
    raise ConfigurationError(f"unknown method '{method}'")


def true_regressors(config: ExperimentConfig, inputs: np.ndarray) -> np.ndarray:
    """Regressor matrix of the true process response to a signal, with all
    channels affinely normalized to [0, 1] via the admissible state bounds."""
    plant = build_plant(config)
    data = simulate(plant, inputs)
    rows = build_regressors(config.narx, data, plant.initial)
    return (rows - config.x_region.lower) / config.x_region.extent


def _normalized_roi(config: ExperimentConfig) -> Region:
    c = config.region_of_interest
    lo = (c.lower - config.x_region.lower) / config.x_region.extent
    hi = (c.upper - config.x_region.lower) / config.x_region.extent
    return Region(lo, hi)


@dataclass
class ReplicateResult:
    method: str
    replicate: int
    seed: int
    inputs: np.ndarray | None
    metrics: MetricValues | None
    violation_count: int | None
    run: DesignRun | None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class MetricsReport:
    config: ExperimentConfig
    results: dict  # method -> list[ReplicateResult]

    @property
    def any_failed(self) -> bool:
        return any(r.failed for rs in self.results.values() for r in rs)

    def successes(self, method: str) -> list:
        return [r for r in self.results[method] if not r.failed]

    def aggregate(self) -> dict:
        out = {}
        for method, rs in self.results.items():
            ok = [r for r in rs if not r.failed]
            if not ok:
                out[method] = {"failed": len(rs)}
                continue
            Rs = np.array([r.metrics.R for r in ok])
            Js = np.array([r.metrics.JSD for r in ok])
            out[method] = {
                "replicates": len(ok),
                "failed": len(rs) - len(ok),
                "R": {"median": float(np.median(Rs)),
                      "q1": float(np.percentile(Rs, 25)),
                      "q3": float(np.percentile(Rs, 75))},
                "JSD": {"median": float(np.median(Js)),
                        "q1": float(np.percentile(Js, 25)),
                        "q3": float(np.percentile(Js, 75))},
            }
        return out

    def median_replicate(self, method: str) -> ReplicateResult:
        """Replicate whose final R is the (lower) order-statistic median."""
        ok = sorted(self.successes(method), key=lambda r: r.metrics.R)
        if not ok:
            raise ConfigurationError(f"no successful replicates for '{method}'")
        return ok[(len(ok) - 1) // 2]


def run_replicate(config: ExperimentConfig, method: str, replicate: int,
                  psi: SupportingSet, eval_set: EvaluationSet) -> ReplicateResult:
    seed = config.base_seed + replicate
    try:
        inputs, run = generate_signal(config, method, seed, psi)
        rows = true_regressors(config, inputs)
        metrics = score_design(rows, _normalized_roi(config), eval_set,
                               config.bins_per_axis)
        return ReplicateResult(method, replicate, seed, inputs, metrics,
                               run.violation_count if run is not None else 0, run)
    except Exception as exc:  # replicate failures recorded, batch continues
        return ReplicateResult(method, replicate, seed, None, None, None, None,
                               error=f"{type(exc).__name__}: {exc}")


def _replicate_task(args):
    return run_replicate(*args)


def run_experiment(config: ExperimentConfig, out_dir: str | Path | None = None,
                   jobs: int = 1, log=None) -> MetricsReport:
    """Full replicate study: shared supporting and evaluation sets, one seeded
    signal per (method, replicate), metrics on the true regressor space."""
    roi = _normalized_roi(config)
    psi = supporting_set(config.region_of_interest, config.n_psi_effective)
    ev = evaluation_set(roi, config.n_e)

    tasks = [(config, method, r + 1, psi, ev)
             for method in config.methods for r in range(config.replicates)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            all_results = list(pool.map(_replicate_task, tasks))
    else:
        all_results = []
        for task in tasks:
            res = run_replicate(*task)
            if log is not None:
                status = "failed" if res.failed else (
                    f"R={res.metrics.R:.4f} JSD={res.metrics.JSD:.4f}")
                log(f"{res.method} replicate {res.replicate}: {status}")
            all_results.append(res)

    results: dict[str, list[ReplicateResult]] = {m: [] for m in config.methods}
    for res in all_results:
        results[res.method].append(res)
    report = MetricsReport(config=config, results=results)
    if out_dir is not None:
        persist_report(report, out_dir)
    return report


def persist_report(report: MetricsReport, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = report.config
    provenance = {"config": config.to_dict(), "config_hash": config.config_hash()}
    (out / "config.json").write_text(json.dumps(provenance, indent=2))

    with open(out / "metrics.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "replicate", "seed", "R", "JSD",
                         "violations", "error"])
        for method, rs in report.results.items():
            mdir = out / method
            mdir.mkdir(exist_ok=True)
            for r in rs:
                if r.failed:
                    writer.writerow([method, r.replicate, r.seed, "", "", "", r.error])
                    continue
                writer.writerow([method, r.replicate, r.seed,
                                 repr(float(r.metrics.R)), repr(float(r.metrics.JSD)),
                                 r.violation_count, ""])
                tag = f"rep_{r.replicate:03d}"
                n_u = r.inputs.shape[1]
                with open(mdir / f"{tag}_signal.csv", "w", newline="") as sf:
                    sw = csv.writer(sf)
                    sw.writerow(["# config_hash", config.config_hash(),
                                 "seed", r.seed])
                    sw.writerow([f"u_{i + 1}" for i in range(n_u)])
                    for row in r.inputs:
                        sw.writerow([repr(float(v)) for v in row])
                r.metrics.progress_to_csv(mdir / f"{tag}_R_progress.csv")
                if r.run is not None:
                    r.run.to_csv(mdir / f"{tag}_run.csv")
                    r.run.to_json(mdir / f"{tag}_run.json")

    report_payload = {"config_hash": config.config_hash(),
                      "aggregate": report.aggregate()}
    (out / "report.json").write_text(json.dumps(report_payload, indent=2))


def load_report(run_dir: str | Path) -> MetricsReport:
    """Rebuild a report from a persisted experiment directory (metrics and
    progress files only; signals are not reloaded)."""
    run_dir = Path(run_dir)
    results: dict[str, list[ReplicateResult]] = {}
    with open(run_dir / "metrics.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            method = row["method"]
            replicate = int(row["replicate"])
            if row["error"]:
                res = ReplicateResult(method, replicate, int(row["seed"]),
                                      None, None, None, None, error=row["error"])
            else:
                prog_path = run_dir / method / f"rep_{replicate:03d}_R_progress.csv"
                prog = np.genfromtxt(prog_path, delimiter=",", skip_header=1,
                                     ndmin=2)[:, 1]
                metrics = MetricValues(R=float(row["R"]), JSD=float(row["JSD"]),
                                       R_progress=prog)
                res = ReplicateResult(method, replicate, int(row["seed"]),
                                      None, metrics,
                                      int(row["violations"]), None)
            results.setdefault(method, []).append(res)
    config_raw = json.loads((run_dir / "config.json").read_text())["config"]
    config = ExperimentConfig(
        plant_name=config_raw["plant"]["name"],
        narx=NarxConfig(**config_raw["narx"]),
        u_region=Region(np.asarray(config_raw["regions"]["u"]["lower"]),
                        np.asarray(config_raw["regions"]["u"]["upper"])),
        x_region=Region(np.asarray(config_raw["regions"]["x"]["lower"]),
                        np.asarray(config_raw["regions"]["x"]["upper"])),
        methods=tuple(results.keys()),
        replicates=max(len(rs) for rs in results.values()),
        N=config_raw["N"],
    )
    return MetricsReport(config=config, results=results)


def emit_plotdata(report: MetricsReport, kind: str, out_dir: str | Path) -> list[Path]:
    """Figure data files: per-method metric columns (boxplot) or the R(k)
    progress of each method's median-R replicate (progress)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    methods = [m for m in report.results if report.successes(m)]
    if not methods:
        raise ConfigurationError("report contains no successful replicates")
    written = []
    if kind == "boxplot":
        for metric in ("R", "JSD"):
            path = out / f"boxplot_{metric}.csv"
            columns = {m: [getattr(r.metrics, metric) for r in report.successes(m)]
                       for m in methods}
            depth = max(len(v) for v in columns.values())
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(methods)
                for i in range(depth):
                    writer.writerow([repr(float(columns[m][i])) if i < len(columns[m]) else ""
                                     for m in methods])
            written.append(path)
    elif kind == "progress":
        path = out / "progress_R.csv"
        medians = {m: report.median_replicate(m) for m in methods}
        N = max(len(medians[m].metrics.R_progress) for m in methods)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k"] + methods)
            for k in range(N):
                row = [k + 1]
                for m in methods:
                    prog = medians[m].metrics.R_progress
                    row.append(repr(float(prog[k])) if k < len(prog) else "")
                writer.writerow(row)
        written.append(path)
    else:
        raise ConfigurationError(f"unknown plot kind '{kind}'")
    return written
