"""End-to-end surrogate-scored ADAPT workflow with persisted run records.

The record is a plain JSON-compatible dict.  Each stage reads what earlier
stages left in it and adds its own fields, so stages can be run one at a
time (see :mod:`sc2adapt.cli`) or all at once with :func:`run_workflow`.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .ansatz import TROTTER_ORDER, AdaptConfig, AnsatzCircuit, adapt_run, apply_ansatz, vqe_optimize
from .ansatz import OptimizationError
from .extrapolation import (FitResult, SeriesPoint, evaluate_fit, fit_band, fit_continuum,
                            fit_thermodynamic)
from .pauli import apply_sum
from .pool import PoolConfig, PoolLabel, generate_full_pool
from .schwinger import CONTINUUM_CONDENSATE, LatticeParams, build_hamiltonian, chiral_condensate
from .surrogate import ground_state, score_pool, truncate_pool

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SC2 = "sc2_fixed_ansatz"
FULL_SINGLES = "full_singles_per_volume"
MODES = (SC2, FULL_SINGLES)
ANALYTIC_ROW_VALUE = round(CONTINUUM_CONDENSATE, 6)


class ConfigError(ValueError):
    """Invalid workflow configuration."""


class StageError(RuntimeError):
    """A workflow stage failed; the partial record is attached."""

    def __init__(self, message, record=None, path=None):
        super().__init__(message)
        self.record = record
        self.path = path


@dataclass
class WorkflowConfig:
    couplings: list[float] = field(default_factory=lambda: [0.5, 0.6, 0.7, 0.8, 0.9, 1.0])
    bare_mass: float = 0.0
    spacing: float = 1.0
    improved_mass: bool = False
    surrogate_volume: int = 16
    adapt_volume: int = 16
    full_singles_min_volume: int = 4
    delta: float = 1e-5
    epsilon: float = 1e-3
    optimizer_tol: float = 1e-8
    max_depth: int = 100
    odd_d_only: bool = True
    max_surface_offset: int = 1
    include_surface: bool = True
    thermo_family: str = "inverse"
    continuum_degree: int = 2
    surrogate_tol: float = 1e-10
    surrogate_max_iter: int = 500
    mode: str = SC2
    output_dir: str = "runs"
    run_id: str | None = None
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.couplings:
            raise ConfigError("at least one coupling ag is required")
        if any(not np.isfinite(g) or g < 0 for g in self.couplings):
            raise ConfigError("couplings must be finite and non-negative")
        if len(set(self.couplings)) != len(self.couplings):
            raise ConfigError("couplings must be distinct")
        for name in ("surrogate_volume", "adapt_volume", "full_singles_min_volume"):
            v = getattr(self, name)
            if v < 2 or v % 2:
                raise ConfigError(f"{name} must be an even integer >= 2, got {v}")
        if self.delta < 0:
            raise ConfigError("delta must be non-negative")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if not self.optimizer_tol < self.epsilon:
            raise ConfigError("optimizer_tol must be smaller than epsilon")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.max_surface_offset < 0:
            raise ConfigError("max_surface_offset must be non-negative")
        if self.spacing <= 0:
            raise ConfigError("spacing must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    @property
    def pool_config(self) -> PoolConfig:
        return PoolConfig(self.odd_d_only, self.max_surface_offset, self.include_surface)

    @property
    def adapt_config(self) -> AdaptConfig:
        return AdaptConfig(epsilon=self.epsilon, max_depth=self.max_depth,
                           optimizer_tol=self.optimizer_tol)

    def params(self, ag: float, sites: int) -> LatticeParams:
        # ag is the dimensionless knob; the spacing stays fixed and g = ag / a
        return LatticeParams(sites, self.spacing, ag / self.spacing, self.bare_mass,
                             self.improved_mass)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "WorkflowConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "WorkflowConfig":
        """Read a YAML (or JSON) config file."""
        try:
            data = yaml.safe_load(Path(path).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
        return cls.from_dict(data)

    def resolved_run_id(self) -> str:
        if self.run_id:
            return self.run_id
        payload = {k: v for k, v in self.to_dict().items() if k not in ("output_dir", "workers")}
        digest = hashlib.sha1(json.dumps(payload, sort_keys=True).encode()).hexdigest()
        return f"run-{digest[:10]}"


# ---------------------------------------------------------------------------
# record helpers
# ---------------------------------------------------------------------------


def new_record(config: WorkflowConfig) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "software_version": __version__,
        "run_id": config.resolved_run_id(),
        "config": config.to_dict(),
        "platform": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "machine": platform.machine(),
            "note": "results are reproducible bit-for-bit on the same platform and library "
                    "versions; BLAS and libm differences can change the last few digits",
        },
        "trotter_order": TROTTER_ORDER,
        "timestamps": {"created": _now()},
        "couplings": [{"ag": float(ag)} for ag in config.couplings],
        "continuum": None,
        "errors": [],
    }


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def record_path(record: dict, output_dir) -> Path:
    return Path(output_dir) / record["run_id"] / "record.json"


def save_record(record: dict, output_dir) -> Path:
    path = record_path(record, output_dir)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(record, indent=1, sort_keys=True))
    return path


def load_record(path) -> dict:
    record = json.loads(Path(path).read_text())
    if record.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported record schema {record.get('schema_version')}")
    return record


# ---------------------------------------------------------------------------
# stages, one coupling at a time
# ---------------------------------------------------------------------------


def score_stage(config: WorkflowConfig, entry: dict) -> dict:
    """Surrogate ground state at the scoring volume, pool scores and truncation."""
    ag = entry["ag"]
    n = config.surrogate_volume
    H = build_hamiltonian(config.params(ag, n))
    sur = ground_state(H, config.surrogate_tol, config.surrogate_max_iter, seed=config.seed)
    labels = generate_full_pool(n, config.pool_config)
    scores = score_pool(labels, sur.state, n)
    entry["surrogate"] = {
        "method": "lanczos",
        "volume": n,
        "energy": sur.energy,
        "residual": sur.residual,
        "iterations": sur.iterations,
        "condensate": chiral_condensate(sur.state),
    }
    entry["scores"] = [{"label": str(s.label), "overlap": s.overlap, "ratio": s.ratio} for s in scores]
    if config.mode == FULL_SINGLES:
        # the control keeps every label; no cutoff is applied
        entry["truncated_pool"] = [str(s.label) for s in scores]
        entry["min_volume"] = None
    else:
        kept, min_vol = truncate_pool(scores, config.delta)
        entry["truncated_pool"] = [str(lab) for lab in kept]
        entry["min_volume"] = min_vol
    return entry


def _observables(config, ag, sites, circuit, angles, H=None):
    H = H if H is not None else build_hamiltonian(config.params(ag, sites))
    psi = apply_ansatz(circuit, angles)
    cond = chiral_condensate(psi)
    return {
        "energy": float(np.real(np.vdot(psi, apply_sum(H, psi)))),
        "condensate": cond,
        "condensate_over_g": cond / ag if ag else float("nan"),
    }


def _exact_reference(config, ag, sites, H):
    gs = ground_state(H, config.surrogate_tol, config.surrogate_max_iter, seed=config.seed)
    cond = chiral_condensate(gs.state)
    return {"exact_energy": gs.energy, "exact_condensate": cond,
            "exact_condensate_over_g": cond / ag if ag else float("nan")}


def adapt_stage(config: WorkflowConfig, entry: dict) -> dict:
    """One ADAPT run at the top volume with the truncated pool."""
    ag = entry["ag"]
    n = config.adapt_volume
    labels = [PoolLabel.parse(s) for s in entry["truncated_pool"]]
    if config.mode == FULL_SINGLES:
        labels = generate_full_pool(n, config.pool_config)
    H = build_hamiltonian(config.params(ag, n))
    circuit, angles, history = adapt_run(H, labels, config.adapt_config,
                                         pool_id=_pool_id(config, ag))
    entry["adapt"] = {
        "volume": n,
        "circuit": circuit.to_list(),
        "depth": len(circuit),
        "history": history.to_dict(),
    }
    return entry


def _pool_id(config, ag):
    if config.mode == FULL_SINGLES:
        return "full-singles"
    return f"truncated(delta={config.delta:g},ag={ag:g},N={config.surrogate_volume})"


def sweep_stage(config: WorkflowConfig, entry: dict) -> dict:
    """Observables on every volume, top-down.

    sc2 mode re-optimizes the fixed top-volume circuit, warm-started from the
    next larger volume's angles.  full-singles mode runs ADAPT independently
    at each volume with the whole pool.
    """
    ag = entry["ag"]
    top = config.adapt_volume
    volumes_out = []
    if config.mode == SC2:
        base = AnsatzCircuit.from_list(entry["adapt"]["circuit"], top)
        lowest = base.min_volume() if len(base) else entry["min_volume"]
        lowest = max(lowest, entry["min_volume"] or 2)
        angles = base.angles
        H = build_hamiltonian(config.params(ag, top))
        volumes_out.append({"volume": top, "circuit": base.to_list(), "angles": list(angles),
                            "optimizer_iterations": 0, "optimizer_warning": None,
                            **_observables(config, ag, top, base, angles, H),
                            **_exact_reference(config, ag, top, H)})
        for n in range(top - 2, lowest - 1, -2):
            circuit = AnsatzCircuit(base.entries, n, base.pool_id)
            H = build_hamiltonian(config.params(ag, n))
            warning = None
            try:
                angles, _, nit = vqe_optimize(circuit, angles, H, config.adapt_config)
            except OptimizationError as exc:
                angles, nit, warning = exc.angles, exc.iterations, str(exc)
            circuit = circuit.with_angles(angles)
            volumes_out.append({"volume": n, "circuit": circuit.to_list(),
                                "angles": [float(t) for t in angles],
                                "optimizer_iterations": nit, "optimizer_warning": warning,
                                **_observables(config, ag, n, circuit, angles, H),
                                **_exact_reference(config, ag, n, H)})
    else:
        top_circuit = AnsatzCircuit.from_list(entry["adapt"]["circuit"], top)
        H = build_hamiltonian(config.params(ag, top))
        volumes_out.append({"volume": top, "circuit": top_circuit.to_list(),
                            "angles": list(top_circuit.angles), "optimizer_iterations": 0,
                            "optimizer_warning": None, "history": entry["adapt"]["history"],
                            **_observables(config, ag, top, top_circuit, top_circuit.angles, H),
                            **_exact_reference(config, ag, top, H)})
        for n in range(top - 2, config.full_singles_min_volume - 1, -2):
            H = build_hamiltonian(config.params(ag, n))
            circuit, angles, history = adapt_run(H, generate_full_pool(n, config.pool_config),
                                                 config.adapt_config, pool_id="full-singles")
            volumes_out.append({"volume": n, "circuit": circuit.to_list(),
                                "angles": [float(t) for t in angles],
                                "optimizer_iterations": None, "optimizer_warning": None,
                                "history": history.to_dict(),
                                **_observables(config, ag, n, circuit, angles, H),
                                **_exact_reference(config, ag, n, H)})
    entry["volumes"] = volumes_out
    return entry


def thermodynamic_stage(config: WorkflowConfig, entry: dict) -> dict:
    pts = [SeriesPoint(v["volume"], v["condensate_over_g"]) for v in entry["volumes"]]
    entry["thermodynamic"] = fit_thermodynamic(sorted(pts, key=lambda p: p.x),
                                               config.thermo_family).to_dict()
    return entry


def continuum_stage(config: WorkflowConfig, record: dict) -> dict:
    pts = []
    for entry in record["couplings"]:
        fit = entry.get("thermodynamic")
        if fit is not None:
            pts.append(SeriesPoint(entry["ag"], fit["limit"], fit["uncertainty"]))
    fit = fit_continuum(sorted(pts, key=lambda p: p.x), config.continuum_degree)
    record["continuum"] = {
        **fit.to_dict(),
        "analytic": CONTINUUM_CONDENSATE,
        "relative_error": abs(fit.limit - CONTINUUM_CONDENSATE) / abs(CONTINUUM_CONDENSATE),
    }
    return record


COUPLING_STAGES = {
    "score": score_stage,
    "adapt": adapt_stage,
    "sweep": sweep_stage,
    "thermodynamic": thermodynamic_stage,
}
STAGE_ORDER = ["score", "adapt", "sweep", "thermodynamic"]


def _run_coupling(args):
    config_dict, entry, stages = args
    config = WorkflowConfig.from_dict(config_dict)
    for name in stages:
        try:
            entry = COUPLING_STAGES[name](config, entry)
        except Exception as exc:  # recorded, then surfaced as a stage failure
            log.exception("stage %s failed at ag=%s", name, entry["ag"])
            entry.setdefault("errors", []).append({"stage": name, "message": repr(exc)})
            break
    return entry


def run_stages(config: WorkflowConfig, record: dict, stages, persist: bool = True) -> dict:
    """Run per-coupling ``stages`` (and the continuum fit if requested) on ``record``.

    Couplings are independent jobs; results keep the configured coupling order.
    Raises :class:`StageError` after persisting if any stage failed.
    """
    coupling_stages = [s for s in stages if s in COUPLING_STAGES]
    jobs = [(config.to_dict(), entry, coupling_stages) for entry in record["couplings"]]
    if coupling_stages:
        if config.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as ex:
                record["couplings"] = list(ex.map(_run_coupling, jobs))
        else:
            record["couplings"] = [_run_coupling(job) for job in jobs]
    for entry in record["couplings"]:
        for err in entry.pop("errors", []):
            record["errors"].append({"ag": entry["ag"], **err})
    if "continuum" in stages and not record["errors"]:
        try:
            continuum_stage(config, record)
        except Exception as exc:
            record["errors"].append({"stage": "continuum", "message": repr(exc)})
    record["timestamps"]["finished"] = _now()
    path = save_record(record, config.output_dir) if persist else None
    if record["errors"]:
        raise StageError(f"{len(record['errors'])} stage error(s); partial record kept",
                         record, path)
    return record


def run_workflow(config: WorkflowConfig, persist: bool = True) -> dict:
    """Full pipeline: score, truncate, ADAPT at the top volume, sweep, and both fits."""
    config.validate()
    record = new_record(config)
    return run_stages(config, record, STAGE_ORDER + ["continuum"], persist)


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------


def _tag(ag: float) -> str:
    return f"ag{ag:g}"


def _rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _tables(record: dict) -> dict[str, tuple[list[str], list[list]]]:
    """Every emitted table, keyed by stage name.  Reads the record only."""
    tables = {}
    for entry in record["couplings"]:
        ag = entry["ag"]
        tag = _tag(ag)
        selections = entry.get("adapt", {}).get("circuit", [])
        first_seen = {}
        for i, (label, _) in enumerate(selections):
            first_seen.setdefault(label, i + 1)
        if "scores" in entry:
            tables[f"scores_{tag}"] = (
                ["label", "overlap", "ratio", "selection_order"],
                [[s["label"], s["overlap"], s["ratio"], first_seen.get(s["label"], "")]
                 for s in entry["scores"]],
            )
        rows = []
        angle_rows = []
        for vol in entry.get("volumes", []):
            for i, (label, theta) in enumerate(vol["circuit"]):
                rows.append([vol["volume"], i + 1, label])
                angle_rows.append([vol["volume"], i + 1, label, theta])
        if not entry.get("volumes") and selections:
            rows = [[entry["adapt"]["volume"], i + 1, lab] for i, (lab, _) in enumerate(selections)]
        tables[f"selections_{tag}"] = (["volume", "position", "label"], rows)
        tables[f"angles_{tag}"] = (["volume", "position", "label", "angle"], angle_rows)
        if entry.get("volumes"):
            fit = entry.get("thermodynamic")
            cond_rows = []
            for vol in sorted(entry["volumes"], key=lambda v: v["volume"]):
                if fit:
                    fv = float(evaluate_fit(FitResult.from_dict(fit), vol["volume"]))
                    fe = fit["uncertainty"]
                else:
                    fv = fe = ""
                cond_rows.append([vol["volume"], vol["condensate_over_g"], fv, fe])
            tables[f"condensate_{tag}"] = (["volume", "value", "fit_value", "fit_err"], cond_rows)
            tables[f"observables_{tag}"] = (
                ["volume", "energy", "exact_energy", "condensate", "exact_condensate", "depth"],
                [[v["volume"], v["energy"], v.get("exact_energy", ""), v["condensate"],
                  v.get("exact_condensate", ""), len(v["circuit"])]
                 for v in sorted(entry["volumes"], key=lambda v: v["volume"])],
            )
    cont = record.get("continuum")
    rows = [[0.0, ANALYTIC_ROW_VALUE, 0.0, "analytic"]]
    for entry in record["couplings"]:
        fit = entry.get("thermodynamic")
        if fit:
            rows.append([entry["ag"], fit["limit"], fit["uncertainty"], "thermodynamic"])
    if cont:
        rows.append([0.0, cont["limit"], cont["uncertainty"], "continuum_fit"])
    tables["continuum"] = (["ag", "value", "value_err", "kind"], rows)
    if cont:
        fit = FitResult.from_dict({k: cont[k] for k in
                                   ("limit", "uncertainty", "model_tag", "coefficients",
                                    "residuals", "details")})
        xs = np.linspace(0.0, max(e["ag"] for e in record["couplings"]), 41)
        tables["continuum_curve"] = (
            ["ag", "fit_value", "fit_err"],
            [[float(x), float(y), float(e)] for x, y, e in zip(xs, evaluate_fit(fit, xs),
                                                               fit_band(fit, xs))],
        )
    return tables


def emit_results(record: dict, fmt: str = "csv", output_dir=None) -> list[Path]:
    """Write plot-ready tables to ``{output_dir}/{run_id}/{stage}.{fmt}``."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown output format {fmt!r}")
    base = Path(output_dir if output_dir is not None else record["config"]["output_dir"])
    run_dir = base / record["run_id"]
    written = []
    try:
        run_dir.mkdir(parents=True, exist_ok=True)
        for stage, (header, rows) in sorted(_tables(record).items()):
            path = run_dir / f"{stage}.{fmt}"
            if fmt == "csv":
                text = _rows_to_csv(header, rows)
            else:
                text = json.dumps([dict(zip(header, r)) for r in rows], indent=1)
            path.write_text(text)
            written.append(path)
    except OSError as exc:
        raise OSError(f"could not write results under {run_dir}: {exc}") from exc
    return written
