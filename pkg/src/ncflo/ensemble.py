"""Seeded ensemble runs over parameter grids, with file-bundle persistence.

A run walks the (d, n) grid, gives every instance a seed derived from the
master seed and a global instance counter, executes the mode-specific
pipeline, and collects one row per instance. Rows are merged in instance-id
order, so output bundles are byte-identical for any thread count. Bundles
consist of ``manifest.json`` (config echo, conventions, reference constants)
plus CSV tables; per-instance wall times are written as 0 unless timing
capture is explicitly enabled, keeping the default bundles reproducible.
"""
from __future__ import annotations

import dataclasses
import itertools
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import numpy as np

from .branch import (
    amplitude_table,
    commuting_control_instance,
    conditional_distribution,
    cyclic_closure,
    dress,
    fermionant,
    sample_outcome,
)
from .errors import CapacityError, InvalidConfigError, PostSelectionError
from .model import (
    DiluteConfig,
    collision_free_rate_asymptotic,
    collision_free_rate_exact,
    collision_rate_trials,
    make_instance,
    post_select,
)
from .mpo import chi_profile, rank_witness, routing_tensor
from .perms import Permutation
from .rng import RngStream, derive_seed
from .stats import GINIBRE_NC_REFERENCE, nc_score, porter_thomas_stats
from .version import SCHEMA_VERSION, VERSION

MODES = ("rates", "branch", "chi", "stats", "witness", "fermionant-check", "all")

INSTANCES_COLUMNS = (
    "instance_id",
    "seed",
    "n",
    "m",
    "d",
    "attempts",
    "chi_max",
    "nu_nc",
    "gamma",
    "haar_ratio",
    "ks_pt",
    "anticonc_frac",
    "wall_ms",
)

RATES_COLUMNS = ("instance_id", "n", "m", "d", "shots", "collision_free", "rate")
BRANCHES_COLUMNS = ("instance_id", "beta_index", "amplitude_re", "amplitude_im", "prob")
WITNESS_COLUMNS = ("n", "t", "d", "size", "rank", "expected_rank", "max_offdiag", "ok")
FERMIONANT_COLUMNS = ("n", "d", "det_err", "perm_err", "closure_err", "ok")


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    n_values: tuple[int, ...]
    d_values: tuple[int, ...] = (2,)
    kappa: float = 0.5
    epsilon: float = 1e-3
    instances: int = 200
    shots_per_instance: int = 1000
    seed: int = 0
    boundary_l: int = 0
    boundary_r: int = 0
    control: str = "monitored"
    out_dir: str | None = None
    threads: int = 1
    record_timings: bool = False
    include_branches: bool = False
    max_attempts: int = 200
    chi_boundaries: str = "contracted"
    witness_t: int | None = None

    def validate(self) -> None:
        if self.mode not in MODES:
            raise InvalidConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if not self.n_values:
            raise InvalidConfigError("n_values must be nonempty")
        if any(n < 1 for n in self.n_values):
            raise InvalidConfigError(f"n values must be >= 1: {self.n_values}")
        if any(d < 2 for d in self.d_values):
            raise InvalidConfigError(f"d values must be >= 2: {self.d_values}")
        if not self.kappa > 0:
            raise InvalidConfigError(f"kappa must be > 0, got {self.kappa}")
        if self.epsilon < 0:
            raise InvalidConfigError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.instances < 1:
            raise InvalidConfigError("instances must be >= 1")
        if self.shots_per_instance < 1:
            raise InvalidConfigError("shots_per_instance must be >= 1")
        if self.control not in ("monitored", "commuting"):
            raise InvalidConfigError(f"control must be monitored|commuting, got {self.control!r}")
        if self.control == "commuting" and self.mode == "rates":
            raise InvalidConfigError("the commuting control has no monitoring stage; rates mode requires monitored")
        if self.boundary_l < 0 or self.boundary_r < 0:
            raise InvalidConfigError("boundary labels must be >= 0")
        if any(self.boundary_l >= d or self.boundary_r >= d for d in self.d_values):
            raise InvalidConfigError("boundary labels must be < every d in the grid")
        if self.chi_boundaries not in ("contracted", "open"):
            raise InvalidConfigError(f"chi_boundaries must be contracted|open, got {self.chi_boundaries!r}")
        if self.threads < 1:
            raise InvalidConfigError("threads must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidConfigError(f"unknown config fields: {sorted(unknown)}")
        data = dict(data)
        for key in ("n_values", "d_values"):
            if key in data:
                data[key] = tuple(int(x) for x in data[key])
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["n_values"] = list(self.n_values)
        out["d_values"] = list(self.d_values)
        return out


@dataclass
class RunRecord:
    instance_id: int
    seed: int
    n: int
    m: int
    d: int
    attempts: int | None = None
    chi_max: int | None = None
    nu_nc: float | None = None
    gamma: float | None = None
    haar_ratio: float | None = None
    ks_pt: float | None = None
    anticonc_frac: float | None = None
    wall_ms: int = 0

    def row(self) -> tuple:
        return tuple(getattr(self, c) for c in INSTANCES_COLUMNS)


@dataclass
class OutputBundle:
    manifest: dict
    records: list = field(default_factory=list)
    rates_rows: list = field(default_factory=list)
    branch_rows: list = field(default_factory=list)
    witness_rows: list = field(default_factory=list)
    fermionant_rows: list = field(default_factory=list)
    out_dir: str | None = None

    def write(self) -> list[str]:
        if self.out_dir is None:
            return []
        base = Path(self.out_dir)
        base.mkdir(parents=True, exist_ok=True)
        written = []

        def _dump_csv(name: str, header, rows) -> None:
            path = base / name
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(",".join(header) + "\n")
                for row in rows:
                    fh.write(",".join(_fmt(v) for v in row) + "\n")
            written.append(str(path))

        path = base / "manifest.json"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.manifest, fh, sort_keys=True, indent=2)
            fh.write("\n")
        written.append(str(path))
        _dump_csv("instances.csv", INSTANCES_COLUMNS, [r.row() for r in self.records])
        if self.rates_rows:
            _dump_csv("rates.csv", RATES_COLUMNS, self.rates_rows)
        if self.branch_rows:
            _dump_csv("branches.csv", BRANCHES_COLUMNS, self.branch_rows)
        if self.witness_rows:
            _dump_csv("witness.csv", WITNESS_COLUMNS, self.witness_rows)
        if self.fermionant_rows:
            _dump_csv("fermionant.csv", FERMIONANT_COLUMNS, self.fermionant_rows)
        return written


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def resolve_threads(configured: int) -> int:
    env = os.environ.get("NCFLO_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidConfigError(f"NCFLO_THREADS must be an integer, got {env!r}")
    return max(1, configured)


def _instance_task(cfg: ExperimentConfig, n: int, d: int, instance_id: int) -> tuple[RunRecord, list, list]:
    seed = derive_seed(cfg.seed, instance_id)
    rng = RngStream(seed)
    t0 = time.perf_counter() if cfg.record_timings else 0.0
    geometry = DiluteConfig(n=n, d=d, kappa=cfg.kappa)
    record = RunRecord(instance_id=instance_id, seed=seed, n=n, m=geometry.m, d=d)
    rates_rows: list = []
    branch_rows: list = []

    if cfg.mode == "rates":
        V = make_instance(geometry, rng)
        try:
            _, _, attempts = post_select(V, geometry, rng, max_attempts=cfg.max_attempts)
            record.attempts = attempts
        except PostSelectionError:
            record.attempts = cfg.max_attempts
        hits = collision_rate_trials(V, geometry, rng, cfg.shots_per_instance)
        rates_rows.append(
            (instance_id, n, geometry.m, d, cfg.shots_per_instance, hits, hits / cfg.shots_per_instance)
        )
    else:
        if cfg.control == "commuting":
            sub, beta = commuting_control_instance(n, d, rng, kappa=cfg.kappa)
            record.attempts = 1
        else:
            V = make_instance(geometry, rng)
            _, sub, attempts = post_select(V, geometry, rng, max_attempts=cfg.max_attempts)
            record.attempts = attempts
            beta = None
        table = amplitude_table(sub, cfg.boundary_l, cfg.boundary_r)
        p = conditional_distribution(table)
        if beta is None:
            beta = sample_outcome(table, rng)
        record.nu_nc = nc_score(dress(sub, beta)).value
        pt = porter_thomas_stats(p)
        record.gamma = pt.gamma
        record.haar_ratio = pt.haar_ratio
        record.ks_pt = pt.ks_distance
        record.anticonc_frac = pt.anticoncentration
        if cfg.mode in ("chi", "all"):
            tensor = routing_tensor(
                sub, beta, cfg.boundary_l, cfg.boundary_r, boundaries=cfg.chi_boundaries
            )
            record.chi_max = chi_profile(tensor, cfg.epsilon).chi_max
        if cfg.mode == "branch" or cfg.include_branches:
            amps = table.amplitudes
            for idx in range(amps.size):
                branch_rows.append(
                    (instance_id, idx, amps[idx].real, amps[idx].imag, p[idx])
                )

    if cfg.record_timings:
        record.wall_ms = int(round((time.perf_counter() - t0) * 1000))
    return record, rates_rows, branch_rows


def _references(cfg: ExperimentConfig) -> dict:
    refs: dict = {
        "haar_ratio": 1.0,
        "pt_law": {"form": "exp(-x)", "rate": 1.0},
        "anticoncentration": float(np.exp(-1.0)),
        "ginibre_nc_mean": {
            str(d): GINIBRE_NC_REFERENCE.get(d) for d in cfg.d_values
        },
        "p_infinity": {},
        "p_exact": {},
        "haar_gamma_mean": {},
    }
    for d in cfg.d_values:
        refs["p_infinity"][f"d={d}"] = collision_free_rate_asymptotic(cfg.kappa, d)
        for n in cfg.n_values:
            try:
                geometry = DiluteConfig(n=n, d=d, kappa=cfg.kappa)
            except InvalidConfigError:
                continue  # the run loop records the skip
            refs["p_exact"][f"n={n},d={d}"] = collision_free_rate_exact(n, geometry.m, d)
            refs["haar_gamma_mean"][f"n={n},d={d}"] = 2.0 / (float(d) ** (2 * n) + 1.0)
    return refs


def _manifest(cfg: ExperimentConfig, threads: int) -> dict:
    return {
        "code_version": VERSION,
        "schema_version": SCHEMA_VERSION,
        "config": cfg.to_dict(),
        "threads_used": threads,
        "conventions": {
            "byproduct": "dressed blocks S^T D_beta; fusion projectors share the labels",
            "chi_boundaries": cfg.chi_boundaries,
            "chi_eps_mode": "relative",
            "outcome_index": "beta_1 most significant, pair code a*d+b",
            "control_scalars": "post-selected sub-matrix of a Haar unitary over blocks",
            "derived_seeds": "splitmix64(splitmix64(master) xor splitmix64(index+1))",
            "timing_capture": cfg.record_timings,
        },
        "references": _references(cfg),
        "tables": [],
        "skipped_points": [],
        "post_selection_failures": 0,
    }


def _fermionant_point(n: int, d: int, rng: RngStream) -> tuple:
    """Fermionant specializations plus the cyclic-closure identity at (n, d)."""
    gen = rng.gen
    w = gen.standard_normal((n, n)) + 1j * gen.standard_normal((n, n))
    det_err = abs(fermionant(w, 1.0) - complex(np.linalg.det(w)))
    perm_val = sum(
        np.prod(w[np.arange(n), list(img)]) for img in itertools.permutations(range(n))
    )
    perm_err = abs(fermionant(w, -1.0) - (-1.0) ** n * perm_val)

    # Scalar-block instance at trivial outcomes: the trace of the branch
    # operator over d reduces to a row-shifted fermionant at weight d.
    sub, _ = commuting_control_instance(n, d, rng)
    beta0 = np.zeros((n, 2), dtype=np.int64)
    closure = cyclic_closure(sub, beta0)
    scalars = sub.blocks[:, :, 0, 0]
    shift = Permutation.from_images([n - 1] + list(range(n - 1)))
    inv = shift.inverse().images
    w_shift = scalars[list(inv), :]
    reference = shift.sign * fermionant(w_shift, d) / float(d) ** (n + 1)
    closure_err = abs(closure - reference)
    ok = det_err < 1e-12 and perm_err < 1e-12 and closure_err < 1e-9
    return (n, d, det_err, perm_err, closure_err, ok)


def run_ensemble(cfg: ExperimentConfig) -> OutputBundle:
    """Execute the configured experiment and return (and optionally write) a bundle."""
    cfg.validate()
    threads = resolve_threads(cfg.threads)
    manifest = _manifest(cfg, threads)
    bundle = OutputBundle(manifest=manifest, out_dir=cfg.out_dir)

    if cfg.mode == "witness":
        for d, n in product(cfg.d_values, cfg.n_values):
            t = cfg.witness_t if cfg.witness_t is not None else n // 2
            try:
                wit = rank_witness(n, t, d)
            except (CapacityError, InvalidConfigError) as exc:
                manifest["skipped_points"].append({"n": n, "d": d, "reason": str(exc)})
                continue
            ok = wit.rank == wit.expected_rank and wit.max_offdiag < 1e-12
            bundle.witness_rows.append(
                (n, t, d, len(wit.subsets), wit.rank, wit.expected_rank, wit.max_offdiag, ok)
            )
    elif cfg.mode == "fermionant-check":
        for index, (d, n) in enumerate(product(cfg.d_values, cfg.n_values)):
            rng = RngStream(derive_seed(cfg.seed, index))
            try:
                bundle.fermionant_rows.append(_fermionant_point(n, d, rng))
            except CapacityError as exc:
                manifest["skipped_points"].append({"n": n, "d": d, "reason": str(exc)})
    else:
        tasks = []
        instance_id = 0
        for d, n in product(cfg.d_values, cfg.n_values):
            try:
                DiluteConfig(n=n, d=d, kappa=cfg.kappa)
            except InvalidConfigError as exc:
                manifest["skipped_points"].append({"n": n, "d": d, "reason": str(exc)})
                continue
            for _ in range(cfg.instances):
                tasks.append((n, d, instance_id))
                instance_id += 1

        def run_one(task):
            n, d, iid = task
            try:
                return _instance_task(cfg, n, d, iid)
            except PostSelectionError:
                seed = derive_seed(cfg.seed, iid)
                geometry = DiluteConfig(n=n, d=d, kappa=cfg.kappa)
                rec = RunRecord(
                    instance_id=iid, seed=seed, n=n, m=geometry.m, d=d,
                    attempts=cfg.max_attempts,
                )
                return rec, [], ["__failed__"]

        if threads == 1:
            results = [run_one(t) for t in tasks]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(run_one, tasks))
        failures = 0
        for rec, rates_rows, branch_rows in results:
            bundle.records.append(rec)
            bundle.rates_rows.extend(rates_rows)
            if branch_rows == ["__failed__"]:
                failures += 1
            else:
                bundle.branch_rows.extend(branch_rows)
        manifest["post_selection_failures"] = failures
        bundle.records.sort(key=lambda r: r.instance_id)
        bundle.rates_rows.sort(key=lambda r: r[0])
        bundle.branch_rows.sort(key=lambda r: (r[0], r[1]))

    manifest["tables"] = ["instances.csv"]
    if bundle.rates_rows:
        manifest["tables"].append("rates.csv")
    if bundle.branch_rows:
        manifest["tables"].append("branches.csv")
    if bundle.witness_rows:
        manifest["tables"].append("witness.csv")
    if bundle.fermionant_rows:
        manifest["tables"].append("fermionant.csv")
    bundle.write()
    return bundle
