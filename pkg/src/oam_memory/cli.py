"""Command-line runner: config in, CSV/JSON data and SVG figures out.

    simulate [config.json] [--profile NAME] [--out DIR] [--workers N] [--seed N]

Sweep points execute on a bounded process pool; all files are written by the
coordinating process. Exit codes: 0 success, 2 config error, 3 partial sweep
failure, 4 propagation failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    ConfigError,
    available_profiles,
    base_scenario_config,
    config_digest,
    expand_sweep,
    load_config,
    state_label,
)
from .dynamics import IntegrationError
from .hilbert import StateMatrix
from .metrics import wigner
from .protocols import (
    ProtocolResult,
    ScenarioConfig,
    map_to_qubit_basis,
    run_protocol,
)

ENV_OUT = "OAM_MEMORY_OUT"
ENV_WORKERS = "OAM_MEMORY_WORKERS"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3
EXIT_PROPAGATION = 4

_SUMMARY_COLUMNS = (
    "point",
    "kind",
    "coupling_ratio",
    "coupling_source",
    "storage_time",
    "winding_number",
    "oam_index",
    "atom_count",
    "interactions_enabled",
    "t_off_offset",
    "initial_state",
    "t_off",
    "t_read",
    "fidelity",
    "classical_bound",
    "log_negativity",
    "wigner_min",
    "n_photonic_retrieved",
    "constraints_ok",
    "status",
)


def _fmt(value) -> str:
    """12-significant-digit numeric formatting; locale-free."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _write_csv(path: Path, header, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _write_json(path: Path, payload: dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def emit_density_matrix(matrix, path: Path, basis_labels, *, discarded_weight=None) -> list[Path]:
    """Write a density matrix as JSON (real/imag parts) plus an SVG rendering."""
    from . import plotting

    matrix = np.asarray(matrix)
    labels = list(basis_labels)
    if matrix.shape != (len(labels), len(labels)):
        raise ValueError(f"matrix shape {matrix.shape} does not match {len(labels)} labels")
    path = Path(path)
    payload = {
        "basis_labels": labels,
        "real": [[float(f"{v:.12g}") for v in row] for row in matrix.real],
        "imag": [[float(f"{v:.12g}") for v in row] for row in matrix.imag],
    }
    if discarded_weight is not None:
        payload["discarded_weight"] = float(f"{discarded_weight:.12g}")
    written = [_write_json(path, payload)]
    written.append(
        plotting.save_density_matrix_figure(matrix, labels, path.with_suffix(".svg"))
    )
    return written


def _density_payload(state: StateMatrix, kind: str):
    """Matrix + labels in the reporting basis for a photonic state."""
    if kind in ("single", "fock_series"):
        cut = state.space.modes[0].cutoff
        return state.data, [f"|{n}>" for n in range(cut)], None
    if kind == "superposition":
        proj = map_to_qubit_basis(state)
        return proj.matrix, [f"|{k}>" for k in range(4)], proj.discarded_weight
    labels = [f"|{p}>|{q}>" for p in range(4) for q in range(4)]
    return state.data, labels, None


@dataclasses.dataclass
class RunManifest:
    config_digest: str
    engine_version: str
    outputs: list[str]
    point_status: list[dict]
    constraints: dict
    wall_time_s: float
    workers: int
    seed: int | None

    @property
    def failed_points(self) -> int:
        return sum(1 for p in self.point_status if p["status"] != "ok")

    def as_dict(self) -> dict:
        return {
            "config_digest": self.config_digest,
            "engine_version": self.engine_version,
            "outputs": self.outputs,
            "points_total": len(self.point_status),
            "points_failed": self.failed_points,
            "point_status": self.point_status,
            "constraints": self.constraints,
            "wall_time_s": self.wall_time_s,
            "workers": self.workers,
            "seed": self.seed,
        }


def _execute_point(job: tuple[ScenarioConfig, dict | None]) -> ProtocolResult:
    cfg, wigner_grid = job
    return run_protocol(cfg, wigner_grid=wigner_grid)


def _run_points(jobs, workers: int):
    """Run every point, returning (result | exception) per point, in order."""
    outcomes: list = [None] * len(jobs)
    if workers <= 1 or len(jobs) <= 1:
        for i, job in enumerate(jobs):
            try:
                outcomes[i] = _execute_point(job)
            except Exception as exc:  # recorded per point
                outcomes[i] = exc
        return outcomes
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(_execute_point, job): i for i, job in enumerate(jobs)}
        for future, i in futures.items():
            try:
                outcomes[i] = future.result()
            except Exception as exc:
                outcomes[i] = exc
    return outcomes


def _axis_value_for_summary(axes: dict, key: str, cfg: ScenarioConfig):
    if key in axes:
        value = axes[key]
        return state_label(value) if key == "initial_state" else value
    return None


def run(resolved: dict, out_dir: Path, workers: int, seed: int | None = None) -> RunManifest:
    """Execute every sweep point of a resolved config and write all outputs."""
    from . import plotting

    started = time.perf_counter()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    points = expand_sweep(resolved)
    configs = [base_scenario_config(resolved, axes) for axes in points]
    output_opts = resolved["output"]
    label = output_opts["label"]
    single_point = len(points) == 1

    want_trajectory = output_opts["trajectory"]
    if want_trajectory is None:
        want_trajectory = single_point
    want_density = output_opts["density_matrices"]
    if want_density is None:
        want_density = single_point
    want_wigner = output_opts["wigner"]
    if want_wigner is None:
        want_wigner = all(cfg.kind == "fock_series" for cfg in configs) and len(points) <= 8
    wigner_grid = {} if want_wigner else None

    outcomes = _run_points([(cfg, wigner_grid) for cfg in configs], workers)

    outputs: list[Path] = []
    outputs.append(_write_json(out_dir / "resolved_config.json", resolved))

    # ---- summary.csv ----
    rows = []
    for i, (axes, cfg, outcome) in enumerate(zip(points, configs, outcomes)):
        ok = isinstance(outcome, ProtocolResult)
        init_label = state_label(
            cfg.initial_state
        ) if cfg.initial_state is not None else state_label(
            _default_terms_for_summary(cfg)
        )
        row = [
            i,
            cfg.kind,
            cfg.coupling_ratio,
            cfg.coupling_source,
            cfg.storage_time,
            cfg.physical.winding_number,
            cfg.physical.oam_index,
            cfg.physical.atom_count,
            cfg.interactions_enabled,
            cfg.t_off_offset,
            init_label,
            outcome.schedule.t_off if ok else None,
            outcome.schedule.t_read if ok else None,
            outcome.metrics.fidelity if ok else None,
            outcome.metrics.classical_bound if ok else None,
            outcome.metrics.log_negativity if ok else None,
            outcome.metrics.wigner_min if ok else None,
            sum(outcome.metrics.mean_occupations.values()) if ok else None,
            outcome.constraints.all_ok if ok else None,
            "ok" if ok else f"error: {outcome}",
        ]
        rows.append(row)
    outputs.append(_write_csv(out_dir / "summary.csv", _SUMMARY_COLUMNS, rows))

    results = [(i, axes, cfg, out) for i, (axes, cfg, out) in
               enumerate(zip(points, configs, outcomes))
               if isinstance(out, ProtocolResult)]

    # ---- per-point artifacts ----
    for i, axes, cfg, result in results:
        tag = label if single_point else f"{label}_p{i:04d}"
        if want_trajectory:
            traj = result.trajectory
            header = ["t"] + sorted(traj.observables)
            rows = [
                [traj.times[k]] + [traj.observables[name][k] for name in sorted(traj.observables)]
                for k in range(traj.times.size)
            ]
            outputs.append(_write_csv(out_dir / f"trajectory_{tag}.csv", header, rows))
            if output_opts["figures"]:
                outputs.append(
                    plotting.save_protocol_figure(
                        traj, result.schedule, out_dir / f"protocol_{tag}.svg",
                        title=f"{cfg.kind} protocol",
                    )
                )
        if want_density:
            for which, state in (("initial", result.rho_initial),
                                 ("retrieved", result.rho_retrieved)):
                matrix, labels, discarded = _density_payload(state, cfg.kind)
                outputs.extend(
                    emit_density_matrix(
                        matrix, out_dir / f"density_{which}_{tag}.json", labels,
                        discarded_weight=discarded,
                    )
                )
        if want_wigner and output_opts["figures"]:
            for which, state in (("initial", result.rho_initial),
                                 ("retrieved", result.rho_retrieved)):
                xs, ps, wgrid = wigner(state)
                outputs.append(
                    plotting.save_wigner_figure(
                        xs, ps, wgrid, out_dir / f"wigner_{which}_{tag}.svg",
                        title=f"{which} Wigner function",
                    )
                )

    # ---- sweep curves (per-ratio CSV) and figures ----
    axis_names = [name for name in points[0]] if points and points[0] else []
    if results and not single_point and "storage_time" in axis_names:
        _write_storage_curves(results, out_dir, label, outputs)
    if output_opts["figures"] and results and not single_point:
        _write_sweep_figures(results, axis_names, out_dir, label, outputs)

    status = []
    for i, outcome in enumerate(outcomes):
        if isinstance(outcome, ProtocolResult):
            status.append({"point": i, "status": "ok"})
        else:
            status.append({"point": i, "status": "error", "error": str(outcome)})

    base_constraints = (
        results[0][3].constraints.as_dict() if results else {}
    )
    for path in outputs:
        if not Path(path).exists() or Path(path).stat().st_size == 0:
            raise RuntimeError(f"output file missing or empty: {path}")

    manifest = RunManifest(
        config_digest=config_digest(resolved),
        engine_version=__version__,
        outputs=sorted(str(Path(p).relative_to(out_dir)) for p in outputs),
        point_status=status,
        constraints=base_constraints,
        wall_time_s=time.perf_counter() - started,
        workers=workers,
        seed=seed,
    )
    _write_json(out_dir / "manifest.json", manifest.as_dict())
    return manifest


def _default_terms_for_summary(cfg: ScenarioConfig):
    from .protocols import _default_initial_terms

    return _default_initial_terms(cfg.kind)


def _write_storage_curves(results, out_dir: Path, label: str, outputs: list):
    """One (storage_time, metric) CSV per coupling ratio, bound included."""
    by_ratio: dict[float, list] = {}
    for _, axes, cfg, result in results:
        by_ratio.setdefault(cfg.coupling_ratio, []).append(
            (axes.get("storage_time", cfg.storage_time), result)
        )
    for ratio, entries in sorted(by_ratio.items()):
        entries.sort(key=lambda item: item[0])
        has_negativity = entries[0][1].metrics.log_negativity is not None
        header = ["storage_time", "fidelity", "classical_bound"]
        if has_negativity:
            header.append("log_negativity")
        rows = []
        for storage, result in entries:
            row = [storage, result.metrics.fidelity, result.metrics.classical_bound]
            if has_negativity:
                row.append(result.metrics.log_negativity)
            rows.append(row)
        outputs.append(
            _write_csv(out_dir / f"curve_ratio{ratio:g}_{label}.csv", header, rows)
        )


def _write_sweep_figures(results, axis_names, out_dir: Path, label: str, outputs: list):
    from . import plotting

    def group_by_ratio(metric):
        groups: dict[str, tuple[list, list]] = {}
        for _, axes, cfg, result in results:
            value = metric(result)
            if value is None:
                continue
            key = f"G/g0 = {cfg.coupling_ratio:g}"
            groups.setdefault(key, ([], []))
            groups[key][0].append(axes.get("storage_time", cfg.storage_time))
            groups[key][1].append(value)
        return {k: (np.asarray(x), np.asarray(y)) for k, (x, y) in groups.items()}

    bound = results[0][3].metrics.classical_bound
    if "storage_time" in axis_names:
        groups = group_by_ratio(lambda r: r.metrics.fidelity)
        if groups:
            outputs.append(
                plotting.save_storage_sweep_figure(
                    groups, bound, "retrieval fidelity",
                    out_dir / f"fidelity_vs_storage_{label}.svg",
                )
            )
        neg_groups = group_by_ratio(lambda r: r.metrics.log_negativity_floored)
        if any(y.size for _, y in neg_groups.values()):
            outputs.append(
                plotting.save_storage_sweep_figure(
                    neg_groups, None, "logarithmic negativity",
                    out_dir / f"log_negativity_vs_storage_{label}.svg",
                )
            )
        return

    for axis in ("winding_number", "oam_index", "t_off_offset"):
        if axis not in axis_names:
            continue
        groups: dict[str, tuple[list, list]] = {}
        for _, axes, cfg, result in results:
            key = "with interactions" if cfg.interactions_enabled else "no interactions"
            groups.setdefault(key, ([], []))
            groups[key][0].append(axes[axis])
            groups[key][1].append(result.metrics.fidelity)
        outputs.append(
            plotting.save_axis_sweep_figure(
                {k: (np.asarray(x), np.asarray(y)) for k, (x, y) in groups.items()},
                axis, "retrieval fidelity",
                out_dir / f"fidelity_vs_{axis}_{label}.svg",
            )
        )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Run quantum-memory protocol simulations from a JSON config.",
    )
    parser.add_argument("config", nargs="?", default=None,
                        help="JSON config file (defaults to the built-in profile)")
    parser.add_argument("--profile", default=None,
                        help=f"named profile: {', '.join(available_profiles())}")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--workers", type=int, default=None,
                        help="process pool size for sweep points")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed recorded for randomized test utilities; the "
                             "dynamics themselves are deterministic")
    args = parser.parse_args(argv)

    out_dir = Path(args.out or os.environ.get(ENV_OUT) or "out")
    workers = args.workers
    if workers is None:
        env_workers = os.environ.get(ENV_WORKERS)
        workers = int(env_workers) if env_workers else (os.cpu_count() or 1)
    if workers < 1:
        print(f"error: workers must be >= 1, got {workers}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        resolved = load_config(args.config, profile=args.profile)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        manifest = run(resolved, out_dir, workers, seed=args.seed)
    except IntegrationError as exc:
        print(f"propagation failure: {exc}", file=sys.stderr)
        return EXIT_PROPAGATION

    failed = manifest.failed_points
    total = len(manifest.point_status)
    print(
        f"{total - failed}/{total} points ok; outputs in {out_dir} "
        f"(digest {manifest.config_digest[:12]})"
    )
    violated = [name for name, entry in manifest.constraints.items() if not entry["ok"]]
    if violated:
        print(
            "warning: parameter-regime checks violated (runs kept, results "
            f"tagged in the manifest): {', '.join(violated)}",
            file=sys.stderr,
        )
    if failed == total:
        return EXIT_PROPAGATION
    if failed:
        return EXIT_PARTIAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
