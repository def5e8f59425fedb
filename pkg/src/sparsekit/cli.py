"""Batch command-line front end.

Subcommands: analyze (frame report), recover (single solve), oracle
(exhaustive search), phase (phase-transition grid), dictlearn (synthetic
dictionary study). Experiment commands read a JSON config, write their
outputs atomically, and drop a manifest that reproduces the run byte for
byte; a manifest is itself accepted wherever a config is.

Exit codes: 0 success, 1 usage/config error, 2 numerical or solver failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .core import MatrixParseError, load_matrix
from .experiments import (
    SOLVERS,
    PhaseConfig,
    SynthDictConfig,
    phase_grid,
    synth_dict_experiment,
    volume_score,
    write_atoms_table_csv,
    write_cells_csv,
    write_heatmap_svg,
    write_learn_curves_csv,
)
from .frame_analysis import analyze_frame, exhaustive_p0

__all__ = ["main"]


class UsageError(Exception):
    """Bad arguments or config; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_writer(write_fn, *args) -> None:
    """Run a file-writing function against a temp path, then rename."""

    def _to(path):
        directory = os.path.dirname(os.path.abspath(path))
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
        os.close(fd)
        try:
            write_fn(*args, tmp)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    return _to


def _json_text(payload) -> str:
    return json.dumps(payload, indent=2) + "\n"


def _load_signal(path) -> np.ndarray:
    mat = load_matrix(path)
    if 1 not in mat.shape:
        raise UsageError(f"{path}: signal file must be a single row or column")
    return mat.reshape(-1)


_PHASE_SCHEMA = {
    "scale": (str, "desk"),
    "n": (int, None),
    "grid_size": (int, None),
    "trials": (int, None),
    "solvers": (list, None),
    "seed": (int, 0),
}

_DICTLEARN_SCHEMA = {
    "sizes": (list, [[50, 100]]),
    "k": (list, [5]),
    "examples": (int, 2000),
    "iterations": (int, 50),
    "noise_snr_db": (list, [None]),
    "trials": (int, 10),
    "algorithms": (list, ["ksvd", "rsvd"]),
    "group_size": (int, 5),
    "seed": (int, 0),
}

_SCHEMAS = {"phase": _PHASE_SCHEMA, "dictlearn": _DICTLEARN_SCHEMA}


def parse_config(path: str, command: str) -> dict:
    """Load and validate a JSON config (or a manifest from a previous run).

    Unknown keys and type mismatches raise `UsageError` naming the key;
    missing keys take their documented defaults.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise UsageError(f"{path}: config must be a JSON object")

    if "command" in raw and "config" in raw:  # a manifest from a previous run
        if raw["command"] != command:
            raise UsageError(
                f"{path}: manifest is for command {raw['command']!r}, not {command!r}"
            )
        raw = dict(raw["config"])

    schema = _SCHEMAS[command]
    resolved = {}
    for key, value in raw.items():
        if key not in schema:
            raise UsageError(f"{path}: unknown config key {key!r}")
        expected, _ = schema[key]
        if value is not None and not isinstance(value, expected):
            raise UsageError(f"{path}: key {key!r} must be of type {expected.__name__}")
        resolved[key] = value
    for key, (_, default) in schema.items():
        resolved.setdefault(key, default)

    if command == "phase":
        if resolved["scale"] not in ("desk", "full"):
            raise UsageError(f"{path}: scale must be 'desk' or 'full'")
        if resolved["solvers"] is not None:
            bad = [s for s in resolved["solvers"] if s not in SOLVERS]
            if bad:
                raise UsageError(
                    f"{path}: unknown solver {bad[0]!r}; valid solvers: {', '.join(sorted(SOLVERS))}"
                )
    return resolved


def _phase_config(resolved: dict, seed_override: int | None) -> PhaseConfig:
    seed = resolved["seed"] if seed_override is None else seed_override
    base = {"desk": {"n": 50, "grid_size": 10, "trials": 20},
            "full": {"n": 100, "grid_size": 10, "trials": 100}}[resolved["scale"]]
    n = resolved["n"] or base["n"]
    grid_size = resolved["grid_size"] or base["grid_size"]
    trials = resolved["trials"] or base["trials"]
    solvers = tuple(resolved["solvers"]) if resolved["solvers"] else None
    return PhaseConfig.grid(n=n, grid_size=grid_size, trials=trials, solvers=solvers, seed=seed)


def _write_manifest(outdir: str, command: str, resolved: dict, seed: int) -> None:
    manifest = {
        "command": command,
        "toolkit_version": __version__,
        "seed": seed,
        "config": resolved,
    }
    _atomic_write(os.path.join(outdir, "manifest.json"), _json_text(manifest))


def _cmd_analyze(args) -> int:
    phi = load_matrix(args.matrix)
    report = analyze_frame(
        phi,
        ric_orders=tuple(range(1, args.ric_max + 1)),
        nsp_orders=tuple(range(1, args.nsp_max + 1)),
    )
    text = _json_text(report.to_json_dict())
    if args.output:
        _atomic_write(args.output, text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_recover(args) -> int:
    if args.solver not in SOLVERS:
        raise UsageError(
            f"unknown solver {args.solver!r}; valid solvers: {', '.join(sorted(SOLVERS))}"
        )
    phi = load_matrix(args.matrix)
    s = _load_signal(args.signal)
    result = SOLVERS[args.solver](phi, s, args.k)
    text = _json_text(result.to_json_dict())
    if args.output:
        _atomic_write(args.output, text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_oracle(args) -> int:
    phi = load_matrix(args.matrix)
    s = _load_signal(args.signal)
    result = exhaustive_p0(phi, s, args.k_max)
    text = _json_text(result.to_json_dict())
    if args.output:
        _atomic_write(args.output, text)
    else:
        sys.stdout.write(text)
    return 0


def _resolve_outdir(args) -> str:
    outdir = args.output_dir or os.environ.get("SPARSEKIT_OUTPUT_DIR") or "."
    os.makedirs(outdir, exist_ok=True)
    return outdir


def _resolve_jobs(args) -> int:
    if args.jobs is not None:
        return args.jobs
    env = os.environ.get("SPARSEKIT_JOBS")
    return int(env) if env else 1


def _cmd_phase(args) -> int:
    resolved = parse_config(args.config, "phase")
    cfg = _phase_config(resolved, args.seed)
    outdir = _resolve_outdir(args)
    cells = phase_grid(cfg, jobs=_resolve_jobs(args))

    _atomic_writer(write_cells_csv, cells, cfg)(os.path.join(outdir, "cells.csv"))
    scores = {name: volume_score(cells, name) for name in cfg.solvers}
    _atomic_write(os.path.join(outdir, "volumes.json"), _json_text({"volumes": scores}))
    for name in cfg.solvers:
        _atomic_writer(write_heatmap_svg, cells, name)(
            os.path.join(outdir, f"heatmap_{name}.svg")
        )
    resolved["seed"] = cfg.seed
    _write_manifest(outdir, "phase", resolved, cfg.seed)
    return 0


def _cmd_dictlearn(args) -> int:
    resolved = parse_config(args.config, "dictlearn")
    seed = resolved["seed"] if args.seed is None else args.seed
    resolved["seed"] = seed
    cfg = SynthDictConfig(
        sizes=tuple((int(n), int(m)) for n, m in resolved["sizes"]),
        k_values=tuple(int(k) for k in resolved["k"]),
        n_examples=resolved["examples"],
        iterations=resolved["iterations"],
        noise_snr_db=tuple(resolved["noise_snr_db"]),
        trials=resolved["trials"],
        algorithms=tuple(resolved["algorithms"]),
        group_size=resolved["group_size"],
        seed=seed,
    )
    outdir = _resolve_outdir(args)
    settings = synth_dict_experiment(cfg, jobs=_resolve_jobs(args))

    _atomic_writer(write_learn_curves_csv, settings)(os.path.join(outdir, "learn_curves.csv"))
    _atomic_writer(write_atoms_table_csv, settings)(os.path.join(outdir, "atoms_table.csv"))
    summary = {
        "settings": [
            {
                "n": s.n,
                "m": s.m,
                "k": s.k,
                "noise_snr_db": s.noise_snr_db,
                "algorithm": s.algorithm,
                "final_esnr_mean": s.final_esnr_mean,
                "atoms_recovered_mean": s.atoms_recovered_mean,
                "trials": s.trials,
            }
            for s in settings
        ]
    }
    _atomic_write(os.path.join(outdir, "summary.json"), _json_text(summary))
    _write_manifest(outdir, "dictlearn", resolved, seed)
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="sparsekit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"sparsekit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="frame-quality report for a CSV matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--ric-max", type=int, default=3)
    p.add_argument("--nsp-max", type=int, default=2)
    p.add_argument("--output")
    p.set_defaults(run=_cmd_analyze)

    p = sub.add_parser("recover", help="run one solver on one instance")
    p.add_argument("--matrix", required=True)
    p.add_argument("--signal", required=True)
    p.add_argument("--solver", required=True)
    p.add_argument("--k", type=int, default=None, help="target sparsity, if known")
    p.add_argument("--output")
    p.set_defaults(run=_cmd_recover)

    p = sub.add_parser("oracle", help="exhaustive sparsest-fit search")
    p.add_argument("--matrix", required=True)
    p.add_argument("--signal", required=True)
    p.add_argument("--k-max", type=int, required=True)
    p.add_argument("--output")
    p.set_defaults(run=_cmd_oracle)

    p = sub.add_parser("phase", help="phase-transition grid experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output-dir", default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(run=_cmd_phase)

    p = sub.add_parser("dictlearn", help="synthetic dictionary-learning study")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output-dir", default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(run=_cmd_dictlearn)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"sparsekit: {exc}", file=sys.stderr)
        return 1
    try:
        return args.run(args)
    except UsageError as exc:
        print(f"sparsekit: {exc}", file=sys.stderr)
        return 1
    except (MatrixParseError, FileNotFoundError) as exc:
        print(f"sparsekit: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # numerical / solver failure
        print(f"sparsekit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
