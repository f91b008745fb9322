"""Command-line interface.

Subcommands: ``sweep``, ``average``, ``repeat``, ``dfs``, ``tomo-demo``.
Each accepts ``--config <json>`` (a flat key/value file mirroring
``ExperimentConfig``) plus flags that override individual fields. Every run
writes its data artifact plus a ``<stem>.meta.json`` with the full config
echo, so outputs are reproducible byte-for-byte from the metadata.

Exit codes: 0 success, 2 config/validation error, 3 accuracy error,
4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .bloch_svg import render_bloch_svg
from .errors import AccuracyError, FileError, ValidationError
from .experiments import (
    ExperimentConfig,
    average_fidelity_converged,
    dfs_two_qubit,
    mc_repeated_recovery,
    repeated_recovery,
    sweep_csv_text,
    sweep_p,
)
from .states import bloch_from_rho
from .tomography import CountRecord, reconstruct_bloch
from .trajectories import NoiseModel, build_recovery_sequence, evaluate_deterministic, run_batch
from . import rng

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ACCURACY = 3
EXIT_IO = 4


def _add_common(sub: argparse.ArgumentParser):
    sub.add_argument("--config", help="JSON config file (flat key/value)")
    sub.add_argument("--experiment", help="must match the subcommand if given")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--epsilon", type=float)
    sub.add_argument("--shots", type=int)
    sub.add_argument("--output-path", dest="output_path")
    sub.add_argument("--phi-kind", dest="phi_kind", choices=("none", "gaussian", "uniform"))
    sub.add_argument("--phi-scale", dest="phi_scale", type=float)
    sub.add_argument("--phi-offset", dest="phi_offset", type=float)
    sub.add_argument("--pi-pulse-angle-error", dest="pi_pulse_angle_error", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="collapse-recovery",
        description="Simulate heralded recovery of a qubit from partial collapse.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    sweep = subs.add_parser("sweep", help="fidelity sweep over (state, p) with MC tomography")
    _add_common(sweep)
    sweep.add_argument("--p-values", dest="p_values", help="comma-separated p grid")
    sweep.add_argument("--states", help="comma-separated subset of 0,1,x,y")
    sweep.add_argument("--n-bootstrap", dest="n_bootstrap", type=int)
    sweep.add_argument("--cpmg", dest="cpmg", action="store_true", default=None)
    sweep.add_argument("--no-cpmg", dest="cpmg", action="store_false", default=None)

    avg = subs.add_parser("average", help="Bloch-sphere averaged fidelity of a protocol")
    _add_common(avg)
    avg.add_argument("--protocol", choices=("M", "Rprime"))
    avg.add_argument("--p", type=float)
    avg.add_argument("--nodes", type=int)
    avg.add_argument("--quadrature", choices=("fibonacci", "random"))

    rep = subs.add_parser("repeat", help="repeated-recovery success asymptotics")
    _add_common(rep)
    rep.add_argument("--gamma-t", dest="gamma_t", type=float)
    rep.add_argument("--n-repeats", dest="n_repeats", type=int)

    dfs = subs.add_parser("dfs", help="two-qubit protected-encoding check")
    _add_common(dfs)
    dfs.add_argument("--p", type=float)
    dfs.add_argument("--a-re", dest="a_re", type=float)
    dfs.add_argument("--a-im", dest="a_im", type=float)
    dfs.add_argument("--b-re", dest="b_re", type=float)
    dfs.add_argument("--b-im", dest="b_im", type=float)

    demo = subs.add_parser(
        "tomo-demo", help="tomograph mid-sequence states across p and render an SVG"
    )
    _add_common(demo)
    demo.add_argument("--p-values", dest="p_values", help="comma-separated p grid")
    demo.add_argument("--states", help="single input state label")

    return parser


def _parse_list(text):
    if text is None:
        return None
    return [t.strip() for t in text.split(",") if t.strip()]


def load_config(args: argparse.Namespace, command: str) -> ExperimentConfig:
    cfg = ExperimentConfig(experiment=command)
    if args.config:
        try:
            cfg = ExperimentConfig.from_file(args.config)
        except FileNotFoundError as exc:
            raise FileError(f"config file not found: {args.config}") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config file is not valid JSON: {exc}") from exc
    overrides = {}
    for name in (
        "seed",
        "epsilon",
        "shots",
        "output_path",
        "phi_kind",
        "phi_scale",
        "phi_offset",
        "pi_pulse_angle_error",
        "n_bootstrap",
        "cpmg",
        "protocol",
        "p",
        "nodes",
        "quadrature",
        "gamma_t",
        "n_repeats",
        "a_re",
        "a_im",
        "b_re",
        "b_im",
    ):
        if hasattr(args, name) and getattr(args, name) is not None:
            overrides[name] = getattr(args, name)
    if getattr(args, "p_values", None) is not None:
        overrides["p_values"] = tuple(float(x) for x in _parse_list(args.p_values))
    if getattr(args, "states", None) is not None:
        overrides["states"] = tuple(_parse_list(args.states))
    overrides["experiment"] = command
    if args.experiment is not None and args.experiment != command:
        raise ValidationError(
            f"--experiment {args.experiment!r} conflicts with subcommand {command!r}"
        )
    return cfg.with_overrides(**overrides)


def _resolve_output(cfg: ExperimentConfig, default_name: str) -> str:
    return cfg.output_path or default_name


def _write_text(path: str, text: str):
    directory = os.path.dirname(path)
    if directory:
        try:
            os.makedirs(directory, exist_ok=True)
        except OSError as exc:
            raise FileError(f"cannot create directory {directory}: {exc}") from exc
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise FileError(f"cannot write {path}: {exc}") from exc


def _write_metadata(cfg: ExperimentConfig, data_path: str, payload: dict):
    stem, _ = os.path.splitext(data_path)
    meta = {
        "config": json.loads(cfg.to_json()),
        "version": __version__,
        "outputs": [os.path.basename(data_path)],
        "results": payload,
    }
    _write_text(stem + ".meta.json", json.dumps(meta, sort_keys=True, indent=2) + "\n")


def _cmd_sweep(cfg: ExperimentConfig) -> int:
    rows = sweep_p(cfg)
    out = _resolve_output(cfg, "recovery_sweep.csv")
    _write_text(out, sweep_csv_text(rows))
    _write_metadata(cfg, out, {"rows": len(rows)})
    print(f"wrote {out} ({len(rows)} rows)")
    return EXIT_OK


def _cmd_average(cfg: ExperimentConfig) -> int:
    value, delta = average_fidelity_converged(
        p=cfg.p,
        protocol=cfg.protocol,
        epsilon=cfg.epsilon,
        quadrature=cfg.quadrature,
        nodes=cfg.nodes,
    )
    out = _resolve_output(cfg, "recovery_average.json")
    payload = {
        "protocol": cfg.protocol,
        "p": cfg.p,
        "epsilon": cfg.epsilon,
        "nodes": cfg.nodes,
        "average_fidelity": value,
        "convergence_delta": delta,
    }
    _write_text(out, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    _write_metadata(cfg, out, payload)
    print(f"average fidelity ({cfg.protocol}, p={cfg.p}): {value:.6f}")
    return EXIT_OK


def _cmd_repeat(cfg: ExperimentConfig) -> int:
    result = repeated_recovery(cfg.gamma_t, cfg.n_repeats)
    payload = {
        "gamma_t": cfg.gamma_t,
        "n": cfg.n_repeats,
        "p_segment": result.p_segment,
        "success_prob": result.success_prob,
        "asymptote": result.asymptote,
    }
    if cfg.shots is not None:
        frac, sigma = mc_repeated_recovery(cfg.gamma_t, cfg.n_repeats, cfg.shots, cfg.seed)
        payload["mc_success"] = frac
        payload["mc_sigma"] = sigma
    out = _resolve_output(cfg, "recovery_repeat.json")
    _write_text(out, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    _write_metadata(cfg, out, payload)
    print(f"repeated recovery success: {result.success_prob:.12f} (asymptote {result.asymptote:.12f})")
    return EXIT_OK


def _cmd_dfs(cfg: ExperimentConfig) -> int:
    result = dfs_two_qubit(cfg.p, complex(cfg.a_re, cfg.a_im), complex(cfg.b_re, cfg.b_im))
    payload = {
        "p": cfg.p,
        "a": [cfg.a_re, cfg.a_im],
        "b": [cfg.b_re, cfg.b_im],
        "post_selected_fidelity": result.post_selected_fidelity,
        "survival_prob": result.survival_prob,
    }
    out = _resolve_output(cfg, "recovery_dfs.json")
    _write_text(out, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    _write_metadata(cfg, out, payload)
    print(
        f"protected encoding at p={cfg.p}: fidelity {result.post_selected_fidelity:.12f}, "
        f"survival {result.survival_prob:.12f}"
    )
    return EXIT_OK


# Deterministic per-point drift of the quasi-static angle used by the demo,
# standing in for slow field drift between sweep points (radians per point).
_DEMO_PHI_DRIFT = 0.22


def _cmd_tomo_demo(cfg: ExperimentConfig) -> int:
    label = cfg.states[0] if cfg.states else "x"
    shots = cfg.shots if cfg.shots is not None else 6000
    measured = []
    predicted = []
    for k, p in enumerate(cfg.p_values):
        phi_k = cfg.phi_offset + _DEMO_PHI_DRIFT * k
        noise = NoiseModel(phi_kind="none", phi_offset=phi_k)
        records = []
        for axis_index, axis in enumerate(("x", "y", "z")):
            seq = build_recovery_sequence(
                initial=label, p=p, epsilon=cfg.epsilon, analysis_axis=axis, stage="collapse"
            )
            batch = run_batch(
                seq, noise, max(1, shots // 3), rng.derive_seed(cfg.seed, 91, k, axis_index)
            )
            records.append(
                CountRecord(axis=axis, n_up=batch.c_up_count, n_total=batch.accept_count)
            )
        measured.append(reconstruct_bloch(records))
        seq_z = build_recovery_sequence(
            initial=label, p=p, epsilon=cfg.epsilon, analysis_axis="z", stage="collapse"
        )
        det = evaluate_deterministic(seq_z, noise, phi=phi_k)
        predicted.append(bloch_from_rho(det.mid_state))
    out = _resolve_output(cfg, "recovery_tomo_demo.svg")
    render_bloch_svg(measured, out, title="Mid-sequence tomography")
    payload = {
        "state": label,
        "p_values": list(cfg.p_values),
        "measured": [[b.x, b.y, b.z] for b in measured],
        "predicted": [[b.x, b.y, b.z] for b in predicted],
    }
    _write_metadata(cfg, out, payload)
    print(f"wrote {out} ({len(measured)} tomography points)")
    return EXIT_OK


_COMMANDS = {
    "sweep": _cmd_sweep,
    "average": _cmd_average,
    "repeat": _cmd_repeat,
    "dfs": _cmd_dfs,
    "tomo-demo": _cmd_tomo_demo,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args, args.command)
        return _COMMANDS[args.command](cfg)
    except AccuracyError as exc:
        print(f"accuracy error: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    except FileError as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValidationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
