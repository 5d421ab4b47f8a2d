"""Command-line front end: ``qaeqec {train,validate,tomo,memory,discover}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from . import experiments as ex
from .codes import perfect_recovery
from .dqnn import InternalNoise, NetworkParams, QAECollection, channel_of, run_ops
from .io import (
    MODEL_SUFFIX,
    ModelFormatError,
    NumericalInvariantError,
    config_hash,
    load_model,
    provenance,
    save_model,
    write_csv,
)
from .linalg import StateValidityError
from .presets import ConfigError, PRESETS, build_code, build_grid, build_noise, build_training_config, resolve_config
from .tomography import (
    ConsistencyError,
    channel_distance,
    chi_matrix,
    choi_fidelity,
    reference_decoder_chi,
    reference_encoder_chi,
    write_chi_csv,
)

log = logging.getLogger("qaeqec")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TRAINING = 3
EXIT_NUMERICAL = 4


class TrainingFailure(RuntimeError):
    """Restart threshold unmet; outputs were still written."""


class Run:
    """Resolved configuration plus output bookkeeping for one command."""

    def __init__(self, command: str, cfg: dict[str, Any], out: Path):
        self.command = command
        self.cfg = cfg
        self.seed = int(cfg["seed"])
        self.out = out
        self.header = provenance(command, cfg, self.seed)
        out.mkdir(parents=True, exist_ok=True)
        record = {**self._provenance(), "config": cfg}
        (out / "resolved_config.json").write_text(json.dumps(record, indent=1) + "\n")

    def _provenance(self) -> dict[str, Any]:
        return {"artifact": f"qaeqec {__version__}", "command": self.command, "config_sha256": config_hash(self.cfg), "seed": self.seed}

    def csv(self, name: str, columns: Sequence[str], rows) -> Path:
        return write_csv(self.out / name, columns, rows, self.header)

    def model(self, name: str, model, **meta) -> Path:
        meta = {**self._provenance(), **meta}
        return save_model(self.out / f"{name}{MODEL_SUFFIX}", model, meta)


def _route_name(route: tuple[int, ...]) -> str:
    return "-".join(str(q) for q in route) if route else "none"


def _train_meta(res) -> dict[str, Any]:
    return {
        "final_cost": res.final_cost,
        "epochs": len(res.history) - 1,
        "restarts": res.restarts,
        "converged": res.converged,
    }


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


def cmd_train(run: Run) -> int:
    cfg = run.cfg
    code = build_code(cfg)
    noise = build_noise(cfg)
    tc = build_training_config(cfg)
    margin = cfg["training"]["margin"]
    refs = ex.reference_codes_for(cfg["code"], noise.kind) or [code]
    if noise.kind == "erasure":
        col = cfg["collection"]
        res = ex.erasure_collection(
            code, noise.p_loss, noise.p_comp, tc, col["max_erasures"], 0, run.seed, col["member_threshold"], margin
        )
        rows = [(_route_name(r), e, c) for r, t in res.trainings.items() for e, c in enumerate(t.history)]
        run.csv("cost_history.csv", ["pattern", "epoch", "cost"], rows)
        base = res.trainings[()]
        run.model("model", res.collection, **_train_meta(base), member_costs={_route_name(r): t.final_cost for r, t in res.trainings.items()})
        converged = res.converged
    elif cfg["study"]["eta_grid"]:
        results = ex.correlated_noise_study(noise.p, cfg["study"]["eta_grid"], tc, 0, run.seed, margin, cfg["states"])
        run.csv(
            "cost_history.csv", ["eta", "epoch", "cost"], [(r.eta, e, c) for r in results for e, c in enumerate(r.training.history)]
        )
        run.csv(
            "strategies.csv",
            ["eta", "strategy", "dist_standard", "dist_alternative", "F_standard", "F_alternative", "final_cost", "converged"],
            [
                (r.eta, r.strategy, r.distances["standard"], r.distances["alternative"], *r.analytic, r.training.final_cost, r.training.converged)
                for r in results
            ],
        )
        for r in results:
            run.model(f"model_eta{r.eta:g}", r.training.model, eta=r.eta, **_train_meta(r.training))
        converged = all(r.training.converged for r in results)
    else:
        res = ex.train_qae(code, noise, tc, cfg["states"], refs, margin, cfg["self_inverse"])
        run.csv("cost_history.csv", ["epoch", "cost"], enumerate(res.history))
        run.model("model", res.model, **_train_meta(res))
        converged = res.converged
    if not converged:
        raise TrainingFailure("cost threshold unmet after all restarts")
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def _check_widths(model, code) -> None:
    if isinstance(model, NetworkParams):
        if model.n_in != code.n or model.n_out != code.n:
            raise ConfigError(f"model maps {model.n_in} -> {model.n_out} qubits but code {code.name} has {code.n}")
    elif isinstance(model, QAECollection):
        if model.n != code.n:
            raise ConfigError(f"collection acts on {model.n} qubits but code {code.name} has {code.n}")
    else:
        raise ConfigError(f"cannot validate a {type(model).__name__} against a code")


def cmd_validate(run: Run, model_path: Path) -> int:
    cfg = run.cfg
    model, _ = load_model(model_path)
    code = build_code(cfg)
    _check_widths(model, code)
    noise = build_noise(cfg)
    if noise.kind == "erasure" and not isinstance(model, QAECollection):
        raise ConfigError("erasure validation needs a collection model")
    val = cfg["validation"]
    p_grid = val["p_grid"] if val["p_grid"] is not None else [noise.p_loss if noise.kind == "erasure" else noise.p]
    internal = InternalNoise(val["internal_p_n"]) if val["internal_p_n"] else None
    reports = []
    if val["n_samples"] > 0:
        for k, p in enumerate(p_grid):
            spec = replace(noise, p_loss=p) if noise.kind == "erasure" else replace(noise, p=p)
            rng = np.random.default_rng([run.seed, 2000 + k])
            reports.append((p, ex.validate_qae(model, code, spec, val["n_samples"], rng, internal)))
    classes = sorted({c for _, r in reports for c in r.classes})
    columns = ["p", "kind", "eta", "p_loss", "p_comp", "n_samples", "mean_fid", "stderr"]
    for c in classes:
        columns += [f"{c} mean", f"{c} count"]
    rows = []
    for p, r in reports:
        row = [p, r.noise.kind, r.noise.eta, r.noise.p_loss, r.noise.p_comp, r.num_samples, r.mean_fidelity, r.stderr]
        for c in classes:
            row += list(r.classes.get(c, (float("nan"), 0)))
        rows.append(row)
    run.csv("validation.csv", columns, rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# tomo
# ---------------------------------------------------------------------------


def _reference_for(cfg, n: int):
    code = build_code(cfg)
    if code.n == n:
        return code
    defaults = {3: "3qc", 4: "4qec", 5: "5qc"}
    return build_code({**cfg, "code": defaults[n], "code_strategy": "standard"}) if n in defaults else None


def cmd_tomo(run: Run, model_path: Path) -> int:
    model, _ = load_model(model_path)
    if isinstance(model, QAECollection):
        model = model.qae
    if not isinstance(model, NetworkParams):
        raise ConfigError("tomography needs a network or collection model")
    n_in, n_out = model.n_in, model.n_out
    chi = chi_matrix(channel_of(model), n_in, n_out)
    write_chi_csv(run.out / "chi.csv", chi, run.header)
    d = 2**n_in
    fixed = channel_of(model)(np.eye(d, dtype=complex)[None] / d)[0]
    replacement = chi_matrix(lambda r: np.trace(r, axis1=-2, axis2=-1)[..., None, None] * fixed, n_in, n_out, check=False)
    rows: list[tuple[str, Any]] = [
        ("trace_preserving", chi.is_trace_preserving()),
        ("distance_to_replacement", channel_distance(chi, replacement)),
    ]
    ref = _reference_for(run.cfg, n_in) if n_in == n_out else None
    if ref is not None:
        ref_chi = chi_matrix(lambda r: perfect_recovery(ref, r), n_in, n_out, check=False)
        rows += [
            ("reference", f"{ref.name} recovery"),
            ("distance_to_reference", channel_distance(chi, ref_chi)),
            ("choi_fidelity_to_reference", choi_fidelity(chi, ref_chi)),
        ]
    widths = model.architecture.layer_widths
    if len(widths) == 3 and widths[1] == 1:
        flat = model.flat_unitaries()
        enc_ops, dec_ops = model.transition_ops()
        enc = chi_matrix(lambda r: run_ops(enc_ops, flat, r), n_in, 1)
        dec = chi_matrix(lambda r: run_ops(dec_ops, flat, r), 1, n_out)
        write_chi_csv(run.out / "chi_encoder.csv", enc, run.header)
        write_chi_csv(run.out / "chi_decoder.csv", dec, run.header)
        if n_in == n_out == 3 and ref is not None and ref.name == "3qc":
            rows += [
                ("encoder_distance_to_reference", channel_distance(enc, reference_encoder_chi())),
                ("decoder_distance_to_reference", channel_distance(dec, reference_decoder_chi())),
            ]
    run.csv("tomo_summary.csv", ["quantity", "value"], rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# memory
# ---------------------------------------------------------------------------


_POINT_COLUMNS = ["p_i", "p_n", "P_single", "P_uncorr", "P_corr", "region", "se_single", "se_uncorr", "se_corr"]


def _point_row(pt: ex.MemoryPoint) -> list:
    return [pt.p_i, pt.p_n, pt.P_single, pt.P_uncorr, pt.P_corr, pt.region, pt.se_single, pt.se_uncorr, pt.se_corr]


def cmd_memory(run: Run, model_path: Path | None = None) -> int:
    mem = run.cfg["memory"]
    network = None
    if model_path is not None:
        network, _ = load_model(model_path)
        if not isinstance(network, NetworkParams) or (network.n_in, network.n_out) != (3, 3):
            raise ConfigError("memory experiments need a 3 -> 3 network model")
    if mem["point"] is not None:
        p_i, p_n = mem["point"]["p_i"], mem["point"]["p_n"]
        pt = ex.memory_point(p_i, p_n, network, mem["n_samples"], np.random.default_rng([run.seed, 0]), mem["exact"])
        a = ex.analytic_memory(p_i, p_n)
        run.csv(
            "memory_point.csv",
            _POINT_COLUMNS + ["analytic_P_single", "analytic_P_uncorr", "analytic_P_corr"],
            [_point_row(pt) + [a.P_single, a.P_uncorr, a.P_corr]],
        )
        return EXIT_OK
    p_i_grid = build_grid(mem["p_i_grid"])
    p_n_grid = build_grid(mem["p_n_grid"])
    points = ex.phase_diagram(p_i_grid, p_n_grid, mem["n_samples"], run.seed, network, mem["exact"])
    run.csv("phase_grid.csv", _POINT_COLUMNS, [_point_row(pt) for pt in points])
    emp = ex.empirical_boundaries(points)
    rows = []
    for p_i, crit_s, crit_l in ex.analytic_boundaries(p_i_grid):
        e_s, e_l = emp.get(p_i, (None, None))
        rows.append([p_i, crit_s, crit_l, e_s, e_l])
    run.csv("boundaries.csv", ["p_i", "p_n_crit_single", "p_n_crit_logical", "empirical_single", "empirical_logical"], rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# discover
# ---------------------------------------------------------------------------


def cmd_discover(run: Run) -> int:
    d = run.cfg["discovery"]
    tc = build_training_config(run.cfg)
    res = ex.encoding_discovery(tc, d["n"], d["sigma"], d["copies"], d["n_validation"], d["n_nodes"], d["n_points"])
    run.model("finder", res.finder, **_train_meta(res.training))
    run.csv(
        "loss_report.csv",
        ["lost_qubit", "qae_fidelity", "finder_fidelity"],
        [(_route_name(r), res.loss_fidelities[r], res.finder_fidelities[r]) for r in res.finder.patterns],
    )
    run.csv("marginals.csv", ["qubit", "fidelity_to_mixed"], enumerate(res.marginal_fidelities))
    run.csv(
        "dfs_report.csv",
        ["dfs_deviation", "final_cost", "restarts", "converged"],
        [(res.dfs_deviation, res.training.final_cost, res.training.restarts, res.training.converged)],
    )
    if not res.training.converged:
        raise TrainingFailure("discovery cost threshold unmet after all restarts")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration (merged over the preset)")
    common.add_argument("--preset", choices=sorted(PRESETS), help="named hyperparameter preset")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--threads", type=int, help="cap BLAS worker threads")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="qaeqec", description="Quantum autoencoders for error correction.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("train", parents=[common], help="train a QAE, collection or correlated-noise study")
    p = sub.add_parser("validate", parents=[common], help="Monte Carlo validation of a model")
    p.add_argument("model", type=Path)
    p = sub.add_parser("tomo", parents=[common], help="chi matrices of a model")
    p.add_argument("model", type=Path)
    p = sub.add_parser("memory", parents=[common], help="noisy-memory phase diagram or single point")
    p.add_argument("--model", type=Path, help="3-qubit network replacing the hand-built QAE")
    sub.add_parser("discover", parents=[common], help="encoding discovery under dephasing and erasures")
    return parser


def _load_overrides(path: Path | None) -> dict | None:
    if path is None:
        return None
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args.preset, _load_overrides(args.config), args.seed)
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be positive")
        run = Run(args.command, cfg, args.out)
        with threadpool_limits(limits=args.threads):
            if args.command == "train":
                return cmd_train(run)
            if args.command == "validate":
                return cmd_validate(run, args.model)
            if args.command == "tomo":
                return cmd_tomo(run, args.model)
            if args.command == "memory":
                return cmd_memory(run, args.model)
            return cmd_discover(run)
    except (ConfigError, ModelFormatError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingFailure as exc:
        print(f"training failure: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except (NumericalInvariantError, StateValidityError, ConsistencyError) as exc:
        print(f"numerical invariant violated: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
