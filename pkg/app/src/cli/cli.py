from app.src.adapter.params import count_params
from app.src.analysis import (
    WEYL_TRIAL_COLUMNS,
    adapter_hessian_analytic,
    compare_hessian_blocks,
    frod_hessian_analytic,
    full_hessian_analytic,
    gauge_dims,
    hessian_condition,
    hessian_fd,
    pdof_vote,
    quadratic_model,
    verify_decomposition,
)
from app.src.core.exception_handler import CommandExceptionHandler, CommandResult
from app.src.core.lab_errors import ValidationError, NumericalError, DivergenceError
from app.src.core.ui import LabUI, default_ui
from app.src.cli.flags import ArgsParser
from app.src.decomp import (
    WeightStack,
    hjd_decompose,
    reconstruction_errors,
    stacked_orthonormality,
    decomposition_to_container,
    decomposition_from_container,
)
from app.src.helpers.report_io import write_json_report, write_csv
from app.src.helpers.threads import worker_count
from app.src.helpers.valid_dir import require_output_path
from app.src.landscape import LandscapeConfig, landscape_run
from app.src.tensorio import SplitMix64, generate_synthetic_stack, read_container, write_container
from app.src.train import (
    EPOCH_COLUMNS,
    SWEEP_COLUMNS,
    TrainConfig,
    ablation_sweep,
    cartesian_grid,
    explicit_grid,
    read_config_file,
    run_training,
    sweep_csv_rows,
    density_lr_grid,
)
from app.utils.constants import (
    DEFAULT_MODE,
    DEFAULT_PI,
    DEFAULT_VERIFY,
    DEFAULT_HALF_RANGE,
    DEFAULT_GRID_STEPS,
    EXIT_OK,
    MAX_FD_PARAMS,
    RECON_FAIL_RTOL,
)
from app.utils.ui_messages import UI_MESSAGES
from pathlib import Path
import argparse
import logging
import numpy as np


logger = logging.getLogger(__name__)

SUMMARIES = UI_MESSAGES["summaries"]


class CLI:
    """Command-line surface of the lab: one `cmd_*` method per subcommand.

    `config` is the parsed config.json; its sections supply flag defaults.
    """

    def __init__(self, config: dict | None = None, ui: LabUI | None = None, propagate: bool = False):
        self.ui = ui or default_ui
        self.propagate = propagate
        config = config or {}
        self.defaults = {
            "decomposition": {"pi": DEFAULT_PI, "mode": DEFAULT_MODE, **config.get("decomposition", {})},
            "verify": {**DEFAULT_VERIFY, **config.get("verify", {})},
            "landscape": {
                "half_range": DEFAULT_HALF_RANGE,
                "steps": DEFAULT_GRID_STEPS,
                **config.get("landscape", {}),
            },
        }

    def run(self, argv: list[str]) -> CommandResult:
        try:
            args = ArgsParser.get_args(self.ui, list(argv), self.defaults)
        except SystemExit as e:
            return CommandResult(exit_code=e.code if isinstance(e.code, int) else EXIT_OK)

        handler = getattr(self, f"cmd_{args.command}")
        result = CommandExceptionHandler.handle_command(lambda: handler(args), self.ui, self.propagate)
        if result.ok and result.summary:
            self.ui.summary(result.summary)
        return result

    def _report_path(self, args: argparse.Namespace) -> Path:
        return require_output_path(args.report or f"{args.command}_report.json")

    def _csv_path(self, args: argparse.Namespace, report: Path) -> Path:
        return require_output_path(args.csv) if args.csv else report.with_suffix(".csv")

    def _done(self, report_path: Path, report: dict, summary: str) -> CommandResult:
        write_json_report(report_path, report)
        return CommandResult(exit_code=EXIT_OK, summary=summary, report_path=str(report_path))

    ########### tensors and decomposition ###########

    def cmd_gen(self, args: argparse.Namespace) -> CommandResult:
        report_path = self._report_path(args)
        out = require_output_path(args.out)
        stack = generate_synthetic_stack(args.seed, args.cats, args.layers, args.m, args.n, dist=args.dist)
        container = stack.to_container(args.dtype)
        write_container(out, container)
        report = {
            "command": "gen",
            "out": str(out),
            "seed": args.seed,
            "categories": stack.labels,
            "layers": args.layers,
            "m": args.m,
            "n": args.n,
            "dist": args.dist,
            "dtype": args.dtype,
            "tensors": len(container),
        }
        summary = SUMMARIES["gen"].format(len(container), args.cats, args.layers, args.m, args.n, out)
        return self._done(report_path, report, summary)

    def cmd_decompose(self, args: argparse.Namespace) -> CommandResult:
        report_path = self._report_path(args)
        out = require_output_path(args.out)
        stack = WeightStack.from_container(read_container(args.in_path))
        dec = hjd_decompose(stack, args.pi, args.mode)
        rows = reconstruction_errors(dec, stack)
        worst = max(r["relative_error"] for r in rows)
        write_container(out, decomposition_to_container(dec, args.dtype))
        report = {
            "command": "decompose",
            "input": str(args.in_path),
            "out": str(out),
            "pi": dec.pi,
            "mode": dec.mode,
            "dtype": args.dtype,
            "degenerate": dec.degenerate,
            "eigvals": dec.eigvals,
            "layers": rows,
            "max_relative_error": worst,
            "stacked_orthonormality": {label: stacked_orthonormality(dec, label) for label in dec.labels},
            "floored": [vars(f) for f in dec.floored],
        }
        write_json_report(report_path, report)
        if worst > RECON_FAIL_RTOL:
            raise NumericalError(UI_MESSAGES["errors"]["reconstruction"].format(worst, RECON_FAIL_RTOL))
        summary = SUMMARIES["decompose"].format(len(rows), worst)
        if dec.degenerate:
            summary += "; " + SUMMARIES["decompose_degenerate"]
        return CommandResult(exit_code=EXIT_OK, summary=summary, report_path=str(report_path))

    def cmd_verify(self, args: argparse.Namespace) -> CommandResult:
        report_path = self._report_path(args)
        csv_path = require_output_path(args.csv) if args.csv else None
        if args.trials < 1:
            raise ValidationError(f"--trials must be >= 1, got {args.trials}")
        dec = decomposition_from_container(read_container(args.dec))
        report, rows = verify_decomposition(
            dec,
            trials=args.trials,
            eps=args.eps,
            s=args.s,
            seed=args.seed,
            inject_diagonal=args.inject_diagonal,
            workers=worker_count(),
        )
        report = {"command": "verify", "dec": str(args.dec), "trials": args.trials, "seed": args.seed, **report}
        if csv_path is not None:
            write_csv(csv_path, WEYL_TRIAL_COLUMNS, [row.row() for row in rows])
        angular = report["geometry"]["max_angular_residual"]
        summary = SUMMARIES["verify"].format(args.trials, report["weyl"]["violations"], angular)
        return self._done(report_path, report, summary)

    ########### experiments ###########

    def cmd_train(self, args: argparse.Namespace) -> CommandResult:
        report_path = self._report_path(args)
        csv_path = self._csv_path(args, report_path)
        config = TrainConfig.from_dict(read_config_file(args.config))
        outcome = run_training(config)
        train = outcome.report
        write_csv(csv_path, EPOCH_COLUMNS, [e.row() for e in train.epochs])
        write_json_report(report_path, {"command": "train", **train.to_dict()})
        if train.diverged:
            raise DivergenceError(UI_MESSAGES["errors"]["divergence"].format(train.divergence["epoch"]))
        summary = SUMMARIES["train"].format(len(train.epochs) - 1, train.final.loss, train.final.eval_acc)
        return CommandResult(exit_code=EXIT_OK, summary=summary, report_path=str(report_path))

    def cmd_sweep(self, args: argparse.Namespace) -> CommandResult:
        report_path = self._report_path(args)
        csv_path = self._csv_path(args, report_path)
        data = read_config_file(args.config)
        unknown = sorted(set(data) - {"train", "sweep"})
        if unknown:
            raise ValidationError(f"unknown key(s) in sweep config: {', '.join(unknown)}")
        base = TrainConfig.from_dict(data.get("train") or {})
        spec = data.get("sweep") or {}
        if spec.get("preset") == "density-lr":
            grid = density_lr_grid()
        elif spec.get("preset") is not None:
            raise ValidationError(f"unknown sweep preset '{spec['preset']}'")
        elif "points" in spec:
            grid = explicit_grid(spec["points"])
        else:
            scheme = base.scheme
            grid = cartesian_grid(
                spec.get("s", [scheme.s]), spec.get("lr_S", [scheme.lr_S]), spec.get("lr_sigma", [scheme.lr_sigma])
            )
        seeds = [int(s) for s in spec.get("seeds", [base.seed])]
        result = ablation_sweep(base, grid, seeds, workers=worker_count())
        write_csv(csv_path, SWEEP_COLUMNS, sweep_csv_rows(result))
        self.ui.table(
            UI_MESSAGES["titles"]["sweep_medians"],
            ["variant", "s", "lr_S", "lr_sigma", "final_loss", "tan_alpha", "in_band"],
            [[m["variant"], m["s"], m["lr_S"], m["lr_sigma"], m["final_loss"], m["tan_alpha"], m["in_band"]] for m in result.medians],
        )
        in_band = sum(1 for m in result.medians if m["in_band"])
        summary = SUMMARIES["sweep"].format(len(result.rows), len(grid), in_band)
        return self._done(report_path, {"command": "sweep", "seeds": seeds, **result.to_dict()}, summary)

    def cmd_landscape(self, args: argparse.Namespace) -> CommandResult:
        report_path = self._report_path(args)
        out_dir = require_output_path(args.out_dir)
        data = read_config_file(args.config)
        data["landscape"] = {**self.defaults["landscape"], **(data.get("landscape") or {})}
        config = LandscapeConfig.from_dict(data)
        report = landscape_run(config, out_dir, workers=worker_count())
        summary = SUMMARIES["landscape"].format(
            len(report["grids"]), config.steps, config.steps, report["grids"][-1]["center_loss"]
        )
        return self._done(report_path, {"command": "landscape", "out_dir": str(out_dir), **report}, summary)

    ########### closed-form analyses ###########

    def cmd_params(self, args: argparse.Namespace) -> CommandResult:
        report_path = self._report_path(args)
        count = count_params(args.scheme, args.m, args.n, args.L, r=args.r, s=args.s, categories=args.categories)
        self.ui.table(
            UI_MESSAGES["titles"]["param_counts"],
            ["scheme", "weights", "trainable", "optimizer states", "weights (shared V)"],
            [[count.scheme, count.weights_total, count.trainable, count.optimizer_states, count.weights_shared_v]],
        )
        summary = SUMMARIES["params"].format(count.weights_total, count.trainable, count.optimizer_states)
        report = {"command": "params", "m": args.m, "n": args.n, "L": args.L, "r": args.r, "s": args.s, **count.to_dict()}
        return self._done(report_path, report, summary)

    def cmd_pdof(self, args: argparse.Namespace) -> CommandResult:
        report_path = self._report_path(args)
        result = pdof_vote(args.scheme, args.m, args.n, args.r, args.seeds)
        return self._done(report_path, {"command": "pdof", **result.to_dict()}, SUMMARIES["pdof"].format(result.measured))

    def cmd_hessian(self, args: argparse.Namespace) -> CommandResult:
        report_path = self._report_path(args)
        if min(args.m, args.n) < 1:
            raise ValidationError(f"dimensions must be positive, got m={args.m} n={args.n}")
        if not args.lam > 0:
            raise ValidationError(f"--lambda must be > 0, got {args.lam}")
        W = SplitMix64(args.seed).normals(args.m * args.n).reshape(args.m, args.n) * (args.w_scale / np.sqrt(args.n))
        model = quadratic_model(
            args.scheme,
            W,
            args.r,
            args.lam,
            args.seed,
            a_norm2=args.a_norm2 if args.scheme == "lora" else None,
            s=args.s,
        )
        flat = gauge_dims(args.scheme, args.r)
        report = {
            "command": "hessian",
            "scheme": args.scheme,
            "m": args.m,
            "n": args.n,
            "r": args.r,
            "lambda": args.lam,
            "eps": args.eps,
            "params": int(model.theta0.size),
            "gauge_dims": flat,
        }

        analytic = None
        if args.scheme in ("lora", "pissa"):
            analytic = adapter_hessian_analytic(args.scheme, model.A, model.B, args.lam)
        elif args.scheme == "frod":
            analytic = frod_hessian_analytic(model.split, model.theta0.size - model.split, args.lam)
        elif args.scheme == "full":
            analytic = full_hessian_analytic(args.m, args.n, args.lam)
        if analytic is not None:
            cond = hessian_condition(analytic, args.eps, flat)
            report["tau_dot_analytic"] = cond.tau_dot
            report["eigs_analytic"] = cond.eigs

        fd = None
        if model.theta0.size <= MAX_FD_PARAMS:
            fd = hessian_fd(model.loss, model.theta0)
            cond_fd = hessian_condition(fd, args.eps)
            report["tau_dot_fd"] = cond_fd.tau_dot
            report["eigs_fd"] = cond_fd.eigs
            if analytic is not None:
                report["blocks"] = compare_hessian_blocks(fd, analytic, model.split)
        elif analytic is None:
            raise ValidationError(
                f"{args.scheme} has {model.theta0.size} parameters; finite differences are limited to {MAX_FD_PARAMS}"
            )

        report["tau_dot"] = report["tau_dot_analytic"] if analytic is not None else report["tau_dot_fd"]
        return self._done(report_path, report, SUMMARIES["hessian"].format(report["tau_dot"]))
