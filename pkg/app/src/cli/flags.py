import argparse
from app.src.core.ui import LabUI
from app.src.tensorio.synthetic import SYNTHETIC_DISTS
from app.utils.constants import SCHEMES, DECOMP_MODES, EXIT_VALIDATION
import sys


class ArgsParser(argparse.ArgumentParser):
    """Parses CLI flags with custom UI error reporting"""

    def __init__(self, ui: LabUI | None = None, **kwargs):
        kwargs.setdefault("prog", "frodlab")
        kwargs.setdefault("description", "FRoD numerical laboratory")
        super().__init__(**kwargs)
        self.ui = ui

    def error(self, message):
        usage = self.format_usage()
        if self.ui is not None:
            self.ui.error(f"{message}\n{usage}")
        else:
            sys.stderr.write(f"{message}\n{usage}")
        sys.exit(EXIT_VALIDATION)

    @classmethod
    def build(cls, ui: LabUI, defaults: dict | None = None) -> "ArgsParser":
        defaults = defaults or {}
        dec = defaults.get("decomposition", {})
        ver = defaults.get("verify", {})

        parser = cls(ui)
        sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

        def command(name: str, help_text: str) -> "ArgsParser":
            p = sub.add_parser(name, ui=ui, help=help_text, description=help_text)
            p.add_argument("--report", help=f"JSON report path (default: {name}_report.json)")
            return p

        p = command("gen", "Generate a synthetic weight stack container")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--cats", type=int, default=1, help="Number of categories")
        p.add_argument("--layers", type=int, default=4, help="Layers per category")
        p.add_argument("--m", type=int, default=16)
        p.add_argument("--n", type=int, default=8)
        p.add_argument("--dist", choices=SYNTHETIC_DISTS, default="gaussian")
        p.add_argument("--dtype", choices=("f64", "f32"), default="f64")
        p.add_argument("--out", required=True, help="Output .frodtnsr path")

        p = command("decompose", "Hierarchical joint decomposition of a weight stack")
        p.add_argument("--in", dest="in_path", required=True, help="Weight stack container")
        p.add_argument("--out", required=True, help="Decomposition container path")
        p.add_argument("--pi", type=float, default=dec.get("pi"))
        p.add_argument("--mode", choices=DECOMP_MODES, default=dec.get("mode"))
        p.add_argument("--dtype", choices=("f64", "f32"), default="f64", help="Storage dtype of the factors")

        p = command("verify", "Spectral stability and geometry audit of a decomposition")
        p.add_argument("--dec", required=True, help="Decomposition container")
        p.add_argument("--trials", type=int, default=ver.get("trials"))
        p.add_argument("--seed", type=int, default=ver.get("seed"))
        p.add_argument("--eps", type=float, default=ver.get("eps"), help="Entry bound of the random S")
        p.add_argument("--s", type=float, default=ver.get("s"), help="Density of the random S")
        p.add_argument("--inject-diagonal", action="store_true", help="Plant a diagonal entry in S (negative test)")
        p.add_argument("--csv", help="Per-trial CSV path")

        p = command("train", "Adapt a warm-started model with one scheme")
        p.add_argument("--config", required=True, help="Train config (.json or .yaml)")
        p.add_argument("--csv", help="Per-epoch CSV path (default: report path with .csv)")

        p = command("sweep", "Density / learning-rate ablation sweep")
        p.add_argument("--config", required=True, help="Sweep config (.json or .yaml)")
        p.add_argument("--csv", help="Sweep CSV path (default: report path with .csv)")

        p = command("landscape", "2-D loss surface grids")
        p.add_argument("--config", required=True, help="Landscape config (.json or .yaml)")
        p.add_argument("--out-dir", default="landscape", help="Directory for grid CSVs")

        p = command("params", "Parameter and optimizer-state accounting")
        p.add_argument("--scheme", choices=SCHEMES, required=True)
        p.add_argument("--m", type=int, required=True)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--L", type=int, required=True)
        p.add_argument("--r", type=int, default=0)
        p.add_argument("--s", type=float, default=0.0)
        p.add_argument("--categories", type=int, default=1)

        p = command("pdof", "Jacobian rank of the update map")
        p.add_argument("--scheme", choices=("lora", "vera"), required=True)
        p.add_argument("--m", type=int, required=True)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--r", type=int, required=True)
        p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])

        p = command("hessian", "Quadratic-model Hessian and regularized condition number")
        p.add_argument("--scheme", choices=("frod", "lora", "pissa", "vera", "full"), required=True)
        p.add_argument("--m", type=int, default=4)
        p.add_argument("--n", type=int, default=4)
        p.add_argument("--r", type=int, default=1)
        p.add_argument("--lambda", dest="lam", type=float, default=1.0)
        p.add_argument("--eps", type=float, default=1e-3)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--a-norm2", type=float, default=2.0, help="Squared Frobenius norm of LoRA's initial A")
        p.add_argument("--w-scale", type=float, default=4.0, help="Entries of the random base matrix are N(0, w_scale^2 / n)")
        p.add_argument("--s", type=float, default=0.5, help="Off-diagonal density of the FRoD support")
        return parser

    @classmethod
    def get_args(cls, ui: LabUI, user_args: list[str] = None, defaults: dict | None = None) -> argparse.Namespace:
        """Return parsed args using this parser subclass"""
        return cls.build(ui, defaults).parse_args(user_args)
