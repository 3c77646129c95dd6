from app.src.adapter.frod_layer import FrodLayer
from app.src.adapter.sparse import SparseOffDiag
from app.src.core.lab_errors import ValidationError
from app.src.helpers.report_io import atomic_write_bytes, dumps_report, load_report
from app.src.tensorio.container import TensorContainer, write_container, read_container
from pathlib import Path
import numpy as np


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def frod_layers_to_container(layers: dict[str, FrodLayer]) -> tuple[TensorContainer, dict]:
    c = TensorContainer()
    sidecar = {}
    for name, layer in layers.items():
        c.add(f"frod/{name}/U", layer.U)
        c.add(f"frod/{name}/Vt", layer.Vt)
        c.add(f"frod/{name}/sigma", layer.sigma)
        c.add(f"frod/{name}/sigma_init", layer.sigma_init)
        if layer.S.nnz:
            c.add(f"frod/{name}/S_values", layer.S.values)
        sidecar[name] = {
            "support": [[p, q] for p, q in layer.S.support],
            "s": layer.S.density,
            "seed": layer.S.seed,
            "scheme": layer.name,
            "train_sigma": layer.train_sigma,
        }
    return c, sidecar


def save_frod_layers(path: str | Path, layers: dict[str, FrodLayer]):
    """Write `frod/<layer>/{U,Vt,sigma,sigma_init,S_values}` plus a JSON sidecar with the supports."""
    c, sidecar = frod_layers_to_container(layers)
    write_container(path, c)
    atomic_write_bytes(sidecar_path(path), dumps_report(sidecar).encode("utf-8"))


def load_frod_layers(path: str | Path) -> dict[str, FrodLayer]:
    c = read_container(path)
    sidecar = load_report(sidecar_path(path))
    layers = {}
    try:
        for name, meta in sidecar.items():
            support = np.asarray(meta["support"], dtype=np.int64).reshape(-1, 2)
            Vt = np.asarray(c.get(f"frod/{name}/Vt"), dtype=np.float64)
            values = (
                np.asarray(c.get(f"frod/{name}/S_values"), dtype=np.float64)
                if len(support)
                else np.zeros(0)
            )
            S = SparseOffDiag(
                n=Vt.shape[0],
                rows=support[:, 0],
                cols=support[:, 1],
                values=values,
                density=float(meta["s"]),
                seed=int(meta["seed"]),
            )
            layers[name] = FrodLayer(
                U=c.get(f"frod/{name}/U"),
                Vt=Vt,
                sigma=c.get(f"frod/{name}/sigma"),
                sigma_init=c.get(f"frod/{name}/sigma_init"),
                S=S,
                train_sigma=bool(meta.get("train_sigma", True)),
                scheme=meta.get("scheme", "frod"),
            )
    except KeyError as e:
        raise ValidationError(f"checkpoint '{path}' lacks {e.args[0]}") from e
    return layers
