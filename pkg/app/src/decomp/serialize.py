from app.src.core.lab_errors import ValidationError
from app.src.decomp.hjd import JointDecomposition
from app.src.tensorio.container import TensorContainer
import numpy as np
import re


_U_NAME = re.compile(r"^U/(?P<label>[^/]+)/(?P<index>\d+)$")


def decomposition_to_container(dec: JointDecomposition, dtype: str = "f64") -> TensorContainer:
    c = TensorContainer()
    c.add("Z", dec.Z, dtype)
    c.add("eigvals", dec.eigvals, dtype)
    c.add("meta/pi", [dec.pi])
    c.add("meta/blockwise", [1.0 if dec.mode == "blockwise" else 0.0])
    c.add("meta/degenerate", [1.0 if dec.degenerate else 0.0])
    for label in dec.labels:
        c.add(f"R/{label}", dec.R[label], dtype)
    for label in dec.labels:
        for i, (U, sigma) in enumerate(zip(dec.U[label], dec.sigma[label])):
            c.add(f"U/{label}/{i}", U, dtype)
            c.add(f"sigma/{label}/{i}", sigma, dtype)
    return c


def decomposition_from_container(c: TensorContainer) -> JointDecomposition:
    for required in ("Z", "eigvals", "meta/pi", "meta/blockwise"):
        if required not in c:
            raise ValidationError(f"decomposition container lacks '{required}'")
    labels: list[str] = []
    counts: dict[str, int] = {}
    for t in c:
        match = _U_NAME.match(t.name)
        if match is None:
            continue
        label = match["label"]
        if label not in counts:
            labels.append(label)
            counts[label] = 0
        counts[label] += 1
    if not labels:
        raise ValidationError("decomposition container holds no 'U/<label>/<i>' tensors")

    as64 = lambda name: np.asarray(c.get(name), dtype=np.float64)
    try:
        R = {label: as64(f"R/{label}") for label in labels}
        U = {label: [as64(f"U/{label}/{i}") for i in range(counts[label])] for label in labels}
        sigma = {label: [as64(f"sigma/{label}/{i}") for i in range(counts[label])] for label in labels}
    except KeyError as e:
        raise ValidationError(f"decomposition container lacks '{e.args[0]}'") from e

    mode = "blockwise" if float(as64("meta/blockwise")[0]) == 1.0 else "literal"
    return JointDecomposition(
        Z=as64("Z"),
        eigvals=as64("eigvals"),
        R=R,
        U=U,
        sigma=sigma,
        pi=float(as64("meta/pi")[0]),
        mode=mode,
        labels=labels,
        degenerate=float(as64("meta/degenerate")[0]) == 1.0 if "meta/degenerate" in c else mode == "literal",
    )
