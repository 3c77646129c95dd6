from app.src.adapter.base_layer import AdapterLayer
from app.src.adapter.sparse import SparseOffDiag, sample_offdiag_support, empty_offdiag
from app.src.core.lab_errors import ShapeMismatchError
from app.src.decomp.hjd import JointDecomposition
import numpy as np


class FrodLayer(AdapterLayer):
    """W' = U (diag(sigma) + S) Vt with frozen U, Vt.

    `sigma` is trainable unless `train_sigma` is off (S-only ablation); the
    values of the strictly off-diagonal S are trainable and start at zero.
    """

    def __init__(
        self,
        U: np.ndarray,
        Vt: np.ndarray,
        sigma: np.ndarray,
        S: SparseOffDiag,
        sigma_init: np.ndarray | None = None,
        train_sigma: bool = True,
        scheme: str = "frod",
    ):
        self.U = np.asarray(U, dtype=np.float64)
        self.Vt = np.asarray(Vt, dtype=np.float64)
        self.sigma = np.array(sigma, dtype=np.float64)
        self.sigma_init = self.sigma.copy() if sigma_init is None else np.array(sigma_init, dtype=np.float64)
        self.S = S
        self.train_sigma = train_sigma
        self._scheme = scheme
        m, n = self.U.shape
        if self.Vt.shape != (n, n) or self.sigma.shape != (n,) or S.n != n:
            raise ShapeMismatchError(
                f"inconsistent FRoD factors: U {self.U.shape}, Vt {self.Vt.shape}, sigma {self.sigma.shape}, S n={S.n}"
            )

    @property
    def name(self) -> str:
        return self._scheme

    @property
    def shape(self) -> tuple[int, int]:
        return self.U.shape

    def parameters(self) -> dict[str, np.ndarray]:
        params = {}
        if self.train_sigma:
            params["sigma"] = self.sigma
        if self.S.nnz:
            params["S"] = self.S.values
        return params

    def param_group(self, param_name: str) -> str:
        return param_name if param_name in ("sigma", "S") else "other"

    def frozen_scalars(self) -> int:
        # Vt is shared per category; sigma_init is a reference copy, not a weight
        return self.U.size + (0 if self.train_sigma else self.sigma.size)

    def core(self, H: np.ndarray) -> np.ndarray:
        """(diag(sigma) + S) applied to latent vectors H."""
        return H * self.sigma + self.S.matvec(H)

    def forward(self, X: np.ndarray) -> np.ndarray:
        X = self.check_input(X)
        return self.core(X @ self.Vt.T) @ self.U.T

    def backward(self, X: np.ndarray, G: np.ndarray) -> tuple[dict[str, np.ndarray], np.ndarray]:
        X = self.check_input(X)
        G = self.check_grad(G)
        v = X @ self.Vt.T
        u = G @ self.U
        grads = {}
        if self.train_sigma:
            grads["sigma"] = (u * v).reshape(-1, v.shape[-1]).sum(axis=0)
        if self.S.nnz:
            grads["S"] = (u[..., self.S.rows] * v[..., self.S.cols]).reshape(-1, self.S.nnz).sum(axis=0)
        d_latent = u * self.sigma + self.S.rmatvec(u)
        return grads, d_latent @ self.Vt

    def merge_weights(self) -> np.ndarray:
        return (self.U @ (np.diag(self.sigma) + self.S.to_dense())) @ self.Vt

    def delta_sigma(self) -> np.ndarray:
        return self.sigma - self.sigma_init

    @classmethod
    def from_decomposition(
        cls,
        dec: JointDecomposition,
        c: str | int,
        i: int,
        s: float,
        seed: int,
        train_sigma: bool = True,
        scheme: str = "frod",
    ) -> "FrodLayer":
        label = dec.resolve(c)
        n = dec.Z.shape[0]
        S = sample_offdiag_support(n, s, seed) if s > 0 else empty_offdiag(n, seed)
        return cls(
            U=dec.U[label][i],
            Vt=dec.Vt(label),
            sigma=dec.sigma[label][i],
            S=S,
            train_sigma=train_sigma,
            scheme=scheme,
        )
