"""k-nearest-neighbors classifier, exact brute-force Euclidean distances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import Model


@dataclass(frozen=True)
class KnnConfig:
    k: int = 30


class KnnClassifier(Model):
    kind = "knn"

    def __init__(self, cfg: KnnConfig = KnnConfig()):
        super().__init__()
        if cfg.k < 1:
            raise ValueError("k must be >= 1")
        self.cfg = cfg
        self.X_: np.ndarray | None = None
        self.y_: np.ndarray | None = None

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        if self.cfg.k > X.shape[0]:
            raise ValueError(f"k={self.cfg.k} exceeds the {X.shape[0]} training rows")
        self.X_ = X.copy()
        self.y_ = y.copy()

    def _predict_proba(self, X: np.ndarray) -> np.ndarray:
        k = self.cfg.k
        p1 = np.empty(X.shape[0])
        # Differences are computed directly (not the expanded dot-product form)
        # so equal points give exactly equal distances; stable argsort then
        # breaks remaining ties by training-row index. Chunked to bound the
        # (chunk, n_train, d) broadcast.
        chunk = max(1, int(4_000_000 / max(1, self.X_.shape[0] * self.X_.shape[1])))
        for lo in range(0, X.shape[0], chunk):
            hi = min(lo + chunk, X.shape[0])
            diff = X[lo:hi, None, :] - self.X_[None, :, :]
            d2 = np.einsum("ijk,ijk->ij", diff, diff)
            nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
            p1[lo:hi] = self.y_[nearest].mean(axis=1)
        return np.column_stack([1.0 - p1, p1])
