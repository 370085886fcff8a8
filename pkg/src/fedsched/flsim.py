"""Surrogate federated training: softmax regression on synthetic clusters.

Each class has a fixed Gaussian cluster mean shared by all UEs; UEs differ
in label mix (Dirichlet skew) and in sample count (proportional to their
data size in bits). Local training is full-batch gradient descent, so the
whole pipeline is deterministic given the synthesis stream.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .scenario import ScenarioConfig, UeProfile, substream

_MAGIC = b"FSDS"
_VERSION = 1


@dataclass
class GlobalModel:
    """Softmax regression weights, shape (classes, features + 1), bias last."""

    weights: np.ndarray
    round: int = 0

    @classmethod
    def initial(cls, classes: int, feature_dim: int) -> "GlobalModel":
        return cls(weights=np.zeros((classes, feature_dim + 1)), round=0)


@dataclass
class UeDataset:
    features: np.ndarray
    labels: np.ndarray

    @property
    def size(self) -> int:
        return self.labels.size


def synthesize_datasets(config: ScenarioConfig, profiles: list[UeProfile],
                        rng: np.random.Generator | None = None) -> list[UeDataset]:
    """Draw every UE's local dataset.

    Class means sit on a sphere of radius ``cluster_radius`` and are shared
    across UEs; per-UE label mixes come from Dirichlet(non_iid_alpha). The
    draw order is fixed (means, then UEs by ascending id), keyed by
    (config.seed, "data") when no stream is passed.
    """
    if rng is None:
        rng = substream(config.seed, "data")
    dp = config.data_params
    raw = rng.standard_normal((dp.classes, dp.feature_dim))
    means = dp.cluster_radius * raw / np.linalg.norm(raw, axis=1, keepdims=True)
    datasets = []
    for profile in profiles:
        mix = rng.dirichlet(np.full(dp.classes, dp.non_iid_alpha))
        n = max(1, round(profile.data_size_bits / dp.bits_per_sample))
        labels = rng.choice(dp.classes, size=n, p=mix)
        features = means[labels] + rng.standard_normal((n, dp.feature_dim))
        datasets.append(UeDataset(features=features, labels=labels.astype(np.int64)))
    return datasets


def _augment(features: np.ndarray) -> np.ndarray:
    return np.hstack([features, np.ones((features.shape[0], 1))])


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def local_loss(model: GlobalModel, data: UeDataset) -> float:
    """Mean cross-entropy of the model on one UE's data."""
    if data.size == 0:
        raise ValueError("dataset is empty")
    log_probs = _log_softmax(_augment(data.features) @ model.weights.T)
    return float(-log_probs[np.arange(data.size), data.labels].mean())


def loss_gradient(weights: np.ndarray, data: UeDataset) -> tuple[float, np.ndarray]:
    """Cross-entropy value and its gradient with respect to the weights."""
    x = _augment(data.features)
    logits = x @ weights.T
    log_probs = _log_softmax(logits)
    n = data.size
    loss = float(-log_probs[np.arange(n), data.labels].mean())
    probs = np.exp(log_probs)
    probs[np.arange(n), data.labels] -= 1.0
    grad = probs.T @ x / n
    return loss, grad


def local_train(model: GlobalModel, data: UeDataset, eta: float,
                kappa: int) -> tuple[np.ndarray, float]:
    """kappa full-batch gradient steps from the received weights.

    Returns the updated weights and the loss evaluated after the last step,
    which is what the UE reports back.
    """
    if eta <= 0:
        raise ValueError("eta must be > 0")
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    weights = model.weights.copy()
    for _ in range(kappa):
        _, grad = loss_gradient(weights, data)
        weights -= eta * grad
    final_loss, _ = loss_gradient(weights, data)
    return weights, final_loss


def aggregate(base: GlobalModel, updates: dict[int, np.ndarray],
              sizes: dict[int, int]) -> GlobalModel:
    """Size-weighted average of the participants' weights.

    Each participant contributes D_k / D_selected of the new model; UEs
    outside ``updates`` contribute nothing.
    """
    if not updates:
        raise ValueError("no updates to aggregate")
    total = float(sum(sizes[ue] for ue in updates))
    if total <= 0:
        raise ValueError("participant sizes must sum to > 0")
    merged = np.zeros_like(base.weights)
    for ue, weights in updates.items():
        merged += (sizes[ue] / total) * weights
    return GlobalModel(weights=merged, round=base.round + 1)


def global_loss(model: GlobalModel, datasets: list[UeDataset]) -> float:
    """Size-weighted loss over every UE's data.

    Omniscient diagnostic for reporting only; the scheduler never sees it.
    """
    if not datasets:
        raise ValueError("no datasets")
    sizes = np.array([d.size for d in datasets], dtype=float)
    losses = np.array([local_loss(model, d) for d in datasets])
    return float((sizes * losses).sum() / sizes.sum())


def dump_datasets(datasets: list[UeDataset], path: str) -> None:
    """Write datasets to a flat binary file.

    Layout: magic b"FSDS", u32 version, u32 K, u32 feature dim, u32 classes,
    K x u64 sample counts, then per UE an (n, d+1) float64 little-endian
    row-major block whose last column holds the label.
    """
    if not datasets:
        raise ValueError("no datasets")
    d = datasets[0].features.shape[1]
    classes = int(max(ds.labels.max() for ds in datasets)) + 1
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIII", _VERSION, len(datasets), d, classes))
        for ds in datasets:
            fh.write(struct.pack("<Q", ds.size))
        for ds in datasets:
            block = np.hstack([ds.features, ds.labels[:, None].astype(float)])
            fh.write(np.ascontiguousarray(block, dtype="<f8").tobytes())


def load_datasets(path: str) -> list[UeDataset]:
    """Read back a file produced by :func:`dump_datasets`."""
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError("not a dataset file (bad magic)")
        version, k, d, _classes = struct.unpack("<IIII", fh.read(16))
        if version != _VERSION:
            raise ValueError(f"unsupported dataset file version {version}")
        counts = struct.unpack(f"<{k}Q", fh.read(8 * k))
        datasets = []
        for n in counts:
            block = np.frombuffer(fh.read(8 * n * (d + 1)), dtype="<f8").reshape(n, d + 1)
            datasets.append(UeDataset(features=block[:, :d].copy(),
                                      labels=block[:, d].astype(np.int64)))
    return datasets
