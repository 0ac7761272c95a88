"""Four-branch fusion classifier and its evaluation harness.

Branch a embeds the lexicon-PCA vector with a Bi-LSTM + attention, branch
b densely embeds the time/frequency-domain summary, branch c runs the MFCC
matrix through a three-layer strided CNN, branch d densely embeds the
768-dim text embedding.  Enabled branch outputs are concatenated in the
fixed order [a, b, c, d] and fed to a three-layer fully-connected head
with a binary softmax.  Evaluation is stratified 10-fold cross-validated
F1 on the violent class.
"""

from __future__ import annotations

import base64
import itertools
import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import neural
from .neural import (
    Adam,
    Attention,
    BatchNorm,
    BiLSTM,
    Conv2d,
    Dense,
    Dropout,
    MaxPool2,
    SoftmaxCrossEntropy,
    activation_layer,
    l2_grad,
    l2_penalty,
    softmax,
)

BRANCH_NAMES = ("a", "b", "c", "d")
TIME_DIM = 30
SPECTRAL_DIM = 50
EMBEDDING_DIM = 768

GRID_DOMAINS = {
    "hidden_layers": (0, 1, 2, 3),
    "dropout": (0.0, 0.1, 0.5),
    "hidden_nodes": (32, 64, 128),
    "activation": ("relu", "linear"),
    "learning_rate": (6.25e-3, 6.25e-4, 6.25e-5, 6.25e-6),
    "epochs": (1, 5, 10),
}

CNN_FILTERS = (32, 32, 64)
CNN_KERNEL = 3
CNN_STRIDE = 2


@dataclass(frozen=True)
class FeatureBundle:
    """Per-segment inputs for the four branches."""

    segment_id: str
    time_vec: np.ndarray          # 30-dim time-domain summary
    spectral_vec: np.ndarray      # 50-dim frequency-domain summary
    mfcc: np.ndarray              # [channels, frames]
    liwc_vec: np.ndarray | None   # PCA-reduced category vector
    embedding: np.ndarray | None  # 768-dim text embedding


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters; grid fields must stay on the published grid unless
    allow_off_grid is set."""

    hidden_layers: int = 3
    dropout: float = 0.5
    hidden_nodes: int = 128
    activation: str = "relu"
    learning_rate: float = 6.25e-4
    epochs: int = 1
    batch_size: int = 32
    l2_lambda: float = 0.01
    seed: int = 0
    branches: tuple = BRANCH_NAMES
    strict_time_only: bool = False  # branch b: 30-dim only instead of 30+50
    allow_off_grid: bool = False

    def __post_init__(self):
        for branch in self.branches:
            if branch not in BRANCH_NAMES:
                raise ValueError(f"unknown branch {branch!r}")
        if not self.branches:
            raise ValueError("at least one branch must be enabled")
        if not self.allow_off_grid:
            for name, domain in GRID_DOMAINS.items():
                value = getattr(self, name)
                if value not in domain:
                    raise ValueError(
                        f"{name}={value!r} is off the hyperparameter grid {domain}; "
                        f"set allow_off_grid=True to override"
                    )

    @property
    def time_input_dim(self) -> int:
        return TIME_DIM if self.strict_time_only else TIME_DIM + SPECTRAL_DIM


@dataclass(frozen=True)
class Metrics:
    """Binary classification metrics; F1 is on the violent class."""

    precision: float
    recall: float
    f1: float
    accuracy: float
    tp: int
    fp: int
    fn: int
    tn: int

    def as_dict(self) -> dict:
        return asdict(self)


def metrics_from_predictions(y_true: np.ndarray, y_pred: np.ndarray) -> Metrics:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.size == 0:
        raise ValueError("cannot compute metrics on an empty holdout")
    tp = int(np.sum((y_pred == 1) & (y_true == 1)))
    fp = int(np.sum((y_pred == 1) & (y_true == 0)))
    fn = int(np.sum((y_pred == 0) & (y_true == 1)))
    tn = int(np.sum((y_pred == 0) & (y_true == 0)))
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    accuracy = (tp + tn) / y_true.size
    return Metrics(precision, recall, f1, accuracy, tp, fp, fn, tn)


def _cnn_shape_trace(mfcc_shape: tuple) -> list:
    """Static spatial-shape trace through the conv/pool stack.

    Raises before any construction if a stage would shrink below 1x1
    (pooling stages need at least 2 in each spatial dimension).
    """
    h, w = mfcc_shape
    trace = [(h, w)]
    for idx in range(len(CNN_FILTERS)):
        h = -(-h // CNN_STRIDE)
        w = -(-w // CNN_STRIDE)
        trace.append((h, w))
        if idx < len(CNN_FILTERS) - 1:  # pooling between conv layers
            if h < 2 or w < 2:
                raise ValueError(
                    f"MFCC input {mfcc_shape} too small: stage {idx + 1} output "
                    f"{h}x{w} cannot be 2x2-pooled"
                )
            h, w = h // 2, w // 2
            trace.append((h, w))
    return trace


class FusionModel:
    """Four branch encoders plus the fully-connected fusion head."""

    def __init__(self, cfg: TrainConfig, liwc_dim: int | None = None,
                 mfcc_shape: tuple | None = None):
        self.cfg = cfg
        self.liwc_dim = liwc_dim
        self.mfcc_shape = tuple(mfcc_shape) if mfcc_shape else None
        rng = np.random.default_rng(cfg.seed)
        self._blocks: list = []  # (name, layer) in forward order per branch
        h = cfg.hidden_nodes
        self.branch_dims: dict = {}

        if "a" in cfg.branches:
            if liwc_dim is None or liwc_dim < 1:
                raise ValueError("branch a enabled but liwc_dim not given")
            self.a_lstm = BiLSTM(1, h, rng)
            self.a_att = Attention(h, rng)
            self._blocks += [("a.lstm", self.a_lstm), ("a.att", self.a_att)]
            self.branch_dims["a"] = h
        if "b" in cfg.branches:
            self.b_fc = Dense(cfg.time_input_dim, h, rng)
            self.b_act = activation_layer(cfg.activation)
            self._blocks += [("b.fc", self.b_fc)]
            self.branch_dims["b"] = h
        if "c" in cfg.branches:
            if self.mfcc_shape is None:
                raise ValueError("branch c enabled but mfcc_shape not given")
            trace = _cnn_shape_trace(self.mfcc_shape)
            self.c_layers = []
            in_ch = 1
            for idx, filters in enumerate(CNN_FILTERS):
                conv = Conv2d(in_ch, filters, rng, kernel=CNN_KERNEL, stride=CNN_STRIDE)
                bn = BatchNorm(filters)
                act = activation_layer(cfg.activation)
                drop = Dropout(cfg.dropout, rng)
                stage = [(f"c.conv{idx + 1}", conv), (f"c.bn{idx + 1}", bn),
                         (f"c.act{idx + 1}", act), (f"c.drop{idx + 1}", drop)]
                if idx < len(CNN_FILTERS) - 1:
                    stage.append((f"c.pool{idx + 1}", MaxPool2()))
                self.c_layers.extend(stage)
                in_ch = filters
            self._blocks += self.c_layers
            final_h, final_w = trace[-1]
            self.branch_dims["c"] = CNN_FILTERS[-1] * final_h * final_w
        if "d" in cfg.branches:
            self.d_fc = Dense(EMBEDDING_DIM, h, rng)
            self.d_act = activation_layer(cfg.activation)
            self._blocks += [("d.fc", self.d_fc)]
            self.branch_dims["d"] = h

        fuse_dim = sum(self.branch_dims[b] for b in BRANCH_NAMES if b in self.branch_dims)
        self.fuse_dim = fuse_dim
        self.head_layers = []
        width = fuse_dim
        for idx in range(cfg.hidden_layers):
            fc = Dense(width, h, rng)
            self.head_layers += [(f"head.fc{idx + 1}", fc),
                                 (f"head.act{idx + 1}", activation_layer(cfg.activation)),
                                 (f"head.drop{idx + 1}", Dropout(cfg.dropout, rng))]
            width = h
        self.out_layer = Dense(width, 2, rng)
        self.head_layers.append(("head.out", self.out_layer))
        self._blocks += self.head_layers
        self.loss_head = SoftmaxCrossEntropy()

    # -- parameter plumbing -------------------------------------------------

    @property
    def params(self) -> dict:
        merged = {}
        for name, layer in self._blocks:
            for key, value in layer.params.items():
                merged[f"{name}.{key}"] = value
        return merged

    @property
    def grads(self) -> dict:
        merged = {}
        for name, layer in self._blocks:
            for key, value in layer.grads.items():
                merged[f"{name}.{key}"] = value
        return merged

    @property
    def weight_param_names(self) -> set:
        names = set()
        for name, layer in self._blocks:
            for key in layer.weight_names:
                names.add(f"{name}.{key}")
        return names

    @property
    def buffers(self) -> dict:
        out = {}
        for name, layer in self._blocks:
            if isinstance(layer, BatchNorm):
                out[f"{name}.running_mean"] = layer.running_mean
                out[f"{name}.running_var"] = layer.running_var
        return out

    def zero_grads(self) -> None:
        for _, layer in self._blocks:
            layer.zero_grads()

    # -- forward / backward -------------------------------------------------

    def _assemble(self, bundles: list) -> dict:
        """Stack per-segment features into branch input arrays."""
        batch: dict = {}
        cfg = self.cfg
        if "a" in cfg.branches:
            rows = []
            for b in bundles:
                if b.liwc_vec is None:
                    raise ValueError(f"segment {b.segment_id!r}: branch a enabled "
                                     f"but LIWC-PCA vector missing")
                rows.append(np.asarray(b.liwc_vec, dtype=np.float64))
            batch["a"] = np.stack(rows)[:, :, None]  # sequence of scalars
        if "b" in cfg.branches:
            rows = []
            for b in bundles:
                vec = np.asarray(b.time_vec, dtype=np.float64)
                if not cfg.strict_time_only:
                    vec = np.concatenate([vec, np.asarray(b.spectral_vec, dtype=np.float64)])
                rows.append(vec)
            batch["b"] = np.stack(rows)
        if "c" in cfg.branches:
            rows = []
            for b in bundles:
                if b.mfcc is None:
                    raise ValueError(f"segment {b.segment_id!r}: branch c enabled "
                                     f"but MFCC matrix missing")
                rows.append(np.asarray(b.mfcc, dtype=np.float64))
            batch["c"] = np.stack(rows)[:, None, :, :]
        if "d" in cfg.branches:
            rows = []
            for b in bundles:
                if b.embedding is None:
                    raise ValueError(f"segment {b.segment_id!r}: branch d enabled "
                                     f"but text embedding missing")
                rows.append(np.asarray(b.embedding, dtype=np.float64))
            batch["d"] = np.stack(rows)
        return batch

    def forward(self, bundles: list, train: bool = False) -> dict:
        """Run the model; returns probabilities, logits, branch outputs and
        the branch-a attention weights (None when branch a is disabled)."""
        batch = self._assemble(bundles)
        outputs = {}
        if "a" in self.cfg.branches:
            seq = self.a_lstm.forward(batch["a"], train)
            outputs["a"] = self.a_att.forward(seq, train)
        if "b" in self.cfg.branches:
            outputs["b"] = self.b_act.forward(self.b_fc.forward(batch["b"], train), train)
        if "c" in self.cfg.branches:
            x = batch["c"]
            for _, layer in self.c_layers:
                x = layer.forward(x, train)
            self._c_out_shape = x.shape
            outputs["c"] = x.reshape(x.shape[0], -1)
        if "d" in self.cfg.branches:
            outputs["d"] = self.d_act.forward(self.d_fc.forward(batch["d"], train), train)

        fused = np.concatenate(
            [outputs[b] for b in BRANCH_NAMES if b in outputs], axis=1
        )
        x = fused
        for _, layer in self.head_layers:
            x = layer.forward(x, train)
        logits = x
        return {
            "probabilities": softmax(logits),
            "logits": logits,
            "branch_outputs": outputs,
            "attention_weights": self.a_att.last_weights if "a" in self.cfg.branches else None,
        }

    def backward(self, dlogits: np.ndarray) -> None:
        g = dlogits
        for _, layer in reversed(self.head_layers):
            g = layer.backward(g)
        offset = 0
        for b in BRANCH_NAMES:
            if b not in self.branch_dims:
                continue
            dim = self.branch_dims[b]
            gb = g[:, offset : offset + dim]
            offset += dim
            if b == "a":
                gseq = self.a_att.backward(gb)
                self.a_lstm.backward(gseq)
            elif b == "b":
                self.b_fc.backward(self.b_act.backward(gb))
            elif b == "c":
                gc = gb.reshape(self._c_out_shape)
                for _, layer in reversed(self.c_layers):
                    gc = layer.backward(gc)
            elif b == "d":
                self.d_fc.backward(self.d_act.backward(gb))

    def predict(self, bundles: list) -> np.ndarray:
        return np.argmax(self.forward(bundles, train=False)["probabilities"], axis=1)


def one_hot(labels: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.size, 2))
    out[np.arange(labels.size), labels] = 1.0
    return out


def _stratified_split(labels: np.ndarray, fraction: float, rng: np.random.Generator):
    """Return (train_idx, val_idx) with per-class proportional sampling."""
    val = []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        idx = rng.permutation(idx)
        n_val = max(1, int(round(fraction * idx.size))) if idx.size > 1 else 0
        val.extend(idx[:n_val])
    val = np.sort(np.asarray(val, dtype=np.int64))
    train = np.setdiff1d(np.arange(labels.size), val)
    return train, val


def train(model: FusionModel, bundles: list, labels: np.ndarray,
          epochs_override: int | None = None,
          validation_fraction: float = 0.1) -> list:
    """Train in place with Adam; returns per-epoch learning-curve records.

    Deterministic given the config seed.  A trailing batch of size 1 is
    folded away (batch normalization needs at least 2 rows).
    """
    cfg = model.cfg
    labels = np.asarray(labels, dtype=np.int64)
    if len(bundles) != labels.size or labels.size == 0:
        raise ValueError("bundles and labels must be non-empty and aligned")
    epochs = epochs_override if epochs_override is not None else cfg.epochs
    rng = np.random.default_rng(cfg.seed + 1)
    if validation_fraction > 0 and labels.size >= 4:
        train_idx, val_idx = _stratified_split(labels, validation_fraction, rng)
    else:
        train_idx = np.arange(labels.size)
        val_idx = np.array([], dtype=np.int64)
    optimizer = Adam(model.params, learning_rate=cfg.learning_rate)
    weight_names = model.weight_param_names
    history = []
    for epoch in range(epochs):
        order = rng.permutation(train_idx)
        total_loss = 0.0
        total_correct = 0
        total_seen = 0
        start = 0
        while start < order.size:
            batch_idx = order[start : start + cfg.batch_size]
            start += cfg.batch_size
            if batch_idx.size == 1 and order.size > 1:
                break  # fold away size-1 trailing batch
            batch = [bundles[i] for i in batch_idx]
            target = one_hot(labels[batch_idx])
            model.zero_grads()
            out = model.forward(batch, train=True)
            loss, probs = model.loss_head.forward(out["logits"], target)
            params = model.params
            loss += l2_penalty(params, cfg.l2_lambda, weight_names)
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch}, batch offset {start}: "
                    f"learning_rate={cfg.learning_rate}"
                )
            model.backward(model.loss_head.backward())
            grads = model.grads
            for name in weight_names:
                grads[name] += l2_grad(params[name], cfg.l2_lambda)
            optimizer.step(grads)
            total_loss += loss * batch_idx.size
            total_correct += int(np.sum(np.argmax(probs, axis=1) == labels[batch_idx]))
            total_seen += batch_idx.size
        record = {
            "epoch": epoch,
            "train_loss": total_loss / max(total_seen, 1),
            "train_acc": total_correct / max(total_seen, 1),
        }
        if val_idx.size:
            val_batch = [bundles[i] for i in val_idx]
            out = model.forward(val_batch, train=False)
            val_loss = neural.cross_entropy(one_hot(labels[val_idx]), out["probabilities"])
            record["val_loss"] = val_loss
            record["val_acc"] = float(
                np.mean(np.argmax(out["probabilities"], axis=1) == labels[val_idx])
            )
        else:
            record["val_loss"] = float("nan")
            record["val_acc"] = float("nan")
        history.append(record)
    return history


def evaluate(model: FusionModel, bundles: list, labels: np.ndarray) -> Metrics:
    if not bundles:
        raise ValueError("empty holdout")
    return metrics_from_predictions(labels, model.predict(bundles))


def kfold_split(labels: np.ndarray, k: int = 10, seed: int = 0) -> list:
    """Stratified k-fold index partition; fold sizes differ by at most 1.

    Within each class indices are shuffled and dealt round-robin; the
    dealing offset advances by each class's remainder so overflow lands on
    different folds.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.size
    if n < k:
        raise ValueError(f"cannot split {n} items into {k} folds")
    rng = np.random.default_rng(seed)
    folds: list = [[] for _ in range(k)]
    offset = 0
    for cls in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == cls))
        for pos, item in enumerate(idx):
            folds[(offset + pos) % k].append(int(item))
        offset = (offset + idx.size) % k
    return [np.sort(np.asarray(f, dtype=np.int64)) for f in folds]


def _infer_dims(bundles: list, cfg: TrainConfig) -> dict:
    dims = {}
    if "a" in cfg.branches:
        dims["liwc_dim"] = int(np.asarray(bundles[0].liwc_vec).size)
    if "c" in cfg.branches:
        dims["mfcc_shape"] = tuple(np.asarray(bundles[0].mfcc).shape)
    return dims


def cross_validate(bundles: list, labels: np.ndarray, cfg: TrainConfig,
                   k: int = 10, epochs_override: int | None = None) -> dict:
    """k-fold cross-validation; returns per-fold metrics and histories."""
    labels = np.asarray(labels, dtype=np.int64)
    folds = kfold_split(labels, k=k, seed=cfg.seed)
    all_idx = np.arange(labels.size)
    fold_metrics = []
    histories = []
    for fold_no, holdout in enumerate(folds):
        train_idx = np.setdiff1d(all_idx, holdout)
        fold_cfg = replace(cfg, seed=cfg.seed + fold_no)
        model = FusionModel(fold_cfg, **_infer_dims(bundles, cfg))
        history = train(model, [bundles[i] for i in train_idx], labels[train_idx],
                        epochs_override=epochs_override)
        fold_metrics.append(evaluate(model, [bundles[i] for i in holdout], labels[holdout]))
        histories.append(history)
    return {
        "fold_metrics": fold_metrics,
        "mean_f1": float(np.mean([m.f1 for m in fold_metrics])),
        "histories": histories,
    }


def default_grid() -> dict:
    return {name: list(domain) for name, domain in GRID_DOMAINS.items()}


def enumerate_grid(grid: dict | None = None) -> list:
    """All configurations of the Cartesian hyperparameter grid."""
    if grid is None:
        grid = default_grid()
    if not grid:
        raise ValueError("empty grid")
    names = list(grid)
    return [dict(zip(names, combo)) for combo in itertools.product(*(grid[n] for n in names))]


def grid_search(bundles: list, labels: np.ndarray, base_cfg: TrainConfig,
                grid: dict | None = None, k: int = 10,
                epochs_override: int | None = None) -> list:
    """Exhaustive sweep over the grid, ranked by mean cross-validated F1.

    Training failures are recorded per configuration instead of aborting
    the sweep.
    """
    results = []
    for combo in enumerate_grid(grid):
        entry = {"config": combo}
        try:
            cfg = replace(base_cfg, **combo)
            cv = cross_validate(bundles, labels, cfg, k=k, epochs_override=epochs_override)
            entry["mean_f1"] = cv["mean_f1"]
            entry["fold_f1"] = [m.f1 for m in cv["fold_metrics"]]
        except Exception as exc:  # noqa: BLE001 - sweep records failures
            entry["error"] = str(exc)
            entry["mean_f1"] = -1.0
        results.append(entry)
    results.sort(key=lambda e: -e["mean_f1"])
    return results


def flatten_bundle(bundle: FeatureBundle) -> np.ndarray:
    """Concatenate all available modalities into one flat feature row."""
    parts = [np.asarray(bundle.time_vec, dtype=np.float64).ravel(),
             np.asarray(bundle.spectral_vec, dtype=np.float64).ravel()]
    if bundle.mfcc is not None:
        parts.append(np.asarray(bundle.mfcc, dtype=np.float64).ravel())
    if bundle.liwc_vec is not None:
        parts.append(np.asarray(bundle.liwc_vec, dtype=np.float64).ravel())
    if bundle.embedding is not None:
        parts.append(np.asarray(bundle.embedding, dtype=np.float64).ravel())
    return np.concatenate(parts)


def baseline_random_forest(bundles: list, labels: np.ndarray, k: int = 10,
                           n_trees: int = 100, max_depth: int = 10,
                           seed: int = 0) -> dict:
    """Random-forest baseline over the flat concatenated features,
    cross-validated with the same fold scheme as the fusion model."""
    from .forest import RandomForest

    labels = np.asarray(labels, dtype=np.int64)
    x = np.stack([flatten_bundle(b) for b in bundles])
    folds = kfold_split(labels, k=k, seed=seed)
    all_idx = np.arange(labels.size)
    fold_metrics = []
    for fold_no, holdout in enumerate(folds):
        train_idx = np.setdiff1d(all_idx, holdout)
        forest = RandomForest(n_trees=n_trees, max_depth=max_depth,
                              seed=seed + fold_no)
        forest.fit(x[train_idx], labels[train_idx])
        fold_metrics.append(metrics_from_predictions(labels[holdout],
                                                     forest.predict(x[holdout])))
    return {
        "fold_metrics": fold_metrics,
        "mean_f1": float(np.mean([m.f1 for m in fold_metrics])),
    }


# -- checkpoints -------------------------------------------------------------

CHECKPOINT_VERSION = 1


def _encode_array(arr: np.ndarray) -> dict:
    return {
        "shape": list(arr.shape),
        "data": base64.b64encode(arr.astype("<f8").tobytes()).decode("ascii"),
    }


def _decode_array(entry: dict) -> np.ndarray:
    raw = base64.b64decode(entry["data"])
    return np.frombuffer(raw, dtype="<f8").reshape(entry["shape"]).copy()


def save_checkpoint(model: FusionModel, path) -> None:
    payload = {
        "version": CHECKPOINT_VERSION,
        "config": asdict(model.cfg),
        "liwc_dim": model.liwc_dim,
        "mfcc_shape": list(model.mfcc_shape) if model.mfcc_shape else None,
        "seed": model.cfg.seed,
        "params": {k: _encode_array(v) for k, v in model.params.items()},
        "buffers": {k: _encode_array(v) for k, v in model.buffers.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_checkpoint(path) -> FusionModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('version')}")
    cfg_dict = payload["config"]
    cfg_dict["branches"] = tuple(cfg_dict["branches"])
    cfg = TrainConfig(**cfg_dict)
    model = FusionModel(
        cfg,
        liwc_dim=payload["liwc_dim"],
        mfcc_shape=tuple(payload["mfcc_shape"]) if payload["mfcc_shape"] else None,
    )
    params = model.params
    for name, entry in payload["params"].items():
        params[name][...] = _decode_array(entry)
    for name, layer in model._blocks:
        if isinstance(layer, BatchNorm):
            layer.running_mean = _decode_array(payload["buffers"][f"{name}.running_mean"])
            layer.running_var = _decode_array(payload["buffers"][f"{name}.running_var"])
    return model
