"""Joint loss, exact backpropagation, RMSProp-style updates and the
epoch/batch training loop.

The model chains three stages: a sigmoid autoencoder (input x -> hidden
code h -> reconstruction x_c), an optional fully connected stack
(h -> tree input x_t), and a forest of soft-routed trees (x_t -> class
probabilities, averaged over trees). The scalar objective is

    mean over samples [ ||x - x_c||^2 + mean over trees( -log p_tree[y] ) ]

and every gradient here is derived by hand, layer by layer; the finite
difference harness in the test suite is the arbiter of correctness.

Per-epoch cost model: one epoch costs O(n_batches * batch_size * (
sum_l n_{l-1} n_l over encoder+decoder layers + sum_l n_{l-1} n_l over
fully connected layers + xt_dim * n_trees * n_leaves)). At a fixed depth
the forest term, and hence the epoch wall time once it dominates, grows
linearly in the number of trees.

Two optimizers run side by side, exactly as the training loop is staged:
the weight set theta (encoder, decoder, fully connected, routing) takes an
accumulator-scaled step after every mini-batch, while the leaf logits take
one step per epoch from the gradient over the full training set. Leaf
class distributions are always the softmax of the stored logits, so they
remain valid distributions after every update.

The loop owns the model exclusively while training; per-batch gradient
reductions are plain indexed sums, so results are reproducible for a fixed
(seed, config, dataset) triple.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, asdict
from math import ceil

import numpy as np

from .autoencoder import AutoencoderParams
from .errors import ConfigError, NumericError
from .forest import ForestParams, TreeParams, _reach_probabilities
from .numerics import Layer, Rng, sigmoid, sigmoid_chain

__all__ = [
    "TrainConfig",
    "Model",
    "OptimizerState",
    "TrainResult",
    "init_model",
    "parameter_blocks",
    "forward",
    "tree_loss",
    "joint_loss",
    "gradients",
    "rmsprop_step",
    "leaf_update_step",
    "train",
    "predict",
    "measure_epoch_seconds",
]

NORMALIZATION_METHODS = ("zscore", "minmax", "none")

# -log is kept finite by flooring the predicted probability of the true
# class here; the gradient is zero wherever the floor is active.
PROB_FLOOR = 1e-12


@dataclass
class TrainConfig:
    """Structure and optimizer settings for one training run."""

    n_epoch: int = 200
    n_tree: int = 5
    n_depth: int = 3
    batch_size: int = 50
    learning_rate: float = 0.05
    epsilon: float = 1e-8
    leaf_learning_rate: float = 0.05
    seed: int = 0
    normalization: str = "zscore"
    fc_layer_count: int = 1
    ae_layer_count: int = 2
    ae_widths: tuple[int, ...] | None = None
    fc_width: int | None = None
    init_scale: float = 0.5
    reshuffle_each_epoch: bool = False

    def __post_init__(self):
        if self.n_epoch < 0:
            raise ConfigError(f"n_epoch must be >= 0, got {self.n_epoch}")
        for name in ("n_tree", "n_depth", "batch_size", "ae_layer_count"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.fc_layer_count < 0:
            raise ConfigError(f"fc_layer_count must be >= 0, got {self.fc_layer_count}")
        for name in ("learning_rate", "leaf_learning_rate", "epsilon", "init_scale"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.normalization not in NORMALIZATION_METHODS:
            raise ConfigError(
                f"normalization must be one of {NORMALIZATION_METHODS}, got {self.normalization!r}"
            )
        if self.ae_widths is not None:
            self.ae_widths = tuple(int(w) for w in self.ae_widths)
            if len(self.ae_widths) != self.ae_layer_count:
                raise ConfigError(
                    f"ae_widths has {len(self.ae_widths)} entries for "
                    f"{self.ae_layer_count} encoder layers"
                )
            if any(w < 1 for w in self.ae_widths):
                raise ConfigError("ae_widths entries must be >= 1")
        if self.fc_width is not None and self.fc_width < 1:
            raise ConfigError(f"fc_width must be >= 1, got {self.fc_width}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ae_widths"] = list(self.ae_widths) if self.ae_widths is not None else None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if d.get("ae_widths") is not None:
            d["ae_widths"] = tuple(d["ae_widths"])
        return cls(**d)


@dataclass
class Model:
    """All trainable tensors plus the config that shaped them.

    ``norm_stats`` (a dataio.NormStats, kept untyped here to avoid the
    import cycle) and ``manifest_version`` ride along so a serialized model
    can be applied to raw feature files without extra sidecars.
    """

    autoencoder: AutoencoderParams
    forest: ForestParams
    config: TrainConfig
    norm_stats: object = None
    manifest_version: int | None = None

    @property
    def n_features(self) -> int:
        return self.autoencoder.input_dim

    @property
    def n_classes(self) -> int:
        return self.forest.n_classes


def _default_encoder_widths(n_features: int, n_layers: int) -> list[int]:
    # Halve per layer but keep at least two units: the routing has no bias
    # term, so a one-dimensional all-positive tree input cannot be split.
    widths = []
    w = n_features
    for _ in range(n_layers):
        w = max(2, ceil(w / 2))
        widths.append(w)
    return widths


def init_model(config: TrainConfig, n_features: int, rng: Rng | None = None,
               n_classes: int = 2) -> Model:
    """Freshly initialized model; every tensor is drawn normal(0, init_scale^2).

    The draw order (encoder, decoder, fully connected, then per-tree routing
    and leaf logits) is fixed so a seed pins the whole initialization.
    """
    if n_features < 1:
        raise ConfigError(f"need at least one input feature, got {n_features}")
    if rng is None:
        rng = Rng(config.seed)
    scale = config.init_scale

    enc_widths = list(config.ae_widths) if config.ae_widths is not None else \
        _default_encoder_widths(n_features, config.ae_layer_count)
    dec_widths = list(reversed(enc_widths))[1:] + [n_features]

    def draw_layers(in_dim, widths):
        layers = []
        for out_dim in widths:
            layers.append(Layer(rng.normal((out_dim, in_dim), scale),
                                rng.normal((out_dim,), scale)))
            in_dim = out_dim
        return layers

    encoder = draw_layers(n_features, enc_widths)
    decoder = draw_layers(enc_widths[-1], dec_widths)
    hidden = enc_widths[-1]

    fc_width = config.fc_width if config.fc_width is not None else hidden
    fc = draw_layers(hidden, [fc_width] * config.fc_layer_count)
    xt_dim = fc_width if config.fc_layer_count > 0 else hidden

    n_dec = 2 ** config.n_depth - 1
    n_leaf = 2 ** config.n_depth
    trees = []
    for _ in range(config.n_tree):
        routing = rng.normal((n_dec, xt_dim), scale)
        leaf_logits = rng.normal((n_leaf, n_classes), scale)
        trees.append(TreeParams(config.n_depth, routing, leaf_logits))

    return Model(AutoencoderParams(encoder, decoder), ForestParams(trees, fc), config)


def parameter_blocks(model: Model) -> list[tuple[str, np.ndarray]]:
    """Named references to every trainable tensor, leaf logits included.

    The arrays are the model's own buffers: writing through them (e.g.
    ``block[...] = new``) updates the model.
    """
    blocks = []
    for i, layer in enumerate(model.autoencoder.encoder):
        blocks.append((f"encoder.{i}.W", layer.W))
        blocks.append((f"encoder.{i}.b", layer.b))
    for i, layer in enumerate(model.autoencoder.decoder):
        blocks.append((f"decoder.{i}.W", layer.W))
        blocks.append((f"decoder.{i}.b", layer.b))
    for i, layer in enumerate(model.forest.fc):
        blocks.append((f"fc.{i}.W", layer.W))
        blocks.append((f"fc.{i}.b", layer.b))
    for k, tree in enumerate(model.forest.trees):
        blocks.append((f"tree.{k}.routing", tree.routing))
        blocks.append((f"tree.{k}.leaf_logits", tree.leaf_logits))
    return blocks


def _leaf_block_names(model: Model) -> set[str]:
    return {f"tree.{k}.leaf_logits" for k in range(model.forest.n_trees)}


# ---------------------------------------------------------------------------
# Forward pass


def _as_batch(x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[None, :], True
    return x, False


def _forward_cache(X: np.ndarray, model: Model) -> dict:
    """One batched forward pass keeping every intermediate for backprop."""
    enc_acts = sigmoid_chain(X, model.autoencoder.encoder)
    H = enc_acts[-1]
    dec_acts = sigmoid_chain(H, model.autoencoder.decoder)
    fc_acts = sigmoid_chain(H, model.forest.fc)
    XT = fc_acts[-1]

    per_tree = []
    probs_sum = None
    for tree in model.forest.trees:
        decisions = sigmoid(XT @ tree.routing.T)
        reach = _reach_probabilities(decisions, tree.depth)
        mu = reach[:, tree.n_decision_nodes:]
        pi = tree.leaf_distributions()
        probs = mu @ pi
        per_tree.append({"decisions": decisions, "reach": reach, "mu": mu,
                         "pi": pi, "probs": probs})
        probs_sum = probs if probs_sum is None else probs_sum + probs

    return {
        "enc_acts": enc_acts,
        "dec_acts": dec_acts,
        "fc_acts": fc_acts,
        "x_c": dec_acts[-1],
        "per_tree": per_tree,
        "forest_probs": probs_sum / model.forest.n_trees,
    }


def forward(x: np.ndarray, model: Model):
    """Full inference chain for one vector or a batch.

    Returns ``(x_c, probs_per_tree, forest_probs)`` where ``probs_per_tree``
    is stacked with the tree axis first.
    """
    X, single = _as_batch(x)
    cache = _forward_cache(X, model)
    per_tree = np.stack([t["probs"] for t in cache["per_tree"]])
    x_c, forest_probs = cache["x_c"], cache["forest_probs"]
    if single:
        return x_c[0], per_tree[:, 0, :], forest_probs[0]
    return x_c, per_tree, forest_probs


def predict(model: Model, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(labels, forest probabilities) for a batch; argmax ties go low."""
    X, single = _as_batch(X)
    probs = _forward_cache(X, model)["forest_probs"]
    labels = probs.argmax(axis=1)
    if single:
        return labels[0], probs[0]
    return labels, probs


# ---------------------------------------------------------------------------
# Losses


def tree_loss(probs: np.ndarray, y: int) -> float:
    """-log of the probability assigned to the true class, floored at 1e-12."""
    p = max(float(np.asarray(probs)[int(y)]), PROB_FLOOR)
    return -float(np.log(p))


def joint_loss(X: np.ndarray, y: np.ndarray, model: Model) -> float:
    """Reconstruction error plus mean per-tree -log p[y], averaged over the batch."""
    X, _ = _as_batch(X)
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    if X.shape[0] == 0:
        raise ValueError("joint_loss of an empty batch is undefined")
    if y.shape[0] != X.shape[0]:
        raise ValueError(f"{X.shape[0]} samples but {y.shape[0]} labels")
    cache = _forward_cache(X, model)
    recon = ((X - cache["x_c"]) ** 2).sum(axis=1)
    rows = np.arange(X.shape[0])
    tree_terms = np.zeros(X.shape[0])
    for t in cache["per_tree"]:
        p_y = np.maximum(t["probs"][rows, y], PROB_FLOOR)
        tree_terms += -np.log(p_y)
    tree_terms /= model.forest.n_trees
    return float((recon + tree_terms).mean())


# ---------------------------------------------------------------------------
# Backpropagation


def _backward_layers(layers: list[Layer], acts: list[np.ndarray],
                     g_out: np.ndarray):
    """Gradients for a sigmoid_chain stack given dL/d(output).

    Returns ([(gW, gb) per layer], dL/d(input)).
    """
    grads = [None] * len(layers)
    g = g_out
    for i in range(len(layers) - 1, -1, -1):
        a = acts[i + 1]
        gz = g * a * (1.0 - a)
        grads[i] = (gz.T @ acts[i], gz.sum(axis=0))
        g = gz @ layers[i].W
    return grads, g


def gradients(X: np.ndarray, y: np.ndarray, model: Model) -> dict[str, np.ndarray]:
    """Exact gradient of joint_loss with respect to every parameter block.

    Keys match ``parameter_blocks`` names; shapes match the parameters.
    """
    X, _ = _as_batch(X)
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    if X.shape[0] == 0:
        raise ValueError("gradients of an empty batch are undefined")
    B = X.shape[0]
    K = model.forest.n_trees
    rows = np.arange(B)
    cache = _forward_cache(X, model)
    grads: dict[str, np.ndarray] = {}

    # Decoder chain, seeded by d/dx_c of mean_b ||x - x_c||^2.
    g_xc = 2.0 * (cache["x_c"] - X) / B
    dec_grads, g_h_dec = _backward_layers(model.autoencoder.decoder,
                                          cache["dec_acts"], g_xc)
    for i, (gW, gb) in enumerate(dec_grads):
        grads[f"decoder.{i}.W"] = gW
        grads[f"decoder.{i}.b"] = gb

    # Trees: route dL/dp back through the leaf mixture and the reach
    # recursion, accumulating dL/dx_t across trees.
    XT = cache["fc_acts"][-1]
    g_xt = np.zeros_like(XT)
    for k, t in enumerate(cache["per_tree"]):
        tree = model.forest.trees[k]
        n_dec = tree.n_decision_nodes
        p_y = t["probs"][rows, y]
        # Zero gradient where the probability floor is active.
        s = np.where(p_y > PROB_FLOOR, -1.0 / (K * B * np.maximum(p_y, PROB_FLOOR)), 0.0)

        onehot_s = np.zeros((B, tree.n_classes))
        onehot_s[rows, y] = s
        g_pi = t["mu"].T @ onehot_s
        pi = t["pi"]
        grads[f"tree.{k}.leaf_logits"] = pi * (g_pi - (g_pi * pi).sum(axis=1, keepdims=True))

        g_mu = s[:, None] * pi[:, y].T
        g_reach = np.empty_like(t["reach"])
        g_reach[:, n_dec:] = g_mu
        d = t["decisions"]
        for i in range(n_dec - 1, -1, -1):
            g_reach[:, i] = (g_reach[:, 2 * i + 1] * d[:, i]
                             + g_reach[:, 2 * i + 2] * (1.0 - d[:, i]))
        left = 2 * np.arange(n_dec) + 1
        g_d = (g_reach[:, left] - g_reach[:, left + 1]) * t["reach"][:, :n_dec]
        g_f = g_d * d * (1.0 - d)
        grads[f"tree.{k}.routing"] = g_f.T @ XT
        g_xt += g_f @ tree.routing

    # Fully connected chain (identity pass-through when empty).
    fc_grads, g_h_fc = _backward_layers(model.forest.fc, cache["fc_acts"], g_xt)
    for i, (gW, gb) in enumerate(fc_grads):
        grads[f"fc.{i}.W"] = gW
        grads[f"fc.{i}.b"] = gb

    # Encoder receives gradient from both the decoder and the forest.
    enc_grads, _ = _backward_layers(model.autoencoder.encoder,
                                    cache["enc_acts"], g_h_dec + g_h_fc)
    for i, (gW, gb) in enumerate(enc_grads):
        grads[f"encoder.{i}.W"] = gW
        grads[f"encoder.{i}.b"] = gb

    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient in block {name}", context=name)
    return grads


# ---------------------------------------------------------------------------
# Optimizers


def rmsprop_step(theta: np.ndarray, grad: np.ndarray, accum: np.ndarray,
                 learning_rate: float, epsilon: float):
    """One accumulator-scaled step.

    G <- G + g*g ; theta <- theta - (lr / sqrt(G + eps)) * g, elementwise.
    Pure: returns (new_theta, new_accumulator).
    """
    accum = accum + grad * grad
    theta = theta - learning_rate / np.sqrt(accum + epsilon) * grad
    return theta, accum


def leaf_update_step(leaf_logits: np.ndarray, grad: np.ndarray, accum: np.ndarray,
                     leaf_learning_rate: float, epsilon: float):
    """Accumulator-scaled step on the leaf logits.

    The exposed class distribution is softmax(logits), so it stays
    normalized exactly no matter the step. Returns (new_logits, new_accum).
    """
    return rmsprop_step(leaf_logits, grad, accum, leaf_learning_rate, epsilon)


@dataclass
class OptimizerState:
    """Squared-gradient accumulators, one per parameter block.

    Entries are nonnegative and nondecreasing across steps.
    """

    accumulators: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_model(cls, model: Model) -> "OptimizerState":
        return cls({name: np.zeros_like(arr) for name, arr in parameter_blocks(model)})


# ---------------------------------------------------------------------------
# Training loop


@dataclass
class TrainResult:
    model: Model
    losses: list[float]
    accuracies: list[float]


def train(X: np.ndarray, y: np.ndarray, config: TrainConfig,
          log_path=None, epoch_callback=None) -> TrainResult:
    """Mini-batch training.

    The data is shuffled once up front (seeded); each epoch then walks the
    same batch sequence updating the weight set theta per batch, and takes
    a single leaf-logit step from the full-training-set gradient. The loss
    trace holds the full-set joint loss after each epoch's updates.

    ``log_path``, when given, receives one tab-separated line per epoch:
    epoch index, joint loss, training accuracy. ``epoch_callback(epoch,
    model)``, when given, runs after each epoch's updates (read-only hook).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2:
        raise ConfigError(f"training features must be 2-D, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise ConfigError(f"{X.shape[0]} rows but label shape {y.shape}")
    if not np.all((y == 0) | (y == 1)):
        raise ConfigError("labels must be 0 or 1")
    n = X.shape[0]
    if config.batch_size > n:
        raise ConfigError(f"batch_size {config.batch_size} exceeds dataset size {n}")

    rng = Rng(config.seed)
    model = init_model(config, X.shape[1], rng=rng)
    state = OptimizerState.for_model(model)
    leaf_names = _leaf_block_names(model)

    order = rng.permutation(n)
    X, y = X[order], y[order]

    blocks = dict(parameter_blocks(model))
    n_batches = ceil(n / config.batch_size)
    losses: list[float] = []
    accuracies: list[float] = []

    for epoch in range(config.n_epoch):
        if config.reshuffle_each_epoch and epoch > 0:
            order = rng.permutation(n)
            X, y = X[order], y[order]
        for b in range(n_batches):
            sl = slice(b * config.batch_size, (b + 1) * config.batch_size)
            try:
                grads = gradients(X[sl], y[sl], model)
            except NumericError as exc:
                raise NumericError(f"{exc} at epoch {epoch}",
                                   context=epoch) from exc
            for name, arr in blocks.items():
                if name in leaf_names:
                    continue
                new, state.accumulators[name] = rmsprop_step(
                    arr, grads[name], state.accumulators[name],
                    config.learning_rate, config.epsilon)
                arr[...] = new

        try:
            full_grads = gradients(X, y, model)
        except NumericError as exc:
            raise NumericError(f"{exc} at epoch {epoch}", context=epoch) from exc
        for name in leaf_names:
            new, state.accumulators[name] = leaf_update_step(
                blocks[name], full_grads[name], state.accumulators[name],
                config.leaf_learning_rate, config.epsilon)
            blocks[name][...] = new

        loss = joint_loss(X, y, model)
        if not np.isfinite(loss):
            raise NumericError(f"non-finite loss at epoch {epoch}", context=epoch)
        labels, _ = predict(model, X)
        acc = float((labels == y).mean())
        losses.append(loss)
        accuracies.append(acc)
        if epoch_callback is not None:
            epoch_callback(epoch, model)

    if log_path is not None:
        with open(log_path, "w", encoding="utf-8") as fh:
            for e, (loss, acc) in enumerate(zip(losses, accuracies)):
                fh.write(f"{e}\t{loss!r}\t{acc!r}\n")

    return TrainResult(model, losses, accuracies)


def measure_epoch_seconds(X: np.ndarray, y: np.ndarray, config: TrainConfig,
                          n_epochs: int = 3) -> float:
    """Wall-clock seconds per epoch, with setup cost subtracted out.

    Times an ``n_epochs`` run against an epoch-free run of the same config,
    so initialization and shuffling do not pollute the per-epoch figure.
    """

    def timed(n: int) -> float:
        cfg = TrainConfig.from_dict({**config.to_dict(), "n_epoch": n})
        t0 = time.perf_counter()
        train(X, y, cfg)
        return time.perf_counter() - t0

    setup = timed(0)
    full = timed(n_epochs)
    return max((full - setup) / n_epochs, 1e-9)
