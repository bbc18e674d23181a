"""Multi-task recurrent network over encoded prefixes.

One shared LSTM stack reads the prefix left to right; its final hidden state
feeds four small dense heads that predict the next activity (softmax), the
time until the next event (linear), the case outcome (softmax), and the case
cycle time (linear). Training is mini-batch gradient descent with
backpropagation through time, adaptive-moment updates, per-length bucketing
(so no padding or masking is ever needed), and early stopping on a held-out
tail of the training samples.

Everything is float64 and seeded; a (seed, data, config) triple reproduces
parameters bit for bit on one platform.
"""

from dataclasses import dataclass, field, asdict
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .errors import ConfigError, TrainingError
from .feature_encoder import (EncodedSample, EncoderSpec, denormalize_time,
                              encode_log, encode_prefix)
from .log_model import END_ACTIVITY, Event, EventLog
from .serialize import load_state, save_state

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
LOG_FLOOR = 1e-12

HEADS = ("activity", "delta", "outcome", "cycle")


@dataclass(frozen=True)
class NetConfig:
    """Network topology and training settings.

    `input_dim`, `n_classes` (activities + end) and `n_outcomes` come from
    the fitted encoder; the rest are free hyperparameters.
    """

    input_dim: int
    n_classes: int
    n_outcomes: int
    seed: int
    hidden_units: int = 100
    shared_layers: int = 1
    head_hidden: int = 32
    learning_rate: float = 1e-3
    epochs: int = 100
    batch_size: int = 64
    loss_weights: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    val_fraction: float = 0.1
    patience: int = 10

    def __post_init__(self):
        for name in ("input_dim", "n_classes", "n_outcomes", "hidden_units",
                     "shared_layers", "head_hidden", "batch_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.learning_rate < 0 or self.epochs < 0 or self.patience < 0:
            raise ConfigError("learning_rate, epochs and patience must be >= 0")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ConfigError("val_fraction must be in [0, 1)")
        if len(self.loss_weights) != 4 or any(w < 0 for w in self.loss_weights) \
                or not any(self.loss_weights):
            raise ConfigError("loss_weights needs 4 non-negative entries, not all zero")

    def head_dims(self) -> dict[str, int]:
        return {"activity": self.n_classes, "delta": 1,
                "outcome": self.n_outcomes, "cycle": 1}


NetParams = dict[str, np.ndarray]


# ---------------------------------------------------------------------------
# Initialization
# ---------------------------------------------------------------------------

def _glorot(rng, fan_in: int, fan_out: int, shape) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, shape)


def _orthogonal(rng, n: int) -> np.ndarray:
    # QR of a normal matrix, sign-fixed so the result is unique.
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def init_params(config: NetConfig, zero: bool = False) -> NetParams:
    """Seeded parameter initialization; `zero` is a test hook that yields
    uniform softmax outputs and zero scalars."""
    rng = np.random.Generator(np.random.PCG64(config.seed))
    H = config.hidden_units
    params: NetParams = {}
    dim = config.input_dim
    for layer in range(config.shared_layers):
        if zero:
            wx = np.zeros((dim, 4 * H))
            wh = np.zeros((H, 4 * H))
        else:
            wx = _glorot(rng, dim, 4 * H, (dim, 4 * H))
            wh = np.concatenate([_orthogonal(rng, H) for _ in range(4)], axis=1)
        b = np.zeros(4 * H)
        b[H:2 * H] = 1.0  # forget-gate bias starts open
        params[f"lstm{layer}/wx"] = wx
        params[f"lstm{layer}/wh"] = wh
        params[f"lstm{layer}/b"] = b
        dim = H
    hh = config.head_hidden
    for name, out_dim in config.head_dims().items():
        if zero:
            w1 = np.zeros((H, hh))
            w2 = np.zeros((hh, out_dim))
        else:
            w1 = _glorot(rng, H, hh, (H, hh))
            w2 = _glorot(rng, hh, out_dim, (hh, out_dim))
        params[f"head/{name}/w1"] = w1
        params[f"head/{name}/b1"] = np.zeros(hh)
        params[f"head/{name}/w2"] = w2
        params[f"head/{name}/b2"] = np.zeros(out_dim)
    return params


# ---------------------------------------------------------------------------
# Forward / loss / backward
# ---------------------------------------------------------------------------

def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def forward(params: NetParams, config: NetConfig, x: np.ndarray,
            want_cache: bool = False):
    """Run a batch (B, T, input_dim) through the network.

    Returns (activity_probs, delta, outcome_probs, cycle) and, when asked,
    the cache needed by :func:`backward`.
    """
    if x.ndim != 3 or x.shape[2] != config.input_dim:
        raise ValueError(f"expected (B, T, {config.input_dim}) inputs, got {x.shape}")
    x = np.ascontiguousarray(x, dtype=np.float64)
    layer_caches = []
    seq = x
    for layer in range(config.shared_layers):
        wx = params[f"lstm{layer}/wx"]
        wh = params[f"lstm{layer}/wh"]
        b = params[f"lstm{layer}/b"]
        hs, cs, gi, gf, gg, go = kernels.lstm_layer_forward(seq, wx, wh, b)
        layer_caches.append((seq, hs, cs, gi, gf, gg, go))
        seq = hs
    h = seq[:, -1, :]

    outputs = {}
    head_caches = {}
    for name in HEADS:
        w1 = params[f"head/{name}/w1"]
        b1 = params[f"head/{name}/b1"]
        w2 = params[f"head/{name}/w2"]
        b2 = params[f"head/{name}/b2"]
        z1 = h @ w1 + b1
        a1 = np.maximum(z1, 0.0)
        z2 = a1 @ w2 + b2
        if name in ("activity", "outcome"):
            out = _softmax(z2)
        else:
            out = z2[:, 0]
        outputs[name] = out
        head_caches[name] = (z1, a1)
    result = (outputs["activity"], outputs["delta"], outputs["outcome"], outputs["cycle"])
    if want_cache:
        return result, (layer_caches, h, head_caches, outputs)
    return result


def loss_components(outputs, targets, weights) -> tuple[float, dict[str, float]]:
    """Mean per-task losses over a batch plus the weighted total.

    Classification uses cross-entropy with the log argument floored at 1e-12;
    regression uses absolute error on the normalized targets.
    """
    pa, pt, po, pc = outputs
    ya, yt, yo, yc = targets
    B = pa.shape[0]
    ce_a = float(-(ya * np.log(np.maximum(pa, LOG_FLOOR))).sum() / B)
    ce_o = float(-(yo * np.log(np.maximum(po, LOG_FLOOR))).sum() / B)
    ae_t = float(np.abs(pt - yt).sum() / B)
    ae_c = float(np.abs(pc - yc).sum() / B)
    parts = {"activity": ce_a, "delta": ae_t, "outcome": ce_o, "cycle": ae_c}
    wa, wt, wo, wc = weights
    total = wa * ce_a + wt * ae_t + wo * ce_o + wc * ae_c
    return total, parts


def backward(params: NetParams, config: NetConfig, cache, targets) -> NetParams:
    """Exact gradients of the mean weighted loss for one uniform-length batch.

    The absolute-error subgradient at 0 is taken as 0. Raises on non-finite
    gradients (divergence diagnostics are the caller's job).
    """
    layer_caches, h, head_caches, outputs = cache
    ya, yt, yo, yc = targets
    B = h.shape[0]
    wa, wt, wo, wc = config.loss_weights

    # Output-side deltas; softmax+cross-entropy collapses to (p - y).
    dz2 = {
        "activity": wa * (outputs["activity"] - ya) / B,
        "outcome": wo * (outputs["outcome"] - yo) / B,
        "delta": (wt * np.sign(outputs["delta"] - yt) / B)[:, None],
        "cycle": (wc * np.sign(outputs["cycle"] - yc) / B)[:, None],
    }

    grads: NetParams = {}
    dh = np.zeros_like(h)
    for name in HEADS:
        z1, a1 = head_caches[name]
        w1 = params[f"head/{name}/w1"]
        w2 = params[f"head/{name}/w2"]
        d2 = dz2[name]
        grads[f"head/{name}/w2"] = a1.T @ d2
        grads[f"head/{name}/b2"] = d2.sum(axis=0)
        dz1 = (d2 @ w2.T) * (z1 > 0.0)
        grads[f"head/{name}/w1"] = h.T @ dz1
        grads[f"head/{name}/b1"] = dz1.sum(axis=0)
        dh += dz1 @ w1.T

    T = layer_caches[-1][0].shape[1]
    dh_seq = np.zeros((B, T, config.hidden_units))
    dh_seq[:, -1, :] = dh
    for layer in range(config.shared_layers - 1, -1, -1):
        seq, hs, cs, gi, gf, gg, go = layer_caches[layer]
        wx = params[f"lstm{layer}/wx"]
        wh = params[f"lstm{layer}/wh"]
        dx, dwx, dwh, db = kernels.lstm_layer_backward(
            seq, hs, cs, gi, gf, gg, go, wx, wh, dh_seq)
        grads[f"lstm{layer}/wx"] = dwx
        grads[f"lstm{layer}/wh"] = dwh
        grads[f"lstm{layer}/b"] = db
        dh_seq = dx

    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient in parameter group {name!r}")
    return grads


# ---------------------------------------------------------------------------
# Batching
# ---------------------------------------------------------------------------

class _Buckets:
    """Samples stacked per prefix length for uniform-length batches."""

    def __init__(self, samples: Sequence[EncodedSample]):
        per_k: dict[int, list[int]] = {}
        for i, s in enumerate(samples):
            per_k.setdefault(s.inputs.shape[0], []).append(i)
        self.x: dict[int, np.ndarray] = {}
        self.ya: dict[int, np.ndarray] = {}
        self.yt: dict[int, np.ndarray] = {}
        self.yo: dict[int, np.ndarray] = {}
        self.yc: dict[int, np.ndarray] = {}
        self.slot: dict[int, tuple[int, int]] = {}  # sample index -> (k, row)
        for k, idxs in per_k.items():
            self.x[k] = np.ascontiguousarray(
                np.stack([samples[i].inputs for i in idxs]), dtype=np.float64)
            self.ya[k] = np.stack([samples[i].y_activity for i in idxs])
            self.yt[k] = np.array([samples[i].y_delta for i in idxs])
            self.yo[k] = np.stack([samples[i].y_outcome for i in idxs])
            self.yc[k] = np.array([samples[i].y_cycle for i in idxs])
            for row, i in enumerate(idxs):
                self.slot[i] = (k, row)

    def gather(self, indices: Sequence[int]):
        k, _ = self.slot[indices[0]]
        rows = [self.slot[i][1] for i in indices]
        return (self.x[k][rows], (self.ya[k][rows], self.yt[k][rows],
                                  self.yo[k][rows], self.yc[k][rows]))

    def full_batches(self, batch_size: int) -> list[list[int]]:
        batches = []
        for k in sorted(self.x):
            idxs = [i for i, (kk, _) in self.slot.items() if kk == k]
            idxs.sort()
            for at in range(0, len(idxs), batch_size):
                batches.append(idxs[at:at + batch_size])
        return batches


def _dataset_loss(params, config, buckets: _Buckets, batch_size: int):
    total = 0.0
    parts_sum = dict.fromkeys(HEADS, 0.0)
    n = 0
    for batch in buckets.full_batches(batch_size):
        x, targets = buckets.gather(batch)
        outputs = forward(params, config, x)
        t, parts = loss_components(outputs, targets, config.loss_weights)
        b = len(batch)
        total += t * b
        for name in HEADS:
            parts_sum[name] += parts[name] * b
        n += b
    return total / n, {name: parts_sum[name] / n for name in HEADS}


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_total: float
    ce_activity: float
    ae_delta: float
    ce_outcome: float
    ae_cycle: float
    val_total: float  # nan when no validation split is configured


def history_rows(history: Sequence[EpochStats]) -> list[str]:
    rows = ["epoch,train_total,ce_activity,ae_delta,ce_outcome,ae_cycle,val_total"]
    for h in history:
        rows.append(f"{h.epoch},{h.train_total:.10g},{h.ce_activity:.10g},"
                    f"{h.ae_delta:.10g},{h.ce_outcome:.10g},{h.ae_cycle:.10g},"
                    f"{h.val_total:.10g}")
    return rows


def train(config: NetConfig, samples: Sequence[EncodedSample]
          ) -> tuple[NetParams, list[EpochStats]]:
    """Fit the network on encoded prefix samples.

    The last `val_fraction` of `samples` (which arrive in chronological trace
    order) is held out for early stopping; the parameters returned are the
    best-validation snapshot, or the final ones when no validation is used.
    """
    if not samples:
        raise TrainingError("training needs at least one sample")
    n_val = int(len(samples) * config.val_fraction)
    train_samples = samples[:len(samples) - n_val]
    val_samples = samples[len(samples) - n_val:]
    if not train_samples:
        raise TrainingError("validation fraction leaves no training samples")
    buckets = _Buckets(train_samples)
    val_buckets = _Buckets(val_samples) if val_samples else None

    params = init_params(config)
    adam_m = {k: np.zeros_like(v) for k, v in params.items()}
    adam_v = {k: np.zeros_like(v) for k, v in params.items()}
    step = 0
    rng = np.random.Generator(np.random.PCG64(config.seed + 1))

    history: list[EpochStats] = []
    best_val = np.inf
    best_params = None
    wait = 0
    n_train = len(train_samples)

    for epoch in range(config.epochs):
        perm = rng.permutation(n_train)
        per_k: dict[int, list[int]] = {}
        for i in perm:
            per_k.setdefault(buckets.slot[i][0], []).append(int(i))
        batch_list = []
        for k in sorted(per_k):
            idxs = per_k[k]
            for at in range(0, len(idxs), config.batch_size):
                batch_list.append(idxs[at:at + config.batch_size])
        for bi in rng.permutation(len(batch_list)):
            batch = batch_list[bi]
            x, targets = buckets.gather(batch)
            outputs, cache = forward(params, config, x, want_cache=True)
            total, _ = loss_components(outputs, targets, config.loss_weights)
            if not np.isfinite(total):
                raise TrainingError(
                    f"training diverged at epoch {epoch}, batch {int(bi)}")
            grads = backward(params, config, cache, targets)
            step += 1
            bc1 = 1.0 - ADAM_BETA1 ** step
            bc2 = 1.0 - ADAM_BETA2 ** step
            for key, g in grads.items():
                m = adam_m[key]
                v = adam_v[key]
                m *= ADAM_BETA1
                m += (1.0 - ADAM_BETA1) * g
                v *= ADAM_BETA2
                v += (1.0 - ADAM_BETA2) * g * g
                params[key] -= config.learning_rate * (m / bc1) / (
                    np.sqrt(v / bc2) + ADAM_EPS)

        train_total, parts = _dataset_loss(params, config, buckets, config.batch_size)
        val_total = np.nan
        if val_buckets is not None:
            val_total, _ = _dataset_loss(params, config, val_buckets, config.batch_size)
        history.append(EpochStats(epoch, train_total, parts["activity"],
                                  parts["delta"], parts["outcome"], parts["cycle"],
                                  val_total))
        if val_buckets is not None:
            if val_total < best_val:
                best_val = val_total
                best_params = {k: v.copy() for k, v in params.items()}
                wait = 0
            else:
                wait += 1
                if wait >= config.patience:
                    break
    if best_params is not None:
        params = best_params
    return params, history


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TracePrediction:
    """Second-scale, label-level prediction for one running case."""

    next_activity: str
    next_activity_prob: float
    activity_dist: Mapping[str, float]
    next_delta_seconds: float
    next_timestamp: float
    outcome: str
    outcome_prob: float
    outcome_dist: Mapping[str, float]
    cycle_seconds: float
    completion_timestamp: float


@dataclass
class TrainedNet:
    """Bundle of everything needed to predict on raw prefixes."""

    config: NetConfig
    params: NetParams
    spec: EncoderSpec
    history: list[EpochStats] = field(default_factory=list)

    def forward_encoded(self, x: np.ndarray):
        return forward(self.params, self.config, x)

    def _assemble(self, pa, pt, po, pc, first_ts: float, last_ts: float
                  ) -> TracePrediction:
        labels_a = list(self.spec.activities) + [END_ACTIVITY]
        ia = int(np.argmax(pa))
        io = int(np.argmax(po))
        delta_s = denormalize_time(self.spec, float(pt), "next_delta")
        cycle_s = denormalize_time(self.spec, float(pc), "cycle")
        return TracePrediction(
            next_activity=labels_a[ia],
            next_activity_prob=float(pa[ia]),
            activity_dist={lbl: float(p) for lbl, p in zip(labels_a, pa)},
            next_delta_seconds=delta_s,
            next_timestamp=last_ts + delta_s,
            outcome=self.spec.activities[io],
            outcome_prob=float(po[io]),
            outcome_dist={lbl: float(p) for lbl, p in
                          zip(self.spec.activities, po)},
            cycle_seconds=cycle_s,
            completion_timestamp=first_ts + cycle_s,
        )

    def predict_prefix(self, events: Sequence[Event]) -> TracePrediction:
        x = encode_prefix(self.spec, events)[None, :, :]
        pa, pt, po, pc = forward(self.params, self.config, x)
        return self._assemble(pa[0], pt[0], po[0], pc[0],
                              events[0].timestamp, events[-1].timestamp)

    def predict_log(self, log: EventLog) -> list[TracePrediction]:
        """Predictions for every prefix of the log, in prefix-log order
        (traces in log order, k ascending), batched by prefix length."""
        samples = encode_log(self.spec, log)
        per_k: dict[int, list[int]] = {}
        for i, s in enumerate(samples):
            per_k.setdefault(s.inputs.shape[0], []).append(i)
        out: list[TracePrediction | None] = [None] * len(samples)
        for k, idxs in per_k.items():
            x = np.stack([samples[i].inputs for i in idxs])
            for at in range(0, len(idxs), 256):
                chunk = idxs[at:at + 256]
                pa, pt, po, pc = forward(self.params, self.config, x[at:at + 256])
                for row, i in enumerate(chunk):
                    prefix = samples[i].source.prefix
                    out[i] = self._assemble(pa[row], pt[row], po[row], pc[row],
                                            prefix[0].timestamp,
                                            prefix[-1].timestamp)
        return out


# ---------------------------------------------------------------------------
# Checkpointing
# ---------------------------------------------------------------------------

def save_checkpoint(net: TrainedNet, path, encoder_ref: str = "") -> None:
    """Persist config, parameters and history; the encoder itself is saved
    separately (see `encoder_ref` for its file name)."""
    meta = {
        "role": "net-checkpoint",
        "config": asdict(net.config),
        "encoder_ref": encoder_ref,
        "history_columns": ["epoch", "train_total", "ce_activity", "ae_delta",
                            "ce_outcome", "ae_cycle", "val_total"],
    }
    arrays = dict(net.params)
    hist = np.array([[h.epoch, h.train_total, h.ce_activity, h.ae_delta,
                      h.ce_outcome, h.ae_cycle, h.val_total] for h in net.history])
    arrays["history"] = hist.reshape(-1, 7)
    save_state(path, meta, arrays)


def load_checkpoint(path, spec: EncoderSpec) -> TrainedNet:
    meta, arrays = load_state(path)
    if meta.get("role") != "net-checkpoint":
        from .errors import ModelIOError
        raise ModelIOError(f"{path}: not a network checkpoint")
    cfg_dict = dict(meta["config"])
    cfg_dict["loss_weights"] = tuple(cfg_dict["loss_weights"])
    config = NetConfig(**cfg_dict)
    hist = arrays.pop("history")
    history = [EpochStats(int(r[0]), *map(float, r[1:])) for r in hist]
    return TrainedNet(config, dict(arrays), spec, history)
