"""
ST-BeamsNet: two-branch set-transformer velocity regressor.

Each branch (IMU, DVL) runs patch embedding -> b Set Attention Blocks ->
Pooling by Multihead Attention over k seed vectors -> a small SAB decoder,
and is flattened to k*D features. Both branches are concatenated and passed
through FC1 -> dropout -> tanh -> FC2 to produce a body-frame velocity.
"""

import copy
import json
import logging
from collections import deque
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import tensor_ad as ad
from .dvl_model import DvlMeasurement
from .errors import ConfigError, NavDataError
from .strapdown import ImuStream
from .tensor_ad import Tensor

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

WEIGHTS_FORMAT = "st-beamsnet-weights"
WEIGHTS_VERSION = 1
BRANCHES = ("imu", "dvl")

# (dvl_past [n, 3], imu_past [m, 6], t) -> predicted body velocity [3]
VelocityPredictor = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


@dataclass
class StHyperParams:
    """Network and training hyperparameters. Defaults are the published values."""

    alpha: int = 200
    beta: int = 100
    gamma: int = 1
    D: int = 128
    b: int = 16
    h: int = 2
    FFE: int = 256
    k: int = 3
    d: Optional[int] = None
    dvl_alpha: int = 3
    dvl_beta: int = 1
    decoder_depth: int = 1
    fc_hidden: Optional[int] = None
    dropout_p: float = 0.2
    learning_rate: float = 1e-3
    momentum: float = 0.9
    batch_size: int = 128
    epochs: int = 500
    residual_head: bool = False
    head_init_gain: float = 1.0
    n_dvl: int = 3
    m_imu: int = 400

    def __post_init__(self):
        if self.d is None:
            self.d = self.D
        if self.fc_hidden is None:
            self.fc_hidden = self.D
        self.validate()

    def validate(self):
        positive = ("alpha", "beta", "gamma", "D", "b", "h", "FFE", "k", "dvl_alpha",
                    "dvl_beta", "batch_size", "epochs", "n_dvl", "m_imu", "fc_hidden")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"Hyperparameter {name} must be positive, got {getattr(self, name)}")
        if self.D % self.h != 0:
            raise ConfigError(f"Latent dim D={self.D} must be divisible by the head count h={self.h}")
        if self.d != self.D:
            raise ConfigError(f"Decoder latent dim d={self.d} must equal D={self.D}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError(f"dropout_p must be in [0, 1), got {self.dropout_p}")
        if self.learning_rate < 0 or not 0.0 <= self.momentum < 1.0:
            raise ConfigError("learning_rate must be >= 0 and momentum in [0, 1)")
        if self.decoder_depth < 0:
            raise ConfigError("decoder_depth must be >= 0")

    @property
    def n_patches_imu(self) -> int:
        return (self.m_imu - self.alpha) // self.beta + 1

    @property
    def n_patches_dvl(self) -> int:
        return (self.n_dvl - self.dvl_alpha) // self.dvl_beta + 1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "StHyperParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown hyperparameters: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def preset(cls, name: str, **overrides) -> "StHyperParams":
        """'published' (reference sizes, alias 'paper') or 'toy' (desk-scale); 'custom' is toy plus overrides."""
        if name in ("published", "paper"):
            base = {}
        elif name in ("toy", "custom"):
            base = dict(D=16, b=2, h=2, FFE=32, k=3, epochs=50, learning_rate=5e-3,
                        dropout_p=0.1, residual_head=True, head_init_gain=0.01)
        else:
            raise ConfigError(f"Unknown network preset '{name}' (expected published, paper, toy or custom)")
        base.update(overrides)
        return cls(**base)


@dataclass
class TrainingWindow:
    """Three past DVL body velocities, 400 past IMU rows and the withheld target."""

    dvl_past: np.ndarray
    imu_past: np.ndarray
    target: np.ndarray
    t_target: float = 0.0
    mission_id: str = ""


@dataclass
class WindowBatch:
    dvl: np.ndarray
    imu: np.ndarray
    target: np.ndarray

    def __len__(self):
        return len(self.target)


def stack_windows(windows: Sequence[TrainingWindow]) -> WindowBatch:
    return WindowBatch(
        dvl=np.stack([w.dvl_past for w in windows]),
        imu=np.stack([w.imu_past for w in windows]),
        target=np.stack([w.target for w in windows]),
    )


class StWeights:
    """Named tensors of both branches and the head, plus input normalization."""

    def __init__(self, hp: StHyperParams, tensors: Dict[str, Tensor], seed: int = 0):
        self.hp = hp
        self.tensors = tensors
        self.seed = seed

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self.tensors

    def trainable(self) -> List[Tuple[str, Tensor]]:
        return [(n, t) for n, t in self.tensors.items() if t.requires_grad]

    def zero_grad(self):
        for t in self.tensors.values():
            t.zero_grad()

    def copy(self) -> "StWeights":
        return StWeights(
            copy.deepcopy(self.hp),
            {n: Tensor(t.data.copy(), requires_grad=t.requires_grad, name=n) for n, t in self.tensors.items()},
            self.seed,
        )

    def set_normalization(self, batch: WindowBatch):
        """Per-channel mean/std of the training inputs."""
        imu = batch.imu.reshape(-1, batch.imu.shape[-1])
        dvl = batch.dvl.reshape(-1, batch.dvl.shape[-1])
        for key, arr in (("imu", imu), ("dvl", dvl)):
            std = arr.std(axis=0)
            self.tensors[f"norm.{key}.mean"].data = arr.mean(axis=0)
            self.tensors[f"norm.{key}.std"].data = np.where(std > 1e-12, std, 1.0)

    # ── initialization ─────────────────────────────────────────────────────

    @classmethod
    def init(cls, hp: StHyperParams, seed: int) -> "StWeights":
        """Uniform fan-in initialization from a seeded generator."""
        rng = np.random.default_rng(seed)
        tensors: Dict[str, Tensor] = {}

        def param(name, shape, fan_in, gain=1.0, zero=False, value=None):
            if value is not None:
                data = np.full(shape, value, dtype=float)
            elif zero:
                data = np.zeros(shape)
            else:
                bound = gain / np.sqrt(fan_in)
                data = rng.uniform(-bound, bound, size=shape)
            tensors[name] = Tensor(data, requires_grad=True, name=name)

        def dense(prefix, n_in, n_out, gain=1.0):
            param(f"{prefix}.w", (n_in, n_out), n_in, gain)
            param(f"{prefix}.b", (n_out,), n_in, gain)

        def mab(prefix):
            for proj in ("q", "k", "v", "o"):
                dense(f"{prefix}.{proj}", hp.D, hp.D)
            dense(f"{prefix}.ff1", hp.D, hp.FFE)
            dense(f"{prefix}.ff2", hp.FFE, hp.D)
            for ln in ("ln0", "ln1"):
                param(f"{prefix}.{ln}.g", (hp.D,), 1, value=1.0)
                param(f"{prefix}.{ln}.b", (hp.D,), 1, zero=True)

        for branch, channels, kernel in (("imu", 6, hp.alpha), ("dvl", 3, hp.dvl_alpha)):
            param(f"{branch}.pe.w", (hp.D, channels, kernel), channels * kernel)
            param(f"{branch}.pe.b", (hp.D,), channels * kernel)
            for i in range(hp.b):
                mab(f"{branch}.enc{i}")
            param(f"{branch}.pma.seeds", (hp.k, hp.D), hp.D)
            dense(f"{branch}.pma.rff1", hp.D, hp.FFE)
            dense(f"{branch}.pma.rff2", hp.FFE, hp.D)
            mab(f"{branch}.pma.mab")
            for i in range(hp.decoder_depth):
                mab(f"{branch}.dec{i}")

        dense("head.fc1", 2 * hp.k * hp.D, hp.fc_hidden)
        dense("head.fc2", hp.fc_hidden, 3, gain=hp.head_init_gain)

        for key, n in (("imu", 6), ("dvl", 3)):
            tensors[f"norm.{key}.mean"] = Tensor(np.zeros(n), name=f"norm.{key}.mean")
            tensors[f"norm.{key}.std"] = Tensor(np.ones(n), name=f"norm.{key}.std")

        logger.info(f"Initialized ST-BeamsNet with {sum(t.size for _, t in cls(hp, tensors).trainable())} "
                    f"trainable parameters (D={hp.D}, b={hp.b}, h={hp.h}, k={hp.k})")
        return cls(hp, tensors, seed)

    # ── persistence ────────────────────────────────────────────────────────

    def to_document(self, config_hash: Optional[str] = None) -> dict:
        return {
            "format": WEIGHTS_FORMAT,
            "version": WEIGHTS_VERSION,
            "seed": self.seed,
            "config_hash": config_hash,
            "hyperparams": self.hp.to_dict(),
            "tensors": [
                {
                    "name": name,
                    "shape": list(t.shape),
                    "trainable": t.requires_grad,
                    "data": [float(v) for v in t.data.ravel()],
                }
                for name, t in self.tensors.items()
            ],
        }

    def save(self, path: str, config_hash: Optional[str] = None):
        """Write the weights as JSON; floats use shortest round-trip repr."""
        with open(path, "w") as f:
            json.dump(self.to_document(config_hash), f, indent=1)
        logger.info(f"Saved weights to {path}")

    @classmethod
    def from_document(cls, doc: dict) -> "StWeights":
        if doc.get("format") != WEIGHTS_FORMAT:
            raise NavDataError(f"Not a weights document (format={doc.get('format')!r})")
        if doc.get("version") != WEIGHTS_VERSION:
            raise NavDataError(f"Unsupported weights version {doc.get('version')}")
        hp = StHyperParams.from_dict(doc["hyperparams"])
        tensors = {}
        for entry in doc["tensors"]:
            data = np.array(entry["data"], dtype=np.float64)
            shape = tuple(entry["shape"])
            if data.size != int(np.prod(shape)):
                raise NavDataError(f"Tensor {entry['name']} has {data.size} values for shape {shape}")
            tensors[entry["name"]] = Tensor(data.reshape(shape), requires_grad=entry["trainable"],
                                            name=entry["name"])
        reference = cls.init(hp, 0).tensors
        for name, t in reference.items():
            if name not in tensors or tensors[name].shape != t.shape:
                raise NavDataError(f"Weights document is missing or mis-shapes tensor {name}")
        return cls(hp, tensors, doc.get("seed", 0))

    @classmethod
    def load(cls, path: str) -> "StWeights":
        try:
            with open(path) as f:
                doc = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise NavDataError(f"Cannot read weights from {path}: {e}") from e
        return cls.from_document(doc)


# ── building blocks ─────────────────────────────────────────────────────────

def _dense(x: Tensor, w: StWeights, prefix: str) -> Tensor:
    return ad.linear(x, w[f"{prefix}.w"], w[f"{prefix}.b"])


def _rff(x: Tensor, w: StWeights, first: str, second: str) -> Tensor:
    return _dense(ad.relu(_dense(x, w, first)), w, second)


def _split_heads(x: Tensor, h: int) -> Tensor:
    B, P, D = x.shape
    return ad.transpose(ad.reshape(x, (B, P, h, D // h)), (0, 2, 1, 3))


def _merge_heads(x: Tensor) -> Tensor:
    B, h, P, dh = x.shape
    return ad.reshape(ad.transpose(x, (0, 2, 1, 3)), (B, P, h * dh))


def multihead_attention(X: Tensor, Y: Tensor, w: StWeights, prefix: str, h: int) -> Tensor:
    """Scaled dot-product attention of queries from X over keys/values from Y."""
    D = X.shape[-1]
    Q = _split_heads(_dense(X, w, f"{prefix}.q"), h)
    K = _split_heads(_dense(Y, w, f"{prefix}.k"), h)
    V = _split_heads(_dense(Y, w, f"{prefix}.v"), h)
    scores = ad.scale(ad.matmul(Q, ad.swap_last(K)), 1.0 / np.sqrt(D // h))
    A = ad.softmax(scores, axis=-1)
    return _dense(_merge_heads(ad.matmul(A, V)), w, f"{prefix}.o")


def mab(X: Tensor, Y: Tensor, w: StWeights, prefix: str, hp: StHyperParams) -> Tensor:
    """MAB(X, Y) = LN(H + rFF(H)) with H = LN(X + Multihead(X, Y, Y))."""
    H = ad.layer_norm(ad.add(X, multihead_attention(X, Y, w, prefix, hp.h)),
                      w[f"{prefix}.ln0.g"], w[f"{prefix}.ln0.b"])
    return ad.layer_norm(ad.add(H, _rff(H, w, f"{prefix}.ff1", f"{prefix}.ff2")),
                         w[f"{prefix}.ln1.g"], w[f"{prefix}.ln1.b"])


def _batched(fn):
    """Run a [B, P, D] block on an unbatched [P, D] input as well."""
    def wrapper(X: Tensor, *args, **kwargs):
        if X.data.ndim == 2:
            out = fn(ad.reshape(X, (1,) + X.shape), *args, **kwargs)
            return ad.reshape(out, out.shape[1:])
        return fn(X, *args, **kwargs)
    wrapper.__doc__ = fn.__doc__
    wrapper.__name__ = fn.__name__
    return wrapper


@_batched
def sab(X: Tensor, w: StWeights, prefix: str, hp: StHyperParams) -> Tensor:
    """Set Attention Block, SAB(X) = MAB(X, X); permutation equivariant."""
    return mab(X, X, w, prefix, hp)


@_batched
def pma(Z: Tensor, w: StWeights, prefix: str, hp: StHyperParams) -> Tensor:
    """Pooling by Multihead Attention: k seed queries attend over rFF(Z)."""
    B = Z.shape[0]
    S = ad.expand_batch(w[f"{prefix}.seeds"], B)
    return mab(S, _rff(Z, w, f"{prefix}.rff1", f"{prefix}.rff2"), w, f"{prefix}.mab", hp)


def patch_embed(x: Tensor, w: StWeights, branch: str, hp: StHyperParams) -> Tensor:
    """
    Strided 1-D convolution over time, [B, L, C] -> [B, P, D].

    The IMU branch uses kernel alpha / stride beta; the DVL branch uses
    dvl_alpha / dvl_beta. Patch size gamma = 1 means one time row per
    convolution column.
    """
    stride = hp.beta if branch == "imu" else hp.dvl_beta
    kernel = w[f"{branch}.pe.w"].shape[-1]
    if x.shape[-2] < kernel:
        raise NavDataError(f"{branch} input has {x.shape[-2]} rows, shorter than the kernel ({kernel})")
    unbatched = x.data.ndim == 2
    if unbatched:
        x = ad.reshape(x, (1,) + x.shape)
    out = ad.conv1d(ad.transpose(x, (0, 2, 1)), w[f"{branch}.pe.w"], stride, w[f"{branch}.pe.b"])
    out = ad.transpose(out, (0, 2, 1))
    return ad.reshape(out, out.shape[1:]) if unbatched else out


def encode_patches(patches: Tensor, w: StWeights, branch: str, hp: StHyperParams) -> Tensor:
    """Encoder SABs -> PMA -> decoder SABs; returns [B, k, D]."""
    Z = patches
    for i in range(hp.b):
        Z = sab(Z, w, f"{branch}.enc{i}", hp)
    Z = pma(Z, w, f"{branch}.pma", hp)
    for i in range(hp.decoder_depth):
        Z = sab(Z, w, f"{branch}.dec{i}", hp)
    return Z


def _normalized(arr: np.ndarray, w: StWeights, key: str) -> Tensor:
    return Tensor((arr - w[f"norm.{key}.mean"].data) / w[f"norm.{key}.std"].data)


def forward_batch(batch: WindowBatch, w: StWeights, hp: StHyperParams, training: bool = False,
                  rng: Optional[np.random.Generator] = None) -> Tensor:
    """Velocity predictions [B, 3] for a batch of windows."""
    B = len(batch)
    features = []
    for branch, arr in (("imu", batch.imu), ("dvl", batch.dvl)):
        Z = encode_patches(patch_embed(_normalized(arr, w, branch), w, branch, hp), w, branch, hp)
        features.append(ad.reshape(Z, (B, hp.k * hp.D)))
    hidden = _dense(ad.concat(features, axis=-1), w, "head.fc1")
    hidden = ad.tanh(ad.dropout(hidden, hp.dropout_p, training, rng))
    out = _dense(hidden, w, "head.fc2")
    if hp.residual_head:
        out = ad.add(out, Tensor(batch.dvl[:, -1, :]))
    return out


def forward(window: TrainingWindow, w: StWeights, hp: Optional[StHyperParams] = None,
            training: bool = False, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Predicted body velocity (3,) for a single window."""
    hp = hp or w.hp
    with ad.no_grad():
        out = forward_batch(stack_windows([window]), w, hp, training, rng)
    return out.data[0].copy()


# ── training ───────────────────────────────────────────────────────────────

@dataclass
class TrainingResult:
    weights: StWeights
    history: List[dict] = field(default_factory=list)
    best_epoch: int = 0
    train_indices: np.ndarray = None
    val_indices: np.ndarray = None
    execution_log: List[str] = field(default_factory=list)

    @property
    def best_val_loss(self) -> float:
        return min(row["val_loss"] for row in self.history)


def split_indices(n: int, seed: int, val_fraction: float = 0.25) -> Tuple[np.ndarray, np.ndarray]:
    """Shuffled train/validation split (75:25 by default) with disjoint index sets."""
    if n == 0:
        raise NavDataError("Cannot split an empty dataset")
    perm = np.random.default_rng(seed).permutation(n)
    n_val = int(round(n * val_fraction))
    if n > 1:
        n_val = min(max(n_val, 1), n - 1)
    else:
        n_val = 0
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def evaluate_loss(w: StWeights, windows: Union[Sequence[TrainingWindow], WindowBatch],
                  batch_size: Optional[int] = None) -> float:
    """Mean squared error of the network over windows (inference mode)."""
    batch = windows if isinstance(windows, WindowBatch) else stack_windows(windows)
    batch_size = batch_size or w.hp.batch_size
    sq_sum = 0.0
    with ad.no_grad():
        for lo in range(0, len(batch), batch_size):
            sub = WindowBatch(batch.dvl[lo:lo + batch_size], batch.imu[lo:lo + batch_size],
                              batch.target[lo:lo + batch_size])
            pred = forward_batch(sub, w, w.hp, training=False)
            sq_sum += float(np.sum((pred.data - sub.target) ** 2))
    return sq_sum / batch.target.size


def persistence_loss(windows: Union[Sequence[TrainingWindow], WindowBatch]) -> float:
    """MSE of the 'repeat the last DVL velocity' predictor."""
    batch = windows if isinstance(windows, WindowBatch) else stack_windows(windows)
    return float(np.mean((batch.dvl[:, -1, :] - batch.target) ** 2))


def train(dataset: Sequence[TrainingWindow], hp: StHyperParams, seed: int,
          progress_callback: Optional[Callable[[str, str, int, int], None]] = None) -> TrainingResult:
    """
    Fit the network with MSE loss and momentum gradient descent.

    The dataset is shuffled and split 75:25; each epoch iterates shuffled
    minibatches of hp.batch_size and scores the validation split. The weights
    of the epoch with the lowest validation loss are returned.

    Args:
        dataset: Training windows
        hp: Hyperparameters
        seed: Seed for split, initialization, shuffling and dropout
        progress_callback: Optional (epoch_id, status, index, total) callback

    Returns:
        TrainingResult with the selected weights and per-epoch history
    """
    if not dataset:
        raise NavDataError("Training dataset is empty")

    all_windows = stack_windows(dataset)
    train_idx, val_idx = split_indices(len(all_windows), seed)
    if len(val_idx) == 0:
        val_idx = train_idx
    train_set = WindowBatch(all_windows.dvl[train_idx], all_windows.imu[train_idx], all_windows.target[train_idx])
    val_set = WindowBatch(all_windows.dvl[val_idx], all_windows.imu[val_idx], all_windows.target[val_idx])

    seeds = np.random.SeedSequence(seed).spawn(2)
    weights = StWeights.init(hp, int(seeds[0].generate_state(1)[0]))
    weights.seed = seed
    weights.set_normalization(train_set)
    rng = np.random.default_rng(seeds[1])

    params = weights.trainable()
    velocity = {name: np.zeros_like(t.data) for name, t in params}
    baseline = persistence_loss(val_set)
    logger.info(f"Training on {len(train_set)} windows, validating on {len(val_set)}; "
                f"persistence baseline val MSE {baseline:.6g}")

    history, execution_log = [], []
    best, best_epoch, best_val = weights.copy(), 0, np.inf
    for epoch in range(1, hp.epochs + 1):
        if progress_callback:
            progress_callback(f"epoch_{epoch}", "running", epoch - 1, hp.epochs)

        order = rng.permutation(len(train_set))
        sq_sum = 0.0
        for lo in range(0, len(order), hp.batch_size):
            idx = order[lo:lo + hp.batch_size]
            batch = WindowBatch(train_set.dvl[idx], train_set.imu[idx], train_set.target[idx])
            weights.zero_grad()
            pred = forward_batch(batch, weights, hp, training=True, rng=rng)
            loss = ad.mse_loss(pred, Tensor(batch.target))
            ad.backward(loss)
            sq_sum += float(loss.data) * batch.target.size
            for name, t in params:
                if t.grad is None:
                    continue
                velocity[name] = hp.momentum * velocity[name] - hp.learning_rate * t.grad
                t.data = t.data + velocity[name]

        train_loss = sq_sum / train_set.target.size
        val_loss = evaluate_loss(weights, val_set)
        history.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss,
                        "persistence_val_loss": baseline})
        if val_loss < best_val:
            best, best_epoch, best_val = weights.copy(), epoch, val_loss
        message = f"Epoch {epoch}/{hp.epochs}: train {train_loss:.6g}, val {val_loss:.6g}"
        logger.info(message)
        execution_log.append(message)

        if progress_callback:
            progress_callback(f"epoch_{epoch}", "completed", epoch - 1, hp.epochs)

    weights.zero_grad()
    logger.info(f"Selected epoch {best_epoch} with validation MSE {best_val:.6g}")
    return TrainingResult(best, history, best_epoch, train_idx, val_idx, execution_log)


# ── outage bridging ────────────────────────────────────────────────────────

def network_predictor(w: StWeights) -> VelocityPredictor:
    """Wrap trained weights as a VelocityPredictor (read-only over the weights)."""
    def predict(dvl_past, imu_past, t):
        return forward(TrainingWindow(dvl_past, imu_past, np.zeros(3), t), w)
    return predict


def imu_window(imu_stream: ImuStream, t_end: float, m: int) -> np.ndarray:
    """The m IMU rows with t in [t_end - m/rate, t_end), stacked [f_b, omega_b]."""
    k_end = int(np.searchsorted(imu_stream.t, t_end - 1e-9, side="left"))
    k_start = k_end - m
    if k_start < 0:
        raise NavDataError(f"Only {k_end} IMU samples precede t={t_end}, need {m}")
    return imu_stream.stacked()[k_start:k_end]


def predict_outage_sequence(past_dvl: Sequence, imu_stream: ImuStream, w: Optional[StWeights],
                            t_init: float, t_duration: float, dvl_rate_hz: float = 1.0,
                            predictor: Optional[VelocityPredictor] = None,
                            hp: Optional[StHyperParams] = None) -> List[DvlMeasurement]:
    """
    Bridge an outage with recursive one-step predictions.

    At every DVL epoch inside [t_init, t_init + t_duration) the network sees
    the n_dvl most recent velocities (real before the outage, then its own
    predictions) and the preceding IMU window.

    Args:
        past_dvl: The last n DVL measurements (or velocity vectors) before t_init
        imu_stream: Complete IMU stream covering the outage
        w: Trained weights (ignored when `predictor` is given)
        t_init: Outage start (s)
        t_duration: Outage length (s)
        dvl_rate_hz: DVL epoch rate
        predictor: Alternative VelocityPredictor
        hp: Hyperparameters (defaults to the weights' own)

    Returns:
        One predicted DvlMeasurement per outage epoch
    """
    if t_duration <= 0:
        return []
    hp = hp or (w.hp if w is not None else StHyperParams.preset("toy"))
    if predictor is None:
        if w is None:
            raise ValueError("Either weights or a predictor are required")
        predictor = network_predictor(w)

    history = [np.asarray(m.body_velocity if isinstance(m, DvlMeasurement) else m, dtype=float)
               for m in past_dvl]
    if len(history) < hp.n_dvl:
        raise NavDataError(f"Outage at t={t_init} has {len(history)} past DVL velocities, need {hp.n_dvl}")
    ring = deque(history[-hp.n_dvl:], maxlen=hp.n_dvl)

    n_epochs = int(round(t_duration * dvl_rate_hz))
    out = []
    for j in range(n_epochs):
        t_j = t_init + j / dvl_rate_hz
        imu_past = imu_window(imu_stream, t_j, hp.m_imu)
        v = np.asarray(predictor(np.stack(ring), imu_past, t_j), dtype=float)
        ring.append(v)
        out.append(DvlMeasurement(t=float(t_j), body_velocity=v, beams=None, valid=True, predicted=True))
    return out
