"""Network assembly and SGD training.

A network is a fixed sequence: for each conv stage Conv -> [BatchNorm] ->
ReLU -> MaxPool2x2, then Flatten -> Dropout -> Dense(3). Weight tensors are
He-uniform initialized (bound sqrt(6/fan_in)), biases zero, batch-norm
gamma 1 / beta 0, drawn in topology order from one seeded generator.
"""

from dataclasses import dataclass, field

import numpy as np

from ..augment import AugmentParams, augment
from ..errors import DatasetError, InvalidArchitectureError
from ..image import Image
from ..rng import make_rng
from . import layers as L

N_CLASSES = 3


class Param:
    __slots__ = ("value", "grad")

    def __init__(self, value):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)


class ConvLayer:
    def __init__(self, in_channels, out_channels, kernel, rng):
        bound = np.sqrt(6.0 / (in_channels * kernel * kernel))
        self.kernels = Param(rng.uniform(-bound, bound, (out_channels, in_channels, kernel, kernel)))
        self.bias = Param(np.zeros(out_channels))
        self._x = None

    def forward(self, x, train, rng=None):
        self._x = x
        return L.conv2d_forward(x, self.kernels.value, self.bias.value)

    def backward(self, grad_out):
        grad_x, gk, gb = L.conv2d_backward(self._x, self.kernels.value, grad_out)
        self.kernels.grad += gk
        self.bias.grad += gb
        return grad_x

    def params(self):
        return [("kernels", self.kernels), ("bias", self.bias)]


class BatchNormLayer:
    def __init__(self, channels, eps=1e-5, momentum=0.9):
        self.gamma = Param(np.ones(channels))
        self.beta = Param(np.zeros(channels))
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self.eps = eps
        self.momentum = momentum
        self._x = None

    def forward(self, x, train, rng=None):
        mode = "train" if train else "eval"
        self._x = x if train else None
        return L.batchnorm_forward(x, self.gamma.value, self.beta.value, mode,
                                   self.running_mean, self.running_var,
                                   self.eps, self.momentum)

    def backward(self, grad_out):
        grad_x, gg, gb = L.batchnorm_backward(self._x, self.gamma.value, grad_out, self.eps)
        self.gamma.grad += gg
        self.beta.grad += gb
        return grad_x

    def params(self):
        return [("gamma", self.gamma), ("beta", self.beta)]


class ReLULayer:
    def __init__(self):
        self._x = None

    def forward(self, x, train, rng=None):
        self._x = x
        return L.relu_forward(x)

    def backward(self, grad_out):
        return L.relu_backward(self._x, grad_out)

    def params(self):
        return []


class MaxPoolLayer:
    def __init__(self):
        self._x = None

    def forward(self, x, train, rng=None):
        self._x = x
        return L.maxpool2x2_forward(x)

    def backward(self, grad_out):
        return L.maxpool2x2_backward(self._x, grad_out)

    def params(self):
        return []


class FlattenLayer:
    def __init__(self):
        self._shape = None

    def forward(self, x, train, rng=None):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad_out):
        return grad_out.reshape(self._shape)

    def params(self):
        return []


class DropoutLayer:
    def __init__(self, rate):
        self.rate = rate
        self.fixed_mask = None  # set by gradient checking to pin the mask
        self._mask = None

    def forward(self, x, train, rng=None):
        if not train or self.rate == 0.0:
            self._mask = None
            return x
        if self.fixed_mask is not None:
            self._mask = self.fixed_mask
            return x * self._mask / (1.0 - self.rate)
        out, self._mask = L.dropout_forward(x, self.rate, "train", rng)
        return out

    def backward(self, grad_out):
        return L.dropout_backward(grad_out, self._mask, self.rate)

    def params(self):
        return []


class DenseLayer:
    def __init__(self, in_features, out_features, rng):
        bound = np.sqrt(6.0 / in_features)
        self.weights = Param(rng.uniform(-bound, bound, (in_features, out_features)))
        self.bias = Param(np.zeros(out_features))
        self._x = None

    def forward(self, x, train, rng=None):
        self._x = x
        return L.dense_forward(x, self.weights.value, self.bias.value)

    def backward(self, grad_out):
        grad_x, gw, gb = L.dense_backward(self._x, self.weights.value, grad_out)
        self.weights.grad += gw
        self.bias.grad += gb
        return grad_x

    def params(self):
        return [("weights", self.weights), ("bias", self.bias)]


class Network:
    """Sequence of layers plus the hyperparameters that shaped it."""

    def __init__(self, hp, input_shape, layers, flatten_len):
        self.hp = hp
        self.input_shape = tuple(input_shape)
        self.layers = layers
        self.flatten_len = flatten_len

    def forward(self, x, train=False, rng=None):
        if x.shape[1:] != self.input_shape:
            raise ValueError(f"input shape {x.shape[1:]} != network input {self.input_shape}")
        for layer in self.layers:
            x = layer.forward(x, train, rng)
        return x

    def backward(self, grad_logits):
        g = grad_logits
        for layer in reversed(self.layers):
            g = layer.backward(g)
        return g

    def parameters(self):
        out = []
        for i, layer in enumerate(self.layers):
            for name, p in layer.params():
                out.append((f"layer{i}.{name}", p))
        return out

    def zero_grad(self):
        for _, p in self.parameters():
            p.grad[...] = 0.0

    def sgd_step(self, lr):
        for _, p in self.parameters():
            p.value -= lr * p.grad

    @property
    def param_count(self) -> int:
        return sum(p.value.size for _, p in self.parameters())


def conv_stage_dims(input_shape, n_layers, kernel):
    """Spatial sizes after each conv and pool; raises if any stage collapses."""
    _, h, w = input_shape
    dims = [(h, w)]
    for i in range(n_layers):
        h, w = h - kernel + 1, w - kernel + 1
        if h < 2 or w < 2:  # conv output must still be poolable
            raise InvalidArchitectureError(
                f"stage {i}: spatial dims collapse to {h}x{w} (kernel {kernel})"
            )
        dims.append((h, w))
        h, w = h // 2, w // 2
        dims.append((h, w))
    return dims


def build_network(hp, input_shape=(3, 224, 224), seed: int = 0) -> Network:
    """Instantiate a network for hyperparameters `hp` with seeded weights."""
    dims = conv_stage_dims(input_shape, hp.n_conv_layers, hp.kernel)
    rng = make_rng(seed)
    layers = []
    in_ch = input_shape[0]
    for _ in range(hp.n_conv_layers):
        layers.append(ConvLayer(in_ch, hp.n_maps, hp.kernel, rng))
        if hp.batchnorm:
            layers.append(BatchNormLayer(hp.n_maps))
        layers.append(ReLULayer())
        layers.append(MaxPoolLayer())
        in_ch = hp.n_maps
    fh, fw = dims[-1]
    flatten_len = in_ch * fh * fw
    layers.append(FlattenLayer())
    layers.append(DropoutLayer(hp.dropout))
    layers.append(DenseLayer(flatten_len, N_CLASSES, rng))
    return Network(hp, input_shape, layers, flatten_len)


@dataclass
class TrainConfig:
    learning_rate: float
    batch_size: int = 32
    epochs: int = 50
    seed: int = 0
    augment: AugmentParams | None = None

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size >= 1 and epochs >= 0 required")


@dataclass
class TrainTrace:
    loss: list[float] = field(default_factory=list)
    accuracy: list[float] = field(default_factory=list)


def image_to_tensor(img: Image) -> np.ndarray:
    """(H, W, C) image to a (3, H, W) tensor; grayscale is replicated."""
    chw = np.moveaxis(img.data, 2, 0)
    if chw.shape[0] == 1:
        chw = np.repeat(chw, 3, axis=0)
    return chw


def train_network(net: Network, images: list[Image], labels, cfg: TrainConfig) -> TrainTrace:
    """Plain SGD on shuffled mini-batches; fully deterministic given cfg.seed.

    Augmentation (when enabled) redraws per sample per epoch from a generator
    keyed by (seed, epoch, sample index), so results do not depend on batch
    scheduling. The trace records train-mode loss and accuracy per epoch.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n = len(images)
    if n == 0:
        raise DatasetError("training set is empty")
    if labels.shape != (n,) or labels.min() < 0 or labels.max() >= N_CLASSES:
        raise DatasetError(f"labels must be {n} class indices below {N_CLASSES}")
    shuffle_rng = make_rng(cfg.seed, 1)
    trace = TrainTrace()
    for epoch in range(cfg.epochs):
        perm = shuffle_rng.permutation(n)
        epoch_loss = 0.0
        correct = 0
        for step in range(0, n, cfg.batch_size):
            batch = perm[step : step + cfg.batch_size]
            xs = []
            for i in batch:
                img = images[int(i)]
                if cfg.augment is not None:
                    img = augment(img, cfg.augment, make_rng(cfg.seed, 2, epoch, int(i)))
                xs.append(image_to_tensor(img))
            x = np.stack(xs)
            y = labels[batch]
            logits = net.forward(x, train=True, rng=make_rng(cfg.seed, 3, epoch, step))
            loss, grad = L.softmax_cross_entropy_batch(logits, y)
            net.zero_grad()
            net.backward(grad)
            net.sgd_step(cfg.learning_rate)
            epoch_loss += loss * len(batch)
            correct += int((logits.argmax(axis=1) == y).sum())
        trace.loss.append(epoch_loss / n)
        trace.accuracy.append(correct / n)
    return trace


def predict_batch(net: Network, images: list[Image]) -> np.ndarray:
    """Eval-mode class predictions for a list of images."""
    x = np.stack([image_to_tensor(img) for img in images])
    logits = net.forward(x, train=False)
    return logits.argmax(axis=1)


def nn_predict(net: Network, img: Image):
    """Eval-mode prediction: (class index, probability vector)."""
    x = image_to_tensor(img)[None]
    logits = net.forward(x, train=False)
    probs = L.softmax(logits[0])
    return int(np.argmax(probs)), probs
