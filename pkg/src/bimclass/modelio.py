"""Binary artifact formats.

Model container ("BIMC1"): magic b"BIMC1\\0", u32 version, u32 kind tag
(1 = svm-linear-ovr, 2 = cnn), a length-prefixed JSON spec block, then
length-prefixed weight blobs of little-endian float64 (count prefix, u32).
CNN blobs follow topology order: per conv stage kernels, bias [, batch-norm
gamma, beta, running mean, running variance], then dense weights, bias.

Descriptor dump ("HOGD"): 16-byte header (magic "HOGD", u32 version,
u32 length, u32 n_bins) followed by little-endian float32 values.
"""

import io
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CorruptDataError, ModelKindMismatchError, UnsupportedFormatError
from .hog import HogDescriptor, HogParams
from .nn import Network, build_network
from .nn.network import BatchNormLayer, ConvLayer, DenseLayer
from .search import HyperParams
from .svm import LinearSvmModel

MAGIC = b"BIMC1\0"
VERSION = 1
KIND_TAGS = {"svm-linear-ovr": 1, "cnn": 2}
_TAG_KINDS = {v: k for k, v in KIND_TAGS.items()}


def _write_blob(fh, arr: np.ndarray) -> None:
    flat = np.ascontiguousarray(arr, dtype="<f8").reshape(-1)
    fh.write(struct.pack("<I", flat.size))
    fh.write(flat.tobytes())


def _read_blob(fh, shape) -> np.ndarray:
    raw = fh.read(4)
    if len(raw) < 4:
        raise CorruptDataError("truncated model file (blob header)")
    (count,) = struct.unpack("<I", raw)
    expected = int(np.prod(shape))
    if count != expected:
        raise CorruptDataError(f"blob holds {count} values, expected {expected}")
    data = fh.read(8 * count)
    if len(data) < 8 * count:
        raise CorruptDataError("truncated model file (blob data)")
    return np.frombuffer(data, dtype="<f8").reshape(shape).astype(np.float64)


def _cnn_param_arrays(net: Network):
    """(shape provider, value) pairs in the container's topology order."""
    out = []
    for layer in net.layers:
        if isinstance(layer, ConvLayer):
            out.append(layer.kernels.value)
            out.append(layer.bias.value)
        elif isinstance(layer, BatchNormLayer):
            out.extend([layer.gamma.value, layer.beta.value,
                        layer.running_mean, layer.running_var])
        elif isinstance(layer, DenseLayer):
            out.append(layer.weights.value)
            out.append(layer.bias.value)
    return out


@dataclass
class SvmBundle:
    model: LinearSvmModel
    image_size: int
    hog_params: HogParams


def save_svm_model(path, model: LinearSvmModel, image_size: int,
                   hog_params: HogParams = HogParams()) -> None:
    spec = {
        "kind": "svm-linear-ovr",
        "n_classes": model.n_classes,
        "n_features": int(model.weights.shape[1]),
        "lambda": model.lam,
        "epochs": model.epochs,
        "seed": model.seed,
        "image_size": image_size,
        "hog": {
            "cell_size": hog_params.cell_size,
            "block_size": hog_params.block_size,
            "block_stride": hog_params.block_stride,
            "n_bins": hog_params.n_bins,
        },
    }
    buf = io.BytesIO()
    _write_header(buf, "svm-linear-ovr", spec)
    _write_blob(buf, model.weights)
    _write_blob(buf, model.biases)
    Path(path).write_bytes(buf.getvalue())


def save_cnn_model(path, net: Network) -> None:
    spec = {
        "kind": "cnn",
        "input_shape": list(net.input_shape),
        "hyperparams": net.hp.to_dict(),
    }
    buf = io.BytesIO()
    _write_header(buf, "cnn", spec)
    for arr in _cnn_param_arrays(net):
        _write_blob(buf, arr)
    Path(path).write_bytes(buf.getvalue())


def _write_header(fh, kind: str, spec: dict) -> None:
    fh.write(MAGIC)
    fh.write(struct.pack("<II", VERSION, KIND_TAGS[kind]))
    blob = json.dumps(spec, sort_keys=True).encode("utf-8")
    fh.write(struct.pack("<I", len(blob)))
    fh.write(blob)


def load_model(path, expect_kind: str | None = None):
    """Load a model container; returns SvmBundle or Network.

    expect_kind ("svm-linear-ovr"/"svm" or "cnn") makes a mismatching file an
    error instead of a surprise.
    """
    raw = Path(path).read_bytes()
    fh = io.BytesIO(raw)
    if fh.read(len(MAGIC)) != MAGIC:
        raise UnsupportedFormatError(f"{path}: not a BIMC1 model container")
    header = fh.read(8)
    if len(header) < 8:
        raise CorruptDataError("truncated model header")
    version, tag = struct.unpack("<II", header)
    if version != VERSION:
        raise UnsupportedFormatError(f"unsupported container version {version}")
    if tag not in _TAG_KINDS:
        raise CorruptDataError(f"unknown model kind tag {tag}")
    kind = _TAG_KINDS[tag]
    if expect_kind is not None:
        want = "svm-linear-ovr" if expect_kind == "svm" else expect_kind
        if kind != want:
            raise ModelKindMismatchError(f"{path} holds a {kind} model, expected {want}")
    (spec_len,) = struct.unpack("<I", fh.read(4))
    try:
        spec = json.loads(fh.read(spec_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptDataError("malformed model spec block") from exc

    if kind == "svm-linear-ovr":
        n_classes = int(spec["n_classes"])
        n_features = int(spec["n_features"])
        weights = _read_blob(fh, (n_classes, n_features))
        biases = _read_blob(fh, (n_classes,))
        model = LinearSvmModel(weights, biases, n_classes,
                               float(spec["lambda"]), int(spec["epochs"]), int(spec["seed"]))
        hp = spec["hog"]
        return SvmBundle(model, int(spec["image_size"]),
                         HogParams(cell_size=int(hp["cell_size"]),
                                   block_size=int(hp["block_size"]),
                                   block_stride=int(hp["block_stride"]),
                                   n_bins=int(hp["n_bins"])))

    net = build_network(HyperParams.from_dict(spec["hyperparams"]),
                        tuple(spec["input_shape"]), seed=0)
    for arr in _cnn_param_arrays(net):
        arr[...] = _read_blob(fh, arr.shape)
    return net


HOG_MAGIC = b"HOGD"
HOG_VERSION = 1


def write_hog_dump(path, descriptor: HogDescriptor) -> None:
    buf = io.BytesIO()
    buf.write(HOG_MAGIC)
    buf.write(struct.pack("<III", HOG_VERSION, len(descriptor), descriptor.n_bins))
    buf.write(descriptor.values.astype("<f4").tobytes())
    Path(path).write_bytes(buf.getvalue())


def read_hog_dump(path):
    """Returns (values float32 array, n_bins)."""
    raw = Path(path).read_bytes()
    if raw[:4] != HOG_MAGIC:
        raise UnsupportedFormatError(f"{path}: not a HOGD dump")
    version, length, n_bins = struct.unpack("<III", raw[4:16])
    if version != HOG_VERSION:
        raise UnsupportedFormatError(f"unsupported HOGD version {version}")
    values = np.frombuffer(raw[16:], dtype="<f4")
    if values.size != length:
        raise CorruptDataError(f"HOGD dump holds {values.size} values, header says {length}")
    return values, n_bins
