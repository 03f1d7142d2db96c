"""From-scratch CNN: tensor kernels, layers, backprop, SGD training."""

from .gradcheck import gradient_check, scaled_error
from .layers import (
    batchnorm_backward,
    batchnorm_forward,
    conv2d_backward,
    conv2d_forward,
    dense_backward,
    dense_forward,
    dropout_backward,
    dropout_forward,
    maxpool2x2_backward,
    maxpool2x2_forward,
    relu_backward,
    relu_forward,
    softmax,
    softmax_cross_entropy,
    softmax_cross_entropy_batch,
)
from .network import (
    N_CLASSES,
    Network,
    TrainConfig,
    TrainTrace,
    build_network,
    conv_stage_dims,
    image_to_tensor,
    nn_predict,
    predict_batch,
    train_network,
)

__all__ = [
    "N_CLASSES",
    "Network",
    "TrainConfig",
    "TrainTrace",
    "batchnorm_backward",
    "batchnorm_forward",
    "build_network",
    "conv2d_backward",
    "conv2d_forward",
    "conv_stage_dims",
    "dense_backward",
    "dense_forward",
    "dropout_backward",
    "dropout_forward",
    "gradient_check",
    "image_to_tensor",
    "maxpool2x2_backward",
    "maxpool2x2_forward",
    "nn_predict",
    "predict_batch",
    "relu_backward",
    "relu_forward",
    "scaled_error",
    "softmax",
    "softmax_cross_entropy",
    "softmax_cross_entropy_batch",
    "train_network",
]
