"""Finite-difference verification of every parameter gradient."""

import numpy as np

from .layers import softmax_cross_entropy_batch
from .network import BatchNormLayer, DropoutLayer, Network
from ..rng import make_rng

# elements where both gradients are below this magnitude are compared by
# absolute difference instead of a ratio
_TINY = 1e-6
_ABS_TOL = 1e-8
_REL_TOL = 1e-4


def scaled_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Max elementwise error, normalized so a 1e-4 threshold applies uniformly.

    Regular elements contribute |a-n| / max(|a|,|n|); near-zero pairs fall
    back to absolute error rescaled by _REL_TOL/_ABS_TOL, so an absolute
    difference at _ABS_TOL maps exactly onto the 1e-4 boundary.
    """
    a = np.abs(analytic)
    n = np.abs(numeric)
    diff = np.abs(analytic - numeric)
    big = np.maximum(a, n)
    tiny = big < _TINY
    err = np.where(tiny, diff * (_REL_TOL / _ABS_TOL), diff / np.where(big == 0, 1.0, big))
    return float(err.max()) if err.size else 0.0


def gradient_check(net: Network, x: np.ndarray, targets, step: float = 1e-5,
                   mask_seed: int = 0) -> float:
    """Compare analytic parameter gradients against central differences.

    Dropout masks are frozen for the duration of the check and batch norm
    runs in train mode on the fixed batch, so the loss is a smooth function
    of the parameters almost everywhere. Returns the max scaled error (see
    scaled_error); <= 1e-4 means every parameter passed.
    """
    targets = np.asarray(targets, dtype=np.int64)
    dropouts = [l for l in net.layers if isinstance(l, DropoutLayer)]
    bns = [l for l in net.layers if isinstance(l, BatchNormLayer)]
    saved_running = [(bn.running_mean.copy(), bn.running_var.copy()) for bn in bns]

    # one probe pass (with a seeded generator) shapes and pins the masks
    net.forward(x, train=True, rng=make_rng(mask_seed, 0xD0))
    for layer in dropouts:
        layer.fixed_mask = layer._mask

    def loss_at_current_params():
        logits = net.forward(x, train=True)
        loss, _ = softmax_cross_entropy_batch(logits, targets)
        return loss

    try:
        logits = net.forward(x, train=True)
        _, grad_logits = softmax_cross_entropy_batch(logits, targets)
        net.zero_grad()
        net.backward(grad_logits)
        worst = 0.0
        for _, param in net.parameters():
            analytic = param.grad.copy()
            numeric = np.empty_like(analytic)
            flat = param.value.reshape(-1)
            num_flat = numeric.reshape(-1)
            for j in range(flat.size):
                orig = flat[j]
                flat[j] = orig + step
                up = loss_at_current_params()
                flat[j] = orig - step
                down = loss_at_current_params()
                flat[j] = orig
                num_flat[j] = (up - down) / (2.0 * step)
            worst = max(worst, scaled_error(analytic, numeric))
    finally:
        for layer in dropouts:
            layer.fixed_mask = None
        for bn, (rm, rv) in zip(bns, saved_running):
            bn.running_mean[...] = rm
            bn.running_var[...] = rv
    return worst
