"""From-scratch tensor ops: valid conv, ReLU, 2x2 max-pool, batch norm,
inverted dropout, dense, and softmax cross-entropy, each with an exact
backward pass.

Spatial ops accept a single (C, H, W) sample or an (N, C, H, W) batch and
return the matching rank. Convolution is stride-1 cross-correlation with no
padding, computed as k^2 shifted GEMMs so no im2col buffer is materialized.
All math is float64.
"""

import numpy as np


def _lift4(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3:
        return x[None], True
    if x.ndim == 4:
        return x, False
    raise ValueError(f"expected (C,H,W) or (N,C,H,W), got shape {x.shape}")


def _lift2(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[None], True
    if x.ndim == 2:
        return x, False
    raise ValueError(f"expected (D,) or (N,D), got shape {x.shape}")


def conv2d_forward(x, kernels, bias):
    """out[o,i,j] = bias[o] + sum_{c,u,v} x[c,i+u,j+v] * kernels[o,c,u,v]."""
    x4, squeeze = _lift4(x)
    kernels = np.asarray(kernels, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    n, c, h, w = x4.shape
    o, ci, k, _ = kernels.shape
    if ci != c:
        raise ValueError(f"kernel expects {ci} input channels, input has {c}")
    if k > h or k > w:
        raise ValueError(f"kernel size {k} exceeds input {h}x{w}")
    ho, wo = h - k + 1, w - k + 1
    acc = np.zeros((n * ho * wo, o))
    for u in range(k):
        for v in range(k):
            xs = x4[:, :, u : u + ho, v : v + wo].transpose(0, 2, 3, 1).reshape(-1, c)
            acc += xs @ kernels[:, :, u, v].T
    out = acc.reshape(n, ho, wo, o).transpose(0, 3, 1, 2) + bias[None, :, None, None]
    return out[0] if squeeze else out


def conv2d_backward(x, kernels, grad_out):
    """Gradients of conv2d_forward w.r.t. input, kernels and bias."""
    x4, squeeze = _lift4(x)
    g4, _ = _lift4(grad_out)
    kernels = np.asarray(kernels, dtype=np.float64)
    n, c, h, w = x4.shape
    o, _, k, _ = kernels.shape
    ho, wo = h - k + 1, w - k + 1
    if g4.shape != (n, o, ho, wo):
        raise ValueError(f"grad_out shape {g4.shape} != expected {(n, o, ho, wo)}")
    g_flat = g4.transpose(0, 2, 3, 1).reshape(-1, o)
    grad_k = np.empty_like(kernels)
    grad_x = np.zeros_like(x4)
    for u in range(k):
        for v in range(k):
            xs = x4[:, :, u : u + ho, v : v + wo].transpose(0, 2, 3, 1).reshape(-1, c)
            grad_k[:, :, u, v] = g_flat.T @ xs
            t = (g_flat @ kernels[:, :, u, v]).reshape(n, ho, wo, c).transpose(0, 3, 1, 2)
            grad_x[:, :, u : u + ho, v : v + wo] += t
    grad_b = g4.sum(axis=(0, 2, 3))
    return (grad_x[0] if squeeze else grad_x), grad_k, grad_b


def relu_forward(x):
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def relu_backward(x, grad_out):
    return np.asarray(grad_out) * (np.asarray(x) > 0)


def _pool_windows(x4):
    n, c, h, w = x4.shape
    ho, wo = h // 2, w // 2
    r = x4[:, :, : ho * 2, : wo * 2].reshape(n, c, ho, 2, wo, 2)
    return r.transpose(0, 1, 2, 4, 3, 5).reshape(n, c, ho, wo, 4), ho, wo


def maxpool2x2_forward(x):
    """2x2 max pooling with stride 2; an odd trailing row/column is dropped."""
    x4, squeeze = _lift4(x)
    if x4.shape[2] < 2 or x4.shape[3] < 2:
        raise ValueError(f"max-pool needs spatial dims >= 2, got {x4.shape[2:]}")
    windows, _, _ = _pool_windows(x4)
    out = windows.max(axis=-1)
    return out[0] if squeeze else out


def maxpool2x2_backward(x, grad_out):
    """Routes each gradient to its window's argmax (first position on ties)."""
    x4, squeeze = _lift4(x)
    g4, _ = _lift4(grad_out)
    windows, ho, wo = _pool_windows(x4)
    n, c = x4.shape[:2]
    if g4.shape != (n, c, ho, wo):
        raise ValueError(f"grad_out shape {g4.shape} != expected {(n, c, ho, wo)}")
    idx = windows.argmax(axis=-1)
    scattered = np.zeros_like(windows)
    np.put_along_axis(scattered, idx[..., None], g4[..., None], axis=-1)
    block = scattered.reshape(n, c, ho, wo, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    grad_x = np.zeros_like(x4)
    grad_x[:, :, : ho * 2, : wo * 2] = block.reshape(n, c, ho * 2, wo * 2)
    return grad_x[0] if squeeze else grad_x


def dense_forward(x, weights, bias):
    x2, squeeze = _lift2(x)
    if x2.shape[1] != weights.shape[0]:
        raise ValueError(f"dense expects {weights.shape[0]} features, got {x2.shape[1]}")
    out = x2 @ weights + bias
    return out[0] if squeeze else out


def dense_backward(x, weights, grad_out):
    x2, squeeze = _lift2(x)
    g2, _ = _lift2(grad_out)
    grad_w = x2.T @ g2
    grad_b = g2.sum(axis=0)
    grad_x = g2 @ weights.T
    return (grad_x[0] if squeeze else grad_x), grad_w, grad_b


def batchnorm_forward(x, gamma, beta, mode, running_mean, running_var,
                      eps=1e-5, momentum=0.9):
    """Per-channel batch normalization over an (N, C, H, W) batch.

    Train mode normalizes by the batch statistics and folds them into the
    running buffers in place (running = momentum*running + (1-momentum)*batch,
    biased variance). Eval mode normalizes by the running buffers.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 4:
        raise ValueError("batch norm expects an (N, C, H, W) batch")
    if mode == "train":
        if x.shape[0] < 2:
            raise ValueError(f"train-mode batch norm needs batch size >= 2, got {x.shape[0]}")
        mean = x.mean(axis=(0, 2, 3))
        var = x.var(axis=(0, 2, 3))
        running_mean *= momentum
        running_mean += (1.0 - momentum) * mean
        running_var *= momentum
        running_var += (1.0 - momentum) * var
    elif mode == "eval":
        mean, var = running_mean, running_var
    else:
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    xhat = (x - mean[None, :, None, None]) / np.sqrt(var + eps)[None, :, None, None]
    return gamma[None, :, None, None] * xhat + beta[None, :, None, None]


def batchnorm_backward(x, gamma, grad_out, eps=1e-5):
    """Train-mode gradients through the batch mean and variance."""
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(grad_out, dtype=np.float64)
    m = x.shape[0] * x.shape[2] * x.shape[3]
    mean = x.mean(axis=(0, 2, 3))
    var = x.var(axis=(0, 2, 3))
    ivar = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean[None, :, None, None]) * ivar[None, :, None, None]
    grad_gamma = (g * xhat).sum(axis=(0, 2, 3))
    grad_beta = g.sum(axis=(0, 2, 3))
    gx_hat = g * gamma[None, :, None, None]
    s1 = gx_hat.sum(axis=(0, 2, 3))
    s2 = (gx_hat * xhat).sum(axis=(0, 2, 3))
    grad_x = (ivar[None, :, None, None] / m) * (
        m * gx_hat - s1[None, :, None, None] - xhat * s2[None, :, None, None]
    )
    return grad_x, grad_gamma, grad_beta


def dropout_forward(x, rate, mode, rng=None):
    """Inverted dropout; returns (out, mask). Eval mode is the identity."""
    x = np.asarray(x, dtype=np.float64)
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if mode == "eval" or rate == 0.0:
        return x, None
    if mode != "train":
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    mask = rng.random(x.shape) >= rate
    return x * mask / (1.0 - rate), mask


def dropout_backward(grad_out, mask, rate):
    if mask is None:
        return np.asarray(grad_out, dtype=np.float64)
    return np.asarray(grad_out) * mask / (1.0 - rate)


def softmax(logits):
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits, target: int):
    """Stabilized loss -log softmax(logits)[target] and its logit gradient."""
    logits = np.asarray(logits, dtype=np.float64)
    if not 0 <= target < logits.shape[-1]:
        raise ValueError(f"target {target} out of range for {logits.shape[-1]} classes")
    p = softmax(logits)
    z = logits - logits.max()
    loss = float(np.log(np.exp(z).sum()) - z[target])
    grad = p.copy()
    grad[target] -= 1.0
    return loss, grad


def softmax_cross_entropy_batch(logits, targets):
    """Mean cross-entropy over an (N, K) batch; grad is of the mean loss."""
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.int64)
    n, k = logits.shape
    if targets.min() < 0 or targets.max() >= k:
        raise ValueError("targets out of range")
    z = logits - logits.max(axis=1, keepdims=True)
    log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = float(-log_probs[np.arange(n), targets].mean())
    grad = np.exp(log_probs)
    grad[np.arange(n), targets] -= 1.0
    return loss, grad / n
