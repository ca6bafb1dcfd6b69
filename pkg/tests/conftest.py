import struct

import numpy as np
import pytest

from nsbandits import nnet


def finite_difference_gradient(params, data, lam, h=1e-5):
    """Central-difference gradient of the loss, component by component."""
    grads = {}
    for name, p in params.values.items():
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + h
            lp = nnet.loss(params, data, lam)
            p[idx] = orig - h
            lm = nnet.loss(params, data, lam)
            p[idx] = orig
            g[idx] = (lp - lm) / (2 * h)
        grads[name] = g
    return grads


def max_relative_error(grads, oracle):
    # The central-difference oracle carries ~1e-10 absolute noise, so tiny
    # components are held to an absolute tolerance instead: flooring the
    # denominator at 1e-3 makes rel < 1e-6 equivalent to abs < 1e-9 there.
    worst = 0.0
    for name in grads:
        diff = np.abs(grads[name] - oracle[name])
        scale = np.maximum(np.maximum(np.abs(grads[name]), np.abs(oracle[name])), 1e-3)
        worst = max(worst, float(np.max(diff / scale)))
    return worst


def write_idx_images(path, images):
    """Write a uint8 image array (n, rows, cols) in big-endian IDX format."""
    n, rows, cols = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 2051, n, rows, cols))
        f.write(np.asarray(images, dtype=np.uint8).tobytes())


def write_idx_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 2049, len(labels)))
        f.write(np.asarray(labels, dtype=np.uint8).tobytes())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
