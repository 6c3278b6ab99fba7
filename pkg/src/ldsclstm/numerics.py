"""Dense float64 kernels, parameters, Adam, dropout, finite differences and checkpoints.

Matrices are 2-D C-contiguous ``float64`` numpy arrays (row-major). Bias
vectors are stored as ``1 x n`` rows so that they broadcast over a batch.
"""

import json
import struct

import numpy as np

from ldsclstm.errors import NonFiniteGradient, ShapeMismatch

DTYPE = np.float64


def as_matrix(data, rows=None, cols=None):
    a = np.array(data, dtype=DTYPE)
    if a.ndim == 1:
        a = a.reshape(1, -1) if rows is None else a.reshape(rows, cols)
    if a.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return np.ascontiguousarray(a)


def matmul(a, b):
    if a.shape[-1] != b.shape[0]:
        raise ShapeMismatch(f"matmul {a.shape} @ {b.shape}")
    return a @ b


def add(a, b):
    if a.shape != b.shape:
        raise ShapeMismatch(f"add {a.shape} + {b.shape}")
    return a + b


def hadamard(a, b):
    if a.shape != b.shape:
        raise ShapeMismatch(f"hadamard {a.shape} * {b.shape}")
    return a * b


def sigmoid(x):
    # exp(-|x|) never overflows
    x = np.asarray(x, dtype=DTYPE)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def tanh(x):
    return np.tanh(np.asarray(x, dtype=DTYPE))


def softmax(x, axis=-1):
    x = np.asarray(x, dtype=DTYPE)
    if x.size == 0 or x.shape[axis] == 0:
        raise ShapeMismatch("softmax of an empty vector")
    z = np.exp(x - x.max(axis=axis, keepdims=True))
    return z / z.sum(axis=axis, keepdims=True)


def log_softmax(x, axis=-1):
    x = np.asarray(x, dtype=DTYPE)
    s = x - x.max(axis=axis, keepdims=True)
    return s - np.log(np.exp(s).sum(axis=axis, keepdims=True))


class Rng:
    """Counter-based (Philox) random stream; ``split`` derives independent children."""

    def __init__(self, seed=0, _seq=None):
        self.seq = _seq if _seq is not None else np.random.SeedSequence(seed)
        self.gen = np.random.Generator(np.random.Philox(self.seq))

    def split(self, n=None):
        if n is None:
            return Rng(_seq=self.seq.spawn(1)[0])
        return [Rng(_seq=s) for s in self.seq.spawn(n)]

    def uniform(self, low, high, shape):
        return self.gen.uniform(low, high, size=shape)

    def random(self, shape=None):
        return self.gen.random(shape)

    def integers(self, high, size=None):
        return self.gen.integers(high, size=size)

    def permutation(self, n):
        return self.gen.permutation(n)

    def normal(self, shape, scale=1.0):
        return self.gen.normal(0.0, scale, size=shape)


class Parameter:
    def __init__(self, name, value):
        self.name = name
        self.value = np.ascontiguousarray(np.array(value, dtype=DTYPE))
        if self.value.ndim != 2:
            raise ShapeMismatch(f"{name}: parameters are 2-D, got {self.value.shape}")
        self.grad = np.zeros_like(self.value)
        self.adam_m = np.zeros_like(self.value)
        self.adam_v = np.zeros_like(self.value)
        self.step_count = 0

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self):
        self.grad.fill(0.0)

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.shape})"


class ParamSet(dict):
    """Ordered name -> Parameter mapping."""

    def add(self, name, value):
        self[name] = Parameter(name, value)
        return self[name]

    def values_dict(self):
        return {k: p.value for k, p in self.items()}

    def zero_grad(self):
        for p in self.values():
            p.zero_grad()

    def scale_grad(self, factor):
        for p in self.values():
            p.grad *= factor

    def copy(self):
        out = ParamSet()
        for k, p in self.items():
            q = Parameter(k, p.value.copy())
            q.grad = p.grad.copy()
            q.adam_m, q.adam_v, q.step_count = p.adam_m.copy(), p.adam_v.copy(), p.step_count
            out[k] = q
        return out


def init_uniform(rng, shape, scale=0.08):
    return rng.uniform(-scale, scale, shape)


def adam_step(params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """Bias-corrected Adam update in place. Gradients are left for the caller to zero."""
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    params = list(params.values()) if isinstance(params, dict) else list(params)
    for p in params:
        if not np.all(np.isfinite(p.grad)):
            raise NonFiniteGradient(p.name)
    for p in params:
        p.step_count += 1
        t = p.step_count
        p.adam_m *= beta1
        p.adam_m += (1.0 - beta1) * p.grad
        p.adam_v *= beta2
        p.adam_v += (1.0 - beta2) * p.grad * p.grad
        m_hat = p.adam_m / (1.0 - beta1 ** t)
        v_hat = p.adam_v / (1.0 - beta2 ** t)
        p.value -= lr * m_hat / (np.sqrt(v_hat) + eps)


def dropout_mask(rng, shape, p_drop=0.5):
    """Inverted-dropout mask: 0 with probability p_drop, else 1/(1-p_drop)."""
    if not 0 <= p_drop < 1:
        raise ValueError("p_drop must lie in [0, 1)")
    if p_drop == 0:
        return np.ones(shape, dtype=DTYPE)
    keep = rng.random(shape) >= p_drop
    return keep.astype(DTYPE) / (1.0 - p_drop)


def finite_diff_grad(loss_fn, params, h=1e-5, names=None):
    """Central-difference gradient of ``loss_fn()`` w.r.t. each parameter value.

    ``loss_fn`` is called with no arguments and must read the parameters in
    place; every coordinate is perturbed and restored.
    """
    grads = {}
    for name, p in params.items():
        if names is not None and name not in names:
            continue
        value = p.value if isinstance(p, Parameter) else p
        g = np.zeros_like(value)
        it = np.nditer(value, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = value[idx]
            value[idx] = orig + h
            plus = loss_fn()
            value[idx] = orig - h
            minus = loss_fn()
            value[idx] = orig
            g[idx] = (plus - minus) / (2.0 * h)
        grads[name] = g
    return grads


def max_relative_error(analytic, numeric):
    """max |a - n| / max(1, |a|) over all coordinates of all named arrays."""
    worst = 0.0
    for name, n in numeric.items():
        a = analytic[name]
        err = np.abs(a - n) / np.maximum(1.0, np.abs(a))
        worst = max(worst, float(err.max(initial=0.0)))
    return worst


# --- checkpoint file ----------------------------------------------------------
#
#   magic     9 bytes  b"LDSCLSTM1"
#   meta_len  uint32   little-endian
#   meta      meta_len bytes of UTF-8 JSON (config, vocabulary, inventory)
#   count     uint32   number of parameter records
#   records   count x { name_len uint32, name UTF-8, rows uint32, cols uint32,
#                       rows*cols float64 little-endian, row-major }

MAGIC = b"LDSCLSTM1"


def save_checkpoint(path, params, meta=None):
    meta_bytes = json.dumps(meta or {}, sort_keys=True, ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(meta_bytes)))
        fh.write(meta_bytes)
        fh.write(struct.pack("<I", len(params)))
        for name, p in params.items():
            value = p.value if isinstance(p, Parameter) else np.asarray(p, dtype=DTYPE)
            raw = name.encode("utf-8")
            rows, cols = value.shape
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<II", rows, cols))
            fh.write(np.ascontiguousarray(value, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Return ``(ParamSet, meta)``."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(MAGIC):
        raise ValueError(f"{path}: not a checkpoint (bad magic)")
    pos = len(MAGIC)

    def take(n):
        nonlocal pos
        if pos + n > len(data):
            raise ValueError(f"{path}: truncated checkpoint")
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    (meta_len,) = struct.unpack("<I", take(4))
    meta = json.loads(take(meta_len).decode("utf-8"))
    (count,) = struct.unpack("<I", take(4))
    params = ParamSet()
    for _ in range(count):
        (name_len,) = struct.unpack("<I", take(4))
        name = take(name_len).decode("utf-8")
        rows, cols = struct.unpack("<II", take(8))
        values = np.frombuffer(take(8 * rows * cols), dtype="<f8").astype(DTYPE)
        params.add(name, values.reshape(rows, cols))
    if pos != len(data):
        raise ValueError(f"{path}: trailing bytes after parameter records")
    return params, meta
