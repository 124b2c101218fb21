"""Dense order-d tensor arithmetic: matricization, n-mode products, Tucker
composition, inner products and norms.

Tensors are plain float64 numpy arrays in C layout. Matricization follows the
fiber-to-column ordering in which earlier non-mode indices vary fastest:
entry T(i_1,...,i_d) lands in row i_mode, column sum_{k != mode} i_k * J_k
with J_k = prod_{l < k, l != mode} n_l (0-based).
"""

import struct

import numpy as np

TNSR_MAGIC = b"TNSR"
TNSR_VERSION = 1


def as_tensor(data):
    """Validate and return a float64 C-contiguous tensor."""
    t = np.ascontiguousarray(data, dtype=np.float64)
    if t.ndim < 1:
        t = t.reshape(1)
    if not np.all(np.isfinite(t)):
        raise ValueError("tensor entries must be finite")
    return t


def matricize(t, mode):
    """Unfold tensor along `mode` (0-based) into an (n_mode, prod other) matrix."""
    t = np.asarray(t)
    if not 0 <= mode < t.ndim:
        raise ValueError(f"mode {mode} out of range for order-{t.ndim} tensor")
    return np.reshape(np.moveaxis(t, mode, 0), (t.shape[mode], -1), order="F")


def tensorize(m, mode, dims):
    """Inverse of matricize: fold matrix back into a tensor of shape `dims`."""
    m = np.asarray(m)
    dims = tuple(int(n) for n in dims)
    if not 0 <= mode < len(dims):
        raise ValueError(f"mode {mode} out of range for dims {dims}")
    rest = dims[:mode] + dims[mode + 1:]
    if m.shape != (dims[mode], int(np.prod(rest, dtype=np.int64))):
        raise ValueError(f"matrix shape {m.shape} inconsistent with dims {dims}, mode {mode}")
    t = np.reshape(m, (dims[mode],) + rest, order="F")
    return np.ascontiguousarray(np.moveaxis(t, 0, mode))


def mode_product(t, u, mode):
    """Multiply tensor by matrix `u` along `mode`: (T x_mode U)."""
    t = np.asarray(t)
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[1] != t.shape[mode]:
        raise ValueError(
            f"factor shape {u.shape} incompatible with tensor dim {t.shape[mode]} at mode {mode}"
        )
    out = np.tensordot(u, t, axes=(1, mode))
    return np.ascontiguousarray(np.moveaxis(out, 0, mode))


def tucker_compose(core, factors):
    """Compose core x_1 U_1 x_2 ... x_d U_d."""
    core = np.asarray(core)
    if len(factors) != core.ndim:
        raise ValueError(f"expected {core.ndim} factors, got {len(factors)}")
    out = core
    for mode, u in enumerate(factors):
        out = mode_product(out, u, mode)
    return out


def inner(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a.ravel(), b.ravel()))


def frob_norm(t):
    return float(np.linalg.norm(np.asarray(t).ravel()))


def l1_norm(t):
    return float(np.abs(np.asarray(t)).sum())


def write_tnsr(path, t):
    """Write tensor in the TNSR binary format (magic, version, dims, f64 C-order)."""
    t = as_tensor(t)
    with open(path, "wb") as f:
        f.write(TNSR_MAGIC)
        f.write(bytes([TNSR_VERSION, t.ndim]))
        for n in t.shape:
            f.write(struct.pack("<I", n))
        f.write(t.astype("<f8").tobytes(order="C"))


def read_tnsr(path):
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != TNSR_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        version, d = f.read(1)[0], f.read(1)[0]
        if version != TNSR_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        dims = tuple(struct.unpack("<I", f.read(4))[0] for _ in range(d))
        count = int(np.prod(dims, dtype=np.int64))
        data = np.frombuffer(f.read(count * 8), dtype="<f8", count=count)
        if f.read(1):
            raise ValueError(f"{path}: trailing bytes")
    return as_tensor(data.reshape(dims))
