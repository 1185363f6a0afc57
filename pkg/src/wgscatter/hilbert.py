"""Dense operator algebra for truncated bosonic and two-level Hilbert spaces.

Operators and state vectors are plain complex numpy arrays.  Every array
returned here is marked read-only so it can be shared between threads.
"""
import numpy as np

# Largest dimension a tensor product may reach; dense matrices beyond this
# would not fit comfortably in memory.
MAX_DIM = 4096


def _frozen(x):
    x = np.array(x, dtype=complex)
    x.flags.writeable = False
    return x


def _check_finite(x):
    if not np.all(np.isfinite(x)):
        raise ValueError("operator entries must be finite")


def destroy(n_max):
    """Lowering operator on the span of |0>, ..., |n_max>."""
    if int(n_max) != n_max or n_max < 1:
        raise ValueError(f"n_max must be an integer >= 1, got {n_max!r}")
    n_max = int(n_max)
    return _frozen(np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1))


def identity(dim):
    if int(dim) != dim or dim < 1:
        raise ValueError(f"dim must be a positive integer, got {dim!r}")
    return _frozen(np.eye(int(dim)))


def number(n_max):
    a = destroy(n_max)
    return _frozen(a.conj().T @ a)


def adjoint(x):
    return _frozen(np.asarray(x).conj().T)


def tensor(*ops):
    """Kronecker product of operators (or state vectors), left to right."""
    if not ops:
        raise ValueError("tensor needs at least one operand")
    dim = 1
    for op in ops:
        dim *= np.asarray(op).shape[0]
    if dim > MAX_DIM:
        raise ValueError(f"tensor product dimension {dim} exceeds {MAX_DIM}")
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return _frozen(out)


def commutator(x, y):
    x = np.asarray(x)
    y = np.asarray(y)
    return _frozen(x @ y - y @ x)


def basis(dim, n):
    """Column basis vector |n> in a space of dimension dim."""
    if not 0 <= n < dim:
        raise ValueError(f"basis index {n} outside [0, {dim})")
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return _frozen(v)


def as_operator(x, dim=None):
    """Validate and freeze a square complex matrix."""
    x = np.array(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"operator must be a square matrix, got shape {x.shape}")
    if dim is not None and x.shape[0] != dim:
        raise ValueError(f"operator dimension {x.shape[0]} != {dim}")
    _check_finite(x)
    return _frozen(x)


def as_state(psi, dim=None):
    psi = np.array(psi, dtype=complex).reshape(-1)
    if dim is not None and psi.shape[0] != dim:
        raise ValueError(f"state dimension {psi.shape[0]} != {dim}")
    _check_finite(psi)
    if np.vdot(psi, psi).real > 1 + 1e-12:
        raise ValueError("state norm exceeds 1")
    return _frozen(psi)


def is_hermitian(x, rtol=1e-12):
    x = np.asarray(x)
    scale = max(np.abs(x).max(initial=0.0), 1.0)
    return np.abs(x - x.conj().T).max(initial=0.0) <= rtol * scale
