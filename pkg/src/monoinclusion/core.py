"""Vector arithmetic and the halfspace / affine-set types.

Points of R^n are plain 1-D ``float64`` numpy arrays; :func:`as_vector` is the
boundary check applied wherever a point enters the library.
"""

from dataclasses import dataclass

import numpy as np


class DimensionError(ValueError):
    """Operands live in spaces of different dimension."""


class InfeasibleError(ValueError):
    """A constraint set that must be nonempty turned out to be empty."""


def as_vector(x, name="x"):
    """Return `x` as a finite 1-D float64 array with at least one entry."""
    v = np.array(x, dtype=np.float64, copy=True)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    v.setflags(write=False)
    return v


def _check_dims(x, y):
    if x.shape != y.shape:
        raise DimensionError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")


def inner(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_dims(x, y)
    return float(x @ y)


def norm(x):
    """Euclidean norm, rescaled so tiny or huge entries neither underflow nor overflow."""
    x = np.asarray(x, dtype=np.float64)
    m = float(np.max(np.abs(x))) if x.size else 0.0
    if m == 0.0 or not np.isfinite(m):
        return m
    if 1e-150 < m < 1e150:
        return float(np.sqrt(x @ x))
    y = x / m
    return m * float(np.sqrt(y @ y))


def axpy(alpha, x, y):
    """Return ``alpha * x + y``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_dims(x, y)
    return alpha * x + y


@dataclass(frozen=True, eq=False)
class HalfSpace:
    """The set ``{u : <normal, u> <= offset}``.

    A zero normal with a nonnegative offset is the whole space and is kept as
    a trivial halfspace; a zero normal with a negative offset is empty and
    cannot be constructed.
    """

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        a = as_vector(self.normal, "normal")
        b = float(self.offset)
        if not np.isfinite(b):
            raise ValueError("offset must be finite")
        if not np.any(a) and b < 0:
            raise InfeasibleError(f"zero normal with offset {b} < 0 is the empty set")
        object.__setattr__(self, "normal", a)
        object.__setattr__(self, "offset", b)

    @classmethod
    def whole_space(cls, dim):
        return cls(np.zeros(dim), 0.0)

    @property
    def dim(self):
        return self.normal.shape[0]

    @property
    def trivial(self):
        return not np.any(self.normal)

    def slack(self, u):
        """Absolute membership slack ``1e-10 * max(1, |a| |u|)``."""
        return 1e-10 * max(1.0, norm(self.normal) * norm(u))

    def contains(self, u, slack=None):
        u = np.asarray(u, dtype=np.float64)
        _check_dims(self.normal, u)
        if slack is None:
            slack = self.slack(u)
        return float(self.normal @ u) - self.offset <= slack


@dataclass(frozen=True, eq=False)
class AffineSet:
    """The set ``{x : A x = b}`` with ``A`` of full row rank ``m < n``."""

    matrix: np.ndarray
    rhs: np.ndarray

    RANK_RTOL = 1e-10

    def __post_init__(self):
        A = np.array(self.matrix, dtype=np.float64, copy=True)
        if A.ndim == 1:
            A = A.reshape(1, -1)
        if A.ndim != 2 or not np.all(np.isfinite(A)):
            raise ValueError("matrix must be a finite 2-D array")
        b = as_vector(self.rhs, "rhs")
        m, n = A.shape
        if b.shape[0] != m:
            raise DimensionError(f"rhs has {b.shape[0]} entries, matrix has {m} rows")
        if m >= n:
            raise ValueError(f"need fewer rows than columns, got {m}x{n}")
        s = np.linalg.svd(A, compute_uv=False)
        rank = int(np.sum(s > self.RANK_RTOL * s[0])) if s[0] > 0 else 0
        if rank != m:
            raise ValueError(f"matrix is rank deficient (rank {rank} < {m})")
        A.setflags(write=False)
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "rhs", b)

    @property
    def dim(self):
        return self.matrix.shape[1]
