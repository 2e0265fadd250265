"""Forward maps, resolvents and the concrete problem instances."""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import DimensionError, as_vector


@dataclass(frozen=True)
class ForwardMap:
    """Single-valued monotone map ``x -> F(x)``, optionally L-Lipschitz.

    For affine maps ``F(x) = M x + c`` pass ``linear = x -> M x``: differences
    ``F(u) - F(v)`` are then evaluated as ``M (u - v)``, which avoids the
    cancellation that swamps the adaptive stepsize ratio once ``u - v`` is
    near roundoff.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    lipschitz: Optional[float] = None
    linear: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.lipschitz is not None and not self.lipschitz > 0:
            raise ValueError("lipschitz hint must be positive")

    def __call__(self, x):
        out = np.asarray(self.fn(x), dtype=np.float64)
        if out.shape != np.shape(x):
            raise DimensionError(f"forward map changed shape {np.shape(x)} -> {out.shape}")
        return out

    def difference(self, u, v, Fu=None, Fv=None):
        """``F(u) - F(v)``; reuses `Fu`, `Fv` when the map is not affine."""
        if self.linear is not None:
            return np.asarray(self.linear(u - v), dtype=np.float64)
        Fu = self(u) if Fu is None else Fu
        Fv = self(v) if Fv is None else Fv
        return Fu - Fv


@dataclass(frozen=True)
class ResolventFamily:
    """``(gamma, v) -> (I + gamma G)^{-1} v`` for a maximal monotone ``G``."""

    fn: Callable[[float, np.ndarray], np.ndarray]

    def __call__(self, gamma, v):
        if not gamma > 0:
            raise ValueError(f"resolvent parameter must be positive, got {gamma}")
        out = np.asarray(self.fn(gamma, v), dtype=np.float64)
        if out.shape != np.shape(v):
            raise DimensionError(f"resolvent changed shape {np.shape(v)} -> {out.shape}")
        return out


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Find ``x`` with ``0 in F(x) + G(x)``.

    ``known_solution``, ``objective`` and ``optimal_value`` are optional
    metadata used for error traces.
    """

    forward: ForwardMap
    resolvent: ResolventFamily
    dim: int
    known_solution: Optional[np.ndarray] = None
    objective: Optional[Callable[[np.ndarray], float]] = None
    optimal_value: Optional[float] = None
    name: str = ""

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError("dim must be positive")
        if self.known_solution is not None:
            xs = as_vector(self.known_solution, "known_solution")
            if xs.shape[0] != self.dim:
                raise DimensionError(
                    f"known_solution has dim {xs.shape[0]}, problem has {self.dim}")
            object.__setattr__(self, "known_solution", xs)
            if self.objective is not None and self.optimal_value is not None:
                gap = abs(self.objective(xs) - self.optimal_value)
                if gap > 1e-9:
                    raise ValueError(
                        f"objective at known_solution is off the optimal value by {gap:.3e}")

    def error_x(self, x):
        if self.known_solution is None:
            return None
        return float(np.linalg.norm(x - self.known_solution))

    def error_obj(self, x):
        if self.objective is None or self.optimal_value is None:
            return None
        return abs(float(self.objective(x)) - self.optimal_value)


def soft_threshold(y, gamma):
    """Proximal map of ``gamma * ||.||_1``: ``sign(y) * max(|y| - gamma, 0)``."""
    if not gamma > 0:
        raise ValueError(f"threshold must be positive, got {gamma}")
    y = np.asarray(y, dtype=np.float64)
    return np.sign(y) * np.maximum(np.abs(y) - gamma, 0.0)


# Example in R^10: F x = 2x + 1, G x = 5x.

def _ones_forward(x):
    return 2.0 * x + 1.0


def _double(x):
    return 2.0 * x


def _scaled_identity_resolvent(gamma, v):
    return v / (1.0 + 5.0 * gamma)


def resolvent_example1(w, gamma):
    """Fused backward-forward step ``(I + gamma G)^{-1}(w - gamma F w)``.

    Kept as a closed-form cross-check; solvers use the unfused pair.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (10,):
        raise DimensionError(f"expected a vector in R^10, got shape {w.shape}")
    return (1.0 - 2.0 * gamma) / (1.0 + 5.0 * gamma) * w - gamma / (1.0 + 5.0 * gamma)


def example1():
    return ProblemInstance(
        forward=ForwardMap(_ones_forward, lipschitz=2.0, linear=_double),
        resolvent=ResolventFamily(_scaled_identity_resolvent),
        dim=10,
        known_solution=np.full(10, -1.0 / 7.0),
        name="example1",
    )


# Example in R^2: min ||x||^2 + (3, 5).x + ||x||_1.

def _l1_resolvent(gamma, v):
    return soft_threshold(v, gamma)


_LINEAR_TERM = np.array([3.0, 5.0])


def grad_example2(x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (2,):
        raise DimensionError(f"expected a vector in R^2, got shape {x.shape}")
    return 2.0 * x + _LINEAR_TERM


def objective_example2(x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (2,):
        raise DimensionError(f"expected a vector in R^2, got shape {x.shape}")
    return float(x @ x + _LINEAR_TERM @ x + np.abs(x).sum())


def example2():
    return ProblemInstance(
        forward=ForwardMap(grad_example2, lipschitz=2.0, linear=_double),
        resolvent=ResolventFamily(_l1_resolvent),
        dim=2,
        known_solution=np.array([-1.0, -2.0]),
        objective=objective_example2,
        optimal_value=-5.0,
        name="example2",
    )


def quadratic_l1(Q, c, weight=1.0, known_solution=None, name="quadratic-l1"):
    """``min 0.5 x'Qx + c'x + weight ||x||_1`` with ``Q`` symmetric PSD."""
    Q = np.array(Q, dtype=np.float64)
    c = as_vector(c, "c")
    n = c.shape[0]
    if Q.shape != (n, n):
        raise DimensionError(f"Q has shape {Q.shape}, expected ({n}, {n})")
    L = float(np.linalg.eigvalsh(Q)[-1])

    def objective(x):
        return float(0.5 * x @ Q @ x + c @ x + weight * np.abs(x).sum())

    return ProblemInstance(
        forward=ForwardMap(lambda x: Q @ x + c, lipschitz=L if L > 0 else None,
                           linear=lambda x: Q @ x),
        resolvent=ResolventFamily(lambda g, v: soft_threshold(v, g * weight)),
        dim=n,
        known_solution=known_solution,
        objective=objective,
        optimal_value=None if known_solution is None else objective(np.asarray(known_solution)),
        name=name,
    )


def _tseng_eval(w, gamma, problem):
    Fw = problem.forward(w)
    y = problem.resolvent(gamma, w - gamma * Fw)
    Fy = problem.forward(y)
    dF = problem.forward.difference(w, y, Fw, Fy)
    z = y + gamma * dF
    return y, z, dF


def tseng_map(w, gamma, problem):
    """Backward point ``y`` and Tseng-corrected point ``z`` at ``w``."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (problem.dim,):
        raise DimensionError(f"point has shape {w.shape}, problem dim is {problem.dim}")
    y, z, _ = _tseng_eval(w, gamma, problem)
    return y, z
