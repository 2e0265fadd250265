"""Named problem instances and experiment configuration."""

import itertools
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import List, Optional, Union

import numpy as np

from ..operators import example1, example2, quadratic_l1, soft_threshold
from ..solvers import (
    ALGORITHMS,
    AdaptiveInertia,
    RunConfig,
    SequenceInertia,
    StepsizePolicy,
    inverse_square,
    nesterov_rule,
    run,
)

PROBLEMS = ("example1", "example2", "random-quadratic-l1")
INERTIA_KINDS = ("default", "nesterov", "adaptive", "none")

X0_PRESETS = {
    "ones": lambda dim: np.ones(dim),
    "zeros": lambda dim: np.zeros(dim),
}
DEFAULT_X0 = {
    "example1": "ones",
    "example2": [0.6787, 0.7577],
    "random-quadratic-l1": "zeros",
}

RANDOM_DIM = 5
RANDOM_SHIFT = 0.1
RANDOM_WEIGHT = 1.0


def registry_lookup(problem_id, seed=0, dim=RANDOM_DIM):
    if problem_id == "example1":
        return example1()
    if problem_id == "example2":
        return example2()
    if problem_id == "random-quadratic-l1":
        return random_quadratic_l1(seed, dim)
    raise KeyError(f"unknown problem {problem_id!r}; known: {', '.join(PROBLEMS)}")


def _polish_l1(Q, c, weight, x, support_tol=1e-9):
    """Exact minimiser of ``0.5 x'Qx + c'x + weight |x|_1`` on the sign pattern of `x`."""
    s = np.where(np.abs(x) > support_tol, np.sign(x), 0.0)
    S = np.flatnonzero(s)
    out = np.zeros_like(x)
    if S.size:
        out[S] = np.linalg.solve(Q[np.ix_(S, S)], -c[S] - weight * s[S])
        if np.any(np.sign(out[S]) != s[S]):
            return None
    g = Q @ out + c
    off = np.setdiff1d(np.arange(x.shape[0]), S)
    if off.size and np.max(np.abs(g[off])) > weight * (1 + 1e-12):
        return None
    return out


def _reference_l1(Q, c, weight):
    """Minimiser of ``0.5 x'Qx + c'x + weight |x|_1`` for positive definite ``Q``.

    Proximal gradient at step ``1/L`` (linear rate under strong convexity)
    locates the sign pattern; the minimiser is then solved exactly on it.
    Small problems fall back to trying every sign pattern.
    """
    n = c.shape[0]
    step = 1.0 / float(np.linalg.eigvalsh(Q)[-1])
    x = np.zeros(n)
    for _ in range(20_000):
        x_new = soft_threshold(x - step * (Q @ x + c), step * weight)
        if np.max(np.abs(x_new - x)) < 1e-13:
            x = x_new
            break
        x = x_new
    out = _polish_l1(Q, c, weight, x)
    if out is not None or n > 10:
        return out
    for signs in itertools.product((-1.0, 0.0, 1.0), repeat=n):
        out = _polish_l1(Q, c, weight, np.array(signs), support_tol=0.5)
        if out is not None:
            return out
    return None


@lru_cache(maxsize=64)
def random_quadratic_l1(seed, dim=RANDOM_DIM):
    """Random strongly convex ``0.5 x'Qx + c'x + |x|_1`` with ``Q = G'G + 0.1 I``.

    Fully determined by `seed`; ships the exact minimiser as known solution.
    """
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((dim, dim))
    Q = G.T @ G + RANDOM_SHIFT * np.eye(dim)
    c = 3.0 * rng.standard_normal(dim)
    x_ref = _reference_l1(Q, c, RANDOM_WEIGHT)
    if x_ref is None:
        raise RuntimeError(f"reference solve for seed {seed} failed")
    return quadratic_l1(Q, c, RANDOM_WEIGHT, known_solution=x_ref,
                        name=f"random-quadratic-l1[{seed}]")


def resolve_x0(x0, problem_id, dim):
    if x0 is None:
        x0 = DEFAULT_X0.get(problem_id, "zeros")
    if isinstance(x0, str):
        if x0 in X0_PRESETS:
            return X0_PRESETS[x0](dim)
        return np.array([float(t) for t in x0.split(",")])
    return np.asarray(x0, dtype=np.float64)


@dataclass
class ExperimentConfig:
    problem_id: str = "example2"
    algorithm_id: str = "ispa"
    max_iters: int = 500
    x0: Optional[Union[str, List[float]]] = None
    gamma0: float = 0.4
    mu: float = 0.5
    inertia: str = "default"
    alpha: float = 0.6
    seed: int = 0
    checked_mode: bool = True
    tol: Optional[float] = None
    output_path: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.algorithm_id not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm_id!r}; "
                             f"known: {', '.join(ALGORITHMS)}")
        if self.problem_id not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem_id!r}; known: {', '.join(PROBLEMS)}")
        if self.inertia not in INERTIA_KINDS:
            raise ValueError(f"unknown inertia {self.inertia!r}; known: {', '.join(INERTIA_KINDS)}")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")

    def to_dict(self):
        d = asdict(self)
        d.pop("extra")
        if isinstance(d["x0"], np.ndarray):
            d["x0"] = d["x0"].tolist()
        return d

    def inertia_policy(self):
        if self.inertia == "nesterov":
            return SequenceInertia(nesterov_rule)
        if self.inertia == "adaptive":
            return AdaptiveInertia(self.alpha, inverse_square)
        if self.inertia == "none":
            return SequenceInertia(_zero)
        return None

    def problem(self):
        return registry_lookup(self.problem_id, self.seed)

    def run_config(self, problem):
        return RunConfig(
            x0=resolve_x0(self.x0, self.problem_id, problem.dim),
            max_iters=self.max_iters,
            stepsize=StepsizePolicy(self.gamma0, self.mu),
            inertia=self.inertia_policy(),
            tol=self.tol,
            checked=self.checked_mode,
        )


def _zero(n):
    return 0.0


def run_experiment(cfg):
    problem = cfg.problem()
    return problem, run(problem, cfg.algorithm_id, cfg.run_config(problem))
