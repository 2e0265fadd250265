"""Tseng-type splitting solvers for ``0 in F(x) + G(x)``.

Two strongly convergent inertial projection methods (hybrid: ``ihpa``,
shrinking: ``ispa``) and four baselines: Mann (``mttm``) and viscosity
(``vttm``) Tseng modifications, plain Tseng (``tseng``) and the inertial
forward-backward method (``lpfb``). All share the adaptive stepsize
``gamma_{n+1} = min(mu |w-y| / |Fw-Fy|, gamma_n)``.

Every step function mutates the :class:`SolverState` it is given, appends one
:class:`IterationRecord`, and returns the state.
"""

import time
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional

import numpy as np

from .core import DimensionError, as_vector, norm
from .operators import ProblemInstance, _tseng_eval
from .projections import (
    DYKSTRA_MAX_SWEEPS,
    DYKSTRA_TOL,
    HalfSpaceStack,
    anchor_halfspace,
    descent_halfspace,
    dykstra_halfspaces,
    project_two_halfspaces,
)

ALGORITHMS = ("ihpa", "ispa", "mttm", "vttm", "tseng", "lpfb")

DESCENT_SLACK = 1e-9
STEPSIZE_SLACK = 1e-12
ANCHOR_SLACK = 1e-10


class InvariantError(AssertionError):
    """A runtime convergence invariant failed in checked mode."""


class RunAborted(RuntimeError):
    """A step raised; ``trace`` holds the records produced before the failure."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


# parameter rules (module-level so configs stay picklable)

def nesterov_rule(n):
    """``(n-1)/(n+3)`` clipped at 0; the raw rule is negative at ``n = 0``."""
    return max(0.0, (n - 1.0) / (n + 3.0))


def inverse_square(n):
    return 1.0 / (n + 1.0) ** 2


def harmonic(n):
    return 1.0 / (n + 1.0)


def half_harmonic_complement(n):
    return n / (2.0 * (n + 1.0))


def halve(x):
    return 0.5 * x


@dataclass(frozen=True)
class StepsizePolicy:
    gamma0: float = 0.4
    mu: float = 0.5

    def __post_init__(self):
        if not self.gamma0 > 0:
            raise ValueError(f"gamma0 must be positive, got {self.gamma0}")
        if not 0 < self.mu < 1:
            raise ValueError(f"mu must lie in (0, 1), got {self.mu}")


@dataclass(frozen=True)
class SequenceInertia:
    """Prescribed inertia ``alpha_n = rule(n)``."""

    rule: Callable[[int], float] = nesterov_rule

    def __call__(self, n, x, x_prev):
        return self.rule(n)


@dataclass(frozen=True)
class AdaptiveInertia:
    """``min(alpha, xi(n) / |x_n - x_{n-1}|)``, or ``alpha`` when the iterates coincide.

    The convergence theory wants ``xi_n -> 0`` with a divergent sum. The
    default ``1/(n+1)^2`` is summable; it is kept because it is the setting
    the benchmark tables use. Pass another `xi` to change it.
    """

    alpha: float = 0.6
    xi: Callable[[int], float] = inverse_square

    def __post_init__(self):
        if not 0 <= self.alpha < 1:
            raise ValueError(f"alpha must lie in [0, 1), got {self.alpha}")

    def __call__(self, n, x, x_prev):
        d = x - x_prev
        if not np.any(d):
            return self.alpha
        return min(self.alpha, self.xi(n) / norm(d))


def stepsize_update(gamma, mu, w, y, Fw, Fy, dF=None):
    """Adaptive stepsize; `dF` overrides ``Fw - Fy`` when supplied."""
    if dF is None:
        dF = Fw - Fy
    if not np.any(dF):
        return gamma
    return min(mu * norm(w - y) / norm(dF), gamma)


def inertia_value(policy, n, x_curr, x_prev):
    if n < 0:
        raise ValueError("iteration index must be nonnegative")
    a = float(policy(n, x_curr, x_prev))
    if not 0 <= a < 1:
        raise ValueError(f"inertia rule produced {a} outside [0, 1) at n={n}")
    return a


@dataclass(frozen=True)
class IterationRecord:
    """One trace row. Row ``n`` describes the iterate ``x_n``.

    ``gamma`` is the stepsize after the update that produced ``x_n``;
    ``alpha`` and ``residual`` (``|w - y|``) belong to that same step.
    """

    n: int
    err_x: Optional[float]
    err_obj: Optional[float]
    gamma: float
    alpha: float
    residual: float
    elapsed_ms: Optional[float] = None
    point: Optional[np.ndarray] = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class StepDetail:
    """Intermediate points of the last step, for callbacks and diagnostics."""

    w: np.ndarray
    y: np.ndarray
    z: np.ndarray
    gamma: float
    gamma_next: float
    constraints: tuple = ()


@dataclass
class SolverState:
    n: int
    x_prev: np.ndarray
    x: np.ndarray
    gamma: float
    x0: np.ndarray
    stack: Optional[HalfSpaceStack] = None
    multipliers: Optional[np.ndarray] = None
    trace: List[IterationRecord] = field(default_factory=list)
    checked: bool = False
    dykstra_tol: float = DYKSTRA_TOL
    dykstra_max_sweeps: int = DYKSTRA_MAX_SWEEPS
    last: Optional[StepDetail] = None

    @classmethod
    def initial(cls, x0, gamma0, checked=False, with_stack=False, **kw):
        x0 = as_vector(x0, "x0")
        return cls(n=0, x_prev=x0, x=x0, gamma=float(gamma0), x0=x0,
                   stack=HalfSpaceStack(x0.shape[0]) if with_stack else None,
                   checked=checked, **kw)


def _record(state, problem, x_next, gamma_next, alpha, residual):
    state.x_prev, state.x = state.x, x_next
    state.gamma = gamma_next
    state.n += 1
    state.trace.append(IterationRecord(
        n=state.n,
        err_x=problem.error_x(x_next),
        err_obj=problem.error_obj(x_next),
        gamma=gamma_next,
        alpha=alpha,
        residual=residual,
        point=x_next,
    ))


def _check_stepsize(state, problem, sp, gamma_next, w, y, dF):
    if gamma_next > state.gamma:
        raise InvariantError(f"n={state.n}: stepsize increased {state.gamma} -> {gamma_next}")
    lhs = norm(dF)
    rhs = sp.mu / gamma_next * norm(w - y)
    if lhs > rhs + STEPSIZE_SLACK:
        raise InvariantError(f"n={state.n}: |Fw-Fy| = {lhs:.6e} exceeds mu/gamma |w-y| = {rhs:.6e}")
    L = problem.forward.lipschitz
    if L is not None and gamma_next < min(sp.gamma0, sp.mu / L) - STEPSIZE_SLACK:
        raise InvariantError(f"n={state.n}: stepsize {gamma_next} below min(gamma0, mu/L)")


def _check_projection_step(state, problem, sp, gamma_next, w, y, z, cut, x_next, sets):
    p = problem.known_solution
    if p is not None:
        c = 1.0 - sp.mu ** 2 * state.gamma ** 2 / gamma_next ** 2
        lhs = float((z - p) @ (z - p))
        rhs = float((w - p) @ (w - p)) - c * float((w - y) @ (w - y))
        if lhs > rhs + DESCENT_SLACK:
            raise InvariantError(
                f"n={state.n}: |z-p|^2 = {lhs:.6e} > {rhs:.6e} (Tseng descent inequality)")
        for h in sets:
            if not h.contains(p):
                raise InvariantError(f"n={state.n}: known solution cut off by a constraint")
    for h in sets:
        if not h.contains(x_next):
            raise InvariantError(f"n={state.n}: new iterate violates a constraint")
    before = norm(state.x - state.x0)
    after = norm(x_next - state.x0)
    if after < before - ANCHOR_SLACK:
        raise InvariantError(f"n={state.n}: distance to anchor decreased {before:.6e} -> {after:.6e}")


def _inertial_tseng(state, problem, sp, ip):
    alpha = inertia_value(ip, state.n, state.x, state.x_prev)
    w = state.x + alpha * (state.x - state.x_prev)
    y, z, dF = _tseng_eval(w, state.gamma, problem)
    gamma_next = stepsize_update(state.gamma, sp.mu, w, y, None, None, dF)
    if state.checked:
        _check_stepsize(state, problem, sp, gamma_next, w, y, dF)
    return alpha, w, y, z, gamma_next


def ihpa_step(state, problem, sp, ip):
    """Inertial hybrid projection: ``x_{n+1} = P_{C_n ∩ Q_n} x0``."""
    alpha, w, y, z, gamma_next = _inertial_tseng(state, problem, sp, ip)
    cut = descent_halfspace(w, z, y, state.gamma, gamma_next, sp.mu)
    anchor = anchor_halfspace(state.x, state.x0)
    x_next = project_two_halfspaces(state.x0, cut, anchor)
    if state.checked:
        _check_projection_step(state, problem, sp, gamma_next, w, y, z, cut, x_next,
                               (cut, anchor))
    state.last = StepDetail(w, y, z, state.gamma, gamma_next, (cut, anchor))
    _record(state, problem, x_next, gamma_next, alpha, norm(w - y))
    return state


def ispa_step(state, problem, sp, ip):
    """Inertial shrinking projection: ``x_{n+1} = P_{C_{n+1}} x0``, ``C_{n+1} ⊂ C_n``."""
    if state.stack is None:
        state.stack = HalfSpaceStack(problem.dim)
    alpha, w, y, z, gamma_next = _inertial_tseng(state, problem, sp, ip)
    cut = descent_halfspace(w, z, y, state.gamma, gamma_next, sp.mu)
    state.stack.append(cut)
    x_next, lam, _ = dykstra_halfspaces(
        state.x0, state.stack.normals, state.stack.offsets, state.multipliers,
        tol=state.dykstra_tol, max_sweeps=state.dykstra_max_sweeps)
    if state.checked:
        _check_projection_step(state, problem, sp, gamma_next, w, y, z, cut, x_next,
                               (cut,))
        if not state.stack.contains(x_next):
            raise InvariantError(f"n={state.n}: new iterate outside the shrinking set")
    state.multipliers = lam
    state.last = StepDetail(w, y, z, state.gamma, gamma_next, (cut,))
    _record(state, problem, x_next, gamma_next, alpha, norm(w - y))
    return state


def _plain_tseng(state, problem, sp):
    x = state.x
    y, z, dF = _tseng_eval(x, state.gamma, problem)
    gamma_next = stepsize_update(state.gamma, sp.mu, x, y, None, None, dF)
    if state.checked:
        _check_stepsize(state, problem, sp, gamma_next, x, y, dF)
    return y, z, gamma_next


def mann_combination(x, z, delta, theta):
    """``(1 - delta - theta) x + theta z`` with ``delta in (0,1)``, ``theta in (0, 1-delta)``."""
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not 0 < theta < 1 - delta:
        raise ValueError(f"theta must lie in (0, 1 - delta), got {theta}")
    return (1.0 - delta - theta) * x + theta * z


def viscosity_combination(fx, z, delta):
    """``delta f(x) + (1 - delta) z``."""
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return delta * fx + (1.0 - delta) * z


def mttm_step(state, problem, sp, delta=harmonic, theta=half_harmonic_complement):
    """Mann-type Tseng modification. The rules are indexed from 1."""
    k = state.n + 1
    y, z, gamma_next = _plain_tseng(state, problem, sp)
    state.last = StepDetail(state.x, y, z, state.gamma, gamma_next)
    x_next = mann_combination(state.x, z, delta(k), theta(k))
    _record(state, problem, x_next, gamma_next, 0.0, norm(state.x - y))
    return state


def vttm_step(state, problem, sp, delta=harmonic, f=halve):
    """Viscosity-type Tseng modification with contraction `f`. Rules indexed from 1."""
    k = state.n + 1
    y, z, gamma_next = _plain_tseng(state, problem, sp)
    state.last = StepDetail(state.x, y, z, state.gamma, gamma_next)
    x_next = viscosity_combination(f(state.x), z, delta(k))
    _record(state, problem, x_next, gamma_next, 0.0, norm(state.x - y))
    return state


def tseng_baseline_step(state, problem, sp):
    y, z, gamma_next = _plain_tseng(state, problem, sp)
    state.last = StepDetail(state.x, y, z, state.gamma, gamma_next)
    _record(state, problem, z, gamma_next, 0.0, norm(state.x - y))
    return state


def inertial_forward_backward_step(state, problem, sp, ip):
    """Inertial forward-backward; stepsize adapted on the pair ``(w, x_{n+1})``."""
    alpha = inertia_value(ip, state.n, state.x, state.x_prev)
    w = state.x + alpha * (state.x - state.x_prev)
    Fw = problem.forward(w)
    x_next = problem.resolvent(state.gamma, w - state.gamma * Fw)
    dF = problem.forward.difference(w, x_next, Fw)
    gamma_next = stepsize_update(state.gamma, sp.mu, w, x_next, None, None, dF)
    state.last = StepDetail(w, x_next, x_next, state.gamma, gamma_next)
    _record(state, problem, x_next, gamma_next, alpha, norm(w - x_next))
    return state


def default_inertia(algorithm):
    if algorithm == "ihpa":
        return SequenceInertia(nesterov_rule)
    if algorithm in ("ispa", "lpfb"):
        return AdaptiveInertia(0.6, inverse_square)
    return None


@dataclass
class RunConfig:
    """Everything a run needs besides the problem.

    ``inertia=None`` picks the per-algorithm default: ``(n-1)/(n+3)`` for
    ihpa, adaptive with ``alpha=0.6, xi_n=1/(n+1)^2`` for ispa and lpfb.
    """

    x0: np.ndarray
    max_iters: int = 100
    stepsize: StepsizePolicy = field(default_factory=StepsizePolicy)
    inertia: object = None
    tol: Optional[float] = None
    checked: bool = False
    timed: bool = True
    delta: Callable[[int], float] = harmonic
    theta: Callable[[int], float] = half_harmonic_complement
    contraction: Callable[[np.ndarray], np.ndarray] = halve
    dykstra_tol: float = DYKSTRA_TOL
    dykstra_max_sweeps: int = DYKSTRA_MAX_SWEEPS
    callback: Optional[Callable[[SolverState], None]] = None


def _stepper(algorithm, config):
    sp = config.stepsize
    ip = config.inertia if config.inertia is not None else default_inertia(algorithm)
    if algorithm == "ihpa":
        return lambda s, p: ihpa_step(s, p, sp, ip)
    if algorithm == "ispa":
        return lambda s, p: ispa_step(s, p, sp, ip)
    if algorithm == "mttm":
        return lambda s, p: mttm_step(s, p, sp, config.delta, config.theta)
    if algorithm == "vttm":
        return lambda s, p: vttm_step(s, p, sp, config.delta, config.contraction)
    if algorithm == "tseng":
        return lambda s, p: tseng_baseline_step(s, p, sp)
    if algorithm == "lpfb":
        return lambda s, p: inertial_forward_backward_step(s, p, sp, ip)
    raise ValueError(f"unknown algorithm {algorithm!r}; known: {', '.join(ALGORITHMS)}")


def run(problem: ProblemInstance, algorithm: str, config: RunConfig) -> List[IterationRecord]:
    """Drive `algorithm` for ``config.max_iters`` steps or until ``|w - y| < tol``.

    Per-iteration wall time is recorded only when ``timed`` is set and checked
    mode is off, so checked runs are bit-reproducible.
    """
    step = _stepper(algorithm, config)
    x0 = as_vector(config.x0, "x0")
    if x0.shape[0] != problem.dim:
        raise DimensionError(f"x0 has dim {x0.shape[0]}, problem has {problem.dim}")
    state = SolverState.initial(
        x0, config.stepsize.gamma0, checked=config.checked,
        with_stack=algorithm == "ispa",
        dykstra_tol=config.dykstra_tol, dykstra_max_sweeps=config.dykstra_max_sweeps)
    timed = config.timed and not config.checked
    for _ in range(config.max_iters):
        t0 = time.perf_counter()
        try:
            step(state, problem)
        except Exception as exc:
            raise RunAborted(f"{algorithm} failed at n={state.n}: {exc}", state.trace) from exc
        if timed:
            state.trace[-1] = replace(state.trace[-1],
                                      elapsed_ms=(time.perf_counter() - t0) * 1e3)
        if config.callback is not None:
            config.callback(state)
        if config.tol is not None and state.trace[-1].residual < config.tol:
            break
    return state.trace
