"""Metric projections onto halfspaces, affine sets and halfspace intersections."""

import numba
import numpy as np

from .core import AffineSet, DimensionError, HalfSpace, InfeasibleError, as_vector, norm

PARALLEL_RTOL = 1e-12
DYKSTRA_TOL = 1e-12
DYKSTRA_MAX_SWEEPS = 10_000
POLISH_EVERY = 50


class ProjectionConvergenceError(RuntimeError):
    """Dykstra ran out of sweeps; carries the best iterate and its residual."""

    def __init__(self, message, iterate, residual, multipliers=None):
        super().__init__(message)
        self.iterate = iterate
        self.residual = residual
        self.multipliers = multipliers


def project_halfspace(x0, h):
    if h.trivial:
        raise ValueError("projection onto a halfspace needs a nonzero normal")
    x0 = np.asarray(x0, dtype=np.float64)
    a = h.normal
    if a.shape != x0.shape:
        raise DimensionError(f"dimension mismatch: {a.shape[0]} vs {x0.shape[0]}")
    r = float(a @ x0) - h.offset
    if r <= 0:
        return x0.copy()
    return x0 - (r / float(a @ a)) * a


def project_affine(x0, s):
    """``x0 + A'(AA')^{-1}(b - A x0)``."""
    if not isinstance(s, AffineSet):
        raise TypeError("expected an AffineSet")
    x0 = np.asarray(x0, dtype=np.float64)
    A = s.matrix
    if x0.shape != (A.shape[1],):
        raise DimensionError(f"point has dim {x0.shape[0]}, set lives in R^{A.shape[1]}")
    gram = A @ A.T
    try:
        cho = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("A A^T is numerically singular") from exc
    r = s.rhs - A @ x0
    lam = np.linalg.solve(cho.T, np.linalg.solve(cho, r))
    return x0 + A.T @ lam


def descent_halfspace(w, z, y, gamma, gamma_next, mu):
    """Halfspace form of ``{u : |z-u|^2 <= |w-u|^2 - c |w-y|^2}``.

    ``c = 1 - mu^2 gamma^2 / gamma_next^2``. The quadratic terms in ``u``
    cancel, leaving ``<2(w-z), u> <= <w-z, w+z> - c |w-y|^2``.
    """
    w, z, y = (np.asarray(v, dtype=np.float64) for v in (w, z, y))
    if not (w.shape == z.shape == y.shape):
        raise DimensionError("w, z, y must share a dimension")
    if not (gamma > 0 and gamma_next > 0):
        raise ValueError("stepsizes must be positive")
    c = 1.0 - mu * mu * gamma * gamma / (gamma_next * gamma_next)
    d = w - z
    rhs = float(d @ (w + z)) - c * float((w - y) @ (w - y))
    if not np.any(d):
        # w == z forces rhs >= 0 in exact arithmetic; allow roundoff
        if rhs < -16 * np.finfo(float).eps * max(1.0, float(w @ w)):
            raise InfeasibleError(
                f"degenerate cut with w == z has negative offset {rhs:.3e}; "
                "the stepsize bound was violated upstream")
        return HalfSpace(np.zeros_like(w), 0.0)
    return HalfSpace(2.0 * d, rhs)


def anchor_halfspace(x, x0):
    """Halfspace form of ``{u : <x - u, x - x0> <= 0}``; whole space if ``x == x0``."""
    x = np.asarray(x, dtype=np.float64)
    x0 = np.asarray(x0, dtype=np.float64)
    if x.shape != x0.shape:
        raise DimensionError("x and x0 must share a dimension")
    d = x0 - x
    if not np.any(d):
        return HalfSpace(np.zeros_like(x), 0.0)
    return HalfSpace(d, float(d @ x))


def _parallel(a1, a2):
    return abs(float(a1 @ a2)) >= (1.0 - PARALLEL_RTOL) * norm(a1) * norm(a2)


def project_two_halfspaces(x0, h1, h2):
    """Exact projection of `x0` onto ``h1 ∩ h2`` by KKT case analysis."""
    x0 = np.asarray(x0, dtype=np.float64)
    if h1.trivial and h2.trivial:
        return x0.copy()
    if h1.trivial:
        return project_halfspace(x0, h2)
    if h2.trivial:
        return project_halfspace(x0, h1)
    a1, b1, a2, b2 = h1.normal, h1.offset, h2.normal, h2.offset
    r1 = float(a1 @ x0) - b1
    r2 = float(a2 @ x0) - b2
    if r1 <= 0 and r2 <= 0:
        return x0.copy()

    # one active constraint
    if r1 > 0:
        p = x0 - (r1 / float(a1 @ a1)) * a1
        if h2.contains(p):
            return p
    if r2 > 0:
        p = x0 - (r2 / float(a2 @ a2)) * a2
        if h1.contains(p):
            return p

    if _parallel(a1, a2):
        # Gram matrix singular: same direction means the tighter one binds,
        # opposite directions leave an empty slab.
        if float(a1 @ a2) < 0:
            raise InfeasibleError("antiparallel halfspaces with disjoint offsets")
        tighter = h1 if h1.offset / norm(a1) <= h2.offset / norm(a2) else h2
        return project_halfspace(x0, tighter)

    # both active: x = x0 - lam1 a1 - lam2 a2 on both boundaries
    g11, g12, g22 = float(a1 @ a1), float(a1 @ a2), float(a2 @ a2)
    det = g11 * g22 - g12 * g12
    lam1 = (g22 * r1 - g12 * r2) / det
    lam2 = (g11 * r2 - g12 * r1) / det
    if lam1 < 0 or lam2 < 0:
        raise InfeasibleError(
            f"two-halfspace KKT produced negative multipliers ({lam1:.3e}, {lam2:.3e})")
    return x0 - lam1 * a1 - lam2 * a2


class HalfSpaceStack:
    """Append-only intersection of halfspaces; empty means the whole space.

    Trivial (whole-space) halfspaces are accepted but not stored.
    """

    def __init__(self, dim):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = int(dim)
        self._normals = np.empty((16, self.dim))
        self._offsets = np.empty(16)
        self._size = 0

    def __len__(self):
        return self._size

    def append(self, h):
        if h.dim != self.dim:
            raise DimensionError(f"halfspace has dim {h.dim}, stack has {self.dim}")
        if h.trivial:
            return
        if self._size == self._offsets.shape[0]:
            self._normals = np.concatenate([self._normals, np.empty_like(self._normals)])
            self._offsets = np.concatenate([self._offsets, np.empty_like(self._offsets)])
        self._normals[self._size] = h.normal
        self._offsets[self._size] = h.offset
        self._size += 1

    @property
    def normals(self):
        return self._normals[: self._size]

    @property
    def offsets(self):
        return self._offsets[: self._size]

    def __iter__(self):
        for a, b in zip(self.normals, self.offsets):
            yield HalfSpace(a, b)

    def contains(self, u):
        return all(h.contains(u) for h in self)


@numba.njit(cache=True)
def _dykstra_sweeps(x0, A, b, sqn, lam, tol, max_sweeps):
    m, n = A.shape
    x = x0.copy()
    for i in range(m):
        if lam[i] != 0.0:
            for k in range(n):
                x[k] -= lam[i] * A[i, k]
    x_start = np.empty(n)
    change = np.inf
    for sweep in range(1, max_sweeps + 1):
        x_start[:] = x
        for i in range(m):
            r = -b[i]
            for k in range(n):
                r += A[i, k] * x[k]
            new = lam[i] + r / sqn[i]
            if new < 0.0:
                new = 0.0
            d = new - lam[i]
            if d != 0.0:
                lam[i] = new
                for k in range(n):
                    x[k] -= d * A[i, k]
        change = 0.0
        for k in range(n):
            change += (x[k] - x_start[k]) ** 2
        change = np.sqrt(change)
        if change < tol:
            worst = 0.0
            for i in range(m):
                r = -b[i]
                for k in range(n):
                    r += A[i, k] * x[k]
                r /= np.sqrt(sqn[i])
                if r > worst:
                    worst = r
            if worst <= 10.0 * tol:
                return x, sweep, change, True
    return x, max_sweeps, change, False


def dykstra_halfspaces(x0, normals, offsets, multipliers=None,
                       tol=DYKSTRA_TOL, max_sweeps=DYKSTRA_MAX_SWEEPS, polish=True):
    """Dykstra's cyclic projection of `x0` onto ``{u : normals @ u <= offsets}``.

    For halfspaces Dykstra's correction terms are ``lam_i * a_i`` with
    ``lam_i >= 0``, so the state is one multiplier per constraint and any
    nonnegative `multipliers` is a valid warm start. Stops once a sweep moves
    the iterate by less than `tol` and no constraint is violated by more than
    ``10 * tol`` in distance.

    With `polish`, the exact projection is also computed once by a dual
    active-set method, either after 50 unconverged sweeps or when
    the sweep test first passes. Its multipliers replace Dykstra's if the
    Dykstra iterate is unconverged or farther from `x0`, and Dykstra then
    re-confirms them. Many nearly parallel active constraints slow Dykstra
    to a near-unit linear rate, where the sweep test can pass well short of
    the projection.

    Returns
    -------
    x : ndarray
    multipliers : ndarray
    sweeps : int
    """
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    A = np.ascontiguousarray(normals, dtype=np.float64)
    b = np.ascontiguousarray(offsets, dtype=np.float64)
    m = b.shape[0]
    if m == 0:
        return x0.copy(), np.zeros(0), 0
    if A.shape != (m, x0.shape[0]):
        raise DimensionError(f"normals have shape {A.shape}, expected ({m}, {x0.shape[0]})")
    sqn = np.einsum("ij,ij->i", A, A)
    if np.any(sqn == 0):
        raise ValueError("zero normal in halfspace stack")
    lam = np.zeros(m)
    if multipliers is not None:
        k = min(len(multipliers), m)
        lam[:k] = np.maximum(np.asarray(multipliers, dtype=np.float64)[:k], 0.0)
    tol, max_sweeps = float(tol), int(max_sweeps)
    done = 0
    polished = False
    while True:
        chunk = min(POLISH_EVERY, max_sweeps - done)
        x, sweeps, change, ok = _dykstra_sweeps(x0, A, b, sqn, lam, tol, chunk)
        done += sweeps
        if ok and (polished or not polish):
            return x, lam, done
        if not ok and done >= max_sweeps:
            break
        if polish and (not ok or not polished):
            polished = True
            lam_exact = _polish(x0, A, b, tol)
            if lam_exact is not None:
                x_exact = x0 - A.T @ lam_exact
                if not ok or np.sum((x_exact - x0) ** 2) < np.sum((x - x0) ** 2):
                    lam = lam_exact
                    continue
            if ok:
                return x, lam, done
    raise ProjectionConvergenceError(
        f"Dykstra did not reach tol={tol:g} in {max_sweeps} sweeps "
        f"(last sweep change {change:.3e})", x, change, lam)


def _polish(x0, A, b, tol):
    """Multipliers of the exact projection by a dual active-set method.

    Goldfarb-Idnani specialised to the identity Hessian, on row-normalized
    constraints: start from `x0`, repeatedly add the most violated
    constraint, dropping active ones whose multiplier would turn negative.
    Returns None if it fails to settle.
    """
    m, n = A.shape
    scale = np.sqrt(np.einsum("ij,ij->i", A, A))
    An = A / scale[:, None]
    bn = b / scale
    x = np.array(x0, dtype=np.float64)
    active = []
    u = np.zeros(0)
    feas_tol = 0.1 * tol
    for _ in range(10 * m + 10):
        viol = An @ x - bn
        if active:
            viol[active] = -np.inf
        p = int(np.argmax(viol))
        if viol[p] <= feas_tol:
            lam = np.zeros(m)
            lam[active] = u / scale[active]
            return lam
        u_p = 0.0
        while True:
            a_p = An[p]
            if active:
                N = An[active]
                r = np.linalg.lstsq(N.T, a_p, rcond=None)[0]
                z = a_p - N.T @ r
            else:
                r = np.zeros(0)
                z = a_p
            zz = float(z @ z)
            t_full = (float(a_p @ x) - bn[p]) / zz if zz > 1e-24 else np.inf
            pos = np.flatnonzero(r > 0)
            if pos.size:
                ratios = u[pos] / r[pos]
                j = int(pos[np.argmin(ratios)])
                t_drop = float(ratios.min())
            else:
                j, t_drop = -1, np.inf
            t = min(t_full, t_drop)
            if not np.isfinite(t):
                return None
            x = x - t * z
            u = u - t * r
            u_p += t
            if t_full <= t_drop:
                active.append(p)
                u = np.append(np.maximum(u, 0.0), u_p)
                break
            del active[j]
            u = np.delete(np.maximum(u, 0.0), j)
    return None


def project_halfspace_stack(x0, stack, tol=DYKSTRA_TOL, max_sweeps=DYKSTRA_MAX_SWEEPS,
                            multipliers=None, polish=True):
    """Projection of `x0` onto the intersection held by `stack` (Dykstra)."""
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (stack.dim,):
        raise DimensionError(f"point has dim {x0.shape[0]}, stack has {stack.dim}")
    x, _, _ = dykstra_halfspaces(x0, stack.normals, stack.offsets, multipliers,
                                 tol, max_sweeps, polish)
    return x
