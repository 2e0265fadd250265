import numpy as np
import pytest

from monoinclusion.core import AffineSet, DimensionError, HalfSpace, InfeasibleError
from monoinclusion.projections import (HalfSpaceStack, ProjectionConvergenceError,
                                       anchor_halfspace, descent_halfspace,
                                       dykstra_halfspaces, project_affine, project_halfspace,
                                       project_halfspace_stack, project_two_halfspaces)

from oracles import (affine_kkt, classical_dykstra, enumerate_active_sets, grid_refine_2d,
                     random_polytope)


def test_project_halfspace_examples():
    h = HalfSpace([1.0, 0.0], 0.0)
    np.testing.assert_array_equal(project_halfspace([-1.0, 5.0], h), [-1.0, 5.0])
    np.testing.assert_array_equal(project_halfspace([2.0, 3.0], h), [0.0, 3.0])
    p = project_halfspace([2.0, 2.0], HalfSpace([1.0, 1.0], 1.0))
    np.testing.assert_allclose(p, [0.5, 0.5], atol=1e-15)
    grid = np.linspace(-1, 2, 3001)
    X, Y = np.meshgrid(grid, grid, indexing="ij")
    d = np.where(X + Y <= 1, (X - 2) ** 2 + (Y - 2) ** 2, np.inf)
    i, j = np.unravel_index(np.argmin(d), d.shape)
    np.testing.assert_allclose(p, [grid[i], grid[j]], atol=1e-3)


def test_project_halfspace_rejects_trivial_and_mismatch():
    with pytest.raises(ValueError):
        project_halfspace([1.0, 2.0], HalfSpace.whole_space(2))
    with pytest.raises(DimensionError):
        project_halfspace([1.0, 2.0, 3.0], HalfSpace([1.0, 0.0], 0.0))


def test_project_affine_examples(rng):
    s = AffineSet([[1.0, 0.0]], [0.0])
    np.testing.assert_array_equal(project_affine([2.0, 3.0], s), [0.0, 3.0])
    np.testing.assert_array_equal(project_affine([0.0, 7.0], s), [0.0, 7.0])
    for _ in range(50):
        A, b, x0 = rng.normal(size=(2, 4)), rng.normal(size=2), rng.normal(size=4)
        np.testing.assert_allclose(project_affine(x0, AffineSet(A, b)), affine_kkt(x0, A, b),
                                   atol=1e-8)


def test_descent_halfspace_examples():
    h = descent_halfspace([1.0, 2.0], [1.0, 2.0], [1.0, 2.0], 0.4, 0.4, 0.5)
    assert h.trivial
    h = descent_halfspace([1.0, 0.0], [0.0, 0.0], [1.0, 0.0], 0.3, 0.3, 0.5)
    np.testing.assert_array_equal(h.normal, [2.0, 0.0])
    assert h.offset == 1.0


def test_descent_halfspace_rejects_impossible_degenerate_cut():
    # w == z but w != y with c > 0 would be an empty set
    with pytest.raises(InfeasibleError):
        descent_halfspace([0.0, 0.0], [0.0, 0.0], [1.0, 0.0], 0.25, 0.25, 0.5)


def _classification_agrees(inside_quad, gap_quad, inside_half):
    # points within roundoff of the boundary are not meaningful either way
    clear = np.abs(gap_quad) > 1e-9
    return np.array_equal(inside_quad[clear], inside_half[clear])


def test_descent_halfspace_membership_equivalence(rng):
    for _ in range(10):
        n = rng.integers(1, 6)
        w, z, y = rng.normal(size=(3, n))
        g1 = rng.uniform(0.1, 1.0)
        g2 = rng.uniform(0.5 * g1, g1)
        mu = rng.uniform(0.05, 0.95)
        h = descent_halfspace(w, z, y, g1, g2, mu)
        c = 1 - mu ** 2 * g1 ** 2 / g2 ** 2
        U = rng.normal(size=(10_000, n)) * 3
        quad = (np.sum((z - U) ** 2, axis=1)
                - np.sum((w - U) ** 2, axis=1) + c * np.sum((w - y) ** 2))
        assert _classification_agrees(quad <= 0, quad, U @ h.normal <= h.offset)


def test_anchor_halfspace_examples_and_equivalence(rng):
    assert anchor_halfspace([1.0, 2.0], [1.0, 2.0]).trivial
    h = anchor_halfspace([1.0, 0.0], [0.0, 0.0])
    assert h.contains([1.0, 5.0]) and h.contains([3.0, 0.0]) and not h.contains([0.5, 0.0])
    for _ in range(10):
        n = rng.integers(1, 6)
        x, x0 = rng.normal(size=(2, n))
        h = anchor_halfspace(x, x0)
        U = rng.normal(size=(10_000, n)) * 3
        val = (x - U) @ (x - x0)
        assert _classification_agrees(val <= 0, val, U @ h.normal <= h.offset)


def test_two_halfspaces_examples():
    h1, h2 = HalfSpace([1.0, 0.0], 0.0), HalfSpace([0.0, 1.0], 0.0)
    np.testing.assert_array_equal(project_two_halfspaces([-1.0, -2.0], h1, h2), [-1.0, -2.0])
    np.testing.assert_array_equal(project_two_halfspaces([1.0, 1.0], h1, h2), [0.0, 0.0])


def test_two_halfspaces_degenerate_cases():
    h = HalfSpace([1.0, 1.0], 0.0)
    tighter = HalfSpace([2.0, 2.0], -2.0)
    np.testing.assert_allclose(project_two_halfspaces([1.0, 1.0], h, tighter), [-0.5, -0.5])
    np.testing.assert_allclose(
        project_two_halfspaces([1.0, 1.0], HalfSpace.whole_space(2), h), [0.0, 0.0])
    with pytest.raises(InfeasibleError):
        project_two_halfspaces([0.0, 0.0], HalfSpace([1.0, 0.0], -1.0),
                               HalfSpace([-1.0, 0.0], -1.0))


def test_two_halfspaces_match_dykstra_and_grid(rng):
    for _ in range(100):
        A, b, centre = random_polytope(rng, 2, 2)
        x0 = centre + rng.normal(size=2) * 4
        p = project_two_halfspaces(x0, HalfSpace(A[0], b[0]), HalfSpace(A[1], b[1]))
        np.testing.assert_allclose(p, classical_dykstra(x0, A, b, 10_000), atol=1e-9)
        np.testing.assert_allclose(p, grid_refine_2d(x0, A, b), atol=1e-9)


def test_two_halfspaces_match_dykstra_higher_dim(rng):
    for _ in range(100):
        n = rng.integers(2, 7)
        A, b, centre = random_polytope(rng, 2, n)
        x0 = centre + rng.normal(size=n) * 4
        p = project_two_halfspaces(x0, HalfSpace(A[0], b[0]), HalfSpace(A[1], b[1]))
        np.testing.assert_allclose(p, classical_dykstra(x0, A, b, 10_000), atol=1e-9)


def test_stack_single_and_pair(rng):
    for _ in range(50):
        A, b, centre = random_polytope(rng, 2, 3)
        x0 = centre + rng.normal(size=3) * 4
        h1, h2 = HalfSpace(A[0], b[0]), HalfSpace(A[1], b[1])
        one = HalfSpaceStack(3)
        one.append(h1)
        np.testing.assert_allclose(project_halfspace_stack(x0, one), project_halfspace(x0, h1),
                                   atol=1e-14)
        one.append(h2)
        np.testing.assert_allclose(project_halfspace_stack(x0, one),
                                   project_two_halfspaces(x0, h1, h2), atol=1e-8)


def test_stack_matches_active_set_enumeration(rng):
    for _ in range(100):
        n = rng.integers(2, 5)
        A, b, centre = random_polytope(rng, 5, n)
        x0 = centre + rng.normal(size=n) * 5
        stack = HalfSpaceStack(n)
        for a, beta in zip(A, b):
            stack.append(HalfSpace(a, beta))
        np.testing.assert_allclose(project_halfspace_stack(x0, stack),
                                   enumerate_active_sets(x0, A, b), atol=1e-8)


def test_stack_behaviour():
    stack = HalfSpaceStack(2)
    assert len(stack) == 0
    np.testing.assert_array_equal(project_halfspace_stack([3.0, 4.0], stack), [3.0, 4.0])
    stack.append(HalfSpace.whole_space(2))
    assert len(stack) == 0
    for k in range(40):
        stack.append(HalfSpace([1.0, 0.0], float(k)))
    assert len(stack) == 40 and stack.normals.shape == (40, 2)
    assert stack.contains([0.0, 0.0]) and not stack.contains([0.5, 0.0])
    with pytest.raises(DimensionError):
        stack.append(HalfSpace([1.0, 0.0, 0.0], 0.0))


def test_dykstra_warm_start_and_budget(rng):
    A, b, centre = random_polytope(rng, 6, 3)
    x0 = centre + 10 * rng.normal(size=3)
    x, lam, _ = dykstra_halfspaces(x0, A, b)
    assert np.all(lam >= 0)
    np.testing.assert_allclose(x, x0 - A.T @ lam, atol=1e-12)
    x2, _, sweeps = dykstra_halfspaces(x0, A, b, multipliers=lam)
    np.testing.assert_allclose(x2, x, atol=1e-12)
    assert sweeps <= 2
    B = np.array([[1.0, 0.0], [np.cos(1e-4), np.sin(1e-4)]])
    with pytest.raises(ProjectionConvergenceError):
        dykstra_halfspaces(np.array([5.0, 5.0]), B, np.zeros(2), max_sweeps=3, polish=False)


def _projections(rng, n):
    """Projection operators onto random nonempty sets, each with a feasible sampler."""
    A, b, centre = random_polytope(rng, 5, n)
    h1, h2 = HalfSpace(A[0], b[0]), HalfSpace(A[1], b[1])
    stack = HalfSpaceStack(n)
    for a, beta in zip(A, b):
        stack.append(HalfSpace(a, beta))
    M, r = rng.normal(size=(1, n)), rng.normal(size=1)
    aff = AffineSet(M, r)
    return {
        "halfspace": (lambda x: project_halfspace(x, h1), A[:1], b[:1], None),
        "two": (lambda x: project_two_halfspaces(x, h1, h2), A[:2], b[:2], None),
        "stack": (lambda x: project_halfspace_stack(x, stack), A, b, None),
        "affine": (lambda x: project_affine(x, aff), None, None, aff),
    }


@pytest.mark.parametrize("kind", ["halfspace", "two", "stack", "affine"])
def test_projection_properties(rng, kind):
    for _ in range(100):
        n = int(rng.integers(2, 5))
        P, A, b, aff = _projections(rng, n)[kind]
        x, y = rng.normal(size=(2, n)) * 4
        px, py = P(x), P(y)
        np.testing.assert_allclose(P(px), px, atol=1e-12)
        assert np.linalg.norm(px - py) <= np.linalg.norm(x - y) + 1e-12
        feasible = P(rng.normal(size=n) * 4)
        assert (px - x) @ (px - feasible) <= 1e-10
        assert (np.sum((feasible - px) ** 2) + np.sum((x - px) ** 2)
                <= np.sum((x - feasible) ** 2) + 1e-10)
