import numpy as np
import pytest

from cpfilter.exceptions import ConvergenceError
from cpfilter.fused import fused_lasso_1d
from cpfilter.graph import (Graph, graph_changepoints, graph_fused_lasso,
                            graph_min_gap, graph_min_spacing_bruteforce,
                            graph_objective, graph_screening_distance,
                            grid2d)
from cpfilter.metrics import min_spacing

INF = float("inf")


def chain(n):
    return grid2d(1, n)


def test_graph_validation():
    with pytest.raises(ValueError):
        Graph(3, [[1, 1]])  # self loop
    with pytest.raises(ValueError):
        Graph(3, [[1, 2], [2, 1]])  # duplicate after normalization
    with pytest.raises(ValueError):
        Graph(3, [[0, 1]])  # ids are 1-based
    with pytest.raises(ValueError):
        Graph(3, [[1, 4]])


def test_grid2d_shapes():
    assert chain(7).n_edges == 6
    assert grid2d(2, 2).n_edges == 4
    assert grid2d(3, 3).n_edges == 12
    g = grid2d(4, 5)
    assert g.n_nodes == 20
    assert g.n_edges == 2 * 4 * 5 - 4 - 5


def test_lambda_zero_returns_data():
    rng = np.random.default_rng(0)
    y = rng.standard_normal(9)
    fit = graph_fused_lasso(y, grid2d(3, 3), 0.0)
    assert np.array_equal(fit.theta_hat, y)


def test_two_node_closed_form():
    fit = graph_fused_lasso(np.array([0.0, 2.0]), Graph(2, [[1, 2]]), 0.5,
                            tol=1e-12)
    assert fit.theta_hat == pytest.approx([0.5, 1.5], abs=1e-5)


def test_chain_matches_dp():
    rng = np.random.default_rng(1)
    for _ in range(10):
        n = int(rng.integers(2, 60))
        y = rng.standard_normal(n)
        lam = float(rng.uniform(0.05, 2.0))
        via_graph = graph_fused_lasso(y, chain(n), lam, tol=1e-12).theta_hat
        via_dp = fused_lasso_1d(y, lam).theta_hat
        assert np.max(np.abs(via_graph - via_dp)) < 1e-5


def test_perturbation_optimality():
    rng = np.random.default_rng(2)
    g = grid2d(4, 4)
    y = rng.standard_normal(16)
    lam = 0.7
    fit = graph_fused_lasso(y, g, lam, tol=1e-12)
    base = graph_objective(y, fit.theta_hat, g, lam)
    for _ in range(1000):
        delta = rng.standard_normal(16)
        delta *= rng.uniform(1e-4, 1e-1) / np.linalg.norm(delta)
        assert graph_objective(y, fit.theta_hat + delta, g, lam) >= base - 1e-9


def test_heavy_lambda_fuses_connected_graph():
    rng = np.random.default_rng(3)
    y = rng.standard_normal(12)
    fit = graph_fused_lasso(y, grid2d(3, 4), 50.0, tol=1e-11)
    assert fit.theta_hat == pytest.approx(np.full(12, y.mean()), abs=1e-4)


def test_warm_start_agrees():
    rng = np.random.default_rng(4)
    y = rng.standard_normal(20)
    g = grid2d(4, 5)
    cold = graph_fused_lasso(y, g, 0.5, tol=1e-10)
    warm = graph_fused_lasso(y, g, 0.5, tol=1e-10,
                             theta0=cold.theta_hat)
    assert warm.theta_hat == pytest.approx(cold.theta_hat, abs=1e-5)


def test_graph_changepoints():
    g = chain(3)
    assert graph_changepoints(np.zeros(3), g).size == 0
    got = graph_changepoints(np.array([0.0, 0.0, 1.0]), g)
    assert got.tolist() == [[2, 3]]
    # 2x2 grid, rows at different levels: the two vertical edges differ
    got2 = graph_changepoints(np.array([0.0, 0.0, 1.0, 1.0]), grid2d(2, 2))
    assert got2.tolist() == [[1, 3], [2, 4]]


def test_graph_screening_distance():
    g = chain(5)
    e = lambda i, j: np.array([[i, j]])
    assert graph_screening_distance(e(1, 2), e(1, 2), g) == 0.0
    assert graph_screening_distance(e(1, 2), e(4, 5), g) == 2.0
    assert graph_screening_distance(e(1, 2), e(2, 3), g) == 0.0
    # empty-set conventions mirror the 1-d distances
    empty = np.empty((0, 2), dtype=int)
    assert graph_screening_distance(e(1, 2), empty, g) == 0.0
    assert graph_screening_distance(empty, e(1, 2), g) == INF


def test_graph_screening_distance_bounded_by_diameter():
    rng = np.random.default_rng(5)
    g = grid2d(4, 4)
    diameter = 6  # (4-1) + (4-1) hops
    edges = g.edges
    for _ in range(50):
        a = edges[rng.choice(g.n_edges, size=3, replace=False)]
        b = edges[rng.choice(g.n_edges, size=3, replace=False)]
        assert graph_screening_distance(a, b, g) <= diameter


def test_graph_screening_validates_membership():
    g = chain(4)
    with pytest.raises(ValueError):
        graph_screening_distance(np.array([[1, 3]]), np.array([[1, 2]]), g)


def test_graph_min_gap():
    theta = np.array([0.0, 0.0, 1.0, 1.0])
    assert graph_min_gap(theta, grid2d(2, 2)) == pytest.approx(1.0)
    assert graph_min_gap(np.zeros(4), grid2d(2, 2)) == INF


def test_changepoint_count_shrinks_with_lambda():
    sizes = {0.1: [], 1.0: [], 10.0: []}
    g = grid2d(4, 4)
    for seed in range(30):
        rng = np.random.default_rng(seed)
        y = rng.standard_normal(16) * 2.0
        for lam in sizes:
            fit = graph_fused_lasso(y, g, lam, tol=1e-10)
            jt = 2.0 * np.sqrt(2.0 * 1e-10 * (1 + abs(fit.objective)))
            sizes[lam].append(graph_changepoints(fit.theta_hat, g,
                                                 tol=jt).shape[0])
    med = [np.median(sizes[lam]) for lam in sorted(sizes)]
    assert med[0] >= med[1] >= med[2]


def test_min_spacing_bruteforce_chain_single_jump():
    # chain of 10 with one jump: longest one-sided path within a cluster
    # counts edges, so it comes out one below the segment length
    theta = np.repeat([0.0, 1.0], 5)
    g = chain(10)
    w = graph_min_spacing_bruteforce(theta, g)
    assert w == min_spacing([5], 10) - 1 == 4


def test_min_spacing_bruteforce_random_chains():
    rng = np.random.default_rng(6)
    for _ in range(20):
        n = int(rng.integers(4, 13))
        k = int(rng.integers(1, 3))
        cps = np.sort(rng.choice(np.arange(1, n), size=k, replace=False))
        theta = np.repeat(np.arange(k + 1, dtype=float),
                          np.diff(np.r_[0, cps, n]))
        got = graph_min_spacing_bruteforce(theta, chain(n))
        assert got == min_spacing(cps, n) - 1


def test_min_spacing_bruteforce_conventions():
    assert graph_min_spacing_bruteforce(np.zeros(6), chain(6)) == 6
    with pytest.raises(ValueError):
        graph_min_spacing_bruteforce(np.zeros(25), chain(25))


def test_convergence_error_exposed():
    rng = np.random.default_rng(7)
    y = rng.standard_normal(16)
    with pytest.raises(ConvergenceError):
        graph_fused_lasso(y, grid2d(4, 4), 1.0, tol=1e-14, max_iter=2)
