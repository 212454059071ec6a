import numpy as np
import pytest

from cpfilter.metrics import (changepoints, default_jump_tol, hausdorff,
                              knots2, min_gap, min_gap2, min_spacing,
                              screening_distance, second_differences, tv,
                              tv2)

INF = float("inf")


def test_changepoints_constant():
    assert changepoints([1.0, 1.0, 1.0]).size == 0


def test_changepoints_basic():
    got = changepoints([0, 0, 2, 2, 2, 5])
    assert got.tolist() == [2, 5]


def test_changepoints_tolerance_suppresses_tiny_jump():
    got = changepoints([0.0, 1e-12, 1.0], tol=1e-9)
    assert got.tolist() == [2]


def test_changepoints_length_one():
    assert changepoints([3.0]).size == 0


def test_tv_constant_and_hat():
    assert tv(np.full(7, 2.5)) == 0.0
    assert tv([0.0, 1.0, 0.0]) == 2.0


def test_tv_level_sequence():
    theta = np.repeat([0.0, 2.0, 4.0, 1.0, 4.0], 20)
    assert tv(theta) == pytest.approx(10.0)


def test_screening_distance_hand_values():
    assert screening_distance([3], [1, 5]) == 2.0
    assert screening_distance([2, 9], [2, 9]) == 0.0


def test_screening_distance_empty_conventions():
    assert screening_distance([], [4]) == INF
    assert screening_distance([4], []) == 0.0
    assert screening_distance([], []) == 0.0


def test_hausdorff():
    assert hausdorff([3], [1, 5]) == 2.0
    assert hausdorff([1, 5], [3]) == 2.0
    assert hausdorff([7], [7]) == 0.0
    assert hausdorff([], [1]) == INF
    assert hausdorff([], []) == 0.0


def test_hausdorff_symmetric_random():
    rng = np.random.default_rng(0)
    for _ in range(50):
        a = np.unique(rng.integers(1, 100, size=rng.integers(1, 8)))
        b = np.unique(rng.integers(1, 100, size=rng.integers(1, 8)))
        assert hausdorff(a, b) == hausdorff(b, a)
        assert hausdorff(a, a) == 0.0
        # one-sided distances never exceed the symmetrized one
        assert screening_distance(a, b) <= hausdorff(a, b)


def test_min_spacing():
    assert min_spacing([], 10) == 10
    assert min_spacing([2, 5], 10) == 2
    layout = changepoints(np.repeat([0.0, 2.0, 4.0, 1.0, 4.0], 20))
    assert min_spacing(layout, 100) == 20


def test_min_spacing_validates_range():
    with pytest.raises(ValueError):
        min_spacing([0], 10)
    with pytest.raises(ValueError):
        min_spacing([10], 10)


def test_min_gap():
    # levels 0,2,4,1,4 -> consecutive level gaps 2,2,3,3
    theta = np.repeat([0.0, 2.0, 4.0, 1.0, 4.0], 20)
    assert min_gap(theta) == pytest.approx(2.0)
    assert min_gap(np.zeros(5)) == INF
    assert min_gap([0.0, 5.0]) == 5.0


def test_second_difference_family():
    # slope 0.5 is exactly representable, so the second differences vanish
    x = 0.5 * np.arange(10) - 3.0
    assert tv2(x) == 0.0
    assert knots2(x).size == 0
    assert min_gap2(x) == INF

    assert tv2([0.0, 1.0, 0.0]) == pytest.approx(2.0)
    assert knots2([0.0, 1.0, 0.0]).tolist() == [2]
    assert min_gap2([0.0, 1.0, 0.0]) == pytest.approx(2.0)


def test_knots2_tolerance():
    x = 0.7 * np.arange(10) - 3.0  # fp dust in the second differences
    assert knots2(x, tol=1e-12).size == 0


def test_second_differences_values():
    x = np.array([0.0, 1.0, 3.0, 2.0])
    d = second_differences(x)
    assert d == pytest.approx([1.0, -3.0])


def test_default_jump_tol_scales_with_signal():
    small = default_jump_tol(np.zeros(4))
    big = default_jump_tol(1e6 * np.ones(4))
    assert small == pytest.approx(1e-9)
    assert big > 1e-4


def test_signal_validation():
    with pytest.raises(ValueError):
        tv(np.array([1.0, np.nan]))
    with pytest.raises(ValueError):
        tv(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        tv(np.array([]))
