import numpy as np
import pytest

from bellsub import martingales as mg
from bellsub import weights as wt
from bellsub.errors import InvalidInputError, SubordinationError


def test_martingale_property_exact():
    X = mg.random_martingale(mg.SimConfig(depth=6, dim=3, seed=1))
    for k in range(X.depth):
        avg = 0.5 * (X.levels[k + 1][0::2] + X.levels[k + 1][1::2])
        assert np.array_equal(avg, X.levels[k])


def test_constant_leaves_have_zero_increments():
    X = mg.DyadicMartingale.from_leaves(np.tile([2.0, -1.0], (8, 1)))
    for inc in X.increments():
        assert np.array_equal(inc, np.zeros_like(inc))


def test_sibling_increments_are_opposite():
    X = mg.random_martingale(mg.SimConfig(depth=5, dim=2, seed=2))
    for inc in X.increments():
        # equal up to the rounding residue of the parent average
        assert np.allclose(inc[0::2], -inc[1::2], rtol=0, atol=1e-14)


def test_terminal_second_moment_close_to_dim():
    X = mg.random_martingale(mg.SimConfig(depth=10, dim=3, seed=3))
    m2 = np.mean(np.sum(X.leaves ** 2, axis=1))
    assert abs(m2 - 3.0) / 3.0 < 0.05


def test_square_bracket_identity():
    X = mg.random_martingale(mg.SimConfig(depth=8, dim=2, seed=4))
    total = float(np.sum(X.initial ** 2))
    for k, inc in enumerate(X.increments(), start=1):
        total += float(np.sum(inc ** 2)) * 2.0 ** (-k)
    assert mg.unweighted_norm(X) ** 2 == pytest.approx(total, rel=1e-12)


def test_transform_identity_and_negation():
    X = mg.random_martingale(mg.SimConfig(depth=5, dim=2, seed=5))
    s0, sig = mg.constant_multiplier(X.depth, 1.0)
    Y = mg.transform(X, sig, s0)
    # reassembly from increments rounds once per level
    assert all(np.allclose(a, b, rtol=1e-13, atol=1e-14)
               for a, b in zip(Y.levels, X.levels))
    s0, sig = mg.constant_multiplier(X.depth, -1.0)
    Yn = mg.transform(X, sig, s0)
    assert all(np.allclose(a, -b, rtol=1e-13, atol=1e-14)
               for a, b in zip(Yn.levels, X.levels))
    assert mg.unweighted_norm(Yn) == pytest.approx(mg.unweighted_norm(X), rel=1e-13)


def test_transform_alternating_signs_subordinate():
    X = mg.random_martingale(mg.SimConfig(depth=6, dim=2, seed=6))
    sig = [np.where(np.arange(2 ** k) % 2 == 0, 1.0, -1.0) for k in range(X.depth)]
    Y = mg.transform(X, sig, sigma0=-1.0)
    assert mg.check_subordination(X, Y).ok


def test_transform_rejects_large_sigma():
    X = mg.random_martingale(mg.SimConfig(depth=3, dim=1, seed=7))
    sig = [np.ones(1), np.ones(2), np.ones(4)]
    sig[1][0] = 1.5
    with pytest.raises(SubordinationError):
        mg.transform(X, sig)


def test_rotation_transform_subordinate_but_not_multiplier():
    rng = np.random.default_rng(8)
    X = mg.random_martingale(mg.SimConfig(depth=6, dim=2, seed=8), rng)
    Y = mg.rotation_transform(X, rng)
    assert mg.check_subordination(X, Y).ok
    # some increment is not a scalar multiple of its source
    ddx = X.increments()[2][0]
    ddy = Y.increments()[2][0]
    cross = abs(ddx[0] * ddy[1] - ddx[1] * ddy[0])
    assert cross > 1e-10


def test_check_subordination_reports_first_violation():
    X = mg.random_martingale(mg.SimConfig(depth=4, dim=2, seed=9))
    pair = mg.check_subordination(X, X.scaled(2.0))
    assert not pair.ok and pair.first_violation == (0, 0)
    with pytest.raises(InvalidInputError):
        mg.check_subordination(X, mg.random_martingale(mg.SimConfig(depth=3, dim=2, seed=9)))


def test_weighted_norm_cases():
    X = mg.random_martingale(mg.SimConfig(depth=6, dim=2, seed=10))
    ones = wt.WeightTree(np.ones(2 ** 6))
    assert mg.weighted_norm(X, ones) == pytest.approx(mg.unweighted_norm(X), rel=1e-14)
    w = wt.power_weight_family(-0.5, 6)
    C = mg.DyadicMartingale.from_leaves(np.tile([1.5, 0.5], (2 ** 6, 1)))
    expect = np.sqrt(2.5) * np.sqrt(np.mean(w.leaf_values))
    assert mg.weighted_norm(C, w) == pytest.approx(expect, rel=1e-14)
    assert mg.weighted_norm(X.scaled(3.0), w) == pytest.approx(
        3.0 * mg.weighted_norm(X, w), rel=1e-14)


def test_bilinear_form_polarization_and_flip():
    X = mg.random_martingale(mg.SimConfig(depth=6, dim=2, seed=11))
    norm2 = mg.unweighted_norm(X) ** 2
    assert mg.bilinear_form(X, X) == pytest.approx(norm2, rel=1e-12)
    rng = np.random.default_rng(12)
    sig = [np.where(rng.standard_normal(2 ** k) > 0, 1.0, -1.0) for k in range(X.depth)]
    Z = mg.transform(X, sig, sigma0=-1.0)
    assert mg.bilinear_form(X, Z) == pytest.approx(mg.bilinear_form(X, X), rel=1e-12)


def test_bilinear_form_dominates_terminal_pairing():
    rng = np.random.default_rng(13)
    for trial in range(1000):
        depth = int(rng.integers(1, 6))
        cfgA = mg.SimConfig(depth=depth, dim=2, seed=1000 + trial)
        Y = mg.random_martingale(cfgA, rng)
        Z = mg.random_martingale(cfgA, rng)
        pairing = abs(float(np.mean(np.sum(Y.leaves * Z.leaves, axis=1))))
        assert pairing <= mg.bilinear_form(Y, Z) + 1e-12


def test_serialization_roundtrip():
    X = mg.random_martingale(mg.SimConfig(depth=4, dim=3, seed=14))
    text = mg.dumps(X)
    back = mg.loads(text)
    assert back.depth == X.depth and back.dim == X.dim
    assert all(np.array_equal(a, b) for a, b in zip(back.levels, X.levels))
    with pytest.raises(InvalidInputError):
        mg.loads("depth 2\n1.0\n")


def test_bracket_difference_running_sums():
    """Node-wise |dY| <= |dX| is the same as the running bracket difference
    sums being nonnegative and nondecreasing along every path."""
    rng = np.random.default_rng(15)
    X = mg.random_martingale(mg.SimConfig(depth=6, dim=2, seed=15), rng)
    Y = mg.rotation_transform(X, rng)
    Y = mg.DyadicMartingale([0.5 * lev for lev in Y.levels])
    assert mg.check_subordination(X, Y).ok
    n = X.depth
    dXs, dYs = X.increments(), Y.increments()
    for leaf in range(2 ** n):
        run = float(X.initial @ X.initial - Y.initial @ Y.initial)
        assert run >= -1e-12
        for k in range(1, n + 1):
            node = leaf >> (n - k)
            step = float(dXs[k - 1][node] @ dXs[k - 1][node]
                         - dYs[k - 1][node] @ dYs[k - 1][node])
            assert step >= -1e-12          # nondecreasing
            run += step
            assert run >= -1e-12           # nonnegative


def test_weighted_norm_is_terminal_supremum():
    from bellsub import weights as wt
    rng = np.random.default_rng(16)
    X = mg.random_martingale(mg.SimConfig(depth=7, dim=2, seed=16), rng)
    w = wt.WeightTree(np.exp(rng.normal(0, 1, 2 ** 7)))
    terminal = mg.weighted_norm(X, w)
    n = X.depth
    for k in range(n + 1):
        level_vals = np.repeat(np.sum(X.levels[k] ** 2, axis=1), 2 ** (n - k))
        norm_k = float(np.sqrt(np.mean(level_vals * w.leaf_values)))
        assert norm_k <= terminal + 1e-12
