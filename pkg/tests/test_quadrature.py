import numpy as np
import pytest

from dskg.quadrature import cumulative_simpson, simpson, simpson_weights
from oracles import richardson_quadrature


@pytest.mark.parametrize("m", range(0, 12))
def test_weights_integrate_cubics_exactly(m):
    h = 0.3
    t = h * np.arange(max(m + 1, 3))
    w = simpson_weights(m, h, n_available=t.size)
    # the single-interval three-point rule is exact only through quadratics
    for deg in range(3 if m == 1 else 4):
        f = t[: w.size] ** deg
        exact = (h * m) ** (deg + 1) / (deg + 1)
        assert np.dot(w, f) == pytest.approx(exact, rel=1e-13, abs=1e-15)


def test_single_interval_without_third_sample_is_trapezoid():
    assert np.allclose(simpson_weights(1, 2.0, n_available=2), [1.0, 1.0])


def test_negative_interval_count_rejected():
    with pytest.raises(ValueError):
        simpson_weights(-1, 0.1)


def test_cumulative_matches_fixed_endpoint_weights():
    rng = np.random.default_rng(4)
    f = rng.normal(size=(40, 3))
    h = 0.05
    run = cumulative_simpson(f, h)
    for m in range(40):
        w = simpson_weights(m, h, n_available=40)
        assert np.allclose(run[m], w @ f[: w.size], rtol=0, atol=1e-14)


def test_cumulative_along_other_axis():
    f = np.sin(np.linspace(0, 2, 21))[None, :].repeat(2, axis=0)
    a = cumulative_simpson(f, 0.1, axis=1)
    b = cumulative_simpson(f.T, 0.1, axis=0).T
    assert np.array_equal(a, b)


def test_short_inputs():
    assert np.array_equal(cumulative_simpson(np.array([3.0]), 1.0), [0.0])
    assert np.allclose(cumulative_simpson(np.array([1.0, 3.0]), 1.0), [0.0, 2.0])


def test_fourth_order_convergence_against_richardson():
    ref = richardson_quadrature(lambda s: np.exp(-s) * np.cos(3 * s), 0.0, 2.0)
    errs = []
    for m in (20, 40, 80):
        t = np.linspace(0, 2, m + 1)
        errs.append(abs(simpson(np.exp(-t) * np.cos(3 * t), 2.0 / m) - ref))
    assert errs[0] / errs[1] == pytest.approx(16.0, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(16.0, rel=0.1)
