import numpy as np
import pytest
from scipy.integrate import quad

from fraclap import Kernel, build_interval_mesh, build_rectangle_mesh
from fraclap.errors import ConfigurationError, EvaluationError
from fraclap.kernel import (
    TABULATED,
    _tabulated_tail,
    evaluate,
    exterior_weight,
    validate_conditions,
)


def power_table(n, s, lo=1e-6, hi=1e6, m=200):
    """Tabulated sampling of the pure power kernel for cross-checks."""
    r = np.logspace(np.log10(lo), np.log10(hi), m)
    return Kernel(n=n, s=s, variant=TABULATED, table_r=r, table_v=r ** (-(n + 2 * s)))


@pytest.mark.parametrize("n,s", [(1, 0.25), (1, 0.5), (2, 0.75)])
def test_radial_power_law(n, s):
    kernel = Kernel(n=n, s=s)
    r = np.array([0.1, 1.0, 7.3])
    assert np.allclose(kernel.radial(r), r ** (-(n + 2 * s)))


def test_radial_rejects_nonpositive_radius():
    with pytest.raises(EvaluationError):
        Kernel(n=1, s=0.5).radial(0.0)


def test_evaluate_at_points():
    kernel = Kernel(n=2, s=0.5)
    assert evaluate(kernel, [3.0, 4.0]) == pytest.approx(5.0 ** (-3.0))
    with pytest.raises(EvaluationError):
        evaluate(kernel, [0.0, 0.0])


@pytest.mark.parametrize("bad", [
    dict(n=3, s=0.5),
    dict(n=1, s=0.0),
    dict(n=1, s=1.0),
    dict(n=1, s=0.5, beta=-1.0),
])
def test_kernel_rejects_bad_parameters(bad):
    with pytest.raises(ConfigurationError):
        Kernel(**bad)


def test_tabulated_requires_valid_table():
    with pytest.raises(ConfigurationError):
        Kernel(n=1, s=0.5, variant=TABULATED,
               table_r=np.array([1.0, 0.5]), table_v=np.array([1.0, 1.0]))
    with pytest.raises(ConfigurationError):
        Kernel(n=1, s=0.5, variant=TABULATED,
               table_r=np.array([0.5, 1.0]), table_v=np.array([1.0, -1.0]))


def test_tabulated_interpolation_matches_sampled_power():
    kernel = power_table(1, 0.5)
    r = np.array([1e-3, 0.07, 12.0])
    assert np.allclose(kernel.radial(r), r ** (-2.0), rtol=1e-12)


@pytest.mark.parametrize("n,s", [(1, 0.25), (1, 0.5), (1, 0.75), (2, 0.5)])
def test_validate_conditions_model_kernel(n, s):
    cert = validate_conditions(Kernel(n=n, s=s))
    assert cert["k1"] and cert["k2"] and cert["k3"]
    assert cert["n_gt_2s"] == (n > 2 * s)


def test_validate_conditions_flags_broken_lower_bound():
    """Inflating beta above the actual profile must fail (k2)."""
    cert = validate_conditions(Kernel(n=1, s=0.5, beta=2.0))
    assert not cert["k2"]


def test_validate_conditions_tabulated_power():
    cert = validate_conditions(power_table(1, 0.5))
    assert cert["k1"] and cert["k2"] and cert["k3"]


def test_exterior_weight_interval_closed_form():
    mesh = build_interval_mesh(0.0, 1.0, 4)
    kernel = Kernel(n=1, s=0.5)
    # ((x-a)^(-2s) + (b-x)^(-2s)) / (2s) at x = 1/4 gives 4 + 4/3
    assert exterior_weight(kernel, mesh, 0.25) == pytest.approx(16.0 / 3.0, rel=1e-13)
    assert exterior_weight(kernel, mesh, 0.5) == pytest.approx(4.0, rel=1e-13)


def test_exterior_weight_rejects_boundary_point():
    mesh = build_interval_mesh(0.0, 1.0, 4)
    with pytest.raises(EvaluationError):
        exterior_weight(Kernel(n=1, s=0.5), mesh, 1.0)


def test_exterior_weight_rectangle_center():
    """Polar-form weight at the center of the unit square vs a direct
    angular quadrature of the fractional tail."""
    mesh = build_rectangle_mesh((0.0, 1.0), (0.0, 1.0), 2, 2)
    s = 0.4
    kernel = Kernel(n=2, s=s)

    def radial_tail(theta):
        # distance from (1/2, 1/2) to the square boundary along theta
        c, sn = np.cos(theta), np.sin(theta)
        r = np.inf
        if c > 0:
            r = min(r, 0.5 / c)
        if c < 0:
            r = min(r, -0.5 / c)
        if sn > 0:
            r = min(r, 0.5 / sn)
        if sn < 0:
            r = min(r, -0.5 / sn)
        return r ** (-2.0 * s) / (2.0 * s)

    ref, _ = quad(radial_tail, 0.0, 2.0 * np.pi, limit=400,
                  points=[np.pi / 4, 3 * np.pi / 4, 5 * np.pi / 4, 7 * np.pi / 4])
    got = exterior_weight(kernel, mesh, np.array([0.5, 0.5]))
    assert got == pytest.approx(ref, rel=1e-10)


def test_tabulated_tail_matches_power_closed_form():
    """Piecewise-power tail integration is exact when the table samples a
    pure power, since log-log interpolation reproduces it segment-wise."""
    p = 2.0 + 2.0 * 0.4
    kernel = power_table(2, 0.4, lo=1e-4, hi=1e4, m=400)
    for d, moment in ((0.2, 0), (0.7, 1), (3.0, 1), (1e-6, 0)):
        exact = d ** (moment - p + 1) / (p - moment - 1)
        assert _tabulated_tail(kernel, d, moment) == pytest.approx(exact, rel=1e-11)


def test_tabulated_tail_requires_integrable_far_slope():
    r = np.array([0.1, 1.0, 10.0])
    fat = Kernel(n=1, s=0.4, variant=TABULATED, table_r=r, table_v=1.0 / r)
    with pytest.raises(EvaluationError):
        _tabulated_tail(fat, 0.5, moment=1)  # slope -1 plus moment 1 diverges
