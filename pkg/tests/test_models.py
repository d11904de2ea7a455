"""Model nonlinearities, parameter validation, and assumption checks."""

import math

import numpy as np
import pytest

from conftest import colony_nonlinearities
from ecolisim.errors import ConfigurationError, DomainError
from ecolisim.models import (
    ModelParams,
    NonlinearitySpec,
    constant_death,
    death_rate_at_zero,
    eval_death,
    eval_growth,
    eval_sensitivity,
    growth_bound,
    linear_sensitivity,
    rational_death,
    saturating_sensitivity,
    tabulated_death,
    tabulated_growth,
    tanh_growth,
    validate_assumptions,
    zero_growth,
)


def test_tanh_growth_values():
    g = tanh_growth(scale=1.0, steepness=100.0, offset=0.05)
    # exactly half the plateau at the switch point
    assert eval_growth(g, 0.05) == pytest.approx(0.5, rel=1e-12)
    # essentially off below the switch, fully on above it
    assert 0.0 < eval_growth(g, 0.0) < 1e-4
    assert eval_growth(g, 0.5) == pytest.approx(1.0, rel=1e-12)
    u = np.linspace(0.0, 1.0, 501)
    vals = np.asarray(eval_growth(g, u))
    assert np.all(np.diff(vals) >= 0.0)
    assert growth_bound(g) == 1.0


def test_tanh_growth_scale_applies():
    g = tanh_growth(scale=2.5, steepness=10.0, offset=0.2)
    assert eval_growth(g, 0.2) == pytest.approx(1.25, rel=1e-12)
    assert growth_bound(g) == 2.5


def test_zero_growth():
    g = zero_growth()
    assert eval_growth(g, 0.7) == 0.0
    assert np.all(np.asarray(eval_growth(g, np.linspace(0, 5, 11))) == 0.0)
    assert growth_bound(g) == 0.0


def test_tabulated_growth_interpolates_and_clamps():
    g = tabulated_growth([0.0, 1.0, 2.0], [0.0, 0.5, 0.5])
    assert eval_growth(g, 0.5) == pytest.approx(0.25)
    assert eval_growth(g, 5.0) == pytest.approx(0.5)  # clamped right
    assert growth_bound(g) == 0.5


def test_table_validation():
    with pytest.raises(ConfigurationError):
        tabulated_growth([0.0], [1.0])
    with pytest.raises(ConfigurationError):
        tabulated_growth([0.0, 0.0], [1.0, 1.0])
    with pytest.raises(ConfigurationError):
        tabulated_growth([-1.0, 1.0], [0.0, 0.0])
    with pytest.raises(ConfigurationError):
        tabulated_death([0.0, float("nan")], [1.0, 1.0])


def test_death_rates():
    b = constant_death(0.05)
    assert eval_death(b, 3.0) == 0.05
    assert death_rate_at_zero(b) == 0.05

    br = rational_death(0.2, 1.5)
    assert eval_death(br, 0.0) == pytest.approx(0.2)
    assert eval_death(br, 2.0) == pytest.approx(0.2 / 4.0)
    assert death_rate_at_zero(br) == 0.2
    n = np.linspace(0.0, 10.0, 101)
    vals = np.asarray(eval_death(br, n))
    assert np.all(np.diff(vals) <= 0.0)

    bt = tabulated_death([0.0, 1.0], [0.3, 0.1])
    assert eval_death(bt, 0.5) == pytest.approx(0.2)
    assert death_rate_at_zero(bt) == pytest.approx(0.3)


def test_death_constructor_validation():
    with pytest.raises(ConfigurationError):
        constant_death(-0.1)
    with pytest.raises(ConfigurationError):
        rational_death(0.1, -1.0)
    with pytest.raises(ConfigurationError):
        constant_death(float("nan"))


def test_linear_sensitivity():
    s = linear_sensitivity(0.053)
    chi, dchi = eval_sensitivity(s, 2.0)
    assert chi == pytest.approx(0.106, rel=1e-12)
    assert dchi == pytest.approx(0.053, rel=1e-12)


def test_saturating_sensitivity_values():
    s = saturating_sensitivity(0.053, 0.0625)
    # half saturation where c^2 equals the constant
    chi, _ = eval_sensitivity(s, 0.25)
    assert chi == pytest.approx(0.053 / 2.0, rel=1e-12)
    chi_inf, _ = eval_sensitivity(s, 1e6)
    assert chi_inf == pytest.approx(0.053, rel=1e-9)
    chi0, dchi0 = eval_sensitivity(s, 0.0)
    assert chi0 == 0.0 and dchi0 == 0.0


def test_saturating_sensitivity_derivative_matches_finite_difference():
    rng = np.random.default_rng(7)
    s = saturating_sensitivity(0.4, 0.3)
    eps = 1e-6
    for _ in range(50):
        c = float(rng.uniform(0.01, 5.0))
        _, dchi = eval_sensitivity(s, c)
        hi, _ = eval_sensitivity(s, c + eps)
        lo, _ = eval_sensitivity(s, c - eps)
        assert dchi == pytest.approx((hi - lo) / (2 * eps), rel=1e-6, abs=1e-9)


def test_sensitivity_constructor_validation():
    with pytest.raises(ConfigurationError):
        linear_sensitivity(-1.0)
    with pytest.raises(ConfigurationError):
        saturating_sensitivity(0.1, 0.0)


def test_negative_arguments_are_domain_errors():
    with pytest.raises(DomainError):
        eval_growth(tanh_growth(1.0, 10.0, 0.1), -0.5)
    with pytest.raises(DomainError):
        eval_death(constant_death(0.1), np.array([0.5, -0.1]))
    with pytest.raises(DomainError):
        eval_sensitivity(linear_sensitivity(1.0), -2.0)


def test_model_params_validation():
    nl = colony_nonlinearities()
    with pytest.raises(ConfigurationError):
        ModelParams(d_c=0.0, d_n=2.0, alpha=1.0, beta=1.0, gamma=1.0, nonlinearities=nl)
    with pytest.raises(ConfigurationError):
        ModelParams(d_c=10.0, d_n=-1.0, alpha=1.0, beta=1.0, gamma=1.0, nonlinearities=nl)
    with pytest.raises(ConfigurationError):
        ModelParams(d_c=10.0, d_n=2.0, alpha=-0.1, beta=1.0, gamma=1.0, nonlinearities=nl)
    with pytest.raises(ConfigurationError):
        ModelParams(d_c=10.0, d_n=2.0, alpha=1.0, beta=math.inf, gamma=1.0, nonlinearities=nl)
    with pytest.raises(ConfigurationError):
        ModelParams(d_c=10.0, d_n=2.0, alpha=1.0, beta=1.0, gamma=0.0, nonlinearities=nl)
    # alpha = beta = 0 is legal (no chemoattractant production or decay)
    ModelParams(d_c=10.0, d_n=2.0, alpha=0.0, beta=0.0, gamma=1.0, nonlinearities=nl)


def test_validate_assumptions_accepts_colony_set():
    """The switch-like growth leaves g(0) around 5e-5: small enough to
    accept, large enough that the checker says so out loud."""
    report = validate_assumptions(colony_nonlinearities())
    assert report.ok
    assert report.status == "warn"
    warned = {f.clause for f in report.findings if f.status == "warn"}
    assert warned == {"g(0) = 0"}
    assert "b(0) > 0" in {f.clause for f in report.findings}
    assert "overall" in report.format()


def test_validate_assumptions_clean_pass():
    report = validate_assumptions(
        NonlinearitySpec(
            growth=zero_growth(),
            death=rational_death(0.3, 1.0),
            sensitivity=saturating_sensitivity(0.053, 0.0625),
        )
    )
    assert report.status == "pass"


def test_validate_assumptions_flags_zero_death():
    nl = NonlinearitySpec(
        growth=zero_growth(),
        death=constant_death(0.0),
        sensitivity=linear_sensitivity(0.1),
    )
    report = validate_assumptions(nl)
    assert not report.ok
    failed = {f.clause for f in report.findings if f.status == "fail"}
    assert "b(0) > 0" in failed


def test_validate_assumptions_flags_decreasing_growth():
    nl = NonlinearitySpec(
        growth=tabulated_growth([0.0, 1.0, 2.0], [0.0, 1.0, 0.2]),
        death=constant_death(0.1),
        sensitivity=linear_sensitivity(0.1),
    )
    report = validate_assumptions(nl)
    assert report.status == "fail"
    failed = {f.clause for f in report.findings if f.status == "fail"}
    assert "g nondecreasing" in failed


def test_validate_assumptions_flags_growth_with_offset_at_zero():
    """A switch centered at zero leaves g(0) visibly positive, which the
    checker reports as a warning rather than a hard failure."""
    nl = NonlinearitySpec(
        growth=tanh_growth(scale=1.0, steepness=100.0, offset=0.0),
        death=constant_death(0.1),
        sensitivity=linear_sensitivity(0.1),
    )
    report = validate_assumptions(nl)
    assert report.status == "fail"  # g(0) = 0.5 is far beyond the warn band
