"""Time stepping: stability control, conservation, termination causes."""

import numpy as np
import pytest

from conftest import (
    colony_nonlinearities,
    decay_nonlinearities,
    flat_state,
    gaussian_state,
    make_grid_1d,
    make_grid_2d,
    random_state,
)
from ecolisim.diagnostics import check_monotonicity
from ecolisim.errors import ConfigurationError
from ecolisim.grid import Field, laplacian_neumann
from ecolisim.models import (
    ModelParams,
    NonlinearitySpec,
    constant_death,
    linear_sensitivity,
    zero_growth,
)
from ecolisim.stepper import (
    EllipticSolveSettings,
    Schedule,
    SimState,
    StepControl,
    StopRules,
    compute_stable_dt,
    run_simulation,
    solve_elliptic_c,
)


def _params(nl=None, **kw):
    base = dict(d_c=10.0, d_n=2.0, alpha=1.0, beta=1.0, gamma=1.0)
    base.update(kw)
    return ModelParams(nonlinearities=nl or decay_nonlinearities(), **base)


def test_step_control_validation():
    with pytest.raises(ConfigurationError):
        StepControl(dt_min=1e-2, dt_init=1e-3, dt_max=1.0)
    with pytest.raises(ConfigurationError):
        StepControl(dt_init=2.0, dt_max=1.0)
    with pytest.raises(ConfigurationError):
        StepControl(dt_min=0.0, dt_init=0.0, dt_max=0.0)
    with pytest.raises(ConfigurationError):
        StepControl(cfl_advective=0.0)
    with pytest.raises(ConfigurationError):
        StepControl(cfl_advective=1.5)
    with pytest.raises(ConfigurationError):
        StepControl(reaction_safety=-0.2)
    with pytest.raises(ConfigurationError):
        StepControl(mode="implicit_everything")
    with pytest.raises(ConfigurationError):
        StepControl(u_blowup_threshold=0.0)
    StepControl()  # defaults are self-consistent


def test_stop_rules_validation():
    with pytest.raises(ConfigurationError):
        StopRules(eps_steady=0.0)
    with pytest.raises(ConfigurationError):
        StopRules(steady_window=1)
    with pytest.raises(ConfigurationError):
        StopRules(max_steps=0)


def test_schedule_validation():
    with pytest.raises(ConfigurationError):
        Schedule(t_end=0.0)
    with pytest.raises(ConfigurationError):
        Schedule(t_end=1.0, series_interval=0.0)
    with pytest.raises(ConfigurationError):
        Schedule(t_end=1.0, snapshot_interval=-1.0)
    Schedule(t_end=1.0, snapshot_interval=None)


def test_sim_state_grid_mismatch_and_copy():
    g = make_grid_1d(8)
    other = make_grid_1d(9)
    with pytest.raises(ConfigurationError):
        SimState(u=Field.zeros(g), c=Field.zeros(other),
                 n=Field.zeros(g), w=Field.zeros(g))
    s = flat_state(g, u=1.0)
    cp = s.copy()
    cp.u.values[:] = 5.0
    assert s.u.values[0] == 1.0


def test_stable_dt_reaction_bound():
    """With flat c there is no advective limit; the step is set by the
    reaction scale safety / max(G0 * sup n, b(0))."""
    g = make_grid_1d(16)
    state = flat_state(g, u=1.0, c=1.0, n=0.0)
    nl = NonlinearitySpec(zero_growth(), constant_death(2.0), linear_sensitivity(0.1))
    control = StepControl(dt_min=1e-12, dt_init=1.0, dt_max=10.0, reaction_safety=0.9)
    dt, underflow = compute_stable_dt(state, _params(nl), control)
    assert not underflow
    assert dt == pytest.approx(0.45, rel=1e-12)


def test_stable_dt_advective_bound():
    g = make_grid_1d(16, 1.6)  # h = 0.1
    x = g.axis_centers(0)
    state = SimState(u=Field.full(g, 1.0), c=Field(g, x.copy()),
                     n=Field.zeros(g), w=Field.zeros(g))
    nl = NonlinearitySpec(zero_growth(), constant_death(1e-12), linear_sensitivity(1.0))
    control = StepControl(dt_min=1e-12, dt_init=1.0, dt_max=10.0, cfl_advective=0.3)
    dt, underflow = compute_stable_dt(state, _params(nl), control)
    # grad chi(c) = 1, so dt = cfl * h
    assert not underflow
    assert dt == pytest.approx(0.03, rel=1e-9)


def test_stable_dt_underflow_flag():
    g = make_grid_1d(16, 1.6)
    x = g.axis_centers(0)
    state = SimState(u=Field.full(g, 1.0), c=Field(g, 100.0 * x),
                     n=Field.zeros(g), w=Field.zeros(g))
    nl = NonlinearitySpec(zero_growth(), constant_death(1e-12), linear_sensitivity(1.0))
    control = StepControl(dt_min=0.01, dt_init=0.01, dt_max=0.01, cfl_advective=0.1)
    dt, underflow = compute_stable_dt(state, _params(nl), control)
    assert underflow
    assert dt == 0.01


def test_transport_alone_conserves_cell_mass():
    """No growth, no death: the u integral must be flat to rounding."""
    g = make_grid_1d(64, 8.0)
    state = gaussian_state(g, mass=2.0, width=0.5)
    nl = NonlinearitySpec(zero_growth(), constant_death(0.0), linear_sensitivity(0.02))
    res = run_simulation(state, _params(nl), StepControl(dt_max=0.02),
                         Schedule(t_end=2.0, series_interval=0.5))
    m_u = res.series.column("m_u")
    assert np.max(np.abs(m_u - m_u[0])) <= 1e-12 * m_u[0]
    assert res.cause == "t_end"


def test_reactive_run_conserves_weighted_total(colony_params):
    g = make_grid_1d(64, 8.0)
    state = gaussian_state(g, mass=1.0, width=0.5)
    res = run_simulation(state, colony_params, StepControl(dt_max=0.02),
                         Schedule(t_end=2.0, series_interval=0.25))
    total = res.series.column("total")
    assert np.max(np.abs(total - total[0])) <= 1e-11 * total[0]


def test_mass_transfers_are_monotone(colony_params):
    g = make_grid_1d(48, 8.0)
    state = gaussian_state(g, mass=1.0, width=0.5)
    res = run_simulation(state, colony_params, StepControl(dt_max=0.02),
                         Schedule(t_end=3.0, series_interval=0.25))
    report = check_monotonicity(res.series.records)
    assert report.ok
    assert report.n_nonincreasing and report.w_nondecreasing


def test_series_and_final_time_land_exactly():
    g = make_grid_1d(24, 4.0)
    state = gaussian_state(g, mass=0.5, width=0.4)
    res = run_simulation(state, _params(), StepControl(dt_max=0.03),
                         Schedule(t_end=1.0, series_interval=0.25))
    assert res.state.t == 1.0
    assert list(res.series.times()) == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_snapshot_schedule():
    g = make_grid_1d(24, 4.0)
    state = gaussian_state(g, mass=0.5, width=0.4)
    res = run_simulation(state, _params(), StepControl(dt_max=0.03),
                         Schedule(t_end=1.0, series_interval=0.5, snapshot_interval=0.5))
    assert [s.t for s in res.snapshots] == [0.0, 0.5, 1.0]


def test_steady_state_detection():
    """Pure death drains u below the threshold; the run should stop
    early and report a steady state, not run to t_end."""
    g = make_grid_1d(16, 4.0)
    state = gaussian_state(g, mass=0.1, width=0.4)
    nl = NonlinearitySpec(zero_growth(), constant_death(1.0), linear_sensitivity(0.01))
    stop = StopRules(eps_steady=1e-6, steady_window=10)
    res = run_simulation(state, _params(nl), StepControl(dt_max=0.05),
                         Schedule(t_end=100.0, series_interval=1.0), stop=stop)
    assert res.cause == "steady_state"
    assert res.state.t < 100.0
    assert res.state.u.sup() < 1e-6
    assert res.rates["sup_u"] is not None
    assert res.rates["sup_u"].rate > 0.0


def test_blow_up_flag_on_threshold_crossing():
    g = make_grid_1d(32, 4.0)
    state = gaussian_state(g, mass=2.0, width=0.2)
    control = StepControl(dt_max=0.01, u_blowup_threshold=0.5)
    res = run_simulation(state, _params(), control,
                         Schedule(t_end=5.0, series_interval=1.0))
    assert res.cause == "blow_up"
    assert "threshold" in res.detail
    assert res.state.t < 5.0


def test_blow_up_flag_on_dt_underflow():
    g = make_grid_1d(16, 1.6)
    x = g.axis_centers(0)
    state = SimState(u=Field.full(g, 1.0), c=Field(g, 100.0 * x),
                     n=Field.zeros(g), w=Field.zeros(g))
    nl = NonlinearitySpec(zero_growth(), constant_death(0.0), linear_sensitivity(1.0))
    control = StepControl(dt_min=0.01, dt_init=0.01, dt_max=0.01, cfl_advective=0.1)
    res = run_simulation(state, _params(nl), control,
                         Schedule(t_end=1.0, series_interval=0.5))
    assert res.cause == "blow_up"
    assert "dt_min" in res.detail
    assert res.steps == 0


def test_lost_elliptic_solve_terminates_instead_of_crashing():
    """A starved stationary solve is a numerical failure of the run, so
    it must come back as a termination cause."""
    g = make_grid_1d(16)
    rng = np.random.default_rng(3)
    state = SimState(u=Field(g, rng.uniform(0.5, 2.0, g.shape)),
                     c=Field.zeros(g), n=Field.zeros(g), w=Field.zeros(g))
    res = run_simulation(
        state, _params(), StepControl(mode="parabolic_elliptic"),
        Schedule(t_end=0.5, series_interval=0.25),
        elliptic=EllipticSolveSettings(residual_tol=1e-30, max_iterations=1),
    )
    assert res.cause == "blow_up"
    assert "residual" in res.detail
    assert res.steps == 0
    assert len(res.series) == 1


def test_max_steps_budget_is_a_configuration_error():
    g = make_grid_1d(16, 4.0)
    state = gaussian_state(g, mass=0.5, width=0.4)
    with pytest.raises(ConfigurationError, match="max_steps"):
        run_simulation(state, _params(), StepControl(dt_max=0.01),
                       Schedule(t_end=10.0, series_interval=5.0),
                       stop=StopRules(max_steps=3))


def test_runs_are_deterministic():
    g = make_grid_2d(12, 12, 4.0, 4.0)
    results = []
    for _ in range(2):
        state = gaussian_state(g, mass=1.0, width=0.5)
        res = run_simulation(state, _params(nl=colony_nonlinearities()),
                             StepControl(dt_max=0.02),
                             Schedule(t_end=0.5, series_interval=0.1))
        results.append(res)
    a, b = results
    assert np.array_equal(a.state.u.values, b.state.u.values)
    assert np.array_equal(a.state.w.values, b.state.w.values)
    assert list(a.series.column("total")) == list(b.series.column("total"))
    assert a.steps == b.steps


def test_elliptic_solve_matches_dense_factorization():
    """Cross-check the iterative stationary solve against a dense solve
    of the same operator, assembled column by column."""
    g = make_grid_2d(10, 8, 1.0, 0.8)
    rng = np.random.default_rng(31)
    u = Field(g, rng.uniform(0.0, 2.0, g.shape))
    params = _params(beta=1.7, alpha=0.9)

    size = u.values.size
    A = np.zeros((size, size))
    for k in range(size):
        e = np.zeros(size)
        e[k] = 1.0
        col = params.beta * e.reshape(g.shape) - laplacian_neumann(
            Field(g, e.reshape(g.shape))).values
        A[:, k] = col.ravel()
    dense = np.linalg.solve(A, params.alpha * u.values.ravel()).reshape(g.shape)

    c = solve_elliptic_c(u, params, EllipticSolveSettings(residual_tol=1e-13,
                                                          max_iterations=500))
    np.testing.assert_allclose(c.values, dense, rtol=1e-9, atol=1e-12)


def test_elliptic_mode_keeps_c_slaved_to_u():
    """Each step refreshes c from the u it starts with, so the final c
    trails the final u by one step; that lag must shrink linearly in dt
    toward the stationary balance."""
    g = make_grid_2d(12, 12, 4.0, 4.0)
    params = _params()
    lags = []
    for dt in (0.02, 0.005):
        state = gaussian_state(g, mass=1.0, width=0.5)
        res = run_simulation(state, params,
                             StepControl(mode="parabolic_elliptic", dt_max=dt),
                             Schedule(t_end=0.3, series_interval=0.1))
        resolved = solve_elliptic_c(res.state.u, params)
        lags.append(np.max(np.abs(res.state.c.values - resolved.values)))
    assert lags[1] <= 0.35 * lags[0]
    assert lags[1] <= 1e-3


def test_elliptic_solve_needs_positive_beta():
    g = make_grid_1d(8)
    u = Field.full(g, 1.0)
    with pytest.raises(ConfigurationError):
        solve_elliptic_c(u, _params(beta=0.0))


def test_elliptic_solve_zero_source_is_zero():
    g = make_grid_1d(8)
    c = solve_elliptic_c(Field.zeros(g), _params())
    assert np.all(c.values == 0.0)


def test_nonnegativity_is_preserved(colony_params):
    g = make_grid_1d(48, 8.0)
    state = gaussian_state(g, mass=1.0, width=0.3)
    res = run_simulation(state, colony_params, StepControl(dt_max=0.02),
                         Schedule(t_end=2.0, series_interval=0.5))
    for name in ("u", "c", "n", "w"):
        assert getattr(res.state, name).values.min() >= 0.0
    assert res.clip_count >= 0


def test_both_modes_agree_when_c_relaxation_is_fast():
    """For large d_c and beta the evolving chemoattractant tracks its
    stationary profile, so both stepping modes see nearly the same u."""
    g = make_grid_1d(48, 4.0)
    nl = NonlinearitySpec(zero_growth(), constant_death(0.01), linear_sensitivity(0.05))
    params_fast = ModelParams(d_c=50.0, d_n=2.0, alpha=1.0, beta=50.0,
                              nonlinearities=nl, gamma=1.0)
    outs = {}
    for mode in ("parabolic_parabolic", "parabolic_elliptic"):
        state = gaussian_state(g, mass=1.0, width=0.4)
        res = run_simulation(state, params_fast,
                             StepControl(mode=mode, dt_max=2e-3),
                             Schedule(t_end=0.5, series_interval=0.25))
        outs[mode] = res.state.u.values
    diff = np.max(np.abs(outs["parabolic_parabolic"] - outs["parabolic_elliptic"]))
    assert diff <= 2e-3 * np.max(outs["parabolic_elliptic"])


def test_random_smoke_runs_stay_finite():
    rng = np.random.default_rng(42)
    for trial in range(5):
        g = make_grid_1d(int(rng.integers(8, 32)), float(rng.uniform(1.0, 6.0)))
        state = random_state(g, rng)
        res = run_simulation(state, _params(), StepControl(dt_max=0.05),
                             Schedule(t_end=0.3, series_interval=0.1))
        assert res.cause in ("t_end", "steady_state", "blow_up")
        assert np.all(np.isfinite(res.state.w.values))
