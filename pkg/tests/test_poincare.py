import numpy as np
import pytest

from impulseduff import (PoincarePoint, intersection_check, iterate_map,
                         map_jacobian, poincare_intersection_check,
                         poincare_map, twist_profile, unforced_delta_theta)

from conftest import make_config, forced_coeffs


# --- unforced angle-advance oracle ------------------------------------------

@pytest.mark.parametrize("t1,t2", [(0.25, 0.5), (0.1, 0.8), (0.2, 0.7)])
def test_delta_theta_matches_closed_form(sf1, t1, t2):
    cfg = make_config(t1=t1, t2=t2)
    for lam in np.geomspace(1.0, 1e3, 20):
        p = poincare_map(cfg, sf1, PoincarePoint(float(lam), 0.125))
        measured = p.Theta - 0.125
        oracle = unforced_delta_theta(sf1, cfg.schedule, lam)
        assert abs(measured - oracle) <= 1e-7
        assert p.lam == pytest.approx(lam, rel=1e-9)


def test_degenerate_schedule_zero_advance(sf1):
    cfg = make_config(t1=0.2, t2=0.7)
    for lam in np.geomspace(1.0, 1e3, 10):
        p = poincare_map(cfg, sf1, PoincarePoint(float(lam), 0.3))
        assert abs(p.Theta - 0.3) <= 1e-7


def test_angle_advance_independent_of_theta(sf1, unforced_cfg):
    # rotational symmetry of the unforced map
    lam = 50.0
    ref = poincare_map(unforced_cfg, sf1, PoincarePoint(lam, 0.0)).Theta
    for th in [0.2, 0.55, 0.81]:
        p = poincare_map(unforced_cfg, sf1, PoincarePoint(lam, th))
        assert p.Theta - th == pytest.approx(ref, abs=1e-9)


# --- lift properties --------------------------------------------------------

def test_lift_composition(sf1, forced_cfg):
    # integer parts add: iterating twice equals composing single maps on
    # the lift
    pt = PoincarePoint(300.0, 0.37)
    lams, ths = iterate_map(forced_cfg, sf1, pt, 2)
    one = poincare_map(forced_cfg, sf1, pt)
    two = poincare_map(forced_cfg, sf1, PoincarePoint(one.lam, one.Theta))
    assert ths[1] == pytest.approx(one.Theta, abs=1e-10)
    assert ths[2] == pytest.approx(two.Theta, abs=1e-9)
    assert lams[2] == pytest.approx(two.lam, rel=1e-9)


def test_iterate_map_shapes(sf1, unforced_cfg):
    lams, ths, amps, lmaxes = iterate_map(unforced_cfg, sf1,
                                          PoincarePoint(10.0, 0.0), 5,
                                          with_amp=True)
    assert len(lams) == len(ths) == 6
    assert len(amps) == len(lmaxes) == 5
    assert np.all(lmaxes >= 10.0 * (1 - 1e-9))


# --- Jacobians --------------------------------------------------------------

def test_unforced_jacobian_structure(sf1, unforced_cfg):
    # d(lam')/d(theta) = 0 and d(lam')/d(lam) = 1: upper-left entry 1,
    # upper-right 0; determinant 1
    J = map_jacobian(unforced_cfg, sf1, PoincarePoint(100.0, 0.3))
    assert J[0, 0] == pytest.approx(1.0, abs=1e-6)
    assert abs(J[0, 1]) < 1e-6
    assert J[1, 1] == pytest.approx(1.0, abs=1e-6)
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    assert det == pytest.approx(1.0, abs=1e-6)


def test_forced_jacobian_determinant(sf1, forced_cfg):
    for lam in [5.0, 50.0, 500.0]:
        for th in [0.1, 0.6]:
            J = map_jacobian(forced_cfg, sf1, PoincarePoint(lam, th))
            det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
            assert det == pytest.approx(1.0, abs=1e-5)


def test_jacobian_step_validation(sf1, unforced_cfg):
    with pytest.raises(ValueError):
        map_jacobian(unforced_cfg, sf1, PoincarePoint(1.0, 0.0), h=1e-2)


# --- twist profile ----------------------------------------------------------

def test_twist_profile_positive_bracket(sf1, forced_cfg):
    grid = np.geomspace(10.0, 1e3, 12)
    tp = twist_profile(forced_cfg, sf1, grid)
    assert tp.bracket == pytest.approx(0.5)
    assert np.all(tp.sign_ok[grid >= 1e2])
    assert tp.bound_ok_top_decade
    assert np.all(tp.d_dI[grid >= 1e2] >= tp.twist_bound)


def test_twist_profile_negative_bracket(sf1):
    cfg = make_config(t1=0.1, t2=0.8, coefficients=forced_coeffs())
    grid = np.geomspace(10.0, 1e3, 12)
    tp = twist_profile(cfg, sf1, grid)
    assert tp.bracket == pytest.approx(-0.4)
    assert np.all(tp.sign_ok[grid >= 1e2])
    assert np.all(tp.d_dI[grid >= 1e2] <= -tp.twist_bound)


def test_twist_profile_degenerate_much_smaller(sf1):
    # |delta theta| for the degenerate schedule is tiny compared to the
    # non-degenerate one at the same actions
    grid = np.geomspace(10.0, 1e3, 8)
    live = twist_profile(make_config(), sf1, grid)
    dead = twist_profile(make_config(t1=0.2, t2=0.7), sf1, grid)
    assert np.max(np.abs(dead.delta_theta)) \
        <= 1e-2 * np.min(np.abs(live.delta_theta))
    assert dead.degenerate and not dead.bound_ok_top_decade


def test_twist_profile_csv(tmp_path, sf1, unforced_cfg):
    tp = twist_profile(unforced_cfg, sf1, np.geomspace(1.0, 100.0, 6))
    path = tmp_path / "twist.csv"
    tp.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "lambda,I,delta_theta,d_delta_theta_d_I,sign_ok"
    assert len(lines) == 7
    assert lines[1].endswith(",true")


def test_twist_profile_grid_validation(sf1, unforced_cfg):
    with pytest.raises(ValueError):
        twist_profile(unforced_cfg, sf1, [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        twist_profile(unforced_cfg, sf1, [5.0, 4.0, 3.0, 2.0, 1.0])


# --- intersection property --------------------------------------------------

def test_intersection_unforced_circle(sf1, unforced_cfg):
    ths = np.arange(128) / 128.0
    lams = np.full(128, 25.0)
    res = poincare_intersection_check(unforced_cfg, sf1, ths, lams)
    assert res.intersects
    assert "vanishes" in res.note or res.witness is not None


def test_intersection_forced_circle(sf1, forced_cfg):
    ths = np.arange(128) / 128.0
    lams = np.full(128, 200.0)
    res = poincare_intersection_check(forced_cfg, sf1, ths, lams)
    assert res.intersects
    assert res.witness is not None


def test_intersection_negative_control():
    # a radial push-out map violates area preservation and must be caught
    def push(lam, theta):
        return lam + 1.0, theta + 0.31
    ths = np.arange(128) / 128.0
    lams = np.full(128, 10.0)
    res = intersection_check(push, ths, lams)
    assert not res.intersects
    assert "one-sided" in res.note


def test_intersection_sample_count_validation():
    with pytest.raises(ValueError):
        intersection_check(lambda l, t: (l, t), np.arange(10) / 10.0,
                           np.ones(10))
