import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cvdqs import transduction
from cvdqs._validation import NoSolutionError, OutOfDomainError
from cvdqs.transduction import ArrayGeometry, RfScene

UNIT_GEOMETRY = ArrayGeometry(spacing=1.0, carrier_angular_frequency=1.0, propagation_speed=1.0)


def _scene(phi=np.pi / 2, amp=0.08, g=1.0):
    return RfScene((amp,), (phi,), (g,))


def test_default_working_point_is_five_sigma():
    d = transduction.displacement_from_rf(_scene(), [1.0], 0)
    assert d / 0.5 == pytest.approx(5.0)


def test_zero_phase_zero_displacement():
    assert transduction.displacement_from_rf(_scene(0.0), [1.0], 0) == 0.0


def test_small_angle_limit():
    phi = 0.01
    scene = _scene(phi)
    linear = np.sqrt(2) * np.pi * scene.a_c * scene.gamma * scene.amplitudes[0] / (2 * scene.v_pi) * phi
    assert abs(transduction.displacement_from_rf(scene, [1.0], 0) / linear - 1) < 1e-4


def test_phase_sweep_is_sinusoidal():
    phis = np.linspace(0, 2 * np.pi, 50, endpoint=False)
    d = np.array([transduction.displacement_from_rf(_scene(p), [1.0], 0) for p in phis])
    A = np.column_stack([np.sin(phis), np.cos(phis), np.ones_like(phis)])
    coef, res, *_ = np.linalg.lstsq(A, d, rcond=None)
    assert np.allclose(A @ coef, d, atol=1e-12)
    assert coef[0] == pytest.approx(2.5)


@given(st.floats(0, 0.5), st.floats(-3, 3), st.floats(0, 1), st.sampled_from([-1.0, 1.0]))
def test_displacement_symmetries(amp, phi, c, g):
    base = transduction.displacement_from_rf(_scene(phi, amp, g), [c], 0)
    assert np.isclose(transduction.displacement_from_rf(_scene(phi, amp, -g), [c], 0), -base)
    assert np.isclose(transduction.displacement_from_rf(_scene(-phi, amp, g), [c], 0), -base, atol=1e-12)
    assert np.isclose(transduction.displacement_from_rf(_scene(phi, 2 * amp, g), [c], 0), 2 * base)
    assert np.isclose(transduction.displacement_from_rf(_scene(phi, amp, g), [-2 * c], 0), 2 * base)


def test_scene_validation():
    with pytest.raises(ValueError):
        RfScene((-0.1,), (0.0,))
    with pytest.raises(ValueError):
        RfScene((0.1,), (0.0,), (0.5,))
    with pytest.raises(ValueError):
        RfScene((0.1,), (0.0,), v_pi=0.0)


def test_phases_from_aoa():
    np.testing.assert_array_equal(transduction.phases_from_aoa(UNIT_GEOMETRY, 0.0, 4), np.zeros(4))
    a = transduction.phases_from_aoa(UNIT_GEOMETRY, 0.3, 4, reference=1)
    np.testing.assert_allclose(transduction.phases_from_aoa(UNIT_GEOMETRY, -0.3, 4, reference=1), -a)
    step = np.diff(transduction.phases_from_aoa(UNIT_GEOMETRY, 0.1, 3))
    np.testing.assert_allclose(step, np.sin(0.1))
    assert step[0] == pytest.approx(0.0998, abs=1e-4)


def test_grazing_incidence_rejected():
    with pytest.raises(ValueError):
        transduction.phases_from_aoa(UNIT_GEOMETRY, np.pi / 2, 3)


def test_aoa_from_gradient():
    assert transduction.aoa_from_phase_gradient(0.0, UNIT_GEOMETRY) == 0.0
    assert transduction.aoa_from_phase_gradient(np.sin(0.1), UNIT_GEOMETRY) == pytest.approx(0.1, abs=1e-12)
    assert transduction.aoa_from_phase_gradient(0.0998, UNIT_GEOMETRY) == pytest.approx(0.1, abs=2e-4)
    with pytest.raises(OutOfDomainError):
        transduction.aoa_from_phase_gradient(1.01, UNIT_GEOMETRY)


@given(st.floats(-1.5, 1.5))
def test_aoa_round_trip(theta):
    geometry = ArrayGeometry(0.15, 2 * np.pi * 1e9)
    gradient = np.diff(transduction.phases_from_aoa(geometry, theta, 2))[0]
    assert abs(transduction.aoa_from_phase_gradient(gradient, geometry) - theta) < 1e-12


def _bisection_source(sq_db, anti_db):
    """Independent oracle: eliminate eta with the squeezed equation, bisect the anti-squeezed one in r."""
    A, B = 10 ** (-sq_db / 10), 10 ** (anti_db / 10)

    def eta_of(r):
        return (1 - A) / (1 - np.exp(-2 * r))

    def f(r):
        return eta_of(r) * (np.exp(2 * r) - 1) - (B - 1)

    lo, hi = 1e-9, 10.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(lo) * f(mid) <= 0:
            hi = mid
        else:
            lo = mid
    r = 0.5 * (lo + hi)
    return 20 * r / np.log(10), eta_of(r)


def test_infer_source_reported_values():
    got = transduction.infer_source(4.0, 10.0)
    ideal, eta = _bisection_source(4.0, 10.0)
    assert got.ideal_squeezing_db == pytest.approx(ideal, abs=1e-9)
    assert got.source_efficiency == pytest.approx(eta, abs=1e-9)
    assert got.ideal_squeezing_db == pytest.approx(11.7, abs=0.1)
    assert got.source_efficiency == pytest.approx(0.645, abs=0.001)


def test_infer_source_pure_and_degenerate():
    pure = transduction.infer_source(6.0, 6.0)
    assert pure.source_efficiency == pytest.approx(1.0)
    assert pure.ideal_squeezing_db == pytest.approx(6.0)
    assert transduction.infer_source(0.0, 0.0).degenerate


@pytest.mark.parametrize("pair", [(10.0, 4.0), (-1.0, 3.0), (0.0, 3.0)])
def test_infer_source_no_solution(pair):
    with pytest.raises(NoSolutionError):
        transduction.infer_source(*pair)


@given(st.floats(0.05, 2.0), st.floats(0.05, 1.0))
def test_infer_source_round_trip(r, eta):
    sq = -10 * np.log10(eta * np.exp(-2 * r) + 1 - eta)
    anti = 10 * np.log10(eta * np.exp(2 * r) + 1 - eta)
    got = transduction.infer_source(sq, anti)
    assert abs(got.r - r) < 1e-9
    assert abs(got.source_efficiency - eta) < 1e-9


def test_efficiency_from_network_squeezing():
    assert transduction.efficiency_from_network_squeezing(11.7, 3.2) == pytest.approx(0.56, abs=0.005)
    assert transduction.efficiency_from_network_squeezing(5.0, 5.0) == pytest.approx(1.0)
    assert transduction.efficiency_from_network_squeezing(11.7, 0.0) == 0.0
    with pytest.raises(ValueError):
        transduction.efficiency_from_network_squeezing(3.0, 4.0)


def test_mean_photon_from_db():
    assert transduction.mean_photon_from_db(11.7) == pytest.approx(3.2, abs=0.05)
    assert transduction.mean_photon_from_db(0.0) == 0.0
    assert transduction.mean_photon_from_db(7.95) == pytest.approx(1.1, abs=0.005)


@given(st.floats(0, 30))
def test_mean_photon_round_trip(db):
    assert abs(transduction.db_from_mean_photon(transduction.mean_photon_from_db(db)) - db) < 1e-9
