"""End-to-end acceptance criteria, one test per criterion.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""

import json
import time

import numpy as np
import pytest

from cvdqs import estimation, gaussian, network, transduction
from cvdqs.estimation import SensingTask
from cvdqs.experiments.commands import cmd_task
from cvdqs.experiments.config import load_config
from cvdqs.gaussian import Beamsplitter, HomodyneSpec, PhaseShift, Squeezer
from cvdqs.network import CircuitConfig

EDGE_PORT_MAP = (1, 0, 2)


@pytest.mark.acceptance(1, "weighted-sum variance at N_S=3.21, eta=0.56 is 0.478 SQL (3.20 dB)")
def test_weighted_sum_variance_operating_point():
    ratio = estimation.eq1_variance([1.0], 3.21, 0.56) / gaussian.VACUUM_VARIANCE
    assert abs(ratio - 0.478) <= 0.002
    assert abs(-10 * np.log10(ratio) - 3.20) <= 0.02


def _random_scenario(rng):
    m = int(rng.integers(1, 5))
    r = float(rng.uniform(0, 1.5))
    eta = tuple(rng.uniform(0.2, 1.0, m))
    chain = tuple(rng.uniform(0.05, 0.95, m - 1))
    circuit = CircuitConfig(chain, tuple(rng.permutation(m)), tuple(rng.choice([0.0, np.pi], m)), eta)
    weights = tuple(rng.uniform(-1, 1, m))
    if rng.random() < 0.5:
        task = SensingTask(weights, picture="displacement", data_signs=tuple(rng.choice([-1.0, 1.0], m)))
        return task, circuit, r, {"displacements": rng.normal(0, 1, m)}
    parameter = str(rng.choice(["amplitude", "phase"]))
    task = SensingTask(weights, parameter=parameter, data_signs=tuple(rng.choice([-1.0, 1.0], m)))
    phases = rng.uniform(0.3, 1.2, m) if parameter == "amplitude" else rng.uniform(-0.2, 0.2, m)
    scene = transduction.RfScene(tuple(rng.uniform(0.02, 0.16, m)), tuple(phases), tuple(rng.choice([-1.0, 1.0], m)))
    return task, circuit, r, {"scene": scene}


@pytest.mark.acceptance(2, "Monte Carlo variance within 5 SE of analytic over 50 random scenarios")
def test_monte_carlo_agreement():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    misses = []
    for k in range(50):
        task, circuit, r, kwargs = _random_scenario(rng)
        rep = estimation.run_task_monte_carlo(task, circuit, r, 100_000, 1000 + k, **kwargs)
        if abs(rep.mc_variance - rep.analytic_variance) > 5 * rep.mc_variance_se:
            misses.append((k, rep.mc_variance, rep.analytic_variance, rep.mc_variance_se))
    assert not misses
    assert time.perf_counter() - start < 30


@pytest.mark.acceptance(3, "source inference chain: 11.7 dB ideal, eta 0.56, N_S 3.2")
def test_source_inference_chain():
    src = transduction.infer_source(4.0, 10.0)
    assert abs(src.ideal_squeezing_db - 11.7) <= 0.1
    eta = transduction.efficiency_from_network_squeezing(src.ideal_squeezing_db, 3.2)
    assert abs(eta - 0.56) <= 0.01
    assert abs(transduction.mean_photon_from_db(src.ideal_squeezing_db) - 3.2) <= 0.1


@pytest.mark.acceptance(4, "separable baseline: 7.9 dB local, 2.7 dB reduction, ratio 0.90")
def test_separable_baseline():
    task = estimation.average_amplitude_task(3)
    scene = estimation.default_scene(task)
    assert abs(estimation.separable_local_squeezing_db(3.3, 3) - 7.9) <= 0.1
    sql = estimation.sql_variance(task, scene)
    sep = estimation.optimum_separable_variance(task, 3.3, 0.56, scene)
    assert abs(estimation.db_below(sep, sql) - 2.7) <= 0.1
    c = network.optimal_amplitudes(task)
    w = estimation.build_unbiased_estimator(task, c, scene)
    ent = estimation.analytic_task_variance(task, c, 0.56, np.arcsinh(np.sqrt(3.3)), w)
    assert abs(ent / sep - 0.90) <= 0.02


@pytest.mark.acceptance(5, "circuit synthesis: edge task (0.50, 0.75), equal weights (1/3, 1/2)")
def test_circuit_synthesis():
    edge = network.optimal_circuit(estimation.edge_phase_difference_task(), EDGE_PORT_MAP)
    np.testing.assert_allclose(edge.vbs_chain, [0.5, 0.75], atol=1e-9, rtol=0)
    avg = network.optimal_circuit(estimation.average_amplitude_task(3))
    np.testing.assert_allclose(avg.vbs_chain, [1 / 3, 1 / 2], atol=1e-9, rtol=0)


@pytest.mark.acceptance(6, "transmissivity sweep: classical symmetric, quantum asymmetric > 1.05, minima at |T|=0.75")
def test_transmissivity_sweep_shape():
    start = time.perf_counter()
    task = estimation.edge_phase_difference_task()
    src = transduction.infer_source(4.0, 10.0)
    eta = transduction.efficiency_from_network_squeezing(src.ideal_squeezing_db, 3.2)
    base = network.optimal_circuit(task, EDGE_PORT_MAP, eta)
    values = np.round(np.linspace(-1, 1, 81), 12)
    pts = estimation.sweep_transmissivity(task, base, 1, values, src.r)
    by_t = {p.signed_transmissivity: p for p in pts}
    for t in values[values > 0]:
        a, b = by_t[t], by_t[-t]
        assert a.is_gap == b.is_gap
        if not a.is_gap:
            assert a.var_classical == b.var_classical
    valid = [p for p in pts if not p.is_gap]
    pos = min((p for p in valid if p.signed_transmissivity > 0), key=lambda p: p.var_quantum)
    neg = min((p for p in valid if p.signed_transmissivity < 0), key=lambda p: p.var_quantum)
    assert max(pos.var_quantum, neg.var_quantum) / min(pos.var_quantum, neg.var_quantum) > 1.05
    assert abs(pos.signed_transmissivity) == pytest.approx(0.75)
    assert abs(neg.signed_transmissivity) == pytest.approx(0.75)
    cl = min(valid, key=lambda p: p.var_classical)
    assert abs(cl.signed_transmissivity) == pytest.approx(0.75)
    assert time.perf_counter() - start < 5


@pytest.mark.acceptance(7, "Heisenberg scaling: slope -2.0 at eta=1, large-M slope magnitude < 1.2 at eta=0.56")
def test_heisenberg_scaling():
    ms = np.arange(1, 17)
    ideal = [estimation.eq1_variance(np.full(m, 1 / m), 10.0 * m, 1.0) for m in ms]
    assert abs(estimation.loglog_slope(ms, ideal) + 2.0) <= 0.1
    lossy = [estimation.eq1_variance(np.full(m, 1 / m), 10.0 * m, 0.56) for m in ms]
    assert abs(estimation.loglog_slope(ms[8:], lossy[8:])) < 1.2


def _random_op(rng, n):
    kind = rng.integers(3)
    a = int(rng.integers(n))
    if kind == 0:
        return Squeezer(a, float(rng.uniform(-2, 2)), str(rng.choice(["x", "p"])))
    if kind == 1:
        return PhaseShift(a, float(rng.uniform(-np.pi, np.pi)))
    b = int(rng.choice([k for k in range(n) if k != a]))
    return Beamsplitter(a, b, float(rng.uniform(0, 1)))


@pytest.mark.acceptance(8, "Gaussian core: symplectic form, purity, homodyne sampling")
def test_gaussian_core_properties():
    start = time.perf_counter()
    rng = np.random.default_rng(8)
    n = 4
    omega = gaussian.symplectic_form(n)
    # 1000 ops as 100 ten-op circuits, each starting from vacuum
    for _ in range(100):
        state = gaussian.vacuum(n)
        for _ in range(10):
            op = _random_op(rng, n)
            S = op.matrix(n)
            assert np.max(np.abs(S @ omega @ S.T - omega)) <= 1e-10
            state = gaussian.apply_symplectic(state, op)
            assert np.max(np.abs(gaussian.symplectic_eigenvalues(state.cov) - 0.25)) <= 1e-9

    state = gaussian.squeeze(gaussian.vacuum(3), 0, 1.0)
    state = gaussian.apply_symplectic(state, Beamsplitter(0, 1, 0.4))
    state = gaussian.apply_symplectic(state, Beamsplitter(1, 2, 0.7))
    state = gaussian.displace(gaussian.apply_loss(state, 2, 0.6), 1, 0.2, -0.3)
    specs = [HomodyneSpec(0, np.pi / 2), HomodyneSpec(1, 0.4), HomodyneSpec(2, np.pi / 2)]
    mu, sigma = gaussian.homodyne_moments(state, specs)
    shots = 100_000
    x = gaussian.homodyne_sample(state, specs, shots, 88)
    assert np.all(np.abs(x.mean(axis=0) - mu) <= 5 * np.sqrt(np.diag(sigma) / shots))
    emp = np.cov(x, rowvar=False)
    se = np.sqrt((sigma**2 + np.outer(np.diag(sigma), np.diag(sigma))) / shots)
    assert np.all(np.abs(emp - sigma) <= 5 * se)
    assert time.perf_counter() - start < 60


@pytest.mark.acceptance(9, "unbiasedness: task presets track the truth within 5 SE per point")
@pytest.mark.parametrize("preset", ["average_amplitude", "edge_phase"])
def test_task_presets_unbiased(preset):
    start = time.perf_counter()
    config = load_config(f"preset:{preset}")
    report = json.loads(cmd_task(config)["report.json"])
    points = report["entangled"] + report["classical"]
    assert len(points) == 2 * len(config.sweep["values"])
    for p in points:
        assert abs(p["estimate"] - p["truth"]) <= 5 * p["estimate_se"], p
    assert time.perf_counter() - start < 30
