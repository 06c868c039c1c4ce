"""Unbiased linear estimators for distributed sensing tasks.

Two pictures are supported.  In the *displacement* picture the sensed
quantities are the p-displacements themselves and the task is
``sum_m v_m alpha_m``.  In the *rf-parameter* picture the sensed quantities
are RF amplitudes or phases, transduced to displacements with a gain that
scales with each sensor's share of the carrier.

Variances are quoted in the units of the estimated parameter.  The SQL
reference for a task is the best variance a network without squeezing can
reach with the same transducers.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import gaussian, network, transduction
from ._validation import DegenerateEstimatorError, check_efficiencies, check_signs, check_vector

PICTURES = ("displacement", "rf-parameter")
TARGET_PARAMETER = {
    "average-amplitude": "amplitude",
    "edge-phase-difference": "phase",
    "central-phase-difference": "phase",
}
GAIN_TOL = 1e-12
DEFAULT_BATCHES = 100


@dataclass(frozen=True)
class SensingTask:
    """Linear global parameter ``sum_m weights_m theta_m``.

    ``parameter`` selects which RF quantity ``theta_m`` is, and is implied by
    the preset targets.  ``data_signs`` are postprocessing sign flips applied
    to each sensor's homodyne record.
    """

    weights: tuple
    picture: str = "rf-parameter"
    target: str = "custom"
    parameter: str = None
    data_signs: tuple = None

    def __post_init__(self):
        w = check_vector(self.weights, "weights")
        if not np.any(w):
            raise ValueError("task weights must not all be zero")
        if self.picture not in PICTURES:
            raise ValueError(f"picture must be one of {PICTURES}, got {self.picture!r}")
        parameter = self.parameter
        if self.picture == "rf-parameter":
            parameter = parameter or TARGET_PARAMETER.get(self.target)
            if parameter not in ("amplitude", "phase"):
                raise ValueError("rf-parameter tasks need parameter 'amplitude' or 'phase'")
        signs = np.ones(w.shape[0]) if self.data_signs is None else check_signs(self.data_signs, "data_signs", w.shape[0])
        object.__setattr__(self, "weights", tuple(w))
        object.__setattr__(self, "parameter", parameter)
        object.__setattr__(self, "data_signs", tuple(signs))

    @property
    def num_sensors(self):
        return len(self.weights)

    def with_data_signs(self, data_signs):
        return replace(self, data_signs=tuple(data_signs))

    def to_dict(self):
        return asdict(self) | {"weights": list(self.weights), "data_signs": list(self.data_signs)}

    @classmethod
    def from_dict(cls, data):
        return cls(
            weights=tuple(data["weights"]),
            picture=data.get("picture", "rf-parameter"),
            target=data.get("target", "custom"),
            parameter=data.get("parameter"),
            data_signs=data.get("data_signs"),
        )


def average_amplitude_task(num_sensors=3):
    return SensingTask((1.0 / num_sensors,) * num_sensors, target="average-amplitude")


def edge_phase_difference_task():
    return SensingTask((-1.5, 2.0, -0.5), target="edge-phase-difference")


def central_phase_difference_task():
    return SensingTask((-0.5, 0.0, 0.5), target="central-phase-difference")


TEMPLATES = {
    "average-amplitude": average_amplitude_task,
    "edge-phase-difference": edge_phase_difference_task,
    "central-phase-difference": central_phase_difference_task,
}


def default_scene(task, amplitude=transduction.DEFAULT_WORKING_AMPLITUDE):
    """Equal-amplitude scene at the task's working point with optimal RF delays."""
    m = task.num_sensors
    phase = np.pi / 2 if task.parameter == "amplitude" else 0.0
    return transduction.RfScene((amplitude,) * m, (phase,) * m, tuple(network.optimal_delay_signs(task)))


def noise_reduction_ratio(r, efficiency):
    """Squeezed-quadrature variance relative to vacuum after loss ``1 - efficiency``."""
    return efficiency * np.exp(-2.0 * r) + 1.0 - efficiency


def eq1_variance(weights, mean_photons, efficiency):
    """Minimum variance of ``sum v_m alpha_m`` with a squeezed vacuum of ``mean_photons``."""
    if not 0.0 <= efficiency <= 1.0:
        raise ValueError("efficiency must lie in [0, 1]")
    if mean_photons < 0:
        raise ValueError("mean_photons must be non-negative")
    v2 = float(np.sum(np.square(weights)))
    gain = (np.sqrt(mean_photons + 1.0) + np.sqrt(mean_photons)) ** 2
    return v2 / 4.0 * (efficiency / gain + 1.0 - efficiency)


def _working_scene(task, scene, working_phases):
    if task.parameter == "phase":
        phases = np.zeros(task.num_sensors) if working_phases is None else working_phases
        return scene.with_phases(phases)
    return scene


def signal_gains(task, c, scene=None, working_phases=None):
    """Sensitivity of each sensor's sign-corrected record to its own parameter.

    Phase tasks are linearised at ``working_phases`` (default 0); amplitude
    tasks are exactly linear.
    """
    s = np.asarray(task.data_signs)
    if task.picture == "displacement":
        return s.copy()
    if scene is None:
        raise ValueError("rf-parameter tasks need an RfScene")
    scene = _working_scene(task, scene, working_phases)
    return s * transduction.displacement_gradients(scene, c, task.parameter)


def build_unbiased_estimator(task, c, scene=None, working_phases=None):
    """Postprocessing weights ``w_m = weight_m / gain_m`` on the sign-corrected records."""
    u = np.asarray(task.weights)
    gains = signal_gains(task, c, scene, working_phases)
    active = u != 0
    if np.any(np.abs(gains[active]) < GAIN_TOL):
        dead = np.flatnonzero(active & (np.abs(gains) < GAIN_TOL)).tolist()
        raise DegenerateEstimatorError(f"zero signal gain on active sensors {dead}")
    w = np.zeros_like(u)
    w[active] = u[active] / gains[active]
    return w


def record_coefficients(task, w):
    """Coefficients applied to the raw homodyne records."""
    return np.asarray(w) * np.asarray(task.data_signs)


def analytic_task_variance(task, c, efficiency, r, w):
    """Variance ``a^T Cov_p a`` of the linear estimate, ``a`` the raw-record coefficients."""
    a = record_coefficients(task, w)
    eta = check_efficiencies(efficiency, a.shape[0])
    overlap = np.sum(a * np.sqrt(eta) * np.asarray(c))
    return float(gaussian.VACUUM_VARIANCE * (np.sum(a**2) + np.expm1(-2.0 * r) * overlap**2))


def classical_baseline_variance(task, c, efficiency=1.0, scene=None, working_phases=None):
    """Variance of the same network and estimator run without squeezing."""
    w = build_unbiased_estimator(task, c, scene, working_phases)
    return analytic_task_variance(task, c, efficiency, 0.0, w)


def sql_variance(task, scene=None, working_phases=None):
    """Best variance reachable without squeezing, over all splitting ratios."""
    u = np.abs(np.asarray(task.weights))
    if task.picture == "displacement":
        return float(gaussian.VACUUM_VARIANCE * np.sum(u**2))
    unit = np.abs(signal_gains(task, np.ones_like(u), scene, working_phases))
    active = u != 0
    if np.any(unit[active] < GAIN_TOL):
        raise DegenerateEstimatorError("scene gives zero transduction gain on an active sensor")
    return float(gaussian.VACUUM_VARIANCE * np.sum(u[active] / unit[active]) ** 2)


def separable_local_squeezing_db(total_photons, num_sensors):
    """Per-sensor squeezing when ``total_photons`` are shared by independent squeezers."""
    return transduction.db_from_mean_photon(total_photons / num_sensors)


def optimum_separable_variance(task, total_photons, efficiency, scene=None, working_phases=None):
    """Variance with independent squeezers holding ``total_photons / M`` photons each."""
    n_s = total_photons / task.num_sensors
    gain = (np.sqrt(n_s + 1.0) + np.sqrt(n_s)) ** 2
    ratio = efficiency / gain + 1.0 - efficiency
    return sql_variance(task, scene, working_phases) * ratio


@dataclass
class EstimationReport:
    estimate: float
    estimate_se: float
    truth: float
    analytic_variance: float
    mc_variance: float
    mc_variance_se: float
    sql_variance: float
    db_below_sql: float
    mc_db_below_sql: float
    n_shots: int
    seed: int

    @property
    def normalized_variance(self):
        return self.analytic_variance / self.sql_variance

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)


def db_below(variance, reference):
    return float(-10.0 * np.log10(variance / reference))


def _task_truth(task, scene, displacements):
    u = np.asarray(task.weights)
    if task.picture == "displacement":
        return float(u @ np.asarray(displacements, dtype=float))
    theta = scene.amplitudes if task.parameter == "amplitude" else scene.phases
    return float(u @ np.asarray(theta))


def _batch_estimates(state, coef, n_shots, seed_seq):
    specs = [gaussian.HomodyneSpec(m) for m in range(state.num_modes)]
    rng = np.random.default_rng(seed_seq)
    return gaussian.homodyne_sample(state, specs, n_shots, rng) @ coef


def sample_estimates(state, coef, n_shots, seed, n_batches=DEFAULT_BATCHES, n_jobs=1):
    """Per-batch estimate arrays for ``n_shots`` joint homodyne shots.

    Batch ``b`` draws from ``SeedSequence(seed).spawn(n_batches)[b]``, so the
    outcome does not depend on ``n_jobs``.
    """
    n_batches = max(1, min(int(n_batches), int(n_shots)))
    sizes = [len(chunk) for chunk in np.array_split(np.arange(int(n_shots)), n_batches)]
    children = np.random.SeedSequence(seed).spawn(n_batches)
    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            return list(pool.map(lambda args: _batch_estimates(state, coef, *args), zip(sizes, children)))
    return [_batch_estimates(state, coef, n, child) for n, child in zip(sizes, children)]


def run_task_monte_carlo(
    task,
    circuit,
    r,
    n_shots,
    seed,
    scene=None,
    displacements=None,
    working_phases=None,
    n_batches=DEFAULT_BATCHES,
    n_jobs=1,
):
    """Simulate the full protocol and compare the sample statistics to theory.

    Standard errors come from batch means over ``n_batches`` batches.
    """
    c = network.amplitudes_from_circuit(circuit)
    state = network.prepare_network_state(r, circuit)
    if task.picture == "displacement":
        if displacements is None:
            raise ValueError("displacement-picture runs need the applied displacements")
        d = check_vector(displacements, "displacements", task.num_sensors)
    else:
        if scene is None:
            raise ValueError("rf-parameter runs need an RfScene")
        d = transduction.displacements_from_rf(scene, c)
    for m, dp in enumerate(d):
        state = gaussian.displace(state, m, 0.0, dp)

    w = build_unbiased_estimator(task, c, scene, working_phases)
    coef = record_coefficients(task, w)
    batches = sample_estimates(state, coef, n_shots, seed, n_batches, n_jobs)
    batch_means = np.array([b.mean() for b in batches])
    batch_vars = np.array([b.var(ddof=1) if b.size > 1 else 0.0 for b in batches])
    nb = len(batches)
    all_est = np.concatenate(batches)

    analytic = analytic_task_variance(task, c, circuit.efficiency, r, w)
    sql = sql_variance(task, scene, working_phases)
    mc_var = float(all_est.var(ddof=1))
    return EstimationReport(
        estimate=float(all_est.mean()),
        estimate_se=float(batch_means.std(ddof=1) / np.sqrt(nb)) if nb > 1 else float("nan"),
        truth=_task_truth(task, scene, displacements),
        analytic_variance=analytic,
        mc_variance=mc_var,
        mc_variance_se=float(batch_vars.std(ddof=1) / np.sqrt(nb)) if nb > 1 else float("nan"),
        sql_variance=sql,
        db_below_sql=db_below(analytic, sql),
        mc_db_below_sql=db_below(mc_var, sql),
        n_shots=int(n_shots),
        seed=int(seed),
    )


@dataclass(frozen=True)
class SweepPoint:
    signed_transmissivity: float
    var_quantum: float
    var_classical: float
    sql: float

    @property
    def is_gap(self):
        return not np.isfinite(self.var_quantum)


def sweep_settings(task, base_circuit, vbs_index, signed_values, mode="flip-g", flip_sensor=None, scene=None):
    """Per-point ``(value, task, circuit, scene)`` for a transmissivity sweep.

    The sign of each value picks how the weight sign of ``flip_sensor`` is
    realised.  In ``flip-g`` mode a positive value puts it on the RF delay
    (``g = sign(u)``, record kept) and a negative value on the record
    (``g = +1``, record flipped by ``sign(u)``); ``flip-data-sign`` swaps the
    two branches.  Every other sensor keeps ``g = sign(u)``.
    """
    if mode not in ("flip-g", "flip-data-sign"):
        raise ValueError(f"mode must be 'flip-g' or 'flip-data-sign', got {mode!r}")
    if task.picture != "rf-parameter":
        raise ValueError("transmissivity sweeps are defined for rf-parameter tasks")
    if not 0 <= vbs_index < len(base_circuit.vbs_chain):
        raise ValueError(f"vbs_index {vbs_index} out of range")
    if flip_sensor is None:
        flip_sensor = base_circuit.port_map[-1]
    scene = default_scene(task) if scene is None else scene
    g_opt = network.optimal_delay_signs(task)
    for value in signed_values:
        value = float(value)
        if not -1.0 <= value <= 1.0:
            raise ValueError(f"signed transmissivity must lie in [-1, 1], got {value!r}")
        chain = list(base_circuit.vbs_chain)
        chain[vbs_index] = abs(value)
        circuit = replace(base_circuit, vbs_chain=tuple(chain))
        g = g_opt.copy()
        s = np.ones(task.num_sensors)
        if (value >= 0) != (mode == "flip-g"):
            g[flip_sensor] = 1.0
            s[flip_sensor] = g_opt[flip_sensor]
        yield value, task.with_data_signs(s), circuit, scene.with_delay_signs(g)


def sweep_transmissivity(
    task,
    base_circuit,
    vbs_index,
    signed_values,
    r,
    mode="flip-g",
    flip_sensor=None,
    scene=None,
    working_phases=None,
):
    """Quantum and classical variance while one VBS is tuned.

    See :func:`sweep_settings` for the sign conventions.  Points where an
    active sensor loses all light are gaps (NaN variances).
    """
    points = []
    for value, point_task, circuit, point_scene in sweep_settings(
        task, base_circuit, vbs_index, signed_values, mode, flip_sensor, scene
    ):
        c = network.amplitudes_from_circuit(circuit)
        sql = sql_variance(point_task, point_scene, working_phases)
        try:
            w = build_unbiased_estimator(point_task, c, point_scene, working_phases)
        except DegenerateEstimatorError:
            points.append(SweepPoint(value, float("nan"), float("nan"), sql))
            continue
        points.append(
            SweepPoint(
                value,
                analytic_task_variance(point_task, c, circuit.efficiency, r, w),
                analytic_task_variance(point_task, c, circuit.efficiency, 0.0, w),
                sql,
            )
        )
    return points


def loglog_slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def scaling_curve(num_sensors, photons_per_sensor, efficiency):
    """Equal-weight average over ``M`` sensors at fixed photons per sensor.

    Returns the entangled (single squeezer split ``M`` ways) and separable
    (``M`` independent squeezers) variances for each ``M``.
    """
    entangled, separable = [], []
    for m in num_sensors:
        task = SensingTask((1.0 / m,) * m, picture="displacement")
        entangled.append(eq1_variance(task.weights, m * photons_per_sensor, efficiency))
        separable.append(optimum_separable_variance(task, m * photons_per_sensor, efficiency))
    return np.array(entangled), np.array(separable)


class DistributedSensingEstimator(BaseEstimator):
    """Entangled sensor network as a fitted linear estimator.

    ``fit`` synthesises the circuit for the task, derives the unbiased
    postprocessing weights and the analytic variances.  ``predict`` maps raw
    homodyne records of shape ``(n_shots, M)`` to estimates.

    Parameters
    ----------
    weights : sequence of float
        Task weights.
    picture : {"rf-parameter", "displacement"}
    target : str
        Preset name, or "custom".
    parameter : {"amplitude", "phase"}, optional
        RF quantity being estimated; implied by preset targets.
    squeezing_db : float
        Ideal source squeezing.
    efficiency : float or sequence of float
        Source-to-detector transmission per sensor.
    circuit : "optimal" or CircuitConfig
    port_map : sequence of int, optional
        Port routing used when synthesising the optimal circuit.
    scene : RfScene, optional
        Working-point scene; defaults to equal 80 mV fields with optimal RF delays.
    data_signs : sequence of {+1, -1}, optional
    """

    def __init__(
        self,
        weights=(1 / 3, 1 / 3, 1 / 3),
        picture="rf-parameter",
        target="custom",
        parameter=None,
        squeezing_db=11.7,
        efficiency=1.0,
        circuit="optimal",
        port_map=None,
        scene=None,
        data_signs=None,
    ):
        self.weights = weights
        self.picture = picture
        self.target = target
        self.parameter = parameter
        self.squeezing_db = squeezing_db
        self.efficiency = efficiency
        self.circuit = circuit
        self.port_map = port_map
        self.scene = scene
        self.data_signs = data_signs

    def fit(self, X=None, y=None):
        task = SensingTask(tuple(self.weights), self.picture, self.target, self.parameter, self.data_signs)
        m = task.num_sensors
        if X is not None:
            check_array(X, ensure_min_features=m)
        eta = check_efficiencies(self.efficiency, m)
        if isinstance(self.circuit, network.CircuitConfig):
            circuit = self.circuit.with_efficiency(eta)
        elif self.circuit == "optimal":
            circuit = network.optimal_circuit(task, self.port_map, tuple(eta))
        else:
            raise ValueError(f"circuit must be 'optimal' or a CircuitConfig, got {self.circuit!r}")
        if circuit.num_sensors != m:
            raise ValueError("circuit and task disagree on the number of sensors")
        scene = None
        if task.picture == "rf-parameter":
            scene = default_scene(task) if self.scene is None else self.scene
        r = gaussian.squeezing_parameter_from_db(self.squeezing_db)
        c = network.amplitudes_from_circuit(circuit)
        w = build_unbiased_estimator(task, c, scene)

        self.task_ = task
        self.circuit_ = circuit
        self.scene_ = scene
        self.r_ = r
        self.amplitudes_ = c
        self.estimator_weights_ = w
        self.coef_ = record_coefficients(task, w)
        self.analytic_variance_ = analytic_task_variance(task, c, circuit.efficiency, r, w)
        self.classical_variance_ = analytic_task_variance(task, c, circuit.efficiency, 0.0, w)
        self.sql_variance_ = sql_variance(task, scene)
        self.db_below_sql_ = db_below(self.analytic_variance_, self.sql_variance_)
        self.n_features_in_ = m
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} homodyne records per shot, got {X.shape[1]}")
        return X @ self.coef_

    def score(self, X, y):
        """Decibels below the SQL of the mean squared error against ``y``."""
        err = self.predict(X) - np.broadcast_to(np.asarray(y, dtype=float), (len(X),))
        return db_below(np.mean(err**2), self.sql_variance_)

    def sample(self, scene=None, displacements=None, n_shots=1000, random_state=None):
        """Draw raw homodyne records from the fitted network."""
        check_is_fitted(self, "coef_")
        state = network.prepare_network_state(self.r_, self.circuit_)
        if self.task_.picture == "displacement":
            d = check_vector(displacements, "displacements", self.n_features_in_)
        else:
            d = transduction.displacements_from_rf(self.scene_ if scene is None else scene, self.amplitudes_)
        for m, dp in enumerate(d):
            state = gaussian.displace(state, m, 0.0, dp)
        specs = [gaussian.HomodyneSpec(m) for m in range(self.n_features_in_)]
        return gaussian.homodyne_sample(state, specs, n_shots, random_state)
