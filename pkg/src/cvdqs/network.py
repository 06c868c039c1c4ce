"""Beamsplitter chains that split one squeezed mode over a sensor array.

The chain is a tap-off bus: the squeezed mode enters VBS 1, which sends a
fraction ``T_1`` of the power to output port 1 and passes the rest along the
bus to VBS 2, and so on.  The residual after VBS ``M-1`` is output port ``M``.
Which sensor each port feeds is explicit data (``port_map``).
"""

from dataclasses import dataclass, replace

import numpy as np

from . import gaussian
from ._validation import check_efficiencies, check_vector

AMPLITUDE_NORM_TOL = 1e-12


@dataclass(frozen=True)
class CircuitConfig:
    """Variable-beamsplitter chain plus per-sensor phase and efficiency.

    Parameters
    ----------
    vbs_chain : tuple of float
        Tap transmissivities ``T_k``; length ``M - 1``.
    port_map : tuple of int, optional
        ``port_map[k]`` is the (0-based) sensor fed by output port ``k``.
        Defaults to the identity.
    sensor_phase : tuple of float, optional
        Optical phase, 0 or pi, applied to each sensor's mode.
    efficiency : tuple of float, optional
        Transmission ``eta_m`` from source to detector at each sensor.
    """

    vbs_chain: tuple
    port_map: tuple = None
    sensor_phase: tuple = None
    efficiency: tuple = None

    def __post_init__(self):
        chain = tuple(float(t) for t in self.vbs_chain)
        m = len(chain) + 1
        for t in chain:
            if not 0.0 <= t <= 1.0:
                raise ValueError(f"VBS transmissivity must lie in [0, 1], got {t!r}")
        port_map = tuple(range(m)) if self.port_map is None else tuple(int(p) for p in self.port_map)
        if sorted(port_map) != list(range(m)):
            raise ValueError(f"port_map {port_map} is not a permutation of 0..{m - 1}")
        phase = (0.0,) * m if self.sensor_phase is None else tuple(float(p) for p in self.sensor_phase)
        if len(phase) != m:
            raise ValueError("sensor_phase length must equal the number of sensors")
        for p in phase:
            if not (np.isclose(p, 0.0) or np.isclose(p, np.pi)):
                raise ValueError(f"sensor_phase entries must be 0 or pi, got {p!r}")
        eta = tuple(check_efficiencies(1.0 if self.efficiency is None else self.efficiency, m))
        object.__setattr__(self, "vbs_chain", chain)
        object.__setattr__(self, "port_map", port_map)
        object.__setattr__(self, "sensor_phase", phase)
        object.__setattr__(self, "efficiency", eta)

    @property
    def num_sensors(self):
        return len(self.vbs_chain) + 1

    @property
    def signs(self):
        return np.where(np.isclose(self.sensor_phase, np.pi), -1.0, 1.0)

    def with_efficiency(self, efficiency):
        return replace(self, efficiency=tuple(check_efficiencies(efficiency, self.num_sensors)))

    def to_dict(self):
        return {
            "vbs_chain": list(self.vbs_chain),
            "port_map": list(self.port_map),
            "sensor_phase": list(self.sensor_phase),
            "efficiency": list(self.efficiency),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            vbs_chain=tuple(data["vbs_chain"]),
            port_map=data.get("port_map"),
            sensor_phase=data.get("sensor_phase"),
            efficiency=data.get("efficiency"),
        )


def _check_amplitudes(c):
    c = check_vector(c, "amplitudes")
    if abs(np.sum(c**2) - 1.0) > AMPLITUDE_NORM_TOL:
        raise ValueError(f"amplitudes must have unit norm, got sum c^2 = {np.sum(c**2)!r}")
    return c


def port_amplitudes(vbs_chain):
    """Unsigned amplitude at each output port of the tap-off chain."""
    residual = 1.0
    amps = []
    for t in vbs_chain:
        amps.append(np.sqrt(t) * residual)
        residual *= np.sqrt(1.0 - t)
    amps.append(residual)
    return np.array(amps)


def amplitudes_from_circuit(config):
    """Signed squeezed-mode amplitude ``c_m`` delivered to each sensor."""
    ports = port_amplitudes(config.vbs_chain)
    c = np.empty(config.num_sensors)
    c[list(config.port_map)] = ports
    return c * config.signs


def circuit_from_amplitudes(c, port_map=None, efficiency=None):
    """Chain of tap transmissivities that reproduces ``c`` under ``port_map``.

    Taps are set to 1 once nothing is left for later ports.
    """
    c = check_vector(c, "amplitudes")
    if not np.any(c):
        raise ValueError("amplitude vector must not be zero")
    c = _check_amplitudes(c)
    m = c.shape[0]
    port_map = tuple(range(m)) if port_map is None else tuple(port_map)
    power = c[list(port_map)] ** 2
    chain = []
    for k in range(m - 1):
        tail = np.sum(power[k + 1 :])
        total = power[k] + tail
        # bus already exhausted, or nothing left for later ports
        chain.append(1.0 if total == 0.0 or tail == 0.0 else float(power[k] / total))
    phase = tuple(np.pi if x < 0 else 0.0 for x in c)
    return CircuitConfig(tuple(chain), port_map, phase, efficiency)


def optimal_amplitudes(task):
    """Amplitude distribution minimising the task's estimation variance.

    Displacement picture: ``c = v / |v|``, signed.  RF picture: the carrier is
    split together with the squeezed light, so signal gain grows with
    ``|c_m|`` and the optimum is ``c_m^2 = |u_m| / sum |u|`` with all
    amplitudes positive; the weight signs are carried by the RF delays.
    """
    w = check_vector(task.weights, "weights")
    if not np.any(w):
        raise ValueError("task weights must not all be zero")
    if task.picture == "displacement":
        return w / np.linalg.norm(w)
    return np.sqrt(np.abs(w) / np.sum(np.abs(w)))


def optimal_delay_signs(task):
    """RF delay signs ``g_m`` carrying the sign of each task weight."""
    return np.where(np.asarray(task.weights, dtype=float) < 0, -1.0, 1.0)


def optimal_circuit(task, port_map=None, efficiency=None):
    return circuit_from_amplitudes(optimal_amplitudes(task), port_map, efficiency)


def prepare_network_state(r, config):
    """Squeeze mode 0, run the chain, route ports to sensors, apply phases and loss."""
    m = config.num_sensors
    state = gaussian.squeeze(gaussian.vacuum(m), 0, r)
    for k, t in enumerate(config.vbs_chain):
        state = gaussian.apply_symplectic(state, gaussian.Beamsplitter(k, k + 1, t))
    # new mode s holds port k where port_map[k] == s
    order = np.argsort(config.port_map)
    state = gaussian.permute_modes(state, order)
    for s, phase in enumerate(config.sensor_phase):
        if phase:
            state = gaussian.apply_symplectic(state, gaussian.PhaseShift(s, phase))
    for s, eta in enumerate(config.efficiency):
        if eta < 1.0:
            state = gaussian.apply_loss(state, s, eta)
    return state


def network_p_covariance(r, c, efficiency):
    """Closed-form joint p-covariance ``(1/4)[I + (e^{-2r} - 1) b b^T]``, ``b = sqrt(eta) c``."""
    c = np.asarray(c, dtype=float)
    b = np.sqrt(check_efficiencies(efficiency, c.shape[0])) * c
    return gaussian.VACUUM_VARIANCE * (np.eye(c.shape[0]) + np.expm1(-2.0 * r) * np.outer(b, b))
