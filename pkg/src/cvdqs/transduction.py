"""Electro-optic transduction of RF fields and source-parameter inference.

An EOM driven by ``E cos(w t + phi)`` imprints a p-quadrature displacement

    d = sqrt(2) pi g |c| a_c (gamma E / (2 V_pi)) sin(phi)

on the light reaching the sensor, where ``|c| a_c`` is the share of the
baseband carrier delivered there.  For small ``phi`` this is the usual linear
phase-to-displacement law.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import NoSolutionError, OutOfDomainError, check_finite, check_signs, check_vector

# 80 mV at phi = pi/2 with the full carrier gives a 5-sigma (SQL) displacement.
DEFAULT_V_PI = 5.0
DEFAULT_GAMMA = 1.0
DEFAULT_WORKING_AMPLITUDE = 0.08
DEFAULT_A_C = 5.0 * 0.5 * 2.0 * DEFAULT_V_PI / (np.sqrt(2.0) * np.pi * DEFAULT_GAMMA * DEFAULT_WORKING_AMPLITUDE)


@dataclass(frozen=True)
class RfScene:
    """RF field seen by each sensor plus the shared EOM constants.

    Parameters
    ----------
    amplitudes : sequence of float
        Field amplitudes ``E_m`` in volts.
    phases : sequence of float
        RF phases ``phi_m`` in radians.
    delay_signs : sequence of {+1, -1}, optional
        ``g_m``; -1 means a pi RF delay.  Defaults to all +1.
    a_c, v_pi, gamma : float
        Carrier amplitude, half-wave voltage (V), field-to-voltage conversion.
    """

    amplitudes: tuple
    phases: tuple
    delay_signs: tuple = None
    a_c: float = DEFAULT_A_C
    v_pi: float = DEFAULT_V_PI
    gamma: float = DEFAULT_GAMMA

    def __post_init__(self):
        amps = check_vector(self.amplitudes, "amplitudes")
        m = amps.shape[0]
        phases = check_vector(self.phases, "phases", m)
        g = np.ones(m) if self.delay_signs is None else check_signs(self.delay_signs, "delay_signs", m)
        if np.any(amps < 0):
            raise ValueError("field amplitudes must be non-negative")
        if not self.v_pi > 0 or not self.gamma > 0:
            raise ValueError("v_pi and gamma must be positive")
        check_finite(self.a_c, "a_c")
        object.__setattr__(self, "amplitudes", tuple(amps))
        object.__setattr__(self, "phases", tuple(phases))
        object.__setattr__(self, "delay_signs", tuple(g))

    @property
    def num_sensors(self):
        return len(self.amplitudes)

    @property
    def scale(self):
        """Displacement per volt of field at unit carrier share and phi = pi/2."""
        return np.sqrt(2.0) * np.pi * self.a_c * self.gamma / (2.0 * self.v_pi)

    def with_phases(self, phases):
        return replace(self, phases=tuple(phases))

    def with_amplitudes(self, amplitudes):
        return replace(self, amplitudes=tuple(amplitudes))

    def with_delay_signs(self, delay_signs):
        return replace(self, delay_signs=tuple(delay_signs))

    def to_dict(self):
        return {
            "amplitudes": list(self.amplitudes),
            "phases": list(self.phases),
            "delay_signs": list(self.delay_signs),
            "a_c": self.a_c,
            "v_pi": self.v_pi,
            "gamma": self.gamma,
        }

    @classmethod
    def from_dict(cls, data):
        kwargs = {k: data[k] for k in ("a_c", "v_pi", "gamma") if k in data}
        return cls(tuple(data["amplitudes"]), tuple(data["phases"]), data.get("delay_signs"), **kwargs)


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array: spacing (m), carrier angular frequency (rad/s), wave speed (m/s)."""

    spacing: float
    carrier_angular_frequency: float
    propagation_speed: float = 299_792_458.0

    def __post_init__(self):
        if not self.spacing > 0 or not self.carrier_angular_frequency > 0 or not self.propagation_speed > 0:
            raise ValueError("spacing, carrier frequency and propagation speed must be positive")

    @property
    def phase_per_step(self):
        """Phase advance between neighbouring sensors at broadside-to-endfire ``sin(theta) = 1``."""
        return self.carrier_angular_frequency * self.spacing / self.propagation_speed

    def to_dict(self):
        return {
            "spacing": self.spacing,
            "carrier_angular_frequency": self.carrier_angular_frequency,
            "propagation_speed": self.propagation_speed,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def displacement_from_rf(scene, c, m):
    """p-quadrature displacement at sensor ``m``."""
    return (
        scene.scale
        * scene.delay_signs[m]
        * abs(c[m])
        * scene.amplitudes[m]
        * np.sin(scene.phases[m])
    )


def displacements_from_rf(scene, c):
    c = np.abs(np.asarray(c, dtype=float))
    return (
        scene.scale
        * np.asarray(scene.delay_signs)
        * c
        * np.asarray(scene.amplitudes)
        * np.sin(np.asarray(scene.phases))
    )


def displacement_gradients(scene, c, parameter):
    """Derivative of each sensor's displacement with respect to its own ``E_m`` or ``phi_m``."""
    c = np.abs(np.asarray(c, dtype=float))
    base = scene.scale * np.asarray(scene.delay_signs) * c
    phases = np.asarray(scene.phases)
    if parameter == "amplitude":
        return base * np.sin(phases)
    if parameter == "phase":
        return base * np.asarray(scene.amplitudes) * np.cos(phases)
    raise ValueError(f"parameter must be 'amplitude' or 'phase', got {parameter!r}")


def phases_from_aoa(geometry, theta, num_sensors, reference=0):
    """Linear phase ramp across the array for a plane wave at angle ``theta``."""
    theta = check_finite(theta, "theta")
    if abs(theta) >= np.pi / 2:
        raise ValueError("angle of arrival must satisfy |theta| < pi/2")
    step = geometry.phase_per_step * np.sin(theta)
    return step * (np.arange(num_sensors) - reference)


def aoa_from_phase_gradient(gradient, geometry):
    """Angle of arrival from the phase increment between neighbouring sensors."""
    s = float(gradient) / geometry.phase_per_step
    if not -1.0 <= s <= 1.0:
        raise OutOfDomainError(f"phase gradient {gradient!r} exceeds the array's maximum")
    return float(np.arcsin(s))


@dataclass(frozen=True)
class SourceInference:
    ideal_squeezing_db: float
    source_efficiency: float
    degenerate: bool = field(default=False)

    @property
    def r(self):
        return self.ideal_squeezing_db * np.log(10.0) / 20.0


def infer_source(squeezing_db, antisqueezing_db):
    """Ideal squeezing and source efficiency from a measured (sq, anti-sq) pair.

    Solves ``eta e^{-2r} + 1 - eta = 10^{-sq/10}`` together with
    ``eta e^{2r} + 1 - eta = 10^{anti/10}``.  Dividing the excess noise by the
    noise deficit eliminates ``eta`` and leaves ``e^{2r}`` directly.
    """
    sq = check_finite(squeezing_db, "squeezing_db")
    anti = check_finite(antisqueezing_db, "antisqueezing_db")
    if sq < 0 or anti < sq - 1e-9:
        raise NoSolutionError("need antisqueezing_db >= squeezing_db >= 0")
    deficit = 1.0 - 10.0 ** (-sq / 10.0)
    excess = 10.0 ** (anti / 10.0) - 1.0
    if deficit == 0.0:
        if excess == 0.0:
            return SourceInference(0.0, float("nan"), degenerate=True)
        raise NoSolutionError("anti-squeezing without squeezing implies zero efficiency")
    gain = excess / deficit
    eta = deficit / (1.0 - 1.0 / gain)
    if not 0.0 < eta <= 1.0 + 1e-12:
        raise NoSolutionError(f"inferred source efficiency {eta:.4g} is not in (0, 1]")
    return SourceInference(float(10.0 * np.log10(gain)), float(min(eta, 1.0)))


def efficiency_from_network_squeezing(ideal_db, measured_db):
    """Overall efficiency that degrades ``ideal_db`` of squeezing to ``measured_db``."""
    ideal_db = check_finite(ideal_db, "ideal_db")
    measured_db = check_finite(measured_db, "measured_db")
    if measured_db > ideal_db:
        raise ValueError("measured squeezing cannot exceed the ideal squeezing")
    if ideal_db == 0.0:
        return 1.0
    return float((1.0 - 10.0 ** (-measured_db / 10.0)) / (1.0 - 10.0 ** (-ideal_db / 10.0)))


def mean_photon_from_db(ideal_db):
    """Mean photon number ``sinh^2 r`` of a pure squeezed vacuum with ``ideal_db`` squeezing."""
    ideal_db = check_finite(ideal_db, "ideal_db")
    if ideal_db < 0:
        raise ValueError("ideal_db must be non-negative")
    return float(np.sinh(ideal_db * np.log(10.0) / 20.0) ** 2)


def db_from_mean_photon(n):
    """Squeezing in dB of the pure squeezed vacuum holding ``n`` photons."""
    if n < 0:
        raise ValueError("photon number must be non-negative")
    return float(20.0 * np.arcsinh(np.sqrt(n)) / np.log(10.0))
