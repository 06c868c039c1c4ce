"""Dense covariance-matrix simulation of multimode Gaussian states.

Conventions
-----------
Quadratures are ordered ``(x1, p1, x2, p2, ...)`` and the vacuum variance of
every quadrature is 1/4, so that ``a = x + i p``.  Squeezing acts on ``p`` by
default.  All states are immutable; every operation returns a new state.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._validation import check_finite, check_fraction, check_mode, frozen

VACUUM_VARIANCE = 0.25

SYMMETRY_TOL = 1e-10
PHYSICALITY_SLACK = 1e-9


def symplectic_form(num_modes):
    """Standard symplectic form for ``(x1, p1, ...)`` ordering."""
    return np.kron(np.eye(num_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _quadrature_index(mode, quadrature):
    return 2 * mode + (1 if quadrature == "p" else 0)


@dataclass(frozen=True)
class GaussianState:
    """Mean vector and covariance matrix of an ``num_modes``-mode state.

    Parameters
    ----------
    mean : array_like, shape (2M,)
    cov : array_like, shape (2M, 2M)
    validate : bool
        Check symmetry and the uncertainty principle on construction.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __init__(self, mean, cov, validate=True):
        mean = frozen(mean)
        cov = frozen(cov)
        if mean.ndim != 1 or mean.shape[0] % 2 or mean.shape[0] == 0:
            raise ValueError("mean must be a non-empty vector of even length")
        if cov.shape != (mean.shape[0], mean.shape[0]):
            raise ValueError("cov shape does not match mean")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        if validate:
            self.validate()

    @property
    def num_modes(self):
        return self.mean.shape[0] // 2

    def validate(self):
        if not np.all(np.isfinite(self.cov)) or not np.all(np.isfinite(self.mean)):
            raise ValueError("state contains non-finite entries")
        if np.max(np.abs(self.cov - self.cov.T)) > SYMMETRY_TOL:
            raise ValueError("covariance matrix is not symmetric")
        nu = symplectic_eigenvalues(self.cov)
        if nu.min() < VACUUM_VARIANCE - PHYSICALITY_SLACK:
            raise ValueError(
                f"unphysical covariance: symplectic eigenvalue {nu.min():.6g} < 1/4"
            )

    def is_pure(self, tol=PHYSICALITY_SLACK):
        return bool(np.all(np.abs(symplectic_eigenvalues(self.cov) - VACUUM_VARIANCE) < tol))

    def reduced(self, modes):
        """Marginal state of the listed modes."""
        idx = np.ravel([[2 * m, 2 * m + 1] for m in modes])
        return GaussianState(self.mean[idx], self.cov[np.ix_(idx, idx)])

    def quadrature_covariance(self, modes, quadrature="p"):
        """Joint covariance of one quadrature over several modes."""
        idx = [_quadrature_index(m, quadrature) for m in modes]
        return self.cov[np.ix_(idx, idx)].copy()


def symplectic_eigenvalues(cov):
    """Symplectic spectrum of a covariance matrix, sorted ascending."""
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0] // 2
    ev = np.linalg.eigvals(1j * symplectic_form(n) @ cov)
    return np.sort(np.abs(ev))[::2]


def vacuum(num_modes):
    if int(num_modes) != num_modes or num_modes < 1:
        raise ValueError(f"num_modes must be a positive integer, got {num_modes!r}")
    n = int(num_modes)
    return GaussianState(np.zeros(2 * n), VACUUM_VARIANCE * np.eye(2 * n), validate=False)


def _embed(local, modes, num_modes):
    """Lift a ``2k x 2k`` symplectic acting on ``modes`` to the full space."""
    S = np.eye(2 * num_modes)
    idx = np.ravel([[2 * m, 2 * m + 1] for m in modes])
    S[np.ix_(idx, idx)] = local
    return S


@dataclass(frozen=True)
class Squeezer:
    mode: int
    r: float
    quadrature: str = "p"

    def local_matrix(self):
        r = check_finite(self.r, "r")
        if self.quadrature == "p":
            return np.diag([np.exp(r), np.exp(-r)])
        if self.quadrature == "x":
            return np.diag([np.exp(-r), np.exp(r)])
        raise ValueError(f"squeezed quadrature must be 'x' or 'p', got {self.quadrature!r}")

    def matrix(self, num_modes):
        check_mode(self.mode, num_modes)
        return _embed(self.local_matrix(), [self.mode], num_modes)


@dataclass(frozen=True)
class PhaseShift:
    mode: int
    angle: float

    def matrix(self, num_modes):
        check_mode(self.mode, num_modes)
        t = check_finite(self.angle, "angle")
        c, s = np.cos(t), np.sin(t)
        return _embed(np.array([[c, -s], [s, c]]), [self.mode], num_modes)


@dataclass(frozen=True)
class Beamsplitter:
    """Real beamsplitter coupling ``mode_a`` and ``mode_b``.

    ``a -> sqrt(T) a - sqrt(1-T) b`` and ``b -> sqrt(1-T) a + sqrt(T) b``,
    identically on both quadratures, so light entering ``mode_a`` exits
    ``mode_b`` with a positive amplitude ``sqrt(1-T)``.
    """

    mode_a: int
    mode_b: int
    transmissivity: float

    def matrix(self, num_modes):
        check_mode(self.mode_a, num_modes)
        check_mode(self.mode_b, num_modes)
        if self.mode_a == self.mode_b:
            raise ValueError("beamsplitter needs two distinct modes")
        T = check_fraction(self.transmissivity, "transmissivity")
        t, r = np.sqrt(T), np.sqrt(1.0 - T)
        local = np.kron(np.array([[t, -r], [r, t]]), np.eye(2))
        return _embed(local, [self.mode_a, self.mode_b], num_modes)


SymplecticOp = Squeezer | PhaseShift | Beamsplitter


def apply_symplectic(state, op):
    S = op.matrix(state.num_modes)
    return GaussianState(S @ state.mean, S @ state.cov @ S.T, validate=False)


def squeeze(state, mode, r, quadrature="p"):
    """Squeeze ``quadrature`` of ``mode`` by factor ``exp(-2r)`` in variance."""
    return apply_symplectic(state, Squeezer(mode, r, quadrature))


def apply_loss(state, mode, efficiency):
    """Pure-loss channel of transmission ``efficiency`` on one mode."""
    check_mode(mode, state.num_modes)
    eta = check_fraction(efficiency, "efficiency")
    scale = np.ones(2 * state.num_modes)
    scale[2 * mode : 2 * mode + 2] = np.sqrt(eta)
    cov = state.cov * np.outer(scale, scale)
    cov[2 * mode, 2 * mode] += (1.0 - eta) * VACUUM_VARIANCE
    cov[2 * mode + 1, 2 * mode + 1] += (1.0 - eta) * VACUUM_VARIANCE
    return GaussianState(state.mean * scale, cov, validate=False)


def displace(state, mode, dx=0.0, dp=0.0):
    check_mode(mode, state.num_modes)
    mean = state.mean.copy()
    mean[2 * mode] += check_finite(dx, "dx")
    mean[2 * mode + 1] += check_finite(dp, "dp")
    return GaussianState(mean, state.cov, validate=False)


def permute_modes(state, order):
    """Reorder modes so that new mode ``k`` is old mode ``order[k]``."""
    order = list(order)
    if sorted(order) != list(range(state.num_modes)):
        raise ValueError(f"{order} is not a permutation of the modes")
    idx = np.ravel([[2 * m, 2 * m + 1] for m in order])
    return GaussianState(state.mean[idx], state.cov[np.ix_(idx, idx)], validate=False)


def mean_photon_number(state, mode):
    check_mode(mode, state.num_modes)
    i = 2 * mode
    return float(
        state.cov[i, i] + state.cov[i + 1, i + 1] - 0.5 + state.mean[i] ** 2 + state.mean[i + 1] ** 2
    )


@dataclass(frozen=True)
class HomodyneSpec:
    """Homodyne detection of ``cos(angle) x + sin(angle) p`` on ``mode``."""

    mode: int
    angle: float = np.pi / 2

    def row(self, num_modes):
        check_mode(self.mode, num_modes)
        t = check_finite(self.angle, "angle")
        row = np.zeros(2 * num_modes)
        row[2 * self.mode] = np.cos(t)
        row[2 * self.mode + 1] = np.sin(t)
        return row


def _measurement_matrix(state, specs):
    return np.array([spec.row(state.num_modes) for spec in specs])


def homodyne_stats(state, spec):
    """Marginal ``(mean, variance)`` of a single homodyne outcome."""
    row = spec.row(state.num_modes)
    return float(row @ state.mean), float(row @ state.cov @ row)


def homodyne_moments(state, specs):
    """Joint mean vector and covariance of simultaneous homodyne outcomes."""
    A = _measurement_matrix(state, specs)
    return A @ state.mean, A @ state.cov @ A.T


def homodyne_sample(state, specs: Sequence[HomodyneSpec], n_shots, rng):
    """Draw joint homodyne outcomes, one row per shot.

    Parameters
    ----------
    state : GaussianState
    specs : sequence of HomodyneSpec
        One per measured mode; modes must be distinct.
    n_shots : int
    rng : numpy.random.Generator or int
        Seeded generator, or a seed used to build one.

    Returns
    -------
    ndarray of shape (n_shots, len(specs))
    """
    modes = [spec.mode for spec in specs]
    if len(set(modes)) != len(modes):
        raise ValueError("homodyne specs must address distinct modes")
    if int(n_shots) < 1:
        raise ValueError("n_shots must be >= 1")
    rng = np.random.default_rng(rng)
    mu, sigma = homodyne_moments(state, specs)
    L = np.linalg.cholesky(sigma)
    z = rng.standard_normal((int(n_shots), len(specs)))
    return mu + z @ L.T


def variance_to_db(variance, reference=VACUUM_VARIANCE):
    """Noise level ``10 log10(variance / reference)``; negative when squeezed."""
    return 10.0 * np.log10(np.asarray(variance, dtype=float) / reference)


def db_to_variance(db, reference=VACUUM_VARIANCE):
    return reference * 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def squeezing_parameter_from_db(db):
    """``r`` such that the squeezed variance sits ``db`` decibels below vacuum."""
    return float(db) * np.log(10.0) / 20.0


def squeezing_db_from_parameter(r):
    return 20.0 * float(r) / np.log(10.0)
