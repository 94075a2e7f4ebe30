"""Inner-interferometer postselection of the mechanical mode.

A single photon split across the optomechanical cavity and a reference
cavity leaves the resonator in a two-branch superposition; a dark-port
click selects the antisymmetric combination

    |psi_ps> = 1/2 [exp(i phi) |gamma(t) + alpha(t)> - |gamma(t)>],

whose squared norm is the postselection probability. The optical modes are
never represented: the beam-splitter algebra is already folded into the
expression above.
"""

from dataclasses import dataclass
import math
import warnings

import numpy as np
from scipy.special import cosdg, sindg

from . import fock
from .physconst import HBAR, K_B

KAPPA_WARN = 0.05


@dataclass(frozen=True)
class InteractionParams:
    kappa: float
    theta: float
    gamma0: complex = 0.0

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.kappa > KAPPA_WARN:
            warnings.warn(
                f"kappa={self.kappa} outside the weak-coupling regime; "
                "lowest-order formulas are unreliable",
                stacklevel=3,
            )

    @property
    def weak_coupling(self) -> bool:
        return self.kappa <= KAPPA_WARN


@dataclass
class PostselectionResult:
    state: np.ndarray  # unnormalized conditional mechanical state
    probability: float
    signal: float
    noise: float


def evolved_amplitudes(p: InteractionParams):
    """Return (gamma(t), alpha(t), phi(t)) for a photon held for theta = omega_m t."""
    rot = np.exp(-1j * p.theta)
    gamma_t = complex(p.gamma0) * rot
    alpha_t = p.kappa * (1 - rot)
    phi_t = p.kappa**2 * (p.theta - math.sin(p.theta))
    return gamma_t, complex(alpha_t), phi_t


def postselected_state_exact(p: InteractionParams, dim: int) -> PostselectionResult:
    """Dark-port conditional state without any small-kappa expansion.

    ``noise`` is the squared overlap with the undisturbed branch |gamma(t)>
    and ``signal`` the population orthogonal to it.
    """
    gamma_t, alpha_t, phi_t = evolved_amplitudes(p)
    moved = fock.coherent_state(gamma_t + alpha_t, dim)
    still = fock.coherent_state(gamma_t, dim)
    state = 0.5 * (np.exp(1j * phi_t) * moved - still)
    prob = np.vdot(state, state).real
    noise = abs(np.vdot(still, state)) ** 2 / np.vdot(still, still).real
    return PostselectionResult(state, prob, prob - noise, noise)


def exact_probability(kappa, theta, gamma):
    """Closed-form squared norm of the exact postselected state.

    Vectorized over ``gamma``; agrees with ``postselected_state_exact`` up to
    truncation.
    """
    gamma = np.asarray(gamma, dtype=complex)
    rot = np.exp(-1j * theta)
    alpha = kappa * (1 - rot)
    phi = kappa**2 * (theta - np.sin(theta))
    cross = np.imag(np.conj(gamma * rot) * alpha)
    # 1 - e^-x cos y written without cancellation for small x and y
    x = abs(alpha) ** 2 / 2
    return 0.5 * (-np.expm1(-x) + 2 * np.exp(-x) * np.sin((phi + cross) / 2) ** 2)


def _sin(theta):
    # degree-based so that sin(pi) and cos(pi/2) come out exactly zero
    return float(sindg(math.degrees(theta)))


def _cos(theta):
    return float(cosdg(math.degrees(theta)))


def postselect_probability_lowest_order(p: InteractionParams):
    """Lowest-order (signal, noise) for an initial coherent state."""
    s = 0.5 * p.kappa**2 * (1 - _cos(p.theta))
    n = 0.25 * p.kappa**2 * abs(p.gamma0) ** 2 * _sin(p.theta) ** 2
    return s, n


def thermal_postselect_probability(nbar: float, kappa: float, theta: float):
    """Lowest-order (signal, noise) averaged over a thermal mixture."""
    if nbar < 0:
        raise ValueError("nbar must be non-negative")
    s = kappa**2 * _sin(theta / 2) ** 2
    n = 0.25 * kappa**2 * nbar * _sin(theta) ** 2
    return s, n


def thermal_exact_probability(nbar: float, kappa: float, theta: float) -> float:
    """Thermal average of ``exact_probability`` in closed form.

    The phase term Im(gamma(t)* alpha) is Gaussian with variance
    nbar |alpha|^2 / 2 over the thermal mixture, so its characteristic
    function gives the average directly.
    """
    if nbar < 0:
        raise ValueError("nbar must be non-negative")
    alpha2 = abs(kappa * (1 - np.exp(-1j * theta))) ** 2
    phi = kappa**2 * (theta - math.sin(theta))
    return 0.5 * (1 - math.cos(phi) * math.exp(-alpha2 * (2 + nbar) / 4))


def signal_to_noise(nbar: float, theta: float) -> float:
    """sec^2(theta/2) / nbar, the thermal signal-to-noise ratio."""
    if nbar == 0:
        return math.inf
    c2 = _cos(theta / 2) ** 2
    return math.inf if c2 == 0 else 1.0 / (c2 * nbar)


def sample_thermal_gamma(nbar: float, rng: np.random.Generator, size=None):
    """Draw coherent amplitudes from the thermal P-function exp(-|g|^2/nbar)/(pi nbar)."""
    if nbar < 0:
        raise ValueError("nbar must be non-negative")
    if nbar == 0:
        return 0j if size is None else np.zeros(size, dtype=complex)
    sigma = math.sqrt(nbar / 2)
    re = rng.normal(0.0, sigma, size)
    im = rng.normal(0.0, sigma, size)
    return re + 1j * im


@dataclass
class MonteCarloEstimate:
    mean: float
    stderr: float
    samples: int

    def within(self, value, nsigma=3.0) -> bool:
        return abs(self.mean - value) <= nsigma * self.stderr


def _estimate(values):
    n = len(values)
    return MonteCarloEstimate(float(np.mean(values)), float(np.std(values, ddof=1) / math.sqrt(n)), n)


def thermal_monte_carlo(nbar, kappa, theta, samples=100_000, seed=0, exact=True):
    """Monte Carlo average of the postselection probability over thermal amplitudes.

    ``exact=True`` averages the closed-form exact probability; otherwise the
    lowest-order signal + noise.
    """
    rng = np.random.default_rng(seed)
    g = sample_thermal_gamma(nbar, rng, samples)
    if exact:
        vals = exact_probability(kappa, theta, g)
    else:
        vals = 0.5 * kappa**2 * (1 - math.cos(theta)) + 0.25 * kappa**2 * abs(g) ** 2 * math.sin(theta) ** 2
    return _estimate(vals)


def nbar_from_temperature(T: float, omega_m: float) -> float:
    if T < 0 or omega_m <= 0:
        raise ValueError("need T >= 0 and omega_m > 0")
    if T == 0:
        return 0.0
    return 1.0 / math.expm1(HBAR * omega_m / (K_B * T))
