"""Truncated number-basis linear algebra for a single mechanical mode.

States are complex 1-D numpy arrays over |0>..|dim-1>, operators are dense
dim x dim complex arrays. Coherent-state constructors refuse to build a
state whose population above the truncation exceeds ``TAIL_TOL``.
"""

import numpy as np
from scipy.linalg import expm

from .physconst import HBAR

TAIL_TOL = 1e-8


class InvalidDimensionError(ValueError):
    pass


class TruncationError(ValueError):
    """Raised when a state does not fit in the requested basis."""

    def __init__(self, msg, tail):
        super().__init__(f"{msg} (tail mass {tail:.3e} > {TAIL_TOL:.0e})")
        self.tail = tail


def _check_dim(dim, minimum=2):
    if int(dim) != dim or dim < minimum:
        raise InvalidDimensionError(f"dim must be an integer >= {minimum}, got {dim!r}")


def suggested_dim(gamma) -> int:
    """Rule-of-thumb truncation for a coherent state of amplitude ``gamma``."""
    r = abs(gamma)
    return int(np.ceil(r * r + 8 * r + 10))


def basis(n: int, dim: int) -> np.ndarray:
    _check_dim(dim, 1)
    if not 0 <= n < dim:
        raise InvalidDimensionError(f"level {n} outside basis of size {dim}")
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return v


def annihilation(dim: int) -> np.ndarray:
    _check_dim(dim)
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def creation(dim: int) -> np.ndarray:
    return annihilation(dim).conj().T


def number(dim: int) -> np.ndarray:
    _check_dim(dim)
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def _poisson_amplitudes(gamma, dim):
    # amps[n] = gamma^n / sqrt(n!), by recurrence to avoid factorial overflow
    amps = np.empty(dim, dtype=complex)
    amps[0] = 1.0
    for n in range(1, dim):
        amps[n] = amps[n - 1] * gamma / np.sqrt(n)
    return amps


def coherent_state(gamma: complex, dim: int) -> np.ndarray:
    _check_dim(dim, 1)
    gamma = complex(gamma)
    amps = np.exp(-abs(gamma) ** 2 / 2) * _poisson_amplitudes(gamma, dim)
    tail = 1.0 - np.vdot(amps, amps).real
    if tail > TAIL_TOL:
        raise TruncationError(f"coherent state |{gamma}> does not fit in dim={dim}", tail)
    return amps


def added_coherent_state(gamma: complex, dim: int) -> np.ndarray:
    """Normalized photon-added coherent state c^dag|gamma> / sqrt(|gamma|^2 + 1)."""
    _check_dim(dim)
    gamma = complex(gamma)
    amps = np.zeros(dim, dtype=complex)
    n = np.arange(1, dim)
    amps[1:] = _poisson_amplitudes(gamma, dim - 1) * np.sqrt(n)
    amps *= np.exp(-abs(gamma) ** 2 / 2) / np.sqrt(abs(gamma) ** 2 + 1)
    tail = 1.0 - np.vdot(amps, amps).real
    if tail > TAIL_TOL:
        raise TruncationError(f"added coherent state |{gamma},1> does not fit in dim={dim}", tail)
    return amps


def displacement(eta: complex, dim: int) -> np.ndarray:
    """D(eta) = exp(eta c^dag - eta* c), exponentiated in the truncated space.

    Only the block well below the truncation edge is accurate; keep
    ``dim`` comfortably above the populations involved.
    """
    _check_dim(dim)
    a = annihilation(dim)
    eta = complex(eta)
    return expm(eta * a.conj().T - np.conj(eta) * a)


def position_operator(dim: int, x0: float) -> np.ndarray:
    """x = x0 (c + c^dag)."""
    _check_dim(dim)
    if x0 <= 0:
        raise ValueError("x0 must be positive")
    a = annihilation(dim)
    return x0 * (a + a.conj().T)


def momentum_operator(dim: int, x0: float) -> np.ndarray:
    """p = hbar / (2 x0) * i (c^dag - c), conjugate to ``position_operator``."""
    _check_dim(dim)
    if x0 <= 0:
        raise ValueError("x0 must be positive")
    a = annihilation(dim)
    return (HBAR / (2 * x0)) * 1j * (a.conj().T - a)


def norm(psi: np.ndarray) -> float:
    return float(np.sqrt(np.vdot(psi, psi).real))


def normalize(psi: np.ndarray) -> np.ndarray:
    return psi / norm(psi)


def fidelity(psi: np.ndarray, phi: np.ndarray) -> float:
    """|<psi|phi>|^2 of two normalized states."""
    return float(abs(np.vdot(psi, phi)) ** 2)


def expect(op: np.ndarray, psi: np.ndarray) -> complex:
    return complex(np.vdot(psi, op @ psi))
