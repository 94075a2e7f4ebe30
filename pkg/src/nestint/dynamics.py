"""Master-equation dynamics of the mechanical superposition in the number basis.

Two generators are provided: the Caldeira-Leggett form for environmentally
induced decoherence (unitary + damping + diffusion) and a position-localized
form -Lambda [x, [x, rho]] shared by CSL and quantum-gravity models in the
small-separation limit. Trajectories start from (|0> + |1>)/sqrt(2), whose
interference visibility 2|rho_01| is the quantity the outer interferometer
reads out.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import expm

from . import decoherence as dec
from . import fock
from .physconst import HBAR, K_B

DEFAULT_DIM = 10


class IntegratorError(RuntimeError):
    def __init__(self, msg, diagnostics):
        super().__init__(f"{msg}: {diagnostics}")
        self.diagnostics = diagnostics


def _comm(a, b):
    return a @ b - b @ a


@dataclass
class Generator:
    """Right-hand side d(rho)/dt as a sum of named terms."""

    terms: dict
    omega_m: float = 0.0
    rate: float = 0.0  # characteristic decoherence rate, 1/s

    def __call__(self, rho):
        it = iter(self.terms.values())
        out = next(it)(rho)
        for term in it:
            out = out + term(rho)
        return out

    def only(self, *names):
        return Generator({k: self.terms[k] for k in names}, self.omega_m, self.rate)


def _unitary_term(omega_m, dim):
    n = np.arange(dim, dtype=float)
    # (i/hbar)[rho, hbar omega n] is diagonal in the number basis: i omega (n_j - n_i) rho_ij
    phase = 1j * omega_m * (n[None, :] - n[:, None])

    def unitary(rho):
        return phase * rho

    return unitary


def _double_commutator_term(coef, x):
    def localize(rho):
        return -coef * _comm(x, _comm(x, rho))

    return localize


def eid_generator(device, T_env: float, dim: int = DEFAULT_DIM) -> Generator:
    """Caldeira-Leggett generator with damping omega_m / Q_m and diffusion 2 m gamma k_B T."""
    if dim < 3:
        raise fock.InvalidDimensionError("EID dynamics needs dim >= 3")
    omega, x0 = device.omega_m, device.x0
    gamma_m = omega / device.Q_m
    D = 2 * device.m * gamma_m * K_B * T_env
    x = fock.position_operator(dim, x0)
    p = fock.momentum_operator(dim, x0)

    def damping(rho):
        return -1j * gamma_m / HBAR * _comm(x, p @ rho + rho @ p)

    coef = D / HBAR**2
    terms = {
        "unitary": _unitary_term(omega, dim),
        "damping": damping,
        "diffusion": _double_commutator_term(coef, x),
    }
    return Generator(terms, omega, 4 * coef * x0**2)


def localized_generator(Lambda: float, x0: float, dim: int = DEFAULT_DIM, omega_m: float = 0.0) -> Generator:
    if dim < 2:
        raise fock.InvalidDimensionError("dim must be >= 2")
    x = fock.position_operator(dim, x0)
    terms = {
        "unitary": _unitary_term(omega_m, dim),
        "localization": _double_commutator_term(Lambda, x),
    }
    return Generator(terms, omega_m, 4 * Lambda * x0**2)


def liouvillian(rhs: Callable, dim: int) -> np.ndarray:
    """Dense superoperator of a linear ``rhs`` acting on row-major vec(rho)."""
    L = np.empty((dim * dim, dim * dim), dtype=complex)
    for k in range(dim * dim):
        e = np.zeros(dim * dim, dtype=complex)
        e[k] = 1.0
        L[:, k] = rhs(e.reshape(dim, dim)).ravel()
    return L


# --------------------------------------------------------------------------
# Mechanism descriptions and evolution specs


@dataclass(frozen=True)
class EID:
    T_env: float
    label: str = "eid"


@dataclass(frozen=True)
class Localized:
    Lambda: float
    label: str = "localized"


def mechanism_for(device, name: str, T_env: float = 1e-3):
    """Build an evolution mechanism from a report-style name (eid, csl, qg)."""
    if name == "eid":
        return EID(T_env)
    if name in ("csl", "qg"):
        R, b = device.geometry()
        loc = dec.csl_localization(device.m, R, b) if name == "csl" else dec.qg_localization(device.m, R, b)
        return Localized(loc.Lambda, name)
    raise ValueError(f"no master equation for mechanism {name!r}; use eid, csl or qg")


def build_generator(mechanism, device, dim: int = DEFAULT_DIM) -> Generator:
    if isinstance(mechanism, EID):
        return eid_generator(device, mechanism.T_env, dim)
    if isinstance(mechanism, Localized):
        return localized_generator(mechanism.Lambda, device.x0, dim, device.omega_m)
    raise TypeError(f"unknown mechanism {mechanism!r}")


@dataclass
class EvolutionSpec:
    t_final: float
    dt: float
    mechanism: object = None
    device: object = None
    dim: int = DEFAULT_DIM
    t_eval: Optional[Sequence[float]] = None
    trace_tol: float = 1e-6
    negativity_tol: Optional[float] = 1e-8

    def __post_init__(self):
        if self.t_final < 0 or self.dt <= 0:
            raise ValueError("need t_final >= 0 and dt > 0")
        if self.device is not None and self.mechanism is not None:
            rate = build_generator(self.mechanism, self.device, 3).rate
            limit = max_step(self.device.omega_m, rate)
            if self.dt > limit * (1 + 1e-12):
                raise ValueError(f"dt={self.dt:.3g} s exceeds resolution limit {limit:.3g} s")

    def generator(self) -> Generator:
        return build_generator(self.mechanism, self.device, self.dim)


def max_step(omega_m: float, rate: float) -> float:
    """Largest admissible RK4 step: 0.01 / max(omega_m, decoherence rate)."""
    fastest = max(omega_m, rate)
    return math.inf if fastest == 0 else 0.01 / fastest


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (len(times), dim, dim)
    max_step_trace_drift: float = 0.0
    trace_drift: float = 0.0
    min_eigenvalue: float = 0.0
    max_hermiticity_error: float = 0.0
    max_top_population: float = 0.0
    steps: int = 0

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def visibility(self) -> np.ndarray:
        return np.array([visibility(r) for r in self.states])


def _rk4(rhs, rho, dt):
    k1 = rhs(rho)
    k2 = rhs(rho + 0.5 * dt * k1)
    k3 = rhs(rho + 0.5 * dt * k2)
    k4 = rhs(rho + dt * k3)
    return rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(rho0: np.ndarray, rhs: Callable, spec: EvolutionSpec) -> Trajectory:
    """Fixed-step RK4 from t = 0, recording at ``spec.t_eval`` (default: every step).

    Each recording interval is split into equal steps no longer than
    ``spec.dt``. States are never renormalized; trace drift, Hermiticity and
    the smallest eigenvalue are tracked and checked against its tolerances.
    """
    rho = np.array(rho0, dtype=complex)
    dim = rho.shape[0]
    tr0 = np.trace(rho).real
    if spec.t_eval is None:
        n = int(math.ceil(spec.t_final / spec.dt * (1 - 1e-12)))
        t_eval = np.linspace(0.0, spec.t_final, n + 1)
    else:
        t_eval = np.asarray(spec.t_eval, dtype=float)
        if np.any(np.diff(t_eval) < 0) or (t_eval.size and t_eval[0] < 0):
            raise ValueError("t_eval must be sorted and non-negative")

    traj = Trajectory(t_eval, np.empty((len(t_eval), dim, dim), dtype=complex))
    traj.min_eigenvalue = math.inf
    t = 0.0
    for i, target in enumerate(t_eval):
        span = target - t
        if span > 0:
            n = int(math.ceil(span / spec.dt * (1 - 1e-12)))
            h = span / n
            for _ in range(n):
                prev_tr = np.trace(rho).real
                rho = _rk4(rhs, rho, h)
                traj.max_step_trace_drift = max(traj.max_step_trace_drift, abs(np.trace(rho).real - prev_tr))
            traj.steps += n
            t = target
        _record(traj, i, rho, tr0, spec)
    return traj


def _record(traj, i, rho, tr0, spec):
    traj.states[i] = rho
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    traj.max_hermiticity_error = max(traj.max_hermiticity_error, herm)
    traj.trace_drift = max(traj.trace_drift, abs(np.trace(rho).real - tr0))
    traj.max_top_population = max(traj.max_top_population, float(rho[-1, -1].real))
    lam = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    traj.min_eigenvalue = min(traj.min_eigenvalue, lam)
    diag = {"t_index": i, "trace_drift": traj.trace_drift, "min_eigenvalue": lam}
    if traj.trace_drift > spec.trace_tol:
        raise IntegratorError("trace drift beyond tolerance", diag)
    if spec.negativity_tol is not None and lam < -spec.negativity_tol:
        raise IntegratorError("density matrix lost positivity", diag)


def propagate_exact(rho0: np.ndarray, rhs: Callable, t_eval: Sequence[float]) -> np.ndarray:
    """Propagate with the matrix exponential of the dense Liouvillian.

    Intended for horizons far beyond what fixed-step RK4 can cover at the
    mechanical frequency; returns an array of states at ``t_eval``.
    """
    dim = rho0.shape[0]
    L = liouvillian(rhs, dim)
    v = np.asarray(rho0, dtype=complex).ravel()
    out = np.empty((len(t_eval), dim, dim), dtype=complex)
    t = 0.0
    last_span, step = None, None
    for i, target in enumerate(t_eval):
        span = target - t
        if span > 0:
            if last_span is None or not math.isclose(span, last_span, rel_tol=1e-12):
                last_span, step = span, expm(L * span)
            v = step @ v
            t = target
        out[i] = v.reshape(dim, dim)
    return out


def plus_state(dim: int = DEFAULT_DIM) -> np.ndarray:
    psi = (fock.basis(0, dim) + fock.basis(1, dim)) / math.sqrt(2)
    return np.outer(psi, psi.conj())


def visibility(rho: np.ndarray) -> float:
    """Interference contrast 2|rho_01| of the |0>, |1> superposition."""
    return float(min(1.0, 2 * abs(rho[0, 1])))


@dataclass
class VisibilityCurve:
    times: np.ndarray
    columns: dict = field(default_factory=dict)  # label -> visibility array
    diagnostics: dict = field(default_factory=dict)


def _curve_column(device, mechanism, times, dim, method, dt):
    gen = build_generator(mechanism, device, dim)
    rho0 = plus_state(dim)
    if method == "auto":
        step = dt or max_step(gen.omega_m, gen.rate)
        method = "rk4" if times[-1] / step <= 2_000_000 else "exact"
    if method == "rk4":
        spec = EvolutionSpec(times[-1], dt or max_step(gen.omega_m, gen.rate), t_eval=times, dim=dim, negativity_tol=None)
        traj = integrate(rho0, gen, spec)
        diag = {
            "method": "rk4",
            "steps": traj.steps,
            "trace_drift": traj.trace_drift,
            "top_population": traj.max_top_population,
        }
        return traj.visibility(), diag
    if method == "exact":
        states = propagate_exact(rho0, gen, times)
        top = float(np.max(states[:, -1, -1].real))
        return np.array([visibility(r) for r in states]), {"method": "exact", "top_population": top}
    raise ValueError(f"unknown method {method!r}")


def visibility_curve(device, mechanisms, t_grid, dim=DEFAULT_DIM, method="auto", dt=None, workers=None) -> VisibilityCurve:
    """Visibility of (|0>+|1>)/sqrt(2) versus time, one column per mechanism.

    Mechanisms run independently (optionally in worker threads); columns
    keep the order given.
    """
    times = np.asarray(t_grid, dtype=float)
    if times.size == 0 or np.any(np.diff(times) < 0) or times[0] < 0:
        raise ValueError("t_grid must be non-empty, sorted and non-negative")
    curve = VisibilityCurve(times)
    if not mechanisms:
        curve.columns["none"] = np.ones_like(times)
        return curve
    labels = [m.label for m in mechanisms]
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate mechanism labels {labels}")

    def run(mech):
        return _curve_column(device, mech, times, dim, method, dt)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, mechanisms))
    else:
        results = [run(m) for m in mechanisms]
    for label, (col, diag) in zip(labels, results):
        curve.columns[label] = col
        curve.diagnostics[label] = diag
    return curve


def decay_time(times, values, level=math.exp(-1)) -> float:
    """First time ``values`` drops to ``level``, linearly interpolated."""
    values = np.asarray(values)
    below = np.nonzero(values <= level)[0]
    if below.size == 0:
        return math.inf
    j = below[0]
    if j == 0:
        return float(times[0])
    t0, t1, v0, v1 = times[j - 1], times[j], values[j - 1], values[j]
    return float(t0 + (level - v0) * (t1 - t0) / (v1 - v0))
