"""Decoherence timescales for a resonator held in a zero-point-sized superposition.

Four mechanisms are covered: environmentally induced decoherence (EID),
Penrose/Diosi gravitational self-energy with four mass-distribution models,
continuous spontaneous localization (CSL), and quantum-gravity localization.
A mechanism is deemed testable when it acts faster than EID.
"""

from dataclasses import dataclass, field
import enum
import math
from typing import Optional
import warnings

import numpy as np
from scipy import integrate, special

from .physconst import C, G, HBAR, K_B, M0, M_P


class ConvergenceError(RuntimeError):
    """A quadrature did not reach its target; carries the last estimates."""

    def __init__(self, msg, estimates):
        super().__init__(f"{msg}; last estimates {estimates}")
        self.estimates = tuple(estimates)


# --------------------------------------------------------------------------
# Environmentally induced decoherence


def eid_timescale(Q_m: float, T_env: float) -> float:
    """hbar Q_m / (2 k_B T_env)."""
    if Q_m <= 0 or T_env <= 0:
        raise ValueError("Q_m and T_env must be positive")
    return HBAR * Q_m / (2 * K_B * T_env)


def eid_timescale_quoted(Q_m: float, T_env: float) -> float:
    """hbar Q_m / (k_B T_env).

    Twice ``eid_timescale``; this is the convention behind the commonly
    quoted 150 us / 15 ms figures for the proposed devices at 1 mK.
    """
    return 2 * eid_timescale(Q_m, T_env)


def eid_temperature(omega_m: float, Q_m: float) -> float:
    if omega_m <= 0 or Q_m <= 0:
        raise ValueError("omega_m and Q_m must be positive")
    return HBAR * omega_m * Q_m / K_B


def eid_rate(omega_m: float, T_env: float, T_EID: float) -> float:
    """Inverse EID time written as 2 omega_m T_env / T_EID."""
    return 2 * omega_m * T_env / T_EID


# --------------------------------------------------------------------------
# Gravitational self-energy


def overlap_potential(M: float, m: float, a: float, dx: float) -> float:
    """Gravitational energy between two uniform spheres of radius ``a`` at separation ``dx``."""
    if a <= 0 or dx < 0:
        raise ValueError("need a > 0 and dx >= 0")
    if dx > 2 * a:
        return -G * M * m / dx
    return -G * M * m * ((12 * a**2 - 5 * dx**2) / (10 * a**3) - (dx**5 - 30 * dx**3 * a**2) / (160 * a**6))


def _overlap_excess(u: float) -> float:
    """(E(dx) - E(0)) / (G M m / a) with u = dx / a, free of cancellation."""
    if u > 2:
        return 1.2 - 1.0 / u
    return u * u * (0.5 - 3 * u / 16 + u**3 / 160)


@dataclass(frozen=True)
class SpherePair:
    M: float  # total superposed mass, kg
    m: float  # mass per sphere, kg
    a: float  # sphere radius, m
    dx: float  # separation, m

    def __post_init__(self):
        if not (self.M > 0 and self.m > 0 and self.a > 0 and self.dx >= 0):
            raise ValueError(f"invalid sphere pair {self}")


def penrose_energy(sp: SpherePair) -> float:
    """Penrose/Diosi energy 4 pi (E12 + E21 - E11 - E22) for the pair."""
    return 8 * math.pi * G * sp.M * sp.m / sp.a * _overlap_excess(sp.dx / sp.a)


def _gauss_legendre_panels(lo, hi, panels, order):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _unit_sphere_potential(r):
    # potential of a unit-mass, unit-radius uniform ball, in units of G
    r = np.asarray(r)
    inside = 0.5 * (3 - r * r)
    with np.errstate(divide="ignore"):
        outside = 1.0 / r
    return np.where(r < 1, inside, outside)


def _interaction_integral(u, panels, order=8):
    """Double integral of rho1 rho2 / |x - y| for unit spheres at separation u.

    Sphere 1's potential follows from Gauss's law; sphere 2's volume is
    swept with cylindrical coordinates (z along the separation, s radial),
    using composite Gauss-Legendre in z and in s / sqrt(1 - z^2).
    """
    z, wz = _gauss_legendre_panels(-1.0, 1.0, panels, order)
    t, wt = _gauss_legendre_panels(0.0, 1.0, panels, order)
    smax = np.sqrt(1 - z * z)
    s = smax[:, None] * t[None, :]
    r = np.hypot(z[:, None] + u, s)
    jac = 2 * np.pi * s * smax[:, None]
    density = 3 / (4 * np.pi)
    return density * np.sum(wz[:, None] * wt[None, :] * jac * _unit_sphere_potential(r))


def brute_force_interaction(M, m, a, dx, rtol=1e-6, max_panels=4096):
    """Interaction energy of two uniform spheres by direct quadrature.

    Independent of the closed-form ``overlap_potential``; panel counts double
    until successive estimates agree to ``rtol``.
    """
    u = dx / a
    prev = None
    panels = 8
    while panels <= max_panels:
        est = _interaction_integral(u, panels)
        if prev is not None and abs(est - prev) <= rtol * abs(est):
            return -G * M * m / a * est
        prev = est
        panels *= 2
    raise ConvergenceError("sphere interaction quadrature did not converge", (prev, est))


def brute_force_penrose(sp: SpherePair, rtol=1e-6, max_panels=4096) -> float:
    e12 = brute_force_interaction(sp.M, sp.m, sp.a, sp.dx, rtol, max_panels)
    e11 = brute_force_interaction(sp.M, sp.m, sp.a, 0.0, rtol, max_panels)
    return 8 * math.pi * (e12 - e11)


class MassModel(str, enum.Enum):
    ZERO_POINT = "zero_point"
    NUCLEAR_RADIUS = "nuclear_radius"
    DEBYE = "debye"
    HOMOGENEOUS = "homogeneous"


HOMOGENEOUS_RADIUS = 30e-6
HOMOGENEOUS_MASS = 60e-12


@dataclass(frozen=True)
class MassDistributionModel:
    kind: MassModel
    radius: Optional[float] = None  # homogeneous sphere radius override
    mass: Optional[float] = None  # homogeneous sphere mass override

    def __post_init__(self):
        object.__setattr__(self, "kind", MassModel(self.kind))


def _as_model(model):
    if isinstance(model, MassDistributionModel):
        return model
    return MassDistributionModel(MassModel(model))


def sphere_radius(model, device, material=None) -> float:
    model = _as_model(model)
    material = material if material is not None else getattr(device, "material", None)
    if model.kind is MassModel.ZERO_POINT:
        return device.x0
    if model.kind is MassModel.HOMOGENEOUS:
        return model.radius if model.radius is not None else HOMOGENEOUS_RADIUS
    if material is None:
        from .devices import DeviceConfigError

        raise DeviceConfigError("material", f"{model.kind.value} model needs material data")
    if model.kind is MassModel.NUCLEAR_RADIUS:
        return material.r0 * material.A ** (1 / 3)
    return 3 * HBAR / (2 * math.sqrt(K_B * material.theta_D * material.atomic_mass))


def sphere_pair(device, model, material=None) -> SpherePair:
    model = _as_model(model)
    material = material if material is not None else getattr(device, "material", None)
    a = sphere_radius(model, device, material)
    if model.kind is MassModel.HOMOGENEOUS:
        M = model.mass if model.mass is not None else HOMOGENEOUS_MASS
        return SpherePair(M, M, a, device.x0)
    return SpherePair(device.m, material.nuclear_mass, a, device.x0)


def penrose_timescale(device, model, material=None) -> float:
    return HBAR / penrose_energy(sphere_pair(device, model, material))


# --------------------------------------------------------------------------
# Position-localization models (CSL, quantum gravity)

A_CSL = 100e-9
GAMMA0_CSL = 1e-16
A_QG = HBAR * M_P / (2 * C * M0**2)
GAMMA0_QG = 4 * A_QG**2 * C**4 * M0**6 / (HBAR**3 * M_P**3)


def _disk_kernel(x, xp):
    # e^{-(x^2+x'^2)} I0(2xx') rewritten with the exponentially scaled Bessel
    return x * xp * np.exp(-((x - xp) ** 2)) * special.i0e(2 * x * xp)


# Beyond this distance from the diagonal the kernel is below e^-49 of its peak.
_BAND = 7.0


def _disk_integral(X, tol, budget):
    calls = [0]

    def kernel(xp, x):
        calls[0] += 1
        if calls[0] > budget:
            raise ConvergenceError("geometry-factor evaluation budget exhausted", (np.nan,))
        return _disk_kernel(x, xp)

    def inner(x):
        val, err = integrate.quad(kernel, max(0.0, x - _BAND), x, args=(x,), epsabs=0, epsrel=tol / 10, limit=200)
        return val

    # the integrand is symmetric in (x, x'), so integrate the lower triangle
    breaks = np.linspace(0.0, X, int(min(max(X / 2, 1), 400)) + 1)
    total, err_total = 0.0, 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            for lo, hi in zip(breaks[:-1], breaks[1:]):
                val, err = integrate.quad(inner, lo, hi, epsabs=0, epsrel=tol / 10, limit=200)
                total += val
                err_total += err
        except integrate.IntegrationWarning as exc:
            raise ConvergenceError(f"geometry-factor quadrature failed: {exc}", (2 * total,)) from None
    if err_total > tol * abs(total):
        raise ConvergenceError("geometry-factor quadrature error above tolerance", (2 * total,))
    return 2 * total


def disk_geometry_factor(R: float, b: float, a_loc: float, tol: float = 1e-8, budget: int = 10_000_000) -> float:
    """Geometry factor of a disk (radius R, thickness b) moving along its axis.

    Falls back to the closed forms when they are already within ``tol``:
    (2a/R)^2 (2a/b)^2 for a disk much larger than the localization length,
    1 for one much smaller.
    """
    if R <= 0 or b <= 0 or a_loc <= 0:
        raise ValueError("R, b and a_loc must be positive")
    if not 0 < tol <= 1e-4:
        raise ValueError("tol must lie in (0, 1e-4]")
    X = R / (2 * a_loc)
    B = b / (2 * a_loc)
    if X * X + B * B < tol:
        return 1.0
    # leading corrections to the large-disk form: edge term 1/(sqrt(pi) X) and e^{-B^2}
    if 1 / (math.sqrt(math.pi) * X) < tol / 2 and math.exp(-B * B) < tol / 2:
        return (1 / X) ** 2 * (1 / B) ** 2
    thickness = -math.expm1(-B * B) / B**2
    return 4 / X**4 * thickness * _disk_integral(X, tol, budget)


def disk_geometry_asymptote(R: float, b: float, a_loc: float) -> float:
    return (2 * a_loc / R) ** 2 * (2 * a_loc / b) ** 2


@dataclass(frozen=True)
class LocalizationParams:
    a_loc: float  # localization distance, m
    gamma0: float  # single-nucleon localization rate, Hz
    Lambda: float  # localization parameter, Hz / m^2
    geometry_factor: float = 1.0
    M: Optional[float] = None

    @property
    def gamma_total(self) -> float:
        """Effective localization strength consistent with Lambda = gamma / (4 a^2)."""
        return 4 * self.a_loc**2 * self.Lambda


def csl_localization(M: float, R: float, b: float, tol: float = 1e-8) -> LocalizationParams:
    f = disk_geometry_factor(R, b, A_CSL, tol)
    lam = (M / M0) ** 2 * GAMMA0_CSL / (4 * A_CSL**2) * f
    return LocalizationParams(A_CSL, GAMMA0_CSL, lam, f, M)


def qg_lambda_closed_form(M: float) -> float:
    return C**4 * M**2 * M0**4 / (HBAR**3 * M_P**3)


def qg_localization(M: float, R: float, b: float, tol: float = 1e-8) -> LocalizationParams:
    f = disk_geometry_factor(R, b, A_QG, tol)
    lam = (M / M0) ** 2 * GAMMA0_QG / (4 * A_QG**2) * f
    return LocalizationParams(A_QG, GAMMA0_QG, lam, f, M)


class RegimeWarning(UserWarning):
    pass


def localization_timescale(Lambda: float, dx: float, a_loc: Optional[float] = None) -> float:
    """1 / (Lambda dx^2), valid while dx << 2 a_loc; infinite for dx = 0."""
    if Lambda < 0 or dx < 0:
        raise ValueError("Lambda and dx must be non-negative")
    if a_loc is not None and dx > 0.1 * 2 * a_loc:
        warnings.warn(f"separation {dx:.3g} m not small against 2a = {2 * a_loc:.3g} m", RegimeWarning, stacklevel=2)
    if dx == 0 or Lambda == 0:
        return math.inf
    return 1.0 / (Lambda * dx * dx)


# --------------------------------------------------------------------------
# Reports

MECHANISMS = ("zero_point", "nuclear_radius", "debye", "homogeneous", "csl", "qg")


@dataclass
class MechanismResult:
    tau: Optional[float]
    tau_eid: float
    error: Optional[str] = None
    numerical: bool = False  # error came from a failed computation, not missing input

    @property
    def testable(self) -> Optional[bool]:
        if self.tau is None:
            return None
        return self.tau < self.tau_eid


@dataclass
class TimescaleReport:
    device: str
    T_env: float
    tau_eid: float
    tau_eid_quoted: float
    x0: float
    results: dict = field(default_factory=dict)

    def rows(self):
        for name, res in self.results.items():
            yield name, res.tau, res.testable, res.error


def mechanism_timescale(device, name: str) -> float:
    if name in (m.value for m in MassModel):
        return penrose_timescale(device, name)
    if name in ("csl", "qg"):
        R, b = device.geometry()
        loc = csl_localization(device.m, R, b) if name == "csl" else qg_localization(device.m, R, b)
        return localization_timescale(loc.Lambda, device.x0, loc.a_loc)
    raise ValueError(f"unknown mechanism {name!r}; choose from {', '.join(MECHANISMS)}")


def full_report(device, T_env: float = 1e-3, models=MECHANISMS) -> TimescaleReport:
    tau_eid = eid_timescale(device.Q_m, T_env)
    report = TimescaleReport(device.name, T_env, tau_eid, eid_timescale_quoted(device.Q_m, T_env), device.x0)
    for name in models:
        try:
            tau = mechanism_timescale(device, name)
            report.results[name] = MechanismResult(tau, tau_eid)
        except (ValueError, ConvergenceError) as exc:
            report.results[name] = MechanismResult(None, tau_eid, str(exc), isinstance(exc, ConvergenceError))
    return report
