"""Resonator registry, material data, device files and derived parameters.

Device files are UTF-8 ``key = value`` lines with units in the key names::

    # Proposed device no. 1
    name = proposed1
    mass_ng = 1
    f_m_khz = 300
    L_cm = 0.5
    finesse = 300000
    Q_m = 20000
    radius_um = 4
    thickness_um = 5
    wavelength_nm = 1064
    material = tantalum

``radius_um`` and ``thickness_um`` are optional; everything else except
``wavelength_nm`` (default 1064) and ``material`` (default tantalum) is
required.
"""

from dataclasses import dataclass
from pathlib import Path
import math
from typing import Optional

from .physconst import AMU, C, HBAR, K_B

DEFAULT_WAVELENGTH = 1.064e-6


class DeviceConfigError(ValueError):
    """Invalid or incomplete device description; ``field`` names the culprit."""

    def __init__(self, field, msg):
        super().__init__(f"{field}: {msg}")
        self.field = field


@dataclass(frozen=True)
class Material:
    name: str
    A: int
    atomic_mass: float  # kg
    theta_D: float  # K
    r0: float = 1.25e-15  # m

    @property
    def nuclear_mass(self) -> float:
        return self.A * AMU


TANTALUM = Material("tantalum", 181, 180.94788 * AMU, 240.0)

MATERIALS = {TANTALUM.name: TANTALUM}


@dataclass(frozen=True)
class DeviceParams:
    name: str
    m: float  # effective mass, kg
    f_m: float  # mechanical frequency, Hz
    L: float  # cavity length, m
    F: float  # finesse
    Q_m: float
    R: Optional[float] = None  # mirror radius, m
    b: Optional[float] = None  # mirror thickness, m
    wavelength: float = DEFAULT_WAVELENGTH
    material: Material = TANTALUM

    def __post_init__(self):
        for attr in ("m", "f_m", "L", "F", "Q_m", "wavelength"):
            if not getattr(self, attr) > 0:
                raise DeviceConfigError(attr, "must be positive")
        for attr in ("R", "b"):
            v = getattr(self, attr)
            if v is not None and not v > 0:
                raise DeviceConfigError(attr, "must be positive")

    @property
    def omega_m(self) -> float:
        return 2 * math.pi * self.f_m

    @property
    def x0(self) -> float:
        return math.sqrt(HBAR / (2 * self.m * self.omega_m))

    @property
    def has_geometry(self) -> bool:
        return self.R is not None and self.b is not None

    def geometry(self):
        """(R, b) or a configuration error when the file omitted them."""
        if self.R is None:
            raise DeviceConfigError("radius_um", f"device {self.name!r} has no mirror radius")
        if self.b is None:
            raise DeviceConfigError("thickness_um", f"device {self.name!r} has no mirror thickness")
        return self.R, self.b


@dataclass(frozen=True)
class DerivedParams:
    omega_m: float  # rad/s
    x0: float  # m
    kappa: float
    cavity_linewidth: float  # rad/s
    sideband_ratio: float
    T_EID: float  # K


def derive(device: DeviceParams) -> DerivedParams:
    w = device.omega_m
    x0 = device.x0
    omega_o = 2 * math.pi * C / device.wavelength
    g = omega_o * x0 / device.L
    linewidth = math.pi * C / (device.L * device.F)
    return DerivedParams(
        omega_m=w,
        x0=x0,
        kappa=g / w,
        cavity_linewidth=linewidth,
        sideband_ratio=w / linewidth,
        T_EID=HBAR * w * device.Q_m / K_B,
    )


_NG, _KHZ, _CM, _UM = 1e-12, 1e3, 1e-2, 1e-6

_BUILTIN = (
    DeviceParams("tramp1", 60 * _NG, 158 * _KHZ, 5 * _CM, 38_000, 43_000),
    DeviceParams("tramp2", 110 * _NG, 9.71 * _KHZ, 5 * _CM, 29_000, 940_000),
    DeviceParams("proposed1", 1 * _NG, 300 * _KHZ, 0.5 * _CM, 300_000, 20_000, R=4 * _UM, b=5 * _UM),
    DeviceParams("proposed2", 100 * _NG, 4.5 * _KHZ, 5 * _CM, 2_000_000, 2_000_000, R=40 * _UM, b=5 * _UM),
)


def builtin_devices() -> list:
    return list(_BUILTIN)


def get_device(name: str) -> DeviceParams:
    key = name.lower().replace("#", "").replace("_", "").replace("-", "")
    for dev in _BUILTIN:
        if dev.name == key:
            return dev
    raise KeyError(name)


def resolve_device(selector: str) -> DeviceParams:
    """Builtin name or path to a device file."""
    try:
        return get_device(selector)
    except KeyError:
        pass
    path = Path(selector)
    if not path.is_file():
        known = ", ".join(d.name for d in _BUILTIN)
        raise DeviceConfigError("device", f"{selector!r} is neither a builtin ({known}) nor a file")
    return load_device(path)


# file key -> (attribute, SI scale, required)
_FIELDS = {
    "mass_ng": ("m", _NG, True),
    "f_m_khz": ("f_m", _KHZ, True),
    "L_cm": ("L", _CM, True),
    "finesse": ("F", 1.0, True),
    "Q_m": ("Q_m", 1.0, True),
    "radius_um": ("R", _UM, False),
    "thickness_um": ("b", _UM, False),
    "wavelength_nm": ("wavelength", 1e-9, False),
}


def parse_device(text: str, default_name="device") -> DeviceParams:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DeviceConfigError(f"line {lineno}", "expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS and key not in ("name", "material"):
            raise DeviceConfigError(key, "unknown key")
        if key in raw:
            raise DeviceConfigError(key, "given twice")
        raw[key] = value

    kwargs = {"name": raw.get("name", default_name)}
    for key, (attr, scale, required) in _FIELDS.items():
        if key not in raw:
            if required:
                raise DeviceConfigError(key, "missing")
            continue
        try:
            value = float(raw[key])
        except ValueError:
            raise DeviceConfigError(key, f"not a number: {raw[key]!r}") from None
        if not value > 0:
            raise DeviceConfigError(key, "must be positive")
        kwargs[attr] = value * scale

    mat = raw.get("material", TANTALUM.name).lower()
    if mat not in MATERIALS:
        raise DeviceConfigError("material", f"unknown material {mat!r}")
    kwargs["material"] = MATERIALS[mat]
    return DeviceParams(**kwargs)


def load_device(path) -> DeviceParams:
    path = Path(path)
    return parse_device(path.read_text(encoding="utf-8"), default_name=path.stem)


def format_device(device: DeviceParams) -> str:
    lines = [f"name = {device.name}"]
    for key, (attr, scale, _) in _FIELDS.items():
        value = getattr(device, attr)
        if value is None:
            continue
        lines.append(f"{key} = {value / scale!r}")
    lines.append(f"material = {device.material.name}")
    return "\n".join(lines) + "\n"


def save_device(device: DeviceParams, path) -> None:
    Path(path).write_text(format_device(device), encoding="utf-8")
