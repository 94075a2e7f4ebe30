"""Command-line interface.

    nestint devices [--format table|csv] [--wavelength-nm NM]
    nestint timescales --device NAME|FILE [--t-env-mk MK] [--mechanisms ...]
    nestint postselect --kappa K --theta TH --nbar N [--samples S] [--seed SEED]
    nestint visibility --device NAME|FILE [--mechanisms eid csl qg|none] [--t-max S] [--points P] [--out FILE]
    nestint reproduce [--json] [--strict-eid-printed-formula]

Exit codes: 0 success, 1 a reproduction criterion failed, 2 usage or
configuration error, 3 numerical failure.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from importlib import resources
import json
import math
import os
from pathlib import Path
import sys

import numpy as np

from . import __version__
from . import decoherence as dec
from . import dynamics as dy
from . import interferometer as ifm
from .devices import DeviceConfigError, builtin_devices, derive, get_device, resolve_device
from .fock import TruncationError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
OUTPUT_DIR_ENV = "NESTINT_OUTPUT_DIR"
VISIBILITY_MECHANISMS = ("none", "eid", "csl", "qg")
TOP_POPULATION_WARN = 0.01

_NUMERIC_ERRORS = (dy.IntegratorError, dec.ConvergenceError, TruncationError, FloatingPointError, np.linalg.LinAlgError)


class NumericalFailure(RuntimeError):
    pass


def sci(x) -> str:
    """Scientific notation with 9 significant digits."""
    return f"{x:.8e}"


def human_time(t) -> str:
    if t is None:
        return "-"
    if math.isinf(t):
        return "inf"
    for unit, scale in (("ns", 1e-9), ("us", 1e-6), ("ms", 1e-3)):
        if t < 1000 * scale:
            return f"{t / scale:.3g} {unit}"
    return f"{t:.3g} s"


def _table(header, rows) -> str:
    cells = [header] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    return "\n".join(lines)


def _csv(header, rows) -> str:
    return "\n".join(",".join(str(c) for c in r) for r in [header] + list(rows)) + "\n"


# -------------------------------------------------------------------- devices


def cmd_devices(args, out):
    header = ["name", "mass_ng", "f_m_khz", "L_cm", "finesse", "Q_m", "kappa", "omega_m/Gamma_c", "T_EID_K"]
    rows = []
    for dev in builtin_devices():
        if args.wavelength_nm is not None:
            dev = replace(dev, wavelength=args.wavelength_nm * 1e-9)
        d = derive(dev)
        raw = [dev.m / 1e-12, dev.f_m / 1e3, dev.L / 1e-2, dev.F, dev.Q_m]
        if args.format == "csv":
            rows.append([dev.name] + [sci(v) for v in raw + [d.kappa, d.sideband_ratio, d.T_EID]])
        else:
            rows.append([dev.name] + [f"{v:g}" for v in raw] + [f"{d.kappa:.3g}", f"{d.sideband_ratio:.3g}", f"{d.T_EID:.3g}"])
    out.write(_csv(header, rows) if args.format == "csv" else _table(header, rows) + "\n")
    return EXIT_OK


# ----------------------------------------------------------------- timescales


def cmd_timescales(args, out):
    device = resolve_device(args.device)
    report = dec.full_report(device, args.t_env_mk * 1e-3, tuple(args.mechanisms))
    header = ["mechanism", "tau_s", "tau", "testable", "note"]
    rows = []
    for name, tau, testable, error in report.rows():
        flag = "-" if testable is None else ("yes" if testable else "no")
        rows.append([name, "-" if tau is None else sci(tau), human_time(tau), flag, error or ""])
    if args.format == "csv":
        out.write(_csv(header, rows))
    else:
        out.write(f"device {report.device}  T_env = {args.t_env_mk:g} mK  x0 = {report.x0:.3e} m\n")
        out.write(f"tau_EID printed formula = {sci(report.tau_eid)} s ({human_time(report.tau_eid)})\n")
        out.write(f"tau_EID quoted (2x)     = {sci(report.tau_eid_quoted)} s ({human_time(report.tau_eid_quoted)})\n")
        out.write("testable: tau shorter than the printed-formula tau_EID\n\n")
        out.write(_table(header, rows) + "\n")
    failed = [n for n, r in report.results.items() if r.numerical]
    if failed:
        raise NumericalFailure(f"computation failed for {', '.join(failed)}")
    return EXIT_OK


# ----------------------------------------------------------------- postselect


def cmd_postselect(args, out):
    if args.kappa < 0 or args.nbar < 0 or args.samples < 2:
        raise DeviceConfigError("postselect", "need kappa >= 0, nbar >= 0 and samples >= 2")
    signal, noise = ifm.thermal_postselect_probability(args.nbar, args.kappa, args.theta)
    exact = ifm.thermal_exact_probability(args.nbar, args.kappa, args.theta)
    mc = ifm.thermal_monte_carlo(args.nbar, args.kappa, args.theta, samples=args.samples, seed=args.seed)
    snr = ifm.signal_to_noise(args.nbar, args.theta)
    lines = [
        ("kappa", sci(args.kappa)),
        ("theta", sci(args.theta)),
        ("nbar", sci(args.nbar)),
        ("signal (lowest order)", sci(signal)),
        ("noise (lowest order)", sci(noise)),
        ("total (lowest order)", sci(signal + noise)),
        ("exact probability (thermal average)", sci(exact)),
        ("monte carlo mean", sci(mc.mean)),
        ("monte carlo stderr", sci(mc.stderr)),
        ("monte carlo samples / seed", f"{mc.samples} / {args.seed}"),
        ("monte carlo within 3 stderr of lowest-order total", "yes" if mc.within(signal + noise) else "no"),
        ("snr sec^2(theta/2)/nbar", sci(snr)),
    ]
    out.write(_table(["quantity", "value"], lines) + "\n")
    return EXIT_OK


# ----------------------------------------------------------------- visibility


def _default_output(device_name):
    return Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / f"visibility_{device_name}.csv"


def cmd_visibility(args, out):
    device = resolve_device(args.device)
    if args.points < 2:
        raise DeviceConfigError("points", "need at least 2 points")
    T_env = args.t_env_mk * 1e-3
    names = [m for m in args.mechanisms if m != "none"]
    if len(names) != len(set(names)):
        raise DeviceConfigError("mechanisms", "listed twice")
    t_max = args.t_max if args.t_max is not None else 5 * dec.eid_timescale(device.Q_m, T_env)
    if not t_max > 0:
        raise DeviceConfigError("t-max", "must be positive")
    mechanisms = [dy.mechanism_for(device, n, T_env) for n in names]
    times = np.linspace(0.0, t_max, args.points)
    curve = dy.visibility_curve(device, mechanisms, times, dim=args.dim, method=args.method, workers=args.workers)

    labels = list(curve.columns)
    lines = [",".join(["t_s"] + [f"V_{k}" for k in labels])]
    for i, t in enumerate(times):
        lines.append(",".join([sci(t)] + [sci(curve.columns[k][i]) for k in labels]))
    path = Path(args.out) if args.out else _default_output(device.name)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise DeviceConfigError("out", f"cannot write {path}: {exc.strerror}") from None

    out.write(f"wrote {path} ({args.points} rows, t_max = {sci(t_max)} s)\n")
    for k in labels:
        diag = curve.diagnostics.get(k, {})
        detail = "  ".join(f"{key}={diag[key]:.3g}" if isinstance(diag[key], float) else f"{key}={diag[key]}" for key in diag)
        out.write(f"{k}: final V = {sci(curve.columns[k][-1])}  {detail}".rstrip() + "\n")
        if diag.get("top_population", 0.0) > TOP_POPULATION_WARN:
            print(f"nestint: warning: {k} puts {diag['top_population']:.2g} in the top Fock level; try a larger --dim", file=sys.stderr)
    return EXIT_OK


# ------------------------------------------------------------------ reproduce


def load_criteria(path=None) -> dict:
    if path is None:
        text = resources.files("nestint").joinpath("criteria.json").read_text(encoding="utf-8")
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise DeviceConfigError("criteria", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DeviceConfigError("criteria", f"invalid JSON: {exc}") from None
    if "version" not in data or "rows" not in data:
        raise DeviceConfigError("criteria", "needs 'version' and 'rows'")
    return data


def compute_quantity(quantity, device, T_env, strict_eid=False):
    if quantity in ("zero_point", "nuclear_radius", "debye", "homogeneous", "csl", "qg"):
        return dec.mechanism_timescale(device, quantity)
    if quantity == "eid_printed" or (quantity == "eid_quoted" and strict_eid):
        return dec.eid_timescale(device.Q_m, T_env)
    if quantity == "eid_quoted":
        return dec.eid_timescale_quoted(device.Q_m, T_env)
    if quantity == "kappa":
        return derive(device).kappa
    if quantity == "sideband_ratio":
        return derive(device).sideband_ratio
    raise DeviceConfigError("criteria", f"unknown quantity {quantity!r}")


def check(value, published, tolerance) -> bool:
    if "rel" in tolerance:
        return abs(value / published - 1) <= tolerance["rel"]
    if "factor" in tolerance:
        ratio = value / published
        return 0 < ratio and max(ratio, 1 / ratio) <= tolerance["factor"]
    raise DeviceConfigError("criteria", f"unknown tolerance {tolerance!r}")


def evaluate_criteria(criteria, strict_eid=False, workers=1) -> list:
    T_env = criteria.get("T_env_K", 1e-3)

    def run(row):
        try:
            device = get_device(row["device"])
        except KeyError:
            raise DeviceConfigError("criteria", f"unknown device {row['device']!r}") from None
        value = compute_quantity(row["quantity"], device, T_env, strict_eid)
        ok = check(value, row["published"], row["tolerance"])
        if ok:
            status = "pass"
        elif strict_eid and row["quantity"] == "eid_quoted":
            status = "known discrepancy"
        else:
            status = "FAIL"
        return {
            "id": row["id"],
            "criterion": row["criterion"],
            "published": row["published"],
            "computed": value,
            "rel_dev": value / row["published"] - 1,
            "tolerance": row["tolerance"],
            "status": status,
        }

    rows = criteria["rows"]
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, rows))
    return [run(r) for r in rows]


def _tol_text(tol):
    return f"x{tol['factor']:g}" if "factor" in tol else f"{100 * tol['rel']:g}%"


def cmd_reproduce(args, out):
    criteria = load_criteria(args.criteria)
    results = evaluate_criteria(criteria, args.strict_eid_printed_formula, args.workers)
    failed = [r["id"] for r in results if r["status"] == "FAIL"]
    if args.json:
        doc = {"criteria_version": criteria["version"], "passed": not failed, "failed": failed, "rows": results}
        out.write(json.dumps(doc, indent=2) + "\n")
    else:
        header = ["id", "published", "computed", "rel_dev", "tolerance", "status"]
        rows = [
            [r["id"], f"{r['published']:.4g}", f"{r['computed']:.4g}", f"{100 * r['rel_dev']:+.1f}%", _tol_text(r["tolerance"]), r["status"]]
            for r in results
        ]
        out.write(f"criteria version {criteria['version']}\n")
        out.write(_table(header, rows) + "\n")
        out.write(f"{len(results) - len(failed)}/{len(results)} rows without failure\n")
    return EXIT_FAIL if failed else EXIT_OK


# ---------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="nestint", description=__doc__.split("\n")[0], formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"nestint {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("devices", help="list builtin resonators with derived columns", formatter_class=fmt)
    p.add_argument("--format", choices=("table", "csv"), default="table")
    p.add_argument("--wavelength-nm", type=float, default=None, help="override the laser wavelength (default 1064 nm)")
    p.set_defaults(func=cmd_devices)

    p = sub.add_parser("timescales", help="decoherence timescales for one device", formatter_class=fmt)
    p.add_argument("--device", required=True, help="builtin name or device file")
    p.add_argument("--t-env-mk", type=float, default=1.0, help="environment temperature in mK")
    p.add_argument("--mechanisms", nargs="+", choices=dec.MECHANISMS, default=list(dec.MECHANISMS))
    p.add_argument("--format", choices=("table", "csv"), default="table")
    p.set_defaults(func=cmd_timescales)

    p = sub.add_parser("postselect", help="postselection probability, signal and noise", formatter_class=fmt)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--theta", type=float, required=True, help="omega_m t in radians")
    p.add_argument("--nbar", type=float, required=True, help="thermal occupation")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_postselect)

    p = sub.add_parser("visibility", help="write a visibility-versus-time CSV", formatter_class=fmt)
    p.add_argument("--device", required=True, help="builtin name or device file")
    p.add_argument("--mechanisms", nargs="+", choices=VISIBILITY_MECHANISMS, default=["eid"])
    p.add_argument("--t-env-mk", type=float, default=1.0, help="environment temperature in mK")
    p.add_argument("--t-max", type=float, default=None, help="final time in s (default 5 tau_EID)")
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--dim", type=int, default=dy.DEFAULT_DIM, help="Fock truncation")
    p.add_argument("--method", choices=("auto", "rk4", "exact"), default="auto")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None, help=f"CSV path (default ${OUTPUT_DIR_ENV} or . / visibility_<device>.csv)")
    p.set_defaults(func=cmd_visibility)

    p = sub.add_parser("reproduce", help="compare computed values with the published ones", formatter_class=fmt)
    p.add_argument("--json", action="store_true")
    p.add_argument("--strict-eid-printed-formula", action="store_true", help="use the printed EID formula for the quoted EID rows")
    p.add_argument("--criteria", default=None, help="criteria JSON (default: bundled file)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except _NUMERIC_ERRORS + (NumericalFailure,) as exc:
        print(f"nestint: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DeviceConfigError, ValueError) as exc:
        print(f"nestint: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
