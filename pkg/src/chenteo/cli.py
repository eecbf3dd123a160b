"""Command-line front end.

Usage examples:
  chenteo verify --config run.cfg --out report.json
  chenteo sweep --config sweep.cfg --format csv --out sweep.csv --jobs 4
  chenteo periods --config run.cfg
  chenteo partition --config run.cfg --format csv

The config file is flat ``key = value`` text; ``#`` starts a comment.  Keys:
xi, kappa, xi_grid, kappa_grid, gauss_order, subdivisions, corner_offsets,
asymptotic_cutoffs, tau, quadrature, and ``tol.<name>`` tolerance overrides.
Grids are comma lists or ``start:stop:count``.  Exit status is 0 when every
check passes, 1 when a check fails and 2 for a configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .chen_teo import XI_MAX, XI_MIN, ChenTeoParams, derive_constants, rod_structure
from .errors import ChenTeoError, ConfigError, ParamError
from .harmonics import PotentialKind
from .integrals.energies import energy_boundary, energy_closed_form, energy_direct
from .integrals.pairing import intersection_matrix
from .integrals.partition import partition_classical
from .integrals.periods import BOLTS, FORM_NAMES, period_direct, period_localized
from .integrals.quadrature import QuadratureSpec
from .verify import DEFAULT_TOLERANCES, check_fixtures, run_checks

SCHEMA = "chenteo.report/1"
log = logging.getLogger("chenteo")


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    xi_grid: list = field(default_factory=lambda: [0.6])
    kappa_grid: list = field(default_factory=lambda: [1.0])
    tolerances: dict = field(default_factory=dict)
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    tau_list: list = field(default_factory=lambda: [1j])
    run_quadrature: bool = True
    output: dict = field(default_factory=dict)

    def params(self):
        return [ChenTeoParams(xi, k) for xi in self.xi_grid for k in self.kappa_grid]


def _floats(text: str, key: str) -> list:
    text = text.strip()
    try:
        if ":" in text:
            a, b, n = text.split(":")
            n = int(n)
            if n < 1:
                raise ValueError
            if n == 1:
                return [float(a)]
            return [float(v) for v in np.linspace(float(a), float(b), n)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as a list of numbers") from None


def _complexes(text: str) -> list:
    try:
        return [complex(v.strip().replace(" ", "")) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"tau: cannot parse {text!r}; use e.g. 1j or 0.5+2j") from None


def parse_config(text: str) -> RunConfig:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        raw[key] = value
    cfg = RunConfig()
    qargs = {}
    for key, value in raw.items():
        if key in ("xi", "xi_grid"):
            cfg.xi_grid = _floats(value, key)
        elif key in ("kappa", "kappa_grid"):
            cfg.kappa_grid = _floats(value, key)
        elif key in ("gauss_order", "subdivisions", "richardson_levels"):
            try:
                qargs[key] = int(value)
            except ValueError:
                raise ConfigError(f"{key} must be an integer") from None
        elif key in ("corner_offsets", "asymptotic_cutoffs"):
            qargs[key] = tuple(_floats(value, key))
        elif key == "tau":
            cfg.tau_list = _complexes(value)
        elif key == "quadrature":
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ConfigError("quadrature must be a boolean")
            cfg.run_quadrature = value.lower() in ("true", "1", "yes")
        elif key.startswith("tol."):
            name = key[4:]
            if name not in DEFAULT_TOLERANCES:
                raise ConfigError(f"unknown tolerance {name!r}; known: {sorted(DEFAULT_TOLERANCES)}")
            cfg.tolerances[name] = float(value)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    if "corner_offsets" in qargs and "richardson_levels" not in qargs:
        qargs["richardson_levels"] = len(qargs["corner_offsets"])
    cfg.quadrature = QuadratureSpec(**qargs)
    if not cfg.xi_grid or not cfg.kappa_grid:
        raise ConfigError("xi and kappa grids must be non-empty")
    for xi in cfg.xi_grid:
        if not (XI_MIN < xi < XI_MAX):
            raise ConfigError(f"xi={xi} violates 1/2 < xi < 1/sqrt(2)")
    for k in cfg.kappa_grid:
        if not k > 0:
            raise ConfigError(f"kappa={k} violates kappa > 0")
    for t in cfg.tau_list:
        if t.imag <= 0:
            raise ConfigError(f"tau={t} must have positive imaginary part")
    return cfg


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    return parse_config(text)


# ---------------------------------------------------------------------------
# report helpers


def num(value, method: str, error_estimate=0.0, provenance: str = "closed_form") -> dict:
    if isinstance(value, complex):
        value = [value.real, value.imag]
    return {"value": value, "method": method, "error_estimate": error_estimate, "provenance": provenance}


def _constants(c) -> dict:
    return {
        "nu": num(c.nu, "closed_form"),
        "roots": num(list(c.roots), "closed_form"),
        "k": num(list(c.k), "closed_form"),
        "b": num(list(c.b), "closed_form"),
        "rod_vectors": [list(v) for v in c.rod_vectors],
    }


def _periods(c, cfg: RunConfig) -> tuple[dict, list]:
    out, rows = {}, []
    for name in FORM_NAMES:
        for bolt in BOLTS:
            v = period_localized(name, bolt, c)
            out[f"{name}@B{bolt}"] = num(v, "localization")
            rows.append({"form": name, "bolt": bolt, "value": v, "method": "localization", "error_estimate": 0.0})
    if cfg.run_quadrature:
        for name in ("omega_minus", "omega_two", "dK", "nu2", "nu3"):
            for bolt in (2, 3):
                v, err = period_direct(name, bolt, c, cfg.quadrature)
                out[f"{name}@B{bolt}:direct"] = num(v, "bolt quadrature", err, "quadrature")
                rows.append({"form": name, "bolt": bolt, "value": v, "method": "bolt quadrature",
                             "error_estimate": err})
    return out, rows


def _energies(c, cfg: RunConfig) -> tuple[dict, list]:
    out, rows = {}, []
    for kind in PotentialKind:
        b = energy_boundary(kind, c, cfg.quadrature)
        ref = energy_closed_form(kind, c)
        out[kind.value] = {"boundary": num(b.value, "boundary formula", b.error, "quadrature"),
                           "closed_form": num(ref, "printed closed form")}
        rows.append({"kind": kind.value, "method": "boundary formula", "value": b.value, "error_estimate": b.error})
        rows.append({"kind": kind.value, "method": "printed closed form", "value": ref, "error_estimate": 0.0})
        if cfg.run_quadrature:
            d = energy_direct(kind, c, cfg.quadrature)
            out[kind.value]["direct"] = num(d.value, "Duffy rectangle quadrature", d.error, "quadrature")
            rows.append({"kind": kind.value, "method": "Duffy rectangle quadrature", "value": d.value,
                         "error_estimate": d.error})
    return out, rows


def _intersection(c) -> tuple[dict, list]:
    im = intersection_matrix(c)
    out = {
        "Q": num(im.Q.tolist(), "Gram oracle"),
        "Q_linear_system": num(im.Q_linear.tolist(), "constraint system"),
        "B": num(im.B.tolist(), "Gram oracle"),
        "negative_definite": im.negative_definite(),
        "discrepancy": im.discrepancy,
    }
    rows = [{"entry": f"Q{i + 1}{j + 1}", "value": im.Q[i, j]} for i in range(2) for j in range(i, 2)]
    rows += [{"entry": f"B{i + 1}{j + 1}", "value": im.B[i, j]} for i in range(2) for j in range(2)]
    return out, rows


def _partition(c, cfg: RunConfig) -> tuple[dict, list]:
    Q = intersection_matrix(c).Q
    out, rows = {}, []
    for tau in cfg.tau_list:
        tol = cfg.tolerances.get("partition_tail", DEFAULT_TOLERANCES["partition_tail"])
        r = partition_classical(Q, tau, tol)
        out[str(tau)] = num(r.value, f"lattice sum, M={r.truncation}", r.tail_bound, "quadrature")
        rows.append({"tau_re": tau.real, "tau_im": tau.imag, "Z_re": r.value.real, "Z_im": r.value.imag,
                     "truncation": r.truncation, "tail_bound": r.tail_bound})
    return out, rows


def _rods(c) -> tuple[dict, list]:
    rs = rod_structure(c)
    rows = []
    for rod, norm in zip(rs.rods, rs.normalization):
        rows.append({"rod": rod.index, "z_lo": rod.z_interval[0], "z_hi": rod.z_interval[1],
                     "v1": rod.vector[0], "v2": rod.vector[1], "normalization": norm})
    out = {"rods": rows, "adjacent_determinants": list(rs.adjacent_determinants),
           "k1_over_k2": num(rs.k1_over_k2, "closed_form"), "conical_residual": rs.conical_residual}
    return out, rows


def _sweep_row(args) -> dict:
    xi, kappa, cfg = args
    c = derive_constants(ChenTeoParams(xi, kappa))
    t0 = time.perf_counter()
    im = intersection_matrix(c)
    z = partition_classical(im.Q, cfg.tau_list[0])
    row = {"xi": xi, "kappa": kappa}
    for name, bolt in (("omega_minus", 2), ("omega_minus", 3), ("omega_two", 2), ("omega_two", 3), ("dK", 1)):
        row[f"{name}_B{bolt}"] = period_localized(name, bolt, c)
    row["E_plus"] = energy_boundary(PotentialKind.ALPHA_PLUS, c, cfg.quadrature).value
    row["E_two"] = energy_boundary(PotentialKind.ALPHA_TWO, c, cfg.quadrature).value
    row.update({"Q11": im.Q[0, 0], "Q12": im.Q[0, 1], "Q22": im.Q[1, 1],
                "Q_max_eig": float(np.max(np.linalg.eigvalsh(im.Q))),
                "Zc_re": z.value.real, "Zc_im": z.value.imag, "wall_time": time.perf_counter() - t0})
    return row


def _verify_one(args) -> dict:
    xi, kappa, cfg, seed = args
    t0 = time.perf_counter()
    checks = run_checks((xi, kappa), cfg.quadrature, cfg.run_quadrature, seed, cfg.tolerances)
    return {"xi": xi, "kappa": kappa, "checks": [ch.as_dict() for ch in checks],
            "wall_time": time.perf_counter() - t0}


def _map(fn, items, jobs: int):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items))  # map preserves input order
    return [fn(it) for it in items]


# ---------------------------------------------------------------------------
# commands


def cmd_verify(cfg: RunConfig, args) -> tuple[dict, list, int]:
    items = [(p.xi, p.kappa, cfg, args.seed) for p in cfg.params()]
    results = _map(_verify_one, items, args.jobs)
    fixtures = [ch.as_dict() for ch in check_fixtures(args.seed)]
    rows, failed = [], []
    for res in results:
        for ch in res["checks"]:
            rows.append({"xi": res["xi"], "kappa": res["kappa"], **{k: ch[k] for k in
                        ("name", "passed", "value", "tolerance", "method")}})
            if not ch["passed"]:
                failed.append(f"{ch['name']} (xi={res['xi']}, kappa={res['kappa']})")
    for ch in fixtures:
        rows.append({"xi": None, "kappa": None, **{k: ch[k] for k in ("name", "passed", "value", "tolerance", "method")}})
        if not ch["passed"]:
            failed.append(ch["name"])
    for f in failed:
        log.error("check failed: %s", f)
    payload = {"parameter_sets": results, "fixtures": fixtures, "failed": failed,
               "tolerances": {**DEFAULT_TOLERANCES, **cfg.tolerances}}
    return payload, rows, 1 if failed else 0


def _per_param(cfg: RunConfig, fn) -> tuple[dict, list, int]:
    sets, rows = [], []
    for p in cfg.params():
        c = derive_constants(p)
        t0 = time.perf_counter()
        data, r = fn(c)
        sets.append({"xi": p.xi, "kappa": p.kappa, "constants": _constants(c), "result": data,
                     "wall_time": time.perf_counter() - t0})
        rows += [{"xi": p.xi, "kappa": p.kappa, **row} for row in r]
    return {"parameter_sets": sets}, rows, 0


def cmd_sweep(cfg, args):
    items = [(p.xi, p.kappa, cfg) for p in cfg.params()]
    rows = _map(_sweep_row, items, args.jobs)
    status = 0 if all(r["Q_max_eig"] < 0 for r in rows) else 1
    return {"rows": rows}, rows, status


COMMANDS = {
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "periods": lambda cfg, a: _per_param(cfg, lambda c: _periods(c, cfg)),
    "energies": lambda cfg, a: _per_param(cfg, lambda c: _energies(c, cfg)),
    "intersection": lambda cfg, a: _per_param(cfg, _intersection),
    "partition": lambda cfg, a: _per_param(cfg, lambda c: _partition(c, cfg)),
    "rod-structure": lambda cfg, a: _per_param(cfg, _rods),
}


def _to_csv(rows: list) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    cols = []
    for r in rows:
        cols += [k for k in r if k not in cols]
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        # repr keeps full precision and always uses '.' as the decimal point
        w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in r.items()})
    return buf.getvalue()


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialize {type(o)}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chenteo", description="Harmonic forms on the Chen-Teo instanton.")
    ap.add_argument("--version", action="version", version=f"chenteo {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="flat key = value config file")
        sp.add_argument("--out", default=None, help="output path (default: stdout)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--seed", type=int, default=0, help="seed for quasi-random sample points")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes for parameter sets")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        t0 = time.perf_counter()
        payload, rows, status = COMMANDS[args.command](cfg, args)
    except (ConfigError, ParamError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except ChenTeoError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 1
    report = {
        "schema": SCHEMA,
        "version": __version__,
        "command": args.command,
        "config": {"xi_grid": cfg.xi_grid, "kappa_grid": cfg.kappa_grid, "tau": cfg.tau_list,
                   "quadrature": cfg.quadrature.__dict__, "run_quadrature": cfg.run_quadrature,
                   "seed": args.seed},
        "status": "pass" if status == 0 else "fail",
        **payload,
        "wall_time": time.perf_counter() - t0,
    }
    text = _to_csv(rows) if args.format == "csv" else json.dumps(report, indent=2, default=_jsonable)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    return status


if __name__ == "__main__":
    raise SystemExit(main())
