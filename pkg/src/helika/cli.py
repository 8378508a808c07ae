"""Command-line driver: state factory, observables, verification, gauge runs.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 domain error (singular line / non-transverse / non-eigenstate), 4 I/O.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import Config
from .errors import (
    AmplitudeTooSmall,
    ConfigError,
    HelikaError,
    NotEigenstate,
    NotTransverse,
    SingularLine,
)
from .frames import ALPHA, polarization_frame
from .gauge import AMPLITUDE_FLOOR, berry_phase_extract, gauge_field, second_class
from .kgrid import KGrid, build_box_grid, build_spherical_grid
from .operators import SCALAR_OPS, VECTOR_OPS, expect, expect_value
from .states import (
    GaussianPacket,
    norm,
    transversality_residual,
    PlaneWaveProxy,
    SphericalMode,
    TwoCompState,
    build_state,
    load_state,
    save_state,
    to_lab,
)
from .verify import SUITES, run_suites

__all__ = ["main", "parse_run_config"]

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_IO = 4

_DOMAIN_ERRORS = (SingularLine, NotTransverse, NotEigenstate, AmplitudeTooSmall)

_CONSTANT_KEYS = {"hbar", "c", "eps0", "fd_order", "tol_quad", "tol_fd"}
_TOP_KEYS = {"constants", "grid", "I", "I_prime", "states", "suites", "out"}
_GRID_KEYS = {
    "box": {"kind", "center", "half_widths", "npts", "mask_angle"},
    "sphere": {"kind", "k_min", "k_max", "n_rad", "n_pol", "n_az", "mask_angle"},
}
_STATE_KEYS = {
    "gaussian": {"type", "k0", "widths", "amps"},
    "spherical": {"type", "sigma", "lam", "mu", "k0", "shell_width"},
    "plane_wave": {"type", "k0", "sigma", "widths"},
}


def _reject_unknown(doc: dict, allowed: set, where: str) -> None:
    extra = set(doc) - allowed
    if extra:
        raise ConfigError(f"unknown keys in {where}: {sorted(extra)}")


def parse_run_config(path, overrides=()) -> dict:
    """Validated run description: Config, grid factory, mode specs, axes."""
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ConfigError("run configuration must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "run configuration")

    constants = dict(doc.get("constants", {}))
    _reject_unknown(constants, _CONSTANT_KEYS, "constants")
    for key, val in overrides:
        if key not in _CONSTANT_KEYS:
            raise ConfigError(f"unknown tolerance override {key!r}")
        constants[key] = val
    config = Config(**constants)

    out = {"config": config, "out": doc.get("out")}

    I = np.asarray(doc.get("I", (0.0, 0.0, 1.0)), dtype=float)
    I_prime = np.asarray(doc.get("I_prime", (1.0, 0.0, 0.0)), dtype=float)
    for name, vec in (("I", I), ("I_prime", I_prime)):
        if vec.shape != (3,) or not np.linalg.norm(vec) > 0:
            raise ConfigError(f"{name} must be a nonzero 3-vector")
    out["I"] = I / np.linalg.norm(I)
    out["I_prime"] = I_prime / np.linalg.norm(I_prime)

    grid_doc = doc.get("grid")
    if grid_doc is not None:
        kind = grid_doc.get("kind")
        if kind not in _GRID_KEYS:
            raise ConfigError(f"grid kind must be box or sphere, got {kind!r}")
        _reject_unknown(grid_doc, _GRID_KEYS[kind], "grid")
        if kind == "box":
            out["grid"] = build_box_grid(
                grid_doc["center"],
                grid_doc["half_widths"],
                grid_doc["npts"],
                out["I"],
                float(grid_doc.get("mask_angle", 0.0)),
                config,
            )
        else:
            out["grid"] = build_spherical_grid(
                float(grid_doc["k_min"]),
                float(grid_doc["k_max"]),
                int(grid_doc["n_rad"]),
                int(grid_doc["n_pol"]),
                int(grid_doc["n_az"]),
                out["I"],
                float(grid_doc.get("mask_angle", 0.0)),
                config,
            )
    else:
        out["grid"] = None

    specs = []
    for n, sdoc in enumerate(doc.get("states", [])):
        stype = sdoc.get("type")
        if stype not in _STATE_KEYS:
            raise ConfigError(f"state #{n}: unknown type {stype!r}")
        _reject_unknown(sdoc, _STATE_KEYS[stype], f"state #{n}")
        try:
            if stype == "gaussian":
                amps = tuple(complex(re, im) for re, im in sdoc["amps"])
                specs.append(GaussianPacket(tuple(sdoc["k0"]),
                                            tuple(sdoc["widths"]), amps))
            elif stype == "spherical":
                specs.append(SphericalMode(int(sdoc["sigma"]), int(sdoc["lam"]),
                                           int(sdoc["mu"]), float(sdoc["k0"]),
                                           float(sdoc["shell_width"])))
            else:
                widths = sdoc.get("widths")
                specs.append(PlaneWaveProxy(tuple(sdoc["k0"]), int(sdoc["sigma"]),
                                            tuple(widths) if widths else None))
        except (TypeError, KeyError) as e:
            raise ConfigError(f"state #{n}: {e}")
    out["specs"] = specs

    suites = doc.get("suites", ["all"])
    known = set(SUITES) | {"all"}
    if not set(suites) <= known:
        raise ConfigError(f"unknown suites {sorted(set(suites) - known)}")
    out["suites"] = suites
    return out


def _parse_overrides(pairs):
    out = []
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(f"--tol-override expects KEY=VAL, got {pair!r}")
        key, _, val = pair.partition("=")
        try:
            num = float(val)
        except ValueError:
            raise ConfigError(f"override {key}: {val!r} is not a number")
        if key.startswith("tol") and num <= 0:
            raise ConfigError(f"override {key} must be positive")
        out.append((key, num))
    return out


def _thread_count(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("HELIKA_THREADS")
    return max(1, int(env)) if env else 1


def _dump_json(obj, path=None) -> None:
    def scalar(o):
        if hasattr(o, "item"):
            return o.item()
        raise TypeError(f"cannot serialize {type(o).__name__}")

    text = json.dumps(obj, sort_keys=True, indent=2, default=scalar) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _out_dir(parsed, args) -> Path:
    out = args.out or parsed.get("out") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _spec_sigma(spec) -> int:
    """Helicity quantum number of a mode spec; 0 when not an eigenstate."""
    if isinstance(spec, (SphericalMode, PlaneWaveProxy)):
        return spec.sigma
    amps = np.asarray(spec.amps, dtype=complex)
    amps = amps / np.linalg.norm(amps)
    for sgn in (+1, -1):
        overlap = abs(np.conj(ALPHA[sgn]) @ amps)
        if abs(overlap - 1.0) < 1e-12:
            return sgn
    return 0


# -- commands --------------------------------------------------------------

def cmd_make_state(args) -> int:
    parsed = parse_run_config(args.config, _parse_overrides(args.tol_override))
    if parsed["grid"] is None:
        raise ConfigError("make-state needs a grid section")
    if not parsed["specs"]:
        raise ConfigError("make-state needs at least one state")
    out = _out_dir(parsed, args)
    files = []
    for n, spec in enumerate(parsed["specs"]):
        if isinstance(spec, (GaussianPacket, PlaneWaveProxy)):
            # a packet centered on the frame's singular line is ill-defined
            polarization_frame(parsed["I"], np.asarray(spec.k0, dtype=float))
        s = build_state(parsed["grid"], spec, parsed["I"])
        path = out / f"state_{n:03d}.npz"
        save_state(path, s)
        files.append(str(path))
    _dump_json({"command": "make-state", "files": files, "n_states": len(files)},
               out / "make_state_manifest.json")
    print(f"wrote {len(files)} state file(s) to {out}")
    return EXIT_OK


_OAM_ROWS = ("oam_lambda", "oam_m", "oam_total")


def _observe_rows(s: TwoCompState, ops) -> list:
    rows = []
    for op in ops:
        if op == "oam":
            vals = {name: expect_value(name, s) for name in _OAM_ROWS}
            for name in _OAM_ROWS:
                herm = expect(name, s)
                rows.append({"name": name, "value": list(vals[name]),
                             "hermiticity_residual": herm.value,
                             "passed": herm.passed})
            resid = float(np.max(np.abs(
                vals["oam_total"] - vals["oam_lambda"] - vals["oam_m"])))
            rows.append({"name": "oam_additivity", "value": resid,
                         "hermiticity_residual": 0.0, "passed": resid < 1e-12})
            continue
        if op not in VECTOR_OPS and op not in SCALAR_OPS:
            raise ConfigError(f"unknown operator {op!r}")
        herm = expect(op, s)
        val = expect_value(op, s)
        rows.append({"name": op,
                     "value": float(val) if np.ndim(val) == 0 else list(val),
                     "hermiticity_residual": herm.value, "passed": herm.passed})
    return rows


def cmd_observe(args) -> int:
    s = load_state(args.state)
    if not isinstance(s, TwoCompState):
        raise NotTransverse("observe needs a two-component state file")
    ops = [op for op in args.ops.split(",") if op]
    rows = _observe_rows(s, ops)
    if args.format == "csv":
        writer = csv.writer(sys.stdout)
        writer.writerow(["name", "value", "hermiticity_residual", "passed"])
        for r in rows:
            writer.writerow([r["name"], json.dumps(r["value"]),
                             r["hermiticity_residual"], r["passed"]])
    else:
        _dump_json({"command": "observe", "state": str(args.state), "rows": rows},
                   args.out)
    return EXIT_OK if all(r["passed"] for r in rows) else EXIT_VERIFY


def _artifact_checks(paths) -> dict:
    """Integrity suite over serialized states: readable, unit, transverse."""
    checks = []
    for path in paths:
        try:
            s = load_state(path)
            if isinstance(s, TwoCompState):
                res = abs(complex(norm(s)) - 1.0)
            else:
                res = transversality_residual(s)
                if res > 1e-8:
                    raise NotTransverse(f"residual {res:.3e}")
            checks.append({"check_id": f"artifact.{Path(path).name}",
                           "passed": bool(res < 1e-8), "value": float(res),
                           "tolerance": 1e-8, "detail": ""})
        except HelikaError as e:
            checks.append({"check_id": f"artifact.{Path(path).name}",
                           "passed": False, "value": float("nan"),
                           "tolerance": 1e-8,
                           "detail": f"{type(e).__name__}: {e}"})
    return {"suite": "artifacts", "passed": all(c["passed"] for c in checks),
            "n_checks": len(checks), "runtime_s": 0.0, "checks": checks}


def cmd_verify(args) -> int:
    parsed = parse_run_config(args.config, _parse_overrides(args.tol_override))
    names = parsed["suites"] if args.suite in (None, "all") else [args.suite]
    if "all" in names:
        names = list(SUITES)
    report = run_suites(names, parsed["config"], _thread_count(args))
    if args.state:
        report["suites"].append(_artifact_checks(args.state))
        report["passed"] = all(s["passed"] for s in report["suites"])
    failing = [c["check_id"] for s in report["suites"]
               for c in s["checks"] if not c["passed"]]
    report["failing"] = failing
    if args.out:
        out = _out_dir(parsed, args)
        _dump_json(report, out / "verify_report.json")
    summary = {s["suite"]: ("pass" if s["passed"] else "FAIL")
               for s in report["suites"]}
    for name, verdict in summary.items():
        print(f"{name}: {verdict}")
    if not report["passed"]:
        print("failing checks:", ", ".join(failing))
        return EXIT_VERIFY
    return EXIT_OK


def cmd_gauge(args) -> int:
    parsed = parse_run_config(args.config, _parse_overrides(args.tol_override))
    if parsed["grid"] is None or not parsed["specs"]:
        raise ConfigError("gauge needs a grid and at least one state")
    out = _out_dir(parsed, args)
    I, I_prime = parsed["I"], parsed["I_prime"]
    if np.allclose(I, I_prime):
        _dump_json({"command": "gauge", "identical_axes": True, "rows": 0},
                   out / "gauge_report.json")
        print("I' = I: no frame rotation, empty diff")
        return EXIT_OK

    spec = parsed["specs"][0]
    sigma = _spec_sigma(spec)
    if sigma == 0:
        raise NotEigenstate("gauge runs need a helicity eigenstate")
    s = build_state(parsed["grid"], spec, I)
    lab = to_lab(s)
    lab_p = second_class(lab, I, I_prime)
    gf = gauge_field(I, I_prime, s.grid)
    report = berry_phase_extract(lab, lab_p, sigma, gf)

    amp = np.linalg.norm(lab.values, axis=1)
    keep = (~s.grid.mask) & (amp > AMPLITUDE_FLOOR * np.max(amp))
    rows = np.nonzero(keep)[0]
    comp = np.argmax(np.abs(lab.values[keep]), axis=1)
    phase = np.angle(lab_p.values[rows, comp] / lab.values[rows, comp])
    csv_path = out / "gauge_phase.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kx", "ky", "kz", "phi", "extracted_phase"])
        for n, row in enumerate(rows):
            writer.writerow([*s.grid.nodes[row], gf.phi[row], phase[n]])
    _dump_json(
        {
            "command": "gauge",
            "identical_axes": False,
            "sigma": sigma,
            "rows": len(rows),
            "columns": ["kx", "ky", "kz", "phi", "extracted_phase"],
            "csv": str(csv_path),
            "phase_check": report.to_dict(),
        },
        out / "gauge_report.json",
    )
    print(f"wrote {len(rows)} phase rows; max deviation {report.value:.3e} "
          f"({'pass' if report.passed else 'FAIL'})")
    return EXIT_OK if report.passed else EXIT_VERIFY


# -- entry point -----------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="helika",
                                description="transverse wavefunction toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="run config JSON")
        sp.add_argument("--out", default=None, help="output directory/file")
        sp.add_argument("--tol-override", action="append", metavar="KEY=VAL",
                        help="override a constants entry")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads (default $HELIKA_THREADS or 1)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")

    sp = sub.add_parser("make-state", help="build and serialize states")
    common(sp)
    sp.set_defaults(fn=cmd_make_state)

    sp = sub.add_parser("observe", help="observable report for a state file")
    sp.add_argument("--state", required=True, help="state .npz file")
    sp.add_argument("--ops", default="helicity,oam",
                    help="comma-separated operator list")
    common(sp, config=False)
    sp.set_defaults(fn=cmd_observe)

    sp = sub.add_parser("verify", help="run invariant verification suites")
    sp.add_argument("--suite", choices=(*SUITES, "all"), default=None)
    sp.add_argument("--state", action="append", default=None,
                    help="also integrity-check a serialized state file")
    common(sp)
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("gauge", help="frame-change phase experiment")
    common(sp)
    sp.set_defaults(fn=cmd_gauge)
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except _DOMAIN_ERRORS as e:
        print(f"domain error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ConfigError, ValueError, json.JSONDecodeError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except HelikaError as e:
        print(f"configuration error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
