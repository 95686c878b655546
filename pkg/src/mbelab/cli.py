"""Command-line entry point: ``mbelab {simulate,equilibria,experiment,verify}``.

Configuration is one JSON document with a top-level ``schema_version``.
Every output file embeds the hash of the effective configuration (the
config after defaults and command-line overrides are applied, excluding
the worker count, which never changes results). ``verify`` re-hashes.

Exit codes: 0 ok, 2 configuration error, 3 integration failure,
4 domain error (empty branch, violated inequality).
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .dynamics import RhsKind, check_kind
from .equilibria import (
    _stable_nonzero,
    harmonic_z1,
    harmonic_z2,
    numeric_spectrum,
    jacobian,
    spectrum_distance,
    spectrum_z1,
    spectrum_z2,
    stationarity_residual,
    z2_exists,
)
from .errors import IntegrationError, InvalidParameters, MBLabError, NormViolation
from .integrator import integrate
from .model import (
    FullState,
    ModelParams,
    Pumping,
    PureState,
    content_hash,
    lab_to_rotating_arrays,
    rotating_to_lab_arrays,
)

SCHEMA_VERSION = 1
CSV_SCHEMA = "trajectory/1"
OUT_ENV = "MBELAB_OUT"
EXPERIMENTS = ("adiabatic", "stable", "avg-vs-int", "kbm", "apriori", "pure-vs-mixed")
TRAJECTORY_COLUMNS = ["t", "A", "B", "Re M", "Im M", "S1", "S2", "S3", "|S|", "trace_check"]

EXIT_OK, EXIT_CONFIG, EXIT_INTEGRATION, EXIT_DOMAIN = 0, 2, 3, 4


class ConfigError(Exception):
    pass


# --- configuration -----------------------------------------------------------

DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "params": {"omega1": 0.0, "omega2": 1.0, "Omega": 1.0, "p": 1e-3, "r": 2.0, "c": 1.0, "hbar": 1.0},
    "pumping": {"Ae": [1.0, 0.0], "modes": []},
    "seed": 0,
    "tol": 1e-10,
    "simulate": {
        "kind": "full",
        "initial": {"M": [0.5, 0.0], "S": [0.0, 0.6, -0.8]},
        "t_end": 100.0,
        "samples": 1001,
        "frame": "native",
    },
    "equilibria": {"branch": "both", "points": 65},
    "experiment": {"name": "adiabatic"},
}

EXPERIMENT_DEFAULTS = {
    "adiabatic": {"r": 2.0, "p_list": [1e-2, 3e-3, 1e-3, 3e-4], "initial": {"branch": "Z1", "parameter": 1.0}},
    "stable": {"p_list": [3e-3, 1e-3], "r_list": [2.0, 5.0], "d": 0.05, "s": None, "d_halvings": 1, "samples": 16},
    "avg-vs-int": {"r": 2.0, "p_list": [1e-2, 1e-3], "initial": {"M": [-0.95, -0.03], "S": [-0.48, 0.01, 0.5]}, "horizon_factor": 1.0},
    "kbm": {"r": 2.0, "p_list": [1e-2, 1e-3, 1e-4], "center": [-1.0, 0.0, -0.5, 0.0, 0.5], "half_widths": [0.1, 0.1, 0.1, 0.1, 0.1]},
    "apriori": {"p": 1e-2, "r": 2.0, "initial_list": [[0.25, 0.0, 0.0, 0.6, -0.8], [0.5, 0.0, 0.0, 0.6, -0.8], [1.0, 0.0, 0.0, 0.6, -0.8], [2.0, 0.0, 0.0, 0.6, -0.8]], "horizon": None, "margin": ex.APRIORI_MARGIN},
    "pure-vs-mixed": {"p": 1e-2, "r": 2.0, "C0": [[0.6, 0.0], [0.0, 0.8]], "M0": [0.3, -0.1], "horizon": 100.0},
}

_SECTION_KEYS = {
    "params": {"omega1", "omega2", "Omega", "p", "gamma", "r", "c", "hbar"},
    "pumping": {"Ae", "modes"},
    "simulate": {"kind", "initial", "t_end", "samples", "frame"},
    "equilibria": {"branch", "points"},
}


def _reject_unknown(section: str, given: dict, allowed):
    extra = sorted(set(given) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in {section}: {', '.join(extra)}")


def _merge(default: dict, given: dict, section: str, allowed=None) -> dict:
    if not isinstance(given, dict):
        raise ConfigError(f"{section} must be an object")
    _reject_unknown(section, given, allowed if allowed is not None else default)
    out = copy.deepcopy(default)
    out.update(copy.deepcopy(given))
    return out


def load_config(path: str | None) -> dict:
    if path is None:
        raw = {"schema_version": SCHEMA_VERSION}
    else:
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {raw.get('schema_version')!r}")
    _reject_unknown("config", raw, DEFAULTS)
    cfg = copy.deepcopy(DEFAULTS)
    cfg["seed"] = raw.get("seed", cfg["seed"])
    cfg["tol"] = raw.get("tol", cfg["tol"])
    params_in = raw.get("params", {})
    _reject_unknown("params", params_in, _SECTION_KEYS["params"])
    if "gamma" in params_in and "r" in params_in:
        raise ConfigError("params: give either gamma or r, not both")
    cfg["params"].update(params_in)
    if "gamma" in params_in:
        cfg["params"].pop("r")
    cfg["pumping"] = _merge(DEFAULTS["pumping"], raw.get("pumping", {}), "pumping")
    cfg["simulate"] = _merge(DEFAULTS["simulate"], raw.get("simulate", {}), "simulate")
    cfg["equilibria"] = _merge(DEFAULTS["equilibria"], raw.get("equilibria", {}), "equilibria")
    exp_in = raw.get("experiment", {})
    if not isinstance(exp_in, dict):
        raise ConfigError("experiment must be an object")
    cfg["experiment"] = dict(exp_in)
    return cfg


def apply_overrides(cfg: dict, seed=None, tol=None, experiment=None) -> dict:
    cfg = copy.deepcopy(cfg)
    if seed is not None:
        cfg["seed"] = seed
    if tol is not None:
        cfg["tol"] = tol
    if experiment is not None:
        cfg["experiment"]["name"] = experiment
    return cfg


def build_params(d: dict, p=None, r=None) -> ModelParams:
    d = dict(d)
    if p is not None:
        d["p"] = p
    if r is not None:
        d.pop("gamma", None)
        d["r"] = r
    try:
        base = {k: float(d[k]) for k in ("omega1", "omega2", "Omega", "c", "hbar")}
        if "gamma" in d:
            return ModelParams(p=float(d["p"]), gamma=float(d["gamma"]), **base)
        return ModelParams.from_ratio(float(d["p"]), float(d["r"]), **base)
    except (TypeError, KeyError) as e:
        raise ConfigError(f"invalid params: {e}") from e


def build_pumping(d: dict, Omega: float) -> Pumping:
    try:
        modes = []
        for m in d["modes"]:
            _reject_unknown("pumping.modes[]", m, {"Ae", "Omega"})
            modes.append((complex(*m["Ae"]), float(m["Omega"])))
        return Pumping(complex(*d["Ae"]), tuple(modes)).check(Omega)
    except (TypeError, KeyError) as e:
        raise ConfigError(f"invalid pumping: {e}") from e


def _complex(v, name):
    try:
        re, im = v
        return complex(float(re), float(im))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{name} must be [re, im]") from e


def effective_hash(cfg: dict) -> str:
    return content_hash(cfg)


# --- writers -----------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: Path, header: list, rows, meta: dict):
    buf = io.StringIO()
    for k in sorted(meta):
        buf.write(f"# {k}: {meta[k]}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    path.write_text(text)
    return hashlib.sha256(text.encode()).hexdigest()


def write_json(path: Path, obj: dict):
    path.write_text(json.dumps(ex._tolist(obj), sort_keys=True, indent=1, allow_nan=False) + "\n")


def _out_dir(arg) -> Path:
    d = Path(arg) if arg else Path(os.environ.get(OUT_ENV, "."))
    d.mkdir(parents=True, exist_ok=True)
    return d


# --- simulate ----------------------------------------------------------------

_KINDS = {"full": RhsKind.FULL, "pure": RhsKind.PURE, "interaction": RhsKind.INTERACTION, "averaged": RhsKind.AVERAGED}


def _simulate_setup(cfg):
    sim = cfg["simulate"]
    params = build_params(cfg["params"])
    P = build_pumping(cfg["pumping"], params.Omega)
    if sim["kind"] not in _KINDS:
        raise ConfigError(f"simulate.kind must be one of {sorted(_KINDS)}, got {sim['kind']!r}")
    kind = _KINDS[sim["kind"]]
    if kind is RhsKind.AVERAGED and not params.is_resonant():
        kind = RhsKind.AVERAGED_NON_RESONANT
    check_kind(kind, params, P)
    if sim["frame"] not in ("native", "lab", "rotating"):
        raise ConfigError("simulate.frame must be native, lab or rotating")
    ini = sim["initial"]
    if not isinstance(ini, dict):
        raise ConfigError("simulate.initial must be an object")
    if kind is RhsKind.PURE:
        _reject_unknown("simulate.initial", ini, {"A", "B", "C1", "C2"})
        C = PureState(_complex(ini.get("C1", [1, 0]), "C1"), _complex(ini.get("C2", [0, 0]), "C2"))
        y0 = np.array([float(ini.get("A", 0.0)), float(ini.get("B", 0.0)), C.C1.real, C.C1.imag, C.C2.real, C.C2.imag])
    elif "branch" in ini:
        _reject_unknown("simulate.initial", ini, {"branch", "parameter"})
        y0 = _harmonic(ini, params, P).to_array()
    else:
        _reject_unknown("simulate.initial", ini, {"M", "S"})
        y0 = FullState(_complex(ini["M"], "M"), np.asarray(ini["S"], dtype=float)).to_array()
    t_end = float(sim["t_end"])
    n = int(sim["samples"])
    if not (t_end > 0 and n >= 2):
        raise ConfigError("simulate needs t_end > 0 and samples >= 2")
    return params, P, kind, y0, np.linspace(0.0, t_end, n)


def _harmonic(ini, params, P):
    if ini["branch"] == "Z1":
        return harmonic_z1(params, P, float(ini["parameter"]))
    if ini["branch"] == "Z2":
        return harmonic_z2(params, P, float(ini["parameter"]))
    raise ConfigError(f"branch must be Z1 or Z2, got {ini['branch']!r}")


def trajectory_table(kind, times, states, params: ModelParams, frame: str):
    """Rows of the trajectory CSV; ``A, B`` are always lab-frame quantities."""
    if kind is RhsKind.PURE:
        A, B = states[:, 0], states[:, 1]
        C1 = states[:, 2] + 1j * states[:, 3]
        C2 = states[:, 4] + 1j * states[:, 5]
        r21 = C2 * np.conj(C1)
        S = np.column_stack([2 * r21.real, 2 * r21.imag, np.abs(C1) ** 2 - np.abs(C2) ** 2])
        lab = np.column_stack([A, B / params.Omega, S])
        trace = np.abs(C1) ** 2 + np.abs(C2) ** 2 - 1.0
        native = lab
    else:
        native = states
        lab = states if kind is RhsKind.FULL else rotating_to_lab_arrays(times, states, params)
        trace = 0.5 * (1 + states[:, 4]) + 0.5 * (1 - states[:, 4]) - 1.0
    if frame == "lab":
        shown = lab
    elif frame == "rotating":
        shown = lab_to_rotating_arrays(times, lab, params) if kind in (RhsKind.FULL, RhsKind.PURE) else native
    else:
        shown = native
    A = lab[:, 0]
    B = params.Omega * lab[:, 1]
    norm = np.linalg.norm(shown[:, 2:5], axis=1)
    return np.column_stack([times, A, B, shown, norm, trace])


def cmd_simulate(cfg: dict, out: Path) -> int:
    params, P, kind, y0, grid = _simulate_setup(cfg)
    h = effective_hash(cfg)
    tr = integrate(kind, y0, (0.0, grid[-1]), params, P, tol=cfg["tol"], t_eval=grid)
    rows = trajectory_table(kind, tr.times, tr.states, params, cfg["simulate"]["frame"])
    meta = {"config_hash": h, "csv_schema": CSV_SCHEMA}
    data_hash = write_csv(out / "trajectory.csv", TRAJECTORY_COLUMNS, rows.tolist(), meta)
    write_json(
        out / "trajectory.json",
        {
            "config": cfg,
            "config_hash": h,
            "csv_schema": CSV_SCHEMA,
            "csv_sha256": data_hash,
            "kind": kind.name,
            "metadata": tr.metadata,
        },
    )
    print(f"simulate: {len(tr)} samples, {tr.metadata['n_steps']} steps -> {out / 'trajectory.csv'}")
    return EXIT_OK


# --- equilibria ----------------------------------------------------------------

EQ_COLUMNS = (
    ["branch", "parameter", "Re M", "Im M", "S1", "S2", "S3", "residual"]
    + [f"{src}{k}_{part}" for src in ("closed", "numeric") for k in range(1, 6) for part in ("re", "im")]
    + ["spectrum_distance", "stable_closed", "stable_numeric", "degenerate"]
)


def _eq_row(state, rep_c, params, P):
    ev_n = numeric_spectrum(2 * jacobian(state, params, P))
    row = [state.branch, state.parameter, *state.to_array(), stationarity_residual(state, params, P)]
    for ev in (rep_c.eigenvalues, ev_n):
        for z in ev:
            row += [float(np.real(z)), float(np.imag(z))]
    row += [spectrum_distance(rep_c.eigenvalues, ev_n), rep_c.stable_nonzero_modes, _stable_nonzero(ev_n), rep_c.degenerate]
    return row


def cmd_equilibria(cfg: dict, out: Path) -> int:
    params = build_params(cfg["params"])
    P = build_pumping(cfg["pumping"], params.Omega)
    eq = cfg["equilibria"]
    if eq["branch"] not in ("Z1", "Z2", "both"):
        raise ConfigError("equilibria.branch must be Z1, Z2 or both")
    n = int(eq["points"])
    if n < 2:
        raise ConfigError("equilibria.points must be >= 2")
    h = effective_hash(cfg)
    rows = []
    if eq["branch"] in ("Z1", "both"):
        for th in np.linspace(0.0, 2 * np.pi, n, endpoint=False):
            try:
                st = harmonic_z1(params, P, float(th))
            except MBLabError:
                continue  # arc outside the Bloch ball
            rows.append(_eq_row(st, spectrum_z1(params, P, float(th)), params, P))
    if eq["branch"] in ("Z2", "both"):
        if not z2_exists(params, P.Ae):
            harmonic_z2(params, P, 0.0)  # raises BranchEmpty with the inequality
        beta = params.beta_r(P.Ae)
        for s3 in np.linspace(-beta, beta, n):
            rows.append(_eq_row(harmonic_z2(params, P, float(s3)), spectrum_z2(params, P, float(s3)), params, P))
    data_hash = write_csv(out / "equilibria.csv", EQ_COLUMNS, rows, {"config_hash": h, "csv_schema": "equilibria/1"})
    write_json(
        out / "equilibria.json",
        {"config": cfg, "config_hash": h, "csv_schema": "equilibria/1", "csv_sha256": data_hash, "rows": len(rows)},
    )
    worst = max((r[7] for r in rows), default=0.0)
    print(f"equilibria: {len(rows)} states, max residual {worst:.3e} -> {out / 'equilibria.csv'}")
    return EXIT_OK


# --- experiment ------------------------------------------------------------------


def experiment_options(cfg: dict) -> tuple[str, dict]:
    opts = dict(cfg["experiment"])
    name = opts.pop("name", "adiabatic")
    if name not in EXPERIMENTS:
        raise ConfigError(f"experiment name must be one of {EXPERIMENTS}, got {name!r}")
    return name, _merge(EXPERIMENT_DEFAULTS[name], opts, f"experiment[{name}]")


def run_experiment(cfg: dict, workers: int):
    name, o = experiment_options(cfg)
    tol, seed = cfg["tol"], cfg["seed"]
    if name == "adiabatic":
        params = build_params(cfg["params"], p=o["p_list"][0], r=o["r"])
        P = build_pumping(cfg["pumping"], params.Omega)
        init = _harmonic(o["initial"], params, P)
        return ex.run_adiabatic_asymptotics(params, P, float(o["r"]), o["p_list"], init, tol=tol, workers=workers)
    if name == "stable":
        params = build_params(cfg["params"], p=o["p_list"][0], r=o["r_list"][0])
        P = build_pumping(cfg["pumping"], params.Omega)
        return ex.run_stable_asymptotics(
            params, P, float(o["d"]), o["s"], o["p_list"], int(o["samples"]), seed,
            r_list=o["r_list"], d_halvings=int(o["d_halvings"]), tol=tol, workers=workers,
        )
    if name == "avg-vs-int":
        params = build_params(cfg["params"], p=o["p_list"][0], r=o["r"])
        P = build_pumping(cfg["pumping"], params.Omega)
        ini = o["initial"]
        y0 = FullState(_complex(ini["M"], "M"), np.asarray(ini["S"], dtype=float)).to_array()
        return ex.run_averaged_vs_interaction(params, P, o["p_list"], y0, float(o["horizon_factor"]), tol=tol, workers=workers)
    if name == "kbm":
        params = build_params(cfg["params"], p=o["p_list"][0], r=o["r"])
        P = build_pumping(cfg["pumping"], params.Omega)
        return ex.run_kbm_order(params, P, o["p_list"], (o["center"], o["half_widths"]), workers=workers)
    if name == "apriori":
        params = build_params(cfg["params"], p=o["p"], r=o["r"])
        P = build_pumping(cfg["pumping"], params.Omega)
        return ex.run_apriori_check(params, P, o["initial_list"], o["horizon"], tol=tol, workers=workers, margin=float(o["margin"]))
    params = build_params(cfg["params"], p=o["p"], r=o["r"])
    P = build_pumping(cfg["pumping"], params.Omega)
    C0 = PureState(_complex(o["C0"][0], "C0[0]"), _complex(o["C0"][1], "C0[1]"))
    return ex.run_pure_vs_mixed(params, P, C0, _complex(o["M0"], "M0"), float(o["horizon"]), tol=tol)


def cmd_experiment(cfg: dict, out: Path, workers: int) -> int:
    name, _ = experiment_options(cfg)
    h = effective_hash(cfg)
    stem = name.replace("-", "_")
    try:
        report = run_experiment(cfg, workers)
    except Exception as e:
        write_json(out / f"{stem}_report.partial.json", {"config": cfg, "config_hash": h, "error": f"{type(e).__name__}: {e}"})
        raise
    body = report.to_dict()
    doc = {"config": cfg, "config_hash": h, "report": body}
    header, rows = report.curves()
    data_hash = write_csv(out / f"{stem}_curves.csv", header, rows, {"config_hash": h, "csv_schema": f"{name}/1"})
    doc["csv_sha256"] = data_hash
    write_json(out / f"{stem}_report.json", doc)
    for k, v in report.checks.items():
        print(f"{'PASS' if v else 'FAIL'} {name}: {k}")
    print(f"experiment {name}: {'PASS' if report.passed else 'FAIL'} -> {out / (stem + '_report.json')}")
    return EXIT_OK


# --- verify ----------------------------------------------------------------------


def _csv_meta(path: Path) -> dict:
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("# "):
                break
            k, _, v = line[2:].rstrip("\n").partition(": ")
            meta[k] = v
    return meta


def verify_dir(out: Path) -> list[str]:
    """Problems found when re-hashing every JSON sidecar/report in ``out``."""
    problems = []
    sidecars = sorted(p for p in out.glob("*.json") if not p.name.endswith(".partial.json"))
    if not sidecars:
        problems.append(f"no output files in {out}")
    for js in sidecars:
        doc = json.loads(js.read_text())
        h = effective_hash(doc["config"])
        if h != doc.get("config_hash"):
            problems.append(f"{js.name}: config hash mismatch")
        rep = doc.get("report")
        if rep is not None:
            body = {k: v for k, v in rep.items() if k != "content_hash"}
            if content_hash(body) != rep.get("content_hash"):
                problems.append(f"{js.name}: report content hash mismatch")
        stem = js.stem.replace("_report", "_curves")
        csv_path = out / (stem + ".csv")
        if csv_path.exists():
            if _csv_meta(csv_path).get("config_hash") != h:
                problems.append(f"{csv_path.name}: embedded config hash mismatch")
            if hashlib.sha256(csv_path.read_bytes()).hexdigest() != doc.get("csv_sha256"):
                problems.append(f"{csv_path.name}: content differs from sidecar digest")
    return problems


def compare_trajectories(a: Path, b: Path) -> float:
    """Largest absolute difference of the state columns of two trajectory CSVs."""

    def load(p):
        return np.loadtxt(p, delimiter=",", comments="#", skiprows=_header_lines(p) + 1)

    A, B = load(a), load(b)
    if A.shape != B.shape or np.any(A[:, 0] != B[:, 0]):
        raise ConfigError("trajectories are sampled on different grids")
    return float(np.max(np.abs(A[:, 1:8] - B[:, 1:8])))


def _header_lines(p: Path) -> int:
    return len(_csv_meta(p))


def cmd_verify(out: Path, compare=None, tol=None) -> int:
    if compare:
        diff = compare_trajectories(Path(compare[0]), Path(compare[1]))
        bound = 10 * (tol if tol is not None else DEFAULTS["tol"])
        ok = diff < bound
        print(f"{'PASS' if ok else 'FAIL'} max state difference {diff:.3e} (bound {bound:.1e})")
        return EXIT_OK if ok else EXIT_DOMAIN
    problems = verify_dir(out)
    for p in problems:
        print(f"FAIL {p}")
    if not problems:
        print(f"PASS all hashes in {out} verified")
    return EXIT_OK if not problems else EXIT_DOMAIN


# --- entry point -----------------------------------------------------------------


def _global_flags(default):
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", default=default, help="JSON run configuration")
    common.add_argument("--out", metavar="DIR", default=default, help=f"output directory (default: ${OUT_ENV} or .)")
    common.add_argument("--seed", type=int, metavar="U64", default=default, help="override the configured seed")
    common.add_argument("--workers", type=int, metavar="N", default=default, help="worker processes (default: CPU count)")
    common.add_argument("--tol", type=float, metavar="FLOAT", default=default, help="override the integrator tolerance")
    return common


def build_parser() -> argparse.ArgumentParser:
    # flags are accepted before or after the subcommand; SUPPRESS keeps the
    # subcommand parser from resetting values given before it
    parser = argparse.ArgumentParser(prog="mbelab", description=__doc__.splitlines()[0], parents=[_global_flags(None)])
    common = _global_flags(argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="integrate one trajectory to CSV")
    sub.add_parser("equilibria", parents=[common], help="tabulate harmonic states and spectra")
    e = sub.add_parser("experiment", parents=[common], help="run a verification campaign")
    e.add_argument("name", nargs="?", choices=EXPERIMENTS, help="campaign (overrides experiment.name)")
    v = sub.add_parser("verify", parents=[common], help="re-hash outputs, or compare two trajectories")
    v.add_argument("--compare", nargs=2, metavar=("CSV_A", "CSV_B"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        if args.workers is not None and args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg = load_config(args.config)
        cfg = apply_overrides(cfg, args.seed, args.tol, getattr(args, "name", None))
        if not isinstance(cfg["tol"], (int, float)) or not 1e-13 <= cfg["tol"] <= 1e-4:
            raise ConfigError(f"tol must lie in [1e-13, 1e-4], got {cfg['tol']!r}")
        out = _out_dir(args.out)
        workers = args.workers or ex.default_workers()
        if args.command == "verify":
            return cmd_verify(out, args.compare, args.tol)
        if args.command == "simulate":
            _simulate_setup(cfg)  # validate before running
            return cmd_simulate(cfg, out)
        if args.command == "equilibria":
            return cmd_equilibria(cfg, out)
        name, opts = experiment_options(cfg)
        cfg["experiment"] = {"name": name, **opts}
        return cmd_experiment(cfg, out, workers)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as e:
        print(f"integration failed at t = {e.t!r}: {e}", file=sys.stderr)
        return EXIT_INTEGRATION
    except MBLabError as e:
        # parameter invariants are configuration errors; the rest are domain errors
        code = EXIT_CONFIG if isinstance(e, (InvalidParameters, NormViolation)) else EXIT_DOMAIN
        print(f"{'config' if code == EXIT_CONFIG else 'domain'} error: {e}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
