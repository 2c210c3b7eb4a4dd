"""Command-line interface: ``tunnelpath {scatter,path,wkb-compare,probabilities,sweep}``.

Every command writes its tables (CSV or JSON, 12 significant digits) into the
output directory together with a ``<command>.meta.json`` sidecar holding the
resolved configuration, the package version and the numerical tolerances.
Nothing time-dependent is written, so identical inputs give identical bytes.

Exit codes: 0 success, 1 invalid configuration, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from . import probabilities as prob
from . import quasiclassical as qc
from . import wavepacket as wp
from .errors import (
    ConvergenceWarning,
    DomainError,
    FlatDensityError,
    IllConditionedError,
    MonotonicityError,
    NormalizationWarning,
    PacketWarning,
)
from .scattering import BarrierParams, transmission_amplitude, _amplitudes_any
from .wkb import wkb_invertibility_witness, wkb_s_of_d

PRECISION = 12
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
JOBS_ENV = "TUNNELPATH_JOBS"


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration; message names the field."""


@dataclass
class RunConfig:
    gamma: list = field(default_factory=list)
    epsilon: list = field(default_factory=list)
    v0: float | None = None
    a: float | None = None
    m: float = 1.0
    x0: float | None = None
    k0: float = 1.0
    sigma_p: float = 0.01
    x_first: float = 0.0
    l_second: float | None = None
    d_samples: int = 201
    k_samples: int = 200
    k_nodes: int = wp.DEFAULT_NODES
    tau_window: list | None = None
    tau_step: float | None = None
    format: str = "csv"
    out: str = "tunnelpath-out"
    invert: bool = False
    jobs: int | None = None

    @property
    def dimensional(self):
        return self.v0 is not None or self.a is not None

    def validate(self, command):
        if self.dimensional and (self.gamma or self.epsilon):
            raise ConfigError("gamma/epsilon and v0/a are mutually exclusive")
        if self.dimensional and (self.v0 is None or self.a is None):
            raise ConfigError("v0 and a must be given together")
        for name in ("m", "k0", "sigma_p"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                raise ConfigError(f"{name}: must be a finite positive number, got {v!r}")
        for name in ("d_samples", "k_samples", "k_nodes"):
            if int(getattr(self, name)) < 2:
                raise ConfigError(f"{name}: must be at least 2")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format: expected csv or json, got {self.format!r}")
        if self.tau_window is not None:
            if len(self.tau_window) != 2 or not self.tau_window[0] < self.tau_window[1]:
                raise ConfigError("tau_window: expected two increasing times")
        if self.tau_step is not None and not self.tau_step > 0:
            raise ConfigError("tau_step: must be > 0")
        if self.jobs is not None and int(self.jobs) < 1:
            raise ConfigError("jobs: must be >= 1")
        for g in self.gamma:
            if not g > 0:
                raise ConfigError(f"gamma: values must be > 0, got {g!r}")
        for e in self.epsilon:
            if not 0 < e < 1:
                raise ConfigError(f"epsilon: values must lie in (0, 1), got {e!r}")
        if command in ("path", "wkb-compare", "sweep"):
            if self.dimensional:
                raise ConfigError(f"{command}: needs gamma/epsilon, not v0/a")
            if not self.gamma or not self.epsilon:
                raise ConfigError(f"{command}: empty (gamma, epsilon) list")
        if command == "probabilities":
            if not self.dimensional and (len(self.gamma) != 1 or len(self.epsilon) != 1):
                raise ConfigError("probabilities: give exactly one gamma and one epsilon, or v0 and a")

    def pairs(self):
        return list(itertools.product(self.gamma, self.epsilon))

    def barriers(self):
        if self.dimensional:
            return [BarrierParams(float(self.v0), float(self.a), float(self.m))]
        return [BarrierParams.from_dimensionless(g, e, k0=self.k0, m=self.m) for g, e in self.pairs()]

    def echo(self):
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name not in ("out", "jobs")}


# ---------------------------------------------------------------------------
# configuration


_FLAG_FIELDS = {
    "gamma": "gamma", "epsilon": "epsilon", "v0": "v0", "a": "a", "m": "m", "x0": "x0",
    "k0": "k0", "sigma_p": "sigma_p", "x_first": "x_first", "l_second": "l_second",
    "d_samples": "d_samples", "k_samples": "k_samples", "k_nodes": "k_nodes",
    "tau_window": "tau_window", "tau_step": "tau_step", "format": "format", "out": "out",
    "invert": "invert", "jobs": "jobs",
}


def _as_list(v):
    return [float(x) for x in (v if isinstance(v, (list, tuple)) else [v])]


def load_config(args) -> RunConfig:
    """Config file first, then command-line flags on top."""
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config: cannot read {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config: top level must be a JSON object")
        known = {f.name for f in fields(RunConfig)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"config: unknown field(s) {', '.join(unknown)}")
    for dest, name in _FLAG_FIELDS.items():
        v = getattr(args, dest, None)
        if v is not None and v is not False:
            data[name] = v
    if "gamma" in data:
        data["gamma"] = _as_list(data["gamma"])
    if "epsilon" in data:
        data["epsilon"] = _as_list(data["epsilon"])
    try:
        cfg = RunConfig(**data)
    except TypeError as exc:
        raise ConfigError(f"config: {exc}") from exc
    if cfg.jobs is None:
        env = os.environ.get(JOBS_ENV)
        if env:
            try:
                cfg.jobs = int(env)
            except ValueError as exc:
                raise ConfigError(f"{JOBS_ENV}: expected an integer, got {env!r}") from exc
    return cfg


# ---------------------------------------------------------------------------
# output


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return f"{v:.{PRECISION}g}"
    return str(v)


def _json_value(v):
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return None if not math.isfinite(v) else float(f"{v:.{PRECISION}g}")
    return v


def _dump_json(obj):
    return json.dumps(_json_value(obj), indent=2, sort_keys=True) + "\n"


class Writer:
    """Collects tables for one command and writes them with a metadata sidecar."""

    def __init__(self, cfg: RunConfig, command):
        self.cfg = cfg
        self.command = command
        self.out = Path(cfg.out)
        self.files = []
        self.notes = []

    def table(self, name, columns, rows):
        self.out.mkdir(parents=True, exist_ok=True)
        if self.cfg.format == "csv":
            path = self.out / f"{name}.csv"
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
            path.write_text(buf.getvalue())
        else:
            path = self.out / f"{name}.json"
            recs = [dict(zip(columns, r)) for r in rows]
            path.write_text(_dump_json({"columns": list(columns), "rows": recs}))
        self.files.append(path.name)

    def record(self, name, obj):
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / f"{name}.json"
        path.write_text(_dump_json(obj))
        self.files.append(path.name)

    def finish(self, extra=None):
        meta = {
            "command": self.command,
            "version": __version__,
            "config": self.cfg.echo(),
            "precision_significant_digits": PRECISION,
            "tolerances": {
                "root_xtol": qc.ROOT_XTOL,
                "root_maxiter": qc.ROOT_MAXITER,
                "quadrature_doubling_rtol": wp.CONVERGENCE_RTOL,
                "density_noise_floor": prob.NOISE_FLOOR,
                "probability_tol": prob.PROB_TOL,
            },
            "files": sorted(self.files),
            "warnings": self.notes,
        }
        if extra:
            meta.update(extra)
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / f"{self.command}.meta.json").write_text(_dump_json(meta))


def _collect_warnings(caught, writer):
    seen = []
    for w in caught:
        text = f"{w.category.__name__}: {w.message}"
        if text not in seen:
            seen.append(text)
    writer.notes.extend(seen)


# ---------------------------------------------------------------------------
# commands


def cmd_scatter(cfg: RunConfig, writer: Writer):
    rows = []
    for b in cfg.barriers():
        kmax = b.k_threshold if not b.trivial else 2.0 * cfg.k0
        n = int(cfg.k_samples)
        k = kmax * np.arange(1, n + 1) / n
        T, R = _amplitudes_any(k, b)
        T2, R2 = np.abs(T) ** 2, np.abs(R) ** 2
        for ki, t2, r2, t in zip(k, T2, R2, T):
            rows.append((b.V0, b.a, b.m, ki, t2, r2, math.atan2(t.imag, t.real), abs(t2 + r2 - 1.0)))
    writer.table("scatter", ["V0", "a", "m", "k", "T2", "R2", "argT", "unitarity_defect"], rows)


def cmd_path(cfg: RunConfig, writer: Writer):
    rows, inv_rows = [], []
    for g, e in cfg.pairs():
        tab = qc.build_path(g, e, int(cfg.d_samples))
        for d, s in zip(tab.D, tab.S):
            rows.append((g, e, d, s))
        if cfg.invert:
            b = BarrierParams.from_dimensionless(g, e, k0=cfg.k0, m=cfg.m)
            lam = float(b.lam(cfg.k0))
            x0 = cfg.x0 if cfg.x0 is not None else -b.a - 5.0 * (1.0 / (2.0 * cfg.sigma_p))
            shift = cfg.m * (x0 + b.a) / cfg.k0
            for s in np.linspace(tab.S[0], tab.S[-1], int(cfg.d_samples)):
                d = qc.invert_path(g, e, s)
                tau1 = s * cfg.m / (cfg.k0 * lam)
                inv_rows.append((g, e, s, d, tau1, tau1 - shift, d * b.a))
    writer.table("path", ["gamma", "epsilon", "D", "S"], rows)
    if cfg.invert:
        writer.table("path_inverted", ["gamma", "epsilon", "S", "D", "tau1", "tau", "x"], inv_rows)


def cmd_wkb_compare(cfg: RunConfig, writer: Writer):
    rows, report = [], []
    D = np.linspace(-1.0, 1.0, int(cfg.d_samples))
    for g, e in cfg.pairs():
        se = qc.s_of_d_exact(D, g, e)
        sw = wkb_s_of_d(D, g, e)
        rows.extend((g, e, d, a_, b_) for d, a_, b_ in zip(D, se, sw))
        w = wkb_invertibility_witness(g, e)
        report.append({
            "gamma": g, "epsilon": e, "witness_found": w.found, "D1": w.D1, "D2": w.D2,
            "S": w.S, "message": w.message, "S_exact_exit": float(se[-1]),
            "S_wkb_exit": float(sw[-1]),
        })
    writer.table("wkb_compare", ["gamma", "epsilon", "D", "S_exact", "S_wkb"], rows)
    writer.record("wkb_witness", {"pairs": report})


def _default_x0(cfg, b):
    if cfg.x0 is not None:
        return float(cfg.x0)
    return -b.a - 5.0 / (2.0 * cfg.sigma_p)


def _tau_grid(cfg, centre, spec, b):
    if cfg.tau_window is not None:
        lo, hi = map(float, cfg.tau_window)
    else:
        half = 4.0 * spec.sigma_x * b.m / spec.k0
        lo, hi = centre - half, centre + half
    step = cfg.tau_step if cfg.tau_step is not None else (hi - lo) / 400.0
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def cmd_probabilities(cfg: RunConfig, writer: Writer):
    (b,) = cfg.barriers()[:1]
    spec = wp.WavePacketSpec(x0=_default_x0(cfg, b), k0=cfg.k0, sigma_p=cfg.sigma_p)
    x = float(cfg.x_first)
    L = float(cfg.l_second) if cfg.l_second is not None else b.a + 1.0
    prob.DetectorPair(x, L).check_against(b)
    n = int(cfg.k_nodes)
    if b.trivial:
        centre = b.m * (x - spec.x0) / spec.k0
    else:
        centre = float(qc.path_time(min(max(x, -b.a), b.a), spec, b))
    taus = _tau_grid(cfg, centre, spec, b)
    p1 = prob.first_detector_density(x, taus, spec, b, n=n, check=True)
    inside = b.trivial or abs(x) <= b.a
    pps = prob.postselected_density(x, taus, spec, b, n=n, check=True) if inside else None
    rows = [(t, a_, (c if pps is not None else math.nan)) for t, a_, c in
            zip(taus, p1, pps if pps is not None else p1)]
    writer.table("densities", ["tau", "P1", "Pps"], rows)
    ts = taus + b.m * (L - x) / spec.k0
    pl = prob.toa_density(L, ts, spec, b, n=n, check=True)
    writer.table("toa", ["t", "P_L"], list(zip(ts, pl)))

    table = prob.joint_detection_probabilities(x, spec, b, n=n) if inside else None
    ratio = prob.exit_point_ratio(spec, b)
    summary = {"x_first": x, "L_second": L, "x0": spec.x0,
               "P_tot": prob.total_transmission_probability(spec, b, n=n),
               "exit_ratio": ratio}
    if table is not None:
        s = table.scalars()
        summary.update({k: v for k, v in s.items() if k != "P_tot"})
        summary["ordering_pp_le_pe"] = bool(s["P_pp"] <= s["P_pe"])
        summary["ordering_pp_le_ep"] = bool(s["P_pp"] <= s["P_ep"])
    if not b.trivial:
        ta = taus + b.m * (b.a - x) / spec.k0
        r = (prob.postselected_density(b.a, ta, spec, b, n=n)
             / np.maximum(prob.first_detector_density(b.a, ta, spec, b, n=n), np.finfo(float).tiny))
        peak = prob.first_detector_density(b.a, ta, spec, b, n=n)
        mask = peak > 1e-3 * float(np.max(peak))
        rr = r[mask]
        summary["measured_ratio_mean"] = float(np.mean(rr))
        summary["measured_ratio_spread"] = float((np.max(rr) - np.min(rr)) / np.mean(rr))
        summary["ratio_check_pass"] = bool(abs(np.mean(rr) / ratio - 1.0) <= 0.01
                                           and summary["measured_ratio_spread"] <= 0.01)
    writer.record("summary", summary)


def _sweep_cell(args):
    idx, g, e, n_d = args
    D = np.linspace(-1.0, 1.0, n_d)
    S = qc.s_of_d_exact(D, g, e)
    b = BarrierParams.from_dimensionless(g, e)
    w = wkb_invertibility_witness(g, e)
    return idx, (
        g, e, float(abs(transmission_amplitude(1.0, b)) ** 2),
        qc.dimensionless_phase_time(g, e), float(S[0]), float(S[len(S) // 2]), float(S[-1]),
        float(np.min(np.diff(S))), bool(w.found), w.D1, w.D2,
    )


def _run_cell(args):
    try:
        return _sweep_cell(args)
    except Exception as exc:  # reported per cell, never fatal to the sweep
        return args[0], f"{type(exc).__name__}: {exc}"


def cmd_sweep(cfg: RunConfig, writer: Writer):
    cells = [(i, g, e, int(cfg.d_samples)) for i, (g, e) in enumerate(cfg.pairs())]
    jobs = int(cfg.jobs or 1)
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_cell, cells, chunksize=max(1, len(cells) // (4 * jobs))))
    else:
        results = [_run_cell(c) for c in cells]
    results.sort(key=lambda r: r[0])
    rows = [r[1] for r in results if not isinstance(r[1], str)]
    failures = [{"index": i, "gamma": cells[i][1], "epsilon": cells[i][2], "reason": r}
                for i, r in results if isinstance(r, str)]
    writer.table("sweep", ["gamma", "epsilon", "T2", "S_exit", "S_entry", "S_mid", "S_exit_sampled",
                           "min_dS", "wkb_witness", "wkb_D1", "wkb_D2"], rows)
    writer.record("sweep_failures", {"failed": failures, "total": len(cells)})
    return failures


COMMANDS = {
    "scatter": cmd_scatter,
    "path": cmd_path,
    "wkb-compare": cmd_wkb_compare,
    "probabilities": cmd_probabilities,
    "sweep": cmd_sweep,
}


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON configuration file; flags override it")
    common.add_argument("--gamma", type=float, nargs="+", help="opacity values")
    common.add_argument("--epsilon", type=float, nargs="+", help="energy ratios")
    common.add_argument("--v0", type=float, help="barrier height (with --a)")
    common.add_argument("--a", type=float, help="barrier half-width (with --v0)")
    common.add_argument("--m", type=float, help="mass")
    common.add_argument("--x0", type=float, help="initial packet centre")
    common.add_argument("--k0", type=float, help="mean momentum")
    common.add_argument("--sigma-p", dest="sigma_p", type=float, help="momentum spread")
    common.add_argument("--x-first", dest="x_first", type=float, help="first detector position")
    common.add_argument("--l-second", dest="l_second", type=float, help="second detector position")
    common.add_argument("--d-samples", dest="d_samples", type=int, help="samples in D")
    common.add_argument("--k-samples", dest="k_samples", type=int, help="momentum rows for scatter")
    common.add_argument("--k-nodes", dest="k_nodes", type=int, help="momentum quadrature nodes")
    common.add_argument("--tau-window", dest="tau_window", type=float, nargs=2,
                        metavar=("LO", "HI"), help="detection-time window")
    common.add_argument("--tau-step", dest="tau_step", type=float, help="detection-time step")
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", choices=["csv", "json"], help="table format")
    common.add_argument("--invert", action="store_true", default=False,
                        help="also emit the inverted path x(tau)")
    common.add_argument("--jobs", type=int, help=f"parallel workers (default ${JOBS_ENV} or 1)")

    parser = _Parser(prog="tunnelpath", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        cfg.validate(args.command)
    except ConfigError as exc:
        print(f"tunnelpath: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    writer = Writer(cfg, args.command)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ConvergenceWarning)
            warnings.simplefilter("always", NormalizationWarning)
            warnings.simplefilter("always", PacketWarning)
            result = COMMANDS[args.command](cfg, writer)
        _collect_warnings(caught, writer)
        writer.finish()
    except DomainError as exc:
        print(f"tunnelpath: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IllConditionedError, MonotonicityError, FlatDensityError, ArithmeticError) as exc:
        print(f"tunnelpath: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.command == "sweep" and result:
        print(f"tunnelpath: {len(result)} sweep cell(s) failed; see sweep_failures.json",
              file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
