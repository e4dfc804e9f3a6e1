"""Command-line front end.

Subcommands: ``simulate`` (run one scenario, emit a JSON report), ``bound``
(sweep the fidelity ceiling over a grid, emit CSV/JSON/SVG), ``verify`` (run a
diagnostic suite, emit a JSON summary), ``plot`` (turn a bound CSV into an SVG
chart).  Scenarios come from a flat key=value config file, with every key also
exposed as a command-line flag that overrides the file.

Outputs are deterministic: floats are printed with 17 significant digits, grid
sweeps are computed in parallel but written sorted, and charts use fixed
2-decimal coordinates.  Exit codes: 0 ok, 1 verification failure, 2
usage/config error, 3 representation error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import bounds, circuits, measurement, svgchart, verify
from .collective import MsConfig, RepresentationError, sector_probabilities
from .metrics import BELL_EVEN_PLUS, BELL_ODD_PLUS, average_fidelity, fidelity
from .states import LayoutError, ValidationError

CSV_SCHEMA_LINE = "# schema=1"
CSV_HEADER = "N,epsilon,polarization,f_avg_max"

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_USAGE = 2
EXIT_REPRESENTATION = 3
EXIT_IO = 4


class UsageError(ValueError):
    """Bad flags, config keys, or inconsistent scenario parameters."""


# ---------------------------------------------------------------------------
# deterministic emitters


def _format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ValidationError("refusing to serialize a non-finite number")
    return "%.17g" % x


def emit_json(obj, indent: int = 0) -> str:
    """Hand-rolled JSON so float formatting is pinned (17 significant digits),
    None maps to null, and key order follows insertion order."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{inner}{json.dumps(str(k))}: {emit_json(v, indent + 1)}"
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        items = [f"{inner}{emit_json(v, indent + 1)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# config plumbing


def read_flat_config(path: str) -> dict:
    """Flat key=value lines; '#' starts a comment; values stay strings."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _merge(file_cfg: dict, args: argparse.Namespace, key: str, cast, default=None):
    """Flag wins over config file wins over default."""
    flag_val = getattr(args, key, None)
    if flag_val is not None:
        return flag_val
    if key in file_cfg:
        raw = file_cfg[key]
        try:
            return cast(raw)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"config key {key}={raw!r}: {exc}") from exc
    return default


def _as_bool(raw) -> bool:
    if isinstance(raw, bool):
        return raw
    text = str(raw).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _float_list(raw) -> tuple:
    if isinstance(raw, tuple):
        return raw
    return tuple(float(tok) for tok in str(raw).split(",") if tok.strip())


def _int_grid(raw) -> tuple:
    """Accept '4', '1,2,5', or an inclusive range '1:100'."""
    if isinstance(raw, tuple):
        return raw
    text = str(raw).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise ValueError(f"range syntax is lo:hi[:step], got {text!r}")
        lo, hi = int(parts[0]), int(parts[1])
        step = int(parts[2]) if len(parts) == 3 else 1
        if step < 1 or hi < lo:
            raise ValueError(f"empty range {text!r}")
        return tuple(range(lo, hi + 1, step))
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def _resolve_epsilon(epsilon, polarization) -> tuple:
    """Exactly one of epsilon/polarization, or both consistent; returns both."""
    if epsilon is None and polarization is None:
        return 0.0, 1.0
    if epsilon is None:
        return 1.0 - polarization, polarization
    if polarization is None:
        return epsilon, 1.0 - epsilon
    if abs((1.0 - polarization) - epsilon) > 1e-9:
        raise UsageError(
            f"epsilon={epsilon} and polarization={polarization} disagree "
            f"(need polarization = 1 - epsilon)"
        )
    return epsilon, polarization


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulate run: circuit, MS, measurement, and reporting options."""

    kind: str
    n: int
    epsilon: float
    polarization: float
    backend: str
    measurement: str
    theta: Optional[tuple]
    g: Optional[float]
    t_m: Optional[float]
    v_odd: str
    v_even: str
    post_select: Optional[int]
    disentangle: bool
    seed: int

    def __post_init__(self):
        if self.kind not in ("parity_collective", "hamming_half", "ghz_local",
                             "parity_conditioned"):
            raise UsageError(
                f"kind {self.kind!r} not runnable from the CLI "
                "(general_conditional needs explicit matrices; use the library)"
            )
        if self.measurement not in ("sector_pvm", "threshold_pvm", "two_outcome"):
            raise UsageError(f"unknown measurement {self.measurement!r}")
        if self.measurement == "two_outcome":
            has_theta = self.theta is not None
            has_gt = self.g is not None and self.t_m is not None
            if has_theta == has_gt:
                raise UsageError(
                    "two_outcome needs either theta=<comma list of n+1 angles> "
                    "or both g= and t_m="
                )
            if has_theta and len(self.theta) != self.n + 1:
                raise UsageError(
                    f"theta table needs n+1={self.n + 1} entries, got {len(self.theta)}"
                )


def _scenario_from_args(args: argparse.Namespace) -> ScenarioConfig:
    file_cfg = read_flat_config(args.config) if args.config else {}
    known = {"kind", "n", "epsilon", "polarization", "backend", "measurement",
             "theta", "g", "t_m", "v_odd", "v_even", "post_select",
             "disentangle", "seed"}
    unknown = set(file_cfg) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    n = _merge(file_cfg, args, "n", int)
    if n is None:
        raise UsageError("scenario needs n (number of MS sites)")
    epsilon, polarization = _resolve_epsilon(
        _merge(file_cfg, args, "epsilon", float),
        _merge(file_cfg, args, "polarization", float),
    )
    return ScenarioConfig(
        kind=_merge(file_cfg, args, "kind", str, "parity_collective"),
        n=n,
        epsilon=epsilon,
        polarization=polarization,
        backend=_merge(file_cfg, args, "backend", str, "auto"),
        measurement=_merge(file_cfg, args, "measurement", str, "sector_pvm"),
        theta=_merge(file_cfg, args, "theta", _float_list),
        g=_merge(file_cfg, args, "g", float),
        t_m=_merge(file_cfg, args, "t_m", float),
        v_odd=_merge(file_cfg, args, "v_odd", str, circuits.TAG_IDENTITY),
        v_even=_merge(file_cfg, args, "v_even", str, circuits.TAG_IDENTITY),
        post_select=_merge(file_cfg, args, "post_select", int),
        disentangle=_merge(file_cfg, args, "disentangle", _as_bool, False),
        seed=args.seed,
    )


@dataclass(frozen=True)
class SweepConfig:
    """Bound sweep grid: sites x epsilon (with polarization mirrored)."""

    n_values: tuple
    pairs: tuple  # (epsilon, polarization) per series
    out: str
    fmt: str

    def __post_init__(self):
        if not self.n_values or not self.pairs:
            raise UsageError("sweep needs a non-empty N grid and epsilon/polarization list")


def _sweep_from_args(args: argparse.Namespace) -> SweepConfig:
    file_cfg = read_flat_config(args.config) if args.config else {}
    unknown = set(file_cfg) - {"n", "epsilon", "polarization"}
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    n_values = _merge(file_cfg, args, "n", _int_grid)
    if n_values is None:
        raise UsageError("sweep needs n (grid of MS sizes, e.g. 1:100 or 2,4,8)")
    eps_list = _merge(file_cfg, args, "epsilon", _float_list)
    pol_list = _merge(file_cfg, args, "polarization", _float_list)
    if eps_list is None and pol_list is None:
        raise UsageError("sweep needs epsilon=<list> or polarization=<list>")
    if eps_list is not None and pol_list is not None and len(eps_list) != len(pol_list):
        raise UsageError("epsilon and polarization lists differ in length")
    count = len(eps_list) if eps_list is not None else len(pol_list)
    pairs = tuple(
        _resolve_epsilon(
            eps_list[i] if eps_list is not None else None,
            pol_list[i] if pol_list is not None else None,
        )
        for i in range(count)
    )
    return SweepConfig(tuple(n_values), pairs, args.out, args.format or "csv")


# ---------------------------------------------------------------------------
# simulate


def _build_spec(cfg: ScenarioConfig) -> circuits.CircuitSpec:
    ms = MsConfig(cfg.n, cfg.epsilon)
    if cfg.kind == "parity_conditioned":
        return circuits.CircuitSpec(cfg.kind, ms, backend=cfg.backend,
                                    v_odd=cfg.v_odd, v_even=cfg.v_even)
    return circuits.CircuitSpec(cfg.kind, ms, backend=cfg.backend)


def _run_measurement(cfg: ScenarioConfig, state):
    if cfg.measurement == "sector_pvm":
        return measurement.measure(state, measurement.sector_pvm(cfg.n))
    if cfg.measurement == "threshold_pvm":
        return measurement.measure(state, measurement.threshold_pvm(cfg.n))
    if cfg.theta is not None:
        table = measurement.TwoOutcomeTheta(np.asarray(cfg.theta))
        return measurement.measure(state, measurement.povm_from_theta(table))
    # with (g, t_m) given, run the explicit probe-qubit readout circuit
    return measurement.apparatus_measure(state, measurement.ApparatusSpec(cfg.g, cfg.t_m))


def _disentangled_records(spec, records):
    out = []
    for rec in records:
        if rec.post_state is None:
            out.append(rec)
            continue
        post = circuits.disentangle(spec, rec.post_state)
        marg = circuits.qubit_marginal(post)
        f_odd = fidelity(marg, BELL_ODD_PLUS)
        f_even = fidelity(marg, BELL_EVEN_PLUS)
        out.append(measurement.OutcomeRecord(
            rec.outcome, rec.probability, post, f_odd, f_even, max(f_odd, f_even)))
    return out


def _branch_phase_diagnostics(cfg: ScenarioConfig, spec, state):
    """For the locally-built entangler: phase of each qubit branch relative to
    the collective-flip circuit (pure states only)."""
    if cfg.kind != "ghz_local":
        return None
    ref_spec = circuits.CircuitSpec("parity_collective", spec.ms, backend=cfg.backend)
    ref = circuits.evolve(ref_spec, circuits.prepare_inputs(ref_spec))
    try:
        got = circuits.branch_ms_states(state)
        want = circuits.branch_ms_states(ref)
    except RepresentationError:
        return None
    phases = {}
    for key in ((0, 0), (0, 1), (1, 0), (1, 1)):
        w_a, v_a = want.get(key, (0.0, None))
        w_b, v_b = got.get(key, (0.0, None))
        label = f"{key[0]}{key[1]}"
        if v_a is None or v_b is None or w_a < 1e-12 or w_b < 1e-12:
            phases[label] = None
        else:
            phases[label] = float(np.angle(np.vdot(v_a, v_b)))
    return phases


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _scenario_from_args(args)
    if (args.format or "json") != "json":
        raise UsageError("simulate reports are JSON only")
    spec = _build_spec(cfg)
    state = circuits.evolve(spec, circuits.prepare_inputs(spec))
    records = _run_measurement(cfg, state)
    if cfg.disentangle:
        records = _disentangled_records(spec, records)
    if cfg.post_select is not None and not any(
        r.outcome == cfg.post_select for r in records
    ):
        raise UsageError(
            f"post_select={cfg.post_select} is not an outcome of this measurement"
        )
    outcomes = []
    for rec in records:
        sectors = None
        if rec.post_state is not None:
            sectors = [float(p) for p in sector_probabilities(rec.post_state)]
        outcomes.append({
            "id": int(rec.outcome),
            "p": float(rec.probability),
            "f_odd": rec.fidelity_odd,
            "f_even": rec.fidelity_even,
            "f_best": rec.fidelity_best,
            "sectors": sectors,
        })
    diagnostics = {
        "backend": spec.resolved_backend(),
        "pre_measurement_sectors": [float(p) for p in sector_probabilities(state)],
        "branch_phases_vs_collective_flip": _branch_phase_diagnostics(cfg, spec, state),
    }
    if cfg.post_select is not None:
        chosen = next(o for o in outcomes if o["id"] == cfg.post_select)
        diagnostics["post_selected"] = dict(chosen)
    report = {
        "scenario": {
            "kind": cfg.kind,
            "n": cfg.n,
            "epsilon": cfg.epsilon,
            "polarization": cfg.polarization,
            "backend": cfg.backend,
            "measurement": cfg.measurement,
            "theta": list(cfg.theta) if cfg.theta is not None else None,
            "g": cfg.g,
            "t_m": cfg.t_m,
            "v_odd": cfg.v_odd,
            "v_even": cfg.v_even,
            "post_select": cfg.post_select,
            "disentangle": cfg.disentangle,
            "seed": cfg.seed,
        },
        "outcomes": outcomes,
        "f_avg": average_fidelity(records),
        "diagnostics": diagnostics,
    }
    _write_text(args.out, emit_json(report) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# bound sweep


def _bound_row(task):
    n, eps, pol = task
    value = bounds.bound_closed_form(n, eps)
    cross = bounds.bound_sum_form(n, eps)
    if abs(value - cross) > 1e-10:
        raise ValidationError(
            f"bound forms disagree at N={n}, eps={eps}: {value} vs {cross}"
        )
    return (n, eps, pol, value)


def compute_bound_rows(sweep: SweepConfig) -> list:
    tasks = [(n, eps, pol) for n in sweep.n_values for eps, pol in sweep.pairs]
    with ThreadPoolExecutor(max_workers=min(8, max(1, len(tasks)))) as pool:
        rows = list(pool.map(_bound_row, tasks))
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows


def _rows_to_csv(rows) -> str:
    lines = [CSV_SCHEMA_LINE, CSV_HEADER]
    for n, eps, pol, value in rows:
        lines.append(f"{n},{eps!r},{pol!r},{value!r}")
    return "\n".join(lines) + "\n"


def _rows_to_series(rows):
    by_pol = {}
    for n, eps, pol, value in rows:
        by_pol.setdefault(pol, []).append((n, value))
    series = []
    for pol in sorted(by_pol):
        pts = sorted(by_pol[pol])
        series.append(svgchart.Series(
            f"polarization {pol:g}",
            tuple(p[0] for p in pts),
            tuple(p[1] for p in pts),
        ))
    return series


def _rows_to_svg(rows) -> str:
    return svgchart.polyline_chart(
        _rows_to_series(rows),
        x_label="number of MS sites N",
        y_label="ceiling on average Bell fidelity",
        title="Fidelity ceiling under limited polarization",
        y_range=(0.5, 1.0),
    )


def cmd_bound(args: argparse.Namespace) -> int:
    sweep = _sweep_from_args(args)
    rows = compute_bound_rows(sweep)
    fmt = sweep.fmt
    if fmt == "csv":
        _write_text(sweep.out, _rows_to_csv(rows))
    elif fmt == "json":
        payload = {
            "schema": 1,
            "rows": [
                {"n": n, "epsilon": eps, "polarization": pol, "f_avg_max": value}
                for n, eps, pol, value in rows
            ],
        }
        _write_text(sweep.out, emit_json(payload) + "\n")
    elif fmt == "svg":
        _write_text(sweep.out, _rows_to_svg(rows))
    else:
        raise UsageError(f"unknown format {fmt!r} (choose csv, json, or svg)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args: argparse.Namespace) -> int:
    if (args.format or "json") != "json":
        raise UsageError("verify summaries are JSON only")
    names = list(verify.SUITES) if args.suite == "all" else [args.suite]
    results = [verify.run_suite(name, seed=args.seed) for name in names]
    payload = {
        "seed": args.seed,
        "passed": all(r.passed for r in results),
        "suites": [
            {
                "suite": r.suite,
                "passed": r.passed,
                "checks": [dict(c) for c in r.checks],
            }
            for r in results
        ],
    }
    _write_text(args.out, emit_json(payload) + "\n")
    return EXIT_OK if payload["passed"] else EXIT_VERIFY_FAIL


# ---------------------------------------------------------------------------
# plot


def read_bound_csv(path: str) -> list:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    body = [ln for ln in lines if ln.strip()]
    if not body or body[0].strip() != CSV_SCHEMA_LINE:
        raise UsageError(f"{path}: missing '{CSV_SCHEMA_LINE}' leading comment")
    if len(body) < 2 or body[1].strip() != CSV_HEADER:
        raise UsageError(f"{path}: expected header '{CSV_HEADER}'")
    rows = []
    for lineno, line in enumerate(body[2:], 3):
        parts = line.split(",")
        if len(parts) != 4:
            raise UsageError(f"{path}:{lineno}: expected 4 columns, got {len(parts)}")
        try:
            rows.append((int(parts[0]), float(parts[1]), float(parts[2]), float(parts[3])))
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise UsageError(f"{path}: no data rows")
    return rows


def cmd_plot(args: argparse.Namespace) -> int:
    if (args.format or "svg") != "svg":
        raise UsageError("plot emits SVG only")
    rows = read_bound_csv(args.input)
    _write_text(args.out, _rows_to_svg(rows))
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing and dispatch


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base RNG seed")
    common.add_argument("--out", default="-", help="output path ('-' for stdout)")
    common.add_argument("--format", choices=("csv", "json", "svg"), default=None,
                        help="output format (default depends on the subcommand)")

    parser = argparse.ArgumentParser(
        prog="mesoparity",
        description="Indirect two-qubit parity measurement through a mesoscopic "
                    "spin system: simulation, fidelity ceiling, diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", parents=[common],
                         help="run one scenario and report per-outcome fidelities")
    sim.add_argument("--config", help="flat key=value scenario file")
    sim.add_argument("--kind", choices=("parity_collective", "hamming_half",
                                        "ghz_local", "parity_conditioned"))
    sim.add_argument("--n", type=int, help="number of MS sites")
    sim.add_argument("--epsilon", type=float)
    sim.add_argument("--polarization", type=float)
    sim.add_argument("--backend", choices=circuits.BACKENDS)
    sim.add_argument("--measurement",
                     choices=("sector_pvm", "threshold_pvm", "two_outcome"))
    sim.add_argument("--theta", type=_float_list,
                     help="two_outcome angle table, comma-separated (n+1 entries)")
    sim.add_argument("--g", type=float, help="probe coupling strength")
    sim.add_argument("--t-m", dest="t_m", type=float, help="probe interaction time")
    sim.add_argument("--v-odd", dest="v_odd",
                     choices=(circuits.TAG_IDENTITY, circuits.TAG_FLIP))
    sim.add_argument("--v-even", dest="v_even",
                     choices=(circuits.TAG_IDENTITY, circuits.TAG_FLIP))
    sim.add_argument("--post-select", dest="post_select", type=int,
                     help="outcome id to highlight in diagnostics")
    sim.add_argument("--disentangle", action="store_const", const=True, default=None,
                     help="apply the reversing gate to each post-measurement branch")
    sim.set_defaults(func=cmd_simulate)

    bnd = sub.add_parser("bound", parents=[common],
                         help="sweep the average-fidelity ceiling over a grid")
    bnd.add_argument("--config", help="flat key=value sweep file")
    bnd.add_argument("--n", type=_int_grid, help="N grid: '4', '2,4,8', or '1:100'")
    bnd.add_argument("--epsilon", type=_float_list, help="comma-separated epsilons")
    bnd.add_argument("--polarization", type=_float_list,
                     help="comma-separated polarizations (1 - epsilon)")
    bnd.set_defaults(func=cmd_bound)

    ver = sub.add_parser("verify", parents=[common],
                         help="run a diagnostic suite and report residuals")
    ver.add_argument("suite", choices=verify.SUITES + ("all",))
    ver.set_defaults(func=cmd_verify)

    plt = sub.add_parser("plot", parents=[common],
                         help="render a bound CSV as an SVG chart")
    plt.add_argument("input", help="CSV file produced by the bound subcommand")
    plt.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RepresentationError, LayoutError) as exc:
        print(f"representation error: {exc}", file=sys.stderr)
        return EXIT_REPRESENTATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    main()
