"""Command-line harness: parameter sweeps to CSV, the m_bar optimiser, SVG
charts and the two self-check suites.

Run as ``python3 -m clusterd2d <subcommand>``.  Configuration comes from a YAML
file (``--config``) with flags overriding file values; nothing is read from
the environment.  At this boundary lambda_c is in clusters/km^2, sigma in
metres and beta either linear (``beta``) or in dB (``beta_db``).

Exit codes: 0 success, 1 usage error, 2 numerical failure in at least one row.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .geometry import KM2, ContentStrategy, KClosest, NetworkParams, Uniform, check_strategy
from .mathkernel import IntegrationError
from .metrics import ase, optimize_mbar
from .montecarlo import SimulationConfig, distance_ks_suite, simulate_coverage

SCHEMA_VERSION = 1
CSV_HEADER = ["schema_version", "sweep_axis", "sweep_value", "method", "coverage", "ase",
              "ci_half_width", "wall_time_ms"]
OPTIMIZE_HEADER = ["schema_version", "sweep_axis", "sweep_value", "strategy", "method", "m_bar",
                   "coverage", "ase", "is_optimum"]
AXES = ("m_bar", "beta", "k", "sigma", "lambda_c")
METHODS = ("exact", "approx", "closed-form", "monte-carlo")
KS_LIMIT = 0.02

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

# Reference configuration.  alpha = 4 and N = 80 are fixed choices.
PRESET = {
    "params": {"sigma": 10.0, "lambda_c": 150.0, "beta_db": 0.0, "alpha": 4.0,
               "N": 80, "M": 40, "m_bar": 5.0},
    "strategy": "uniform",
    "sweep": {"axis": "m_bar", "values": [1, 2, 4, 6, 8, 10]},
    "methods": ["exact", "approx", "closed-form"],
    "sim": {"trials": 20000, "seed": 0, "region_half_side": None},
    "output": "sweep.csv",
}


class UsageError(ValueError):
    pass


def parse_strategy(text) -> ContentStrategy:
    """``uniform`` or ``k<n>`` (e.g. ``k1``)."""
    t = str(text).strip().lower()
    if t == "uniform":
        return Uniform()
    if t.startswith("k") and t[1:].isdigit():
        return KClosest(int(t[1:]))
    raise UsageError(f"unknown strategy {text!r}; use 'uniform' or 'k<n>'")


@dataclass(frozen=True)
class ExperimentSpec:
    params: NetworkParams
    strategy: ContentStrategy
    sweep_axis: str
    sweep_values: tuple
    methods: tuple
    sim: SimulationConfig | None = None
    output_path: str = "sweep.csv"

    def __post_init__(self):
        if self.sweep_axis not in AXES:
            raise UsageError(f"sweep axis must be one of {AXES}, got {self.sweep_axis!r}")
        vals = tuple(self.sweep_values)
        if not vals:
            raise UsageError("sweep_values is empty")
        if list(vals) != sorted(vals):
            raise UsageError("sweep_values must be sorted")
        object.__setattr__(self, "sweep_values", vals)
        if not self.methods:
            raise UsageError("no methods given")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise UsageError(f"unknown methods {bad}; choose from {METHODS}")
        object.__setattr__(self, "methods", tuple(self.methods))
        if "monte-carlo" in self.methods and self.sim is None:
            raise UsageError("method monte-carlo needs a 'sim' section")
        if self.sweep_axis == "k" and not isinstance(self.strategy, KClosest):
            raise UsageError("a k sweep needs a k-closest strategy")
        if "closed-form" in self.methods and not isinstance(self.strategy, Uniform):
            raise UsageError("closed-form coverage exists for uniform content only")
        for v in vals:
            try:
                p, s = self.point(v)
                check_strategy(p, s)
            except UsageError:
                raise
            except ValueError as e:
                raise UsageError(f"{self.sweep_axis}={v}: {e}") from None

    def point(self, value):
        """``(params, strategy)`` at one sweep value."""
        if self.sweep_axis == "k":
            return self.params, KClosest(int(value))
        if self.sweep_axis == "lambda_c":
            return self.params.replace(lambda_c=float(value) / KM2), self.strategy
        return self.params.replace(**{self.sweep_axis: float(value)}), self.strategy

    # --- YAML ---------------------------------------------------------------

    def to_dict(self) -> dict:
        p = self.params
        d = {
            "params": {"sigma": p.sigma, "lambda_c": p.lambda_c_km2, "beta": p.beta,
                       "alpha": p.alpha, "N": p.N, "M": p.M, "m_bar": p.m_bar},
            "strategy": self.strategy.label(),
            "sweep": {"axis": self.sweep_axis, "values": list(self.sweep_values)},
            "methods": list(self.methods),
            "output": str(self.output_path),
        }
        if self.sim is not None:
            d["sim"] = {"trials": self.sim.trials, "seed": self.sim.seed,
                        "region_half_side": self.sim.region_half_side,
                        "confidence_level": self.sim.confidence_level,
                        "workers": self.sim.workers}
        return d

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        if not isinstance(d, dict):
            raise UsageError("config must be a mapping")
        unknown = set(d) - {"params", "strategy", "sweep", "methods", "sim", "output"}
        if unknown:
            raise UsageError(f"unknown config keys {sorted(unknown)}")
        pd = dict(d.get("params") or {})
        if "beta_db" in pd:
            if "beta" in pd:
                raise UsageError("give beta or beta_db, not both")
            pd["beta"] = 10.0 ** (float(pd.pop("beta_db")) / 10.0)
        allowed = {"sigma", "lambda_c", "beta", "alpha", "N", "M", "m_bar"}
        if set(pd) - allowed:
            raise UsageError(f"unknown params {sorted(set(pd) - allowed)}")
        if "sigma" not in pd or "lambda_c" not in pd:
            raise UsageError("params need sigma and lambda_c")
        kw = {k: v for k, v in pd.items() if v is not None}
        kw["lambda_c"] = float(kw["lambda_c"]) / KM2
        if "N" in kw:
            kw["N"] = int(kw["N"])
        if "M" in kw:
            kw["M"] = int(kw["M"])
        try:
            params = NetworkParams(**kw)
        except (TypeError, ValueError) as e:
            raise UsageError(str(e)) from None
        sweep = d.get("sweep") or {}
        sim = None
        if d.get("sim") is not None:
            try:
                sim = SimulationConfig(**{k: v for k, v in d["sim"].items()})
            except (TypeError, ValueError) as e:
                raise UsageError(f"sim: {e}") from None
        strategy = parse_strategy(d.get("strategy", "uniform"))
        if sim is not None:
            sim = _with_strategy(sim, strategy)
        return cls(params, strategy, sweep.get("axis", "m_bar"), tuple(sweep.get("values") or ()),
                   tuple(d.get("methods") or ()), sim, d.get("output", "sweep.csv"))

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentSpec":
        try:
            return cls.from_dict(yaml.safe_load(text))
        except yaml.YAMLError as e:
            raise UsageError(f"bad YAML: {e}") from None


def _with_strategy(sim: SimulationConfig, strategy) -> SimulationConfig:
    return SimulationConfig(sim.region_half_side, sim.trials, sim.seed, strategy,
                            sim.confidence_level, sim.workers)


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def _analytic_method(method: str, strategy) -> str:
    if method == "approx" and isinstance(strategy, KClosest):
        return "approx-1"
    return method


def _evaluate(spec: ExperimentSpec, value, method):
    params, strategy = spec.point(value)
    t0 = time.perf_counter()
    try:
        if method == "monte-carlo":
            est = simulate_coverage(params, _with_strategy(spec.sim, strategy))
            cov, ci = est.p_hat, est.ci_half_width
            a = params.m_bar * params.lambda_c * math.log2(1.0 + params.beta) * cov
        else:
            res = ase(params, strategy, _analytic_method(method, strategy))
            cov, ci, a = res.coverage.value, None, res.value
        err = None
    except (IntegrationError, FloatingPointError, ArithmeticError) as e:
        cov = ci = a = None
        err = type(e).__name__
    ms = (time.perf_counter() - t0) * 1e3
    return {"schema_version": SCHEMA_VERSION, "sweep_axis": spec.sweep_axis, "sweep_value": value,
            "method": method, "coverage": cov, "ase": a, "ci_half_width": ci,
            "wall_time_ms": ms, "error": err}


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def run_sweep(spec: ExperimentSpec, workers: int = 1):
    """Evaluate every (sweep value, method) pair and write the CSV.

    Rows come out in sweep order whatever order they finish in.  A numerical
    failure leaves the row in place with ``error:<kind>`` in the coverage and
    ASE cells.  Returns the list of row dicts.
    """
    jobs = [(v, m) for v in spec.sweep_values for m in spec.methods]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(lambda j: _evaluate(spec, *j), jobs))
    else:
        rows = [_evaluate(spec, *j) for j in jobs]
    write_csv(rows, spec.output_path)
    return rows


def write_csv(rows, path):
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in rows:
            cells = [_fmt(r[c]) for c in CSV_HEADER]
            if r.get("error"):
                cells[4] = cells[5] = f"error:{r['error']}"
            w.writerow(cells)


def read_csv(path):
    """Parse a sweep CSV back into row dicts.  Errors name the offending row."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty CSV") from None
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = []
        for lineno, cells in enumerate(reader, start=2):
            if len(cells) != len(CSV_HEADER):
                raise ValueError(f"{path} row {lineno}: expected {len(CSV_HEADER)} cells, got {len(cells)}")
            try:
                r = dict(zip(CSV_HEADER, cells))
                r["schema_version"] = int(r["schema_version"])
                if r["schema_version"] != SCHEMA_VERSION:
                    raise ValueError(f"schema version {r['schema_version']}")
                r["sweep_value"] = float(r["sweep_value"])
                r["error"] = None
                if r["coverage"].startswith("error:"):
                    r["error"] = r["coverage"][6:]
                    r["coverage"] = r["ase"] = None
                else:
                    r["coverage"] = float(r["coverage"])
                    r["ase"] = float(r["ase"])
                r["ci_half_width"] = float(r["ci_half_width"]) if r["ci_half_width"] else None
                r["wall_time_ms"] = float(r["wall_time_ms"])
            except ValueError as e:
                raise ValueError(f"{path} row {lineno}: {e}") from None
            rows.append(r)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return rows


# ---------------------------------------------------------------------------
# optimize
# ---------------------------------------------------------------------------

def run_optimize(spec: ExperimentSpec, strategies=None, out_path=None):
    """Run the m_bar optimiser at every sweep value for each strategy.

    The sweep axis may not be ``m_bar`` (that is the optimised variable).
    Uses the first analytic method listed in ``spec.methods``.  Returns ``(report text,
    results)`` where ``results`` maps ``(strategy label, value)`` to
    ``(m_star, best AseResult, curve)``; the full curves go to ``out_path``.
    """
    if spec.sweep_axis == "m_bar":
        raise UsageError("optimize sweeps a parameter other than m_bar")
    analytic = [m for m in spec.methods if m != "monte-carlo"]
    if not analytic:
        raise UsageError("optimize needs an analytic method")
    method = analytic[0]
    strategies = list(strategies) if strategies else [spec.strategy]
    if method == "closed-form" and any(not isinstance(s, Uniform) for s in strategies):
        raise UsageError("closed-form coverage exists for uniform content only")
    for st in strategies:
        for v in spec.sweep_values:
            try:
                check_strategy(spec.point(v)[0], st)
            except ValueError as e:
                raise UsageError(str(e)) from None
    lines = [f"ASE-optimal m_bar ({method}), sweeping {spec.sweep_axis}"]
    results = {}
    rows = []
    for strategy in strategies:
        for v in spec.sweep_values:
            params, st = spec.point(v)
            if spec.sweep_axis != "k":
                st = strategy
            m_star, best, curve = optimize_mbar(params, st, _analytic_method(method, st))
            results[(st.label(), v)] = (m_star, best, curve)
            lines.append(f"  {st.label():>8}  {spec.sweep_axis}={v:<8g} m_bar*={m_star:<3d} "
                         f"ASE*={best.value:.6e} P_c={best.coverage.value:.4f}")
            for m, res in enumerate(curve, start=1):
                rows.append([SCHEMA_VERSION, spec.sweep_axis, v, st.label(), method, m,
                             repr(res.coverage.value), repr(res.value), int(m == m_star)])
    if out_path is not None:
        with open(out_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(OPTIMIZE_HEADER)
            w.writerows(rows)
    return "\n".join(lines), results


# ---------------------------------------------------------------------------
# chart
# ---------------------------------------------------------------------------

def render_chart(csv_path, out_path, metric: str = "coverage", title: str | None = None):
    """Line chart of ``metric`` against the sweep value, one series per method.

    Monte Carlo series get error bars from ``ci_half_width`` (scaled to ASE
    when plotting ASE).  Returns the number of series drawn.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if metric not in ("coverage", "ase"):
        raise UsageError("metric must be coverage or ase")
    rows = read_csv(csv_path)
    axis = rows[0]["sweep_axis"]
    series = {}
    for r in rows:
        if r["error"] is None:
            series.setdefault(r["method"], []).append(r)
    fig, ax = plt.subplots(figsize=(6, 4))
    for method, rs in series.items():
        x = np.array([r["sweep_value"] for r in rs])
        y = np.array([r[metric] for r in rs])
        ci = [r["ci_half_width"] for r in rs]
        if any(c is not None for c in ci):
            e = np.array([c or 0.0 for c in ci])
            if metric == "ase":
                cov = np.array([r["coverage"] for r in rs])
                e = np.where(cov > 0, e * y / np.where(cov > 0, cov, 1.0), 0.0)
            ax.errorbar(x, y, yerr=e, fmt="o", capsize=3, label=method)
        else:
            ax.plot(x, y, "-", marker=".", label=method)
    ax.set_xlabel(axis)
    ax.set_ylabel("coverage probability" if metric == "coverage" else "ASE (bit/s/Hz/m^2)")
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)
    return len(series)


# ---------------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------------

def selftest(params: NetworkParams):
    """Normalisation and bound-ordering checks; returns ``(name, ok, detail)`` rows."""
    from .geometry import (cluster_center_distance_pdf, intra_member_pdf, marginal_serving_pdf,
                           serving_pdf)
    from .interference import (inter_limit, inter_lower_bound, intra_lower_bound,
                               intra_uniform_limit, truncated_poisson_pmf)
    from .mathkernel import integrate

    sig = params.sigma
    out = []
    dens = {
        "rayleigh": cluster_center_distance_pdf(params),
        "rician nu0=sigma": intra_member_pdf(params, sig),
        "serving k1": serving_pdf(params, KClosest(1), sig),
        "serving kM": serving_pdf(params, KClosest(params.M), sig),
        "marginal k1": marginal_serving_pdf(params, KClosest(1)),
    }
    for name, d in dens.items():
        mass = integrate(d.pdf, 0.0, 30.0 * sig)
        out.append((f"pdf mass {name}", abs(mass - 1.0) < 1e-6, f"{mass:.10f}"))
    pm = truncated_poisson_pmf(params.m_bar, params.M)
    out.append(("truncated Poisson mass", abs(pm.sum() - 1.0) < 1e-12, f"{pm.sum():.15f}"))
    s = np.logspace(-2, 8, 30)
    lb = np.asarray(intra_lower_bound(params, s))
    ex = np.asarray(intra_uniform_limit(params, s, sig))
    # the bound holds for the transform averaged over nu0
    avg = integrate(lambda n: np.asarray(intra_uniform_limit(params, s, n[:, None]))
                    * dens["rayleigh"].pdf(n)[:, None], 0.0, 8.0 * sig)
    out.append(("intra lower bound", bool(np.all(lb <= avg + 1e-12)), f"max excess {np.max(lb - avg):.2e}"))
    li, lil = np.asarray(inter_limit(params, s)), np.asarray(inter_lower_bound(params, s))
    out.append(("inter lower bound", bool(np.all(lil <= li + 1e-12)), f"max excess {np.max(lil - li):.2e}"))
    out.append(("transform monotone", bool(np.all(np.diff(ex) <= 1e-12) and np.all(np.diff(li) <= 1e-12)), ""))
    return out


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _values(text):
    """``1,2,4`` or ``1:10`` (inclusive integer range) or ``0.5:2:0.5``."""
    text = text.strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) == 2:
            lo, hi, step = parts[0], parts[1], 1.0
        elif len(parts) == 3:
            lo, hi, step = parts
        else:
            raise argparse.ArgumentTypeError(f"bad range {text!r}")
        if step <= 0:
            raise argparse.ArgumentTypeError("range step must be > 0")
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return [lo + i * step for i in range(n)]
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser():
    p = _Parser(prog="python3 -m clusterd2d", description="Clustered D2D coverage and ASE.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out_default):
        sp.add_argument("--config", help="YAML experiment file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--trials", type=int)
        sp.add_argument("--out", default=None, help=f"output path (default {out_default})")
        sp.add_argument("--method", help="comma list from " + ",".join(METHODS))
        sp.add_argument("--strategy", help="uniform or k<n>")
        sp.add_argument("--axis", choices=AXES)
        sp.add_argument("--values", type=_values, help="e.g. 1,2,4 or 1:10")
        sp.add_argument("--workers", type=int, default=1)
        for name in ("sigma", "lambda-c", "beta", "beta-db", "alpha", "m-bar"):
            sp.add_argument(f"--{name}", type=float)
        sp.add_argument("--N", type=int)
        sp.add_argument("--M", type=int)

    common(sub.add_parser("sweep", help="coverage/ASE over one parameter axis"), "sweep.csv")
    sp = sub.add_parser("optimize", help="ASE-optimal m_bar per sweep value")
    common(sp, "optimize.csv")
    sp.add_argument("--compare", help="extra strategies, comma list, e.g. k1")
    sp = sub.add_parser("chart", help="SVG line chart from a sweep CSV")
    sp.add_argument("csv")
    sp.add_argument("--out", default=None)
    sp.add_argument("--metric", choices=("coverage", "ase"), default="coverage")
    sp.add_argument("--title")
    sp = sub.add_parser("validate", help="distance-distribution KS suite")
    common(sp, "-")
    sp.add_argument("--samples", type=int, default=100_000, help="samples per bin")
    sp.add_argument("--k", type=int, default=5)
    sp = sub.add_parser("selftest", help="normalisation and bound-ordering checks")
    common(sp, "-")
    return p


def spec_from_args(args, out_default) -> ExperimentSpec:
    if args.config:
        try:
            raw = yaml.safe_load(Path(args.config).read_text())
        except OSError as e:
            raise UsageError(f"cannot read config: {e}") from None
        except yaml.YAMLError as e:
            raise UsageError(f"bad YAML: {e}") from None
    else:
        raw = yaml.safe_load(yaml.safe_dump(PRESET))
    raw = dict(raw or {})
    prm = dict(raw.get("params") or {})
    for flag, key in (("sigma", "sigma"), ("lambda_c", "lambda_c"), ("alpha", "alpha"),
                      ("m_bar", "m_bar"), ("N", "N"), ("M", "M")):
        v = getattr(args, flag)
        if v is not None:
            prm[key] = v
    if args.beta is not None and args.beta_db is not None:
        raise UsageError("give --beta or --beta-db, not both")
    if args.beta is not None:
        prm.pop("beta_db", None)
        prm["beta"] = args.beta
    if args.beta_db is not None:
        prm.pop("beta", None)
        prm["beta_db"] = args.beta_db
    if args.M is not None and args.N is None and "N" not in (raw.get("params") or {}):
        prm.setdefault("N", 2 * args.M)
    raw["params"] = prm
    if args.strategy:
        raw["strategy"] = args.strategy
    sweep = dict(raw.get("sweep") or {})
    if args.axis:
        sweep["axis"] = args.axis
    if args.values is not None:
        sweep["values"] = args.values
    raw["sweep"] = sweep
    if args.method:
        raw["methods"] = [m.strip() for m in args.method.split(",") if m.strip()]
    sim = dict(raw.get("sim") or {})
    if args.seed is not None:
        sim["seed"] = args.seed
    if args.trials is not None:
        sim["trials"] = args.trials
    if sim:
        raw["sim"] = sim
    raw["output"] = args.out or raw.get("output") or out_default
    return ExperimentSpec.from_dict(raw)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _dispatch(args)
    except (UsageError, ValueError) as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE


def _dispatch(args) -> int:
    if args.command == "chart":
        out = args.out or str(Path(args.csv).with_suffix(".svg"))
        try:
            n = render_chart(args.csv, out, args.metric, args.title)
        except (OSError, ValueError) as e:
            if isinstance(e, UsageError):
                raise
            print(f"error: {e}", file=sys.stderr)
            return EXIT_USAGE
        print(f"wrote {out} ({n} series)")
        return EXIT_OK

    if args.command == "sweep":
        spec = spec_from_args(args, "sweep.csv")
        rows = run_sweep(spec, workers=args.workers)
        failed = [r for r in rows if r["error"]]
        for r in rows:
            cov = "error:" + r["error"] if r["error"] else f"{r['coverage']:.5f}"
            ci = "" if r["ci_half_width"] is None else f" +-{r['ci_half_width']:.5f}"
            print(f"{spec.sweep_axis}={r['sweep_value']:<8g} {r['method']:<12} P_c={cov}{ci}")
        print(f"wrote {spec.output_path}")
        return EXIT_NUMERIC if failed else EXIT_OK

    if args.command == "optimize":
        spec = spec_from_args(args, "optimize.csv")
        out = args.out or "optimize.csv"
        axis, values = spec.sweep_axis, spec.sweep_values
        if axis == "m_bar":
            # the default preset sweeps m_bar; optimise at the preset sigma instead
            axis, values = "sigma", (spec.params.sigma,)
        spec = ExperimentSpec(spec.params, spec.strategy, axis, values, spec.methods, spec.sim, out)
        extra = [parse_strategy(s) for s in (args.compare or "").split(",") if s.strip()]
        try:
            report, _ = run_optimize(spec, [spec.strategy] + extra, spec.output_path)
        except (IntegrationError, ArithmeticError) as e:
            print(f"numerical failure: {e}", file=sys.stderr)
            return EXIT_NUMERIC
        print(report)
        print(f"wrote {spec.output_path}")
        return EXIT_OK

    if args.command == "validate":
        spec = spec_from_args(args, "-")
        sim = spec.sim or SimulationConfig()
        rows = distance_ks_suite(spec.params, sim, k=args.k, samples_per_bin=args.samples)
        ok = True
        for which, label, b, n, ks in rows:
            passed = n > 0 and ks < KS_LIMIT
            ok &= passed
            print(f"{'PASS' if passed else 'FAIL'}  {which:<9} {label:<8} bin=[{b[0]:g}, {b[1]:g}) "
                  f"n={n:<7d} KS={ks:.4f}")
        return EXIT_OK if ok else EXIT_NUMERIC

    if args.command == "selftest":
        spec = spec_from_args(args, "-")
        rows = selftest(spec.params)
        for name, ok, detail in rows:
            print(f"{'PASS' if ok else 'FAIL'}  {name:<28} {detail}")
        return EXIT_OK if all(ok for _, ok, _ in rows) else EXIT_NUMERIC

    raise UsageError(f"unknown command {args.command}")
