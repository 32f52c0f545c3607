"""Config-driven pipeline runner: synthesize, verify, probe.

Exit codes: 0 success, 1 failed checks, 2 inadmissible order,
3 configuration or I/O failure, 4 grid too short.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .convex_reg import (
    CONTACT_TOL,
    GridTooShort,
    PiecewiseLinearConvex,
    convex_minorant,
    extend_left,
    growth_curve,
)
from .order_model import (
    Admissibility,
    InadmissibleOrder,
    OrderError,
    OrderFamilySpec,
    ProximateOrder,
    build_order,
    is_admissible,
    normalize_symmetric,
    precondition,
    read_table_csv,
)
from .product_eval import (
    INTEGRAL_TOL,
    REPORT_COLUMNS,
    TAIL_TOL,
    GrowthReport,
    ZerosTooShort,
    growth_report,
)
from .verify import (
    TrendCheck,
    check_gamma_order,
    check_main_theorem,
    check_theorem_a,
    check_theorem_c,
    order_from_counting,
    verdicts_document,
)
from .zero_synth import (
    CountingFunction,
    IntegratedCounting,
    ZeroSequence,
    counting_function,
    extract_zeros,
    integrated_counting,
)

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_INADMISSIBLE = 2
EXIT_IO = 3
EXIT_GRID = 4

MIN_X_MAX = 50.0
MINORANT_FILE = "minorant.csv"
ZEROS_FILE = "zeros.csv"
REPORT_STEM = "growth_report"
VERDICTS_FILE = "verdicts.json"

DEFAULT_TOLERANCES = {
    "contact_tol": CONTACT_TOL,
    "integral_tol": INTEGRAL_TOL,
    "tail_tol": TAIL_TOL,
    "admissible_ratio": 0.05,
    "theorem_a": 0.02,
    "theorem_c": 0.05,
    "gamma_order": 0.1,
    "main_ln_r_over_V": 0.05,
    "main_ratio_low": 0.95,
    "main_ratio_high": 1.15,
}


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


def _reject_unknown(section: str, given: dict, allowed: set[str]) -> None:
    if not isinstance(given, dict):
        raise ConfigError(f"{section}: expected an object")
    extra = set(given) - allowed
    if extra:
        raise ConfigError(f"{section}: unknown fields {sorted(extra)}")


@dataclass(frozen=True)
class RunConfig:
    order: OrderFamilySpec
    x_max: float = 600.0
    x_step: float = 1e-2
    pad: float | None = None
    probes: tuple[float, ...] = ()
    max_n: int = 10000
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    out_dir: Path = Path("out")
    formats: tuple[str, ...] = ("csv", "json")

    @property
    def grid_end(self) -> float:
        """Hull grid end; the pad keeps zeros available past the last probe."""
        pad = max(60.0, self.x_max / 2.0) if self.pad is None else self.pad
        return self.x_max + pad

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path = Path(".")) -> "RunConfig":
        _reject_unknown("config", raw, {"order", "grid", "probes", "zeros", "tolerances", "outputs"})
        if "order" not in raw:
            raise ConfigError("config: 'order' is required")
        o = raw["order"]
        _reject_unknown("order", o, {"kind", "params", "table"})
        table: tuple = ()
        if "table" in o:
            t = o["table"]
            if isinstance(t, str):
                path = Path(t) if Path(t).is_absolute() else base_dir / t
                table = read_table_csv(path)
            else:
                table = tuple((float(r), float(v)) for r, v in t)
        spec = OrderFamilySpec(str(o.get("kind", "")), dict(o.get("params", {})), table)
        try:
            spec.validate()
        except OrderError as exc:
            raise ConfigError(str(exc)) from None

        g = raw.get("grid", {})
        _reject_unknown("grid", g, {"x_max", "x_step", "pad"})
        x_max = float(g.get("x_max", 600.0))
        x_step = float(g.get("x_step", 1e-2))
        pad = g.get("pad")
        pad = None if pad is None else float(pad)
        if not x_step > 0.0:
            raise ConfigError("grid.x_step must be positive")
        if pad is not None and not pad >= 0.0:
            raise ConfigError("grid.pad must be non-negative")

        if "probes" in raw:
            probes = tuple(float(p) for p in raw["probes"])
        else:
            probes = (x_max / 8.0, x_max / 4.0, x_max / 2.0, x_max)
        if not probes:
            raise ConfigError("probes must be non-empty")
        if any(not 0.0 < p <= x_max for p in probes) or list(probes) != sorted(set(probes)):
            raise ConfigError("probes must be strictly increasing and lie in (0, x_max]")

        z = raw.get("zeros", {})
        _reject_unknown("zeros", z, {"max_n"})
        max_n = z.get("max_n", 10000)
        if not isinstance(max_n, int) or isinstance(max_n, bool) or max_n < 1:
            raise ConfigError("zeros.max_n must be an integer >= 1")

        tol_raw = raw.get("tolerances", {})
        _reject_unknown("tolerances", tol_raw, set(DEFAULT_TOLERANCES))
        tolerances = dict(DEFAULT_TOLERANCES)
        tolerances.update({k: float(v) for k, v in tol_raw.items()})

        out = raw.get("outputs", {})
        _reject_unknown("outputs", out, {"directory", "formats"})
        out_dir = Path(out.get("directory", "out"))
        if not out_dir.is_absolute():
            out_dir = base_dir / out_dir
        formats = tuple(out.get("formats", ["csv", "json"]))
        if not formats or set(formats) - {"csv", "json"}:
            raise ConfigError("outputs.formats must be a non-empty subset of {csv, json}")

        return cls(spec, x_max, x_step, pad, probes, max_n, tolerances, out_dir, formats)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return RunConfig.from_dict(raw, path.parent)


@dataclass
class PipelineResult:
    config: RunConfig
    order: ProximateOrder
    admissibility: Admissibility
    minorant: PiecewiseLinearConvex
    counting: CountingFunction
    zeros: ZeroSequence
    integrated: IntegratedCounting
    report: GrowthReport


def _admitted_order(cfg: RunConfig) -> tuple[ProximateOrder, Admissibility]:
    if cfg.x_max < MIN_X_MAX:
        raise GridTooShort(f"x_max={cfg.x_max} is below the minimum {MIN_X_MAX}")
    base = build_order(cfg.order)
    adm = is_admissible(base, cfg.x_max, cfg.tolerances["admissible_ratio"])
    if not adm.admissible:
        raise InadmissibleOrder(f"{base.family_tag} is not admissible", adm)
    return normalize_symmetric(precondition(base, cfg.x_max)), adm


def _finish(cfg, order, adm, minorant) -> PipelineResult:
    counting = counting_function(minorant)
    zeros = extract_zeros(counting, min(cfg.max_n, counting.max_count))
    integrated = integrated_counting(counting)
    report = growth_report(
        order, minorant, zeros, cfg.probes,
        cfg.tolerances["integral_tol"], cfg.tolerances["tail_tol"], integrated,
    )
    gap = np.array([p["phi"] - p["phi1"] for p in report.probes])
    scale = np.maximum(1.0, report.column("phi"))
    report.meta["contact_probes"] = (gap <= cfg.tolerances["contact_tol"] * scale).tolist()
    report.meta["zeros"] = zeros.count
    report.meta["family"] = order.family_tag
    return PipelineResult(cfg, order, adm, minorant, counting, zeros, integrated, report)


def run_pipeline(cfg: RunConfig) -> PipelineResult:
    order, adm = _admitted_order(cfg)
    curve = growth_curve(order, cfg.grid_end, cfg.x_step)
    minorant = extend_left(convex_minorant(curve))
    return _finish(cfg, order, adm, minorant)


def pipeline_from_artifacts(cfg: RunConfig) -> PipelineResult:
    """Rebuild the pipeline from minorant.csv in the output directory."""
    order, adm = _admitted_order(cfg)
    minorant = extend_left(read_minorant_csv(cfg.out_dir / MINORANT_FILE))
    return _finish(cfg, order, adm, minorant)


def run_checks(result: PipelineResult) -> list[TrendCheck]:
    cfg, order, tol = result.config, result.order, result.config.tolerances
    probes = cfg.probes
    adm = result.admissibility
    checks = [
        TrendCheck(
            "admissibility", adm.xs.tolist(), adm.ratios.tolist(), adm.admissible,
            tol["admissible_ratio"],
        ),
        check_theorem_a(order, None, probes, tol["theorem_a"]),
        check_gamma_order(order, probes, tol["gamma_order"]),
        check_theorem_c(order, "lindelof", probes, tol["theorem_c"]),
        check_theorem_c(order, "cauchy", probes, tol["theorem_c"]),
        check_theorem_c(
            order_from_counting(result.integrated), "lindelof", probes, tol["theorem_c"],
            name="theorem_c_counting",
        ),
        check_main_theorem(
            result.report, tol["main_ln_r_over_V"],
            (tol["main_ratio_low"], tol["main_ratio_high"]),
        ),
    ]
    spread = [
        (max(p["lnM_sum"], p["lnM_int_n"], p["lnM_int_N"])
         - min(p["lnM_sum"], p["lnM_int_n"], p["lnM_int_N"])) / abs(p["lnM_sum"])
        for p in result.report.probes
    ]
    checks.append(TrendCheck(
        "lnM_triple_agreement", list(probes), spread,
        bool(max(spread) <= tol["integral_tol"]), tol["integral_tol"],
    ))
    return checks


# ---- serialization --------------------------------------------------------

def fmt(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _write_json(path: Path, doc: Any) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8", newline="\n")


def read_minorant_csv(path: Path) -> PiecewiseLinearConvex:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["x", "phi1", "slope"]:
            raise OrderError(f"{path}: expected header 'x,phi1,slope'")
        rows = [(float(a), float(b)) for a, b, _ in reader]
    xs, ys = (np.array(c) for c in zip(*rows))
    return PiecewiseLinearConvex(xs, ys)


def report_document(report: GrowthReport) -> dict:
    return {
        "columns": list(REPORT_COLUMNS),
        "probes": report.probes,
        "sigma_estimate": report.sigma_estimate,
        "trend_verdicts": report.trend_verdicts,
        "meta": report.meta,
    }


def write_artifacts(result: PipelineResult) -> None:
    out = result.config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    base = PiecewiseLinearConvex(result.minorant.breakpoints, result.minorant.values)
    _write_csv(out / MINORANT_FILE, ("x", "phi1", "slope"), base.to_rows())
    _write_csv(
        out / ZEROS_FILE, ("n", "ln_a_n"),
        zip(range(1, result.zeros.count + 1), result.zeros.log_zeros.tolist()),
    )
    rep = result.report
    if "csv" in result.config.formats:
        _write_csv(
            out / f"{REPORT_STEM}.csv", REPORT_COLUMNS,
            ([p[c] for c in REPORT_COLUMNS] for p in rep.probes),
        )
    if "json" in result.config.formats:
        _write_json(out / f"{REPORT_STEM}.json", report_document(rep))


# ---- commands -------------------------------------------------------------

def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _guarded(fn):
    """Map pipeline exceptions onto exit codes."""

    def wrapper(*args, **kwargs) -> int:
        try:
            return fn(*args, **kwargs)
        except InadmissibleOrder as exc:
            adm = exc.verdict
            _err(f"inadmissible order: {exc}")
            _err("ln r / V(r) trace (must tend to 0):")
            for x, r in zip(adm.xs, adm.ratios):
                _err(f"  x={fmt(x)} ratio={fmt(r)}")
            _err(f"final ratio {adm.final_ratio:.4g} does not fall below {adm.threshold:g}")
            return EXIT_INADMISSIBLE
        except (GridTooShort, ZerosTooShort) as exc:
            _err(f"grid too short: {exc}")
            return EXIT_GRID
        except (ConfigError, OrderError, OSError) as exc:
            _err(f"error: {exc}")
            return EXIT_IO

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_guarded
def cmd_synthesize(cfg: RunConfig) -> int:
    """Run the pipeline and write minorant, zeros and growth report artifacts."""
    write_artifacts(run_pipeline(cfg))
    return EXIT_OK


@_guarded
def cmd_verify(cfg: RunConfig, from_artifacts: bool = False) -> int:
    """Run every trend check and write verdicts.json."""
    if from_artifacts:
        path = cfg.out_dir / MINORANT_FILE
        if not path.is_file():
            _err(f"missing artifact {path}; run synthesize first")
            return EXIT_IO
        result = pipeline_from_artifacts(cfg)
    else:
        result = run_pipeline(cfg)
    checks = run_checks(result)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(cfg.out_dir / VERDICTS_FILE, verdicts_document(checks))
    failed = sorted(c.name for c in checks if not c.verdict)
    if failed:
        _err("failed checks: " + ", ".join(failed))
        return EXIT_CHECKS_FAILED
    return EXIT_OK


@_guarded
def cmd_probe(cfg: RunConfig, x: float, header: bool = False) -> int:
    """Print one growth-report row for log-radius x."""
    if not math.isfinite(x) or x > cfg.x_max:
        _err(f"x={x} outside the configured range (x <= {cfg.x_max})")
        return EXIT_GRID
    order, adm = _admitted_order(cfg)
    curve = growth_curve(order, cfg.grid_end, cfg.x_step)
    minorant = extend_left(convex_minorant(curve))
    counting = counting_function(minorant)
    zeros = extract_zeros(counting, min(cfg.max_n, counting.max_count))
    rep = growth_report(
        order, minorant, zeros, [x],
        cfg.tolerances["integral_tol"], cfg.tolerances["tail_tol"],
    )
    w = csv.writer(sys.stdout, lineterminator="\n")
    if header:
        w.writerow(REPORT_COLUMNS)
    w.writerow([fmt(rep.probes[0][c]) for c in REPORT_COLUMNS])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zeroorder", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("synthesize", "build minorant, zeros and growth report"),
        ("verify", "run the limit trend checks"),
        ("probe", "print one growth-report row"),
    ):
        s = sub.add_parser(name, help=help_text)
        s.add_argument("--config", required=True, help="JSON run configuration")
        s.add_argument("--out", help="output directory (overrides the config)")
        s.add_argument(
            "--format", choices=("csv", "json"), action="append",
            help="growth report format; repeat for both",
        )
        if name == "verify":
            s.add_argument(
                "--from-artifacts", action="store_true",
                help="reuse minorant.csv from the output directory",
            )
        if name == "probe":
            s.add_argument("--x", type=float, required=True, help="log-radius ln r")
            s.add_argument("--header", action="store_true", help="print the column header")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (ConfigError, OrderError, OSError) as exc:
        _err(f"error: {exc}")
        return EXIT_IO
    overrides = {}
    if args.out:
        overrides["out_dir"] = Path(args.out)
    if args.format:
        overrides["formats"] = tuple(dict.fromkeys(args.format))
    if overrides:
        cfg = RunConfig(**{**cfg.__dict__, **overrides})
    if args.command == "synthesize":
        return cmd_synthesize(cfg)
    if args.command == "verify":
        return cmd_verify(cfg, args.from_artifacts)
    return cmd_probe(cfg, args.x, args.header)


if __name__ == "__main__":
    sys.exit(main())
