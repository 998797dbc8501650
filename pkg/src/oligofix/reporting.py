"""Run configuration, dispatch, and deterministic CSV/JSON emission.

A run is described by a ``RunConfig`` (from a JSON file, CLI flags, or
both; flags override file values and the OLIGOFIX_SEED environment
variable overrides the seed).  ``run`` dispatches to the solvers and
returns a ``ReportEnvelope`` plus a process exit code:

    0  success
    2  iteration diverged, or failed while the contraction was uncertified
    3  configuration error (raised as ConfigError, mapped by the CLI)
    4  numeric failure (raised, mapped by the CLI)
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from .errors import ConfigError
from .large_market import (
    Family,
    FamilyParams,
    LargeMarketRow,
    cournot_quadratic,
    equilibrium_row,
    family_from_code,
    stackelberg_quadratic,
)
from .market import MarketSpec, consumer_surplus, price, profit, total_surplus
from .registry import CUSTOM_BRACKETS, build_affine_system, build_cost, build_demand
from .responses import InnerSolveConfig, ResponseSystem
from .solver import (
    IterationStatus,
    estimate_contraction,
    picard_iterate,
    verify_second_order,
)

SCHEMA_VERSION = "1.0"
DEFAULT_SEED = 7
SEED_ENV_VAR = "OLIGOFIX_SEED"

CSV_COLUMNS = ("n", "family", "Q_total", "price", "x_first", "x_last",
               "profit_total", "residual", "gap_Q", "gap_P", "cs", "ts")

COMMANDS = ("triopoly", "iterate", "contraction", "large-market", "welfare")

SURPLUS_NAMING_WARNING = (
    "surplus naming: the B*Q^2/2 integral is reported as cs; "
    "ts adds producer profits on top of it")


@dataclass
class RunConfig:
    """Validated description of one CLI run."""

    command: str
    A: float | None = None
    B: float | None = None
    c: float | None = None
    demand: str = "linear-demand"
    cost: str = "quadratic-cost"
    model: str = "stackelberg"          # triopoly/welfare: cournot | stackelberg | both
    mode: str = "reduced"               # reduced | general
    method: str = "picard"              # triopoly: picard | direct
    system: str | None = None           # named affine preset
    explicit_matrix: list[list[float]] | None = None
    explicit_offset: list[float] | None = None
    start: list[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])
    tol: float = 1e-8
    max_iter: int = 200_000
    divergence_radius: float = 1e12
    bracket: list[float] | None = None
    box: list[list[float]] | None = None
    samples: int = 100
    seed: int = DEFAULT_SEED
    families: list[str] = field(default_factory=lambda: ["CL", "CQ", "SL", "SQ"])
    n_range: list[int] = field(default_factory=lambda: [1, 10])
    format: str = "json"
    out: str | None = None
    figures_dir: str | None = None

    def as_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class ReportEnvelope:
    """What every command emits: a config echo, a payload, and warnings."""

    schema_version: str
    config: dict[str, Any]
    results: dict[str, Any]
    warnings: list[str]

    def to_dict(self) -> dict[str, Any]:
        return {"schema_version": self.schema_version, "config": self.config,
                "results": self.results, "warnings": self.warnings}

    @staticmethod
    def from_dict(data: dict[str, Any]) -> "ReportEnvelope":
        return ReportEnvelope(schema_version=data["schema_version"], config=data["config"],
                              results=data["results"], warnings=data["warnings"])


def validate_envelope(data: dict[str, Any]) -> None:
    """Structural check of an emitted report; raises ValueError on mismatch."""
    required = {"schema_version": str, "config": dict, "results": dict, "warnings": list}
    for key, kind in required.items():
        if key not in data:
            raise ValueError(f"envelope missing {key!r}")
        if not isinstance(data[key], kind):
            raise ValueError(f"envelope field {key!r} must be {kind.__name__}")
    if data["schema_version"] != SCHEMA_VERSION:
        raise ValueError(f"unknown schema_version {data['schema_version']!r}")


def parse_number(value: Any, fieldname: str) -> float:
    """Numbers may arrive as int, float, decimal string, or exact 'p/q' text."""
    if isinstance(value, bool):
        raise ConfigError(fieldname, f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        result = float(value)
    elif isinstance(value, str):
        try:
            result = float(Fraction(value.strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(fieldname, f"cannot parse number from {value!r}") from exc
    else:
        raise ConfigError(fieldname, f"expected a number, got {type(value).__name__}")
    if not math.isfinite(result):
        raise ConfigError(fieldname, f"value must be finite, got {result}")
    return result


def _parse_number_list(value: Any, fieldname: str, length: int | None = None) -> list[float]:
    if isinstance(value, str):
        value = [part for part in value.replace(" ", "").split(",") if part]
    if not isinstance(value, (list, tuple)):
        raise ConfigError(fieldname, f"expected a list of numbers, got {value!r}")
    parsed = [parse_number(v, f"{fieldname}[{i}]") for i, v in enumerate(value)]
    if length is not None and len(parsed) != length:
        raise ConfigError(fieldname, f"expected {length} numbers, got {len(parsed)}")
    return parsed


def _parse_n_range(value: Any) -> list[int]:
    if isinstance(value, str):
        text = value.strip()
        if ".." in text:
            lo_text, hi_text = text.split("..", 1)
        else:
            lo_text = hi_text = text
        try:
            lo, hi = int(lo_text), int(hi_text)
        except ValueError as exc:
            raise ConfigError("n", f"cannot parse range from {value!r}") from exc
    elif isinstance(value, int):
        lo = hi = value
    elif isinstance(value, (list, tuple)) and len(value) == 2:
        lo, hi = int(value[0]), int(value[1])
    else:
        raise ConfigError("n", f"expected 'lo..hi' or [lo, hi], got {value!r}")
    if lo < 1 or hi < lo:
        raise ConfigError("n", f"need 1 <= lo <= hi, got {lo}..{hi}")
    return [lo, hi]


def _parse_families(value: Any) -> list[str]:
    if isinstance(value, str):
        if value.strip().lower() == "all":
            return ["CL", "CQ", "SL", "SQ"]
        value = [part for part in value.replace(" ", "").split(",") if part]
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError("families", f"expected 'all' or family codes, got {value!r}")
    codes = []
    for item in value:
        try:
            codes.append(family_from_code(str(item)).value)
        except ValueError as exc:
            raise ConfigError("families", str(exc)) from exc
    return codes


def _parse_box(value: Any) -> list[list[float]]:
    if isinstance(value, str):
        nums = _parse_number_list(value, "box")
        if len(nums) == 2:
            value = [[nums[0], nums[1]]] * 3
        elif len(nums) == 6:
            value = [nums[0:2], nums[2:4], nums[4:6]]
        else:
            raise ConfigError("box", "expected 'lo,hi' or six numbers")
    if (not isinstance(value, (list, tuple)) or len(value) != 3
            or any(not isinstance(side, (list, tuple)) or len(side) != 2 for side in value)):
        raise ConfigError("box", f"expected three (lo, hi) pairs, got {value!r}")
    box = [[parse_number(side[0], "box"), parse_number(side[1], "box")] for side in value]
    if any(side[1] <= side[0] for side in box):
        raise ConfigError("box", "every side needs lo < hi")
    return box


def parse_config(path: str | Path | None = None,
                 flags: dict[str, Any] | None = None,
                 env: dict[str, str] | None = None) -> RunConfig:
    """Build a validated RunConfig from a JSON document and/or flag values.

    Flag entries that are ``None`` are ignored; non-None flags override the
    file.  OLIGOFIX_SEED in the environment overrides both.
    """
    env = os.environ if env is None else env
    data: dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                loaded = json.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError("config", f"file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON in {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config", "top-level JSON value must be an object")
        data.update(loaded)
    for key, value in (flags or {}).items():
        if value is not None:
            data[key] = value

    command = data.get("command")
    if command not in COMMANDS:
        raise ConfigError("command", f"expected one of {COMMANDS}, got {command!r}")

    cfg = RunConfig(command=command)
    if "demand" in data:
        cfg.demand = _expect_choice(data["demand"], "demand", ("linear-demand", "arctan-demand"))
    if "cost" in data:
        cfg.cost = _expect_choice(data["cost"], "cost", ("linear-cost", "quadratic-cost", "exp-cost"))
    for name in ("A", "B", "c"):
        if data.get(name) is not None:
            setattr(cfg, name, parse_number(data[name], name))
    if "model" in data:
        cfg.model = _expect_choice(data["model"], "model", ("cournot", "stackelberg", "both"))
    if "mode" in data:
        cfg.mode = _expect_choice(data["mode"], "mode", ("reduced", "general"))
    if "method" in data:
        cfg.method = _expect_choice(data["method"], "method", ("picard", "direct"))
    if data.get("system") is not None:
        cfg.system = _expect_choice(data["system"], "system",
                                    ("stackelberg-affine", "divergent-affine"))
    if data.get("explicit_matrix") is not None:
        rows = data["explicit_matrix"]
        if not isinstance(rows, (list, tuple)) or len(rows) != 3:
            raise ConfigError("explicit_matrix", "expected three rows")
        cfg.explicit_matrix = [_parse_number_list(row, "explicit_matrix", 3) for row in rows]
    if data.get("explicit_offset") is not None:
        cfg.explicit_offset = _parse_number_list(data["explicit_offset"], "explicit_offset", 3)
    if (cfg.explicit_matrix is None) != (cfg.explicit_offset is None):
        raise ConfigError("explicit_matrix", "matrix and offset must be given together")
    if "start" in data:
        cfg.start = _parse_number_list(data["start"], "start", 3)
    if "tol" in data:
        cfg.tol = parse_number(data["tol"], "tol")
        if cfg.tol <= 0:
            raise ConfigError("tol", "must be positive")
    if "max_iter" in data:
        cfg.max_iter = int(data["max_iter"])
        if cfg.max_iter < 1:
            raise ConfigError("max_iter", "must be >= 1")
    if "divergence_radius" in data:
        cfg.divergence_radius = parse_number(data["divergence_radius"], "divergence_radius")
    if data.get("bracket") is not None:
        cfg.bracket = _parse_number_list(data["bracket"], "bracket", 2)
    if data.get("box") is not None:
        cfg.box = _parse_box(data["box"])
    if "samples" in data:
        cfg.samples = int(data["samples"])
        if cfg.samples < 2:
            raise ConfigError("samples", "must be >= 2")
    if "seed" in data:
        cfg.seed = int(data["seed"])
    if "families" in data:
        cfg.families = _parse_families(data["families"])
    if "n" in data:
        cfg.n_range = _parse_n_range(data["n"])
    elif "n_range" in data:
        cfg.n_range = _parse_n_range(data["n_range"])
    if "format" in data:
        cfg.format = _expect_choice(data["format"], "format", ("json", "csv"))
    if data.get("out") is not None:
        cfg.out = str(data["out"])
    if data.get("figures_dir") is not None:
        cfg.figures_dir = str(data["figures_dir"])

    if SEED_ENV_VAR in env:
        try:
            cfg.seed = int(env[SEED_ENV_VAR])
        except ValueError as exc:
            raise ConfigError("seed", f"{SEED_ENV_VAR} must be an integer") from exc

    _validate_required(cfg)
    return cfg


def _expect_choice(value: Any, fieldname: str, choices: Sequence[str]) -> str:
    if value not in choices:
        raise ConfigError(fieldname, f"expected one of {tuple(choices)}, got {value!r}")
    return value


def _needs_market(cfg: RunConfig) -> bool:
    if cfg.command in ("large-market", "welfare"):
        return True
    return cfg.system is None and cfg.explicit_matrix is None


def _validate_required(cfg: RunConfig) -> None:
    if cfg.command in ("large-market", "welfare"):
        for name in ("A", "B", "c"):
            if getattr(cfg, name) is None:
                raise ConfigError(name, f"{cfg.command} requires {name}")
        return
    if not _needs_market(cfg):
        return
    if cfg.demand == "linear-demand":
        if cfg.A is None:
            raise ConfigError("A", "linear-demand requires an intercept")
        if cfg.B is None:
            raise ConfigError("B", "linear-demand requires a slope")
    elif cfg.bracket is None and cfg.demand not in CUSTOM_BRACKETS:
        raise ConfigError("bracket", f"{cfg.demand} needs an explicit bracket")
    if cfg.cost in ("linear-cost", "quadratic-cost") and cfg.c is None:
        raise ConfigError("c", f"{cfg.cost} requires a coefficient")


# -- system construction -----------------------------------------------------


def build_system(cfg: RunConfig, model: str | None = None) -> ResponseSystem:
    """Response system implied by a config (explicit > preset > market)."""
    if cfg.explicit_matrix is not None:
        return ResponseSystem.explicit_linear(cfg.explicit_matrix, cfg.explicit_offset)
    if cfg.system is not None:
        return build_affine_system(cfg.system)
    market = MarketSpec.symmetric(3, build_demand(cfg.demand, cfg.A, cfg.B),
                                  build_cost(cfg.cost, cfg.c))
    bracket = tuple(cfg.bracket) if cfg.bracket else CUSTOM_BRACKETS.get(cfg.demand)
    inner = InnerSolveConfig(bracket=bracket) if bracket else None
    model = model or cfg.model
    if model == "cournot":
        return ResponseSystem.cournot(market, inner=inner)
    if cfg.mode == "general":
        return ResponseSystem.general(market, inner=inner)
    return ResponseSystem.reduced(market, inner=inner)


# -- command implementations -------------------------------------------------


def run(cfg: RunConfig) -> tuple[ReportEnvelope, int]:
    """Execute a validated config; returns the report and the exit code."""
    handlers = {
        "triopoly": _run_triopoly,
        "iterate": _run_iterate,
        "contraction": _run_contraction,
        "large-market": _run_large_market,
        "welfare": _run_welfare,
    }
    results, warnings, code = handlers[cfg.command](cfg)
    envelope = ReportEnvelope(schema_version=SCHEMA_VERSION, config=cfg.as_dict(),
                              results=results, warnings=warnings)
    return envelope, code


def _point_warnings(point: Sequence[float]) -> list[str]:
    if min(point) <= 0.0:
        return [f"equilibrium has a nonpositive coordinate: {tuple(point)}"]
    return []


def _run_triopoly(cfg: RunConfig):
    warnings: list[str] = []
    code = 0
    system = build_system(cfg)
    if cfg.method == "direct" and system.mode != "cournot":
        point = system.solve_backward()
        iteration = {"method": "direct"}
    else:
        trace = picard_iterate(system, cfg.start, tol=cfg.tol, max_iter=cfg.max_iter,
                               divergence_radius=cfg.divergence_radius)
        point = trace.final
        iteration = {"method": "picard", "status": trace.status.value,
                     "iterations": trace.iterations}
        if trace.status is not IterationStatus.CONVERGED:
            warnings.append(f"iteration did not converge: {trace.status.value}")
            code = 2
    market = system.market
    outputs = list(point)
    results: dict[str, Any] = {"model": cfg.model, "outputs": outputs, "iteration": iteration}
    if code == 0:
        total = sum(outputs)
        results["price"] = price(market.demand, total)
        results["profits"] = [profit(market, i, outputs) for i in range(3)]
        results["cs"] = consumer_surplus(market.demand, total)
        results["ts"] = total_surplus(market, outputs)
        warnings.append(SURPLUS_NAMING_WARNING)
        soc = verify_second_order(system, point)
        results["second_order"] = {"values": list(soc.values()), "all_negative": soc.all_negative}
        if not soc.all_negative:
            warnings.append("second-order conditions failed at the reported point")
        warnings.extend(_point_warnings(point))
    return results, warnings, code


def _run_iterate(cfg: RunConfig):
    warnings: list[str] = []
    system = build_system(cfg)
    trace = picard_iterate(system, cfg.start, tol=cfg.tol, max_iter=cfg.max_iter,
                           divergence_radius=cfg.divergence_radius)
    code = 0 if trace.status is IterationStatus.CONVERGED else 2
    if code:
        warnings.append(f"iteration did not converge: {trace.status.value}")
    results = {
        "status": trace.status.value,
        "iterations": trace.iterations,
        "final": list(trace.final),
        "first_step": trace.step_m1[0] if trace.step_m1 else 0.0,
        "last_step": trace.step_m1[-1] if trace.step_m1 else 0.0,
        "trace_tail": [list(p) for p in trace.points[-5:]],
    }
    return results, warnings, code


def _run_contraction(cfg: RunConfig):
    warnings: list[str] = []
    system = build_system(cfg)
    if cfg.box is None:
        raise ConfigError("box", "contraction requires a sampling box")
    report = estimate_contraction(system, [tuple(side) for side in cfg.box],
                                  samples=cfg.samples, rng_seed=cfg.seed)
    if not report.certified:
        warnings.append("contraction not certified on the sampled box")
    results = {
        "alpha_hat": report.alpha_hat,
        "jac_l1_norms": report.jac_l1_norms,
        "spectral_radius": report.spectral_radius,
        "certified": report.certified,
    }
    return results, warnings, 0


def _families_rows(cfg: RunConfig) -> dict[str, list[LargeMarketRow]]:
    params = FamilyParams(A=cfg.A, B=cfg.B, c=cfg.c)
    lo, hi = cfg.n_range
    rows: dict[str, list[LargeMarketRow]] = {}
    for code in cfg.families:
        family = Family(code)
        rows[code] = [equilibrium_row(family, params, n) for n in range(lo, hi + 1)]
    return rows


def _run_large_market(cfg: RunConfig):
    warnings = [SURPLUS_NAMING_WARNING]
    rows_by_family = _families_rows(cfg)
    flat = [row for code in cfg.families for row in rows_by_family[code]]
    results = {"rows": [_row_dict(r) for r in flat]}
    if cfg.figures_dir is not None:
        from .figures import render_large_market_figures
        paths = render_large_market_figures(rows_by_family, cfg.figures_dir)
        results["figures"] = [str(p) for p in paths]
    return results, warnings, 0


def _run_welfare(cfg: RunConfig):
    warnings = [SURPLUS_NAMING_WARNING]
    params = FamilyParams(A=cfg.A, B=cfg.B, c=cfg.c)
    models = ("cournot", "stackelberg") if cfg.model == "both" else (cfg.model,)
    per_model = {}
    for model in models:
        if model == "cournot":
            row = cournot_quadratic(3, params)
        else:
            row, _ = stackelberg_quadratic(3, params)
        per_model[model] = {
            "outputs": row.per_firm_outputs,
            "price": row.price,
            "profits": row.per_firm_profits,
            "cs": row.cs,
            "ts": row.ts,
        }
    results: dict[str, Any] = {"models": per_model}
    if cfg.figures_dir is not None:
        from .figures import render_welfare_figure
        path = render_welfare_figure(params, per_model, cfg.figures_dir)
        results["figures"] = [str(path)]
    return results, warnings, 0


# -- emission ----------------------------------------------------------------


def _fmt(value: float) -> str:
    return format(value, ".17g")


def _row_dict(row: LargeMarketRow) -> dict[str, Any]:
    return {
        "n": row.n, "family": row.family, "Q_total": row.Q_total, "price": row.price,
        "x_first": row.x_first, "x_last": row.x_last, "profit_total": row.profit_total,
        "residual": row.residual, "gap_Q": row.gap_Q, "gap_P": row.gap_P,
        "cs": row.cs, "ts": row.ts,
    }


def emit_csv(rows: Sequence[LargeMarketRow], path: str | Path) -> Path:
    """Write large-market rows as CSV with a fixed header and 17-digit floats."""
    if not rows:
        raise IOError("refusing to emit an empty row set")
    path = Path(path)
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        record = _row_dict(row)
        cells = []
        for col in CSV_COLUMNS:
            value = record[col]
            cells.append(str(value) if isinstance(value, (int, str)) else _fmt(value))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def render_csv_rows(rows: Sequence[LargeMarketRow]) -> str:
    """CSV text for large-market rows (same format as emit_csv)."""
    if not rows:
        raise IOError("refusing to render an empty row set")
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        record = _row_dict(row)
        lines.append(",".join(str(record[c]) if isinstance(record[c], (int, str))
                              else _fmt(record[c]) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def emit_json(envelope: ReportEnvelope, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(render_json(envelope), encoding="utf-8")
    return path


def render_json(envelope: ReportEnvelope) -> str:
    return json.dumps(envelope.to_dict(), sort_keys=True, indent=2) + "\n"


def large_market_rows(cfg: RunConfig) -> list[LargeMarketRow]:
    """Rows for a large-market config, ascending n within each family."""
    rows_by_family = _families_rows(cfg)
    return [row for code in cfg.families for row in rows_by_family[code]]
