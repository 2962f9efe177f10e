"""Command-line front end.

Each computing subcommand reads an INI file whose ``[run] mode`` names the
subcommand, writes CSV files into ``--out`` and a ``manifest.txt`` listing
inputs and row counts. Failures print one JSON object to stderr and exit
nonzero (2 for configuration errors, 3 for model errors).

Example::

    mlincentive flux --config configs/fig1a_constant_price.ini --out out/fig1a
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .competition import solve_dynamics, simulate_competition_abm
from .discrete import DiscreteMarket, resale_cohort_stats, simulate_resale_abm
from .errors import ConfigError
from .flux import (
    CommissionPolicy,
    IncentiveProfile,
    PriceSchedule,
    apply_K,
    apply_K_commission,
    collector_share,
    invert_K,
    invert_K_commission,
    zero_sum_residual,
)
from .io import read_csv, write_csv, write_manifest
from .numerics import DEFAULT_GRID, GridFunction, grid, sine_integral
from .scenarios import (
    DEFAULT_EPSILON_GRID,
    DEFAULT_M_GRID,
    SpikeSpec,
    SweepSpec,
    closed_scenario,
    design_price,
    free_rider_scenario,
    sleeper_scenario,
    sweep,
    symmetric_scenario,
)

MODES = ("flux", "invert", "compete", "sweep", "abm", "design-price")
MIN_GRID = 17
_REQUIRED = object()


# ---------------------------------------------------------------------------
# function families


def _opt(p, key, default):
    v = p.get(key)
    return default if v is None else v


def _si_incentive(p, s):
    si = np.array([sine_integral(math.pi * x) for x in s])
    return sine_integral(math.pi) - si - np.sin(math.pi * s)


def _neg_log(p, s):
    out = np.empty_like(s)
    out[1:] = -np.log(s[1:]) - 1.0
    out[0] = out[1]
    return out


# name -> (required parameters, evaluator, singular at s=0)
FAMILIES = {
    "constant": (("value",), lambda p, s: np.full_like(s, p["value"]), False),
    "spike": (("m",), lambda p, s: SpikeSpec(p["m"])(s), False),
    "sine": ((), lambda p, s: np.sin(_opt(p, "freq", 1.0) * math.pi * s), False),
    "cosine": ((), lambda p, s: np.cos(_opt(p, "freq", 1.0) * math.pi * s), False),
    "sinc_cos": ((), lambda p, s: np.sinc(s) - np.cos(math.pi * s), False),
    "polynomial": (("coeffs",), lambda p, s: np.polynomial.polynomial.polyval(s, p["coeffs"]), False),
    "si_incentive": ((), _si_incentive, False),
    "log_incentive": ((), _neg_log, True),
}

def build_function(params: dict, n_points: int) -> GridFunction:
    """Grid function for a validated ``[price]``-style section."""
    _, func, singular = FAMILIES[params["family"]]
    s = grid(n_points)
    vals = _opt(params, "amplitude", 1.0) * func(params, s)
    return GridFunction(vals, singular=singular)


# ---------------------------------------------------------------------------
# configuration


def _float(x):
    v = float(x)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _floatlist(x):
    vals = [_float(t) for t in x.replace(";", ",").split(",") if t.strip()]
    if not vals:
        raise ValueError("empty list")
    return tuple(vals)


def _bool(x):
    t = x.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("not a boolean")


_TYPES = {"float": _float, "int": int, "str": str.strip, "floats": _floatlist, "bool": _bool}

_FUNCTION_SCHEMA = {
    "family": ("str", _REQUIRED),
    "value": ("float", None),
    "m": ("float", None),
    "amplitude": ("float", None),
    "freq": ("float", None),
    "coeffs": ("floats", None),
}

SCHEMA = {
    "run": {"mode": ("str", _REQUIRED), "grid": ("int", DEFAULT_GRID), "seed": ("int", 0)},
    "price": _FUNCTION_SCHEMA,
    "incentive": _FUNCTION_SCHEMA,
    "commission": dict(_FUNCTION_SCHEMA, family=("str", None), values=("floats", None)),
    "fairness": {"u": ("float", 0.0), "reading": ("str", "expected")},
    "scenario": {
        "template": ("str", "free_rider"),
        "m": ("float", None),
        "m_a": ("float", None),
        "epsilon": ("float", 0.0),
        "popularity": ("float", 0.5),
        "m_pa": ("float", 0.7),
        "m_pb": ("float", 0.3),
        "close": ("float", None),
    },
    "sweep": {
        "template": ("str", "free_rider"),
        "m_grid": ("floats", DEFAULT_M_GRID),
        "epsilon_grid": ("floats", DEFAULT_EPSILON_GRID),
        "popularity": ("float", 0.5),
        "m_pa": ("float", 0.7),
        "m_pb": ("float", 0.3),
        "workers": ("int", 1),
    },
    "abm": {
        "kind": ("str", "resale"),
        "n_inf": ("int", _REQUIRED),
        "runs": ("int", 1000),
        "replicas": ("int", 3),
        "gamma": ("float", 1.0),
        "root_in_pool": ("bool", False),
        "sample_points": ("int", 101),
    },
}

# sections: required / optional per mode
MODE_SECTIONS = {
    "flux": ({"run", "price"}, {"commission"}),
    "invert": ({"run", "incentive"}, {"commission"}),
    "design-price": ({"run", "incentive"}, {"commission", "fairness"}),
    "compete": ({"run", "scenario"}, set()),
    "sweep": ({"run", "sweep"}, set()),
    "abm": ({"run", "abm"}, {"price", "scenario"}),
}


@dataclass
class ScenarioConfig:
    """Validated configuration: typed values per section."""

    mode: str
    sections: dict
    source: str = ""
    raw: dict = field(default_factory=dict)

    @property
    def grid(self) -> int:
        return self.sections["run"]["grid"]

    @property
    def seed(self) -> int:
        return self.sections["run"]["seed"]


def _in_open_unit(errors, where, x):
    if x is not None and not 0.0 < x < 1.0:
        errors.append(f"{where}: must lie in (0, 1), got {x}")


def _check_function(errors, name, p, commission=False):
    fam = p.get("family")
    if fam is None:
        if commission and p.get("values") is not None:
            return
        errors.append(f"{name}.family: missing")
        return
    if fam not in FAMILIES:
        errors.append(f"{name}.family: unknown family {fam!r} (known: {', '.join(sorted(FAMILIES))})")
        return
    required, _, singular = FAMILIES[fam]
    for key in required:
        if p.get(key) is None:
            errors.append(f"{name}.{key}: required for family {fam!r}")
    _in_open_unit(errors, f"{name}.m", p.get("m"))
    if name in ("price", "commission") and singular:
        errors.append(f"{name}.family: {fam!r} is unbounded and cannot be a {name}")
    if commission:
        if fam != "constant":
            errors.append("commission.family: only 'constant' is supported")
        elif p.get("value") is not None and not 0.0 <= p["value"] <= 1.0:
            errors.append(f"commission.value: must lie in [0, 1], got {p['value']}")


def _validate(mode, sec, errors):
    run = sec["run"]
    if run["grid"] < MIN_GRID:
        errors.append(f"run.grid: must be >= {MIN_GRID}, got {run['grid']}")
    if run["seed"] < 0 or run["seed"] >= 2**64:
        errors.append(f"run.seed: must be an unsigned 64-bit integer, got {run['seed']}")
    for name in ("price", "incentive"):
        if name in sec:
            _check_function(errors, name, sec[name])
    if "commission" in sec:
        c = sec["commission"]
        _check_function(errors, "commission", c, commission=True)
        if c.get("values") is not None:
            if mode != "flux":
                errors.append("commission.values: a list of factors is accepted in flux mode only")
            for g in c["values"]:
                if not 0.0 <= g <= 1.0:
                    errors.append(f"commission.values: factors must lie in [0, 1], got {g}")
    if "fairness" in sec:
        f = sec["fairness"]
        if f["u"] < 0:
            errors.append(f"fairness.u: must be >= 0, got {f['u']}")
        if f["reading"] not in ("expected", "realized"):
            errors.append(f"fairness.reading: must be 'expected' or 'realized', got {f['reading']!r}")
    if "scenario" in sec:
        sc = sec["scenario"]
        if sc["template"] in ("free_rider", "symmetric"):
            if sc["m"] is None:
                errors.append(f"scenario.m: required for the {sc['template']} template")
        elif sc["template"] == "sleeper":
            if sc["m_a"] is None:
                errors.append("scenario.m_a: required for the sleeper template")
            if not sc["m_pa"] > sc["m_pb"]:
                errors.append(f"scenario.m_pa: must exceed m_pb ({sc['m_pa']} <= {sc['m_pb']})")
        else:
            errors.append(f"scenario.template: must be 'free_rider', 'sleeper' or 'symmetric', got {sc['template']!r}")
        for key in ("m", "m_a", "popularity", "m_pa", "m_pb"):
            _in_open_unit(errors, f"scenario.{key}", sc[key])
        if sc["epsilon"] < 0:
            errors.append(f"scenario.epsilon: must be >= 0, got {sc['epsilon']}")
        if sc["close"] is not None and not 0.0 < sc["close"] <= 1.0:
            errors.append(f"scenario.close: must lie in (0, 1], got {sc['close']}")
    if "sweep" in sec:
        sw = sec["sweep"]
        if sw["template"] not in ("free_rider", "sleeper"):
            errors.append(f"sweep.template: must be 'free_rider' or 'sleeper', got {sw['template']!r}")
        for m in sw["m_grid"]:
            _in_open_unit(errors, "sweep.m_grid", m)
        for e in sw["epsilon_grid"]:
            if e < 0:
                errors.append(f"sweep.epsilon_grid: values must be >= 0, got {e}")
        for key in ("popularity", "m_pa", "m_pb"):
            _in_open_unit(errors, f"sweep.{key}", sw[key])
        if sw["template"] == "sleeper" and not sw["m_pa"] > sw["m_pb"]:
            errors.append("sweep.m_pa: must exceed m_pb")
        if sw["workers"] < 1:
            errors.append(f"sweep.workers: must be >= 1, got {sw['workers']}")
    if "abm" in sec:
        a = sec["abm"]
        if a["kind"] == "resale":
            if "price" not in sec:
                errors.append("price: section required for a resale simulation")
            if a["n_inf"] < 2:
                errors.append(f"abm.n_inf: must be >= 2, got {a['n_inf']}")
            if a["runs"] < 2:
                errors.append(f"abm.runs: must be >= 2, got {a['runs']}")
            if not 0.0 <= a["gamma"] <= 1.0:
                errors.append(f"abm.gamma: must lie in [0, 1], got {a['gamma']}")
        elif a["kind"] == "competition":
            if "scenario" not in sec:
                errors.append("scenario: section required for a competition simulation")
            if a["n_inf"] < 10:
                errors.append(f"abm.n_inf: must be >= 10, got {a['n_inf']}")
            if a["replicas"] < 1:
                errors.append(f"abm.replicas: must be >= 1, got {a['replicas']}")
            if a["sample_points"] < 2:
                errors.append(f"abm.sample_points: must be >= 2, got {a['sample_points']}")
        else:
            errors.append(f"abm.kind: must be 'resale' or 'competition', got {a['kind']!r}")


def parse_config(path, mode=None, grid=None, seed=None) -> ScenarioConfig:
    """Read and validate an INI configuration.

    ``mode`` (the subcommand) must match ``[run] mode``; ``grid`` and ``seed``
    override the file. All problems are collected into one
    :class:`~mlincentive.errors.ConfigError`.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except FileNotFoundError:
        raise ConfigError([f"config file not found: {path}"]) from None
    except configparser.Error as exc:
        raise ConfigError([f"config syntax: {exc}"]) from None

    errors: list[str] = []
    raw = {s: dict(cp[s]) for s in cp.sections()}
    file_mode = raw.get("run", {}).get("mode")
    if file_mode is None:
        errors.append("run.mode: missing")
    elif file_mode not in MODES:
        errors.append(f"run.mode: unknown mode {file_mode!r} (known: {', '.join(MODES)})")
    if mode is not None and file_mode is not None and file_mode != mode:
        errors.append(f"run.mode: config is for {file_mode!r} but the subcommand is {mode!r}")
    use_mode = file_mode if file_mode in MODES else mode

    if use_mode in MODE_SECTIONS:
        required, optional = MODE_SECTIONS[use_mode]
        for s in sorted(required - set(raw)):
            errors.append(f"{s}: section missing")
        for s in sorted(set(raw) - required - optional):
            errors.append(f"{s}: unknown section for mode {use_mode!r}")

    sections = {}
    for name, values in raw.items():
        schema = SCHEMA.get(name)
        if schema is None:
            continue
        typed = {}
        for key in sorted(set(values) - set(schema)):
            errors.append(f"{name}.{key}: unknown key")
        for key, (kind, default) in schema.items():
            if key in values:
                try:
                    typed[key] = _TYPES[kind](values[key])
                except ValueError as exc:
                    errors.append(f"{name}.{key}: cannot read {values[key]!r} as {kind} ({exc})")
                    typed[key] = default if default is not _REQUIRED else None
            elif default is _REQUIRED:
                if not (name == "run" and key == "mode"):
                    errors.append(f"{name}.{key}: missing")
                typed[key] = None
            else:
                typed[key] = default
        sections[name] = typed

    if "run" in sections:
        if grid is not None:
            sections["run"]["grid"] = grid
        if seed is not None:
            sections["run"]["seed"] = seed
        if not errors and use_mode in MODE_SECTIONS:
            _validate(use_mode, sections, errors)
    if errors:
        raise ConfigError(errors)
    return ScenarioConfig(use_mode, sections, str(path), raw)


# ---------------------------------------------------------------------------
# running


class RunError(RuntimeError):
    """A model error raised while running a configuration."""

    def __init__(self, module, params, cause):
        super().__init__(f"{module}: {cause}")
        self.module = module
        self.params = params
        self.cause = cause


def _singular_column(gf: GridFunction) -> np.ndarray:
    vals = gf.values.copy()
    if gf.singular:
        vals[0] = math.inf
    return vals


def _commission(cfg, n):
    c = cfg.sections.get("commission")
    if c is None:
        return None
    return CommissionPolicy(GridFunction(np.full(n, c["value"])))


def _run_flux(cfg, out):
    n = cfg.grid
    price = PriceSchedule(build_function(cfg.sections["price"], n))
    c = cfg.sections.get("commission")
    gammas = (1.0,) if c is None else (c["values"] if c.get("values") is not None else (c["value"],))
    cols = {"gamma": [], "s": [], "pi": [], "v_r": [], "v_i": []}
    summary = {"gamma": [], "zero_sum_residual": [], "collector_share": []}
    for g in gammas:
        policy = CommissionPolicy.constant(g, n)
        prof = apply_K(price) if c is None else apply_K_commission(price, policy)
        cols["gamma"].append(np.full(n, g))
        cols["s"].append(price.pi.s)
        cols["pi"].append(price.values)
        cols["v_r"].append(_singular_column(prof.v_r))
        cols["v_i"].append(_singular_column(prof.v_i))
        summary["gamma"].append(g)
        summary["zero_sum_residual"].append(zero_sum_residual(prof))
        summary["collector_share"].append(collector_share(price, policy))
    return {
        "flux.csv": {k: np.concatenate(v) for k, v in cols.items()},
        "summary.csv": summary,
    }


def _run_invert(cfg, out):
    n = cfg.grid
    target = IncentiveProfile(build_function(cfg.sections["incentive"], n))
    gamma = _commission(cfg, n)
    price = invert_K(target) if gamma is None else invert_K_commission(target, gamma)
    return {
        "price.csv": {"s": price.pi.s, "v_i": _singular_column(target.v_i), "pi": price.values},
        "summary.csv": {"zero_sum_residual": [zero_sum_residual(target)]},
    }


def _run_design(cfg, out):
    n = cfg.grid
    target = IncentiveProfile(build_function(cfg.sections["incentive"], n))
    f = cfg.sections.get("fairness", {"u": 0.0, "reading": "expected"})
    res = design_price(target, _commission(cfg, n), f["u"], f["reading"])
    return {
        "price.csv": {"s": res.price.pi.s, "v_i": _singular_column(target.v_i), "pi": res.price.values},
        "fairness.csv": {
            "u": [res.fairness_u],
            "margin": [res.margin],
            "worst_s": [res.worst_s],
            "passed": [res.passed],
        },
    }


def _scenario(cfg):
    sc = cfg.sections["scenario"]
    n = cfg.grid
    if sc["template"] == "free_rider":
        scen = free_rider_scenario(sc["m"], sc["epsilon"], sc["popularity"], n)
    elif sc["template"] == "symmetric":
        scen = symmetric_scenario(sc["m"], sc["epsilon"], sc["popularity"], n)
    else:
        scen = sleeper_scenario(sc["m_a"], sc["m_pa"], sc["m_pb"], sc["epsilon"], n)
    if sc["close"] is not None:
        scen = closed_scenario(scen, sc["close"])
    return scen


def _sample_grid(n):
    return np.linspace(0.0, 1.0, n)


def _run_compete(cfg, out):
    scen = _scenario(cfg)
    tr = solve_dynamics(scen)
    s_out = _sample_grid(101)
    dist = scen.distribution
    delta = np.linspace(-5.0, 5.0, 201)
    x = np.linspace(0.0, 3.0, 121)
    return {
        "decision_probability.csv": {"delta": delta, "rho": dist.rho_shift(delta)},
        "utility.csv": {"x": x, "pdf": dist.pdf(0.0, x), "cdf": dist.cdf(0.0, x)},
        "trajectory.csv": tr.columns(),
        "share.csv": {"s": s_out, "share_a": np.interp(s_out, tr.s, tr.share_a)},
        "summary.csv": {
            "S_a": [tr.final_share_a],
            "T_a": [tr.total_turnover_a],
            "S_b": [tr.final_share_b],
            "T_b": [tr.total_turnover_b],
            "initial_rho": [tr.initial_rho],
            "multiple_roots": [tr.multiple_roots],
        },
    }


def _run_sweep(cfg, out):
    sw = cfg.sections["sweep"]
    spec = SweepSpec(
        m_grid=sw["m_grid"],
        epsilon_grid=sw["epsilon_grid"],
        template=sw["template"],
        popularity=sw["popularity"],
        m_pa=sw["m_pa"],
        m_pb=sw["m_pb"],
        n_points=cfg.grid,
        workers=sw["workers"],
    )
    return {"surface.csv": sweep(spec).columns()}


def _run_abm(cfg, out):
    a = cfg.sections["abm"]
    seed = cfg.seed
    if a["kind"] == "resale":
        price = PriceSchedule(build_function(cfg.sections["price"], cfg.grid))
        market = DiscreteMarket(a["n_inf"], price)
        gamma = None
        if a["gamma"] != 1.0:
            gamma = CommissionPolicy(GridFunction(np.full(cfg.grid, a["gamma"])))
        stats = resale_cohort_stats(market, gamma, a["runs"], seed, a["root_in_pool"])
        one = simulate_resale_abm(market, gamma, seed, a["root_in_pool"])
        return {
            "cohort.csv": stats.columns(),
            "ledger.csv": {
                "sum_realized_incentive": [float(one.realized_incentive.sum())],
                "total_commission": [one.total_commission],
                "root_revenue": [one.root_revenue],
                "residual_ticks": [one.ledger_residual_ticks],
                "max_residual_ticks_all_runs": [stats.max_ledger_residual_ticks],
            },
        }
    scen = _scenario(cfg)
    s_out = _sample_grid(a["sample_points"])
    shares, finals, turn = [], [], []
    for r in range(a["replicas"]):
        run = simulate_competition_abm(scen, a["n_inf"], seed + r)
        shares.append(run.share_a_at(s_out))
        finals.append(run.final_share_a)
        turn.append(run.turnover_a)
    return {
        "share.csv": {"s": s_out, "share_a": np.mean(shares, axis=0)},
        "replicas.csv": {
            "seed": np.arange(a["replicas"]) + seed,
            "S_a": finals,
            "T_a": turn,
        },
    }


_RUNNERS = {
    "flux": ("flux", _run_flux),
    "invert": ("flux", _run_invert),
    "design-price": ("scenarios", _run_design),
    "compete": ("competition", _run_compete),
    "sweep": ("scenarios", _run_sweep),
    "abm": ("discrete", _run_abm),
}


def run(config: ScenarioConfig, out_dir) -> dict:
    """Execute ``config`` and write its output bundle; returns the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    module, runner = _RUNNERS[config.mode]
    if config.mode == "abm" and config.sections["abm"]["kind"] == "competition":
        module = "competition"
    t0 = time.perf_counter()
    try:
        files = runner(config, out)
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        raise RunError(module, config.raw, exc) from exc
    manifest = {
        "tool_version": __version__,
        "mode": config.mode,
        "config": config.source,
        "grid": config.grid,
        "seed": config.seed,
    }
    for section, values in config.raw.items():
        for key, val in values.items():
            manifest[f"input.{section}.{key}"] = val
    for name, cols in files.items():
        manifest[f"file.{name}.rows"] = write_csv(out / name, cols)
    manifest["wall_clock_s"] = f"{time.perf_counter() - t0:.3f}"
    write_manifest(out / "manifest.txt", manifest)
    return manifest


def compare_runs(dir_a, dir_b, tolerance: float) -> dict:
    """Per-column max-abs-difference over the CSV files both bundles share.

    Raises :class:`ConfigError` when shared files differ in columns or rows,
    or when there is nothing to compare.
    """
    a, b = Path(dir_a), Path(dir_b)
    common = sorted({p.name for p in a.glob("*.csv")} & {p.name for p in b.glob("*.csv")})
    if not common:
        raise ConfigError([f"no common CSV files in {a} and {b}"])
    report, problems = {}, []
    for name in common:
        ca, cb = read_csv(a / name), read_csv(b / name)
        if list(ca) != list(cb):
            problems.append(f"{name}: column mismatch {list(ca)} vs {list(cb)}")
            continue
        for col in ca:
            if ca[col].shape != cb[col].shape:
                problems.append(f"{name}: row count mismatch ({ca[col].size} vs {cb[col].size})")
                break
            x, y = ca[col], cb[col]
            same = (x == y) | (np.isnan(x) & np.isnan(y))
            with np.errstate(invalid="ignore"):
                diff = np.where(same, 0.0, np.abs(x - y))
            report[f"{name}:{col}"] = float(diff.max()) if diff.size else 0.0
    if problems:
        raise ConfigError(problems)
    return {
        "tolerance": tolerance,
        "max_abs_diff": report,
        "passed": all(v <= tolerance for v in report.values()),
    }


# ---------------------------------------------------------------------------
# entry point


def _error(kind, message, code, **extra):
    payload = {"error": kind, "message": message}
    payload.update(extra)
    print(json.dumps(payload, sort_keys=True, default=str), file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlincentive", description="Multi-level market incentive toolkit.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for mode in MODES:
        p = sub.add_parser(mode, help=f"run a {mode} configuration")
        p.add_argument("--config", required=True, help="INI configuration file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--grid", type=int, default=None, help="override the grid size")
        p.add_argument("--seed", type=int, default=None, help="override the RNG seed")
    p = sub.add_parser("compare", help="compare two output bundles column by column")
    p.add_argument("bundle_a")
    p.add_argument("bundle_b")
    p.add_argument("--tol", type=float, default=1e-9, help="max abs difference allowed")
    p.add_argument("--out", default=None, help="write the report as JSON here")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "compare":
        try:
            rep = compare_runs(args.bundle_a, args.bundle_b, args.tol)
        except ConfigError as exc:
            return _error("SchemaError", str(exc), 2, details=exc.errors)
        text = json.dumps(rep, indent=2, sort_keys=True)
        if args.out:
            Path(args.out).write_text(text + "\n")
        print(text)
        return 0 if rep["passed"] else 1
    try:
        cfg = parse_config(args.config, args.command, args.grid, args.seed)
    except ConfigError as exc:
        return _error("ConfigError", str(exc), 2, details=exc.errors)
    try:
        manifest = run(cfg, args.out)
    except RunError as exc:
        return _error(type(exc.cause).__name__, str(exc.cause), 3, module=exc.module, params=exc.params)
    files = sorted(k[5:-5] for k in manifest if k.startswith("file."))
    print(f"wrote {', '.join(files)} to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
