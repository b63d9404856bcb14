"""Command-line front end.

Usage::

    weakflow <command> [--config PATH] [--output PATH] [--format csv|json] [options]

Commands: weak-value, series-compare, aav, regimes, transition.

Parameters come from built-in defaults, then the config file, then flags
(flags win). A config file is INI text: a ``[run]`` section for the global
options and one section per command, e.g.::

    [run]
    format = json
    steps = 2000

    [aav]
    theta = 1.2
    eps = 0.002, 0.001, 0.0005

Unknown sections or keys are rejected. Errors are written to stderr as one
JSON object; exit codes are 0 ok, 1 configuration, 2 domain, 3 numerical.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from typing import Callable

import numpy as np

from .aav import AAVRecord, PointerGrid, SpinSelection, weak_readout
from .dyson import TimeGrid, dyson_series_exact, weak_evolution_series, weak_exponential, exact_amplitude
from .errors import ConfigError, DomainError, NumericalFailure, WeakflowError
from .limits import RegimeReport, SweepConfig, Thresholds, build_setup, sweep, verify_eq19
from .linalg import PAULI
from .weak_values import DEFAULT_OVERLAP_FLOOR, PrePostPair, theta_pair, weak_value

SCHEMA = "weakflow/1"
EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_NUMERICAL = 0, 1, 2, 3


# -- record types ---------------------------------------------------------------

@dataclass(frozen=True)
class WeakValueRow:
    theta: float
    operator: str
    post: str
    value_re: float
    value_im: float
    overlap_re: float
    overlap_im: float
    anomalous: bool


@dataclass(frozen=True)
class SeriesRow:
    order: int
    exact_re: float
    exact_im: float
    weak_re: float
    weak_im: float
    abs_diff: float
    exact_residual: float
    weak_residual: float


@dataclass(frozen=True)
class TransitionRow:
    theta: float
    eps_a: float
    eps_st_qx: float
    N: int
    ratio_re: float
    ratio_im: float
    reference: float
    residual: float
    denominator: str


RECORD_TYPES = {
    "weak-value": WeakValueRow,
    "series-compare": SeriesRow,
    "aav": AAVRecord,
    "regimes": RegimeReport,
    "transition": TransitionRow,
}


def parse_record(command: str, d: dict):
    """Rebuild the record type of ``command`` from a decoded JSON record."""
    cls = RECORD_TYPES[command]
    if cls is RegimeReport:
        return RegimeReport.from_dict(d)
    return cls(**d)


# -- parameters -------------------------------------------------------------------

def _float(s) -> float:
    v = float(s)
    if not math.isfinite(v):
        raise ValueError(f"{s!r} is not finite")
    return v


def _int(s) -> int:
    if isinstance(s, str):
        s = s.strip()
    return int(s)


def _bool(s) -> bool:
    if isinstance(s, bool):
        return s
    t = str(s).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{s!r} is not a boolean")


def _list(conv: Callable) -> Callable:
    def parse(s):
        items = s if isinstance(s, (list, tuple)) else str(s).replace(",", " ").split()
        out = tuple(conv(x) for x in items)
        if not out:
            raise ValueError("empty list")
        return out
    return parse


def _choice(*options: str) -> Callable:
    def parse(s):
        s = str(s).strip()
        if s not in options:
            raise ValueError(f"{s!r} not in {list(options)}")
        return s
    return parse


_OPERATOR = _choice(*PAULI)

GLOBAL_PARAMS = {
    "output": (str, None),
    "format": (_choice("csv", "json"), "csv"),
    "margin_factor": (_float, 10.0),
    "steps": (_int, 2000),
    "order": (_int, 8),
    # reserved for a sampled post-selection mode; every current command is deterministic
    "seed": (_int, None),
}

_EVOLUTION = {
    "theta": (_float, 1.2),
    "operator": (_OPERATOR, "sigma_z"),
    "strong_operator": (_OPERATOR, "sigma_x"),
    "eps_a": (_float, 0.05),
    "eps_st_qx": (_float, 0.005),
    "n": (_int, 1),
    "q_z": (_float, 1.0),
    "q_x": (_float, 1.0),
    "t_end": (_float, 1.0),
    "scale_strong": (_bool, True),
}

COMMAND_PARAMS = {
    "weak-value": {
        "theta": (_float, 1.2),
        "operator": (_OPERATOR, "sigma_x"),
        "post": (_choice("up", "pre"), "up"),
        "overlap_floor": (_float, DEFAULT_OVERLAP_FLOOR),
    },
    "series-compare": dict(_EVOLUTION),
    "aav": {
        "theta": (_float, 1.2),
        "operator": (_OPERATOR, "sigma_x"),
        "eps": (_list(_float), (2e-3, 1e-3, 5e-4)),
        "delta": (_float, 1.0),
        "q0": (_float, 0.0),
        "n_points": (_int, 2048),
        "half_width": (_float, 12.0),
    },
    "regimes": {
        "n_values": (_list(_int), (1, 2, 4, 8, 16, 32)),
        "thetas": (_list(_float), (0.3, 0.7854, 1.2, 1.4711)),
        "eps_a_values": (_list(_float), (0.02, 0.1)),
        "eps_st_qx_values": (_list(_float), (0.005, 0.05)),
        "operator": (_OPERATOR, "sigma_z"),
        "strong_operator": (_OPERATOR, "sigma_x"),
        "q_z": (_float, 1.0),
        "q_x": (_float, 1.0),
        "t_end": (_float, 1.0),
        "scale_strong": (_bool, True),
        "phase_tol": (_float, 0.05),
        "threads": (_int, None),
    },
    "transition": dict(_EVOLUTION, theta=(_float, 1.4711)),
}


def _check_theta(theta: float) -> None:
    if not (0.0 < theta < math.pi / 2):
        raise ConfigError(f"theta = {theta!r} outside (0, pi/2)")


def _check_positive(name: str, v) -> None:
    if not v > 0:
        raise ConfigError(f"{name} must be positive, got {v!r}")


def validate(command: str, p: dict) -> None:
    """Range checks shared by all commands (beyond per-key type parsing)."""
    if p["steps"] < 1:
        raise ConfigError("steps must be >= 1")
    if p["order"] < 0:
        raise ConfigError("order must be >= 0")
    if not p["margin_factor"] >= 1:
        raise ConfigError("margin_factor must be >= 1")
    for name in ("theta",):
        if name in p:
            _check_theta(p[name])
    for t in p.get("thetas", ()):
        _check_theta(t)
    for name in ("n", "t_end", "delta", "half_width", "phase_tol", "overlap_floor"):
        if name in p:
            _check_positive(name, p[name])
    for n in p.get("n_values", ()):
        _check_positive("n_values", n)
    if "n_points" in p:
        n = p["n_points"]
        if n < 256 or n & (n - 1):
            raise ConfigError("n_points must be a power of two >= 256")
    for e in p.get("eps", ()):
        if e == 0:
            raise ConfigError("eps values must be non-zero")
    if p.get("threads") is not None and p["threads"] < 1:
        raise ConfigError("threads must be >= 1")


def _convert(spec: dict, key: str, raw, origin: str):
    conv = spec[key][0]
    try:
        return conv(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{origin}: bad value for {key}: {exc}") from None


def load_config(path: str, command: str) -> tuple[dict, dict]:
    """(global overrides, command overrides) from an INI file."""
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path!r}: {exc}") from None
    allowed = {"run", *COMMAND_PARAMS}
    for section in cp.sections():
        if section not in allowed:
            raise ConfigError(f"unknown config section [{section}]")
    g, c = {}, {}
    for section, spec, dest in (("run", GLOBAL_PARAMS, g), (command, COMMAND_PARAMS[command], c)):
        if not cp.has_section(section):
            continue
        for key, raw in cp.items(section):
            k = key.replace("-", "_")
            if k not in spec:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            dest[k] = _convert(spec, k, raw, f"[{section}]")
    # keys of other command sections are checked too, so typos never pass silently
    for section in cp.sections():
        if section in ("run", command):
            continue
        spec = COMMAND_PARAMS[section]
        for key, raw in cp.items(section):
            k = key.replace("-", "_")
            if k not in spec:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
    return g, c


def resolve(command: str, args: argparse.Namespace) -> dict:
    """Defaults < config file < flags."""
    params = {k: v[1] for k, v in GLOBAL_PARAMS.items()}
    params.update({k: v[1] for k, v in COMMAND_PARAMS[command].items()})
    if args.config:
        g, c = load_config(args.config, command)
        params.update(g)
        params.update(c)
    spec = {**GLOBAL_PARAMS, **COMMAND_PARAMS[command]}
    for k in spec:
        v = getattr(args, k, None)
        if v is not None:
            params[k] = _convert(spec, k, v, "--" + k.replace("_", "-"))
    validate(command, params)
    return params


# -- commands -----------------------------------------------------------------------

def cmd_weak_value(p: dict) -> list:
    theta = p["theta"]
    base = theta_pair(theta, p["overlap_floor"])
    pair = base if p["post"] == "up" else PrePostPair(base.pre, base.pre, p["overlap_floor"])
    res = weak_value(PAULI[p["operator"]], pair)
    return [WeakValueRow(theta, p["operator"], p["post"], res.re, res.im,
                         float(res.overlap.real), float(res.overlap.imag), bool(res.anomalous))]


def _setup(p: dict):
    return build_setup(p["theta"], p["eps_a"], p["eps_st_qx"], p["n"], p["operator"],
                       p["strong_operator"], p["q_z"], p["q_x"], p["t_end"], p["scale_strong"])


def cmd_series_compare(p: dict) -> list:
    setup = _setup(p)
    grid = TimeGrid(p["t_end"], p["steps"])
    ex = dyson_series_exact(setup, grid, p["order"])
    wk = weak_evolution_series(setup, grid, p["order"])
    target_ex = exact_amplitude(setup, grid, normalized=True)
    target_wk = weak_exponential(setup, grid)
    rows = []
    for m, (a, b) in enumerate(zip(ex.partial_sums, wk.partial_sums)):
        rows.append(SeriesRow(m, a.real, a.imag, b.real, b.imag, abs(a - b),
                              abs(a - target_ex), abs(b - target_wk)))
    return rows


def cmd_aav(p: dict) -> list:
    sel = SpinSelection(p["theta"])
    grid = PointerGrid.centered(p["q0"], p["delta"], p["n_points"], p["half_width"])
    A = PAULI[p["operator"]]
    return [weak_readout(sel, grid, A, e, p["q0"], p["delta"]) for e in p["eps"]]


def cmd_regimes(p: dict) -> list:
    cfg = SweepConfig(
        N_values=p["n_values"], thetas=p["thetas"], eps_a_values=p["eps_a_values"],
        eps_st_qx_values=p["eps_st_qx_values"], A=p["operator"], B=p["strong_operator"],
        q_z=p["q_z"], q_x=p["q_x"], t_end=p["t_end"], n_steps=p["steps"],
        scale_strong=p["scale_strong"],
        thresholds=Thresholds(margin_factor=p["margin_factor"], phase_tol=p["phase_tol"]),
        threads=p["threads"],
    )
    return sweep(cfg)


def cmd_transition(p: dict) -> list:
    setup = _setup(p)
    chk = verify_eq19(setup, TimeGrid(p["t_end"], p["steps"]), p["order"])
    return [TransitionRow(p["theta"], p["eps_a"], p["eps_st_qx"], p["n"], chk.ratio.real,
                          chk.ratio.imag, chk.reference, chk.residual, chk.denominator)]


COMMANDS = {
    "weak-value": cmd_weak_value,
    "series-compare": cmd_series_compare,
    "aav": cmd_aav,
    "regimes": cmd_regimes,
    "transition": cmd_transition,
}


# -- rendering ------------------------------------------------------------------------

def _record_dict(r) -> dict:
    return r.to_dict() if isinstance(r, RegimeReport) else asdict(r)


def _plain(v):
    """numpy scalars to Python scalars so both encoders see the same value."""
    if isinstance(v, np.generic):
        return v.item()
    return v


def format_cell(v) -> str:
    v = _plain(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_csv(records: list, command: str) -> str:
    names = [f.name for f in fields(RECORD_TYPES[command]) if f.name != "error"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for r in records:
        d = _record_dict(r)
        w.writerow([format_cell(d[k]) for k in names])
    return buf.getvalue()


def render_json(records: list, command: str, params: dict) -> str:
    provenance = {k: (list(v) if isinstance(v, tuple) else v)
                  for k, v in params.items() if k not in ("output", "format", "threads")}
    doc = {
        "schema": SCHEMA,
        "command": command,
        "parameters": provenance,
        "records": [{k: _plain(v) for k, v in _record_dict(r).items()} for r in records],
    }
    return json.dumps(doc, indent=2) + "\n"


# -- entry point ----------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--config", metavar="PATH", help="INI file with [run] and per-command sections")
    g.add_argument("--output", metavar="PATH", help="write here instead of stdout")
    g.add_argument("--format", choices=("csv", "json"))
    g.add_argument("--margin-factor", type=float, metavar="F", help='numeric meaning of "much less than"')
    g.add_argument("--steps", type=int, help="time-grid steps")
    g.add_argument("--order", type=int, help="series order")
    g.add_argument("--seed", type=int, help="reserved; all commands are deterministic")

    parser = _Parser(prog="weakflow", description="Weak values and weak-evolution diagnostics.")
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)
    for name, spec in COMMAND_PARAMS.items():
        sp = sub.add_parser(name, parents=[common], help=COMMANDS[name].__name__.replace("_", " "))
        for key, (conv, default) in spec.items():
            if key in ("eps", "n_values", "thetas", "eps_a_values", "eps_st_qx_values"):
                sp.add_argument(_flag(key), nargs="+", metavar="X", help=f"default {default}")
            else:
                sp.add_argument(_flag(key), metavar="X", help=f"default {default}")
    return parser


def _fail(code: int, exc: BaseException) -> int:
    err = {"schema": SCHEMA, "error": {"type": type(exc).__name__, "message": str(exc), "exit_code": code}}
    sys.stderr.write(json.dumps(err) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        params = resolve(args.command, args)
    except (ConfigError, ValueError) as exc:
        return _fail(EXIT_CONFIG, exc)
    command = args.command
    try:
        with np.errstate(divide="raise", over="raise", invalid="raise", under="ignore"):
            records = COMMANDS[command](params)
    except DomainError as exc:
        return _fail(EXIT_DOMAIN, exc)
    except (NumericalFailure, FloatingPointError, np.linalg.LinAlgError) as exc:
        return _fail(EXIT_NUMERICAL, exc)
    except (ValueError, WeakflowError) as exc:
        return _fail(EXIT_CONFIG, exc)
    if params["format"] == "json":
        text = render_json(records, command, params)
    else:
        text = render_csv(records, command)
    if params["output"]:
        try:
            with open(params["output"], "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            return _fail(EXIT_CONFIG, exc)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
