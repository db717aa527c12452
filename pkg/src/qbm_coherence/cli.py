"""
Command-line interface.

    qbm-coherence kinetics    --model srt --tau 0.1667 --tmax 100
    qbm-coherence coherence   --model ohmic --temp 1 --sigma 1 --dist 4
    qbm-coherence criterion   --model srt --tau 0.1667 --calibrate
    qbm-coherence wigner      --model srt --tau 0.1667 --time 1 --grid 24 --slice p1=0,p2=0
    qbm-coherence probability --model srt --tau 0.1667 --time 1 --grid 64

Parameters come from built-in defaults, then an optional flat JSON file
(``--config``), then command-line flags; later sources win.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 criterion run without a sign change.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .bath import (BathModel, BathSpec, debroglie_wavelength, kinetics_series, velocity_variance)
from .entanglement import calibrate_sigma, initial_criterion, separability_time, sample_times
from .errors import (BracketError, ConfigError, DegeneracyError, DivergenceError, InconsistentStateError,
                     InvalidInputError, QuadratureError, UnsupportedModelError)
from .numerics import grid_integral
from .state import SuperpositionSpec, covariance_coefficients
from .wigner import (GridSpec, attenuation_exponent, coherence_visibility, phase_space_axes,
                     position_probability, wigner_function)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_NO_CROSSING = 4

_MODEL_ALIASES = {
    "ohmic": BathModel.OHMIC_FREE, "ohmicfree": BathModel.OHMIC_FREE,
    "srt": BathModel.SINGLE_RELAXATION_FREE, "singlerelaxationfree": BathModel.SINGLE_RELAXATION_FREE,
    "single-relaxation": BathModel.SINGLE_RELAXATION_FREE,
    "oscillator": BathModel.OHMIC_OSCILLATOR, "ohmicoscillator": BathModel.OHMIC_OSCILLATOR,
}


@dataclass
class RunConfig:
    model: str = "ohmic"
    zeta: Optional[float] = None
    gamma: Optional[float] = None
    tau: float = 0.0
    temp: float = 0.0
    mass: float = 1.0
    omega0: float = 0.0
    cutoff: Optional[float] = None
    hbar: float = 1.0
    sigma: float = 1.0
    dist: float = 4.0
    tmax: float = 100.0
    tmin: Optional[float] = None
    samples: int = 64
    spacing: str = "log"
    time: float = 1.0
    grid: str = "48"
    slice: Optional[str] = None
    calibrate: bool = False
    target: float = 6.0
    max_points: int = 6_000_000
    workers: int = 1
    out: Optional[str] = None
    format: str = "csv"

    # keys that do not affect the computed numbers
    _OUTPUT_KEYS = ("out", "format", "workers")

    @classmethod
    def from_mapping(cls, mapping: dict, source: str = "config") -> "RunConfig":
        cfg = cls()
        cfg.update(mapping, source)
        return cfg

    def update(self, mapping: dict, source: str = "config") -> None:
        known = {f.name: f for f in fields(self)}
        for key, value in mapping.items():
            if key not in known:
                raise ConfigError(f"{source}: unknown key {key!r} (allowed: {', '.join(sorted(known))})")
            if value is None:
                continue
            default = known[key].default
            try:
                if isinstance(default, bool):
                    if not isinstance(value, bool):
                        raise TypeError("expected true/false")
                elif isinstance(default, int):
                    if isinstance(value, bool) or int(value) != value:
                        raise TypeError("expected an integer")
                    value = int(value)
                elif isinstance(default, float) or key in ("zeta", "gamma", "cutoff", "tmin"):
                    value = float(value)
                elif isinstance(default, str) or key in ("slice", "out"):
                    value = str(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{source}: key {key!r}: invalid value {value!r} ({exc})") from None
            setattr(self, key, value)

    def bath(self) -> BathSpec:
        model = _MODEL_ALIASES.get(self.model.lower())
        if model is None:
            raise ConfigError(f"key 'model': unknown model {self.model!r} (choose ohmic, srt, oscillator)")
        if self.zeta is not None and self.gamma is not None:
            raise ConfigError("keys 'zeta' and 'gamma' are mutually exclusive")
        zeta = self.zeta if self.zeta is not None else (self.gamma if self.gamma is not None else 1.0) * self.mass
        try:
            return BathSpec(model=model, zeta=zeta, tau=self.tau, kT=self.temp, m=self.mass,
                            omega0=self.omega0, cutoff=self.cutoff, hbar=self.hbar)
        except InvalidInputError as exc:
            raise ConfigError(f"bath parameters: {exc}") from None

    def state(self, sigma: float | None = None) -> SuperpositionSpec:
        try:
            return SuperpositionSpec(sigma=self.sigma if sigma is None else sigma, d=self.dist, m=self.mass)
        except InvalidInputError as exc:
            raise ConfigError(f"state parameters (sigma, dist): {exc}") from None

    def times(self) -> np.ndarray:
        try:
            return sample_times(self.tmax, self.samples, self.tmin, self.spacing)
        except InvalidInputError as exc:
            raise ConfigError(f"time grid (tmax, tmin, samples, spacing): {exc}") from None

    def grid_spec(self, ndim: int) -> GridSpec:
        text = self.grid.lower().replace(" ", "")
        try:
            if "x" in text:
                n_text, hw_text = text.split("x", 1)
                n, hw = int(n_text), float(hw_text)
            else:
                n, hw = int(text), 6.0
            return GridSpec.uniform(n, hw, ndim)
        except (ValueError, InvalidInputError) as exc:
            raise ConfigError(f"key 'grid': {self.grid!r} is not 'N' or 'NxHALFWIDTH' ({exc})") from None

    def validate(self) -> None:
        """Check every field eagerly, whichever command will consume it."""
        self.bath()
        self.state()
        self.times()
        self.grid_spec(4)
        _parse_slice(self.slice)
        if self.format not in ("csv", "json"):
            raise ConfigError(f"key 'format': {self.format!r} is not csv or json")
        if self.workers < 1 or self.max_points < 1:
            raise ConfigError("keys 'workers' and 'max_points' must be >= 1")
        if not (self.target > 0 and math.isfinite(self.target)):
            raise ConfigError("key 'target': must be positive and finite")
        if not (self.time >= 0 and math.isfinite(self.time)):
            raise ConfigError("key 'time': must be finite and >= 0")

    def digest(self) -> str:
        payload = {k: v for k, v in dataclasses.asdict(self).items() if k not in self._OUTPUT_KEYS}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def load_config_file(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object of key/value pairs")
    for key, value in data.items():
        if isinstance(value, (dict, list)):
            raise ConfigError(f"{path}: key {key!r}: nested values are not allowed (flat document)")
    return data


# -- tables ----------------------------------------------------------------

@dataclass
class Table:
    columns: list[str]
    rows: list[list[float]]
    meta: dict


_UNITS = {
    "t": "time", "G": "time/mass", "Gdot": "1/mass", "s": "length^2", "sdot": "length^2/time",
    "v2": "length^2/time^2", "lambda_bar": "length", "a": "1", "A": "1", "C": "1",
    "q1": "length", "q2": "length", "p1": "momentum", "p2": "momentum",
    "W": "1/(length*momentum)^2", "P": "1/length^2",
}


def _provenance(cfg: RunConfig, command: str) -> dict:
    bath = cfg.bath()
    return {
        "tool": f"qbm-coherence {__version__}",
        "command": command,
        "config_sha256": cfg.digest(),
        "config": {k: v for k, v in dataclasses.asdict(cfg).items() if k not in RunConfig._OUTPUT_KEYS},
        "units": (f"hbar={bath.hbar:g}, m={bath.m:g}, zeta={bath.zeta:g}; "
                  f"time unit m/zeta={bath.m / bath.zeta:g}; natural units when all equal 1"),
    }


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_table(table: Table, fmt: str, stream) -> None:
    meta = dict(table.meta)
    meta["columns"] = {c: _UNITS.get(c, "") for c in table.columns}
    if fmt == "json":
        data = [{c: _json_safe(float(v)) for c, v in zip(table.columns, row)} for row in table.rows]
        json.dump({"meta": meta, "data": data}, stream, indent=1, default=_json_safe)
        stream.write("\n")
        return
    if fmt != "csv":
        raise ConfigError(f"key 'format': {fmt!r} is not csv or json")
    for key, value in meta.items():
        stream.write(f"# {key}: {json.dumps(value, default=_json_safe)}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([repr(float(v)) for v in row])


def read_table(source) -> Table:
    """Parse a table emitted by :func:`write_table` (path or text)."""
    text = Path(source).read_text() if isinstance(source, Path) or (
        isinstance(source, str) and "\n" not in source and Path(source).exists()) else source
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        columns = list(doc["meta"]["columns"])
        rows = [[math.nan if r[c] is None else float(r[c]) for c in columns] for r in doc["data"]]
        return Table(columns, rows, doc["meta"])
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            meta[key] = json.loads(value)
        elif line.strip():
            body.append(line)
    reader = csv.reader(io.StringIO("\n".join(body)))
    columns = next(reader)
    if list(meta.get("columns", columns)) != columns:
        raise ValueError("column header does not match declared schema")
    rows = [[float(v) for v in row] for row in reader]
    for row in rows:
        if len(row) != len(columns):
            raise ValueError("ragged row")
    return Table(columns, rows, meta)


# -- commands --------------------------------------------------------------

def _v2_or_nan(bath, meta):
    try:
        return velocity_variance(bath)
    except DivergenceError as exc:
        meta["note"] = f"{exc}; v2-dependent columns are nan"
        return math.nan


def cmd_kinetics(cfg: RunConfig) -> Table:
    bath = cfg.bath()
    meta = _provenance(cfg, "kinetics")
    v2 = _v2_or_nan(bath, meta)
    lam = bath.hbar / (bath.m * math.sqrt(v2)) if math.isfinite(v2) else math.nan
    rows = [[k.t, k.G, k.Gdot, k.s, k.sdot, v2, lam]
            for k in kinetics_series(bath, cfg.times(), strict=False, workers=cfg.workers)]
    return Table(["t", "G", "Gdot", "s", "sdot", "v2", "lambda_bar"], rows, meta)


def _require_free(bath, what):
    if not bath.model.is_free:
        raise UnsupportedModelError(f"{what} is defined for the free-particle models (ohmic, srt) only")


def cmd_coherence(cfg: RunConfig) -> Table:
    bath = cfg.bath()
    _require_free(bath, "coherence")
    state = cfg.state()
    meta = _provenance(cfg, "coherence")
    _v2_or_nan(bath, meta)
    meta["asymptote"] = math.exp(-state.overlap_exponent)
    rows = []
    for kin in kinetics_series(bath, cfg.times(), strict=False, workers=cfg.workers):
        A = math.nan
        if math.isfinite(kin.v2):
            A = attenuation_exponent(covariance_coefficients(kin, state), kin, state)
        rows.append([kin.t, coherence_visibility(kin, state), A])
    return Table(["t", "a", "A"], rows, meta)


def cmd_criterion(cfg: RunConfig) -> Table:
    bath = cfg.bath()
    _require_free(bath, "the separability criterion")
    meta = _provenance(cfg, "criterion")
    sigma = cfg.sigma
    if cfg.calibrate:
        cal = calibrate_sigma(bath, cfg.target, t_max=cfg.tmax, n_samples=max(cfg.samples, 16))
        if cal.sigma is None:
            raise InconsistentStateError(f"calibration found no sigma with crossing at t = {cfg.target}")
        sigma = cal.sigma
        meta["calibration"] = {"target": cal.target, "candidates": list(cal.candidates),
                               "sigma_factors": list(cal.sigma_factors),
                               "crossing_times": list(cal.crossing_times)}
    state = cfg.state(sigma)
    report = separability_time(bath, state, cfg.tmax, cfg.samples, t_min=cfg.tmin, spacing=cfg.spacing)
    lam = debroglie_wavelength(bath)
    meta.update({
        "sigma": sigma, "lambda_bar": lam, "C0_closed_form": initial_criterion(sigma, lam),
        "crossing": dataclasses.asdict(report.crossing) if report.crossing else None,
        "sign_changes": report.sign_changes, "long_time_value": report.long_time_value,
    })
    return Table(["t", "C"], [list(s) for s in report.samples], meta)


_AXIS_NAMES = ("q1", "p1", "q2", "p2")


def _parse_slice(text: str | None) -> dict[str, float]:
    if not text:
        return {}
    fixed = {}
    for part in text.split(","):
        name, sep, value = part.partition("=")
        name = name.strip()
        if not sep or name not in _AXIS_NAMES:
            raise ConfigError(f"key 'slice': {part!r} is not COORD=VALUE with COORD in {_AXIS_NAMES}")
        try:
            fixed[name] = float(value)
        except ValueError:
            raise ConfigError(f"key 'slice': {value!r} is not a number") from None
    if len(fixed) != 2:
        raise ConfigError("key 'slice': fix exactly two coordinates, e.g. p1=0,p2=0")
    return fixed


def _distribution_setup(cfg):
    bath = cfg.bath()
    _require_free(bath, "the closed-form distributions")
    if not (cfg.time >= 0 and math.isfinite(cfg.time)):
        raise ConfigError("key 'time': must be finite and >= 0")
    state = cfg.state()
    kin = kinetics_series(bath, [cfg.time])[0]
    return state, kin, covariance_coefficients(kin, state)


def _grid_rows(names, axes, values):
    mesh = np.meshgrid(*axes, indexing="ij")
    cols = [m.ravel() for m in mesh] + [np.asarray(values).ravel()]
    return np.column_stack(cols).tolist()


def cmd_wigner(cfg: RunConfig) -> Table:
    grid = cfg.grid_spec(4)
    fixed = _parse_slice(cfg.slice)
    dumped = grid.size if not fixed else grid.counts[0] * grid.counts[2]
    if dumped > cfg.max_points:
        raise ConfigError(f"grid of {dumped} points exceeds max_points={cfg.max_points}; "
                          "reduce --grid, use --slice, or raise max_points in the config")
    state, kin, cov = _distribution_setup(cfg)
    axes = phase_space_axes(cov, state, grid)
    meta = _provenance(cfg, "wigner")
    meta.update({"time": cfg.time, "integral": None,
                 "axes": {n: {"min": float(a[0]), "max": float(a[-1]), "n": len(a)}
                          for n, a in zip(_AXIS_NAMES, axes)}})
    full = None
    if grid.size <= cfg.max_points:
        full = wigner_function(cov, kin, state, np.meshgrid(*axes, indexing="ij", sparse=True))
        meta["integral"] = grid_integral(full, axes)
    else:
        meta["note"] = "4-d grid above max_points; integral not evaluated"
    if not fixed:
        return Table(list(_AXIS_NAMES) + ["W"], _grid_rows(_AXIS_NAMES, axes, full), meta)
    free = [n for n in _AXIS_NAMES if n not in fixed]
    free_axes = [axes[_AXIS_NAMES.index(n)] for n in free]
    mesh = dict(zip(free, np.meshgrid(*free_axes, indexing="ij", sparse=True)))
    mesh.update(fixed)
    values = wigner_function(cov, kin, state, tuple(mesh[n] for n in _AXIS_NAMES))
    meta["slice"] = fixed
    return Table(free + ["W"], _grid_rows(free, free_axes, values), meta)


def cmd_probability(cfg: RunConfig) -> Table:
    grid = cfg.grid_spec(2)
    if grid.size > cfg.max_points:
        raise ConfigError(f"grid of {grid.size} points exceeds max_points={cfg.max_points}")
    state, kin, cov = _distribution_setup(cfg)
    axes = phase_space_axes(cov, state, grid)
    q1, q2 = np.meshgrid(*axes, indexing="ij", sparse=True)
    values = position_probability(cov, kin, state, q1, q2)
    meta = _provenance(cfg, "probability")
    meta.update({"time": cfg.time, "integral": grid_integral(values, axes),
                 "axes": {n: {"min": float(a[0]), "max": float(a[-1]), "n": len(a)}
                          for n, a in zip(("q1", "q2"), axes)}})
    return Table(["q1", "q2", "P"], _grid_rows(("q1", "q2"), axes, values), meta)


COMMANDS = {
    "kinetics": cmd_kinetics,
    "coherence": cmd_coherence,
    "criterion": cmd_criterion,
    "wigner": cmd_wigner,
    "probability": cmd_probability,
}

COMMAND_HELP = {
    "kinetics": "Green function, mean-square displacement and velocity variance versus time",
    "coherence": "interference visibility a(t) and attenuation exponent A(t) versus time",
    "criterion": "separability criterion C(t) and its zero crossing",
    "wigner": "two-particle Wigner function on a grid (or a 2-d slice)",
    "probability": "joint position probability on a grid",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("bath")
    g.add_argument("--model", help="ohmic | srt | oscillator")
    g.add_argument("--zeta", type=float, help="friction constant (mass/time)")
    g.add_argument("--gamma", type=float, help="relaxation rate zeta/m (alternative to --zeta)")
    g.add_argument("--tau", type=float, help="memory time of the srt model")
    g.add_argument("--temp", type=float, help="temperature kT (energy)")
    g.add_argument("--mass", type=float)
    g.add_argument("--omega0", type=float, help="oscillator frequency")
    g.add_argument("--cutoff", type=float, help="UV cutoff frequency for strict Ohmic fluctuations")
    g.add_argument("--hbar", type=float)
    g = common.add_argument_group("state")
    g.add_argument("--sigma", type=float, help="packet width")
    g.add_argument("--dist", type=float, help="packet separation d")
    g = common.add_argument_group("sampling")
    g.add_argument("--tmax", type=float)
    g.add_argument("--tmin", type=float, help="first non-zero time on a log grid")
    g.add_argument("--samples", type=int)
    g.add_argument("--spacing", choices=("log", "linear"))
    g.add_argument("--time", type=float, help="evaluation time for distribution dumps")
    g.add_argument("--grid", help="points per axis, optionally NxHALFWIDTH (half width in std devs)")
    g.add_argument("--slice", help="fix two coordinates of a wigner dump, e.g. p1=0,p2=0")
    g.add_argument("--max-points", dest="max_points", type=int)
    g.add_argument("--calibrate", action="store_true", default=None,
                   help="criterion: choose sigma so the crossing happens at --target")
    g.add_argument("--target", type=float)
    g.add_argument("--workers", type=int)
    g = common.add_argument_group("output")
    g.add_argument("--out", help="output path (default stdout)")
    g.add_argument("--format", choices=("csv", "json"))
    g.add_argument("--config", help="flat JSON file of the same keys")

    parser = argparse.ArgumentParser(prog="qbm-coherence",
                                     description="Decoherence and entanglement of two particles in a quantum bath.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=COMMAND_HELP[name], description=COMMAND_HELP[name])
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        cfg.update(load_config_file(args.config), source=args.config)
    flags = {f.name: getattr(args, f.name) for f in fields(RunConfig) if hasattr(args, f.name)}
    cfg.update(flags, source="command line")
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        table = COMMANDS[args.command](cfg)
        if cfg.out and cfg.out != "-":
            with open(cfg.out, "w", newline="") as fh:
                write_table(table, cfg.format, fh)
        else:
            write_table(table, cfg.format, sys.stdout)
    except (BracketError, QuadratureError, DivergenceError, DegeneracyError, InconsistentStateError,
            ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, UnsupportedModelError, InvalidInputError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "criterion" and table.meta.get("crossing") is None:
        print("no sign change of C(t) up to tmax", file=sys.stderr)
        return EXIT_NO_CROSSING
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
