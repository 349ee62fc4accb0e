"""Command-line front end.

Config grammar (UTF-8, one item per line)::

    # comment            ignored, also after a value
    [device]             section header; [device] is required
    key = value          value is a number, a word, ``none`` or a comma list

Every physical key carries its unit in the name.  Unknown keys, repeated
keys, unparseable numbers and out-of-range values are all reported at once
with their line numbers.  ``hespin validate --config FILE`` prints the
fully resolved config, which parses back to the same value.

Exit codes: 0 success, 1 configuration or usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from ._version import __version__
from .device import DeviceParams, cyclic_reading
from .errors import ConfigError, DomainError, IntegrationError
from .experiments import (MODELS, SWEEP_METRICS, ExperimentSpec, ResultTable, run_experiment)


@dataclass(frozen=True)
class Key:
    name: str
    section: str
    target: str
    kind: str                       # "float", "int", "word", "floats"
    required: bool = False
    nullable: bool = False
    check: Callable[[Any], str | None] | None = None


def _positive(v):
    return None if v > 0 else "must be > 0"


def _nonnegative(v):
    return None if v >= 0 else "must be >= 0"


def _at_least_two(v):
    return None if v >= 2 else "must be >= 2"


def _one_of(options):
    return lambda v: None if v in options else f"must be one of {', '.join(options)}"


DEVICE_KEYS = (
    Key("wire_height_m", "device", "wire_height", "float", True, check=_positive),
    Key("current_A", "device", "current", "float", True, check=_nonnegative),
    Key("static_field_T", "device", "static_field", "float", True, check=_nonnegative),
    Key("distance_m", "device", "distance", "float", True, check=_positive),
    Key("nu_1x_rad_per_s", "device", "nu_1x", "float", True, check=_positive),
    Key("nu_2x_rad_per_s", "device", "nu_2x", "float", True, check=_positive),
    Key("delta_rad_per_s", "device", "delta", "float", True, check=_positive),
    Key("delta_ab_rad_per_s", "device", "delta_ab", "float", check=_positive),
    Key("eta_rad_per_s", "device", "eta", "float", nullable=True),
    Key("drive_omega_rad_per_s", "device", "drive_omega", "float", nullable=True, check=_positive),
    Key("temperature_K", "device", "temperature", "float", check=_positive),
    Key("trap_charge_C", "device", "trap_charge", "float", nullable=True, check=_positive),
    Key("trap_depth_m", "device", "trap_depth", "float", nullable=True, check=_positive),
)
EXPERIMENT_KEYS = (
    Key("model", "experiment", "model", "word", check=_one_of(MODELS)),
    Key("samples", "experiment", "samples", "int", check=_at_least_two),
    Key("fock_dim", "experiment", "fock_dim", "int", check=_at_least_two),
    Key("t_final_s", "experiment", "t_final", "float", nullable=True, check=_positive),
    Key("omega_rad_per_s", "experiment", "omega", "float", nullable=True, check=_positive),
    Key("sweep_param", "experiment", "sweep_param", "word", nullable=True,
        check=_one_of([k.name for k in DEVICE_KEYS])),
    Key("sweep_values", "experiment", "sweep_values", "floats"),
    Key("sweep_metric", "experiment", "sweep_metric", "word", check=_one_of(SWEEP_METRICS)),
)
KEYS = {k.name: k for k in DEVICE_KEYS + EXPERIMENT_KEYS}
SECTIONS = ("device", "experiment")


@dataclass(frozen=True)
class RunConfig:
    """Flat, validated configuration.  Unset optional keys hold their defaults.

    ``delta_ab`` defaults to ``delta``; ``sweep_param`` is a config key name.
    """

    device: DeviceParams
    model: str = "both"
    samples: int = 400
    fock_dim: int = 6
    t_final: float | None = None
    omega: float | None = None
    sweep_param: str | None = None
    sweep_values: tuple[float, ...] = ()
    sweep_metric: str = "couplings"

    def spec(self, name: str) -> ExperimentSpec:
        param = KEYS[self.sweep_param].target if self.sweep_param else None
        return ExperimentSpec(name, self.device, model=self.model, t_final=self.t_final,
                              samples=self.samples, fock_dim=self.fock_dim, omega=self.omega,
                              sweep_param=param, sweep_values=self.sweep_values,
                              sweep_metric=self.sweep_metric)


def _convert(key: Key, raw: str):
    if key.nullable and raw.lower() == "none":
        return None
    if key.kind == "float":
        v = float(raw)
        if not math.isfinite(v):
            raise ValueError("must be finite")
        return v
    if key.kind == "int":
        return int(raw)
    if key.kind == "floats":
        items = [s.strip() for s in raw.split(",") if s.strip()]
        vals = tuple(float(s) for s in items)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("must be finite")
        return vals
    if not raw or any(c.isspace() for c in raw):
        raise ValueError("expected a single word")
    return raw


def schema_text() -> str:
    """Human-readable list of every key, for error messages."""
    out = []
    for section in SECTIONS:
        out.append(f"[{section}]")
        for k in KEYS.values():
            if k.section == section:
                tag = "required" if k.required else "optional"
                out.append(f"  {k.name} ({k.kind}, {tag}{', may be none' if k.nullable else ''})")
    return "\n".join(out)


def parse_config(text: str) -> RunConfig:
    """Parse and validate config text; raise :class:`ConfigError` listing every problem."""
    errors: list[tuple[int | None, str]] = []
    values: dict[str, Any] = {}
    lines_of: dict[str, int] = {}
    seen_sections: set[str] = set()
    bad_keys: set[str] = set()
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in SECTIONS:
                errors.append((lineno, f"unknown section [{name}]"))
                section = None
                continue
            section = name
            seen_sections.add(name)
            continue
        if "=" not in line:
            errors.append((lineno, f"expected 'key = value', got {line!r}"))
            continue
        name, raw = (s.strip() for s in line.split("=", 1))
        key = KEYS.get(name)
        if key is None:
            errors.append((lineno, f"unknown key {name!r}"))
            continue
        bad_keys.add(name)
        if section is None:
            errors.append((lineno, f"key {name!r} appears outside a section"))
            continue
        if key.section != section:
            errors.append((lineno, f"key {name!r} belongs in [{key.section}], not [{section}]"))
            continue
        if name in values:
            errors.append((lineno, f"duplicate key {name!r} (first on line {lines_of[name]})"))
            continue
        try:
            value = _convert(key, raw)
        except ValueError:
            errors.append((lineno, f"cannot parse {raw!r} as {key.kind} for {name!r}"))
            continue
        problem = key.check(value) if (key.check and value is not None
                                       and key.kind != "floats") else None
        if problem:
            errors.append((lineno, f"{name} = {raw}: out of range, {problem}"))
            continue
        values[name] = value
        lines_of[name] = lineno
        bad_keys.discard(name)

    if "device" not in seen_sections:
        errors.append((None, "missing section [device]"))
    missing = [k.name for k in DEVICE_KEYS
               if k.required and k.name not in values and k.name not in bad_keys]
    if missing:
        errors.append((None, "missing required keys: " + ", ".join(missing)
                       + "\nexpected schema:\n" + schema_text()))
    if errors:
        raise ConfigError(errors)

    dev = {KEYS[n].target: v for n, v in values.items() if KEYS[n].section == "device"}
    dev.setdefault("delta_ab", dev["delta"])
    try:
        device = DeviceParams(**dev)
    except DomainError as exc:
        raise ConfigError([(None, str(exc))]) from exc
    exp = {KEYS[n].target: v for n, v in values.items() if KEYS[n].section == "experiment"}
    if exp.get("sweep_param") and not exp.get("sweep_values"):
        raise ConfigError([(lines_of["sweep_param"], "sweep_param given without sweep_values")])
    return RunConfig(device=device, **exp)


def _format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize_config(config: RunConfig) -> str:
    """Config text with every key written out; parses back to ``config``."""
    out = [f"# hespin {__version__} run configuration"]
    for section in SECTIONS:
        out.append(f"[{section}]")
        for k in KEYS.values():
            if k.section != section:
                continue
            source = config.device if section == "device" else config
            value = getattr(source, k.target)
            if k.kind == "floats" and not value:
                continue
            out.append(f"{k.name} = {_format_value(value)}")
        out.append("")
    return "\n".join(out)


def default_config() -> RunConfig:
    """The reference device with default experiment settings."""
    return RunConfig(device=DeviceParams())


# -- output -------------------------------------------------------------------

def format_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def table_to_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(table.header)
    for row in table.rows():
        writer.writerow([format_cell(v) for v in row])
    return buf.getvalue()


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, tuple):
        return list(obj)
    return str(obj)


def atomic_write(path: str, text: str) -> None:
    """Write ``text`` to a temp file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_table(table: ResultTable, out: str | None, stdout) -> None:
    """CSV to ``out`` (plus ``out.meta.json``) or to ``stdout``."""
    text = table_to_csv(table)
    if out is None:
        stdout.write(text)
        return
    meta = json.dumps(table.metadata, sort_keys=True, indent=2, default=_json_default)
    atomic_write(out, text)
    atomic_write(out + ".meta.json", meta + "\n")


def format_params(table: ResultTable) -> str:
    """Coupling table with both the angular and the cyclic reading."""
    row = dict(zip(table.header, table.rows()[0]))
    lines = [f"{'quantity':<26}{'rad/s':>16}{'cyclic Hz (value/2pi)':>24}"]
    for name, value in row.items():
        if name.endswith("_rad_per_s"):
            label = name[: -len("_rad_per_s")]
            if value is None:
                lines.append(f"{label:<26}{'n/a':>16}{'n/a':>24}")
            else:
                lines.append(f"{label:<26}{value:>16.6g}{cyclic_reading(value):>24.6g}")
    lines.append("")
    lines.append(f"{'regime check':<26}{'value':>16}{'ok':>24}")
    for name, value in row.items():
        if f"{name}_ok" in row:
            lines.append(f"{name:<26}{value:>16.4g}{format_cell(row[name + '_ok']):>24}")
    return "\n".join(lines) + "\n"


def _format_summary(table: ResultTable) -> str:
    summary = table.metadata.get("summary", {})
    lines = []
    for k, v in summary.items():
        if isinstance(v, dict):
            for sub, val in v.items():
                lines.append(f"{k}.{sub}: {format_cell(val)}")
        elif isinstance(v, list):
            lines.extend(f"{k}: {item}" for item in v)
        else:
            lines.append(f"{k}: {format_cell(v)}")
    return "\n".join(lines) + "\n"


# -- entry point ----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hespin", description="Electron-on-helium spin dynamics experiments.")
    parser.add_argument("--version", action="version", version=f"hespin {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_text, out=True):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="config file (default: reference device)")
        if out:
            p.add_argument("--out", help="CSV path; a .meta.json sidecar is written next to it")
        return p

    add("params", "print the derived coupling table")
    add("fig3", "spin to distant vibration transfer, full against reduced model")
    add("fig4", "spin-spin flip-flop, full against reduced model")
    g = add("gate", "simulate a gate and print its report")
    g.add_argument("which", choices=("phase", "cnot1", "cnot2"))
    add("sweep", "sweep one device parameter")
    v = sub.add_parser("validate", help="parse a config and print it fully resolved")
    v.add_argument("--config", required=True)
    return parser


def _load(path: str | None) -> RunConfig:
    if path is None:
        return default_config()
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError([(None, f"cannot read {path}: {exc}")]) from exc
    return parse_config(text)


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = _load(args.config)
        if args.command == "validate":
            stdout.write(serialize_config(config))
            return 0
        if args.command == "sweep" and not config.sweep_param:
            raise ConfigError([(None, "sweep needs sweep_param and sweep_values in [experiment]")])
    except ConfigError as exc:
        stderr.write(f"config error:\n{exc}\n")
        return 1

    try:
        if args.command == "params":
            table = run_experiment(config.spec("params_table"))
            stdout.write(format_params(table))
            if args.out:
                write_table(table, args.out, stdout)
        elif args.command in ("fig3", "fig4", "sweep"):
            table = run_experiment(config.spec(args.command))
            write_table(table, args.out, stdout)
            if args.command != "sweep":
                stderr.write(_format_summary(table))
        else:
            name = {"phase": "phase_gate", "cnot1": "cnot_single", "cnot2": "cnot_two_spin"}
            table = run_experiment(config.spec(name[args.which]))
            reports = table.payload if isinstance(table.payload, list) else [table.payload]
            stdout.write("\n\n".join(r.summary() for r in reports) + "\n")
            if args.out:
                write_table(table, args.out, stdout)
    except (DomainError, IntegrationError, ArithmeticError, np.linalg.LinAlgError,
            OSError) as exc:
        stderr.write(f"numerical failure: {type(exc).__name__}: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
