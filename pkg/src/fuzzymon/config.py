"""Flat key-value experiment configuration with line-level diagnostics.

The file format is deliberately primitive so any tooling can read it: one
``dotted.key = value`` pair per line, ``#`` comments, no nesting.  Values
are floats, integers, booleans, comma-separated lists, or complex literals
(``0.6+0j``).  Example::

    system.levels     = 0.0, 1.0
    system.coupling_v = 1.0
    measurement.kappa = 1.6
    measurement.duration = 9.42477796076938
    measurement.dt    = 0.015707963267948967
    initial.coeffs    = 1+0j, 0j
    readout.kind      = most-probable
    sample.n_samples  = 10000
    sample.seed       = 7

Every violated invariant is reported with the offending line and key.
Configurations round-trip losslessly through ``to_text``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from fuzzymon.core import AmplitudeState, MeasurementSpec, SystemSpec

__all__ = ["ConfigError", "ExperimentConfig"]

READOUT_KINDS = ("constant", "file", "most-probable")

_KNOWN_PREFIXES = (
    "system.",
    "measurement.",
    "initial.",
    "readout.",
    "evolve.",
    "sample.",
    "figure.",
    "regime.",
)


class ConfigError(ValueError):
    """Configuration problem with a file/line/key diagnostic."""


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (complex, np.complexfloating)):
        return repr(complex(value)).strip("()")
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _fmt_list(values) -> str:
    return ", ".join(_fmt(v) for v in values)


@dataclass(frozen=True)
class ExperimentConfig:
    """Typed view of a config file plus the machinery to reproduce it."""

    system: SystemSpec
    measurement: MeasurementSpec
    initial: AmplitudeState
    readout_kind: str = "constant"
    readout_level_index: int = 0
    readout_path: str | None = None
    readout_self_consistent: bool = False
    record_stride: int = 1
    n_samples: int = 1000
    seed: int = 0
    band_widths: tuple = (2.0, 3.0)
    store_readouts: bool = False
    workers: int = 0
    figure_ratio: float | None = None
    figure_band_widths: tuple = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0)
    figure_smooth_window: float = 0.25
    figure_n_samples: int = 10000
    much_ratio: float = 10.0
    same_order: float = 3.0

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_text(text)

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        entries = _parse_entries(text)
        getter = _Getter(entries)

        levels = getter.float_list("system.levels", required=True)
        coupling = _build_coupling(getter, len(levels))
        try:
            system = SystemSpec(levels, coupling)
        except ValueError as exc:
            raise ConfigError(getter.diag("system.levels", str(exc))) from exc

        kappa = getter.float("measurement.kappa", required=True)
        duration = getter.float("measurement.duration", required=True)
        dt = getter.float("measurement.dt", required=True)
        try:
            measurement = MeasurementSpec(kappa=kappa, duration=duration, dt=dt)
        except ValueError as exc:
            raise ConfigError(getter.diag("measurement.dt", str(exc))) from exc

        coeffs = getter.complex_list("initial.coeffs", required=True)
        try:
            initial = AmplitudeState(coeffs)
        except ValueError as exc:
            raise ConfigError(getter.diag("initial.coeffs", str(exc))) from exc
        if initial.dim != system.n_levels:
            raise ConfigError(
                getter.diag("initial.coeffs", "length does not match system.levels")
            )
        if abs(initial.norm_squared - 1.0) > 1e-9:
            raise ConfigError(
                getter.diag("initial.coeffs", "initial state must be normalised")
            )

        kind = getter.string("readout.kind", "constant")
        if kind not in READOUT_KINDS:
            raise ConfigError(
                getter.diag("readout.kind", f"must be one of {READOUT_KINDS}")
            )
        cfg = cls(
            system=system,
            measurement=measurement,
            initial=initial,
            readout_kind=kind,
            readout_level_index=getter.int("readout.level_index", 0),
            readout_path=getter.string("readout.path", None),
            readout_self_consistent=getter.bool("readout.self_consistent", False),
            record_stride=getter.int("evolve.record_stride", 1),
            n_samples=getter.int("sample.n_samples", 1000),
            seed=getter.int("sample.seed", 0),
            band_widths=tuple(getter.float_list("sample.band_widths", [2.0, 3.0])),
            store_readouts=getter.bool("sample.store_readouts", False),
            workers=getter.int("sample.workers", 0),
            figure_ratio=getter.float("figure.ratio", None),
            figure_band_widths=tuple(
                getter.float_list(
                    "figure.band_widths", [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]
                )
            ),
            figure_smooth_window=getter.float("figure.smooth_window", 0.25),
            figure_n_samples=getter.int("figure.n_samples", 10000),
            much_ratio=getter.float("regime.much_ratio", 10.0),
            same_order=getter.float("regime.same_order", 3.0),
        )
        getter.finish()
        cfg._validate_extras(getter)
        return cfg

    def _validate_extras(self, getter: "_Getter") -> None:
        if self.readout_kind == "file" and not self.readout_path:
            raise ConfigError(getter.diag("readout.path", "required for kind=file"))
        if not 0 <= self.readout_level_index < self.system.n_levels:
            raise ConfigError(
                getter.diag("readout.level_index", "level index out of range")
            )
        if self.record_stride < 1:
            raise ConfigError(getter.diag("evolve.record_stride", "must be >= 1"))
        if self.n_samples < 1:
            raise ConfigError(getter.diag("sample.n_samples", "must be >= 1"))
        if self.figure_ratio is not None and not self.figure_ratio > 0:
            raise ConfigError(getter.diag("figure.ratio", "must be > 0"))
        if not self.figure_smooth_window > 0:
            raise ConfigError(getter.diag("figure.smooth_window", "must be > 0"))
        if self.much_ratio <= 1 or self.same_order < 1:
            raise ConfigError(
                getter.diag("regime.much_ratio", "thresholds must exceed 1")
            )

    def to_text(self) -> str:
        lines = [
            f"system.levels = {_fmt_list(self.system.levels)}",
        ]
        for i in range(self.system.n_levels):
            lines.append(
                f"system.coupling_row.{i} = {_fmt_list(self.system.coupling[i])}"
            )
        lines += [
            f"measurement.kappa = {_fmt(self.measurement.kappa)}",
            f"measurement.duration = {_fmt(self.measurement.duration)}",
            f"measurement.dt = {_fmt(self.measurement.dt)}",
            f"initial.coeffs = {_fmt_list(self.initial.coeffs)}",
            f"readout.kind = {self.readout_kind}",
            f"readout.level_index = {self.readout_level_index}",
        ]
        if self.readout_path:
            lines.append(f"readout.path = {self.readout_path}")
        lines += [
            f"readout.self_consistent = {_fmt(self.readout_self_consistent)}",
            f"evolve.record_stride = {self.record_stride}",
            f"sample.n_samples = {self.n_samples}",
            f"sample.seed = {self.seed}",
            f"sample.band_widths = {_fmt_list(self.band_widths)}",
            f"sample.store_readouts = {_fmt(self.store_readouts)}",
            f"sample.workers = {self.workers}",
        ]
        if self.figure_ratio is not None:
            lines.append(f"figure.ratio = {_fmt(self.figure_ratio)}")
        lines += [
            f"figure.band_widths = {_fmt_list(self.figure_band_widths)}",
            f"figure.smooth_window = {_fmt(self.figure_smooth_window)}",
            f"figure.n_samples = {self.figure_n_samples}",
            f"regime.much_ratio = {_fmt(self.much_ratio)}",
            f"regime.same_order = {_fmt(self.same_order)}",
        ]
        return "\n".join(lines) + "\n"

    def sha256(self) -> str:
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()

    def with_seed(self, seed: int) -> "ExperimentConfig":
        from dataclasses import replace

        return replace(self, seed=int(seed))


def _parse_entries(text: str) -> dict:
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key.startswith(_KNOWN_PREFIXES):
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = (value, lineno)
    return entries


def _build_coupling(getter: "_Getter", n: int):
    v = getter.float("system.coupling_v", None)
    rows = [getter.complex_list(f"system.coupling_row.{i}", None) for i in range(n)]
    have_rows = any(r is not None for r in rows)
    if v is not None and have_rows:
        raise ConfigError(
            getter.diag("system.coupling_v", "give either coupling_v or coupling rows")
        )
    if v is not None:
        if n != 2:
            raise ConfigError(
                getter.diag("system.coupling_v", "needs a two-level system")
            )
        return [[0.0, v], [v, 0.0]]
    if have_rows:
        if any(r is None for r in rows):
            raise ConfigError(
                getter.diag("system.levels", "incomplete coupling rows")
            )
        if any(len(r) != n for r in rows):
            raise ConfigError(getter.diag("system.levels", "ragged coupling rows"))
        return rows
    return None


class _Getter:
    """Typed access to parsed entries, tracking unused keys."""

    def __init__(self, entries: dict):
        self.entries = entries
        self.used: set[str] = set()

    def diag(self, key: str, message: str) -> str:
        if key in self.entries:
            return f"line {self.entries[key][1]}: {key}: {message}"
        return f"{key}: {message}"

    def _raw(self, key, default, required):
        if key not in self.entries:
            if required:
                raise ConfigError(f"{key}: required key missing")
            return default, False
        self.used.add(key)
        return self.entries[key][0], True

    def string(self, key, default=None, required=False):
        raw, present = self._raw(key, default, required)
        return raw if present else default

    def float(self, key, default=None, required=False):
        raw, present = self._raw(key, default, required)
        if not present:
            return default
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(self.diag(key, f"not a number: {raw!r}")) from exc

    def int(self, key, default=None, required=False):
        raw, present = self._raw(key, default, required)
        if not present:
            return default
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(self.diag(key, f"not an integer: {raw!r}")) from exc

    def bool(self, key, default=None, required=False):
        raw, present = self._raw(key, default, required)
        if not present:
            return default
        lowered = raw.strip().lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
        raise ConfigError(self.diag(key, f"not a boolean: {raw!r}"))

    def float_list(self, key, default=None, required=False):
        raw, present = self._raw(key, default, required)
        if not present:
            return default
        try:
            return [float(part) for part in str(raw).split(",") if part.strip()]
        except ValueError as exc:
            raise ConfigError(self.diag(key, f"not a number list: {raw!r}")) from exc

    def complex_list(self, key, default=None, required=False):
        raw, present = self._raw(key, default, required)
        if not present:
            return default
        try:
            return [
                complex(part.strip().replace(" ", ""))
                for part in str(raw).split(",")
                if part.strip()
            ]
        except ValueError as exc:
            raise ConfigError(self.diag(key, f"not a complex list: {raw!r}")) from exc

    def finish(self):
        leftovers = set(self.entries) - self.used
        if leftovers:
            key = sorted(leftovers)[0]
            raise ConfigError(self.diag(key, "unknown or unsupported key"))
