"""Run configuration files: sectioned key = value text with line-precise validation.

Numeric values are arithmetic expressions over ``pi`` and the static
eigenfrequencies ``k1``, ``k2``, ... of the configured cavity, so a drive
can be written as ``omega_L = 2*k1``. Sections::

    [cavity]      chi0, b0L, b0R, f0L, f0R, V0L, V0R
    [drive]       epsilon, epsilon_L, epsilon_R, omega_L, omega_R, phi_L, phi_R,
                  t_F, t_max, checkpoints
    [integrator]  n_modes, dt, record_stride
    [output]      dir, prefix, trajectory, convention
    [analysis]    mode, floor, tolerance, fit_end
    [case NAME]   dotted overrides such as ``drive.phi_R = pi``
    [sweep]       observable, mode, times, workers, name   (sweep plans only)
    [axis NAME]   path, min, max, center, span, count, scale (sweep plans only)
"""

from __future__ import annotations

import ast
import configparser
import math
import operator
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .cavity import CavityConfig, ModeTable, cached_spectrum
from .dynamics import DriveConfig, IntegratorConfig
from .errors import ConfigError, StepTooLarge

FLOAT, INT, STR, BOOL, FLOATS = "float", "int", "str", "bool", "floats"

SCHEMA = {
    "cavity": {"chi0": FLOAT, "b0L": FLOAT, "b0R": FLOAT, "f0L": FLOAT, "f0R": FLOAT,
               "V0L": FLOAT, "V0R": FLOAT},
    "drive": {"epsilon": FLOAT, "epsilon_L": FLOAT, "epsilon_R": FLOAT, "omega_L": FLOAT,
              "omega_R": FLOAT, "phi_L": FLOAT, "phi_R": FLOAT, "t_F": FLOAT, "t_max": FLOAT,
              "checkpoints": FLOATS},
    "integrator": {"n_modes": INT, "dt": FLOAT, "record_stride": INT},
    "output": {"dir": STR, "prefix": STR, "trajectory": BOOL, "convention": STR},
    "analysis": {"mode": INT, "floor": FLOAT, "tolerance": FLOAT, "fit_end": FLOAT},
    "sweep": {"observable": STR, "mode": INT, "times": FLOATS, "workers": INT, "name": STR},
}
AXIS_SCHEMA = {"path": STR, "min": FLOAT, "max": FLOAT, "center": FLOAT, "span": FLOAT,
               "count": INT, "scale": STR}

DEFAULTS = {
    "cavity": {"chi0": "0.05", "b0L": "1", "b0R": "1", "f0L": "0.45*pi", "f0R": "0.45*pi"},
    "drive": {"epsilon": "0.01", "omega_L": "2*k1", "omega_R": "2*k1", "phi_L": "0",
              "phi_R": "0", "t_F": "100", "t_max": "120"},
    "integrator": {"n_modes": "10", "record_stride": "100"},
    "output": {"dir": "out", "prefix": "run", "trajectory": "false", "convention": "plain"},
    "analysis": {"mode": "1", "floor": "10", "tolerance": "0.1"},
}

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_FUNCS = {"sqrt": math.sqrt, "sin": math.sin, "cos": math.cos, "acos": math.acos,
          "atan": math.atan, "log": math.log, "exp": math.exp}
_KNAME = re.compile(r"^k([1-9][0-9]*)$")


def k_indices(expr: str) -> set:
    """Eigenfrequency indices referenced by ``expr`` (k1 -> 1)."""
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError:
        return set()
    return {int(m.group(1)) for node in ast.walk(tree) if isinstance(node, ast.Name)
            for m in [_KNAME.match(node.id)] if m}


def evaluate(expr: str, k=None) -> float:
    """Evaluate an arithmetic expression over numbers, ``pi``, ``k1..kN`` and a few functions."""
    try:
        tree = ast.parse(expr.strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {expr!r}") from exc

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Name):
            if node.id == "pi":
                return math.pi
            m = _KNAME.match(node.id)
            if m:
                i = int(m.group(1))
                if k is None or i > len(k):
                    raise ConfigError(f"{node.id} is not available in {expr!r}")
                return float(k[i - 1])
            raise ConfigError(f"unknown name {node.id!r} in {expr!r}")
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords:
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ConfigError(f"unsupported syntax in expression {expr!r}")

    try:
        return float(ev(tree))
    except (ArithmeticError, ValueError) as exc:
        raise ConfigError(f"cannot evaluate {expr!r}: {exc}") from exc


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


@dataclass
class Entry:
    value: str
    line: int | None = None


@dataclass
class RunConfig:
    """Raw configuration text values with their source lines; resolved on demand."""

    sections: dict = field(default_factory=dict)
    cases: dict = field(default_factory=dict)
    axes: dict = field(default_factory=dict)
    source: str = "<config>"

    # ---- access -------------------------------------------------------------
    def where(self, section, key) -> str:
        e = self.sections.get(section, {}).get(key)
        line = e.line if e is not None else None
        return f"{self.source}:{line}" if line else self.source

    def raw(self, section, key, overrides=None):
        if overrides and (section, key) in overrides:
            return overrides[(section, key)]
        e = self.sections.get(section, {}).get(key)
        if e is not None:
            return e
        d = DEFAULTS.get(section, {}).get(key)
        return Entry(d) if d is not None else None

    def _error(self, entry, section, key, msg):
        loc = f"{self.source}:{entry.line}" if entry is not None and entry.line else self.source
        return ConfigError(f"{loc}: [{section}] {key}: {msg}")

    def get(self, section, key, k=None, overrides=None, default=None):
        entry = self.raw(section, key, overrides)
        if entry is None:
            return default
        kind = (SCHEMA[section][key] if section in SCHEMA else AXIS_SCHEMA[key])
        if isinstance(entry.value, (int, float)) and not isinstance(entry.value, bool):
            return int(entry.value) if kind == INT else float(entry.value)
        text = str(entry.value)
        try:
            if kind == FLOAT:
                return evaluate(text, k)
            if kind == INT:
                v = evaluate(text, k)
                if v != int(v):
                    raise ConfigError(f"expected an integer, got {text!r}")
                return int(v)
            if kind == BOOL:
                return _parse_bool(text)
            if kind == FLOATS:
                return tuple(evaluate(p, k) for p in text.split(",") if p.strip())
            return text.strip()
        except ConfigError as exc:
            raise self._error(entry, section, key, str(exc)) from None

    def needs_k(self, overrides=None) -> int:
        """Highest eigenfrequency index referenced anywhere outside [cavity]."""
        top = 0
        for section, keys in SCHEMA.items():
            if section == "cavity":
                continue
            for key in keys:
                e = self.raw(section, key, overrides)
                if e is not None and isinstance(e.value, str):
                    top = max([top, *k_indices(e.value)])
        for ax in self.axes.values():
            for key in ("min", "max", "center"):
                e = ax.get(key)
                if e is not None:
                    top = max([top, *k_indices(e.value)])
        return top

    # ---- resolution ---------------------------------------------------------
    def cavity(self, overrides=None) -> CavityConfig:
        vals = {}
        for key in SCHEMA["cavity"]:
            entry = self.raw("cavity", key, overrides)
            if entry is not None:
                if k_indices(str(entry.value)):
                    raise self._error(entry, "cavity", key, "cavity parameters cannot depend on k")
                vals[key] = self.get("cavity", key, overrides=overrides)
        for side in "LR":
            # given the Josephson scale but no b0, take b0 = V0 cos(f0)
            explicit = ("cavity", "b0" + side) in (overrides or {}) or \
                "b0" + side in self.sections.get("cavity", {})
            if not explicit and "V0" + side in vals:
                vals["b0" + side] = vals["V0" + side] * math.cos(vals["f0" + side])
        try:
            return CavityConfig(**vals)
        except ConfigError as exc:
            key = "V0L" if "L boundary" in str(exc) or "f0L" in str(exc) else \
                  "V0R" if "R boundary" in str(exc) or "f0R" in str(exc) else "chi0"
            raise self._error(self.raw("cavity", key, overrides), "cavity", key, str(exc)) from None

    def n_modes(self, overrides=None) -> int:
        n = self.get("integrator", "n_modes", overrides=overrides)
        if n < 2:
            raise self._error(self.raw("integrator", "n_modes", overrides), "integrator", "n_modes",
                              f"must be >= 2, got {n}")
        return n

    def spectrum(self, overrides=None, n_modes=None) -> ModeTable:
        n = n_modes or self.n_modes(overrides)
        n = max(n, self.needs_k(overrides))
        table = cached_spectrum(self.cavity(overrides), n)
        return table

    def resolve(self, case: str | None = None, overrides=None, n_modes=None) -> Resolved:
        """Build every run object, enforcing all invariants with source locations."""
        ov = dict(self.cases.get(case, {})) if case else {}
        if case and case not in self.cases:
            raise ConfigError(f"{self.source}: unknown case {case!r}")
        ov.update(overrides or {})
        n = n_modes or self.n_modes(ov)
        full = self.spectrum(ov, n)
        k = full.k
        table = full.truncated(n)
        d = {}
        for key in SCHEMA["drive"]:
            if key == "checkpoints":
                continue
            v = self.get("drive", key, k, ov)
            if v is not None:
                d[key] = v
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                drive = DriveConfig(**d)
        except ConfigError as exc:
            key = "t_F" if "t_F" in str(exc) else "epsilon" if "epsilon" in str(exc) else "omega_L"
            raise self._error(self.raw("drive", key, ov), "drive", key, str(exc)) from None
        for w in caught:
            warnings.warn(f"{self.where('drive', 'epsilon')}: {w.message}", stacklevel=2)
        dt = self.get("integrator", "dt", k, ov)
        try:
            icfg = IntegratorConfig(n_modes=n, dt=dt,
                                    record_stride=self.get("integrator", "record_stride", k, ov))
            icfg.step(table)
        except ConfigError as exc:
            key = "n_modes" if "n_modes" in str(exc) else "record_stride" if "stride" in str(exc) else "dt"
            raise self._error(self.raw("integrator", key, ov), "integrator", key, str(exc)) from None
        except StepTooLarge as exc:
            raise StepTooLarge(f"{self.where('integrator', 'dt')}: [integrator] dt: {exc}") from None
        checkpoints = self.get("drive", "checkpoints", k, ov, default=())
        for c in checkpoints:
            if not 0 < c <= drive.t_max:
                raise self._error(self.raw("drive", "checkpoints", ov), "drive", "checkpoints",
                                  f"checkpoint {c} outside (0, t_max]")
        conv = self.get("output", "convention", k, ov)
        if conv not in ("plain", "weighted"):
            raise self._error(self.raw("output", "convention", ov), "output", "convention",
                              f"must be 'plain' or 'weighted', got {conv!r}")
        mode = self.get("analysis", "mode", k, ov)
        if not 1 <= mode <= n:
            raise self._error(self.raw("analysis", "mode", ov), "analysis", "mode",
                              f"must be in 1..{n}")
        return Resolved(
            cavity=table.config, table=table, drive=drive, integrator=icfg,
            checkpoints=tuple(checkpoints), out_dir=self.get("output", "dir", k, ov),
            prefix=self.get("output", "prefix", k, ov) + (f"_{case}" if case else ""),
            trajectory=self.get("output", "trajectory", k, ov), convention=conv,
            mode=mode, floor=self.get("analysis", "floor", k, ov),
            tolerance=self.get("analysis", "tolerance", k, ov),
            fit_end=self.get("analysis", "fit_end", k, ov, default=None),
        )

    # ---- emission -----------------------------------------------------------
    def dump(self) -> str:
        """Re-emit the configuration as text; loading the result gives the same runs."""
        lines = []
        for section, entries in self.sections.items():
            lines.append(f"[{section}]")
            lines += [f"{key} = {e.value}" for key, e in entries.items()]
            lines.append("")
        for name, ax in self.axes.items():
            lines.append(f"[axis {name}]")
            lines += [f"{key} = {e.value}" for key, e in ax.items()]
            lines.append("")
        for name, ov in self.cases.items():
            lines.append(f"[case {name}]")
            lines += [f"{s}.{key} = {e.value}" for (s, key), e in ov.items()]
            lines.append("")
        return "\n".join(lines)


@dataclass(frozen=True)
class Resolved:
    cavity: CavityConfig
    table: ModeTable
    drive: DriveConfig
    integrator: IntegratorConfig
    checkpoints: tuple
    out_dir: str
    prefix: str
    trajectory: bool
    convention: str
    mode: int
    floor: float
    tolerance: float
    fit_end: float | None


def _line_index(text: str) -> dict:
    """(section, key) -> 1-based line number, by a light scan of the raw text."""
    index, section = {}, None
    for no, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        m = re.match(r"^\[(.+)\]$", s)
        if m:
            section = m.group(1).strip()
            index[(section, None)] = no
            continue
        m = re.match(r"^([^=:]+?)\s*[=:]", s)
        if m and section is not None:
            index.setdefault((section, m.group(1).strip()), no)
    return index


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case-sensitive (b0L vs b0l)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    lines = _line_index(text)
    cfg = RunConfig(source=source)

    def err(section, key, msg):
        no = lines.get((section, key)) or lines.get((section, None))
        loc = f"{source}:{no}" if no else source
        return ConfigError(f"{loc}: [{section}]{' ' + key if key else ''}: {msg}")

    for section in parser.sections():
        items = dict(parser.items(section))
        if section.startswith("case "):
            name = section[5:].strip()
            ov = {}
            for dotted, value in items.items():
                if "." not in dotted:
                    raise err(section, dotted, "override keys must be written section.key")
                s, key = dotted.split(".", 1)
                if s not in SCHEMA or key not in SCHEMA[s] or s == "sweep":
                    raise err(section, dotted, "unknown key")
                ov[(s, key)] = Entry(value, lines.get((section, dotted)))
            cfg.cases[name] = ov
            continue
        if section.startswith("axis "):
            name = section[5:].strip()
            for key in items:
                if key not in AXIS_SCHEMA:
                    raise err(section, key, f"unknown key; expected one of {sorted(AXIS_SCHEMA)}")
            cfg.axes[name] = {key: Entry(v, lines.get((section, key))) for key, v in items.items()}
            continue
        if section not in SCHEMA:
            raise err(section, None, f"unknown section; expected one of {sorted(SCHEMA)}, "
                                     "'case NAME' or 'axis NAME'")
        for key in items:
            if key not in SCHEMA[section]:
                raise err(section, key, f"unknown key; expected one of {sorted(SCHEMA[section])}")
        cfg.sections[section] = {key: Entry(v, lines.get((section, key))) for key, v in items.items()}
    for (section, key), entry in [((s, k), e) for s, d in cfg.sections.items() for k, e in d.items()]:
        if section != "sweep":
            kind = SCHEMA[section][key]
            if kind in (FLOAT, INT, FLOATS):
                try:
                    for part in str(entry.value).split(","):
                        ast.parse(part.strip(), mode="eval")
                except SyntaxError:
                    raise cfg._error(entry, section, key, f"cannot parse {entry.value!r}") from None
    return cfg


def load_config(path, validate: bool = True) -> RunConfig:
    """Read a configuration file; with ``validate`` every case is resolved once."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    cfg = parse_config(text, source=str(path))
    if validate:
        cfg.resolve()
        for case in cfg.cases:
            cfg.resolve(case)
    return cfg
