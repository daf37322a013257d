"""
Experiment configuration files.

Plain text with ``[section]`` headers and ``key = value`` lines, parsed by
:mod:`configparser`. Every key is validated against the table below and
every module invariant is re-checked at load; errors carry the file path and
line of the offending entry.

Sections and keys::

    [thermo]      R, a, gamma, theta_star, mu1, lambda1
    [contact]     rho_minus, theta_minus, rho_plus
    [grid]        d, n
    [solver]      nu, kappa, cfl, t_end, reconstruction, rho_floor, max_steps
    [init]        alpha, width_cells, mode
    [shift]       delta, epsilon, substeps, frame_stride
    [experiment]  seed, alphas, nu_values, kappa_ratio, converge_alpha0,
                  converge_levels, static_modes, workers, baseline
    [commutator]  n, delta, epsilons, train_pairs, heldout_pairs
"""

import configparser
import re
from dataclasses import dataclass, field, fields, replace

from .thermo import ThermoParams
from .exceptions import ConfigError, NSFCError
from .functionals import make_contact
from .fields import MollifierKernel, PeriodicGrid
from .shift import ShiftConfig
from .solver import SolverConfig

__all__ = ["Config", "InitConfig", "ExperimentConfig", "CommutatorConfig",
           "parse_config", "parse_config_text", "dump_config"]


@dataclass(frozen=True)
class InitConfig:
    alpha: float = 0.05
    width_cells: float = 0.0
    mode: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    alphas: tuple = (0.02, 0.04, 0.08)
    nu_values: tuple = (4e-3, 2e-3, 1e-3)
    kappa_ratio: float = 1.0
    converge_alpha0: float = 0.1
    converge_levels: int = 5
    static_modes: int = 3
    workers: int = 0
    baseline: bool = True


@dataclass(frozen=True)
class CommutatorConfig:
    n: int = 1024
    delta: float = 0.05
    epsilons: tuple = (0.1, 0.05, 0.025)
    train_pairs: int = 200
    heldout_pairs: int = 20


@dataclass(frozen=True)
class ContactConfig:
    rho_minus: float = 1.0
    theta_minus: float = 2.0
    rho_plus: float = 0.5


@dataclass(frozen=True)
class GridConfig:
    d: int = 1
    n: int = 512


@dataclass(frozen=True)
class ShiftSection:
    delta: float = 0.05
    epsilon: float = 0.05
    substeps: int = 4
    frame_stride: int = 4


@dataclass(frozen=True)
class Config:
    thermo: ThermoParams = field(default_factory=ThermoParams)
    contact: ContactConfig = field(default_factory=ContactConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    init: InitConfig = field(default_factory=InitConfig)
    shift: ShiftSection = field(default_factory=ShiftSection)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    commutator: CommutatorConfig = field(default_factory=CommutatorConfig)

    # derived objects
    def params(self):
        return self.thermo

    def make_contact(self):
        c = self.contact
        return make_contact(self.thermo, c.rho_minus, c.theta_minus, c.rho_plus)

    def make_grid(self):
        return PeriodicGrid(self.grid.d, self.grid.n)

    def shift_config(self):
        s = self.shift
        return ShiftConfig(delta=s.delta, epsilon=s.epsilon, substeps=s.substeps)

    def width(self):
        return self.init.width_cells / self.grid.n


_SECTIONS = {
    "thermo": ThermoParams,
    "contact": ContactConfig,
    "grid": GridConfig,
    "solver": SolverConfig,
    "init": InitConfig,
    "shift": ShiftSection,
    "experiment": ExperimentConfig,
    "commutator": CommutatorConfig,
}
# keys that cannot be set from a file
_HIDDEN = {("solver", "dissipation_sign")}


def _convert(raw, default, key):
    text = raw.strip()
    if isinstance(default, bool):
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{key} expects a boolean, got {text!r}")
    if isinstance(default, tuple):
        items = [s for s in re.split(r"[,\s]+", text) if s]
        if not items:
            raise ValueError(f"{key} expects a nonempty list")
        return tuple(float(s) for s in items)
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if default is None:
        return None if text.lower() in ("", "none") else int(text)
    return text


def _line_index(text):
    """Map (section, key) to 1-based line numbers, and section to its header line."""
    index = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        m = re.match(r"^\[([^\]]+)\]", stripped)
        if m:
            section = m.group(1).strip()
            index.setdefault((section, None), lineno)
            continue
        m = re.match(r"^([^=:#;\s][^=:]*?)\s*[=:]", stripped)
        if m and section is not None:
            index.setdefault((section, m.group(1).strip()), lineno)
    return index


def parse_config_text(text, path="<config>"):
    """Parse and validate configuration text."""
    parser = configparser.ConfigParser(interpolation=None, strict=True,
                                       inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(path))
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside of any [section]", path, exc.lineno) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(exc.message.split(": ", 1)[-1], path, exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError("expected 'key = value'", path, lineno) from None
    lines = _line_index(text)

    sections = {}
    for name in parser.sections():
        if name not in _SECTIONS:
            raise ConfigError(f"unknown section [{name}]", path, lines.get((name, None)))
        cls = _SECTIONS[name]
        defaults = cls()
        known = {f.name: getattr(defaults, f.name) for f in fields(cls)}
        values = {}
        for key, raw in parser.items(name):
            where = lines.get((name, key))
            if key not in known or (name, key) in _HIDDEN:
                raise ConfigError(f"unknown key '{key}' in [{name}]", path, where)
            try:
                values[key] = _convert(raw, known[key], key)
            except ValueError as exc:
                raise ConfigError(f"bad value for '{key}': {exc}", path, where) from None
        try:
            sections[name] = replace(defaults, **values)
        except NSFCError as exc:
            key = _guess_key(str(exc), values)
            raise ConfigError(str(exc), path, lines.get((name, key), lines.get((name, None)))) \
                from None

    cfg = Config(**sections)
    _cross_validate(cfg, path, lines)
    return cfg


def _guess_key(message, values):
    for key in values:
        if re.search(rf"\b{re.escape(key)}\b", message):
            return key
    return next(iter(values), None)


def _cross_validate(cfg, path, lines):
    """Checks involving more than one section."""
    def fail(msg, section, keys):
        for k in keys:
            if (section, k) in lines:
                raise ConfigError(msg, path, lines[(section, k)])
        raise ConfigError(msg, path, lines.get((section, None)))

    try:
        cfg.make_contact()
    except NSFCError as exc:
        fail(str(exc), "contact", ["rho_plus", "theta_minus", "rho_minus"])
    try:
        grid = cfg.make_grid()
    except NSFCError as exc:
        fail(str(exc), "grid", ["n", "d"])
    for key in ("delta", "epsilon"):
        try:
            MollifierKernel(grid, getattr(cfg.shift, key))
        except NSFCError as exc:
            fail(f"{key}: {exc}", "shift", [key])
    if cfg.shift.substeps < 1 or cfg.shift.frame_stride < 1:
        fail("substeps and frame_stride must be at least 1", "shift",
             ["substeps", "frame_stride"])
    w = cfg.init.width_cells
    if w != 0 and w < 4:
        fail(f"width_cells must be 0 (sharp contact) or at least 4, got {w}", "init",
             ["width_cells"])
    if cfg.init.alpha < 0:
        fail("alpha must be nonnegative", "init", ["alpha"])
    if cfg.init.mode < 1:
        fail("mode must be a positive integer", "init", ["mode"])
    ex = cfg.experiment
    if any(a < 0 for a in ex.alphas) or any(v < 0 for v in ex.nu_values):
        fail("alphas and nu_values must be nonnegative", "experiment", ["alphas", "nu_values"])
    if ex.converge_levels < 4:
        fail("converge_levels must be at least 4", "experiment", ["converge_levels"])
    if ex.kappa_ratio < 0:
        fail("kappa_ratio must be nonnegative", "experiment", ["kappa_ratio"])
    if ex.static_modes < 1:
        fail("static_modes must be at least 1", "experiment", ["static_modes"])
    if ex.seed < 0:
        fail("seed must be nonnegative", "experiment", ["seed"])
    cm = cfg.commutator
    try:
        cgrid = PeriodicGrid(1, cm.n)
        for e in (cm.delta,) + tuple(cm.epsilons):
            MollifierKernel(cgrid, e)
    except NSFCError as exc:
        fail(str(exc), "commutator", ["epsilons", "delta", "n"])
    if cm.train_pairs < 1 or cm.heldout_pairs < 1:
        fail("train_pairs and heldout_pairs must be positive", "commutator",
             ["train_pairs", "heldout_pairs"])


def parse_config(path):
    """Read and validate a configuration file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError:
        raise ConfigError("configuration file not found", path) from None
    except OSError as exc:
        raise ConfigError(f"cannot read configuration: {exc.strerror}", path) from None
    return parse_config_text(text, path)


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return "none"
    return str(value)


def dump_config(cfg):
    """Canonical text of a configuration, every key written out."""
    out = []
    for name, cls in _SECTIONS.items():
        section = getattr(cfg, name)
        out.append(f"[{name}]")
        for f in fields(cls):
            if (name, f.name) in _HIDDEN:
                continue
            out.append(f"{f.name} = {_format(getattr(section, f.name))}")
        out.append("")
    return "\n".join(out)
