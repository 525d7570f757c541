"""INI-style run configuration.

Sections [grid], [weights], [solver], [sweep], [audit] and [output]; every
key is optional and unknown keys are rejected.  render_config writes every
field, floats with 17 significant digits, so parse -> render -> parse is the
identity.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, fields, replace

from .errors import ParseError, ValidationError
from .solver import BulkVortex, Custom, RunConfig, Shear
from .weights import WeightParams


@dataclass(frozen=True)
class SweepPlan:
    nus: tuple = (4e-3, 1e-3, 2.5e-4)
    c_form: float = 0.25
    workers: int = 1


@dataclass(frozen=True)
class AuditPlan:
    seed: int = 0
    probes: int = 32
    densify: int = 0


@dataclass(frozen=True)
class OutputPlan:
    dir: str = "blgl_out"
    snapshots: bool = True
    figures: bool = True


@dataclass(frozen=True)
class Config:
    run: RunConfig
    sweep: SweepPlan = SweepPlan()
    audit: AuditPlan = AuditPlan()
    output: OutputPlan = OutputPlan()


GRID_DEFAULTS = dict(K=8, J=128, Ly=4.0, stretch=3.0, nu_min=None)
WEIGHT_DEFAULTS = {f.name: f.default for f in fields(WeightParams) if f.name != "nu"}
WEIGHT_DEFAULTS["nu"] = 1e-2

# key -> type tag; "opt_float" allows the literal "none"
SCHEMA = {
    "grid": {"K": "int", "J": "int", "Ly": "float", "stretch": "float", "nu_min": "opt_float"},
    "weights": {"nu": "float", "gamma": "float", "beta": "float", "eps0": "float",
                "mu0": "float", "alpha": "float", "n": "int"},
    "solver": {"backend": "str", "dt": "float", "T_end": "float", "dealias": "bool",
               "picard_iters": "int", "picard_tol": "float", "output_every": "int",
               "monitor_norms": "bool", "norm_recession": "str", "mu_samples": "int",
               "initial": "str", "amplitude": "float", "xi0": "int", "y0": "float",
               "sigma": "float", "profile": "str", "path": "str"},
    "sweep": {"nus": "floats", "c_form": "float", "workers": "int"},
    "audit": {"seed": "int", "probes": "int", "densify": "int"},
    "output": {"dir": "str", "snapshots": "bool", "figures": "bool"},
}

_BOOLS = {"true": True, "yes": True, "on": True, "1": True,
          "false": False, "no": False, "off": False, "0": False}


def _locate(text: str):
    """(section, key) -> (line, column of the value), both 1-based."""
    where = {}
    section = None
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        m = re.match(r"\s*\[([^\]]*)\]", line)
        if m:
            section = m.group(1).strip()
            continue
        m = re.match(r"(\s*)([^=:\s][^=:]*?)\s*[=:]\s*", line)
        if m and section is not None:
            where.setdefault((section, m.group(2)), (n, m.end() + 1))
    return where


def _key_col(text: str, lineno: int, key: str) -> int:
    lines = text.splitlines()
    if 1 <= lineno <= len(lines):
        i = lines[lineno - 1].find(key)
        return i + 1 if i >= 0 else 1
    return 1


def _convert(tag: str, raw: str):
    raw = raw.strip()
    if tag == "int":
        return int(raw)
    if tag == "float":
        return float(raw)
    if tag == "opt_float":
        return None if raw.lower() == "none" else float(raw)
    if tag == "bool":
        if raw.lower() not in _BOOLS:
            raise ValueError(f"not a boolean: {raw!r}")
        return _BOOLS[raw.lower()]
    if tag == "floats":
        items = [x for x in re.split(r"[,\s]+", raw) if x]
        if not items:
            raise ValueError("empty list")
        return tuple(float(x) for x in items)
    return raw


def _read(text: str) -> dict:
    cp = configparser.ConfigParser(interpolation=None, strict=True,
                                   inline_comment_prefixes=("#", ";"),
                                   default_section="\0")
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.DuplicateOptionError as e:
        raise ParseError(f"duplicate key {e.option!r} in [{e.section}]", e.lineno,
                         _key_col(text, e.lineno, e.option)) from None
    except configparser.DuplicateSectionError as e:
        raise ParseError(f"duplicate section [{e.section}]", e.lineno, 1) from None
    except configparser.MissingSectionHeaderError as e:
        raise ParseError("key outside of any section", e.lineno, 1) from None
    except configparser.ParsingError as e:
        lineno = e.errors[0][0] if e.errors else 0
        raise ParseError("malformed line", lineno, 1) from None
    where = _locate(text)
    out = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            n = next((i for i, l in enumerate(text.splitlines(), 1)
                      if l.strip().startswith(f"[{sec}")), 0)
            raise ParseError(f"unknown section [{sec}]", n, 1)
        vals = {}
        for key, raw in cp.items(sec):
            line, col = where.get((sec, key), (0, 1))
            if key not in SCHEMA[sec]:
                raise ParseError(f"unknown key {key!r} in [{sec}]", line,
                                 _key_col(text, line, key))
            try:
                vals[key] = _convert(SCHEMA[sec][key], raw)
            except ValueError as exc:
                raise ParseError(f"{sec}.{key}: {exc}", line, col) from None
        out[sec] = vals
    return out


def _initial(s: dict):
    kind = s.get("initial", "bulk_vortex")
    if kind == "bulk_vortex":
        d = BulkVortex()
        return BulkVortex(A=s.get("amplitude", d.A), xi0=s.get("xi0", d.xi0),
                          y0=s.get("y0", d.y0), sigma=s.get("sigma", d.sigma))
    if kind == "shear":
        d = Shear()
        return Shear(profile=s.get("profile", d.profile), A=s.get("amplitude", d.A),
                     y0=s.get("y0", d.y0), sigma=s.get("sigma", d.sigma))
    if kind == "custom":
        if "path" not in s:
            raise ValidationError("path", "required when initial = custom")
        return Custom(s["path"])
    raise ValidationError("initial", "one of bulk_vortex, shear, custom")


def parse_config(text: str) -> Config:
    raw = _read(text)
    g = {**GRID_DEFAULTS, **raw.get("grid", {})}
    w = {**WEIGHT_DEFAULTS, **raw.get("weights", {})}
    weights = WeightParams(**w)
    s = raw.get("solver", {})
    solver_keys = {f.name for f in fields(RunConfig)} - {"initial"}
    run_kw = {k: v for k, v in s.items() if k in solver_keys}
    run = RunConfig(K=g["K"], J=g["J"], Ly=g["Ly"], stretch=g["stretch"], nu_min=g["nu_min"],
                    weights=weights, initial=_initial(s), **run_kw)
    sw = SweepPlan(**raw.get("sweep", {}))
    if any(not nu > 0 for nu in sw.nus):
        raise ValidationError("nus", "every nu > 0")
    if sw.workers < 1:
        raise ValidationError("workers", "workers >= 1")
    au = AuditPlan(**raw.get("audit", {}))
    if au.probes < 1:
        raise ValidationError("probes", "probes >= 1")
    if au.densify < 0:
        raise ValidationError("densify", "densify >= 0")
    return Config(run, sw, au, OutputPlan(**raw.get("output", {})))


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, tuple):
        return ", ".join(_fmt(float(x)) for x in v)
    return str(v)


def render_config(cfg: Config) -> str:
    r = cfg.run
    d = r.initial
    solver = {k: getattr(r, k) for k in SCHEMA["solver"] if hasattr(r, k)}
    solver["initial"] = d.kind
    if isinstance(d, BulkVortex):
        solver.update(amplitude=d.A, xi0=d.xi0, y0=d.y0, sigma=d.sigma)
    elif isinstance(d, Shear):
        solver.update(profile=d.profile, amplitude=d.A, y0=d.y0, sigma=d.sigma)
    else:
        solver["path"] = d.path
    sections = {
        "grid": {"K": r.K, "J": r.J, "Ly": float(r.Ly), "stretch": float(r.stretch),
                 "nu_min": r.nu_min if r.nu_min is None else float(r.nu_min)},
        "weights": {f.name: getattr(r.weights, f.name) for f in fields(WeightParams)},
        "solver": solver,
        "sweep": {"nus": cfg.sweep.nus, "c_form": cfg.sweep.c_form, "workers": cfg.sweep.workers},
        "audit": {"seed": cfg.audit.seed, "probes": cfg.audit.probes,
                  "densify": cfg.audit.densify},
        "output": {"dir": cfg.output.dir, "snapshots": cfg.output.snapshots,
                   "figures": cfg.output.figures},
    }
    lines = []
    for sec, vals in sections.items():
        lines.append(f"[{sec}]")
        for k, v in vals.items():
            if SCHEMA[sec][k] in ("float", "opt_float") and isinstance(v, int) and not isinstance(v, bool):
                v = float(v)
            lines.append(f"{k} = {_fmt(v)}")
        lines.append("")
    return "\n".join(lines)


def load_config(path) -> Config:
    with open(path) as fh:
        return parse_config(fh.read())


def with_nu(cfg: Config, nu: float) -> Config:
    return replace(cfg, run=replace(cfg.run, weights=replace(cfg.run.weights, nu=nu)))
