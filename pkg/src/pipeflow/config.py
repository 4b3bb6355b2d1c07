"""Case-file parsing: INI-style sections with a tiny expression language.

A case file describes the domain, mesh density, physics data, solver
settings and outputs.  Parsing is position-aware so malformed input is
reported with line and column; a parsed case serializes back to text that
re-parses to an identical structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import ConfigError
from .expressions import ExpressionError, parse_expression, parse_vector, split_vector_literal
from .fem.space import ProblemData
from .reference_flow import poiseuille_2d
from .solver import SolverConfig

_ENUMS = {
    ("domain", "kind"): ("straight", "s_bend", "expansion"),
    ("solver", "linearization"): ("picard", "newton", "picard_then_newton"),
    ("solver", "outlet"): ("ddn", "do_nothing"),
    ("solver", "convection"): ("skew", "convective"),
}

# section -> key -> (type, default); REQUIRED marks a mandatory key.
REQUIRED = object()
SCHEMA: dict[str, dict[str, tuple]] = {
    "domain": {
        "kind": ("enum", "straight"),
        "inlet_length": ("float", REQUIRED),
        "outlet_length": ("float", REQUIRED),
        "half_height_in": ("float", REQUIRED),
        "half_height_out": ("float", None),
        "middle_length": ("float", 0.0),
        "offset": ("float", 0.0),
    },
    "mesh": {
        "target_h": ("float", REQUIRED),
    },
    "physics": {
        "eta": ("float", REQUIRED),
        "f": ("vec2", None),
        "g_star": ("inflow", None),
        "sigma_star": ("expr", None),
    },
    "solver": {
        "linearization": ("enum", "picard_then_newton"),
        "outlet": ("enum", "ddn"),
        "convection": ("enum", "skew"),
        "tol_rel": ("float", 1e-10),
        "tol_abs": ("float", 1e-13),
        "max_iter": ("int", 60),
        "picard_iters": ("int", 5),
        "lambda_step": ("float", 0.25),
        "lambda_min_step": ("float", 1e-4),
    },
    "outputs": {
        "directory": ("str", "out"),
        "write_vtk": ("bool", True),
        "write_mesh": ("bool", True),
    },
    "exact": {
        "velocity": ("vec2", REQUIRED),
        "pressure": ("expr", REQUIRED),
        "velocity_grad": ("vec4", None),
    },
}
_OPTIONAL_SECTIONS = ("exact",)


@dataclass
class CaseConfig:
    """Normalized case description; expression values are source strings."""

    sections: dict = field(default_factory=dict)

    def __getitem__(self, section: str) -> dict:
        return self.sections[section]

    def get(self, section: str, key: str):
        return self.sections.get(section, {}).get(key)

    def has_section(self, section: str) -> bool:
        return section in self.sections


def _parse_value(section: str, key: str, raw: str, line: int, col: int):
    kind = SCHEMA[section][key][0]
    raw = raw.strip()
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw)
        if kind == "bool":
            if raw.lower() in ("true", "yes", "1"):
                return True
            if raw.lower() in ("false", "no", "0"):
                return False
            raise ValueError(f"expected boolean, found {raw!r}")
        if kind == "str":
            return raw
        if kind == "enum":
            if raw not in _ENUMS[(section, key)]:
                raise ValueError(f"expected one of {_ENUMS[(section, key)]}, found {raw!r}")
            return raw
        if kind == "expr":
            parse_expression(raw)
            return raw
        if kind == "vec2" or kind == "vec4":
            parts = split_vector_literal(raw)
            want = 2 if kind == "vec2" else 4
            if len(parts) != want:
                raise ValueError(f"expected {want} components, found {len(parts)}")
            for p in parts:
                parse_expression(p)
            return tuple(parts)
        if kind == "inflow":
            if raw.upper().startswith("POISEUILLE"):
                inner = raw[len("POISEUILLE"):].strip()
                if not (inner.startswith("(") and inner.endswith(")")):
                    raise ValueError("POISEUILLE takes a parenthesized flux")
                return ("poiseuille", float(inner[1:-1]))
            parts = split_vector_literal(raw)
            if len(parts) != 2:
                raise ValueError(f"inflow needs 2 components, found {len(parts)}")
            for p in parts:
                parse_expression(p)
            return tuple(parts)
    except ExpressionError as exc:
        raise ConfigError(str(exc), line, col + exc.pos) from exc
    except ValueError as exc:
        raise ConfigError(str(exc), line, col) from exc
    raise AssertionError(f"unknown schema kind {kind}")


def parse_case_text(text: str) -> CaseConfig:
    sections: dict = {}
    current = None
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        indent = len(line) - len(line.lstrip())
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigError("unterminated section header", lineno, indent + 1)
            name = stripped[1:-1].strip()
            if name not in SCHEMA:
                raise ConfigError(f"unknown section [{name}]", lineno, indent + 1)
            if name in sections:
                raise ConfigError(f"duplicate section [{name}]", lineno, indent + 1)
            sections[name] = {}
            current = name
            continue
        if current is None:
            raise ConfigError("key outside of any section", lineno, indent + 1)
        if "=" not in line:
            raise ConfigError("expected 'key = value'", lineno, indent + 1)
        key, _, value = line.partition("=")
        key_stripped = key.strip()
        key_col = len(line) - len(line.lstrip()) + 1
        if key_stripped not in SCHEMA[current]:
            raise ConfigError(f"unknown key {key_stripped!r} in [{current}]", lineno, key_col)
        if key_stripped in sections[current]:
            raise ConfigError(f"duplicate key {key_stripped!r}", lineno, key_col)
        value_col = len(key) + 2 + (len(value) - len(value.lstrip()))
        sections[current][key_stripped] = _parse_value(current, key_stripped, value, lineno, value_col)

    for name, keys in SCHEMA.items():
        if name not in sections:
            if name in _OPTIONAL_SECTIONS:
                continue
            missing = [k for k, (_, d) in keys.items() if d is REQUIRED]
            if missing:
                raise ConfigError(f"missing section [{name}] (required keys: {', '.join(missing)})")
            sections[name] = {}
        for key, (_, default) in keys.items():
            if key not in sections[name]:
                if default is REQUIRED:
                    raise ConfigError(f"missing required key {key!r} in [{name}]")
                sections[name][key] = default
    return CaseConfig(sections)


def load_case(path) -> CaseConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_case_text(fh.read())


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return value
    if isinstance(value, tuple):
        if value and value[0] == "poiseuille":
            return f"POISEUILLE({value[1]!r})"
        return "(" + ", ".join(value) + ")"
    raise TypeError(f"cannot serialize {value!r}")


def serialize_case(cfg: CaseConfig) -> str:
    lines = []
    for name in SCHEMA:
        if name not in cfg.sections:
            continue
        lines.append(f"[{name}]")
        for key in SCHEMA[name]:
            value = cfg.sections[name].get(key)
            if value is None:
                continue
            lines.append(f"{key} = {_format_value(value)}")
        lines.append("")
    return "\n".join(lines)


# -- builders -------------------------------------------------------------------

def make_domain(cfg: CaseConfig) -> geometry.DomainSpec:
    d = cfg["domain"]
    return geometry.channel_spec(
        d["inlet_length"], d["outlet_length"], d["half_height_in"],
        d["half_height_out"], d["middle_length"], d["offset"],
    )


def make_data(cfg: CaseConfig, spec: geometry.DomainSpec) -> ProblemData:
    p = cfg["physics"]
    f = None if p["f"] is None else parse_vector("(" + ", ".join(p["f"]) + ")")
    sigma = None if p["sigma_star"] is None else parse_expression(p["sigma_star"])
    g = p["g_star"]
    if g is None:
        g_star = None
    elif g[0] == "poiseuille":
        s1 = spec.inlet
        flow = poiseuille_2d(1, g[1], s1.half_height, s1.length, p["eta"], s1.transform)
        g_star = flow.velocity
    else:
        g_star = parse_vector("(" + ", ".join(g) + ")")
    return ProblemData(p["eta"], f=f, g_star=g_star, sigma_star=sigma)


def make_solver_config(cfg: CaseConfig) -> SolverConfig:
    s = cfg["solver"]
    return SolverConfig(
        linearization=s["linearization"],
        outlet_condition=s["outlet"],
        convection_form=s["convection"],
        tol_rel=s["tol_rel"],
        tol_abs=s["tol_abs"],
        max_iter=s["max_iter"],
        picard_iters=s["picard_iters"],
        lambda_initial_step=s["lambda_step"],
        lambda_min_step=s["lambda_min_step"],
    )


class ExactSolution:
    """Closed-form manufactured fields for error measurement."""

    def __init__(self, velocity, pressure, velocity_grad=None):
        self.velocity = velocity
        self.pressure = pressure
        self.velocity_grad = velocity_grad


def make_exact(cfg: CaseConfig) -> ExactSolution | None:
    if not cfg.has_section("exact"):
        return None
    e = cfg["exact"]
    vel = parse_vector("(" + ", ".join(e["velocity"]) + ")")
    pres = parse_expression(e["pressure"])
    grad = None
    if e["velocity_grad"] is not None:
        comps = [parse_expression(src) for src in e["velocity_grad"]]

        def grad(points, comps=comps):
            pts = np.atleast_2d(points)
            vals = np.stack([c(pts) for c in comps], axis=1)
            return vals.reshape(len(pts), 2, 2)

    return ExactSolution(vel, pres, grad)
