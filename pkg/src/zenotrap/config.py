"""Flat key=value scenario files with explicit unit suffixes.

Example::

    name    = fock0-rabi
    omega   = 2pi*11.2e6 rad/s
    omega0  = 2.9745e6 rad/s
    eta     = 0.2
    phi     = -pi/2 rad
    k       = 1
    kappa   = 1.1662e5 1/s
    initial = fock(0)
    mode    = jcm
    t_final = 120e-6 s

Values are arithmetic expressions over numbers and ``pi`` (``2pi`` is accepted
for ``2*pi``).  Unknown keys are rejected with a nearest-key suggestion, and a
unit suffix, when present, must match the key's dimension.  Parsing is strict
by design: scenario files die by silent typos.
"""
from __future__ import annotations

import ast
import difflib
import hashlib
import math
import re
from dataclasses import dataclass, field, replace

from .dynamics import ADAPTIVE, CHANNEL_UNITS, FIXED_RK4, DynamicsMode, FullCoupling, ReducedJCM
from .errors import ConfigError
from .hilbert import (
    CoherentState,
    FockState,
    MotionalStateSpec,
    ThermalState,
    TrapParams,
)

_RATE_UNITS = ("rad/s", "1/s")
_UNITS_BY_KEY = {
    "omega": _RATE_UNITS,
    "omega21": _RATE_UNITS,
    "omega0": _RATE_UNITS,
    "kappa": _RATE_UNITS,
    "phi": ("rad",),
    "t_final": ("s",),
    "max_step": ("s",),
}

_NUMBER_KEYS = {
    "omega", "omega21", "omega0", "eta", "phi", "kappa",
    "t_final", "samples", "dim", "rel_tol", "abs_tol", "max_step", "tail_budget",
    "k",
    "compare_tol_pdown", "compare_tol_energy", "compare_tol_position",
    "envelope_rate_tol", "energy_drift_tol",
}
_STRING_KEYS = {"name", "initial", "internal", "mode", "method", "channels", "emit"}
_KNOWN_KEYS = _NUMBER_KEYS | _STRING_KEYS

_TOLERANCE_KEYS = (
    "compare_tol_pdown",
    "compare_tol_energy",
    "compare_tol_position",
    "envelope_rate_tol",
    "energy_drift_tol",
)

_UNIT_RE = re.compile(r"\s+(rad/s|1/s|rad|s)$")
_NUM_PI_RE = re.compile(r"(\d(?:\.\d*)?(?:[eE][+-]?\d+)?)\s*pi\b")
_STATE_RE = re.compile(r"^(fock|coherent|thermal)\s*\(\s*(.+?)\s*\)$", re.IGNORECASE)
_MODE_RE = re.compile(r"^full\s*\(\s*(\d+)\s*\)$", re.IGNORECASE)
_NAME_RE = re.compile(r"^[A-Za-z0-9._-]+$")


def _eval_expr(text: str, key: str, line_no: int | None):
    """Evaluate an arithmetic expression over literals and pi."""
    source = _NUM_PI_RE.sub(r"\1*pi", text.strip())
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"{key}: cannot parse value {text!r}", line_no=line_no, key=key) from exc

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)):
            left, right = walk(node.left), walk(node.right)
            if isinstance(node.op, ast.Add):
                return left + right
            if isinstance(node.op, ast.Sub):
                return left - right
            if isinstance(node.op, ast.Mult):
                return left * right
            if isinstance(node.op, ast.Div):
                return left / right
            return left**right
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
            value = walk(node.operand)
            return value if isinstance(node.op, ast.UAdd) else -value
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)):
            return node.value
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        raise ConfigError(
            f"{key}: only numbers, pi, and + - * / ** are allowed in values", line_no=line_no, key=key
        )

    try:
        return walk(tree)
    except ZeroDivisionError as exc:
        raise ConfigError(f"{key}: division by zero in value {text!r}", line_no=line_no, key=key) from exc


def _real(value, key: str, line_no: int | None) -> float:
    if isinstance(value, complex):
        raise ConfigError(f"{key}: expected a real number, got {value!r}", line_no=line_no, key=key)
    return float(value)


def parse_state(text: str, *, key: str = "initial", line_no: int | None = None) -> MotionalStateSpec:
    match = _STATE_RE.match(text.strip())
    if not match:
        raise ConfigError(
            f"{key}: expected fock(n), coherent(alpha), or thermal(nbar); got {text!r}",
            line_no=line_no,
            key=key,
        )
    family, arg = match.group(1).lower(), match.group(2)
    value = _eval_expr(arg, key, line_no)
    if family == "fock":
        n = _real(value, key, line_no)
        if n != int(n) or n < 0:
            raise ConfigError(f"{key}: fock level must be a non-negative integer, got {arg}", line_no=line_no, key=key)
        return FockState(int(n))
    if family == "coherent":
        return CoherentState(complex(value))
    nbar = _real(value, key, line_no)
    if nbar < 0:
        raise ConfigError(f"{key}: thermal occupation must be >= 0, got {arg}", line_no=line_no, key=key)
    return ThermalState(nbar)


def parse_mode(text: str, *, line_no: int | None = None) -> DynamicsMode:
    lowered = text.strip().lower()
    if lowered == "jcm":
        return ReducedJCM()
    if lowered == "full":
        return FullCoupling()
    match = _MODE_RE.match(text.strip())
    if match:
        return FullCoupling(sideband_cutoff=int(match.group(1)))
    raise ConfigError(f"mode: expected jcm, full, or full(cutoff); got {text!r}", line_no=line_no, key="mode")


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a run needs; fully deterministic (no seeds anywhere)."""

    params: TrapParams
    initial: MotionalStateSpec
    name: str = "scenario"
    internal: str = "down"
    mode: DynamicsMode = field(default_factory=ReducedJCM)
    dim_fock: int | None = None
    t_final: float | None = None
    samples: int = 2000
    method: str = ADAPTIVE
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_step: float = math.inf
    tail_budget: float = 1e-8
    channels: tuple[str, ...] = tuple(CHANNEL_UNITS)
    emit: tuple[str, ...] = ("csv", "json")
    tolerances: dict[str, float | None] = field(
        default_factory=lambda: {
            "compare_tol_pdown": 1e-6,
            "compare_tol_energy": 1e-6,
            "compare_tol_position": 1e-5,
            "envelope_rate_tol": None,
            "energy_drift_tol": None,
        }
    )

    def normalized(self) -> dict[str, str]:
        """Canonical flat representation; basis of the config hash."""
        p = self.params
        mode = self.mode
        if isinstance(mode, ReducedJCM):
            mode_text = "jcm"
        elif mode.sideband_cutoff is None:
            mode_text = "full"
        else:
            mode_text = f"full({mode.sideband_cutoff})"
        init = self.initial
        if isinstance(init, FockState):
            init_text = f"fock({init.n})"
        elif isinstance(init, CoherentState):
            alpha = complex(init.alpha)
            init_text = (
                f"coherent({alpha.real!r})" if alpha.imag == 0 else f"coherent({alpha.real!r}+{alpha.imag!r}j)"
            )
        elif isinstance(init, ThermalState):
            init_text = f"thermal({init.nbar!r})"
        else:  # pragma: no cover - explicit matrices are not config-expressible
            init_text = "explicit"
        out = {
            "name": self.name,
            "omega": repr(p.omega),
            "omega21": repr(p.omega21),
            "omega0": repr(p.omega0),
            "eta": repr(p.eta),
            "phi": repr(p.phi),
            "k": str(p.k_sideband),
            "kappa": repr(p.kappa),
            "initial": init_text,
            "internal": self.internal,
            "mode": mode_text,
            "dim": "auto" if self.dim_fock is None else str(self.dim_fock),
            "t_final": "auto" if self.t_final is None else repr(self.t_final),
            "samples": str(self.samples),
            "method": self.method,
            "rel_tol": repr(self.rel_tol),
            "abs_tol": repr(self.abs_tol),
            "max_step": repr(self.max_step),
            "tail_budget": repr(self.tail_budget),
            "channels": ",".join(self.channels),
            "emit": ",".join(self.emit),
        }
        for tol_key in _TOLERANCE_KEYS:
            value = self.tolerances.get(tol_key)
            out[tol_key] = "none" if value is None else repr(float(value))
        return out

    def config_hash(self) -> str:
        flat = self.normalized()
        text = "\n".join(f"{key}={flat[key]}" for key in sorted(flat))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def with_overrides(self, **kwargs) -> "ScenarioConfig":
        return replace(self, **kwargs)


def _split_unit(raw: str, key: str, line_no: int | None) -> str:
    match = _UNIT_RE.search(raw)
    if not match:
        return raw
    unit = match.group(1)
    allowed = _UNITS_BY_KEY.get(key, ())
    if unit not in allowed:
        hint = f"; {key} takes {', '.join(allowed)}" if allowed else f"; {key} is dimensionless"
        raise ConfigError(f"{key}: unit {unit!r} does not fit{hint}", line_no=line_no, key=key)
    return raw[: match.start()]


def loads(text: str) -> ScenarioConfig:
    """Parse a scenario file's contents into a validated ScenarioConfig."""
    seen: dict[str, tuple] = {}
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {line!r}", line_no=line_no)
        key, _, raw_value = line.partition("=")
        key = key.strip()
        raw_value = raw_value.strip()
        if key not in _KNOWN_KEYS:
            near = difflib.get_close_matches(key, sorted(_KNOWN_KEYS), n=1)
            hint = f"; did you mean {near[0]!r}?" if near else ""
            raise ConfigError(f"unknown key {key!r}{hint}", line_no=line_no, key=key)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r}", line_no=line_no, key=key)
        if not raw_value:
            raise ConfigError(f"{key}: empty value", line_no=line_no, key=key)
        seen[key] = (raw_value, line_no)

    def number(key: str, default: float | None) -> float | None:
        if key not in seen:
            return default
        raw, line_no = seen[key]
        value = _eval_expr(_split_unit(raw, key, line_no), key, line_no)
        return _real(value, key, line_no)

    def text_value(key: str, default: str) -> tuple[str, int | None]:
        if key not in seen:
            return default, None
        raw, line_no = seen[key]
        return raw, line_no

    for required in ("omega", "omega0", "eta", "kappa", "initial"):
        if required not in seen:
            raise ConfigError(f"missing required key {required!r}", key=required)

    k_val = number("k", 1.0)
    if k_val != int(k_val) or k_val < 0:
        raise ConfigError("k: sideband order must be a non-negative integer", key="k")

    try:
        params = TrapParams(
            omega=number("omega", None),
            omega21=number("omega21", 0.0),
            omega0=number("omega0", None),
            eta=number("eta", None),
            phi=number("phi", 0.0),
            k_sideband=int(k_val),
            kappa=number("kappa", None),
        )
    except ValueError as exc:
        message = str(exc)
        culprit = message.split(None, 1)[0].strip() if message else ""
        raise ConfigError(
            message, key=culprit if culprit in _KNOWN_KEYS else None,
            line_no=seen.get(culprit, (None, None))[1] if culprit in seen else None,
        ) from exc

    initial_raw, initial_line = seen["initial"]
    initial = parse_state(initial_raw, line_no=initial_line)

    internal, internal_line = text_value("internal", "down")
    if internal not in ("down", "up"):
        raise ConfigError(f"internal: expected down or up, got {internal!r}", line_no=internal_line, key="internal")

    mode_raw, mode_line = text_value("mode", "jcm")
    mode = parse_mode(mode_raw, line_no=mode_line)

    name, name_line = text_value("name", "scenario")
    if not _NAME_RE.match(name):
        raise ConfigError(
            f"name: use letters, digits, dot, dash, underscore; got {name!r}", line_no=name_line, key="name"
        )

    method, method_line = text_value("method", ADAPTIVE)
    if method not in (ADAPTIVE, FIXED_RK4):
        raise ConfigError(f"method: expected adaptive or rk4, got {method!r}", line_no=method_line, key="method")

    channels_raw, channels_line = text_value("channels", ",".join(CHANNEL_UNITS))
    channels = tuple(part.strip() for part in channels_raw.split(",") if part.strip())
    for channel in channels:
        if channel not in CHANNEL_UNITS:
            near = difflib.get_close_matches(channel, sorted(CHANNEL_UNITS), n=1)
            hint = f"; did you mean {near[0]!r}?" if near else ""
            raise ConfigError(f"channels: unknown channel {channel!r}{hint}", line_no=channels_line, key="channels")
    if not channels:
        raise ConfigError("channels: at least one channel is required", line_no=channels_line, key="channels")

    emit_raw, emit_line = text_value("emit", "csv,json")
    emit = tuple(part.strip() for part in emit_raw.split(",") if part.strip())
    for fmt in emit:
        if fmt not in ("csv", "json"):
            raise ConfigError(f"emit: expected csv and/or json, got {fmt!r}", line_no=emit_line, key="emit")

    dim_val = number("dim", None)
    if dim_val is not None and (dim_val != int(dim_val) or dim_val < 2):
        raise ConfigError("dim: must be an integer >= 2", key="dim")
    samples_val = number("samples", 2000.0)
    if samples_val != int(samples_val) or samples_val < 2:
        raise ConfigError("samples: must be an integer >= 2", key="samples")
    t_final = number("t_final", None)
    if t_final is not None and t_final <= 0:
        raise ConfigError("t_final: must be positive", key="t_final")

    tolerances: dict[str, float | None] = {
        "compare_tol_pdown": 1e-6,
        "compare_tol_energy": 1e-6,
        "compare_tol_position": 1e-5,
        "envelope_rate_tol": None,
        "energy_drift_tol": None,
    }
    for tol_key in _TOLERANCE_KEYS:
        value = number(tol_key, tolerances[tol_key])
        if value is not None and value <= 0:
            raise ConfigError(f"{tol_key}: must be positive", key=tol_key)
        tolerances[tol_key] = value

    rel_tol = number("rel_tol", 1e-9)
    abs_tol = number("abs_tol", 1e-12)
    if rel_tol <= 0 or abs_tol <= 0:
        raise ConfigError("rel_tol/abs_tol must be positive", key="rel_tol")
    max_step = number("max_step", math.inf)
    if max_step <= 0:
        raise ConfigError("max_step: must be positive", key="max_step")
    tail_budget = number("tail_budget", 1e-8)
    if tail_budget <= 0:
        raise ConfigError("tail_budget: must be positive", key="tail_budget")

    return ScenarioConfig(
        params=params,
        initial=initial,
        name=name,
        internal=internal,
        mode=mode,
        dim_fock=None if dim_val is None else int(dim_val),
        t_final=t_final,
        samples=int(samples_val),
        method=method,
        rel_tol=rel_tol,
        abs_tol=abs_tol,
        max_step=max_step,
        tail_budget=tail_budget,
        channels=channels,
        emit=emit,
        tolerances=tolerances,
    )


def load(path) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc.strerror}") from exc
    try:
        return loads(text)
    except ConfigError as exc:
        exc.path = str(path)
        raise


def dumps(config: ScenarioConfig) -> str:
    """Render a config back to the flat file format (canonical form)."""
    flat = config.normalized()
    order = [
        "name", "omega", "omega21", "omega0", "eta", "phi", "k", "kappa",
        "initial", "internal", "mode", "dim", "t_final", "samples", "method",
        "rel_tol", "abs_tol", "max_step", "tail_budget", "channels", "emit",
        *_TOLERANCE_KEYS,
    ]
    lines = []
    units = {
        "omega": " rad/s", "omega21": " rad/s", "omega0": " rad/s",
        "kappa": " 1/s", "phi": " rad", "t_final": " s", "max_step": " s",
    }
    for key in order:
        value = flat[key]
        if value in ("auto", "none"):
            continue
        if key == "max_step" and math.isinf(config.max_step):
            continue
        lines.append(f"{key} = {value}{units.get(key, '')}")
    return "\n".join(lines) + "\n"
