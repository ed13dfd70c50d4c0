"""Config parsing, validation, and object builders.

Configs are TOML-syntax documents parsed in strict mode: unknown keys are
fatal and the first constraint violation is reported with its key path. The
supported syntax subset is tables, `key = value` pairs, strings, numbers
(including inf), booleans, and (nested) arrays, which covers every key below.

The schema table is the single source of truth; the CLI renders it into the
--help key reference.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .coefficients import PRESET_NAMES, preset, validate_coefficients
from .errors import ConfigurationError
from .integrator import Dynamics, SimConfig
from .averaging import AveragingOptions
from .noise import LevyMeasureSpec, NoiseSpec, check_a2_admissibility
from .spectral import FieldVector, SpectralBasis, TimeProfile

ENV_SEED = "SLOWFAST_SEED"

VERIFY_CHECKS = ("moments", "holder", "fast-moment", "mixing", "auxiliary",
                 "martingale", "wiener-cov", "a2")


# ---------------------------------------------------------------------------
# minimal strict TOML-subset reader

def _strip_comment(line: str) -> str:
    out = []
    in_str: str | None = None
    for ch in line:
        if in_str:
            if ch == in_str:
                in_str = None
            out.append(ch)
        elif ch in "\"'":
            in_str = ch
            out.append(ch)
        elif ch == "#":
            break
        else:
            out.append(ch)
    return "".join(out).strip()


def _parse_value(text: str, where: str):
    text = text.strip()
    if not text:
        raise ConfigurationError(f"{where}: empty value")
    if text.startswith("["):
        items, rest = _parse_array(text, where)
        if rest.strip():
            raise ConfigurationError(f"{where}: trailing characters after array")
        return items
    if text[0] in "\"'":
        quote = text[0]
        if len(text) < 2 or text[-1] != quote:
            raise ConfigurationError(f"{where}: unterminated string")
        return text[1:-1]
    if text == "true":
        return True
    if text == "false":
        return False
    if text in ("inf", "+inf"):
        return math.inf
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise ConfigurationError(f"{where}: cannot parse value {text!r}")


def _parse_array(text: str, where: str):
    assert text[0] == "["
    items = []
    i = 1
    while True:
        while i < len(text) and text[i] in " \t,":
            i += 1
        if i >= len(text):
            raise ConfigurationError(f"{where}: unterminated array")
        if text[i] == "]":
            return items, text[i + 1:]
        if text[i] == "[":
            sub, rest = _parse_array(text[i:], where)
            items.append(sub)
            text = rest
            i = 0
            continue
        j = i
        while j < len(text) and text[j] not in ",]":
            j += 1
        items.append(_parse_value(text[i:j], where))
        i = j


def toml_loads(text: str, source: str = "<config>") -> dict:
    data: dict = {}
    table = data
    pending = ""
    pending_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if pending:
            pending += " " + line
            if pending.count("[") > pending.count("]"):
                continue
            line = pending
            pending = ""
            lineno = pending_line
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigurationError(f"{source}:{lineno}: malformed table header")
            path = line[1:-1].strip()
            if not path:
                raise ConfigurationError(f"{source}:{lineno}: empty table header")
            table = data
            for part in path.split("."):
                part = part.strip()
                if not part:
                    raise ConfigurationError(f"{source}:{lineno}: malformed table header")
                table = table.setdefault(part, {})
                if not isinstance(table, dict):
                    raise ConfigurationError(
                        f"{source}:{lineno}: {path} conflicts with an existing key")
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key or not all(c.isalnum() or c in "_-" for c in key):
            raise ConfigurationError(f"{source}:{lineno}: bad key {key!r}")
        value = value.strip()
        if value.startswith("[") and value.count("[") > value.count("]"):
            pending = line
            pending_line = lineno
            continue
        if key in table:
            raise ConfigurationError(f"{source}:{lineno}: duplicate key {key!r}")
        table[key] = _parse_value(value, f"{source}:{lineno}")
    if pending:
        raise ConfigurationError(f"{source}:{pending_line}: unterminated array")
    return data


# ---------------------------------------------------------------------------
# schema

_REQUIRED = object()


@dataclass(frozen=True)
class _Key:
    path: str
    typ: str            # int | float | bool | str | float_list | pair_list | str_list
    default: object
    constraint: str
    check: object = None


def _pos(v):
    return None if v > 0 else "must be positive"


def _nonneg(v):
    return None if v >= 0 else "must be nonnegative"


def _unit_open(v):
    return None if 0.0 <= v < 1.0 else "must lie in [0, 1)"


def _kappa_range(v):
    return None if 0.0 < v < 1.0 else "must lie in (0, 1)"


def _pos_list(v):
    return None if all(x > 0 for x in v) else "entries must be positive"


def _rho_ok(v):
    return None if v > 2 else "must exceed 2 (inf allowed)"


SCHEMA = (
    _Key("basis.domain_length", "float", math.pi, "length of the interval; > 0", _pos),
    _Key("basis.n_modes", "int", 8, "retained sine modes; >= 1",
         lambda v: None if v >= 1 else "must be >= 1"),
    _Key("basis.quadrature_points", "int", 0,
         "physical grid size; 0 = auto (8*n_modes), else >= 2*n_modes",
         lambda v: None if v >= 0 else "must be >= 0"),
    _Key("profiles.gamma1.kind", "str", "constant",
         "one of constant | offset-sine"),
    _Key("profiles.gamma1.value", "float", 1.0, "constant gamma value; > 0", _pos),
    _Key("profiles.gamma1.base", "float", 2.0, "offset-sine base; > |amplitude|"),
    _Key("profiles.gamma1.amplitude", "float", 1.0, "offset-sine amplitude"),
    _Key("profiles.gamma1.omega", "float", 1.0, "offset-sine angular frequency; > 0", _pos),
    _Key("profiles.gamma2.kind", "str", "constant",
         "one of constant | offset-sine"),
    _Key("profiles.gamma2.value", "float", 1.0, "constant gamma value; > 0", _pos),
    _Key("profiles.gamma2.base", "float", 2.0, "offset-sine base; > |amplitude|"),
    _Key("profiles.gamma2.amplitude", "float", 1.0, "offset-sine amplitude"),
    _Key("profiles.gamma2.omega", "float", 1.0, "offset-sine angular frequency; > 0", _pos),
    _Key("profiles.ell1.kind", "str", "zero", "one of zero | constant"),
    _Key("profiles.ell1.value", "float", 0.0, "constant transport coefficient"),
    _Key("profiles.ell2.kind", "str", "zero", "one of zero | constant"),
    _Key("profiles.ell2.value", "float", 0.0, "constant transport coefficient"),
    _Key("coefficients.preset", "str", "linear-ou",
         f"one of {' | '.join(PRESET_NAMES)}"),
    _Key("noise.channel1.spectrum", "str", "power", "one of power | explicit"),
    _Key("noise.channel1.amplitude", "float", 0.5,
         "power-law amplitude of lambda_k; >= 0", _nonneg),
    _Key("noise.channel1.q", "float", 2.0, "power-law decay exponent"),
    _Key("noise.channel1.rho", "float", 4.0, "integrability exponent; > 2 or inf", _rho_ok),
    _Key("noise.channel1.beta", "float", 1.0, "spectral exponent; > 0", _pos),
    _Key("noise.channel1.values", "float_list", (),
         "explicit lambda_k list (spectrum = explicit); length >= n_modes"),
    _Key("noise.channel2.spectrum", "str", "power", "one of power | explicit"),
    _Key("noise.channel2.amplitude", "float", 0.5,
         "power-law amplitude of lambda_k; >= 0", _nonneg),
    _Key("noise.channel2.q", "float", 2.0, "power-law decay exponent"),
    _Key("noise.channel2.rho", "float", 4.0, "integrability exponent; > 2 or inf", _rho_ok),
    _Key("noise.channel2.beta", "float", 1.0, "spectral exponent; > 0", _pos),
    _Key("noise.channel2.values", "float_list", (),
         "explicit lambda_k list (spectrum = explicit); length >= n_modes"),
    _Key("noise.levy1.marks", "pair_list", ((1.0, 0.5), (-1.0, 0.5)),
         "[[z, mass], ...] point masses; masses >= 0"),
    _Key("noise.levy2.marks", "pair_list", ((1.0, 0.5), (-1.0, 0.5)),
         "[[z, mass], ...] point masses; masses >= 0"),
    _Key("simulation.epsilons", "float_list", (0.5, 0.1, 0.02),
         "scale-separation grid; entries positive", _pos_list),
    _Key("simulation.t_end", "float", 1.0, "horizon T; > 0", _pos),
    _Key("simulation.dt_slow", "float", 0.025,
         "slow step; > 0, t_end/dt_slow integer", _pos),
    _Key("simulation.dt_fast", "float", 0.0,
         "fast step; 0 = auto (stiffness guard), else <= dt_slow, divides "
         "dt_slow, and obeys dt_fast <= 0.2*eps/(gamma_upper*alpha_max + alpha)",
         _nonneg),
    _Key("simulation.theta", "float", 0.0, "regularity index; in [0, 1)", _unit_open),
    _Key("simulation.kappa", "float", 0.5,
         "auxiliary block exponent; in (0, 1)", _kappa_range),
    _Key("simulation.initial_u", "float_list", (1.0,),
         "initial slow mode coefficients; length <= n_modes, zero padded"),
    _Key("simulation.initial_v", "float_list", (0.0,),
         "initial fast mode coefficients; length <= n_modes, zero padded"),
    _Key("simulation.n_trajectories", "int", 1,
         "trajectories written by `simulate`; >= 1",
         lambda v: None if v >= 1 else "must be >= 1"),
    _Key("simulation.save_modes", "bool", True,
         "include per-mode columns in trajectory CSVs"),
    _Key("experiment.n_replicas", "int", 200, "Monte Carlo replicas; >= 2",
         lambda v: None if v >= 2 else "must be >= 2"),
    _Key("experiment.eta", "float", 0.1, "exceedance threshold; > 0", _pos),
    _Key("experiment.seed", "int", 12345,
         "master seed; unsigned 64-bit; env SLOWFAST_SEED overrides, "
         "--seed overrides both",
         lambda v: None if 0 <= v < 2 ** 64 else "must fit in u64"),
    _Key("experiment.output_dir", "str", "out", "output directory"),
    _Key("experiment.record_wall_times", "bool", False,
         "write measured wall times into report CSVs (breaks byte-level "
         "run-to-run determinism of the reports)"),
    _Key("averaging.t_avg", "float", 5.0,
         "ergodic window per drift evaluation; > 0", _pos),
    _Key("averaging.t_burn", "float", 8.0, "initial burn-in; >= 0", _nonneg),
    _Key("averaging.dt", "float", 0.0,
         "estimator micro step; 0 = auto (stiffness guard at eps = 1)", _nonneg),
    _Key("averaging.n_batches", "int", 8, "batch means for stderr; >= 8",
         lambda v: None if v >= 8 else "must be >= 8"),
    _Key("averaging.warm_start", "bool", True,
         "carry the micro state across drift evaluations"),
    _Key("verify.selection", "str_list", VERIFY_CHECKS,
         f"subset of {{{', '.join(VERIFY_CHECKS)}}}"),
    _Key("verify.lags", "float_list", (),
         "lags for the increment table; within [0, t_end]; empty = auto "
         "(fractions of t_end on the slow grid)"),
    _Key("verify.epsilons", "float_list", (1.0, 0.1, 0.01),
         "scale grid for the moment checks; entries positive", _pos_list),
    _Key("verify.n_replicas", "int", 200, "replicas for statistical checks; >= 2",
         lambda v: None if v >= 2 else "must be >= 2"),
    _Key("verify.n_samples", "int", 100000,
         "sample count for the noise-correctness checks; >= 1000",
         lambda v: None if v >= 1000 else "must be >= 1000"),
    _Key("verify.mixing_horizon", "float", 4.0,
         "time span of the mixing regression; > 0", _pos),
    _Key("verify.mixing_pairs", "int", 8, "coupled pairs in the mixing check; >= 2",
         lambda v: None if v >= 2 else "must be >= 2"),
)

_SCHEMA_BY_PATH = {k.path: k for k in SCHEMA}

# free-form table: preset parameters are validated by the preset itself
_WILDCARD_PREFIX = "coefficients.parameters."


@dataclass(frozen=True)
class RunConfig:
    values: dict = field(default_factory=dict)
    preset_params: dict = field(default_factory=dict)

    def __getitem__(self, path):
        return self.values[path]

    def with_seed(self, seed: int) -> "RunConfig":
        vals = dict(self.values)
        vals["experiment.seed"] = int(seed)
        return RunConfig(values=vals, preset_params=dict(self.preset_params))

    def with_output_dir(self, path: str) -> "RunConfig":
        vals = dict(self.values)
        vals["experiment.output_dir"] = str(path)
        return RunConfig(values=vals, preset_params=dict(self.preset_params))

    @property
    def seed(self):
        return self.values["experiment.seed"]

    @property
    def output_dir(self):
        return self.values["experiment.output_dir"]


def _flatten(tree: dict, prefix: str = "") -> dict:
    flat = {}
    for key, val in tree.items():
        path = f"{prefix}{key}"
        if isinstance(val, dict):
            flat.update(_flatten(val, path + "."))
        else:
            flat[path] = val
    return flat


def _coerce(key: _Key, raw, path: str):
    typ = key.typ
    if typ == "int":
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise ConfigurationError("expected an integer", key_path=path)
        return raw
    if typ == "float":
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ConfigurationError("expected a number", key_path=path)
        return float(raw)
    if typ == "bool":
        if not isinstance(raw, bool):
            raise ConfigurationError("expected true/false", key_path=path)
        return raw
    if typ == "str":
        if not isinstance(raw, str):
            raise ConfigurationError("expected a string", key_path=path)
        return raw
    if typ == "float_list":
        if not isinstance(raw, list) or any(
                isinstance(x, (bool, str, list)) for x in raw):
            raise ConfigurationError("expected an array of numbers", key_path=path)
        return tuple(float(x) for x in raw)
    if typ == "str_list":
        if not isinstance(raw, list) or any(not isinstance(x, str) for x in raw):
            raise ConfigurationError("expected an array of strings", key_path=path)
        return tuple(raw)
    if typ == "pair_list":
        if not isinstance(raw, list):
            raise ConfigurationError("expected an array of [z, mass] pairs",
                                     key_path=path)
        pairs = []
        for item in raw:
            if (not isinstance(item, list) or len(item) != 2
                    or any(isinstance(x, (bool, str, list)) for x in item)):
                raise ConfigurationError("expected [z, mass] number pairs",
                                         key_path=path)
            pairs.append((float(item[0]), float(item[1])))
        return tuple(pairs)
    raise AssertionError(typ)


def parse_config(path: str) -> RunConfig:
    """Load, type-check, and semantically validate a config file.

    Strict mode: unknown keys are rejected; the first violated constraint is
    reported with its key path. The SLOWFAST_SEED environment variable, when
    set, overrides the config seed.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file: {exc}")
    tree = toml_loads(text, source=str(path))
    flat = _flatten(tree)

    preset_params = {}
    for key in list(flat):
        if key.startswith(_WILDCARD_PREFIX):
            raw = flat.pop(key)
            if isinstance(raw, (bool, str, list)):
                raise ConfigurationError("preset parameters must be numbers",
                                         key_path=key)
            preset_params[key[len(_WILDCARD_PREFIX):]] = float(raw)

    for key in flat:
        if key not in _SCHEMA_BY_PATH:
            raise ConfigurationError("unknown configuration key", key_path=key)

    values = {}
    for key in SCHEMA:
        if key.path in flat:
            val = _coerce(key, flat[key.path], key.path)
        else:
            val = key.default
        if key.check is not None:
            msg = key.check(val)
            if msg:
                raise ConfigurationError(msg, key_path=key.path)
        values[key.path] = val

    rc = RunConfig(values=values, preset_params=preset_params)
    env_seed = os.environ.get(ENV_SEED)
    if env_seed is not None:
        try:
            seed = int(env_seed, 10)
        except ValueError:
            raise ConfigurationError(
                f"{ENV_SEED} must be a decimal 64-bit integer, got {env_seed!r}")
        if not 0 <= seed < 2 ** 64:
            raise ConfigurationError(f"{ENV_SEED} out of unsigned 64-bit range")
        rc = rc.with_seed(seed)
    validate_semantics(rc)
    return rc


def config_reference() -> str:
    """Key-by-key constraint listing for --help."""
    lines = ["configuration keys (TOML):"]
    for key in SCHEMA:
        default = key.default
        if isinstance(default, tuple):
            default = list(default)
        lines.append(f"  {key.path} ({key.typ}, default {default!r}): {key.constraint}")
    lines.append("  coefficients.parameters.* (float): preset-specific constants, "
                 "validated by the preset")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# builders

def build_basis(rc: RunConfig) -> SpectralBasis:
    qp = rc["basis.quadrature_points"]
    try:
        return SpectralBasis(rc["basis.domain_length"], rc["basis.n_modes"],
                             qp if qp else None)
    except ConfigurationError as exc:
        raise ConfigurationError(str(exc), key_path="basis")


def _build_profile(rc: RunConfig, which: str) -> TimeProfile:
    kind = rc[f"profiles.{which}.kind"]
    if kind == "constant":
        prof = TimeProfile.constant(rc[f"profiles.{which}.value"])
    elif kind == "offset-sine":
        try:
            prof = TimeProfile.offset_sine(rc[f"profiles.{which}.base"],
                                           rc[f"profiles.{which}.amplitude"],
                                           rc[f"profiles.{which}.omega"])
        except ConfigurationError as exc:
            raise ConfigurationError(str(exc), key_path=f"profiles.{which}")
    else:
        raise ConfigurationError(f"unknown profile kind {kind!r}",
                                 key_path=f"profiles.{which}.kind")
    ell_key = "ell1" if which == "gamma1" else "ell2"
    ell_kind = rc[f"profiles.{ell_key}.kind"]
    if ell_kind == "zero":
        return prof
    if ell_kind == "constant":
        value = rc[f"profiles.{ell_key}.value"]
        if value == 0.0:
            return prof
        return prof.with_transport(
            lambda t, xi, _v=value: np.full_like(np.asarray(xi, dtype=float), _v))
    raise ConfigurationError(f"unknown transport kind {ell_kind!r}",
                             key_path=f"profiles.{ell_key}.kind")


def build_profiles(rc: RunConfig) -> tuple[TimeProfile, TimeProfile]:
    return _build_profile(rc, "gamma1"), _build_profile(rc, "gamma2")


def build_levy(rc: RunConfig, channel: int) -> LevyMeasureSpec:
    pairs = rc[f"noise.levy{channel}.marks"]
    try:
        return LevyMeasureSpec.from_pairs(pairs)
    except ConfigurationError as exc:
        raise ConfigurationError(str(exc), key_path=f"noise.levy{channel}.marks")


def build_cset(rc: RunConfig):
    try:
        cset = preset(rc["coefficients.preset"], dict(rc.preset_params))
    except ConfigurationError as exc:
        raise ConfigurationError(str(exc), key_path="coefficients")
    marks = tuple(z for z, _ in rc["noise.levy1.marks"]) + tuple(
        z for z, _ in rc["noise.levy2.marks"])
    try:
        validate_coefficients(cset, marks=marks or (1.0, -1.0))
    except ConfigurationError as exc:
        raise ConfigurationError(str(exc), key_path="coefficients")
    return cset


def build_noise_spec(rc: RunConfig, channel: int, basis: SpectralBasis) -> NoiseSpec:
    base = f"noise.channel{channel}"
    kind = rc[f"{base}.spectrum"]
    rho = rc[f"{base}.rho"]
    beta = rc[f"{base}.beta"]
    try:
        if kind == "power":
            spec = NoiseSpec.power_law(basis.n_modes, rc[f"{base}.amplitude"],
                                       rc[f"{base}.q"], rho, beta)
        elif kind == "explicit":
            values = rc[f"{base}.values"]
            if len(values) < basis.n_modes:
                raise ConfigurationError(
                    f"explicit spectrum needs >= n_modes = {basis.n_modes} values")
            spec = NoiseSpec(np.asarray(values[:basis.n_modes]), rho, beta)
        else:
            raise ConfigurationError(f"unknown spectrum kind {kind!r}")
    except ConfigurationError as exc:
        raise ConfigurationError(str(exc), key_path=base)
    report = check_a2_admissibility(spec, basis)
    if not report.admissible:
        raise ConfigurationError(
            f"spectrum violates admissibility: ratio beta*(rho-2)/rho = "
            f"{report.ratio:.4g} must be < 1", key_path=base)
    return spec


def build_dynamics(rc: RunConfig) -> Dynamics:
    basis = build_basis(rc)
    prof1, prof2 = build_profiles(rc)
    cset = build_cset(rc)
    w1 = build_noise_spec(rc, 1, basis)
    w2 = build_noise_spec(rc, 2, basis)
    l1 = build_levy(rc, 1)
    l2 = build_levy(rc, 2)
    return Dynamics(basis, prof1, prof2, cset, w1, w2, l1, l2)


def initial_field(values, n_modes: int, key_path: str) -> FieldVector:
    if len(values) > n_modes:
        raise ConfigurationError(
            f"{len(values)} coefficients exceed n_modes = {n_modes}",
            key_path=key_path)
    coeffs = np.zeros(n_modes)
    coeffs[:len(values)] = values
    return FieldVector(coeffs)


def effective_dt_fast(rc: RunConfig, dyn: Dynamics, epsilon: float) -> float:
    """Fast step for one scale parameter: the configured value when explicit,
    otherwise the stiffness guard, nested to divide dt_slow exactly."""
    dt_slow = rc["simulation.dt_slow"]
    guard = dyn.fast_step_guard(epsilon)
    base = rc["simulation.dt_fast"] if rc["simulation.dt_fast"] > 0 else guard
    n_sub = max(1, int(math.ceil(dt_slow / base - 1e-12)))
    dt = dt_slow / n_sub
    while dt > guard * (1 + 1e-12):
        n_sub += 1
        dt = dt_slow / n_sub
    return dt


def build_sim_config(rc: RunConfig, dyn: Dynamics, epsilon: float) -> SimConfig:
    n = dyn.basis.n_modes
    return SimConfig(
        epsilon=epsilon,
        t_end=rc["simulation.t_end"],
        dt_slow=rc["simulation.dt_slow"],
        dt_fast=effective_dt_fast(rc, dyn, epsilon),
        initial_u=initial_field(rc["simulation.initial_u"], n, "simulation.initial_u"),
        initial_v=initial_field(rc["simulation.initial_v"], n, "simulation.initial_v"),
        theta=rc["simulation.theta"])


def build_averaging_options(rc: RunConfig, dyn: Dynamics) -> AveragingOptions:
    guard = dyn.fast_step_guard(1.0)
    dt = rc["averaging.dt"] if rc["averaging.dt"] > 0 else guard
    dt = min(dt, guard)
    return AveragingOptions(t_avg=rc["averaging.t_avg"],
                            t_burn=rc["averaging.t_burn"], dt=dt,
                            n_batches=rc["averaging.n_batches"],
                            warm_start=rc["averaging.warm_start"])


def validate_semantics(rc: RunConfig) -> None:
    """Cross-key and module-level validation, in deterministic order."""
    dt_slow = rc["simulation.dt_slow"]
    dt_fast = rc["simulation.dt_fast"]
    if dt_fast > 0 and dt_fast > dt_slow:
        raise ConfigurationError(
            f"dt_fast = {dt_fast} exceeds dt_slow = {dt_slow}",
            key_path="simulation.dt_fast")
    t_end = rc["simulation.t_end"]
    if abs(t_end / dt_slow - round(t_end / dt_slow)) > 1e-9:
        raise ConfigurationError(
            f"t_end/dt_slow = {t_end / dt_slow:.6g} is not an integer",
            key_path="simulation.dt_slow")
    for sel in rc["verify.selection"]:
        if sel not in VERIFY_CHECKS:
            raise ConfigurationError(
                f"unknown check {sel!r}; choose from {VERIFY_CHECKS}",
                key_path="verify.selection")

    dyn = build_dynamics(rc)
    n = dyn.basis.n_modes
    initial_field(rc["simulation.initial_u"], n, "simulation.initial_u")
    initial_field(rc["simulation.initial_v"], n, "simulation.initial_v")

    try:
        dyn.require_averaging_margin()
    except ConfigurationError as exc:
        raise ConfigurationError(str(exc), key_path="coefficients.parameters.alpha")

    if dt_fast > 0:
        eps_min = min(rc["simulation.epsilons"])
        guard = dyn.fast_step_guard(eps_min)
        if dt_fast > guard * (1 + 1e-9):
            raise ConfigurationError(
                f"dt_fast = {dt_fast:.6g} violates the stiffness guard "
                f"{guard:.6g} at epsilon = {eps_min}",
                key_path="simulation.dt_fast")
        if abs(dt_slow / dt_fast - round(dt_slow / dt_fast)) > 1e-9:
            raise ConfigurationError(
                f"dt_slow/dt_fast = {dt_slow / dt_fast:.6g} is not an integer",
                key_path="simulation.dt_fast")
    for h in rc["verify.lags"]:
        if h < 0 or h > t_end + 1e-12:
            raise ConfigurationError(
                f"lag {h} outside [0, t_end]", key_path="verify.lags")
