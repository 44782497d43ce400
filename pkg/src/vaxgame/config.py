"""Line-oriented scenario config files.

::

    # comments start with '#'
    [model]
    beta = 0.5
    kappa = 1
    theta = 1
    m1 = 1
    m2 = 1

    [alpha]
    variant = linear      # or: alpha.variant = linear
    abar = 0.8

    [f]
    variant = smoothstep
    r = 3

    [g]
    variant = regularized_vax
    lambda = 0.5
    a1_lo = 0.1
    ...

Inside ``[alpha]``, ``[f]`` and ``[g]`` a key may be written bare or with
its section prefix.  Unknown keys, sections and variants are errors that
name the offending key and line.
"""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigurationError, DomainError
from .model import Holling, Identity, Linear, Power, RegularizedVax, Scenario, Smoothstep, ZeroFlux

KEYS = {
    "model": ("beta", "kappa", "theta", "m1", "m2"),
    "alpha": ("variant", "abar", "p", "q", "b"),
    "f": ("variant", "r"),
    "g": ("variant", "lambda", "a1_lo", "a1_hi", "a2_lo", "a2_hi", "delta"),
}

CANONICAL_TEXT = """\
# Reference scenario: linear infection rate, cubic smoothstep vaccination
# rate and the regularised vaccination-leaning flux.
[model]
beta = 0.5
kappa = 1
theta = 1
m1 = 1
m2 = 1

[alpha]
alpha.variant = linear
alpha.abar = 0.8

[f]
f.variant = smoothstep
f.r = 3

[g]
g.variant = regularized_vax
g.lambda = 0.5
g.a1_lo = 0.1
g.a1_hi = 0.666
g.a2_lo = 0.45
g.a2_hi = 0.85
g.delta = 0.02
"""


def parse_text(text: str, source: str = "<config>") -> dict:
    """Parse into ``{section: {key: (value_string, line_number)}}``."""
    out = {name: {} for name in KEYS}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigurationError(f"{where}: malformed section header {line!r}")
            section = line[1:-1].strip()
            if section not in KEYS:
                raise ConfigurationError(f"{where}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigurationError(f"{where}: expected 'key = value', got {line!r}")
        if section is None:
            raise ConfigurationError(f"{where}: key outside of any section")
        key, value = (part.strip() for part in line.split("=", 1))
        bare = key
        if section != "model" and key.startswith(section + "."):
            bare = key[len(section) + 1:]
        if bare not in KEYS[section]:
            raise ConfigurationError(f"{where}: unknown key {key!r} in section [{section}]")
        if bare in out[section]:
            raise ConfigurationError(f"{where}: duplicate key {key!r}")
        if not value:
            raise ConfigurationError(f"{where}: empty value for key {key!r}")
        out[section][bare] = (value, lineno)
    return out


def _getter(parsed, section, source):
    entries = parsed[section]

    def get(key, default=None, kind=float):
        name = key if section == "model" else f"{section}.{key}"
        if key not in entries:
            if default is None:
                raise ConfigurationError(f"{source}: missing key {name!r}")
            return default
        value, lineno = entries[key]
        try:
            return kind(value)
        except ValueError:
            raise ConfigurationError(f"{source}:{lineno}: key {name!r} has invalid value {value!r}") from None

    return get


def _unknown_variant(parsed, section, variant, choices, source):
    lineno = parsed[section]["variant"][1]
    return ConfigurationError(f"{source}:{lineno}: unknown {section}.variant {variant!r} ({choices})")


def _order(text):
    v = float(text)
    if v != int(v):
        raise ValueError(text)
    return int(v)


def scenario_from_text(text: str, source: str = "<config>") -> Scenario:
    parsed = parse_text(text, source)
    try:
        return _build(parsed, source)
    except DomainError as exc:
        raise ConfigurationError(f"{source}: {exc}") from None


def _build(parsed, source) -> Scenario:
    model = _getter(parsed, "model", source)
    beta, kappa, theta = model("beta"), model("kappa"), model("theta")
    m1, m2 = model("m1", 1.0), model("m2", 1.0)

    a = _getter(parsed, "alpha", source)
    variant = a("variant", "linear", str).lower()
    if variant == "linear":
        alpha = Linear(a("abar"))
    elif variant == "holling":
        alpha = Holling(a("abar"), a("p"), a("q"), a("b"))
    else:
        raise _unknown_variant(parsed, "alpha", variant, "linear, holling", source)

    f_get = _getter(parsed, "f", source)
    variant = f_get("variant", "identity", str).lower()
    if variant == "identity":
        f = Identity()
    elif variant == "power":
        f = Power(f_get("r"))
    elif variant == "smoothstep":
        f = Smoothstep(f_get("r", 3, _order))
    else:
        raise _unknown_variant(parsed, "f", variant, "identity, power, smoothstep", source)

    g_get = _getter(parsed, "g", source)
    variant = g_get("variant", "regularized_vax", str).lower()
    if variant == "zero":
        g = ZeroFlux()
    elif variant == "regularized_vax":
        d = RegularizedVax()
        g = RegularizedVax(lam=g_get("lambda", d.lam),
                           a1=(g_get("a1_lo", d.a1[0]), g_get("a1_hi", d.a1[1])),
                           a2=(g_get("a2_lo", d.a2[0]), g_get("a2_hi", d.a2[1])),
                           delta=g_get("delta", d.delta), m1=m1, m2=m2)
    else:
        raise _unknown_variant(parsed, "g", variant, "regularized_vax, zero", source)

    return Scenario(beta, kappa, theta, m1, m2, alpha, f, g)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {str(path)!r}: {exc.strerror}") from None
    return scenario_from_text(text, str(path))


def canonical_path() -> Path:
    """Location of the shipped canonical config."""
    return Path(__file__).with_name("canonical.cfg")
