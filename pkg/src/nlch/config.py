"""
Run configuration: INI file with an exhaustive schema.

Every section and key is listed in ``SCHEMA``; anything else is rejected.
Lists are comma separated.  Example::

    [grid]
    N = 20

    [kernel]
    kind = newtonian2d
    eta = -50

    [conv]
    eps = 1e-5
    alpha = 4

    [initial]
    kind = wave

    [time]
    T = 100
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field

from .errors import ConfigError


def _float(v):
    x = float(v)
    if not math.isfinite(x):
        raise ValueError("not finite")
    return x


def _int(v):
    return int(v)


def _bool(v):
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError("not a boolean")


def _str(v):
    return v.strip()


def _floats(v):
    return tuple(_float(p) for p in v.split(",") if p.strip())


def _ints(v):
    return tuple(int(p) for p in v.split(",") if p.strip())


def _choice(*opts):
    def parse(v):
        s = v.strip()
        if s not in opts:
            raise ValueError(f"expected one of {', '.join(opts)}")
        return s
    return parse


_REQ = object()

SCHEMA = {
    "grid": {"N": (_int, _REQ)},
    "kernel": {
        "kind": (_choice("newtonian2d", "mollifier", "mixture", "newtonian3d-regularized"),
                 "newtonian2d"),
        "eta": (_float, 1.0),
        "a": (_float, 0.1),
        "sigma": (_float, None),
        "weight": (_float, 1.0 / 40.0),
    },
    "conv": {
        "eps": (_float, 1e-5),
        "alpha": (_float, 4.0),
        "mode": (_choice("maximal", "minimal"), "maximal"),
        "correct": (_bool, True),
        "cache": (_str, None),
    },
    "potential": {
        "kind": (_choice("logarithmic", "regularized", "double-well", "quadratic"), "logarithmic"),
        "theta": (_float, 2.0),
        "omega": (_float, None),
    },
    "initial": {
        "kind": (_choice("wave", "compact", "constant", "file"), "wave"),
        "a": (_float, 0.1),
        "c": (_float, None),
        "path": (_str, None),
    },
    "time": {
        "T": (_float, 1.0),
        "abs_tol": (_float, 1e-7),
        "rel_tol": (_float, 1e-7),
        "outputs": (_floats, ()),
        "mobility": (_float, 1.0),
        "formulation": (_choice("conservative", "constraint"), "conservative"),
        "initial_dt": (_float, 1e-6),
        "max_steps": (_int, 500_000),
    },
    "domain": {
        "kind": (_choice("square", "rectangle", "bulged"), "square"),
        "params": (_floats, ()),
    },
    "validate": {
        "eps": (_floats, (1e-2, 1e-5)),
        "alpha": (_floats, (1.0, 4.0, 8.0)),
        "N": (_ints, ()),
    },
    "regularized": {
        "omega": (_float, 1e-3),
        "sigma": (_float, None),
        "short_T": (_float, None),
        "long_T": (_float, None),
        "eta": (_floats, ()),
        "initial": (_str, ""),
    },
    "outputs": {"directory": (_str, "out")},
}


@dataclass
class RunConfig:
    """Parsed configuration: one attribute-style dict per section."""

    sections: dict = field(default_factory=dict)
    present: frozenset = frozenset()
    source: str | None = None

    def __getattr__(self, name):
        try:
            return self.__dict__["sections"][name]
        except KeyError:
            raise AttributeError(name) from None

    def has(self, section):
        return section in self.present


class Section(dict):
    def __getattr__(self, name):
        try:
            return self[name]
        except KeyError:
            raise AttributeError(name) from None


def parse(text, source=None):
    cp = configparser.ConfigParser(interpolation=None, strict=True, default_section="\0none")
    cp.optionxform = str
    try:
        cp.read_string(text, source or "<config>")
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from None
    for name in cp.sections():
        if name not in SCHEMA:
            raise ConfigError(f"unknown section [{name}]")
        for key in cp[name]:
            if key not in SCHEMA[name]:
                raise ConfigError(f"unknown key {key!r} in [{name}]")
    sections = {}
    for name, keys in SCHEMA.items():
        sec = Section()
        for key, (conv, default) in keys.items():
            if cp.has_option(name, key):
                raw = cp.get(name, key)
                try:
                    sec[key] = conv(raw)
                except ValueError as exc:
                    raise ConfigError(f"[{name}] {key} = {raw!r}: {exc}") from None
            elif default is _REQ:
                raise ConfigError(f"missing required key {key!r} in [{name}]")
            else:
                sec[key] = default
        sections[name] = sec
    cfg = RunConfig(sections, frozenset(cp.sections()), source)
    check(cfg)
    return cfg


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse(text, os.fspath(path))


def _need(cond, msg):
    if not cond:
        raise ConfigError(msg)


def check(cfg):
    """Range checks mirroring the preconditions of the numerical modules."""
    g, k, cv, p = cfg.grid, cfg.kernel, cfg.conv, cfg.potential
    ini, t, d = cfg.initial, cfg.time, cfg.domain
    _need(g.N >= 2, "[grid] N must be at least 2")
    _need(0.0 < cv.eps < 0.5, "[conv] eps must lie in (0, 1/2)")
    _need(cv.alpha > 0, "[conv] alpha must be positive")
    _need(abs(cv.alpha * g.N - round(cv.alpha * g.N)) < 1e-12,
          "[conv] alpha * N must be an integer")
    _need(k.a > 0, "[kernel] a must be positive")
    _need(k.kind != "newtonian3d-regularized" or (k.sigma is not None and k.sigma > 0),
          "[kernel] newtonian3d-regularized needs sigma > 0")
    _need(p.theta > 0, "[potential] theta must be positive")
    _need(p.kind != "regularized" or (p.omega is not None and 0 < p.omega < 1),
          "[potential] regularized needs omega in (0, 1)")
    _need(ini.kind != "constant" or ini.c is not None, "[initial] constant needs c")
    _need(ini.kind != "file" or ini.path, "[initial] file needs path")
    _need(ini.a > 0, "[initial] a must be positive")
    _need(t.T > 0, "[time] T must be positive")
    _need(t.abs_tol > 0 and t.rel_tol > 0, "[time] tolerances must be positive")
    _need(t.mobility > 0, "[time] mobility must be positive")
    _need(all(0 <= v <= t.T for v in t.outputs), "[time] outputs must lie in [0, T]")
    if d.kind == "rectangle":
        _need(len(d.params) == 4 and d.params[0] < d.params[1] and d.params[2] < d.params[3],
              "[domain] rectangle needs params = a1, b1, a2, b2 with a1 < b1, a2 < b2")
    elif d.kind == "bulged":
        _need(len(d.params) == 1 and -0.5 < d.params[0] < 0.5,
              "[domain] bulged needs params = k with k in (-1/2, 1/2)")
    else:
        _need(not d.params, "[domain] square takes no params")
    r = cfg.regularized
    _need(0 < r.omega < 1, "[regularized] omega must lie in (0, 1)")
    _need(r.sigma is None or r.sigma > 0, "[regularized] sigma must be positive")
    _need(r.initial in ("", "wave", "compact") or _is_float(r.initial),
          "[regularized] initial must be wave, compact or a constant")
    v = cfg.validate
    _need(all(0 < e < 0.5 for e in v.eps), "[validate] eps values must lie in (0, 1/2)")
    _need(all(a > 0 for a in v.alpha), "[validate] alpha values must be positive")
    _need(all(n >= 2 for n in v.N), "[validate] N values must be at least 2")
    return cfg


def _is_float(s):
    try:
        _float(s)
    except ValueError:
        return False
    return True
