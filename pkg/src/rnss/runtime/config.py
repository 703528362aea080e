"""Plain-text ``key = value`` run configuration shared by all parties.

Recognised keys::

    n, t            party count and threshold (required)
    points          comma-separated evaluation points (default: 0.5 + 0.15 k)
    sigma2_y        anchor noise variance (default 1000)
    mask_sigma2     Beaver/inversion mask variance (default: sigma2_y)
    seed            global seed (default 0)
    steps           Kalman steps (default 50)
    addresses       comma-separated host:port, one per party, in index order
    A, B, H, Q, R   Kalman model matrices, rows separated by ``;`` (e.g. ``1,1;0,1``)
    x0              Kalman initial state, comma-separated

Lines starting with ``#`` are comments. The digest covers every key, so two
parties with any differing setting refuse to talk to each other.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from ..core import EvaluationDomain, default_points
from ..errors import ConfigError

_MATRICES = ("A", "B", "H", "Q", "R")
_KNOWN = {"n", "t", "points", "sigma2_y", "mask_sigma2", "seed", "steps", "addresses", "x0", *_MATRICES}


@dataclass(frozen=True)
class RuntimeConfig:
    n: int
    t: int
    points: tuple[float, ...] = ()
    sigma2_y: float = 1000.0
    mask_sigma2: float | None = None
    seed: int = 0
    steps: int = 50
    addresses: tuple[tuple[str, int], ...] = field(default=())
    matrices: tuple[tuple[str, tuple[tuple[float, ...], ...]], ...] = ()
    x0: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.points:
            object.__setattr__(self, "points", default_points(self.n))
        if len(self.points) != self.n:
            raise ConfigError(f"expected {self.n} points, got {len(self.points)}")
        if self.addresses and len(self.addresses) != self.n:
            raise ConfigError(f"expected {self.n} addresses, got {len(self.addresses)}")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if self.sigma2_y < 0:
            raise ConfigError("sigma2_y must be >= 0")
        try:
            self.domain()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def domain(self) -> EvaluationDomain:
        return EvaluationDomain(self.points, self.t)

    def canonical(self) -> str:
        lines = [
            f"n={self.n}",
            f"t={self.t}",
            "points=" + ",".join(repr(float(p)) for p in self.points),
            f"sigma2_y={float(self.sigma2_y)!r}",
            f"mask_sigma2={'' if self.mask_sigma2 is None else repr(float(self.mask_sigma2))}",
            f"seed={self.seed}",
            f"steps={self.steps}",
            "addresses=" + ",".join(f"{h}:{p}" for h, p in self.addresses),
        ]
        for name, rows in self.matrices:
            lines.append(f"{name}=" + ";".join(",".join(repr(float(v)) for v in row) for row in rows))
        if self.x0:
            lines.append("x0=" + ",".join(repr(float(v)) for v in self.x0))
        return "\n".join(lines) + "\n"

    def digest(self) -> bytes:
        return hashlib.sha256(self.canonical().encode()).digest()


def parse_matrix(text: str) -> tuple[tuple[float, ...], ...]:
    rows = tuple(tuple(float(v) for v in row.split(",")) for row in text.split(";"))
    if len({len(r) for r in rows}) != 1:
        raise ConfigError(f"ragged matrix {text!r}")
    return rows


def parse_address(text: str) -> tuple[str, int]:
    host, sep, port = text.strip().rpartition(":")
    if not sep or not host:
        raise ConfigError(f"bad address {text!r}, expected host:port")
    try:
        return host, int(port)
    except ValueError:
        raise ConfigError(f"bad port in {text!r}") from None


def parse_config(text: str) -> RuntimeConfig:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value")
        if key not in _KNOWN:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        raw[key] = value.strip()
    if "n" not in raw or "t" not in raw:
        raise ConfigError("config must set n and t")
    try:
        kwargs = dict(n=int(raw["n"]), t=int(raw["t"]))
        if raw.get("points"):
            kwargs["points"] = tuple(float(p) for p in raw["points"].split(","))
        if "sigma2_y" in raw:
            kwargs["sigma2_y"] = float(raw["sigma2_y"])
        if raw.get("mask_sigma2"):
            kwargs["mask_sigma2"] = float(raw["mask_sigma2"])
        if "seed" in raw:
            kwargs["seed"] = int(raw["seed"])
        if "steps" in raw:
            kwargs["steps"] = int(raw["steps"])
        kwargs["matrices"] = tuple((k, parse_matrix(raw[k])) for k in _MATRICES if raw.get(k))
        if raw.get("x0"):
            kwargs["x0"] = tuple(float(v) for v in raw["x0"].split(","))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if raw.get("addresses"):
        kwargs["addresses"] = tuple(parse_address(a) for a in raw["addresses"].split(","))
    return RuntimeConfig(**kwargs)


def load_config(path) -> RuntimeConfig:
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
