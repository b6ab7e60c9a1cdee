"""Scenario files: TOML documents describing a sweep of operating points.

Sections
--------
``[links.sd]``, ``[links.sr]``, ``[links.rd]``
    ``omega`` (number or per-round list, required), ``m`` and ``rho``
    (required unless swept).
``[protocol]``
    ``K`` (unless swept), ``rate`` (outage/validate/simulate), ``rates``
    (ascending list, dlt), ``correlation`` ("exponential" or "product"),
    ``payload_bits``; optional ``[protocol.rate_search]`` with ``lo``, ``hi``,
    ``tol``, ``max_iters``.
``[sweep]``
    ``gamma_t_db`` (required, dB), optional ``rho``, ``m``, ``K`` lists.
``[sim]``
    ``enabled``, ``episodes``, ``seed``.
``[numerics]``
    ``rel_tol``, ``max_nodes``, ``abscissa``, ``half_height``.

Unknown keys are rejected.
"""

from __future__ import annotations

import itertools
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .channel import CORRELATION_MODELS, LinkModel, ModelError, SnrScale, as_omega
from .harq import HarqConfig, Links
from .optimizer import RateSearch
from .specfun import ContourParams

__all__ = ["GridPoint", "Scenario", "ScenarioError", "load_scenario", "parse_scenario"]

LINK_NAMES = ("sd", "sr", "rd")

_ALLOWED = {
    "": {"links", "protocol", "sweep", "sim", "numerics"},
    "links": set(LINK_NAMES),
    "links.link": {"omega", "m", "rho"},
    "protocol": {"K", "rate", "rates", "correlation", "payload_bits", "rate_search"},
    "protocol.rate_search": {"lo", "hi", "tol", "max_iters"},
    "sweep": {"gamma_t_db", "rho", "m", "K"},
    "sim": {"enabled", "episodes", "seed"},
    "numerics": {"rel_tol", "max_nodes", "abscissa", "half_height"},
}


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario file."""


@dataclass(frozen=True)
class LinkSpec:
    omega: float | tuple[float, ...]
    m: float | None = None
    rho: float | None = None


@dataclass(frozen=True, order=True)
class GridPoint:
    gamma_t_db: float
    rho: float
    m: float
    K: int


@dataclass(frozen=True)
class Scenario:
    links: dict[str, LinkSpec]
    gamma_t_db: tuple[float, ...]
    rho: tuple[float, ...] | None = None
    m: tuple[float, ...] | None = None
    K_list: tuple[int, ...] | None = None
    K: int | None = None
    rate: float | None = None
    rates: tuple[float, ...] | None = None
    correlation: str = "exponential"
    payload_bits: int | None = None
    rate_search: dict[str, float] | None = None
    sim_enabled: bool = False
    episodes: int = 1_000_000
    seed: int = 0
    contour: ContourParams = ContourParams()

    def grid(self) -> list[GridPoint]:
        """All operating points in lexicographic coordinate order."""
        sd = self.links["sd"]
        rhos = self.rho if self.rho is not None else (sd.rho,)
        ms = self.m if self.m is not None else (sd.m,)
        Ks = self.K_list if self.K_list is not None else (self.K,)
        return sorted(GridPoint(g, r, m, k) for g, r, m, k in itertools.product(self.gamma_t_db, rhos, ms, Ks))

    def config(self, point: GridPoint, rate: float | None = None) -> HarqConfig:
        """Library configuration for one grid point."""
        rate = rate if rate is not None else (self.rate if self.rate is not None else 1.0)
        links = {}
        for name in LINK_NAMES:
            spec = self.links[name]
            m = point.m if self.m is not None else spec.m
            rho = point.rho if self.rho is not None else spec.rho
            try:
                links[name] = LinkModel(m, as_omega(spec.omega, point.K), rho, self.correlation)
            except ModelError as exc:
                raise ScenarioError(f"[links.{name}]: {exc}") from exc
        try:
            return HarqConfig(
                K=point.K,
                rate=rate,
                scale=SnrScale.from_db(point.gamma_t_db),
                links=Links(**links),
                contour=self.contour,
                payload_bits=self.payload_bits,
            )
        except ModelError as exc:
            raise ScenarioError(str(exc)) from exc

    def search(self) -> RateSearch | None:
        """Explicit rate bracket, or None when ``hi`` is left to the default rule."""
        if self.rate_search is None or "hi" not in self.rate_search:
            return None
        return RateSearch(**self.rate_search)

    @property
    def search_tol(self) -> float:
        return (self.rate_search or {}).get("tol", 1e-3)


def _check_keys(table: dict, where: str, allowed_key: str) -> None:
    unknown = sorted(set(table) - _ALLOWED[allowed_key])
    if unknown:
        label = f"[{where}]" if where else "top level"
        raise ScenarioError(f"{label}: unknown key(s) {', '.join(unknown)}")


def _table(doc: dict, key: str, where: str) -> dict:
    value = doc.get(key, {})
    if not isinstance(value, dict):
        raise ScenarioError(f"[{where}]: expected a table")
    return value


def _number(value: Any, where: str, *, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ScenarioError(f"{where}: expected a finite number, got {value!r}")
    if positive and value <= 0:
        raise ScenarioError(f"{where}: must be positive, got {value!r}")
    return float(value)


def _integer(value: Any, where: str, *, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{where}: expected an integer, got {value!r}")
    if value < minimum:
        raise ScenarioError(f"{where}: must be >= {minimum}, got {value!r}")
    return value


def _number_list(value: Any, where: str, **kw) -> tuple[float, ...]:
    if not isinstance(value, list):
        raise ScenarioError(f"{where}: expected a list")
    return tuple(_number(v, f"{where}[{i}]", **kw) for i, v in enumerate(value))


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{source}: {exc}") from exc
    _check_keys(doc, "", "")

    links_doc = _table(doc, "links", "links")
    _check_keys(links_doc, "links", "links")
    links = {}
    for name in LINK_NAMES:
        where = f"links.{name}"
        if name not in links_doc:
            raise ScenarioError(f"[{where}]: missing section")
        spec = _table(links_doc, name, where)
        _check_keys(spec, where, "links.link")
        if "omega" not in spec:
            raise ScenarioError(f"[{where}] omega: missing")
        if isinstance(spec["omega"], list):
            omega = _number_list(spec["omega"], f"[{where}] omega", positive=True)
            if not omega:
                raise ScenarioError(f"[{where}] omega: empty list")
        else:
            omega = _number(spec["omega"], f"[{where}] omega", positive=True)
        m = _number(spec["m"], f"[{where}] m", positive=True) if "m" in spec else None
        rho = _number(spec["rho"], f"[{where}] rho") if "rho" in spec else None
        links[name] = LinkSpec(omega, m, rho)

    sweep = _table(doc, "sweep", "sweep")
    _check_keys(sweep, "sweep", "sweep")
    if not sweep.get("gamma_t_db"):
        raise ScenarioError("[sweep]: no grid (gamma_t_db is missing or empty)")
    gamma_t_db = _number_list(sweep["gamma_t_db"], "[sweep] gamma_t_db")
    rho = _number_list(sweep["rho"], "[sweep] rho") if "rho" in sweep else None
    m = _number_list(sweep["m"], "[sweep] m", positive=True) if "m" in sweep else None
    K_list = None
    if "K" in sweep:
        if not isinstance(sweep["K"], list) or not sweep["K"]:
            raise ScenarioError("[sweep] K: expected a nonempty list")
        K_list = tuple(_integer(k, f"[sweep] K[{i}]", minimum=1) for i, k in enumerate(sweep["K"]))
    for label, values in (("rho", rho), ("m", m)):
        if values is not None and not values:
            raise ScenarioError(f"[sweep] {label}: empty list")
    for name, spec in links.items():
        if m is None and spec.m is None:
            raise ScenarioError(f"[links.{name}] m: missing (and not swept)")
        if rho is None and spec.rho is None:
            raise ScenarioError(f"[links.{name}] rho: missing (and not swept)")
        if rho is not None and spec.rho is not None or m is not None and spec.m is not None:
            raise ScenarioError(f"[links.{name}]: m/rho given both per link and in [sweep]")

    protocol = _table(doc, "protocol", "protocol")
    _check_keys(protocol, "protocol", "protocol")
    K = _integer(protocol["K"], "[protocol] K", minimum=1) if "K" in protocol else None
    if K is None and K_list is None:
        raise ScenarioError("[protocol] K: missing (and not swept)")
    if K is not None and K_list is not None:
        raise ScenarioError("[protocol] K: given both in [protocol] and [sweep]")
    rate = _number(protocol["rate"], "[protocol] rate", positive=True) if "rate" in protocol else None
    rates = None
    if "rates" in protocol:
        rates = _number_list(protocol["rates"], "[protocol] rates", positive=True)
        if not rates:
            raise ScenarioError("[protocol] rates: empty list")
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise ScenarioError("[protocol] rates: grid must ascend")
    correlation = protocol.get("correlation", "exponential")
    if correlation not in CORRELATION_MODELS:
        raise ScenarioError(f"[protocol] correlation: expected one of {CORRELATION_MODELS}, got {correlation!r}")
    payload_bits = _integer(protocol["payload_bits"], "[protocol] payload_bits", minimum=1) if "payload_bits" in protocol else None
    rate_search = None
    if "rate_search" in protocol:
        rs = _table(protocol, "rate_search", "protocol.rate_search")
        _check_keys(rs, "protocol.rate_search", "protocol.rate_search")
        rate_search = {}
        for key in ("lo", "hi", "tol"):
            if key in rs:
                rate_search[key] = _number(rs[key], f"[protocol.rate_search] {key}")
        if "max_iters" in rs:
            rate_search["max_iters"] = _integer(rs["max_iters"], "[protocol.rate_search] max_iters", minimum=1)
        try:
            RateSearch(**{"hi": 1e9, **rate_search})
        except ValueError as exc:
            raise ScenarioError(f"[protocol.rate_search]: {exc}") from exc

    sim = _table(doc, "sim", "sim")
    _check_keys(sim, "sim", "sim")
    sim_enabled = bool(sim.get("enabled", bool(sim)))
    if not isinstance(sim.get("enabled", True), bool):
        raise ScenarioError("[sim] enabled: expected true or false")
    episodes = _integer(sim.get("episodes", 1_000_000), "[sim] episodes", minimum=10_000)
    seed = _integer(sim.get("seed", 0), "[sim] seed", minimum=0)
    if seed >= 2**64:
        raise ScenarioError("[sim] seed: must fit in 64 bits")

    numerics = _table(doc, "numerics", "numerics")
    _check_keys(numerics, "numerics", "numerics")
    contour_kw: dict[str, Any] = {}
    for key in ("rel_tol", "abscissa", "half_height"):
        if key in numerics:
            contour_kw[key] = _number(numerics[key], f"[numerics] {key}", positive=True)
    if "max_nodes" in numerics:
        contour_kw["max_nodes"] = _integer(numerics["max_nodes"], "[numerics] max_nodes", minimum=64)
    try:
        contour = ContourParams(**contour_kw)
    except ValueError as exc:
        raise ScenarioError(f"[numerics]: {exc}") from exc

    scenario = Scenario(
        links=links,
        gamma_t_db=gamma_t_db,
        rho=rho,
        m=m,
        K_list=K_list,
        K=K,
        rate=rate,
        rates=rates,
        correlation=correlation,
        payload_bits=payload_bits,
        rate_search=rate_search,
        sim_enabled=sim_enabled,
        episodes=episodes,
        seed=seed,
        contour=contour,
    )
    # surface model errors (rho out of range, short omega lists, ...) at load time
    for point in scenario.grid():
        scenario.config(point)
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    return parse_scenario(text, str(path))
