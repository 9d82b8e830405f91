"""Simulation settings and the ``key=value`` config file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .datagen import DataError
from .routing import STRATEGIES

MAINTENANCE_MODES = ("static", "incremental", "off")
UPDATE_COUNTING = ("global", "per_peer")

# desk-scale proportions: warm-up share of all queries, then update points as
# fractions of the post-warm-up queries (cumulative)
WARMUP_SHARE = 0.20
UPDATE_SHARES = (0.30, 0.55)
INTERVALS_PER_RUN = 10


@dataclass(frozen=True)
class SimConfig:
    """Settings for one simulation run.

    ``warmup_queries``, ``update_schedule`` and ``interval`` default to values
    derived from the dataset size (see :meth:`resolve`). ``update_schedule``
    holds absolute query counts under global counting and per-peer log
    lengths under per-peer counting.
    """

    ttl: int = 4
    pmax: int = 3
    overlay_size: int | None = None
    warmup_queries: int | None = None
    update_schedule: tuple | None = None
    strategy: str = "lps_v2"
    intermediate_strategy: str | None = None
    maintenance_mode: str = "static"
    update_counting: str = "global"
    seed: int = 0
    interval: int | None = None
    fallback: bool = True
    random_ties: bool = True
    sqpc_min_overlap: int = 1
    log_intermediate: bool = False

    def __post_init__(self):
        if self.ttl < 0:
            raise DataError("ttl must be non-negative")
        if self.pmax < 1:
            raise DataError("pmax must be at least 1")
        for name in ("strategy", "intermediate_strategy"):
            value = getattr(self, name)
            if value is not None and value not in STRATEGIES:
                raise DataError(f"{name} must be one of {', '.join(STRATEGIES)}, got {value!r}")
        if self.maintenance_mode not in MAINTENANCE_MODES:
            raise DataError(f"maintenance_mode must be one of {', '.join(MAINTENANCE_MODES)}")
        if self.update_counting not in UPDATE_COUNTING:
            raise DataError(f"update_counting must be one of {', '.join(UPDATE_COUNTING)}")
        if self.warmup_queries is not None and self.warmup_queries < 0:
            raise DataError("warmup_queries must be non-negative")
        if self.interval is not None and self.interval < 1:
            raise DataError("interval must be positive")
        if self.sqpc_min_overlap < 1:
            raise DataError("sqpc_min_overlap must be at least 1")
        if self.update_schedule is not None:
            sched = tuple(self.update_schedule)
            if any(b <= a for a, b in zip(sched, sched[1:])) or any(x < 1 for x in sched):
                raise DataError("update_schedule must be positive and strictly increasing")
            object.__setattr__(self, "update_schedule", sched)

    @property
    def intermediate(self) -> str:
        return self.intermediate_strategy or self.strategy

    def resolve(self, n_peers: int, n_queries: int) -> "SimConfig":
        """Fill dataset-dependent defaults."""
        if self.overlay_size is not None and self.overlay_size != n_peers:
            raise DataError(f"overlay_size={self.overlay_size} but the dataset has {n_peers} peers")
        warmup = self.warmup_queries
        if warmup is None:
            warmup = int(n_queries * WARMUP_SHARE)
        warmup = min(warmup, n_queries)
        remaining = n_queries - warmup
        schedule = self.update_schedule
        if schedule is None:
            if self.update_counting == "global":
                schedule = tuple(sorted({warmup + round(remaining * s) for s in UPDATE_SHARES} - {warmup}))
            else:
                per_peer = n_queries / max(n_peers, 1)
                base = per_peer * WARMUP_SHARE
                schedule = tuple(sorted({max(1, round(base + per_peer * (1 - WARMUP_SHARE) * s))
                                         for s in UPDATE_SHARES}))
        interval = self.interval or max(1, round(remaining / INTERVALS_PER_RUN))
        return dataclasses.replace(
            self, overlay_size=n_peers, warmup_queries=warmup, update_schedule=schedule, interval=interval
        )


_FIELDS = {f.name: f for f in dataclasses.fields(SimConfig)}


def parse_value(name: str, text: str):
    if name not in _FIELDS:
        raise DataError(f"unknown config key {name!r}")
    text = text.strip()
    if name == "update_schedule":
        if text in ("", "auto"):
            return None
        try:
            return tuple(int(x) for x in text.split(","))
        except ValueError:
            raise DataError(f"update_schedule: expected comma-separated integers, got {text!r}") from None
    if name in ("strategy", "maintenance_mode", "update_counting"):
        return text
    if name == "intermediate_strategy":
        return None if text in ("", "auto") else text
    if name in ("fallback", "random_ties", "log_intermediate"):
        lowered = text.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise DataError(f"{name}: expected a boolean, got {text!r}")
    if text in ("", "auto") and name in ("overlay_size", "warmup_queries", "interval"):
        return None
    try:
        return int(text)
    except ValueError:
        raise DataError(f"{name}: expected an integer, got {text!r}") from None


def read_config(path: str | Path) -> dict:
    """Read ``key=value`` lines into a dict of SimConfig overrides."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise DataError(f"{path}:{lineno}: expected key=value")
            try:
                values[key.strip()] = parse_value(key.strip(), value)
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    return values


def load_config(path: str | Path) -> SimConfig:
    return SimConfig(**read_config(path))


def dump_config(config: SimConfig) -> str:
    lines = []
    for name in _FIELDS:
        value = getattr(config, name)
        if value is None:
            text = "auto"
        elif isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, tuple):
            text = ",".join(str(x) for x in value)
        else:
            text = str(value)
        lines.append(f"{name}={text}\n")
    return "".join(lines)
