"""Day scenarios of DER output and nodal load, CSV I/O and a synthetic generator."""

from __future__ import annotations

import csv
import json
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import truncnorm

from .network import Network

__all__ = [
    "DayScenario",
    "ScenarioSet",
    "ScenarioError",
    "SyntheticProfile",
    "load_scenarios",
    "write_scenarios",
    "generate_synthetic",
]

_DAY_FILE = re.compile(r"^day_(\d+)\.csv$")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DayScenario:
    """One day: ``alpha`` is T x |L|, ``d`` and ``e`` are T x |V|."""

    day_id: int
    alpha: np.ndarray
    d: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        t = self.alpha.shape[0]
        if self.d.shape[0] != t or self.e.shape[0] != t:
            raise ScenarioError(f"day {self.day_id}: alpha, d and e need the same number of rows")
        if self.d.shape != self.e.shape:
            raise ScenarioError(f"day {self.day_id}: d and e shapes differ")
        if np.any(self.alpha < 0) or np.any(self.alpha > 1):
            raise ScenarioError(f"day {self.day_id}: alpha outside [0, 1]")

    @property
    def T(self) -> int:
        return self.alpha.shape[0]

    def __eq__(self, other):
        if not isinstance(other, DayScenario):
            return NotImplemented
        return (
            self.day_id == other.day_id
            and np.array_equal(self.alpha, other.alpha)
            and np.array_equal(self.d, other.d)
            and np.array_equal(self.e, other.e)
        )


@dataclass(frozen=True, eq=False)
class ScenarioSet:
    days: tuple[DayScenario, ...]

    def __post_init__(self):
        if not self.days:
            raise ScenarioError("a scenario set needs at least one day")
        first = self.days[0]
        for day in self.days[1:]:
            if day.alpha.shape != first.alpha.shape or day.d.shape != first.d.shape:
                raise ScenarioError(
                    f"day {day.day_id} has shape alpha{day.alpha.shape}/d{day.d.shape}, "
                    f"expected alpha{first.alpha.shape}/d{first.d.shape}"
                )

    @property
    def N(self) -> int:
        return len(self.days)

    @property
    def T(self) -> int:
        return self.days[0].T

    @property
    def n_candidates(self) -> int:
        return self.days[0].alpha.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.days[0].d.shape[1]

    def day_ids(self) -> list[int]:
        return [d.day_id for d in self.days]

    def subset(self, day_ids) -> "ScenarioSet":
        keep = set(day_ids)
        return ScenarioSet(tuple(d for d in self.days if d.day_id in keep))

    def check_against(self, network: Network) -> list[str]:
        problems = []
        if self.n_candidates != network.n_candidates:
            problems.append(f"scenarios have {self.n_candidates} DER columns, network has {network.n_candidates} candidates")
        if self.n_nodes != network.n_nodes:
            problems.append(f"scenarios have {self.n_nodes} load columns, network has {network.n_nodes} nodes")
        return problems

    def __eq__(self, other):
        if not isinstance(other, ScenarioSet):
            return NotImplemented
        return len(self.days) == len(other.days) and all(a == b for a, b in zip(self.days, other.days))


def _header(n_l, n_v):
    return (
        [f"alpha_{k}" for k in range(1, n_l + 1)]
        + [f"d_{j}" for j in range(1, n_v + 1)]
        + [f"e_{j}" for j in range(1, n_v + 1)]
    )


def _read_day(path, day_id, n_l, n_v):
    name = os.path.basename(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ScenarioError(f"{name}: empty file")
    header = [h.strip() for h in rows[0]]
    expected = _header(n_l, n_v)
    missing = [c for c in expected if c not in header]
    if missing:
        raise ScenarioError(f"{name}: missing column(s) {', '.join(missing)}")
    cols = [header.index(c) for c in expected]
    data = np.empty((len(rows) - 1, len(expected)))
    for r, row in enumerate(rows[1:], start=2):
        for c, src in enumerate(cols):
            try:
                data[r - 2, c] = float(row[src])
            except (ValueError, IndexError):
                cell = row[src] if src < len(row) else ""
                raise ScenarioError(f"{name}, row {r}: non-numeric value {cell!r} in column {expected[c]}") from None
        bad = np.flatnonzero((data[r - 2, :n_l] < 0) | (data[r - 2, :n_l] > 1))
        if bad.size:
            k = bad[0]
            raise ScenarioError(f"{name}, row {r}: alpha_{k + 1} = {data[r - 2, k]} outside [0, 1]")
    return DayScenario(day_id, data[:, :n_l], data[:, n_l : n_l + n_v], data[:, n_l + n_v :])


def load_scenarios(directory, network: Network, threads: int = 1) -> ScenarioSet:
    """Read every ``day_<id>.csv`` in ``directory``, ordered by day id."""
    found = []
    for fname in os.listdir(directory):
        m = _DAY_FILE.match(fname)
        if m:
            found.append((int(m.group(1)), os.path.join(directory, fname)))
    if not found:
        raise ScenarioError(f"{directory}: no day_<id>.csv files")
    found.sort()
    n_l, n_v = network.n_candidates, network.n_nodes

    meta_path = os.path.join(directory, "scenarios_meta.json")
    if os.path.exists(meta_path):
        with open(meta_path) as fh:
            meta = json.load(fh)
        if meta.get("L") != n_l or meta.get("V") != n_v:
            raise ScenarioError(
                f"{meta_path}: dimension mismatch vs network "
                f"(file L={meta.get('L')}, V={meta.get('V')}; network L={n_l}, V={n_v})"
            )

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        days = list(pool.map(lambda item: _read_day(item[1], item[0], n_l, n_v), found))
    t0 = days[0].T
    for (day_id, path), day in zip(found, days):
        if day.T != t0:
            raise ScenarioError(f"{os.path.basename(path)}: dimension mismatch, {day.T} rows but other days have {t0}")
    return ScenarioSet(tuple(days))


def write_scenarios(scenarios: ScenarioSet, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    header = _header(scenarios.n_candidates, scenarios.n_nodes)
    for day in scenarios.days:
        path = os.path.join(directory, f"day_{day.day_id}.csv")
        tmp = path + ".tmp"
        with open(tmp, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in np.hstack([day.alpha, day.d, day.e]):
                # repr round-trips float64 exactly
                w.writerow([repr(float(v)) for v in row])
        os.replace(tmp, path)
    meta = {"n_days": scenarios.N, "T": scenarios.T, "L": scenarios.n_candidates, "V": scenarios.n_nodes}
    with open(os.path.join(directory, "scenarios_meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2)


@dataclass(frozen=True)
class SyntheticProfile:
    """Shape parameters of the synthetic day generator (hours on a 24 h clock).

    PV output is a Gaussian bell centred at ``solar_peak`` and zero outside
    ``[sunrise, sunset]``, scaled per day by a truncated-normal amplitude.
    Load is ``base_load`` times a morning/evening double peak, with
    truncated-normal multiplicative noise per snapshot.
    """

    sunrise: float = 6.0
    sunset: float = 18.0
    solar_peak: float = 12.0
    solar_width: float = 2.5
    amplitude_mean: float = 0.9
    amplitude_noise: float = 0.05
    site_noise: float = 0.02
    base_load: float = 0.02
    load_noise: float = 0.1
    morning_peak: float = 8.0
    evening_peak: float = 19.0
    peak_width: float = 2.0
    night_level: float = 0.5
    q_ratio: float = 0.3
    truncation: float = 2.0

    def check(self):
        for name in ("amplitude_noise", "site_noise", "load_noise"):
            if getattr(self, name) < 0:
                raise ScenarioError(f"{name} must be non-negative")
        if self.solar_width <= 0 or self.peak_width <= 0 or self.truncation <= 0:
            raise ScenarioError("widths and truncation must be positive")
        if self.base_load < 0:
            raise ScenarioError("base_load must be non-negative")


def _noise(rng, scale, truncation, size):
    if scale == 0:
        return np.zeros(size)
    return scale * truncnorm.rvs(-truncation, truncation, size=size, random_state=rng)


def generate_synthetic(network: Network, n_days: int, T: int, seed: int, profile: SyntheticProfile | None = None) -> ScenarioSet:
    """Seeded synthetic day scenarios matching ``network`` dimensions."""
    profile = profile or SyntheticProfile()
    profile.check()
    if n_days < 1 or T < 1:
        raise ScenarioError("n_days and T must be at least 1")
    rng = np.random.default_rng(seed)
    n_l, n_v = network.n_candidates, network.n_nodes
    hours = (np.arange(T) + 0.5) * 24.0 / T

    bell = np.exp(-0.5 * ((hours - profile.solar_peak) / profile.solar_width) ** 2)
    bell[(hours < profile.sunrise) | (hours > profile.sunset)] = 0.0
    shape = profile.night_level + (1 - profile.night_level) * np.maximum(
        np.exp(-0.5 * ((hours - profile.morning_peak) / profile.peak_width) ** 2),
        np.exp(-0.5 * ((hours - profile.evening_peak) / profile.peak_width) ** 2),
    )

    days = []
    for i in range(n_days):
        amp = profile.amplitude_mean + _noise(rng, profile.amplitude_noise, profile.truncation, 1)
        site = amp + _noise(rng, profile.site_noise, profile.truncation, n_l)
        alpha = np.clip(np.outer(bell, site), 0.0, 1.0)
        mult = 1.0 + _noise(rng, profile.load_noise, profile.truncation, (T, n_v))
        d = np.maximum(profile.base_load * shape[:, None] * mult, 0.0)
        e = profile.q_ratio * d
        days.append(DayScenario(i + 1, alpha, d, e))
    return ScenarioSet(tuple(days))
