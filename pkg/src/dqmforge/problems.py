"""Benchmark problem generators: graph coloring and flight-gate assignment."""
from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from dqmforge import _schema
from dqmforge.encode import PenaltyMode, penalty_strength
from dqmforge.errors import ConfigError, InputError
from dqmforge.model import DiscreteModel

__all__ = [
    "Graph",
    "gen_er_graph",
    "coloring_dqm",
    "count_monochromatic",
    "FgaConfig",
    "FgaInstance",
    "gen_fga",
    "forbidden_pairs",
    "fga_dqm",
    "fga_transit_cost",
]


@dataclass(frozen=True)
class Graph:
    q: int
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.q < 1:
            raise InputError(f"graph needs at least one node, got q={self.q}")
        canon = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise InputError(f"self-loop on node {u}")
            if not (0 <= u < self.q and 0 <= v < self.q):
                raise InputError(f"edge ({u}, {v}) references a node outside 0..{self.q - 1}")
            canon.add((min(u, v), max(u, v)))
        if len(canon) != len(self.edges):
            raise InputError("duplicate edges")
        object.__setattr__(self, "edges", tuple(sorted(canon)))

    def to_json(self) -> dict:
        return {"q": self.q, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json(cls, payload: dict) -> "Graph":
        q = _schema.field(payload, "q", "int", "graph")
        edges = [tuple(int(x) for x in _schema.row(e, 2, "edges", "graph"))
                 for e in _schema.field(payload, "edges", "list", "graph")]
        return cls(q, tuple(edges))


def gen_er_graph(q: int, p: float, seed: int) -> Graph:
    """Erdos-Renyi G(q, p); pairs are visited in lexicographic order."""
    if not 0.0 <= p <= 1.0:
        raise InputError(f"edge probability must lie in [0, 1], got {p}")
    if q < 1:
        raise InputError(f"q must be >= 1, got {q}")
    rng = np.random.default_rng(seed)
    pairs = list(itertools.combinations(range(q), 2))
    keep = rng.random(len(pairs)) < p
    return Graph(q, tuple(pr for pr, k in zip(pairs, keep) if k))


def coloring_dqm(graph: Graph, k: int) -> DiscreteModel:
    """Penalise every edge whose endpoints share a color (unit weights)."""
    if k < 2:
        raise InputError(f"need at least two colors, got k={k}")
    quad = {(i, j, a, a): 1.0 for i, j in graph.edges for a in range(k)}
    return DiscreteModel(graph.q, k, {}, quad)


def count_monochromatic(graph: Graph, coloring) -> int:
    return sum(1 for i, j in graph.edges if coloring[i] == coloring[j])


@dataclass(frozen=True)
class FgaConfig:
    """Uniform ranges (inclusive) for the synthetic flight-gate generator.

    ``t_buf=None`` picks the buffer time so that about ``conflict_fraction``
    of all flight pairs are forbidden from sharing a gate.
    """

    passengers: tuple[int, int] = (0, 50)
    transfer_passengers: tuple[int, int] = (0, 20)
    transfer_prob: float = 0.3
    gate_time: tuple[float, float] = (1.0, 10.0)
    arrival_time: tuple[float, float] = (0.0, 360.0)
    stay_time: tuple[float, float] = (20.0, 60.0)
    t_buf: float | None = None
    conflict_fraction: float = 1 / 3

    def __post_init__(self):
        for f in ("passengers", "transfer_passengers", "gate_time", "arrival_time", "stay_time"):
            lo, hi = getattr(self, f)
            if hi < lo:
                raise ConfigError(f"FGA range '{f}' is empty: ({lo}, {hi})")
            if lo < 0:
                raise ConfigError(f"FGA range '{f}' must be non-negative")
            object.__setattr__(self, f, (lo, hi))
        if self.stay_time[0] <= 0:
            raise ConfigError("FGA range 'stay_time' must be strictly positive")
        if not 0.0 <= self.transfer_prob <= 1.0:
            raise ConfigError("FGA 'transfer_prob' must lie in [0, 1]")
        if self.t_buf is not None and self.t_buf < 0:
            raise ConfigError("FGA 't_buf' must be non-negative")

    @classmethod
    def from_json(cls, payload: dict) -> "FgaConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(f"unknown FGA config field(s): {sorted(unknown)}")
        kwargs = {}
        for k, v in payload.items():
            if isinstance(v, list):
                if len(v) != 2:
                    raise ConfigError(f"FGA range '{k}' must be [low, high]")
                v = tuple(v)
            kwargs[k] = v
        return cls(**kwargs)

    def to_json(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


@dataclass(frozen=True)
class FgaInstance:
    """Flight-gate assignment data, named after the usual symbol table."""

    n_dep: tuple[int, ...]
    n_arr: tuple[int, ...]
    n_transfer: tuple[tuple[int, ...], ...]
    t_in: tuple[float, ...]
    t_out: tuple[float, ...]
    t_gate_arr: tuple[float, ...]
    t_gate_dep: tuple[float, ...]
    t_gate_gate: tuple[tuple[float, ...], ...]
    t_buf: float

    def __post_init__(self):
        n, m = self.n_flights, self.m_gates
        if n < 1 or m < 1:
            raise InputError("FGA instance needs at least one flight and one gate")
        for name in ("n_arr", "t_in", "t_out"):
            if len(getattr(self, name)) != n:
                raise InputError(f"FGA field '{name}' must have length {n}")
        if len(self.t_gate_arr) != m:
            raise InputError(f"FGA field 't_gate_arr' must have length {m}")
        nt = np.asarray(self.n_transfer, dtype=float)
        tg = np.asarray(self.t_gate_gate, dtype=float)
        if nt.shape != (n, n):
            raise InputError(f"FGA field 'n_transfer' must be {n}x{n}")
        if tg.shape != (m, m):
            raise InputError(f"FGA field 't_gate_gate' must be {m}x{m}")
        if not np.allclose(tg, tg.T) or np.any(np.diag(tg) != 0):
            raise InputError("FGA field 't_gate_gate' must be symmetric with a zero diagonal")
        if np.any(np.diag(nt) != 0):
            raise InputError("FGA field 'n_transfer' must have a zero diagonal")
        for name in ("n_dep", "n_arr", "t_in", "t_out", "t_gate_arr", "t_gate_dep"):
            if min(getattr(self, name)) < 0:
                raise InputError(f"FGA field '{name}' must be non-negative")
        if nt.min() < 0 or tg.min() < 0 or self.t_buf < 0:
            raise InputError("FGA transfer counts, gate-gate times and t_buf must be non-negative")
        if any(o <= i for i, o in zip(self.t_in, self.t_out)):
            raise InputError("FGA requires t_out > t_in for every flight")

    @property
    def n_flights(self) -> int:
        return len(self.n_dep)

    @property
    def m_gates(self) -> int:
        return len(self.t_gate_dep)

    def to_json(self) -> dict:
        return {k: (np.asarray(v).tolist() if isinstance(v, tuple) else v) for k, v in asdict(self).items()}

    @classmethod
    def from_json(cls, payload: dict) -> "FgaInstance":
        where = "fga"
        vec = lambda k: tuple(_schema.field(payload, k, "list", where))  # noqa: E731
        mat = lambda k: tuple(tuple(r) for r in _schema.field(payload, k, "list", where))  # noqa: E731
        return cls(
            n_dep=vec("n_dep"), n_arr=vec("n_arr"), n_transfer=mat("n_transfer"),
            t_in=vec("t_in"), t_out=vec("t_out"),
            t_gate_arr=vec("t_gate_arr"), t_gate_dep=vec("t_gate_dep"),
            t_gate_gate=mat("t_gate_gate"),
            t_buf=float(_schema.field(payload, "t_buf", "float", where)),
        )


def _conflict_thresholds(t_in, t_out) -> np.ndarray:
    """Per pair, the smallest t_buf strictly above which the pair conflicts."""
    n = len(t_in)
    out = []
    for i, j in itertools.combinations(range(n), 2):
        out.append(max(t_in[i] - t_out[j], t_in[j] - t_out[i]))
    return np.asarray(out, dtype=float)


def gen_fga(n: int = 7, m: int = 2, seed: int = 0, config: FgaConfig | None = None) -> FgaInstance:
    """Draw a synthetic flight-gate instance; deterministic in ``seed``."""
    if n < 1 or m < 1:
        raise InputError(f"need n >= 1 flights and m >= 1 gates, got n={n}, m={m}")
    cfg = config or FgaConfig()
    rng = np.random.default_rng(seed)

    def ints(rng_range, size):
        lo, hi = rng_range
        return rng.integers(int(lo), int(hi) + 1, size=size)

    def reals(rng_range, size):
        lo, hi = rng_range
        return rng.uniform(lo, hi, size=size) if hi > lo else np.full(size, float(lo))

    n_dep = ints(cfg.passengers, n)
    n_arr = ints(cfg.passengers, n)
    transfers = ints(cfg.transfer_passengers, (n, n))
    mask = rng.random((n, n)) < cfg.transfer_prob
    transfers = np.where(mask, transfers, 0)
    np.fill_diagonal(transfers, 0)
    t_in = np.round(reals(cfg.arrival_time, n), 1)
    t_out = np.round(t_in + reals(cfg.stay_time, n), 1)
    t_gate_arr = np.round(reals(cfg.gate_time, m), 1)
    t_gate_dep = np.round(reals(cfg.gate_time, m), 1)
    gg = np.round(reals(cfg.gate_time, (m, m)), 1)
    gg = np.triu(gg, 1)
    gg = gg + gg.T

    if cfg.t_buf is not None:
        t_buf = float(cfg.t_buf)
    else:
        thresholds = np.sort(_conflict_thresholds(t_in, t_out))
        target = int(round(cfg.conflict_fraction * len(thresholds)))
        if target == 0 or len(thresholds) == 0:
            t_buf = 0.0
        else:
            # conflicts are pairs with threshold < t_buf
            cut = thresholds[target - 1]
            upper = thresholds[target] if target < len(thresholds) else cut + 2.0
            t_buf = max(0.0, round((cut + upper) / 2, 2) if upper > cut else cut + 0.01)

    return FgaInstance(
        n_dep=tuple(int(v) for v in n_dep),
        n_arr=tuple(int(v) for v in n_arr),
        n_transfer=tuple(tuple(int(v) for v in r) for r in transfers),
        t_in=tuple(float(v) for v in t_in),
        t_out=tuple(float(v) for v in t_out),
        t_gate_arr=tuple(float(v) for v in t_gate_arr),
        t_gate_dep=tuple(float(v) for v in t_gate_dep),
        t_gate_gate=tuple(tuple(float(v) for v in r) for r in gg),
        t_buf=t_buf,
    )


def forbidden_pairs(inst: FgaInstance) -> list[tuple[int, int]]:
    """Flight pairs ``i < j`` whose ground times overlap within ``t_buf``."""
    out = []
    for i, j in itertools.combinations(range(inst.n_flights), 2):
        if (inst.t_in[i] - inst.t_out[j] < inst.t_buf) and (inst.t_in[j] - inst.t_out[i] < inst.t_buf):
            out.append((i, j))
    return out


def _fga_cost_terms(inst: FgaInstance):
    n, m = inst.n_flights, inst.m_gates
    lin = [(i, a, inst.n_dep[i] * inst.t_gate_dep[a] + inst.n_arr[i] * inst.t_gate_arr[a])
           for i in range(n) for a in range(m)]
    quad = []
    for i in range(n):
        for j in range(n):
            if i == j or inst.n_transfer[i][j] == 0:
                continue
            for a in range(m):
                for b in range(m):
                    quad.append((i, j, a, b, inst.n_transfer[i][j] * inst.t_gate_gate[a][b]))
    return lin, quad


def fga_transit_cost(inst: FgaInstance, gates) -> float:
    """Total passenger transit time of a gate assignment (no penalties)."""
    lin, quad = _fga_cost_terms(inst)
    total = sum(v for i, a, v in lin if gates[i] == a)
    total += sum(v for i, j, a, b, v in quad if gates[i] == a and gates[j] == b)
    return total


def fga_dqm(inst: FgaInstance, mu_mode: PenaltyMode = PenaltyMode()) -> DiscreteModel:
    """Transit-time cost plus ``mu`` on every same-gate forbidden pair."""
    lin, quad = _fga_cost_terms(inst)
    cost_only = DiscreteModel.from_terms(inst.n_flights, inst.m_gates, lin, quad)
    mu = penalty_strength(cost_only, mu_mode)
    quad = quad + [(i, j, a, a, mu) for i, j in forbidden_pairs(inst) for a in range(inst.m_gates)]
    return DiscreteModel.from_terms(inst.n_flights, inst.m_gates, lin, quad)
