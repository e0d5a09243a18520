"""Hardware graphs, chain embeddings and chain-break repair.

Physical qubits are integers ``0..num_qubits-1``. An :class:`Embedding` maps
each logical variable to a connected chain of qubits; :func:`apply_embedding`
spreads the logical model over the chains and binds each chain with
ferromagnetic couplings of magnitude ``chain_strength``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np
import heapq

from numba import njit

from dqmforge import _schema
from dqmforge.errors import EmbeddingError, InputError
from dqmforge.model import BinaryModel, Vartype

__all__ = [
    "HardwareGraph",
    "Embedding",
    "ChainMode",
    "gen_chimera",
    "embed_greedy",
    "is_valid_embedding",
    "chain_strength",
    "apply_embedding",
    "unembed",
]


@dataclass(frozen=True)
class HardwareGraph:
    num_qubits: int
    edges: frozenset[tuple[int, int]]
    name: str = "custom"

    def __post_init__(self):
        canon = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise InputError(f"hardware graph has a self-loop on qubit {a}")
            if not (0 <= a < self.num_qubits and 0 <= b < self.num_qubits):
                raise InputError(f"hardware edge ({a}, {b}) outside 0..{self.num_qubits - 1}")
            canon.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(canon))

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.num_qubits)]
        for a, b in sorted(self.edges):
            adj[a].append(b)
            adj[b].append(a)
        return adj

    def to_json(self) -> dict:
        return {"num_qubits": self.num_qubits, "edges": [list(e) for e in sorted(self.edges)], "name": self.name}

    @classmethod
    def from_json(cls, payload: dict) -> "HardwareGraph":
        n = _schema.field(payload, "num_qubits", "int", "hardware graph")
        edges = [tuple(int(v) for v in _schema.row(e, 2, "edges", "hardware graph"))
                 for e in _schema.field(payload, "edges", "list", "hardware graph")]
        return cls(n, frozenset(edges), str(payload.get("name", "custom")))


def gen_chimera(rows: int, cols: int, shore: int = 4) -> HardwareGraph:
    """Chimera lattice of ``rows x cols`` cells, each a ``K_{shore,shore}``.

    Qubit ``(r, c, u, k)`` has index ``((r * cols + c) * 2 + u) * shore + k``.
    Side ``u=0`` couples vertically to the same ``k`` in the cell below,
    side ``u=1`` horizontally to the cell on the right.
    """
    if min(rows, cols, shore) < 1:
        raise InputError("chimera dimensions must all be >= 1")

    def q(r, c, u, k):
        return ((r * cols + c) * 2 + u) * shore + k

    edges = set()
    for r in range(rows):
        for c in range(cols):
            for k in range(shore):
                for k2 in range(shore):
                    edges.add((q(r, c, 0, k), q(r, c, 1, k2)))
                if r + 1 < rows:
                    edges.add((q(r, c, 0, k), q(r + 1, c, 0, k)))
                if c + 1 < cols:
                    edges.add((q(r, c, 1, k), q(r, c + 1, 1, k)))
    return HardwareGraph(rows * cols * 2 * shore, frozenset(edges), f"chimera({rows},{cols},{shore})")


@dataclass(frozen=True)
class Embedding:
    chains: Mapping[int, tuple[int, ...]]
    chain_strength: float = 1.0

    def __post_init__(self):
        chains = {int(v): tuple(int(q) for q in c) for v, c in dict(self.chains).items()}
        seen: set[int] = set()
        for v, c in chains.items():
            if not c:
                raise InputError(f"chain of variable {v} is empty")
            if len(set(c)) != len(c) or seen & set(c):
                raise InputError(f"chains must be disjoint sequences of distinct qubits (variable {v})")
            seen.update(c)
        if not self.chain_strength > 0:
            raise InputError(f"chain_strength must be positive, got {self.chain_strength}")
        object.__setattr__(self, "chains", dict(sorted(chains.items())))

    def with_strength(self, strength: float) -> "Embedding":
        return replace(self, chain_strength=float(strength))

    def max_chain_length(self) -> int:
        return max((len(c) for c in self.chains.values()), default=0)

    def to_json(self) -> dict:
        return {"chains": {str(v): list(c) for v, c in self.chains.items()}, "chain_strength": self.chain_strength}

    @classmethod
    def from_json(cls, payload: dict) -> "Embedding":
        raw = _schema.field(payload, "chains", "dict", "embedding")
        try:
            chains = {int(k): tuple(int(q) for q in v) for k, v in raw.items()}
        except (TypeError, ValueError):
            raise InputError("embedding: field 'chains' must map integer variables to lists of qubits") from None
        return cls(chains, float(_schema.field(payload, "chain_strength", "float", "embedding")))


def is_valid_embedding(emb: Embedding, logical_edges: Iterable[tuple[int, int]], hw: HardwareGraph,
                       variables: Iterable[int] | None = None) -> bool:
    """Disjoint, connected chains that cover every logical edge with a physical edge."""
    try:
        _validate(emb, logical_edges, hw, variables)
    except EmbeddingError:
        return False
    return True


def _validate(emb, logical_edges, hw, variables=None) -> None:
    adj = hw.adjacency()
    for v in variables or ():
        if v not in emb.chains:
            raise EmbeddingError(f"variable {v} has no chain")
    for v, chain in emb.chains.items():
        if any(not 0 <= q < hw.num_qubits for q in chain):
            raise EmbeddingError(f"chain of variable {v} uses a qubit outside the hardware graph")
        members = set(chain)
        seen = {chain[0]}
        todo = [chain[0]]
        while todo:
            cur = todo.pop()
            for nb in adj[cur]:
                if nb in members and nb not in seen:
                    seen.add(nb)
                    todo.append(nb)
        if seen != members:
            raise EmbeddingError(f"chain of variable {v} is not connected")
    for u, v in logical_edges:
        if u not in emb.chains or v not in emb.chains:
            raise EmbeddingError(f"logical edge ({u}, {v}) references an unembedded variable")
        if not _chain_edges(emb.chains[u], emb.chains[v], hw):
            raise EmbeddingError(f"no physical edge between chains of {u} and {v}")


def _chain_edges(cu, cv, hw: HardwareGraph) -> list[tuple[int, int]]:
    return [(a, b) for a in cu for b in cv if (min(a, b), max(a, b)) in hw.edges]


@njit(cache=True)
def _dijkstra(indptr, nbrs, cost, sources):
    """Multi-source shortest paths where entering qubit ``q`` costs ``cost[q]``."""
    n = cost.shape[0]
    dist = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.int64)
    heap = [(0.0, np.int64(0))]
    heap.pop()
    for s in sources:
        dist[s] = 0.0
        heap.append((0.0, np.int64(s)))
    heapq.heapify(heap)
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for k in range(indptr[u], indptr[u + 1]):
            w = nbrs[k]
            nd = d + cost[w]
            if nd < dist[w]:
                dist[w] = nd
                pred[w] = u
                heapq.heappush(heap, (nd, w))
    return dist, pred


class _Router:
    def __init__(self, hw: HardwareGraph):
        self.n = hw.num_qubits
        adj = hw.adjacency()
        self.indptr = np.zeros(self.n + 1, dtype=np.int64)
        self.indptr[1:] = np.cumsum([len(a) for a in adj])
        self.nbrs = np.array([q for a in adj for q in a], dtype=np.int64)

    def search(self, cost: np.ndarray, chain) -> tuple[np.ndarray, np.ndarray]:
        return _dijkstra(self.indptr, self.nbrs, cost, np.asarray(chain, dtype=np.int64))


def _route(v, chains, neighbors, router: _Router, cost: np.ndarray) -> list[int]:
    placed = [u for u in sorted(neighbors[v]) if u in chains]
    if not placed:
        return [int(np.argmin(cost))]
    searches = [router.search(cost, chains[u]) for u in placed]
    total = np.zeros(router.n)
    for dist, _ in searches:
        total += dist
    # the root is paid for once, not once per neighbour
    total -= (len(searches) - 1) * cost
    for u in placed:
        total[list(chains[u])] = np.inf
    if not np.isfinite(total).any():
        return []
    root = int(np.argmin(total))
    chain = {root}
    for u, (dist, pred) in zip(placed, searches):
        members = set(chains[u])
        cur = root
        while True:
            prev = int(pred[cur])
            if prev < 0 or prev in members:
                break
            chain.add(prev)
            cur = prev
    return sorted(chain)


def _search_embedding(order, neighbors, router: _Router, rng, passes: int,
                      patience: int = 10) -> dict[int, list[int]] | None:
    # negotiated congestion: shared qubits get pricier every pass and qubits
    # that stay contested accumulate a history cost
    n = router.n
    usage = np.zeros(n, dtype=np.int64)
    history = np.zeros(n)
    chains: dict[int, list[int]] = {}
    present = 0.5

    def place(v):
        if v in chains:
            usage[chains[v]] -= 1
            del chains[v]
        # jitter breaks ties so repeated reroutes explore different paths
        cost = (1.0 + history) * (1.0 + present * usage) * (1.0 + 0.05 * rng.random(n))
        chain = _route(v, chains, neighbors, router, cost)
        if not chain:
            return False
        chains[v] = chain
        usage[chain] += 1
        return True

    for v in order:
        if not place(v):
            return None
    best, stale = None, 0
    for _ in range(passes):
        overlap = int(np.maximum(usage - 1, 0).sum())
        if overlap == 0:
            return chains
        if best is None or overlap < best:
            best, stale = overlap, 0
        else:
            stale += 1
            if stale >= patience:
                return None
        history += 0.3 * np.maximum(usage - 1, 0)
        present *= 1.1
        for k in rng.permutation(len(order)):
            if not place(order[k]):
                return None
    return chains if usage.max() <= 1 else None


def embed_greedy(logical_edges: Iterable[tuple[int, int]], hw: HardwareGraph, attempts: int = 3,
                 seed: int = 0, variables: Iterable[int] | None = None,
                 chain_strength: float = 1.0, passes: int = 100) -> Embedding | None:
    """Best-effort chain embedding; ``None`` means FAIL after ``attempts`` tries.

    Each attempt orders the logical variables randomly and places each one at
    the qubit nearest (in summed path cost) to its already-placed neighbours,
    growing the chain along those shortest paths. Qubits already used by other
    chains are allowed at a price, so free qubits are preferred; up to
    ``passes`` rip-up-and-reroute rounds then try to remove the remaining
    overlaps, giving up early once the overlap count stops improving.
    Attempts run in index order and the first valid embedding wins.
    """
    if attempts < 1:
        raise InputError(f"attempts must be >= 1, got {attempts}")
    edges = sorted({(min(u, v), max(u, v)) for u, v in logical_edges})
    if any(u == v for u, v in edges):
        raise InputError("logical graph has a self-loop")
    nodes = sorted(set(variables or ()) | {x for e in edges for x in e})
    if not nodes:
        return Embedding({}, chain_strength)
    if all(0 <= v < hw.num_qubits for v in nodes) and all(e in hw.edges for e in edges):
        return Embedding({v: (v,) for v in nodes}, chain_strength)
    if len(nodes) > hw.num_qubits or not hw.edges:
        return None
    neighbors: dict[int, set[int]] = {v: set() for v in nodes}
    for u, v in edges:
        neighbors[u].add(v)
        neighbors[v].add(u)
    router = _Router(hw)
    for attempt in range(attempts):
        rng = np.random.default_rng([seed, attempt])
        order = [nodes[k] for k in rng.permutation(len(nodes))]
        chains = _search_embedding(order, neighbors, router, rng, passes)
        if chains is None:
            continue
        emb = Embedding({v: tuple(c) for v, c in chains.items()}, chain_strength)
        if is_valid_embedding(emb, edges, hw, nodes):
            return emb
    return None


@dataclass(frozen=True)
class ChainMode:
    """``utc`` (uniform torque compensation, ``value`` = prefactor),
    ``fixed`` (``value`` as given) or ``max`` (largest |h| or |J|)."""

    kind: str = "utc"
    value: float = 1.414

    def __post_init__(self):
        if self.kind not in ("utc", "fixed", "max"):
            raise InputError(f"unknown chain mode {self.kind!r}")
        if self.kind != "max" and not self.value > 0:
            raise InputError(f"{self.kind} chain value must be positive, got {self.value}")

    @classmethod
    def parse(cls, text: str) -> "ChainMode":
        kind, _, arg = text.strip().lower().partition(":")
        if kind == "max":
            return cls("max", 1.0)
        if kind == "utc":
            return cls("utc", float(arg) if arg else 1.414)
        if kind == "fixed" and arg:
            try:
                return cls("fixed", float(arg))
            except ValueError:
                pass
        raise InputError(f"cannot parse chain mode {text!r}; expected utc[:prefactor], fixed:V or max")

    def __str__(self) -> str:
        return "max" if self.kind == "max" else f"{self.kind}:{self.value:g}"


def chain_strength(logical: BinaryModel, mode: ChainMode = ChainMode()) -> float:
    """Resolve a chain-strength mode against a logical Ising model.

    ``utc`` returns ``prefactor * rms(J) * sqrt(mean degree)``.
    """
    if logical.vartype is not Vartype.SPIN:
        raise InputError("chain_strength expects a SPIN model")
    if mode.kind == "fixed":
        return mode.value
    if not logical.quadratic:
        return 1.0
    J = np.fromiter(logical.quadratic.values(), dtype=float)
    if mode.kind == "max":
        h = np.fromiter(logical.linear.values(), dtype=float)
        return float(max(np.abs(J).max(), np.abs(h).max() if len(h) else 0.0))
    rms = math.sqrt(float(np.mean(J ** 2)))
    return mode.value * rms * math.sqrt(float(logical.degrees().mean()))


def apply_embedding(logical: BinaryModel, emb: Embedding, hw: HardwareGraph) -> BinaryModel:
    """Spread a logical Ising model over the chains of ``emb``.

    Fields are split equally across a chain's qubits, couplings equally across
    all physical edges joining two chains, and every hardware edge inside a
    chain receives ``-chain_strength``. The result has one variable per qubit.
    """
    if logical.vartype is not Vartype.SPIN:
        raise InputError("apply_embedding expects a SPIN model")
    missing = [v for v in range(logical.num_vars) if v not in emb.chains]
    if missing:
        raise EmbeddingError(f"variables {missing[:5]} have no chain")
    h: dict[int, float] = {}
    J: dict[tuple[int, int], float] = {}
    for v, bias in logical.linear.items():
        chain = emb.chains[v]
        for q in chain:
            h[q] = h.get(q, 0.0) + bias / len(chain)
    for (u, v), bias in logical.quadratic.items():
        links = _chain_edges(emb.chains[u], emb.chains[v], hw)
        if not links:
            raise EmbeddingError(f"no physical edge between chains of {u} and {v}")
        for a, b in links:
            key = (min(a, b), max(a, b))
            J[key] = J.get(key, 0.0) + bias / len(links)
    for chain in emb.chains.values():
        members = sorted(chain)
        for x in range(len(members)):
            for y in range(x + 1, len(members)):
                key = (members[x], members[y])
                if key in hw.edges:
                    J[key] = J.get(key, 0.0) - emb.chain_strength
    return BinaryModel(hw.num_qubits, Vartype.SPIN, h, J, logical.offset)


def chain_edge_count(emb: Embedding, hw: HardwareGraph) -> int:
    return sum(1 for c in emb.chains.values() for a in c for b in c if a < b and (a, b) in hw.edges)


def unembed(physical: np.ndarray, emb: Embedding, repair: str = "majority") -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Map physical spin reads back to logical spins.

    Returns ``(logical, broken, kept)``: ``logical`` holds one row per kept
    read (``num_logical`` columns in variable order), ``broken`` flags every
    input read that had at least one broken chain, and ``kept`` indexes the
    input reads that produced the rows of ``logical``.

    ``majority`` resolves a broken chain to the sign of its spin sum, ties going
    to the lowest-index qubit of the chain; ``discard`` drops broken reads.
    """
    if repair not in ("majority", "discard"):
        raise InputError(f"unknown repair mode {repair!r}")
    x = np.asarray(physical)
    if x.ndim == 1:
        x = x[None, :]
    variables = list(emb.chains)
    R = x.shape[0]
    logical = np.empty((R, len(variables)), dtype=np.int8)
    broken = np.zeros(R, dtype=bool)
    for col, v in enumerate(variables):
        chain = list(emb.chains[v])
        if max(chain) >= x.shape[1]:
            raise InputError(f"chain of variable {v} references qubit {max(chain)} beyond sample width {x.shape[1]}")
        spins = x[:, chain].astype(np.int64)
        total = spins.sum(axis=1)
        broken |= np.abs(total) != len(chain)
        lowest = spins[:, int(np.argmin(chain))]
        logical[:, col] = np.where(total > 0, 1, np.where(total < 0, -1, lowest))
    if repair == "discard":
        kept = np.flatnonzero(~broken)
    else:
        kept = np.arange(R)
    return logical[kept], broken, kept
