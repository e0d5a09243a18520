"""Value types for discrete and binary quadratic models.

A :class:`DiscreteModel` holds ``n`` variables that each take one of ``m``
consecutive integer values and interact pairwise::

    H(d) = sum_i L[i, d_i] + sum_{i<j} D[i, j, d_i, d_j]

A :class:`BinaryModel` is the QUBO / Ising form the annealer consumes::

    E(x) = offset + sum_i h_i x_i + sum_{i<j} J_ij x_i x_j

with ``x`` either bits ``{0, 1}`` or spins ``{-1, +1}``. The two vartypes are
related by ``b = (1 - z) / 2``.

Both types are immutable; coefficient storage is canonical (one entry per key,
smaller index first, exact zeros dropped).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from dqmforge import _schema
from dqmforge.errors import InputError

__all__ = [
    "Vartype",
    "Encoding",
    "EncodingMeta",
    "DiscreteModel",
    "BinaryModel",
    "dqm_energy",
    "binary_energy",
    "to_spin",
    "to_binary",
]


class Vartype(str, enum.Enum):
    BINARY = "BINARY"
    SPIN = "SPIN"

    @property
    def values(self) -> tuple[int, int]:
        return (0, 1) if self is Vartype.BINARY else (-1, 1)


class Encoding(str, enum.Enum):
    ONE_HOT = "one-hot"
    DOMAIN_WALL = "domain-wall"
    RAW = "raw"

    @classmethod
    def parse(cls, text: str) -> "Encoding":
        key = text.strip().lower().replace("_", "-")
        aliases = {"onehot": "one-hot", "domainwall": "domain-wall", "dw": "domain-wall", "oh": "one-hot"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise InputError(f"unknown encoding {text!r}") from None

    @property
    def slots_per_value_count(self) -> int:
        """Offset from ``m`` to the number of binary slots per variable."""
        return 0 if self is Encoding.ONE_HOT else -1


@dataclass(frozen=True)
class EncodingMeta:
    """How the binary variables of an encoded model map back to a DQM.

    ``var_layout[(i, slot)]`` is the binary-variable index of slot ``slot`` of
    discrete variable ``i``. One-hot uses ``m`` slots per variable (slot =
    value), domain-wall uses ``m - 1`` (slot = inner spin position).
    """

    encoding: Encoding
    n: int
    m: int
    var_layout: Mapping[tuple[int, int], int]
    penalty_strength: float

    def __post_init__(self):
        object.__setattr__(self, "encoding", Encoding(self.encoding))
        object.__setattr__(self, "var_layout", MappingProxyType(dict(self.var_layout)))
        if self.encoding is Encoding.RAW:
            return
        slots = self.slots
        expected = {(i, s) for i in range(self.n) for s in range(slots)}
        if set(self.var_layout) != expected:
            raise InputError("var_layout keys must cover every (variable, slot) pair exactly once")
        indices = sorted(self.var_layout.values())
        if indices != list(range(self.n * slots)):
            raise InputError("var_layout must be a bijection onto 0..num_vars-1")

    @property
    def slots(self) -> int:
        return self.m + self.encoding.slots_per_value_count

    @property
    def num_vars(self) -> int:
        return self.n * self.slots

    def layout_array(self) -> np.ndarray:
        """``(n, slots)`` array of binary-variable indices."""
        out = np.empty((self.n, self.slots), dtype=np.int64)
        for (i, s), idx in self.var_layout.items():
            out[i, s] = idx
        return out

    @classmethod
    def standard(cls, encoding: Encoding, n: int, m: int, penalty_strength: float) -> "EncodingMeta":
        slots = m + Encoding(encoding).slots_per_value_count
        layout = {(i, s): i * slots + s for i in range(n) for s in range(slots)}
        return cls(encoding, n, m, layout, penalty_strength)

    def to_json(self) -> dict:
        return {
            "encoding": self.encoding.value,
            "n": self.n,
            "m": self.m,
            "var_layout": [[i, s, idx] for (i, s), idx in sorted(self.var_layout.items())],
            "penalty_strength": self.penalty_strength,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "EncodingMeta":
        where = "meta"
        encoding = Encoding.parse(_schema.field(payload, "encoding", "str", where))
        n = _schema.field(payload, "n", "int", where)
        m = _schema.field(payload, "m", "int", where)
        rows = _schema.field(payload, "var_layout", "list", where)
        layout = {}
        for r in rows:
            i, s, idx = (int(v) for v in _schema.row(r, 3, "var_layout", where))
            layout[(i, s)] = idx
        strength = float(_schema.field(payload, "penalty_strength", "float", where))
        return cls(encoding, n, m, layout, strength)


@dataclass(frozen=True)
class DiscreteModel:
    """A discrete quadratic model over ``n`` variables with ``m`` values each.

    ``linear`` maps ``(i, alpha)`` to a coefficient; ``quadratic`` maps
    ``(i, j, alpha, beta)`` with ``i < j``. Entries given with ``i > j`` are
    flipped to ``(j, i, beta, alpha)`` and duplicates summed. Self-interactions
    ``(i, i, ., .)`` are rejected.
    """

    n: int
    m: int
    linear: Mapping[tuple[int, int], float] = field(default_factory=dict)
    quadratic: Mapping[tuple[int, int, int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        n, m = self.n, self.m
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise InputError(f"n must be an integer >= 1, got {n!r}")
        if not isinstance(m, (int, np.integer)) or m < 2:
            raise InputError(f"m must be an integer >= 2, got {m!r}")
        lin: dict[tuple[int, int], float] = {}
        for key, value in dict(self.linear).items():
            i, a = (int(k) for k in key)
            if not (0 <= i < n and 0 <= a < m):
                raise InputError(f"linear index {key!r} out of range for n={n}, m={m}")
            lin[(i, a)] = lin.get((i, a), 0.0) + float(value)
        quad: dict[tuple[int, int, int, int], float] = {}
        for key, value in dict(self.quadratic).items():
            i, j, a, b = (int(k) for k in key)
            if i == j:
                raise InputError(f"self-interaction {key!r} is not allowed; fold it into linear terms")
            if not (0 <= i < n and 0 <= j < n and 0 <= a < m and 0 <= b < m):
                raise InputError(f"quadratic index {key!r} out of range for n={n}, m={m}")
            if i > j:
                i, j, a, b = j, i, b, a
            quad[(i, j, a, b)] = quad.get((i, j, a, b), 0.0) + float(value)
        for name, values in (("linear", lin.values()), ("quadratic", quad.values())):
            if not all(math.isfinite(v) for v in values):
                raise InputError(f"{name} coefficients must be finite")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "m", int(m))
        object.__setattr__(self, "linear", MappingProxyType({k: v for k, v in sorted(lin.items()) if v != 0.0}))
        object.__setattr__(self, "quadratic", MappingProxyType({k: v for k, v in sorted(quad.items()) if v != 0.0}))

    @classmethod
    def from_terms(
        cls,
        n: int,
        m: int,
        linear: Iterable[tuple[int, int, float]] = (),
        quadratic: Iterable[tuple[int, int, int, int, float]] = (),
    ) -> "DiscreteModel":
        """Build from flat term lists, summing repeated keys."""
        lin: dict = {}
        for i, a, v in linear:
            lin[(i, a)] = lin.get((i, a), 0.0) + v
        quad: dict = {}
        for i, j, a, b, v in quadratic:
            if i > j:
                i, j, a, b = j, i, b, a
            quad[(i, j, a, b)] = quad.get((i, j, a, b), 0.0) + v
        return cls(n, m, lin, quad)

    @property
    def search_space(self) -> int:
        return self.m ** self.n

    def coefficient_magnitudes(self) -> list[float]:
        return [abs(v) for v in self.linear.values()] + [abs(v) for v in self.quadratic.values()]

    def interaction_graph(self) -> set[tuple[int, int]]:
        return {(i, j) for (i, j, _, _) in self.quadratic}

    def linear_table(self) -> np.ndarray:
        table = np.zeros((self.n, self.m))
        for (i, a), v in self.linear.items():
            table[i, a] = v
        return table

    def dense_quadratic(self) -> np.ndarray:
        """Symmetric ``(n, n, m, m)`` array with ``D[j, i, b, a] == D[i, j, a, b]``."""
        dense = np.zeros((self.n, self.n, self.m, self.m))
        for (i, j, a, b), v in self.quadratic.items():
            dense[i, j, a, b] = v
            dense[j, i, b, a] = v
        return dense

    def energy(self, assignment: Sequence[int]) -> float:
        return dqm_energy(self, assignment)

    def energies(self, assignments: np.ndarray) -> np.ndarray:
        """Vectorised energy of an ``(R, n)`` integer array of assignments."""
        a = np.asarray(assignments, dtype=np.int64)
        if a.ndim != 2 or a.shape[1] != self.n:
            raise InputError(f"assignments must have shape (R, {self.n}), got {a.shape}")
        if a.size and (a.min() < 0 or a.max() >= self.m):
            raise InputError(f"assignment values must lie in 0..{self.m - 1}")
        rows = np.arange(self.n)
        out = self.linear_table()[rows, a].sum(axis=1) if a.size else np.zeros(len(a))
        for (i, j, va, vb), v in self.quadratic.items():
            out = out + v * ((a[:, i] == va) & (a[:, j] == vb))
        return out

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "linear": [[i, a, v] for (i, a), v in self.linear.items()],
            "quadratic": [[i, j, a, b, v] for (i, j, a, b), v in self.quadratic.items()],
        }

    @classmethod
    def from_json(cls, payload: dict) -> "DiscreteModel":
        where = "dqm"
        n = _schema.field(payload, "n", "int", where)
        m = _schema.field(payload, "m", "int", where)
        lin = [_schema.row(r, 3, "linear", where) for r in _schema.field(payload, "linear", "list", where)]
        quad = [_schema.row(r, 5, "quadratic", where) for r in _schema.field(payload, "quadratic", "list", where)]
        return cls.from_terms(
            n, m,
            [(int(i), int(a), float(v)) for i, a, v in lin],
            [(int(i), int(j), int(a), int(b), float(v)) for i, j, a, b, v in quad],
        )


@dataclass(frozen=True)
class BinaryModel:
    """A QUBO (``vartype=BINARY``) or Ising (``vartype=SPIN``) model."""

    num_vars: int
    vartype: Vartype
    linear: Mapping[int, float] = field(default_factory=dict)
    quadratic: Mapping[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0
    meta: EncodingMeta | None = None

    def __post_init__(self):
        if not isinstance(self.num_vars, (int, np.integer)) or self.num_vars < 0:
            raise InputError(f"num_vars must be a non-negative integer, got {self.num_vars!r}")
        try:
            vartype = Vartype(self.vartype)
        except ValueError:
            raise InputError(f"unknown vartype {self.vartype!r}") from None
        N = int(self.num_vars)
        lin: dict[int, float] = {}
        for k, v in dict(self.linear).items():
            k = int(k)
            if not 0 <= k < N:
                raise InputError(f"linear index {k} out of range for num_vars={N}")
            lin[k] = lin.get(k, 0.0) + float(v)
        quad: dict[tuple[int, int], float] = {}
        for key, v in dict(self.quadratic).items():
            i, j = (int(k) for k in key)
            if i == j:
                raise InputError(f"self-loop ({i}, {i}) is not allowed in quadratic terms")
            if not (0 <= i < N and 0 <= j < N):
                raise InputError(f"quadratic index {key!r} out of range for num_vars={N}")
            if i > j:
                i, j = j, i
            quad[(i, j)] = quad.get((i, j), 0.0) + float(v)
        if not all(math.isfinite(v) for v in (*lin.values(), *quad.values(), float(self.offset))):
            raise InputError("coefficients and offset must be finite")
        if self.meta is not None and self.meta.encoding is not Encoding.RAW and self.meta.num_vars != N:
            raise InputError(f"meta describes {self.meta.num_vars} variables but model has {N}")
        object.__setattr__(self, "num_vars", N)
        object.__setattr__(self, "vartype", vartype)
        object.__setattr__(self, "linear", MappingProxyType({k: v for k, v in sorted(lin.items()) if v != 0.0}))
        object.__setattr__(self, "quadratic", MappingProxyType({k: v for k, v in sorted(quad.items()) if v != 0.0}))
        object.__setattr__(self, "offset", float(self.offset))

    def canonical(self) -> "BinaryModel":
        return BinaryModel(self.num_vars, self.vartype, dict(self.linear), dict(self.quadratic), self.offset, self.meta)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(h, rows, cols, J)`` as numpy arrays."""
        h = np.zeros(self.num_vars)
        for k, v in self.linear.items():
            h[k] = v
        if self.quadratic:
            pairs = np.array(list(self.quadratic.keys()), dtype=np.int64)
            J = np.array(list(self.quadratic.values()))
            return h, pairs[:, 0], pairs[:, 1], J
        empty = np.zeros(0, dtype=np.int64)
        return h, empty, empty, np.zeros(0)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.num_vars, dtype=np.int64)
        for i, j in self.quadratic:
            deg[i] += 1
            deg[j] += 1
        return deg

    def energy(self, config: Sequence[int]) -> float:
        return binary_energy(self, config)

    def energies(self, configs: np.ndarray) -> np.ndarray:
        """Vectorised energies of an ``(R, num_vars)`` array of configurations."""
        x = np.asarray(configs)
        if x.ndim != 2 or x.shape[1] != self.num_vars:
            raise InputError(f"configurations must have shape (R, {self.num_vars}), got {x.shape}")
        _check_values(x, self.vartype)
        x = x.astype(np.float64)
        h, rows, cols, J = self.arrays()
        out = self.offset + x @ h
        if len(J):
            out = out + (x[:, rows] * x[:, cols]) @ J
        return out

    def to_json(self) -> dict:
        payload = {
            "num_vars": self.num_vars,
            "vartype": self.vartype.value,
            "linear": [[k, v] for k, v in self.linear.items()],
            "quadratic": [[i, j, v] for (i, j), v in self.quadratic.items()],
            "offset": self.offset,
        }
        if self.meta is not None:
            payload["meta"] = self.meta.to_json()
        return payload

    @classmethod
    def from_json(cls, payload: dict) -> "BinaryModel":
        where = "binary model"
        N = _schema.field(payload, "num_vars", "int", where)
        vt = _schema.field(payload, "vartype", "str", where)
        if vt not in ("BINARY", "SPIN"):
            raise InputError(f"{where}: field 'vartype' must be 'BINARY' or 'SPIN', got {vt!r}")
        lin = [_schema.row(r, 2, "linear", where) for r in _schema.field(payload, "linear", "list", where)]
        quad = [_schema.row(r, 3, "quadratic", where) for r in _schema.field(payload, "quadratic", "list", where)]
        offset = _schema.field(payload, "offset", "float", where)
        meta = EncodingMeta.from_json(payload["meta"]) if payload.get("meta") is not None else None
        linear: dict = {}
        for k, v in lin:
            linear[int(k)] = linear.get(int(k), 0.0) + float(v)
        quadratic: dict = {}
        for i, j, v in quad:
            key = (int(i), int(j))
            quadratic[key] = quadratic.get(key, 0.0) + float(v)
        return cls(N, Vartype(vt), linear, quadratic, float(offset), meta)


def _check_values(x: np.ndarray, vartype: Vartype) -> None:
    lo, hi = vartype.values
    if x.size and not np.all((x == lo) | (x == hi)):
        raise InputError(f"configuration values must be in {{{lo}, {hi}}} for a {vartype.value} model")


def _check_assignment(model: DiscreteModel, assignment: Sequence[int]) -> tuple[int, ...]:
    values = tuple(int(v) for v in assignment)
    if len(values) != model.n:
        raise InputError(f"assignment has length {len(values)}, model has n={model.n}")
    for i, v in enumerate(values):
        if not 0 <= v < model.m:
            raise InputError(f"assignment value d_{i}={v} outside 0..{model.m - 1}")
    return values


def dqm_energy(model: DiscreteModel, assignment: Sequence[int]) -> float:
    """Energy ``sum_i L[i, d_i] + sum_{i<j} D[i, j, d_i, d_j]``."""
    d = _check_assignment(model, assignment)
    total = 0.0
    for i, a in enumerate(d):
        total += model.linear.get((i, a), 0.0)
    for (i, j, a, b), v in model.quadratic.items():
        if d[i] == a and d[j] == b:
            total += v
    return total


def binary_energy(model: BinaryModel, config: Sequence[int]) -> float:
    """Exact energy of one configuration, offset included."""
    x = np.asarray(config)
    if x.ndim != 1 or len(x) != model.num_vars:
        raise InputError(f"configuration length {x.size} does not match num_vars={model.num_vars}")
    _check_values(x, model.vartype)
    total = model.offset
    for k, v in model.linear.items():
        total += v * int(x[k])
    for (i, j), v in model.quadratic.items():
        total += v * int(x[i]) * int(x[j])
    return total


def to_spin(model: BinaryModel) -> BinaryModel:
    """Rewrite a QUBO in spin variables via ``b = (1 - z) / 2``."""
    if model.vartype is not Vartype.BINARY:
        raise InputError("to_spin expects a BINARY model")
    h: dict[int, float] = {}
    J: dict[tuple[int, int], float] = {}
    offset = model.offset
    for k, v in model.linear.items():
        # v * (1 - z) / 2
        offset += v / 2
        h[k] = h.get(k, 0.0) - v / 2
    for (i, j), v in model.quadratic.items():
        # v * (1 - z_i)(1 - z_j) / 4
        offset += v / 4
        h[i] = h.get(i, 0.0) - v / 4
        h[j] = h.get(j, 0.0) - v / 4
        J[(i, j)] = J.get((i, j), 0.0) + v / 4
    return BinaryModel(model.num_vars, Vartype.SPIN, h, J, offset, model.meta)


def to_binary(model: BinaryModel) -> BinaryModel:
    """Rewrite an Ising model in bits via ``z = 1 - 2 b``."""
    if model.vartype is not Vartype.SPIN:
        raise InputError("to_binary expects a SPIN model")
    lin: dict[int, float] = {}
    Q: dict[tuple[int, int], float] = {}
    offset = model.offset
    for k, v in model.linear.items():
        offset += v
        lin[k] = lin.get(k, 0.0) - 2 * v
    for (i, j), v in model.quadratic.items():
        offset += v
        lin[i] = lin.get(i, 0.0) - 2 * v
        lin[j] = lin.get(j, 0.0) - 2 * v
        Q[(i, j)] = Q.get((i, j), 0.0) + 4 * v
    return BinaryModel(model.num_vars, Vartype.BINARY, lin, Q, offset, model.meta)


def spins_to_bits(z: np.ndarray) -> np.ndarray:
    return ((1 - np.asarray(z)) // 2).astype(np.int8)


def bits_to_spins(b: np.ndarray) -> np.ndarray:
    return (1 - 2 * np.asarray(b)).astype(np.int8)
