"""One-hot and domain-wall compilation of discrete models into binary models.

One-hot uses ``m`` bits per variable and the penalty
``lam * (sum_a x[i, a] - 1)**2``; the output is a QUBO.

Domain-wall uses ``m - 1`` inner spins per variable on a chain with fixed ends
``s[i, -1] = -1`` and ``s[i, m-1] = +1``. Value indicators are
``x[i, a] = (s[i, a] - s[i, a-1]) / 2`` and the chain is held together by
``-kappa * sum_a s[i, a] s[i, a+1]``; the output is an Ising model.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from dqmforge.errors import InputError
from dqmforge.model import (
    BinaryModel,
    DiscreteModel,
    Encoding,
    EncodingMeta,
    Vartype,
    bits_to_spins,
    spins_to_bits,
)

__all__ = [
    "PenaltyMode",
    "EncodeOptions",
    "DecodedSample",
    "penalty_strength",
    "encode",
    "encode_one_hot",
    "encode_domain_wall",
    "decode",
    "decode_many",
    "encode_assignment",
    "chain_ground_energy",
]


@dataclass(frozen=True)
class PenaltyMode:
    """Constraint-strength policy: ``auto`` (largest coefficient magnitude),
    ``fixed`` (``value`` as given) or ``scaled`` (``value`` times auto)."""

    kind: str = "auto"
    value: float = 1.0

    def __post_init__(self):
        if self.kind not in ("auto", "fixed", "scaled"):
            raise InputError(f"unknown penalty mode {self.kind!r}")
        if self.kind != "auto" and not self.value > 0:
            raise InputError(f"{self.kind} penalty value must be strictly positive, got {self.value}")

    @classmethod
    def auto(cls) -> "PenaltyMode":
        return cls("auto")

    @classmethod
    def fixed(cls, value: float) -> "PenaltyMode":
        return cls("fixed", float(value))

    @classmethod
    def scaled(cls, multiplier: float) -> "PenaltyMode":
        return cls("scaled", float(multiplier))

    @classmethod
    def parse(cls, text: str) -> "PenaltyMode":
        """Parse ``auto``, ``fixed:2.5`` or ``scaled:0.25``."""
        kind, _, arg = text.strip().lower().partition(":")
        if kind in ("auto", "auto-max", "max"):
            return cls.auto()
        if kind not in ("fixed", "scaled") or not arg:
            raise InputError(f"cannot parse penalty mode {text!r}; expected auto, fixed:V or scaled:M")
        try:
            return cls(kind, float(arg))
        except ValueError:
            raise InputError(f"penalty mode {text!r} has a non-numeric argument") from None

    def __str__(self) -> str:
        return "auto" if self.kind == "auto" else f"{self.kind}:{self.value:g}"


@dataclass(frozen=True)
class EncodeOptions:
    encoding: Encoding = Encoding.DOMAIN_WALL
    penalty: PenaltyMode = field(default_factory=PenaltyMode.auto)

    def __post_init__(self):
        enc = Encoding(self.encoding)
        if enc is Encoding.RAW:
            raise InputError("encoding must be one-hot or domain-wall")
        object.__setattr__(self, "encoding", enc)


@dataclass(frozen=True)
class DecodedSample:
    assignment: tuple[int, ...] | None
    valid: bool
    violated_vars: frozenset[int] = frozenset()


def penalty_strength(model: DiscreteModel, mode: PenaltyMode = PenaltyMode()) -> float:
    """Resolve a penalty mode against the unembedded model's coefficients.

    >>> m = DiscreteModel.from_terms(2, 2, [(0, 0, 2.0), (1, 1, 0.5)], [(0, 1, 0, 0, -3.0)])
    >>> penalty_strength(m)
    3.0
    """
    if mode.kind == "fixed":
        return mode.value
    mags = model.coefficient_magnitudes()
    auto = max(mags) if mags and max(mags) > 0 else 1.0
    return auto if mode.kind == "auto" else mode.value * auto


class _Poly:
    """Accumulator for a quadratic polynomial in indexed variables."""

    def __init__(self):
        self.linear: dict[int, float] = {}
        self.quadratic: dict[tuple[int, int], float] = {}
        self.offset = 0.0

    def add(self, coeff: float, *idx: int) -> None:
        if len(idx) == 0:
            self.offset += coeff
        elif len(idx) == 1:
            self.linear[idx[0]] = self.linear.get(idx[0], 0.0) + coeff
        else:
            i, j = sorted(idx)
            self.quadratic[(i, j)] = self.quadratic.get((i, j), 0.0) + coeff

    def add_product(self, coeff: float, left: dict, right: dict) -> None:
        """Add ``coeff * left * right`` for affine forms ``{var | None: c}``."""
        for u, cu in left.items():
            for v, cv in right.items():
                self.add(coeff * cu * cv, *(k for k in (u, v) if k is not None))

    def build(self, num_vars: int, vartype: Vartype, meta: EncodingMeta) -> BinaryModel:
        return BinaryModel(num_vars, vartype, self.linear, self.quadratic, self.offset, meta)


def encode_one_hot(model: DiscreteModel, opts: EncodeOptions | None = None) -> BinaryModel:
    """Compile to a QUBO with one bit per (variable, value) pair."""
    lam = penalty_strength(model, (opts or EncodeOptions(Encoding.ONE_HOT)).penalty)
    n, m = model.n, model.m
    meta = EncodingMeta.standard(Encoding.ONE_HOT, n, m, lam)
    idx = meta.layout_array()
    poly = _Poly()
    for (i, a), v in model.linear.items():
        poly.add(v, idx[i, a])
    for (i, j, a, b), v in model.quadratic.items():
        poly.add(v, idx[i, a], idx[j, b])
    # lam * (sum x - 1)^2 with x^2 = x
    for i in range(n):
        poly.add(lam)
        for a in range(m):
            poly.add(-lam, idx[i, a])
            for b in range(a + 1, m):
                poly.add(2 * lam, idx[i, a], idx[i, b])
    return poly.build(n * m, Vartype.BINARY, meta)


def _indicator(idx: np.ndarray, i: int, a: int, m: int) -> dict:
    """Affine form of ``x[i, a] = (s[i, a] - s[i, a-1]) / 2`` with fixed ends."""
    form: dict = {}

    def spin(pos: int, sign: float) -> None:
        if pos == -1:
            form[None] = form.get(None, 0.0) - sign / 2
        elif pos == m - 1:
            form[None] = form.get(None, 0.0) + sign / 2
        else:
            key = int(idx[i, pos])
            form[key] = form.get(key, 0.0) + sign / 2

    spin(a, +1.0)
    spin(a - 1, -1.0)
    return form


def encode_domain_wall(model: DiscreteModel, opts: EncodeOptions | None = None) -> BinaryModel:
    """Compile to an Ising model with ``m - 1`` inner spins per variable."""
    kappa = penalty_strength(model, (opts or EncodeOptions(Encoding.DOMAIN_WALL)).penalty)
    n, m = model.n, model.m
    meta = EncodingMeta.standard(Encoding.DOMAIN_WALL, n, m, kappa)
    idx = meta.layout_array()
    forms = [[_indicator(idx, i, a, m) for a in range(m)] for i in range(n)]
    poly = _Poly()
    for (i, a), v in model.linear.items():
        for var, c in forms[i][a].items():
            poly.add(v * c, *(() if var is None else (var,)))
    for (i, j, a, b), v in model.quadratic.items():
        poly.add_product(v, forms[i][a], forms[j][b])
    for i in range(n):
        # boundary bonds: -kappa * (-1) * s[i, 0] and -kappa * s[i, m-2] * (+1)
        poly.add(kappa, idx[i, 0])
        poly.add(-kappa, idx[i, m - 2])
        for a in range(m - 2):
            poly.add(-kappa, idx[i, a], idx[i, a + 1])
    return poly.build(n * (m - 1), Vartype.SPIN, meta)


def encode(model: DiscreteModel, opts: EncodeOptions) -> BinaryModel:
    if opts.encoding is Encoding.ONE_HOT:
        return encode_one_hot(model, opts)
    return encode_domain_wall(model, opts)


def chain_ground_energy(meta: EncodingMeta) -> float:
    """Constant penalty energy carried by every valid configuration."""
    if meta.encoding is Encoding.ONE_HOT:
        return 0.0
    # m bonds per chain, exactly one of them frustrated
    return -meta.penalty_strength * (meta.m - 2) * meta.n


def _meta_of(model_or_meta) -> tuple[EncodingMeta, Vartype]:
    if isinstance(model_or_meta, EncodingMeta):
        meta = model_or_meta
        native = Vartype.BINARY if meta.encoding is Encoding.ONE_HOT else Vartype.SPIN
        return meta, native
    if model_or_meta.meta is None or model_or_meta.meta.encoding is Encoding.RAW:
        raise InputError("model carries no encoding metadata; cannot decode")
    return model_or_meta.meta, model_or_meta.vartype


def decode_many(model_or_meta, configs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Decode an ``(R, num_vars)`` array of configurations.

    Returns ``(values, ok)``: ``values`` is ``(R, n)`` (entries of invalid
    variables are -1) and ``ok`` is the ``(R, n)`` per-variable validity mask.
    Configurations are read in the vartype of the model they came from.
    """
    meta, vartype = _meta_of(model_or_meta)
    x = np.asarray(configs)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != meta.num_vars:
        raise InputError(f"configurations must have shape (R, {meta.num_vars}), got {x.shape}")
    lo, hi = vartype.values
    if x.size and not np.all((x == lo) | (x == hi)):
        raise InputError(f"configuration values must be in {{{lo}, {hi}}}")
    layout = meta.layout_array()
    grouped = x[:, layout]  # (R, n, slots)
    if meta.encoding is Encoding.ONE_HOT:
        bits = grouped if vartype is Vartype.BINARY else spins_to_bits(grouped)
        ok = bits.sum(axis=2) == 1
        values = np.where(ok, bits.argmax(axis=2), -1)
    else:
        spins = grouped if vartype is Vartype.SPIN else bits_to_spins(grouped)
        R = spins.shape[0]
        ext = np.concatenate(
            [-np.ones((R, meta.n, 1), dtype=np.int8), spins.astype(np.int8), np.ones((R, meta.n, 1), dtype=np.int8)],
            axis=2,
        )
        walls = (ext[:, :, 1:] != ext[:, :, :-1]).sum(axis=2)
        ok = walls == 1
        values = np.where(ok, (spins == -1).sum(axis=2), -1)
    return values.astype(np.int64), ok


def decode(model_or_meta, config: Sequence[int]) -> DecodedSample:
    """Decode one configuration into an assignment, or report the violations."""
    values, ok = decode_many(model_or_meta, np.asarray(config)[None, :])
    values, ok = values[0], ok[0]
    if ok.all():
        return DecodedSample(tuple(int(v) for v in values), True, frozenset())
    return DecodedSample(None, False, frozenset(int(i) for i in np.flatnonzero(~ok)))


def encode_assignment(model_or_meta, assignment: Sequence[int]) -> np.ndarray:
    """Configuration (in the model's vartype) that decodes to ``assignment``."""
    meta, vartype = _meta_of(model_or_meta)
    d = [int(v) for v in assignment]
    if len(d) != meta.n:
        raise InputError(f"assignment has length {len(d)}, expected {meta.n}")
    if any(not 0 <= v < meta.m for v in d):
        raise InputError(f"assignment values must lie in 0..{meta.m - 1}")
    layout = meta.layout_array()
    if meta.encoding is Encoding.ONE_HOT:
        bits = np.zeros(meta.num_vars, dtype=np.int8)
        for i, v in enumerate(d):
            bits[layout[i, v]] = 1
        return bits if vartype is Vartype.BINARY else bits_to_spins(bits)
    spins = np.ones(meta.num_vars, dtype=np.int8)
    for i, v in enumerate(d):
        # value v means the first v inner spins are down
        spins[layout[i, :v]] = -1
    return spins if vartype is Vartype.SPIN else spins_to_bits(spins)
