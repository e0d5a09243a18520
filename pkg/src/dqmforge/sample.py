"""Classical samplers: seeded simulated annealing and exhaustive search.

Simulated annealing runs single-spin-flip Metropolis sweeps over a geometric
inverse-temperature ladder, one ladder step per sweep. Read ``r`` draws all of
its randomness from ``SeedSequence([seed, r])``, so a sample set is a pure
function of the model and :class:`SamplerParams` whatever the thread count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numba
import numpy as np

from dqmforge import _schema
from dqmforge.errors import InputError, SearchSpaceError
from dqmforge.model import BinaryModel, DiscreteModel, Vartype, bits_to_spins, spins_to_bits, to_spin

__all__ = [
    "SamplerParams",
    "SampleSet",
    "ExactResult",
    "anneal",
    "auto_beta",
    "beta_range_from_deltas",
    "solve_exact",
    "DEFAULT_CAP",
]

DEFAULT_CAP = 2 ** 24


@dataclass(frozen=True)
class SamplerParams:
    num_reads: int = 100
    num_sweeps: int = 1000
    beta_range: tuple[float, float] | None = None
    seed: int = 0
    keep_best: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.num_reads < 1:
            raise InputError(f"num_reads must be >= 1, got {self.num_reads}")
        if self.num_sweeps < 1:
            raise InputError(f"num_sweeps must be >= 1, got {self.num_sweeps}")
        if self.beta_range is not None:
            hot, cold = self.beta_range
            if not 0 < hot < cold:
                raise InputError(f"beta_range needs 0 < beta_hot < beta_cold, got {self.beta_range}")
            object.__setattr__(self, "beta_range", (float(hot), float(cold)))
        if self.threads < 1:
            raise InputError("threads must be >= 1")

    def to_json(self) -> dict:
        out = asdict(self)
        out.pop("threads")  # never affects results
        out["beta_range"] = list(self.beta_range) if self.beta_range else "auto"
        return out

    @classmethod
    def from_json(cls, payload: dict) -> "SamplerParams":
        br = payload.get("beta_range", "auto")
        return cls(
            num_reads=int(payload.get("num_reads", 100)),
            num_sweeps=int(payload.get("num_sweeps", 1000)),
            beta_range=None if br in (None, "auto") else tuple(br),
            seed=int(payload.get("seed", 0)),
            keep_best=bool(payload.get("keep_best", True)),
        )


@dataclass
class SampleSet:
    """Per-read configurations and energies, in read order."""

    configs: np.ndarray
    energies: np.ndarray
    vartype: Vartype
    read_seeds: np.ndarray | None = None
    params: SamplerParams | None = None
    info: dict = field(default_factory=dict)
    #: energies tracked incrementally by the sweep kernel (not serialised)
    tracked_energies: np.ndarray | None = field(default=None, repr=False)

    @property
    def num_reads(self) -> int:
        return len(self.energies)

    def best(self) -> tuple[np.ndarray, float]:
        k = int(np.argmin(self.energies))
        return self.configs[k], float(self.energies[k])

    def aggregate(self) -> list[tuple[tuple[int, ...], float, int]]:
        """Unique configurations with energy and count, lowest energy first."""
        counts: dict[tuple[int, ...], list] = {}
        for row, e in zip(self.configs, self.energies):
            key = tuple(int(v) for v in row)
            if key in counts:
                counts[key][1] += 1
            else:
                counts[key] = [float(e), 1]
        return sorted(((k, e, c) for k, (e, c) in counts.items()), key=lambda t: (t[1], t[0]))

    def to_json(self) -> dict:
        payload = {
            "vartype": self.vartype.value,
            "samples": [{"config": list(k), "energy": e, "count": c} for k, e, c in self.aggregate()],
            "params": self.params.to_json() if self.params else None,
        }
        payload.update(self.info)
        return payload

    @classmethod
    def from_json(cls, payload: dict) -> "SampleSet":
        rows = _schema.field(payload, "samples", "list", "sample set")
        vt = Vartype(payload.get("vartype", "SPIN"))
        configs, energies = [], []
        for r in rows:
            cfg = _schema.field(r, "config", "list", "sample")
            count = _schema.field(r, "count", "int", "sample")
            energy = float(_schema.field(r, "energy", "float", "sample"))
            configs.extend([cfg] * count)
            energies.extend([energy] * count)
        params = payload.get("params")
        return cls(
            np.asarray(configs, dtype=np.int8).reshape(len(configs), -1),
            np.asarray(energies, dtype=float),
            vt,
            None,
            SamplerParams.from_json(params) if isinstance(params, dict) else None,
        )


def beta_range_from_deltas(max_delta: float, min_delta: float) -> tuple[float, float]:
    """Hot end accepts the largest flip with p=0.5, cold end the smallest with p=0.01."""
    return math.log(2) / max_delta, math.log(100) / min_delta


def auto_beta(model: BinaryModel) -> tuple[float, float]:
    """Inverse-temperature range from the Ising field and coupling magnitudes."""
    spin = model if model.vartype is Vartype.SPIN else to_spin(model)
    h, rows, cols, J = spin.arrays()
    if not np.any(h) and not np.any(J):
        return 0.1, 10.0
    reach = np.abs(h).copy()
    np.add.at(reach, rows, np.abs(J))
    np.add.at(reach, cols, np.abs(J))
    mags = np.abs(np.concatenate([h, J]))
    mags = mags[mags > 0]
    hot, cold = beta_range_from_deltas(2 * float(reach.max()), 2 * float(mags.min()))
    if hot >= cold:
        cold = hot * 100.0
    return hot, cold


@numba.njit(cache=True, nogil=True)
def _metropolis(h, indptr, nbrs, weights, spins, order, betas, uniforms, keep_best):
    n = spins.shape[0]
    local = h.copy()
    energy = 0.0
    for i in range(n):
        acc = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            acc += weights[k] * spins[nbrs[k]]
        local[i] = h[i] + acc
        energy += spins[i] * (h[i] + 0.5 * acc)
    best = energy
    best_spins = spins.copy()
    for s in range(betas.shape[0]):
        beta = betas[s]
        for t in range(n):
            i = order[t]
            delta = -2.0 * spins[i] * local[i]
            if delta <= 0.0 or uniforms[s, t] < math.exp(-beta * delta):
                spins[i] = -spins[i]
                energy += delta
                step = 2.0 * spins[i]
                for k in range(indptr[i], indptr[i + 1]):
                    local[nbrs[k]] += weights[k] * step
                if keep_best and energy < best - 1e-12:
                    best = energy
                    best_spins[:] = spins
    if keep_best:
        spins[:] = best_spins
        return best
    return energy


def _csr(n: int, rows: np.ndarray, cols: np.ndarray, J: np.ndarray):
    src = np.concatenate([rows, cols])
    dst = np.concatenate([cols, rows])
    w = np.concatenate([J, J])
    order = np.lexsort((dst, src))
    src, dst, w = src[order], dst[order], w[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    return np.cumsum(indptr), dst.astype(np.int64), w.astype(np.float64)


def read_seed(master: int, read: int) -> int:
    return int(np.random.SeedSequence([master, read]).generate_state(1, np.uint64)[0])


def anneal(model: BinaryModel, params: SamplerParams = SamplerParams()) -> SampleSet:
    """Sample ``model`` with ``params.num_reads`` independent annealing runs.

    Each read reports the lowest-energy state visited along its trajectory
    (``keep_best=True``) or the state it ends in.

    A BINARY model is sampled through its Ising form and the reads are returned
    as bits, with energies under the original model.
    """
    if model.num_vars < 1:
        raise InputError("cannot anneal a model with no variables")
    spin = model if model.vartype is Vartype.SPIN else to_spin(model)
    h, rows, cols, J = spin.arrays()
    # variables with no terms keep their random initial value
    active = np.zeros(spin.num_vars, dtype=bool)
    active[np.flatnonzero(h)] = True
    active[rows] = True
    active[cols] = True
    act_idx = np.flatnonzero(active)
    remap = -np.ones(spin.num_vars, dtype=np.int64)
    remap[act_idx] = np.arange(len(act_idx))
    indptr, nbrs, weights = _csr(len(act_idx), remap[rows], remap[cols], J)
    h_act = h[act_idx].astype(np.float64)
    hot, cold = params.beta_range or auto_beta(spin)
    betas = np.geomspace(hot, cold, params.num_sweeps)
    n_act = len(act_idx)

    configs = np.empty((params.num_reads, spin.num_vars), dtype=np.int8)
    tracked = np.empty(params.num_reads)
    seeds = np.array([read_seed(params.seed, r) for r in range(params.num_reads)], dtype=np.uint64)

    def run(r: int) -> None:
        rng = np.random.default_rng(np.random.SeedSequence([params.seed, r]))
        init = rng.integers(0, 2, size=spin.num_vars, dtype=np.int8) * 2 - 1
        order = rng.permutation(n_act).astype(np.int64)
        uniforms = rng.random((params.num_sweeps, n_act))
        sub = init[act_idx].astype(np.float64)
        e = _metropolis(h_act, indptr, nbrs, weights, sub, order, betas, uniforms, params.keep_best)
        init[act_idx] = sub.astype(np.int8)
        configs[r] = init
        tracked[r] = e

    if params.threads > 1:
        with ThreadPoolExecutor(params.threads) as pool:
            list(pool.map(run, range(params.num_reads)))
    else:
        for r in range(params.num_reads):
            run(r)

    # the kernel tracks active variables only; the offset is constant
    tracked = tracked + spin.offset
    if model.vartype is Vartype.BINARY:
        configs = spins_to_bits(configs)
    energies = model.energies(configs)
    return SampleSet(configs, energies, model.vartype, seeds, params, tracked_energies=tracked)


@dataclass
class ExactResult:
    energy: float
    configs: list[tuple[int, ...]]


@numba.njit(cache=True)
def _enumerate_min(radix, lin, dense, tol, collect, out):
    """Odometer walk over all assignments with incremental energy updates.

    Pass ``collect=False`` to find the minimum, ``collect=True`` to write every
    assignment within ``tol`` of ``out_min`` (stored in out[0, 0]) as rows.
    """
    n = radix.shape[0]
    digits = np.zeros(n, dtype=np.int64)
    energy = 0.0
    for i in range(n):
        energy += lin[i, 0]
        for j in range(i + 1, n):
            energy += dense[i, j, 0, 0]
    best = energy
    found = 0
    threshold = out[0, 0] if collect else 0.0
    while True:
        if collect:
            if energy <= threshold + tol:
                if found < out.shape[0] - 1:
                    for i in range(n):
                        out[found + 1, i] = digits[i]
                found += 1
        elif energy < best:
            best = energy
        # advance odometer
        pos = 0
        while pos < n:
            old = digits[pos]
            new = old + 1
            if new == radix[pos]:
                new = 0
            delta = lin[pos, new] - lin[pos, old]
            for j in range(n):
                if j != pos:
                    delta += dense[pos, j, new, digits[j]] - dense[pos, j, old, digits[j]]
            energy += delta
            digits[pos] = new
            if new != 0:
                break
            pos += 1
        if pos == n:
            break
    if not collect:
        out[0, 0] = best
    return found


def _exhaustive(n: int, m: int, lin: np.ndarray, dense: np.ndarray, cap: int, limit: int):
    space = m ** n
    if space > cap:
        raise SearchSpaceError(f"search space {m}^{n} = {space} exceeds cap {cap}")
    radix = np.full(n, m, dtype=np.int64)
    scratch = np.zeros((1, n), dtype=np.float64)
    _enumerate_min(radix, lin, dense, 1e-6, False, scratch)
    minimum = scratch[0, 0]
    out = np.zeros((min(space, limit) + 1, n), dtype=np.float64)
    out[0, 0] = minimum
    found = _enumerate_min(radix, lin, dense, 1e-6, True, out)
    return out[1:1 + min(found, limit)].astype(np.int64), found


def solve_exact(model: BinaryModel | DiscreteModel, cap: int = DEFAULT_CAP,
                limit: int = 1_000_000) -> ExactResult:
    """Exact minimum energy and every minimising configuration.

    At most ``limit`` optimal configurations are returned. Raises
    :class:`SearchSpaceError` when the space is larger than ``cap``.
    """
    if isinstance(model, DiscreteModel):
        lin = model.linear_table()
        dense = model.dense_quadratic()
        candidates, _ = _exhaustive(model.n, model.m, lin, dense, cap, limit)
        energies = model.energies(candidates)
        best = float(energies.min())
        keep = np.abs(energies - best) <= 1e-9
        return ExactResult(best, [tuple(int(v) for v in row) for row in candidates[keep]])

    N = model.num_vars
    if N == 0:
        return ExactResult(model.offset, [()])
    lo, hi = model.vartype.values
    h, rows, cols, J = model.arrays()
    lin = np.stack([h * lo, h * hi], axis=1)
    dense = np.zeros((N, N, 2, 2))
    vals = np.array([lo, hi], dtype=float)
    prod = np.outer(vals, vals)
    for i, j, w in zip(rows, cols, J):
        dense[i, j] += w * prod
        dense[j, i] += w * prod.T
    candidates, _ = _exhaustive(N, 2, lin, dense, cap, limit)
    configs = np.where(candidates == 0, lo, hi).astype(np.int8)
    energies = model.energies(configs)
    best = float(energies.min())
    keep = np.abs(energies - best) <= 1e-9
    return ExactResult(best, [tuple(int(v) for v in row) for row in configs[keep]])
