"""End-to-end benchmark pipelines, per-instance metrics and pairwise sign tests.

A pipeline is generate -> encode -> (embed) -> anneal -> (repair) -> decode.
For every instance it records

* ``r_chain``: fraction of reads with every chain intact (1 for native runs),
* ``r_enc``: fraction of reads that decode to a valid assignment,
* ``best_c`` / ``mean_c``: best and mean normalised cost over valid reads,
  ``inf`` when there is none,
* ``success``: the best valid cost reaches the known optimum.

Coloring costs are divided by the edge count; flight-gate costs have the exact
optimum subtracted.
"""
from __future__ import annotations

import csv
import io
import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from dqmforge import _schema
from dqmforge.embed import (
    ChainMode,
    HardwareGraph,
    apply_embedding,
    chain_strength,
    embed_greedy,
    gen_chimera,
    unembed,
)
from dqmforge.encode import EncodeOptions, PenaltyMode, decode_many, encode
from dqmforge.errors import ConfigError, InputError, SearchSpaceError
from dqmforge.model import DiscreteModel, Encoding, Vartype, to_spin
from dqmforge.problems import FgaConfig, coloring_dqm, fga_dqm, gen_er_graph, gen_fga
from dqmforge.sample import DEFAULT_CAP, SamplerParams, anneal, solve_exact

__all__ = [
    "ProblemInstance",
    "Pipeline",
    "InstanceResult",
    "RunReport",
    "ComparisonRecord",
    "SweepTable",
    "coloring_instances",
    "fga_instances",
    "resolve_hardware",
    "exact_optimum",
    "run_pipeline",
    "settle_success",
    "significance",
    "compare",
    "constraint_sweep",
    "emit_report",
    "format_table",
    "load_any",
    "run_experiment",
]

INF = math.inf
TIE_TOL = 1e-9
CSV_COLUMNS = ["instance_id", "encoding", "hardware", "chain_mode", "r_chain", "r_enc", "best_c", "mean_c", "success"]


@dataclass(frozen=True)
class ProblemInstance:
    instance_id: str
    family: str
    dqm: DiscreteModel
    num_edges: int = 0
    source: dict | None = None

    def __post_init__(self):
        if self.family not in ("coloring", "fga", "dqm"):
            raise InputError(f"unknown problem family {self.family!r}")

    def to_json(self) -> dict:
        out = {"instance_id": self.instance_id, "family": self.family, "num_edges": self.num_edges,
               "dqm": self.dqm.to_json()}
        if self.source is not None:
            out["source"] = self.source
        return out

    @classmethod
    def from_json(cls, payload: dict) -> "ProblemInstance":
        where = "instance"
        return cls(
            instance_id=_schema.field(payload, "instance_id", "str", where),
            family=_schema.field(payload, "family", "str", where),
            dqm=DiscreteModel.from_json(_schema.field(payload, "dqm", "dict", where)),
            num_edges=int(payload.get("num_edges", 0)),
            source=payload.get("source"),
        )


def _sub_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def coloring_instances(nodes: int, colors: int = 3, edge_prob: float = 0.5, count: int = 100,
                       seed: int = 0) -> list[ProblemInstance]:
    out = []
    for k in range(count):
        g = gen_er_graph(nodes, edge_prob, _sub_seed(seed, k))
        out.append(ProblemInstance(f"coloring-q{nodes}-k{colors}-s{seed}-{k:04d}", "coloring",
                                   coloring_dqm(g, colors), len(g.edges), {"graph": g.to_json(), "colors": colors}))
    return out


def fga_instances(flights: int = 7, gates: int = 2, count: int = 29, seed: int = 0,
                  config: FgaConfig | None = None) -> list[ProblemInstance]:
    out = []
    for k in range(count):
        inst = gen_fga(flights, gates, _sub_seed(seed, k), config)
        out.append(ProblemInstance(f"fga-n{flights}-m{gates}-s{seed}-{k:04d}", "fga", fga_dqm(inst), 0,
                                   {"fga": inst.to_json()}))
    return out


def resolve_hardware(ref: str) -> HardwareGraph | None:
    """``native`` -> None, ``chimera:R,C,L`` -> Chimera lattice, else a JSON file."""
    text = ref.strip()
    if text == "native":
        return None
    if text.lower().startswith("chimera"):
        args = text[len("chimera"):].strip(":()[] ")
        try:
            dims = [int(a) for a in args.replace("x", ",").split(",")]
        except ValueError:
            raise ConfigError(f"hardware ref {ref!r}: expected chimera:ROWS,COLS,SHORE") from None
        if len(dims) == 2:
            dims.append(4)
        if len(dims) != 3 or min(dims) < 1:
            raise ConfigError(f"hardware ref {ref!r}: expected chimera:ROWS,COLS,SHORE")
        return gen_chimera(*dims)
    path = Path(text)
    if not path.is_file():
        raise ConfigError(f"hardware ref {ref!r} is neither 'native', a chimera shape nor a file")
    return HardwareGraph.from_json(_schema.load(path))


@dataclass(frozen=True)
class Pipeline:
    name: str
    encoding: Encoding = Encoding.DOMAIN_WALL
    penalty: PenaltyMode = field(default_factory=PenaltyMode.auto)
    hardware: str = "native"
    chain_mode: ChainMode = field(default_factory=ChainMode)
    repair: str = "majority"
    sampler: SamplerParams = field(default_factory=SamplerParams)
    embed_attempts: int = 3

    def __post_init__(self):
        if not isinstance(self.encoding, Encoding):
            object.__setattr__(self, "encoding", Encoding.parse(self.encoding))
        if self.encoding is Encoding.RAW:
            raise ConfigError(f"pipeline {self.name!r}: encoding must be one-hot or domain-wall")
        if self.repair not in ("majority", "discard"):
            raise ConfigError(f"pipeline {self.name!r}: repair must be majority or discard")
        if self.embed_attempts < 1:
            raise ConfigError(f"pipeline {self.name!r}: embed_attempts must be >= 1")

    @property
    def native(self) -> bool:
        return self.hardware.strip() == "native"

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "encoding": self.encoding.value,
            "penalty": str(self.penalty),
            "hardware": self.hardware,
            "chain_mode": str(self.chain_mode),
            "repair": self.repair,
            "sampler": self.sampler.to_json(),
            "embed_attempts": self.embed_attempts,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "Pipeline":
        where = "pipeline"
        name = _schema.field(payload, "name", "str", where)
        try:
            return cls(
                name=name,
                encoding=Encoding.parse(_schema.field(payload, "encoding", "str", where)),
                penalty=PenaltyMode.parse(str(payload.get("penalty", "auto"))),
                hardware=str(payload.get("hardware", "native")),
                chain_mode=ChainMode.parse(str(payload.get("chain_mode", "utc"))),
                repair=str(payload.get("repair", "majority")),
                sampler=SamplerParams.from_json(payload.get("sampler", {})),
                embed_attempts=int(payload.get("embed_attempts", 3)),
            )
        except InputError as exc:
            raise ConfigError(f"pipeline {name!r}: {exc}") from None


@dataclass(frozen=True)
class InstanceResult:
    instance_id: str
    r_chain: float
    r_enc: float
    best_c: float
    mean_c: float
    success: bool
    embed_failed: bool = False
    best_energy: float = INF
    optimum: float | None = None

    def to_json(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "r_chain": self.r_chain,
            "r_enc": self.r_enc,
            "best_c": _schema.encode_float(self.best_c),
            "mean_c": _schema.encode_float(self.mean_c),
            "success": self.success,
            "embed_failed": self.embed_failed,
            "best_energy": _schema.encode_float(self.best_energy),
            "optimum": None if self.optimum is None else self.optimum,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "InstanceResult":
        where = "instance result"
        opt = payload.get("optimum")
        return cls(
            instance_id=_schema.field(payload, "instance_id", "str", where),
            r_chain=float(_schema.field(payload, "r_chain", "float", where)),
            r_enc=float(_schema.field(payload, "r_enc", "float", where)),
            best_c=_schema.decode_float(payload.get("best_c"), "best_c"),
            mean_c=_schema.decode_float(payload.get("mean_c"), "mean_c"),
            success=bool(payload.get("success", False)),
            embed_failed=bool(payload.get("embed_failed", False)),
            best_energy=_schema.decode_float(payload.get("best_energy", "inf"), "best_energy"),
            optimum=None if opt is None else float(opt),
        )


def _stats(values: Sequence[float]) -> dict:
    """Mean over instances (``inf`` if any is ``inf``) plus spread of the finite part."""
    x = np.asarray(values, dtype=float)
    finite = x[np.isfinite(x)]
    mean = INF if len(finite) < len(x) else (float(finite.mean()) if len(finite) else 0.0)
    std = float(finite.std(ddof=1)) if len(finite) > 1 else 0.0
    return {
        "mean": mean,
        "finite_mean": float(finite.mean()) if len(finite) else INF,
        "std": std,
        "stderr": std / math.sqrt(len(finite)) if len(finite) else 0.0,
        "count": int(len(x)),
        "finite": int(len(finite)),
    }


@dataclass
class RunReport:
    pipeline: Pipeline
    family: str
    results: list[InstanceResult]

    @property
    def ids(self) -> list[str]:
        return [r.instance_id for r in self.results]

    @property
    def embed_failed(self) -> bool:
        """True when embedding failed on every instance."""
        return bool(self.results) and all(r.embed_failed for r in self.results)

    def summary(self) -> dict:
        out = {}
        for key in ("r_chain", "r_enc", "best_c", "mean_c"):
            out[key] = _stats([getattr(r, key) for r in self.results])
        out["success"] = _stats([float(r.success) for r in self.results])
        out["embed_failures"] = sum(r.embed_failed for r in self.results)
        return out

    def to_json(self) -> dict:
        summary = {
            k: ({kk: _schema.encode_float(vv) for kk, vv in v.items()} if isinstance(v, dict) else v)
            for k, v in self.summary().items()
        }
        return {
            "kind": "report",
            "pipeline": self.pipeline.to_json(),
            "family": self.family,
            "instances": [r.to_json() for r in self.results],
            "summary": summary,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "RunReport":
        where = "report"
        return cls(
            pipeline=Pipeline.from_json(_schema.field(payload, "pipeline", "dict", where)),
            family=_schema.field(payload, "family", "str", where),
            results=[InstanceResult.from_json(r) for r in _schema.field(payload, "instances", "list", where)],
        )


def exact_optimum(dqm: DiscreteModel, cap: int = DEFAULT_CAP) -> float | None:
    """Exact minimum DQM energy, or None when the search space exceeds ``cap``."""
    try:
        return solve_exact(dqm, cap=cap, limit=1).energy
    except SearchSpaceError:
        return None


def _normalise(inst: ProblemInstance, energy: np.ndarray | float, optimum: float | None):
    if inst.family == "coloring":
        return energy / inst.num_edges if inst.num_edges else energy
    if inst.family == "fga" and optimum is not None:
        return energy - optimum
    return energy


def instance_seed(master: int, instance_id: str) -> int:
    return _sub_seed(master, zlib.crc32(instance_id.encode()))


def _run_instance(inst: ProblemInstance, pipe: Pipeline, hw: HardwareGraph | None,
                  optimum: float | None) -> InstanceResult:
    seed = instance_seed(pipe.sampler.seed, inst.instance_id)
    params = replace(pipe.sampler, seed=seed)
    binary = encode(inst.dqm, EncodeOptions(pipe.encoding, pipe.penalty))
    reads = params.num_reads
    if hw is None:
        ss = anneal(binary, params)
        values, ok = decode_many(binary, ss.configs)
        r_chain = 1.0
    else:
        spin = binary if binary.vartype is Vartype.SPIN else to_spin(binary)
        emb = embed_greedy(spin.quadratic.keys(), hw, pipe.embed_attempts, seed=seed,
                           variables=range(spin.num_vars))
        if emb is None:
            return InstanceResult(inst.instance_id, 0.0, 0.0, INF, INF, False, True, INF, optimum)
        emb = emb.with_strength(chain_strength(spin, pipe.chain_mode))
        ss = anneal(apply_embedding(spin, emb, hw), params)
        logical, broken, _ = unembed(ss.configs, emb, pipe.repair)
        # chains are keyed by logical index; put columns back in variable order
        cols = np.argsort(np.fromiter(emb.chains, dtype=np.int64))
        values, ok = decode_many(spin, logical[:, cols])
        r_chain = float(1.0 - broken.mean())
    valid = ok.all(axis=1)
    r_enc = float(valid.sum()) / reads
    if not valid.any():
        return InstanceResult(inst.instance_id, r_chain, r_enc, INF, INF, False, False, INF, optimum)
    energies = inst.dqm.energies(values[valid])
    best_energy = float(energies.min())
    costs = _normalise(inst, energies, optimum)
    success = optimum is not None and best_energy <= optimum + TIE_TOL
    return InstanceResult(inst.instance_id, r_chain, r_enc, float(np.min(costs)), float(np.mean(costs)),
                          bool(success), False, best_energy, optimum)


def run_pipeline(instances: Sequence[ProblemInstance], pipeline: Pipeline, threads: int = 1,
                 optima: dict[str, float | None] | None = None) -> RunReport:
    """Run ``pipeline`` on every instance; embedding FAIL is recorded, not raised.

    ``optima`` caches exact optima by instance id and is filled in as a side
    effect, so several pipelines over the same instances solve each one once.
    """
    if not instances:
        raise InputError("run_pipeline needs at least one instance")
    families = {inst.family for inst in instances}
    if len(families) != 1:
        raise InputError(f"instances mix problem families {sorted(families)}")
    ids = [inst.instance_id for inst in instances]
    if len(set(ids)) != len(ids):
        raise InputError("instance ids must be unique")
    hw = resolve_hardware(pipeline.hardware)
    optima = {} if optima is None else optima
    for inst in instances:
        if inst.instance_id not in optima:
            optima[inst.instance_id] = exact_optimum(inst.dqm)

    def job(inst):
        return _run_instance(inst, pipeline, hw, optima[inst.instance_id])

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(job, instances))
    else:
        results = [job(inst) for inst in instances]
    return RunReport(pipeline, families.pop(), results)


def settle_success(reports: Sequence[RunReport]) -> list[RunReport]:
    """Fill in success for instances without an exact optimum.

    Those instances count as solved by every pipeline whose best energy equals
    the best found across all of ``reports``.
    """
    best: dict[str, float] = {}
    for rep in reports:
        for r in rep.results:
            best[r.instance_id] = min(best.get(r.instance_id, INF), r.best_energy)
    out = []
    for rep in reports:
        results = [
            r if r.optimum is not None else
            replace(r, success=bool(math.isfinite(r.best_energy) and r.best_energy <= best[r.instance_id] + TIE_TOL))
            for r in rep.results
        ]
        out.append(RunReport(rep.pipeline, rep.family, results))
    return out


def significance(n_b: int, n_w: int) -> float | None:
    """Probability of at most ``n_w`` losses in ``n_b + n_w`` fair coin flips.

    Returns None when there are no decided instances.

    >>> f"{significance(42, 0):.3g}"
    '2.27e-13'
    >>> significance(1, 1)
    0.75
    """
    if n_b < 0 or n_w < 0:
        raise InputError(f"counts must be non-negative, got ({n_b}, {n_w})")
    N = n_b + n_w
    if N == 0:
        return None
    # exact integer tail; int / int rounds once, so p stays monotone in the counts
    term = total = 1
    for k in range(1, n_w + 1):
        term = term * (N - k + 1) // k
        total += term
    return total / 2 ** N


def verdict_for(p: float | None) -> str:
    if p is None:
        return "not-applicable"
    if p < 0.05:
        return "significant-win"
    if p > 0.95:
        return "significant-loss"
    return "not-significant"


@dataclass(frozen=True)
class ComparisonRecord:
    left: str
    right: str
    n_b: int
    n_w: int
    p: float | None
    verdict: str

    def to_json(self) -> dict:
        return {"kind": "comparison", "left": self.left, "right": self.right, "n_b": self.n_b, "n_w": self.n_w,
                "p": self.p, "p_text": format_p(self.p), "verdict": self.verdict}

    @classmethod
    def from_json(cls, payload: dict) -> "ComparisonRecord":
        where = "comparison"
        p = payload.get("p")
        return cls(
            left=_schema.field(payload, "left", "str", where),
            right=_schema.field(payload, "right", "str", where),
            n_b=_schema.field(payload, "n_b", "int", where),
            n_w=_schema.field(payload, "n_w", "int", where),
            p=None if p is None else float(p),
            verdict=_schema.field(payload, "verdict", "str", where),
        )


def format_p(p: float | None) -> str:
    return "" if p is None else f"{p:.3g}"


def compare(a: RunReport, b: RunReport) -> ComparisonRecord:
    """Sign test of ``a`` against ``b`` on best valid cost per instance."""
    if sorted(a.ids) != sorted(b.ids):
        raise InputError("reports cover different instance sets")
    if a.embed_failed or b.embed_failed:
        side = "both" if a.embed_failed and b.embed_failed else ("left" if a.embed_failed else "right")
        return ComparisonRecord(a.pipeline.name, b.pipeline.name, 0, 0, None, f"FAIL-{side}")
    costs_b = {r.instance_id: r.best_c for r in b.results}
    n_b = n_w = 0
    for r in a.results:
        ca, cb = r.best_c, costs_b[r.instance_id]
        if ca == cb or (math.isfinite(ca) and math.isfinite(cb) and abs(ca - cb) <= TIE_TOL):
            continue
        if ca < cb:
            n_b += 1
        else:
            n_w += 1
    p = significance(n_b, n_w)
    return ComparisonRecord(a.pipeline.name, b.pipeline.name, n_b, n_w, p, verdict_for(p))


@dataclass
class SweepTable:
    pipeline: str
    multipliers: list[float]
    mean_c: list[float]
    stderr: list[float]
    success: list[float]
    #: instances with at least one valid read at each multiplier
    finite: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "kind": "sweep",
            "pipeline": self.pipeline,
            "points": [
                {"multiplier": m, "mean_c": _schema.encode_float(c), "stderr": s, "success": p, "finite": f}
                for m, c, s, p, f in zip(self.multipliers, self.mean_c, self.stderr, self.success, self.finite)
            ],
        }

    @classmethod
    def from_json(cls, payload: dict) -> "SweepTable":
        points = _schema.field(payload, "points", "list", "sweep")
        return cls(
            _schema.field(payload, "pipeline", "str", "sweep"),
            [float(p["multiplier"]) for p in points],
            [_schema.decode_float(p["mean_c"], "mean_c") for p in points],
            [float(p["stderr"]) for p in points],
            [float(p["success"]) for p in points],
            [int(p.get("finite", 0)) for p in points],
        )


def constraint_sweep(instances: Sequence[ProblemInstance], pipeline: Pipeline, multipliers: Sequence[float],
                     threads: int = 1, optima: dict | None = None) -> SweepTable:
    """Mean best cost (with standard error) as the penalty multiplier varies."""
    if any(not m > 0 for m in multipliers):
        raise InputError("multipliers must be positive")
    optima = {} if optima is None else optima
    table = SweepTable(pipeline.name, [], [], [], [], [])
    for mult in multipliers:
        rep = run_pipeline(instances, replace(pipeline, penalty=PenaltyMode.scaled(mult)), threads, optima)
        stats = rep.summary()
        table.multipliers.append(float(mult))
        table.mean_c.append(stats["best_c"]["mean"])
        table.stderr.append(stats["best_c"]["stderr"])
        table.success.append(stats["success"]["mean"])
        table.finite.append(stats["best_c"]["finite"])
    return table


def _csv_text(rows: list[list]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue().encode()


def _cell(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return "inf" if x == INF else repr(x)
    return str(x)


def emit_report(obj, fmt: str = "json") -> bytes:
    """Serialise a RunReport, ComparisonRecord or SweepTable as json, csv or plotdata."""
    if fmt not in ("json", "csv", "plotdata"):
        raise InputError(f"unknown report format {fmt!r}; expected json, csv or plotdata")
    if fmt == "json":
        return _schema.dumps(obj.to_json()).encode()
    if isinstance(obj, RunReport):
        if fmt == "csv":
            pipe = obj.pipeline
            chain = "n/a" if pipe.native else str(pipe.chain_mode)
            rows = [CSV_COLUMNS] + [
                [r.instance_id, pipe.encoding.value, pipe.hardware, chain, r.r_chain, r.r_enc, r.best_c, r.mean_c,
                 r.success]
                for r in obj.results
            ]
            return _csv_text([[_cell(x) for x in row] for row in rows])
        stats = obj.summary()
        rows = [["series", "x", "y", "yerr"]] + [
            [obj.pipeline.name, key, stats[key]["mean"], stats[key]["std"]]
            for key in ("r_chain", "r_enc", "best_c", "mean_c", "success")
        ]
        return _csv_text([[_cell(x) for x in row] for row in rows])
    if isinstance(obj, SweepTable):
        rows = [["series", "x", "y", "yerr"]] + [
            [obj.pipeline, m, c, s] for m, c, s in zip(obj.multipliers, obj.mean_c, obj.stderr)
        ]
        if fmt == "csv":
            rows = [["multiplier", "mean_c", "stderr", "success", "finite"]] + [
                list(row) for row in zip(obj.multipliers, obj.mean_c, obj.stderr, obj.success, obj.finite)
            ]
        return _csv_text([[_cell(x) for x in row] for row in rows])
    if isinstance(obj, ComparisonRecord):
        if fmt == "plotdata":
            raise InputError("comparisons have no plotdata form")
        rows = [["left", "right", "n_b", "n_w", "p", "verdict"],
                [obj.left, obj.right, obj.n_b, obj.n_w, format_p(obj.p), obj.verdict]]
        return _csv_text([[_cell(x) for x in row] for row in rows])
    raise InputError(f"cannot emit an object of type {type(obj).__name__}")


def format_table(records: Sequence[ComparisonRecord]) -> str:
    """Plain-text table with one comparison per row."""
    lines = [f"{'comparison':<32} {'n_b':>5} {'n_w':>5} {'p':>10}  verdict"]
    for rec in records:
        label = f"{rec.left}/{rec.right}"
        if rec.verdict.startswith("FAIL"):
            lines.append(f"{label:<32} {'FAIL':>5} {'':>5} {'':>10}  {rec.verdict}")
        else:
            lines.append(f"{label:<32} {rec.n_b:>5} {rec.n_w:>5} {format_p(rec.p):>10}  {rec.verdict}")
    return "\n".join(lines) + "\n"


def load_any(payload: dict):
    """Rebuild a report, comparison or sweep from its JSON form."""
    kind = payload.get("kind") if isinstance(payload, dict) else None
    if kind == "report":
        return RunReport.from_json(payload)
    if kind == "comparison":
        return ComparisonRecord.from_json(payload)
    if kind == "sweep":
        return SweepTable.from_json(payload)
    raise InputError(f"field 'kind' must be report, comparison or sweep, got {kind!r}")


def instances_from_config(cfg: dict) -> list[ProblemInstance]:
    where = "experiment"
    family = _schema.field(cfg, "family", "str", where)
    params = cfg.get("params", {})
    seed = int(cfg.get("seed", 0))
    try:
        if family == "coloring":
            return coloring_instances(int(params.get("nodes", 10)), int(params.get("colors", 3)),
                                      float(params.get("edge_prob", 0.5)), int(params.get("count", 100)), seed)
        if family == "fga":
            config = FgaConfig.from_json(params["config"]) if "config" in params else None
            return fga_instances(int(params.get("flights", 7)), int(params.get("gates", 2)),
                                 int(params.get("count", 29)), seed, config)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: bad params ({exc})") from None
    raise ConfigError(f"{where}: field 'family' must be coloring or fga, got {family!r}")


def run_experiment(cfg: dict, out_dir: str | Path | None = None, threads: int = 1) -> dict[str, bytes]:
    """Run every pipeline of an experiment config and compare all pairs.

    Returns ``{file name: bytes}``; files are also written when ``out_dir``
    (or the config's ``output_dir``) is set.
    """
    instances = instances_from_config(cfg)
    specs = _schema.field(cfg, "pipelines", "list", "experiment")
    if not specs:
        raise ConfigError("experiment: field 'pipelines' is empty")
    pipelines = [Pipeline.from_json(p) for p in specs]
    names = [p.name for p in pipelines]
    if len(set(names)) != len(names):
        raise ConfigError("experiment: pipeline names must be unique")
    optima: dict = {}
    reports = settle_success([run_pipeline(instances, p, threads, optima) for p in pipelines])
    files = {f"{r.pipeline.name}.report.json": emit_report(r) for r in reports}
    records = []
    for i in range(len(reports)):
        for j in range(i + 1, len(reports)):
            rec = compare(reports[i], reports[j])
            records.append(rec)
            files[f"{rec.left}__vs__{rec.right}.comparison.json"] = emit_report(rec)
    files["comparisons.txt"] = format_table(records).encode()
    sweep = cfg.get("sweep")
    if sweep:
        target = next((p for p in pipelines if p.name == sweep.get("pipeline")), None)
        if target is None:
            raise ConfigError(f"experiment: sweep pipeline {sweep.get('pipeline')!r} is not defined")
        table = constraint_sweep(instances, target, [float(m) for m in sweep.get("multipliers", [1.0])],
                                 threads, optima)
        files[f"{target.name}.sweep.json"] = emit_report(table)
    out_dir = out_dir or cfg.get("output_dir")
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, data in files.items():
            (out / name).write_bytes(data)
    return files
