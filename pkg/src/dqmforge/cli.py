"""Command-line entry point; every stage reads and writes JSON files.

Exit codes: 0 success (an embedding FAIL is a recorded outcome, not an error),
1 usage error, 2 domain error such as an unreadable file or a bad field.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from dqmforge import _schema, bench
from dqmforge.embed import ChainMode, Embedding, HardwareGraph, apply_embedding, chain_strength, embed_greedy, unembed
from dqmforge.encode import EncodeOptions, PenaltyMode, decode_many, encode
from dqmforge.errors import DqmError, InputError
from dqmforge.model import BinaryModel, DiscreteModel, Encoding, Vartype, bits_to_spins, spins_to_bits, to_binary, to_spin
from dqmforge.problems import FgaConfig
from dqmforge.sample import SampleSet, SamplerParams, anneal, solve_exact


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _default_seed() -> int:
    raw = os.environ.get("DQMFORGE_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"DQMFORGE_SEED must be an integer, got {raw!r}") from None


def _beta(text: str) -> tuple[float, float] | None:
    if text == "auto":
        return None
    try:
        hot, cold = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected auto or HOT,COLD, got {text!r}") from None
    return hot, cold


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _load_dqm(path) -> tuple[DiscreteModel, dict]:
    """Read a bare model file or an instance file carrying one under 'dqm'."""
    payload = _schema.load(path)
    if isinstance(payload, dict) and "dqm" in payload:
        return DiscreteModel.from_json(payload["dqm"]), payload
    return DiscreteModel.from_json(payload), payload


def _write(path, payload: dict, run_config: dict) -> None:
    _schema.save(path, {**payload, "run_config": run_config})


def _config(args, **resolved) -> dict:
    out = {"command": args.command_path, "seed": args.seed}
    out.update(resolved)
    return out


def _sampler(args) -> SamplerParams:
    return SamplerParams(num_reads=args.reads, num_sweeps=args.sweeps, beta_range=args.beta,
                         seed=args.seed, threads=args.threads)


# --- subcommands -----------------------------------------------------------

def cmd_gen_coloring(args) -> int:
    insts = bench.coloring_instances(args.nodes, args.colors, args.edge_prob, args.count, args.seed)
    cfg = _config(args, nodes=args.nodes, colors=args.colors, edge_prob=args.edge_prob, count=args.count)
    for inst in insts:
        _write(Path(args.out) / f"{inst.instance_id}.dqm.json", inst.to_json(), cfg)
    print(f"wrote {len(insts)} instances to {args.out}")
    return 0


def cmd_gen_fga(args) -> int:
    config = FgaConfig.from_json(_schema.load(args.config)) if args.config else None
    insts = bench.fga_instances(args.flights, args.gates, args.count, args.seed, config)
    cfg = _config(args, flights=args.flights, gates=args.gates, count=args.count,
                  fga_config=(config or FgaConfig()).to_json())
    for inst in insts:
        _write(Path(args.out) / f"{inst.instance_id}.dqm.json", inst.to_json(), cfg)
    print(f"wrote {len(insts)} instances to {args.out}")
    return 0


def cmd_encode(args) -> int:
    dqm, _ = _load_dqm(args.input)
    opts = EncodeOptions(Encoding.parse(args.encoding), PenaltyMode.parse(args.penalty))
    model = encode(dqm, opts)
    if args.vartype:
        want = Vartype(args.vartype.upper())
        model = to_spin(model) if want is Vartype.SPIN and model.vartype is not want else model
        model = to_binary(model) if want is Vartype.BINARY and model.vartype is not want else model
    _write(args.output, model.to_json(), _config(args, encoding=opts.encoding.value, penalty=str(opts.penalty),
                                                  penalty_strength=model.meta.penalty_strength,
                                                  vartype=model.vartype.value))
    print(f"{opts.encoding.value}: {model.num_vars} variables, {len(model.quadratic)} couplings")
    return 0


def _spin_model(path) -> BinaryModel:
    model = BinaryModel.from_json(_schema.load(path))
    return model if model.vartype is Vartype.SPIN else to_spin(model)


def cmd_embed(args) -> int:
    spin = _spin_model(args.input)
    hw = bench.resolve_hardware(args.hardware)
    if hw is None:
        raise InputError("field 'hardware' must name a hardware graph, not 'native'")
    mode = ChainMode.parse(args.chain_mode)
    cfg = _config(args, hardware=args.hardware, attempts=args.attempts, chain_mode=str(mode))
    emb = embed_greedy(spin.quadratic.keys(), hw, args.attempts, seed=args.seed,
                       variables=range(spin.num_vars))
    if emb is None:
        _write(args.output, {"status": "FAIL"}, cfg)
        print("FAIL: no embedding found")
        return 0
    emb = emb.with_strength(chain_strength(spin, mode))
    _write(args.output, {"status": "ok", **emb.to_json(), "hardware": hw.to_json()}, cfg)
    print(f"embedded {spin.num_vars} variables, max chain length {emb.max_chain_length()}, "
          f"chain strength {emb.chain_strength:g}")
    return 0


def cmd_sample(args) -> int:
    model = BinaryModel.from_json(_schema.load(args.input))
    params = _sampler(args)
    cfg = _config(args, sampler=params.to_json())
    if not args.embedding:
        ss = anneal(model, params)
        _write(args.output, ss.to_json(), cfg)
        print(f"{ss.num_reads} reads, best energy {ss.best()[1]:.6g}")
        return 0
    payload = _schema.load(args.embedding)
    if payload.get("status") == "FAIL":
        _write(args.output, {"status": "FAIL"}, {**cfg, "embedding": str(args.embedding)})
        print("FAIL: embedding file records no embedding")
        return 0
    emb = Embedding.from_json(payload)
    hw = bench.resolve_hardware(args.hardware) if args.hardware else None
    if hw is None:
        if "hardware" not in payload:
            raise InputError("embedding file has no field 'hardware'; pass --hardware")
        hw = HardwareGraph.from_json(payload["hardware"])
    spin = model if model.vartype is Vartype.SPIN else to_spin(model)
    phys = anneal(apply_embedding(spin, emb, hw), params)
    logical, broken, kept = unembed(phys.configs, emb, args.repair)
    cols = np.argsort(np.fromiter(emb.chains, dtype=np.int64))
    logical = logical[:, cols]
    if model.vartype is Vartype.BINARY:
        logical = spins_to_bits(logical)
    ss = SampleSet(logical, model.energies(logical) if len(logical) else np.zeros(0), model.vartype,
                   None, params, {"chain_breaks": [bool(b) for b in broken], "kept_reads": [int(k) for k in kept]})
    cfg.update(embedding=str(args.embedding), repair=args.repair, chain_strength=emb.chain_strength)
    _write(args.output, ss.to_json(), cfg)
    print(f"{len(kept)} of {len(broken)} reads kept, {int(broken.sum())} with broken chains")
    return 0


def cmd_exact(args) -> int:
    payload = _schema.load(args.input)
    if isinstance(payload, dict) and ("dqm" in payload or "m" in payload):
        model, _ = _load_dqm(args.input)
        res = solve_exact(model, cap=args.cap)
        out = {"kind": "exact", "energy": res.energy, "assignments": [list(c) for c in res.configs]}
    else:
        model = BinaryModel.from_json(payload)
        res = solve_exact(model, cap=args.cap)
        out = {"kind": "exact", "vartype": model.vartype.value, "energy": res.energy,
               "samples": [{"config": list(c), "energy": res.energy, "count": 1} for c in res.configs]}
    _write(args.output, out, _config(args, cap=args.cap))
    print(f"minimum {res.energy:.6g}, {len(res.configs)} optimal configurations")
    return 0


def cmd_decode(args) -> int:
    model = BinaryModel.from_json(_schema.load(args.model))
    payload = _schema.load(args.samples)
    rows = _schema.field(payload, "samples", "list", "samples")
    configs = np.asarray([_schema.field(r, "config", "list", "sample") for r in rows], dtype=np.int64)
    vt = Vartype(payload.get("vartype", model.vartype.value))
    if vt is not model.vartype:
        configs = spins_to_bits(configs) if vt is Vartype.SPIN else bits_to_spins(configs)
    values, ok = decode_many(model, configs.reshape(len(rows), -1))
    dqm = _load_dqm(args.dqm)[0] if args.dqm else None
    reads = []
    for r, vals, mask in zip(rows, values, ok):
        entry = {"count": r.get("count", 1), "valid": bool(mask.all())}
        if mask.all():
            entry["assignment"] = [int(v) for v in vals]
            if dqm is not None:
                entry["dqm_energy"] = dqm.energy(vals)
        else:
            entry["assignment"] = None
            entry["violated"] = [int(i) for i in np.flatnonzero(~mask)]
        reads.append(entry)
    _write(args.output, {"kind": "decoded", "reads": reads}, _config(args, model=str(args.model)))
    print(f"{sum(e['valid'] for e in reads)} of {len(reads)} distinct samples valid")
    return 0


def _pipeline_from_args(args) -> bench.Pipeline:
    name = args.name or f"{Encoding.parse(args.encoding).value}-{args.hardware}"
    return bench.Pipeline(
        name=name,
        encoding=Encoding.parse(args.encoding),
        penalty=PenaltyMode.parse(args.penalty),
        hardware=args.hardware,
        chain_mode=ChainMode.parse(args.chain_mode),
        repair=args.repair,
        sampler=replace(_sampler(args), threads=1),
        embed_attempts=args.attempts,
    )


def _load_instances(paths) -> list[bench.ProblemInstance]:
    files = []
    for p in paths:
        p = Path(p)
        files.extend(sorted(p.glob("*.dqm.json")) if p.is_dir() else [p])
    if not files:
        raise InputError("no instance files given")
    return [bench.ProblemInstance.from_json(_schema.load(f)) for f in files]


def _emit(obj, args, run_config: dict) -> None:
    data = bench.emit_report(obj, args.format)
    if args.format == "json":
        payload = obj.to_json()
        payload["run_config"] = run_config
        data = _schema.dumps(payload).encode()
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        Path(args.output).write_bytes(data)
    else:
        sys.stdout.write(data.decode())


def cmd_bench_run(args) -> int:
    if args.config:
        if args.instances:
            raise UsageError("bench run: give either --config or instance files, not both")
        cfg = _schema.load(args.config)
        if "seed" not in cfg:
            cfg = {**cfg, "seed": args.seed}
        out_dir = args.output or cfg.get("output_dir")
        if not out_dir:
            raise InputError("experiment config has no field 'output_dir'; pass --output")
        files = bench.run_experiment(cfg, out_dir, args.threads)
        print(files["comparisons.txt"].decode(), end="")
        return 0
    instances = _load_instances(args.instances)
    pipe = _pipeline_from_args(args)
    report = bench.run_pipeline(instances, pipe, args.threads)
    _emit(report, args, _config(args, pipeline=pipe.to_json(), instances=len(instances)))
    if args.output:
        fails = sum(r.embed_failed for r in report.results)
        print(f"{pipe.name}: {len(instances)} instances, {fails} embedding FAILs")
    return 0


def cmd_bench_sweep(args) -> int:
    instances = _load_instances(args.instances)
    pipe = _pipeline_from_args(args)
    table = bench.constraint_sweep(instances, pipe, args.multipliers, args.threads)
    _emit(table, args, _config(args, pipeline=pipe.to_json(), multipliers=args.multipliers))
    return 0


def cmd_bench_compare(args) -> int:
    a = bench.load_any(_schema.load(args.left))
    b = bench.load_any(_schema.load(args.right))
    if not isinstance(a, bench.RunReport) or not isinstance(b, bench.RunReport):
        raise InputError("bench compare needs two report files")
    a, b = bench.settle_success([a, b])
    rec = bench.compare(a, b)
    if args.format == "table":
        text = bench.format_table([rec])
        if args.output:
            Path(args.output).write_text(text)
        else:
            sys.stdout.write(text)
        return 0
    _emit(rec, args, _config(args, left=str(args.left), right=str(args.right)))
    return 0


# --- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (default: $DQMFORGE_SEED or 0)")
    common.add_argument("--threads", type=int, default=1, help="worker cap; never changes results")

    sampling = _Parser(add_help=False)
    sampling.add_argument("--reads", type=int, default=100, help="reads per run")
    sampling.add_argument("--sweeps", type=int, default=1000, help="Metropolis sweeps per read")
    sampling.add_argument("--beta", type=_beta, default=None, metavar="auto|HOT,COLD",
                          help="inverse-temperature range (default: auto)")

    pipeline = _Parser(add_help=False)
    pipeline.add_argument("--name", help="pipeline name (default: ENCODING-HARDWARE)")
    pipeline.add_argument("--encoding", default="domain-wall", help="one-hot or domain-wall")
    pipeline.add_argument("--penalty", default="auto", help="auto, fixed:V or scaled:M")
    pipeline.add_argument("--hardware", default="native", help="native, chimera:R,C,L or a hardware JSON file")
    pipeline.add_argument("--chain-mode", default="utc", help="utc[:prefactor], fixed:V or max")
    pipeline.add_argument("--repair", choices=["majority", "discard"], default="majority")
    pipeline.add_argument("--attempts", type=int, default=3, help="embedding attempts")

    parser = _Parser(prog="dqmforge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="generate benchmark instances")
    gsub = gen.add_subparsers(dest="family", required=True, parser_class=_Parser)
    p = gsub.add_parser("coloring", parents=[common], help="random graph coloring instances")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--colors", type=int, default=3)
    p.add_argument("--edge-prob", type=float, default=0.5)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_gen_coloring)
    p = gsub.add_parser("fga", parents=[common], help="synthetic flight-gate assignment instances")
    p.add_argument("--flights", type=int, default=7)
    p.add_argument("--gates", type=int, default=2)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--config", help="generator config JSON")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_gen_fga)

    p = sub.add_parser("encode", parents=[common], help="compile a discrete model to a binary model")
    p.add_argument("--encoding", default="domain-wall", help="one-hot or domain-wall")
    p.add_argument("--penalty", default="auto", help="auto, fixed:V or scaled:M")
    p.add_argument("--vartype", choices=["spin", "binary"], help="convert the output vartype")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("embed", parents=[common], help="find a chain embedding for a binary model")
    p.add_argument("--hardware", default="chimera:4,4,4", help="chimera:R,C,L or a hardware JSON file")
    p.add_argument("--attempts", type=int, default=3)
    p.add_argument("--chain-mode", default="utc", help="utc[:prefactor], fixed:V or max")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("sample", parents=[common, sampling], help="simulated annealing on a binary model")
    p.add_argument("--embedding", help="embedding JSON; sample on hardware and unembed")
    p.add_argument("--hardware", help="hardware ref (default: the one stored in the embedding file)")
    p.add_argument("--repair", choices=["majority", "discard"], default="majority")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("exact", parents=[common], help="exhaustive minimum of a discrete or binary model")
    p.add_argument("--cap", type=int, default=2 ** 24, help="largest search space to enumerate")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("decode", parents=[common], help="decode samples back to discrete assignments")
    p.add_argument("--dqm", help="discrete model for reporting energies")
    p.add_argument("model", help="encoded binary model")
    p.add_argument("samples", help="sample set or exact result")
    p.add_argument("output")
    p.set_defaults(func=cmd_decode)

    b = sub.add_parser("bench", help="benchmark pipelines")
    bsub = b.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = bsub.add_parser("run", parents=[common, sampling, pipeline], help="run one pipeline or an experiment")
    p.add_argument("--config", help="experiment config JSON (runs every pipeline and compares all pairs)")
    p.add_argument("--format", choices=["json", "csv", "plotdata"], default="json")
    p.add_argument("--output", "-o", help="report file, or output directory with --config")
    p.add_argument("instances", nargs="*", help="instance files or directories")
    p.set_defaults(func=cmd_bench_run)
    p = bsub.add_parser("sweep", parents=[common, sampling, pipeline], help="penalty-multiplier sweep")
    p.add_argument("--multipliers", type=_floats, default=[0.05, 0.25, 1.0, 4.0])
    p.add_argument("--format", choices=["json", "csv", "plotdata"], default="json")
    p.add_argument("--output", "-o")
    p.add_argument("instances", nargs="+")
    p.set_defaults(func=cmd_bench_sweep)
    p = bsub.add_parser("compare", parents=[common], help="sign test between two reports")
    p.add_argument("--format", choices=["table", "json", "csv"], default="table")
    p.add_argument("--output", "-o")
    p.add_argument("left")
    p.add_argument("right")
    p.set_defaults(func=cmd_bench_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
        if args.seed is None:
            args.seed = _default_seed()
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        args.command_path = " ".join(x for x in (args.command, getattr(args, "family", None),
                                                 getattr(args, "action", None)) if x)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DqmError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyError as exc:
        print(f"error: missing field {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
