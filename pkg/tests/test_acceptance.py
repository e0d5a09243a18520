"""Acceptance criteria 1-9, one printed PASS/FAIL line each.

Run alone with ``pytest tests/test_acceptance.py -v``; criteria 7-9 take a few
minutes on one core and carry the ``slow`` marker.
"""
import itertools
import json
import time

import numpy as np
import pytest

from dqmforge.bench import (
    Pipeline,
    RunReport,
    coloring_instances,
    constraint_sweep,
    emit_report,
    fga_instances,
    run_experiment,
    run_pipeline,
    significance,
)
from dqmforge.embed import apply_embedding, chain_edge_count, embed_greedy, gen_chimera
from dqmforge.encode import EncodeOptions, PenaltyMode, decode, decode_many, encode, encode_assignment
from dqmforge.model import DiscreteModel, Encoding, Vartype, to_spin
from dqmforge.sample import SamplerParams, solve_exact

# (n_b, n_w, printed p) for every finite p-value in the four published comparison tables
PUBLISHED = [
    (42, 0, 2.27e-13), (37, 0, 7.28e-12), (2, 0, 0.25), (19, 21, 0.682), (39, 0, 1.82e-12), (40, 0, 9.09e-13),
    (85, 2, 2.47e-23), (95, 3, 4.95e-25), (32, 34, 0.644), (70, 22, 2.67e-07), (94, 1, 2.42e-27),
    (91, 2, 4.41e-25), (99, 0, 1.58e-30), (100, 0, 7.89e-31), (43, 41, 0.457), (94, 3, 9.6e-25),
    (100, 0, 7.89e-31), (93, 2, 1.15e-25), (100, 0, 7.89e-31), (66, 20, 3.33e-07), (98, 2, 3.98e-27),
    (100, 0, 7.89e-31), (72, 20, 2.3e-08), (97, 2, 7.81e-27), (100, 0, 7.89e-31), (100, 0, 7.89e-31),
    (34, 1, 1.05e-09), (37, 2, 1.42e-09), (11, 3, 0.0287), (26, 16, 0.0821), (44, 1, 1.31e-12),
    (33, 7, 2.11e-05), (91, 1, 1.88e-26), (78, 1, 1.32e-22), (34, 18, 0.0182), (88, 1, 1.45e-25),
    (91, 1, 1.88e-26), (99, 0, 1.58e-30), (59, 15, 1.28e-07), (99, 0, 1.58e-30), (92, 0, 2.02e-28),
    (42, 0, 2.27e-13), (38, 0, 3.64e-12), (2, 0, 0.25), (22, 21, 0.5), (40, 0, 9.09e-13), (40, 0, 9.09e-13),
    (88, 2, 3.31e-24), (96, 3, 2.55e-25), (35, 28, 0.225), (78, 16, 2.89e-11), (96, 0, 1.26e-29),
    (91, 3, 6.99e-24), (99, 1, 7.97e-29), (96, 0, 1.26e-29), (60, 33, 0.00335), (98, 0, 3.16e-30),
    (100, 0, 7.89e-31), (82, 15, 1.19e-12), (100, 0, 7.89e-31), (93, 6, 1.89e-21), (61, 24, 3.7e-05),
    (100, 0, 7.89e-31), (100, 0, 7.89e-31), (14, 3, 0.00636), (100, 0, 7.89e-31), (88, 0, 3.23e-27),
    (39, 1, 3.73e-11), (42, 3, 4.33e-10), (17, 2, 0.000364), (33, 14, 0.00397), (53, 1, 3.05e-15),
    (32, 9, 0.000215), (97, 1, 3.12e-28), (89, 2, 1.69e-24), (66, 7, 1.92e-13), (70, 7, 1.76e-14),
    (100, 0, 7.89e-31), (80, 9, 1.15e-15), (100, 0, 7.89e-31), (98, 0, 3.16e-30), (26, 0, 1.49e-08),
    (38, 0, 3.64e-12),
]

COMPARATIVE = {
    "family": "coloring",
    "params": {"nodes": 10, "colors": 3, "edge_prob": 0.5, "count": 100},
    "seed": 7,
    "pipelines": [
        {"name": f"{enc}-{tag}", "encoding": enc, "hardware": hw,
         "sampler": {"num_reads": 100, "num_sweeps": 50, "seed": 7}}
        for enc in ("one-hot", "domain-wall") for tag, hw in (("native", "native"), ("chimera", "chimera:4,4,4"))
    ],
}
SWEEP_MULTIPLIERS = [0.05, 0.25, 1.0, 4.0]


def random_dqm(rng, n, m):
    lin = [(i, a, float(rng.normal())) for i in range(n) for a in range(m)]
    quad = [(i, j, a, b, float(rng.normal())) for i, j in itertools.combinations(range(n), 2)
            for a in range(m) for b in range(m)]
    return DiscreteModel.from_terms(n, m, lin, quad)


def comparative_run():
    return run_experiment(COMPARATIVE)


def sweep_run():
    instances = coloring_instances(15, 3, 0.5, 20, seed=8)
    pipe = Pipeline("domain-wall-native", Encoding.DOMAIN_WALL, sampler=SamplerParams(100, 1000, seed=8))
    return emit_report(constraint_sweep(instances, pipe, SWEEP_MULTIPLIERS))


@pytest.fixture
def criterion(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail
    return emit


@pytest.fixture(scope="module")
def comparative():
    start = time.perf_counter()
    files = comparative_run()
    return files, time.perf_counter() - start


@pytest.fixture(scope="module")
def sweep():
    start = time.perf_counter()
    data = sweep_run()
    return data, time.perf_counter() - start


def test_criterion_1_published_p_values(criterion):
    start = time.perf_counter()
    mismatches = [(b, w, p, significance(b, w)) for b, w, p in PUBLISHED
                  if f"{significance(b, w):.3g}" != f"{p:.3g}"]
    elapsed = time.perf_counter() - start
    criterion(1, not mismatches and len(PUBLISHED) == 83 and elapsed < 1.0,
              f"{len(PUBLISHED) - len(mismatches)}/{len(PUBLISHED)} p-values match to 3 s.f. in {elapsed:.3f} s"
              + (f"; mismatches {mismatches}" if mismatches else ""))


def test_criterion_2_encoded_optima_match(criterion):
    start = time.perf_counter()
    failures = []
    for seed in range(200):
        rng = np.random.default_rng([2, seed])
        n, m = int(rng.integers(1, 4)), int(rng.integers(2, 5))
        dqm = random_dqm(rng, n, m)
        exact = solve_exact(dqm)
        target = set(exact.configs)
        for enc in (Encoding.ONE_HOT, Encoding.DOMAIN_WALL):
            model = encode(dqm, EncodeOptions(enc, PenaltyMode.scaled(2.0)))
            res = solve_exact(model)
            decoded = [decode(model, c).assignment for c in res.configs]
            # every encoded optimum decodes to a DQM optimum with the matching energy
            energies_ok = all(a is not None and abs(dqm.energy(a) - exact.energy) <= 1e-9 for a in decoded)
            if set(decoded) != target or not energies_ok:
                failures.append((seed, enc.value))
    elapsed = time.perf_counter() - start
    criterion(2, not failures and elapsed < 60,
              f"{400 - len(failures)}/400 encoded optimum sets identical in {elapsed:.1f} s"
              + (f"; failures {failures[:5]}" if failures else ""))


def test_criterion_3_variable_counts(criterion):
    instances = (coloring_instances(10, 3, 0.5, 100, seed=7) + coloring_instances(15, 3, 0.5, 20, seed=8)
                 + fga_instances(7, 2, 29, seed=4))
    bad = []
    for inst in instances:
        n, m = inst.dqm.n, inst.dqm.m
        if encode(inst.dqm, EncodeOptions(Encoding.ONE_HOT)).num_vars != n * m:
            bad.append((inst.instance_id, "one-hot"))
        if encode(inst.dqm, EncodeOptions(Encoding.DOMAIN_WALL)).num_vars != n * (m - 1):
            bad.append((inst.instance_id, "domain-wall"))
    criterion(3, not bad, f"{len(instances)} instances, {len(bad)} count mismatches")


def test_criterion_4_two_gate_structure(criterion):
    instances = fga_instances(7, 2, 29, seed=4)
    params = SamplerParams(100, 1000, seed=4)
    dw = run_pipeline(instances, Pipeline("dw", Encoding.DOMAIN_WALL, sampler=params))
    oh = run_pipeline(instances, Pipeline("oh", Encoding.ONE_HOT, PenaltyMode.scaled(0.25), sampler=params))
    dw_rates = [r.r_enc for r in dw.results]
    oh_rates = [r.r_enc for r in oh.results]
    ok = all(r == 1.0 for r in dw_rates) and any(r < 1.0 for r in oh_rates)
    criterion(4, ok, f"domain-wall min R_enc {min(dw_rates):.2f}; one-hot at 0.25x has "
                     f"{sum(r < 1.0 for r in oh_rates)}/29 instances with R_enc < 1 (min {min(oh_rates):.2f})")


def test_criterion_5_round_trip(criterion):
    start = time.perf_counter()
    checked = failed = 0
    for n, m in itertools.product(range(1, 5), range(2, 6)):
        assignments = np.array(list(itertools.product(range(m), repeat=n)))
        for enc in (Encoding.ONE_HOT, Encoding.DOMAIN_WALL):
            model = encode(DiscreteModel(n, m), EncodeOptions(enc))
            configs = np.array([encode_assignment(model, a) for a in assignments])
            values, ok = decode_many(model, configs)
            checked += len(assignments)
            failed += int((~ok.all(axis=1)).sum() + (values != assignments).any(axis=1).sum())
    elapsed = time.perf_counter() - start
    criterion(5, failed == 0 and elapsed < 10, f"{checked - failed}/{checked} assignments round-trip in {elapsed:.2f} s")


def test_criterion_6_embedding_energy_shift(criterion):
    hw = gen_chimera(2, 2, 4)
    cases = worst = 0
    seed = 0
    failures = []
    while cases < 50:
        rng = np.random.default_rng([6, seed])
        seed += 1
        enc = (Encoding.ONE_HOT, Encoding.DOMAIN_WALL)[seed % 2]
        dqm = random_dqm(rng, int(rng.integers(2, 4)), int(rng.integers(2, 5)))
        logical = encode(dqm, EncodeOptions(enc))
        logical = logical if logical.vartype is Vartype.SPIN else to_spin(logical)
        emb = embed_greedy(logical.quadratic.keys(), hw, seed=seed, variables=range(logical.num_vars))
        if emb is None:
            continue
        cases += 1
        phys = apply_embedding(logical, emb, hw)
        z = np.array(list(itertools.product((-1, 1), repeat=logical.num_vars)), dtype=np.int8)
        x = np.ones((len(z), hw.num_qubits), dtype=np.int8)
        for v, chain in emb.chains.items():
            x[:, list(chain)] = z[:, [v]]
        shift = phys.energies(x) - logical.energies(z)
        expected = -emb.chain_strength * chain_edge_count(emb, hw)
        err = float(np.abs(shift - expected).max())
        worst = max(worst, err)
        if err > 1e-9:
            failures.append(seed)
    criterion(6, not failures, f"{cases} embedded cases ({seed} tried), max deviation from constant {worst:.1e}")


@pytest.mark.slow
def test_criterion_7_comparative_pipelines(criterion, comparative):
    files, elapsed = comparative
    reports = {json.loads(data)["pipeline"]["name"]: RunReport.from_json(json.loads(data))
               for name, data in files.items() if name.endswith(".report.json")}
    records = [json.loads(data) for name, data in files.items() if name.endswith(".comparison.json")]
    table = files["comparisons.txt"].decode().splitlines()

    def well_formed(rec):
        if rec["verdict"].startswith("FAIL"):
            return rec["p"] is None
        n = rec["n_b"] + rec["n_w"]
        return 0 <= n <= 100 and (rec["p"] is None) == (n == 0) and (n == 0 or 0 < rec["p"] <= 1)

    def ties_or_beats(a, b):
        other = {r.instance_id: r.best_c for r in reports[b].results}
        return sum(r.best_c <= other[r.instance_id] + 1e-9 or r.best_c == other[r.instance_id]
                   for r in reports[a].results)

    native = ties_or_beats("domain-wall-native", "one-hot-native")
    embedded = ties_or_beats("domain-wall-chimera", "one-hot-chimera")
    shape_ok = len(reports) == 4 and len(records) == 6 and len(table) == 7 and all(map(well_formed, records))
    fails = {name: sum(r.embed_failed for r in rep.results) for name, rep in reports.items()}
    ok = shape_ok and native >= 50 and embedded >= 50 and elapsed < 300
    criterion(7, ok, f"domain-wall ties or beats one-hot on {native}/100 native and {embedded}/100 embedded "
                     f"instances; embedding FAILs {fails}; {elapsed:.0f} s")


@pytest.mark.slow
def test_criterion_8_constraint_sweep(criterion, sweep):
    data, elapsed = sweep
    points = json.loads(data)["points"]
    mean_c = {p["multiplier"]: float(p["mean_c"]) for p in points}
    finite = {p["multiplier"]: p["finite"] for p in points}
    ok = len(points) == 4 and mean_c[0.05] >= mean_c[1.0] and elapsed < 300
    criterion(8, ok, f"mean C by multiplier {mean_c}; instances with a valid read {finite} of 20; {elapsed:.0f} s")


@pytest.mark.slow
def test_criterion_9_determinism(criterion, comparative, sweep):
    again = comparative_run()
    same_comparative = again == comparative[0]
    same_sweep = sweep_run() == sweep[0]
    criterion(9, same_comparative and same_sweep,
              f"{len(again)} comparative files identical: {same_comparative}; sweep identical: {same_sweep}")
