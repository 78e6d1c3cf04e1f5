import json

import numpy as np
import pytest

from glassdescent import oracle, streams
from glassdescent.descent import DescentParams, descend, random_initial
from glassdescent.errors import PlanValidationError
from glassdescent.harness import (
    CSV_COLUMNS,
    CountRule,
    ExperimentPlan,
    run_fixed_budget,
    run_fixed_restarts,
    run_protocol,
    run_tau_scan,
)
from glassdescent.sk_model import Instance, generate_instance


def zero_instance(n, seed):
    return Instance(n, np.zeros((n, n)), seed)


class TestCountRule:
    @pytest.mark.parametrize(
        "text, n, expected, canonical",
        [
            ("100", 30, 100, "100"),
            (7, 30, 7, "7"),
            ("N", 30, 30, "N"),
            ("2*N", 30, 60, "2*N"),
            ("50*N^2", 200, 2_000_000, "50*N^2"),
            ("0.5N^2", 10, 50, "0.5*N^2"),
        ],
    )
    def test_parse(self, text, n, expected, canonical):
        rule = CountRule.parse(text)
        assert rule.resolve(n) == expected
        assert str(rule) == canonical
        assert CountRule.parse(str(rule)) == rule

    @pytest.mark.parametrize("text", ["", "M", "N^", "-3", "abc"])
    def test_rejects(self, text):
        with pytest.raises(ValueError):
            CountRule.parse(text)


class TestPlanValidation:
    def test_lists_every_bad_field(self):
        plan = ExperimentPlan(sizes=(1, 50), p_values=(1.5,), num_disorder=0)
        with pytest.raises(PlanValidationError) as info:
            plan.validate("tau-scan")
        fields = {f for f, _ in info.value.problems}
        assert fields == {"sizes", "p_values", "num_disorder"}

    def test_budget_required(self):
        plan = ExperimentPlan(sizes=(20,), p_values=(1.0,), num_disorder=1)
        with pytest.raises(PlanValidationError) as info:
            run_fixed_budget(plan)
        assert [f for f, _ in info.value.problems] == ["budget_flips"]

    def test_unknown_protocol(self):
        plan = ExperimentPlan(sizes=(20,), p_values=(1.0,), num_disorder=1)
        with pytest.raises(PlanValidationError):
            run_protocol("annealing", plan)


def test_zero_couplings_give_zero_tau():
    plan = ExperimentPlan((6, 8), (0.0, 0.5, 1.0), 3, restarts=10, master_seed=1)
    res = run_tau_scan(plan, instance_factory=zero_instance)
    for c in res.cells:
        assert c.tau_mean == 0.0 and c.tau_stderr == 0.0
        assert c.e_min_mean == 0.0


def test_zero_couplings_budget_terminates():
    plan = ExperimentPlan((6,), (1.0,), 2, budget_flips=20, master_seed=1)
    res = run_fixed_budget(plan, instance_factory=zero_instance)
    assert res.cells[0].runs_per_disorder == 20


def test_zero_budget_means_one_run():
    plan = ExperimentPlan((30,), (0.0, 1.0), 4, budget_flips=0, master_seed=2)
    res = run_fixed_budget(plan)
    for c in res.cells:
        assert c.runs_per_disorder == 1
        assert np.isfinite(c.e_min_mean)


def test_soft_budget_accounting():
    plan = ExperimentPlan((40,), (0.1,), 3, budget_flips="2*N^2", master_seed=3)
    res = run_fixed_budget(plan)
    for r in res.cells[0].per_disorder:
        assert r.flips.sum() >= 3200
        assert r.flips[:-1].sum() < 3200


def test_restart_rule_default_is_n():
    res = run_fixed_restarts(ExperimentPlan((12, 17), (1.0,), 2))
    assert [c.runs_per_disorder for c in res.cells] == [12, 17]


def test_reproducible_and_worker_invariant():
    plan = ExperimentPlan((20, 30), (0.0, 0.1, 1.0), 4, restarts=15, master_seed=5)
    a = run_tau_scan(plan, workers=1)
    b = run_tau_scan(plan, workers=1)
    c = run_tau_scan(plan, workers=3)
    assert a.to_csv() == b.to_csv() == c.to_csv()
    assert a.to_json() == c.to_json()
    budget = ExperimentPlan((20,), (0.0, 1.0), 5, budget_flips="N^2", master_seed=5)
    assert run_fixed_budget(budget, workers=1).to_csv() == run_fixed_budget(budget, workers=4).to_csv()


def test_streams_are_distinct_and_pure():
    coords = [(1, 50, 0.1, 0, 0), (1, 50, 0.1, 0, 1), (1, 50, 0.1, 1, 0), (1, 50, 0.5, 0, 0),
              (1, 60, 0.1, 0, 0), (2, 50, 0.1, 0, 0)]
    firsts = [streams.run_rng(*c).integers(0, 2**63) for c in coords]
    assert len(set(firsts)) == len(coords)
    assert streams.run_rng(*coords[0]).integers(0, 2**63) == firsts[0]
    assert streams.disorder_seed(1, 50, 0) != streams.disorder_seed(1, 50, 1)
    assert streams.p_key(0.1) != streams.p_key(0.10000000000000002)


def test_runs_reproducible_through_public_api():
    plan = ExperimentPlan((25,), (0.5,), 2, restarts=4, master_seed=8)
    res = run_tau_scan(plan)
    for r in res.cells[0].per_disorder:
        inst = generate_instance(25, r.seed)
        for k in range(4):
            g = streams.run_rng(8, 25, 0.5, r.d, k)
            rec = descend(inst, random_initial(25, g), DescentParams(0.5), rng=g)
            assert rec.flips == r.flips[k]
            assert rec.final_energy_per_spin == r.energies[k]


def test_minima_never_below_exact_ground():
    plan = ExperimentPlan((10, 14), (0.0, 0.5, 1.0), 8, restarts=1, master_seed=4)
    res = run_fixed_restarts(plan)
    for c in res.cells:
        for r in c.per_disorder:
            ground = oracle.exact_solve(generate_instance(c.n, r.seed)).ground_energy_per_spin
            assert r.e_min >= ground - 1e-12


def test_exhaustive_restart_count_finds_ground_state():
    # 2^10 reluctant restarts per instance; hit rate frozen from the first run (50/50)
    plan = ExperimentPlan((10,), (0.0,), 50, restarts=1024, master_seed=77)
    res = run_fixed_restarts(plan)
    hits = 0
    for r in res.cells[0].per_disorder:
        ground = oracle.exact_solve(generate_instance(10, r.seed)).ground_energy_per_spin
        hits += abs(r.e_min - ground) <= 1e-12
    assert hits / 50 >= 0.9
    assert hits == 50


def test_reluctant_tau_ratio_50_to_100():
    # tau ~ N^2.07 for reluctant dynamics: tau(100)/tau(50) close to 2^2.07
    res = run_tau_scan(ExperimentPlan((50, 100), (0.0,), 10, restarts=50, master_seed=6))
    ratio = res.cell(100, 0.0).tau_mean / res.cell(50, 0.0).tau_mean
    assert abs(ratio - 2**2.07) <= 0.2 * 2**2.07


def test_small_budget_favors_greedy():
    # about one reluctant run against many greedy runs on the same instances
    plan = ExperimentPlan((100,), (0.0, 1.0), 40, budget_flips="0.05*N^2", master_seed=9)
    res = run_fixed_budget(plan)
    rel, gre = res.cell(100, 0.0), res.cell(100, 1.0)
    assert rel.total_runs <= 2 * 40
    assert gre.runs_per_disorder > 5
    assert gre.e_min_mean <= rel.e_min_mean


def test_output_formats():
    plan = ExperimentPlan((12,), (0.0, 1.0), 2, restarts=3, master_seed=1)
    res = run_tau_scan(plan)
    lines = res.to_csv().splitlines()
    assert lines[0].split(",") == CSV_COLUMNS
    assert len(lines) == 3
    doc = json.loads(res.to_json())
    assert doc["tool"] == "glassdescent" and doc["version"]
    assert doc["plan"] == {
        "sizes": [12],
        "p_values": [0.0, 1.0],
        "num_disorder": 2,
        "restarts": "3",
        "budget_flips": None,
        "master_seed": 1,
        "tie_break": "lowest-index",
    }
    assert [row["P"] for row in doc["results"]] == [0.0, 1.0]
    assert len(doc["results"][0]["per_disorder"]) == 2
