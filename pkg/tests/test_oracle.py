import io
import math

import numpy as np
import pytest

from glassdescent import oracle, streams
from glassdescent.descent import DescentParams, descend, random_initial
from glassdescent.errors import OracleGuardError
from glassdescent.sk_model import Instance, generate_instance, instance_from_upper

from .conftest import all_configs, brute_energy


def brute_census(inst):
    """Stable states and ground energy by plain enumeration with dense numpy."""
    J = inst.couplings
    stable, energies = [], []
    for s in all_configs(inst.n):
        h = J @ s.astype(float)
        e = -0.5 * float(s @ h)
        energies.append(e)
        if np.all(2.0 * s * h >= 0):
            stable.append((oracle.spins_to_code(s), e))
    return sorted(stable), min(energies) / inst.n


class TestExactSolve:
    def test_three_spin(self, three_spin):
        sol = oracle.exact_solve(three_spin)
        assert sol.ground_energy_per_spin == pytest.approx(-2 / 3)
        ground = {"".join("+" if v > 0 else "-" for v in s) for s in sol.ground_states}
        assert ground == {"+++", "---", "+--", "-++"}
        # hand check of all eight configurations
        J = three_spin.couplings.tolist()
        energies = {tuple(s): brute_energy(J, s.tolist()) for s in all_configs(3)}
        assert min(energies.values()) == pytest.approx(-2.0)

    def test_zero_couplings_everything_stable(self):
        sol = oracle.exact_solve(Instance(4, np.zeros((4, 4))))
        assert sol.stable_codes.size == 16
        assert sol.ground_energy_per_spin == 0.0
        assert sol.is_ground.all()

    def test_two_spin_ferromagnet(self):
        sol = oracle.exact_solve(instance_from_upper(2, [(0, 1, 1.0)]))
        assert sol.ground_energy_per_spin == pytest.approx(-0.5)
        assert sorted(map(tuple, sol.ground_states.tolist())) == [(-1, -1), (1, 1)]

    @pytest.mark.parametrize("n", [5, 8, 11, 13])
    def test_matches_brute_force(self, n):
        for d in range(3):
            inst = generate_instance(n, streams.disorder_seed(9, n, d))
            sol = oracle.exact_solve(inst)
            stable, e0 = brute_census(inst)
            assert list(sol.stable_codes) == [c for c, _ in stable]
            assert np.allclose(sol.stable_energy_per_spin * n, [e for _, e in stable], atol=1e-12)
            assert sol.ground_energy_per_spin == pytest.approx(e0, abs=1e-12)

    def test_pairs_and_subset(self):
        inst = generate_instance(12, 3)
        sol = oracle.exact_solve(inst)
        mask = (1 << 12) - 1
        codes = set(sol.stable_codes.tolist())
        assert all((c ^ mask) in codes for c in codes)
        assert set(sol.ground_codes.tolist()) <= codes
        assert sol.ground_codes.size >= 2
        for s in sol.stable_states:
            h = inst.couplings @ s.astype(float)
            assert np.all(2.0 * s * h >= 0)

    def test_guard(self):
        with pytest.raises(OracleGuardError):
            oracle.exact_solve(generate_instance(25, 0))

    def test_code_round_trip(self):
        s = np.array([1, -1, -1, 1, -1], dtype=np.int8)
        assert np.array_equal(oracle.code_to_spins(oracle.spins_to_code(s), 5), s)


class TestQuenched:
    def test_two_spin_closed_form(self):
        # J_12 ~ N(0, 1/2): per-spin ground energy -|J_12|/2, mean -(1/2) sqrt(1/pi)
        q = oracle.quenched_ground_energy(2, 10_000, 3)
        exact = -0.5 * math.sqrt(2 / math.pi) * math.sqrt(0.5)
        assert exact == pytest.approx(-0.28209479, abs=1e-8)
        assert abs(q.mean - exact) < 5 * q.stderr

    def test_ten_spin_regression(self):
        # frozen from the first exhaustive run (200 instances, seed 2024)
        q = oracle.quenched_ground_energy(10, 200, 2024)
        assert q.mean == pytest.approx(-0.5979385908884112, abs=1e-12)
        assert q.stderr == pytest.approx(0.007087452802097879, rel=1e-9)
        assert q.mean > -0.7633

    def test_guard(self):
        with pytest.raises(OracleGuardError):
            oracle.quenched_ground_energy(30, 1, 0)


class TestBasinCensus:
    def test_zero_couplings(self):
        rep = oracle.basin_census(Instance(4, np.zeros((4, 4))), DescentParams(1.0))
        assert np.all(rep.counts == 1)
        assert rep.total == 16

    def test_two_spin_ferromagnet(self):
        rep = oracle.basin_census(instance_from_upper(2, [(0, 1, 1.0)]), DescentParams(1.0))
        assert list(rep.counts) == [2, 2]
        assert rep.ground_fraction == 1.0

    @pytest.mark.parametrize("p", [0.0, 0.5, 1.0])
    def test_counts_sum_to_all_configs(self, p):
        inst = generate_instance(12, 5)
        rep = oracle.basin_census(inst, DescentParams(p, run_seed=1))
        assert rep.total == 2**12

    @pytest.mark.parametrize("p", [0.0, 1.0])
    def test_matches_independent_descents(self, p):
        inst = generate_instance(7, 44)
        sol = oracle.exact_solve(inst)
        rep = oracle.basin_census(inst, DescentParams(p), sol)
        counts = np.zeros_like(rep.counts)
        for code in range(2**7):
            rec = descend(inst, oracle.code_to_spins(code, 7), DescentParams(p))
            counts[sol.index_of(rec.final_spins)] += 1
        assert np.array_equal(counts, rep.counts)

    def test_guard(self):
        with pytest.raises(OracleGuardError):
            oracle.basin_census(generate_instance(21, 0), DescentParams())

    def test_csv_export(self):
        rep = oracle.basin_census(instance_from_upper(2, [(0, 1, 1.0)]), DescentParams(1.0))
        buf = io.StringIO()
        rep.write_csv(buf)
        assert buf.getvalue().splitlines() == [
            "stable_state_id,energy_per_spin,basin_count,is_ground",
            "0,-0.5,2,true",
            "1,-0.5,2,true",
        ]

    def _ground_fractions(self, n=10, count=50):
        out = []
        for d in range(count):
            inst = generate_instance(n, streams.disorder_seed(77, n, d))
            sol = oracle.exact_solve(inst)
            out.append(
                (
                    oracle.basin_census(inst, DescentParams(0.0), sol).ground_fraction,
                    oracle.basin_census(inst, DescentParams(1.0), sol).ground_fraction,
                )
            )
        return np.array(out)

    @pytest.mark.xfail(
        strict=True,
        reason="at n=10 the exhaustive census gives greedy the wider ground basin "
        "(reluctant >= greedy on 15/50 instances); the direction only shows at larger N",
    )
    def test_reluctant_ground_basin_wider_at_n10(self):
        fr = self._ground_fractions()
        assert np.sum(fr[:, 0] >= fr[:, 1]) > 25

    def test_ground_basin_fractions_at_n10(self):
        fr = self._ground_fractions()
        assert int(np.sum(fr[:, 0] >= fr[:, 1])) == 15
        assert fr[:, 0].mean() == pytest.approx(0.45160156, abs=1e-8)
        assert fr[:, 1].mean() == pytest.approx(0.56488281, abs=1e-8)


def test_descent_end_points_are_in_census():
    for d in range(10):
        inst = generate_instance(14, streams.disorder_seed(1, 14, d))
        sol = oracle.exact_solve(inst)
        g = np.random.Generator(np.random.PCG64(d))
        for p in (0.0, 0.5, 1.0):
            for _ in range(30):
                rec = descend(inst, random_initial(14, g), DescentParams(p), rng=g)
                assert sol.index_of(rec.final_spins) >= 0
                assert rec.final_energy_per_spin >= sol.ground_energy_per_spin - 1e-12
