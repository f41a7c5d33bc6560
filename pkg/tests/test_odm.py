import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from odmvq.core import ContractError, PoleSet, SearchBox
from odmvq.odm import (
    Direction,
    Hegemony,
    Membership,
    MembershipKind,
    ObjectiveError,
    OdmConfig,
    compute_memberships,
    contradiction,
    decay_steps,
    evolution_step,
    init_poles,
    memberships_canonical,
    memberships_max_entropy,
    optimize,
    revolutionary_crisis,
)


def sphere(x):
    return float(np.sum(x * x))


def hegemony_at(current_value, historical_value, dim=1):
    z = np.zeros(dim)
    return Hegemony(z, current_value, z, historical_value)


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(initial_poles=3), dict(min_contradiction=0.9, max_contradiction=0.5),
                                    dict(step_decay=1.0), dict(initial_step=0.0), dict(max_poles=0)])
    def test_invalid(self, kw):
        with pytest.raises(ContractError):
            OdmConfig(**kw)


class TestInit:
    def test_half_are_antitheses(self):
        box = SearchBox.unit(3)
        cfg = OdmConfig(initial_poles=4)
        ps = init_poles(box, cfg, np.random.default_rng(0), lambda w: np.zeros(len(w)))
        assert len(ps) == 4
        assert np.array_equal(ps.weights[2:], box.antithesis(ps.weights[:2]))
        assert box.contains(ps.weights)


class TestMemberships:
    def test_canonical_example(self):
        # current hegemon value 0; poles at |f - f_C| = 1 and 3
        ps = PoleSet(np.zeros((2, 1)), np.array([-1.0, -3.0]))
        mu = memberships_canonical(ps, hegemony_at(0.0, 0.0))
        assert mu.current == pytest.approx([0.75, 0.25], abs=1e-15)

    def test_canonical_unique_hegemon_takes_all(self):
        ps = PoleSet(np.zeros((3, 1)), np.array([2.0, 1.0, 0.0]))
        mu = memberships_canonical(ps, hegemony_at(2.0, 2.0))
        assert mu.current.tolist() == [1.0, 0.0, 0.0]

    def test_canonical_ties_share(self):
        ps = PoleSet(np.zeros((2, 1)), np.array([2.0, 2.0]))
        assert memberships_canonical(ps, hegemony_at(2.0, 2.0)).current.tolist() == [0.5, 0.5]

    def test_equal_distances_uniform(self):
        ps = PoleSet(np.zeros((4, 1)), np.full(4, -1.0))
        for fn in (memberships_canonical, memberships_max_entropy):
            assert fn(ps, hegemony_at(0.0, 0.0)).current == pytest.approx(np.full(4, 0.25))

    def test_max_entropy_example(self):
        # two poles give lambda = 1/2, so a gap of 2 ln 2 is the unit-rate ln 2 case
        ps = PoleSet(np.zeros((2, 1)), np.array([0.0, -2 * math.log(2)]))
        mu = memberships_max_entropy(ps, hegemony_at(0.0, 0.0))
        assert mu.current == pytest.approx([2 / 3, 1 / 3], abs=1e-15)

    def test_max_entropy_tends_to_uniform_for_many_poles(self):
        m = 2000
        ps = PoleSet(np.zeros((m, 1)), -np.linspace(0, 1, m))
        mu = memberships_max_entropy(ps, hegemony_at(0.0, 0.0)).current
        assert mu.max() / mu.min() < 1.001

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=20), st.floats(-1e6, 1e6))
    def test_normalised_and_rank_consistent(self, objs, hist):
        objs = np.array(objs)
        ps = PoleSet(np.zeros((len(objs), 1)), objs)
        heg = Hegemony.from_poles(ps, hegemony_at(hist, max(hist, objs.max())))
        can = compute_memberships(ps, heg, MembershipKind.CANONICAL)
        pme = compute_memberships(ps, heg, "max_entropy")
        for a, b in ((can.current, pme.current), (can.historical, pme.historical)):
            for v in (a, b):
                assert abs(v.sum() - 1.0) < 1e-9
                assert np.all((v >= 0) & (v <= 1))
            # no pair ordered one way by one strategy and the other way by the other
            da, db = np.sign(a[:, None] - a[None, :]), np.sign(b[:, None] - b[None, :])
            assert not np.any(da * db < 0)


class TestEvolution:
    def test_one_dimensional_example(self):
        ps = PoleSet(np.array([[0.0]]), np.array([0.0]))
        heg = Hegemony(np.array([1.0]), 1.0, np.array([1.0]), 1.0)
        out = evolution_step(ps, heg, Membership(np.array([0.0]), np.array([0.0])), 0.1, 0.1)
        assert out[0, 0] == pytest.approx(0.2)

    def test_full_membership_freezes_pole(self):
        ps = PoleSet(np.array([[0.3, 0.7]]), np.array([0.0]))
        heg = Hegemony(np.array([1.0, 1.0]), 1.0, np.array([0.0, 0.0]), 1.0)
        out = evolution_step(ps, heg, Membership(np.ones(1), np.ones(1)), 0.5, 0.5)
        assert np.array_equal(out, ps.weights)

    def test_pole_on_hegemons_unchanged(self):
        w = np.array([[0.4]])
        ps = PoleSet(w, np.array([0.0]))
        heg = Hegemony(w[0], 0.0, w[0], 0.0)
        out = evolution_step(ps, heg, Membership(np.zeros(1), np.zeros(1)), 0.3, 0.3)
        assert np.array_equal(out, w)

    def test_decay(self):
        assert decay_steps(0.1, 0.9999) == pytest.approx(0.09999)
        assert decay_steps(0.0, 0.5) == 0.0
        eta = 0.1
        for _ in range(50):
            eta = decay_steps(eta, 0.9999)
        assert eta == pytest.approx(0.9999**50 * 0.1, rel=1e-12)


class TestContradiction:
    def test_values(self):
        box = SearchBox.unit(2)
        assert contradiction([0.2, 0.2], [0.2, 0.2], box) == 0.0
        assert contradiction([0, 0], [1, 1], box) == pytest.approx(1.0)
        assert contradiction([0, 0], [0.3, 0.4], box) == pytest.approx(0.5 / math.sqrt(2))


class TestCrisis:
    def run(self, weights, final=False, **kw):
        box = SearchBox.unit(2)
        cfg = OdmConfig(max_crisis=0.0, **kw)
        ps = PoleSet(np.array(weights, dtype=float), -np.arange(len(weights), dtype=float))
        ev = lambda w: np.zeros(len(w))
        return revolutionary_crisis(ps, cfg, np.random.default_rng(0), final, box, ev)

    def test_identical_poles_fuse(self):
        out, rec = self.run([[0.5, 0.5], [0.5, 0.5]], final=True, min_contradiction=0.01)
        assert rec.after_fusion == 1 and len(out) == 1

    def test_opposite_corners_synthesize_midpoint(self):
        out, rec = self.run([[0.0, 0.0], [1.0, 1.0]], final=True)
        assert rec.after_synthesis == 3
        assert np.allclose(out.weights[2], [0.5, 0.5])

    def test_doubling_when_not_final(self):
        out, rec = self.run([[0.1, 0.2], [0.3, 0.25]])
        assert rec.after_doubling == 2 * rec.after_synthesis == len(out)

    def test_max_poles_cap(self):
        out, _ = self.run([[0.1, 0.2], [0.3, 0.25], [0.6, 0.5]], max_poles=2)
        assert len(out) == 2


class TestOptimize:
    def test_sphere(self):
        res = optimize(sphere, SearchBox.cube(-5, 5, 2), OdmConfig(rng_seed=3))
        assert res.best_value < 1e-3
        assert res.best_value == pytest.approx(sphere(res.best_point))

    def test_maximize_mirrors_minimize(self):
        box = SearchBox.unit(2)
        lo = optimize(lambda x: sphere(x - 0.25), box, OdmConfig(rng_seed=1))
        hi = optimize(lambda x: -sphere(x - 0.25), box, OdmConfig(direction=Direction.MAXIMIZE, rng_seed=1))
        assert np.array_equal(lo.best_point, hi.best_point)
        assert hi.best_value == -lo.best_value
        assert np.all(np.diff([r.f_historical for r in hi.trace]) >= 0)

    def test_constant_objective(self):
        res = optimize(lambda x: 7.0, SearchBox.unit(2), OdmConfig(historical_phases=2, phase_length=5))
        assert all(r.f_historical == 7.0 for r in res.trace)

    def test_threshold_met_at_init_stops_immediately(self):
        res = optimize(sphere, SearchBox.unit(2), OdmConfig(objective_threshold=10.0))
        assert res.iterations == 0 and not res.crises

    def test_zero_phases_returns_initial_best(self):
        res = optimize(sphere, SearchBox.unit(2), OdmConfig(historical_phases=0))
        assert res.iterations == 0 and res.evaluations == 8

    def test_nan_objective_raises(self):
        with pytest.raises(ObjectiveError, match="point"):
            optimize(lambda x: float("nan"), SearchBox.unit(2))

    def test_deterministic(self):
        cfg = OdmConfig(historical_phases=3, phase_length=20, rng_seed=11)
        a = optimize(sphere, SearchBox.cube(-5, 5, 2), cfg)
        b = optimize(sphere, SearchBox.cube(-5, 5, 2), cfg)
        assert a.trace == b.trace and np.array_equal(a.best_point, b.best_point)

    def test_evaluation_count_matches_calls(self):
        calls = []
        res = optimize(lambda x: calls.append(1) or sphere(x), SearchBox.unit(2),
                       OdmConfig(historical_phases=2, phase_length=10))
        assert res.evaluations == len(calls)

    def test_best_point_stays_in_box(self):
        box = SearchBox.cube(1, 2, 3)
        res = optimize(sphere, box, OdmConfig(historical_phases=2, phase_length=10, max_crisis=2.0))
        assert box.contains(res.best_point)
        assert res.best_value == pytest.approx(3.0, abs=0.05)
