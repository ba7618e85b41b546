import itertools
from fractions import Fraction

import pytest

from pcomc.concrete import ConcreteState, build_concrete_dtmc, concrete_transitions, initial_state
from pcomc.dtmc import INIT, BudgetExceeded
from pcomc.params import ModelParams

F, T_ = False, True


def closure_n1_t2(mu):
    """Hand enumeration of the single-oscillator, two-phase system with R=0.

    Phase 1 never perceives a firing, so it just advances; phase 2 fires and
    the pulse is lost with probability mu.
    """
    s = ConcreteState
    return {
        INIT: {s(F, 0, (1,), (F,)): 0.5, s(F, 0, (2,), (F,)): 0.5},
        s(F, 0, (1,), (F,)): {s(T_, 0, (1,), (F,)): 1.0},
        s(T_, 0, (1,), (F,)): {s(T_, 0, (1,), (T_,)): 1.0},
        s(T_, 0, (1,), (T_,)): {s(F, 0, (2,), (F,)): 1.0},
        s(F, 0, (2,), (F,)): {s(T_, 0, (2,), (F,)): 1.0},
        s(T_, 0, (2,), (F,)): {s(T_, 1, (2,), (T_,)): 1 - mu, s(T_, 0, (2,), (T_,)): mu},
        s(T_, 1, (2,), (T_,)): {s(F, 1, (1,), (F,)): 1.0},
        s(T_, 0, (2,), (T_,)): {s(F, 0, (1,), (F,)): 1.0},
        s(F, 1, (1,), (F,)): {s(T_, 0, (1,), (F,)): 1.0},
    }


class TestConcrete:
    @pytest.mark.parametrize("mu", [0.1, 0.5])
    def test_matches_hand_closure(self, mu):
        d = build_concrete_dtmc(ModelParams(1, 2, 0, 0.1, mu))
        expected = closure_n1_t2(mu)
        assert set(d.states) == set(expected)
        assert d.n == 9 and d.num_transitions == 11
        for s, succ in expected.items():
            got = {d.states[j]: p for j, p in d.successors(d.index[s])}
            assert got == pytest.approx(succ)

    def test_mu_endpoints_drop_zero_moves(self):
        assert build_concrete_dtmc(ModelParams(1, 2, 0, 0.1, 0.0)).n == 8

    @pytest.mark.parametrize("N, T, R, eps, mu", [(2, 3, 1, 0.4, 0.2), (3, 4, 0, 0.3, 0.5), (2, 5, 2, 0.5, 1.0)])
    def test_stochastic_and_exact(self, N, T, R, eps, mu):
        p = ModelParams(N, T, R, eps, mu)
        d = build_concrete_dtmc(p, exact=True)
        d.check_stochastic()
        assert all(sum(row.values()) == 1 for row in d.exact_rows)
        assert d.exact_rows[0][1] == Fraction(1, T ** N)

    def test_initial_fan_out(self):
        d = build_concrete_dtmc(ModelParams(2, 3, 1, 0.4, 0.2))
        starts = {d.states[j] for j, _ in d.successors(0)}
        assert starts == {initial_state(ph) for ph in itertools.product(range(1, 4), repeat=2)}

    def test_round_structure(self):
        p = ModelParams(2, 4, 0, 0.5, 0.0)
        s = ConcreteState(T_, 0, (4, 3), (F, F))
        # the oscillator at T fires first, then phase 3 perceives it
        (t, prob), = concrete_transitions(s, p)
        assert prob == 1 and t == ConcreteState(T_, 1, (4, 3), (T_, F))
        (u, _), = concrete_transitions(t, p)
        assert u.counter == 2
        (v, _), = concrete_transitions(u, p)
        assert v == ConcreteState(F, 2, (1, 1), (F, F)) and v.synchronised

    def test_refractory_oscillator_does_not_fire(self):
        p = ModelParams(2, 4, 3, 0.9, 0.0)
        t = ConcreteState(T_, 1, (4, 3), (T_, F))
        (u, _), = concrete_transitions(t, p)
        assert u.counter == 1

    def test_labels(self):
        d = build_concrete_dtmc(ModelParams(2, 3, 1, 0.4, 0.2))
        for i, s in enumerate(d.states):
            if s is INIT:
                assert d.labels["init"][i]
            else:
                assert d.labels["synch"][i] == (s.phases[0] == s.phases[1])
                assert d.labels["round_start"][i] == s.in_round_start

    def test_budget(self):
        with pytest.raises(BudgetExceeded, match="budget of 50 states"):
            build_concrete_dtmc(ModelParams(3, 4, 1, 0.1, 0.1), budget=50)
