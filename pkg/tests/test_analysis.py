import numpy as np
import pytest
import scipy.sparse as sp

from pcomc.analysis import (PctlSyntaxError, SolverStats, check, evaluate, format_result, mc_estimate, parse_pctl,
                            prob0, prob1, prob_unbounded_until, solve_linear)
from pcomc.analysis.pctl import And, Atom, Eventually, Not, ProbOp, RewardOp, Until
from pcomc.dtmc import INIT, ModelError, RewardStructure, make_dtmc
from pcomc.params import ModelParams
from pcomc.population import build_population_dtmc


def chain(rows, labels, initial=0):
    n = len(rows)
    masks = {k: np.array([i in v for i in range(n)]) for k, v in labels.items()}
    return make_dtmc(rows, list(range(n)), masks, initial=initial)


@pytest.fixture
def gambler():
    # 0 and 4 absorbing, fair steps in between
    rows = [{0: 1.0}] + [{i - 1: 0.5, i + 1: 0.5} for i in range(1, 4)] + [{4: 1.0}]
    return chain(rows, {"win": {4}, "lose": {0}}, initial=2)


class TestParser:
    def test_query(self):
        assert parse_pctl('P=? [ F "synch" ]') == ProbOp(None, None, Eventually(Atom("synch")))

    def test_bounded_until_and_rewards(self):
        f = parse_pctl('P>=0.5 [ !"a" U<=10 "b" & "c" ]')
        assert f == ProbOp(">=", 0.5, Until(Not(Atom("a")), And(Atom("b"), Atom("c")), 10))
        assert parse_pctl('R<3.5 [ F "x" ]') == RewardOp("<", 3.5, Atom("x"))

    @pytest.mark.parametrize("text, pos", [('P=? [ F "a" ', 12), ('P>=1.5 [ F "a" ]', 3), ('"a" &', 5),
                                           ("P=? [ F # ]", 8)])
    def test_errors_carry_position(self, text, pos):
        with pytest.raises(PctlSyntaxError) as info:
            parse_pctl(text)
        assert info.value.position == pos
        assert f"position {pos}" in str(info.value)


class TestSolvers:
    def test_gambler(self, gambler):
        assert evaluate(gambler, 'P=? [ F "win" ]') == pytest.approx(0.5, abs=1e-12)
        assert evaluate(gambler, 'P=? [ F<=2 "win" ]') == pytest.approx(0.25)
        assert evaluate(gambler, 'P=? [ X "lose" ]') == 0.0
        steps = RewardStructure.steps(gambler.n)
        assert evaluate(gambler, 'R=? [ F "win" | "lose" ]', steps) == pytest.approx(4.0, abs=1e-10)
        assert evaluate(gambler, 'R=? [ F "win" ]', steps) == float("inf")

    def test_boolean_results(self, gambler):
        assert evaluate(gambler, 'P>0.4 [ F "win" ]') is True
        assert evaluate(gambler, 'P>0.6 [ F "win" ]') is False
        np.testing.assert_array_equal(check(gambler, 'P>=1 [ F "win" ]'), [False] * 4 + [True])

    def test_graph_precomputation(self, gambler):
        everywhere = np.ones(5, dtype=bool)
        win = gambler.label_mask("win")
        assert prob0(gambler, everywhere, win).tolist() == [True, False, False, False, False]
        assert prob1(gambler, everywhere, win).tolist() == [False] * 4 + [True]

    def test_gauss_seidel_matches_dense(self):
        rng = np.random.default_rng(3)
        n = 300
        dense = rng.random((n, n)) * (rng.random((n, n)) < 0.05)
        dense /= dense.sum(axis=1, keepdims=True) * 1.25  # substochastic
        A = sp.identity(n, format="csr") - sp.csr_matrix(dense)
        b = rng.random(n)
        stats = SolverStats()
        x = solve_linear(A, b, stats=stats)
        np.testing.assert_allclose(x, solve_linear(A, b, method="dense"), atol=1e-10)
        assert stats.iterations > 1 and stats.residual < 1e-12
        np.testing.assert_allclose(solve_linear(A, b, backward=False), x, atol=1e-10)

    def test_population_dense_vs_iterative(self):
        d = build_population_dtmc(ModelParams(4, 8, 5, 0.1, 0.1))
        every = np.ones(d.n, dtype=bool)
        target = d.label_mask("synch")
        gs = prob_unbounded_until(d, every, target)
        lu = prob_unbounded_until(d, every, target, method="dense")
        np.testing.assert_allclose(gs, lu, atol=1e-10)
        assert 0 < gs[0] < 1

    def test_unknown_label_and_missing_rewards(self, gambler):
        with pytest.raises(ModelError, match="unknown label 'nope'"):
            evaluate(gambler, 'P=? [ F "nope" ]')
        with pytest.raises(ModelError, match="reward structure"):
            evaluate(gambler, 'R=? [ F "win" ]')

    def test_format_result(self):
        assert format_result(float("inf")) == "inf"
        assert format_result(True) == "true"
        assert format_result(0.25) == "0.25"


class TestMonteCarlo:
    def test_gambler_estimate(self, gambler):
        est, half = mc_estimate(gambler, gambler.label_mask("win"), 40_000, 200, seed=1)
        assert abs(est - 0.5) <= 1.5 * half
        assert mc_estimate(gambler, gambler.label_mask("win"), 1000, 200, seed=1) == \
            mc_estimate(gambler, gambler.label_mask("win"), 1000, 200, seed=1)

    def test_bad_arguments(self, gambler):
        with pytest.raises(ValueError):
            mc_estimate(gambler, gambler.label_mask("win"), 10, 0)
