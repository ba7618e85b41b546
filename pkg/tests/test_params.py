import pytest

from pcomc.params import ModelParams, ParamsError, PhaseResponseFunction, params_from_dict, refr, validate


class TestPhaseResponse:
    def test_linear_rounds_half_up(self):
        prf = PhaseResponseFunction()
        assert prf(9, 5, 0.115) == 5  # 5.175
        assert prf(5, 1, 0.1) == 1  # 0.5 rounds up
        assert prf(4, 1, 0.1) == 0
        assert prf(7, 0, 0.5) == 0

    def test_table_lookup(self):
        prf = PhaseResponseFunction.table([[0, 1], [0, 2]])
        assert prf(2, 1, 0.0) == 2
        with pytest.raises(ParamsError):
            prf(3, 0, 0.0)

    def test_refractory(self):
        assert refr(2, 5, 2) == 2
        assert refr(3, 5, 2) == 8
        assert refr(1, 4, 0) == 5


class TestValidate:
    @pytest.mark.parametrize("changes, message", [
        ({"N": 0}, "N must be at least 1"),
        ({"T": 0, "R": 0}, "T must be at least 1"),
        ({"R": 7}, "R exceeds T"),
        ({"R": -1}, "R must be nonnegative"),
        ({"mu": 1.5}, r"mu out of \[0,1\]"),
        ({"mu": -0.1}, r"mu out of \[0,1\]"),
        ({"epsilon": -0.5}, "epsilon must be nonnegative"),
        ({"N": 2.0}, "N must be an integer"),
    ])
    def test_rejects(self, small_params, changes, message):
        with pytest.raises(ParamsError, match=message):
            validate(small_params.replace(**changes))

    def test_accepts_endpoints(self, small_params):
        for mu in (0.0, 1.0):
            small_params.replace(mu=mu).validate()
        small_params.replace(R=6).validate()

    def test_table_shape(self):
        p = ModelParams(2, 2, 0, 0.0, 0.1, PhaseResponseFunction.table([[0, 0, 0]]))
        with pytest.raises(ParamsError, match="2 x 3"):
            p.validate()

    def test_table_zero_alpha_column(self):
        p = ModelParams(1, 2, 0, 0.0, 0.1, PhaseResponseFunction.table([[1, 1], [0, 0]]))
        with pytest.raises(ParamsError, match="alpha=0"):
            p.validate()

    def test_table_monotone_in_alpha(self):
        p = ModelParams(2, 2, 0, 0.0, 0.1, PhaseResponseFunction.table([[0, 1, 0], [0, 0, 0]]))
        with pytest.raises(ParamsError, match="nondecreasing"):
            p.validate()

    def test_table_firing_monotone_in_phase(self):
        # phase 1 jumps past T with one perceived firing, phase 2 does not
        p = ModelParams(1, 3, 0, 0.0, 0.1, PhaseResponseFunction.table([[0, 5], [0, 0], [0, 0]]))
        with pytest.raises(ParamsError, match="fire but not phase 2"):
            p.validate()


class TestFromDict:
    def test_roundtrip(self, small_params):
        assert params_from_dict(small_params.to_dict()) == small_params

    def test_missing_field(self):
        with pytest.raises(ParamsError, match="'T'"):
            params_from_dict({"N": 3, "R": 1, "epsilon": 0.1, "mu": 0.1})

    def test_unknown_key(self):
        with pytest.raises(ParamsError, match="unknown parameter key"):
            params_from_dict({"N": 3, "T": 6, "R": 1, "epsilon": 0.1, "mu": 0.1, "delta": 2})

    def test_table_prf(self):
        p = params_from_dict({"N": 1, "T": 2, "R": 0, "epsilon": 0, "mu": 0.5,
                              "prf": {"kind": "table", "values": [[0, 1], [0, 1]]}})
        assert p.pert(1, 1) == 1

    def test_update_table(self, small_params):
        # phase 1 is refractory, phase 5 with alpha 2 moves to 5+1+1
        assert small_params.update_table[1][3] == 2
        assert small_params.update_table[5][2] == 7
        assert small_params.fires(6, 0)
