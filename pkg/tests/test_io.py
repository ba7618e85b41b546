import json

import numpy as np
import pytest
import scipy.sparse as sp

from pcomc.concrete import build_concrete_dtmc
from pcomc.dtmc import RewardStructure, make_dtmc
from pcomc.io import (ExportBundle, dump_model_json, export_explicit, export_prism_lang, format_number,
                      load_params, parse_explicit, read_prop_file)
from pcomc.params import ModelParams, ParamsError
from pcomc.population import build_population_dtmc
from pcomc.reduction import build_reduced_dtmc


def same_model(a, b):
    assert a.n == b.n and a.initial == b.initial and a.states == b.states
    assert (a.matrix != b.matrix).nnz == 0
    assert np.array_equal(a.matrix.data, b.matrix.data)
    assert set(a.labels) == set(b.labels)
    assert all(np.array_equal(a.labels[k], b.labels[k]) for k in a.labels)


class TestExplicit:
    def test_single_absorbing_state(self):
        d = make_dtmc([{0: 1.0}], [0], {"init": np.array([True])})
        assert export_explicit(d).tra == "1 1\n0 0 1\n"

    def test_number_format(self):
        assert format_number(1.0) == "1"
        assert format_number(0.1) == "0.1"
        assert float(format_number(1 / 3)) == 1 / 3

    @pytest.mark.parametrize("kind", ["population", "reduced", "concrete"])
    def test_roundtrip(self, kind, small_params):
        if kind == "concrete":
            d = build_concrete_dtmc(ModelParams(2, 3, 1, 0.4, 0.2))
        else:
            d = build_population_dtmc(small_params)
            if kind == "reduced":
                d = build_reduced_dtmc(d, small_params)
        bundle = export_explicit(d)
        back, rewards = parse_explicit(bundle)
        assert rewards is None
        same_model(d, back)
        assert export_explicit(back) == bundle

    def test_reduced_state_lines(self, small_params):
        d = build_reduced_dtmc(build_population_dtmc(small_params), small_params)
        sta = export_explicit(d).sta.splitlines()
        assert sta[0] == "(k1,k2,k3,k4,k5,k6)"
        assert len(sta) - 1 == 22
        assert sta[1] == "0:(0,0,0,0,0,0)"

    def test_rewards_roundtrip(self, small_params, tmp_path):
        d = build_population_dtmc(small_params)
        trans = d.matrix.copy()
        trans.data = np.arange(trans.nnz) / 7.0
        rew = RewardStructure(np.linspace(0, 1, d.n), trans)
        bundle = export_explicit(d, rew)
        bundle.write(tmp_path / "m")
        back, back_rew = parse_explicit(ExportBundle.read(tmp_path / "m"))
        same_model(d, back)
        assert np.array_equal(back_rew.state, rew.state)
        assert abs(back_rew.trans - sp.csr_matrix(rew.trans)).max() == 0

    def test_deterministic(self, small_params):
        a = export_explicit(build_population_dtmc(small_params))
        b = export_explicit(build_population_dtmc(small_params))
        assert a == b

    def test_json_dump(self, small_params):
        doc = json.loads(dump_model_json(build_population_dtmc(small_params)))
        assert len(doc["states"]) == 57 and doc["labels"]["init"] == [0]


class TestPrismLanguage:
    def test_population(self):
        text = export_prism_lang(ModelParams(2, 3, 0, 0.3, 0.2), "population")
        assert "\ndtmc\n" in text.model
        for i in (1, 2, 3):
            assert f"k{i} : [0..N] init 0;" in text.model
        assert text.properties == "P=? [ F (k1=N | k2=N | k3=N) ]\n"

    def test_concrete(self):
        text = export_prism_lang(ModelParams(3, 3, 0, 0.3, 0.2), "concrete")
        assert "phase3 : [0..T] init 0;" in text.model
        assert "phase1=phase2 & phase1=phase3" in text.properties

    def test_one_command_per_state(self, small_params):
        d = build_population_dtmc(small_params)
        text = export_prism_lang(small_params, "population", d).model
        assert text.count("\n  [] ") == d.n

    def test_unknown_kind(self, small_params):
        with pytest.raises(ValueError):
            export_prism_lang(small_params, "reduced")


class TestFiles:
    def test_load_params(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text('{"N": 3, "T": 6, "R": 1, "epsilon": 0.1, "mu": 0.1}')
        assert load_params(path) == ModelParams(3, 6, 1, 0.1, 0.1)

    @pytest.mark.parametrize("text, message", [
        ('{"N": 3, "T": 6, "R": 1, "epsilon": 0.1, "mu": 1.5}', r"mu out of \[0,1\]"),
        ('{"N": 3, "R": 1, "epsilon": 0.1, "mu": 0.1}', "'T'"),
        ('{"N": 3,', "malformed JSON"),
    ])
    def test_load_params_errors(self, tmp_path, text, message):
        path = tmp_path / "p.json"
        path.write_text(text)
        with pytest.raises(ParamsError, match=message):
            load_params(path)

    def test_prop_file(self, tmp_path):
        path = tmp_path / "props.pctl"
        path.write_text('# sync\nP=? [ F "synch" ]  # trailing\n\nR=? [ F "synch" ]\n')
        assert read_prop_file(path) == ['P=? [ F "synch" ]', 'R=? [ F "synch" ]']
