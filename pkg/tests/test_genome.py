import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaitevo.cpg import Mode
from gaitevo.errors import GenomeParseError, ParameterError
from gaitevo.genome import (GENE_NAMES, GENOME_LENGTH, PARAM_TABLE, decode, decode_values, genome_from_json,
                            genome_to_json, load_genome, replicate_legs, save_genome, scale_gene)

genomes = st.lists(st.floats(0.0, 1.0), min_size=GENOME_LENGTH, max_size=GENOME_LENGTH)


def test_midpoint_gain():
    g = np.full(10, 0.5)
    assert decode(g, "open").globals.gain == pytest.approx(0.4)


def test_midpoint_phase_shift():
    p = decode(np.full(10, 0.5), "closed")
    assert p.legs[0].phase_shift_j1 == pytest.approx(0.0, abs=1e-15)
    assert p.legs[0].phase_shift_j2 == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("mode", ["open", "closed"])
def test_lower_bounds(mode):
    v = decode_values(np.zeros(10), mode)
    expected = {"gain": 0.2, "duty": 0.2, "j1_target_amp": 0.0, "j1_target_offset": 0.36,
                "j2_target_swing": 0.0, "j2_target_stance": 0.0, "j2_target_offset": 0.85,
                "j1_phase_shift": -0.2 * math.pi, "j2_phase_shift": -0.2 * math.pi}
    for k, val in expected.items():
        assert v[k] == val, k
    if mode == "open":
        assert v["coupling_strength"] == 0.1
    else:
        assert v["attraction"] == 0.005


@pytest.mark.parametrize("mode", ["open", "closed"])
def test_upper_bounds(mode):
    v = decode_values(np.ones(10), mode)
    for e in PARAM_TABLE:
        if e.evolved and Mode.parse(mode) in e.modes:
            assert v[e.name] == e.upper


def test_fixed_parameters():
    p = decode(np.full(10, 0.3), "open")
    assert p.globals.frequency == 0.25
    assert p.legs[0].target_amp[0] == 0.0
    assert p.legs[0].target_offset[0] == 0.18
    assert p.globals.desired_leg_phases == (0.0, 0.5, 0.25, 0.75)


@pytest.mark.parametrize("bad", [[-0.01] + [0.5] * 9, [0.5] * 9 + [1.0001], [float("nan")] * 10, [0.5] * 9])
def test_out_of_box_rejected(bad):
    with pytest.raises(ParameterError):
        decode(bad, "open")


def test_replicate():
    p = decode(np.linspace(0, 1, 10), "closed")
    assert len(p.legs) == 4
    assert all(leg == p.legs[0] for leg in p.legs)
    assert replicate_legs(p.legs[0]) == p.legs


@settings(max_examples=100, deadline=None)
@given(genomes, st.integers(0, 9), st.floats(0, 1))
def test_monotone(genes, idx, new):
    lo, hi = sorted([genes[idx], new])
    a, b = list(genes), list(genes)
    a[idx], b[idx] = lo, hi
    name = GENE_NAMES[Mode.OPEN][idx]
    assert decode_values(a, "open")[name] <= decode_values(b, "open")[name]


@settings(max_examples=100, deadline=None)
@given(genomes)
def test_modes_share_parameters(genes):
    o, c = decode_values(genes, "open"), decode_values(genes, "closed")
    for k in set(o) & set(c):
        assert o[k] == c[k]
    assert decode_values(genes, "open") == o


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1), st.floats(-5, 5), st.floats(0, 5))
def test_scale_in_range(g, lo, width):
    hi = lo + width
    assert lo <= scale_gene(g, lo, hi) <= hi


def test_json_round_trip(tmp_path):
    g = np.random.default_rng(1).uniform(size=10)
    path = tmp_path / "g.json"
    save_genome(path, g, "closed")
    back, mode = load_genome(path)
    assert mode is Mode.CLOSED
    assert np.array_equal(back, g)
    assert genome_from_json(genome_to_json(g, "open"))[1] is Mode.OPEN


def test_json_errors():
    with pytest.raises(GenomeParseError, match="line 1, column"):
        genome_from_json('{"mode": "open", "genes": [0.1, ]}')
    with pytest.raises(GenomeParseError):
        genome_from_json(json.dumps({"mode": "open"}))
    with pytest.raises(GenomeParseError, match="position 3"):
        genome_from_json(json.dumps({"mode": "open", "genes": [0.1, 0.2, 0.3, "x"] + [0.5] * 6}))
    with pytest.raises(GenomeParseError):
        genome_from_json(json.dumps({"mode": "open", "genes": [2.0] * 10}))
    with pytest.raises(GenomeParseError):
        genome_from_json(json.dumps({"mode": "trot", "genes": [0.5] * 10}))
