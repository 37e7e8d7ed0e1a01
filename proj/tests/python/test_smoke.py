"""Smoke tests for the python bindings against the built extension."""

import math

import pytest

import rlfuzz


def test_receptive_field_presets():
    assert rlfuzz.receptive_field("cfg01") == 509
    assert rlfuzz.receptive_field("cfg07") == 511
    assert rlfuzz.receptive_field_of(1, [1, 2, 4]) == 1
    for name in rlfuzz.tcn_preset_names():
        assert rlfuzz.receptive_field(name) >= 250


def test_corpus_generation_deterministic():
    text1, counts1 = rlfuzz.generate_corpus(500, seed=7)
    text2, counts2 = rlfuzz.generate_corpus(500, seed=7)
    assert text1 == text2
    assert counts1 == counts2
    assert sum(counts1.values()) == 500
    assert len(text1.splitlines()) == 500


def test_default_grammar_size():
    assert len(rlfuzz.default_tag_names()) >= 60


def test_build_test_case():
    content = rlfuzz.build_test_case(["<br>"], "<html><body>|</body></html>")
    assert content == "<html><body><br></body></html>"


def test_vocabulary_round_trip():
    v = rlfuzz.Vocabulary.build("abca")
    assert v.size == 3
    assert v.encode("abc") == [0, 1, 2]
    assert v.decode(v.encode("cab")) == "cab"


def test_toy_target():
    base = rlfuzz.toy_baseline_probes()
    assert rlfuzz.toy_target_execute("") == base
    br = rlfuzz.toy_target_execute("<br>")
    assert base < br  # strict superset
    assert rlfuzz.toy_probe_count() >= 300


def test_coverage_ops():
    a = {(0, 1), (0, 2)}
    b = {(0, 2), (0, 3)}
    assert rlfuzz.coverage_union([a, b]) == {(0, 1), (0, 2), (0, 3)}
    assert rlfuzz.coverage_unique(a, b) == {(0, 1)}


def test_drcov_round_trip():
    blocks = {(0, 0x10), (0, 0x20), (1, 0x30)}
    modules = [(0, 0x1000, 0x2000, "/lib/a.so"), (1, 0x3000, 0x4000, "/lib/b.so")]
    log = rlfuzz.emit_drcov(blocks, modules)
    parsed_blocks, parsed_modules = rlfuzz.parse_drcov(log)
    assert parsed_blocks == blocks
    assert len(parsed_modules) == 2
    with pytest.raises(Exception):
        rlfuzz.parse_drcov(log[: len(log) - 3])


def test_kl_divergence_fixtures():
    assert rlfuzz.kl_divergence([0.5, 0.5], [0.5, 0.5]) == pytest.approx(0.0, abs=1e-9)
    assert rlfuzz.kl_divergence([0.5, 0.5], [0.25, 0.75]) == pytest.approx(0.1438, abs=1e-4)
    m = rlfuzz.policy_similarity_matrix([[10, 1], [1, 10]])
    assert m[0][0] == 0.0
    assert m[0][1] > 0.0


def test_select_action():
    assert rlfuzz.select_action([0.1, 0.9, 0.2], 0.0) == 1
    assert rlfuzz.select_action([0.5, 0.5], 0.0) == 0


def test_double_q_target():
    y = rlfuzz.double_q_target(
        [([0], 1, 0.0, [1], False), ([0], 0, 1.038, [1], True)],
        lambda s: [0.2, 0.5],
        lambda s: [0.3, 0.1],
        0.99,
    )
    assert y[0] == pytest.approx(0.099)
    assert y[1] == pytest.approx(1.038)


def test_prioritized_replay():
    mem = rlfuzz.PrioritizedReplay(8, 1.0)
    mem.insert([0], 0, 0.0, [1], False)
    mem.insert([1], 0, 0.0, [2], False)
    mem.update_priorities([0, 1], [1.0, 3.0])
    assert mem.size == 2
    assert mem.sample_probability(1) == pytest.approx(0.75, abs=1e-3)
    indices, weights = mem.sample(32, 1.0, seed=3)
    assert len(indices) == 32
    assert max(weights) == pytest.approx(1.0)
