"""Polynomial local models of contact words and their perturbation
roundtrips."""

import pytest

from travflow import TravflowError, build_polynomial, evaluate, model_scene, \
    roundtrip, trace
from travflow.localmodel import MAX_COEFFICIENTS, coefficient_slots


def test_polynomial_roots_carry_the_word():
    # (u - 1)^2 + x1 at the baseline slice x1 = 0
    poly = build_polynomial((2,))
    assert evaluate(poly, [1.0, 0.0]) == 0.0
    assert evaluate(poly, [3.0, 0.0]) == 4.0
    assert evaluate(poly, [1.0, 0.5]) == 0.5
    poly = build_polynomial((1, 2, 1))
    for root in (1.0, 2.0, 3.0):
        assert evaluate(poly, [root, 0.0]) == 0.0
    # between the simple roots the slice is inside the domain
    assert evaluate(poly, [1.5, 0.0]) < 0.0
    assert evaluate(poly, [2.5, 0.0]) < 0.0


def test_coefficient_slots_truncate():
    assert coefficient_slots((1, 1)) == []
    assert coefficient_slots((2,)) == [(1, 0)]
    assert coefficient_slots((1, 2, 1)) == [(2, 0)]
    # four deformation directions exist but only two are modeled
    assert coefficient_slots((3, 1)) == [(1, 0), (1, 1)]
    assert coefficient_slots((1, 4, 1)) == [(2, 0), (2, 1)]
    assert len(coefficient_slots((1, 4, 1))) == MAX_COEFFICIENTS


def test_model_scene_dimensions():
    assert model_scene((1, 1)).dimension == 1
    assert model_scene((2,)).dimension == 2
    assert model_scene((1, 4, 1)).dimension == 3


@pytest.mark.parametrize("word", [(1, 1), (2,), (1, 2, 1), (3, 1), (1, 4, 1)])
def test_roundtrip_recovers_and_degenerates(word):
    out = roundtrip(word)
    assert out["ok"], out
    assert tuple(out["baseline"]["omega"]) == word
    assert out["stability_margin"] > 0.0
    for entry in out["perturbations"]:
        if entry.get("empty"):
            continue
        assert entry["parity_ok"]
        assert entry["norm_drop"]
        assert entry["reduced_norm"] < sum(m - 1 for m in word)


def test_singleton_model_perturbations():
    out = roundtrip((2,))
    by_sign = {entry["sign"]: entry for entry in out["perturbations"]}
    # raising the minimum empties the slice, lowering it splits the
    # double root
    assert by_sign[1]["empty"] is True
    assert by_sign[-1]["empty"] is False
    assert tuple(by_sign[-1]["omega"]) == (1, 1)


@pytest.mark.parametrize("word, message", [
    ((1, 3, 1), "interior"),
    ((2, 2), "endpoint"),
    ((2, 1), "endpoint"),
    ((5,), "singleton"),
    ((1, 5), "resolvable"),
    ((), "nonempty"),
])
def test_invalid_words_rejected(word, message):
    with pytest.raises(TravflowError, match=message):
        roundtrip(word)


def test_traced_baseline_matches_the_word():
    scene = model_scene((1, 2, 1))
    record = trace(scene, [1.5, 0.0], want_polyline=False)
    assert record.omega.word == (1, 2, 1)
    assert [c.multiplicity for c in record.divisor.contacts] == [1, 2, 1]
    assert record.divisor.contacts[1].coords[0] == pytest.approx(2.0, abs=1e-7)
