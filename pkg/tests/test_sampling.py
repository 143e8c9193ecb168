"""Prototype sampling: evidence handling, exactness, reproducibility."""
import math
from collections import Counter

import pytest

from popnetgen.bn import parse_bn
from popnetgen.inference import ZeroEvidenceError
from popnetgen.sampling import PrototypeSampler, draw_index, sample_prototype, substream

from helpers import enum_joint_items

AGE_SLICE_DOC = """
variable ageDetail { 3, 7, 12, 20, 30 }
variable ageSlice { 0-14, 15-50 }
cpt ageDetail { 0.2, 0.2, 0.2, 0.2, 0.2 }
cpt ageSlice | ageDetail {
  3: 1.0, 0.0
  7: 1.0, 0.0
  12: 1.0, 0.0
  20: 0.0, 1.0
  30: 0.0, 1.0
}
"""

FOUR_VAR_DOC = """
variable a { a0, a1 }
variable b { b0, b1, b2 }
variable c { c0, c1 }
variable d { d0, d1 }
cpt a { 0.35, 0.65 }
cpt b | a {
  a0: 0.2, 0.3, 0.5
  a1: 0.6, 0.1, 0.3
}
cpt c | a {
  a0: 0.9, 0.1
  a1: 0.4, 0.6
}
cpt d | b, c {
  b0, c0: 0.5, 0.5
  b0, c1: 0.1, 0.9
  b1, c0: 0.3, 0.7
  b1, c1: 0.8, 0.2
  b2, c0: 0.25, 0.75
  b2, c1: 0.0, 1.0
}
"""


class TestSubstream:
    def test_same_label_same_stream(self):
        a = substream(42, "population")
        b = substream(42, "population")
        assert [a.random() for _ in range(5)] == [b.random() for _ in range(5)]

    def test_labels_are_independent(self):
        a = substream(42, "population")
        b = substream(42, "rule/homophily/spouses/0")
        assert [a.random() for _ in range(5)] != [b.random() for _ in range(5)]

    def test_seed_changes_stream(self):
        assert substream(1, "x").random() != substream(2, "x").random()


class TestDrawIndex:
    def test_inverse_cdf_over_domain_order(self):
        probs = [0.2, 0.5, 0.3]
        assert draw_index(probs, 0.0) == 0
        assert draw_index(probs, 0.19) == 0
        assert draw_index(probs, 0.21) == 1
        assert draw_index(probs, 0.699) == 1
        assert draw_index(probs, 0.71) == 2

    def test_never_picks_zero_probability(self):
        probs = [0.0, 1.0, 0.0]
        for u in (0.0, 0.5, 0.999999):
            assert draw_index(probs, u) == 1
        # float undershoot falls back to the last positive entry
        assert draw_index([0.5, 0.5, 0.0], 0.9999999999999999) == 1


class TestSamplePrototype:
    def test_deterministic_slice_from_age_evidence(self):
        bn = parse_bn(AGE_SLICE_DOC)
        rng = substream(0, "t")
        for _ in range(50):
            proto = sample_prototype(bn, {"ageDetail": "7"}, rng)
            assert proto["ageDetail"] == "7"
            assert proto["ageSlice"] == "0-14"

    def test_deterministic_chain_unique_prototype(self):
        doc = """
        variable r { x, y }
        variable s { x, y }
        cpt r { 1.0, 0.0 }
        cpt s | r { x: 0.0, 1.0
          y: 1.0, 0.0 }
        """
        bn = parse_bn(doc)
        rng = substream(1, "t")
        assert all(
            sample_prototype(bn, {}, rng) == {"r": "x", "s": "y"} for _ in range(20)
        )

    def test_contradictory_evidence_raises(self):
        bn = parse_bn("variable g { a, b }\ncpt g { 1.0, 0.0 }")
        with pytest.raises(ZeroEvidenceError):
            sample_prototype(bn, {"g": "b"}, substream(0, "t"))

    def test_reproducible_sequences(self):
        bn = parse_bn(FOUR_VAR_DOC)
        first = [sample_prototype(bn, {}, substream(9, "s")) for _ in range(1)]
        runs = []
        for _ in range(2):
            rng = substream(9, "s")
            runs.append([sample_prototype(bn, {}, rng) for _ in range(100)])
        assert runs[0] == runs[1]
        assert runs[0][0] == first[0]

    def _assert_matches_conditional_joint(self, bn, evidence, draws, seed):
        sampler = PrototypeSampler(bn)
        rng = substream(seed, "battery")
        counts = Counter()
        for _ in range(draws):
            proto = sampler.sample(evidence, rng)
            counts[tuple(proto[n] for n in bn.names)] += 1

        conditional = {}
        z = 0.0
        for assignment, weight in enum_joint_items(bn):
            if all(assignment[k] == v for k, v in evidence.items()):
                conditional[tuple(assignment[n] for n in bn.names)] = weight
                z += weight
        for key in conditional:
            conditional[key] /= z

        for key, p in conditional.items():
            se = math.sqrt(p * (1 - p) / draws)
            observed = counts[key] / draws
            assert abs(observed - p) <= max(3 * se, 1e-12), (key, observed, p)
        for key in counts:
            assert key in conditional, f"sampled an impossible assignment {key}"

    def test_distribution_with_leaf_evidence(self):
        bn = parse_bn(FOUR_VAR_DOC)
        self._assert_matches_conditional_joint(bn, {"d": "d1"}, 20_000, seed=2024)

    def test_distribution_with_empty_evidence(self):
        bn = parse_bn(FOUR_VAR_DOC)
        self._assert_matches_conditional_joint(bn, {}, 20_000, seed=55)

    def test_evidence_always_carried_through(self):
        bn = parse_bn(FOUR_VAR_DOC)
        rng = substream(3, "t")
        for _ in range(200):
            proto = sample_prototype(bn, {"b": "b2", "d": "d1"}, rng)
            assert proto["b"] == "b2" and proto["d"] == "d1"

    def test_one_uniform_per_unevidenced_variable(self):
        # two samplers fed the same stream stay aligned when evidence only
        # removes variables from the draw sequence
        bn = parse_bn(FOUR_VAR_DOC)
        rng_a = substream(4, "t")
        rng_b = substream(4, "t")
        for _ in range(50):
            sample_prototype(bn, {}, rng_a)
            sample_prototype(bn, {}, rng_b)
        assert rng_a.random() == rng_b.random()
