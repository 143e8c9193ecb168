"""Exactness of posterior, evidence probability, and joint probability."""
import numpy as np
import pytest

from popnetgen.bn import iter_assignments, parse_bn
from popnetgen.inference import (
    IncompleteAssignmentError,
    UnknownVariableError,
    ZeroEvidenceError,
    joint_probability,
    posterior,
    probability_of_evidence,
)

from helpers import (
    enum_posterior,
    enum_probability,
    make_random_bn,
    random_evidence,
    tensor_posterior,
    tensor_probability,
)

from test_bn import CHAIN_DOC, MARITAL_DOC

TOL = 1e-9


@pytest.fixture(scope="module")
def marital_bn():
    return parse_bn(MARITAL_DOC)


class TestPosterior:
    def test_published_marital_table_value(self, marital_bn):
        p = posterior(marital_bn, {"gender": "male", "ageSlices": "15-19"}, "maritalStatus")
        assert p.probabilities[1] == pytest.approx(0.019, abs=1e-12)
        assert p.probabilities[0] == pytest.approx(0.981, abs=1e-12)

    def test_root_prior_unchanged_under_empty_evidence(self, marital_bn):
        p = posterior(marital_bn, {}, "gender")
        assert p.probabilities == (0.5, 0.5)

    def test_matches_enumeration_on_random_networks(self):
        rng = np.random.default_rng(101)
        for _ in range(30):
            bn = make_random_bn(rng, max_vars=6, max_domain=3)
            ev = random_evidence(rng, bn)
            for query in bn.names:
                if query in ev:
                    continue
                try:
                    expected = enum_posterior(bn, ev, query)
                except ZeroDivisionError:
                    with pytest.raises(ZeroEvidenceError):
                        posterior(bn, ev, query)
                    break
                got = posterior(bn, ev, query).probabilities
                assert got == pytest.approx(expected, abs=TOL)

    def test_matches_enumeration_at_twelve_variables(self):
        rng = np.random.default_rng(707)
        trials = 0
        while trials < 6:
            bn = make_random_bn(rng, n_vars=12, max_domain=4)
            joint_size = 1
            for v in bn.variables:
                joint_size *= len(v.domain)
            if joint_size > 4_000_000:  # keep the tensor oracle in memory
                continue
            trials += 1
            ev = random_evidence(rng, bn, max_items=3)
            p_ev = probability_of_evidence(bn, ev)
            assert p_ev == pytest.approx(tensor_probability(bn, ev), abs=TOL)
            if p_ev == 0.0:
                continue
            for query in bn.names:
                if query in ev:
                    continue
                got = posterior(bn, ev, query).probabilities
                expected = list(tensor_posterior(bn, ev, query))
                assert got == pytest.approx(expected, abs=TOL)

    def test_unknown_variable(self, marital_bn):
        with pytest.raises(UnknownVariableError):
            posterior(marital_bn, {}, "ghost")
        with pytest.raises(UnknownVariableError):
            posterior(marital_bn, {"ghost": "x"}, "gender")

    def test_zero_evidence_raises(self):
        bn = parse_bn("variable g { a, b }\ncpt g { 1.0, 0.0 }")
        with pytest.raises(ZeroEvidenceError):
            posterior(bn, {"g": "b"}, "g")

    def test_sums_to_one(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            bn = make_random_bn(rng, max_vars=7)
            ev = random_evidence(rng, bn)
            try:
                for query in bn.names:
                    total = sum(posterior(bn, ev, query).probabilities)
                    assert total == pytest.approx(1.0, abs=TOL)
            except ZeroEvidenceError:
                continue

    def test_chain_rule(self):
        # p(ev + V=x) = p(ev) * p(V=x | ev)
        rng = np.random.default_rng(23)
        for _ in range(15):
            bn = make_random_bn(rng, max_vars=6)
            ev = random_evidence(rng, bn, max_items=2)
            others = [n for n in bn.names if n not in ev]
            if not others:
                continue
            query = others[int(rng.integers(len(others)))]
            p_ev = probability_of_evidence(bn, ev)
            if p_ev == 0.0:
                continue
            vec = posterior(bn, ev, query).probabilities
            for i, value in enumerate(bn.domain(query)):
                joint = probability_of_evidence(bn, {**ev, query: value})
                assert joint == pytest.approx(p_ev * vec[i], abs=TOL)


class TestProbabilityOfEvidence:
    def test_empty_evidence(self, marital_bn):
        assert probability_of_evidence(marital_bn, {}) == 1.0

    def test_zero_prior_value(self):
        bn = parse_bn("variable g { a, b }\ncpt g { 1.0, 0.0 }")
        assert probability_of_evidence(bn, {"g": "b"}) == 0.0

    def test_matches_enumeration(self):
        rng = np.random.default_rng(303)
        for _ in range(30):
            bn = make_random_bn(rng, max_vars=6, max_domain=3)
            ev = random_evidence(rng, bn)
            assert probability_of_evidence(bn, ev) == pytest.approx(
                enum_probability(bn, ev), abs=TOL
            )


class TestJointProbability:
    def test_deterministic_chain(self):
        doc = """
        variable a { x }
        variable b { x }
        cpt a { 1.0 }
        cpt b | a { x: 1.0 }
        """
        bn = parse_bn(doc)
        assert joint_probability(bn, {"a": "x", "b": "x"}) == 1.0

    def test_zero_entry_gives_zero(self):
        bn = parse_bn(CHAIN_DOC)
        assert joint_probability(bn, {"a": "x", "b": "y", "c": "x"}) == 0.0

    def test_sums_to_one_over_all_assignments(self):
        rng = np.random.default_rng(77)
        for _ in range(10):
            bn = make_random_bn(rng, max_vars=5)
            total = sum(joint_probability(bn, a) for a in iter_assignments(bn))
            assert total == pytest.approx(1.0, abs=TOL)

    def test_incomplete_assignment(self):
        bn = parse_bn(CHAIN_DOC)
        with pytest.raises(IncompleteAssignmentError):
            joint_probability(bn, {"a": "x"})


class TestTensorOracleAgreesWithEnumeration:
    """The vectorized oracle used by the acceptance battery must itself match
    plain per-assignment enumeration."""

    def test_cross_check(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            bn = make_random_bn(rng, max_vars=5, max_domain=3)
            ev = random_evidence(rng, bn)
            assert tensor_probability(bn, ev) == pytest.approx(
                enum_probability(bn, ev), abs=TOL
            )
            if enum_probability(bn, ev) == 0.0:
                continue
            for query in bn.names:
                if query in ev:
                    continue
                assert list(tensor_posterior(bn, ev, query)) == pytest.approx(
                    enum_posterior(bn, ev, query), abs=TOL
                )
