"""Homophily rules: pair agents through a matching Bayesian network.

A matching network contains prefixed copies of both agents' attributes
(``a1_age``, ``a2_age``, ...), any internal condition variables, and one
boolean link variable whose posterior given both attribute sets is the
probability that the pair may be linked.  Setting the link variable to yes
and zero-pruning each copied attribute yields the candidate sets; pairing
then proceeds by prototype search against the store with an accept/reject
fallback over the conditional candidate set.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .bn import BayesianNetwork, parse_bn
from .inference import Engine, ZeroEvidenceError, engine_for
from .population import (
    Agent,
    CandidateQuery,
    PopulationStore,
    query_candidates,
)
from .sampling import PrototypeSampler

LINK_YES = "yes"
LINK_NO = "no"

DEFAULT_RETRIES = 20
DEFAULT_SMALL_SET = 50

COUNTS_CHOICES = ("both", "a1", "a2")


class MatchingError(Exception):
    pass


@dataclass(frozen=True)
class HomophilyRule:
    """One homophily generation rule for a single link type.

    counts names the endpoints whose required/created counters govern the
    rule ("both", "a1" or "a2").  retries bounds prototype draws per link
    slot; below small_set candidates the matcher goes straight to the
    fallback scan.
    """

    link_type: str
    bn: BayesianNetwork
    link_variable: str
    a1_prefix: str = "a1_"
    a2_prefix: str = "a2_"
    counts: str = "both"
    retries: int = DEFAULT_RETRIES
    small_set: int = DEFAULT_SMALL_SET

    def a1_map(self) -> dict[str, str]:
        """Matching-network variable -> attribute name, for agent 1 copies."""
        return {
            v.name: v.name[len(self.a1_prefix):]
            for v in self.bn.variables
            if v.name.startswith(self.a1_prefix) and v.name != self.link_variable
        }

    def a2_map(self) -> dict[str, str]:
        return {
            v.name: v.name[len(self.a2_prefix):]
            for v in self.bn.variables
            if v.name.startswith(self.a2_prefix) and v.name != self.link_variable
        }

    @property
    def counts_a1(self) -> bool:
        return self.counts in ("both", "a1")

    @property
    def counts_a2(self) -> bool:
        return self.counts in ("both", "a2")


def validate_rule(rule: HomophilyRule, attribute_bn: BayesianNetwork | None = None) -> list[str]:
    """Problems with the rule itself; empty list when well formed."""
    problems = []
    if rule.counts not in COUNTS_CHOICES:
        problems.append(f"counts must be one of {COUNTS_CHOICES}, got {rule.counts!r}")
    if rule.link_variable not in rule.bn:
        problems.append(f"link variable {rule.link_variable!r} not in matching network")
    else:
        domain = set(rule.bn.domain(rule.link_variable))
        if domain != {LINK_YES, LINK_NO}:
            problems.append(
                f"link variable {rule.link_variable!r} must have domain "
                f"{{yes, no}}, got {sorted(domain)}"
            )
    if not rule.a1_map():
        problems.append(f"no variables carry the a1 prefix {rule.a1_prefix!r}")
    if not rule.a2_map():
        problems.append(f"no variables carry the a2 prefix {rule.a2_prefix!r}")
    if attribute_bn is not None:
        for bn_var, attribute in {**rule.a1_map(), **rule.a2_map()}.items():
            if attribute not in attribute_bn:
                problems.append(
                    f"{bn_var!r} strips to {attribute!r}, which is not an "
                    "attribute variable"
                )
            elif set(rule.bn.domain(bn_var)) - set(attribute_bn.domain(attribute)):
                problems.append(
                    f"{bn_var!r} carries values outside the domain of {attribute!r}"
                )
    if rule.retries < 1:
        problems.append("retries must be at least 1")
    if rule.small_set < 0:
        problems.append("small_set must be non-negative")
    return problems


def load_matching_bn(text: str, *, defaults: Mapping[str, object] | None = None) -> HomophilyRule:
    """Parse a matching network file.

    The first non-comment line is the header:

        matching <linktype> link=<linkVariable> a1=<prefix> a2=<prefix> counts=<both|a1|a2>

    The rest of the file uses the plain network grammar.  ``defaults`` may
    carry retries/small_set/counts overrides from the generation plan.
    """
    lines = text.splitlines()
    header = None
    body_start = 0
    for i, raw in enumerate(lines):
        stripped = raw.split("#", 1)[0].strip()
        if stripped:
            header = stripped
            body_start = i + 1
            break
    if header is None or not header.startswith("matching "):
        raise MatchingError("matching network must start with a 'matching ...' header")
    tokens = header.split()
    if len(tokens) < 2:
        raise MatchingError("matching header misses the link type")
    link_type = tokens[1]
    options = {"link": None, "a1": "a1_", "a2": "a2_", "counts": "both"}
    for token in tokens[2:]:
        if "=" not in token:
            raise MatchingError(f"bad matching header token {token!r}")
        key, _, value = token.partition("=")
        if key not in options:
            raise MatchingError(f"unknown matching header option {key!r}")
        options[key] = value
    if not options["link"]:
        raise MatchingError("matching header misses link=<variable>")
    if options["counts"] not in COUNTS_CHOICES:
        raise MatchingError(f"counts must be one of {COUNTS_CHOICES}")

    defaults = dict(defaults or {})
    bn = parse_bn("\n".join(lines[body_start:]))
    rule = HomophilyRule(
        link_type=link_type,
        bn=bn,
        link_variable=options["link"],
        a1_prefix=options["a1"],
        a2_prefix=options["a2"],
        counts=str(defaults.get("counts", options["counts"])),
        retries=int(defaults.get("retries", DEFAULT_RETRIES)),
        small_set=int(defaults.get("small_set", DEFAULT_SMALL_SET)),
    )
    problems = validate_rule(rule)
    if problems:
        raise MatchingError("; ".join(problems))
    return rule


def load_matching_bn_file(path, *, defaults: Mapping[str, object] | None = None) -> HomophilyRule:
    with open(path, encoding="utf-8") as fh:
        return load_matching_bn(fh.read(), defaults=defaults)


@dataclass(frozen=True)
class CandidatePredicate:
    """Attribute-value-set constraints plus an optional remaining-demand type."""

    attribute_values: dict[str, frozenset[str]]
    demand_type: str | None = None

    def as_query(self, **kwargs) -> CandidateQuery:
        demand = (self.demand_type,) if self.demand_type else ()
        return CandidateQuery(self.attribute_values, demand_types=demand, **kwargs)


@dataclass
class RuleReport:
    """Tallies for one executed generation rule.

    demand_total is the remaining demand summed over candidate side 1 when
    the rule starts; unfulfilled is what is still open at the end, so
    fulfilled demand plus unfulfilled equals demand_total.
    """

    link_type: str
    kind: str
    demand_total: int = 0
    links_created: int = 0
    unfulfilled: int = 0
    prototype_links: int = 0
    fallback_links: int = 0
    fallback_rejections: int = 0
    orphan_agents: int = 0
    vacuous: bool = False


def _support(engine: Engine, evidence: Mapping[str, str], variable: str) -> frozenset[str]:
    vec = engine.posterior(evidence, variable)
    domain = engine.domains[variable]
    return frozenset(domain[i] for i in range(len(domain)) if vec[i] > 0.0)


def derive_candidate_sets(rule: HomophilyRule) -> tuple[CandidatePredicate, CandidatePredicate]:
    """Zero-pruned attribute predicates for both candidate sets.

    Raises ZeroEvidenceError when the link variable can never be yes, which
    makes the rule vacuous.
    """
    engine = engine_for(rule.bn)
    evidence = {rule.link_variable: LINK_YES}
    values1 = {
        attribute: _support(engine, evidence, bn_var)
        for bn_var, attribute in rule.a1_map().items()
    }
    values2 = {
        attribute: _support(engine, evidence, bn_var)
        for bn_var, attribute in rule.a2_map().items()
    }
    return (
        CandidatePredicate(values1, rule.link_type if rule.counts_a1 else None),
        CandidatePredicate(values2, rule.link_type if rule.counts_a2 else None),
    )


def _a1_evidence(rule: HomophilyRule, agent: Agent) -> dict[str, str]:
    evidence = {rule.link_variable: LINK_YES}
    for bn_var, attribute in rule.a1_map().items():
        evidence[bn_var] = agent.attributes[attribute]
    return evidence


def conditional_candidates(rule: HomophilyRule, a1: Agent) -> CandidatePredicate:
    """Predicate for candidates compatible with one specific agent.

    Raises ZeroEvidenceError when the agent's attributes rule out any peer.
    """
    engine = engine_for(rule.bn)
    evidence = _a1_evidence(rule, a1)
    values = {
        attribute: _support(engine, evidence, bn_var)
        for bn_var, attribute in rule.a2_map().items()
    }
    return CandidatePredicate(values, rule.link_type if rule.counts_a2 else None)


def compatibility(rule: HomophilyRule, a1: Agent, a2: Agent) -> float:
    """p(link = yes | both agents' attributes); 0 when the evidence itself
    is impossible, so it never raises."""
    engine = engine_for(rule.bn)
    evidence = {}
    try:
        for bn_var, attribute in rule.a1_map().items():
            value = a1.attributes[attribute]
            if value not in engine.value_index[bn_var]:
                return 0.0
            evidence[bn_var] = value
        for bn_var, attribute in rule.a2_map().items():
            value = a2.attributes[attribute]
            if value not in engine.value_index[bn_var]:
                return 0.0
            evidence[bn_var] = value
        vec = engine.posterior(evidence, rule.link_variable)
    except ZeroEvidenceError:
        return 0.0
    return float(vec[engine.value_index[rule.link_variable][LINK_YES]])


class _RuleRun:
    """Mutable state for one rule execution over one store."""

    def __init__(self, store: PopulationStore, rule: HomophilyRule, rng: np.random.Generator):
        self.store = store
        self.rule = rule
        self.rng = rng
        self.engine = engine_for(rule.bn)
        self.sampler = PrototypeSampler(rule.bn, self.engine)
        self.report = RuleReport(rule.link_type, "homophily")
        self.a1_map = rule.a1_map()
        self.a2_map = rule.a2_map()
        self.a1_attrs = tuple(sorted(self.a1_map.values()))
        self.a2_attrs = tuple(sorted(self.a2_map.values()))
        self._conditional_cache: dict[tuple, CandidatePredicate | None] = {}
        self._base_cache: dict[tuple, frozenset[int]] = {}
        self._compat_cache: dict[tuple, float] = {}

    def _a1_key(self, agent: Agent) -> tuple:
        return tuple(agent.attributes[a] for a in self.a1_attrs)

    def conditional(self, agent: Agent) -> CandidatePredicate | None:
        """Cached conditional predicate; None when no peer can exist."""
        key = self._a1_key(agent)
        if key not in self._conditional_cache:
            try:
                self._conditional_cache[key] = conditional_candidates(self.rule, agent)
            except ZeroEvidenceError:
                self._conditional_cache[key] = None
        return self._conditional_cache[key]

    def base_candidates(self, predicate: CandidatePredicate) -> frozenset[int]:
        """Agents matching the attribute constraints alone (static per run)."""
        key = tuple(sorted((a, tuple(sorted(v))) for a, v in predicate.attribute_values.items()))
        cached = self._base_cache.get(key)
        if cached is None:
            cached = frozenset(
                query_candidates(self.store, CandidateQuery(predicate.attribute_values))
            )
            self._base_cache[key] = cached
        return cached

    def pair_compatibility(self, a1: Agent, a2: Agent) -> float:
        key = (self._a1_key(a1), tuple(a2.attributes[a] for a in self.a2_attrs))
        value = self._compat_cache.get(key)
        if value is None:
            value = compatibility(self.rule, a1, a2)
            self._compat_cache[key] = value
        return value

    def live_pool(self, a1: Agent, base: frozenset[int]) -> list[int]:
        """Current conditional candidate set: demand still open, dyad free."""
        if self.rule.counts_a2:
            pool = set(base & self.store.open_demand(self.rule.link_type))
        else:
            pool = set(base)
        pool -= self.store.partners_of(a1.id)
        pool.discard(a1.id)
        return sorted(pool)

    def prototype_attempts(self, a1: Agent, evidence: dict[str, str]) -> Agent | None:
        """Draw prototypes and look them up in the store; None when the retry
        budget runs out."""
        demand = (self.rule.link_type,) if self.rule.counts_a2 else ()
        for _ in range(self.rule.retries):
            prototype = self.sampler.sample(evidence, self.rng)
            wanted = {
                attribute: frozenset((prototype[bn_var],))
                for bn_var, attribute in self.a2_map.items()
            }
            matches = query_candidates(
                self.store,
                CandidateQuery(
                    wanted,
                    demand_types=demand,
                    exclude_ids=frozenset((a1.id,)),
                    not_linked_with=a1.id,
                ),
            )
            if matches:
                ordered = sorted(matches)
                return self.store.agents[ordered[int(self.rng.integers(len(ordered)))]]
        return None

    def fallback(self, a1: Agent, pool: list[int]) -> Agent | None:
        """Uniform draw with compatibility-proportional acceptance; rejected
        candidates leave the pool, so the scan always terminates."""
        compat = {cand: self.pair_compatibility(a1, self.store.agents[cand]) for cand in pool}
        max_compat = max(compat.values(), default=0.0)
        if max_compat <= 0.0:
            return None
        remaining = list(pool)
        while remaining:
            pick = int(self.rng.integers(len(remaining)))
            candidate = remaining[pick]
            c = compat[candidate]
            if c > 0.0 and self.rng.random() < c / max_compat:
                return self.store.agents[candidate]
            self.report.fallback_rejections += 1
            remaining.pop(pick)
        return None

    def link(self, a1: Agent, a2: Agent, by_prototype: bool) -> None:
        self.store.record_link(
            a1.id,
            a2.id,
            self.rule.link_type,
            count_source=self.rule.counts_a1,
            count_target=self.rule.counts_a2,
            enforce_demand=True,
        )
        self.report.links_created += 1
        if by_prototype:
            self.report.prototype_links += 1
        else:
            self.report.fallback_links += 1


def run_homophily_rule(
    store: PopulationStore, rule: HomophilyRule, rng: np.random.Generator
) -> RuleReport:
    """Execute one homophily rule against the store.

    Shortfalls never raise; they surface in the report.  Every created link
    passes the dyad-uniqueness and demand checks of the store.
    """
    run = _RuleRun(store, rule, rng)
    report = run.report
    try:
        predicate1, predicate2 = derive_candidate_sets(rule)
    except ZeroEvidenceError:
        report.vacuous = True
        return report

    members = sorted(run.base_candidates(predicate1))
    if rule.counts_a1:
        members = [i for i in members if store.agents[i].remaining(rule.link_type) > 0]
        report.demand_total = sum(
            store.agents[i].remaining(rule.link_type) for i in members
        )
    else:
        report.demand_total = len(members)

    order = [members[int(k)] for k in rng.permutation(len(members))]
    uncounted_unfulfilled = 0

    for a1_id in order:
        a1 = store.agents[a1_id]
        got_link = False
        orphaned = False

        def slots_left() -> bool:
            if rule.counts_a1:
                return a1.remaining(rule.link_type) > 0
            return not got_link

        while slots_left() and not orphaned:
            predicate = run.conditional(a1)
            if predicate is None:
                orphaned = True
                break
            base = run.base_candidates(predicate)
            pool = run.live_pool(a1, base)
            if not pool:
                orphaned = True
                break

            a2 = None
            by_prototype = False
            if len(pool) >= rule.small_set:
                a2 = run.prototype_attempts(a1, _a1_evidence(rule, a1))
                by_prototype = a2 is not None
            if a2 is None:
                a2 = run.fallback(a1, pool)
            if a2 is None:
                orphaned = True
                break
            run.link(a1, a2, by_prototype)
            got_link = True

        if orphaned:
            report.orphan_agents += 1
            if not rule.counts_a1 and not got_link:
                uncounted_unfulfilled += 1

    if rule.counts_a1:
        report.unfulfilled = sum(
            store.agents[i].remaining(rule.link_type) for i in members
        )
    else:
        report.unfulfilled = uncounted_unfulfilled
    return report
