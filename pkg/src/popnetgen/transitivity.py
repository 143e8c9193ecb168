"""Triad closure: create links of one type across two existing links.

A rule closes open two-link paths a1 - a2 - a3 into a direct a1 - a3 link
with a fixed probability.  The pivot specification says which endpoint of
each existing link the shared agent a2 occupies, which is what makes rules
like "husband of the mother becomes the father" or "children of the same
mother become siblings" expressible over directed links.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matching import RuleReport
from .population import PopulationStore, UnknownLinkTypeError

PIVOT_ROLES = ("source", "target", "any")


@dataclass(frozen=True)
class TransitivityRule:
    """Close a1 -(t1)- a2 -(t2)- a3 into a1 -(t3)- a3 with probability p.

    pivot_role_1/2 give a2's role in the existing t1 and t2 links; roles are
    ignored for undirected link types.
    """

    t1: str
    t2: str
    t3: str
    probability: float
    pivot_role_1: str = "any"
    pivot_role_2: str = "any"

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"probability {self.probability} outside [0, 1]")
        for role in (self.pivot_role_1, self.pivot_role_2):
            if role not in PIVOT_ROLES:
                raise ValueError(f"pivot role must be one of {PIVOT_ROLES}, got {role!r}")


def parse_pattern(spec: str) -> tuple[str, str]:
    """Parse the plan-file pattern form '<role1>-<role2>'."""
    parts = spec.split("-")
    if len(parts) != 2 or any(p not in PIVOT_ROLES for p in parts):
        raise ValueError(
            f"pattern must be '<role>-<role>' with roles in {PIVOT_ROLES}, got {spec!r}"
        )
    return parts[0], parts[1]


def enumerate_open_triads(store: PopulationStore, rule: TransitivityRule) -> list[tuple[int, int]]:
    """All closable (a1, a3) dyads, in ascending id order.

    A dyad qualifies when some pivot a2 is linked to a1 by t1 and to a3 by
    t2 under the rule's roles, a1 != a3, and no link of any type occupies
    the (a1, a3) pair.  Each dyad appears once even with several pivots; if
    both orientations qualify the ascending one is kept.
    """
    for t in (rule.t1, rule.t2, rule.t3):
        if t not in store.link_types:
            raise UnknownLinkTypeError(t)

    oriented: set[tuple[int, int]] = set()
    pivots = set()
    for link in store.links(rule.t1):
        pivots.add(link.source)
        pivots.add(link.target)
    for a2 in sorted(pivots):
        side1 = store.neighbors(a2, rule.t1, rule.pivot_role_1)
        if not side1:
            continue
        side2 = store.neighbors(a2, rule.t2, rule.pivot_role_2)
        for a1 in side1:
            for a3 in side2:
                if a1 != a3 and not store.dyad_used(a1, a3):
                    oriented.add((a1, a3))
    out = []
    for lo, hi in {(min(a, b), max(a, b)) for a, b in oriented}:
        out.append((lo, hi) if (lo, hi) in oriented else (hi, lo))
    return sorted(out)


def run_transitivity_rule(
    store: PopulationStore, rule: TransitivityRule, rng: np.random.Generator
) -> RuleReport:
    """One Bernoulli trial per closable dyad, regardless of how many pivots
    witness it; links pass the store's dyad checks."""
    report = RuleReport(rule.t3, "transitive")
    dyads = enumerate_open_triads(store, rule)
    report.demand_total = len(dyads)
    for a1, a3 in dyads:
        if rng.random() < rule.probability:
            store.record_link(
                a1, a3, rule.t3, count_source=True, count_target=True
            )
            report.links_created += 1
    return report
