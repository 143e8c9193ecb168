"""Agent population and the dyad-unique multiplex link registry.

Agents carry an attribute assignment plus per-link-type required and created
link counts.  Required counts come from network variables named with the
``RC_`` prefix (``RC_spouses`` holds the number of spouses links an agent
needs).  The store indexes agents by (attribute, value) and enforces that any
unordered pair of agents carries at most one link across all types.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .bn import BayesianNetwork
from .sampling import PrototypeSampler

RC_PREFIX = "RC_"


class PopulationError(Exception):
    pass


class SelfLinkError(PopulationError):
    pass


class DyadOccupiedError(PopulationError):
    pass


class UnknownLinkTypeError(PopulationError):
    pass


class UnknownAttributeError(PopulationError, KeyError):
    pass


class DemandExceededError(PopulationError):
    pass


@dataclass(frozen=True)
class LinkType:
    name: str
    directed: bool


@dataclass(frozen=True)
class Link:
    source: int
    target: int
    type: str


@dataclass
class Agent:
    id: int
    attributes: dict[str, str]
    required_links: dict[str, int]
    created_links: dict[str, int] = field(default_factory=dict)

    def remaining(self, link_type: str) -> int:
        return self.required_links.get(link_type, 0) - self.created_links.get(link_type, 0)


@dataclass(frozen=True)
class CandidateQuery:
    """Conjunction of constraints for candidate retrieval.

    attribute_values: per attribute, the set of labels still admissible.
    demand_types: link types for which created < required must hold.
    exclude_ids: agents removed from the result outright.
    not_linked_with: drop agents already sharing a dyad (any type) with this id.
    """

    attribute_values: Mapping[str, frozenset[str]] = field(default_factory=dict)
    demand_types: tuple[str, ...] = ()
    exclude_ids: frozenset[int] = frozenset()
    not_linked_with: int | None = None


class PopulationStore:
    """Indexed agent collection plus the multiplex link registry.

    Reads may run concurrently; mutations go through a single writer, which
    is what the sequential generation pipeline provides.
    """

    def __init__(self, link_types: Iterable[LinkType] = ()):
        self.agents: list[Agent] = []
        self.link_types: dict[str, LinkType] = {}
        self.attribute_order: tuple[str, ...] = ()
        self.rc_order: tuple[str, ...] = ()
        self._known_attributes: set[str] = set()
        self._index: dict[tuple[str, str], set[int]] = {}
        self._dyads: set[tuple[int, int]] = set()
        self._links: dict[str, list[Link]] = {}
        self._out: dict[str, dict[int, set[int]]] = {}
        self._in: dict[str, dict[int, set[int]]] = {}
        self._partners: dict[int, set[int]] = {}
        self._open_demand: dict[str, set[int]] = {}
        for lt in link_types:
            self.declare_link_type(lt)

    def __len__(self) -> int:
        return len(self.agents)

    def declare_link_type(self, link_type: LinkType) -> None:
        if link_type.name in self.link_types:
            raise PopulationError(f"link type {link_type.name!r} declared twice")
        self.link_types[link_type.name] = link_type
        self._links[link_type.name] = []
        self._out[link_type.name] = {}
        self._in[link_type.name] = {}

    def declare_attributes(self, names: Iterable[str]) -> None:
        """Make attributes queryable even before any agent carries them."""
        self._known_attributes.update(names)

    def add_agent(self, attributes: Mapping[str, str], required_links: Mapping[str, int]) -> Agent:
        agent = Agent(len(self.agents), dict(attributes), dict(required_links))
        self.agents.append(agent)
        for name, value in agent.attributes.items():
            self._known_attributes.add(name)
            self._index.setdefault((name, value), set()).add(agent.id)
        for link_type, count in agent.required_links.items():
            if count < 0:
                raise PopulationError(
                    f"negative required link count for {link_type!r} on agent {agent.id}"
                )
            if count > 0:
                self._open_demand.setdefault(link_type, set()).add(agent.id)
        return agent

    def agent(self, agent_id: int) -> Agent:
        return self.agents[agent_id]

    def links(self, link_type: str | None = None) -> list[Link]:
        if link_type is None:
            return [link for links in self._links.values() for link in links]
        if link_type not in self.link_types:
            raise UnknownLinkTypeError(link_type)
        return list(self._links[link_type])

    def dyad_used(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self._dyads

    def partners_of(self, agent_id: int) -> frozenset[int]:
        """Agents sharing a dyad with this one, across all link types."""
        return frozenset(self._partners.get(agent_id, ()))

    def neighbors(self, agent_id: int, link_type: str, role: str = "any") -> set[int]:
        """Counterparts of this agent's links of one type.

        ``role`` is the role this agent plays in the link: "source" keeps
        links it emits, "target" links it receives, "any" both.  Undirected
        types ignore the role.
        """
        if link_type not in self.link_types:
            raise UnknownLinkTypeError(link_type)
        out = self._out[link_type].get(agent_id, set())
        inc = self._in[link_type].get(agent_id, set())
        if not self.link_types[link_type].directed or role == "any":
            return set(out) | set(inc)
        if role == "source":
            return set(out)
        if role == "target":
            return set(inc)
        raise ValueError(f"bad role {role!r}")

    def open_demand(self, link_type: str) -> set[int]:
        """Ids with created < required for this type (live view, do not mutate)."""
        return self._open_demand.get(link_type, set())

    def record_link(
        self,
        source: int,
        target: int,
        link_type: str,
        *,
        count_source: bool = True,
        count_target: bool = True,
        enforce_demand: bool = False,
    ) -> Link:
        """Insert a link if the dyad is still free.

        Counted endpoints have their created counter for the type bumped;
        with enforce_demand the insert refuses to push created past required
        (matching rules rely on this as a hard stop).
        """
        if source == target:
            raise SelfLinkError(f"agent {source} cannot link to itself")
        if link_type not in self.link_types:
            raise UnknownLinkTypeError(link_type)
        key = (min(source, target), max(source, target))
        if key in self._dyads:
            raise DyadOccupiedError(f"agents {key[0]} and {key[1]} already linked")

        # Count flags are bound to the caller's endpoint roles, which the
        # canonical storage order below must not disturb.
        counted_endpoints = ((count_source, source), (count_target, target))
        if enforce_demand:
            for counted, agent_id in counted_endpoints:
                if counted and self.agents[agent_id].remaining(link_type) <= 0:
                    raise DemandExceededError(
                        f"agent {agent_id} has no remaining {link_type!r} demand"
                    )

        if not self.link_types[link_type].directed and source > target:
            source, target = target, source
        link = Link(source, target, link_type)
        self._dyads.add(key)
        self._links[link_type].append(link)
        self._out[link_type].setdefault(source, set()).add(target)
        self._in[link_type].setdefault(target, set()).add(source)
        self._partners.setdefault(source, set()).add(target)
        self._partners.setdefault(target, set()).add(source)
        for counted, agent_id in counted_endpoints:
            if counted:
                agent = self.agents[agent_id]
                agent.created_links[link_type] = agent.created_links.get(link_type, 0) + 1
                if agent.remaining(link_type) <= 0:
                    self._open_demand.get(link_type, set()).discard(agent_id)
        return link

    def ids_with(self, attribute: str, value: str) -> set[int]:
        if attribute not in self._known_attributes:
            raise UnknownAttributeError(attribute)
        return self._index.get((attribute, value), set())


_EMPTY: frozenset[int] = frozenset()


def query_candidates(store: PopulationStore, query: CandidateQuery) -> set[int]:
    """Exactly the agents satisfying every constraint of the query.

    Runs entirely on the store's indexes: attribute constraints intersect
    (attribute, value) sets, demand constraints intersect the open-demand
    sets, exclusions subtract.  The matcher calls this once per prototype
    draw, so staying off per-agent Python loops matters.
    """
    constraint_sets = []
    for attribute, values in query.attribute_values.items():
        if attribute not in store._known_attributes:
            raise UnknownAttributeError(attribute)
        values = tuple(values)
        if len(values) == 1:
            constraint_sets.append(store._index.get((attribute, values[0]), _EMPTY))
        else:
            union: set[int] = set()
            for v in values:
                union |= store._index.get((attribute, v), _EMPTY)
            constraint_sets.append(union)

    if constraint_sets:
        constraint_sets.sort(key=len)
        base = set(constraint_sets[0])
        for s in constraint_sets[1:]:
            base &= s
    else:
        base = set(range(len(store.agents)))

    for link_type in query.demand_types:
        base &= store._open_demand.get(link_type, _EMPTY)
    if query.exclude_ids:
        base -= query.exclude_ids
    if query.not_linked_with is not None:
        base -= store._partners.get(query.not_linked_with, _EMPTY)
    return base


def generate_population(
    attribute_bn: BayesianNetwork,
    size: int,
    rng: np.random.Generator,
    link_types: Iterable[LinkType] = (),
) -> PopulationStore:
    """Sample ``size`` agents from the attribute network.

    Plain network variables become agent attributes; RC_-prefixed variables
    become per-type required link counts (their sampled labels must parse as
    integers).  Ids are assigned densely in creation order.
    """
    store = PopulationStore(link_types)
    attr_names = [v.name for v in attribute_bn.variables if not v.name.startswith(RC_PREFIX)]
    rc_names = [v.name for v in attribute_bn.variables if v.name.startswith(RC_PREFIX)]
    for name in rc_names:
        for label in attribute_bn.domain(name):
            try:
                int(label)
            except ValueError:
                raise PopulationError(
                    f"link-count variable {name!r} has non-integer label {label!r}"
                ) from None
    store.attribute_order = tuple(attr_names)
    store.rc_order = tuple(rc_names)
    store.declare_attributes(attr_names)
    sampler = PrototypeSampler(attribute_bn)
    for _ in range(size):
        prototype = sampler.sample({}, rng)
        attributes = {name: prototype[name] for name in attr_names}
        required = {name[len(RC_PREFIX):]: int(prototype[name]) for name in rc_names}
        store.add_agent(attributes, required)
    return store


@dataclass
class LearnedMarginals:
    """CPTs re-estimated from the generated agents, structure unchanged.

    Rows whose parent combination never occurred keep the theoretical
    probabilities and are listed in ``unobserved``.
    """

    bn: BayesianNetwork
    unobserved: list[tuple[str, tuple[str, ...]]]


def learn_marginals(store: PopulationStore, attribute_bn: BayesianNetwork) -> LearnedMarginals:
    """Maximum-likelihood re-estimation of every CPT row from agent counts."""
    from .bn import Cpt

    if not store.agents:
        raise PopulationError("cannot learn marginals from an empty population")

    label_for_count: dict[str, dict[int, str]] = {}
    for name in store.rc_order:
        label_for_count[name] = {int(l): l for l in attribute_bn.domain(name)}

    assignments: list[dict[str, str]] = []
    for agent in store.agents:
        full = dict(agent.attributes)
        for name in store.rc_order:
            link_type = name[len(RC_PREFIX):]
            full[name] = label_for_count[name][agent.required_links[link_type]]
        assignments.append(full)

    learned_cpts: dict[str, Cpt] = {}
    unobserved: list[tuple[str, tuple[str, ...]]] = []
    for variable in attribute_bn.variables:
        cpt = attribute_bn.cpts[variable.name]
        value_pos = {v: i for i, v in enumerate(variable.domain)}
        counts: dict[tuple[str, ...], list[int]] = {
            combo: [0] * len(variable.domain) for combo in cpt.rows
        }
        for full in assignments:
            combo = tuple(full[p] for p in cpt.parents)
            counts[combo][value_pos[full[variable.name]]] += 1
        rows: dict[tuple[str, ...], tuple[float, ...]] = {}
        for combo, tally in counts.items():
            total = sum(tally)
            if total == 0:
                rows[combo] = cpt.rows[combo]
                unobserved.append((variable.name, combo))
            else:
                rows[combo] = tuple(c / total for c in tally)
        learned_cpts[variable.name] = Cpt(variable.name, cpt.parents, rows)
    learned = BayesianNetwork(attribute_bn.variables, learned_cpts)
    return LearnedMarginals(learned, sorted(unobserved))


def agents_csv(store: PopulationStore) -> str:
    """Agent table: id, attribute columns, then RC_ columns, one row per agent."""
    attr_cols = store.attribute_order or tuple(
        sorted({name for a in store.agents for name in a.attributes})
    )
    rc_cols = store.rc_order or tuple(
        sorted({RC_PREFIX + t for a in store.agents for t in a.required_links})
    )
    lines = [",".join(("id",) + attr_cols + rc_cols)]
    for agent in store.agents:
        row = [str(agent.id)]
        row += [agent.attributes.get(c, "") for c in attr_cols]
        row += [str(agent.required_links.get(c[len(RC_PREFIX):], 0)) for c in rc_cols]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
