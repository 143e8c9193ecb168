"""Prototype sampling: draw full assignments from a network under evidence.

Variables are visited in topological order; each unevidenced variable is
drawn by inverse-CDF over its domain order from its exact posterior given
everything assigned so far, and the drawn value is then treated as further
evidence.  The resulting assignments are distributed as the exact conditional
joint given the initial evidence.

Randomness comes from named sub-streams derived from a master seed, so each
part of the generation pipeline replays identically regardless of what the
other parts consume.
"""
from __future__ import annotations

import hashlib

import numpy as np

from .bn import BayesianNetwork, Evidence
from .inference import Engine, ZeroEvidenceError, engine_for


def substream(master_seed: int, label: str) -> np.random.Generator:
    """Independent generator derived from the master seed and a stable label."""
    digest = hashlib.sha256(f"{master_seed}:{label}".encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:16], "big"))


def draw_index(probabilities, u: float) -> int:
    """Inverse-CDF pick over domain order from one uniform draw."""
    acc = 0.0
    last_positive = -1
    for i, p in enumerate(probabilities):
        if p > 0.0:
            last_positive = i
        acc += p
        if u < acc:
            return i
    if last_positive < 0:
        raise ValueError("no positive probability in distribution")
    return last_positive  # float undershoot: u landed past the accumulated sum


class PrototypeSampler:
    """Sampler bound to one network, reusing inference work across draws.

    When no evidence sits on a variable's descendants, its conditional given
    everything sampled so far reduces to its own CPT row, so the chain skips
    inference for that step.  The step plan depends only on which variables
    carry initial evidence and is cached per evidence key set.
    """

    def __init__(self, bn: BayesianNetwork, engine: Engine | None = None):
        self.bn = bn
        self.engine = engine if engine is not None else engine_for(bn)
        self._plans: dict[frozenset[str], list[tuple[str, bool]]] = {}

    def _plan(self, ev_names: frozenset[str]) -> list[tuple[str, bool]]:
        plan = self._plans.get(ev_names)
        if plan is None:
            plan = []
            for name in self.engine.order:
                if name in ev_names:
                    continue
                shortcut = not (self.engine.descendants[name] & ev_names)
                plan.append((name, shortcut))
            self._plans[ev_names] = plan
        return plan

    def sample(self, evidence: Evidence, rng: np.random.Generator) -> dict[str, str]:
        if evidence and self.engine.probability_of_evidence(evidence) <= 0.0:
            raise ZeroEvidenceError(f"evidence has probability 0: {dict(evidence)}")
        assignment = dict(evidence)
        for name, shortcut in self._plan(frozenset(evidence)):
            if shortcut:
                probs = self.engine.cpt_row(name, assignment)
            else:
                probs = self.engine.posterior(assignment, name)
            idx = draw_index(probs, rng.random())
            assignment[name] = self.engine.domains[name][idx]
        return assignment


def sample_prototype(
    bn: BayesianNetwork, evidence: Evidence, rng: np.random.Generator
) -> dict[str, str]:
    """One full assignment drawn from p(. | evidence).

    Evidenced variables keep their asserted values and consume no randomness;
    every other variable consumes exactly one uniform draw.
    """
    return PrototypeSampler(bn).sample(evidence, rng)
