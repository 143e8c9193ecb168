"""Discrete Bayesian networks with finite domains and dense CPTs.

Networks are described in a line-oriented text format (UTF-8, ``#`` starts a
comment anywhere on a line):

    variable <name> { <v1>, <v2>, ... }
    cpt <child> { <p1>, <p2>, ... }                 # root: one unprefixed row
    cpt <child> | <parent1>, <parent2>, ... {
        <pv1>, <pv2>, ... : <p1>, <p2>, ...         # one row per parent combo
    }

Probabilities are decimal literals in the child's domain order.  Parent
combinations may appear in any order but must be complete.  Value labels are
opaque strings compared by exact match: "15-19" and "village2" are plain
labels, never numbers.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

# Rows whose probabilities sum to within this of 1 are accepted; anything
# further off is a validation failure.
ROW_SUM_TOLERANCE = 1e-9
# Below this the row is left untouched so that parse/serialize round-trips
# are stable; between the two thresholds the row is renormalized.
_ROW_SUM_EXACT = 1e-12

Evidence = Mapping[str, str]


class BnError(Exception):
    """Base class for Bayesian-network errors."""


class BnSyntaxError(BnError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class BnValidationError(BnError):
    def __init__(self, violations: list["Violation"]):
        super().__init__(
            "invalid network:\n" + "\n".join(f"  - {v}" for v in violations)
        )
        self.violations = violations


class BnCycleError(BnError):
    pass


@dataclass(frozen=True)
class Variable:
    """A named variable with an ordered, finite domain of value labels."""

    name: str
    domain: tuple[str, ...]

    def index_of(self, value: str) -> int:
        try:
            return self.domain.index(value)
        except ValueError:
            raise KeyError(f"{value!r} not in domain of {self.name}") from None


@dataclass(frozen=True)
class Cpt:
    """Conditional probability table: one row per full parent combination.

    Rows map a tuple of parent values (in ``parents`` order) to a probability
    vector over the child's domain order.  Root variables have ``parents=()``
    and a single row keyed by the empty tuple.
    """

    child: str
    parents: tuple[str, ...]
    rows: dict[tuple[str, ...], tuple[float, ...]]


@dataclass(eq=False)
class BayesianNetwork:
    """Immutable network: variables plus exactly one CPT per variable.

    Equality is identity; compare serialized forms when structural equality
    is needed.  Instances are safe for concurrent reads once constructed.
    """

    variables: tuple[Variable, ...]
    cpts: dict[str, Cpt]
    _by_name: dict[str, Variable] = field(init=False, repr=False)

    def __post_init__(self):
        self._by_name = {v.name: v for v in self.variables}

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def variable(self, name: str) -> Variable:
        try:
            return self._by_name[name]
        except KeyError:
            raise KeyError(f"unknown variable {name!r}") from None

    def domain(self, name: str) -> tuple[str, ...]:
        return self.variable(name).domain

    def parents(self, name: str) -> tuple[str, ...]:
        cpt = self.cpts.get(name)
        return cpt.parents if cpt is not None else ()

    def __contains__(self, name: str) -> bool:
        return name in self._by_name


@dataclass(frozen=True)
class Violation:
    """One broken invariant, locating the variable and row concerned."""

    variable: str
    location: str
    problem: str

    def __str__(self) -> str:
        if self.location:
            return f"{self.variable} [{self.location}]: {self.problem}"
        return f"{self.variable}: {self.problem}"


def _normalize_row(probs: list[float]) -> tuple[float, ...] | None:
    """Return the row normalized to sum 1, or None when beyond tolerance."""
    total = math.fsum(probs)
    if abs(total - 1.0) > ROW_SUM_TOLERANCE:
        return None
    if abs(total - 1.0) > _ROW_SUM_EXACT:
        return tuple(p / total for p in probs)
    return tuple(probs)


# ---------------------------------------------------------------------------
# Parsing


def _strip_comment(line: str) -> str:
    pos = line.find("#")
    if pos >= 0:
        line = line[:pos]
    return line.strip()


def _split_labels(text: str, lineno: int, what: str) -> list[str]:
    parts = [p.strip() for p in text.split(",")]
    if any(not p for p in parts):
        raise BnSyntaxError(f"empty {what} in list", lineno)
    return parts


def _parse_probs(text: str, lineno: int) -> list[float]:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        try:
            out.append(float(tok))
        except ValueError:
            raise BnSyntaxError(
                f"expected probability, got {tok!r}", lineno,
                column=text.find(tok) + 1,
            ) from None
    return out


def parse_bn(text: str) -> BayesianNetwork:
    """Parse and validate a network document.

    Raises BnSyntaxError on malformed input (with line/column),
    BnValidationError when the parsed network breaks an invariant.
    """
    variables: list[Variable] = []
    seen: dict[str, int] = {}
    raw_cpts: list[tuple[str, tuple[str, ...], list, int]] = []

    lines = text.splitlines()
    i = 0
    while i < len(lines):
        lineno = i + 1
        line = _strip_comment(lines[i])
        i += 1
        if not line:
            continue

        if line.startswith("variable "):
            body = line[len("variable "):].strip()
            if "{" not in body or not body.endswith("}"):
                raise BnSyntaxError("expected 'variable <name> { ... }'", lineno)
            name, _, rest = body.partition("{")
            name = name.strip()
            if not name or any(c in name for c in ",{}|:"):
                raise BnSyntaxError(f"bad variable name {name!r}", lineno)
            if name in seen:
                raise BnSyntaxError(f"duplicate variable {name!r}", lineno)
            labels = _split_labels(rest.rstrip("}").strip(), lineno, "value")
            seen[name] = lineno
            variables.append(Variable(name, tuple(labels)))

        elif line.startswith("cpt "):
            header = line[len("cpt "):]
            if "{" not in header:
                raise BnSyntaxError("expected '{' in cpt declaration", lineno)
            head, _, inline = header.partition("{")
            head = head.strip()
            if "|" in head:
                child, _, parent_part = head.partition("|")
                child = child.strip()
                parents = tuple(_split_labels(parent_part.strip(), lineno, "parent"))
            else:
                child = head
                parents = ()
            if not child:
                raise BnSyntaxError("missing child variable in cpt", lineno)

            rows: list[tuple[tuple[str, ...], list[float], int]] = []
            closed = False

            def add_row(row_text: str, row_line: int):
                if ":" in row_text:
                    combo_part, _, prob_part = row_text.partition(":")
                    combo = tuple(_split_labels(combo_part.strip(), row_line, "value"))
                else:
                    combo = ()
                    prob_part = row_text
                rows.append((combo, _parse_probs(prob_part.strip(), row_line), row_line))

            inline = inline.strip()
            if inline.endswith("}"):
                closed = True
                inline = inline[:-1].strip()
            if inline:
                add_row(inline, lineno)

            while not closed:
                if i >= len(lines):
                    raise BnSyntaxError(f"unterminated cpt for {child!r}", lineno)
                row_line = i + 1
                row = _strip_comment(lines[i])
                i += 1
                if not row:
                    continue
                if row == "}":
                    closed = True
                    break
                if row.endswith("}"):
                    closed = True
                    row = row[:-1].strip()
                if row:
                    add_row(row, row_line)

            raw_cpts.append((child, parents, rows, lineno))

        else:
            word = line.split()[0]
            raise BnSyntaxError(f"expected 'variable' or 'cpt', got {word!r}", lineno)

    by_name = {v.name: v for v in variables}

    cpts: dict[str, Cpt] = {}
    for child, parents, rows, lineno in raw_cpts:
        if child not in by_name:
            raise BnSyntaxError(f"cpt for undeclared variable {child!r}", lineno)
        if child in cpts:
            raise BnSyntaxError(f"duplicate cpt for {child!r}", lineno)
        for p in parents:
            if p not in by_name:
                raise BnSyntaxError(
                    f"cpt for {child!r} references undeclared parent {p!r}", lineno
                )
        table: dict[tuple[str, ...], tuple[float, ...]] = {}
        for combo, probs, row_line in rows:
            if len(combo) != len(parents):
                raise BnSyntaxError(
                    f"row for {child!r} gives {len(combo)} parent values, "
                    f"expected {len(parents)}", row_line
                )
            for value, parent in zip(combo, parents):
                if value not in by_name[parent].domain:
                    raise BnSyntaxError(
                        f"{value!r} not in domain of parent {parent!r}", row_line
                    )
            if combo in table:
                raise BnSyntaxError(
                    f"duplicate row {combo} for {child!r}", row_line
                )
            table[combo] = tuple(probs)
        cpts[child] = Cpt(child, parents, table)

    bn = BayesianNetwork(tuple(variables), cpts)
    violations = validate(bn)
    if violations:
        raise BnValidationError(violations)
    # Normalize rows after validation so serialized probabilities are clean.
    for name, cpt in list(bn.cpts.items()):
        fixed = {c: _normalize_row(list(p)) for c, p in cpt.rows.items()}
        bn.cpts[name] = Cpt(cpt.child, cpt.parents, fixed)
    return bn


def load_bn(path) -> BayesianNetwork:
    with open(path, encoding="utf-8") as fh:
        return parse_bn(fh.read())


# ---------------------------------------------------------------------------
# Validation


def validate(bn: BayesianNetwork) -> list[Violation]:
    """Check every invariant; an empty list means the network is valid.

    Violations are data, not failures: callers decide whether to raise.
    """
    out: list[Violation] = []
    names = [v.name for v in bn.variables]
    dupes = {n for n in names if names.count(n) > 1}
    for n in sorted(dupes):
        out.append(Violation(n, "", "declared more than once"))
    declared = set(names)

    for v in bn.variables:
        if not v.domain:
            out.append(Violation(v.name, "", "empty domain"))
        if len(set(v.domain)) != len(v.domain):
            out.append(Violation(v.name, "", "duplicate values in domain"))

    for v in bn.variables:
        if v.name not in bn.cpts:
            out.append(Violation(v.name, "", "no cpt declared"))
    for child in bn.cpts:
        if child not in declared:
            out.append(Violation(child, "", "cpt for undeclared variable"))

    for child, cpt in bn.cpts.items():
        if child not in declared:
            continue
        bad_parent = False
        for p in cpt.parents:
            if p not in declared:
                out.append(Violation(child, "", f"undeclared parent {p!r}"))
                bad_parent = True
        if bad_parent:
            continue
        domain = bn.variable(child).domain
        expected = set(itertools.product(*(bn.variable(p).domain for p in cpt.parents)))
        got = set(cpt.rows)
        for combo in sorted(expected - got):
            out.append(Violation(child, _combo_str(combo), "missing row"))
        for combo in sorted(got - expected):
            out.append(Violation(child, _combo_str(combo), "row for impossible parent values"))
        for combo, probs in sorted(cpt.rows.items()):
            loc = _combo_str(combo)
            if len(probs) != len(domain):
                out.append(Violation(
                    child, loc,
                    f"{len(probs)} probabilities for domain of size {len(domain)}",
                ))
                continue
            if any(p < 0.0 or p > 1.0 for p in probs):
                out.append(Violation(child, loc, "probability outside [0, 1]"))
                continue
            if _normalize_row(list(probs)) is None:
                out.append(Violation(
                    child, loc, f"row sums to {math.fsum(probs)!r}, expected 1",
                ))

    cycle = _find_cycle(bn)
    if cycle:
        out.append(Violation(cycle[0], "", "cycle through " + " -> ".join(cycle)))
    return out


def _combo_str(combo: tuple[str, ...]) -> str:
    return ", ".join(combo) if combo else "prior"


def _find_cycle(bn: BayesianNetwork) -> list[str] | None:
    """Return variables forming a parent cycle, or None if acyclic."""
    state: dict[str, int] = {}  # 0 visiting, 1 done
    stack: list[str] = []

    def visit(name: str) -> list[str] | None:
        state[name] = 0
        stack.append(name)
        for p in bn.parents(name):
            if p not in bn._by_name:
                continue
            if state.get(p) == 0:
                return stack[stack.index(p):] + [p]
            if p not in state:
                found = visit(p)
                if found:
                    return found
        stack.pop()
        state[name] = 1
        return None

    for v in bn.variables:
        if v.name not in state:
            found = visit(v.name)
            if found:
                return found
    return None


# ---------------------------------------------------------------------------
# Topological order


def topological_order(bn: BayesianNetwork) -> list[str]:
    """Variables ordered so parents precede children.

    Deterministic: among ready variables, declaration order wins.
    Raises BnCycleError when the parent graph has a cycle.
    """
    decl = {v.name: i for i, v in enumerate(bn.variables)}
    indeg = {name: 0 for name in decl}
    children: dict[str, list[str]] = {name: [] for name in decl}
    for name in decl:
        for p in bn.parents(name):
            if p in decl:
                indeg[name] += 1
                children[p].append(name)

    ready = sorted((n for n, d in indeg.items() if d == 0), key=decl.__getitem__)
    order: list[str] = []
    while ready:
        name = ready.pop(0)
        order.append(name)
        changed = False
        for c in children[name]:
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
                changed = True
        if changed:
            ready.sort(key=decl.__getitem__)
    if len(order) != len(decl):
        stuck = sorted(n for n, d in indeg.items() if d > 0)
        raise BnCycleError(f"cycle involving: {', '.join(stuck)}")
    return order


# ---------------------------------------------------------------------------
# Serialization


def _fmt(p: float) -> str:
    return repr(p)


def serialize_bn(bn: BayesianNetwork) -> str:
    """Canonical text form: declaration order, rows in cross-product order.

    parse_bn(serialize_bn(bn)) reproduces the network exactly.
    """
    parts: list[str] = []
    for v in bn.variables:
        parts.append(f"variable {v.name} {{ {', '.join(v.domain)} }}")
    for v in bn.variables:
        cpt = bn.cpts[v.name]
        if cpt.parents:
            parts.append(f"cpt {v.name} | {', '.join(cpt.parents)} {{")
        else:
            parts.append(f"cpt {v.name} {{")
        for combo in itertools.product(*(bn.variable(p).domain for p in cpt.parents)):
            probs = ", ".join(_fmt(p) for p in cpt.rows[combo])
            if combo:
                parts.append(f"  {', '.join(combo)}: {probs}")
            else:
                parts.append(f"  {probs}")
        parts.append("}")
    return "\n".join(parts) + "\n"


def descendants_map(bn: BayesianNetwork) -> dict[str, frozenset[str]]:
    """For each variable, the set of variables reachable through children."""
    children: dict[str, list[str]] = {v.name: [] for v in bn.variables}
    for v in bn.variables:
        for p in bn.parents(v.name):
            children[p].append(v.name)
    out: dict[str, frozenset[str]] = {}
    for name in reversed(topological_order(bn)):
        acc: set[str] = set()
        for c in children[name]:
            acc.add(c)
            acc |= out[c]
        out[name] = frozenset(acc)
    return out


def ancestors_map(bn: BayesianNetwork) -> dict[str, frozenset[str]]:
    out: dict[str, frozenset[str]] = {}
    for name in topological_order(bn):
        acc: set[str] = set()
        for p in bn.parents(name):
            acc.add(p)
            acc |= out[p]
        out[name] = frozenset(acc)
    return out


def check_evidence(bn: BayesianNetwork, evidence: Evidence) -> None:
    """Raise KeyError for unknown variables or out-of-domain values."""
    for name, value in evidence.items():
        var = bn.variable(name)
        if value not in var.domain:
            raise KeyError(f"{value!r} not in domain of {name}")


def iter_assignments(bn: BayesianNetwork) -> Iterable[dict[str, str]]:
    """Every full assignment, in cross-product order of declared domains."""
    names = bn.names
    for values in itertools.product(*(bn.domain(n) for n in names)):
        yield dict(zip(names, values))
