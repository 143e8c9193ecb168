"""Generation plans: the single input file driving a full run.

Line-oriented text, ``#`` comments, paths relative to the plan file:

    population N=<int> seed=<int> attributes=<bnfile>
    linktype <name> <directed|undirected>
    rule homophily <linktype> bn=<file> [counts=<both|a1|a2>] [retries=<int>] [smallset=<int>]
    rule transitive <t3> from <t1> <t2> p=<prob> pattern=<role1>-<role2>
    interact <linktype> p=<prob>
    output <dir>                      # optional, --out overrides

Rule order is preserved and is semantically load-bearing: earlier rules win
occupied dyads.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .bn import BayesianNetwork, BnError, load_bn
from .inference import ZeroEvidenceError
from .matching import (
    HomophilyRule,
    MatchingError,
    derive_candidate_sets,
    load_matching_bn_file,
    validate_rule,
)
from .population import RC_PREFIX, LinkType
from .transitivity import TransitivityRule, parse_pattern


class PlanError(Exception):
    pass


class PlanSyntaxError(PlanError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class HomophilyPlanRule:
    link_type: str
    bn_path: Path
    counts: str | None = None
    retries: int | None = None
    small_set: int | None = None
    line: int = 0


@dataclass
class TransitivePlanRule:
    link_type: str
    t1: str
    t2: str
    probability: float
    pattern: str = "any-any"
    line: int = 0


@dataclass
class GenerationPlan:
    population_size: int
    seed: int
    attribute_bn_path: Path
    link_types: list[LinkType] = field(default_factory=list)
    rules: list[HomophilyPlanRule | TransitivePlanRule] = field(default_factory=list)
    interaction_weights: dict[str, float] = field(default_factory=dict)
    output_dir: Path | None = None
    base_dir: Path = Path(".")

    def declared_types(self) -> dict[str, LinkType]:
        return {lt.name: lt for lt in self.link_types}


def _options(tokens: list[str], lineno: int, allowed: set[str]) -> dict[str, str]:
    out = {}
    for token in tokens:
        if "=" not in token:
            raise PlanSyntaxError(f"expected key=value, got {token!r}", lineno)
        key, _, value = token.partition("=")
        if key not in allowed:
            raise PlanSyntaxError(f"unknown option {key!r}", lineno)
        if key in out:
            raise PlanSyntaxError(f"duplicate option {key!r}", lineno)
        out[key] = value
    return out


def _to_int(value: str, what: str, lineno: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise PlanSyntaxError(f"{what} must be an integer, got {value!r}", lineno) from None


def _to_float(value: str, what: str, lineno: int) -> float:
    try:
        return float(value)
    except ValueError:
        raise PlanSyntaxError(f"{what} must be a number, got {value!r}", lineno) from None


def parse_plan(text: str, base_dir) -> GenerationPlan:
    base = Path(base_dir)
    population = None
    link_types: list[LinkType] = []
    rules: list[HomophilyPlanRule | TransitivePlanRule] = []
    weights: dict[str, float] = {}
    output_dir: Path | None = None

    for i, raw in enumerate(text.splitlines()):
        lineno = i + 1
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        head = tokens[0]

        if head == "population":
            if population is not None:
                raise PlanSyntaxError("duplicate population line", lineno)
            opts = _options(tokens[1:], lineno, {"N", "seed", "attributes"})
            for required in ("N", "seed", "attributes"):
                if required not in opts:
                    raise PlanSyntaxError(f"population line misses {required}=", lineno)
            population = (
                _to_int(opts["N"], "N", lineno),
                _to_int(opts["seed"], "seed", lineno),
                base / opts["attributes"],
            )
            if population[0] < 0:
                raise PlanSyntaxError("N must be non-negative", lineno)

        elif head == "linktype":
            if len(tokens) != 3 or tokens[2] not in ("directed", "undirected"):
                raise PlanSyntaxError(
                    "expected 'linktype <name> <directed|undirected>'", lineno
                )
            link_types.append(LinkType(tokens[1], tokens[2] == "directed"))

        elif head == "rule":
            if len(tokens) < 3:
                raise PlanSyntaxError("incomplete rule line", lineno)
            kind = tokens[1]
            if kind == "homophily":
                opts = _options(tokens[3:], lineno, {"bn", "counts", "retries", "smallset"})
                if "bn" not in opts:
                    raise PlanSyntaxError("homophily rule misses bn=<file>", lineno)
                rules.append(HomophilyPlanRule(
                    link_type=tokens[2],
                    bn_path=base / opts["bn"],
                    counts=opts.get("counts"),
                    retries=_to_int(opts["retries"], "retries", lineno) if "retries" in opts else None,
                    small_set=_to_int(opts["smallset"], "smallset", lineno) if "smallset" in opts else None,
                    line=lineno,
                ))
            elif kind == "transitive":
                if len(tokens) < 6 or tokens[3] != "from":
                    raise PlanSyntaxError(
                        "expected 'rule transitive <t3> from <t1> <t2> p=<prob> pattern=<spec>'",
                        lineno,
                    )
                opts = _options(tokens[6:], lineno, {"p", "pattern"})
                if "p" not in opts:
                    raise PlanSyntaxError("transitive rule misses p=<prob>", lineno)
                rules.append(TransitivePlanRule(
                    link_type=tokens[2],
                    t1=tokens[4],
                    t2=tokens[5],
                    probability=_to_float(opts["p"], "p", lineno),
                    pattern=opts.get("pattern", "any-any"),
                    line=lineno,
                ))
            else:
                raise PlanSyntaxError(f"unknown rule kind {kind!r}", lineno)

        elif head == "interact":
            if len(tokens) != 3:
                raise PlanSyntaxError("expected 'interact <linktype> p=<prob>'", lineno)
            opts = _options(tokens[2:], lineno, {"p"})
            if "p" not in opts:
                raise PlanSyntaxError("interact line misses p=<prob>", lineno)
            if tokens[1] in weights:
                raise PlanSyntaxError(f"duplicate interact line for {tokens[1]!r}", lineno)
            weights[tokens[1]] = _to_float(opts["p"], "p", lineno)

        elif head == "output":
            if len(tokens) != 2:
                raise PlanSyntaxError("expected 'output <dir>'", lineno)
            output_dir = base / tokens[1]

        else:
            raise PlanSyntaxError(f"unknown directive {head!r}", lineno)

    if population is None:
        raise PlanSyntaxError("plan misses the population line", 1)
    return GenerationPlan(
        population_size=population[0],
        seed=population[1],
        attribute_bn_path=population[2],
        link_types=link_types,
        rules=rules,
        interaction_weights=weights,
        output_dir=output_dir,
        base_dir=base,
    )


def load_plan(path) -> GenerationPlan:
    path = Path(path)
    return parse_plan(path.read_text(encoding="utf-8"), path.parent)


@dataclass(frozen=True)
class PlanIssue:
    severity: str  # 'error' | 'warning'
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: {self.message}"


def validate_plan(plan: GenerationPlan) -> list[PlanIssue]:
    """Static consistency checks; a dry run without any generation."""
    issues: list[PlanIssue] = []

    def error(msg):
        issues.append(PlanIssue("error", msg))

    def warning(msg):
        issues.append(PlanIssue("warning", msg))

    names = [lt.name for lt in plan.link_types]
    for name in sorted({n for n in names if names.count(n) > 1}):
        error(f"link type {name!r} declared more than once")
    declared = set(names)

    attribute_bn: BayesianNetwork | None = None
    try:
        attribute_bn = load_bn(plan.attribute_bn_path)
    except FileNotFoundError:
        error(f"attribute network file not found: {plan.attribute_bn_path}")
    except BnError as exc:
        error(f"attribute network invalid: {exc}")

    if attribute_bn is not None:
        for variable in attribute_bn.variables:
            if variable.name.startswith(RC_PREFIX):
                target = variable.name[len(RC_PREFIX):]
                if target not in declared:
                    warning(
                        f"required-link-count variable {variable.name!r} names "
                        f"undeclared link type {target!r}"
                    )
                for label in variable.domain:
                    try:
                        int(label)
                    except ValueError:
                        error(
                            f"{variable.name!r} label {label!r} is not an integer"
                        )

    produced: set[str] = set()
    for index, rule in enumerate(plan.rules):
        where = f"rule {index + 1} ({rule.link_type})"
        if rule.link_type not in declared:
            error(f"{where}: link type not declared")
        if isinstance(rule, HomophilyPlanRule):
            if rule.counts is not None and rule.counts not in ("both", "a1", "a2"):
                error(f"{where}: counts must be both, a1 or a2")
            loaded = None
            try:
                defaults = {}
                if rule.counts:
                    defaults["counts"] = rule.counts
                loaded = load_matching_bn_file(rule.bn_path, defaults=defaults)
            except FileNotFoundError:
                error(f"{where}: matching network file not found: {rule.bn_path}")
            except (BnError, MatchingError) as exc:
                error(f"{where}: {exc}")
            if loaded is not None:
                if loaded.link_type != rule.link_type:
                    warning(
                        f"{where}: matching file header names {loaded.link_type!r}"
                    )
                if attribute_bn is not None:
                    for problem in validate_rule(loaded, attribute_bn):
                        error(f"{where}: {problem}")
                try:
                    derive_candidate_sets(loaded)
                except ZeroEvidenceError:
                    warning(f"{where}: link variable can never be yes (vacuous rule)")
            produced.add(rule.link_type)
        else:
            if not 0.0 <= rule.probability <= 1.0:
                error(f"{where}: p outside [0, 1]")
            try:
                parse_pattern(rule.pattern)
            except ValueError as exc:
                error(f"{where}: {exc}")
            for needed in (rule.t1, rule.t2):
                if needed not in declared:
                    error(f"{where}: source link type {needed!r} not declared")
                elif needed not in produced:
                    warning(
                        f"{where}: {needed!r} has no earlier rule creating it"
                    )
            produced.add(rule.link_type)

    for name in sorted(plan.interaction_weights):
        if name not in declared:
            error(f"interact line names undeclared link type {name!r}")
        if not 0.0 <= plan.interaction_weights[name] <= 1.0:
            error(f"interaction probability for {name!r} outside [0, 1]")
    if plan.interaction_weights:
        for name in sorted(declared - set(plan.interaction_weights)):
            warning(f"no interaction probability for link type {name!r}")

    return issues


def build_transitivity_rule(rule: TransitivePlanRule) -> TransitivityRule:
    role1, role2 = parse_pattern(rule.pattern)
    return TransitivityRule(
        t1=rule.t1,
        t2=rule.t2,
        t3=rule.link_type,
        probability=rule.probability,
        pivot_role_1=role1,
        pivot_role_2=role2,
    )


def build_homophily_rule(rule: HomophilyPlanRule) -> HomophilyRule:
    defaults: dict[str, object] = {}
    if rule.counts is not None:
        defaults["counts"] = rule.counts
    if rule.retries is not None:
        defaults["retries"] = rule.retries
    if rule.small_set is not None:
        defaults["small_set"] = rule.small_set
    loaded = load_matching_bn_file(rule.bn_path, defaults=defaults)
    if loaded.link_type != rule.link_type:
        loaded = HomophilyRule(
            link_type=rule.link_type,
            bn=loaded.bn,
            link_variable=loaded.link_variable,
            a1_prefix=loaded.a1_prefix,
            a2_prefix=loaded.a2_prefix,
            counts=loaded.counts,
            retries=loaded.retries,
            small_set=loaded.small_set,
        )
    return loaded
