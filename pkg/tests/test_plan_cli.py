"""Plan parsing, validation warnings, and the command-line pipeline."""
from pathlib import Path

import pytest

from popnetgen.cli import EXIT_INVALID, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main, run
from popnetgen.plan import (
    HomophilyPlanRule,
    PlanSyntaxError,
    TransitivePlanRule,
    load_plan,
    parse_plan,
    validate_plan,
)

REPO = Path(__file__).resolve().parent.parent
KENYA_PLAN = REPO / "plans" / "kenya" / "kenya.plan"

ATTR_DOC = """
variable role { seeker, target }
variable RC_pair { 0, 1 }
cpt role { 0.5, 0.5 }
cpt RC_pair | role {
  seeker: 0.0, 1.0
  target: 0.0, 1.0
}
"""

MATCH_DOC = """
matching pair link=link a1=a1_ a2=a2_ counts=both
variable a1_role { seeker, target }
variable a2_role { seeker, target }
variable link { yes, no }
cpt a1_role { 0.5, 0.5 }
cpt a2_role { 0.5, 0.5 }
cpt link | a1_role, a2_role {
  seeker, seeker: 0.0, 1.0
  seeker, target: 1.0, 0.0
  target, seeker: 1.0, 0.0
  target, target: 0.0, 1.0
}
"""

MINIMAL_PLAN = """
# minimal always-compatible pairing plan
population N=10 seed=1 attributes=attributes.bn
linktype pair undirected
rule homophily pair bn=pair.bn counts=both
interact pair p=1.0
"""


@pytest.fixture()
def plan_dir(tmp_path):
    (tmp_path / "attributes.bn").write_text(ATTR_DOC)
    (tmp_path / "pair.bn").write_text(MATCH_DOC)
    (tmp_path / "plan.txt").write_text(MINIMAL_PLAN)
    return tmp_path


class TestParsePlan:
    def test_minimal_plan(self, plan_dir):
        plan = load_plan(plan_dir / "plan.txt")
        assert plan.population_size == 10
        assert plan.seed == 1
        assert plan.attribute_bn_path == plan_dir / "attributes.bn"
        assert [lt.name for lt in plan.link_types] == ["pair"]
        assert isinstance(plan.rules[0], HomophilyPlanRule)
        assert plan.interaction_weights == {"pair": 1.0}

    def test_kenya_plan_parses(self):
        plan = load_plan(KENYA_PLAN)
        assert plan.population_size == 10_000
        assert len(plan.rules) == 6
        kinds = [type(r).__name__ for r in plan.rules]
        assert kinds == [
            "HomophilyPlanRule", "HomophilyPlanRule",
            "TransitivePlanRule", "TransitivePlanRule",
            "HomophilyPlanRule", "HomophilyPlanRule",
        ]
        transitive = plan.rules[2]
        assert isinstance(transitive, TransitivePlanRule)
        assert (transitive.t1, transitive.t2) == ("spouses", "motherOf")
        assert transitive.probability == 1.0

    def test_missing_population_line(self):
        with pytest.raises(PlanSyntaxError):
            parse_plan("linktype a undirected\n", ".")

    def test_bad_directive(self):
        with pytest.raises(PlanSyntaxError) as err:
            parse_plan("population N=1 seed=0 attributes=x.bn\nbogus line\n", ".")
        assert err.value.line == 2

    def test_rule_order_preserved(self):
        text = (
            "population N=5 seed=0 attributes=a.bn\n"
            "linktype x undirected\nlinktype y undirected\n"
            "rule homophily y bn=y.bn\n"
            "rule transitive x from y y p=0.5 pattern=any-any\n"
            "rule homophily x bn=x.bn\n"
        )
        plan = parse_plan(text, ".")
        assert [r.link_type for r in plan.rules] == ["y", "x", "x"]


class TestValidatePlan:
    def test_consistent_plan_empty_report(self, plan_dir):
        assert validate_plan(load_plan(plan_dir / "plan.txt")) == []

    def test_kenya_plan_empty_report(self):
        assert validate_plan(load_plan(KENYA_PLAN)) == []

    def test_undeclared_rule_type(self, plan_dir):
        text = MINIMAL_PLAN.replace("rule homophily pair", "rule homophily ghost")
        plan = parse_plan(text, plan_dir)
        issues = validate_plan(plan)
        assert any(i.severity == "error" and "ghost" in i.message for i in issues)

    def test_transitive_before_producer_warns(self, plan_dir):
        text = (
            "population N=10 seed=1 attributes=attributes.bn\n"
            "linktype pair undirected\nlinktype tri undirected\n"
            "rule transitive tri from pair pair p=1.0 pattern=any-any\n"
            "rule homophily pair bn=pair.bn\n"
        )
        plan = parse_plan(text, plan_dir)
        issues = validate_plan(plan)
        assert any(
            i.severity == "warning" and "no earlier rule" in i.message for i in issues
        )

    def test_vacuous_matching_bn_warns(self, plan_dir):
        vacuous = MATCH_DOC.replace(
            "seeker, target: 1.0, 0.0", "seeker, target: 0.0, 1.0"
        ).replace("target, seeker: 1.0, 0.0", "target, seeker: 0.0, 1.0")
        (plan_dir / "pair.bn").write_text(vacuous)
        issues = validate_plan(load_plan(plan_dir / "plan.txt"))
        assert any("vacuous" in i.message for i in issues)

    def test_missing_bn_file(self, plan_dir):
        (plan_dir / "pair.bn").unlink()
        issues = validate_plan(load_plan(plan_dir / "plan.txt"))
        assert any(i.severity == "error" for i in issues)

    def test_rc_for_undeclared_type_warns(self, plan_dir):
        doc = ATTR_DOC.replace("RC_pair", "RC_ghost")
        (plan_dir / "attributes.bn").write_text(doc)
        issues = validate_plan(load_plan(plan_dir / "plan.txt"))
        assert any("RC_ghost" in i.message for i in issues)

    def test_interaction_weight_out_of_range(self, plan_dir):
        text = MINIMAL_PLAN.replace("interact pair p=1.0", "interact pair p=1.5")
        (plan_dir / "plan.txt").write_text(text)
        issues = validate_plan(load_plan(plan_dir / "plan.txt"))
        assert any("outside" in i.message for i in issues)


class TestRun:
    def test_minimal_plan_deterministic_artifacts(self, plan_dir):
        out_a = plan_dir / "out_a"
        out_b = plan_dir / "out_b"
        plan = load_plan(plan_dir / "plan.txt")
        run(plan, out=out_a)
        run(plan, out=out_b)
        names = [
            "agents.csv", "edges_pair.csv", "edges_all.csv",
            "interaction.csv", "network.dot", "report.txt",
            "learned_attributes.bn",
        ]
        for name in names:
            assert (out_a / name).exists(), name
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name

    def test_overrides_change_run(self, plan_dir):
        plan = load_plan(plan_dir / "plan.txt")
        result = run(plan, population=20, seed=5, write=False)
        assert len(result.store) == 20

    def test_seed_change_keeps_guarantees(self, plan_dir):
        plan = load_plan(plan_dir / "plan.txt")
        seen = []
        for seed in (1, 2, 3):
            store = run(plan, population=60, seed=seed, write=False).store
            pairs = [
                (min(l.source, l.target), max(l.source, l.target))
                for l in store.links()
            ]
            assert len(pairs) == len(set(pairs))
            assert all(a != b for a, b in pairs)
            for agent in store.agents:
                assert agent.created_links.get("pair", 0) <= agent.required_links["pair"]
            seen.append(sorted(pairs))
        assert seen[0] != seen[1] or seen[1] != seen[2]

    def test_empty_population_run(self, plan_dir):
        plan = load_plan(plan_dir / "plan.txt")
        out = plan_dir / "empty"
        result = run(plan, population=0, out=out)
        assert len(result.store) == 0
        assert result.error_report is None
        assert (out / "edges_pair.csv").read_text() == "source,target\n"

    def test_rule_stream_stable_under_reordering(self, plan_dir):
        # adding an unrelated earlier rule must not change a rule's own draws
        base = load_plan(plan_dir / "plan.txt")
        text = MINIMAL_PLAN.replace(
            "rule homophily pair bn=pair.bn counts=both",
            "rule transitive pair from pair pair p=0.0 pattern=any-any\n"
            "rule homophily pair bn=pair.bn counts=both",
        )
        (plan_dir / "plan2.txt").write_text(text)
        shuffled = load_plan(plan_dir / "plan2.txt")
        links_a = run(base, write=False).store.links("pair")
        links_b = run(shuffled, write=False).store.links("pair")
        assert links_a == links_b


class TestCli:
    def test_generate_and_stats(self, plan_dir, capsys):
        out = plan_dir / "cli_out"
        code = main(["generate", str(plan_dir / "plan.txt"), "--out", str(out)])
        assert code == EXIT_OK
        report_echo = capsys.readouterr().out
        assert "stats.collapsed.density" in report_echo
        assert (out / "report.txt").exists()

        code = main(["stats", str(out)])
        assert code == EXIT_OK
        stats_out = capsys.readouterr().out
        assert "stats.collapsed.links" in stats_out

    def test_validate_subcommand(self, plan_dir, capsys):
        assert main(["validate", str(plan_dir / "plan.txt")]) == EXIT_OK
        assert "plan ok" in capsys.readouterr().out

    def test_undeclared_type_is_invalid_exit(self, plan_dir, capsys):
        text = MINIMAL_PLAN.replace("rule homophily pair", "rule homophily ghost")
        (plan_dir / "plan.txt").write_text(text)
        code = main(["generate", str(plan_dir / "plan.txt"), "--out", str(plan_dir / "o")])
        assert code == EXIT_INVALID
        assert "ghost" in capsys.readouterr().err

    def test_usage_error(self):
        assert main([]) == EXIT_USAGE
        assert main(["frobnicate"]) == EXIT_USAGE

    def test_missing_plan_file(self, tmp_path):
        assert main(["generate", str(tmp_path / "nope.plan")]) == EXIT_INVALID

    def test_unwritable_output_is_runtime_exit(self, plan_dir):
        blocker = plan_dir / "blocked"
        blocker.write_text("not a directory")
        code = main(["generate", str(plan_dir / "plan.txt"), "--out", str(blocker)])
        assert code == EXIT_RUNTIME

    def test_broken_bn_is_invalid_exit(self, plan_dir):
        (plan_dir / "attributes.bn").write_text("variable g { a, b }\ncpt g { 0.9, 0.9 }\n")
        code = main(["generate", str(plan_dir / "plan.txt"), "--out", str(plan_dir / "o")])
        assert code == EXIT_INVALID
