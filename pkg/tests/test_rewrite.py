from __future__ import annotations

import pytest

from docqa.rewrite import AugmentedQuery, SchemaError, augment_query, build_rules, load_rules


def rules_file(tmp_path, data: str):
    path = tmp_path / "rules.json"
    path.write_text(data, encoding="utf-8")
    return path


class TestLoadRules:
    def test_minimal_synonyms(self, tmp_path):
        rules = load_rules(rules_file(tmp_path, '{"synonyms": {"login": ["sign in"]}}'))
        assert rules.synonyms == {"login": ("sign in",)}

    def test_weight_below_one_rejected(self, tmp_path):
        with pytest.raises(SchemaError) as err:
            load_rules(rules_file(tmp_path, '{"boosts": {"credentials": 0.5}}'))
        assert err.value.key == "credentials"

    def test_duplicate_jargon_keys_rejected(self, tmp_path):
        with pytest.raises(SchemaError) as err:
            load_rules(rules_file(tmp_path, '{"jargon_map": {"creds": "a", "creds": "b"}}'))
        assert err.value.key == "creds"

    def test_bad_pattern_rejected(self):
        with pytest.raises(SchemaError):
            build_rules({"paraphrase_patterns": {"(unclosed": "x"}})


class TestAugmentQuery:
    def test_synonym_appended_not_substituted(self):
        rules = build_rules({"synonyms": {"login": ["sign in"]}})
        q = augment_query("how do I login?", rules)
        assert q.rewritten == "how do I login?"
        assert [(t.term, t.source, t.trigger) for t in q.added_terms] == [("sign in", "synonym", "login")]

    def test_jargon_whole_word_replacement(self):
        rules = build_rules({"jargon_map": {"creds": "service credentials"}})
        q = augment_query("how do I make a creds?", rules)
        assert q.rewritten == "how do I make a service credentials?"
        assert q.added_terms[0].source == "jargon-map"
        assert q.added_terms[0].trigger == "creds"

    def test_jargon_does_not_hit_substrings(self):
        rules = build_rules({"jargon_map": {"creds": "service credentials"}})
        q = augment_query("the credsx token", rules)
        assert q.rewritten == "the credsx token"

    def test_identity_without_rule_hits(self):
        rules = build_rules({"synonyms": {"login": ["sign in"]}, "jargon_map": {"creds": "credentials"}})
        q = augment_query("how do I deploy an app?", rules)
        assert q.rewritten == q.original == "how do I deploy an app?"
        assert q.added_terms == ()
        assert q.boost_terms == ()

    def test_paraphrase_longest_match_single_pass(self):
        rules = build_rules(
            {
                "paraphrase_patterns": {
                    r"can't log in": "cannot sign in",
                    r"can't log in to my account": "cannot access my account",
                }
            }
        )
        q = augment_query("I can't log in to my account", rules)
        assert q.rewritten == "I cannot access my account"

    def test_boost_records_provenance_and_weight(self):
        rules = build_rules({"boosts": {"credentials": 2.0}})
        q = augment_query("rotate credentials today", rules)
        assert q.boost_terms[0].term == "credentials"
        assert q.boost_terms[0].weight == 2.0
        boost_added = [t for t in q.added_terms if t.source == "boost"]
        assert boost_added[0].trigger == "credentials"

    def test_boost_via_jargon_provenance(self):
        rules = build_rules(
            {"jargon_map": {"creds": "credentials"}, "boosts": {"credentials": 1.5}}
        )
        q = augment_query("find my creds", rules)
        assert q.rewritten == "find my credentials"
        boost = [t for t in q.added_terms if t.source == "boost"]
        assert boost[0].trigger == "creds"

    def test_triggers_resolvable_in_original(self):
        rules = build_rules(
            {
                "jargon_map": {"creds": "service credentials"},
                "synonyms": {"rotate": ["renew"]},
                "boosts": {"rotate": 1.2},
            }
        )
        q = augment_query("rotate my creds now", rules)
        for term in q.added_terms:
            assert term.trigger.lower() in q.original.lower()

    def test_single_pass_fixed_point(self):
        rules = build_rules({"jargon_map": {"creds": "service credentials"}})
        first = augment_query("make a creds", rules)
        second = augment_query(first.rewritten, rules)
        assert second.rewritten == first.rewritten
        assert not [t for t in second.added_terms if t.source == "jargon-map"]

    def test_synonym_dedup(self):
        rules = build_rules({"synonyms": {"login": ["sign in"], "signin": ["sign in"]}})
        q = augment_query("login or signin?", rules)
        assert [t.term for t in q.added_terms].count("sign in") == 1

    def test_plain_helper(self):
        q = AugmentedQuery.plain("pricing")
        assert q.original == q.rewritten == "pricing"
        assert q.added_terms == ()
