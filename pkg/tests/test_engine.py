import random

import pytest

from diverse_cq import (InputError, LimitExceededError, enumerate_answers,
                        gyo_join_tree, homomorphisms, iter_answers, parse_cq,
                        provenance_map, yannakakis_answers)

from conftest import db_of, mk, random_database, random_tree_query


def answers_text(ans):
    return sorted(tuple(v.text() for v in f.values) for f in ans.answers)


def test_two_hop_answers(d1, q1):
    ans = enumerate_answers(q1, d1)
    assert ans.query is q1
    assert answers_text(ans) == [("a", "a"), ("a", "b"), ("b", "a"), ("b", "b")]
    assert [tuple(v.text() for v in f.values) for f in ans.ordered()][0] == ("a", "a")


def test_empty_database_yields_no_answers(q1):
    db = db_of({"R": 2}, [])
    assert enumerate_answers(q1, db).answers == frozenset()


def test_iter_answers_deduplicates(d1, q1):
    got = list(iter_answers(q1, d1))
    assert len(got) == len(set(got)) == 4


def test_repeated_variable_filters(d1):
    q = parse_cq("Q(x) <- R(x,x).")
    ans = enumerate_answers(q, d1)
    assert answers_text(ans) == [("a",)]


def test_homomorphism_limit():
    db = db_of({"R": 2}, [mk("R", a, b) for a in "abcd" for b in "abcd"])
    q = parse_cq("Q(x,y,z) <- R(x,y), R(y,z).")
    with pytest.raises(LimitExceededError):
        list(homomorphisms(q, db, limit=5))


def test_yannakakis_matches_enumeration_on_random_instances():
    rng = random.Random(97)
    for _ in range(60):
        q, rels = random_tree_query(rng, allow_self_join=True)
        db = random_database(rng, rels)
        td = gyo_join_tree(q)
        base = enumerate_answers(q, db)
        semi = yannakakis_answers(q, td, db)
        assert base.answers == semi.answers, q.to_text()


def test_yannakakis_rejects_foreign_decomposition(d1, q1):
    other = parse_cq("P(u,v,w) <- R(u,v), R(v,w).")
    td = gyo_join_tree(other)
    assert td is not None
    with pytest.raises(InputError):
        yannakakis_answers(q1, td, d1)


def test_provenance_of_two_hop_answers(d1, q1):
    ans = enumerate_answers(q1, d1)
    prov = provenance_map(q1, d1, ans.answers)
    assert prov[mk("Q1", "a", "a")] == frozenset(
        {mk("R", "a", "a"), mk("R", "a", "b"), mk("R", "b", "a")})
    assert prov[mk("Q1", "b", "b")] == frozenset(
        {mk("R", "b", "a"), mk("R", "a", "b")})


def test_provenance_map_rejects_non_answers(d1, q1):
    with pytest.raises(InputError, match="not an answer"):
        provenance_map(q1, d1, [mk("Q1", "c", "c")])


def test_provenance_respects_extension_limit(d1, q1):
    ans = enumerate_answers(q1, d1)
    with pytest.raises(LimitExceededError):
        provenance_map(q1, d1, ans.answers, limit=2)
