import textwrap
from fractions import Fraction

import pytest

from diverse_cq import (Database, Fact, LoadError, Schema, fraction_text, intern,
                        intern_number, load_database)

from conftest import db_of, mk


def test_intern_detects_numbers():
    assert intern("3").payload == Fraction(3)
    assert intern("0.5").payload == Fraction(1, 2)
    assert intern("-2").is_number
    assert not intern("a").is_number
    assert intern("3x").payload == "3x"


def test_intern_pools_values():
    assert intern("a") is intern("a")
    assert intern("7") is intern_number(7)


def test_value_ordering_numbers_before_text():
    vals = [intern(x) for x in ("b", "10", "a", "2")]
    assert [v.text() for v in sorted(vals)] == ["2", "10", "a", "b"]


def test_fraction_text():
    assert fraction_text(Fraction(4)) == "4"
    assert fraction_text(Fraction(-3, 2)) == "-3/2"


def test_fact_identity_and_order():
    assert mk("R", "a", "b") == mk("R", "a", "b")
    assert hash(mk("R", "a")) == hash(mk("R", "a"))
    assert mk("R", "a", "b") < mk("R", "a", "c") < mk("S", "a", "a")
    assert mk("R", "a", "b").arity == 2


def test_schema_contains_and_arity():
    s = Schema({"R": 2, "S": 1})
    assert "R" in s and "T" not in s
    assert s.arity("S") == 1


def test_database_from_facts_dedups_and_sorts():
    db = db_of({"R": 1}, [mk("R", "b"), mk("R", "a"), mk("R", "b")])
    assert [f.values[0].text() for f in db.relation("R")] == ["a", "b"]
    assert db.size("R") == 2
    assert mk("R", "a") in db
    assert mk("R", "c") not in db


def test_database_rejects_wrong_arity():
    with pytest.raises(LoadError):
        db_of({"R": 2}, [mk("R", "a")])


def test_database_lookup_index():
    db = db_of({"R": 2}, [mk("R", "a", "b"), mk("R", "a", "c"), mk("R", "b", "b")])
    hits = db.lookup("R", 0, intern("a"))
    assert sorted(hits) == [mk("R", "a", "b"), mk("R", "a", "c")]
    assert db.lookup("R", 1, intern("z")) == ()


def test_load_database_round_trip(tmp_path):
    (tmp_path / "schema.txt").write_text("R/2\nS/1\n")
    (tmp_path / "R.csv").write_text("a,b\na,b\n1,2\n")
    (tmp_path / "S.csv").write_text("x\n")
    db = load_database(tmp_path)
    assert db.size("R") == 2 and db.size("S") == 1
    assert mk("R", "1", "2") in db
    assert db.load_report["R"]["rows_read"] == 3
    assert db.load_report["R"]["rows_kept"] == 2


def test_load_database_errors(tmp_path):
    with pytest.raises(LoadError):
        load_database(tmp_path / "nowhere")
    (tmp_path / "schema.txt").write_text("R+2\n")
    with pytest.raises(LoadError, match="Name/arity"):
        load_database(tmp_path)
    (tmp_path / "schema.txt").write_text("R/2\n")
    (tmp_path / "R.csv").write_text("a,b,c\n")
    with pytest.raises(LoadError, match="expected 2"):
        load_database(tmp_path)


def test_load_database_requires_every_relation_file(tmp_path):
    (tmp_path / "schema.txt").write_text(textwrap.dedent("""\
        R/2
        S/1
        """))
    (tmp_path / "R.csv").write_text("a,b\n")
    with pytest.raises(LoadError, match="missing relation file"):
        load_database(tmp_path)
