"""Stream format tests: parsing with line-accurate errors, exact rendering
round-trips, decimal formatting, and the workload generator profiles."""

from fractions import Fraction

import pytest

from levelcover.engine import DynamicCover
from levelcover.model import EXACT_RATIONAL
from levelcover.streams import (
    DECLARE,
    DELETE,
    INSERT,
    PROFILES,
    StreamEvent,
    StreamParseError,
    format_decimal,
    gen,
    gen_events,
    parse_stream,
    render_stream,
)

from levelcover.model import SetCoverError


BASIC = """\
setcover v1 eps=1/3 C=1 nmax=4
set s1 cost=1
+ e1 s1
- e1
"""


def test_parse_basic_stream():
    header, events = parse_stream(BASIC)
    assert header.epsilon == Fraction(1, 3)
    assert header.C == 1
    assert header.n_max == 4
    assert events == [
        StreamEvent(kind=DECLARE, set_id="s1", cost=Fraction(1)),
        StreamEvent(kind=INSERT, elem="e1", sets=("s1",)),
        StreamEvent(kind=DELETE, elem="e1"),
    ]


def test_parse_ignores_blanks_and_comments():
    text = "# leading note\n\n" + BASIC + "# trailing\n"
    header, events = parse_stream(text)
    assert header.epsilon == Fraction(1, 3)
    assert len(events) == 3


def test_header_config_carries_the_numeric_mode():
    header, _ = parse_stream(BASIC)
    cfg = header.config(EXACT_RATIONAL)
    assert cfg.numeric_mode == EXACT_RATIONAL
    assert cfg.epsilon == Fraction(1, 3)
    assert cfg.L == 6


@pytest.mark.parametrize(
    "eps,message",
    [
        ("1/2", "strictly between"),
        ("3/4", "strictly between"),
        ("0/5", "strictly between"),
        ("0.25", "exact fraction"),
        ("1/0", "strictly between"),
    ],
)
def test_header_rejects_out_of_range_eps(eps, message):
    with pytest.raises(StreamParseError, match=message) as err:
        parse_stream(f"setcover v1 eps={eps} C=1 nmax=4\n")
    assert err.value.line_no == 1


@pytest.mark.parametrize(
    "line,message",
    [
        ("+ e1 s1", "missing 'setcover"),
        ("setcover v2 eps=1/4 C=1 nmax=4", "malformed header"),
        ("setcover v1 eps=1/4 C=1", "malformed header"),
        ("setcover v1 eps=1/4 eps=1/3 nmax=4", "malformed header field"),
        ("setcover v1 eps=1/4 C=0.5 nmax=4", "C must be >= 1"),
        ("setcover v1 eps=1/4 C=1 nmax=0", "nmax must be a positive integer"),
        ("setcover v1 eps=1/4 C=x nmax=4", "C must be a nonnegative decimal"),
    ],
)
def test_header_rejects_malformed_lines(line, message):
    with pytest.raises(StreamParseError, match=message) as err:
        parse_stream(line + "\n")
    assert err.value.line_no == 1


@pytest.mark.parametrize(
    "body,line_no,message",
    [
        ("set s1", 2, "malformed set declaration"),
        ("set s1 price=1", 2, "malformed set declaration"),
        ("set s1 cost=1\nset s1 cost=1", 3, "declared twice"),
        ("set s1 cost=1/2", 2, "cost must be a nonnegative decimal"),
        ("+ e1", 2, "insert needs an element"),
        ("- e1 e2", 2, "malformed delete"),
        ("frob x", 2, "unknown directive"),
    ],
)
def test_body_errors_carry_their_line_number(body, line_no, message):
    text = "setcover v1 eps=1/4 C=1 nmax=4\n" + body + "\n"
    with pytest.raises(StreamParseError, match=message) as err:
        parse_stream(text)
    assert err.value.line_no == line_no


def test_line_numbers_count_comments_and_blanks():
    text = "# one\n\n# three\nsetcover v1 eps=1/4 C=1 nmax=4\nfrob\n"
    with pytest.raises(StreamParseError) as err:
        parse_stream(text)
    assert err.value.line_no == 5


def test_empty_stream_is_rejected():
    for text in ("", "\n\n", "# only a comment\n"):
        with pytest.raises(StreamParseError, match="empty stream") as err:
            parse_stream(text)
        assert err.value.line_no == 1


# -- decimal formatting ---------------------------------------------------------------


@pytest.mark.parametrize(
    "value,text",
    [
        (Fraction(1), "1"),
        (Fraction(2), "2"),
        (Fraction(0), "0"),
        (Fraction(1, 4), "0.25"),
        (Fraction(3, 10), "0.3"),
        (Fraction(7, 8), "0.875"),
        (Fraction(5, 4), "1.25"),
        (Fraction(1, 100), "0.01"),
        (Fraction(100), "100"),
    ],
)
def test_format_decimal_is_exact(value, text):
    assert format_decimal(value) == text
    assert Fraction(text) == value


def test_format_decimal_rejects_non_decimal_rationals():
    with pytest.raises(ValueError, match="no finite decimal"):
        format_decimal(Fraction(1, 3))
    with pytest.raises(ValueError, match="negative"):
        format_decimal(Fraction(-1, 4))


# -- generators -----------------------------------------------------------------------


@pytest.mark.parametrize("profile", PROFILES)
def test_generated_streams_round_trip(profile):
    text = gen(profile, 3, n=20, m=6, f=3, eps=Fraction(1, 4), C=Fraction(2), ops=60)
    header, events = parse_stream(text)
    assert render_stream(header, events) == text


@pytest.mark.parametrize("profile", PROFILES)
def test_generation_is_deterministic(profile):
    kwargs = dict(n=20, m=6, f=3, eps=Fraction(1, 5), C=Fraction(1), ops=50)
    assert gen(profile, 9, **kwargs) == gen(profile, 9, **kwargs)
    assert gen(profile, 9, **kwargs) != gen(profile, 10, **kwargs)


@pytest.mark.parametrize("profile", PROFILES)
def test_generated_streams_respect_the_declared_bounds(profile):
    C = Fraction(2)
    f = 3
    header, events = gen_events(profile, 4, n=25, m=8, f=f, eps=Fraction(1, 4), C=C, ops=80)
    declared = set()
    live = set()
    seen = set()
    for ev in events:
        if ev.kind == DECLARE:
            assert Fraction(1, 2) <= ev.cost <= 1
            assert ev.cost.denominator in (1, 2, 4, 5, 10, 20, 25, 50, 100)
            declared.add(ev.set_id)
        elif ev.kind == INSERT:
            assert ev.elem not in seen  # ids are never reused
            seen.add(ev.elem)
            assert 1 <= len(ev.sets) <= f
            assert len(set(ev.sets)) == len(ev.sets)
            assert set(ev.sets) <= declared
            live.add(ev.elem)
            assert len(live) <= header.n_max
        else:
            assert ev.elem in live
            live.discard(ev.elem)


def test_random_churn_honors_the_op_budget():
    _, events = gen_events("random-churn", 1, n=15, m=5, f=2, ops=120)
    updates = [ev for ev in events if ev.kind != DECLARE]
    assert len(updates) == 120


def test_insert_heavy_is_mostly_inserts():
    _, events = gen_events("insert-heavy", 6, n=200, m=10, f=3)
    updates = [ev for ev in events if ev.kind != DECLARE]
    inserts = sum(1 for ev in updates if ev.kind == INSERT)
    assert inserts >= 0.9 * len(updates)


def test_delete_cascade_empties_the_system():
    header, events = gen_events("delete-cascade", 8, n=50, m=8, f=3)
    inserts = [ev for ev in events if ev.kind == INSERT]
    deletes = [ev for ev in events if ev.kind == DELETE]
    assert len(inserts) == len(deletes) == 50
    assert {ev.elem for ev in inserts} == {ev.elem for ev in deletes}
    eng = DynamicCover(header.config(EXACT_RATIONAL))
    for ev in events:
        if ev.kind == DECLARE:
            eng.declare_set(ev.set_id, ev.cost)
        elif ev.kind == INSERT:
            eng.insert(ev.elem, ev.sets)
        else:
            eng.delete(ev.elem)
    assert eng.cover() == []
    assert eng.stats()["live"] == 0


def test_rebuild_attack_forces_rebuilds():
    header, events = gen_events("rebuild-attack", 2, n=30, m=8, f=3, ops=120)
    eng = DynamicCover(header.config(EXACT_RATIONAL))
    for ev in events:
        if ev.kind == DECLARE:
            eng.declare_set(ev.set_id, ev.cost)
        elif ev.kind == INSERT:
            eng.insert(ev.elem, ev.sets)
        else:
            eng.delete(ev.elem)
    assert sum(eng.stats()["rebuilds_by_level"].values()) >= 3


@pytest.mark.parametrize(
    "kwargs,message",
    [
        (dict(profile="zigzag", seed=0, n=5, m=2, f=1), "unknown profile"),
        (dict(profile="random-churn", seed=0, n=5, m=2, f=1, eps=Fraction(1, 2)),
         "strictly between"),
        (dict(profile="random-churn", seed=0, n=5, m=2, f=1, C=Fraction(1, 2)),
         "C must be >= 1"),
        (dict(profile="random-churn", seed=0, n=5, m=2, f=3), "1 <= f <= m"),
        (dict(profile="random-churn", seed=0, n=0, m=2, f=1), "n >= 1"),
    ],
)
def test_generator_rejects_bad_arguments(kwargs, message):
    profile = kwargs.pop("profile")
    seed = kwargs.pop("seed")
    with pytest.raises(SetCoverError, match=message):
        gen_events(profile, seed, **kwargs)
