"""Text stream format for update sequences, plus workload generators.

A stream is line-oriented:

    setcover v1 eps=1/2 C=1 nmax=4
    set s1 cost=1
    + e1 s1
    - e1

The header fixes the accuracy parameter (an exact fraction), the cost span
C (costs live in [1/C, 1]), and the live-element capacity.  `set` declares
a set, `+` inserts an element into one or more declared sets, `-` deletes
it.  Blank lines and `# comment` lines are ignored.  Rendering a parsed
stream reproduces it byte for byte.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .model import FAST_FLOAT, SetCoverError, SystemConfig

DECLARE = "declare-set"
INSERT = "insert"
DELETE = "delete"

PROFILES = ("random-churn", "insert-heavy", "delete-cascade", "rebuild-attack")

_DECIMAL_RE = re.compile(r"^\d+(\.\d+)?$")
_FRACTION_RE = re.compile(r"^\d+/\d+$")


class StreamParseError(SetCoverError):
    """Malformed stream text; carries the 1-based offending line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class StreamHeader:
    epsilon: Fraction
    C: Fraction
    n_max: int

    def config(self, numeric_mode: str = FAST_FLOAT) -> SystemConfig:
        return SystemConfig.create(self.epsilon, self.C, self.n_max, numeric_mode)


@dataclass(frozen=True)
class StreamEvent:
    kind: str                      # declare-set | insert | delete
    elem: Optional[str] = None
    sets: tuple = ()
    set_id: Optional[str] = None
    cost: Optional[Fraction] = None


def format_decimal(value: Fraction) -> str:
    """Exact decimal text for a nonnegative rational with a 2^a*5^b denominator."""
    value = Fraction(value)
    if value < 0:
        raise ValueError(f"negative value {value}")
    den = value.denominator
    twos = fives = 0
    d = den
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        raise ValueError(f"{value} has no finite decimal form")
    k = max(twos, fives)
    scaled = value.numerator * 10 ** k // den
    text = str(scaled).rjust(k + 1, "0")
    if k == 0:
        return text
    head, tail = text[:-k], text[-k:]
    tail = tail.rstrip("0")
    return head + "." + tail if tail else head


def _parse_decimal(text: str, line_no: int, what: str) -> Fraction:
    if not _DECIMAL_RE.match(text):
        raise StreamParseError(line_no, f"{what} must be a nonnegative decimal, got {text!r}")
    return Fraction(text)


def parse_stream(text: str):
    """Parse stream text into (StreamHeader, [StreamEvent])."""
    header = None
    events = []
    declared = set()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if header is None:
            if tokens[0] != "setcover":
                raise StreamParseError(line_no, "missing 'setcover v1 ...' header")
            if len(tokens) != 5 or tokens[1] != "v1":
                raise StreamParseError(line_no, f"malformed header {line!r}")
            fields = {}
            for tok in tokens[2:]:
                key, sep, value = tok.partition("=")
                if not sep or key not in ("eps", "C", "nmax") or key in fields:
                    raise StreamParseError(line_no, f"malformed header field {tok!r}")
                fields[key] = value
            if set(fields) != {"eps", "C", "nmax"}:
                raise StreamParseError(line_no, "header needs eps=, C= and nmax=")
            if not _FRACTION_RE.match(fields["eps"]):
                raise StreamParseError(
                    line_no, f"eps must be an exact fraction p/q, got {fields['eps']!r}")
            p, q = fields["eps"].split("/")
            eps = Fraction(int(p), int(q)) if int(q) else None
            if eps is None or not (0 < eps < Fraction(1, 2)):
                raise StreamParseError(
                    line_no, f"eps must lie strictly between 0 and 1/2, got {fields['eps']}")
            C = _parse_decimal(fields["C"], line_no, "C")
            if C < 1:
                raise StreamParseError(line_no, f"C must be >= 1, got {fields['C']}")
            if not fields["nmax"].isdigit() or int(fields["nmax"]) < 1:
                raise StreamParseError(
                    line_no, f"nmax must be a positive integer, got {fields['nmax']!r}")
            header = StreamHeader(eps, C, int(fields["nmax"]))
            continue
        op = tokens[0]
        if op == "set":
            if len(tokens) != 3 or not tokens[2].startswith("cost="):
                raise StreamParseError(line_no, f"malformed set declaration {line!r}")
            sid = tokens[1]
            if sid in declared:
                raise StreamParseError(line_no, f"set {sid!r} declared twice")
            declared.add(sid)
            cost = _parse_decimal(tokens[2][len("cost="):], line_no, "cost")
            events.append(StreamEvent(kind=DECLARE, set_id=sid, cost=cost))
        elif op == "+":
            if len(tokens) < 3:
                raise StreamParseError(line_no, "insert needs an element and at least one set")
            events.append(StreamEvent(kind=INSERT, elem=tokens[1], sets=tuple(tokens[2:])))
        elif op == "-":
            if len(tokens) != 2:
                raise StreamParseError(line_no, f"malformed delete {line!r}")
            events.append(StreamEvent(kind=DELETE, elem=tokens[1]))
        else:
            raise StreamParseError(line_no, f"unknown directive {op!r}")
    if header is None:
        raise StreamParseError(1, "empty stream: missing header")
    return header, events


def render_header(header: StreamHeader) -> str:
    eps = header.epsilon
    return (f"setcover v1 eps={eps.numerator}/{eps.denominator} "
            f"C={format_decimal(header.C)} nmax={header.n_max}")


def render_event(event: StreamEvent) -> str:
    if event.kind == DECLARE:
        return f"set {event.set_id} cost={format_decimal(event.cost)}"
    if event.kind == INSERT:
        return "+ " + event.elem + " " + " ".join(event.sets)
    if event.kind == DELETE:
        return "- " + event.elem
    raise ValueError(f"unknown event kind {event.kind!r}")


def render_stream(header: StreamHeader, events) -> str:
    lines = [render_header(header)]
    lines.extend(render_event(ev) for ev in events)
    return "\n".join(lines) + "\n"


# -- workload generators ------------------------------------------------------


def _sample_cost(rng: random.Random, C: Fraction) -> Fraction:
    # smallest hundredth not below 1/C, so costs stay inside [1/C, 1]
    floor = Fraction(100) / C
    low = int(floor) if floor == int(floor) else int(floor) + 1
    return Fraction(rng.randint(low, 100), 100)


def _declares(rng: random.Random, m: int, C: Fraction):
    events = []
    ids = []
    for i in range(1, m + 1):
        sid = f"s{i}"
        ids.append(sid)
        events.append(StreamEvent(kind=DECLARE, set_id=sid, cost=_sample_cost(rng, C)))
    return ids, events


def gen_events(profile: str, seed: int, *, n: int, m: int, f: int,
               eps=Fraction(1, 4), C=Fraction(1), ops: Optional[int] = None):
    """Generate a workload; returns (StreamHeader, [StreamEvent]).

    Deterministic for a fixed argument tuple.  Profiles:

    * random-churn: mixed inserts and deletes of random live elements;
    * insert-heavy: at least 90 percent insertions, structurally enforced;
    * delete-cascade: insert n elements, then delete every one of them;
    * rebuild-attack: churn that always deletes a lowest-level live element,
      forcing rebuilds as often as the counters allow.
    """
    if profile not in PROFILES:
        raise SetCoverError(f"unknown profile {profile!r}, expected one of {PROFILES}")
    eps = Fraction(eps)
    C = Fraction(C)
    if not (0 < eps < Fraction(1, 2)):
        raise SetCoverError(f"eps must lie strictly between 0 and 1/2, got {eps}")
    if C < 1:
        raise SetCoverError(f"C must be >= 1, got {C}")
    if not (n >= 1 and m >= 1 and 1 <= f <= m):
        raise SetCoverError(f"need n >= 1, m >= 1 and 1 <= f <= m, got n={n} m={m} f={f}")

    rng = random.Random(seed)
    set_ids, events = _declares(rng, m, C)
    next_eid = 1

    def fresh(deg: int):
        nonlocal next_eid
        eid = f"e{next_eid}"
        next_eid += 1
        return StreamEvent(kind=INSERT, elem=eid, sets=tuple(rng.sample(set_ids, deg)))

    if profile == "random-churn":
        total = ops if ops is not None else 2 * n
        live = []
        for _ in range(total):
            can_insert = len(live) < n
            if can_insert and (not live or rng.random() < 0.55):
                ev = fresh(rng.randint(1, f))
                live.append(ev.elem)
                events.append(ev)
            else:
                i = rng.randrange(len(live))
                eid = live[i]
                live[i] = live[-1]
                live.pop()
                events.append(StreamEvent(kind=DELETE, elem=eid))
        return StreamHeader(eps, C, n), events

    if profile == "insert-heavy":
        total = ops if ops is not None else n
        total = min(total, n)  # every insert uses a fresh id within capacity
        live = []
        deletes_done = 0
        for done in range(total):
            # hard cap keeps deletions at no more than a tenth of the updates
            may_delete = live and deletes_done < (done + 1) // 10
            if may_delete and rng.random() < 0.08:
                i = rng.randrange(len(live))
                eid = live[i]
                live[i] = live[-1]
                live.pop()
                deletes_done += 1
                events.append(StreamEvent(kind=DELETE, elem=eid))
            else:
                ev = fresh(rng.randint(1, f))
                live.append(ev.elem)
                events.append(ev)
        return StreamHeader(eps, C, n), events

    if profile == "delete-cascade":
        live = []
        for _ in range(n):
            ev = fresh(rng.randint(1, f))
            live.append(ev.elem)
            events.append(ev)
        rng.shuffle(live)
        for eid in live:
            events.append(StreamEvent(kind=DELETE, elem=eid))
        return StreamHeader(eps, C, n), events

    # rebuild-attack: a shadow engine tracks levels so every deletion hits
    # the lowest live one, draining the tightest counters first
    from .engine import DynamicCover

    header = StreamHeader(eps, C, n)
    shadow = DynamicCover(header.config(FAST_FLOAT))
    for ev in events:
        shadow.declare_set(ev.set_id, ev.cost)
    total = ops if ops is not None else 2 * n
    live = 0
    floor = max(2, n // 2)
    for _ in range(total):
        if live < floor or (live < n and rng.random() < 0.3):
            ev = fresh(rng.randint(1, f))
            shadow.insert(ev.elem, ev.sets)
            live += 1
        else:
            victim = None
            index = shadow.system.levels
            for lvl in range(shadow.config.L + 1):
                if index.passive[lvl].size:
                    victim = index.passive[lvl].head.elem_id
                    break
                if index.active[lvl].size:
                    victim = index.active[lvl].head.elem_id
                    break
            ev = StreamEvent(kind=DELETE, elem=victim)
            shadow.delete(victim)
            live -= 1
        events.append(ev)
    return header, events


def gen(profile: str, seed: int, *, n: int, m: int, f: int,
        eps=Fraction(1, 4), C=Fraction(1), ops: Optional[int] = None) -> str:
    """Generate a workload as stream text (see gen_events)."""
    header, events = gen_events(profile, seed, n=n, m=m, f=f, eps=eps, C=C, ops=ops)
    return render_stream(header, events)
