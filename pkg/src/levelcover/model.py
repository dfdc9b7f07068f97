"""Core state for the dynamic weighted set-cover structure.

This module owns the records that the update engine mutates: declared sets
with their costs, live and dead elements, the incidence graph between them,
the per-level buckets, and the rebuild counters.  The update logic itself
lives in `engine` and `rebuild`.

Vocabulary used throughout the package:

* every element carries a weight; a set's `weight` is the total weight of
  its member elements, deleted-but-not-yet-purged ones included;
* a set is *tight* when its weight lies in [cost/(1+eps), cost] and *slack*
  when the weight is below that window; the current cover is exactly the
  collection of tight sets;
* elements are *active* (weight pinned to (1+eps)^-level), *passive*
  (weight anywhere in [0, (1+eps)^-level]), or *dead* (deleted, weight
  frozen until the next rebuild purges it).

Weights are either 64-bit floats ("fast-float" mode, comparisons cushioned
by a relative tolerance) or exact `fractions.Fraction` values
("exact-rational" mode).  Rebuild counters are plain integers in both modes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Union

FAST_FLOAT = "fast-float"
EXACT_RATIONAL = "exact-rational"
NUMERIC_MODES = (FAST_FLOAT, EXACT_RATIONAL)

# relative tolerance for weight comparisons in fast-float mode
FLOAT_TOL = 1e-9

ACTIVE = 0
PASSIVE = 1
DEAD = 2
STATE_NAMES = {ACTIVE: "active", PASSIVE: "passive", DEAD: "dead"}

Rational = Union[Fraction, int, str]


class SetCoverError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SetCoverError):
    """Invalid system configuration or instance description."""


class UpdateError(SetCoverError):
    """A declare/insert/delete request that the engine must reject."""


def as_exact_rational(value, what: str) -> Fraction:
    """Convert to Fraction, rejecting binary floats (they are inexact)."""
    if isinstance(value, float):
        raise ConfigError(
            f"{what} must be an exact rational (Fraction, int, or 'p/q' string), "
            f"got float {value!r}"
        )
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise ConfigError(f"{what} is not a rational number: {value!r}") from exc


def as_cost(value, what: str) -> Fraction:
    """Convert a cost-like real to an exact Fraction (floats allowed)."""
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise ConfigError(f"{what} is not a number: {value!r}") from exc


def level_cap(epsilon: Fraction, C: Fraction, n_max: int) -> int:
    """Number of levels needed so that (1+eps)^(cap-1) reaches C*n_max.

    Returns the smallest integer q with (1+eps)^q >= C*n_max, plus one.
    Computed with exact rationals so every mode agrees on the cap.
    """
    target = C * n_max
    base = 1 + epsilon
    acc = Fraction(1)
    q = 0
    while acc < target:
        acc *= base
        q += 1
    return q + 1


@dataclass(frozen=True)
class SystemConfig:
    """Validated, immutable parameters of one set-cover structure."""

    epsilon: Fraction
    C: Fraction
    n_max: int
    L: int
    numeric_mode: str

    @staticmethod
    def create(epsilon, C=1, n_max=1, numeric_mode: str = FAST_FLOAT) -> "SystemConfig":
        eps = as_exact_rational(epsilon, "epsilon")
        if not (0 < eps < Fraction(1, 2)):
            raise ConfigError(f"epsilon must lie strictly between 0 and 1/2, got {eps}")
        cap = as_cost(C, "C")
        if cap < 1:
            raise ConfigError(f"C must be >= 1, got {cap}")
        if not isinstance(n_max, int) or isinstance(n_max, bool) or n_max < 1:
            raise ConfigError(f"n_max must be a positive integer, got {n_max!r}")
        if numeric_mode not in NUMERIC_MODES:
            raise ConfigError(f"numeric_mode must be one of {NUMERIC_MODES}, got {numeric_mode!r}")
        return SystemConfig(eps, cap, n_max, level_cap(eps, cap, n_max), numeric_mode)


class Numerics:
    """Weight arithmetic for one numeric mode.

    Exact mode compares Fractions directly.  Fast-float mode cushions the
    tightness window by FLOAT_TOL relative to the set's cost, so a weight
    driven to exactly cost by construction still classifies as tight after
    rounding.  Counter arithmetic is integer-exact in both modes, which
    keeps the rebuild schedule identical across modes.
    """

    __slots__ = ("mode", "exact", "epsilon", "eps_float", "L", "pow_exact", "pow_neg",
                 "_inv_base", "_inv_base_f")

    def __init__(self, epsilon: Fraction, L: int, mode: str):
        self.mode = mode
        self.exact = mode == EXACT_RATIONAL
        self.epsilon = epsilon
        self.eps_float = float(epsilon)
        self.L = L
        inv = Fraction(1) / (1 + epsilon)
        table = [Fraction(1)]
        for _ in range(L):
            table.append(table[-1] * inv)
        self.pow_exact = table          # (1+eps)^-i for i in 0..L, exact
        self._inv_base = inv
        self._inv_base_f = float(inv)
        if self.exact:
            self.pow_neg = table
        else:
            self.pow_neg = [float(x) for x in table]

    def zero(self):
        return Fraction(0) if self.exact else 0.0

    def to_weight(self, value: Fraction):
        return value if self.exact else float(value)

    def lower_ok(self, value, cost) -> bool:
        """value >= cost/(1+eps), cushioned in float mode."""
        if self.exact:
            return value >= cost * self._inv_base
        return value >= cost * self._inv_base_f - FLOAT_TOL * cost

    def upper_ok(self, value, cost) -> bool:
        """value <= cost, cushioned in float mode."""
        if self.exact:
            return value <= cost
        return value <= cost + FLOAT_TOL * cost

    def le_with_slack(self, value, bound, cost) -> bool:
        """value <= bound, cushioned by the cost-relative tolerance in float mode."""
        if self.exact:
            return value <= bound
        return value <= bound + FLOAT_TOL * cost

    def is_tight(self, value, cost) -> bool:
        return self.lower_ok(value, cost) and self.upper_ok(value, cost)

    def floor_times_eps(self, count: int) -> int:
        """floor(eps * count), exact in both modes."""
        return (self.epsilon.numerator * count) // self.epsilon.denominator


class IncidenceNode:
    """One element-in-set membership, linked into both owners' lists.

    The node sits on the element's incidence list (elem_prev/elem_next) and
    on the set's member list (set_prev/set_next), so it can be unlinked from
    either side in constant time.  Exactly one node exists per membership.
    """

    __slots__ = ("elem", "set_rec", "elem_prev", "elem_next", "set_prev", "set_next")

    def __init__(self, elem: "ElementRecord", set_rec: "SetRecord"):
        self.elem = elem
        self.set_rec = set_rec
        self.elem_prev = None
        self.elem_next = None
        self.set_prev = None
        self.set_next = None


class ElementRecord:
    """A live or dead element: state, level, weight, and its incidences."""

    __slots__ = ("elem_id", "state", "level", "weight", "inc_head", "degree",
                 "bucket", "bucket_prev", "bucket_next")

    def __init__(self, elem_id: str):
        self.elem_id = elem_id
        self.state = PASSIVE
        self.level = 0
        self.weight = 0
        self.inc_head: Optional[IncidenceNode] = None
        self.degree = 0
        self.bucket = None
        self.bucket_prev = None
        self.bucket_next = None

    def incident_sets(self) -> Iterator["SetRecord"]:
        node = self.inc_head
        while node is not None:
            yield node.set_rec
            node = node.elem_next

    def __repr__(self):
        return (f"<Element {self.elem_id} {STATE_NAMES[self.state]} "
                f"level={self.level} weight={self.weight}>")


class SetRecord:
    """A declared set: cost, level, cached member weight, member list."""

    __slots__ = ("set_id", "cost", "cost_exact", "level", "weight",
                 "member_head", "member_count", "tight")

    def __init__(self, set_id: str, cost_exact: Fraction, cost):
        self.set_id = set_id
        self.cost_exact = cost_exact    # always a Fraction
        self.cost = cost                # mode units, used in hot comparisons
        self.level = 0
        self.weight = None              # set by SetSystem at declare time
        self.member_head: Optional[IncidenceNode] = None
        self.member_count = 0
        self.tight = False

    def members(self) -> Iterator[ElementRecord]:
        node = self.member_head
        while node is not None:
            yield node.elem
            node = node.set_next

    def __repr__(self):
        return (f"<Set {self.set_id} cost={self.cost_exact} level={self.level} "
                f"weight={self.weight} {'tight' if self.tight else 'slack'}>")


class Bucket:
    """Intrusive doubly-linked list of element records, size cached."""

    __slots__ = ("head", "size")

    def __init__(self):
        self.head: Optional[ElementRecord] = None
        self.size = 0

    def add(self, rec: ElementRecord) -> None:
        rec.bucket = self
        rec.bucket_prev = None
        rec.bucket_next = self.head
        if self.head is not None:
            self.head.bucket_prev = rec
        self.head = rec
        self.size += 1

    def remove(self, rec: ElementRecord) -> None:
        prev, nxt = rec.bucket_prev, rec.bucket_next
        if prev is None:
            self.head = nxt
        else:
            prev.bucket_next = nxt
        if nxt is not None:
            nxt.bucket_prev = prev
        rec.bucket = None
        rec.bucket_prev = None
        rec.bucket_next = None
        self.size -= 1

    def __iter__(self) -> Iterator[ElementRecord]:
        node = self.head
        while node is not None:
            yield node
            node = node.bucket_next

    def __len__(self):
        return self.size


class LevelIndex:
    """Per-level element buckets, one active/passive/dead triple per level.

    The live bucket E_i is a view: its size is |A_i| + |P_i| and iterating
    it chains the two physical lists, so "E_i = A_i union P_i" holds by
    construction.
    """

    __slots__ = ("L", "active", "passive", "dead")

    KINDS = ("E", "A", "P", "D")

    def __init__(self, L: int):
        self.L = L
        self.active = [Bucket() for _ in range(L + 1)]
        self.passive = [Bucket() for _ in range(L + 1)]
        self.dead = [Bucket() for _ in range(L + 1)]

    def bucket(self, state: int, level: int) -> Bucket:
        if state == ACTIVE:
            return self.active[level]
        if state == PASSIVE:
            return self.passive[level]
        return self.dead[level]

    def live_size(self, level: int) -> int:
        return self.active[level].size + self.passive[level].size

    def iter_live(self, level: int) -> Iterator[ElementRecord]:
        yield from self.active[level]
        yield from self.passive[level]

    def prefix_count(self, kind: str, level: int) -> int:
        """Number of elements of the given kind at levels 0..level.

        kind is one of "E" (live), "A", "P", "D".
        """
        if kind not in self.KINDS:
            raise ConfigError(f"unknown bucket kind {kind!r}, expected one of {self.KINDS}")
        if not 0 <= level <= self.L:
            raise ConfigError(f"level {level} outside [0, {self.L}]")
        total = 0
        if kind in ("E", "A"):
            for i in range(level + 1):
                total += self.active[i].size
        if kind in ("E", "P"):
            for i in range(level + 1):
                total += self.passive[i].size
        if kind == "D":
            for i in range(level + 1):
                total += self.dead[i].size
        return total


class Counters:
    """Rebuild counters, one per level; values[j] guards the prefix 0..j."""

    __slots__ = ("values",)

    def __init__(self, L: int):
        self.values = [0] * (L + 1)

    def as_tuple(self):
        return tuple(self.values)


@dataclass
class CoverDiff:
    """Cover change produced by one update.

    added/removed hold set ids sorted ascending; they never overlap.
    rebuild_level is the level prefix that was rebuilt, or None.
    touched counts element-set incidence visits performed by the update.
    """

    added: list
    removed: list
    rebuild_level: Optional[int] = None
    touched: int = 0


@dataclass(frozen=True)
class Instance:
    """A plain set-system description: costs per set, memberships per element."""

    costs: dict      # set id -> Fraction cost
    members: dict    # elem id -> tuple of set ids

    def frequency(self) -> int:
        return max((len(s) for s in self.members.values()), default=0)


@dataclass(frozen=True)
class SetSnap:
    cost: Fraction
    level: int
    weight: object
    tight: bool


@dataclass(frozen=True)
class ElemSnap:
    state: str
    level: int
    weight: object
    sets: tuple


@dataclass(frozen=True)
class Snapshot:
    """Deep, immutable copy of the structure state at one instant."""

    epsilon: Fraction
    C: Fraction
    n_max: int
    L: int
    numeric_mode: str
    sets: dict           # set id -> SetSnap
    elements: dict       # elem id -> ElemSnap (live and dead)
    counters: tuple
    f_obs: int
    op_count: int
    cover: tuple         # sorted tight set ids
    cover_cost: Fraction # exact, regardless of mode

    def live_instance(self) -> Instance:
        members = {
            eid: e.sets for eid, e in self.elements.items() if e.state != "dead"
        }
        return Instance(
            costs={sid: s.cost for sid, s in self.sets.items()},
            members=members,
        )


class SetSystem:
    """The mutable structure shared by the engine and the rebuild routines.

    Single-writer: one update at a time, no internal locking.  Snapshots
    are deep copies and stay valid across later updates.
    """

    def __init__(self, config: SystemConfig):
        self.config = config
        self.num = Numerics(config.epsilon, config.L, config.numeric_mode)
        self.sets: dict[str, SetRecord] = {}
        self.elements: dict[str, ElementRecord] = {}
        self.levels = LevelIndex(config.L)
        self.counters = Counters(config.L)
        self.tight_ids: set[str] = set()
        self.cover_cost_exact = Fraction(0)
        self.live_count = 0
        self.dead_count = 0
        self.f_obs = 0
        self.op_count = 0

    # -- declarations ------------------------------------------------------

    def declare_set(self, set_id: str, cost) -> SetRecord:
        """Register a new set at level 0 with no members.

        cost must lie in [1/C, 1].  Declaring an existing id is an error.
        """
        if not isinstance(set_id, str) or not set_id:
            raise UpdateError(f"set id must be a non-empty string, got {set_id!r}")
        if set_id in self.sets:
            raise UpdateError(f"set {set_id!r} is already declared")
        cost_exact = as_cost(cost, f"cost of set {set_id!r}")
        lo = Fraction(1) / self.config.C
        if not (lo <= cost_exact <= 1):
            raise UpdateError(
                f"cost of set {set_id!r} must lie in [1/C, 1] = [{lo}, 1], got {cost_exact}"
            )
        rec = SetRecord(set_id, cost_exact, self.num.to_weight(cost_exact))
        rec.weight = self.num.zero()
        self.sets[set_id] = rec
        return rec

    # -- structural helpers ------------------------------------------------

    def _register_element(self, elem_id: str, recs) -> ElementRecord:
        e = ElementRecord(elem_id)
        self.elements[elem_id] = e
        for s in recs:
            node = IncidenceNode(e, s)
            node.elem_next = e.inc_head
            if e.inc_head is not None:
                e.inc_head.elem_prev = node
            e.inc_head = node
            e.degree += 1
            node.set_next = s.member_head
            if s.member_head is not None:
                s.member_head.set_prev = node
            s.member_head = node
            s.member_count += 1
        return e

    def _unlink_membership(self, node: IncidenceNode) -> None:
        s = node.set_rec
        prev, nxt = node.set_prev, node.set_next
        if prev is None:
            s.member_head = nxt
        else:
            prev.set_next = nxt
        if nxt is not None:
            nxt.set_prev = prev
        s.member_count -= 1
        e = node.elem
        prev, nxt = node.elem_prev, node.elem_next
        if prev is None:
            e.inc_head = nxt
        else:
            prev.elem_next = nxt
        if nxt is not None:
            nxt.elem_prev = prev
        e.degree -= 1

    def _place_element(self, e: ElementRecord, state: int, level: int) -> None:
        e.state = state
        e.level = level
        self.levels.bucket(state, level).add(e)

    def _move_element(self, e: ElementRecord, state: int, level: int) -> None:
        e.bucket.remove(e)
        self._place_element(e, state, level)

    def _purge_element(self, e: ElementRecord) -> None:
        """Drop a dead element entirely: memberships, bucket, registry."""
        node = e.inc_head
        while node is not None:
            nxt = node.elem_next
            self._unlink_membership(node)
            node = nxt
        e.bucket.remove(e)
        del self.elements[e.elem_id]

    # -- queries -----------------------------------------------------------

    def element_level(self, e: ElementRecord) -> int:
        """Maximum level among the sets containing e."""
        node = e.inc_head
        if node is None:
            raise UpdateError(f"element {e.elem_id!r} belongs to no set")
        best = 0
        while node is not None:
            lvl = node.set_rec.level
            if lvl > best:
                best = lvl
            node = node.elem_next
        return best

    def classify_set(self, s: SetRecord) -> bool:
        """True when s is tight: weight within [cost/(1+eps), cost]."""
        return self.num.is_tight(s.weight, s.cost)

    def prefix_count(self, kind: str, level: int) -> int:
        return self.levels.prefix_count(kind, level)

    def refresh_tight(self, s: SetRecord) -> int:
        """Recompute s's tight flag; returns +1/-1/0 for the transition."""
        now = self.num.is_tight(s.weight, s.cost)
        if now == s.tight:
            return 0
        s.tight = now
        if now:
            self.tight_ids.add(s.set_id)
            self.cover_cost_exact += s.cost_exact
            return 1
        self.tight_ids.discard(s.set_id)
        self.cover_cost_exact -= s.cost_exact
        return -1

    # -- snapshots ----------------------------------------------------------

    def snapshot(self) -> Snapshot:
        sets = {
            sid: SetSnap(s.cost_exact, s.level, s.weight, s.tight)
            for sid, s in self.sets.items()
        }
        elements = {}
        for eid, e in self.elements.items():
            sids = []
            node = e.inc_head
            while node is not None:
                sids.append(node.set_rec.set_id)
                node = node.elem_next
            sids.sort()
            elements[eid] = ElemSnap(STATE_NAMES[e.state], e.level, e.weight, tuple(sids))
        return Snapshot(
            epsilon=self.config.epsilon,
            C=self.config.C,
            n_max=self.config.n_max,
            L=self.config.L,
            numeric_mode=self.config.numeric_mode,
            sets=sets,
            elements=elements,
            counters=self.counters.as_tuple(),
            f_obs=self.f_obs,
            op_count=self.op_count,
            cover=tuple(sorted(self.tight_ids)),
            cover_cost=self.cover_cost_exact,
        )


def new_system(config: SystemConfig) -> SetSystem:
    """Create an empty structure for the given configuration."""
    if not isinstance(config, SystemConfig):
        raise ConfigError(f"expected a SystemConfig, got {type(config).__name__}")
    return SetSystem(config)
