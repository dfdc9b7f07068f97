"""Update engine: element insertion and deletion over the level structure.

An insertion either parks the new element with zero weight under an already
tight set, or, when every containing set is slack, feeds it the largest
weight that fits, which drives at least one of those sets exactly to its
cost.  A deletion only marks the element dead and charges one unit against
the counter of every level prefix containing it; the first exhausted
counter (scanning from the top) triggers a rebuild of that prefix.  All
cover changes are reported as diffs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .model import (
    ACTIVE,
    DEAD,
    PASSIVE,
    CoverDiff,
    SetSystem,
    SystemConfig,
    UpdateError,
    new_system,
)
from .rebuild import rebuild


@dataclass(frozen=True)
class LogEntry:
    op_index: int
    kind: str           # "insert" | "delete"
    elem: str
    diff: CoverDiff


class DynamicCover:
    """Dynamic weighted set cover under element insertions and deletions.

    The cover returned by cover() is the collection of tight sets; it always
    covers every live element, and its cost stays within the configured
    approximation window of the optimum.  Single-writer; snapshots are safe
    to keep across updates.

    Options: f_max caps the membership list length per insert when given;
    log_updates keeps an in-memory list of (op, diff) entries;
    capture_fix_level records every level-repair invocation for replay
    against the reference oracle (meaningful in exact mode).
    """

    def __init__(self, config: SystemConfig, f_max: Optional[int] = None,
                 log_updates: bool = False, capture_fix_level: bool = False):
        self.system = new_system(config)
        self.f_max = f_max
        self.log: Optional[list] = [] if log_updates else None
        self.captured_fix_level: Optional[list] = [] if capture_fix_level else None
        self.total_touched = 0
        self.rebuilds_by_level: dict[int, int] = {}

    @property
    def config(self) -> SystemConfig:
        return self.system.config

    def declare_set(self, set_id: str, cost):
        """Register a new set (level 0, no members, slack)."""
        return self.system.declare_set(set_id, cost)

    # -- updates -------------------------------------------------------------

    def insert(self, elem_id: str, set_ids) -> CoverDiff:
        """Add a live element contained in the given declared sets."""
        sys = self.system
        if not isinstance(elem_id, str) or not elem_id:
            raise UpdateError(f"element id must be a non-empty string, got {elem_id!r}")
        old = sys.elements.get(elem_id)
        if old is not None:
            if old.state == DEAD:
                raise UpdateError(
                    f"element id {elem_id!r} was deleted and awaits purge; use a fresh id"
                )
            raise UpdateError(f"element {elem_id!r} is already present")
        ids = list(set_ids)
        if not ids:
            raise UpdateError(f"element {elem_id!r} must belong to at least one set")
        if len(set(ids)) != len(ids):
            raise UpdateError(f"element {elem_id!r} lists a set more than once")
        if self.f_max is not None and len(ids) > self.f_max:
            raise UpdateError(
                f"element {elem_id!r} belongs to {len(ids)} sets, f_max is {self.f_max}"
            )
        if sys.live_count >= sys.config.n_max:
            raise UpdateError(
                f"live element capacity n_max={sys.config.n_max} would be exceeded"
            )
        recs = []
        for sid in ids:
            s = sys.sets.get(sid)
            if s is None:
                raise UpdateError(f"element {elem_id!r} references undeclared set {sid!r}")
            recs.append(s)

        num = sys.num
        touched = len(recs)
        level = 0
        any_tight = False
        for s in recs:
            if s.level > level:
                level = s.level
            if s.tight:
                any_tight = True

        e = sys._register_element(elem_id, recs)
        added: list = []
        if any_tight:
            # parked: contributes nothing until the next rebuild re-feeds it
            e.weight = num.zero()
            sys._place_element(e, PASSIVE, level)
        else:
            # all containing sets are slack, hence at level 0 with real room
            assert level == 0
            gap = None
            for s in recs:
                g = s.cost - s.weight
                if gap is None or g < gap:
                    gap = g
            touched += len(recs)
            if num.exact:
                assert gap > 0
            elif gap < 0.0:
                gap = 0.0
            e.weight = gap
            sys._place_element(e, PASSIVE, 0)
            for s in recs:
                s.weight = s.weight + gap
                touched += 1
                if sys.refresh_tight(s) > 0:
                    added.append(s.set_id)
            added.sort()

        if len(recs) > sys.f_obs:
            sys.f_obs = len(recs)
        sys.live_count += 1
        sys.op_count += 1
        self.total_touched += touched
        diff = CoverDiff(added=added, removed=[], rebuild_level=None, touched=touched)
        if self.log is not None:
            self.log.append(LogEntry(sys.op_count, "insert", elem_id, diff))
        return diff

    def delete(self, elem_id: str) -> CoverDiff:
        """Remove a live element; may trigger a prefix rebuild."""
        sys = self.system
        e = sys.elements.get(elem_id)
        if e is None:
            raise UpdateError(f"element {elem_id!r} is not present")
        if e.state == DEAD:
            raise UpdateError(f"element {elem_id!r} is already deleted")
        lvl = e.level
        # the dead element keeps its weight until a rebuild purges it
        sys._move_element(e, DEAD, lvl)
        sys.live_count -= 1
        sys.dead_count += 1

        added: list = []
        removed: list = []
        rebuild_level = None
        touched = 0
        counters = sys.counters.values
        for k in range(sys.config.L, lvl - 1, -1):
            counters[k] -= 1
            if counters[k] <= 0:
                rebuild_level = k
                added, removed, touched = rebuild(sys, k, self.captured_fix_level)
                self.rebuilds_by_level[k] = self.rebuilds_by_level.get(k, 0) + 1
                break

        sys.op_count += 1
        self.total_touched += touched
        diff = CoverDiff(added=added, removed=removed,
                         rebuild_level=rebuild_level, touched=touched)
        if self.log is not None:
            self.log.append(LogEntry(sys.op_count, "delete", elem_id, diff))
        return diff

    # -- queries -------------------------------------------------------------

    def cover(self) -> list:
        """Sorted ids of the tight sets; covers every live element."""
        return sorted(self.system.tight_ids)

    def cover_cost(self):
        """Total cost of the cover, in the configured numeric mode."""
        return self.system.num.to_weight(self.system.cover_cost_exact)

    def snapshot(self):
        return self.system.snapshot()

    def stats(self) -> dict:
        sys = self.system
        updates = sys.op_count
        return {
            "max_f_observed": sys.f_obs,
            "total_touched": self.total_touched,
            "updates": updates,
            "amortized_touched": self.total_touched / updates if updates else 0.0,
            "live": sys.live_count,
            "dead": sys.dead_count,
            "rebuilds_by_level": dict(sorted(self.rebuilds_by_level.items())),
        }
