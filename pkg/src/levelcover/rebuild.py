"""Level rebuilding: purge deleted weight below a level and repair the
partition there.

rebuild(system, k) runs after deletions below level k have accumulated past
the counter budget.  It discards all dead elements at levels <= k, lifts
every touched set and element one level above k, re-feeds the weight that
the purged and zeroed elements used to contribute, keeps the sets that came
out tight, and hands everything else to fix_level, which settles sets at the
deepest level where they would still be tight and drags their remaining
active elements along.  Levels above k are never touched.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction

from .model import ACTIVE, PASSIVE, STATE_NAMES, Numerics, SetRecord, SetSystem


@dataclass(frozen=True)
class FixLevelCase:
    """One captured fix_level invocation plus its outcome, for replay."""

    k: int
    costs: dict          # set id -> cost (exact Fraction)
    frozen: dict         # set id -> weight contributed by elements outside the repair
    members: dict        # elem id -> tuple of containing set ids
    result_sets: dict    # set id -> (level, weight)
    result_elems: dict   # elem id -> (level, weight, state)


def target_level(num: Numerics, s: SetRecord, k: int, alive_count: int) -> int:
    """Deepest level in [1, k] at which s would still be tight, else 0.

    alive_count elements of s currently sit at level k with weight
    (1+eps)^-k each; dropping them to level i lifts s's weight by
    ((1+eps)^-i - (1+eps)^-k) * alive_count.  Returns the largest i in
    [1, k] where that lifted weight reaches cost/(1+eps); 0 when no i
    qualifies or no alive element remains.

    The search seeds an O(1) closed-form estimate and verifies it with the
    mode's own comparisons, stepping by one as needed.
    """
    if alive_count == 0 or k == 0:
        return 0
    pows = num.pow_neg
    pk = pows[k]
    weight = s.weight
    cost = s.cost

    def ok(i: int) -> bool:
        return num.lower_ok(weight + (pows[i] - pk) * alive_count, cost)

    # closed-form seed: (1+eps)^-i >= (cost/(1+eps) - weight)/alive + (1+eps)^-k
    need = (float(cost) * num._inv_base_f - float(weight)) / alive_count + float(pk)
    if need <= 0.0:
        i = k
    else:
        try:
            est = -math.log(need) / math.log1p(num.eps_float)
        except ValueError:
            est = float(k)
        i = int(math.floor(est))
        if i > k:
            i = k
        elif i < 0:
            i = 0
    while i < k and ok(i + 1):
        i += 1
    while i >= 1 and not ok(i):
        i -= 1
    return i if i > 0 else 0


def fix_level(system: SetSystem, k: int, sets: list, elements: list) -> int:
    """Settle the given sets at their deepest tight level within [0, k].

    Preconditions: every set in `sets` is at level k; every element in
    `elements` is active at level k with weight (1+eps)^-k, and all of its
    containing sets appear in `sets`.  Rounds sweep a bucket array indexed
    by target level from k down to 0; freezing a set freezes its remaining
    repair elements at that level and bumps their weight, which can only
    sink the target levels of the sets still open.  Returns the number of
    element-set incidences visited.
    """
    num = system.num
    pows = num.pow_neg
    pk = pows[k]
    touched = 0

    alive_count: dict[str, int] = {}
    alive_members: dict[str, list] = {}
    by_id: dict[str, SetRecord] = {}
    for s in sets:
        sid = s.set_id
        by_id[sid] = s
        alive_count[sid] = 0
        alive_members[sid] = []
    for e in elements:
        node = e.inc_head
        while node is not None:
            sid = node.set_rec.set_id
            # every set containing a repair element is part of the repair
            assert sid in alive_count
            alive_count[sid] += 1
            alive_members[sid].append(e)
            touched += 1
            node = node.elem_next

    buckets: list[list] = [[] for _ in range(k + 1)]
    targets: dict[str, int] = {}
    for s in sets:
        t = target_level(num, s, k, alive_count[s.set_id])
        targets[s.set_id] = t
        heapq.heappush(buckets[t], s.set_id)

    frozen_sets: set[str] = set()
    frozen_elems: set[str] = set()
    exact = num.exact

    for i in range(k, -1, -1):
        bucket = buckets[i]
        while bucket:
            sid = heapq.heappop(bucket)
            if sid in frozen_sets or targets[sid] != i:
                continue  # stale entry superseded by a later recomputation
            s = by_id[sid]
            frozen_sets.add(sid)
            s.level = i
            delta = pows[i] - pk
            for e in alive_members[sid]:
                eid = e.elem_id
                if eid in frozen_elems:
                    continue
                frozen_elems.add(eid)
                e.weight = e.weight + delta
                if i != k:
                    system._move_element(e, ACTIVE, i)
                node = e.inc_head
                while node is not None:
                    other = node.set_rec
                    oid = other.set_id
                    other.weight = other.weight + delta
                    touched += 1
                    if oid != sid and oid not in frozen_sets:
                        alive_count[oid] -= 1
                        if alive_count[oid] == 0:
                            # weight is final: tight where the sweep stands, or never
                            nt = i if num.lower_ok(other.weight, other.cost) else 0
                        else:
                            nt = target_level(num, other, k, alive_count[oid])
                            # rounds above i are closed; qualifying up there
                            # implies qualifying at i, so the cap loses nothing
                            if nt > i:
                                nt = i
                        old = targets[oid]
                        if exact:
                            assert nt <= old, "target level rose during repair"
                        elif nt > old:
                            nt = old  # float jitter; targets may only sink
                        if nt != old:
                            targets[oid] = nt
                            heapq.heappush(buckets[nt], oid)
                    node = node.elem_next
            if exact:
                assert num.upper_ok(s.weight, s.cost)

    assert len(frozen_sets) == len(sets)
    assert len(frozen_elems) == len(elements)
    return touched


def rebuild(system: SetSystem, k: int, capture=None):
    """Purge and repair levels 0..k; returns (added, removed, touched).

    added/removed are the cover transitions among the affected sets, sorted
    by id; touched counts element-set incidence visits.  Postconditions: no
    dead or passive element remains at level <= k, counters for the prefix
    are reset from the new bucket sizes, and nothing at level > k moved.
    """
    num = system.num
    levels = system.levels
    L = system.config.L
    touched = 0

    live_active = []
    live_passive = []
    dead = []
    for i in range(k + 1):
        live_active.extend(levels.active[i])
        live_passive.extend(levels.passive[i])
        dead.extend(levels.dead[i])

    affected: dict[str, SetRecord] = {}
    for group in (live_active, live_passive, dead):
        for e in group:
            node = e.inc_head
            while node is not None:
                s = node.set_rec
                affected[s.set_id] = s
                touched += 1
                node = node.elem_next
    affected_sets = [affected[sid] for sid in sorted(affected)]
    for s in affected_sets:
        # an element's level is the max over its sets, so nothing here is above k
        assert s.level <= k

    # purge the deleted weight
    for e in dead:
        w = e.weight
        node = e.inc_head
        while node is not None:
            node.set_rec.weight = node.set_rec.weight - w
            touched += 1
            node = node.elem_next
        system._purge_element(e)
    system.dead_count -= len(dead)

    # strip passive weight, then lift every affected set and element to p
    p = k + 1 if k + 1 <= L else L
    zero = num.zero()
    for e in live_passive:
        w = e.weight
        node = e.inc_head
        while node is not None:
            node.set_rec.weight = node.set_rec.weight - w
            touched += 1
            node = node.elem_next
        e.weight = zero
    for s in affected_sets:
        s.level = p
    pw = num.pow_neg[p]
    for e in live_active:
        delta = pw - e.weight
        node = e.inc_head
        while node is not None:
            node.set_rec.weight = node.set_rec.weight + delta
            touched += 1
            node = node.elem_next
        e.weight = pw
        system._move_element(e, ACTIVE, p)
    for e in live_passive:
        system._move_element(e, PASSIVE, p)

    # re-feed the stripped elements, cheapest-to-activate order is by id
    live_passive.sort(key=lambda rec: rec.elem_id)
    for e in live_passive:
        room = True
        node = e.inc_head
        while node is not None:
            s = node.set_rec
            touched += 1
            if not num.le_with_slack(s.weight, s.cost - pw, s.cost):
                room = False
            node = node.elem_next
        if room:
            # every containing set can absorb a full active weight
            e.weight = pw
            node = e.inc_head
            while node is not None:
                node.set_rec.weight = node.set_rec.weight + pw
                touched += 1
                node = node.elem_next
            system._move_element(e, ACTIVE, p)
        else:
            gap = None
            node = e.inc_head
            while node is not None:
                s = node.set_rec
                g = s.cost - s.weight
                if gap is None or g < gap:
                    gap = g
                node = node.elem_next
            if num.exact:
                assert gap >= 0
            elif gap < 0.0:
                gap = 0.0
            e.weight = gap
            node = e.inc_head
            while node is not None:
                node.set_rec.weight = node.set_rec.weight + gap
                touched += 1
                node = node.elem_next

    if num.exact:
        for s in affected_sets:
            assert num.upper_ok(s.weight, s.cost)

    # keep what came out tight at p, demote the rest back to k
    retained_ids = set()
    demoted = []
    for s in affected_sets:
        if num.is_tight(s.weight, s.cost):
            retained_ids.add(s.set_id)
        else:
            s.level = k
            demoted.append(s)

    # elements pinned by no retained set follow the demotion
    dropped = []
    pk = num.pow_neg[k]
    for group in (live_active, live_passive):
        for e in group:
            anchored = False
            node = e.inc_head
            while node is not None:
                touched += 1
                if node.set_rec.set_id in retained_ids:
                    anchored = True
                node = node.elem_next
            if anchored:
                continue
            # a passive survivor filled some set to its cost, which is tight
            assert e.state == ACTIVE, "passive element lost its anchor in demotion"
            delta = pk - e.weight
            if p != k:
                system._move_element(e, ACTIVE, k)
                e.weight = pk
                node = e.inc_head
                while node is not None:
                    node.set_rec.weight = node.set_rec.weight + delta
                    touched += 1
                    node = node.elem_next
            dropped.append(e)

    entry = None
    if capture is not None:
        entry = {
            "k": k,
            "costs": {s.set_id: s.cost_exact for s in demoted},
            "entry_weights": {s.set_id: s.weight for s in demoted},
            "members": {},
        }
        alive = {s.set_id: 0 for s in demoted}
        for e in dropped:
            sids = []
            node = e.inc_head
            while node is not None:
                sids.append(node.set_rec.set_id)
                alive[node.set_rec.set_id] += 1
                node = node.elem_next
            entry["members"][e.elem_id] = tuple(sorted(sids))
        entry["alive"] = alive

    touched += fix_level(system, k, demoted, dropped)

    if capture is not None:
        pk_exact = num.pow_exact[k] if num.exact else num.pow_neg[k]
        frozen = {
            sid: entry["entry_weights"][sid] - pk_exact * entry["alive"][sid]
            for sid in entry["costs"]
        }
        capture.append(FixLevelCase(
            k=k,
            costs=entry["costs"],
            frozen=frozen,
            members=entry["members"],
            result_sets={s.set_id: (s.level, s.weight) for s in demoted},
            result_elems={
                e.elem_id: (e.level, e.weight, STATE_NAMES[e.state]) for e in dropped
            },
        ))

    # counters for the rebuilt prefix restart from the new live sizes
    counters = system.counters.values
    cum = 0
    for j in range(k + 1):
        cum += levels.active[j].size + levels.passive[j].size
        counters[j] = num.floor_times_eps(cum)

    # float drift control: put every affected weight back on its members' sum
    if not num.exact:
        for s in affected_sets:
            total = 0.0
            node = s.member_head
            while node is not None:
                total += node.elem.weight
                node = node.set_next
            s.weight = total

    added = []
    removed = []
    for s in affected_sets:
        change = system.refresh_tight(s)
        if change > 0:
            added.append(s.set_id)
        elif change < 0:
            removed.append(s.set_id)
    return added, removed, touched
