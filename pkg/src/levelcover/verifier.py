"""Exact verification oracles for the dynamic structure.

Everything here re-derives state from first principles instead of trusting
the engine's caches: invariants are checked against recomputed weights, the
optimum comes from exhaustive branch-and-bound, and the level-repair
routine is replayed by an independent synchronized-descent simulation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .model import EXACT_RATIONAL, FLOAT_TOL, Instance, SetCoverError, Snapshot

OPT_SET_LIMIT = 22


@dataclass(frozen=True)
class Violation:
    invariant: str
    entity: str
    expected: str
    actual: str


@dataclass
class VerifierReport:
    ok: bool
    violations: list = field(default_factory=list)
    ratio: Optional[object] = None
    certificate_gap: Optional[object] = None

    def lines(self) -> list:
        out = []
        if self.ok:
            out.append("ok")
        for v in self.violations:
            out.append(f"FAIL {v.invariant} {v.entity}: expected {v.expected}, got {v.actual}")
        if self.ratio is not None:
            out.append(f"ratio {float(self.ratio):.6f}")
        if self.certificate_gap is not None:
            out.append(f"certificate-gap {float(self.certificate_gap):.6g}")
        return out


def _pows(epsilon: Fraction, upto: int) -> list:
    inv = Fraction(1) / (1 + epsilon)
    table = [Fraction(1)]
    for _ in range(upto):
        table.append(table[-1] * inv)
    return table


def check_invariants(snap: Snapshot) -> VerifierReport:
    """Re-derive every structural invariant of a snapshot.

    Exact snapshots are held to zero tolerance; fast-float snapshots get the
    same relative cushion the engine itself uses.
    """
    exact = snap.numeric_mode == EXACT_RATIONAL
    eps = snap.epsilon
    L = snap.L
    pows = _pows(eps, L)
    if not exact:
        pows = [float(x) for x in pows]
    inv_base = Fraction(1) / (1 + eps) if exact else 1.0 / (1.0 + float(eps))
    bad = []

    def eq(a, b, scale) -> bool:
        if exact:
            return a == b
        return abs(a - b) <= FLOAT_TOL * max(1.0, float(scale))

    def le(a, b, scale) -> bool:
        if exact:
            return a <= b
        return a <= b + FLOAT_TOL * max(1.0, float(scale))

    for sid, s in snap.sets.items():
        if not (0 <= s.level <= L):
            bad.append(Violation("set-level-range", sid, f"level in [0, {L}]", str(s.level)))

    totals = {sid: (Fraction(0) if exact else 0.0) for sid in snap.sets}
    live_by_set = {sid: Fraction(0) if exact else 0.0 for sid in snap.sets}
    for eid, e in snap.elements.items():
        if not e.sets:
            bad.append(Violation("element-degree", eid, ">= 1 containing set", "0"))
            continue
        missing = [sid for sid in e.sets if sid not in snap.sets]
        if missing:
            bad.append(Violation("element-sets", eid, "declared sets", str(missing)))
            continue
        top = max(snap.sets[sid].level for sid in e.sets)
        if e.level != top:
            bad.append(Violation("element-level", eid,
                                 f"max containing set level {top}", str(e.level)))
        if not (0 <= e.level <= L):
            bad.append(Violation("element-level-range", eid, f"level in [0, {L}]", str(e.level)))
            continue
        cap = pows[e.level]
        if e.state == "active":
            if not eq(e.weight, cap, 1):
                bad.append(Violation("active-weight", eid,
                                     f"(1+eps)^-{e.level} = {cap}", str(e.weight)))
        else:
            if not (le(0, e.weight, 1) and le(e.weight, cap, 1)):
                bad.append(Violation("parked-weight", eid,
                                     f"within [0, (1+eps)^-{e.level}]", str(e.weight)))
        for sid in e.sets:
            totals[sid] += e.weight
            if e.state != "dead":
                live_by_set[sid] += e.weight

    tight_now = set()
    for sid, s in snap.sets.items():
        tot = totals[sid]
        if not (le(0, tot, s.cost) and le(tot, s.cost, s.cost)):
            bad.append(Violation("set-weight-window", sid,
                                 f"within [0, {s.cost}]", str(tot)))
        if not eq(tot, s.weight, s.cost):
            bad.append(Violation("set-weight-cache", sid, str(tot), str(s.weight)))
        is_tight = le(s.cost * inv_base, tot, s.cost) and le(tot, s.cost, s.cost)
        if is_tight:
            tight_now.add(sid)
        if is_tight != s.tight:
            bad.append(Violation("tight-flag", sid, str(is_tight), str(s.tight)))
        if not is_tight and s.level != 0:
            bad.append(Violation("slack-level", sid, "level 0 while slack", str(s.level)))

    if set(snap.cover) != tight_now:
        bad.append(Violation("cover-list", "-", str(sorted(tight_now)), str(sorted(snap.cover))))
    cover_cost = sum((snap.sets[sid].cost for sid in snap.cover), Fraction(0))
    if cover_cost != snap.cover_cost:
        bad.append(Violation("cover-cost", "-", str(cover_cost), str(snap.cover_cost)))

    for eid, e in snap.elements.items():
        if e.sets and not any(sid in tight_now for sid in e.sets):
            bad.append(Violation("coverage", eid,
                                 "at least one tight containing set", "none"))

    # deleted elements stay a small fraction of the active ones, per prefix
    active_prefix = [0] * (L + 1)
    dead_prefix = [0] * (L + 1)
    for e in snap.elements.values():
        if not 0 <= e.level <= L:
            continue
        if e.state == "active":
            active_prefix[e.level] += 1
        elif e.state == "dead":
            dead_prefix[e.level] += 1
    a_cum = 0
    d_cum = 0
    for j in range(L + 1):
        a_cum += active_prefix[j]
        d_cum += dead_prefix[j]
        if d_cum > 2 * eps * a_cum + 1:
            bad.append(Violation("dead-prefix", f"level<={j}",
                                 f"<= 2*eps*{a_cum} + 1", str(d_cum)))

    return VerifierReport(ok=not bad, violations=bad)


def brute_force_opt(instance: Instance):
    """Exact minimum-cost cover of a small instance.

    Branch and bound over an uncovered element with the fewest covering
    sets, seeded by a greedy bound; exact rational costs throughout.
    Returns (cost, frozenset of chosen set ids); (0, empty) when there is
    nothing to cover.  Rejects instances with more than 22 sets.
    """
    costs = {sid: Fraction(c) for sid, c in instance.costs.items()}
    if len(costs) > OPT_SET_LIMIT:
        raise SetCoverError(
            f"brute_force_opt handles at most {OPT_SET_LIMIT} sets, got {len(costs)}"
        )
    members = instance.members
    if not members:
        return Fraction(0), frozenset()

    eids = sorted(members)
    bit = {eid: 1 << i for i, eid in enumerate(eids)}
    full = (1 << len(eids)) - 1
    set_ids = sorted(costs)
    mask = {sid: 0 for sid in set_ids}
    cands = {}
    for eid, sids in members.items():
        cover = [sid for sid in sids if sid in costs]
        if not cover:
            raise SetCoverError(f"element {eid!r} cannot be covered by any declared set")
        cands[eid] = sorted(set(cover), key=lambda sid: (costs[sid], sid))
        for sid in cover:
            mask[sid] |= bit[eid]

    # greedy seed: cheapest cost per newly covered element
    covered = 0
    seed_cost = Fraction(0)
    seed_sets = []
    while covered != full:
        best = None
        for sid in set_ids:
            gain = bin(mask[sid] & ~covered).count("1")
            if gain == 0:
                continue
            score = costs[sid] / gain
            if best is None or score < best[0] or (score == best[0] and sid < best[1]):
                best = (score, sid)
        covered |= mask[best[1]]
        seed_cost += costs[best[1]]
        seed_sets.append(best[1])

    best_cost = seed_cost
    best_sets = frozenset(seed_sets)
    chosen = []

    def search(covered: int, spent: Fraction) -> None:
        nonlocal best_cost, best_sets
        if covered == full:
            best_cost = spent
            best_sets = frozenset(chosen)
            return
        pick = None
        fewest = None
        for eid in eids:
            if covered & bit[eid]:
                continue
            n = len(cands[eid])
            if fewest is None or n < fewest:
                fewest = n
                pick = eid
                if n == 1:
                    break
        for sid in cands[pick]:
            c = costs[sid]
            if spent + c < best_cost:
                chosen.append(sid)
                search(covered | mask[sid], spent + c)
                chosen.pop()

    search(0, Fraction(0))
    return best_cost, best_sets


def certify_ratio(snap: Snapshot, check_opt: Optional[bool] = None) -> VerifierReport:
    """Certify the cover of a snapshot through its packing weights.

    Checks that the live weights form a feasible packing, that they pay for
    the cover within the guaranteed factor, that dead weight stays a small
    fraction of the active weight, and, when the instance is small enough
    (or check_opt is True), that the cover cost is within (1+5*eps)*f of
    the brute-force optimum.
    """
    exact = snap.numeric_mode == EXACT_RATIONAL
    eps = snap.epsilon
    f = snap.f_obs
    bad = []

    def le(a, b, scale) -> bool:
        if exact:
            return a <= b
        return a <= b + FLOAT_TOL * max(1.0, float(scale))

    live_total = Fraction(0) if exact else 0.0
    active_total = Fraction(0) if exact else 0.0
    dead_total = Fraction(0) if exact else 0.0
    live_by_set = {sid: Fraction(0) if exact else 0.0 for sid in snap.sets}
    for eid, e in snap.elements.items():
        if e.state == "dead":
            dead_total += e.weight
            continue
        live_total += e.weight
        if e.state == "active":
            active_total += e.weight
        for sid in e.sets:
            live_by_set[sid] += e.weight

    for sid, s in snap.sets.items():
        if not le(live_by_set[sid], s.cost, s.cost):
            bad.append(Violation("packing", sid,
                                 f"live weight <= cost {s.cost}", str(live_by_set[sid])))

    cover_cost = snap.cover_cost
    factor = (1 + eps) * (1 + 2 * eps) * f
    gap = None
    if f == 0:
        if cover_cost != 0:
            bad.append(Violation("dual-lower", "-", "empty cover with no elements",
                                 str(cover_cost)))
    else:
        paid = live_total * factor
        if not le(cover_cost, paid, max(1, cover_cost)):
            bad.append(Violation("dual-lower", "-",
                                 f"cover cost <= (1+eps)(1+2eps)*f*live weight = {paid}",
                                 str(cover_cost)))
        gap = paid - cover_cost

    bound = 2 * eps * active_total + 1
    if not le(dead_total, bound, 1):
        bad.append(Violation("dead-weight", "-",
                             f"dead weight <= 2*eps*active + 1 = {bound}", str(dead_total)))

    ratio = None
    live = snap.live_instance()
    if check_opt is None:
        check_opt = len(snap.sets) <= OPT_SET_LIMIT
    if check_opt:
        opt_cost, _ = brute_force_opt(live)
        uncovered = [eid for eid, sids in live.members.items()
                     if not any(sid in snap.cover for sid in sids)]
        if uncovered:
            bad.append(Violation("cover-valid", "-", "all live elements covered",
                                 str(uncovered[:5])))
        limit = (1 + 5 * eps) * f * opt_cost
        if cover_cost > limit:
            bad.append(Violation("opt-ratio", "-",
                                 f"cover cost <= (1+5*eps)*f*OPT = {limit}", str(cover_cost)))
        if opt_cost > 0:
            ratio = Fraction(cover_cost) / opt_cost
        elif cover_cost > 0:
            bad.append(Violation("opt-ratio", "-", "zero cover on empty instance",
                                 str(cover_cost)))

    return VerifierReport(ok=not bad, violations=bad, ratio=ratio, certificate_gap=gap)


def reference_fix_level(epsilon, k: int, costs: dict, members: dict, frozen: dict):
    """Independent replay of the level repair by synchronized descent.

    costs maps set id to cost; members maps each repair element to its
    containing set ids (all of which must appear in costs); frozen maps set
    id to the weight contributed by elements outside the repair.  Every
    repair element starts active at level k with weight (1+eps)^-k.  Returns
    ({set id: (level, weight)}, {elem id: (level, weight, state)}); exact
    rational arithmetic throughout.
    """
    eps = Fraction(epsilon)
    base = 1 + eps
    pows = _pows(eps, k)
    thresholds = {sid: Fraction(c) / base for sid, c in costs.items()}

    members_of = {sid: [] for sid in costs}
    for eid, sids in members.items():
        if not sids:
            raise SetCoverError(f"repair element {eid!r} belongs to no set")
        for sid in sids:
            if sid not in costs:
                raise SetCoverError(f"repair element {eid!r} references unknown set {sid!r}")
            members_of[sid].append(eid)

    weight = {eid: pows[k] for eid in members}
    elem_level = {eid: k for eid in members}
    set_level = {sid: k for sid in costs}
    total = {sid: Fraction(frozen.get(sid, 0)) + pows[k] * len(members_of[sid])
             for sid in costs}

    descending_sets = set(costs)
    descending_elems = set(members)
    for t in range(k, 0, -1):
        newly_tight = [sid for sid in descending_sets if total[sid] >= thresholds[sid]]
        for sid in newly_tight:
            descending_sets.discard(sid)
            for eid in members_of[sid]:
                descending_elems.discard(eid)
        if not descending_sets:
            break
        if not descending_elems:
            for sid in descending_sets:
                set_level[sid] = 0
            descending_sets.clear()
            break
        for sid in descending_sets:
            set_level[sid] = t - 1
        for eid in descending_elems:
            old = weight[eid]
            new = old * base
            weight[eid] = new
            elem_level[eid] = t - 1
            delta = new - old
            for sid in members[eid]:
                total[sid] += delta

    set_out = {sid: (set_level[sid], total[sid]) for sid in costs}
    elem_out = {eid: (elem_level[eid], weight[eid], "active") for eid in members}
    return set_out, elem_out
