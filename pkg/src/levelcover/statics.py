"""Static construction of the level partition by synchronized descent.

Every set and element starts at the top level with element weight
(1+eps)^-L.  Rounds run from L down to 1: sets that are still slack at the
start of a round descend one level, elements covered exclusively by
descending sets multiply their weight by (1+eps) and descend with them.
Anything that stops descending is frozen and never revisited.  The result
doubles as the reference oracle for the incremental level-repair routine.

All arithmetic here is exact rational regardless of the configured numeric
mode; this module is an oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .model import ConfigError, Instance, SystemConfig


@dataclass(frozen=True)
class StaticPartition:
    """Output of static_build, self-contained enough to re-check."""

    epsilon: Fraction
    L: int
    instance: Instance
    set_levels: dict     # set id -> level
    elem_levels: dict    # elem id -> level
    weights: dict        # elem id -> Fraction
    tight: tuple         # sorted ids of tight sets (the cover)

    def cover_cost(self) -> Fraction:
        return sum((self.instance.costs[sid] for sid in self.tight), Fraction(0))


def _validate_instance(instance: Instance, config: SystemConfig) -> None:
    lo = Fraction(1) / config.C
    for sid, cost in instance.costs.items():
        if not (lo <= cost <= 1):
            raise ConfigError(f"cost of set {sid!r} must lie in [{lo}, 1], got {cost}")
    if len(instance.members) > config.n_max:
        raise ConfigError(
            f"instance has {len(instance.members)} elements, capacity is {config.n_max}"
        )
    for eid, sids in instance.members.items():
        if not sids:
            raise ConfigError(f"element {eid!r} belongs to no set")
        for sid in sids:
            if sid not in instance.costs:
                raise ConfigError(f"element {eid!r} references undeclared set {sid!r}")
        if len(set(sids)) != len(sids):
            raise ConfigError(f"element {eid!r} lists a set twice")


def static_build(instance: Instance, config: SystemConfig) -> StaticPartition:
    """Build the level partition of a fixed instance from scratch."""
    _validate_instance(instance, config)
    eps = config.epsilon
    L = config.L
    base = 1 + eps
    inv = Fraction(1) / base

    costs = {sid: Fraction(c) for sid, c in instance.costs.items()}
    thresholds = {sid: c * inv for sid, c in costs.items()}
    members_of = {sid: [] for sid in costs}
    sets_of = {}
    for eid, sids in instance.members.items():
        sets_of[eid] = tuple(sids)
        for sid in sids:
            members_of[sid].append(eid)

    w0 = inv ** L
    weight = {eid: w0 for eid in sets_of}
    elem_level = {eid: L for eid in sets_of}
    set_level = {sid: L for sid in costs}
    total = {sid: w0 * len(members_of[sid]) for sid in costs}

    descending_sets = set(costs)
    descending_elems = set(sets_of)

    for t in range(L, 0, -1):
        # round-start classification: a set that reached its window freezes,
        # and so does every element it covers
        newly_tight = [sid for sid in descending_sets if total[sid] >= thresholds[sid]]
        for sid in newly_tight:
            descending_sets.discard(sid)
            for eid in members_of[sid]:
                descending_elems.discard(eid)
        if not descending_sets:
            break
        if not descending_elems:
            # weights can no longer change, so the rest fall straight to 0
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
            for sid in sets_of[eid]:
                # every set containing a descending element is itself descending
                total[sid] += delta

    tight = tuple(sorted(sid for sid in costs if total[sid] >= thresholds[sid]))
    return StaticPartition(
        epsilon=eps,
        L=L,
        instance=instance,
        set_levels=set_level,
        elem_levels=elem_level,
        weights=weight,
        tight=tight,
    )


def check_partition(partition: StaticPartition) -> list:
    """Re-derive every property of a static partition; returns violations.

    Each violation is a (check_id, entity, detail) tuple; an empty list
    means the partition passes.  All arithmetic is exact.
    """
    eps = partition.epsilon
    L = partition.L
    inv = Fraction(1) / (1 + eps)
    pows = [Fraction(1)]
    for _ in range(L):
        pows.append(pows[-1] * inv)
    inst = partition.instance
    out = []

    for eid, sids in inst.members.items():
        lvl = partition.elem_levels[eid]
        w = partition.weights[eid]
        if not (0 <= lvl <= L):
            out.append(("level-range", eid, f"element level {lvl} outside [0, {L}]"))
            continue
        if w != pows[lvl]:
            out.append(("weight-form", eid,
                        f"weight {w} != (1+eps)^-{lvl} = {pows[lvl]}"))
        top = max(partition.set_levels[sid] for sid in sids)
        if lvl != top:
            out.append(("level-max", eid,
                        f"element level {lvl} != max containing set level {top}"))
        if lvl < 1:
            out.append(("floor-level", eid, "element settled at level 0"))

    totals = {sid: Fraction(0) for sid in inst.costs}
    for eid, sids in inst.members.items():
        for sid in sids:
            totals[sid] += partition.weights[eid]
    tight_now = set()
    for sid, cost in inst.costs.items():
        tot = totals[sid]
        if not (0 <= tot <= cost):
            out.append(("weight-window", sid, f"set weight {tot} outside [0, {cost}]"))
        if tot >= cost * inv and tot <= cost:
            tight_now.add(sid)
        elif partition.set_levels[sid] != 0:
            out.append(("slack-level", sid,
                        f"slack set at level {partition.set_levels[sid]}"))
    if tight_now != set(partition.tight):
        out.append(("tight-list", "-",
                    f"recorded cover {sorted(partition.tight)} != recomputed {sorted(tight_now)}"))

    for eid, sids in inst.members.items():
        if not any(sid in tight_now for sid in sids):
            out.append(("coverage", eid, "element not covered by any tight set"))

    f = inst.frequency()
    cover_cost = sum((inst.costs[sid] for sid in tight_now), Fraction(0))
    dual = sum(partition.weights.values(), Fraction(0))
    if cover_cost > (1 + eps) * f * dual:
        out.append(("dual-bound", "-",
                    f"cover cost {cover_cost} exceeds (1+eps)*f*dual = {(1 + eps) * f * dual}"))
    return out
