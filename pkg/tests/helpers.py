"""Test utilities: naive oracles, instance generators, white-box configs."""

from fractions import Fraction
from itertools import combinations

from levelcover.model import (
    EXACT_RATIONAL,
    Instance,
    SystemConfig,
    level_cap,
)


def unchecked_config(epsilon, C=1, n_max=4, mode=EXACT_RATIONAL) -> SystemConfig:
    """Build a SystemConfig without boundary validation.

    Several documented worked examples use eps exactly at the open-interval
    boundary that create() rejects; their arithmetic is still well defined,
    so white-box tests replay them through a directly constructed config.
    """
    eps = Fraction(epsilon)
    cap = Fraction(C)
    return SystemConfig(eps, cap, n_max, level_cap(eps, cap, n_max), mode)


def naive_opt(instance: Instance):
    """Exhaustive minimum set cover over all subsets; cross-check oracle.

    Deliberately structure-free: tries every one of the 2^m subsets in
    ascending size and keeps the cheapest feasible one.  Returns
    (Fraction cost, frozenset of set ids); (0, empty) with nothing to cover.
    """
    members = {eid: sids for eid, sids in instance.members.items()}
    if not members:
        return Fraction(0), frozenset()
    set_ids = sorted(instance.costs)
    best_cost = None
    best_pick = None
    for r in range(len(set_ids) + 1):
        for combo in combinations(set_ids, r):
            chosen = set(combo)
            if not all(any(sid in chosen for sid in sids) for sids in members.values()):
                continue
            cost = sum((Fraction(instance.costs[sid]) for sid in combo), Fraction(0))
            if best_cost is None or cost < best_cost:
                best_cost = cost
                best_pick = frozenset(combo)
    if best_cost is None:
        raise ValueError("instance has an uncoverable element")
    return best_cost, best_pick


def random_instance(rng, m: int, n: int, f: int, C=Fraction(1)) -> Instance:
    """Random instance with costs in [1/C, 1] (hundredths) and degrees in [1, f]."""
    C = Fraction(C)
    floor = Fraction(100) / C
    low = int(floor) if floor == int(floor) else int(floor) + 1
    set_ids = [f"s{i}" for i in range(1, m + 1)]
    costs = {sid: Fraction(rng.randint(low, 100), 100) for sid in set_ids}
    members = {
        f"e{j}": tuple(rng.sample(set_ids, rng.randint(1, min(f, m))))
        for j in range(1, n + 1)
    }
    return Instance(costs=costs, members=members)


def apply_stream(engine, events, implicit: bool = False):
    """Replay stream events on an engine; returns [(event, diff-or-None)]."""
    out = []
    for ev in events:
        if ev.kind == "declare-set":
            engine.declare_set(ev.set_id, ev.cost)
            out.append((ev, None))
        elif ev.kind == "insert":
            if implicit:
                for sid in ev.sets:
                    if sid not in engine.system.sets:
                        engine.declare_set(sid, 1)
            out.append((ev, engine.insert(ev.elem, ev.sets)))
        else:
            out.append((ev, engine.delete(ev.elem)))
    return out
