"""Verifier tests: invariant checking with planted faults, the exact optimum
oracle against exhaustive search, and the ratio certificate."""

import dataclasses
import random
from fractions import Fraction

import pytest

from levelcover.engine import DynamicCover
from levelcover.model import (
    EXACT_RATIONAL,
    ElemSnap,
    Instance,
    SetCoverError,
    SetSnap,
    Snapshot,
    SystemConfig,
)
from levelcover.streams import gen_events
from levelcover.verifier import (
    brute_force_opt,
    certify_ratio,
    check_invariants,
    reference_fix_level,
)

from helpers import naive_opt, random_instance, unchecked_config

HALF = Fraction(1, 2)


def trace_engine() -> DynamicCover:
    # one set, one element, eps=1/2 boundary config from the documented traces
    eng = DynamicCover(unchecked_config(HALF, 1, 4))
    eng.declare_set("s1", 1)
    eng.insert("e1", ["s1"])
    return eng


def with_element(snap: Snapshot, eid: str, **changes) -> Snapshot:
    elements = dict(snap.elements)
    elements[eid] = dataclasses.replace(elements[eid], **changes)
    return dataclasses.replace(snap, elements=elements)


def with_set(snap: Snapshot, sid: str, **changes) -> Snapshot:
    sets = dict(snap.sets)
    sets[sid] = dataclasses.replace(sets[sid], **changes)
    return dataclasses.replace(snap, sets=sets)


def violation_ids(snap: Snapshot, checker=check_invariants) -> set:
    report = checker(snap)
    assert not report.ok
    return {v.invariant for v in report.violations}


# -- check_invariants ---------------------------------------------------------------


def test_fresh_system_passes_vacuously():
    eng = DynamicCover(SystemConfig.create("1/4", 1, 8, EXACT_RATIONAL))
    report = check_invariants(eng.snapshot())
    assert report.ok
    assert report.violations == []
    assert report.lines() == ["ok"]


def test_post_delete_trace_state_passes():
    eng = trace_engine()
    eng.insert("e2", ["s1"])
    eng.delete("e2")
    snap = eng.snapshot()
    assert check_invariants(snap).ok
    elem = snap.elements["e1"]
    assert (elem.state, elem.level, elem.weight) == ("active", 1, Fraction(2, 3))


def test_planted_active_weight_fault_is_reported():
    eng = trace_engine()
    eng.insert("e2", ["s1"])
    eng.delete("e2")  # rebuild leaves e1 active at level 1, w=2/3
    snap = eng.snapshot()
    assert snap.elements["e1"].state == "active"
    # weight one level deeper than the element actually sits
    wrong = snap.elements["e1"].weight * Fraction(2, 3)
    ids = violation_ids(with_element(snap, "e1", weight=wrong))
    assert "active-weight" in ids


def test_planted_parked_weight_fault_is_reported():
    eng = trace_engine()
    eng.insert("e2", ["s1"])  # parks passive at weight 0
    snap = eng.snapshot()
    ids = violation_ids(with_element(snap, "e2", weight=Fraction(3, 2)))
    assert "parked-weight" in ids


def test_planted_element_level_fault_is_reported():
    snap = trace_engine().snapshot()
    lifted = snap.elements["e1"].level + 1
    ids = violation_ids(with_element(snap, "e1", level=lifted))
    assert "element-level" in ids


def test_planted_degree_and_unknown_set_faults_are_reported():
    snap = trace_engine().snapshot()
    assert "element-degree" in violation_ids(with_element(snap, "e1", sets=()))
    assert "element-sets" in violation_ids(with_element(snap, "e1", sets=("zz",)))


def test_planted_level_range_faults_are_reported():
    snap = trace_engine().snapshot()
    beyond = snap.L + 1
    assert "set-level-range" in violation_ids(with_set(snap, "s1", level=beyond))
    assert "element-level-range" in violation_ids(
        with_element(snap, "e1", level=beyond)
    )


def test_planted_set_cache_and_tight_faults_are_reported():
    snap = trace_engine().snapshot()
    ids = violation_ids(with_set(snap, "s1", weight=Fraction(1, 7)))
    assert "set-weight-cache" in ids
    ids = violation_ids(with_set(snap, "s1", tight=False))
    assert "tight-flag" in ids
    # an uncovered element follows once the lone tight set loses tightness
    ids = violation_ids(with_element(snap, "e1", weight=Fraction(0)))
    assert "coverage" in ids


def test_planted_slack_set_above_level_zero_is_reported():
    eng = trace_engine()
    eng.declare_set("s2", 1)  # never touched by an element, stays slack
    snap = eng.snapshot()
    ids = violation_ids(with_set(snap, "s2", level=2))
    assert "slack-level" in ids


def test_planted_cover_faults_are_reported():
    snap = trace_engine().snapshot()
    ids = violation_ids(dataclasses.replace(snap, cover=()))
    assert "cover-list" in ids
    ids = violation_ids(dataclasses.replace(snap, cover_cost=Fraction(7)))
    assert "cover-cost" in ids


def test_dead_prefix_budget_is_enforced():
    eps = Fraction(1, 4)
    cfg = SystemConfig.create(eps, 1, 8, EXACT_RATIONAL)
    dead = {
        f"d{i}": ElemSnap("dead", 0, Fraction(0), ("s1",)) for i in range(3)
    }
    snap = Snapshot(
        epsilon=eps,
        C=Fraction(1),
        n_max=8,
        L=cfg.L,
        numeric_mode=EXACT_RATIONAL,
        sets={"s1": SetSnap(Fraction(1), 0, Fraction(1), True)},
        elements={"e1": ElemSnap("active", 0, Fraction(1), ("s1",)), **dead},
        counters=(0,) * (cfg.L + 1),
        f_obs=1,
        op_count=4,
        cover=("s1",),
        cover_cost=Fraction(1),
    )
    # three dead against one active: 3 > 2*eps*1 + 1 = 1.5
    assert "dead-prefix" in violation_ids(snap)


# -- brute_force_opt ----------------------------------------------------------------


def test_opt_of_nothing_is_zero():
    assert brute_force_opt(Instance(costs={"s": Fraction(1)}, members={})) == (
        Fraction(0),
        frozenset(),
    )


def test_opt_single_choice():
    inst = Instance(costs={"s": Fraction(1, 2)}, members={"e": ("s",)})
    assert brute_force_opt(inst) == (Fraction(1, 2), frozenset({"s"}))


def test_opt_prefers_two_cheap_sets_over_one_expensive():
    inst = Instance(
        costs={"s1": Fraction(1), "s2": Fraction(2, 5), "s3": Fraction(2, 5)},
        members={"e1": ("s1", "s2"), "e2": ("s1", "s3")},
    )
    assert brute_force_opt(inst) == (Fraction(4, 5), frozenset({"s2", "s3"}))


def test_opt_rejects_oversized_instances():
    costs = {f"s{i}": Fraction(1) for i in range(23)}
    inst = Instance(costs=costs, members={"e": ("s0",)})
    with pytest.raises(SetCoverError, match="at most 22"):
        brute_force_opt(inst)


def test_opt_rejects_uncoverable_elements():
    inst = Instance(costs={"s": Fraction(1)}, members={"e": ("missing",)})
    with pytest.raises(SetCoverError, match="cannot be covered"):
        brute_force_opt(inst)


def test_opt_matches_exhaustive_search():
    rng = random.Random(17)
    for _ in range(200):
        m = rng.randint(1, 8)
        n = rng.randint(1, 12)
        f = rng.randint(1, min(3, m))
        inst = random_instance(rng, m=m, n=n, f=f)
        cost, chosen = brute_force_opt(inst)
        want_cost, _ = naive_opt(inst)
        assert cost == want_cost
        covered = set()
        for sid in chosen:
            covered.update(
                eid for eid, sids in inst.members.items() if sid in sids
            )
        assert covered == set(inst.members)
        assert sum(inst.costs[sid] for sid in chosen) == cost


# -- certify_ratio ------------------------------------------------------------------


def test_certificate_on_the_single_insert_trace():
    report = certify_ratio(trace_engine().snapshot())
    assert report.ok
    assert report.ratio == 1
    assert report.certificate_gap is not None


def test_certificate_on_the_empty_system():
    eng = DynamicCover(SystemConfig.create("1/4", 1, 8, EXACT_RATIONAL))
    report = certify_ratio(eng.snapshot())
    assert report.ok
    assert report.ratio is None


def test_certificate_holds_through_random_churn():
    header, events = gen_events(
        "random-churn", 2, n=40, m=12, f=3, eps=Fraction(1, 10), ops=200
    )
    eng = DynamicCover(header.config(EXACT_RATIONAL))
    cap = Fraction(3, 2) * 3  # (1 + 5*eps) * f
    steps = 0
    for ev in events:
        if ev.kind == "declare-set":
            eng.declare_set(ev.set_id, ev.cost)
            continue
        if ev.kind == "insert":
            eng.insert(ev.elem, ev.sets)
        else:
            eng.delete(ev.elem)
        report = certify_ratio(eng.snapshot())
        assert report.ok
        if report.ratio is not None:
            assert report.ratio <= cap
        steps += 1
    assert steps > 100


def test_planted_packing_violation_is_reported():
    snap = trace_engine().snapshot()
    bloated = with_element(snap, "e1", weight=Fraction(5))
    ids = violation_ids(bloated, checker=certify_ratio)
    assert "packing" in ids


def test_planted_dual_shortfall_is_reported():
    snap = trace_engine().snapshot()
    starved = with_element(snap, "e1", weight=Fraction(1, 1000))
    ids = violation_ids(starved, checker=certify_ratio)
    assert "dual-lower" in ids


def test_planted_dead_weight_excess_is_reported():
    eng = trace_engine()
    eng.insert("e2", ["s1"])
    eng.delete("e2")  # full rebuild purges; replant a heavy dead element
    snap = eng.snapshot()
    elements = dict(snap.elements)
    elements["zz"] = ElemSnap("dead", 1, Fraction(4), ("s1",))
    ids = violation_ids(
        dataclasses.replace(snap, elements=elements), checker=certify_ratio
    )
    assert "dead-weight" in ids


def test_uncovered_live_element_fails_the_certificate():
    snap = trace_engine().snapshot()
    bare = dataclasses.replace(snap, cover=(), cover_cost=Fraction(0))
    ids = violation_ids(bare, checker=certify_ratio)
    assert "cover-valid" in ids


def test_overpriced_cover_fails_the_optimum_bound():
    eps = Fraction(1, 4)
    cfg = SystemConfig.create(eps, 1, 8, EXACT_RATIONAL)
    sets = {
        sid: SetSnap(Fraction(1), 0, Fraction(1), True) for sid in ("s1", "s2", "s3")
    }
    snap = Snapshot(
        epsilon=eps,
        C=Fraction(1),
        n_max=8,
        L=cfg.L,
        numeric_mode=EXACT_RATIONAL,
        sets=sets,
        elements={"e1": ElemSnap("active", 0, Fraction(1), ("s1",))},
        counters=(0,) * (cfg.L + 1),
        f_obs=1,
        op_count=1,
        cover=("s1", "s2", "s3"),
        cover_cost=Fraction(3),
    )
    # cover pays 3 against OPT 1; the bound is (1 + 5/4) * 1 * 1 = 9/4
    ids = violation_ids(snap, checker=certify_ratio)
    assert "opt-ratio" in ids


def test_nonzero_cover_over_an_empty_instance_is_reported():
    eps = Fraction(1, 4)
    cfg = SystemConfig.create(eps, 1, 8, EXACT_RATIONAL)
    snap = Snapshot(
        epsilon=eps,
        C=Fraction(1),
        n_max=8,
        L=cfg.L,
        numeric_mode=EXACT_RATIONAL,
        sets={"s1": SetSnap(Fraction(1), 0, Fraction(1), True)},
        elements={},
        counters=(0,) * (cfg.L + 1),
        f_obs=1,
        op_count=1,
        cover=("s1",),
        cover_cost=Fraction(1),
    )
    ids = violation_ids(snap, checker=certify_ratio)
    assert "opt-ratio" in ids


# -- reference_fix_level preconditions ------------------------------------------------


def test_reference_rejects_orphan_repair_elements():
    with pytest.raises(SetCoverError, match="belongs to no set"):
        reference_fix_level(HALF, 3, {"s": Fraction(1)}, {"e": ()}, {})
    with pytest.raises(SetCoverError, match="unknown set"):
        reference_fix_level(HALF, 3, {"s": Fraction(1)}, {"e": ("zz",)}, {})
