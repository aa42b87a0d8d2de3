"""Tests for towers of lean presheaves.

Oracle routes, written before the expected values were frozen:

* Stage k of a completion tower pins exactly the cells of joint
  degree <= k, so the stabilization degree is where the deepest
  determining datum sits: 0 for terminal-like presheaves, |C_2| = 3
  for the binary representable on its own support window, 4 on the
  window that also carries the empty ternary value, and 5 for the
  associative nerve (level one of the ternary class is the first
  level separated by identity nodes; level two then follows from
  degeneracies).
* unit_bijective_upto checks the canonical comparison map cell by
  cell, independent of the bond machinery.
* The staircase witness table is arithmetic: stage k fails to be
  n-normal exactly when some corolla with arity j >= max(k, 2) has
  j + 1 <= n, so the n-normal tail starts at stage n once n >= 3.
* Normality is monotone in n by definition, checked on a sample of
  maps as a property.
"""

import json

import pytest

from dendro.errors import InvalidStructure, WindowTooSmall
from dendro.finhtpy import SSetMap, discrete_sset
from dendro.presheaf import (
    DSpaceMap,
    LeanDSpace,
    Truncation,
    arrow_key,
    assoc_operad,
    comm_operad,
    coproduct_dspace,
    cosk_unit,
    empty_dspace,
    nerve_operad,
    representable_dspace,
    terminal_dspace,
)
from dendro.protower import (
    Tower,
    TowerMap,
    completion_tower,
    is_increasingly_normal,
    is_n_normal,
    reindex_level_represent,
    stabilization_degree,
    tower_to_json,
    _identity_dmap,
)
from dendro.trees import REDUCED_OPEN, SIZE, size

ETA = "or:*"
C2 = "or:(**)"
C3 = "or:(***)"


# ------------------------------------------------------------- oracles


def unit_bijective_upto(x, k, stage):
    """The comparison map into stage k, checked on joint degree <= k."""
    u = cosk_unit(x, k, stage)
    for c in x.trunc.objects:
        s = size(x.trunc.reps[c])
        for m in range(x.strunc + 1):
            if s + m > k:
                continue
            comp = u.comps[c].comps[m]
            image = set(comp.values())
            if len(image) != len(comp):
                return False
            if len(image) != len(stage.values[c].levels[m]):
                return False
    return True


def empty_map_to(src_tower, tgt_tower, k):
    src, tgt = src_tower.stage(k), tgt_tower.stage(k)
    return DSpaceMap(src, tgt, {
        c: SSetMap(src.values[c], tgt.values[c],
                   {m: {} for m in range(src.strunc + 1)})
        for c in src.trunc.objects
    })


@pytest.fixture(scope="module")
def win3():
    return Truncation.window(REDUCED_OPEN, SIZE, 3)


@pytest.fixture(scope="module")
def win4():
    return Truncation.window(REDUCED_OPEN, SIZE, 4)


# ----------------------------------------------------------- completion


def test_terminal_tower_is_constant(win4):
    tw = completion_tower(terminal_dspace(win4, 2), 3)
    assert stabilization_degree(tw, 3) == 0
    for k in range(3):
        st = tw.stage(k)
        assert all(
            [len(l) for l in st.values[c].levels] == [1, 1, 1]
            for c in win4.objects
        )


def test_comm_nerve_tower_constant_from_zero(win4):
    nv = nerve_operad(comm_operad(), win4, 2)
    tw = completion_tower(nv, 3)
    assert stabilization_degree(tw, 3) == 0


def test_assoc_nerve_tower_stabilizes_at_five(win4):
    nv = nerve_operad(assoc_operad(), win4, 2)
    tw = completion_tower(nv, 6)
    # joint degree 4 pins level zero only; the six orderings share all
    # their edge restrictions, so lower stages keep square families
    assert [len(l) for l in tw.stage(4).values[C3].levels] == [6, 36, 216]
    assert [len(l) for l in tw.stage(5).values[C3].levels] == [6, 6, 6]
    assert stabilization_degree(tw, 6) == 5
    assert unit_bijective_upto(nv, 6, tw.stage(6))


@pytest.fixture(scope="module")
def rep4_tower(win4):
    # one simplicial level is enough for the stabilization story and
    # keeps the early stages from enumerating huge free families
    r = representable_dspace(win4, win4.reps[C2], 1)
    return r, completion_tower(r, 4)


def test_representable_tower_stabilizes_at_its_size(win3, rep4_tower):
    r = representable_dspace(win3, win3.reps[C2], 1)
    tw = completion_tower(r, 4)
    assert stabilization_degree(tw, 4) == 3 == size(win3.reps[C2])
    # with the ternary class in the window its empty value only pins
    # down once the identity node enters, one degree later
    _, tw4 = rep4_tower
    assert stabilization_degree(tw4, 4) == 4
    assert [len(l) for l in tw4.stage(3).values[C3].levels] == [81, 81]
    assert [len(l) for l in tw4.stage(4).values[C3].levels] == [0, 0]


def test_completion_unit_reproduces_prefix(rep4_tower):
    r, tw = rep4_tower
    for k in (2, 3, 4):
        assert unit_bijective_upto(r, k, tw.stage(k)), k


def test_stages_memoized_and_guarded(win3):
    tw = completion_tower(terminal_dspace(win3, 2), 2)
    assert tw.stage(1) is tw.stage(1)
    assert tw.bond(0).source is tw.stage(1)
    assert tw.bond(0).target is tw.stage(0)
    assert tw.prefix >= 2
    with pytest.raises(InvalidStructure):
        tw.stage(-1)
    with pytest.raises(InvalidStructure):
        Tower.from_stages([terminal_dspace(win3, 2)], [None])


def test_concurrent_readers_share_stages(win3):
    from concurrent.futures import ThreadPoolExecutor

    tw = completion_tower(terminal_dspace(win3, 2), 0)
    with ThreadPoolExecutor(max_workers=4) as pool:
        got = list(pool.map(tw.stage, [3] * 8))
    assert all(st is got[0] for st in got)


# ------------------------------------------------------------ normality


def test_identity_always_normal(win4):
    t = terminal_dspace(win4, 3)
    f = _identity_dmap(t)
    assert [is_n_normal(f, n) for n in range(4)] == [True] * 4


def test_empty_to_terminal_fails_at_binary_size(win4):
    t = terminal_dspace(win4, 3)
    src = Tower.constant(empty_dspace(win4, 3))
    f = empty_map_to(src, Tower.constant(t), 0)
    # the binary fixed point sits at joint degree |C_2| = 3
    assert [is_n_normal(f, n) for n in range(4)] == [True, True, True, False]


def test_empty_to_representable_normal(win4):
    r = representable_dspace(win4, win4.reps[C2], 3)
    f = empty_map_to(Tower.constant(empty_dspace(win4, 3)),
                     Tower.constant(r), 0)
    assert all(is_n_normal(f, n) for n in range(4))


def test_n_normal_monotone(win4):
    src = Tower.constant(empty_dspace(win4, 3))
    targets = (
        terminal_dspace(win4, 3),
        representable_dspace(win4, win4.reps[C2], 3),
        representable_dspace(win4, win4.reps[C3], 3),
    )
    for t in targets:
        flags = [
            is_n_normal(empty_map_to(src, Tower.constant(t), 0), n)
            for n in range(4)
        ]
        assert all(a or not b for a, b in zip(flags, flags[1:]))


def test_n_normal_window_guards(win3, win4):
    f = _identity_dmap(terminal_dspace(win4, 2))
    with pytest.raises(WindowTooSmall):
        is_n_normal(f, 3)  # levels stop at 2
    g = _identity_dmap(terminal_dspace(win3, 4))
    with pytest.raises(WindowTooSmall):
        is_n_normal(g, 4)  # the ternary class is missing


# -------------------------------------------------- increasing normality

PREFIX = 5


@pytest.fixture(scope="module")
def win6():
    return Truncation.window(REDUCED_OPEN, SIZE, PREFIX + 1)


@pytest.fixture(scope="module")
def staircase(win6):
    """Stage k keeps a point at the edge tree and at corollas of
    arity >= k; the bonds forget the lowest corolla."""

    def stage(k):
        values = {}
        for c in win6.objects:
            t = win6.reps[c]
            keep = c == ETA or (
                len(t.vertices) == 1 and len(t.leaves) >= k
            )
            values[c] = discrete_sset([0] if keep else [], PREFIX)
        action = {}
        for cs, ct, f in win6.arrows():
            action[arrow_key(f)] = SSetMap(
                values[ct], values[cs],
                {m: {cell: 0 for cell in values[ct].levels[m]}
                 for m in range(PREFIX + 1)},
            )
        return LeanDSpace(win6, values, action)

    def bond(k, up, dn):
        return DSpaceMap(up, dn, {
            c: SSetMap(up.values[c], dn.values[c],
                       {m: {cell: 0 for cell in up.values[c].levels[m]}
                        for m in range(PREFIX + 1)})
            for c in win6.objects
        })

    return Tower(stage, bond)


def test_staircase_witness_indices(win6, staircase):
    bottoms = Tower.constant(empty_dspace(win6, PREFIX))
    fm = TowerMap(bottoms, staircase, {
        k: empty_map_to(bottoms, staircase, k) for k in range(PREFIX + 1)
    })
    rep = is_increasingly_normal(fm, PREFIX)
    assert rep["passed"]
    assert rep["witness"] == {0: 0, 1: 0, 2: 0, 3: 3, 4: 4, 5: 5}


def test_constant_normal_mono_witness_zero(win4):
    n = 3
    src = Tower.constant(empty_dspace(win4, n))
    tgt = Tower.constant(representable_dspace(win4, win4.reps[C2], n))
    fm = TowerMap(src, tgt, {
        k: empty_map_to(src, tgt, k) for k in range(n + 1)
    })
    rep = is_increasingly_normal(fm, n)
    assert rep["passed"]
    assert rep["witness"] == {0: 0, 1: 0, 2: 0, 3: 0}


def test_constant_non_normal_fails_past_defect(win4):
    n = 3
    src = Tower.constant(empty_dspace(win4, n))
    tgt = Tower.constant(terminal_dspace(win4, n))
    fm = TowerMap(src, tgt, {
        k: empty_map_to(src, tgt, k) for k in range(n + 1)
    })
    rep = is_increasingly_normal(fm, n)
    assert not rep["passed"]
    assert rep["witness"] == {0: 0, 1: 0, 2: 0, 3: None}


def test_tower_map_validates_squares(win3):
    two, _, _ = coproduct_dspace(
        terminal_dspace(win3, 2), terminal_dspace(win3, 2)
    )
    ct = Tower.constant(two)

    def endo(swap):
        comps = {}
        for c in win3.objects:
            v = two.values[c]
            comps[c] = SSetMap(v, v, {
                m: {cell: ((1 - cell[0], cell[1]) if swap else cell)
                    for cell in v.levels[m]}
                for m in range(3)
            })
        return DSpaceMap(two, two, comps)

    TowerMap(ct, ct, {0: endo(True), 1: endo(True)})
    with pytest.raises(InvalidStructure):
        TowerMap(ct, ct, {0: endo(True), 1: endo(False)})


# ------------------------------------------------------------ reindexing


def test_reindex_identity_lag_unchanged(win3):
    r = representable_dspace(win3, win3.reps[C2], 2)
    tw = completion_tower(r, 4)
    idm = [_identity_dmap(tw.stage(k)) for k in range(4)]
    out = reindex_level_represent(tw, tw, range(4), range(4), idm)
    assert all(out.maps[k] is idm[k] for k in range(4))


def test_reindex_lag_one_composes_bonds(win3):
    r = representable_dspace(win3, win3.reps[C2], 2)
    tw = completion_tower(r, 4)
    bonds = [tw.bond(k) for k in range(4)]
    out = reindex_level_represent(tw, tw, [1, 2, 3, 4], [0, 1, 2, 3], bonds)
    assert out.prefix == 3
    assert out.maps[0].source is tw.stage(1)
    assert out.maps[0].target is tw.stage(0)
    # evaluation on the prefix is untouched: stage maps are the bonds
    for k in range(4):
        assert out.maps[k] is bonds[k]


def test_reindex_rejects_bad_families(win3):
    two, _, _ = coproduct_dspace(
        terminal_dspace(win3, 2), terminal_dspace(win3, 2)
    )
    ct = Tower.constant(two)

    def endo(swap):
        comps = {}
        for c in win3.objects:
            v = two.values[c]
            comps[c] = SSetMap(v, v, {
                m: {cell: ((1 - cell[0], cell[1]) if swap else cell)
                    for cell in v.levels[m]}
                for m in range(3)
            })
        return DSpaceMap(two, two, comps)

    good = [endo(False)] * 3
    reindex_level_represent(ct, ct, range(3), range(3), good)
    with pytest.raises(InvalidStructure):
        reindex_level_represent(
            ct, ct, range(3), range(3),
            [endo(True), endo(False), endo(False)],
        )
    with pytest.raises(InvalidStructure):
        reindex_level_represent(ct, ct, [0, 0, 1], range(3), good)
    with pytest.raises(InvalidStructure):
        reindex_level_represent(ct, ct, range(2), range(3), good)


# ------------------------------------------------------------------ JSON


def test_tower_json_shape(win3):
    r = representable_dspace(win3, win3.reps[C2], 2)
    tw = completion_tower(r, 2)
    doc = json.loads(tower_to_json(tw, 2))
    assert sorted(doc) == ["bonds", "depth", "stages"]
    assert doc["depth"] == 2 and len(doc["stages"]) == 3
    assert len(doc["bonds"]) == 2
    for k, bond in enumerate(doc["bonds"]):
        up = tw.stage(k + 1)
        for c in win3.objects:
            assert [len(row) for row in bond[c]] == \
                [len(l) for l in up.values[c].levels]
    # deterministic output
    assert tower_to_json(tw, 2) == tower_to_json(tw, 2)
