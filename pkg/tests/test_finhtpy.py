"""Tests for finite (co)limits, truncated simplicial sets, group actions.

Oracles, written before freezing expected values:

* oracle_limit filters the full cartesian product by the arrow
  constraints (no propagation, no shared code with the solver).
* oracle_colimit builds connected components of the tagged-element
  graph by breadth-first search instead of union-find.
* Simplex counts in Delta[n] come from the monotone-map binomial
  C(m+n+1, m+1); nerve counts from (k+1)^(m+1).
"""

import json
import math
import random
from itertools import product

import pytest

from dendro.errors import InvalidStructure, WindowTooSmall
from dendro.finhtpy import (
    Diagram,
    Group,
    GSSet,
    SSet,
    SSetMap,
    colimit,
    coproduct_sset,
    delta_sset,
    discrete_sset,
    eg,
    empty_gsset,
    group_from_json,
    group_to_json,
    is_n_coskeletal,
    kan_check,
    limit,
    nerve_groupoid,
    normal_mono_g,
    pi0,
    point_gsset,
    point_sset,
    product_sset,
    rlp_check,
    sset_eval,
    sset_from_json,
    sset_to_json,
    symmetric_group,
    trivial_group,
)

# ------------------------------------------------------------- oracles


def oracle_limit(d):
    objs = list(d.objects)
    out = []
    for combo in product(*(d.sets[o] for o in objs)):
        vals = dict(zip(objs, combo))
        if all(m[vals[s]] == vals[t] for s, t, m in d.arrows):
            out.append(combo)
    return sorted(out, key=repr)


def oracle_colimit_classes(d):
    nodes = [(o, x) for o in d.objects for x in d.sets[o]]
    adj = {n: set() for n in nodes}
    for s, t, m in d.arrows:
        for x, y in m.items():
            adj[(s, x)].add((t, y))
            adj[(t, y)].add((s, x))
    seen, comps = set(), []
    for n in nodes:
        if n in seen:
            continue
        comp, stack = set(), [n]
        while stack:
            c = stack.pop()
            if c in comp:
                continue
            comp.add(c)
            stack.extend(adj[c])
        seen |= comp
        comps.append(frozenset(comp))
    return comps


def random_diagram(rng):
    objs = list(range(rng.randint(1, 3)))
    sets = {o: [f"{o}x{i}" for i in range(rng.randint(1, 4))] for o in objs}
    arrows = []
    for _ in range(rng.randint(0, 4)):
        s, t = rng.choice(objs), rng.choice(objs)
        arrows.append((s, t, {x: rng.choice(sets[t]) for x in sets[s]}))
    return Diagram(objs, sets, arrows)


def monotone_count(m, n):
    return math.comb(m + n + 1, m + 1)


# ---------------------------------------------------------- (co)limits


def test_limit_frozen_examples():
    empty, _ = limit(Diagram([], {}, []))
    assert empty == [()]
    prod, proj = limit(Diagram(["a", "b"], {"a": [0, 1], "b": [0, 1, 2]}, []))
    assert len(prod) == 6
    assert proj == {"a": 0, "b": 1}
    pull, _ = limit(
        Diagram(
            ["a", "b", "c"],
            {"a": [0, 1], "b": [0, 1], "c": [0]},
            [("a", "c", {0: 0, 1: 0}), ("b", "c", {0: 0, 1: 0})],
        )
    )
    assert len(pull) == 4


def test_limit_matches_product_filter_oracle():
    rng = random.Random(47)
    for _ in range(60):
        d = random_diagram(rng)
        got, _ = limit(d)
        assert got == oracle_limit(d)


def test_colimit_frozen_examples():
    two, inj = colimit(Diagram(["a", "b"], {"a": [0, 1], "b": [0]}, []))
    assert len(two) == 3
    assert set(inj["a"].values()) | set(inj["b"].values()) == set(two)
    # span with a one-point apex glues one point of each side
    push, _ = colimit(
        Diagram(
            ["c", "a", "b"],
            {"c": [0], "a": [0, 1], "b": [0, 1, 2]},
            [("c", "a", {0: 0}), ("c", "b", {0: 0})],
        )
    )
    assert len(push) == 2 + 3 - 1
    # coequalizer of identity and a transposition
    coeq, _ = colimit(
        Diagram(
            ["x", "y"],
            {"x": [0, 1], "y": [0, 1]},
            [("x", "y", {0: 0, 1: 1}), ("x", "y", {0: 1, 1: 0})],
        )
    )
    assert len(coeq) == 1


def test_colimit_matches_component_oracle():
    rng = random.Random(53)
    for _ in range(60):
        d = random_diagram(rng)
        elements, inj = colimit(d)
        comps = oracle_colimit_classes(d)
        assert len(elements) == len(comps)
        for comp in comps:
            reps = {inj[o][x] for o, x in comp}
            assert len(reps) == 1  # one representative per component


# ------------------------------------------------------ simplicial sets


def test_sset_validation_catches_bad_faces():
    n = nerve_groupoid(1)
    bad_face = dict(n.face)
    broken = {c: c[1:] for c in n.levels[2]}
    broken[(0, 0, 1)] = (1, 1)
    bad_face[(2, 0)] = broken
    with pytest.raises(InvalidStructure):
        SSet(2, n.levels, bad_face, n.degen)


def test_sset_eval_frozen():
    d1 = delta_sset(1)
    assert len(sset_eval(d1, 2)) == 4
    assert len(sset_eval(d1, 3)) == 5
    for m in range(5):
        assert len(sset_eval(point_sset(), m)) == 1
    g1 = nerve_groupoid(1)
    for m in [3, 4]:
        assert len(sset_eval(g1, m)) == 2 ** (m + 1)


def test_sset_eval_matches_monotone_oracle():
    for n in range(3):
        dn = delta_sset(n)
        for m in range(5):
            assert len(sset_eval(dn, m)) == monotone_count(m, n)


def test_eval_above_truncation_needs_coskeletal():
    n = nerve_groupoid(1)
    flat = SSet(2, n.levels, n.face, n.degen, coskeletal=False)
    with pytest.raises(WindowTooSmall):
        sset_eval(flat, 3)


def test_eval_agrees_with_explicit_higher_truncation():
    lo = nerve_groupoid(2, trunc=2)
    hi = nerve_groupoid(2, trunc=4)
    for m in [3, 4]:
        assert len(sset_eval(lo, m)) == len(hi.levels[m])
    lo_d = delta_sset(2, trunc=2)
    hi_d = delta_sset(2, trunc=4)
    for m in [3, 4]:
        assert len(sset_eval(lo_d, m)) == len(hi_d.levels[m])


def test_nerve_counts():
    assert all(len(l) == 1 for l in nerve_groupoid(0).levels)
    assert len(nerve_groupoid(1).levels[1]) == 4
    assert len(nerve_groupoid(2).levels[2]) == 27


def _bz2_nerve():
    # one object, morphisms Z/2: 2-cells are composable pairs
    g = [0, 1]
    lv2 = [(a, b) for a in g for b in g]
    face = {
        (1, 0): {a: 0 for a in g},
        (1, 1): {a: 0 for a in g},
        (2, 0): {(a, b): b for a, b in lv2},
        (2, 1): {(a, b): (a + b) % 2 for a, b in lv2},
        (2, 2): {(a, b): a for a, b in lv2},
    }
    degen = {
        (0, 0): {0: 0},
        (1, 0): {a: (0, a) for a in g},
        (1, 1): {a: (a, 0) for a in g},
    }
    return SSet(2, [(0,), tuple(g), tuple(lv2)], face, degen)


def test_coskeletal_detection():
    for k in [1, 2]:
        n = nerve_groupoid(k)
        assert is_n_coskeletal(n, 2)
        # a unique iso between any two objects makes a cell a function
        # of its vertices, so even the 0-truncation rebuilds the nerve
        assert is_n_coskeletal(n, 1)
        assert is_n_coskeletal(n, 0)
    assert is_n_coskeletal(delta_sset(2), 2)
    assert is_n_coskeletal(delta_sset(2), 1)
    bz2 = _bz2_nerve()
    assert is_n_coskeletal(bz2, 2)
    assert not is_n_coskeletal(bz2, 1)
    # circle: one vertex, one extra loop; not recoverable from vertices
    circle = SSet(
        1,
        [(0,), (0, "loop")],
        {(1, 0): {0: 0, "loop": 0}, (1, 1): {0: 0, "loop": 0}},
        {(0, 0): {0: 0}},
    )
    assert not is_n_coskeletal(circle, 0)


def test_kan_check():
    assert kan_check(nerve_groupoid(1), 4)
    assert kan_check(nerve_groupoid(2), 3)
    assert kan_check(point_sset(), 3)
    assert kan_check(_bz2_nerve(), 3)
    assert not kan_check(delta_sset(1), 2)
    # the failure is the composition-free outer horn, not dimension 1
    assert kan_check(delta_sset(1), 1)


def test_pi0():
    assert len(pi0(point_sset())) == 1
    assert len(pi0(discrete_sset([0, 1]))) == 2
    assert len(pi0(nerve_groupoid(3))) == 1


def test_product_and_coproduct():
    p = product_sset(delta_sset(1), delta_sset(1))
    assert len(p.levels[1]) == 9
    assert len(pi0(p)) == 1
    c = coproduct_sset([point_sset(2), delta_sset(1)])
    assert len(pi0(c)) == 2
    assert len(c.levels[0]) == 3


# --------------------------------------------------------------- groups


def test_group_basics():
    s3 = symmetric_group(3)
    assert len(s3) == 6
    for a in s3.elements:
        assert s3.mult(a, s3.inverse(a)) == s3.identity
    with pytest.raises(InvalidStructure):
        Group([(1, 0)])  # no identity


def test_eg_counts_and_freeness():
    assert all(len(l) == 1 for l in eg(trivial_group()).levels)
    e2 = eg(symmetric_group(2))
    assert len(e2.levels[1]) == 4
    assert e2.is_free(1)
    assert len(e2.orbits(1)) == 2
    e3 = eg(symmetric_group(3))
    assert len(e3.levels[0]) == 6
    assert len(pi0(e3)) == 1
    for m in range(3):
        assert e3.is_free(m)


def test_normal_mono_g():
    g = symmetric_group(2)
    e = eg(g)
    empty = empty_gsset(g)
    inc = SSetMap(empty, e, {m: {} for m in range(3)})
    assert normal_mono_g(inc)
    pt = point_gsset(g)
    to_pt = SSetMap(empty, pt, {m: {} for m in range(3)})
    assert not normal_mono_g(to_pt)  # the point is a fixed point
    ident = SSetMap(e, e, {m: {c: c for c in e.levels[m]} for m in range(3)})
    assert normal_mono_g(ident)
    # collapsing EG to a constant commutes with faces but not the action
    const = SSetMap(
        e,
        e,
        {m: {c: (g.identity,) * (m + 1) for c in e.levels[m]} for m in range(3)},
    )
    with pytest.raises(InvalidStructure):
        normal_mono_g(const)
    with pytest.raises(InvalidStructure):
        normal_mono_g(SSetMap(delta_sset(1), delta_sset(1),
                              {m: {c: c for c in delta_sset(1).levels[m]}
                               for m in range(3)}))


def test_rlp_check():
    d1 = delta_sset(1)
    ident = SSetMap(d1, d1, {m: {c: c for c in d1.levels[m]} for m in range(3)})
    assert rlp_check(ident, ["boundary", "horn"], 3)
    g = symmetric_group(2)
    e = eg(g)
    pt = point_gsset(g)
    collapse = SSetMap(
        e, pt, {m: {c: (0,) * (m + 1) for c in e.levels[m]} for m in range(3)}
    )
    assert rlp_check(collapse, ["boundary"], 3)
    p = point_sset(2)
    # a 0-sphere placed against the orientation (vertex 1, then 0) has
    # no connecting edge in Delta[1], so this is not a trivial fibration
    to_point = SSetMap(d1, p, {m: {c: 0 for c in d1.levels[m]} for m in range(3)})
    assert not rlp_check(to_point, ["boundary"], 1)
    n1 = nerve_groupoid(1)
    contract = SSetMap(n1, p, {m: {c: 0 for c in n1.levels[m]} for m in range(3)})
    assert rlp_check(contract, ["boundary"], 2)
    two = discrete_sset([0, 1], trunc=2)
    split = SSetMap(two, p, {m: {c: 0 for c in two.levels[m]} for m in range(3)})
    assert not rlp_check(split, ["boundary"], 1)
    with pytest.raises(InvalidStructure):
        rlp_check(ident, ["sphere"], 1)


# -------------------------------------------------------- serialization


def test_sset_json_round_trip():
    for x in [nerve_groupoid(1), delta_sset(2), discrete_sset(["a", "b"])]:
        text = sset_to_json(x)
        back = sset_from_json(text)
        assert sset_to_json(back) == text
        assert [len(l) for l in back.levels] == [len(l) for l in x.levels]
        assert is_n_coskeletal(back, 2) == is_n_coskeletal(x, 2)
    with pytest.raises(InvalidStructure):
        sset_from_json(json.dumps({"trunc": 1}))


def test_group_json_round_trip():
    g = symmetric_group(3)
    text = group_to_json(g)
    back = group_from_json(text)
    assert group_to_json(back) == text
    assert len(back) == 6
    with pytest.raises(InvalidStructure):
        group_from_json(json.dumps({}))
