"""Morphisms between trees and the two generalized Reedy structures.

A morphism is stored as a total edge assignment.  The assignment alone
determines where every vertex goes: an n-ary vertex must land on the
unique subtree of the target rooted at the image of its output edge
whose leaves are exactly the images of its input edges, a unary vertex
may alternatively collapse onto a single edge, and a stump must land on
the unique leafless branch over the image of its output.  Construction
validates this and caches the per-vertex image subtrees.
"""

from __future__ import annotations

import json
from itertools import permutations

from .errors import (
    BudgetExceeded,
    CompositionMismatch,
    InvalidStructure,
    WrongVariant,
)
from .trees import (
    REDUCED_OPEN,
    SIZE,
    WEIGHT,
    Tree,
    Vertex,
    _branches_above,
    _shape_tree,
    degree_value,
    size,
    subtree_with_leaves,
    tree_from_json,
    tree_to_json,
)

ISO = "iso"
DEGENERACY = "degeneracy"
INNER_FACE = "inner-face"
OUTER_FACE = "outer-face"
MIXED = "mixed"


class TreeMap:
    """A morphism of trees, determined by its edge assignment."""

    __slots__ = ("source", "target", "edge_map", "vertex_images", "vertex_vsets")

    def __init__(self, source: Tree, target: Tree, edge_map: dict, check=True):
        self.source = source
        self.target = target
        self.edge_map = dict(edge_map)
        if check:
            if source.variant != target.variant:
                raise WrongVariant("morphisms stay within one tree category")
            if set(self.edge_map) != set(source.edges):
                raise InvalidStructure("edge assignment must cover every edge")
            bad = [e for e, x in self.edge_map.items() if x not in target.edges]
            if bad:
                raise InvalidStructure(f"edge {bad[0]} maps outside the target")
        images = []
        vsets = []
        for v in source.vertices:
            out = self.edge_map[v.out]
            ins = [self.edge_map[x] for x in v.ins]
            if v.arity == 1 and ins[0] == out:
                # unary vertex collapsing onto an edge
                images.append(frozenset([out]))
                vsets.append(frozenset())
                continue
            if len(set(ins)) != len(ins):
                raise InvalidStructure(
                    "inputs of a vertex must map to distinct edges"
                )
            shape = subtree_with_leaves(target, out, frozenset(ins))
            if shape is None or (not shape[1] and v.arity != 1):
                raise InvalidStructure(
                    f"no target subtree rooted at {out} with leaves {sorted(ins)}"
                )
            images.append(shape[0])
            vsets.append(shape[1])
        self.vertex_images = tuple(images)
        self.vertex_vsets = tuple(vsets)

    @staticmethod
    def identity(t: Tree) -> "TreeMap":
        return TreeMap(t, t, {e: e for e in t.edges}, check=False)

    def _key(self):
        return (self.source, self.target, tuple(sorted(self.edge_map.items())))

    def __eq__(self, other):
        if not isinstance(other, TreeMap):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        pairs = ", ".join(f"{e}>{x}" for e, x in sorted(self.edge_map.items()))
        return f"TreeMap({pairs})"

    def __call__(self, e):
        return self.edge_map[e]

    def edge_image(self) -> frozenset:
        return frozenset(self.edge_map.values())

    def is_injective(self) -> bool:
        return len(self.edge_image()) == len(self.source.edges)

    def is_edge_bijective(self) -> bool:
        return self.is_injective() and len(self.source.edges) == len(
            self.target.edges
        )

    def is_iso(self) -> bool:
        return self.is_edge_bijective() and all(
            len(vs) == 1 for vs in self.vertex_vsets
        )

    def is_identity(self) -> bool:
        return self.source == self.target and all(
            e == x for e, x in self.edge_map.items()
        )


def validate(source, target, edge_map) -> bool:
    """Whether the edge assignment extends to a morphism."""
    try:
        TreeMap(source, target, edge_map)
    except (InvalidStructure, WrongVariant):
        return False
    return True


def compose(g: TreeMap, f: TreeMap) -> TreeMap:
    """g after f.  Vertex images substitute automatically."""
    if f.target != g.source:
        raise CompositionMismatch("middle objects disagree")
    edge_map = {e: g.edge_map[f.edge_map[e]] for e in f.source.edges}
    return TreeMap(f.source, g.target, edge_map)


def hom_set(s: Tree, t: Tree, budget: int = 14) -> list[TreeMap]:
    """All morphisms s -> t, enumerated by backtracking.

    The root image is chosen first; each vertex is then resolved once
    its output image is known, by running over the target subtrees
    rooted there with the right leaf count (plus the edge-collapse
    option for unary vertices).
    """
    if size(s) > budget or size(t) > budget:
        raise BudgetExceeded(f"hom_set budget {budget} exceeded")
    if s.variant != t.variant:
        raise WrongVariant("hom sets live within one tree category")
    order = s.vertex_order()
    out = []

    def extend(idx, emap):
        if idx == len(order):
            out.append(TreeMap(s, t, emap, check=False))
            return
        v = s.vertices[order[idx]]
        out_img = emap[v.out]
        if v.arity == 1:
            extend(idx + 1, {**emap, v.ins[0]: out_img})
        for edges, vs, leaves in _branches_above(t, out_img):
            if not vs or len(leaves) != v.arity:
                continue
            for perm in permutations(sorted(leaves)):
                extend(idx + 1, {**emap, **dict(zip(v.ins, perm))})

    for root_img in sorted(t.edges):
        extend(0, {s.root: root_img})
    return out


# -- classification and factorization ------------------------------------


def classify(f: TreeMap) -> str:
    """Tag as iso, inner-face, outer-face, degeneracy, or mixed."""
    if f.is_iso():
        return ISO
    if f.is_injective():
        if all(len(vs) == 1 for vs in f.vertex_vsets):
            return OUTER_FACE
        missed = f.target.edges - f.edge_image()
        if missed <= set(f.target.inner_edges()):
            return INNER_FACE
        return MIXED
    _, pos = factor_standard(f)
    return DEGENERACY if pos.is_iso() else MIXED


def factor_standard(f: TreeMap):
    """Split f as an injective map after a pure edge-collapse.

    Returns (neg, pos) with f = pos . neg, neg a composite of unary
    collapses (possibly the identity) and pos injective on edges.
    """
    if f.source.variant == REDUCED_OPEN:
        raise WrongVariant("no collapses exist without unary vertices")
    s = f.source
    parent = {e: e for e in s.edges}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, v in enumerate(s.vertices):
        if v.arity == 1 and not f.vertex_vsets[i]:
            parent[find(v.ins[0])] = find(v.out)
    cls = {e: find(e) for e in s.edges}
    verts = [
        Vertex(cls[v.out], tuple(cls[x] for x in v.ins))
        for i, v in enumerate(s.vertices)
        if not (v.arity == 1 and not f.vertex_vsets[i])
    ]
    middle = Tree(s.variant, cls[s.root], set(cls.values()), verts)
    neg = TreeMap(s, middle, cls)
    pos = TreeMap(middle, f.target, {e: f.edge_map[e] for e in middle.edges})
    return neg, pos


def factor_inner_outer(f: TreeMap):
    """Split f as a subtree inclusion after a full-image map.

    Returns (inner, outer) with f = outer . inner; the middle object is
    the union of the assigned subtrees inside the target.
    """
    if not f.is_injective():
        raise InvalidStructure("faces are injective on edges")
    r_edges = set(f.edge_image())
    r_vs = set()
    for edges, vs in zip(f.vertex_images, f.vertex_vsets):
        r_edges |= edges
        r_vs |= vs
    middle = _shape_tree(
        f.target, f.edge_map[f.source.root], r_edges, r_vs, prefer=f.source.variant
    )
    inner = TreeMap(f.source, middle, f.edge_map)
    outer = TreeMap(middle, f.target, {e: e for e in middle.edges})
    return inner, outer


# -- elementary generators ------------------------------------------------


def inner_face(t: Tree, e) -> TreeMap:
    """The face t/e -> t contracting back the inner edge e."""
    from .trees import contract_inner_edge

    contracted = contract_inner_edge(t, e)
    return TreeMap(contracted, t, {x: x for x in contracted.edges})


def collapse_unary(t: Tree, vi: int) -> TreeMap:
    """The codimension-1 collapse of the unary vertex vi, out of t."""
    v = t.vertices[vi]
    if v.arity != 1:
        raise InvalidStructure(f"vertex {vi} is not unary")
    e_in, e_out = v.ins[0], v.out
    emap = {e: (e_out if e == e_in else e) for e in t.edges}
    verts = [
        Vertex(emap[w.out], tuple(emap[x] for x in w.ins))
        for j, w in enumerate(t.vertices)
        if j != vi
    ]
    target = Tree(t.variant, t.root, t.edges - {e_in}, verts)
    return TreeMap(t, target, emap)


def degeneracies(t: Tree) -> list[TreeMap]:
    """All codimension-1 collapses out of t (one per unary vertex)."""
    return [
        collapse_unary(t, vi)
        for vi, v in enumerate(t.vertices)
        if v.arity == 1
    ]


def expansions(t: Tree) -> list[TreeMap]:
    """All codimension-1 inner faces out of t, by splitting a vertex.

    Splitting an arity-k vertex sends a chosen input subset of size
    2..k-1 to a new upper vertex; the map is the contraction of the new
    edge, realized with the identity on t's edges.
    """
    if t.variant != REDUCED_OPEN:
        raise WrongVariant("vertex splitting is computed for reduced open trees")
    out = []
    new_edge = max(t.edges) + 1
    for vi, v in enumerate(t.vertices):
        ins = sorted(v.ins)
        for mask in range(1 << len(ins)):
            up = tuple(x for i, x in enumerate(ins) if mask >> i & 1)
            if not 2 <= len(up) <= len(ins) - 1:
                continue
            low = tuple(x for x in v.ins if x not in up) + (new_edge,)
            verts = [w for j, w in enumerate(t.vertices) if j != vi]
            verts.append(Vertex(v.out, low))
            verts.append(Vertex(new_edge, up))
            target = Tree(t.variant, t.root, t.edges | {new_edge}, verts)
            out.append(TreeMap(t, target, {e: e for e in t.edges}))
    return out


# -- Reedy structures ------------------------------------------------------


class ReedyStructure:
    """Positive/negative class predicates plus a degree function."""

    def __init__(self, name, degree, positive, negative):
        self.name = name
        self.degree = degree
        self.positive = positive
        self.negative = negative

    def __repr__(self):
        return f"ReedyStructure({self.name!r})"


def _standard_negative(f):
    if f.source.variant == REDUCED_OPEN:
        return f.is_iso()
    return factor_standard(f)[1].is_iso()


STANDARD_REEDY = ReedyStructure(
    "standard",
    SIZE,
    positive=lambda f: f.is_injective(),
    negative=_standard_negative,
)

OUTER_REEDY = ReedyStructure(
    "outer",
    WEIGHT,
    positive=lambda f: classify(f) in (ISO, OUTER_FACE),
    negative=lambda f: classify(f) in (ISO, INNER_FACE),
)

REEDY_STRUCTURES = {"standard": STANDARD_REEDY, "outer": OUTER_REEDY}


def verify_reedy(structure: ReedyStructure, variant, bound, budget=14) -> dict:
    """Exhaustively check the generalized Reedy axioms below a bound.

    Verifies, over all morphisms between trees of degree <= bound:
    degree monotonicity of the two classes, existence and uniqueness up
    to unique middle isomorphism of positive-after-negative
    factorizations, and that an isomorphism fixing a positive (resp.
    negative) morphism by pre- (resp. post-) composition is the
    identity.  Returns a report with the first counterexample, if any.
    """
    from .trees import enumerate_rep_trees

    reps = enumerate_rep_trees(variant, structure.degree, bound)
    objects = list(reps.values())
    homs = {}
    for a in objects:
        for b in objects:
            homs[(a, b)] = hom_set(a, b, budget=budget)
    isos = {t: [m for m in homs[(t, t)] if m.is_iso()] for t in objects}
    report = {
        "structure": structure.name,
        "variant": variant,
        "bound": bound,
        "objects": len(objects),
        "morphisms": sum(len(v) for v in homs.values()),
        "checks": {},
        "counterexample": None,
        "passed": False,
    }

    def fail(check, info):
        report["checks"][check] = False
        report["counterexample"] = {"check": check, **info}
        return report

    def deg(t):
        return degree_value(t, structure.degree)

    for (a, b), fs in homs.items():
        for f in fs:
            pos, neg, iso = structure.positive(f), structure.negative(f), f.is_iso()
            if iso and not (pos and neg):
                return fail("classes_contain_isos", {"map": repr(f)})
            if not iso:
                if pos and not deg(a) < deg(b):
                    return fail("degree_monotonicity", {"map": repr(f)})
                if neg and not deg(a) > deg(b):
                    return fail("degree_monotonicity", {"map": repr(f)})
    report["checks"]["classes_contain_isos"] = True
    report["checks"]["degree_monotonicity"] = True

    # factorizations are compared through raw edge dictionaries; the
    # composite of valid maps is valid, so no revalidation is needed
    def comp(outer_map, inner_map):
        return {e: outer_map[x] for e, x in inner_map.items()}

    def key(emap):
        return tuple(sorted(emap.items()))

    iso_maps = {t: [m.edge_map for m in isos[t]] for t in objects}
    for (a, b), fs in homs.items():
        if not fs:
            continue
        cap = min(deg(a), deg(b))
        buckets = {}
        for m in objects:
            if deg(m) > cap:
                continue
            negs = [n for n in homs[(a, m)] if structure.negative(n)]
            poss = [p for p in homs[(m, b)] if structure.positive(p)]
            for n in negs:
                for p in poss:
                    k = key(comp(p.edge_map, n.edge_map))
                    buckets.setdefault(k, []).append((n, p, m))
        for f in fs:
            facts = buckets.get(key(f.edge_map), [])
            if not facts:
                return fail("factorization_exists", {"map": repr(f)})
            for n1, p1, m1 in facts:
                for n2, p2, m2 in facts:
                    links = sum(
                        1
                        for th in iso_maps[m1]
                        if m1 == m2
                        and comp(th, n1.edge_map) == n2.edge_map
                        and comp(p2.edge_map, th) == p1.edge_map
                    )
                    if links != 1:
                        return fail(
                            "factorization_unique",
                            {"map": repr(f), "links": links},
                        )
    report["checks"]["factorization_exists"] = True
    report["checks"]["factorization_unique"] = True

    for (a, b), fs in homs.items():
        for f in fs:
            if f.is_iso():
                continue
            if structure.positive(f):
                for th in iso_maps[a]:
                    if comp(f.edge_map, th) == f.edge_map and any(
                        e != x for e, x in th.items()
                    ):
                        return fail("iso_rigidity_positive", {"map": repr(f)})
            if structure.negative(f):
                for th in iso_maps[b]:
                    if comp(th, f.edge_map) == f.edge_map and any(
                        e != x for e, x in th.items()
                    ):
                        return fail("iso_rigidity_negative", {"map": repr(f)})
    report["checks"]["iso_rigidity_positive"] = True
    report["checks"]["iso_rigidity_negative"] = True
    report["passed"] = True
    return report


# -- serialization ---------------------------------------------------------


def map_to_json(f: TreeMap) -> str:
    doc = {
        "source": json.loads(tree_to_json(f.source)),
        "target": json.loads(tree_to_json(f.target)),
        "edge_map": {str(e): x for e, x in f.edge_map.items()},
        "vertex_map": {
            str(i): {"edges": sorted(es)} for i, es in enumerate(f.vertex_images)
        },
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def map_from_json(text: str) -> TreeMap:
    doc = json.loads(text)
    try:
        src = tree_from_json(json.dumps(doc["source"]))
        tgt = tree_from_json(json.dumps(doc["target"]))
        emap = {int(e): x for e, x in doc["edge_map"].items()}
    except KeyError as exc:
        raise InvalidStructure(f"missing field {exc}") from exc
    f = TreeMap(src, tgt, emap)
    stored = doc.get("vertex_map")
    if stored is not None:
        derived = {
            str(i): sorted(es) for i, es in enumerate(f.vertex_images)
        }
        given = {k: sorted(v["edges"]) for k, v in stored.items()}
        if given != derived:
            raise InvalidStructure("stored vertex images contradict the edge map")
    return f
