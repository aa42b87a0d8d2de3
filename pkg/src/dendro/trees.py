"""Finite rooted non-planar trees and the four tree-category variants.

A tree is stored as a set of edge ids, a root edge, and a tuple of
vertices, each vertex recording its output edge (towards the root) and
the tuple of its input edges (away from the root).  Input order is kept
for bookkeeping but is never semantically significant: isomorphism,
canonical codes and automorphisms all treat inputs as a multiset.

Variants:
  ``g``   general trees (stumps and unary vertices allowed)
  ``o``   open trees (no stumps)
  ``cl``  closed trees (no leaves: every top edge capped by a stump)
  ``or``  reduced open trees (no stumps, no unary vertices)
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import permutations, product as iproduct

from .errors import (
    InvalidStructure,
    LeafNotFound,
    NotInnerEdge,
    WrongVariant,
)

GENERAL = "g"
OPEN = "o"
CLOSED = "cl"
REDUCED_OPEN = "or"
VARIANTS = (GENERAL, OPEN, CLOSED, REDUCED_OPEN)

SIZE = "size"
WEIGHT = "weight"
DEGREES = (SIZE, WEIGHT)


@dataclass(frozen=True)
class Vertex:
    """One vertex: output edge below, tuple of input edges above."""

    out: int
    ins: tuple[int, ...]

    @property
    def arity(self) -> int:
        return len(self.ins)


class Tree:
    """A finite rooted tree tagged with a category variant.

    Edge ids are arbitrary integers.  Structural invariants are checked
    on construction: every non-root edge is the input of exactly one
    vertex, every edge is the output of at most one vertex, everything
    is reachable from the root, and the variant constraints hold.
    """

    __slots__ = (
        "variant",
        "root",
        "edges",
        "vertices",
        "_above",
        "_below",
        "_leaves",
        "_code",
        "_branch_cache",
    )

    def __init__(self, variant, root, edges, vertices, check=True):
        if variant not in VARIANTS:
            raise WrongVariant(f"unknown variant {variant!r}")
        self.variant = variant
        self.root = root
        self.edges = frozenset(edges)
        self.vertices = tuple(
            v if isinstance(v, Vertex) else Vertex(v[0], tuple(v[1]))
            for v in vertices
        )
        above = {}
        below = {}
        for i, v in enumerate(self.vertices):
            if v.out in above:
                raise InvalidStructure(f"edge {v.out} is the output of two vertices")
            above[v.out] = i
            for e in v.ins:
                if e in below:
                    raise InvalidStructure(f"edge {e} is the input of two vertices")
                below[e] = i
        self._above = above
        self._below = below
        self._leaves = tuple(sorted(e for e in self.edges if e not in above))
        self._code = None
        self._branch_cache = None
        if check:
            self._check()

    def _check(self):
        if self.root not in self.edges:
            raise InvalidStructure("root is not an edge")
        if self.root in self._below:
            raise InvalidStructure("root edge must not be a vertex input")
        for v in self.vertices:
            for e in (v.out,) + v.ins:
                if e not in self.edges:
                    raise InvalidStructure(f"vertex uses unknown edge {e}")
            if len(set(v.ins)) != len(v.ins):
                raise InvalidStructure("vertex has a repeated input edge")
        for e in self.edges:
            if e != self.root and e not in self._below:
                raise InvalidStructure(f"edge {e} is neither root nor a vertex input")
        # reachability from the root implies connectedness and acyclicity
        seen = set()
        stack = [self.root]
        while stack:
            e = stack.pop()
            if e in seen:
                raise InvalidStructure("cycle through edge %r" % e)
            seen.add(e)
            vi = self._above.get(e)
            if vi is not None:
                stack.extend(self.vertices[vi].ins)
        if seen != self.edges:
            raise InvalidStructure("tree is not connected")
        if self.variant in (OPEN, REDUCED_OPEN) and any(
            v.arity == 0 for v in self.vertices
        ):
            raise WrongVariant("open trees admit no stumps")
        if self.variant == REDUCED_OPEN and any(
            v.arity == 1 for v in self.vertices
        ):
            raise WrongVariant("reduced open trees admit no unary vertices")
        if self.variant == CLOSED and self._leaves:
            raise WrongVariant("closed trees admit no leaves")

    # -- basic structure ------------------------------------------------

    def above(self, e):
        """Index of the vertex whose output is e, or None (e is a leaf)."""
        return self._above.get(e)

    def below(self, e):
        """Index of the vertex having e as an input, or None (e is the root)."""
        return self._below.get(e)

    @property
    def leaves(self) -> tuple[int, ...]:
        return self._leaves

    def inner_edges(self) -> tuple[int, ...]:
        """Edges with a vertex on both sides."""
        return tuple(
            sorted(e for e in self.edges if e in self._above and e in self._below)
        )

    def is_stump(self, vi: int) -> bool:
        return self.vertices[vi].arity == 0

    def vertex_order(self) -> tuple[int, ...]:
        """Vertex indices ordered so each vertex follows the one below it."""
        order = []
        stack = [self.root]
        while stack:
            e = stack.pop()
            vi = self._above.get(e)
            if vi is not None:
                order.append(vi)
                stack.extend(reversed(self.vertices[vi].ins))
        return tuple(order)

    def edges_above(self, e) -> frozenset:
        """Edges strictly above e."""
        out = set()
        vi = self._above.get(e)
        stack = list(self.vertices[vi].ins) if vi is not None else []
        while stack:
            x = stack.pop()
            out.add(x)
            wi = self._above.get(x)
            if wi is not None:
                stack.extend(self.vertices[wi].ins)
        return frozenset(out)

    def _struct_key(self):
        return (
            self.variant,
            self.root,
            self.edges,
            frozenset((v.out, tuple(sorted(v.ins))) for v in self.vertices),
        )

    def __eq__(self, other):
        if not isinstance(other, Tree):
            return NotImplemented
        return self._struct_key() == other._struct_key()

    def __hash__(self):
        return hash(self._struct_key())

    def __repr__(self):
        return f"Tree({self.variant!r}, code={canonical_code(self)!r})"


# -- constructors -------------------------------------------------------


def eta(variant=REDUCED_OPEN) -> Tree:
    """The tree with a single edge and no vertices."""
    if variant == CLOSED:
        raise WrongVariant("the edge tree is not closed")
    return Tree(variant, 0, [0], [])


def corolla(n: int, variant=None) -> Tree:
    """One vertex with n inputs; edge 0 is the root, 1..n the inputs."""
    if variant is None:
        variant = REDUCED_OPEN if n >= 2 else OPEN if n == 1 else GENERAL
    return Tree(variant, 0, range(n + 1), [Vertex(0, tuple(range(1, n + 1)))])


def linear(n: int, variant=OPEN) -> Tree:
    """The linear tree with n unary vertices (the simplex [n] as a tree)."""
    return Tree(
        variant,
        0,
        range(n + 1),
        [Vertex(i, (i + 1,)) for i in range(n)],
    )


# -- degree functions ---------------------------------------------------


def size(t: Tree) -> int:
    """Number of non-root edges plus number of vertices."""
    return len(t.edges) - 1 + len(t.vertices)


def weight(t: Tree) -> int:
    """Twice the leaf count minus the vertex count (reduced open trees)."""
    if t.variant != REDUCED_OPEN:
        raise WrongVariant("weight is graded on reduced open trees only")
    return 2 * len(t.leaves) - len(t.vertices)


def degree_value(t: Tree, degree: str) -> int:
    if degree == SIZE:
        return size(t)
    if degree == WEIGHT:
        return weight(t)
    raise ValueError(f"unknown degree {degree!r}")


# -- canonical codes ----------------------------------------------------


def _edge_codes(t: Tree) -> dict:
    """AHU-style shape code for the branch above each edge.

    A leaf is '*', a stump above an edge is '()', otherwise the sorted
    concatenation of the input codes in parentheses.  Equal codes on two
    edges mean the branches above them are isomorphic.
    """
    codes = {}

    def walk(e):
        if e in codes:
            return codes[e]
        vi = t.above(e)
        if vi is None:
            c = "*"
        else:
            c = "(" + "".join(sorted(walk(x) for x in t.vertices[vi].ins)) + ")"
        codes[e] = c
        return c

    walk(t.root)
    for e in t.edges:
        walk(e)
    return codes


def canonical_code(t: Tree) -> str:
    """Variant-tagged canonical code; equal codes iff isomorphic trees."""
    if t._code is None:
        t._code = f"{t.variant}:{_edge_codes(t)[t.root]}"
    return t._code


def canonicalize(t: Tree):
    """Relabel edges 0..n-1 in code-sorted DFS order.

    Returns (canonical tree, edge map old id -> new id).  Isomorphic
    inputs produce identical canonical trees.
    """
    codes = _edge_codes(t)
    relab = {}
    verts = []
    counter = [0]

    def visit(e):
        relab[e] = counter[0]
        counter[0] += 1
        vi = t.above(e)
        if vi is None:
            return
        ins = sorted(t.vertices[vi].ins, key=lambda x: codes[x])
        slot = len(verts)
        verts.append(None)
        for x in ins:
            visit(x)
        verts[slot] = Vertex(relab[e], tuple(relab[x] for x in ins))

    visit(t.root)
    out = Tree(t.variant, 0, range(len(relab)), verts)
    return out, relab


def isomorphic(a: Tree, b: Tree) -> bool:
    return canonical_code(a) == canonical_code(b)


def automorphisms(t: Tree) -> list[dict]:
    """All edge permutations preserving the tree structure.

    Matches input branches with equal codes in every possible way, so
    the count is the product over vertices of factorials of the sizes
    of equal-branch groups, combined along the nesting.
    """
    codes = _edge_codes(t)

    def match(e1, e2):
        vi1, vi2 = t.above(e1), t.above(e2)
        if vi1 is None:
            yield {e1: e2}
            return
        ins1 = list(t.vertices[vi1].ins)
        ins2 = list(t.vertices[vi2].ins)
        groups = {}
        for x in ins1:
            groups.setdefault(codes[x], [[], []])[0].append(x)
        for x in ins2:
            groups[codes[x]][1].append(x)

        def combine(group_list):
            if not group_list:
                yield {e1: e2}
                return
            (src, dst), rest = group_list[0], group_list[1:]
            for target in permutations(dst):
                blocks = [list(match(a, b)) for a, b in zip(src, target)]
                if any(not blk for blk in blocks):
                    continue
                for tail in combine(rest):
                    for parts in iproduct(*blocks):
                        m = dict(tail)
                        for p in parts:
                            m.update(p)
                        yield m

        yield from combine(list(groups.values()))

    return [m for m in match(t.root, t.root)]


# -- operations ---------------------------------------------------------


def graft(s: Tree, leaf: int, t: Tree) -> Tree:
    return graft_with_embeddings(s, leaf, t)[0]


def graft_with_embeddings(s: Tree, leaf: int, t: Tree):
    """Glue the root of t onto a leaf of s.

    Returns (tree, embedding of s edges, embedding of t edges); the two
    embeddings agree on the identified edge.
    """
    if s.variant != t.variant:
        raise WrongVariant(f"cannot graft {t.variant!r} onto {s.variant!r}")
    if leaf not in s.leaves:
        raise LeafNotFound(f"edge {leaf} is not a leaf of the base tree")
    offset = max(s.edges | t.edges) + 1
    tmap = {e: e + offset for e in t.edges}
    tmap[t.root] = leaf
    smap = {e: e for e in s.edges}
    verts = list(s.vertices) + [
        Vertex(tmap[v.out], tuple(tmap[x] for x in v.ins)) for v in t.vertices
    ]
    edges = set(smap.values()) | set(tmap.values())
    return Tree(s.variant, s.root, edges, verts), smap, tmap


def split_at(t: Tree, e: int):
    """Cut t at an inner edge e into a lower and an upper subtree.

    Returns (lower, upper); the lower tree has e as a leaf, the upper
    has e as its root, and both reuse the edge ids of t.  Closed trees
    do not split: the lower piece would have a leaf.
    """
    if t.variant == CLOSED:
        raise WrongVariant("closed trees do not decompose by grafting")
    if t.above(e) is None or t.below(e) is None:
        raise NotInnerEdge(f"edge {e} is not inner")
    up_edges = {e} | t.edges_above(e)
    up_vs = [v for v in t.vertices if v.out in up_edges]
    low_vs = [v for v in t.vertices if v.out not in up_edges]
    low_edges = (t.edges - up_edges) | {e}
    lower = Tree(t.variant, t.root, low_edges, low_vs)
    upper = Tree(t.variant, e, up_edges, up_vs)
    return lower, upper


def contract_inner_edge(t: Tree, e: int) -> Tree:
    """Merge the two vertices adjacent to the inner edge e.

    The edge must have vertices on both sides and the upper vertex must
    not be a stump.  Leaves are unchanged and the vertex count drops by
    one, so on reduced open trees the weight rises by one.
    """
    ti, bi = t.above(e), t.below(e)
    if ti is None or bi is None:
        raise NotInnerEdge(f"edge {e} is not inner")
    top, bot = t.vertices[ti], t.vertices[bi]
    if top.arity == 0:
        raise NotInnerEdge(f"edge {e} is the output of a stump")
    ins = []
    for x in bot.ins:
        if x == e:
            ins.extend(top.ins)
        else:
            ins.append(x)
    merged = Vertex(bot.out, tuple(ins))
    verts = [v for i, v in enumerate(t.vertices) if i not in (ti, bi)] + [merged]
    return Tree(t.variant, t.root, t.edges - {e}, verts)


def reduce_tree(t: Tree):
    """Remove all unary vertices of an open tree.

    Returns (reduced open tree, edge quotient map).  Each maximal chain
    of edges through unary vertices collapses to its lowest edge.
    """
    if t.variant not in (OPEN, REDUCED_OPEN):
        raise WrongVariant("reduction is defined for open trees")
    parent = {e: e for e in t.edges}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for v in t.vertices:
        if v.arity == 1:
            # collapse the input onto the output edge
            parent[find(v.ins[0])] = find(v.out)
    quotient = {e: find(e) for e in t.edges}
    verts = [
        Vertex(quotient[v.out], tuple(quotient[x] for x in v.ins))
        for v in t.vertices
        if v.arity != 1
    ]
    out = Tree(REDUCED_OPEN, quotient[t.root], set(quotient.values()), verts)
    return out, quotient


def closure(t: Tree) -> Tree:
    """Cap every leaf with a stump, yielding a closed tree."""
    if any(v.arity == 0 for v in t.vertices):
        raise WrongVariant("closure expects a tree without stumps")
    verts = list(t.vertices) + [Vertex(e, ()) for e in t.leaves]
    return Tree(CLOSED, t.root, t.edges, verts)


# -- subtrees -----------------------------------------------------------


def _branches_above(t: Tree, e):
    """All subtree shapes rooted at e, as (edges, vertex indices, leaves)."""
    if t._branch_cache is None:
        t._branch_cache = {}
    cached = t._branch_cache.get(e)
    if cached is not None:
        return cached
    shapes = [(frozenset([e]), frozenset(), frozenset([e]))]
    vi = t.above(e)
    if vi is not None:
        parts = [_branches_above(t, x) for x in t.vertices[vi].ins]
        for combo in iproduct(*parts):
            edges = frozenset([e]).union(*(c[0] for c in combo)) if combo else frozenset([e])
            vs = frozenset([vi]).union(*(c[1] for c in combo)) if combo else frozenset([vi])
            lv = frozenset().union(*(c[2] for c in combo)) if combo else frozenset()
            shapes.append((edges, vs, lv))
    t._branch_cache[e] = shapes
    return shapes


def subtree_with_leaves(t: Tree, root_edge: int, leaf_set: frozenset):
    """The unique subtree with the given root and exact leaf set, or None."""
    if root_edge in leaf_set:
        return (frozenset([root_edge]), frozenset(), frozenset([root_edge])) if leaf_set == {root_edge} else None
    edges = {root_edge}
    vs = set()
    stack = [root_edge]
    found = set()
    while stack:
        e = stack.pop()
        if e in leaf_set:
            found.add(e)
            continue
        vi = t.above(e)
        if vi is None:
            return None
        vs.add(vi)
        for x in t.vertices[vi].ins:
            edges.add(x)
            stack.append(x)
    if found != set(leaf_set):
        return None
    return frozenset(edges), frozenset(vs), frozenset(leaf_set)


def _shape_tree(t: Tree, root_edge, edges, vs, prefer=None) -> Tree:
    """Wrap a subtree shape as a Tree, choosing the tightest variant."""
    verts = [t.vertices[i] for i in sorted(vs)]
    has_stump = any(v.arity == 0 for v in verts)
    has_unary = any(v.arity == 1 for v in verts)
    above = {v.out for v in verts}
    has_leaf = any(e not in above for e in edges)
    prefer = prefer or t.variant
    for variant in (prefer, REDUCED_OPEN, OPEN, CLOSED, GENERAL):
        if variant == REDUCED_OPEN and (has_stump or has_unary):
            continue
        if variant == OPEN and has_stump:
            continue
        if variant == CLOSED and has_leaf:
            continue
        return Tree(variant, root_edge, edges, verts)
    raise WrongVariant("unreachable")


def subtrees(t: Tree):
    """All subtrees, each as (Tree, edge inclusion map into t)."""
    out = []
    for root_edge in sorted(t.edges):
        for edges, vs, _ in _branches_above(t, root_edge):
            sub = _shape_tree(t, root_edge, edges, vs)
            out.append((sub, {e: e for e in edges}))
    return out


# -- serialization ------------------------------------------------------


def tree_to_json(t: Tree) -> str:
    doc = {
        "variant": t.variant,
        "root": t.root,
        "edges": sorted(t.edges),
        "vertices": [
            {"out": v.out, "in": list(v.ins)} for v in t.vertices
        ],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def tree_from_json(text: str) -> Tree:
    doc = json.loads(text)
    try:
        return Tree(
            doc["variant"],
            doc["root"],
            doc["edges"],
            [(v["out"], tuple(v["in"])) for v in doc["vertices"]],
        )
    except KeyError as exc:
        raise InvalidStructure(f"missing field {exc}") from exc


def tree_to_dot(t: Tree) -> str:
    """Graphviz source: root at the bottom, stumps drawn square."""
    lines = ["digraph tree {", "  rankdir=BT;", '  node [shape=circle];']
    for i, v in enumerate(t.vertices):
        shape = "square" if v.arity == 0 else "circle"
        lines.append(f'  v{i} [label="v{i}" shape={shape}];')
    lines.append('  root [shape=point];')

    def endpoint_below(e):
        bi = t.below(e)
        return "root" if bi is None else f"v{bi}"

    for e in sorted(t.edges):
        ai = t.above(e)
        if ai is None:
            lines.append(f'  l{e} [shape=point];')
            top = f"l{e}"
        else:
            top = f"v{ai}"
        lines.append(f'  {top} -> {endpoint_below(e)} [label="{e}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- enumeration --------------------------------------------------------


def _arity_range(variant, cap):
    lo = {GENERAL: 0, OPEN: 1, CLOSED: 1, REDUCED_OPEN: 2}[variant]
    return range(lo, cap + 1)


def enumerate_rep_trees(variant, degree, bound, max_arity=None) -> dict:
    """Canonical representatives of all iso classes with degree <= bound.

    Returns an ordered dict code -> canonical Tree.  Enumeration grows
    trees by grafting corollas onto leaves, which reaches every class
    because both degree functions rise strictly under grafting.
    """
    if degree == WEIGHT and variant != REDUCED_OPEN:
        raise WrongVariant("weight enumeration needs reduced open trees")
    if variant == CLOSED:
        if degree != SIZE:
            raise WrongVariant("closed trees are graded by size")
        found = {}
        inner = enumerate_rep_trees(OPEN, SIZE, max(bound - 1, 0), max_arity)
        for t in inner.values():
            c = closure(t)
            if size(c) <= bound:
                found[canonical_code(c)] = c
        return dict(sorted(found.items()))

    base = eta(variant)
    if degree_value(base, degree) > bound:
        return {}
    found = {canonical_code(base): base}
    frontier = [base]
    while frontier:
        t = frontier.pop()
        cur = degree_value(t, degree)
        if degree == SIZE:
            cap = bound - cur - 1
        else:
            cap = (bound - cur + 3) // 2
        if max_arity is not None:
            cap = min(cap, max_arity)
        for k in _arity_range(variant, cap):
            piece = corolla(k, variant)
            for leaf in t.leaves:
                g = graft(t, leaf, piece)
                if degree_value(g, degree) > bound:
                    continue
                code = canonical_code(g)
                if code not in found:
                    canon, _ = canonicalize(g)
                    found[code] = canon
                    frontier.append(canon)
    return dict(sorted(found.items()))


def enumerate_trees(variant, degree, bound, max_arity=None) -> list[str]:
    """Sorted canonical codes of all iso classes with degree <= bound."""
    return list(enumerate_rep_trees(variant, degree, bound, max_arity))
