"""Arity filtration of the reduced-open tree category.

The full subcategory of trees whose vertices all have at most n inputs
sits inside the next stage in two steps: first add the single corolla
with n+1 inputs (the "plus" window), then everything else.  Presheaves
extend back up the filtration by right Kan extension, and for trees the
extensions have closed forms: over the arity-n subcategory the value at
T is a product over the maximal admissible subtrees of T, and over the
plus window it is an iterated fiber product of the pieces obtained by
cutting T at the inner edges touching an arity-n vertex.  Both closed
forms are kept strictly separate from the generic comma-category limit
so they can be played against each other.

Reedy-style extension by a single corolla (value, attaching map from
the latching object, and a map to the matching object) lives here too,
together with the downwards-closure report that justifies restricting
latching and matching objects to a smaller window.
"""

import itertools
from dataclasses import dataclass

from .category import OUTER_REEDY, REEDY_STRUCTURES
from .category import TreeMap, compose, factor_inner_outer, hom_set
from .errors import InvalidStructure, WindowTooSmall, WrongVariant
from .finhtpy import Diagram, SSet, SSetMap, colimit
from .presheaf import (
    LeanDSpace,
    Truncation,
    _comp_edges,
    _edge_key,
    _eval_nodes,
    _family_sset,
    arrow_key,
    latching,
    matching,
    restrict_dspace,
)
from .trees import (
    REDUCED_OPEN,
    SIZE,
    Tree,
    canonical_code,
    canonicalize,
    corolla,
    degree_value,
    enumerate_rep_trees,
    eta,
    tree_to_json,
)


def _require_reduced(t: Tree):
    if t.variant != REDUCED_OPEN:
        raise WrongVariant("the arity filtration lives on reduced-open trees")


def _max_arity(t: Tree) -> int:
    return max((v.arity for v in t.vertices), default=0)


# --------------------------------------------------------- subcategories


@dataclass(frozen=True)
class AritySubcat:
    """The trees whose vertices all have at most n inputs.

    With plus set, the (n+1)-corolla is adjoined as the single extra
    object.  The n = 1 stage contains only the edge tree.
    """

    n: int
    plus: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise InvalidStructure("arity stages start at n = 1")

    @property
    def plus_code(self) -> str:
        return canonical_code(corolla(self.n + 1))

    def admits(self, t: Tree) -> bool:
        _require_reduced(t)
        if _max_arity(t) <= self.n:
            return True
        return self.plus and canonical_code(t) == self.plus_code

    def select(self, trunc: Truncation) -> Truncation:
        """The full subwindow of an ambient window this stage admits."""
        codes = [c for c in trunc.objects if self.admits(trunc.reps[c])]
        if self.plus and self.plus_code not in codes:
            raise WindowTooSmall(
                f"ambient window lacks the plus corolla {self.plus_code}"
            )
        return trunc.subwindow(codes)

    def truncation(self, degree=SIZE, bound=6, budget=14) -> Truncation:
        """A finite window of this stage up to the given degree."""
        reps = enumerate_rep_trees(REDUCED_OPEN, degree, bound, max_arity=self.n)
        trees = list(reps.values())
        if self.plus:
            trees.append(corolla(self.n + 1))
        return Truncation.from_trees(trees, degree=degree, budget=budget)


def restrict(x: LeanDSpace, sub) -> LeanDSpace:
    """Restrict a presheaf to an arity stage or an explicit subwindow."""
    if isinstance(sub, AritySubcat):
        return restrict_dspace(x, sub.select(x.trunc))
    return restrict_dspace(x, x.trunc.subwindow(sub.objects))


# -------------------------------------------------- cutting into pieces


def _vertex_components(t: Tree, cut):
    """Connected vertex sets after deleting the cut edges.

    Each component is returned as (root edge, edge set, vertex indices)
    where the edge set keeps every incident edge, cut or not.
    """
    cut = set(cut)
    seen = set()
    comps = []
    for start in range(len(t.vertices)):
        if start in seen:
            continue
        stack, group = [start], {start}
        while stack:
            i = stack.pop()
            v = t.vertices[i]
            for e in (v.out, *v.ins):
                if e in cut:
                    continue
                for j in (t.above(e), t.below(e)):
                    if j is not None and j not in group:
                        group.add(j)
                        stack.append(j)
        seen |= group
        edges = set()
        for i in group:
            v = t.vertices[i]
            edges.add(v.out)
            edges.update(v.ins)
        roots = [e for e in edges if t.below(e) not in group]
        if len(roots) != 1:
            raise InvalidStructure("component without a unique root edge")
        comps.append((roots[0], frozenset(edges), frozenset(group)))
    comps.sort(key=lambda c: c[0])
    return comps


def _piece_tree(t: Tree, root_edge, edges, vs) -> Tree:
    if not vs:
        return Tree(REDUCED_OPEN, root_edge, [root_edge], [])
    return Tree(REDUCED_OPEN, root_edge, edges, [t.vertices[i] for i in sorted(vs)])


@dataclass(frozen=True)
class MaxDecomposition:
    """The maximal subtrees of a tree inside one arity stage.

    Pieces carry their inclusion into the ambient tree and own their
    edges outright: every edge of the tree lies in exactly one piece.
    """

    tree: Tree
    n: int
    pieces: tuple  # of (subtree, TreeMap into tree)

    def to_doc(self) -> dict:
        return {
            "n": self.n,
            "pieces": [
                {
                    "tree": tree_to_json(p),
                    "edges": sorted(p.edges),
                    "root": p.root,
                }
                for p, _ in self.pieces
            ],
        }


def max_subtrees(t: Tree, n: int) -> MaxDecomposition:
    """Cut at inner edges touching an over-arity vertex and keep what fits.

    Kept components are the maximal subtrees with all arities <= n; any
    edge only adjacent to over-arity vertices survives as its own
    single-edge piece.
    """
    _require_reduced(t)
    if n < 1:
        raise InvalidStructure("arity stages start at n = 1")
    offending = {i for i, v in enumerate(t.vertices) if v.arity > n}
    cut = {
        e
        for e in t.inner_edges()
        if t.above(e) in offending or t.below(e) in offending
    }
    pieces = []
    covered = set()
    for root_edge, edges, vs in _vertex_components(t, cut):
        if vs & offending:
            continue
        piece = _piece_tree(t, root_edge, edges, vs)
        pieces.append(piece)
        covered |= edges
    for e in sorted(t.edges - covered):
        pieces.append(Tree(REDUCED_OPEN, e, [e], []))
    pieces.sort(key=lambda p: p.root)
    out = tuple(
        (p, TreeMap(p, t, {e: e for e in p.edges})) for p in pieces
    )
    return MaxDecomposition(t, n, out)


@dataclass(frozen=True)
class CutDecomposition:
    """A tree in the arity-n stage cut at every inner edge touching an
    arity-n vertex.  Pieces are keyed by their root edge; cut edges are
    shared between the piece rooted there and the piece below."""

    tree: Tree
    n: int
    cut_edges: tuple
    pieces: dict  # root edge -> subtree
    parents: dict  # cut edge -> key of the piece having it as a leaf

    def parent_key(self, e) -> int:
        return self.parents[e]

    def to_doc(self) -> dict:
        return {
            "n": self.n,
            "cut_edges": list(self.cut_edges),
            "pieces": {
                str(k): tree_to_json(p) for k, p in sorted(self.pieces.items())
            },
        }


def cut_decomposition(t: Tree, n: int) -> CutDecomposition:
    _require_reduced(t)
    if _max_arity(t) > n:
        raise WrongVariant(f"tree leaves the arity-{n} stage")
    full = {i for i, v in enumerate(t.vertices) if v.arity == n}
    cut = sorted(
        e
        for e in t.inner_edges()
        if t.above(e) in full or t.below(e) in full
    )
    pieces = {}
    owner = {}
    for root_edge, edges, vs in _vertex_components(t, cut):
        pieces[root_edge] = _piece_tree(t, root_edge, edges, vs)
        for i in vs:
            owner[i] = root_edge
    if not pieces:
        pieces[t.root] = _piece_tree(t, t.root, frozenset([t.root]), frozenset())
    parents = {e: owner[t.below(e)] for e in cut}
    return CutDecomposition(t, n, tuple(cut), pieces, parents)


# ------------------------------------------------- right Kan extensions


def _window_arity(x: LeanDSpace) -> int:
    return max(_max_arity(x.trunc.reps[c]) for c in x.trunc.objects)


def _window_value(x: LeanDSpace, piece: Tree) -> SSet:
    code = canonical_code(piece)
    if not x.trunc.contains_code(code):
        raise WindowTooSmall(f"piece class {code} outside the window")
    return x.values[code]


def _product_sset(x: LeanDSpace, factors) -> SSet:
    """Tuple-cell product of window values, one slot per factor tree."""
    vals = [_window_value(x, p) for p in factors]
    levels = [
        tuple(itertools.product(*(v.levels[m] for v in vals)))
        for m in range(x.strunc + 1)
    ]
    face = {
        (m, i): {
            cell: tuple(v.face[(m, i)][a] for v, a in zip(vals, cell))
            for cell in levels[m]
        }
        for m in range(1, x.strunc + 1)
        for i in range(m + 1)
    }
    degen = {
        (m, i): {
            cell: tuple(v.degen[(m, i)][a] for v, a in zip(vals, cell))
            for cell in levels[m]
        }
        for m in range(x.strunc)
        for i in range(m + 1)
    }
    return SSet(x.strunc, levels, face, degen,
                coskeletal=all(v.coskeletal for v in vals))


def _brute_limit(x: LeanDSpace, t: Tree, budget) -> SSet:
    # the honest route: the limit over every map from the window into t
    return _family_sset(x, _eval_nodes(x, t, budget))


def _owner_transport(x, nodes, piece_list):
    """For each comma node, which piece it factors through and how.

    Returns (owner index, transported action) pairs; the action carries
    a cell at the piece class to the node's component.
    """
    out = []
    for cs, key, f in nodes:
        image = set(f.edge_map.values())
        owner = next(
            j for j, piece in enumerate(piece_list) if image <= piece.edges
        )
        g = TreeMap(x.trunc.reps[cs], piece_list[owner], f.edge_map)
        out.append((owner, x.act(g)))
    return out


def _witness(x, closed: SSet, brute: SSet, nodes, piece_list):
    routed = _owner_transport(x, nodes, piece_list)
    comps = {
        m: {
            cell: tuple(act.comps[m][cell[j]] for j, act in routed)
            for cell in closed.levels[m]
        }
        for m in range(x.strunc + 1)
    }
    iso = SSetMap(closed, brute, comps)
    bijective = all(
        len(set(comps[m].values())) == len(closed.levels[m]) == len(brute.levels[m])
        for m in range(x.strunc + 1)
    )
    return iso, bijective


def ran_w(x: LeanDSpace, n: int, t: Tree, mode="closed_form", budget=4000):
    """Extension from the arity-n stage, evaluated at t.

    The closed form multiplies the values over the maximal admissible
    subtrees; brute computes the comma-category limit.  Mode "both"
    returns the two spaces with an explicit comparison map.
    """
    _require_reduced(t)
    if _window_arity(x) > n:
        raise WrongVariant(f"window is not inside the arity-{n} stage")
    if mode not in ("closed_form", "brute", "both"):
        raise InvalidStructure(f"unknown mode {mode!r}")
    dec = max_subtrees(t, n)
    piece_list = [p for p, _ in dec.pieces]
    if mode == "brute":
        return _brute_limit(x, t, budget)
    closed = _product_sset(x, piece_list)
    if mode == "closed_form":
        return closed
    nodes = _eval_nodes(x, t, budget)
    brute = _family_sset(x, nodes)
    iso, bijective = _witness(x, closed, brute, nodes, piece_list)
    return {"closed_form": closed, "brute": brute, "iso": iso,
            "bijective": bijective}


def _eta_leg(x: LeanDSpace, piece: Tree, edge) -> SSetMap:
    """Restriction of the piece value along the edge inclusion."""
    eta_rep = x.trunc.reps[canonical_code(eta())]
    return x.act(TreeMap(eta_rep, piece, {eta_rep.root: edge}))


def ran_v(x: LeanDSpace, n: int, t: Tree, mode="closed_form", budget=4000):
    """Extension from the plus window below n, evaluated at t in stage n.

    The closed form glues the cut pieces along their shared cut edges,
    one fiber product per cut edge, processed from the root upwards.
    """
    _require_reduced(t)
    if _max_arity(t) > n:
        raise WrongVariant(f"tree leaves the arity-{n} stage")
    top = canonical_code(corolla(n))
    for c in x.trunc.objects:
        if _max_arity(x.trunc.reps[c]) > n - 1 and c != top:
            raise WrongVariant(
                f"window object {c} is neither below arity {n} nor the corolla"
            )
    if mode not in ("closed_form", "brute", "both"):
        raise InvalidStructure(f"unknown mode {mode!r}")
    if mode == "brute":
        return _brute_limit(x, t, budget)

    dec = cut_decomposition(t, n)
    keys = sorted(dec.pieces)
    if dec.cut_edges and canonical_code(eta()) not in x.trunc.reps:
        raise WindowTooSmall("gluing needs the edge tree in the window")
    vals = {k: _window_value(x, dec.pieces[k]) for k in keys}
    root_leg = {
        e: _eta_leg(x, dec.pieces[e], e) for e in dec.cut_edges
    }
    leaf_leg = {
        e: _eta_leg(x, dec.pieces[dec.parent_key(e)], e) for e in dec.cut_edges
    }

    # breadth-first from the root piece, so parents are always assigned
    order = []
    frontier = [t.root]
    remaining = set(dec.cut_edges)
    while frontier:
        here = frontier.pop(0)
        children = sorted(
            e for e in remaining if dec.parent_key(e) == here
        )
        order.extend(children)
        remaining -= set(children)
        frontier.extend(children)

    levels = []
    for m in range(x.strunc + 1):
        partials = [{t.root: a} for a in vals[t.root].levels[m]]
        for e in order:
            lm, rm = leaf_leg[e].comps[m], root_leg[e].comps[m]
            grown = []
            for asg in partials:
                want = lm[asg[dec.parent_key(e)]]
                for b in vals[e].levels[m]:
                    if rm[b] == want:
                        new = dict(asg)
                        new[e] = b
                        grown.append(new)
            partials = grown
        levels.append(tuple(tuple(asg[k] for k in keys) for asg in partials))
    face = {
        (m, i): {
            cell: tuple(
                vals[k].face[(m, i)][a] for k, a in zip(keys, cell)
            )
            for cell in levels[m]
        }
        for m in range(1, x.strunc + 1)
        for i in range(m + 1)
    }
    degen = {
        (m, i): {
            cell: tuple(
                vals[k].degen[(m, i)][a] for k, a in zip(keys, cell)
            )
            for cell in levels[m]
        }
        for m in range(x.strunc)
        for i in range(m + 1)
    }
    closed = SSet(x.strunc, levels, face, degen,
                  coskeletal=all(v.coskeletal for v in vals.values()))
    if mode == "closed_form":
        return closed
    nodes = _eval_nodes(x, t, budget)
    brute = _family_sset(x, nodes)
    piece_list = [dec.pieces[k] for k in keys]
    iso, bijective = _witness(x, closed, brute, nodes, piece_list)
    return {"closed_form": closed, "brute": brute, "iso": iso,
            "bijective": bijective}


# ------------------------------------------- extension at a new corolla


def _corolla_latching(x: LeanDSpace, cn: Tree):
    """Latching data of a corolla not yet in the window.

    Returns (nodes, per-level colimit elements, per-level injections);
    nodes are the non-invertible negative maps out of the corolla into
    window representatives.
    """
    struct = REEDY_STRUCTURES["outer"]
    nodes = []
    for cs in x.trunc.objects:
        for f in hom_set(cn, x.trunc.reps[cs]):
            if not f.is_iso() and struct.negative(f):
                nodes.append((cs, _edge_key(f.edge_map), f))
    nodes.sort(key=lambda nd: (nd[0], nd[1]))
    arrows = []
    for i, (cs, key, f) in enumerate(nodes):
        for j, (cs2, key2, _) in enumerate(nodes):
            for h in x.trunc.homs[(cs, cs2)]:
                if _edge_key(_comp_edges(h.edge_map, f.edge_map)) == key2:
                    arrows.append((i, j, h))
    elements, injections = [], []
    for m in range(x.strunc + 1):
        d = Diagram(
            range(len(nodes)),
            {i: x.values[cs].levels[m] for i, (cs, _, _) in enumerate(nodes)},
            # the action of h runs against h, from node j's value to node i's
            [(j, i, x.act(h).comps[m]) for i, j, h in arrows],
        )
        els, inj = colimit(d)
        elements.append(els)
        injections.append(inj)
    return nodes, elements, injections


def _latching_sset(x, nodes, elements, injections) -> SSet:
    levels = [tuple(els) for els in elements]
    face = {}
    degen = {}
    for m in range(1, x.strunc + 1):
        for i in range(m + 1):
            face[(m, i)] = {}
            for cls in elements[m]:
                node, cell = cls
                cs = nodes[node][0]
                below = x.values[cs].face[(m, i)][cell]
                face[(m, i)][cls] = injections[m - 1][node][below]
    for m in range(x.strunc):
        for i in range(m + 1):
            degen[(m, i)] = {}
            for cls in elements[m]:
                node, cell = cls
                cs = nodes[node][0]
                up = x.values[cs].degen[(m, i)][cell]
                degen[(m, i)][cls] = injections[m + 1][node][up]
    return SSet(x.strunc, levels, face, degen)


def corolla_latching(x: LeanDSpace, n: int) -> SSet:
    """The outer latching object a new n-corolla would have over x."""
    nodes, elements, injections = _corolla_latching(x, _canonical_corolla(n))
    return _latching_sset(x, nodes, elements, injections)


def _canonical_corolla(n: int) -> Tree:
    return canonicalize(corolla(n))[0]


def _required_expansion_codes(n: int):
    """Classes every arity-(n-1) window must carry to extend at C_n:
    the reduced trees with n leaves and smaller arities."""
    if n < 3:
        return ()
    bound = 3 * n - 3  # n + v edges, v vertices, v <= n - 1
    reps = enumerate_rep_trees(REDUCED_OPEN, SIZE, bound, max_arity=n - 1)
    return tuple(
        sorted(c for c, t in reps.items() if len(t.leaves) == n and t.vertices)
    )


def _as_comps(data, source: SSet, target: SSet) -> SSetMap:
    if isinstance(data, SSetMap):
        return data
    return SSetMap(source, target, data)


def extend_at_corolla(x: LeanDSpace, n: int, z: SSet, attach,
                      match=None) -> LeanDSpace:
    """Adjoin the n-corolla to the window of x with value z.

    attach maps the latching object of the corolla into z; match sends
    z to the matching object, the (n+1)-fold power of the value at the
    edge tree, and may be omitted exactly when that value is a point.
    The symmetric-group action on z is the one transported through
    attach, and the identity away from its image; anything inconsistent
    fails the final functoriality check.
    """
    if _window_arity(x) > n - 1:
        raise WrongVariant(f"window must stay below arity {n}")
    eta_code = canonical_code(eta())
    if eta_code not in x.trunc.reps:
        raise WindowTooSmall("extension needs the edge tree in the window")
    missing = [
        c for c in _required_expansion_codes(n) if not x.trunc.contains_code(c)
    ]
    if missing:
        raise WindowTooSmall(f"window lacks expansion classes {missing}")
    cn = _canonical_corolla(n)
    code = canonical_code(cn)

    nodes, elements, injections = _corolla_latching(x, cn)
    lat = _latching_sset(x, nodes, elements, injections)
    attach = _as_comps(attach, lat, z)

    ev = x.values[eta_code]
    if match is None:
        if any(len(ev.levels[m]) != 1 for m in range(x.strunc + 1)):
            raise InvalidStructure(
                "match can only be omitted over a one-point edge value"
            )
        match = {
            m: {c: tuple(ev.levels[m][0] for _ in range(n + 1))
                for c in z.levels[m]}
            for m in range(x.strunc + 1)
        }
    match_comps = match.comps if isinstance(match, SSetMap) else dict(match)

    # the new window: old objects plus the corolla class
    eta_rep = x.trunc.reps[eta_code]
    reps = dict(x.trunc.reps)
    reps[code] = cn
    homs = dict(x.trunc.homs)
    for cs in x.trunc.objects:
        up = hom_set(x.trunc.reps[cs], cn)
        up.sort(key=lambda f: _edge_key(f.edge_map))
        homs[(cs, code)] = tuple(up)
        down = hom_set(cn, x.trunc.reps[cs])
        down.sort(key=lambda f: _edge_key(f.edge_map))
        homs[(code, cs)] = tuple(down)
    autos = hom_set(cn, cn)
    autos.sort(key=lambda f: _edge_key(f.edge_map))
    homs[(code, code)] = tuple(autos)
    trunc = Truncation(
        x.trunc.variant,
        x.trunc.degree,
        max(x.trunc.bound, degree_value(cn, x.trunc.degree)),
        reps,
        homs,
    )

    node_index = {(cs, key): i for i, (cs, key, _) in enumerate(nodes)}

    def negative_component(g: TreeMap):
        # z-bound action component of a negative map out of the corolla
        i = node_index[(canonical_code(g.target), _edge_key(
            compose(x.trunc.iso_to_rep(g.target), g).edge_map))]
        return i

    values = dict(x.values)
    values[code] = z
    action = dict(x.action)
    for cs in x.trunc.objects:
        for f in homs[(cs, code)]:
            # only edge inclusions reach a corolla from below arity n
            if canonical_code(f.source) != eta_code:
                raise InvalidStructure("unexpected map into the corolla")
            k = f.edge_map[eta_rep.root]
            legs = sorted(cn.edges)
            idx = legs.index(k)
            comps = {
                m: {c: match_comps[m][c][idx] for c in z.levels[m]}
                for m in range(x.strunc + 1)
            }
            action[arrow_key(f)] = SSetMap(z, ev, comps)
        for f in homs[(code, cs)]:
            neg, pos = factor_inner_outer(f)
            i = negative_component(neg)
            through = x.act(pos)
            comps = {
                m: {
                    cell: attach.comps[m][
                        injections[m][i][through.comps[m][cell]]
                    ]
                    for cell in x.values[cs].levels[m]
                }
                for m in range(x.strunc + 1)
            }
            action[arrow_key(f)] = SSetMap(x.values[cs], z, comps)
    for sigma in autos:
        comps = {}
        for m in range(x.strunc + 1):
            table = {c: c for c in z.levels[m]}
            forced = {}
            for i, (cs, key, g) in enumerate(nodes):
                gs = compose(g, sigma)
                i2 = node_index[(cs, _edge_key(gs.edge_map))]
                for cell in x.values[cs].levels[m]:
                    src = attach.comps[m][injections[m][i][cell]]
                    dst = attach.comps[m][injections[m][i2][cell]]
                    if src in forced and forced[src] != dst:
                        raise InvalidStructure(
                            "attach is not compatible with the symmetry "
                            "action on the latching object"
                        )
                    forced[src] = dst
            table.update(forced)
            comps[m] = table
        action[arrow_key(sigma)] = SSetMap(z, z, comps)
    return LeanDSpace(trunc, values, action)


def minimal_corolla_extension(x: LeanDSpace, n: int) -> LeanDSpace:
    """Extend with the latching object itself as the new value."""
    cn = _canonical_corolla(n)
    nodes, elements, injections = _corolla_latching(x, cn)
    lat = _latching_sset(x, nodes, elements, injections)
    attach = SSetMap(lat, lat, {
        m: {c: c for c in lat.levels[m]} for m in range(x.strunc + 1)
    })
    eta_rep = x.trunc.reps[canonical_code(eta())]
    legs = sorted(cn.edges)
    match = {}
    for m in range(x.strunc + 1):
        comp = {}
        for cls in elements[m]:
            node, cell = cls
            cs, _, g = nodes[node]
            comp[cls] = tuple(
                x.act(compose(g, TreeMap(eta_rep, cn, {eta_rep.root: k})))
                .comps[m][cell]
                for k in legs
            )
        match[m] = comp
    return extend_at_corolla(x, n, lat, attach, match)


# ------------------------------------------------- downwards closedness


def downwards_closed_check(sub, x: LeanDSpace, window=None) -> dict:
    """Report whether restriction to sub keeps latching and matching.

    Checks the definitional conditions first (positive maps into the
    subcategory start there, negative maps out of it land there), then
    compares both objects computed over the ambient window and over the
    restriction, object by object.
    """
    amb = x if window is None else restrict_dspace(x, window)
    if isinstance(sub, AritySubcat):
        subw = sub.select(amb.trunc)
    else:
        subw = amb.trunc.subwindow(sub.objects)
    inside = set(subw.objects)
    struct = OUTER_REEDY
    offending = {}
    for c in sorted(inside):
        for cs in amb.trunc.objects:
            if cs in inside:
                continue
            for g in amb.trunc.homs[(cs, c)]:
                if not g.is_iso() and struct.positive(g):
                    key = (c, "positive", cs)
                    offending[key] = offending.get(key, 0) + 1
            for g in amb.trunc.homs[(c, cs)]:
                if not g.is_iso() and struct.negative(g):
                    key = (c, "negative", cs)
                    offending[key] = offending.get(key, 0) + 1
    definitional = [
        {"object": c, "kind": kind, "outside": cs, "maps": count}
        for (c, kind, cs), count in sorted(offending.items())
    ]
    rx = restrict_dspace(amb, subw)
    objects = {}
    for c in sorted(inside):
        t = amb.trunc.reps[c]
        l_amb, _ = latching(amb, t, "outer")
        l_sub, _ = latching(rx, t, "outer")
        m_amb, _ = matching(amb, t, "outer")
        m_sub, _ = matching(rx, t, "outer")
        objects[c] = {
            "latching": [len(l) for l in l_amb.levels],
            "latching_restricted": [len(l) for l in l_sub.levels],
            "matching": [len(l) for l in m_amb.levels],
            "matching_restricted": [len(l) for l in m_sub.levels],
            "latching_iso": l_amb.levels == l_sub.levels,
            "matching_iso": m_amb.levels == m_sub.levels,
        }
    passed = not definitional and all(
        o["latching_iso"] and o["matching_iso"] for o in objects.values()
    )
    return {"passed": passed, "definitional": definitional, "objects": objects}
