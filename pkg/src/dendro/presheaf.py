"""Finite presheaves of simplicial sets on tree truncations.

A presheaf here is stored on a finite window of trees (a Truncation):
one value per isomorphism class, keyed by canonical code, plus one
simplicial map per arrow between the chosen representatives.  Arrows
whose endpoints are merely isomorphic to representatives act through a
fixed relabelling iso, so no class is ever stored twice.

The latching object at t is the colimit of the values over all
non-invertible negative maps out of t, the matching object the limit
over the non-invertible positive maps into t; both come with their
canonical comparison map.  Joint-degree skeleta treat a cell at tree t
and simplicial level m as having degree size(t) + m: the skeleton is
the subpresheaf generated by cells of degree <= n (the left Kan
extension maps onto it, and uniqueness of nondegenerate roots makes
that surjection injective), while the coskeleton is computed honestly
as families over the comma category of the window inclusion.

Nerves of finite coloured operads, the strict Segal condition, spaces
of operations, and the stagewise normalization construction live here
as well, because they are all just structured presheaves.
"""

import itertools
import json
import random
from functools import lru_cache

from .category import (
    REEDY_STRUCTURES,
    TreeMap,
    compose,
    hom_set,
)
from .errors import (
    BudgetExceeded,
    InvalidStructure,
    WindowTooSmall,
    WrongVariant,
)
from .finhtpy import (
    Diagram,
    SSet,
    SSetMap,
    UnionFind,
    delta_sset,
    discrete_sset,
    limit,
    point_sset,
    sset_from_json,
    sset_to_json,
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
    size,
    split_at,
    tree_from_json,
    tree_to_json,
)


def _edge_key(emap):
    return tuple(sorted(emap.items()))


def arrow_key(f: TreeMap):
    """Hashable identity of an arrow between stored representatives."""
    return (
        canonical_code(f.source),
        canonical_code(f.target),
        _edge_key(f.edge_map),
    )


def _inverse_iso(f: TreeMap) -> TreeMap:
    return TreeMap(f.target, f.source, {v: k for k, v in f.edge_map.items()})


def _comp_edges(outer, inner):
    # raw edge-dict composition, outer after inner
    return {e: outer[x] for e, x in inner.items()}


@lru_cache(maxsize=None)
def _monotone(m, k):
    """All order-preserving maps [m] -> [k] as image tuples."""
    if m < 0 or k < 0:
        return ()
    out = []
    for c in itertools.product(range(k + 1), repeat=m + 1):
        if all(a <= b for a, b in zip(c, c[1:])):
            out.append(c)
    return tuple(out)


def _apply_monotone(v: SSet, alpha, k, cell):
    """Act by a monotone map alpha: [m] -> [k] on a cell of v at level k."""
    m = len(alpha) - 1
    if m == k and alpha == tuple(range(k + 1)):
        return cell
    present = set(alpha)
    for missing in range(k + 1):
        if missing not in present:
            shrunk = tuple(a - 1 if a > missing else a for a in alpha)
            return _apply_monotone(v, shrunk, k - 1, v.face[(k, missing)][cell])
    for i in range(m):
        if alpha[i] == alpha[i + 1]:
            below = _apply_monotone(v, alpha[:i] + alpha[i + 1:], k, cell)
            return v.degen[(m - 1, i)][below]
    raise InvalidStructure("not a monotone map")  # pragma: no cover


def _id_comps(v: SSet):
    return {
        m: {c: c for c in v.levels[m]} for m in range(v.trunc + 1)
    }


# ------------------------------------------------------------ truncation


class Truncation:
    """A finite full subcategory of trees with cached hom-sets.

    Objects are canonical codes; `reps` holds one chosen tree per code
    and `homs[(cs, ct)]` every map between those representatives.
    """

    __slots__ = ("variant", "degree", "bound", "reps", "objects", "homs")

    def __init__(self, variant, degree, bound, reps, homs=None, budget=14):
        self.variant = variant
        self.degree = degree
        self.bound = bound
        self.reps = dict(reps)
        self.objects = tuple(sorted(self.reps))
        if homs is None:
            homs = {}
            for cs in self.objects:
                for ct in self.objects:
                    maps = hom_set(self.reps[cs], self.reps[ct], budget=budget)
                    maps.sort(key=lambda f: _edge_key(f.edge_map))
                    homs[(cs, ct)] = tuple(maps)
        self.homs = homs

    @classmethod
    def window(cls, variant, degree, bound, max_arity=None, budget=14):
        reps = enumerate_rep_trees(variant, degree, bound, max_arity)
        return cls(variant, degree, bound, reps, budget=budget)

    @classmethod
    def from_trees(cls, trees, degree=SIZE, budget=14):
        trees = list(trees)
        if not trees:
            raise InvalidStructure("a truncation needs at least one tree")
        variant = trees[0].variant
        reps = {}
        for t in trees:
            if t.variant != variant:
                raise WrongVariant("mixed tree variants in one truncation")
            canon, _ = canonicalize(t)
            reps[canonical_code(t)] = canon
        bound = max(degree_value(t, degree) for t in reps.values())
        return cls(variant, degree, bound, reps, budget=budget)

    def subwindow(self, codes):
        codes = set(codes)
        missing = codes - set(self.objects)
        if missing:
            raise WindowTooSmall(f"codes {sorted(missing)} not in this window")
        reps = {c: self.reps[c] for c in codes}
        homs = {
            (a, b): self.homs[(a, b)]
            for a in codes
            for b in codes
        }
        return Truncation(self.variant, self.degree, self.bound, reps, homs)

    def __eq__(self, other):
        return isinstance(other, Truncation) and (
            self.variant,
            self.degree,
            self.objects,
        ) == (other.variant, other.degree, other.objects)

    def __hash__(self):
        return hash((self.variant, self.degree, self.objects))

    def __repr__(self):
        return (
            f"Truncation({self.variant}, {self.degree}<="
            f"{self.bound}, {len(self.objects)} objects)"
        )

    def contains_code(self, code) -> bool:
        return code in self.reps

    def rep(self, t: Tree) -> Tree:
        code = canonical_code(t)
        if code not in self.reps:
            raise WindowTooSmall(f"{code} outside this truncation")
        return self.reps[code]

    def iso_to_rep(self, t: Tree) -> TreeMap:
        """The fixed relabelling iso from t onto its representative."""
        rep = self.rep(t)
        canon, relab = canonicalize(t)
        if canon == rep:
            return TreeMap(t, rep, relab)
        links = [g for g in hom_set(canon, rep) if g.is_iso()]
        links.sort(key=lambda g: _edge_key(g.edge_map))
        return compose(links[0], TreeMap(t, canon, relab))

    def arrows(self):
        for cs in self.objects:
            for ct in self.objects:
                for f in self.homs[(cs, ct)]:
                    yield cs, ct, f

    def autos(self, code):
        return tuple(f for f in self.homs[(code, code)] if f.is_iso())


# ------------------------------------------------------- the presheaves


class LeanDSpace:
    """A finite presheaf of truncated simplicial sets on a Truncation.

    `values[code]` is the simplicial set at the representative tree of
    that class; `action[arrow_key(f)]` the contravariant simplicial map
    x(target) -> x(source).  Construction re-checks functoriality on
    every composable pair, so an inconsistent action never survives.
    """

    __slots__ = ("trunc", "values", "action", "strunc")

    def __init__(self, trunc, values, action, check=True):
        self.trunc = trunc
        self.values = dict(values)
        self.action = dict(action)
        struncs = {v.trunc for v in self.values.values()}
        if len(struncs) != 1:
            raise InvalidStructure("values must share one simplicial truncation")
        self.strunc = struncs.pop()
        if check:
            self._check()

    def _check(self):
        if set(self.values) != set(self.trunc.objects):
            raise InvalidStructure("values must cover the truncation exactly")
        for cs, ct, f in self.trunc.arrows():
            if arrow_key(f) not in self.action:
                raise InvalidStructure(f"no action for arrow {f!r}")
        for code in self.trunc.objects:
            rep = self.trunc.reps[code]
            ident = self.action[arrow_key(TreeMap.identity(rep))]
            for m in range(self.strunc + 1):
                if any(ident.comps[m][c] != c for c in self.values[code].levels[m]):
                    raise InvalidStructure(f"identity at {code} does not act trivially")
        # act(g after f) == act(f) after act(g) on every composable pair
        for b in self.trunc.objects:
            into_b = [
                (a, f) for a in self.trunc.objects for f in self.trunc.homs[(a, b)]
            ]
            for c in self.trunc.objects:
                for g in self.trunc.homs[(b, c)]:
                    ag = self.action[arrow_key(g)]
                    for a, f in into_b:
                        af = self.action[arrow_key(f)]
                        both = self.action[arrow_key(compose(g, f))]
                        for m in range(self.strunc + 1):
                            gm, fm, bm = ag.comps[m], af.comps[m], both.comps[m]
                            for cell in self.values[c].levels[m]:
                                if fm[gm[cell]] != bm[cell]:
                                    raise InvalidStructure(
                                        f"action not functorial at {a}->{b}->{c}"
                                    )

    def value_code(self, code) -> SSet:
        return self.values[code]

    def value(self, t: Tree) -> SSet:
        return self.values[canonical_code(t)]

    def act(self, f: TreeMap) -> SSetMap:
        """Contravariant action of any arrow between window trees."""
        cs, ct = canonical_code(f.source), canonical_code(f.target)
        reps = self.trunc.reps
        # the stored table is keyed by arrows between the chosen
        # representatives; anything else acts through its relabelling iso
        if cs in reps and ct in reps and \
                f.source == reps[cs] and f.target == reps[ct]:
            return self.action[arrow_key(f)]
        i_s = self.trunc.iso_to_rep(f.source)
        i_t = self.trunc.iso_to_rep(f.target)
        conj = compose(compose(i_t, f), _inverse_iso(i_s))
        return self.action[arrow_key(conj)]


class DSpaceMap:
    """A componentwise simplicial map, natural over the truncation."""

    __slots__ = ("source", "target", "comps")

    def __init__(self, source, target, comps, check=True):
        self.source = source
        self.target = target
        self.comps = dict(comps)
        if check:
            if source.trunc != target.trunc or source.strunc != target.strunc:
                raise InvalidStructure("map endpoints live on different windows")
            if set(self.comps) != set(source.trunc.objects):
                raise InvalidStructure("one component per object, no more")
            for cs, ct, f in source.trunc.arrows():
                xs, ys = source.act(f), target.act(f)
                cms, cmt = self.comps[cs], self.comps[ct]
                for m in range(source.strunc + 1):
                    for cell in source.values[ct].levels[m]:
                        if cms.comps[m][xs.comps[m][cell]] != \
                                ys.comps[m][cmt.comps[m][cell]]:
                            raise InvalidStructure(
                                f"naturality fails at {cs}->{ct}"
                            )

    def __call__(self, code, m, cell):
        return self.comps[code].comps[m][cell]


def _dspace_from_fn(trunc, values, image_fn, check=True):
    """Assemble the action from image_fn(f, m, cell) and validate."""
    action = {}
    for cs, ct, f in trunc.arrows():
        comps = {
            m: {cell: image_fn(f, m, cell) for cell in values[ct].levels[m]}
            for m in range(values[ct].trunc + 1)
        }
        action[arrow_key(f)] = SSetMap(values[ct], values[cs], comps)
    return LeanDSpace(trunc, values, action, check=check)


# ------------------------------------------------------------ builders


def terminal_dspace(trunc, strunc=2):
    values = {c: point_sset(strunc) for c in trunc.objects}
    return _dspace_from_fn(trunc, values, lambda f, m, cell: cell, check=False)


def empty_dspace(trunc, strunc=2):
    values = {c: discrete_sset([], strunc) for c in trunc.objects}
    return _dspace_from_fn(trunc, values, lambda f, m, cell: cell, check=False)


def constant_dspace(trunc, space: SSet):
    values = {c: space for c in trunc.objects}
    return _dspace_from_fn(trunc, values, lambda f, m, cell: cell, check=False)


def _maps_into(trunc, t, budget):
    per_code = {}
    for code in trunc.objects:
        maps = hom_set(trunc.reps[code], t, budget=budget)
        maps.sort(key=lambda f: _edge_key(f.edge_map))
        per_code[code] = {_edge_key(f.edge_map): f for f in maps}
    return per_code

def representable_dspace(trunc, t: Tree, strunc=2, budget=14):
    """hom(-, t) as a discrete presheaf; cells are edge-map keys."""
    named = _maps_into(trunc, t, budget)
    values = {c: discrete_sset(sorted(named[c]), strunc) for c in trunc.objects}

    def image(f, m, cell):
        return _edge_key(_comp_edges(named[canonical_code(f.target)][cell].edge_map,
                                     f.edge_map))

    return _dspace_from_fn(trunc, values, image)


def boundary_dspace(trunc, t: Tree, strunc=2, budget=14):
    """The maps into t whose edge image misses some edge of t."""
    named = _maps_into(trunc, t, budget)
    proper = {
        c: {k: f for k, f in named[c].items() if f.edge_image() != t.edges}
        for c in trunc.objects
    }
    values = {c: discrete_sset(sorted(proper[c]), strunc) for c in trunc.objects}

    def image(f, m, cell):
        return _edge_key(_comp_edges(proper[canonical_code(f.target)][cell].edge_map,
                                     f.edge_map))

    return _dspace_from_fn(trunc, values, image)


def boundary_inclusion(trunc, t: Tree, strunc=2, budget=14):
    """(boundary, representable, inclusion) for the same target tree."""
    bd = boundary_dspace(trunc, t, strunc, budget)
    rep = representable_dspace(trunc, t, strunc, budget)
    comps = {
        c: SSetMap(bd.values[c], rep.values[c], _id_comps(bd.values[c]))
        for c in trunc.objects
    }
    return bd, rep, DSpaceMap(bd, rep, comps)


def product_dspace(x, y):
    """(product, left projection, right projection), computed levelwise."""
    from .finhtpy import product_sset

    trunc = x.trunc
    values = {c: product_sset(x.values[c], y.values[c]) for c in trunc.objects}

    def image(f, m, cell):
        a, b = cell
        return (x.act(f).comps[m][a], y.act(f).comps[m][b])

    z = _dspace_from_fn(trunc, values, image, check=False)
    pl = DSpaceMap(z, x, {
        c: SSetMap(values[c], x.values[c],
                   {m: {cell: cell[0] for cell in values[c].levels[m]}
                    for m in range(z.strunc + 1)})
        for c in trunc.objects
    })
    pr = DSpaceMap(z, y, {
        c: SSetMap(values[c], y.values[c],
                   {m: {cell: cell[1] for cell in values[c].levels[m]}
                    for m in range(z.strunc + 1)})
        for c in trunc.objects
    })
    return z, pl, pr


def coproduct_dspace(x, y):
    """(coproduct, left injection, right injection); cells are tagged."""
    from .finhtpy import coproduct_sset

    trunc = x.trunc
    values = {
        c: coproduct_sset([x.values[c], y.values[c]]) for c in trunc.objects
    }
    parts = (x, y)

    def image(f, m, cell):
        pi, inner = cell
        return (pi, parts[pi].act(f).comps[m][inner])

    z = _dspace_from_fn(trunc, values, image, check=False)
    il = DSpaceMap(x, z, {
        c: SSetMap(x.values[c], values[c],
                   {m: {cell: (0, cell) for cell in x.values[c].levels[m]}
                    for m in range(z.strunc + 1)})
        for c in trunc.objects
    })
    ir = DSpaceMap(y, z, {
        c: SSetMap(y.values[c], values[c],
                   {m: {cell: (1, cell) for cell in y.values[c].levels[m]}
                    for m in range(z.strunc + 1)})
        for c in trunc.objects
    })
    return z, il, ir


def rep_times_delta(trunc, t: Tree, m: int, strunc=2, budget=14):
    """hom(-, t) x Delta[m]; cells are (edge-map key, monotone tuple)."""
    from .finhtpy import product_sset

    named = _maps_into(trunc, t, budget)
    simplex = delta_sset(m, strunc)
    values = {
        c: product_sset(discrete_sset(sorted(named[c]), strunc), simplex)
        for c in trunc.objects
    }

    def image(f, m_, cell):
        hk, tup = cell
        return (
            _edge_key(_comp_edges(named[canonical_code(f.target)][hk].edge_map,
                                  f.edge_map)),
            tup,
        )

    return _dspace_from_fn(trunc, values, image)


def cell_pair(trunc, t: Tree, m: int, strunc=2, budget=14):
    """The generating cofibration at (t, m).

    Returns (A, B, inclusion) where B = hom(-, t) x Delta[m] and A keeps
    the cells whose tree part misses an edge of t or whose simplex part
    misses a vertex of [m].
    """
    big = rep_times_delta(trunc, t, m, strunc, budget)
    named = _maps_into(trunc, t, budget)
    full = set(range(m + 1))

    def keep(code, cell):
        hk, tup = cell
        return named[code][hk].edge_image() != t.edges or set(tup) != full

    values = {}
    for code in trunc.objects:
        v = big.values[code]
        levels = [
            tuple(c for c in v.levels[k] if keep(code, c))
            for k in range(strunc + 1)
        ]
        kept = [set(l) for l in levels]
        face = {
            (k, i): {c: v.face[(k, i)][c] for c in levels[k]}
            for k in range(1, strunc + 1)
            for i in range(k + 1)
        }
        degen = {
            (k, i): {c: v.degen[(k, i)][c] for c in levels[k]}
            for k in range(strunc)
            for i in range(k + 1)
        }
        for (k, i), d in face.items():
            if any(img not in kept[k - 1] for img in d.values()):
                raise InvalidStructure("boundary not closed under faces")
        values[code] = SSet(strunc, levels, face, degen, coskeletal=False)

    def image(f, k, cell):
        return big.act(f).comps[k][cell]

    small = _dspace_from_fn(trunc, values, image)
    comps = {
        c: SSetMap(values[c], big.values[c], _id_comps(values[c]))
        for c in trunc.objects
    }
    return small, big, DSpaceMap(small, big, comps)


def random_dspace(trunc, seed, strunc=2, max_pieces=2, kinds=None):
    """A random finite presheaf: a coproduct of standard pieces.

    Every piece is functorial by construction, so the result is a
    legitimate uniformly-random sample of small presheaves rather than
    arbitrary (and almost surely non-functorial) tables.
    """
    rng = random.Random(seed)
    kinds = list(kinds or ("representable", "boundary", "cell", "point"))
    pieces = []
    for j in range(rng.randint(1, max_pieces)):
        kind = rng.choice(kinds)
        if j == 0 and kind == "boundary":
            # a boundary alone may be empty everywhere; keep samples inhabited
            kind = "representable"
        code = rng.choice(trunc.objects)
        t = trunc.reps[code]
        if kind == "representable":
            pieces.append(representable_dspace(trunc, t, strunc))
        elif kind == "boundary":
            pieces.append(boundary_dspace(trunc, t, strunc))
        elif kind == "cell":
            pieces.append(rep_times_delta(trunc, t, rng.randint(0, 1), strunc))
        else:
            pieces.append(terminal_dspace(trunc, strunc))
    out = pieces[0]
    for p in pieces[1:]:
        out = coproduct_dspace(out, p)[0]
    return out


def empty_to(x: LeanDSpace) -> DSpaceMap:
    src = empty_dspace(x.trunc, x.strunc)
    comps = {
        c: SSetMap(src.values[c], x.values[c],
                   {m: {} for m in range(x.strunc + 1)})
        for c in x.trunc.objects
    }
    return DSpaceMap(src, x, comps)


def to_terminal(x: LeanDSpace) -> DSpaceMap:
    dst = terminal_dspace(x.trunc, x.strunc)
    comps = {
        c: SSetMap(x.values[c], dst.values[c],
                   {m: {cell: 0 for cell in x.values[c].levels[m]}
                    for m in range(x.strunc + 1)})
        for c in x.trunc.objects
    }
    return DSpaceMap(x, dst, comps)


# ----------------------------------------------------------- evaluation


def _eval_nodes(x, t, budget):
    nodes = []
    for cs in x.trunc.objects:
        for f in hom_set(x.trunc.reps[cs], t, budget=budget):
            nodes.append((cs, _edge_key(f.edge_map), f))
    if len(nodes) > budget:
        raise BudgetExceeded(f"{len(nodes)} comma objects at {canonical_code(t)}")
    nodes.sort(key=lambda n: (-size(x.trunc.reps[n[0]]), n[0], n[1]))
    return nodes


def _family_sset(x: LeanDSpace, nodes) -> SSet:
    """The limit over a comma shape, one family tuple per node list."""
    names = [n[:2] for n in nodes]
    arrows = []
    for cs, key, f in nodes:
        for cs2 in x.trunc.objects:
            for h in x.trunc.homs[(cs2, cs)]:
                tgt = (cs2, _edge_key(_comp_edges(f.edge_map, h.edge_map)))
                arrows.append(((cs, key), tgt, h))
    levels = []
    for m in range(x.strunc + 1):
        d = Diagram(
            names,
            {(cs, key): x.values[cs].levels[m] for cs, key, _ in nodes},
            [(a, b, x.act(h).comps[m]) for a, b, h in arrows],
        )
        levels.append(tuple(limit(d)[0]))
    face = {
        (m, i): {
            fam: tuple(
                x.values[cs].face[(m, i)][fam[j]]
                for j, (cs, key, _) in enumerate(nodes)
            )
            for fam in levels[m]
        }
        for m in range(1, x.strunc + 1)
        for i in range(m + 1)
    }
    degen = {
        (m, i): {
            fam: tuple(
                x.values[cs].degen[(m, i)][fam[j]]
                for j, (cs, key, _) in enumerate(nodes)
            )
            for fam in levels[m]
        }
        for m in range(x.strunc)
        for i in range(m + 1)
    }
    return SSet(x.strunc, levels, face, degen)


def dspace_eval(x: LeanDSpace, t: Tree, budget=4000) -> SSet:
    """The value at t; outside the window, the limit over maps s -> t."""
    code = canonical_code(t)
    if x.trunc.contains_code(code):
        return x.values[code]
    return _family_sset(x, _eval_nodes(x, t, budget))


def extend_lean(x: LeanDSpace, big: Truncation, budget=4000) -> LeanDSpace:
    """Right Kan extension of x onto a larger window, tree direction.

    Every value is stored as a family over maps from the small window,
    including values at trees the small window already contains.
    """
    node_lists = {}
    node_index = {}
    values = {}
    for code in big.objects:
        rep = big.reps[code]
        nodes = _eval_nodes(x, rep, budget)
        node_lists[code] = [n[:2] for n in nodes]
        node_index[code] = {n[:2]: j for j, n in enumerate(nodes)}
        values[code] = _family_sset(x, nodes)

    def image(f, m, fam):
        index = node_index[canonical_code(f.target)]
        out = []
        for cs, key in node_lists[canonical_code(f.source)]:
            lifted = _edge_key(_comp_edges(f.edge_map, dict(key)))
            out.append(fam[index[(cs, lifted)]])
        return tuple(out)

    return _dspace_from_fn(big, values, image)


# --------------------------------------------------- latching, matching


def _negatives_out(x, code, system):
    struct = REEDY_STRUCTURES[system]
    nodes = []
    for cs in x.trunc.objects:
        for f in x.trunc.homs[(code, cs)]:
            if not f.is_iso() and struct.negative(f):
                nodes.append((cs, _edge_key(f.edge_map), f))
    nodes.sort(key=lambda n: (n[0], n[1]))
    return nodes


def _positives_in(x, code, system):
    struct = REEDY_STRUCTURES[system]
    nodes = []
    for cs in x.trunc.objects:
        for g in x.trunc.homs[(cs, code)]:
            if not g.is_iso() and struct.positive(g):
                nodes.append((cs, _edge_key(g.edge_map), g))
    nodes.sort(key=lambda n: (-size(x.trunc.reps[n[0]]), n[0], n[1]))
    return nodes


def _latching_finds(x, code, system):
    """Per-level union-find over the negatives-out-of-t diagram."""
    nodes = _negatives_out(x, code, system)
    triangles = []
    for i, (cs, key, f) in enumerate(nodes):
        for j, (cs2, key2, f2) in enumerate(nodes):
            for h in x.trunc.homs[(cs, cs2)]:
                if _edge_key(_comp_edges(h.edge_map, f.edge_map)) == key2:
                    triangles.append((i, j, h))
    finds = []
    for m in range(x.strunc + 1):
        uf = UnionFind(
            (i, cell)
            for i, (cs, key, f) in enumerate(nodes)
            for cell in x.values[cs].levels[m]
        )
        for i, j, h in triangles:
            hm = x.act(h).comps[m]
            for b in x.values[nodes[j][0]].levels[m]:
                uf.union((i, hm[b]), (j, b))
        finds.append(uf)
    return nodes, finds


def latching(x: LeanDSpace, t: Tree, system="outer"):
    """(latching object, comparison into x(t)) at the class of t."""
    code = canonical_code(x.trunc.rep(t))
    nodes, finds = _latching_finds(x, code, system)
    levels = [
        tuple(sorted({uf.find(k) for k in uf.parent}, key=repr))
        for uf in finds
    ]
    face = {}
    degen = {}
    for m in range(1, x.strunc + 1):
        for i in range(m + 1):
            face[(m, i)] = {
                rep: finds[m - 1].find(
                    (rep[0], x.values[nodes[rep[0]][0]].face[(m, i)][rep[1]])
                )
                for rep in levels[m]
            }
    for m in range(x.strunc):
        for i in range(m + 1):
            degen[(m, i)] = {
                rep: finds[m + 1].find(
                    (rep[0], x.values[nodes[rep[0]][0]].degen[(m, i)][rep[1]])
                )
                for rep in levels[m]
            }
    obj = SSet(x.strunc, levels, face, degen)
    comps = {
        m: {
            rep: x.act(nodes[rep[0]][2]).comps[m][rep[1]]
            for rep in levels[m]
        }
        for m in range(x.strunc + 1)
    }
    return obj, SSetMap(obj, x.values[code], comps)


def matching(x: LeanDSpace, t: Tree, system="outer"):
    """(matching object, comparison from x(t)) at the class of t."""
    code = canonical_code(x.trunc.rep(t))
    nodes = _positives_in(x, code, system)
    names = [n[:2] for n in nodes]
    arrows = []
    for cs, key, g in nodes:
        for cs2, key2, g2 in nodes:
            for h in x.trunc.homs[(cs2, cs)]:
                if _edge_key(_comp_edges(g.edge_map, h.edge_map)) == key2:
                    arrows.append(((cs, key), (cs2, key2), h))
    levels = []
    for m in range(x.strunc + 1):
        d = Diagram(
            names,
            {n[:2]: x.values[n[0]].levels[m] for n in nodes},
            [(a, b, x.act(h).comps[m]) for a, b, h in arrows],
        )
        levels.append(tuple(limit(d)[0]))
    face = {
        (m, i): {
            fam: tuple(
                x.values[cs].face[(m, i)][fam[j]]
                for j, (cs, key, _) in enumerate(nodes)
            )
            for fam in levels[m]
        }
        for m in range(1, x.strunc + 1)
        for i in range(m + 1)
    }
    degen = {
        (m, i): {
            fam: tuple(
                x.values[cs].degen[(m, i)][fam[j]]
                for j, (cs, key, _) in enumerate(nodes)
            )
            for fam in levels[m]
        }
        for m in range(x.strunc)
        for i in range(m + 1)
    }
    obj = SSet(x.strunc, levels, face, degen)
    comps = {
        m: {
            cell: tuple(x.act(g).comps[m][cell] for _, _, g in nodes)
            for cell in x.values[code].levels[m]
        }
        for m in range(x.strunc + 1)
    }
    return obj, SSetMap(x.values[code], obj, comps)


def latching_map(f: DSpaceMap, t: Tree, system="outer"):
    """The induced map between latching objects."""
    x, y = f.source, f.target
    code = canonical_code(x.trunc.rep(t))
    nodes, xf = _latching_finds(x, code, system)
    _, yf = _latching_finds(y, code, system)
    lx, _ = latching(x, t, system)
    ly, _ = latching(y, t, system)
    comps = {
        m: {
            rep: yf[m].find((rep[0], f.comps[nodes[rep[0]][0]].comps[m][rep[1]]))
            for rep in lx.levels[m]
        }
        for m in range(x.strunc + 1)
    }
    return SSetMap(lx, ly, comps)


def matching_map(f: DSpaceMap, t: Tree, system="outer"):
    x, y = f.source, f.target
    code = canonical_code(x.trunc.rep(t))
    nodes = _positives_in(x, code, system)
    mx, _ = matching(x, t, system)
    my, _ = matching(y, t, system)
    comps = {
        m: {
            fam: tuple(
                f.comps[cs].comps[m][fam[j]]
                for j, (cs, _, _) in enumerate(nodes)
            )
            for fam in mx.levels[m]
        }
        for m in range(x.strunc + 1)
    }
    return SSetMap(mx, my, comps)


# --------------------------------------------------- skeleta, coskeleta


def sk(x: LeanDSpace, n: int) -> LeanDSpace:
    """The subpresheaf generated by cells of joint degree <= n."""
    values = {}
    for code in x.trunc.objects:
        v = x.values[code]
        marked = {k: set() for k in range(x.strunc + 1)}
        for cs in x.trunc.objects:
            top = min(x.strunc, n - size(x.trunc.reps[cs]))
            for k in range(top + 1):
                for g in x.trunc.homs[(code, cs)]:
                    marked[k].update(x.act(g).comps[k].values())
        levels = []
        for m in range(x.strunc + 1):
            keep = set()
            for k, cells in marked.items():
                for alpha in _monotone(m, k):
                    for b in cells:
                        keep.add(_apply_monotone(v, alpha, k, b))
            levels.append(tuple(c for c in v.levels[m] if c in keep))
        face = {
            (m, i): {c: v.face[(m, i)][c] for c in levels[m]}
            for m in range(1, x.strunc + 1)
            for i in range(m + 1)
        }
        degen = {
            (m, i): {c: v.degen[(m, i)][c] for c in levels[m]}
            for m in range(x.strunc)
            for i in range(m + 1)
        }
        values[code] = SSet(x.strunc, levels, face, degen, coskeletal=False)

    def image(f, m, cell):
        return x.act(f).comps[m][cell]

    return _dspace_from_fn(x.trunc, values, image)


def _cosk_nodes(x, code, m, n):
    nodes = []
    for cs in x.trunc.objects:
        s = size(x.trunc.reps[cs])
        if s > n:
            continue
        for k in range(min(x.strunc, n - s) + 1):
            for g in x.trunc.homs[(cs, code)]:
                for alpha in _monotone(k, m):
                    nodes.append((cs, k, _edge_key(g.edge_map), alpha, g))
    nodes.sort(key=lambda nd: (-(size(x.trunc.reps[nd[0]]) + nd[1]),
                               nd[0], nd[1], nd[2], nd[3]))
    return nodes


def _postcompose_face(alpha, i):
    # delta_i after alpha
    return tuple(a if a < i else a + 1 for a in alpha)


def _postcompose_degen(alpha, i):
    # sigma_i after alpha
    return tuple(a if a <= i else a - 1 for a in alpha)


def cosk(x: LeanDSpace, n: int, budget=6000) -> LeanDSpace:
    """Right Kan extension from the joint-degree-<= n window.

    A cell at (t, m) is a compatible family over all (s, k, g: s -> t,
    alpha: [k] -> [m]) with size(s) + k <= n.
    """
    node_lists = {}
    node_index = {}
    values = {}
    for code in x.trunc.objects:
        per_m = {}
        idx_m = {}
        levels = []
        for m in range(x.strunc + 1):
            nodes = _cosk_nodes(x, code, m, n)
            if len(nodes) > budget:
                raise BudgetExceeded(
                    f"{len(nodes)} coskeleton nodes at ({code}, {m})"
                )
            per_m[m] = nodes
            idx_m[m] = {nd[:4]: j for j, nd in enumerate(nodes)}
            names = [nd[:4] for nd in nodes]
            arrows = []
            for cs, k, gk, alpha, g in nodes:
                src = (cs, k, gk, alpha)
                for cs2 in x.trunc.objects:
                    if size(x.trunc.reps[cs2]) + k > n:
                        continue
                    for h in x.trunc.homs[(cs2, cs)]:
                        tgt = (cs2, k,
                               _edge_key(_comp_edges(g.edge_map, h.edge_map)),
                               alpha)
                        arrows.append((src, tgt, x.act(h).comps[k]))
                for i in range(k + 1):
                    if k >= 1:
                        tgt = (cs, k - 1, gk, alpha[:i] + alpha[i + 1:])
                        arrows.append((src, tgt, x.values[cs].face[(k, i)]))
                    dup = (cs, k + 1, gk, alpha[:i + 1] + alpha[i:])
                    if dup in idx_m[m]:
                        arrows.append((src, dup, x.values[cs].degen[(k, i)]))
            d = Diagram(
                names,
                {nd[:4]: x.values[nd[0]].levels[nd[1]] for nd in nodes},
                arrows,
            )
            levels.append(tuple(limit(d)[0]))
        node_lists[code] = per_m
        node_index[code] = idx_m
        face = {
            (m, i): {
                fam: tuple(
                    fam[idx_m[m][(cs, k, gk, _postcompose_face(alpha, i))]]
                    for cs, k, gk, alpha, _ in per_m[m - 1]
                )
                for fam in levels[m]
            }
            for m in range(1, x.strunc + 1)
            for i in range(m + 1)
        }
        degen = {
            (m, i): {
                fam: tuple(
                    fam[idx_m[m][(cs, k, gk, _postcompose_degen(alpha, i))]]
                    for cs, k, gk, alpha, _ in per_m[m + 1]
                )
                for fam in levels[m]
            }
            for m in range(x.strunc)
            for i in range(m + 1)
        }
        values[code] = SSet(x.strunc, levels, face, degen)

    def image(f, m, fam):
        idx = node_index[canonical_code(f.target)][m]
        out = []
        for cs, k, gk, alpha, g in node_lists[canonical_code(f.source)][m]:
            lifted = _edge_key(_comp_edges(f.edge_map, dict(gk)))
            out.append(fam[idx[(cs, k, lifted, alpha)]])
        return tuple(out)

    return _dspace_from_fn(x.trunc, values, image)


def cosk_unit(x: LeanDSpace, n: int, coskx: LeanDSpace) -> DSpaceMap:
    """The canonical map x -> cosk_n(x)."""
    comps = {}
    for code in x.trunc.objects:
        v = x.values[code]
        mapped = {}
        for m in range(x.strunc + 1):
            nodes = _cosk_nodes(x, code, m, n)
            level = {}
            for cell in v.levels[m]:
                fam = []
                for cs, k, gk, alpha, g in nodes:
                    pulled = _apply_monotone(v, alpha, m, cell)
                    fam.append(x.act(g).comps[k][pulled])
                level[cell] = tuple(fam)
            mapped[m] = level
        comps[code] = SSetMap(v, coskx.values[code], mapped)
    return DSpaceMap(x, coskx, comps)


def is_lean_via_matching(x: LeanDSpace, system, n: int) -> bool:
    """Finite values everywhere and matching isos above degree n."""
    if any(not v.coskeletal for v in x.values.values()):
        return False
    for code in x.trunc.objects:
        if degree_value(x.trunc.reps[code], x.trunc.degree) <= n:
            continue
        obj, cmp = matching(x, x.trunc.reps[code], system)
        for m in range(x.strunc + 1):
            image = set(cmp.comps[m].values())
            if len(image) != len(x.values[code].levels[m]):
                return False
            if len(image) != len(obj.levels[m]):
                return False
    return True


def is_normal_mono(f: DSpaceMap, joint_bound=None) -> bool:
    """Injective with free automorphism action on the complement.

    With joint_bound set, only the levels (t, m) of joint degree
    size(t) + m <= joint_bound are inspected.
    """
    y = f.target
    for code in y.trunc.objects:
        s = size(y.trunc.reps[code])
        autos = [
            a for a in y.trunc.autos(code) if not a.is_identity()
        ]
        for m in range(y.strunc + 1):
            if joint_bound is not None and s + m > joint_bound:
                continue
            comp = f.comps[code].comps[m]
            image = set(comp.values())
            if len(image) != len(comp):
                return False
            rest = [c for c in y.values[code].levels[m] if c not in image]
            for theta in autos:
                act = y.act(theta).comps[m]
                if any(act[c] == c for c in rest):
                    return False
    return True


# ----------------------------------------------------- coloured operads


class ColouredOperad:
    """A finite coloured operad given by enumerators and composition.

    `ops(profile, out)` lists the operations with the stated input
    colours, `gamma(op, parts)` substitutes one operation per input,
    and `sigma(op, perm)` reindexes inputs so that the j-th input of
    the result is input perm[j] of the original.
    """

    __slots__ = ("name", "colours", "_ops", "_unit", "_gamma", "_sigma")

    def __init__(self, name, colours, ops, unit, gamma, sigma):
        self.name = name
        self.colours = tuple(colours)
        self._ops = ops
        self._unit = unit
        self._gamma = gamma
        self._sigma = sigma

    def ops(self, profile, out):
        return tuple(self._ops(tuple(profile), out))

    def unit(self, colour):
        return self._unit(colour)

    def gamma(self, op, parts):
        return self._gamma(op, list(parts))

    def sigma(self, op, perm):
        return self._sigma(op, tuple(perm))

    def __repr__(self):
        return f"ColouredOperad({self.name})"


def comm_operad():
    """One colour, exactly one operation in every arity >= 1."""
    def ops(profile, out):
        return (("c", len(profile)),) if len(profile) >= 1 else ()

    return ColouredOperad(
        "comm", ("*",), ops,
        unit=lambda c: ("c", 1),
        gamma=lambda op, parts: ("c", sum(p[1] for p in parts)),
        sigma=lambda op, perm: op,
    )


def assoc_operad():
    """One colour; arity-n operations are the linear orders on inputs."""
    def ops(profile, out):
        n = len(profile)
        if n < 1:
            return ()
        return tuple(sorted(itertools.permutations(range(n))))

    def gamma(op, parts):
        offsets = []
        total = 0
        for p in parts:
            offsets.append(total)
            total += len(p)
        out = []
        for block in op:
            out.extend(offsets[block] + s for s in parts[block])
        return tuple(out)

    def sigma(op, perm):
        inv = {old: new for new, old in enumerate(perm)}
        return tuple(inv[s] for s in op)

    return ColouredOperad(
        "assoc", ("*",), ops,
        unit=lambda c: (0,),
        gamma=gamma,
        sigma=sigma,
    )


def _magma_trees(slots):
    if len(slots) == 1:
        yield slots[0]
        return
    rest = set(slots)
    for k in range(1, len(slots)):
        for left in itertools.combinations(slots, k):
            right = tuple(s for s in slots if s not in set(left))
            for lt in _magma_trees(left):
                for rt in _magma_trees(right):
                    yield (lt, rt)


def _magma_relabel(op, table):
    if isinstance(op, int):
        return table[op]
    return (_magma_relabel(op[0], table), _magma_relabel(op[1], table))


def _magma_arity(op):
    if isinstance(op, int):
        return 1
    return _magma_arity(op[0]) + _magma_arity(op[1])


def _magma_slots(op):
    if isinstance(op, int):
        return (op,)
    return _magma_slots(op[0]) + _magma_slots(op[1])


def magma_operad():
    """The free operad on one binary operation, one colour.

    Operations of arity n are bracketings with n bijectively labelled
    inputs, so there are n! times the (n-1)-st Catalan number of them.
    """
    def ops(profile, out):
        n = len(profile)
        if n < 1:
            return ()
        return tuple(sorted(_magma_trees(tuple(range(n))), key=repr))

    def gamma(op, parts):
        offsets = []
        total = 0
        for p in parts:
            offsets.append(total)
            total += _magma_arity(p)

        def subst(node):
            if isinstance(node, int):
                return _magma_relabel(
                    parts[node], {s: s + offsets[node]
                                  for s in _magma_slots(parts[node])}
                )
            return (subst(node[0]), subst(node[1]))

        return subst(op)

    def sigma(op, perm):
        inv = {old: new for new, old in enumerate(perm)}
        return _magma_relabel(op, inv)

    return ColouredOperad(
        "magma", ("*",), ops,
        unit=lambda c: 0,
        gamma=gamma,
        sigma=sigma,
    )


def two_colour_operad():
    """Two colours, one operation per arity when all colours agree."""
    def ops(profile, out):
        n = len(profile)
        if n < 1 or any(c != out for c in profile):
            return ()
        return (("m", out, n),)

    def gamma(op, parts):
        return ("m", op[1], sum(p[2] for p in parts))

    return ColouredOperad(
        "two-colour", ("a", "b"), ops,
        unit=lambda c: ("m", c, 1),
        gamma=gamma,
        sigma=lambda op, perm: op,
    )


def parity_operad():
    """Two colours 0/1; one operation whenever the input sum matches."""
    def ops(profile, out):
        n = len(profile)
        if n == 1:
            return (("p", profile, out),) if profile[0] == out else ()
        if n >= 2 and sum(profile) % 2 == out:
            return (("p", profile, out),)
        return ()

    def gamma(op, parts):
        prof = tuple(itertools.chain.from_iterable(p[1] for p in parts))
        return ("p", prof, op[2])

    def sigma(op, perm):
        return ("p", tuple(op[1][p] for p in perm), op[2])

    return ColouredOperad(
        "parity", (0, 1), ops,
        unit=lambda c: ("p", (c,), c),
        gamma=gamma,
        sigma=sigma,
    )


def indiscrete_operad():
    """Two colours, exactly one operation for every profile and output.

    Its unary operations between distinct colours are invertible but
    not units, so reduced-open nerves reject it; it exists for the
    equivalence checks on operad maps.
    """
    def ops(profile, out):
        return (("i", tuple(profile), out),) if len(profile) >= 1 else ()

    def gamma(op, parts):
        prof = tuple(itertools.chain.from_iterable(p[1] for p in parts))
        return ("i", prof, op[2])

    def sigma(op, perm):
        return ("i", tuple(op[1][p] for p in perm), op[2])

    return ColouredOperad(
        "indiscrete", ("a", "b"), ops,
        unit=lambda c: ("i", (c,), c),
        gamma=gamma,
        sigma=sigma,
    )


def check_operad(p: ColouredOperad, arity_bound=3) -> bool:
    """Unit, associativity and reindexing laws on a finite range."""
    profiles = [
        prof
        for n in range(1, arity_bound + 1)
        for prof in itertools.product(p.colours, repeat=n)
    ]
    for prof in profiles:
        n = len(prof)
        for out in p.colours:
            for op in p.ops(prof, out):
                if p.gamma(op, [p.unit(c) for c in prof]) != op:
                    return False
                if p.gamma(p.unit(out), [op]) != op:
                    return False
                if p.sigma(op, tuple(range(n))) != op:
                    return False
                for pi in itertools.permutations(range(n)):
                    for rho in itertools.permutations(range(n)):
                        twice = p.sigma(p.sigma(op, pi), rho)
                        once = p.sigma(op, tuple(pi[r] for r in rho))
                        if twice != once:
                            return False
    # associativity: substituting in two steps agrees with one step
    for out in p.colours:
        for prof2 in itertools.product(p.colours, repeat=2):
            for top in p.ops(prof2, out):
                mid_choices = []
                for c in prof2:
                    opts = [((c,), p.unit(c))]
                    for q in itertools.product(p.colours, repeat=2):
                        opts.extend((q, op2) for op2 in p.ops(q, c))
                    mid_choices.append(opts)
                for (pa, ma), (pb, mb) in itertools.product(*mid_choices):
                    composite = p.gamma(top, [ma, mb])
                    prof_mid = pa + pb
                    for pq in itertools.product(p.colours, repeat=2):
                        for q in p.ops(pq, prof_mid[0]):
                            rest = [p.unit(c) for c in prof_mid[1:]]
                            left = p.gamma(composite, [q] + rest)
                            inner = p.gamma(
                                ma, [q] + [p.unit(c) for c in pa[1:]]
                            )
                            right = p.gamma(top, [inner, mb])
                            if left != right:
                                return False
    return True


class OperadMap:
    """A map of coloured operads: colours and operations, pointwise."""

    __slots__ = ("source", "target", "colour_map", "op_map")

    def __init__(self, source, target, colour_map, op_map):
        self.source = source
        self.target = target
        self.colour_map = dict(colour_map)
        self.op_map = op_map


def dk_check_nerves(f: OperadMap, arity_bound=3) -> bool:
    """Essential surjectivity on colours plus bijections on every
    operation set: the strict, discrete form of operadic equivalence."""
    src, dst = f.source, f.target
    for n in range(1, arity_bound + 1):
        for prof in itertools.product(src.colours, repeat=n):
            tprof = tuple(f.colour_map[c] for c in prof)
            for out in src.colours:
                s_ops = src.ops(prof, out)
                t_ops = dst.ops(tprof, f.colour_map[out])
                images = [f.op_map(prof, out, op) for op in s_ops]
                if any(im not in t_ops for im in images):
                    return False
                if len(set(images)) != len(s_ops) or len(s_ops) != len(t_ops):
                    return False
    iso_pairs = {(c, c) for c in dst.colours}
    for c in dst.colours:
        for c2 in dst.colours:
            for u in dst.ops((c,), c2):
                for v in dst.ops((c2,), c):
                    if dst.gamma(u, [v]) == dst.unit(c2) and \
                            dst.gamma(v, [u]) == dst.unit(c):
                        iso_pairs.add((c, c2))
                        iso_pairs.add((c2, c))
    hit = {f.colour_map[c] for c in src.colours}
    reached = set(hit)
    grew = True
    while grew:
        grew = False
        for a, b in iso_pairs:
            if a in reached and b not in reached:
                reached.add(b)
                grew = True
    return reached == set(dst.colours)


# -------------------------------------------------------- operad nerves


def nerve_operad(p: ColouredOperad, trunc: Truncation, strunc=2) -> LeanDSpace:
    """Labelings of each tree by colours and operations, as a discrete
    presheaf; the action evaluates image subtrees by composition."""
    if trunc.variant != REDUCED_OPEN:
        raise WrongVariant("operad nerves are built on reduced open windows")
    for c in p.colours:
        if p.ops((), c):
            raise WrongVariant("nullary operations have no reduced open home")
        if p.ops((c,), c) != (p.unit(c),):
            raise WrongVariant("unary operations other than units are not "
                               "visible to reduced open trees")
        for c2 in p.colours:
            if c2 != c and p.ops((c,), c2):
                raise WrongVariant("unary operations other than units are "
                                   "not visible to reduced open trees")

    def labelings(rep):
        edges = sorted(rep.edges)
        out = []
        for ctuple in itertools.product(p.colours, repeat=len(edges)):
            col = dict(zip(edges, ctuple))
            per_vertex = []
            ok = True
            for v in rep.vertices:
                opts = p.ops(tuple(col[e] for e in v.ins), col[v.out])
                if not opts:
                    ok = False
                    break
                per_vertex.append(opts)
            if not ok:
                continue
            for choice in itertools.product(*per_vertex):
                out.append((ctuple, choice))
        return sorted(out, key=repr)

    cells = {code: labelings(trunc.reps[code]) for code in trunc.objects}
    values = {
        code: discrete_sset(cells[code], strunc) for code in trunc.objects
    }

    above = {
        code: {v.out: i for i, v in enumerate(trunc.reps[code].vertices)}
        for code in trunc.objects
    }

    def image(f, m, cell):
        rs, rt = f.source, f.target
        ct = canonical_code(rt)
        col_t = dict(zip(sorted(rt.edges), cell[0]))
        ops_t = cell[1]

        def evaluate(root, cut, want):
            def rec(e):
                if e in cut:
                    return p.unit(col_t[e]), (e,)
                vi = above[ct][e]
                v = rt.vertices[vi]
                parts = [rec(child) for child in v.ins]
                op = p.gamma(ops_t[vi], [q for q, _ in parts])
                leaves = tuple(itertools.chain.from_iterable(
                    l for _, l in parts))
                return op, leaves

            op, leaves = rec(root)
            if leaves == want:
                return op
            perm = tuple(leaves.index(e) for e in want)
            return p.sigma(op, perm)

        new_colours = tuple(col_t[f(e)] for e in sorted(rs.edges))
        new_ops = []
        for v in rs.vertices:
            ins = tuple(f(e) for e in v.ins)
            out_e = f(v.out)
            if v.arity == 1 and ins[0] == out_e:
                new_ops.append(p.unit(col_t[out_e]))
            else:
                new_ops.append(evaluate(out_e, frozenset(ins), ins))
        return (new_colours, tuple(new_ops))

    return _dspace_from_fn(trunc, values, image)


def strict_segal_check(x: LeanDSpace, bound: int) -> dict:
    """Value at each grafted tree vs the strict pullback of its pieces.

    Every decomposition along an inner edge of every window tree of
    degree <= bound is compared levelwise; the first failure is
    recorded with both cardinalities.
    """
    report = {"passed": True, "checked": 0, "counterexample": None}
    variant = x.trunc.variant
    for code in x.trunc.objects:
        rep = x.trunc.reps[code]
        if degree_value(rep, x.trunc.degree) > bound:
            continue
        for e in rep.inner_edges():
            lower, upper = split_at(rep, e)
            p_low = x.act(TreeMap(lower, rep, {d: d for d in lower.edges}))
            p_up = x.act(TreeMap(upper, rep, {d: d for d in upper.edges}))
            r_low = x.act(TreeMap(eta(variant), lower, {0: e}))
            r_up = x.act(TreeMap(eta(variant), upper, {0: e}))
            low_code = canonical_code(lower)
            up_code = canonical_code(upper)
            report["checked"] += 1
            for m in range(x.strunc + 1):
                pairs = {
                    (a, b)
                    for a in x.values[low_code].levels[m]
                    for b in x.values[up_code].levels[m]
                    if r_low.comps[m][a] == r_up.comps[m][b]
                }
                image = [
                    (p_low.comps[m][c], p_up.comps[m][c])
                    for c in x.values[code].levels[m]
                ]
                if len(set(image)) != len(image) or set(image) != pairs:
                    report["passed"] = False
                    if report["counterexample"] is None:
                        report["counterexample"] = {
                            "tree": code,
                            "edge": e,
                            "level": m,
                            "value": len(image),
                            "pullback": len(pairs),
                        }
    return report


def space_of_operations(x: LeanDSpace, colours, out_colour) -> SSet:
    """The fiber of x(C_n) over a tuple of colour points of x(eta)."""
    n = len(colours)
    if n < 2:
        raise InvalidStructure("operation spaces need at least two inputs")
    rep = x.trunc.rep(corolla(n, x.trunc.variant))
    eta_code = canonical_code(eta(x.trunc.variant))
    base = x.values[eta_code]
    points = set(base.levels[0])

    def resolve(c):
        if c in points:
            return c
        # nerve vertices are labelings ((colour,), ()); accept the colour
        if ((c,), ()) in points:
            return ((c,), ())
        raise InvalidStructure(f"colour {c!r} not found in x(eta)")

    colours = [resolve(c) for c in colours]
    out_colour = resolve(out_colour)
    legs = [
        x.act(TreeMap(eta(x.trunc.variant), rep, {0: i}))
        for i in range(n + 1)
    ]

    def fat(c, m):
        cell = c
        for k in range(m):
            cell = base.degen[(k, 0)][cell]
        return cell

    want = [out_colour] + list(colours)
    v = x.values[canonical_code(rep)]
    levels = []
    for m in range(x.strunc + 1):
        targets = [fat(c, m) for c in want]
        levels.append(tuple(
            cell for cell in v.levels[m]
            if all(legs[i].comps[m][cell] == targets[i] for i in range(n + 1))
        ))
    face = {
        (m, i): {c: v.face[(m, i)][c] for c in levels[m]}
        for m in range(1, x.strunc + 1)
        for i in range(m + 1)
    }
    degen = {
        (m, i): {c: v.degen[(m, i)][c] for c in levels[m]}
        for m in range(x.strunc)
        for i in range(m + 1)
    }
    return SSet(x.strunc, levels, face, degen, coskeletal=v.coskeletal)


# -------------------------------------------- natural maps and pushouts


def _nat_solutions(a: LeanDSpace, b: LeanDSpace, pins=None, budget=20000):
    """All natural maps a -> b as dicts (code, m, cell) -> cell."""
    if a.trunc != b.trunc or a.strunc != b.strunc:
        raise InvalidStructure("natural maps need a common window")
    names = []
    for code in a.trunc.objects:
        s = size(a.trunc.reps[code])
        for m in range(a.strunc + 1):
            for cell in a.values[code].levels[m]:
                names.append((s + m, code, m, cell))
    names.sort(key=lambda nd: (nd[0], nd[1], nd[2], repr(nd[3])))
    names = [nd[1:] for nd in names]
    if len(names) > budget:
        raise BudgetExceeded(f"{len(names)} cells in the source presheaf")
    sets = {
        (code, m, cell): b.values[code].levels[m]
        for code, m, cell in names
    }
    arrows = []
    for code, m, cell in names:
        av, bv = a.values[code], b.values[code]
        if m >= 1:
            for i in range(m + 1):
                arrows.append((
                    (code, m, cell),
                    (code, m - 1, av.face[(m, i)][cell]),
                    bv.face[(m, i)],
                ))
        if m < a.strunc:
            for i in range(m + 1):
                arrows.append((
                    (code, m, cell),
                    (code, m + 1, av.degen[(m, i)][cell]),
                    bv.degen[(m, i)],
                ))
    for cs, ct, f in a.trunc.arrows():
        am, bm = a.act(f), b.act(f)
        for m in range(a.strunc + 1):
            for cell in a.values[ct].levels[m]:
                arrows.append((
                    (ct, m, cell),
                    (cs, m, am.comps[m][cell]),
                    bm.comps[m],
                ))
    objects = list(names)
    extra_sets = dict(sets)
    if pins:
        # pins go first so forced values propagate before any search
        tags = []
        for j, (var, val) in enumerate(sorted(pins.items(), key=repr)):
            tag = ("#pin", j)
            tags.append(tag)
            extra_sets[tag] = (0,)
            arrows.append((tag, var, {0: val}))
        objects = tags + objects
    d = Diagram(objects, extra_sets, arrows)
    sols, proj = limit(d)
    out = []
    for tup in sols:
        out.append({name: tup[proj[name]] for name in names})
    out.sort(key=repr)
    return out


def natural_maps(a: LeanDSpace, b: LeanDSpace, budget=20000):
    """Every natural map a -> b, as DSpaceMaps."""
    maps = []
    for sol in _nat_solutions(a, b, budget=budget):
        comps = {
            code: SSetMap(
                a.values[code], b.values[code],
                {m: {cell: sol[(code, m, cell)]
                     for cell in a.values[code].levels[m]}
                 for m in range(a.strunc + 1)},
            )
            for code in a.trunc.objects
        }
        maps.append(DSpaceMap(a, b, comps))
    return maps


def normalization_e(trunc: Truncation, stages: int, strunc=3, budget=20000):
    """Stagewise cell attachment: at stage n, one pushout glues a cell
    B = hom(-, t) x Delta[m] along its boundary A for every (t, m) with
    size(t) + m = n and every natural map A -> E_{n-1}.

    Returns (spaces, inclusions, schedule); the schedule records how
    many cells each stage attached where, since no canonical choice of
    normalization exists.
    """
    prev = empty_dspace(trunc, strunc)
    spaces = []
    inclusions = []
    schedule = []
    for n in range(stages + 1):
        pieces = []
        stage_row = []
        for code in trunc.objects:
            rep = trunc.reps[code]
            m = n - size(rep)
            if m < 0:
                continue
            if m > strunc:
                raise WindowTooSmall(
                    f"stage {n} needs simplicial level {m} at {code}"
                )
            small, big, _ = cell_pair(trunc, rep, m, strunc)
            a_levels = {
                c: [set(lv) for lv in small.values[c].levels]
                for c in trunc.objects
            }
            sols = _nat_solutions(small, prev, budget=budget)
            for sol in sols:
                pieces.append((big, a_levels, sol))
            stage_row.append({"tree": code, "m": m, "attachments": len(sols)})
        schedule.append({"stage": n, "pieces": stage_row})

        def resolve(j, code, k, bcell):
            big, a_levels, sol = pieces[j]
            if bcell in a_levels[code][k]:
                return sol[(code, k, bcell)]
            return ("cell", n, j, bcell)

        values = {}
        fresh_cells = set()
        for code in trunc.objects:
            old = prev.values[code]
            levels = []
            for k in range(strunc + 1):
                fresh = [
                    ("cell", n, j, bcell)
                    for j, (big, a_levels, sol) in enumerate(pieces)
                    for bcell in big.values[code].levels[k]
                    if bcell not in a_levels[code][k]
                ]
                fresh_cells.update(fresh)
                levels.append(tuple(old.levels[k]) + tuple(fresh))
            face = {}
            degen = {}
            for k in range(1, strunc + 1):
                for i in range(k + 1):
                    d = dict(old.face[(k, i)])
                    for cell in levels[k][len(old.levels[k]):]:
                        _, _, j, bcell = cell
                        img = pieces[j][0].values[code].face[(k, i)][bcell]
                        d[cell] = resolve(j, code, k - 1, img)
                    face[(k, i)] = d
            for k in range(strunc):
                for i in range(k + 1):
                    d = dict(old.degen[(k, i)])
                    for cell in levels[k][len(old.levels[k]):]:
                        _, _, j, bcell = cell
                        img = pieces[j][0].values[code].degen[(k, i)][bcell]
                        d[cell] = resolve(j, code, k + 1, img)
                    degen[(k, i)] = d
            values[code] = SSet(strunc, levels, face, degen)

        def image(f, k, cell):
            if cell in fresh_cells:
                _, _, j, bcell = cell
                img = pieces[j][0].act(f).comps[k][bcell]
                return resolve(j, canonical_code(f.source), k, img)
            return prev.act(f).comps[k][cell]

        stage_space = _dspace_from_fn(trunc, values, image)
        incl = DSpaceMap(prev, stage_space, {
            c: SSetMap(prev.values[c], values[c], _id_comps(prev.values[c]))
            for c in trunc.objects
        })
        spaces.append(stage_space)
        inclusions.append(incl)
        prev = stage_space
    return spaces, inclusions, schedule


def rlp_boundary_report(x: LeanDSpace, joint_bound: int, budget=20000) -> dict:
    """Window-bounded right lifting against the generating boundary
    inclusions of joint degree <= joint_bound."""
    report = {"passed": True, "checked": 0, "counterexample": None}
    trunc = x.trunc
    for code in trunc.objects:
        rep = trunc.reps[code]
        for m in range(joint_bound - size(rep) + 1):
            if m > x.strunc:
                raise WindowTooSmall(f"need simplicial level {m} at {code}")
            small, big, _ = cell_pair(trunc, rep, m, x.strunc)
            for sol in _nat_solutions(small, x, budget=budget):
                report["checked"] += 1
                lifted = _nat_solutions(big, x, pins=sol, budget=budget)
                if not lifted:
                    report["passed"] = False
                    if report["counterexample"] is None:
                        report["counterexample"] = {
                            "tree": code,
                            "m": m,
                            "map": sorted(sol.items(), key=repr)[:4],
                        }
    return report


def restrict_dspace(x: LeanDSpace, sub: Truncation) -> LeanDSpace:
    """The same presheaf on a full subwindow."""
    missing = set(sub.objects) - set(x.trunc.objects)
    if missing:
        raise WindowTooSmall(f"{sorted(missing)} not in the source window")
    values = {c: x.values[c] for c in sub.objects}
    action = {
        arrow_key(f): x.action[arrow_key(f)] for _, _, f in sub.arrows()
    }
    return LeanDSpace(sub, values, action, check=False)


# ------------------------------------------------------------- JSON i/o


def trunc_to_json(trunc: Truncation) -> dict:
    return {
        "variant": trunc.variant,
        "degree": trunc.degree,
        "bound": trunc.bound,
        "objects": list(trunc.objects),
        "trees": {c: json.loads(tree_to_json(trunc.reps[c]))
                  for c in trunc.objects},
    }


def trunc_from_json(doc: dict) -> Truncation:
    try:
        reps = {
            c: tree_from_json(json.dumps(doc["trees"][c]))
            for c in doc["objects"]
        }
        return Truncation(doc["variant"], doc["degree"], doc["bound"], reps)
    except (KeyError, TypeError) as exc:
        raise InvalidStructure(f"malformed truncation: {exc}") from exc


def dspace_to_json(x: LeanDSpace) -> str:
    index = {
        c: [{cell: i for i, cell in enumerate(level)}
            for level in x.values[c].levels]
        for c in x.trunc.objects
    }
    action = {}
    for cs, ct, f in x.trunc.arrows():
        key = f"{cs}|{ct}|" + ",".join(
            f"{a}>{b}" for a, b in _edge_key(f.edge_map)
        )
        sm = x.action[arrow_key(f)]
        action[key] = [
            [index[cs][m][sm.comps[m][cell]]
             for cell in x.values[ct].levels[m]]
            for m in range(x.strunc + 1)
        ]
    doc = {
        "trunc": trunc_to_json(x.trunc),
        "values": {c: json.loads(sset_to_json(x.values[c]))
                   for c in x.trunc.objects},
        "action": action,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def dspace_from_json(text: str) -> LeanDSpace:
    doc = json.loads(text)
    try:
        trunc = trunc_from_json(doc["trunc"])
        values = {
            c: sset_from_json(json.dumps(doc["values"][c]))
            for c in trunc.objects
        }
        action = {}
        for cs, ct, f in trunc.arrows():
            key = f"{cs}|{ct}|" + ",".join(
                f"{a}>{b}" for a, b in _edge_key(f.edge_map)
            )
            table = doc["action"][key]
            comps = {
                m: {
                    values[ct].levels[m][i]: values[cs].levels[m][img]
                    for i, img in enumerate(table[m])
                }
                for m in range(values[ct].trunc + 1)
            }
            action[arrow_key(f)] = SSetMap(values[ct], values[cs], comps)
        return LeanDSpace(trunc, values, action)
    except (KeyError, IndexError, TypeError) as exc:
        raise InvalidStructure(f"malformed presheaf: {exc}") from exc
