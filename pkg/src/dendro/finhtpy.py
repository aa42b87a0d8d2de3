"""Finite diagram (co)limits and truncated simplicial sets.

Everything is finite and explicit.  A simplicial set stores its levels
up to a truncation dimension; above that, a coskeletal object is
evaluated on demand, an m-cell being a compatible family
(y_0, ..., y_m) of (m-1)-cells with d_i y_j = d_{j-1} y_i for i < j.
Such family cells are plain tuples, so faces above the truncation are
component projections.
"""

from __future__ import annotations

import json
from itertools import product

from .errors import InvalidStructure, WindowTooSmall


class UnionFind:
    def __init__(self, items=()):
        self.parent = {}
        for x in items:
            self.parent.setdefault(x, x)

    def add(self, x):
        self.parent.setdefault(x, x)

    def find(self, x):
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # deterministic representative: least identifier
            lo, hi = sorted((ra, rb), key=repr)
            self.parent[hi] = lo

    def classes(self):
        out = {}
        for x in self.parent:
            out.setdefault(self.find(x), []).append(x)
        return {r: sorted(v, key=repr) for r, v in out.items()}


class Diagram:
    """A functor from a finite shape to finite sets.

    Arrows are (source object, target object, mapping dict); the
    builders in this package only produce functorial data, so no
    composition table is re-checked here.
    """

    __slots__ = ("objects", "sets", "arrows")

    def __init__(self, objects, sets, arrows):
        self.objects = tuple(objects)
        self.sets = {o: tuple(sets[o]) for o in self.objects}
        self.arrows = tuple((s, t, dict(m)) for s, t, m in arrows)
        for s, t, m in self.arrows:
            if s not in self.sets or t not in self.sets:
                raise InvalidStructure("arrow endpoints must be objects")
            if set(m) != set(self.sets[s]):
                raise InvalidStructure("arrow mapping must be total")
            target = set(self.sets[t])
            if any(v not in target for v in m.values()):
                raise InvalidStructure("arrow mapping leaves the target set")


def limit(d: Diagram):
    """(elements, projections): tuples over the objects satisfying
    every arrow constraint, with projections as index lookup."""
    objs = list(d.objects)
    by_src = {o: [] for o in objs}
    for s, t, m in d.arrows:
        by_src[s].append((t, m))
    elements = []

    def propagate(vals, queue):
        while queue:
            o = queue.pop()
            for t, m in by_src[o]:
                w = m[vals[o]]
                if t in vals:
                    if vals[t] != w:
                        return False
                else:
                    vals[t] = w
                    queue.append(t)
        return True

    def assign(vals, i):
        while i < len(objs) and objs[i] in vals:
            i += 1
        if i == len(objs):
            elements.append(tuple(vals[o] for o in objs))
            return
        o = objs[i]
        for v in d.sets[o]:
            new = dict(vals)
            new[o] = v
            if propagate(new, [o]):
                assign(new, i + 1)

    assign({}, 0)
    elements.sort(key=repr)
    return elements, {o: i for i, o in enumerate(objs)}


def colimit(d: Diagram):
    """(elements, injections): tagged disjoint union modulo the
    equivalence generated by the arrows."""
    uf = UnionFind((o, x) for o in d.objects for x in d.sets[o])
    for s, t, m in d.arrows:
        for x, y in m.items():
            uf.union((s, x), (t, y))
    classes = uf.classes()
    elements = sorted(classes, key=repr)
    inj = {
        o: {x: uf.find((o, x)) for x in d.sets[o]} for o in d.objects
    }
    return elements, inj


# -------------------------------------------------------- simplicial sets


class SSet:
    """A truncated simplicial set with an optional coskeletal rule."""

    __slots__ = ("trunc", "levels", "face", "degen", "coskeletal", "_eval_cache")

    def __init__(self, trunc, levels, face, degen, coskeletal=True, check=True):
        self.trunc = trunc
        self.levels = tuple(tuple(l) for l in levels)
        self.face = {k: dict(v) for k, v in face.items()}
        self.degen = {k: dict(v) for k, v in degen.items()}
        self.coskeletal = coskeletal
        self._eval_cache = {}
        if check:
            self._check()

    def _check(self):
        if len(self.levels) != self.trunc + 1:
            raise InvalidStructure("one level per dimension 0..trunc")
        for m in range(1, self.trunc + 1):
            here, below = set(self.levels[m]), set(self.levels[m - 1])
            for i in range(m + 1):
                d = self.face.get((m, i))
                if d is None or set(d) != here:
                    raise InvalidStructure(f"face ({m},{i}) not total")
                if any(v not in below for v in d.values()):
                    raise InvalidStructure(f"face ({m},{i}) leaves level {m-1}")
        for m in range(self.trunc):
            for i in range(m + 1):
                s = self.degen.get((m, i))
                if s is None or set(s) != set(self.levels[m]):
                    raise InvalidStructure(f"degeneracy ({m},{i}) not total")
        # simplicial identities on stored levels
        for m in range(2, self.trunc + 1):
            for j in range(m + 1):
                for i in range(j):
                    for z in self.levels[m]:
                        left = self.face[(m - 1, i)][self.face[(m, j)][z]]
                        right = self.face[(m - 1, j - 1)][self.face[(m, i)][z]]
                        if left != right:
                            raise InvalidStructure(
                                f"d_{i} d_{j} != d_{j-1} d_{i} at level {m}"
                            )
        for m in range(self.trunc - 1):
            for j in range(m + 1):
                for i in range(j + 1):
                    for z in self.levels[m]:
                        left = self.degen[(m + 1, i)][self.degen[(m, j)][z]]
                        right = self.degen[(m + 1, j + 1)][self.degen[(m, i)][z]]
                        if left != right:
                            raise InvalidStructure("s_i s_j != s_{j+1} s_i")
        for m in range(self.trunc):
            for j in range(m + 1):
                for i in range(m + 2):
                    for z in self.levels[m]:
                        got = self.face[(m + 1, i)][self.degen[(m, j)][z]]
                        if i == j or i == j + 1:
                            want = z
                        elif i < j:
                            want = self.degen[(m - 1, j - 1)][self.face[(m, i)][z]]
                        else:
                            want = self.degen[(m - 1, j)][self.face[(m, i - 1)][z]]
                        if got != want:
                            raise InvalidStructure("face/degeneracy identity fails")

    def __repr__(self):
        sizes = ",".join(str(len(l)) for l in self.levels)
        return f"SSet(trunc={self.trunc}, levels=[{sizes}])"


def _face(x: SSet, m, cell, i):
    # above the truncation a cell is its own boundary family
    return x.face[(m, i)][cell] if m <= x.trunc else cell[i]


def sset_eval(x: SSet, m: int):
    """The m-cells, computed through the coskeletal rule above trunc."""
    if m <= x.trunc:
        return list(x.levels[m])
    if not x.coskeletal:
        raise WindowTooSmall(f"level {m} above truncation {x.trunc}")
    if m in x._eval_cache:
        return list(x._eval_cache[m])
    cells = [
        tuple(fam[i] for i in range(m + 1)) for fam in _families(x, m)
    ]
    x._eval_cache[m] = cells
    return list(cells)


def _families(x: SSet, m: int, skip=None):
    """Compatible (m-1)-cell families (d_i y_j = d_{j-1} y_i, i < j).

    With skip=k the k-th member is omitted (a horn); otherwise the
    family is a full sphere.  Yields dicts position -> cell.
    """
    cells = sset_eval(x, m - 1)
    positions = [j for j in range(m + 1) if j != skip]
    idx = {}
    if m - 1 >= 1:
        for c in cells:
            for i in range(m):
                idx.setdefault((i, _face(x, m - 1, c, i)), []).append(c)
    out = []

    def place(pi, chosen):
        if pi == len(positions):
            out.append(dict(chosen))
            return
        j = positions[pi]
        cons = (
            [(i, _face(x, m - 1, chosen[i], j - 1)) for i in positions[:pi]]
            if m >= 2
            else []
        )
        if not cons:
            cands = cells
        else:
            cands = idx.get(cons[0], [])
        for y in cands:
            if all(_face(x, m - 1, y, i) == v for i, v in cons[1:]):
                chosen[j] = y
                place(pi + 1, chosen)
                del chosen[j]

    place(0, {})
    return out


def _fillers(x: SSet, m, faces):
    """All m-cells whose faces agree with the given position->cell dict."""
    top = sset_eval(x, m)
    items = sorted(faces.items())
    return [
        z
        for z in top
        if all(_face(x, m, z, i) == v for i, v in items)
    ]


def kan_check(x: SSet, dim_bound: int) -> bool:
    """Whether every horn up to the bound has a filler."""
    for m in range(1, dim_bound + 1):
        for k in range(m + 1):
            for horn in _families(x, m, skip=k):
                if not _fillers(x, m, horn):
                    return False
    return True


def pi0(x: SSet):
    uf = UnionFind(x.levels[0])
    for e in x.levels[1]:
        uf.union(x.face[(1, 0)][e], x.face[(1, 1)][e])
    return sorted(uf.classes(), key=repr)


class SSetMap:
    __slots__ = ("source", "target", "comps")

    def __init__(self, source, target, comps, check=True):
        self.source = source
        self.target = target
        self.comps = {m: dict(c) for m, c in comps.items()}
        if check:
            if source.trunc != target.trunc:
                raise InvalidStructure("maps require equal truncations")
            for m in range(source.trunc + 1):
                c = self.comps.get(m)
                if c is None or set(c) != set(source.levels[m]):
                    raise InvalidStructure(f"component {m} not total")
                allowed = set(target.levels[m])
                if any(v not in allowed for v in c.values()):
                    raise InvalidStructure(f"component {m} leaves the target")
            for m in range(1, source.trunc + 1):
                for i in range(m + 1):
                    for z in source.levels[m]:
                        if self.comps[m - 1][source.face[(m, i)][z]] != \
                                target.face[(m, i)][self.comps[m][z]]:
                            raise InvalidStructure("map does not commute with faces")
            for m in range(source.trunc):
                for i in range(m + 1):
                    for z in source.levels[m]:
                        if self.comps[m + 1][source.degen[(m, i)][z]] != \
                                target.degen[(m, i)][self.comps[m][z]]:
                            raise InvalidStructure(
                                "map does not commute with degeneracies"
                            )

    def __call__(self, m, cell):
        if m <= self.source.trunc:
            return self.comps[m][cell]
        return tuple(self(m - 1, c) for c in cell)


def rlp_check(f: SSetMap, against, dim_bound: int) -> bool:
    """Right lifting property against boundary and/or horn inclusions.

    against is an iterable of tags from {"boundary", "horn"}; each tag
    expands to the full family of inclusions up to dim_bound.
    """
    x, y = f.source, f.target
    kinds = set(against)
    bad = kinds - {"boundary", "horn"}
    if bad:
        raise InvalidStructure(f"unknown inclusion tags {sorted(bad)}")
    for m in range(dim_bound + 1):
        squares = []
        if "boundary" in kinds:
            if m == 0:
                squares += [({}, v) for v in sset_eval(y, 0)]
            else:
                for u in _families(x, m):
                    img = {i: f(m - 1, c) for i, c in u.items()}
                    squares += [(u, v) for v in _fillers(y, m, img)]
        if "horn" in kinds and m >= 1:
            for k in range(m + 1):
                for u in _families(x, m, skip=k):
                    img = {i: f(m - 1, c) for i, c in u.items()}
                    squares += [(u, v) for v in _fillers(y, m, img)]
        for u, v in squares:
            if not any(f(m, z) == v for z in _fillers(x, m, u)):
                return False
    return True


# ---------------------------------------------------------- constructions


def discrete_sset(ids, trunc: int = 1) -> SSet:
    """Constant simplicial set on a finite set.

    Stored at truncation >= 1: with only a 0-level the coskeletal rule
    would produce the codiscrete object instead.
    """
    ids = tuple(ids)
    if trunc < 1:
        raise InvalidStructure("a discrete object needs its identity edges")
    return SSet(
        trunc,
        [ids] * (trunc + 1),
        {
            (m, i): {x: x for x in ids}
            for m in range(1, trunc + 1)
            for i in range(m + 1)
        },
        {
            (m, i): {x: x for x in ids}
            for m in range(trunc)
            for i in range(m + 1)
        },
    )


def point_sset(trunc: int = 1) -> SSet:
    return discrete_sset([0], trunc)


def _tuple_sset(level_fn, trunc) -> SSet:
    """Levels of tuples with face = drop and degeneracy = repeat."""
    levels = [tuple(level_fn(m)) for m in range(trunc + 1)]
    face = {
        (m, i): {c: c[:i] + c[i + 1 :] for c in levels[m]}
        for m in range(1, trunc + 1)
        for i in range(m + 1)
    }
    degen = {
        (m, i): {c: c[: i + 1] + c[i:] for c in levels[m]}
        for m in range(trunc)
        for i in range(m + 1)
    }
    return SSet(trunc, levels, face, degen)


def nerve_groupoid(k: int, trunc: int = 2) -> SSet:
    """Nerve of the groupoid with k+1 objects and a unique iso between
    any two: m-cells are (m+1)-tuples of objects."""
    return _tuple_sset(lambda m: product(range(k + 1), repeat=m + 1), trunc)


def delta_sset(n: int, trunc: int = 2) -> SSet:
    """The n-simplex: m-cells are monotone (m+1)-tuples in 0..n."""

    def mono(m):
        for c in product(range(n + 1), repeat=m + 1):
            if all(a <= b for a, b in zip(c, c[1:])):
                yield c

    return _tuple_sset(mono, trunc)


def product_sset(x: SSet, y: SSet) -> SSet:
    trunc = min(x.trunc, y.trunc)
    levels = [
        tuple(product(x.levels[m], y.levels[m])) for m in range(trunc + 1)
    ]
    face = {
        (m, i): {
            (a, b): (x.face[(m, i)][a], y.face[(m, i)][b])
            for a, b in levels[m]
        }
        for m in range(1, trunc + 1)
        for i in range(m + 1)
    }
    degen = {
        (m, i): {
            (a, b): (x.degen[(m, i)][a], y.degen[(m, i)][b])
            for a, b in levels[m]
        }
        for m in range(trunc)
        for i in range(m + 1)
    }
    return SSet(trunc, levels, face, degen, coskeletal=x.coskeletal and y.coskeletal)


def coproduct_sset(parts) -> SSet:
    parts = list(parts)
    if not parts:
        raise InvalidStructure("empty coproduct needs an explicit truncation")
    trunc = min(p.trunc for p in parts)
    levels = [
        tuple((pi, c) for pi, p in enumerate(parts) for c in p.levels[m])
        for m in range(trunc + 1)
    ]
    face = {
        (m, i): {
            (pi, c): (pi, parts[pi].face[(m, i)][c]) for pi, c in levels[m]
        }
        for m in range(1, trunc + 1)
        for i in range(m + 1)
    }
    degen = {
        (m, i): {
            (pi, c): (pi, parts[pi].degen[(m, i)][c]) for pi, c in levels[m]
        }
        for m in range(trunc)
        for i in range(m + 1)
    }
    return SSet(
        trunc, levels, face, degen, coskeletal=all(p.coskeletal for p in parts)
    )


def is_n_coskeletal(x: SSet, n: int) -> bool:
    """Whether the stored levels above n are exactly the coskeletal
    extension of the n-truncation."""
    if n >= x.trunc:
        return True
    y = SSet(
        n,
        x.levels[: n + 1],
        {(m, i): x.face[(m, i)] for m in range(1, n + 1) for i in range(m + 1)},
        {(m, i): x.degen[(m, i)] for m in range(n) for i in range(m + 1)},
        coskeletal=True,
        check=False,
    )

    def proj(m, c):
        if m <= n:
            return c
        return tuple(proj(m - 1, x.face[(m, i)][c]) for i in range(m + 1))

    for m in range(n + 1, x.trunc + 1):
        want = {tuple(f[i] for i in range(m + 1)) for f in _families(y, m)}
        got = [proj(m, c) for c in x.levels[m]]
        if len(set(got)) != len(got) or set(got) != want:
            return False
    return True


# ------------------------------------------------------------- group part


class Group:
    """A finite group of permutation tuples under composition."""

    __slots__ = ("elements", "identity")

    def __init__(self, elements):
        self.elements = tuple(elements)
        n = len(self.elements[0])
        self.identity = tuple(range(n))
        if self.identity not in self.elements:
            raise InvalidStructure("missing identity permutation")
        have = set(self.elements)
        for a in self.elements:
            for b in self.elements:
                if self.mult(a, b) not in have:
                    raise InvalidStructure("not closed under composition")

    def mult(self, a, b):
        # right-to-left composition: (a*b)(i) = a(b(i))
        return tuple(a[b[i]] for i in range(len(a)))

    def inverse(self, a):
        inv = [0] * len(a)
        for i, v in enumerate(a):
            inv[v] = i
        return tuple(inv)

    def __len__(self):
        return len(self.elements)


def symmetric_group(n: int) -> Group:
    from itertools import permutations

    return Group(permutations(range(n)))


def trivial_group() -> Group:
    return symmetric_group(1)


class GSSet(SSet):
    """A simplicial set with a right group action on every level."""

    __slots__ = ("group", "action")

    def __init__(self, group, trunc, levels, face, degen, action,
                 coskeletal=True, check=True):
        super().__init__(trunc, levels, face, degen, coskeletal, check)
        self.group = group
        self.action = {m: dict(a) for m, a in action.items()}
        if check:
            self._check_action()

    def _check_action(self):
        g = self.group
        for m in range(self.trunc + 1):
            act = self.action.get(m, {})
            for c in self.levels[m]:
                if act.get((c, g.identity)) != c:
                    raise InvalidStructure("identity must act trivially")
                for a in g.elements:
                    for b in g.elements:
                        if act[(act[(c, a)], b)] != act[(c, g.mult(a, b))]:
                            raise InvalidStructure("action is not associative")
        for m in range(1, self.trunc + 1):
            for i in range(m + 1):
                for c in self.levels[m]:
                    for a in self.group.elements:
                        left = self.face[(m, i)][self.action[m][(c, a)]]
                        right = self.action[m - 1][(self.face[(m, i)][c], a)]
                        if left != right:
                            raise InvalidStructure("action does not commute with faces")

    def act(self, m, cell, g):
        return self.action[m][(cell, g)]

    def orbits(self, m):
        uf = UnionFind(self.levels[m])
        for c in self.levels[m]:
            for g in self.group.elements:
                uf.union(c, self.act(m, c, g))
        return uf.classes()

    def is_free(self, m) -> bool:
        return all(
            self.act(m, c, g) != c
            for c in self.levels[m]
            for g in self.group.elements
            if g != self.group.identity
        )


def eg(g: Group, trunc: int = 2) -> GSSet:
    """Nerve of the translation groupoid: tuples of group elements with
    diagonal right multiplication."""
    base = _tuple_sset(lambda m: product(g.elements, repeat=m + 1), trunc)
    action = {
        m: {
            (c, a): tuple(g.mult(x, a) for x in c)
            for c in base.levels[m]
            for a in g.elements
        }
        for m in range(trunc + 1)
    }
    return GSSet(g, trunc, base.levels, base.face, base.degen, action)


def empty_gsset(g: Group, trunc: int = 2) -> GSSet:
    return GSSet(
        g,
        trunc,
        [()] * (trunc + 1),
        {(m, i): {} for m in range(1, trunc + 1) for i in range(m + 1)},
        {(m, i): {} for m in range(trunc) for i in range(m + 1)},
        {m: {} for m in range(trunc + 1)},
    )


def point_gsset(g: Group, trunc: int = 2) -> GSSet:
    base = _tuple_sset(lambda m: [(0,) * (m + 1)], trunc)
    action = {
        m: {(c, a): c for c in base.levels[m] for a in g.elements}
        for m in range(trunc + 1)
    }
    return GSSet(g, trunc, base.levels, base.face, base.degen, action)


def normal_mono_g(f: SSetMap) -> bool:
    """Levelwise injective with a free action on the image complement."""
    x, y = f.source, f.target
    if not isinstance(x, GSSet) or not isinstance(y, GSSet):
        raise InvalidStructure("both ends must carry group actions")
    if x.group.elements != y.group.elements:
        raise InvalidStructure("actions must share the group")
    g = x.group
    for m in range(x.trunc + 1):
        for c in x.levels[m]:
            for a in g.elements:
                if f.comps[m][x.act(m, c, a)] != y.act(m, f.comps[m][c], a):
                    raise InvalidStructure("map is not equivariant")
        image = set(f.comps[m].values())
        if len(image) != len(x.levels[m]):
            return False
        for c in y.levels[m]:
            if c in image:
                continue
            if any(
                y.act(m, c, a) == c
                for a in g.elements
                if a != g.identity
            ):
                return False
    return True


# -------------------------------------------------------- serialization


def sset_to_json(x: SSet) -> str:
    index = [
        {c: i for i, c in enumerate(level)} for level in x.levels
    ]
    doc = {
        "trunc": x.trunc,
        "coskeletal": x.coskeletal,
        "levels": [list(range(len(l))) for l in x.levels],
        "d": {
            str(m): [
                [index[m - 1][x.face[(m, i)][c]] for c in x.levels[m]]
                for i in range(m + 1)
            ]
            for m in range(1, x.trunc + 1)
        },
        "s": {
            str(m): [
                [index[m + 1][x.degen[(m, i)][c]] for c in x.levels[m]]
                for i in range(m + 1)
            ]
            for m in range(x.trunc)
        },
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def sset_from_json(text: str) -> SSet:
    doc = json.loads(text)
    try:
        trunc = doc["trunc"]
        levels = [tuple(l) for l in doc["levels"]]
        face = {
            (int(m), i): dict(zip(levels[int(m)], images))
            for m, per_i in doc["d"].items()
            for i, images in enumerate(per_i)
        }
        degen = {
            (int(m), i): dict(zip(levels[int(m)], images))
            for m, per_i in doc["s"].items()
            for i, images in enumerate(per_i)
        }
        return SSet(trunc, levels, face, degen, doc["coskeletal"])
    except (KeyError, IndexError, TypeError) as exc:
        raise InvalidStructure(f"malformed simplicial set: {exc}") from exc


def group_to_json(g: Group) -> str:
    return json.dumps(
        {"elements": sorted(list(p) for p in g.elements)},
        sort_keys=True,
        separators=(",", ":"),
    )


def group_from_json(text: str) -> Group:
    doc = json.loads(text)
    try:
        return Group(tuple(tuple(p) for p in doc["elements"]))
    except KeyError as exc:
        raise InvalidStructure(f"missing field {exc}") from exc
