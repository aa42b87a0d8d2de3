"""Towers of lean presheaves as a finite stand-in for pro-objects.

An inverse system indexed by the naturals, with every stage a lean
presheaf and bond maps running down the index.  The completion tower
of a degreewise finite presheaf has the joint-degree coskeleta as
stages; since each value here is a finite table, the tower determines
the presheaf once the stages stabilize, which they do at the largest
joint degree carrying data.

Normality of a levelwise map is graded: a map is n-normal when, up to
joint degree n, it is injective and the automorphism groups act
freely off its image.  A tower map is increasingly normal when for
every tested n some tail of the tower is n-normal throughout; the
witness records where each tail starts.

Stages materialize lazily and are memoized behind a lock, so
concurrent readers always observe a consistent prefix.
"""

import json
import threading

from .errors import InvalidStructure, WindowTooSmall
from .presheaf import (
    DSpaceMap,
    LeanDSpace,
    _cosk_nodes,
    cosk,
    dspace_to_json,
    is_normal_mono,
)
from .finhtpy import SSetMap
from .trees import SIZE, enumerate_rep_trees, size


# ------------------------------------------------------ map utilities


def _identity_dmap(x: LeanDSpace) -> DSpaceMap:
    comps = {
        c: SSetMap(
            x.values[c],
            x.values[c],
            {m: {cell: cell for cell in x.values[c].levels[m]}
             for m in range(x.strunc + 1)},
            check=False,
        )
        for c in x.trunc.objects
    }
    return DSpaceMap(x, x, comps, check=False)


def _compose_dmaps(g: DSpaceMap, f: DSpaceMap) -> DSpaceMap:
    comps = {
        c: SSetMap(
            f.source.values[c],
            g.target.values[c],
            {m: {cell: g.comps[c].comps[m][f.comps[c].comps[m][cell]]
                 for cell in f.source.values[c].levels[m]}
             for m in range(f.source.strunc + 1)},
            check=False,
        )
        for c in f.source.trunc.objects
    }
    return DSpaceMap(f.source, g.target, comps, check=False)


def _dmaps_equal(f: DSpaceMap, g: DSpaceMap) -> bool:
    return all(
        f.comps[c].comps == g.comps[c].comps for c in f.source.trunc.objects
    )


def _dmap_bijective(f: DSpaceMap) -> bool:
    for c in f.source.trunc.objects:
        for m in range(f.source.strunc + 1):
            comp = f.comps[c].comps[m]
            if len(set(comp.values())) != len(comp):
                return False
            if len(comp) != len(f.target.values[c].levels[m]):
                return False
    return True


# -------------------------------------------------------------- towers


class Tower:
    """A lazily materialized inverse system of lean presheaves.

    stage(k) builds and caches the k-th stage; bond(k) the map from
    stage k+1 down to stage k.  Construction runs under a lock, so a
    reader never sees a partially built prefix.
    """

    __slots__ = ("_stage_fn", "_bond_fn", "_stages", "_bonds", "_lock")

    def __init__(self, stage_fn, bond_fn):
        self._stage_fn = stage_fn
        self._bond_fn = bond_fn
        self._stages = {}
        self._bonds = {}
        self._lock = threading.RLock()

    def stage(self, k: int) -> LeanDSpace:
        if k < 0:
            raise InvalidStructure("tower stages are indexed by naturals")
        with self._lock:
            if k not in self._stages:
                self._stages[k] = self._stage_fn(k)
            return self._stages[k]

    def bond(self, k: int) -> DSpaceMap:
        with self._lock:
            if k not in self._bonds:
                self._bonds[k] = self._bond_fn(
                    k, self.stage(k + 1), self.stage(k)
                )
            return self._bonds[k]

    @property
    def prefix(self) -> int:
        with self._lock:
            return max(self._stages, default=-1)

    @classmethod
    def constant(cls, x: LeanDSpace) -> "Tower":
        return cls(lambda k: x, lambda k, up, dn: _identity_dmap(x))

    @classmethod
    def from_stages(cls, stages, bonds) -> "Tower":
        stages, bonds = list(stages), list(bonds)
        if len(bonds) != len(stages) - 1:
            raise InvalidStructure("need one bond per consecutive pair")
        return cls(
            lambda k: stages[k], lambda k, up, dn: bonds[k]
        )


def _descend(tw: Tower, hi: int, lo: int) -> DSpaceMap:
    """Composite bond from stage hi down to stage lo."""
    f = _identity_dmap(tw.stage(hi))
    for j in range(hi - 1, lo - 1, -1):
        f = _compose_dmaps(tw.bond(j), f)
    return f


def _reindexed(tw: Tower, idx) -> Tower:
    idx = list(idx)
    return Tower(
        lambda k: tw.stage(idx[k]),
        lambda k, up, dn: _descend(tw, idx[k + 1], idx[k]),
    )


class TowerMap:
    """Levelwise maps between towers, commuting with the bonds."""

    __slots__ = ("source", "target", "maps")

    def __init__(self, source: Tower, target: Tower, maps, check=True):
        self.source = source
        self.target = target
        self.maps = dict(maps)
        if check:
            for k, f in self.maps.items():
                if f.source is not source.stage(k) or \
                        f.target is not target.stage(k):
                    raise InvalidStructure(
                        f"stage {k} map does not join the tower stages"
                    )
            for k in sorted(self.maps):
                if k + 1 not in self.maps:
                    continue
                left = _compose_dmaps(self.maps[k], self.source.bond(k))
                right = _compose_dmaps(self.target.bond(k), self.maps[k + 1])
                if not _dmaps_equal(left, right):
                    raise InvalidStructure(
                        f"square between stages {k + 1} and {k} fails"
                    )

    @property
    def prefix(self) -> int:
        return max(self.maps, default=-1)


# -------------------------------------------------------- completion


def completion_tower(x: LeanDSpace, depth: int) -> Tower:
    """The tower of joint-degree coskeleta of x with projection bonds.

    Every value of x is a finite table, so the degreewise finiteness
    the construction needs holds structurally.  Stages up to depth are
    materialized eagerly; deeper ones build on demand.
    """
    if depth < 0:
        raise InvalidStructure("depth must be a natural number")

    def bond_fn(k, up, dn):
        comps = {}
        for code in x.trunc.objects:
            per = {}
            for m in range(x.strunc + 1):
                small = _cosk_nodes(x, code, m, k)
                pos = {
                    nd[:4]: j
                    for j, nd in enumerate(_cosk_nodes(x, code, m, k + 1))
                }
                sel = [pos[nd[:4]] for nd in small]
                per[m] = {
                    fam: tuple(fam[j] for j in sel)
                    for fam in up.values[code].levels[m]
                }
            comps[code] = SSetMap(up.values[code], dn.values[code], per)
        return DSpaceMap(up, dn, comps)

    tw = Tower(lambda k: cosk(x, k), bond_fn)
    for k in range(depth + 1):
        tw.stage(k)
    for k in range(depth):
        tw.bond(k)
    return tw


def stabilization_degree(tw: Tower, prefix: int) -> int:
    """Least d with every bond from stage d to stage prefix bijective."""
    d = prefix
    for k in range(prefix - 1, -1, -1):
        if not _dmap_bijective(tw.bond(k)):
            break
        d = k
    return d


# ---------------------------------------------------------- normality


def is_n_normal(f: DSpaceMap, n: int) -> bool:
    """Injective with free automorphism action up to joint degree n.

    The window must carry every tree class of size at most n and the
    simplicial truncation must reach level n, otherwise a defect could
    hide outside the materialized part.
    """
    trunc = f.target.trunc
    if f.target.strunc < n:
        raise WindowTooSmall(
            f"levels reach {f.target.strunc}, joint degree {n} needs more"
        )
    for code in enumerate_rep_trees(trunc.variant, SIZE, n):
        if not trunc.contains_code(code):
            raise WindowTooSmall(f"window misses {code} below degree {n}")
    return is_normal_mono(f, joint_bound=n)


def is_increasingly_normal(fm: TowerMap, prefix: int) -> dict:
    """Tail-normality report: for each n, where the n-normal tail starts.

    passed is true when every tested n has a materialized stage from
    which all deeper stages are n-normal.
    """
    if any(k not in fm.maps for k in range(prefix + 1)):
        raise InvalidStructure(f"tower map not materialized up to {prefix}")
    normal = {
        (j, n): is_n_normal(fm.maps[j], n)
        for j in range(prefix + 1)
        for n in range(prefix + 1)
    }
    witness = {}
    for n in range(prefix + 1):
        idx = None
        for i in range(prefix + 1):
            if all(normal[(j, n)] for j in range(i, prefix + 1)):
                idx = i
                break
        witness[n] = idx
    return {
        "passed": all(w is not None for w in witness.values()),
        "witness": witness,
    }


# --------------------------------------------------------- reindexing


def reindex_level_represent(xt: Tower, yt: Tower, theta, nu, maps) -> TowerMap:
    """Strictify a lagged family of stage maps into a TowerMap.

    maps[k] runs from stage theta[k] of xt to stage nu[k] of yt; both
    index sequences must be strictly monotone.  The common reindexing
    follows the pointwise maximum on the source side, composing with
    descent bonds, and the square check of the result rejects families
    that were not compatible to begin with.
    """
    theta, nu, maps = list(theta), list(nu), list(maps)
    if not (len(theta) == len(nu) == len(maps)) or not maps:
        raise InvalidStructure("one source and target index per map")
    for seq in (theta, nu):
        if any(b <= a for a, b in zip(seq, seq[1:])) or seq[0] < 0:
            raise InvalidStructure("stage indexing must be strictly monotone")
    for k, f in enumerate(maps):
        if f.source is not xt.stage(theta[k]) or \
                f.target is not yt.stage(nu[k]):
            raise InvalidStructure(
                f"map {k} does not join stages {theta[k]} and {nu[k]}"
            )
    mu = [max(a, b) for a, b in zip(theta, nu)]
    strict = {
        k: maps[k] if mu[k] == theta[k]
        else _compose_dmaps(maps[k], _descend(xt, mu[k], theta[k]))
        for k in range(len(maps))
    }
    return TowerMap(_reindexed(xt, mu), _reindexed(yt, nu), strict)


# --------------------------------------------------------------- JSON


def tower_to_json(tw: Tower, depth: int) -> str:
    """Stages as presheaf documents plus positional bond tables."""
    stages = [
        json.loads(dspace_to_json(tw.stage(k))) for k in range(depth + 1)
    ]
    bonds = []
    for k in range(depth):
        up, dn = tw.stage(k + 1), tw.stage(k)
        b = tw.bond(k)
        index = {
            c: [{cell: i for i, cell in enumerate(level)}
                for level in dn.values[c].levels]
            for c in dn.trunc.objects
        }
        bonds.append({
            c: [
                [index[c][m][b.comps[c].comps[m][cell]]
                 for cell in up.values[c].levels[m]]
                for m in range(up.strunc + 1)
            ]
            for c in up.trunc.objects
        })
    doc = {"depth": depth, "stages": stages, "bonds": bonds}
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))
