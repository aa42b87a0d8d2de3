"""Batch command-line front end.

Each verb wraps one library operation and prints JSON on stdout (DOT
text for ``dot``), or writes it to ``--out``.  Output is deterministic
for fixed inputs and seed.  Exit codes: 0 success, 1 a checker verb
found its property violated, 2 usage or input error, 3 budget exceeded.
"""

import argparse
import json
import sys

from .category import (
    REEDY_STRUCTURES,
    TreeMap,
    factor_inner_outer,
    factor_standard,
    hom_set,
    map_to_json,
    verify_reedy,
)
from .errors import BudgetExceeded, DendroError, InvalidStructure
from .filtration import (
    AritySubcat,
    max_subtrees,
    minimal_corolla_extension,
    ran_v,
    ran_w,
)
from .finhtpy import sset_to_json
from .presheaf import (
    Truncation,
    cosk,
    dspace_eval,
    dspace_from_json,
    dspace_to_json,
    empty_to,
    is_lean_via_matching,
    is_normal_mono,
    latching,
    matching,
    normalization_e,
    random_dspace,
    sk,
    strict_segal_check,
)
from .protower import completion_tower, stabilization_degree, tower_to_json
from .trees import (
    CLOSED,
    GENERAL,
    OPEN,
    REDUCED_OPEN,
    SIZE,
    WEIGHT,
    enumerate_trees,
    tree_from_json,
    tree_to_dot,
)

VARIANTS = (GENERAL, OPEN, CLOSED, REDUCED_OPEN)
DEGREES = (SIZE, WEIGHT)


# ------------------------------------------------------------- plumbing


def _read(path):
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _emit(text, args):
    out = getattr(args, "out", None)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(doc, args):
    _emit(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n", args)


def _plain(obj):
    """Coerce library values into JSON-stable primitives."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted((_plain(v) for v in obj), key=str)
    if obj is None or isinstance(obj, (bool, int, float, str)):
        return obj
    return repr(obj)


def _tree_arg(path):
    return tree_from_json(_read(path))


def _map_doc(f):
    return json.loads(map_to_json(f))


def _sset_doc(s):
    return json.loads(sset_to_json(s))


def _sizes(s):
    return [len(level) for level in s.levels]


def _sset_map_table(f):
    """Positional images, level by level; source/target level order."""
    table = []
    for m in range(f.source.trunc + 1):
        index = {c: i for i, c in enumerate(f.target.levels[m])}
        table.append([index[f.comps[m][c]] for c in f.source.levels[m]])
    return table


def _parse_edge_map(text):
    emap = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            a, b = part.split(">")
            emap[int(a)] = int(b)
        except ValueError:
            raise InvalidStructure(f"bad edge assignment {part!r}, want a>b")
    return emap


def _load_dspace(args):
    if getattr(args, "input", None):
        return dspace_from_json(_read(args.input))
    if getattr(args, "seed", None) is not None:
        if args.bound is None:
            raise InvalidStructure("--seed needs --bound to fix the window")
        window = Truncation.window(
            args.variant, args.degree, args.bound, args.max_arity
        )
        return random_dspace(window, args.seed, strunc=args.strunc)
    raise InvalidStructure("provide --in FILE or --seed N")


# ---------------------------------------------------------------- verbs


def _cmd_trees(args):
    if args.bound is None:
        raise InvalidStructure("trees needs --bound")
    codes = enumerate_trees(args.variant, args.degree, args.bound, args.max_arity)
    _emit_json(codes, args)
    return 0


def _cmd_hom(args):
    src = _tree_arg(args.src)
    dst = _tree_arg(args.dst)
    maps = hom_set(src, dst, budget=args.budget)
    maps.sort(key=lambda f: tuple(sorted(f.edge_map.items())))
    _emit_json([_map_doc(f) for f in maps], args)
    return 0


def _cmd_factor(args):
    f = TreeMap(_tree_arg(args.src), _tree_arg(args.dst), _parse_edge_map(args.map))
    if args.system == "standard":
        neg, pos = factor_standard(f)
        doc = {"system": "standard", "negative": _map_doc(neg), "positive": _map_doc(pos)}
    else:
        inner, outer = factor_inner_outer(f)
        doc = {"system": "outer", "inner": _map_doc(inner), "outer": _map_doc(outer)}
    _emit_json(doc, args)
    return 0


def _cmd_reedy_verify(args):
    structure = REEDY_STRUCTURES[args.system]
    if args.degree != structure.degree:
        raise InvalidStructure(
            f"the {args.system} structure grades by {structure.degree}, not {args.degree}"
        )
    if args.bound is None:
        raise InvalidStructure("reedy-verify needs --bound")
    report = verify_reedy(structure, args.variant, args.bound, budget=args.budget)
    _emit_json(_plain(report), args)
    return 0 if report["passed"] else 1


def _cmd_eval(args):
    x = _load_dspace(args)
    t = _tree_arg(args.tree)
    s = dspace_eval(x, t, budget=args.budget)
    _emit_json({"sizes": _sizes(s), "space": _sset_doc(s)}, args)
    return 0


def _cmd_latching(args):
    x = _load_dspace(args)
    obj, _ = latching(x, _tree_arg(args.tree), system=args.system)
    _emit_json({"sizes": _sizes(obj), "space": _sset_doc(obj)}, args)
    return 0


def _cmd_matching(args):
    x = _load_dspace(args)
    obj, _ = matching(x, _tree_arg(args.tree), system=args.system)
    _emit_json({"sizes": _sizes(obj), "space": _sset_doc(obj)}, args)
    return 0


def _cmd_sk(args):
    x = _load_dspace(args)
    _emit_json(json.loads(dspace_to_json(sk(x, args.n))), args)
    return 0


def _cmd_cosk(args):
    x = _load_dspace(args)
    _emit_json(json.loads(dspace_to_json(cosk(x, args.n, budget=args.budget))), args)
    return 0


def _cmd_lean_check(args):
    x = _load_dspace(args)
    ok = is_lean_via_matching(x, args.system, args.n)
    _emit_json({"lean": ok, "n": args.n, "system": args.system}, args)
    return 0 if ok else 1


def _cmd_normal_check(args):
    x = _load_dspace(args)
    ok = is_normal_mono(empty_to(x), joint_bound=args.joint)
    _emit_json({"joint_bound": args.joint, "normal": ok}, args)
    return 0 if ok else 1


def _cmd_segal_check(args):
    x = _load_dspace(args)
    if args.bound is None:
        raise InvalidStructure("segal-check needs --bound")
    report = strict_segal_check(x, args.bound)
    _emit_json(_plain(report), args)
    return 0 if report["passed"] else 1


def _cmd_max_subtrees(args):
    dec = max_subtrees(_tree_arg(args.tree), args.n)
    doc = dec.to_doc()
    for piece in doc["pieces"]:
        piece["tree"] = json.loads(piece["tree"])
    _emit_json(doc, args)
    return 0


def _cmd_kan_extend(args):
    t = _tree_arg(args.tree)
    if not args.input and args.seed is not None:
        # seeded inputs must live on the stage the functor extends from:
        # all of arity <= n for w, below n plus the bare corolla for v
        if args.bound is None:
            raise InvalidStructure("--seed needs --bound to fix the window")
        stage = AritySubcat(args.n) if args.functor == "w" else AritySubcat(args.n - 1, True)
        window = stage.truncation(args.degree, args.bound)
        x = random_dspace(window, args.seed, strunc=args.strunc)
    else:
        x = _load_dspace(args)
    op = ran_w if args.functor == "w" else ran_v
    out = op(x, args.n, t, mode=args.mode, budget=args.budget)
    if args.mode != "both":
        _emit_json({"mode": args.mode, "sizes": _sizes(out), "space": _sset_doc(out)}, args)
        return 0
    doc = {
        "mode": "both",
        "closed_form": {"sizes": _sizes(out["closed_form"]), "space": _sset_doc(out["closed_form"])},
        "brute": {"sizes": _sizes(out["brute"]), "space": _sset_doc(out["brute"])},
        "witness": _sset_map_table(out["iso"]),
        "bijective": out["bijective"],
    }
    _emit_json(doc, args)
    return 0 if out["bijective"] else 1


def _cmd_extend_corolla(args):
    x = _load_dspace(args)
    _emit_json(json.loads(dspace_to_json(minimal_corolla_extension(x, args.n))), args)
    return 0


def _cmd_normalize_e(args):
    if args.bound is None:
        raise InvalidStructure("normalize-E needs --bound")
    window = Truncation.window(args.variant, args.degree, args.bound, args.max_arity)
    spaces, _, schedule = normalization_e(
        window, args.stages, strunc=args.strunc, budget=args.budget
    )
    doc = {
        "schedule": schedule,
        "sizes": [
            {code: _sizes(stage.values[code]) for code in window.objects}
            for stage in spaces
        ],
    }
    _emit_json(doc, args)
    return 0


def _cmd_tower(args):
    x = _load_dspace(args)
    tw = completion_tower(x, args.depth)
    doc = json.loads(tower_to_json(tw, args.depth))
    doc["stabilization"] = stabilization_degree(tw, args.depth)
    _emit_json(doc, args)
    return 0


def _cmd_dot(args):
    _emit(tree_to_dot(_tree_arg(args.tree)), args)
    return 0


# --------------------------------------------------------------- parser


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="dendro",
        description="Finite-approximation toolkit for tree-shaped presheaves.",
    )
    sub = parser.add_subparsers(dest="verb", required=True, metavar="VERB")

    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("--out", metavar="FILE", help="write output here instead of stdout")

    window = argparse.ArgumentParser(add_help=False)
    window.add_argument("--variant", choices=VARIANTS, default=REDUCED_OPEN)
    window.add_argument("--degree", choices=DEGREES, default=SIZE)
    window.add_argument("--bound", type=int, default=None)
    window.add_argument("--max-arity", type=int, default=None)

    source = argparse.ArgumentParser(add_help=False, parents=[window])
    source.add_argument("--in", dest="input", metavar="FILE",
                        help="presheaf JSON; omit to generate one from --seed")
    source.add_argument("--seed", type=int, default=None)
    source.add_argument("--strunc", type=int, default=2,
                        help="simplicial truncation of seeded presheaves")

    def add(name, fn, parents, help, **defaults):
        p = sub.add_parser(name, parents=parents + [out], help=help)
        p.set_defaults(fn=fn, **defaults)
        return p

    add("trees", _cmd_trees, [window], "enumerate tree classes below a degree bound")

    p = add("hom", _cmd_hom, [], "list all maps between two trees")
    p.add_argument("--src", required=True, metavar="FILE")
    p.add_argument("--dst", required=True, metavar="FILE")
    p.add_argument("--budget", type=int, default=14)

    p = add("factor", _cmd_factor, [], "factor one map through its canonical middle")
    p.add_argument("--src", required=True, metavar="FILE")
    p.add_argument("--dst", required=True, metavar="FILE")
    p.add_argument("--map", required=True, metavar="A>B,...",
                   help="edge assignments of the map to factor")
    p.add_argument("--system", choices=("standard", "outer"), default="outer")

    p = add("reedy-verify", _cmd_reedy_verify, [window],
            "check the degree and factorization axioms below a bound")
    p.set_defaults(degree=WEIGHT)
    p.add_argument("--system", choices=tuple(sorted(REEDY_STRUCTURES)), default="outer")
    p.add_argument("--budget", type=int, default=14)

    p = add("eval", _cmd_eval, [source], "evaluate a presheaf at any tree")
    p.add_argument("--tree", required=True, metavar="FILE")
    p.add_argument("--budget", type=int, default=4000)

    for name, fn in (("latching", _cmd_latching), ("matching", _cmd_matching)):
        p = add(name, fn, [source], f"compute the {name} object at a tree")
        p.add_argument("--tree", required=True, metavar="FILE")
        p.add_argument("--system", choices=("standard", "outer"), default="outer")

    p = add("sk", _cmd_sk, [source], "skeleton: kill cells above a joint degree")
    p.add_argument("--n", type=int, required=True)

    p = add("cosk", _cmd_cosk, [source], "coskeleton: freely refill above a joint degree")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--budget", type=int, default=6000)

    p = add("lean-check", _cmd_lean_check, [source],
            "check that matching comparisons are bijective above n")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--system", choices=("standard", "outer"), default="outer")

    p = add("normal-check", _cmd_normal_check, [source],
            "check that the inclusion of nothing into the presheaf is normal")
    p.add_argument("--joint", type=int, default=None,
                   help="only inspect joint degrees up to this bound")

    p = add("segal-check", _cmd_segal_check, [source],
            "check strict gluing over graftings up to --bound")

    p = add("max-subtrees", _cmd_max_subtrees, [], "maximal subtrees with arity at most n")
    p.add_argument("--tree", required=True, metavar="FILE")
    p.add_argument("--n", type=int, required=True)

    p = add("kan-extend", _cmd_kan_extend, [source],
            "extend from an arity stage and evaluate at a tree")
    p.add_argument("--functor", choices=("w", "v"), required=True,
                   help="w: full stage-n window; v: below-n window plus the corolla")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tree", required=True, metavar="FILE")
    p.add_argument("--mode", choices=("closed_form", "brute", "both"),
                   default="closed_form")
    p.add_argument("--budget", type=int, default=4000)

    p = add("extend-corolla", _cmd_extend_corolla, [source],
            "freely adjoin the arity-n corolla value")
    p.add_argument("--n", type=int, required=True)

    p = add("normalize-E", _cmd_normalize_e, [window],
            "attach boundary cells stage by stage over the window")
    p.add_argument("--stages", type=int, required=True)
    p.add_argument("--strunc", type=int, default=3)
    p.add_argument("--budget", type=int, default=20000)

    p = add("tower", _cmd_tower, [source], "finite tower of approximations")
    p.add_argument("--op", choices=("completion",), default="completion")
    p.add_argument("--depth", type=int, required=True)

    p = add("dot", _cmd_dot, [], "Graphviz drawing of a tree")
    p.add_argument("--tree", required=True, metavar="FILE")

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (DendroError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
