"""Dependency calculus over flattened species.

Two passes.  The syntactic pass scans bodies, statements and proofs for
method references, validates proof facts, and fixes the global method order
(a topological sort of the decl-dependency graph, tie-broken by where each
method first received a definition and then by name).  The semantic pass runs
after typing and derives the visible universe, the minimal typing
environment, and per-parameter dependencies for every method.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field

from .ast import (
    Expr,
    Match,
    Proof,
    ProofLeaf,
    Quant,
    Qual,
    TCap,
    TParam,
    Type,
    Var,
    expr_children,
    pattern_vars,
    type_walk,
)
from .basics import BUILTIN_PROPERTIES
from .errors import CYCLE, PROOF, UNKNOWN, CompileError
from .hierarchy import MethodInfo, NFSpecies
from .proofs import iter_leaves, iter_steps


# ---------------------------------------------------------------------------
# Scoped reference scans


def scoped_vars(e: Expr, bound: frozenset[str] = frozenset()):
    """Yield every Var name not captured by a binder."""
    match e:
        case Var(name):
            if name not in bound:
                yield name
        case Quant(_, vars_, _, body):
            yield from scoped_vars(body, bound | set(vars_))
        case Match(scrutinee, arms):
            yield from scoped_vars(scrutinee, bound)
            for pat, arm in arms:
                yield from scoped_vars(arm, bound | set(pattern_vars(pat)))
        case _:
            for c in expr_children(e):
                yield from scoped_vars(c, bound)


def qual_refs(e: Expr):
    """Yield every (collection, method) qualified reference."""
    match e:
        case Qual(coll, name):
            yield coll, name
        case _:
            for c in expr_children(e):
                yield from qual_refs(c)


def proof_exprs_scoped(proof: Proof, bound: frozenset[str] = frozenset()):
    """Yield (expr, bound) for every hypothesis statement and goal."""
    if isinstance(proof, ProofLeaf):
        return
    for step in proof.steps:
        inner = bound | {v for names, _ in step.assumes for v in names}
        for _, stmt in step.hyps:
            yield stmt, inner
        if step.goal is not None:
            yield step.goal, inner
        if step.sub is not None:
            yield from proof_exprs_scoped(step.sub, inner)


def _own_exprs(mi: MethodInfo):
    """(expr, bound) pairs for everything x states or computes itself."""
    if mi.kind == "let" and mi.body is not None:
        yield mi.body, frozenset(n for n, _ in mi.params)
    if mi.statement is not None:
        yield mi.statement, frozenset()
    if mi.proof is not None:
        yield from proof_exprs_scoped(mi.proof)


# ---------------------------------------------------------------------------
# Per-method dependency data


@dataclass
class MethodDeps:
    decl: set[str] = field(default_factory=set)
    defs: set[str] = field(default_factory=set)
    closure: set[str] = field(default_factory=set)
    universe: set[str] = field(default_factory=set)
    carrier_keep: str | None = None  # 'TypeOnly' | 'TypeAndBody' | None
    min_env: list[tuple[str, str]] = field(default_factory=list)
    # is-parameter name -> method names in the parameter's own order
    param_deps: dict[str, list[str]] = field(default_factory=dict)
    param_carrier: dict[str, bool] = field(default_factory=dict)
    entity_used: list[str] = field(default_factory=list)


@dataclass
class SpeciesDeps:
    order: list[str] = field(default_factory=list)
    methods: dict[str, MethodDeps] = field(default_factory=dict)
    rec_groups: list[list[str]] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Pass 1: scans, fact validation, global order


def decl_deps(mi: MethodInfo, nf: NFSpecies) -> set[str]:
    names: set[str] = set()
    for e, bound in _own_exprs(mi):
        names |= {n for n in scoped_vars(e, bound) if n in nf.methods}
    if mi.proof is not None:
        for leaf in iter_leaves(mi.proof):
            for f in leaf.facts:
                if f.kind == "definition":
                    names |= set(_validated_defs(f.names, nf, f.pos))
                elif f.kind == "property":
                    for n in f.names:
                        if "!" in n:
                            continue  # parameter dependency, handled later
                        names.add(_validated_property(n, nf, f.pos))
                    names.discard("")
    names.discard(mi.name)
    return names


def _validated_defs(targets: list[str], nf: NFSpecies, pos) -> list[str]:
    out = []
    for n in targets:
        mi = nf.methods.get(n)
        if mi is None:
            raise CompileError(
                UNKNOWN, f"unknown method {n} in a definition fact", pos
            )
        if mi.is_logical:
            raise CompileError(
                PROOF, f"cannot unfold {n}: it is not a function", pos
            )
        out.append(n)
    return out


def _validated_property(name: str, nf: NFSpecies, pos) -> str:
    mi = nf.methods.get(name)
    if mi is not None:
        if not mi.is_logical:
            raise CompileError(
                PROOF, f"{name} is a function, not a property", pos
            )
        return name
    if name in BUILTIN_PROPERTIES:
        return ""  # builtin facts are not species methods
    raise CompileError(UNKNOWN, f"unknown property {name}", pos)


def def_deps(mi: MethodInfo, nf: NFSpecies) -> set[str]:
    if mi.kind != "theorem" or mi.proof is None:
        return set()
    facts = collect_defs(mi.proof)
    return set(_validated_defs(sorted(facts), nf, mi.pos))


def collect_defs(proof: Proof) -> set[str]:
    out: set[str] = set()
    for leaf in iter_leaves(proof):
        for f in leaf.facts:
            if f.kind == "definition":
                out.update(f.names)
    return out


def def_closure(defs: dict[str, set[str]], x: str) -> set[str]:
    seen: set[str] = set()
    frontier = deque(defs.get(x, ()))
    while frontier:
        y = frontier.popleft()
        if y in seen:
            continue
        seen.add(y)
        frontier.extend(defs.get(y, ()))
    return seen


def type_level_refs(mi: MethodInfo, nf: NFSpecies) -> set[str]:
    """Method names visible in x's type: only statements carry any."""
    if mi.statement is None:
        return set()
    return {n for n in scoped_vars(mi.statement) if n in nf.methods}


def order_methods(nf: NFSpecies, decl: dict[str, set[str]]) -> tuple[list[str], list[list[str]]]:
    """Topological order with deterministic tie-breaking.

    Priority: (rank of the species where the method first got a definition,
    name); declared-only methods rank by their declaration site.  Mutually
    recursive groups marked `rec` collapse to one node; any other cycle is an
    error carrying a shortest witness.
    """
    rank = {s: i for i, s in enumerate(nf.lineage)}
    names = list(nf.methods)

    def key(n: str) -> tuple[int, str]:
        return rank.get(nf.methods[n].order_site(), len(rank)), n

    edges: dict[str, set[str]] = {n: set() for n in names}  # y -> users
    for n in names:
        for d in decl[n]:
            if d == n:
                if not nf.methods[n].rec:
                    raise CompileError(
                        CYCLE,
                        f"{n} depends on itself",
                        nf.methods[n].pos,
                        witness=[n],
                    )
                continue
            edges[d].add(n)

    groups = _collapse_rec_groups(nf, edges, names)
    group_of = {n: g for g in groups for n in g}
    g_key = {id(g): min(key(n) for n in g) for g in groups}
    g_edges: dict[int, set[int]] = {id(g): set() for g in groups}
    indeg: dict[int, int] = {id(g): 0 for g in groups}
    for y, users in edges.items():
        for x in users:
            gy, gx = group_of[y], group_of[x]
            if gy is not gx and id(gx) not in g_edges[id(gy)]:
                g_edges[id(gy)].add(id(gx))
                indeg[id(gx)] += 1
    by_id = {id(g): g for g in groups}
    heap = [(g_key[i], i) for i, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order: list[str] = []
    while heap:
        _, i = heapq.heappop(heap)
        order.extend(sorted(by_id[i], key=key))
        for j in g_edges[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(heap, (g_key[j], j))
    if len(order) != len(names):
        cycle = _shortest_cycle(
            {n: decl[n] & set(names) for n in names if n not in order}
        )
        raise CompileError(
            CYCLE,
            f"methods of {nf.name} depend on each other",
            nf.pos,
            witness=cycle,
        )
    return order, [g for g in groups if len(g) > 1]


def _collapse_rec_groups(
    nf: NFSpecies, edges: dict[str, set[str]], names: list[str]
) -> list[list[str]]:
    sccs = _tarjan(names, edges)
    groups: list[list[str]] = []
    for scc in sccs:
        if len(scc) > 1:
            if not all(nf.methods[n].rec for n in scc):
                cycle = _shortest_cycle(
                    {n: {d for d in edges if n in edges[d]} for n in scc}
                )
                raise CompileError(
                    CYCLE,
                    f"methods of {nf.name} depend on each other",
                    nf.methods[sorted(scc)[0]].pos,
                    witness=cycle,
                )
        groups.append(sorted(scc))
    return groups


def _tarjan(names: list[str], edges: dict[str, set[str]]) -> list[list[str]]:
    """Strongly connected components of the user graph, iteratively."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    out: list[list[str]] = []
    counter = iter(range(1 << 30))

    for root in names:
        if root in index:
            continue
        work = [(root, iter(sorted(edges[root])))]
        index[root] = low[root] = next(counter)
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = low[nxt] = next(counter)
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(sorted(edges[nxt]))))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                scc = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    scc.append(w)
                    if w == node:
                        break
                out.append(scc)
    return out


def _shortest_cycle(deps: dict[str, set[str]]) -> list[str]:
    """Shortest dependency cycle in `x depends on deps[x]` form, rotated so
    the smallest name comes first."""
    best: list[str] | None = None
    for start in sorted(deps):
        # BFS over dependency edges back to start.
        prev: dict[str, str] = {}
        q = deque([start])
        seen = {start}
        found = None
        while q and found is None:
            cur = q.popleft()
            for nxt in sorted(deps.get(cur, ())):
                if nxt == start:
                    found = cur
                    break
                if nxt in deps and nxt not in seen:
                    seen.add(nxt)
                    prev[nxt] = cur
                    q.append(nxt)
        if found is None:
            continue
        path = [found]
        while path[-1] != start:
            path.append(prev[path[-1]])
        path.reverse()
        if best is None or len(path) < len(best):
            best = path
    if best is None:
        return sorted(deps)[:1]
    smallest = min(range(len(best)), key=lambda i: best[i])
    return best[smallest:] + best[:smallest]


def scan_species(nf: NFSpecies) -> SpeciesDeps:
    """Syntactic pass: decl/def sets, fact validation, global order."""
    sd = SpeciesDeps()
    decl: dict[str, set[str]] = {}
    for name, mi in nf.methods.items():
        md = MethodDeps()
        md.decl = decl_deps(mi, nf)
        md.defs = def_deps(mi, nf)
        decl[name] = md.decl
        sd.methods[name] = md
    sd.order, sd.rec_groups = order_methods(nf, decl)
    nf.order = sd.order
    mutual = {m for g in sd.rec_groups for m in g}
    for name, md in sd.methods.items():
        hit = sorted(md.defs & mutual)
        if hit and nf.methods[name].valid_proof:
            # The member's generator takes its partners as arguments, so
            # binding it inside another generator has no valid order.
            raise CompileError(
                PROOF,
                f"cannot unfold {hit[0]}: it is mutually recursive",
                nf.methods[name].pos,
                witness=hit,
            )
    defs = {n: sd.methods[n].defs for n in sd.methods}
    for name, md in sd.methods.items():
        md.closure = def_closure(defs, name)
    return sd


# ---------------------------------------------------------------------------
# Pass 2: universes, minimal environments, parameter dependencies


def finish_deps(
    nf: NFSpecies,
    sd: SpeciesDeps,
    species_env: dict[str, NFSpecies],
    deps_env: dict[str, SpeciesDeps],
) -> None:
    type_refs = {
        n: type_level_refs(mi, nf) for n, mi in nf.methods.items()
    }
    for name, md in sd.methods.items():
        mi = nf.methods[name]
        u = set(md.decl) | md.closure
        while True:
            grown = set(u)
            for z in md.closure:
                grown |= sd.methods[z].decl
            for y in u:
                grown |= type_refs[y]
            if grown == u:
                break
            u = grown
        u.discard(name)
        md.universe = u
        md.min_env = [
            (y, "TypeAndBody" if y in md.closure else "TypeOnly")
            for y in sd.order
            if y in u
        ]
        carrier_def = mi.carrier_def or any(
            nf.methods[z].carrier_def for z in md.closure
        )
        carrier_decl = mi.carrier_decl or any(
            nf.methods[y].carrier_decl or nf.methods[y].carrier_def for y in u
        )
        if carrier_def:
            md.carrier_keep = "TypeAndBody"
        elif carrier_decl:
            md.carrier_keep = "TypeOnly"
        _param_deps(nf, sd, md, mi, species_env, deps_env)


def _param_deps(
    nf: NFSpecies,
    sd: SpeciesDeps,
    md: MethodDeps,
    mi: MethodInfo,
    species_env: dict[str, NFSpecies],
    deps_env: dict[str, SpeciesDeps],
) -> None:
    is_params = {p.name: p for p in nf.is_params}
    entity_params = {p.name: p for p in nf.entity_params}

    def own_and_def_exprs():
        yield from _own_exprs(mi)
        for z in md.closure:
            yield from _own_exprs(nf.methods[z])

    # Qualified references from the body, statement and proof of x plus the
    # bodies of everything x unfolds, then from types across the universe.
    quals: dict[str, set[str]] = {p: set() for p in is_params}
    for e, _ in own_and_def_exprs():
        for coll, m in qual_refs(e):
            if coll in quals:
                quals[coll].add(m)
    for y in md.universe:
        stmt = nf.methods[y].statement
        if stmt is not None:
            for coll, m in qual_refs(stmt):
                if coll in quals:
                    quals[coll].add(m)
    if mi.proof is not None:  # `by property P!m` facts count as uses
        for leaf in iter_leaves(mi.proof):
            for f in leaf.facts:
                if f.kind != "property":
                    continue
                for n in f.names:
                    if "!" not in n:
                        continue
                    coll, m = n.split("!", 1)
                    if coll in quals:
                        quals[coll].add(m)

    for pname, deps in quals.items():
        iface = is_params[pname].interface
        assert iface is not None
        iface_nf = species_env[iface.name]
        iface_sd = deps_env[iface.name]
        for m in sorted(deps):
            if m not in iface_nf.methods:
                raise CompileError(
                    UNKNOWN, f"{pname} has no method {m}", mi.pos
                )
        closed = set(deps)
        for m in deps:  # [Close]: names used by the statements of members
            closed |= type_level_refs(iface_nf.methods[m], iface_nf)
        md.param_deps[pname] = [m for m in iface_sd.order if m in closed]

    # Entity parameters contribute themselves when referenced.
    used_entities: set[str] = set()
    for e, bound in own_and_def_exprs():
        for n in scoped_vars(e, bound):
            if n in entity_params:
                used_entities.add(n)
    md.entity_used = [
        p.name for p in nf.entity_params if p.name in used_entities
    ]

    # A parameter's carrier is lifted when any dependency on the parameter
    # survives, or when the carrier type itself occurs in the method's plan.
    plan_types: list[Type] = []
    if mi.scheme is not None:
        plan_types.append(mi.scheme.body)
    for e, _ in _own_exprs(mi):
        plan_types.extend(_quant_types(e))
    if mi.proof is not None:
        for step in iter_steps(mi.proof):
            for _, ty in step.assumes:
                plan_types.append(ty)
    if md.carrier_keep == "TypeAndBody" and nf.rep_resolved is not None:
        plan_types.append(nf.rep_resolved)
    for y, keep in md.min_env:
        other = nf.methods[y]
        if other.scheme is not None:
            plan_types.append(other.scheme.body)
        if other.statement is not None:
            plan_types.extend(_quant_types(other.statement))
    for pname in is_params:
        used = bool(md.param_deps.get(pname)) or any(
            entity_params[v].carrier == pname for v in md.entity_used
        )
        if not used:
            used = any(
                _mentions_param(t, pname) for t in plan_types
            )
        md.param_carrier[pname] = used


def _quant_types(e: Expr):
    match e:
        case Quant(_, _, ty, body):
            yield ty
            yield from _quant_types(body)
        case _:
            for c in expr_children(e):
                yield from _quant_types(c)


def _mentions_param(t: Type, pname: str) -> bool:
    return any(
        (isinstance(n, TParam) and n.name == pname)
        or (isinstance(n, TCap) and n.name == pname)
        for n in type_walk(t)
    )
