"""Species flattening: inheritance merge, late binding, and collection checks.

A species normal form carries every method reachable through `inherit`, with
parameter substitutions applied and redefinitions resolved by late binding:
the last definition along the linearized inheritance chain wins, while the
method's type stays pinned to its first declaration.  Proof invalidation and
collection completeness both operate on this normal form.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

from .ast import (
    NOPOS,
    CollectionDecl,
    ConRef,
    Expr,
    Fact,
    Match,
    MethodDecl,
    Pos,
    ProofLeaf,
    ProofStep,
    ProofSteps,
    Proof,
    Quant,
    Qual,
    Scheme,
    SpeciesDecl,
    SpeciesExpr,
    SpeciesParam,
    TCap,
    TCollCarrier,
    TParam,
    TSelf,
    Type,
    Var,
    pattern_vars,
    type_map,
    type_walk,
)
from .errors import (
    DUPLICATE,
    INCOMPLETE,
    INTERFACE,
    REP_REDEFINED,
    TYPE_MISMATCH,
    UNKNOWN,
    CompileError,
)
from .proofs import collect_leaf_facts


@dataclass
class MethodInfo:
    """One flattened method with its full late-binding history."""

    name: str
    kind: str  # 'signature' | 'let' | 'property' | 'theorem'
    decl_site: str
    first_def: str | None
    origin: str
    proof_origin: str | None = None
    ty: Type | None = None  # first declared signature type
    extra_sigs: list[Type] = field(default_factory=list)
    params: list[tuple[str, Type | None]] = field(default_factory=list)
    ret: Type | None = None
    body: Expr | None = None
    statement: Expr | None = None
    proof: Proof | None = None
    rec: bool = False
    superseded: set[str] = field(default_factory=set)
    pos: Pos = NOPOS
    # Filled in by the typing and dependency phases.
    scheme: Scheme | None = None
    param_types: list[Type] | None = None
    ret_type: Type | None = None
    carrier_decl: bool = False
    carrier_def: bool = False
    valid_proof: bool = True

    @property
    def is_logical(self) -> bool:
        return self.kind in ("property", "theorem")

    @property
    def defined(self) -> bool:
        if self.kind == "let":
            return self.body is not None
        if self.kind == "theorem":
            return self.proof is not None
        return False

    def order_site(self) -> str:
        """Species whose lineage rank orders this method."""
        return self.first_def if self.first_def is not None else self.decl_site


@dataclass
class RevertedProof:
    method: str
    proof_origin: str
    def_name: str
    def_origin: str
    pos: Pos


@dataclass
class NFSpecies:
    name: str
    params: list[SpeciesParam] = field(default_factory=list)
    lineage: list[str] = field(default_factory=list)
    rep: Type | None = None  # surface type, substituted
    rep_origin: str | None = None
    rep_resolved: Type | None = None  # filled by typing
    methods: dict[str, MethodInfo] = field(default_factory=dict)
    order: list[str] = field(default_factory=list)  # filled by deps
    reverted: list[RevertedProof] = field(default_factory=list)
    # ancestor -> formal parameter -> actual in this species' own terms:
    # a str (own parameter or collection name) for is-formals, an Expr for
    # entity formals.  Includes the species itself with identity bindings.
    ancestor_args: dict[str, dict[str, "str | Expr"]] = field(
        default_factory=dict
    )
    pos: Pos = NOPOS

    @property
    def is_params(self) -> list[SpeciesParam]:
        return [p for p in self.params if p.kind == "is"]

    @property
    def entity_params(self) -> list[SpeciesParam]:
        return [p for p in self.params if p.kind == "in"]

    def incompleteness(self) -> list[str]:
        """Human-readable reasons this species cannot back a collection."""
        missing: list[str] = []
        if self.rep is None:
            missing.append("no representation")
        for m in self.methods.values():
            if m.kind == "signature":
                missing.append(f"{m.name} is declared but never defined")
            elif m.kind == "property":
                missing.append(f"{m.name} is stated but never proved")
            elif m.kind == "theorem" and not m.valid_proof:
                missing.append(f"the proof of {m.name} was reverted")
        return missing


# ---------------------------------------------------------------------------
# Substitution of species parameters by effective arguments


def rename_caps(
    t: Type, mapping: dict[str, str], target_is: frozenset[str] = frozenset()
) -> Type:
    """Rename parameter types through `mapping`.

    Surface types (`TCap`) keep their surface form; already-resolved
    parameter types map to `TParam` when the actual is a parameter of the
    inheriting species and to a collection carrier otherwise.
    """
    if not mapping:
        return t

    def step(n: Type) -> Type:
        match n:
            case TCap(name) if name in mapping:
                return TCap(mapping[name])
            case TParam(name) if name in mapping:
                actual = mapping[name]
                if actual in target_is:
                    return TParam(actual)
                return TCollCarrier(actual)
            case _:
                return n

    return type_map(t, step)


def subst_expr(
    e: Expr,
    qual_map: dict[str, str],
    entity_map: dict[str, Expr],
    type_fn,
    bound: frozenset[str] = frozenset(),
) -> Expr:
    """Rebuild `e` with parameter renamings applied; binders shadow."""

    def go(e: Expr, bound: frozenset[str]) -> Expr:
        match e:
            case Var(name) if name in entity_map and name not in bound:
                return copy.deepcopy(entity_map[name])
            case Qual(coll, name) if coll in qual_map:
                return Qual(qual_map[coll], name, pos=e.pos)
            case Quant(kind, vars_, ty, body):
                return Quant(
                    kind,
                    list(vars_),
                    type_fn(ty),
                    go(body, bound | set(vars_)),
                    pos=e.pos,
                )
            case Match(scrutinee, arms):
                return Match(
                    go(scrutinee, bound),
                    [
                        (pat, go(b, bound | set(pattern_vars(pat))))
                        for pat, b in arms
                    ],
                    pos=e.pos,
                )
            case ConRef(name, args):
                return ConRef(name, [go(a, bound) for a in args], pos=e.pos)
            case _:
                out = copy.copy(e)
                for attr, value in vars(e).items():
                    if isinstance(value, Expr):
                        setattr(out, attr, go(value, bound))
                    elif isinstance(value, list) and value and isinstance(value[0], Expr):
                        setattr(out, attr, [go(v, bound) for v in value])
                return out

    return go(e, bound)


def subst_proof(
    proof: Proof, qual_map: dict[str, str], entity_map: dict[str, Expr], type_fn
) -> Proof:
    def go_leaf(leaf: ProofLeaf) -> ProofLeaf:
        facts = []
        for f in leaf.facts:
            names = f.names
            if f.kind == "property":
                renamed = []
                for n in names:
                    if "!" in n:
                        c, m = n.split("!", 1)
                        renamed.append(f"{qual_map.get(c, c)}!{m}")
                    else:
                        renamed.append(n)
                names = renamed
            facts.append(Fact(f.kind, list(names), list(f.labels), f.pos))
        return ProofLeaf(facts, leaf.admitted, leaf.pos)

    def go(p: Proof, bound: frozenset[str]) -> Proof:
        if isinstance(p, ProofLeaf):
            return go_leaf(p)
        steps = []
        for s in p.steps:
            inner = bound | {v for names, _ in s.assumes for v in names}
            steps.append(
                ProofStep(
                    label=s.label,
                    assumes=[(list(ns), type_fn(t)) for ns, t in s.assumes],
                    hyps=[
                        (h, subst_expr(st, qual_map, entity_map, type_fn, inner))
                        for h, st in s.hyps
                    ],
                    goal=None
                    if s.goal is None
                    else subst_expr(s.goal, qual_map, entity_map, type_fn, inner),
                    is_qed=s.is_qed,
                    sub=None if s.sub is None else go(s.sub, inner),
                    pos=s.pos,
                )
            )
        return ProofSteps(steps, p.pos)

    return go(proof, frozenset())


def subst_method(
    mi: MethodInfo,
    qual_map: dict[str, str],
    entity_map: dict[str, Expr],
    target_is: frozenset[str] = frozenset(),
) -> MethodInfo:
    type_fn = lambda t: rename_caps(t, qual_map, target_is)
    out = copy.copy(mi)
    out.extra_sigs = [type_fn(t) for t in mi.extra_sigs]
    out.superseded = set(mi.superseded)
    if mi.ty is not None:
        out.ty = type_fn(mi.ty)
    out.params = [(n, None if t is None else type_fn(t)) for n, t in mi.params]
    if mi.ret is not None:
        out.ret = type_fn(mi.ret)
    if mi.body is not None:
        bound = frozenset(n for n, _ in mi.params)
        out.body = subst_expr(mi.body, qual_map, entity_map, type_fn, bound)
    if mi.statement is not None:
        out.statement = subst_expr(mi.statement, qual_map, entity_map, type_fn)
    if mi.proof is not None:
        out.proof = subst_proof(mi.proof, qual_map, entity_map, type_fn)
    # The scheme survives renaming: it pins the method's type for any
    # redefinition further down.  Shown arg/ret splits are recomputed.
    if mi.scheme is not None:
        out.scheme = Scheme(mi.scheme.count, type_fn(mi.scheme.body))
    out.param_types = None
    out.ret_type = None
    return out


# ---------------------------------------------------------------------------
# Normalization


def merge_lineages(parents: list[list[str]], self_name: str) -> list[str]:
    out: list[str] = []
    for lin in parents:
        for s in lin:
            if s not in out:
                out.append(s)
    if self_name not in out:
        out.append(self_name)
    return out


def _adopt_definition(cur: MethodInfo, inc: MethodInfo) -> None:
    cur.params = inc.params
    cur.ret = inc.ret
    cur.body = inc.body
    cur.rec = inc.rec
    cur.proof = inc.proof
    cur.proof_origin = inc.proof_origin
    cur.origin = inc.origin
    cur.kind = inc.kind
    cur.pos = inc.pos
    if cur.first_def is None:
        cur.first_def = inc.first_def


def _merge(nf: NFSpecies, inc: MethodInfo) -> None:
    cur = nf.methods.get(inc.name)
    if cur is None:
        nf.methods[inc.name] = inc
        return
    if cur.is_logical != inc.is_logical:
        raise CompileError(
            DUPLICATE,
            f"{inc.name} is redeclared as a different kind of method "
            f"in {inc.origin}",
            inc.pos,
        )
    if inc.ty is not None:
        if cur.ty is None:
            cur.ty = inc.ty
        elif inc.decl_site != cur.decl_site and inc.ty != cur.ty:
            cur.extra_sigs.append(inc.ty)
    if inc.statement is not None:
        if cur.statement is None:
            cur.statement = inc.statement
        elif inc.decl_site != cur.decl_site and inc.statement != cur.statement:
            raise CompileError(
                TYPE_MISMATCH,
                f"{inc.name} is restated with a different statement "
                f"in {inc.decl_site}",
                inc.pos,
            )
    cur.superseded |= inc.superseded
    if not inc.defined:
        return
    if not cur.defined:
        _adopt_definition(cur, inc)
        return
    if inc.origin == cur.origin:
        return
    if inc.origin in cur.superseded:
        return
    if cur.origin in inc.superseded:
        _adopt_definition(cur, inc)
        return
    # Sibling parents both define the method: the later inherit wins.
    cur.superseded.add(cur.origin)
    _adopt_definition(cur, inc)


def _local_info(decl: SpeciesDecl, m: MethodDecl) -> MethodInfo:
    defined = m.kind in ("let", "theorem")
    return MethodInfo(
        name=m.name,
        kind=m.kind,
        decl_site=decl.name,
        first_def=decl.name if defined else None,
        origin=decl.name,
        proof_origin=decl.name if m.kind == "theorem" else None,
        ty=m.ty,
        params=list(m.params),
        ret=m.ret,
        body=m.body,
        statement=m.statement,
        proof=m.proof,
        rec=m.rec,
        pos=m.pos,
    )


def _build_subst(
    parent: NFSpecies,
    se: SpeciesExpr,
    child: SpeciesDecl,
    species_env: dict[str, NFSpecies],
    collections: dict[str, "CollectionModel"],
) -> tuple[dict[str, str], dict[str, Expr]]:
    if len(se.args) != len(parent.params):
        raise CompileError(
            INTERFACE,
            f"{parent.name} takes {len(parent.params)} argument(s), "
            f"got {len(se.args)}",
            se.pos,
        )
    child_is = {p.name: p for p in child.params if p.kind == "is"}
    qual_map: dict[str, str] = {}
    entity_map: dict[str, Expr] = {}
    for formal, arg in zip(parent.params, se.args):
        if formal.kind == "is":
            if arg.name is None:
                raise CompileError(
                    INTERFACE,
                    f"parameter {formal.name} of {parent.name} needs a "
                    "collection argument",
                    arg.pos,
                )
            assert formal.interface is not None
            iface = formal.interface.name
            if arg.name in child_is:
                actual_iface = child_is[arg.name].interface
                assert actual_iface is not None
                actual_lineage = species_env[actual_iface.name].lineage
            elif arg.name in collections:
                actual_lineage = collections[arg.name].nf.lineage
            else:
                raise CompileError(
                    UNKNOWN, f"unknown collection {arg.name}", arg.pos
                )
            if iface not in actual_lineage:
                raise CompileError(
                    INTERFACE,
                    f"{arg.name} does not implement {iface}",
                    arg.pos,
                )
            qual_map[formal.name] = arg.name
        else:
            expr = arg.expr if arg.expr is not None else Var(arg.name, pos=arg.pos)
            entity_map[formal.name] = expr
    return qual_map, entity_map


def normalize(
    decl: SpeciesDecl,
    species_env: dict[str, NFSpecies],
    collections: dict[str, "CollectionModel"],
) -> NFSpecies:
    nf = NFSpecies(name=decl.name, params=list(decl.params), pos=decl.pos)
    is_names: list[str] = []
    for p in decl.params:
        if p.kind == "is":
            assert p.interface is not None
            if p.interface.name not in species_env:
                raise CompileError(
                    UNKNOWN, f"unknown species {p.interface.name}", p.pos
                )
            is_names.append(p.name)
        else:
            if p.carrier not in is_names:
                raise CompileError(
                    UNKNOWN,
                    f"entity parameter {p.name} needs a preceding collection "
                    f"parameter, got {p.carrier}",
                    p.pos,
                )
    parent_lineages: list[list[str]] = []
    child_is = frozenset(is_names)
    for se in decl.inherits:
        parent = species_env.get(se.name)
        if parent is None:
            raise CompileError(UNKNOWN, f"unknown species {se.name}", se.pos)
        qual_map, entity_map = _build_subst(
            parent, se, decl, species_env, collections
        )
        type_fn = lambda t: rename_caps(t, qual_map, child_is)
        if parent.rep is not None:
            rep = type_fn(parent.rep)
            if nf.rep is None:
                nf.rep = rep
                nf.rep_origin = parent.rep_origin
            elif nf.rep_origin != parent.rep_origin or nf.rep != rep:
                raise CompileError(
                    REP_REDEFINED,
                    f"{decl.name} inherits two representations "
                    f"(from {nf.rep_origin} and {parent.rep_origin})",
                    se.pos,
                )
        for mi in parent.methods.values():
            _merge(nf, subst_method(mi, qual_map, entity_map, child_is))
        parent_lineages.append(parent.lineage)
        nf.ancestor_args[parent.name] = {**qual_map, **entity_map}
        for anc, amap in parent.ancestor_args.items():
            if anc == parent.name:
                continue
            composed: dict[str, str | Expr] = {}
            for formal, actual in amap.items():
                if isinstance(actual, str):
                    composed[formal] = qual_map.get(actual, actual)
                else:
                    composed[formal] = subst_expr(
                        actual, qual_map, entity_map, type_fn
                    )
            nf.ancestor_args[anc] = composed
    nf.lineage = merge_lineages(parent_lineages, decl.name)
    nf.ancestor_args[decl.name] = {
        p.name: (p.name if p.kind == "is" else Var(p.name, pos=p.pos))
        for p in decl.params
    }
    if decl.representation is not None:
        if nf.rep is not None:
            raise CompileError(
                REP_REDEFINED,
                f"representation of {decl.name} is already fixed by "
                f"{nf.rep_origin}",
                decl.rep_pos,
            )
        if any(isinstance(n, TSelf) for n in type_walk(decl.representation)):
            raise CompileError(
                TYPE_MISMATCH,
                "representation cannot mention Self",
                decl.rep_pos,
            )
        nf.rep = decl.representation
        nf.rep_origin = decl.name
    for m in decl.methods:
        if m.kind == "proof_of":
            cur = nf.methods.get(m.name)
            if cur is None or not cur.is_logical:
                raise CompileError(
                    UNKNOWN, f"proof of unknown property {m.name}", m.pos
                )
            cur.proof = m.proof
            cur.proof_origin = decl.name
            cur.origin = decl.name
            cur.kind = "theorem"
            if cur.first_def is None:
                cur.first_def = decl.name
            continue
        _merge(nf, _local_info(decl, m))
    return nf


def invalidate_proofs(nf: NFSpecies) -> list[RevertedProof]:
    """Erase proofs whose unfolded definitions were later redefined."""
    rank = {s: i for i, s in enumerate(nf.lineage)}
    reverted: list[RevertedProof] = []
    for mi in nf.methods.values():
        if mi.kind != "theorem" or mi.proof is None:
            continue
        assert mi.proof_origin is not None
        proof_rank = rank.get(mi.proof_origin, len(nf.lineage))
        for def_name in collect_leaf_facts(mi.proof).definitions:
            target = nf.methods.get(def_name)
            if target is None:
                continue  # reported by the dependency scan
            if rank.get(target.origin, 0) > proof_rank:
                mi.valid_proof = False
                reverted.append(
                    RevertedProof(
                        mi.name,
                        mi.proof_origin,
                        def_name,
                        target.origin,
                        target.pos,  # point at the redefinition
                    )
                )
                break
    nf.reverted = reverted
    return reverted


# ---------------------------------------------------------------------------
# Collections


@dataclass
class CollectionModel:
    name: str
    nf: NFSpecies  # underlying complete species (shared, not copied)
    param_map: dict[str, str] = field(default_factory=dict)  # formal -> collection
    entity_args: dict[str, Expr] = field(default_factory=dict)
    arg_order: list[tuple[str, str]] = field(default_factory=list)  # (kind, formal)
    iface_schemes: dict[str, Scheme] = field(default_factory=dict)
    carrier: Type | None = None  # representation with parameters substituted
    pos: Pos = NOPOS

    @property
    def interface(self) -> list[str]:
        return list(self.nf.order)


def make_collection(
    decl: CollectionDecl,
    species_env: dict[str, NFSpecies],
    collections: dict[str, CollectionModel],
    type_entity_arg,
) -> CollectionModel:
    """Encapsulate a complete species; `type_entity_arg(expr, coll_name)`
    checks one effective entity argument against a collection's carrier."""
    se = decl.implements
    base = species_env.get(se.name)
    if base is None:
        raise CompileError(UNKNOWN, f"unknown species {se.name}", se.pos)
    missing = base.incompleteness()
    if missing:
        raise CompileError(
            INCOMPLETE,
            f"species {se.name} is not complete",
            decl.pos,
            witness=missing,
        )
    if len(se.args) != len(base.params):
        raise CompileError(
            INTERFACE,
            f"{se.name} takes {len(base.params)} argument(s), got {len(se.args)}",
            se.pos,
        )
    model = CollectionModel(name=decl.name, nf=base, pos=decl.pos)
    for formal, arg in zip(base.params, se.args):
        if formal.kind == "is":
            if arg.name is None or arg.name not in collections:
                raise CompileError(
                    UNKNOWN,
                    f"parameter {formal.name} of {se.name} needs an existing "
                    "collection",
                    arg.pos,
                )
            actual = collections[arg.name]
            assert formal.interface is not None
            _check_interface(formal.interface.name, actual, species_env, arg.pos)
            model.param_map[formal.name] = arg.name
            model.arg_order.append(("is", formal.name))
        else:
            expr = arg.expr if arg.expr is not None else Var(arg.name, pos=arg.pos)
            assert formal.carrier is not None
            target = model.param_map.get(formal.carrier)
            if target is None:
                raise CompileError(
                    UNKNOWN,
                    f"entity parameter {formal.name} has no effective carrier",
                    arg.pos,
                )
            type_entity_arg(expr, target)
            model.entity_args[formal.name] = expr
            model.arg_order.append(("in", formal.name))

    def subst(t: Type) -> Type:
        def step(n: Type) -> Type:
            match n:
                case TSelf():
                    return TCollCarrier(decl.name)
                case TParam(p) if p in model.param_map:
                    return TCollCarrier(model.param_map[p])
                case _:
                    return n

        return type_map(t, step)

    assert base.rep_resolved is not None
    model.carrier = type_map(
        base.rep_resolved,
        lambda n: TCollCarrier(model.param_map[n.name])
        if isinstance(n, TParam) and n.name in model.param_map
        else n,
    )
    for name, mi in base.methods.items():
        if mi.scheme is not None:
            model.iface_schemes[name] = Scheme(
                mi.scheme.count, subst(mi.scheme.body)
            )
    return model


def _check_interface(
    iface: str,
    actual: CollectionModel,
    species_env: dict[str, NFSpecies],
    pos: Pos,
) -> None:
    if iface in actual.nf.lineage:
        return
    iface_nf = species_env.get(iface)
    if iface_nf is None:
        raise CompileError(UNKNOWN, f"unknown species {iface}", pos)
    problems: list[str] = []
    for name, mi in iface_nf.methods.items():
        other = actual.nf.methods.get(name)
        if other is None:
            problems.append(f"missing {name}")
        elif mi.scheme is not None and other.scheme != mi.scheme:
            problems.append(f"{name} has a different type")
        elif mi.statement is not None and other.statement != mi.statement:
            problems.append(f"{name} has a different statement")
    if problems:
        raise CompileError(
            INTERFACE,
            f"{actual.name} does not implement {iface}",
            pos,
            witness=problems,
        )
