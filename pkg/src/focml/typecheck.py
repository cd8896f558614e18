"""Method typing: Hindley-Milner inference with a two-mode treatment of Self.

Inside a species the carrier type `Self` is a distinct type constant.  In
*body* mode (function bodies, proof-step expressions) `Self` may additionally
be expanded to the representation's definition when one exists; doing so is
recorded, because it is exactly what makes a method def-depend on the
carrier.  In *statement* mode `Self` stays rigid: a property or theorem
statement that forces `Self` against a concrete type is an abstraction leak
and is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import count

from .ast import (
    NOPOS,
    Pos,
    Scheme,
    TArrow,
    TCap,
    TCollCarrier,
    TCon,
    TGen,
    TParam,
    TSelf,
    TTuple,
    TVar,
    Type,
    T_BOOL,
    T_INT,
    T_STRING,
    arrow,
    type_map,
    type_walk,
    BinOp,
    BoolLit,
    Call,
    ConRef,
    Connective,
    Eq,
    Expr,
    If,
    IntLit,
    Match,
    Not,
    PCon,
    PTuple,
    PVar,
    PWild,
    Pattern,
    Quant,
    Qual,
    StrLit,
    TupleExpr,
    UnOp,
    Var,
    MethodDecl,
    ProofLeaf,
    ProofStep,
    ProofSteps,
    Proof,
)
from .basics import BUILTIN_FUNCTIONS, BUILTIN_TYPES
from .errors import (
    CARRIER_LEAK,
    DUPLICATE,
    PROOF,
    TYPE_MISMATCH,
    UNKNOWN,
    CompileError,
)
from .pretty import expr_to_source, type_to_source


class TypeContext:
    """Resolves surface type names against the declarations in scope."""

    def __init__(
        self,
        unions: dict[str, object] | None = None,
        param_names: set[str] | None = None,
        collection_names: set[str] | None = None,
    ):
        self.unions = unions or {}
        self.param_names = param_names or set()
        self.collection_names = collection_names or set()

    def resolve(self, t: Type, pos: Pos = NOPOS) -> Type:
        def step(node: Type) -> Type:
            match node:
                case TCap(name):
                    if name in self.param_names:
                        return TParam(name)
                    if name in self.collection_names:
                        return TCollCarrier(name)
                    raise CompileError(UNKNOWN, f"unknown type {name}", pos)
                case TCon(name):
                    if name in BUILTIN_TYPES or name in self.unions:
                        return node
                    raise CompileError(UNKNOWN, f"unknown type {name}", pos)
                case _:
                    return node

        return type_map(t, step)


class Unifier:
    """Unification state for one method (or one proof tree).

    mode='body' lets Self expand to the representation; mode='statement'
    keeps Self rigid and reports expansion attempts as carrier leaks.
    """

    def __init__(self, rep: Type | None = None, mode: str = "body"):
        assert mode in ("body", "statement")
        self.rep = rep
        self.mode = mode
        self.subst: dict[int, Type] = {}
        self.used_rep = False
        self.touched_self = False
        self._fresh = count()

    def fresh(self) -> TVar:
        return TVar(next(self._fresh) + 1_000_000)

    def resolve(self, t: Type) -> Type:
        while isinstance(t, TVar) and t.uid in self.subst:
            t = self.subst[t.uid]
        return t

    def deep(self, t: Type) -> Type:
        t = self.resolve(t)
        match t:
            case TArrow(a, r):
                return TArrow(self.deep(a), self.deep(r))
            case TTuple(items):
                return TTuple(tuple(self.deep(i) for i in items))
            case _:
                return t

    def instantiate(self, scheme: Scheme) -> Type:
        if scheme.count == 0:
            return scheme.body
        fresh = [self.fresh() for _ in range(scheme.count)]
        return type_map(
            scheme.body, lambda n: fresh[n.idx] if isinstance(n, TGen) else n
        )

    def _occurs(self, uid: int, t: Type) -> bool:
        return any(
            isinstance(n, TVar) and n.uid == uid for n in type_walk(self.deep(t))
        )

    def unify(self, a: Type, b: Type, pos: Pos = NOPOS) -> None:
        a, b = self.resolve(a), self.resolve(b)
        if a == b:
            if isinstance(a, TSelf):
                self.touched_self = True
            return
        if isinstance(a, TVar):
            if self._occurs(a.uid, b):
                raise CompileError(TYPE_MISMATCH, "infinite type", pos)
            self.subst[a.uid] = b
            return
        if isinstance(b, TVar):
            return self.unify(b, a, pos)
        if isinstance(a, TSelf) or isinstance(b, TSelf):
            self.touched_self = True
            other = b if isinstance(a, TSelf) else a
            if self.mode == "statement":
                raise CompileError(
                    CARRIER_LEAK,
                    "statement constrains Self to "
                    f"{type_to_source(self.deep(other))}",
                    pos,
                )
            if self.rep is None:
                raise CompileError(
                    TYPE_MISMATCH,
                    f"cannot unify Self with {type_to_source(self.deep(other))}",
                    pos,
                )
            self.used_rep = True
            return self.unify(self.rep, other, pos)
        match a, b:
            case TArrow(a1, r1), TArrow(a2, r2):
                self.unify(a1, a2, pos)
                return self.unify(r1, r2, pos)
            case TTuple(i1), TTuple(i2) if len(i1) == len(i2):
                for x, y in zip(i1, i2):
                    self.unify(x, y, pos)
                return
            case _:
                raise CompileError(
                    TYPE_MISMATCH,
                    f"cannot unify {type_to_source(self.deep(a))} "
                    f"with {type_to_source(self.deep(b))}",
                    pos,
                )

    def generalize(self, t: Type) -> Scheme:
        t = self.deep(t)
        seen: dict[int, int] = {}
        for node in type_walk(t):
            if isinstance(node, TVar) and node.uid not in seen:
                seen[node.uid] = len(seen)
        if not seen:
            return Scheme(0, t)
        body = type_map(
            t, lambda n: TGen(seen[n.uid]) if isinstance(n, TVar) else n
        )
        return Scheme(len(seen), body)


@dataclass
class SpeciesTypeEnv:
    """Everything visible to expressions inside one species."""

    ctx: TypeContext
    rep: Type | None = None
    methods: dict[str, Scheme] = field(default_factory=dict)
    entity_params: dict[str, Type] = field(default_factory=dict)
    param_ifaces: dict[str, dict[str, Scheme]] = field(default_factory=dict)
    collections: dict[str, dict[str, Scheme]] = field(default_factory=dict)
    constructors: dict[str, tuple[str, list[Type]]] = field(default_factory=dict)


def subst_self(t: Type, carrier: Type) -> Type:
    return type_map(t, lambda n: carrier if isinstance(n, TSelf) else n)


def subst_self_scheme(s: Scheme, carrier: Type) -> Scheme:
    return Scheme(s.count, subst_self(s.body, carrier))


def infer_expr(
    e: Expr, locals_: dict[str, Type], env: SpeciesTypeEnv, uni: Unifier
) -> Type:
    match e:
        case IntLit():
            return T_INT
        case BoolLit():
            return T_BOOL
        case StrLit():
            return T_STRING
        case Var(name):
            if name in locals_:
                return locals_[name]
            if name in env.entity_params:
                return env.entity_params[name]
            if name in env.methods:
                return uni.instantiate(env.methods[name])
            if name in BUILTIN_FUNCTIONS:
                return uni.instantiate(BUILTIN_FUNCTIONS[name].scheme)
            raise CompileError(UNKNOWN, f"unknown name {name}", e.pos)
        case Qual(coll, name):
            iface = env.param_ifaces.get(coll) or env.collections.get(coll)
            if iface is None:
                raise CompileError(UNKNOWN, f"unknown collection {coll}", e.pos)
            if name not in iface:
                raise CompileError(
                    UNKNOWN, f"{coll} has no method {name}", e.pos
                )
            return uni.instantiate(iface[name])
        case ConRef(name, args):
            if name not in env.constructors:
                raise CompileError(UNKNOWN, f"unknown constructor {name}", e.pos)
            union, argtys = env.constructors[name]
            if len(args) != len(argtys):
                raise CompileError(
                    TYPE_MISMATCH,
                    f"constructor {name} expects {len(argtys)} argument(s), "
                    f"got {len(args)}",
                    e.pos,
                )
            for a, ty in zip(args, argtys):
                uni.unify(infer_expr(a, locals_, env, uni), ty, a.pos)
            return TCon(union)
        case Call(callee, args):
            tc = infer_expr(callee, locals_, env, uni)
            tas = [infer_expr(a, locals_, env, uni) for a in args]
            ret = uni.fresh()
            uni.unify(tc, arrow(*tas, ret), e.pos)
            return ret
        case BinOp(op, left, right):
            sig = uni.instantiate(BUILTIN_FUNCTIONS[op].scheme)
            tl = infer_expr(left, locals_, env, uni)
            tr = infer_expr(right, locals_, env, uni)
            ret = uni.fresh()
            uni.unify(sig, arrow(tl, tr, ret), e.pos)
            return ret
        case UnOp(op, operand):
            sig = uni.instantiate(BUILTIN_FUNCTIONS[op].scheme)
            t = infer_expr(operand, locals_, env, uni)
            ret = uni.fresh()
            uni.unify(sig, arrow(t, ret), e.pos)
            return ret
        case Eq(left, right):
            tl = infer_expr(left, locals_, env, uni)
            tr = infer_expr(right, locals_, env, uni)
            uni.unify(tl, tr, e.pos)
            return T_BOOL
        case If(cond, then, orelse):
            uni.unify(infer_expr(cond, locals_, env, uni), T_BOOL, cond.pos)
            tt = infer_expr(then, locals_, env, uni)
            to = infer_expr(orelse, locals_, env, uni)
            uni.unify(tt, to, e.pos)
            return tt
        case TupleExpr(items):
            return TTuple(
                tuple(infer_expr(i, locals_, env, uni) for i in items)
            )
        case Match(scrutinee, arms):
            ts = infer_expr(scrutinee, locals_, env, uni)
            result = uni.fresh()
            for pat, body in arms:
                binds = type_pattern(pat, ts, env, uni)
                tb = infer_expr(body, {**locals_, **binds}, env, uni)
                uni.unify(tb, result, body.pos)
            return result
        case Quant() | Connective() | Not():
            raise CompileError(
                TYPE_MISMATCH, "formula in function body", e.pos
            )
        case _:
            raise CompileError(TYPE_MISMATCH, "unsupported expression", e.pos)


def type_pattern(
    p: Pattern, scrutinee: Type, env: SpeciesTypeEnv, uni: Unifier
) -> dict[str, Type]:
    match p:
        case PWild():
            return {}
        case PVar(name):
            return {name: scrutinee}
        case PCon(name, args):
            if name not in env.constructors:
                raise CompileError(UNKNOWN, f"unknown constructor {name}", p.pos)
            union, argtys = env.constructors[name]
            if len(args) != len(argtys):
                raise CompileError(
                    TYPE_MISMATCH,
                    f"constructor {name} expects {len(argtys)} argument(s), "
                    f"got {len(args)}",
                    p.pos,
                )
            uni.unify(scrutinee, TCon(union), p.pos)
            binds: dict[str, Type] = {}
            for a, ty in zip(args, argtys):
                for k, v in type_pattern(a, ty, env, uni).items():
                    if k in binds:
                        raise CompileError(
                            DUPLICATE, f"duplicate pattern variable {k}", a.pos
                        )
                    binds[k] = v
            return binds
        case PTuple(items):
            holes = [uni.fresh() for _ in items]
            uni.unify(scrutinee, TTuple(tuple(holes)), p.pos)
            binds = {}
            for item, hole in zip(items, holes):
                for k, v in type_pattern(item, hole, env, uni).items():
                    if k in binds:
                        raise CompileError(
                            DUPLICATE, f"duplicate pattern variable {k}", item.pos
                        )
                    binds[k] = v
            return binds
        case _:
            raise CompileError(TYPE_MISMATCH, "unsupported pattern", p.pos)


def infer_formula(
    e: Expr, locals_: dict[str, Type], env: SpeciesTypeEnv, uni: Unifier
) -> None:
    """Check a first-order statement. Atoms are bool expressions or `=`."""
    match e:
        case Quant(_, vars_, ty, body):
            resolved = env.ctx.resolve(ty, e.pos)
            infer_formula(
                body, {**locals_, **{v: resolved for v in vars_}}, env, uni
            )
        case Connective(_, left, right):
            infer_formula(left, locals_, env, uni)
            infer_formula(right, locals_, env, uni)
        case Not(operand):
            infer_formula(operand, locals_, env, uni)
        case Eq(left, right):
            _checked_atom(e, locals_, env, uni, is_eq=True)
        case _:
            _checked_atom(e, locals_, env, uni, is_eq=False)


def _checked_atom(
    e: Expr, locals_: dict[str, Type], env: SpeciesTypeEnv, uni: Unifier, is_eq: bool
) -> None:
    try:
        if is_eq:
            assert isinstance(e, Eq)
            tl = infer_expr(e.left, locals_, env, uni)
            tr = infer_expr(e.right, locals_, env, uni)
            uni.unify(tl, tr, e.pos)
        else:
            uni.unify(infer_expr(e, locals_, env, uni), T_BOOL, e.pos)
    except CompileError as err:
        if err.kind == CARRIER_LEAK and not err.witness:
            err.witness = [expr_to_source(e)]
        raise


@dataclass
class LetTyping:
    scheme: Scheme
    param_types: list[Type]
    ret_type: Type
    used_rep: bool
    touched_self: bool


def type_let(
    m: MethodDecl, stored: Scheme | None, env: SpeciesTypeEnv
) -> LetTyping:
    """Infer a let body; check against the stored type when inherited."""
    uni = Unifier(rep=env.rep, mode="body")
    ptys: list[Type] = []
    locals_: dict[str, Type] = {}
    for name, annot in m.params:
        t: Type = uni.fresh() if annot is None else env.ctx.resolve(annot, m.pos)
        ptys.append(t)
        locals_[name] = t
    ret: Type = uni.fresh() if m.ret is None else env.ctx.resolve(m.ret, m.pos)
    if m.rec:
        locals_[m.name] = arrow(*ptys, ret)
    assert m.body is not None
    tbody = infer_expr(m.body, locals_, env, uni)
    uni.unify(tbody, ret, m.body.pos)
    full = arrow(*ptys, ret)
    if stored is not None:
        try:
            uni.unify(full, uni.instantiate(stored), m.pos)
        except CompileError as err:
            if err.kind == TYPE_MISMATCH:
                raise CompileError(
                    TYPE_MISMATCH,
                    f"redefinition of {m.name} changes its type: "
                    f"{type_to_source(uni.deep(full))} vs "
                    f"{type_to_source(stored.body)}",
                    m.pos,
                ) from None
            raise
        inferred = uni.generalize(full)
        if inferred.count != stored.count:
            raise CompileError(
                TYPE_MISMATCH,
                f"redefinition of {m.name} changes its type: "
                f"{type_to_source(inferred.body)} vs {type_to_source(stored.body)}",
                m.pos,
            )
        scheme = stored
    else:
        scheme = uni.generalize(full)
    n = len(m.params)
    shown_args, shown_ret = _split_arrows(scheme.body, n)
    return LetTyping(
        scheme=scheme,
        param_types=shown_args,
        ret_type=shown_ret,
        used_rep=uni.used_rep,
        touched_self=uni.touched_self,
    )


def _split_arrows(t: Type, n: int) -> tuple[list[Type], Type]:
    args: list[Type] = []
    for _ in range(n):
        assert isinstance(t, TArrow)
        args.append(t.arg)
        t = t.res
    return args, t


@dataclass
class StatementTyping:
    touched_self: bool


def check_statement(stmt: Expr, env: SpeciesTypeEnv) -> StatementTyping:
    """Statement-mode check: Self stays rigid; leaks raise WrongCarrierLeak."""
    uni = Unifier(rep=None, mode="statement")
    infer_formula(stmt, {}, env, uni)
    return StatementTyping(touched_self=uni.touched_self)


@dataclass
class ProofTyping:
    used_rep: bool
    touched_self: bool


def check_proof(proof: Proof, env: SpeciesTypeEnv) -> ProofTyping:
    """Type every hypothesis and goal in body mode; track representation use.

    Also validates positional fact references: `by hypothesis h` must name a
    hypothesis introduced by an enclosing step, `by type t` a known type.
    """
    uni = Unifier(rep=env.rep, mode="body")

    def walk(p: Proof, locals_: dict[str, Type], hyps: set[str]) -> None:
        match p:
            case ProofLeaf(facts, _):
                for f in facts:
                    if f.kind == "hypothesis":
                        for name in f.names:
                            if name not in hyps:
                                raise CompileError(
                                    PROOF, f"unknown hypothesis {name}", f.pos
                                )
                    elif f.kind == "type":
                        for name in f.names:
                            if (
                                name not in BUILTIN_TYPES
                                and name not in env.ctx.unions
                            ):
                                raise CompileError(
                                    PROOF, f"unknown type {name}", f.pos
                                )
            case ProofSteps(steps):
                for step in steps:
                    inner = dict(locals_)
                    inner_hyps = set(hyps)
                    for names, ty in step.assumes:
                        resolved = env.ctx.resolve(ty, step.pos)
                        for v in names:
                            inner[v] = resolved
                    for hname, stmt in step.hyps:
                        infer_formula(stmt, inner, env, uni)
                        inner_hyps.add(hname)
                    if step.goal is not None:
                        infer_formula(step.goal, inner, env, uni)
                    if step.sub is not None:
                        walk(step.sub, inner, inner_hyps)

    walk(proof, {}, set())
    return ProofTyping(used_rep=uni.used_rep, touched_self=uni.touched_self)


def signature_scheme(ty: Type, env: SpeciesTypeEnv, pos: Pos) -> Scheme:
    return Scheme(0, env.ctx.resolve(ty, pos))
