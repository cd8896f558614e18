"""Surface-syntax printer.

Prints parsed units back to concrete syntax that reparses to a structurally
identical tree.  Also supplies the type-to-source rendering used by the JSON
dependency report.
"""

from __future__ import annotations

from .ast import (
    BinOp, BoolLit, Call, CollectionDecl, CompilationUnit, ConRef, Connective,
    Eq, Expr, Fact, If, IntLit, Match, MethodDecl, Not, PCon, PTuple, PVar,
    PWild, Pattern, ProofLeaf, ProofStep, ProofSteps, Proof, Qual, Quant,
    SpeciesDecl, SpeciesExpr, StrLit, TArrow, TCap, TCollCarrier, TCon,
    TGen, TParam, TSelf, TTuple, TupleExpr, Type, TVar, UnOp, UnionTypeDecl,
    Var,
)

# Binding strength, loosest first.  Parenthesize a child printed in a
# position that binds at least as tightly as the child's own level.
_LEVEL_QUANT = 0
_LEVEL_IMPL = 1
_LEVEL_OR = 2
_LEVEL_AND = 3
_LEVEL_NOT = 4
_LEVEL_EQ = 5
_LEVEL_BOOL = 6
_LEVEL_CMP = 7
_LEVEL_ADD = 8
_LEVEL_UNARY = 9
_LEVEL_APP = 10


def type_to_source(t: Type) -> str:
    match t:
        case TSelf():
            return "Self"
        case TCon(name) | TCap(name) | TParam(name):
            return name
        case TCollCarrier(name):
            return name
        case TArrow(arg, res):
            a = type_to_source(arg)
            if isinstance(arg, TArrow):
                a = f"({a})"
            return f"{a} -> {type_to_source(res)}"
        case TTuple(items):
            parts = []
            for it in items:
                s = type_to_source(it)
                if isinstance(it, (TArrow, TTuple)):
                    s = f"({s})"
                parts.append(s)
            return " * ".join(parts)
        case TGen(idx):
            # quantified variables of a scheme: 'a, 'b, ..., 'a1, ...
            suffix = idx // 26 if idx >= 26 else ""
            return f"'{chr(ord('a') + idx % 26)}{suffix}"
        case TVar(uid):
            return f"'_{uid}"
        case _:
            raise ValueError(f"cannot print type {t!r}")


def expr_to_source(e: Expr, level: int = _LEVEL_QUANT) -> str:
    def wrap(text: str, own: int) -> str:
        return f"({text})" if own < level else text

    match e:
        case IntLit(v):
            return str(v)
        case BoolLit(v):
            return "true" if v else "false"
        case StrLit(v):
            escaped = v.replace("\\", "\\\\").replace('"', '\\"')
            return f'"{escaped}"'
        case Var(name):
            return name
        case Qual(coll, name):
            return f"{coll}!{name}"
        case ConRef(name, args):
            if not args:
                return name
            inner = ", ".join(expr_to_source(a) for a in args)
            return f"{name} ({inner})"
        case Call(callee, args):
            inner = ", ".join(expr_to_source(a) for a in args)
            return wrap(f"{expr_to_source(callee, _LEVEL_APP)} ({inner})", _LEVEL_APP)
        case TupleExpr(items):
            return "(" + ", ".join(expr_to_source(i) for i in items) + ")"
        case UnOp(op, operand):
            return wrap(f"{op} {expr_to_source(operand, _LEVEL_UNARY)}", _LEVEL_UNARY)
        case BinOp(op, left, right):
            own = {"&&": _LEVEL_BOOL, "<0x": _LEVEL_CMP, "=0x": _LEVEL_CMP,
                   "+": _LEVEL_ADD, "-": _LEVEL_ADD}[op]
            l = expr_to_source(left, own)
            r = expr_to_source(right, own + 1)
            return wrap(f"{l} {op} {r}", own)
        case Eq(left, right):
            l = expr_to_source(left, _LEVEL_EQ + 1)
            r = expr_to_source(right, _LEVEL_EQ + 1)
            return wrap(f"{l} = {r}", _LEVEL_EQ)
        case Not(operand):
            return wrap(f"~ {expr_to_source(operand, _LEVEL_NOT)}", _LEVEL_NOT)
        case Connective(op, left, right):
            own = {"->": _LEVEL_IMPL, "\\/": _LEVEL_OR, "/\\": _LEVEL_AND}[op]
            # -> is right associative, the others are printed left associative
            if op == "->":
                l = expr_to_source(left, own + 1)
                r = expr_to_source(right, own)
            else:
                l = expr_to_source(left, own)
                r = expr_to_source(right, own + 1)
            return wrap(f"{l} {op} {r}", own)
        case Quant(kind, vars, ty, body):
            head = f"{kind} {' '.join(vars)} : {type_to_source(ty)}"
            return wrap(f"{head}, {expr_to_source(body)}", _LEVEL_QUANT)
        case If(cond, then, orelse):
            text = (f"if {expr_to_source(cond)} then {expr_to_source(then)} "
                    f"else {expr_to_source(orelse)}")
            return wrap(text, _LEVEL_QUANT)
        case Match(scrutinee, arms):
            parts = [f"match {expr_to_source(scrutinee)} with"]
            for pat, body in arms:
                parts.append(f"| {pattern_to_source(pat)} -> {expr_to_source(body)}")
            return wrap(" ".join(parts), _LEVEL_QUANT)
        case _:
            raise ValueError(f"cannot print expression {e!r}")


def pattern_to_source(p: Pattern) -> str:
    match p:
        case PWild():
            return "_"
        case PVar(name):
            return name
        case PCon(name, args):
            if not args:
                return name
            return f"{name} (" + ", ".join(pattern_to_source(a) for a in args) + ")"
        case PTuple(items):
            return "(" + ", ".join(pattern_to_source(i) for i in items) + ")"
        case _:
            raise ValueError(f"cannot print pattern {p!r}")


def proof_to_source(proof: Proof, indent: str) -> list[str]:
    match proof:
        case ProofLeaf(facts=facts, admitted=True) if not facts:
            return [f"{indent}admitted"]
        case ProofLeaf(facts=facts):
            parts = []
            for f in facts:
                parts.append(_fact_to_source(f))
            return [f"{indent}by " + " ".join(parts)]
        case ProofSteps(steps):
            lines: list[str] = []
            for step in steps:
                lines.extend(_step_to_source(step, indent))
            return lines
        case _:
            raise ValueError(f"cannot print proof {proof!r}")


def _fact_to_source(f: Fact) -> str:
    if f.kind == "step":
        return "step " + ", ".join(f"<{d}>{k}" for d, k in f.labels)
    head = "definition of" if f.kind == "definition" else f.kind
    return f"{head} " + ", ".join(f.names)


def _step_to_source(step: ProofStep, indent: str) -> list[str]:
    depth, key = step.label
    head = [f"{indent}<{depth}>{key}"]
    for vars, ty in step.assumes:
        head.append(f"assume {' '.join(vars)} : {type_to_source(ty)},")
    for name, stmt in step.hyps:
        head.append(f"hypothesis {name} : {expr_to_source(stmt)},")
    head.append("qed" if step.is_qed else f"prove {expr_to_source(step.goal)}")
    lines = [" ".join(head)]
    assert step.sub is not None
    if isinstance(step.sub, ProofLeaf):
        lines[0] += " " + proof_to_source(step.sub, "")[0]
    else:
        lines.extend(proof_to_source(step.sub, indent + "  "))
    return lines


def method_to_source(m: MethodDecl, indent: str = "  ") -> list[str]:
    match m.kind:
        case "signature":
            return [f"{indent}signature {m.name} : {type_to_source(m.ty)};"]
        case "let":
            rec = "rec " if m.rec else ""
            params = ""
            if m.params:
                parts = [n if t is None else f"{n} : {type_to_source(t)}" for n, t in m.params]
                params = " (" + ", ".join(parts) + ")"
            ret = f" : {type_to_source(m.ret)}" if m.ret is not None else ""
            return [f"{indent}let {rec}{m.name}{params}{ret} = {expr_to_source(m.body)};"]
        case "property":
            return [f"{indent}property {m.name} : {expr_to_source(m.statement)};"]
        case "theorem":
            lines = [f"{indent}theorem {m.name} : {expr_to_source(m.statement)}"]
            lines.append(f"{indent}proof =")
            lines.extend(proof_to_source(m.proof, indent + "  "))
            lines.append(f"{indent};")
            return lines
        case "proof_of":
            lines = [f"{indent}proof of {m.name} ="]
            lines.extend(proof_to_source(m.proof, indent + "  "))
            lines.append(f"{indent};")
            return lines
        case _:
            raise ValueError(f"cannot print method kind {m.kind}")


def species_expr_to_source(se: SpeciesExpr) -> str:
    if not se.args:
        return se.name
    parts = []
    for a in se.args:
        parts.append(a.name if a.name is not None else expr_to_source(a.expr))
    return f"{se.name} (" + ", ".join(parts) + ")"


def unit_to_source(unit: CompilationUnit) -> str:
    chunks: list[str] = []
    for decl in unit.decls:
        match decl:
            case UnionTypeDecl(name, constructors):
                arms = []
                for con, args in constructors:
                    if args:
                        arms.append(f"{con} (" + ", ".join(type_to_source(t) for t in args) + ")")
                    else:
                        arms.append(con)
                chunks.append(f"type {name} = " + " | ".join(arms) + " ;;")
            case SpeciesDecl():
                lines = []
                header = f"species {decl.name}"
                if decl.params:
                    parts = []
                    for p in decl.params:
                        if p.kind == "is":
                            parts.append(f"{p.name} is {species_expr_to_source(p.interface)}")
                        else:
                            parts.append(f"{p.name} in {p.carrier}")
                    header += " (" + ", ".join(parts) + ")"
                lines.append(header + " =")
                for se in decl.inherits:
                    lines.append(f"  inherit {species_expr_to_source(se)};")
                if decl.representation is not None:
                    lines.append(f"  representation = {type_to_source(decl.representation)};")
                for m in decl.methods:
                    lines.extend(method_to_source(m))
                lines.append("end ;;")
                chunks.append("\n".join(lines))
            case CollectionDecl(name, implements):
                chunks.append(
                    f"collection {name} = implement {species_expr_to_source(implements)}; end ;;")
            case _:
                raise ValueError(f"cannot print declaration {decl!r}")
    return "\n\n".join(chunks) + "\n"
