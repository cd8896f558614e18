"""Recursive-descent parser.

Statements and function bodies share one expression grammar; the logical
connectives sit at the lowest precedence levels and a post-parse
stratification pass rejects them inside `let` bodies.  Proof well-formedness
(qed closes every step list, `by step` references an earlier sibling, bullet
depths nest one by one) is enforced here because it is decidable at parse
time.
"""

from __future__ import annotations

from .ast import (
    BinOp, BoolLit, Call, CollectionDecl, CompilationUnit, ConRef, Connective,
    Eq, Expr, Fact, If, IntLit, Match, MethodDecl, Not, PCon, PTuple, PVar,
    PWild, Pattern, ProofLeaf, ProofStep, ProofSteps, Proof, Qual, Quant,
    SpeciesArg, SpeciesDecl, SpeciesExpr, SpeciesParam, StrLit, TArrow, TCap,
    TCon, TSelf, TTuple, TupleExpr, Type, UnOp, UnionTypeDecl, Var, expr_walk,
)
from .errors import CompileError, DUPLICATE, PROOF, SYNTAX, UNKNOWN
from .lexer import Token, tokenize

_FACT_KEYWORDS = ("definition", "property", "hypothesis", "step", "type")


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    # -- token plumbing -----------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def at(self, kind: str) -> bool:
        return self.peek().kind == kind

    def next(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def accept(self, kind: str) -> Token | None:
        if self.at(kind):
            return self.next()
        return None

    def expect(self, kind: str, what: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            want = what or f"'{kind}'"
            raise CompileError(SYNTAX, f"expected {want}, found {tok.value or tok.kind!r}", tok.pos)
        return self.next()

    def ident(self, what: str = "a name") -> Token:
        return self.expect("ident", what)

    def capid(self, what: str = "a capitalized name") -> Token:
        return self.expect("capid", what)

    def name(self, what: str = "a name") -> Token:
        tok = self.peek()
        if tok.kind not in ("ident", "capid"):
            raise CompileError(
                SYNTAX, f"expected {what}, found {tok.value or tok.kind!r}", tok.pos)
        return self.next()

    # -- toplevel -----------------------------------------------------------

    def parse_unit(self) -> CompilationUnit:
        unit = CompilationUnit()
        seen: set[str] = set()
        while not self.at("eof"):
            decl = self.parse_toplevel()
            if decl.name in seen:
                raise CompileError(DUPLICATE, f"duplicate toplevel name {decl.name}", decl.pos)
            seen.add(decl.name)
            unit.decls.append(decl)
        return unit

    def parse_toplevel(self):
        tok = self.peek()
        match tok.kind:
            case "species":
                return self.parse_species()
            case "collection":
                return self.parse_collection()
            case "type":
                return self.parse_union_type()
            case _:
                raise CompileError(SYNTAX, f"expected a declaration, found {tok.value!r}", tok.pos)

    def parse_union_type(self) -> UnionTypeDecl:
        pos = self.expect("type").pos
        name = self.ident("a type name").value
        self.expect("=")
        self.accept("|")
        constructors: list[tuple[str, list[Type]]] = []
        while True:
            con = self.capid("a constructor name").value
            args: list[Type] = []
            if self.accept("("):
                args.append(self.parse_type())
                while self.accept(","):
                    args.append(self.parse_type())
                self.expect(")")
            constructors.append((con, args))
            if not self.accept("|"):
                break
        self.expect(";;")
        return UnionTypeDecl(name, constructors, pos=pos)

    def parse_species(self) -> SpeciesDecl:
        pos = self.expect("species").pos
        name = self.capid("a species name").value
        decl = SpeciesDecl(name, pos=pos)
        if self.accept("("):
            decl.params.append(self.parse_species_param())
            while self.accept(","):
                decl.params.append(self.parse_species_param())
            self.expect(")")
        self.expect("=")
        names: set[str] = set()
        while not self.at("end"):
            self.parse_species_member(decl, names)
        self.expect("end")
        self.expect(";;")
        return decl

    def parse_species_param(self) -> SpeciesParam:
        tok = self.peek()
        if tok.kind == "capid":
            name = self.next().value
            self.expect("is")
            return SpeciesParam(name, "is", interface=self.parse_species_expr(), pos=tok.pos)
        if tok.kind == "ident":
            name = self.next().value
            self.expect("in")
            carrier = self.capid("a collection parameter name").value
            return SpeciesParam(name, "in", carrier=carrier, pos=tok.pos)
        raise CompileError(SYNTAX, "expected a species parameter", tok.pos)

    def parse_species_expr(self) -> SpeciesExpr:
        tok = self.capid("a species name")
        expr = SpeciesExpr(tok.value, pos=tok.pos)
        if self.accept("("):
            expr.args.append(self.parse_species_arg())
            while self.accept(","):
                expr.args.append(self.parse_species_arg())
            self.expect(")")
        return expr

    def parse_species_arg(self) -> SpeciesArg:
        tok = self.peek()
        if tok.kind == "capid" and self.peek(1).kind not in ("!", "("):
            self.next()
            return SpeciesArg(name=tok.value, pos=tok.pos)
        return SpeciesArg(expr=self.parse_expr(), pos=tok.pos)

    def parse_species_member(self, decl: SpeciesDecl, names: set[str]) -> None:
        tok = self.peek()

        def register(name: str, pos) -> None:
            if name in names:
                raise CompileError(DUPLICATE, f"duplicate method {name} in species {decl.name}", pos)
            names.add(name)

        match tok.kind:
            case "inherit":
                self.next()
                decl.inherits.append(self.parse_species_expr())
                while self.accept(","):
                    decl.inherits.append(self.parse_species_expr())
                self.expect(";")
            case "representation":
                self.next()
                if decl.representation is not None:
                    raise CompileError(DUPLICATE, "representation already given", tok.pos)
                self.expect("=")
                decl.representation = self.parse_type()
                decl.rep_pos = tok.pos
                self.expect(";")
            case "signature":
                self.next()
                name = self.ident("a method name")
                register(name.value, name.pos)
                self.expect(":")
                ty = self.parse_type()
                self.expect(";")
                decl.methods.append(MethodDecl("signature", name.value, ty=ty, pos=name.pos))
            case "let":
                self.next()
                rec = self.accept("rec") is not None
                name = self.ident("a method name")
                register(name.value, name.pos)
                params: list[tuple[str, Type | None]] = []
                if self.accept("("):
                    params.append(self.parse_let_param())
                    while self.accept(","):
                        params.append(self.parse_let_param())
                    self.expect(")")
                ret = self.parse_type() if self.accept(":") else None
                self.expect("=")
                body = self.parse_expr()
                self.expect(";")
                decl.methods.append(MethodDecl(
                    "let", name.value, params=params, ret=ret, body=body, rec=rec, pos=name.pos))
            case "property":
                self.next()
                name = self.ident("a property name")
                register(name.value, name.pos)
                self.expect(":")
                stmt = self.parse_expr()
                self.expect(";")
                decl.methods.append(MethodDecl("property", name.value, statement=stmt, pos=name.pos))
            case "theorem":
                self.next()
                name = self.ident("a theorem name")
                register(name.value, name.pos)
                self.expect(":")
                stmt = self.parse_expr()
                if self.at("proof"):
                    self.next()
                    self.expect("=")
                    proof = self.parse_proof()
                else:
                    # A stated theorem with no proof text counts as admitted.
                    proof = ProofLeaf(admitted=True, pos=name.pos)
                self.expect(";")
                decl.methods.append(MethodDecl(
                    "theorem", name.value, statement=stmt, proof=proof, pos=name.pos))
            case "proof":
                self.next()
                self.expect("of")
                name = self.ident("a property name")
                # A proof may sit beside the property it proves, so it does
                # not claim the name; two proofs of one property do collide.
                if any(m.kind == "proof_of" and m.name == name.value for m in decl.methods):
                    raise CompileError(
                        DUPLICATE, f"duplicate proof of {name.value} in species {decl.name}", name.pos)
                self.expect("=")
                proof = self.parse_proof()
                self.expect(";")
                decl.methods.append(MethodDecl("proof_of", name.value, proof=proof, pos=name.pos))
            case _:
                raise CompileError(SYNTAX, f"expected a species member, found {tok.value!r}", tok.pos)

    def parse_let_param(self) -> tuple[str, Type | None]:
        name = self.ident("a parameter name").value
        ty = self.parse_type() if self.accept(":") else None
        return name, ty

    def parse_collection(self) -> CollectionDecl:
        pos = self.expect("collection").pos
        name = self.capid("a collection name").value
        self.expect("=")
        self.expect("implement")
        impl = self.parse_species_expr()
        self.accept(";")
        self.accept("end")
        self.expect(";;")
        return CollectionDecl(name, impl, pos=pos)

    # -- types --------------------------------------------------------------

    def parse_type(self) -> Type:
        t = self.parse_type_product()
        if self.accept("->"):
            return TArrow(t, self.parse_type())
        return t

    def parse_type_product(self) -> Type:
        items = [self.parse_type_atom()]
        while self.accept("*"):
            items.append(self.parse_type_atom())
        return items[0] if len(items) == 1 else TTuple(tuple(items))

    def parse_type_atom(self) -> Type:
        tok = self.peek()
        match tok.kind:
            case "Self":
                self.next()
                return TSelf()
            case "ident":
                self.next()
                return TCon(tok.value)
            case "capid":
                self.next()
                return TCap(tok.value)
            case "(":
                self.next()
                t = self.parse_type()
                self.expect(")")
                return t
            case _:
                raise CompileError(SYNTAX, f"expected a type, found {tok.value or tok.kind!r}", tok.pos)

    # -- expressions ----------------------------------------------------------

    def parse_expr(self) -> Expr:
        tok = self.peek()
        match tok.kind:
            case "all" | "ex":
                self.next()
                vars = [self.ident("a bound variable").value]
                while self.at("ident"):
                    vars.append(self.next().value)
                self.expect(":")
                ty = self.parse_type()
                self.expect(",")
                return Quant(tok.kind, vars, ty, self.parse_expr(), pos=tok.pos)
            case "if":
                self.next()
                cond = self.parse_expr()
                self.expect("then")
                then = self.parse_expr()
                self.expect("else")
                return If(cond, then, self.parse_expr(), pos=tok.pos)
            case "match":
                return self.parse_match()
            case _:
                return self.parse_implication()

    def parse_match(self) -> Match:
        pos = self.expect("match").pos
        scrutinee = self.parse_expr()
        self.expect("with")
        arms: list[tuple[Pattern, Expr]] = []
        while self.accept("|"):
            pat = self.parse_pattern()
            self.expect("->")
            arms.append((pat, self.parse_expr()))
        if not arms:
            raise CompileError(SYNTAX, "match expression with no arms", pos)
        return Match(scrutinee, arms, pos=pos)

    def parse_pattern(self) -> Pattern:
        tok = self.peek()
        match tok.kind:
            case "ident":
                self.next()
                return PWild(pos=tok.pos) if tok.value == "_" else PVar(tok.value, pos=tok.pos)
            case "capid":
                self.next()
                args: list[Pattern] = []
                if self.accept("("):
                    args.append(self.parse_pattern())
                    while self.accept(","):
                        args.append(self.parse_pattern())
                    self.expect(")")
                return PCon(tok.value, args, pos=tok.pos)
            case "(":
                self.next()
                items = [self.parse_pattern()]
                while self.accept(","):
                    items.append(self.parse_pattern())
                self.expect(")")
                return items[0] if len(items) == 1 else PTuple(items, pos=tok.pos)
            case _:
                raise CompileError(SYNTAX, f"expected a pattern, found {tok.value!r}", tok.pos)

    def parse_implication(self) -> Expr:
        left = self.parse_disjunction()
        if self.at("->"):
            pos = self.next().pos
            return Connective("->", left, self.parse_expr(), pos=pos)
        return left

    def parse_disjunction(self) -> Expr:
        left = self.parse_conjunction()
        while self.at("\\/"):
            pos = self.next().pos
            left = Connective("\\/", left, self.parse_conjunction(), pos=pos)
        return left

    def parse_conjunction(self) -> Expr:
        left = self.parse_negation()
        while self.at("/\\"):
            pos = self.next().pos
            left = Connective("/\\", left, self.parse_negation(), pos=pos)
        return left

    def parse_negation(self) -> Expr:
        if self.at("~"):
            pos = self.next().pos
            return Not(self.parse_negation(), pos=pos)
        return self.parse_equality()

    def parse_equality(self) -> Expr:
        left = self.parse_bool_op()
        if self.at("="):
            pos = self.next().pos
            return Eq(left, self.parse_bool_op(), pos=pos)
        return left

    def parse_bool_op(self) -> Expr:
        left = self.parse_comparison()
        while self.at("&&"):
            pos = self.next().pos
            left = BinOp("&&", left, self.parse_comparison(), pos=pos)
        return left

    def parse_comparison(self) -> Expr:
        left = self.parse_additive()
        if self.peek().kind in ("<0x", "=0x"):
            tok = self.next()
            return BinOp(tok.kind, left, self.parse_additive(), pos=tok.pos)
        return left

    def parse_additive(self) -> Expr:
        left = self.parse_unary()
        while self.peek().kind in ("+", "-"):
            tok = self.next()
            left = BinOp(tok.kind, left, self.parse_unary(), pos=tok.pos)
        return left

    def parse_unary(self) -> Expr:
        if self.at("~~"):
            pos = self.next().pos
            return UnOp("~~", self.parse_unary(), pos=pos)
        return self.parse_application()

    def parse_application(self) -> Expr:
        e = self.parse_atom()
        while self.at("("):
            self.next()
            args: list[Expr] = []
            if not self.at(")"):
                args.append(self.parse_expr())
                while self.accept(","):
                    args.append(self.parse_expr())
            self.expect(")")
            match e:
                case ConRef(name, []) if not isinstance(e, Call):
                    e = ConRef(name, args, pos=e.pos)
                case Var() | Qual():
                    e = Call(e, args, pos=e.pos)
                case _:
                    raise CompileError(SYNTAX, "expression is not callable", e.pos)
        return e

    def parse_atom(self) -> Expr:
        tok = self.peek()
        match tok.kind:
            case "int":
                self.next()
                return IntLit(int(tok.value), pos=tok.pos)
            case "string":
                self.next()
                return StrLit(tok.value, pos=tok.pos)
            case "true" | "false":
                self.next()
                return BoolLit(tok.kind == "true", pos=tok.pos)
            case "ident":
                self.next()
                return Var(tok.value, pos=tok.pos)
            case "capid":
                self.next()
                if self.accept("!"):
                    name = self.ident("a method name")
                    return Qual(tok.value, name.value, pos=tok.pos)
                return ConRef(tok.value, [], pos=tok.pos)
            case "(":
                self.next()
                items = [self.parse_expr()]
                while self.accept(","):
                    items.append(self.parse_expr())
                self.expect(")")
                return items[0] if len(items) == 1 else TupleExpr(items, pos=tok.pos)
            case "if" | "match" | "all" | "ex":
                return self.parse_expr()
            case _:
                raise CompileError(
                    SYNTAX, f"expected an expression, found {tok.value or tok.kind!r}", tok.pos)

    # -- proofs ---------------------------------------------------------------

    def parse_proof(self) -> Proof:
        tok = self.peek()
        if tok.kind == "admitted":
            self.next()
            return ProofLeaf(admitted=True, pos=tok.pos)
        if tok.kind == "by":
            return self.parse_leaf(sibling_labels=set())
        if tok.kind == "bullet":
            depth = tok.bullet[0]
            if depth != 1:
                raise CompileError(PROOF, f"outermost proof steps must use <1>, found <{depth}>", tok.pos)
            return self.parse_steps(1)
        raise CompileError(SYNTAX, f"expected a proof, found {tok.value or tok.kind!r}", tok.pos)

    def parse_leaf(self, sibling_labels: set[tuple[int, str]]) -> ProofLeaf:
        tok = self.peek()
        if tok.kind == "admitted":
            self.next()
            return ProofLeaf(admitted=True, pos=tok.pos)
        pos = self.expect("by").pos
        facts: list[Fact] = []
        while self.peek().kind in _FACT_KEYWORDS:
            facts.append(self.parse_fact(sibling_labels))
        if not facts:
            raise CompileError(SYNTAX, "expected facts after 'by'", pos)
        return ProofLeaf(facts, pos=pos)

    def parse_fact(self, sibling_labels: set[tuple[int, str]]) -> Fact:
        tok = self.next()
        kind = tok.kind
        if kind == "definition":
            self.expect("of")
        if kind == "step":
            labels: list[tuple[int, str]] = []
            while True:
                b = self.expect("bullet", "a step label")
                if b.bullet not in sibling_labels:
                    raise CompileError(
                        PROOF, f"step {b.value} is not a previously closed sibling step", b.pos)
                labels.append(b.bullet)
                if not (self.accept(",") or self.at("bullet")):
                    break
            return Fact("step", labels=labels, pos=tok.pos)
        names: list[str] = []
        while True:
            t = self.peek()
            if t.kind == "capid" and self.peek(1).kind == "!":
                if kind != "property":
                    raise CompileError(
                        PROOF, f"'{kind}' facts cannot name a parameter method", t.pos)
                self.next()
                self.next()
                m = self.ident("a method name")
                names.append(f"{t.value}!{m.value}")
            elif t.kind == "ident" or (t.kind == "capid" and kind == "hypothesis"):
                self.next()
                names.append(t.value)
            else:
                break
            if not self.accept(","):
                # allow space separation; stop on anything that is not a name
                more = self.at("ident") or (self.at("capid") and self.peek(1).kind == "!")
                if kind == "hypothesis":
                    more = more or self.at("capid")
                if not more:
                    break
        if not names:
            raise CompileError(SYNTAX, f"expected names after '{kind}'", tok.pos)
        return Fact(kind, names=names, pos=tok.pos)

    def parse_steps(self, depth: int) -> ProofSteps:
        steps: list[ProofStep] = []
        seen: set[tuple[int, str]] = set()
        first = self.peek()
        while self.at("bullet") and self.peek().bullet[0] == depth:
            tok = self.next()
            label = tok.bullet
            if label in seen:
                raise CompileError(PROOF, f"duplicate step label {tok.value}", tok.pos)
            step = ProofStep(label=label, pos=tok.pos)
            while True:
                if self.at("assume"):
                    self.next()
                    vars = [self.ident("a variable").value]
                    while self.at("ident"):
                        vars.append(self.next().value)
                    self.expect(":")
                    ty = self.parse_type()
                    self.expect(",")
                    step.assumes.append((vars, ty))
                elif self.at("hypothesis"):
                    self.next()
                    hname = self.name("a hypothesis name").value
                    self.expect(":")
                    stmt = self.parse_expr()
                    self.expect(",")
                    step.hyps.append((hname, stmt))
                else:
                    break
            if self.accept("qed"):
                step.is_qed = True
            else:
                self.expect("prove")
                step.goal = self.parse_expr()
            nxt = self.peek()
            if nxt.kind in ("by", "admitted"):
                step.sub = self.parse_leaf(sibling_labels=seen)
            elif nxt.kind == "bullet" and nxt.bullet[0] == depth + 1:
                step.sub = self.parse_steps(depth + 1)
            elif nxt.kind == "bullet" and nxt.bullet[0] > depth + 1:
                raise CompileError(PROOF, f"step depth jumps from <{depth}> to <{nxt.bullet[0]}>", nxt.pos)
            else:
                raise CompileError(PROOF, f"step {tok.value} has no proof", tok.pos)
            seen.add(label)
            steps.append(step)
        for s in steps[:-1]:
            if s.is_qed:
                raise CompileError(PROOF, "qed step before the end of a step list", s.pos)
        if not steps[-1].is_qed:
            raise CompileError(PROOF, "step list does not end in a qed step", first.pos)
        return ProofSteps(steps, pos=first.pos)


_CONNECTIVE_WORDS = {"->": "->", "/\\": "/\\", "\\/": "\\/"}


def check_stratification(unit: CompilationUnit) -> None:
    """Function bodies must stay in the computational stratum."""
    for decl in unit.decls:
        if not isinstance(decl, SpeciesDecl):
            continue
        for m in decl.methods:
            if m.kind != "let" or m.body is None:
                continue
            for e in expr_walk(m.body):
                match e:
                    case Quant():
                        raise CompileError(
                            SYNTAX, f"quantifier in the body of {decl.name}!{m.name}", e.pos)
                    case Connective(op, _, _):
                        raise CompileError(
                            SYNTAX, f"formula connective '{op}' in the body of {decl.name}!{m.name}", e.pos)
                    case Not():
                        raise CompileError(
                            SYNTAX,
                            f"formula negation '~' in the body of {decl.name}!{m.name} (use '~~')", e.pos)
                    case _:
                        pass


def check_proof_of_targets(unit: CompilationUnit) -> None:
    """Best-effort parse-time check; inherited targets are validated at flattening."""
    for decl in unit.decls:
        if not isinstance(decl, SpeciesDecl) or decl.inherits:
            continue
        provable = {m.name for m in decl.methods if m.kind in ("property", "theorem")}
        for m in decl.methods:
            if m.kind == "proof_of" and m.name not in provable:
                raise CompileError(UNKNOWN, f"proof of unknown property {m.name}", m.pos)


def parse_source(text: str, file: str = "<input>") -> CompilationUnit:
    unit = Parser(tokenize(text, file)).parse_unit()
    check_stratification(unit)
    check_proof_of_targets(unit)
    return unit


def parse_expr_text(text: str) -> Expr:
    p = Parser(tokenize(text))
    e = p.parse_expr()
    p.expect("eof", "end of expression")
    return e


def parse_type_text(text: str) -> Type:
    p = Parser(tokenize(text))
    t = p.parse_type()
    p.expect("eof", "end of type")
    return t
