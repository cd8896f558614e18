"""Method typing: inference results, the two Self modes, and type stability."""

from __future__ import annotations

import pytest

from focml import CompileError, compile_source
from focml.pretty import type_to_source

from conftest import data
from focml import compile_files


def scheme_src(cu, species: str, method: str) -> str:
    mi = cu.species[species].methods[method]
    assert mi.scheme is not None
    return type_to_source(mi.scheme.body)


def test_inferred_types_of_the_example(example_cu):
    assert scheme_src(example_cu, "Data", "id") == "string"
    assert scheme_src(example_cu, "OrdData", "gt") == "Self -> Self -> bool"
    assert scheme_src(example_cu, "TheInt", "fromInt") == "int -> Self"
    assert scheme_src(example_cu, "IsIn", "getValue") == "Self -> V"
    assert scheme_src(example_cu, "IsIn", "getStatus") == "Self -> statut_t"
    assert scheme_src(example_cu, "IsIn", "filter") == "V -> Self"


def test_type_inference_through_declared_signature():
    # even's type comes out of odd's declared signature.
    cu = compile_source(
        """
species S =
  signature odd : int -> bool ;
  let even (n) = if n = 0 then true else odd (n - 1) ;
end ;;
"""
    )
    assert scheme_src(cu, "S", "even") == "int -> bool"


def test_inherited_type_is_pinned(example_cu):
    # Redefinitions keep the type of the first declaration.
    assert scheme_src(example_cu, "TheInt", "lt") == "Self -> Self -> bool"
    assert scheme_src(example_cu, "TheInt", "id") == "string"


def test_body_mode_lets_use_the_representation(example_cu):
    lt = example_cu.species["TheInt"].methods["lt"]
    assert lt.carrier_def  # x <0x y forces Self = int
    gt = example_cu.species["OrdData"].methods["gt"]
    assert gt.carrier_decl and not gt.carrier_def


def test_statement_mode_keeps_self_rigid():
    with pytest.raises(CompileError) as e:
        compile_files(data("wrong.fcl"))
    assert e.value.kind == "WrongCarrierLeak"
    assert e.value.witness == ["incr (x) = x + 1"]


def test_statement_over_self_alone_is_fine():
    compile_source(
        """
species X =
  representation = int ;
  property refl : all x : Self, x = x ;
end ;;
"""
    )


def test_redefinition_changing_type_is_rejected():
    with pytest.raises(CompileError) as e:
        compile_source(
            """
species A = let f (x) : int = x ; end ;;
species B = inherit A ; let f (x) : bool = x ; end ;;
"""
        )
    assert e.value.kind == "TypeMismatch"
    assert "changes its type" in e.value.message


def test_conflicting_signatures_from_two_parents():
    with pytest.raises(CompileError) as e:
        compile_source(
            """
species A = signature f : int -> int ; end ;;
species B = signature f : bool -> bool ; end ;;
species C = inherit A, B ; end ;;
"""
        )
    assert e.value.kind == "TypeMismatch"


def test_body_must_match_declared_signature():
    with pytest.raises(CompileError) as e:
        compile_source('species X = let f (x) : int = "s" ; end ;;')
    assert e.value.kind == "TypeMismatch"


def test_polymorphic_let_generalizes():
    cu = compile_source("species X = let pick (x, y) = x ; end ;;")
    mi = cu.species["X"].methods["pick"]
    assert mi.scheme.count == 2
    assert type_to_source(mi.scheme.body) == "'a -> 'b -> 'a"


def test_unknown_name_in_body():
    with pytest.raises(CompileError) as e:
        compile_source("species X = let f = mystery ; end ;;")
    assert e.value.kind == "UnknownName"


def test_constructor_arity(example_cu):
    with pytest.raises(CompileError) as e:
        compile_source(
            """
type t = | C (int) ;;
species X = let f = C ; end ;;
"""
        )
    assert "argument" in e.value.message


def test_match_arms_must_agree():
    with pytest.raises(CompileError) as e:
        compile_source(
            """
type t = | A | B ;;
species X =
  let f (s : t) = match s with | A -> 1 | B -> true ;
end ;;
"""
        )
    assert e.value.kind == "TypeMismatch"


def test_if_condition_must_be_bool():
    with pytest.raises(CompileError) as e:
        compile_source("species X = let f (x) = if x + 1 then 1 else 2 ; end ;;")
    assert e.value.kind == "TypeMismatch"


def test_entity_parameter_has_carrier_type():
    cu = compile_source(
        """
species A = signature cmp : Self -> Self -> bool ; end ;;
species X (P is A, v in P) =
  let probe (x) = P!cmp (x, v) ;
end ;;
"""
    )
    assert scheme_src(cu, "X", "probe") == "P -> bool"


def test_qualified_call_on_unknown_method():
    with pytest.raises(CompileError) as e:
        compile_source(
            """
species A = signature f : Self -> Self ; end ;;
species X (P is A) = let g (x) = P!missing (x) ; end ;;
"""
        )
    assert e.value.kind == "UnknownName"


def test_proof_hypothesis_references_are_checked():
    with pytest.raises(CompileError) as e:
        compile_source(
            """
species X =
  property p : all x : int, x = x ;
  theorem t : all x : int, x = x
  proof = by hypothesis Huh ;
end ;;
"""
        )
    assert e.value.kind == "ProofError"
    assert "unknown hypothesis" in e.value.message
