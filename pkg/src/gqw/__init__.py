"""Generalized quantifiers, Henkin semantics and definability checks on finite models."""
from .syntax import (
    And, Atom, Eq, ExistsInd, ExistsPred, ForallInd, ForallPred, Formula, Imp, Not, Or,
    QApp, QBind, classify, iff, parse, render, so_prenex, substitute_pred,
)
from .semantics import (
    Assignment, HenkinModel, QuantifierInterpretation, Relation, eval_l2q, eval_lq,
    extension, full_powerset_model,
)
from .quantifiers import GeneralizedQuantifier, builtin, pad, realize, restrict
from .definability import (
    Report, build_MA, check_comprehension, check_explicit_definition, check_implicit_on,
    check_implicit_upto, define_from_padded, extract_fo, satisfying_interpretations,
    verify_lemma_equivalence,
)

__version__ = "0.1.0"
