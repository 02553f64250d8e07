"""Implicit and explicit definability over finite Henkin models.

Covers the M_A models, brute-force uniqueness checks for implicit
definitions, extraction of first-order definitions from second-order
implicit ones, undoing cylinder padding, and comprehension checks.
"""
from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Mapping, Optional, Sequence

from .quantifiers import GeneralizedQuantifier, realize, restrict
from .semantics import (
    Assignment, HenkinModel, QuantifierInterpretation, Relation, all_relations,
    check_guard, eval_l2q, eval_lq, extension, make_domain, model_to_json,
    relation_to_json, interpretation_to_json,
)
from .syntax import (
    And, ArityError, Atom, Eq, ExistsInd, ExistsPred, ForallInd, ForallPred,
    Formula, FormulaError, Imp, Not, Or, QApp, QBind, as_iff, check_well_formed,
    classify, free_pred_vars, is_sentence, rename_free_pred,
    rename_preds, render,
)

__all__ = [
    "Report", "ExtractionError", "PolyadicDetected", "NotPrenex",
    "ComprehensionShapeError", "build_MA", "build_MR", "henkin_models",
    "satisfying_interpretations", "check_implicit_on", "check_implicit_upto",
    "slot_symbols", "tautology", "extract_fo", "verify_lemma_equivalence",
    "check_explicit_definition", "define_from_padded", "comprehension_shape",
    "check_comprehension",
]

EXIT_CODES = {"pass": 0, "fail": 1, "inconclusive": 2}

STRUCTURAL_NOTE = ("structural mode: a generalization of the prefix-stripping construction, "
                   "justified by the singleton / empty predicate ranges of M_A; not literal")


class ExtractionError(FormulaError):
    pass


class PolyadicDetected(ExtractionError):
    pass


class NotPrenex(ExtractionError):
    pass


class ComprehensionShapeError(FormulaError):
    pass


@dataclass
class Report:
    verdict: str
    models_checked: int
    strategy: str
    counterexample: Optional[dict] = None
    notes: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.verdict not in EXIT_CODES:
            raise ValueError(f"bad verdict {self.verdict!r}")
        if (self.verdict == "fail") != (self.counterexample is not None):
            raise ValueError("a counterexample accompanies exactly the failing verdicts")

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]

    def to_dict(self) -> dict:
        out = {"verdict": self.verdict, "models_checked": self.models_checked,
               "strategy": self.strategy, "counterexample": self.counterexample}
        if self.notes:
            out["notes"] = list(self.notes)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=str)


def _rels_json(rels: Sequence[Relation]) -> list:
    return [relation_to_json(r) for r in rels]


# --------------------------------------------------------------------------
# Models

def build_MR(domain: Iterable, relations: Sequence[Relation],
             other_arities: Iterable[int] = ()) -> HenkinModel:
    """Henkin model whose Pred_{n_i} is the singleton {R_i}; listed other arities are empty."""
    dom = make_domain(domain)
    preds: dict[int, tuple[Relation, ...]] = {}
    for r in relations:
        if not r.over(dom):
            raise ValueError(f"{r!r} is not a relation over {dom}")
        if r.arity in preds:
            raise ValueError("slot relations must have pairwise distinct arities")
        preds[r.arity] = (r,)
    for k in other_arities:
        preds.setdefault(k, ())
    return HenkinModel(dom, preds)


def build_MA(domain: Iterable, a: Relation, polyadic_arities: Iterable[int] = ()) -> HenkinModel:
    """M_A: unary predicate variables range over {A}, polyadic ones over nothing."""
    if a.arity != 1:
        raise ValueError("A must be a unary relation")
    return build_MR(domain, (a,), [k for k in polyadic_arities if k != 1])


def _families(domain, arity: int) -> list[tuple[Relation, ...]]:
    rels = all_relations(domain, arity)
    check_guard(2 ** len(rels), f"Pred_{arity} families")
    return [tuple(r for i, r in enumerate(rels) if mask >> i & 1) for mask in range(2 ** len(rels))]


def henkin_models(domain: Iterable, arities: Iterable[int]) -> Iterator[HenkinModel]:
    """Every Henkin model over ``domain`` with arbitrary families at ``arities``."""
    dom = make_domain(domain)
    arities = sorted(set(arities))
    total = 1
    for k in arities:
        total *= 2 ** (2 ** (len(dom) ** k))
    check_guard(total, "Henkin models")
    per_arity = [_families(dom, k) for k in arities]
    for choice in itertools.product(*per_arity):
        yield HenkinModel(dom, dict(zip(arities, choice)))


def _random_model(domain, arities: Sequence[int], rng: random.Random) -> HenkinModel:
    preds = {}
    for k in arities:
        preds[k] = tuple(r for r in all_relations(domain, k) if rng.random() < 0.5)
    return HenkinModel(domain, preds)


# --------------------------------------------------------------------------
# Implicit definability

def _single_symbol(f: Formula) -> Optional[str]:
    syms = {g.symbol for g in _walk(f) if isinstance(g, QApp)}
    if len(syms) > 1:
        raise ExtractionError(f"more than one quantifier symbol: {sorted(syms)}")
    return next(iter(syms), None)


def _walk(f: Formula) -> Iterator[Formula]:
    yield f
    if isinstance(f, QBind):
        for _, body in f.parts:
            yield from _walk(body)
    elif isinstance(f, Not):
        yield from _walk(f.sub)
    elif isinstance(f, (And, Or, Imp)):
        yield from _walk(f.left)
        yield from _walk(f.right)
    elif isinstance(f, (ForallInd, ExistsInd, ForallPred, ExistsPred)):
        yield from _walk(f.body)


def satisfying_interpretations(model: HenkinModel, sigma: Formula,
                               qtype: Sequence[int]) -> list[QuantifierInterpretation]:
    """Every X inside Pred_{n1} x ... x Pred_{nk} with (model, X) satisfying ``sigma``.

    Candidates are enumerated as bitmasks over the product, so the result
    order is deterministic.
    """
    if not is_sentence(sigma):
        raise FormulaError("sigma must be a sentence")
    qtype = tuple(qtype)
    check_well_formed(sigma, {s: qtype for s in [_single_symbol(sigma)] if s})
    product = list(itertools.product(*[model.family(n) for n in qtype]))
    check_guard(2 ** len(product), "candidate interpretations")
    out = []
    for mask in range(2 ** len(product)):
        x = QuantifierInterpretation(qtype, frozenset(t for i, t in enumerate(product) if mask >> i & 1))
        if eval_l2q(model, x, None, sigma):
            out.append(x)
    return out


def check_implicit_on(model: HenkinModel, sigma: Formula, q: GeneralizedQuantifier) -> bool:
    """True iff restrict(q, model) is the one and only interpretation satisfying ``sigma``."""
    return satisfying_interpretations(model, sigma, q.qtype) == [restrict(q, model)]


def _arities_of(sigma: Formula, qtype: Sequence[int]) -> list[int]:
    sig = check_well_formed(sigma)
    found = {a for a in sig.pred_arities.values() if a is not None}
    return sorted(found | set(qtype))


def check_implicit_upto(sigma: Formula, q: GeneralizedQuantifier, max_size: int, *,
                        strategy: str = "exhaustive", seed: Optional[int] = None,
                        samples: int = 100) -> Report:
    """Finitized implicit-definability check over domains {1..n}, n <= max_size.

    ``exhaustive`` enumerates every family choice at the arities ``sigma``
    and ``q`` use; ``sampled`` draws ``samples`` families per size from a
    generator seeded with ``seed`` and can at best return "inconclusive".
    """
    if max_size < 1:
        raise ValueError("max_size must be at least 1 (domains are nonempty)")
    if strategy not in ("exhaustive", "sampled"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if strategy == "sampled" and seed is None:
        raise ValueError("the sampled strategy needs a seed")
    arities = _arities_of(sigma, q.qtype)
    label = (f"exhaustive, domain sizes 1..{max_size}" if strategy == "exhaustive"
             else f"sampled(seed={seed}, samples={samples}), domain sizes 1..{max_size}")
    rng = random.Random(seed)
    checked = 0
    q_ever_nonempty = False
    for n in range(1, max_size + 1):
        dom = tuple(range(1, n + 1))
        if strategy == "exhaustive":
            models: Iterable[HenkinModel] = henkin_models(dom, arities)
        else:
            models = (_random_model(dom, arities, rng) for _ in range(samples))
        for model in models:
            checked += 1
            expected = restrict(q, model)
            q_ever_nonempty = q_ever_nonempty or bool(expected.members)
            sats = satisfying_interpretations(model, sigma, q.qtype)
            if sats != [expected]:
                return Report("fail", checked, label, {
                    "model": model_to_json(model),
                    "expected": interpretation_to_json(expected),
                    "satisfying": [interpretation_to_json(x) for x in sats],
                    "reason": ("no interpretation satisfies sigma" if not sats else
                               "more than one interpretation satisfies sigma" if len(sats) > 1 else
                               "the unique satisfier differs from the restricted quantifier"),
                })
    notes = ["pass up to the size bound only"]
    if not any(realize(q, tuple(range(1, n + 1))) for n in range(1, max_size + 1)):
        notes.append("Q_M is empty on every enumerated domain; such a quantifier is "
                     "first-order definable by any contradiction")
    elif not q_ever_nonempty:
        notes.append("restrict(Q, M) was empty on every checked model")
    verdict = "pass" if strategy == "exhaustive" else "inconclusive"
    return Report(verdict, checked, label, None, notes)


# --------------------------------------------------------------------------
# Extraction

def slot_symbols(k: int) -> tuple[str, ...]:
    return ("P",) if k == 1 else tuple(f"P{i}" for i in range(1, k + 1))


def tautology(symbol: str = "P", arity: int = 1) -> Formula:
    """``exists x. P(x) | ~exists x. P(x)`` (generalized to any arity)."""
    xs = ("x",) if arity == 1 else tuple(f"x{i}" for i in range(1, arity + 1))
    body: Formula = Atom(symbol, xs)
    for x in reversed(xs):
        body = ExistsInd(x, body)
    return Or(body, Not(body))


def _resolve_qtype(theta: Formula, qtype: Optional[Sequence[int]]) -> tuple[int, ...]:
    sym = _single_symbol(theta)
    sig = check_well_formed(theta, {sym: tuple(qtype)} if (sym and qtype) else None)
    if qtype is None:
        qtype = sig.qtypes.get(sym) if sym else None
        if qtype is None:
            qtype = (1,)
    qtype = tuple(qtype)
    if len(set(qtype)) != len(qtype):
        raise ExtractionError(
            f"type {qtype} has repeated arities; pad slots until the arities are distinct")
    return qtype


def extract_fo(theta: Formula, mode: str = "prenex", *, qtype: Optional[Sequence[int]] = None,
               symbols: Optional[Sequence[str]] = None) -> Formula:
    """First-order formula phi(P) with (M, A) |= phi iff (M_A, {A}) |= theta.

    ``prenex`` strips the second-order prefix, renames every predicate
    variable to the slot symbol of its arity and replaces each ``Q(...)`` by
    a fixed tautology.  ``structural`` evaluates the M_A ranges in place:
    unary binders disappear, other binders become the tautology (forall) or
    its negation (exists).  Types with several slots of distinct arities get
    one symbol per slot (``P1, P2, ...``).
    """
    if mode not in ("prenex", "structural"):
        raise ValueError(f"unknown mode {mode!r}")
    if not is_sentence(theta):
        raise ExtractionError("theta must be a sentence")
    qtype = _resolve_qtype(theta, qtype)
    symbols = tuple(symbols or slot_symbols(len(qtype)))
    if len(symbols) != len(qtype):
        raise ExtractionError(f"need {len(qtype)} slot symbols")
    by_arity = dict(zip(qtype, symbols))
    taut = tautology(symbols[0], qtype[0])

    if mode == "prenex":
        info = classify(theta)
        if not info.is_so_prenex:
            raise NotPrenex("theta must have all second-order quantifiers in an outermost prefix "
                            "(try so_prenex, or structural mode)")
        for name, arity in info.pred_arities.items():
            if arity is not None and arity not in by_arity:
                raise PolyadicDetected(
                    f"predicate variable {name} has arity {arity}; in M_A such variables range "
                    f"over the empty family, so theta would hold or fail regardless of Q and "
                    f"cannot be an implicit definition")
        matrix = theta
        while isinstance(matrix, (ForallPred, ExistsPred)):
            matrix = matrix.body
        mapping = {name: by_arity[a] for name, a in info.pred_arities.items() if a is not None}
        return _replace_qapp(rename_preds(matrix, mapping), taut)

    def go(g: Formula) -> Formula:
        if isinstance(g, (Atom, Eq)):
            return g
        if isinstance(g, QApp):
            return taut
        if isinstance(g, QBind):
            return QBind(g.symbol, tuple((vs, go(b)) for vs, b in g.parts))
        if isinstance(g, Not):
            return Not(go(g.sub))
        if isinstance(g, (And, Or, Imp)):
            return type(g)(go(g.left), go(g.right))
        if isinstance(g, (ForallInd, ExistsInd)):
            return type(g)(g.var, go(g.body))
        if isinstance(g, (ForallPred, ExistsPred)):
            target = by_arity.get(g.arity)
            if target is None:
                return taut if isinstance(g, ForallPred) else Not(taut)
            return go(_rename_free_loose(g.body, g.var, target))
        raise TypeError(f"not a formula: {g!r}")

    return go(theta)


def _rename_free_loose(f: Formula, old: str, new: str) -> Formula:
    # Inner binders of the same arity are eliminated too and mapped to the
    # same symbol, so capture by them is harmless here.
    return rename_free_pred(f, old, new) if old != new else f


def _replace_qapp(f: Formula, taut: Formula) -> Formula:
    if isinstance(f, QApp):
        return taut
    if isinstance(f, (Atom, Eq)):
        return f
    if isinstance(f, QBind):
        return QBind(f.symbol, tuple((vs, _replace_qapp(b, taut)) for vs, b in f.parts))
    if isinstance(f, Not):
        return Not(_replace_qapp(f.sub, taut))
    if isinstance(f, (And, Or, Imp)):
        return type(f)(_replace_qapp(f.left, taut), _replace_qapp(f.right, taut))
    if isinstance(f, (ForallInd, ExistsInd)):
        return type(f)(f.var, _replace_qapp(f.body, taut))
    if isinstance(f, (ForallPred, ExistsPred)):
        return type(f)(f.var, f.arity, _replace_qapp(f.body, taut))
    raise TypeError(f"not a formula: {f!r}")


def _points(q: GeneralizedQuantifier, max_size: int):
    if max_size < 1:
        raise ValueError("max_size must be at least 1 (domains are nonempty)")
    for n in range(1, max_size + 1):
        dom = tuple(range(1, n + 1))
        members = realize(q, dom)
        families = [all_relations(dom, k) for k in q.qtype]
        for rels in itertools.product(*families):
            yield dom, rels, rels in members


def verify_lemma_equivalence(theta: Formula, phi: Formula, q: GeneralizedQuantifier,
                             max_size: int, *, symbols: Optional[Sequence[str]] = None,
                             registry: Optional[Mapping[str, Any]] = None) -> Report:
    """Check (M, A) |= phi  iff  (M_A, {A}) |= theta  iff  A in Q_M at every point.

    Points are domains {1..n}, n <= max_size, and every A (every tuple of
    slot relations for multi-slot types).
    """
    qtype = q.qtype
    if len(set(qtype)) != len(qtype):
        raise ExtractionError(f"type {qtype} has repeated arities")
    symbols = tuple(symbols or slot_symbols(len(qtype)))
    other = [a for a in _arities_of(theta, qtype) if a not in qtype]
    checked = 0
    for dom, rels, member in _points(q, max_size):
        checked += 1
        s = Assignment({}, dict(zip(symbols, rels)))
        phi_value = eval_lq(dom, s, registry or {}, phi)
        m_a = build_MR(dom, rels, other)
        theta_value = eval_l2q(m_a, QuantifierInterpretation(qtype, frozenset([rels])), None, theta)
        if not phi_value == theta_value == member:
            return Report("fail", checked, f"exhaustive, domain sizes 1..{max_size}", {
                "domain": list(dom),
                "relations": _rels_json(rels),
                "phi": phi_value, "theta_in_M_A": theta_value, "member_of_Q_M": member,
            })
    return Report("pass", checked, f"exhaustive, domain sizes 1..{max_size}", None,
                  ["pass up to the size bound only"])


def check_explicit_definition(phi: Formula, q: GeneralizedQuantifier, max_size: int, *,
                              symbols: Optional[Sequence[str]] = None,
                              registry: Optional[Mapping[str, Any]] = None) -> Report:
    """Check (M, R...) |= phi iff <R...> in Q_M for every relation tuple on small domains."""
    symbols = tuple(symbols or slot_symbols(len(q.qtype)))
    checked = 0
    for dom, rels, member in _points(q, max_size):
        checked += 1
        value = eval_lq(dom, Assignment({}, dict(zip(symbols, rels))), registry or {}, phi)
        if value != member:
            return Report("fail", checked, f"exhaustive, domain sizes 1..{max_size}", {
                "domain": list(dom), "relations": _rels_json(rels),
                "phi": value, "member_of_Q_M": member,
            })
    return Report("pass", checked, f"exhaustive, domain sizes 1..{max_size}", None,
                  ["pass up to the size bound only"])


def define_from_padded(phi_pad: Formula, slot: int = 1, *, nslots: int = 1,
                       symbol: Optional[str] = None, padded_arity: Optional[int] = None) -> Formula:
    """Turn a definition of Q^{+l} into one of Q by dropping the last argument of slot l.

    Sound because membership in R x M ignores the final coordinate.
    """
    if not 1 <= slot <= nslots:
        raise ValueError(f"slot {slot} out of range 1..{nslots}")
    symbol = symbol or slot_symbols(nslots)[slot - 1]
    arity = check_well_formed(phi_pad).pred_arities.get(symbol)
    if arity is None or symbol not in free_pred_vars(phi_pad):
        return phi_pad
    if padded_arity is not None and arity != padded_arity:
        raise ArityError(f"{symbol} has arity {arity}, expected the padded arity {padded_arity}")
    if arity < 1:
        raise ArityError(f"{symbol} is nullary; nothing to unpad")

    def go(g: Formula) -> Formula:
        if isinstance(g, Atom):
            return Atom(g.pred, g.args[:-1]) if g.pred == symbol else g
        if isinstance(g, (Eq, QApp)):
            return g
        if isinstance(g, QBind):
            return QBind(g.symbol, tuple((vs, go(b)) for vs, b in g.parts))
        if isinstance(g, Not):
            return Not(go(g.sub))
        if isinstance(g, (And, Or, Imp)):
            return type(g)(go(g.left), go(g.right))
        if isinstance(g, (ForallInd, ExistsInd)):
            return type(g)(g.var, go(g.body))
        if isinstance(g, (ForallPred, ExistsPred)):
            if g.var == symbol:
                raise ArityError(f"{symbol} is rebound inside the definition")
            return type(g)(g.var, g.arity, go(g.body))
        raise TypeError(f"not a formula: {g!r}")

    return go(phi_pad)


# --------------------------------------------------------------------------
# Comprehension

@dataclass(frozen=True)
class ComprehensionInstance:
    params: tuple[tuple[str, int], ...]
    target: str
    xs: tuple[str, ...]
    body: Formula
    formula: Formula


def comprehension_shape(f: Formula) -> ComprehensionInstance:
    """Match ``forall R... exists P. forall x... (phi <-> P(x...))``."""
    if not is_sentence(f):
        raise ComprehensionShapeError("instance must be a closed formula")
    if any(isinstance(g, (QApp, QBind)) for g in _walk(f)):
        raise ComprehensionShapeError("instances are pure L2 formulas")
    params = []
    g = f
    while isinstance(g, ForallPred):
        params.append((g.var, g.arity))
        g = g.body
    if not isinstance(g, ExistsPred):
        raise ComprehensionShapeError("expected 'exists P:k.' after the universal parameters")
    target, k = g.var, g.arity
    g = g.body
    xs = []
    while isinstance(g, ForallInd):
        xs.append(g.var)
        g = g.body
    pair = as_iff(g)
    if pair is None:
        raise ComprehensionShapeError("expected a biconditional after the individual quantifiers")
    head = Atom(target, tuple(xs))
    if pair[1] == head:
        body = pair[0]
    elif pair[0] == head:
        body = pair[1]
    else:
        raise ComprehensionShapeError(f"one side of the biconditional must be {render(head)}")
    if len(set(xs)) != len(xs) or len(xs) != k:
        raise ComprehensionShapeError(f"{target} has arity {k} but {len(xs)} distinct variables are bound")
    if target in free_pred_vars(body):
        raise ComprehensionShapeError(f"{target} may not occur in the defining formula")
    return ComprehensionInstance(tuple(params), target, tuple(xs), body, f)


def check_comprehension(model: HenkinModel, instances: Sequence[Formula]) -> Report:
    """Evaluate comprehension instances in ``model``; fail with the first parameter
    tuple whose defined relation is missing from the family."""
    shaped = [comprehension_shape(f) for f in instances]
    for i, inst in enumerate(shaped):
        if eval_l2q(model, None, None, inst.formula):
            continue
        families = [model.family(a) for _, a in inst.params]
        for rels in itertools.product(*families):
            s = Assignment({}, {name: r for (name, _), r in zip(inst.params, rels)})
            needed = extension(model, s, inst.xs, inst.body)
            if needed not in model.family(len(inst.xs)):
                return Report("fail", i + 1, "evaluation", {
                    "instance": render(inst.formula),
                    "model": model_to_json(model),
                    "parameters": {name: relation_to_json(r) for (name, _), r in zip(inst.params, rels)},
                    "required": relation_to_json(needed),
                })
        raise AssertionError("instance failed but no witness was found")
    return Report("pass", len(shaped), "evaluation")
