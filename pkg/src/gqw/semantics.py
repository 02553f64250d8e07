"""Finite structures, Henkin models and evaluators.

Relations are explicit tuple sets; domains are small enough that nothing
cleverer pays off.
"""
from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass, field
from typing import Any, Hashable, Iterable, Mapping, Optional, Sequence, Union

from .syntax import (
    And, Atom, Eq, ExistsInd, ExistsPred, ForallInd, ForallPred, Formula, Imp,
    Not, Or, QApp, QBind, render,
)

__all__ = [
    "Element", "Domain", "Relation", "Assignment", "HenkinModel",
    "QuantifierInterpretation", "EvaluationError", "UnboundVariable",
    "SizeGuardExceeded", "size_guard", "check_guard", "make_domain",
    "all_tuples", "all_relations", "extension", "eval_lq", "eval_l2q",
    "full_powerset_model", "relation_from_json", "relation_to_json",
    "model_from_json", "model_to_json", "interpretation_from_json",
    "interpretation_to_json", "load_model", "load_interpretation",
]

Element = Hashable
Domain = tuple  # sorted tuple of distinct elements

DEFAULT_SIZE_GUARD = 2 ** 20


class EvaluationError(ValueError):
    pass


class UnboundVariable(EvaluationError):
    pass


class SizeGuardExceeded(ValueError):
    pass


def size_guard() -> int:
    """Enumeration bound; ``GQW_SIZE_GUARD`` overrides the default 2**20."""
    raw = os.environ.get("GQW_SIZE_GUARD")
    return int(raw) if raw else DEFAULT_SIZE_GUARD


def check_guard(count: int, what: str) -> None:
    limit = size_guard()
    if count > limit:
        raise SizeGuardExceeded(f"{what}: {count} candidates exceeds the size guard {limit}")


def _key(x):
    return (0, x, "") if isinstance(x, int) and not isinstance(x, bool) else (1, 0, str(x))


def _tuple_key(t):
    return tuple(_key(x) for x in t)


def make_domain(elements: Iterable[Element]) -> Domain:
    dom = tuple(sorted(set(elements), key=_key))
    if not dom:
        raise ValueError("domains are nonempty")
    return dom


@dataclass(frozen=True)
class Relation:
    arity: int
    tuples: frozenset = frozenset()

    def __post_init__(self):
        ts = frozenset(tuple(t) for t in self.tuples)
        for t in ts:
            if len(t) != self.arity:
                raise ValueError(f"tuple {t} does not have arity {self.arity}")
        object.__setattr__(self, "tuples", ts)

    @classmethod
    def unary(cls, elements: Iterable[Element]) -> "Relation":
        return cls(1, frozenset((e,) for e in elements))

    def sorted_tuples(self) -> list[tuple]:
        return sorted(self.tuples, key=_tuple_key)

    def over(self, domain: Sequence[Element]) -> bool:
        dom = set(domain)
        return all(x in dom for t in self.tuples for x in t)

    def __len__(self) -> int:
        return len(self.tuples)

    def __contains__(self, t) -> bool:
        return tuple(t) in self.tuples

    def __repr__(self) -> str:
        if self.arity == 1:
            inner = ", ".join(repr(t[0]) for t in self.sorted_tuples())
        else:
            inner = ", ".join(repr(t) for t in self.sorted_tuples())
        return f"Relation{self.arity}{{{inner}}}"

    def sort_key(self):
        return (self.arity, len(self.tuples), [_tuple_key(t) for t in self.sorted_tuples()])


def all_tuples(domain: Sequence[Element], k: int) -> list[tuple]:
    return list(itertools.product(domain, repeat=k))


def all_relations(domain: Sequence[Element], k: int) -> list[Relation]:
    """All subsets of M^k, ordered by bitmask over the lexicographic tuple list."""
    ts = all_tuples(domain, k)
    check_guard(2 ** len(ts), f"subsets of M^{k}")
    return [Relation(k, frozenset(t for i, t in enumerate(ts) if mask >> i & 1))
            for mask in range(2 ** len(ts))]


@dataclass(frozen=True)
class Assignment:
    ind: Mapping[str, Element] = field(default_factory=dict)
    pred: Mapping[str, Relation] = field(default_factory=dict)

    def __post_init__(self):
        for name, rel in self.pred.items():
            if not isinstance(rel, Relation):
                raise TypeError(f"{name} must be assigned a Relation")


@dataclass(frozen=True, eq=False)
class HenkinModel:
    """Domain plus the families Pred_k second-order variables range over.

    Arities missing from ``preds`` have the empty family.
    """
    domain: Domain
    preds: Mapping[int, tuple[Relation, ...]] = field(default_factory=dict)

    def __post_init__(self):
        dom = make_domain(self.domain)
        preds = {}
        for k, fam in self.preds.items():
            k = int(k)
            rels = []
            for r in fam:
                if r.arity != k:
                    raise ValueError(f"relation of arity {r.arity} in Pred_{k}")
                if not r.over(dom):
                    raise ValueError(f"relation {r!r} is not over the domain")
                if r not in rels:
                    rels.append(r)
            preds[k] = tuple(sorted(rels, key=Relation.sort_key))
        object.__setattr__(self, "domain", dom)
        object.__setattr__(self, "preds", preds)

    def family(self, k: int) -> tuple[Relation, ...]:
        return self.preds.get(k, ())

    def __eq__(self, other):
        if not isinstance(other, HenkinModel):
            return NotImplemented
        mine = {k: v for k, v in self.preds.items() if v}
        theirs = {k: v for k, v in other.preds.items() if v}
        return self.domain == other.domain and mine == theirs

    def __hash__(self):
        return hash((self.domain, tuple(sorted((k, v) for k, v in self.preds.items() if v))))


@dataclass(frozen=True)
class QuantifierInterpretation:
    """A second-order predicate: a set of k-tuples of relations."""
    qtype: tuple[int, ...]
    members: frozenset = frozenset()

    def __post_init__(self):
        qtype = tuple(self.qtype)
        members = frozenset(tuple(m) for m in self.members)
        for m in members:
            if len(m) != len(qtype) or any(r.arity != n for r, n in zip(m, qtype)):
                raise ValueError(f"member {m} does not match type {qtype}")
        object.__setattr__(self, "qtype", qtype)
        object.__setattr__(self, "members", members)

    def sorted_members(self) -> list[tuple[Relation, ...]]:
        return sorted(self.members, key=lambda m: [r.sort_key() for r in m])

    def __len__(self) -> int:
        return len(self.members)

    def within(self, model: HenkinModel) -> bool:
        return all(r in model.family(n) for m in self.members for r, n in zip(m, self.qtype))


# --------------------------------------------------------------------------
# Evaluation

Interp = Union[QuantifierInterpretation, Mapping[str, QuantifierInterpretation], None]


class _Ctx:
    def __init__(self, domain, henkin, interp, registry, trace):
        self.domain = domain
        self.henkin = henkin
        self.interp = interp
        self.registry = registry or {}
        self.trace = trace

    def interp_for(self, symbol: str) -> QuantifierInterpretation:
        if self.interp is None:
            raise EvaluationError(f"no interpretation supplied for {symbol}")
        if isinstance(self.interp, QuantifierInterpretation):
            return self.interp
        try:
            return self.interp[symbol]
        except KeyError:
            raise EvaluationError(f"no interpretation supplied for {symbol}") from None


def _ind(env: Mapping[str, Element], x: str) -> Element:
    try:
        return env[x]
    except KeyError:
        raise UnboundVariable(f"individual variable {x} is unassigned") from None


def _rel(env: Mapping[str, Relation], p: str) -> Relation:
    try:
        return env[p]
    except KeyError:
        raise UnboundVariable(f"predicate variable {p} is unassigned") from None


def _ev(f: Formula, c: _Ctx, ind: dict, pred: dict) -> bool:
    if isinstance(f, Atom):
        r = _rel(pred, f.pred)
        if r.arity != len(f.args):
            raise EvaluationError(f"{f.pred} has arity {r.arity}, applied to {len(f.args)}")
        return tuple(_ind(ind, x) for x in f.args) in r.tuples
    if isinstance(f, Not):
        return not _ev(f.sub, c, ind, pred)
    if isinstance(f, And):
        return _ev(f.left, c, ind, pred) and _ev(f.right, c, ind, pred)
    if isinstance(f, Or):
        return _ev(f.left, c, ind, pred) or _ev(f.right, c, ind, pred)
    if isinstance(f, Imp):
        return (not _ev(f.left, c, ind, pred)) or _ev(f.right, c, ind, pred)
    if isinstance(f, ForallInd):
        return all(_ev(f.body, c, {**ind, f.var: a}, pred) for a in c.domain)
    if isinstance(f, ExistsInd):
        return any(_ev(f.body, c, {**ind, f.var: a}, pred) for a in c.domain)
    if isinstance(f, Eq):
        return _ind(ind, f.left) == _ind(ind, f.right)
    if isinstance(f, (ForallPred, ExistsPred)):
        if c.henkin is None:
            raise EvaluationError("predicate quantifiers need a Henkin model")
        fam = c.henkin.family(f.arity)
        results = (_ev(f.body, c, ind, {**pred, f.var: r}) for r in fam)
        return all(results) if isinstance(f, ForallPred) else any(results)
    if isinstance(f, QApp):
        x = c.interp_for(f.symbol)
        if len(x.qtype) != len(f.args):
            raise EvaluationError(f"{f.symbol} has type {x.qtype}, applied to {len(f.args)} arguments")
        args = tuple(_rel(pred, p) for p in f.args)
        for r, n in zip(args, x.qtype):
            if r.arity != n:
                raise EvaluationError(f"{f.symbol} slot of arity {n} given a relation of arity {r.arity}")
        return args in x.members
    if isinstance(f, QBind):
        q = c.registry.get(f.symbol)
        if q is None:
            raise EvaluationError(f"unknown quantifier symbol {f.symbol}")
        lens = tuple(len(vs) for vs, _ in f.parts)
        if tuple(q.qtype) != lens:
            raise EvaluationError(f"{f.symbol} has type {tuple(q.qtype)} but binds tuples of lengths {lens}")
        exts = tuple(_extension(c, ind, pred, vs, body) for vs, body in f.parts)
        verdict = bool(q.oracle(c.domain, exts))
        if c.trace is not None:
            c.trace.append({"node": render(f), "ind": dict(ind), "extensions": exts, "value": verdict})
        return verdict
    raise TypeError(f"not a formula: {f!r}")


def _extension(c: _Ctx, ind: dict, pred: dict, ys: Sequence[str], phi: Formula) -> Relation:
    out = []
    for t in itertools.product(c.domain, repeat=len(ys)):
        if _ev(phi, c, {**ind, **dict(zip(ys, t))}, pred):
            out.append(t)
    return Relation(len(ys), frozenset(out))


def _split(structure) -> tuple[Domain, Optional[HenkinModel]]:
    if isinstance(structure, HenkinModel):
        return structure.domain, structure
    return make_domain(structure), None


def extension(structure: Union[Sequence[Element], HenkinModel], s: Assignment,
              ys: Sequence[str], phi: Formula, *,
              registry: Optional[Mapping[str, Any]] = None, interp: Interp = None) -> Relation:
    """The set of tuples ``a`` with ``phi`` true when ``ys`` are rebound to ``a``."""
    domain, henkin = _split(structure)
    ctx = _Ctx(domain, henkin, interp, registry, None)
    return _extension(ctx, dict(s.ind), dict(s.pred), tuple(ys), phi)


def eval_lq(domain: Sequence[Element], s: Assignment, registry: Mapping[str, Any], phi: Formula,
            *, trace: Optional[list] = None) -> bool:
    """Truth of an L(Q) formula over a plain structure.

    ``registry`` maps QBind symbols to generalized quantifiers; pass an empty
    mapping for first-order formulas.  Appends one record per QBind node
    visited to ``trace`` when given.
    """
    ctx = _Ctx(make_domain(domain), None, None, registry, trace)
    return _ev(phi, ctx, dict(s.ind), dict(s.pred))


def eval_l2q(model: HenkinModel, interp: Interp, s: Optional[Assignment], theta: Formula, *,
             registry: Optional[Mapping[str, Any]] = None, trace: Optional[list] = None) -> bool:
    """Truth of an L2 / L2(Q) formula in a Henkin model.

    Predicate quantifiers range over ``model.family(arity)``; ``Q(P...)``
    holds iff the tuple of assigned relations is a member of ``interp``.
    """
    s = s or Assignment()
    ctx = _Ctx(model.domain, model, interp, registry, trace)
    return _ev(theta, ctx, dict(s.ind), dict(s.pred))


def full_powerset_model(domain: Iterable[Element], arities: Iterable[int]) -> HenkinModel:
    """The Henkin model with Pred_k = every subset of M^k (standard semantics)."""
    dom = make_domain(domain)
    return HenkinModel(dom, {k: tuple(all_relations(dom, k)) for k in sorted(set(arities))})


# --------------------------------------------------------------------------
# JSON

def relation_from_json(data: Any, arity: int) -> Relation:
    tuples = []
    for t in data:
        if isinstance(t, list):
            tuples.append(tuple(t))
        elif arity == 1:
            tuples.append((t,))
        else:
            raise ValueError(f"bare element {t!r} in a relation of arity {arity}")
    return Relation(arity, frozenset(tuples))


def relation_to_json(r: Relation) -> list:
    if r.arity == 1:
        return [t[0] for t in r.sorted_tuples()]
    return [list(t) for t in r.sorted_tuples()]


def model_from_json(data: Mapping[str, Any]) -> HenkinModel:
    dom = make_domain(data["domain"])
    preds = {}
    for k, fam in (data.get("preds") or {}).items():
        k = int(k)
        preds[k] = tuple(relation_from_json(r, k) for r in fam)
    return HenkinModel(dom, preds)


def model_to_json(model: HenkinModel) -> dict:
    return {
        "domain": list(model.domain),
        "preds": {str(k): [relation_to_json(r) for r in fam] for k, fam in sorted(model.preds.items())},
    }


def interpretation_from_json(data: Mapping[str, Any]) -> QuantifierInterpretation:
    qtype = tuple(int(n) for n in data["type"])
    members = []
    for m in data.get("members", []):
        if len(m) != len(qtype):
            raise ValueError(f"member {m!r} does not have {len(qtype)} components")
        members.append(tuple(relation_from_json(r, n) for r, n in zip(m, qtype)))
    return QuantifierInterpretation(qtype, frozenset(members))


def interpretation_to_json(x: QuantifierInterpretation) -> dict:
    return {"type": list(x.qtype),
            "members": [[relation_to_json(r) for r in m] for m in x.sorted_members()]}


def assignment_from_json(data: Optional[Mapping[str, Any]], arities: Mapping[str, Optional[int]]) -> Assignment:
    if not data:
        return Assignment()
    ind = dict(data.get("ind", {}))
    pred = {}
    for name, rel in (data.get("pred") or {}).items():
        arity = arities.get(name)
        if arity is None:
            arity = len(rel[0]) if rel and isinstance(rel[0], list) else 1
        pred[name] = relation_from_json(rel, arity)
    return Assignment(ind, pred)


def load_model(path: str) -> tuple[HenkinModel, Optional[dict]]:
    """Read a model file; returns the model and its optional ``assignment`` block."""
    with open(path) as fh:
        data = json.load(fh)
    return model_from_json(data), data.get("assignment")


def load_interpretation(path: str) -> QuantifierInterpretation:
    with open(path) as fh:
        return interpretation_from_json(json.load(fh))
