"""Generalized quantifiers as finite-domain membership oracles."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .semantics import (
    Domain, HenkinModel, QuantifierInterpretation, Relation, all_relations,
    check_guard, make_domain,
)

__all__ = [
    "GeneralizedQuantifier", "builtin", "parse_quantifier", "catalog",
    "default_registry", "realize", "restrict", "pad", "UnknownQuantifier",
]

Oracle = Callable[[Domain, tuple[Relation, ...]], bool]


class UnknownQuantifier(ValueError):
    pass


@dataclass(frozen=True)
class GeneralizedQuantifier:
    name: str
    qtype: tuple[int, ...]
    oracle: Oracle
    definition: str = ""
    provenance: str = "user"

    def __post_init__(self):
        qtype = tuple(int(n) for n in self.qtype)
        if not qtype or any(n < 1 for n in qtype):
            raise ValueError(f"quantifier type must be a nonempty tuple of positive arities: {qtype}")
        object.__setattr__(self, "qtype", qtype)

    def accepts(self, domain: Sequence, relations: Sequence[Relation]) -> bool:
        rels = tuple(relations)
        if len(rels) != len(self.qtype) or any(r.arity != n for r, n in zip(rels, self.qtype)):
            raise ValueError(f"{self.name} expects relations of arities {self.qtype}")
        return bool(self.oracle(make_domain(domain), rels))


def _set(r: Relation) -> frozenset:
    return frozenset(t[0] for t in r.tuples)


def _forall(dom, rels):
    return len(rels[0].tuples) == len(dom)


def _exists(dom, rels):
    return bool(rels[0].tuples)


def _hartig(dom, rels):
    return len(rels[0].tuples) == len(rels[1].tuples)


def _most(dom, rels):
    a, b = _set(rels[0]), _set(rels[1])
    return len(a & b) > len(a - b)


def _never(dom, rels):
    # |A| >= aleph_alpha never holds on a finite domain.
    return False


# name -> (number of parameters, type, definition, provenance)
_CATALOG = {
    "forall": (0, (1,), "forall_M = {M}", "paper"),
    "exists": (0, (1,), "exists_M = {A subset M | A nonempty}", "paper"),
    "hartig": (0, (1, 1), "I_M = {<A,B> | A,B subset M, |A| = |B|}", "paper"),
    "aleph0": (0, (1,), "(Q_0)_M = {A subset M | |A| >= aleph_0}; empty on finite M", "paper"),
    "atleast": (1, (1,), "{{A subset M | |A| >= {k}}}", "extension"),
    "exactly": (1, (1,), "{{A subset M | |A| = {k}}}", "extension"),
    "most": (0, (1, 1), "{<A,B> | |A & B| > |A - B|}", "extension"),
    "divides": (1, (1,), "{{A subset M | {k} divides |A|}}", "extension"),
}

_ALIASES = {"I": "hartig", "A": "forall", "E": "exists", "Q0": "aleph0"}

_STUBS = [
    ("aleph(alpha), alpha > 0", (1,),
     "(Q_alpha)_M = {A subset M | |A| >= aleph_alpha}; no finite-domain content, not realized",
     "paper (stub)"),
]


def builtin(name: str, param: Optional[int] = None) -> GeneralizedQuantifier:
    """Catalog quantifier by name, e.g. ``builtin("atleast", 2)``."""
    name = _ALIASES.get(name, name)
    if name not in _CATALOG:
        raise UnknownQuantifier(f"unknown quantifier {name!r}")
    nparams, qtype, definition, prov = _CATALOG[name]
    if nparams and param is None:
        raise UnknownQuantifier(f"quantifier {name!r} needs a parameter, e.g. {name}:2")
    if not nparams and param is not None:
        raise UnknownQuantifier(f"quantifier {name!r} takes no parameter")
    if name == "forall":
        oracle = _forall
    elif name == "exists":
        oracle = _exists
    elif name == "hartig":
        oracle = _hartig
    elif name == "most":
        oracle = _most
    elif name == "aleph0":
        oracle = _never
    else:
        k = int(param)
        if k < 0:
            raise ValueError(f"{name} parameter must be nonnegative")
        if name == "atleast":
            def oracle(dom, rels, k=k):
                return len(rels[0].tuples) >= k
        elif name == "exactly":
            def oracle(dom, rels, k=k):
                return len(rels[0].tuples) == k
        else:
            if k == 0:
                raise ValueError("divides needs a positive parameter")

            def oracle(dom, rels, k=k):
                return len(rels[0].tuples) % k == 0
        definition = definition.format(k=k)
        name = f"{name}:{k}"
    return GeneralizedQuantifier(name, qtype, oracle, definition, prov)


def parse_quantifier(spec: str) -> GeneralizedQuantifier:
    """``NAME`` or ``NAME:k`` (``atleast:2``); ``NAME+l`` pads slot l."""
    pads = []
    while "+" in spec:
        spec, slot = spec.rsplit("+", 1)
        pads.append(int(slot))
    name, _, param = spec.partition(":")
    q = builtin(name, int(param) if param else None)
    for slot in reversed(pads):
        q = pad(q, slot)
    return q


def catalog() -> list[dict]:
    rows = []
    for name, (nparams, qtype, definition, prov) in _CATALOG.items():
        rows.append({"name": name + (":k" if nparams else ""), "type": list(qtype),
                     "definition": definition.format(k="k") if nparams else definition,
                     "provenance": prov})
    for name, qtype, definition, prov in _STUBS:
        rows.append({"name": name, "type": list(qtype), "definition": definition, "provenance": prov})
    return rows


def default_registry() -> dict[str, GeneralizedQuantifier]:
    """QBind symbols understood without configuration."""
    reg = {name: builtin(name) for name, spec in _CATALOG.items() if not spec[0]}
    reg.update({alias: builtin(target) for alias, target in _ALIASES.items()})
    return reg


def realize(q: GeneralizedQuantifier, domain: Sequence) -> frozenset:
    """Q_M as an explicit set of relation tuples."""
    dom = make_domain(domain)
    total = 1
    for n in q.qtype:
        total *= 2 ** (len(dom) ** n)
    check_guard(total, f"realizing {q.name}")
    families = [all_relations(dom, n) for n in q.qtype]
    return frozenset(rels for rels in itertools.product(*families) if q.oracle(dom, rels))


def restrict(q: GeneralizedQuantifier, model: HenkinModel) -> QuantifierInterpretation:
    """Q_M intersected with Pred_{n1} x ... x Pred_{nk} of the model."""
    families = [model.family(n) for n in q.qtype]
    members = frozenset(rels for rels in itertools.product(*families) if q.oracle(model.domain, rels))
    return QuantifierInterpretation(q.qtype, members)


def _cylinder_base(s: Relation, dom: Domain) -> Optional[Relation]:
    base = Relation(s.arity - 1, frozenset(t[:-1] for t in s.tuples))
    expanded = frozenset(t + (a,) for t in base.tuples for a in dom)
    return base if expanded == s.tuples else None


def pad(q: GeneralizedQuantifier, slot: int) -> GeneralizedQuantifier:
    """Q^{+l}: slot ``l`` (1-based) takes R x M in place of R."""
    k = len(q.qtype)
    if not 1 <= slot <= k:
        raise ValueError(f"slot {slot} out of range 1..{k}")
    i = slot - 1
    qtype = q.qtype[:i] + (q.qtype[i] + 1,) + q.qtype[i + 1:]

    def oracle(dom, rels):
        base = _cylinder_base(rels[i], dom)
        if base is None:
            return False
        return q.oracle(dom, rels[:i] + (base,) + rels[i + 1:])

    return GeneralizedQuantifier(f"{q.name}+{slot}", qtype, oracle,
                                 f"cylinder padding of {q.name} at slot {slot}", "paper")
