"""Formula AST, parser, printer and syntactic transforms.

One node algebra covers first-order logic, L(Q) (generalized-quantifier
binders), pure second-order logic L2 and L2(Q) (a second-order predicate
symbol applied to predicate variables).

Concrete syntax::

    forall x. ~P(x)
    forall P:1. (Q(P) <-> exists x. P(x))
    I[x | P(x); y | R(y)]
    most[x | P(x); x | B(x)]

Lowercase identifiers are individual variables, uppercase identifiers are
predicate variables.  A quantifier prefix binds tighter than any binary
connective: ``forall x. P(x) & R(x)`` reads as ``(forall x. P(x)) & R(x)``.
Precedence of the binary connectives is ``& > | > -> > <->``; ``a <-> b`` is
sugar for ``(a -> b) & (b -> a)``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional

__all__ = [
    "Formula", "Atom", "Eq", "QApp", "QBind", "Not", "And", "Or", "Imp",
    "ForallInd", "ExistsInd", "ForallPred", "ExistsPred",
    "iff", "as_iff", "FormulaError", "ParseError", "ArityError", "ScopeError",
    "NotPrenexable", "Signature", "FragmentInfo",
    "parse", "render", "check_well_formed", "classify", "so_prenex",
    "substitute_pred", "rename_preds", "free_ind_vars", "free_pred_vars",
    "pred_names", "is_sentence", "strip_comments",
]


class FormulaError(ValueError):
    pass


class ParseError(FormulaError):
    def __init__(self, message: str, pos: int | None = None, text: str | None = None):
        self.pos = pos
        if pos is not None and text is not None:
            line = text.count("\n", 0, pos) + 1
            col = pos - (text.rfind("\n", 0, pos) + 1) + 1
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)


class ArityError(FormulaError):
    pass


class ScopeError(FormulaError):
    pass


class NotPrenexable(FormulaError):
    """A second-order quantifier cannot be moved outward without changing meaning."""


# --------------------------------------------------------------------------
# AST

class Formula:
    __slots__ = ()

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class Atom(Formula):
    pred: str
    args: tuple[str, ...] = ()


@dataclass(frozen=True)
class Eq(Formula):
    left: str
    right: str


@dataclass(frozen=True)
class QApp(Formula):
    """Second-order atom ``Q(P1, ..., Pk)``."""
    symbol: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class QBind(Formula):
    """Generalized-quantifier binder ``Q[x1 | phi1; ...; xk | phik]``."""
    symbol: str
    parts: tuple[tuple[tuple[str, ...], Formula], ...]


@dataclass(frozen=True)
class Not(Formula):
    sub: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Imp(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class ForallInd(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class ExistsInd(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class ForallPred(Formula):
    var: str
    arity: int
    body: Formula


@dataclass(frozen=True)
class ExistsPred(Formula):
    var: str
    arity: int
    body: Formula


def iff(a: Formula, b: Formula) -> Formula:
    return And(Imp(a, b), Imp(b, a))


_BINARY = (And, Or, Imp)
_IND_Q = (ForallInd, ExistsInd)
_PRED_Q = (ForallPred, ExistsPred)


def as_iff(f: Formula):
    """``(a, b)`` if ``f`` is the desugared ``a <-> b``, else None."""
    if isinstance(f, And) and isinstance(f.left, Imp) and isinstance(f.right, Imp):
        if f.left.left == f.right.right and f.left.right == f.right.left:
            return f.left.left, f.left.right
    return None


# --------------------------------------------------------------------------
# Printing

def render(f: Formula) -> str:
    """Canonical text of ``f``; ``parse(render(f)) == f``."""
    pair = as_iff(f)
    if pair is not None:
        return f"{_operand(pair[0])} <-> {_operand(pair[1])}"
    if isinstance(f, And):
        return f"{_operand(f.left)} & {_operand(f.right)}"
    if isinstance(f, Or):
        return f"{_operand(f.left)} | {_operand(f.right)}"
    if isinstance(f, Imp):
        return f"{_operand(f.left)} -> {_operand(f.right)}"
    if isinstance(f, Not):
        return "~" + _operand(f.sub)
    if isinstance(f, ForallInd):
        return f"forall {f.var}. {_operand(f.body)}"
    if isinstance(f, ExistsInd):
        return f"exists {f.var}. {_operand(f.body)}"
    if isinstance(f, ForallPred):
        return f"forall {f.var}:{f.arity}. {_operand(f.body)}"
    if isinstance(f, ExistsPred):
        return f"exists {f.var}:{f.arity}. {_operand(f.body)}"
    if isinstance(f, Atom):
        return f"{f.pred}({', '.join(f.args)})" if f.args else f.pred
    if isinstance(f, Eq):
        return f"{f.left} = {f.right}"
    if isinstance(f, QApp):
        return f"{f.symbol}({', '.join(f.args)})"
    if isinstance(f, QBind):
        parts = "; ".join(f"{', '.join(vs)} | {render(body)}" for vs, body in f.parts)
        return f"{f.symbol}[{parts}]"
    raise TypeError(f"not a formula: {f!r}")


def _operand(f: Formula) -> str:
    text = render(f)
    return f"({text})" if isinstance(f, _BINARY) else text


# --------------------------------------------------------------------------
# Parsing

_TOKEN = re.compile(r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<op><->|->|[~&|()\[\],;.:=])
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*'*)
""", re.VERBOSE)

_KEYWORDS = {"forall", "exists"}


def strip_comments(text: str) -> str:
    return "\n".join(line.split("#", 1)[0] for line in text.splitlines())


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


def _is_ind(name: str) -> bool:
    return name[0].islower()


class _Parser:
    def __init__(self, text: str, equality: bool):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.equality = equality

    def peek(self, ahead: int = 0):
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def error(self, message: str, tok=None):
        tok = tok or self.peek()
        return ParseError(message, tok[2], self.text)

    def take(self, value: str | None = None, kind: str | None = None):
        tok = self.peek()
        if value is not None and tok[1] != value:
            found = tok[1] or "end of input"
            raise self.error(f"expected {value!r}, found {found!r}")
        if kind is not None and tok[0] != kind:
            found = tok[1] or "end of input"
            raise self.error(f"expected {kind}, found {found!r}")
        self.i += 1
        return tok

    def at(self, value: str) -> bool:
        tok = self.peek()
        return tok[0] == "op" and tok[1] == value

    def parse(self) -> Formula:
        f = self.formula()
        if self.peek()[0] != "eof":
            raise self.error(f"unexpected {self.peek()[1]!r}")
        return f

    def formula(self) -> Formula:
        f = self.imp()
        while self.at("<->"):
            self.take()
            f = iff(f, self.imp())
        return f

    def imp(self) -> Formula:
        f = self.disj()
        if self.at("->"):
            self.take()
            return Imp(f, self.imp())
        return f

    def disj(self) -> Formula:
        f = self.conj()
        while self.at("|"):
            self.take()
            f = Or(f, self.conj())
        return f

    def conj(self) -> Formula:
        f = self.unary()
        while self.at("&"):
            self.take()
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        kind, value, _ = self.peek()
        if kind == "op" and value == "~":
            self.take()
            return Not(self.unary())
        if kind == "ident" and value in _KEYWORDS:
            return self.quant()
        if kind == "op" and value == "(":
            self.take()
            f = self.formula()
            self.take(")")
            return f
        if kind == "ident":
            return self.atom()
        raise self.error(f"expected a formula, found {value or 'end of input'!r}")

    def quant(self) -> Formula:
        kw = self.take()[1]
        tok = self.take(kind="ident")
        name = tok[1]
        if name in _KEYWORDS:
            raise self.error(f"keyword {name!r} cannot be a variable", tok)
        if _is_ind(name):
            if self.at(":"):
                raise self.error(f"individual variable {name!r} takes no arity", tok)
            self.take(".")
            body = self.unary()
            return (ForallInd if kw == "forall" else ExistsInd)(name, body)
        if not self.at(":"):
            raise self.error(f"predicate variable {name!r} needs an arity annotation ':k'")
        self.take(":")
        arity = int(self.take(kind="num")[1])
        self.take(".")
        body = self.unary()
        return (ForallPred if kw == "forall" else ExistsPred)(name, arity, body)

    def varlist(self) -> tuple[str, ...]:
        paren = self.at("(")
        if paren:
            self.take()
        names = [self.ind_var()]
        while self.at(","):
            self.take()
            names.append(self.ind_var())
        if paren:
            self.take(")")
        return tuple(names)

    def ind_var(self) -> str:
        tok = self.take(kind="ident")
        if not _is_ind(tok[1]) or tok[1] in _KEYWORDS:
            raise self.error(f"expected an individual variable, found {tok[1]!r}", tok)
        return tok[1]

    def atom(self) -> Formula:
        tok = self.take()
        name = tok[1]
        if self.at("["):
            self.take()
            parts = []
            while True:
                vs = self.varlist()
                self.take("|")
                parts.append((vs, self.formula()))
                if self.at(";"):
                    self.take()
                    continue
                self.take("]")
                return QBind(name, tuple(parts))
        if _is_ind(name):
            if self.at("="):
                if not self.equality:
                    raise self.error("equality atoms are disabled (enable the equality flag)")
                self.take()
                return Eq(name, self.ind_var())
            raise ScopeError(f"individual variable {name!r} used in formula position")
        if not self.at("("):
            return Atom(name, ())
        self.take("(")
        args = [self.take(kind="ident")]
        while self.at(","):
            self.take()
            args.append(self.take(kind="ident"))
        self.take(")")
        kinds = {_is_ind(a[1]) for a in args}
        if len(kinds) > 1:
            raise ScopeError(f"{name}(...) mixes individual and predicate arguments")
        names = tuple(a[1] for a in args)
        if kinds == {True}:
            return Atom(name, names)
        return QApp(name, names)


def parse(text: str, *, equality: bool = False,
          qtypes: Optional[Mapping[str, tuple[int, ...]]] = None) -> Formula:
    """Parse ``text`` and check it is well formed.

    ``qtypes`` optionally declares quantifier-symbol types to check QApp and
    QBind uses against.
    """
    f = _Parser(text, equality).parse()
    check_well_formed(f, qtypes)
    return f


# --------------------------------------------------------------------------
# Well-formedness

@dataclass
class Signature:
    pred_arities: dict[str, Optional[int]] = field(default_factory=dict)
    qtypes: dict[str, tuple[int, ...]] = field(default_factory=dict)


def check_well_formed(f: Formula, qtypes: Optional[Mapping[str, tuple[int, ...]]] = None) -> Signature:
    """Check arity consistency and scoping; return the inferred signature.

    Predicate variables keep a single arity across the whole formula.  The
    arity of a predicate variable used only as a QApp argument of a symbol
    with unknown type is ``None``.
    """
    sig = Signature(qtypes=dict(qtypes or {}))
    qapp_uses: list[QApp] = []
    qbind_lens: dict[str, tuple[int, ...]] = {}

    def set_arity(name: str, arity: int):
        old = sig.pred_arities.get(name)
        if old is not None and old != arity:
            raise ArityError(f"predicate variable {name} used with arities {old} and {arity}")
        sig.pred_arities[name] = arity

    def walk(g: Formula, bound_ind: frozenset):
        if isinstance(g, Atom):
            set_arity(g.pred, len(g.args))
        elif isinstance(g, Eq):
            pass
        elif isinstance(g, QApp):
            if not g.args:
                raise ArityError(f"{g.symbol} needs at least one argument")
            qapp_uses.append(g)
            for a in g.args:
                sig.pred_arities.setdefault(a, None)
        elif isinstance(g, QBind):
            lens = tuple(len(vs) for vs, _ in g.parts)
            old = qbind_lens.get(g.symbol)
            if old is not None and old != lens:
                raise ArityError(f"{g.symbol} bound with tuple lengths {old} and {lens}")
            qbind_lens[g.symbol] = lens
            for vs, body in g.parts:
                if len(set(vs)) != len(vs):
                    raise ScopeError(f"repeated variable in {g.symbol} binder tuple {vs}")
                walk(body, bound_ind | set(vs))
        elif isinstance(g, Not):
            walk(g.sub, bound_ind)
        elif isinstance(g, _BINARY):
            walk(g.left, bound_ind)
            walk(g.right, bound_ind)
        elif isinstance(g, _IND_Q):
            walk(g.body, bound_ind | {g.var})
        elif isinstance(g, _PRED_Q):
            if g.arity < 0:
                raise ArityError(f"negative arity for {g.var}")
            set_arity(g.var, g.arity)
            walk(g.body, bound_ind)
        else:
            raise TypeError(f"not a formula: {g!r}")

    walk(f, frozenset())

    for sym, lens in qbind_lens.items():
        if any(n < 1 for n in lens):
            raise ArityError(f"{sym} binder tuples must be nonempty")
        declared = sig.qtypes.get(sym)
        if declared is not None and tuple(declared) != lens:
            raise ArityError(f"{sym} has type {tuple(declared)} but binds tuples of lengths {lens}")
        sig.qtypes[sym] = lens

    counts: dict[str, int] = {}
    for use in qapp_uses:
        if counts.setdefault(use.symbol, len(use.args)) != len(use.args):
            raise ArityError(f"{use.symbol} applied to different numbers of arguments")
    # Infer QApp types from the arities of their arguments, then propagate back.
    for use in qapp_uses:
        if use.symbol in sig.pred_arities:
            raise ScopeError(f"{use.symbol} is used both as a quantifier symbol and a predicate variable")
        declared = sig.qtypes.get(use.symbol)
        if declared is not None and len(declared) != len(use.args):
            raise ArityError(f"{use.symbol} has {len(declared)} slots, applied to {len(use.args)}")
        slots = [sig.pred_arities.get(a) for a in use.args]
        if declared is None and all(s is not None for s in slots):
            sig.qtypes[use.symbol] = tuple(slots)  # type: ignore[arg-type]
    for use in qapp_uses:
        declared = sig.qtypes.get(use.symbol)
        if declared is None:
            continue
        if len(declared) != len(use.args):
            raise ArityError(f"{use.symbol} applied with inconsistent numbers of arguments")
        for a, n in zip(use.args, declared):
            set_arity(a, n)
    for sym in qbind_lens:
        if sym in sig.pred_arities:
            raise ScopeError(f"{sym} is used both as a quantifier symbol and a predicate variable")
    return sig


# --------------------------------------------------------------------------
# Variables

def free_ind_vars(f: Formula) -> frozenset[str]:
    if isinstance(f, Atom):
        return frozenset(f.args)
    if isinstance(f, Eq):
        return frozenset((f.left, f.right))
    if isinstance(f, QApp):
        return frozenset()
    if isinstance(f, QBind):
        out: set[str] = set()
        for vs, body in f.parts:
            out |= free_ind_vars(body) - set(vs)
        return frozenset(out)
    if isinstance(f, Not):
        return free_ind_vars(f.sub)
    if isinstance(f, _BINARY):
        return free_ind_vars(f.left) | free_ind_vars(f.right)
    if isinstance(f, _IND_Q):
        return free_ind_vars(f.body) - {f.var}
    if isinstance(f, _PRED_Q):
        return free_ind_vars(f.body)
    raise TypeError(f"not a formula: {f!r}")


def free_pred_vars(f: Formula) -> frozenset[str]:
    if isinstance(f, Atom):
        return frozenset((f.pred,))
    if isinstance(f, Eq):
        return frozenset()
    if isinstance(f, QApp):
        return frozenset(f.args)
    if isinstance(f, QBind):
        out: set[str] = set()
        for _, body in f.parts:
            out |= free_pred_vars(body)
        return frozenset(out)
    if isinstance(f, Not):
        return free_pred_vars(f.sub)
    if isinstance(f, _BINARY):
        return free_pred_vars(f.left) | free_pred_vars(f.right)
    if isinstance(f, _IND_Q):
        return free_pred_vars(f.body)
    if isinstance(f, _PRED_Q):
        return free_pred_vars(f.body) - {f.var}
    raise TypeError(f"not a formula: {f!r}")


def is_sentence(f: Formula) -> bool:
    return not free_ind_vars(f) and not free_pred_vars(f)


def _subformulas(f: Formula) -> Iterator[Formula]:
    yield f
    if isinstance(f, QBind):
        for _, body in f.parts:
            yield from _subformulas(body)
    elif isinstance(f, Not):
        yield from _subformulas(f.sub)
    elif isinstance(f, _BINARY):
        yield from _subformulas(f.left)
        yield from _subformulas(f.right)
    elif isinstance(f, _IND_Q + _PRED_Q):
        yield from _subformulas(f.body)


def pred_names(f: Formula) -> set[str]:
    """Every predicate-variable and quantifier-symbol name occurring in ``f``."""
    out: set[str] = set()
    for g in _subformulas(f):
        if isinstance(g, Atom):
            out.add(g.pred)
        elif isinstance(g, QApp):
            out.add(g.symbol)
            out.update(g.args)
        elif isinstance(g, QBind):
            out.add(g.symbol)
        elif isinstance(g, _PRED_Q):
            out.add(g.var)
    return out


def _fresh(base: str, used: set[str]) -> str:
    name = base + "'"
    while name in used:
        name += "'"
    used.add(name)
    return name


# --------------------------------------------------------------------------
# Classification

@dataclass(frozen=True)
class FragmentInfo:
    fragment: str
    has_polyadic_so_vars: bool
    is_so_prenex: bool
    so_prefix: tuple[tuple[str, str], ...]
    pred_arities: Mapping[str, Optional[int]] = field(default_factory=dict, compare=False)


def classify(f: Formula) -> FragmentInfo:
    """Least fragment (FO, L(Q), L2, L2(Q)) containing ``f`` plus prefix data."""
    sig = check_well_formed(f)
    nodes = list(_subformulas(f))
    second_order = any(isinstance(g, _PRED_Q + (QApp,)) for g in nodes)
    has_q = any(isinstance(g, (QApp, QBind)) for g in nodes)
    fragment = {(False, False): "FO", (False, True): "L(Q)",
                (True, False): "L2", (True, True): "L2(Q)"}[(second_order, has_q)]
    polyadic = any(a is not None and a >= 2 for a in sig.pred_arities.values())

    prefix = []
    g = f
    while isinstance(g, _PRED_Q):
        prefix.append(("forall" if isinstance(g, ForallPred) else "exists", g.var))
        g = g.body
    prenex = not any(isinstance(h, _PRED_Q) for h in _subformulas(g))
    return FragmentInfo(fragment, polyadic, prenex, tuple(prefix), sig.pred_arities)


# --------------------------------------------------------------------------
# Substitution

def rename_preds(f: Formula, mapping: Mapping[str, str]) -> Formula:
    """Rename predicate variables everywhere (free and bound), without capture checks."""
    def r(n: str) -> str:
        return mapping.get(n, n)

    def go(g: Formula) -> Formula:
        if isinstance(g, Atom):
            return Atom(r(g.pred), g.args)
        if isinstance(g, Eq):
            return g
        if isinstance(g, QApp):
            return QApp(g.symbol, tuple(r(a) for a in g.args))
        if isinstance(g, QBind):
            return QBind(g.symbol, tuple((vs, go(b)) for vs, b in g.parts))
        if isinstance(g, Not):
            return Not(go(g.sub))
        if isinstance(g, _BINARY):
            return type(g)(go(g.left), go(g.right))
        if isinstance(g, _IND_Q):
            return type(g)(g.var, go(g.body))
        if isinstance(g, _PRED_Q):
            return type(g)(r(g.var), g.arity, go(g.body))
        raise TypeError(f"not a formula: {g!r}")

    return go(f)


def substitute_pred(f: Formula, old: str, new: str) -> Formula:
    """Replace free occurrences of predicate variable ``old`` by ``new``.

    Binders of ``new`` that would capture a substituted occurrence are renamed.
    """
    if old == new:
        return f
    sig = check_well_formed(f)
    a_old, a_new = sig.pred_arities.get(old), sig.pred_arities.get(new)
    if a_old is not None and a_new is not None and a_old != a_new:
        raise ArityError(f"cannot substitute {old}:{a_old} by {new}:{a_new}")
    used = pred_names(f) | {new}

    def go(g: Formula) -> Formula:
        if isinstance(g, Atom):
            return Atom(new, g.args) if g.pred == old else g
        if isinstance(g, Eq):
            return g
        if isinstance(g, QApp):
            return QApp(g.symbol, tuple(new if a == old else a for a in g.args))
        if isinstance(g, QBind):
            return QBind(g.symbol, tuple((vs, go(b)) for vs, b in g.parts))
        if isinstance(g, Not):
            return Not(go(g.sub))
        if isinstance(g, _BINARY):
            return type(g)(go(g.left), go(g.right))
        if isinstance(g, _IND_Q):
            return type(g)(g.var, go(g.body))
        if isinstance(g, _PRED_Q):
            if g.var == old or old not in free_pred_vars(g.body):
                return g
            if g.var == new:
                fresh = _fresh(new, used)
                body = rename_free_pred(g.body, new, fresh)
                return type(g)(fresh, g.arity, go(body))
            return type(g)(g.var, g.arity, go(g.body))
        raise TypeError(f"not a formula: {g!r}")

    return go(f)


def rename_free_pred(f: Formula, old: str, new: str) -> Formula:
    """Rename free occurrences of ``old`` to a name ``new`` not occurring in ``f``."""
    def go(g: Formula) -> Formula:
        if isinstance(g, Atom):
            return Atom(new, g.args) if g.pred == old else g
        if isinstance(g, Eq):
            return g
        if isinstance(g, QApp):
            return QApp(g.symbol, tuple(new if a == old else a for a in g.args))
        if isinstance(g, QBind):
            return QBind(g.symbol, tuple((vs, go(b)) for vs, b in g.parts))
        if isinstance(g, Not):
            return Not(go(g.sub))
        if isinstance(g, _BINARY):
            return type(g)(go(g.left), go(g.right))
        if isinstance(g, _IND_Q):
            return type(g)(g.var, go(g.body))
        if isinstance(g, _PRED_Q):
            if g.var == old:
                return g
            return type(g)(g.var, g.arity, go(g.body))
        raise TypeError(f"not a formula: {g!r}")

    return go(f)


# --------------------------------------------------------------------------
# Second-order prenexing
#
# Families Pred_k may be empty, so two of the classical pulls are not
# equivalences: (forall P. A) & B -> forall P. (A & B) needs B true whenever
# Pred_k is empty, and (exists P. A) | B -> exists P. (A | B) needs B false
# then.  Both are accepted when arity k is known nonempty from an enclosing
# second-order binder, or when B syntactically forces the needed value.

_Prefix = list[tuple[str, str, int]]


def _forced(f: Formula, k: int, value: bool) -> bool:
    """True if ``f`` has truth value ``value`` whenever Pred_k is empty."""
    if isinstance(f, ForallPred):
        if f.arity == k:
            return value
        return value and _forced(f.body, k, True)
    if isinstance(f, ExistsPred):
        if f.arity == k:
            return not value
        return (not value) and _forced(f.body, k, False)
    if isinstance(f, Not):
        return _forced(f.sub, k, not value)
    if isinstance(f, And):
        if value:
            return _forced(f.left, k, True) and _forced(f.right, k, True)
        return _forced(f.left, k, False) or _forced(f.right, k, False)
    if isinstance(f, Or):
        if value:
            return _forced(f.left, k, True) or _forced(f.right, k, True)
        return _forced(f.left, k, False) and _forced(f.right, k, False)
    if isinstance(f, Imp):
        if value:
            return _forced(f.left, k, False) or _forced(f.right, k, True)
        return _forced(f.left, k, True) and _forced(f.right, k, False)
    if isinstance(f, _IND_Q):
        return _forced(f.body, k, value)
    return False


def _wrap(prefix: _Prefix, matrix: Formula) -> Formula:
    for kind, var, arity in reversed(prefix):
        matrix = (ForallPred if kind == "forall" else ExistsPred)(var, arity, matrix)
    return matrix


def _dual(prefix: _Prefix) -> _Prefix:
    return [("exists" if k == "forall" else "forall", v, a) for k, v, a in prefix]


def _safe_pull(kind: str, arity: int, op: str, other: Formula, nonempty: frozenset) -> bool:
    if arity in nonempty:
        return True
    if kind == "forall" and op == "and":
        return _forced(other, arity, True)
    if kind == "exists" and op == "or":
        return _forced(other, arity, False)
    return True


def _prenex(f: Formula, nonempty: frozenset, used: set[str]) -> tuple[_Prefix, Formula]:
    if isinstance(f, (Atom, Eq, QApp)):
        return [], f
    if isinstance(f, QBind):
        for _, body in f.parts:
            if any(isinstance(g, _PRED_Q) for g in _subformulas(body)):
                raise NotPrenexable(f"second-order quantifier inside the {f.symbol} binder")
        return [], f
    if isinstance(f, Not):
        p, m = _prenex(f.sub, nonempty, used)
        return _dual(p), Not(m)
    if isinstance(f, _PRED_Q):
        kind = "forall" if isinstance(f, ForallPred) else "exists"
        p, m = _prenex(f.body, nonempty | {f.arity}, used)
        return [(kind, f.var, f.arity)] + p, m
    if isinstance(f, _IND_Q):
        p, m = _prenex(f.body, nonempty, used)
        ind_kind = "forall" if isinstance(f, ForallInd) else "exists"
        if p and any(k != ind_kind for k, _, _ in p) and f.var in free_ind_vars(m):
            raise NotPrenexable(
                f"{'forall' if ind_kind == 'forall' else 'exists'} {f.var} cannot be swapped "
                f"with the second-order quantifiers beneath it")
        return p, type(f)(f.var, m)
    if isinstance(f, _BINARY):
        return _prenex_binary(f, nonempty, used)
    raise TypeError(f"not a formula: {f!r}")


def _prenex_binary(f, nonempty: frozenset, used: set[str]) -> tuple[_Prefix, Formula]:
    op = "and" if isinstance(f, And) else "or"
    pa, ma = _prenex(f.left, nonempty, used)
    pb, mb = _prenex(f.right, nonempty, used)

    # Capture avoidance: prefix variables of one side must not occur free in
    # the other, and the two prefixes must bind distinct names.
    free_b = free_pred_vars(_wrap(pb, mb))
    ren_a = {}
    for _, v, _ in pa:
        if v in free_b:
            ren_a[v] = _fresh(v, used)
    if ren_a:
        pa = [(k, ren_a.get(v, v), a) for k, v, a in pa]
        ma = rename_preds(ma, ren_a)
    taken = {v for _, v, _ in pa} | free_pred_vars(_wrap(pa, ma))
    ren_b = {}
    for _, v, _ in pb:
        if v in taken:
            ren_b[v] = _fresh(v, used)
    if ren_b:
        pb = [(k, ren_b.get(v, v), a) for k, v, a in pb]
        mb = rename_preds(mb, ren_b)

    if isinstance(f, Imp):
        signed_a = _dual(pa)
        left_full = Not(_wrap(pa, ma))
        left_matrix = Not(ma)
    else:
        signed_a = pa
        left_full = _wrap(pa, ma)
        left_matrix = ma
    right_full = _wrap(pb, mb)
    matrix = type(f)(ma, mb)

    def attempt(first, first_other, second, second_other):
        ctx = nonempty
        for kind, _, arity in first:
            if not _safe_pull(kind, arity, op if not isinstance(f, Imp) else "or", first_other, ctx):
                return None
            ctx = ctx | {arity}
        for kind, _, arity in second:
            if not _safe_pull(kind, arity, op if not isinstance(f, Imp) else "or", second_other, ctx):
                return None
            ctx = ctx | {arity}
        return first + second

    # Pulling the left prefix first leaves the whole right operand as the
    # side formula, and vice versa.
    prefix = attempt(signed_a, right_full, pb, left_matrix)
    if prefix is None:
        prefix = attempt(pb, left_full, signed_a, mb)
    if prefix is None:
        raise NotPrenexable(
            "pulling a second-order quantifier out of a connective is not an "
            "equivalence when its predicate family may be empty")
    return prefix, matrix


def so_prenex(f: Formula) -> Formula:
    """Move every predicate-variable quantifier into an outermost prefix.

    Only equivalence-preserving steps are used, with Henkin families allowed
    to be empty.  Raises :class:`NotPrenexable` otherwise.
    """
    check_well_formed(f)
    used = pred_names(f)
    prefix, matrix = _prenex(f, frozenset(), used)
    return _wrap(prefix, matrix)
