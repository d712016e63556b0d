"""Concrete syntax for formulas and terms.

Grammar (fixed by this toolkit):

* formulas: ``->`` right-associative; ``/\\`` left-associative and tighter
  than ``->``; ``forall x.`` extends maximally to the right; atoms are
  capitalized identifiers with optional argument lists ``X(t1,...)``;
  ``top`` and ``bot`` are constants.
* terms: ``lam a. M`` / ``lam a:A. M``, ``mu a. M`` / ``mu a:A. M``,
  ``[a] M``, ``Lam x. M``, ``M{t}``, ``<M,N>``, ``p1 M``, ``p2 M``, ``*``,
  application left-associative in the style ``(M) N1 N2``; a binder as the
  last argument needs no parentheses.
* first-order terms: lowercase identifiers are variables unless applied;
  constants must be written ``c()``.
* ``#`` starts a line comment.

Identifiers matching ``o0, o1, ...`` are reserved for the move enumeration
and rejected in user input (they appear only in plays).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .syntax import (
    And,
    App,
    Atom,
    Bot,
    FoBound,
    FoLam,
    FoTerm,
    FoVar,
    Fn,
    Formula,
    Forall,
    Imp,
    Inst,
    Lam,
    LmTerm,
    Mu,
    Named,
    Pair,
    Proj,
    Signature,
    Star,
    Top,
    Var,
    close_fo,
    close_lam,
    close_mu,
    formula_close,
)

KEYWORDS = {"forall", "top", "bot", "lam", "mu", "Lam", "p1", "p2"}
OVAR_RE = re.compile(r"^o[0-9]+$")

TOKEN_RE = re.compile(
    r"""(?P<ws>\s+|\#[^\n]*)
      | (?P<arrow>->)
      | (?P<wedge>/\\)
      | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
      | (?P<punct>[().,:{}<>\[\]*])
    """,
    re.VERBOSE,
)


class ParseError(ValueError):
    def __init__(self, msg: str, pos: int, text: str):
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"{msg} at line {line}, column {col}")
        self.pos = pos


@dataclass
class Token:
    kind: str
    value: str
    pos: int


def _lex(text: str) -> list[Token]:
    toks: list[Token] = []
    i = 0
    while i < len(text):
        m = TOKEN_RE.match(text, i)
        if not m:
            raise ParseError(f"unexpected character {text[i]!r}", i, text)
        kind = m.lastgroup or ""
        if kind != "ws":
            value = m.group()
            if kind == "punct":
                kind = value
            elif kind == "ident" and value in KEYWORDS:
                kind = value
            toks.append(Token(kind, value, i))
        i = m.end()
    toks.append(Token("eof", "", len(text)))
    return toks


class _P:
    def __init__(self, text: str, sig: Signature | None, allow_ovars: bool = False):
        self.text = text
        self.toks = _lex(text)
        self.i = 0
        self.sig = sig
        self.allow_ovars = allow_ovars

    def peek(self) -> Token:
        return self.toks[self.i]

    def next(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind: str) -> Token:
        t = self.peek()
        if t.kind != kind:
            raise ParseError(f"expected {kind!r}, found {t.value or 'end of input'!r}", t.pos, self.text)
        return self.next()

    def err(self, msg: str) -> ParseError:
        return ParseError(msg, self.peek().pos, self.text)

    ### first-order terms
    # fo_env maps bound first-order names to their binder depth at entry.

    def fo_term(self, fo_env: dict[str, int], depth: int) -> FoTerm:
        t = self.expect("ident")
        name = t.value
        if self.peek().kind == "(":
            self.next()
            args: list[FoTerm] = []
            if self.peek().kind != ")":
                args.append(self.fo_term(fo_env, depth))
                while self.peek().kind == ",":
                    self.next()
                    args.append(self.fo_term(fo_env, depth))
            self.expect(")")
            if self.sig is not None:
                k = self.sig.fn_arity(name)
                if k is None:
                    raise ParseError(f"unknown function symbol {name!r}", t.pos, self.text)
                if k != len(args):
                    raise ParseError(
                        f"function {name!r} expects {k} arguments, got {len(args)}", t.pos, self.text
                    )
            return Fn(name, tuple(args))
        if name in fo_env:
            return FoBound(depth - 1 - fo_env[name])
        if OVAR_RE.match(name):
            if not self.allow_ovars:
                raise ParseError(f"{name!r} is a reserved move variable", t.pos, self.text)
            return FoVar("O", name)
        if name[0].isupper():
            raise ParseError(f"capitalized {name!r} cannot be a first-order variable", t.pos, self.text)
        return FoVar("P", name)

    ### formulas

    def formula(self, fo_env: dict[str, int], depth: int) -> Formula:
        left = self.conj(fo_env, depth)
        if self.peek().kind == "arrow":
            self.next()
            return Imp(left, self.formula(fo_env, depth))
        return left

    def conj(self, fo_env: dict[str, int], depth: int) -> Formula:
        left = self.formula_atom(fo_env, depth)
        while self.peek().kind == "wedge":
            self.next()
            left = And(left, self.formula_atom(fo_env, depth))
        return left

    def formula_atom(self, fo_env: dict[str, int], depth: int) -> Formula:
        t = self.peek()
        if t.kind == "top":
            self.next()
            return Top()
        if t.kind == "bot":
            self.next()
            return Bot()
        if t.kind == "forall":
            self.next()
            v = self.expect("ident").value
            if OVAR_RE.match(v):
                raise ParseError(f"{v!r} is reserved", t.pos, self.text)
            self.expect(".")
            body = self.formula({**fo_env, v: depth}, depth + 1)
            return Forall(v, body)
        if t.kind == "(":
            self.next()
            A = self.formula(fo_env, depth)
            self.expect(")")
            return A
        if t.kind == "ident":
            if not t.value[0].isupper():
                raise self.err(f"relation names start uppercase, found {t.value!r}")
            self.next()
            args: list[FoTerm] = []
            if self.peek().kind == "(":
                self.next()
                args.append(self.fo_term(fo_env, depth))
                while self.peek().kind == ",":
                    self.next()
                    args.append(self.fo_term(fo_env, depth))
                self.expect(")")
            if self.sig is not None:
                k = self.sig.rel_arity(t.value)
                if k is None:
                    raise ParseError(f"unknown relation symbol {t.value!r}", t.pos, self.text)
                if k != len(args):
                    raise ParseError(
                        f"relation {t.value!r} expects {k} arguments, got {len(args)}", t.pos, self.text
                    )
            return Atom(t.value, tuple(args))
        raise self.err("expected a formula")

    ### terms
    # lam_env / mu_env map bound names to binder depth; fo_env as above.

    def term(self, lam_env, mu_env, fo_env, dl, dm, df) -> LmTerm:
        t = self.peek()
        if t.kind == "lam":
            self.next()
            v = self.expect("ident").value
            ann = None
            if self.peek().kind == ":":
                self.next()
                ann = self.formula(fo_env, df)
            self.expect(".")
            body = self.term({**lam_env, v: dl}, mu_env, fo_env, dl + 1, dm, df)
            return Lam(v, ann, body)
        if t.kind == "mu":
            self.next()
            v = self.expect("ident").value
            ann = None
            if self.peek().kind == ":":
                self.next()
                ann = self.formula(fo_env, df)
            self.expect(".")
            body = self.term(lam_env, {**mu_env, v: dm}, fo_env, dl, dm + 1, df)
            return Mu(v, ann, body)
        if t.kind == "Lam":
            self.next()
            v = self.expect("ident").value
            if OVAR_RE.match(v):
                raise ParseError(f"{v!r} is reserved; Lam binders are renamed internally", t.pos, self.text)
            self.expect(".")
            body = self.term(lam_env, mu_env, {**fo_env, v: df}, dl, dm, df + 1)
            return FoLam(v, body)
        if t.kind == "[":
            self.next()
            v = self.expect("ident").value
            self.expect("]")
            body = self.term(lam_env, mu_env, fo_env, dl, dm, df)
            if v in mu_env:
                return Named(dm - 1 - mu_env[v], body)
            return Named(v, body)
        return self.app_seq(lam_env, mu_env, fo_env, dl, dm, df)

    def app_seq(self, lam_env, mu_env, fo_env, dl, dm, df) -> LmTerm:
        head = self.term_atom(lam_env, mu_env, fo_env, dl, dm, df)
        while True:
            k = self.peek().kind
            if k == "{":
                self.next()
                arg = self.fo_term(fo_env, df)
                self.expect("}")
                head = Inst(head, arg)
            elif k in ("lam", "mu", "Lam", "["):
                head = App(head, self.term(lam_env, mu_env, fo_env, dl, dm, df))
                return head
            elif k in ("ident", "(", "*", "<", "p1", "p2"):
                head = App(head, self.term_atom(lam_env, mu_env, fo_env, dl, dm, df))
            else:
                return head

    def term_atom(self, lam_env, mu_env, fo_env, dl, dm, df) -> LmTerm:
        t = self.peek()
        if t.kind == "(":
            self.next()
            M = self.term(lam_env, mu_env, fo_env, dl, dm, df)
            self.expect(")")
            return M
        if t.kind == "*":
            self.next()
            return Star()
        if t.kind == "<":
            self.next()
            l = self.term(lam_env, mu_env, fo_env, dl, dm, df)
            self.expect(",")
            r = self.term(lam_env, mu_env, fo_env, dl, dm, df)
            self.expect(">")
            return Pair(l, r)
        if t.kind in ("p1", "p2"):
            self.next()
            body = self.term_atom(lam_env, mu_env, fo_env, dl, dm, df)
            return Proj(1 if t.kind == "p1" else 2, body)
        if t.kind == "ident":
            self.next()
            v = t.value
            if v in lam_env:
                return Var(dl - 1 - lam_env[v])
            if OVAR_RE.match(v):
                raise ParseError(f"{v!r} is reserved", t.pos, self.text)
            return Var(v)
        raise self.err("expected a term")


def parse_formula(text: str, sig: Signature | None = None) -> Formula:
    p = _P(text, sig)
    A = p.formula({}, 0)
    p.expect("eof")
    return A


def parse_term(text: str, sig: Signature | None = None) -> LmTerm:
    p = _P(text, sig)
    M = p.term({}, {}, {}, 0, 0, 0)
    p.expect("eof")
    return M


def parse_fo_term(text: str, sig: Signature | None = None, allow_ovars: bool = True) -> FoTerm:
    p = _P(text, sig, allow_ovars=allow_ovars)
    t = p.fo_term({}, 0)
    p.expect("eof")
    return t


def strip_comments(text: str) -> str:
    return "\n".join(line.split("#", 1)[0] for line in text.splitlines())


def parse_formula_file(text: str, sig: Signature | None = None) -> Formula:
    return parse_formula(strip_comments(text), sig)


def parse_term_file(text: str, sig: Signature | None = None) -> LmTerm:
    return parse_term(strip_comments(text), sig)


### printing


def pp_fo_term(t: FoTerm, fo_names: list[str] | None = None) -> str:
    names = fo_names or []
    match t:
        case FoBound(k):
            return names[-1 - k] if k < len(names) else f"?b{k}"
        case FoVar(_, name):
            return name
        case Fn(name, args):
            if not args:
                return f"{name}()"
            return f"{name}({', '.join(pp_fo_term(a, names) for a in args)})"
    raise TypeError(t)


def _fresh_name(hint: str, used: set[str]) -> str:
    base = hint if hint and not OVAR_RE.match(hint) else "x"
    if base not in used:
        return base
    n = 1
    while f"{base}{n}" in used:
        n += 1
    return f"{base}{n}"


def pp_formula(A: Formula, fo_names: list[str] | None = None, used: set[str] | None = None) -> str:
    names = fo_names or []
    used = used if used is not None else set(names)

    def go(B: Formula, prec: int, names: list[str]) -> str:
        match B:
            case Top():
                return "top"
            case Bot():
                return "bot"
            case Atom(rel, args):
                if not args:
                    return rel
                return f"{rel}({', '.join(pp_fo_term(a, names) for a in args)})"
            case Imp(l, r):
                s = f"{go(l, 1, names)} -> {go(r, 0, names)}"
                return f"({s})" if prec > 0 else s
            case And(l, r):
                s = f"{go(l, 1, names)} /\\ {go(r, 2, names)}"
                return f"({s})" if prec > 1 else s
            case Forall(h, b):
                v = _fresh_name(h or "x", used)
                used.add(v)
                s = f"forall {v}. {go(b, 0, names + [v])}"
                return f"({s})" if prec > 0 else s
        raise TypeError(B)

    return go(A, 0, names)


def _dangles(N: LmTerm) -> bool:
    """Printed form ends in an open binder body, extending maximally right."""
    if isinstance(N, App):
        N = N.arg  # other argument shapes get parenthesized or self-delimit
    return isinstance(N, (Lam, Mu, FoLam, Named))


def pp_term(M: LmTerm, annotations: bool = True) -> str:
    used: set[str] = set()

    def atomic(s: str) -> bool:
        return bool(re.match(r"^[A-Za-z_][A-Za-z0-9_']*$", s)) or s in ("*",) or (
            s.startswith("<") and s.endswith(">")
        )

    def go(N: LmTerm, lam_names: list[str], mu_names: list[str], fo_names: list[str]) -> str:
        match N:
            case Var(ref):
                if isinstance(ref, int):
                    return lam_names[-1 - ref] if ref < len(lam_names) else f"?v{ref}"
                return ref
            case Star():
                return "*"
            case Lam(h, ann, b):
                v = _fresh_name(h or "a", used)
                used.add(v)
                a = f": {pp_formula(ann, fo_names, used)}" if ann is not None and annotations else ""
                return f"lam {v}{a}. {go(b, lam_names + [v], mu_names, fo_names)}"
            case Mu(h, ann, b):
                v = _fresh_name(h or "al", used)
                used.add(v)
                a = f": {pp_formula(ann, fo_names, used)}" if ann is not None and annotations else ""
                return f"mu {v}{a}. {go(b, lam_names, mu_names + [v], fo_names)}"
            case FoLam(h, b):
                v = _fresh_name(h or "x", used)
                used.add(v)
                return f"Lam {v}. {go(b, lam_names, mu_names, fo_names + [v])}"
            case Named(ref, b):
                nm = mu_names[-1 - ref] if isinstance(ref, int) and ref < len(mu_names) else str(ref)
                return f"[{nm}] {go(b, lam_names, mu_names, fo_names)}"
            case Pair(l, r):
                return f"<{go(l, lam_names, mu_names, fo_names)}, {go(r, lam_names, mu_names, fo_names)}>"
            case Proj(i, b):
                s = go(b, lam_names, mu_names, fo_names)
                if not atomic(s):
                    s = f"({s})"
                return f"p{i} {s}"
            case Inst(b, t):
                s = go(b, lam_names, mu_names, fo_names)
                if not atomic(s) and not isinstance(b, (Proj, Inst)):
                    s = f"({s})"
                return f"{s}{{{pp_fo_term(t, fo_names)}}}"
            case App(f, a):
                fs = go(f, lam_names, mu_names, fo_names)
                if not isinstance(f, App) or _dangles(f):
                    fs = f"({fs})"
                ars = go(a, lam_names, mu_names, fo_names)
                if isinstance(a, (Lam, Mu, FoLam, Named)):
                    return f"{fs} {ars}"
                if not atomic(ars) and not isinstance(a, (Proj, Inst)):
                    ars = f"({ars})"
                return f"{fs} {ars}"
        raise TypeError(N)

    return go(M, [], [], [])
