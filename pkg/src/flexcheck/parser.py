"""Recursive descent parser for ``.flx`` files.

Parsing happens in two passes. The first builds declarations and formulas with
unresolved :class:`~flexcheck.syntax.Name` leaves; the second resolves every
name against the single global namespace, validates the declarations and
expands macros.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

from .syntax import (
    DEONTIC_OPS,
    Act,
    ActionDecl,
    And,
    Bottom,
    Compare,
    CounterDecl,
    Done,
    DuplicateError,
    Eventually,
    EventuallyIn,
    ExceptionTargetError,
    Form,
    Happening,
    Implies,
    Inner,
    IntervalDecl,
    IsOpen,
    LexError,
    MacroRef,
    Name,
    NestingError,
    Not,
    Or,
    Output,
    ParseError,
    Query,
    RangeError,
    Rule,
    SpecDocument,
    SpecError,
    TemporalActionsDecl,
    Top,
    UndeclaredError,
    is_propositional,
    rebuild,
    walk,
)

DEFAULT_COUNTER_BOUND = 8

KEYWORDS = frozenset(
    """action interval counter temporal macro incompatible rule query
    true false happening done delimited by actions output values occurs only
    in inside scope requires that repeatedly increases decreases resets with
    bound exception of O F OE P""".split()
)

_UNICODE = {"¬": "!", "∧": "&", "∨": "|", "→": "->", "◇": "<>", "⊤": "true", "⊥": "false"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<diamond_in>(?:<>|◇)_(?P<dname>[A-Za-z_][A-Za-z0-9_]*))
  | (?P<int>[0-9]+(?![A-Za-z_]))
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<plusinf>\+inf\b)
  | (?P<sym>->|<>|<=|>=|[()\[\]{},:;.=<>!&|\-?]|[¬∧∨→◇⊤⊥])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident, int, sym, diamond_in, eof
    value: str
    line: int
    column: int
    start: int
    end: int


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise LexError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "dname":
            kind = "diamond_in"
        text = m.group()
        col = pos - line_start + 1
        if kind == "diamond_in":
            tokens.append(Token("diamond_in", m.group("dname"), line, col, pos, m.end()))
        elif kind == "int":
            tokens.append(Token("int", text, line, col, pos, m.end()))
        elif kind == "ident":
            tokens.append(Token("ident", text, line, col, pos, m.end()))
        elif kind == "plusinf":
            tokens.append(Token("sym", "+inf", line, col, pos, m.end()))
        elif kind == "sym":
            text = _UNICODE.get(text, text)
            k = "ident" if text in ("true", "false") else "sym"
            tokens.append(Token(k, text, line, col, pos, m.end()))
        newlines = text.count("\n") if kind in ("ws", "comment") else 0
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1, pos, pos))
    return tokens


@dataclass
class _Raw:
    """Unresolved document plus the source position of every declared name."""

    actions: dict
    intervals: dict
    counters: dict
    temporal: list
    macros: dict
    incompatibilities: list
    rules: list
    queries: list
    positions: dict
    warnings: list


class Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = tokenize(source)
        self.pos = 0

    # token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.pos += 1
        return t

    def error(self, message: str, tok: Token | None = None, cls=ParseError):
        tok = tok or self.tok
        return cls(message, tok.line, tok.column)

    def at(self, value: str) -> bool:
        return self.tok.kind in ("ident", "sym") and self.tok.value == value

    def accept(self, value: str) -> bool:
        if self.at(value):
            self.advance()
            return True
        return False

    def expect(self, value: str) -> Token:
        if not self.at(value):
            found = self.tok.value or "end of input"
            raise self.error(f"expected {value!r}, found {found!r}")
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        t = self.tok
        if t.kind != "ident" or t.value in KEYWORDS:
            found = t.value or "end of input"
            raise self.error(f"expected {what}, found {found!r}")
        return self.advance()

    def ident_list(self) -> list[Token]:
        names = [self.ident("action name")]
        while self.accept(","):
            names.append(self.ident("action name"))
        return names

    # document

    def parse_document(self) -> _Raw:
        raw = _Raw({}, {}, {}, [], {}, [], [], [], {}, [])
        while self.tok.kind != "eof":
            if self.accept(";"):
                continue
            t = self.tok
            if t.kind != "ident":
                raise self.error(f"expected a declaration, found {t.value!r}")
            handler = {
                "action": self.parse_action,
                "interval": self.parse_interval,
                "counter": self.parse_counter,
                "temporal": self.parse_temporal,
                "macro": self.parse_macro,
                "incompatible": self.parse_incompatible,
                "rule": self.parse_rule,
                "query": self.parse_query,
            }.get(t.value)
            if handler is None:
                raise self.error(f"expected a declaration, found {t.value!r}")
            handler(raw)
        return raw

    def declare(self, raw: _Raw, tok: Token, kind: str):
        if tok.value in raw.positions:
            prev_kind, (line, col) = raw.positions[tok.value]
            raise DuplicateError(
                f"{tok.value!r} already declared as {prev_kind} at {line}:{col}", tok.line, tok.column
            )
        raw.positions[tok.value] = (kind, (tok.line, tok.column))

    def parse_scope(self) -> Token | None:
        # "occurs only in scope X" | "occurs only inside X" | "only occurs in scope X"
        if self.at("occurs") and self.peek().value == "only":
            self.advance()
            self.advance()
        elif self.at("only") and self.peek().value == "occurs":
            self.advance()
            self.advance()
        else:
            return None
        if self.accept("inside"):
            return self.ident("interval name")
        self.expect("in")
        self.expect("scope")
        return self.ident("interval name")

    def parse_action(self, raw: _Raw):
        self.expect("action")
        name = self.ident("action name")
        self.declare(raw, name, "action")
        outputs: list[Token] = []
        if self.accept("output"):
            self.expect("values")
            self.expect("{")
            outputs.append(self.ident("output label"))
            while self.accept(","):
                outputs.append(self.ident("output label"))
            self.expect("}")
        scope = self.parse_scope()
        guard = None
        if self.accept("requires"):
            self.expect("that")
            guard = self.parse_inner()
        labels = [o.value for o in outputs]
        for i, o in enumerate(outputs):
            if o.value in labels[:i]:
                raise self.error(f"duplicate output label {o.value!r}", o, DuplicateError)
        raw.actions[name.value] = (name, labels, scope, guard)

    def parse_interval(self, raw: _Raw):
        self.expect("interval")
        name = self.ident("interval name")
        self.declare(raw, name, "interval")
        self.expect("delimited")
        self.expect("by")
        self.expect("actions")
        begin = self.ident("action name")
        end = None
        if self.accept("-"):
            if not self.accept("+inf"):
                end = self.ident("action name")
        else:
            self.expect("+inf")
        scope, repeatedly = None, False
        for _ in range(2):
            if self.accept("repeatedly"):
                repeatedly = True
            elif scope is None:
                scope = self.parse_scope()
        if end is not None and end.value == begin.value:
            raise self.error("interval must be delimited by two different actions", end)
        raw.intervals[name.value] = (name, begin, end, scope, repeatedly)

    def parse_counter(self, raw: _Raw):
        self.expect("counter")
        name = self.ident("counter name")
        self.declare(raw, name, "counter")
        lists = {"increases": [], "decreases": [], "resets": []}
        bound = None
        while True:
            if self.tok.value in lists and self.tok.kind == "ident":
                key = self.advance().value
                self.expect("with")
                if not (self.accept("action") or self.accept("actions")):
                    raise self.error("expected 'action' or 'actions'")
                lists[key].extend(self.ident_list())
            elif self.accept("bound"):
                t = self.tok
                if t.kind != "int":
                    raise self.error("expected an integer bound")
                self.advance()
                bound = (int(t.value), t)
            else:
                break
        raw.counters[name.value] = (name, lists["increases"], lists["decreases"], lists["resets"], bound)

    def parse_temporal(self, raw: _Raw):
        self.expect("temporal")
        self.expect("actions")
        points = self.ident_list()
        if len(points) < 2:
            raise self.error("temporal actions need at least two points", points[0])
        for p in points:
            self.declare(raw, p, "temporal action")
        raw.temporal.append(points)

    def parse_macro(self, raw: _Raw):
        self.expect("macro")
        name = self.ident("macro name")
        self.declare(raw, name, "macro")
        self.expect("=")
        raw.macros[name.value] = (name, self.parse_inner())

    def parse_incompatible(self, raw: _Raw):
        t = self.expect("incompatible")
        left = self.parse_inner()
        self.expect(",")
        right = self.parse_inner()
        raw.incompatibilities.append((t, left, right))

    def parse_rule(self, raw: _Raw):
        self.expect("rule")
        name = self.ident("rule name")
        self.declare(raw, name, "rule")
        self.expect(":")
        form, text = self.parse_form()
        target = None
        if self.accept("exception"):
            self.expect("of")
            target = self.ident("rule name")
            if form.op != "P":
                raise self.error("only permissions can be flagged as exceptions", target, ExceptionTargetError)
        raw.rules.append((name, form, target, text))

    def parse_query(self, raw: _Raw):
        self.expect("query")
        name = self.ident("query name")
        self.declare(raw, name, "query")
        self.expect(":")
        form, text = self.parse_form()
        if form.op == "P":
            raise self.error("queries cannot be permissions", name)
        raw.queries.append((name, form, text))

    # formulas

    def parse_form(self) -> tuple[Form, str]:
        start = self.tok
        op = self.tok.value
        if self.tok.kind != "ident" or op not in DEONTIC_OPS:
            raise self.error("expected a deontic operator O, F, OE or P")
        self.advance()
        reparation = None
        if self.accept("["):
            if op in ("OE", "P"):
                what = "permissions" if op == "P" else "eventual obligations"
                raise self.error(f"{what} cannot carry a reparation", start)
            reparation = self.parse_inner()
            self.expect("]")
        self.expect("(")
        body = self.parse_inner()
        end = self.expect(")")
        return Form(op, body, reparation), self.source[start.start : end.end]

    def parse_inner(self) -> Inner:
        left = self.parse_or()
        if self.accept("->"):
            return Implies(left, self.parse_inner())
        return left

    def parse_or(self) -> Inner:
        node = self.parse_and()
        while self.accept("|"):
            node = Or(node, self.parse_and())
        return node

    def parse_and(self) -> Inner:
        node = self.parse_unary()
        while self.accept("&"):
            node = And(node, self.parse_unary())
        return node

    def parse_unary(self) -> Inner:
        if self.accept("!"):
            return Not(self.parse_unary())
        if self.accept("<>"):
            return Eventually(self.parse_unary())
        if self.tok.kind == "diamond_in":
            interval = self.advance().value
            return EventuallyIn(interval, self.parse_unary())
        return self.parse_primary()

    def parse_primary(self) -> Inner:
        t = self.tok
        if self.accept("("):
            node = self.parse_inner()
            self.expect(")")
            return node
        if t.kind != "ident":
            raise self.error(f"expected a formula, found {t.value or 'end of input'!r}")
        if t.value in DEONTIC_OPS and self.peek().value in ("(", "["):
            raise self.error(
                "deontic operators cannot be nested inside a formula", t, NestingError
            )
        if t.value == "true":
            self.advance()
            return Top()
        if t.value == "false":
            self.advance()
            return Bottom()
        if t.value in ("happening", "done"):
            self.advance()
            self.expect("(")
            name = self.ident("action name")
            self.expect(")")
            cls = Happening if t.value == "happening" else Done
            return cls(Name(name.value, (name.line, name.column)))  # type: ignore[arg-type]
        name = self.ident("formula")
        if self.accept("."):
            label = self.ident("output label")
            return Output(name.value, label.value, (name.line, name.column))
        if self.tok.kind == "sym" and self.tok.value in ("=", "<", "<=", ">", ">="):
            op = self.advance().value
            num = self.tok
            if num.kind != "int":
                raise self.error("expected an integer literal")
            self.advance()
            return Compare(name.value, op, int(num.value), (name.line, name.column))
        return Name(name.value, (name.line, name.column))


# resolution -----------------------------------------------------------------


class _Resolver:
    def __init__(self, raw: _Raw):
        self.raw = raw
        self.warnings = list(raw.warnings)
        self.actions: dict[str, ActionDecl] = {}
        self.points: set[str] = {p.value for pts in raw.temporal for p in pts}
        self.kind = {name: kind for name, (kind, _) in raw.positions.items()}

    def fail(self, cls, message, tok_or_pos):
        if isinstance(tok_or_pos, Token):
            raise cls(message, tok_or_pos.line, tok_or_pos.column)
        if tok_or_pos:
            raise cls(message, *tok_or_pos)
        raise cls(message)

    def implicit_action(self, tok: Token):
        if tok.value in self.kind and self.kind[tok.value] != "action":
            self.fail(DuplicateError, f"{tok.value!r} is a {self.kind[tok.value]}, not an action", tok)
        if tok.value not in self.kind:
            self.kind[tok.value] = "action"
            self.raw.actions.setdefault(tok.value, (tok, [], None, None))
            self.raw.actions[tok.value] += ("implicit",)

    def interval_ref(self, tok: Token | None):
        if tok is None:
            return None
        if self.kind.get(tok.value) != "interval":
            self.fail(UndeclaredError, f"undeclared interval {tok.value!r}", tok)
        return tok.value

    def resolve(self) -> SpecDocument:
        raw = self.raw
        for name, begin, end, _, _ in raw.intervals.values():
            self.implicit_action(begin)
            if end is not None:
                self.implicit_action(end)
        for name, inc, dec, reset, _ in raw.counters.values():
            for t in inc + dec + reset:
                self.implicit_action(t)

        macros = {n: self.inner(body) for n, (_, body) in raw.macros.items()}

        actions = {}
        for key, entry in raw.actions.items():
            tok, labels, scope, guard = entry[:4]
            guard_r = self.inner(guard) if guard is not None else None
            if guard_r is not None and not is_propositional(guard_r):
                self.fail(ParseError, f"guard of {key!r} must not use temporal operators", tok)
            actions[key] = ActionDecl(
                key, tuple(labels), self.interval_ref(scope), guard_r, implicit=len(entry) > 4
            )
        self.actions = actions

        intervals = {}
        for key, (tok, begin, end, scope, rep) in raw.intervals.items():
            intervals[key] = IntervalDecl(
                key, begin.value, end.value if end else None, self.interval_ref(scope), rep
            )

        counters = {}
        for key, (tok, inc, dec, reset, bound) in raw.counters.items():
            lists = [tuple(t.value for t in lst) for lst in (inc, dec, reset)]
            seen: dict[str, str] = {}
            for role, lst in zip(("increment", "decrement", "reset"), lists):
                for a in lst:
                    if a in seen:
                        self.fail(ParseError, f"action {a!r} both {seen[a]}s and {role}s counter {key!r}", tok)
                    seen[a] = role
            if bound is None:
                self.warnings.append(
                    f"counter {key!r} has no bound; using {DEFAULT_COUNTER_BOUND}"
                )
                value, given = DEFAULT_COUNTER_BOUND, False
            else:
                value, given = bound[0], True
                if value < 1:
                    self.fail(RangeError, f"counter bound must be at least 1", bound[1])
            counters[key] = CounterDecl(key, *lists, bound=value, bound_given=given)
        self.counters = counters

        # counter literals are range-checked once bounds are known
        for body in list(macros.values()) + [a.guard for a in actions.values() if a.guard]:
            self.check_literals(body)
        temporal = tuple(TemporalActionsDecl(tuple(p.value for p in pts)) for pts in raw.temporal)

        incompat = []
        for tok, left, right in raw.incompatibilities:
            pair = (self.inner(left), self.inner(right))
            for f in pair:
                if not is_propositional(f):
                    self.fail(ParseError, "incompatible formulas must not use temporal operators", tok)
                self.check_literals(f)
            incompat.append(pair)

        rules = []
        for tok, form, target, text in raw.rules:
            rules.append(Rule(tok.value, self.form(form), target.value if target else None, text))
        for (tok, _, target, _), rule in zip(raw.rules, rules):
            if target is not None:
                if self.kind.get(target.value) != "rule":
                    self.fail(ExceptionTargetError, f"exception target {target.value!r} is not a rule", target)
                tgt = next(r for r in rules if r.name == target.value)
                if tgt.form.op != "F":
                    self.fail(ExceptionTargetError, f"exception target {target.value!r} is not a prohibition", target)
        queries = [Query(tok.value, self.form(form), text) for tok, form, text in raw.queries]

        return SpecDocument(
            actions=actions,
            intervals=intervals,
            counters=counters,
            temporal_actions=temporal,
            macros=macros,
            incompatibilities=tuple(incompat),
            rules=tuple(rules),
            queries=tuple(queries),
            warnings=tuple(self.warnings),
        )

    def form(self, form: Form) -> Form:
        body = self.inner(form.body)
        rep = self.inner(form.reparation) if form.reparation is not None else None
        for f in (body, rep):
            if f is not None:
                self.check_literals(f)
        return Form(form.op, body, rep)

    def check_literals(self, node: Inner):
        for n in walk(node):
            if isinstance(n, Compare):
                bound = self.counters[n.counter].bound
                if not 0 <= n.value <= bound:
                    self.fail(RangeError, f"literal {n.value} outside 0..{bound} for counter {n.counter!r}", n.pos)

    def inner(self, node: Inner) -> Inner:
        return rebuild(node, self.resolve_leaf)

    def resolve_leaf(self, node: Inner) -> Inner:
        match node:
            case Name(ident, pos):
                kind = self.kind.get(ident)
                if kind in ("action", "temporal action"):
                    return Act(ident)
                if kind == "macro":
                    return MacroRef(ident)
                if kind is None and ident.startswith("is_") and self.kind.get(ident[3:]) == "interval":
                    return IsOpen(ident[3:])
                if kind is None:
                    self.fail(UndeclaredError, f"undeclared identifier {ident!r}", pos)
                self.fail(ParseError, f"{kind} {ident!r} cannot be used as a formula", pos)
            case Happening(Name(ident, pos)) | Done(Name(ident, pos)):
                kind = self.kind.get(ident)
                allowed = ("action",) if isinstance(node, Happening) else ("action", "temporal action")
                if kind not in allowed:
                    self.fail(UndeclaredError, f"{ident!r} is not an action", pos)
                return type(node)(ident)
            case Output(action, label, pos):
                if self.kind.get(action) != "action":
                    self.fail(UndeclaredError, f"undeclared action {action!r}", pos)
                labels = self.raw.actions[action][1]
                if label not in labels:
                    self.fail(UndeclaredError, f"action {action!r} has no output value {label!r}", pos)
            case Compare(counter, _, _, pos):
                if self.kind.get(counter) != "counter":
                    self.fail(UndeclaredError, f"undeclared counter {counter!r}", pos)
            case EventuallyIn(interval, _):
                if self.kind.get(interval) != "interval":
                    self.fail(UndeclaredError, f"undeclared interval {interval!r}")
        return node


def parse_spec(source: str, *, expand: bool = True) -> SpecDocument:
    """Parse, resolve and validate FL source text.

    Macros are expanded unless ``expand`` is false. Raises a subclass of
    :class:`SpecError` carrying ``line:column`` on any input error.
    """
    raw = Parser(source).parse_document()
    doc = _Resolver(raw).resolve()
    if expand:
        from .transform import expand_macros

        doc = expand_macros(doc)
    return doc


def parse_form(text: str, doc: SpecDocument) -> Form:
    """Parse a single deontic form against the declarations of ``doc``."""
    p = Parser(text)
    form, _ = p.parse_form()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.value!r} after formula")
    raw = _Raw({}, {}, {}, [], {}, [], [], [], {}, [])
    resolver = _Resolver(raw)
    resolver.kind = {a: "action" for a in doc.actions}
    resolver.kind.update({i: "interval" for i in doc.intervals})
    resolver.kind.update({c: "counter" for c in doc.counters})
    resolver.kind.update({m: "macro" for m in doc.macros})
    resolver.kind.update({p: "temporal action" for p in doc.points})
    resolver.raw.actions = {a.name: (None, list(a.outputs), None, None) for a in doc.actions.values()}
    resolver.counters = doc.counters
    return resolver.form(form)


__all__ = ["parse_spec", "parse_form", "tokenize", "Parser", "SpecError", "Token"]
