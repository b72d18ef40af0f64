"""Reading and writing games: Gambit ``.efg`` text and a JSON mirror.

Only the three node kinds ``c`` (chance), ``p`` (player) and ``t`` (terminal)
are understood, and outcomes may only hang off terminal nodes.
"""
from __future__ import annotations

import json
import re
from fractions import Fraction
from pathlib import Path

from .game import CHANCE, DECISION, LEAF, GameTree, Node, Spec, build

JSON_FORMAT = "efgdom-game"
JSON_VERSION = 1


class EfgError(ValueError):
    pass


class EfgLexError(EfgError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {msg}")
        self.line, self.col = line, col


class EfgArityError(EfgError):
    pass


class EfgInfoSetConflict(EfgError):
    pass


class EfgVersionError(EfgError):
    pass


class GameSchemaError(ValueError):
    pass


# -- lexer --------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<string>"(?:[^"\\]|\\.|"")*")
  | (?P<number>[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?(?:/\d+)?)
  | (?P<punct>[{},])
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
""", re.VERBOSE)


class _Tok:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind, self.text, self.line, self.col = kind, text, line, col

    def __repr__(self):
        return f"{self.kind}:{self.text!r}@{self.line}:{self.col}"


def _unquote(s: str) -> str:
    body = s[1:-1]
    return re.sub(r'\\(.)|""', lambda m: m.group(1) if m.group(1) is not None else '"', body)


def _lex(text: str) -> list[_Tok]:
    toks, pos, line, line_start = [], 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise EfgLexError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    return toks


class _Stream:
    def __init__(self, toks):
        self.toks, self.i = toks, 0

    def peek(self, k=0):
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def next(self, kind=None, what=None):
        tok = self.peek()
        if tok is None:
            raise EfgError(f"unexpected end of input (expected {what or kind})")
        if kind is not None and tok.kind != kind:
            raise EfgLexError(f"expected {what or kind}, found {tok.text!r}", tok.line, tok.col)
        self.i += 1
        return tok

    def at(self, kind, text=None):
        tok = self.peek()
        return tok is not None and tok.kind == kind and (text is None or tok.text == text)

    def punct(self, ch):
        tok = self.next("punct", repr(ch))
        if tok.text != ch:
            raise EfgLexError(f"expected {ch!r}, found {tok.text!r}", tok.line, tok.col)


def _number(tok: _Tok) -> tuple[float, str]:
    text = tok.text
    if "/" in text:
        num, den = text.split("/")
        if int(den) == 0:
            raise EfgLexError("zero denominator", tok.line, tok.col)
        return float(Fraction(Fraction(num), int(den))), text
    return float(text), text


# -- parser -------------------------------------------------------------------

def parse_efg(text: str) -> GameTree:
    """Parse a Gambit ``.efg`` document into a :class:`GameTree`.

    Structural problems the grammar can't see (say, probabilities that don't
    sum to one) are left for :func:`efgdom.game.validate` to report.
    """
    s = _Stream(_lex(text))
    tag = s.next("word", "'EFG'")
    if tag.text != "EFG":
        raise EfgLexError(f"expected 'EFG', found {tag.text!r}", tag.line, tag.col)
    rev = s.next("number", "format revision")
    if rev.text != "2":
        raise EfgVersionError(f"unsupported .efg revision {rev.text}")
    prec = s.next("word", "'R'")
    if prec.text != "R":
        raise EfgVersionError(f"unsupported number precision {prec.text!r}")
    title = _unquote(s.next("string", "title").text)
    s.punct("{")
    players = []
    while s.at("string"):
        players.append(_unquote(s.next().text))
    s.punct("}")
    comment = ""
    if s.at("string"):
        comment = _unquote(s.next().text)

    iset_actions: dict[tuple[int, int], tuple[str, ...]] = {}
    iset_names: dict[tuple[int, int], str] = {}
    chance_isets: dict[int, tuple[tuple[str, ...], tuple[float, ...], tuple[str, ...], str]] = {}
    outcomes: dict[int, tuple[tuple[float, ...], tuple[str, ...], str]] = {}

    def read_node():
        tok = s.next("word", "node type")
        label = _unquote(s.next("string", "node label").text)
        if tok.text == "t":
            return read_terminal(label)
        if tok.text == "c":
            num = int(s.next("number", "chance info set number").text)
            name = _unquote(s.next().text) if s.at("string") else None
            if s.at("punct", "{"):
                s.punct("{")
                acts, probs, texts = [], [], []
                while s.at("string"):
                    acts.append(_unquote(s.next().text))
                    p, t = _number(s.next("number", "probability"))
                    probs.append(p)
                    texts.append(t)
                s.punct("}")
                entry = (tuple(acts), tuple(probs), tuple(texts), name or "")
                if num in chance_isets and chance_isets[num][:2] != entry[:2]:
                    raise EfgInfoSetConflict(f"chance info set {num} redefined differently")
                chance_isets[num] = entry
            elif num in chance_isets:
                entry = chance_isets[num]
            else:
                raise EfgLexError(f"chance info set {num} used before definition", tok.line, tok.col)
            read_nonterminal_outcome(tok)
            acts, probs, texts, stored_name = entry
            return Spec(CHANCE, label=label, actions=acts, probs=probs, prob_text=texts,
                        info_name=name if name is not None else stored_name, info_number=num), len(acts)
        if tok.text == "p":
            player = int(s.next("number", "player number").text)
            if not 1 <= player <= len(players):
                raise EfgError(f"line {tok.line}: player {player} not declared in header")
            num = int(s.next("number", "info set number").text)
            key = (player, num)
            name = _unquote(s.next().text) if s.at("string") else None
            if s.at("punct", "{"):
                s.punct("{")
                acts = []
                while s.at("string"):
                    acts.append(_unquote(s.next().text))
                s.punct("}")
                acts = tuple(acts)
                if key in iset_actions and iset_actions[key] != acts:
                    raise EfgInfoSetConflict(
                        f"line {tok.line}: info set {num} of player {player} has actions "
                        f"{list(acts)} here but {list(iset_actions[key])} earlier")
                iset_actions[key] = acts
            elif key not in iset_actions:
                raise EfgLexError(f"info set {num} of player {player} used before definition",
                                  tok.line, tok.col)
            if name is not None and key not in iset_names:
                iset_names[key] = name
            read_nonterminal_outcome(tok)
            acts = iset_actions[key]
            return Spec(DECISION, label=label, player=player - 1, infoset=num, actions=acts,
                        info_name=iset_names.get(key, ""), info_number=num), len(acts)
        raise EfgLexError(f"unsupported node type {tok.text!r}", tok.line, tok.col)

    def read_nonterminal_outcome(tok):
        out = int(s.next("number", "outcome number").text)
        if out != 0:
            raise EfgError(f"line {tok.line}: outcomes on non-terminal nodes are not supported")
        if s.at("string") or s.at("punct", "{"):
            raise EfgError(f"line {tok.line}: payoffs on non-terminal nodes are not supported")

    def read_terminal(label):
        head = s.peek(-1)
        out = int(s.next("number", "outcome number").text)
        name = _unquote(s.next().text) if s.at("string") else None
        pays = None
        if s.at("punct", "{"):
            s.punct("{")
            vals, texts = [], []
            while not s.at("punct", "}"):
                if s.at("punct", ","):
                    s.next()
                    continue
                v, t = _number(s.next("number", "payoff"))
                vals.append(v)
                texts.append(t)
            s.punct("}")
            pays = (tuple(vals), tuple(texts))
        if pays is None:
            if out not in outcomes:
                raise EfgError(f"line {head.line}: terminal node without payoffs")
            vals, texts, stored = outcomes[out]
            name = stored if name is None else name
        else:
            vals, texts = pays
            if out != 0:
                if out in outcomes and outcomes[out][0] != vals:
                    raise EfgError(f"line {head.line}: outcome {out} reused with different payoffs")
                outcomes.setdefault(out, (vals, texts, name or ""))
        if len(vals) != len(players):
            raise EfgArityError(f"line {head.line}: {len(vals)} payoffs for {len(players)} players")
        return Spec(LEAF, label=label, utilities=vals, payoff_text=texts,
                    outcome_name=name or ""), 0

    # iterative preorder assembly: each frame is [spec, expected arity, children]
    root_holder: list[Spec] = []
    stack: list[list] = []
    while True:
        if s.peek() is None:
            break
        spec, arity = read_node()
        frame = [spec, arity, []]
        if stack:
            stack[-1][2].append(spec)
        elif root_holder:
            raise EfgArityError("more nodes than the tree structure allows")
        else:
            root_holder.append(spec)
        if arity:
            stack.append(frame)
        while stack and len(stack[-1][2]) == stack[-1][1]:
            done = stack.pop()
            done[0].children = done[2]
    if not root_holder:
        raise EfgError("document has no nodes")
    if stack:
        top = stack[-1]
        raise EfgArityError(
            f"node {top[0].label!r} declares {top[1]} actions but only {len(top[2])} subtrees follow")
    return build(players, root_holder[0], title=title, comment=comment)


def read_efg(path) -> GameTree:
    return parse_efg(Path(path).read_text(encoding="utf-8"))


# -- writer -------------------------------------------------------------------

def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def format_probability(p: float) -> str:
    fr = Fraction(p).limit_denominator(10**9)
    if float(fr) == p:
        return str(fr.numerator) if fr.denominator == 1 else f"{fr.numerator}/{fr.denominator}"
    return f"{p:.17g}"


def format_payoff(u: float) -> str:
    if u == int(u) and abs(u) < 2**53:
        return str(int(u))
    return repr(u)


def _consistent(text: str, value: float) -> bool:
    try:
        if "/" in text:
            a, b = text.split("/")
            return float(Fraction(Fraction(a), int(b))) == value
        return float(text) == value
    except (ValueError, ZeroDivisionError):
        return False


def write_efg(game: GameTree) -> str:
    """Serialize to ``.efg`` text; deterministic for a given game."""
    lines = [f"EFG 2 R {_quote(game.title)} {{ {' '.join(_quote(p) for p in game.players)} }}"]
    if game.comment:
        lines.append(_quote(game.comment))
        lines.append("")
    numbers = _infoset_numbers(game)
    chance_no = 0
    outcome_no = 0
    for node in game.nodes:
        if node.is_leaf:
            outcome_no += 1
            texts = node.payoff_text
            pays = [
                texts[k] if texts is not None and k < len(texts) and _consistent(texts[k], u)
                else format_payoff(u)
                for k, u in enumerate(node.utilities)
            ]
            lines.append(f"t {_quote(node.label)} {outcome_no} {_quote(node.outcome_name)} "
                         f"{{ {', '.join(pays)} }}")
        elif node.is_chance:
            chance_no += 1
            texts = node.prob_text
            items = []
            for k, (a, p) in enumerate(zip(node.actions, node.probs)):
                t = texts[k] if texts is not None and k < len(texts) and _consistent(texts[k], p) \
                    else format_probability(p)
                items.append(f"{_quote(a)} {t}")
            lines.append(f"c {_quote(node.label)} {chance_no} {_quote(node.info_name)} "
                         f"{{ {' '.join(items)} }} 0")
        else:
            I = game.infosets[node.infoset]
            acts = " ".join(_quote(a) for a in node.actions)
            lines.append(f"p {_quote(node.label)} {node.player + 1} {numbers[I.id]} "
                         f"{_quote(I.name)} {{ {acts} }} 0")
    return "\n".join(lines) + "\n"


def _infoset_numbers(game: GameTree) -> dict[int, int]:
    """Per-player info-set numbers: the stored ones when they are usable, else 1..k."""
    out: dict[int, int] = {}
    for p in range(game.num_players):
        isets = game.infosets_of(p)
        stored = [I.number for I in isets]
        if all(n is not None and n > 0 for n in stored) and len(set(stored)) == len(stored):
            out.update({I.id: I.number for I in isets})
        else:
            out.update({I.id: k + 1 for k, I in enumerate(isets)})
    return out


def save_efg(game: GameTree, path) -> None:
    Path(path).write_text(write_efg(game), encoding="utf-8")


# -- JSON mirror --------------------------------------------------------------

def to_json(game: GameTree) -> dict:
    nodes = []
    for n, node in enumerate(game.nodes):
        d = {"id": n, "kind": node.kind, "label": node.label}
        if node.is_leaf:
            d["utilities"] = list(node.utilities)
            if node.outcome_name:
                d["outcome"] = node.outcome_name
        else:
            d["actions"] = list(node.actions)
            d["children"] = list(node.children)
            if node.is_chance:
                d["probs"] = list(node.probs)
                if node.info_name:
                    d["info_name"] = node.info_name
            else:
                d["player"] = node.player
                d["infoset"] = node.infoset
        nodes.append(d)
    return {
        "format": JSON_FORMAT,
        "version": JSON_VERSION,
        "title": game.title,
        "comment": game.comment,
        "players": list(game.players),
        "root": 0,
        "nodes": nodes,
        "infosets": [
            {"id": I.id, "player": I.player, "name": I.name, "number": I.number,
             "members": list(I.members), "actions": list(I.actions)}
            for I in game.infosets
        ],
    }


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise GameSchemaError(msg)


def from_json(doc: dict | str) -> GameTree:
    """Rebuild a game from :func:`to_json` output, checking the schema."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    _require(isinstance(doc, dict), "document must be an object")
    _require(doc.get("format") == JSON_FORMAT, f"format must be {JSON_FORMAT!r}")
    _require(doc.get("version") == JSON_VERSION, f"unsupported version {doc.get('version')!r}")
    players = doc.get("players")
    _require(isinstance(players, list) and all(isinstance(p, str) for p in players),
             "players must be a list of strings")
    raw_nodes = doc.get("nodes")
    _require(isinstance(raw_nodes, list) and raw_nodes, "nodes must be a non-empty list")
    by_id = {}
    for d in raw_nodes:
        _require(isinstance(d, dict) and isinstance(d.get("id"), int), "node without integer id")
        _require(d["id"] not in by_id, f"duplicate node id {d['id']}")
        _require(d.get("kind") in (DECISION, CHANCE, LEAF), f"node {d['id']}: bad kind {d.get('kind')!r}")
        by_id[d["id"]] = d
    root = doc.get("root", 0)
    _require(root in by_id, f"root {root} is not a node")
    isets = {}
    for d in doc.get("infosets", []):
        _require(isinstance(d, dict) and isinstance(d.get("id"), int), "info set without integer id")
        isets[d["id"]] = d

    def spec_of(nid):
        d = by_id[nid]
        kind = d["kind"]
        if kind == LEAF:
            u = d.get("utilities")
            _require(isinstance(u, list) and len(u) == len(players),
                     f"node {nid}: needs {len(players)} utilities")
            return Spec(LEAF, label=d.get("label", ""), utilities=tuple(float(x) for x in u),
                        outcome_name=d.get("outcome", ""))
        children = d.get("children")
        actions = d.get("actions")
        _require(isinstance(children, list) and isinstance(actions, list),
                 f"node {nid}: children and actions required")
        for c in children:
            _require(c in by_id, f"node {nid}: child {c} does not exist")
        if kind == CHANCE:
            probs = d.get("probs")
            _require(isinstance(probs, list) and len(probs) == len(children),
                     f"node {nid}: one probability per child required")
            return Spec(CHANCE, label=d.get("label", ""), actions=tuple(actions),
                        probs=tuple(float(p) for p in probs), info_name=d.get("info_name", ""),
                        children=[c for c in children])
        _require(isinstance(d.get("player"), int) and 0 <= d["player"] < len(players),
                 f"node {nid}: bad player")
        _require(d.get("infoset") in isets, f"node {nid}: info set {d.get('infoset')} not declared")
        iset = isets[d["infoset"]]
        return Spec(DECISION, label=d.get("label", ""), player=d["player"], infoset=d["infoset"],
                    actions=tuple(actions), children=[c for c in children],
                    info_name=iset.get("name", ""), info_number=iset.get("number"))

    specs, order, stack, seen = {}, [], [root], set()
    while stack:
        nid = stack.pop()
        _require(nid not in seen, f"node {nid} reached twice")
        seen.add(nid)
        specs[nid] = spec_of(nid)
        order.append(nid)
        stack.extend(specs[nid].children)
    _require(len(seen) == len(by_id), "some nodes are unreachable from the root")
    for nid in reversed(order):
        specs[nid].children = [specs[c] for c in specs[nid].children]
    return build(players, specs[root], title=doc.get("title", ""), comment=doc.get("comment", ""))
