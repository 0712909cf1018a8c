"""Declared-identifier discovery, renaming and the syntactic validity proxy.

Both languages share one shape: the significant tokens are scanned for
declaration sites (method name, parameters, locals), every use site of a
declared name is collected, and any declaration-shaped slot holding a
reserved word is recorded as a problem. ``validate`` is then just
"lexes, balances, and no problems".
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .lexer import (
    IDENTIFIER, JAVA, JAVA_PRIMITIVES, KEYWORD, LITERAL, OPERATOR, PYTHON, UNK,
    LexError, Token, check_lang, is_identifier_spelling, reserved_words, significant, tokenize,
)

METHOD_NAME = "method_name"
VARIABLE = "variable"
PARAMETER = "parameter"

_OPEN = {"(": ")", "[": "]", "{": "}"}
_CLOSE = {v: k for k, v in _OPEN.items()}
_ASSIGN_OPS = frozenset({"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>=",
                         "**=", "//=", "@=", ":="})
_PY_COMPOUND = frozenset({"if", "elif", "else", "for", "while", "with", "try", "except", "finally",
                          "def", "class", "async"})


class RenameError(ValueError):
    pass


class IdentifierNotFound(RenameError):
    pass


class IdentifierCollision(RenameError):
    pass


class InvalidIdentifier(RenameError):
    pass


@dataclass(frozen=True)
class IdentifierInfo:
    name: str
    kind: str
    occurrences: Tuple[Tuple[int, int], ...]
    decl_start: int = 0

    @property
    def single_letter(self) -> bool:
        return len(self.name) == 1


@dataclass
class _Decl:
    name: str
    kind: str
    idx: int
    scope_end: int


@dataclass
class _Analysis:
    sig: List[Token]
    balanced: bool
    decls: List[_Decl] = field(default_factory=list)
    occurrences: Dict[str, List[int]] = field(default_factory=dict)
    problems: List[str] = field(default_factory=list)


def _pair_brackets(sig: Sequence[Token]) -> Tuple[Dict[int, int], bool]:
    pairs: Dict[int, int] = {}
    stack: List[int] = []
    ok = True
    for i, tok in enumerate(sig):
        if tok.kind == OPERATOR or tok.kind == LITERAL:
            continue
        if tok.text in _OPEN:
            stack.append(i)
        elif tok.text in _CLOSE:
            if stack and sig[stack[-1]].text == _CLOSE[tok.text]:
                j = stack.pop()
                pairs[j] = i
                pairs[i] = j
            else:
                ok = False
    if stack:
        ok = False
    return pairs, ok


def _txt(sig: Sequence[Token], i: int) -> str:
    return sig[i].text if 0 <= i < len(sig) else ""


def _is_reserved(tok: Token, lang: str) -> bool:
    return tok.kind in (KEYWORD, LITERAL) and tok.text in reserved_words(lang)


# ---------------------------------------------------------------- Java

_JAVA_AFTER_IDENT_OK = frozenset({"instanceof", "extends", "super", "implements", "throws"})
_JAVA_DECL_NEXT = frozenset({"=", ";", ",", ":", ")", "&&", "||"})
_JAVA_TYPEISH = frozenset({",", ".", "?", "&", "[", "]", "<", ">", ">>", ">>>", "extends", "super"})


def _java_generic_close(sig: Sequence[Token], i: int) -> bool:
    """True when the ``>``-family token at ``i`` closes a generic type argument list."""
    depth = 0
    j = i
    while j >= 0:
        t = sig[j].text
        if t in (">", ">>", ">>>"):
            depth += len(t)
        elif t == "<":
            depth -= 1
            if depth == 0:
                return j > 0 and sig[j - 1].kind == IDENTIFIER
        elif not (sig[j].kind == IDENTIFIER or t in _JAVA_TYPEISH or t in JAVA_PRIMITIVES):
            return False
        j -= 1
    return False


def _java_type_end(sig: Sequence[Token], i: int) -> bool:
    """Does the token at ``i`` end a type, so that an identifier after it is being declared?"""
    if i < 0:
        return False
    tok = sig[i]
    if tok.kind == KEYWORD:
        return tok.text in JAVA_PRIMITIVES and tok.text != "void"
    if tok.kind == IDENTIFIER:
        return tok.text not in ("yield",) and _txt(sig, i - 1) not in ("case",)
    if tok.text == "]":
        j = i
        while j >= 1 and sig[j].text == "]" and sig[j - 1].text == "[":
            j -= 2
        return j != i and _java_type_end(sig, j) or (j != i and _txt(sig, j) in (">", ">>", ">>>")
                                                       and _java_generic_close(sig, j))
    if tok.text in (">", ">>", ">>>"):
        return _java_generic_close(sig, i)
    return False


def _stmt_end(sig: Sequence[Token], pairs: Dict[int, int], j: int, limit: int) -> int:
    """Index of the last token of the statement starting at ``j``."""
    if j < limit and sig[j].text == "{":
        return pairs.get(j, limit - 1)
    k = j
    while k < limit:
        t = sig[k].text
        if t in _OPEN and k in pairs:
            k = pairs[k] + 1
            if t == "{" and _txt(sig, k) not in ("else", "catch", "finally", "while"):
                return k - 1
            continue
        if t == ";":
            return k
        if t in _CLOSE:
            return k - 1
        k += 1
    return limit - 1


def _enclosing(stack: List[int], sig: Sequence[Token], opener: str) -> Optional[int]:
    for idx in reversed(stack):
        if sig[idx].text == opener:
            return idx
    return None


def _java_analyze(sig: List[Token], pairs: Dict[int, int], an: _Analysis) -> None:
    n = len(sig)
    lang = JAVA

    # Method header: ``[modifiers] Type name(params) [throws ...] {``.
    body_lo, body_hi = 0, n
    first_brace = next((i for i, t in enumerate(sig) if t.text == "{"), None)
    header_paren = None
    if first_brace is not None:
        for i in range(first_brace):
            if sig[i].text in (";", "=", "{"):
                break
            if sig[i].text == "(":
                header_paren = i
                break
    if header_paren is not None and header_paren >= 2 and header_paren in pairs:
        name_tok = sig[header_paren - 1]
        close = pairs[header_paren]
        tail_ok = close + 1 <= first_brace and all(
            t.kind == IDENTIFIER or t.text in ("throws", ",", ".") for t in sig[close + 1:first_brace])
        if tail_ok:
            body_lo = first_brace + 1
            body_hi = pairs.get(first_brace, n)
            if name_tok.kind == IDENTIFIER:
                an.decls.append(_Decl(name_tok.text, METHOD_NAME, header_paren - 1, n))
            else:
                an.problems.append(f"reserved word {name_tok.text!r} used as method name")
            _java_params(sig, header_paren, close, body_hi, an)

    stack: List[int] = []
    decl_at: Set[int] = {d.idx for d in an.decls}

    def scope_for(k: int) -> int:
        paren = stack[-1] if stack and sig[stack[-1]].text == "(" else None
        if paren is not None and paren in pairs:
            close = pairs[paren]
            before = _txt(sig, paren - 1)
            if before in ("for", "catch", "try", "if", "while") or _txt(sig, close + 1) == "->":
                if _txt(sig, close + 1) == "->":
                    return _lambda_body_end(close + 2)
                return _stmt_end(sig, pairs, close + 1, body_hi)
        brace = _enclosing(stack, sig, "{")
        return pairs.get(brace, body_hi) if brace is not None else body_hi

    def _lambda_body_end(j: int) -> int:
        if j < n and sig[j].text == "{":
            return pairs.get(j, body_hi)
        k = j
        while k < body_hi:
            t = sig[k].text
            if t in _OPEN and k in pairs:
                k = pairs[k] + 1
                continue
            if t in (",", ";") or t in _CLOSE:
                return k - 1
            k += 1
        return body_hi

    def declare(k: int, kind: str = VARIABLE) -> None:
        if k in decl_at:
            return
        tok = sig[k]
        if tok.kind == IDENTIFIER:
            an.decls.append(_Decl(tok.text, kind, k, scope_for(k)))
            decl_at.add(k)
        elif _is_reserved(tok, lang):
            an.problems.append(f"reserved word {tok.text!r} in declaration slot")

    def more_declarators(k: int) -> None:
        """Collect ``, b = ...`` declarators following the declaration at ``k``."""
        j = k + 1
        ternary = 0
        while j < body_hi:
            t = sig[j].text
            if t in _OPEN and j in pairs:
                j = pairs[j] + 1
                continue
            if t == "?":
                ternary += 1
            elif t == ":" and ternary:
                ternary -= 1
            elif t in (";", ":") or t in _CLOSE:
                return
            elif t == ",":
                nxt = _txt(sig, j + 2)
                if j + 1 < body_hi and (nxt in ("=", ",", ";", "[") or nxt in _CLOSE):
                    declare(j + 1)
            j += 1

    for k in range(body_lo, body_hi):
        tok = sig[k]
        t = tok.text
        if t in _OPEN:
            stack.append(k)
            continue
        if t in _CLOSE:
            if stack:
                stack.pop()
            continue
        prev = _txt(sig, k - 1)
        nxt = _txt(sig, k + 1)
        if tok.kind == IDENTIFIER:
            if prev in (".", "@", "::"):
                continue
            if _java_type_end(sig, k - 1) and k - 1 >= body_lo and (
                    nxt in _JAVA_DECL_NEXT or (nxt == "[" and _txt(sig, k + 2) == "]")):
                declare(k)
                more_declarators(k)
            elif nxt == "->" and prev != "case":
                declare(k)
            elif nxt == ")" and _txt(sig, pairs.get(k + 1, -1) + 1) == "->" and k + 1 in pairs:
                # untyped lambda parameter list: (a, b) -> ...
                lo = pairs[k + 1]
                inner = sig[lo + 1:k + 1]
                if all(x.kind == IDENTIFIER or x.text == "," for x in inner):
                    for q in range(lo + 1, k + 1):
                        if sig[q].kind == IDENTIFIER:
                            declare(q)
        elif _is_reserved(tok, lang):
            if prev and k - 1 >= body_lo and sig[k - 1].kind == IDENTIFIER and prev != "yield" \
                    and t not in _JAVA_AFTER_IDENT_OK and _txt(sig, k - 2) not in (".", "@", "case"):
                an.problems.append(f"reserved word {t!r} follows an identifier")
            elif prev in JAVA_PRIMITIVES and prev != "void" and k - 1 >= body_lo:
                an.problems.append(f"reserved word {t!r} used as a variable name")
            elif prev in (">", ">>", ">>>") and t not in ("this", "new", "super", "null", "true", "false") \
                    and _java_generic_close(sig, k - 1):
                an.problems.append(f"reserved word {t!r} used as a variable name")
            if nxt in _ASSIGN_OPS or nxt in ("++", "--") or (nxt == "->" and t != "default"):
                an.problems.append(f"reserved word {t!r} used as an assignment target")

    # occurrences and scope checks
    method_names = {d.name for d in an.decls if d.kind == METHOD_NAME}
    var_decls: Dict[str, List[_Decl]] = {}
    for d in an.decls:
        if d.kind != METHOD_NAME:
            var_decls.setdefault(d.name, []).append(d)
    names = method_names | set(var_decls)
    for i, tok in enumerate(sig):
        if tok.kind != IDENTIFIER or tok.text not in names:
            continue
        prev, nxt = _txt(sig, i - 1), _txt(sig, i + 1)
        if prev in (".", "@", "::"):
            continue
        is_call = nxt == "("
        if tok.text in method_names and (is_call or i in decl_at):
            an.occurrences.setdefault(tok.text, []).append(i)
        elif tok.text in var_decls and not is_call:
            an.occurrences.setdefault(tok.text, []).append(i)
            if tok.text == UNK or i in decl_at:
                continue
            if not any(d.idx < i <= d.scope_end for d in var_decls[tok.text]):
                an.problems.append(f"{tok.text!r} used outside the scope of its declaration")

    for name, ds in var_decls.items():
        if name == UNK:
            continue
        for d2 in ds:
            if any(d1.idx < d2.idx <= d1.scope_end for d1 in ds if d1 is not d2):
                an.problems.append(f"{name!r} declared twice in overlapping scopes")
                break


def _java_params(sig: List[Token], lo: int, hi: int, scope_end: int, an: _Analysis) -> None:
    segments: List[List[int]] = []
    cur: List[int] = []
    depth = 0
    for i in range(lo + 1, hi):
        t = sig[i].text
        if t in ("(", "[", "{", "<"):
            depth += 1
        elif t in (")", "]", "}"):
            depth -= 1
        elif t in (">", ">>", ">>>"):
            depth -= len(t)
        if t == "," and depth == 0:
            segments.append(cur)
            cur = []
        else:
            cur.append(i)
    if cur or segments:
        segments.append(cur)
    for seg in segments:
        if not seg:
            an.problems.append("empty parameter")
            continue
        j = len(seg) - 1
        while j >= 1 and sig[seg[j]].text == "]" and sig[seg[j - 1]].text == "[":
            j -= 2
        slot = sig[seg[j]]
        if slot.kind == IDENTIFIER and j >= 1:
            an.decls.append(_Decl(slot.text, PARAMETER, seg[j], scope_end))
        elif slot.kind == IDENTIFIER:
            an.problems.append(f"parameter {slot.text!r} has no type")
        else:
            an.problems.append(f"{slot.text!r} is not a legal parameter name")


# ---------------------------------------------------------------- Python

def _py_logical_lines(code: str, tokens: List[Token]) -> Tuple[List[List[int]], List[str]]:
    """Group significant-token indices into logical lines; also return each line's indentation."""
    lines: List[List[int]] = []
    indents: List[str] = []
    cur: List[int] = []
    depth = 0
    si = -1
    for tok in tokens:
        if tok.trivia:
            if depth == 0 and cur and tok.kind == "whitespace" and _has_real_newline(tok.text):
                lines.append(cur)
                cur = []
            continue
        si += 1
        if not cur:
            line_start = code.rfind("\n", 0, tok.start) + 1
            indents.append(code[line_start:tok.start])
        cur.append(si)
        if tok.kind != LITERAL:
            if tok.text in _OPEN:
                depth += 1
            elif tok.text in _CLOSE:
                depth = max(0, depth - 1)
    if cur:
        lines.append(cur)
    return lines, indents


def _has_real_newline(ws: str) -> bool:
    return "\n" in ws.replace("\\\r\n", "").replace("\\\n", "")


def _py_statements(sig: List[Token], lines: List[List[int]]) -> List[List[int]]:
    """Split logical lines into simple statements; a compound header up to its ``:`` is one statement."""
    stmts: List[List[int]] = []
    for line in lines:
        cur: List[int] = []
        depth = 0
        compound = sig[line[0]].text in _PY_COMPOUND
        for i in line:
            t = sig[i].text
            if sig[i].kind != LITERAL:
                if t in _OPEN:
                    depth += 1
                elif t in _CLOSE:
                    depth -= 1
            if depth == 0 and t == ";":
                if cur:
                    stmts.append(cur)
                cur = []
                continue
            cur.append(i)
            if depth == 0 and t == ":" and compound:
                stmts.append(cur)
                cur = []
                compound = False
        if cur:
            stmts.append(cur)
    return stmts


def _py_target_names(sig: List[Token], seg: List[int], an: _Analysis, declare) -> None:
    """Declare plain names sitting at target positions of an assignment target list."""
    lang = PYTHON
    for pos, i in enumerate(seg):
        tok = sig[i]
        prev = sig[seg[pos - 1]].text if pos > 0 else ""
        nxt = sig[seg[pos + 1]].text if pos + 1 < len(seg) else ""
        at_start = prev in ("", ",", "(", "[", "*")
        at_end = nxt in ("", ",", ")", "]")
        if tok.kind == IDENTIFIER and at_start and at_end:
            declare(i)
        elif _is_reserved(tok, lang):
            an.problems.append(f"reserved word {tok.text!r} in assignment target")


def _python_analyze(code: str, tokens: List[Token], sig: List[Token], pairs: Dict[int, int],
                    an: _Analysis) -> None:
    lang = PYTHON
    n = len(sig)
    decl_at: Set[int] = set()
    excluded: Set[str] = set()

    def declare(k: int, kind: str = VARIABLE) -> None:
        if k in decl_at:
            return
        tok = sig[k]
        if tok.kind == IDENTIFIER:
            an.decls.append(_Decl(tok.text, kind, k, n))
            decl_at.add(k)
        elif _is_reserved(tok, lang):
            an.problems.append(f"reserved word {tok.text!r} in declaration slot")

    def param_list(lo: int, hi: int, kind: str) -> None:
        """Parameters between ``lo`` and ``hi`` (exclusive), comma-separated at depth 0."""
        seg_start = True
        depth = 0
        i = lo
        while i < hi:
            t = sig[i].text
            if t in _OPEN and sig[i].kind != LITERAL:
                depth += 1
            elif t in _CLOSE and sig[i].kind != LITERAL:
                depth -= 1
            elif depth == 0 and t == ",":
                seg_start = True
                i += 1
                continue
            if depth == 0 and seg_start:
                if t in ("*", "**"):
                    i += 1
                    continue
                if t != "/" and not (t == ")" or t == ":"):
                    if sig[i].kind == IDENTIFIER:
                        declare(i, kind)
                    else:
                        an.problems.append(f"{t!r} is not a legal parameter name")
                seg_start = False
            i += 1

    for k, tok in enumerate(sig):
        t = tok.text
        nxt = _txt(sig, k + 1)
        if tok.kind == KEYWORD and t == "def":
            name_i = k + 1
            if name_i < n and sig[name_i].kind == IDENTIFIER and _txt(sig, name_i + 1) == "(":
                an.decls.append(_Decl(sig[name_i].text, METHOD_NAME, name_i, n))
                decl_at.add(name_i)
                lo = name_i + 1
                if lo in pairs:
                    param_list(lo + 1, pairs[lo], PARAMETER)
            else:
                an.problems.append("def is not followed by a function name")
        elif tok.kind == KEYWORD and t == "lambda":
            j = k + 1
            depth = 0
            while j < n:
                tj = sig[j].text
                if tj in _OPEN:
                    depth += 1
                elif tj in _CLOSE:
                    if depth == 0:
                        break
                    depth -= 1
                elif tj == ":" and depth == 0:
                    break
                j += 1
            param_list(k + 1, j, PARAMETER)
        elif tok.kind == KEYWORD and t == "for":
            j = k + 1
            depth = 0
            while j < n and not (depth == 0 and sig[j].text == "in" and sig[j].kind == KEYWORD):
                if depth == 0 and sig[j].text == ":":
                    break
                if sig[j].text in _OPEN:
                    depth += 1
                elif sig[j].text in _CLOSE:
                    depth -= 1
                    if depth < 0:
                        break
                j += 1
            _py_target_names(sig, list(range(k + 1, j)), an, declare)
        elif tok.kind == KEYWORD and t == "as":
            if nxt and sig[k + 1].kind == IDENTIFIER:
                opener = _py_line_opener(sig, k)
                if opener in ("with", "except", "async"):
                    declare(k + 1)
            elif k + 1 < n and _is_reserved(sig[k + 1], lang):
                an.problems.append(f"reserved word {nxt!r} after 'as'")
        elif tok.kind == KEYWORD and t in ("global", "nonlocal"):
            j = k + 1
            while j < n and (sig[j].kind == IDENTIFIER or sig[j].text == ","):
                if sig[j].kind == IDENTIFIER:
                    excluded.add(sig[j].text)
                j += 1
        elif tok.kind == IDENTIFIER and nxt == ":=":
            declare(k)

        if _is_reserved(tok, lang) and (nxt in _ASSIGN_OPS):
            an.problems.append(f"reserved word {t!r} used as an assignment target")

    lines, _ = _py_logical_lines(code, tokens)
    for stmt in _py_statements(sig, lines):
        if sig[stmt[0]].kind == KEYWORD:
            continue
        if len(stmt) > 1 and sig[stmt[1]].text == ":":
            # annotated assignment ``name: type [= value]``
            _py_target_names(sig, stmt[:1], an, declare)
            continue
        segments: List[List[int]] = [[]]
        depth = 0
        for pos, i in enumerate(stmt):
            t = sig[i].text
            if sig[i].kind != LITERAL:
                if t in _OPEN:
                    depth += 1
                elif t in _CLOSE:
                    depth -= 1
            if depth == 0 and t == "lambda":
                break
            if depth == 0 and t in _ASSIGN_OPS and t != ":=":
                segments.append([])
                if t != "=":
                    break
                continue
            segments[-1].append(i)
        for seg in segments[:-1]:
            _py_target_names(sig, seg, an, declare)

    # occurrences
    declared = {d.name for d in an.decls} - excluded
    an.decls = [d for d in an.decls if d.name not in excluded]
    call_parens: Set[int] = set()
    for i, tok in enumerate(sig):
        if tok.text == "(" and i in pairs and i > 0:
            before = sig[i - 1]
            if (before.kind == IDENTIFIER or before.text in (")", "]")) and not (
                    i >= 2 and sig[i - 2].text == "def"):
                call_parens.add(i)
    paren_stack: List[int] = []
    for i, tok in enumerate(sig):
        if tok.kind != LITERAL:
            if tok.text in _OPEN:
                paren_stack.append(i)
            elif tok.text in _CLOSE and paren_stack:
                paren_stack.pop()
        if tok.kind != IDENTIFIER or tok.text not in declared:
            continue
        if _txt(sig, i - 1) == ".":
            continue
        if _txt(sig, i + 1) == "=" and paren_stack and paren_stack[-1] in call_parens:
            continue  # keyword-argument label
        an.occurrences.setdefault(tok.text, []).append(i)


def _py_line_opener(sig: List[Token], k: int) -> str:
    """Best-effort: the keyword that opens the statement containing ``k``."""
    j = k
    while j > 0:
        t = sig[j - 1].text
        if t in (":", ";") or sig[j - 1].kind == KEYWORD and t in ("with", "except", "async", "import", "from"):
            if sig[j - 1].kind == KEYWORD and t in ("with", "except", "async", "import", "from"):
                return t
            return ""
        j -= 1
    return ""


def _py_indentation_ok(code: str, tokens: List[Token], sig: List[Token]) -> bool:
    lines, indents = _py_logical_lines(code, tokens)
    if not lines:
        return True
    stack = [indents[0]]
    opens_block = False
    for line, ind in zip(lines, indents):
        if opens_block:
            if not (len(ind) > len(stack[-1]) and ind.startswith(stack[-1])):
                return False
            stack.append(ind)
        elif ind != stack[-1]:
            if ind.startswith(stack[-1]):
                return False
            while stack and stack[-1] != ind:
                stack.pop()
            if not stack:
                return False
        opens_block = sig[line[-1]].text == ":" and sig[line[-1]].kind != LITERAL
    return not opens_block


_NEEDS_OPERAND = frozenset("= += -= *= /= %= &= |= ^= <<= >>= >>>= **= //= @= == != && || <= >=".split())
_CLOSERS = frozenset(";)]},")


def _missing_operands(sig: Sequence[Token], an: _Analysis) -> None:
    for k, tok in enumerate(sig):
        if tok.kind == OPERATOR and tok.text in _NEEDS_OPERAND:
            nxt = sig[k + 1].text if k + 1 < len(sig) else None
            if nxt is None or nxt in _CLOSERS:
                an.problems.append(f"operator {tok.text!r} at offset {tok.start} has no right operand")


# ---------------------------------------------------------------- public API

def _analyze(code: str, lang: str) -> Tuple[_Analysis, List[Token]]:
    tokens = tokenize(code, lang)
    sig = significant(tokens)
    pairs, balanced = _pair_brackets(sig)
    an = _Analysis(sig=sig, balanced=balanced)
    if lang == JAVA:
        _java_analyze(sig, pairs, an)
    else:
        _python_analyze(code, tokens, sig, pairs, an)
    _missing_operands(sig, an)
    return an, tokens


def extract_identifiers(code: str, lang: str) -> List[IdentifierInfo]:
    """Identifiers declared inside the snippet, in declaration order.

    Covers the method name, its parameters and local variables. Field
    accesses (``obj.name``), type names and calls to external APIs are not
    returned. Each info carries every use site of the name.
    """
    check_lang(lang)
    an, _ = _analyze(code, lang)
    first: Dict[str, _Decl] = {}
    for d in sorted(an.decls, key=lambda d: d.idx):
        first.setdefault(d.name, d)
    infos = []
    reserved = reserved_words(lang)
    for name, d in sorted(first.items(), key=lambda kv: kv[1].idx):
        if name in reserved or name == UNK:
            continue
        occ = tuple(an.sig[i].span for i in sorted(set(an.occurrences.get(name, [])) | {d.idx}))
        infos.append(IdentifierInfo(name, d.kind, occ, an.sig[d.idx].start))
    return infos


def identifier_texts(code: str, lang: str) -> Set[str]:
    """Every identifier token text in the snippet (declared or merely used)."""
    return {t.text for t in tokenize(code, lang) if t.kind == IDENTIFIER}


def substitute(code: str, info: IdentifierInfo, new: str) -> str:
    """Replace every occurrence span of ``info`` with ``new``; no checks."""
    out = []
    last = 0
    for start, end in info.occurrences:
        out.append(code[last:start])
        out.append(new)
        last = end
    out.append(code[last:])
    return "".join(out)


def find_identifier(code: str, name: str, lang: str) -> IdentifierInfo:
    for info in extract_identifiers(code, lang):
        if info.name == name:
            return info
    raise IdentifierNotFound(f"{name!r} is not declared in the snippet")


def rename(code: str, old: str, new: str, lang: str) -> str:
    """Rename the declared identifier ``old`` to ``new`` at every occurrence.

    Raises ``IdentifierNotFound`` if ``old`` is not declared,
    ``InvalidIdentifier`` if ``new`` is not a legal non-reserved identifier
    spelling, and ``IdentifierCollision`` if ``new`` already appears as an
    identifier anywhere in the snippet.
    """
    info = find_identifier(code, old, lang)
    if new == old:
        return code
    if not is_identifier_spelling(new, lang):
        raise InvalidIdentifier(f"{new!r} is not a legal {lang} identifier")
    if new != UNK and new in identifier_texts(code, lang):
        raise IdentifierCollision(f"{new!r} already appears in the snippet")
    return substitute(code, info, new)


def validate(code: str, lang: str) -> bool:
    """Syntactic validity proxy used in place of compilation.

    True iff the code lexes, brackets balance, no reserved word sits in a
    declaration or assignment slot, and: (java) every local is used only
    inside the scope of an earlier declaration and never redeclared in an
    overlapping scope; (python) indentation is consistent.
    """
    try:
        check_lang(lang)
        an, tokens = _analyze(code, lang)
    except LexError:
        return False
    if not an.sig or not an.balanced or an.problems:
        return False
    if lang == PYTHON:
        return _py_indentation_ok(code, tokens, an.sig)
    return True


def problems(code: str, lang: str) -> List[str]:
    """Human-readable reasons why ``validate`` rejects ``code`` (empty when valid)."""
    try:
        an, tokens = _analyze(code, lang)
    except LexError as exc:
        return [str(exc)]
    out = list(an.problems)
    if not an.sig:
        out.append("empty snippet")
    if not an.balanced:
        out.append("unbalanced brackets")
    if lang == PYTHON and an.sig and not _py_indentation_ok(code, tokens, an.sig):
        out.append("inconsistent indentation")
    return out
