"""Lossless lexers for Java and Python method snippets."""
from __future__ import annotations

import keyword as _pykeyword
import re
from dataclasses import dataclass
from typing import List, Sequence, Tuple

JAVA = "java"
PYTHON = "python"
LANGS = (JAVA, PYTHON)

UNK = "<unk>"
STR_PLACEHOLDER = "<str>"

IDENTIFIER = "identifier"
KEYWORD = "keyword"
LITERAL = "literal"
OPERATOR = "operator"
PUNCTUATION = "punctuation"
COMMENT = "comment_trivia"
WHITESPACE = "whitespace"

JAVA_KEYWORDS = frozenset("""
abstract assert boolean break byte case catch char class const continue default
do double else enum extends final finally float for goto if implements import
instanceof int interface long native new package private protected public return
short static strictfp super switch synchronized this throw throws transient try
void volatile while
""".split())
JAVA_LITERAL_WORDS = frozenset({"true", "false", "null"})
JAVA_PRIMITIVES = frozenset({"boolean", "byte", "char", "short", "int", "long", "float", "double", "void"})

PYTHON_KEYWORDS = frozenset(_pykeyword.kwlist)

_JAVA_OPERATORS = sorted("""
>>>= <<= >>= >>> ... -> :: ++ -- && || == != <= >= += -= *= /= %= &= |= ^= << >>
= + - * / % & | ^ ! ~ ? : < > @
""".split(), key=len, reverse=True)
_JAVA_PUNCT = set("(){}[];,.")

_PYTHON_OPERATORS = sorted("""
**= //= >>= <<= ... -> := ** // << >> <= >= == != += -= *= /= %= &= |= ^= @=
+ - * / % @ & | ^ ~ < > =
""".split(), key=len, reverse=True)
_PYTHON_PUNCT = set("()[]{},:.;")

# alternatives are tried in order, so longest-first gives maximal munch
_JAVA_OPERATOR_RE = re.compile("|".join(map(re.escape, _JAVA_OPERATORS)))
_PYTHON_OPERATOR_RE = re.compile("|".join(map(re.escape, _PYTHON_OPERATORS)))

_JAVA_NUMBER = re.compile(
    r"0[xX][0-9a-fA-F_]*\.?[0-9a-fA-F_]*(?:[pP][+-]?\d+)?[lLfFdD]?"
    r"|0[bB][01_]+[lL]?"
    r"|(?:\d[\d_]*\.?[\d_]*|\.\d[\d_]*)(?:[eE][+-]?\d[\d_]*)?[lLfFdD]?"
)
_PYTHON_NUMBER = re.compile(
    r"0[xX][0-9a-fA-F_]+|0[oO][0-7_]+|0[bB][01_]+"
    r"|(?:\d[\d_]*\.?[\d_]*|\.\d[\d_]*)(?:[eE][+-]?\d[\d_]*)?[jJ]?"
)
_PY_STRING_PREFIX = re.compile(r"(?:[rRbBuUfF]|[rR][bBfF]|[bBfF][rR])?(?='|\")")


class LexError(ValueError):
    """Raised when a snippet cannot be tokenized; ``offset`` is where lexing stopped."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


@dataclass(frozen=True)
class Token:
    text: str
    kind: str
    start: int
    end: int

    @property
    def span(self) -> Tuple[int, int]:
        return (self.start, self.end)

    @property
    def trivia(self) -> bool:
        return self.kind in (WHITESPACE, COMMENT)


def check_lang(lang: str) -> str:
    if lang not in LANGS:
        raise ValueError(f"unsupported language {lang!r}; expected one of {LANGS}")
    return lang


def reserved_words(lang: str) -> frozenset:
    """Words that can never be used as an identifier in ``lang``."""
    if check_lang(lang) == JAVA:
        return JAVA_KEYWORDS | JAVA_LITERAL_WORDS
    return PYTHON_KEYWORDS


def _is_ident_start(ch: str, lang: str) -> bool:
    return ch.isalpha() or ch == "_" or (lang == JAVA and ch == "$")


def _is_ident_part(ch: str, lang: str) -> bool:
    return ch.isalnum() or ch == "_" or (lang == JAVA and ch == "$")


def _scan_quoted(code: str, start: int, quote: str, allow_newline: bool) -> int:
    """Return the index just past the closing ``quote`` starting the scan at ``start``."""
    i = start
    n = len(code)
    while i < n:
        ch = code[i]
        if ch == "\\":
            i += 2
            continue
        if code.startswith(quote, i):
            return i + len(quote)
        if ch == "\n" and not allow_newline:
            break
        i += 1
    return -1


def tokenize(code: str, lang: str) -> List[Token]:
    """Split ``code`` into a lossless token stream.

    Concatenating ``token.text`` over the result reproduces ``code`` exactly.
    The mask spelling ``<unk>`` is always lexed as a single identifier.
    """
    check_lang(lang)
    keywords = JAVA_KEYWORDS if lang == JAVA else PYTHON_KEYWORDS
    operators = _JAVA_OPERATOR_RE if lang == JAVA else _PYTHON_OPERATOR_RE
    punct = _JAVA_PUNCT if lang == JAVA else _PYTHON_PUNCT
    number = _JAVA_NUMBER if lang == JAVA else _PYTHON_NUMBER

    tokens: List[Token] = []
    i, n = 0, len(code)
    while i < n:
        ch = code[i]
        start = i

        if ch in " \t\r\n\f\v" or (lang == PYTHON and ch == "\\" and code[i + 1:i + 2] == "\n"):
            while i < n:
                if code[i] in " \t\r\n\f\v":
                    i += 1
                elif lang == PYTHON and code[i] == "\\" and code[i + 1:i + 2] == "\n":
                    i += 2
                else:
                    break
            tokens.append(Token(code[start:i], WHITESPACE, start, i))
            continue

        if lang == JAVA and code.startswith("//", i) or lang == PYTHON and ch == "#":
            end = code.find("\n", i)
            i = n if end < 0 else end
            tokens.append(Token(code[start:i], COMMENT, start, i))
            continue

        if lang == JAVA and code.startswith("/*", i):
            end = code.find("*/", i + 2)
            if end < 0:
                raise LexError("unterminated block comment", start)
            i = end + 2
            tokens.append(Token(code[start:i], COMMENT, start, i))
            continue

        if code.startswith(UNK, i) and not (i + 5 < n and _is_ident_part(code[i + 5], lang)):
            i += len(UNK)
            tokens.append(Token(UNK, IDENTIFIER, start, i))
            continue

        if lang == PYTHON:
            m = _PY_STRING_PREFIX.match(code, i)
            if m is not None:
                j = m.end()
                quote = code[j:j + 3] if code[j:j + 3] in ('"""', "'''") else code[j]
                end = _scan_quoted(code, j + len(quote), quote, allow_newline=len(quote) == 3)
                if end < 0:
                    raise LexError("unterminated string literal", start)
                i = end
                tokens.append(Token(code[start:i], LITERAL, start, i))
                continue
        elif ch in "\"'":
            quote = '"""' if code.startswith('"""', i) else ch
            end = _scan_quoted(code, i + len(quote), quote, allow_newline=len(quote) == 3)
            if end < 0:
                raise LexError("unterminated " + ("char" if ch == "'" else "string") + " literal", start)
            i = end
            tokens.append(Token(code[start:i], LITERAL, start, i))
            continue

        if _is_ident_start(ch, lang):
            i += 1
            while i < n and _is_ident_part(code[i], lang):
                i += 1
            word = code[start:i]
            if word in keywords:
                kind = LITERAL if lang == PYTHON and word in ("True", "False", "None") else KEYWORD
            elif lang == JAVA and word in JAVA_LITERAL_WORDS:
                kind = LITERAL
            else:
                kind = IDENTIFIER
            tokens.append(Token(word, kind, start, i))
            continue

        if ch.isdigit() or (ch == "." and code[i + 1:i + 2].isdigit()):
            m = number.match(code, i)
            i = m.end() if m is not None and m.end() > i else i + 1
            tokens.append(Token(code[start:i], LITERAL, start, i))
            continue

        m = operators.match(code, i)
        if m is not None:
            i = m.end()
            tokens.append(Token(m.group(), OPERATOR, start, i))
        elif ch in punct:
            i += 1
            tokens.append(Token(ch, PUNCTUATION, start, i))
        else:
            raise LexError(f"unexpected character {ch!r}", start)
    return tokens


def detokenize(tokens: Sequence[Token]) -> str:
    return "".join(t.text for t in tokens)


def significant(tokens: Sequence[Token]) -> List[Token]:
    """Drop whitespace and comments."""
    return [t for t in tokens if not t.trivia]


def is_identifier_spelling(name: str, lang: str) -> bool:
    """True when ``name`` lexes as exactly one identifier token (``<unk>`` included)."""
    try:
        toks = tokenize(name, lang)
    except LexError:
        return False
    return len(toks) == 1 and toks[0].kind == IDENTIFIER


def split_subtokens(token_text: str) -> List[str]:
    """Split an identifier at underscores and case boundaries, lowercased.

    >>> split_subtokens("avgVelocity")
    ['avg', 'velocity']
    >>> split_subtokens("HTMLParser2")
    ['html', 'parser2']
    """
    if token_text == UNK:
        return [UNK]
    pieces: List[str] = []
    for part in re.split(r"[_$]+", token_text):
        if not part:
            continue
        current = part[0]
        for prev, ch, nxt in zip(part, part[1:], list(part[2:]) + [""]):
            boundary = (
                (prev.islower() or prev.isdigit()) and ch.isupper()
                or prev.isupper() and ch.isupper() and nxt.islower()
            )
            if boundary:
                pieces.append(current)
                current = ch
            else:
                current += ch
        pieces.append(current)
    return [p.lower() for p in pieces if p]


def code_subtokens(code: str, lang: str) -> List[str]:
    """Subtoken stream of a whole program.

    Identifiers are split into subtokens, string and char literals collapse
    to ``<str>``, and every other significant token is kept lowercased.
    """
    out: List[str] = []
    for tok in significant(tokenize(code, lang)):
        if tok.kind == IDENTIFIER:
            out.extend(split_subtokens(tok.text))
        elif tok.kind == LITERAL and tok.text[-1] in "'\"":
            out.append(STR_PLACEHOLDER)
        else:
            out.append(tok.text.lower())
    return out
