"""Lexing, identifier discovery, renaming and validity checking for Java and Python snippets."""
from .analysis import (
    METHOD_NAME, PARAMETER, VARIABLE, IdentifierCollision, IdentifierInfo, IdentifierNotFound,
    InvalidIdentifier, RenameError, extract_identifiers, find_identifier, identifier_texts, problems,
    rename, substitute, validate,
)
from .lexer import (
    JAVA, LANGS, PYTHON, UNK, LexError, Token, code_subtokens, detokenize, is_identifier_spelling,
    reserved_words, significant, split_subtokens, tokenize,
)

__all__ = [
    "JAVA", "PYTHON", "LANGS", "UNK", "METHOD_NAME", "PARAMETER", "VARIABLE",
    "Token", "IdentifierInfo", "LexError", "RenameError", "IdentifierNotFound", "IdentifierCollision",
    "InvalidIdentifier", "tokenize", "detokenize", "significant", "split_subtokens", "code_subtokens",
    "is_identifier_spelling", "reserved_words", "extract_identifiers", "find_identifier",
    "identifier_texts", "substitute", "rename", "validate", "problems",
]
