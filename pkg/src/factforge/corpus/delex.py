"""Delexicalisation of numeric expressions and its inverse.

Numeric tokens in the text that also occur in a property value are replaced
by a slot token DLX_<property>_<position> where the position is 1-based over
the value token sequence. Years and numbers with no matching property value
become the generic YEAR / NUMERIC tokens.
"""

from __future__ import annotations

from .tokenization import is_numeric_token, is_year_token
from .types import NUMERIC, YEAR, DelexMap, Document, PropertySet

__all__ = ["delex_token_key", "delexicalise", "relexicalise", "is_delex_token"]

DELEX_PREFIX = "DLX_"


def delex_token_key(property_tokens: tuple[str, ...], position: int) -> str:
    return f"{DELEX_PREFIX}{'_'.join(property_tokens)}_{position}"


def is_delex_token(token: str) -> bool:
    return token.startswith(DELEX_PREFIX)


def _value_matches(pset: PropertySet, surface: str):
    """All (property, 1-based position) slots whose value token equals surface."""
    for pair in pset.pairs:
        if pair.is_empty_relation:
            continue
        for pos, vtok in enumerate(pair.value, start=1):
            if vtok == surface:
                yield pair.property, pos


def delexicalise(pset: PropertySet, doc: Document) -> tuple[PropertySet, Document]:
    """Replace numeric text tokens with slot tokens, recording the mapping.

    Matching is first-wins in property order; a candidate slot whose key is
    already bound to a different surface is skipped rather than rebound, and
    a numeric token with no bindable slot falls back to YEAR/NUMERIC.
    """
    delex_map = DelexMap(doc.delex_map.entries)
    new_sentences: list[list[str]] = []
    for sentence in doc.sentences:
        out: list[str] = []
        for token in sentence:
            if not is_numeric_token(token):
                out.append(token)
                continue
            replacement = None
            for prop, pos in _value_matches(pset, token):
                key = delex_token_key(prop, pos)
                bound = delex_map.get(key)
                if bound is None or bound == token:
                    delex_map.add(key, token)
                    replacement = key
                    break
            if replacement is None:
                replacement = YEAR if is_year_token(token) else NUMERIC
            out.append(replacement)
        new_sentences.append(out)
    return pset, Document(new_sentences, delex_map, doc.raw_text)


def relexicalise(tokens: list[str], delex_map: DelexMap) -> tuple[list[str], int]:
    """Restore surface forms for slot tokens; unmapped slots stay verbatim.

    Returns the restored sequence and the count of unmapped slot tokens.
    """
    out: list[str] = []
    unmapped = 0
    for token in tokens:
        if is_delex_token(token):
            surface = delex_map.get(token)
            if surface is None:
                unmapped += 1
                out.append(token)
            else:
                out.append(surface)
        else:
            out.append(token)
    return out, unmapped
