"""Tokenization, sentence splitting, and date surface normalization."""

from __future__ import annotations

import re

__all__ = [
    "tokenize",
    "split_sentences",
    "normalize_dates",
    "is_numeric_token",
    "is_year_token",
    "MONTH_NAMES",
]

MONTH_NAMES = [
    "january", "february", "march", "april", "may", "june",
    "july", "august", "september", "october", "november", "december",
]

# Punctuation split off as standalone tokens. Hyphens, apostrophes, and
# decimal points inside words are kept attached ("1.83", "o'brien").
_PUNCT = re.compile(r"([,;:!?()\"–—]|\.(?=\s|$)|\.$)")
_WS = re.compile(r"\s+")

_ISO_DATE = re.compile(r"\b(\d{4})-(\d{1,2})-(\d{1,2})\b")
_SLASH_DATE = re.compile(r"\b(\d{1,2})/(\d{1,2})/(\d{4})\b")

_SENT_BOUNDARY = re.compile(r"(?<=[.!?])\s+(?=[A-ZÀ-Þ])")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace, detaching terminal punctuation."""
    spaced = _PUNCT.sub(r" \1 ", text)
    return [t for t in _WS.split(spaced.lower()) if t]


def split_sentences(text: str) -> list[str]:
    """Split raw text on terminal punctuation followed by an uppercase letter."""
    text = text.strip()
    if not text:
        return []
    return [s for s in _SENT_BOUNDARY.split(text) if s.strip()]


def _month_name(m: int) -> str | None:
    if 1 <= m <= 12:
        return MONTH_NAMES[m - 1]
    return None


def normalize_dates(text: str) -> str:
    """Rewrite yyyy-mm-dd and mm/dd/yyyy dates to a month-name surface form.

    Other date layouts pass through unchanged; so do matches with an invalid
    month field.
    """

    def iso_repl(m: re.Match) -> str:
        year, month, day = m.group(1), int(m.group(2)), int(m.group(3))
        name = _month_name(month)
        if name is None:
            return m.group(0)
        return f"{name} {int(m.group(3))} , {year}"

    def slash_repl(m: re.Match) -> str:
        month, day, year = int(m.group(1)), int(m.group(2)), m.group(3)
        name = _month_name(month)
        if name is None:
            return m.group(0)
        return f"{name} {day} , {year}"

    return _SLASH_DATE.sub(slash_repl, _ISO_DATE.sub(iso_repl, text))


def expand_date_tokens(tokens: list[str]) -> list[str]:
    """Token-level date normalization: numeric date tokens become the
    month-name surface form (several tokens); everything else passes through."""
    out: list[str] = []
    for tok in tokens:
        m = _ISO_DATE.fullmatch(tok)
        if m is not None:
            name = _month_name(int(m.group(2)))
            if name is not None:
                out.extend([name, str(int(m.group(3))), ",", m.group(1)])
                continue
        m = _SLASH_DATE.fullmatch(tok)
        if m is not None:
            name = _month_name(int(m.group(1)))
            if name is not None:
                out.extend([name, str(int(m.group(2))), ",", m.group(3)])
                continue
        out.append(tok)
    return out


_NUMERIC = re.compile(r"\d+([.,/\-]\d+)*")
_YEAR = re.compile(r"[12]\d{3}")


def is_numeric_token(token: str) -> bool:
    return bool(_NUMERIC.fullmatch(token))


def is_year_token(token: str) -> bool:
    return bool(_YEAR.fullmatch(token))
