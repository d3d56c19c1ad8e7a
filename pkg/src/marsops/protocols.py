"""Group-specific technical dialects and the translator relay.

The built-in lexicons are synthetic: 22 shared concepts across the ten groups
that appear in the default shortcut whitelist.
"""
from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .errors import TranslationError

TRANSLATOR = "COM_06"


class ProtocolMode(str, Enum):
    OFF = "off"
    HETERO = "hetero"


@dataclass(frozen=True)
class Lexicon:
    group: str
    terms: Mapping[str, str]  # concept -> surface term

    def __post_init__(self):
        surfaces = list(self.terms.values())
        if len(set(surfaces)) != len(surfaces):
            raise TranslationError(f"{self.group}: surface terms must be unique")
        object.__setattr__(self, "terms", dict(self.terms))

    @property
    def concepts(self) -> frozenset[str]:
        return frozenset(self.terms)

    def concept_of(self, term: str) -> str | None:
        return self._reverse().get(term)

    def _reverse(self) -> dict[str, str]:
        return {v: k for k, v in self.terms.items()}

    def __hash__(self):
        return hash((self.group, tuple(sorted(self.terms.items()))))


@dataclass(frozen=True)
class TranslationRecord:
    source_group: str
    target_group: str
    original: str
    translated: str
    mapped_terms: tuple[tuple[str, str], ...]
    unmapped: tuple[str, ...]
    translator: str = TRANSLATOR

    def record(self) -> dict:
        return {
            "type": "translation",
            "source_group": self.source_group,
            "target_group": self.target_group,
            "original": self.original,
            "translated": self.translated,
            "mapped_terms": [list(p) for p in self.mapped_terms],
            "unmapped": list(self.unmapped),
            "translator": self.translator,
        }


def _term_pattern(terms: Iterable[str]) -> re.Pattern | None:
    ordered = sorted(set(terms), key=lambda t: (-len(t), t))
    if not ordered:
        return None
    alternation = "|".join(re.escape(t) for t in ordered)
    return re.compile(rf"(?<![\w-])(?:{alternation})(?![\w-])")


def lexicons_from_rows(rows: Iterable[Mapping[str, str]]) -> dict[str, Lexicon]:
    table: dict[str, dict[str, str]] = {}
    for row in rows:
        try:
            concept, group, term = row["concept"].strip(), row["group"].strip(), row["term"].strip()
        except (KeyError, AttributeError) as exc:
            raise TranslationError(f"lexicon row missing field: {row!r}") from exc
        table.setdefault(group, {})[concept] = term
    lexicons = {g: Lexicon(g, terms) for g, terms in table.items()}
    keys = {lex.concepts for lex in lexicons.values()}
    if len(keys) > 1:
        raise TranslationError("all lexicons must cover the same concept set")
    return lexicons


def load_lexicons(path: str | Path) -> dict[str, Lexicon]:
    with open(path, newline="", encoding="utf-8") as fh:
        return lexicons_from_rows(csv.DictReader(fh))


@lru_cache(maxsize=1)
def _default_lexicons() -> tuple[Lexicon, ...]:
    text = resources.files("marsops.data").joinpath("lexicons.csv").read_text(encoding="utf-8")
    return tuple(lexicons_from_rows(csv.DictReader(io.StringIO(text))).values())


def default_lexicons() -> dict[str, Lexicon]:
    return {lex.group: lex for lex in _default_lexicons()}


class Translator:
    """Longest-match, whole-word term replacement between two dialects.

    ``vocabulary`` is every known surface term; terms from a third dialect that
    have no mapping in the source lexicon pass through verbatim and are flagged.
    """

    def __init__(self, lexicons: Mapping[str, Lexicon]):
        self.lexicons = dict(lexicons)
        self._patterns = {g: _term_pattern(lex.terms.values()) for g, lex in self.lexicons.items()}
        self._all = _term_pattern(t for lex in self.lexicons.values() for t in lex.terms.values())

    def covers(self, group: str) -> bool:
        return group in self.lexicons

    def translate(self, msg: str, src: str, dst: str) -> tuple[str, TranslationRecord]:
        return translate(msg, self.lexicons[src], self.lexicons[dst],
                         _pattern=self._patterns[src], _vocab=self._all)


def translate(msg: str, src: Lexicon, dst: Lexicon, *, vocabulary: Iterable[str] = (),
              _pattern: re.Pattern | None = None, _vocab: re.Pattern | None = None,
              ) -> tuple[str, TranslationRecord]:
    if src.group == dst.group:
        raise TranslationError(f"source and target dialect are both {src.group}")
    pattern = _pattern if _pattern is not None else _term_pattern(src.terms.values())
    vocab = _vocab if _vocab is not None else _term_pattern(vocabulary)
    reverse = src._reverse()
    out: list[str] = []
    mapped: list[tuple[str, str]] = []
    unmapped: list[str] = []
    pos = 0

    def scan_unmapped(segment: str) -> None:
        if vocab is None:
            return
        for m in vocab.finditer(segment):
            if m.group(0) not in reverse and m.group(0) not in unmapped:
                unmapped.append(m.group(0))

    for m in (pattern.finditer(msg) if pattern is not None else ()):
        term = m.group(0)
        target = dst.terms.get(reverse[term])
        segment = msg[pos:m.start()]
        scan_unmapped(segment)
        out.append(segment)
        if target is None:
            out.append(term)
            unmapped.append(term)
        else:
            out.append(target)
            mapped.append((term, target))
        pos = m.end()
    scan_unmapped(msg[pos:])
    out.append(msg[pos:])
    text = "".join(out)
    return text, TranslationRecord(src.group, dst.group, msg, text, tuple(mapped), tuple(unmapped))
