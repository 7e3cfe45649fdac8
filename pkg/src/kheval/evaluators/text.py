"""Korean-aware normalisation, answer extraction and the Hangul ratio."""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass

EXTRACTION_RULES_VERSION = "1"

_PUNCT = set(".,:;!?\"'()[]")
_WS = re.compile(r"\s+")
_LETTER = re.compile(r"(?<![A-Za-z0-9])([A-E])(?![A-Za-z0-9])")
# an option letter opening the marker tail: "B", "(B)", "B.", "B) ...", "B입니다"
_LEAD_LETTER = re.compile(r"\s*[(\[]?([A-Za-z])(?:[)\].:]|(?=\s|$|입니다|이다|이에요|예요|번))")
_NUMBER = re.compile(r"[-+]?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?(?:/\d+)?%?")

# (start, end) inclusive ranges: syllables, jamo, compatibility jamo
HANGUL_RANGES = ((0xAC00, 0xD7A3), (0x1100, 0x11FF), (0x3130, 0x318F))


def _fold_latin(ch: str) -> str:
    if ch.isalpha() and ch.lower() != ch and unicodedata.name(ch, "").startswith("LATIN"):
        return ch.lower()
    return ch


def normalize_text(text: str) -> str:
    """NFC, single spaces, lowercase Latin, no edge punctuation. Hangul is untouched."""
    text = unicodedata.normalize("NFC", text)
    text = _WS.sub(" ", text).strip()
    text = "".join(_fold_latin(c) for c in text)
    start, end = 0, len(text)
    while start < end and (text[start] in _PUNCT or text[start].isspace()):
        start += 1
    while end > start and (text[end - 1] in _PUNCT or text[end - 1].isspace()):
        end -= 1
    return text[start:end]


@dataclass(frozen=True)
class ExtractionRules:
    """Ordered extraction rules; the first one that matches decides.

    1. text after the last answer marker (up to the end of that line);
       an option letter opening that text wins over the rest of the line
    2. the last standalone option letter
    3. the last number
    4. the whole trimmed text
    """

    markers: tuple[str, ...] = ("정답:", "정답은", "답:", "Answer:", "answer is")
    letters: str = "ABCDE"
    version: str = EXTRACTION_RULES_VERSION

    def as_dict(self) -> dict:
        return {"markers": list(self.markers), "letters": self.letters, "version": self.version}


DEFAULT_RULES = ExtractionRules()


def _after_marker(text: str, markers: tuple[str, ...]) -> str | None:
    folded = text.lower()
    best_end = -1
    for marker in markers:
        pos = folded.rfind(marker.lower())
        if pos >= 0:
            best_end = max(best_end, pos + len(marker))
    if best_end < 0:
        return None
    for line in text[best_end:].split("\n"):
        if line.strip():
            return line
    return None


def extract_answer(text: str, rules: ExtractionRules = DEFAULT_RULES) -> str:
    if not text or not text.strip():
        return ""
    tail = _after_marker(text, rules.markers)
    if tail is not None and normalize_text(tail):
        lead = _LEAD_LETTER.match(tail)
        if lead and lead.group(1).upper() in rules.letters:
            return lead.group(1).lower()
        return normalize_text(tail)
    letters = [m.group(1) for m in _LETTER.finditer(text) if m.group(1) in rules.letters]
    if letters:
        return normalize_text(letters[-1])
    numbers = _NUMBER.findall(text)
    if numbers:
        return normalize_text(numbers[-1])
    return normalize_text(text.strip())


def letter_index(answer: str) -> int | None:
    """Option index for a normalised single-letter answer such as ``"b"``."""
    if len(answer) == 1 and "a" <= answer <= "z":
        return ord(answer) - ord("a")
    return None


def is_hangul(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in HANGUL_RANGES)


def hangul_ratio(text: str) -> float:
    """Share of alphabetic code points that are Hangul; 1.0 when nothing is alphabetic."""
    letters = [c for c in text if c.isalpha()]
    if not letters:
        return 1.0
    return sum(1 for c in letters if is_hangul(c)) / len(letters)
