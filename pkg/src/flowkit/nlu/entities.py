"""Rule-based entity recognition with value normalization.

Patterns are ordinary regular expressions; named capture groups feed the
normalizers (``hour``/``minute`` for time-of-day, ``year``/``month``/``day``
for dates, ``amount``/``currency`` for money, ``value`` for numbers).
Recognition is deterministic: left-to-right, longest match wins, spans never
overlap.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from ..model.nodes import EntityRule

_MONTHS = {
    "jan": 1, "january": 1, "feb": 2, "february": 2, "mar": 3, "march": 3,
    "apr": 4, "april": 4, "may": 5, "jun": 6, "june": 6, "jul": 7, "july": 7,
    "aug": 8, "august": 8, "sep": 9, "september": 9, "oct": 10, "october": 10,
    "nov": 11, "november": 11, "dec": 12, "december": 12,
}

_CURRENCIES = {
    "$": "USD", "usd": "USD", "dollar": "USD", "dollars": "USD",
    "€": "EUR", "eur": "EUR", "euro": "EUR", "euros": "EUR",
    "£": "GBP", "gbp": "GBP", "pound": "GBP", "pounds": "GBP",
    "czk": "CZK", "koruna": "CZK", "korunas": "CZK",
}


@dataclass(frozen=True)
class EntitySpan:
    start: int
    end: int  # exclusive
    surface: str
    type_name: str
    normalized: object


def _int_or_none(text: Optional[str]) -> Optional[int]:
    if text is None:
        return None
    try:
        return int(text)
    except ValueError:
        return None


def _normalize_integer(surface: str, groups: dict):
    raw = groups.get("value") or surface
    digits = re.sub(r"[,\s]", "", raw)
    try:
        return int(digits)
    except ValueError:
        return surface


def _normalize_decimal(surface: str, groups: dict):
    raw = groups.get("value") or surface
    try:
        return float(re.sub(r"[,\s]", "", raw))
    except ValueError:
        return surface


def _normalize_time(surface: str, groups: dict):
    hour = _int_or_none(groups.get("hour"))
    minute = _int_or_none(groups.get("minute"))
    second = _int_or_none(groups.get("second"))
    if hour is None:
        m = re.search(r"(\d{1,2})(?::(\d{2}))?", surface)
        if m is None:
            return surface
        hour = int(m.group(1))
        minute = _int_or_none(m.group(2))
    ampm = (groups.get("ampm") or "").lower()
    if not ampm:
        m = re.search(r"\b([ap])\.?m\.?\b", surface, re.IGNORECASE)
        if m:
            ampm = m.group(1).lower() + "m"
    if ampm.startswith("p") and hour < 12:
        hour += 12
    elif ampm.startswith("a") and hour == 12:
        hour = 0
    result = {"hour": hour, "minute": minute if minute is not None else 0}
    if second is not None:
        result["second"] = second
    return result


def _normalize_date(surface: str, groups: dict):
    year = _int_or_none(groups.get("year"))
    day = _int_or_none(groups.get("day"))
    month = _int_or_none(groups.get("month"))
    if month is None and groups.get("month"):
        month = _MONTHS.get(groups["month"].lower())
    if year is None and month is None and day is None:
        m = re.search(r"(\d{4})-(\d{2})-(\d{2})", surface)
        if m is None:
            return surface
        year, month, day = int(m.group(1)), int(m.group(2)), int(m.group(3))
    result = {}
    if year is not None:
        result["year"] = year
    if month is not None:
        result["month"] = month
    if day is not None:
        result["day"] = day
    return result or surface


def _normalize_money(surface: str, groups: dict):
    raw_amount = groups.get("amount")
    if raw_amount is None:
        m = re.search(r"\d+(?:[.,]\d+)?", surface)
        raw_amount = m.group(0) if m else None
    if raw_amount is None:
        return surface
    try:
        amount = float(raw_amount.replace(",", ""))
    except ValueError:
        return surface
    currency = None
    raw_currency = groups.get("currency")
    if raw_currency:
        currency = _CURRENCIES.get(raw_currency.lower(), raw_currency.upper())
    else:
        for token, code in _CURRENCIES.items():
            if token in surface.lower():
                currency = code
                break
    result = {"amount": amount}
    if currency:
        result["currency"] = currency
    return result


_NORMALIZERS = {
    "none": lambda surface, groups: surface,
    "integer": _normalize_integer,
    "decimal": _normalize_decimal,
    "time-of-day": _normalize_time,
    "date": _normalize_date,
    "url": lambda surface, groups: surface,
    "money": _normalize_money,
}


def normalize(normalizer: str, surface: str, groups: dict):
    fn = _NORMALIZERS.get(normalizer)
    if fn is None:
        raise ValueError(f"unknown normalizer {normalizer!r}")
    return fn(surface, {k: v for k, v in groups.items() if v is not None})


def recognize_entities(utterance: str, rules: list) -> list:
    """Scan ``utterance`` with every rule pattern and resolve overlaps.

    Candidates are chosen left to right; at equal starts the longest match
    wins, then earlier rules, then earlier patterns within a rule.
    """
    candidates = []
    for rule_idx, rule in enumerate(rules):
        for pattern_idx, pattern in enumerate(rule.patterns):
            compiled = re.compile(pattern)
            for m in compiled.finditer(utterance):
                if m.start() == m.end():
                    continue
                candidates.append((m.start(), -(m.end() - m.start()), rule_idx, pattern_idx, m, rule))
    candidates.sort(key=lambda c: c[:4])

    spans = []
    taken_until = -1
    for start, _neg_len, _r, _p, match, rule in candidates:
        if start < taken_until or (spans and start < spans[-1].end):
            continue
        if any(not (match.end() <= s.start or match.start() >= s.end) for s in spans):
            continue
        surface = match.group(0)
        spans.append(
            EntitySpan(
                start=match.start(),
                end=match.end(),
                surface=surface,
                type_name=rule.type_name,
                normalized=normalize(rule.normalizer, surface, match.groupdict()),
            )
        )
        taken_until = match.end()
    return spans


def span_to_dict(span: EntitySpan) -> dict:
    return {
        "start": span.start,
        "end": span.end,
        "surface": span.surface,
        "type_name": span.type_name,
        "normalized": span.normalized,
    }
