"""Turn-level attribute skimming.

Skimmer rules run on every raw utterance regardless of where the dialogue
currently is.  A rule fires only when all of its patterns match, and then
writes one value to a session/user/community attribute ("by the way, I went
there with my brother" can set ``user.has_sibling`` even mid-movie-talk).
"""

from __future__ import annotations

import re

from .model.nodes import SkimmerRule


def _resolve_value(rule: SkimmerRule, first_match: "re.Match"):
    value = rule.value
    if isinstance(value, str) and value.startswith("$"):
        group = value[1:]
        try:
            return first_match.group(int(group) if group.isdigit() else group)
        except (IndexError, re.error):
            return None
    return value


def skim(utterance: str, rules: list) -> list:
    """Apply every rule to ``utterance``; returns ``(AttributeRef, value)``
    pairs in rule-declaration order.

    Matching is case-insensitive on the raw, unmasked utterance.  A rule
    fires at most once; all of its patterns must match; ``$name``/``$N``
    values resolve against the first pattern's match.
    """
    writes: list = []
    for rule in rules:
        first_match = None
        fired = True
        for i, pattern in enumerate(rule.patterns):
            m = re.search(pattern, utterance, re.IGNORECASE)
            if m is None:
                fired = False
                break
            if i == 0:
                first_match = m
        if not fired or first_match is None:
            continue
        value = _resolve_value(rule, first_match)
        if value is None and isinstance(rule.value, str) and rule.value.startswith("$"):
            # Group did not participate in the match; skip rather than write null.
            continue
        writes.append((rule.attribute, value))
    return writes
