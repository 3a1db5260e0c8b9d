"""Entity masking: swap recognized spans for ``{type}`` placeholders.

Only the entity types that occur in the current context's intent examples
are masked; everything else, including the text between spans, is left
untouched.
"""

from __future__ import annotations


def mask_entities(utterance: str, spans: list, allowed_types: set) -> str:
    ordered = sorted(spans, key=lambda s: s.start)
    for prev, cur in zip(ordered, ordered[1:]):
        if cur.start < prev.end:
            raise ValueError(f"overlapping spans at {prev.start}..{prev.end} and {cur.start}..{cur.end}")
    out = []
    pos = 0
    for span in ordered:
        out.append(utterance[pos : span.start])
        if span.type_name in allowed_types:
            out.append("{" + span.type_name + "}")
        else:
            out.append(utterance[span.start : span.end])
        pos = span.end
    out.append(utterance[pos:])
    return "".join(out)
