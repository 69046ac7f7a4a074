"""Structured prompt signatures: a typed instruction with named I/O fields.

A signature renders to a plain-text prompt whose answer is a set of
bracket-labeled sections, one per output field. The parser extracts sections
by field label and tolerates reordered fields, so any model (or scripted
stub) that emits labeled sections interoperates with every operation.

Response grammar (documented for prompt debugging):

    [field_name]
    ...content until the next [header] line or end of text...

Text fields keep the section body verbatim (stripped). List fields take one
item per non-empty line; leading ``-``, ``*`` or ``1.`` enumerators are
dropped. Pair fields additionally split each line on ``->`` (or ``|``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import ResponseParseError

SHAPES = ("text", "list-of-text", "list-of-pairs")


@dataclass(frozen=True)
class OutputField:
    name: str
    description: str
    shape: str = "text"

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown output shape {self.shape!r}; expected one of {SHAPES}")


@dataclass(frozen=True)
class PromptSignature:
    """An instruction plus declared input and output fields."""

    name: str
    instruction: str
    inputs: tuple[tuple[str, str], ...]
    outputs: tuple[OutputField, ...]

    def __post_init__(self):
        names = [n for n, _ in self.inputs] + [o.name for o in self.outputs]
        if len(set(names)) != len(names):
            raise ValueError(f"signature {self.name!r}: field names must be unique")
        if not self.outputs:
            raise ValueError(f"signature {self.name!r}: at least one output field required")

    def input_names(self) -> list[str]:
        return [n for n, _ in self.inputs]


def signature(
    name: str,
    instruction: str,
    inputs: list[tuple[str, str]],
    outputs: list[tuple[str, str] | tuple[str, str, str]],
) -> PromptSignature:
    """Convenience constructor; output tuples default to text shape."""
    output_fields = [OutputField(*out) for out in outputs]
    return PromptSignature(name, instruction, tuple(inputs), tuple(output_fields))


_SHAPE_HINTS = {
    "text": "free text",
    "list-of-text": 'one item per line, each line starting with "- "',
    "list-of-pairs": 'one pair per line as "- left -> right"',
}


def _format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (list, tuple)):
        lines = []
        for item in value:
            if isinstance(item, (list, tuple)):
                left, right = item
                lines.append(f"- {left} -> {right}")
            else:
                lines.append(f"- {item}")
        return "\n".join(lines)
    return str(value)


def render_prompt(sig: PromptSignature, inputs: dict) -> str:
    """Render the full prompt text for the given inputs (deterministic)."""
    missing = [n for n in sig.input_names() if n not in inputs]
    if missing:
        raise ValueError(f"signature {sig.name!r}: missing input fields {missing}")
    parts = [sig.instruction.rstrip(), "", "--- inputs ---"]
    for field_name, _desc in sig.inputs:
        parts.append(f"[{field_name}]")
        parts.append(_format_value(inputs[field_name]))
        parts.append("")
    parts.append("--- respond with one bracket-labeled section per field ---")
    for out in sig.outputs:
        parts.append(f"[{out.name}]: {out.description} ({_SHAPE_HINTS[out.shape]})")
    return "\n".join(parts)


def render_response(sig: PromptSignature, fields: dict) -> str:
    """Render output fields into the canonical response text.

    The inverse of :func:`parse_response`; scripted providers use it so stub
    responses exercise the real parser.
    """
    parts = []
    for out in sig.outputs:
        if out.name not in fields:
            raise ValueError(f"missing output field {out.name!r}")
        parts.append(f"[{out.name}]")
        parts.append(_format_value(fields[out.name]))
        parts.append("")
    return "\n".join(parts).rstrip() + "\n"


_HEADER_RE = re.compile(r"^\s*\[\s*([A-Za-z0-9_ -]+?)\s*\]\s*:?\s*(.*)$")
_ENUMERATOR_RE = re.compile(r"^\s*(?:[-*•]|\d+[.)])\s+")


def _split_sections(raw: str) -> dict[str, str]:
    sections: dict[str, list[str]] = {}
    current: list[str] | None = None
    for line in raw.splitlines():
        m = _HEADER_RE.match(line)
        if m:
            key = m.group(1).strip().lower().replace(" ", "_")
            current = sections.setdefault(key, [])
            inline = m.group(2).strip()
            if inline:
                current.append(inline)
        elif current is not None:
            current.append(line)
    return {k: "\n".join(v).strip() for k, v in sections.items()}


def _parse_list(body: str) -> list[str]:
    items = []
    for line in body.splitlines():
        line = _ENUMERATOR_RE.sub("", line).strip()
        if line:
            items.append(line)
    return items


def _parse_pairs(body: str, field_name: str, raw: str) -> list[tuple[str, str]]:
    pairs = []
    for item in _parse_list(body):
        if "->" in item:
            left, _, right = item.partition("->")
        elif "|" in item:
            left, _, right = item.partition("|")
        else:
            raise ResponseParseError(
                f"field {field_name!r}: line {item!r} is not a 'left -> right' pair", raw=raw
            )
        left, right = left.strip(), right.strip()
        if not left or not right:
            raise ResponseParseError(
                f"field {field_name!r}: empty side in pair {item!r}", raw=raw
            )
        pairs.append((left, right))
    return pairs


def parse_response(sig: PromptSignature, raw: str) -> dict:
    """Extract the declared output fields from a raw model response."""
    sections = _split_sections(raw)
    result = {}
    for out in sig.outputs:
        key = out.name.lower()
        if key not in sections:
            raise ResponseParseError(
                f"response is missing output field {out.name!r}", raw=raw
            )
        body = sections[key]
        if out.shape == "text":
            if not body:
                raise ResponseParseError(f"output field {out.name!r} is empty", raw=raw)
            result[out.name] = body
        elif out.shape == "list-of-text":
            items = _parse_list(body)
            if not items:
                raise ResponseParseError(f"output field {out.name!r} has no items", raw=raw)
            result[out.name] = items
        else:
            pairs = _parse_pairs(body, out.name, raw)
            if not pairs:
                raise ResponseParseError(f"output field {out.name!r} has no pairs", raw=raw)
            result[out.name] = pairs
    return result
