"""Prompt template loading and placeholder handling.

Templates are plain text files shipped with the package.  Placeholders look
like ``{name}``; substitution is literal string replacement, so template
bodies may freely contain JSON braces (``{"key": <bool>}`` never collides
with a placeholder because placeholder names are identifier-shaped).
"""

from __future__ import annotations

import re
from importlib import resources

_PLACEHOLDER = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")

TEMPLATE_NAMES = (
    "question_synthesis",
    "suitability_filter",
    "clarity_filter",
    "spoken_style",
    "instruction_following_judge",
)


def load(name: str) -> str:
    if name not in TEMPLATE_NAMES:
        raise KeyError(f"unknown prompt template {name!r}")
    return (resources.files(__package__) / f"{name}.txt").read_text(encoding="utf-8")


def placeholders(template: str) -> list[str]:
    return _PLACEHOLDER.findall(template)


def fill(template: str, **values: str) -> str:
    missing = set(placeholders(template)) - set(values)
    if missing:
        raise KeyError(f"unfilled placeholders: {sorted(missing)}")
    out = template
    for key, value in values.items():
        out = out.replace("{" + key + "}", value)
    return out


def to_regex(template: str) -> re.Pattern:
    """A regex matching any filled copy of the template, capturing the values."""
    parts = []
    last = 0
    for m in _PLACEHOLDER.finditer(template):
        parts.append(re.escape(template[last:m.start()]))
        parts.append(f"(?P<{m.group(1)}>.*?)")
        last = m.end()
    parts.append(re.escape(template[last:]))
    return re.compile("".join(parts), re.DOTALL)


def extract(template: str, filled: str) -> dict[str, str] | None:
    """Recover placeholder values from a filled prompt, or None if no match."""
    m = to_regex(template).fullmatch(filled)
    return m.groupdict() if m else None
