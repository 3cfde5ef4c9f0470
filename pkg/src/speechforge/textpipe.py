"""Instruction preparation: optional question synthesis from raw text
snippets, two LLM filters (speakability, clarity), and the spoken-style
rewrite that yields each dialogue's instruction/response pair.

Every model call goes through a ChatBackend; replies are expected to carry
JSON where the templates ask for it, and anything unparseable counts as a
drop for that stage rather than an error, since flaky formatting is normal
for hosted models.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import prompts
from .backends.base import ChatBackend

DEFAULT_TEMPERATURE = 0.7

_CJK = re.compile(r"[一-鿿]")


def language_of(text: str) -> str:
    return "zh" if _CJK.search(text) else "en"


def parse_json_reply(reply: str) -> dict | None:
    """Pull the first JSON object out of a model reply, if there is one."""
    text = reply.strip()
    if text.startswith("```"):
        text = re.sub(r"^```[a-zA-Z]*\n?|```$", "", text).strip()
    start = text.find("{")
    end = text.rfind("}")
    if start < 0 or end <= start:
        return None
    try:
        obj = json.loads(text[start:end + 1])
    except json.JSONDecodeError:
        return None
    return obj if isinstance(obj, dict) else None


@dataclass(frozen=True)
class SpokenPair:
    instruction: str
    response: str


@dataclass(frozen=True)
class TextDialogue:
    source_id: str
    instruction: str
    response: str
    language: str


@dataclass(frozen=True)
class TextPipeStats:
    total: int = 0
    unsuitable: int = 0
    unclear: int = 0
    rewrite_failed: int = 0

    @property
    def kept(self) -> int:
        return self.total - self.unsuitable - self.unclear - self.rewrite_failed


@dataclass(frozen=True)
class TextPipeResult:
    dialogues: tuple[TextDialogue, ...]
    stats: TextPipeStats


def synthesize_question(chat: ChatBackend, info_piece: str,
                        temperature: float = DEFAULT_TEMPERATURE) -> str:
    prompt = prompts.fill(prompts.load("question_synthesis"),
                          instruction=info_piece)
    return chat.complete(prompt, temperature=temperature).strip()


def _bool_verdict(chat: ChatBackend, template: str, instruction: str,
                  key: str, temperature: float) -> bool:
    prompt = prompts.fill(prompts.load(template), instruction=instruction)
    obj = parse_json_reply(chat.complete(prompt, temperature=temperature))
    if obj is None or not isinstance(obj.get(key), bool):
        return False  # unparseable verdicts drop the item, never keep it
    return obj[key]


def check_suitability(chat: ChatBackend, instruction: str,
                      temperature: float = DEFAULT_TEMPERATURE) -> bool:
    return _bool_verdict(chat, "suitability_filter", instruction,
                         "is_suitable_for_speech", temperature)


def check_clarity(chat: ChatBackend, instruction: str,
                  temperature: float = DEFAULT_TEMPERATURE) -> bool:
    return _bool_verdict(chat, "clarity_filter", instruction,
                         "clear_enough", temperature)


def rewrite_spoken(chat: ChatBackend, command: str,
                   temperature: float = DEFAULT_TEMPERATURE) -> SpokenPair | None:
    prompt = prompts.fill(prompts.load("spoken_style"), Command=command)
    obj = parse_json_reply(chat.complete(prompt, temperature=temperature))
    if obj is None:
        return None
    instruction = obj.get("instruction")
    response = obj.get("response")
    if not isinstance(instruction, str) or not instruction.strip():
        return None
    if not isinstance(response, str) or not response.strip():
        return None
    return SpokenPair(instruction=instruction.strip(), response=response.strip())


def process_instructions(chat: ChatBackend, seeds: Iterable[str],
                         source: str = "seed",
                         synthesize_questions: bool = False,
                         temperature: float = DEFAULT_TEMPERATURE) -> TextPipeResult:
    """Run every seed through the text stages, keeping per-stage drop counts."""
    dialogues: list[TextDialogue] = []
    total = unsuitable = unclear = failed = 0
    for i, seed in enumerate(seeds):
        total += 1
        text = seed
        if synthesize_questions:
            text = synthesize_question(chat, text, temperature)
        if not check_suitability(chat, text, temperature):
            unsuitable += 1
            continue
        if not check_clarity(chat, text, temperature):
            unclear += 1
            continue
        pair = rewrite_spoken(chat, text, temperature)
        if pair is None:
            failed += 1
            continue
        dialogues.append(TextDialogue(
            source_id=f"{source}_{i:06d}",
            instruction=pair.instruction,
            response=pair.response,
            language=language_of(pair.instruction),
        ))
    return TextPipeResult(
        dialogues=tuple(dialogues),
        stats=TextPipeStats(total=total, unsuitable=unsuitable,
                            unclear=unclear, rewrite_failed=failed),
    )
