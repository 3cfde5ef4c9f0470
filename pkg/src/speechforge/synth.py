"""Dialogue audio rendering.

Each text dialogue becomes a two-channel session: the user's instruction on
channel 0, the agent's response on channel 1, back to back on the timeline.
Every turn is synthesized with its speaker's embedding, watermarked, and
written to ``<id>/<id>_<turn>_mark.wav`` under the corpus root.  Speaker
assignment is a pure function of (seed, dialogue id), so re-running a build
produces identical audio and metadata.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from . import watermark
from .audio import write_wav
from .backends.base import DEFAULT_SAMPLE_RATE, TTSBackend
from .records import (
    AudioInfo,
    ChannelInfo,
    CorpusStore,
    DialogueRecord,
    SpeakerRef,
    TurnRecord,
    validate_record,
)
from .textpipe import TextDialogue
from .voices import LibrarySpeaker, VoiceLibrary


class SynthesisError(Exception):
    pass


@dataclass(frozen=True)
class SynthesisSpec:
    sample_rate: int = DEFAULT_SAMPLE_RATE
    watermark_key: int = 0
    watermark_strength_db: float = watermark.DEFAULT_STRENGTH_DB


def _hash(seed: int, dialogue_id: str) -> int:
    h = hashlib.blake2b(f"{seed}\x00{dialogue_id}".encode(), digest_size=16)
    return int.from_bytes(h.digest(), "big")


def assign_speakers(library: VoiceLibrary, dialogue: TextDialogue,
                    seed: int = 0) -> tuple[LibrarySpeaker, LibrarySpeaker]:
    """Pick the (user, agent) voice pair for a dialogue."""
    users = library.users()
    if not users:
        raise SynthesisError("voice library has no user speakers")
    h = _hash(seed, dialogue.source_id)
    user = users[h % len(users)]
    agent = library.agent("male" if (h >> 64) & 1 else "female")
    return user, agent


def render_dialogue(dialogue: TextDialogue, user: LibrarySpeaker,
                    agent: LibrarySpeaker, tts: TTSBackend, store: CorpusStore,
                    spec: SynthesisSpec = SynthesisSpec()) -> DialogueRecord:
    """Synthesize, watermark, and write one dialogue; returns its record."""
    dialogue_id = dialogue.source_id
    turns = []
    cursor_samples = 0
    parts = [(0, user, dialogue.instruction), (1, agent, dialogue.response)]
    for turn_index, (channel, speaker, text) in enumerate(parts):
        samples = tts.synthesize(text, speaker.embedding,
                                 sample_rate=spec.sample_rate)
        if samples.shape[0] == 0:
            raise SynthesisError(
                f"dialogue {dialogue_id!r}: empty synthesis for turn {turn_index}")
        marked = watermark.embed(samples, key=spec.watermark_key,
                                 strength_db=spec.watermark_strength_db)
        rel_path = f"{dialogue_id}/{dialogue_id}_{turn_index}_mark.wav"
        write_wav(store.resolve_audio(rel_path), marked, spec.sample_rate)
        start = cursor_samples / spec.sample_rate
        cursor_samples += samples.shape[0]
        end = cursor_samples / spec.sample_rate
        turns.append(TurnRecord(channel=channel, speaker=speaker.id, text=text,
                                start=start, end=end, audio_path=rel_path))

    record = DialogueRecord(
        id=dialogue_id,
        speakers={
            user.id: SpeakerRef(user.id, "user", user.gender),
            agent.id: SpeakerRef(agent.id, "agent", agent.gender),
        },
        audio=AudioInfo(channel=2,
                        duration=cursor_samples / spec.sample_rate,
                        sample_rate=spec.sample_rate),
        channels=(ChannelInfo(0, dialogue.language),
                  ChannelInfo(1, dialogue.language)),
        dialog=tuple(turns),
    )
    violations = validate_record(record)
    if violations:
        v = violations[0]
        raise SynthesisError(
            f"dialogue {dialogue_id!r} failed validation: {v.field} [{v.code}] {v.message}")
    return record


def synthesize_corpus(dialogues: list[TextDialogue], library: VoiceLibrary,
                      tts: TTSBackend, store: CorpusStore,
                      spec: SynthesisSpec = SynthesisSpec(),
                      seed: int = 0) -> list[DialogueRecord]:
    records = []
    for dialogue in dialogues:
        user, agent = assign_speakers(library, dialogue, seed)
        records.append(render_dialogue(dialogue, user, agent, tts, store, spec))
    return records
