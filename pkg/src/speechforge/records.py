"""Dialogue metadata records, their JSON codec, and the on-disk corpus store.

The corpus metadata is a single JSON document holding a list of dialogue
objects.  Field names and nesting in the serialized form are fixed (see
`record_to_obj`); do not rename them, downstream consumers parse this shape.
Times are serialized at full float precision; all *comparisons* on times use
a 1 ms tolerance.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

TIME_TOLERANCE = 1e-3  # seconds

USER_ID_PATTERN = re.compile(r"^SPK([0-9]+)([mf])$")
AGENT_GENDERS = {"agentMale": "male", "agentFemale": "female"}
LANGUAGES = ("zh", "en")

_GENDER_SUFFIX = {"male": "m", "female": "f"}


class MetadataError(Exception):
    """Base class for metadata codec errors."""


class MetadataParseError(MetadataError):
    """Malformed JSON input; carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class RecordValidationError(MetadataError):
    """A record violates an invariant; names the dialogue and field."""

    def __init__(self, dialogue_id: str, field_name: str, message: str):
        super().__init__(f"dialogue {dialogue_id!r}, field {field_name!r}: {message}")
        self.dialogue_id = dialogue_id
        self.field_name = field_name


@dataclass(frozen=True)
class SpeakerRef:
    """A speaker participating in a dialogue.

    User ids look like ``SPK1486m`` (trailing letter encodes gender); agent
    ids are exactly ``agentMale`` or ``agentFemale``.
    """

    id: str
    role: str  # "user" | "agent"
    gender: str  # "male" | "female"


@dataclass(frozen=True)
class TurnRecord:
    channel: int
    speaker: str
    text: str
    start: float
    end: float
    audio_path: str


@dataclass(frozen=True)
class AudioInfo:
    channel: int  # channel count of the session layout
    duration: float  # seconds
    sample_rate: int  # Hz


@dataclass(frozen=True)
class ChannelInfo:
    channel_index: int
    language: str


@dataclass(frozen=True)
class DialogueRecord:
    id: str
    speakers: dict[str, SpeakerRef]
    audio: AudioInfo
    channels: tuple[ChannelInfo, ...]
    dialog: tuple[TurnRecord, ...]

    def language(self) -> str:
        """Dominant language tag (channel 0's tag)."""
        for ch in self.channels:
            if ch.channel_index == 0:
                return ch.language
        return self.channels[0].language if self.channels else "en"


@dataclass(frozen=True)
class Violation:
    field: str
    code: str
    message: str


def speaker_id_gender(speaker_id: str) -> str | None:
    """Gender implied by a speaker id, or None if the id is malformed."""
    if speaker_id in AGENT_GENDERS:
        return AGENT_GENDERS[speaker_id]
    m = USER_ID_PATTERN.match(speaker_id)
    if m:
        return "male" if m.group(2) == "m" else "female"
    return None


def make_user_speaker_id(number: int, gender: str) -> str:
    return f"SPK{number}{_GENDER_SUFFIX[gender]}"


def validate_record(record: DialogueRecord) -> list[Violation]:
    """Check every invariant on a dialogue record.

    Returns an empty list iff the record is valid.  Violations are data, not
    errors: callers decide whether to raise.
    """
    out: list[Violation] = []

    roles = {"user": 0, "agent": 0}
    for sid, ref in record.speakers.items():
        if sid != ref.id:
            out.append(Violation("speakers", "id_mismatch",
                                 f"key {sid!r} != ref id {ref.id!r}"))
        if ref.role not in roles:
            out.append(Violation("speakers", "bad_role",
                                 f"{sid!r} has role {ref.role!r}"))
        else:
            roles[ref.role] += 1
        if ref.role == "agent" and sid not in AGENT_GENDERS:
            out.append(Violation("speakers", "bad_speaker_id",
                                 f"agent id {sid!r} is not a known agent literal"))
        if ref.role == "user" and not USER_ID_PATTERN.match(sid):
            out.append(Violation("speakers", "bad_speaker_id",
                                 f"user id {sid!r} does not match SPK<number><m|f>"))
        implied = speaker_id_gender(sid)
        if implied is not None and implied != ref.gender:
            out.append(Violation("speakers", "gender_mismatch",
                                 f"{sid!r} id implies {implied} but gender is {ref.gender}"))
    if roles["user"] != 1 or roles["agent"] != 1:
        out.append(Violation("speakers", "speaker_roles",
                             f"expected exactly one user and one agent, "
                             f"got {roles['user']} user(s), {roles['agent']} agent(s)"))

    if record.audio.sample_rate <= 0:
        out.append(Violation("audio.sample_rate", "bad_sample_rate",
                             f"{record.audio.sample_rate}"))
    if record.audio.channel <= 0:
        out.append(Violation("audio.channel", "bad_channel_count",
                             f"{record.audio.channel}"))

    for ch in record.channels:
        if not 0 <= ch.channel_index < record.audio.channel:
            out.append(Violation("channel", "bad_channel_index",
                                 f"index {ch.channel_index} outside 0..{record.audio.channel - 1}"))
        if ch.language not in LANGUAGES:
            out.append(Violation("channel", "bad_language", f"{ch.language!r}"))

    prev_start = None
    prev_end = None
    max_end = 0.0
    for i, turn in enumerate(record.dialog):
        where = f"dialog[{i}]"
        if not turn.text:
            out.append(Violation(where + ".text", "empty_text", "turn text is empty"))
        if not turn.audio_path:
            out.append(Violation(where + ".audio_path", "empty_audio_path",
                                 "turn audio path is empty"))
        if not (0 <= turn.start < turn.end):
            out.append(Violation(where, "bad_turn_time",
                                 f"start={turn.start} end={turn.end}"))
        if not 0 <= turn.channel < record.audio.channel:
            out.append(Violation(where + ".channel", "bad_channel_index",
                                 f"{turn.channel}"))
        if turn.speaker not in record.speakers:
            out.append(Violation(where + ".speaker", "unknown_speaker",
                                 f"{turn.speaker!r} absent from speakers map"))
        if prev_start is not None and turn.start < prev_start:
            out.append(Violation(where, "unsorted", "turns not sorted by start"))
        if prev_end is not None and turn.start < prev_end - TIME_TOLERANCE:
            out.append(Violation(where, "overlap",
                                 f"start {turn.start} < previous end {prev_end}"))
        prev_start = turn.start
        prev_end = turn.end
        max_end = max(max_end, turn.end)

    if record.dialog and abs(max_end - record.audio.duration) > TIME_TOLERANCE:
        out.append(Violation("audio.duration", "duration_mismatch",
                             f"max turn end {max_end} vs duration {record.audio.duration}"))
    return out


# ---------------------------------------------------------------------------
# JSON codec
# ---------------------------------------------------------------------------

def record_to_obj(record: DialogueRecord) -> dict:
    """Serialize a record into the canonical JSON object shape."""
    return {
        "id": record.id,
        "speaker": {
            sid: {"role": ref.role, "gender": ref.gender}
            for sid, ref in record.speakers.items()
        },
        "audio": {
            "channel": record.audio.channel,
            "duration": record.audio.duration,
            "sample_rate": record.audio.sample_rate,
        },
        "channel": [
            {"channel_index": ch.channel_index, "language": ch.language}
            for ch in record.channels
        ],
        "dialog": [
            {
                "channel": t.channel,
                "speaker": t.speaker,
                "text": t.text,
                "start": t.start,
                "end": t.end,
                "audio_path": t.audio_path,
            }
            for t in record.dialog
        ],
    }


def _require(obj: dict, key: str, kind, dialogue_id: str, where: str):
    if key not in obj:
        raise RecordValidationError(dialogue_id, f"{where}{key}", "missing field")
    value = obj[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise RecordValidationError(dialogue_id, f"{where}{key}",
                                        f"expected number, got {type(value).__name__}")
        return float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind is int:
        raise RecordValidationError(dialogue_id, f"{where}{key}",
                                    f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def record_from_obj(obj: dict) -> DialogueRecord:
    """Build a record from a parsed JSON object, checking structure only.

    Invariant checking is `validate_record`'s job; this raises only on
    missing/ill-typed fields.
    """
    if not isinstance(obj, dict):
        raise RecordValidationError("<unknown>", "<record>", "record is not an object")
    dialogue_id = obj.get("id")
    if not isinstance(dialogue_id, str) or not dialogue_id:
        raise RecordValidationError(str(dialogue_id), "id", "missing or empty id")

    speakers_obj = _require(obj, "speaker", dict, dialogue_id, "")
    speakers = {}
    for sid, ref in speakers_obj.items():
        if not isinstance(ref, dict):
            raise RecordValidationError(dialogue_id, f"speaker.{sid}", "not an object")
        speakers[sid] = SpeakerRef(
            id=sid,
            role=_require(ref, "role", str, dialogue_id, f"speaker.{sid}."),
            gender=_require(ref, "gender", str, dialogue_id, f"speaker.{sid}."),
        )

    audio_obj = _require(obj, "audio", dict, dialogue_id, "")
    audio = AudioInfo(
        channel=_require(audio_obj, "channel", int, dialogue_id, "audio."),
        duration=_require(audio_obj, "duration", float, dialogue_id, "audio."),
        sample_rate=_require(audio_obj, "sample_rate", int, dialogue_id, "audio."),
    )

    channels = tuple(
        ChannelInfo(
            channel_index=_require(ch, "channel_index", int, dialogue_id, "channel."),
            language=_require(ch, "language", str, dialogue_id, "channel."),
        )
        for ch in _require(obj, "channel", list, dialogue_id, "")
    )

    dialog = tuple(
        TurnRecord(
            channel=_require(t, "channel", int, dialogue_id, "dialog."),
            speaker=_require(t, "speaker", str, dialogue_id, "dialog."),
            text=_require(t, "text", str, dialogue_id, "dialog."),
            start=_require(t, "start", float, dialogue_id, "dialog."),
            end=_require(t, "end", float, dialogue_id, "dialog."),
            audio_path=_require(t, "audio_path", str, dialogue_id, "dialog."),
        )
        for t in _require(obj, "dialog", list, dialogue_id, "")
    )

    return DialogueRecord(id=dialogue_id, speakers=speakers, audio=audio,
                          channels=channels, dialog=dialog)


def encode_record(record: DialogueRecord) -> str:
    return json.dumps(record_to_obj(record), ensure_ascii=False)


def encode_metadata(records: Iterable[DialogueRecord]) -> bytes:
    """Serialize a corpus to the single-document JSON form (deterministic)."""
    lines = ",\n".join(encode_record(r) for r in records)
    if lines:
        return ("[\n" + lines + "\n]\n").encode("utf-8")
    return b"[]\n"


def iter_metadata_objs(stream: IO[bytes], chunk_size: int = 1 << 16) -> Iterator[dict]:
    """Incrementally yield top-level objects from a JSON array stream.

    Keeps only one record's text in memory at a time, so XL-scale corpora can
    be scanned without loading the whole document.
    """
    import codecs

    decoder = json.JSONDecoder()
    utf8 = codecs.getincrementaldecoder("utf-8")()
    buf = ""
    consumed_bytes = 0  # bytes already dropped from the front of buf
    eof = False

    def fill() -> bool:
        nonlocal buf, eof
        chunk = stream.read(chunk_size)
        if not chunk:
            eof = True
            buf += utf8.decode(b"", final=True)
            return False
        buf += utf8.decode(chunk)
        return True

    def drop(n_chars: int):
        nonlocal buf, consumed_bytes
        consumed_bytes += len(buf[:n_chars].encode("utf-8"))
        buf = buf[n_chars:]

    def skip_ws():
        nonlocal buf
        while True:
            stripped = buf.lstrip(" \t\r\n")
            if stripped or eof:
                drop(len(buf) - len(stripped))
                return
            if not fill():
                return

    def fail(msg: str, at: int = 0):
        raise MetadataParseError(msg, consumed_bytes + len(buf[:at].encode("utf-8")))

    skip_ws()
    while not buf and not eof:
        if not fill():
            break
    if not buf:
        fail("empty document")
    if buf[0] != "[":
        fail("expected '[' to open the metadata array")
    drop(1)

    first = True
    while True:
        skip_ws()
        while not buf:
            if not fill():
                fail("unterminated metadata array")
            skip_ws()
        if buf[0] == "]":
            drop(1)
            return
        if not first:
            if buf[0] != ",":
                fail("expected ',' between records")
            drop(1)
            skip_ws()
            while not buf:
                if not fill():
                    fail("unterminated metadata array")
                skip_ws()
        first = False
        while True:
            try:
                obj, end = decoder.raw_decode(buf)
                break
            except json.JSONDecodeError as e:
                if fill():
                    continue
                fail(e.msg, e.pos)
        drop(end)
        yield obj


def decode_metadata(data: bytes, validate: bool = True) -> list[DialogueRecord]:
    """Parse and validate a complete metadata document.

    Raises MetadataParseError on malformed JSON (with byte offset) and
    RecordValidationError on the first invariant violation.
    """
    import io

    records = []
    for obj in iter_metadata_objs(io.BytesIO(data)):
        record = record_from_obj(obj)
        if validate:
            violations = validate_record(record)
            if violations:
                v = violations[0]
                raise RecordValidationError(record.id, v.field, f"[{v.code}] {v.message}")
        records.append(record)
    return records


# ---------------------------------------------------------------------------
# Corpus store
# ---------------------------------------------------------------------------

class MetadataWriter:
    """Streams records into a single JSON document, one at a time."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self._fh = open(self.path, "w", encoding="utf-8")
        self._count = 0

    def write(self, record: DialogueRecord):
        self._fh.write("[\n" if self._count == 0 else ",\n")
        self._fh.write(encode_record(record))
        self._count += 1

    def close(self):
        if self._fh.closed:
            return
        self._fh.write("[]\n" if self._count == 0 else "\n]\n")
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class CorpusStore:
    """A corpus on disk: one metadata JSON plus per-dialogue audio directories.

    Single-writer append during a pipeline run, many readers afterwards.
    """

    def __init__(self, root: Path | str, metadata_name: str = "metadata.json"):
        self.root = Path(root)
        self.metadata_path = self.root / metadata_name

    def writer(self) -> MetadataWriter:
        self.root.mkdir(parents=True, exist_ok=True)
        return MetadataWriter(self.metadata_path)

    def iter_records(self, validate: bool = False) -> Iterator[DialogueRecord]:
        with open(self.metadata_path, "rb") as fh:
            for obj in iter_metadata_objs(fh):
                record = record_from_obj(obj)
                if validate:
                    violations = validate_record(record)
                    if violations:
                        v = violations[0]
                        raise RecordValidationError(record.id, v.field,
                                                    f"[{v.code}] {v.message}")
                yield record

    def read_all(self, validate: bool = False) -> list[DialogueRecord]:
        return list(self.iter_records(validate=validate))

    def resolve_audio(self, rel_path: str) -> Path:
        return self.root / rel_path

    def validate(self) -> list[Violation]:
        """Whole-store check: record invariants, unique ids, audio files exist."""
        issues: list[Violation] = []
        seen: set[str] = set()
        for record in self.iter_records():
            for v in validate_record(record):
                issues.append(Violation(f"{record.id}.{v.field}", v.code, v.message))
            if record.id in seen:
                issues.append(Violation(record.id, "duplicate_id",
                                        "dialogue id appears more than once"))
            seen.add(record.id)
            for turn in record.dialog:
                if not self.resolve_audio(turn.audio_path).is_file():
                    issues.append(Violation(f"{record.id}.audio_path", "missing_audio",
                                            turn.audio_path))
        return issues
