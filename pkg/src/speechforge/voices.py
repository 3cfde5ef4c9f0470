"""Speaker identification and virtual voice-library construction.

Real recordings are reduced to speaker profiles: a recording contributes a
profile only if it has at least PROFILE_MIN_CLIPS clips of premium quality
(MOS at or above PROFILE_MOS_MIN) and those clips agree with each other, in
the sense that the number of clip pairs whose embeddings exceed
SAME_SPEAKER_COSINE is at least 5 * floor(n / 10) for n premium clips.  The
profile embedding is the renormalized mean of the premium clip embeddings.

Virtual speakers are then built by mixing two parent profiles of the same
gender and comparable speaking rate: normalize(lam * e1 + (1 - lam) * e2).
Parent pairs are sampled without repetition; the rate-compatibility window
widens (10, then 20, then 30 ms per character) only when the tighter pool
is exhausted.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .records import make_user_speaker_id

PROFILE_MOS_MIN = 4.0
PROFILE_MIN_CLIPS = 10
SAME_SPEAKER_COSINE = 0.97
DEFAULT_MIX_LAMBDA = 0.5
RATE_GRID_MS = 10
RATE_WIDEN_STEPS_MS = (0, 10, 20, 30)

AGENT_IDS = {"male": "agentMale", "female": "agentFemale"}


class LibraryError(Exception):
    pass


@dataclass(frozen=True)
class ClipFeatures:
    embedding: np.ndarray
    mos: float
    duration: float  # seconds
    n_chars: int  # transcript length, for the speaking rate


@dataclass(frozen=True)
class Recording:
    recording_id: str
    gender: str
    clips: tuple[ClipFeatures, ...]


@dataclass(frozen=True)
class SpeakerProfile:
    recording_id: str
    gender: str
    embedding: np.ndarray
    rate_ms: int
    n_clips: int


@dataclass(frozen=True)
class LibrarySpeaker:
    id: str
    role: str  # "user" | "agent"
    gender: str
    embedding: np.ndarray
    rate_ms: int


def round_rate(ms_per_char: float) -> int:
    """Round to the 10 ms grid, half away from zero upward (197.5 -> 200)."""
    return int(math.floor(ms_per_char / RATE_GRID_MS + 0.5)) * RATE_GRID_MS


def cosine_matrix(embeddings: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(embeddings, axis=1, keepdims=True)
    unit = embeddings / norms
    return unit @ unit.T


def same_speaker_pairs(embeddings: np.ndarray,
                       threshold: float = SAME_SPEAKER_COSINE) -> list[tuple[int, int]]:
    """Index pairs (i < j) whose cosine similarity strictly exceeds threshold."""
    sims = cosine_matrix(np.asarray(embeddings, dtype=np.float64))
    n = sims.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    hits = sims[iu, ju] > threshold
    return list(zip(iu[hits].tolist(), ju[hits].tolist()))


def count_similar_pairs(embeddings: np.ndarray,
                        threshold: float = SAME_SPEAKER_COSINE) -> int:
    return len(same_speaker_pairs(embeddings, threshold))


def build_profile(recording: Recording,
                  mos_min: float = PROFILE_MOS_MIN,
                  min_clips: int = PROFILE_MIN_CLIPS,
                  cosine_threshold: float = SAME_SPEAKER_COSINE) -> SpeakerProfile | None:
    premium = [c for c in recording.clips if c.mos >= mos_min]
    n = len(premium)
    if n < min_clips:
        return None
    embeddings = np.stack([c.embedding for c in premium])
    required = 5 * (n // 10)
    if count_similar_pairs(embeddings, cosine_threshold) < required:
        return None
    mean = embeddings.mean(axis=0)
    norm = np.linalg.norm(mean)
    if norm == 0.0:
        return None
    total_chars = sum(c.n_chars for c in premium)
    total_duration = sum(c.duration for c in premium)
    if total_chars == 0:
        return None
    return SpeakerProfile(
        recording_id=recording.recording_id,
        gender=recording.gender,
        embedding=mean / norm,
        rate_ms=round_rate(1000.0 * total_duration / total_chars),
        n_clips=n,
    )


def identify_profiles(recordings: Iterable[Recording],
                      mos_min: float = PROFILE_MOS_MIN,
                      min_clips: int = PROFILE_MIN_CLIPS,
                      cosine_threshold: float = SAME_SPEAKER_COSINE) -> list[SpeakerProfile]:
    profiles = []
    for rec in recordings:
        p = build_profile(rec, mos_min, min_clips, cosine_threshold)
        if p is not None:
            profiles.append(p)
    return profiles


@dataclass(frozen=True)
class VirtualSpeaker:
    id: str
    gender: str
    embedding: np.ndarray
    rate_ms: int
    parents: tuple[str, str]  # recording ids of the two profiles


def mix_embeddings(e1: np.ndarray, e2: np.ndarray,
                   lam: float = DEFAULT_MIX_LAMBDA) -> np.ndarray:
    mixed = lam * np.asarray(e1, dtype=np.float64) \
        + (1.0 - lam) * np.asarray(e2, dtype=np.float64)
    norm = np.linalg.norm(mixed)
    if norm < 1e-12:
        raise LibraryError("parent embeddings cancel out, cannot mix")
    return mixed / norm


def _eligible_pairs(profiles: Sequence[SpeakerProfile],
                    width_ms: int) -> list[tuple[int, int]]:
    out = []
    for i in range(len(profiles)):
        for j in range(i + 1, len(profiles)):
            if abs(profiles[i].rate_ms - profiles[j].rate_ms) <= width_ms:
                out.append((i, j))
    return out


def make_virtual_speakers(profiles: Sequence[SpeakerProfile], count: int,
                          gender: str, lam: float = DEFAULT_MIX_LAMBDA,
                          seed: int = 0,
                          start_number: int = 0) -> list[VirtualSpeaker]:
    """Mix `count` virtual speakers of one gender out of same-gender profiles."""
    pool = [p for p in profiles if p.gender == gender]
    rng = np.random.default_rng(np.random.SeedSequence(
        entropy=(seed, 0 if gender == "male" else 1)))
    chosen: list[tuple[int, int]] = []
    used: set[tuple[int, int]] = set()
    for width in RATE_WIDEN_STEPS_MS:
        if len(chosen) >= count:
            break
        fresh = [p for p in _eligible_pairs(pool, width) if p not in used]
        order = rng.permutation(len(fresh))
        for k in order:
            if len(chosen) >= count:
                break
            chosen.append(fresh[k])
            used.add(fresh[k])
    if len(chosen) < count:
        raise LibraryError(
            f"cannot mix {count} {gender} speakers from {len(pool)} profiles: "
            f"only {len(chosen)} distinct rate-compatible pairs exist")
    speakers = []
    for n, (i, j) in enumerate(chosen):
        p1, p2 = pool[i], pool[j]
        speakers.append(VirtualSpeaker(
            id=make_user_speaker_id(start_number + n, gender),
            gender=gender,
            embedding=mix_embeddings(p1.embedding, p2.embedding, lam),
            rate_ms=round_rate((p1.rate_ms + p2.rate_ms) / 2.0),
            parents=(p1.recording_id, p2.recording_id),
        ))
    return speakers


@dataclass
class VoiceLibrary:
    """All synthesis voices: virtual users plus the two fixed agents."""

    speakers: tuple[LibrarySpeaker, ...]

    def __post_init__(self):
        self._by_id = {s.id: s for s in self.speakers}

    def __len__(self) -> int:
        return len(self.speakers)

    def get(self, speaker_id: str) -> LibrarySpeaker:
        try:
            return self._by_id[speaker_id]
        except KeyError:
            raise LibraryError(f"unknown speaker {speaker_id!r}") from None

    def users(self, gender: str | None = None) -> list[LibrarySpeaker]:
        return [s for s in self.speakers
                if s.role == "user" and gender in (None, s.gender)]

    def agent(self, gender: str) -> LibrarySpeaker:
        return self.get(AGENT_IDS[gender])

    def save(self, path: Path | str) -> None:
        obj = {
            "speakers": [
                {
                    "id": s.id,
                    "role": s.role,
                    "gender": s.gender,
                    "rate_ms": s.rate_ms,
                    "embedding": [float(x) for x in s.embedding],
                }
                for s in self.speakers
            ]
        }
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path: Path | str) -> "VoiceLibrary":
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        speakers = tuple(
            LibrarySpeaker(
                id=s["id"],
                role=s["role"],
                gender=s["gender"],
                rate_ms=int(s["rate_ms"]),
                embedding=np.array(s["embedding"], dtype=np.float64),
            )
            for s in obj["speakers"]
        )
        return cls(speakers=speakers)


def build_library(profiles: Sequence[SpeakerProfile], n_users: int,
                  lam: float = DEFAULT_MIX_LAMBDA, seed: int = 0) -> VoiceLibrary:
    """Mix a full library: n_users virtual users split evenly by gender, and
    one fixed agent voice per gender taken from the best-supported profile."""
    n_female = n_users // 2
    n_male = n_users - n_female
    males = make_virtual_speakers(profiles, n_male, "male", lam, seed)
    females = make_virtual_speakers(profiles, n_female, "female", lam, seed)

    speakers = [
        LibrarySpeaker(id=v.id, role="user", gender=v.gender,
                       embedding=v.embedding, rate_ms=v.rate_ms)
        for v in males + females
    ]
    for gender in ("male", "female"):
        candidates = [p for p in profiles if p.gender == gender]
        if not candidates:
            raise LibraryError(f"no {gender} profile available for the agent voice")
        best = max(candidates, key=lambda p: (p.n_clips, p.recording_id))
        speakers.append(LibrarySpeaker(
            id=AGENT_IDS[gender], role="agent", gender=gender,
            embedding=best.embedding, rate_ms=best.rate_ms))
    return VoiceLibrary(speakers=tuple(speakers))
