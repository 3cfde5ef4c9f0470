"""Deterministic offline backends.

Everything here is a pure function of (seed, inputs), so full pipeline runs
are reproducible byte for byte and need no model weights or network.

Speech is carried by a tone codec: each character becomes a 50 ms chord.
The audible fundamental encodes the codepoint modulo 512
(f = 220 + 2 * (cp % 512) Hz) and a second partial in a disjoint band
encodes the remaining high bits (1400 + 2 * (cp // 512) Hz), so any Unicode
text survives a synthesize/transcribe round trip exactly.  Segment
boundaries are b(k) = round(k * 0.05 * sample_rate), which makes a ten
character utterance at 22050 Hz exactly 11025 samples long.

The mock recognizer can corrupt its output with per-character probability
``corruption_p``.  The coin for character i is a hash of (seed, clean text,
i) and does not depend on p, so the set of corrupted positions at a lower p
is a subset of the set at a higher p.  Downstream acceptance statistics are
therefore monotone in p by construction, not just in expectation.
"""

from __future__ import annotations

import hashlib
import json
import re
import unicodedata

import numpy as np

from .. import prompts
from .base import DEFAULT_SAMPLE_RATE, EMBEDDING_DIM, BackendSet

TONE_BASE_HZ = 220.0
TONE_STEP_HZ = 2.0
TONE_SLOTS = 512
PARTIAL_BASE_HZ = 1400.0
PARTIAL_SLOTS = 2176  # ceil((0x10FFFF + 1) / 512)
CHAR_SECONDS = 0.05
TONE_AMPLITUDE = 0.25

MIN_SAMPLE_RATE = 11500  # highest partial is 5750 Hz; Nyquist must clear it

EMBED_PREFIX_SAMPLES = 2048

_REPLACEMENT_ALPHABET = [chr(0x4E00 + i) for i in range(TONE_SLOTS)]


def _hash_int(*parts: bytes) -> int:
    h = hashlib.blake2b(digest_size=16)
    for p in parts:
        h.update(p)
        h.update(b"\x00")
    return int.from_bytes(h.digest(), "big")


def char_boundaries(n_chars: int, sample_rate: int) -> np.ndarray:
    k = np.arange(n_chars + 1, dtype=np.float64)
    return np.floor(k * CHAR_SECONDS * sample_rate + 0.5).astype(np.int64)


def char_frequencies(codepoint: int) -> tuple[float, float]:
    low = TONE_BASE_HZ + TONE_STEP_HZ * (codepoint % TONE_SLOTS)
    high = PARTIAL_BASE_HZ + TONE_STEP_HZ * (codepoint // TONE_SLOTS)
    return low, high


class MockTTS:
    """Tone-codec synthesizer; the speaker embedding sets phase and gain."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def synthesize(self, text: str, speaker_embedding: np.ndarray,
                   sample_rate: int = DEFAULT_SAMPLE_RATE) -> np.ndarray:
        if sample_rate < MIN_SAMPLE_RATE:
            raise ValueError(f"sample_rate {sample_rate} too low for the tone codec")
        if not text:
            return np.zeros(0)
        emb = np.asarray(speaker_embedding, dtype=np.float64)
        h = _hash_int(str(self.seed).encode(), emb.tobytes())
        phase_low = (h % 360) / 360.0 * 2 * np.pi
        phase_high = ((h >> 16) % 360) / 360.0 * 2 * np.pi
        gain = TONE_AMPLITUDE * (0.9 + 0.2 * ((h >> 32) % 1000) / 1000.0)

        bounds = char_boundaries(len(text), sample_rate)
        lengths = np.diff(bounds)
        freqs = np.array([char_frequencies(ord(c)) for c in text])
        f_low = np.repeat(freqs[:, 0], lengths)
        f_high = np.repeat(freqs[:, 1], lengths)
        t = np.arange(bounds[-1], dtype=np.float64) / sample_rate
        return gain * (np.sin(2 * np.pi * f_low * t + phase_low)
                       + np.sin(2 * np.pi * f_high * t + phase_high))


class MockASR:
    """Tone-codec recognizer with optional seeded output corruption."""

    def __init__(self, seed: int = 0, corruption_p: float = 0.0):
        if not 0.0 <= corruption_p <= 1.0:
            raise ValueError(f"corruption_p must be in [0, 1], got {corruption_p}")
        self.seed = seed
        self.corruption_p = corruption_p

    def transcribe(self, samples: np.ndarray, sample_rate: int,
                   language: str) -> str:
        if sample_rate < MIN_SAMPLE_RATE:
            raise ValueError(f"sample_rate {sample_rate} too low for the tone codec")
        samples = np.asarray(samples, dtype=np.float64)
        if samples.ndim == 2:
            samples = samples.mean(axis=1)
        n_chars = int(round(samples.shape[0] / (CHAR_SECONDS * sample_rate)))
        if n_chars == 0:
            return ""
        text = self._decode(samples, sample_rate, n_chars)
        return self._corrupt(text)

    def _decode(self, samples: np.ndarray, sample_rate: int, n_chars: int) -> str:
        bounds = char_boundaries(n_chars, sample_rate)
        window = int(CHAR_SECONDS * sample_rate)
        idx = bounds[:-1, None] + np.arange(window)[None, :]
        idx = np.minimum(idx, samples.shape[0] - 1)
        segments = samples[idx]
        # zero-padding to sr/2 points puts FFT bins on an exact 2 Hz grid
        n_fft = int(round(sample_rate / 2))
        spectrum = np.abs(np.fft.rfft(segments, n=n_fft, axis=1))
        low_bins = (TONE_BASE_HZ / 2 + np.arange(TONE_SLOTS)).astype(int)
        high_bins = (PARTIAL_BASE_HZ / 2 + np.arange(PARTIAL_SLOTS)).astype(int)
        low_slots = np.argmax(spectrum[:, low_bins], axis=1)
        high_slots = np.argmax(spectrum[:, high_bins], axis=1)
        chars = []
        for low, high in zip(low_slots, high_slots):
            cp = int(high) * TONE_SLOTS + int(low)
            if cp > 0x10FFFF or 0xD800 <= cp <= 0xDFFF:
                chars.append("?")
            else:
                chars.append(chr(cp))
        return "".join(chars)

    def _corrupt(self, text: str) -> str:
        if self.corruption_p == 0.0:
            return text
        seed_part = str(self.seed).encode()
        text_part = text.encode()
        out = list(text)
        for i in range(len(out)):
            h = _hash_int(seed_part, text_part, str(i).encode())
            coin = (h & 0xFFFFFFFF) / 2**32
            if coin < self.corruption_p:
                out[i] = _REPLACEMENT_ALPHABET[(h >> 32) % TONE_SLOTS]
        return "".join(out)


class MockEmbedding:
    """Speaker vector derived from the opening samples of a clip.

    Clips that share their first EMBED_PREFIX_SAMPLES samples (same voice
    signature) map to the same unit vector; any other prefix maps to an
    unrelated one.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed

    def embed(self, samples: np.ndarray, sample_rate: int) -> np.ndarray:
        samples = np.asarray(samples, dtype=np.float64)
        if samples.ndim == 2:
            samples = samples.mean(axis=1)
        prefix = np.zeros(EMBED_PREFIX_SAMPLES)
        n = min(samples.shape[0], EMBED_PREFIX_SAMPLES)
        prefix[:n] = samples[:n]
        ints = np.clip(np.rint(prefix * 32768.0), -32768, 32767).astype("<i2")
        h = _hash_int(str(self.seed).encode(), ints.tobytes())
        rng = np.random.default_rng(h)
        v = rng.standard_normal(EMBEDDING_DIM)
        return v / np.linalg.norm(v)


class MockMOS:
    """Quality score from spectral purity.

    Tonal content (the mock synthesizer's output) concentrates energy in a
    few FFT bins and scores high; broadband noise scores low.  Range [1, 5].
    """

    def __init__(self, seed: int = 0):
        self.seed = seed

    def score(self, samples: np.ndarray, sample_rate: int,
              metric: str = "dnsmos") -> float:
        samples = np.asarray(samples, dtype=np.float64)
        if samples.ndim == 2:
            samples = samples.mean(axis=1)
        window = min(samples.shape[0], int(CHAR_SECONDS * sample_rate))
        if window < 64:
            return 1.0
        seg = samples[:window] * np.hanning(window)
        spectrum = np.square(np.abs(np.fft.rfft(seg)))
        total = float(spectrum.sum())
        if total <= 0.0:
            return 1.0
        top = np.sort(spectrum)[-16:]
        purity = float(top.sum()) / total
        return float(np.clip(1.0 + 4.0 * purity, 1.0, 5.0))


_CJK = re.compile(r"[一-鿿]")

_EN_DIGITS = {
    "0": "zero", "1": "one", "2": "two", "3": "three", "4": "four",
    "5": "five", "6": "six", "7": "seven", "8": "eight", "9": "nine",
}
_ZH_DIGITS = "零一二三四五六七八九"

_UNSUITABLE_MARKERS = (
    "http", "www.", "```", "markdown", "写一篇", "写一首", "写首诗", "作文",
    "歌词", "代码", "邮件", "表格", "write a poem", "write an essay",
    "write code", "lyrics", "compose", "电子邮件", "write an email",
)

_UNCLEAR_MARKERS = (
    "这篇文章", "上述", "上面的", "以下内容", "该文档", "这段话",
    "this article", "the above", "the following passage", "this passage",
    "this document", "attached",
)

_ZH_FILLERS = ("嗯，", "那个，", "你好，请问", "哎，我想问问")
_EN_FILLERS = ("so, ", "hey, ", "well, ", "okay, ")


def _spell_digits(text: str, zh: bool) -> str:
    out = []
    for ch in text:
        if "0" <= ch <= "9":
            out.append(_ZH_DIGITS[int(ch)] if zh else f" {_EN_DIGITS[ch]} ")
        else:
            out.append(ch)
    return " ".join("".join(out).split()) if not zh else "".join(out)


def _strip_unspeakable(text: str) -> str:
    kept = []
    for ch in text:
        if ch in "_[]{}()<>#*`|~\\\n\r\t":
            kept.append(" ")
        else:
            kept.append(ch)
    return " ".join("".join(kept).split())


class MockChat:
    """Template-aware deterministic text model.

    Recognizes the pipeline's own prompt templates, extracts the filled-in
    values, and answers each template type with a plausible deterministic
    reply; anything else gets a canned acknowledgement keyed by prompt hash.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._matchers = [
            (name, prompts.to_regex(prompts.load(name)))
            for name in prompts.TEMPLATE_NAMES
        ]

    def complete(self, prompt: str, temperature: float = 0.7,
                 max_tokens: int = 1024) -> str:
        for name, regex in self._matchers:
            m = regex.fullmatch(prompt)
            if m:
                handler = getattr(self, "_handle_" + name)
                return handler(**m.groupdict())
        h = _hash_int(str(self.seed).encode(), prompt.encode())
        canned = ("Sure, happy to help with that.",
                  "Got it, let me think that through.",
                  "Okay, here is my take on it.",
                  "Understood, thanks for asking.")
        return canned[h % len(canned)]

    def _h(self, *texts: str) -> int:
        return _hash_int(str(self.seed).encode(), *(t.encode() for t in texts))

    def _handle_question_synthesis(self, instruction: str) -> str:
        zh = bool(_CJK.search(instruction))
        topic = _strip_unspeakable(instruction)
        if zh:
            topic = re.sub(r"[，。！？、；：]", "", topic)[:10] or "这件事"
            return f"能给我讲讲{topic}是怎么回事吗？"
        words = re.sub(r"[^\w\s]", " ", topic).split()[:6]
        subject = " ".join(words) or "that"
        return f"Could you tell me more about {subject}?"

    def _handle_suitability_filter(self, instruction: str) -> str:
        lowered = instruction.lower()
        digits = sum(c.isdigit() for c in instruction)
        unsuitable = (
            any(marker in lowered for marker in _UNSUITABLE_MARKERS)
            or (len(instruction) > 0 and digits / len(instruction) > 0.3)
            or len(instruction) > 400
        )
        return json.dumps({"is_suitable_for_speech": not unsuitable})

    def _handle_clarity_filter(self, instruction: str) -> str:
        lowered = instruction.lower()
        unclear = (
            any(marker in lowered for marker in _UNCLEAR_MARKERS)
            or len(instruction.strip()) < 4
        )
        return json.dumps({"clear_enough": not unclear})

    def _handle_spoken_style(self, Command: str) -> str:
        zh = bool(_CJK.search(Command))
        h = self._h(Command)
        body = _spell_digits(_strip_unspeakable(Command), zh)
        if zh:
            filler = _ZH_FILLERS[h % len(_ZH_FILLERS)]
            instruction = f"{filler}{body}"
            gist = re.sub(r"[，。！？、；：\s]", "", body)[:12] or "这个"
            replies = (
                f"嗯，{gist}这个事儿我来说说看，其实挺好理解的，你按平常的办法一步步来就行，有不明白的再问我哈。",
                f"好的呀，关于{gist}，我觉得可以先从最简单的部分入手，慢慢就清楚了，希望能帮到你。",
                f"这个问题问得好，{gist}说起来不复杂，关键是要多留意细节，咱们可以慢慢聊。",
                f"行，{gist}我给你简单说说，大体上就是按顺序处理，遇到特殊情况再具体分析。",
            )
            response = replies[(h >> 8) % len(replies)]
        else:
            filler = _EN_FILLERS[h % len(_EN_FILLERS)]
            instruction = f"{filler}{body}"
            gist = " ".join(re.sub(r"[^\w\s]", " ", body).split()[:8]) or "that"
            replies = (
                f"sure thing, about {gist}, i would start simple and take it step by step, and feel free to ask if anything is unclear.",
                f"good question, {gist} is easier than it sounds, just take your time with each part and you will be fine.",
                f"happy to help, for {gist} the main idea is to keep things straightforward and check your progress as you go.",
                f"of course, when it comes to {gist}, a steady approach works best, and i can go deeper whenever you like.",
            )
            response = replies[(h >> 8) % len(replies)]
        return json.dumps({"instruction": instruction, "response": response},
                          ensure_ascii=False)

    def _handle_instruction_following_judge(self, instruction: str,
                                            response: str) -> str:
        h = self._h(instruction, response)
        content = 3 + h % 3
        style = 3 + (h >> 4) % 3
        return json.dumps({"content": content, "style": style})


def speaker_signature(voice_key: int, sample_rate: int = DEFAULT_SAMPLE_RATE,
                      n_samples: int = EMBED_PREFIX_SAMPLES) -> np.ndarray:
    """A per-voice opening chirp for planted recordings.

    Prepend this to clips so that MockEmbedding maps every clip of the same
    voice to one identical vector.
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(voice_key, 0x516)))
    f0 = rng.uniform(300.0, 900.0)
    f1 = rng.uniform(900.0, 1800.0)
    t = np.arange(n_samples) / sample_rate
    sweep = f0 + (f1 - f0) * t / t[-1]
    return 0.2 * np.sin(2 * np.pi * sweep * t)


def make_mock_backends(seed: int = 0, corruption_p: float = 0.0) -> BackendSet:
    return BackendSet(
        chat=MockChat(seed=seed),
        tts=MockTTS(seed=seed),
        asr=MockASR(seed=seed, corruption_p=corruption_p),
        embedding=MockEmbedding(seed=seed),
        mos=MockMOS(seed=seed),
    )
