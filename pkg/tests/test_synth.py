import numpy as np
import pytest

from speechforge.audio import read_wav
from speechforge.backends.mock import MockASR, MockTTS
from speechforge.records import CorpusStore, validate_record
from speechforge.synth import (
    SynthesisError,
    SynthesisSpec,
    assign_speakers,
    render_dialogue,
    synthesize_corpus,
)
from speechforge.textpipe import TextDialogue
from speechforge.voices import SpeakerProfile, build_library
from speechforge.watermark import detect


def small_library(seed=0, n_users=6):
    rng = np.random.default_rng(seed)
    profiles = []
    for gender in ("male", "female"):
        for i in range(4):
            v = rng.standard_normal(256)
            profiles.append(SpeakerProfile(
                recording_id=f"{gender}{i}", gender=gender,
                embedding=v / np.linalg.norm(v), rate_ms=200, n_clips=12))
    return build_library(profiles, n_users=n_users, seed=seed)


def dialogue(i=0, lang="zh"):
    if lang == "zh":
        return TextDialogue(f"dlg_{i:06d}", "请问怎么办理图书证？",
                            "带上身份证去前台就可以办了，很快的。", "zh")
    return TextDialogue(f"dlg_{i:06d}", "how do i get a library card",
                        "just bring your id to the front desk, it is quick.", "en")


class TestAssignment:
    def test_deterministic(self):
        lib = small_library()
        a = assign_speakers(lib, dialogue(1), seed=3)
        b = assign_speakers(lib, dialogue(1), seed=3)
        assert (a[0].id, a[1].id) == (b[0].id, b[1].id)

    def test_seed_changes_assignment(self):
        lib = small_library()
        picks = {assign_speakers(lib, dialogue(1), seed=s)[0].id for s in range(20)}
        assert len(picks) > 1

    def test_roles(self):
        lib = small_library()
        user, agent = assign_speakers(lib, dialogue(2), seed=0)
        assert user.role == "user"
        assert agent.role == "agent"

    def test_both_agents_used_across_corpus(self):
        lib = small_library()
        agents = {assign_speakers(lib, dialogue(i), seed=0)[1].id
                  for i in range(30)}
        assert agents == {"agentMale", "agentFemale"}


class TestRender:
    def test_record_layout(self, tmp_path):
        lib = small_library()
        store = CorpusStore(tmp_path / "corpus")
        user, agent = lib.users()[0], lib.agent("male")
        rec = render_dialogue(dialogue(3), user, agent, MockTTS(0), store)
        assert validate_record(rec) == []
        assert rec.audio.channel == 2
        assert rec.dialog[0].channel == 0
        assert rec.dialog[0].speaker == user.id
        assert rec.dialog[1].channel == 1
        assert rec.dialog[1].speaker == agent.id
        assert rec.dialog[0].start == 0.0
        assert rec.dialog[1].start == rec.dialog[0].end
        assert rec.audio.duration == rec.dialog[1].end

    def test_audio_files_written_and_sized(self, tmp_path):
        lib = small_library()
        store = CorpusStore(tmp_path / "corpus")
        d = dialogue(4)
        rec = render_dialogue(d, lib.users()[0], lib.agent("female"),
                              MockTTS(0), store)
        for turn in rec.dialog:
            samples, rate = read_wav(store.resolve_audio(turn.audio_path))
            assert rate == 22050
            # 50 ms per character, cumulative rounding
            expected = int(round(len(turn.text) * 0.05 * 22050))
            assert samples.shape == (expected,)
            assert turn.end - turn.start == pytest.approx(expected / 22050)

    def test_turn_files_carry_watermark(self, tmp_path):
        lib = small_library()
        store = CorpusStore(tmp_path / "corpus")
        spec = SynthesisSpec(watermark_key=77)
        rec = render_dialogue(dialogue(5), lib.users()[1], lib.agent("male"),
                              MockTTS(0), store, spec)
        for turn in rec.dialog:
            samples, _ = read_wav(store.resolve_audio(turn.audio_path))
            assert detect(samples, key=77).detected
            assert not detect(samples, key=78).detected

    def test_turn_files_transcribe_back(self, tmp_path):
        lib = small_library()
        store = CorpusStore(tmp_path / "corpus")
        d = dialogue(6)
        rec = render_dialogue(d, lib.users()[2], lib.agent("male"),
                              MockTTS(0), store)
        asr = MockASR(0)
        texts = []
        for turn in rec.dialog:
            samples, rate = read_wav(store.resolve_audio(turn.audio_path))
            texts.append(asr.transcribe(samples, rate, "zh"))
        assert texts == [d.instruction, d.response]

    def test_empty_text_rejected(self, tmp_path):
        lib = small_library()
        store = CorpusStore(tmp_path / "corpus")
        bad = TextDialogue("dlg_bad", "", "resp", "en")
        with pytest.raises(SynthesisError):
            render_dialogue(bad, lib.users()[0], lib.agent("male"),
                            MockTTS(0), store)


class TestCorpus:
    def test_synthesize_corpus(self, tmp_path):
        lib = small_library()
        store = CorpusStore(tmp_path / "corpus")
        dialogues = [dialogue(i, "zh" if i % 2 else "en") for i in range(6)]
        records = synthesize_corpus(dialogues, lib, MockTTS(0), store, seed=1)
        assert len(records) == 6
        ids = {r.id for r in records}
        assert len(ids) == 6
        for r in records:
            assert validate_record(r) == []

    def test_byte_identical_across_runs(self, tmp_path):
        lib = small_library()
        dialogues = [dialogue(i) for i in range(3)]
        blobs = []
        for run in range(2):
            store = CorpusStore(tmp_path / f"run{run}")
            records = synthesize_corpus(dialogues, lib, MockTTS(0), store, seed=5)
            blobs.append([
                store.resolve_audio(t.audio_path).read_bytes()
                for r in records for t in r.dialog
            ])
        assert blobs[0] == blobs[1]
