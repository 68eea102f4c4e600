import pytest

from qpcsim.transcript import ComparisonOutcome, Transcript, Verdict


class TestOutcomeInvariants:
    def test_unequal_requires_positions(self):
        with pytest.raises(ValueError):
            ComparisonOutcome(Verdict.UNEQUAL)

    def test_equal_forbids_positions(self):
        with pytest.raises(ValueError):
            ComparisonOutcome(Verdict.EQUAL, unequal_positions=(1,))

    def test_abort_requires_stage(self):
        with pytest.raises(ValueError):
            ComparisonOutcome(Verdict.ABORTED)

    def test_aborted_flag(self):
        out = ComparisonOutcome(Verdict.ABORTED, abort_stage="decoy-check",
                                observed_error_rate=0.5)
        assert out.aborted


class TestTranscript:
    def test_events_serialize_one_per_line(self):
        t = Transcript()
        t.record("prepare", "tp", "prepare-pairs", "pairs=4")
        t.record("compare", "tp", "announce-verdict", "equal")
        lines = t.serialize().splitlines()
        assert lines == [
            "stage=prepare actor=tp event=prepare-pairs pairs=4",
            "stage=compare actor=tp event=announce-verdict equal",
        ]

    def test_multiline_payload_rejected(self):
        t = Transcript()
        with pytest.raises(ValueError):
            t.record("s", "a", "k", "bad\npayload")

    def test_dump_round_trips(self, tmp_path):
        t = Transcript()
        t.record("prepare", "tp", "prepare-pairs", "pairs=2")
        path = tmp_path / "t.log"
        t.dump(path)
        assert path.read_text() == t.serialize()
