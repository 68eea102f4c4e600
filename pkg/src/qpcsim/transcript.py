"""Run transcripts and comparison outcomes.

A transcript is the append-only, publicly visible record of a protocol
run: every quantum transmission, measurement announcement and classical
broadcast, one event per line when serialized. Private key material is
never written to it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class Verdict(Enum):
    EQUAL = "equal"
    UNEQUAL = "unequal"
    ABORTED = "aborted"


@dataclass(frozen=True)
class ComparisonOutcome:
    """Final result of a comparison run.

    ``unequal_positions`` is non-empty exactly when the verdict is
    UNEQUAL; an aborted outcome names the stage that tripped and the
    error rate observed there (where one was measured).
    """

    verdict: Verdict
    unequal_positions: tuple[int, ...] = ()
    abort_stage: str | None = None
    abort_reason: str | None = None
    observed_error_rate: float | None = None

    def __post_init__(self) -> None:
        if self.verdict is Verdict.UNEQUAL and not self.unequal_positions:
            raise ValueError("unequal verdict requires differing positions")
        if self.verdict is not Verdict.UNEQUAL and self.unequal_positions:
            raise ValueError("positions only accompany an unequal verdict")
        if self.verdict is Verdict.ABORTED and self.abort_stage is None:
            raise ValueError("aborted outcome must carry the tripped stage")

    @property
    def aborted(self) -> bool:
        return self.verdict is Verdict.ABORTED


class ProtocolError(ValueError):
    """A caller violated the protocol contract (not an in-protocol abort)."""


@dataclass(frozen=True)
class TranscriptEvent:
    stage: str
    actor: str
    kind: str
    payload: str

    def line(self) -> str:
        return f"stage={self.stage} actor={self.actor} event={self.kind} {self.payload}"


@dataclass
class Transcript:
    """Ordered public record of one protocol run."""

    events: list[TranscriptEvent] = field(default_factory=list)

    def record(self, stage: str, actor: str, kind: str, payload: str = "") -> None:
        if "\n" in payload:
            raise ValueError("transcript payloads are single-line")
        self.events.append(TranscriptEvent(stage, actor, kind, payload))

    def lines(self) -> list[str]:
        return [e.line() for e in self.events]

    def serialize(self) -> str:
        return "\n".join(self.lines()) + "\n"

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.serialize())


def fmt_bits(bits) -> str:
    """Compact 0/1 rendering for announcement payloads."""
    return "".join(str(int(b)) for b in bits)


def fmt_positions(positions) -> str:
    return ",".join(str(int(i)) for i in positions)
