"""Transcript ingest: turns raw recognizer events into finalized utterances.

Interim results only update pending state; a final result emits exactly one
trimmed utterance.  Only finals feed extraction, which keeps replay
deterministic regardless of how chatty the recognizer's interim stream was.
"""

from __future__ import annotations

from dataclasses import dataclass


class OutOfOrderEvent(Exception):
    """seq did not advance; the event must be dropped."""


@dataclass(frozen=True)
class TranscriptEvent:
    session_id: str
    seq: int
    text: str
    is_final: bool
    t_ms: int


@dataclass(frozen=True)
class FinalizedUtterance:
    text: str
    t_start_ms: int
    t_end_ms: int
    utterance_id: int

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("utterance text must be non-empty")
        if self.t_start_ms > self.t_end_ms:
            raise ValueError("t_start_ms must be <= t_end_ms")


@dataclass
class _SessionState:
    last_seq: int = -1
    pending_start_ms: int | None = None
    next_utterance_id: int = 1
    empty_finals: int = 0


class TranscriptIngestor:
    """Per-session segment assembly; sessions are independent."""

    def __init__(self):
        self._sessions: dict[str, _SessionState] = {}

    def ingest(self, event: TranscriptEvent) -> list[FinalizedUtterance]:
        state = self._sessions.setdefault(event.session_id, _SessionState())
        if event.seq <= state.last_seq:
            raise OutOfOrderEvent(
                f"seq {event.seq} after {state.last_seq} in session {event.session_id}"
            )
        state.last_seq = event.seq

        if not event.is_final:
            if state.pending_start_ms is None:
                state.pending_start_ms = event.t_ms
            return []

        # Final event closes the segment whether or not it carried text.
        start = state.pending_start_ms if state.pending_start_ms is not None else event.t_ms
        state.pending_start_ms = None
        text = event.text.strip()
        if not text:
            state.empty_finals += 1
            return []
        utterance = FinalizedUtterance(
            text=text,
            t_start_ms=start,
            t_end_ms=event.t_ms,
            utterance_id=state.next_utterance_id,
        )
        state.next_utterance_id += 1
        return [utterance]

    def reset(self, session_id: str) -> None:
        self._sessions.pop(session_id, None)

    def empty_final_count(self, session_id: str) -> int:
        state = self._sessions.get(session_id)
        return state.empty_finals if state else 0
