"""Semi-quantum private comparison protocol.

Only the preparer (TP) is quantum; Alice and Bob are classical parties
restricted to either reflecting a received qubit untouched or measuring
it in the computational basis and resending a fresh qubit matching the
outcome. For an N-bit comparison the preparer creates 8N Bell pairs;
each party measures a uniformly random half of its 8N received qubits
(exactly 4N) and reflects the rest. After all qubits return, the
preparer Bell-measures every pair and announces one bit per pair: 0 if
the outcome matches what was prepared, 1 otherwise. Only then do the
parties disclose which coordinates they measured, which classifies
every pair:

    case 1  reflect/reflect  audit: any announcement of 1 signals disturbance
    case 2  measure/reflect  discarded
    case 3  reflect/measure  discarded
    case 4  measure/measure  key material

A second audit asks the preparer to disclose his Bell choices on half
of the case-4 coordinates and checks bit_A xor bit_B against the state
parity. The surviving bits form the sifted keys; the comparison layers
a shared key plus one preparer-shared key per party over them.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .bits import BitString
from .osb import ideal_key, osb_prepare, verdict_from_r
from .quantum import BellState, measure_bell, measure_single_qubit
from .runtime import (
    Arm,
    ArmNoise,
    ChannelHooks,
    EprPair,
    RunCounters,
    return_qubit,
    send_qubit,
)
from .transcript import (
    ComparisonOutcome,
    ProtocolError,
    Transcript,
    Verdict,
    fmt_bits,
    fmt_positions,
)

STAGE_PREPARE = "prepare"
STAGE_TRANSMIT = "transmit"
STAGE_PARTY = "party-phase"
STAGE_BELL_ANNOUNCE = "bell-announce"
STAGE_SIFT = "sift"
STAGE_PARITY_AUDIT = "parity-audit"
STAGE_COMPARE = "compare"


class ClassicalAction(Enum):
    MEASURE = "measure"
    REFLECT = "reflect"


class YieldShortfall(Exception):
    """Fewer than 2N both-measured pairs; the attempt must be redrawn."""


@dataclass(frozen=True)
class SqpcConfig:
    n: int
    seed: int = 0
    noise_a: ArmNoise | None = None
    noise_b: ArmNoise | None = None
    case1_tolerance: float = 0.0
    max_attempts: int = 64

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not 0.0 <= self.case1_tolerance <= 1.0:
            raise ValueError("case1_tolerance must be in [0, 1]")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be at least 1")


def sqpc_prepare(n: int, rng: np.random.Generator
                 ) -> tuple[list[BellState], list[EprPair]]:
    """8N uniformly chosen Bell pairs (no decoys; case 1 is the check)."""
    return osb_prepare(4 * n, rng)  # 2 * (4n) = 8n pairs


def classical_party_phase(pairs: list[EprPair], position: int,
                          rng: np.random.Generator
                          ) -> tuple[list[ClassicalAction], dict[int, int]]:
    """Measure a uniform half of the received qubits, reflect the rest.

    Measuring collapses the party's wing of the joint state, which is
    exactly what resending a fresh computational-basis qubit produces.
    Returns the per-pair action list and the recorded bits.
    """
    total = len(pairs)
    if total % 2:
        raise ProtocolError("pair count must be even to measure exactly half")
    measured = {int(i) for i in rng.choice(total, size=total // 2, replace=False)}
    actions: list[ClassicalAction] = []
    recorded: dict[int, int] = {}
    for i, pair in enumerate(pairs):
        if i in measured:
            bit, pair.rho = measure_single_qubit(pair.rho, position, rng)
            recorded[i] = bit
            actions.append(ClassicalAction.MEASURE)
        else:
            actions.append(ClassicalAction.REFLECT)
    return actions, recorded


def tp_bell_phase(pairs: list[EprPair], bell_choices: list[BellState],
                  rng: np.random.Generator) -> list[int]:
    """Bell-measure every returned pair; 0 means the prepared state."""
    announcements = []
    for pair, prepared in zip(pairs, bell_choices):
        outcome = measure_bell(pair.rho, rng)
        announcements.append(0 if outcome is prepared else 1)
    return announcements


@dataclass(frozen=True)
class SiftResult:
    passed: bool
    case1_positions: tuple[int, ...]
    case4_positions: tuple[int, ...]
    case1_mismatch_rate: float
    case1_mismatches: int


def sqpc_sift(actions_a: list[ClassicalAction], actions_b: list[ClassicalAction],
              announcements: list[int], tolerance: float) -> SiftResult:
    """Classify pairs by the disclosed actions and audit the reflected ones.

    Measure/reflect and reflect/measure pairs are discarded; the audit
    fails when the fraction of reflect/reflect pairs announced as
    changed exceeds ``tolerance``.
    """
    if not len(actions_a) == len(actions_b) == len(announcements):
        raise ProtocolError("action and announcement lists must align")
    case1 = tuple(i for i, (a, b) in enumerate(zip(actions_a, actions_b))
                  if a is ClassicalAction.REFLECT and b is ClassicalAction.REFLECT)
    case4 = tuple(i for i, (a, b) in enumerate(zip(actions_a, actions_b))
                  if a is ClassicalAction.MEASURE and b is ClassicalAction.MEASURE)
    mismatches = sum(announcements[i] for i in case1)
    rate = mismatches / len(case1) if case1 else 0.0
    return SiftResult(passed=rate <= tolerance, case1_positions=case1,
                      case4_positions=case4, case1_mismatch_rate=rate,
                      case1_mismatches=mismatches)


@dataclass(frozen=True)
class ParityAuditResult:
    passed: bool
    audited_positions: tuple[int, ...]
    retained_positions: tuple[int, ...]
    violations: tuple[int, ...]


def sqpc_parity_audit(bits_a: dict[int, int], bits_b: dict[int, int],
                      case4_positions: tuple[int, ...],
                      bell_choices: list[BellState], n: int,
                      rng: np.random.Generator) -> ParityAuditResult:
    """Disclose Bell choices on N random case-4 coordinates and check them.

    Passes only if bit_A xor bit_B equals the disclosed state parity at
    every audited coordinate. The first N surviving coordinates (in
    transmission order) become the key positions.
    """
    if len(case4_positions) < 2 * n:
        raise YieldShortfall(
            f"need {2 * n} both-measured pairs, got {len(case4_positions)}")
    audited = tuple(sorted(int(case4_positions[j]) for j in rng.choice(
        len(case4_positions), size=n, replace=False)))
    violations = tuple(i for i in audited
                       if bits_a[i] ^ bits_b[i] != bell_choices[i].parity)
    audited_set = set(audited)
    retained = tuple(i for i in case4_positions if i not in audited_set)[:n]
    return ParityAuditResult(passed=not violations, audited_positions=audited,
                             retained_positions=retained, violations=violations)


@dataclass(frozen=True)
class SqpcComparison:
    c_a: BitString
    c_b: BitString
    c_tp: BitString
    r: BitString
    outcome: ComparisonOutcome


def sqpc_compare(m_a: BitString, m_b: BitString, k_a: BitString,
                 k_b: BitString, k_ab: BitString, k_at: BitString,
                 k_bt: BitString, retained_parities: BitString
                 ) -> SqpcComparison:
    """Key-layered XOR comparison.

    C_A = M_A + K_A + K_AB + K_AT and C_B = M_B + K_B + K_AB + K_BT;
    the preparer, knowing K_AT and K_BT, computes
    R = C_A + C_B + C_TP + K_AT + K_BT. Every honest key layer cancels,
    leaving R = M_A + M_B.
    """
    lengths = {s.length for s in (m_a, m_b, k_a, k_b, k_ab, k_at, k_bt,
                                  retained_parities)}
    if len(lengths) != 1:
        raise ProtocolError(f"string lengths differ: {sorted(lengths)}")
    c_a = m_a ^ k_a ^ k_ab ^ k_at
    c_b = m_b ^ k_b ^ k_ab ^ k_bt
    r = c_a ^ c_b ^ retained_parities ^ k_at ^ k_bt
    return SqpcComparison(c_a, c_b, retained_parities, r, verdict_from_r(r))


@dataclass
class SqpcRunResult:
    outcome: ComparisonOutcome
    transcript: Transcript
    n: int
    seed: int
    attempts: int
    bell_choices: tuple[BellState, ...]
    announcements: tuple[int, ...]
    actions_a: tuple[ClassicalAction, ...]
    actions_b: tuple[ClassicalAction, ...]
    case1_positions: tuple[int, ...]
    case4_positions: tuple[int, ...]
    case1_mismatch_rate: float
    case1_mismatches: int
    counters: RunCounters
    bits_a: dict[int, int]
    bits_b: dict[int, int]
    k_a: BitString | None = None
    k_b: BitString | None = None
    k_ab: BitString | None = None
    k_at: BitString | None = None
    k_bt: BitString | None = None
    c_a: BitString | None = None
    c_b: BitString | None = None
    c_tp: BitString | None = None
    r: BitString | None = None
    audited_positions: tuple[int, ...] = ()
    retained_positions: tuple[int, ...] = ()

    @property
    def aborted(self) -> bool:
        return self.outcome.aborted


def run_sqpc(m_a: BitString, m_b: BitString, config: SqpcConfig,
             adversary: ChannelHooks | None = None) -> SqpcRunResult:
    """Execute one full run, redrawing on key-yield shortfall.

    A shortfall (fewer than 2N both-measured pairs) is not a security
    event; the attempt is logged and redrawn with a fresh child seed,
    up to ``config.max_attempts`` times.
    """
    if m_a.length != config.n or m_b.length != config.n:
        raise ProtocolError("secret lengths must equal config.n")
    attempt_seeds = np.random.SeedSequence(config.seed).spawn(config.max_attempts)
    restarts = 0
    for attempt, seed_seq in enumerate(attempt_seeds, start=1):
        try:
            return _run_attempt(m_a, m_b, config, adversary, seed_seq,
                                attempt, restarts)
        except YieldShortfall:
            restarts += 1
            continue
    raise ProtocolError(
        f"no attempt yielded {2 * config.n} both-measured pairs "
        f"in {config.max_attempts} tries")


def _run_attempt(m_a: BitString, m_b: BitString, config: SqpcConfig,
                 adversary: ChannelHooks | None,
                 seed_seq: np.random.SeedSequence, attempt: int,
                 restarts: int) -> SqpcRunResult:
    n = config.n
    tp_rng, alice_rng, bob_rng, eve_rng, key_rng = (
        np.random.default_rng(s) for s in seed_seq.spawn(5))
    transcript = Transcript()
    counters = RunCounters()
    if restarts:
        transcript.record(STAGE_PREPARE, "harness", "restart",
                          f"attempt={attempt} shortfalls={restarts}")

    bell_choices, pairs = sqpc_prepare(n, tp_rng)
    counters.qubits_prepared += 16 * n
    transcript.record(STAGE_PREPARE, "tp", "prepare-pairs", f"pairs={8 * n}")

    for pair in pairs:
        send_qubit(pair, 0, Arm.A, config.noise_a, adversary, eve_rng, "alice")
        send_qubit(pair, 1, Arm.B, config.noise_b, adversary, eve_rng, "bob")
    if adversary is not None:
        for pair in pairs:
            adversary.on_pair_sent(pair, eve_rng)
    transcript.record(STAGE_TRANSMIT, "tp", "send-sequences",
                      f"arm_a_qubits={8 * n} arm_b_qubits={8 * n}")

    actions_a, bits_a = classical_party_phase(pairs, 0, alice_rng)
    measured_a = set(bits_a)
    counters.qubits_prepared += len(measured_a)  # fresh resends
    if adversary is not None:
        adversary.after_alice_phase(pairs, measured_a, eve_rng)

    actions_b, bits_b = classical_party_phase(pairs, 1, bob_rng)
    counters.qubits_prepared += len(bits_b)
    transcript.record(STAGE_PARTY, "alice", "measured-count", str(len(bits_a)))
    transcript.record(STAGE_PARTY, "bob", "measured-count", str(len(bits_b)))

    for pair in pairs:
        return_qubit(pair, 0, Arm.A, config.noise_a, adversary, eve_rng)
        return_qubit(pair, 1, Arm.B, config.noise_b, adversary, eve_rng)
    if adversary is not None:
        adversary.after_returns(pairs, measured_a, eve_rng)

    announcements = tp_bell_phase(pairs, bell_choices, tp_rng)
    # commitment: match bits go on record before any action disclosure
    transcript.record(STAGE_BELL_ANNOUNCE, "tp", "announce-match-bits",
                      fmt_bits(announcements))
    counters.decoding_bits += 8 * n

    transcript.record(STAGE_SIFT, "alice", "disclose-measured-coordinates",
                      fmt_positions(sorted(bits_a)))
    transcript.record(STAGE_SIFT, "bob", "disclose-measured-coordinates",
                      fmt_positions(sorted(bits_b)))
    counters.decoding_bits += 8 * n  # 4N-bit disclosure per party

    sift = sqpc_sift(actions_a, actions_b, announcements,
                     config.case1_tolerance)
    transcript.record(STAGE_SIFT, "all", "case-counts",
                      f"case1={len(sift.case1_positions)} "
                      f"case4={len(sift.case4_positions)} "
                      f"case1_mismatch_rate={sift.case1_mismatch_rate!r}")

    base = dict(outcome=None, transcript=transcript, n=n, seed=config.seed,
                attempts=attempt, bell_choices=tuple(bell_choices),
                announcements=tuple(announcements),
                actions_a=tuple(actions_a), actions_b=tuple(actions_b),
                case1_positions=sift.case1_positions,
                case4_positions=sift.case4_positions,
                case1_mismatch_rate=sift.case1_mismatch_rate,
                case1_mismatches=sift.case1_mismatches,
                counters=counters, bits_a=bits_a, bits_b=bits_b)

    if not sift.passed:
        transcript.record(STAGE_SIFT, "all", "abort",
                          f"rate={sift.case1_mismatch_rate!r}")
        base["outcome"] = ComparisonOutcome(
            Verdict.ABORTED, abort_stage=STAGE_SIFT,
            abort_reason="reflected-pair-mismatch",
            observed_error_rate=sift.case1_mismatch_rate)
        return SqpcRunResult(**base)

    if len(sift.case4_positions) < 2 * n:
        raise YieldShortfall(
            f"{len(sift.case4_positions)} both-measured pairs < {2 * n}")

    audit = sqpc_parity_audit(bits_a, bits_b, sift.case4_positions,
                              bell_choices, n, tp_rng)
    transcript.record(STAGE_PARITY_AUDIT, "tp", "disclose-bell-choices",
                      f"positions={fmt_positions(audit.audited_positions)} "
                      f"states={','.join(bell_choices[i].token for i in audit.audited_positions)}")
    if not audit.passed:
        rate = len(audit.violations) / len(audit.audited_positions)
        transcript.record(STAGE_PARITY_AUDIT, "all", "abort",
                          f"violations={fmt_positions(audit.violations)}")
        base["outcome"] = ComparisonOutcome(
            Verdict.ABORTED, abort_stage=STAGE_PARITY_AUDIT,
            abort_reason="parity-violation", observed_error_rate=rate)
        base["audited_positions"] = audit.audited_positions
        return SqpcRunResult(**base)

    retained = audit.retained_positions
    k_a = BitString.from_bits(bits_a[i] for i in retained)
    k_b = BitString.from_bits(bits_b[i] for i in retained)
    parities = BitString.from_bits(bell_choices[i].parity for i in retained)
    k_ab = ideal_key(n, key_rng)
    k_at = ideal_key(n, key_rng)
    k_bt = ideal_key(n, key_rng)

    comparison = sqpc_compare(m_a, m_b, k_a, k_b, k_ab, k_at, k_bt, parities)
    transcript.record(STAGE_COMPARE, "alice", "announce-cipher",
                      comparison.c_a.to01())
    transcript.record(STAGE_COMPARE, "bob", "announce-cipher",
                      comparison.c_b.to01())
    transcript.record(STAGE_COMPARE, "tp", "announce-verdict",
                      comparison.outcome.verdict.value)
    counters.decoding_bits += 2 * n + 1

    base["outcome"] = comparison.outcome
    base["audited_positions"] = audit.audited_positions
    return SqpcRunResult(**base, k_a=k_a, k_b=k_b, k_ab=k_ab, k_at=k_at,
                         k_bt=k_bt, c_a=comparison.c_a, c_b=comparison.c_b,
                         c_tp=comparison.c_tp, r=comparison.r,
                         retained_positions=retained)
