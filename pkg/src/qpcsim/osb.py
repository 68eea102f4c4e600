"""Orthogonal-state-based private comparison protocol.

Three parties: a preparer (TP) who creates Bell pairs and announces the
final verdict, and two comparers (Alice, Bob) holding N-bit secrets.
For a key of N bits the preparer creates 2N message pairs plus N whole
decoy pairs per arm, every decoy prepared as psi+. Sequence of stages:

    prepare            2N Bell pairs, arm sequences + interleaved decoys
    decoy-check        receivers Bell-measure disclosed decoy pairs
    correlation-check  parties measure, sacrifice half, compare parity
    compare            XOR-encrypted ciphertexts, verdict from R

The sacrifice step detects attacks that preserve the decoy states but
flip Bell parities (a bit-flip arm, or a Pauli iY applied to one arm).
Keys cancel in the verdict computation, so the preparer learns only
whether the secrets agree, and an outside observer learns nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bits import BitString
from .quantum import (
    BellState,
    bell_density,
    measure_bell,
    measure_single_qubit,
    spawn_rngs,
)
from .runtime import (
    Arm,
    ArmNoise,
    ChannelHooks,
    EprPair,
    RunCounters,
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
STAGE_DECOY_CHECK = "decoy-check"
STAGE_CORRELATION_CHECK = "correlation-check"
STAGE_COMPARE = "compare"

_BELLS = (BellState.PSI_PLUS, BellState.PSI_MINUS,
          BellState.PHI_PLUS, BellState.PHI_MINUS)


@dataclass(frozen=True)
class OsbConfig:
    n: int
    seed: int = 0
    noise_a: ArmNoise | None = None
    noise_b: ArmNoise | None = None
    gv_tolerance: float = 0.0
    check_fraction: float = 0.5

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not 0.0 <= self.gv_tolerance <= 1.0:
            raise ValueError("gv_tolerance must be in [0, 1]")
        if not 0.0 <= self.check_fraction <= 1.0:
            raise ValueError("check_fraction must be in [0, 1]")


def osb_prepare(n: int, rng: np.random.Generator
                ) -> tuple[list[BellState], list[EprPair]]:
    """Draw 2N uniform Bell choices and build the message pairs."""
    if n < 1:
        raise ValueError("n must be at least 1")
    choices = [_BELLS[int(rng.integers(0, 4))] for _ in range(2 * n)]
    pairs = [EprPair(index=i, role="message", bell=s, rho=bell_density(s))
             for i, s in enumerate(choices)]
    return choices, pairs


def make_decoy_pairs(count: int, start_index: int) -> list[EprPair]:
    """Whole psi+ pairs used as travel checks inside one sequence."""
    return [EprPair(index=start_index + i, role="decoy",
                    bell=BellState.PSI_PLUS,
                    rho=bell_density(BellState.PSI_PLUS))
            for i in range(count)]


@dataclass
class Sequence:
    """One arm's ordered qubit refs: (pair, qubit position) per slot."""

    arm: Arm
    slots: list[tuple[EprPair, int]]
    decoy_blocks: list[tuple[int, int]]  # slot index pair per decoy
    message_slots: list[int]             # slot index per message pair, in order


def osb_insert_decoys(message_pairs: list[EprPair], message_position: int,
                      decoy_pairs: list[EprPair], arm: Arm,
                      rng: np.random.Generator) -> Sequence:
    """Interleave whole decoy pairs into a message-qubit sequence.

    Message qubits keep their preparation order; each decoy pair
    occupies one uniformly random item slot (its two qubits adjacent).
    """
    total_items = len(message_pairs) + len(decoy_pairs)
    decoy_items = sorted(int(i) for i in rng.choice(total_items,
                                                    size=len(decoy_pairs),
                                                    replace=False))
    slots: list[tuple[EprPair, int]] = []
    decoy_blocks: list[tuple[int, int]] = []
    message_slots: list[int] = []
    msg_iter = iter(message_pairs)
    decoy_iter = iter(decoy_pairs)
    decoy_set = set(decoy_items)
    for item in range(total_items):
        if item in decoy_set:
            pair = next(decoy_iter)
            decoy_blocks.append((len(slots), len(slots) + 1))
            slots.append((pair, 0))
            slots.append((pair, 1))
        else:
            pair = next(msg_iter)
            message_slots.append(len(slots))
            slots.append((pair, message_position))
    return Sequence(arm=arm, slots=slots, decoy_blocks=decoy_blocks,
                    message_slots=message_slots)


def transmit_sequence(seq: Sequence, noise: ArmNoise | None,
                      adversary: ChannelHooks | None,
                      eve_rng: np.random.Generator, holder: str) -> None:
    for pair, position in seq.slots:
        send_qubit(pair, position, seq.arm, noise, adversary, eve_rng, holder)


@dataclass(frozen=True)
class GvCheckResult:
    arm: Arm
    error_rate: float
    passed: bool
    outcomes: tuple[BellState, ...]
    reason: str | None = None


def osb_gv_check(seq: Sequence, claimed_blocks: list[tuple[int, int]],
                 tolerance: float, rng: np.random.Generator,
                 transcript: Transcript | None = None,
                 actor: str = "receiver") -> GvCheckResult:
    """Bell-measure the disclosed decoy pairs and grade the error rate.

    The error rate is the fraction of decoy outcomes differing from
    psi+. A malformed position map fails the check with a protocol-error
    reason instead of grading.
    """
    seen: set[int] = set()
    for first, second in claimed_blocks:
        ok = (0 <= first < len(seq.slots) and 0 <= second < len(seq.slots)
              and first != second and first not in seen and second not in seen)
        if ok:
            pair_a, pos_a = seq.slots[first]
            pair_b, pos_b = seq.slots[second]
            ok = (pair_a is pair_b and pair_a.role == "decoy"
                  and {pos_a, pos_b} == {0, 1})
        if not ok:
            return GvCheckResult(arm=seq.arm, error_rate=1.0, passed=False,
                                 outcomes=(), reason="malformed-position-map")
        seen.update((first, second))
    if transcript is not None:
        transcript.record(STAGE_DECOY_CHECK, "tp", "disclose-decoy-positions",
                          f"arm={seq.arm.value} "
                          f"blocks={fmt_positions(i for b in claimed_blocks for i in b)}")
    outcomes: list[BellState] = []
    for first, _second in claimed_blocks:
        pair, _ = seq.slots[first]
        outcomes.append(measure_bell(pair.rho, rng))
    errors = sum(1 for o in outcomes if o is not BellState.PSI_PLUS)
    rate = errors / len(outcomes) if outcomes else 0.0
    passed = rate <= tolerance
    if transcript is not None:
        transcript.record(STAGE_DECOY_CHECK, actor, "announce-decoy-outcomes",
                          f"arm={seq.arm.value} "
                          f"outcomes={','.join(o.token for o in outcomes)} "
                          f"rate={rate!r}")
    return GvCheckResult(arm=seq.arm, error_rate=rate, passed=passed,
                         outcomes=tuple(outcomes))


@dataclass(frozen=True)
class CorrelationResult:
    passed: bool
    k_a: BitString | None
    k_b: BitString | None
    retained_positions: tuple[int, ...]
    retained_parities: BitString | None
    checked_positions: tuple[int, ...]
    violations: tuple[int, ...]


def osb_measure_and_correlate(message_pairs: list[EprPair],
                              bell_choices: list[BellState],
                              n: int,
                              alice_rng: np.random.Generator,
                              bob_rng: np.random.Generator,
                              check_fraction: float = 0.5,
                              transcript: Transcript | None = None
                              ) -> CorrelationResult:
    """Measure all message pairs, sacrifice a share, sift the keys.

    Alice picks round(2N * check_fraction) coordinates; both parties
    announce their bits there and the preparer announces the matching
    Bell parities. Any coordinate with bit_A xor bit_B != parity fails
    the check. The first N unchecked coordinates (transmission order)
    become the key positions.
    """
    two_n = len(message_pairs)
    if len(bell_choices) != two_n:
        raise ProtocolError("bell choice list does not match pair count")
    n_checked = round(two_n * check_fraction)
    if two_n - n_checked < n:
        raise ProtocolError(
            f"check fraction {check_fraction} leaves fewer than {n} key bits")

    bits_a: list[int] = []
    bits_b: list[int] = []
    for pair in message_pairs:
        bit_a, pair.rho = measure_single_qubit(pair.rho, 0, alice_rng)
        bit_b, pair.rho = measure_single_qubit(pair.rho, 1, bob_rng)
        bits_a.append(bit_a)
        bits_b.append(bit_b)

    checked = tuple(sorted(int(i) for i in alice_rng.choice(
        two_n, size=n_checked, replace=False))) if n_checked else ()
    if transcript is not None and checked:
        transcript.record(STAGE_CORRELATION_CHECK, "alice",
                          "announce-check-coordinates", fmt_positions(checked))
        transcript.record(STAGE_CORRELATION_CHECK, "alice", "announce-bits",
                          fmt_bits(bits_a[i] for i in checked))
        transcript.record(STAGE_CORRELATION_CHECK, "bob", "announce-bits",
                          fmt_bits(bits_b[i] for i in checked))
        transcript.record(STAGE_CORRELATION_CHECK, "tp", "announce-parities",
                          fmt_bits(bell_choices[i].parity for i in checked))
    violations = tuple(i for i in checked
                       if bits_a[i] ^ bits_b[i] != bell_choices[i].parity)
    if violations:
        if transcript is not None:
            transcript.record(STAGE_CORRELATION_CHECK, "all", "abort",
                              f"violations={fmt_positions(violations)}")
        return CorrelationResult(False, None, None, (), None, checked,
                                 violations)

    checked_set = set(checked)
    retained = tuple(i for i in range(two_n) if i not in checked_set)[:n]
    k_a = BitString.from_bits(bits_a[i] for i in retained)
    k_b = BitString.from_bits(bits_b[i] for i in retained)
    parities = BitString.from_bits(bell_choices[i].parity for i in retained)
    return CorrelationResult(True, k_a, k_b, retained, parities, checked, ())


def ideal_key(length: int, rng: np.random.Generator) -> BitString:
    """Stand-in for an established shared key: uniform private bits.

    The key is handed to exactly the intended holders and never enters
    the transcript.
    """
    if length < 1:
        raise ValueError("key length must be at least 1")
    return BitString.random(length, rng)


def verdict_from_r(r: BitString) -> ComparisonOutcome:
    if r.is_zero:
        return ComparisonOutcome(Verdict.EQUAL)
    return ComparisonOutcome(Verdict.UNEQUAL, unequal_positions=r.ones_positions())


@dataclass(frozen=True)
class OsbComparison:
    c_a: BitString
    c_b: BitString
    c_tp: BitString
    r: BitString
    outcome: ComparisonOutcome


def osb_compare(m_a: BitString, m_b: BitString, k_a: BitString,
                k_b: BitString, k_ab: BitString,
                retained_parities: BitString) -> OsbComparison:
    """XOR-encrypt both secrets and derive the verdict.

    C_A = M_A + K_A + K_AB, C_B = M_B + K_B + K_AB (bitwise XOR), the
    preparer's string C_TP holds the retained Bell parities, and
    R = C_A + C_B + C_TP. The shared key cancels in R, and the sifted
    keys cancel against the parities, so R = M_A + M_B for honest runs.
    """
    lengths = {s.length for s in (m_a, m_b, k_a, k_b, k_ab, retained_parities)}
    if len(lengths) != 1:
        raise ProtocolError(f"string lengths differ: {sorted(lengths)}")
    c_a = m_a ^ k_a ^ k_ab
    c_b = m_b ^ k_b ^ k_ab
    r = c_a ^ c_b ^ retained_parities
    return OsbComparison(c_a, c_b, retained_parities, r, verdict_from_r(r))


@dataclass
class OsbRunResult:
    outcome: ComparisonOutcome
    transcript: Transcript
    n: int
    seed: int
    bell_choices: tuple[BellState, ...]
    counters: RunCounters
    gv_error_rates: dict[str, float]
    k_a: BitString | None = None
    k_b: BitString | None = None
    k_ab: BitString | None = None
    c_a: BitString | None = None
    c_b: BitString | None = None
    c_tp: BitString | None = None
    r: BitString | None = None
    retained_positions: tuple[int, ...] = ()
    checked_positions: tuple[int, ...] = ()

    @property
    def aborted(self) -> bool:
        return self.outcome.aborted


def run_osb(m_a: BitString, m_b: BitString, config: OsbConfig,
            adversary: ChannelHooks | None = None) -> OsbRunResult:
    """Execute one full run of the protocol."""
    n = config.n
    if m_a.length != n or m_b.length != n:
        raise ProtocolError("secret lengths must equal config.n")
    tp_rng, alice_rng, bob_rng, eve_rng, key_rng = spawn_rngs(config.seed, 5)
    transcript = Transcript()
    counters = RunCounters()

    bell_choices, message_pairs = osb_prepare(n, tp_rng)
    decoys_a = make_decoy_pairs(n, start_index=2 * n)
    decoys_b = make_decoy_pairs(n, start_index=3 * n)
    counters.qubits_prepared += 4 * n + 4 * n  # message + decoy qubits
    transcript.record(STAGE_PREPARE, "tp", "prepare-pairs",
                      f"message_pairs={2 * n} decoy_pairs_per_arm={n}")

    seq_a = osb_insert_decoys(message_pairs, 0, decoys_a, Arm.A, tp_rng)
    seq_b = osb_insert_decoys(message_pairs, 1, decoys_b, Arm.B, tp_rng)
    transmit_sequence(seq_a, config.noise_a, adversary, eve_rng, "alice")
    transmit_sequence(seq_b, config.noise_b, adversary, eve_rng, "bob")
    for pair in (*message_pairs, *decoys_a, *decoys_b):
        if adversary is not None:
            adversary.on_pair_sent(pair, eve_rng)
    transcript.record(STAGE_TRANSMIT, "tp", "send-sequences",
                      f"arm_a_qubits={len(seq_a.slots)} arm_b_qubits={len(seq_b.slots)}")

    gv_rates: dict[str, float] = {}
    for seq, rng, actor in ((seq_a, alice_rng, "alice"), (seq_b, bob_rng, "bob")):
        result = osb_gv_check(seq, seq.decoy_blocks, config.gv_tolerance,
                              rng, transcript, actor)
        gv_rates[seq.arm.value] = result.error_rate
        if not result.passed:
            transcript.record(STAGE_DECOY_CHECK, "all", "abort",
                              f"arm={seq.arm.value} rate={result.error_rate!r}")
            outcome = ComparisonOutcome(
                Verdict.ABORTED, abort_stage=STAGE_DECOY_CHECK,
                abort_reason=result.reason or "decoy-error-rate",
                observed_error_rate=result.error_rate)
            return OsbRunResult(outcome, transcript, n, config.seed,
                                tuple(bell_choices), counters, gv_rates)

    correlation = osb_measure_and_correlate(
        message_pairs, bell_choices, n, alice_rng, bob_rng,
        config.check_fraction, transcript)
    if not correlation.passed:
        rate = len(correlation.violations) / max(len(correlation.checked_positions), 1)
        outcome = ComparisonOutcome(
            Verdict.ABORTED, abort_stage=STAGE_CORRELATION_CHECK,
            abort_reason="parity-violation", observed_error_rate=rate)
        return OsbRunResult(outcome, transcript, n, config.seed,
                            tuple(bell_choices), counters, gv_rates,
                            checked_positions=correlation.checked_positions)

    k_ab = ideal_key(n, key_rng)
    comparison = osb_compare(m_a, m_b, correlation.k_a, correlation.k_b,
                             k_ab, correlation.retained_parities)
    transcript.record(STAGE_COMPARE, "alice", "announce-cipher",
                      comparison.c_a.to01())
    transcript.record(STAGE_COMPARE, "bob", "announce-cipher",
                      comparison.c_b.to01())
    transcript.record(STAGE_COMPARE, "tp", "announce-verdict",
                      comparison.outcome.verdict.value)
    counters.decoding_bits += 2 * n + 1  # two ciphertexts and the verdict bit

    return OsbRunResult(comparison.outcome, transcript, n, config.seed,
                        tuple(bell_choices), counters, gv_rates,
                        k_a=correlation.k_a, k_b=correlation.k_b, k_ab=k_ab,
                        c_a=comparison.c_a, c_b=comparison.c_b,
                        c_tp=comparison.c_tp, r=comparison.r,
                        retained_positions=correlation.retained_positions,
                        checked_positions=correlation.checked_positions)
