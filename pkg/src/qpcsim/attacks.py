"""Attack strategies and the measurement harness around them.

Strategies hook into the simulated quantum channels (or, for the memory
attacks, into a dishonest classical party) and the harness runs many
independent protocol executions to measure detection rates, key
leakage, and verdict corruption.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from itertools import product

import numpy as np

from .bits import BitString
from .osb import OsbConfig, OsbRunResult, run_osb, verdict_from_r
from .quantum import (
    BellState,
    IY,
    bell_density,
    measure_single_qubit,
    single_qubit_apply,
)
from .runtime import Arm, ChannelHooks, EprPair
from .sqpc import SqpcConfig, SqpcRunResult, run_sqpc
from .transcript import ComparisonOutcome

_BELLS = (BellState.PSI_PLUS, BellState.PSI_MINUS,
          BellState.PHI_PLUS, BellState.PHI_MINUS)


class AttackKind(Enum):
    NONE = "none"
    INTERCEPT_RESEND = "intercept-resend"
    RANDOMIZE_BELL = "randomize-bell"
    IY_ALICE_ARM = "iy-alice-arm"
    MEMORY_BY_ALICE = "memory-alice"
    MEMORY_INTERCEPT_RETURNS = "memory-returns"

    @property
    def token(self) -> str:
        return self.value

    @classmethod
    def from_token(cls, token: str) -> "AttackKind":
        try:
            return cls(token.lower())
        except ValueError:
            raise ValueError(f"unknown attack {token!r}; expected one of "
                             f"{[k.value for k in cls]}") from None


_MEMORY_KINDS = (AttackKind.MEMORY_BY_ALICE, AttackKind.MEMORY_INTERCEPT_RETURNS)


@dataclass(frozen=True)
class AttackStrategy:
    """A strategy choice plus its targeting parameters."""

    kind: AttackKind
    arms: frozenset[Arm] = frozenset((Arm.A, Arm.B))
    fraction: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError("attacked fraction must be in [0, 1]")
        if not self.arms:
            raise ValueError("strategy must target at least one arm")

    def valid_for(self, protocol: str) -> bool:
        if self.kind in _MEMORY_KINDS:
            return protocol == "sqpc"
        return protocol in ("osb", "sqpc")

    @classmethod
    def parse(cls, text: str) -> "AttackStrategy":
        """Parse 'name' or 'name:fraction' (e.g. 'intercept-resend:0.5')."""
        name, _, frac = text.partition(":")
        kind = AttackKind.from_token(name)
        fraction = float(frac) if frac else 1.0
        arms = (frozenset((Arm.A,)) if kind is AttackKind.IY_ALICE_ARM
                else frozenset((Arm.A, Arm.B)))
        return cls(kind=kind, arms=arms, fraction=fraction)


# ---------------------------------------------------------------------------
# channel / dishonest-party implementations
# ---------------------------------------------------------------------------

class _NullAdversary(ChannelHooks):
    kind = AttackKind.NONE

    def recovered_bits(self) -> dict[int, int]:
        return {}


class _InterceptResend(ChannelHooks):
    """Measure traveling qubits in the computational basis and resend.

    Each qubit on a targeted arm is attacked independently with the
    configured probability. The resent qubit is the collapsed state, so
    computational-basis correlations survive but entanglement does not.
    """

    kind = AttackKind.INTERCEPT_RESEND

    def __init__(self, strategy: AttackStrategy) -> None:
        self.strategy = strategy
        self.observed: dict[tuple[int, int], int] = {}

    def on_qubit_sent(self, pair: EprPair, position: int, arm: Arm,
                      rng: np.random.Generator) -> None:
        if arm not in self.strategy.arms:
            return
        if self.strategy.fraction < 1.0 and rng.random() >= self.strategy.fraction:
            return
        bit, pair.rho = measure_single_qubit(pair.rho, position, rng)
        self.observed[(pair.index, position)] = bit

    def recovered_bits(self) -> dict[int, int]:
        # bits seen on Alice's arm, keyed by pair index
        return {idx: bit for (idx, pos), bit in self.observed.items() if pos == 0}


class _RandomizeBell(ChannelHooks):
    """Replace the joint pair state with a uniformly random Bell projector."""

    kind = AttackKind.RANDOMIZE_BELL

    def __init__(self, strategy: AttackStrategy) -> None:
        self.strategy = strategy

    def on_pair_sent(self, pair: EprPair, rng: np.random.Generator) -> None:
        if self.strategy.fraction < 1.0 and rng.random() >= self.strategy.fraction:
            return
        pair.rho = bell_density(_BELLS[int(rng.integers(0, 4))])

    def recovered_bits(self) -> dict[int, int]:
        return {}


class _PauliIYOnArm(ChannelHooks):
    """Apply iY to every qubit traveling on the targeted arm.

    Whole decoy pairs riding one sequence pick up iY on both qubits and
    are left invariant; message qubits pick up iY on one qubit only,
    which deterministically flips the pair's Bell parity.
    """

    kind = AttackKind.IY_ALICE_ARM

    def __init__(self, strategy: AttackStrategy) -> None:
        self.strategy = strategy

    def on_qubit_sent(self, pair: EprPair, position: int, arm: Arm,
                      rng: np.random.Generator) -> None:
        if arm not in self.strategy.arms:
            return
        if self.strategy.fraction < 1.0 and rng.random() >= self.strategy.fraction:
            return
        pair.rho = single_qubit_apply(pair.rho, IY, position)

    def recovered_bits(self) -> dict[int, int]:
        return {}


class _MemoryAttackBase(ChannelHooks):
    """Dishonest Alice holding Bob's qubits (or returns) in memory.

    Measuring her own wing collapses the partner wing to a definite
    computational state, so reading it is deterministic and leaves
    every density matrix the honest protocol would produce untouched;
    the reflected-pair audit cannot see either variant.
    """

    def __init__(self, strategy: AttackStrategy) -> None:
        self.strategy = strategy
        self.partner_bits: dict[int, int] = {}

    def _grab(self, pairs: list[EprPair], measured_a: set[int],
              rng: np.random.Generator) -> None:
        for i in sorted(measured_a):
            bit, pairs[i].rho = measure_single_qubit(pairs[i].rho, 1, rng)
            self.partner_bits[i] = bit

    def recovered_bits(self) -> dict[int, int]:
        return dict(self.partner_bits)


class _MemoryByAlice(_MemoryAttackBase):
    """Intercept the outbound partner qubits before Bob receives them."""

    kind = AttackKind.MEMORY_BY_ALICE

    def after_alice_phase(self, pairs, measured_a, rng) -> None:
        self._grab(pairs, measured_a, rng)


class _MemoryInterceptReturns(_MemoryAttackBase):
    """Read the partner qubits off Bob's return channel instead."""

    kind = AttackKind.MEMORY_INTERCEPT_RETURNS

    def after_returns(self, pairs, measured_a, rng) -> None:
        self._grab(pairs, measured_a, rng)


def build_adversary(strategy: AttackStrategy) -> ChannelHooks:
    """Fresh per-run adversary instance for a strategy."""
    builders = {
        AttackKind.NONE: lambda s: _NullAdversary(),
        AttackKind.INTERCEPT_RESEND: _InterceptResend,
        AttackKind.RANDOMIZE_BELL: _RandomizeBell,
        AttackKind.IY_ALICE_ARM: _PauliIYOnArm,
        AttackKind.MEMORY_BY_ALICE: _MemoryByAlice,
        AttackKind.MEMORY_INTERCEPT_RETURNS: _MemoryInterceptReturns,
    }
    return builders[strategy.kind](strategy)


# ---------------------------------------------------------------------------
# per-trial reports and campaign aggregation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AttackReport:
    """What one attacked run yielded for the attacker and the defenders."""

    detected: bool
    detection_stage: str | None
    eve_key_bits_recovered: int
    verdict_corrupted: bool
    n: int

    def __post_init__(self) -> None:
        if self.detected and self.detection_stage is None:
            raise ValueError("a detection must name its stage")
        if not self.detected and self.detection_stage is not None:
            raise ValueError("an undetected run cannot name a stage")
        if not 0 <= self.eve_key_bits_recovered <= self.n:
            raise ValueError("recovered bits must lie in [0, n]")


@dataclass
class AttackCampaign:
    """Aggregated statistics over many seeded attacked runs."""

    protocol: str
    strategy: AttackStrategy
    n: int
    trials: int
    seed: int
    reports: list[AttackReport] = field(default_factory=list)
    case1_pairs_total: int = 0
    case1_mismatch_total: int = 0
    gv_error_rate_sum: float = 0.0
    gv_checks: int = 0

    @property
    def detection_rate(self) -> float:
        return sum(r.detected for r in self.reports) / len(self.reports)

    @property
    def stage_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for r in self.reports:
            if r.detection_stage is not None:
                counts[r.detection_stage] = counts.get(r.detection_stage, 0) + 1
        return counts

    @property
    def mean_key_bits_recovered(self) -> float:
        return sum(r.eve_key_bits_recovered for r in self.reports) / len(self.reports)

    @property
    def verdict_corruption_rate(self) -> float:
        return sum(r.verdict_corrupted for r in self.reports) / len(self.reports)

    @property
    def case1_mismatch_rate(self) -> float | None:
        if not self.case1_pairs_total:
            return None
        return self.case1_mismatch_total / self.case1_pairs_total

    @property
    def mean_gv_error_rate(self) -> float | None:
        if not self.gv_checks:
            return None
        return self.gv_error_rate_sum / self.gv_checks


def _honest_outcome(m_a: BitString, m_b: BitString) -> ComparisonOutcome:
    return verdict_from_r(m_a ^ m_b)


def _count_recovered(result: SqpcRunResult | OsbRunResult,
                     adversary) -> int:
    """Final-key bits the attacker holds correctly, by construction 0 if
    the run never formed keys."""
    known = adversary.recovered_bits()
    if not known or result.aborted or not result.retained_positions:
        return 0
    if isinstance(result, SqpcRunResult):
        key = result.k_b
    else:
        key = result.k_a
    hits = 0
    for key_pos, pair_index in enumerate(result.retained_positions):
        if pair_index in known and known[pair_index] == key.bit(key_pos):
            hits += 1
    return hits


def run_with_attack(protocol: str, n: int, strategy: AttackStrategy,
                    trials: int, seed: int,
                    tolerance: float = 0.0,
                    check_fraction: float = 0.5,
                    messages: tuple[BitString, BitString] | None = None
                    ) -> AttackCampaign:
    """Run ``trials`` independent attacked executions and aggregate.

    Secrets are redrawn uniformly per trial unless ``messages`` pins
    them. Reflected-pair statistics are accumulated from the sift stage
    whether or not the run aborted there.
    """
    if protocol not in ("osb", "sqpc"):
        raise ValueError(f"unknown protocol {protocol!r}")
    if not strategy.valid_for(protocol):
        raise ValueError(f"{strategy.kind.token} is not defined for {protocol}")
    campaign = AttackCampaign(protocol=protocol, strategy=strategy, n=n,
                              trials=trials, seed=seed)
    master = np.random.SeedSequence(seed)
    msg_rng = np.random.default_rng(master.spawn(1)[0])
    trial_seeds = master.spawn(trials + 1)[1:]
    for trial_seq in trial_seeds:
        run_seed = int(trial_seq.generate_state(1)[0])
        if messages is None:
            m_a = BitString.random(n, msg_rng)
            m_b = BitString.random(n, msg_rng)
        else:
            m_a, m_b = messages
        adversary = build_adversary(strategy)
        if protocol == "osb":
            config = OsbConfig(n=n, seed=run_seed, gv_tolerance=tolerance,
                               check_fraction=check_fraction)
            result = run_osb(m_a, m_b, config, adversary)
            campaign.gv_error_rate_sum += sum(result.gv_error_rates.values())
            campaign.gv_checks += len(result.gv_error_rates)
        else:
            config = SqpcConfig(n=n, seed=run_seed, case1_tolerance=tolerance)
            result = run_sqpc(m_a, m_b, config, adversary)
            campaign.case1_pairs_total += len(result.case1_positions)
            campaign.case1_mismatch_total += result.case1_mismatches
        corrupted = (not result.aborted
                     and result.outcome != _honest_outcome(m_a, m_b))
        campaign.reports.append(AttackReport(
            detected=result.aborted,
            detection_stage=result.outcome.abort_stage,
            eve_key_bits_recovered=_count_recovered(result, adversary),
            verdict_corrupted=corrupted,
            n=n,
        ))
    return campaign


# ---------------------------------------------------------------------------
# analytic consequences and information bounds
# ---------------------------------------------------------------------------

def iy_attack_consequence(m_a: BitString, m_b: BitString) -> ComparisonOutcome:
    """Verdict forced by an undetected iY on the whole of Alice's arm.

    The attack flips every Bell parity, so the preparer's R becomes the
    complement of M_A xor M_B: all-equal secrets are announced unequal
    everywhere, all-different secrets are announced equal, and in
    general the flagged positions are exactly where the secrets agree.
    """
    return verdict_from_r((m_a ^ m_b).complement())


def eve_information_bound(cipher: BitString, known_keys: list[BitString],
                          unknown_key_count: int,
                          max_length: int = 12) -> int:
    """Posterior support of a secret given its ciphertext.

    Enumerates every assignment of the unknown pads, inverts
    M = C xor (known keys) xor (unknown keys), and counts the distinct
    messages reached. 2**n means the ciphertext reveals nothing. The
    enumeration is over the pre-verdict view: the announced verdict is
    the protocol's intended output, not leakage.
    """
    n = cipher.length
    if n > max_length:
        raise ValueError(f"enumeration limited to {max_length}-bit secrets")
    base = cipher.value
    for key in known_keys:
        if key.length != n:
            raise ValueError("key length mismatch")
        base ^= key.value
    if unknown_key_count == 0:
        return 1
    support: set[int] = set()
    full = 1 << n
    for assignment in product(range(full), repeat=unknown_key_count):
        value = base
        for key_value in assignment:
            value ^= key_value
        support.add(value)
        if len(support) == full:
            return full
    return len(support)
