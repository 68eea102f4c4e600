"""Shared machinery for protocol runs.

A run owns a set of EPR pairs, each tracked as a 4x4 density matrix,
and moves individual qubits between holders over noisy arms. An
adversary plugs into the transmissions through the `ChannelHooks`
interface; the default hooks do nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .noise import NoiseKind, kraus_set
from .quantum import BellState, I2, apply_kraus_stack, two_qubit_kraus_stack


class Arm(Enum):
    """Which party's channel a qubit is traveling on."""

    A = "a"
    B = "b"


ArmNoise = tuple[NoiseKind, float]


@dataclass
class EprPair:
    """One two-qubit pair tracked through a run."""

    index: int
    role: str  # "message" or "decoy"
    bell: BellState
    rho: np.ndarray
    holder: list[str] = field(default_factory=lambda: ["tp", "tp"])


def _one_sided_stack(operators, position: int) -> np.ndarray:
    if position == 0:
        return two_qubit_kraus_stack(operators, [I2])
    return two_qubit_kraus_stack([I2], operators)


def apply_arm_noise(pair: EprPair, position: int, noise: ArmNoise | None) -> None:
    """One channel traversal on one qubit of the pair (in place)."""
    if noise is None:
        return
    kind, p = noise
    if p == 0.0:
        return
    ops = kraus_set(kind, p).operators
    pair.rho = apply_kraus_stack(pair.rho, _one_sided_stack(ops, position))


class ChannelHooks:
    """Adversary insertion points; the base class is a no-op observer.

    `on_qubit_sent` fires per qubit on the outbound (preparer to party)
    traversal, `on_pair_sent` once per pair after all its qubits have
    been transmitted, and `on_qubit_returned` per qubit on the return
    traversal (semi-quantum runs only). The phase hooks let a dishonest
    party act between protocol stages.
    """

    def on_qubit_sent(self, pair: EprPair, position: int, arm: Arm,
                      rng: np.random.Generator) -> None:
        pass

    def on_pair_sent(self, pair: EprPair, rng: np.random.Generator) -> None:
        pass

    def on_qubit_returned(self, pair: EprPair, position: int, arm: Arm,
                          rng: np.random.Generator) -> None:
        pass

    def after_alice_phase(self, pairs: list[EprPair], measured_a: set[int],
                          rng: np.random.Generator) -> None:
        pass

    def after_returns(self, pairs: list[EprPair], measured_a: set[int],
                      rng: np.random.Generator) -> None:
        pass


@dataclass
class RunCounters:
    """Resource usage of one run, in the efficiency ledger's units.

    ``decoding_bits`` counts only classical communication a party needs
    to decode the result (ciphertexts, measurement-match announcements,
    coordinate disclosures, the verdict bit); eavesdropping-check and
    correlation-check traffic is excluded by convention.
    """

    qubits_prepared: int = 0
    decoding_bits: int = 0


def send_qubit(pair: EprPair, position: int, arm: Arm,
               noise: ArmNoise | None, adversary: ChannelHooks | None,
               eve_rng: np.random.Generator, new_holder: str) -> None:
    """Move one qubit across an arm: noise, then any adversary action."""
    apply_arm_noise(pair, position, noise)
    if adversary is not None:
        adversary.on_qubit_sent(pair, position, arm, eve_rng)
    pair.holder[position] = new_holder


def return_qubit(pair: EprPair, position: int, arm: Arm,
                 noise: ArmNoise | None, adversary: ChannelHooks | None,
                 eve_rng: np.random.Generator) -> None:
    """Move one qubit back to the preparer (second channel traversal)."""
    apply_arm_noise(pair, position, noise)
    if adversary is not None:
        adversary.on_qubit_returned(pair, position, arm, eve_rng)
    pair.holder[position] = "tp"
