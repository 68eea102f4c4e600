"""Orthogonal-state protocol: stages, checks, soundness, privacy."""

import numpy as np
import pytest

from qpcsim.bits import BitString
from qpcsim.noise import NoiseKind
from qpcsim.osb import (
    OsbConfig,
    ideal_key,
    make_decoy_pairs,
    osb_compare,
    osb_gv_check,
    osb_insert_decoys,
    osb_measure_and_correlate,
    osb_prepare,
    run_osb,
)
from qpcsim.quantum import BellState, measure_single_qubit, single_qubit_apply, IY
from qpcsim.runtime import Arm
from qpcsim.transcript import ProtocolError, Verdict


def bs(text: str) -> BitString:
    return BitString.from_bits(int(c) for c in text)


class TestPrepare:
    def test_counts_and_reproducibility(self):
        choices1, pairs1 = osb_prepare(1, np.random.default_rng(5))
        choices2, _ = osb_prepare(1, np.random.default_rng(5))
        assert len(choices1) == 2 and len(pairs1) == 2
        assert choices1 == choices2

    def test_choices_are_roughly_uniform(self):
        choices, _ = osb_prepare(100, np.random.default_rng(2))
        for kind in BellState:
            assert choices.count(kind) / 200 == pytest.approx(0.25, abs=0.05)

    def test_choices_are_uniform_at_scale(self):
        choices, _ = osb_prepare(2500, np.random.default_rng(17))
        for kind in BellState:
            assert choices.count(kind) / 5000 == pytest.approx(0.25, abs=0.02)

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            osb_prepare(0, np.random.default_rng(0))


class TestDecoyInsertion:
    def test_sequence_sizes(self):
        _, pairs = osb_prepare(1, np.random.default_rng(1))
        decoys = make_decoy_pairs(1, start_index=2)
        seq = osb_insert_decoys(pairs, 0, decoys, Arm.A, np.random.default_rng(2))
        assert len(seq.slots) == 4  # 2 message + 2 decoy qubits
        assert len(seq.decoy_blocks) == 1

    def test_decoys_are_all_psi_plus(self):
        decoys = make_decoy_pairs(5, start_index=0)
        assert all(d.bell is BellState.PSI_PLUS for d in decoys)
        assert all(d.role == "decoy" for d in decoys)

    def test_message_order_is_preserved(self):
        _, pairs = osb_prepare(4, np.random.default_rng(3))
        decoys = make_decoy_pairs(4, start_index=8)
        seq = osb_insert_decoys(pairs, 0, decoys, Arm.A, np.random.default_rng(4))
        message_indices = [seq.slots[s][0].index for s in seq.message_slots]
        assert message_indices == sorted(message_indices)

    def test_transmission_moves_holders(self):
        from qpcsim.osb import transmit_sequence
        rng = np.random.default_rng(70)
        _, pairs = osb_prepare(2, rng)
        decoys = make_decoy_pairs(2, start_index=4)
        seq = osb_insert_decoys(pairs, 0, decoys, Arm.A, rng)
        transmit_sequence(seq, None, None, rng, "alice")
        for pair, pos in seq.slots:
            assert pair.holder[pos] == "alice"
        for pair in pairs:  # partner wing has not traveled
            assert pair.holder[1] == "tp"

    def test_insertion_slots_are_uniform(self):
        """Each of the 3N item slots hosts a decoy with frequency N/(3N)."""
        n = 2
        total_items = 2 * n + n
        counts = np.zeros(total_items)
        runs = 10_000
        rng = np.random.default_rng(6)
        for _ in range(runs):
            _, pairs = osb_prepare(n, rng)
            decoys = make_decoy_pairs(n, start_index=2 * n)
            seq = osb_insert_decoys(pairs, 0, decoys, Arm.A, rng)
            item = 0
            slot = 0
            while slot < len(seq.slots):
                if any(b[0] == slot for b in seq.decoy_blocks):
                    counts[item] += 1
                    slot += 2
                else:
                    slot += 1
                item += 1
        expected = n / total_items
        for c in counts:
            assert c / runs == pytest.approx(expected, abs=0.05 * expected + 0.02)


class TestGvCheck:
    def _sequence(self, n, seed):
        _, pairs = osb_prepare(n, np.random.default_rng(seed))
        decoys = make_decoy_pairs(n, start_index=2 * n)
        return osb_insert_decoys(pairs, 0, decoys, Arm.A,
                                 np.random.default_rng(seed + 1)), decoys

    def test_noiseless_run_passes_with_zero_rate(self):
        seq, _ = self._sequence(6, 10)
        result = osb_gv_check(seq, seq.decoy_blocks, 0.0, np.random.default_rng(2))
        assert result.passed and result.error_rate == 0.0

    def test_intercept_resend_detected_at_half_rate_per_decoy(self):
        """Measuring both decoy qubits leaves psi+ with probability 1/2."""
        rng = np.random.default_rng(20)
        hits = 0
        total = 0
        for trial in range(300):
            seq, decoys = self._sequence(4, 100 + trial)
            for pair in decoys:
                _, pair.rho = measure_single_qubit(pair.rho, 0, rng)
                _, pair.rho = measure_single_qubit(pair.rho, 1, rng)
            result = osb_gv_check(seq, seq.decoy_blocks, 1.0, rng)
            hits += round(result.error_rate * 4)
            total += 4
        assert hits / total == pytest.approx(0.5, abs=0.03)

    def test_iy_on_every_qubit_is_invisible(self):
        seq, decoys = self._sequence(8, 30)
        for pair, pos in seq.slots:
            pair.rho = single_qubit_apply(pair.rho, IY, pos)
        result = osb_gv_check(seq, seq.decoy_blocks, 0.0, np.random.default_rng(3))
        assert result.passed and result.error_rate == 0.0

    def test_malformed_position_map_fails_with_reason(self):
        seq, _ = self._sequence(2, 40)
        bad = [(0, 99)]
        result = osb_gv_check(seq, bad, 1.0, np.random.default_rng(0))
        assert not result.passed
        assert result.reason == "malformed-position-map"

    def test_map_pointing_at_message_qubits_rejected(self):
        seq, _ = self._sequence(2, 41)
        msg_slot = seq.message_slots[0]
        result = osb_gv_check(seq, [(msg_slot, msg_slot + 1)], 1.0,
                              np.random.default_rng(0))
        assert not result.passed and result.reason == "malformed-position-map"


class TestCorrelation:
    def test_noiseless_keys_satisfy_parity_relation(self):
        rng = np.random.default_rng(50)
        choices, pairs = osb_prepare(8, rng)
        result = osb_measure_and_correlate(pairs, choices, 8,
                                           np.random.default_rng(1),
                                           np.random.default_rng(2))
        assert result.passed
        assert len(result.retained_positions) == 8
        for j, i in enumerate(result.retained_positions):
            assert result.k_a.bit(j) ^ result.k_b.bit(j) == choices[i].parity

    def test_iy_attack_on_one_arm_detected_always(self):
        rng = np.random.default_rng(60)
        choices, pairs = osb_prepare(4, rng)
        for pair in pairs:
            pair.rho = single_qubit_apply(pair.rho, IY, 0)
        result = osb_measure_and_correlate(pairs, choices, 4,
                                           np.random.default_rng(3),
                                           np.random.default_rng(4))
        assert not result.passed
        assert set(result.violations) == set(result.checked_positions)

    def test_full_bit_flip_on_one_arm_detected(self):
        from qpcsim.quantum import PAULI_X
        rng = np.random.default_rng(61)
        choices, pairs = osb_prepare(4, rng)
        for pair in pairs:
            pair.rho = single_qubit_apply(pair.rho, PAULI_X, 0)
        result = osb_measure_and_correlate(pairs, choices, 4,
                                           np.random.default_rng(5),
                                           np.random.default_rng(6))
        assert not result.passed

    def test_zero_fraction_skips_the_check(self):
        rng = np.random.default_rng(62)
        choices, pairs = osb_prepare(3, rng)
        result = osb_measure_and_correlate(pairs, choices, 3,
                                           np.random.default_rng(7),
                                           np.random.default_rng(8),
                                           check_fraction=0.0)
        assert result.passed
        assert result.checked_positions == ()
        assert result.retained_positions == (0, 1, 2)

    def test_overdrawn_fraction_rejected(self):
        rng = np.random.default_rng(63)
        choices, pairs = osb_prepare(2, rng)
        with pytest.raises(ProtocolError):
            osb_measure_and_correlate(pairs, choices, 2,
                                      np.random.default_rng(9),
                                      np.random.default_rng(10),
                                      check_fraction=0.9)


class TestIdealKey:
    def test_reproducible_under_seed(self):
        assert ideal_key(8, np.random.default_rng(4)) == ideal_key(8, np.random.default_rng(4))

    def test_different_seeds_differ(self):
        draws = {ideal_key(32, np.random.default_rng(s)).value for s in range(10)}
        assert len(draws) == 10

    def test_never_appears_in_transcript(self):
        """No announced value equals the shared key."""
        config = OsbConfig(n=16, seed=123)
        result = run_osb(bs("1010101010101010"), bs("1010101010101010"), config)
        tokens = set()
        for event in result.transcript.events:
            for fragment in event.payload.split():
                tokens.add(fragment.split("=", 1)[-1])
        assert result.k_ab.to01() not in tokens
        assert result.k_ab.to_hex() not in tokens


class TestCompare:
    def test_equal_messages_give_equal_verdict(self):
        k_a, k_b = bs("0110"), bs("1100")
        parities = k_a ^ k_b
        k_ab = bs("1001")
        out = osb_compare(bs("1011"), bs("1011"), k_a, k_b, k_ab, parities)
        assert out.outcome.verdict is Verdict.EQUAL

    def test_single_difference_is_located(self):
        """R = M_A xor M_B once the keys cancel against the parities."""
        k_a, k_b = bs("1010"), bs("0110")
        parities = k_a ^ k_b
        out = osb_compare(bs("0001"), bs("0011"), k_a, k_b, bs("0101"), parities)
        assert out.outcome.verdict is Verdict.UNEQUAL
        assert out.outcome.unequal_positions == (2,)

    def test_single_bit_case(self):
        out = osb_compare(bs("0"), bs("1"), bs("0"), bs("0"), bs("1"), bs("0"))
        assert out.outcome.unequal_positions == (0,)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ProtocolError):
            osb_compare(bs("01"), bs("0"), bs("0"), bs("0"), bs("0"), bs("0"))

    def test_r_is_independent_of_shared_key(self):
        """The shared key cancels in R: any reassignment leaves R alone."""
        m_a, m_b = bs("0110"), bs("1110")
        k_a, k_b, parities = bs("1010"), bs("0110"), bs("1100")
        rs = {osb_compare(m_a, m_b, k_a, k_b, BitString(v, 4), parities).r.value
              for v in range(16)}
        assert len(rs) == 1


class TestFullRun:
    def test_honest_noiseless_equal(self):
        m = bs("10110100")
        result = run_osb(m, m, OsbConfig(n=8, seed=7))
        assert result.outcome.verdict is Verdict.EQUAL
        assert result.gv_error_rates == {"a": 0.0, "b": 0.0}

    def test_honest_noiseless_unequal_positions(self):
        m_a, m_b = bs("10110100"), bs("10010110")
        result = run_osb(m_a, m_b, OsbConfig(n=8, seed=8))
        diff = tuple(i for i in range(8) if m_a.bit(i) != m_b.bit(i))
        assert result.outcome.verdict is Verdict.UNEQUAL
        assert result.outcome.unequal_positions == diff

    def test_full_bit_flip_noise_on_one_arm_aborts(self):
        result = run_osb(bs("1010"), bs("1010"),
                         OsbConfig(n=4, seed=3, noise_a=(NoiseKind.BF, 1.0)))
        assert result.outcome.verdict is Verdict.ABORTED
        assert result.outcome.abort_stage == "correlation-check"

    def test_counters_match_protocol_phase_ledger(self):
        from qpcsim.efficiency import osb_protocol_decoding_bits, osb_protocol_qubits
        result = run_osb(bs("110101"), bs("110101"), OsbConfig(n=6, seed=4))
        assert result.counters.qubits_prepared == osb_protocol_qubits(6)
        assert result.counters.decoding_bits == osb_protocol_decoding_bits(6)

    def test_transcripts_are_seed_deterministic(self):
        m = bs("0110")
        t1 = run_osb(m, m, OsbConfig(n=4, seed=11)).transcript.serialize()
        t2 = run_osb(m, m, OsbConfig(n=4, seed=11)).transcript.serialize()
        assert t1 == t2

    def test_gv_false_positive_rate_is_zero(self):
        m = bs("01")
        for seed in range(30):
            result = run_osb(m, m, OsbConfig(n=2, seed=seed))
            assert not result.aborted

    def test_secret_length_must_match_n(self):
        with pytest.raises(ProtocolError):
            run_osb(bs("01"), bs("01"), OsbConfig(n=3, seed=0))


class TestSoundness:
    def test_sampled_larger_n(self):
        """Random message pairs at n=16 through one honest run's keys."""
        n = 16
        result = run_osb(BitString.zeros(n), BitString.zeros(n),
                         OsbConfig(n=n, seed=300))
        assert not result.aborted
        rng = np.random.default_rng(301)
        for _ in range(1000):
            m_a = BitString.random(n, rng)
            m_b = BitString.random(n, rng)
            out = osb_compare(m_a, m_b, result.k_a, result.k_b,
                              result.k_ab, result.c_tp)
            expected = tuple(i for i in range(n) if m_a.bit(i) != m_b.bit(i))
            if expected:
                assert out.outcome.unequal_positions == expected
            else:
                assert out.outcome.verdict is Verdict.EQUAL

    def test_exhaustive_small_n(self):
        """One honest quantum run per n; all message pairs swept through
        the comparison layer that run produced."""
        for n in range(1, 5):
            result = run_osb(BitString.zeros(n), BitString.zeros(n),
                             OsbConfig(n=n, seed=100 + n))
            assert not result.aborted
            for va in range(1 << n):
                for vb in range(1 << n):
                    m_a, m_b = BitString(va, n), BitString(vb, n)
                    out = osb_compare(m_a, m_b, result.k_a, result.k_b,
                                      result.k_ab, result.c_tp)
                    if va == vb:
                        assert out.outcome.verdict is Verdict.EQUAL
                    else:
                        expected = tuple(i for i in range(n)
                                         if m_a.bit(i) != m_b.bit(i))
                        assert out.outcome.unequal_positions == expected


class TestPrivacy:
    def test_preparer_cannot_pin_down_either_secret(self):
        """Every candidate M_A is witnessed by some (K_AB, K_A) pair
        consistent with the preparer's view (exhaustive at n=4)."""
        n = 4
        result = run_osb(bs("0110"), bs("1110"), OsbConfig(n=n, seed=21))
        candidates = set()
        for k_ab in range(1 << n):
            for k_a in range(1 << n):
                # preparer knows the parities, so K_B is pinned by K_A
                k_b = BitString(k_a, n) ^ result.c_tp
                m_a = result.c_a ^ BitString(k_a, n) ^ BitString(k_ab, n)
                m_b = result.c_b ^ k_b ^ BitString(k_ab, n)
                # consistency: this assignment reproduces the public R
                r = result.c_a ^ result.c_b ^ result.c_tp
                assert r == m_a ^ m_b
                candidates.add(m_a.value)
        assert len(candidates) == 1 << n
