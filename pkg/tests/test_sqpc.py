"""Semi-quantum protocol: party phases, case algebra, audits, soundness."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qpcsim.bits import BitString
from qpcsim.osb import osb_prepare
from qpcsim.quantum import BellState
from qpcsim.sqpc import (
    ClassicalAction,
    SqpcConfig,
    classical_party_phase,
    run_sqpc,
    sqpc_compare,
    sqpc_parity_audit,
    sqpc_prepare,
    sqpc_sift,
    tp_bell_phase,
    YieldShortfall,
)
from qpcsim.transcript import ProtocolError, Verdict

M, R = ClassicalAction.MEASURE, ClassicalAction.REFLECT


def bs(text: str) -> BitString:
    return BitString.from_bits(int(c) for c in text)


class TestPrepare:
    def test_eight_pairs_per_unit(self):
        choices, pairs = sqpc_prepare(1, np.random.default_rng(0))
        assert len(pairs) == 8 and len(choices) == 8

    def test_kind_frequencies_at_scale(self):
        choices, _ = sqpc_prepare(1250, np.random.default_rng(1))
        for kind in BellState:
            assert choices.count(kind) / 10_000 == pytest.approx(0.25, abs=0.02)

    def test_seed_reproducible(self):
        a, _ = sqpc_prepare(4, np.random.default_rng(9))
        b, _ = sqpc_prepare(4, np.random.default_rng(9))
        assert a == b


class TestPartyPhase:
    def test_exactly_half_measured(self):
        for seed in range(10):
            _, pairs = sqpc_prepare(2, np.random.default_rng(seed))
            actions, recorded = classical_party_phase(pairs, 0,
                                                      np.random.default_rng(seed))
            assert actions.count(M) == 8
            assert len(recorded) == 8

    def test_reflected_pairs_are_untouched(self):
        _, pairs = sqpc_prepare(1, np.random.default_rng(3))
        before = [p.rho.copy() for p in pairs]
        actions, _ = classical_party_phase(pairs, 0, np.random.default_rng(4))
        for pair, rho, action in zip(pairs, before, actions):
            if action is R:
                assert_allclose(pair.rho, rho, atol=1e-15)

    def test_measured_wing_is_a_projector(self):
        _, pairs = sqpc_prepare(1, np.random.default_rng(5))
        actions, recorded = classical_party_phase(pairs, 0, np.random.default_rng(6))
        for i, (pair, action) in enumerate(zip(pairs, actions)):
            if action is M:
                # the party's wing must be diagonal and pinned to the bit
                reduced = np.trace(pair.rho.reshape(2, 2, 2, 2), axis1=1, axis2=3)
                assert reduced[recorded[i], recorded[i]] == pytest.approx(1.0, abs=1e-12)


class TestBellPhase:
    def test_reflected_pairs_always_announce_zero(self):
        choices, pairs = sqpc_prepare(4, np.random.default_rng(7))
        announcements = tp_bell_phase(pairs, choices, np.random.default_rng(8))
        assert announcements == [0] * 32

    def test_both_measured_pairs_announce_uniformly(self):
        """Collapse to |ab> overlaps the prepared state with prob 1/2."""
        rng = np.random.default_rng(10)
        ones = 0
        total = 4000
        choices, pairs = osb_prepare(total // 2, rng)  # total pairs
        for pair in pairs:
            from qpcsim.quantum import measure_single_qubit
            _, pair.rho = measure_single_qubit(pair.rho, 0, rng)
            _, pair.rho = measure_single_qubit(pair.rho, 1, rng)
        announcements = tp_bell_phase(pairs, choices, rng)
        assert sum(announcements) / total == pytest.approx(0.5, abs=0.02)


class TestSift:
    def test_case_partition(self):
        actions_a = [R, M, R, M]
        actions_b = [R, R, M, M]
        sift = sqpc_sift(actions_a, actions_b, [0, 0, 0, 1], tolerance=0.0)
        assert sift.case1_positions == (0,)
        assert sift.case4_positions == (3,)
        assert sift.passed

    def test_case1_mismatch_trips_audit(self):
        sift = sqpc_sift([R, R], [R, R], [1, 0], tolerance=0.0)
        assert not sift.passed
        assert sift.case1_mismatch_rate == pytest.approx(0.5)

    def test_discarded_cases_never_reach_keys(self):
        sift = sqpc_sift([M, R], [R, M], [1, 1], tolerance=0.0)
        assert sift.case1_positions == () and sift.case4_positions == ()
        assert sift.passed  # vacuous: no reflected pairs to audit

    def test_misaligned_inputs_rejected(self):
        with pytest.raises(ProtocolError):
            sqpc_sift([R], [R, R], [0, 0], tolerance=0.0)

    def test_case_frequencies_quarter_each(self):
        rng = np.random.default_rng(11)
        n = 1250  # 10000 pairs
        _, pairs = sqpc_prepare(n, rng)
        actions_a, _ = classical_party_phase(pairs, 0, np.random.default_rng(12))
        actions_b, _ = classical_party_phase(pairs, 1, np.random.default_rng(13))
        announcements = [0] * (8 * n)
        sift = sqpc_sift(actions_a, actions_b, announcements, 1.0)
        case2 = sum(1 for a, b in zip(actions_a, actions_b)
                    if a is M and b is R)
        case3 = sum(1 for a, b in zip(actions_a, actions_b)
                    if a is R and b is M)
        for count in (len(sift.case1_positions), case2, case3,
                      len(sift.case4_positions)):
            assert count / (8 * n) == pytest.approx(0.25, abs=0.02)


class TestParityAudit:
    def _honest_inputs(self, n, seed):
        rng = np.random.default_rng(seed)
        choices, pairs = sqpc_prepare(n, rng)
        from qpcsim.quantum import measure_single_qubit
        bits_a, bits_b = {}, {}
        for i, pair in enumerate(pairs):
            bits_a[i], pair.rho = measure_single_qubit(pair.rho, 0, rng)
            bits_b[i], pair.rho = measure_single_qubit(pair.rho, 1, rng)
        case4 = tuple(range(len(pairs)))
        return bits_a, bits_b, case4, choices

    def test_honest_audit_passes_and_keys_correlate(self):
        bits_a, bits_b, case4, choices = self._honest_inputs(2, 20)
        audit = sqpc_parity_audit(bits_a, bits_b, case4, choices, 2,
                                  np.random.default_rng(21))
        assert audit.passed
        assert len(audit.retained_positions) == 2
        for i in audit.retained_positions:
            assert bits_a[i] ^ bits_b[i] == choices[i].parity

    def test_product_state_preparer_with_matching_parity_claims_passes(self):
        """A dishonest preparer sending |00> but claiming a parity-0 state
        is invisible to this audit (0 xor 0 = 0); a documented limitation."""
        bits_a = {i: 0 for i in range(8)}
        bits_b = {i: 0 for i in range(8)}
        choices = [BellState.PSI_PLUS] * 8
        audit = sqpc_parity_audit(bits_a, bits_b, tuple(range(8)), choices, 4,
                                  np.random.default_rng(22))
        assert audit.passed

    def test_product_state_preparer_with_wrong_parity_claims_fails(self):
        """|01> preparation against parity-0 claims violates every check."""
        bits_a = {i: 0 for i in range(8)}
        bits_b = {i: 1 for i in range(8)}
        choices = [BellState.PSI_PLUS] * 8
        audit = sqpc_parity_audit(bits_a, bits_b, tuple(range(8)), choices, 4,
                                  np.random.default_rng(23))
        assert not audit.passed
        assert set(audit.violations) == set(audit.audited_positions)

    def test_shortfall_raises(self):
        bits = {i: 0 for i in range(3)}
        with pytest.raises(YieldShortfall):
            sqpc_parity_audit(bits, bits, (0, 1, 2), [BellState.PSI_PLUS] * 3,
                              2, np.random.default_rng(0))


class TestCompare:
    def test_all_layers_cancel(self):
        m = bs("1100")
        k_a, k_b = bs("0101"), bs("1001")
        parities = k_a ^ k_b
        out = sqpc_compare(m, m, k_a, k_b, bs("1111"), bs("0011"), bs("0110"),
                           parities)
        assert out.outcome.verdict is Verdict.EQUAL

    def test_single_difference(self):
        k_a, k_b = bs("0000"), bs("0000")
        out = sqpc_compare(bs("0100"), bs("0000"), k_a, k_b, bs("1010"),
                           bs("0110"), bs("1110"), bs("0000"))
        assert out.outcome.unequal_positions == (1,)

    def test_r_invariant_under_shared_key_reassignment(self):
        m_a, m_b = bs("0110"), bs("0111")
        k_a, k_b = bs("1010"), bs("0110")
        parities = k_a ^ k_b
        rs = {sqpc_compare(m_a, m_b, k_a, k_b, BitString(v, 4),
                           bs("0011"), bs("0101"), parities).r.value
              for v in range(16)}
        assert rs == {(m_a ^ m_b).value}

    def test_r_invariant_under_joint_preparer_key_flips(self):
        """Flipping K_AT identically on both sides of the algebra cancels."""
        m_a, m_b = bs("0110"), bs("0111")
        k_a, k_b = bs("1010"), bs("0110")
        parities = k_a ^ k_b
        rs = {sqpc_compare(m_a, m_b, k_a, k_b, bs("0001"),
                           BitString(v, 4), bs("0101"), parities).r.value
              for v in range(16)}
        assert rs == {(m_a ^ m_b).value}

    def test_length_mismatch_rejected(self):
        with pytest.raises(ProtocolError):
            sqpc_compare(bs("01"), bs("01"), bs("01"), bs("01"), bs("01"),
                         bs("01"), bs("0"), bs("01"))


class TestFullRun:
    def test_honest_equal(self):
        m = bs("10110100")
        result = run_sqpc(m, m, SqpcConfig(n=8, seed=31))
        assert result.outcome.verdict is Verdict.EQUAL
        assert result.case1_mismatch_rate == 0.0

    def test_honest_unequal_positions(self):
        m_a, m_b = bs("10110100"), bs("00110101")
        result = run_sqpc(m_a, m_b, SqpcConfig(n=8, seed=32))
        diff = tuple(i for i in range(8) if m_a.bit(i) != m_b.bit(i))
        assert result.outcome.unequal_positions == diff

    def test_announcements_committed_before_disclosure(self):
        result = run_sqpc(bs("01"), bs("01"), SqpcConfig(n=2, seed=33))
        kinds = [e.kind for e in result.transcript.events]
        assert kinds.index("announce-match-bits") < kinds.index(
            "disclose-measured-coordinates")

    def test_counters_match_protocol_phase_ledger(self):
        from qpcsim.efficiency import (
            sqpc_protocol_decoding_bits,
            sqpc_protocol_qubits,
        )
        result = run_sqpc(bs("0110"), bs("0110"), SqpcConfig(n=4, seed=34))
        assert result.counters.qubits_prepared == sqpc_protocol_qubits(4)
        assert result.counters.decoding_bits == sqpc_protocol_decoding_bits(4)

    def test_restart_on_shortfall_is_logged_and_recovers(self):
        """Small n makes shortfalls common; every run must still finish."""
        attempts = []
        for seed in range(40):
            result = run_sqpc(bs("1"), bs("1"), SqpcConfig(n=1, seed=seed))
            assert result.outcome.verdict is Verdict.EQUAL
            attempts.append(result.attempts)
        assert max(attempts) > 1  # at least one seed actually restarted
        restarted = next(r for r in (run_sqpc(bs("1"), bs("1"),
                                              SqpcConfig(n=1, seed=s))
                                     for s in range(40)) if r.attempts > 1)
        assert any(e.kind == "restart" for e in restarted.transcript.events)

    def test_case1_statistics_honest(self):
        """Reflected pairs never mismatch without noise or an adversary."""
        result = run_sqpc(bs("10101010"), bs("10101010"),
                          SqpcConfig(n=8, seed=35))
        assert result.case1_mismatches == 0
        case4_announcements = [result.announcements[i]
                               for i in result.case4_positions]
        assert 0 < sum(case4_announcements) < len(case4_announcements)

    def test_keys_never_in_transcript(self):
        """No announced value is a private key (substrings of longer
        announcements do not count as disclosure)."""
        result = run_sqpc(bs("10110100"), bs("10110100"),
                          SqpcConfig(n=8, seed=36))
        tokens = set()
        for event in result.transcript.events:
            for fragment in event.payload.split():
                tokens.add(fragment.split("=", 1)[-1])
        for key in (result.k_ab, result.k_at, result.k_bt):
            assert key.to01() not in tokens
            assert key.to_hex() not in tokens

    def test_transcript_deterministic(self):
        m = bs("0110")
        t1 = run_sqpc(m, m, SqpcConfig(n=4, seed=37)).transcript.serialize()
        t2 = run_sqpc(m, m, SqpcConfig(n=4, seed=37)).transcript.serialize()
        assert t1 == t2


class TestSoundness:
    def test_exhaustive_small_n(self):
        for n in range(1, 5):
            result = run_sqpc(BitString.zeros(n), BitString.zeros(n),
                              SqpcConfig(n=n, seed=200 + n))
            assert not result.aborted
            for va in range(1 << n):
                for vb in range(1 << n):
                    m_a, m_b = BitString(va, n), BitString(vb, n)
                    out = sqpc_compare(m_a, m_b, result.k_a, result.k_b,
                                       result.k_ab, result.k_at, result.k_bt,
                                       result.c_tp)
                    if va == vb:
                        assert out.outcome.verdict is Verdict.EQUAL
                    else:
                        expected = tuple(i for i in range(n)
                                         if m_a.bit(i) != m_b.bit(i))
                        assert out.outcome.unequal_positions == expected
