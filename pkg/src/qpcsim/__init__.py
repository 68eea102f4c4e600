"""Exact simulator and verification harness for two quantum private
comparison protocols, their eavesdropping checks and adversaries, and a
noise-analysis engine with closed-form fidelity surfaces."""

from .bits import BitString
from .quantum import (
    BellState,
    apply_two_qubit_channel,
    bell_density,
    bell_vector,
    fidelity,
    measure_bell,
    measure_computational,
    measure_single_qubit,
    single_qubit_apply,
)
from .noise import (
    KrausSet,
    NoiseKind,
    NoiseScenario,
    Trips,
    closed_form_fidelity,
    closed_form_oneway,
    closed_form_roundtrip,
    kraus_set,
    oracle_fidelity,
    verify_all_formulas,
)
from .transcript import ComparisonOutcome, ProtocolError, Transcript, Verdict
from .osb import (
    OsbConfig,
    OsbRunResult,
    ideal_key,
    osb_compare,
    osb_gv_check,
    osb_insert_decoys,
    osb_measure_and_correlate,
    osb_prepare,
    run_osb,
)
from .sqpc import (
    ClassicalAction,
    SqpcConfig,
    SqpcRunResult,
    classical_party_phase,
    run_sqpc,
    sqpc_compare,
    sqpc_parity_audit,
    sqpc_prepare,
    sqpc_sift,
    tp_bell_phase,
)
from .attacks import (
    AttackKind,
    AttackReport,
    AttackStrategy,
    eve_information_bound,
    iy_attack_consequence,
    run_with_attack,
)
from .efficiency import (
    ResourceLedger,
    efficiency_osb,
    efficiency_sqpc,
    osb_ledger,
    sqpc_ledger,
)

__all__ = [name for name in dir() if not name.startswith("_")]
