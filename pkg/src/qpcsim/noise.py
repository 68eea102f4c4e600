"""Noise channels and their closed-form Bell-state fidelities.

Four single-qubit channels are supported, each parameterized by an
error probability p in [0, 1]:

    AD  amplitude damping   {[[1,0],[0,sqrt(1-p)]], [[0,sqrt(p)],[0,0]]}
    BF  bit flip            {sqrt(1-p) I, sqrt(p) X}
    PF  phase flip          {sqrt(1-p) I, sqrt(p) Z}
    DC  depolarizing        {sqrt(1-p) I, sqrt(p/3) X, sqrt(p/3) Y, sqrt(p/3) Z}

For a Bell pair whose qubits travel through two independent channels
(once for a one-way transmission, twice each for a round trip), the
fidelity against the initially prepared state has a closed form in
(p1, p2) for every channel pairing. The closed forms below are exact
for the Kraus sets above; `oracle_fidelity` recomputes the same number
by direct operator-sum evolution and `verify_all_formulas` sweeps the
two routes against each other over a probability grid.

Only the AD-AD pairing depends on which Bell state was prepared, and
then only through its parity; every other pairing is parity-free.
Pairings not listed in the dispatch table are obtained by exchanging
(kind, p) between the qubits, and a double phase flip has the same
fidelity as a double bit flip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .quantum import (
    BELL_ORDER,
    I2,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    BellState,
    apply_kraus_stack,
    bell_density,
    bell_vector,
    check_kraus_completeness,
    two_qubit_kraus_stack,
)

FORMULA_TOL = 1e-10


class NoiseKind(Enum):
    AD = "ad"
    BF = "bf"
    PF = "pf"
    DC = "dc"

    @property
    def token(self) -> str:
        return self.value

    @classmethod
    def from_token(cls, token: str) -> "NoiseKind":
        try:
            return cls(token.lower())
        except ValueError:
            raise ValueError(f"unknown noise kind {token!r}; expected one of "
                             f"{[k.value for k in cls]}") from None


class Trips(Enum):
    ONE_WAY = "oneway"
    ROUND_TRIP = "roundtrip"

    @property
    def token(self) -> str:
        return self.value


@dataclass(frozen=True)
class KrausSet:
    """Operator-sum elements of one channel at one error probability."""

    kind: NoiseKind
    p: float
    operators: tuple[np.ndarray, ...]


def kraus_set(kind: NoiseKind, p: float) -> KrausSet:
    """Build the Kraus operators for ``kind`` at error probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"error probability must be in [0, 1], got {p}")
    if kind is NoiseKind.AD:
        ops = (
            np.array([[1, 0], [0, math.sqrt(1 - p)]], dtype=np.complex128),
            np.array([[0, math.sqrt(p)], [0, 0]], dtype=np.complex128),
        )
    elif kind is NoiseKind.BF:
        ops = (math.sqrt(1 - p) * I2, math.sqrt(p) * PAULI_X)
    elif kind is NoiseKind.PF:
        ops = (math.sqrt(1 - p) * I2, math.sqrt(p) * PAULI_Z)
    elif kind is NoiseKind.DC:
        ops = (
            math.sqrt(1 - p) * I2,
            math.sqrt(p / 3) * PAULI_X,
            math.sqrt(p / 3) * PAULI_Y,
            math.sqrt(p / 3) * PAULI_Z,
        )
    else:  # pragma: no cover
        raise ValueError(kind)
    check_kraus_completeness(ops)
    return KrausSet(kind, p, ops)


@dataclass(frozen=True)
class NoiseScenario:
    """Two independent channels on one Bell pair, one-way or round-trip."""

    first: tuple[NoiseKind, float]
    second: tuple[NoiseKind, float]
    initial: BellState
    trips: Trips = Trips.ONE_WAY

    def __post_init__(self) -> None:
        for _, p in (self.first, self.second):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"error probability must be in [0, 1], got {p}")


# ---------------------------------------------------------------------------
# closed forms
#
# Shorthands: s(x) = sqrt(x); lam(p) = 1 - 4p/3 is the Pauli-transfer
# eigenvalue of DC; u(p) = (1-2p)^2 is the squared eigenvalue of a
# twice-applied BF/PF.
# ---------------------------------------------------------------------------

def _lam(p: float) -> float:
    return 1.0 - 4.0 * p / 3.0


def _u(p: float) -> float:
    return (1.0 - 2.0 * p) ** 2


def _ow_ad_ad_psi(p1: float, p2: float) -> float:
    return 0.25 * (2 + 2 * math.sqrt((1 - p1) * (1 - p2)) - (p2 + p1) + 2 * p1 * p2)


def _ow_ad_ad_phi(p1: float, p2: float) -> float:
    return 0.25 * (math.sqrt(1 - p1) + math.sqrt(1 - p2)) ** 2


def _ow_ad_bf(p1: float, p2: float) -> float:
    return 0.25 * (-2 * (1 + math.sqrt(1 - p1)) * (-1 + p2) + p1 * (-1 + 2 * p2))


def _ow_ad_pf(p1: float, p2: float) -> float:
    return 0.25 * (2 + 2 * math.sqrt(1 - p1) - p1 - 4 * math.sqrt(1 - p1) * p2)


def _ow_ad_dc(p1: float, p2: float) -> float:
    return 0.25 * (1 + _lam(p2) * (1 - p1 + 2 * math.sqrt(1 - p1)))


def _ow_bf_bf(p1: float, p2: float) -> float:
    return 1 - p2 + p1 * (-1 + 2 * p2)


def _ow_bf_pf(p1: float, p2: float) -> float:
    return (1 - p1) * (1 - p2)


def _ow_bf_dc(p1: float, p2: float) -> float:
    return 0.25 * (1 + _lam(p2) * (3 - 4 * p1))


def _ow_pf_dc(p1: float, p2: float) -> float:
    return 0.25 * (1 + _lam(p2) * (3 - 4 * p1))


def _ow_dc_dc(p1: float, p2: float) -> float:
    return 0.25 * (1 + 3 * _lam(p1) * _lam(p2))


def _rt_ad_ad_psi(p1: float, p2: float) -> float:
    return 0.25 * ((-2 + p2) ** 2
                   - 2 * p1 * (-2 + p2) * (-1 + 2 * p2)
                   + p1 ** 2 * (1 + 2 * (-2 + p2) * p2))


def _rt_ad_ad_phi(p1: float, p2: float) -> float:
    return 0.25 * (-2 + p1 + p2) ** 2


def _rt_ad_bf(p1: float, p2: float) -> float:
    return 0.25 * (-2 + p1) * (-2 + p1 * (1 - 2 * p2) ** 2 - 4 * (-1 + p2) * p2)


def _rt_ad_pf(p1: float, p2: float) -> float:
    return 0.25 * ((-2 + p1) ** 2 + 8 * (-1 + p1) * p2 - 8 * (-1 + p1) * p2 ** 2)


def _rt_ad_dc(p1: float, p2: float) -> float:
    return 0.25 * (1 + _lam(p2) ** 2 * (1 - p1) * (3 - p1))


def _rt_bf_bf(p1: float, p2: float) -> float:
    return (1 - 2 * p1 * (1 - 2 * p2) ** 2 + 2 * p1 ** 2 * (1 - 2 * p2) ** 2
            + 2 * (-1 + p2) * p2)


def _rt_bf_pf(p1: float, p2: float) -> float:
    return (1 - 2 * p1 + 2 * p1 ** 2) * (1 - 2 * p2 + 2 * p2 ** 2)


def _rt_bf_dc(p1: float, p2: float) -> float:
    return 0.25 * (1 + _lam(p2) ** 2 * (1 + 2 * _u(p1)))


def _rt_pf_dc(p1: float, p2: float) -> float:
    return 0.25 * (1 + _lam(p2) ** 2 * (1 + 2 * _u(p1)))


def _rt_dc_dc(p1: float, p2: float) -> float:
    return 0.25 * (1 + 3 * _lam(p1) ** 2 * _lam(p2) ** 2)


@dataclass(frozen=True)
class FormulaEntry:
    """One dispatch-table row: family id plus evaluator(s)."""

    family: str
    func: Callable[[float, float], float] | None = None
    # parity split (AD-AD only): separate evaluators per Bell parity
    func_parity0: Callable[[float, float], float] | None = None
    func_parity1: Callable[[float, float], float] | None = None

    def evaluate(self, p1: float, p2: float, parity: int) -> float:
        if self.func is not None:
            return self.func(p1, p2)
        return (self.func_parity0 if parity == 0 else self.func_parity1)(p1, p2)

    @property
    def parity_dependent(self) -> bool:
        return self.func is None


_AD, _BF, _PF, _DC = NoiseKind.AD, NoiseKind.BF, NoiseKind.PF, NoiseKind.DC

# Base table: one entry per printed family. Kind-pairs missing here are
# resolved by swapping the two channels (exchanging p1 and p2), and
# PF-PF reuses the BF-BF expression.
_ONE_WAY_TABLE: dict[tuple[NoiseKind, NoiseKind], FormulaEntry] = {
    (_AD, _AD): FormulaEntry("ad-ad", func_parity0=_ow_ad_ad_psi,
                             func_parity1=_ow_ad_ad_phi),
    (_AD, _BF): FormulaEntry("ad-bf", _ow_ad_bf),
    (_AD, _PF): FormulaEntry("ad-pf", _ow_ad_pf),
    (_AD, _DC): FormulaEntry("ad-dc", _ow_ad_dc),
    (_BF, _BF): FormulaEntry("bf-bf", _ow_bf_bf),
    (_BF, _PF): FormulaEntry("bf-pf", _ow_bf_pf),
    (_BF, _DC): FormulaEntry("bf-dc", _ow_bf_dc),
    (_PF, _PF): FormulaEntry("bf-bf", _ow_bf_bf),
    (_PF, _DC): FormulaEntry("pf-dc", _ow_pf_dc),
    (_DC, _DC): FormulaEntry("dc-dc", _ow_dc_dc),
}

_ROUND_TRIP_TABLE: dict[tuple[NoiseKind, NoiseKind], FormulaEntry] = {
    (_AD, _AD): FormulaEntry("ad-ad", func_parity0=_rt_ad_ad_psi,
                             func_parity1=_rt_ad_ad_phi),
    (_AD, _BF): FormulaEntry("ad-bf", _rt_ad_bf),
    (_AD, _PF): FormulaEntry("ad-pf", _rt_ad_pf),
    (_AD, _DC): FormulaEntry("ad-dc", _rt_ad_dc),
    (_BF, _BF): FormulaEntry("bf-bf", _rt_bf_bf),
    (_BF, _PF): FormulaEntry("bf-pf", _rt_bf_pf),
    (_BF, _DC): FormulaEntry("bf-dc", _rt_bf_dc),
    (_PF, _PF): FormulaEntry("bf-bf", _rt_bf_bf),
    (_PF, _DC): FormulaEntry("pf-dc", _rt_pf_dc),
    (_DC, _DC): FormulaEntry("dc-dc", _rt_dc_dc),
}


def _resolve(table, kind1: NoiseKind, kind2: NoiseKind
             ) -> tuple[FormulaEntry, bool]:
    """Look up the formula entry; the flag says whether (p1, p2) swap."""
    if (kind1, kind2) in table:
        return table[(kind1, kind2)], False
    return table[(kind2, kind1)], True


def formula_family(kind1: NoiseKind, kind2: NoiseKind, trips: Trips,
                   parity: int) -> str:
    """Canonical family id a scenario dispatches to, e.g. 'ad-ad:psi'."""
    table = _ONE_WAY_TABLE if trips is Trips.ONE_WAY else _ROUND_TRIP_TABLE
    entry, _ = _resolve(table, kind1, kind2)
    if entry.parity_dependent:
        return entry.family + (":psi" if parity == 0 else ":phi")
    return entry.family


def one_way_families() -> tuple[str, ...]:
    return _family_ids(_ONE_WAY_TABLE)


def round_trip_families() -> tuple[str, ...]:
    return _family_ids(_ROUND_TRIP_TABLE)


def _family_ids(table) -> tuple[str, ...]:
    ids = []
    for entry in table.values():
        if entry.parity_dependent:
            ids.extend([entry.family + ":psi", entry.family + ":phi"])
        else:
            ids.append(entry.family)
    return tuple(sorted(set(ids)))


def closed_form_fidelity(scenario: NoiseScenario) -> float:
    """Evaluate the analytic fidelity for ``scenario``."""
    table = (_ONE_WAY_TABLE if scenario.trips is Trips.ONE_WAY
             else _ROUND_TRIP_TABLE)
    (k1, p1), (k2, p2) = scenario.first, scenario.second
    entry, swapped = _resolve(table, k1, k2)
    if swapped:
        p1, p2 = p2, p1
    return entry.evaluate(p1, p2, scenario.initial.parity)


def closed_form_oneway(scenario: NoiseScenario) -> float:
    if scenario.trips is not Trips.ONE_WAY:
        raise ValueError("scenario is not one-way")
    return closed_form_fidelity(scenario)


def closed_form_roundtrip(scenario: NoiseScenario) -> float:
    if scenario.trips is not Trips.ROUND_TRIP:
        raise ValueError("scenario is not round-trip")
    return closed_form_fidelity(scenario)


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------

def oracle_fidelity(scenario: NoiseScenario) -> float:
    """Fidelity by direct operator-sum evolution (no closed form).

    Builds the initial projector, conjugates it by every tensor product
    of Kraus operators (once per trip), and takes <psi|rho'|psi>.
    """
    (k1, p1), (k2, p2) = scenario.first, scenario.second
    stack = two_qubit_kraus_stack(kraus_set(k1, p1).operators,
                                  kraus_set(k2, p2).operators)
    rho = bell_density(scenario.initial)
    passes = 1 if scenario.trips is Trips.ONE_WAY else 2
    for _ in range(passes):
        rho = apply_kraus_stack(rho, stack)
    v = bell_vector(scenario.initial)
    return float(np.real(v.conj() @ rho @ v))


# ---------------------------------------------------------------------------
# formula verification sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridRow:
    p1: float
    p2: float
    kind_pair: str
    parity: str
    trips: Trips
    closed_form: float
    oracle: float

    @property
    def deviation(self) -> float:
        return abs(self.closed_form - self.oracle)


@dataclass
class VerificationReport:
    """Max |closed form - oracle| per (trips, family) over a p-grid."""

    grid_step: float
    max_deviation: dict[tuple[Trips, str], float]

    @property
    def passed(self) -> bool:
        return all(v < FORMULA_TOL for v in self.max_deviation.values())

    def failures(self) -> list[tuple[Trips, str, float]]:
        return [(t, fam, v) for (t, fam), v in sorted(
            self.max_deviation.items(), key=lambda kv: (kv[0][0].value, kv[0][1]))
            if v >= FORMULA_TOL]


def probability_grid(step: float) -> list[float]:
    if not 0.0 < step <= 0.5:
        raise ValueError(f"grid step must be in (0, 0.5], got {step}")
    count = round(1.0 / step)
    if abs(count * step - 1.0) > 1e-9:
        raise ValueError(f"grid step {step} does not divide 1")
    return [i * step for i in range(count + 1)]


def sweep_scenarios(grid_step: float, trips: Trips) -> list[GridRow]:
    """All (kind-pair, parity, p1, p2) rows for one trip mode.

    Row order: kind pair (token order), then parity class, then p1-major,
    then p2. Parity is split only where the formula depends on it.
    """
    grid = probability_grid(grid_step)
    rows: list[GridRow] = []
    kinds = list(NoiseKind)
    for k1 in kinds:
        for k2 in kinds:
            table = (_ONE_WAY_TABLE if trips is Trips.ONE_WAY
                     else _ROUND_TRIP_TABLE)
            entry, _ = _resolve(table, k1, k2)
            if entry.parity_dependent:
                parity_classes = [("psi", BellState.PSI_PLUS),
                                  ("phi", BellState.PHI_PLUS)]
            else:
                parity_classes = [("any", BellState.PSI_PLUS)]
            for parity_name, state in parity_classes:
                for p1 in grid:
                    for p2 in grid:
                        scenario = NoiseScenario((k1, p1), (k2, p2), state, trips)
                        rows.append(GridRow(
                            p1=p1, p2=p2,
                            kind_pair=f"{k1.token}-{k2.token}",
                            parity=parity_name,
                            trips=trips,
                            closed_form=closed_form_fidelity(scenario),
                            oracle=oracle_fidelity(scenario),
                        ))
    return rows


def verify_all_formulas(grid_step: float) -> VerificationReport:
    """Sweep every kind-pair, parity and trip mode; report max deviations.

    Every Bell state is exercised: parity-free families are checked on
    all four initial states, the AD-AD families on both states of their
    parity class.
    """
    grid = probability_grid(grid_step)
    worst: dict[tuple[Trips, str], float] = {}
    kinds = list(NoiseKind)
    for trips in Trips:
        for k1 in kinds:
            for k2 in kinds:
                set1 = {p: kraus_set(k1, p).operators for p in grid}
                set2 = {p: kraus_set(k2, p).operators for p in grid}
                for p1 in grid:
                    for p2 in grid:
                        stack = two_qubit_kraus_stack(set1[p1], set2[p2])
                        for state in BELL_ORDER:
                            scenario = NoiseScenario((k1, p1), (k2, p2),
                                                     state, trips)
                            closed = closed_form_fidelity(scenario)
                            rho = bell_density(state)
                            for _ in range(1 if trips is Trips.ONE_WAY else 2):
                                rho = apply_kraus_stack(rho, stack)
                            v = bell_vector(state)
                            oracle = float(np.real(v.conj() @ rho @ v))
                            key = (trips, formula_family(k1, k2, trips,
                                                         state.parity))
                            dev = abs(closed - oracle)
                            if dev > worst.get(key, -1.0):
                                worst[key] = dev
    return VerificationReport(grid_step=grid_step, max_deviation=worst)
