import math

import numpy as np
import pytest

from cycleq.scenarios import (
    DECODERS,
    ScenarioResult,
    adder_decode_ok,
    decode_adder,
    run_adder,
    run_bell_commuting,
    run_noncommuting_demo,
    run_teleportation,
    table_bob_state,
)
from cycleq.state import Gate, StateError, StateVector, apply_gate, fidelity


def test_bell_single_shot():
    for seed in range(20):
        res = run_bell_commuting("psi1", 1, seed)
        (key,) = res.counts
        assert key in {"00", "11"}


@pytest.mark.parametrize("engine", ["schedule", "statevector"])
def test_bell_psi2_support(engine):
    res = run_bell_commuting("psi2", 20_000, 1, engine=engine)
    assert set(res.counts) == {"01", "10"}
    assert res.passed


def test_unknown_bell_variant():
    with pytest.raises(ValueError):
        run_bell_commuting("psi3", 10, 0)


def test_adder_decode_101():
    assert decode_adder("101") == {"a": 1, "b": 1, "sum": 0, "carry": 1}
    assert all(adder_decode_ok(p) for p in ("000", "010", "110", "101"))
    assert not adder_decode_ok("111")


def test_adder_single_shot():
    (key,) = run_adder(1, 7).counts
    assert key in {"000", "010", "110", "101"}


def test_decoders_undo_table_states():
    a, b = 0.6, 0.8j
    phi = StateVector([a, b])
    for pattern, m in DECODERS.items():
        bob = table_bob_state(pattern, a, b)
        fixed = StateVector(m @ bob.amps)
        assert fidelity(fixed, phi) == pytest.approx(1.0, abs=1e-12)
    # outcome 11 needs no correction
    assert table_bob_state("11", a, b) == phi


@pytest.mark.parametrize("engine", ["schedule", "statevector"])
def test_teleport_basis_input(engine):
    res = run_teleportation(1, 0, 2000, 3, engine=engine)
    assert res.passed
    assert res.fidelity == pytest.approx(1.0, abs=1e-12)
    assert set(res.counts) == set(DECODERS)


def test_teleport_rejects_unnormalized():
    with pytest.raises(StateError):
        run_teleportation(1, 1, 10, 0)


def test_noncommuting_small_run():
    res = run_noncommuting_demo(2000, 4)
    assert set(res.counts) <= {"00x", "11x", "null"}
    assert sum(res.counts.values()) == 2000
    assert res.assertions[1].passed


def test_result_counts_must_sum():
    with pytest.raises(ValueError):
        ScenarioResult("x", "schedule", 10, 0, {"0": 9})


def test_failed_check_marks_result():
    res = ScenarioResult("x", "schedule", 1, 0, {"0": 1})
    res.check("fine", True)
    assert res.passed
    res.check("broken", False, 3)
    assert not res.passed
    assert res.to_dict()["assertions"][1] == {"description": "broken", "passed": False, "value": 3}
