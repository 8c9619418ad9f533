import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cycleq.measure import (
    NULL_RESULT,
    AxisOutcome,
    MeasurementMode,
    MeasurementSpec,
    ModeError,
    ScheduleMachine,
    entangled_two_axis_schedule,
    outcome_distribution,
    paper_literal_noncommuting_measure,
    read_outcomes,
    schedule_measure,
)
from cycleq.rng import RandomSource
from cycleq.scenarios import table_bob_state, teleport_states
from cycleq.schedule import build_schedule, factor, partition_from_state, shuffled
from cycleq.state import Gate, StateError, StateVector, apply_gate, fidelity, outcome_probabilities, project

S2 = 1 / math.sqrt(2)
LITERAL = MeasurementMode.PAPER_LITERAL


def random_state(rng, n):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(v, normalize=True)


def test_spec_rejects_repeated_qubit():
    with pytest.raises(StateError):
        MeasurementSpec((0, 0))
    with pytest.raises(StateError):
        MeasurementSpec(())


def test_bell_pair_outcomes_agree():
    bell = StateVector([S2, 0, 0, S2])
    part = partition_from_state(bell)
    spec = MeasurementSpec((0, 1))
    assert outcome_distribution(part, spec) == pytest.approx([0.5, 0, 0, 0.5], abs=1e-12)
    seen = set()
    for s in range(200):
        out, post, _ = schedule_measure(part, bell, spec, RandomSource(3, s))
        seen.add(out)
        assert post == StateVector.basis(out)
    assert seen == {"00", "11"}


def test_teleport_row_00_leaves_bob_flipped():
    a, b = 0.6, 0.8j
    _, _, psi2 = teleport_states(a, b)
    part = partition_from_state(psi2)
    spec = MeasurementSpec((0, 1))
    # find a shot landing on 00
    for s in range(1000):
        out, post, post_part = schedule_measure(part, psi2, spec, RandomSource(0, s))
        if out == "00":
            break
    else:
        pytest.fail("no 00 outcome in 1000 shots")
    bob, dev = factor(post, (2,))
    assert dev < 1e-12
    assert fidelity(StateVector(bob, normalize=True), table_bob_state("00", a, b)) == pytest.approx(1.0, abs=1e-12)
    # Bob's qubit is its own group after the readout
    assert (2,) in post_part.blocks


def test_zero_state_reads_zero_everywhere():
    zero = StateVector.basis("0")
    part = partition_from_state(zero)
    spec = MeasurementSpec((0,))
    us = np.linspace(0, 1, 1001, endpoint=False)
    assert np.all(read_outcomes(part, spec, us[None, :]) == 0)
    out, post, _ = schedule_measure(part, zero, spec, RandomSource(1))
    assert out == "0" and post == zero


@settings(max_examples=100, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    qubits=st.lists(st.integers(0, 3), min_size=1, max_size=4, unique=True),
    rotated=st.booleans(),
)
def test_outcome_law_matches_oracle(seed, qubits, rotated):
    rng = np.random.default_rng(seed)
    s = random_state(rng, 2)
    s = apply_gate(StateVector(np.kron(s.amps, random_state(rng, 2).amps)), Gate.cnot(1, 2))
    angles = tuple(rng.uniform(-3, 3, size=len(qubits))) if rotated else ()
    spec = MeasurementSpec(tuple(qubits), angles)
    law = outcome_distribution(partition_from_state(s, shuffled(seed)), spec)
    assert np.max(np.abs(law - outcome_probabilities(s, qubits, angles or None))) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), q=st.integers(0, 2))
def test_unmeasured_members_follow_oracle_conditional(seed, q):
    s = random_state(np.random.default_rng(seed), 3)
    part = partition_from_state(s)
    spec = MeasurementSpec((q,))
    out, post, post_part = schedule_measure(part, s, spec, RandomSource(seed, 0))
    expected = project(s, [q], int(out, 2))
    assert np.max(np.abs(post.amps - expected.amps)) <= 1e-12
    # partition schedules reproduce the conditional joint law
    assert np.max(np.abs(post_part.joint_distribution() - expected.probabilities())) <= 1e-12


def test_instant_subinterval_overlap():
    # dwell 0.3 on |0>, 0.7 on |1>; a window [0.2, 0.6) overlaps them 0.1 and 0.3
    part = partition_from_state(StateVector([math.sqrt(0.3), math.sqrt(0.7)]))
    spec = MeasurementSpec((0,))
    us = np.linspace(0.2, 0.6, 40_000, endpoint=False)
    codes = read_outcomes(part, spec, us[None, :])
    assert np.mean(codes == 0) == pytest.approx(0.1 / 0.4, abs=1e-3)


def test_product_groups_are_read_independently():
    s = StateVector(np.kron([S2, S2], [S2, S2]))
    part = partition_from_state(s)
    assert len(part.groups) == 2
    spec = MeasurementSpec((0, 1))
    # the same instant on both groups would give only 00/11
    u = np.array([[0.1, 0.1, 0.9, 0.9], [0.1, 0.9, 0.1, 0.9]])
    assert read_outcomes(part, spec, u).tolist() == [0b00, 0b01, 0b10, 0b11]


def test_declared_order_is_kept():
    part = partition_from_state(StateVector.basis("01"))
    out, _, _ = schedule_measure(part, StateVector.basis("01"), MeasurementSpec((1, 0)), RandomSource(0))
    assert out == "10"


def test_rotated_reading():
    plus = StateVector([S2, S2])
    part = partition_from_state(plus)
    spec = MeasurementSpec((0,), (math.pi / 4,))
    for s in range(50):
        out, post, _ = schedule_measure(part, plus, spec, RandomSource(4, s))
        assert out == "1"
        assert fidelity(post, plus) == pytest.approx(1.0, abs=1e-12)


def test_standard_measure_refuses_literal_mode():
    part = partition_from_state(StateVector.basis("00"))
    with pytest.raises(ModeError):
        schedule_measure(part, StateVector.basis("00"), MeasurementSpec((0, 1), mode=LITERAL, axis="x"), RandomSource(0))


def test_machine_tracks_collapse():
    m = ScheduleMachine(StateVector.zeros(2))
    m.apply(Gate.h(0))
    m.apply(Gate.cnot(0, 1))
    assert m.partition.blocks == [(0, 1)]
    first = m.measure(MeasurementSpec((0,)), RandomSource(5))
    assert m.partition.blocks == [(0,), (1,)]
    assert m.measure(MeasurementSpec((1,)), RandomSource(6)) == first
    assert m.epoch == 4
    assert not hasattr(m, "rebuild")


# paper-literal mode ------------------------------------------------------------


def test_literal_requires_mode():
    sched = entangled_two_axis_schedule()
    with pytest.raises(ModeError):
        paper_literal_noncommuting_measure(sched, MeasurementSpec((0, 1)), RandomSource(0))


def test_literal_x_reading_collapses_then_y_is_null():
    sched = entangled_two_axis_schedule()
    spec_x = MeasurementSpec((0, 1), mode=LITERAL, axis="x")
    spec_y = MeasurementSpec((0, 1), mode=LITERAL, axis="y")
    hits = 0
    for s in range(500):
        rng = RandomSource(11, s)
        out, post = paper_literal_noncommuting_measure(sched, spec_x, rng)
        if out is NULL_RESULT:
            assert post is sched
            continue
        hits += 1
        assert isinstance(out, AxisOutcome) and str(out) in {"00x", "11x"}
        for _ in range(3):
            y, after = paper_literal_noncommuting_measure(post, spec_y, rng)
            assert y is NULL_RESULT and after == post
    assert 0 < hits < 500


def test_literal_non_null_fraction():
    sched = entangled_two_axis_schedule()
    spec_x = MeasurementSpec((0, 1), mode=LITERAL, axis="x")
    n = 100_000
    hits = sum(paper_literal_noncommuting_measure(sched, spec_x, RandomSource(42, s))[0] is not NULL_RESULT for s in range(n))
    assert abs(hits / n - 0.5) <= 0.008
