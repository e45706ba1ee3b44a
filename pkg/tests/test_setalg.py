import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cesplit.kernel import EventLog
from cesplit.setalg import (
    ComputablePair,
    SetAlgebraError,
    before,
    before_then,
    check_split_history,
    computable_view,
    is_split,
)

A, B = 100, 101


def scripted_log(events):
    log = EventLog()
    for stage, index, element in events:
        log.append(stage, index, element)
    return log


@pytest.fixture
def worked_log():
    return scripted_log([(1, A, 5), (2, B, 5), (3, B, 7), (4, A, 7)])


def test_before_worked_example(worked_log):
    assert before(worked_log, A, B, 4) == {5}
    assert before(worked_log, B, A, 4) == {7}


def test_before_self_is_empty(worked_log):
    for s in range(5):
        assert before(worked_log, A, A, s) == frozenset()


def test_before_then_worked_example(worked_log):
    assert before_then(worked_log, A, B, 4) == {5}
    assert before_then(worked_log, B, A, 4) == {7}


def test_decomposition_at_worked_stage(worked_log):
    # stagewise: before(B,A,4) splits into the plain difference and the
    # entered-then part; here {7} = {} | {7}
    w_b = worked_log.members_at(B, 4)
    w_a = worked_log.members_at(A, 4)
    assert before(worked_log, B, A, 4) == (w_b - w_a) | before_then(worked_log, B, A, 4)
    assert (w_b - w_a) & before_then(worked_log, B, A, 4) == frozenset()


# random scripted logs: distinct (index, element) pairs in random order
log_strategy = st.lists(
    st.tuples(st.sampled_from([A, B, 102]), st.integers(min_value=0, max_value=6)),
    max_size=18,
    unique=True,
)


def build(pairs):
    return scripted_log([(i + 1, idx, x) for i, (idx, x) in enumerate(pairs)])


@given(log_strategy, st.integers(min_value=0, max_value=20))
def test_operator_laws(pairs, s):
    log = build(pairs)
    for a, b in ((A, B), (B, A), (A, 102)):
        bt = before_then(log, a, b, s)
        bf = before(log, a, b, s)
        assert bt <= bf <= log.members_at(a, s)
        diff = log.members_at(a, s) - log.members_at(b, s)
        assert bf == diff | bt
        assert diff & bt == frozenset()


@given(log_strategy, st.integers(min_value=0, max_value=19))
def test_operators_monotone(pairs, s):
    log = build(pairs)
    assert before(log, A, B, s) <= before(log, A, B, s + 1)
    assert before_then(log, A, B, s) <= before_then(log, A, B, s + 1)


def test_is_split_trivial_empty():
    log = EventLog()
    verdict = is_split(log, A, B, 102, 0)
    assert verdict.ok


def test_is_split_settling_then_ok():
    log = scripted_log([(1, A, 5), (2, B, 5)])
    at_entry = is_split(log, A, B, 102, 1)
    assert at_entry.ok and at_entry.settling == (5,)
    assert is_split(log, A, B, 102, 2).ok


def test_is_split_overlap_and_extra():
    log = scripted_log([(1, A, 5), (2, B, 5), (3, 102, 5)])
    verdict = is_split(log, A, B, 102, 3)
    assert not verdict.ok and verdict.first_violation == ("overlap", 5)
    log2 = scripted_log([(1, B, 9)])
    verdict2 = is_split(log2, A, B, 102, 1)
    assert not verdict2.ok and verdict2.first_violation == ("extra", 9)


def test_is_split_missing_after_settle_window():
    log = scripted_log([(1, A, 5)])
    assert is_split(log, A, B, 102, 1).ok
    verdict = is_split(log, A, B, 102, 2)
    assert not verdict.ok and verdict.missing == (5,)


def test_strict_mode_flags_fresh_entrants():
    log = scripted_log([(1, A, 5)])
    assert not is_split(log, A, B, 102, 1, settle=0).ok


@settings(max_examples=200)
@given(log_strategy)
def test_history_check_agrees_with_stagewise_verdicts(pairs):
    log = build(pairs)
    S = len(pairs) + 2
    hit = check_split_history(log, A, B, 102, S)
    firsts = [s for s in range(S + 1) if not is_split(log, A, B, 102, s).ok]
    if hit is None:
        assert firsts == []
    else:
        assert firsts and firsts[0] == hit[0]


def test_computable_view_interval():
    log = scripted_log([(1, A, 0), (2, B, 1), (3, A, 2), (4, A, 3)])
    n, member = computable_view(log, ComputablePair(A, B), 4)
    assert n == 4
    assert member(0) is True and member(1) is False and member(3) is True
    assert member(4) is None


def test_computable_view_empty_pair():
    n, member = computable_view(EventLog(), ComputablePair(A, B), 0)
    assert n == 0 and member(0) is None


def test_computable_view_disjointness_enforced():
    log = scripted_log([(1, A, 0), (2, B, 0)])
    with pytest.raises(SetAlgebraError):
        computable_view(log, ComputablePair(A, B), 2)


def test_overlap_violations_are_monotone():
    log = scripted_log([(1, A, 5), (2, B, 5), (3, 102, 5), (4, A, 6)])
    first = next(s for s in range(5) if not is_split(log, A, B, 102, s).ok)
    for s in range(first, 5):
        verdict = is_split(log, A, B, 102, s)
        assert not verdict.ok and verdict.overlap == (5,)


def test_certified_interval_grows_with_stage():
    from cesplit.kernel import Kernel
    from cesplit.witness import register_paced_pair

    kernel = Kernel()
    pair = register_paced_pair(kernel, lambda n: n % 2 == 0, pace=2)
    kernel.run_to(4_000)
    sizes = [computable_view(kernel.log, pair, s)[0] for s in (500, 1_500, 3_999)]
    assert sizes[0] < sizes[1] < sizes[2]
