import pytest
from hypothesis import given
from hypothesis import strategies as st

from cesplit import corpus
from cesplit.tree import (
    TreeError,
    diagonalize,
    greatest_r_prefix,
    is_left_of,
    is_positive_a,
    is_r_node,
    left_key,
    node_kind,
    proc_broken,
    proc_friedberg,
    proc_trivial,
    question_at,
    structural_report,
)

addresses = st.text(alphabet="01", min_size=0, max_size=12)


# -- question coding oracle -------------------------------------------------
#
# Enumerate every (j, k, b) the band arithmetic allows and record which
# depth each lands on; exactly one question per depth must come out.


def question_table(max_depth):
    table = {}
    for j in range(2, 40):
        d = j * j - 1
        if 1 <= d <= max_depth:
            table[d] = ("R", j, (j - 1) * (j - 1))
    for j in range(1, 40):
        for k in range(1, j + 1):
            for b, d in ((0, j * j + 2 * k - 2), (1, j * j + 2 * k - 1)):
                if 1 <= d <= max_depth and d not in table:
                    table[d] = ("T", j, k * k, b, k)
    return table


def test_exactly_one_question_per_depth():
    table = question_table(60)
    assert sorted(table) == list(range(1, 61))


@pytest.mark.parametrize("depth", range(1, 40))
def test_question_decode_matches_oracle(depth):
    node = "0" * depth
    table = question_table(40)
    want = table[depth]
    got = question_at(node)
    if want[0] == "R":
        assert got.kind == "R" and got.j == want[1] and len(got.base) == want[2]
    else:
        assert got.kind == "T" and got.j == want[1]
        assert len(got.base) == want[2] and got.b == want[3] and got.k == want[4]


def test_question_examples():
    q3 = question_at("000")
    assert q3.kind == "R" and q3.j == 2 and len(q3.base) == 1
    q6 = question_at("000000")
    assert q6.kind == "T" and q6.j == 2 and q6.b == 0 and len(q6.base) == 4
    # the j=2 band's strictly-between depths carry 2j = 4 questions
    between = [question_at("0" * d) for d in range(5, 9)]
    assert len(between) == 4
    assert between[-1].kind == "R"  # depth 8 opens the j=3 band


def test_root_carries_no_question():
    with pytest.raises(TreeError):
        question_at("")


def test_node_kinds():
    assert node_kind("") == "root"
    assert all(node_kind("0" * d) == "r" for d in (1, 4, 9, 16, 25))
    assert node_kind("00") == "a"
    assert is_positive_a("01") and not is_positive_a("0")  # depth 1 is an R-node
    assert not is_positive_a("00")
    assert greatest_r_prefix("000000") == "0000"
    assert greatest_r_prefix("00") == "0"
    assert greatest_r_prefix("0") == ""


# -- left order ---------------------------------------------------------------


@given(addresses, addresses)
def test_left_key_realises_left_order(a, b):
    if a == b:
        assert not is_left_of(a, b)
    else:
        assert is_left_of(a, b) == (left_key(a) < left_key(b))


@given(addresses, addresses, addresses)
def test_left_order_transitive(a, b, c):
    if is_left_of(a, b) and is_left_of(b, c):
        assert is_left_of(a, c)


def test_one_branch_is_left():
    assert is_left_of("1", "0")
    assert is_left_of("01", "00")
    assert is_left_of("0", "00")  # prefixes sit left of extensions


# -- runs ----------------------------------------------------------------------


STAGES = 30_000
LAST = STAGES - 1


@pytest.fixture(scope="module")
def hf_run():
    return diagonalize(proc_friedberg, STAGES)


def test_hf_run_verdict(hf_run):
    assert hf_run.verdict.kind == 3
    assert hf_run.stable
    assert hf_run.violations == []


def test_structural_report_clean(hf_run):
    report = structural_report(hf_run.run)
    assert report["problems"] == []
    assert report["partition_exceptions"] == 0
    assert report["dumped"] > 0


def test_f_endpoints_legal(hf_run):
    for st, ks, f, kind in hf_run.run._endpoint_history:
        assert kind in ("r", "positive-a") or f == ""
        assert len(f) <= min(st * st, 25)


def test_ball_entry_records(hf_run):
    enters = [r for r in hf_run.trace if r["op"] == "enter"]
    assert enters
    for r in enters[:200]:
        assert r["x"] == r["s"] - 1
        assert len(r["node"]) == 1


def test_first_branch_follows_chip_change(hf_run):
    # the walk branches 1 at the root exactly when its counter moved
    fs = [r for r in hf_run.trace if r["op"] == "f"]
    assert any(r["node"].startswith("1") for r in fs)
    assert any(r["node"].startswith("0") for r in fs if r["node"])


def test_pull_records_discipline(hf_run):
    pulls = [r for r in hf_run.trace if r["op"] == "pull"]
    assert pulls
    for r in pulls:
        assert r["x0"] < r["x1"]
        assert r["req"] <= r["s"]
        assert all(r["x0"] != y and len(r["node"]) < y < r["x1"] for y in r["mid"])


def test_dumped_balls_reach_a(hf_run):
    k = hf_run.kernel
    dumped = [r for r in hf_run.trace if r["op"] == "dump-orig"]
    assert dumped
    a_members = k.w_at(hf_run.e_a, LAST)
    sample = [x for r in dumped[:50] for x in r["balls"]]
    assert set(sample) <= a_members


def test_patches_cover_casualties(hf_run):
    patches = [r for r in hf_run.trace if r["op"] == "patch"]
    if patches:
        run = hf_run.run
        for r in patches[:100]:
            assert r["x"] in run.a_committed
            assert r["x"] in run.nodes[r["node"]].r_committed


def test_balls_never_reenter_after_a(hf_run):
    run = hf_run.run
    assert not (set(run.positions) & run.a_committed)


def test_determinism_of_full_trace():
    r1 = diagonalize(proc_friedberg, 4_000)
    r2 = diagonalize(proc_friedberg, 4_000)
    assert r1.trace == r2.trace
    assert list(r1.kernel.log.events()) == list(r2.kernel.log.events())


def test_trivial_and_broken_verdicts():
    r_t = diagonalize(proc_trivial, 12_000, collect_trace=False)
    assert r_t.verdict.kind == 2 and r_t.stable
    r_b = diagonalize(proc_broken, 12_000, collect_trace=False)
    assert r_b.verdict.kind == 1 and r_b.stable
    assert r_b.verdict.detail["kind"] == "missing"


def test_depth_bound_must_be_square():
    with pytest.raises(TreeError):
        diagonalize(proc_broken, 100, depth=20)


def test_chip_freeze_is_permanent(hf_run):
    run = hf_run.run
    frozen = [s.tmeasure for s in run.nodes.values() if s.tmeasure and s.tmeasure.frozen]
    assert frozen  # escape violations freeze most T-questions quickly


def test_piece_pairs_stay_disjoint(hf_run):
    from cesplit.setalg import ComputablePair, computable_view

    run = hf_run.run
    log = hf_run.kernel.log
    r_nodes = [st for st in run.nodes.values() if st.kind == "r" and st.r_committed]
    assert r_nodes
    for state in r_nodes[:4]:
        pair = ComputablePair(state.r_index, state.rt_index)
        for s in (STAGES // 4, STAGES - 1):
            computable_view(log, pair, s)  # raises on a shared element
        assert state.r_committed & state.rt_committed == set()
