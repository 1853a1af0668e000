import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccsim.schedule import (
    SkipSchedule,
    ceil_log2,
    doubling_skips,
    halving_skips,
    linear_skips,
    run_lengths,
    schedule_to_json,
    sqrt_skips,
    validate_schedule,
)


def test_halving_skips_p22():
    assert halving_skips(22).skips == (11, 6, 3, 2, 1)


def test_halving_skips_small():
    assert halving_skips(1).skips == ()
    assert halving_skips(2).skips == (1,)
    # hand-evaluated ceil(s/2) chain from 5: 3, 2, 1
    assert halving_skips(5).skips == (3, 2, 1)


def test_doubling_skips():
    assert doubling_skips(8).skips == (4, 2, 1)
    assert doubling_skips(22).skips == (16, 8, 4, 2, 1)
    assert doubling_skips(2).skips == (1,)
    assert doubling_skips(1).skips == ()


def test_linear_skips():
    assert linear_skips(4).skips == (3, 2, 1)
    assert linear_skips(2).skips == (1,)
    assert linear_skips(1).skips == ()


def test_sqrt_skips():
    # ceil(sqrt(16)) = 4: prefix 12, 8 (4 itself no longer exceeds 4),
    # then the halving chain continues from 8
    assert sqrt_skips(16).skips == (12, 8, 4, 2, 1)
    # 4 - 2 = 2 is not > 2, so pure halving
    assert sqrt_skips(4).skips == (2, 1)
    assert sqrt_skips(1).skips == ()


def test_run_lengths():
    assert run_lengths(halving_skips(22)) == [11, 5, 3, 1, 1]
    assert run_lengths(halving_skips(2)) == [1]
    lengths = run_lengths(doubling_skips(8))
    assert lengths == [4, 2, 1]
    assert sum(lengths) == 7


def test_rejects_p0():
    with pytest.raises(ValueError):
        halving_skips(0)
    with pytest.raises(ValueError):
        SkipSchedule(0, ())


def test_validate_halving_p22_passes():
    report = validate_schedule(halving_skips(22))
    assert report.ok
    assert all(c.passed for c in report.checks)


def test_validate_trivial_p2():
    assert validate_schedule(SkipSchedule(2, (1,))).ok


def test_validate_custom_5_1_fails_representability():
    # subset sums of {1, 5} reach only 1, 5, 6
    report = validate_schedule(SkipSchedule(8, (5, 1)))
    assert not report.ok
    failed = {c.name for c in report.failures}
    assert "representability" in failed
    detail = next(c.detail for c in report.failures if c.name == "representability")
    assert "i=3" in detail and "i=4" in detail
    # run lengths still sum to p-1: (8-5) + (5-1) = 7
    assert next(c for c in report.checks if c.name == "run_length_sum").passed


def test_validate_overlapping_schedule_fails_capacity():
    # every offset 1..15 is a sum of distinct skips, yet round 0 moves
    # 16 - 5 = 11 blocks with skip 5: blocks 5..10 would be sent and updated
    # in the same round and their late contributions could never drain
    report = validate_schedule(SkipSchedule(16, (5, 4, 3, 2, 1)))
    assert next(c for c in report.checks if c.name == "representability").passed
    assert not next(c for c in report.checks if c.name == "round_capacity").passed
    assert not report.ok


def test_validate_not_decreasing():
    report = validate_schedule(SkipSchedule(8, (3, 3, 1)))
    assert not next(c for c in report.checks if c.name == "strictly_decreasing").passed


def test_validate_first_skip_too_large():
    report = validate_schedule(SkipSchedule(4, (4, 2, 1)))
    assert not next(c for c in report.checks if c.name == "first_skip_below_p").passed


def test_schedule_json():
    assert schedule_to_json(halving_skips(22)) == "[11, 6, 3, 2, 1]"
    assert schedule_to_json(halving_skips(1)) == "[]"


def test_halving_round_count_and_volume_up_to_4096():
    for p in range(1, 4097):
        sched = halving_skips(p)
        assert len(sched.skips) == ceil_log2(p)
        if p > 1:
            assert ceil_log2(p) == math.ceil(math.log2(p))
        assert sum(run_lengths(sched)) == p - 1


@given(st.integers(min_value=1, max_value=1500))
def test_halving_runs_at_most_half(p):
    lengths = run_lengths(halving_skips(p))
    assert max(lengths, default=0) <= -(-p // 2)


@settings(max_examples=60)
@given(st.integers(min_value=1, max_value=400),
       st.sampled_from(["halving", "doubling", "linear", "sqrt"]))
def test_every_generator_validates(p, scheme):
    from ccsim.schedule import GENERATORS

    sched = GENERATORS[scheme](p)
    assert sched.p == p
    assert sched.scheme == scheme
    assert validate_schedule(sched).ok, validate_schedule(sched).summary()


@given(st.integers(min_value=1, max_value=400))
def test_round_counts_per_scheme(p):
    assert len(linear_skips(p).skips) == p - 1
    assert len(doubling_skips(p).skips) == ceil_log2(p)
    assert len(sqrt_skips(p).skips) <= 3 * math.isqrt(p) + ceil_log2(p) + 1
