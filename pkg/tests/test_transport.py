import json
import threading

import pytest

from ccsim.transport import (
    BlockingFabric,
    DeadlockError,
    Network,
    ProtocolViolation,
    trace_to_csv,
    trace_to_json_lines,
)


def circulant_post(net, rank, s, payload, blocks=1, elements=1):
    p = net.p
    net.post(rank, (rank + s) % p, payload, (rank - s) % p,
             skip=s, blocks=blocks, elements=elements)


def test_exchange_ring_of_three():
    net = Network(3)
    for r in range(3):
        circulant_post(net, r, 1, f"payload-{r}")
    got = net.complete_round()
    # rank 0 sends to 1 and receives from 2
    assert got == ["payload-2", "payload-0", "payload-1"]


def test_p22_skip11_pairs_up():
    net = Network(22)
    for r in range(22):
        circulant_post(net, r, 11, r)
    net.complete_round()
    (rt,) = net.trace
    assert rt.skip == 11
    for e in rt.entries:
        assert e.to == e.frm == (e.rank + 11) % 22


def test_mismatched_pairing_deadlocks():
    net = Network(3)
    net.post(0, 1, "a", 2, skip=1, blocks=1, elements=1)
    net.post(1, 2, "b", 0, skip=1, blocks=1, elements=1)
    net.post(2, 1, "c", 1, skip=1, blocks=1, elements=1)  # 0 expects from 2
    with pytest.raises(DeadlockError) as err:
        net.complete_round()
    assert "rank 2" in str(err.value) or "rank 0" in str(err.value)


def test_double_post_rejected():
    net = Network(2)
    circulant_post(net, 0, 1, "x")
    with pytest.raises(ProtocolViolation, match="posted twice"):
        circulant_post(net, 0, 1, "y")


def test_partial_round_rejected():
    net = Network(3)
    circulant_post(net, 0, 1, "x")
    with pytest.raises(ProtocolViolation, match="never posted"):
        net.complete_round()


def test_skip_disagreement_rejected():
    net = Network(4)
    circulant_post(net, 0, 1, "a")
    circulant_post(net, 1, 1, "b")
    circulant_post(net, 2, 1, "c")
    net.post(3, 0, "d", 2, skip=3, blocks=1, elements=1)
    with pytest.raises(ProtocolViolation, match="disagree on the skip"):
        net.complete_round()


def test_non_circulant_round_rejected():
    # consistent pairing (two disjoint 2-cycles) but no single skip explains it
    net = Network(4)
    net.post(0, 1, "a", 1, skip=1, blocks=1, elements=1)
    net.post(1, 0, "b", 0, skip=1, blocks=1, elements=1)
    net.post(2, 3, "c", 3, skip=1, blocks=1, elements=1)
    net.post(3, 2, "d", 2, skip=1, blocks=1, elements=1)
    with pytest.raises(ProtocolViolation, match="circulant"):
        net.complete_round()


def test_out_of_range_rank():
    net = Network(2)
    with pytest.raises(ProtocolViolation):
        net.post(0, 2, "x", 1, skip=1, blocks=1, elements=1)


def test_metrics_and_conservation():
    net = Network(3, bytes_per_element=8)
    for s, elems in ((1, 4), (1, 2)):
        for r in range(3):
            circulant_post(net, r, s, "x" * elems, blocks=2, elements=elems)
        net.complete_round()
    m = net.collect_metrics()
    assert m.rounds == 2
    assert m.blocks_sent == (4, 4, 4) == m.blocks_received
    assert m.elements_sent == (6, 6, 6) == m.elements_received
    for rt in net.trace:
        sent = sum(e.elements for e in rt.entries)
        received = sum(rt.entries[e.frm].elements for e in rt.entries)
        assert sent == received
    assert net.trace[0].entries[0].nbytes == 32


def test_reduction_recording():
    net = Network(2)
    net.record_reductions(1, blocks=3, elements=7)
    m = net.collect_metrics()
    assert m.op_applications == (0, 3)
    assert m.elements_reduced == (0, 7)


def test_trace_exports():
    net = Network(2)
    for r in range(2):
        circulant_post(net, r, 1, b"xy", blocks=1, elements=2)
    net.complete_round()
    lines = trace_to_json_lines(net.trace).splitlines()
    assert len(lines) == 1
    obj = json.loads(lines[0])
    assert obj == {
        "round": 0,
        "skip": 1,
        "entries": [
            {"rank": 0, "to": 1, "from": 1, "blocks": 1, "elements": 2},
            {"rank": 1, "to": 0, "from": 0, "blocks": 1, "elements": 2},
        ],
    }
    csv_text = trace_to_csv(net.trace)
    assert csv_text.splitlines()[0] == "round,skip,rank,to,from,blocks,elements"
    assert "0,1,0,1,1,1,2" in csv_text

    assert trace_to_json_lines(()) == ""


def test_blocking_fabric_round_trip():
    net = Network(3)
    fabric = BlockingFabric(net, 3, timeout=10.0)
    got = [None] * 3

    def worker(r):
        got[r] = fabric.exchange(r, (r + 1) % 3, f"m{r}", (r - 1) % 3,
                                 skip=1, blocks=1, elements=1)

    threads = [threading.Thread(target=worker, args=(r,)) for r in range(3)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert got == ["m2", "m0", "m1"]


def test_blocking_fabric_propagates_deadlock_to_all_threads():
    net = Network(2)
    fabric = BlockingFabric(net, 2, timeout=10.0)
    failures = []

    def worker(r):
        try:
            # both ranks claim to send to rank 0
            fabric.exchange(r, 0, "x", 1, skip=1, blocks=1, elements=1)
        except ProtocolViolation as exc:
            failures.append((r, type(exc).__name__))

    threads = [threading.Thread(target=worker, args=(r,)) for r in range(2)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(failures) == 2
