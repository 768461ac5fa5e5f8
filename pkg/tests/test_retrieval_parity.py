"""The compiled retrieval kernel must agree with the pure-Python reference
on arbitrary inputs (same downloads, same switch/skip accounting)."""

import pytest
from hypothesis import given, settings, strategies as st

from fpbs import _retrieval_py

_c = pytest.importorskip("fpbs._retrieval_c")


@st.composite
def retrieval_case(draw):
    cycle = draw(st.integers(min_value=3, max_value=40))
    channels = draw(st.integers(min_value=1, max_value=6))
    n_items = draw(st.integers(min_value=1, max_value=8))
    occ_ptr = [0]
    occ_slot = []
    occ_chan = []
    for _ in range(n_items):
        copies = draw(st.integers(min_value=1, max_value=3))
        for _ in range(copies):
            occ_slot.append(draw(st.integers(min_value=1, max_value=cycle)))
            occ_chan.append(draw(st.integers(min_value=1, max_value=channels)))
        occ_ptr.append(len(occ_slot))
    start_item = draw(st.integers(min_value=0, max_value=n_items - 1))
    start_chan = occ_chan[occ_ptr[start_item]]
    start_slot = occ_slot[occ_ptr[start_item]] + cycle * draw(
        st.integers(min_value=0, max_value=2)
    )
    return occ_ptr, occ_slot, occ_chan, start_item, start_slot, start_chan, cycle


@given(retrieval_case())
@settings(max_examples=300, deadline=None)
def test_kernels_agree(case):
    assert _c.greedy_retrieve(*case) == _retrieval_py.greedy_retrieve(*case)


def test_backend_labels():
    assert _retrieval_py.BACKEND == "python"
    assert _c.BACKEND == "cython"


def test_large_query_falls_back_consistently():
    # more items than the compiled kernel's stack arrays: it must delegate
    n_items = 70
    occ_ptr = list(range(n_items + 1))
    occ_slot = [(3 * i) % 97 + 1 for i in range(n_items)]
    occ_chan = [i % 4 + 1 for i in range(n_items)]
    case = (occ_ptr, occ_slot, occ_chan, 0, occ_slot[0], occ_chan[0], 97)
    assert _c.greedy_retrieve(*case) == _retrieval_py.greedy_retrieve(*case)
