"""Pure-Python greedy retrieval kernel.

Reference implementation of the hot loop in the access simulator; the
compiled variant in _retrieval_c.pyx must match it step for step (see
tests/test_retrieval_parity.py).
"""

from __future__ import annotations

BACKEND = "python"


def greedy_retrieve(occ_ptr, occ_slot, occ_chan, start_item, start_slot, start_chan, cycle_len):
    """Greedy earliest-feasible retrieval after the first download.

    occ_ptr[i]..occ_ptr[i+1] delimit item i's occurrences in occ_slot /
    occ_chan (in-cycle slots, 1-based).  The client has just downloaded
    item `start_item` at absolute slot `start_slot` on `start_chan`.  After
    a download at (t, c) the next download must be at slot >= t+1 on the
    same channel or >= t+2 on another (one slot to switch), slots wrapping
    cyclically.  Ties prefer staying on the current channel, then the
    lowest channel id, then the lowest item index.

    Returns (items, slots, chans, switches, skips) for the remaining
    downloads, slots absolute.
    """
    n_items = len(occ_ptr) - 1
    remaining = [i for i in range(n_items) if i != start_item]
    t = start_slot
    c = start_chan
    out_items = []
    out_slots = []
    out_chans = []
    switches = 0
    skips = 0
    while remaining:
        best_a = -1
        best_chan = -1
        best_idx = -1
        for i in remaining:
            for k in range(occ_ptr[i], occ_ptr[i + 1]):
                s = occ_slot[k]
                ch = occ_chan[k]
                earliest = t + 1 if ch == c else t + 2
                # first absolute slot >= earliest congruent to s mod L
                delta = (s - earliest) % cycle_len
                a = earliest + delta
                if (
                    best_a < 0
                    or a < best_a
                    or (a == best_a and (ch == c) and best_chan != c)
                    or (a == best_a and (ch == c) == (best_chan == c) and ch < best_chan)
                    or (a == best_a and ch == best_chan and i < best_idx)
                ):
                    best_a = a
                    best_chan = ch
                    best_idx = i
        if best_chan != c:
            switches += 1
            skips += best_a - t - 2
        else:
            skips += best_a - t - 1
        out_items.append(best_idx)
        out_slots.append(best_a)
        out_chans.append(best_chan)
        remaining.remove(best_idx)
        t = best_a
        c = best_chan
    return out_items, out_slots, out_chans, switches, skips
