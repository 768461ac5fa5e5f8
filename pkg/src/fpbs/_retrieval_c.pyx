# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled greedy retrieval kernel; mirrors _retrieval_py.greedy_retrieve."""

BACKEND = "cython"


def greedy_retrieve(occ_ptr, occ_slot, occ_chan, start_item, start_slot, start_chan, cycle_len):
    cdef long long[64] ptr
    cdef long long[512] slots
    cdef long long[512] chans
    cdef int n_items = len(occ_ptr) - 1
    cdef int n_occ = len(occ_slot)
    cdef int i, k
    if n_items >= 64 or n_occ >= 512:
        # fall back for absurdly large queries
        from fpbs._retrieval_py import greedy_retrieve as py_greedy
        return py_greedy(occ_ptr, occ_slot, occ_chan,
                         start_item, start_slot, start_chan, cycle_len)
    for i in range(n_items + 1):
        ptr[i] = occ_ptr[i]
    for k in range(n_occ):
        slots[k] = occ_slot[k]
        chans[k] = occ_chan[k]

    cdef long long t = start_slot
    cdef long long c = start_chan
    cdef long long L = cycle_len
    cdef long long a, s, ch, earliest, delta, best_a, best_chan
    cdef int best_idx, j, n_rem
    cdef long long switches = 0
    cdef long long skips = 0
    cdef int[64] remaining
    n_rem = 0
    for i in range(n_items):
        if i != start_item:
            remaining[n_rem] = i
            n_rem += 1

    out_items = []
    out_slots = []
    out_chans = []
    cdef bint better, cur_stay, best_stay
    while n_rem > 0:
        best_a = -1
        best_chan = -1
        best_idx = -1
        for j in range(n_rem):
            i = remaining[j]
            for k in range(ptr[i], ptr[i + 1]):
                s = slots[k]
                ch = chans[k]
                earliest = t + 1 if ch == c else t + 2
                delta = (s - earliest) % L
                if delta < 0:
                    delta += L
                a = earliest + delta
                better = False
                if best_a < 0 or a < best_a:
                    better = True
                elif a == best_a:
                    cur_stay = ch == c
                    best_stay = best_chan == c
                    if cur_stay and not best_stay:
                        better = True
                    elif cur_stay == best_stay and ch < best_chan:
                        better = True
                    elif ch == best_chan and i < best_idx:
                        better = True
                if better:
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
        for j in range(n_rem):
            if remaining[j] == best_idx:
                remaining[j] = remaining[n_rem - 1]
                n_rem -= 1
                break
        t = best_a
        c = best_chan
    return out_items, out_slots, out_chans, switches, skips
