"""Pure-numpy implementations, vectorised across machines instead of cells."""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def tm_batch(digits, blank, steps):
    digits = np.asarray(digits, dtype=np.int64)
    m = digits.shape[0]
    width = 2 * steps + 1
    tape = np.full((m, width), blank, dtype=np.uint8)
    rows = np.arange(m)
    head = np.full(m, steps, dtype=np.int64)
    state = np.zeros(m, dtype=np.int64)
    lo = head.copy()
    hi = head.copy()
    for _ in range(steps):
        a = digits[rows, 2 * state + tape[rows, head]]
        tape[rows, head] = a & 1
        head += 2 * ((a >> 1) & 1) - 1
        state = a >> 2
        np.minimum(lo, head, out=lo)
        np.maximum(hi, head, out=hi)
    return tape, lo, hi - lo + 1


def ca_batch(rules, background, steps):
    rules = np.asarray(rules, dtype=np.int64)
    m = rules.shape[0]
    width = 1 + 3 * steps
    b = np.full(m, background, dtype=np.int64)
    cur = np.empty((m, width + 3), dtype=np.int64)
    cur[:] = b[:, None]
    cur[:, 2 + steps] = 1 - background
    for _ in range(steps):
        # columns 0,1 and the last one are padding holding the background
        code = (cur[:, :-3] << 3) | (cur[:, 1:-2] << 2) | (cur[:, 2:-1] << 1) | cur[:, 3:]
        new = (rules[:, None] >> code) & 1
        b = (rules >> (15 * b)) & 1
        cur[:, 2:-1] = new
        cur[:, :2] = b[:, None]
        cur[:, -1] = b
    return cur[:, 2:-1].astype(np.uint8)


def tag_batch(prod_bits, prod_len, init, steps):
    prod_bits = np.asarray(prod_bits, dtype=np.uint8)
    prod_len = np.asarray(prod_len, dtype=np.int64)
    init = np.asarray(init, dtype=np.uint8)
    m = prod_bits.shape[0]
    n0 = init.shape[0]
    width = n0 + 3 * steps
    buf = np.zeros((m, width + 3), dtype=np.uint8)
    buf[:, :n0] = init
    head = np.zeros(m, dtype=np.int64)
    tail = np.full(m, n0, dtype=np.int64)
    for _ in range(steps):
        live = np.flatnonzero(tail - head >= 2)
        if live.size == 0:
            break
        h = head[live]
        block = 2 * buf[live, h].astype(np.int64) + buf[live, h + 1]
        n = prod_len[live, block]
        t = tail[live]
        for j in range(3):
            w = n > j
            buf[live[w], t[w] + j] = prod_bits[live[w], block[w], j]
        head[live] = h + 2
        tail[live] = t + n
    return buf[:, :width], head, tail - head


def count_windows(buf, starts, lengths, k, stride):
    buf = np.asarray(buf, dtype=np.int64)
    starts = np.asarray(starts, dtype=np.int64)
    lengths = np.asarray(lengths, dtype=np.int64)
    m, width = buf.shape
    if width < k or m == 0:
        return np.zeros(1 << k, dtype=np.int64)
    weights = 1 << np.arange(k - 1, -1, -1, dtype=np.int64)
    codes = sliding_window_view(buf, k, axis=1) @ weights
    pos = np.arange(width - k + 1)[None, :]
    rel = pos - starts[:, None]
    valid = (rel >= 0) & (rel + k <= lengths[:, None]) & (rel % stride == 0)
    return np.bincount(codes[valid], minlength=1 << k).astype(np.int64)


def canonical_decode(bits, nbits, n_blocks, len_counts, symbols):
    bits = np.asarray(bits[:nbits], dtype=np.int64)
    out = np.empty(n_blocks, dtype=np.int64)
    if n_blocks == 0:
        return out, 0
    max_len = len(len_counts) - 1
    # decode a codeword starting at every bit position at once
    sym_at = np.full(nbits, -1, dtype=np.int64)
    len_at = np.zeros(nbits, dtype=np.int64)
    code = np.zeros(nbits, dtype=np.int64)
    first = 0
    index = 0
    for ln in range(1, max_len + 1):
        avail = nbits - ln + 1
        if avail <= 0:
            break
        code[:avail] |= bits[ln - 1:]
        cnt = int(len_counts[ln])
        hit = np.zeros(nbits, dtype=bool)
        hit[:avail] = (len_at[:avail] == 0) & (code[:avail] - first < cnt)
        sym_at[hit] = symbols[index + code[hit] - first]
        len_at[hit] = ln
        index += cnt
        first = (first + cnt) << 1
        code <<= 1
    pos = 0
    for b in range(n_blocks):
        if pos >= nbits or len_at[pos] == 0:
            return out, -1
        out[b] = sym_at[pos]
        pos += int(len_at[pos])
    return out, pos
