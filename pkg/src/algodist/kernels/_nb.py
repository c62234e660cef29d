"""numba implementations of the hot loops.

Every function here has a twin of the same name and signature in ``_np``;
the two are checked against each other in the test suite.
"""
import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True)
def tm_batch(digits, blank, steps):
    m, _ = digits.shape
    width = 2 * steps + 1
    tape = np.empty((m, width), dtype=np.uint8)
    starts = np.empty(m, dtype=np.int64)
    lengths = np.empty(m, dtype=np.int64)
    for i in prange(m):
        for c in range(width):
            tape[i, c] = blank
        head = steps
        state = 0
        lo = head
        hi = head
        for _ in range(steps):
            a = digits[i, 2 * state + tape[i, head]]
            tape[i, head] = a & 1
            if (a >> 1) & 1:
                head += 1
                if head > hi:
                    hi = head
            else:
                head -= 1
                if head < lo:
                    lo = head
            state = a >> 2
        starts[i] = lo
        lengths[i] = hi - lo + 1
    return tape, starts, lengths


@njit(cache=True, parallel=True)
def ca_batch(rules, background, steps):
    m = rules.shape[0]
    width = 1 + 3 * steps
    rows = np.empty((m, width), dtype=np.uint8)
    for i in prange(m):
        rule = rules[i]
        cur = np.empty(width, dtype=np.uint8)
        nxt = np.empty(width, dtype=np.uint8)
        b = background
        for c in range(width):
            cur[c] = b
        cur[steps] = 1 - b
        for _ in range(steps):
            for c in range(width):
                l2 = cur[c - 2] if c >= 2 else b
                l1 = cur[c - 1] if c >= 1 else b
                r1 = cur[c + 1] if c + 1 < width else b
                code = (l2 << 3) | (l1 << 2) | (cur[c] << 1) | r1
                nxt[c] = (rule >> code) & 1
            b = (rule >> (15 * b)) & 1
            cur, nxt = nxt, cur
        for c in range(width):
            rows[i, c] = cur[c]
    return rows


@njit(cache=True, parallel=True)
def tag_batch(prod_bits, prod_len, init, steps):
    m = prod_bits.shape[0]
    n0 = init.shape[0]
    width = n0 + 3 * steps
    buf = np.zeros((m, width), dtype=np.uint8)
    starts = np.empty(m, dtype=np.int64)
    lengths = np.empty(m, dtype=np.int64)
    for i in prange(m):
        for c in range(n0):
            buf[i, c] = init[c]
        head = 0
        tail = n0
        for _ in range(steps):
            if tail - head < 2:
                break
            block = 2 * buf[i, head] + buf[i, head + 1]
            head += 2
            n = prod_len[i, block]
            for j in range(n):
                buf[i, tail + j] = prod_bits[i, block, j]
            tail += n
        starts[i] = head
        lengths[i] = tail - head
    return buf, starts, lengths


@njit(cache=True)
def count_windows(buf, starts, lengths, k, stride):
    counts = np.zeros(1 << k, dtype=np.int64)
    mask = (1 << k) - 1
    for i in range(buf.shape[0]):
        s = starts[i]
        n = lengths[i]
        if n < k:
            continue
        if stride == 1:
            code = 0
            for j in range(k - 1):
                code = (code << 1) | buf[i, s + j]
            for j in range(k - 1, n):
                code = ((code << 1) | buf[i, s + j]) & mask
                counts[code] += 1
        else:
            for p in range(0, n - k + 1, stride):
                code = 0
                for j in range(k):
                    code = (code << 1) | buf[i, s + p + j]
                counts[code] += 1
    return counts


@njit(cache=True)
def canonical_decode(bits, nbits, n_blocks, len_counts, symbols):
    """Return (decoded symbols, bits consumed); consumed = -1 on corrupt input."""
    out = np.empty(n_blocks, dtype=np.int64)
    max_len = len_counts.shape[0] - 1
    pos = 0
    for b in range(n_blocks):
        code = 0
        first = 0
        index = 0
        found = False
        for ln in range(1, max_len + 1):
            if pos >= nbits:
                return out, -1
            code |= bits[pos]
            pos += 1
            cnt = len_counts[ln]
            if code - first < cnt:
                out[b] = symbols[index + code - first]
                found = True
                break
            index += cnt
            first = (first + cnt) << 1
            code <<= 1
        if not found:
            return out, -1
    return out, pos
