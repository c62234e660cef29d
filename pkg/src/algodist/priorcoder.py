"""Static-prior block coder.

A canonical Huffman code over k-bit blocks is built once from a reference
tuple distribution, then used unchanged on any input.

Payload layout::

    magic  b"ALGP"        4 bytes
    version               1 byte
    k                     1 byte
    original bit length   8 bytes, big-endian
    codebook sha256      32 bytes
    code stream           zero-padded to a byte boundary
"""
from __future__ import annotations

import hashlib
import heapq
import json
import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .distribution import TupleDistribution, tuple_str
from .errors import CodebookMismatchError, CorruptPayloadError, FormatError
from .machines import array_to_bits, bits_to_array

MAGIC = b"ALGP"
VERSION = 1
HEADER = struct.Struct(">4sBBQ32s")
MAX_K = 16
MAX_CODE_LEN = 62


def huffman_lengths(weights) -> np.ndarray:
    """Huffman codeword lengths for positive integer weights.

    Ties are broken by node id (leaves by symbol, merged nodes by creation
    order), which makes the result deterministic.
    """
    weights = [int(w) for w in weights]
    n = len(weights)
    if n == 1:
        return np.ones(1, dtype=np.int64)
    heap = [(w, i) for i, w in enumerate(weights)]
    heapq.heapify(heap)
    parent = [-1] * (2 * n - 1)
    nxt = n
    while len(heap) > 1:
        w1, a = heapq.heappop(heap)
        w2, b = heapq.heappop(heap)
        parent[a] = parent[b] = nxt
        heapq.heappush(heap, (w1 + w2, nxt))
        nxt += 1
    depth = [0] * (2 * n - 1)
    for node in range(2 * n - 3, -1, -1):
        depth[node] = depth[parent[node]] + 1
    return np.array(depth[:n], dtype=np.int64)


def canonical_codes(lengths) -> np.ndarray:
    """Canonical code values: symbols sorted by (length, symbol) count upward."""
    lengths = np.asarray(lengths, dtype=np.int64)
    order = np.lexsort((np.arange(lengths.size), lengths))
    codes = np.zeros(lengths.size, dtype=np.int64)
    code, prev = 0, int(lengths[order[0]])
    for sym in order:
        ln = int(lengths[sym])
        code <<= ln - prev
        codes[sym] = code
        code += 1
        prev = ln
    return codes


@dataclass(frozen=True, eq=False)
class CodeBook:
    """Prefix code over all 2**k tuples, fully determined by its lengths."""

    k: int
    lengths: np.ndarray

    def __post_init__(self):
        lengths = np.asarray(self.lengths, dtype=np.int64)
        if lengths.shape != (1 << self.k,):
            raise ValueError("need one codeword length per tuple")
        if lengths.min() < 1:
            raise ValueError("codeword lengths must be >= 1")
        if lengths.max() > MAX_CODE_LEN:
            raise ValueError(f"codeword longer than {MAX_CODE_LEN} bits is not supported")
        if kraft_numerator(lengths) > 1 << int(lengths.max()):
            raise ValueError("lengths violate Kraft's inequality")
        lengths.setflags(write=False)
        object.__setattr__(self, "lengths", lengths)

    def __eq__(self, other):
        return isinstance(other, CodeBook) and self.k == other.k and np.array_equal(self.lengths, other.lengths)

    @cached_property
    def codes(self) -> np.ndarray:
        return canonical_codes(self.lengths)

    @cached_property
    def len_counts(self) -> np.ndarray:
        return np.bincount(self.lengths, minlength=int(self.lengths.max()) + 1).astype(np.int64)

    @cached_property
    def symbols(self) -> np.ndarray:
        return np.lexsort((np.arange(self.lengths.size), self.lengths)).astype(np.int64)

    @cached_property
    def digest(self) -> bytes:
        return hashlib.sha256(self.serialize().encode()).digest()

    def codeword(self, tuple_: str) -> str:
        c = int(tuple_, 2)
        return format(int(self.codes[c]), f"0{int(self.lengths[c])}b")

    def kraft_sum(self) -> float:
        return kraft_numerator(self.lengths) / float(1 << int(self.lengths.max()))

    def serialize(self) -> str:
        doc = {
            "format": "algodist.codebook",
            "version": VERSION,
            "k": self.k,
            "lengths": [[tuple_str(i, self.k), int(n)] for i, n in enumerate(self.lengths)],
        }
        return json.dumps(doc, separators=(",", ":")) + "\n"

    @classmethod
    def deserialize(cls, text: str) -> "CodeBook":
        try:
            doc = json.loads(text)
            k = doc["k"]
            if doc.get("format") != "algodist.codebook":
                raise KeyError("format")
            lengths = np.zeros(1 << k, dtype=np.int64)
            for t, n in doc["lengths"]:
                lengths[int(t, 2)] = n
        except (ValueError, KeyError, TypeError) as exc:
            raise FormatError(f"bad codebook document: {exc}") from exc
        return cls(k, lengths)


def kraft_numerator(lengths) -> int:
    """``sum 2**(L - len)`` with ``L`` the longest length; equals ``2**L`` iff complete."""
    lengths = np.asarray(lengths, dtype=np.int64)
    top = int(lengths.max())
    counts = np.bincount(lengths)
    return sum(int(c) << (top - ln) for ln, c in enumerate(counts) if c)


def build_codebook(ref: TupleDistribution) -> CodeBook:
    """Canonical Huffman code over add-one smoothed reference counts."""
    if ref.k > MAX_K:
        raise ValueError(f"codebooks are limited to k <= {MAX_K}")
    return CodeBook(ref.k, huffman_lengths(ref.dense() + 1))


def _as_bits(bits) -> np.ndarray:
    if isinstance(bits, str):
        return bits_to_array(bits)
    return np.asarray(bits, dtype=np.uint8)


def _blocks(arr: np.ndarray, k: int) -> np.ndarray:
    n_blocks = -(-arr.size // k)
    padded = np.zeros(n_blocks * k, dtype=np.int64)
    padded[:arr.size] = arr
    weights = 1 << np.arange(k - 1, -1, -1, dtype=np.int64)
    return padded.reshape(n_blocks, k) @ weights


def _expand(values: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Concatenate the ``lengths[i]``-bit big-endian expansions of ``values[i]``."""
    total = int(lengths.sum())
    if total == 0:
        return np.zeros(0, dtype=np.uint8)
    owner = np.repeat(np.arange(values.size), lengths)
    ends = np.cumsum(lengths)
    offset = np.arange(total) - np.repeat(ends - lengths, lengths)
    shift = lengths[owner] - 1 - offset
    return ((values[owner] >> shift) & 1).astype(np.uint8)


def encode(bits, book: CodeBook) -> bytes:
    """Code consecutive k-bit blocks; the last partial block is zero-padded."""
    arr = _as_bits(bits)
    header = HEADER.pack(MAGIC, VERSION, book.k, arr.size, book.digest)
    if arr.size == 0:
        return header
    syms = _blocks(arr, book.k)
    stream = _expand(book.codes[syms], book.lengths[syms])
    return header + np.packbits(stream).tobytes()


def _parse_header(payload: bytes, book: CodeBook):
    if len(payload) < HEADER.size:
        raise CorruptPayloadError("payload shorter than its header")
    magic, version, k, nbits, digest = HEADER.unpack_from(payload)
    if magic != MAGIC or version != VERSION:
        raise CorruptPayloadError("not an algodist payload (bad magic or version)")
    if digest != book.digest or k != book.k:
        raise CodebookMismatchError("payload was encoded with a different codebook")
    return nbits


def decode_array(payload: bytes, book: CodeBook) -> np.ndarray:
    nbits = _parse_header(payload, book)
    body = np.frombuffer(payload, dtype=np.uint8, offset=HEADER.size)
    n_blocks = -(-nbits // book.k)
    stream = np.unpackbits(body)
    syms, used = kernels.canonical_decode(stream, stream.size, n_blocks, book.len_counts, book.symbols)
    if used < 0:
        raise CorruptPayloadError("code stream is truncated or out of sync")
    if -(-used // 8) != body.size or stream[used:].any():
        raise CorruptPayloadError("trailing data after the code stream")
    out = _expand(np.asarray(syms, dtype=np.int64), np.full(n_blocks, book.k, dtype=np.int64))
    if out[nbits:].any():
        raise CorruptPayloadError("nonzero block padding")
    return out[:nbits]


def decode(payload: bytes, book: CodeBook) -> str:
    return array_to_bits(decode_array(payload, book))


def block_entropy(bits, k: int) -> float:
    """Empirical Shannon entropy (bits per block) of the k-blocks of ``bits``."""
    arr = _as_bits(bits)
    if arr.size == 0:
        return 0.0
    counts = np.bincount(_blocks(arr, k))
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log2(p)).sum())


def compression_report(bits, book: CodeBook) -> dict:
    arr = _as_bits(bits)
    n_blocks = -(-arr.size // book.k)
    syms = _blocks(arr, book.k) if arr.size else np.zeros(0, dtype=np.int64)
    code_bits = int(book.lengths[syms].sum())
    return {
        "k": book.k,
        "input_bits": int(arr.size),
        "blocks": n_blocks,
        "output_bits": code_bits,
        "payload_bytes": HEADER.size + -(-code_bits // 8),
        "bits_per_block": code_bits / n_blocks if n_blocks else 0.0,
        "block_entropy": block_entropy(arr, book.k),
        "codebook_sha256": book.digest.hex(),
    }
