"""Rule-table codecs and simulators for the three machine classes.

Bit strings are plain ``str`` objects over ``"01"``.  Single-machine runs go
through the same batch kernels used by the experiments, so there is one
simulation path per class.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import IndexRangeError

TM = "TM"
CA = "CA"
TS = "TS"

CA_CLASS_SIZE = 1 << 16
TAG_BLOCKS = ("00", "01", "10", "11")
# length-then-lexicographic order: e, 0, 1, 00, 01, 10, 11, 000, ..., 111
TAG_WORDS = ("",) + tuple(
    format(v, f"0{n}b") for n in (1, 2, 3) for v in range(1 << n)
)
TAG_WORD_INDEX = {w: i for i, w in enumerate(TAG_WORDS)}
TAG_CLASS_SIZE = len(TAG_WORDS) ** len(TAG_BLOCKS)


def complement(bits: str) -> str:
    return bits.translate(str.maketrans("01", "10"))


def bits_to_array(bits: str) -> np.ndarray:
    return np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")


def array_to_bits(arr) -> str:
    return (np.asarray(arr, dtype=np.uint8) + ord("0")).tobytes().decode("ascii")


def tm_class_size(n_states: int) -> int:
    """Number of n-state 2-symbol machines, ``(4n) ** (2n)``."""
    return (4 * n_states) ** (2 * n_states)


def class_size(machine_class: str, n_states: int = 3) -> int:
    if machine_class == TM:
        return tm_class_size(n_states)
    if machine_class == CA:
        return CA_CLASS_SIZE
    if machine_class == TS:
        return TAG_CLASS_SIZE
    raise ValueError(f"unknown machine class {machine_class!r}")


@dataclass(frozen=True)
class MachineOutput:
    bits: str
    machine_class: str
    machine_index: int | None
    initial_condition: str
    steps: int

    def __len__(self):
        return len(self.bits)


# --------------------------------------------------------------------------
# Turing machines


@dataclass(frozen=True)
class TMRuleTable:
    """Total transition table of a 2-symbol machine without a halt state.

    ``rules[2 * (state - 1) + read]`` is ``(write, direction, next_state)``
    with direction ``"L"`` or ``"R"`` and states numbered from 1.
    """

    n_states: int
    rules: tuple[tuple[int, str, int], ...]

    def __post_init__(self):
        if len(self.rules) != 2 * self.n_states:
            raise ValueError("transition table must have 2 * n_states entries")
        for write, direction, nxt in self.rules:
            if write not in (0, 1) or direction not in ("L", "R"):
                raise ValueError(f"bad transition {(write, direction, nxt)}")
            if not 1 <= nxt <= self.n_states:
                raise ValueError(f"next state {nxt} outside 1..{self.n_states}")

    def entry(self, state: int, read: int) -> tuple[int, str, int]:
        return self.rules[2 * (state - 1) + read]

    def digits(self) -> list[int]:
        return [
            w + 2 * (d == "R") + 4 * (n - 1) for w, d, n in self.rules
        ]

    def __str__(self):
        lines = []
        for j, (w, d, n) in enumerate(self.rules):
            lines.append(f"{{{j % 2}, {j // 2 + 1}, {w}, {n}, {d}}}")
        return "\n".join(lines)


def decode_tm(index: int, n_states: int) -> TMRuleTable:
    size = tm_class_size(n_states)
    if not 0 <= index < size:
        raise IndexRangeError(
            f"TM index {index} outside [0, {size}) for {n_states}-state machines"
        )
    base = 4 * n_states
    rules = []
    for _ in range(2 * n_states):
        index, a = divmod(index, base)
        rules.append((a % 2, "LR"[(a // 2) % 2], a // 4 + 1))
    return TMRuleTable(n_states, tuple(rules))


def encode_tm(table: TMRuleTable) -> int:
    base = 4 * table.n_states
    index = 0
    for a in reversed(table.digits()):
        index = index * base + a
    return index


def tm_digits(indices, n_states: int) -> np.ndarray:
    """Vectorised digit expansion; row i holds the table of ``indices[i]``."""
    if tm_class_size(n_states) >= 1 << 63:
        raise OverflowError("batch decoding supports class sizes below 2**63")
    idx = np.asarray(indices, dtype=np.int64).copy()
    base = 4 * n_states
    out = np.empty((idx.shape[0], 2 * n_states), dtype=np.int64)
    for j in range(2 * n_states):
        idx, out[:, j] = np.divmod(idx, base)
    return out


def complement_tm(table: TMRuleTable) -> TMRuleTable:
    rules = []
    for j in range(len(table.rules)):
        w, d, n = table.rules[j ^ 1]
        rules.append((1 - w, d, n))
    return TMRuleTable(table.n_states, tuple(rules))


def mirror_tm(table: TMRuleTable) -> TMRuleTable:
    flip = {"L": "R", "R": "L"}
    return TMRuleTable(
        table.n_states, tuple((w, flip[d], n) for w, d, n in table.rules)
    )


def run_tm(rules: TMRuleTable, blank_symbol: int, steps: int) -> MachineOutput:
    """Run for exactly ``steps`` steps from a uniform tape, head at cell 0.

    The output covers every cell the head occupied, final position included.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    digits = np.array([rules.digits()], dtype=np.int64)
    tape, starts, lengths = kernels.tm_batch(digits, int(blank_symbol), steps)
    s, n = int(starts[0]), int(lengths[0])
    return MachineOutput(
        array_to_bits(tape[0, s:s + n]),
        TM,
        encode_tm(rules),
        f"blank={blank_symbol}",
        steps,
    )


# --------------------------------------------------------------------------
# cellular automata, two cells to the left and one to the right


@dataclass(frozen=True)
class CARule:
    rule_code: int
    left_neighbors: int = 2
    right_neighbors: int = 1

    def __post_init__(self):
        if not 0 <= self.rule_code < CA_CLASS_SIZE:
            raise IndexRangeError(
                f"CA rule {self.rule_code} outside [0, {CA_CLASS_SIZE})"
            )
        if (self.left_neighbors, self.right_neighbors) != (2, 1):
            raise ValueError("only the 2-left/1-right neighbourhood is supported")

    def __call__(self, neighborhood: int) -> int:
        return (self.rule_code >> neighborhood) & 1

    def __str__(self):
        return "\n".join(
            f"{format(n, '04b')} -> {self(n)}" for n in range(15, -1, -1)
        )


def conjugate_ca(rule: CARule) -> CARule:
    code = 0
    for n in range(16):
        code |= (1 - rule(15 - n)) << n
    return CARule(code)


def run_ca(rule: CARule, background: int, steps: int) -> MachineOutput:
    """Evolve a single ``1 - background`` cell and return the cone ``[-t, 2t]``."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    rows = kernels.ca_batch(
        np.array([rule.rule_code], dtype=np.int64), int(background), steps
    )
    return MachineOutput(
        array_to_bits(rows[0]), CA, rule.rule_code, f"background={background}", steps
    )


# --------------------------------------------------------------------------
# 2-tag systems


@dataclass(frozen=True)
class TagRuleSet:
    """Productions for the blocks 00, 01, 10, 11 (in that order)."""

    productions: tuple[str, str, str, str]
    deletion_number: int = 2

    def __post_init__(self):
        if self.deletion_number != 2:
            raise ValueError("only deletion number 2 is supported")
        if len(self.productions) != 4:
            raise ValueError("need one production per 2-bit block")
        for p in self.productions:
            if p not in TAG_WORD_INDEX:
                raise ValueError(f"production {p!r} is not a binary word of length <= 3")

    def __getitem__(self, block: str) -> str:
        return self.productions[TAG_BLOCKS.index(block)]

    def __str__(self):
        return "\n".join(
            f"{b} -> {p or 'ε'}" for b, p in zip(TAG_BLOCKS, self.productions)
        )


def decode_tag(index: int) -> TagRuleSet:
    if not 0 <= index < TAG_CLASS_SIZE:
        raise IndexRangeError(
            f"tag index {index} outside [0, {TAG_CLASS_SIZE})"
        )
    prods = []
    for _ in TAG_BLOCKS:
        index, d = divmod(index, len(TAG_WORDS))
        prods.append(TAG_WORDS[d])
    return TagRuleSet(tuple(prods))


def encode_tag(rules: TagRuleSet) -> int:
    index = 0
    for p in reversed(rules.productions):
        index = index * len(TAG_WORDS) + TAG_WORD_INDEX[p]
    return index


def complement_tag(rules: TagRuleSet) -> TagRuleSet:
    return TagRuleSet(tuple(complement(p) for p in reversed(rules.productions)))


def tag_tables(indices) -> tuple[np.ndarray, np.ndarray]:
    """Production bits ``(m, 4, 3)`` and lengths ``(m, 4)`` for rule indices."""
    word_bits = np.zeros((len(TAG_WORDS), 3), dtype=np.uint8)
    word_len = np.zeros(len(TAG_WORDS), dtype=np.int64)
    for i, w in enumerate(TAG_WORDS):
        word_len[i] = len(w)
        word_bits[i, :len(w)] = [int(c) for c in w]
    idx = np.asarray(indices, dtype=np.int64).copy()
    digits = np.empty((idx.shape[0], 4), dtype=np.int64)
    for j in range(4):
        idx, digits[:, j] = np.divmod(idx, len(TAG_WORDS))
    return word_bits[digits], word_len[digits]


def run_tag(rules: TagRuleSet, init: str, max_steps: int) -> MachineOutput:
    """Iterate delete-two/append until ``max_steps`` or fewer than 2 symbols remain.

    The output is the final string, possibly empty.
    """
    if len(init) < 2:
        raise ValueError("initial string needs at least 2 symbols")
    bits, lens = tag_tables([encode_tag(rules)])
    buf, starts, lengths = kernels.tag_batch(bits, lens, bits_to_array(init), max_steps)
    s, n = int(starts[0]), int(lengths[0])
    return MachineOutput(
        array_to_bits(buf[0, s:s + n]), TS, encode_tag(rules), f"init={init}", max_steps
    )


__all__ = [
    "TM", "CA", "TS", "CA_CLASS_SIZE", "TAG_CLASS_SIZE", "TAG_BLOCKS", "TAG_WORDS",
    "MachineOutput", "TMRuleTable", "CARule", "TagRuleSet",
    "tm_class_size", "class_size", "decode_tm", "encode_tm", "tm_digits",
    "complement_tm", "mirror_tm", "run_tm", "conjugate_ca", "run_ca",
    "decode_tag", "encode_tag", "complement_tag", "tag_tables", "run_tag",
    "complement", "bits_to_array", "array_to_bits",
]
