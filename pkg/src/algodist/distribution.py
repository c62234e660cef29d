"""k-tuple frequency distributions and the machine-sampling experiments."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from . import kernels
from .errors import EmptyDistributionError, FormatError, KMismatchError
from .machines import (
    CA, TM, TS, MachineOutput, bits_to_array, class_size, tag_tables, tm_digits,
)

MAX_K = 24
DEFAULT_KS = (4, 5, 6, 7)
FORMAT_NAME = "algodist.distribution"
FORMAT_VERSION = 1


def _check_k(k):
    if not 1 <= k <= MAX_K:
        raise ValueError(f"k must be in 1..{MAX_K}, got {k}")


def tuple_str(code: int, k: int) -> str:
    return format(code, f"0{k}b")


def all_tuples(k: int) -> list[str]:
    """All 2**k tuples in lexicographic order (= numeric order)."""
    return [tuple_str(c, k) for c in range(1 << k)]


@dataclass(frozen=True, eq=False)
class TupleDistribution:
    """Exact integer counts of observed k-tuples.

    Tuples are stored as integer codes (first symbol most significant), so
    lexicographic order coincides with numeric order.  Only tuples with a
    positive count are kept.
    """

    k: int
    codes: np.ndarray
    counts: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        _check_k(self.k)
        codes = np.asarray(self.codes, dtype=np.int64)
        counts = np.asarray(self.counts, dtype=np.int64)
        if codes.shape != counts.shape:
            raise ValueError("codes and counts differ in shape")
        if np.any(counts <= 0):
            raise ValueError("counts must be positive")
        if codes.size and (np.any(np.diff(codes) <= 0) or codes[-1] >= 1 << self.k or codes[0] < 0):
            raise ValueError("codes must be unique, sorted and < 2**k")
        codes.setflags(write=False)
        counts.setflags(write=False)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_dense(cls, dense, k, metadata=None):
        dense = np.asarray(dense, dtype=np.int64)
        if dense.shape != (1 << k,):
            raise ValueError("dense count vector must have length 2**k")
        codes = np.flatnonzero(dense)
        return cls(k, codes, dense[codes], dict(metadata or {}))

    @classmethod
    def from_counts(cls, counts: Mapping[str, int], k=None, metadata=None):
        if k is None:
            if not counts:
                raise ValueError("k is required for an empty mapping")
            k = len(next(iter(counts)))
        dense = np.zeros(1 << k, dtype=np.int64)
        for s, c in counts.items():
            if len(s) != k:
                raise KMismatchError(f"tuple {s!r} does not have length {k}")
            dense[int(s, 2)] += c
        return cls.from_dense(dense, k, metadata)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def dense(self) -> np.ndarray:
        out = np.zeros(1 << self.k, dtype=np.int64)
        out[self.codes] = self.counts
        return out

    def probabilities(self) -> np.ndarray:
        """Dense probability vector over all 2**k tuples (zeros for absent)."""
        total = self.total
        if total == 0:
            raise EmptyDistributionError("distribution has no observations")
        return self.dense() / total

    def as_dict(self) -> dict[str, int]:
        return {tuple_str(int(c), self.k): int(n) for c, n in zip(self.codes, self.counts)}

    def count(self, s: str) -> int:
        if len(s) != self.k:
            raise KMismatchError(f"tuple {s!r} does not have length {self.k}")
        i = np.searchsorted(self.codes, int(s, 2))
        if i < self.codes.size and self.codes[i] == int(s, 2):
            return int(self.counts[i])
        return 0

    def __len__(self):
        return int(self.codes.size)

    def __contains__(self, s):
        return self.count(s) > 0

    def __eq__(self, other):
        if not isinstance(other, TupleDistribution):
            return NotImplemented
        return (
            self.k == other.k
            and np.array_equal(self.codes, other.codes)
            and np.array_equal(self.counts, other.counts)
        )

    def __add__(self, other):
        return merge([self, other])

    def __repr__(self):
        return f"TupleDistribution(k={self.k}, support={len(self)}, total={self.total})"


@dataclass(frozen=True)
class RankedDistribution:
    """(tuple, probability) pairs, most frequent first, ties lexicographic."""

    entries: tuple[tuple[str, Fraction], ...]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def tuples(self) -> list[str]:
        return [s for s, _ in self.entries]


@dataclass(frozen=True)
class SampleSpec:
    machine_class: str
    mode: str = "sample"
    sample_size: int = 2000
    seed: int = 0
    steps: int = 100
    n_states: int = 3

    def __post_init__(self):
        if self.machine_class not in (TM, CA, TS):
            raise ValueError(f"unknown machine class {self.machine_class!r}")
        if self.mode not in ("sample", "exhaustive"):
            raise ValueError(f"mode must be 'sample' or 'exhaustive', not {self.mode!r}")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.mode == "sample" and not 0 < self.sample_size <= self.class_size:
            raise ValueError(
                f"sample_size {self.sample_size} exceeds class size {self.class_size}"
            )

    @property
    def class_size(self) -> int:
        return class_size(self.machine_class, self.n_states)

    def indices(self) -> np.ndarray:
        """Selected machine indices, sorted ascending.

        Sampling draws uniformly without replacement with numpy's PCG64
        ``default_rng(seed).choice``.
        """
        if self.mode == "exhaustive":
            return np.arange(self.class_size, dtype=np.int64)
        rng = np.random.default_rng(self.seed)
        idx = rng.choice(self.class_size, size=self.sample_size, replace=False)
        return np.sort(idx.astype(np.int64))

    def describe(self) -> dict:
        d = asdict(self)
        d["kind"] = "machine"
        if self.machine_class != TM:
            d.pop("n_states")
        if self.mode == "exhaustive":
            d.pop("sample_size")
            d.pop("seed")
        return d


# --------------------------------------------------------------------------


def extract_tuples(s: str, k: int) -> list[str]:
    """All overlapping length-k windows of ``s``, left to right."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return [s[i:i + k] for i in range(len(s) - k + 1)]


def count_streams(streams: Iterable, k: int, stride: int = 1) -> np.ndarray:
    """Dense window counts over several bit streams; windows stay inside a stream.

    ``stride=1`` gives overlapping windows, ``stride=k`` non-overlapping blocks.
    """
    _check_k(k)
    dense = np.zeros(1 << k, dtype=np.int64)
    for item in streams:
        if isinstance(item, MachineOutput):
            item = item.bits
        arr = bits_to_array(item) if isinstance(item, str) else np.asarray(item, dtype=np.uint8)
        if arr.size < k:
            continue
        dense += kernels.count_windows(
            arr[None, :], np.zeros(1, np.int64), np.array([arr.size], np.int64), k, stride
        )
    return dense


def aggregate(outputs: Iterable, k: int, metadata=None, stride: int = 1) -> TupleDistribution:
    return TupleDistribution.from_dense(count_streams(outputs, k, stride), k, metadata)


def merge(dists: Iterable[TupleDistribution], metadata=None) -> TupleDistribution:
    dists = list(dists)
    if not dists:
        raise ValueError("nothing to merge")
    k = dists[0].k
    dense = np.zeros(1 << k, dtype=np.int64)
    for d in dists:
        if d.k != k:
            raise KMismatchError(f"cannot merge k={d.k} into k={k}")
        dense[d.codes] += d.counts
    return TupleDistribution.from_dense(dense, k, metadata)


def rank(d: TupleDistribution) -> RankedDistribution:
    total = d.total
    if total == 0:
        raise EmptyDistributionError("cannot rank an empty distribution")
    # stable sort on -count keeps the ascending code (lexicographic) order for ties
    order = np.argsort(-d.counts, kind="stable")
    return RankedDistribution(tuple(
        (tuple_str(int(d.codes[i]), d.k), Fraction(int(d.counts[i]), total)) for i in order
    ))


def uniform_distribution(k: int) -> TupleDistribution:
    return TupleDistribution.from_dense(
        np.ones(1 << k, dtype=np.int64), k, {"source": {"kind": "uniform"}}
    )


def estimate_m(d: TupleDistribution, s: str) -> Fraction | None:
    """Empirical output frequency of ``s``; ``None`` when ``s`` was never seen."""
    total = d.total
    if total == 0:
        raise EmptyDistributionError("empty distribution")
    c = d.count(s)
    return Fraction(c, total) if c else None


def estimate_K(d: TupleDistribution, s: str) -> float | None:
    """``-log2`` of the empirical frequency, in bits.

    Only differences between values are meaningful; the additive constant
    relating frequency and complexity is unknown.
    """
    m = estimate_m(d, s)
    if m is None:
        return None
    return math.log2(m.denominator) - math.log2(m.numerator)


# --------------------------------------------------------------------------
# machine experiments

_CHUNK = {TM: 16384, CA: 4096, TS: 8192}


def _machine_counts(spec: SampleSpec, ks) -> dict[int, np.ndarray]:
    ks = sorted(set(ks))
    for k in ks:
        _check_k(k)
    dense = {k: np.zeros(1 << k, dtype=np.int64) for k in ks}
    indices = spec.indices()
    chunk = _CHUNK[spec.machine_class]
    for lo in range(0, indices.size, chunk):
        idx = indices[lo:lo + chunk]
        runs = []
        if spec.machine_class == TM:
            digits = tm_digits(idx, spec.n_states)
            for blank in (0, 1):
                runs.append(kernels.tm_batch(digits, blank, spec.steps))
        elif spec.machine_class == CA:
            for bg in (0, 1):
                rows = kernels.ca_batch(idx, bg, spec.steps)
                m, w = rows.shape
                runs.append((rows, np.zeros(m, np.int64), np.full(m, w, np.int64)))
        else:
            bits, lens = tag_tables(idx)
            for init in ("00", "01", "10", "11"):
                runs.append(kernels.tag_batch(bits, lens, bits_to_array(init), spec.steps))
        for buf, starts, lengths in runs:
            for k in ks:
                dense[k] += kernels.count_windows(buf, starts, lengths, k, 1)
    return dense


def machine_experiments(spec: SampleSpec, ks=DEFAULT_KS) -> dict[int, TupleDistribution]:
    """Run the selected machines once and count tuples for every k in ``ks``.

    TMs and CAs run under both initial conditions (blank 0/1 tape, single
    1 on 0s / single 0 on 1s); tag systems from all four 2-bit strings.
    Everything is pooled into one distribution per k.
    """
    dense = _machine_counts(spec, ks)
    out = {}
    for k, counts in dense.items():
        meta = {"source": spec.describe(), "k": k}
        out[k] = TupleDistribution.from_dense(counts, k, meta)
    return out


def machine_experiment(spec: SampleSpec, k: int) -> TupleDistribution:
    return machine_experiments(spec, [k])[k]


# --------------------------------------------------------------------------
# serialization: <stem>.csv (tuple,count) + <stem>.json envelope


def distribution_csv(d: TupleDistribution) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tuple", "count"])
    for c, n in zip(d.codes, d.counts):
        w.writerow([tuple_str(int(c), d.k), int(n)])
    return buf.getvalue()


def _atomic_write(path: Path, data: str | bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(tmp, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
        fh.write(data)
    tmp.replace(path)


def save_distribution(d: TupleDistribution, stem) -> Path:
    """Write ``stem.csv`` and ``stem.json``; returns the envelope path."""
    stem = Path(stem)
    body = distribution_csv(d)
    csv_path = stem.with_name(stem.name + ".csv")
    env = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "k": d.k,
        "total": d.total,
        "support": len(d),
        "csv": csv_path.name,
        "csv_sha256": hashlib.sha256(body.encode()).hexdigest(),
        "metadata": d.metadata,
    }
    _atomic_write(csv_path, body)
    json_path = stem.with_name(stem.name + ".json")
    _atomic_write(json_path, json.dumps(env, indent=2, sort_keys=True) + "\n")
    return json_path


def load_distribution(path) -> TupleDistribution:
    """Load from the JSON envelope (or its sibling CSV)."""
    path = Path(path)
    if path.suffix == ".csv":
        path = path.with_suffix(".json")
    try:
        env = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read distribution envelope {path}: {exc}") from exc
    if env.get("format") != FORMAT_NAME or env.get("version") != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format {env.get('format')!r} v{env.get('version')}")
    body = (path.parent / env["csv"]).read_text(encoding="utf-8")
    if hashlib.sha256(body.encode()).hexdigest() != env["csv_sha256"]:
        raise FormatError(f"{path}: CSV digest mismatch")
    k = env["k"]
    rows = list(csv.reader(io.StringIO(body)))
    if rows[0] != ["tuple", "count"]:
        raise FormatError(f"{path}: bad CSV header")
    dense = np.zeros(1 << k, dtype=np.int64)
    for s, c in rows[1:]:
        if len(s) != k:
            raise FormatError(f"{path}: tuple {s!r} has wrong length")
        dense[int(s, 2)] = int(c)
    d = TupleDistribution.from_dense(dense, k, env.get("metadata", {}))
    if d.total != env["total"]:
        raise FormatError(f"{path}: total mismatch")
    return d
