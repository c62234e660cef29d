"""Turn physical data (raw files, DNA, raster images) into tuple distributions."""
from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .distribution import TupleDistribution, _atomic_write, count_streams, merge
from .errors import FormatError, OversizeError

MAX_FILE_BYTES = 1 << 20
MAX_IMAGE_LINEAR = 1500

DNA_ENCODINGS = (
    {"G": 1, "T": 1, "C": 0, "A": 0},
    {"G": 0, "T": 1, "C": 0, "A": 1},
    {"G": 1, "T": 0, "C": 1, "A": 0},
    {"G": 0, "T": 0, "C": 1, "A": 1},
)
_GAP = 255


def _lut(encoding):
    lut = np.full(256, _GAP, dtype=np.uint8)
    for base, bit in encoding.items():
        lut[ord(base)] = bit
        lut[ord(base.lower())] = bit
    return lut


_DNA_LUTS = [_lut(e) for e in DNA_ENCODINGS]


@dataclass(frozen=True)
class SourceDescriptor:
    kind: str
    path: str
    parameters: dict = field(default_factory=dict)
    digest: str = ""

    def to_dict(self):
        return {"kind": self.kind, "path": self.path, "parameters": self.parameters, "digest": self.digest}


@dataclass(frozen=True)
class BitMatrix:
    cells: np.ndarray
    threshold: int | None = None
    degenerate: bool = False

    @property
    def rows(self):
        return self.cells.shape[0]

    @property
    def cols(self):
        return self.cells.shape[1]


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _stride(k, block):
    return k if block else 1


# --------------------------------------------------------------------------
# raw files


def read_capped(path, max_bytes=MAX_FILE_BYTES) -> bytes:
    """Read a file whole, or raise :class:`OversizeError` without reading it."""
    size = os.stat(path).st_size
    if size > max_bytes:
        raise OversizeError(f"{path}: {size} bytes exceeds the {max_bytes}-byte limit")
    data = Path(path).read_bytes()
    if len(data) > max_bytes:  # file grew between stat and read
        raise OversizeError(f"{path}: exceeds the {max_bytes}-byte limit")
    return data


def bytes_to_bits(data: bytes) -> np.ndarray:
    """Unpack bytes most-significant bit first."""
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8))


def ingest_bytes(data: bytes, k: int, block: bool = False, metadata=None) -> TupleDistribution:
    return TupleDistribution.from_dense(
        count_streams([bytes_to_bits(data)], k, _stride(k, block)), k, metadata
    )


def ingest_file(path, k: int, max_bytes: int = MAX_FILE_BYTES, block: bool = False) -> TupleDistribution:
    data = read_capped(path, max_bytes)
    src = SourceDescriptor("file", str(path), {"max_bytes": max_bytes, "block": block}, sha256_hex(data))
    return ingest_bytes(data, k, block, {"source": src.to_dict(), "k": k})


def list_files(directory) -> list[Path]:
    """Regular files below ``directory`` in a platform-independent order."""
    root = Path(directory)
    files = [p for p in root.rglob("*") if p.is_file() and not p.is_symlink()]
    return sorted(files, key=lambda p: p.relative_to(root).as_posix())


def sample_files(directory, sample_size: int | None, seed: int) -> list[Path]:
    files = list_files(directory)
    if sample_size is None or sample_size >= len(files):
        return files
    rng = np.random.default_rng(seed)
    pick = np.sort(rng.choice(len(files), size=sample_size, replace=False))
    return [files[i] for i in pick]


def ingest_files(paths, k: int, max_bytes: int = MAX_FILE_BYTES, block: bool = False, metadata=None):
    """Pool several files; windows never straddle two files.

    Returns ``(distribution, manifest_entries)``.  Oversize or unreadable
    files are skipped and recorded in the manifest.
    """
    dense = np.zeros(1 << k, dtype=np.int64)
    manifest = []
    for path in paths:
        entry = {"path": str(path), "digest": None, "size": None}
        try:
            entry["size"] = os.stat(path).st_size
            data = read_capped(path, max_bytes)
        except OversizeError:
            entry["status"] = "skipped:size"
        except OSError as exc:
            entry["status"] = f"error:{exc.__class__.__name__}"
        else:
            entry["digest"] = sha256_hex(data)
            entry["status"] = "ok"
            dense += count_streams([bytes_to_bits(data)], k, _stride(k, block))
        manifest.append(entry)
    return TupleDistribution.from_dense(dense, k, metadata), manifest


def write_manifest(entries, path):
    lines = "".join(json.dumps(e, sort_keys=True) + "\n" for e in entries)
    _atomic_write(Path(path), lines)


# --------------------------------------------------------------------------
# DNA


def dna_segments(sequence: str, encoding: int) -> list[np.ndarray]:
    """Bit arrays for the ACGT runs of ``sequence`` under one encoding."""
    raw = np.frombuffer(sequence.encode("ascii", "replace"), dtype=np.uint8)
    bits = _DNA_LUTS[encoding][raw]
    gaps = np.flatnonzero(bits == _GAP)
    bounds = np.concatenate(([-1], gaps, [bits.size]))
    return [bits[a + 1:b] for a, b in zip(bounds[:-1], bounds[1:]) if b - a > 1]


def dna_encode(sequence: str) -> tuple[list[str], list[str], list[str], list[str]]:
    """Apply the four one-bit-per-base encodings.

    Each encoding yields a list of bit strings, one per maximal run of
    A/C/G/T (case-insensitive); any other character splits the sequence.
    """
    return tuple(
        [(seg + ord("0")).tobytes().decode() for seg in dna_segments(sequence, e)]
        for e in range(4)
    )


def parse_fasta(text: str) -> list[tuple[str, str]]:
    records = []
    header, chunks = None, []
    for line in text.splitlines():
        line = line.strip()
        if line.startswith(">"):
            if header is not None or chunks:
                records.append((header or "", "".join(chunks)))
            header, chunks = line[1:].strip(), []
        elif line and not line.startswith(";"):
            chunks.append(line)
    if header is not None or chunks:
        records.append((header or "", "".join(chunks)))
    return records


def ingest_sequences(sequences, k: int, block: bool = False, metadata=None) -> TupleDistribution:
    streams = (seg for seq in sequences for e in range(4) for seg in dna_segments(seq, e))
    return TupleDistribution.from_dense(count_streams(streams, k, _stride(k, block)), k, metadata)


def ingest_fasta(path, k: int, block: bool = False) -> TupleDistribution:
    data = Path(path).read_bytes()
    records = parse_fasta(data.decode("ascii", "replace"))
    if not records:
        raise FormatError(f"{path}: no FASTA records found")
    src = SourceDescriptor("dna", str(path), {"records": len(records), "block": block}, sha256_hex(data))
    return ingest_sequences([s for _, s in records], k, block, {"source": src.to_dict(), "k": k})


# --------------------------------------------------------------------------
# images

_PNM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _pnm_tokens(data: bytes, count: int, pos: int):
    out = []
    for _ in range(count):
        m = _PNM_TOKEN.match(data, pos)
        if m is None:
            raise FormatError("truncated PNM header")
        out.append(m.group(1))
        pos = m.end()
    return out, pos


def read_pnm(data: bytes) -> tuple[np.ndarray, int]:
    """Decode PBM/PGM/PPM (plain and raw) into ``(array, maxval)``.

    Bitmaps come back as gray levels with maxval 1 and black = 0.
    """
    magic = data[:2]
    if magic not in (b"P1", b"P2", b"P3", b"P4", b"P5", b"P6"):
        raise FormatError("not a portable anymap")
    kind = int(magic[1:2])
    bitmap = kind in (1, 4)
    ntok = 2 if bitmap else 3
    toks, pos = _pnm_tokens(data, ntok, 2)
    try:
        width, height = int(toks[0]), int(toks[1])
        maxval = 1 if bitmap else int(toks[2])
    except ValueError as exc:
        raise FormatError(f"bad PNM header: {exc}") from exc
    if width <= 0 or height <= 0 or not 0 < maxval < 65536:
        raise FormatError("bad PNM dimensions or maxval")
    channels = 3 if kind in (3, 6) else 1
    n = width * height * channels
    if kind in (1, 2, 3):
        body = data[pos:]
        if kind == 1:
            digits = re.sub(rb"#[^\n]*|\s", b"", body)
            vals = np.frombuffer(digits[:n], dtype=np.uint8) - ord("0")
        else:
            vals = np.array(re.sub(rb"#[^\n]*", b"", body).split()[:n], dtype=np.int64)
        if vals.size < n:
            raise FormatError("truncated PNM raster")
    else:
        pos += 1  # single whitespace after the header
        if kind == 4:
            rowbytes = (width + 7) // 8
            if len(data) < pos + rowbytes * height:
                raise FormatError("truncated PBM raster")
            raw = np.frombuffer(data, dtype=np.uint8, count=rowbytes * height, offset=pos)
            vals = np.unpackbits(raw.reshape(height, rowbytes), axis=1)[:, :width]
        else:
            dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
            if len(data) < pos + n * dtype.itemsize:
                raise FormatError("truncated PNM raster")
            vals = np.frombuffer(data, dtype=dtype, count=n, offset=pos)
    vals = np.asarray(vals, dtype=np.int64)
    if bitmap:
        vals = 1 - vals
    if np.any(vals > maxval) or np.any(vals < 0):
        raise FormatError("PNM sample exceeds maxval")
    shape = (height, width, 3) if channels == 3 else (height, width)
    return vals.reshape(shape), maxval


def luminance(rgb: np.ndarray) -> np.ndarray:
    """0.299 R + 0.587 G + 0.114 B, rounded half up, in exact integer arithmetic."""
    rgb = np.asarray(rgb, dtype=np.int64)
    return (299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2] + 500) // 1000


def otsu_threshold(gray: np.ndarray, maxval: int = 255) -> tuple[int, bool]:
    """Global threshold maximising between-class variance.

    Pixels ``<= t`` form the dark class.  The search is exhaustive over
    ``t = 0 .. maxval-1`` with exact integer scores, smallest ``t`` winning
    ties.  Returns ``(t, degenerate)``; a single-valued image gives
    ``(maxval, True)``.
    """
    hist = np.bincount(np.asarray(gray, dtype=np.int64).ravel(), minlength=maxval + 1)
    if np.count_nonzero(hist) <= 1:
        return maxval, True
    levels = np.arange(maxval + 1, dtype=object)
    n0 = np.cumsum(hist.astype(object))
    s0 = np.cumsum(hist.astype(object) * levels)
    total_n, total_s = n0[-1], s0[-1]
    best_t, best_num, best_den = 0, -1, 1
    for t in range(maxval):
        a, sa = n0[t], s0[t]
        b, sb = total_n - a, total_s - sa
        if a == 0 or b == 0:
            continue
        # w0 w1 (mu0 - mu1)^2 up to the constant factor 1/N^2
        num = (b * sa - a * sb) ** 2
        den = a * b
        if num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den
    return int(best_t), False


def binarize(image: np.ndarray, maxval: int = 255) -> BitMatrix:
    img = np.asarray(image)
    if img.ndim == 3:
        img = luminance(img[..., :3])
    elif img.ndim != 2:
        raise FormatError("image must be 2-D grayscale or H x W x 3 colour")
    img = img.astype(np.int64)
    if img.size and (img.min() < 0 or img.max() > maxval):
        raise FormatError(f"pixel values outside 0..{maxval}")
    t, degenerate = otsu_threshold(img, maxval)
    return BitMatrix((img > t).astype(np.uint8), t, degenerate)


def load_image(path) -> tuple[np.ndarray, int]:
    data = Path(path).read_bytes()
    if data[:1] == b"P" and data[1:2] in b"123456":
        return read_pnm(data)
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover
        raise FormatError(f"{path}: not a PNM file and Pillow is unavailable") from exc
    try:
        with Image.open(path) as im:
            rgb = np.asarray(im.convert("RGB"), dtype=np.int64)
    except Exception as exc:
        raise FormatError(f"{path}: cannot decode image: {exc}") from exc
    return rgb, 255


def count_rows(matrix: BitMatrix, k: int, block: bool = False) -> np.ndarray:
    cells = matrix.cells
    if cells.shape[1] < k:
        return np.zeros(1 << k, dtype=np.int64)
    n = cells.shape[0]
    return kernels.count_windows(
        np.ascontiguousarray(cells, dtype=np.uint8),
        np.zeros(n, np.int64),
        np.full(n, cells.shape[1], np.int64),
        k,
        _stride(k, block),
    )


def ingest_image(path, k: int, max_linear: int = MAX_IMAGE_LINEAR, block: bool = False) -> TupleDistribution:
    """Binarise and count windows row by row (no wrap between rows)."""
    img, maxval = load_image(path)
    h, w = img.shape[:2]
    if h + w > max_linear:
        raise OversizeError(f"{path}: width+height {w + h} exceeds {max_linear}")
    bm = binarize(img, maxval)
    src = SourceDescriptor(
        "image", str(path),
        {"threshold": bm.threshold, "degenerate": bm.degenerate, "method": "otsu", "block": block},
        sha256_hex(Path(path).read_bytes()),
    )
    return TupleDistribution.from_dense(count_rows(bm, k, block), k, {"source": src.to_dict(), "k": k})


def ingest_images(paths, k: int, max_linear: int = MAX_IMAGE_LINEAR, block: bool = False, metadata=None):
    """Pool several images; returns ``(distribution, manifest_entries)``."""
    parts, manifest = [], []
    for path in paths:
        entry = {"path": str(path), "digest": None, "size": None}
        try:
            entry["size"] = os.stat(path).st_size
            d = ingest_image(path, k, max_linear, block)
        except OversizeError:
            entry["status"] = "skipped:size"
        except FormatError:
            entry["status"] = "error:format"
        except OSError as exc:
            entry["status"] = f"error:{exc.__class__.__name__}"
        else:
            entry["digest"] = d.metadata["source"]["digest"]
            entry["status"] = "ok"
            parts.append(d)
        manifest.append(entry)
    if not parts:
        return TupleDistribution.from_dense(np.zeros(1 << k, np.int64), k, metadata), manifest
    return merge(parts, metadata), manifest
