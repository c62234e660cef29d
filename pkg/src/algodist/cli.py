"""Command-line entry point: ``algodist <subcommand>``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import ingestion, priorcoder, stats
from .distribution import (
    DEFAULT_KS, SampleSpec, _atomic_write, estimate_K, load_distribution,
    machine_experiments, rank, save_distribution,
)
from .errors import (
    AlgodistError, ConfigError, CorruptPayloadError, FormatError, KMismatchError, OversizeError,
)
from .machines import CA, TM, TS

log = logging.getLogger("algodist")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 0, 2, 3, 4

PAPER_MACHINES = {
    "TM": {"machine": TM, "n_states": 3, "mode": "sample", "sample_size": 2000, "seed": 1, "steps": 100},
    "CA": {"machine": CA, "mode": "sample", "sample_size": 2000, "seed": 2, "steps": 100},
    "TS": {"machine": TS, "mode": "sample", "sample_size": 2000, "seed": 3, "steps": 100},
}
SOURCE_KINDS = ("files", "fasta", "images")


@dataclass
class ExperimentConfig:
    distributions: dict
    ks: tuple = DEFAULT_KS
    tie_policy: str = "fractional"
    permutations: int = 10000
    seed: int = 0
    out: Path = Path("results")
    base: Path = field(default_factory=Path.cwd)

    def machine_specs(self) -> dict[str, SampleSpec]:
        specs = {}
        for name, d in self.distributions.items():
            if "machine" not in d:
                continue
            try:
                specs[name] = SampleSpec(
                    machine_class=d["machine"],
                    mode=d.get("mode", "sample"),
                    sample_size=int(d.get("sample_size", 2000)),
                    seed=int(d.get("seed", self.seed)),
                    steps=int(d.get("steps", 100)),
                    n_states=int(d.get("n_states", 3)),
                )
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"distribution {name!r}: {exc}") from exc
        return specs

    def sources(self) -> dict[str, dict]:
        return {n: d for n, d in self.distributions.items() if "source" in d}

    def resolve(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base / p


def load_config(args) -> ExperimentConfig:
    doc, base = {}, Path.cwd()
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            doc = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a mapping")
        base = path.resolve().parent
    st = doc.get("stats", {}) or {}
    dists = doc.get("distributions")
    if dists is None:
        dists = {n: dict(d) for n, d in PAPER_MACHINES.items()}
    if not isinstance(dists, dict):
        raise ConfigError("'distributions' must be a mapping of name -> spec")
    cfg = ExperimentConfig(
        distributions={str(n): dict(d or {}) for n, d in dists.items()},
        ks=tuple(doc.get("k", DEFAULT_KS)),
        tie_policy=st.get("tie_policy", "fractional"),
        permutations=int(st.get("permutations", 10000)),
        seed=int(doc.get("seed", st.get("seed", 0))),
        out=Path(doc.get("out", "results")),
        base=base,
    )
    if not cfg.out.is_absolute() and getattr(args, "config", None):
        cfg.out = base / cfg.out
    # command-line flags win over the file
    if getattr(args, "k", None):
        cfg.ks = tuple(args.k)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
        for d in cfg.distributions.values():
            d["seed"] = args.seed
    for flag, key in (("sample_size", "sample_size"), ("steps", "steps")):
        val = getattr(args, flag, None)
        if val is not None:
            for d in cfg.distributions.values():
                if "machine" in d:
                    d[key] = val
    if getattr(args, "tie_policy", None):
        cfg.tie_policy = args.tie_policy
    if getattr(args, "permutations", None) is not None:
        cfg.permutations = args.permutations
    if getattr(args, "out", None):
        cfg.out = Path(args.out)
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig):
    if not cfg.ks or any(not 1 <= int(k) <= 24 for k in cfg.ks):
        raise ConfigError(f"k values must be in 1..24, got {cfg.ks}")
    if cfg.tie_policy not in stats.TIE_POLICIES:
        raise ConfigError(f"tie_policy must be one of {stats.TIE_POLICIES}")
    if cfg.permutations < 1:
        raise ConfigError("permutations must be >= 1")
    for name, d in cfg.distributions.items():
        if ("machine" in d) == ("source" in d):
            raise ConfigError(f"distribution {name!r} needs exactly one of 'machine' or 'source'")
        if "source" in d:
            if d["source"] not in SOURCE_KINDS:
                raise ConfigError(f"distribution {name!r}: source must be one of {SOURCE_KINDS}")
            if "path" not in d:
                raise ConfigError(f"distribution {name!r}: missing 'path'")
            if not cfg.resolve(d["path"]).exists():
                raise ConfigError(f"distribution {name!r}: path {d['path']} does not exist")
    cfg.machine_specs()


def dist_stem(out: Path, name: str, k: int) -> Path:
    return out / "distributions" / f"{name}.k{k}"


def dist_json(out: Path, name: str, k: int) -> Path:
    return out / "distributions" / f"{name}.k{k}.json"


# --------------------------------------------------------------------------
# subcommands


def cmd_generate(cfg: ExperimentConfig) -> list[Path]:
    written = []
    for name, spec in cfg.machine_specs().items():
        log.info("running %s: %s", name, spec)
        for k, d in machine_experiments(spec, cfg.ks).items():
            d.metadata["name"] = name
            written.append(save_distribution(d, dist_stem(cfg.out, name, k)))
    return written


def _source_paths(cfg, d):
    path = cfg.resolve(d["path"])
    if path.is_dir():
        paths = ingestion.sample_files(path, d.get("sample_size"), int(d.get("seed", cfg.seed)))
    else:
        paths = [path]
    return path, paths


def cmd_ingest(cfg: ExperimentConfig) -> list[Path]:
    written = []
    for name, d in cfg.sources().items():
        kind = d["source"]
        root, paths = _source_paths(cfg, d)
        block = bool(d.get("block", False))
        manifest = None
        for k in cfg.ks:
            meta = {"name": name, "k": k, "source": {
                "kind": kind, "path": str(d["path"]), "sample_size": d.get("sample_size"),
                "seed": int(d.get("seed", cfg.seed)), "block": block,
            }}
            if kind == "files":
                dist, manifest = ingestion.ingest_files(
                    paths, k, int(d.get("max_bytes", ingestion.MAX_FILE_BYTES)), block, meta)
            elif kind == "images":
                dist, manifest = ingestion.ingest_images(
                    paths, k, int(d.get("max_linear", ingestion.MAX_IMAGE_LINEAR)), block, meta)
            else:
                parts, manifest = [], []
                for p in paths:
                    data = p.read_bytes()
                    recs = ingestion.parse_fasta(data.decode("ascii", "replace"))
                    status = "ok" if recs else "error:no-records"
                    manifest.append({"path": str(p), "digest": ingestion.sha256_hex(data),
                                     "size": len(data), "status": status})
                    parts.extend(s for _, s in recs)
                if not parts:
                    raise FormatError(f"{name}: no FASTA records found under {d['path']}")
                dist = ingestion.ingest_sequences(parts, k, block, meta)
            for e in manifest:
                e["path"] = _rel(Path(e["path"]), cfg.base)
            written.append(save_distribution(dist, dist_stem(cfg.out, name, k)))
        mpath = cfg.out / "manifests" / f"{name}.jsonl"
        ingestion.write_manifest(manifest or [], mpath)
        written.append(mpath)
    return written


def _rel(p: Path, base: Path) -> str:
    try:
        return p.resolve().relative_to(base.resolve()).as_posix()
    except ValueError:
        return p.as_posix()


def _series_csv(dists, fn, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name"] + header)
    for name, d in dists.items():
        for row in fn(d):
            w.writerow([name, row[0], row[1], repr(row[2])])
    return buf.getvalue()


def cmd_compare(cfg: ExperimentConfig) -> list[Path]:
    written = []
    for k in cfg.ks:
        dists = {}
        for name in cfg.distributions:
            path = dist_json(cfg.out, name, k)
            if not path.exists():
                raise FormatError(f"missing distribution {path}; run generate/ingest first")
            dists[name] = load_distribution(path)
        if len(dists) < 2:
            raise ConfigError(f"k={k}: need at least 2 distributions to compare")
        log.info("comparing %d distributions at k=%d", len(dists), k)
        m = stats.correlation_matrix(dists, cfg.tie_policy, cfg.permutations, cfg.seed)
        base = cfg.out / "compare" / f"k{k}"
        outputs = {
            ".matrix.csv": m.to_csv(),
            ".matrix.json": m.to_json(),
            ".matrix.txt": m.to_text(),
            ".rank_series.csv": _series_csv(dists, stats.rank_series, ["rank", "tuple", "probability"]),
            ".lexicographic_series.csv": _series_csv(
                dists, stats.lexicographic_series, ["index", "tuple", "probability"]),
        }
        for suffix, text in outputs.items():
            p = base.with_name(base.name + suffix)
            _atomic_write(p, text)
            written.append(p)
    return written


def load_data_source(path: Path, kind: str, k: int | None):
    if kind == "distribution":
        return load_distribution(path)
    if k is None:
        raise ConfigError("--k is required when scoring a raw source")
    if kind == "file":
        return ingestion.ingest_file(path, k)
    if kind == "fasta":
        return ingestion.ingest_fasta(path, k)
    if kind == "image":
        return ingestion.ingest_image(path, k)
    if kind == "dir":
        d, _ = ingestion.ingest_files(ingestion.list_files(path), k)
        return d
    raise ConfigError(f"unknown data kind {kind!r}")


def cmd_score(data_path, data_kind, ref_path, k=None, tie_policy="fractional",
              permutations=10000, seed=0, top=16) -> dict:
    ref = load_distribution(ref_path)
    if k is not None and k != ref.k:
        raise KMismatchError(f"--k {k} does not match the reference k={ref.k}")
    data = load_data_source(Path(data_path), data_kind, ref.k)
    report = stats.algorithmicity_score(data, ref, tie_policy, permutations, seed)
    report["reference"] = {"path": str(ref_path), "metadata": ref.metadata,
                           "sha256": ingestion.sha256_hex(Path(ref_path).read_bytes())}
    report["data"] = {"path": str(data_path), "kind": data_kind, "metadata": data.metadata}
    report["complexity_estimates"] = [
        {"tuple": s, "probability": float(p), "K_bits": estimate_K(ref, s)}
        for s, p in list(rank(ref))[:top]
    ]
    return report


def _codebook(args) -> priorcoder.CodeBook:
    if args.codebook:
        return priorcoder.CodeBook.deserialize(Path(args.codebook).read_text(encoding="utf-8"))
    if args.reference:
        return priorcoder.build_codebook(load_distribution(args.reference))
    raise ConfigError("give --reference or --codebook")


def cmd_compress(src, dst, book, report_path=None) -> dict:
    data = Path(src).read_bytes()
    bits = ingestion.bytes_to_bits(data)
    payload = priorcoder.encode(bits, book)
    _atomic_write(Path(dst), payload)
    report = priorcoder.compression_report(bits, book)
    report["payload_bytes"] = len(payload)
    if report_path:
        _atomic_write(Path(report_path), json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report


def cmd_decompress(src, dst, book) -> int:
    bits = priorcoder.decode_array(Path(src).read_bytes(), book)
    if bits.size % 8:
        raise CorruptPayloadError("decoded stream is not a whole number of bytes")
    data = np.packbits(bits).tobytes()
    _atomic_write(Path(dst), data)
    return len(data)


def cmd_report(cfg: ExperimentConfig, top: int = 16) -> str:
    parts = []
    for k in cfg.ks:
        txt = cfg.out / "compare" / f"k{k}.matrix.txt"
        if txt.exists():
            parts.append(f"## Spearman coefficients, k = {k}\n\n```\n{txt.read_text(encoding='utf-8')}```\n")
        for name in cfg.distributions:
            p = dist_json(cfg.out, name, k)
            if not p.exists() or k != min(cfg.ks):
                continue
            d = load_distribution(p)
            if d.total == 0:
                continue
            rows = [f"{i + 1:>4}  {s}  {float(pr):.3g}" for i, (s, pr) in enumerate(list(rank(d))[:top])]
            parts.append(f"### {name}, k = {k}\n\n```\nrank  tuple  pr(s)\n" + "\n".join(rows) + "\n```\n")
    text = "\n".join(parts)
    _atomic_write(cfg.out / "report.md", text)
    return text


# --------------------------------------------------------------------------


def _add_common(p):
    p.add_argument("--config", help="YAML experiment config")
    p.add_argument("--k", type=int, nargs="+", help="tuple lengths (default 4 5 6 7)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")


def build_parser():
    ap = argparse.ArgumentParser(prog="algodist", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="run machine samples and write distributions")
    _add_common(g)
    g.add_argument("--sample-size", type=int)
    g.add_argument("--steps", type=int)

    i = sub.add_parser("ingest", help="turn physical sources into distributions")
    _add_common(i)

    c = sub.add_parser("compare", help="correlation matrices and plot series")
    _add_common(c)
    c.add_argument("--tie-policy", choices=stats.TIE_POLICIES)
    c.add_argument("--permutations", type=int)

    s = sub.add_parser("score", help="algorithmicity report for one data source")
    s.add_argument("data")
    s.add_argument("--kind", default="distribution", choices=["distribution", "file", "fasta", "image", "dir"])
    s.add_argument("--reference", required=True, help="reference distribution (.json)")
    s.add_argument("--k", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--tie-policy", choices=stats.TIE_POLICIES, default="fractional")
    s.add_argument("--permutations", type=int, default=10000)
    s.add_argument("--top", type=int, default=16)
    s.add_argument("--out", help="write the JSON report here instead of stdout")

    for name, helptext in (("compress", "encode a file with a static prior code"),
                           ("decompress", "invert compress")):
        x = sub.add_parser(name, help=helptext)
        x.add_argument("input")
        x.add_argument("output")
        x.add_argument("--reference", help="distribution (.json) to build the codebook from")
        x.add_argument("--codebook", help="serialized codebook")
        if name == "compress":
            x.add_argument("--save-codebook")
            x.add_argument("--report", help="write the compression report (JSON) here")

    r = sub.add_parser("report", help="summarise compare output as markdown")
    _add_common(r)
    r.add_argument("--top", type=int, default=16)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command in ("generate", "ingest", "compare", "report"):
            cfg = load_config(args)
            if args.command == "generate":
                out = cmd_generate(cfg)
            elif args.command == "ingest":
                out = cmd_ingest(cfg)
            elif args.command == "compare":
                out = cmd_compare(cfg)
            else:
                print(cmd_report(cfg, args.top))
                return EXIT_OK
            for p in out:
                print(p)
        elif args.command == "score":
            report = cmd_score(args.data, args.kind, args.reference, args.k, args.tie_policy,
                               args.permutations, args.seed, args.top)
            text = json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
            if args.out:
                _atomic_write(Path(args.out), text)
            else:
                sys.stdout.write(text)
        elif args.command == "compress":
            book = _codebook(args)
            if args.save_codebook:
                _atomic_write(Path(args.save_codebook), book.serialize())
            rep = cmd_compress(args.input, args.output, book, args.report)
            print(f"{rep['input_bits']} -> {rep['output_bits']} bits, "
                  f"{rep['bits_per_block']:.4f} bits/block (entropy {rep['block_entropy']:.4f})")
        elif args.command == "decompress":
            cmd_decompress(args.input, args.output, _codebook(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, OversizeError, KMismatchError, CorruptPayloadError, OSError, AlgodistError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.exception("runtime failure")
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
