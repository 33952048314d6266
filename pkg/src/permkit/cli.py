"""Batch command line: ingest or generate a matrix, run the pipeline, report.

The pipeline is: load -> optional matching filter -> engine dispatch
(dense walk / sparse walk / compression driver) -> deterministic reduction
-> report. Reports print as human-readable text or stable JSON; values
always carry a full-precision hexadecimal form next to the decimal one,
plus the exact integer when the matrix kind is exact.

Multi-process runs don't fork: each process-rank invocation computes its
superrange and writes a partial file (--emit-partials with
--process-index), and a final invocation merges the files (--merge). Each
file lands on disk as soon as its superrange finishes, so an interrupted
run keeps everything already completed.

Exit codes: 0 success (including a singular verdict, which IS the answer
0), 1 selfcheck failure, 2 parse error, 3 timeout, 4 impossible input
(n > 63), 5 singular verdict when --fail-on-singular asked to treat it
as failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

from . import generate as generators
from . import parallel, preprocess
from .errors import DecompTimeout, ImpossibleError, ParseError, PermanentError
from .matrix import (
    KIND_COMPLEX,
    KIND_INT,
    DenseMatrix,
    Scalar,
    SparsePair,
    dense_to_sparse,
    sparse_to_dense,
)
from .mmio import detect_format, ingest, write_matrix_market
from .precision import AccumulatorPolicy, reference_permanent, relative_error
from .selfcheck import run_selfcheck

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_PARSE = 2
EXIT_TIMEOUT = 3
EXIT_IMPOSSIBLE = 4
EXIT_SINGULAR = 5

# config-file aliases kept for compatibility with older run scripts
_CONFIG_ALIASES = {"processor_num": "processes", "worker_num": "workers"}


@dataclass
class RunConfig:
    """Everything a run needs; JSON config file values, then flag overrides."""

    input: Optional[str] = None
    format: str = "auto"
    algorithm: str = "auto"  # auto | dense | sparse | decomp
    policy: str = "dd"
    workers: int = 1
    processes: int = 1
    aligned: bool = True
    preprocess: Tuple[str, ...] = ()
    task_limit: int = 10_000_000
    time_limit: float = 600.0
    emit_partials: Optional[str] = None
    merge: Optional[str] = None
    process_index: Optional[int] = None
    report: str = "text"
    fail_on_singular: bool = False
    generate: Optional[str] = None
    size: int = 8
    fill: float = 1.0
    density: float = 0.5
    seed: Optional[int] = None
    save: Optional[str] = None

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        raw = json.loads(Path(path).read_text())
        if not isinstance(raw, dict):
            raise ParseError(f"{path}: config must be a JSON object")
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, value in raw.items():
            key = _CONFIG_ALIASES.get(key, key)
            if key == "mode":
                continue  # legacy knob; process/worker counts say it all
            if key not in known:
                raise ParseError(f"{path}: unknown config key {key!r}")
            if key == "preprocess" and isinstance(value, list):
                value = tuple(value)
            kwargs[key] = value
        return cls(**kwargs)

    def policy_enum(self) -> AccumulatorPolicy:
        return AccumulatorPolicy.parse(self.policy)


@dataclass
class RunReport:
    status: str  # ok | singular | timeout | impossible | partials-emitted
    config: RunConfig
    n: Optional[int] = None
    kind: Optional[str] = None
    nnz: Optional[int] = None
    algorithm: Optional[str] = None
    value: Optional[Scalar] = None
    reason: Optional[str] = None
    elapsed: float = 0.0
    plan_summary: Optional[dict] = None
    preprocess_stats: dict = field(default_factory=dict)
    error_estimate: Optional[dict] = None
    emitted: List[str] = field(default_factory=list)
    merged_files: List[str] = field(default_factory=list)

    def value_fields(self) -> Optional[dict]:
        if self.value is None:
            return None
        return _encode_value(self.value, self.kind or "real64")

    def to_dict(self) -> dict:
        out = {
            "status": self.status,
            "n": self.n,
            "kind": self.kind,
            "nnz": self.nnz,
            "algorithm": self.algorithm,
            "policy": self.config.policy,
            "workers": self.config.workers,
            "processes": self.config.processes,
            "aligned": self.config.aligned,
            "elapsed_s": round(self.elapsed, 6),
            "value": self.value_fields(),
        }
        if self.reason:
            out["reason"] = self.reason
        if self.plan_summary:
            out["plan"] = self.plan_summary
        if self.preprocess_stats:
            out["preprocess"] = self.preprocess_stats
        if self.error_estimate:
            out["error_estimate"] = self.error_estimate
        if self.config.seed is not None:
            out["seed"] = self.config.seed
        if self.config.generate:
            out["generator"] = self.config.generate
        if self.config.input:
            out["input"] = self.config.input
        if self.emitted:
            out["partials_written"] = self.emitted
        if self.merged_files:
            out["partials_merged"] = self.merged_files
        return out

    def to_text(self) -> str:
        lines = [f"status:     {self.status}"]
        if self.reason:
            lines.append(f"reason:     {self.reason}")
        if self.n is not None:
            lines.append(f"matrix:     n={self.n} kind={self.kind} nnz={self.nnz}")
        if self.algorithm:
            lines.append(
                f"run:        algorithm={self.algorithm} policy={self.config.policy} "
                f"workers={self.config.workers} processes={self.config.processes} "
                f"aligned={self.config.aligned}"
            )
        vf = self.value_fields()
        if vf is not None:
            for key, text in vf.items():
                lines.append(f"{key + ':':11s} {text}")
        if self.plan_summary:
            ps = self.plan_summary
            lines.append(
                f"plan:       total={ps['total']} chunk={ps.get('chunk_size')} "
                f"ranges={ps.get('ranges')} residual={ps.get('residual')}"
            )
        for name, stats in self.preprocess_stats.items():
            pretty = " ".join(f"{k}={v}" for k, v in stats.items())
            lines.append(f"{name + ':':11s} {pretty}")
        if self.error_estimate:
            ee = self.error_estimate
            lines.append(f"reference:  {ee['reference']}  rel_error={ee['rel_error']:.3e}")
        if self.emitted:
            lines.append(f"partials:   wrote {len(self.emitted)} file(s)")
        if self.merged_files:
            lines.append(f"merged:     {len(self.merged_files)} file(s)")
        lines.append(f"elapsed:    {self.elapsed:.3f}s")
        return "\n".join(lines)


def _encode_value(v: Scalar, kind: str) -> dict:
    if kind == KIND_INT:
        return {"integer": str(v), "decimal": str(v), "hex": float(v).hex()}
    if kind == KIND_COMPLEX:
        c = complex(v)
        return {
            "decimal": f"{c.real!r} {'+' if c.imag >= 0 else '-'} {abs(c.imag)!r}j",
            "hex": f"{c.real.hex()} {c.imag.hex()}",
        }
    f = float(v)
    return {"decimal": repr(f), "hex": f.hex()}


def _uniform_fill(m: DenseMatrix) -> Optional[float]:
    """The constant value when every entry is identical (else None)."""
    if m.kind == KIND_COMPLEX:
        return None
    first = m.entry(0, 0)
    if all(v == first for v in m.data):
        return float(first)
    return None


def _plan_summary(plan: parallel.ChunkPlan) -> dict:
    return {
        "total": plan.total,
        "chunk_size": plan.chunk_size,
        "ranges": len(plan.ranges),
        "residual": list(plan.residual) if plan.residual else None,
        "aligned": plan.aligned,
        "tau_clamped": plan.tau_clamped,
    }


def _hierarchy_summary(hp: parallel.HierarchyPlan) -> dict:
    return {
        "total": hp.total,
        "processes": hp.processes,
        "workers_per_process": hp.workers,
        "ranges": sum(len(g) for g in hp.inner),
        "aligned": hp.aligned,
        "chunk_size": None,
        "residual": None,
    }


class EmptyInput:
    """A 0x0 matrix; its permanent is the empty product, exactly 1."""


def _dense_text_is_empty(path: str) -> bool:
    for raw in Path(path).read_text().splitlines():
        stripped = raw.strip()
        if stripped and stripped[0] not in "#%":
            return False
    return True


def load_matrix(cfg: RunConfig) -> Union[DenseMatrix, SparsePair, EmptyInput, None]:
    """Resolve the run's matrix from --input or a generator; None for merge-only."""
    if cfg.generate:
        m = generators.generate(cfg.generate, cfg.size, cfg.seed, cfg.fill, cfg.density)
        if cfg.save:
            write_matrix_market(cfg.save, m, comment=f"generator={cfg.generate} seed={cfg.seed}")
        return m
    if cfg.input:
        fmt = detect_format(cfg.input) if cfg.format == "auto" else cfg.format
        if fmt == "dense-text" and _dense_text_is_empty(cfg.input):
            return EmptyInput()
        return ingest(cfg.input, fmt)
    return None


def run(cfg: RunConfig, m: Union[DenseMatrix, SparsePair]) -> RunReport:
    """Execute the configured pipeline on one matrix."""
    t0 = time.perf_counter()
    policy = cfg.policy_enum()
    report = RunReport(status="ok", config=cfg, n=m.n, kind=m.kind)
    report.nnz = m.nnz() if isinstance(m, DenseMatrix) else m.nnz

    # structural filter first: it can settle the answer outright
    if "dm" in cfg.preprocess:
        s = m if isinstance(m, SparsePair) else dense_to_sparse(m)
        res = preprocess.dm_decompose(s)
        if isinstance(res, preprocess.SingularVerdict):
            report.status = "singular"
            report.reason = res.reason
            report.value = _zero_for(m.kind)
            report.elapsed = time.perf_counter() - t0
            return report
        report.preprocess_stats["dm"] = {
            "nnz_before": res.nnz_before,
            "nnz_after": res.nnz_after,
            "removed": len(res.removed),
            "components": res.labeling.count,
        }
        m = res.filtered
        report.nnz = m.nnz

    algorithm = cfg.algorithm
    if algorithm == "auto":
        if "fm" in cfg.preprocess:
            algorithm = "decomp"
        else:
            algorithm = "sparse" if isinstance(m, SparsePair) else "dense"
    report.algorithm = algorithm

    if algorithm == "decomp":
        s = m if isinstance(m, SparsePair) else dense_to_sparse(m)
        try:
            value, stats = preprocess.decomp_run(
                s, policy, task_limit=cfg.task_limit, time_limit=cfg.time_limit
            )
        except DecompTimeout as exc:
            report.status = "timeout"
            report.reason = str(exc)
            report.preprocess_stats["decomp"] = {
                "tasks_done": exc.tasks_done,
                "elapsed": round(exc.elapsed, 3),
            }
            report.elapsed = time.perf_counter() - t0
            return report
        report.value = value
        report.preprocess_stats["decomp"] = {
            "tasks": stats.tasks_created,
            "d1": stats.d1_applied,
            "d2": stats.d2_applied,
            "d34": stats.d34_applied,
            "kernel_leaves": stats.kernel_leaves,
            "dense_leaves": stats.dense_kernel_leaves,
            "avg_leaf_n": round(stats.avg_leaf_n, 2),
            "avg_leaf_nnz": round(stats.avg_leaf_nnz, 2),
        }
    else:
        mm: Union[DenseMatrix, SparsePair]
        if algorithm == "dense":
            mm = m if isinstance(m, DenseMatrix) else sparse_to_dense(m)
        elif algorithm == "sparse":
            mm = m if isinstance(m, SparsePair) else dense_to_sparse(m)
        else:
            raise ValueError(f"unknown algorithm {cfg.algorithm!r}")
        if cfg.processes > 1:
            hp = parallel.plan_hierarchy(mm.n, cfg.processes, cfg.workers, cfg.aligned)
            partials = parallel.execute_hierarchy(mm, hp, policy)
            report.value = parallel.reduce_partials(
                partials, parallel.initial_product(mm, policy), mm.n
            )
            report.plan_summary = _hierarchy_summary(hp)
        else:
            plan = parallel.plan_chunks(mm.n, cfg.workers, cfg.aligned)
            partials = parallel.execute_plan(mm, plan, policy)
            report.value = parallel.reduce_partials(
                partials, parallel.initial_product(mm, policy), mm.n
            )
            report.plan_summary = _plan_summary(plan)

    if isinstance(m, DenseMatrix) and report.value is not None:
        a = _uniform_fill(m)
        if a is not None:
            exact = reference_permanent(m.n, a)
            err = relative_error(report.value, exact)
            report.error_estimate = {
                "formula": "n! * a^n",
                "reference": repr(float(exact)),
                "rel_error": err.value,
            }

    report.elapsed = time.perf_counter() - t0
    return report


def _zero_for(kind: str) -> Scalar:
    return {KIND_INT: 0, KIND_COMPLEX: complex(0.0)}.get(kind, 0.0)


def emit_partials(cfg: RunConfig, m: Union[DenseMatrix, SparsePair]) -> RunReport:
    """Compute superranges and write one partial file each.

    With --process-index only that rank's file is produced, which is how a
    scheduler splits a run across machines; files are written as each
    superrange completes.
    """
    t0 = time.perf_counter()
    policy = cfg.policy_enum()
    out = Path(cfg.emit_partials)
    out.mkdir(parents=True, exist_ok=True)
    hp = parallel.plan_hierarchy(m.n, cfg.processes, cfg.workers, cfg.aligned)
    indices = range(hp.processes) if cfg.process_index is None else [cfg.process_index]
    report = RunReport(
        status="partials-emitted", config=cfg, n=m.n, kind=m.kind, algorithm="sparse" if isinstance(m, SparsePair) else "dense"
    )
    report.nnz = m.nnz() if isinstance(m, DenseMatrix) else m.nnz
    report.plan_summary = _hierarchy_summary(hp)
    for pi in indices:
        partials = parallel.execute_hierarchy(m, hp, policy, process_index=pi)
        path = out / f"partial-{pi:04d}.txt"
        parallel.write_partials_file(path, m, policy, partials)
        report.emitted.append(str(path))
    report.elapsed = time.perf_counter() - t0
    return report


def merge_partials(cfg: RunConfig, m: Union[DenseMatrix, SparsePair]) -> RunReport:
    """Combine previously emitted partial files into the final value."""
    t0 = time.perf_counter()
    policy = cfg.policy_enum()
    paths = sorted(str(p) for p in Path(cfg.merge).glob("partial-*.txt"))
    if not paths:
        raise ParseError(f"{cfg.merge}: no partial-*.txt files to merge")
    value = parallel.merge_partial_files(paths, m, policy)
    report = RunReport(
        status="ok", config=cfg, n=m.n, kind=m.kind,
        algorithm="merge", value=value, merged_files=paths,
    )
    report.nnz = m.nnz() if isinstance(m, DenseMatrix) else m.nnz
    report.elapsed = time.perf_counter() - t0
    return report


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="permkit",
        description="Exact and precision-hardened matrix permanents (dense, sparse, decomposed).",
    )
    p.add_argument("--input", help="matrix file to load")
    p.add_argument("--format", choices=["auto", "matrix-market", "dense-text"], default=None)
    p.add_argument("--algorithm", choices=["auto", "dense", "sparse", "decomp"], default=None)
    p.add_argument("--policy", choices=["dd", "kahan", "dq", "qq"], default=None)
    p.add_argument("--workers", type=int, default=None, help="chunks per process (tau)")
    p.add_argument("--processes", type=int, default=None, help="superranges in the outer split")
    aligned = p.add_mutually_exclusive_group()
    aligned.add_argument("--aligned", dest="aligned", action="store_true", default=None,
                         help="round chunks down to a power of 2 (default)")
    aligned.add_argument("--no-aligned", dest="aligned", action="store_false")
    p.add_argument("--preprocess", default=None,
                   help="comma-separated passes: dm (matching filter), fm (compression)")
    p.add_argument("--task-limit", type=int, default=None)
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--emit-partials", metavar="DIR", default=None)
    p.add_argument("--process-index", type=int, default=None,
                   help="with --emit-partials: compute only this rank's superrange")
    p.add_argument("--merge", metavar="DIR", default=None)
    p.add_argument("--report", choices=["json", "text"], default=None)
    p.add_argument("--fail-on-singular", action="store_true", default=None)
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--selfcheck", action="store_true", help="run the built-in checks and exit")
    p.add_argument("--generate", choices=sorted(generators.GENERATORS), default=None)
    p.add_argument("--size", type=int, default=None, help="generator matrix size")
    p.add_argument("--fill", type=float, default=None, help="uniform generator value")
    p.add_argument("--density", type=float, default=None, help="generator nonzero density")
    p.add_argument("--seed", type=int, default=None, help="generator seed (recorded in report)")
    p.add_argument("--save", help="write the generated matrix to this file")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    for f in fields(RunConfig):
        if not hasattr(args, f.name):
            continue
        flag = getattr(args, f.name)
        if flag is not None:
            setattr(cfg, f.name, flag)
    if isinstance(cfg.preprocess, str):
        cfg.preprocess = tuple(t.strip() for t in cfg.preprocess.split(",") if t.strip())
    for pass_name in cfg.preprocess:
        if pass_name not in ("dm", "fm"):
            raise ParseError(f"unknown preprocess pass {pass_name!r}")
    if cfg.format is None:
        cfg.format = "auto"
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.selfcheck:
        return EXIT_OK if run_selfcheck() else EXIT_FAIL

    try:
        cfg = config_from_args(args)
        m = load_matrix(cfg)
        if m is None and not cfg.merge:
            print("error: need --input, --generate, or --merge", file=sys.stderr)
            return EXIT_PARSE
        if isinstance(m, EmptyInput):
            report = RunReport(status="ok", config=cfg, n=0, kind=KIND_INT, nnz=0,
                               algorithm="trivial", value=1)
        elif cfg.merge:
            if m is None:
                print("error: --merge needs the original matrix (--input or --generate)",
                      file=sys.stderr)
                return EXIT_PARSE
            report = merge_partials(cfg, m)
        elif cfg.emit_partials:
            report = emit_partials(cfg, m)
        else:
            report = run(cfg, m)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as exc:
        # bad invocation values (e.g. a generator without a seed)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ImpossibleError as exc:
        print(f"error: impossible input: {exc}", file=sys.stderr)
        return EXIT_IMPOSSIBLE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except PermanentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL

    if cfg.report == "json":
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    else:
        print(report.to_text())

    if report.status == "timeout":
        return EXIT_TIMEOUT
    if report.status == "singular" and cfg.fail_on_singular:
        return EXIT_SINGULAR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
