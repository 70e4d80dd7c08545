"""On-disk formats and the batch pipeline.

Two matrix formats: CSV for interchange (shortest round-trip float
printing, optional header row) and a raw binary format for speed and
bit-exact round trips. The binary layout is magic "AMSL", version u32,
rows u64, cols u64 (all little endian), then rows*cols float64 values
row major. Eraser model files use the same block layout under the magic
"AMSE". Pipeline configuration is a flat key = value text file so runs
can be replayed without any extra dependencies.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .assignment import Assignment, GuardedRecords, bounds_from_priors
from .driver import AmsalConfig, alignment_accuracy, run_amsal
from .errors import FormatError, InvalidInput
from .linalg import as_matrix
from .metrics import EvalReport, accuracy, f1_macro, mae, mae_gap, tpr_gap_rms
from .removal import INLP, SAL, apply_eraser, fit_inlp, fit_logistic_probe, fit_sal, Eraser

MATRIX_MAGIC = b"AMSL"
ERASER_MAGIC = b"AMSE"
FORMAT_VERSION = 1

CSV = "csv"
BIN = "bin"


@dataclass(frozen=True)
class MatrixFile:
    path: str
    format: str  # "csv" or "bin"


def _infer_format(path, data=None):
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return CSV
    if suffix == ".bin":
        return BIN
    if data is not None and data[:4] == MATRIX_MAGIC:
        return BIN
    return CSV if data is not None else BIN


def _unwrap(path, fmt):
    if isinstance(path, MatrixFile):
        return path.path, fmt or path.format
    return path, fmt


def save_matrix(matrix, path, fmt=None, header=False):
    """Write a matrix; format comes from *fmt*, a MatrixFile handle, or the suffix."""
    matrix = as_matrix(matrix, "matrix")
    path, fmt = _unwrap(path, fmt)
    fmt = fmt or _infer_format(path)
    if fmt == BIN:
        rows, cols = matrix.shape
        with open(path, "wb") as fh:
            fh.write(struct.pack("<4sIQQ", MATRIX_MAGIC, FORMAT_VERSION, rows, cols))
            fh.write(np.ascontiguousarray(matrix, dtype="<f8").tobytes())
    elif fmt == CSV:
        with open(path, "w") as fh:
            if header:
                fh.write(",".join(f"c{j}" for j in range(matrix.shape[1])) + "\n")
            for row in matrix:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
    else:
        raise InvalidInput(f"unknown matrix format {fmt!r}")


def load_matrix(path, fmt=None):
    """Read a matrix back; BIN round trips are bit exact."""
    path, fmt = _unwrap(path, fmt)
    raw = Path(path).read_bytes()
    fmt = fmt or _infer_format(path, raw)
    if fmt == BIN:
        return _parse_bin(raw, path)
    if fmt == CSV:
        return _parse_csv(raw, path)
    raise InvalidInput(f"unknown matrix format {fmt!r}")


def _parse_bin(raw, path):
    if len(raw) < 24:
        raise FormatError(f"{path}: truncated header at byte {len(raw)} (need 24 bytes)")
    magic, version, rows, cols = struct.unpack_from("<4sIQQ", raw, 0)
    if magic != MATRIX_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r} at byte 0")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version} at byte 4")
    if rows < 1 or cols < 1 or rows * cols > 2**48:
        raise FormatError(f"{path}: bad dimensions {rows}x{cols} at byte 8")
    expect = 24 + rows * cols * 8
    if len(raw) != expect:
        raise FormatError(
            f"{path}: payload size mismatch at byte 24 (file {len(raw)}, expected {expect})"
        )
    data = np.frombuffer(raw, dtype="<f8", offset=24).reshape(rows, cols).copy()
    return as_matrix(data, str(path))


def _parse_csv(raw, path):
    lines = raw.decode("utf-8").splitlines()
    rows = []
    width = None
    header_allowed = True
    for ln, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        fields = line.split(",")
        try:
            row = [float(f) for f in fields]
        except ValueError:
            if header_allowed:
                header_allowed = False
                continue  # a single leading non-numeric row is a header
            bad = next(i for i, f in enumerate(fields, start=1) if not _is_float(f))
            raise FormatError(f"{path}: line {ln}, field {bad}: not a number") from None
        header_allowed = False
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise FormatError(f"{path}: line {ln}: {len(row)} fields, expected {width}")
        rows.append(row)
    if not rows:
        raise FormatError(f"{path}: no data rows")
    return as_matrix(np.asarray(rows, dtype=np.float64), str(path))


def _is_float(tok):
    try:
        float(tok)
        return True
    except ValueError:
        return False


def save_assignment(pi, path):
    with open(path, "w") as fh:
        for j in pi.map:
            fh.write(f"{int(j)}\n")


def load_assignment(path):
    return Assignment(np.asarray(load_labels(path), dtype=np.int64))


def load_labels(path):
    """Integer labels, one per line."""
    values = []
    for ln, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            values.append(int(line.strip()))
        except ValueError:
            raise FormatError(f"{path}: line {ln}: not an integer") from None
    if not values:
        raise FormatError(f"{path}: no data rows")
    return np.asarray(values, dtype=np.int64)


def load_values(path):
    """Float values, one per line."""
    values = []
    for ln, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            values.append(float(line.strip()))
        except ValueError:
            raise FormatError(f"{path}: line {ln}: not a number") from None
    if not values:
        raise FormatError(f"{path}: no data rows")
    return np.asarray(values, dtype=np.float64)


def load_seed_labels(path):
    """Partial-supervision pairs: lines of "input_index,record_index"."""
    idx, val = [], []
    for ln, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 2:
            raise FormatError(f"{path}: line {ln}: expected index,record")
        try:
            idx.append(int(fields[0]))
            val.append(int(fields[1]))
        except ValueError:
            raise FormatError(f"{path}: line {ln}: not an integer pair") from None
    if not idx:
        raise FormatError(f"{path}: no data rows")
    return np.asarray(idx, dtype=np.int64), np.asarray(val, dtype=np.int64)


def _write_block(fh, matrix):
    rows, cols = matrix.shape
    fh.write(struct.pack("<QQ", rows, cols))
    fh.write(np.ascontiguousarray(matrix, dtype="<f8").tobytes())


def _read_block(raw, offset, path):
    if len(raw) < offset + 16:
        raise FormatError(f"{path}: truncated block header at byte {offset}")
    rows, cols = struct.unpack_from("<QQ", raw, offset)
    end = offset + 16 + rows * cols * 8
    if len(raw) < end:
        raise FormatError(f"{path}: truncated block payload at byte {offset + 16}")
    data = np.frombuffer(raw, dtype="<f8", count=rows * cols, offset=offset + 16)
    return data.reshape(rows, cols), end


def save_eraser(eraser, path):
    kind = 0 if eraser.kind == SAL else 1
    extra = eraser.removed if eraser.kind == SAL else eraser.iterations
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIBI", ERASER_MAGIC, FORMAT_VERSION, kind, int(extra)))
        _write_block(fh, eraser.input_means.reshape(1, -1))
        _write_block(fh, eraser.basis if eraser.kind == SAL else eraser.projection)


def load_eraser(path):
    raw = Path(path).read_bytes()
    if len(raw) < 13:
        raise FormatError(f"{path}: truncated header at byte {len(raw)}")
    magic, version, kind, extra = struct.unpack_from("<4sIBI", raw, 0)
    if magic != ERASER_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r} at byte 0")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version} at byte 4")
    means, offset = _read_block(raw, 13, path)
    matrix, _ = _read_block(raw, offset, path)
    if kind == 0:
        return Eraser(kind=SAL, input_means=means[0], basis=matrix, removed=extra)
    if kind == 1:
        return Eraser(kind=INLP, input_means=means[0], projection=matrix, iterations=extra)
    raise FormatError(f"{path}: unknown eraser kind {kind} at byte 8")


def save_trace(trace, path):
    """Objective trace as CSV: iteration, seed, objective, accuracy (blank without truth)."""
    with open(path, "w") as fh:
        fh.write("iteration,seed,objective,accuracy\n")
        for row in trace.rows:
            acc = "" if np.isnan(row.accuracy) else repr(row.accuracy)
            fh.write(f"{row.iteration},{row.seed},{repr(row.objective)},{acc}\n")


def format_report(report):
    lines = [f"{key} = {repr(value)}" for key, value in report.as_dict().items()]
    return "\n".join(lines) + "\n"


def save_report(report, path):
    Path(path).write_text(format_report(report))


_CONFIG_DEFAULTS = {
    "x": None,
    "records": None,
    "output_dir": None,
    "priors": "",
    "slack": "0.2",
    "max_iterations": "100",
    "num_seeds": "3",
    "rng_seed": "0",
    "score_k": "full",
    "selection": "unsupervised",
    "seed_labels": "",
    "removal": "sal",
    "removal_rank": "auto",
    "inlp_rounds": "10",
    "y": "",
    "y_kind": "none",
    "truth": "",
}

_REQUIRED_KEYS = ("x", "records", "output_dir")


@dataclass(frozen=True)
class PipelineConfig:
    """Parsed pipeline settings; see _CONFIG_DEFAULTS for the key set."""

    x: str
    records: str
    output_dir: str
    priors: tuple
    slack: float
    max_iterations: int
    num_seeds: int
    rng_seed: int
    score_k: int | str
    selection: str
    seed_labels: str
    removal: str
    removal_rank: int | str
    inlp_rounds: int
    y: str
    y_kind: str
    truth: str

    @classmethod
    def from_file(cls, path):
        values = dict(_CONFIG_DEFAULTS)
        for ln, line in enumerate(Path(path).read_text().splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise FormatError(f"{path}: line {ln}: expected key = value")
            key, _, value = stripped.partition("=")
            key = key.strip()
            if key not in values:
                raise FormatError(f"{path}: line {ln}: unknown key {key!r}")
            values[key] = value.strip()
        for key in _REQUIRED_KEYS:
            if not values[key]:
                raise FormatError(f"{path}: missing required key {key!r}")
        return cls.from_values(values, source=str(path))

    @classmethod
    def from_values(cls, values, source="config"):
        try:
            priors = tuple(
                float(tok) for tok in values["priors"].split(",") if tok.strip()
            )
            score_k = values["score_k"]
            if score_k != "full":
                score_k = int(score_k)
            rank = values["removal_rank"]
            if rank != "auto":
                rank = int(rank)
            return cls(
                x=values["x"],
                records=values["records"],
                output_dir=values["output_dir"],
                priors=priors,
                slack=float(values["slack"]),
                max_iterations=int(values["max_iterations"]),
                num_seeds=int(values["num_seeds"]),
                rng_seed=int(values["rng_seed"]),
                score_k=score_k,
                selection=values["selection"],
                seed_labels=values["seed_labels"],
                removal=values["removal"],
                removal_rank=rank,
                inlp_rounds=int(values["inlp_rounds"]),
                y=values["y"],
                y_kind=values["y_kind"],
                truth=values["truth"],
            )
        except ValueError as exc:
            raise FormatError(f"{source}: bad field value: {exc}") from None

    def validate(self):
        if self.removal not in (SAL, INLP):
            raise InvalidInput(f"removal must be 'sal' or 'inlp', got {self.removal!r}")
        if self.y_kind not in ("classification", "regression", "none"):
            raise InvalidInput("y_kind must be classification, regression or none")
        if self.selection == "partial" and not self.seed_labels:
            raise InvalidInput("partial selection requires a seed_labels file")
        if self.y_kind != "none" and not self.y:
            raise InvalidInput(f"y_kind={self.y_kind} requires a y file")
        for key in ("x", "records", "seed_labels", "y", "truth"):
            path = getattr(self, key)
            if path and not Path(path).exists():
                raise InvalidInput(f"{key} file not found: {path}")


def run_pipeline(cfg):
    """align -> erase -> eval in one deterministic pass.

    Writes assignment.csv, eraser.bin, x_erased.bin, trace.csv and
    report.txt under cfg.output_dir and returns the EvalReport. All
    randomness flows from cfg.rng_seed, so reruns are byte identical.
    """
    cfg.validate()
    x = load_matrix(cfg.x)
    z = load_matrix(cfg.records)
    n, m = x.shape[0], z.shape[0]
    priors = np.asarray(cfg.priors if cfg.priors else np.full(m, 1.0 / m))
    if priors.size != m:
        raise InvalidInput(f"{priors.size} priors for {m} records")
    lower, upper = bounds_from_priors(priors, n, cfg.slack)
    records = GuardedRecords(z, lower, upper)

    truth = load_assignment(cfg.truth) if cfg.truth else None
    seed_labels = load_seed_labels(cfg.seed_labels) if cfg.seed_labels else None
    amsal_cfg = AmsalConfig(
        max_iterations=cfg.max_iterations,
        num_seeds=cfg.num_seeds,
        slack=cfg.slack,
        score_k=cfg.score_k,
        selection=cfg.selection,
        seed_labels=seed_labels,
        rng_seed=cfg.rng_seed,
    )
    result = run_amsal(x, records, amsal_cfg, truth=truth)

    if cfg.removal == SAL:
        eraser = fit_sal(x, records, result.assignment, cfg.removal_rank)
    else:
        eraser = fit_inlp(x, result.assignment.map, cfg.inlp_rounds)
    erased = apply_eraser(eraser, x)

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_assignment(result.assignment, out / "assignment.csv")
    save_eraser(eraser, out / "eraser.bin")
    save_matrix(erased, out / "x_erased.bin", fmt=BIN)
    save_trace(result.trace, out / "trace.csv")

    report = _evaluate(cfg, erased, result, truth)
    save_report(report, out / "report.txt")
    return report


def _evaluate(cfg, erased, result, truth):
    align_acc = (
        alignment_accuracy(result.assignment, truth) if truth is not None else None
    )
    groups = truth.map if truth is not None else result.assignment.map
    if cfg.y_kind == "classification":
        y = load_labels(cfg.y)
        classes, y_idx = np.unique(y, return_inverse=True)
        w, b = fit_logistic_probe(erased, y_idx, classes.size)
        preds = (erased @ w.T + b).argmax(axis=1)
        gap = (
            tpr_gap_rms(y_idx, preds, groups) if np.unique(groups).size == 2 else None
        )
        return EvalReport(
            task_accuracy=accuracy(y_idx, preds),
            f1_macro=f1_macro(y_idx, preds),
            tpr_gap_rms=gap,
            alignment_accuracy=align_acc,
        )
    if cfg.y_kind == "regression":
        y = load_values(cfg.y)
        design = np.hstack([erased, np.ones((erased.shape[0], 1))])
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        preds = design @ coef
        errs = np.abs(preds - y)
        return EvalReport(
            mae=mae(y, preds),
            mae_gap=mae_gap(errs, groups),
            alignment_accuracy=align_acc,
        )
    return EvalReport(alignment_accuracy=align_acc)
