"""Matrix file input and output.

Two on-disk representations are understood:

* Matrix Market (the NIST exchange format): both `coordinate` and `array`
  layouts, fields real / complex / integer / pattern, symmetries general /
  symmetric / skew-symmetric / hermitian. Coordinate files come back as a
  SparsePair, array files as a DenseMatrix. Pattern entries become exact
  integer ones, so a pattern file's permanent is a perfect-matching count.

* Dense text: one matrix row per line, whitespace-separated values, with
  `#` or `%` comment lines. The scalar kind is inferred (all-integer input
  stays exact).

Errors carry 1-based line numbers. Matrices must be square with
1 <= n <= 63; larger inputs are structurally impossible for the 64-bit
Gray-walk state and are refused up front.
"""

from __future__ import annotations

from pathlib import Path
from typing import List, Tuple, Union

from .errors import ImpossibleError, ParseError
from .matrix import (
    KIND_COMPLEX,
    KIND_INT,
    KIND_REAL,
    N_MAX,
    DenseMatrix,
    Scalar,
    SparsePair,
    sparse_from_triplets,
)

MatrixLike = Union[DenseMatrix, SparsePair]

_FIELDS = {"real", "complex", "integer", "pattern"}
_SYMMETRIES = {"general", "symmetric", "skew-symmetric", "hermitian"}
_FIELD_KIND = {"real": KIND_REAL, "complex": KIND_COMPLEX, "integer": KIND_INT, "pattern": KIND_INT}


def detect_format(path: Union[str, Path]) -> str:
    """'matrix-market' when the banner is present, else 'dense-text'."""
    with open(path, "r") as fh:
        first = fh.readline()
    return "matrix-market" if first.startswith("%%MatrixMarket") else "dense-text"


def ingest(path: Union[str, Path], format: str = "auto") -> MatrixLike:
    """Load a matrix file; the format is sniffed unless named explicitly."""
    if format == "auto":
        format = detect_format(path)
    if format == "matrix-market":
        return read_matrix_market(path)
    if format == "dense-text":
        return read_dense_text(path)
    raise ValueError(f"unknown format {format!r}")


def _check_square(rows: int, cols: int, line: int) -> None:
    if rows != cols:
        raise ParseError(f"matrix is {rows}x{cols}; only square matrices are supported", line)
    if rows < 1:
        raise ParseError("matrix must have at least one row", line)
    if rows > N_MAX:
        raise ImpossibleError(
            f"matrix has n = {rows} rows; the iteration state is a 64-bit word, n <= {N_MAX}"
        )


def _parse_value(tokens: List[str], field: str, line: int) -> Scalar:
    try:
        if field == "pattern":
            return 1
        if field == "integer":
            return int(tokens[0])
        if field == "real":
            return float(tokens[0])
        return complex(float(tokens[0]), float(tokens[1]))
    except (ValueError, IndexError):
        raise ParseError(f"bad {field} value {' '.join(tokens)!r}", line) from None


def _value_width(field: str) -> int:
    return {"pattern": 0, "integer": 1, "real": 1, "complex": 2}[field]


def read_matrix_market(path: Union[str, Path]) -> MatrixLike:
    """Parse one Matrix Market file (coordinate -> sparse, array -> dense)."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty file", 1)
    banner = lines[0].split()
    if len(banner) != 5 or banner[0] != "%%MatrixMarket" or banner[1].lower() != "matrix":
        raise ParseError(
            "expected banner '%%MatrixMarket matrix <format> <field> <symmetry>'", 1
        )
    layout, field, symmetry = (t.lower() for t in banner[2:5])
    if layout not in ("coordinate", "array"):
        raise ParseError(f"unsupported layout {layout!r}", 1)
    if field not in _FIELDS:
        raise ParseError(f"unsupported field {field!r}", 1)
    if symmetry not in _SYMMETRIES:
        raise ParseError(f"unsupported symmetry {symmetry!r}", 1)
    if field == "pattern" and symmetry in ("skew-symmetric", "hermitian"):
        raise ParseError(f"pattern field cannot be {symmetry}", 1)
    if field != "complex" and symmetry == "hermitian":
        raise ParseError("hermitian symmetry needs the complex field", 1)

    # data lines with their 1-based numbers, comments and blanks skipped
    data: List[Tuple[int, List[str]]] = []
    for ln, raw in enumerate(lines[1:], start=2):
        stripped = raw.strip()
        if not stripped or stripped.startswith("%"):
            continue
        data.append((ln, stripped.split()))
    if not data:
        raise ParseError("missing size line", len(lines))

    if layout == "coordinate":
        return _read_coordinate(data, field, symmetry)
    return _read_array(data, field, symmetry)


def _read_coordinate(data, field: str, symmetry: str) -> SparsePair:
    ln0, size = data[0]
    if len(size) != 3:
        raise ParseError("coordinate size line must be 'rows cols nnz'", ln0)
    try:
        rows, cols, nnz = (int(t) for t in size)
    except ValueError:
        raise ParseError(f"bad size line {' '.join(size)!r}", ln0) from None
    _check_square(rows, cols, ln0)
    n = rows
    entries = data[1:]
    if len(entries) != nnz:
        where = entries[nnz][0] if len(entries) > nnz else entries[-1][0] if entries else ln0
        raise ParseError(f"expected {nnz} entries, found {len(entries)}", where)
    width = _value_width(field)
    triplets: List[Tuple[int, int, Scalar]] = []
    seen = {}
    for ln, toks in entries:
        if len(toks) != 2 + width:
            raise ParseError(f"expected 'i j{' v' * max(width, 1) if width else ''}'", ln)
        try:
            i, j = int(toks[0]), int(toks[1])
        except ValueError:
            raise ParseError(f"bad indices {toks[0]!r} {toks[1]!r}", ln) from None
        if not (1 <= i <= n and 1 <= j <= n):
            raise ParseError(f"entry ({i}, {j}) outside the {n}x{n} matrix", ln)
        v = _parse_value(toks[2:], field, ln)
        i -= 1
        j -= 1
        if (i, j) in seen:
            raise ParseError(f"duplicate entry ({i + 1}, {j + 1}), first at line {seen[(i, j)]}", ln)
        seen[(i, j)] = ln
        if symmetry != "general" and i < j:
            raise ParseError(
                f"{symmetry} files store the lower triangle; entry ({i + 1}, {j + 1}) is above the diagonal",
                ln,
            )
        if symmetry == "skew-symmetric" and i == j:
            raise ParseError("skew-symmetric matrices have no stored diagonal", ln)
        triplets.append((i, j, v))
        if symmetry != "general" and i != j:
            if (j, i) in seen:
                raise ParseError(f"duplicate entry ({j + 1}, {i + 1}) via symmetry", ln)
            seen[(j, i)] = ln
            if symmetry == "symmetric":
                mirror = v
            elif symmetry == "skew-symmetric":
                mirror = -v
            else:  # hermitian
                mirror = complex(v).conjugate()
            triplets.append((j, i, mirror))
    return sparse_from_triplets(n, triplets, _FIELD_KIND[field])


def _read_array(data, field: str, symmetry: str) -> DenseMatrix:
    if field == "pattern":
        raise ParseError("array layout cannot use the pattern field", data[0][0])
    ln0, size = data[0]
    if len(size) != 2:
        raise ParseError("array size line must be 'rows cols'", ln0)
    try:
        rows, cols = int(size[0]), int(size[1])
    except ValueError:
        raise ParseError(f"bad size line {' '.join(size)!r}", ln0) from None
    _check_square(rows, cols, ln0)
    n = rows
    if symmetry == "general":
        coords = [(i, j) for j in range(n) for i in range(n)]  # column-major
    elif symmetry == "skew-symmetric":
        coords = [(i, j) for j in range(n) for i in range(j + 1, n)]
    else:
        coords = [(i, j) for j in range(n) for i in range(j, n)]
    entries = data[1:]
    if len(entries) != len(coords):
        where = entries[-1][0] if entries else ln0
        raise ParseError(f"expected {len(coords)} values, found {len(entries)}", where)
    width = _value_width(field)
    kind = _FIELD_KIND[field]
    zero: Scalar = {KIND_REAL: 0.0, KIND_COMPLEX: complex(0.0), KIND_INT: 0}[kind]
    grid: List[List[Scalar]] = [[zero] * n for _ in range(n)]
    for (ln, toks), (i, j) in zip(entries, coords):
        if len(toks) != width:
            raise ParseError(f"expected {width} value token(s)", ln)
        v = _parse_value(toks, field, ln)
        grid[i][j] = v
        if i != j and symmetry != "general":
            if symmetry == "symmetric":
                grid[j][i] = v
            elif symmetry == "skew-symmetric":
                grid[j][i] = -v
            else:
                grid[j][i] = complex(v).conjugate()
    return DenseMatrix.from_rows(grid, kind=kind)


def read_dense_text(path: Union[str, Path]) -> DenseMatrix:
    """Parse whitespace-separated rows; `#`/`%` lines are comments."""
    rows: List[List[Scalar]] = []
    first_ln = None
    for ln, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped[0] in "#%":
            continue
        if first_ln is None:
            first_ln = ln
        row: List[Scalar] = []
        for tok in stripped.split():
            row.append(_infer_scalar(tok, ln))
        if rows and len(row) != len(rows[0]):
            raise ParseError(
                f"row has {len(row)} values, previous rows have {len(rows[0])}", ln
            )
        rows.append(row)
    if not rows:
        raise ParseError("no matrix rows found", 1)
    _check_square(len(rows), len(rows[0]), first_ln or 1)
    return DenseMatrix.from_rows(rows)


def _infer_scalar(tok: str, ln: int) -> Scalar:
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        return float(tok)
    except ValueError:
        pass
    try:
        return complex(tok)
    except ValueError:
        raise ParseError(f"cannot parse value {tok!r}", ln) from None


def _format_value(v: Scalar, kind: str) -> str:
    if kind == KIND_INT:
        return str(int(v))
    if kind == KIND_COMPLEX:
        c = complex(v)
        return f"{c.real!r} {c.imag!r}"
    return repr(float(v))


def write_matrix_market(path: Union[str, Path], m: MatrixLike, comment: str = "") -> None:
    """Write a matrix back out: dense -> array layout, sparse -> coordinate.

    Values round-trip exactly (repr for floats, exact decimals for ints).
    """
    kind = m.kind
    field = {KIND_REAL: "real", KIND_COMPLEX: "complex", KIND_INT: "integer"}[kind]
    lines: List[str] = []
    if isinstance(m, DenseMatrix):
        lines.append(f"%%MatrixMarket matrix array {field} general")
        if comment:
            lines.extend(f"% {c}" for c in comment.splitlines())
        lines.append(f"{m.n} {m.n}")
        for j in range(m.n):
            for i in range(m.n):
                lines.append(_format_value(m.entry(i, j), kind))
    else:
        lines.append(f"%%MatrixMarket matrix coordinate {field} general")
        if comment:
            lines.extend(f"% {c}" for c in comment.splitlines())
        trips = m.crs.triplets()
        lines.append(f"{m.n} {m.n} {len(trips)}")
        for (i, j, v) in trips:
            lines.append(f"{i + 1} {j + 1} {_format_value(v, kind)}")
    Path(path).write_text("\n".join(lines) + "\n")
