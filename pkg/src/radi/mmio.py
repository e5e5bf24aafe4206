"""Matrix Market reader and writer.

Supports the coordinate (sparse) and array (dense) formats with real or
integer values in general or symmetric storage, which covers the
benchmark collections this harness ingests. The reader reports the line
number of the first offending entry; the writer emits 17 significant
digits so that write-then-read round-trips are bit exact.
"""

import numpy as np
import scipy.sparse as sps

from .exceptions import MatrixMarketError

_HEADER_PREFIX = "%%matrixmarket"


def read_matrix_market(path):
    """Read a Matrix Market file into a CSR matrix (coordinate) or ndarray (array).

    Symmetric storage is expanded to the full matrix.
    """
    with open(path) as fh:
        lines = fh.readlines()
    if not lines:
        raise MatrixMarketError(path, 1, "empty file")
    header = lines[0].strip().lower().split()
    if len(header) != 5 or header[0] != _HEADER_PREFIX or header[1] != "matrix":
        raise MatrixMarketError(path, 1, f"malformed header: {lines[0].strip()!r}")
    fmt, field, symmetry = header[2], header[3], header[4]
    if fmt not in ("coordinate", "array"):
        raise MatrixMarketError(path, 1, f"unsupported format {fmt!r}")
    if field not in ("real", "integer"):
        raise MatrixMarketError(path, 1, f"unsupported field {field!r}")
    if symmetry not in ("general", "symmetric"):
        raise MatrixMarketError(path, 1, f"unsupported symmetry {symmetry!r}")

    body = [
        (lineno, line.strip())
        for lineno, line in enumerate(lines[1:], start=2)
        if line.strip() and not line.lstrip().startswith("%")
    ]
    if not body:
        raise MatrixMarketError(path, len(lines), "missing size line")
    size_lineno, size_line = body[0]
    entries = body[1:]
    if fmt == "coordinate":
        return _read_coordinate(path, size_lineno, size_line, entries, symmetry)
    return _read_array(path, size_lineno, size_line, entries, symmetry)


def _read_coordinate(path, size_lineno, size_line, entries, symmetry):
    parts = size_line.split()
    if len(parts) != 3:
        raise MatrixMarketError(path, size_lineno, f"expected 'rows cols nnz', got {size_line!r}")
    try:
        nrows, ncols, nnz = (int(p) for p in parts)
    except ValueError as exc:
        raise MatrixMarketError(path, size_lineno, str(exc)) from exc
    if len(entries) != nnz:
        raise MatrixMarketError(
            path, size_lineno, f"declared {nnz} entries but file has {len(entries)}"
        )
    data_i, data_j, data_v = [], [], []
    for lineno, line in entries:
        parts = line.split()
        if len(parts) != 3:
            raise MatrixMarketError(path, lineno, f"expected 'i j value', got {line!r}")
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError as exc:
            raise MatrixMarketError(path, lineno, str(exc)) from exc
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            raise MatrixMarketError(path, lineno, f"index ({i}, {j}) out of range")
        data_i.append(i - 1)
        data_j.append(j - 1)
        data_v.append(v)
        if symmetry == "symmetric" and i != j:
            data_i.append(j - 1)
            data_j.append(i - 1)
            data_v.append(v)
    mat = sps.coo_matrix((data_v, (data_i, data_j)), shape=(nrows, ncols))
    return mat.tocsr()


def _read_array(path, size_lineno, size_line, entries, symmetry):
    parts = size_line.split()
    if len(parts) != 2:
        raise MatrixMarketError(path, size_lineno, f"expected 'rows cols', got {size_line!r}")
    try:
        nrows, ncols = int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise MatrixMarketError(path, size_lineno, str(exc)) from exc
    if symmetry == "symmetric":
        if nrows != ncols:
            raise MatrixMarketError(path, size_lineno, "symmetric matrix must be square")
        expected = nrows * (nrows + 1) // 2
    else:
        expected = nrows * ncols
    if len(entries) != expected:
        raise MatrixMarketError(
            path,
            size_lineno,
            f"expected {expected} value lines for {nrows}x{ncols} {symmetry}, got {len(entries)}",
        )
    values = np.empty(expected)
    for pos, (lineno, line) in enumerate(entries):
        try:
            values[pos] = float(line)
        except ValueError as exc:
            raise MatrixMarketError(path, lineno, str(exc)) from exc
    if symmetry == "symmetric":
        mat = np.empty((nrows, ncols))
        at = 0
        for j in range(ncols):
            run = nrows - j
            mat[j:, j] = values[at : at + run]
            mat[j, j:] = values[at : at + run]
            at += run
        return mat
    # Column-major per the format definition.
    return values.reshape((ncols, nrows)).T.copy()


def write_matrix_market(path, mat, comment=""):
    """Write a matrix in coordinate (sparse input) or array (dense input) format."""
    with open(path, "w") as fh:
        if sps.issparse(mat):
            coo = mat.tocoo()
            fh.write("%%MatrixMarket matrix coordinate real general\n")
            if comment:
                fh.write(f"% {comment}\n")
            fh.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
            for i, j, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{i + 1} {j + 1} {v:.17g}\n")
        else:
            arr = np.atleast_2d(np.asarray(mat, dtype=float))
            fh.write("%%MatrixMarket matrix array real general\n")
            if comment:
                fh.write(f"% {comment}\n")
            fh.write(f"{arr.shape[0]} {arr.shape[1]}\n")
            for j in range(arr.shape[1]):
                for i in range(arr.shape[0]):
                    fh.write(f"{arr[i, j]:.17g}\n")
