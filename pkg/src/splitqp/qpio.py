"""On-disk format for QP instances and solver results.

Instances are UTF-8 JSON with a fixed key order. Value arrays are written
as C99 hex-float strings so every finite double round-trips bit-exactly;
infinite bounds are stored as +/-1e30 (the package-wide infinity
threshold). write -> read is the identity on canonical problems.
"""

import json
import math

import numpy as np

from .problem import ProblemData
from .sparse import INFTY, SparseError, csc_from_triplets

FORMAT_VERSION = 1


class QpFileError(ValueError):
    pass


def _hex_list(values):
    return [float(v).hex() for v in values]


def _bound_hex_list(values):
    out = []
    for v in values:
        v = float(v)
        if v == math.inf or v >= INFTY:
            v = INFTY
        elif v == -math.inf or v <= -INFTY:
            v = -INFTY
        out.append(v.hex())
    return out


def _parse_float(token, where):
    if isinstance(token, str):
        try:
            return float.fromhex(token)
        except ValueError:
            raise QpFileError(f"bad hex float {token!r} in {where}")
    if isinstance(token, (int, float)):
        return float(token)
    raise QpFileError(f"non-numeric value in {where}")


def _triplet_block(M):
    rows, cols, vals = M.triplets()
    return {"rows": [int(r) for r in rows],
            "cols": [int(c) for c in cols],
            "vals": _hex_list(vals)}


def problem_to_dict(problem):
    doc = {
        "format_version": FORMAT_VERSION,
        "n": problem.n,
        "m": problem.m,
        "P": _triplet_block(problem.P),
        "q": _hex_list(problem.q),
        "A": _triplet_block(problem.A),
        "l": _bound_hex_list(problem.l),
        "u": _bound_hex_list(problem.u),
    }
    if problem.metadata:
        doc["metadata"] = problem.metadata
    return doc


def write_qp(problem, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_dict(problem), fh, separators=(",", ":"))
        fh.write("\n")


def _read_triplets(block, nrows, ncols, name):
    if not isinstance(block, dict):
        raise QpFileError(f"{name} must be a triplet object")
    for key in ("rows", "cols", "vals"):
        if key not in block:
            raise QpFileError(f"{name} is missing field {key!r}")
    rows = block["rows"]
    cols = block["cols"]
    vals = [_parse_float(v, f"{name}.vals[{i}]")
            for i, v in enumerate(block["vals"])]
    if not (len(rows) == len(cols) == len(vals)):
        raise QpFileError(f"{name} triplet arrays have unequal lengths")
    for i, (r, c) in enumerate(zip(rows, cols)):
        if not (0 <= r < nrows) or not (0 <= c < ncols):
            raise QpFileError(f"{name} entry {i} at ({r}, {c}) out of range")
    try:
        return csc_from_triplets(rows, cols, vals, nrows, ncols,
                                 sum_duplicates=False)
    except SparseError as exc:
        raise QpFileError(f"{name}: {exc}")


def problem_from_dict(doc):
    if doc.get("format_version") != FORMAT_VERSION:
        raise QpFileError(
            f"unsupported format_version {doc.get('format_version')!r}")
    try:
        n = int(doc["n"])
        m = int(doc["m"])
    except (KeyError, TypeError, ValueError):
        raise QpFileError("missing or malformed n/m")
    if n < 1 or m < 0:
        raise QpFileError("dimensions must satisfy n >= 1, m >= 0")
    P = _read_triplets(doc["P"], n, n, "P")
    if not P.is_upper_triangular():
        raise QpFileError("P must contain upper-triangular entries only")
    A = _read_triplets(doc["A"], m, n, "A")
    q = np.array([_parse_float(v, f"q[{i}]") for i, v in enumerate(doc["q"])])
    l = np.array([_parse_float(v, f"l[{i}]") for i, v in enumerate(doc["l"])])
    u = np.array([_parse_float(v, f"u[{i}]") for i, v in enumerate(doc["u"])])
    if q.shape != (n,):
        raise QpFileError("q has wrong length")
    if l.shape != (m,) or u.shape != (m,):
        raise QpFileError("bounds have wrong length")
    l[l <= -INFTY] = -np.inf
    u[u >= INFTY] = np.inf
    for i in range(m):
        if l[i] > u[i]:
            raise QpFileError(f"inconsistent bounds at row {i}: "
                              f"l={l[i]} > u={u[i]}")
    return ProblemData(P, q, A, l, u, metadata=doc.get("metadata"))


def read_qp(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise QpFileError(f"malformed JSON: {exc}")
    return problem_from_dict(doc)


def write_result(result, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(result.to_dict(), fh, separators=(",", ":"))
        fh.write("\n")
