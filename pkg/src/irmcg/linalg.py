"""Vectors, symmetric matrices, the small projected solve, and energy.

Everything here is generic over the two scalar backends from
:mod:`irmcg.arithmetic`.  Exact data lives in tuples of Fractions;
double data lives in read-only NumPy arrays, with the packed symmetric
matvec delegated to :mod:`irmcg._kernels`.

Storage is structural: a symmetric matrix is either a packed lower
triangle (row-major, n(n+1)/2 scalars) or a diagonal (n scalars), so
symmetry can never be violated by construction.
"""

import math
from fractions import Fraction

import numpy as np

from . import _kernels
from .arithmetic import (
    EXACT,
    F64,
    ONE,
    ZERO,
    demote,
    format_rational,
    parse_rational,
    rationalize,
    snap_zero,
)
from .errors import (
    DimensionError,
    ExactRequired,
    FormatError,
    InvalidScalar,
    IoError,
    NotSPD,
    SingularRitzSystem,
)

# Cap on the number of coordinate vectors per generic IRM step.
M_MAX = 4

DENSE = "dense"
DIAGONAL = "diagonal"


def _tri(i):
    return i * (i + 1) // 2


class Vector:
    """Fixed-length vector over one scalar backend."""

    __slots__ = ("data", "field")

    def __init__(self, entries, field):
        if field == EXACT:
            data = tuple(Fraction(e) for e in entries)
            if len(data) < 1:
                raise DimensionError("vector must have length >= 1")
            self.data = data
        elif field == F64:
            arr = np.array(entries, dtype=np.float64)
            if arr.ndim != 1 or arr.shape[0] < 1:
                raise DimensionError("vector must have length >= 1")
            if not np.all(np.isfinite(arr)):
                raise InvalidScalar("vector contains NaN or infinity")
            arr.flags.writeable = False
            self.data = arr
        else:
            raise ValueError("unknown field %r" % field)
        self.field = field

    @classmethod
    def exact(cls, entries):
        return cls(entries, EXACT)

    @classmethod
    def f64(cls, entries):
        return cls(entries, F64)

    @classmethod
    def zeros(cls, n, field):
        if field == EXACT:
            return cls([ZERO] * n, EXACT)
        return cls(np.zeros(n), F64)

    def __len__(self):
        return len(self.data)

    def __getitem__(self, i):
        return self.data[i]

    def __iter__(self):
        return iter(self.data)

    def __eq__(self, other):
        if not isinstance(other, Vector) or other.field != self.field:
            return NotImplemented
        if len(self) != len(other):
            return False
        if self.field == EXACT:
            return self.data == other.data
        return bool(np.array_equal(self.data, other.data))

    __hash__ = None

    def __repr__(self):
        return "Vector(%s, %s)" % (list(self.data), self.field)

    def is_zero(self):
        if self.field == EXACT:
            return all(e == 0 for e in self.data)
        return not np.any(self.data)


class SymmetricMatrix:
    """Symmetric matrix stored as packed lower triangle or diagonal.

    The _spd slot caches the outcome of spd_check; it starts unknown
    (None) and is the only mutable piece of state.
    """

    __slots__ = ("kind", "n", "data", "field", "_spd")

    def __init__(self, kind, n, data, field):
        if kind not in (DENSE, DIAGONAL):
            raise ValueError("unknown matrix kind %r" % kind)
        if n < 1:
            raise DimensionError("matrix order must be >= 1")
        want = _tri(n) if kind == DENSE else n
        if field == EXACT:
            entries = tuple(Fraction(e) for e in data)
            if len(entries) != want:
                raise DimensionError(
                    "expected %d packed entries, got %d" % (want, len(entries))
                )
            self.data = entries
        elif field == F64:
            arr = np.array(data, dtype=np.float64)
            if arr.ndim != 1 or arr.shape[0] != want:
                raise DimensionError(
                    "expected %d packed entries, got %d" % (want, arr.size)
                )
            if not np.all(np.isfinite(arr)):
                raise InvalidScalar("matrix contains NaN or infinity")
            arr.flags.writeable = False
            self.data = arr
        else:
            raise ValueError("unknown field %r" % field)
        self.kind = kind
        self.n = n
        self.field = field
        self._spd = None

    @classmethod
    def diagonal(cls, entries, field=EXACT):
        entries = list(entries)
        return cls(DIAGONAL, len(entries), entries, field)

    @classmethod
    def dense(cls, packed, n, field=EXACT):
        return cls(DENSE, n, packed, field)

    @classmethod
    def from_rows(cls, rows, field=EXACT):
        """Build from a full square array of rows; symmetry is verified."""
        n = len(rows)
        if any(len(row) != n for row in rows):
            raise DimensionError("rows do not form a square matrix")
        for i in range(n):
            for j in range(i):
                if rows[i][j] != rows[j][i]:
                    raise ValueError("matrix is not symmetric at (%d, %d)" % (i, j))
        packed = [rows[i][j] for i in range(n) for j in range(i + 1)]
        return cls(DENSE, n, packed, field)

    def entry(self, i, j):
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise DimensionError("index out of range")
        if self.kind == DIAGONAL:
            if i == j:
                return self.data[i]
            return ZERO if self.field == EXACT else 0.0
        if j > i:
            i, j = j, i
        return self.data[_tri(i) + j]

    def diag(self):
        if self.kind == DIAGONAL:
            return list(self.data)
        return [self.data[_tri(i) + i] for i in range(self.n)]

    def full(self):
        """Expand to a full square representation (small n only)."""
        if self.field == F64:
            out = np.zeros((self.n, self.n))
            if self.kind == DIAGONAL:
                np.fill_diagonal(out, self.data)
            else:
                k = 0
                for i in range(self.n):
                    for j in range(i + 1):
                        out[i, j] = self.data[k]
                        out[j, i] = self.data[k]
                        k += 1
            return out
        return [[self.entry(i, j) for j in range(self.n)] for i in range(self.n)]

    def __eq__(self, other):
        if not isinstance(other, SymmetricMatrix):
            return NotImplemented
        if (self.kind, self.n, self.field) != (other.kind, other.n, other.field):
            return False
        if self.field == EXACT:
            return self.data == other.data
        return bool(np.array_equal(self.data, other.data))

    __hash__ = None

    def __repr__(self):
        return "SymmetricMatrix(%s, n=%d, %s)" % (self.kind, self.n, self.field)


def _want_same_field(*objs):
    fields = {o.field for o in objs}
    if len(fields) != 1:
        raise DimensionError("mixed scalar backends in one operation")
    return fields.pop()


def dot(u, v):
    """Inner product u . v in the common backend."""
    field = _want_same_field(u, v)
    if len(u) != len(v):
        raise DimensionError("length %d vs %d" % (len(u), len(v)))
    if field == EXACT:
        acc = ZERO
        for a, b in zip(u.data, v.data):
            acc += a * b
        return acc
    return float(np.dot(u.data, v.data))


def vadd(u, v):
    field = _want_same_field(u, v)
    if len(u) != len(v):
        raise DimensionError("length %d vs %d" % (len(u), len(v)))
    if field == EXACT:
        return Vector([a + b for a, b in zip(u.data, v.data)], EXACT)
    return Vector(u.data + v.data, F64)


def vsub(u, v):
    field = _want_same_field(u, v)
    if len(u) != len(v):
        raise DimensionError("length %d vs %d" % (len(u), len(v)))
    if field == EXACT:
        return Vector([a - b for a, b in zip(u.data, v.data)], EXACT)
    return Vector(u.data - v.data, F64)


def vscale(c, v):
    if v.field == EXACT:
        c = Fraction(c)
        return Vector([c * a for a in v.data], EXACT)
    return Vector(float(c) * v.data, F64)


def add_scaled(u, c, v):
    """u + c * v without forming the intermediate scaled vector."""
    field = _want_same_field(u, v)
    if len(u) != len(v):
        raise DimensionError("length %d vs %d" % (len(u), len(v)))
    if field == EXACT:
        c = Fraction(c)
        return Vector([a + c * b for a, b in zip(u.data, v.data)], EXACT)
    return Vector(u.data + float(c) * v.data, F64)


def add_to_entry(v, index, delta):
    """Copy of v with delta added to one 0-based component."""
    if not (0 <= index < len(v)):
        raise DimensionError("component index out of range")
    if v.field == EXACT:
        entries = list(v.data)
        entries[index] = entries[index] + Fraction(delta)
        return Vector(entries, EXACT)
    arr = v.data.copy()
    arr[index] += float(delta)
    return Vector(arr, F64)


def matvec(A, v):
    """Product A v, exploiting the packed symmetric layout in one pass."""
    field = _want_same_field(A, v)
    if A.n != len(v):
        raise DimensionError("matrix order %d vs vector length %d" % (A.n, len(v)))
    if A.kind == DIAGONAL:
        if field == EXACT:
            return Vector([d * x for d, x in zip(A.data, v.data)], EXACT)
        return Vector(A.data * v.data, F64)
    if field == F64:
        return Vector(_kernels.symv_packed(A.data, v.data), F64)
    n = A.n
    out = [ZERO] * n
    k = 0
    for i in range(n):
        s = ZERO
        vi = v.data[i]
        for j in range(i):
            a = A.data[k]
            if a:
                s += a * v.data[j]
                out[j] += a * vi
            k += 1
        out[i] += s + A.data[k] * vi
        k += 1
    return Vector(out, EXACT)


class RitzSystem:
    """Small projected system abar a = rbar (m <= M_MAX).

    abar is assembled symmetrically by the callers, so the symmetry
    invariant is structural; the constructor still verifies it.
    """

    __slots__ = ("abar", "rbar", "m", "field")

    def __init__(self, abar, rbar, field):
        m = len(rbar)
        if not 1 <= m <= M_MAX:
            raise ValueError("projected system size %d outside 1..%d" % (m, M_MAX))
        if len(abar) != m or any(len(row) != m for row in abar):
            raise DimensionError("abar is not %d x %d" % (m, m))
        for i in range(m):
            for j in range(i):
                if abar[i][j] != abar[j][i]:
                    raise ValueError("abar is not symmetric")
        if field == EXACT:
            self.abar = tuple(tuple(Fraction(e) for e in row) for row in abar)
            self.rbar = tuple(Fraction(e) for e in rbar)
        else:
            self.abar = tuple(tuple(float(e) for e in row) for row in abar)
            self.rbar = tuple(float(e) for e in rbar)
        self.m = m
        self.field = field


def _small_solve_exact(abar, rbar, m):
    # Fraction-free elimination: clear denominators per equation, then
    # Bareiss with row pivoting so intermediates stay integer and small.
    aug = []
    for i in range(m):
        row = [Fraction(abar[i][j]) for j in range(m)] + [Fraction(rbar[i])]
        scale = 1
        for e in row:
            scale = scale * e.denominator // math.gcd(scale, e.denominator)
        aug.append([int(e * scale) for e in row])
    prev = 1
    for k in range(m):
        pivot_row = next((r for r in range(k, m) if aug[r][k] != 0), None)
        if pivot_row is None:
            raise SingularRitzSystem("projected matrix is singular")
        if pivot_row != k:
            aug[k], aug[pivot_row] = aug[pivot_row], aug[k]
        if k == m - 1:
            break
        for i in range(k + 1, m):
            for j in range(k + 1, m + 1):
                num = aug[k][k] * aug[i][j] - aug[i][k] * aug[k][j]
                q, rem = divmod(num, prev)
                if rem:
                    raise AssertionError("fraction-free elimination lost exactness")
                aug[i][j] = q
            aug[i][k] = 0
        prev = aug[k][k]
    sol = [ZERO] * m
    for i in range(m - 1, -1, -1):
        s = Fraction(aug[i][m])
        for j in range(i + 1, m):
            s -= aug[i][j] * sol[j]
        sol[i] = s / aug[i][i]
    return sol


def _small_solve_f64(abar, rbar, m):
    aug = [list(abar[i]) + [rbar[i]] for i in range(m)]
    for k in range(m):
        pivot_row = max(range(k, m), key=lambda r: abs(aug[r][k]))
        if aug[pivot_row][k] == 0.0:
            raise SingularRitzSystem("projected matrix is singular")
        if pivot_row != k:
            aug[k], aug[pivot_row] = aug[pivot_row], aug[k]
        for i in range(k + 1, m):
            f = aug[i][k] / aug[k][k]
            for j in range(k, m + 1):
                aug[i][j] -= f * aug[k][j]
    sol = [0.0] * m
    for i in range(m - 1, -1, -1):
        s = aug[i][m]
        for j in range(i + 1, m):
            s -= aug[i][j] * sol[j]
        sol[i] = s / aug[i][i]
    return sol


def small_solve(sys):
    """Solve the projected system exactly (rational) or by partial pivoting (f64)."""
    if sys.field == EXACT:
        return Vector(_small_solve_exact(sys.abar, sys.rbar, sys.m), EXACT)
    return Vector(_small_solve_f64(list(map(list, sys.abar)), list(sys.rbar), sys.m), F64)


def spd_check(A):
    """True iff A is symmetric positive definite; caches the result on A.

    Exact backend: all pivots of the LDL^T factorization are positive
    (a zero or negative pivot proves a nonpositive leading minor).
    Double backend: Cholesky factorization success.
    """
    if A.kind == DIAGONAL:
        ok = all(d > 0 for d in A.data)
    elif A.field == EXACT:
        ok = _spd_exact(A)
    else:
        try:
            np.linalg.cholesky(A.full())
            ok = True
        except np.linalg.LinAlgError:
            ok = False
    A._spd = ok
    return ok


def _spd_exact(A):
    n = A.n
    work = [[A.entry(i, j) for j in range(n)] for i in range(n)]
    for k in range(n):
        d = work[k][k]
        if d <= 0:
            return False
        for i in range(k + 1, n):
            f = work[i][k] / d
            if f:
                for j in range(k, n):
                    work[i][j] -= f * work[k][j]
    return True


def ensure_spd(A):
    if A._spd is None:
        spd_check(A)
    if not A._spd:
        raise NotSPD("matrix failed the SPD check")


def energy(A, b, x):
    """Quadratic objective (1/2) x.Ax - x.b, minimized at the solution."""
    half = Fraction(1, 2) if x.field == EXACT else 0.5
    return half * dot(x, matvec(A, x)) - dot(x, b)


def _power_iter(F, rng, max_iter=20000, tol=1e-14):
    n = F.shape[0]
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = F @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        new = float(v @ w)
        v = w / norm
        if abs(new - lam) <= tol * max(abs(new), 1.0):
            return new
        lam = new
    return lam


def condition_estimate(A):
    """Ratio of extreme eigenvalues as a double.

    Exact for the diagonal representation; a power-iteration estimate
    (dominant eigenvalue, then the shifted complement for the smallest)
    for dense matrices.  Callers should label dense results as estimates.
    """
    ensure_spd(A)
    if A.kind == DIAGONAL:
        if A.field == EXACT:
            return demote(max(A.data) / min(A.data))
        return float(np.max(A.data) / np.min(A.data))
    F = A.full() if A.field == F64 else demote_matrix(A).full()
    rng = np.random.default_rng(7)
    lam_max = _power_iter(F, rng)
    shift = lam_max * (1.0 + 1e-6)
    lam_min = shift - _power_iter(shift * np.eye(A.n) - F, rng)
    if lam_min <= 0.0:
        return math.inf
    return lam_max / lam_min


def demote_vector(v):
    if v.field == F64:
        return v
    return Vector([demote(e) for e in v.data], F64)


def demote_matrix(A):
    if A.field == F64:
        return A
    out = SymmetricMatrix(A.kind, A.n, [demote(e) for e in A.data], F64)
    out._spd = A._spd
    return out


def rationalize_vector(v):
    if v.field == EXACT:
        return v
    return Vector([rationalize(e) for e in v.data], EXACT)


def rationalize_matrix(A):
    if A.field == EXACT:
        return A
    out = SymmetricMatrix(A.kind, A.n, [rationalize(e) for e in A.data], EXACT)
    out._spd = A._spd
    return out


def snap_matrix(A, threshold):
    if A.field != EXACT:
        raise ExactRequired("zero snapping operates on exact data")
    return SymmetricMatrix(A.kind, A.n, [snap_zero(e, threshold) for e in A.data], EXACT)


def snap_vector(v, threshold):
    if v.field != EXACT:
        raise ExactRequired("zero snapping operates on exact data")
    return Vector([snap_zero(e, threshold) for e in v.data], EXACT)


# ---------------------------------------------------------------------------
# Text formats.
#
# Matrix file:  header "symmetric n" or "diagonal n", then the packed
# lower triangle (row-major) or the n diagonal entries as rational
# literals.  Vector file: header "vector n", then n rational literals.
# Whitespace (including newlines) separates entries.


def write_matrix(A, path):
    if A.field != EXACT:
        raise ExactRequired("matrix files store exact rationals")
    word = "diagonal" if A.kind == DIAGONAL else "symmetric"
    lines = ["%s %d" % (word, A.n)]
    if A.kind == DIAGONAL:
        lines.extend(str(e) for e in A.data)
    else:
        k = 0
        for i in range(A.n):
            lines.append(" ".join(str(e) for e in A.data[k:k + i + 1]))
            k += i + 1
    _write_text(path, "\n".join(lines) + "\n")


def write_vector(v, path):
    if v.field != EXACT:
        raise ExactRequired("vector files store exact rationals")
    lines = ["vector %d" % len(v)]
    lines.extend(str(e) for e in v.data)
    _write_text(path, "\n".join(lines) + "\n")


def read_matrix(path):
    tokens = _read_tokens(path)
    if len(tokens) < 2 or tokens[0] not in ("symmetric", "diagonal"):
        raise FormatError("matrix file must start with 'symmetric n' or 'diagonal n'")
    kind = DENSE if tokens[0] == "symmetric" else DIAGONAL
    n = _parse_count(tokens[1])
    want = _tri(n) if kind == DENSE else n
    body = tokens[2:]
    if len(body) != want:
        raise FormatError("expected %d entries, found %d" % (want, len(body)))
    return SymmetricMatrix(kind, n, [parse_rational(t) for t in body], EXACT)


def read_vector(path):
    tokens = _read_tokens(path)
    if len(tokens) < 2 or tokens[0] != "vector":
        raise FormatError("vector file must start with 'vector n'")
    n = _parse_count(tokens[1])
    body = tokens[2:]
    if len(body) != n:
        raise FormatError("expected %d entries, found %d" % (n, len(body)))
    return Vector([parse_rational(t) for t in body], EXACT)


def is_matrix_market(path):
    try:
        with open(path, "r") as fh:
            return fh.readline().startswith("%%MatrixMarket")
    except OSError as exc:
        raise IoError(str(exc)) from None


def read_matrix_market(path):
    """Ingest a Matrix Market symmetric coordinate file, bit-exactly.

    Stored doubles become their exact rational values; an integer field
    is read as exact integers.  Only the symmetric qualifier is accepted
    since the storage here cannot represent anything else.
    """
    try:
        with open(path, "r") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IoError(str(exc)) from None
    if not lines or not lines[0].startswith("%%MatrixMarket"):
        raise FormatError("missing MatrixMarket banner")
    banner = lines[0].split()
    if len(banner) != 5:
        raise FormatError("malformed MatrixMarket banner")
    _, obj, fmt, fieldkind, qualifier = [w.lower() for w in banner]
    if obj != "matrix" or fmt != "coordinate":
        raise FormatError("only coordinate matrices are supported")
    if fieldkind not in ("real", "integer"):
        raise FormatError("unsupported value field %r" % fieldkind)
    if qualifier != "symmetric":
        raise FormatError("only the symmetric qualifier is supported")
    body = [ln for ln in lines[1:] if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise FormatError("missing size line")
    size = body[0].split()
    if len(size) != 3:
        raise FormatError("malformed size line %r" % body[0])
    rows, cols, nnz = (_parse_count(t) for t in size)
    if rows != cols:
        raise FormatError("matrix is not square: %d x %d" % (rows, cols))
    if len(body) - 1 != nnz:
        raise FormatError("expected %d entries, found %d" % (nnz, len(body) - 1))
    packed = [ZERO] * _tri(rows)
    seen = set()
    for ln in body[1:]:
        parts = ln.split()
        if len(parts) != 3:
            raise FormatError("malformed entry line %r" % ln)
        i, j = _parse_count(parts[0]) - 1, _parse_count(parts[1]) - 1
        if not (0 <= i < rows and 0 <= j < rows):
            raise FormatError("entry index out of range in %r" % ln)
        if j > i:
            i, j = j, i
        if (i, j) in seen:
            raise FormatError("duplicate entry for (%d, %d)" % (i + 1, j + 1))
        seen.add((i, j))
        if fieldkind == "integer":
            value = Fraction(int(parts[2]))
        else:
            value = rationalize(float(parts[2]))
        packed[_tri(i) + j] = value
    return SymmetricMatrix(DENSE, rows, packed, EXACT)


def _parse_count(token):
    try:
        value = int(token)
    except ValueError:
        raise FormatError("not an integer: %r" % token) from None
    if value < 1:
        raise FormatError("count must be positive, got %d" % value)
    return value


def _read_tokens(path):
    try:
        with open(path, "r") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoError(str(exc)) from None
    return text.split()


def _write_text(path, text):
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(str(exc)) from None
