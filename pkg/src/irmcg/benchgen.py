"""Fabricated SPD benchmark systems with exactly known structure.

Four families:

* diagonal systems realizing a prescribed spectrum, with the right-hand
  side controlling which eigenvalues participate in the iteration;
* rationally rotated diagonals: the same spectrum pushed through exact
  Givens-type rotations built from Pythagorean (cos, sin) pairs, giving
  dense matrices whose eigenvalues are still known exactly;
* inverse-method right-hand sides b = A x* so the solver's answer can
  be checked against a chosen x* without ever inverting A;
* fixed-fixed spring chains: small integer tridiagonal stiffness
  matrices, always SPD.

Everything is exact and, where randomness is involved, driven by an
explicit seed.
"""

import random
from dataclasses import dataclass
from fractions import Fraction

from .arithmetic import EXACT, ZERO, parse_rational
from .errors import (
    DimensionError,
    ExactRequired,
    FormatError,
    InvalidRotation,
    InvalidStiffness,
)
from .linalg import SymmetricMatrix, Vector, matvec

RHS_ONES = "ones"
RHS_EXPLICIT = "explicit"
RHS_RANDOM = "random"
RHS_RULES = (RHS_ONES, RHS_EXPLICIT, RHS_RANDOM)

# Exact-orthogonality building blocks: cos^2 + sin^2 = 1 in rationals.
PYTHAGOREAN_PAIRS = (
    (Fraction(3, 5), Fraction(4, 5)),
    (Fraction(5, 13), Fraction(12, 13)),
    (Fraction(8, 17), Fraction(15, 17)),
)


@dataclass(frozen=True)
class SpectrumSpec:
    """Eigenvalue layout (value, multiplicity, active) plus an rhs rule.

    Active items are the ones the right-hand side touches; m, the
    number of active items, is the exact-arithmetic step count on the
    realized diagonal system.  Multiplicity enlarges a block without
    changing m.
    """

    items: tuple
    rhs_rule: str = RHS_ONES
    rhs_values: object = None
    rhs_seed: object = None

    def __post_init__(self):
        items = tuple(
            (Fraction(eig), int(mult), bool(active)) for eig, mult, active in self.items
        )
        object.__setattr__(self, "items", items)
        if not items:
            raise ValueError("spectrum must contain at least one item")
        values = [eig for eig, _, _ in items]
        if any(eig <= 0 for eig in values):
            raise ValueError("eigenvalues must be strictly positive")
        if len(set(values)) != len(values):
            raise ValueError("eigenvalues must be pairwise distinct")
        if any(mult < 1 for _, mult, _ in items):
            raise ValueError("multiplicities must be >= 1")
        if self.rhs_rule not in RHS_RULES:
            raise ValueError("unknown rhs rule %r" % self.rhs_rule)
        if self.rhs_rule == RHS_RANDOM and self.rhs_seed is None:
            raise ValueError("random rhs needs a seed")
        if self.rhs_rule == RHS_EXPLICIT:
            values = tuple(Fraction(v) for v in (self.rhs_values or ()))
            object.__setattr__(self, "rhs_values", values)
            self._check_explicit(values)

    def _check_explicit(self, values):
        if len(values) != self.n:
            raise ValueError(
                "explicit rhs has %d entries for n = %d" % (len(values), self.n)
            )
        pos = 0
        for eig, mult, active in self.items:
            block = values[pos:pos + mult]
            if active and not any(block):
                raise ValueError("active eigenvalue %s gets an all-zero rhs block" % eig)
            if not active and any(block):
                raise ValueError("inactive eigenvalue %s gets a nonzero rhs entry" % eig)
            pos += mult

    @property
    def n(self):
        return sum(mult for _, mult, _ in self.items)

    @property
    def m(self):
        return sum(1 for _, _, active in self.items if active)


def _rhs_for(spec):
    if spec.rhs_rule == RHS_EXPLICIT:
        return list(spec.rhs_values)
    out = []
    rng = random.Random(spec.rhs_seed) if spec.rhs_rule == RHS_RANDOM else None
    for _, mult, active in spec.items:
        for _ in range(mult):
            if not active:
                out.append(ZERO)
            elif rng is None:
                out.append(Fraction(1))
            else:
                out.append(Fraction(rng.choice([-1, 1]) * rng.randint(1, 9)))
    return out


def gen_diagonal(spec):
    """Realize the spectrum directly: (diagonal matrix, rhs, m)."""
    diag = []
    for eig, mult, _ in spec.items:
        diag.extend([eig] * mult)
    return (
        SymmetricMatrix.diagonal(diag),
        Vector.exact(_rhs_for(spec)),
        spec.m,
    )


@dataclass(frozen=True)
class RotationPlan:
    """Sequence of exact plane rotations (i, j, cos, sin), 0-based."""

    steps: tuple

    def __post_init__(self):
        steps = tuple(
            (int(i), int(j), Fraction(c), Fraction(s)) for i, j, c, s in self.steps
        )
        object.__setattr__(self, "steps", steps)
        for i, j, c, s in steps:
            if i == j or i < 0 or j < 0:
                raise ValueError("rotation indices must be distinct and nonnegative")
            if c * c + s * s != 1:
                raise InvalidRotation("cos^2 + sin^2 != 1 for (%s, %s)" % (c, s))

    def inverse(self):
        """Reversed steps with negated sines; undoes the plan exactly."""
        return RotationPlan(
            tuple((i, j, c, -s) for i, j, c, s in reversed(self.steps))
        )


def random_plan(n, count, seed):
    """Seeded plan of `count` rotations over distinct index pairs."""
    if n < 2:
        return RotationPlan(())
    rng = random.Random(seed)
    variants = []
    for c, s in PYTHAGOREAN_PAIRS:
        variants.extend([(c, s), (c, -s), (s, c), (s, -c)])
    steps = []
    for _ in range(count):
        i, j = rng.sample(range(n), 2)
        c, s = rng.choice(variants)
        steps.append((i, j, c, s))
    return RotationPlan(tuple(steps))


def gen_rotated(spec, plan):
    """Push the diagonal system through the plan: (dense matrix, rhs, m).

    Each step applies G . A . G^T and G . b with G the plane rotation on
    (i, j); the spectrum is untouched, the entries fill in.
    """
    D, b, m = gen_diagonal(spec)
    n = D.n
    full = [[ZERO] * n for _ in range(n)]
    for idx in range(n):
        full[idx][idx] = D.data[idx]
    rhs = list(b.data)
    for i, j, c, s in plan.steps:
        if i >= n or j >= n:
            raise DimensionError("rotation index out of range for n = %d" % n)
        for k in range(n):  # G A (row mix)
            ai, aj = full[i][k], full[j][k]
            full[i][k] = c * ai - s * aj
            full[j][k] = s * ai + c * aj
        for k in range(n):  # (G A) G^T (column mix)
            ai, aj = full[k][i], full[k][j]
            full[k][i] = c * ai - s * aj
            full[k][j] = s * ai + c * aj
        bi, bj = rhs[i], rhs[j]
        rhs[i] = c * bi - s * bj
        rhs[j] = s * bi + c * bj
    return SymmetricMatrix.from_rows(full), Vector.exact(rhs), m


def gen_inverse(A, x_star):
    """Exact right-hand side b = A x* for a chosen solution x*."""
    if A.field != EXACT or x_star.field != EXACT:
        raise ExactRequired("inverse-method data must be exact")
    if A.n != len(x_star):
        raise DimensionError("matrix order %d vs solution length %d" % (A.n, len(x_star)))
    return matvec(A, x_star)


def gen_spring_chain(n, stiffnesses):
    """Stiffness matrix of a fixed-fixed chain of n masses.

    stiffnesses lists the n+1 spring constants left to right; mass i
    couples to its neighbours through springs i and i+1, so the matrix
    is tridiagonal with diagonal k_i + k_{i+1} and off-diagonal -k_{i+1}.
    """
    if n < 1:
        raise DimensionError("chain needs at least one mass")
    ks = [Fraction(k) for k in stiffnesses]
    if len(ks) != n + 1:
        raise DimensionError("need %d stiffnesses for %d masses" % (n + 1, n))
    if any(k <= 0 for k in ks):
        raise InvalidStiffness("stiffnesses must be strictly positive")
    packed = []
    for i in range(n):
        row = [ZERO] * (i + 1)
        row[i] = ks[i] + ks[i + 1]
        if i > 0:
            row[i - 1] = -ks[i]
        packed.extend(row)
    return SymmetricMatrix.dense(packed, n)


# ---------------------------------------------------------------------------
# Spectrum text formats.
#
# File form: one line per item, "eigenvalue multiplicity active|inactive",
# then a final line "rhs ones" | "rhs random <seed>" |
# "rhs explicit <v1> ... <vn>".  Inline form (command line):
# comma-separated "EIGxMULT" items, a trailing "i" marking inactive,
# e.g. "1x2,3/2x1,10x3i".


def parse_spectrum_inline(text, rhs_rule=RHS_ONES, rhs_values=None, rhs_seed=None):
    items = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            raise FormatError("empty spectrum item in %r" % text)
        active = True
        if chunk.endswith("i"):
            active = False
            chunk = chunk[:-1]
        if "x" not in chunk:
            raise FormatError("spectrum item %r is not EIGxMULT" % chunk)
        eig_text, mult_text = chunk.rsplit("x", 1)
        try:
            mult = int(mult_text)
        except ValueError:
            raise FormatError("bad multiplicity in %r" % chunk) from None
        items.append((parse_rational(eig_text), mult, active))
    try:
        return SpectrumSpec(
            tuple(items), rhs_rule=rhs_rule, rhs_values=rhs_values, rhs_seed=rhs_seed
        )
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def read_spectrum_file(path):
    try:
        with open(path, "r") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise FormatError(str(exc)) from None
    return parse_spectrum_lines(lines)


def parse_spectrum_lines(lines):
    items = []
    rhs_rule, rhs_values, rhs_seed = None, None, None
    for line in lines:
        parts = line.split()
        if parts[0] == "rhs":
            if rhs_rule is not None:
                raise FormatError("duplicate rhs line")
            if len(parts) < 2 or parts[1] not in RHS_RULES:
                raise FormatError("bad rhs line %r" % line)
            rhs_rule = parts[1]
            if rhs_rule == RHS_RANDOM:
                if len(parts) != 3:
                    raise FormatError("rhs random needs a seed")
                try:
                    rhs_seed = int(parts[2])
                except ValueError:
                    raise FormatError("bad rhs seed %r" % parts[2]) from None
            elif rhs_rule == RHS_EXPLICIT:
                rhs_values = tuple(parse_rational(t) for t in parts[2:])
            elif len(parts) != 2:
                raise FormatError("rhs ones takes no arguments")
            continue
        if rhs_rule is not None:
            raise FormatError("rhs line must come last")
        if len(parts) != 3 or parts[2] not in ("active", "inactive"):
            raise FormatError("bad spectrum line %r" % line)
        try:
            mult = int(parts[1])
        except ValueError:
            raise FormatError("bad multiplicity %r" % parts[1]) from None
        items.append((parse_rational(parts[0]), mult, parts[2] == "active"))
    if rhs_rule is None:
        raise FormatError("missing rhs line")
    try:
        return SpectrumSpec(
            tuple(items), rhs_rule=rhs_rule, rhs_values=rhs_values, rhs_seed=rhs_seed
        )
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def write_spectrum_file(spec, path):
    lines = []
    for eig, mult, active in spec.items:
        lines.append("%s %d %s" % (eig, mult, "active" if active else "inactive"))
    if spec.rhs_rule == RHS_RANDOM:
        lines.append("rhs random %d" % spec.rhs_seed)
    elif spec.rhs_rule == RHS_EXPLICIT:
        lines.append("rhs explicit " + " ".join(str(v) for v in spec.rhs_values))
    else:
        lines.append("rhs ones")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
