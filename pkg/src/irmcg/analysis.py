"""Convergence traces, trace comparison, and CSV emission.

A trace records one solver run: per-step squared residuals (kept in the
run's own arithmetic, so exact runs stay exact), energies, refresh and
perturbation flags, and the termination reason.  Comparison pairs an
exact trace with a double trace of the same configuration and reports
where the two relative-norm curves separate.
"""

import math
from dataclasses import dataclass

from .arithmetic import (
    EXACT,
    F64,
    demote,
    format_double,
    format_rational,
    parse_rational,
)
from .errors import (
    DiagonalRequired,
    DimensionError,
    FormatError,
    IncomparableTraces,
    IoError,
    ZeroInitialResidual,
)
from .linalg import DIAGONAL

E_TAG = "E"
DP_TAG = "DP"

CONVERGED = "converged"
MAX_STEPS = "max_steps"
BUDGET_EXCEEDED = "budget_exceeded"
ZERO_INITIAL_RESIDUAL = "zero_initial_residual"
TERMINATIONS = (CONVERGED, MAX_STEPS, BUDGET_EXCEEDED, ZERO_INITIAL_RESIDUAL)

_CSV_HEADER = "step,rr,energy,refreshed,perturbed"
_PREAMBLE_KEYS = (
    "method",
    "arith",
    "omega",
    "epsilon",
    "refresh_k",
    "max_steps",
    "seed",
    "termination",
)


def tag_for(field):
    return E_TAG if field == EXACT else DP_TAG


def field_for(tag):
    if tag == E_TAG:
        return EXACT
    if tag == DP_TAG:
        return F64
    raise FormatError("unknown arithmetic tag %r" % tag)


@dataclass(frozen=True)
class StepRecord:
    """One row of a trace: state after step i (row 0 is the start)."""

    i: int
    rr: object
    energy: object
    refreshed: bool
    perturbed: bool

    def __post_init__(self):
        if self.rr < 0:
            raise ValueError("rr must be nonnegative")


@dataclass(frozen=True)
class ConvergenceTrace:
    method: str
    arith: str
    omega: object
    epsilon: object
    refresh_k: int
    max_steps: int
    seed: int
    termination: str
    records: tuple

    def __post_init__(self):
        if self.arith not in (E_TAG, DP_TAG):
            raise ValueError("arith must be %r or %r" % (E_TAG, DP_TAG))
        if self.termination not in TERMINATIONS:
            raise ValueError("unknown termination %r" % self.termination)
        object.__setattr__(self, "records", tuple(self.records))
        for pos, rec in enumerate(self.records):
            if rec.i != pos:
                raise ValueError("records must be consecutively indexed from 0")

    @property
    def field(self):
        return field_for(self.arith)

    @property
    def steps(self):
        """Index of the last recorded state (0 for an unstarted run)."""
        return self.records[-1].i if self.records else 0


def relative_norms(t):
    """Per-record sqrt(rr_i / rr_0) as doubles; entry 0 is 1.0.

    Exact records divide first in rational arithmetic and convert the
    ratio once, so a terminated exact run ends in exactly 0.0.
    """
    if not t.records:
        raise ZeroInitialResidual("trace has no records")
    rr0 = t.records[0].rr
    if rr0 == 0:
        raise ZeroInitialResidual("r0 = 0; relative norms undefined")
    out = [1.0]
    for rec in t.records[1:]:
        if t.field == EXACT:
            out.append(math.sqrt(demote(rec.rr / rr0)))
        else:
            out.append(math.sqrt(rec.rr / rr0))
    return out


def count_active(D, b):
    """Number of distinct diagonal values carrying a nonzero b-component.

    Repeated diagonal values count once; values whose every component of
    b is zero do not count at all.  This is the step count at which the
    exact methods terminate on a diagonal system.
    """
    if D.kind != DIAGONAL:
        raise DiagonalRequired("count_active needs the diagonal representation")
    if D.n != len(b):
        raise DimensionError("matrix order %d vs vector length %d" % (D.n, len(b)))
    return len({d for d, be in zip(D.data, b.data) if be != 0})


@dataclass(frozen=True)
class ComparisonReport:
    """Outcome of pairing an exact trace with a double trace."""

    pairs: tuple
    divergence_step: object
    exact_steps: int
    dp_steps: int
    delta_steps: int
    termination_mismatch: bool
    dp_below_exact: bool
    gap: float


def _config_scalar(value, arith):
    return demote(value) if arith == E_TAG else float(value)


def compare(tE, tDP, gap=1.0):
    """Pair two traces of one configuration and locate their divergence.

    The traces must agree on method, omega and epsilon (arithmetic tag,
    refresh period, step cap and seed may differ; those are exactly the
    knobs a cross-arithmetic comparison varies).  Divergence is the
    first step where the relative norms differ by more than `gap`
    decades; a zero norm against a nonzero one counts as divergent.
    """
    if tE.method != tDP.method:
        raise IncomparableTraces("method %r vs %r" % (tE.method, tDP.method))
    for name in ("omega", "epsilon"):
        a = _config_scalar(getattr(tE, name), tE.arith)
        b = _config_scalar(getattr(tDP, name), tDP.arith)
        if a != b:
            raise IncomparableTraces("%s %r vs %r" % (name, a, b))
    normsE = relative_norms(tE)
    normsDP = relative_norms(tDP)
    pairs = []
    divergence = None
    below = False
    for i in range(min(len(normsE), len(normsDP))):
        nE, nDP = normsE[i], normsDP[i]
        pairs.append((i, nE, nDP))
        if nDP < nE:
            below = True
        if divergence is None and _diverged(nE, nDP, gap):
            divergence = i
    return ComparisonReport(
        pairs=tuple(pairs),
        divergence_step=divergence,
        exact_steps=tE.steps,
        dp_steps=tDP.steps,
        delta_steps=tDP.steps - tE.steps,
        termination_mismatch=tE.termination != tDP.termination,
        dp_below_exact=below,
        gap=gap,
    )


def _diverged(nE, nDP, gap):
    if nE == 0.0 and nDP == 0.0:
        return False
    if nE == 0.0 or nDP == 0.0:
        return True
    return abs(math.log10(nE / nDP)) > gap


def _format_scalar(value, arith):
    if value is None:
        return ""
    if arith == E_TAG:
        return format_rational(value)
    return format_double(value)


def _parse_scalar(text, arith):
    if text == "":
        return None
    if arith == E_TAG:
        return parse_rational(text)
    try:
        return float(text)
    except ValueError:
        raise FormatError("not a double literal: %r" % text) from None


def emit_csv(t, destination):
    """Write a trace as CSV with a '#' preamble; byte-deterministic.

    Exact scalars are serialized as num/den so nothing is lost; double
    scalars use shortest round-trip decimals.  `destination` is a path
    or a file-like object with write().
    """
    lines = []
    for key in _PREAMBLE_KEYS:
        if key in ("omega", "epsilon"):
            value = _format_scalar(getattr(t, key), t.arith)
        else:
            value = str(getattr(t, key))
        lines.append("# %s %s" % (key, value))
    lines.append(_CSV_HEADER)
    for rec in t.records:
        lines.append(
            "%d,%s,%s,%d,%d"
            % (
                rec.i,
                _format_scalar(rec.rr, t.arith),
                _format_scalar(rec.energy, t.arith),
                1 if rec.refreshed else 0,
                1 if rec.perturbed else 0,
            )
        )
    text = "\n".join(lines) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
        return
    try:
        with open(destination, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(str(exc)) from None


def parse_csv(source):
    """Inverse of emit_csv; returns the trace it describes."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        try:
            with open(source, "r") as fh:
                text = fh.read()
        except OSError as exc:
            raise IoError(str(exc)) from None
    meta = {}
    rows = []
    saw_header = False
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            parts = line[1:].strip().split(None, 1)
            if not parts:
                raise FormatError("empty preamble line")
            meta[parts[0]] = parts[1] if len(parts) > 1 else ""
            continue
        if not saw_header:
            if line != _CSV_HEADER:
                raise FormatError("unexpected header %r" % line)
            saw_header = True
            continue
        rows.append(line)
    missing = [k for k in _PREAMBLE_KEYS if k not in meta]
    if missing:
        raise FormatError("preamble is missing %s" % ", ".join(missing))
    if not saw_header:
        raise FormatError("missing column header")
    arith = meta["arith"]
    if arith not in (E_TAG, DP_TAG):
        raise FormatError("unknown arithmetic tag %r" % arith)
    records = []
    for line in rows:
        cells = line.split(",")
        if len(cells) != 5:
            raise FormatError("expected 5 fields, got %r" % line)
        records.append(
            StepRecord(
                i=int(cells[0]),
                rr=_parse_scalar(cells[1], arith),
                energy=_parse_scalar(cells[2], arith),
                refreshed=cells[3] == "1",
                perturbed=cells[4] == "1",
            )
        )
    try:
        return ConvergenceTrace(
            method=meta["method"],
            arith=arith,
            omega=_parse_scalar(meta["omega"], arith),
            epsilon=_parse_scalar(meta["epsilon"], arith),
            refresh_k=int(meta["refresh_k"]),
            max_steps=int(meta["max_steps"]),
            seed=int(meta["seed"]),
            termination=meta["termination"],
            records=records,
        )
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def render_report(report):
    """Human-readable table plus the machine-readable summary line."""
    lines = ["step  norm_E        norm_DP"]
    for i, nE, nDP in report.pairs:
        lines.append("%4d  %-12.6g  %-12.6g" % (i, nE, nDP))
    lines.append(
        "exact_steps=%d dp_steps=%d termination_mismatch=%s dp_below_exact=%s"
        % (
            report.exact_steps,
            report.dp_steps,
            report.termination_mismatch,
            report.dp_below_exact,
        )
    )
    div = "none" if report.divergence_step is None else str(report.divergence_step)
    lines.append("divergence_step=%s delta_steps=%d" % (div, report.delta_steps))
    return "\n".join(lines)
