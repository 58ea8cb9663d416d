"""Iterative energy-minimizing solvers for SPD systems.

Three methods share one harness:

* ``cg``      -- classical conjugate gradients (line search + conjugation),
  in the generalized form that tolerates an arbitrarily scaled starting
  increment.
* ``irm-cg``  -- per-step energy minimization over span{r, p} with a
  single matrix-vector product per recursive step: the new residual is
  obtained by recurrence, alpha = A r is the only fresh product, and
  beta = A p is carried along as a linear combination.
* ``irm``     -- the generic subspace method: a coordinate-vector
  generator emits up to M_MAX directions, the projected system is
  solved exactly, and the new increment is the subspace minimizer.

All methods run under either scalar backend.  In exact arithmetic the
recurrences are identities, so ``cg`` and ``irm-cg`` produce the same
iterates at omega = 1 and terminate with an exactly zero residual after
m steps, m being the number of distinct eigenvalues that carry a
nonzero component of b.

Every step starts from the state (i, x, r, p, beta) and produces the
next one.  The step with loop counter i recomputes the residual from
scratch when i mod refresh_k == 0 (so the first step always does) and
updates it recursively otherwise.
"""

from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .analysis import (
    BUDGET_EXCEEDED,
    CONVERGED,
    MAX_STEPS,
    ZERO_INITIAL_RESIDUAL,
    ConvergenceTrace,
    StepRecord,
    tag_for,
)
from .arithmetic import EXACT, BitBudget
from .errors import (
    BudgetExceeded,
    DimensionError,
    GeneratorError,
    NumericalBreakdown,
    SingularRitzSystem,
)
from .linalg import (
    M_MAX,
    RitzSystem,
    Vector,
    add_scaled,
    add_to_entry,
    dot,
    energy,
    ensure_spd,
    matvec,
    small_solve,
    vscale,
    vsub,
)

CG = "cg"
IRM_CG = "irm-cg"
IRM = "irm"
METHODS = (CG, IRM_CG, IRM)

GEN_RESIDUAL = "residual-only"
GEN_RESIDUAL_INCREMENT = "residual+increment"
GEN_JACOBI = "jacobi-residual+increment"
GENERATORS = (GEN_RESIDUAL, GEN_RESIDUAL_INCREMENT, GEN_JACOBI)

# Refresh defaults: recursive updates are exact under the rational
# backend, so refresh is effectively disabled there; doubles accumulate
# roundoff and get a short period.
DEFAULT_REFRESH_EXACT = 2**31 - 1
DEFAULT_REFRESH_F64 = 50


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters; omega and epsilon may be given in any numeric type.

    refresh_k and max_steps default to None and are filled in by
    ``resolved`` (per-backend refresh, 100 n step cap).  The step
    functions expect a resolved config.
    """

    method: str = IRM_CG
    omega: object = 1
    epsilon: object = 0
    refresh_k: object = None
    max_steps: object = None
    generator: str = GEN_RESIDUAL_INCREMENT
    bit_budget: BitBudget = BitBudget()
    record_energy: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError("unknown method %r" % self.method)
        if self.generator not in GENERATORS:
            raise ValueError("unknown generator %r" % self.generator)
        if not 0 < self.omega < 2:
            raise ValueError("omega must lie in the open interval (0, 2)")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.method == CG and self.omega != 1:
            raise ValueError("cg ignores relaxation; omega must be 1")
        if self.refresh_k is not None and self.refresh_k < 1:
            raise ValueError("refresh_k must be >= 1")
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")

    def resolved(self, field, n):
        """Copy with backend-typed scalars and concrete defaults."""
        if field == EXACT:
            omega, epsilon = Fraction(self.omega), Fraction(self.epsilon)
            refresh = DEFAULT_REFRESH_EXACT
        else:
            omega, epsilon = float(self.omega), float(self.epsilon)
            refresh = DEFAULT_REFRESH_F64
        return replace(
            self,
            omega=omega,
            epsilon=epsilon,
            refresh_k=self.refresh_k if self.refresh_k is not None else refresh,
            max_steps=self.max_steps if self.max_steps is not None else 100 * n,
        )


@dataclass
class SolverState:
    """State after step i; owned by exactly one run.

    beta caches A p for the methods that carry it (irm-cg, irm); cg
    recomputes A p each step and leaves beta as None.  refreshed tells
    whether this state's residual came from full recomputation.
    """

    i: int
    x: Vector
    r: Vector
    p: Vector
    beta: object
    rr0: object
    converged: bool = False
    refreshed: bool = True


@dataclass(frozen=True)
class Perturbation:
    """delta added to one 1-based component of p after step step_index."""

    step_index: int
    component_index: int
    delta: object

    def __post_init__(self):
        if self.step_index < 0:
            raise ValueError("step_index must be nonnegative")
        if self.component_index < 1:
            raise ValueError("component_index is 1-based")


@dataclass(frozen=True)
class CoordinateGenerator:
    """Emits the coordinate vectors spanning one generic IRM step."""

    id: str = GEN_RESIDUAL_INCREMENT

    def __post_init__(self):
        if self.id not in GENERATORS:
            raise ValueError("unknown generator %r" % self.id)

    def vectors(self, r, p, A):
        """Candidate directions given the fresh residual and old increment.

        Zero vectors are dropped; the caller filters out dependent ones.
        """
        if self.id == GEN_RESIDUAL:
            cand = [r]
        elif self.id == GEN_RESIDUAL_INCREMENT:
            cand = [r, p]
        else:
            diag = A.diag()
            if r.field == EXACT:
                scaled = Vector([e / d for e, d in zip(r.data, diag)], EXACT)
            else:
                scaled = Vector(r.data / np.asarray(diag), r.field)
            cand = [scaled, p]
        out = [v for v in cand if not v.is_zero()]
        if not out:
            raise GeneratorError("generator %r emitted no nonzero vectors" % self.id)
        return out


def _check_budget(state, cfg):
    if state.x.field != EXACT:
        return
    budget = cfg.bit_budget
    for vec in (state.x, state.r, state.p, state.beta):
        if vec is None:
            continue
        for entry in vec.data:
            budget.check(entry)


def init(A, b, x0):
    """Steepest-descent initialisation shared by all three methods.

    r0 = b - A x0; p0 = q r0 with q = (r0.r0)/(r0.A r0); beta0 = q (A r0)
    comes for free from the q computation.  A zero initial residual
    marks the state converged without evaluating q.
    """
    ensure_spd(A)
    if A.n != len(b) or A.n != len(x0):
        raise DimensionError("system dimensions do not agree")
    r0 = vsub(b, matvec(A, x0))
    rr0 = dot(r0, r0)
    n, field = A.n, A.field
    if rr0 == 0:
        zero = Vector.zeros(n, field)
        return SolverState(0, x0, r0, zero, zero, rr0, converged=True)
    Ar0 = matvec(A, r0)
    rAr = dot(r0, Ar0)
    if rAr <= 0:
        raise NumericalBreakdown("r0.A r0 = %r with a nonzero residual" % rAr)
    q = rr0 / rAr
    return SolverState(0, x0, r0, vscale(q, r0), vscale(q, Ar0), rr0)


def _advance_x_r(state, A, b, cfg):
    # Shared x/r update for the subspace methods (loop counter state.i).
    om = cfg.omega
    x1 = add_scaled(state.x, om, state.p)
    refreshed = state.i % cfg.refresh_k == 0
    if refreshed:
        r1 = vsub(b, matvec(A, x1))
    else:
        r1 = add_scaled(state.r, -om, state.beta)
    return x1, r1, refreshed


def _converged_state(state, x1, r1, rr, refreshed):
    zero = Vector.zeros(len(x1), x1.field)
    return SolverState(
        state.i + 1, x1, r1, zero, zero, state.rr0, converged=True, refreshed=refreshed
    )


def irmcg_step(state, A, b, cfg):
    """One step of the two-vector method.

    After the x/r update, alpha = A r is the sole matrix-vector product
    on recursive steps.  The projected 2x2 system is
        [[r.alpha, r.beta], [r.beta, p.beta]] a = [r.r, omega r.p]
    (the right side's second term vanishes at omega = 1 where r is
    orthogonal to p); the new increment and its A-image are the
    corresponding linear combinations of (r, p) and (alpha, beta).
    An exactly dependent {r, p} degenerates to steepest descent on r.
    """
    if state.converged:
        raise ValueError("cannot step a converged state")
    x1, r1, refreshed = _advance_x_r(state, A, b, cfg)
    rr = dot(r1, r1)
    if rr == 0:
        return _converged_state(state, x1, r1, rr, refreshed)
    alpha = matvec(A, r1)
    ra = dot(r1, alpha)
    rb = dot(r1, state.beta)
    pb = dot(state.p, state.beta)
    rp = dot(r1, state.p)
    field = x1.field
    try:
        sys2 = RitzSystem([[ra, rb], [rb, pb]], [rr, cfg.omega * rp], field)
        a = small_solve(sys2)
        a1, a2 = a[0], a[1]
    except SingularRitzSystem:
        try:
            a1 = small_solve(RitzSystem([[ra]], [rr], field))[0]
        except SingularRitzSystem:
            raise NumericalBreakdown("r.A r vanished with a nonzero residual") from None
        a2 = None
    if a2 is None:
        p1 = vscale(a1, r1)
        beta1 = vscale(a1, alpha)
    else:
        p1 = add_scaled(vscale(a1, r1), a2, state.p)
        beta1 = add_scaled(vscale(a1, alpha), a2, state.beta)
    new = SolverState(
        state.i + 1, x1, r1, p1, beta1, state.rr0, refreshed=refreshed
    )
    _check_budget(new, cfg)
    return new


def cg_step(state, A, b, cfg):
    """One classical conjugate-gradient step.

    Generalized line search alpha = (p.r)/(p.A p) so the scaled initial
    increment from ``init`` is handled; conjugation uses
    beta = -(r_new.A p)/(p.A p).  Shares the refresh and termination
    conventions of the other methods.
    """
    if state.converged:
        raise ValueError("cannot step a converged state")
    Ap = matvec(A, state.p)
    pAp = dot(state.p, Ap)
    if pAp == 0:
        raise NumericalBreakdown("p.A p = 0 while the residual is nonzero")
    al = dot(state.p, state.r) / pAp
    x1 = add_scaled(state.x, al, state.p)
    refreshed = state.i % cfg.refresh_k == 0
    if refreshed:
        r1 = vsub(b, matvec(A, x1))
    else:
        r1 = add_scaled(state.r, -al, Ap)
    rr = dot(r1, r1)
    if rr == 0:
        new = _converged_state(state, x1, r1, rr, refreshed)
        new.beta = None
        return new
    be = -dot(r1, Ap) / pAp
    p1 = add_scaled(r1, be, state.p)
    new = SolverState(state.i + 1, x1, r1, p1, None, state.rr0, refreshed=refreshed)
    _check_budget(new, cfg)
    return new


def _det(rows):
    m = len(rows)
    if m == 1:
        return rows[0][0]
    if m == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    acc = 0
    for j in range(m):
        minor = [row[:j] + row[j + 1 :] for row in rows[1:]]
        term = rows[0][j] * _det(minor)
        acc = acc + term if j % 2 == 0 else acc - term
    return acc


def irm_step(state, A, b, cfg, gen=None):
    """One generic subspace step with up to M_MAX coordinate vectors.

    The generator runs on the updated residual.  Dependent columns are
    dropped (detected through the projected Gram determinant, which is
    nonzero exactly when the kept columns are independent, A being SPD)
    and the reduced system is solved instead.  beta = A p stays cached
    because the column images A phi_j are already available.
    """
    if state.converged:
        raise ValueError("cannot step a converged state")
    if gen is None:
        gen = CoordinateGenerator(cfg.generator)
    x1, r1, refreshed = _advance_x_r(state, A, b, cfg)
    rr = dot(r1, r1)
    if rr == 0:
        return _converged_state(state, x1, r1, rr, refreshed)
    phi = gen.vectors(r1, state.p, A)[:M_MAX]
    images = [matvec(A, f) for f in phi]
    kept, kept_images, gram = [], [], []
    for f, Af in zip(phi, images):
        row = [dot(g, Af) for g in kept] + [dot(f, Af)]
        trial = [gram[i] + [row[i]] for i in range(len(gram))] + [row]
        if _det(trial) != 0:
            kept.append(f)
            kept_images.append(Af)
            gram = trial
    if not kept:
        raise GeneratorError("all generated vectors were dependent or zero")
    rbar = [dot(f, r1) for f in kept]
    a = small_solve(RitzSystem(gram, rbar, x1.field))
    p1 = vscale(a[0], kept[0])
    beta1 = vscale(a[0], kept_images[0])
    for coeff, f, Af in zip(a.data[1:], kept[1:], kept_images[1:]):
        p1 = add_scaled(p1, coeff, f)
        beta1 = add_scaled(beta1, coeff, Af)
    new = SolverState(
        state.i + 1, x1, r1, p1, beta1, state.rr0, refreshed=refreshed
    )
    _check_budget(new, cfg)
    return new


def _step_function(cfg):
    if cfg.method == CG:
        return cg_step
    if cfg.method == IRM_CG:
        return irmcg_step
    gen = CoordinateGenerator(cfg.generator)
    return lambda state, A, b, c: irm_step(state, A, b, c, gen)


def _apply_perturbations(state, A, perturbations, index):
    hit = False
    for pert in perturbations:
        if pert.step_index != index:
            continue
        if pert.component_index > len(state.p):
            raise DimensionError(
                "perturbation component %d exceeds n = %d"
                % (pert.component_index, len(state.p))
            )
        state.p = add_to_entry(state.p, pert.component_index - 1, pert.delta)
        hit = True
    if hit and state.beta is not None:
        # Keep the cached A p image truthful after the injection.
        state.beta = matvec(A, state.p)
    return hit


def solve(A, b, x0=None, cfg=None, perturbations=(), seed=0, observer=None):
    """Run the configured method until convergence or a stop condition.

    Convergence is tested on squared quantities, rr <= epsilon^2 rr0,
    which is exact under the rational backend.  Each perturbation fires
    right after the step whose index it names (index 0 fires on the
    initial increment).  ``observer``, if given, is called with
    (previous_state, new_state) after every completed step; it is an
    instrumentation hook and has no effect on the run.

    Returns (x, trace).  The trace ends with termination ``converged``,
    ``max_steps``, ``budget_exceeded`` (the offending step is
    discarded), or ``zero_initial_residual`` (empty record list).
    """
    if cfg is None:
        cfg = SolverConfig()
    if x0 is None:
        x0 = Vector.zeros(A.n, A.field)
    rcfg = cfg.resolved(A.field, A.n)
    step = _step_function(rcfg)

    def trace_for(termination, records):
        return ConvergenceTrace(
            method=rcfg.method,
            arith=tag_for(A.field),
            omega=rcfg.omega,
            epsilon=rcfg.epsilon,
            refresh_k=rcfg.refresh_k,
            max_steps=rcfg.max_steps,
            seed=seed,
            termination=termination,
            records=records,
        )

    state = init(A, b, x0)
    if state.converged and state.i == 0:
        return state.x, trace_for(ZERO_INITIAL_RESIDUAL, [])
    hit0 = _apply_perturbations(state, A, perturbations, 0)
    threshold = rcfg.epsilon * rcfg.epsilon * state.rr0

    def record_of(st, rr, hit):
        e = energy(A, b, st.x) if rcfg.record_energy else None
        return StepRecord(st.i, rr, e, st.refreshed, hit)

    records = [record_of(state, state.rr0, hit0)]
    rr = state.rr0
    while True:
        if rr <= threshold:
            termination = CONVERGED
            break
        if state.i >= rcfg.max_steps:
            termination = MAX_STEPS
            break
        previous = state
        try:
            state = step(state, A, b, rcfg)
        except BudgetExceeded:
            termination = BUDGET_EXCEEDED
            break
        hit = _apply_perturbations(state, A, perturbations, state.i)
        if observer is not None:
            observer(previous, state)
        rr = dot(state.r, state.r)
        records.append(record_of(state, rr, hit))
    return state.x, trace_for(termination, records)
