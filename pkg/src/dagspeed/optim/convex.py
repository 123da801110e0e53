"""Self-contained convex solver for separable energy objectives.

Minimizes  sum_j w_j^alpha * x_j^(1-alpha)  over linear constraints in the
execution times x_j and completion times d_j, with a primal log-barrier
method: Newton steps with Armijo backtracking, barrier parameter divided by
10 per outer iteration starting from 1.0, stopping once the duality-gap
estimate (number of inequality rows times mu) drops below tolerance.

Lower bounds are certified by building an explicit dual-feasible point from
the barrier multipliers, so branch-and-bound can prune soundly.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DEFAULT_TOL = 1e-8
# Execution-time boxes are clamped away from the objective singularity at 0.
X_FLOOR = 1e-12
# Box width below which a variable is treated as fixed.
PIN_WIDTH = 1e-13
# A Newton step shorter than this counts as a stall.
STALL_STEP = 1e-14
_DENSE_LIMIT = 160
_MAX_OUTER = 60
_MAX_INNER = 80


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    TIME_LIMIT = "time_limit"
    NUMERICAL_FAILURE = "numerical_failure"


class ProgramError(ValueError):
    """Structurally invalid convex program."""


RowSpec = tuple[Mapping[int, float], str, float]


@dataclass
class ConvexProgram:
    """Per-task times x_j and completions d_j under linear rows.

    Rows address a 2n-dimensional space: column j is x_j for j < n and
    d_{j-n} otherwise.  Box bounds apply to x only; d is constrained through
    rows.  ``weights`` and ``alpha`` define the objective terms
    w_j^alpha * x_j^(1-alpha); zero-weight tasks contribute nothing.
    """

    weights: np.ndarray
    alpha: float
    x_lo: np.ndarray
    x_hi: np.ndarray
    a_rows: sp.csr_matrix
    rhs: np.ndarray
    equality: np.ndarray
    start_hint: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def n(self) -> int:
        return len(self.weights)

    @staticmethod
    def from_rows(
        weights: Sequence[float],
        alpha: float,
        x_lo: Sequence[float],
        x_hi: Sequence[float],
        rows: Sequence[RowSpec],
        start_hint: tuple[np.ndarray, np.ndarray] | None = None,
    ) -> "ConvexProgram":
        w = np.asarray(weights, dtype=float)
        n = len(w)
        data, ri, ci = [], [], []
        rhs = np.zeros(len(rows))
        eq = np.zeros(len(rows), dtype=bool)
        for i, (cols, rel, b) in enumerate(rows):
            if rel not in ("<=", "="):
                raise ProgramError(f"unsupported relation {rel!r}")
            eq[i] = rel == "="
            rhs[i] = b
            for c, coef in cols.items():
                if not 0 <= c < 2 * n:
                    raise ProgramError(f"column {c} out of range for n={n}")
                ri.append(i)
                ci.append(c)
                data.append(float(coef))
        a = sp.csr_matrix((data, (ri, ci)), shape=(len(rows), 2 * n))
        return ConvexProgram(
            w, float(alpha), np.asarray(x_lo, dtype=float), np.asarray(x_hi, dtype=float),
            a, rhs, eq, start_hint,
        )


@dataclass
class ConvexSolution:
    status: SolveStatus
    x: np.ndarray
    d: np.ndarray
    objective: float
    lower_bound: float
    gap: float
    newton_steps: int = 0
    certified: bool = False


# ---------------------------------------------------------------------------
# objective helpers


@dataclass
class _Objective:
    """f(z) = lin . z + sum_i co_i * z[idx_i]^(1 - alpha_i) + const."""

    nvar: int
    lin: np.ndarray
    idx: np.ndarray
    co: np.ndarray
    al: np.ndarray
    const: float = 0.0

    @staticmethod
    def linear(nvar: int, lin: np.ndarray, const: float = 0.0) -> "_Objective":
        return _Objective(nvar, lin, np.zeros(0, dtype=int), np.zeros(0), np.zeros(0), const)

    def value(self, z: np.ndarray) -> float:
        v = float(self.lin @ z) + self.const
        if len(self.idx):
            v += float(np.sum(self.co * z[self.idx] ** (1.0 - self.al)))
        return v

    def grad(self, z: np.ndarray) -> np.ndarray:
        g = self.lin.copy()
        if len(self.idx):
            g[self.idx] += (1.0 - self.al) * self.co * z[self.idx] ** (-self.al)
        return g

    def hess_diag(self, z: np.ndarray) -> np.ndarray:
        h = np.zeros(self.nvar)
        if len(self.idx):
            h[self.idx] = self.al * (self.al - 1.0) * self.co * z[self.idx] ** (-self.al - 1.0)
        return h

    def scaled(self, factor: float) -> "_Objective":
        return _Objective(
            self.nvar, self.lin * factor, self.idx, self.co * factor, self.al,
            self.const * factor,
        )


def _power_box_min(co: float, alpha: float, q: float, lo: float, hi: float) -> float:
    """min of co*v^(1-alpha) + q*v over [lo, hi] (exact, used for dual bounds)."""
    if co == 0.0:
        if q >= 0.0:
            return q * lo
        return q * hi if np.isfinite(hi) else -np.inf
    if alpha == 1.0:
        return co + (q * lo if q >= 0.0 else (q * hi if np.isfinite(hi) else -np.inf))
    phi = lambda v: co * v ** (1.0 - alpha) + q * v
    if q <= 0.0:
        return phi(hi) if np.isfinite(hi) else -np.inf
    v_star = ((alpha - 1.0) * co / q) ** (1.0 / alpha)
    return phi(min(max(v_star, lo), hi))


# ---------------------------------------------------------------------------
# barrier core


@dataclass
class _BarrierResult:
    ok: bool
    z: np.ndarray
    fval: float
    mu: float
    slacks: np.ndarray
    newtons: int
    stalled: bool = False
    fscale: float = 1.0


def _newton_direction(h_diag, a, wrow, a_eq, grad, nvar):
    """Solve the (equality-constrained) Newton system for the barrier problem.

    The system is Jacobi-equilibrated first: active and inactive rows give
    the barrier Hessian diagonal entries many orders of magnitude apart,
    and solving unscaled loses the direction entirely.
    """
    dense = nvar <= _DENSE_LIMIT
    if dense:
        ad = a.toarray() if sp.issparse(a) else a
        h = ad.T @ (ad * wrow[:, None])
        h[np.diag_indices_from(h)] += h_diag + 1e-12 * (1.0 + h_diag.max(initial=0.0))
        scale = 1.0 / np.sqrt(np.maximum(np.diag(h), 1e-300))
        hs = h * scale[:, None] * scale[None, :]
        if a_eq is None or a_eq.shape[0] == 0:
            try:
                return scale * np.linalg.solve(hs, -grad * scale)
            except np.linalg.LinAlgError:
                return None
        ae = a_eq.toarray() if sp.issparse(a_eq) else a_eq
        ae_s = ae * scale[None, :]
        k = ae.shape[0]
        kkt = np.block([[hs, ae_s.T], [ae_s, np.zeros((k, k))]])
        try:
            sol = np.linalg.solve(kkt, np.concatenate([-grad * scale, np.zeros(k)]))
        except np.linalg.LinAlgError:
            return None
        return scale * sol[:nvar]
    aw = a.multiply(wrow[:, None]).tocsr()
    h = (a.T @ aw).tocsr()
    h = h + sp.diags(h_diag + 1e-12 * (1.0 + h_diag.max(initial=0.0)))
    scale = 1.0 / np.sqrt(np.maximum(h.diagonal(), 1e-300))
    dscale = sp.diags(scale)
    hs = (dscale @ h @ dscale).tocsc()
    if a_eq is not None and a_eq.shape[0] > 0:
        k = a_eq.shape[0]
        ae_s = (a_eq @ dscale).tocsr()
        kkt = sp.bmat([[hs, ae_s.T], [ae_s, None]], format="csc")
        try:
            sol = spla.splu(kkt).solve(np.concatenate([-grad * scale, np.zeros(k)]))
        except RuntimeError:
            return None
        return scale * sol[:nvar]
    try:
        return scale * spla.splu(hs).solve(-grad * scale)
    except RuntimeError:
        return None


def _barrier_minimize(
    obj: _Objective,
    a: sp.csr_matrix,
    b: np.ndarray,
    z0: np.ndarray,
    tol: float,
    a_eq: sp.csr_matrix | None = None,
    early_exit=None,
    mu0: float = 1.0,
) -> _BarrierResult:
    """Minimize obj over {a z <= b, a_eq z = b_eq} from a strictly feasible z0.

    The objective is normalized to unit scale internally so that the fixed
    mu schedule (1.0, 0.1, ...) is meaningful for any energy magnitude; the
    reported fval is in original units and fscale converts the multipliers
    mu/slack back to them.
    """
    nvar = len(z0)
    m = a.shape[0]
    z = z0.copy()
    s = b - a @ z
    if m and s.min() <= 0:
        raise ProgramError("barrier start is not strictly feasible")
    fscale = max(abs(obj.value(z0)), 1e-12)
    objs = obj.scaled(1.0 / fscale)
    mu = mu0
    newtons = 0
    for _ in range(_MAX_OUTER):
        prev_dec = np.inf
        for _ in range(_MAX_INNER):
            inv_s = 1.0 / s
            grad = objs.grad(z) + mu * (a.T @ inv_s)
            h_diag = objs.hess_diag(z)
            p = _newton_direction(h_diag, a, mu * inv_s**2, a_eq, grad, nvar)
            if p is None:
                return _BarrierResult(
                    False, z, obj.value(z), mu, s, newtons, stalled=True, fscale=fscale
                )
            decrement = float(-grad @ p)
            fval = objs.value(z)
            # The threshold shrinks with mu: accurate duals (mu / slack)
            # need the iterate close to the central path, far closer than
            # the objective value alone would require.
            thr = (1e-2 * tol + 1e-16) * (1.0 + abs(fval))
            if decrement / 2.0 <= thr:
                break
            if decrement >= prev_dec * 0.9:
                break  # stalled; the dual fit does not need exact centering
            prev_dec = decrement
            ap = a @ p
            pos = ap > 0
            step = 1.0
            if pos.any():
                step = min(1.0, 0.995 * float((s[pos] / ap[pos]).min()))
            barrier_val = fval - mu * float(np.log(s).sum()) if m else fval
            accepted = False
            while step >= STALL_STEP:
                z_new = z + step * p
                s_new = b - a @ z_new
                if not m or s_new.min() > 0:
                    f_new = objs.value(z_new)
                    b_new = f_new - mu * float(np.log(s_new).sum()) if m else f_new
                    if b_new <= barrier_val + 1e-4 * step * float(grad @ p) + 1e-12 * (
                        1.0 + abs(barrier_val)
                    ):
                        accepted = True
                        break
                step *= 0.5
            if not accepted:
                gap = m * mu
                if gap <= tol * (1.0 + abs(fval)):
                    break
                return _BarrierResult(
                    False, z, obj.value(z), mu, s, newtons, stalled=True, fscale=fscale
                )
            z, s = z_new, s_new
            newtons += 1
            if early_exit is not None and early_exit(z):
                return _BarrierResult(True, z, obj.value(z), mu, s, newtons, fscale=fscale)
        fval = objs.value(z)
        if m * mu <= tol * (1.0 + abs(fval)):
            break
        mu /= 10.0
    # Short polish at the final mu: sharpens the active slacks (and with
    # them the dual estimates) without letting the iteration count run away.
    prev_dec = np.inf
    for _ in range(12):
        inv_s = 1.0 / s
        grad = objs.grad(z) + mu * (a.T @ inv_s)
        p = _newton_direction(objs.hess_diag(z), a, mu * inv_s**2, a_eq, grad, nvar)
        if p is None:
            break
        decrement = float(-grad @ p)
        if decrement / 2.0 <= (1e-6 * mu + 1e-15) * (1.0 + abs(objs.value(z))):
            break
        if decrement >= prev_dec * 0.98:
            break
        prev_dec = decrement
        ap = a @ p
        pos = ap > 0
        step = 1.0
        if pos.any():
            step = min(1.0, 0.995 * float((s[pos] / ap[pos]).min()))
        if step < STALL_STEP:
            break
        bval = objs.value(z) - mu * float(np.log(s).sum()) if m else objs.value(z)
        moved = False
        for _ in range(6):
            z_new = z + step * p
            s_new = b - a @ z_new
            if not m or s_new.min() > 0:
                b_new = (
                    objs.value(z_new) - mu * float(np.log(s_new).sum()) if m else objs.value(z_new)
                )
                if b_new <= bval + 1e-12 * (1.0 + abs(bval)):
                    moved = True
                    break
            step *= 0.5
        if not moved:
            break
        z, s = z_new, s_new
        newtons += 1
    return _BarrierResult(True, z, obj.value(z), mu, s, newtons, fscale=fscale)


# ---------------------------------------------------------------------------
# phase 1: find a strictly feasible point (or prove there is none)


def _phase1(
    a: sp.csr_matrix,
    b: np.ndarray,
    z0: np.ndarray,
    a_eq: sp.csr_matrix | None,
    b_eq: np.ndarray | None,
) -> tuple[np.ndarray | None, float]:
    """Minimize the worst constraint violation.

    Returns (point, best violation).  The point is None unless it is
    strictly feasible; a best violation within +-1e-9 of zero means the
    feasible set is nonempty but has no interior (boundary case).
    """
    nvar = len(z0)
    m = a.shape[0]
    scale = 1.0 + (float(np.abs(b).max()) if m else 0.0)
    if a_eq is not None and a_eq.shape[0]:
        ae = a_eq.toarray() if sp.issparse(a_eq) else a_eq
        resid = np.asarray(b_eq) - ae @ z0
        corr, *_ = np.linalg.lstsq(ae, resid, rcond=None)
        z0 = z0 + corr
    if m == 0:
        return z0, -np.inf
    viol = a @ z0 - b
    if viol.max() < -1e-9 * scale:
        return z0, float(viol.max())
    s0 = float(viol.max(initial=0.0)) + 0.1 * scale
    a_ext = sp.hstack([a, -np.ones((m, 1))], format="csr")
    ae_ext = None
    if a_eq is not None and a_eq.shape[0]:
        ae_ext = sp.hstack([a_eq, np.zeros((a_eq.shape[0], 1))], format="csr")
    lin = np.zeros(nvar + 1)
    lin[-1] = 1.0
    obj = _Objective.linear(nvar + 1, lin)
    z_ext = np.concatenate([z0, [s0]])
    target = -1e-6 * scale
    res = _barrier_minimize(
        obj, a_ext, b, z_ext, tol=1e-12 * scale,
        a_eq=ae_ext, early_exit=lambda z: z[-1] < target,
    )
    s_final = float(res.z[-1])
    if s_final >= -1e-9 * scale:
        return None, s_final
    return res.z[:-1], s_final


# ---------------------------------------------------------------------------
# dual certification


def _certified_bound(
    obj: _Objective,
    a: sp.csr_matrix,
    b: np.ndarray,
    lam: np.ndarray,
    domains: dict[int, tuple[float, float]],
    power: dict[int, tuple[float, float]],
) -> float | None:
    """Exact lower bound from a dual-feasible adjustment of lam (>= 0).

    ``domains`` maps variable index -> finite interval treated as the
    variable's domain; all other variables are free and their objective
    residual must be repaired to exactly zero using rows that touch no other
    free variable.  Returns None when no sound repair exists.
    """
    nvar = obj.nvar
    lam = lam.copy()
    free = [v for v in range(nvar) if v not in domains]
    acsc = a.tocsc()

    def column_rows(v: int):
        start, end = acsc.indptr[v], acsc.indptr[v + 1]
        return acsc.indices[start:end], acsc.data[start:end]

    csr = a.tocsr()
    row_ok: dict[int, bool] = {}

    def repair_row_ok(i: int, v: int) -> bool:
        # Usable if every other variable in the row has a box domain.
        key = i * nvar + v
        if key not in row_ok:
            cols = csr.indices[csr.indptr[i] : csr.indptr[i + 1]]
            row_ok[key] = all(c == v or c in domains for c in cols)
        return row_ok[key]

    for v in free:
        rows, coefs = column_rows(v)
        resid = float(obj.lin[v]) + float(np.dot(lam[rows], coefs))
        if abs(resid) <= 0.0:
            continue
        neg = [(i, c) for i, c in zip(rows, coefs) if c < 0 and repair_row_ok(i, v)]
        pos = [(i, c) for i, c in zip(rows, coefs) if c > 0 and repair_row_ok(i, v)]
        if resid > 0:
            if neg:
                i, c = neg[0]
                lam[i] += resid / (-c)
                resid = 0.0
            elif pos:
                for i, c in pos:
                    room = lam[i] * c
                    take = min(room, resid)
                    lam[i] -= take / c
                    resid -= take
                    if resid <= 0:
                        break
        else:
            if pos:
                i, c = pos[0]
                lam[i] += (-resid) / c
                resid = 0.0
            elif neg:
                for i, c in neg:
                    room = lam[i] * (-c)
                    take = min(room, -resid)
                    lam[i] -= take / (-c)
                    resid += take
                    if resid >= 0:
                        break
        if abs(resid) > 1e-11 * (1.0 + abs(obj.lin[v])):
            return None

    # Residual check after all adjustments (float exactness matters here).
    contrib = a.T @ lam + obj.lin
    for v in free:
        if abs(contrib[v]) > 1e-9 * (1.0 + abs(obj.lin[v])):
            return None

    bound = -float(lam @ b) + obj.const
    for v, (lo, hi) in domains.items():
        co, al = power.get(v, (0.0, 2.0))
        q = float(contrib[v])
        term = _power_box_min(co, al, q, lo, hi)
        if not np.isfinite(term):
            return None
        bound += term
    return bound - 1e-12 * (1.0 + abs(bound))


def _fitted_dual_bound(
    obj: _Objective,
    a: sp.csr_matrix,
    b: np.ndarray,
    z: np.ndarray,
    slacks: np.ndarray,
    domains: dict[int, tuple[float, float]],
    power: dict[int, tuple[float, float]],
) -> float | None:
    """Certified bound from multipliers fitted by nonnegative least squares.

    The barrier ratios mu/slack are exact only on the central path, so
    instead the multipliers of the near-active rows are chosen to null the
    stationarity residual of the free (linear) variables; residuals on
    box-domain variables are absorbed exactly by the domain minimization,
    so they need no fitting.
    """
    m = a.shape[0]
    if m == 0:
        return _certified_bound(obj, a, b, np.zeros(0), domains, power)
    # Stationarity equations: all free variables, plus box variables whose
    # optimum sits strictly inside the box (their box multiplier is zero).
    eq_vars = [v for v in range(obj.nvar) if v not in domains]
    for v, (lo, hi) in domains.items():
        margin = 1e-6 * (1.0 + abs(z[v]))
        if lo + margin < z[v] < hi - margin:
            eq_vars.append(v)
    eq_vars = np.array(sorted(eq_vars), dtype=int)
    act = np.where(slacks <= 1e-2 * (1.0 + np.abs(b)))[0]
    lam = np.zeros(m)
    if len(act) and len(eq_vars):
        mat = a[act][:, eq_vars].T.toarray()
        target = -obj.grad(z)[eq_vars]
        try:
            from scipy.optimize import nnls

            fit, _ = nnls(mat, target, maxiter=10 * max(mat.shape[0], mat.shape[1], 1))
            lam[act] = fit
        except Exception:
            return None
    return _certified_bound(obj, a, b, lam, domains, power)


# ---------------------------------------------------------------------------
# public entry point


def solve_convex(program: ConvexProgram, tol: float = DEFAULT_TOL) -> ConvexSolution:
    """Solve the program to relative tolerance ``tol``.

    On OPTIMAL the returned point satisfies every row within
    tol * (1 + |rhs|) and the objective is within ``tol`` (relative) of the
    true optimum, certified through the reported duality gap.
    """
    n = program.n
    if n == 0:
        z = np.zeros(0)
        return ConvexSolution(SolveStatus.OPTIMAL, z, z, 0.0, 0.0, 0.0, certified=True)

    w = np.asarray(program.weights, dtype=float)
    alpha = float(program.alpha)
    lo = np.asarray(program.x_lo, dtype=float).copy()
    hi = np.asarray(program.x_hi, dtype=float).copy()
    if np.any(lo > hi + 1e-12 * np.maximum(1.0, np.abs(hi))):
        bad = np.zeros(n)
        return ConvexSolution(SolveStatus.INFEASIBLE, bad, bad, np.inf, np.inf, np.inf)

    pinned = (hi - lo) <= PIN_WIDTH * np.maximum(1.0, np.abs(hi))
    pin_val = 0.5 * (lo + hi)
    if np.any(pinned & (w > 0) & (pin_val <= 0)):
        raise ProgramError("positive-weight task pinned to a nonpositive execution time")
    lo = np.maximum(lo, X_FLOOR)
    hi = np.maximum(hi, lo)

    free = np.where(~pinned)[0]
    nf = len(free)
    nvar = nf + n  # [x_free..., d...]

    # Fold pinned x columns into the right-hand side.
    a_full = program.a_rows.tocsc()
    pin_full = np.zeros(2 * n)
    pin_full[:n] = np.where(pinned, pin_val, 0.0)
    rhs = program.rhs - a_full @ pin_full
    keep_cols = np.concatenate([free, np.arange(n, 2 * n)])
    a_red = a_full[:, keep_cols].tocsr()

    # Normalize to unit time scale so feasibility margins are meaningful
    # regardless of the instance's units.  The substitution x -> x/T leaves
    # the objective value unchanged when the coefficients pick up T^(1-a).
    t_scale = float(
        max(np.abs(rhs).max(initial=0.0), hi[free].max(initial=0.0), 0.0)
    )
    if not np.isfinite(t_scale) or t_scale <= 0.0:
        t_scale = 1.0
    rhs = rhs / t_scale
    lo = lo / t_scale
    hi = hi / t_scale
    lo = np.maximum(lo, X_FLOOR)
    hi = np.maximum(hi, lo)

    ineq = ~program.equality
    a_in = a_red[ineq]
    b_in = rhs[ineq]
    a_eq = a_red[~ineq] if (~ineq).any() else None
    b_eq = rhs[~ineq] if (~ineq).any() else None

    # Box rows for the free execution times.
    box_rows = []
    box_rhs = []
    for k, j in enumerate(free):
        box_rows.append((k, 1.0, hi[j]))
        box_rows.append((k, -1.0, -lo[j]))
    if box_rows:
        ri = np.arange(len(box_rows))
        ci = np.array([r[0] for r in box_rows])
        dv = np.array([r[1] for r in box_rows])
        box_rhs = np.array([r[2] for r in box_rows])
        a_box = sp.csr_matrix((dv, (ri, ci)), shape=(len(box_rows), nvar))
        a_all = sp.vstack([a_in, a_box], format="csr")
        b_all = np.concatenate([b_in, box_rhs])
    else:
        a_all, b_all = a_in.tocsr(), b_in

    pin_const = 0.0
    for j in np.where(pinned & (w > 0))[0]:
        pin_const += w[j] ** alpha * pin_val[j] ** (1.0 - alpha)

    obj = _Objective(
        nvar,
        np.zeros(nvar),
        np.arange(nf)[w[free] > 0],
        w[free][w[free] > 0] ** alpha * t_scale ** (1.0 - alpha),
        np.full(int((w[free] > 0).sum()), alpha),
        const=pin_const,
    )

    def assemble(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = pin_val.copy()
        x[free] = z[:nf] * t_scale
        return x, z[nf:].copy() * t_scale

    # Starting point: caller hint if strictly usable, else phase 1 from
    # box midpoints.  A boundary verdict (feasible set with empty interior)
    # relaxes every row and box by a hair so the barrier can run; the dual
    # certificate below is still taken against the original data.
    scale = 1.0 + float(np.abs(b_all).max(initial=0.0))
    b_solve = b_all
    lo_solve, hi_solve = lo, hi
    z0 = None
    if program.start_hint is not None:
        xh, dh = program.start_hint
        xh = np.asarray(xh, dtype=float) / t_scale
        dh = np.asarray(dh, dtype=float) / t_scale
        cand = np.concatenate([np.clip(xh[free], lo[free], hi[free]), dh])
        slack = b_all - a_all @ cand
        ok_eq = True
        if a_eq is not None and a_eq.shape[0]:
            ok_eq = np.abs(a_eq @ cand - b_eq).max() <= 1e-9 * (1.0 + np.abs(b_eq).max())
        if len(slack) == 0 or (slack.min() > 1e-9 * scale and ok_eq):
            z0 = cand
    if z0 is None:
        mid = np.concatenate([0.5 * (lo[free] + hi[free]), np.zeros(n)])
        z0, s_star = _phase1(a_all, b_all, mid, a_eq, b_eq)
        if z0 is None:
            if s_star > 1e-9 * scale:
                bad = np.zeros(n)
                return ConvexSolution(SolveStatus.INFEASIBLE, bad, bad, np.inf, np.inf, np.inf)
            # Boundary case: widen everything by epsilon and retry.
            eps = 1e-7
            lo_solve = np.maximum(lo - eps * (1.0 + np.abs(lo)), X_FLOOR)
            hi_solve = hi + eps * (1.0 + np.abs(hi))
            b_relaxed = b_in + eps * (1.0 + np.abs(b_in))
            box_rhs_relaxed = []
            for j in free:
                box_rhs_relaxed.append(hi_solve[j])
                box_rhs_relaxed.append(-lo_solve[j])
            b_solve = np.concatenate([b_relaxed, np.array(box_rhs_relaxed)]) if len(
                box_rhs_relaxed
            ) else b_relaxed
            mid = np.concatenate([0.5 * (lo_solve[free] + hi_solve[free]), np.zeros(n)])
            z0, s_star = _phase1(a_all, b_solve, mid, a_eq, b_eq)
            if z0 is None:
                bad = np.zeros(n)
                return ConvexSolution(SolveStatus.INFEASIBLE, bad, bad, np.inf, np.inf, np.inf)

    if nf == 0 or not len(obj.idx):
        # Constant objective: any feasible point is optimal.
        x, d = assemble(z0)
        return ConvexSolution(
            SolveStatus.OPTIMAL, x, d, pin_const, pin_const, 0.0, certified=True
        )

    res = _barrier_minimize(obj, a_all, b_solve, z0, tol, a_eq=a_eq)
    x, d = assemble(res.z)
    fval = res.fval
    m_in = a_all.shape[0]
    gap_est = m_in * res.mu * res.fscale

    # Multipliers of the normalized problem, rescaled to original units.
    lam = res.fscale * res.mu / res.slacks
    struct_rows = a_in.shape[0]
    domains = {k: (lo[j], hi[j]) for k, j in enumerate(free)}
    power = {
        k: (w[j] ** alpha, alpha) for k, j in enumerate(free) if w[j] > 0
    }
    candidates = [
        _certified_bound(obj, a_in, b_in, lam[:struct_rows], domains, power),
        _fitted_dual_bound(obj, a_in, b_in, res.z, res.slacks[:struct_rows], domains, power),
    ]
    cert = max((c for c in candidates if c is not None), default=None)
    if cert is None:
        lower = fval - 1.5 * gap_est - 1e-9 * (1.0 + abs(fval))
        certified = False
    else:
        lower = min(cert, fval)
        certified = True

    if res.stalled and gap_est > tol * (1.0 + abs(fval)):
        return ConvexSolution(
            SolveStatus.NUMERICAL_FAILURE, x, d, fval, lower, gap_est, res.newtons, certified
        )
    gap = max(fval - lower, 0.0)
    return ConvexSolution(SolveStatus.OPTIMAL, x, d, fval, lower, gap, res.newtons, certified)
