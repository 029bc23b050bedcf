"""Small dense conic solver: SDP over Hermitian PSD blocks, plus a norm-ball SOCP.

Problems are stated in primal trace form: one or more Hermitian PSD matrix
variables, a linear objective ``sum_j <C_j, X_j> + offset`` and linear trace
constraints ``sum_j <A_kj, X_j> {<=,==,>=} b_k`` with ``<A, X> = Re tr(A X)``.

The solver is a Mehrotra-style predictor-corrector primal-dual interior-point
method with Nesterov-Todd scaling.  Complex Hermitian blocks are mapped to
real symmetric blocks through the embedding [[Re, -Im], [Im, Re]]
(:func:`covertbeam.cxmat.real_embed`), 1x1 blocks and inequality slacks are
pooled into a single diagonal (nonnegative-orthant) block, and equality
constraints stay equalities in the Newton system.  Feasibility questions are
answered by a phase-I solve that minimizes the maximum (row-normalized)
constraint violation.

Intended scale: block dimensions up to a few tens and up to a few hundred
constraints, which covers every design problem in this package.
"""

from __future__ import annotations

import io
import weakref
from dataclasses import dataclass, field

import numpy as np

from . import cxmat
from .exceptions import InvalidInputError

__all__ = [
    "TraceConstraint",
    "ConicProblem",
    "ConicSolution",
    "FeasibilityResult",
    "SocpProblem",
    "solve_sdp",
    "check_feasible",
    "solve_socp",
    "dump_problem",
]

DEFAULT_GAP_TOL = 1e-7
DEFAULT_FEAS_TOL = 1e-7

_RELATIONS = ("<=", "==", ">=")

# Coefficient arrays are treated as immutable once handed to a problem; these
# id-keyed caches (validated while the array object is alive) let constraint
# sets shared across many solves - e.g. the constant rows of a bisection
# family - skip re-validation and re-embedding.
_COEFF_CACHE_MAX = 8192
_coeff_cache: dict = {}


def _coeff_entry(mat: np.ndarray) -> dict:
    key = id(mat)
    hit = _coeff_cache.get(key)
    if hit is not None and hit["ref"]() is mat:
        return hit
    if len(_coeff_cache) >= _COEFF_CACHE_MAX:
        _coeff_cache.clear()
    entry = {"ref": weakref.ref(mat), "validated": False, "embed": None}
    _coeff_cache[key] = entry
    return entry


def _as_coeff(mat) -> np.ndarray:
    return np.atleast_2d(np.asarray(mat, dtype=complex))


def _check_coeff(mat: np.ndarray, where: str) -> None:
    entry = _coeff_entry(mat)
    if entry["validated"]:
        return
    cxmat.require_hermitian(mat, where)
    entry["validated"] = True


def _embed_coeff(mat: np.ndarray) -> tuple[np.ndarray, float]:
    """(0.5 * real embedding, squared Frobenius norm) with per-object caching."""
    entry = _coeff_entry(mat)
    if entry["embed"] is None:
        entry["embed"] = (0.5 * cxmat.real_embed(mat), float(np.sum(np.abs(mat) ** 2)))
    return entry["embed"]


@dataclass(frozen=True)
class TraceConstraint:
    """One linear trace constraint: sum_j <coeffs[j], X_j> relation bound."""

    coeffs: dict
    bound: float
    relation: str = "<="

    def __post_init__(self):
        if self.relation not in _RELATIONS:
            raise InvalidInputError(f"relation must be one of {_RELATIONS}")
        if not self.coeffs:
            raise InvalidInputError("constraint must touch at least one block")


@dataclass(frozen=True)
class ConicProblem:
    """Hermitian-PSD-variable conic problem in primal trace form."""

    blocks: tuple
    sense: str = "minimize"
    objective: dict = field(default_factory=dict)
    offset: float = 0.0
    constraints: tuple = ()

    def __post_init__(self):
        if self.sense not in ("minimize", "maximize", "feasibility"):
            raise InvalidInputError("sense must be minimize, maximize or feasibility")
        dims = {}
        for name, dim in self.blocks:
            if dim < 1 or int(dim) != dim:
                raise InvalidInputError(f"block {name!r} must have positive integer dim")
            if name in dims:
                raise InvalidInputError(f"duplicate block name {name!r}")
            dims[name] = int(dim)
        if not dims:
            raise InvalidInputError("problem needs at least one block")

        def convert(coeffs, where):
            out = {}
            for name, mat in coeffs.items():
                if name not in dims:
                    raise InvalidInputError(f"{where} references unknown block {name!r}")
                arr = _as_coeff(mat)
                _check_coeff(arr, f"{where}[{name}]")
                if arr.shape[0] != dims[name]:
                    raise InvalidInputError(f"{where}[{name}] has wrong dimension")
                out[name] = arr
            return out

        object.__setattr__(self, "objective", convert(self.objective, "objective"))
        converted = []
        for k, con in enumerate(self.constraints):
            coeffs = convert(con.coeffs, f"constraint {k}")
            new = object.__new__(TraceConstraint)
            object.__setattr__(new, "coeffs", coeffs)
            object.__setattr__(new, "bound", float(con.bound))
            object.__setattr__(new, "relation", con.relation)
            converted.append(new)
        object.__setattr__(self, "constraints", tuple(converted))
        if self.sense == "feasibility" and not self.constraints:
            raise InvalidInputError("feasibility problems need a non-empty constraint list")

    # -- convenience constructors -------------------------------------------------
    @classmethod
    def minimize(cls, blocks, objective, constraints, offset=0.0):
        return cls(blocks=tuple(blocks), sense="minimize", objective=dict(objective),
                   offset=offset, constraints=tuple(constraints))

    @classmethod
    def maximize(cls, blocks, objective, constraints, offset=0.0):
        return cls(blocks=tuple(blocks), sense="maximize", objective=dict(objective),
                   offset=offset, constraints=tuple(constraints))

    @classmethod
    def feasibility(cls, blocks, constraints):
        return cls(blocks=tuple(blocks), sense="feasibility", constraints=tuple(constraints))

    @property
    def dims(self) -> dict:
        return {name: int(dim) for name, dim in self.blocks}


@dataclass(frozen=True)
class ConicSolution:
    """Solver output: status, per-block PSD matrices and quality measures.

    ``duality_gap`` and ``max_constraint_violation`` are relative: the gap is
    scaled by 1 + |primal| + |dual| and each constraint residual by its
    coefficient Frobenius norm, matching the solver's stopping rule.
    """

    status: str
    blocks: dict
    objective_value: float
    duality_gap: float
    max_constraint_violation: float
    iterations: int
    certificate: dict | None = None
    info: dict = field(default_factory=dict)

    def block(self, name: str) -> np.ndarray:
        return self.blocks[name]


@dataclass(frozen=True)
class FeasibilityResult:
    """Outcome of a phase-I feasibility check."""

    feasible: bool
    solution: ConicSolution | None
    max_violation: float
    certificate: dict | None = None


# ===========================================================================
# Internal real form
# ===========================================================================


class _RealForm:
    """Real-embedded standard form: min <C,X> s.t. A(X) = b, X in (sym blocks) x R^d_+.

    ``>=`` rows are negated into ``<=`` and every inequality gets one slack in
    the pooled diagonal block; rows are normalized by coefficient norm.
    """

    def __init__(self, problem: ConicProblem):
        self.problem = problem
        dims = problem.dims
        self.sym_names = [n for n, d in dims.items() if d >= 2]
        self.scalar_names = [n for n, d in dims.items() if d == 1]
        self.sym_dims = [2 * dims[n] for n in self.sym_names]

        m = len(problem.constraints)
        n_slack = sum(1 for c in problem.constraints if c.relation != "==")
        self.diag_dim = len(self.scalar_names) + n_slack
        self.scalar_pos = {n: i for i, n in enumerate(self.scalar_names)}

        self.m = m
        self.A_sym = [np.zeros((m, d, d)) for d in self.sym_dims]
        self.A_diag = np.zeros((m, self.diag_dim))
        self.b = np.zeros(m)
        self.row_scale = np.ones(m)
        self.row_sign = np.ones(m)
        self.is_eq = np.zeros(m, dtype=bool)

        sym_index = {n: j for j, n in enumerate(self.sym_names)}
        slack_pos = len(self.scalar_names)
        self.slack_of_row = np.full(m, -1, dtype=int)
        for k, con in enumerate(problem.constraints):
            sign = -1.0 if con.relation == ">=" else 1.0
            self.row_sign[k] = sign
            self.is_eq[k] = con.relation == "=="
            embedded = {name: _embed_coeff(mat) for name, mat in con.coeffs.items()}
            scale = max(np.sqrt(sum(e[1] for e in embedded.values())), 1e-300)
            self.row_scale[k] = scale
            for name, (emb, _) in embedded.items():
                if name in self.scalar_pos:
                    raw = float(con.coeffs[name].real[0, 0])
                    self.A_diag[k, self.scalar_pos[name]] = sign * raw / scale
                else:
                    self.A_sym[sym_index[name]][k] = (sign / scale) * emb
            self.b[k] = sign * con.bound / scale
            if not self.is_eq[k]:
                self.A_diag[k, slack_pos] = 1.0
                self.slack_of_row[k] = slack_pos
                slack_pos += 1

        # Objective, internally minimized and scaled to unit norm.
        sgn = -1.0 if problem.sense == "maximize" else 1.0
        self.C_sym = [np.zeros((d, d)) for d in self.sym_dims]
        self.C_diag = np.zeros(self.diag_dim)
        embedded_obj = {name: _embed_coeff(mat) for name, mat in problem.objective.items()}
        self.obj_scale = max(np.sqrt(sum(e[1] for e in embedded_obj.values())), 1.0)
        for name, (emb, _) in embedded_obj.items():
            if name in self.scalar_pos:
                raw = float(problem.objective[name].real[0, 0])
                self.C_diag[self.scalar_pos[name]] = sgn * raw / self.obj_scale
            else:
                self.C_sym[sym_index[name]] = (sgn / self.obj_scale) * emb
        self.obj_sign = sgn
        self.nu = sum(self.sym_dims) + self.diag_dim

    # -- linear operators ---------------------------------------------------
    def op_A(self, X):
        syms, diag = X
        out = self.A_diag @ diag if self.diag_dim else np.zeros(self.m)
        for Aj, Xj in zip(self.A_sym, syms):
            out = out + np.tensordot(Aj, Xj, axes=([1, 2], [0, 1]))
        return out

    def op_At(self, y):
        syms = [np.tensordot(y, Aj, axes=(0, 0)) for Aj in self.A_sym]
        diag = self.A_diag.T @ y if self.diag_dim else np.zeros(0)
        return syms, diag

    def inner(self, X, Y) -> float:
        syms_x, dx = X
        syms_y, dy = Y
        tot = float(dx @ dy)
        for xj, yj in zip(syms_x, syms_y):
            tot += float(np.sum(xj * yj))
        return tot

    def objective_inner(self, X) -> float:
        return self.inner((self.C_sym, self.C_diag), X)

    def extract_blocks(self, X) -> dict:
        """Map the internal real iterate back to complex Hermitian user blocks."""
        syms, diag = X
        out = {}
        for j, name in enumerate(self.sym_names):
            out[name] = cxmat.real_extract(syms[j])
        for name, pos in self.scalar_pos.items():
            out[name] = np.array([[diag[pos]]], dtype=complex)
        return out

    def user_objective(self, blocks: dict) -> float:
        val = self.problem.offset
        for name, mat in self.problem.objective.items():
            val += float(np.real(np.sum(mat.T * blocks[name])))
        return val

    def user_violations(self, blocks: dict) -> np.ndarray:
        """Row-normalized violations of the original constraints at ``blocks``."""
        out = np.zeros(self.m)
        for k, con in enumerate(self.problem.constraints):
            lhs = 0.0
            for name, mat in con.coeffs.items():
                lhs += float(np.real(np.sum(mat.T * blocks[name])))
            resid = lhs - con.bound
            if con.relation == "==":
                out[k] = abs(resid)
            elif con.relation == "<=":
                out[k] = max(0.0, resid)
            else:
                out[k] = max(0.0, -resid)
            out[k] /= self.row_scale[k]
        return out

    def candidate_violations(self, syms, scalar_vals) -> np.ndarray:
        """Vectorized violations for an internal iterate (slacks excluded).

        ``syms`` must follow this form's sym-block order and ``scalar_vals``
        its scalar order; used by the phase-I early-accept hook.
        """
        n_scal = len(self.scalar_names)
        lhs = self.A_diag[:, :n_scal] @ scalar_vals if n_scal else np.zeros(self.m)
        for Aj, Xj in zip(self.A_sym, syms):
            lhs = lhs + np.tensordot(Aj, Xj, axes=([1, 2], [0, 1]))
        v = lhs - self.b
        return np.where(self.is_eq, np.abs(v), np.maximum(0.0, v))


# ===========================================================================
# Interior-point core (real arithmetic)
# ===========================================================================


def _chol_pd(M: np.ndarray) -> np.ndarray:
    """Cholesky with an eigenvalue floor fallback for nearly-PSD input."""
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(0.5 * (M + M.T))
        floor = max(1e-14, 1e-14 * float(vals.max(initial=1.0)))
        vals = np.maximum(vals, floor)
        return np.linalg.cholesky((vecs * vals) @ vecs.T)


class _NTScaling:
    """Per-block Nesterov-Todd scaling: W Z W = X, with the scaled point diagonal."""

    def __init__(self, X, Z):
        syms_x, dx = X
        syms_z, dz = Z
        self.G = []
        self.W = []
        self.sigma = []
        self.chol_x = []
        self.chol_z = []
        for Xj, Zj in zip(syms_x, syms_z):
            Lx = _chol_pd(Xj)
            Lz = _chol_pd(Zj)
            self.chol_x.append(Lx)
            self.chol_z.append(Lz)
            U, s, Vt = np.linalg.svd(Lz.T @ Lx)
            s = np.maximum(s, 1e-300)
            G = Lx @ Vt.T / np.sqrt(s)
            self.G.append(G)
            self.W.append(G @ G.T)
            self.sigma.append(s)
        self.w_diag = np.sqrt(dx / dz) if dx.size else dx
        self.sigma_diag = np.sqrt(dx * dz) if dx.size else dx

    def lyap_rhs_affine(self, X):
        """Predictor target T with R_hat = -Sigma^2, which collapses to T = -X."""
        syms, diag = X
        return [-s for s in syms], -diag

    def lyap_rhs(self, sig_mu: float, corr=None):
        """General target T = G L^-1(sig_mu I - Sigma^2 - corr) G^T per block."""
        syms_T = []
        for j, G in enumerate(self.G):
            s = self.sigma[j]
            R = np.diag(sig_mu - s * s)
            if corr is not None:
                R = R - corr[0][j]
            denom = 0.5 * (s[:, None] + s[None, :])
            syms_T.append(G @ (R / denom) @ G.T)
        sd = self.sigma_diag
        r_diag = sig_mu - sd * sd
        if corr is not None:
            r_diag = r_diag - corr[1]
        diag_T = self.w_diag * (r_diag / np.maximum(sd, 1e-300)) if sd.size else sd
        return syms_T, diag_T

    def scaled_product(self, dX, dZ):
        """Symmetrized product of the scaled directions, used by the corrector."""
        syms_x, ddx = dX
        syms_z, ddz = dZ
        corr_sym = []
        for j, G in enumerate(self.G):
            dxh = np.linalg.solve(G, np.linalg.solve(G, syms_x[j]).T).T  # G^-1 dX G^-T
            dzh = G.T @ syms_z[j] @ G
            corr_sym.append(0.5 * (dxh @ dzh + dzh @ dxh))
        if ddx.size:
            corr_diag = (ddx / self.w_diag) * (ddz * self.w_diag)
        else:
            corr_diag = ddx
        return corr_sym, corr_diag

    def apply_W(self, Y):
        """W Y W blockwise."""
        syms, diag = Y
        out_syms = [W @ s @ W for W, s in zip(self.W, syms)]
        out_diag = diag * self.w_diag ** 2 if diag.size else diag
        return out_syms, out_diag


def _max_step(X, dX, chols=None) -> float:
    """Largest alpha with X + alpha dX staying PSD (per block), up to 1e8."""
    syms, diag = X
    dsyms, ddiag = dX
    alpha = 1e8
    for j, (Xj, Dj) in enumerate(zip(syms, dsyms)):
        L = chols[j] if chols is not None else _chol_pd(Xj)
        S = np.linalg.solve(L, np.linalg.solve(L, Dj).T).T
        lam_min = float(np.linalg.eigvalsh(0.5 * (S + S.T)).min())
        if lam_min < 0:
            alpha = min(alpha, -1.0 / lam_min)
    if diag.size:
        neg = ddiag < 0
        if np.any(neg):
            alpha = min(alpha, float(np.min(-diag[neg] / ddiag[neg])))
    return alpha


def _solve_real(rf: _RealForm, gap_tol: float, feas_tol: float, max_iter: int,
                iteration_hook=None) -> dict:
    """Run the predictor-corrector IPM on a :class:`_RealForm`.

    Returns a dict with the final iterate, status string and residual history.
    ``iteration_hook(blocks)`` may return True to stop early (used by phase-I
    once the extracted iterate already satisfies the original constraints).
    """
    m = rf.m
    b_norm = max(1.0, float(np.max(np.abs(rf.b))) if m else 1.0)
    c_norm = max(1.0, *(float(np.linalg.norm(Cj)) for Cj in rf.C_sym + [np.atleast_1d(rf.C_diag)]))

    eta_p = max(10.0, 1.5 * b_norm)
    eta_d = 10.0
    X = ([eta_p * np.eye(d) for d in rf.sym_dims], eta_p * np.ones(rf.diag_dim))
    Z = ([eta_d * np.eye(d) for d in rf.sym_dims], eta_d * np.ones(rf.diag_dim))
    y = np.zeros(m)

    trace0 = sum(d for d in rf.sym_dims) * eta_p + rf.diag_dim * eta_p
    status = "max-iterations"
    it = 0
    best = None

    def residuals():
        rp = rf.b - rf.op_A(X)
        At_syms, At_diag = rf.op_At(y)
        rd = ([Cj - Aj - Zj for Cj, Aj, Zj in zip(rf.C_sym, At_syms, Z[0])],
              rf.C_diag - At_diag - Z[1])
        return rp, rd

    for it in range(1, max_iter + 1):
        rp, rd = residuals()
        mu = rf.inner(X, Z) / rf.nu
        pobj = rf.objective_inner(X)
        dobj = float(rf.b @ y)
        denom = 1.0 + abs(pobj) + abs(dobj)
        rel_gap = rf.inner(X, Z) / denom
        rel_p = float(np.max(np.abs(rp))) / b_norm if m else 0.0
        rel_d = max(
            [float(np.linalg.norm(s)) for s in rd[0]] + [float(np.linalg.norm(rd[1]))] or [0.0]
        ) / c_norm

        score = max(rel_p, rel_d, rel_gap)
        if best is None or score < best["score"]:
            best = {"score": score, "X": X, "y": y.copy(), "Z": Z, "iter": it,
                    "rel_p": rel_p, "rel_d": rel_d, "rel_gap": rel_gap, "mu": mu}

        if iteration_hook is not None and iteration_hook(
                X, {"dobj": dobj, "rel_d": rel_d, "rel_p": rel_p}):
            status = "hook-stop"
            best = {"score": score, "X": X, "y": y.copy(), "Z": Z, "iter": it,
                    "rel_p": rel_p, "rel_d": rel_d, "rel_gap": rel_gap, "mu": mu}
            break

        if rel_p <= feas_tol and rel_d <= feas_tol and rel_gap <= gap_tol:
            status = "optimal"
            best = {"score": score, "X": X, "y": y.copy(), "Z": Z, "iter": it,
                    "rel_p": rel_p, "rel_d": rel_d, "rel_gap": rel_gap, "mu": mu}
            break

        trace_x = sum(float(np.trace(s)) for s in X[0]) + float(np.sum(X[1]))
        if trace_x > 1e9 * trace0 and rel_p <= 1e2 * feas_tol:
            status = "unbounded"
            break
        if trace_x > 1e12 * trace0:
            status = "unbounded"
            break

        scal = _NTScaling(X, Z)

        # Schur complement M[k,l] = sum_j <A_k, W A_l W>, shared by both solves.
        M = np.zeros((m, m))
        for Aj, Wj in zip(rf.A_sym, scal.W):
            WAW = np.matmul(Wj, np.matmul(Aj, Wj))
            M += np.tensordot(Aj, WAW, axes=([1, 2], [1, 2]))
        if rf.diag_dim:
            M += (rf.A_diag * scal.w_diag ** 2) @ rf.A_diag.T
        M = 0.5 * (M + M.T)
        jitter = 1e-13 * max(1.0, float(np.trace(M))) / max(1, m)
        M_reg = M + jitter * np.eye(m)

        def newton(T):
            WrdW = scal.apply_W(rd)
            rhs = rp - rf.op_A(T) + rf.op_A(WrdW)
            try:
                dy = np.linalg.solve(M_reg, rhs)
            except np.linalg.LinAlgError:
                dy, *_ = np.linalg.lstsq(M_reg, rhs, rcond=None)
            At_syms, At_diag = rf.op_At(dy)
            dZ = ([rdj - aj for rdj, aj in zip(rd[0], At_syms)], rd[1] - At_diag)
            WdZW = scal.apply_W(dZ)
            dX = ([0.5 * (tj - wj + (tj - wj).T) for tj, wj in zip(T[0], WdZW[0])],
                  T[1] - WdZW[1])
            return dX, dy, dZ

        # Predictor (affine scaling).
        T_aff = scal.lyap_rhs_affine(X)
        dXa, dya, dZa = newton(T_aff)
        ap = min(1.0, 0.99 * _max_step(X, dXa, scal.chol_x))
        ad = min(1.0, 0.99 * _max_step(Z, dZa, scal.chol_z))
        Xa = ([xj + ap * dj for xj, dj in zip(X[0], dXa[0])], X[1] + ap * dXa[1])
        Za = ([zj + ad * dj for zj, dj in zip(Z[0], dZa[0])], Z[1] + ad * dZa[1])
        mu_aff = rf.inner(Xa, Za) / rf.nu
        sigma = min(1.0, max((mu_aff / mu) ** 3, 1e-10))

        # Corrector with Mehrotra second-order term.
        corr = scal.scaled_product(dXa, dZa)
        T = scal.lyap_rhs(sigma * mu, corr)
        dX, dy, dZ = newton(T)

        ap = min(1.0, 0.99 * _max_step(X, dX, scal.chol_x))
        ad = min(1.0, 0.99 * _max_step(Z, dZ, scal.chol_z))
        X = ([0.5 * ((xj + ap * dj) + (xj + ap * dj).T) for xj, dj in zip(X[0], dX[0])],
             np.maximum(X[1] + ap * dX[1], 1e-300))
        Z = ([0.5 * ((zj + ad * dj) + (zj + ad * dj).T) for zj, dj in zip(Z[0], dZ[0])],
             np.maximum(Z[1] + ad * dZ[1], 1e-300))
        y = y + ad * dy

    out = dict(best)
    out["status"] = status
    out["iterations"] = it
    return out


# ===========================================================================
# Public entry points
# ===========================================================================


def _solution_from_state(problem: ConicProblem, rf: _RealForm, state: dict,
                         status: str) -> ConicSolution:
    blocks = rf.extract_blocks(state["X"])
    viol = rf.user_violations(blocks)
    dual_obj = rf.obj_sign * float(rf.b @ state["y"]) * rf.obj_scale + problem.offset
    return ConicSolution(
        status=status,
        blocks=blocks,
        objective_value=rf.user_objective(blocks),
        duality_gap=float(state["rel_gap"]),
        max_constraint_violation=float(viol.max(initial=0.0)),
        iterations=state["iter"],
        info={"rel_p": state["rel_p"], "rel_d": state["rel_d"], "mu": state["mu"],
              "dual": state["y"], "dual_objective": dual_obj},
    )


def _analytic_unconstrained(problem: ConicProblem) -> ConicSolution:
    """No constraints: min <C,X> over the PSD cone is 0 at X = 0 iff C is PSD."""
    sgn = -1.0 if problem.sense == "maximize" else 1.0
    unbounded = False
    for name, mat in problem.objective.items():
        mat = np.atleast_2d(np.asarray(mat, dtype=complex))
        if float(np.linalg.eigvalsh(cxmat.herm(mat)).min()) * sgn < -1e-12:
            unbounded = True
    blocks = {name: np.zeros((d, d), dtype=complex) for name, d in problem.blocks}
    if unbounded:
        return ConicSolution(status="unbounded", blocks=blocks, objective_value=float("inf"),
                             duality_gap=float("inf"), max_constraint_violation=0.0, iterations=0)
    return ConicSolution(status="optimal", blocks=blocks, objective_value=problem.offset,
                         duality_gap=0.0, max_constraint_violation=0.0, iterations=0)


def solve_sdp(problem: ConicProblem, gap_tol: float = DEFAULT_GAP_TOL,
              feas_tol: float = DEFAULT_FEAS_TOL, max_iter: int = 100) -> ConicSolution:
    """Solve an SDP in primal trace form.

    Returns a :class:`ConicSolution` whose status is ``optimal`` when the
    relative duality gap is below ``gap_tol`` and the scaled primal/dual
    residuals are below ``feas_tol``; ``unbounded`` when the primal iterates
    diverge with small primal residual; ``max-iterations`` otherwise (best
    iterate attached).  Use :func:`check_feasible` for feasibility questions.
    """
    if gap_tol <= 0 or feas_tol <= 0:
        raise InvalidInputError("tolerances must be positive")
    if problem.sense == "feasibility":
        raise InvalidInputError("solve_sdp expects an optimization sense; use check_feasible")
    if not problem.constraints:
        return _analytic_unconstrained(problem)
    rf = _RealForm(problem)
    state = _solve_real(rf, gap_tol=gap_tol, feas_tol=feas_tol, max_iter=max_iter)
    return _solution_from_state(problem, rf, state, state["status"])


def check_feasible(problem: ConicProblem, feas_tol: float = DEFAULT_FEAS_TOL,
                   max_iter: int = 80) -> FeasibilityResult:
    """Phase-I feasibility test: minimize the maximum row-normalized violation.

    A fresh variable t >= 0 relaxes every constraint (equalities two-sidedly);
    the problem is feasible exactly when the attained minimum violation is at
    most ``feas_tol``.  The search stops early as soon as the current iterate
    already satisfies the original constraints.  On infeasibility the phase-I
    dual value is attached as a certified lower bound on the violation any
    point must incur.
    """
    if feas_tol <= 0:
        raise InvalidInputError("feas_tol must be positive")
    if not problem.constraints:
        raise InvalidInputError("feasibility check needs constraints")

    t_name = "__phase1_t"
    if t_name in problem.dims:
        raise InvalidInputError(f"block name {t_name!r} is reserved")
    blocks = tuple(problem.blocks) + ((t_name, 1),)
    one = np.array([[1.0]])
    relaxed = []
    for con in problem.constraints:
        scale = np.sqrt(sum(float(np.sum(np.abs(np.asarray(m)) ** 2)) for m in con.coeffs.values()))
        scale = max(scale, 1e-300)
        t_coeff = {t_name: -scale * one}
        if con.relation in ("<=", "=="):
            relaxed.append(TraceConstraint({**con.coeffs, **t_coeff}, con.bound, "<="))
        if con.relation in (">=", "=="):
            neg = {n: -np.asarray(m) for n, m in con.coeffs.items()}
            relaxed.append(TraceConstraint({**neg, **t_coeff}, -con.bound, "<="))

    phase1 = ConicProblem.minimize(blocks=blocks, objective={t_name: one},
                                   constraints=relaxed)
    rf_orig = _RealForm(problem)
    rf = _RealForm(phase1)

    accept = 0.999 * feas_tol
    n_orig_scal = len(rf_orig.scalar_names)

    def hook(x_now, info: dict) -> bool:
        # Phase-I shares the original sym-block and scalar ordering, so the
        # iterate maps straight onto the original form's stacked arrays.
        viol = rf_orig.candidate_violations(x_now[0], x_now[1][:n_orig_scal])
        if float(viol.max(initial=0.0)) <= accept:
            return True
        # Certified-enough infeasibility: the phase-I dual value lower-bounds
        # the attainable violation once the dual residual is negligible.
        return info["rel_d"] <= 1e-8 and info["dobj"] >= 3.0 * feas_tol

    state = _solve_real(rf, gap_tol=max(1e-9, 0.05 * feas_tol),
                        feas_tol=min(DEFAULT_FEAS_TOL, 0.1 * feas_tol),
                        max_iter=max_iter, iteration_hook=hook)

    cand = {n: m for n, m in rf.extract_blocks(state["X"]).items() if n in problem.dims}
    max_viol = float(rf_orig.user_violations(cand).max(initial=0.0))
    if max_viol <= feas_tol:
        sol = ConicSolution(
            status="optimal", blocks=cand, objective_value=0.0,
            duality_gap=float(state["rel_gap"]), max_constraint_violation=max_viol,
            iterations=state["iter"])
        return FeasibilityResult(feasible=True, solution=sol, max_violation=max_viol)

    dual_bound = float(rf.b @ state["y"])  # lower bound on achievable violation
    cert = {"dual": state["y"], "min_violation_lower_bound": dual_bound,
            "attained_violation": max_viol, "status": state["status"],
            "iterations": state["iter"]}
    return FeasibilityResult(feasible=False, solution=None, max_violation=max_viol,
                             certificate=cert)


# ===========================================================================
# Norm-ball SOCP
# ===========================================================================


@dataclass(frozen=True)
class SocpProblem:
    """maximize Re(objective^H x) s.t. rows @ x = 0 and ||x||^2 <= rho."""

    objective: np.ndarray
    rows: np.ndarray
    rho: float

    def __post_init__(self):
        f = np.asarray(self.objective, dtype=complex).ravel()
        rows = np.asarray(self.rows, dtype=complex)
        if rows.size == 0:
            rows = np.zeros((0, f.size), dtype=complex)
        rows = np.atleast_2d(rows)
        if rows.shape[1] != f.size:
            raise InvalidInputError("constraint rows must match the unknown's dimension")
        if self.rho < 0:
            raise InvalidInputError("norm bound rho must be non-negative")
        object.__setattr__(self, "objective", f)
        object.__setattr__(self, "rows", rows)


def solve_socp(p: SocpProblem) -> np.ndarray:
    """Exact maximizer of the norm-ball SOCP.

    Reduces to the null space of the constraint rows with an SVD basis Q and
    applies Cauchy-Schwarz there: x = sqrt(rho) Q g / ||g|| with g = Q^H f.
    The imaginary part of objective^H x vanishes at this maximizer.  Always
    succeeds (x = 0 is feasible and optimal when the projected objective is
    zero or rho = 0).
    """
    n = p.objective.size
    if p.rho == 0.0:
        return np.zeros(n, dtype=complex)
    if p.rows.shape[0] == 0:
        q = np.eye(n, dtype=complex)
    else:
        _, s, vt = np.linalg.svd(p.rows)
        tol = max(p.rows.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
        rank = int(np.sum(s > tol))
        q = vt[rank:].conj().T
    if q.shape[1] == 0:
        return np.zeros(n, dtype=complex)
    g = q.conj().T @ p.objective
    g_norm = np.linalg.norm(g)
    if g_norm < 1e-300:
        return np.zeros(n, dtype=complex)
    return np.sqrt(p.rho) * (q @ g) / g_norm


# ===========================================================================
# Debug dump
# ===========================================================================


def dump_problem(problem: ConicProblem, path=None) -> str:
    """Plain-text matrix-list dump of a problem for offline inspection.

    Format: one header line, then per block ``block <name> dim <n>``, the
    objective and each constraint as labelled complex matrix rows.  Returns the
    text; also writes it to ``path`` when given.
    """
    buf = io.StringIO()
    buf.write(f"conic-problem sense={problem.sense} blocks={len(problem.blocks)} "
              f"constraints={len(problem.constraints)} offset={problem.offset!r}\n")
    for name, dim in problem.blocks:
        buf.write(f"block {name} dim {dim}\n")

    def write_mat(name, mat):
        mat = np.atleast_2d(np.asarray(mat, dtype=complex))
        buf.write(f"  matrix {name}\n")
        for row in mat:
            buf.write("    " + " ".join(f"{v.real:+.17g}{v.imag:+.17g}j" for v in row) + "\n")

    buf.write("objective\n")
    for name, mat in problem.objective.items():
        write_mat(name, mat)
    for k, con in enumerate(problem.constraints):
        buf.write(f"constraint {k} relation {con.relation} bound {con.bound!r}\n")
        for name, mat in con.coeffs.items():
            write_mat(name, mat)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as f:
            f.write(text)
    return text
