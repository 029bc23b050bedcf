"""Shared test utilities: random problem generators and independent oracles.

The oracles here deliberately avoid the code paths they are used to check:
the planted-SDP generator builds optima from KKT conditions, the detector
oracle is plain Monte-Carlo sampling, and the rank-one search oracle explores
beamformer space by randomized search with closed-form inner eliminations.
"""

from __future__ import annotations

import math

import numpy as np

from covertbeam import cxmat
from covertbeam.channel import ChannelSet, CoverBeam, ScenarioParams
from covertbeam.conic import ConicProblem, TraceConstraint


def rand_herm(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    a = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    return scale * cxmat.herm(a)


def rand_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def crandn(rng: np.random.Generator, *shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def planted_sdp(rng: np.random.Generator, dims: list, m: int,
                with_slack_ineq: bool = False):
    """Random equality-form SDP with a planted strictly-complementary optimum.

    Draws per-block orthonormal frames, splits them into primal/dual supports
    (X* and Z* PSD with X* Z* = 0), picks dual multipliers y*, and sets
    C = A*(y*) + Z*, b = A(X*).  Then (X*, y*, Z*) is a KKT point with zero
    gap, so min <C, X> equals <C, X*> exactly.
    Returns (problem, optimal_value).
    """
    names = [f"X{i}" for i in range(len(dims))]
    xs, zs = {}, {}
    for name, n in zip(names, dims):
        r = max(1, n // 2)
        q = rand_unitary(rng, n)
        dx = np.concatenate([rng.uniform(0.5, 2.0, r), np.zeros(n - r)])
        dz = np.concatenate([np.zeros(r), rng.uniform(0.5, 2.0, n - r)])
        xs[name] = cxmat.herm((q * dx) @ q.conj().T)
        zs[name] = cxmat.herm((q * dz) @ q.conj().T)
    y_star = rng.standard_normal(m)
    cons, rows = [], []
    for k in range(m):
        coeffs = {name: rand_herm(rng, n) for name, n in zip(names, dims)}
        bk = sum(float(np.real(np.trace(coeffs[nm] @ xs[nm]))) for nm in names)
        cons.append(TraceConstraint(coeffs, bk, "=="))
        rows.append(coeffs)
    c = {}
    for name, n in zip(names, dims):
        c[name] = cxmat.herm(sum(y_star[k] * rows[k][name] for k in range(m)) + zs[name])
    if with_slack_ineq:
        extra = {name: rand_herm(rng, n) for name, n in zip(names, dims)}
        slack_b = sum(float(np.real(np.trace(extra[nm] @ xs[nm]))) for nm in names) + 1.0
        cons.append(TraceConstraint(extra, slack_b, "<="))
    prob = ConicProblem.minimize(blocks=list(zip(names, dims)), objective=c,
                                 constraints=cons)
    obj = sum(float(np.real(np.trace(c[nm] @ xs[nm]))) for nm in names)
    return prob, obj


def detector_mc_oracle(lam0: float, lam1: float, threshold: float, draws: int,
                       rng: np.random.Generator):
    """Monte-Carlo false-alarm and missed-detection rates for a threshold test
    on exponential received power, with the likelihood-ratio orientation."""
    y0 = rng.exponential(lam0, size=draws)
    y1 = rng.exponential(lam1, size=draws)
    if lam1 >= lam0:
        p_fa = float(np.mean(y0 >= threshold))
        p_md = float(np.mean(y1 < threshold))
    else:
        p_fa = float(np.mean(y0 < threshold))
        p_md = float(np.mean(y1 >= threshold))
    return p_fa, p_md


def brute_force_covert_sinr(params: ScenarioParams, ch: ChannelSet, cover: CoverBeam,
                            samples: int = 1_000_000, seed: int = 0,
                            refine_rounds: int = 6) -> float:
    """Randomized rank-one search for the best covert SINR (N small).

    Parameterizes Bob's beam by (direction, power) and a free phase for the
    warden-side amplitude of the H1 cover beam; the cover beam itself is then
    the minimum-interference solution of the two linear amplitude constraints,
    with the leftover complex degree of freedom used to cancel Bob-side
    interference in closed form (clipped to the remaining power).  Candidates
    violating the power budget are rejected.  After the global random pass,
    the best candidate is refined by shrinking Gaussian perturbations.
    Completely independent of the conic solver.
    """
    rng = np.random.default_rng(seed)
    n = params.n
    h_b, h_c, h_w = ch.h_b, ch.h_c, ch.h_w
    tau1, tau2 = cover.tau1, cover.tau2
    p_tot, s_b2, s_c2 = params.p_total, params.sigma_b2, params.sigma_c2

    rows = np.stack([h_c.conj(), h_w.conj()])           # amplitude constraints
    pinv = np.linalg.pinv(rows)
    _, _, vt = np.linalg.svd(rows)
    null = vt[2:].conj().T                              # (n, n-2) basis normal to h_c,h_w
    beta = null.conj().T @ h_b
    bn2 = float(np.vdot(beta, beta).real)

    def evaluate(dirs, p_bs, phases):
        """Batched: best SINR for each (Bob direction, Bob power, cover phase).

        The H1 cover beam is eliminated in closed form: min-norm amplitude fit
        plus a Bob-interference-cancelling null component clipped to the
        leftover power; the residual interference is alpha (1 - clip factor).
        """
        nb = np.linalg.norm(dirs, axis=1)
        ok = (nb > 0) & (p_bs >= 0.0) & (p_bs <= p_tot)
        w_b = np.sqrt(p_bs)[:, None] * dirs / np.where(nb > 0, nb, 1.0)[:, None]
        t2 = tau2 - np.abs(w_b @ h_w.conj()) ** 2
        ok &= t2 >= 0
        t1 = tau1 * (np.abs(w_b @ h_c.conj()) ** 2 + s_c2) / s_c2
        amp = np.stack([np.sqrt(t1), np.sqrt(np.maximum(t2, 0.0)) * np.exp(1j * phases)],
                       axis=1)
        w_p = amp @ pinv.T
        budget = p_tot - p_bs - np.sum(np.abs(w_p) ** 2, axis=1)
        ok &= budget >= 0
        alpha2 = np.abs(w_p @ h_b.conj()) ** 2
        if bn2 > 0:
            c_norm = np.sqrt(alpha2 / bn2)              # norm of the cancelling component
            clip = np.minimum(1.0, np.sqrt(np.maximum(budget, 0.0)) / np.maximum(c_norm, 1e-300))
            interf = alpha2 * (1.0 - clip) ** 2
        else:
            interf = alpha2
        sinr = np.abs(w_b @ h_b.conj()) ** 2 / (interf + s_b2)
        return np.where(ok, sinr, -1.0)

    n_global = max(1, int(0.7 * samples))
    dirs = crandn(rng, n_global, n)
    p_bs = rng.uniform(0.0, p_tot, n_global)
    phases = rng.uniform(0.0, 2 * math.pi, n_global)
    vals = evaluate(dirs, p_bs, phases)
    k = int(np.argmax(vals))
    best_val = float(vals[k])
    best_arg = (dirs[k], p_bs[k], phases[k])

    n_local = max(1, (samples - n_global) // refine_rounds)
    scale = 0.5
    for _ in range(refine_rounds):
        d0, p0, f0 = best_arg
        cand_d = d0[None, :] + scale * crandn(rng, n_local, n)
        cand_p = np.clip(p0 + scale * 0.3 * p_tot * rng.standard_normal(n_local), 0.0, p_tot)
        cand_f = f0 + scale * rng.standard_normal(n_local)
        vals = evaluate(cand_d, cand_p, cand_f)
        k = int(np.argmax(vals))
        if float(vals[k]) > best_val:
            best_val = float(vals[k])
            best_arg = (cand_d[k], cand_p[k], cand_f[k])
        scale *= 0.5
    return best_val
