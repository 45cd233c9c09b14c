"""Level-set baseline: root-find the value function

    v(tau) = min { ||A(L R^H) - b||_F : ||L||_F^2 + ||R||_F^2 <= 2 tau }

for v(tau) = eta.  The value function is evaluated inexactly by projected
gradient on the squared residual with backtracking; the root search is a
secant iteration guarded by bisection so the bracket endpoints always
straddle eta.  This is a deliberately simplified comparator for the
alternating scheme, not a full level-set solver: no dual derivative of v is
computed, Newton steps are replaced by secants.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .altmin import init_factors
from .pdsolver import FactorPair
from .reporting import SliceReport

_TINY = 1e-300


class RootBracketError(RuntimeError):
    """The value function never crossed eta within the expansion budget."""

    def __init__(self, message, taus=None, values=None):
        super().__init__(message)
        self.taus = list(taus or [])
        self.values = list(values or [])


@dataclass
class LevelSetConfig:
    tau0: float = 1.0
    root_tol: float = 1e-4
    max_root_iters: int = 40
    inner_iters: int = 300
    inner_tol: float = 1e-7
    max_backtracks: int = 40
    max_expansions: int = 60
    seed: int = 0

    def __post_init__(self):
        if self.tau0 <= 0:
            raise ValueError("tau0 must be positive")
        if self.root_tol <= 0 or self.inner_tol <= 0:
            raise ValueError("tolerances must be positive")


def project_ball(L, R, tau):
    """Exact Euclidean projection of the stacked factors onto
    ||L||^2 + ||R||^2 <= 2 tau: rescale both when outside, else identity."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    sq = float(np.linalg.norm(L)) ** 2 + float(np.linalg.norm(R)) ** 2
    if sq <= 2.0 * tau:
        return L, R
    scale = np.sqrt(2.0 * tau / sq)
    return scale * L, scale * R


def value_function(op, b, tau, r, cfg: LevelSetConfig | None = None, warm=None):
    """Approximate v(tau); returns (v, (L, R), inner_iterations).

    Projected gradient on g(L, R) = 1/2 ||A(L R^H) - b||^2 with a
    backtracking line search; each step re-projects onto the factor ball.
    ``warm`` factors (from a nearby tau) are projected in and reused.
    """
    cfg = cfg or LevelSetConfig()
    b = np.asarray(b, dtype=np.complex128)
    p, q = op.factor_shape
    if warm is not None:
        L, R = np.array(warm[0]), np.array(warm[1])
    else:
        pair = init_factors(p, q, r, cfg.seed)
        L, R = pair.L, pair.R
    L, R = project_ball(L, R, tau)

    res = op.forward(L @ R.conj().T) - b
    f = 0.5 * float(np.linalg.norm(res)) ** 2
    t = 1.0
    iters = 0
    for it in range(cfg.inner_iters):
        G = op.adjoint(res)
        gL = G @ R
        gR = G.conj().T @ L
        gnorm_sq = float(np.linalg.norm(gL)) ** 2 + float(np.linalg.norm(gR)) ** 2
        if gnorm_sq == 0.0:
            break
        accepted = False
        for _ in range(cfg.max_backtracks):
            Lc, Rc = project_ball(L - t * gL, R - t * gR, tau)
            dL = Lc - L
            dR = Rc - R
            step_sq = float(np.linalg.norm(dL)) ** 2 + float(np.linalg.norm(dR)) ** 2
            res_c = op.forward(Lc @ Rc.conj().T) - b
            f_c = 0.5 * float(np.linalg.norm(res_c)) ** 2
            linear = float(np.real(np.vdot(gL, dL)) + np.real(np.vdot(gR, dR)))
            if f_c <= f + linear + step_sq / (2.0 * t) + 1e-15 * max(f, 1.0):
                accepted = True
                break
            t *= 0.5
        iters = it + 1
        if not accepted:
            break
        moved = np.sqrt(step_sq)
        L, R, res, f = Lc, Rc, res_c, f_c
        scale = 1.0 + float(np.linalg.norm(L)) + float(np.linalg.norm(R))
        if moved <= cfg.inner_tol * scale:
            break
        t *= 1.5

    v = float(np.linalg.norm(res))
    return v, (L, R), iters


def solve_levelset(op, b, eta, r, cfg: LevelSetConfig | None = None):
    """Root-find v(tau) = eta; returns (FactorPair, X, SliceReport).

    The bracket starts at tau=0 (where v = ||b|| exactly, no evaluation
    needed) and expands tau upward by doubling until v drops below eta;
    failure to bracket raises :class:`RootBracketError` with the tried
    points.  Each secant candidate is forced inside the current bracket,
    falling back to bisection, so the endpoints straddle eta throughout.
    """
    t_start = time.perf_counter()
    cfg = cfg or LevelSetConfig()
    b = np.asarray(b, dtype=np.complex128)
    p, q = op.factor_shape
    r = max(1, min(r, p, q))
    b_norm = float(np.linalg.norm(b))
    if eta >= b_norm:
        # Zero factors are already feasible and have the smallest ball.
        pair = FactorPair(np.zeros((p, r)), np.zeros((q, r)), r)
        report = SliceReport(rank=r, eta_target=eta,
                             rel_residual=b_norm / max(b_norm, _TINY),
                             outer_iters=0, inner_iters=0,
                             wall_s=time.perf_counter() - t_start, status="ok")
        return pair, np.zeros((p, q), dtype=np.complex128), report

    tol_abs = cfg.root_tol * b_norm
    tau_lo, v_lo = 0.0, b_norm
    tau_hi = cfg.tau0
    warm = None
    total_inner = 0
    evals = 0
    tried_taus, tried_values = [], []

    v_hi, warm, it = value_function(op, b, tau_hi, r, cfg, warm)
    total_inner += it
    evals += 1
    tried_taus.append(tau_hi)
    tried_values.append(v_hi)
    expansions = 0
    while v_hi > eta:
        if expansions >= cfg.max_expansions:
            raise RootBracketError(
                f"v(tau) stayed above eta={eta:.3e} up to tau={tau_hi:.3e}",
                taus=tried_taus, values=tried_values)
        tau_lo, v_lo = tau_hi, v_hi
        tau_hi *= 2.0
        v_prev = v_hi
        v_hi, warm, it = value_function(op, b, tau_hi, r, cfg, warm)
        total_inner += it
        # Doubling tau without the value moving means the warm start is
        # parked at a spurious stationary point of the nonconvex inner
        # problem; retry from a fresh draw and keep the better of the two.
        if v_hi > 0.95 * v_prev:
            fresh_cfg = LevelSetConfig(**{**cfg.__dict__, "seed": cfg.seed + expansions + 1})
            v_fresh, warm_fresh, it2 = value_function(op, b, tau_hi, r, fresh_cfg)
            total_inner += it2
            if v_fresh < v_hi:
                v_hi, warm = v_fresh, warm_fresh
        evals += 1
        tried_taus.append(tau_hi)
        tried_values.append(v_hi)
        expansions += 1

    best_gap = abs(v_hi - eta)
    best = (warm[0].copy(), warm[1].copy(), v_hi)
    bracket_history = [(tau_lo, v_lo, tau_hi, v_hi)]

    # Secant on the bracket with the Illinois weighting: when the same
    # endpoint survives twice in a row, its stored value is pulled toward
    # eta, which stops the one-sided crawl that a flat v(tau) causes.  A
    # third consecutive one-sided update forces a plain bisection step, so
    # the bracket shrinks geometrically even across a near-vertical v.
    w_lo, w_hi = v_lo, v_hi
    last_side = 0
    side_repeats = 0
    for _ in range(cfg.max_root_iters):
        if best_gap <= tol_abs:
            break
        denom = w_hi - w_lo
        if denom != 0.0:
            tau_next = tau_lo + (eta - w_lo) * (tau_hi - tau_lo) / denom
        else:
            tau_next = 0.5 * (tau_lo + tau_hi)
        lo_guard = tau_lo + 0.01 * (tau_hi - tau_lo)
        hi_guard = tau_hi - 0.01 * (tau_hi - tau_lo)
        if side_repeats >= 2 or not lo_guard <= tau_next <= hi_guard:
            tau_next = 0.5 * (tau_lo + tau_hi)
        v_next, warm, it = value_function(op, b, tau_next, r, cfg, warm)
        total_inner += it
        if abs(v_next - eta) > tol_abs:
            # The warm start may be hysteretic (stuck high, or dragged into
            # an overfit basin from a larger tau).  A fresh evaluation is an
            # independent upper bound on v(tau); keep the smaller.
            fresh_cfg = LevelSetConfig(**{**cfg.__dict__, "seed": cfg.seed + 7919 + evals})
            v_fresh, warm_fresh, it2 = value_function(op, b, tau_next, r, fresh_cfg)
            total_inner += it2
            if v_fresh < v_next:
                v_next, warm = v_fresh, warm_fresh
        evals += 1
        tried_taus.append(tau_next)
        tried_values.append(v_next)
        if abs(v_next - eta) < best_gap:
            best_gap = abs(v_next - eta)
            best = (warm[0].copy(), warm[1].copy(), v_next)
        if v_next > eta:
            tau_lo, v_lo, w_lo = tau_next, v_next, v_next
            if last_side == 1:
                w_hi = 0.5 * (w_hi + eta)
            side_repeats = side_repeats + 1 if last_side == 1 else 0
            last_side = 1
        else:
            tau_hi, v_hi, w_hi = tau_next, v_next, v_next
            if last_side == -1:
                w_lo = 0.5 * (w_lo + eta)
            side_repeats = side_repeats + 1 if last_side == -1 else 0
            last_side = -1
        bracket_history.append((tau_lo, v_lo, tau_hi, v_hi))

    L, R, v_best = best
    X = L @ R.conj().T
    report = SliceReport(
        rank=r,
        eta_target=eta,
        rel_residual=v_best / max(b_norm, _TINY),
        outer_iters=evals,
        inner_iters=total_inner,
        wall_s=time.perf_counter() - t_start,
        status="ok",
        history=bracket_history,
    )
    return FactorPair(L, R, r), X, report
