"""
Derivative-free constrained minimization by linear approximation (COBYLA-style)

The method keeps an (n+1)-point simplex, fits linear models of the objective
and of every inequality constraint c_k(x) >= 0 by interpolation on it, and
steps inside a trust region of radius rho. Steps are judged with the merit
function

    phi(x) = f(x) + mu * max(0, max_k -c_k(x))

Penalty update: after each trust-region step, with predicted objective change
df = g_f . dx and predicted violation reduction dv > 0, mu is raised to
2 * df / dv whenever mu < 1.5 * df / dv. When rho is reduced, mu is lowered
to (f_max - f_min) / denom over the simplex when that is smaller, denom being
the smallest constraint spread among constraints that are violated somewhere
on the simplex (mu = 0 if there is none).
"""
import logging
import math
from typing import Callable, Dict, List, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, model_validator

from .config import MAX_EVALS, RHO_BEGIN, RHO_END
from .errors import EvaluationError, ParameterError
from .metrics import EvaluationRecord

logger = logging.getLogger(__name__)

# Simplex acceptability and step constants
ALPHA = 0.25  # vertices closer than ALPHA * rho to the opposite face make the simplex degenerate
BETA = 2.1  # edges longer than BETA * rho make the simplex too wide
GAMMA = 0.5  # geometry-improving step length, in units of rho
DELTA = 1.1  # edge length allowed when choosing a vertex to drop
ROUNDOFF_LIMIT = 0.1  # max |simi @ sim - I| before the inverse is distrusted


class OptimizerConfig(BaseModel):
    max_evals: int = MAX_EVALS
    rho_begin: float = RHO_BEGIN
    rho_end: float = RHO_END
    seed: int = 0

    @model_validator(mode="after")
    def _check_radii(self):
        if not 0 < self.rho_end <= self.rho_begin:
            raise ValueError(f"Need 0 < rho_end <= rho_begin, got {self.rho_end}, {self.rho_begin}")
        return self


class InequalityConstraint:
    """c(x) >= 0 is feasible"""

    def __init__(self, evaluate: Callable[[np.ndarray], float], label: str = ""):
        self.evaluate = evaluate
        self.label = label

    def __call__(self, x: np.ndarray) -> float:
        return float(self.evaluate(x))


class OptimizationTrace(BaseModel):
    records: List[EvaluationRecord] = []
    best_params: List[float] = []
    best_objective: float = math.inf
    best_iteration: int = -1
    best_constraint_values: List[float] = []
    constraint_violated: bool = False
    termination_reason: Literal["eval_budget", "radius_converged", "ill_conditioned"] = "eval_budget"
    final_rho: float = 0.0


def _ball_step_length(d: np.ndarray, s: np.ndarray, rho: float) -> float:
    """Largest alpha with |d + alpha s| <= rho"""
    a = float(s @ s)
    b = float(d @ s)
    c = float(d @ d) - rho * rho
    disc = max(b * b - a * c, 0.0)
    return max((-b + math.sqrt(disc)) / a, 0.0)


def _reduce_violation(gc: np.ndarray, c: np.ndarray, rho: float, d: np.ndarray, max_iter: int):
    """
    Move from d to lower the largest linearized violation max_k -(c_k + gc_k . d)

    Returns:
        (d, level, on_boundary): level is the violation left over
    """
    viol = -(c + gc @ d)
    level = max(0.0, float(viol.max()))
    if level <= 0.0:
        return d, 0.0, False
    tol = 1e-12 * max(1.0, level)
    active = [int(k) for k in np.flatnonzero(viol >= level - tol)]

    for _ in range(max_iter):
        ga = gc[active]
        lam = np.linalg.lstsq(ga @ ga.T, np.ones(len(active)), rcond=None)[0]
        if len(active) > 1 and lam.min() < 0:
            active.pop(int(np.argmin(lam)))
            continue
        s = ga.T @ lam
        if not np.any(s) or not np.allclose(ga @ s, 1.0, atol=1e-8):
            break  # violation cannot be reduced along any direction

        steps = {"zero": level, "ball": _ball_step_length(d, s, rho)}
        rates = gc @ s
        block, block_alpha = -1, math.inf
        for k in range(c.size):
            if k not in active and rates[k] < 1.0:
                alpha = (level - viol[k]) / (1.0 - rates[k])
                if alpha < block_alpha:
                    block, block_alpha = k, max(alpha, 0.0)
        steps["block"] = block_alpha
        kind = min(steps, key=steps.get)
        d = d + steps[kind] * s
        viol = -(c + gc @ d)
        level = max(0.0, float(viol.max()))

        if kind == "ball":
            return d, level, True
        if kind == "zero" or level <= tol:
            return d, 0.0, False
        active.append(block)
        if len(active) > d.size:
            break
    return d, level, False


def _reduce_objective(gc, c, level, gf, rho, d, max_iter):
    """
    Projected steepest descent of gf . d subject to c_k + gc_k . d >= -level

    Returns:
        (d, on_boundary)
    """
    gnorm = float(np.linalg.norm(gf))
    if gnorm == 0.0:
        return d, False
    slack = c + gc @ d + level
    tol = 1e-10 * max(1.0, float(np.abs(c).max()) if c.size else 1.0)
    active = [int(k) for k in np.flatnonzero(slack <= tol)]

    for _ in range(max_iter):
        if active:
            ga = gc[active]
            lam = np.linalg.lstsq(ga.T, gf, rcond=None)[0]
            s = -(gf - ga.T @ lam)
        else:
            lam = np.zeros(0)
            s = -gf
        if np.linalg.norm(s) <= 1e-12 * gnorm:
            if active and lam.min() < 0:
                active.pop(int(np.argmin(lam)))
                continue
            return d, False  # linear optimum strictly inside the trust region

        alpha = _ball_step_length(d, s, rho)
        block = -1
        rates = gc @ s
        for k in range(c.size):
            if k not in active and rates[k] < 0:
                alpha_k = max(slack[k], 0.0) / -rates[k]
                if alpha_k < alpha:
                    alpha, block = alpha_k, k
        d = d + alpha * s
        if block < 0:
            return d, True
        slack = c + gc @ d + level
        active.append(block)
    return d, False


def trust_region_step(gc: np.ndarray, c: np.ndarray, gf: np.ndarray, rho: float):
    """
    Step of the linearized subproblem inside |d| <= rho

    Stage one lowers the largest linearized constraint violation; once it is
    zero (or cannot be lowered) stage two descends the linear objective while
    keeping every linearized violation at or below what stage one left.

    Returns:
        (d, on_boundary)
    """
    n = gf.size
    d = np.zeros(n)
    max_iter = 2 * (n + c.size) + 5
    level = 0.0
    if c.size:
        d, level, on_boundary = _reduce_violation(gc, c, rho, d, max_iter)
        if on_boundary:
            return d, True
    return _reduce_objective(gc, c, level, gf, rho, d, max_iter)


class Cobyla:
    """
    Constrained optimization by linear approximation

    One instance runs one minimization at a time; the per-evaluation monitor and
    the metric hook are set before calling minimize.
    """

    def __init__(self, config: Optional[OptimizerConfig] = None):
        self.config = config or OptimizerConfig()
        self._monitor: Optional[Callable[[EvaluationRecord], None]] = None

    def attach_monitor(self, callback: Callable[[EvaluationRecord], None]):
        """Call `callback` once per objective evaluation, in evaluation order"""
        self._monitor = callback

    def minimize(
        self,
        objective: Callable[[np.ndarray], float],
        constraints: Sequence[InequalityConstraint],
        x0,
        describe: Optional[Callable[[np.ndarray], Dict]] = None,
    ) -> OptimizationTrace:
        """
        Minimize `objective` subject to every constraint being >= 0

        Args:
            objective: Total function of the parameter vector
            constraints: Inequality constraints
            x0: Start point
            describe: Optional hook returning extra EvaluationRecord fields for a point

        Returns:
            OptimizationTrace with one record per evaluation
        """
        cfg = self.config
        x0 = np.asarray(x0, dtype=float).reshape(-1).copy()
        n, m = x0.size, len(constraints)
        if n < 1 or not np.all(np.isfinite(x0)):
            raise ParameterError(f"x0 must be a non-empty finite vector, got {x0}")
        if cfg.max_evals < n + 2:
            raise ParameterError(f"max_evals={cfg.max_evals} is below dimension + 2 = {n + 2}")

        trace = OptimizationTrace()

        def evaluate(x: np.ndarray) -> np.ndarray:
            """Return the column [c_1..c_m, f, resmax] for x and log the record"""
            f = float(objective(x))
            if not math.isfinite(f):
                raise EvaluationError(f"Objective returned {f}", x)
            cons = np.array([con(x) for con in constraints], dtype=float)
            if not np.all(np.isfinite(cons)):
                raise EvaluationError(f"Constraint returned {cons}", x)
            resmax = max(0.0, float(-cons.min())) if m else 0.0
            extra = describe(x) if describe else {}
            record = EvaluationRecord(
                iteration=len(trace.records),
                params=[float(v) for v in x],
                objective=f,
                constraint_values=[float(v) for v in cons],
                max_violation=resmax,
                **extra,
            )
            trace.records.append(record)
            if self._monitor is not None:
                self._monitor(record)
            return np.concatenate([cons, [f, resmax]])

        # datmat rows: constraints 0..m-1, objective m, max violation m+1.
        # Column n is the best vertex; sim[:, n] holds its position and
        # sim[:, j] the displacement of vertex j from it.
        rho = cfg.rho_begin
        parmu = 0.0
        sim = np.zeros((n, n + 1))
        sim[:, n] = x0
        sim[:, :n] = rho * np.eye(n)
        simi = np.eye(n) / rho
        datmat = np.zeros((m + 2, n + 1))
        datmat[:, n] = evaluate(x0)
        for j in range(n):
            datmat[:, j] = evaluate(x0 + sim[:, j])

        ibrnch = True
        reason = None
        while reason is None:
            # Put the vertex with the least merit in pole position
            merit = datmat[m] + parmu * datmat[m + 1]
            nbest = n
            for j in range(n):
                if merit[j] < merit[nbest] or (
                    merit[j] == merit[nbest] and parmu == 0 and datmat[m + 1, j] < datmat[m + 1, nbest]
                ):
                    nbest = j
            if nbest < n:
                datmat[:, [n, nbest]] = datmat[:, [nbest, n]]
                shift = sim[:, nbest].copy()
                sim[:, nbest] = 0.0
                sim[:, n] += shift
                sim[:, :n] -= shift[:, None]
                simi[nbest, :] = -simi.sum(axis=0)

            if np.abs(simi @ sim[:, :n] - np.eye(n)).max() > ROUNDOFF_LIMIT:
                logger.warning("Simplex inverse lost accuracy; stopping")
                reason = "ill_conditioned"
                break

            # Linear models through the simplex
            diffs = datmat[: m + 1, :n] - datmat[: m + 1, n : n + 1]
            grads = diffs @ simi  # row k is the gradient of row k of datmat
            gc, gf = grads[:m], grads[m]
            c_best = datmat[:m, n]

            parsig, pareta = ALPHA * rho, BETA * rho
            vsig = 1.0 / np.sqrt(np.sum(simi**2, axis=1))
            veta = np.sqrt(np.sum(sim[:, :n] ** 2, axis=0))
            acceptable = bool(np.all(vsig >= parsig) and np.all(veta <= pareta))

            if not ibrnch and not acceptable:
                # Geometry step: replace the vertex that spoils the simplex
                if np.any(veta > pareta):
                    jdrop = int(np.argmax(veta))
                else:
                    jdrop = int(np.argmin(vsig))
                dx = GAMMA * rho * vsig[jdrop] * simi[jdrop]
                cvmaxp = max(0.0, float(np.max(-(c_best + gc @ dx)))) if m else 0.0
                cvmaxm = max(0.0, float(np.max(-(c_best - gc @ dx)))) if m else 0.0
                if parmu * (cvmaxp - cvmaxm) > -2.0 * float(gf @ dx):
                    dx = -dx
                self._replace_vertex(sim, simi, jdrop, dx)
                if len(trace.records) >= cfg.max_evals:
                    reason = "eval_budget"
                    break
                datmat[:, jdrop] = evaluate(sim[:, n] + dx)
                ibrnch = True
                continue

            dx, on_boundary = trust_region_step(gc, c_best, gf, rho)
            reduce_rho = False
            if not on_boundary and float(dx @ dx) < 0.25 * rho * rho:
                reduce_rho = True
            else:
                resnew = max(0.0, float(np.max(-(c_best + gc @ dx)))) if m else 0.0
                dfpred = float(gf @ dx)
                prerec = datmat[m + 1, n] - resnew
                barmu = dfpred / prerec if prerec > 0 else 0.0
                if parmu < 1.5 * barmu:
                    parmu = 2.0 * barmu
                    logger.debug(f"Penalty raised to {parmu:.6g}")
                    phi = datmat[m, n] + parmu * datmat[m + 1, n]
                    merit = datmat[m, :n] + parmu * datmat[m + 1, :n]
                    if np.any(merit < phi) or (
                        parmu == 0 and np.any((merit == phi) & (datmat[m + 1, :n] < datmat[m + 1, n]))
                    ):
                        continue  # new penalty changes the best vertex
                prerem = parmu * prerec - dfpred

                if len(trace.records) >= cfg.max_evals:
                    reason = "eval_budget"
                    break
                column = evaluate(sim[:, n] + dx)
                f_new, res_new = column[m], column[m + 1]
                vmold = datmat[m, n] + parmu * datmat[m + 1, n]
                trured = vmold - (f_new + parmu * res_new)
                if parmu == 0 and f_new == datmat[m, n]:
                    prerem = prerec
                    trured = datmat[m + 1, n] - res_new

                # Choose the vertex the trial point replaces
                threshold = 1.0 if trured <= 0 else 0.0
                jdrop = -1
                sigbar = np.abs(simi @ dx)
                for j in range(n):
                    if sigbar[j] > threshold:
                        jdrop, threshold = j, sigbar[j]
                sigbar = sigbar * vsig
                edgmax = DELTA * rho
                far = -1
                for j in range(n):
                    if sigbar[j] >= parsig or sigbar[j] >= vsig[j]:
                        edge = veta[j] if trured <= 0 else float(np.linalg.norm(dx - sim[:, j]))
                        if edge > edgmax:
                            far, edgmax = j, edge
                if far >= 0:
                    jdrop = far

                if jdrop < 0:
                    reduce_rho = True
                else:
                    self._replace_vertex(sim, simi, jdrop, dx)
                    datmat[:, jdrop] = column
                    if trured > 0 and trured >= 0.1 * prerem:
                        continue
                    reduce_rho = True

            if reduce_rho:
                if not acceptable:
                    ibrnch = False
                    continue
                if rho <= cfg.rho_end:
                    reason = "radius_converged"
                    break
                rho *= 0.5
                if rho <= 1.5 * cfg.rho_end:
                    rho = cfg.rho_end
                if parmu > 0:
                    parmu = self._lower_penalty(datmat, m, parmu)
                logger.debug(f"rho -> {rho:.3g} after {len(trace.records)} evaluations, mu={parmu:.6g}")

        return self._finish(trace, reason, rho)

    @staticmethod
    def _replace_vertex(sim: np.ndarray, simi: np.ndarray, jdrop: int, dx: np.ndarray):
        """Set vertex jdrop to displacement dx and update the inverse in place"""
        sim[:, jdrop] = dx
        simi[jdrop] /= float(simi[jdrop] @ dx)
        for j in range(simi.shape[0]):
            if j != jdrop:
                simi[j] -= float(simi[j] @ dx) * simi[jdrop]

    @staticmethod
    def _lower_penalty(datmat: np.ndarray, m: int, parmu: float) -> float:
        denom = 0.0
        for k in range(m):
            cmin, cmax = datmat[k].min(), datmat[k].max()
            if cmin < 0.5 * cmax:
                spread = max(cmax, 0.0) - cmin
                denom = spread if denom <= 0 else min(denom, spread)
        fmin, fmax = datmat[m].min(), datmat[m].max()
        if denom == 0:
            return 0.0
        if fmax - fmin < parmu * denom:
            return float((fmax - fmin) / denom)
        return parmu

    @staticmethod
    def _finish(trace: OptimizationTrace, reason: str, rho: float) -> OptimizationTrace:
        feasible = [r for r in trace.records if r.max_violation == 0]
        pool = feasible or trace.records
        best = min(pool, key=lambda r: (r.objective, r.iteration))
        trace.best_params = list(best.params)
        trace.best_objective = best.objective
        trace.best_iteration = best.iteration
        trace.best_constraint_values = list(best.constraint_values)
        trace.constraint_violated = not feasible
        trace.termination_reason = reason
        trace.final_rho = rho
        if trace.constraint_violated:
            logger.warning(f"No evaluated point satisfies the constraints (best violation {best.max_violation:.3g})")
        logger.info(
            f"Optimizer stopped ({reason}) after {len(trace.records)} evaluations, best objective {best.objective:.6g}"
        )
        return trace


def minimize(
    objective: Callable[[np.ndarray], float],
    constraints: Sequence[InequalityConstraint],
    x0,
    config: Optional[OptimizerConfig] = None,
    monitor: Optional[Callable[[EvaluationRecord], None]] = None,
) -> OptimizationTrace:
    """Functional wrapper around Cobyla for one-off calls"""
    optimizer = Cobyla(config)
    if monitor is not None:
        optimizer.attach_monitor(monitor)
    return optimizer.minimize(objective, constraints, x0)
