"""Monte-Carlo verification harness.

Resamples right-hand sides, solves every replicate with the same
deterministic tie-break as the limit functional, and quantifies how the
scaled fluctuations, optimal values, optimality sets, and support patterns
line up with their theoretical limits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
import scipy.stats

from . import cones_limit, ot as ot_module
from .cones_limit import LimitSampleResult, SupportPartition, TieBreak, sample_limit
from .errors import (
    DimensionMismatch,
    EmptySet,
    Infeasible,
    NonConvergence,
    NotAProbabilityVector,
    TooManyInfeasible,
)
from .lp_core import BasisLedger, StandardLp, enumerate_ledger
from .ot import OneSample, OtProblem, TwoSample
from .tolerances import DEFAULT_TOLS, Tolerances

SampleSize = Union[int, tuple[int, int]]


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs of one resampling experiment."""

    sample_sizes: tuple[SampleSize, ...]
    replicates: int
    seed: int
    mode: Union[OneSample, TwoSample] = OneSample()
    solver_policy: TieBreak = TieBreak.MIN_INDEX
    comparison_samples: int = 20_000
    hausdorff_sizes: tuple[int, ...] = ()
    hausdorff_replicates: int = 200

    def __post_init__(self):
        if self.replicates < 1:
            raise DimensionMismatch("replicates must be at least 1")
        for n in self.sample_sizes:
            pair = n if isinstance(n, tuple) else (n,)
            if any(int(v) < 1 for v in pair):
                raise DimensionMismatch(f"sample sizes must be at least 1, got {n}")

    @property
    def rate_name(self) -> str:
        return "sqrt(nm/(n+m))" if isinstance(self.mode, TwoSample) else "sqrt(n)"


def rate_value(mode: Union[OneSample, TwoSample], n: SampleSize) -> float:
    """Scaling factor applied to the raw fluctuations at sample size n."""
    if isinstance(mode, TwoSample):
        n1, n2 = (n, n) if isinstance(n, int) else n
        return float(np.sqrt(n1 * n2 / (n1 + n2)))
    if isinstance(n, tuple):
        n = n[0]
    return float(np.sqrt(n))


@dataclass(frozen=True)
class MultinomialMarginal:
    """Resampling model for transport right-hand sides (r truncated, s full).

    One-sample mode replaces only the r block by empirical frequencies of n
    categorical draws; two-sample mode also resamples the s block with its
    own sample size.
    """

    n_points: int
    two_sample: bool = False


@dataclass(frozen=True, eq=False)
class UserSamples:
    """Externally supplied pool of right-hand sides, one drawn per replicate."""

    rows: np.ndarray


def resample_rhs(model, b, n: SampleSize, rng: np.random.Generator) -> np.ndarray:
    """One resampled right-hand side; deterministic given the generator state."""
    b = np.asarray(b, dtype=float)
    if isinstance(model, UserSamples):
        rows = np.asarray(model.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != b.size:
            raise DimensionMismatch("user sample rows must match the rhs length")
        return rows[int(rng.integers(rows.shape[0]))].copy()
    if not isinstance(model, MultinomialMarginal):
        raise DimensionMismatch(f"unknown resampling model {model!r}")
    N = model.n_points
    if b.size != 2 * N - 1:
        raise DimensionMismatch(f"rhs must have length {2 * N - 1}, got {b.size}")
    r = np.concatenate([b[: N - 1], [1.0 - b[: N - 1].sum()]])
    s = b[N - 1 :]
    for name, v in (("r", r), ("s", s)):
        if v.min() < -1e-12 or abs(v.sum() - 1.0) > 1e-9:
            raise NotAProbabilityVector(f"rhs does not encode a probability vector {name}")
    n_r, n_s = (n, n) if isinstance(n, int) else n
    r_hat = rng.multinomial(int(n_r), np.clip(r, 0.0, None) / r.sum()) / float(n_r)
    if model.two_sample:
        s_hat = rng.multinomial(int(n_s), np.clip(s, 0.0, None) / s.sum()) / float(n_s)
    else:
        s_hat = s
    return np.concatenate([r_hat[: N - 1], s_hat])


class RepeatedSolver:
    """Min-index solves of one LP family over many right-hand sides.

    Dual feasibility of a basis does not depend on the right-hand side, so
    the dual feasible bases, their inverses, and their dual vectors are
    precomputed once; each solve is then a batched feasibility scan in
    lexicographic basis order.
    """

    def __init__(self, lp: StandardLp, tols: Tolerances = DEFAULT_TOLS,
                 ledger: Optional[BasisLedger] = None):
        if ledger is None:
            ledger = enumerate_ledger(lp, tols)
        self.lp = lp
        self.tols = tols
        self.ledger = ledger
        order = sorted(range(len(ledger.bases)), key=lambda k: ledger.bases[k].indices)
        self.bases = [ledger.bases[k].indices for k in order]
        mats = [np.linalg.inv(lp.constraint_matrix[:, list(idx)]) for idx in self.bases]
        self.inverses = np.array(mats)
        self.duals = np.array([ledger.pairs[k].dual for k in order])
        self.columns = [list(idx) for idx in self.bases]

    def basic_coordinates(self, rhs_batch: np.ndarray) -> np.ndarray:
        """(R, n_bases, m) basic coordinate array for a batch of right-hand sides."""
        return np.einsum("nij,rj->rni", self.inverses, rhs_batch)

    def solve_batch(self, rhs_batch: np.ndarray):
        """Lexicographically-first feasible basis per row.

        Returns (solutions, values, chosen, feasible_any); rows with no
        feasible basis have NaN solutions and chosen = -1.
        """
        rhs_batch = np.asarray(rhs_batch, dtype=float)
        coords = self.basic_coordinates(rhs_batch)
        feasible = (coords >= -self.tols.feas_tol).all(axis=2)
        any_feasible = feasible.any(axis=1)
        chosen = np.where(any_feasible, np.argmax(feasible, axis=1), -1)
        R = rhs_batch.shape[0]
        d = self.lp.n_cols
        solutions = np.full((R, d), np.nan)
        for k in np.unique(chosen[any_feasible]):
            rows = np.flatnonzero(chosen == k)
            solutions[rows] = 0.0
            solutions[np.ix_(rows, self.columns[k])] = coords[rows, k, :]
        values = solutions @ self.lp.cost
        return solutions, values, chosen, any_feasible

    def mixed_solution(self, rhs: np.ndarray, rng: np.random.Generator) -> Optional[np.ndarray]:
        """Uniform simplex mixture of all optimal vertices at one right-hand side."""
        coords = self.inverses @ rhs
        feasible = np.flatnonzero((coords >= -self.tols.feas_tol).all(axis=1))
        if feasible.size == 0:
            return None
        spacings = rng.exponential(size=feasible.size)
        alpha = spacings / spacings.sum()
        out = np.zeros(self.lp.n_cols)
        for weight, k in zip(alpha, feasible):
            out[self.columns[k]] += weight * coords[k]
        return out

    def vertices_at(self, rhs: np.ndarray) -> list[np.ndarray]:
        """Deduplicated optimal vertices of the problem with right-hand side rhs."""
        coords = self.inverses @ rhs
        feasible = np.flatnonzero((coords >= -self.tols.feas_tol).all(axis=1))
        vertices: list[np.ndarray] = []
        for k in feasible:
            full = np.zeros(self.lp.n_cols)
            full[self.columns[k]] = coords[k]
            for v in vertices:
                if np.max(np.abs(v - full), initial=0.0) <= self.tols.dedup_tol:
                    break
            else:
                vertices.append(full)
        return vertices


@dataclass(frozen=True, eq=False)
class FluctuationBatch:
    """Scaled fluctuations of one sample size, one row per feasible replicate."""

    sample_size: SampleSize
    rate: float
    fluctuations: np.ndarray
    value_fluctuations: np.ndarray
    solutions: np.ndarray
    infeasible_count: int

    @property
    def infeasible_rate(self) -> float:
        total = self.fluctuations.shape[0] + self.infeasible_count
        return self.infeasible_count / total if total else 0.0


def fluctuation_run(
    lp: StandardLp,
    config: ExperimentConfig,
    model,
    solver: Optional[RepeatedSolver] = None,
    tols: Tolerances = DEFAULT_TOLS,
) -> list[FluctuationBatch]:
    """Scaled solution and value fluctuations under resampled right-hand sides.

    Every replicate is solved with the configured tie-break; replicates
    whose resampled problem is infeasible are dropped and counted, and more
    than 50% of them aborts the run.
    """
    if solver is None:
        solver = RepeatedSolver(lp, tols)
    base_solutions, base_values, base_chosen, base_ok = solver.solve_batch(
        lp.rhs.reshape(1, -1)
    )
    if not base_ok[0]:
        raise Infeasible("the base problem itself is infeasible")
    x_star = base_solutions[0]
    value_star = base_values[0]
    batches: list[FluctuationBatch] = []
    for n in config.sample_sizes:
        rate = rate_value(config.mode, n)
        n_key = n if isinstance(n, tuple) else (n,)
        rows = np.empty((config.replicates, lp.n_rows))
        for rep in range(config.replicates):
            rng = np.random.default_rng((config.seed, *n_key, rep))
            rows[rep] = resample_rhs(model, lp.rhs, n, rng)
        if config.solver_policy is TieBreak.MIN_INDEX:
            solutions, values, _, ok = solver.solve_batch(rows)
        else:
            solutions = np.full((config.replicates, lp.n_cols), np.nan)
            ok = np.zeros(config.replicates, dtype=bool)
            for rep in range(config.replicates):
                rng = np.random.default_rng((config.seed, *n_key, rep, 1))
                mixed = solver.mixed_solution(rows[rep], rng)
                if mixed is not None:
                    solutions[rep] = mixed
                    ok[rep] = True
            values = solutions @ lp.cost
        infeasible = int(np.sum(~ok))
        if infeasible > 0.5 * config.replicates:
            raise TooManyInfeasible(
                f"{infeasible}/{config.replicates} replicates infeasible at n={n}"
            )
        keep = np.flatnonzero(ok)
        batches.append(
            FluctuationBatch(
                sample_size=n,
                rate=rate,
                fluctuations=rate * (solutions[keep] - x_star),
                value_fluctuations=rate * (values[keep] - value_star),
                solutions=solutions[keep],
                infeasible_count=infeasible,
            )
        )
    return batches


def point_to_polytope(v, vertices, tol: float = 1e-10, max_iters: int = 100_000) -> float:
    """Distance from a point to the convex hull of a vertex list.

    Frank-Wolfe over the simplex with away steps and exact line search;
    terminates when the duality gap certifies the squared distance to
    within tol.
    """
    P = np.asarray(vertices, dtype=float)
    if P.ndim != 2 or P.shape[0] == 0:
        raise EmptySet("vertex list must be a nonempty 2-d array")
    v = np.asarray(v, dtype=float)
    if P.shape[0] == 1:
        return float(np.linalg.norm(v - P[0]))
    K = P.shape[0]
    alpha = np.zeros(K)
    alpha[0] = 1.0
    x = P[0].copy()
    for _ in range(max_iters):
        residual = x - v
        grad = P @ residual
        s = int(np.argmin(grad))
        gap = float(alpha @ grad - grad[s])
        if gap < tol:
            return float(np.linalg.norm(residual))
        support = np.flatnonzero(alpha > 0)
        a = support[int(np.argmax(grad[support]))]
        fw_dir = P[s] - x
        aw_dir = x - P[a]
        fw_slope = float(residual @ fw_dir)
        aw_slope = float(residual @ aw_dir)
        if fw_slope <= aw_slope or alpha[a] >= 1.0:
            direction, gamma_max, is_fw = fw_dir, 1.0, True
        else:
            direction, gamma_max, is_fw = aw_dir, alpha[a] / (1.0 - alpha[a]), False
        denom = float(direction @ direction)
        if denom <= 0.0:
            return float(np.linalg.norm(residual))
        gamma = min(gamma_max, max(0.0, -float(residual @ direction) / denom))
        if is_fw:
            alpha *= 1.0 - gamma
            alpha[s] += gamma
        else:
            alpha *= 1.0 + gamma
            alpha[a] -= gamma
        np.clip(alpha, 0.0, None, out=alpha)
        alpha /= alpha.sum()
        x = P.T @ alpha
    raise NonConvergence(f"projection did not reach gap {tol} in {max_iters} iterations")


def hausdorff_distance(vertices_1, vertices_2, tol: float = 1e-10) -> float:
    """Hausdorff distance between the convex hulls of two vertex lists."""
    V1 = np.asarray(vertices_1, dtype=float)
    V2 = np.asarray(vertices_2, dtype=float)
    if V1.ndim != 2 or V2.ndim != 2 or V1.shape[0] == 0 or V2.shape[0] == 0:
        raise EmptySet("both vertex lists must be nonempty")
    forward = max(point_to_polytope(v, V2, tol) for v in V1)
    backward = max(point_to_polytope(w, V1, tol) for w in V2)
    return max(forward, backward)


@dataclass(frozen=True)
class SupportFrequencies:
    """Observed sign-pattern rates of solutions against a support partition."""

    pos_positive_rate: float
    tz_zero_rate: float
    dz_positive_rates: tuple[float, ...]


def support_frequencies(
    solutions: np.ndarray,
    partition: SupportPartition,
    tol: float,
) -> SupportFrequencies:
    """Rates at which solution rows respect the partition.

    tz_zero_rate: rows with every true-zero coordinate within tol of zero.
    pos_positive_rate: rows strictly positive (above tol) on every positive
    coordinate.  dz_positive_rates: per degenerate-zero coordinate, the
    fraction of rows exceeding tol there.  Pass raw solutions (tol on the
    solution scale) or scaled fluctuations (tol scaled by the rate).
    """
    X = np.asarray(solutions, dtype=float)
    total = max(1, X.shape[0])
    tz = list(partition.tz)
    pos = list(partition.pos)
    dz = list(partition.dz)
    tz_rate = float(np.mean(np.all(np.abs(X[:, tz]) <= tol, axis=1))) if tz else 1.0
    pos_rate = float(np.mean(np.all(X[:, pos] > tol, axis=1))) if pos else 1.0
    dz_rates = tuple(float(np.mean(X[:, j] > tol)) for j in dz)
    return SupportFrequencies(pos_rate, tz_rate, dz_rates)


def two_sample_ks(x: np.ndarray, y: np.ndarray) -> float:
    """Two-sample Kolmogorov-Smirnov statistic."""
    return float(scipy.stats.ks_2samp(x, y, method="asymp").statistic)


def energy_distance(x: np.ndarray, y: np.ndarray, max_rows: int = 5000) -> float:
    """Energy distance 2 E||X-Y|| - E||X-X'|| - E||Y-Y'|| with all-pairs means.

    Inputs are truncated to their first max_rows rows to keep the
    quadratic-cost computation at desk scale.
    """
    X = np.asarray(x, dtype=float)[:max_rows]
    Y = np.asarray(y, dtype=float)[:max_rows]

    def mean_cross(A, B):
        total = 0.0
        chunk = max(1, int(2**22 // max(1, B.shape[0])))
        for start in range(0, A.shape[0], chunk):
            block = A[start : start + chunk]
            total += np.sqrt(
                ((block[:, None, :] - B[None, :, :]) ** 2).sum(axis=2)
            ).sum()
        return total / (A.shape[0] * B.shape[0])

    return float(2.0 * mean_cross(X, Y) - mean_cross(X, X) - mean_cross(Y, Y))


def mean_pairwise_norm(x: np.ndarray, y: np.ndarray, max_rows: int = 5000) -> float:
    """Mean cross-pair distance; the natural scale for energy-distance thresholds."""
    X = np.asarray(x, dtype=float)[:max_rows]
    Y = np.asarray(y, dtype=float)[:max_rows]
    total = 0.0
    chunk = max(1, int(2**22 // max(1, Y.shape[0])))
    for start in range(0, X.shape[0], chunk):
        block = X[start : start + chunk]
        total += np.sqrt(((block[:, None, :] - Y[None, :, :]) ** 2).sum(axis=2)).sum()
    return float(total / (X.shape[0] * Y.shape[0]))


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    """Distributional agreement between empirical fluctuations and limit draws."""

    per_coordinate_ks: np.ndarray
    energy_distance: float
    covariance_frobenius_error: float
    value_ks: Optional[float] = None
    support_frequencies: Optional[SupportFrequencies] = None
    infeasible_rate: float = 0.0
    hausdorff_by_n: tuple[tuple[float, float, float, float], ...] = ()


def compare_distributions(
    empirical: np.ndarray,
    limit: np.ndarray,
    empirical_values: Optional[np.ndarray] = None,
    limit_values: Optional[np.ndarray] = None,
    energy_max_rows: int = 5000,
) -> ComparisonReport:
    """Per-coordinate KS statistics, energy distance, and covariance error.

    The covariance error is the Frobenius distance between the two sample
    covariances, relative to the Frobenius norm of the limit covariance.
    """
    X = np.asarray(empirical, dtype=float)
    Y = np.asarray(limit, dtype=float)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[1] != Y.shape[1]:
        raise DimensionMismatch("sample matrices must share their column count")
    ks = np.array([two_sample_ks(X[:, j], Y[:, j]) for j in range(X.shape[1])])
    if X.shape[0] < 2 or Y.shape[0] < 2:
        cov_err = float("nan")
    else:
        cov_x = np.cov(X, rowvar=False)
        cov_y = np.cov(Y, rowvar=False)
        denom = np.linalg.norm(cov_y)
        cov_err = float(np.linalg.norm(cov_x - cov_y) / denom) if denom > 0 else float(
            np.linalg.norm(cov_x - cov_y)
        )
    value_ks = None
    if empirical_values is not None and limit_values is not None:
        value_ks = two_sample_ks(
            np.asarray(empirical_values, float), np.asarray(limit_values, float)
        )
    return ComparisonReport(
        per_coordinate_ks=ks,
        energy_distance=energy_distance(X, Y, energy_max_rows),
        covariance_frobenius_error=cov_err,
        value_ks=value_ks,
    )


@dataclass(frozen=True, eq=False)
class HausdorffExperiment:
    """Per-replicate Hausdorff distances to the base optimality set."""

    rows: tuple[tuple[int, int, float], ...]
    summary: tuple[tuple[float, float, float, float], ...]
    skipped: int


def hausdorff_run(
    lp: StandardLp,
    model,
    sample_sizes: Sequence[int],
    replicates: int,
    seed: int,
    solver: Optional[RepeatedSolver] = None,
    tols: Tolerances = DEFAULT_TOLS,
) -> HausdorffExperiment:
    """Hausdorff distance between empirical and base optimality sets by n.

    Infeasible replicates are skipped and counted.  The summary holds
    (n, median, lower quartile, upper quartile) per sample size.
    """
    if solver is None:
        solver = RepeatedSolver(lp, tols)
    base_vertices = solver.vertices_at(lp.rhs)
    if not base_vertices:
        raise Infeasible("the base problem is infeasible")
    base = np.array(base_vertices)
    rows: list[tuple[int, int, float]] = []
    summary: list[tuple[float, float, float, float]] = []
    skipped = 0
    for n in sample_sizes:
        dists: list[float] = []
        for rep in range(replicates):
            rng = np.random.default_rng((seed, n, rep))
            rhs = resample_rhs(model, lp.rhs, int(n), rng)
            vertices = solver.vertices_at(rhs)
            if not vertices:
                skipped += 1
                continue
            dist = hausdorff_distance(np.array(vertices), base)
            rows.append((int(n), rep, dist))
            dists.append(dist)
        if dists:
            arr = np.array(dists)
            summary.append(
                (
                    float(n),
                    float(np.median(arr)),
                    float(np.quantile(arr, 0.25)),
                    float(np.quantile(arr, 0.75)),
                )
            )
    return HausdorffExperiment(rows=tuple(rows), summary=tuple(summary), skipped=skipped)


def hausdorff_rate_slope(summary) -> float:
    """Least-squares slope of log median distance against log sample size."""
    ns = np.array([row[0] for row in summary], dtype=float)
    medians = np.array([row[1] for row in summary], dtype=float)
    if np.any(medians <= 0):
        raise DimensionMismatch("median distances must be positive for the log fit")
    return float(np.polyfit(np.log(ns), np.log(medians), 1)[0])


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    """End-to-end outcome of a resampling experiment against the limit law."""

    report: ComparisonReport
    batches: list[FluctuationBatch]
    limit_result: LimitSampleResult
    hausdorff: Optional[HausdorffExperiment]
    partition: SupportPartition
    spec: cones_limit.LimitLawSpec


def run_experiment(
    ot: OtProblem,
    config: ExperimentConfig,
    tols: Tolerances = DEFAULT_TOLS,
) -> ExperimentResult:
    """Full pipeline for a transport instance with a unique optimum.

    Builds the limit-law specification, runs the fluctuation experiment at
    the largest configured sample size, samples the limit law with the same
    tie-break policy, and assembles the comparison report.
    """
    spec = ot_module.ot_limit_spec(ot, config.mode, tie_break=config.solver_policy, tols=tols)
    lp = spec.ledger.lp
    solver = RepeatedSolver(lp, tols, ledger=spec.ledger)
    model = MultinomialMarginal(ot.n_points, two_sample=isinstance(config.mode, TwoSample))
    batches = fluctuation_run(lp, config, model, solver=solver, tols=tols)
    main = batches[-1]
    limit_result = sample_limit(spec, config.comparison_samples, seed=config.seed + 1)
    duals = spec.ledger.optimal_duals()[:, : spec.m0]
    limit_values = (limit_result.gaussian_directions @ duals.T).max(axis=1)
    report = compare_distributions(
        main.fluctuations,
        limit_result.samples,
        empirical_values=main.value_fluctuations,
        limit_values=limit_values,
    )
    partition = cones_limit.support_partition(spec.ledger, tols=tols)
    freqs = support_frequencies(main.solutions, partition, tols.feas_tol)
    hausdorff = None
    summary = ()
    if config.hausdorff_sizes:
        hausdorff = hausdorff_run(
            lp,
            model,
            config.hausdorff_sizes,
            config.hausdorff_replicates,
            config.seed + 2,
            solver=solver,
            tols=tols,
        )
        summary = hausdorff.summary
    report = ComparisonReport(
        per_coordinate_ks=report.per_coordinate_ks,
        energy_distance=report.energy_distance,
        covariance_frobenius_error=report.covariance_frobenius_error,
        value_ks=report.value_ks,
        support_frequencies=freqs,
        infeasible_rate=main.infeasible_rate,
        hausdorff_by_n=tuple(summary),
    )
    return ExperimentResult(
        report=report,
        batches=batches,
        limit_result=limit_result,
        hausdorff=hausdorff,
        partition=partition,
        spec=spec,
    )
