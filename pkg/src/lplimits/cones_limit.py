"""Stability cones of optimal bases and the limit law of solution fluctuations.

Each optimal basis keeps being optimal exactly when the right-hand-side
perturbation direction stays inside a polyhedral cone.  The limiting
fluctuation of the optimal solution is a piecewise-linear (possibly
randomized) function of a Gaussian direction, assembled from those cones.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    CovarianceNotPSD,
    DimensionMismatch,
    Infeasible,
    LpLimitsError,
    NoFeasibleCone,
    NotUnique,
)
from .lp_core import BasisLedger
from .tolerances import DEFAULT_TOLS, Tolerances

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SupportPartition:
    """Partition of the variable indices of a unique optimum.

    pos: strictly positive coordinates.
    tz:  true zeroes, zero in every optimal basis.
    dz:  degenerate zeroes, zero but carried by some optimal basis.
    """

    pos: tuple[int, ...]
    tz: tuple[int, ...]
    dz: tuple[int, ...]


class Verdict(enum.Enum):
    INSIDE = "inside"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


class TieBreak(enum.Enum):
    MIN_INDEX = "min-index"
    UNIFORM_RANDOM_OVER_FEASIBLE = "uniform-random"


@dataclass(frozen=True, eq=False)
class ConeH:
    """Polyhedral cone of perturbation directions keeping one basis feasible.

    Dual descriptions: v belongs to the cone iff every row of
    ``halfspace_normals`` has nonnegative inner product with v, iff
    v = generator_matrix @ u with u nonnegative on ``j_rows``.  The normals
    are the ``j_rows`` rows of the basis inverse, truncated to the first
    ``m0`` coordinates when only those are perturbed.
    """

    basis_index: int
    halfspace_normals: np.ndarray
    generator_matrix: np.ndarray
    j_rows: tuple[int, ...]
    m0: int

    def products(self, v: np.ndarray) -> np.ndarray:
        """Halfspace inner products for one direction or a stack of them."""
        v = np.asarray(v, dtype=float)
        if v.ndim == 1:
            return self.halfspace_normals @ v
        return v @ self.halfspace_normals.T


@dataclass(frozen=True, eq=False)
class LimitLawSpec:
    """Everything needed to evaluate and sample the limiting fluctuation."""

    ledger: BasisLedger
    cones: tuple[ConeH, ...]
    tie_break: TieBreak
    covariance: np.ndarray
    m0: int
    rate_name: str

    def __post_init__(self):
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (self.m0, self.m0):
            raise DimensionMismatch(
                f"covariance must be {self.m0}x{self.m0}, got {cov.shape}"
            )
        scale = max(1.0, float(np.abs(cov).max(initial=0.0)))
        if np.abs(cov - cov.T).max(initial=0.0) > 1e-10 * scale:
            raise CovarianceNotPSD("covariance is not symmetric")
        if np.linalg.eigvalsh(cov).min() < -1e-10 * scale:
            raise CovarianceNotPSD("covariance has a negative eigenvalue")
        if len(self.cones) != self.ledger.optimal_count:
            raise DimensionMismatch("need exactly one cone per optimal basis")
        sizes = {c.halfspace_normals.shape[0] for c in self.cones}
        if len(sizes) > 1:
            raise LpLimitsError("cones disagree on the number of half-spaces")
        for k, cone in enumerate(self.cones):
            if cone.basis_index != k or cone.m0 != self.m0:
                raise LpLimitsError("cone list is not aligned with the ledger")


def support_partition(
    ledger: BasisLedger,
    x_star: Optional[np.ndarray] = None,
    tols: Tolerances = DEFAULT_TOLS,
) -> SupportPartition:
    """Classify coordinates of the unique optimum into pos / tz / dz.

    The union of all optimal bases carries the positives and the degenerate
    zeroes; coordinates outside every optimal basis are true zeroes.
    """
    if ledger.optimal_count == 0:
        raise Infeasible("ledger has no optimal basis")
    if len(ledger.primal_optimal_vertices) != 1:
        raise NotUnique(
            f"optimum is not unique ({len(ledger.primal_optimal_vertices)} vertices)"
        )
    if x_star is None:
        x_star = ledger.primal_optimal_vertices[0]
    d = ledger.lp.n_cols
    pos = {i for i in range(d) if x_star[i] > tols.feas_tol}
    union: set[int] = set()
    for k in range(ledger.optimal_count):
        union.update(ledger.bases[k].indices)
    tz = set(range(d)) - union
    dz = union - pos
    return SupportPartition(pos=tuple(sorted(pos)), tz=tuple(sorted(tz)), dz=tuple(sorted(dz)))


def build_cones(
    ledger: BasisLedger,
    partition: SupportPartition,
    m0: Optional[int] = None,
    tols: Tolerances = DEFAULT_TOLS,
) -> tuple[ConeH, ...]:
    """One stability cone per optimal basis.

    The cone of basis k is cut out by the rows of the basis inverse whose
    basis column is not a positive coordinate of the optimum; with fewer
    random coordinates (m0 < m) the normals keep only the first m0 columns.
    """
    if ledger.optimal_count == 0:
        raise Infeasible("ledger has no optimal basis")
    m = ledger.lp.n_rows
    if m0 is None:
        m0 = m
    if not 1 <= m0 <= m:
        raise DimensionMismatch(f"m0 must lie in 1..{m}, got {m0}")
    pos = set(partition.pos)
    expected = m - len(pos)
    cones = []
    for k in range(ledger.optimal_count):
        idx = ledger.bases[k].indices
        sub = ledger.lp.constraint_matrix[:, list(idx)]
        inverse = np.linalg.inv(sub)
        j_rows = tuple(j for j, col in enumerate(idx) if col not in pos)
        if len(j_rows) != expected:
            raise LpLimitsError(
                f"basis {idx} does not carry every positive coordinate of the optimum"
            )
        normals = inverse[list(j_rows)][:, :m0].copy()
        normals.flags.writeable = False
        cones.append(
            ConeH(
                basis_index=k,
                halfspace_normals=normals,
                generator_matrix=sub,
                j_rows=j_rows,
                m0=m0,
            )
        )
    return tuple(cones)


def cone_contains(cone: ConeH, v, tol: Optional[float] = None) -> Verdict:
    """Tri-state membership of a direction in a cone.

    Inside when all halfspace products exceed tol, Boundary when the
    smallest product sits within [-tol, tol], Outside otherwise.  A cone
    with no half-spaces is all of the ambient space.
    """
    if tol is None:
        tol = DEFAULT_TOLS.boundary_tol
    if cone.halfspace_normals.shape[0] == 0:
        return Verdict.INSIDE
    products = cone.products(np.asarray(v, dtype=float))
    smallest = products.min()
    if smallest > tol:
        return Verdict.INSIDE
    if smallest >= -tol:
        return Verdict.BOUNDARY
    return Verdict.OUTSIDE


def _embed(spec: LimitLawSpec, g: np.ndarray) -> np.ndarray:
    m = spec.ledger.lp.n_rows
    emb = np.zeros(m)
    emb[: spec.m0] = g
    return emb


def _basic_fluctuation(spec: LimitLawSpec, k: int, emb: np.ndarray) -> np.ndarray:
    cone = spec.cones[k]
    coords = np.linalg.solve(cone.generator_matrix, emb)
    out = np.zeros(spec.ledger.lp.n_cols)
    out[list(spec.ledger.bases[k].indices)] = coords
    return out


def limit_functional(
    spec: LimitLawSpec,
    g,
    rng: Optional[np.random.Generator] = None,
    tol: Optional[float] = None,
) -> np.ndarray:
    """Evaluate the limiting solution fluctuation at one direction.

    Feasible cones are those whose membership verdict is not Outside
    (Boundary resolves to Inside and is logged).  Min-index returns the
    basic fluctuation of the smallest feasible index; the randomized policy
    mixes all feasible ones with uniform simplex weights.
    """
    g = np.asarray(g, dtype=float)
    if g.shape != (spec.m0,):
        raise DimensionMismatch(f"direction must have length {spec.m0}, got {g.shape}")
    if not np.all(np.isfinite(g)):
        raise DimensionMismatch("direction contains non-finite entries")
    if tol is None:
        tol = DEFAULT_TOLS.boundary_tol
    feasible = []
    for k, cone in enumerate(spec.cones):
        verdict = cone_contains(cone, g, tol)
        if verdict is Verdict.BOUNDARY:
            logger.debug("direction on the boundary of cone %d treated as inside", k)
        if verdict is not Verdict.OUTSIDE:
            feasible.append(k)
    if not feasible:
        raise NoFeasibleCone("direction lies outside every stability cone")
    emb = _embed(spec, g)
    if spec.tie_break is TieBreak.MIN_INDEX:
        return _basic_fluctuation(spec, feasible[0], emb)
    if rng is None:
        raise LpLimitsError("the randomized tie-break needs an explicit rng")
    spacings = rng.exponential(size=len(feasible))
    alpha = spacings / spacings.sum()
    out = np.zeros(spec.ledger.lp.n_cols)
    for weight, k in zip(alpha, feasible):
        out += weight * _basic_fluctuation(spec, k, emb)
    return out


def psd_sqrt(cov: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition (rank-deficiency safe)."""
    cov = np.asarray(cov, dtype=float)
    scale = max(1.0, float(np.abs(cov).max(initial=0.0)))
    vals, vecs = np.linalg.eigh((cov + cov.T) / 2.0)
    if vals.min() < -tol * scale:
        raise CovarianceNotPSD(f"covariance has eigenvalue {vals.min()}")
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


@dataclass(frozen=True, eq=False)
class LimitSampleResult:
    """Monte-Carlo draws of the limit law plus bookkeeping counters."""

    samples: np.ndarray
    gaussian_directions: np.ndarray
    occupancy_counts: np.ndarray
    boundary_hits: np.ndarray
    seed: int

    @property
    def occupancy_frequencies(self) -> np.ndarray:
        total = max(1, self.samples.shape[0])
        return self.occupancy_counts / total


def evaluate_limit(
    spec: LimitLawSpec,
    directions: np.ndarray,
    seed: int = 0,
    tol: Optional[float] = None,
) -> LimitSampleResult:
    """Map a stack of externally supplied directions through the limit law.

    Accepts any (n, m0) array, so non-Gaussian direction streams plug in
    directly.  Boundary verdicts are counted per cone and resolved to
    Inside.  The min-index policy is fully vectorized; the randomized
    policy derives a per-row substream from (seed, index) so results do
    not depend on any internal chunking.
    """
    if tol is None:
        tol = DEFAULT_TOLS.boundary_tol
    g_matrix = np.asarray(directions, dtype=float)
    if g_matrix.ndim != 2 or g_matrix.shape[1] != spec.m0:
        raise DimensionMismatch(f"directions must be an (n, {spec.m0}) array")
    n_samples = g_matrix.shape[0]
    k_count = len(spec.cones)
    d = spec.ledger.lp.n_cols
    occupancy = np.zeros(k_count, dtype=np.int64)
    boundary = np.zeros(k_count, dtype=np.int64)
    samples = np.zeros((n_samples, d))
    if n_samples == 0:
        return LimitSampleResult(samples, g_matrix, occupancy, boundary, seed)

    feasible = np.zeros((n_samples, k_count), dtype=bool)
    for k, cone in enumerate(spec.cones):
        if cone.halfspace_normals.shape[0] == 0:
            feasible[:, k] = True
            continue
        products = cone.products(g_matrix)
        smallest = products.min(axis=1)
        feasible[:, k] = smallest >= -tol
        boundary[k] = int(np.sum(np.abs(smallest) <= tol))
    any_feasible = feasible.any(axis=1)
    if not np.all(any_feasible):
        bad = int(np.argmin(any_feasible))
        raise NoFeasibleCone(f"draw {bad} lies outside every stability cone")

    emb = np.zeros((n_samples, spec.ledger.lp.n_rows))
    emb[:, : spec.m0] = g_matrix
    if spec.tie_break is TieBreak.MIN_INDEX:
        chosen = np.argmax(feasible, axis=1)
        for k in range(k_count):
            rows = np.flatnonzero(chosen == k)
            occupancy[k] = rows.size
            if rows.size == 0:
                continue
            inverse = np.linalg.inv(spec.cones[k].generator_matrix)
            coords = emb[rows] @ inverse.T
            samples[np.ix_(rows, list(spec.ledger.bases[k].indices))] = coords
    else:
        inverses = [np.linalg.inv(c.generator_matrix) for c in spec.cones]
        columns = [list(spec.ledger.bases[k].indices) for k in range(k_count)]
        for i in range(n_samples):
            ks = np.flatnonzero(feasible[i])
            occupancy[ks] += 1
            sub = np.random.default_rng((seed, i))
            spacings = sub.exponential(size=ks.size)
            alpha = spacings / spacings.sum()
            for weight, k in zip(alpha, ks):
                samples[i, columns[k]] += weight * (inverses[k] @ emb[i])
    return LimitSampleResult(samples, g_matrix, occupancy, boundary, seed)


def sample_limit(
    spec: LimitLawSpec,
    n_samples: int,
    seed: int,
    tol: Optional[float] = None,
) -> LimitSampleResult:
    """Draw the limit law at Gaussian directions, reproducibly by seed.

    Directions are N(0, covariance) through the symmetric PSD square root,
    then mapped by evaluate_limit under the spec's tie-break policy.
    """
    root = psd_sqrt(spec.covariance)
    rng = np.random.default_rng(seed)
    g_matrix = rng.standard_normal((n_samples, spec.m0)) @ root.T
    return evaluate_limit(spec, g_matrix, seed=seed, tol=tol)


def optimal_value_limit(ledger: BasisLedger, g) -> float:
    """Limiting fluctuation of the optimal value: best dual response to g."""
    if ledger.optimal_count == 0:
        raise Infeasible("ledger has no optimal basis")
    g = np.asarray(g, dtype=float)
    return float((ledger.optimal_duals() @ g).max())


def pushforward_covariance(ledger: BasisLedger, k: int, covariance: np.ndarray, m0: int) -> np.ndarray:
    """Covariance of the basic fluctuation of basis k under N(0, covariance) directions.

    The direction covariance lives on the first m0 coordinates and is pushed
    through the basis inverse, then scattered to the full variable space.
    """
    idx = list(ledger.bases[k].indices)
    sub = ledger.lp.constraint_matrix[:, idx]
    inverse = np.linalg.inv(sub)
    m = ledger.lp.n_rows
    emb = np.zeros((m, m))
    emb[:m0, :m0] = covariance
    core = inverse @ emb @ inverse.T
    d = ledger.lp.n_cols
    out = np.zeros((d, d))
    out[np.ix_(idx, idx)] = core
    return out
