"""Dual-certificate construction and the matrix-free optimality test operator.

For points grouped into k clusters with squared-distance matrix D, the
construction produces a scalar z and nonnegative rank-one off-diagonal
blocks B^(a,b) = u_(a,b) u_(b,a)^T / rho_(a,b) such that the clustering is
a provable global k-means optimum whenever

    P (B - D) P  strictly below  z P   (as quadratic forms),

where P projects onto the orthogonal complement of the span of the cluster
indicator vectors.  Equivalently, the all-ones direction spans the unique
leading eigenspace of

    A = (z / N) 11^T + P (B - D) P,

which the power-iteration detector checks without ever materializing A:
one application x -> Ax costs O(kmN) using D = nu 1^T - 2 Phi^T Phi + 1 nu^T
and the rank-one structure of B.

Everything here works in a canonical point order that groups clusters into
contiguous blocks; ``CertificateContext.perm`` maps canonical positions
back to the caller's point indices.
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .detector import DetectorConfig, DetectorDecision, DetectorOutcome, default_epsilon, power_iteration_detect
from .model import Partition, PointSet, pairwise_sq_distances
from .solvers import leading_eigenvector

__all__ = [
    "RHO_REL_TOLERANCE",
    "U_CLAMP_REL_TOLERANCE",
    "CertificateUndefinedError",
    "CertificateContext",
    "ImplicitOperator",
    "CertifyDecision",
    "CertifyOutcome",
    "build_certificate_context",
    "apply_A",
    "dense_A",
    "dense_B",
    "dense_E",
    "dense_M",
    "dense_projection",
    "dense_certificate_gap",
    "corollary_check",
    "recover_alpha",
    "certify_partition",
    "diagnostics_csv",
]

# rho at or below RHO_REL_TOLERANCE * N * (mean squared point norm) makes the
# division in B invalid; the context is then flagged undefined.
RHO_REL_TOLERANCE = 1e-10
# u must be nonnegative by construction; dips below
# -U_CLAMP_REL_TOLERANCE * (mean squared point norm) indicate a bug.
U_CLAMP_REL_TOLERANCE = 1e-8


class CertificateUndefinedError(ValueError):
    """The rank-one certificate blocks are undefined (some rho is ~ 0)."""


class CertifyDecision(enum.Enum):
    CERTIFIED_OPTIMAL = "certified_optimal"
    NOT_CERTIFIED = "not_certified"
    CERTIFICATE_UNDEFINED = "certificate_undefined"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class CertificateContext:
    """Precomputed certificate data enabling O(kmN) operator applications.

    Canonical order: points are permuted so cluster a occupies columns
    offsets[a]:offsets[a+1] of ``phi``; phi[:, j] is the caller's point
    ``perm[j]``.  Quantities:

        sq_norms[j] = ||x_j||^2
        mu[a]       = (1/2) ((1/n_a^2) 11^T - (2/n_a) I) D^(a,a) 1
        z           = min over ordered pairs (a, b) of
                      (2 n_a / (n_a + n_b)) min(M^(a,b) 1)
        u[(a, b)]   = M^(a,b) 1 - z (n_a + n_b) / (2 n_a) 1   (>= 0)
        rho[{a, b}] = u_(a,b)^T 1  (= u_(b,a)^T 1; stored symmetrized)

    with M^(a,b) = D^(a,b) + mu_a 1^T + 1 mu_b^T.
    """

    phi: np.ndarray
    sizes: np.ndarray
    offsets: np.ndarray
    perm: np.ndarray
    sq_norms: np.ndarray
    mu: tuple[np.ndarray, ...]
    z: float
    u: dict[tuple[int, int], np.ndarray]
    rho: dict[tuple[int, int], float]
    min_u: dict[tuple[int, int], float]
    scale: float
    undefined_pairs: tuple[tuple[int, int], ...]

    @property
    def n_points(self) -> int:
        return self.phi.shape[1]

    @property
    def dim(self) -> int:
        return self.phi.shape[0]

    @property
    def n_clusters(self) -> int:
        return self.sizes.size

    @property
    def is_undefined(self) -> bool:
        return len(self.undefined_pairs) > 0

    def block(self, a: int) -> slice:
        return slice(int(self.offsets[a]), int(self.offsets[a + 1]))

    def rho_of(self, a: int, b: int) -> float:
        return self.rho[(a, b) if a < b else (b, a)]

    def require_defined(self) -> None:
        if self.is_undefined:
            raise CertificateUndefinedError(
                f"rank-one blocks undefined for cluster pairs {list(self.undefined_pairs)}"
            )


def build_certificate_context(points: PointSet, partition: Partition) -> CertificateContext:
    """Assemble the certificate quantities in O(kmN) using only
    matrix-free products (no N x N matrix is ever formed)."""
    if partition.count != points.count:
        raise ValueError("partition does not match point count")
    k = partition.k
    if k < 2:
        raise ValueError("certificate needs at least two clusters")
    perm = np.argsort(partition.labels, kind="stable")
    phi = points.columns[:, perm]
    sizes = np.asarray(partition.sizes, dtype=np.int64)
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    n_total = points.count
    sq_norms = np.einsum("ij,ij->j", phi, phi)
    scale = float(sq_norms.mean())

    col_sums = []
    sq_sums = []
    blocks = [slice(int(offsets[a]), int(offsets[a + 1])) for a in range(k)]
    for a in range(k):
        col_sums.append(phi[:, blocks[a]].sum(axis=1))
        sq_sums.append(float(sq_norms[blocks[a]].sum()))

    mu = []
    for a in range(k):
        n_a = int(sizes[a])
        d_self = sq_norms[blocks[a]] * n_a - 2.0 * (phi[:, blocks[a]].T @ col_sums[a]) + sq_sums[a]
        mu.append(0.5 * (d_self.sum() / n_a**2 - (2.0 / n_a) * d_self))

    row_sums = {}  # (a, b) -> M^(a,b) 1
    for a in range(k):
        for b in range(k):
            if a == b:
                continue
            n_b = int(sizes[b])
            d_ab = sq_norms[blocks[a]] * n_b - 2.0 * (phi[:, blocks[a]].T @ col_sums[b]) + sq_sums[b]
            row_sums[(a, b)] = d_ab + n_b * mu[a] + mu[b].sum()

    z = min(
        2.0 * sizes[a] / (sizes[a] + sizes[b]) * float(row_sums[(a, b)].min())
        for (a, b) in row_sums
    )

    u: dict[tuple[int, int], np.ndarray] = {}
    min_u: dict[tuple[int, int], float] = {}
    for (a, b), ms in row_sums.items():
        vec = ms - z * (sizes[a] + sizes[b]) / (2.0 * sizes[a])
        low = float(vec.min())
        min_u[(a, b)] = low
        if low < -U_CLAMP_REL_TOLERANCE * max(scale, 1e-300):
            raise ArithmeticError(
                f"construction produced u with negative entry {low:.3e} for pair {(a, b)}"
            )
        u[(a, b)] = np.maximum(vec, 0.0)

    rho: dict[tuple[int, int], float] = {}
    undefined: list[tuple[int, int]] = []
    for a in range(k):
        for b in range(a + 1, k):
            # equal to u_(b,a)^T 1 in exact arithmetic; averaged so the
            # operator is exactly symmetric in floating point
            val = 0.5 * (float(u[(a, b)].sum()) + float(u[(b, a)].sum()))
            rho[(a, b)] = val
            if val <= RHO_REL_TOLERANCE * n_total * scale:
                undefined.append((a, b))

    return CertificateContext(
        phi=phi,
        sizes=sizes,
        offsets=offsets,
        perm=perm,
        sq_norms=sq_norms,
        mu=tuple(mu),
        z=float(z),
        u=u,
        rho=rho,
        min_u=min_u,
        scale=scale,
        undefined_pairs=tuple(undefined),
    )


def _project_off_blocks(ctx: CertificateContext, x: np.ndarray) -> np.ndarray:
    """P x: subtract each cluster's mean from its block."""
    sums = np.add.reduceat(x, ctx.offsets[:-1])
    return x - np.repeat(sums / ctx.sizes, ctx.sizes)


def _apply_distance(ctx: CertificateContext, x: np.ndarray) -> np.ndarray:
    """D x with D = nu 1^T - 2 Phi^T Phi + 1 nu^T, in O(mN)."""
    return ctx.sq_norms * x.sum() - 2.0 * (ctx.phi.T @ (ctx.phi @ x)) + float(ctx.sq_norms @ x)


def _apply_offdiag_blocks(ctx: CertificateContext, x: np.ndarray) -> np.ndarray:
    """B x using the rank-one blocks: (Bx)_a = sum_b u_(a,b) (u_(b,a)^T x_b) / rho."""
    k = ctx.n_clusters
    dots = {
        (b, a): float(ctx.u[(b, a)] @ x[ctx.block(b)])
        for a in range(k)
        for b in range(k)
        if a != b
    }
    out = np.zeros_like(x)
    for a in range(k):
        acc = np.zeros(int(ctx.sizes[a]))
        for b in range(k):
            if b == a:
                continue
            acc += ctx.u[(a, b)] * (dots[(b, a)] / ctx.rho_of(a, b))
        out[ctx.block(a)] = acc
    return out


def apply_A(ctx: CertificateContext, x: np.ndarray) -> np.ndarray:
    """One O(kmN) application of A = (z/N) 11^T + P (B - D) P.

    Raises CertificateUndefinedError when the context was flagged
    undefined (division by rho would be invalid).
    """
    ctx.require_defined()
    x = np.asarray(x, dtype=float)
    if x.shape != (ctx.n_points,):
        raise ValueError(f"expected a length-{ctx.n_points} vector, got shape {x.shape}")
    y = _project_off_blocks(ctx, x)
    w = _apply_offdiag_blocks(ctx, y) - _apply_distance(ctx, y)
    return _project_off_blocks(ctx, w) + (ctx.z / ctx.n_points) * x.sum()


@dataclass(frozen=True)
class ImplicitOperator:
    """Callable wrapper around ``apply_A`` for a fixed context."""

    ctx: CertificateContext

    @property
    def dim(self) -> int:
        return self.ctx.n_points

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return apply_A(self.ctx, x)


def _check_dense_size(ctx: CertificateContext, cap: int = 2000) -> None:
    if ctx.n_points > cap:
        raise ValueError(f"dense helper limited to N <= {cap}, got N = {ctx.n_points}")


def dense_E(ctx: CertificateContext) -> np.ndarray:
    """Dense E with blocks (1/2)(1/n_a + 1/n_b) 11^T (test helper)."""
    _check_dense_size(ctx)
    inv = np.repeat(1.0 / ctx.sizes, ctx.sizes)
    return 0.5 * (inv[:, None] + inv[None, :])


def dense_M(ctx: CertificateContext) -> np.ndarray:
    """Dense M = D + g 1^T + 1 g^T where block a of g is mu_a (test helper)."""
    _check_dense_size(ctx)
    g = np.concatenate(ctx.mu)
    return pairwise_sq_distances(ctx.phi) + g[:, None] + g[None, :]


def dense_B(ctx: CertificateContext) -> np.ndarray:
    """Dense B assembled from the rank-one blocks (test helper)."""
    _check_dense_size(ctx)
    ctx.require_defined()
    n = ctx.n_points
    out = np.zeros((n, n))
    k = ctx.n_clusters
    for a in range(k):
        for b in range(k):
            if a == b:
                continue
            out[ctx.block(a), ctx.block(b)] = np.outer(ctx.u[(a, b)], ctx.u[(b, a)]) / ctx.rho_of(a, b)
    return out


def dense_projection(ctx: CertificateContext) -> np.ndarray:
    """Dense P = I - sum_a (1/n_a) 1_a 1_a^T (test helper)."""
    _check_dense_size(ctx)
    n = ctx.n_points
    out = np.eye(n)
    for a in range(ctx.n_clusters):
        blk = ctx.block(a)
        out[blk, blk] -= 1.0 / float(ctx.sizes[a])
    return out


def dense_A(ctx: CertificateContext) -> np.ndarray:
    """Materialize A = (z/N) 11^T + P (B - D) P for small N (N <= 2000)."""
    _check_dense_size(ctx)
    ctx.require_defined()
    n = ctx.n_points
    proj = dense_projection(ctx)
    core = dense_B(ctx) - pairwise_sq_distances(ctx.phi)
    return (ctx.z / n) * np.ones((n, n)) + proj @ core @ proj


def dense_certificate_gap(ctx: CertificateContext) -> float:
    """Margin z - lambda_max of P (B - M) P restricted to the orthogonal
    complement of the cluster-indicator span (test helper).

    Nonnegative (up to roundoff) exactly when the dense certificate
    condition holds; positive when it holds strictly.
    """
    _check_dense_size(ctx)
    ctx.require_defined()
    n = ctx.n_points
    indicators = np.zeros((ctx.n_clusters, n))
    for a in range(ctx.n_clusters):
        indicators[a, ctx.block(a)] = 1.0
    basis = np.linalg.svd(indicators, full_matrices=True)[2][ctx.n_clusters :].T  # N x (N - k)
    proj = dense_projection(ctx)
    core = proj @ (dense_B(ctx) - dense_M(ctx)) @ proj
    restricted = basis.T @ core @ basis
    return ctx.z - float(np.linalg.eigvalsh(restricted).max())


def corollary_check(points: PointSet, partition: Partition) -> tuple[bool, float, float]:
    """Explicit sufficient test for certificate validity.

    Computes

        lhs = 2 ||Psi||^2 + sum_{a<b} ||P_1perp u_(a,b)|| ||P_1perp u_(b,a)|| / rho_(a,b)

    where Psi is the cluster-centered m x N point matrix, and compares it
    against z.  ``lhs <= z`` implies the operator condition behind the
    certificate (the converse need not hold).  ||Psi|| is found by power
    iteration on the m x m Gram matrix Psi Psi^T.

    Returns:
        (holds, lhs, z)
    """
    ctx = build_certificate_context(points, partition)
    ctx.require_defined()
    centered = np.empty_like(ctx.phi)
    for a in range(ctx.n_clusters):
        blk = ctx.block(a)
        centered[:, blk] = ctx.phi[:, blk] - ctx.phi[:, blk].mean(axis=1)[:, None]
    gram = centered @ centered.T
    eig = leading_eigenvector(gram, tol=1e-8, max_iter=10_000, seed=0)
    lhs = 2.0 * max(eig.rayleigh, 0.0)
    for a in range(ctx.n_clusters):
        for b in range(a + 1, ctx.n_clusters):
            u_ab = ctx.u[(a, b)]
            u_ba = ctx.u[(b, a)]
            norm_ab = float(np.linalg.norm(u_ab - u_ab.mean()))
            norm_ba = float(np.linalg.norm(u_ba - u_ba.mean()))
            lhs += norm_ab * norm_ba / ctx.rho_of(a, b)
    return lhs <= ctx.z, lhs, ctx.z


def recover_alpha(ctx: CertificateContext) -> np.ndarray:
    """The per-point dual coefficients, in the caller's point order.

    alpha_{a,r} = -z/n_a + (1/n_a^2) 1^T D^(a,a) 1 - (2/n_a) e_r^T D^(a,a) 1,
    which equals -z/n_a + 2 mu_{a,r}.
    """
    parts = []
    for a in range(ctx.n_clusters):
        parts.append(-ctx.z / float(ctx.sizes[a]) + 2.0 * ctx.mu[a])
    alpha = np.empty(ctx.n_points)
    alpha[ctx.perm] = np.concatenate(parts)
    return alpha


@dataclass(frozen=True)
class CertifyOutcome:
    """Result of the optimality certification pipeline.

    ``confidence_bound`` is 3 sqrt(N epsilon), the bound on the probability
    that a certificate was issued for a non-optimal partition.
    """

    decision: CertifyDecision
    z: float
    detector: Optional[DetectorOutcome]
    confidence_bound: float

    @property
    def certified(self) -> bool:
        return self.decision is CertifyDecision.CERTIFIED_OPTIMAL


_DETECTOR_TO_CERTIFY = {
    DetectorDecision.REJECT_H0_ACCEPT_H1: CertifyDecision.CERTIFIED_OPTIMAL,
    DetectorDecision.ACCEPT_H0: CertifyDecision.NOT_CERTIFIED,
    DetectorDecision.INCONCLUSIVE: CertifyDecision.INCONCLUSIVE,
}


def certify_partition(
    points: PointSet,
    partition: Partition,
    epsilon: Optional[float] = None,
    max_iter: Optional[int] = None,
    seed: int = 0,
) -> CertifyOutcome:
    """Test whether ``partition`` is a certifiably global k-means optimum.

    Builds the certificate context, then runs the power-iteration detector
    on the implicit operator A with the known eigenvector v = 1/sqrt(N) 1
    (eigenvalue z).  A rejection of H0 means v spans the unique leading
    eigenspace, which (for z > 0) forces the certificate condition and
    hence global optimality, up to the reported confidence bound.

    ``epsilon`` defaults to the dimension-calibrated N^-3.  z <= 0 cannot
    yield a valid certificate (the operator always has k - 1 zero
    eigenvalues), so such runs return NOT_CERTIFIED without iterating.
    """
    n = points.count
    if epsilon is None:
        epsilon = default_epsilon(n, 1.0)
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    confidence_bound = 3.0 * math.sqrt(n * epsilon)
    ctx = build_certificate_context(points, partition)
    if ctx.is_undefined:
        return CertifyOutcome(CertifyDecision.CERTIFICATE_UNDEFINED, ctx.z, None, confidence_bound)
    if ctx.z <= 0.0:
        return CertifyOutcome(CertifyDecision.NOT_CERTIFIED, ctx.z, None, confidence_bound)
    v = np.full(n, 1.0 / math.sqrt(n))
    outcome = power_iteration_detect(
        ImplicitOperator(ctx), v, DetectorConfig(epsilon=epsilon, max_iter=max_iter, seed=seed)
    )
    return CertifyOutcome(_DETECTOR_TO_CERTIFY[outcome.decision], ctx.z, outcome, confidence_bound)


def diagnostics_csv(ctx: CertificateContext) -> str:
    """Dump per-pair certificate diagnostics as CSV text.

    Two sections: a scalar row (z, N, k) and one row per ordered cluster
    pair with its rho and the minimum entry of u before clamping.
    """
    buf = io.StringIO()
    buf.write("z,N,k\n")
    buf.write(f"{ctx.z!r},{ctx.n_points},{ctx.n_clusters}\n")
    buf.write("pair_a,pair_b,rho,min_u\n")
    for a in range(ctx.n_clusters):
        for b in range(ctx.n_clusters):
            if a == b:
                continue
            buf.write(f"{a},{b},{ctx.rho_of(a, b)!r},{ctx.min_u[(a, b)]!r}\n")
    return buf.getvalue()
