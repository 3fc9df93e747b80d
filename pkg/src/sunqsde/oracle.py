"""Brute-force checks with the generators as actual n x n matrices.

Two routes independent of the closed-form conditions in :mod:`sunqsde.model`:

* the Ito expansion of ``d[x, x.T]`` and ``d{x, x.T}`` evaluated entrywise on
  operator-valued matrices at ``x = (lambda_1, ..., lambda_s)``;
* a moment flow for ``<x>`` and ``<x x.T>`` integrated with classical RK4.

The moment flow takes expectations with the fields in the vacuum state, so
the noise increments drop out and only the Ito correction survives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import DEFAULT_TOL, GellMannBasis, basis_for
from .errors import DomainError, IntegrationDivergedError
from .model import StateSpaceModel
from .theta import ThetaContext, theta_minus, theta_plus


@dataclass(frozen=True)
class OperatorMatrix:
    """A ``rows x cols`` array whose entries are ``n x n`` complex matrices."""

    entries: np.ndarray  # (rows, cols, n, n)

    # make ``ndarray @ OperatorMatrix`` dispatch to __rmatmul__
    __array_ufunc__ = None

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        if e.ndim != 4 or e.shape[2] != e.shape[3]:
            raise DomainError(f"entries must have shape (rows, cols, n, n), got {e.shape}")
        object.__setattr__(self, "entries", e)

    @classmethod
    def column(cls, ops) -> "OperatorMatrix":
        ops = np.asarray(ops, dtype=complex)
        return cls(ops[:, None, :, :])

    @classmethod
    def scalar(cls, M, n) -> "OperatorMatrix":
        """Attach the identity operator to every entry of a numeric matrix."""
        M = np.atleast_2d(np.asarray(M, dtype=complex))
        return cls(np.einsum("ij,ab->ijab", M, np.eye(n)))

    @property
    def shape(self):
        return self.entries.shape[:2]

    @property
    def n(self) -> int:
        return self.entries.shape[2]

    @property
    def T(self) -> "OperatorMatrix":
        """Positional transpose; the operators themselves are not adjoined."""
        return OperatorMatrix(self.entries.transpose(1, 0, 2, 3))

    def __add__(self, other):
        return OperatorMatrix(self.entries + other.entries)

    def __sub__(self, other):
        return OperatorMatrix(self.entries - other.entries)

    def __neg__(self):
        return OperatorMatrix(-self.entries)

    def __mul__(self, c):
        return OperatorMatrix(self.entries * c)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(np.einsum("ikab,kjbc->ijac", self.entries, other.entries))
        return OperatorMatrix(np.einsum("ikab,kj->ijab", self.entries, np.asarray(other)))

    def __rmatmul__(self, other):
        return OperatorMatrix(np.einsum("ik,kjab->ijab", np.asarray(other), self.entries))

    def entry_norms(self):
        """Spectral norm of every entry."""
        return np.linalg.norm(self.entries, ord=2, axis=(2, 3))

    def norm(self) -> float:
        """Largest spectral norm over all entries."""
        if self.entries.size == 0:
            return 0.0
        return float(self.entry_norms().max())


def _check_columns(x, y):
    if x.shape[1] != 1 or y.shape[1] != 1:
        raise DomainError("brackets are defined for operator column vectors")
    if x.n != y.n:
        raise DomainError(f"operator dimension mismatch: {x.n} vs {y.n}")


def opmat_bracket(x: OperatorMatrix, y: OperatorMatrix) -> OperatorMatrix:
    """``[x, y.T] = x y.T - (y x.T).T``, i.e. entry ``(i, j)`` is ``x_i y_j - y_j x_i``."""
    _check_columns(x, y)
    return x @ y.T - (y @ x.T).T


def opmat_anticommutator(x: OperatorMatrix, y: OperatorMatrix) -> OperatorMatrix:
    """``{x, y.T} = x y.T + (y x.T).T``."""
    _check_columns(x, y)
    return x @ y.T + (y @ x.T).T


def theta_minus_op(ctx: ThetaContext, x: OperatorMatrix) -> OperatorMatrix:
    return OperatorMatrix(np.einsum("ijk,kab->ijab", ctx.tensors.f, x.entries[:, 0]))


def theta_plus_op(ctx: ThetaContext, x: OperatorMatrix) -> OperatorMatrix:
    return OperatorMatrix(np.einsum("ijk,kab->ijab", ctx.tensors.d, x.entries[:, 0]))


def generator_column(basis: GellMannBasis) -> OperatorMatrix:
    return OperatorMatrix.column(basis.generators)


def linear_independence_margin(basis: GellMannBasis) -> float:
    """Smallest eigenvalue of the trace Gram matrix of ``{I, lambda_1, ..., lambda_s}``.

    Positive means the operators are linearly independent, which lets
    operator equations linear in ``x`` be matched coefficient by coefficient.
    """
    ops = np.concatenate([np.eye(basis.n)[None].astype(complex), basis.generators])
    gram = np.einsum("iba,jbc->ijac", ops.conj(), ops).trace(axis1=2, axis2=3)
    return float(np.linalg.eigvalsh(gram).min())


@dataclass(frozen=True)
class ItoIntegrands:
    """Integrands of ``d[x,x.T] - 2i Theta^-(dx)`` and ``d{x,x.T} - 2 Theta^+(dx)``.

    Keys are ``ccr_dt``, ``accr_dt``, and per channel ``ccr_dW1[k]``,
    ``ccr_dW2[k]``, ``accr_dW1[k]``, ``accr_dW2[k]``. All vanish exactly when
    the model preserves both relations.
    """

    terms: dict

    def norms(self):
        return {k: v.norm() for k, v in self.terms.items()}

    def max_norm(self) -> float:
        return max(self.norms().values(), default=0.0)

    def vanish(self, tol: float = DEFAULT_TOL) -> bool:
        return self.max_norm() < tol


def ito_integrands(ctx: ThetaContext, m: StateSpaceModel, x: OperatorMatrix | None = None) -> ItoIntegrands:
    """Expand ``d(x x.T) = dx x.T + x dx.T + dx dx.T`` with the quadrature Ito table.

    Per channel ``dW1 dW1 = dW2 dW2 = dt``, ``dW1 dW2 = i dt``,
    ``dW2 dW1 = -i dt``; products across channels vanish. ``x`` defaults to the
    generator column of the context's basis.
    """
    if ctx.n != m.n:
        raise DomainError(f"context is for n={ctx.n}, model has n={m.n}")
    if x is None:
        x = generator_column(basis_for(ctx.n))
    n = x.n
    drift = OperatorMatrix.scalar(m.A0[:, None], n) + m.A @ x
    dt = drift @ x.T + x @ drift.T
    noise = []
    for k in range(m.nw):
        b1x, b2x = m.B1[k] @ x, m.B2[k] @ x
        dt = dt + b1x @ b1x.T + 1j * (b1x @ b2x.T) - 1j * (b2x @ b1x.T) + b2x @ b2x.T
        noise.append((k, b1x, b2x))
    terms = {
        "ccr_dt": dt - dt.T - 2j * theta_minus_op(ctx, drift),
        "accr_dt": dt + dt.T - 2.0 * theta_plus_op(ctx, drift),
    }
    for k, b1x, b2x in noise:
        for q, bx in ((1, b1x), (2, b2x)):
            z = bx @ x.T + x @ bx.T
            terms[f"ccr_dW{q}[{k}]"] = z - z.T - 2j * theta_minus_op(ctx, bx)
            terms[f"accr_dW{q}[{k}]"] = z + z.T - 2.0 * theta_plus_op(ctx, bx)
    return ItoIntegrands(terms)


@dataclass(frozen=True)
class MomentState:
    """``m = <x>`` and ``M = <x x.T>`` at time ``t`` with their relation residuals."""

    t: float
    m: np.ndarray
    M: np.ndarray
    r_ccr: float
    r_accr: float


def relation_residuals(ctx: ThetaContext, m, M):
    """Frobenius residuals of ``M - M.T = 2i Theta^-(m)`` and ``M + M.T = (4/n) I + 2 Theta^+(m)``."""
    r_ccr = np.linalg.norm((M - M.T) - 2j * theta_minus(ctx, m))
    r_accr = np.linalg.norm((M + M.T) - (4.0 / ctx.n) * np.eye(ctx.s) - 2.0 * theta_plus(ctx, m))
    return float(r_ccr), float(r_accr)


def _state(ctx, t, m, M):
    return MomentState(float(t), m, M, *relation_residuals(ctx, m, M))


def init_moments(ctx: ThetaContext, rho0, tol: float = DEFAULT_TOL) -> MomentState:
    """Moments of the generators in the density matrix ``rho0``.

    ``m_i = Tr(rho0 lambda_i)`` and
    ``M_ij = (2/n) delta_ij + sum_k (i f_ijk + d_ijk) m_k``.

    Raises
    ------
    DomainError
        If ``rho0`` is not a Hermitian, unit-trace, positive semidefinite
        ``n x n`` matrix (within ``tol``).
    """
    rho = np.asarray(rho0, dtype=complex)
    n = ctx.n
    if rho.shape != (n, n):
        raise DomainError(f"density matrix must be {n} x {n}, got {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > tol:
        raise DomainError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise DomainError(f"density matrix has trace {np.trace(rho)!r}, expected 1")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -tol:
        raise DomainError("density matrix is not positive semidefinite")
    basis = basis_for(n)
    m = np.einsum("ab,iba->i", rho, basis.generators)
    M = (2.0 / n) * np.eye(ctx.s) + np.einsum("ijk,k->ij", 1j * ctx.tensors.f + ctx.tensors.d, m)
    return _state(ctx, 0.0, m, M)


def moment_drift(m_model: StateSpaceModel, m, M):
    """Time derivatives of ``<x>`` and ``<x x.T>`` under vacuum fields."""
    A0, A = m_model.A0, m_model.A
    dm = A0 + A @ m
    dM = np.outer(A0, m) + np.outer(m, A0) + A @ M + M @ A.T
    for B1, B2 in zip(m_model.B1, m_model.B2):
        dM = dM + B1 @ M @ B1.T + B2 @ M @ B2.T + 1j * (B1 @ M @ B2.T) - 1j * (B2 @ M @ B1.T)
    return dm, dM


def integrate_moments(ctx: ThetaContext, model: StateSpaceModel, s0: MomentState,
                      t_end: float, h: float = 1e-3) -> list[MomentState]:
    """Fixed-step RK4 from ``s0.t`` to ``s0.t + t_end``.

    The step is shrunk to ``t_end / ceil(t_end / h)`` so the final state lands on
    ``t_end`` exactly. Returns every state including the initial one.

    Raises
    ------
    IntegrationDivergedError
        On a non-finite state; carries the last finite state.
    """
    if not h > 0:
        raise DomainError(f"step must be positive, got {h}")
    if not t_end >= 0:
        raise DomainError(f"t_end must be non-negative, got {t_end}")
    steps = max(1, math.ceil(t_end / h - 1e-9)) if t_end > 0 else 0
    step = t_end / steps if steps else 0.0
    traj = [s0]
    m, M = s0.m.astype(complex), s0.M.astype(complex)
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, steps + 1):
            k1 = moment_drift(model, m, M)
            k2 = moment_drift(model, m + 0.5 * step * k1[0], M + 0.5 * step * k1[1])
            k3 = moment_drift(model, m + 0.5 * step * k2[0], M + 0.5 * step * k2[1])
            k4 = moment_drift(model, m + step * k3[0], M + step * k3[1])
            m = m + step / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            M = M + step / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            if not (np.all(np.isfinite(m)) and np.all(np.isfinite(M))):
                raise IntegrationDivergedError(f"moment state became non-finite at step {i}", traj[-1])
            traj.append(_state(ctx, s0.t + i * step, m, M))
    return traj


def max_residual(traj) -> float:
    return max((max(st.r_ccr, st.r_accr) for st in traj), default=0.0)
