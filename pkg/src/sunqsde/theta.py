"""The linear maps Theta^- and Theta^+ and their identities.

``theta_minus(ctx, beta)[i, j] = sum_k f[i, j, k] * beta[k]`` (antisymmetric) and
``theta_plus`` is the same contraction with ``d`` (symmetric). Column ``i`` of
``theta_minus`` equals ``F_i.T @ beta``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .algebra import DEFAULT_TOL, StructureTensors, tensors_for
from .errors import DomainError
from .reports import IdentityReport, entry_from_residuals


def vec(M):
    """Stack the columns of ``M`` into one vector."""
    return np.asarray(M).reshape(-1, order="F")


def unvec(v, rows):
    v = np.asarray(v)
    return v.reshape(rows, v.size // rows, order="F")


@dataclass(frozen=True)
class ThetaContext:
    """Structure tensors plus the vec-transpose permutation.

    ``perm`` is the index map of the ``s**2 x s**2`` commutation matrix
    ``K`` with ``K @ vec(X) = vec(X.T)``; ``K (A kron B) K = B kron A``.
    """

    tensors: StructureTensors
    perm: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        s = self.tensors.s
        idx = np.arange(s * s).reshape(s, s, order="F")
        perm = vec(idx.T)
        perm.setflags(write=False)
        object.__setattr__(self, "perm", perm)

    @classmethod
    def for_n(cls, n: int) -> "ThetaContext":
        return _context_for(n)

    @property
    def n(self) -> int:
        return self.tensors.n

    @property
    def s(self) -> int:
        return self.tensors.s

    def apply_perm(self, v):
        """``K @ v`` along the first axis without forming ``K``."""
        return np.asarray(v)[self.perm]

    def perm_matrix(self):
        s2 = self.s * self.s
        K = np.zeros((s2, s2))
        K[np.arange(s2), self.perm] = 1.0
        return K


@lru_cache(maxsize=None)
def _context_for(n):
    return ThetaContext(tensors_for(n))


def _as_vector(ctx, beta):
    b = np.asarray(beta)
    if b.ndim == 2 and 1 in b.shape:
        b = b.reshape(-1)
    if b.ndim != 1 or b.shape[0] != ctx.s:
        raise DomainError(f"expected a length-{ctx.s} vector, got shape {np.shape(beta)}")
    return b


def theta_minus(ctx: ThetaContext, beta):
    """Antisymmetric ``s x s`` matrix ``Theta^-(beta)``; row vectors are accepted."""
    return np.einsum("ijk,k->ij", ctx.tensors.f, _as_vector(ctx, beta))


def theta_plus(ctx: ThetaContext, beta):
    """Symmetric ``s x s`` matrix ``Theta^+(beta)``; row vectors are accepted."""
    return np.einsum("ijk,k->ij", ctx.tensors.d, _as_vector(ctx, beta))


def _random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def verify_theta_identities(ctx: ThetaContext, trials: int = 100, tol: float = DEFAULT_TOL,
                            seed: int = 0) -> IdentityReport:
    """Check the seven Theta product identities on random complex vector pairs.

    Deviations are normalized by ``1 + |beta| |gamma|`` per trial. ``worst_index``
    is ``(trial, row, col)`` for matrix identities and ``(trial, row)`` for
    vector ones.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    n, s = ctx.n, ctx.s
    Tm = lambda b: theta_minus(ctx, b)  # noqa: E731
    Tp = lambda b: theta_plus(ctx, b)  # noqa: E731
    I = np.eye(s)
    names = ["minus_swap", "plus_swap", "minus_annihilates_self", "minus_of_minus",
             "minus_of_plus", "plus_of_minus_left", "plus_of_minus_right", "plus_of_plus"]
    diffs = {k: [] for k in names}
    scales = []
    for _ in range(trials):
        b, g = _random_complex(rng, s), _random_complex(rng, s)
        Mb, Mg, Pb, Pg = Tm(b), Tm(g), Tp(b), Tp(g)
        diffs["minus_swap"].append(Mb @ g + Mg @ b)
        diffs["plus_swap"].append(Pb @ g - Pg @ b)
        diffs["minus_annihilates_self"].append(Mb @ b)
        diffs["minus_of_minus"].append(Tm(Mb @ g) - (Mb @ Mg - Mg @ Mb))
        diffs["minus_of_plus"].append(Tm(Pb @ g) - (Mb @ Pg + Mg @ Pb))
        diffs["plus_of_minus_left"].append(Tp(Mb @ g) - (Pb @ Mg - Mg @ Pb))
        diffs["plus_of_minus_right"].append(Tp(Mb @ g) - (Mb @ Pg - Pg @ Mb))
        diffs["plus_of_plus"].append(
            Tp(Pb @ g) - (Pb @ Pg - Mg @ Mb - (2.0 / n) * ((b @ g) * I - np.outer(b, g))))
        scales.append(np.linalg.norm(b) * np.linalg.norm(g))
    scales = np.asarray(scales)
    entries = []
    for name in names:
        arr = np.abs(np.asarray(diffs[name]))
        sc = scales.reshape((-1,) + (1,) * (arr.ndim - 1))
        entries.append(entry_from_residuals(name, arr, tol, scale=sc))
    return IdentityReport(tol=tol, entries=tuple(entries))


def verify_kron_identities(ctx: ThetaContext, trials: int = 20, tol: float = DEFAULT_TOL,
                           seed: int = 0) -> IdentityReport:
    """Check the stacked-matrix permutation identities.

    ``F = -K F`` and ``D = K D`` are exact statements about the stored tensors.
    ``F.T (A kron B) F = F.T (B kron A) F`` (and the D analogue) are checked on
    random real ``A, B`` with deviations normalized by ``1 + |A| |B|``. The
    permutation itself is checked for symmetry, involution and the swap rule.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    s = ctx.s
    F, D = ctx.tensors.F_stacked, ctx.tensors.D_stacked
    K = ctx.perm_matrix()
    entries = [
        entry_from_residuals("perm_symmetric", K - K.T, tol),
        entry_from_residuals("perm_involution", K @ K - np.eye(s * s), tol),
        entry_from_residuals("F_perm_antisymmetric", F + ctx.apply_perm(F), tol),
        entry_from_residuals("D_perm_symmetric", D - ctx.apply_perm(D), tol),
    ]
    swap, fk, dk, sc = [], [], [], []
    for _ in range(trials):
        A = rng.standard_normal((s, s))
        B = rng.standard_normal((s, s))
        AB, BA = np.kron(A, B), np.kron(B, A)
        swap.append(K @ AB @ K - BA)
        fk.append(F.T @ AB @ F - F.T @ BA @ F)
        dk.append(D.T @ AB @ D - D.T @ BA @ D)
        sc.append(np.linalg.norm(A) * np.linalg.norm(B))
    sc = np.asarray(sc)[:, None, None]
    entries += [
        entry_from_residuals("perm_swaps_kron", np.asarray(swap), tol, scale=sc),
        entry_from_residuals("F_kron_swap", np.asarray(fk), tol, scale=sc),
        entry_from_residuals("D_kron_swap", np.asarray(dk), tol, scale=sc),
    ]
    return IdentityReport(tol=tol, entries=tuple(entries))


def reconstruct_theta_minus_generator(ctx: ThetaContext, G):
    """Recover ``g`` with ``G = Theta^-(g)`` via ``g_i = -Tr(F_i G) / n``.

    Returns ``(g, residual)`` with
    ``residual = max(|G + G.T|, |Theta^-(g) - G|)`` (Frobenius norms). A
    residual below tolerance certifies that ``G`` is in the image of
    ``Theta^-``; otherwise ``g`` is the least-squares best fit.

    Raises
    ------
    DomainError
        If ``G`` is not ``s x s``.
    """
    G = np.asarray(G)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise DomainError(f"G must be square, got shape {G.shape}")
    if G.shape[0] != ctx.s:
        raise DomainError(f"G must be {ctx.s} x {ctx.s}, got {G.shape}")
    g = -np.einsum("ijk,kj->i", ctx.tensors.f, G) / ctx.n
    residual = max(np.linalg.norm(G + G.T), np.linalg.norm(theta_minus(ctx, g) - G))
    return g, float(residual)


def image_condition_residual(ctx: ThetaContext, G):
    """Frobenius norm of ``(I kron G) F + (G kron I) F - F G``.

    Vanishes exactly when ``G`` is a ``Theta^-`` image.
    """
    G = np.asarray(G)
    F = ctx.tensors.F_stacked
    I = np.eye(ctx.s)
    return float(np.linalg.norm(np.kron(I, G) @ F + np.kron(G, I) @ F - F @ G))
