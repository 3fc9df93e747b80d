"""Generalized Gell-Mann generators of SU(n) and their structure tensors.

Generators are ordered: every symmetric ``u(j,k)`` by lexicographic ``(j, k)``,
then every antisymmetric ``v(j,k)`` in the same order, then the diagonal
``w(l)`` for ``l = 1..n-1``. Labels use 1-based indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError, InconsistentBasisError
from .reports import IdentityReport, entry_from_residuals

DEFAULT_TOL = 1e-9


def _frozen(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GellMannBasis:
    n: int
    generators: np.ndarray  # (s, n, n) complex
    labels: tuple[str, ...]

    @property
    def s(self) -> int:
        return self.n * self.n - 1

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, i):
        return self.generators[i]

    def gram(self):
        """Trace inner products ``Tr(lambda_i lambda_j)``."""
        return np.einsum("iab,jba->ij", self.generators, self.generators)


def _elementary(n, k, l):
    p = np.zeros((n, n), dtype=complex)
    p[k, l] = 1.0
    return p


def build_generators(n: int) -> GellMannBasis:
    """Construct the ``n**2 - 1`` generalized Gell-Mann matrices.

    The diagonal family is
    ``w(l) = -sqrt(2/(l(l+1))) * (sum_{m<=l} P_mm - l P_{l+1,l+1})``,
    i.e. the usual construction with an overall minus sign, so for ``n=2``
    ``w(1) = diag(-1, 1)``.

    Raises
    ------
    DomainError
        If ``n < 2``.
    """
    if int(n) != n or n < 2:
        raise DomainError(f"SU(n) needs an integer n >= 2, got {n!r}")
    n = int(n)
    pairs = [(j, k) for j in range(n) for k in range(j + 1, n)]
    gens, labels = [], []
    for j, k in pairs:
        gens.append(_elementary(n, j, k) + _elementary(n, k, j))
        labels.append(f"u({j + 1},{k + 1})")
    for j, k in pairs:
        gens.append(1j * (_elementary(n, j, k) - _elementary(n, k, j)))
        labels.append(f"v({j + 1},{k + 1})")
    for l in range(1, n):
        diag = np.zeros(n)
        diag[:l] = 1.0
        diag[l] = -l
        gens.append(-np.sqrt(2.0 / (l * (l + 1))) * np.diag(diag).astype(complex))
        labels.append(f"w({l})")
    return GellMannBasis(n=n, generators=_frozen(np.stack(gens)), labels=tuple(labels))


def _permutation_parity(i, j, k):
    return (i > j).astype(int) + (i > k) + (j > k)


def _canonicalize(raw, antisymmetric):
    """Rebuild a 3-tensor from its sorted-index entries.

    Each value is taken from the index-sorted position and carries the sign of
    the sorting permutation when ``antisymmetric``; entries with a repeated
    index are set to zero in that case. The result is exactly (anti)symmetric.
    """
    s = raw.shape[0]
    i, j, k = np.indices((s, s, s))
    srt = np.sort(np.stack([i, j, k]), axis=0)
    out = raw[srt[0], srt[1], srt[2]]
    if antisymmetric:
        sign = 1.0 - 2.0 * (_permutation_parity(i, j, k) % 2)
        distinct = (i != j) & (i != k) & (j != k)
        out = np.where(distinct, sign * out, 0.0)
    return out


@dataclass(frozen=True)
class StructureTensors:
    """Structure constants ``f`` (antisymmetric) and ``d`` (symmetric).

    ``F_list[i][j, k] = f[i, j, k]``; ``F_stacked`` is the ``s**2 x s`` matrix
    whose i-th ``s x s`` block is ``F_list[i].T`` so that
    ``F_stacked @ beta`` is the column-stacked ``Theta^-(beta)``. Same for D.
    """

    n: int
    f: np.ndarray
    d: np.ndarray
    labels: tuple[str, ...] = ()
    F_list: np.ndarray = field(init=False, repr=False)
    D_list: np.ndarray = field(init=False, repr=False)
    F_stacked: np.ndarray = field(init=False, repr=False)
    D_stacked: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        f = _frozen(np.asarray(self.f, dtype=float))
        d = _frozen(np.asarray(self.d, dtype=float))
        s = self.n * self.n - 1
        if f.shape != (s, s, s) or d.shape != (s, s, s):
            raise DomainError(f"tensors must have shape {(s, s, s)} for n={self.n}")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "F_list", f)
        object.__setattr__(self, "D_list", d)
        object.__setattr__(self, "F_stacked", _frozen(f.transpose(0, 2, 1).reshape(s * s, s)))
        object.__setattr__(self, "D_stacked", _frozen(d.transpose(0, 2, 1).reshape(s * s, s)))

    @property
    def s(self) -> int:
        return self.n * self.n - 1

    def to_dict(self):
        return {
            "n": self.n,
            "s": self.s,
            "order": list(self.labels),
            "f": self.f.tolist(),
            "d": self.d.tolist(),
        }


def structure_constants(basis: GellMannBasis, tol: float = DEFAULT_TOL) -> StructureTensors:
    """Extract ``f`` and ``d`` by trace projection.

    ``f_ijk = Tr([l_i, l_j] l_k) / 4i`` and ``d_ijk = Tr({l_i, l_j} l_k) / 4``.

    Raises
    ------
    InconsistentBasisError
        If ``Tr(l_i l_j) = 2 delta_ij`` fails, or an extracted value keeps an
        imaginary part above ``tol``.
    """
    lam = basis.generators
    gram_dev = np.abs(basis.gram() - 2.0 * np.eye(len(lam))).max()
    if gram_dev > tol:
        raise InconsistentBasisError(f"basis is not trace-orthonormal (deviation {gram_dev:.3e})")
    triple = np.einsum("iab,jbc,kca->ijk", lam, lam, lam)
    f_raw = (triple - triple.transpose(1, 0, 2)) / 4j
    d_raw = (triple + triple.transpose(1, 0, 2)) / 4.0
    residue = max(np.abs(f_raw.imag).max(), np.abs(d_raw.imag).max())
    if residue > tol:
        raise InconsistentBasisError(f"structure constants not real (imaginary residue {residue:.3e})")
    return StructureTensors(
        n=basis.n,
        f=_canonicalize(f_raw.real, antisymmetric=True),
        d=_canonicalize(d_raw.real, antisymmetric=False),
        labels=basis.labels,
    )


@lru_cache(maxsize=None)
def basis_for(n: int) -> GellMannBasis:
    """Cached :func:`build_generators`."""
    return build_generators(n)


@lru_cache(maxsize=None)
def tensors_for(n: int) -> StructureTensors:
    """Cached ``structure_constants(build_generators(n))``."""
    return structure_constants(basis_for(n))


def product_expansion(tensors: StructureTensors, basis: GellMannBasis):
    """Right-hand side of ``l_i l_j = (2/n) delta_ij I + sum_k (i f_ijk + d_ijk) l_k``.

    Returns an ``(s, s, n, n)`` array.
    """
    n = tensors.n
    coeff = 1j * tensors.f + tensors.d
    rhs = np.einsum("ijk,kab->ijab", coeff, basis.generators)
    rhs += (2.0 / n) * np.einsum("ij,ab->ijab", np.eye(tensors.s), np.eye(n))
    return rhs


def verify_basis(basis: GellMannBasis, tensors: StructureTensors, tol: float = DEFAULT_TOL) -> IdentityReport:
    """Hermiticity, tracelessness, orthonormality and the product rule."""
    lam = basis.generators
    n = basis.n
    entries = [
        entry_from_residuals("count", [len(lam) - (n * n - 1)], tol),
        entry_from_residuals("hermitian", np.abs(lam - lam.conj().transpose(0, 2, 1)).max(axis=(1, 2)), tol),
        entry_from_residuals("traceless", np.abs(np.einsum("iaa->i", lam)), tol),
        entry_from_residuals("orthonormal", basis.gram() - 2.0 * np.eye(len(lam)), tol, scale=2.0 * np.eye(len(lam))),
    ]
    direct = np.einsum("iab,jbc->ijac", lam, lam)
    diff = np.abs(direct - product_expansion(tensors, basis)).max(axis=(2, 3))
    entries.append(entry_from_residuals("product_rule", diff, tol, scale=np.abs(direct).max(axis=(2, 3))))
    return IdentityReport(tol=tol, entries=tuple(entries))


def verify_structure_identities(t: StructureTensors, tol: float = DEFAULT_TOL) -> IdentityReport:
    """Check the f/d tensor identities and the adjoint-matrix relations.

    Every identity is checked for all index tuples. Failures are reported, never
    raised. Entry names: ``ff_jacobi``, ``fd_mixed``, ``ff_contraction``,
    ``ff_trace``, ``FF_commutator``, ``FD_commutator``, ``FD_sym``, ``DF_sym``,
    ``DD_minus_FF``, ``FtF``, plus the stored-symmetry checks ``f_antisymmetric``
    and ``d_symmetric``.
    """
    f, d, n, s = t.f, t.d, t.n, t.s
    eye = np.eye(s)
    ein = np.einsum
    entries = []

    def add(name, lhs, rhs):
        entries.append(entry_from_residuals(name, lhs - rhs, tol, scale=np.abs(rhs)))

    perms = [(0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
    asym = max(np.abs(f + f.transpose(p)).max() if p in ((0, 2, 1), (1, 0, 2), (2, 1, 0))
               else np.abs(f - f.transpose(p)).max() for p in perms)
    sym = max(np.abs(d - d.transpose(p)).max() for p in perms)
    entries.append(entry_from_residuals("f_antisymmetric", [asym], tol))
    entries.append(entry_from_residuals("d_symmetric", [sym], tol))

    # index order of the 4-tensors below: (i, j, k, l)
    jac = (ein("ilm,mjk->ijkl", f, f, optimize=True) + ein("jlm,imk->ijkl", f, f, optimize=True)
           + ein("klm,ijm->ijkl", f, f, optimize=True))
    add("ff_jacobi", jac, 0.0)
    mixed = (ein("ilm,mjk->ijkl", f, d, optimize=True) + ein("jlm,imk->ijkl", f, d, optimize=True)
             + ein("klm,ijm->ijkl", f, d, optimize=True))
    add("fd_mixed", mixed, 0.0)

    # (i, l, m, j)
    lhs = ein("ilk,mjk->ilmj", f, f, optimize=True)
    rhs = (2.0 / n) * (ein("im,lj->ilmj", eye, eye) - ein("ij,lm->ilmj", eye, eye))
    rhs = rhs + ein("imk,ljk->ilmj", d, d, optimize=True) - ein("ijk,lmk->ilmj", d, d, optimize=True)
    add("ff_contraction", lhs, rhs)
    add("ff_trace", ein("imk,jmk->ij", f, f), n * eye)

    F, D = t.F_list, t.D_list
    FF = ein("iab,jbc->ijac", F, F, optimize=True)
    FD = ein("iab,jbc->ijac", F, D, optimize=True)
    DF = ein("iab,jbc->ijac", D, F, optimize=True)
    DD = ein("iab,jbc->ijac", D, D, optimize=True)
    fF = ein("ijk,kab->ijab", f, F, optimize=True)
    fD = ein("ijk,kab->ijab", f, D, optimize=True)
    dF = ein("ijk,kab->ijab", d, F, optimize=True)
    dD = ein("ijk,kab->ijab", d, D, optimize=True)
    add("FF_commutator", FF - FF.transpose(1, 0, 2, 3), -fF)
    add("FD_commutator", FD - DF.transpose(1, 0, 2, 3), -fD)
    add("FD_sym", FD + FD.transpose(1, 0, 2, 3), dF)
    add("DF_sym", DF + DF.transpose(1, 0, 2, 3), dF)
    # axes (i, j, m, l)
    delta = ein("ij,ml->ijml", eye, eye) - ein("im,jl->ijml", eye, eye)
    add("DD_minus_FF", DD - FF.transpose(1, 0, 2, 3), dD + (2.0 / n) * delta)

    add("FtF", t.F_stacked.T @ t.F_stacked, n * eye)
    return IdentityReport(tol=tol, entries=tuple(entries))

