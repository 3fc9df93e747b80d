"""Bilinear QSDE state-space models over SU(n).

The model is

    dx = A0 dt + A x dt + sum_k (B1[k] x dW1_k + B2[k] x dW2_k)
    dY1 = C1 x dt + dW1,    dY2 = C2 x dt + dW2

with all matrices real (quadrature form). ``SLHParams`` holds a Hamiltonian
``H = alpha . x`` and coupling ``L = Lambda x``; the scattering matrix is the
identity throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .algebra import DEFAULT_TOL
from .errors import ConsistencyError, DomainError, ModelValidationError
from .theta import ThetaContext, reconstruct_theta_minus_generator, theta_minus, theta_plus, vec

REALNESS_TOL = 1e-12


def _real_array(name, value, shape):
    arr = np.asarray(value)
    if np.iscomplexobj(arr):
        if np.any(arr.imag != 0):
            raise ModelValidationError(f"{name} must be real (quadrature form)", field=name)
        arr = arr.real
    try:
        arr = arr.astype(float)
    except (TypeError, ValueError) as exc:
        raise ModelValidationError(f"{name} is not numeric: {exc}", field=name) from exc
    if arr.shape != shape:
        raise ModelValidationError(f"{name} has shape {arr.shape}, expected {shape}", field=name)
    if not np.all(np.isfinite(arr)):
        raise ModelValidationError(f"{name} has non-finite entries", field=name)
    return arr


@dataclass(frozen=True)
class StateSpaceModel:
    n: int
    nw: int
    A0: np.ndarray
    A: np.ndarray
    B1: np.ndarray  # (nw, s, s)
    B2: np.ndarray  # (nw, s, s)
    C1: np.ndarray  # (nw, s)
    C2: np.ndarray  # (nw, s)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ModelValidationError(f"n must be an integer >= 2, got {self.n!r}", field="n")
        if int(self.nw) != self.nw or self.nw < 0:
            raise ModelValidationError(f"nw must be a non-negative integer, got {self.nw!r}", field="nw")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "nw", int(self.nw))
        s, nw = self.s, self.nw
        for name, shape in (("A0", (s,)), ("A", (s, s)), ("B1", (nw, s, s)), ("B2", (nw, s, s)),
                            ("C1", (nw, s)), ("C2", (nw, s))):
            object.__setattr__(self, name, _real_array(name, getattr(self, name), shape))

    @property
    def s(self) -> int:
        return self.n * self.n - 1

    @classmethod
    def zeros(cls, n: int, nw: int = 1) -> "StateSpaceModel":
        s = n * n - 1
        return cls(n, nw, np.zeros(s), np.zeros((s, s)), np.zeros((nw, s, s)), np.zeros((nw, s, s)),
                   np.zeros((nw, s)), np.zeros((nw, s)))

    def perturbed(self, name: str, index, eps: float) -> "StateSpaceModel":
        """Copy of the model with ``eps`` added to ``getattr(self, name)[index]``."""
        arr = np.array(getattr(self, name), dtype=float)
        arr[index] += eps
        return replace(self, **{name: arr})


def quadrature_noise_matrices(B1_bar, B2_bar):
    """Map annihilation/creation-side coefficients to the real quadrature pair.

    ``B1 = B1_bar + B2_bar`` and ``B2 = i (B2_bar - B1_bar)``.
    """
    B1_bar, B2_bar = np.asarray(B1_bar), np.asarray(B2_bar)
    return B1_bar + B2_bar, 1j * (B2_bar - B1_bar)


@dataclass(frozen=True)
class SLHParams:
    alpha: np.ndarray  # (s,) real
    Lambda: np.ndarray  # (nw, s) complex

    def __post_init__(self):
        alpha = np.asarray(self.alpha)
        if np.iscomplexobj(alpha):
            if np.any(alpha.imag != 0):
                raise ModelValidationError("alpha must be real", field="alpha")
            alpha = alpha.real
        alpha = alpha.astype(float).reshape(-1)
        lam = np.atleast_2d(np.asarray(self.Lambda, dtype=complex))
        if lam.size == 0:
            lam = lam.reshape(0, alpha.size)
        if lam.ndim != 2 or lam.shape[1] != alpha.size:
            raise ModelValidationError(
                f"Lambda has shape {lam.shape}, expected (nw, {alpha.size})", field="Lambda")
        n = int(round(np.sqrt(alpha.size + 1)))
        if n * n - 1 != alpha.size or n < 2:
            raise ModelValidationError(f"alpha length {alpha.size} is not n**2 - 1", field="alpha")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "Lambda", lam)

    @property
    def n(self) -> int:
        return int(round(np.sqrt(self.alpha.size + 1)))

    @property
    def nw(self) -> int:
        return self.Lambda.shape[0]


@dataclass(frozen=True)
class Condition:
    """One checked matrix equation.

    ``residual`` is a Frobenius norm; ``normalized`` divides it by ``1 +``
    the norm of the equation's left-hand side.
    """

    name: str
    residual: float
    normalized: float
    passed: bool

    def __post_init__(self):
        # keep reports JSON-serializable whatever numpy scalar was passed in
        object.__setattr__(self, "residual", float(self.residual))
        object.__setattr__(self, "normalized", float(self.normalized))
        object.__setattr__(self, "passed", bool(self.passed))

    def to_dict(self):
        return {"name": self.name, "residual": self.residual, "normalized": self.normalized,
                "passed": self.passed}


def _condition(name, diff, lhs, tol):
    residual = float(np.linalg.norm(diff))
    normalized = residual / (1.0 + float(np.linalg.norm(lhs)))
    return Condition(name, residual, normalized, bool(np.isfinite(normalized) and normalized < tol))


def _worst(name, conds, tol):
    if not conds:
        return Condition(name, 0.0, 0.0, True)
    worst = max(conds, key=lambda c: c.normalized)
    return Condition(name, max(c.residual for c in conds), worst.normalized,
                     all(c.passed for c in conds) and worst.normalized < tol)


@dataclass(frozen=True)
class RealizabilityReport:
    tol: float
    conditions: tuple[Condition, ...]
    slh: SLHParams | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def __getitem__(self, name) -> Condition:
        return {c.name: c for c in self.conditions}[name]

    def to_dict(self):
        out = {"kind": "realizability", "passed": self.passed, "tol": self.tol,
               "conditions": [c.to_dict() for c in self.conditions]}
        if self.slh is not None:
            from .io import slh_to_dict

            out["slh"] = slh_to_dict(self.slh)
        return out


@dataclass(frozen=True)
class PreservationReport:
    tol: float
    conditions: tuple[Condition, ...]
    b1: np.ndarray = field(repr=False)
    b2: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    A0_implied: np.ndarray = field(repr=False)
    A0_deviation: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def __getitem__(self, name) -> Condition:
        return {c.name: c for c in self.conditions}[name]

    def to_dict(self):
        return {
            "kind": "preservation",
            "passed": self.passed,
            "tol": self.tol,
            "conditions": [c.to_dict() for c in self.conditions],
            "b1": self.b1.tolist(),
            "b2": self.b2.tolist(),
            "a": self.a.tolist(),
            "A0_implied": self.A0_implied.tolist(),
            "A0_deviation": self.A0_deviation,
        }


def _check_context(ctx, n):
    if ctx.n != n:
        raise DomainError(f"context is for n={ctx.n}, model has n={n}")


def _strip_imag(name, value):
    value = np.asarray(value)
    residue = float(np.abs(value.imag).max(initial=0.0))
    if residue > REALNESS_TOL * (1.0 + float(np.abs(value).max(initial=0.0))):
        raise ConsistencyError(f"{name} should be real but has imaginary part {residue:.3e}")
    return value.real.copy()


def synthesize_state_space(ctx: ThetaContext, p: SLHParams) -> StateSpaceModel:
    """Build the quadrature-form model generated by ``H = alpha . x``, ``L = Lambda x``.

    Raises
    ------
    ConsistencyError
        If ``A0`` or ``A`` keeps an imaginary part beyond round-off, which
        would mean the structure tensors are corrupted.
    """
    _check_context(ctx, p.n)
    n, s, nw = ctx.n, ctx.s, p.nw
    Tm = lambda b: theta_minus(ctx, b)  # noqa: E731
    Tp = lambda b: theta_plus(ctx, b)  # noqa: E731
    A0 = np.zeros(s, dtype=complex)
    A = -2.0 * Tm(p.alpha).astype(complex)
    B1 = np.zeros((nw, s, s), dtype=complex)
    B2 = np.zeros((nw, s, s), dtype=complex)
    for k in range(nw):
        lam = p.Lambda[k]
        lam_c = lam.conj()
        Ml, Mc = Tm(lam), Tm(lam_c)
        A0 += (4j / n) * (Mc @ lam)
        R = Ml @ Mc + Mc @ Ml
        Q = Ml @ Tp(lam_c) - Mc @ Tp(lam)
        A += R - 1j * Q
        B1[k] = Tm(1j * (lam_c - lam))
        B2[k] = -Tm(lam + lam_c)
    C1 = p.Lambda + p.Lambda.conj()
    C2 = 1j * (p.Lambda.conj() - p.Lambda)
    return StateSpaceModel(
        n=n, nw=nw,
        A0=_strip_imag("A0", A0), A=_strip_imag("A", A),
        B1=_strip_imag("B1", B1), B2=_strip_imag("B2", B2),
        C1=_strip_imag("C1", C1), C2=_strip_imag("C2", C2),
    )


def check_physical_realizability(ctx: ThetaContext, m: StateSpaceModel,
                                 tol: float = DEFAULT_TOL) -> RealizabilityReport:
    """Decide whether some ``(S=I, L, H)`` generates the model.

    Conditions (each must hold for every channel ``k``):

    ``drift_offset``
        ``A0 = (1/n) sum_k (B1[k] - i B2[k]) (C1[k] + i C2[k])``;
        ``drift_offset_imag`` reports the imaginary part of that right side.
    ``noise1_output2``
        ``B1[k] = Theta^-(C2[k])``.
    ``noise2_output1``
        ``B2[k] = -Theta^-(C1[k])``.
    ``drift_symmetric``
        ``A + A.T + sum_k (B1 B1.T + B2 B2.T) = (n/2) Theta^+(A0)``.

    When all pass, the report carries the extracted :class:`SLHParams`.
    """
    _check_context(ctx, m.n)
    n = ctx.n
    rhs = np.zeros(ctx.s, dtype=complex)
    noise1, noise2 = [], []
    sym = m.A + m.A.T
    for k in range(m.nw):
        rhs += (m.B1[k] - 1j * m.B2[k]) @ (m.C1[k] + 1j * m.C2[k]) / n
        noise1.append(_condition("noise1_output2", m.B1[k] - theta_minus(ctx, m.C2[k]), m.B1[k], tol))
        noise2.append(_condition("noise2_output1", m.B2[k] + theta_minus(ctx, m.C1[k]), m.B2[k], tol))
        sym = sym + m.B1[k] @ m.B1[k].T + m.B2[k] @ m.B2[k].T
    conditions = (
        _condition("drift_offset", m.A0 - rhs.real, m.A0, tol),
        _condition("drift_offset_imag", rhs.imag, m.A0, tol),
        _worst("noise1_output2", noise1, tol),
        _worst("noise2_output1", noise2, tol),
        _condition("drift_symmetric", sym - 0.5 * n * theta_plus(ctx, m.A0), sym, tol),
    )
    report = RealizabilityReport(tol=tol, conditions=conditions)
    if report.passed:
        report = replace(report, slh=extract_slh(ctx, m))
    return report


def extract_slh(ctx: ThetaContext, m: StateSpaceModel, return_residual: bool = False):
    """Recover ``(alpha, Lambda)`` from a physically realizable model.

    ``Lambda = (C1 + i C2) / 2`` and ``alpha = F.T vec(M) / 4n`` with
    ``M = A.T - A + 1/2 sum_k ([B2[k], Theta^+(C2[k])] - [B1[k], Theta^+(C1[k])])``.
    Realizability is not re-checked. With ``return_residual`` the asymmetry
    residue ``|M + M.T| / 2`` is returned too; it is round-off for realizable
    input. ``M`` need not be a ``Theta^-`` image when ``n > 2``: the
    contraction with ``F`` keeps only its ``Theta^-`` component.
    """
    _check_context(ctx, m.n)
    M = m.A.T - m.A
    for k in range(m.nw):
        P2, P1 = theta_plus(ctx, m.C2[k]), theta_plus(ctx, m.C1[k])
        M = M + 0.5 * ((m.B2[k] @ P2 - P2 @ m.B2[k]) - (m.B1[k] @ P1 - P1 @ m.B1[k]))
    alpha = ctx.tensors.F_stacked.T @ vec(M) / (4.0 * ctx.n)
    slh = SLHParams(alpha=alpha, Lambda=0.5 * (m.C1 + 1j * m.C2))
    if return_residual:
        return slh, 0.5 * float(np.linalg.norm(M + M.T))
    return slh


def check_preservation(ctx: ThetaContext, m: StateSpaceModel,
                       tol: float = DEFAULT_TOL) -> PreservationReport:
    """Decide whether the model preserves ``[x, x.T]`` and ``{x, x.T}`` for all time.

    Does not assume realizability. Conditions:

    ``noise_generators``
        every ``B1[k]``, ``B2[k]`` is a ``Theta^-`` image; recovers ``b1[k], b2[k]``.
    ``offset_commutator``
        ``sum_k (B1 B2.T - B2 B1.T) = (n/2) Theta^-(A0)``.
    ``drift_generator``
        ``P = A + 1/2 sum_k (B1 B1.T + B2 B2.T) - 1/2 sum_k (B2 Theta^+(b1) - B1 Theta^+(b2))``
        is a ``Theta^-`` image; recovers ``a``.

    ``A0_implied = (2/n) sum_k Theta^-(b2[k]) b1[k]`` and its distance from
    ``A0`` are reported as diagnostics.
    """
    _check_context(ctx, m.n)
    n, s, nw = ctx.n, ctx.s, m.nw
    b1, b2 = np.zeros((nw, s)), np.zeros((nw, s))
    gen_conds = []
    comm = np.zeros((s, s))
    P = np.array(m.A, dtype=float)
    A0_implied = np.zeros(s)
    for k in range(nw):
        for bvec, B in ((b1, m.B1[k]), (b2, m.B2[k])):
            g, res = reconstruct_theta_minus_generator(ctx, B)
            bvec[k] = g
            norm = res / (1.0 + np.linalg.norm(B))
            gen_conds.append(Condition("noise_generators", res, norm, bool(norm < tol)))
        comm += m.B1[k] @ m.B2[k].T - m.B2[k] @ m.B1[k].T
        P += 0.5 * (m.B1[k] @ m.B1[k].T + m.B2[k] @ m.B2[k].T)
        P -= 0.5 * (m.B2[k] @ theta_plus(ctx, b1[k]) - m.B1[k] @ theta_plus(ctx, b2[k]))
        A0_implied += (2.0 / n) * theta_minus(ctx, b2[k]) @ b1[k]
    a, res_a = reconstruct_theta_minus_generator(ctx, P)
    norm_a = res_a / (1.0 + np.linalg.norm(P))
    conditions = (
        _worst("noise_generators", gen_conds, tol),
        _condition("offset_commutator", comm - 0.5 * n * theta_minus(ctx, m.A0), comm, tol),
        Condition("drift_generator", res_a, norm_a, bool(np.isfinite(norm_a) and norm_a < tol)),
    )
    return PreservationReport(
        tol=tol, conditions=conditions, b1=b1, b2=b2, a=a, A0_implied=A0_implied,
        A0_deviation=float(np.linalg.norm(A0_implied - m.A0)),
    )


MODEL_KINDS = ("realizable", "preservation-only", "generic")


def random_slh(ctx: ThetaContext, nw: int = 1, seed=0, scale: float = 1.0) -> SLHParams:
    """Random Hamiltonian/coupling with O(``scale``) quadrature coefficients."""
    rng = np.random.default_rng(seed)
    s = ctx.s
    alpha = scale * rng.standard_normal(s)
    lam = 0.5 * scale * (rng.standard_normal((nw, s)) + 1j * rng.standard_normal((nw, s)))
    return SLHParams(alpha=alpha, Lambda=lam)


def random_model(ctx: ThetaContext, nw: int = 1, seed=0, kind: str = "realizable",
                 scale: float = 1.0) -> StateSpaceModel:
    """Seeded fixture models.

    ``realizable``
        synthesized from a random ``(alpha, Lambda)``.
    ``preservation-only``
        ``B = Theta^-(b)``, ``A0`` and ``A`` assembled so the relations are
        preserved, while ``C1``, ``C2`` are drawn independently of ``b``.
    ``generic``
        every matrix drawn independently.
    """
    if kind not in MODEL_KINDS:
        raise DomainError(f"kind must be one of {MODEL_KINDS}, got {kind!r}")
    if kind == "realizable":
        return synthesize_state_space(ctx, random_slh(ctx, nw, seed, scale))
    rng = np.random.default_rng(seed)
    n, s = ctx.n, ctx.s
    if kind == "generic":
        g = lambda *shape: scale * rng.standard_normal(shape)  # noqa: E731
        return StateSpaceModel(n, nw, g(s), g(s, s), g(nw, s, s), g(nw, s, s), g(nw, s), g(nw, s))
    a = scale * rng.standard_normal(s)
    b1 = scale * rng.standard_normal((nw, s))
    b2 = scale * rng.standard_normal((nw, s))
    B1 = np.stack([theta_minus(ctx, b) for b in b1]) if nw else np.zeros((0, s, s))
    B2 = np.stack([theta_minus(ctx, b) for b in b2]) if nw else np.zeros((0, s, s))
    A0 = np.zeros(s)
    A = theta_minus(ctx, a)
    for k in range(nw):
        A0 += (2.0 / n) * theta_minus(ctx, b2[k]) @ b1[k]
        A -= 0.5 * (B1[k] @ B1[k].T + B2[k] @ B2[k].T)
        A += 0.5 * (B2[k] @ theta_plus(ctx, b1[k]) - B1[k] @ theta_plus(ctx, b2[k]))
    C1 = scale * rng.standard_normal((nw, s))
    C2 = scale * rng.standard_normal((nw, s))
    return StateSpaceModel(n, nw, A0, A, B1, B2, C1, C2)
