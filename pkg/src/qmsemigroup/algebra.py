"""Subalgebras, conditional expectations and cb-index values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MissingIdentity, NotAnAlgebra, NotCompletelyPositive
from .linalg import (
    OperatorSpace,
    Superoperator,
    choi_min_eig,
    dagger,
    diagonal_space,
    full_space,
    tau,
)

CLOSURE_TOL = 1e-8
IDENTITY_TOL = 1e-10
TOL_ZERO = 1e-10


class Subalgebra(OperatorSpace):
    """A unital *-subalgebra of ``M_n`` given by a tau-orthonormal basis.

    The constructor verifies that the identity lies in the span and that the
    span is closed under products and adjoints.

    Raises
    ------
    MissingIdentity
        If the identity is not in the span.
    NotAnAlgebra
        If a pairwise product or an adjoint leaves the span.
    """

    def __init__(self, basis: np.ndarray, check: bool = True):
        super().__init__(basis, check=check)
        self._verify()

    @property
    def ambient_dim(self) -> int:
        return self.n

    @property
    def contains_identity(self) -> bool:
        return True

    def _verify(self) -> None:
        eye = np.eye(self.n)
        if self.residual(eye) > IDENTITY_TOL:
            raise MissingIdentity("identity is not in the span")
        b = self.basis
        adj = dagger(b)
        if np.max(np.abs(adj - self.project(adj)), initial=0.0) > CLOSURE_TOL:
            raise NotAnAlgebra("span is not closed under adjoints")
        prods = np.einsum("kij,ljm->klim", b, b).reshape(-1, self.n, self.n)
        res = np.max(np.abs(prods - self.project(prods)), initial=0.0)
        if res > CLOSURE_TOL * max(1.0, float(np.max(np.abs(prods)))):
            raise NotAnAlgebra(f"products leave the span (residual {res:.3g})")

    @classmethod
    def from_space(cls, space: OperatorSpace) -> "Subalgebra":
        return cls(space.basis, check=False)


def scalars(n: int) -> Subalgebra:
    """``C 1`` inside ``M_n``."""
    return Subalgebra(np.eye(n)[None].astype(complex), check=False)


def diagonal_algebra(n: int) -> Subalgebra:
    return Subalgebra.from_space(diagonal_space(n))


def full_algebra(n: int) -> Subalgebra:
    return Subalgebra.from_space(full_space(n))


def tensor_factor(n: int, m: int) -> Subalgebra:
    """``1_{n/m} (x) M_m`` inside ``M_n``."""
    if n % m:
        raise ValueError(f"m={m} does not divide n={n}")
    k = n // m
    b = np.stack([np.kron(np.eye(k), e) for e in full_space(m).basis])
    return Subalgebra(b, check=False)


def span_subalgebra(n: int, elements) -> Subalgebra:
    """Orthonormalize ``elements`` under tau and verify the result is an algebra."""
    x = np.asarray(elements, dtype=complex).reshape(-1, n * n)
    q, s, _ = np.linalg.svd(x.T / np.sqrt(n), full_matrices=False)
    rank = int(np.sum(s > 1e-9 * s[0]))
    b = (q[:, :rank].T * np.sqrt(n)).reshape(rank, n, n)
    return Subalgebra(b, check=False)


def fixed_point_algebra(a: Superoperator, tol_zero: float = TOL_ZERO) -> Subalgebra:
    """Orthonormal basis of ``ker A`` verified to be a unital *-subalgebra.

    Eigenvalues below ``tol_zero * max|eig|`` are treated as zero.
    """
    w, v = np.linalg.eigh(0.5 * (a.matrix + dagger(a.matrix)))
    top = float(np.max(np.abs(w), initial=0.0))
    ker = v[:, np.abs(w) <= tol_zero * top] if top > 0 else v
    basis = a.space.element(ker.T)
    return Subalgebra(basis, check=False)


@dataclass(frozen=True)
class ConditionalExpectation:
    """The trace-preserving conditional expectation onto ``target``.

    ``superop`` acts on the ambient :class:`OperatorSpace`.
    """

    superop: Superoperator
    target: Subalgebra

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.target.project(x)


def conditional_expectation(
    target: Subalgebra, ambient: OperatorSpace | None = None, tol: float = 1e-10
) -> ConditionalExpectation:
    """Orthogonal projection onto ``target`` as a superoperator on ``ambient``.

    Raises
    ------
    NotCompletelyPositive
        If any re-verification step fails.
    """
    amb = ambient if ambient is not None else full_space(target.n)
    c = amb.coords(target.basis).T  # columns: target basis in ambient coords
    p = c @ dagger(c)
    e = Superoperator(amb, p)
    bad = []
    if np.max(np.abs(p @ p - p)) > tol:
        bad.append("not idempotent")
    if e.hermitian_defect() > tol:
        bad.append("not self-adjoint")
    eye = np.eye(amb.n)
    if np.max(np.abs(e(eye) - eye)) > tol:
        bad.append("not unital")
    tr = np.array([tau(e(b)) - tau(b) for b in amb.basis])
    if np.max(np.abs(tr), initial=0.0) > tol:
        bad.append("not trace preserving")
    if choi_min_eig(e) < -tol:
        bad.append("Choi matrix not PSD")
    if bad:
        raise NotCompletelyPositive("; ".join(bad))
    e = e.with_flags(is_trace_symmetric=True, is_cp=True, is_unital=True)
    return ConditionalExpectation(e, target)


@dataclass(frozen=True)
class CbIndex:
    """Value of the cb-index ``D_cb(M || N)``.

    ``exact`` is False when only the universal upper bound is known.
    """

    value: float
    exact: bool
    pattern: str

    def __float__(self):
        return self.value


def _is_tensor_factor(n: int, target: Subalgebra) -> int:
    for m in range(2, n):
        if n % m == 0 and target.dim == m * m:
            probe = tensor_factor(n, m)
            if all(target.contains(b) for b in probe.basis):
                return m
    return 0


def cb_index(ambient: OperatorSpace | int, target: Subalgebra) -> CbIndex:
    """``D_cb(M || N)`` for recognized inclusions, else a flagged bound.

    Recognition is structural. For ambient ``M_n``: scalars give ``2 log n``,
    the diagonal gives ``log n``, ``1 (x) M_m`` gives ``2 log(n/m)`` and
    ``N = M`` gives 0. Inclusions containing the diagonal are bounded by
    ``log n``; anything else by ``2 log n``. For a commutative diagonal
    ambient algebra, scalars give ``log n`` and other targets are bounded by
    ``log n``.
    """
    if isinstance(ambient, int):
        ambient = full_space(ambient)
    n = ambient.n
    if target.dim == ambient.dim:
        return CbIndex(0.0, True, "equal")
    if ambient.is_diagonal:
        if target.dim == 1:
            return CbIndex(float(np.log(n)), True, "commutative-scalars")
        return CbIndex(float(np.log(n)), False, "commutative-bound")
    if not ambient.is_full:
        return CbIndex(float(2 * np.log(n)), False, "universal-bound")
    if target.dim == 1:
        return CbIndex(float(2 * np.log(n)), True, "scalars")
    diag = diagonal_space(n)
    if target.is_diagonal:
        return CbIndex(float(np.log(n)), True, "diagonal")
    m = _is_tensor_factor(n, target)
    if m:
        return CbIndex(float(2 * np.log(n / m)), True, f"tensor-factor-{m}")
    if all(target.contains(b) for b in diag.basis):
        return CbIndex(float(np.log(n)), False, "contains-diagonal-bound")
    return CbIndex(float(2 * np.log(n)), False, "universal-bound")
