"""Dense Hermitian linear algebra under the normalized trace.

Operators are plain ``numpy`` arrays of shape ``(n, n)``. Superoperators are
stored as matrices in an orthonormal basis of ``L2(M, tau)`` where
``tau = Tr / n``; see :class:`OperatorSpace`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import (
    DimensionMismatch,
    DomainViolation,
    NonHermitianInput,
    SingularKernel,
    SupportViolation,
)

TOL_HERM = 1e-12
CLUSTER_RTOL = 1e-12


def tau(x: np.ndarray) -> complex:
    """Normalized trace ``Tr(x) / n``."""
    return np.trace(x) / x.shape[0]


def dagger(x: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(x, -1, -2))


def hermitian_part(x: np.ndarray) -> np.ndarray:
    return 0.5 * (x + dagger(x))


def is_hermitian(x: np.ndarray, rtol: float = TOL_HERM) -> bool:
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        return False
    scale = max(np.max(np.abs(x), initial=0.0), 1.0)
    return bool(np.max(np.abs(x - dagger(x)), initial=0.0) <= rtol * scale)


def check_hermitian(x: np.ndarray, rtol: float = TOL_HERM) -> np.ndarray:
    """Return ``x`` as a complex array, raising if it is not Hermitian."""
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {x.shape}")
    if not is_hermitian(x, rtol):
        raise NonHermitianInput("operator is not Hermitian within tolerance")
    return x


class EigenDecomposition(NamedTuple):
    """Ascending eigenvalues and a unitary matrix of column eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ dagger(u)


def eig_hermitian(h: np.ndarray) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    Raises
    ------
    NonHermitianInput
        If ``h`` deviates from its adjoint by more than ``1e-12 * max|h|``.
    """
    h = check_hermitian(h)
    w, u = np.linalg.eigh(hermitian_part(h))
    return EigenDecomposition(w, u)


def matrix_function(
    h: np.ndarray,
    f: Callable[[np.ndarray], np.ndarray],
    domain: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> np.ndarray:
    """Apply a scalar function on the spectrum of ``h``.

    Parameters
    ----------
    h : ndarray
        Hermitian matrix.
    f : callable
        Vectorized real function.
    domain : callable, optional
        Predicate on eigenvalues; any ``False`` raises ``DomainViolation``.
        If omitted, non-finite values of ``f`` raise instead.
    """
    w, u = eig_hermitian(h)
    if domain is not None and not np.all(domain(w)):
        raise DomainViolation("spectrum outside the domain of f")
    with np.errstate(all="ignore"):
        fw = np.asarray(f(w), dtype=float)
    if not np.all(np.isfinite(fw)):
        raise DomainViolation("f is not finite on the spectrum")
    return (u * fw) @ dagger(u)


def logm_pd(rho: np.ndarray) -> np.ndarray:
    """Matrix logarithm of a positive definite operator."""
    return matrix_function(rho, np.log, domain=lambda w: w > 0)


def expm_h(h: np.ndarray) -> np.ndarray:
    """Matrix exponential of a Hermitian operator."""
    return matrix_function(h, np.exp)


def cluster_eigenvalues(w: np.ndarray, rtol: float = CLUSTER_RTOL) -> np.ndarray:
    """Replace eigenvalues closer than ``rtol * diameter`` by their cluster mean.

    ``w`` must be sorted ascending.
    """
    w = np.asarray(w, dtype=float).copy()
    if w.size < 2:
        return w
    gap = rtol * (w[-1] - w[0])
    start = 0
    for k in range(1, w.size + 1):
        if k == w.size or w[k] - w[k - 1] > gap:
            w[start:k] = w[start:k].mean()
            start = k
    return w


def log_mean(x, y):
    """Logarithmic mean ``(x - y) / (log x - log y)`` with ``J(x, x) = x``.

    Evaluated as ``(x - y) / log1p((x - y) / y)``, which is accurate near the
    diagonal. Returns 0 when either argument is 0.
    """
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    out = np.zeros(x.shape)
    diag = x == y
    out[diag] = x[diag]
    off = ~diag & (x > 0) & (y > 0)
    d = x[off] - y[off]
    out[off] = d / np.log1p(d / y[off])
    return out


def inverse_log_mean(x, y):
    """Reciprocal of :func:`log_mean`; infinite where either argument is 0."""
    with np.errstate(divide="ignore"):
        return 1.0 / log_mean(x, y)


def divided_difference(f, df):
    """Kernel ``(f(x) - f(y)) / (x - y)`` with diagonal value ``df(x)``."""

    def kernel(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        out = np.empty(x.shape)
        diag = x == y
        with np.errstate(all="ignore"):
            out[diag] = df(x[diag])
            out[~diag] = (f(x[~diag]) - f(y[~diag])) / (x[~diag] - y[~diag])
        return out

    return kernel


def kernel_matrix(w: np.ndarray, F) -> np.ndarray:
    """Evaluate ``F`` on the clustered eigenvalue grid ``w x w``."""
    wc = cluster_eigenvalues(w)
    with np.errstate(all="ignore"):
        k = np.asarray(F(wc[:, None], wc[None, :]), dtype=float)
    k = np.broadcast_to(k, (w.size, w.size))
    if not np.all(np.isfinite(k)):
        raise SingularKernel("kernel is not finite on the spectrum grid")
    return k


def double_operator_integral(rho: np.ndarray, F, x: np.ndarray) -> np.ndarray:
    """Compute ``sum_jk F(p_j, p_k) P_j x P_k`` over the spectral projections of rho.

    Parameters
    ----------
    rho : ndarray
        Hermitian matrix (positive definite for the log-type kernels).
    F : callable
        Vectorized bivariate kernel ``F(x, y)``.
    x : ndarray
        Arbitrary square matrix of the same size.
    """
    w, u = eig_hermitian(rho)
    x = np.asarray(x, dtype=complex)
    if x.shape != rho.shape:
        raise DimensionMismatch("rho and x must have the same shape")
    k = kernel_matrix(w, F)
    return u @ (k * (dagger(u) @ x @ u)) @ dagger(u)


def chi_bracket(rho: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``[rho] x = int_0^1 rho^s x rho^(1-s) ds``."""
    return double_operator_integral(rho, log_mean, x)


def chi_bracket_inv(rho: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Inverse of :func:`chi_bracket`; ``rho`` must be positive definite."""
    return double_operator_integral(rho, inverse_log_mean, x)


class WeightedForm:
    """Precomputed eigenbasis data for ``<xi, eta>_rho = <xi, [rho] eta>``.

    Useful when many inner products against the same ``rho`` are needed.
    """

    def __init__(self, rho: np.ndarray, support_tol: float = 1e-10):
        w, u = eig_hermitian(rho)
        self.n = rho.shape[0]
        self.u = u
        self.kernel = kernel_matrix(np.clip(w, 0.0, None), log_mean)
        top = max(np.max(np.abs(w)), 1e-300)
        self.null = w < 1e-12 * top
        self.support_tol = support_tol

    def _rotate(self, x: np.ndarray) -> np.ndarray:
        xt = dagger(self.u) @ np.asarray(x, dtype=complex) @ self.u
        if np.any(self.null):
            off = np.concatenate([xt[self.null, :].ravel(), xt[:, self.null].ravel()])
            scale = max(np.max(np.abs(xt)), 1.0)
            if np.max(np.abs(off)) > self.support_tol * scale:
                raise SupportViolation("argument has components off the support of rho")
        return xt

    def inner(self, xi: np.ndarray, eta: np.ndarray) -> complex:
        a = self._rotate(xi)
        b = a if eta is xi else self._rotate(eta)
        return np.sum(self.kernel * np.conj(a) * b) / self.n


def weighted_inner(rho: np.ndarray, xi: np.ndarray, eta: np.ndarray) -> complex:
    """Weighted inner product ``(1/n) sum_jk J(p_j, p_k) conj(xi_jk) eta_jk``.

    Entries are taken in the eigenbasis of ``rho`` and ``J`` is
    :func:`log_mean`.
    """
    return WeightedForm(rho).inner(xi, eta)


# ---------------------------------------------------------------------------
# operator spaces and superoperators


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


class OperatorSpace:
    """A subspace of ``M_n`` with a basis orthonormal under ``tau(x* y)``.

    Parameters
    ----------
    basis : ndarray, shape (k, n, n)
        Orthonormal basis elements.
    """

    def __init__(self, basis: np.ndarray, check: bool = True):
        basis = np.asarray(basis, dtype=complex)
        if basis.ndim != 3 or basis.shape[1] != basis.shape[2]:
            raise DimensionMismatch("basis must have shape (k, n, n)")
        self.basis = _freeze(basis)
        self.n = basis.shape[1]
        if check:
            g = self.gram()
            if np.max(np.abs(g - np.eye(self.dim)), initial=0.0) > 1e-9:
                raise ValueError("basis is not orthonormal under tau")

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def gram(self) -> np.ndarray:
        return np.einsum("kij,lij->kl", np.conj(self.basis), self.basis) / self.n

    def coords(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        if x.shape[-2:] != (self.n, self.n):
            raise DimensionMismatch(f"expected {self.n}x{self.n} operators")
        return np.einsum("kij,...ij->...k", np.conj(self.basis), x) / self.n

    def element(self, c: np.ndarray) -> np.ndarray:
        return np.einsum("...k,kij->...ij", np.asarray(c, dtype=complex), self.basis)

    def project(self, x: np.ndarray) -> np.ndarray:
        return self.element(self.coords(x))

    def residual(self, x: np.ndarray) -> float:
        """Max-entry distance from ``x`` to its projection onto the span."""
        return float(np.max(np.abs(x - self.project(x))))

    def contains(self, x: np.ndarray, tol: float = 1e-10) -> bool:
        return self.residual(x) <= tol * max(1.0, float(np.max(np.abs(x))))

    @property
    def is_full(self) -> bool:
        return self.dim == self.n * self.n

    @property
    def is_diagonal(self) -> bool:
        """True if the span is the full diagonal algebra."""
        if self.dim != self.n:
            return False
        off = self.basis * (1 - np.eye(self.n))
        return bool(np.max(np.abs(off)) < 1e-12)

    def hermitian_basis(self) -> np.ndarray:
        """Real-orthonormal Hermitian basis for the self-adjoint part of the span."""
        cands = np.concatenate(
            [hermitian_part(self.basis), hermitian_part(1j * self.basis)]
        )
        vec = cands.reshape(len(cands), -1)
        real = np.concatenate([vec.real, vec.imag], axis=1) / np.sqrt(self.n)
        u, s, vt = np.linalg.svd(real, full_matrices=False)
        rank = int(np.sum(s > 1e-9 * s[0]))
        comb = vt[:rank]
        half = self.n * self.n
        herm = (comb[:, :half] + 1j * comb[:, half:]).reshape(rank, self.n, self.n)
        return herm * np.sqrt(self.n)

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, dim={self.dim})"


def full_space(n: int) -> OperatorSpace:
    """``M_n`` with basis ``sqrt(n) e_ij`` in row-major order.

    In this basis coordinates are ``vec(x) / sqrt(n)`` so the matrix of a
    superoperator coincides with its natural row-major vec representation.
    """
    b = np.sqrt(n) * np.eye(n * n).reshape(n * n, n, n)
    return OperatorSpace(b, check=False)


def diagonal_space(n: int) -> OperatorSpace:
    """The diagonal algebra ``l_inf^n`` with basis ``sqrt(n) e_gg``."""
    b = np.zeros((n, n, n))
    b[np.arange(n), np.arange(n), np.arange(n)] = np.sqrt(n)
    return OperatorSpace(b, check=False)


def _tri(x):
    return None if x is None else bool(x)


@dataclass(frozen=True)
class Superoperator:
    """A linear map on an :class:`OperatorSpace`, stored in its orthonormal basis.

    Flags are tri-state: ``None`` means unchecked.
    """

    space: OperatorSpace
    matrix: np.ndarray
    is_trace_symmetric: Optional[bool] = None
    is_cp: Optional[bool] = None
    is_unital: Optional[bool] = None
    _images: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.space.dim, self.space.dim):
            raise DimensionMismatch(
                f"matrix shape {m.shape} does not match space dimension {self.space.dim}"
            )
        object.__setattr__(self, "matrix", _freeze(m))

    @property
    def n(self) -> int:
        return self.space.n

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.space.element(self.space.coords(x) @ self.matrix.T)

    def compose(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.space, self.matrix @ other.matrix)

    def __sub__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.space, self.matrix - other.matrix)

    def __add__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.space, self.matrix + other.matrix)

    def scaled(self, c: float) -> "Superoperator":
        return Superoperator(self.space, c * self.matrix)

    def adjoint(self) -> "Superoperator":
        return Superoperator(self.space, dagger(self.matrix))

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - dagger(self.matrix)), initial=0.0))

    def with_flags(self, **flags) -> "Superoperator":
        kw = dict(
            is_trace_symmetric=self.is_trace_symmetric,
            is_cp=self.is_cp,
            is_unital=self.is_unital,
        )
        kw.update({k: _tri(v) for k, v in flags.items()})
        return Superoperator(self.space, self.matrix, **kw)

    @classmethod
    def from_function(cls, space: OperatorSpace, f: Callable) -> "Superoperator":
        """Build the matrix of ``f`` restricted to ``space``.

        ``f`` must map the span into itself; the image is projected.
        """
        cols = np.stack([space.coords(f(b)) for b in space.basis], axis=1)
        return cls(space, cols)

    @classmethod
    def identity(cls, space: OperatorSpace) -> "Superoperator":
        return cls(space, np.eye(space.dim), True, True, True)

    @classmethod
    def zero(cls, space: OperatorSpace) -> "Superoperator":
        return cls(space, np.zeros((space.dim, space.dim)), True, True, False)


def choi(t: Superoperator) -> np.ndarray:
    """Choi matrix ``C_T = sum_k conj(b_k) (x) T(b_k)`` of size ``n^2 x n^2``.

    The sum runs over the orthonormal basis of the domain. With this
    normalization ``T(a) = (tau (x) id)(C_T (a^T (x) 1))``; the opposite
    algebra is identified with ``M_n`` through the transpose. For the trace
    conditional expectation on ``M_n`` this gives ``C = 1 (x) 1``.
    """
    sp = t.space
    return np.einsum(
        "kij,lk,lab->iajb", np.conj(sp.basis), t.matrix, sp.basis
    ).reshape(sp.n * sp.n, sp.n * sp.n)


def cb_norm_1_to_inf(t: Superoperator) -> float:
    """Operator norm of the Choi matrix, the ``L1 -> L_inf`` cb-norm."""
    c = choi(t)
    if np.max(np.abs(c - dagger(c)), initial=0.0) <= 1e-12 * max(1.0, np.max(np.abs(c))):
        return float(np.max(np.abs(np.linalg.eigvalsh(hermitian_part(c)))))
    return float(np.linalg.norm(c, 2))


def choi_min_eig(t: Superoperator) -> float:
    """Smallest eigenvalue of the Hermitian part of the Choi matrix."""
    return float(np.linalg.eigvalsh(hermitian_part(choi(t)))[0])


def tensor_space(space: OperatorSpace, m: int) -> OperatorSpace:
    """Basis ``b_k (x) sqrt(m) e_ab`` of ``span (x) M_m``, index ``k*m^2 + a*m + b``."""
    if m < 1:
        raise DimensionMismatch("m must be a positive integer")
    fb = full_space(m).basis
    b = np.einsum("kij,lab->kliajb", space.basis, fb).reshape(
        space.dim * m * m, space.n * m, space.n * m
    )
    return OperatorSpace(b, check=False)


def tensor_superoperator(t: Superoperator, m: int) -> Superoperator:
    """Represent ``T (x) id_{M_m}`` on ``M_{nm}``."""
    sp = tensor_space(t.space, m)
    mat = np.kron(t.matrix, np.eye(m * m))
    return Superoperator(sp, mat, t.is_trace_symmetric, t.is_cp, t.is_unital)


def partial_trace(x: np.ndarray, dims: tuple, which: int) -> np.ndarray:
    """Normalized partial trace of a block operator on ``C^{d0} (x) C^{d1}``.

    ``which`` selects the factor that is traced out (0 or 1). The trace is
    normalized, so a density stays a density.
    """
    d0, d1 = dims
    x = np.asarray(x)
    if x.shape != (d0 * d1, d0 * d1):
        raise DimensionMismatch(f"operator shape {x.shape} does not match dims {dims}")
    r = x.reshape(d0, d1, d0, d1)
    if which == 0:
        return np.einsum("iaib->ab", r) / d0
    if which == 1:
        return np.einsum("iaja->ij", r) / d1
    raise ValueError("which must be 0 or 1")
