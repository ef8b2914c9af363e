"""Constructors for depolarizing, Schur multiplier, group chain and Pauli models."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import expm

from .algebra import (
    Subalgebra,
    conditional_expectation,
    fixed_point_algebra,
    scalars,
)
from .errors import (
    DimensionMismatch,
    NotCentral,
    NotConditionallyNegative,
    NotPositive,
    NotSymmetric,
    ValidationError,
)
from .linalg import (
    Superoperator,
    dagger,
    diagonal_space,
    full_space,
)
from .semigroup import (
    Derivation,
    SemigroupModel,
    SpectralForm,
    random_operator,
    validate_generator,
    verify_derivation,
)

RATE_TOL = 1e-12


# ---------------------------------------------------------------------------
# Heisenberg-Weyl unitaries


def shift_clock(m: int):
    """Cyclic shift ``X|j> = |j+1>`` and clock ``Z|j> = w^j |j>``."""
    x = np.roll(np.eye(m), 1, axis=0).astype(complex)
    z = np.diag(np.exp(2j * np.pi * np.arange(m) / m))
    return x, z


def weyl_unitaries(m: int) -> np.ndarray:
    """All ``P_jl = X^j Z^l`` indexed ``j*m + l``; shape ``(m*m, m, m)``."""
    x, z = shift_clock(m)
    out = []
    for j in range(m):
        xj = np.linalg.matrix_power(x, j)
        for l in range(m):
            out.append(xj @ np.linalg.matrix_power(z, l))
    return np.array(out)


def hermitian_components(unitaries, weights, tol: float = 1e-12):
    """Split each ``c U`` into Hermitian ``c (U + U*)/2`` and ``c (U - U*)/2i``.

    For a family closed under adjoints with matching weights this preserves
    ``sum_U [U, x]* [U, y]``. Zero components are dropped.
    """
    comps, scales = [], []
    for u, w in zip(unitaries, weights):
        if w <= 0:
            continue
        for h in (0.5 * (u + dagger(u)), (u - dagger(u)) / 2j):
            if np.max(np.abs(h)) > tol:
                comps.append(h)
                scales.append(w)
    return np.array(comps), np.array(scales)


def pauli_derivation(n: int, rate: float = 1.0) -> Derivation:
    """Commutator derivation for ``rate (I - E_tau)`` on ``M_n``.

    Built from the nonidentity Weyl unitaries with scale ``sqrt(rate)/(sqrt(2) n)``.
    """
    p = weyl_unitaries(n)[1:]
    scale = np.sqrt(rate) / (np.sqrt(2) * n)
    comps, scales = hermitian_components(p, np.full(len(p), scale))
    return Derivation.commutators(comps, scales)


# ---------------------------------------------------------------------------
# depolarizing


def _projection_spectral_form(p: np.ndarray, rate: float) -> SpectralForm:
    eye = np.eye(p.shape[0])
    return SpectralForm(np.array([0.0, rate]), np.stack([p, eye - p]), ("N", "N-perp"))


def _build(name, params, a: Superoperator, **kw) -> SemigroupModel:
    gen = validate_generator(a)
    fixed = fixed_point_algebra(gen.superop)
    ce = conditional_expectation(fixed, gen.space)
    return SemigroupModel(name, params, gen, fixed, ce, **kw)


def depolarizing(n: int, target: Optional[Subalgebra] = None, rate: float = 1.0) -> SemigroupModel:
    """``A = rate (I - E_N)`` on ``M_n``; ``N`` defaults to the scalars.

    A commutator derivation is attached when ``N`` is the scalars, the
    diagonal, or a tensor factor ``1 (x) M_m``.
    """
    if rate <= 0:
        raise ValidationError("rate must be positive")
    n = int(n)
    target = scalars(n) if target is None else target
    if target.n != n:
        raise DimensionMismatch("subalgebra does not live in M_n")
    space = full_space(n)
    e = conditional_expectation(target, space)
    a = Superoperator(space, rate * (np.eye(space.dim) - e.superop.matrix))
    der = _depolarizing_derivation(n, target, rate)
    if target.dim == 1:
        hint = (rate * (0.5 + 0.5 / n), "gradient-estimate")
    elif der is not None:
        hint = (rate / 2, "gradient-estimate")
    else:
        hint = None
    model = _build(
        "depolarizing",
        {"dim": n, "rate": rate, "fixed_dim": target.dim},
        a,
        spectral_form=_projection_spectral_form(e.superop.matrix, rate),
        derivation=der,
        curvature_hint=hint,
        depolarizing_rate=rate,
    )
    model.extras["tensor_hint"] = (rate / 2, "gradient-estimate")
    if model.fixed_algebra.dim != target.dim:
        raise ValidationError("kernel of the generator does not match N")
    if der is not None:
        rep = verify_derivation(der, model.generator, samples=4)
        if not rep.passed:
            raise ValidationError(f"derivation check failed ({rep.max_deviation:.3g})")
    return model


def _depolarizing_derivation(n, target, rate):
    if target.dim == 1:
        return pauli_derivation(n, rate)
    if target.is_diagonal:
        _, z = shift_clock(n)
        us = [np.linalg.matrix_power(z, l) for l in range(1, n)]
        comps, scales = hermitian_components(us, np.full(len(us), np.sqrt(rate / (2 * n))))
        return Derivation.commutators(comps, scales)
    for m in range(2, n):
        if n % m == 0 and target.dim == m * m:
            from .algebra import tensor_factor

            probe = tensor_factor(n, m)
            if all(target.contains(b) for b in probe.basis):
                return pauli_derivation(n // m, rate).tensor(m)
    return None


# ---------------------------------------------------------------------------
# Schur multipliers


@dataclass(frozen=True)
class SchurSpec:
    """Symmetric, zero-diagonal, nonnegative, conditionally negative ``b``."""

    b: np.ndarray

    @property
    def m(self) -> int:
        return self.b.shape[0]


def schur_gram_vectors(b: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Vectors ``b(i)`` with ``b_ij = |b(i) - b(j)|^2`` by double centering.

    Raises
    ------
    NotConditionallyNegative
        If ``-J b J / 2`` has an eigenvalue below ``-tol`` (scaled by ``max|b|``).
    """
    b = np.asarray(b, dtype=float)
    m = b.shape[0]
    j = np.eye(m) - np.ones((m, m)) / m
    g = -0.5 * j @ b @ j
    w, v = np.linalg.eigh(0.5 * (g + g.T))
    scale = max(1.0, float(np.max(np.abs(b))))
    if w[0] < -tol * scale:
        raise NotConditionallyNegative(
            f"b is not conditionally negative definite (eigenvalue {-2 * w[0]:.3g} of J b J)"
        )
    w = np.clip(w, 0.0, None)
    keep = w > 1e-14 * scale
    return v[:, keep] * np.sqrt(w[keep])


def _check_schur(b: np.ndarray) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise DimensionMismatch("b must be square")
    if np.max(np.abs(b - b.T)) > RATE_TOL:
        raise NotConditionallyNegative("b is not symmetric")
    if np.max(np.abs(np.diag(b))) > RATE_TOL:
        raise NotConditionallyNegative("b must have zero diagonal")
    if np.min(b) < 0:
        raise NotConditionallyNegative("b has a negative entry")
    return b


def schur_semigroup(spec: SchurSpec | np.ndarray) -> SemigroupModel:
    """Schur multiplier semigroup ``T_t(x)_ij = exp(-b_ij t) x_ij`` on ``M_m``."""
    b = _check_schur(spec.b if isinstance(spec, SchurSpec) else spec)
    m = b.shape[0]
    vecs = schur_gram_vectors(b)
    space = full_space(m)
    a = Superoperator(space, np.diag(b.ravel()).astype(complex))
    vals = np.unique(b)
    proj = np.stack([np.diag((b.ravel() == v).astype(float)) for v in vals])
    sf = SpectralForm(vals, proj, tuple(f"b={v:.12g}" for v in vals))
    if vecs.shape[1]:
        comps = np.stack([np.diag(vecs[:, k]) for k in range(vecs.shape[1])])
    else:
        comps = np.zeros((1, m, m))
    der = Derivation.commutators(comps)
    model = _build(
        "schur",
        {"dim": m, "b": b.tolist()},
        a,
        spectral_form=sf,
        derivation=der,
        curvature_hint=(0.0, "intertwining"),
    )
    model.extension = model.generator.semigroup
    model.extras["gram_vectors"] = vecs
    return model


# ---------------------------------------------------------------------------
# finite groups


def cyclic_group(n: int) -> np.ndarray:
    g = np.arange(n)
    return (g[:, None] + g[None, :]) % n


def symmetric_group(k: int) -> np.ndarray:
    """Multiplication table of ``S_k``; ``(p q)(i) = p(q(i))``, identity first."""
    perms = list(itertools.permutations(range(k)))
    index = {p: i for i, p in enumerate(perms)}
    return np.array([[index[tuple(p[q[i]] for i in range(k))] for q in perms] for p in perms])


def direct_product(t1: np.ndarray, t2: np.ndarray) -> np.ndarray:
    """Table of ``G1 x G2`` with element ``(a, b)`` at index ``a * |G2| + b``."""
    n1, n2 = len(t1), len(t2)
    a = np.arange(n1 * n2)
    g1, g2 = a // n2, a % n2
    return t1[g1[:, None], g1[None, :]] * n2 + t2[g2[:, None], g2[None, :]]


def group_identity(table: np.ndarray) -> int:
    n = len(table)
    for e in range(n):
        if np.array_equal(table[e], np.arange(n)):
            return e
    raise ValidationError("table has no identity element")


def group_inverse(table: np.ndarray) -> np.ndarray:
    e = group_identity(table)
    return np.array([int(np.where(row == e)[0][0]) for row in table])


def conjugacy_classes(table: np.ndarray) -> list:
    inv = group_inverse(table)
    n = len(table)
    seen, classes = set(), []
    for g in range(n):
        if g in seen:
            continue
        cls = sorted({int(table[table[s, g], inv[s]]) for s in range(n)})
        seen.update(cls)
        classes.append(cls)
    return classes


def validate_table(table) -> np.ndarray:
    t = np.asarray(table, dtype=int)
    n = len(t)
    if t.shape != (n, n) or t.min() < 0 or t.max() >= n:
        raise ValidationError("group table must be a square table of element indices")
    for row in t:
        if len(set(row.tolist())) != n:
            raise ValidationError("group table rows must be permutations")
    for col in t.T:
        if len(set(col.tolist())) != n:
            raise ValidationError("group table columns must be permutations")
    group_identity(t)
    a, b, c = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    if not np.array_equal(t[t[a, b], c], t[a, t[b, c]]):
        raise ValidationError("group table is not associative")
    return t


@dataclass(frozen=True)
class GroupChainSpec:
    """Group table and rates, either a function on G or a ``|G| x |G|`` matrix.

    A function ``w`` on ``G`` gives ``w_{g,h} = w(g^-1 h)``.
    """

    table: np.ndarray
    rates: np.ndarray

    def rate_matrix(self) -> np.ndarray:
        t = validate_table(self.table)
        r = np.asarray(self.rates, dtype=float)
        n = len(t)
        if r.shape == (n,):
            inv = group_inverse(t)
            w = r[t[inv[:, None], np.arange(n)[None, :]]]
        elif r.shape == (n, n):
            w = r.copy()
        else:
            raise DimensionMismatch(f"rates must have shape ({n},) or ({n}, {n})")
        np.fill_diagonal(w, 0.0)
        return w


def check_chain_rates(table: np.ndarray, w: np.ndarray) -> None:
    if np.min(w) < 0:
        raise NotPositive("rates must be nonnegative")
    if np.max(np.abs(w - w.T)) > RATE_TOL:
        raise NotSymmetric("rates are not symmetric")
    for s in range(len(table)):
        left = table[s]
        right = table[:, s]
        if (
            np.max(np.abs(w[np.ix_(left, left)] - w)) > RATE_TOL
            or np.max(np.abs(w[np.ix_(right, right)] - w)) > RATE_TOL
        ):
            raise NotCentral("rates are not bi-invariant")


def right_shifts(table: np.ndarray) -> np.ndarray:
    """Unitaries ``U_r e_g = e_{g r}``."""
    n = len(table)
    u = np.zeros((n, n, n))
    for r in range(n):
        u[r, table[:, r], np.arange(n)] = 1.0
    return u


def _conjugation_matrix(u: np.ndarray) -> np.ndarray:
    # natural matrix of x -> U* x U
    return np.kron(dagger(u), u.T)


def group_chain(spec: GroupChainSpec) -> SemigroupModel:
    """Classical central random walk on ``G`` as diagonal matrices in ``M_|G|``.

    Attaches the derivation ``i[B, .] / sqrt(2)`` with
    ``B = sum sqrt(w_gh) e_gh`` and the matrix extension
    ``T^_t(x) = sum_r k_t(r) U_r* x U_r``.
    """
    table = validate_table(spec.table)
    w = spec.rate_matrix()
    check_chain_rates(table, w)
    n = len(table)
    lap = np.diag(w.sum(axis=1)) - w
    space = diagonal_space(n)
    a = Superoperator(space, lap.astype(complex))
    b = np.sqrt(w)
    der = Derivation.commutators(b[None].astype(complex), 1 / np.sqrt(2))
    e = group_identity(table)
    shifts = right_shifts(table)
    conj = np.stack([_conjugation_matrix(u) for u in shifts])
    full = full_space(n)

    def kernel(t):
        return expm(-t * lap)[e]

    def extension(t):
        return Superoperator(full, np.einsum("r,rkl->kl", kernel(t), conj))

    model = _build(
        "group_chain",
        {"order": n, "rates": w.tolist()},
        a,
        derivation=der,
        extension=extension,
        curvature_hint=(0.0, "intertwining"),
    )
    model.extras.update(table=table, rate_matrix=w, kernel=kernel, laplacian=lap)
    return model


def convolve(table: np.ndarray, f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``(f * g)(x) = sum_h f(x h^-1) g(h)``."""
    inv = group_inverse(table)
    n = len(table)
    out = np.zeros(n)
    for x in range(n):
        out[x] = sum(f[table[x, inv[h]]] * g[h] for h in range(n))
    return out


# ---------------------------------------------------------------------------
# Pauli random unitary channels


@dataclass(frozen=True)
class PauliSpec:
    """Rates ``r[j, l]`` for ``X^j Z^l`` on ``C^m``; ``r[0, 0]`` is ignored."""

    m: int
    rates: np.ndarray


def pauli_random_unitary(spec: PauliSpec) -> SemigroupModel:
    """``A(x) = sum_{(j,l) != 0} r_jl (x - P_jl x P_jl*)`` on ``M_m``.

    The transference chain is the random walk on ``Z_m^2`` with rates
    ``w(g) = r_g``.
    """
    m = int(spec.m)
    if m < 2:
        raise ValidationError("m must be at least 2")
    r = np.asarray(spec.rates, dtype=float)
    if r.shape != (m, m):
        raise DimensionMismatch(f"rates must have shape ({m}, {m})")
    if np.min(r) < 0:
        raise NotPositive("rates must be nonnegative")
    r = r.copy()
    r[0, 0] = 0.0
    ps = weyl_unitaries(m)
    flat = r.ravel()
    space = full_space(m)
    eye = np.eye(m * m)
    mat = sum(flat[g] * (eye - np.kron(ps[g], np.conj(ps[g]))) for g in range(1, m * m))
    a = Superoperator(space, np.asarray(mat, dtype=complex))
    comps, scales = hermitian_components(ps[1:], np.sqrt(flat[1:] / 2))
    der = Derivation.commutators(comps, scales) if len(comps) else None
    model = _build(
        "pauli",
        {"dim": m, "rates": r.tolist()},
        a,
        derivation=der,
        curvature_hint=(0.0, "intertwining"),
    )
    table = direct_product(cyclic_group(m), cyclic_group(m))
    model.transference = group_chain(GroupChainSpec(table, flat))
    model.extras["unitaries"] = ps
    return model


def transference_defect(model: SemigroupModel, t_grid=(0.1, 0.5, 1.0, 2.0), samples=4, seed=0):
    """Max deviation of ``alpha(T_t x) - (S_t (x) id)(alpha(x))``.

    ``alpha(x) = sum_g e_g (x) P_g x P_g*`` embeds ``M_m`` into
    ``l_inf(Z_m^2) (x) M_m`` and ``S_t`` is the transference chain.
    """
    ps = model.extras["unitaries"]
    chain = model.transference
    rng = np.random.default_rng(seed)
    dev = 0.0
    for _ in range(samples):
        x = random_operator(model.space, rng)
        alpha_x = np.stack([p @ x @ dagger(p) for p in ps])
        for t in t_grid:
            tx = model.space.element(model.generator.semigroup_matrix(t) @ model.space.coords(x))
            lhs = np.stack([p @ tx @ dagger(p) for p in ps])
            st = expm(-t * chain.extras["laplacian"])
            rhs = np.einsum("gh,hij->gij", st, alpha_x)
            dev = max(dev, float(np.max(np.abs(lhs - rhs))))
    return dev


# ---------------------------------------------------------------------------
# custom generators and model catalogue


def custom_superoperator(n: int, matrix) -> SemigroupModel:
    """Validate a raw ``n^2 x n^2`` generator in the row-major vec basis."""
    mat = np.asarray(matrix, dtype=complex)
    if mat.shape != (n * n, n * n):
        raise DimensionMismatch(f"generator must be {n * n}x{n * n}")
    return _build("custom", {"dim": n}, Superoperator(full_space(n), mat))


def line_schur_matrix(m: int, scale: float = 1.0) -> np.ndarray:
    """``b_ij = scale (i - j)^2``, conditionally negative as a squared distance."""
    i = np.arange(m)
    return scale * (i[:, None] - i[None, :]).astype(float) ** 2


def s3_class_rates(transposition: float = 1.0, three_cycle: float = 0.5) -> np.ndarray:
    """Central rate function on ``S_3``."""
    perms = list(itertools.permutations(range(3)))
    out = np.zeros(6)
    for k, p in enumerate(perms):
        fixed = sum(p[i] == i for i in range(3))
        if fixed == 1:
            out[k] = transposition
        elif fixed == 0:
            out[k] = three_cycle
    return out


def shipped_models() -> dict:
    """The reference catalogue of models used by the acceptance checks."""
    out = {}
    for d in (2, 3, 4):
        out[f"depolarizing-{d}"] = lambda d=d: depolarizing(d)
    for m in (2, 3, 4):
        out[f"schur-{m}"] = lambda m=m: schur_semigroup(line_schur_matrix(m, 1.0 / (m - 1)))
    out["chain-Z2"] = lambda: group_chain(GroupChainSpec(cyclic_group(2), np.array([0.0, 1.0])))
    out["chain-Z3"] = lambda: group_chain(
        GroupChainSpec(cyclic_group(3), np.array([0.0, 1.0, 1.0]))
    )
    out["chain-S3"] = lambda: group_chain(GroupChainSpec(symmetric_group(3), s3_class_rates()))
    out["pauli-2"] = lambda: pauli_random_unitary(
        PauliSpec(2, np.array([[0.0, 1.0], [0.5, 0.25]]))
    )
    r3 = np.array([[0.0, 1.0, 1.0], [0.5, 0.2, 0.3], [0.5, 0.3, 0.2]])
    out["pauli-3"] = lambda: pauli_random_unitary(PauliSpec(3, r3))
    return out
