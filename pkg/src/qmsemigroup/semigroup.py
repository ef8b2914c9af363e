"""Generators, evolution, gradient forms and derivations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .algebra import (
    TOL_ZERO,
    ConditionalExpectation,
    Subalgebra,
    conditional_expectation,
    fixed_point_algebra,
)
from .errors import (
    GeneratorError,
    NegativeTime,
    NoGap,
    NotMarkov,
    NotPositive,
    NotSymmetric,
    NotUnital,
)
from .linalg import (
    OperatorSpace,
    Superoperator,
    WeightedForm,
    choi_min_eig,
    dagger,
    hermitian_part,
    tau,
)

MARKOV_TIMES = (0.01, 0.1, 1.0)
_FAILURE_TYPES = {
    "symmetric": NotSymmetric,
    "positive": NotPositive,
    "unital": NotUnital,
    "markov": NotMarkov,
}


@dataclass(frozen=True)
class Generator:
    """A validated generator ``A`` with its Hermitian eigendecomposition."""

    superop: Superoperator
    validated: bool
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def space(self) -> OperatorSpace:
        return self.superop.space

    def __call__(self, x):
        return self.superop(x)

    def semigroup_matrix(self, t: float) -> np.ndarray:
        """Matrix of ``T_t = exp(-t A)`` in the space's basis."""
        v = self.eigenvectors
        return (v * np.exp(-t * self.eigenvalues)) @ dagger(v)

    def semigroup(self, t: float) -> Superoperator:
        if t < 0:
            raise NegativeTime(f"t = {t} < 0")
        return Superoperator(self.space, self.semigroup_matrix(t), True, True, True)


def _expm_general(mat: np.ndarray, t: float) -> np.ndarray:
    from scipy.linalg import expm

    return expm(-t * mat)


def validate_generator(a: Superoperator, tol: float = 1e-10) -> Generator:
    """Check symmetry, positivity, ``A(1) = 0`` and complete positivity of ``T_t``.

    Every check is run; if any fail, the raised error carries the full list
    in ``failures`` as ``(check, message)`` pairs and its type matches the
    first failure.
    """
    mat = a.matrix
    scale = max(1.0, float(np.max(np.abs(mat), initial=0.0)))
    failures = []
    herm = a.hermitian_defect() <= tol * scale
    if not herm:
        failures.append(("symmetric", f"matrix not Hermitian (defect {a.hermitian_defect():.3g})"))
    w, v = np.linalg.eigh(hermitian_part(mat))
    if w.size and w[0] < -tol * scale:
        failures.append(("positive", f"negative eigenvalue {w[0]:.3g}"))
    eye = np.eye(a.n)
    unit = float(np.max(np.abs(a(eye))))
    if unit > tol * scale:
        failures.append(("unital", f"A(1) != 0 (max entry {unit:.3g})"))
    for t in MARKOV_TIMES:
        tm = (v * np.exp(-t * w)) @ dagger(v) if herm else _expm_general(mat, t)
        lo = choi_min_eig(Superoperator(a.space, tm))
        if lo < -tol * scale:
            failures.append(("markov", f"T_{t} not completely positive (Choi eig {lo:.3g})"))
            break
    if failures:
        kind = _FAILURE_TYPES[failures[0][0]]
        msg = "; ".join(m for _, m in failures)
        raise kind(msg, failures)
    sup = a.with_flags(is_trace_symmetric=True)
    return Generator(sup, True, w, v)


def spectral_gap(gen: Generator, tol_zero: float = TOL_ZERO) -> float:
    """Smallest eigenvalue of ``A`` above the zero cluster.

    Raises
    ------
    NoGap
        If every eigenvalue lies in the zero cluster.
    """
    w = gen.eigenvalues
    top = float(np.max(np.abs(w), initial=0.0))
    nz = w[w > tol_zero * top] if top > 0 else w[:0]
    if nz.size == 0:
        raise NoGap("generator has no nonzero eigenvalue")
    return float(nz.min())


def gradient_form(gen: Generator, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``Gamma(x, y) = (A(x*) y + x* A(y) - A(x* y)) / 2``."""
    xs = dagger(np.asarray(x, dtype=complex))
    y = np.asarray(y, dtype=complex)
    return 0.5 * (gen(xs) @ y + xs @ gen(y) - gen(xs @ y))


@dataclass(frozen=True)
class SpectralForm:
    """Closed-form spectral data ``A = sum_j values[j] * projectors[j]``.

    Projectors are matrices in the model space's basis.
    """

    values: np.ndarray
    projectors: np.ndarray
    labels: tuple

    def semigroup_matrix(self, t: float) -> np.ndarray:
        return np.einsum("j,jkl->kl", np.exp(-t * self.values), self.projectors)

    def generator_matrix(self) -> np.ndarray:
        return np.einsum("j,jkl->kl", self.values, self.projectors)

    def deviation(self, gen: Generator) -> float:
        """Max entry deviation from the generator, plus the resolution of identity."""
        d1 = np.max(np.abs(self.generator_matrix() - gen.superop.matrix))
        d2 = np.max(np.abs(self.projectors.sum(axis=0) - np.eye(gen.space.dim)))
        return float(max(d1, d2))


@dataclass(frozen=True)
class Derivation:
    """Commutator derivation ``delta_k(x) = c_k i [V_k, x]``.

    Parameters
    ----------
    components : ndarray, shape (K, n, n)
        Hermitian matrices ``V_k``.
    scales : ndarray, shape (K,)
        Real scalars ``c_k``.
    gram : ndarray, shape (K, K)
        Real symmetric PSD Gram matrix of the coefficient vectors.
    """

    components: np.ndarray
    scales: np.ndarray
    gram: np.ndarray

    @classmethod
    def commutators(cls, components, scale=1.0, gram=None):
        v = np.asarray(components, dtype=complex)
        k = v.shape[0]
        s = np.broadcast_to(np.asarray(scale, dtype=float), (k,)).copy()
        g = np.eye(k) if gram is None else np.asarray(gram, dtype=float)
        return cls(v, s, g)

    @property
    def n(self) -> int:
        return self.components.shape[1]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        v = self.components
        return 1j * self.scales[:, None, None] * (v @ x - x @ v)

    def rescaled(self, c: float) -> "Derivation":
        return Derivation(self.components, c * self.scales, self.gram)

    def tensor(self, m: int) -> "Derivation":
        """``delta (x) id_{M_m}``."""
        eye = np.eye(m)
        v = np.stack([np.kron(c, eye) for c in self.components])
        return Derivation(v, self.scales, self.gram)

    def pair(self, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
        """``sum_kl g_kl dx_k* dy_l`` for component stacks ``dx``, ``dy``."""
        return np.einsum("kl,kji,ljm->im", self.gram, np.conj(dx), dy)

    def weighted_norm_sq(self, form: WeightedForm, dx: np.ndarray) -> float:
        """``sum_kl g_kl <dx_k, dx_l>_rho`` using a precomputed weighted form."""
        rot = np.stack([form._rotate(d) for d in dx])
        inner = np.einsum("ij,kij,lij->kl", form.kernel, np.conj(rot), rot) / form.n
        return float(np.real(np.sum(self.gram * inner)))


@dataclass
class VerificationReport:
    """Outcome of a sampled verification. ``passed`` iff deviation < threshold."""

    name: str
    passed: bool
    max_deviation: float
    threshold: float
    scale: float = 0.0
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "max_deviation": self.max_deviation,
            "threshold": self.threshold,
        }


@dataclass
class SemigroupModel:
    """A validated symmetric quantum Markov semigroup plus model metadata.

    ``extension`` maps ``t`` to the superoperator ``T^_t`` acting on the
    derivation's target, if an intertwining is known. ``curvature_hint`` is an
    unverified ``(lambda, kind)`` claim that the constants module certifies.
    """

    name: str
    params: dict
    generator: Generator
    fixed_algebra: Subalgebra
    cond_exp: ConditionalExpectation
    spectral_form: Optional[SpectralForm] = None
    derivation: Optional[Derivation] = None
    extension: Optional[Callable[[float], Superoperator]] = None
    curvature_hint: Optional[tuple] = None
    depolarizing_rate: Optional[float] = None
    transference: Optional["SemigroupModel"] = None
    extras: dict = field(default_factory=dict)

    @property
    def space(self) -> OperatorSpace:
        return self.generator.space

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def is_ergodic(self) -> bool:
        return self.fixed_algebra.dim == 1

    def semigroup(self, t: float) -> Superoperator:
        if t < 0:
            raise NegativeTime(f"t = {t} < 0")
        if self.spectral_form is not None:
            return Superoperator(self.space, self.spectral_form.semigroup_matrix(t))
        return self.generator.semigroup(t)

    def evolve(self, rho: np.ndarray, t: float) -> np.ndarray:
        return evolve(self, rho, t)

    def E(self, x: np.ndarray) -> np.ndarray:
        return self.cond_exp(x)

    def tensor(self, m: int) -> "SemigroupModel":
        """The amplified model ``T_t (x) id_{M_m}``."""
        from .linalg import tensor_superoperator

        a = tensor_superoperator(self.generator.superop, m)
        gen = validate_generator(a)
        fixed = fixed_point_algebra(gen.superop)
        ce = conditional_expectation(fixed, gen.space)
        sf = None
        if self.spectral_form is not None:
            eye = np.eye(m * m)
            proj = np.stack([np.kron(p, eye) for p in self.spectral_form.projectors])
            sf = SpectralForm(self.spectral_form.values, proj, self.spectral_form.labels)
        der = self.derivation.tensor(m) if self.derivation is not None else None
        ext = None
        if self.extension is not None:
            from .linalg import tensor_superoperator as ts

            base = self.extension
            ext = lambda t: ts(base(t), m)  # noqa: E731
        hint = self.extras.get("tensor_hint", self.curvature_hint)
        return SemigroupModel(
            name=f"{self.name}(x)id_{m}",
            params={**self.params, "tensor_with": m},
            generator=gen,
            fixed_algebra=fixed,
            cond_exp=ce,
            spectral_form=sf,
            derivation=der,
            extension=ext,
            curvature_hint=hint,
            depolarizing_rate=self.depolarizing_rate,
        )


def evolve(model: SemigroupModel, rho: np.ndarray, t: float) -> np.ndarray:
    """``T_t(rho)``, Hermitian-projected.

    Uses the model's closed-form spectral data when present, otherwise the
    eigendecomposition of the generator.

    Raises
    ------
    NegativeTime
        If ``t < 0``.
    """
    if t < 0:
        raise NegativeTime(f"t = {t} < 0")
    sp = model.space
    c = sp.coords(rho)
    if model.spectral_form is not None:
        mat = model.spectral_form.semigroup_matrix(t)
    else:
        mat = model.generator.semigroup_matrix(t)
    out = sp.element(mat @ c)
    return hermitian_part(out)


# ---------------------------------------------------------------------------
# sampling helpers


def random_hermitian(space: OperatorSpace, rng: np.random.Generator, scale: float = 1.0):
    hb = space.hermitian_basis()
    return np.einsum("k,kij->ij", scale * rng.standard_normal(len(hb)), hb)


def random_density(space: OperatorSpace, rng: np.random.Generator, scale: float = 1.0):
    """Strictly positive density ``e^h / tau(e^h)`` with Gaussian ``h`` in ``space``."""
    from .linalg import expm_h

    h = random_hermitian(space, rng, scale)
    h = h - np.eye(space.n) * np.max(np.linalg.eigvalsh(h))
    r = expm_h(h)
    return hermitian_part(r / np.real(tau(r)))


def random_operator(space: OperatorSpace, rng: np.random.Generator) -> np.ndarray:
    c = rng.standard_normal(space.dim) + 1j * rng.standard_normal(space.dim)
    return space.element(c / np.sqrt(2 * space.dim))


def verify_derivation(
    delta: Derivation, gen: Generator, samples: int = 20, seed: int = 0, tol: float = 1e-8
) -> VerificationReport:
    """Compare ``E_M(sum g_kl delta_k(x)* delta_l(y))`` with ``Gamma(x, y)``.

    ``E_M`` is the projection onto the generator's space. Passes iff the
    maximum absolute deviation over random pairs is below ``tol``.
    """
    rng = np.random.default_rng(seed)
    sp = gen.space
    dev = 0.0
    gscale = 0.0
    for _ in range(samples):
        x = random_operator(sp, rng)
        y = random_operator(sp, rng)
        g = gradient_form(gen, x, y)
        d = sp.project(delta.pair(delta(x), delta(y)))
        dev = max(dev, float(np.max(np.abs(d - g))))
        gscale = max(gscale, float(np.max(np.abs(g))))
    return VerificationReport("derivation", dev < tol, dev, tol, gscale)


def verify_intertwining(
    delta: Derivation,
    model: SemigroupModel,
    extension: Callable[[float], Superoperator],
    lam: float,
    t_grid: Sequence[float] = (0.1, 0.5, 1.0, 2.0),
    samples: int = 10,
    seed: int = 0,
    tol: float = 1e-8,
) -> VerificationReport:
    """Max deviation of ``delta(T_t x) - e^{-lam t} T^_t(delta(x))``."""
    rng = np.random.default_rng(seed)
    sp = model.space
    dev = 0.0
    for _ in range(samples):
        x = random_operator(sp, rng)
        dx = delta(x)
        for t in t_grid:
            lhs = delta(sp.element(model.generator.semigroup_matrix(t) @ sp.coords(x)))
            ext = extension(t)
            rhs = np.exp(-lam * t) * np.stack([ext(d) for d in dx])
            dev = max(dev, float(np.max(np.abs(lhs - rhs))))
    return VerificationReport("intertwining", dev < tol, dev, tol, details={"lambda": lam})


__all__ = [
    "Derivation",
    "Generator",
    "GeneratorError",
    "SemigroupModel",
    "SpectralForm",
    "VerificationReport",
    "evolve",
    "gradient_form",
    "random_density",
    "random_hermitian",
    "random_operator",
    "spectral_gap",
    "validate_generator",
    "verify_derivation",
    "verify_intertwining",
]
