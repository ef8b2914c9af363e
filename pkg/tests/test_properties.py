"""Property-based checks of the structural invariants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial.legendre import leggauss

from qmsemigroup import constants as C
from qmsemigroup.algebra import (
    conditional_expectation,
    diagonal_algebra,
    scalars,
    tensor_factor,
)
from qmsemigroup.entropy import (
    entropy,
    fisher_information,
    relative_entropy,
    relative_entropy_to_algebra,
)
from qmsemigroup.linalg import (
    Superoperator,
    cb_norm_1_to_inf,
    chi_bracket,
    chi_bracket_inv,
    choi,
    choi_min_eig,
    full_space,
    tau,
    weighted_inner,
)
from qmsemigroup.models import (
    GroupChainSpec,
    convolve,
    cyclic_group,
    depolarizing,
    group_chain,
    schur_gram_vectors,
    s3_class_rates,
    schur_semigroup,
    shipped_models,
    symmetric_group,
)
from qmsemigroup.semigroup import evolve, gradient_form, random_density, random_operator

SETTINGS = settings(max_examples=25, deadline=None)
seeds = st.integers(0, 2 ** 32 - 1)

_MODELS = {}


def model(name):
    if name not in _MODELS:
        _MODELS[name] = shipped_models()[name]()
    return _MODELS[name]


def state(rng, n, scale=1.0):
    return random_density(full_space(n), rng, scale)


def kraus_channel(rng, n, k):
    """Random CPTP map from a Kraus family, in normalized-trace units."""
    g = rng.standard_normal((k * n, n)) + 1j * rng.standard_normal((k * n, n))
    q, _ = np.linalg.qr(g)
    ks = q.reshape(k, n, n)
    return lambda x: sum(a @ x @ a.conj().T for a in ks)


# ---------------------------------------------------------------------------
# linalg


@SETTINGS
@given(seeds, st.integers(2, 4))
def test_choi_norm_is_max_abs_eigenvalue(seed, n):
    # real combinations of x -> K x K* + K* x K are trace-symmetric and *-preserving
    rng = np.random.default_rng(seed)
    ks = [random_operator(full_space(n), rng) for _ in range(3)]
    cs = rng.standard_normal(3)

    def f(x):
        return sum(c * (k @ x @ k.conj().T + k.conj().T @ x @ k) for c, k in zip(cs, ks))

    t = Superoperator.from_function(full_space(n), f)
    assert t.hermitian_defect() < 1e-12
    c = choi(t)
    assert np.max(np.abs(c - c.conj().T)) < 1e-12 * np.max(np.abs(c))
    top = np.linalg.svd(c, compute_uv=False)[0]
    assert math.isclose(cb_norm_1_to_inf(t), top, rel_tol=1e-12)
    assert math.isclose(top, np.max(np.abs(np.linalg.eigvalsh(c))), rel_tol=1e-12)


def _power(rho, s):
    w, u = np.linalg.eigh(rho)
    return (u * w ** s) @ u.conj().T


def test_weighted_inner_against_quadrature():
    rng = np.random.default_rng(7)
    x, w = leggauss(64)
    s, w = 0.5 * (x + 1), 0.5 * w
    for k in range(100):
        n = 2 + k % 5
        rho = state(rng, n, 0.7)
        xi = random_operator(full_space(n), rng)
        q = sum(wk * np.trace(xi.conj().T @ _power(rho, 1 - sk) @ xi @ _power(rho, sk)) / n
                for sk, wk in zip(s, w))
        got = weighted_inner(rho, xi, xi)
        assert abs(got - q) <= 1e-8 * abs(q)


@SETTINGS
@given(seeds, st.integers(2, 6))
def test_chi_bracket_inverse(seed, n):
    rng = np.random.default_rng(seed)
    rho = state(rng, n)
    x = random_operator(full_space(n), rng)
    assert np.max(np.abs(chi_bracket_inv(rho, chi_bracket(rho, x)) - x)) < 1e-9 * max(1, np.max(np.abs(x)))


# ---------------------------------------------------------------------------
# algebra

TARGETS = {
    "scalars3": lambda: scalars(3),
    "diag4": lambda: diagonal_algebra(4),
    "tf4": lambda: tensor_factor(4, 2),
    "tf6": lambda: tensor_factor(6, 3),
}


@pytest.mark.parametrize("name", sorted(TARGETS))
def test_conditional_expectation_invariants(name):
    e = conditional_expectation(TARGETS[name]())
    p = e.superop.matrix
    assert np.max(np.abs(p @ p - p)) < 1e-10
    assert np.max(np.abs(p - p.conj().T)) < 1e-10
    assert choi_min_eig(e.superop) > -1e-10
    n = e.target.n
    assert np.allclose(e(np.eye(n)), np.eye(n), atol=1e-10)
    for b in full_space(n).basis:
        assert abs(tau(e(b)) - tau(b)) < 1e-10


@pytest.mark.parametrize("name", sorted(shipped_models()))
def test_fixed_points_are_fixed(name):
    m = model(name)
    for t in (0.1, 1.0, 10.0):
        tt = m.semigroup(t)
        for b in m.fixed_algebra.basis:
            assert np.linalg.norm(tt(b) - b) < 1e-9


@SETTINGS
@given(seeds, st.sampled_from(sorted(TARGETS)))
def test_expectation_data_processing(seed, name):
    rng = np.random.default_rng(seed)
    e = conditional_expectation(TARGETS[name]())
    n = e.target.n
    rho, sig = state(rng, n), state(rng, n)
    assert relative_entropy(e(rho), e(sig)) <= relative_entropy(rho, sig) + 1e-10


# ---------------------------------------------------------------------------
# semigroup


@SETTINGS
@given(seeds, st.sampled_from(sorted(shipped_models())))
def test_gradient_form_completely_positive(seed, name):
    rng = np.random.default_rng(seed)
    m = model(name)
    xs = [random_operator(m.space, rng) for _ in range(3)]
    z = random_operator(full_space(m.n), rng)
    zz = z.conj().T @ z
    g = np.array([[tau(gradient_form(m.generator, a, b) @ zz) for b in xs] for a in xs])
    assert np.linalg.eigvalsh((g + g.conj().T) / 2)[0] > -1e-9


@SETTINGS
@given(seeds, st.sampled_from(sorted(shipped_models())))
def test_kadison_schwarz_derivative(seed, name):
    # (T_t(x* x) - T_t(x*) T_t(x)) / t -> 2 Gamma(x, x) as t -> 0
    rng = np.random.default_rng(seed)
    m = model(name)
    x = random_operator(m.space, rng)
    t = 1e-5
    tt = m.semigroup(t)
    xs = x.conj().T
    fd = (tt(m.space.project(xs @ x)) - tt(xs) @ tt(x)) / t
    g = 2 * m.space.project(gradient_form(m.generator, x, x))
    assert np.max(np.abs(fd - g)) <= 1e-4 * max(1.0, np.max(np.abs(g)))


@SETTINGS
@given(seeds, st.sampled_from(["schur-3", "schur-4", "chain-S3", "depolarizing-3"]),
       st.floats(0.01, 5.0))
def test_bimodule(seed, name, t):
    rng = np.random.default_rng(seed)
    m = model(name)
    fa = m.fixed_algebra
    a = fa.element(rng.standard_normal(fa.dim) + 1j * rng.standard_normal(fa.dim))
    b = fa.element(rng.standard_normal(fa.dim) + 1j * rng.standard_normal(fa.dim))
    x = random_operator(m.space, rng)
    tt = m.semigroup(t)
    assert np.max(np.abs(tt(m.space.project(a @ x @ b)) - a @ tt(x) @ b)) < 1e-9


def test_bimodule_tensor_factor():
    rng = np.random.default_rng(3)
    m = depolarizing(4, tensor_factor(4, 2))
    fa = m.fixed_algebra
    a = fa.element(rng.standard_normal(fa.dim))
    b = fa.element(rng.standard_normal(fa.dim))
    x = random_operator(m.space, rng)
    tt = m.semigroup(0.6)
    assert np.max(np.abs(tt(a @ x @ b) - a @ tt(x) @ b)) < 1e-9


def test_evolution_preserves_positivity():
    rng = np.random.default_rng(11)
    names = sorted(shipped_models())
    worst = np.inf
    for k in range(1000):
        m = model(names[k % len(names)])
        rho = random_density(m.space, rng, 2.0)
        t = float(rng.exponential(1.0))
        worst = min(worst, np.linalg.eigvalsh(evolve(m, rho, t))[0])
    assert worst >= -1e-10


# ---------------------------------------------------------------------------
# models


@pytest.mark.parametrize("name", sorted(shipped_models()))
def test_spectral_form_agrees(name):
    m = model(name)
    if m.spectral_form is None:
        pytest.skip("no closed-form spectral data")
    assert m.spectral_form.deviation(m.generator) < 1e-10


@SETTINGS
@given(seeds, st.integers(2, 6), st.integers(1, 4))
def test_schur_round_trip(seed, m, dim):
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((m, dim))
    b = ((pts[:, None] - pts[None]) ** 2).sum(-1)
    v = schur_gram_vectors(b)
    back = ((v[:, None] - v[None]) ** 2).sum(-1)
    assert np.max(np.abs(back - b)) < 1e-8 * max(1.0, np.max(b))
    schur_semigroup(b)


@SETTINGS
@given(st.floats(0.01, 3.0), st.floats(0.01, 3.0),
       st.sampled_from(["Z4", "Z5", "S3"]), st.floats(0.1, 2.0))
def test_chain_kernel_convolution_law(t, s, group, r2):
    if group == "S3":
        table = symmetric_group(3)
        w = s3_class_rates(1.0, r2)
    else:
        k = int(group[1])
        table = cyclic_group(k)
        w = np.zeros(k)
        w[1] = w[-1] = 1.0
        w[2] = w[-2] = r2
    ch = group_chain(GroupChainSpec(table, w))
    kern = ch.extras["kernel"]
    assert np.max(np.abs(kern(t + s) - convolve(table, kern(t), kern(s)))) < 1e-9


# ---------------------------------------------------------------------------
# entropy


@SETTINGS
@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_data_processing(seed, n, k):
    rng = np.random.default_rng(seed)
    phi = kraus_channel(rng, n, k)
    rho, sig = state(rng, n, 0.75), state(rng, n, 0.75)
    assert relative_entropy(phi(rho), phi(sig)) <= relative_entropy(rho, sig) + 1e-10


@SETTINGS
@given(seeds, st.integers(2, 5))
def test_nonnegative_and_faithful(seed, n):
    rng = np.random.default_rng(seed)
    rho, sig = state(rng, n), state(rng, n)
    d = relative_entropy(rho, sig)
    assert d >= 0
    tn = np.sum(np.abs(np.linalg.eigvalsh(rho - sig))) / n
    if tn >= 1e-8:
        assert d > 0
    assert abs(relative_entropy(rho, rho)) < 1e-12


@SETTINGS
@given(seeds, st.integers(2, 5), st.floats(1e-4, 0.3))
def test_entropy_continuity(seed, n, eps):
    rng = np.random.default_rng(seed)
    rho = state(rng, n)
    rho2 = (1 - eps) * rho + eps * state(rng, n)
    w = np.concatenate([np.linalg.eigvalsh(rho), np.linalg.eigvalsh(rho2)])
    c = max(abs(math.log(w.max())), abs(math.log(w.min()))) + 1
    delta = np.sum(np.abs(np.linalg.eigvalsh(rho2 - rho))) / n
    assert abs(entropy(rho2) - entropy(rho)) <= c * delta + 1e-14


@pytest.mark.parametrize("name", sorted(shipped_models()))
def test_fisher_monotone_with_certified_curvature(name):
    m = model(name)
    cert, _ = C.certify(m)
    rng = np.random.default_rng(5)
    for _ in range(5):
        rho = random_density(m.space, rng)
        i0 = fisher_information(m, rho)
        for t in (0.1, 0.5, 1.0, 2.0):
            it = fisher_information(m, evolve(m, rho, t))
            assert it <= math.exp(-2 * cert.lam * t) * i0 + 1e-8


# ---------------------------------------------------------------------------
# constants


@pytest.mark.parametrize("lam", [1e-6, -1e-6])
def test_kappa_continuity(lam):
    assert abs(C.kappa(lam, 1.0) - 0.25) < 1e-6


@pytest.mark.parametrize("name", sorted(shipped_models()))
def test_half_decay_at_return_time(name):
    m = model(name)
    if not m.is_ergodic:
        pytest.skip("exact return time needs an ergodic model")
    t = C.tcb_exact_ergodic(m)
    rng = np.random.default_rng(9)
    for _ in range(20):
        rho = random_density(m.space, rng, 1.5)
        d0 = relative_entropy_to_algebra(rho, m.cond_exp)
        dt = relative_entropy_to_algebra(evolve(m, rho, t), m.cond_exp)
        assert dt <= 0.5 * d0 + 1e-9


@pytest.mark.parametrize("name", sorted(shipped_models()))
def test_search_dominates_lower_bound(name):
    m = model(name)
    rep = C.analyze_model(m, search_starts=1, max_iters=300)
    assert rep.estimate.lower_bound <= rep.estimate.upper_bound + 1e-9
