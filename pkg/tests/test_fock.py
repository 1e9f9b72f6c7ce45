import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phasesense.fock import (
    DensityMatrix,
    NumberDistribution,
    TruncationPolicy,
    TruncationWarning,
    default_policy,
    displaced_fock_overlap,
    displacement_matrix,
    laguerre_assoc,
    overlap_kernel,
    wigner_at,
    wigner_grid,
)
from phasesense.states import StateSpec, amplitudes

from conftest import dense_displacement


def laguerre_series(p, q, x):
    return sum((-1) ** i * math.comb(p + q, p - i) * x**i / math.factorial(i) for i in range(p + 1))


def test_laguerre_trivial_values():
    assert laguerre_assoc(0, 3, 5.0) == 1.0
    assert laguerre_assoc(1, 2, 0.5) == pytest.approx(2.5, abs=1e-15)


def test_laguerre_against_series_example():
    expected = laguerre_series(3, 2, 2.0)
    assert expected == pytest.approx(-4.0 / 3.0)
    assert laguerre_assoc(3, 2, 2.0) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("x", [0.1, 1.0, 5.0])
def test_laguerre_grid_against_series(x):
    for p in range(16):
        for q in range(16):
            ref = laguerre_series(p, q, x)
            got = laguerre_assoc(p, q, x)
            # near a root the relative measure is meaningless; scale by the largest term
            scale = max(abs(ref), max(math.comb(p + q, p - i) * x**i / math.factorial(i)
                                      for i in range(p + 1)) * 1e-6)
            assert abs(got - ref) <= 1e-10 * scale, (p, q, x)


def test_laguerre_rejects_bad_input():
    with pytest.raises(ValueError):
        laguerre_assoc(-1, 0, 1.0)
    with pytest.raises(ValueError):
        laguerre_assoc(2, 0, float("nan"))
    with pytest.raises(OverflowError):
        laguerre_assoc(400, 400, 1e300)


def test_overlap_trivial_values():
    for alpha in (0.0, 0.3, 1.7):
        assert displaced_fock_overlap(0, 0, alpha, 0.4) == pytest.approx(math.exp(-alpha**2 / 2))
    for m in range(4):
        for k in range(4):
            assert displaced_fock_overlap(m, k, 0.0, 1.1) == (1.0 if m == k else 0.0)


def test_overlap_matches_matrix_exponential_example():
    D = dense_displacement(0.3 * np.exp(0.7j), 30)
    assert displaced_fock_overlap(1, 0, 0.3, 0.7) == pytest.approx(D[1, 0], abs=1e-12)


@pytest.mark.parametrize("alpha,phi", [(0.2, 0.0), (0.7, 1.3), (1.0, -2.4)])
def test_overlap_grid_against_matrix_exponential(alpha, phi):
    D = dense_displacement(alpha * np.exp(1j * phi), 80)
    for m in range(20):
        for k in range(20):
            assert abs(displaced_fock_overlap(m, k, alpha, phi) - D[m, k]) < 1e-10, (m, k)


def test_overlap_sign_convention_under_swap():
    # <m|D(b)|k> = (-1)^(m-k) conj(<k|D(b)|m>) when m and k are exchanged
    for m in range(8):
        for k in range(8):
            a = displaced_fock_overlap(m, k, 0.6, 0.9)
            b = displaced_fock_overlap(k, m, 0.6, 0.9)
            assert a == pytest.approx((-1) ** (m - k) * np.conj(b), abs=1e-14)


@pytest.mark.parametrize("alpha", [0.05, 0.5, 1.0])
def test_overlap_columns_normalised(alpha):
    D = 30
    kern = overlap_kernel(alpha, D, dim_out=D + 60)
    norms = kern.row_norms()
    assert np.all(np.abs(norms[: D - 1] - 1.0) < 1e-8)


def test_overlap_large_indices_finite():
    val = displaced_fock_overlap(160, 150, 2.0, 0.0)
    assert math.isfinite(abs(val))
    D = displacement_matrix(2.0, 200, 260)
    assert abs(D[160, 150] - val) < 1e-12


def test_kernel_phase_winding():
    kern = overlap_kernel(0.4, 6, dim_out=10)
    mat = kern.with_phase(0.3)
    assert mat[3, 1] == pytest.approx(displaced_fock_overlap(3, 1, 0.4, 0.3), abs=1e-14)


def test_wigner_trivial_values():
    assert wigner_at(DensityMatrix.fock(0), 0.0) == pytest.approx(2 / math.pi)
    assert wigner_at(DensityMatrix.fock(1), 0.0) == pytest.approx(-2 / math.pi)


@pytest.mark.parametrize("beta", [0.0, 0.3 + 0.2j, -0.8j])
def test_wigner_even_cat_against_dense_product(beta):
    amp = amplitudes(StateSpec("cat", {"size": 1.2, "parity": 1}), TruncationPolicy(dim=40))
    rho = np.outer(amp, amp)
    Dm = dense_displacement(beta, 40)
    parity = np.diag(1.0 - 2.0 * (np.arange(40) % 2))
    ref = 2 / math.pi * np.trace(Dm @ parity @ Dm.conj().T @ rho).real
    assert wigner_at(DensityMatrix(rho), beta) == pytest.approx(ref, abs=1e-10)


def test_wigner_grid_layout_and_normalisation():
    rho = DensityMatrix.fock(1)
    xs = np.linspace(-4, 4, 81)
    ys = np.linspace(-4, 4, 81)
    W = wigner_grid(rho, xs, ys[:5])
    assert W.shape == (5, 81)
    # integral of W over the plane is 1
    full = wigner_grid(rho, xs[::2], ys[::2])
    h = xs[2] - xs[0]
    assert full.sum() * h * h == pytest.approx(1.0, abs=1e-3)
    # imaginary axis is the first index
    asym = DensityMatrix.from_pure(np.array([1.0, 1.0]) / math.sqrt(2))
    g = wigner_grid(asym, [0.5], [0.0, 0.5])
    assert g[0, 0] == pytest.approx(wigner_at(asym, 0.5))
    assert g[1, 0] == pytest.approx(wigner_at(asym, 0.5 + 0.5j))


def test_wigner_truncation_warning():
    mat = np.zeros((3, 3))
    mat[2, 2] = 1.0
    with pytest.warns(TruncationWarning):
        wigner_at(mat, 50.0, tail_budget=1e-300)


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[0.5, 0.2], [0.0, 0.5]]))
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(2))
    with pytest.raises(ValueError):
        DensityMatrix(np.ones(3))
    rho = DensityMatrix.fock(3)
    assert rho.dim == 5 and rho.mean() == 3 and rho.parity() == -1
    with pytest.raises(ValueError):
        rho.elems[0, 0] = 1.0
    assert rho.padded(9).dim == 9
    assert rho.trace_distance(DensityMatrix.fock(3, 9)) == pytest.approx(0.0, abs=1e-14)
    assert rho.trace_distance(DensityMatrix.fock(2)) == pytest.approx(1.0)


def test_number_distribution_validation():
    with pytest.raises(ValueError):
        NumberDistribution([0.5, -0.1, 0.6])
    with pytest.raises(ValueError):
        NumberDistribution([0.5, 0.2])
    nd = NumberDistribution([0.5, 0.5 + 1e-13, -1e-13])
    assert nd.probs[2] == 0.0
    assert nd.mean() == pytest.approx(0.5)
    assert nd.total_variation(np.array([1.0])) == pytest.approx(0.5)


def test_truncation_policy(monkeypatch):
    with pytest.raises(ValueError):
        TruncationPolicy(dim=1)
    with pytest.raises(ValueError):
        TruncationPolicy(tail_budget=1e-3)
    monkeypatch.setenv("PHASESENSE_DIM", "17")
    assert default_policy().dim == 17
    monkeypatch.delenv("PHASESENSE_DIM")
    assert default_policy().dim is None


@settings(max_examples=40, deadline=None)
@given(
    alpha=st.floats(0.0, 1.0),
    phi=st.floats(-math.pi, math.pi),
    m=st.integers(0, 12),
    k=st.integers(0, 12),
)
def test_overlap_unitarity_property(alpha, phi, m, k):
    # rows of D^dag D are orthonormal when the output space is large enough
    D = displacement_matrix(alpha * np.exp(1j * phi), 14, 60)
    assert abs(np.vdot(D[:, m], D[:, k]) - (m == k)) < 1e-10
