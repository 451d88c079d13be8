import numpy as np
import pytest

from tvtv.errors import DimensionError, InstanceTooLarge
from tvtv.operators import (DiffOperator, DownsampleOperator, FourierDiagonal, kernel_taps,
                            spectrum_I_plus_DtD, tv_norm)

from conftest import dense_diff

KERNELS = ["bicubic", "box", "direct"]


def keys(x, a=-0.5):
    x = abs(x)
    if x <= 1:
        return (a + 2) * x**3 - (a + 3) * x**2 + 1
    if x < 2:
        return a * x**3 - 5 * a * x**2 + 8 * a * x - 4 * a
    return 0.0


def dense_bicubic_1d(length, s):
    """Periodic imresize-style shrink by ``s``: output ``i`` centered at ``s*i + (s-1)/2``."""
    R = np.zeros((length // s, length))
    for i in range(length // s):
        center = s * i + (s - 1) / 2
        for p in range(int(center) - 3 * s, int(center) + 3 * s + 1):
            R[i, p % length] += keys((p - center) / s) / s
        R[i] /= R[i].sum()
    return R


def test_diff_two_by_two_by_hand():
    D = DiffOperator((2, 2))
    out = D.forward(np.array([1.0, 3.0, 2.0, 4.0]))
    assert out.tolist() == [2, -2, 2, -2, 1, 1, -1, -1]
    assert D.tv_norm(np.array([1.0, 3.0, 2.0, 4.0])) == 12
    assert tv_norm(np.array([1.0, 3.0, 2.0, 4.0]), (2, 2)) == 12


@pytest.mark.parametrize("backend", ["direct", "fft"])
@pytest.mark.parametrize("shape", [(8, 8), (5, 7), (1, 6), (3, 1)])
def test_diff_matches_entrywise_matrix(rng, backend, shape):
    D = DiffOperator(shape, backend)
    ref = dense_diff(*shape)
    u = rng.standard_normal(shape[0] * shape[1])
    v = rng.standard_normal(2 * u.size)
    np.testing.assert_allclose(D.forward(u), ref @ u, atol=1e-12)
    np.testing.assert_allclose(D.adjoint(v), ref.T @ v, atol=1e-12)
    assert D.tv_norm(u) == pytest.approx(np.abs(ref @ u).sum(), rel=1e-12)
    np.testing.assert_array_equal(DiffOperator(shape).dense(), ref)


def test_diff_constant_and_null_space(rng):
    D = DiffOperator((6, 5))
    c = np.full(30, 3.7)
    assert not np.any(D.forward(c))
    assert D.tv_norm(c) == 0
    assert not np.any(D.adjoint(np.zeros(60)))
    np.testing.assert_allclose(D.adjoint(D.forward(c)), 0, atol=1e-14)
    for k in rng.choice(30, 5, replace=False):
        bumped = c.copy()
        bumped[k] += 1e-3
        assert D.tv_norm(bumped) > 0


def test_diff_rejects_bad_length():
    D = DiffOperator((3, 3))
    with pytest.raises(DimensionError):
        D.forward(np.zeros(8))
    with pytest.raises(DimensionError):
        D.adjoint(np.zeros(9))


def test_diff_backends_agree(rng):
    for shape in [(16, 16), (9, 12), (32, 20)]:
        a, b = DiffOperator(shape, "direct"), DiffOperator(shape, "fft")
        u = rng.standard_normal(shape[0] * shape[1])
        v = rng.standard_normal(2 * u.size)
        assert np.linalg.norm(a.forward(u) - b.forward(u)) <= 1e-10 * np.linalg.norm(a.forward(u))
        assert np.linalg.norm(a.adjoint(v) - b.adjoint(v)) <= 1e-10 * np.linalg.norm(a.adjoint(v))


def _operators():
    ops = [DiffOperator((8, 8), "direct"), DiffOperator((8, 8), "fft"), DiffOperator((6, 10))]
    for kernel in KERNELS:
        for shape, s, phase in [((8, 8), 2, 0), ((12, 16), 4, 0), ((12, 6), 3, 1), ((8, 8), 2, 1)]:
            ops.append(DownsampleOperator(shape, s, kernel, phase))
    return ops


@pytest.mark.parametrize("op", _operators(), ids=lambda op: f"{type(op).__name__}-{op.shape}-"
                         f"{getattr(op, 'kernel', getattr(op, 'backend', ''))}")
def test_adjoint_identity(rng, op):
    worst = 0.0
    for _ in range(100):
        u = rng.standard_normal(op.in_size)
        v = rng.standard_normal(op.out_size)
        gap = abs(op.forward(u) @ v - u @ op.adjoint(v))
        worst = max(worst, gap / (np.linalg.norm(u) * np.linalg.norm(v)))
    assert worst <= 1e-10


@pytest.mark.parametrize("kernel", KERNELS)
def test_downsample_linear_and_dc_gain(rng, kernel):
    A = DownsampleOperator((16, 12), 4, kernel)
    np.testing.assert_allclose(A.forward(np.full(192, 42.5)), 42.5, rtol=1e-14)
    u, v = rng.standard_normal(192), rng.standard_normal(192)
    np.testing.assert_allclose(A.forward(2.5 * u + v), 2.5 * A.forward(u) + A.forward(v),
                               atol=1e-13)
    offsets, weights = kernel_taps(kernel, 4)
    assert weights.sum() == pytest.approx(1.0, abs=1e-15)


def test_direct_selection_4x4():
    A = DownsampleOperator((4, 4), 2, "direct")
    u = np.arange(16.0)
    # column-major: pixel (i, j) sits at i + 4 j
    assert A.forward(u).tolist() == [0.0, 2.0, 8.0, 10.0]
    np.testing.assert_array_equal(A.forward(A.adjoint(np.array([1.0, 2.0, 3.0, 4.0]))),
                                  [1, 2, 3, 4])
    assert np.count_nonzero(A.adjoint(np.ones(4))) == 4


def test_direct_a_at_is_identity():
    A = DownsampleOperator((12, 8), 4, "direct", phase=3)
    np.testing.assert_array_equal(A.dense() @ A.dense().T, np.eye(A.m))


def test_bicubic_matches_independent_matrix():
    M = N = 16
    A = DownsampleOperator((M, N), 2, "bicubic")
    R = dense_bicubic_1d(M, 2)
    dense = np.kron(R, R)  # column-major vec(R U R^T) = (R kron R) vec(U)
    np.testing.assert_allclose(A.dense(), dense, atol=1e-14)
    ramp = np.add.outer(np.arange(M), 2 * np.arange(N)).astype(float)
    u = ramp.ravel(order="F")
    np.testing.assert_allclose(A.forward(u), dense @ u, atol=1e-12)
    e = np.zeros(A.m)
    e[13] = 1.0
    np.testing.assert_allclose(A.adjoint(e), dense.T[:, 13], atol=1e-14)


def test_bicubic_taps_for_scale_two():
    offsets, w = kernel_taps("bicubic", 2)
    assert offsets.tolist() == [-3, -2, -1, 0, 1, 2, 3, 4]
    np.testing.assert_allclose(
        w, [-0.01171875, -0.03515625, 0.11328125, 0.43359375,
            0.43359375, 0.11328125, -0.03515625, -0.01171875])


def test_bicubic_interior_matches_pil():
    Image = pytest.importorskip("PIL.Image")
    x = np.random.default_rng(0).random((40, 48)) * 255
    for s in (2, 4):
        A = DownsampleOperator(x.shape, s, "bicubic")
        ours = A.forward(x.ravel(order="F")).reshape(A.lr_shape, order="F")
        pil = Image.fromarray(x.astype(np.float32), mode="F").resize(
            (A.lr_shape[1], A.lr_shape[0]), Image.BICUBIC)
        ref = np.asarray(pil, dtype=float)
        assert np.max(np.abs(ours - ref)[2:-2, 2:-2]) <= 1e-3


@pytest.mark.parametrize("kernel", KERNELS)
def test_filter_spectrum_then_select_equals_forward(rng, kernel):
    A = DownsampleOperator((12, 16), 4, kernel, phase=2)
    u = rng.standard_normal(A.n)
    Hu = A.filter_spectrum().apply(u)
    np.testing.assert_allclose(A.select(Hu), A.forward(u), atol=1e-12)


def test_downsample_validation():
    with pytest.raises(DimensionError):
        DownsampleOperator((10, 12), 4)
    with pytest.raises(ValueError):
        DownsampleOperator((8, 8), 1)
    with pytest.raises(ValueError):
        DownsampleOperator((8, 8), 2, "lanczos")
    with pytest.raises(DimensionError):
        DownsampleOperator((8, 8), 2).adjoint(np.zeros(15))


def test_dense_guard():
    with pytest.raises(InstanceTooLarge):
        DiffOperator((65, 64)).dense()


def test_spectrum_dc_and_trivial_grid():
    K = spectrum_I_plus_DtD((8, 6))
    assert K.half[0, 0] == 1.0
    assert K.is_real()
    assert np.min(K.full().real) >= 1.0
    assert spectrum_I_plus_DtD((1, 1)).full().tolist() == [[1.0]]


@pytest.mark.parametrize("shape", [(8, 8), (7, 5)])
def test_fft_solves_match_dense(rng, shape):
    n = shape[0] * shape[1]
    D = dense_diff(*shape)
    K = spectrum_I_plus_DtD(shape)
    r = rng.standard_normal(n)
    dense_K = np.eye(n) + D.T @ D
    np.testing.assert_allclose(K.solve(r), np.linalg.solve(dense_K, r), atol=1e-8)
    np.testing.assert_allclose(K.apply(r), dense_K @ r, atol=1e-8)
    G = DiffOperator(shape).gram_spectrum()
    np.testing.assert_allclose(G.apply(r), D.T @ D @ r, atol=1e-8)


def test_fourier_diagonal_full_and_adjoint(rng):
    spectrum = np.fft.fft2(rng.standard_normal((6, 5)))
    F = FourierDiagonal((6, 5), spectrum[:, :3])
    np.testing.assert_allclose(F.full(), spectrum, atol=1e-12)
    u, v = rng.standard_normal(30), rng.standard_normal(30)
    assert F.apply(u) @ v == pytest.approx(u @ F.apply_adjoint(v), rel=1e-10)
