import json

import numpy as np
import pytest

from stokesheat import (
    BasisFormatError,
    BasisVersionError,
    FULL_REGION,
    EigenBasis,
    InvalidArgumentError,
    ObservationRegion,
    StateVector,
    apply_B,
    basis_state,
    inner,
    load_basis,
    norm,
    obs_gramian,
    project,
    rayleigh_matrix,
    save_basis,
    semigroup,
    trace_gramian,
    zero_mode,
)
from stokesheat.spectral import eval_mode


def random_state(basis, rng):
    a = rng.standard_normal(len(basis))
    return StateVector(basis, a / np.linalg.norm(a))


def field_of_state(state, x1, x2):
    """Velocity and trace of a modal state on a grid (test-side evaluator)."""
    u1 = np.zeros((len(x1), len(x2)))
    u2 = np.zeros_like(u1)
    eta = np.zeros(len(x1))
    for aj, mode in zip(state.coeffs, state.basis.modes):
        if aj == 0.0:
            continue
        m1, m2, _, me = eval_mode(mode, x1[:, None], x2[None, :])
        u1 += aj * m1
        u2 += aj * m2
        eta += aj * me[:, 0]
    return u1, u2, eta


def simpson_weights(n):
    # n odd node count
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / 3.0


def direct_quadrature_inner(x, y, n1=128, n2=257):
    """Independent oracle: periodic trapezoid in x1, Simpson in x2/trace."""
    x1 = np.linspace(0.0, 2 * np.pi, n1, endpoint=False)
    x2 = np.linspace(0.0, 1.0, n2)
    h1 = 2 * np.pi / n1
    h2 = 1.0 / (n2 - 1)
    u1x, u2x, etax = field_of_state(x, x1, x2)
    u1y, u2y, etay = field_of_state(y, x1, x2)
    w2 = simpson_weights(n2) * h2
    vol = h1 * np.einsum("ab,b->", u1x * u1y + u2x * u2y, w2)
    trace = h1 * np.dot(etax, etay)
    return vol + trace


def test_state_length_check(basis60):
    with pytest.raises(InvalidArgumentError):
        StateVector(basis60, np.zeros(len(basis60) + 1))


def test_inner_orthonormal_units(basis60):
    for j in (0, 3, 7):
        for l in (0, 3, 7):
            val = inner(basis_state(basis60, j), basis_state(basis60, l))
            assert val == pytest.approx(1.0 if j == l else 0.0, abs=1e-15)


def test_inner_positivity(basis60, rng):
    x = random_state(basis60, rng)
    assert inner(x, x) > 0
    zero = StateVector(basis60, np.zeros(len(basis60)))
    assert inner(zero, zero) == 0.0


def test_inner_basis_mismatch(basis60, basis120):
    x = basis_state(basis60, 0)
    y = basis_state(basis120, 0)
    with pytest.raises(InvalidArgumentError):
        inner(x, y)


def test_inner_matches_direct_quadrature(basis60, rng):
    for _ in range(10):
        x = random_state(basis60, rng)
        y = random_state(basis60, rng)
        ref = direct_quadrature_inner(x, y)
        got = inner(x, y)
        assert got == pytest.approx(ref, abs=2e-6 * norm(x) * norm(y))


def test_semigroup_properties(basis60, rng):
    with pytest.raises(InvalidArgumentError):
        semigroup(random_state(basis60, rng), -0.5)
    for _ in range(100):
        x = random_state(basis60, rng)
        assert np.array_equal(semigroup(x, 0.0).coeffs, x.coeffs)
        s, t = rng.uniform(0.0, 1.0, 2)
        a = semigroup(semigroup(x, s), t).coeffs
        b = semigroup(x, s + t).coeffs
        assert np.abs(a - b).max() <= 1e-12
        assert norm(semigroup(x, t)) <= np.exp(-basis60.lambdas[0] * t) * norm(x) * (1 + 1e-12)


def test_project_properties(basis60, rng):
    x = random_state(basis60, rng)
    lam = 30.0
    p = project(x, lam)
    assert np.array_equal(project(p, lam).coeffs, p.coeffs)
    assert np.array_equal(project(x, basis60.cutoff + 1).coeffs, x.coeffs)
    tail = x.coeffs - p.coeffs
    assert norm(x) ** 2 == pytest.approx(norm(p) ** 2 + float(tail @ tail), rel=1e-12)


def test_obs_gramian_region_validation():
    with pytest.raises(InvalidArgumentError):
        ObservationRegion(x1=(1.0, 0.5), x2=(0.3, 0.7))
    with pytest.raises(InvalidArgumentError):
        ObservationRegion(x1=(0.0, 1.0), x2=(0.9, 0.2))
    with pytest.raises(InvalidArgumentError):
        ObservationRegion(x1=(0.0, 7.0), x2=(0.3, 0.7))


def test_parseval_split(basis120):
    m = obs_gramian(basis120, FULL_REGION).matrix
    n = trace_gramian(basis120)
    dev = np.abs(m + n - np.eye(len(basis120))).max()
    assert dev <= 1e-8


def test_k0_block_closed_form():
    modes = tuple(zero_mode(n) for n in range(1, 5))
    basis = EigenBasis(cutoff=200.0, k_range=0, modes=modes, metadata={})
    a2, b2 = 0.25, 0.85
    m = obs_gramian(basis, ObservationRegion((0.0, 2 * np.pi), (a2, b2))).matrix

    def sin_int(n, mm):
        # exact antiderivative of sin(n pi x) sin(m pi x) over [a2, b2]
        if n == mm:
            f = lambda x: 0.5 * x - np.sin(2 * n * np.pi * x) / (4 * n * np.pi)
        else:
            f = lambda x: (np.sin((n - mm) * np.pi * x) / (2 * (n - mm) * np.pi)
                           - np.sin((n + mm) * np.pi * x) / (2 * (n + mm) * np.pi))
        return f(b2) - f(a2)

    for i in range(4):
        for j in range(4):
            ref = 2.0 * sin_int(i + 1, j + 1)  # (1/pi)*(2 pi)*integral
            assert m[i, j] == pytest.approx(ref, abs=1e-12)


def test_obs_gramian_vs_tensor_quadrature(basis60, region_half):
    m = obs_gramian(basis60, region_half).matrix
    n1, n2 = 193, 257  # odd node counts for Simpson
    x1 = np.linspace(*region_half.x1, n1)
    x2 = np.linspace(*region_half.x2, n2)
    w1 = simpson_weights(n1) * (x1[1] - x1[0])
    w2 = simpson_weights(n2) * (x2[1] - x2[0])
    fields = []
    for mode in basis60.modes:
        u1, u2, _, _ = eval_mode(mode, x1[:, None], x2[None, :])
        fields.append((u1, u2))
    for i in (0, 5, 11, 17):
        for j in (0, 5, 11, 17):
            ref = (np.einsum("ab,a,b->", fields[i][0] * fields[j][0], w1, w2)
                   + np.einsum("ab,a,b->", fields[i][1] * fields[j][1], w1, w2))
            assert m[i, j] == pytest.approx(ref, abs=1e-7)


def test_obs_gramian_psd_and_monotone(basis60):
    prev_min = None
    for half in (0.3, 0.6, 1.0, 1.5, 2.2):
        region = ObservationRegion((1.0, 1.0 + half), (0.5 - 0.1 * half, 0.5 + 0.1 * half))
        m = obs_gramian(basis60, region).matrix
        ev = np.linalg.eigvalsh(m)
        assert ev[0] >= -1e-10 * np.trace(m)
        if prev_min is not None:
            assert ev[0] >= prev_min - 1e-12
        prev_min = ev[0]


def test_rayleigh_matrix(basis120):
    r = rayleigh_matrix(basis120)
    lams = basis120.lambdas
    assert np.abs(r - r.T).max() <= 1e-7
    dev = np.abs(r + np.diag(lams)) / lams.max()
    assert dev.max() <= 1e-6


def test_apply_B_full_region_identity(basis60):
    gram = obs_gramian(basis60, FULL_REGION)
    n_mat = trace_gramian(basis60)
    idx = np.arange(len(basis60))
    for j in (0, 4, 9):
        g = np.zeros(len(basis60))
        g[j] = 1.0
        forced = apply_B(gram, g, idx)
        ref = (np.eye(len(basis60)) - n_mat)[:, j]
        assert np.abs(forced - ref).max() <= 1e-8


def test_apply_B_zero_and_duality(basis60, region_half, rng):
    gram = obs_gramian(basis60, region_half)
    idx = np.arange(10)
    assert np.abs(apply_B(gram, np.zeros(10), idx)).max() == 0.0
    g = rng.standard_normal(10)
    x = rng.standard_normal(len(basis60))
    lhs = float(apply_B(gram, g, idx) @ x)
    rhs = float(g @ (gram.matrix @ x)[idx])
    assert lhs == pytest.approx(rhs, abs=1e-12 * max(1.0, abs(rhs)))


def test_apply_B_index_validation(basis60, region_half):
    gram = obs_gramian(basis60, region_half)
    with pytest.raises(InvalidArgumentError):
        apply_B(gram, np.ones(2), np.array([0, len(basis60)]))
    with pytest.raises(InvalidArgumentError):
        apply_B(gram, np.ones(3), np.array([0, 1]))


def test_save_load_roundtrip(tmp_path, basis60):
    p1 = tmp_path / "a.json"
    p2 = tmp_path / "b.json"
    save_basis(basis60, p1)
    loaded = load_basis(p1)
    save_basis(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert loaded.basis_id == basis60.basis_id
    m = obs_gramian(loaded, FULL_REGION).matrix + trace_gramian(loaded)
    assert np.abs(m - np.eye(len(loaded))).max() <= 1e-8


def test_load_truncated_file(tmp_path, basis60):
    path = tmp_path / "basis.json"
    save_basis(basis60, path)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) // 2])
    with pytest.raises(BasisFormatError):
        load_basis(path)


def test_load_version_mismatch(tmp_path, basis60):
    path = tmp_path / "basis.json"
    save_basis(basis60, path)
    doc = json.loads(path.read_text())
    doc["schema_version"] = 99
    path.write_text(json.dumps(doc))
    with pytest.raises(BasisVersionError):
        load_basis(path)


def test_load_missing_field(tmp_path, basis60):
    path = tmp_path / "basis.json"
    save_basis(basis60, path)
    doc = json.loads(path.read_text())
    del doc["modes"][0]["lambda"]
    path.write_text(json.dumps(doc))
    with pytest.raises(BasisFormatError):
        load_basis(path)
