"""Independent finite-difference oracle for the per-sector eigenproblem.

The primitive unknowns (horizontal and vertical velocity profiles, pressure)
are discretized on a staggered second-order grid in x2 -- velocities at the
N+1 nodes, pressure at cell midpoints, which rules out checkerboard pressure
null vectors -- and every boundary row of the eigen-system is imposed
directly, including the heat/Ventcel balance on the top wall (where the
eigenvalue also appears).  The resulting generalized pencil A x = lam B x has
a singular, diagonal, positive semi-definite B and is solved by shift-invert
Arnoldi with a deterministic start vector, sweeping shifts upward when a
single factorization does not yield enough converged eigenvalues.

This path shares nothing with the stream-function reduction in
``stokesheat.spectral``; it is the trust anchor the reduction is validated
against.  Eigenvalues are Richardson-extrapolated from grids N and 2N, which
cancels the leading h^2 error and leaves a self-reported estimate.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidArgumentError, OracleFailureError

_IMAG_TOL = 1e-8
_DEDUPE_RTOL = 1e-9
_MAX_SWEEPS = 8


@dataclass(frozen=True)
class OracleEigs:
    """Extrapolated sector eigenvalues with self-reported error estimates."""

    k: int
    grid_n: int
    values: np.ndarray
    error_est: np.ndarray


def _pencil(k, n_grid):
    """Sparse (A, B) of the staggered-grid eigenpencil for sector k."""
    n = n_grid
    h = 1.0 / n
    nv = n + 1
    dim = 2 * nv + n

    def iv(i):
        return i

    def iu(i):
        return nv + i

    def ip(j):
        return 2 * nv + j

    rows, cols, vals = [], [], []
    brow, bval = [], []

    def put(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    # horizontal velocity: Dirichlet at both walls, momentum in the interior
    put(iv(0), iv(0), 1.0)
    put(iv(n), iv(n), 1.0)
    for i in range(1, n):
        put(iv(i), iv(i - 1), -1.0 / h ** 2)
        put(iv(i), iv(i), 2.0 / h ** 2 + k * k)
        put(iv(i), iv(i + 1), -1.0 / h ** 2)
        put(iv(i), ip(i - 1), 0.5 * k)
        put(iv(i), ip(i), 0.5 * k)
        brow.append(iv(i))
        bval.append(1.0)
    # vertical velocity: Dirichlet at the bottom, momentum in the interior,
    # heat/Ventcel balance at the top (pressure extrapolated to the wall)
    put(iu(0), iu(0), 1.0)
    for i in range(1, n):
        put(iu(i), iu(i - 1), -1.0 / h ** 2)
        put(iu(i), iu(i), 2.0 / h ** 2 + k * k)
        put(iu(i), iu(i + 1), -1.0 / h ** 2)
        put(iu(i), ip(i), 1.0 / h)
        put(iu(i), ip(i - 1), -1.0 / h)
        brow.append(iu(i))
        bval.append(1.0)
    put(iu(n), iu(n), float(k * k))
    put(iu(n), ip(n - 1), -1.5)
    put(iu(n), ip(n - 2), 0.5)
    brow.append(iu(n))
    bval.append(1.0)
    # incompressibility collocated at the pressure cells
    for j in range(n):
        put(ip(j), iu(j + 1), 1.0 / h)
        put(ip(j), iu(j), -1.0 / h)
        put(ip(j), iv(j), -0.5 * k)
        put(ip(j), iv(j + 1), -0.5 * k)

    a_mat = sp.csc_matrix((vals, (rows, cols)), shape=(dim, dim))
    b_mat = sp.csc_matrix((bval, (brow, brow)), shape=(dim, dim))
    return a_mat, b_mat


def _solve_grid(k, n_grid, count):
    """The `count` smallest pencil eigenvalues on one grid."""
    a_mat, b_mat = _pencil(k, n_grid)
    dim = a_mat.shape[0]
    v0 = np.ones(dim)
    found = []
    sigma = 0.0
    for _ in range(_MAX_SWEEPS):
        want = min(count + 8, dim - 2)
        try:
            vals = spla.eigs(a_mat, k=want, M=b_mat, sigma=sigma, v0=v0,
                             return_eigenvectors=False)
        except spla.ArpackNoConvergence as exc:
            if len(exc.eigenvalues) == 0:
                raise OracleFailureError(
                    f"shift-invert iteration failed to converge at shift "
                    f"{sigma!r} (k={k}, N={n_grid})", shift=sigma) from exc
            vals = exc.eigenvalues
        vals = vals[np.abs(vals.imag) <= _IMAG_TOL * (1.0 + np.abs(vals.real))]
        vals = np.real(vals)
        found.extend(v for v in vals if v > 0)
        found.sort()
        merged = []
        for v in found:
            if not merged or v - merged[-1] > _DEDUPE_RTOL * max(1.0, v):
                merged.append(v)
        found = merged
        if len(found) >= count:
            return np.array(found[:count])
        sigma = 1.2 * (found[-1] if found else max(1.0, k * k)) + 10.0
    raise OracleFailureError(
        f"shift sweep exhausted with {len(found)} of {count} eigenvalues "
        f"(k={k}, N={n_grid})", shift=sigma)


def oracle_eigs(k, n_grid, count):
    """Smallest ``count`` eigenvalues of sector k, Richardson-extrapolated.

    Parameters
    ----------
    k : int >= 0
        Fourier sector.
    n_grid : int >= 50
        Base grid resolution; the solve is repeated at 2*n_grid and the two
        results combined to cancel the leading quadratic error.
    count : int >= 1
        Number of eigenvalues, ordered increasingly.
    """
    if not (isinstance(k, (int, np.integer)) and k >= 0):
        raise InvalidArgumentError(f"sector k must be an integer >= 0, got {k!r}")
    if n_grid < 50:
        raise InvalidArgumentError("n_grid must be >= 50")
    if count < 1:
        raise InvalidArgumentError("count must be >= 1")
    coarse = _solve_grid(int(k), int(n_grid), int(count))
    fine = _solve_grid(int(k), 2 * int(n_grid), int(count))
    values = (4.0 * fine - coarse) / 3.0
    error_est = np.abs(fine - coarse) / 3.0
    return OracleEigs(k=int(k), grid_n=int(n_grid), values=values,
                      error_est=error_est)
