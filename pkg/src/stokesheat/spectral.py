"""Semi-analytic eigensolver for the coupled Stokes--heat operator on the
periodic strip Omega = (R/2piZ) x (0, 1).

For Fourier wavenumber k >= 1 the vertical velocity profile phi(x2) of an
eigenmode with eigenvalue lam solves the fourth-order ODE

    (D^2 - k^2)(D^2 - (k^2 - lam)) phi = 0

subject to

    phi(0) = 0,  phi'(0) = 0,  phi'(1) = 0,
    k^2 (k^2 - lam) phi(1) - phi'''(1) = 0,

where the last line is the heat/Ventcel balance on the top wall.  The
horizontal velocity profile is phi'/k (up to phase) by incompressibility and
the pressure profile is

    p(x2) = (phi''' + (lam - k^2) phi') / k^2

from the horizontal momentum balance.  The vanishing of the 4x4 boundary
determinant over the ODE's fundamental system is the sector's dispersion
relation; its roots are the sector eigenvalues.  This reduction was
validated against the independent finite-difference oracle in
``stokesheat.oracle`` (see tests), which is the trust anchor for all of it.

The k = 0 sector decouples: the vertical velocity and the boundary unknown
vanish and the horizontal velocity solves a Dirichlet Laplacian in x2, so
its modes are sin(n pi x2) with eigenvalue (n pi)^2.

The fundamental system is stored in the exponentially scaled form
{exp(-k x2), exp(k (x2-1)), trig/exp pair} rather than {cosh, sinh, ...}:
for k beyond ~18 the cosh/sinh representation loses all precision to
cancellation when the profile is evaluated near x2 = 1.
"""

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np
from scipy.optimize import brentq

from .errors import (
    DegenerateBranchError,
    IncompleteBasisError,
    InvalidArgumentError,
    InvalidBracketError,
    MultiplicityError,
    NotAnEigenvalueError,
)
from .quadrature import COS, SIN, GAUSS_NODES_X2, gauss_legendre

TWO_PI = 2.0 * np.pi

OSCILLATORY = "oscillatory"
EVANESCENT = "evanescent"
COSINE = "cosine"
SINE = "sine"

SCHEMA_VERSION = 1

# gates used by build_mode (ratios of singular values of the boundary matrix)
RESIDUAL_GATE = 1e-6
MULTIPLICITY_GATE = 1e-8

# sqrt(lambda) scan floor; the spectrum of every sector lies above k^2 >= 1
# (checked against the oracle), so nothing hides below this
SCAN_SQRT_FLOOR = 1e-2

_PHASE_RANK = {COSINE: 0, SINE: 1, None: 0}


def degeneracy_tolerance(k):
    """Half-width of the guard interval around lam = k**2."""
    return 1e-8 * max(1.0, float(k) ** 2)


@dataclass(frozen=True)
class StreamProfile:
    """Stream-function record of a k >= 1 eigenmode.

    ``c`` holds the four coefficients in the scaled fundamental system
    {exp(-k x2), exp(k (x2-1)), cos(beta x2), sin(beta x2)} for the
    oscillatory branch (lam > k^2, beta = sqrt(lam - k^2)) or
    {exp(-k x2), exp(k (x2-1)), exp(-mu x2), exp(mu (x2-1))} for the
    evanescent branch (mu = sqrt(k^2 - lam)).
    """

    k: int
    lam: float
    branch: str
    c: tuple
    norm_factor: float


@dataclass(frozen=True)
class ZeroModeProfile:
    """Analytic record of a k = 0 mode: u = amplitude*(sin(n pi x2), 0)."""

    n: int
    amplitude: float


@dataclass(frozen=True)
class EigenMode:
    k: int
    n: int
    lam: float
    phase: str          # "cosine" | "sine" for k >= 1, None for k = 0
    profile: object     # StreamProfile or ZeroModeProfile
    eta_trace: float    # amplitude of the boundary heat unknown


@dataclass
class EigenBasis:
    """Ordered orthonormal eigenmode collection up to a cutoff."""

    cutoff: float
    k_range: int
    modes: tuple
    metadata: dict

    def __len__(self):
        return len(self.modes)

    @property
    def lambdas(self):
        lams = getattr(self, "_lambdas", None)
        if lams is None:
            lams = np.array([m.lam for m in self.modes])
            self._lambdas = lams
        return lams

    @property
    def basis_id(self):
        bid = getattr(self, "_basis_id", None)
        if bid is None:
            h = hashlib.sha256()
            h.update(repr((self.cutoff, self.k_range)).encode())
            for m in self.modes:
                h.update(repr((m.k, m.n, m.lam, m.phase, m.eta_trace,
                               m.profile)).encode())
            bid = h.hexdigest()
            self._basis_id = bid
        return bid

    def low_indices(self, lam_cap):
        return np.nonzero(self.lambdas <= lam_cap)[0]


def _fundamental(k, lam, x, deriv):
    """Values of d^deriv/dx^deriv of the four fundamental solutions at x.

    Returns an array of shape (4,) + shape(x).
    """
    x = np.asarray(x, dtype=float)
    kk = float(k)
    rows = np.empty((4,) + x.shape)
    rows[0] = (-kk) ** deriv * np.exp(-kk * x)
    rows[1] = kk ** deriv * np.exp(kk * (x - 1.0))
    if lam > kk * kk:
        b = math.sqrt(lam - kk * kk)
        rows[2] = b ** deriv * np.cos(b * x + deriv * 0.5 * np.pi)
        rows[3] = b ** deriv * np.sin(b * x + deriv * 0.5 * np.pi)
    else:
        mu = math.sqrt(kk * kk - lam)
        rows[2] = (-mu) ** deriv * np.exp(-mu * x)
        rows[3] = mu ** deriv * np.exp(mu * (x - 1.0))
    return rows


def branch_of(k, lam):
    if abs(lam - k * k) <= degeneracy_tolerance(k):
        raise DegenerateBranchError(
            f"lambda={lam!r} is within the degeneracy guard of k^2={k * k}")
    return OSCILLATORY if lam > k * k else EVANESCENT


def _boundary_matrix(k, lam):
    """Row-normalized 4x4 boundary condition matrix of the stream ODE."""
    rows = np.empty((4, 4))
    rows[0] = _fundamental(k, lam, 0.0, 0)
    rows[1] = _fundamental(k, lam, 0.0, 1)
    rows[2] = _fundamental(k, lam, 1.0, 1)
    rows[3] = (k * k * (k * k - lam) * _fundamental(k, lam, 1.0, 0)
               - _fundamental(k, lam, 1.0, 3))
    scale = np.abs(rows).max(axis=1, keepdims=True)
    return rows / scale


def dispersion(k, lam):
    """Scaled boundary determinant whose zeros in lam are the sector's
    eigenvalues.

    Row normalization keeps the value in a floating-friendly range for
    k <= 64, lam <= 1e6.  Only k >= 1 is accepted; the -k sector carries the
    same eigenvalues and is represented by the sine phase of the real basis.
    """
    if not (isinstance(k, (int, np.integer)) and k >= 1):
        raise InvalidArgumentError(f"wavenumber k must be an integer >= 1, got {k!r}")
    if not lam > 0:
        raise InvalidArgumentError(f"lambda must be positive, got {lam!r}")
    branch_of(k, lam)  # raises inside the guard interval
    return float(np.linalg.det(_boundary_matrix(k, lam)))


def _dispersion_grid(k, lams):
    out = np.empty(len(lams))
    for i, lam in enumerate(lams):
        out[i] = np.linalg.det(_boundary_matrix(k, lam))
    return out


def bracket_roots(k, lam_max, density=16):
    """Sign-change brackets of the dispersion relation in (0, lam_max].

    The scan grid is uniform in sqrt(lambda) (sector eigenvalue spacing is
    asymptotically uniform there) with ``density`` samples per unit.  The
    degenerate point lam = k**2 is excluded by a guard interval and the two
    branches are scanned separately.
    """
    if not (isinstance(k, (int, np.integer)) and k >= 1):
        raise InvalidArgumentError(f"wavenumber k must be an integer >= 1, got {k!r}")
    if not lam_max > 0:
        raise InvalidArgumentError("lam_max must be positive")
    if density < 4:
        raise InvalidArgumentError("density must be >= 4")
    s_hi = math.sqrt(lam_max)
    if s_hi <= SCAN_SQRT_FLOOR:
        return []
    step = 1.0 / density
    grid = np.arange(SCAN_SQRT_FLOOR, s_hi, step)
    if len(grid) == 0 or grid[-1] < s_hi:
        grid = np.append(grid, s_hi)
    guard = degeneracy_tolerance(k)
    lo_edge, hi_edge = k * k - guard, k * k + guard
    brackets = []
    for lams in (grid[grid * grid < lo_edge] ** 2,
                 grid[grid * grid > hi_edge] ** 2):
        if len(lams) < 2:
            continue
        vals = _dispersion_grid(k, lams)
        # nudge exact zeros off the grid so sign logic stays two-valued
        for i in np.nonzero(vals == 0.0)[0]:
            lams[i] *= 1.0 + 1e-9
            vals[i] = np.linalg.det(_boundary_matrix(k, lams[i]))
        flips = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
        brackets.extend((lams[i], lams[i + 1]) for i in flips)
    return brackets


def refine_root(k, bracket, tol=1e-12):
    """Refine a dispersion bracket to relative enclosure width <= tol."""
    lo, hi = float(bracket[0]), float(bracket[1])
    if not 0 < lo < hi:
        raise InvalidBracketError(f"bad bracket ({lo!r}, {hi!r})")
    f_lo = dispersion(k, lo)
    f_hi = dispersion(k, hi)
    if np.sign(f_lo) * np.sign(f_hi) >= 0:
        raise InvalidBracketError(
            f"dispersion has the same sign at both endpoints of ({lo}, {hi})")
    mid = 0.5 * (lo + hi)
    if hi - lo <= tol * mid:
        return mid
    rtol = max(tol, 4 * np.finfo(float).eps)
    return brentq(lambda lam: dispersion(k, lam), lo, hi,
                  xtol=tol * lo, rtol=rtol)


def _stream_norm(k, lam, c):
    """H-norm of the unnormalized mode pair built from stream coefficients."""
    x, w = gauss_legendre(GAUSS_NODES_X2, 0.0, 1.0)
    phi = c @ _fundamental(k, lam, x, 0)
    dphi = c @ _fundamental(k, lam, x, 1)
    phi1 = float(c @ _fundamental(k, lam, 1.0, 0))
    return math.sqrt(np.pi * (np.dot(w, (dphi / k) ** 2 + phi ** 2) + phi1 ** 2))


def build_mode(k, lam, phase, n=0):
    """Assemble a unit-norm eigenmode at a refined dispersion root.

    The stream coefficients are the smallest singular direction of the
    boundary matrix; the smallest singular value acts as the residual gate
    and the second smallest as the multiplicity gate.
    """
    if phase not in (COSINE, SINE):
        raise InvalidArgumentError(f"phase must be 'cosine' or 'sine', got {phase!r}")
    if not (isinstance(k, (int, np.integer)) and k >= 1):
        raise InvalidArgumentError(f"wavenumber k must be an integer >= 1, got {k!r}")
    branch = branch_of(k, lam)
    mat = _boundary_matrix(k, lam)
    _, sing, vt = np.linalg.svd(mat)
    if sing[3] > RESIDUAL_GATE * sing[0]:
        raise NotAnEigenvalueError(
            f"boundary matrix residual {sing[3] / sing[0]:.3e} exceeds gate at "
            f"(k={k}, lambda={lam!r})")
    if sing[2] <= MULTIPLICITY_GATE * sing[0]:
        raise MultiplicityError(
            f"nullspace dimension >= 2 at (k={k}, lambda={lam!r}); "
            "no splitting convention is defined")
    c = vt[3]
    pivot = int(np.argmax(np.abs(c)))
    if c[pivot] < 0:
        c = -c
    nf = 1.0 / _stream_norm(k, lam, c)
    profile = StreamProfile(k=int(k), lam=float(lam), branch=branch,
                            c=tuple(float(v) for v in c), norm_factor=nf)
    phi1 = float(np.asarray(c) @ _fundamental(k, lam, 1.0, 0))
    return EigenMode(k=int(k), n=int(n), lam=float(lam), phase=phase,
                     profile=profile, eta_trace=phi1 * nf)


def zero_mode(n):
    """The k = 0 mode u = (sin(n pi x2), 0)/sqrt(pi), eta = 0, p = 0."""
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise InvalidArgumentError(f"n must be a positive integer, got {n!r}")
    lam = float(n * np.pi) ** 2
    amp = 1.0 / math.sqrt(np.pi)
    return EigenMode(k=0, n=int(n), lam=lam, phase=None,
                     profile=ZeroModeProfile(n=int(n), amplitude=amp),
                     eta_trace=0.0)


def stream_eval(profile, x2, deriv=0):
    """d^deriv phi / dx2^deriv from the stored coefficients, normalized."""
    c = np.asarray(profile.c)
    rows = _fundamental(profile.k, profile.lam, np.asarray(x2, float), deriv)
    return np.tensordot(c, rows, axes=(0, 0)) * profile.norm_factor


def mode_x1_trig(mode, component):
    """(kind, wavenumber) of the x1 factor of a field component.

    ``component`` is one of "u1", "u2", "p", "eta".  For k = 0 the u1 factor
    is the constant 1 and the others vanish identically (their profile
    factor is zero).
    """
    if mode.k == 0:
        return (COS, 0)
    if component == "u1":
        return (SIN, mode.k) if mode.phase == COSINE else (COS, mode.k)
    return (COS, mode.k) if mode.phase == COSINE else (SIN, mode.k)


def mode_profile(mode, x2, component, deriv=0):
    """x2-dependent factor of a field component, derivative order ``deriv``.

    The factor includes the mode's normalization and phase sign, so a field
    value is  profile(x2) * trig(x1)  with the trig factor from
    :func:`mode_x1_trig`.
    """
    x2 = np.asarray(x2, dtype=float)
    prof = mode.profile
    if mode.k == 0:
        if component == "u1":
            npi = prof.n * np.pi
            return prof.amplitude * npi ** deriv * np.sin(npi * x2 + deriv * 0.5 * np.pi)
        return np.zeros(x2.shape)
    k = mode.k
    if component == "u1":
        sign = -1.0 if mode.phase == COSINE else 1.0
        return sign / k * stream_eval(prof, x2, deriv + 1)
    if component == "u2":
        return stream_eval(prof, x2, deriv)
    if component == "p":
        return (stream_eval(prof, x2, deriv + 3)
                + (prof.lam - k * k) * stream_eval(prof, x2, deriv + 1)) / k ** 2
    raise InvalidArgumentError(f"unknown component {component!r}")


def eval_mode(mode, x1, x2):
    """Pointwise field values (u1, u2, p, eta) of a mode.

    Exact analytic evaluation; accepts scalars or broadcastable arrays with
    x1 in [0, 2pi) and x2 in [0, 1].
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if np.any(x1 < 0) or np.any(x1 >= TWO_PI):
        raise InvalidArgumentError("x1 must lie in [0, 2*pi)")
    if np.any(x2 < 0) or np.any(x2 > 1):
        raise InvalidArgumentError("x2 must lie in [0, 1]")
    from .quadrature import trig_eval

    t1 = trig_eval(*mode_x1_trig(mode, "u1"), x1)
    t2 = trig_eval(*mode_x1_trig(mode, "u2"), x1)
    u1 = mode_profile(mode, x2, "u1") * t1
    u2 = mode_profile(mode, x2, "u2") * t2
    p = mode_profile(mode, x2, "p") * t2
    eta = mode.eta_trace * t2
    return u1, u2, p, eta


def sector_eigenvalues(k, lam_max, density=16, tol=1e-12):
    """All eigenvalues of sector k in (0, lam_max], refined and sorted."""
    return sorted(refine_root(k, br, tol) for br in bracket_roots(k, lam_max, density))


def _sector_modes(k, lam_max, density, tol):
    modes = []
    for n, lam in enumerate(sector_eigenvalues(k, lam_max, density, tol), start=1):
        modes.append(build_mode(k, lam, COSINE, n=n))
        modes.append(build_mode(k, lam, SINE, n=n))
    return modes


def assemble_basis(lam_max, k_max=None, density=16, tol=1e-12, threads=1):
    """Gather every eigenmode with lambda <= lam_max into an ordered basis.

    ``k_max`` defaults to the smallest wavenumber whose sector is provably
    empty below the cutoff; whatever value is used, the k_max sector is
    scanned and must contain no eigenvalue <= lam_max (completeness is
    checked, not assumed).  Sector scans may run on ``threads`` workers; the
    merge is a deterministic sort, so the result is independent of the
    parallelism.
    """
    if not lam_max > 0:
        raise InvalidArgumentError("lam_max must be positive")
    if k_max is None:
        k_max = max(1, math.ceil(math.sqrt(lam_max)))
    if k_max < 1:
        raise InvalidArgumentError("k_max must be >= 1")
    if bracket_roots(k_max, lam_max, density):
        raise IncompleteBasisError(
            f"sector k={k_max} still has eigenvalues <= {lam_max}; raise k_max")
    modes = []
    n = 1
    while (n * np.pi) ** 2 <= lam_max:
        modes.append(zero_mode(n))
        n += 1
    sectors = range(1, k_max + 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(
                lambda k: _sector_modes(k, lam_max, density, tol), sectors))
    else:
        results = [_sector_modes(k, lam_max, density, tol) for k in sectors]
    for sector in results:
        modes.extend(sector)
    modes.sort(key=lambda m: (m.lam, m.k, _PHASE_RANK[m.phase]))
    metadata = {
        "schema_version": SCHEMA_VERSION,
        "lambda_max": float(lam_max),
        "k_max": int(k_max),
        "scan_density": int(density),
        "refine_tol": float(tol),
        "residual_gate": RESIDUAL_GATE,
        "multiplicity_gate": MULTIPLICITY_GATE,
        "gauss_nodes_x2": GAUSS_NODES_X2,
        "built_utc": datetime.now(timezone.utc).isoformat(),
    }
    return EigenBasis(cutoff=float(lam_max), k_range=int(k_max),
                      modes=tuple(modes), metadata=metadata)


def boundary_residuals(mode, n_samples=20):
    """Max residuals of the five mode equations on a sample grid.

    Returns a dict of sup-norm residuals (momentum_x1, momentum_x2,
    divergence, dirichlet, ventcel) normalized by the largest field value;
    used by the invariant tests.
    """
    x1 = np.linspace(0.0, TWO_PI, n_samples, endpoint=False)
    x2 = np.linspace(0.0, 1.0, n_samples)
    X1, X2 = np.meshgrid(x1, x2, indexing="ij")
    from .quadrature import trig_eval

    lam = mode.lam
    t1k, t1w = mode_x1_trig(mode, "u1")
    t2k, t2w = mode_x1_trig(mode, "u2")
    T1 = trig_eval(t1k, t1w, X1)
    T2 = trig_eval(t2k, t2w, X1)
    dT1 = trig_eval(t1k, t1w, X1, deriv=1)
    dT2 = trig_eval(t2k, t2w, X1, deriv=1)
    d2T1 = trig_eval(t1k, t1w, X1, deriv=2)
    d2T2 = trig_eval(t2k, t2w, X1, deriv=2)

    a0 = mode_profile(mode, x2, "u1")[None, :]
    a2 = mode_profile(mode, x2, "u1", deriv=2)[None, :]
    b0 = mode_profile(mode, x2, "u2")[None, :]
    b1 = mode_profile(mode, x2, "u2", deriv=1)[None, :]
    b2 = mode_profile(mode, x2, "u2", deriv=2)[None, :]
    p0 = mode_profile(mode, x2, "p")[None, :]
    p1 = mode_profile(mode, x2, "p", deriv=1)[None, :]

    u1 = a0 * T1
    u2 = b0 * T2
    scale = max(np.abs(u1).max(), np.abs(u2).max(), np.abs(p0 * T2).max(), 1e-300)
    mom1 = -lam * u1 - (a0 * d2T1 + a2 * T1) + p0 * dT2
    mom2 = -lam * u2 - (b0 * d2T2 + b2 * T2) + p1 * T2
    div = a0 * dT1 + b1 * T2
    top = -lam * b0[0, -1] * T2[:, -1] - b0[0, -1] * d2T2[:, -1] - p0[0, -1] * T2[:, -1]
    dir_walls = [np.abs(u1[:, 0]).max(), np.abs(u2[:, 0]).max(), np.abs(u1[:, -1]).max()]
    return {
        "momentum_x1": np.abs(mom1).max() / scale,
        "momentum_x2": np.abs(mom2).max() / scale,
        "divergence": np.abs(div).max() / scale,
        "dirichlet": max(dir_walls) / scale,
        "ventcel": np.abs(top).max() / scale,
    }
