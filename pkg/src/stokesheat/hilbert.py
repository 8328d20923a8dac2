"""Modal representation of states, semigroup and control operators,
observation Gramians, and eigenbasis persistence.

All evolution and all inner products are modal: a state is a coefficient
vector over an orthonormal eigenbasis, the semigroup is a diagonal
exponential, and observation quantities reduce to the modal Gramian
M[j, l] = integral over the observation rectangle of u_j . u_l, assembled
with closed-form x1 integrals and Gauss-Legendre quadrature in x2.
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import (
    BasisFormatError,
    BasisVersionError,
    InvalidArgumentError,
)
from .quadrature import GAUSS_NODES_X2, gauss_legendre, trig_pair_integral
from .spectral import (
    COSINE,
    SCHEMA_VERSION,
    SINE,
    EigenBasis,
    EigenMode,
    StreamProfile,
    TWO_PI,
    ZeroModeProfile,
    mode_profile,
    mode_x1_trig,
)


@dataclass(frozen=True)
class ObservationRegion:
    """Axis-aligned observation/control rectangle omega.

    Proper observation regions are strictly inside the strip in x2; the
    closed endpoints are accepted so the full strip can be used for the
    Parseval-split identity M(Omega) + N = I, where the quadrature is still
    exact.
    """

    x1: tuple
    x2: tuple

    def __post_init__(self):
        a1, b1 = self.x1
        a2, b2 = self.x2
        if not (0.0 <= a1 < b1 <= TWO_PI):
            raise InvalidArgumentError(
                f"x1 interval must satisfy 0 <= a < b <= 2*pi, got {self.x1!r}")
        if not (0.0 <= a2 < b2 <= 1.0):
            raise InvalidArgumentError(
                f"x2 interval must satisfy 0 <= a < b <= 1, got {self.x2!r}")

    @property
    def area(self):
        return (self.x1[1] - self.x1[0]) * (self.x2[1] - self.x2[0])


FULL_REGION = ObservationRegion(x1=(0.0, TWO_PI), x2=(0.0, 1.0))


@dataclass(frozen=True)
class StateVector:
    """Element of the state space as coefficients over an eigenbasis."""

    basis: EigenBasis
    coeffs: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.coeffs, dtype=float)
        if a.shape != (len(self.basis),):
            raise InvalidArgumentError(
                f"coefficient length {a.shape} does not match basis size "
                f"{len(self.basis)}")
        object.__setattr__(self, "coeffs", a)


@dataclass(frozen=True)
class ModalGramian:
    basis_id: str
    region: ObservationRegion
    matrix: np.ndarray


def _check_same_basis(x, y):
    if x.basis.basis_id != y.basis.basis_id:
        raise InvalidArgumentError("states live on different bases")


def check_gramian(basis, gramian):
    """Reject a Gramian that was assembled on a different basis."""
    if gramian.basis_id != basis.basis_id:
        raise InvalidArgumentError(
            "observation Gramian was assembled on a different basis")
    return gramian


def inner(x, y):
    """H inner product; Parseval over the orthonormal basis."""
    _check_same_basis(x, y)
    return float(np.dot(x.coeffs, y.coeffs))


def norm(x):
    return float(np.linalg.norm(x.coeffs))


def semigroup(x, t):
    """Heat semigroup: coefficient j decays by exp(-lambda_j t)."""
    if t < 0:
        raise InvalidArgumentError(f"time must be nonnegative, got {t!r}")
    return StateVector(x.basis, x.coeffs * np.exp(-x.basis.lambdas * t))


def project(x, lam_cap):
    """Orthogonal projection onto the span of modes with lambda <= lam_cap."""
    keep = x.basis.lambdas <= lam_cap
    return StateVector(x.basis, np.where(keep, x.coeffs, 0.0))


def basis_state(basis, j):
    a = np.zeros(len(basis))
    a[j] = 1.0
    return StateVector(basis, a)


def _field_tables(basis, x2_nodes, deriv=0):
    """Per-mode x1 trig descriptors and x2 profile values for u1 and u2."""
    n = len(basis)
    kinds = np.empty((2, n), dtype=int)
    waves = np.empty((2, n))
    vals = np.empty((2, n, len(x2_nodes)))
    for j, mode in enumerate(basis.modes):
        for c, comp in enumerate(("u1", "u2")):
            kind, wav = mode_x1_trig(mode, comp)
            kinds[c, j] = kind
            waves[c, j] = wav
            vals[c, j] = mode_profile(mode, x2_nodes, comp, deriv=deriv)
    return kinds, waves, vals


def obs_gramian(basis, region):
    """Velocity observation Gramian M[j, l] = int_omega u_j . u_l dx."""
    x2, w2 = gauss_legendre(GAUSS_NODES_X2, *region.x2)
    kinds, waves, vals = _field_tables(basis, x2)
    a1, b1 = region.x1
    m = np.zeros((len(basis), len(basis)))
    for c in range(2):
        x1_ints = trig_pair_integral(kinds[c][:, None], waves[c][:, None],
                                     kinds[c][None, :], waves[c][None, :],
                                     a1, b1)
        x2_ints = (vals[c] * w2) @ vals[c].T
        m += x1_ints * x2_ints
    m = 0.5 * (m + m.T)
    m.setflags(write=False)
    return ModalGramian(basis_id=basis.basis_id, region=region, matrix=m)


def sampled_velocity_factor(basis, indices, region, nodes_x1=None):
    """Upper-triangular factor R with R^T R = M on the given index set.

    R is the QR compression of the cancellation-free matrix of velocity
    samples at tensor quadrature points of the region (entries are plain
    function values times square-root weights).  Its small singular values
    resolve near-dependences of the restricted modes far below what an
    eigendecomposition of the assembled Gramian can see, which is what the
    spectral-inequality and observability solvers need.
    """
    import math as _math

    from .quadrature import trig_eval

    a1, b1 = region.x1
    if nodes_x1 is None:
        k_max = max((basis.modes[j].k for j in indices), default=1)
        nodes_x1 = max(64, int(_math.ceil(0.75 * k_max * (b1 - a1))) + 32)
    x1, w1 = gauss_legendre(nodes_x1, a1, b1)
    x2, w2 = gauss_legendre(GAUSS_NODES_X2, *region.x2)
    sqw = np.sqrt(np.outer(w1, w2))
    rows = []
    for comp in ("u1", "u2"):
        tab = np.empty((len(indices), nodes_x1, GAUSS_NODES_X2))
        for col, j in enumerate(indices):
            mode = basis.modes[j]
            kind, wav = mode_x1_trig(mode, comp)
            tab[col] = np.outer(trig_eval(kind, wav, x1),
                                mode_profile(mode, x2, comp))
        tab *= sqw[None, :, :]
        rows.append(tab.reshape(len(indices), -1).T)
    return np.linalg.qr(np.vstack(rows), mode="r")


def trace_gramian(basis):
    """Closed-form boundary-trace Gramian N[j, l] = int_I eta_j eta_l dx1."""
    n = len(basis)
    kinds = np.empty(n, dtype=int)
    waves = np.empty(n)
    amps = np.empty(n)
    for j, mode in enumerate(basis.modes):
        kind, wav = mode_x1_trig(mode, "u2")
        kinds[j] = kind
        waves[j] = wav
        amps[j] = mode.eta_trace
    x1_ints = trig_pair_integral(kinds[:, None], waves[:, None],
                                 kinds[None, :], waves[None, :], 0.0, TWO_PI)
    mat = np.outer(amps, amps) * x1_ints
    return 0.5 * (mat + mat.T)


def rayleigh_matrix(basis):
    """Operator quadratic form <A0 w_i, w_j> through the Dirichlet integrals.

    Computed as -(int_Omega grad u_i : grad u_j + int_I eta_i' eta_j'),
    which for exact eigenfunctions is -lambda_i times the identity; the
    deviation from that is a direct measure of mode quality independent of
    the orthonormality check.
    """
    from .quadrature import COS, SIN, trig_pair_integral

    x2, w2 = gauss_legendre(GAUSS_NODES_X2, 0.0, 1.0)
    n = len(basis)
    total = np.zeros((n, n))
    for comp in ("u1", "u2"):
        kinds = np.empty(n, dtype=int)
        waves = np.empty(n)
        v0 = np.empty((n, len(x2)))
        v1 = np.empty((n, len(x2)))
        for j, mode in enumerate(basis.modes):
            kinds[j], waves[j] = mode_x1_trig(mode, comp)
            v0[j] = mode_profile(mode, x2, comp)
            v1[j] = mode_profile(mode, x2, comp, deriv=1)
        # d/dx1 of sin(kx) is +k cos(kx); of cos(kx) is -k sin(kx)
        dkinds = np.where(kinds == SIN, COS, SIN)
        dsign = np.where(kinds == SIN, 1.0, -1.0) * waves
        x1_plain = trig_pair_integral(kinds[:, None], waves[:, None],
                                      kinds[None, :], waves[None, :],
                                      0.0, TWO_PI)
        x1_deriv = trig_pair_integral(dkinds[:, None], waves[:, None],
                                      dkinds[None, :], waves[None, :],
                                      0.0, TWO_PI)
        v0s = v0 * dsign[:, None]
        total += x1_deriv * ((v0s * w2) @ v0s.T)      # d/dx1 part
        total += x1_plain * ((v1 * w2) @ v1.T)        # d/dx2 part
    kinds = np.empty(n, dtype=int)
    waves = np.empty(n)
    amps = np.empty(n)
    for j, mode in enumerate(basis.modes):
        kinds[j], waves[j] = mode_x1_trig(mode, "u2")
        amps[j] = mode.eta_trace
    dkinds = np.where(kinds == SIN, COS, SIN)
    dsign = np.where(kinds == SIN, 1.0, -1.0) * waves
    x1_deriv = trig_pair_integral(dkinds[:, None], waves[:, None],
                                  dkinds[None, :], waves[None, :],
                                  0.0, TWO_PI)
    total += x1_deriv * np.outer(amps * dsign, amps * dsign)
    return -0.5 * (total + total.T)


def apply_B(gramian, g, indices):
    """Forcing coefficients of a modal control supported on ``indices``.

    With f = sum_j g_j u_j restricted to the region, mode l is forced by
    (M g)_l; linear in g and extended over the full basis.
    """
    m = gramian.matrix
    g = np.asarray(g, dtype=float)
    idx = np.asarray(indices, dtype=int)
    if g.shape != idx.shape:
        raise InvalidArgumentError("control coefficients and index set differ in length")
    if len(idx) and (idx.min() < 0 or idx.max() >= m.shape[0]):
        raise InvalidArgumentError("control index outside the basis")
    return m[:, idx] @ g


# ---------------------------------------------------------------------------
# persistence

def _mode_record(mode):
    rec = {"k": mode.k, "n": mode.n, "phase": mode.phase,
           "lambda": mode.lam, "eta_trace": mode.eta_trace}
    if isinstance(mode.profile, ZeroModeProfile):
        rec["amplitude"] = mode.profile.amplitude
    else:
        rec["branch"] = mode.profile.branch
        rec["c"] = list(mode.profile.c)
        rec["norm_factor"] = mode.profile.norm_factor
    return rec


def _mode_from_record(rec):
    try:
        k = int(rec["k"])
        n = int(rec["n"])
        lam = float(rec["lambda"])
        eta = float(rec["eta_trace"])
        phase = rec["phase"]
        if k == 0:
            profile = ZeroModeProfile(n=n, amplitude=float(rec["amplitude"]))
        else:
            c = rec["c"]
            if len(c) != 4:
                raise BasisFormatError("profile must carry 4 coefficients")
            profile = StreamProfile(k=k, lam=lam, branch=str(rec["branch"]),
                                    c=tuple(float(v) for v in c),
                                    norm_factor=float(rec["norm_factor"]))
        if phase not in (None, COSINE, SINE):
            raise BasisFormatError(f"unknown phase {phase!r}")
        return EigenMode(k=k, n=n, lam=lam, phase=phase, profile=profile,
                         eta_trace=eta)
    except (KeyError, TypeError, ValueError) as exc:
        raise BasisFormatError(f"malformed mode record: {exc}") from exc


def basis_document(basis):
    """Canonical text serialization of a basis (deterministic bytes)."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "cutoff": basis.cutoff,
        "k_range": basis.k_range,
        "metadata": basis.metadata,
        "modes": [_mode_record(m) for m in basis.modes],
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def save_basis(basis, path):
    """Write the basis cache atomically; floats round-trip losslessly."""
    text = basis_document(basis)
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def load_basis(path):
    """Reload a basis cache; rejects version mismatch and malformed files."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise BasisFormatError(f"basis cache {path!r} is malformed: {exc}") from exc
    if not isinstance(doc, dict):
        raise BasisFormatError("basis cache root must be an object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise BasisVersionError(
            f"basis cache schema {version!r} unsupported (want {SCHEMA_VERSION})")
    try:
        modes = tuple(_mode_from_record(rec) for rec in doc["modes"])
        basis = EigenBasis(cutoff=float(doc["cutoff"]),
                           k_range=int(doc["k_range"]),
                           modes=modes, metadata=dict(doc["metadata"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise BasisFormatError(f"basis cache {path!r} is malformed: {exc}") from exc
    return basis
