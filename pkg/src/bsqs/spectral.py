"""Lateral Fourier transforms, mode bookkeeping, traces, and Parseval sums.

Fields are periodic in x1 and x2 with period 1.  The forward transform
carries the 1/(n1*n2) weight, so the (0,0) coefficient is the lateral mean
and squared lateral L2 norms are weighted sums of squared coefficients.

Storage is the half-spectrum k1 in [0, n1/2] (Hermitian symmetry recovers
k1 < 0); k2 runs over the full signed range [-n2/2+1, n2/2].  The Nyquist
wavenumbers are represented with the positive sign, matching wavenumber().
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch
from .fem1d import VerticalMesh


class ModeIndex(NamedTuple):
    k1: int
    k2: int


def wavenumber(m: ModeIndex) -> float:
    """Magnitude of the lateral wave vector: 2*pi*sqrt(k1^2 + k2^2)."""
    return 2.0 * np.pi * float(np.hypot(m.k1, m.k2))


def signed_k2(j: int, n2: int) -> int:
    """Map a storage row index j in [0, n2) to the signed wavenumber."""
    return j if j <= n2 // 2 else j - n2


@lru_cache(maxsize=None)
def mode_table(n1: int, n2: int):
    """All stored modes as a list of ModeIndex, in storage order
    (k1 major, storage row j minor)."""
    return tuple(ModeIndex(k1, signed_k2(j, n2))
                 for k1 in range(n1 // 2 + 1) for j in range(n2))


@lru_cache(maxsize=None)
def mode_weights(n1: int, n2: int) -> np.ndarray:
    """Parseval weight per stored k1 column: 1 for the self-conjugate columns
    k1 = 0 and k1 = n1/2, else 2."""
    w = np.full(n1 // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return w


@dataclass
class SpectralField:
    """Half-spectrum coefficients of one field.

    data has shape (n1//2 + 1, n2, ncomp, n_nodes): mode coefficients of the
    vertical nodal profile per component.  Scalar fields use ncomp = 1.
    """

    mesh: VerticalMesh
    degree: int
    data: np.ndarray

    @property
    def ncomp(self):
        return self.data.shape[2]

    @property
    def lateral_shape(self):
        n1h, n2 = self.data.shape[:2]
        return (2 * (n1h - 1), n2)

    def copy(self):
        return SpectralField(self.mesh, self.degree, self.data.copy())

    def zeros_like(self):
        return SpectralField(self.mesh, self.degree, np.zeros_like(self.data))

    def mode(self, k1, j):
        """Profile coefficients of stored mode (k1 index, storage row j):
        shape (ncomp, n_nodes)."""
        return self.data[k1, j]


def zero_field(mesh: VerticalMesh, degree: int, n1: int, n2: int, ncomp: int = 1):
    nn = mesh.n_nodes(degree)
    return SpectralField(mesh, degree, np.zeros((n1 // 2 + 1, n2, ncomp, nn),
                                                dtype=complex))


def forward_transform(samples: np.ndarray, mesh: VerticalMesh, degree: int
                      ) -> SpectralField:
    """Real samples (n1, n2, ncomp, n_nodes) -> half-spectrum SpectralField.

    Scalar fields may pass (n1, n2, n_nodes); a unit component axis is added.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 3:
        samples = samples[:, :, None, :]
    if samples.ndim != 4:
        raise DimensionMismatch(f"expected 3 or 4 axes, got {samples.ndim}")
    n1, n2 = samples.shape[:2]
    if n1 % 2 or n2 % 2:
        raise DimensionMismatch("lateral sample counts must be even")
    if samples.shape[3] != mesh.n_nodes(degree):
        raise DimensionMismatch(
            f"vertical axis {samples.shape[3]} != {mesh.n_nodes(degree)} nodes")
    coeff = np.fft.fft2(samples, axes=(0, 1)) / (n1 * n2)
    return SpectralField(mesh, degree, np.ascontiguousarray(coeff[: n1 // 2 + 1]))


def enforce_hermitian(field: SpectralField) -> SpectralField:
    """Project the self-conjugate k1 columns onto Hermitian symmetry in k2
    (idempotent; a no-op for spectra of real samples)."""
    data = field.data.copy()
    n2 = data.shape[1]
    for col in (0, data.shape[0] - 1):
        flipped = np.conj(data[col, (-np.arange(n2)) % n2])
        data[col] = 0.5 * (data[col] + flipped)
    return SpectralField(field.mesh, field.degree, data)


def inverse_transform(field: SpectralField) -> np.ndarray:
    """Half-spectrum -> real samples (n1, n2, ncomp, n_nodes)."""
    sym = enforce_hermitian(field)
    n1, n2 = sym.lateral_shape
    full = np.empty((n1, n2) + sym.data.shape[2:], dtype=complex)
    full[: n1 // 2 + 1] = sym.data
    for k1 in range(n1 // 2 + 1, n1):
        full[k1] = np.conj(sym.data[n1 - k1, (-np.arange(n2)) % n2])
    out = np.fft.ifft2(full, axes=(0, 1)) * (n1 * n2)
    return np.ascontiguousarray(out.real)


def lateral_grid(n1: int, n2: int):
    """Sample coordinates x1[i], x2[j] of the uniform periodic lateral grid."""
    return np.arange(n1) / n1, np.arange(n2) / n2


def sample_function(fn, n1, n2, mesh, degree, t=0.0, ncomp=None):
    """Sample callables on the lateral grid x the field's vertical nodes.

    fn is a single callable (scalar field) or a sequence of callables per
    component; None entries are zero.
    """
    x1, x2 = lateral_grid(n1, n2)
    x3 = mesh.nodes(degree)
    X1 = x1[:, None, None]
    X2 = x2[None, :, None]
    X3 = x3[None, None, :]
    comps = [fn] if callable(fn) or fn is None else list(fn)
    out = np.zeros((n1, n2, len(comps), len(x3)))
    for c, f in enumerate(comps):
        if f is not None:
            out[:, :, c, :] = np.broadcast_to(f(X1, X2, X3, t), (n1, n2, len(x3)))
    return out


def interface_trace(field: SpectralField) -> np.ndarray:
    """Per-mode complex boundary values at x3 = 0: shape (n1h, n2, ncomp)."""
    node = field.mesh.interface_node(field.degree)
    return field.data[:, :, :, node]


def parseval_weights_grid(n1: int, n2: int) -> np.ndarray:
    """Weights w[k1, j] broadcastable over stored-mode arrays."""
    return mode_weights(n1, n2)[:, None]


def lateral_l2_norm_sq(field: SpectralField, vertical_gram: np.ndarray) -> float:
    """|| field ||_{L2(box)}^2 via Parseval: sum over modes and components of
    profile^H * G * profile with the supplied vertical Gram matrix."""
    n1, n2 = field.lateral_shape
    w = parseval_weights_grid(n1, n2)
    quad = np.einsum("kjcn,nm,kjcm->kj", np.conj(field.data), vertical_gram,
                     field.data).real
    return float(np.sum(w * quad))
