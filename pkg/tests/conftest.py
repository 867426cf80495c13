"""Shared fixtures and helpers for the test suite."""

import numpy as np
import pytest

from bsqs.config import Discretization, PhysicalParams, RunConfig


def make_params(**overrides):
    """A fully non-degenerate parameter set; override freely."""
    base = dict(lam=1.0, mu=1.0, alpha=1.0, c0=1.0, k_perm=1.0,
                nu=1.0, beta=1.0, rho_b=1.0, rho_f=1.0, delta=0.5)
    base.update(overrides)
    return PhysicalParams(**base)


def make_config(params=None, **disc_overrides):
    disc_kwargs = dict(n1=4, n2=4, nb=4, nf=4, dt=1 / 16, t_end=4 / 16)
    disc_kwargs.update(disc_overrides)
    return RunConfig(params=params or make_params(),
                     disc=Discretization(**disc_kwargs))


def smooth_initial_callables(a=0.1, b=0.05, c=0.2, alpha=1.0):
    """Smooth admissible initial data with d0 = alpha * div u0 in closed form,
    so the same data works in every storage regime.

    u0 = (a cos(2 pi x1)(1-x3), b sin(2 pi x2)(1-x3), c (1-x3)^2)
    div u0 = -2 pi a sin(2 pi x1)(1-x3) + 2 pi b cos(2 pi x2)(1-x3)
             - 2 c (1-x3)
    v0 = divergence-free single-mode field vanishing at x3 = -1.
    """
    tp = 2 * np.pi
    u0 = (lambda x1, x2, x3, t: a * np.cos(tp * x1) * (1 - x3),
          lambda x1, x2, x3, t: b * np.sin(tp * x2) * (1 - x3),
          lambda x1, x2, x3, t: c * np.cos(tp * x1) * (1 - x3) ** 2)
    # div of the u0 above (third component depends on x1, fine for d0)
    d0 = lambda x1, x2, x3, t: alpha * (
        -tp * a * np.sin(tp * x1) * (1 - x3)
        + tp * b * np.cos(tp * x2) * (1 - x3)
        - 2 * c * np.cos(tp * x1) * (1 - x3))
    u1 = (lambda x1, x2, x3, t: 0.3 * np.sin(tp * x2) * (1 - x3) ** 2,
          lambda x1, x2, x3, t: 0.1 * np.cos(tp * x1) * (1 - x3),
          lambda x1, x2, x3, t: 0.2 * np.cos(tp * x2) * (1 - x3))
    # v = (-sin(2 pi x1) f'(x3)/(2 pi), 0, cos(2 pi x1) f(x3)), f = (1+x3)^2
    v0 = (lambda x1, x2, x3, t: -np.sin(tp * x1) * 2 * (1 + x3) / tp,
          lambda x1, x2, x3, t: np.zeros(np.broadcast_shapes(
              np.shape(x1), np.shape(x2), np.shape(x3))),
          lambda x1, x2, x3, t: np.cos(tp * x1) * (1 + x3) ** 2)
    return {"u0": u0, "u1": u1, "d0": d0, "v0": v0}


def drop_nyquist(samples):
    """Zero the lateral Nyquist modes of real sample arrays (axes 0, 1).

    Band-limited data keeps real-space comparisons between the mode pipeline
    and dense lateral operators exact: at the Nyquist columns a one-signed
    wavenumber convention is used, where differentiation of real samples is
    not closed over real fields.
    """
    spec = np.fft.fft2(samples, axes=(0, 1))
    n1, n2 = samples.shape[:2]
    spec[n1 // 2] = 0.0
    spec[:, n2 // 2] = 0.0
    return np.fft.ifft2(spec, axes=(0, 1)).real


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)
