"""Discrete energies, dissipation increments, balance audits, interface
residuals, and the generator dissipativity certificate.

All norms are Parseval mode sums: a weighted sum over stored modes of
profile^H * (vertical quadratic form) * profile, with weight 2 for modes whose
conjugate partner is not stored.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .config import PhysicalParams, SourceSpec
from .errors import BalanceViolation
from .fem1d import evaluate_derivative, mass
from .mode_assembly import _mats, divergence_blocks, elastic_blocks
from .spectral import (SpectralField, mode_table, parseval_weights_grid,
                       lateral_l2_norm_sq)

TWO_PI = 2.0 * np.pi


def _mode_quadratic(fld: SpectralField, form):
    """Sum over modes of weight * profile^H form(mode) profile, where form
    maps a ModeIndex to a (3x3 object grid | matrix) on the nodal profiles."""
    n1, n2 = fld.lateral_shape
    w = parseval_weights_grid(n1, n2)
    total = 0.0
    for idx, m in enumerate(mode_table(n1, n2)):
        k1i, j = divmod(idx, n2)
        A = form(m)
        prof = fld.data[k1i, j]
        if isinstance(A, np.ndarray) and A.dtype == object:
            val = sum(np.vdot(prof[a], A[a, c] @ prof[c])
                      for a in range(3) for c in range(3))
        else:
            val = np.vdot(prof[0], A @ prof[0]) if prof.shape[0] == 1 \
                else sum(np.vdot(prof[a], A @ prof[a])
                         for a in range(prof.shape[0]))
        total += w[k1i, 0] * val.real
    return float(total)


def elastic_norm_sq(u: SpectralField, p: PhysicalParams) -> float:
    """a_E(u, u) = 2 mu ||D(u)||^2 + lam ||div u||^2 via per-mode forms."""
    mats = _mats(u.mesh)

    def form(m):
        return elastic_blocks(TWO_PI * m.k1, TWO_PI * m.k2, mats["M"],
                              mats["K"], mats["Ct"], p.mu, p.lam)
    return _mode_quadratic(u, form)


def viscous_norm_sq(v: SpectralField, nu: float) -> float:
    """2 nu ||D(v)||^2 (the Stokes dissipation quadratic form)."""
    mats = _mats(v.mesh)

    def form(m):
        return elastic_blocks(TWO_PI * m.k1, TWO_PI * m.k2, mats["M"],
                              mats["K"], mats["Ct"], nu, 0.0)
    return _mode_quadratic(v, form)


def grad_norm_sq(p_b: SpectralField) -> float:
    """||grad p||^2 with lateral symbols: sum kappa^2 |p|^2 + |p'|^2."""
    mats = _mats(p_b.mesh)

    def form(m):
        kap2 = (TWO_PI * m.k1) ** 2 + (TWO_PI * m.k2) ** 2
        return kap2 * mats["Mp"] + mats["Kp"]
    return _mode_quadratic(p_b, form)


def l2_norm_sq(fld: SpectralField) -> float:
    gram = mass(fld.mesh, fld.degree)
    return lateral_l2_norm_sq(fld, gram)


def l2_norm(fld: SpectralField) -> float:
    return float(np.sqrt(max(l2_norm_sq(fld), 0.0)))


def _trace_norm_sq(values) -> float:
    """Parseval sum of squared interface trace coefficients,
    values shape (n1h, n2)."""
    n1h = values.shape[0]
    w = np.full(n1h, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return float(np.sum(w[:, None] * np.abs(values) ** 2))


def _slip_trace(s_prev, s_next, dt):
    """Tangential slip coefficients (v^{n+1} - Dt u) . e_j at x3 = 0,
    shape (2, n1h, n2)."""
    iu = s_next.u.mesh.interface_node(2)
    iv = s_next.v.mesh.interface_node(2)
    dtu = (s_next.u.data[:, :, :2, iu] - s_prev.u.data[:, :, :2, iu]) / dt
    return np.moveaxis(s_next.v.data[:, :, :2, iv] - dtu, -1, 0)


def slip_norm(s_prev, s_next, dt) -> float:
    slip = _slip_trace(s_prev, s_next, dt)
    return float(np.sqrt(sum(_trace_norm_sq(slip[j]) for j in range(2))))


def energy(s, p: PhysicalParams) -> float:
    """e = (1/2)[rho_b ||w||^2 + ||u||_E^2 + c0 ||p_b||^2 + rho_f ||v||^2]."""
    e = elastic_norm_sq(s.u, p)
    if p.rho_b > 0 and s.w is not None:
        e += p.rho_b * l2_norm_sq(s.w)
    if p.c0 > 0:
        e += p.c0 * l2_norm_sq(s.p_b)
    if p.rho_f > 0:
        e += p.rho_f * l2_norm_sq(s.v)
    return 0.5 * e


def dissipation_increment(s_prev, s_next, p: PhysicalParams, dt) -> float:
    """d_inc = dt [delta ||Dt u||_E^2 + k ||grad p^{n+1}||^2
    + 2 nu ||D(v^{n+1})||^2 + beta ||slip||^2_interface]."""
    total = p.k_perm * grad_norm_sq(s_next.p_b) \
        + viscous_norm_sq(s_next.v, p.nu)
    if p.delta > 0:
        du = s_next.u.copy()
        du.data[:] = (s_next.u.data - s_prev.u.data) / dt
        total += p.delta * elastic_norm_sq(du, p)
    slip = _slip_trace(s_prev, s_next, dt)
    total += p.beta * sum(_trace_norm_sq(slip[j]) for j in range(2))
    return dt * total


@dataclass
class EnergyReport:
    times: list = field(default_factory=list)
    e: list = field(default_factory=list)
    d_cum: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    slip: list = field(default_factory=list)
    breakdown: dict = field(default_factory=dict)
    # empirical constant of the driven inequality (None for source-free runs)
    driven_constant: float | None = None


_BREAKDOWN_KEYS = ("elastic", "storage", "kinetic_b", "kinetic_f",
                   "darcy", "viscous", "slip", "kelvin_voigt")


def audit(traj, p: PhysicalParams, sources: SourceSpec = None) -> EnergyReport:
    """Populate the per-step balance report.  For source-free runs asserts
    the dissipation inequality e_n + d_n <= e_0 up to roundoff tolerance."""
    states = traj.states
    dt = states[1].t - states[0].t if len(states) > 1 else 0.0
    rep = EnergyReport(breakdown={k: [] for k in _BREAKDOWN_KEYS})
    source_free = sources is None or sources.is_zero()
    e0 = energy(states[0], p)
    d_cum = 0.0
    work = 0.0
    tol = 1e-10 * max(e0, 1.0)
    for n, s in enumerate(states):
        e_n = energy(s, p)
        if n > 0:
            prev = states[n - 1]
            d_cum += dissipation_increment(prev, s, p, dt)
            if not source_free:
                work += dt * _source_work(prev, s, p, sources, dt)
        r_n = e_n + d_cum - e0 - work
        if source_free and r_n > tol:
            raise BalanceViolation(n, r_n)
        rep.times.append(s.t)
        rep.e.append(e_n)
        rep.d_cum.append(d_cum)
        rep.residual.append(r_n)
        rep.slip.append(slip_norm(states[max(n - 1, 0)], s, dt) if n else 0.0)
        bd = rep.breakdown
        bd["elastic"].append(0.5 * elastic_norm_sq(s.u, p))
        bd["storage"].append(0.5 * p.c0 * l2_norm_sq(s.p_b))
        bd["kinetic_b"].append(
            0.5 * p.rho_b * l2_norm_sq(s.w) if s.w is not None else 0.0)
        bd["kinetic_f"].append(0.5 * p.rho_f * l2_norm_sq(s.v))
        bd["darcy"].append(p.k_perm * grad_norm_sq(s.p_b))
        bd["viscous"].append(viscous_norm_sq(s.v, p.nu))
        if n:
            bd["slip"].append(p.beta * sum(
                _trace_norm_sq(_slip_trace(states[n - 1], s, dt)[j])
                for j in range(2)))
            if p.delta > 0:
                du = s.u.copy()
                du.data[:] = (s.u.data - states[n - 1].u.data) / dt
                bd["kelvin_voigt"].append(p.delta * elastic_norm_sq(du, p))
            else:
                bd["kelvin_voigt"].append(0.0)
        else:
            bd["slip"].append(0.0)
            bd["kelvin_voigt"].append(0.0)
    if not source_free:
        bound = e0 + _dual_source_quadrature(traj, p, sources, dt)
        peak = max(en + dn for en, dn in zip(rep.e, rep.d_cum))
        rep.driven_constant = peak / max(bound, 1e-300)
    return rep


def _pairing(load_field, state_field, gram) -> float:
    """Real L2 pairing of a sampled source with a state field, by modes."""
    n1, n2 = state_field.lateral_shape
    w = parseval_weights_grid(n1, n2)
    vals = np.einsum("kjcn,nm,kjcm->kj", np.conj(state_field.data), gram,
                     load_field.data).real
    return float(np.sum(w * vals))


def _source_work(prev, s, p, sources, dt):
    """(F_b, Dt u) + (S, p^{n+1}) + (F_f, v^{n+1}) at the implicit level."""
    from .spectral import forward_transform, sample_function

    n1, n2 = s.u.lateral_shape
    total = 0.0
    t = s.t
    if any(c is not None for c in sources.F_b):
        samp = sample_function(sources.F_b, n1, n2, s.u.mesh, 2, t=t)
        F = forward_transform(samp, s.u.mesh, 2)
        du = s.u.copy()
        du.data[:] = (s.u.data - prev.u.data) / dt
        total += _pairing(F, du, mass(s.u.mesh, 2))
    if sources.S is not None:
        samp = sample_function(sources.S, n1, n2, s.p_b.mesh, 1, t=t)
        F = forward_transform(samp, s.p_b.mesh, 1)
        total += _pairing(F, s.p_b, mass(s.p_b.mesh, 1))
    if any(c is not None for c in sources.F_f):
        samp = sample_function(sources.F_f, n1, n2, s.v.mesh, 2, t=t)
        F = forward_transform(samp, s.v.mesh, 2)
        total += _pairing(F, s.v, mass(s.v.mesh, 2))
    return total


def _dual_source_quadrature(traj, p, sources, dt):
    """Time quadrature of the source norms entering the a-priori bound:
    ||F_b||_{L2}^2 plus discrete dual norms of S (against the Darcy form) and
    F_f (against the viscous form on the divergence-free subspace)."""
    from .spectral import forward_transform, sample_function

    s0 = traj.states[0]
    n1, n2 = s0.u.lateral_shape
    mb, mf = s0.u.mesh, s0.v.mesh
    bm = _mats(mb)
    fm = _mats(mf)
    w = parseval_weights_grid(n1, n2)
    pmask = mb.free_mask(1)
    pidx = np.flatnonzero(pmask)
    vmask = mf.free_mask(2)
    vidx = np.flatnonzero(vmask)
    total = 0.0
    for s in traj.states[1:]:
        t = s.t
        if any(c is not None for c in sources.F_b):
            samp = sample_function(sources.F_b, n1, n2, mb, 2, t=t)
            F = forward_transform(samp, mb, 2)
            total += dt * lateral_l2_norm_sq(F, bm["M"])
        if sources.S is not None:
            samp = sample_function(sources.S, n1, n2, mb, 1, t=t)
            F = forward_transform(samp, mb, 1)
            for idx, m in enumerate(mode_table(n1, n2)):
                k1i, j = divmod(idx, n2)
                kap2 = (TWO_PI * m.k1) ** 2 + (TWO_PI * m.k2) ** 2
                G = (kap2 * bm["Mp"] + bm["Kp"])[np.ix_(pidx, pidx)]
                load = (bm["Mp"] @ F.data[k1i, j, 0])[pidx]
                total += dt * w[k1i, 0] * np.vdot(
                    load, np.linalg.solve(G, load)).real
        if any(c is not None for c in sources.F_f):
            samp = sample_function(sources.F_f, n1, n2, mf, 2, t=t)
            F = forward_transform(samp, mf, 2)
            for idx, m in enumerate(mode_table(n1, n2)):
                k1i, j = divmod(idx, n2)
                kap1, kap2s = TWO_PI * m.k1, TWO_PI * m.k2
                aV = elastic_blocks(kap1, kap2s, fm["M"], fm["K"], fm["Ct"],
                                    p.nu, 0.0)
                AV = np.block([[np.asarray(aV[a][c], dtype=complex)
                                [np.ix_(vidx, vidx)] for c in range(3)]
                               for a in range(3)])
                dv = divergence_blocks(kap1, kap2s, fm["Mm"], fm["Cm"])
                DivF = np.hstack([np.asarray(dd, dtype=complex)[:, vidx]
                                  for dd in dv])
                Z = scipy.linalg.null_space(DivF)
                load = np.concatenate(
                    [(fm["M"] @ F.data[k1i, j, a])[vidx] for a in range(3)])
                zl = Z.conj().T @ load
                Gz = Z.conj().T @ AV @ Z
                total += dt * w[k1i, 0] * np.vdot(
                    zl, np.linalg.solve(Gz, zl)).real
    return total


def generator_dissipativity_check(G, W):
    """Max eigenvalue of the Hermitian part of W G, normalized by ||W G||.
    The certificate passes when the result is <= 1e-8."""
    WG = W @ G
    H = 0.5 * (WG + WG.conj().T)
    lam = float(np.max(scipy.linalg.eigvalsh(H)))
    scale = float(np.linalg.norm(WG, 2))
    return lam / max(scale, 1e-300)


def interface_residuals(s_prev, s_next, p: PhysicalParams, dt):
    """L2(interface) norms of the pointwise residuals of the kinematic,
    tangential-slip, and normal-stress coupling conditions on solver output.

    Returns dict with keys "kinematic", "slip", "normal_stress".
    """
    mb, mf = s_next.u.mesh, s_next.v.mesh
    n1, n2 = s_next.u.lateral_shape
    iu = mb.interface_node(2)
    iv = mf.interface_node(2)
    ipb = mb.interface_node(1)
    ipf = mf.interface_node(1)
    n1h = n1 // 2 + 1
    r1 = np.zeros((n1h, n2), dtype=complex)
    r2 = np.zeros((2, n1h, n2), dtype=complex)
    r4 = np.zeros((n1h, n2), dtype=complex)
    dtu = (s_next.u.data - s_prev.u.data) / dt
    for idx, m in enumerate(mode_table(n1, n2)):
        k1i, j = divmod(idx, n2)
        kap = (TWO_PI * m.k1, TWO_PI * m.k2)
        pb = s_next.p_b.data[k1i, j, 0]
        v = s_next.v.data[k1i, j]
        # second-order one-sided stencil so the probe's own truncation error
        # does not dominate the interface mismatch being measured
        h = 1.0 / mb.ncells
        dpb = (-3.0 * pb[ipb] + 4.0 * pb[ipb + 1] - pb[ipb + 2]) / (2.0 * h)
        dv = [evaluate_derivative(mf, 2, v[a], 0.0) for a in range(3)]
        slip = [v[a][iv] - dtu[k1i, j, a, iu] for a in range(2)]
        r1[k1i, j] = -p.k_perm * dpb - (v[2][iv] - dtu[k1i, j, 2, iu])
        for a in range(2):
            r2[a, k1i, j] = p.beta * slip[a] \
                + p.nu * (dv[a] + 1j * kap[a] * v[2][iv])
        r4[k1i, j] = pb[ipb] - s_next.p_f.data[k1i, j, 0, ipf] \
            + 2.0 * p.nu * dv[2]
    return {
        "kinematic": float(np.sqrt(_trace_norm_sq(r1))),
        "slip": float(np.sqrt(sum(_trace_norm_sq(r2[a]) for a in range(2)))),
        "normal_stress": float(np.sqrt(_trace_norm_sq(r4))),
    }
