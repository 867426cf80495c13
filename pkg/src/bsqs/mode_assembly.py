"""Per-Fourier-mode assembly and solution of one implicit-Euler step of the
coupled Biot-Stokes weak formulation, plus the discrete dynamics generator.

For a lateral mode (k1, k2) the lateral derivatives become multiplication by
i*2*pi*k1 and i*2*pi*k2, and all interface integrals reduce to point
evaluations at x3 = 0.  Unknowns per mode: displacement u (3 x P2 on the Biot
box, clamped at x3=1), pore pressure p (P1 Biot, zero at x3=1), fluid
velocity v (3 x P2 on the fluid box, clamped at x3=-1), and fluid pressure
p_f (P1 fluid, unconstrained).  The elastic velocity w is eliminated
algebraically (w^{n+1} = (u^{n+1} - u^n)/dt) when rho_b > 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .config import PhysicalParams
from .errors import (DegenerateParams, MeshMismatch, ModeMismatch,
                     SingularSystem, TooLarge)
from .fem1d import VerticalMesh, d_trial, mass, mixed_div, mixed_mass, stiffness
from .spectral import ModeIndex, signed_k2

TWO_PI = 2.0 * np.pi

# slot order in the monolithic per-mode vector
SLOTS = ("u1", "u2", "u3", "p", "v1", "v2", "v3", "pf")


@dataclass(frozen=True)
class Layout:
    """DOF bookkeeping for one mode system (mode independent)."""

    mb: VerticalMesh
    mf: VerticalMesh

    @property
    def full_sizes(self):
        nbu = self.mb.n_nodes(2)
        nbp = self.mb.n_nodes(1)
        nfu = self.mf.n_nodes(2)
        nfp = self.mf.n_nodes(1)
        return (nbu, nbu, nbu, nbp, nfu, nfu, nfu, nfp)

    @property
    def free_masks(self):
        ub = self.mb.free_mask(2)
        pb = self.mb.free_mask(1)
        vf = self.mf.free_mask(2)
        pf = np.ones(self.mf.n_nodes(1), dtype=bool)
        return (ub, ub, ub, pb, vf, vf, vf, pf)

    @property
    def n_free(self):
        return sum(int(m.sum()) for m in self.free_masks)

    def free_indices(self):
        """Indices of free DOFs within the concatenated full-node vector."""
        idx, off = [], 0
        for size, mask in zip(self.full_sizes, self.free_masks):
            idx.append(off + np.flatnonzero(mask))
            off += size
        return np.concatenate(idx)

    def full_offsets(self):
        offs, off = [], 0
        for size in self.full_sizes:
            offs.append(off)
            off += size
        return offs

    def pack(self, u, p, v, pf=None):
        """Full-node arrays -> concatenated full vector."""
        nfp = self.full_sizes[-1]
        parts = [u[0], u[1], u[2], p, v[0], v[1], v[2],
                 np.zeros(nfp, dtype=complex) if pf is None else pf]
        return np.concatenate(parts)

    def unpack(self, x_free):
        """Free-DOF solution vector -> dict of full nodal arrays."""
        full = np.zeros(sum(self.full_sizes), dtype=complex)
        full[self.free_indices()] = x_free
        offs = self.full_offsets()
        out = {}
        for name, off, size in zip(SLOTS, offs, self.full_sizes):
            out[name] = full[off:off + size]
        u = np.stack([out["u1"], out["u2"], out["u3"]])
        v = np.stack([out["v1"], out["v2"], out["v3"]])
        return u, out["p"], v, out["pf"]


@dataclass
class ModeBlockSystem:
    """Monolithic complex system for one mode and one implicit step."""

    mode: ModeIndex
    dt: float
    layout: Layout
    matrix: np.ndarray
    rhs: np.ndarray


def elastic_blocks(kap1, kap2, M, K, Ct, mu, lam):
    """3x3 block grid of the stress-strain sesquilinear form a_E with lateral
    Fourier symbols: 2*mu*(D(u), D(xi)) + lam*(div u, div xi).

    The Stokes viscous form 2*nu*(D(v), D(zeta)) is the same grid with
    mu -> nu, lam -> 0.  Ct[i, j] = integral(phi_j' phi_i); Cg = Ct^T.
    """
    Cg = Ct.T
    k1s, k2s = kap1 * kap1, kap2 * kap2
    B = np.empty((3, 3), dtype=object)
    B[0, 0] = (2 * mu * k1s + mu * k2s + lam * k1s) * M + mu * K
    B[1, 1] = (2 * mu * k2s + mu * k1s + lam * k2s) * M + mu * K
    B[2, 2] = (2 * mu + lam) * K + mu * (k1s + k2s) * M
    B[0, 1] = B[1, 0] = (mu + lam) * kap1 * kap2 * M
    B[0, 2] = 1j * kap1 * (mu * Cg - lam * Ct)
    B[1, 2] = 1j * kap2 * (mu * Cg - lam * Ct)
    B[2, 0] = 1j * kap1 * (lam * Cg - mu * Ct)
    B[2, 1] = 1j * kap2 * (lam * Cg - mu * Ct)
    return B


def divergence_blocks(kap1, kap2, Mm, Cm):
    """(div u, q) with P1 test rows and P2 trial columns per velocity
    component: [i*kap1*Mm, i*kap2*Mm, Cm]."""
    return (1j * kap1 * Mm, 1j * kap2 * Mm, Cm)


@lru_cache(maxsize=None)
def _mats(mesh: VerticalMesh):
    return {
        "M": mass(mesh, 2), "K": stiffness(mesh, 2), "Ct": d_trial(mesh, 2),
        "Mp": mass(mesh, 1), "Kp": stiffness(mesh, 1),
        "Mm": mixed_mass(mesh), "Cm": mixed_div(mesh),
    }


def _symbols(mode: ModeIndex):
    return TWO_PI * mode.k1, TWO_PI * mode.k2


def build_step_matrix(mode: ModeIndex, p: PhysicalParams, mb: VerticalMesh,
                      mf: VerticalMesh, dt: float, steady: bool = False
                      ) -> tuple[np.ndarray, Layout]:
    """Assemble the free-DOF system matrix for one implicit-Euler step."""
    if mb.box != "biot" or mf.box != "fluid":
        raise MeshMismatch("expected (biot, fluid) mesh pair")
    lay = Layout(mb, mf)
    kap1, kap2 = _symbols(mode)
    b = _mats(mb)
    f = _mats(mf)
    offs = lay.full_offsets()
    N = sum(lay.full_sizes)
    A = np.zeros((N, N), dtype=complex)

    def put(row_slot, col_slot, block):
        r, c = SLOTS.index(row_slot), SLOTS.index(col_slot)
        A[offs[r]:offs[r] + lay.full_sizes[r],
          offs[c]:offs[c] + lay.full_sizes[c]] += block

    ub_if = [offs[a] + mb.interface_node(2) for a in range(3)]
    p_if = offs[3] + mb.interface_node(1)
    v_if = [offs[4 + a] + mf.interface_node(2) for a in range(3)]

    # --- E-rows: Biot momentum tested with xi ---
    aE = elastic_blocks(kap1, kap2, b["M"], b["K"], b["Ct"], p.mu, p.lam)
    visc_coeff = 1.0 if steady else 1.0 + p.delta / dt
    for a in range(3):
        for c in range(3):
            put(f"u{a+1}", f"u{c+1}", visc_coeff * aE[a, c])
        if p.rho_b > 0 and not steady:
            put(f"u{a+1}", f"u{a+1}", (p.rho_b / dt**2) * b["M"])
    # -alpha (p, div xi): Hermitian transpose of the divergence pairing
    dvb = divergence_blocks(kap1, kap2, b["Mm"], b["Cm"])
    for a in range(3):
        put(f"u{a+1}", "p", -p.alpha * dvb[a].conj().T)
    # interface: -p(0) conj(xi3(0))
    A[ub_if[2], p_if] += -1.0
    # BJS slip: -beta (v_j(0) - Dt u_j(0)) conj(xi_j(0)), j = 1, 2
    for j in range(2):
        A[ub_if[j], v_if[j]] += -p.beta
        if not steady:
            A[ub_if[j], ub_if[j]] += p.beta / dt

    # --- D-row: fluid content balance tested with q ---
    darcy = p.k_perm * ((kap1**2 + kap2**2) * b["Mp"] + b["Kp"])
    put("p", "p", darcy)
    if not steady:
        if p.c0 > 0:
            put("p", "p", (p.c0 / dt) * b["Mp"])
        for a in range(3):
            put("p", f"u{a+1}", (p.alpha / dt) * dvb[a])
    # interface: -(v3(0) - Dt u3(0)) conj(q(0))
    A[p_if, v_if[2]] += -1.0
    if not steady:
        A[p_if, ub_if[2]] += 1.0 / dt

    # --- F-rows: Stokes momentum tested with zeta ---
    aV = elastic_blocks(kap1, kap2, f["M"], f["K"], f["Ct"], p.nu, 0.0)
    dvf = divergence_blocks(kap1, kap2, f["Mm"], f["Cm"])
    for a in range(3):
        for c in range(3):
            put(f"v{a+1}", f"v{c+1}", aV[a, c])
        if p.rho_f > 0 and not steady:
            put(f"v{a+1}", f"v{a+1}", (p.rho_f / dt) * f["M"])
        put(f"v{a+1}", "pf", -dvf[a].conj().T)
    # interface: +p(0) conj(zeta3(0))
    A[v_if[2], p_if] += 1.0
    # BJS slip: +beta (v_j(0) - Dt u_j(0)) conj(zeta_j(0))
    for j in range(2):
        A[v_if[j], v_if[j]] += p.beta
        if not steady:
            A[v_if[j], ub_if[j]] += -p.beta / dt

    # --- C-row: incompressibility tested with q_f ---
    for a in range(3):
        put("pf", f"v{a+1}", dvf[a])

    idx = lay.free_indices()
    return A[np.ix_(idx, idx)], lay


def build_step_rhs(mode: ModeIndex, p: PhysicalParams, lay: Layout, dt: float,
                   prior=None, sources=None, loads=None, interface_data=None,
                   steady: bool = False) -> np.ndarray:
    """Right-hand side of the step system.

    prior: (u, w, p_b, v) full nodal arrays of the previous time level (w may
    be None when rho_b = 0).  sources: (Fb, S, Ff) mode coefficients on the
    fields' nodal grids (multiplied by mass matrices here); loads: (Lb, LS,
    Lf) pre-integrated mode load vectors added verbatim.  interface_data:
    optional manufactured interface defects (g1, g2, g3, g4) with
    g2 = (g2_1, g2_2) and g3 a 3-vector.
    """
    mb, mf = lay.mb, lay.mf
    kap1, kap2 = _symbols(mode)
    b = _mats(mb)
    f = _mats(mf)
    offs = lay.full_offsets()
    rhs = np.zeros(sum(lay.full_sizes), dtype=complex)
    ub_if = [offs[a] + mb.interface_node(2) for a in range(3)]
    p_if = offs[3] + mb.interface_node(1)
    v_if = [offs[4 + a] + mf.interface_node(2) for a in range(3)]
    dvb = divergence_blocks(kap1, kap2, b["Mm"], b["Cm"])

    if sources is not None:
        Fb, S, Ff = sources
        if Fb is not None:
            for a in range(3):
                rhs[offs[a]:offs[a] + lay.full_sizes[a]] += b["M"] @ Fb[a]
        if S is not None:
            rhs[offs[3]:offs[3] + lay.full_sizes[3]] += b["Mp"] @ S
        if Ff is not None:
            for a in range(3):
                rhs[offs[4 + a]:offs[4 + a] + lay.full_sizes[4 + a]] += f["M"] @ Ff[a]

    if loads is not None:
        Lb, LS, Lf = loads
        if Lb is not None:
            for a in range(3):
                rhs[offs[a]:offs[a] + lay.full_sizes[a]] += Lb[a]
        if LS is not None:
            rhs[offs[3]:offs[3] + lay.full_sizes[3]] += LS
        if Lf is not None:
            for a in range(3):
                rhs[offs[4 + a]:offs[4 + a] + lay.full_sizes[4 + a]] += Lf[a]

    if prior is not None and not steady:
        un, wn, pn, vn = prior
        aE = elastic_blocks(kap1, kap2, b["M"], b["K"], b["Ct"], p.mu, p.lam)
        for a in range(3):
            sl = slice(offs[a], offs[a] + lay.full_sizes[a])
            if p.rho_b > 0:
                rhs[sl] += (p.rho_b / dt**2) * (b["M"] @ (un[a] + dt * wn[a]))
            if p.delta > 0:
                for c in range(3):
                    rhs[sl] += (p.delta / dt) * (aE[a, c] @ un[c])
        sl = slice(offs[3], offs[3] + lay.full_sizes[3])
        if p.c0 > 0:
            rhs[sl] += (p.c0 / dt) * (b["Mp"] @ pn)
        for a in range(3):
            rhs[sl] += (p.alpha / dt) * (dvb[a] @ un[a])
        rhs[p_if] += un[2][mb.interface_node(2)] / dt
        for j in range(2):
            rhs[ub_if[j]] += (p.beta / dt) * un[j][mb.interface_node(2)]
            rhs[v_if[j]] += -(p.beta / dt) * un[j][mb.interface_node(2)]
        if p.rho_f > 0:
            for a in range(3):
                sl = slice(offs[4 + a], offs[4 + a] + lay.full_sizes[4 + a])
                rhs[sl] += (p.rho_f / dt) * (f["M"] @ vn[a])

    if interface_data is not None:
        g1, g2, g3, g4 = interface_data
        # Biot outward normal at the interface is -e3, so the stress-balance
        # defect enters the displacement rows with a minus sign
        for a in range(3):
            rhs[ub_if[a]] += -g3[a]
        for j in range(2):
            rhs[ub_if[j]] += -g2[j]
            rhs[v_if[j]] += g2[j]
        rhs[ub_if[2]] += -g4
        rhs[v_if[2]] += g4
        rhs[p_if] += g1

    return rhs[lay.free_indices()]


def assemble_step_system(mode: ModeIndex, p: PhysicalParams, mb: VerticalMesh,
                         mf: VerticalMesh, dt: float, prior=None, sources=None,
                         interface_data=None, steady: bool = False
                         ) -> ModeBlockSystem:
    """One-shot assembly of matrix and right-hand side for one mode step."""
    if prior is not None:
        un = prior[0]
        if un.shape[-1] != mb.n_nodes(2):
            raise MeshMismatch("prior state does not match the Biot mesh")
    A, lay = build_step_matrix(mode, p, mb, mf, dt, steady=steady)
    rhs = build_step_rhs(mode, p, lay, dt, prior=prior, sources=sources,
                         interface_data=interface_data, steady=steady)
    return ModeBlockSystem(mode=mode, dt=dt, layout=lay, matrix=A, rhs=rhs)


def solve_step_system(s: ModeBlockSystem):
    """Direct dense solve; returns (u, p, v, pf) full nodal arrays."""
    x = _checked_solve(s.matrix, s.rhs, s.mode)
    return s.layout.unpack(x)


def _checked_solve(A, b, mode):
    try:
        x = scipy.linalg.solve(A, b)
    except scipy.linalg.LinAlgError as exc:
        raise SingularSystem(mode, str(exc)) from None
    nb = np.linalg.norm(b)
    if nb == 0:
        return np.zeros_like(b)
    res = np.linalg.norm(A @ x - b) / nb
    if not np.isfinite(res) or res > 1e-11:
        raise SingularSystem(mode, f"relative residual {res:.3e}")
    return x


class ModeOperator:
    """Cached LU factorization of one mode's step matrix (reused every step)."""

    def __init__(self, mode, params, mb, mf, dt, steady=False):
        self.mode = mode
        self.params = params
        self.dt = dt
        self.steady = steady
        A, self.layout = build_step_matrix(mode, params, mb, mf, dt, steady=steady)
        self.matrix = A
        try:
            self.lu = scipy.linalg.lu_factor(A)
        except scipy.linalg.LinAlgError as exc:
            raise SingularSystem(mode, str(exc)) from None

    def step(self, prior=None, sources=None, loads=None, interface_data=None):
        rhs = build_step_rhs(self.mode, self.params, self.layout, self.dt,
                             prior=prior, sources=sources, loads=loads,
                             interface_data=interface_data, steady=self.steady)
        if not np.any(rhs):
            x = np.zeros_like(rhs)
        else:
            x = scipy.linalg.lu_solve(self.lu, rhs)
            res = np.linalg.norm(self.matrix @ x - rhs) / np.linalg.norm(rhs)
            if not np.isfinite(res) or res > 1e-11:
                raise SingularSystem(self.mode, f"relative residual {res:.3e}")
        return self.layout.unpack(x)


# ---------------------------------------------------------------------------
# Discrete generator of the damped inertial semigroup
# ---------------------------------------------------------------------------

def assemble_generator(mode: ModeIndex, p: PhysicalParams, mb: VerticalMesh,
                       mf: VerticalMesh):
    """Discrete generator G of the damped inertial dynamics for one mode and
    the Gram matrix W of the energy inner product.

    State coordinates: (u, w, p, c) where c parameterizes the discretely
    divergence-free fluid velocity subspace (the fluid pressure is eliminated
    through the incompressibility rows).  Requires rho_b, rho_f, c0 > 0.
    """
    if not (p.rho_b > 0 and p.rho_f > 0 and p.c0 > 0):
        raise DegenerateParams("assemble_generator needs rho_b, rho_f, c0 > 0")
    kap1, kap2 = _symbols(mode)
    b = _mats(mb)
    f = _mats(mf)
    ubm = mb.free_mask(2)
    pbm = mb.free_mask(1)
    vfm = mf.free_mask(2)
    nu_, np_, nv_ = int(ubm.sum()), int(pbm.sum()), int(vfm.sum())

    def restrict(mat, rmask, cmask):
        return mat[np.ix_(np.flatnonzero(rmask), np.flatnonzero(cmask))]

    # vector-block helper: 3x3 object grid -> single matrix on free DOFs
    def grid(blocks, rmask, cmask):
        return np.block([[restrict(np.asarray(blocks[a][c], dtype=complex),
                                   rmask, cmask)
                          for c in range(3)] for a in range(3)])

    aE = elastic_blocks(kap1, kap2, b["M"], b["K"], b["Ct"], p.mu, p.lam)
    AE = grid(aE, ubm, ubm)
    Mu = np.kron(np.eye(3), restrict(b["M"], ubm, ubm)).astype(complex)
    Mp = restrict(b["Mp"], pbm, pbm).astype(complex)
    Kdar = p.k_perm * restrict((kap1**2 + kap2**2) * b["Mp"] + b["Kp"], pbm, pbm)
    aV = elastic_blocks(kap1, kap2, f["M"], f["K"], f["Ct"], p.nu, 0.0)
    AV = grid(aV, vfm, vfm)
    Mv = np.kron(np.eye(3), restrict(f["M"], vfm, vfm)).astype(complex)

    dvb = divergence_blocks(kap1, kap2, b["Mm"], b["Cm"])
    DivB = np.hstack([restrict(np.asarray(d, dtype=complex), pbm, ubm)
                      for d in dvb])
    dvf = divergence_blocks(kap1, kap2, f["Mm"], f["Cm"])
    pfm = np.ones(mf.n_nodes(1), dtype=bool)
    DivF = np.hstack([restrict(np.asarray(d, dtype=complex), pfm, vfm)
                      for d in dvf])

    # divergence-free fluid subspace
    Z = scipy.linalg.null_space(DivF)
    nc = Z.shape[1]

    # interface selector vectors on free DOFs
    def point_vec(n, idx):
        e = np.zeros(n)
        e[idx] = 1.0
        return e

    iu = np.flatnonzero(ubm)
    u_if = [a * nu_ + int(np.where(iu == mb.interface_node(2))[0][0])
            for a in range(3)]
    ip_ = np.flatnonzero(pbm)
    p_if = int(np.where(ip_ == mb.interface_node(1))[0][0])
    iv = np.flatnonzero(vfm)
    v_if = [a * nv_ + int(np.where(iv == mf.interface_node(2))[0][0])
            for a in range(3)]

    Eu = [point_vec(3 * nu_, u_if[a]) for a in range(3)]
    Ep = point_vec(np_, p_if)
    Ev = [point_vec(3 * nv_, v_if[a]) for a in range(3)]

    # weak action L: rows in the test metric, columns over (u, w, p, c)
    n_tot = 3 * nu_ + 3 * nu_ + np_ + nc
    L = np.zeros((n_tot, n_tot), dtype=complex)
    su = slice(0, 3 * nu_)
    sw = slice(3 * nu_, 6 * nu_)
    sp = slice(6 * nu_, 6 * nu_ + np_)
    sc = slice(6 * nu_ + np_, n_tot)

    # u-row in the a_E metric: a_E(du/dt, xi) = a_E(w, xi)
    L[su, sw] = AE
    # w-row: rho_b (dw/dt, xi) = -a_E(u) - delta a_E(w) + alpha(p, div xi)
    #        + p(0) conj(xi3(0)) + beta sum_j (v_j - w_j)(0) conj(xi_j(0))
    L[sw, su] = -AE
    L[sw, sw] = -p.delta * AE
    L[sw, sp] = p.alpha * DivB.conj().T + np.outer(Eu[2], Ep)
    slipW = sum(np.outer(Eu[j], Eu[j]) for j in range(2))
    slipWV = sum(np.outer(Eu[j], Ev[j]) for j in range(2))
    L[sw, sw] += -p.beta * slipW
    L[sw, sc] = p.beta * slipWV @ Z
    # p-row: c0 (dp/dt, q) = -alpha(div w, q) - k(grad p, grad q)
    #        + (v3 - w3)(0) conj(q(0))
    L[sp, sw] = -p.alpha * DivB - np.outer(Ep, Eu[2])
    L[sp, sp] = -Kdar
    L[sp, sc] = np.outer(Ep, Ev[2]) @ Z
    # v-row (tested in the div-free subspace): rho_f (dv/dt, zeta) =
    #   -2 nu (D(v), D(zeta)) - p(0) conj(zeta3(0))
    #   - beta sum_j (v_j - w_j)(0) conj(zeta_j(0))
    slipV = sum(np.outer(Ev[j], Ev[j]) for j in range(2))
    slipVW = slipWV.conj().T
    L[sc, sc] = Z.conj().T @ (-AV - p.beta * slipV) @ Z
    L[sc, sp] = Z.conj().T @ (-np.outer(Ev[2], Ep))
    L[sc, sw] = Z.conj().T @ (p.beta * slipVW)

    # energy Gram matrix (block diagonal in the same coordinates)
    W = np.zeros_like(L)
    W[su, su] = AE
    W[sw, sw] = p.rho_b * Mu
    W[sp, sp] = p.c0 * Mp
    W[sc, sc] = p.rho_f * (Z.conj().T @ Mv @ Z)

    G = np.zeros_like(L)
    G[su] = scipy.linalg.solve(AE, L[su], assume_a="her")
    G[sw] = scipy.linalg.solve(p.rho_b * Mu, L[sw], assume_a="her")
    G[sp] = scipy.linalg.solve(p.c0 * Mp, L[sp], assume_a="her")
    G[sc] = scipy.linalg.solve(W[sc, sc], L[sc], assume_a="her")
    return G, W


# ---------------------------------------------------------------------------
# Dense real-space verification oracle (test use only)
# ---------------------------------------------------------------------------

def dense_real_space_oracle(cfg, prior, sources, interface_data=None):
    """Solve one implicit step as ONE monolithic system over all lateral
    sample points, with dense spectral differentiation matrices in x1/x2 and
    the same vertical elements.  Independent verification path for the
    per-mode pipeline; restricted to tiny grids.

    prior: dict with real-space sample arrays "u" (n1,n2,3,nodes), "w" (or
    None), "p", "v".  sources: dict with "Fb", "S", "Ff" sample arrays (or
    None).  Returns a dict of (complex) sample arrays for the next level.
    """
    d = cfg.disc
    pp = cfg.params
    n1, n2, nb, nf = d.n1, d.n2, d.nb, d.nf
    if n1 * n2 * (nb + nf) > 5000:
        raise TooLarge("oracle restricted to n1*n2*(nb+nf) <= 5000")
    dt = d.dt
    mb = VerticalMesh("biot", nb)
    mf = VerticalMesh("fluid", nf)
    b = _mats(mb)
    f = _mats(mf)

    # lateral spectral differentiation matrices on the flattened n1*n2 grid
    N = n1 * n2
    F1 = np.exp(-2j * np.pi * np.outer(np.arange(n1), np.arange(n1)) / n1)
    F2 = np.exp(-2j * np.pi * np.outer(np.arange(n2), np.arange(n2)) / n2)
    kk1 = TWO_PI * np.array([signed_k2(j, n1) for j in range(n1)], dtype=float)
    kk2 = TWO_PI * np.array([signed_k2(j, n2) for j in range(n2)], dtype=float)
    # Nyquist represented with the positive sign, matching the mode pipeline
    kk1[n1 // 2] = abs(kk1[n1 // 2])
    kk2[n2 // 2] = abs(kk2[n2 // 2])
    D1x = F1.conj().T @ np.diag(1j * kk1) @ F1 / n1
    D2x = F2.conj().T @ np.diag(1j * kk2) @ F2 / n2
    L1 = np.kron(D1x, np.eye(n2))
    L2 = np.kron(np.eye(n1), D2x)
    Ilat = np.eye(N)

    nbu, nbp = mb.n_nodes(2), mb.n_nodes(1)
    nfu, nfp = mf.n_nodes(2), mf.n_nodes(1)
    sizes = (nbu, nbu, nbu, nbp, nfu, nfu, nfu, nfp)
    offs = np.concatenate([[0], np.cumsum(np.array(sizes) * N)])
    Ntot = offs[-1]
    A = np.zeros((Ntot, Ntot), dtype=complex)
    rhs = np.zeros(Ntot, dtype=complex)

    def put(r, c, lat, vert):
        A[offs[r]:offs[r + 1], offs[c]:offs[c + 1]] += np.kron(lat, vert)

    def add_rhs(r, lat, vert, samples):
        # samples flattened lat-major per slot
        rhs[offs[r]:offs[r + 1]] += np.kron(lat, vert) @ samples

    LH1, LH2 = L1.conj().T, L2.conj().T
    mu, lam, nu = pp.mu, pp.lam, pp.nu

    # point-evaluation vertical matrices
    ib = mb.interface_node(2)
    ibp = mb.interface_node(1)
    iv = mf.interface_node(2)

    def pt(nr, ir, ncol, ic):
        m = np.zeros((nr, ncol))
        m[ir, ic] = 1.0
        return m

    def strain_matrix(M, K, Ct, m_, l_):
        """Full 3x3 component grid of the strain form as one kron matrix."""
        Cg = Ct.T
        nn = M.shape[0]
        S = np.zeros((3 * N * nn, 3 * N * nn), dtype=complex)

        def sput(a, c, lat, vert):
            S[a * N * nn:(a + 1) * N * nn,
              c * N * nn:(c + 1) * N * nn] += np.kron(lat, vert)

        sput(0, 0, (2 * m_ + l_) * LH1 @ L1 + m_ * LH2 @ L2, M)
        sput(0, 0, Ilat, m_ * K)
        sput(1, 1, (2 * m_ + l_) * LH2 @ L2 + m_ * LH1 @ L1, M)
        sput(1, 1, Ilat, m_ * K)
        sput(2, 2, Ilat, (2 * m_ + l_) * K)
        sput(2, 2, LH1 @ L1 + LH2 @ L2, m_ * M)
        sput(0, 1, LH1 @ L2, (m_ + l_) * M)
        sput(1, 0, LH2 @ L1, (m_ + l_) * M)
        sput(0, 2, L1, m_ * Cg)
        sput(0, 2, LH1, l_ * Ct)
        sput(1, 2, L2, m_ * Cg)
        sput(1, 2, LH2, l_ * Ct)
        sput(2, 0, LH1, m_ * Ct)
        sput(2, 0, L1, l_ * Cg)
        sput(2, 1, LH2, m_ * Ct)
        sput(2, 1, L2, l_ * Cg)
        return S

    # --- E-rows ---
    coeff = 1.0 + pp.delta / dt
    SE = strain_matrix(b["M"], b["K"], b["Ct"], mu, lam)
    A[offs[0]:offs[3], offs[0]:offs[3]] += coeff * SE
    if pp.rho_b > 0:
        for a in range(3):
            put(a, a, Ilat, (pp.rho_b / dt**2) * b["M"])
    # -alpha (p, div xi): conj of divergence pairing
    Mm, Cm = b["Mm"], b["Cm"]
    put(0, 3, LH1, -pp.alpha * Mm.T)
    put(1, 3, LH2, -pp.alpha * Mm.T)
    put(2, 3, Ilat, -pp.alpha * Cm.T)
    # interface pressure and slip
    put(2, 3, Ilat, -pt(nbu, ib, nbp, ibp))
    for j in range(2):
        put(j, 4 + j, Ilat, -pp.beta * pt(nbu, ib, nfu, iv))
        put(j, j, Ilat, (pp.beta / dt) * pt(nbu, ib, nbu, ib))

    # --- D-row ---
    put(3, 3, LH1 @ L1 + LH2 @ L2, pp.k_perm * b["Mp"])
    put(3, 3, Ilat, pp.k_perm * b["Kp"])
    if pp.c0 > 0:
        put(3, 3, Ilat, (pp.c0 / dt) * b["Mp"])
    put(3, 0, L1, (pp.alpha / dt) * Mm)
    put(3, 1, L2, (pp.alpha / dt) * Mm)
    put(3, 2, Ilat, (pp.alpha / dt) * Cm)
    put(3, 6, Ilat, -pt(nbp, ibp, nfu, iv))
    put(3, 2, Ilat, (1.0 / dt) * pt(nbp, ibp, nbu, ib))

    # --- F-rows ---
    A[offs[4]:offs[7], offs[4]:offs[7]] += strain_matrix(f["M"], f["K"],
                                                         f["Ct"], nu, 0.0)
    if pp.rho_f > 0:
        for a in range(3):
            put(4 + a, 4 + a, Ilat, (pp.rho_f / dt) * f["M"])
    Mmf, Cmf = f["Mm"], f["Cm"]
    put(4, 7, LH1, -Mmf.T)
    put(5, 7, LH2, -Mmf.T)
    put(6, 7, Ilat, -Cmf.T)
    put(6, 3, Ilat, pt(nfu, iv, nbp, ibp))
    for j in range(2):
        put(4 + j, 4 + j, Ilat, pp.beta * pt(nfu, iv, nfu, iv))
        put(4 + j, j, Ilat, -(pp.beta / dt) * pt(nfu, iv, nbu, ib))

    # --- C-row ---
    put(7, 4, L1, Mmf)
    put(7, 5, L2, Mmf)
    put(7, 6, Ilat, Cmf)

    # --- right-hand side ---
    def flat(arr):
        # (n1, n2, nodes) -> lat-major flattening with vertical innermost
        return np.asarray(arr, dtype=complex).reshape(-1)

    if sources is not None:
        Fb, S, Ff = sources.get("Fb"), sources.get("S"), sources.get("Ff")
        if Fb is not None:
            for a in range(3):
                add_rhs(a, Ilat, b["M"], flat(Fb[:, :, a, :]))
        if S is not None:
            add_rhs(3, Ilat, b["Mp"], flat(S))
        if Ff is not None:
            for a in range(3):
                add_rhs(4 + a, Ilat, f["M"], flat(Ff[:, :, a, :]))

    un = prior["u"]
    wn = prior.get("w")
    pn = prior["p"]
    vn = prior["v"]
    uf = [flat(un[:, :, a, :]) for a in range(3)]
    for a in range(3):
        if pp.rho_b > 0:
            wa = flat(wn[:, :, a, :])
            add_rhs(a, Ilat, (pp.rho_b / dt**2) * b["M"], uf[a] + dt * wa)
    if pp.delta > 0:
        rhs[offs[0]:offs[3]] += (pp.delta / dt) * (SE @ np.concatenate(uf))
    if pp.c0 > 0:
        add_rhs(3, Ilat, (pp.c0 / dt) * b["Mp"], flat(pn))
    add_rhs(3, L1, (pp.alpha / dt) * Mm, uf[0])
    add_rhs(3, L2, (pp.alpha / dt) * Mm, uf[1])
    add_rhs(3, Ilat, (pp.alpha / dt) * Cm, uf[2])
    add_rhs(3, Ilat, (1.0 / dt) * pt(nbp, ibp, nbu, ib), uf[2])
    for j in range(2):
        add_rhs(j, Ilat, (pp.beta / dt) * pt(nbu, ib, nbu, ib), uf[j])
        add_rhs(4 + j, Ilat, -(pp.beta / dt) * pt(nfu, iv, nbu, ib), uf[j])
    if pp.rho_f > 0:
        for a in range(3):
            add_rhs(4 + a, Ilat, (pp.rho_f / dt) * f["M"], flat(vn[:, :, a, :]))

    # essential constraints: clamp top Biot nodes and bottom fluid nodes.
    # flattening is lat-major: dof index = base + lat * size + node
    free = np.ones(Ntot, dtype=bool)
    for slot, size in enumerate(sizes):
        if slot == 7:
            continue
        mesh = mb if slot <= 3 else mf
        deg = 1 if slot in (3, 7) else 2
        node = mesh.clamped_node(deg)
        base = offs[slot]
        for lat in range(N):
            free[base + lat * size + node] = False

    idx = np.flatnonzero(free)
    x = np.zeros(Ntot, dtype=complex)
    sub = A[np.ix_(idx, idx)]
    try:
        x[idx] = scipy.linalg.solve(sub, rhs[idx])
    except scipy.linalg.LinAlgError as exc:
        raise SingularSystem(ModeIndex(-1, -1), str(exc)) from None

    out = {}
    names = ("u1", "u2", "u3", "p", "v1", "v2", "v3", "pf")
    for slot, (name, size) in enumerate(zip(names, sizes)):
        out[name] = x[offs[slot]:offs[slot + 1]].reshape(n1, n2, size)
    res = {
        "u": np.stack([out["u1"], out["u2"], out["u3"]], axis=2),
        "p": out["p"],
        "v": np.stack([out["v1"], out["v2"], out["v3"]], axis=2),
        "pf": out["pf"],
    }
    return res
