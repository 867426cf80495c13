"""Singular-limit sweeps: drive (rho_b, rho_f), delta, or c0 toward zero and
measure trajectory distances to the exactly-degenerate reference run.

The reference trajectory (swept parameter exactly 0) is computed directly,
so distances are to the true limit system, not a proxy.  Sweeps over the
joint density require delta > 0 in the base configuration: inertia must
vanish before viscoelasticity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig, with_params
from .errors import InsufficientPoints, OrderingViolation, Violation
from .integrator import InitialData, Trajectory, check_same_grid, run

_SWEEPABLE = ("rho_joint", "delta", "c0")


@dataclass(frozen=True)
class SweepSpec:
    base: RunConfig
    param: str                 # "rho_joint" | "delta" | "c0"
    values: tuple              # strictly decreasing positive sequence
    data: InitialData

    def validate(self):
        if self.param not in _SWEEPABLE:
            raise Violation("param", self.param,
                            f"must be one of {_SWEEPABLE}")
        vals = np.asarray(self.values, dtype=float)
        if vals.size == 0 or np.any(vals <= 0) or np.any(np.diff(vals) >= 0):
            raise Violation("values", self.values,
                            "must be strictly decreasing and positive")
        if self.param == "rho_joint" and self.base.params.delta == 0:
            raise OrderingViolation(
                "rho sweep needs delta > 0: inertia vanishes first")
        return self


@dataclass
class DistanceReport:
    values: list = field(default_factory=list)
    D1: list = field(default_factory=list)   # sup_n ||u_a - u_b||_E
    D2: list = field(default_factory=list)   # L2-in-time grad pressure gap
    D3: list = field(default_factory=list)   # L2-in-time strain-rate gap
    D4: list = field(default_factory=list)   # L2-in-time tangential slip gap
    kinetic_b: list = field(default_factory=list)   # rho_b max_n ||Dt u||^2
    kinetic_f: list = field(default_factory=list)   # rho_f max_n ||v||^2
    delta_term: list = field(default_factory=list)  # delta max_n ||Dt u||_E


def trajectory_distance(a: Trajectory, b: Trajectory, params) -> dict:
    """The four discrete limit-topology distances between two trajectories
    sharing a grid, data, and sources."""
    from .energy import (_slip_trace, _trace_norm_sq, elastic_norm_sq,
                         grad_norm_sq, viscous_norm_sq)

    check_same_grid(a, b)
    dt = a.states[1].t - a.states[0].t
    d1_sq = 0.0
    d2_sq = 0.0
    d3_sq = 0.0
    d4_sq = 0.0
    for n, (sa, sb) in enumerate(zip(a.states, b.states)):
        du = sa.u.copy()
        du.data[:] = sa.u.data - sb.u.data
        d1_sq = max(d1_sq, elastic_norm_sq(du, params))
        if n == 0:
            continue
        dp = sa.p_b.copy()
        dp.data[:] = sa.p_b.data - sb.p_b.data
        d2_sq += dt * grad_norm_sq(dp)
        dv = sa.v.copy()
        dv.data[:] = sa.v.data - sb.v.data
        d3_sq += dt * viscous_norm_sq(dv, 0.5)
        slip_a = _slip_trace(a.states[n - 1], sa, dt)
        slip_b = _slip_trace(b.states[n - 1], sb, dt)
        d4_sq += dt * sum(_trace_norm_sq(slip_a[j] - slip_b[j])
                          for j in range(2))
    return {"D1": float(np.sqrt(d1_sq)), "D2": float(np.sqrt(d2_sq)),
            "D3": float(np.sqrt(d3_sq)), "D4": float(np.sqrt(d4_sq))}


def _vanishing_terms(traj: Trajectory, params) -> dict:
    """Magnitudes of the terms the limit passage sends to zero."""
    from .energy import elastic_norm_sq, l2_norm_sq

    dt = traj.states[1].t - traj.states[0].t
    max_dtu_l2 = 0.0
    max_dtu_e = 0.0
    max_v = 0.0
    for n in range(1, len(traj.states)):
        du = traj.states[n].u.copy()
        du.data[:] = (traj.states[n].u.data - traj.states[n - 1].u.data) / dt
        max_dtu_l2 = max(max_dtu_l2, l2_norm_sq(du))
        max_dtu_e = max(max_dtu_e, elastic_norm_sq(du, params))
        max_v = max(max_v, l2_norm_sq(traj.states[n].v))
    return {
        "kinetic_b": params.rho_b * max_dtu_l2,
        "kinetic_f": params.rho_f * max_v,
        "delta_term": params.delta * float(np.sqrt(max_dtu_e)),
    }


def _swept_config(base: RunConfig, param: str, value: float) -> RunConfig:
    if param == "rho_joint":
        return with_params(base, rho_b=value, rho_f=value)
    return with_params(base, **{param: value})


def run_sweep(spec: SweepSpec, threads: int = 1) -> DistanceReport:
    """Run the reference (parameter exactly 0) and every swept value from
    identical data, and report distances and vanishing-term magnitudes."""
    spec.validate()
    ref_cfg = _swept_config(spec.base, spec.param, 0.0)
    ref = run(ref_cfg, spec.data, threads=threads)
    rep = DistanceReport()
    for value in spec.values:
        cfg = _swept_config(spec.base, spec.param, value)
        traj = run(cfg, spec.data, threads=threads)
        d = trajectory_distance(traj, ref, cfg.params)
        extras = _vanishing_terms(traj, cfg.params)
        rep.values.append(value)
        rep.D1.append(d["D1"])
        rep.D2.append(d["D2"])
        rep.D3.append(d["D3"])
        rep.D4.append(d["D4"])
        rep.kinetic_b.append(extras["kinetic_b"])
        rep.kinetic_f.append(extras["kinetic_f"])
        rep.delta_term.append(extras["delta_term"])
    return rep


def estimate_rate(report: DistanceReport) -> dict:
    """Per-distance log-log least-squares slope (and residual) against the
    swept values."""
    vals = np.asarray(report.values, dtype=float)
    if vals.size < 3:
        raise InsufficientPoints("need at least 3 sweep points")
    out = {}
    for name in ("D1", "D2", "D3", "D4"):
        errs = np.asarray(getattr(report, name), dtype=float)
        mask = errs > 0
        if mask.sum() < 2:
            out[name] = {"slope": np.inf, "residual": 0.0}
            continue
        A = np.vstack([np.log(vals[mask]), np.ones(int(mask.sum()))]).T
        y = np.log(errs[mask])
        coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
        resid = float(res[0]) if res.size else 0.0
        out[name] = {"slope": float(coef[0]), "residual": resid}
    return out
