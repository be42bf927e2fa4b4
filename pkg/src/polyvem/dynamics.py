"""Global assembly, explicit central-difference integration, and the
tapered-beam experiment driver.

The integrator is the standard half-step-velocity central-difference update
with a diagonal mass; prescribed dofs are overwritten kinematically each
step.  The beam driver reproduces the pulse-loaded tapered-beam runs: fixed
at x = 0, an axial quartic pulse at x = 4, histories probed mid-beam and
reported in normalized time and displacement.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import eig
from .mesh import ValidationError

BEAM_PULSE_AMPLITUDE = 1.0 / 16.0  # peak of (t/tau)^4 - 2(t/tau)^3 + (t/tau)^2


def assemble(mesh, method, alpha0="unit", lumping="auto", threads=1):
    """Assembled stiffness (CSR) and lumped mass vector for a mesh.

    Element matrices may be built in a thread pool; the scatter-add happens
    in element order afterwards, so the result is independent of threads.
    """
    dim = mesh.dimension
    n = mesh.num_vertices
    ndof = dim * n
    rows, cols, vals = [], [], []
    M = np.zeros(ndof)
    systems = eig._element_systems(mesh, method, alpha0, lumping, threads)
    for K, ml, nodes, _ in systems:
        nn = len(nodes)
        gdof = np.concatenate(
            [comp * n + np.asarray(nodes) for comp in range(dim)])
        rows.append(np.repeat(gdof, dim * nn))
        cols.append(np.tile(gdof, dim * nn))
        vals.append(K.ravel())
        M[gdof] += ml
    K = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(ndof, ndof)).tocsr()
    return K, M


@dataclass
class BcSchedule:
    """Fixed dofs plus driven dofs following a smooth finite pulse.

    The pulse g(t) = (t/tau)^4 - 2 (t/tau)^3 + (t/tau)^2 for t < tau and 0
    afterwards is C1 at both ends; its peak value is 1/16.
    """

    fixed: np.ndarray
    driven: np.ndarray
    tau: float
    amplitude: float = 1.0

    def pulse(self, t):
        if t >= self.tau or t <= 0.0:
            return 0.0
        s = t / self.tau
        return self.amplitude * (s ** 4 - 2.0 * s ** 3 + s ** 2)

    def constrained(self):
        return np.unique(np.concatenate([self.fixed, self.driven]))


@dataclass
class SimState:
    """Nodal kinematics at the end of a run (velocity at the half step)."""

    u: np.ndarray
    v: np.ndarray
    a: np.ndarray
    t: float = 0.0
    step: int = 0


@dataclass
class RunResult:
    times: np.ndarray
    probe_history: np.ndarray    # (steps+1, n_probes)
    steps: int
    dt: float
    diverged: bool
    diverged_step: int | None
    wall_seconds: float
    state: SimState | None = None


def central_difference_run(K, M_lumped, bcs, dt, t_max, probes,
                           divergence_limit=None):
    """Explicit central-difference run of M a + K u = 0 under the schedule.

    probes are global dof indices recorded every step.  Divergence (any
    |u| beyond divergence_limit) aborts and flags the result.
    """
    if dt <= 0.0:
        raise ValidationError("time step must be positive")
    ml = np.asarray(M_lumped, float)
    if np.any(ml <= 0.0):
        raise ValidationError("non-positive lumped mass entry")
    ndof = K.shape[0]
    inv_m = 1.0 / ml
    probes = np.asarray(probes, dtype=int)
    n_steps = int(np.ceil(t_max / dt))
    u = np.zeros(ndof)
    a = -(K @ u) * inv_m
    v_half = 0.5 * dt * a  # v at t = dt/2 from zero initial velocity
    fixed = bcs.fixed
    driven = bcs.driven
    history = np.zeros((n_steps + 1, len(probes)))
    times = np.zeros(n_steps + 1)
    history[0] = u[probes]
    diverged = False
    diverged_step = None
    start = time.perf_counter()
    for step in range(1, n_steps + 1):
        t_new = step * dt
        u = u + dt * v_half
        u[fixed] = 0.0
        u[driven] = bcs.pulse(t_new)
        a = -(K @ u) * inv_m
        a[fixed] = 0.0
        a[driven] = 0.0
        v_half = v_half + dt * a
        times[step] = t_new
        history[step] = u[probes]
        if divergence_limit is not None:
            peak = float(np.abs(u).max())
            if not np.isfinite(peak) or peak > divergence_limit:
                diverged = True
                diverged_step = step
                times = times[:step + 1]
                history = history[:step + 1]
                break
    wall = time.perf_counter() - start
    return RunResult(
        times=times,
        probe_history=history,
        steps=len(times) - 1,
        dt=dt,
        diverged=diverged,
        diverged_step=diverged_step,
        wall_seconds=wall,
        state=SimState(u=u, v=v_half, a=a, t=times[-1], step=len(times) - 1),
    )


# ---------------------------------------------------------------------------
# Tapered-beam experiment


def beam_boundary_dofs(mesh):
    """(fixed dofs, driven x-dofs) for the beam: clamp x=0, drive x=4."""
    n = mesh.num_vertices
    x = mesh.vertices[:, 0]
    left = np.where(np.abs(x) < 1e-12)[0]
    right = np.where(np.abs(x - 4.0) < 1e-12)[0]
    fixed = np.concatenate([left, left + n, left + 2 * n,
                            right + n, right + 2 * n])
    driven = right.copy()
    return np.unique(fixed), driven


def find_probe_dof(mesh, point, comp=0):
    """Dof index of the node nearest `point`; warns when not coincident."""
    d2 = ((mesh.vertices - np.asarray(point)) ** 2).sum(axis=1)
    node = int(np.argmin(d2))
    exact = d2[node] < 1e-20
    return comp * mesh.num_vertices + node, exact


@dataclass
class BeamExperiment:
    mesh: object
    method: str
    dt: float
    dt_crit_element: float
    omega_star: float
    result: RunResult
    t_norm: np.ndarray
    u_norm: np.ndarray
    probe_exact: bool

    @property
    def wave_speed(self):
        m = self.mesh.material
        return float(np.sqrt(m.youngs_modulus / m.density))

    @property
    def transit_time(self):
        return 4.0 / self.wave_speed


def beam_pulse_duration(case, alpha0="auto", lumping="auto"):
    """tau = 100 x the element-bound critical step of the case's VEM mesh.

    The pulse duration is part of the problem statement, so FEM and VEM
    runs of the same case share it.
    """
    from . import benchmarks
    mesh = benchmarks.gen_benchmark("beam" + case, variant="vem")
    report = eig.critical_dt(mesh, "vem", alpha0=alpha0, lumping=lumping)
    return 100.0 * report.dt_crit


def tapered_beam_experiment(case, method, dt_factor=0.9, dt_basis="element",
                            t_max_transits=3.0, probe=(2.0, 0.5, 0.0),
                            alpha0="auto", lumping="auto", tau=None,
                            amplitude=1.0):
    """Run the pulse-loaded beam case and return the normalized history.

    dt_basis "element" uses the element-eigenvalue bound 2/max_E omega_E;
    "global" uses the assembled-eigenproblem bound (the element bound can be
    hopelessly conservative on nearly degenerate meshes).
    """
    from . import benchmarks
    if case not in ("A", "B"):
        raise ValidationError(f"unknown beam case {case!r}")
    mesh = benchmarks.gen_benchmark("beam" + case, variant=method)
    material = mesh.material
    c_long = np.sqrt(material.youngs_modulus / material.density)
    transit = 4.0 / c_long
    report = eig.critical_dt(mesh, method, alpha0=alpha0, lumping=lumping)
    K, M = assemble(mesh, method, alpha0=alpha0, lumping=lumping)
    fixed, driven = beam_boundary_dofs(mesh)
    if dt_basis == "element":
        dt_crit = report.dt_crit
    elif dt_basis == "global":
        bcs_all = np.unique(np.concatenate([fixed, driven]))
        omega_g, _, _ = eig.global_max_frequency(K, M, bcs_all)
        dt_crit = 2.0 / omega_g
    else:
        raise ValidationError(f"unknown dt basis {dt_basis!r}")
    dt = dt_factor * dt_crit
    if tau is None:
        tau = beam_pulse_duration(case, alpha0=alpha0, lumping=lumping)
    return run_beam(mesh, K, M, dt, t_max_transits * transit, tau=tau,
                    probe=probe, report=report, method=method,
                    amplitude=amplitude)


def run_beam(mesh, K, M, dt, t_max, tau, probe, report, method,
             amplitude=1.0):
    material = mesh.material
    c_long = np.sqrt(material.youngs_modulus / material.density)
    transit = 4.0 / c_long
    fixed, driven = beam_boundary_dofs(mesh)
    if tau is None:
        tau = 100.0 * report.dt_crit
    bcs = BcSchedule(fixed=fixed, driven=driven, tau=tau,
                     amplitude=amplitude)
    probe_dof, exact = find_probe_dof(mesh, probe, comp=0)
    if not exact:
        import warnings
        warnings.warn("probe point is not a mesh node; using nearest node")
    limit = 1e3 * BEAM_PULSE_AMPLITUDE * amplitude
    result = central_difference_run(K, M, bcs, dt, t_max, [probe_dof],
                                    divergence_limit=limit)
    t_norm = result.times / transit
    u_norm = result.probe_history[:, 0] / (BEAM_PULSE_AMPLITUDE * amplitude)
    return BeamExperiment(
        mesh=mesh,
        method=method,
        dt=dt,
        dt_crit_element=report.dt_crit,
        omega_star=report.omega_star,
        result=result,
        t_norm=t_norm,
        u_norm=u_norm,
        probe_exact=exact,
    )


def write_history_csv(experiment, path):
    with open(path, "w") as fh:
        fh.write("t_norm,u_x_norm\n")
        for t, u in zip(experiment.t_norm, experiment.u_norm):
            fh.write(f"{t:.17g},{u:.17g}\n")


def run_summary(experiment):
    return {
        "method": experiment.method,
        "steps": experiment.result.steps,
        "dt": experiment.dt,
        "omega_star": experiment.omega_star,
        "diverged": experiment.result.diverged,
        "wall_seconds": experiment.result.wall_seconds,
    }
