"""Command-line front end: mesh generation, quality reports, agglomeration,
time-step estimates, global bounds, beam simulations, monomial integration,
and regeneration of the benchmark summary tables.

Exit codes: 0 success, 1 validation/usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import (agglomerate, benchmarks, config as cfgmod, dynamics, eig,
               mesh as meshmod, quality, vem)
from .mesh import MeshError, ValidationError

VERSION = "0.1.0"


class NumericalError(RuntimeError):
    pass


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; 2 is reserved for numerical
        # failures here, so remap (keep 0 for --help).
        return 0 if exc.code == 0 else 1
    if args.version:
        cfg = _load_config(args)
        print(f"polyvem {VERSION} (config {cfg.config_hash()})")
        return 0
    if args.command is None:
        parser.print_usage()
        return 1
    try:
        cfg = _load_config(args)
        args.func(args, cfg)
        return 0
    except (MeshError, ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def _load_config(args):
    file_values = None
    if getattr(args, "config", None):
        file_values = cfgmod.parse_config_file(args.config)
    overrides = {}
    for key in ("alpha0", "lumping", "threads"):
        if getattr(args, key, None) is not None:
            overrides[key] = getattr(args, key)
    return cfgmod.build_config(file_values, **overrides)


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value configuration file")
    common.add_argument("--alpha0",
                        help="stabilization preset: auto, unit, or a number")
    common.add_argument("--lumping",
                        choices=("auto", "row_sum", "diag_scale"))
    common.add_argument("--threads", type=int, default=None,
                        help="element-sweep threads (default: all cores)")
    parser = argparse.ArgumentParser(
        prog="polyvem",
        description=__doc__.splitlines()[0],
        parents=[common])
    parser.add_argument("--version", action="store_true",
                        help="print version and config hash")
    sub = parser.add_subparsers(dest="command")

    def add_parser(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    p = add_parser("mesh-gen", help="generate a benchmark mesh file")
    p.add_argument("--name", required=True, choices=benchmarks.BENCHMARK_NAMES)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--variant", choices=("fem", "vem"), default="fem")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_mesh_gen)

    p = add_parser("quality", help="per-element quality report (CSV)")
    p.add_argument("--mesh", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_quality)

    p = add_parser("agglomerate", help="merge element groups")
    p.add_argument("--mesh", required=True)
    p.add_argument("--groups",
                   help="semicolon-separated comma lists, e.g. '0,1;4,5'")
    p.add_argument("--auto", action="store_true",
                   help="merge every flagged element with neighbors")
    p.add_argument("--out", required=True)
    p.add_argument("--mapping", help="write old->new id mapping CSV here")
    p.set_defaults(func=_cmd_agglomerate)

    p = add_parser("timestep", help="element-eigenvalue dt estimate")
    p.add_argument("--mesh", required=True)
    p.add_argument("--method", choices=("fem", "vem"), required=True)
    p.add_argument("--out", help="CSV output (default: stdout summary)")
    p.add_argument("--dump-matrices",
                   help="directory for per-element K/M CSV dumps")
    p.set_defaults(func=_cmd_timestep)

    p = add_parser("eig-global", help="assembled maximum frequency")
    p.add_argument("--mesh", required=True)
    p.add_argument("--method", choices=("fem", "vem"), required=True)
    p.add_argument("--fixed-nodes",
                   help="comma list of node ids with all dofs fixed")
    p.add_argument("--beam-bcs", action="store_true",
                   help="apply the tapered-beam boundary conditions")
    p.set_defaults(func=_cmd_eig_global)

    p = add_parser("simulate", help="tapered-beam explicit run")
    p.add_argument("--case", choices=("A", "B"), required=True)
    p.add_argument("--method", choices=("fem", "vem"), required=True)
    p.add_argument("--dt-factor", type=float, default=0.9)
    p.add_argument("--dt-basis", choices=("element", "global"),
                   default="element")
    p.add_argument("--transits", type=float, default=3.0)
    p.add_argument("--out", required=True, help="history CSV path")
    p.add_argument("--summary", help="run summary JSON path")
    p.set_defaults(func=_cmd_simulate)

    p = add_parser("integrate", help="integrate a monomial over one "
                                         "element")
    p.add_argument("--mesh")
    p.add_argument("--element", type=int, default=0)
    p.add_argument("--unit-tet", action="store_true")
    p.add_argument("--unit-cube", action="store_true")
    p.add_argument("--exp", required=True,
                   help="comma-separated exponents, e.g. 2,1,0")
    p.add_argument("--moments", action="store_true",
                   help="print the scaled order-<=2 moment table instead")
    p.set_defaults(func=_cmd_integrate)

    p = add_parser("tables", help="regenerate benchmark summary tables")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--with-dynamics", action="store_true",
                   help="include the measured beam run table")
    p.set_defaults(func=_cmd_tables)
    return parser


def _threads(cfg):
    return cfg.threads if cfg.threads and cfg.threads > 0 else \
        (os.cpu_count() or 1)


def _cmd_mesh_gen(args, cfg):
    mesh = benchmarks.gen_benchmark(args.name, args.eps, args.variant)
    mesh = cfgmod.apply_material(mesh, cfg)
    meshmod.save_mesh(mesh, args.out)
    print(f"wrote {args.out}: {mesh.num_vertices} vertices, "
          f"{mesh.num_elements} elements")


def _cmd_quality(args, cfg):
    mesh = meshmod.load_mesh(args.mesh)
    reports = quality.mesh_report(mesh, cfg.thresholds)
    quality.write_csv(reports, args.out)
    counts = {}
    for r in reports:
        counts[r.classification] = counts.get(r.classification, 0) + 1
    print(f"wrote {args.out}: " + ", ".join(
        f"{k}={v}" for k, v in sorted(counts.items())))


def _cmd_agglomerate(args, cfg):
    mesh = meshmod.load_mesh(args.mesh)
    if args.auto:
        merged, mapping, unmerged = agglomerate.auto_agglomerate(
            mesh, cfg.thresholds)
        for e in unmerged:
            print(f"warning: element {e} flagged but has no merge partner",
                  file=sys.stderr)
    elif args.groups:
        groups = [tuple(int(v) for v in part.split(","))
                  for part in args.groups.split(";") if part.strip()]
        merged, mapping = agglomerate.merge_groups(mesh, groups)
    else:
        raise ValidationError("agglomerate needs --groups or --auto")
    meshmod.save_mesh(merged, args.out)
    if args.mapping:
        agglomerate.write_mapping_csv(mapping, args.mapping)
    print(f"wrote {args.out}: {merged.num_elements} elements")


def _cmd_timestep(args, cfg):
    mesh = cfgmod.apply_material(meshmod.load_mesh(args.mesh), cfg)
    report = eig.critical_dt(mesh, args.method, alpha0=cfg.alpha0,
                             lumping=cfg.lumping, threads=_threads(cfg))
    if args.out:
        report.write_csv(args.out)
    if args.dump_matrices:
        os.makedirs(args.dump_matrices, exist_ok=True)
        for e in range(mesh.num_elements):
            K, ml, _, _ = eig.element_system(mesh, e, args.method,
                                             cfg.alpha0, cfg.lumping)
            vem.write_matrix_csv(
                K, os.path.join(args.dump_matrices, f"K_{e}.csv"))
            vem.write_matrix_csv(
                ml, os.path.join(args.dump_matrices, f"Ml_{e}.csv"))
    print(f"omega_star={report.omega_star:.6e} rad/s  "
          f"dt_crit={report.dt_crit:.6e} s  "
          f"argmax_element={report.argmax_element}")


def _cmd_eig_global(args, cfg):
    mesh = cfgmod.apply_material(meshmod.load_mesh(args.mesh), cfg)
    K, M = dynamics.assemble(mesh, args.method, alpha0=cfg.alpha0,
                             lumping=cfg.lumping, threads=_threads(cfg))
    fixed = np.array([], dtype=int)
    if args.beam_bcs:
        f, d = dynamics.beam_boundary_dofs(mesh)
        fixed = np.unique(np.concatenate([f, d]))
    elif args.fixed_nodes:
        nodes = np.array([int(v) for v in args.fixed_nodes.split(",")])
        n = mesh.num_vertices
        fixed = np.unique(np.concatenate(
            [nodes + c * n for c in range(mesh.dimension)]))
    omega, converged, iters = eig.global_max_frequency(K, M, fixed)
    if not converged:
        raise NumericalError(
            f"power iteration did not converge in {iters} iterations "
            f"(best estimate omega={omega:.6e})")
    print(f"omega_global={omega:.6e} rad/s  dt={2.0 / omega:.6e} s  "
          f"iterations={iters}")


def _cmd_simulate(args, cfg):
    print(f"case {args.case} {args.method}: dt basis {args.dt_basis}, "
          f"factor {args.dt_factor}, {args.transits} transits")
    exp = dynamics.tapered_beam_experiment(
        args.case, args.method, dt_factor=args.dt_factor,
        dt_basis=args.dt_basis, t_max_transits=args.transits,
        alpha0=cfg.alpha0, lumping=cfg.lumping)
    dynamics.write_history_csv(exp, args.out)
    if args.summary:
        with open(args.summary, "w") as fh:
            json.dump(dynamics.run_summary(exp), fh, indent=2)
    if exp.result.diverged:
        raise NumericalError(
            f"run diverged at step {exp.result.diverged_step}")
    print(f"wrote {args.out}: {exp.result.steps} steps at dt={exp.dt:.6e}")


def _cmd_integrate(args, cfg):
    exponent = tuple(int(v) for v in args.exp.split(","))
    if args.unit_tet or args.unit_cube:
        mesh = _unit_shape(args.unit_cube)
    elif args.mesh:
        mesh = meshmod.load_mesh(args.mesh)
    else:
        raise ValidationError("integrate needs --mesh or --unit-tet/--unit-cube")
    if args.moments:
        geom = meshmod.element_geometry(mesh, args.element)
        print("exponent,value")
        for key in sorted(geom.scaled_moments, key=lambda k: (sum(k), k)):
            name = ",".join(str(v) for v in key)
            print(f"\"{name}\",{geom.scaled_moments[key]:.17g}")
        return
    integ = meshmod.element_integrator(mesh, args.element)
    if len(exponent) != mesh.dimension:
        raise ValidationError("exponent arity must match mesh dimension")
    print(f"{integ.integrate(exponent):.17g}")


def _unit_shape(cube):
    if cube:
        square = meshmod.Mesh(
            2, np.array([[0.0, 0], [1, 0], [1, 1], [0, 1]]),
            [meshmod.Element(loop=(0, 1, 2, 3))])
        return meshmod.extrude(square, 1.0, 1)
    verts = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
    return meshmod.Mesh(3, verts, [meshmod.tet_element((0, 1, 2, 3))])


# ---------------------------------------------------------------------------
# Benchmark tables


def _cmd_tables(args, cfg):
    os.makedirs(args.out, exist_ok=True)
    threads = _threads(cfg)
    eps_2d = (1e-1, 1e-2, 1e-5, 1e-8)
    eps_3d = (1e-1, 1e-3, 1e-5)
    eps_pair = (1e-1, 1e-5)
    _family_table(os.path.join(args.out, "table1.csv"), "tri2d", eps_2d,
                  alpha0=cfg.alpha0, lumping=cfg.lumping, threads=threads)
    _family_table(os.path.join(args.out, "table2.csv"), "prism3d", eps_3d,
                  alpha0=cfg.alpha0, lumping=cfg.lumping, threads=threads)
    _family_table(os.path.join(args.out, "table3.csv"), "wedge", eps_3d,
                  alpha0=cfg.alpha0, lumping=cfg.lumping, threads=threads)
    _family_table(os.path.join(args.out, "table4.csv"), "kite", eps_pair,
                  alpha0=cfg.alpha0, lumping=cfg.lumping, threads=threads)
    _spire_table(os.path.join(args.out, "table5.csv"), eps_pair,
                 alpha0=cfg.alpha0, lumping=cfg.lumping, threads=threads)
    beam = _beam_table(os.path.join(args.out, "table6.csv"),
                       alpha0=cfg.alpha0, lumping=cfg.lumping,
                       threads=threads)
    _beam_steps_table(os.path.join(args.out, "table7.csv"), beam,
                      with_dynamics=args.with_dynamics,
                      alpha0=cfg.alpha0, lumping=cfg.lumping)
    print(f"wrote table1.csv .. table7.csv under {args.out}")


def _alpha0_for(name, alpha0):
    # The O(1)-sized element studies use the unit stabilization scale;
    # "auto" resolves to h_E only on the beam meshes.
    if alpha0 != "auto":
        return alpha0
    return "unit" if not name.startswith("beam") else "auto"


def _family_table(path, name, eps_values, alpha0, lumping, threads):
    a0 = _alpha0_for(name, alpha0)
    with open(path, "w") as fh:
        fh.write("eps,method,omega_max,argmax_element,omega_reference,"
                 "dt_ratio_vem_over_fem\n")
        for eps in eps_values:
            rows = {}
            for variant in ("fem", "vem"):
                mesh = benchmarks.gen_benchmark(name, eps, variant)
                rep = eig.critical_dt(mesh, variant, alpha0=a0,
                                      lumping=lumping, threads=threads)
                rows[variant] = rep
            ratio = rows["fem"].omega_star / rows["vem"].omega_star
            for variant in ("fem", "vem"):
                rep = rows[variant]
                others = [w for i, w in enumerate(rep.omega_elements)
                          if i != rep.argmax_element]
                ref = min(others) if others else float("nan")
                tail = f"{ratio:.6e}" if variant == "vem" else ""
                fh.write(f"{eps:g},{variant},{rep.omega_star:.6e},"
                         f"{rep.argmax_element},{ref:.6e},{tail}\n")


def _spire_table(path, eps_values, alpha0, lumping, threads):
    with open(path, "w") as fh:
        fh.write("eps,case,omega_fem,omega_vem,dt_ratio_vem_over_fem\n")
        for eps in eps_values:
            for case in ("A", "B", "C"):
                mf = benchmarks.gen_benchmark(f"spire{case}", eps, "fem")
                mv = benchmarks.gen_benchmark(f"spire{case}", eps, "vem")
                a0 = _alpha0_for("spire", alpha0)
                rf = eig.critical_dt(mf, "fem", alpha0=a0, lumping=lumping,
                                     threads=threads)
                rv = eig.critical_dt(mv, "vem", alpha0=a0, lumping=lumping,
                                     threads=threads)
                fh.write(f"{eps:g},{case},{rf.omega_star:.6e},"
                         f"{rv.omega_star:.6e},"
                         f"{rf.omega_star / rv.omega_star:.6e}\n")


def _beam_table(path, alpha0, lumping, threads):
    rows = {}
    with open(path, "w") as fh:
        fh.write("case,method,omega_star_element,omega_global,"
                 "dt_ratio_vem_over_fem\n")
        for case in ("A", "B"):
            per = {}
            for method in ("fem", "vem"):
                mesh = benchmarks.gen_benchmark("beam" + case, variant=method)
                rep = eig.critical_dt(mesh, method, alpha0=alpha0,
                                      lumping=lumping, threads=threads)
                K, M = dynamics.assemble(mesh, method, alpha0=alpha0,
                                         lumping=lumping, threads=threads)
                f, d = dynamics.beam_boundary_dofs(mesh)
                bc = np.unique(np.concatenate([f, d]))
                wg, _, _ = eig.global_max_frequency(K, M, bc)
                per[method] = (rep, wg)
            ratio = per["fem"][0].omega_star / per["vem"][0].omega_star
            for method in ("fem", "vem"):
                rep, wg = per[method]
                fh.write(f"{case},{method},{rep.omega_star:.6e},{wg:.6e},"
                         f"{ratio if method == 'vem' else ''}\n")
            rows[case] = per
    return rows


def _beam_steps_table(path, beam_rows, with_dynamics, alpha0, lumping):
    c_long = math.sqrt(benchmarks.STEEL_NU0.youngs_modulus
                       / benchmarks.STEEL_NU0.density)
    t_max = 3.0 * 4.0 / c_long
    with open(path, "w") as fh:
        fh.write("case,method,dt_crit,steps_for_three_transits,"
                 "measured_wall_seconds\n")
        for case in ("A", "B"):
            for method in ("fem", "vem"):
                rep, wg = beam_rows[case][method]
                dt = rep.dt_crit if method == "vem" else 2.0 / wg
                steps = int(math.ceil(t_max / (0.9 * dt)))
                wall = ""
                if with_dynamics and method == "vem":
                    exp = dynamics.tapered_beam_experiment(
                        case, method, dt_factor=0.9, dt_basis="element",
                        alpha0=alpha0, lumping=lumping)
                    wall = f"{exp.result.wall_seconds:.3f}"
                    steps = exp.result.steps
                fh.write(f"{case},{method},{dt:.6e},{steps},{wall}\n")


if __name__ == "__main__":
    sys.exit(main())
