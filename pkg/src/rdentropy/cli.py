"""Command-line experiment drivers.

Configuration is a flat key=value text file with dot-namespaced keys
(``problem.name``, ``scheme.base``, ``mesh.nx``, ``march.cfl`` ...).
Subcommands: run | convergence | audit | recover.  Exit codes: 0 success,
1 numerical failure, 2 usage or configuration error.
"""

import argparse
import csv
import sys

import numpy as np

from . import audit as audit_mod
from . import mesh as mesh_mod
from .errors import DomainError, InvalidArgumentError, NumericalError
from .problems import make_problem
from .residuals import ResidualEvaluator, SchemeConfig
from .solver import HISTORY_COLUMNS, MarchConfig, march

_DEFAULTS = {
    "problem.name": "sinh_steady",
    "mesh.nx": 16, "mesh.ny": None, "mesh.diagonal": "alternating",
    "mesh.nx_list": None, "mesh.file": None,
    "dofmap.degree": 1, "dofmap.continuity": "continuous",
    "scheme.base": "galerkin",
    "scheme.theta_jump": 0.0, "scheme.theta_stream": 0.0, "scheme.supg_theta": 1.0,
    "scheme.entropy_correction": True,
    "scheme.entropy_filter": "none", "scheme.filter_theta": 0.0,
    "scheme.epsilon": 1e-20, "scheme.entropy_flux": "eq32",
    "scheme.boundary_flux": "llf", "scheme.reduced_filter_quadrature": False,
    "march.cfl": 0.3, "march.t_end": None, "march.steady_tol": 1e-8,
    "march.max_iters": 20000, "march.local_dt": True,
}

_BOOL_KEYS = {"scheme.entropy_correction", "scheme.reduced_filter_quadrature",
              "march.local_dt"}
_INT_KEYS = {"mesh.nx", "mesh.ny", "dofmap.degree", "march.max_iters"}
_FLOAT_KEYS = {"scheme.theta_jump", "scheme.theta_stream", "scheme.supg_theta",
               "scheme.filter_theta", "scheme.epsilon", "march.cfl",
               "march.t_end", "march.steady_tol"}


class ConfigError(Exception):
    pass


def parse_config(path):
    cfg = dict(_DEFAULTS)
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in cfg:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            cfg[key] = _coerce(key, value, path, lineno)
    if cfg["mesh.ny"] is None:
        cfg["mesh.ny"] = cfg["mesh.nx"]
    return cfg


def _coerce(key, value, path, lineno):
    try:
        if key in _BOOL_KEYS:
            if value.lower() in ("on", "true", "1", "yes"):
                return True
            if value.lower() in ("off", "false", "0", "no"):
                return False
            raise ValueError(value)
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
        if key == "mesh.nx_list":
            return [int(v) for v in value.replace(",", " ").split()]
        return value
    except ValueError as exc:
        raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from None


def dump_config(cfg, path):
    with open(path, "w") as fh:
        for key in sorted(cfg):
            if cfg[key] is None:
                continue
            value = cfg[key]
            if isinstance(value, bool):
                value = "on" if value else "off"
            elif isinstance(value, list):
                value = ",".join(str(v) for v in value)
            fh.write(f"{key} = {value}\n")


def scheme_from_config(cfg):
    return SchemeConfig(
        base=cfg["scheme.base"],
        theta_jump=cfg["scheme.theta_jump"],
        theta_stream=cfg["scheme.theta_stream"],
        supg_theta=cfg["scheme.supg_theta"],
        entropy_correction=cfg["scheme.entropy_correction"],
        entropy_filter=cfg["scheme.entropy_filter"],
        filter_theta=cfg["scheme.filter_theta"],
        epsilon=cfg["scheme.epsilon"],
        entropy_flux=cfg["scheme.entropy_flux"],
        boundary_flux=cfg["scheme.boundary_flux"],
        reduced_filter_quadrature=cfg["scheme.reduced_filter_quadrature"],
    )


def build_case(cfg, nx=None):
    problem = make_problem(cfg["problem.name"])
    if cfg["mesh.file"]:
        m = mesh_mod.read_mesh_ascii(cfg["mesh.file"])
    else:
        nx = nx if nx is not None else cfg["mesh.nx"]
        ny = nx if cfg["mesh.nx_list"] else cfg["mesh.ny"]
        m = mesh_mod.build_rect_mesh(problem.domain, nx, ny, cfg["mesh.diagonal"])
    dm = mesh_mod.build_dof_map(m, cfg["dofmap.degree"], cfg["dofmap.continuity"])
    return problem, m, dm


def march_from_config(cfg, problem, m, dm, scheme):
    mc = MarchConfig(cfl=cfg["march.cfl"], t_end=cfg["march.t_end"],
                     steady_tol=cfg["march.steady_tol"],
                     max_iters=cfg["march.max_iters"],
                     local_dt=cfg["march.local_dt"])
    return march(None, m, dm, problem, scheme, mc)


def write_history_csv(history, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HISTORY_COLUMNS)
        for row in history:
            w.writerow([repr(row[c]) if isinstance(row[c], float) else row[c]
                        for c in HISTORY_COLUMNS])


def write_field_vtk(path, m, dm, values):
    tris = mesh_mod.subtriangles(dm, m)
    mesh_mod.write_vtk_polydata(path, dm.dof_points, tris, point_data=values)


def cmd_run(args):
    cfg = parse_config(args.config)
    problem, m, dm = build_case(cfg)
    scheme = scheme_from_config(cfg)
    out = args.out
    result = march_from_config(cfg, problem, m, dm, scheme)
    write_history_csv(result.history, f"{out}/history.csv")
    write_field_vtk(f"{out}/field.vtk", m, dm, result.state.values)
    dump_config(cfg, f"{out}/effective_config.txt")
    if args.dump_entropy:
        ev = ResidualEvaluator(m, dm, problem, scheme)
        res = ev.residuals(result.state.values)
        E = res.E if res.E is not None else np.zeros(m.n_elements)
        alpha = res.alpha if res.alpha is not None else np.zeros(m.n_elements)
        with open(f"{out}/entropy_dump.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["element", "defect", "alpha"])
            for e in range(m.n_elements):
                w.writerow([e, repr(float(E[e])), repr(float(alpha[e]))])
    if not result.converged:
        print("march did not reach the requested tolerance", file=sys.stderr)
        return 1
    return 0


def cmd_convergence(args):
    cfg = parse_config(args.config)
    problem = make_problem(cfg["problem.name"])
    if problem.exact is None:
        raise InvalidArgumentError(f"{problem.name} has no exact solution")
    scheme = scheme_from_config(cfg)
    nx_list = cfg["mesh.nx_list"] or [cfg["mesh.nx"]]
    rows = []
    for nx in nx_list:
        problem, m, dm = build_case(cfg, nx=nx)
        result = march_from_config(cfg, problem, m, dm, scheme)
        l1, l2, linf = audit_mod.error_norms(result.state.values, problem.exact, m, dm)
        rows.append({"h": float(m.diameters().max()), "n_dofs": dm.n_dofs,
                     "L1": l1, "L2": l2, "Linf": linf})
    for norm in ("L1", "L2", "Linf"):
        values = [r[norm] for r in rows]
        hs = [r["h"] for r in rows]
        slp = audit_mod.slopes(values, hs)
        for i, r in enumerate(rows):
            r[f"slope_{norm}"] = "" if i == 0 else f"{slp[i - 1]:.3f}"
    path = f"{args.out}/convergence.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["h", "n_dofs", "L1", "slope", "L2", "slope", "Linf", "slope"])
        for r in rows:
            w.writerow([f"{r['h']:.6e}", r["n_dofs"],
                        f"{r['L1']:.6e}", r["slope_L1"],
                        f"{r['L2']:.6e}", r["slope_L2"],
                        f"{r['Linf']:.6e}", r["slope_Linf"]])
    with open(path) as fh:
        print(fh.read(), end="")
    return 0


def cmd_audit(args):
    cfg = parse_config(args.config)
    results = {}
    for flag in (True, False):
        cfg_run = dict(cfg)
        cfg_run["scheme.entropy_correction"] = flag
        problem, m, dm = build_case(cfg_run)
        scheme = scheme_from_config(cfg_run)
        results[flag] = march_from_config(cfg_run, problem, m, dm, scheme)
    path = f"{args.out}/audit.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "t", "mass_on", "mass_drift_on", "entropy_sum_on",
                    "mass_off", "mass_drift_off", "entropy_sum_off"])
        hon, hoff = results[True].history, results[False].history
        prev_on = prev_off = None
        for row_on, row_off in zip(hon, hoff):
            drift_on = 0.0 if prev_on is None else row_on["mass"] - prev_on
            drift_off = 0.0 if prev_off is None else row_off["mass"] - prev_off
            w.writerow([row_on["step"], repr(row_on["t"]),
                        repr(row_on["mass"]), repr(drift_on),
                        repr(row_on["entropy_residual_sum"]),
                        repr(row_off["mass"]), repr(drift_off),
                        repr(row_off["entropy_residual_sum"])])
            prev_on, prev_off = row_on["mass"], row_off["mass"]
    print(f"wrote {path}")
    return 0


def cmd_recover(args):
    from .fvrecover import P1_EDGES, P2_EDGES, recover_laplacian
    rows_out = []
    with open(args.input, newline="") as fh:
        for rownum, row in enumerate(csv.reader(fh)):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                psi = np.array([float(v) for v in row[1:]], dtype=float)
                elem = row[0]
            except ValueError:
                # header line
                continue
            edges = P1_EDGES if len(psi) == 3 else P2_EDGES
            if len(psi) not in (3, 6):
                raise InvalidArgumentError(
                    f"{args.input}:{rownum}: expected 3 or 6 residuals, got {len(psi)}")
            graph = recover_laplacian(psi, edges)
            for (i, j), f in zip(graph.edges, graph.flux):
                rows_out.append([elem, i, j, repr(float(f))])
    path = f"{args.out}/fluxes.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["element", "node_from", "node_to", "flux"])
        w.writerows(rows_out)
    print(f"wrote {path}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="rdentropy",
                                     description="residual-distribution experiment driver")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("run", cmd_run), ("convergence", cmd_convergence),
                     ("audit", cmd_audit), ("recover", cmd_recover)):
        p = sub.add_parser(name)
        if name == "recover":
            p.add_argument("--input", required=True, help="CSV of per-element residuals")
        else:
            p.add_argument("--config", required=True)
        p.add_argument("--out", default=".")
        p.add_argument("--deterministic", action="store_true",
                       help="accepted for compatibility; runs are deterministic")
        if name == "run":
            p.add_argument("--dump-entropy", action="store_true")
        p.set_defaults(fn=fn)
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InvalidArgumentError as exc:
        print(f"invalid argument: {exc}", file=sys.stderr)
        return 2
    except (DomainError, NumericalError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
