"""Command line driver.

``xhho run`` solves a model problem on a mesh sequence (or sweeps the degree
on one mesh) and writes a result table; ``xhho mesh`` writes a generated mesh
to a file.  Exit codes: 0 success, 2 configuration error, 3 conditioning
failure, 4 solver failure.
"""
import argparse
from dataclasses import dataclass, field
import logging
import math
import sys

from .analysis import compute_errors, convergence_rates, format_table
from .assembly import assemble, discretize, solve
from .enrichment import build_enrichment_space, corner_singular_function, oscillatory_function
from .errors import ConditioningError, MeshError, SolverError
from .mesh import generate_cartesian, generate_triangular, read_mesh, write_mesh
from .problems import PROBLEMS, get_problem

log = logging.getLogger("xhho")

EXIT_OK, EXIT_CONFIG, EXIT_CONDITIONING, EXIT_SOLVER = 0, 2, 3, 4

GENERATORS = {"cartesian": generate_cartesian, "triangular": generate_triangular}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    problem: str = "lshape_corner"
    meshes: list = field(default_factory=lambda: ["cartesian"])
    refine: list = field(default_factory=lambda: [2, 4, 8, 16])
    k: list = field(default_factory=lambda: [1])
    gamma: float = 0.0
    enrichment: str = "auto"
    omega: float = 1.5 * math.pi
    epsilon: float = 0.05
    stab: str = "l2"
    solver: str = "direct"
    cg_tol: float = 1e-12
    out: str = "-"
    quad_safety: int = 0

    def validate(self):
        if self.problem not in PROBLEMS:
            raise ConfigError("unknown problem %r" % self.problem)
        if not self.meshes:
            raise ConfigError("no mesh given")
        for m in self.meshes:
            if m not in GENERATORS and not m.startswith("file:"):
                raise ConfigError("unknown mesh %r (cartesian, triangular or file:<path>)" % m)
        if any(m in GENERATORS for m in self.meshes) and not self.refine:
            raise ConfigError("refinement list is empty")
        if any(n < 1 for n in self.refine):
            raise ConfigError("refinement levels must be positive")
        if not self.k or any(k < 0 for k in self.k):
            raise ConfigError("k must be nonnegative")
        if not self.gamma >= 0:
            raise ConfigError("gamma must be nonnegative")
        if self.enrichment not in ("auto", "none", "corner", "oscillatory"):
            raise ConfigError("unknown enrichment %r" % self.enrichment)
        if self.stab not in ("l2", "grad", "bdry"):
            raise ConfigError("unknown stabilisation %r" % self.stab)
        if self.solver not in ("direct", "cg"):
            raise ConfigError("unknown solver %r" % self.solver)
        if not self.cg_tol > 0:
            raise ConfigError("cg tolerance must be positive")
        if self.quad_safety < 0:
            raise ConfigError("quadrature safety must be nonnegative")
        return self


def parse_int_list(text):
    try:
        return [int(t) for t in str(text).replace(",", " ").split()]
    except ValueError:
        raise ConfigError("expected a list of integers, got %r" % text) from None


def parse_k(text):
    """``"2"``, ``"0:3"`` (inclusive) or ``"0,1,2"``."""
    text = str(text).strip()
    try:
        if ":" in text:
            lo, hi = (int(t) for t in text.split(":"))
            if hi < lo:
                raise ConfigError("empty k range %r" % text)
            return list(range(lo, hi + 1))
        return parse_int_list(text)
    except ValueError:
        raise ConfigError("bad k specification %r" % text) from None


def parse_real(text, name):
    try:
        return float(text)  # accepts "inf"
    except ValueError:
        raise ConfigError("bad value for %s: %r" % (name, text)) from None


_CONVERTERS = {
    "problem": str,
    "meshes": lambda v: str(v).split(),
    "refine": parse_int_list,
    "k": parse_k,
    "gamma": lambda v: parse_real(v, "gamma"),
    "enrichment": str,
    "omega": lambda v: parse_real(v, "omega"),
    "epsilon": lambda v: parse_real(v, "epsilon"),
    "stab": str,
    "solver": str,
    "cg_tol": lambda v: parse_real(v, "cg-tol"),
    "out": str,
    "quad_safety": int,
}

_KEY_ALIASES = {"mesh": "meshes", "cg-tol": "cg_tol", "quad-safety": "quad_safety"}


def read_config_file(path):
    """``key = value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc)) from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("%s:%d: expected key = value" % (path, lineno))
        key, value = (t.strip() for t in line.split("=", 1))
        key = _KEY_ALIASES.get(key, key.replace("-", "_"))
        if key not in _CONVERTERS:
            raise ConfigError("%s:%d: unknown key %r" % (path, lineno, key))
        values[key] = value
    return values


def build_config(args):
    raw = read_config_file(args.config) if args.config else {}
    for key in _CONVERTERS:
        flag = getattr(args, key, None)
        if flag is not None:
            raw[key] = " ".join(flag) if isinstance(flag, list) else flag
    cfg = RunConfig()
    for key, value in raw.items():
        try:
            setattr(cfg, key, _CONVERTERS[key](value))
        except (TypeError, ValueError) as exc:
            raise ConfigError("bad value for %s: %s" % (key, exc)) from None
    return cfg.validate()


def enrichment_functions(cfg, problem):
    if cfg.enrichment == "none":
        return ()
    if cfg.enrichment == "corner":
        return (corner_singular_function(1, omega=cfg.omega),)
    if cfg.enrichment == "oscillatory":
        return (oscillatory_function(cfg.epsilon),)
    return problem.enrichment


def load_meshes(cfg, problem):
    """``(label, mesh)`` pairs in configuration order."""
    out = []
    for spec in cfg.meshes:
        if spec.startswith("file:"):
            path = spec[5:]
            try:
                with open(path) as fh:
                    out.append((path, read_mesh(fh)))
            except OSError as exc:
                raise ConfigError("cannot read mesh %s: %s" % (path, exc)) from None
        else:
            gen = GENERATORS[spec]
            for n in cfg.refine:
                out.append(("%s-%d" % (spec, n), gen(problem.domain, n)))
    return out


def run_case(problem, mesh, k, cfg, functions):
    """Solve one (mesh, k) pair and return its error report."""
    space = build_enrichment_space(mesh, functions, cfg.gamma, problem.singular_point)
    disc = discretize(mesh, k, space, cfg.stab, cfg.quad_safety)
    system = assemble(disc, problem.source, problem.dirichlet)
    sol = solve(system, cfg.solver, cfg.cg_tol)
    return compute_errors(disc, sol, problem.exact, label=",".join(f.label for f in functions))


def _diagnostic(exc, mesh):
    msg = "conditioning failure: %s" % exc
    owner = getattr(exc, "owner", None)
    kind = getattr(exc, "kind", "")
    if owner is not None and kind != "face_unknown" and 0 <= owner < mesh.n_elements:
        e = mesh.elements[owner]
        msg += "\n  element %d: centroid (%.6g, %.6g), diameter %.6g, raw condition %.3g" % (
            owner, e.centroid[0], e.centroid[1], e.diameter, exc.raw_condition)
    elif owner is not None and 0 <= owner < mesh.n_faces:
        f = mesh.faces[owner]
        msg += "\n  face %d: midpoint (%.6g, %.6g), raw condition %.3g" % (
            owner, f.midpoint[0], f.midpoint[1], exc.raw_condition)
        for t in f.element_indices:
            e = mesh.elements[t]
            msg += "\n  adjacent element %d: centroid (%.6g, %.6g), diameter %.6g" % (
                t, e.centroid[0], e.centroid[1], e.diameter)
    return msg


def _summary(reports, cfg, ksweep):
    lines = []
    if reports:
        lines.append("max CellCondition: %.3e" % max(r.condition for r in reports))
    if not ksweep:
        for k in sorted({r.k for r in reports}):
            rows = [r for r in reports if r.k == k]
            if len(rows) < 2:
                continue
            try:
                rates = convergence_rates(rows)
            except ValueError as exc:
                lines.append("k=%d: rates unavailable (%s)" % (k, exc))
                continue
            lines.append("k=%d least-squares rates (last 3 meshes): E0 %.3f  E1 %.3f  Ea %.3f" % (
                k, rates["E0"]["lsq"], rates["E1"]["lsq"], rates["Ea"]["lsq"]))
    return "\n".join(lines)


def run(cfg, stdout=None, stderr=None):
    """Execute a configuration; returns the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    problem = get_problem(cfg.problem, omega=cfg.omega, epsilon=cfg.epsilon)
    functions = enrichment_functions(cfg, problem)
    meshes = load_meshes(cfg, problem)
    ksweep = len(meshes) == 1 and len(cfg.k) > 1
    reports, failed = [], []
    status = EXIT_OK
    for k in cfg.k:
        for label, mesh in meshes:
            try:
                reports.append(run_case(problem, mesh, k, cfg, functions))
                r = reports[-1]
                log.info("%s k=%d: E0 %.3e E1 %.3e Ea %.3e", label, k, r.E0, r.E1, r.Ea)
            except ConditioningError as exc:
                print(_diagnostic(exc, mesh), file=stderr)
                failed.append((mesh.h, k, "conditioning owner=%s kind=%s" % (exc.owner, exc.kind)))
                status = EXIT_CONDITIONING
            except SolverError as exc:
                print("solver failure: %s" % exc, file=stderr)
                failed.append((mesh.h, k, "solver"))
                status = EXIT_SOLVER
            if status != EXIT_OK and not ksweep:
                break
        if status != EXIT_OK and not ksweep:
            break
    table = format_table(reports, failed, reference_power=ksweep)
    if cfg.out == "-":
        stdout.write(table)
    else:
        try:
            with open(cfg.out, "w") as fh:
                fh.write(table)
        except OSError as exc:
            print("cannot write %s: %s" % (cfg.out, exc), file=stderr)
            return EXIT_CONFIG
    summary = _summary(reports, cfg, ksweep)
    if summary:
        print(summary, file=stderr if cfg.out == "-" else stdout)
    return status


def _add_run_args(p):
    p.add_argument("--config", help="key = value file; flags override its entries")
    p.add_argument("--problem", choices=sorted(PROBLEMS))
    p.add_argument("--mesh", dest="meshes", nargs="+",
                   help="cartesian, triangular or file:<path> (several allowed)")
    p.add_argument("--refine", help="cells per unit length, e.g. 2,4,8,16")
    p.add_argument("--k", help="degree, inclusive range a:b or list")
    p.add_argument("--gamma", help="enrichment cut-off radius (real or inf)")
    p.add_argument("--enrichment", choices=["auto", "none", "corner", "oscillatory"])
    p.add_argument("--omega", help="corner opening angle of the corner enrichment")
    p.add_argument("--epsilon", help="oscillatory problem parameter")
    p.add_argument("--stab", choices=["l2", "grad", "bdry"])
    p.add_argument("--solver", choices=["direct", "cg"])
    p.add_argument("--cg-tol", dest="cg_tol")
    p.add_argument("--out", help="table path, '-' for standard output")
    p.add_argument("--quad-safety", dest="quad_safety", type=int,
                   help="extra quadrature degree for non-polynomial integrands")
    p.add_argument("-v", "--verbose", action="store_true")


def main(argv=None):
    """Entry point; returns the exit status."""
    parser = argparse.ArgumentParser(prog="xhho", description="Extended HHO Poisson solver")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_args(sub.add_parser("run", help="solve a model problem and tabulate errors"))
    pm = sub.add_parser("mesh", help="write a generated mesh")
    pm.add_argument("--family", choices=sorted(GENERATORS), default="cartesian")
    pm.add_argument("--domain", choices=["square", "l_shape"], default="l_shape")
    pm.add_argument("--n", type=int, default=2)
    pm.add_argument("--out", default="-")
    args = parser.parse_args(argv)

    if args.command == "mesh":
        try:
            mesh = GENERATORS[args.family](args.domain, args.n)
        except (ValueError, MeshError) as exc:
            print("error: %s" % exc, file=sys.stderr)
            return EXIT_CONFIG
        if args.out == "-":
            write_mesh(mesh, sys.stdout)
        else:
            with open(args.out, "w") as fh:
                write_mesh(mesh, fh)
        return EXIT_OK

    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args)
        return run(cfg)
    except (ConfigError, MeshError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # precondition violations such as grad/bdry with non-harmonic enrichment
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
