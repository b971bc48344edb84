"""Compare the compiled and pure Python kernel backends.

Times each kernel on inputs of the size met in a k = 3 discretisation and,
with ``--solve``, one full L-shape solve per backend (the backend is chosen
at import, so that part runs in subprocesses).

    python3 benchmarks/bench_kernels.py [--repeat 5] [--solve]
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from xhho import _kernels_py
from xhho.polynomials import monomial_exponents, monomial_index

try:
    from xhho import _kernels
except ImportError:
    _kernels = None


def cases(rng):
    exps = np.ascontiguousarray(monomial_exponents(4), dtype=np.int64)
    index = np.ascontiguousarray(monomial_index(4), dtype=np.int64)
    xs = rng.uniform(-0.5, 0.5, (400, 2))
    v = rng.standard_normal((16, 16))
    gram = v @ v.T + 16 * np.eye(16)
    return {
        "eval_monomials": lambda k: k.eval_monomials(xs, exps),
        "volume_recursion": lambda k: k.volume_recursion(rng.standard_normal(len(exps)), exps, index,
                                                          np.array([0.3, -0.2]), 2.0 / 3.0),
        "radial_edge_recursion": lambda k: k.radial_edge_recursion(rng.standard_normal(6), 0.4, -1.0 / 3.0),
        "restrict_monomials": lambda k: k.restrict_monomials(0.1, 0.4, -0.2, 0.3, exps, 4),
        "mgs": lambda k: k.mgs(gram, 15, np.full(16, 1e-12)),
    }


SOLVE = ("import time; from xhho.cli import main; t = time.perf_counter(); "
         "main(['run', '--refine', '8', '--k', '2', '--gamma', '0.15', '--out', '/dev/null']); "
         "print(time.perf_counter() - t)")


def time_solve(pure):
    env = dict(os.environ)
    env.pop("XHHO_PURE_PYTHON", None)
    if pure:
        env["XHHO_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", SOLVE], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.split()[-1])


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--number", type=int, default=200)
    p.add_argument("--solve", action="store_true", help="also time a full solve per backend")
    args = p.parse_args(argv)

    backends = {"python": _kernels_py}
    if _kernels is not None:
        backends["cython"] = _kernels
    else:
        print("compiled extension not built; timing the Python backend only")

    rng = np.random.default_rng(0)
    print("%-24s %14s %14s %9s" % ("kernel", "python [us]", "cython [us]", "speedup"))
    for name, call in cases(rng).items():
        t = {}
        for label, mod in backends.items():
            best = min(timeit.repeat(lambda: call(mod), number=args.number, repeat=args.repeat))
            t[label] = 1e6 * best / args.number
        cy = t.get("cython", float("nan"))
        print("%-24s %14.2f %14.2f %9.1f" % (name, t["python"], cy, t["python"] / cy))

    if args.solve:
        tp, tc = time_solve(True), time_solve(False)
        print("%-24s %14.2f %14.2f %9.1f" % ("L-shape solve [s]", tp, tc, tp / tc))


if __name__ == "__main__":
    main()
