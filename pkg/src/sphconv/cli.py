"""Command-line driver for the rate studies, the factorization bench and network export.

Exit status is 0 on success, 1 when a bound or trend assertion fails and 2 on a
usage error (bad flags or infeasible parameters).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import experiments as ex
from .filters import FactorizationError, factorize_filter
from .network import build_theorem1_net, build_theorem2_net, dumps_network
from .operators import SplineMesh
from .sphere import default_grid, make_rng, sample_uniform


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _seed_list(text: str) -> list[int]:
    """``K`` means seeds 0..K-1; a comma list is taken literally."""
    vals = _int_list(text)
    return list(range(vals[0])) if "," not in text and len(vals) == 1 else vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sphconv", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, d=3, S=2, grid=2000):
        sp.add_argument("--d", type=int, default=d, help="sphere dimension (points in R^d)")
        sp.add_argument("--S", type=int, default=S, help="filter length bound")
        sp.add_argument("--grid-size", type=int, default=grid, help="evaluation grid size")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help="write output here instead of stdout")

    sp = sub.add_parser("factorize", help="factorize one filter into length-S filters")
    sp.add_argument("--taps", type=_float_list, required=True, help="comma-separated taps W_0..W_M")
    sp.add_argument("--S", type=int, default=2)
    sp.add_argument("--out")

    sp = sub.add_parser("thm2-rate", help="one-layer network vs additive ridge function")
    common(sp)
    sp.add_argument("--m", type=int, default=2)
    sp.add_argument("--N", type=_int_list, default=[8, 16, 32, 64, 128, 256])
    sp.add_argument("--ridge", choices=["abs", "abspower", "cos", "linear", "zero"], default="abs")
    sp.add_argument("--alpha", type=float, default=0.5, help="exponent for --ridge abspower")

    sp = sub.add_parser("thm1-rate", help="two-layer network vs zonal function, per depth")
    common(sp, grid=1000)
    sp.add_argument("--J", type=_int_list, default=[8, 16, 32, 64])
    sp.add_argument("--r", type=float, default=1.0)
    sp.add_argument("--tau", type=float, default=0.5)
    sp.add_argument("--seeds", type=_seed_list, default=list(range(10)), help="count K or comma list")
    sp.add_argument("--fspec", choices=["constant", "decay", "geometric"], default="decay")

    sp = sub.add_parser("discretize", help="Monte-Carlo discretization error per sample size")
    common(sp, grid=1000)
    sp.add_argument("--m", type=_int_list, default=[2**k for k in range(4, 13)])
    sp.add_argument("--n", type=int, default=4)
    sp.add_argument("--r", type=float, default=1.0)
    sp.add_argument("--seeds", type=_seed_list, default=list(range(20)), help="count K or comma list")
    sp.add_argument("--fspec", choices=["constant", "decay", "geometric"], default="decay")

    sp = sub.add_parser("bench-factor", help="factorization accuracy over random filters")
    sp.add_argument("--M", type=_int_list, default=list(range(1, 64)))
    sp.add_argument("--S", type=_int_list, default=list(range(2, 9)))
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")

    sp = sub.add_parser("export-net", help="build a network and write it in text form")
    common(sp)
    sp.add_argument("--kind", choices=["ridge", "zonal"], default="ridge")
    sp.add_argument("--m", type=int, default=2)
    sp.add_argument("--N", type=int, default=16)
    sp.add_argument("--J", type=int, default=16, help="depth (zonal networks only)")
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--r", type=float, default=1.0)
    sp.add_argument("--ridge", choices=["abs", "abspower", "cos", "linear", "zero"], default="abs")
    sp.add_argument("--alpha", type=float, default=0.5)
    sp.add_argument("--fspec", choices=["constant", "decay", "geometric"], default="decay")
    return p


def _factorize(a) -> str:
    fac = factorize_filter(a.taps, a.S)
    lines = [f"# rel_error={format(fac.rel_error, '.17g')}", "factor,taps"]
    for i, w in enumerate(fac.factors, 1):
        lines.append(f"{i}," + ";".join(format(float(v), ".17g") for v in w))
    return "\n".join(lines) + "\n"


def _export(a) -> str:
    ys = sample_uniform(a.d, a.m, make_rng(a.seed, 0))
    if a.kind == "ridge":
        fam = ex.ridge_family(a.ridge, a.m, a.alpha)
        mesh = SplineMesh(a.N)
        g_values = np.array([g(mesh.interior) for g in fam.profiles])
        return dumps_network(build_theorem2_net(ys, g_values, a.S, a.N))
    f = ex.zonal_test_function(a.fspec, a.d, a.r)
    return dumps_network(build_theorem1_net(f, a.r, a.n, ys, a.N, a.S, a.J))


def run(a) -> str:
    if a.command == "factorize":
        return _factorize(a)
    if a.command == "bench-factor":
        return ex.factor_bench_csv(ex.run_factorization_bench(a.M, a.S, a.trials, a.seed))
    if a.command == "export-net":
        return _export(a)
    grid = default_grid(a.d, a.grid_size, a.seed)
    if a.command == "thm2-rate":
        rep = ex.run_theorem2_rate(a.m, a.d, a.S, a.ridge, a.N, grid, a.seed, a.alpha)
    elif a.command == "thm1-rate":
        rep = ex.run_theorem1_rate(a.fspec, a.r, a.d, a.S, a.J, a.tau, a.seeds, grid)
    else:
        rep = ex.run_discretization_study(a.fspec, a.r, a.n, a.d, a.m, a.seeds, grid)
    return rep.to_csv()


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    try:
        text = run(a)
    except (ex.BoundViolation, FactorizationError) as exc:
        print(f"sphconv: assertion failed: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"sphconv: error: {exc}", file=sys.stderr)
        return 2
    if a.out:
        with open(a.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
