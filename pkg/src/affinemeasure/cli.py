"""Command line entry point.

Subcommands: homdim, density, oracles, coreset, frame, construct, oberlin.
Options may also be supplied through a plain ``key=value`` config file via
``--config``; explicit command-line flags win.  All randomness is derived
from the seed, so identical configurations produce byte-identical output.
Exit codes: 0 success, 1 computation failure (error code on stderr), 2 usage.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from math import comb

import numpy as np

from . import frames, harness
from .convexgeom import body_volume
from .coresets import core_subset, polynomial_system, uniform_grid
from .errors import ArtifactError
from .indexing import homogeneous_dimension, index_set
from .minimize import (
    OptimizerConfig,
    affine_density,
    bilinear_density,
    bilinear_density_exact,
    detnorm_check,
    grid_infimum_sl2,
)
from .curvature import assemble_tensor
from .polynomials import graph_embedding, map_from_text, map_to_text, Polynomial


@dataclass
class RunConfig:
    subcommand: str
    options: dict
    seed: int = 0


def _parse_config_file(path: str) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ArtifactError(f"bad config line: {line!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="affinemeasure")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("homdim", help="kappa sequence, index set, homogeneous dimension")
    p.add_argument("d", type=int)
    p.add_argument("n", type=int)
    p.add_argument("--csv", action="store_true")

    p = sub.add_parser("density", help="affine density of a polynomial map at a point")
    p.add_argument("--map", dest="map_file", required=True)
    p.add_argument("--point", default=None, help="comma separated coordinates")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=16)
    p.add_argument("--config", default=None)

    p = sub.add_parser("oracles", help="run the oracle suites")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--full", action="store_true", help="acceptance-sized suites")
    p.add_argument("--config", default=None)

    p = sub.add_parser("coreset", help="core-subset constants over seeded trials")
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--dim", type=int, default=1, choices=(1, 2))
    p.add_argument("--grid", type=int, default=40)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None)

    p = sub.add_parser("frame", help="harmonic tight frame vectors")
    p.add_argument("d0", type=int)
    p.add_argument("d", type=int)

    p = sub.add_parser("construct", help="emit a nondegenerate embedding")
    p.add_argument("d", type=int)
    p.add_argument("n", type=int)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("oberlin", help="body-sampling scaling experiment")
    p.add_argument("--map", dest="map_file", required=True)
    p.add_argument("--alpha", type=float, default=None,
                   help="exponent; defaults to d/Q")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--resolution", type=int, default=24)
    p.add_argument("--lo", default=None, help="comma separated box corner")
    p.add_argument("--hi", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--svg", default=None)
    p.add_argument("--config", default=None)
    return parser


def _apply_config_file(args: argparse.Namespace) -> None:
    path = getattr(args, "config", None)
    if not path:
        return
    values = _parse_config_file(path)
    for key, raw in values.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ArtifactError(f"unknown config key {key!r}")
        current = getattr(args, attr)
        default = _build_parser().parse_args(_reconstruct_minimal(args))
        # flags given on the command line override the file: only fill values
        # still at their parser defaults
        if getattr(default, attr, None) == current:
            setattr(args, attr, type(current)(raw) if current is not None else raw)


def _reconstruct_minimal(args: argparse.Namespace):
    # minimal argv that reparses to defaults for this subcommand
    base = [args.subcommand]
    if args.subcommand in ("density", "oberlin"):
        base += ["--map", args.map_file]
    elif args.subcommand == "homdim":
        base += [str(args.d), str(args.n)]
    elif args.subcommand == "frame":
        base += [str(args.d0), str(args.d)]
    elif args.subcommand == "construct":
        base += [str(args.d), str(args.n)]
    return base


def _parse_point(text: str | None, d: int) -> np.ndarray:
    if text is None:
        return np.zeros(d)
    vals = [float(v) for v in text.replace(",", " ").split()]
    return np.asarray(vals, dtype=float)


def _load_map(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return map_from_text(fh.read())
    except FileNotFoundError:
        print("file-not-found", file=sys.stderr)
        raise SystemExit(2)


def _cmd_homdim(args) -> int:
    idx = index_set(args.d, args.n)
    if args.csv:
        print("d,n,j,kappa_j,Q")
        for j, kj in enumerate(idx.kappa, start=1):
            print(f"{args.d},{args.n},{j},{kj},{idx.Q}")
    else:
        print(f"kappa = {list(idx.kappa)}")
        print(f"lambda = {[tuple(p) for p in idx.pairs]}")
        print(f"Q = {idx.Q}")
    return 0


def _cmd_density(args) -> int:
    f = _load_map(args.map_file)
    point = _parse_point(args.point, f.d)
    cfg = OptimizerConfig(seed=args.seed, restarts=args.restarts)
    res = affine_density(f, point, cfg)
    idx = index_set(f.d, f.n)
    print("d,n,Q,density,infimum,nullcone,iterations")
    print(f"{f.d},{f.n},{idx.Q},{res.density!r},{res.infimum!r},"
          f"{int(res.nullcone_suspected)},{res.iterations}")
    return 0


def _oracle_curve(seed: int, count: int) -> tuple[bool, float]:
    from numpy.polynomial import polynomial as nppoly
    rng = np.random.default_rng(seed)
    worst = 0.0
    for trial in range(count):
        n = 2 + trial % 2
        degree = n + rng.integers(0, 2)
        coefs = rng.uniform(-1, 1, size=(n, degree + 1))
        comps = [Polynomial(1, {(k,): float(c[k]) for k in range(degree + 1)})
                 for c in coefs]
        f = __import__("affinemeasure.polynomials", fromlist=["PolynomialMap"]) \
            .PolynomialMap(1, comps)
        t0 = float(rng.uniform(-1, 1))
        res = affine_density(f, [t0], OptimizerConfig(seed=seed))
        cols = []
        for order in range(1, n + 1):
            cols.append([nppoly.polyval(t0, nppoly.polyder(c, m=order)) for c in coefs])
        det = abs(np.linalg.det(np.array(cols).T))
        oracle = det ** (2.0 / (n * (n + 1)))
        gap = abs(res.density - oracle) / max(oracle, 1e-9)
        worst = max(worst, gap)
    return worst <= 1e-12, worst


def _oracle_bilinear(seed: int, count: int) -> tuple[bool, float]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for trial in range(count):
        d = 2 + trial % 2
        B = rng.uniform(-1, 1, size=(d, d))
        A = 0.5 * (B + B.T)
        if trial % 10 == 0:
            w, V = np.linalg.eigh(A)
            w[0] = 0.0
            A = (V * w) @ V.T
            A = 0.5 * (A + A.T)
        res = bilinear_density(A, OptimizerConfig(seed=seed + trial))
        exact = bilinear_density_exact(A)
        gap = abs(res.density - exact) / max(abs(exact), 1.0)
        worst = max(worst, gap)
    return worst <= 1e-6, worst


def _oracle_detnorm(seed: int, count: int) -> tuple[bool, float]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for trial in range(count):
        n = 2 + trial % 2
        m = int(rng.integers(n, 7))
        A = rng.uniform(-1, 1, size=(n, m))
        rep = detnorm_check(A, OptimizerConfig(seed=seed + trial, restarts=4))
        worst = max(worst, rep.relative_gap, rep.inf_gap)
    return worst <= 1e-6, worst


def _oracle_hypersurface(seed: int, fast: bool) -> tuple[bool, float]:
    worst = 0.0
    hessians = [np.eye(2), np.diag([1.0, -1.0]), np.array([[0.0, 1.0], [1.0, 0.0]])]
    for H in hessians:
        phi = Polynomial(2, {(2, 0): H[0, 0] / 2, (1, 1): H[0, 1], (0, 2): H[1, 1] / 2})
        f = graph_embedding(phi)
        res = affine_density(f, [0.0, 0.0], OptimizerConfig(seed=seed))
        closed = np.sqrt(2.0) * abs(np.linalg.det(H)) ** 0.25
        gap = abs(res.density - closed) / closed
        if not fast:
            T = assemble_tensor(f, [0.0, 0.0])
            val, _ = grid_infimum_sl2(T.entries, step=1e-2, refinements=2)
            grid_density = val ** (2.0 / 8.0)
            gap = max(gap, abs(grid_density - closed) / closed)
        worst = max(worst, gap)
    return worst <= 1e-4, worst


def _cmd_oracles(args) -> int:
    fast = not args.full
    suites = [
        ("curve", lambda: _oracle_curve(args.seed, 10 if fast else 50)),
        ("bilinear", lambda: _oracle_bilinear(args.seed, 20 if fast else 100)),
        ("detnorm", lambda: _oracle_detnorm(args.seed, 20 if fast else 100)),
        ("hypersurface", lambda: _oracle_hypersurface(args.seed, fast)),
    ]
    failed = False
    for name, run in suites:
        ok, gap = run()
        print(f"{name}-oracle: {'pass' if ok else 'FAIL'} (max gap {gap:.3e})")
        failed |= not ok
    return 1 if failed else 0


def _cmd_coreset(args) -> int:
    print("trial,k,mass_ratio,sup_constant,sup_bound,eps_b,seed")
    F = polynomial_system(args.dim, args.degree)
    rng_master = np.random.default_rng(args.seed)
    for trial in range(args.trials):
        grid = uniform_grid(F.lo, F.hi, args.grid)
        rng = np.random.default_rng(rng_master.integers(2 ** 63))
        mask = np.zeros(len(grid.points), dtype=bool)
        while not np.any(mask):
            for _ in range(int(rng.integers(1, 4))):
                lo = rng.uniform(0, 0.8, size=args.dim)
                hi = lo + rng.uniform(0.05, 0.3, size=args.dim)
                mask |= np.all((grid.points >= lo) & (grid.points <= hi), axis=1)
        res = core_subset(F, grid.with_mask(mask), seed=args.seed + trial)
        print(f"{trial},{res.k},{res.mass_ratio!r},{res.sup_constant!r},"
              f"{res.sup_bound!r},{res.eps_b!r},{args.seed}")
    return 0


def _cmd_frame(args) -> int:
    fr = frames.harmonic_untf(args.d0, args.d)
    print("j," + ",".join(f"phi_{k + 1}" for k in range(args.d0)))
    for j in range(args.d):
        print(f"{j + 1}," + ",".join(repr(v) for v in fr.vectors[j]))
    return 0


def _cmd_construct(args) -> int:
    f = frames.build_embedding(args.d, args.n, seed=args.seed)
    sys.stdout.write(map_to_text(f))
    return 0


def _write_svg(path: str, rows, alpha: float) -> None:
    pts = [(r.volume, r.mass) for r in rows if r.volume > 0 and r.mass > 0]
    width, height, margin = 640, 480, 50
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>']
    if pts:
        lv = np.log10([p[0] for p in pts])
        lm = np.log10([p[1] for p in pts])
        lv_lo, lv_hi = float(np.min(lv)), float(np.max(lv))
        lm_lo, lm_hi = float(np.min(lm)), float(np.max(lm))
        lv_hi += (lv_hi - lv_lo or 1.0) * 0.05
        lm_hi += (lm_hi - lm_lo or 1.0) * 0.05

        def sx(x):
            return margin + (x - lv_lo) / max(lv_hi - lv_lo, 1e-9) * (width - 2 * margin)

        def sy(y):
            return height - margin - (y - lm_lo) / max(lm_hi - lm_lo, 1e-9) * (height - 2 * margin)

        for x, y in zip(lv, lm):
            parts.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" '
                         f'fill="steelblue" fill-opacity="0.6"/>')
        # reference line of slope alpha through the data midpoint
        xm, ym = float(np.median(lv)), float(np.median(lm))
        parts.append(f'<line x1="{sx(lv_lo):.1f}" y1="{sy(ym + alpha * (lv_lo - xm)):.1f}" '
                     f'x2="{sx(lv_hi):.1f}" y2="{sy(ym + alpha * (lv_hi - xm)):.1f}" '
                     f'stroke="firebrick" stroke-dasharray="4"/>')
    parts.append(f'<text x="{width // 2}" y="{height - 10}" text-anchor="middle">'
                 f'log10 |K|</text>')
    parts.append(f'<text x="15" y="{height // 2}" transform="rotate(-90 15 {height // 2})" '
                 f'text-anchor="middle">log10 mass</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


def _cmd_oberlin(args) -> int:
    f = _load_map(args.map_file)
    lo = _parse_point(args.lo, f.d) if args.lo else -np.ones(f.d)
    hi = _parse_point(args.hi, f.d) if args.hi else np.ones(f.d)
    alpha = args.alpha
    if alpha is None:
        alpha = f.d / homogeneous_dimension(f.d, f.n)
    mu = harness.pullback_measure(f, lo, hi, args.resolution)
    report = harness.oberlin_experiment(mu, alpha, trials=args.trials, seed=args.seed)
    print("body_id,kind,volume,mass,ratio,seed,resolution")
    for r in report.rows:
        print(f"{r.body_id},{r.kind},{r.volume!r},{r.mass!r},{r.ratio!r},"
              f"{args.seed},{args.resolution}")
    print(f"# alpha={alpha!r} max_ratio={report.max_ratio!r}", file=sys.stderr)
    if args.svg:
        _write_svg(args.svg, report.rows, alpha)
    return 0


_COMMANDS = {
    "homdim": _cmd_homdim,
    "density": _cmd_density,
    "oracles": _cmd_oracles,
    "coreset": _cmd_coreset,
    "frame": _cmd_frame,
    "construct": _cmd_construct,
    "oberlin": _cmd_oberlin,
}


def run(config: RunConfig) -> int:
    """Dispatch a parsed run configuration."""
    ns = argparse.Namespace(subcommand=config.subcommand, **config.options)
    return _COMMANDS[config.subcommand](ns)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args)
        options = {k: v for k, v in vars(args).items() if k != "subcommand"}
        config = RunConfig(subcommand=args.subcommand, options=options,
                           seed=getattr(args, "seed", 0))
        return run(config)
    except ArtifactError as exc:
        print(exc.code, file=sys.stderr)
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
