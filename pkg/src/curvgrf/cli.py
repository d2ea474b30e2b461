"""Command-line interface: ``curvgrf <subcommand> [flags]``.

Settings resolve as flags > ``--config`` file > defaults.  The config file
holds ``key = value`` lines (``#`` starts a comment); unknown keys are an
error.  Exit codes: 0 success, 1 failed validation, 2 usage or input error.
"""
import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import covariance, density, ensemble, fieldgrid, matops
from ._backend import resolve_threads
from .corrmodel import KINDS, CorrelationModel, constants
from .curvature import curvatures_of

FMT = "%.17g"

# config key -> (parser, default)
SETTINGS = {
    "model.kind": (str, "gaussian"),
    "model.lengthscale": (float, 1.0),
    "model.variance": (float, 1.0),
    "model.shape": (float, 1.0),
    "n": (int, 2),
    "seed": (int, 0),
    "count": (int, 10000),
    "threads": (int, None),
    "profile": (str, "fast"),
    "grid.shape": (int, 256),
    "grid.spacing": (float, 0.125),
    "grid.reals": (int, 20),
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    values: dict = field(default_factory=lambda: {k: d for k, (_, d) in SETTINGS.items()})

    def __getitem__(self, key):
        return self.values[key]

    @property
    def model(self):
        return CorrelationModel(
            kind=self["model.kind"],
            lengthscale=self["model.lengthscale"],
            variance=self["model.variance"],
            shape=self["model.shape"],
        )


def parse_config_file(path):
    """``key = value`` pairs from a plain-text file, converted by ``SETTINGS``."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SETTINGS:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            out[key] = SETTINGS[key][0](value)
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return out


def resolve_config(args):
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg.values.update(parse_config_file(args.config))
    for key in SETTINGS:
        value = getattr(args, key.replace(".", "_"), None)
        if value is not None:
            cfg.values[key] = value
    return cfg


# --------------------------------------------------------------------------
# output helpers


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _write_csv(fh, header, rows):
    fh.write(",".join(header) + "\n")
    if len(rows):
        np.savetxt(fh, np.asarray(rows, dtype=float).reshape(len(rows), -1), fmt=FMT, delimiter=",")


def _write_matrices(mats, out_dir):
    """Each matrix as CSV with a ``c1..cK`` header; one file per matrix or stdout blocks."""
    for name, M in mats.items():
        M = np.atleast_2d(M)
        header = [f"c{j + 1}" for j in range(M.shape[1])]
        if out_dir:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            with open(Path(out_dir) / f"{name}.csv", "w", newline="") as fh:
                _write_csv(fh, header, M)
        else:
            sys.stdout.write(f"# {name}\n")
            _write_csv(sys.stdout, header, M)


def jet_header(n):
    rows, cols = matops._vech_rows_cols(n)
    return [f"g_{i + 1}" for i in range(n)] + [f"h_{r + 1}{c + 1}" for r, c in zip(rows, cols)]


def parse_grid(spec):
    """``start:stop:num`` to ``numpy.linspace(start, stop, num)``."""
    try:
        a, b, k = spec.split(":")
        a, b, k = float(a), float(b), int(k)
    except ValueError:
        raise UsageError(f"grid must look like start:stop:num, got {spec!r}") from None
    if k < 1:
        raise UsageError("grid needs at least one point")
    return np.linspace(a, b, k)


# --------------------------------------------------------------------------
# subcommands


def cmd_ops(args, cfg):
    n = cfg["n"]
    _write_matrices({
        "commutation": matops.commutation_matrix(n),
        "duplication": matops.duplication_matrix(n),
        "duplication_pinv": matops.dup_pinv(n),
    }, args.out_dir)
    return 0


def cmd_bundle(args, cfg):
    b = covariance.build_bundle(cfg["n"], constants(cfg.model))
    _write_matrices({
        "grad_cov": b.grad_cov,
        "cross_cov": b.cross_cov,
        "hess_cov": b.hess_cov,
        "sigma_n": b.sigma_n,
        "sigma_tilde": b.sigma_tilde,
        "sigma_det": np.array([[b.sigma_det]]),
    }, args.out_dir)
    return 0


def cmd_sample_jets(args, cfg):
    n = cfg["n"]
    sc = ensemble.SamplerConfig(n=n, model=cfg.model, seed=cfg["seed"], count=cfg["count"])
    fh, close = _open_out(args.out)
    try:
        fh.write(",".join(jet_header(n)) + "\n")
        for batch in ensemble.jet_chunks(sc, threads=cfg["threads"]):
            np.savetxt(fh, np.hstack([batch.gradients, batch.vech]), fmt=FMT, delimiter=",")
    finally:
        if close:
            fh.close()
    return 0


def read_jets(path):
    """Jets CSV (``g_1..g_n, h_11, h_21, ...``) into a :class:`JetBatch`."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    n = sum(1 for h in header if h.startswith("g_"))
    if n < 1 or header != jet_header(n):
        raise UsageError(f"{path}: not a jets CSV (header {header[:4]}...)")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return ensemble.JetBatch(data[:, :n], matops.vech_inv(data[:, n:], n))


def cmd_curvature(args, cfg):
    batch = read_jets(args.jets)
    if batch.n < 2:
        raise UsageError("curvatures need n >= 2")
    kappas, skipped = curvatures_of(batch, scale=args.scale)
    if skipped:
        print(f"skipped {skipped} jets with degenerate gradient", file=sys.stderr)
    fh, close = _open_out(args.out)
    try:
        _write_csv(fh, [f"kappa_{i + 1}" for i in range(batch.n - 1)], kappas)
    finally:
        if close:
            fh.close()
    return 0


def cmd_pdf(args, cfg):
    n = cfg["n"]
    spec = density.DensitySpec(n, constants(cfg.model))
    axis = parse_grid(args.grid)
    if args.which == "gradnorm":
        if np.any(axis < 0):
            raise UsageError("gradient-norm grid must be non-negative")
        pts, names = axis[:, None], ["u"]
        vals = density.gradnorm_pdf(spec, axis)
    else:
        dim = n - 1 if args.which == "curvature" else n
        if dim < 1:
            raise UsageError("curvature density needs n >= 2")
        mesh = np.meshgrid(*([axis] * dim), indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
        if args.which == "curvature":
            names = [f"kappa_{i + 1}" for i in range(dim)]
            vals = density.curvature_pdf(spec, pts)
        else:
            names = [f"lambda_{i + 1}" for i in range(dim)]
            vals = density.eig_pdf(spec, pts)
    fh, close = _open_out(args.out)
    try:
        _write_csv(fh, names + ["density"], np.column_stack([pts, np.atleast_1d(vals)]))
    finally:
        if close:
            fh.close()
    return 0


def cmd_sample_field(args, cfg):
    n = cfg["n"]
    model = cfg.model
    shape, spacing, reals = cfg["grid.shape"], cfg["grid.spacing"], cfg["grid.reals"]
    kappas, skipped = fieldgrid.grid_curvatures(
        model, shape, spacing, reals, cfg["seed"], n=n, threads=cfg["threads"])
    if skipped:
        print(f"skipped {skipped} grid points with degenerate gradient", file=sys.stderr)
    if args.dump_field:
        for r in range(reals):
            grid = fieldgrid.synthesize(model, shape, spacing, cfg["seed"], r, n=n)
            fieldgrid.write_field(grid, f"{args.dump_field}_r{r:03d}.bin")
    fh, close = _open_out(args.out)
    try:
        _write_csv(fh, [f"kappa_{i + 1}" for i in range(n - 1)], kappas)
    finally:
        if close:
            fh.close()
    return 0


def cmd_validate(args, cfg):
    from .validate import ValidationConfig, run_full_validation, validate_report_json

    vc = ValidationConfig(profile=cfg["profile"], seed=cfg["seed"], threads=cfg["threads"],
                          model=cfg.model, fail_fast=args.fail_fast)
    report = run_full_validation(vc)
    d = report.to_dict(timings=not args.no_timings)
    validate_report_json(d)
    for c in report.checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status} {c.name}: {c.statistic:.6g} (threshold {c.threshold:.6g}, "
              f"{c.runtime_s:.2f}s)", file=sys.stderr)
    fh, close = _open_out(args.out)
    try:
        fh.write(report.to_json(timings=not args.no_timings))
    finally:
        if close:
            fh.close()
    return 0 if report.passed else 1


# --------------------------------------------------------------------------
# parser


def _model_flags(p):
    p.add_argument("--kind", dest="model_kind", choices=KINDS, help="correlation family")
    p.add_argument("--lengthscale", dest="model_lengthscale", type=float, help="correlation length")
    p.add_argument("--variance", dest="model_variance", type=float, help="field variance sigma^2")
    p.add_argument("--model-shape", dest="model_shape", type=float,
                   help="rational-quadratic exponent a")


def _common(p, model=True):
    p.add_argument("--config", help="plain-text 'key = value' settings file")
    p.add_argument("--threads", type=int, help="worker threads (default: $CURVGRF_THREADS or all cores)")
    if model:
        _model_flags(p)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="curvgrf",
        description="Curvature statistics of isosurfaces of isotropic Gaussian random fields.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("ops", help="dump commutation and duplication matrices as CSV")
    _common(p, model=False)
    p.add_argument("--n", type=int, help="ambient dimension")
    p.add_argument("--out-dir", help="write one CSV per matrix here instead of stdout")
    p.set_defaults(func=cmd_ops)

    p = sub.add_parser("bundle", help="dump the zero-lag covariance matrices as CSV")
    _common(p)
    p.add_argument("--n", type=int, help="ambient dimension")
    p.add_argument("--out-dir", help="write one CSV per matrix here instead of stdout")
    p.set_defaults(func=cmd_bundle)

    p = sub.add_parser("sample-jets", help="sample (gradient, vech Hessian) jets to CSV")
    _common(p)
    p.add_argument("--n", type=int, help="ambient dimension")
    p.add_argument("--count", type=int, help="number of jets")
    p.add_argument("--seed", type=int, help="64-bit seed")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_sample_jets)

    p = sub.add_parser("curvature", help="principal curvatures of jets from a CSV")
    _common(p, model=False)
    p.add_argument("--jets", required=True, help="jets CSV written by sample-jets")
    p.add_argument("--scale", type=float, default=None,
                   help="gradient scale for the degeneracy guard (default 1)")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("pdf", help="evaluate a closed-form density on a grid")
    _common(p)
    p.add_argument("--which", required=True, choices=("curvature", "eig", "gradnorm"))
    p.add_argument("--n", type=int, help="ambient dimension")
    p.add_argument("--grid", required=True, help="start:stop:num per axis (tensor grid in >1 dims)")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_pdf)

    p = sub.add_parser("sample-field", help="curvatures from synthesized periodic fields")
    _common(p)
    p.add_argument("--n", type=int, choices=(2, 3), help="grid dimension")
    p.add_argument("--shape", dest="grid_shape", type=int, help="points per axis")
    p.add_argument("--spacing", dest="grid_spacing", type=float, help="grid spacing")
    p.add_argument("--reals", dest="grid_reals", type=int, help="number of realisations")
    p.add_argument("--seed", type=int, help="seed")
    p.add_argument("--out", help="output CSV of curvatures (default stdout)")
    p.add_argument("--dump-field", metavar="PREFIX",
                   help="also write each field as PREFIX_rNNN.bin with a .json header")
    p.set_defaults(func=cmd_sample_field)

    p = sub.add_parser("validate", help="run the validation suite and write a JSON report")
    _common(p)
    p.add_argument("--profile", choices=("fast", "full"), help="fast skips the grid checks")
    p.add_argument("--seed", type=int, help="seed")
    p.add_argument("--out", help="report JSON (default stdout)")
    p.add_argument("--fail-fast", action="store_true", help="stop at the first failing check")
    p.add_argument("--no-timings", action="store_true",
                   help="omit runtimes so reports are byte-identical across runs")
    p.set_defaults(func=cmd_validate)
    return parser


def _glue_negative_values(argv):
    """Attach ``--grid -5:5:11`` style values to their flag; argparse would read them as options."""
    out = []
    it = iter(argv)
    for tok in it:
        if tok == "--grid":
            nxt = next(it, None)
            if nxt is not None and nxt.startswith("-"):
                out.append(f"--grid={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
            continue
        out.append(tok)
    return out


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_glue_negative_values(argv))
    try:
        cfg = resolve_config(args)
        resolve_threads(cfg["threads"])
        return args.func(args, cfg)
    except (UsageError, ValueError, OSError) as exc:
        print(f"curvgrf {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
