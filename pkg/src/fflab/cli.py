"""Command-line interface: every experiment as a subcommand.

Each run writes machine-readable outputs (CSV for sweeps, JSON for
reports) plus a manifest echoing the resolved configuration, the content
hash of the IFS file, and every numeric default in play, so runs are
reproducible byte for byte.  Exit codes: 0 success, 1 domain error,
2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, census, finescale, ifs, kernels, measure, oscillatory, polycover
from .errors import FractalLabError
from .ifs import load_ifs_config
from .measure import SelfSimilarMeasure


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _collect_defaults() -> dict:
    return {
        "ifs": dict(ifs.DEFAULTS),
        "measure": dict(measure.DEFAULTS),
        "oscillatory": dict(oscillatory.DEFAULTS),
        "census": dict(census.DEFAULTS),
        "polycover": dict(polycover.DEFAULTS),
        "finescale": dict(finescale.DEFAULTS),
        "kernels": dict(kernels.DEFAULTS),
    }


def _write_manifest(outdir: Path, args: argparse.Namespace, extra=None):
    payload = {
        "version": __version__,
        "backend": kernels.backend_name(),
        "command": args.command,
        "arguments": {
            k: v for k, v in sorted(vars(args).items())
            if k not in ("func",) and not callable(v)
        },
        "defaults": _collect_defaults(),
    }
    ifs_path = getattr(args, "ifs", None)
    if ifs_path:
        payload["ifs_file_sha256"] = hashlib.sha256(
            Path(ifs_path).read_bytes()
        ).hexdigest()
    if extra:
        payload.update(extra)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "manifest.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n"
    )


def _outdir(args) -> Path:
    return Path(args.out)


def _load_measure(args) -> SelfSimilarMeasure:
    return SelfSimilarMeasure(load_ifs_config(args.ifs))


def _write_csv(path: Path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _parse_phase(spec: str, interval) -> oscillatory.Phase:
    """Phase syntax: 'poly:c0,c1,c2,...' with ascending coefficients."""
    kind, _, rest = spec.partition(":")
    if kind != "poly":
        raise FractalLabError(f"unknown phase kind {kind!r}; use poly:c0,c1,...")
    coeffs = [float(c) for c in rest.split(",")]
    return oscillatory.polynomial_phase(coeffs, interval=interval)


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(args):
    m = _load_measure(args)
    est = measure.frostman_exponent_estimate(m, args.finest_scale)
    lo, hi = m.ifs.attractor_bounds()
    out = _outdir(args)
    _write_manifest(out, args)
    report = {
        "maps": len(m.ifs.maps),
        "support": [_fmt(v) for v in m.support],
        "attractor_bounds": [_fmt(lo), _fmt(hi)],
        "homogeneous": m.ifs.is_homogeneous,
        "mass_scaling_exponent": est.exponent,
        "fit_residual": est.fit_residual,
        "ifs_hash": m.ifs.content_hash(),
    }
    (out / "validate.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"valid IFS: attractor in [{lo:.6g}, {hi:.6g}], "
          f"mass-scaling exponent {est.exponent:.4f}")
    return 0


def cmd_fourier(args):
    m = _load_measure(args)
    if args.lambda_max is not None:
        lams = np.linspace(args.lam, args.lambda_max, args.count)
    else:
        lams = np.array([args.lam])
    vals = measure.fourier_transform_many(m, lams, args.tol, workers=args.workers)
    out = _outdir(args)
    _write_manifest(out, args, {"ifs_hash": m.ifs.content_hash()})
    rows = [
        (_fmt(l), _fmt(v.real), _fmt(v.imag), _fmt(abs(v)), _fmt(args.tol))
        for l, v in zip(lams, vals)
    ]
    _write_csv(out / "fourier.csv",
               ["lambda", "re", "im", "modulus", "error_bound"], rows)
    summary = {
        "ifs_hash": m.ifs.content_hash(),
        "tolerance": args.tol,
        "count": len(lams),
        "max_modulus": _fmt(np.abs(vals).max()),
    }
    (out / "fourier_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    v = vals[0]
    print(f"transform({lams[0]:.6g}) = {v.real:.12g} {v.imag:+.12g}i "
          f"(|.| = {abs(v):.12g}, tol {args.tol:g})")
    return 0


def cmd_oscillatory(args):
    m = _load_measure(args)
    phase = _parse_phase(args.phase, m.support)
    value, err = oscillatory.oscillatory_integral(m, phase, args.lam, args.scale)
    out = _outdir(args)
    _write_manifest(out, args, {"ifs_hash": m.ifs.content_hash()})
    report = {
        "lambda": args.lam,
        "scale": args.scale,
        "value_re": value.real,
        "value_im": value.imag,
        "modulus": abs(value),
        "error_bound": err,
        "phase": phase.description,
    }
    (out / "oscillatory.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"integral = {value.real:.10g} {value.imag:+.10g}i "
          f"+/- {err:.3g}")
    return 0


def cmd_decay(args):
    m = _load_measure(args)
    phase = _parse_phase(args.phase, m.support)
    fit = oscillatory.decay_exponent_fit(
        m, phase, args.tmin, args.tmax, samples_per_band=args.samples
    )
    out = _outdir(args)
    _write_manifest(out, args, {"ifs_hash": m.ifs.content_hash()})
    line = fit.fitted_line()
    rows = [
        (_fmt(T), _fmt(mx), _fmt(fv))
        for (T, mx), fv in zip(fit.dyadic_band_maxima, line)
    ]
    _write_csv(out / "decay.csv", ["T", "band_max", "fitted"], rows)
    report = {
        "tau": fit.tau,
        "fit_residual": fit.fit_residual,
        "value_tolerance": fit.value_tolerance,
        "bands": len(fit.dyadic_band_maxima),
        "t_min": args.tmin,
        "t_max": args.tmax,
        "samples_per_band": args.samples,
        "phase": phase.description,
    }
    (out / "decay.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"decay exponent tau = {fit.tau:.4f} "
          f"(residual {fit.fit_residual:.3f}, {len(fit.dyadic_band_maxima)} bands)")
    return 0


def cmd_census(args):
    m = _load_measure(args)
    rep = census.bad_interval_census(m, args.t, args.c, args.tolerance,
                                     workers=args.workers)
    out = _outdir(args)
    _write_manifest(out, args, {"ifs_hash": m.ifs.content_hash()})
    flags = rep.is_bad()
    rows = [
        (str(n), _fmt(g), str(int(f)))
        for n, g, f in zip(rep.indices, rep.grid_maxima, flags)
    ]
    _write_csv(out / "census.csv", ["n", "grid_max", "bad_flag"], rows)
    report = {
        "t": rep.t, "c": rep.c, "tolerance": rep.tolerance,
        "threshold": rep.threshold, "count": rep.count,
        "grid_step": rep.grid_step,
        "range": [rep.n_min, rep.n_max],
        "bad_interval_indices": rep.bad_interval_indices.tolist(),
    }
    (out / "census.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"census t={rep.t:g} c={rep.c:g}: {rep.count} flagged intervals "
          f"of {rep.n_max - rep.n_min + 1}")
    return 0


def cmd_covering(args):
    poly = polycover.SparsePolynomial.from_string(args.poly, k=args.k, N=args.n_param)
    cov = polycover.covering_intervals(poly, args.a, args.b, args.epsilon)
    out = _outdir(args)
    _write_manifest(out, args)
    report = {
        "polynomial": str(poly),
        "a": args.a, "b": args.b, "epsilon": args.epsilon,
        "threshold_log": cov.threshold_log,
        "interval_count": cov.count,
        "intervals": [[_fmt(l), _fmt(h)] for l, h in cov.float_intervals()],
        "max_diameter": cov.sigma_scale,
        "sigma_exponent": cov.sigma_exponent,
    }
    (out / "covering.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"covering: {cov.count} intervals, max diameter {cov.sigma_scale:.3g}")
    return 0


def cmd_nonflat(args):
    lo, hi = (float(s) for s in args.interval.split(","))
    phase = _parse_phase(args.phase, (lo, hi))
    result = polycover.nonflat_certificate(phase, (lo, hi), args.kmax, args.c0)
    out = _outdir(args)
    _write_manifest(out, args)
    if result.certified:
        report = {
            "certified": True, "delta": result.delta, "rho": result.rho,
            "c0": result.c0, "certified_floor": result.certified_floor,
        }
        print(f"non-flat certificate: delta={result.delta:g}, rho={result.rho:.3g}")
    else:
        report = {
            "certified": False, "witness": result.witness,
            "derivative_values": list(result.derivative_values),
            "c0": result.c0,
        }
        print(f"refuted: derivatives all below {args.c0:g} at x={result.witness:.6g}")
    (out / "nonflat.json").write_text(json.dumps(report, indent=2) + "\n")
    return 0


def cmd_correlations(args):
    m = _load_measure(args)
    k_list = [int(k) for k in args.k.split(",")]
    seeds = list(range(args.seed, args.seed + args.seeds))
    exp = finescale.poisson_experiment(m, args.xi, args.N, k_list, seeds)
    out = _outdir(args)
    _write_manifest(out, args, {"ifs_hash": m.ifs.content_hash()})
    rows = []
    for k in k_list:
        for rep in exp.correlations[k]:
            rows.append((str(rep.seed), str(k), _fmt(rep.R_k), _fmt(rep.deviation)))
    _write_csv(out / "correlations.csv", ["seed", "k", "R_k", "deviation"], rows)
    bundle = {
        "xi": exp.xi, "N": exp.N, "k_list": list(exp.k_list),
        "seeds": list(exp.seeds),
        "x_values": [_fmt(x) for x in exp.x_values],
        "mean_gap_ks": exp.mean_gap_ks,
        "gap_ks": exp.gap_ks.tolist(),
        "sequence_error_bound": exp.sequence_error_bound,
        "per_k": {
            str(k): {
                "mean_deviation": exp.mean_deviation(k),
                "cross_seed_std": exp.cross_seed_std(k),
                "reference": exp.correlations[k][0].C_k
                * exp.correlations[k][0].f_integral,
            }
            for k in k_list
        },
    }
    (out / "correlations.json").write_text(json.dumps(bundle, indent=2) + "\n")
    for k in k_list:
        print(f"k={k}: mean deviation {exp.mean_deviation(k):.4f}, "
              f"cross-seed std {exp.cross_seed_std(k):.4f}")
    print(f"mean gap KS distance: {exp.mean_gap_ks:.4f}")
    return 0


def cmd_gaps(args):
    m = _load_measure(args)
    point = ifs.sample_point(
        m.ifs, args.seed,
        finescale.DEFAULTS["precision_margin_bits"]
        + math.ceil(args.N * math.log2(math.ceil(m.support[1]))) + 64,
    )
    seq = finescale.power_fractional_sequence(point.value, args.xi, args.N)
    rep = finescale.gap_distribution(seq.fractional_parts)
    out = _outdir(args)
    _write_manifest(out, args, {"ifs_hash": m.ifs.content_hash()})
    rows = [
        (_fmt(s), _fmt(e), _fmt(x))
        for s, e, x in zip(rep.s_grid, rep.empirical_cdf, rep.exponential_cdf)
    ]
    _write_csv(out / "gaps.csv", ["s", "empirical_cdf", "exponential_cdf"], rows)
    report = {
        "seed": args.seed, "N": args.N, "xi": args.xi,
        "ks_distance": rep.ks_distance,
        "mean_scaled_gap": rep.mean_scaled_gap,
    }
    (out / "gaps.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"gap KS distance to unit exponential: {rep.ks_distance:.4f}")
    return 0


def cmd_phase_integral(args):
    m = _load_measure(args)
    phase = finescale.CorrelationPhase(
        l=tuple(int(x) for x in args.l.split(",")),
        m=tuple(int(x) for x in args.m.split(",")),
        u=tuple(int(x) for x in args.u.split(",")),
        v=tuple(int(x) for x in args.v.split(",")),
        N=args.N, eps=args.eps,
    )
    value, err = finescale.correlation_phase_integral(
        m, phase, args.tolerance, scale_multiplier=args.scale_multiplier
    )
    out = _outdir(args)
    _write_manifest(out, args, {"ifs_hash": m.ifs.content_hash()})
    report = {
        "polynomial": str(phase.to_sparse_polynomial()),
        "modulus": abs(value),
        "value_re": value.real, "value_im": value.imag,
        "error_bound": err,
        "dominant_leading_term": phase.has_dominant_leading_term,
        "meets_degree_condition": phase.meets_degree_condition(),
    }
    (out / "phase_integral.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"|integral| = {abs(value):.6g} +/- {err:.3g}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fflab",
        description="harmonic-analysis experiments on self-similar measures",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, needs_ifs=True):
        if needs_ifs:
            sp.add_argument("--ifs", required=True, help="IFS config file")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--workers", type=int, default=None,
                        help="worker threads (default: FFLAB_WORKERS or 1)")

    sp = sub.add_parser("validate", help="validate an IFS config and profile it")
    common(sp)
    sp.add_argument("--finest-scale", type=float, default=2.0 ** -14)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("fourier", help="transform value or sweep")
    common(sp)
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--lambda-max", dest="lambda_max", type=float, default=None,
                    help="sweep up to this frequency")
    sp.add_argument("--count", type=int, default=256, help="sweep sample count")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.set_defaults(func=cmd_fourier)

    sp = sub.add_parser("oscillatory", help="direct oscillatory integral")
    common(sp)
    sp.add_argument("--phase", required=True, help="poly:c0,c1,c2,...")
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--scale", type=float, default=None)
    sp.set_defaults(func=cmd_oscillatory)

    sp = sub.add_parser("decay", help="fit the band-maximum decay exponent")
    common(sp)
    sp.add_argument("--phase", required=True)
    sp.add_argument("--tmin", type=float, default=2.0)
    sp.add_argument("--tmax", type=float, default=4096.0)
    sp.add_argument("--samples", type=int, default=256)
    sp.set_defaults(func=cmd_decay)

    sp = sub.add_parser("census", help="count frequency intervals with large transform")
    common(sp)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--c", type=float, required=True)
    sp.add_argument("--tolerance", type=float, default=1e-3)
    sp.set_defaults(func=cmd_census)

    sp = sub.add_parser("covering", help="cover the small-value set of a sparse polynomial")
    common(sp, needs_ifs=False)
    sp.add_argument("--poly", required=True, help="coeff:exp,coeff:exp,...")
    sp.add_argument("--a", type=float, required=True)
    sp.add_argument("--b", type=float, required=True)
    sp.add_argument("--epsilon", type=float, default=0.5)
    sp.add_argument("--k", type=int, required=True, help="family term bound")
    sp.add_argument("--n-param", type=int, required=True, help="family size bound")
    sp.set_defaults(func=cmd_covering)

    sp = sub.add_parser("nonflat", help="derivative-floor certificate for a phase")
    common(sp, needs_ifs=False)
    sp.add_argument("--phase", required=True)
    sp.add_argument("--interval", required=True, help="lo,hi")
    sp.add_argument("--kmax", type=int, required=True)
    sp.add_argument("--c0", type=float, required=True)
    sp.set_defaults(func=cmd_nonflat)

    sp = sub.add_parser("correlations", help="correlation sums for measure-typical points")
    common(sp)
    sp.add_argument("--xi", type=float, default=1.0)
    sp.add_argument("--N", type=int, default=2000)
    sp.add_argument("--k", default="2", help="comma-separated orders")
    sp.add_argument("--seeds", type=int, default=20)
    sp.add_argument("--seed", type=int, default=1, help="first seed")
    sp.set_defaults(func=cmd_correlations)

    sp = sub.add_parser("gaps", help="scaled gap distribution for one seed")
    common(sp)
    sp.add_argument("--xi", type=float, default=1.0)
    sp.add_argument("--N", type=int, default=2000)
    sp.add_argument("--seed", type=int, default=1)
    sp.set_defaults(func=cmd_gaps)

    sp = sub.add_parser("phase-integral", help="integral of a sparse polynomial phase")
    common(sp)
    sp.add_argument("--l", required=True, help="comma-separated")
    sp.add_argument("--m", required=True)
    sp.add_argument("--u", required=True)
    sp.add_argument("--v", required=True)
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--eps", type=float, default=0.1)
    sp.add_argument("--tolerance", type=float, default=0.01)
    sp.add_argument("--scale-multiplier", type=float, default=1.0)
    sp.set_defaults(func=cmd_phase_integral)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers is not None:
        os.environ["FFLAB_WORKERS"] = str(args.workers)
    try:
        return args.func(args)
    except FractalLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
