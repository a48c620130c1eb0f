"""Command line front end.

Subcommands: generate (draw an instance and optional gain samples),
solve (run admission control on an instance), validate (score a support
set on held-out draws), benchmark (full strategy comparison grid), and
oracle (exhaustive / certified reference answers for small problems).

Exit codes: 0 success, 2 bad configuration or input files, 3 runtime
failure, 4 validation check failed (outage above the requested level).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import serialize
from .deflation import admission_control
from .experiment import ExperimentConfig, HARNESS_SOLVER, emit_outputs, run_experiment
from .network import (GeometryConfig, generate_instance, sample_gains,
                      sample_size_adaptive_power, sample_size_constant_power)
from .formulation import normalize
from .oracles import certified_minimum, max_admissible_exhaustive
from .powerctl import meets_targets, run_two_timescale
from .solver import SolverConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_VALIDATION = 4


def _int_list(text: str):
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def _load_instance(path):
    return serialize.instance_from_dict(serialize.read_json(path))


def _samples_for(args, inst):
    if getattr(args, "samples", None):
        samples = serialize.samples_from_dict(serialize.read_json(args.samples))
        if samples.K != inst.K:
            raise ValueError("sample set and instance disagree on the number of links")
        return samples
    if getattr(args, "n_samples", None):
        return sample_gains(inst, args.n_samples, args.seed)
    raise ValueError("provide --samples FILE or --n-samples N")


def _cmd_generate(args):
    geo = GeometryConfig(square_side_km=args.side_km, rx_min_m=args.rx_min_m,
                         rx_max_m=args.rx_max_m, sinr_target_db=args.sinr_db,
                         noise_power_db=args.noise_db, budget_margin=args.margin,
                         kappa=args.kappa)
    inst = generate_instance(args.links, args.seed, geo)
    serialize.write_json(args.out, serialize.instance_to_dict(inst))
    print(f"wrote {args.links}-link instance to {args.out}")
    if args.n_samples:
        if not args.samples_out:
            raise ValueError("--n-samples requires --samples-out")
        samples = sample_gains(inst, args.n_samples, args.seed + 1)
        serialize.write_json(args.samples_out, serialize.samples_to_dict(samples))
        print(f"wrote {args.n_samples} gain samples to {args.samples_out}")
    return EXIT_OK


def _cmd_solve(args):
    inst = _load_instance(args.instance)
    samples = _samples_for(args, inst)
    solver_cfg = SolverConfig(tol_rel_obj=args.tol, trace_path=args.trace)
    out = admission_control(inst, samples, mode=args.mode,
                            alpha_fraction=args.alpha_fraction,
                            residual=args.residual, solver_config=solver_cfg,
                            postprocess=not args.no_postprocess)
    print(f"samples: {samples.N}  mode: {args.mode}")
    print(f"support ({out.n_supported} of {inst.K}): {out.support.tolist()}")
    print(f"removed: {list(out.removal_order)}  readmitted: {list(out.readmitted)}")
    print(f"relaxation solves: {out.n_solves}")
    if out.p_const is not None and out.p_const.size:
        print(f"constant powers [W]: {[f'{p:.3e}' for p in out.p_const]}")
    if args.out:
        serialize.write_json(args.out, serialize.outcome_to_dict(out))
        print(f"wrote outcome to {args.out}")
    return EXIT_OK


def _cmd_validate(args):
    inst = _load_instance(args.instance)
    p_const = None
    if args.outcome:
        out = serialize.outcome_from_dict(serialize.read_json(args.outcome))
        support = out.support
        p_const = out.p_const
    elif args.support is not None:
        support = np.asarray(_int_list(args.support), dtype=np.intp)
    else:
        raise ValueError("provide --outcome FILE or --support LIST")
    if args.draws:
        draws = sample_gains(inst, args.draws, args.seed)
    else:
        draws = _samples_for(args, inst)
    if p_const is not None and p_const.size:
        ok = meets_targets(inst, draws.gains, support, p_const)
        outage = 1.0 - float(np.mean(ok))
        print(f"constant-power outage over {draws.N} draws: {outage:.6f}")
    else:
        rep = run_two_timescale(inst, support, draws, csv_path=args.per_draw)
        outage = rep.outage_rate
        print(f"outage over {rep.n_draws} draws: {outage:.6f}")
        print(f"avg total power on non-outage draws [W]: {rep.avg_total_power:.6e}")
        print(f"power-iteration iters mean/max: {rep.fm_iters_mean:.1f}/{rep.fm_iters_max}")
        print(f"detector disagreements: {rep.detector_disagreements}")
    if args.eps is not None:
        if outage > args.eps:
            print(f"FAIL: outage {outage:.6f} exceeds eps {args.eps}")
            return EXIT_VALIDATION
        print(f"PASS: outage {outage:.6f} within eps {args.eps}")
    return EXIT_OK


def _cmd_benchmark(args):
    doc = {}
    if args.config:
        doc = serialize.read_json(args.config)
        if not isinstance(doc, dict):
            raise ValueError("benchmark config must be a JSON object")
    geometry = GeometryConfig(**doc.pop("geometry", {}))
    solver = SolverConfig(**doc.pop("solver", {})) if "solver" in doc else HARNESS_SOLVER
    overrides = {"k_list": args.k_list, "runs": args.runs, "eps": args.eps,
                 "delta": args.delta, "n_samples": args.n_samples,
                 "validation_draws": args.validation_draws, "seed": args.seed}
    for key, val in overrides.items():
        if val is not None:
            doc[key] = val
    cfg = ExperimentConfig(geometry=geometry, solver=solver, **doc)
    progress = None if args.quiet else lambda msg: print(msg, file=sys.stderr)
    result = run_experiment(cfg, progress=progress)
    paths = emit_outputs(result, args.out)
    print(f"design samples per run: {result.n_samples}")
    for row in result.rows:
        print(f"K={row.K} {row.algorithm}: supported {row.avg_supported:.2f}, "
              f"power {row.avg_total_power:.3e} W, max outage {row.max_outage:.4f}")
    print(f"outputs in {args.out}: " + ", ".join(sorted(paths)))
    return EXIT_OK


def _cmd_oracle(args):
    inst = _load_instance(args.instance)
    samples = _samples_for(args, inst)
    ran = False
    if args.exhaustive:
        size, subset = max_admissible_exhaustive(inst, samples)
        print(f"exhaustive max supportable size: {size} (e.g. {subset.tolist()})")
        ran = True
    if args.certified_min:
        prob = normalize(inst, samples, args.alpha_fraction)
        bound = certified_minimum(prob, shared=args.shared, grid_step=args.grid_step)
        print(f"relaxation minimum in [{bound.lower:.9e}, {bound.value:.9e}] "
              f"(gap {bound.gap:.2e}, converged {bound.converged})")
        ran = True
    if not ran:
        raise ValueError("nothing to do: pass --exhaustive and/or --certified-min")
    print(f"sample sizes at eps=0.05, delta=0.01: constant "
          f"{sample_size_constant_power(inst.K, 0.05, 0.01)}, "
          f"adaptive {sample_size_adaptive_power(0.05, 0.01)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="jpac",
                                 description="chance-constrained joint power and admission control")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="draw a random instance (and gain samples)")
    g.add_argument("--links", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--n-samples", type=int, default=0)
    g.add_argument("--samples-out")
    g.add_argument("--side-km", type=float, default=2.0)
    g.add_argument("--rx-min-m", type=float, default=10.0)
    g.add_argument("--rx-max-m", type=float, default=400.0)
    g.add_argument("--sinr-db", type=float, default=2.0)
    g.add_argument("--noise-db", type=float, default=-90.0)
    g.add_argument("--margin", type=float, default=3.0)
    g.add_argument("--kappa", type=float, default=100.0)
    g.set_defaults(func=_cmd_generate)

    s = sub.add_parser("solve", help="run admission control")
    s.add_argument("--instance", required=True)
    s.add_argument("--samples")
    s.add_argument("--n-samples", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--mode", choices=["adaptive", "constant"], default="adaptive")
    s.add_argument("--alpha-fraction", type=float, default=0.999)
    s.add_argument("--residual", choices=["one_sided", "two_sided"], default="one_sided")
    s.add_argument("--tol", type=float, default=1e-7)
    s.add_argument("--no-postprocess", action="store_true")
    s.add_argument("--trace", help="write per-iteration solver trace CSV here")
    s.add_argument("--out", help="write the outcome JSON here")
    s.set_defaults(func=_cmd_solve)

    v = sub.add_parser("validate", help="score a support set on held-out draws")
    v.add_argument("--instance", required=True)
    v.add_argument("--outcome")
    v.add_argument("--support", help="comma-separated link indices")
    v.add_argument("--draws", type=int, help="number of fresh validation draws")
    v.add_argument("--samples", help="validate on a stored sample set instead")
    v.add_argument("--n-samples", type=int)
    v.add_argument("--seed", type=int, default=1)
    v.add_argument("--eps", type=float, help="fail (exit 4) if outage exceeds this")
    v.add_argument("--per-draw", help="write per-draw validation CSV here")
    v.set_defaults(func=_cmd_validate)

    b = sub.add_parser("benchmark", help="run the strategy comparison grid")
    b.add_argument("--out", required=True, help="output directory")
    b.add_argument("--config", help="JSON file with experiment settings")
    b.add_argument("--k-list", type=_int_list)
    b.add_argument("--runs", type=int)
    b.add_argument("--eps", type=float)
    b.add_argument("--delta", type=float)
    b.add_argument("--n-samples", type=int)
    b.add_argument("--validation-draws", type=int)
    b.add_argument("--seed", type=int)
    b.add_argument("--quiet", action="store_true")
    b.set_defaults(func=_cmd_benchmark)

    o = sub.add_parser("oracle", help="reference answers for small problems")
    o.add_argument("--instance", required=True)
    o.add_argument("--samples")
    o.add_argument("--n-samples", type=int)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--exhaustive", action="store_true")
    o.add_argument("--certified-min", action="store_true")
    o.add_argument("--grid-step", type=float, default=0.05)
    o.add_argument("--shared", action="store_true")
    o.add_argument("--alpha-fraction", type=float, default=0.999)
    o.set_defaults(func=_cmd_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError, KeyError, TypeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as err:  # pragma: no cover - defensive
        print(f"runtime failure: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
