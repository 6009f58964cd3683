"""Command-line entry point.

Every subcommand echoes the full argv, master seed, tool version, and backend
into its artifact header, and derives all replicate randomness from
(master seed, replicate index), so reruns and worker-count changes reproduce
artifacts byte for byte.
"""

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .backend import derive_rng
from .dist import (Planted, chi2_averaged_planted, discrete_gaussian_moment,
                   DiscreteGaussianSpec, load_instance, point_mass, save_instance,
                   standard_gaussian)
from .errors import InfeasibleError, LabError
from .momentmatch import (shifted_mixture_instance, spike_instance, verify_moment_match,
                          zero_atom_instance)
from .reporting import emit_report
from .sqsim import (NullInstance, OracleConfig, concentration_experiment,
                    distinguisher_policy, find_clip_level, game_runner, make_oracle,
                    radial_distinguisher, ridge_cosine_battery)
from .subspace import (correlation_moment_exact, correlation_moments_mc,
                       decay_experiment, sample_frame, spherical_cap_ratio)


def _int_list(text: str):
    return [int(tok) for tok in text.split(",") if tok]


def _float_list(text: str):
    return [float(tok) for tok in text.split(",") if tok]


def _meta(args, argv):
    return {"argv": " ".join(argv), "seed": getattr(args, "seed", 0)}


def _load_law(args):
    if args.instance:
        return load_instance(args.instance)
    kind = args.law
    if kind == "gaussian":
        return standard_gaussian()
    if kind == "delta0":
        return point_mass(0.0)
    if kind.startswith("spike:"):
        return spike_instance(int(kind.split(":", 1)[1]), args.d).law
    raise LabError(f"unknown law spec {kind!r}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_construct(args, argv):
    if args.kind == "spike":
        inst = spike_instance(args.n, args.d)
        extra = {"epsilon": inst.params["epsilon"], "spike": inst.params["spike"]}
    elif args.kind == "zero-atom":
        alpha, inst = zero_atom_instance(args.d, args.alpha)
        extra = {"alpha": alpha}
    elif args.kind == "shifted-mixture":
        mu, inst = shifted_mixture_instance(args.d, args.alpha, args.halfwidth)
        extra = {"mu": mu, "scaling": inst.params["scaling"]}
    else:
        raise LabError(f"unknown kind {args.kind!r}")
    save_instance(inst.law, args.out)
    report = {
        "kind": args.kind,
        "d": args.d,
        "residual": inst.solve.max_residual,
        "sup_p": inst.solve.sup_abs,
        "condition": inst.solve.condition,
        "nu": verify_moment_match(inst.law, args.d),
        **extra,
    }
    path = args.report or (args.out + ".report.json")
    with open(path, "w") as fh:
        json.dump({"meta": {"tool_version": __version__, **_meta(args, argv)},
                   "report": report}, fh, indent=2)
        fh.write("\n")
    return 0


def cmd_verify(args, argv):
    law = load_instance(args.infile)
    law.validate()
    report = {"nu": verify_moment_match(law, args.d), "d": args.d,
              "total_mass": law.total_mass()}
    payload = {"meta": {"tool_version": __version__, **_meta(args, argv)},
               "report": report}
    text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_beta_moments(args, argv):
    rows = []
    for n in args.n:
        for m in args.m:
            ests = correlation_moments_mc(n, m, args.k, args.reps, args.seed)
            for k in args.k:
                exact = correlation_moment_exact(n, m, k)
                est = ests[k]
                rows.append((n, m, k, exact, float(est), est.stderr, args.reps))
    emit_report(args.out, "beta", rows, _meta(args, argv), args.format)
    return 0


def cmd_decay(args, argv):
    stats = decay_experiment(args.n_grid, args.m, args.k_list, args.reps, args.seed)
    meta = _meta(args, argv)
    meta["slopes"] = json.dumps({str(k): stats.slopes[k] for k in args.k_list})
    emit_report(args.out, "decay", stats.rows(), meta, args.format)
    return 0


def cmd_cap(args, argv):
    rows = []
    for n in range(args.n_min, args.n_max + 1, args.step):
        val = spherical_cap_ratio(n, args.phi)
        rows.append((n, args.phi, val, math.log(val)))
    emit_report(args.out, "cap", rows, _meta(args, argv), args.format)
    return 0


def cmd_distinguish(args, argv):
    inst = spike_instance(args.n, args.d)
    tol = args.n ** (-(args.d + 2) / 4.0) / 4.0
    probe = Planted(args.n, sample_frame(args.n, 1, derive_rng(args.seed, 10**7)).matrix,
                    inst.law)
    clip = args.clip if args.clip else find_clip_level(args.n, args.d, probe)
    rows = []
    for trial in range(args.trials):
        frame = sample_frame(args.n, 1, derive_rng(args.seed, trial)).matrix
        planted = Planted(args.n, frame, inst.law)
        for hyp, played in (("H0", NullInstance(args.n)), ("H1", planted)):
            mode = "honest-exact" if args.mode == "exact" else "honest-mc"
            config = OracleConfig(tolerance=tol, mode=mode, samples=args.samples,
                                  seed=args.seed * 10**6 + trial * 2 + (hyp == "H1"),
                                  budget_policy="warn")
            decision = radial_distinguisher(make_oracle(config, played), args.n, args.d, clip)
            rows.append((trial, hyp, args.n, args.d, decision.statistic, decision.center,
                         decision.threshold, decision.verdict, decision.verdict == hyp))
    meta = _meta(args, argv)
    meta["clip"] = clip
    emit_report(args.out, "distinguish", rows, meta, args.format)
    return 0


def cmd_concentrate(args, argv):
    if args.law is None and args.instance is None:
        args.law = f"spike:{args.n}"
    law = _load_law(args)
    queries = ridge_cosine_battery(args.queries, args.n, args.seed)
    report = concentration_experiment(args.n, args.d, law, queries, args.tau,
                                      args.reps, args.seed)
    meta = _meta(args, argv)
    meta["exceedance_rate"] = report.exceedance_rate
    meta["median_gap"] = format(report.median_gap, ".17g")
    emit_report(args.out, "concentration", report.rows(), meta, args.format)
    return 0


def cmd_chi2_avg(args, argv):
    law = _load_law(args)
    rep = chi2_averaged_planted(args.n, args.m, law, grid_points=args.grid)
    rows = [(args.n, args.m, rep.value, rep.chi2, rep.normalization_error,
             rep.refinement_change)]
    emit_report(args.out, "chi2-avg", rows, _meta(args, argv), args.format)
    return 0


def cmd_discrete_gauss(args, argv):
    rows = []
    for s in args.s:
        for theta in args.theta:
            spec = DiscreteGaussianSpec(s, theta, args.cutoff)
            for k in range(args.k_max + 1):
                want = float(np.prod(np.arange(1, k, 2))) if k % 2 == 0 else 0.0
                got = discrete_gaussian_moment(spec, k, rescaled=True)
                rows.append((s, theta, k, got, want, abs(got - want)))
    emit_report(args.out, "discrete-gauss", rows, _meta(args, argv), args.format)
    return 0


def cmd_game(args, argv):
    inst = spike_instance(args.n, args.d)
    frame = sample_frame(args.n, 1, derive_rng(args.seed, 0)).matrix
    planted = Planted(args.n, frame, inst.law)
    clip = args.clip if args.clip else find_clip_level(args.n, args.d, planted)
    tol = args.n ** (-(args.d + 2) / 4.0) / 4.0
    mode = "honest-exact" if args.mode == "exact" else "honest-mc"
    config = OracleConfig(tolerance=tol, mode=mode, samples=args.samples,
                          seed=args.seed, budget_policy="warn")
    played = planted if args.hypothesis == "H1" else NullInstance(args.n)
    policy = distinguisher_policy(args.n, args.d, clip)
    transcript = game_runner(policy, config, played, planted, args.max_queries,
                             hypothesis=args.hypothesis)
    payload = {"meta": {"tool_version": __version__, **_meta(args, argv), "clip": clip},
               "transcript": transcript.to_dict()}
    with open(args.out, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ngca-lab",
        description="Hidden-direction detection laboratory for the statistical-query model")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True, out=True):
        if seed:
            p.add_argument("--seed", type=int, default=0, help="master seed")
        if out:
            p.add_argument("--out", required=True, help="artifact path")
            p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("construct", help="build a moment-matched instance")
    p.add_argument("--kind", required=True, choices=("spike", "zero-atom", "shifted-mixture"))
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--halfwidth", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="moment-match deviation of an instance file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("beta-moments", help="exact vs Monte Carlo correlation moments")
    p.add_argument("--n", type=_int_list, required=True)
    p.add_argument("--m", type=_int_list, required=True)
    p.add_argument("--k", type=_int_list, required=True)
    p.add_argument("--reps", type=int, default=100000)
    common(p)
    p.set_defaults(func=cmd_beta_moments)

    p = sub.add_parser("decay", help="log-log decay of projected ridge norms")
    p.add_argument("--n-grid", type=_int_list, default=[50, 100, 200, 400])
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--k-list", type=_int_list, default=[2, 4, 6])
    p.add_argument("--reps", type=int, default=500)
    common(p)
    p.set_defaults(func=cmd_decay)

    p = sub.add_parser("cap", help="spherical cap ratios over a dimension range")
    p.add_argument("--phi", type=float, default=math.pi / 6)
    p.add_argument("--n-min", type=int, default=20)
    p.add_argument("--n-max", type=int, default=200)
    p.add_argument("--step", type=int, default=10)
    common(p)
    p.set_defaults(func=cmd_cap)

    p = sub.add_parser("distinguish", help="single-query radial distinguisher trials")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--mode", choices=("exact", "mc"), default="exact")
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--clip", type=float, default=None)
    common(p)
    p.set_defaults(func=cmd_distinguish)

    p = sub.add_parser("concentrate", help="ridge-battery concentration experiment")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--queries", type=int, default=50)
    p.add_argument("--tau", type=float, default=0.05)
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--law", default=None, help="gaussian | delta0 | spike:<n>")
    p.add_argument("--instance", default=None, help="instance JSON path")
    common(p)
    p.set_defaults(func=cmd_concentrate)

    p = sub.add_parser("chi2-avg", help="radial chi-squared of the averaged planted law")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--law", default="delta0")
    p.add_argument("--instance", default=None)
    p.add_argument("--grid", type=int, default=4096)
    common(p)
    p.set_defaults(func=cmd_chi2_avg)

    p = sub.add_parser("discrete-gauss", help="discrete-Gaussian rescaled moments")
    p.add_argument("--s", type=_float_list, default=[0.5, 0.25, 0.1])
    p.add_argument("--theta", type=_float_list, default=[0.0, 0.13, 0.5])
    p.add_argument("--k-max", type=int, default=4)
    p.add_argument("--cutoff", type=float, default=10.0)
    common(p)
    p.set_defaults(func=cmd_discrete_gauss)

    p = sub.add_parser("game", help="run a query policy against an oracle, emit transcript")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--hypothesis", choices=("H0", "H1"), default="H0")
    p.add_argument("--mode", choices=("exact", "mc"), default="exact")
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--clip", type=float, default=None)
    p.add_argument("--max-queries", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_game)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, argv)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 1
    except LabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
