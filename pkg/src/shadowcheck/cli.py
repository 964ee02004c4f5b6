"""Command-line harness: ``shadowcheck <command> [options]``.

Exit codes: 0 success, 1 invalid input, 2 budget exceeded, 3 solver failure.
"""
import argparse
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .config import profile
from .decider import ObsConInstance, decide
from .errors import ShadowCheckError
from .fixtures import FIXTURE_KINDS, make_fixture
from .linalg import from_json, random_density, random_pure, to_json
from .pauli import PauliString, low_weight_paulis
from .rng import stream

COMMANDS = ("shadow", "recover", "decide", "reduce-cldm", "dequantize", "xform", "gen-fixture", "bench")


@dataclass
class ExperimentConfig:
    """Everything needed to replay a command."""

    command: str
    seed: int = 0
    params: dict = field(default_factory=dict)
    tol_profile: str = "default"
    budget: float = None
    threads: int = 1
    out: str = None

    def to_json(self):
        return asdict(self)

    @classmethod
    def from_json(cls, obj):
        return cls(**obj)


def _report(cfg, result, timings):
    return {"command": cfg.command, "config": cfg.to_json(), "versions": io.versions(),
            "timings": timings, "result": result}


def _emit_report(cfg, report, rows=None):
    io.write_json(cfg.out, report)
    if cfg.out and cfg.out != "-":
        csv_path = Path(cfg.out).with_suffix(".csv")
        io.write_csv(csv_path, rows if rows else [io.flatten(report["result"])])


def _state(args, dim, rng):
    if args.state:
        return from_json(io.read_json(args.state))
    if args.state_kind == "zero":
        rho = np.zeros((dim, dim), dtype=np.complex128)
        rho[0, 0] = 1
        return rho
    if args.state_kind == "mixed":
        return random_density(dim, rng)
    psi = random_pure(dim, rng)
    return np.outer(psi, psi.conj())


# ---------------------------------------------------------------- commands


def cmd_shadow(args, cfg):
    from .shadows import GLOBAL, LOCAL, QUDIT, sample_shadow

    protocol = {"local": LOCAL, "global": GLOBAL, "qudit": QUDIT}[args.protocol]
    d = args.d if args.protocol == "qudit" else 2
    dim = d**args.n
    rho = _state(args, dim, stream(cfg.seed, "cli/state"))
    shadow = sample_shadow(protocol, rho, args.n, args.L, stream(cfg.seed, "cli/shadow"), d=d, K=args.K)
    shadow.meta["seed"] = cfg.seed
    io.write_json(cfg.out, shadow.to_json())
    if args.state_out:
        io.write_json(args.state_out, to_json(rho))


def _parse_observables(spec, n, d):
    if spec is None:
        return low_weight_paulis(n, 2) if d == 2 else None
    if Path(spec).exists():
        obj = io.read_json(spec)
        return [io.observable_from_json(o) for o in (obj["observables"] if isinstance(obj, dict) else obj)]
    return [PauliString.from_str(s.strip()) for s in spec.split(",") if s.strip()]


def cmd_recover(args, cfg):
    from .shadows import Shadow, mom_recover

    t0 = time.perf_counter()
    shadow = Shadow.from_json(io.read_json(args.shadow))
    obs = _parse_observables(args.observables, shadow.n, shadow.d)
    if obs is None:
        raise ShadowCheckError("give --observables for qudit shadows")
    rows = []
    for o in obs:
        val = mom_recover(shadow, o, K=args.K, chi=args.chi)
        rows.append({"observable": str(o) if isinstance(o, PauliString) else "matrix", "estimate": val})
    result = {"L": shadow.L, "K": args.K or shadow.K, "estimates": rows}
    _emit_report(cfg, _report(cfg, result, {"total": time.perf_counter() - t0}), rows)


def _load_obscon(args):
    if args.fixture:
        obj, _ = make_fixture(args.fixture, args.fixture_seed)
        if not isinstance(obj, ObsConInstance):
            raise ShadowCheckError(f"fixture {args.fixture} is not an observable-consistency instance")
        return obj
    if not args.instance:
        raise ShadowCheckError("give --instance or --fixture")
    return io.load_instance(args.instance)


def cmd_decide(args, cfg):
    tol = profile(cfg.tol_profile)
    inst = _load_obscon(args)
    t0 = time.perf_counter()
    cap = int(cfg.budget) if cfg.budget else tol.decider_cap
    dec = decide(inst, cap=cap)
    result = dec.to_json()
    result.update(alpha=inst.alpha, beta=inst.beta, observables=inst.m)
    if args.witness_out and dec.witness is not None:
        io.write_json(args.witness_out, to_json(dec.witness))
    _emit_report(cfg, _report(cfg, result, {"decide": time.perf_counter() - t0}))


def cmd_reduce(args, cfg):
    from .reduction.dp import DEFAULT_BUDGET
    from .reduction.pipeline import CldmInstance, reduce

    tol = profile(cfg.tol_profile)
    if args.fixture:
        inst, info = make_fixture(args.fixture, args.fixture_seed)
        if not isinstance(inst, CldmInstance):
            raise ShadowCheckError(f"fixture {args.fixture} is not a chain-marginal instance")
        restriction = info.get("restriction")
        L = args.L or info.get("L")
        eps = args.eps if args.eps is not None else info.get("eps")
    else:
        if not args.instance:
            raise ShadowCheckError("give --instance or --fixture")
        obj = io.read_json(args.instance)
        inst = CldmInstance.from_json(obj)
        restriction = obj.get("restriction")
        L = args.L or obj.get("L")
        eps = args.eps if args.eps is not None else obj.get("eps")
    if not L:
        raise ShadowCheckError("give --L")
    if args.restriction:
        restriction = [s.strip() for s in args.restriction.split(",")]
    alphabet = inst.default_alphabet(tuple(restriction) if restriction else None)
    t0 = time.perf_counter()
    budget = int(cfg.budget) if cfg.budget else DEFAULT_BUDGET
    res = reduce(inst, int(L), eps=eps, alphabet=alphabet, mode=args.mode, radius=args.radius, budget=budget)
    t1 = time.perf_counter()
    dec = decide(res.instance, cap=tol.decider_cap)
    t2 = time.perf_counter()
    result = dict(res.report)
    result.update(trivial=res.trivial, verdict=dec.verdict, chi_star=dec.chi_star)
    if args.instance_out:
        io.write_json(args.instance_out, res.instance.to_json())
    if args.shadow_out and res.shadow is not None:
        io.write_json(args.shadow_out, res.shadow.to_json())
    _emit_report(cfg, _report(cfg, result, {"reduce": t1 - t0, "decide": t2 - t1}))


def _load_dequant(args):
    if args.fixture:
        obj, _ = make_fixture(args.fixture, args.fixture_seed)
        if not (isinstance(obj, tuple) and len(obj) == 2 and isinstance(obj[0], list)):
            raise ShadowCheckError(f"fixture {args.fixture} is not a low-rank observable set")
        obs, y = obj
        return obs, np.asarray(y), args.alpha, args.beta
    if not args.instance:
        raise ShadowCheckError("give --instance or --fixture")
    obj = io.read_json(args.instance)
    obs = [io.observable_from_json(o) for o in obj["observables"]]
    return obs, np.asarray(obj["targets"], dtype=float), float(obj.get("alpha", args.alpha)), float(obj.get("beta", args.beta))


def cmd_dequantize(args, cfg):
    from .dequant.pipeline import DequantBudget, dequantized_decide

    obs, y, alpha, beta = _load_dequant(args)
    budget = DequantBudget(p=args.p, strict=args.strict)
    if cfg.budget:
        budget.max_samples = int(cfg.budget)
    t0 = time.perf_counter()
    dec = dequantized_decide(obs, y, alpha, beta, budget=budget, rng=stream(cfg.seed, "cli/dequantize"))
    result = dec.to_json()
    result.update(alpha=alpha, beta=beta)
    _emit_report(cfg, _report(cfg, result, {"dequantize": time.perf_counter() - t0}))


def cmd_xform(args, cfg):
    from . import xforms

    t0 = time.perf_counter()
    if args.map == "sample-csv":
        from .shadows import Shadow

        shadow = Shadow.from_json(io.read_json(args.input))
        rec = xforms.sampled_to_explicit(xforms.shadow_sampler(shadow), shadow.L, args.delta,
                                         stream(cfg.seed, "cli/xform"), xforms.shadow_assembler(shadow))
        result = {"complete": rec.complete, "missing": rec.missing, "draws": rec.draws}
        if rec.complete and args.instance_out:
            io.write_json(args.instance_out, rec.shadow.to_json())
        _emit_report(cfg, _report(cfg, result, {"xform": time.perf_counter() - t0}))
        return
    obj = io.read_json(args.input)
    if args.map == "cldm-to-obscon":
        states = [from_json(s) for s in obj["states"]]
        inst, exact = xforms.cldm_to_obscon(obj["sets"], states, obj["alpha"], obj["beta"], int(obj["k"]), obj.get("n"))
    elif args.map == "bloc-flatten":
        blocks = []
        for b in obj["blocks"]:
            blocks.append(([io.observable_from_json(o) for o in b["observables"]], b["targets"], b["alpha"], b["beta"]))
        inst, exact = xforms.bloc_flatten(xforms.BlockInstance(int(obj["n"]), blocks))
    elif args.map == "check-to-pair":
        checks = [xforms.CheckTriple(from_json(c["V"]), c["r"], c["s"], int(c.get("out", 0))) for c in obj["checks"]]
        inst, exact = xforms.checks_to_obscon(checks, obj.get("eps", args.eps))
    else:
        raise ShadowCheckError(f"unknown map {args.map}")
    out = inst.to_json()
    out["exact"] = {k: v for k, v in exact.items() if k in ("alpha", "beta", "g", "tau")}
    io.write_json(cfg.out, out)


def cmd_gen_fixture(args, cfg):
    obj, info = make_fixture(args.kind, cfg.seed)
    if isinstance(obj, ObsConInstance):
        out = obj.to_json()
    elif isinstance(obj, tuple):
        obs, y = obj
        out = {"observables": [io.observable_to_json(o) for o in obs], "targets": np.asarray(y).tolist(),
               "alpha": 0.05, "beta": 0.35}
    else:
        out = obj.to_json()
    out.update({k: v for k, v in info.items() if k not in out})
    out["fixture"] = {"kind": args.kind, "seed": cfg.seed}
    io.write_json(cfg.out, out)


def cmd_bench(args, cfg):
    from . import bench

    rows = bench.run(repeat=args.repeat, scale=args.scale)
    print(bench.format_table(rows), file=sys.stderr)
    _emit_report(cfg, _report(cfg, {"rows": rows}, {}), rows)


# ---------------------------------------------------------------- parser


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed for every random stream (required for stochastic commands)")
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--threads", type=int, default=1, help="worker threads (computation is single-threaded; recorded for replay)")
    common.add_argument("--tol-profile", default="default", choices=("default", "strict", "loose"))
    common.add_argument("--budget", type=float, default=None, help="command budget: solver iterations, DP candidates or samples per batch")

    p = argparse.ArgumentParser(prog="shadowcheck", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("shadow", parents=[common], help="sample a classical shadow of a state")
    s.add_argument("--protocol", choices=("local", "global", "qudit"), default="local")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--L", type=int, required=True)
    s.add_argument("--d", type=int, default=3, help="qudit dimension (qudit protocol)")
    s.add_argument("--K", type=int, default=None)
    s.add_argument("--state", default=None, help="density matrix JSON")
    s.add_argument("--state-kind", choices=("random-pure", "mixed", "zero"), default="random-pure")
    s.add_argument("--state-out", default=None)

    s = sub.add_parser("recover", parents=[common], help="median-of-means estimates from a shadow")
    s.add_argument("--shadow", required=True)
    s.add_argument("--observables", default=None, help="comma-separated Pauli strings or a JSON file (default: weight <= 2)")
    s.add_argument("--K", type=int, default=None)
    s.add_argument("--chi", type=int, default=30)

    s = sub.add_parser("decide", parents=[common], help="decide an observable-consistency instance")
    s.add_argument("--instance", default=None)
    s.add_argument("--fixture", choices=FIXTURE_KINDS, default=None)
    s.add_argument("--fixture-seed", type=int, default=0)
    s.add_argument("--witness-out", default=None)

    s = sub.add_parser("reduce-cldm", parents=[common], help="reduce chain marginals to a shadow instance and decide it")
    s.add_argument("--instance", default=None)
    s.add_argument("--fixture", choices=FIXTURE_KINDS, default=None)
    s.add_argument("--fixture-seed", type=int, default=0)
    s.add_argument("--L", type=int, default=None)
    s.add_argument("--eps", type=float, default=None)
    s.add_argument("--mode", choices=("auto", "full", "pruned"), default="auto")
    s.add_argument("--radius", type=int, default=2)
    s.add_argument("--restriction", default=None, help="comma-separated site labels, e.g. Z+,Z-,X+")
    s.add_argument("--instance-out", default=None)
    s.add_argument("--shadow-out", default=None)

    s = sub.add_parser("dequantize", parents=[common], help="sketch-based decision from sampling access")
    s.add_argument("--instance", default=None)
    s.add_argument("--fixture", choices=FIXTURE_KINDS, default=None)
    s.add_argument("--fixture-seed", type=int, default=0)
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--beta", type=float, default=0.35)
    s.add_argument("--p", type=int, default=200)
    s.add_argument("--strict", action="store_true", help="fail instead of truncating over-budget estimates")

    s = sub.add_parser("xform", parents=[common], help="instance-to-instance maps")
    s.add_argument("map", choices=("cldm-to-obscon", "bloc-flatten", "check-to-pair", "sample-csv"))
    s.add_argument("--input", required=True)
    s.add_argument("--eps", type=float, default=None)
    s.add_argument("--delta", type=float, default=0.01)
    s.add_argument("--instance-out", default=None)

    s = sub.add_parser("gen-fixture", parents=[common], help="write a reproducible fixture")
    s.add_argument("--kind", choices=FIXTURE_KINDS, required=True)

    s = sub.add_parser("bench", parents=[common], help="compare compiled and pure-Python kernels")
    s.add_argument("--repeat", type=int, default=3)
    s.add_argument("--scale", type=float, default=1.0)
    return p


_HANDLERS = {
    "shadow": cmd_shadow,
    "recover": cmd_recover,
    "decide": cmd_decide,
    "reduce-cldm": cmd_reduce,
    "dequantize": cmd_dequantize,
    "xform": cmd_xform,
    "gen-fixture": cmd_gen_fixture,
    "bench": cmd_bench,
}
_STOCHASTIC = {"shadow", "dequantize", "gen-fixture"}


def run(argv=None):
    """Parse ``argv`` and run the command; returns the exit status."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; 2 is reserved for budget overruns here
        return 0 if not exc.code else 1
    if args.command in _STOCHASTIC and args.seed is None:
        print(f"error: --seed is required for {args.command}", file=sys.stderr)
        return 1
    if args.command == "xform" and args.map == "sample-csv" and args.seed is None:
        print("error: --seed is required for sample-csv", file=sys.stderr)
        return 1
    params = {k: v for k, v in vars(args).items()
              if k not in ("command", "seed", "out", "threads", "tol_profile", "budget")}
    cfg = ExperimentConfig(args.command, args.seed if args.seed is not None else 0, params,
                           args.tol_profile, args.budget, args.threads, args.out)
    try:
        profile(cfg.tol_profile)
        _HANDLERS[args.command](args, cfg)
    except ShadowCheckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
