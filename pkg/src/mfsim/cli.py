"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 register-size cap exceeded.
The output directory of ``simulate`` can be overridden with the
``MFSIM_OUT_DIR`` environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .compiler import compile_plan, round_budget, schedule_parallel, serial_success_probability
from .errors import ConfigError, ResourceError, UsageError
from .feedback import EpsilonPolicy, PolicyMode
from .harness import (
    ProtocolConfig,
    cnot_demo,
    emit_report,
    noiseless_plan_fidelity,
    probe_rounds,
    run_ensemble,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESOURCE = 3


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mfsim")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a full stochastic ensemble")
    sim.add_argument("--config", required=True, help="JSON protocol configuration")
    sim.add_argument("--out", default="out", help="output directory")
    sim.add_argument("--format", choices=["json", "csv"], default="json")

    probe = sub.add_parser("probe-round", help="sample the four-outcome law at fixed eps")
    probe.add_argument("--eps", type=float, required=True)
    probe.add_argument("--samples", type=int, default=100_000)
    probe.add_argument("--seed", type=int, default=0)

    sched = sub.add_parser("schedule", help="print a Trotter plan and its round budget")
    sched.add_argument("--config", required=True)
    sched.add_argument("--confidence", type=float, default=0.99)

    demo = sub.add_parser("cnot-demo", help="dressed V(pi/4) process fidelity to CNOT")
    demo.add_argument("--p-loss", type=float, default=0.0)
    demo.add_argument("--seed", type=int, default=0)
    demo.add_argument("--max-rounds", type=int, default=4096)

    oracle = sub.add_parser("oracle", help="noiseless plan fidelity against exact evolution")
    oracle.add_argument("--config", required=True)

    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            cfg = ProtocolConfig.from_json_file(args.config)
            report, stats = run_ensemble(cfg)
            out_dir = os.environ.get("MFSIM_OUT_DIR", args.out)
            written = emit_report(report, stats, out_dir, fmt=args.format)
            for path in written:
                print(path)
        elif args.command == "probe-round":
            rng = np.random.Generator(np.random.PCG64(args.seed))
            result = probe_rounds(args.eps, args.samples, rng)
            print(json.dumps(result, sort_keys=True, indent=2))
        elif args.command == "schedule":
            cfg = ProtocolConfig.from_json_file(args.config)
            plan = schedule_parallel(compile_plan(cfg.hamiltonian, cfg.t, cfg.n_steps))
            budget = round_budget(plan, confidence=args.confidence)
            n_terms = len(cfg.hamiltonian.terms)
            print(json.dumps({
                "plan": plan.to_dict(),
                "budget": budget,
                "paper_bulk_success_probability": serial_success_probability(max(1, n_terms)),
            }, sort_keys=True, indent=2))
        elif args.command == "cnot-demo":
            policy = EpsilonPolicy(PolicyMode.RESIDUAL_EXACT, max_rounds=args.max_rounds)
            result = cnot_demo(
                policy,
                master_seed=args.seed,
                p_loss=args.p_loss,
                backup=args.p_loss > 0.0,
            )
            print(json.dumps(result, sort_keys=True, indent=2))
        elif args.command == "oracle":
            cfg = ProtocolConfig.from_json_file(args.config)
            fid = noiseless_plan_fidelity(cfg)
            print(json.dumps({"noiseless_plan_fidelity": fid}, sort_keys=True, indent=2))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
