# Relativistic ZK Simulator - command-line entry point and session coordinator
import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import colorlog

from .audit.session_auditor import SessionReport
from .coding.syndrome import (ParameterError, SdInstance, SdWitness, SearchSpaceError, UnsupportedInstanceError,
                              gen_no_instance, gen_yes_instance, load_instance, load_witness, save_instance,
                              save_witness)
from .config import (PRESETS, ROLES, SMALL_NO_INSTANCE, AdversaryConfig, AdversaryMode, ConfigError, ProtocolConfig,
                     SessionSeeds, env_log_level, load_config)
from .field.fq import FieldParams
from .field.randomness import TAG_INSTANCE, derive_rng, fresh_seed, seed_from_text
from .harness.benchmark import per_round_cheat_rate, summary_table, sweep
from .params.security_calculator import (BoundInapplicableError, InfeasiblePlanError, min_log2_Q, plan, published_plan,
                                         sd_hardness_bits, smallest_mersenne_exponent)
from .reports.report_manager import ReportError, ReportManager, bucket_times
from .transport.channel import ChannelError
from .transport.session import SessionOutcome, run_role, run_simulated_session
from .transport.wire import WireFormatError

logger = logging.getLogger(__name__)

EXIT_ACCEPTED = 0
EXIT_REJECTED = 1
EXIT_ERROR = 2

LOG_FORMAT = "%(log_color)s%(asctime)s %(levelname)-8s%(reset)s %(name)s: %(message)s"


def setup_logging(level: Optional[str] = None):
    handler = colorlog.StreamHandler()
    handler.setFormatter(colorlog.ColoredFormatter(LOG_FORMAT, datefmt="%H:%M:%S"))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel((level or env_log_level()).upper())


class RelativisticZKSimulator:
    """Main session coordinator: instance setup, execution and report storage"""

    def __init__(self, config: ProtocolConfig, out_dir: Optional[str] = None,
                 instance: Optional[SdInstance] = None, witness: Optional[SdWitness] = None):
        logger.info("Initializing relativistic ZK session")
        self.config = config
        self.params = config.field_params()
        self.report_manager = ReportManager(out_dir)
        self.instance, self.witness = instance, witness
        if self.instance is None:
            self.load_instance()
        logger.info(f"Session ready: n={config.n} k={config.k} w={config.w} Q=2^{self.params.q_exponent}-1 "
                    f"R={config.R} F={config.allowed_losses} adversary={config.adversary.describe()}")

    def load_instance(self):
        """Instance drawn from the harness seed, so every process of a session derives the same one"""
        rng = derive_rng(self.config.seeds.harness, TAG_INSTANCE)
        if self.config.no_instance:
            self.instance = gen_no_instance(self.config.n, self.config.k, self.config.w, rng)
            self.witness = None
            logger.info("Using a certified NO instance")
        else:
            self.instance, self.witness = gen_yes_instance(self.config.n, self.config.k, self.config.w, rng)

    def run_simulation(self) -> SessionOutcome:
        outcome = run_simulated_session(self.config, self.instance, self.witness)
        for report in outcome.reports.values():
            self.report_manager.store_session(report, bucket_us=self.config.preset.histogram_bucket_us)
        for alarm in outcome.alarms[:20]:
            logger.debug(f"Alarm {alarm['alarm_id']} ({alarm['severity']}): {alarm['message']}")
        return outcome

    def run_network_role(self, role: str):
        result = run_role(role, self.config, self.instance, self.witness)
        if isinstance(result, SessionReport):
            self.report_manager.store_session(result, bucket_us=self.config.preset.histogram_bucket_us)
        return result

    def get_status(self) -> Dict[str, Any]:
        return {"config": self.config.to_dict(), "q_exponent": self.params.q_exponent,
                "no_instance": self.witness is None}


def _resolve_config(args) -> ProtocolConfig:
    config = load_config(args.config) if args.config else ProtocolConfig()
    changes: Dict[str, Any] = {}
    if args.seed is not None:
        changes["seeds"] = SessionSeeds.from_master(args.seed)
    if args.preset:
        changes["preset"] = PRESETS[args.preset]
    if args.adversary:
        changes["adversary"] = AdversaryConfig.parse(args.adversary)
    if args.no_instance:
        n, k, w = SMALL_NO_INSTANCE
        changes.update(n=n, k=k, w=w, q_exponent=None, no_instance=True)
    elif args.n is not None:
        _, k, w = sd_hardness_bits(args.n)
        changes.update(n=args.n, k=args.k or min(max(k, 1), args.n - 1), w=args.w or max(w, 1),
                       q_exponent=smallest_mersenne_exponent(min_log2_Q(args.n)))
    if args.q_exponent is not None:
        changes["q_exponent"] = args.q_exponent
    if args.rounds is not None:
        changes["R"] = args.rounds
    if args.lam is not None:
        changes["lam"] = args.lam
    if args.role:
        changes["role"] = args.role
    simulation = config.simulation
    if args.drop_prob is not None:
        simulation = replace(simulation, drop_prob=args.drop_prob)
    if args.delay_ns is not None:
        simulation = replace(simulation, one_way_delay_ns=args.delay_ns)
    if args.measure_compute:
        simulation = replace(simulation, measure_compute=True)
    changes["simulation"] = simulation
    # q_exponent=None has to survive, so no with_overrides here
    return replace(config, **changes)


def cmd_run(args) -> int:
    config = _resolve_config(args)
    instance = load_instance(args.instance) if args.instance else None
    witness = load_witness(args.witness) if args.witness else None
    simulator = RelativisticZKSimulator(config, args.out_dir, instance, witness)

    if config.role == "all" or args.sim:
        outcome = simulator.run_simulation()
        report = outcome.reports.get(config.role) or outcome.report
        if report is None:
            logger.error("Simulation produced no verifier report")
            return EXIT_ERROR
        print(json.dumps(report.summary(), indent=1))
        if config.adversary.mode is not AdversaryMode.HONEST:
            print(f"per-round acceptance rate: {report.acceptance_rate:.4f}")
        return EXIT_ACCEPTED if report.accepted else EXIT_REJECTED

    if config.seeds.ephemeral:
        raise ConfigError("network roles need shared seeds: pass --seed or a config with a seeds block")
    result = simulator.run_network_role(config.role)
    if isinstance(result, SessionReport):
        print(json.dumps(result.summary(), indent=1))
        return EXIT_ACCEPTED if result.accepted else EXIT_REJECTED
    print(json.dumps(result, indent=1, default=str))
    return EXIT_ACCEPTED


def cmd_plan(args) -> int:
    if args.published:
        result = published_plan()
    else:
        result = plan(args.target_bits, p_loss=args.p_loss, loss_margin=args.loss_margin, fixed_lambda=args.lam)
    print(json.dumps(result.to_dict(), indent=1) if args.json else result.table())
    return EXIT_ACCEPTED


def cmd_bench(args) -> int:
    seed = seed_from_text(args.seed) if args.seed else fresh_seed()
    results = sweep(args.n, args.rounds, args.q_exponent, seed)
    manager = ReportManager(args.out_dir)
    for result in results:
        stem = f"bench_n{result.n}"
        manager.store_table(result.frame, f"{stem}.csv")
        for phase in (1, 2):
            hist = bucket_times(result.frame[f"phase{phase}_us"], args.bucket_us)
            manager.store_table(hist, f"{stem}_phase{phase}_hist.csv")
            if args.plot:
                manager.plot_histogram(hist, f"phase {phase}, n={result.n}, {len(result.frame)} rounds",
                                       f"{stem}_phase{phase}_hist.png")
    table = summary_table(results)
    manager.store_table(table, "bench_summary.csv")
    print(table.to_string(index=False))
    return EXIT_ACCEPTED


def cmd_cheat_rate(args) -> int:
    seed = seed_from_text(args.seed) if args.seed else fresh_seed()
    n, k, w = SMALL_NO_INSTANCE
    instance = gen_no_instance(n, k, w, derive_rng(seed, TAG_INSTANCE))
    rate = per_round_cheat_rate(instance, FieldParams.for_code_length(n), args.rounds, seed, args.fail_challenge)
    print(f"{rate:.4f}")
    return EXIT_ACCEPTED


def cmd_verify_report(args) -> int:
    instance = load_instance(args.instance) if args.instance else None
    result = ReportManager(Path(args.report).parent).verify_report(args.report, instance)
    print(json.dumps(result, indent=1))
    if not result["consistent"]:
        logger.error("Saved verdict does not match the recomputed one")
        return EXIT_ERROR
    return EXIT_ACCEPTED if result["accepted"] else EXIT_REJECTED


def cmd_gen_instance(args) -> int:
    seed = seed_from_text(args.seed) if args.seed else fresh_seed()
    rng = derive_rng(seed, TAG_INSTANCE)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.no:
        save_instance(gen_no_instance(args.n, args.k, args.w, rng), out / "instance.json")
        return EXIT_ACCEPTED
    instance, witness = gen_yes_instance(args.n, args.k, args.w, rng)
    save_instance(instance, out / "instance.json")
    save_witness(witness, out / "witness.json")
    return EXIT_ACCEPTED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relzk", description="Loss-tolerant relativistic zero-knowledge sessions")
    parser.add_argument("--log-level", default=None, help="overrides RELZK_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a session, simulated or one role over the network")
    run.add_argument("--role", choices=ROLES + ("all",))
    run.add_argument("--config")
    run.add_argument("--sim", action="store_true", help="all four roles on the virtual clock")
    run.add_argument("--preset", choices=sorted(PRESETS))
    run.add_argument("--adversary", help="honest | cheat_fixed_fail(c) | cheat_rotating | abort_rate(p) | spooky_relay")
    run.add_argument("--no-instance", choices=["small"], help="certified NO instance of the small class")
    run.add_argument("--n", type=int)
    run.add_argument("--k", type=int)
    run.add_argument("--w", type=int)
    run.add_argument("--q-exponent", type=int)
    run.add_argument("--rounds", type=int)
    run.add_argument("--lambda", dest="lam", type=float)
    run.add_argument("--drop-prob", type=float)
    run.add_argument("--delay-ns", type=int, help="one-way delay of the verifier-prover links")
    run.add_argument("--measure-compute", action="store_true")
    run.add_argument("--seed", help="master seed; all session seeds derive from it")
    run.add_argument("--instance")
    run.add_argument("--witness")
    run.add_argument("--out-dir")
    run.set_defaults(handler=cmd_run)

    planner = sub.add_parser("plan", help="parameters for a target security level")
    planner.add_argument("--target-bits", type=float, default=100.0)
    planner.add_argument("--p-loss", type=float, default=0.001)
    planner.add_argument("--loss-margin", type=float, default=1.0)
    planner.add_argument("--lambda", dest="lam", type=float)
    planner.add_argument("--published", action="store_true", help="evaluate the published parameter block")
    planner.add_argument("--json", action="store_true")
    planner.set_defaults(handler=cmd_plan)

    bench = sub.add_parser("bench", help="loopback timing of honest rounds")
    bench.add_argument("--n", type=int, nargs="+", default=[1704])
    bench.add_argument("--q-exponent", type=int, default=None)
    bench.add_argument("--rounds", type=int, default=1000)
    bench.add_argument("--bucket-us", type=int, choices=[10, 100], default=10)
    bench.add_argument("--plot", action="store_true")
    bench.add_argument("--seed")
    bench.add_argument("--out-dir")
    bench.set_defaults(handler=cmd_bench)

    cheat = sub.add_parser("cheat-rate", help="per-round pass rate of a cheating pair on a NO instance")
    cheat.add_argument("--rounds", type=int, default=10_000)
    cheat.add_argument("--fail-challenge", type=int, choices=[1, 2, 3])
    cheat.add_argument("--seed")
    cheat.set_defaults(handler=cmd_cheat_rate)

    verify = sub.add_parser("verify-report", help="recompute the verdict of a saved session")
    verify.add_argument("report")
    verify.add_argument("--instance")
    verify.set_defaults(handler=cmd_verify_report)

    gen = sub.add_parser("gen-instance", help="write instance (and witness) JSON for network sessions")
    gen.add_argument("--n", type=int, default=1704)
    gen.add_argument("--k", type=int, default=769)
    gen.add_argument("--w", type=int, default=216)
    gen.add_argument("--no", action="store_true", help="certified NO instance (small n only)")
    gen.add_argument("--seed")
    gen.add_argument("--out-dir", default=".")
    gen.set_defaults(handler=cmd_gen_instance)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        setup_logging(args.log_level)
    except ValueError as e:
        parser.error(f"bad log level: {e}")
    try:
        return args.handler(args)
    except (ConfigError, InfeasiblePlanError, BoundInapplicableError, ReportError, WireFormatError, ParameterError,
            UnsupportedInstanceError, SearchSpaceError) as e:
        logger.error(str(e))
    except (ChannelError, ConnectionError, OSError) as e:
        logger.error(f"Network or file error: {e}")
    except KeyboardInterrupt:
        logger.warning("Interrupted")
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
