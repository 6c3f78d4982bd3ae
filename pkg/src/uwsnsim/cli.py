"""Command-line entry point: run the model/simulation experiments and emit
CSV results plus optional SVG plots.

Subcommands: ode | net | mc | protocol.  Every command is deterministic
given its full flag set including --seed.  A single key=value config file
(--config) may drive any subcommand; explicit flags override file values.
Exit codes: 0 success, 2 config error, 3 numeric failure, 4 verification
failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .configfile import ConfigError, parse_config_file
from .engine import IntegrationConfig, IntegrationError, Method, integrate
from .models import (
    REQUIRED_RATES,
    CompartmentState,
    ModelSpec,
    RateParams,
    Variant,
    equilibria,
    reproduction_number,
)
from .netsim import (
    CompleteMixing,
    ParamRanges,
    RandomGeometric,
    SimParams,
    monte_carlo,
    simulate,
)
from .protocol import (
    Daemon,
    GraphFormatError,
    ProtocolGraph,
    TieBreak,
    all_probing,
    run_protocol_experiment,
    run_scheduler,
    scan_report,
    write_move_trace,
)
from .svgplot import line_chart

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_VERIFICATION = 4


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_CONFIG):
        super().__init__(message)
        self.code = code


# Rates the user must supply per model; the remaining referenced rates have
# documented defaults (m' falls back to m, k/k' default to the demo 0.1).
CLI_REQUIRED_RATES = {
    Variant.SIR_BASIC: ("b", "c"),
    Variant.SIS: ("a", "b"),
    Variant.SIR_DEATH_SIT2: ("b", "c", "m"),
    Variant.SIR_DEATH_SIT13: ("b", "c", "m"),
    Variant.SIR_SLEEP: ("b", "c", "m", "l_sleep", "l_wake"),
    Variant.SIR_VITAL: ("b", "c", "m", "l"),
    Variant.SIR_GLOBAL: ("b", "c", "m", "l"),
}

_ALL_CONFIG_KEYS = {
    # ode
    "model", "b", "c", "m", "m_prime", "l", "l_sleep", "l_wake", "k_sleep",
    "k_wake", "a", "s0", "i0", "r0", "s_sleep0", "i_sleep0", "r_sleep0",
    "dt", "horizon", "method", "record_every",
    # net / mc
    "n", "initial_informed_prob", "topology", "radius", "side", "pool",
    "raw_b", "runs", "l_range", "m_range", "c_range", "b_range",
    # protocol
    "graph", "init", "daemon", "tie_break", "informed_frac", "attack_rate",
    "heal_after", "probe_after", "max_steps",
    # common
    "seed", "out", "svg",
}


class Settings:
    """Flag values with config-file fallback; flags win."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config: dict[str, str] = {}
        if getattr(args, "config", None):
            self.config = parse_config_file(args.config)
            unknown = set(self.config) - _ALL_CONFIG_KEYS
            if unknown:
                raise CliError(f"unknown config keys: {', '.join(sorted(unknown))}")

    def provided(self, key: str) -> bool:
        return getattr(self.args, key, None) is not None or key in self.config

    def get(self, key: str, conv, default=None, required: bool = False):
        value = getattr(self.args, key, None)
        if value is None and key in self.config:
            raw = self.config[key]
            try:
                value = conv(raw)
            except (TypeError, ValueError):
                raise CliError(f"config key {key!r}: cannot parse {raw!r}") from None
        if value is None:
            value = default
        if value is None and required:
            raise CliError(f"missing required option '{key}'")
        return value


def _bool_conv(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def _range_conv(raw: str) -> tuple[float, float]:
    parts = raw.replace(",", " ").split()
    if len(parts) != 2:
        raise ValueError(raw)
    return float(parts[0]), float(parts[1])


# ---------------------------------------------------------------------------
# ode
# ---------------------------------------------------------------------------

def cmd_ode(args: argparse.Namespace) -> int:
    st = Settings(args)
    model_name = st.get("model", str, required=True)
    try:
        variant = Variant(model_name)
    except ValueError:
        raise CliError(f"unknown model {model_name!r}; choose from "
                       + ", ".join(v.value for v in Variant)) from None

    for key in CLI_REQUIRED_RATES[variant]:
        if not st.provided(key):
            raise CliError(f"missing required rate '{key}' for model {variant.value}")

    rate_kwargs = {}
    for key in ("b", "c", "m", "l", "l_sleep", "l_wake", "a"):
        rate_kwargs[key] = st.get(key, float, default=0.0)
    rate_kwargs["m_prime"] = st.get("m_prime", float, default=None)
    rate_kwargs["k_sleep"] = st.get("k_sleep", float, default=0.1)
    rate_kwargs["k_wake"] = st.get("k_wake", float, default=0.1)
    spec = ModelSpec(variant, RateParams(**rate_kwargs))

    init = CompartmentState(
        s=st.get("s0", float, default=0.9),
        i=st.get("i0", float, default=0.1),
        r=st.get("r0", float, default=0.0),
        s_sleep=st.get("s_sleep0", float, default=0.0),
        i_sleep=st.get("i_sleep0", float, default=0.0),
        r_sleep=st.get("r_sleep0", float, default=0.0),
    )
    cfg = IntegrationConfig(
        horizon=st.get("horizon", float, default=100.0),
        dt=st.get("dt", float, default=0.01),
        method=Method(st.get("method", str, default="rk4")),
        record_every=st.get("record_every", int, default=1),
    )

    r0 = reproduction_number(spec)
    print(f"model = {variant.value}")
    print(f"R0 = {r0:.4f}" if r0 is not None else "R0 = n/a (no threshold for this variant)")
    for rep in equilibria(spec):
        point = rep.point
        coords = f"(s={point.s:.6g}, i={point.i:.6g}, r={point.r:.6g}"
        if variant in (Variant.SIR_SLEEP, Variant.SIR_GLOBAL):
            coords += (f", s_sleep={point.s_sleep:.6g}, i_sleep={point.i_sleep:.6g}, "
                       f"r_sleep={point.r_sleep:.6g}")
        coords += ")"
        # + 0.0 normalizes IEEE negative zeros for display.
        eigs = ", ".join(
            f"{e.real + 0.0:.6g}{e.imag:+.3g}j" if e.imag else f"{e.real + 0.0:.6g}"
            for e in rep.eigenvalues)
        print(f"equilibrium [{rep.label}] {coords} eigenvalues [{eigs}] "
              f"-> {rep.classification.value}")
        for note in rep.notes:
            print(f"  note: {note}")

    traj = integrate(spec, init, cfg)
    for kind, t in traj.events:
        print(f"event {kind.value} at t = {t:.6g}")

    out = st.get("out", str)
    if out:
        traj.to_csv(out)
        print(f"trajectory written to {out}")
    svg = st.get("svg", str)
    if svg:
        series = [("s", traj.times, traj.s), ("i", traj.times, traj.i),
                  ("r", traj.times, traj.r)]
        if variant in (Variant.SIR_SLEEP, Variant.SIR_GLOBAL):
            series += [("s_sleep", traj.times, traj.states[:, 3]),
                       ("i_sleep", traj.times, traj.states[:, 4]),
                       ("r_sleep", traj.times, traj.states[:, 5])]
        line_chart(series, f"{variant.value} trajectory", "time", "fraction", svg)
        print(f"plot written to {svg}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# net / mc
# ---------------------------------------------------------------------------

def _topology(st: Settings) -> CompleteMixing | RandomGeometric:
    name = st.get("topology", str, default="geometric")
    if name in ("complete", "complete-mixing"):
        return CompleteMixing()
    if name == "geometric":
        return RandomGeometric(radius=st.get("radius", float, default=0.25),
                               side=st.get("side", float, default=1.0))
    raise CliError(f"unknown topology {name!r}; choose complete or geometric")


def _sim_params(st: Settings, default_pool: int | None) -> SimParams:
    return SimParams(
        n_initial=st.get("n", int, default=100),
        l=st.get("l", float, default=0.017),
        m=st.get("m", float, default=0.0018),
        c=st.get("c", float, default=0.035),
        b=st.get("b", float, default=0.33),
        horizon=st.get("horizon", int, default=60),
        seed=st.get("seed", int, default=0),
        initial_informed_prob=st.get("initial_informed_prob", float, default=0.1),
        topology=_topology(st),
        pool=st.get("pool", int, default=default_pool),
        raw_b=st.get("raw_b", _bool_conv, default=False),
    )


def cmd_net(args: argparse.Namespace) -> int:
    st = Settings(args)
    params = _sim_params(st, default_pool=None)
    census = simulate(params)
    print(f"seed = {params.seed}")
    print(f"final census: S={census.s[-1]} I={census.i[-1]} R={census.r[-1]} "
          f"Dead={census.dead[-1]}")
    out = st.get("out", str)
    if out:
        census.to_csv(out)
        print(f"census written to {out}")
    svg = st.get("svg", str)
    if svg:
        steps = np.arange(len(census))
        line_chart([("S", steps, census.s), ("I", steps, census.i),
                    ("R", steps, census.r), ("Dead", steps, census.dead)],
                   "network census", "time step", "sensors", svg)
        print(f"plot written to {svg}")
    return EXIT_OK


def cmd_mc(args: argparse.Namespace) -> int:
    st = Settings(args)
    runs = st.get("runs", int, required=True)
    if runs < 1:
        raise CliError(f"runs must be >= 1, got {runs}")
    ranges = ParamRanges(
        l=st.get("l_range", _range_conv, default=(0.0, 0.2)),
        m=st.get("m_range", _range_conv, default=(0.0, 0.01)),
        c=st.get("c_range", _range_conv, default=(0.0, 0.1)),
        b=st.get("b_range", _range_conv, default=(0.0, 0.033)),
    )
    base = _sim_params(st, default_pool=50)
    seed = st.get("seed", int, default=0)
    summary = monte_carlo(runs, ranges, base, seed=seed)

    print(f"runs = {summary.runs}  seed = {seed}  redraws(m=0) = {summary.redraws}")
    for label, cohort in (("R0<1", summary.below), ("R0>=1", summary.above)):
        print(f"cohort {label}: runs={cohort.runs} mean_R0={cohort.mean_r0:.4g} "
              f"mean_informed={cohort.mean_informed:.4g} "
              f"extinction_rate={cohort.extinction_rate:.4g} "
              f"mean_min_step={cohort.mean_min_step:.4g}")
    out = st.get("out", str)
    if out:
        summary.to_csv(out)
        print(f"per-run table written to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# protocol
# ---------------------------------------------------------------------------

def cmd_protocol(args: argparse.Namespace) -> int:
    st = Settings(args)
    graph_path = st.get("graph", str, required=True)
    graph = ProtocolGraph.from_edge_file(graph_path)
    seed = st.get("seed", int, default=0)
    init_path = st.get("init", str)
    all_probing(graph, informed_frac=st.get("informed_frac", float, default=0.3),
                seed=seed)
    if init_path:
        graph.load_states(init_path)

    daemon = Daemon(st.get("daemon", str, default="central"))
    tie_break = TieBreak(st.get("tie_break", str, default="lowest-id"))
    n = graph.n

    if daemon is Daemon.SYNCHRONOUS:
        result = run_scheduler(graph, daemon, tie_break,
                               max_steps=st.get("max_steps", int, default=None),
                               seed=seed)
        print(f"daemon = synchronous (exploratory; bound asserted under central only)")
        print(f"moves = {result.moves}  quiescent = {result.quiescent}")
        out = st.get("out", str)
        if out:
            write_move_trace(result.trace, out)
            print(f"move trace written to {out}")
        if not result.quiescent:
            print("verdict quiescence: FAIL (step budget exhausted)")
            return EXIT_VERIFICATION
        print("verdict quiescence: pass")
        return EXIT_OK

    log = run_protocol_experiment(
        graph,
        tie_break=tie_break,
        seed=seed,
        attack_rate=st.get("attack_rate", float, default=None),
        heal_after=st.get("heal_after", int, default=1),
        probe_after=st.get("probe_after", int, default=1),
    )
    print(f"nodes = {n}  initial moves = {log.initial_moves}  bound 2n = {2 * n}")
    print(f"total moves = {len(log.trace)}  recovery cycles = {log.cycles}")

    report = scan_report(log)
    failed = False
    for name, violations in report.items():
        if violations:
            failed = True
            print(f"verdict {name}: FAIL")
            for v in violations[:10]:
                print(f"  {v}")
        else:
            print(f"verdict {name}: pass")

    out = st.get("out", str)
    if out:
        write_move_trace(log.trace, out)
        print(f"move trace written to {out}")
    return EXIT_VERIFICATION if failed else EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="key=value config file; flags override")
    p.add_argument("--seed", type=int, metavar="U64", help="RNG seed (default 0)")
    p.add_argument("--out", metavar="PATH", help="CSV output path")
    p.add_argument("--svg", metavar="PATH", help="SVG plot output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uwsnsim",
        description="Datum-survivability toolkit for unattended wireless sensor "
                    "networks: compartment models, network simulation and the "
                    "three-rule scheduling protocol.")
    parser.add_argument("--version", action="version", version=f"uwsnsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    ode = sub.add_parser("ode", help="integrate a compartment model and report "
                                     "R0 and equilibria")
    ode.add_argument("--model", choices=[v.value for v in Variant],
                     help="model variant")
    for flag, desc in (
        ("--b", "transmission rate (1/time; SIS: cure rate)"),
        ("--c", "attack/recovery rate (1/time; 1/D for survivability duration D)"),
        ("--m", "natural death rate (1/time)"),
        ("--m-prime", "informed-node death rate (1/time; defaults to m)"),
        ("--l", "birth/awakening rate (fraction of N per time)"),
        ("--l-sleep", "sleep-model wake-up rate on sleeping compartments (1/time)"),
        ("--l-wake", "sleep-model go-to-sleep rate on awake compartments (1/time)"),
        ("--k-sleep", "global-model wake-up rate (1/time; default 0.1)"),
        ("--k-wake", "global-model go-to-sleep rate (1/time; default 0.1)"),
        ("--a", "SIS infection rate (1/time)"),
        ("--s0", "initial susceptible fraction (default 0.9)"),
        ("--i0", "initial informed fraction (default 0.1)"),
        ("--r0", "initial recovered fraction (default 0)"),
        ("--s-sleep0", "initial sleeping susceptible fraction"),
        ("--i-sleep0", "initial sleeping informed fraction"),
        ("--r-sleep0", "initial sleeping recovered fraction"),
        ("--dt", "integration step (time units, default 0.01)"),
        ("--horizon", "integration duration (time units, default 100)"),
    ):
        ode.add_argument(flag, type=float, help=desc)
    ode.add_argument("--method", choices=["rk4", "euler"], help="scheme (default rk4)")
    ode.add_argument("--record-every", type=int, metavar="K",
                     help="record every K-th step (default 1)")
    _add_common(ode)
    ode.set_defaults(func=cmd_ode)

    net = sub.add_parser("net", help="one stochastic network simulation")
    mc = sub.add_parser("mc", help="random-parameter Monte Carlo campaign")
    for p in (net, mc):
        p.add_argument("--n", type=int, help="initially deployed sensors (default 100)")
        p.add_argument("--l", type=float, help="awakening probability per time unit")
        p.add_argument("--m", type=float, help="death probability per time unit")
        p.add_argument("--c", type=float, help="attack probability per time unit")
        p.add_argument("--b", type=float, help="transmission probability per time unit")
        p.add_argument("--horizon", type=int, help="observation window in time units "
                                                   "(default 60)")
        p.add_argument("--initial-informed-prob", type=float,
                       help="initial datum-holding probability (default 0.1)")
        p.add_argument("--topology", choices=["complete", "geometric"],
                       help="complete mixing or random geometric (default geometric)")
        p.add_argument("--radius", type=float,
                       help="geometric radio range (length units, default 0.25)")
        p.add_argument("--side", type=float,
                       help="geometric square side (length units, default 1)")
        p.add_argument("--pool", type=int,
                       help="finite reserve of sleeping sensors (net default: unbounded; "
                            "mc default: 50)")
        p.add_argument("--raw-b", action="store_const", const=True, dest="raw_b",
                       help="literal per-pair probability b under complete mixing")
    mc.add_argument("--runs", type=int, help="number of simulations")
    for flag, desc in (("--l-range", "awakening interval"), ("--m-range", "death interval"),
                       ("--c-range", "attack interval"), ("--b-range", "transmission interval")):
        mc.add_argument(flag, type=float, nargs=2, metavar=("LO", "HI"),
                        help=f"{desc} (probabilities per time unit)")
    _add_common(net)
    _add_common(mc)
    net.set_defaults(func=cmd_net)
    mc.set_defaults(func=cmd_mc)

    proto = sub.add_parser("protocol", help="run and verify the three-rule "
                                            "scheduling protocol")
    proto.add_argument("--graph", metavar="PATH",
                       help="edge list file, one 'u v' pair per line")
    proto.add_argument("--init", metavar="PATH",
                       help="optional per-node 'id state compartment' file")
    proto.add_argument("--daemon", choices=["central", "synchronous"],
                       help="scheduler daemon (default central)")
    proto.add_argument("--tie-break", choices=["lowest-id", "seeded-random"],
                       help="central-daemon tie break (default lowest-id)")
    proto.add_argument("--informed-frac", type=float,
                       help="seeded initial informed fraction (default 0.3)")
    proto.add_argument("--attack-rate", type=float,
                       help="per-node attack probability on informed nodes; "
                            "enables the attack/heal cycle")
    proto.add_argument("--heal-after", type=int,
                       help="sweeps a locked node needs to heal (default 1)")
    proto.add_argument("--probe-after", type=int,
                       help="sweeps a sleeping node needs to wake (default 1)")
    proto.add_argument("--max-steps", type=int,
                       help="step budget for the synchronous daemon")
    _add_common(proto)
    proto.set_defaults(func=cmd_protocol)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return getattr(exc, "code", EXIT_CONFIG)
    except (ConfigError, GraphFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except RuntimeError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION


if __name__ == "__main__":
    sys.exit(main())
