#!/usr/bin/env python3
"""
SCPR command line: solve, oblivious, simulate, check and repro sub-commands.

Exit codes: 0 success, 1 input or validation error, 2 non-convergence.
"""

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from core.env_vault import SolverVault
from core.errors import ConfigError, InputError, ScprError
from core.fixtures import MIXING_COLS, MIXING_ROWS, MIXING_START, mixing_graph, mixing_robber
from core.graph_core import Graph, is_cop_win, load_graph
from core.strategies import (
    CopPolicy,
    RobberStrategy,
    dump_cop_policy,
    load_cop_policy,
    load_robber_strategy,
    validate_policy,
)
from engines.game_engine import TAU, ConcPosition, Variant, state_from_tuple
from engines.matrix_game import MatrixGame, solve_matrix_game
from engines.oblivious import (
    CaptureTimeTable,
    oblivious_capture_times,
    pure_minimax_gap,
    solve_oblivious_concurrent,
    verify_pure_minimax,
)
from engines.solvers import SolveReport, ValueVector, certify, one_turn_matrix, solve, solve_concurrent
from execution.simulator import default_horizon, dump_trace, estimate_value, episode_seed, play_episode

logger = logging.getLogger("scpr")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2

COMMANDS = ("solve", "oblivious", "simulate", "check", "repro")


@dataclass
class RunConfig:
    command: str
    variant: Variant = Variant.CONCURRENT
    graph_path: str | None = None
    robber_path: str | None = None
    tol: float = 1e-10
    max_iter: int = 0
    episodes: int = 10_000
    horizon: int = 0
    seed: int = 0
    output_path: str | None = None
    certify: bool = False
    start: str | None = None
    policy1_path: str | None = None
    policy2_path: str | None = None
    workers: int = 1
    trace_path: str | None = None

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if not self.tol > 0:
            raise ConfigError(f"--tol must be positive, got {self.tol}")
        if self.max_iter < 0 or self.horizon < 0:
            raise ConfigError("--max-iter and --horizon must be >= 0")
        if self.command == "simulate" and self.episodes < 1:
            raise ConfigError(f"--episodes must be >= 1, got {self.episodes}")
        if self.workers < 1:
            raise ConfigError(f"--workers must be >= 1, got {self.workers}")
        if self.command in ("solve", "oblivious", "simulate", "check") and not self.graph_path:
            raise ConfigError(f"{self.command} needs --graph")
        if self.command in ("solve", "oblivious", "simulate") and not self.robber_path:
            raise ConfigError(f"{self.command} needs --robber")
        if self.command == "simulate" and not self.start:
            raise ConfigError("simulate needs --start x1,x2,x3[,u]")


def configure_logging(level: str = "INFO") -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="[%(asctime)s] %(levelname)s %(name)s: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        stream=sys.stderr,
    )


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    logger.info("wrote %s", path)


def _num(x: float) -> str:
    return format(float(x), ".17g")


def _short(x: float) -> str:
    return format(float(x), ".12g")


def values_csv(values: ValueVector) -> str:
    sequential = values.space.variant is Variant.SEQUENTIAL
    header = "x1,x2,x3,u,value" if sequential else "x1,x2,x3,value"
    lines = [header]
    for s, v in values.items():
        if s is TAU:
            lines.append("TAU,,,,0" if sequential else "TAU,,,0")
        else:
            lines.append(",".join(str(x) for x in s) + "," + _num(v))
    return "\n".join(lines) + "\n"


def capture_times_csv(table: CaptureTimeTable) -> str:
    n = table.times.shape[0]
    lines = ["cop,robber,time,move"]
    for cop in range(1, n + 1):
        for robber in range(1, n + 1):
            t = table.time(cop, robber)
            shown = str(int(t)) if t != float("inf") else "inf"
            lines.append(f"{cop},{robber},{shown},{table.move(cop, robber)}")
    return "\n".join(lines) + "\n"


def parse_start(text: str, variant: Variant):
    try:
        coords = [int(t) for t in text.split(",")]
    except ValueError as exc:
        raise InputError(f"--start must be comma-separated integers, got {text!r}") from exc
    try:
        return state_from_tuple(coords, variant)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


class ScprRunner:
    """Executes one RunConfig; results go to stdout, diagnostics to the log."""

    def __init__(self, config: RunConfig, out=None):
        self.config = config
        self.out = out or sys.stdout

    def emit(self, line: str = "") -> None:
        print(line, file=self.out)

    def load_inputs(self) -> tuple[Graph, RobberStrategy | None]:
        g = load_graph(_read(self.config.graph_path))
        sigma3 = None
        if self.config.robber_path:
            sigma3 = load_robber_strategy(_read(self.config.robber_path), g)
        if not is_cop_win(g):
            logger.warning("graph is not cop-win; some capture times may be infinite")
        return g, sigma3

    def _out_dir(self) -> Path | None:
        return Path(self.config.output_path) if self.config.output_path else None

    def _finish(self, report: SolveReport) -> int:
        if not report.converged:
            logger.error("value iteration did not converge (residual %.3e)", report.values.residual)
            return EXIT_NOT_CONVERGED
        return EXIT_OK

    def run_solve(self) -> int:
        cfg = self.config
        g, sigma3 = self.load_inputs()
        report = solve(g, sigma3, cfg.variant, cfg.tol, cfg.max_iter or None)
        if cfg.certify:
            report = certify(g, sigma3, report, cfg.tol, cfg.max_iter or None)
        out = self._out_dir()
        if out is not None:
            _write(out / "values.csv", values_csv(report.values))
            _write(out / "policy1.txt", dump_cop_policy(report.policy1))
            _write(out / "policy2.txt", dump_cop_policy(report.policy2))
        else:
            self.emit(values_csv(report.values).rstrip("\n"))
        self.emit(f"variant: {report.variant.value}")
        self.emit(f"states: {len(report.values)}")
        self.emit(f"iterations: {report.values.iterations}")
        self.emit(f"converged: {str(report.converged).lower()}")
        self.emit(f"residual: {_num(report.optimality_residual)}")
        label = "epsilon (certified)" if report.certified else "epsilon (nominal)"
        self.emit(f"{label}: {_num(report.epsilon)}")
        return self._finish(report)

    def run_oblivious(self) -> int:
        g, sigma3 = self.load_inputs()
        table = oblivious_capture_times(g, sigma3)
        report = solve_oblivious_concurrent(g, sigma3)
        residual = verify_pure_minimax(g, sigma3, report.values)
        out = self._out_dir()
        if out is not None:
            _write(out / "capture_times.csv", capture_times_csv(table))
            _write(out / "values.csv", values_csv(report.values))
            _write(out / "policy1.txt", dump_cop_policy(report.policy1))
            _write(out / "policy2.txt", dump_cop_policy(report.policy2))
        else:
            self.emit(capture_times_csv(table).rstrip("\n"))
            self.emit(values_csv(report.values).rstrip("\n"))
        self.emit(f"rounds: {table.rounds}")
        self.emit(f"pure minimax residual: {_num(residual)}")
        return EXIT_OK

    def _policies(self, g: Graph, sigma3: RobberStrategy) -> tuple[CopPolicy, CopPolicy, int]:
        cfg = self.config
        status = EXIT_OK
        if cfg.policy1_path and cfg.policy2_path:
            p1 = load_cop_policy(_read(cfg.policy1_path), g)
            p2 = load_cop_policy(_read(cfg.policy2_path), g)
        else:
            report = solve(g, sigma3, cfg.variant, cfg.tol, cfg.max_iter or None)
            status = self._finish(report)
            p1, p2 = report.policy1, report.policy2
            if cfg.policy1_path:
                p1 = load_cop_policy(_read(cfg.policy1_path), g)
            if cfg.policy2_path:
                p2 = load_cop_policy(_read(cfg.policy2_path), g)
        if p1.player != 1 or p2.player != 2:
            raise InputError("--policy1 must hold a cop 1 policy and --policy2 a cop 2 policy")
        for policy in (p1, p2):
            violations = validate_policy(policy, g, cfg.variant)
            if violations:
                raise InputError("; ".join(violations))
        return p1, p2, status

    def run_simulate(self) -> int:
        cfg = self.config
        g, sigma3 = self.load_inputs()
        start = parse_start(cfg.start, cfg.variant)
        for x in (start.x1, start.x2, start.x3):
            g.check_vertex(x)
        p1, p2, status = self._policies(g, sigma3)
        horizon = cfg.horizon or default_horizon(g)
        estimate = estimate_value(g, sigma3, p1, p2, start, cfg.episodes, horizon, cfg.seed, cfg.workers)
        if cfg.trace_path:
            trace = play_episode(g, sigma3, p1, p2, start, horizon, episode_seed(cfg.seed, 0))
            _write(Path(cfg.trace_path), dump_trace(trace))
        self.emit(f"mean: {_num(estimate.mean)}")
        self.emit(f"standard_error: {_num(estimate.standard_error)}")
        self.emit(f"episodes: {estimate.episodes}")
        self.emit(f"truncated_fraction: {_num(estimate.truncated_fraction)}")
        return status

    def run_check(self) -> int:
        cfg = self.config
        g, sigma3 = self.load_inputs()
        self.emit(f"graph: {g.vertex_count} vertices, {len(g.edges)} edges")
        if sigma3 is not None:
            self.emit(f"robber: {sigma3.kind.value}")
        for path in (cfg.policy1_path, cfg.policy2_path):
            if path:
                policy = load_cop_policy(_read(path), g)
                violations = validate_policy(policy, g, cfg.variant)
                if violations:
                    raise InputError("; ".join(violations))
                self.emit(f"policy C{policy.player}: ok")
        self.emit(f"cop-win: {str(is_cop_win(g)).lower()}")
        return EXIT_OK

    def run_repro(self) -> int:
        g = mixing_graph()
        sigma3 = mixing_robber(g)
        report = solve_concurrent(g, sigma3, self.config.tol, self.config.max_iter or None)
        start = ConcPosition(*MIXING_START)
        rows, cols, matrix = one_turn_matrix(g, sigma3, report.values, start, MIXING_ROWS, MIXING_COLS)
        game = solve_matrix_game(MatrixGame(matrix))
        maxmin, minmax = pure_minimax_gap(g, sigma3, report.values, start)
        body = ",".join("[" + ",".join(_short(x) for x in row) + "]" for row in matrix)
        self.emit(f"state: ({','.join(map(str, start))})")
        self.emit(f"rows a1: {' '.join(map(str, rows))}")
        self.emit(f"cols a2: {' '.join(map(str, cols))}")
        self.emit(f"matrix: [{body}]")
        self.emit(f"value: {_short(game.value)}")
        self.emit(f"C1 strategy: {' '.join(_short(p) for p in game.row_strategy)}")
        self.emit(f"C2 strategy: {' '.join(_short(p) for p in game.col_strategy)}")
        self.emit(f"pure max-min: {_short(maxmin)}")
        self.emit(f"pure min-max: {_short(minmax)}")
        self.emit(f"solved v(start): {_short(report.values[start])}")
        return self._finish(report)


def run(config: RunConfig, out=None) -> int:
    runner = ScprRunner(config, out)
    try:
        config.validate()
        return getattr(runner, f"run_{config.command}")()
    except ScprError as exc:
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scpr", description="Selfish Cops and Passive Robber solver")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--variant", choices=[v.value for v in Variant], default=Variant.CONCURRENT.value)
        p.add_argument("--graph", dest="graph_path")
        p.add_argument("--robber", dest="robber_path")
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--max-iter", type=int, default=None)
        p.add_argument("--out", dest="output_path")
        p.add_argument("--log-level", default=None)

    solve_p = sub.add_parser("solve", help="value iteration; writes values and policies")
    common(solve_p)
    solve_p.add_argument("--certify", action="store_true", help="measure epsilon with best responses")

    obl = sub.add_parser("oblivious", help="capture-time race for an oblivious robber")
    common(obl)

    sim = sub.add_parser("simulate", help="Monte Carlo estimate of C1's win probability")
    common(sim)
    sim.add_argument("--start", required=True, help="x1,x2,x3 or x1,x2,x3,u")
    sim.add_argument("--episodes", type=int, default=None)
    sim.add_argument("--horizon", type=int, default=None)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--workers", type=int, default=None)
    sim.add_argument("--policy1", dest="policy1_path")
    sim.add_argument("--policy2", dest="policy2_path")
    sim.add_argument("--trace", dest="trace_path", help="write the first episode's trace here")

    chk = sub.add_parser("check", help="validate input files and test cop-win")
    common(chk)
    chk.add_argument("--policy1", dest="policy1_path")
    chk.add_argument("--policy2", dest="policy2_path")

    rep = sub.add_parser("repro", help="one-turn game of the built-in randomisation example")
    rep.add_argument("--tol", type=float, default=None)
    rep.add_argument("--max-iter", type=int, default=None)
    rep.add_argument("--log-level", default=None)
    return parser


def config_from_args(args: argparse.Namespace, vault: SolverVault) -> RunConfig:
    def pick(name: str, fallback):
        value = getattr(args, name, None)
        return fallback if value is None else value

    return RunConfig(
        command=args.command,
        variant=Variant(pick("variant", Variant.CONCURRENT.value)),
        graph_path=pick("graph_path", None),
        robber_path=pick("robber_path", None),
        tol=pick("tol", vault.tol),
        max_iter=pick("max_iter", vault.max_iter),
        episodes=pick("episodes", vault.episodes),
        horizon=pick("horizon", vault.horizon),
        seed=pick("seed", vault.seed),
        output_path=pick("output_path", None),
        certify=pick("certify", False),
        start=pick("start", None),
        policy1_path=pick("policy1_path", None),
        policy2_path=pick("policy2_path", None),
        workers=pick("workers", vault.workers),
        trace_path=pick("trace_path", None),
    )


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        vault = SolverVault.from_env()
        vault.validate()
    except ConfigError as exc:
        configure_logging()
        logger.error("%s", exc)
        return EXIT_INPUT
    configure_logging(args.log_level or vault.log_level)
    return run(config_from_args(args, vault))


if __name__ == "__main__":
    sys.exit(main())
