"""Batch experiment runner: one subcommand per pipeline, reproducible seeds,
machine-readable output.

Every run emits a JSON record embedding the tool version and the full
configuration; rows that are naturally tabular (histograms, trajectories)
can be written as CSV with ``--format csv``.  ``--plot`` additionally
renders PNG figures next to the output files.  Exit codes: 0 success,
1 validation error, 2 numerical-check failure.
"""

from __future__ import annotations

import argparse
import csv as csvmod
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, adiabatic, compiler, counting, csp, postsel, qaoa, statevec


class CliError(Exception):
    """Invalid invocation; maps to exit code 1."""


class NumericalFailure(Exception):
    """A numerical check ran and failed; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we own the codes
        raise CliError(message)


def _load_instance(path: str) -> csp.CspInstance:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"instance: cannot read file {path!r}")
    head = ""
    for line in p.read_text().splitlines():
        s = line.strip()
        if s and not s.startswith("#") and not s.startswith("c "):
            head = s
            break
    try:
        if head.startswith("csp"):
            return csp.read_csp(path)
        if head.startswith("p cnf"):
            return csp.read_dimacs(path)
    except ValueError as exc:
        raise CliError(f"instance: {exc}") from exc
    raise CliError(f"instance: {path!r} is neither a CSP file nor DIMACS CNF")


def _record(args, **result):
    config = {k: v for k, v in vars(args).items() if k != "func"}
    return {
        "tool": "qaoalab",
        "version": __version__,
        "command": args.command,
        "config": config,
        "result": result,
    }


def _emit(args, record, csv_rows=None, csv_header=None):
    """Write the JSON record (and optional CSV rows) to --out, else stdout."""
    text = json.dumps(record, sort_keys=True, indent=2, default=_jsonable)
    if args.out:
        base = Path(args.out)
        base.parent.mkdir(parents=True, exist_ok=True)
        json_path = base if base.suffix == ".json" else Path(str(base) + ".json")
        json_path.write_text(text + "\n")
        if csv_rows is not None and args.format == "csv":
            stem = str(base)[:-5] if base.suffix == ".json" else str(base)
            _write_csv(Path(stem + ".csv"), csv_header, csv_rows)
    else:
        print(text)


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialize {type(obj)!r}")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csvmod.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _out_path(args, tail: str) -> Path:
    if not args.out:
        raise CliError(f"out: --out is required for {tail} output")
    base = Path(args.out)
    base.parent.mkdir(parents=True, exist_ok=True)
    return Path(str(base) + tail)


# ---------------------------------------------------------------------------
# subcommand handlers

def _cmd_qaoa_opt(args):
    instance = _load_instance(args.instance)
    if args.p < 1:
        raise CliError(f"p: depth must be >= 1, got {args.p}")
    if args.resolution < 2:
        raise CliError(f"resolution: grid needs >= 2 points, got {args.resolution}")
    angles, value = qaoa.grid_search(instance, 1, args.resolution)
    if args.p > 1:
        for _ in range(args.p - 1):
            angles = angles.padded()
        angles, value = qaoa.coordinate_optimize(instance, args.p, angles, args.rounds)
    record = _record(args, gammas=list(angles.gammas), betas=list(angles.betas),
                     objective=value, n=instance.n, m=instance.m)
    _emit(args, record)
    if args.plot:
        res = min(args.resolution, 128)
        gam = 2 * math.pi * np.arange(res) / res
        bet = math.pi * np.arange(res) / res
        grid = np.array([[qaoa.objective(instance, qaoa.Angles((g,), (b,)))
                          for b in bet] for g in gam])
        from . import plotting
        plotting.save_landscape(_out_path(args, "_landscape.png"),
                                gam, bet, grid, "p=1 objective landscape")
    return 0


def _cmd_qaoa_sample(args):
    instance = _load_instance(args.instance)
    gammas = [float(x) for x in args.gamma.split(",")]
    betas = [float(x) for x in args.beta.split(",")]
    if len(gammas) != len(betas):
        raise CliError("gamma/beta: need the same number of angles")
    if args.p is not None and args.p != len(gammas):
        raise CliError(f"p: {args.p} does not match the {len(gammas)} angle pairs given")
    if args.shots < 1:
        raise CliError(f"shots: must be >= 1, got {args.shots}")
    angles = qaoa.Angles(tuple(gammas), tuple(betas))
    state = qaoa.build_state(instance, angles)
    draws = statevec.sample(state, args.shots, args.seed)
    values, freq = np.unique(draws, return_counts=True)
    count_map = {csp.assignment_to_string(int(z), instance.n): int(c)
                 for z, c in zip(values, freq)}
    record = _record(args, counts=count_map, shots=args.shots, n=instance.n)
    rows = sorted((k, v) for k, v in count_map.items())
    _emit(args, record, csv_rows=rows, csv_header=["bitstring", "count"])
    return 0


def _cmd_fourier_count(args):
    instance = _load_instance(args.instance)
    if args.threads > 1:
        d = instance.m + 1
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            samples = tuple(pool.map(
                lambda r: counting.matrix_element(instance, r, d), range(d)))
        series = counting.MatrixElementSeries(instance, samples, d)
    else:
        series = counting.matrix_element_series(instance)
    try:
        hist = counting.recover_histogram(series)
        count = counting.fourier_count(instance)
    except (counting.NonRealRecovery, counting.RoundingFailure) as exc:
        raise NumericalFailure(str(exc)) from exc
    record = _record(args, count=count, n=instance.n, m=instance.m,
                     histogram={str(v): c for v, c in enumerate(hist.counts)})
    print(count)
    if args.out:
        _emit(args, record)
        if args.format == "csv":
            _write_csv(_out_path(args, "_series.csv"), ["r", "re", "im"],
                       [(r, e.real, e.imag) for r, e in enumerate(series.samples)])
            _write_csv(_out_path(args, "_histogram.csv"), ["v", "p_v", "count"],
                       [(v, c / 2 ** instance.n, c) for v, c in enumerate(hist.counts)])
        if args.plot:
            from . import plotting
            plotting.save_histogram(_out_path(args, "_histogram.png"),
                                    np.arange(instance.m + 1), hist.probabilities(),
                                    "recovered cost histogram")
            plotting.save_series(_out_path(args, "_series.png"),
                                 np.arange(instance.m + 1), np.array(series.samples),
                                 "matrix-element series")
    return 0


def _cmd_grover_count(args):
    path = Path(args.oracle)
    if not path.is_file():
        raise CliError(f"oracle: cannot read file {args.oracle!r}")
    oracle = postsel.read_oracle(path)
    count = postsel.count_marked(oracle)
    pair = postsel.phase_overlap_state(oracle)
    record = _record(args, count=count, domain=oracle.domain_size,
                     tan_theta=pair.tan() if pair.c else None)
    print(count)
    if args.out:
        _emit(args, record)
    return 0


def _cmd_compile(args):
    path = Path(args.circuit)
    if not path.is_file():
        raise CliError(f"circuit: cannot read file {args.circuit!r}")
    circuit = compiler.read_circuit(path)
    compiled = compiler.compile_circuit(circuit)
    csp_path = _out_path(args, ".csp")
    sidecar = _out_path(args, ".json")
    compiler.write_compiled(compiled, csp_path, sidecar)
    print(f"n_total={compiled.n_total} gadgets={compiled.gadget_count} "
          f"clauses={compiled.cost.m} -> {csp_path}, {sidecar}")
    return 0


def _cmd_verify(args):
    path = Path(args.circuit)
    if not path.is_file():
        raise CliError(f"circuit: cannot read file {args.circuit!r}")
    circuit = compiler.read_circuit(path)
    compiled = compiler.compile_circuit(circuit)
    report = compiler.verify_equivalence(circuit, compiled, tolerance=args.tol)
    record = _record(args,
                     max_amplitude_deviation=report.max_amplitude_deviation,
                     tv_distance=report.tv_distance,
                     original_mass=report.original_mass,
                     compiled_mass=report.compiled_mass,
                     n_total=compiled.n_total,
                     gadget_count=compiled.gadget_count,
                     passed=report.passed)
    _emit(args, record)
    if not report.passed:
        raise NumericalFailure(
            f"equivalence deviation {report.max_amplitude_deviation:.3e} "
            f"exceeds tolerance {args.tol}")
    return 0


def _cmd_adiabatic_spectrum(args):
    instance = _load_instance(args.instance)
    svals = _parse_schedule(args.svalues)
    if any(not 0.0 <= s <= 1.0 for s in svals):
        raise CliError("svalues: schedule points must lie in [0, 1]")
    rows = []
    for s in svals:
        mat = adiabatic.hamiltonian_dense(instance, s)
        spec_data = adiabatic.ground_state(instance, s)
        rows.append((s, spec_data.ground_energy, spec_data.gap,
                     adiabatic.stoquastic_check(mat)))
    record = _record(args, spectrum=[
        {"s": s, "ground_energy": e, "gap": g, "stoquastic": bool(st)}
        for s, e, g, st in rows])
    _emit(args, record, csv_rows=rows,
          csv_header=["s", "ground_energy", "gap", "stoquastic"])
    if args.plot:
        from . import plotting
        plotting.save_trajectory(_out_path(args, "_gap.png"),
                                 [r[0] for r in rows], [r[2] for r in rows],
                                 "spectral gap along the interpolation", "s", "gap")
    return 0


def _cmd_pimc(args):
    instance = _load_instance(args.instance)
    config = _pimc_config(args)
    result = adiabatic.pimc_sample(instance, config)
    extras = {}
    if instance.n <= adiabatic.DENSE_LIMIT:
        exact = adiabatic.ground_state(instance, args.s).ground_state.probabilities()
        gibbs = adiabatic.gibbs_distribution(instance, args.s, args.beta)
        extras["tv_to_ground"] = 0.5 * float(np.abs(result.marginal - exact).sum())
        extras["tv_to_gibbs"] = 0.5 * float(np.abs(result.marginal - gibbs).sum())
    record = _record(args, acceptance_rate=result.acceptance_rate,
                     autocorrelation_time=result.autocorrelation_time,
                     burn_in=result.burn_in,
                     marginal=result.marginal.tolist(), **extras)
    rows = [(z, csp.assignment_to_string(z, instance.n), p)
            for z, p in enumerate(result.marginal)]
    _emit(args, record, csv_rows=rows, csv_header=["z", "bitstring", "probability"])
    if args.plot:
        from . import plotting
        exact = (adiabatic.ground_state(instance, args.s).ground_state.probabilities()
                 if instance.n <= adiabatic.DENSE_LIMIT else np.zeros_like(result.marginal))
        plotting.save_distribution_comparison(
            _out_path(args, "_marginal.png"), result.marginal, exact,
            "worldline z-marginal vs exact ground state")
    return 0


def _cmd_sqa(args):
    instance = _load_instance(args.instance)
    config = _pimc_config(args, s_override=0.0)
    schedule = _parse_schedule(args.schedule)
    result = adiabatic.sqa_anneal(instance, schedule, args.per_step_sweeps, config)
    record = _record(args, best_z=result.best_z,
                     best_bitstring=csp.assignment_to_string(result.best_z, instance.n),
                     best_cost=result.best_cost,
                     trajectory=[
                         {"s": st.s, "best_cost": st.best_cost,
                          "acceptance_rate": st.acceptance_rate,
                          "mean_cost": st.mean_cost}
                         for st in result.trajectory])
    rows = [(i, st.s, st.best_cost, st.acceptance_rate, st.mean_cost)
            for i, st in enumerate(result.trajectory)]
    _emit(args, record, csv_rows=rows,
          csv_header=["step", "s", "best_cost", "acceptance_rate", "mean_cost"])
    if args.plot:
        from . import plotting
        plotting.save_trajectory(_out_path(args, "_trajectory.png"),
                                 [st.s for st in result.trajectory],
                                 [st.best_cost for st in result.trajectory],
                                 "best cost along the anneal", "s", "best cost")
    return 0


def _cmd_reject_sample(args):
    instance = _load_instance(args.instance)
    if args.samples < 1:
        raise CliError(f"samples: must be >= 1, got {args.samples}")
    config = _pimc_config(args)
    try:
        samples, total_attempts = adiabatic.rejection_sample_many(
            instance, config, args.samples, args.max_attempts)
    except adiabatic.AttemptsExhausted as exc:
        raise NumericalFailure(str(exc)) from exc
    counts = np.zeros(2 ** instance.n, dtype=np.int64)
    rows = []
    for i, w in enumerate(samples):
        counts[w.z] += 1
        rows.append((i, csp.assignment_to_string(w.z, instance.n)))
    record = _record(args, total_attempts=total_attempts,
                     acceptance_rate=args.samples / total_attempts,
                     z_counts=counts.tolist())
    _emit(args, record, csv_rows=rows, csv_header=["sample", "z"])
    if args.plot:
        from . import plotting
        plotting.save_histogram(_out_path(args, "_marginal.png"),
                                np.arange(2 ** instance.n), counts / counts.sum(),
                                "accepted z marginal", xlabel="z")
    return 0


def _cmd_evolve(args):
    instance = _load_instance(args.instance)
    if args.T < 0:
        raise CliError(f"T: run time must be >= 0, got {args.T}")
    if args.dt <= 0:
        raise CliError(f"dt: step must be positive, got {args.dt}")
    try:
        state = adiabatic.adiabatic_evolve(instance, args.T, args.dt)
    except adiabatic.StepSizeInstability as exc:
        raise NumericalFailure(str(exc)) from exc
    extras = {}
    if instance.n <= adiabatic.DENSE_LIMIT:
        target = adiabatic.ground_state(instance, 1.0 - 1e-3).ground_state
        fid = abs(statevec.inner_product(target, state)) ** 2
        extras["ground_fidelity"] = fid
    record = _record(args, norm=state.norm(), **extras)
    _emit(args, record)
    return 0


def _pimc_config(args, s_override=None) -> adiabatic.PimcConfig:
    s = args.s if s_override is None else s_override
    try:
        return adiabatic.PimcConfig(beta=args.beta, L=args.L, s=s,
                                    sweeps=getattr(args, "sweeps", 1), seed=args.seed)
    except ValueError as exc:
        raise CliError(f"pimc config: {exc}") from exc


def _parse_schedule(text: str) -> list[float]:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise CliError("schedule: ranges read start:stop:steps")
        start, stop, steps = float(parts[0]), float(parts[1]), int(parts[2])
        return list(np.linspace(start, stop, steps))
    return [float(x) for x in text.split(",")]


# ---------------------------------------------------------------------------
# parser assembly

def build_parser() -> _Parser:
    parser = _Parser(prog="qaoalab", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=1)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--plot", action="store_true")

    p = sub.add_parser("qaoa-opt", help="optimize angles for an instance")
    p.add_argument("instance")
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--resolution", type=int, default=64)
    p.add_argument("--rounds", type=int, default=3)
    common(p)
    p.set_defaults(func=_cmd_qaoa_opt)

    p = sub.add_parser("qaoa-sample", help="sample measurement outcomes")
    p.add_argument("instance")
    p.add_argument("--gamma", required=True, help="comma-separated angles")
    p.add_argument("--beta", required=True, help="comma-separated angles")
    p.add_argument("--shots", type=int, default=1024)
    p.add_argument("--p", type=int, default=None, help="must match angle count if given")
    common(p)
    p.set_defaults(func=_cmd_qaoa_sample)

    p = sub.add_parser("fourier-count", help="count satisfying assignments via matrix elements")
    p.add_argument("instance")
    common(p)
    p.set_defaults(func=_cmd_fourier_count)

    p = sub.add_parser("grover-count", help="count marked items by post-selected thresholds")
    p.add_argument("oracle")
    common(p)
    p.set_defaults(func=_cmd_grover_count)

    p = sub.add_parser("compile", help="compile a circuit to the post-selected form")
    p.add_argument("circuit")
    common(p)
    p.set_defaults(func=_cmd_compile)

    p = sub.add_parser("verify", help="compile and check exact equivalence")
    p.add_argument("circuit")
    p.add_argument("--tol", type=float, default=1e-9)
    common(p)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("adiabatic-spectrum", help="gap and ground energy along the path")
    p.add_argument("instance")
    p.add_argument("--svalues", default="0.0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")
    common(p)
    p.set_defaults(func=_cmd_adiabatic_spectrum)

    p = sub.add_parser("pimc", help="worldline Monte Carlo marginal at fixed s")
    p.add_argument("instance")
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=10.0)
    p.add_argument("--L", type=int, default=32)
    p.add_argument("--sweeps", type=int, default=10000)
    common(p)
    p.set_defaults(func=_cmd_pimc)

    p = sub.add_parser("sqa", help="annealed worldline search along a schedule")
    p.add_argument("instance")
    p.add_argument("--schedule", default="0.0:0.95:20",
                   help="start:stop:steps or comma list")
    p.add_argument("--per-step-sweeps", type=int, default=200, dest="per_step_sweeps")
    p.add_argument("--beta", type=float, default=10.0)
    p.add_argument("--L", type=int, default=32)
    common(p)
    p.set_defaults(func=_cmd_sqa)

    p = sub.add_parser("reject-sample", help="exact rejection sampling of worldlines")
    p.add_argument("instance")
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--L", type=int, default=2)
    p.add_argument("--samples", type=int, default=1)
    p.add_argument("--max-attempts", type=int, default=10 ** 7, dest="max_attempts")
    common(p)
    p.set_defaults(func=_cmd_reject_sample)

    p = sub.add_parser("evolve", help="integrate the interpolating dynamics")
    p.add_argument("instance")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--dt", type=float, default=0.005)
    common(p)
    p.set_defaults(func=_cmd_evolve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"numerical check failed: {exc}", file=sys.stderr)
        return 2
    except (csp.EnumerationLimitExceeded, statevec.PostSelectionImpossible,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
