"""Command-line driver: ``loschmidt {timeseries,fdos,sample,resources,mitigate}``.

Every artifact is a pure function of the validated config (which includes
the seed). Per-task random streams come from ``SeedSequence.spawn`` so the
output does not depend on ``--jobs``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .circuit import build_loschmidt_circuit, count_built_gates, count_gates
from .config import RunConfig, load_config, parse_config
from .errors import ConfigError, ContractError
from .evaluators import make_series_evaluator
from .interferometry import ghz_probabilities, outcome_from_counts, run_exact, run_sampled, steps_for_point, trotter_overlap
from .model import LatticeSpec
from .mitigation import rescale, symmetry_mitigate, zne_extract, zne_fold, zne_rescale
from .noise import ChannelParams, depolarizing_q, memory_error_outcomes, simulate_trajectories
from .resources import JW, crossover_size, shot_overhead, sweep
from .sampler import ChainConfig, exhaustive_expectation, run_chain
from .sim import hubbard_spectrum
from .spectral_filter import fdos_from_amplitudes, fdos_from_series, make_filter

EXIT_OK, EXIT_CONFIG, EXIT_CONTRACT = 0, 2, 3

TIMESERIES_COLUMNS = (
    "variant", "m", "t_m", "n_steps", "n_2q", "p0", "p_pi", "re_g", "variance", "shots", "q", "gamma", "kept_fraction",
)
FDOS_COLUMNS = ("E", "D", "truncation_bound", "D_exact", "rel_error", "D_half_x", "half_x_change", "D_trotter", "D_noisy", "D_noisy_sigma")
CHAIN_COLUMNS = ("step", "bitstring", "D", "double_occupancy", "accepted")
RESOURCE_COLUMNS = ("L", "encoding", "f", "n_steps", "gates_per_step", "total_2q", "q", "overhead")


# ---------------------------------------------------------------- output

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, columns, rows, config_hash: str) -> None:
    buf = io.StringIO()
    buf.write(f"# config_hash={config_hash}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    path.write_text(buf.getvalue())


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n")


def read_csv(path: Path) -> list[dict[str, str]]:
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out: Path, command: str, cfg: RunConfig, files: list[str], extra: dict | None = None) -> None:
    manifest = {
        "command": command,
        "config_hash": cfg.config_hash(),
        "config": cfg.model_dump(mode="json"),
        "files": {f: _sha(out / f) for f in sorted(files)},
    }
    manifest.update(extra or {})
    write_json(out / "manifest.json", manifest)


# ---------------------------------------------------------------- workers

def _map(fn, tasks: list, jobs: int) -> list:
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


def _spawn(seed: int, n: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(n)


def _row(variant, m, t, n_steps, n_2q, p0, pp, re_g, var, shots, q=None, gamma=None, kept=None) -> dict:
    return dict(
        variant=variant, m=m, t_m=t, n_steps=n_steps, n_2q=n_2q, p0=p0, p_pi=pp, re_g=re_g,
        variance=var, shots=shots, q=q, gamma=gamma, kept_fraction=kept,
    )


def _timeseries_point(task) -> list[dict]:
    cfg_json, m, t, ss = task
    cfg = parse_config(json.loads(cfg_json))
    rng = np.random.default_rng(ss)
    lattice, params, psi0 = cfg.lattice_spec, cfg.hubbard, cfg.psi0
    E, noise = cfg.E, cfg.noise
    n_steps = steps_for_point(m, cfg.trotter.steps)
    circ = build_loschmidt_circuit(psi0, lattice, params, t, n_steps, E, cfg.trotter.absorb_first_onsite)
    n2q = circ.two_qubit_count
    rows = []

    G = complex(hubbard_spectrum(lattice, params).loschmidt(psi0, np.array([t]))[0])
    p0, pp = ghz_probabilities(G, E, t)
    rows.append(_row("exact", m, t, n_steps, 0, p0, pp, p0 - pp, 0.0, None))

    ideal = run_exact(circ)
    rows.append(_row("trotter", m, t, n_steps, n2q, ideal.p0, ideal.p_pi, ideal.re_g, 0.0, None))

    if noise.shots and not noise.eps_2q:
        s = run_sampled(circ, noise.shots, rng)
        rows.append(_row("sampled", m, t, n_steps, n2q, s.p0, s.p_pi, s.re_g, s.variance, s.shots))

    if noise.eps_2q:
        n_traj = noise.shots or noise.trajectories
        traj = simulate_trajectories(circ, noise.eps_2q, n_traj, rng)
        out = outcome_from_counts(circ, traj.counts)
        rows.append(_row("noisy", m, t, n_steps, n2q, out.p0, out.p_pi, out.re_g, out.variance, out.shots))
        for method in cfg.mitigation.methods:
            if method == "rescale":
                q = depolarizing_q(n2q, noise.eps_2q, noise.convention)
                r = rescale(out.p0, out.p_pi, q, out.shots)
            elif method == "symmetry":
                r = symmetry_mitigate(traj.counts, psi0, circ)
            else:
                fold = zne_fold(circ)
                ft = simulate_trajectories(fold, noise.eps_2q, n_traj, rng)
                fo = outcome_from_counts(fold, ft.counts)
                r = zne_rescale(out.p0, out.p_pi, zne_extract(fo.p0, fo.p_pi, circ.n_qubits), out.shots)
            rows.append(
                _row(f"mitigated-{method}", m, t, n_steps, n2q, out.p0, out.p_pi, r.re_g_mitigated, r.sigma**2,
                     out.shots, r.q_used, r.gamma_used, r.kept_fraction)
            )

    if noise.memory is not None:
        q = depolarizing_q(n2q, noise.eps_2q, noise.convention)
        Gtr = trotter_overlap(psi0, lattice, params, t, n_steps)
        a, b = memory_error_outcomes(Gtr, E, t, cfg.noise_spec.memory, ChannelParams(q, 0.0, lattice.n_qubits))
        rows.append(_row("memory", m, t, n_steps, n2q, a, b, a - b, 0.0, None, q, 0.0))
    return rows


def _fdos_noisy(task) -> tuple[float, float]:
    cfg_json, E, ss = task
    cfg = parse_config(json.loads(cfg_json))
    spec = make_filter(cfg.lattice_spec.n_qubits, cfg.filter.delta, cfg.filter.x)
    ev = make_series_evaluator("noisy", cfg.lattice_spec, cfg.hubbard, cfg.noise.shots, cfg.noise.sigma_series, cfg.trotter.steps)
    est = fdos_from_series(ev.series(cfg.psi0, spec.times, E, np.random.default_rng(ss)), spec, E)
    return est.value, float(np.sqrt(est.variance))


def _chain(task) -> dict:
    cfg_json, mode, E, seed = task
    cfg = parse_config(json.loads(cfg_json))
    cc = ChainConfig(
        E=E, delta=cfg.filter.delta, n_samples=cfg.chain.n_samples, burn_in=cfg.chain.burn_in, seed=seed, mode=mode,
        shots=cfg.noise.shots, sigma=cfg.noise.sigma_series, x=cfg.filter.x, steps_policy=cfg.trotter.steps,
    )
    res = run_chain(cc, cfg.lattice_spec, cfg.hubbard, initial=cfg.psi0)
    rows = [
        dict(step=i, bitstring=r.state.hex, D=r.weight, double_occupancy=r.double_occupancy, accepted=r.accepted)
        for i, r in enumerate(res.records)
    ]
    b = res.blocking
    summary = dict(
        mode=mode, E=E, mean=res.mean, stderr=b.stderr if b else None, naive_stderr=b.naive_stderr if b else None,
        acceptance_rate=res.acceptance_rate, n_samples=len(res.records), burn_in=cc.burn_in_steps,
        restarts=res.restarts, n_weight_evaluations=res.n_weight_evaluations, seed=seed,
    )
    return dict(rows=rows, summary=summary)


# ---------------------------------------------------------------- commands

def cmd_timeseries(cfg: RunConfig, out: Path, jobs: int, dry_run: bool = False) -> list[str]:
    lattice = cfg.lattice_spec
    spec = make_filter(lattice.n_qubits, cfg.filter.delta, cfg.filter.x)
    times = spec.times
    if dry_run:
        steps = [steps_for_point(m, cfg.trotter.steps) for m in range(len(times))]
        built = count_built_gates(
            build_loschmidt_circuit(cfg.psi0, lattice, cfg.hubbard, float(times[-1]), steps[-1], cfg.E, cfg.trotter.absorb_first_onsite)
        )
        table = count_gates(lattice)
        meta = dict(
            lattice=str(lattice), n_qubits=lattice.n_qubits, psi0=cfg.psi0.bitstring, alpha=spec.alpha, M=spec.M, R=spec.R,
            delta=spec.delta, x=spec.x, times=list(times), n_steps=steps, truncation_bound=spec.truncation_bound,
            gate_counts_table=dict(onsite=table.onsite, hopping=table.hopping, ghz=table.ghz, total_2q=table.total_2q),
            gate_counts_built=dict(onsite=built.onsite, hopping=built.hopping, ghz=built.ghz, total_2q=built.total_2q),
            config_hash=cfg.config_hash(),
        )
        write_json(out / "grid.json", meta)
        return ["grid.json"]
    if cfg.mitigation.methods and not cfg.noise.eps_2q:
        raise ConfigError("mitigation methods need noise.eps_2q > 0")
    lattice.check_dense(cfg.max_dense_qubits)
    cj = cfg.canonical_json()
    seeds = _spawn(cfg.seed, len(times))
    tasks = [(cj, m, float(t), seeds[m]) for m, t in enumerate(times)]
    rows = [r for chunk in _map(_timeseries_point, tasks, jobs) for r in chunk]
    order = {v: i for i, v in enumerate(["exact", "trotter", "sampled", "noisy", "memory"])}
    rows.sort(key=lambda r: (order.get(r["variant"], len(order)), r["variant"], r["m"]))
    write_csv(out / "timeseries.csv", TIMESERIES_COLUMNS, rows, cfg.config_hash())
    return ["timeseries.csv"]


def cmd_fdos(cfg: RunConfig, out: Path, jobs: int) -> list[str]:
    lattice, params, psi0 = cfg.lattice_spec, cfg.hubbard, cfg.psi0
    lattice.check_dense(cfg.max_dense_qubits)
    Es = cfg.energies
    spec = make_filter(lattice.n_qubits, cfg.filter.delta, cfg.filter.x)
    half = make_filter(lattice.n_qubits, cfg.filter.delta, cfg.filter.x / 2)
    spectrum = hubbard_spectrum(lattice, params)
    D = fdos_from_amplitudes(spectrum.loschmidt(psi0, spec.times), spec, Es)
    Dh = fdos_from_amplitudes(spectrum.loschmidt(psi0, half.times), half, Es)
    trot = make_series_evaluator("trotter-exact", lattice, params, steps_policy=cfg.trotter.steps)
    Dt = fdos_from_amplitudes(trot.amplitudes(psi0, spec.times), spec, Es)
    noisy = None
    if cfg.noise.shots or cfg.noise.sigma_series:
        seeds = _spawn(cfg.seed, len(Es))
        noisy = _map(_fdos_noisy, [(cfg.canonical_json(), E, seeds[i]) for i, E in enumerate(Es)], jobs)
    rows = []
    for i, E in enumerate(Es):
        exact = float(spectrum.fdos(psi0, E, cfg.filter.delta))
        rows.append(
            dict(
                E=float(E), D=float(D[i]), truncation_bound=spec.truncation_bound, D_exact=exact,
                rel_error=abs(D[i] - exact) / abs(exact) if exact else None,
                D_half_x=float(Dh[i]), half_x_change=abs(Dh[i] - D[i]) / abs(D[i]) if D[i] else None,
                D_trotter=float(Dt[i]),
                D_noisy=noisy[i][0] if noisy else None, D_noisy_sigma=noisy[i][1] if noisy else None,
            )
        )
    write_csv(out / "fdos.csv", FDOS_COLUMNS, rows, cfg.config_hash())
    return ["fdos.csv"]


def cmd_sample(cfg: RunConfig, out: Path, jobs: int) -> list[str]:
    lattice = cfg.lattice_spec
    lattice.check_dense(cfg.max_dense_qubits)
    Es, modes = cfg.energies, cfg.chain.modes
    seeds = _spawn(cfg.seed, len(modes) * len(Es))
    cj = cfg.canonical_json()
    tasks, names = [], []
    for a, mode in enumerate(modes):
        for i, E in enumerate(Es):
            tasks.append((cj, mode, float(E), int(seeds[a * len(Es) + i].generate_state(1)[0])))
            names.append(f"chain_{mode}_E{i}.csv")
    results = _map(_chain, tasks, jobs)
    h = cfg.config_hash()
    for name, res in zip(names, results):
        write_csv(out / name, CHAIN_COLUMNS, res["rows"], h)

    exhaustive = None
    if lattice.n_qubits <= 16:
        exhaustive = [exhaustive_expectation(lattice, cfg.hubbard, E, cfg.filter.delta) for E in Es]
    sweep_rows, cols = [], ["E", "exhaustive"]
    for mode in modes:
        cols += [f"{mode}_mean", f"{mode}_stderr"]
    for i, E in enumerate(Es):
        row = dict(E=float(E), exhaustive=exhaustive[i] if exhaustive else None)
        for a, mode in enumerate(modes):
            s = results[a * len(Es) + i]["summary"]
            row[f"{mode}_mean"], row[f"{mode}_stderr"] = s["mean"], s["stderr"]
        sweep_rows.append(row)
    write_csv(out / "sweep.csv", cols, sweep_rows, h)
    summary = dict(
        config_hash=h,
        chains={name: res["summary"] for name, res in zip(names, results)},
        exhaustive=dict(zip([repr(float(E)) for E in Es], exhaustive)) if exhaustive else None,
    )
    write_json(out / "summary.json", summary)
    return names + ["sweep.csv", "summary.json"]


def cmd_resources(cfg: RunConfig, out: Path, jobs: int) -> list[str]:
    r = cfg.resources
    rows = [
        dict(L=e.lattice.x, encoding=e.encoding, f=e.f, n_steps=e.n_steps, gates_per_step=e.gates_per_step,
             total_2q=e.total_2q, q=e.q, overhead=e.shot_overhead)
        for e in sweep(r.sizes, r.fidelities, r.encodings)
    ]
    write_csv(out / "resources.csv", RESOURCE_COLUMNS, rows, cfg.config_hash())
    check = {}
    for f in (0.998, 0.999):
        e = shot_overhead(LatticeSpec(6, 6), JW, f)
        check[repr(f)] = dict(total_2q=e.total_2q, overhead=e.shot_overhead, ratio_to_1e2=e.shot_overhead / 100.0,
                              within_factor_10=bool(10.0 <= e.shot_overhead <= 1000.0))
    ov = [c["overhead"] for c in check.values()]
    flag = dict(claim=100.0, brackets_claim=bool(min(ov) <= 100.0 <= max(ov)),
                nearest_factor=min(max(o / 100.0, 100.0 / o) for o in ov))
    write_json(out / "resources.json", dict(config_hash=cfg.config_hash(), crossover_L=crossover_size(),
                                            overhead_6x6_jw=check, overhead_6x6_vs_claim=flag))
    return ["resources.csv", "resources.json"]


def cmd_mitigate(cfg: RunConfig, out: Path, jobs: int, source: Path, q_override: float | None = None) -> list[str]:
    """Rescale the ``noisy`` rows of an existing timeseries file by ``1/q``."""
    try:
        rows = read_csv(source)
    except OSError as exc:
        raise ConfigError(f"cannot read {source}: {exc.strerror}") from None
    noisy = [r for r in rows if r.get("variant") == "noisy"]
    if not noisy:
        raise ConfigError(f"{source} has no 'noisy' rows to mitigate")
    if q_override is None and not cfg.noise.eps_2q:
        raise ConfigError("need noise.eps_2q > 0 or --q to rescale")
    outrows = []
    for r in noisy:
        p0, pp = float(r["p0"]), float(r["p_pi"])
        shots = int(r["shots"]) if r["shots"] else None
        q = q_override if q_override is not None else depolarizing_q(int(r["n_2q"]), cfg.noise.eps_2q, cfg.noise.convention)
        res = rescale(p0, pp, q, shots)
        outrows.append(
            _row("mitigated-rescale", int(r["m"]), float(r["t_m"]), int(r["n_steps"]), int(r["n_2q"]), p0, pp,
                 res.re_g_mitigated, res.sigma**2, shots, q, 0.0, 1.0)
        )
    h = hashlib.sha256((cfg.config_hash() + _sha(source) + repr(q_override)).encode()).hexdigest()[:16]
    write_csv(out / "mitigated.csv", TIMESERIES_COLUMNS, outrows, h)
    return ["mitigated.csv"]


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="loschmidt", description="Loschmidt-amplitude time-series pipeline for the 2D Fermi-Hubbard model.")
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="YAML or JSON run config")
    common.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    ts = sub.add_parser("timeseries", parents=[common], help="GHZ interferometry time series")
    ts.add_argument("--dry-run", action="store_true", help="write grid and gate metadata only")
    sub.add_parser("fdos", parents=[common], help="filtered density of states on the E grid")
    sub.add_parser("sample", parents=[common], help="Metropolis-Hastings chains per energy")
    sub.add_parser("resources", parents=[common], help="gate-count and shot-overhead sweep")
    mi = sub.add_parser("mitigate", parents=[common], help="rescale the noisy rows of a timeseries file")
    mi.add_argument("--input", type=Path, required=True, help="timeseries.csv to re-process")
    mi.add_argument("--q", type=float, default=None, help="use this q instead of the depolarising estimate")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        cfg = load_config(args.config, {"seed": args.seed})
        out: Path = args.out
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "timeseries":
            files = cmd_timeseries(cfg, out, args.jobs, args.dry_run)
        elif args.command == "fdos":
            files = cmd_fdos(cfg, out, args.jobs)
        elif args.command == "sample":
            files = cmd_sample(cfg, out, args.jobs)
        elif args.command == "resources":
            files = cmd_resources(cfg, out, args.jobs)
        else:
            files = cmd_mitigate(cfg, out, args.jobs, args.input, args.q)
        write_manifest(out, args.command, cfg, files)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ContractError as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    print("\n".join(str(out / f) for f in files + ["manifest.json"]))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
