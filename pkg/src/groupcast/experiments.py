"""Experiment kinds runnable from config files.

Each kind turns validated parameters into plot-ready CSV rows plus a
small metrics dict for the JSON summary.  Rows are emitted in
deterministic parameter order, and all floats are written with
round-trip precision, so a config and seed pin the output bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import analytics as an
from . import scheduler as sch
from . import sharing_lp as slp
from . import simulate as sim
from .channels import IidChannel, MarkovChannel
from .config import ParamChecker


@dataclass
class ExperimentResult:
    header: list[str]
    rows: list[tuple]
    metrics: dict
    extra_files: list = field(default_factory=list)  # (name, header, rows)


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    parse: callable
    run: callable
    uses_trials: bool = False


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def render_csv(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


# --- closed-form sweeps -------------------------------------------------


def _parse_ratios(c: ParamChecker):
    grid = c.grid("p_e_grid", hi_open=True)
    if grid is None:
        grid = [round(0.05 * k, 12) for k in range(20)]
    c.finish_unknown()
    return {"p_e_grid": grid}


def _run_ratios(params, seed):
    rows = []
    for pe in params["p_e_grid"]:
        rows.append(
            (
                pe,
                an.t_eq_two_symmetric(pe),
                an.t_neq_two_symmetric(pe),
                an.t_union_two_symmetric(pe),
                an.improvement_ratio_identify(pe),
                an.improvement_ratio_social(pe),
            )
        )
    return ExperimentResult(
        header=["p_e", "T_eq", "T_neq", "T_union", "R_identify", "R_social"],
        rows=rows,
        metrics={"points": len(rows)},
    )


def _parse_n_sweep(c: ParamChecker):
    values = c.probability_list("p_e_values", required=True, hi_open=True)
    n_max = c.integer("n_max", default=16, minimum=1)
    c.finish_unknown()
    return {"p_e_values": values or [], "n_max": n_max}


def _run_n_sweep(params, seed):
    rows = []
    for pe in params["p_e_values"]:
        for n in range(1, params["n_max"] + 1):
            rows.append((pe, n, an.t_eq_n_symmetric(pe, n), an.t_union_n_symmetric(pe, n)))
    return ExperimentResult(
        header=["p_e", "N", "T_eq_N", "T_union_N"],
        rows=rows,
        metrics={"points": len(rows)},
    )


def _parse_asym(c: ParamChecker):
    raw = c._get("pairs")
    pairs = []
    if not isinstance(raw, list) or not raw:
        c.fail("pairs", "required non-empty list of [p_e1, p_e2] pairs")
    else:
        for i, pair in enumerate(raw):
            if not isinstance(pair, list) or len(pair) != 2:
                c.fail(f"pairs[{i}]", "must be a 2-element list")
                continue
            a = c.number("pairs", f"pairs[{i}][0]", pair[0], lo=0.0, hi=1.0, hi_open=True)
            b = c.number("pairs", f"pairs[{i}][1]", pair[1], lo=0.0, hi=1.0, hi_open=True)
            if a is None or b is None:
                continue
            if a > b:
                c.fail(f"pairs[{i}]", f"error probabilities must be sorted ascending, got {pair}")
                continue
            pairs.append((a, b))
    c.finish_unknown()
    return {"pairs": pairs}


def _run_asym(params, seed):
    rows = []
    for p1, p2 in params["pairs"]:
        times, p12, p21 = an.asym_two_user(p1, p2)
        rows.append(
            (p1, p2, times.t_eq, times.t_full, times.t_union, p12, p21, an.asym_loss_vs_full(p1, p2))
        )
    return ExperimentResult(
        header=["p_e1", "p_e2", "T_eq", "T_full", "T_union", "p_1_to_2", "p_2_to_1", "loss_vs_full"],
        rows=rows,
        metrics={"points": len(rows)},
    )


# --- the three-user program and grouping --------------------------------


def _parse_lp(c: ParamChecker):
    triples = c.sorted_triples("triples")
    trials = c.integer("trials", default=0, minimum=0)
    c.finish_unknown()
    return {"triples": triples or [], "trials": trials}


def _run_lp(params, seed):
    rows = []
    header = ["p_e1", "p_e2", "p_e3", "T_union"] + [
        name.replace("->", "_to_") for name in slp.VAR_NAMES
    ]
    trials = params["trials"]
    if trials:
        header += ["sim_mean", "sim_se"]
    for triple in params["triples"]:
        sol, policy = slp.solve_three_user(triple)
        row = [*triple, sol.value] + [policy[name] for name in slp.VAR_NAMES]
        if trials:
            cfg = sim.DisseminationConfig(
                channels=tuple(IidChannel(p) for p in triple),
                policy=slp.policy_for_simulation(triple, policy),
                trials=trials,
                seed=seed,
            )
            stats = sim.simulate_completion(cfg)
            row += [stats.mean, stats.std_error]
        rows.append(tuple(row))
    return ExperimentResult(header=header, rows=rows, metrics={"points": len(rows)})


def _parse_grouping(c: ParamChecker):
    triples = c.sorted_triples("triples")
    c.finish_unknown()
    return {"triples": triples or []}


def _run_grouping(params, seed):
    rows = []
    worst = None
    for triple in params["triples"]:
        t_sep, t_grp, ratio = slp.grouping_compare(triple)
        rows.append((*triple, t_sep, t_grp, ratio))
        worst = ratio if worst is None else min(worst, ratio)
    return ExperimentResult(
        header=["p_e1", "p_e2", "p_e3", "T_separate", "T_grouped", "ratio"],
        rows=rows,
        metrics={"points": len(rows), "min_ratio": worst},
    )


# --- dynamic arrivals ----------------------------------------------------


def _parse_dynamic(c: ParamChecker):
    p_e = c.probability_list("p_e", required=True, hi_open=True, min_len=2)
    lambdas = c.grid("lambda_values", required=True)
    horizon = c.integer("horizon", default=200_000, minimum=1)
    modes = c.string_list_choice("modes", sch.MODES, default=list(sch.MODES))
    trace = c.boolean("trace", default=False)
    c.finish_unknown()
    return {"p_e": p_e or [], "lambda_values": lambdas or [], "horizon": horizon, "modes": modes, "trace": trace}


def _run_dynamic(params, seed):
    channels = tuple(IidChannel(p) for p in params["p_e"])
    rows = []
    extra = []
    for mode in params["modes"]:
        for k, lam in enumerate(params["lambda_values"]):
            cfg = sch.DynamicConfig(
                channels=channels,
                arrival_rate=lam,
                horizon=params["horizon"],
                mode=mode,
                seed=seed + 7919 * (k + 1),
            )
            if params["trace"]:
                rep, trace_rows = sch.run_dynamic_reference(cfg, trace=True)
                n_pairs = len(rep.h_final)
                header = (
                    ["t", "link"]
                    + [f"q{n}" for n in range(len(sch.build(len(channels)).nodes))]
                    + [f"h{p}" for p in range(n_pairs)]
                )
                flat = [(t, -1 if l is None else l, *qs, *hs) for t, l, qs, hs in trace_rows]
                extra.append((f"trace_{mode}_{_fmt(lam)}.csv", header, flat))
            else:
                rep = sch.run_dynamic(cfg)
            rows.append(
                (
                    mode,
                    lam,
                    rep.avg_queue,
                    rep.avg_queue_se,
                    rep.avg_completion,
                    rep.avg_completion_se,
                    rep.sharing_probability,
                    float(rep.h_drift.max()) if len(rep.h_drift) else 0.0,
                    rep.queue_slope,
                    rep.stable,
                )
            )
    return ExperimentResult(
        header=[
            "mode",
            "lambda",
            "avg_queue",
            "avg_queue_se",
            "avg_completion",
            "avg_completion_se",
            "sharing_probability",
            "max_h_drift",
            "queue_slope",
            "stable",
        ],
        rows=rows,
        metrics={"points": len(rows)},
        extra_files=extra,
    )


def _parse_stability(c: ParamChecker):
    p_e = c.probability_list("p_e", required=True, hi_open=True, min_len=2)
    lambdas = c.grid("lambda_grid", required=True)
    horizon = c.integer("horizon", default=400_000, minimum=1)
    mode = c.string_choice("mode", sch.MODES, default=sch.CENTRALIZED)
    c.finish_unknown()
    return {"p_e": p_e or [], "lambda_grid": lambdas or [], "horizon": horizon, "mode": mode}


def _run_stability(params, seed):
    channels = tuple(IidChannel(p) for p in params["p_e"])
    cfg = sch.DynamicConfig(
        channels=channels,
        arrival_rate=params["lambda_grid"][0],
        horizon=params["horizon"],
        mode=params["mode"],
        seed=seed,
    )
    est = sch.estimate_stability_boundary(cfg, params["lambda_grid"])
    rows = [
        (rep.arrival_rate, rep.avg_queue, rep.queue_slope, rep.stable) for rep in est.reports
    ]
    return ExperimentResult(
        header=["lambda", "avg_queue", "queue_slope", "stable"],
        rows=rows,
        metrics={"boundary": est.boundary, "mode": params["mode"]},
    )


# --- further analyses ----------------------------------------------------


def _parse_utility(c: ParamChecker):
    values = c.probability_list("p_e_values", required=True)
    n_min = c.integer("n_min", default=2, minimum=2, maximum=sim.MAX_USERS)
    n_max = c.integer("n_max", default=8, minimum=2, maximum=sim.MAX_USERS)
    trials = c.integer("trials", default=0, minimum=0)
    if n_min is not None and n_max is not None and n_min > n_max:
        c.fail("n_min", f"must be <= n_max, got {n_min} > {n_max}")
    if trials:
        for i, pe in enumerate(values or []):
            if pe in (0.0, 1.0):
                c.fail(f"p_e_values[{i}]", "simulated utility needs 0 < p_e < 1")
    c.finish_unknown()
    return {"p_e_values": values or [], "n_min": n_min, "n_max": n_max, "trials": trials}


def _run_utility(params, seed):
    rows = []
    trials = params["trials"]
    header = ["p_e", "N", "download", "upload", "ratio"]
    if trials:
        header += ["sim_ratio", "sim_ratio_se"]
    for pe in params["p_e_values"]:
        for n in range(params["n_min"], params["n_max"] + 1):
            u = an.utility_n_symmetric(pe, n)
            row = [pe, n, u.download, u.upload, u.ratio]
            if trials:
                stats = sim.simulate_utility(pe, n, trials, seed=seed)
                row += [stats.ratio, stats.ratio_se]
            rows.append(tuple(row))
    return ExperimentResult(header=header, rows=rows, metrics={"points": len(rows)})


def _parse_markov(c: ParamChecker):
    raw = c._get("chains")
    chains = []
    if not isinstance(raw, list) or not raw:
        c.fail("chains", "required non-empty list of [zeta_01, zeta_10] pairs")
    else:
        for i, pair in enumerate(raw):
            if not isinstance(pair, list) or len(pair) != 2:
                c.fail(f"chains[{i}]", "must be a 2-element list")
                continue
            z01 = c.number("chains", f"chains[{i}][0]", pair[0], lo=0.0, hi=1.0)
            z10 = c.number("chains", f"chains[{i}][1]", pair[1], lo=0.0, hi=1.0)
            if z01 is None or z10 is None:
                continue
            if z01 + z10 == 0.0:
                c.fail(f"chains[{i}]", "zeta_01 + zeta_10 must be > 0")
                continue
            chains.append((z01, z10))
    c.finish_unknown()
    return {"chains": chains}


def _run_markov(params, seed):
    rows = []
    for z01, z10 in params["chains"]:
        pi0, _ = an.markov_steady_state(MarkovChannel(z01, z10))
        t_eq, t_union, ratio = an.markov_two_symmetric(z01, z10)
        rows.append((z01, z10, pi0, t_eq, t_union, ratio))
    return ExperimentResult(
        header=["zeta_01", "zeta_10", "pi_0", "T_eq", "T_union", "ratio"],
        rows=rows,
        metrics={"points": len(rows)},
    )


def _parse_lossy(c: ParamChecker):
    pes = c.probability_list("p_e_values", required=True, hi_open=True)
    gammas = c.probability_list("gamma_values", required=True, hi_open=True)
    c.finish_unknown()
    return {"p_e_values": pes or [], "gamma_values": gammas or []}


def _run_lossy(params, seed):
    rows = []
    for pe in params["p_e_values"]:
        for gamma in params["gamma_values"]:
            p_star, t_union, ratio = an.unreliable_local_two_symmetric(pe, gamma)
            rows.append((pe, gamma, p_star, t_union, ratio))
    return ExperimentResult(
        header=["p_e", "gamma", "p_star", "T_union", "ratio"],
        rows=rows,
        metrics={"points": len(rows)},
    )


EXPERIMENTS = {
    "ratios": Experiment(
        "ratios",
        "Two-user completion times and improvement ratios over a p_e grid",
        _parse_ratios,
        _run_ratios,
    ),
    "n-symmetric-sweep": Experiment(
        "n-symmetric-sweep",
        "Broadcast-only vs shared completion times versus group size",
        _parse_n_sweep,
        _run_n_sweep,
    ),
    "asym-two-user": Experiment(
        "asym-two-user",
        "Two asymmetric users: times, optimal sharing probabilities, reciprocity price",
        _parse_asym,
        _run_asym,
    ),
    "lp-three-user": Experiment(
        "lp-three-user",
        "Three-user sharing LP optimum (optionally cross-checked by simulation)",
        _parse_lp,
        _run_lp,
        uses_trials=True,
    ),
    "grouping": Experiment(
        "grouping",
        "Group the worst user or serve it separately: delivery-time comparison",
        _parse_grouping,
        _run_grouping,
    ),
    "dynamic": Experiment(
        "dynamic",
        "Dynamic arrivals: queue sizes, delays and sharing probability per mode",
        _parse_dynamic,
        _run_dynamic,
    ),
    "stability-sweep": Experiment(
        "stability-sweep",
        "Classify arrival rates as stable/unstable and estimate the boundary",
        _parse_stability,
        _run_stability,
    ),
    "utility": Experiment(
        "utility",
        "Per-user download/upload accounting under uniform sharing",
        _parse_utility,
        _run_utility,
        uses_trials=True,
    ),
    "markov": Experiment(
        "markov",
        "Two-state Markov downlinks: completion times at the steady state",
        _parse_markov,
        _run_markov,
    ),
    "lossy-d2d": Experiment(
        "lossy-d2d",
        "Lossy local link: optimal sharing probability and improvement ratio",
        _parse_lossy,
        _run_lossy,
    ),
}


def validate_params(kind: str, params: dict):
    """Return (parsed_params, errors) for the kind's schema."""
    checker = ParamChecker(params)
    parsed = EXPERIMENTS[kind].parse(checker)
    return parsed, checker.errors
