"""Subcommand bodies. Each returns an :class:`Outcome`; the CLI handles I/O."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from ..electrical import current_flow, lipschitz_margin, solve_potential, sublevel_cut
from ..exactwalk import (
    THEOREM1_CONSTANT,
    return_time_distribution,
    theorem1_margin,
    theorem2_hazard_profile,
)
from ..expander import check_mixing_bound, decorate, expander_report
from ..graphcore import GraphError, build_halfline, write_edgelist
from ..montecarlo.experiments import (
    collision_inside_expander,
    comb_collision_experiment,
    control_comb,
    escape_experiment,
    expander_window_experiment,
    main_comb,
)
from ..montecarlo.parallel import TrialPlan
from ..montecarlo.stats import one_sided_greater
from .graphspec import parse_params, quiet_parse_graph
from .suite import CorpusEntry, bound_checks, default_corpus, identity_checks, rational_checks, small_corpus


@dataclass
class Outcome:
    report: dict
    csv: str
    passed: bool = True
    warnings: list = field(default_factory=list)


def _vertex_list(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        return [int(x) for x in str(text).split(",") if x != ""]
    except ValueError:
        raise GraphError(f"bad vertex list {text!r}") from None


def _far_vertex(g, v: int) -> int:
    d = g.distances_from([v])
    return int(np.argmax(np.where(np.isfinite(d), d, -1)))


def _plan(args, trials=None, step_cap=None) -> TrialPlan:
    return TrialPlan(args.seed, args.trials if trials is None else trials, step_cap, args.workers)


def _rows(header: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(_cell(x) for x in r) + "\n")
    return buf.getvalue()


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def cmd_dist(args) -> Outcome:
    g, v0, warns = quiet_parse_graph(args.graph, args.seed)
    v = v0 if args.v is None else args.v
    table = return_time_distribution(g, v, args.horizon, exact=args.rational, strict=args.strict)
    margin, argmin = theorem1_margin(table)
    prof = theorem2_hazard_profile(table)
    passed = margin >= THEOREM1_CONSTANT and prof.within_e10
    report = {
        "graph": g.name, "v": v, "horizon": args.horizon, "degree": table.degree,
        "exact": table.exact, "rational": table.rational, "notes": table.notes,
        "theorem1": {"min": margin, "argmin": argmin, "constant": THEOREM1_CONSTANT,
                     "passed": margin >= THEOREM1_CONSTANT},
        "theorem2": {"max": prof.max_value, "argmax": prof.argmax, "within_e10": prof.within_e10,
                     "late_max": prof.late_max, "late_threshold": prof.late_threshold,
                     "profile": prof.profile},
        "table": {"p": table.p, "s": table.s, "hazard": table.hazard},
    }
    return Outcome(report, table.to_csv(), passed, warns + list(table.notes))


def cmd_resistance(args) -> Outcome:
    g, v0, warns = quiet_parse_graph(args.graph, args.seed)
    S = _vertex_list(args.source) or [v0]
    T = _vertex_list(args.sink) or [_far_vertex(g, S[0])]
    pot = solve_potential(g, S, T)
    flow = current_flow(pot)
    lip = lipschitz_margin(pot)
    report = {"graph": g.name, "source": S, "sink": T, "resistance": pot.resistance,
              "lipschitz_margin": lip, "harmonic_residual": pot.harmonic_residual(),
              "net_outflow": flow.net_outflow(S)}
    passed = lip <= 1.0 + 1e-10
    if args.cut is not None:
        cut = sublevel_cut(pot, args.cut)
        report["cut"] = {"threshold": cut.threshold, "size": len(cut.inside),
                         "boundary": cut.boundary, "resistance_to_boundary": cut.resistance_to_boundary,
                         "sandwich_ok": cut.sandwich_ok}
        passed = passed and cut.sandwich_ok
    csv = flow.to_csv() if args.flow else pot.to_csv()
    return Outcome(report, csv, passed, warns)


def cmd_expander(args) -> Outcome:
    spec = args.graph or f"expander:{args.n}:{args.d}"
    g, _, warns = quiet_parse_graph(spec, args.seed)
    rep = expander_report(g, seed=args.seed, iterations=args.iterations)
    mix = check_mixing_bound(g, rep.lambda2_abs, args.mix_horizon, seed=args.seed)
    report = {"graph": g.name, "expander": rep, "mixing": mix}
    passed = rep.connected and rep.lambda2_abs < 1.0 and mix.ok
    rows = [("lambda2_abs", rep.lambda2_abs), ("connected", rep.connected),
            ("bipartite", rep.bipartite), ("resistance_diameter_sample", rep.resistance_diameter_sample),
            ("mixing_ok", mix.ok), ("mixing_worst_margin", mix.worst_margin)]
    if args.window:
        dec, vp = decorate(g, 0)
        win = expander_window_experiment(dec, vp, _plan(args), args.window_const)
        rng = np.random.Generator(np.random.PCG64(args.seed))
        pairs = [tuple(int(x) for x in rng.choice(g.n_vertices, 2, replace=False)) for _ in range(3)]
        coll = []
        for u1, u2 in pairs:
            c = collision_inside_expander(dec, vp, u1, u2, _plan(args))
            coll.append({"u1": u1, "u2": u2, "estimate": c.estimate,
                         "parity_obstruction": c.parity_obstruction, "passed": c.passed})
        report["window"] = win
        report["collisions"] = coll
        passed = passed and all(c["passed"] or c["parity_obstruction"] for c in coll)
        rows += [("delta_star", win.delta_star), ("window_c", win.window_c),
                 ("window_start", win.window[0]), ("window_end", win.window[1])]
    return Outcome(report, _rows(["key", "value"], rows), passed, warns)


def cmd_escape(args) -> Outcome:
    g, v0, warns = quiet_parse_graph(args.graph, args.seed)
    x = v0 if args.x is None else args.x
    y = _far_vertex(g, x) if args.y is None else args.y
    eps = [float(e) for e in str(args.epsilon).split(",")]
    results = [escape_experiment(g, x, y, e, _plan(args)) for e in eps]
    report = {"graph": g.name, "x": x, "y": y, "results": [r.to_dict() for r in results]}
    rows = [(r.epsilon, r.resistance, r.step_limit, r.estimate.estimate, r.estimate.ci_low,
             r.estimate.ci_high, r.exact, r.passed) for r in results]
    csv = _rows(["epsilon", "resistance", "step_limit", "estimate", "ci_low", "ci_high", "exact",
                 "passed"], rows)
    return Outcome(report, csv, all(r.passed for r in results), warns)


def cmd_sharpness(args) -> Outcome:
    g, v0, warns = quiet_parse_graph(args.graph, args.seed)
    t = args.t
    table = return_time_distribution(g, v0, t, strict=args.strict)
    line = return_time_distribution(build_halfline(t), 0, t)
    h_g, h_line = float(table.hazard[t]), float(line.hazard[t])
    ratio = h_g / h_line
    prof = theorem2_hazard_profile(table)
    report = {"graph": g.name, "t": t, "hazard": h_g, "halfline_hazard": h_line, "ratio": ratio,
              "min_ratio": args.min_ratio, "passed_ratio": ratio >= args.min_ratio,
              "normalized_hazard": t * h_g / math.log(t),
              "halfline_normalized_hazard": t * h_line / math.log(t),
              "within_e10": prof.within_e10, "exact": table.exact, "notes": table.notes,
              "meta": {k: g.meta[k] for k in ("expander_size", "delta") if k in g.meta}}
    csv = _rows(["t", "hazard", "halfline_hazard", "ratio"], [(t, h_g, h_line, ratio)])
    return Outcome(report, csv, ratio >= args.min_ratio, warns + list(table.notes))


def cmd_collide(args) -> Outcome:
    import warnings

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        params = parse_params(args.params, args.seed)
    warns = [str(w.message) for w in caught]
    plan = TrialPlan(args.seed, args.trials, args.step_cap, args.workers)
    total = params.windows[-1] if args.step_cap is None else min(params.windows[-1], args.step_cap)
    main = comb_collision_experiment(main_comb(params, total), params, plan, args.step_budget)
    report = {"params": {"heights": params.heights, "expander_sizes": params.expander_sizes,
                         "expander_degree": params.expander_degree},
              "main": main.to_dict()}
    passed = True
    csv_parts = [("main", main)]
    if main.windows and args.trials > 0:
        passed = all(f["ci_low"] > 0 for f in main.collision_frequency)
        if not args.no_control:
            ctrl = comb_collision_experiment(control_comb(params, total), params, plan, args.step_budget)
            report["control"] = ctrl.to_dict()
            k1, k2 = main.collision_trials[-1], ctrl.collision_trials[-1]
            pval = one_sided_greater(k1, args.trials, k2, args.trials)
            report["contrast"] = {"window": len(main.windows), "main": k1, "control": k2,
                                  "trials": args.trials, "p_value": pval, "alpha": args.alpha,
                                  "passed": pval < args.alpha}
            passed = passed and pval < args.alpha
            csv_parts.append(("control", ctrl))
    report["passed_checks"] = passed
    lines = []
    for label, rep in csv_parts:
        body = rep.to_csv().splitlines()
        if not lines:
            lines.append("experiment," + body[0])
        lines += [f"{label},{row}" for row in body[1:]]
    return Outcome(report, "\n".join(lines) + "\n", passed, warns)


def cmd_verify(args) -> Outcome:
    warns = []
    results = []
    if args.rational:
        entries = [] if args.no_default else small_corpus()
        for spec in args.graph or []:
            g, v, w = quiet_parse_graph(spec, args.seed)
            warns += w
            entries.append(CorpusEntry(g, v, min(args.horizon, 10)))
        for e in entries:
            results += rational_checks(e)
    else:
        entries = [] if args.no_default else default_corpus(args.horizon, args.seed)
        for spec in args.graph or []:
            g, v, w = quiet_parse_graph(spec, args.seed)
            warns += w
            entries.append(CorpusEntry(g, v, args.horizon))
        for e in entries:
            table = return_time_distribution(e.graph, e.v, e.horizon)
            if not table.exact:
                warns += table.notes
            results += bound_checks(e, table)
            results += identity_checks(e, args.expand_horizon, seed=args.seed, table=table)
    passed = all(r.passed for r in results)
    report = {"checks": [r.to_dict() for r in results], "n_checks": len(results),
              "n_failed": sum(not r.passed for r in results)}
    csv = _rows(["graph", "check", "value", "threshold", "passed"],
                [(r.graph, r.check, r.value, r.threshold, r.passed) for r in results])
    return Outcome(report, csv, passed, warns)


def cmd_construct(args) -> Outcome:
    g, v, warns = quiet_parse_graph(args.graph, args.seed)
    report = {"graph": g.name, "n_vertices": g.n_vertices, "n_edges": g.n_edges,
              "edgelist": write_edgelist(g)}
    return Outcome(report, write_edgelist(g), True, warns)
