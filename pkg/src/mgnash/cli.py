"""Experiment command line.

Subcommands:

  generate   write a random game to JSON and print its content hash
  solve      run a solver for one or more seeds; per-seed run CSVs, a
             plot-ready long-format gaps.csv (log10 column) and summary.json
  eval       print the Nash gap of a stored joint policy (12 significant digits)
  compare    homotopy vs the actor-critic baseline, gap curves sampled at
             the switching times and averaged over seeds

A flat JSON object given with --config supplies defaults for any long flag
(keys use underscores: eta_prime, gap_every, fit_cutoff); explicit flags
win. Every run directory gets a config echo in the CSV sidecars, and
rerunning from that echo reproduces the CSVs byte for byte.

Exit codes: 0 success, 2 usage/config error, 3 numerical failure.
"""

import argparse
import json
import math
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor

from .errors import GameFormatError, NumericalError, ScheduleError
from .game import MAX, MIN, game_hash, load_game, load_policy, save_game, serialize_game, deserialize_game
from .homotopy import build_schedule, run_homotopy, run_single_algorithm
from .metrics import fit_linear_rate
from .randgen import GenSpec, random_game, random_instance, random_policy_pair
from .analytics import nash_gap

_ALGOS = ("homotopy", "ogda", "avg-ogda", "actor-critic")


def _parse_spec(text):
    parts = str(text).split(",")
    if len(parts) != 4:
        raise ValueError(f"--spec wants S,A,B,gamma, got {text!r}")
    try:
        S, A, B = (int(p) for p in parts[:3])
        gamma = float(parts[3])
    except ValueError as e:
        raise ValueError(f"--spec wants S,A,B,gamma, got {text!r}: {e}") from e
    return S, A, B, gamma


def _parse_schedule(text):
    parts = str(text).split(",")
    if len(parts) != 2:
        raise ValueError(f"--schedule wants u,v, got {text!r}")
    return parts[0].strip(), parts[1].strip()


def _parse_seeds(seed, seeds):
    if seeds is not None:
        if isinstance(seeds, (list, tuple)):
            return [int(s) for s in seeds]
        return [int(s) for s in str(seeds).split(",") if s.strip() != ""]
    if seed is not None:
        return [int(seed)]
    return [0]


def _load_config(path):
    try:
        with open(path) as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ValueError(f"cannot read config {path}: {e}") from e
    if not isinstance(doc, dict):
        raise ValueError(f"config {path} must hold a flat JSON object")
    return doc


class _Resolver:
    """Flag > config > default resolution for one subcommand invocation."""

    def __init__(self, args):
        self.args = args
        self.cfg = _load_config(args.config) if getattr(args, "config", None) else {}

    def get(self, name, default=None):
        val = getattr(self.args, name, None)
        if val is not None:
            return val
        if name in self.cfg:
            return self.cfg[name]
        return default


def _instance_for_seed(game_json, spec, seed):
    """Game and initial policies for one seed.

    With a fixed game file the seed still drives the initial policy draw
    (through the same stream discipline as full generation); with a spec,
    the seed generates the whole instance.
    """
    if game_json is not None:
        game = deserialize_game(game_json)
        gspec = GenSpec(game.num_states, game.num_actions_min,
                        game.num_actions_max, game.gamma, seed)
        z0 = random_policy_pair(gspec)
        return game, z0
    S, A, B, gamma = spec
    return random_instance(GenSpec(S, A, B, gamma, seed))


def _solve_worker(cfg):
    game, z0 = _instance_for_seed(cfg["game_json"], cfg["spec"], cfg["seed"])
    meta = {"seed": cfg["seed"], "config": cfg["echo"]}
    if cfg["algo"] == "homotopy":
        schedule = build_schedule(cfg["T"], cfg["schedule"][0], cfg["schedule"][1])
        _, log = run_homotopy(
            game, z0, cfg["eta"], cfg["eta_prime"], schedule,
            gap_every=cfg["gap_every"], timing=cfg["timing"], metadata=meta,
        )
    else:
        stepsize = cfg["eta_prime"] if cfg["algo"] == "avg-ogda" else cfg["eta"]
        _, log = run_single_algorithm(
            game, z0, cfg["algo"], stepsize, cfg["T"],
            gap_every=cfg["gap_every"], timing=cfg["timing"], metadata=meta,
        )
    return cfg["seed"], log


def _compare_worker(cfg):
    game, z0 = _instance_for_seed(cfg["game_json"], cfg["spec"], cfg["seed"])
    schedule = build_schedule(cfg["T"], cfg["schedule"][0], cfg["schedule"][1])
    switch = schedule.switch_times()
    _, log_h = run_homotopy(
        game, z0, cfg["eta"], cfg["eta_prime"], schedule,
        gap_every=0, log_at=switch,
    )
    baseline = cfg["baseline"]
    if baseline == "homotopy":
        _, log_b = run_homotopy(
            game, z0, cfg["eta"], cfg["eta_prime"], schedule,
            gap_every=0, log_at=switch,
        )
    else:
        stepsize = cfg["eta_prime"] if baseline == "avg-ogda" else cfg["eta"]
        _, log_b = run_single_algorithm(
            game, z0, baseline, stepsize, cfg["T"],
            gap_every=0, log_at=switch,
        )
    hg = {r.t: r.nash_gap for r in log_h.rows}
    bg = {r.t: r.nash_gap for r in log_b.rows}
    return cfg["seed"], switch, [hg[t] for t in switch], [bg[t] for t in switch]


def _fan_out(worker, cfgs, workers):
    if workers <= 1 or len(cfgs) <= 1:
        return [worker(c) for c in cfgs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futures = [ex.submit(worker, c) for c in cfgs]
        return [f.result() for f in futures]


def _common_run_config(res):
    algo = str(res.get("algo", "homotopy")).replace("_", "-")
    if algo not in _ALGOS:
        raise ValueError(f"--algo must be one of {', '.join(_ALGOS)}, got {algo!r}")
    game_path = res.get("game")
    spec_text = res.get("spec")
    if game_path is None and spec_text is None:
        raise ValueError("one of --game or --spec is required")
    if game_path is not None and spec_text is not None:
        raise ValueError("--game and --spec are mutually exclusive")
    game_json = None
    if game_path is not None:
        with open(game_path) as f:
            game_json = f.read()
        deserialize_game(game_json)  # fail early with a clear message
    spec = _parse_spec(spec_text) if spec_text is not None else None
    seeds = _parse_seeds(res.get("seed"), res.get("seeds"))
    T = int(res.get("T", 200000))
    if T < 1:
        raise ValueError(f"--T must be >= 1, got {T}")
    return {
        "algo": algo,
        "game_path": game_path,
        "game_json": game_json,
        "spec": spec,
        "seeds": seeds,
        "T": T,
        "eta": float(res.get("eta", 0.1)),
        "eta_prime": float(res.get("eta_prime", 0.1)),
        "gap_every": int(res.get("gap_every", 100)),
        "workers": int(res.get("workers", 0)) or min(len(seeds), os.cpu_count() or 1),
        "timing": bool(res.get("timing", False)),
    }


def _echo(common, schedule, seed):
    echo = {
        "algo": common["algo"],
        "seeds": str(seed),
        "T": common["T"],
        "eta": common["eta"],
        "eta_prime": common["eta_prime"],
        "schedule": f"{schedule[0]},{schedule[1]}",
        "gap_every": common["gap_every"],
        "timing": common["timing"],
    }
    if common["game_path"] is not None:
        echo["game"] = common["game_path"]
    else:
        S, A, B, gamma = common["spec"]
        echo["spec"] = f"{S},{A},{B},{gamma!r}"
    return echo


def cmd_generate(args):
    res = _Resolver(args)
    spec_text = res.get("spec")
    if spec_text is None:
        raise ValueError("--spec S,A,B,gamma is required")
    S, A, B, gamma = _parse_spec(spec_text)
    seed = int(res.get("seed", 0))
    out = res.get("out", "game.json")
    game = random_game(GenSpec(S, A, B, gamma, seed))
    save_game(game, out)
    print(f"{game_hash(game)}  {out}")
    return 0


def cmd_solve(args):
    res = _Resolver(args)
    common = _common_run_config(res)
    schedule = _parse_schedule(res.get("schedule", "2,4"))
    out_dir = res.get("out", "runs")
    os.makedirs(out_dir, exist_ok=True)
    cfgs = []
    for seed in common["seeds"]:
        cfgs.append({
            "seed": seed, "game_json": common["game_json"], "spec": common["spec"],
            "algo": common["algo"], "T": common["T"], "eta": common["eta"],
            "eta_prime": common["eta_prime"], "schedule": schedule,
            "gap_every": common["gap_every"], "timing": common["timing"],
            "echo": _echo(common, schedule, seed),
        })
    results = _fan_out(_solve_worker, cfgs, common["workers"])

    if common["algo"] == "homotopy":
        sched = build_schedule(common["T"], schedule[0], schedule[1])
        lf_ends = sched.lf_cumulative_ends()
        default_cutoff = lf_ends[6] if len(lf_ends) >= 7 else common["T"] // 10
    else:
        default_cutoff = common["T"] // 10
    fit_cutoff = int(res.get("fit_cutoff", default_cutoff))

    per_seed = {}
    gaps_rows = []
    for seed, log in results:
        path = os.path.join(out_dir, f"run_seed{seed}.csv")
        log.write(path)
        ts, gaps = log.gap_series()
        slope, r2, n = fit_linear_rate(ts, gaps, fit_cutoff)
        gap_at_cutoff = next((g for t, g in zip(ts, gaps) if t >= fit_cutoff), None)
        per_seed[str(seed)] = {
            "csv": path,
            "final_gap": gaps[-1] if gaps else None,
            "fit_cutoff": fit_cutoff,
            "gap_at_cutoff": gap_at_cutoff,
            "fit_slope": slope,
            "fit_r_squared": r2,
            "fit_samples": n,
        }
        for r in log.rows:
            if r.nash_gap is None:
                continue
            lg = "" if r.nash_gap <= 0.0 else repr(math.log10(r.nash_gap))
            gaps_rows.append(f"{seed},{r.t},{r.segment_kind},{r.k},{r.nash_gap!r},{lg}")

    finals = [v["final_gap"] for v in per_seed.values() if v["final_gap"] is not None]
    summary = {
        "algo": common["algo"],
        "seeds": common["seeds"],
        "per_seed": per_seed,
        "median_final_gap": statistics.median(finals) if finals else None,
        "min_final_gap": min(finals) if finals else None,
        "max_final_gap": max(finals) if finals else None,
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    with open(os.path.join(out_dir, "gaps.csv"), "w") as f:
        f.write("seed,t,segment_kind,k,nash_gap,log10_gap\n")
        f.write("\n".join(gaps_rows) + ("\n" if gaps_rows else ""))
    if summary["median_final_gap"] is not None:
        print(f"median final gap {summary['median_final_gap']:.12g} over {len(finals)} seed(s)")
    return 0


def cmd_eval(args):
    res = _Resolver(args)
    game_path = res.get("game")
    min_path = res.get("min_policy")
    max_path = res.get("max_policy")
    if not (game_path and min_path and max_path):
        raise ValueError("--game, --min-policy and --max-policy are all required")
    game = load_game(game_path)
    x = load_policy(min_path, MIN)
    y = load_policy(max_path, MAX)
    if x.probs.shape != (game.num_states, game.num_actions_min):
        raise ValueError(
            f"min policy shape {x.probs.shape} does not fit the game "
            f"({game.num_states}, {game.num_actions_min})"
        )
    if y.probs.shape != (game.num_states, game.num_actions_max):
        raise ValueError(
            f"max policy shape {y.probs.shape} does not fit the game "
            f"({game.num_states}, {game.num_actions_max})"
        )
    print(f"{nash_gap(game, (x, y)):.12g}")
    return 0


def cmd_compare(args):
    res = _Resolver(args)
    common = _common_run_config(res)
    if common["algo"] != "homotopy":
        raise ValueError("compare always runs homotopy on the first arm; do not set --algo")
    baseline = str(res.get("baseline", "actor-critic")).replace("_", "-")
    if baseline not in _ALGOS:
        raise ValueError(f"--baseline must be one of {', '.join(_ALGOS)}, got {baseline!r}")
    schedule = _parse_schedule(res.get("schedule", "2,2.1"))
    T = int(res.get("T", 50000))
    common["T"] = T
    out_dir = res.get("out", "compare_out")
    os.makedirs(out_dir, exist_ok=True)
    cfgs = []
    for seed in common["seeds"]:
        cfgs.append({
            "seed": seed, "game_json": common["game_json"], "spec": common["spec"],
            "T": T, "eta": common["eta"], "eta_prime": common["eta_prime"],
            "schedule": schedule, "baseline": baseline,
        })
    results = _fan_out(_compare_worker, cfgs, common["workers"])
    switch = results[0][1]
    n = float(len(results))
    avg_h = [sum(r[2][i] for r in results) / n for i in range(len(switch))]
    avg_b = [sum(r[3][i] for r in results) / n for i in range(len(switch))]
    path = os.path.join(out_dir, "compare.csv")
    with open(path, "w") as f:
        f.write("t,gap_homotopy,gap_baseline\n")
        for t, gh, gb in zip(switch, avg_h, avg_b):
            f.write(f"{t},{gh!r},{gb!r}\n")
    meta = {
        "seeds": common["seeds"], "T": T,
        "schedule": f"{schedule[0]},{schedule[1]}",
        "eta": common["eta"], "eta_prime": common["eta_prime"],
        "baseline": baseline,
    }
    if common["game_path"] is not None:
        meta["game"] = common["game_path"]
    else:
        S, A, B, gamma = common["spec"]
        meta["spec"] = f"{S},{A},{B},{gamma!r}"
    with open(os.path.join(out_dir, "compare.meta.json"), "w") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"final averaged gaps: homotopy {avg_h[-1]:.6g}, baseline {avg_b[-1]:.6g}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="mgnash", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", help="flat JSON config; flags override its keys")
        sp.add_argument("--seed", type=int, help="single seed")
        sp.add_argument("--seeds", help="comma-separated seed list")

    g = sub.add_parser("generate", help="write a random game to JSON")
    add_common(g)
    g.add_argument("--spec", help="S,A,B,gamma")
    g.add_argument("--out", help="output path (default game.json)")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run a solver, write run CSVs and a summary")
    add_common(s)
    s.add_argument("--game", help="game JSON file (seed then only draws initial policies)")
    s.add_argument("--spec", help="S,A,B,gamma; each seed generates its own instance")
    s.add_argument("--algo", help="homotopy | ogda | avg-ogda | actor-critic")
    s.add_argument("--eta", type=float, help="fast/local stepsize (default 0.1)")
    s.add_argument("--eta-prime", dest="eta_prime", type=float,
                   help="slow/global stepsize (default 0.1); used by avg-ogda")
    s.add_argument("--schedule", help="u,v bases of the switching schedule (default 2,4)")
    s.add_argument("--T", dest="T", type=int, help="iterations (default 200000)")
    s.add_argument("--gap-every", dest="gap_every", type=int,
                   help="gap evaluation cadence (default 100)")
    s.add_argument("--fit-cutoff", dest="fit_cutoff", type=int,
                   help="first iteration of the tail used for the rate fit")
    s.add_argument("--workers", type=int, help="worker processes (default: one per seed, capped at CPUs)")
    s.add_argument("--timing", action="store_true", default=None,
                   help="record wall_ms in run CSVs (off by default to keep outputs reproducible)")
    s.add_argument("--out", help="output directory (default runs)")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("eval", help="print the Nash gap of a stored joint policy")
    e.add_argument("--config", help="flat JSON config; flags override its keys")
    e.add_argument("--game", help="game JSON file")
    e.add_argument("--min-policy", dest="min_policy", help="min player policy JSON")
    e.add_argument("--max-policy", dest="max_policy", help="max player policy JSON")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("compare", help="homotopy vs a baseline at matched switch times")
    add_common(c)
    c.add_argument("--game", help="game JSON file")
    c.add_argument("--spec", help="S,A,B,gamma")
    c.add_argument("--baseline", help="second arm (default actor-critic); "
                                      "homotopy gives a self-comparison control")
    c.add_argument("--eta", type=float, help="fast stepsize, also the baseline's (default 0.1)")
    c.add_argument("--eta-prime", dest="eta_prime", type=float, help="slow stepsize (default 0.1)")
    c.add_argument("--schedule", help="u,v (default 2,2.1)")
    c.add_argument("--T", dest="T", type=int, help="iterations (default 50000)")
    c.add_argument("--workers", type=int)
    c.add_argument("--out", help="output directory (default compare_out)")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GameFormatError, ScheduleError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
