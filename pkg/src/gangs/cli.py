"""Command line entry point: ``gangs run | solve-matrix | exploit | plot``.

Exit codes: 0 success, 2 bad input (config, CSV, checkpoint), 3 numerical
failure during a run.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace

import numpy as np

from gangs import __version__
from gangs import evaluation as ev
from gangs import svg
from gangs.config import PRESETS, ConfigError, load_config
from gangs.game import GameError, MixedStrategy, PayoffMatrix
from gangs.gang import MixtureStrategy
from gangs.lp import SimplexError, solve_zero_sum
from gangs.neural import MlpNet, NetError
from gangs.pnm import rb_ne_certificate, run_pnm
from gangs.rng import derive_seed, make_rng

LAYOUT_VERSION = 1
SCATTER_POINTS = 1000

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class InputError(Exception):
    pass


def _fmt(x: float) -> str:
    s = f"{x:.10g}"
    return "0" if s == "-0" else s


def _write_weights(path, strategy: MixedStrategy):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["index", "weight"])
        for i, p in enumerate(strategy.probs):
            w.writerow([i, repr(float(p))])


def _read_weights(path) -> MixedStrategy:
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows or [int(r["index"]) for r in rows] != list(range(len(rows))):
        raise InputError(f"{path}: malformed weight table")
    return MixedStrategy([float(r["weight"]) for r in rows])


def _strategy_path(out, kind, i):
    return os.path.join(out, "strategies", f"{kind}_{i:04d}.mlp")


class Checkpointer:
    """Writes the run state after initialization and after every iteration.

    Strategy files are append-only like the strategy lists; the matrix,
    equilibrium weights and history are rewritten each time.
    """

    def __init__(self, out):
        self.out = out
        self.saved = {"g": 0, "c": 0}
        os.makedirs(os.path.join(out, "strategies"), exist_ok=True)

    def __call__(self, state):
        for kind, strats in (("g", state.g_strats), ("c", state.c_strats)):
            while self.saved[kind] < len(strats):
                strats[self.saved[kind]].save(_strategy_path(self.out, kind, self.saved[kind]))
                self.saved[kind] += 1
        state.matrix.to_csv(os.path.join(self.out, "matrix.csv"))
        _write_weights(os.path.join(self.out, "ne_g.csv"), state.ne.row_strategy)
        _write_weights(os.path.join(self.out, "ne_c.csv"), state.ne.col_strategy)
        ev.write_history_csv(os.path.join(self.out, "history.csv"), state.history)


def load_solution(out):
    """``(config, mu_g, mu_c)`` from a run directory."""
    cfg = load_config(os.path.join(out, "config.ini"))
    try:
        w_g = _read_weights(os.path.join(out, "ne_g.csv"))
        w_c = _read_weights(os.path.join(out, "ne_c.csv"))
        g = [MlpNet.load(_strategy_path(out, "g", i)) for i in range(len(w_g))]
        c = [MlpNet.load(_strategy_path(out, "c", i)) for i in range(len(w_c))]
        spec = cfg.gang_spec()
        if any(n.arch != spec.gen_arch for n in g) or any(n.arch != spec.clf_arch for n in c):
            raise InputError("checkpoint architectures do not match config.ini")
    except (OSError, ValueError, KeyError, GameError, NetError) as exc:
        raise InputError(str(exc)) from None
    return cfg, MixtureStrategy(g, w_g), MixtureStrategy(c, w_c)


def _render(out):
    grid, values = ev.read_surface_csv(os.path.join(out, "surface.csv"))
    real, fake = ev.read_scatter_csv(os.path.join(out, "scatter.csv"))
    return svg.render(grid, values, real, fake)


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.preset:
        cfg = cfg.with_preset(args.preset)
    overrides = {k: v for k, v in (("jobs", args.jobs), ("output_dir", args.out),
                                   ("master_seed", args.master_seed)) if v is not None}
    cfg = replace(cfg, **overrides)
    if cfg.jobs < 1:
        raise ConfigError("jobs", "must be >= 1")
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "config.ini"), "w") as f:
        f.write(cfg.to_ini())

    task = cfg.make_task()
    task.to_csv(os.path.join(out, "task.csv"))
    spec = cfg.gang_spec(task)
    pcfg = cfg.pnm_config()

    def progress(state):
        checkpoint(state)
        if state.history and not args.quiet:
            h = state.history[-1]
            print(f"iteration {h.iteration}: u_brs={h.u_brs:.4f} accepted={h.accepted} "
                  f"support={len(state.g_strats)}x{len(state.c_strats)}", file=sys.stderr)

    checkpoint = Checkpointer(out)
    state = run_pnm(spec, pcfg, callback=progress)
    mu_g, mu_c = state.mu_g, state.mu_c

    grid = cfg.grid(task)
    ev.write_surface_csv(os.path.join(out, "surface.csv"), grid,
                         ev.classifier_response_surface(mu_c, grid))
    rng = make_rng(cfg.master_seed, "scatter")
    real = spec.sample_real(SCATTER_POINTS, rng)
    fake = mu_g.generate(spec.sample_latent(SCATTER_POINTS, rng), rng)
    ev.write_scatter_csv(os.path.join(out, "scatter.csv"), real, fake)
    with open(os.path.join(out, "plot.svg"), "w") as f:
        f.write(_render(out))

    covered, fractions = ev.generator_coverage(mu_g, spec, task, cfg.eval_n, cfg.master_seed)
    mean_out, band = ev.indifference_stat(mu_c, task, cfg.eval_n, derive_seed(cfg.master_seed, "indifference"))
    report = {
        "iterations": state.iteration,
        "terminated": state.terminated,
        "accepted": sum(h.accepted for h in state.history),
        "support_g": len(mu_g.active()),
        "support_c": len(mu_c.active()),
        "value": state.ne.value,
        "covered_modes": covered,
        "mode_fractions": fractions.tolist(),
        "indifference_mean": mean_out,
        "indifference_band_fraction": band,
    }
    if state.terminated:
        u, ok = rb_ne_certificate(state, spec, pcfg, derive_seed(cfg.master_seed, "certificate"))
        report.update(certificate_u_brs=u, certified=ok)
    if cfg.attack_enabled:
        atk = cfg.attack_config(spec)
        expl, g_term, c_term = ev.exploitability(mu_g, mu_c, spec, atk,
                                                 derive_seed(cfg.master_seed, "exploit"))
        report.update(exploitability=expl, g_term=g_term, c_term=c_term,
                      attacker_params=list(atk.param_counts))
    with open(os.path.join(out, "report.json"), "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")

    files = {os.path.relpath(os.path.join(d, n), out) for d, _, names in os.walk(out) for n in names}
    manifest = {"layout_version": LAYOUT_VERSION, "package_version": __version__,
                "files": sorted(files | {"manifest.json"})}
    with open(os.path.join(out, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    for key in ("covered_modes", "indifference_band_fraction", "exploitability"):
        if key in report:
            print(f"{key},{_fmt(report[key])}")
    return EXIT_OK


def cmd_solve_matrix(args) -> int:
    try:
        U = PayoffMatrix.from_csv(args.csv)
    except (OSError, GameError) as exc:
        raise InputError(str(exc)) from None
    sol = solve_zero_sum(U)
    print(f"value,{_fmt(sol.value)}")
    print("row," + ",".join(_fmt(p) for p in sol.row_strategy.probs))
    print("col," + ",".join(_fmt(p) for p in sol.col_strategy.probs))
    return EXIT_OK


def cmd_exploit(args) -> int:
    if args.restarts is not None and args.restarts < 1:
        raise ConfigError("restarts", "must be >= 1")
    if args.steps is not None and args.steps < 0:
        raise ConfigError("steps", "must be >= 0")
    cfg, mu_g, mu_c = load_solution(args.dir)
    spec = cfg.gang_spec()
    atk = cfg.attack_config(spec, restarts=args.restarts, steps=args.steps)
    seed = derive_seed(cfg.master_seed, "exploit") if args.seed is None else args.seed
    expl, g_term, c_term = ev.exploitability(mu_g, mu_c, spec, atk, seed)
    gen_params, clf_params = atk.param_counts
    print(f"expl,{expl!r}")
    print(f"g_term,{g_term!r}")
    print(f"c_term,{c_term!r}")
    print(f"attacker_gen_params,{gen_params}")
    print(f"attacker_clf_params,{clf_params}")
    return EXIT_OK


def cmd_plot(args) -> int:
    try:
        text = _render(args.dir)
    except (OSError, ValueError, KeyError, IndexError) as exc:
        raise InputError(str(exc)) from None
    with open(args.out or os.path.join(args.dir, "plot.svg"), "w") as f:
        f.write(text)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="gangs", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run PNM from a config file and evaluate the result")
    r.add_argument("--config", required=True)
    r.add_argument("--out", help="output directory (overrides run.output_dir)")
    r.add_argument("--preset", choices=PRESETS)
    r.add_argument("--jobs", type=int, help="concurrent payoff evaluations / best responses")
    r.add_argument("--master-seed", type=int)
    r.add_argument("--quiet", action="store_true")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("solve-matrix", help="solve a zero-sum game given as header-free CSV")
    s.add_argument("csv")
    s.set_defaults(func=cmd_solve_matrix)

    e = sub.add_parser("exploit", help="attack a saved solution with fresh best responses")
    e.add_argument("dir")
    e.add_argument("--restarts", type=int)
    e.add_argument("--steps", type=int)
    e.add_argument("--seed", type=int)
    e.set_defaults(func=cmd_exploit)

    pl = sub.add_parser("plot", help="re-render plot.svg from surface.csv and scatter.csv")
    pl.add_argument("dir")
    pl.add_argument("--out")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SimplexError, NetError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
