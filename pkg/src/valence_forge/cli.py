"""Command line front end: ``valence-forge <command> [options]``.

Settings come from flags, then an optional JSON config file, then the
built-in reference run.  Every command writes its artifacts to ``--out-dir``
and prints one line per check.  Exit status is 0 when every check passes, 1
on a failed check or numerical breakdown, and 2 on configuration or
precondition errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .construction import (
    ConstructionState,
    RootFindingError,
    build_construction,
    derive_params,
)
from .contour import ContourError
from .dimension import box_dimension, cantor_levels, construction_levels
from .becker import check_becker_halfplane, extremal_logderiv, standard_maps
from .gmap import AnnulusError, GMap, WindingError, check_bilipschitz, valence_demo
from .kernel import QuadratureError
from .plots import loglog_svg, loop_svg
from .seed import SeedConstants, SeedError, build_normalized_seed, estimate_constants, load_seed, normalized_from_meta
from .verify import (
    PreconditionError,
    VerificationReport,
    check_construction_bounds,
    check_lemma7,
    maximal_periodic_set,
    reports_to_csv,
    reports_to_jsonl,
)

COMMANDS = ("seed", "construct", "verify", "gmap", "valence", "dimension", "becker", "all")
THREADS_ENV = "VALENCE_FORGE_THREADS"

DEFAULTS = {
    "N": 5,
    "eps": 1 / 128,
    "beta1": 1 / 128,
    "gamma1": None,  # eps * beta1 / 2
    "depth": 3,
    "tol": 1e-12,
    "samples": 400,
    "rng_seed": 0,
    "seed_name": "exp",
    "c": 1.0,
    "r": 8.0,
    "pairs": 500,
    "out_dir": "out",
    "state": None,
    "seed_file": None,
    "threads": None,
    "svg": False,
}

# fixed Lemma-7 instance: unit period, ten windows
LEMMA7 = {"b": 1.0, "N": 10, "eta": 0.1, "T": 10.0}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {p} not found")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {p}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    unknown = sorted(set(data) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return data


def resolve_config(args: argparse.Namespace) -> dict:
    """Flags over config file over defaults; threads fall back to the environment."""
    cfg = dict(DEFAULTS)
    cfg.update(load_config(args.config))
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None and val is not False:
            cfg[key] = val
    if cfg["threads"] is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                cfg["threads"] = int(env)
            except ValueError:
                raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        else:
            cfg["threads"] = 1
    if cfg["gamma1"] is None:
        cfg["gamma1"] = cfg["eps"] * cfg["beta1"] / 2
    _validate(cfg)
    return cfg


def _validate(cfg: dict) -> None:
    ints = {"N": 3, "depth": 1, "samples": 1, "pairs": 1, "threads": 1, "rng_seed": 0}
    for key, lo in ints.items():
        v = cfg[key]
        if isinstance(v, bool) or not isinstance(v, int) or v < lo:
            raise ConfigError(f"{key} must be an integer >= {lo}, got {v!r}")
    for key in ("eps", "beta1", "gamma1", "tol", "c"):
        v = cfg[key]
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not (math.isfinite(v) and v > 0):
            raise ConfigError(f"{key} must be a positive number, got {v!r}")
    if not (isinstance(cfg["r"], (int, float)) and cfg["r"] > 1):
        raise ConfigError(f"r must exceed 1, got {cfg['r']!r}")
    if not isinstance(cfg["seed_name"], str):
        raise ConfigError("seed_name must be text")


# ---------------------------------------------------------------------------
# output


def _jsonable(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, default=_jsonable) + "\n"


class Run:
    def __init__(self, cfg: dict, out=None):
        self.cfg = cfg
        self.out_dir = Path(cfg["out_dir"])
        self.out = sys.stdout if out is None else out
        self.results: list[tuple[str, bool]] = []
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create {self.out_dir}: {exc}") from None
        if not os.access(self.out_dir, os.W_OK):
            raise ConfigError(f"{self.out_dir} is not writable")

    def write(self, name: str, text: str) -> Path:
        path = self.out_dir / name
        path.write_text(text)
        return path

    def check(self, name: str, passed: bool, detail: str = "") -> None:
        self.results.append((name, bool(passed)))
        tag = "PASS" if passed else "FAIL"
        print(f"{tag} {name}" + (f" {detail}" if detail else ""), file=self.out)

    def report(self, rep: VerificationReport) -> None:
        self.results.append((rep.check_id, rep.passed))
        print(rep.summary(), file=self.out)

    @property
    def state_path(self) -> Path:
        return Path(self.cfg["state"]) if self.cfg["state"] else self.out_dir / "state.json"

    @property
    def seed_path(self) -> Path:
        return Path(self.cfg["seed_file"]) if self.cfg["seed_file"] else self.out_dir / "seed.json"

    def params(self):
        c = self.cfg
        return derive_params(c["N"], c["eps"], c["beta1"], c["gamma1"])

    def load_state(self) -> ConstructionState:
        path = self.state_path
        if not path.is_file():
            raise PreconditionError(f"state file {path} not found; run `construct` first or pass --state")
        try:
            return ConstructionState.from_json(path.read_text())
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"state file {path} is not a construction state: {exc}") from None

    def load_seed(self):
        path = self.seed_path
        if not path.is_file():
            raise PreconditionError(f"seed file {path} not found; run `seed` first or pass --seed-file")
        try:
            data = json.loads(path.read_text())
            g0 = load_seed(data["seed_name"], data["c"])
            return normalized_from_meta(g0, data["seed"]), SeedConstants.from_dict(data["constants"])
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ConfigError(f"seed file {path} is malformed: {exc}") from None

    def gmap(self, seed, state) -> GMap:
        return GMap(seed, state, tol=self.cfg["tol"])


# ---------------------------------------------------------------------------
# stages


def stage_seed(run: Run) -> None:
    c = run.cfg
    g0 = load_seed(c["seed_name"], c["c"])
    g = build_normalized_seed(g0, c["r"], threads=c["threads"])
    consts = estimate_constants(g)
    run.write("seed.json", dumps({
        "kind": "normalized-seed", "seed_name": c["seed_name"], "c": c["c"],
        "seed": g.to_dict(), "constants": consts.to_dict(),
    }))
    res = g.meta["collision_residual"]
    run.check("seed.collision", res < 1e-10, f"residual={res:.3g} b0={abs(g.b0):.6g}")
    bad = consts.check_invariants()
    run.check("seed.constants", not bad, f"m={consts.m:.6g} M={consts.M:.6g} rho={consts.rho:.6g}"
              + (f" violated: {', '.join(bad)}" if bad else ""))


def stage_construct(run: Run) -> None:
    c = run.cfg
    p = run.params()
    state = build_construction(p, c["depth"], c["tol"], c["threads"])
    run.state_path.parent.mkdir(parents=True, exist_ok=True)
    run.state_path.write_text(state.to_json())
    recs = state.records
    worst_res = max(r.residual for r in recs.values())
    run.check("construct.roots", worst_res < c["tol"], f"nodes={len(recs)} max|Im P|={worst_res:.3g}")
    use = max(abs(r.omega) / (14 * p.eps * p.beta1) for r in recs.values())
    use4 = max(abs(r.omega) / (8 * p.eps * p.beta1) for r in recs.values())
    run.check("construct.centering-7eps", use < 1, f"usage={use:.4g} (4eps usage={use4:.4g})")
    bad = state.check_invariants()
    run.check("construct.invariants", not bad, "; ".join(bad[:3]))


def stage_verify(run: Run) -> None:
    c = run.cfg
    state = run.load_state()
    reports = check_construction_bounds(state, c["samples"], c["rng_seed"], c["threads"])
    L = LEMMA7
    reports.append(check_lemma7(maximal_periodic_set(L["b"], L["N"], L["eta"]), L["b"], L["N"], L["eta"], L["T"]))
    run.write("verify.jsonl", reports_to_jsonl(reports))
    run.write("verify.csv", reports_to_csv(reports))
    groups: dict[str, list[VerificationReport]] = {}
    for rep in reports:
        groups.setdefault(rep.check_id, []).append(rep)
    for cid in sorted(groups):
        reps = groups[cid]
        worst = min(reps, key=lambda r: r.margin)
        fails = sum(not r.passed for r in reps)
        run.check(f"verify.{cid}", fails == 0,
                  f"reports={len(reps)} failed={fails} min_margin={worst.margin:.4g} worst_node={worst.node or '-'}")


def stage_gmap(run: Run) -> None:
    c = run.cfg
    state = run.load_state()
    seed, consts = run.load_seed()
    rep = check_bilipschitz(run.gmap(seed, state), state, state.depth, consts, c["pairs"], c["rng_seed"])
    run.write("gmap.json", dumps(rep.to_dict()))
    ex = rep.extra
    run.check(f"gmap.bilipschitz[level{state.depth}]", rep.passed and ex["violations"] == 0,
              f"pairs={ex['pairs']} ratio=[{ex['min_ratio']:.6g}, {ex['max_ratio']:.6g}] "
              f"band=[{ex['lower']:.6g}, {ex['upper']:.6g}] violations={ex['violations']}")


def stage_valence(run: Run) -> None:
    c = run.cfg
    state = run.load_state()
    seed, consts = run.load_seed()
    rep = valence_demo(run.gmap(seed, state), state, consts, state.depth, keep_loops=512 if c["svg"] else 0)
    run.write("valence.json", dumps(rep.to_dict()))
    if c["svg"]:
        for disk, F in zip(rep.disks, rep.loops):
            run.write(f"valence_loop_level{disk['level']}.svg",
                      loop_svg(F, 0j, f"level {disk['level']} loop, winding {disk['winding']}"))
    windings = [d["winding"] for d in rep.disks]
    run.check("valence.disks", rep.passed,
              f"depth={state.depth} total={rep.total_preimages} windings={windings} disjoint={rep.disjoint}")
    if rep.univalence_checks:
        ok = all(u["winding"] == 1 for u in rep.univalence_checks)
        run.check("valence.univalence", ok, f"spot checks={len(rep.univalence_checks)}")


def stage_dimension(run: Run) -> None:
    c = run.cfg
    p = run.params()
    levels = construction_levels(p, max(2, c["depth"]))
    rep = box_dimension(levels, p)
    ref = box_dimension(cantor_levels(3, 1.0, max(2, c["depth"])))
    rep.extra = {"classical_cantor_slope": ref.two_scale_slope, "classical_cantor_exact": math.log(2) / math.log(3)}
    run.write("dimension.json", dumps(rep.to_dict()))
    if c["svg"]:
        run.write("dimension.svg", loglog_svg(levels, rep.two_scale_slope, f"N={p.N}"))
    gap = abs(rep.two_scale_slope - rep.formula_s)
    run.check("dimension.slope", gap < 1e-6, f"slope={rep.two_scale_slope:.9g} closed_form={rep.formula_s:.9g}")
    run.check("dimension.cantor", abs(ref.two_scale_slope - math.log(2) / math.log(3)) < 1e-6,
              f"slope={ref.two_scale_slope:.9g}")
    print(f"d(N) = {rep.formula_dN:.9g}", file=run.out)


def stage_becker(run: Run) -> None:
    c = run.cfg
    reports = []
    for p in standard_maps():
        reports.extend(check_becker_halfplane(extremal_logderiv(1.0), p, 1.0, samples=1000, seed=c["rng_seed"]))
    run.write("becker.jsonl", reports_to_jsonl(reports))
    for rep in reports:
        run.report(rep)


STAGES = {
    "seed": [stage_seed],
    "construct": [stage_construct],
    "verify": [stage_verify],
    "gmap": [stage_gmap],
    "valence": [stage_valence],
    "dimension": [stage_dimension],
    "becker": [stage_becker],
    "all": [stage_seed, stage_construct, stage_verify, stage_gmap, stage_valence, stage_dimension],
}


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with any of the option names below")
    common.add_argument("--N", type=int)
    common.add_argument("--eps", type=float)
    common.add_argument("--beta1", type=float)
    common.add_argument("--gamma1", type=float, help="default eps*beta1/2")
    common.add_argument("--depth", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--samples", type=int, help="sample points per node for verify")
    common.add_argument("--rng-seed", dest="rng_seed", type=int)
    common.add_argument("--seed-name", dest="seed_name", help="'exp' or 'user:<path>'")
    common.add_argument("--c", type=float, help="frequency of the exp seed")
    common.add_argument("--r", type=float, help="q_r parameter of the normalisation")
    common.add_argument("--pairs", type=int, help="pairs for the bi-Lipschitz check")
    common.add_argument("--out-dir", dest="out_dir")
    common.add_argument("--state", help="construction state JSON (default <out-dir>/state.json)")
    common.add_argument("--seed-file", dest="seed_file", help="seed JSON (default <out-dir>/seed.json)")
    common.add_argument("--threads", type=int, help=f"worker threads (fallback ${THREADS_ENV})")
    common.add_argument("--svg", action="store_true", default=None, help="also write SVG figures")
    parser = argparse.ArgumentParser(prog="valence-forge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=f"run the {name} stage" if name != "all" else "run every stage")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        run = Run(resolve_config(args))
        for stage in STAGES[args.command]:
            stage(run)
    except (ConfigError, PreconditionError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SeedError, RootFindingError, QuadratureError, ContourError, WindingError, AnnulusError) as exc:
        print(f"FAIL {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    failed = [name for name, ok in run.results if not ok]
    print(f"{len(run.results)} checks, {len(failed)} failed", file=run.out)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
