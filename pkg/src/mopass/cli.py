"""Command-line entry point: ``mopass {check,solve,verify,oracle}``.

Runs are described by INI files with sections ``domain``, ``grid``, ``phi``,
``rhs``, ``mp`` and ``run``.  ``--config`` takes a path or the name of a
bundled example (``oned_cubic``, ``pxlap_2d``, ``double_phase_1d``,
``zero_rhs``).

Exit codes: 0 success, 1 failed hypothesis check, 2 bad input,
3 solver did not converge, 4 mountain-pass geometry not found,
5 shooting oracle failed.
"""

from __future__ import annotations

import argparse
import configparser
import io
import json
import math
import sys
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .discretization import Grid
from .mountain_pass import (GeometryError, MountainPassConfig, OracleError, probe_geometry,
                            shooting_oracle, solve)
from .phi_core import (PhiFamily, build_companion, check_a0, check_a1, check_alpha_window, check_sc,
                       check_standing_assumption)
from .problem import (DiscreteEnergy, Nonlinearity, check_ar, check_ar_consequence, check_subcritical,
                      check_superlinear_zero)
from .reports import CheckReport, HypothesisError, HypothesisWarning, InputError, to_jsonable, write_jsonl
from .suites import SUITES, run_suite

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_NOCONV, EXIT_GEOMETRY, EXIT_ORACLE = 0, 1, 2, 3, 4, 5


class ConfigError(ValueError):
    def __init__(self, message: str, key: str = ""):
        super().__init__(message)
        self.key = key


# -- schema -----------------------------------------------------------------

def _floats(s):
    return [float(v) for v in s.split(",") if v.strip()]


def _ints(s):
    return [int(v) for v in s.split(",") if v.strip()]


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _pos(x):
    return x > 0


SCHEMA = {
    "domain": {"dim": (int, lambda v: v in (1, 2)), "extent": (_floats, lambda v: all(e > 0 for e in v))},
    "grid": {"n": (_ints, lambda v: all(k >= 9 for k in v)), "scheme": (str, lambda v: v in ("p1", "q1c"))},
    "phi": {"kind": (str, lambda v: v in ("constant_power", "variable_exponent", "double_phase")),
            "p": (float, lambda v: v > 1), "p_coeffs": (_floats, bool), "q": (float, lambda v: v > 1),
            "a_coeffs": (_floats, bool), "alpha": (float, lambda v: v >= 0), "scale": (float, _pos)},
    "rhs": {"kind": (str, lambda v: v in ("pure_power", "weighted_power")), "q": (float, lambda v: v > 1),
            "coeff": (float, lambda v: v >= 0), "weight_coeffs": (_floats, bool), "theta": (float, _pos),
            "t0": (float, _pos)},
    "mp": {"path_points": (int, lambda v: v >= 8), "tol": (float, _pos), "max_iter": (int, lambda v: v >= 0),
           "bump_center": (_floats, bool), "bump_radius": (float, _pos), "bump_amplitude": (float, _pos),
           "metric": (str, lambda v: v in ("h1", "flux", "euclidean")), "refine_threshold": (float, lambda v: v >= 0),
           "t_scan_max": (float, _pos)},
    "run": {"seed": (int, lambda v: v >= 0), "output_dir": (str, bool), "override_hypotheses": (_bool, lambda v: True)},
}


def _emit_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return ", ".join(_emit_value(x) for x in v)
    return str(v)


@dataclass
class RunConfig:
    """Typed view of a configuration file; only keys present in the file are stored."""

    values: dict = field(default_factory=dict)

    def get(self, section: str, key: str, default=None):
        return self.values.get(section, {}).get(key, default)

    def set(self, section: str, key: str, value) -> None:
        self.values.setdefault(section, {})[key] = value

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        try:
            cp.read_string(text)
        except configparser.Error as e:
            raise ConfigError(f"malformed configuration: {e}") from None
        out = cls()
        for section in cp.sections():
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", section)
            for key, raw in cp.items(section):
                name = f"{section}.{key}"
                if key not in SCHEMA[section]:
                    raise ConfigError(f"unknown key {name}", name)
                conv, valid = SCHEMA[section][key]
                try:
                    value = conv(raw)
                except ValueError:
                    raise ConfigError(f"cannot parse {name} = {raw!r}", name) from None
                if isinstance(value, float) and not math.isfinite(value):
                    raise ConfigError(f"{name} must be finite", name)
                if not valid(value):
                    raise ConfigError(f"value out of range for {name}: {raw!r}", name)
                out.set(section, key, value)
        out.validate()
        return out

    def emit(self) -> str:
        buf = io.StringIO()
        for section in SCHEMA:
            if section not in self.values:
                continue
            buf.write(f"[{section}]\n")
            for key in SCHEMA[section]:
                if key in self.values[section]:
                    buf.write(f"{key} = {_emit_value(self.values[section][key])}\n")
            buf.write("\n")
        return buf.getvalue()

    def validate(self) -> None:
        dim = self.dim
        if len(self.extent) != dim:
            raise ConfigError(f"domain.extent needs {dim} entries", "domain.extent")
        n = self.get("grid", "n", [65])
        if len(n) not in (1, dim):
            raise ConfigError(f"grid.n needs 1 or {dim} entries", "grid.n")
        kind = self.get("phi", "kind")
        if kind is None:
            raise ConfigError("phi.kind is required", "phi.kind")
        need = {"constant_power": ["p"], "variable_exponent": ["p_coeffs"], "double_phase": ["p", "q", "a_coeffs"]}
        for key in need[kind]:
            if self.get("phi", key) is None:
                raise ConfigError(f"phi.{key} is required for kind {kind}", f"phi.{key}")
        if self.get("rhs", "q") is None:
            raise ConfigError("rhs.q is required", "rhs.q")
        if self.get("rhs", "kind", "pure_power") == "weighted_power" and self.get("rhs", "weight_coeffs") is None:
            raise ConfigError("rhs.weight_coeffs is required for weighted_power", "rhs.weight_coeffs")
        center = self.get("mp", "bump_center")
        if center is not None and len(center) != dim:
            raise ConfigError(f"mp.bump_center needs {dim} entries", "mp.bump_center")

    # -- builders ----------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.get("domain", "dim", 1)

    @property
    def extent(self) -> tuple:
        return tuple(self.get("domain", "extent", [1.0] * self.dim))

    @property
    def override(self) -> bool:
        return self.get("run", "override_hypotheses", False)

    @property
    def seed(self) -> int:
        return self.get("run", "seed", 0)

    def grid(self) -> Grid:
        n = self.get("grid", "n", [65])
        return Grid(self.extent, tuple(n) * (self.dim if len(n) == 1 else 1), self.get("grid", "scheme", "p1"))

    def family(self) -> PhiFamily:
        kind, ext = self.get("phi", "kind"), self.extent
        scale = self.get("phi", "scale", 1.0)
        try:
            if kind == "constant_power":
                return PhiFamily.constant_power(self.get("phi", "p"), ext, scale)
            if kind == "variable_exponent":
                return PhiFamily.variable_exponent(tuple(self.get("phi", "p_coeffs")), ext, scale)
            return PhiFamily.double_phase(self.get("phi", "p"), self.get("phi", "q"),
                                          tuple(self.get("phi", "a_coeffs")), ext, scale)
        except (ValueError, InputError) as e:
            raise ConfigError(f"invalid phi section: {e}", "phi") from None

    def nonlinearity(self) -> Nonlinearity:
        kind = self.get("rhs", "kind", "pure_power")
        q, theta, t0 = self.get("rhs", "q"), self.get("rhs", "theta"), self.get("rhs", "t0", 1.0)
        if kind == "pure_power":
            return Nonlinearity.pure_power(q, self.get("rhs", "coeff", 1.0), theta, t0, dim=self.dim)
        return Nonlinearity.weighted_power(q, tuple(self.get("rhs", "weight_coeffs")), theta, t0, dim=self.dim)

    def mp_config(self) -> MountainPassConfig:
        mp = dict(self.values.get("mp", {}))
        if "bump_center" in mp:
            mp["bump_center"] = tuple(mp["bump_center"])
        return MountainPassConfig(seed=self.seed, **mp)


def load_config(spec: str) -> RunConfig:
    """Parse a config file path, or a bundled example by name."""
    path = Path(spec)
    if path.is_file():
        return RunConfig.parse(path.read_text(encoding="utf-8"))
    bundled = resources.files("mopass") / "configs" / f"{spec}.ini"
    if bundled.is_file():
        return RunConfig.parse(bundled.read_text(encoding="utf-8"))
    raise ConfigError(f"no config file or bundled example named {spec!r}", "--config")


def bundled_names() -> list[str]:
    return sorted(p.name[:-4] for p in (resources.files("mopass") / "configs").iterdir() if p.name.endswith(".ini"))


# -- commands ---------------------------------------------------------------

def _out_dir(args, cfg: RunConfig | None) -> Path:
    d = args.output or (cfg.get("run", "output_dir") if cfg else None) or "out"
    p = Path(d)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _sample_points(cfg: RunConfig):
    ext = cfg.extent
    if cfg.dim == 1:
        return list(np.linspace(0.0, ext[0], 5))
    return [(a, b) for a in np.linspace(0.0, ext[0], 3) for b in np.linspace(0.0, ext[1], 3)]


def run_checks(cfg: RunConfig, trials: int, seed: int) -> list[CheckReport]:
    fam, nl, N = cfg.family(), cfg.nonlinearity(), cfg.dim
    pts = _sample_points(cfg)
    reports = [check_sc(fam), check_a0(fam), check_a1(fam, trials=trials, rng_seed=seed),
               check_standing_assumption(fam, N)]
    alpha = cfg.get("phi", "alpha")
    lo, hi = 1.0 / fam.g0 - 1.0 / fam.g_sup, min(1.0 / N, 1.0 / fam.g_sup)
    if alpha is None:
        alpha = 0.5 * (lo + hi) if lo < hi else max(lo, 0.0)
    reports.append(check_alpha_window(fam, alpha, N))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", HypothesisWarning)
            psi = build_companion(fam, alpha, N, override=True)
        reports.append(check_subcritical(nl, psi, points=pts))
    except HypothesisError as e:
        reports.append(CheckReport("f_alpha", False, constant=float("nan"), message=str(e)))
    reports.append(check_superlinear_zero(nl, fam.g_sup, points=pts))
    reports.append(check_ar(nl, points=pts, g_sup=fam.g_sup))
    reports.append(check_ar_consequence(nl, points=pts))
    return reports


def cmd_check(args, cfg: RunConfig) -> int:
    override = args.override_hypotheses or cfg.override
    reports = run_checks(cfg, args.trials or 1000, args.seed if args.seed is not None else cfg.seed)
    out = _out_dir(args, cfg)
    write_jsonl(out / "check_report.jsonl", reports)
    failed = [r.check for r in reports if not r.passed]
    for r in reports:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.check}: {r.message}")
    if failed and override:
        for name in failed:
            warnings.warn(f"hypothesis {name} violated (overridden)", HypothesisWarning, stacklevel=1)
        print(f"{len(failed)} hypothesis check(s) failed; overridden")
        return EXIT_OK
    print(f"{len(reports) - len(failed)}/{len(reports)} hypothesis checks passed")
    return EXIT_CHECK if failed else EXIT_OK


def cmd_solve(args, cfg: RunConfig) -> int:
    fam, nl, grid = cfg.family(), cfg.nonlinearity(), cfg.grid()
    mp = cfg.mp_config()
    if args.seed is not None:
        mp = MountainPassConfig(**{**mp.__dict__, "seed": args.seed})
    out = _out_dir(args, cfg)
    override = args.override_hypotheses or cfg.override
    failed = [r.check for r in run_checks(cfg, 200, mp.seed) if not r.passed]
    if failed and not override:
        for name in failed:
            print(f"warning: hypothesis {name} not satisfied", file=sys.stderr)
    try:
        geo = probe_geometry(fam, nl, grid, mp)
    except GeometryError as e:
        (out / "summary.json").write_text(json.dumps(
            {"status": "geometry_failure", "probe": e.probe, "message": str(e)}, indent=2) + "\n")
        print(f"geometry failure ({e.probe}): {e}", file=sys.stderr)
        return EXIT_GEOMETRY
    res = solve(fam, nl, grid, mp, geometry=geo)
    res.u_star.to_csv(out / "u_star.csv")
    write_jsonl(out / "history.jsonl", res.history)
    summary = {**res.summary(), "geometry": geo.to_dict(), "hypothesis_failures": failed}
    (out / "summary.json").write_text(json.dumps(to_jsonable(summary), indent=2) + "\n")
    print(f"{res.status}: beta = {res.beta:.12g}, residual = {res.residual:.3g}, "
          f"iterations = {res.iterations}, eta = {geo.eta:g}, r = {geo.r:.6g}")
    return EXIT_OK if res.converged else EXIT_NOCONV


def cmd_verify(args, cfg: RunConfig | None) -> int:
    seed = args.seed if args.seed is not None else 0
    rep = run_suite(args.suite, seed=seed, trials=args.trials)
    print("\n".join(rep.lines()))
    if args.output:
        out = _out_dir(args, None)
        (out / f"verify_{args.suite}.json").write_text(json.dumps(to_jsonable(rep.to_dict()), indent=2) + "\n")
    return EXIT_OK if rep.passed else EXIT_CHECK


def cmd_oracle(args, cfg: RunConfig) -> int:
    if cfg.dim != 1:
        raise ConfigError("the shooting oracle needs domain.dim = 1", "domain.dim")
    if cfg.get("phi", "kind") != "constant_power" or cfg.get("rhs", "kind", "pure_power") != "pure_power":
        raise ConfigError("the shooting oracle needs phi.kind = constant_power and rhs.kind = pure_power", "phi.kind")
    fam, nl, grid = cfg.family(), cfg.nonlinearity(), cfg.grid()
    p, q = fam.p, nl.q
    try:
        u = shooting_oracle(p, q, grid, coeff=nl.coeff, flux_coeff=fam.scale * p)
    except OracleError as e:
        print(f"oracle failure: {e}", file=sys.stderr)
        return EXIT_ORACLE
    out = _out_dir(args, cfg)
    u.to_csv(out / "oracle.csv")
    J = float(DiscreteEnergy(fam, nl, grid).energy(u.flat))
    h = grid.h[0]
    summary = {"J": J, "amplitude": float(np.max(u.values)), "slope_at_0": float(u.values[1] / h), "p": p, "q": q}
    (out / "oracle_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"J = {J:.12g}, max u = {summary['amplitude']:.12g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file path or bundled example name")
    common.add_argument("--seed", type=int, help="RNG seed (overrides run.seed)")
    common.add_argument("--output", help="artifact directory (overrides run.output_dir)")
    common.add_argument("--trials", type=int, help="sample count for checks and suites")
    common.add_argument("--suite", choices=sorted(SUITES), help="property suite for 'verify'")
    common.add_argument("--override-hypotheses", action="store_true",
                        help="treat failed hypothesis checks as warnings")
    parser = argparse.ArgumentParser(prog="mopass", description=__doc__.split("\n")[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="run every hypothesis checker")
    sub.add_parser("solve", parents=[common], help="probe the geometry and compute a mountain-pass solution")
    sub.add_parser("verify", parents=[common], help="run a property suite")
    sub.add_parser("oracle", parents=[common], help="1D shooting-method reference solution")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            if not args.suite:
                parser.error("verify needs --suite")
            cfg = load_config(args.config) if args.config else None
            return cmd_verify(args, cfg)
        if not args.config:
            parser.error(f"{args.command} needs --config")
        cfg = load_config(args.config)
        return {"check": cmd_check, "solve": cmd_solve, "oracle": cmd_oracle}[args.command](args, cfg)
    except ConfigError as e:
        print(f"config error [{e.key}]: {e}", file=sys.stderr)
        return EXIT_INPUT
    except InputError as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
