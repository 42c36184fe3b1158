"""Command-line front end.

Every run is described by one JSON document (see :func:`parse_config`);
subcommand flags override its fields. Outputs go to ``out`` together with a
``manifest.json`` listing each emitted file with its SHA-256 digest.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import click
import numpy as np

from . import evolve, family, geometry, spectrum
from .errors import HMFlowError, SchemaError
from .geometry import LevelTag, TargetSurfaceProfile, eigenmap_eigenvalue
from .shooting import ShootSpec, integrate

COMMANDS = ("criterion", "profile", "atlas", "multiplicity", "spectrum", "evolve")
EXPERIMENTS = ("consistency", "energy", "linear", "expander", "pole")

# key -> (kind, commands that accept it; None means all)
_FIELDS: dict[str, tuple[str, tuple[str, ...] | None]] = {
    "manifold": ("object", None),
    "d": ("int", None),
    "l": ("int", None),
    "command": ("str", None),
    "out": ("str", None),
    "seed": ("int", None),
    "s_star": ("number", None),
    "s0": ("number", None),
    "tol": ("positive", None),
    "workers": ("int", None),
    "dims": ("int_list", ("criterion",)),
    "s": ("number", ("profile",)),
    "a_min": ("positive", ("atlas", "profile")),
    "a_max": ("positive", ("atlas", "profile")),
    "per_decade": ("int", ("atlas", "profile")),
    "K": ("int", ("multiplicity",)),
    "profile_file": ("str", ("spectrum",)),
    "a": ("number", ("spectrum", "evolve")),
    "E_lo": ("number", ("spectrum",)),
    "E_hi": ("number", ("spectrum",)),
    "experiment": ("str", ("evolve",)),
    "horizon": ("positive", ("evolve",)),
    "dt": ("positive", ("evolve",)),
    "c": ("number", ("evolve",)),
    "amplitude": ("positive", ("evolve",)),
    "runs": ("int", ("evolve",)),
}

_REQUIRED = {
    "profile": ("s",),
    "atlas": ("a_min", "a_max"),
    "multiplicity": ("K",),
    "spectrum": ("profile_file",),
    "evolve": ("experiment",),
}


@dataclass(frozen=True)
class RunConfig:
    """Validated run description."""

    manifold: dict
    d: int
    l: int
    command: str
    out: str = "out"
    seed: int = 0
    tol: float = 1e-9
    s_star: float | None = None
    s0: float | None = None
    workers: int | None = None
    params: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {"manifold": self.manifold, "d": self.d, "l": self.l, "command": self.command,
               "out": self.out, "seed": self.seed, "tol": self.tol}
        if self.s_star is not None:
            out["s_star"] = self.s_star
        if self.s0 is not None:
            out["s0"] = self.s0
        if self.workers is not None:
            out["workers"] = self.workers
        out.update(self.params)
        return out


def _check(key: str, kind: str, value: Any) -> Any:
    path = "/" + key
    is_num = isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind == "object":
        if not isinstance(value, dict):
            raise SchemaError(path, "object expected")
    elif kind == "int":
        if not isinstance(value, int) or isinstance(value, bool):
            raise SchemaError(path, "integer expected")
    elif kind == "str":
        if not isinstance(value, str):
            raise SchemaError(path, "string expected")
    elif kind == "number":
        if not is_num or not math.isfinite(value):
            raise SchemaError(path, "number expected")
        value = float(value)
    elif kind == "positive":
        if not is_num or not math.isfinite(value) or value <= 0:
            raise SchemaError(path, "positive number expected")
        value = float(value)
    elif kind == "int_list":
        if not isinstance(value, list) or not value:
            raise SchemaError(path, "non-empty array of integers expected")
        for i, v in enumerate(value):
            if not isinstance(v, int) or isinstance(v, bool) or v < 3:
                raise SchemaError(f"{path}/{i}", "integer >= 3 expected")
    return value


def parse_config(text: str | bytes | dict) -> RunConfig:
    """Validate a JSON run description.

    Raises
    ------
    SchemaError
        With the JSON pointer of the first offending entry and a short reason.
    """
    if isinstance(text, dict):
        data = text
    else:
        if isinstance(text, bytes):
            try:
                text = text.decode("utf-8")
            except UnicodeDecodeError:
                raise SchemaError("", "UTF-8 expected") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError("", f"invalid JSON: {exc.msg}") from None
    if not isinstance(data, dict):
        raise SchemaError("", "object expected")
    for key in ("manifold", "d", "l", "command"):
        if key not in data:
            raise SchemaError("/" + key, "required")
    cmd = _check("command", "str", data["command"])
    if cmd not in COMMANDS:
        raise SchemaError("/command", f"one of {', '.join(COMMANDS)} expected")
    vals = {}
    for key, value in data.items():
        if key not in _FIELDS:
            raise SchemaError("/" + key, "unknown field")
        kind, cmds = _FIELDS[key]
        if cmds is not None and cmd not in cmds:
            raise SchemaError("/" + key, f"not a parameter of {cmd}")
        vals[key] = _check(key, kind, value)
    TargetSurfaceProfile.from_config(vals["manifold"])
    if vals["d"] < 3:
        raise SchemaError("/d", "integer >= 3 expected")
    if vals["l"] < 1:
        raise SchemaError("/l", "integer >= 1 expected")
    for key in _REQUIRED.get(cmd, ()):
        if key not in vals:
            raise SchemaError("/" + key, "required")
    for key in ("K", "per_decade", "runs", "workers"):
        if key in vals and vals[key] < 1:
            raise SchemaError("/" + key, "positive integer expected")
    for lo, hi in (("a_min", "a_max"), ("E_lo", "E_hi")):
        if lo in vals and hi in vals and not vals[lo] < vals[hi]:
            raise SchemaError("/" + hi, f"must exceed {lo}")
    if cmd == "evolve" and vals["experiment"] not in EXPERIMENTS:
        raise SchemaError("/experiment", f"one of {', '.join(EXPERIMENTS)} expected")
    top = {"manifold", "d", "l", "command", "out", "seed", "tol", "s_star", "s0", "workers"}
    return RunConfig(
        manifold=vals["manifold"], d=vals["d"], l=vals["l"], command=cmd,
        out=vals.get("out", "out"), seed=vals.get("seed", 0), tol=vals.get("tol", 1e-9),
        s_star=vals.get("s_star"), s0=vals.get("s0"), workers=vals.get("workers"),
        params={k: v for k, v in vals.items() if k not in top})


# -- emission -------------------------------------------------------------

class _Emitter:
    """Collects emitted files and writes the manifest."""

    def __init__(self, out: Path):
        self.out = out
        self.files: list[str] = []
        out.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.out / name

    def json(self, name: str, data) -> None:
        with open(self.path(name), "w") as fh:
            json.dump(_plain(data), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def csv(self, name: str, header, rows) -> None:
        with open(self.path(name), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])

    def manifest(self, config: RunConfig, status: str) -> Path:
        entries = []
        for name in sorted(set(self.files)):
            blob = (self.out / name).read_bytes()
            entries.append({"file": name, "sha256": hashlib.sha256(blob).hexdigest(),
                            "bytes": len(blob)})
        target = self.out / "manifest.json"
        with open(target, "w") as fh:
            json.dump({"config": config.as_dict(), "status": status, "files": entries},
                      fh, indent=2, sort_keys=True)
            fh.write("\n")
        return target


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


# -- commands -------------------------------------------------------------

@dataclass
class _Context:
    cfg: RunConfig
    profile: TargetSurfaceProfile
    k: int
    s_star: float
    s0: float

    @property
    def base(self) -> ShootSpec:
        return ShootSpec(self.profile, self.cfg.d, self.k, self.s0, 0.0)


def _context(cfg: RunConfig) -> _Context:
    profile = TargetSurfaceProfile.from_config(cfg.manifold)
    k = eigenmap_eigenvalue(cfg.d, cfg.l).k
    s_star = cfg.s_star
    if s_star is None:
        lo, hi = profile.domain
        eqs = geometry.classify_levels(profile, (lo, hi)).of(LevelTag.EQUATOR)
        if not eqs:
            raise SchemaError("/s_star", "no equator found; give s_star explicitly")
        s_star = eqs[0]
    s0 = cfg.s0
    if s0 is None:
        s0 = geometry.flanking_minima(profile, s_star)[0]
    return _Context(cfg, profile, k, float(s_star), float(s0))


def _write_trajectory(em: _Emitter, name: str, traj) -> None:
    em.csv(name, ["r", "h", "dh"], zip(traj.r, traj.h, traj.dh))


def _cmd_criterion(ctx: _Context, em: _Emitter) -> None:
    dims = ctx.cfg.params.get("dims", [ctx.cfg.d])
    reps = [geometry.minimizing_criterion(ctx.profile, eigenmap_eigenvalue(d, ctx.cfg.l), ctx.s_star)
            for d in dims]
    em.csv("criterion.csv", ["d", "k", "lhs", "rhs", "verdict", "band_max", "c1", "c2"],
           [(r.d, r.k, r.lhs, r.rhs, r.verdict.value, r.band_max, r.c1, r.c2) for r in reps])
    em.json("criterion.json", [r.as_dict() for r in reps])


def _sweep(ctx: _Context, lo: float, hi: float) -> family.FamilySweep:
    per = int(ctx.cfg.params.get("per_decade", family.DEFAULT_PER_DECADE))
    grid = family.geometric_grid(lo, hi, per)
    return family.sweep(ctx.base, ctx.s_star, grid, ctx.cfg.workers)


def _cmd_atlas(ctx: _Context, em: _Emitter) -> None:
    p = ctx.cfg.params
    fs = _sweep(ctx, p["a_min"], p["a_max"])
    top = int(fs.I.max())
    if top > 0:
        family.find_jump_points(fs, top - 1)
    fs.to_csv(em.path("atlas.csv"))
    em.json("atlas.json", {
        "s0": ctx.s0, "s_star": ctx.s_star, "D": fs.D, "R": fs.R, "theta": fs.theta,
        "monotone_violations": fs.monotone_violations(),
        "invariant_violations": fs.invariant_violations(),
        "jumps": [{"n": j.n, "a_lo": j.a_lo, "a_hi": j.a_hi, "L": j.L, "bound": j.bound,
                   "consistent": j.consistent} for j in fs.jumps]})


def _emit_profiles(em: _Emitter, ps: family.ProfileSet) -> None:
    em.json("profiles.json", {**ps.as_dict(), "distinct": ps.distinct()})
    for i, m in enumerate(ps.members):
        _write_trajectory(em, f"profile_{i}.csv", m.trajectory)


def _cmd_profile(ctx: _Context, em: _Emitter) -> None:
    p = ctx.cfg.params
    s = p["s"]
    fs = _sweep(ctx, p.get("a_min", 1e-3), p.get("a_max", 1e4))
    top = int(fs.I.max())
    if top > 0:
        family.find_jump_points(fs, top - 1)
    members = []
    for a_lo, a_hi, _ in family._exemplar_brackets(fs, s, tuple(range(top + 1))):
        traj = family.solve_initial_data(ctx.base, s, (a_lo, a_hi), tol=ctx.cfg.tol,
                                         s_star=ctx.s_star)
        members.append(family.Member(traj.a, family.intersection_count(traj, ctx.s_star, fs.R),
                                     abs(traj.limit - s), traj))
    if not members:
        raise family.NoBracket(f"no sampled profile reaches the level {s:.12g}")
    _emit_profiles(em, family.ProfileSet(s, members, ctx.cfg.tol))


def _cmd_multiplicity(ctx: _Context, em: _Emitter) -> None:
    K = ctx.cfg.params["K"]
    window, ps, fs = family.multiplicity_window(ctx.base, ctx.s_star, K, tol=ctx.cfg.tol,
                                                workers=ctx.cfg.workers)
    em.json("window.json", {"K": K, "window": window, "s": ps.s,
                            "crossings": [m.crossings for m in ps.members],
                            "jumps": [{"n": j.n, "a": 0.5 * (j.a_lo + j.a_hi), "L": j.L}
                                      for j in fs.jumps]})
    _emit_profiles(em, ps)
    fs.to_csv(em.path("atlas.csv"))


def _load_profile_spec(ctx: _Context, path: str) -> list[ShootSpec]:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError("/profile_file", f"unreadable: {exc}") from None
    if isinstance(data, dict) and "profiles" in data:
        items = data["profiles"]
    elif isinstance(data, dict) and "a" in data:
        items = [data]
    else:
        raise SchemaError("/profile_file", "object with 'a' or 'profiles' expected")
    specs = []
    for i, it in enumerate(items):
        if not isinstance(it, dict) or not isinstance(it.get("a"), (int, float)):
            raise SchemaError(f"/profile_file/profiles/{i}/a", "number expected")
        specs.append(ctx.base.with_(a=float(it["a"]), s0=float(it.get("s0", ctx.s0))))
    return specs


def _cmd_spectrum(ctx: _Context, em: _Emitter) -> None:
    p = ctx.cfg.params
    out = []
    for i, spec in enumerate(_load_profile_spec(ctx, p["profile_file"])):
        traj = integrate(spec)
        prob = spectrum.LinearizedProblem.from_trajectory(traj)
        rep = spectrum.spectral_report(prob, 1.0, p.get("E_lo"), p.get("E_hi"))
        ext = int(np.count_nonzero(np.sign(traj.dh[:-1]) * np.sign(traj.dh[1:]) < 0))
        out.append({"a": spec.a, "s0": spec.s0, "limit": traj.limit, "extrema": ext,
                    "brackets": rep.brackets, **rep.as_dict()})
    em.json("spectrum.json", out)
    em.csv("eigenvalues.csv", ["a", "index", "E"],
           [(o["a"], j, lam) for o in out for j, lam in enumerate(o["eigenvalues"])])


def _experiment_json(em: _Emitter, **kw) -> None:
    em.json("experiment.json", kw)


def _exp_consistency(ctx: _Context, em: _Emitter) -> None:
    a = ctx.cfg.params.get("a", 1.0)
    dt = ctx.cfg.params.get("dt", 0.01)
    traj = integrate(ctx.base.with_(a=a, r_max=30.0))
    res = evolve.selfsimilar_consistency(traj, dt=dt)
    _experiment_json(em, experiment="consistency", chart="physical", scheme="midpoint",
                     source="full", t0=1.0, t1=4.0, dt=dt, a=a, error=res.error,
                     estimate=res.estimate, fine_error=res.fine_error, passed=res.passed)


def _exp_energy(ctx: _Context, em: _Emitter) -> None:
    p = ctx.cfg.params
    rng = np.random.default_rng(ctx.cfg.seed)
    rho = evolve.evolution_grid(12.0)
    runs = int(p.get("runs", 10))
    horizon, dt = p.get("horizon", 2.0), p.get("dt", 0.01)
    poles = tuple(geometry.flanking_minima(ctx.profile, ctx.s_star))
    summary = []
    for i in range(runs):
        w0 = evolve.random_admissible(rho, rng, ctx.s_star, poles)
        st = evolve.EvolutionState(evolve.Chart.SELFSIMILAR, rho, w0, 0.0, ctx.cfg.d,
                                   evolve.Source.full(ctx.profile, ctx.k), reference=ctx.s_star)
        mon = evolve.energy_monitor(st, horizon, dt)
        em.csv(f"energy_{i}.csv", ["sigma", "Ebar", "dissipation"],
               zip(mon.times, mon.energy, np.append(mon.dissipation, np.nan)))
        summary.append({"run": i, "monotone": mon.monotone, "max_increase": mon.max_increase,
                        "identity_residual": mon.identity_residual,
                        "scheme_error": mon.scheme_error, "identity_ok": mon.identity_ok})
    _experiment_json(em, experiment="energy", chart="selfsimilar", scheme="midpoint",
                     source="full", horizon=horizon, dt=dt, runs=summary)


def _exp_linear(ctx: _Context, em: _Emitter) -> None:
    p = ctx.cfg.params
    d = ctx.cfg.d
    c = p.get("c", -0.9 * (d - 2) ** 2 / 4.0)
    horizon, dt = p.get("horizon", 2.0), p.get("dt", 0.01)
    r = evolve.evolution_grid(20.0)
    st = evolve.EvolutionState(evolve.Chart.PHYSICAL, r, r * np.exp(-(r - 1.0) ** 2), 0.0, d,
                               evolve.Source.linear(c), outer=0.0)
    evolve.evolve(st, horizon, dt)
    st.to_csv(em.path("log.csv"))
    st.snapshot_csv(em.path("snapshot.csv"))
    L2 = np.array(st.log)[:, 1]
    _experiment_json(em, experiment="linear", chart="physical", scheme="midpoint", source="linear",
                     c=c, hardy=-(d - 2) ** 2 / 4.0, horizon=horizon, dt=dt,
                     max_increase=float(np.max(np.diff(L2))))


def _jump_profile(ctx: _Context):
    fs = family.sweep(ctx.base, ctx.s_star, family.geometric_grid(1e-3, 1e3, 32), ctx.cfg.workers)
    jumps = family.find_jump_points(fs, 1)
    if not jumps:
        raise family.JumpNotFound("no profile reaches the equator on [1e-3, 1e3]")
    j = jumps[0]
    return integrate(ctx.base.with_(a=0.5 * (j.a_lo + j.a_hi), r_max=40.0))


def _exp_expander(ctx: _Context, em: _Emitter) -> None:
    p = ctx.cfg.params
    eps = 0.02
    horizon, dt = p.get("horizon", 1.0), p.get("dt", 0.002)
    traj = _jump_profile(ctx)
    f = evolve.expander_slice(traj, eps, ctx.s_star)
    r = evolve.evolution_grid(20.0)
    st = evolve.EvolutionState(evolve.Chart.PHYSICAL, r, f(r), 0.0, ctx.cfg.d,
                               evolve.Source.perturbation(ctx.profile, ctx.k, ctx.s_star), outer=0.0)
    evolve.evolve(st, horizon, dt)
    st.to_csv(em.path("log.csv"))
    st.snapshot_csv(em.path("snapshot.csv"))
    log = np.array(st.log)
    _experiment_json(em, experiment="expander", chart="physical", scheme="midpoint",
                     source="perturbation", a=traj.a, eps=eps, horizon=horizon, dt=dt,
                     growth=float(log[-1, 1] / log[0, 1]),
                     exact_growth=((horizon + eps) / eps) ** (ctx.cfg.d / 4.0),
                     error_vs_exact=float(np.max(np.abs(st.u - f(r, horizon)))))


def _exp_pole(ctx: _Context, em: _Emitter) -> None:
    p = ctx.cfg.params
    amp = p.get("amplitude", 0.01)
    horizon, dt = p.get("horizon", 10.0), p.get("dt", 0.01)
    rep = evolve.pole_stability_experiment(ctx.profile, ctx.k, ctx.cfg.d, ctx.s0,
                                           lambda r: amp * np.exp(-(r - 2.0) ** 2),
                                           horizon=horizon, dt=dt)
    em.csv("log.csv", ["t", "Linf"], zip(rep.times, rep.linf))
    _experiment_json(em, experiment="pole", chart="physical", scheme="backward_euler",
                     source="perturbation", level=ctx.s0, amplitude=amp, horizon=horizon, dt=dt,
                     f0_sup=rep.f0_sup, sup_over_time=rep.sup_over_time, bound=rep.bound,
                     within_bound=rep.within_bound)


_EXPERIMENTS = {"consistency": _exp_consistency, "energy": _exp_energy, "linear": _exp_linear,
                "expander": _exp_expander, "pole": _exp_pole}


def _cmd_evolve(ctx: _Context, em: _Emitter) -> None:
    _EXPERIMENTS[ctx.cfg.params["experiment"]](ctx, em)


_COMMANDS = {"criterion": _cmd_criterion, "profile": _cmd_profile, "atlas": _cmd_atlas,
             "multiplicity": _cmd_multiplicity, "spectrum": _cmd_spectrum, "evolve": _cmd_evolve}


def run(config: RunConfig) -> int:
    """Execute ``config`` and write its outputs and manifest.

    Returns 0 on success and 1 when a module raised; the manifest records
    the status and the error (with the raising module) in ``error.json``.
    """
    em = _Emitter(Path(config.out))
    try:
        ctx = _context(config)
        _COMMANDS[config.command](ctx, em)
    except (HMFlowError, ValueError) as exc:
        module = type(exc).__module__.rsplit(".", 1)[-1]
        tb = exc.__traceback__
        while tb is not None:
            mod = tb.tb_frame.f_globals.get("__name__", "")
            if mod.startswith("hmflow.") and mod != __name__:
                module = mod.rsplit(".", 1)[-1]
            tb = tb.tb_next
        em.json("error.json", {"module": module, "error": type(exc).__name__, "message": str(exc)})
        em.manifest(config, "error")
        click.echo(f"error [{module}] {type(exc).__name__}: {exc}", err=True)
        return 1
    em.manifest(config, "ok")
    return 0


# -- click front end ------------------------------------------------------

def _load(config_path: str | None) -> dict:
    if config_path is None:
        return {"manifold": {"type": "sphere"}, "l": 1}
    return json.loads(Path(config_path).read_text(encoding="utf-8"))


def _execute(data: dict) -> None:
    try:
        cfg = parse_config(data)
    except SchemaError as exc:
        click.echo(f"schema error at {exc.path or '/'}: {exc.reason}", err=True)
        sys.exit(2)
    code = run(cfg)
    if code == 0:
        click.echo(os.fspath(Path(cfg.out) / "manifest.json"))
    sys.exit(code)


def _common(fn):
    opts = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                     help="JSON run description; flags override its fields."),
        click.option("--d", type=int, help="Domain dimension."),
        click.option("--l", type=int, help="Eigenmap degree."),
        click.option("--out", type=str, help="Output directory."),
        click.option("--seed", type=int, help="Seed for randomised experiments."),
        click.option("--manifold", type=str, help="Manifold description as JSON."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _merge(command: str, config_path, d, l, out, seed, manifold, **extra) -> dict:
    try:
        data = _load(config_path)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        click.echo(f"schema error at /: unreadable config ({exc})", err=True)
        sys.exit(2)
    if not isinstance(data, dict):
        click.echo("schema error at /: object expected", err=True)
        sys.exit(2)
    data["command"] = command
    if manifold is not None:
        try:
            data["manifold"] = json.loads(manifold)
        except json.JSONDecodeError:
            click.echo("schema error at /manifold: invalid JSON", err=True)
            sys.exit(2)
    for key, val in (("d", d), ("l", l), ("out", out), ("seed", seed), *extra.items()):
        if val is not None:
            data[key] = val
    return data


@click.group()
@click.version_option(package_name="artifact")
def main() -> None:
    """Expanding solutions of the equivariant harmonic map heat flow."""


@main.command("run")
@click.argument("config_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--d", type=int)
@click.option("--l", type=int)
@click.option("--out", type=str)
@click.option("--seed", type=int)
def run_cmd(config_file, d, l, out, seed) -> None:
    """Run the command named inside CONFIG_FILE."""
    try:
        data = json.loads(Path(config_file).read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        click.echo(f"schema error at /: {exc}", err=True)
        sys.exit(2)
    if isinstance(data, dict):
        for key, val in (("d", d), ("l", l), ("out", out), ("seed", seed)):
            if val is not None:
                data[key] = val
    _execute(data)


@main.command()
@_common
@click.option("--dims", type=str, help="Comma-separated list of dimensions.")
def criterion(dims, **kw) -> None:
    """Minimality verdict of the equator map (table over --dims)."""
    extra = {"dims": [int(x) for x in dims.split(",")]} if dims else {}
    _execute(_merge("criterion", **kw, **extra))


@main.command()
@_common
@click.option("--s", type=float, help="Target limit level.")
@click.option("--a-min", type=float)
@click.option("--a-max", type=float)
def profile(s, a_min, a_max, **kw) -> None:
    """All sampled expanding profiles with limit --s."""
    _execute(_merge("profile", **kw, s=s, a_min=a_min, a_max=a_max))


@main.command()
@_common
@click.option("--a-min", type=float)
@click.option("--a-max", type=float)
@click.option("--per-decade", type=int)
def atlas(a_min, a_max, per_decade, **kw) -> None:
    """Tabulate the limit map over a geometric grid of initial slopes."""
    _execute(_merge("atlas", **kw, a_min=a_min, a_max=a_max, per_decade=per_decade))


@main.command()
@_common
@click.option("--K", "K", type=int)
def multiplicity(K, **kw) -> None:
    """Window of levels reached by at least K distinct profiles."""
    _execute(_merge("multiplicity", **kw, K=K))


@main.command("spectrum")
@_common
@click.option("--profile-file", type=str)
@click.option("--e-lo", "E_lo", type=float)
@click.option("--e-hi", "E_hi", type=float)
def spectrum_cmd(profile_file, E_lo, E_hi, **kw) -> None:
    """Eigenvalues of the linearised operator at profiles from a JSON file."""
    _execute(_merge("spectrum", **kw, profile_file=profile_file, E_lo=E_lo, E_hi=E_hi))


@main.command("evolve")
@_common
@click.option("--experiment", type=click.Choice(EXPERIMENTS))
@click.option("--horizon", type=float)
@click.option("--dt", type=float)
def evolve_cmd(experiment, horizon, dt, **kw) -> None:
    """Run one of the radial evolution experiments."""
    _execute(_merge("evolve", **kw, experiment=experiment, horizon=horizon, dt=dt))


if __name__ == "__main__":
    main()
