"""Scenario registry and the per-scenario analysis pipeline."""

from __future__ import annotations

import datetime as _dt
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import discretization as disc
from . import engine
from . import eventual_positivity as evpos
from . import forms

log = logging.getLogger(__name__)

WORKERS_ENV = "SEMIGROUP_LAB_WORKERS"
MAX_N = 4000
MAX_SYSTEM = 5000


class ConfigError(ValueError):
    pass


class PipelineError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"stage '{stage}' failed: {message}")
        self.stage = stage


def fmt(x) -> str:
    """17 significant digits; the CSV number format."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    return f"{float(x):.17g}"


# --- registry ---------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    name: str
    citation: str
    defaults: dict
    build: Callable[[dict], engine.Generator]
    claims: Callable[["Context"], list] = field(default=lambda ctx: [])


def _n_from_spacing(p: dict) -> int:
    if p.get("n") is not None:
        return int(p["n"])
    return int(round(2 * p["L"] / p["h"])) - 1


def _build_ex4_1(p):
    n = int(p["n"])
    jump = disc.uniform_jump(n) if p["jump"] == "uniform" else disc.point_mass(n, n // 2)
    return disc.nonlocal_dirichlet_diffusion(n, (jump, jump), label="ex4_1")


def _build_ex9_2(p):
    grid = disc.GridDescriptor(0.0, float(p["L"]), int(p["n"]))
    return disc.schrodinger_system(grid, disc.projected_system_potential(int(p["N"])), label="ex9_2")


def _claim(text: str, value: bool, tolerance, detail=None) -> dict:
    return {"claim": text, "value": bool(value), "tolerance": tolerance, "detail": detail}


def _claims_heat_neumann(ctx):
    delta = ctx.fit[1] if ctx.fit else float("nan")
    return [
        _claim("spectral bound is 0", abs(ctx.spec.lambda0) <= 1e-10, 1e-10, ctx.spec.lambda0),
        _claim("fitted rate equals pi^2/L^2", abs(delta / (math.pi**2 / ctx.params["L"] ** 2) - 1) <= 0.02,
               0.02, delta),
    ]


def _claims_heat_dirichlet(ctx):
    target = -(math.pi**2) / ctx.params["L"] ** 2
    return [_claim("spectral bound equals -pi^2/L^2", abs(ctx.spec.lambda0 / target - 1) <= 0.01,
                   0.01, ctx.spec.lambda0)]


def _claims_ex4_1(ctx):
    g = ctx.gen
    ones = np.ones(g.n)
    nu = ctx.proj.rank1[0] if ctx.proj is not None else None
    out = [_claim("constant function is fixed: A 1 = 0",
                  np.max(np.abs(g.matrix @ ones)) <= 1e-10 * np.max(np.abs(g.matrix)), 1e-10,
                  float(np.max(np.abs(g.matrix @ ones))))]
    if nu is not None:
        out.append(_claim("limit is nu (x) 1 with nu > 0", bool(np.all(nu > 0)), 0.0, float(nu.min())))
        out.append(_claim("nu has total mass 1", abs(nu.sum() - 1) <= 1e-8, 1e-8, float(nu.sum())))
    return out


def _claims_ex4_2a(ctx):
    out = [_claim("spectral bound <= -1e-4", ctx.spec.lambda0 <= -1e-4, 1e-4, ctx.spec.lambda0)]
    if ctx.classification_unshifted is not None:
        out.append(_claim("S(t) f -> 0 (decay_to_zero)",
                          ctx.classification_unshifted.case == "decay_to_zero", engine.KERNEL_TOL,
                          ctx.classification_unshifted.case))
    return out


def _claims_ex7_1(ctx):
    ok = ctx.classification is not None and ctx.classification.case == "converges_rank1"
    return [_claim("rescaled semigroup converges to w (x) w", ok, engine.KERNEL_TOL,
                   ctx.classification.case if ctx.classification else None),
            _claim("limit is symmetric (phi = u)",
                   ctx.proj is not None and np.allclose(ctx.proj.u, ctx.proj.phi, rtol=0, atol=1e-12),
                   1e-12)]


def kernel_match_error(gen: engine.Generator, u: np.ndarray) -> float:
    """Relative L2 error between u and samples of 1/(1+x^2), both unit-normalized."""
    w = 1.0 / (1.0 + gen.nodes**2)
    a = u / np.linalg.norm(u)
    b = w / np.linalg.norm(w)
    return float(np.linalg.norm(a - b))


def _claims_ex7_2(ctx):
    err = kernel_match_error(ctx.gen, ctx.proj.u) if ctx.proj is not None else float("nan")
    return [_claim("|spb(A)| <= 5e-3", abs(ctx.spec.lambda0) <= 5e-3, 5e-3, ctx.spec.lambda0),
            _claim("kernel eigenfunction matches 1/(1+x^2)", err <= 1e-2, 1e-2, err)]


def _claims_ex9_1(ctx):
    return [_claim("eventually positive with finite t1",
                   ctx.cert.verdict == "eventually_positive" and ctx.cert.t1 is not None,
                   ctx.cert.eps, ctx.cert.t1),
            _claim("eigenvalue hypotheses hold for u = 1", bool(ctx.hyp and ctx.hyp.holds),
                   1e-8, ctx.hyp.eigenvector_bound_c if ctx.hyp else None)]


def _claims_ex9_2(ctx):
    g = ctx.gen
    big_n = int(ctx.params["N"])
    kern = np.tile(np.ones(big_n), g.n // big_n)
    res = float(np.max(np.abs(g.matrix @ kern)))
    out = [_claim("spectral bound is 0", abs(ctx.spec.lambda0) <= 1e-8, 1e-8, ctx.spec.lambda0),
           _claim("A (c (x) 1) = 0", res <= 1e-10, 1e-10, res)]
    if big_n > 1:
        out.append(_claim("eventually positive", ctx.cert.verdict == "eventually_positive",
                          ctx.cert.eps, ctx.cert.t1))
    return out


SCENARIOS: dict[str, Scenario] = {s.name: s for s in [
    Scenario("ex4_1", "diffusion with jump-back boundary conditions; converges to nu (x) 1",
             {"n": 100, "jump": "uniform"}, _build_ex4_1, _claims_ex4_1),
    Scenario("ex4_2a", "Schroedinger semigroup with small absorption in 1-D; S(t) f -> 0",
             {"L": 10.0, "n": 500, "m": 0.01},
             lambda p: disc.absorption_1d(float(p["m"]), p["L"], int(p["n"]), label="ex4_2a"),
             _claims_ex4_2a),
    Scenario("ex7_1", "confining potential (m = 1 for |x| > 1); gap survives domain growth",
             {"L": 20.0, "h": 0.05, "n": None},
             lambda p: disc.schrodinger_1d(disc.confined_potential, p["L"], _n_from_spacing(p),
                                           label="ex7_1"),
             _claims_ex7_1),
    Scenario("ex7_2", "potential (6x^2-2)/(1+x^2)^2 whose kernel is spanned by 1/(1+x^2)",
             {"L": 20.0, "n": 2000},
             lambda p: disc.schrodinger_1d(disc.rational_kernel_potential, p["L"], int(p["n"]),
                                           label="ex7_2"),
             _claims_ex7_2),
    Scenario("ex9_1", "Laplacian on (0,1) with u'(0) = -u'(1) = u(0) + u(1); eventually positive",
             {"n": 100}, lambda p: disc.nonlocal_laplace_interval(int(p["n"])), _claims_ex9_1),
    Scenario("ex9_2", "Schroedinger system with matrix potential, kernel c (x) 1; eventually positive",
             {"n": 200, "N": 3, "L": 1.0}, _build_ex9_2, _claims_ex9_2),
    Scenario("heat_neumann", "Neumann heat semigroup on (0,L); converges at rate pi^2/L^2",
             {"n": 200, "L": 1.0},
             lambda p: disc.heat_interval(int(p["n"]), p["L"], label="heat_neumann"),
             _claims_heat_neumann),
    Scenario("heat_dirichlet", "Dirichlet heat semigroup on (0,L); spectral bound -pi^2/L^2",
             {"n": 200, "L": 1.0},
             lambda p: disc.heat_interval(int(p["n"]), p["L"], dirichlet=True, label="heat_dirichlet"),
             _claims_heat_dirichlet),
]}

_COMMON = {"t_max": None, "points": evpos.DEFAULT_POINTS, "eps": evpos.DEFAULT_EPS}
_INT_KEYS = {"n", "N", "points"}
_STR_KEYS = {"jump"}


def list_scenarios(machine: bool = False) -> str:
    if machine:
        return json.dumps([{"name": s.name, "citation": s.citation,
                            "defaults": {**s.defaults, **_COMMON}} for s in SCENARIOS.values()],
                          indent=2)
    return "\n".join(f"{s.name:<15} {s.citation}" for s in SCENARIOS.values())


# --- configuration ----------------------------------------------------------

@dataclass
class ScenarioConfig:
    scenario: str
    overrides: dict = field(default_factory=dict)
    output_dir: Path = Path("out")

    def params(self) -> dict:
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {', '.join(SCENARIOS)}")
        base = {**SCENARIOS[self.scenario].defaults, **_COMMON}
        for key, raw in self.overrides.items():
            if key not in base:
                raise ConfigError(f"scenario {self.scenario} has no parameter {key!r}")
            base[key] = _coerce(key, raw)
        _validate(self.scenario, base)
        return base


def _coerce(key: str, raw):
    if raw is None or (isinstance(raw, str) and raw.lower() in ("", "none")):
        return None
    if key in _STR_KEYS:
        return str(raw)
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be numeric, got {raw!r}") from None
    if key in _INT_KEYS:
        if value != int(value):
            raise ConfigError(f"{key} must be an integer, got {raw!r}")
        return int(value)
    return value


def _validate(name: str, p: dict) -> None:
    n = _n_from_spacing(p) if name == "ex7_1" else p.get("n")
    if n is None or n < 2:
        raise ConfigError(f"n must be >= 2, got {n}")
    if n > MAX_N:
        raise ConfigError(f"n = {n} exceeds the limit {MAX_N}")
    if "N" in p and (p["N"] < 1 or p["N"] * n > MAX_SYSTEM):
        raise ConfigError(f"N * n = {p['N'] * n} must be in [1, {MAX_SYSTEM}]")
    for key in ("L", "h", "m", "t_max"):
        if p.get(key) is not None and not p[key] > 0:
            raise ConfigError(f"{key} must be positive, got {p[key]}")
    if p["eps"] is None or p["eps"] < 0:
        raise ConfigError(f"eps must be >= 0, got {p['eps']}")
    if p["points"] < 10:
        raise ConfigError("points must be >= 10")
    if p.get("jump") not in (None, "uniform", "middle"):
        raise ConfigError("jump must be 'uniform' or 'middle'")


def parse_assignments(lines) -> dict:
    """key=value pairs; blank lines and '#' comments are skipped."""
    out = {}
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"expected key=value, got {raw.strip()!r}")
        out[key.strip()] = value.strip()
    return out


def load_config_file(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    return parse_assignments(text.splitlines())


# --- pipeline ---------------------------------------------------------------

@dataclass
class Context:
    params: dict
    gen: engine.Generator | None = None
    spec: engine.Spectrum | None = None
    metzler: tuple[bool, float] | None = None
    irreducible: bool | None = None
    cert: evpos.PositivityCertificate | None = None
    hyp: evpos.PositivityHypotheses | None = None
    proj: engine.EquilibriumProjection | None = None
    profile: list = field(default_factory=list)
    fit: tuple[float, float] | None = None
    classification: engine.Asymptotics | None = None
    classification_unshifted: engine.Asymptotics | None = None


@dataclass
class ScenarioReport:
    scenario: str
    params: dict
    summary: dict
    verdicts: list
    files: dict
    context: Context = field(repr=False, default=None)

    def verdict(self, claim: str) -> dict:
        for v in self.verdicts:
            if v["claim"] == claim:
                return v
        raise KeyError(claim)


def _stage(name: str):
    class _Guard:
        def __enter__(self):
            log.debug("stage %s", name)

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, PipelineError):
                raise PipelineError(name, str(exc)) from exc
            return False
    return _Guard()


def analyze(scenario: str, params: dict) -> Context:
    sc = SCENARIOS[scenario]
    ctx = Context(params)
    with _stage("build"):
        ctx.gen = sc.build(params)
    g = ctx.gen
    with _stage("spectrum"):
        ctx.spec = engine.spectrum(g)
    spec = ctx.spec
    if not (spec.simple and math.isfinite(spec.gap)):
        raise PipelineError("spectrum", "dominant eigenvalue is not simple; no rescaled limit to analyse")
    with _stage("positivity"):
        ctx.metzler = engine.is_metzler(g)
        if ctx.metzler[0]:
            ctx.irreducible = engine.is_irreducible(g)
        times = evpos.default_times(spec.gap, int(params["points"]), params["t_max"])
        ctx.cert = evpos.minimal_positivity_time(g, times, float(params["eps"]))
        if g.symmetric and not ctx.metzler[0]:
            ctx.hyp = evpos.check_positivity_hypotheses(g)
    with _stage("equilibrium"):
        ctx.proj = engine.equilibrium_projection(g, spec)
    with _stage("convergence"):
        ctx.profile = engine.convergence_profile(g, ctx.proj, times)
        tail = [(t, d) for t, d in ctx.profile if t >= 1.0 / spec.gap]
        ctx.fit = engine.fit_exponential_rate(tail, floor=engine.FIT_FLOOR)
    with _stage("classification"):
        if ctx.metzler[0]:
            ctx.classification = engine.classify_asymptotics(g, shift=True)
            if spec.lambda0 <= engine.KERNEL_TOL:
                ctx.classification_unshifted = engine.classify_asymptotics(g, shift=False)
    return ctx


def _summary(scenario: str, ctx: Context) -> tuple[dict, list]:
    spec, cert = ctx.spec, ctx.cert
    verdicts = [
        _claim("positive (Metzler generator)", ctx.metzler[0], 1e-12, ctx.metzler[1]),
        _claim("dominant eigenvalue simple", spec.simple, 1e-8, spec.gap),
        _claim("eventually positive (sampled)", cert.verdict in ("positive", "eventually_positive"),
               cert.eps, cert.t1),
    ]
    if ctx.irreducible is not None:
        verdicts.insert(1, _claim("irreducible", ctx.irreducible, engine.IRREDUCIBILITY_THRESHOLD))
    verdicts += SCENARIOS[scenario].claims(ctx)
    summary = {
        "scenario": scenario,
        "params": ctx.params,
        "n": ctx.gen.n,
        "spectrum": {"lambda0": spec.lambda0, "gap": spec.gap, "simple": spec.simple},
        "positivity": {
            "metzler": ctx.metzler[0], "worst_off_diagonal": ctx.metzler[1],
            "irreducible": ctx.irreducible, "verdict": cert.verdict, "t1": cert.t1,
            "domination_constant": cert.domination_constant, "eps": cert.eps,
        },
        "convergence": {"M": ctx.fit[0], "delta": ctx.fit[1], "final_distance": ctx.profile[-1][1]},
        "classification": ctx.classification.case if ctx.classification else None,
        "classification_unshifted": (ctx.classification_unshifted.case
                                     if ctx.classification_unshifted else None),
        "verdicts": verdicts,
    }
    if ctx.hyp is not None:
        summary["self_adjoint_criterion"] = {"domination_ratio": ctx.hyp.domination_ratio,
                                             "eigenvector_bound_c": ctx.hyp.eigenvector_bound_c,
                                             "lambda0_simple": ctx.hyp.lambda0_simple,
                                             "holds": ctx.hyp.holds}
    return summary, verdicts


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def _flatten(d: dict, prefix: str = "") -> list[tuple[str, object]]:
    rows = []
    for key, value in d.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            rows += _flatten(value, name + ".")
        elif isinstance(value, list):
            for i, item in enumerate(value):
                rows += _flatten(item, f"{name}.{i}.") if isinstance(item, dict) else [(f"{name}.{i}", item)]
        else:
            rows.append((name, value))
    return rows


def _csv_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_, int, float, np.floating, np.integer)):
        return fmt(v)
    return str(v).replace(",", ";")


def write_report_files(out: Path, ctx: Context, summary: dict) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    files = {"profile": out / "profile.csv", "summary": out / "summary.json",
             "summary_csv": out / "summary.csv"}
    written = []
    try:
        lines = ["t,distance,min_entry"]
        for (t, d), (_, lo) in zip(ctx.profile, ctx.cert.min_entry_series):
            lines.append(f"{fmt(t)},{fmt(d)},{fmt(lo)}")
        files["profile"].write_bytes(("\n".join(lines) + "\n").encode("ascii"))
        written.append(files["profile"])

        rows = ["key,value"] + [f"{k},{_csv_value(v)}" for k, v in _flatten(summary)]
        files["summary_csv"].write_bytes(("\n".join(rows) + "\n").encode("utf-8"))
        written.append(files["summary_csv"])

        payload = dict(summary)
        payload["files"] = {k: p.name for k, p in files.items()}
        payload["generated_at"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        files["summary"].write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n",
                                    encoding="utf-8")
        written.append(files["summary"])
    except Exception:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    return {k: str(p) for k, p in files.items()}


def run_scenario(cfg: ScenarioConfig, write: bool = True) -> ScenarioReport:
    params = cfg.params()
    out = Path(cfg.output_dir)
    for stale in ("profile.csv", "summary.json", "summary.csv"):
        (out / stale).unlink(missing_ok=True)
    ctx = analyze(cfg.scenario, params)
    summary, verdicts = _summary(cfg.scenario, ctx)
    files = {}
    if write:
        with _stage("report"):
            files = write_report_files(out, ctx, summary)
    return ScenarioReport(cfg.scenario, params, summary, verdicts, files, ctx)


# --- sweeps -----------------------------------------------------------------

@dataclass
class SweepResult:
    parameter: str
    rows: list  # dicts: value, lambda0, gap, delta_fit, t1, status
    trend: str | None
    reports: list
    path: str | None = None


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_sweep(cfg: ScenarioConfig, parameter: str, values, write: bool = True) -> SweepResult:
    if parameter not in ("L", "n"):
        raise ConfigError(f"sweep parameter must be L or n, got {parameter!r}")
    values = list(values)
    if len(values) < 2:
        raise ConfigError("a sweep needs at least two values")
    base = Path(cfg.output_dir)
    configs = [ScenarioConfig(cfg.scenario, {**cfg.overrides, parameter: v}, base / f"{parameter}={v}")
               for v in values]
    for c in configs:
        c.params()  # configuration errors abort the whole sweep

    def one(c: ScenarioConfig):
        try:
            return run_scenario(c, write=write)
        except (PipelineError, ConfigError) as exc:
            log.warning("sweep row %s failed: %s", c.overrides[parameter], exc)
            return exc

    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        results = list(pool.map(one, configs))

    rows, reports = [], []
    for v, res in zip(values, results):
        if isinstance(res, Exception):
            rows.append({"value": float(v), "lambda0": None, "gap": None, "delta_fit": None,
                         "t1": None, "status": f"failed: {res}"})
            continue
        reports.append(res)
        s = res.summary
        rows.append({"value": float(v), "lambda0": s["spectrum"]["lambda0"], "gap": s["spectrum"]["gap"],
                     "delta_fit": s["convergence"]["delta"], "t1": s["positivity"]["t1"], "status": "ok"})
    trend = forms.gap_trend([r["gap"] for r in rows if r["status"] == "ok"])
    path = None
    if write:
        base.mkdir(parents=True, exist_ok=True)
        lines = ["value,lambda0,gap,delta_fit,t1,status"]
        for r in rows:
            lines.append(",".join([fmt(r["value"]), fmt(r["lambda0"]), fmt(r["gap"]), fmt(r["delta_fit"]),
                                   fmt(r["t1"]), r["status"].replace(",", ";")]))
        path = base / "sweep.csv"
        path.write_bytes(("\n".join(lines) + "\n").encode("utf-8"))
        path = str(path)
    return SweepResult(parameter, rows, trend, reports, path)
