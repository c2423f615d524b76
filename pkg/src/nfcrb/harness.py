"""Config files, sweeps, CSV/plot-data emission and the validation suites."""

from __future__ import annotations

import csv
import io
import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .conic import SolverTolerances
from .geometry import GeometryError, SystemConfig, build_channels, db_to_linear

PRESET_DIR = Path(__file__).with_name("presets")
SPEED_OF_LIGHT = 3.0e8   # rounded, so 10 GHz gives a 3 cm wavelength

CSV_COLUMNS = ("sweep_var", "value", "rcrb_range_m", "rcrb_angle_rad", "trace_crb",
               "min_sinr_margin_db", "outer_iters", "inner_iters", "final_violation",
               "status", "wall_ms", "seed")


class ConfigError(ValueError):
    def __init__(self, message, line=None, key=None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.line = line
        self.key = key


# --- value parsing -------------------------------------------------------------

_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_QUANTITY = re.compile(rf"^\s*({_NUMBER})(?:\s*/\s*({_NUMBER}))?\s*([A-Za-z]*)\s*$")


def _quantity(text):
    m = _QUANTITY.match(text)
    if not m:
        raise ValueError(f"cannot read {text!r} as a number with an optional unit")
    value = float(m.group(1))
    if m.group(2):
        value /= float(m.group(2))
    return value, m.group(3).lower()


def _length(text, wavelength):
    value, unit = _quantity(text)
    if unit in ("", "m"):
        return value
    if unit in ("lambda", "wl"):
        if wavelength is None:
            raise ValueError("wavelength-relative length needs the carrier first")
        return value * wavelength
    if unit == "cm":
        return value / 100
    if unit == "mm":
        return value / 1000
    raise ValueError(f"unknown length unit {unit!r}")


def _angle(text):
    value, unit = _quantity(text)
    if unit in ("deg", "degree", "degrees"):
        return math.radians(value)
    if unit in ("", "rad"):
        return value
    raise ValueError(f"unknown angle unit {unit!r}")


def _db(text):
    value, unit = _quantity(text)
    if unit not in ("db", "dbw", ""):
        raise ValueError(f"expected a dB value, got unit {unit!r}")
    return value


def _frequency(text):
    value, unit = _quantity(text)
    factor = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9, "": 1.0}.get(unit)
    if factor is None:
        raise ValueError(f"unknown frequency unit {unit!r}")
    return value * factor


def _int(text):
    value, unit = _quantity(text)
    if unit or value != int(value):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _float(text):
    if text.strip().lower() == "auto":
        return None
    value, unit = _quantity(text)
    if unit:
        raise ValueError(f"unexpected unit {unit!r}")
    return value


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _pair(parse):
    def inner(text):
        parts = [p for p in text.split(",") if p.strip()]
        if len(parts) != 2:
            raise ValueError("expected two comma-separated values")
        return tuple(parse(p) for p in parts)
    return inner


# key -> (parser, default).  A default of ... marks a required key.
_SCHEMA = {
    "num_bs_antennas": (_int, ...),
    "num_stars_elements": (_int, ...),
    "num_fa_positions": (_int, ...),
    "carrier_frequency": (_frequency, None),
    "wavelength": ("length", None),
    "stars_spacing": ("length", ...),
    "bs_spacing": ("length", ...),
    "fa_spacing": ("length", ...),
    "bs_range": ("length", ...),
    "bs_angle": (_angle, ...),
    "target_range": ("length", ...),
    "target_angle": (_angle, ...),
    "num_users": (_int, ...),
    "users": (str, None),
    "user_range_window": ("length-pair", None),
    "user_angle_window": (_pair(_angle), None),
    "pathloss_ref": (_db, ...),
    "noise_user": (_db, ...),
    "noise_sensing": (_db, ...),
    "coherence_block": (_int, ...),
    "power_budget": (_db, ...),
    "sinr_threshold": (_db, ...),
    "seed": (_int, 0),
    "random_gain_phase": (_bool, False),
    # optimizer and solver
    "rho0": (_float, None),
    "penalty_shrink": (_float, 0.6),
    "outer_tol": (_float, 1e-5),
    "max_outer": (_int, 50),
    "inner_tol": (_float, 1e-4),
    "max_inner": (_int, 30),
    "randomizations": (_int, 100),
    "solver_backend": (str, "auto"),
    "eq_feas": (_float, 1e-8),
    "psd_feas": (_float, 1e-8),
    "gap_tol": (_float, 1e-8),
    # harness
    "workers": (_int, 1),
    "mc_trials": (_int, 500),
    "search_samples": (_int, 100_000),
}


@dataclass(frozen=True)
class RunConfig:
    """A parsed config file: the physical system plus optimizer and harness settings."""

    system: SystemConfig
    sinr_threshold_db: float
    power_budget_db: float
    settings: dict = field(default_factory=dict)
    source: str = ""

    def with_value(self, variable: str, value: float, seed: int | None = None) -> RunConfig:
        """Copy with one sweep variable changed (dB) and optionally a new seed."""
        sysc = self.system
        sinr_db, power_db = self.sinr_threshold_db, self.power_budget_db
        if variable == "sinr_threshold_db":
            sinr_db = value
            sysc = replace(sysc, sinr_thresholds=tuple(float(db_to_linear(value)) for _ in sysc.user_placements))
        elif variable == "power_budget_db":
            power_db = value
            sysc = replace(sysc, power_budget=float(db_to_linear(value)))
        elif variable != "none":
            raise ValueError(f"unknown sweep variable {variable!r}")
        if seed is not None and seed != sysc.rng_seed:
            sysc = _place_users(sysc, seed, self.settings)
        return replace(self, system=sysc, sinr_threshold_db=sinr_db, power_budget_db=power_db)

    def pdd_settings(self):
        from .optimizer import PddSettings

        s = self.settings
        tol = SolverTolerances(eq_feas=s["eq_feas"], psd_feas=s["psd_feas"], gap=s["gap_tol"],
                               backend=s["solver_backend"])
        return PddSettings(rho0=s["rho0"], shrink=s["penalty_shrink"], outer_tol=s["outer_tol"],
                           max_outer=s["max_outer"], inner_tol=s["inner_tol"], max_inner=s["max_inner"],
                           randomizations=s["randomizations"], solver=tol)


def _draw_users(count, seed, range_window, angle_window):
    rng = np.random.default_rng([seed, 0x5EED])
    r = rng.uniform(*range_window, size=count)
    t = rng.uniform(*angle_window, size=count)
    return tuple((float(a), float(b)) for a, b in zip(r, t))


def _place_users(sysc: SystemConfig, seed: int, settings: dict) -> SystemConfig:
    placement = settings.get("_users_window")
    users = sysc.user_placements
    if placement is not None:
        users = _draw_users(len(users), seed, *placement)
    return replace(sysc, user_placements=users, rng_seed=seed)


_USER_FIELD = re.compile(rf"{_NUMBER}(?:\s*/\s*{_NUMBER})?\s*[A-Za-z]*")


def _parse_users(text, wavelength):
    out = []
    for item in text.split(";"):
        item = item.strip()
        if not item:
            continue
        parts = _USER_FIELD.findall(item)
        if len(parts) != 2 or _USER_FIELD.sub("", item).strip():
            raise ValueError("each user needs '<range> <angle>' (e.g. '25m 60deg')")
        out.append((_length(parts[0], wavelength), _angle(parts[1])))
    return tuple(out)


def parse_config_text(text: str, source: str = "<string>") -> RunConfig:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", lineno)
        key, value = (p.strip() for p in body.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}", lineno, key)
        if key in raw:
            raise ConfigError(f"duplicate key {key!r}", lineno, key)
        raw[key] = (value, lineno)

    for key, (_, default) in _SCHEMA.items():
        if default is ... and key not in raw:
            raise ConfigError(f"missing required field {key!r}", key=key)

    wavelength = None
    if "carrier_frequency" in raw and "wavelength" in raw:
        raise ConfigError("give either carrier_frequency or wavelength, not both", raw["wavelength"][1])
    if "carrier_frequency" in raw:
        text_, line = raw["carrier_frequency"]
        try:
            wavelength = SPEED_OF_LIGHT / _frequency(text_)
        except ValueError as exc:
            raise ConfigError(str(exc), line, "carrier_frequency") from None
    elif "wavelength" in raw:
        text_, line = raw["wavelength"]
        try:
            wavelength = _length(text_, None)
        except ValueError as exc:
            raise ConfigError(str(exc), line, "wavelength") from None
    else:
        raise ConfigError("missing required field 'carrier_frequency' (or 'wavelength')", key="carrier_frequency")

    vals = {}
    for key, (parser, default) in _SCHEMA.items():
        if key not in raw:
            vals[key] = None if default is ... else default
            continue
        text_, line = raw[key]
        try:
            if parser == "length":
                vals[key] = _length(text_, wavelength)
            elif parser == "length-pair":
                vals[key] = _pair(lambda t: _length(t, wavelength))(text_)
            elif key == "users":
                vals[key] = _parse_users(text_, wavelength)
            else:
                vals[key] = parser(text_)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", line, key) from None

    K = vals["num_users"]
    window = None
    if vals["users"] is not None:
        users = vals["users"]
        if len(users) != K:
            raise ConfigError(f"num_users = {K} but {len(users)} users listed", raw["users"][1], "users")
    elif K == 0:
        users = ()
    else:
        if vals["user_range_window"] is None or vals["user_angle_window"] is None:
            raise ConfigError("random user placement needs user_range_window and user_angle_window",
                              key="user_range_window")
        window = (vals["user_range_window"], vals["user_angle_window"])
        users = _draw_users(K, vals["seed"], *window)

    try:
        system = SystemConfig(
            num_bs_antennas=vals["num_bs_antennas"],
            num_stars_elements=vals["num_stars_elements"],
            num_fa_positions=vals["num_fa_positions"],
            wavelength=wavelength,
            stars_spacing=vals["stars_spacing"],
            bs_spacing=vals["bs_spacing"],
            fa_spacing=vals["fa_spacing"],
            bs_range=vals["bs_range"],
            bs_angle=vals["bs_angle"],
            target_range=vals["target_range"],
            target_angle=vals["target_angle"],
            user_placements=users,
            pathloss_ref_db=vals["pathloss_ref"],
            noise_user_db=vals["noise_user"],
            noise_sensing_db=vals["noise_sensing"],
            coherence_block=vals["coherence_block"],
            power_budget=float(db_to_linear(vals["power_budget"])),
            sinr_thresholds=tuple(float(db_to_linear(vals["sinr_threshold"])) for _ in users),
            rng_seed=vals["seed"],
            random_gain_phase=vals["random_gain_phase"],
        )
    except (ValueError, GeometryError) as exc:
        key = next((k for k in raw if k in str(exc)), None)
        raise ConfigError(str(exc), raw[key][1] if key else None, key) from None

    settings = {k: vals[k] for k in ("rho0", "penalty_shrink", "outer_tol", "max_outer", "inner_tol",
                                     "max_inner", "randomizations", "solver_backend", "eq_feas",
                                     "psd_feas", "gap_tol", "workers", "mc_trials", "search_samples")}
    settings["_users_window"] = window
    return RunConfig(system, vals["sinr_threshold"], vals["power_budget"], settings, source)


def parse_config(path) -> RunConfig:
    """Read a ``key = value`` config file; ``preset:<name>`` loads a bundled preset."""
    path = str(path)
    if path.startswith("preset:"):
        p = PRESET_DIR / f"{path.split(':', 1)[1]}.cfg"
    else:
        p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
    return parse_config_text(text, str(p))


# --- sweeps ------------------------------------------------------------------

SWEEP_VARIABLES = {"sinr": "sinr_threshold_db", "power": "power_budget_db"}


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple
    fpa: bool = False
    repeats: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.variable not in ("sinr_threshold_db", "power_budget_db", "none"):
            raise ValueError(f"unknown sweep variable {self.variable!r}")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("sweep values must be strictly increasing")
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")


@dataclass(frozen=True)
class RunRecord:
    sweep_var: str
    value: float | None
    rcrb_range: float
    rcrb_angle: float
    trace_crb: float
    sinr_margins_db: tuple
    outer_iters: int
    inner_iters: int
    final_violation: float
    status: str
    wall_ms: float
    seed: int
    position: int | None = None
    message: str = ""

    @property
    def min_sinr_margin_db(self):
        return min(self.sinr_margins_db) if self.sinr_margins_db else None


def _margins_db(sinr, thresholds):
    out = []
    for s, g in zip(sinr, thresholds):
        if g > 0:
            out.append(10.0 * math.log10(s / g) if s > 0 else -math.inf)
        else:
            out.append(math.inf)
    return tuple(out)


def run_point(rc: RunConfig, variable: str, value, seed: int, fpa: bool = False) -> RunRecord:
    """One optimizer run; failures are folded into the record."""
    from .optimizer import SubproblemFailure, pdd_run

    t0 = time.perf_counter()
    cfg = rc.with_value(variable, value, seed) if variable != "none" else rc.with_value("none", 0, seed)
    sysc = cfg.system
    if fpa:
        sysc = replace(sysc, num_fa_positions=1)
    nan = float("nan")
    try:
        channels = build_channels(sysc)
        report = pdd_run(sysc, channels, settings=cfg.pdd_settings())
    except (SubproblemFailure, np.linalg.LinAlgError, ValueError) as exc:
        ms = (time.perf_counter() - t0) * 1e3
        return RunRecord(variable, value, nan, nan, nan, (), 0, 0, nan, "stalled", ms, seed, None, str(exc))
    ms = (time.perf_counter() - t0) * 1e3
    if report.crb is None:
        return RunRecord(variable, value, nan, nan, nan, (), report.outer_iters, report.inner_iters,
                         report.final_violation, report.status, ms, seed, None, report.message)
    return RunRecord(variable, value, report.crb.rcrb_range, report.crb.rcrb_angle, report.crb.trace,
                     _margins_db(report.sinr, sysc.sinr_thresholds), report.outer_iters, report.inner_iters,
                     report.final_violation, report.status, ms, seed, report.apv.active, report.message)


def _run_job(args):
    return run_point(*args)


def run_sweep(rc: RunConfig, spec: SweepSpec, workers: int | None = None) -> list[RunRecord]:
    """Run every (value, repeat) pair; points run in worker processes when ``workers > 1``."""
    jobs = [(rc, spec.variable, v, spec.seed + r, spec.fpa) for v in spec.values for r in range(spec.repeats)]
    workers = workers if workers is not None else rc.settings.get("workers", 1)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_job, jobs))
    else:
        records = [_run_job(j) for j in jobs]
    return sorted(records, key=lambda r: (r.value if r.value is not None else -math.inf, r.seed))


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.10g}"


def records_to_csv(records, timing: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    names = {v: k for k, v in SWEEP_VARIABLES.items()}
    for r in records:
        w.writerow([names.get(r.sweep_var, r.sweep_var), _fmt(r.value), _fmt(r.rcrb_range), _fmt(r.rcrb_angle),
                    _fmt(r.trace_crb), _fmt(r.min_sinr_margin_db), r.outer_iters, r.inner_iters,
                    _fmt(r.final_violation), r.status, _fmt(round(r.wall_ms, 3)) if timing else "", r.seed])
    return buf.getvalue()


def records_to_plot_data(records) -> str:
    """Long-format ``x,series,y`` rows: mean RCRBs over converged repeats per sweep value."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("x", "series", "y"))
    values = sorted({r.value for r in records if r.value is not None})
    for series, attr in (("rcrb_range_m", "rcrb_range"), ("rcrb_angle_rad", "rcrb_angle")):
        for v in values:
            ys = [getattr(r, attr) for r in records if r.value == v and r.status == "converged"]
            if ys:
                w.writerow((_fmt(v), series, _fmt(float(np.mean(ys)))))
    return buf.getvalue()


def write_outputs(records, out: Path, timing: bool = False) -> Path:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(records_to_csv(records, timing).encode("utf-8"))
    plot = out.with_suffix(".plot.csv")
    plot.write_bytes(records_to_plot_data(records).encode("utf-8"))
    return plot


def all_converged(records) -> bool:
    return all(r.status == "converged" for r in records)


# --- validation suites -------------------------------------------------------

@dataclass(frozen=True)
class SuiteResult:
    name: str
    status: str          # pass | fail | inconclusive
    detail: str


def _small_instances(sysc: SystemConfig, count: int, seed: int, max_n=9, max_m=5):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        N = int(rng.choice(np.arange(3, max_n + 1, 2)))
        M = int(rng.choice(np.arange(1, max_m + 1, 2)))
        Q = int(rng.choice([1, 3]))
        r0 = float(rng.uniform(8.0, 40.0))
        yield replace(sysc, num_stars_elements=N, num_bs_antennas=M, num_fa_positions=Q,
                      target_range=r0, target_angle=float(rng.uniform(0.3, 2.8)),
                      bs_angle=float(rng.uniform(0.3, 2.8)), rng_seed=int(rng.integers(2**31)),
                      random_gain_phase=True)


def _random_psd(rng, M, P):
    A = rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))
    R = A @ A.conj().T
    return R * (P / np.trace(R).real)


def _random_stars(rng, N):
    from .design import StarsProfile

    return StarsProfile.from_parts(rng.random(N), 2 * np.pi * rng.random(N), 2 * np.pi * rng.random(N))


def suite_derivatives(sysc: SystemConfig, count=100, seed=0) -> SuiteResult:
    from .oracle import derivative_errors

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        r = float(rng.uniform(sysc.half_aperture + 2.0, 60.0))
        t = float(rng.uniform(0.2, math.pi - 0.2))
        worst = max(worst, max(derivative_errors(r, t, sysc).values()))
    return SuiteResult("derivatives", "pass" if worst < 1e-5 else "fail", f"max relative error {worst:.2e}")


def suite_fim(sysc: SystemConfig, count=20, seed=1) -> SuiteResult:
    from .fisher import fim_blocks
    from .oracle import fim_numeric

    rng = np.random.default_rng(seed)
    worst, worst_psd = 0.0, 0.0
    for inst in _small_instances(sysc, count, seed):
        ch = build_channels(inst)
        stars = _random_stars(rng, inst.num_stars_elements)
        Rx = _random_psd(rng, inst.num_bs_antennas, inst.power_budget)
        q = int(rng.integers(-(inst.num_fa_positions // 2), inst.num_fa_positions // 2 + 1))
        J = fim_blocks(ch, stars, Rx, q, inst).full()
        Jn = fim_numeric(ch, stars, Rx, q, inst)
        worst = max(worst, np.linalg.norm(J - Jn) / np.linalg.norm(Jn))
        worst_psd = max(worst_psd, -np.linalg.eigvalsh(J).min() / np.linalg.norm(J))
    ok = worst < 1e-4 and worst_psd <= 1e-8
    return SuiteResult("fim-agreement", "pass" if ok else "fail",
                       f"max relative Frobenius error {worst:.2e}, worst negative eigenvalue ratio {worst_psd:.1e}")


def mc_instance(sysc: SystemConfig):
    """Fixed design used by the Monte-Carlo check: matched illumination at the centre position."""
    from .optimizer import initial_state

    ch = build_channels(sysc)
    st = initial_state(ch, sysc)
    return ch, st.stars, st.design.Rx


def suite_crb_mc(sysc: SystemConfig, trials=500, seed=2) -> SuiteResult:
    from .oracle import MonteCarloSpec, monte_carlo_mse

    ch, stars, Rx = mc_instance(sysc)
    spec, noise = mc_spec_for(ch, stars, Rx, sysc, trials, seed)
    res = monte_carlo_mse(ch, stars, Rx, 0, sysc, spec)
    if res.inconclusive:
        return SuiteResult("crb-vs-mc", "inconclusive", "no Monte-Carlo trials requested")
    lower = np.all(res.mse >= res.crb - 3 * res.stderr)
    upper = np.all(res.mse <= 10 * res.crb)
    ratio = res.mse / res.crb
    return SuiteResult("crb-vs-mc", "pass" if lower and upper else "fail",
                       f"MSE/CRB range {ratio[0]:.3f}, angle {ratio[1]:.3f} over {res.trials} trials")


def mc_spec_for(ch, stars, Rx, sysc, trials, seed, rcrb_range_target=2e-3, half_width=8.0, steps=81):
    """Grid centred on the truth, ``half_width`` RCRBs wide, at a noise giving the target range RCRB."""
    from .fisher import crb_from_fim, fim_blocks
    from .oracle import MonteCarloSpec

    base = crb_from_fim(fim_blocks(ch, stars, Rx, 0, sysc))
    # the CRB scales linearly with the noise power
    noise = sysc.noise_sensing * (rcrb_range_target / base.rcrb_range) ** 2
    scale = math.sqrt(noise / sysc.noise_sensing)
    sr, sa = base.rcrb_range * scale, base.rcrb_angle * scale
    r, t = ch.fa_polar[ch.center]
    spec = MonteCarloSpec(trials, noise, (r - half_width * sr, r + half_width * sr, steps),
                          (t - half_width * sa, t + half_width * sa, steps), seed)
    return spec, noise


def suite_solver_search(sysc: SystemConfig, samples=100_000, seed=3, tol=None) -> SuiteResult:
    from .oracle import random_feasible_search, sub1_sampler, sub2_sampler
    from .optimizer import build_sub1, initial_state, solve_sub1, solve_sub2

    ch = build_channels(sysc)
    st = initial_state(ch, sysc)
    r1 = solve_sub1(st, ch, sysc, tol)
    found1 = random_feasible_search(sub1_sampler(st, ch, sysc), samples, seed)
    st2 = replace(st, U=r1.U, Lam=r1.Lam, design=r1.design)
    r2 = solve_sub2(st2, ch, sysc, tol)
    found2 = random_feasible_search(sub2_sampler(st2, ch, sysc), samples, seed + 1)
    parts, status = [], "pass"
    for name, value, found in (("transmit", r1.solver_objective, found1), ("STARS", r2.bound, found2)):
        if found.inconclusive:
            parts.append(f"{name}: no feasible sample")
            status = "inconclusive" if status == "pass" else status
            continue
        ok = value <= found.best * (1 + 1e-6)
        status = status if ok else "fail"
        parts.append(f"{name}: solver {value:.6e} vs best sample {found.best:.6e} ({found.accepted} accepted)")
    return SuiteResult("solver-vs-search", status, "; ".join(parts))


def suite_monotone(sysc: SystemConfig, settings, max_outer=3) -> SuiteResult:
    from .optimizer import pdd_run

    ch = build_channels(sysc)
    rep = pdd_run(sysc, ch, settings=replace(settings, max_outer=max_outer))
    if rep.status == "infeasible":
        return SuiteResult("monotone", "inconclusive", rep.message)
    worst = 0.0
    for trace in rep.objective_trace:
        for a, b in zip(trace, trace[1:]):
            worst = max(worst, b - a)
    return SuiteResult("monotone", "pass" if worst <= 1e-9 else "fail",
                       f"largest inner-loop increase {worst:.2e} over {rep.inner_iters} passes")


def validate(rc: RunConfig, quick: bool = False) -> list[SuiteResult]:
    """Run every property suite on the configured scenario."""
    sysc = rc.system
    trials = rc.settings.get("mc_trials", 500)
    samples = rc.settings.get("search_samples", 100_000)
    if quick:
        trials, samples = min(trials, 100), min(samples, 10_000)
    out = [suite_derivatives(sysc), suite_fim(sysc)]
    runners = [lambda: suite_crb_mc(sysc, trials),
               lambda: suite_solver_search(sysc, samples, tol=rc.pdd_settings().solver),
               lambda: suite_monotone(sysc, rc.pdd_settings())]
    for run, name in zip(runners, ("crb-vs-mc", "solver-vs-search", "monotone")):
        try:
            out.append(run())
        except Exception as exc:   # a crashing suite is a failed suite, not a crashed report
            out.append(SuiteResult(name, "fail", f"{type(exc).__name__}: {exc}"))
    return out
