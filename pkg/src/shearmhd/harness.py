"""Run configuration, sweeps, threshold search and machine-readable outputs.

All commands consume a single TOML config file (CLI flags override fields) and
emit CSV/JSON artifacts with fixed schemas.  Exit codes follow one convention:
0 success, 2 configuration error, 3 numeric failure, 4 budget exhausted.

Float cells are serialized with repr() so that identical configs and seeds
reproduce byte-identical files.
"""

import csv
import json
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import linear, sim
from .linear import ModeIndex, PhysParams
from .spectral import GridSpec, default_Ly
from .weights import WeightParams, check_lemma_bounds

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_BUDGET = 4

MODE_SWEEP_HEADER = [
    "nu", "kappa", "alpha", "k", "xi", "p1_0", "p2_0",
    "growth_factor", "t_peak", "envelope_ratio", "regime_flag",
]
SIM_DIAG_HEADER = [
    "t", "E_main", "HN_neq", "HN_eq", "nonlinear_flux",
    "ED_v_cum", "ED_b_cum", "growth_L",
]
TRACE_HEADER = ["t", "p1", "p2", "abs_p", "nu", "kappa", "alpha", "k", "xi", "t_peak"]


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


class BudgetExhausted(RuntimeError):
    """Trial budget spent before the bisection bracket closed."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    """Flat view of one run's parameters; sections default sensibly when absent."""

    nu: float = 1e-2
    kappa: float = 1e-2
    alpha: float = 2.0
    # single-mode solve
    k: int = 1
    xi: float = 0.0
    p1_0: float = 1.0
    p2_0: float = 0.0
    mode_t_end: float = 0.0          # 0 -> horizon rule from the mode parameters
    tol: float = 1e-8
    # linear sweep
    sweep_nus: tuple = ()
    sweep_kappas: tuple = ()
    sweep_ks: tuple = (1,)
    sweep_xis: tuple = (0.0,)
    bootstrap: int = 200
    # nonlinear simulation
    nx: int = 32
    ny: int = 32
    Ly: float = 0.0                  # 0 -> default_Ly(nu)
    N: int = 5
    t_end: float = 50.0
    eps: float = 1e-3
    eps_tilde: float = 0.0
    seed: int = 0
    sample_dt: float = 0.5
    dt_max: float = 0.05
    linear_only: bool = False
    kband: int = 2
    xiband: int = 2
    checkpoint: str = ""
    resume: str = ""
    # threshold search
    eps_lo: float = 1e-6
    eps_hi: float = 1e-1
    budget: int = 40
    rel_width: float = 2.0 ** -8
    # weight checks
    n_samples: int = 100_000
    # output
    out_dir: str = "."

    def phys(self) -> PhysParams:
        return PhysParams(nu=self.nu, kappa=self.kappa, alpha=self.alpha)

    def weight_params(self) -> WeightParams:
        return WeightParams(nu=self.nu, kappa=self.kappa, alpha=self.alpha, N=self.N)

    def grid(self) -> GridSpec:
        Ly = self.Ly if self.Ly > 0 else default_Ly(self.nu)
        return GridSpec(nx=self.nx, ny=self.ny, Ly=Ly)

    def hypothesis_report(self) -> dict:
        """Regime hypotheses, evaluated and reported (never silently enforced)."""
        bound = (1.0 - 0.5 / self.alpha) ** 1.2 / 40.0 if self.alpha > 0.5 else 0.0
        return {
            "alpha_gt_half": self.alpha > 0.5,
            "N_ge_5": self.N >= 5,
            "kappa_le_nu": self.kappa <= self.nu,
            "nu_small_enough": self.nu <= bound,
            "eps_le_eps_tilde": self.eps_tilde == 0.0 or self.eps <= self.eps_tilde,
            "eps_tilde_bounded": (
                self.eps_tilde == 0.0
                or self.eps_tilde <= self.nu ** (-1.0 / 12.0) * self.eps
            ),
        }


_SECTION_FIELDS = {
    "params": {"nu": "nu", "kappa": "kappa", "alpha": "alpha"},
    "mode": {
        "k": "k", "xi": "xi", "p1_0": "p1_0", "p2_0": "p2_0",
        "t_end": "mode_t_end", "tol": "tol",
    },
    "sweep": {
        "nus": "sweep_nus", "kappas": "sweep_kappas", "ks": "sweep_ks",
        "xis": "sweep_xis", "bootstrap": "bootstrap",
    },
    "sim": {
        "nx": "nx", "ny": "ny", "Ly": "Ly", "N": "N", "t_end": "t_end",
        "eps": "eps", "eps_tilde": "eps_tilde", "seed": "seed",
        "sample_dt": "sample_dt", "dt_max": "dt_max",
        "linear_only": "linear_only", "kband": "kband", "xiband": "xiband",
        "checkpoint": "checkpoint", "resume": "resume",
    },
    "threshold": {
        "eps_lo": "eps_lo", "eps_hi": "eps_hi", "budget": "budget",
        "rel_width": "rel_width",
    },
    "weights": {"n_samples": "n_samples", "seed": "seed"},
    "output": {"dir": "out_dir"},
}


def load_config(path: Optional[str], overrides: Optional[dict] = None) -> RunConfig:
    """Read a TOML config; apply flat attribute overrides (CLI flags) on top."""
    cfg = RunConfig()
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config parse error in {path}: {exc}")
        for section, mapping in _SECTION_FIELDS.items():
            for key, value in data.get(section, {}).items():
                if key not in mapping:
                    raise ConfigError(f"unknown key [{section}] {key}")
                attr = mapping[key]
                value = tuple(value) if isinstance(value, list) else value
                setattr(cfg, attr, value)
        unknown = set(data) - set(_SECTION_FIELDS)
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    for attr, value in (overrides or {}).items():
        if value is not None:
            setattr(cfg, attr, value)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    if cfg.nu <= 0 or cfg.kappa <= 0:
        raise ConfigError("nu and kappa must be positive")
    if cfg.alpha <= 0.5:
        raise ConfigError("alpha must exceed 1/2")
    if cfg.k == 0 or any(k == 0 for k in cfg.sweep_ks):
        raise ConfigError("k != 0 required; the x-average has no mode dynamics")
    if cfg.eps < 0 or cfg.eps_tilde < 0:
        raise ConfigError("amplitudes must be nonnegative")
    if cfg.t_end <= 0 or cfg.sample_dt <= 0:
        raise ConfigError("t_end and sample_dt must be positive")
    if cfg.budget < 3:
        raise ConfigError("threshold budget must allow at least 3 trials")


# ---------------------------------------------------------------------------
# serialization helpers
# ---------------------------------------------------------------------------

def _cell(value) -> str:
    if isinstance(value, bool):
        return "True" if value else "False"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: str, header: Sequence[str], rows: Sequence[dict]):
    """Fixed-order CSV with repr-serialized floats (byte-stable given inputs)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(row[col]) for col in header])


def _write_json(path: str, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_mode_solve(cfg: RunConfig, out_csv: str, trace_csv: Optional[str] = None) -> int:
    """Solve one linear mode; write a single sweep row and optionally the trace."""
    mode = ModeIndex(k=cfg.k, xi=cfg.xi)
    params = cfg.phys()
    t_end = cfg.mode_t_end if cfg.mode_t_end > 0 else linear.default_t_end(mode, params)
    result = linear.solve_mode(
        mode, params, (cfg.p1_0, cfg.p2_0), t_end, tol=cfg.tol,
        keep_trace=trace_csv is not None,
    )
    row = {
        "nu": cfg.nu, "kappa": cfg.kappa, "alpha": cfg.alpha,
        "k": cfg.k, "xi": cfg.xi, "p1_0": cfg.p1_0, "p2_0": cfg.p2_0,
        "growth_factor": result.growth_factor, "t_peak": result.t_peak,
        "envelope_ratio": result.envelope_ratio,
        "regime_flag": params.regime_kappa_le_nu3,
    }
    write_csv(out_csv, MODE_SWEEP_HEADER, [row])
    _write_json(out_csv + ".hypotheses.json", cfg.hypothesis_report())
    if trace_csv is not None:
        trows = [
            {
                "t": float(t), "p1": float(p1), "p2": float(p2),
                "abs_p": float(math.hypot(p1, p2)),
                "nu": cfg.nu, "kappa": cfg.kappa, "alpha": cfg.alpha,
                "k": cfg.k, "xi": cfg.xi, "t_peak": result.t_peak,
            }
            for t, p1, p2 in zip(result.trace_t, result.trace_p[0], result.trace_p[1])
        ]
        write_csv(trace_csv, TRACE_HEADER, trows)
    return EXIT_OK


def _bootstrap_slope(rows: list, rng: np.random.Generator, n_boot: int):
    """Slope of log(max growth over modes) vs log(kappa), resampling modes."""
    kappas = sorted({row["kappa"] for row in rows})
    by_kappa = {
        kap: [r["growth_factor"] for r in rows
              if r["kappa"] == kap and r["error"] == "" and np.isfinite(r["growth_factor"])]
        for kap in kappas
    }
    if any(not v for v in by_kappa.values()) or len(kappas) < 2:
        return None, None, None
    point = linear.fit_loglog_slope(kappas, [max(by_kappa[k]) for k in kappas])
    n_modes = min(len(v) for v in by_kappa.values())
    samples = []
    for _ in range(n_boot):
        idx = rng.integers(0, n_modes, size=n_modes)
        ys = [max(np.asarray(by_kappa[k][:n_modes])[idx]) for k in kappas]
        samples.append(linear.fit_loglog_slope(kappas, ys))
    lo, hi = np.percentile(samples, [2.5, 97.5])
    return point, float(lo), float(hi)


def cmd_linear_sweep(cfg: RunConfig, out_csv: str) -> int:
    """Sweep modes over the (nu, kappa) grid; fit the growth-vs-kappa exponent."""
    nus = cfg.sweep_nus or (cfg.nu,)
    kappas = cfg.sweep_kappas or (cfg.kappa,)
    params_grid = [
        PhysParams(nu=float(n), kappa=float(kap), alpha=cfg.alpha)
        for n in nus for kap in kappas
    ]
    modes = [ModeIndex(k=int(k), xi=float(x)) for k in cfg.sweep_ks for x in cfg.sweep_xis]
    rows = linear.sweep_growth(
        params_grid, modes, p_in=(cfg.p1_0, cfg.p2_0), tol=cfg.tol
    )
    write_csv(out_csv, MODE_SWEEP_HEADER, rows)
    rng = np.random.default_rng(cfg.seed)
    slope, lo, hi = _bootstrap_slope(rows, rng, cfg.bootstrap)
    summary = {
        "slope_log_growth_vs_log_kappa": slope,
        "bootstrap_ci": [lo, hi],
        "n_kappa": len(set(kappas)),
        "singleton_grid": len(set(kappas)) < 2,
        "n_failed_rows": sum(1 for r in rows if r["error"]),
        "hypotheses": cfg.hypothesis_report(),
    }
    _write_json(out_csv + ".summary.json", summary)
    if any(r["error"] for r in rows) and all(r["error"] for r in rows):
        return EXIT_NUMERIC
    return EXIT_OK


def _run_simulation(cfg: RunConfig, out_csv: Optional[str]):
    """Shared driver for simulate and threshold trials; returns diagnostic records."""
    wp = cfg.weight_params()
    if cfg.resume:
        state = sim.load_checkpoint(cfg.resume)
    else:
        grid = cfg.grid()
        state = sim.random_divfree_state(
            grid, cfg.phys(), cfg.eps, cfg.eps_tilde, cfg.N,
            kband=cfg.kband, xiband=cfg.xiband, rng=cfg.seed,
        )
    rows = []

    def on_sample(rec: sim.DiagnosticsRecord, _st):
        rows.append(
            {
                "t": rec.t, "E_main": rec.E_main, "HN_neq": rec.HN_neq,
                "HN_eq": rec.HN_eq, "nonlinear_flux": rec.nonlinear_flux,
                "ED_v_cum": rec.ED_v_cum, "ED_b_cum": rec.ED_b_cum,
                "growth_L": rec.growth_L,
            }
        )

    last_state = state

    def on_sample_keep(rec, st):
        nonlocal last_state
        last_state = st
        on_sample(rec, st)

    records = sim.simulate(
        state, cfg.t_end, wp, sample_dt=cfg.sample_dt, dt_max=cfg.dt_max,
        linear_only=cfg.linear_only, on_sample=on_sample_keep,
    )
    if out_csv is not None:
        write_csv(out_csv, SIM_DIAG_HEADER, rows)
        _write_json(out_csv + ".hypotheses.json", cfg.hypothesis_report())
    if cfg.checkpoint:
        sim.save_checkpoint(last_state, cfg.checkpoint)
    return records


def cmd_simulate(cfg: RunConfig, out_csv: str) -> int:
    """Full nonlinear run with diagnostics appended to the CSV schema."""
    try:
        _run_simulation(cfg, out_csv)
    except sim.ResolutionOverflow as exc:
        _write_json(out_csv + ".error.json", {"error": str(exc)})
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_threshold_search(cfg: RunConfig, out_json: str) -> int:
    """Bisect the stability threshold amplitude at fixed horizon and grid.

    An amplitude eps counts as stable when sup_t ||(v,b)_neq||_{H^N} stays
    below 2 * L * eps over the run; non-finite or under-resolved runs count
    as unstable.  Every trial is archived.
    """
    L = cfg.phys().lipschitz_L
    trials = []
    budget = [cfg.budget]

    def stable(eps: float) -> bool:
        if budget[0] <= 0:
            raise BudgetExhausted(f"budget of {cfg.budget} trials exhausted")
        budget[0] -= 1
        trial_cfg = RunConfig(**{**cfg.__dict__, "eps": eps, "checkpoint": ""})
        try:
            records = _run_simulation(trial_cfg, None)
            sup_hn = max(rec.HN_neq for rec in records)
            verdict = bool(np.isfinite(sup_hn)) and sup_hn <= 2.0 * L * eps
        except sim.ResolutionOverflow:
            sup_hn = math.inf
            verdict = False
        trials.append({"eps": eps, "sup_HN_neq": sup_hn, "stable": verdict})
        return verdict

    result = {
        "criterion": "sup_HN_neq <= 2*L*eps",
        "L": L,
        "t_end": cfg.t_end,
        "rel_width": cfg.rel_width,
        "hypotheses": cfg.hypothesis_report(),
    }
    try:
        lo_ok = stable(cfg.eps_lo)
        hi_ok = stable(cfg.eps_hi)
        if not lo_ok or hi_ok:
            result.update(status="unbracketed", lo_stable=lo_ok, hi_stable=hi_ok)
        else:
            lo, hi = cfg.eps_lo, cfg.eps_hi
            while (hi - lo) / lo > cfg.rel_width:
                mid = math.sqrt(lo * hi)
                if stable(mid):
                    lo = mid
                else:
                    hi = mid
            result.update(status="converged", eps_stable=lo, eps_unstable=hi)
    except BudgetExhausted as exc:
        result.update(status="budget_exhausted", detail=str(exc))
        result["trials"] = trials
        _write_json(out_json, result)
        return EXIT_BUDGET
    result["trials"] = trials
    _write_json(out_json, result)
    return EXIT_OK


def cmd_weights_check(cfg: RunConfig, out_json: str) -> int:
    """Monte-Carlo verification of the weight-function inequality suite."""
    wp = cfg.weight_params()
    rng = np.random.default_rng(cfg.seed)
    report = check_lemma_bounds(wp, n_samples=cfg.n_samples, rng=rng)
    payload = {
        "n_samples": report.n_samples,
        "worst": report.worst,
        "violations": report.violations,
        "ed_pairing_printed_holds": report.ed_pairing_printed_holds,
        "ed_pairing_swapped_holds": report.ed_pairing_swapped_holds,
        "all_pass": report.all_pass,
        "hypotheses": cfg.hypothesis_report(),
    }
    _write_json(out_json, payload)
    return EXIT_OK
