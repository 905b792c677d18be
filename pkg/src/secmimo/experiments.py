"""Experiment runner: scenario presets, parameter sweeps, CSV and plots.

Configs are plain ``key = value`` text files (``#`` comments allowed) with a
mandatory ``schema`` version. Exactly one sweep axis (``snr_db``, ``xi``,
``zeta`` or ``bits``) is swept per run; ``zeta`` or ``spread_deg`` may list
several values, each producing its own result table. Results reproduce
byte-identically for a fixed master seed, independent of worker count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .channel import LargeScaleFading
from .corrmat import (CorrelationSpec, CorrMatrix, build_correlation,
                      load_explicit_csv)
from .dac import DacModel
from .rates import (BoundUndefinedError, RateResult, SystemConfig,
                    ergodic_rate_result, optimal_xi, secrecy_margin,
                    simulate_realizations)

SCHEMA_VERSION = 1
SWEEP_AXES = ("snr_db", "xi", "zeta", "bits")
CSV_COLUMNS = ("sweep_value", "bits", "user_rate_mc", "user_rate_bound",
               "eve_rate_mc", "eve_rate_bound", "secrecy_mc", "secrecy_bound",
               "std_err", "seed")
PRESET_NAMES = ("fig1", "fig2", "fig3a", "fig3b", "fig4")

_DEFAULTS = dict(
    xi=0.7, xi_mode="fixed", snr_db=10.0, bits=(1.0, math.inf),
    betas="unit", beta_e=1.0, corr="exponential", zeta=(0.0,),
    clusters=10, spread_deg=(50.0,), angle_seed=0, sigma_e2=0.0,
    n_realizations=1000, user_index=0,
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed experiment description (one sweep axis, optional case lists)."""

    scenario: str
    N: int
    K: int
    M: int
    sweep_axis: str
    sweep_values: tuple
    master_seed: int
    xi: float = 0.7
    xi_mode: str = "fixed"
    snr_db: float = 10.0
    bits: tuple = (1.0, math.inf)
    betas: tuple | str = "unit"
    beta_e: float = 1.0
    corr: str = "exponential"
    zeta: tuple = (0.0,)
    clusters: int = 10
    spread_deg: tuple = (50.0,)
    angle_seed: int = 0
    corr_csv: str | None = None
    sigma_e2: float = 0.0
    n_realizations: int = 1000
    user_index: int = 0
    out_dir: str | None = None

    def __post_init__(self):
        if self.sweep_axis not in SWEEP_AXES:
            raise ValueError(f"sweep axis must be one of {SWEEP_AXES}")
        values = tuple(float(v) for v in self.sweep_values)
        if len(values) == 0:
            raise ValueError("sweep needs at least one value")
        if any(b >= a for a, b in zip(values[1:], values)):
            raise ValueError("sweep values must be strictly increasing")
        object.__setattr__(self, "sweep_values", values)
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be at least 1")
        if self.xi_mode not in ("fixed", "optimal"):
            raise ValueError("xi_mode must be 'fixed' or 'optimal'")
        if self.xi_mode == "optimal" and self.sweep_axis == "xi":
            raise ValueError("cannot sweep xi with xi_mode = optimal")
        if self.sweep_axis == "zeta" and len(self.zeta) > 1:
            raise ValueError("zeta case list conflicts with sweeping zeta")
        if self.corr not in ("identity", "exponential", "clustered", "explicit"):
            raise ValueError(f"unknown correlation model {self.corr!r}")


def _parse_scalar(text: str):
    text = text.strip()
    if text == "inf":
        return math.inf
    try:
        return int(text)
    except ValueError:
        return float(text)


def _parse_values(text: str) -> tuple:
    """Comma list of numbers; a token ``a:b:s`` expands to the inclusive grid."""
    out = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if ":" in token:
            start, stop, step = (float(p) for p in token.split(":"))
            count = int(round((stop - start) / step))
            out.extend(round(start + i * step, 12) for i in range(count + 1))
        else:
            out.append(_parse_scalar(token))
    return tuple(out)


_KNOWN_KEYS = {
    "schema", "scenario", "N", "K", "M", "xi", "xi_mode", "snr_db", "bits",
    "betas", "distances", "d_ref", "eta", "eve_distance", "beta_e", "corr",
    "zeta", "clusters", "spread_deg", "angle_seed", "corr_csv", "sigma_e2",
    "sweep", "values", "n_realizations", "seed", "user_index", "out_dir",
}


def parse_config_text(text: str) -> ExperimentConfig:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno} is not a key = value pair: {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ValueError(f"unknown config key {key!r} (line {lineno})")
        if key in raw:
            raise ValueError(f"duplicate config key {key!r} (line {lineno})")
        raw[key] = value

    for required in ("schema", "scenario", "N", "K", "M", "sweep", "values", "seed"):
        if required not in raw:
            raise ValueError(f"missing required config key {required!r}")
    if int(raw["schema"]) != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {raw['schema']} "
                         f"(this build understands {SCHEMA_VERSION})")

    betas: tuple | str
    if "distances" in raw:
        distances = _parse_values(raw["distances"])
        d_ref = float(raw.get("d_ref", 300.0))
        eta = float(raw.get("eta", 3.8))
        eve_distance = float(raw["eve_distance"]) if "eve_distance" in raw else None
        fading = LargeScaleFading.from_distances(distances, d_ref, eta, eve_distance)
        betas = tuple(float(b) for b in fading.betas)
        beta_e = fading.beta_e
    else:
        betas_text = raw.get("betas", "unit").strip()
        betas = "unit" if betas_text == "unit" else _parse_values(betas_text)
        beta_e = float(raw.get("beta_e", _DEFAULTS["beta_e"]))

    return ExperimentConfig(
        scenario=raw["scenario"],
        N=int(raw["N"]), K=int(raw["K"]), M=int(raw["M"]),
        sweep_axis=raw["sweep"].strip(),
        sweep_values=_parse_values(raw["values"]),
        master_seed=int(raw["seed"]),
        xi=float(raw.get("xi", _DEFAULTS["xi"])),
        xi_mode=raw.get("xi_mode", _DEFAULTS["xi_mode"]).strip(),
        snr_db=float(raw.get("snr_db", _DEFAULTS["snr_db"])),
        bits=tuple(float(b) for b in
                   _parse_values(raw.get("bits", "1, inf"))),
        betas=betas, beta_e=beta_e,
        corr=raw.get("corr", _DEFAULTS["corr"]).strip(),
        zeta=_parse_values(raw.get("zeta", "0")),
        clusters=int(raw.get("clusters", _DEFAULTS["clusters"])),
        spread_deg=_parse_values(raw.get("spread_deg", "50")),
        angle_seed=int(raw.get("angle_seed", _DEFAULTS["angle_seed"])),
        corr_csv=raw.get("corr_csv"),
        sigma_e2=float(raw.get("sigma_e2", _DEFAULTS["sigma_e2"])),
        n_realizations=int(raw.get("n_realizations", _DEFAULTS["n_realizations"])),
        user_index=int(raw.get("user_index", _DEFAULTS["user_index"])),
        out_dir=raw.get("out_dir"),
    )


def parse_config(path) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text())


def load_preset(name: str) -> ExperimentConfig:
    """One of the shipped scenario presets (fig1, fig2, fig3a, fig3b, fig4)."""
    if name not in PRESET_NAMES:
        raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    text = resources.files("secmimo").joinpath(f"presets/{name}.cfg").read_text()
    return parse_config_text(text)


def expand_cases(cfg: ExperimentConfig) -> list[tuple[str, ExperimentConfig]]:
    """Concrete (label, config) pairs for the case lists (zeta, spread_deg)."""
    cases = []
    if cfg.corr == "exponential" and cfg.sweep_axis != "zeta" and len(cfg.zeta) > 1:
        for z in cfg.zeta:
            cases.append((f"zeta{z:g}", replace(cfg, zeta=(z,))))
    elif cfg.corr == "clustered" and len(cfg.spread_deg) > 1:
        for s in cfg.spread_deg:
            cases.append((f"spread{s:g}", replace(cfg, spread_deg=(s,))))
    else:
        cases.append(("", cfg))
    return cases


@dataclass(frozen=True)
class SweepRow:
    """One (sweep value, DAC model) result; ``error`` marks a failed point."""

    sweep_value: float
    bits_label: str
    seed: int
    result: RateResult | None
    error: str | None = None


@dataclass(frozen=True)
class ResultTable:
    config: ExperimentConfig
    case_label: str
    rows: tuple[SweepRow, ...]


def _fading_for(cfg: ExperimentConfig) -> LargeScaleFading:
    if cfg.betas == "unit":
        return LargeScaleFading(betas=np.ones(cfg.K), beta_e=cfg.beta_e)
    betas = np.asarray(cfg.betas, dtype=float)
    return LargeScaleFading(betas=betas, beta_e=cfg.beta_e)


def _corr_spec_for(cfg: ExperimentConfig, zeta: float | None = None) -> CorrelationSpec:
    if cfg.corr == "identity":
        return CorrelationSpec.identity()
    if cfg.corr == "exponential":
        z = cfg.zeta[0] if zeta is None else zeta
        return CorrelationSpec.exponential(z)
    if cfg.corr == "clustered":
        return CorrelationSpec.clustered(cfg.clusters,
                                         math.radians(cfg.spread_deg[0]),
                                         cfg.angle_seed)
    return CorrelationSpec.explicit(load_explicit_csv(cfg.corr_csv))


def _corr_key(spec: CorrelationSpec) -> tuple:
    return (spec.kind, spec.zeta, spec.clusters, spec.spread, spec.angle_seed,
            id(spec.matrix))


def run_sweep(cfg: ExperimentConfig, workers: int = 1,
              bounds_only: bool = False) -> ResultTable:
    """Run one concrete sweep (case lists must be expanded first).

    Channel realizations are drawn once per distinct correlation matrix and
    re-evaluated at every sweep point and DAC model, so all points of an
    SNR or power-split sweep see the same fading sample. A point whose
    closed form or simulation fails is kept with an error marker.
    """
    for name, vals in (("zeta", cfg.zeta), ("spread_deg", cfg.spread_deg)):
        if len(vals) > 1 and cfg.sweep_axis != name:
            raise ValueError(f"expand {name} cases before run_sweep")
    fading = _fading_for(cfg)
    fixed_spec = None if cfg.sweep_axis == "zeta" else _corr_spec_for(cfg)
    corr_cache: dict[tuple, CorrMatrix] = {}
    batch_cache: dict[tuple, object] = {}
    rows: list[SweepRow] = []

    for value in cfg.sweep_values:
        snr_db = value if cfg.sweep_axis == "snr_db" else cfg.snr_db
        xi = value if cfg.sweep_axis == "xi" else cfg.xi
        if fixed_spec is None:
            spec = _corr_spec_for(cfg, value)
        else:
            spec = fixed_spec
        key = _corr_key(spec)
        if key not in corr_cache:
            corr_cache[key] = build_correlation(spec, cfg.N)
        corr = corr_cache[key]

        if cfg.sweep_axis == "bits":
            dacs = [DacModel.for_bits(value)]
        else:
            dacs = [DacModel.for_bits(b) for b in cfg.bits]

        for dac in dacs:
            try:
                config = SystemConfig(
                    N=cfg.N, K=cfg.K, M=cfg.M, dac=dac, fading=fading,
                    corr=spec, P=10.0 ** (snr_db / 10.0), sigma_n2=1.0,
                    sigma_e2=cfg.sigma_e2, xi=xi)
                if cfg.xi_mode == "optimal":
                    config = config.with_updates(
                        xi=optimal_xi(config, cfg.user_index, corr.tr_r2).xi)
                if not bounds_only and key not in batch_cache:
                    batch_cache[key] = simulate_realizations(
                        config, cfg.n_realizations, cfg.master_seed,
                        workers=workers, corr=corr)
                result = ergodic_rate_result(
                    config, cfg.n_realizations, cfg.master_seed,
                    k=cfg.user_index, workers=workers,
                    batch=None if bounds_only else batch_cache[key],
                    corr=corr, bounds_only=bounds_only)
                rows.append(SweepRow(sweep_value=float(value),
                                     bits_label=dac.label,
                                     seed=cfg.master_seed, result=result))
            except (BoundUndefinedError, ValueError) as exc:
                rows.append(SweepRow(sweep_value=float(value),
                                     bits_label=dac.label,
                                     seed=cfg.master_seed, result=None,
                                     error=str(exc)))
    return ResultTable(config=cfg, case_label="", rows=tuple(rows))


def run_experiment(cfg: ExperimentConfig, workers: int = 1,
                   bounds_only: bool = False) -> list[ResultTable]:
    """Expand case lists and run each resulting sweep."""
    tables = []
    for label, case_cfg in expand_cases(cfg):
        table = run_sweep(case_cfg, workers=workers, bounds_only=bounds_only)
        tables.append(ResultTable(config=table.config, case_label=label,
                                  rows=table.rows))
    return tables


def find_crossover_zeta(cfg: ExperimentConfig, tol: float = 1e-6,
                        z_max: float = 0.995) -> float | None:
    """Correlation level where the two configured DAC models' secrecy bounds
    cross, or None when no sign change exists.

    The gap is (higher resolution) minus (lower resolution) on the unclamped
    margins, evaluated with the config's xi policy; bisection refines a grid
    sign change down to |gap| <= tol.
    """
    if cfg.corr != "exponential":
        raise ValueError("crossover search requires the exponential model")
    levels = sorted(set(cfg.bits))
    if len(levels) != 2:
        raise ValueError("crossover needs exactly two DAC resolutions")
    low, high = (DacModel.for_bits(levels[0]), DacModel.for_bits(levels[1]))
    fading = _fading_for(cfg)

    def gap(z: float) -> float:
        out = []
        for dac in (high, low):
            config = SystemConfig(
                N=cfg.N, K=cfg.K, M=cfg.M, dac=dac, fading=fading,
                corr=CorrelationSpec.exponential(z),
                P=10.0 ** (cfg.snr_db / 10.0), sigma_n2=1.0,
                sigma_e2=cfg.sigma_e2, xi=cfg.xi)
            if cfg.xi_mode == "optimal":
                config = config.with_updates(
                    xi=optimal_xi(config, cfg.user_index).xi)
            out.append(secrecy_margin(config, cfg.user_index))
        return out[0] - out[1]

    grid = np.linspace(1e-3, z_max, 120)
    values = []
    for z in grid:
        try:
            values.append(gap(z))
        except BoundUndefinedError:
            break
    for i in range(1, len(values)):
        if values[i - 1] == 0.0:
            return float(grid[i - 1])
        if values[i - 1] * values[i] < 0.0:
            lo, hi = float(grid[i - 1]), float(grid[i])
            g_lo = values[i - 1]
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                g_mid = gap(mid)
                if abs(g_mid) <= tol:
                    return mid
                if g_lo * g_mid < 0.0:
                    hi = mid
                else:
                    lo, g_lo = mid, g_mid
            return 0.5 * (lo + hi)
    return None


def _fmt(x) -> str:
    return repr(float(x))


def emit_csv(table: ResultTable, path) -> None:
    """Write the fixed-column CSV; failed points carry nan rate fields."""
    if not table.rows:
        raise ValueError("refusing to write an empty sweep table")
    lines = [",".join(CSV_COLUMNS)]
    for row in table.rows:
        r = row.result
        fields = [_fmt(row.sweep_value), row.bits_label]
        if r is None:
            fields += [_fmt(math.nan)] * 7
        else:
            fields += [_fmt(r.user_rate_mc), _fmt(r.user_rate_bound),
                       _fmt(r.eve_rate_mc), _fmt(r.eve_rate_bound),
                       _fmt(r.secrecy_mc), _fmt(r.secrecy_bound),
                       _fmt(r.std_err)]
        fields.append(str(row.seed))
        lines.append(",".join(fields))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path) -> list[dict]:
    """Parse an emitted CSV back into one dict per row."""
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {header}")
    out = []
    for line in lines[1:]:
        parts = line.split(",")
        row = {"sweep_value": float(parts[0]), "bits": parts[1],
               "seed": int(parts[-1])}
        for name, text in zip(CSV_COLUMNS[2:-1], parts[2:-1]):
            row[name] = float(text)
        out.append(row)
    return out


def emit_plot(table: ResultTable, path) -> None:
    """Line chart of the secrecy rate per DAC model (vector graphics)."""
    if not table.rows:
        raise ValueError("refusing to plot an empty sweep table")
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    labels = []
    for row in table.rows:
        if row.bits_label not in labels:
            labels.append(row.bits_label)
    for label in labels:
        rows = [r for r in table.rows if r.bits_label == label and r.result]
        x = [r.sweep_value for r in rows]
        bound = [r.result.secrecy_bound for r in rows]
        name = "ideal DAC" if label == "inf" else f"{label}-bit DAC"
        line, = ax.plot(x, bound, label=f"{name}, bound")
        mc = np.array([r.result.secrecy_mc for r in rows])
        if not np.all(np.isnan(mc)):
            ax.plot(x, mc, "o--", color=line.get_color(), markersize=4,
                    label=f"{name}, simulated")
    ax.set_xlabel(table.config.sweep_axis)
    ax.set_ylabel("secrecy rate (bits/s/Hz)")
    ax.grid(True, alpha=0.4)
    ax.legend()
    title = table.config.scenario
    if table.case_label:
        title += f" ({table.case_label})"
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
