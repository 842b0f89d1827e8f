"""Experiment configuration, runners and reports.

Every runner splits its work into a fixed number of units whose random
streams are spawned from the master seed, so results do not depend on the
number of worker processes. Reports serialise deterministically; wall time
goes to a separate sidecar file so replays compare byte for byte.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
import configparser
import csv
import json
import math
import os
import time

import numpy as np
from scipy import stats

from . import __version__
from ._validation import make_grid, spawn_generators
from .analytic import PredictionCurve
from .charpoly import critical_derivative_batch
from .ensembles import EigenangleSampler, EnsembleSpec, Kind
from .exceptions import (ConfigError, InputError, LFamiliesError, NumericalCheckError,
                         UnsupportedError)
from .spectra import (DensityTable, discrepancy, moment_estimator, nn_spacing,
                      one_level_density, pair_correlation, unfold_angles,
                      unfold_lzeros)

EXPERIMENTS = ("sample", "ensemble_density", "ensemble_moments", "ec_density",
               "ec_moments", "compare", "analytic")
STATISTICS = {"one_level": one_level_density, "pair": pair_correlation, "nn": nn_spacing}
FIT_NOTE = "leading-order, desk-scale fit only"


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------

def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt(conv):
    def inner(text):
        t = str(text).strip()
        return None if t.lower() in ("", "none", "auto") else conv(t)
    return inner


def _int(text):
    v = float(text)
    if v != int(v):
        raise ValueError(f"not an integer: {text!r}")
    return int(v)


def _int_list(text):
    return tuple(_int(x) for x in str(text).replace(",", " ").split())


def _float_list(text):
    return tuple(float(x) for x in str(text).replace(",", " ").split())


def _grid(text):
    """``lo:hi:nbins`` or an explicit comma-separated list of edges."""
    t = str(text).strip()
    if ":" in t:
        lo, hi, n = t.split(":")
        return (float(lo), float(hi), _int(n))
    return _float_list(t)


def _seed(text):
    v = _int(text)
    if not 0 <= v < 2 ** 64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return v


@dataclass
class ExperimentConfig:
    """Settings for one run. See the README for the key = value schema."""

    experiment: str = "ensemble_density"
    seed: int | None = None
    # ensembles
    kind: str = "interaction"
    forced: int = 0
    dimension: int | None = None
    log_x: float | None = None
    sign: int | None = None
    samples: int = 10000
    method: str = "mcmc"
    chains: int = 64
    units: int = 8
    burn_in: int | None = None
    thinning: int | None = None
    proposal_width: float | None = None
    statistic: str = "one_level"
    grid: tuple = (0.0, 5.0, 50)
    overlay: str | None = None
    overlay_r: int | None = None
    # moments
    k: int = 1
    ladder: tuple = ()
    blocks: int = 20
    # elliptic-curve families
    family: str = "F1"
    X: float = 1e6
    family_sign: int = -1
    semistable: bool = True
    max_curves: int | None = None
    a_poly: tuple = ()
    b_poly: tuple = ()
    ordering: str = "discriminant"
    T: float | None = None
    accuracy: float = 1e-8
    numeric_sign: bool = False
    # comparison
    report_a: str | None = None
    report_b: str | None = None

    _CONVERTERS = {
        "experiment": str, "seed": _opt(_seed), "kind": str, "forced": _int,
        "dimension": _opt(_int), "log_x": _opt(float), "sign": _opt(_int), "samples": _int,
        "method": str, "chains": _int, "units": _int, "burn_in": _opt(_int),
        "thinning": _opt(_int), "proposal_width": _opt(float), "statistic": str,
        "grid": _grid, "overlay": _opt(str), "overlay_r": _opt(_int), "k": _int,
        "ladder": _float_list, "blocks": _int, "family": str, "X": float,
        "family_sign": _int, "semistable": _bool, "max_curves": _opt(_int),
        "a_poly": _int_list, "b_poly": _int_list, "ordering": str, "T": _opt(float),
        "accuracy": float, "numeric_sign": _bool, "report_a": _opt(str), "report_b": _opt(str),
    }

    def __post_init__(self):
        self.validate(require_seed=False)

    @classmethod
    def from_mapping(cls, mapping):
        names = {f.name for f in fields(cls)}
        kwargs = {}
        for key, value in mapping.items():
            if key not in names:
                raise ConfigError(f"unknown configuration key {key!r}")
            if isinstance(value, str):
                try:
                    value = cls._CONVERTERS[key](value)
                except (TypeError, ValueError) as e:
                    raise ConfigError(f"bad value for {key}: {e}") from None
            kwargs[key] = value
        return cls(**kwargs)

    @classmethod
    def from_text(cls, text):
        parser = configparser.ConfigParser(
            interpolation=None, inline_comment_prefixes=("#",), comment_prefixes=("#", ";"),
            delimiters=("=",),
        )
        parser.optionxform = str
        try:
            parser.read_string("[run]\n" + text)
        except configparser.Error as e:
            raise ConfigError(f"cannot parse configuration: {e}") from None
        return cls.from_mapping(dict(parser["run"]))

    @classmethod
    def from_file(cls, path):
        try:
            with open(path) as fh:
                return cls.from_text(fh.read())
        except OSError as e:
            raise ConfigError(f"cannot read configuration {path}: {e}") from None

    def replace(self, **changes):
        d = self.to_dict()
        d.update(changes)
        return ExperimentConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def validate(self, require_seed=True):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if require_seed and self.seed is None:
            raise ConfigError("a seed is mandatory")
        for name in ("samples", "chains", "units", "k", "blocks"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.max_curves is not None and self.max_curves < 1:
            raise ConfigError("max_curves must be positive")
        if self.kind not in {k.value for k in Kind}:
            raise ConfigError(f"unknown ensemble kind {self.kind!r}")
        if self.statistic not in STATISTICS:
            raise ConfigError(f"statistic must be one of {tuple(STATISTICS)}")
        if self.method not in ("mcmc", "direct"):
            raise ConfigError("method must be mcmc or direct")
        if self.family_sign not in (1, -1):
            raise ConfigError("family_sign must be +1 or -1")
        if self.ordering not in ("discriminant", "conductor"):
            raise ConfigError("ordering must be discriminant or conductor")
        if not self.X >= 1:
            raise ConfigError("X must be >= 1")
        if not self.accuracy > 0:
            raise ConfigError("accuracy must be positive")
        try:
            make_grid(self.grid)
        except InputError as e:
            raise ConfigError(f"bad grid: {e}") from None
        return self


# --------------------------------------------------------------------------
# Reports
# --------------------------------------------------------------------------

def _clean(x):
    """JSON-safe, deterministic representation of numbers and containers."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _table_dict(t):
    return {"edges": t.edges, "heights": t.heights, "stderr": t.stderr,
            "sample_count": t.sample_count, "counted": t.counted, "label": t.label}


@dataclass(eq=False)
class RunReport:
    """Everything a run produced, traceable to (config, seed, version)."""

    config: dict
    seed: int
    version: str = __version__
    tables: dict = field(default_factory=dict)
    overlays: dict = field(default_factory=dict)
    discrepancy: dict = field(default_factory=dict)
    moments: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    unfolded: dict = field(default_factory=dict)
    extra_csv: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def to_dict(self):
        return _clean({
            "config": self.config,
            "seed": self.seed,
            "version": self.version,
            "tables": {k: _table_dict(t) for k, t in self.tables.items()},
            "overlays": {k: {"edges": o.grid, "values": o.values, "label": o.label}
                         for k, o in self.overlays.items()},
            "discrepancy": self.discrepancy,
            "moments": self.moments,
            "fits": self.fits,
            "counts": self.counts,
            "notes": self.notes,
        })

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dir(cls, path):
        with open(os.path.join(path, "report.json")) as fh:
            d = json.load(fh)
        tables = {
            k: DensityTable(np.array(v["edges"]), np.array(v["heights"]), np.array(v["stderr"]),
                            v["sample_count"], v["counted"], v["label"])
            for k, v in d["tables"].items()
        }
        unfolded = {}
        upath = os.path.join(path, "unfolded.csv")
        if os.path.exists(upath):
            with open(upath, newline="") as fh:
                rows = list(csv.DictReader(fh))
            for name in sorted({r["table"] for r in rows}):
                unfolded[name] = np.array([float(r["value"]) for r in rows if r["table"] == name])
        return cls(config=d["config"], seed=d["seed"], version=d["version"], tables=tables,
                   discrepancy=d["discrepancy"], moments=d["moments"], fits=d["fits"],
                   counts=d["counts"], notes=d["notes"], unfolded=unfolded)


def write_gnuplot(path, x, y, header=""):
    with open(path, "w") as fh:
        if header:
            fh.write(f"# {header}\n")
        for a, b in zip(x, y):
            fh.write(f"{float(a)!r} {float(b)!r}\n")


def write_report(report, out_dir):
    """report.json, one CSV and one gnuplot file per table and overlay,
    unfolded.csv with the pooled unfolded zeros, and timing.json."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        fh.write(report.to_json())
    for name, t in report.tables.items():
        t.to_csv(os.path.join(out_dir, f"{name}.csv"))
        write_gnuplot(os.path.join(out_dir, f"{name}.dat"), t.centers, t.heights, f"{name}: center height")
    for name, o in report.overlays.items():
        o.to_csv(os.path.join(out_dir, f"{name}.csv"))
        centers = 0.5 * (o.grid[1:] + o.grid[:-1])
        write_gnuplot(os.path.join(out_dir, f"{name}.dat"), centers, o.values, f"{name}: center value")
    if report.unfolded:
        with open(os.path.join(out_dir, "unfolded.csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("table", "value"))
            for name in sorted(report.unfolded):
                for v in report.unfolded[name]:
                    w.writerow((name, repr(float(v))))
    for name, (header, rows) in report.extra_csv.items():
        with open(os.path.join(out_dir, name), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    with open(os.path.join(out_dir, "timing.json"), "w") as fh:
        json.dump({"wall_time_seconds": report.wall_time}, fh)
        fh.write("\n")
    return out_dir


# --------------------------------------------------------------------------
# Parallel map with order-preserving, thread-count-independent results
# --------------------------------------------------------------------------

def parallel_map(func, items, threads=1):
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=int(threads)) as ex:
        return list(ex.map(func, items))


def _split(n, parts):
    base, extra = divmod(n, parts)
    return [base + (i < extra) for i in range(parts)]


# --------------------------------------------------------------------------
# Ensemble runs
# --------------------------------------------------------------------------

def ensemble_spec(cfg, dimension=None):
    if dimension is None:
        dimension = cfg.dimension
    try:
        if dimension is None:
            if cfg.log_x is None:
                raise ConfigError("give dimension or log_x")
            return EnsembleSpec.for_log_conductor(cfg.kind, math.exp(cfg.log_x), cfg.forced, cfg.sign)
        return EnsembleSpec(cfg.kind, int(dimension), cfg.forced, cfg.sign)
    except ConfigError:
        raise
    except InputError as e:
        raise ConfigError(str(e)) from None


def _ensemble_unit(job):
    spec, cfg, n, seed = job
    chains = max(1, min(cfg.chains // cfg.units or 1, n))
    sampler = EigenangleSampler.from_spec(
        spec, method=cfg.method, n_chains=chains, burn_in=cfg.burn_in,
        thinning=cfg.thinning, proposal_width=cfg.proposal_width, random_state=seed,
    )
    return sampler.fit().sample_array(n)


def draw_angles(spec, cfg, seed, threads=1):
    """cfg.samples draws split across cfg.units independently seeded samplers."""
    sizes = [s for s in _split(cfg.samples, cfg.units)]
    gens = spawn_generators(seed, cfg.units)
    jobs = [(spec, cfg, n, g) for n, g in zip(sizes, gens) if n > 0]
    parts = parallel_map(_ensemble_unit, jobs, threads)
    return np.concatenate(parts, axis=0)


def default_overlay(spec):
    """Limiting one-level density that the ensemble should reproduce."""
    if spec.kind is Kind.INTERACTION:
        return ("interaction", spec.forced) if spec.forced else ("so_even", 0)
    if spec.kind is Kind.INDEPENDENT:
        return (spec.base_kind.value, 0)
    if spec.kind in (Kind.SO_EVEN, Kind.SO_ODD, Kind.UNITARY):
        return (spec.kind.value, 0)
    raise UnsupportedError(f"no default overlay for {spec.kind.value}")


def _overlay_for(cfg, default):
    model = cfg.overlay or default[0]
    r = default[1] if cfg.overlay_r is None else cfg.overlay_r
    return model, r


def _attach_overlay(report, name, table, model, r):
    try:
        curve = PredictionCurve.for_model(model, r, table.edges)
    except InputError:
        return
    report.overlays[f"{name}_model"] = curve
    z = discrepancy(table, curve.values)
    report.discrepancy[name] = {"model": curve.label, "max": float(np.max(z)), "per_bin": z}


def _new_report(cfg):
    return RunReport(config=_clean(cfg.to_dict()), seed=int(cfg.seed))


def run_sample(cfg, threads=1):
    cfg.validate()
    t0 = time.perf_counter()
    spec = ensemble_spec(cfg)
    angles = draw_angles(spec, cfg, cfg.seed, threads)
    report = _new_report(cfg)
    report.counts = {"samples": int(angles.shape[0]), "free_angles": int(angles.shape[1]),
                     "forced_zero_multiplicity": spec.forced_zero_multiplicity,
                     "total_degree": spec.total_degree}
    rows = [(i, j + 1, float(a)) for i, row in enumerate(angles) for j, a in enumerate(row)]
    report.extra_csv["samples.csv"] = (("sample", "j", "angle"), rows)
    report.wall_time = time.perf_counter() - t0
    return report


def run_ensemble_density(cfg, threads=1):
    """Sample, unfold, bin and overlay the matching limiting density."""
    cfg.validate()
    t0 = time.perf_counter()
    spec = ensemble_spec(cfg)
    angles = draw_angles(spec, cfg, cfg.seed, threads)
    sets = unfold_angles(angles, spec)
    table = STATISTICS[cfg.statistic](sets, cfg.grid, label=cfg.statistic)
    report = _new_report(cfg)
    name = f"{spec.kind.value}_r{spec.forced}_M{spec.dimension}_{cfg.statistic}"
    report.tables[name] = table
    report.unfolded[name] = np.concatenate([z.values for z in sets])
    model, r = _overlay_for(cfg, default_overlay(spec) if cfg.statistic == "one_level" else ("", 0))
    if cfg.statistic == "one_level" and model:
        _attach_overlay(report, name, table, model, r)
    report.counts = {"samples": len(sets), "total_degree": spec.total_degree,
                     "free_angles": spec.free_angle_count,
                     "forced_zero_multiplicity": spec.forced_zero_multiplicity}
    report.wall_time = time.perf_counter() - t0
    return report


def fit_exponent(x, means, ses):
    """Weighted least squares of log(mean) on log(x).

    Returns (slope, half-width of the 95% interval, intercept). The slope
    error is inflated by sqrt(reduced chi^2) when the scatter exceeds the
    quoted errors.
    """
    x, m, s = (np.asarray(v, dtype=float) for v in (x, means, ses))
    if x.size < 4:
        raise ConfigError("exponent fits need at least 4 ladder points")
    if np.any(m <= 0):
        raise NumericalCheckError("moment estimates must be positive to fit on a log scale")
    y = np.log(m)
    sy = np.where(s > 0, s / m, np.min(s[s > 0]) / m if np.any(s > 0) else 1.0)
    X = np.column_stack([np.ones_like(x), np.log(x)])
    W = 1.0 / sy ** 2
    cov = np.linalg.inv(X.T @ (X * W[:, None]))
    beta = cov @ (X.T @ (W * y))
    resid = y - X @ beta
    dof = x.size - 2
    chi2 = float(np.sum(W * resid ** 2)) / dof
    se = math.sqrt(cov[1, 1] * max(1.0, chi2))
    half = float(stats.t.ppf(0.975, dof)) * se
    return float(beta[1]), half, float(beta[0])


def _moment_rungs(cfg):
    if len(cfg.ladder) < 4:
        raise ConfigError("a moment ladder needs at least 4 entries")
    return list(cfg.ladder)


def run_ensemble_moments(cfg, threads=1):
    """E|Lambda^(k)(1)| over a ladder of matrix dimensions, with a power-law fit."""
    cfg.validate()
    t0 = time.perf_counter()
    rungs = _moment_rungs(cfg)
    gens = spawn_generators(cfg.seed, len(rungs))
    report = _new_report(cfg)
    xs, means, ses = [], [], []
    for M, g in zip(rungs, gens):
        spec = ensemble_spec(cfg, int(M))
        angles = draw_angles(spec, cfg, g.bit_generator.seed_seq, threads)
        vals = np.abs(critical_derivative_batch(angles, spec, cfg.k))
        mean, se = moment_estimator(vals, 1, blocks=min(cfg.blocks, vals.size))
        report.moments.append({"dimension": spec.dimension, "k": cfg.k, "mean": mean,
                               "stderr": se, "samples": int(vals.size)})
        xs.append(spec.dimension)
        means.append(mean)
        ses.append(se)
    slope, half, icpt = fit_exponent(xs, means, ses)
    report.fits["exponent"] = {"value": slope, "ci95": [slope - half, slope + half],
                               "intercept": icpt, "regressor": "matrix dimension", "note": FIT_NOTE}
    report.notes.append(FIT_NOTE)
    report.wall_time = time.perf_counter() - t0
    return report


# --------------------------------------------------------------------------
# Elliptic-curve families
# --------------------------------------------------------------------------

def family_overlay(family, sign):
    """Model density paired with a family sign class.

    Without a forced point the sign picks SO(even) or SO(odd); F2 carries
    one forced zero on top of an SO(even)-type remainder in either class.
    """
    family = family.upper()
    if family == "F2":
        return ("so_even", 0)
    return ("so_even", 0) if sign == 1 else ("so_odd", 0)


def expected_central_order(family, sign):
    base = 0 if sign == 1 else 1
    return base + 2 if (family.upper() == "F2" and sign == 1) else base


def family_curves(cfg, seed):
    """Curves of the configured family and sign class, subsampled if requested.

    Large F1 boxes are sampled rather than enumerated: pairs are drawn
    uniformly from the box until enough curves of the class are found.
    """
    from .ellcurve import enumerate_family, is_semistable
    from .ellcurve.curve import Curve
    from .ellcurve.families import floor_root

    rng = np.random.default_rng(seed)
    fam = cfg.family.upper()
    counts = {"examined": 0, "undetermined_sign": 0}
    if fam == "F1" and cfg.max_curves is not None and floor_root(cfg.X, 3) * floor_root(cfg.X, 2) > 50 * cfg.max_curves:
        A, B = floor_root(cfg.X, 3), floor_root(cfg.X, 2)
        seen, out = set(), []
        limit = 2000 * cfg.max_curves + 10 ** 6
        box = (2 * A + 1) * (2 * B + 1)
        while len(out) < cfg.max_curves and counts["examined"] < limit and len(seen) < box:
            a, b = int(rng.integers(-A, A + 1)), int(rng.integers(-B, B + 1))
            if (a, b) in seen:
                continue
            seen.add((a, b))
            if 4 * a ** 3 + 27 * b * b == 0:
                continue
            counts["examined"] += 1
            c = Curve(a, b)
            if cfg.semistable and not is_semistable(c):
                continue
            w = _sign_or_none(c, cfg)
            if w is None:
                counts["undetermined_sign"] += 1
            elif w == cfg.family_sign:
                out.append(c)
        counts["sampled_from_box"] = True
        _require_signs(counts, cfg)
        out.sort(key=lambda c: (c.a, c.b))
        return out, counts
    try:
        curves = enumerate_family(fam, cfg.X, cfg.semistable, cfg.a_poly or None,
                                  cfg.b_poly or None, cfg.ordering)
    except InputError as e:
        raise ConfigError(str(e)) from None
    counts["examined"] = len(curves)
    out = []
    for c in curves:
        w = _sign_or_none(c, cfg)
        if w is None:
            counts["undetermined_sign"] += 1
        elif w == cfg.family_sign:
            out.append(c)
    _require_signs(counts, cfg)
    if cfg.max_curves is not None and len(out) > cfg.max_curves:
        idx = np.sort(rng.choice(len(out), cfg.max_curves, replace=False))
        out = [out[i] for i in idx]
    return out, counts


def _require_signs(counts, cfg):
    if counts["undetermined_sign"] and not cfg.numeric_sign:
        raise UnsupportedError(
            f"{counts['undetermined_sign']} curves have additive reduction; "
            "set semistable = true or numeric_sign = true"
        )


def _sign_or_none(c, cfg):
    from .ellcurve import root_number
    try:
        return root_number(c)
    except UnsupportedError:
        if not cfg.numeric_sign:
            return None
    from .ellcurve import ldata
    from .leval import EvalParams, numeric_sign, prepare
    try:
        L = prepare(ldata(c, 16, sign="none"), 4.0, EvalParams(cfg.accuracy))
        return numeric_sign(L, EvalParams(cfg.accuracy))
    except LFamiliesError:
        return None


def _curve_job(job):
    """Zeros up to T, central order and L'(1/2) for one curve; never raises."""
    from .ellcurve import ldata
    from .leval import EvalParams, central_derivative, central_order, find_zeros, prepare

    curve, sign, T_unfolded, T_fixed, accuracy, want_derivative = job
    params = EvalParams(accuracy)
    rec = {"a": curve.a, "b": curve.b, "status": "ok"}
    try:
        L = ldata(curve, 16, sign=sign)
        c = L.refined_conductor
        T = T_fixed if T_fixed is not None else T_unfolded * 2 * math.pi / c + 0.25
        L = prepare(L, max(T, 3.5), params)
        rec.update(conductor=L.conductor, root_number=L.root_number, c_L=c)
        order = central_order(L, params)
        zl = find_zeros(L, T, params, central=order)
        rec.update(central_order=order, zeros=zl.ordinates.tolist(), T=T,
                   widths=(zl.brackets[:, 1] - zl.brackets[:, 0]).tolist())
        if want_derivative:
            rec["derivative"] = central_derivative(L, 1, params) if order <= 1 else 0.0
    except NumericalCheckError as e:
        rec["status"] = f"dropped: {type(e).__name__}"
    except LFamiliesError as e:
        rec["status"] = f"dropped: {type(e).__name__}: {e}"
    return rec


def analyse_curves(curves, sign, cfg, threads=1, want_derivative=False):
    hi = make_grid(cfg.grid)[-1]
    jobs = [(c, sign, hi, cfg.T, cfg.accuracy, want_derivative) for c in curves]
    return parallel_map(_curve_job, jobs, threads)


def _curve_rows(records):
    rows = []
    for r in records:
        rows.append((r["a"], r["b"], r.get("conductor", ""), r.get("root_number", ""),
                     r.get("c_L", float("nan")), r.get("central_order", ""), r["status"]))
    return rows


def _zero_rows(records):
    rows = []
    for r in records:
        for j, (g, w) in enumerate(zip(r["zeros"], r["widths"]), start=1):
            rows.append((f"[{r['a']},{r['b']}]", j, float(g), float(w)))
    return rows


def run_ec_density(cfg, threads=1):
    """One-level density of low zeros over one sign class of a family."""
    cfg.validate()
    t0 = time.perf_counter()
    curves, counts = family_curves(cfg, cfg.seed)
    records = analyse_curves(curves, cfg.family_sign, cfg, threads)
    ok = [r for r in records if r["status"] == "ok"]
    report = _new_report(cfg)
    counts.update(selected=len(curves), used=len(ok), dropped=len(records) - len(ok))
    if not ok:
        raise NumericalCheckError("no curve survived the zero-count checks")
    expected = expected_central_order(cfg.family, cfg.family_sign)
    orders = [r["central_order"] for r in ok]
    counts["central_order_histogram"] = {str(k): orders.count(k) for k in sorted(set(orders))}
    counts["above_expected_order"] = sum(o > expected for o in orders)
    sets = [unfold_lzeros(r["zeros"], r["c_L"], source=f"[{r['a']},{r['b']}]") for r in ok]
    name = f"{cfg.family.upper()}{'+' if cfg.family_sign == 1 else '-'}_one_level"
    name = name.replace("+", "plus").replace("-", "minus")
    table = one_level_density(sets, cfg.grid, label=name)
    report.tables[name] = table
    report.unfolded[name] = np.concatenate([z.values for z in sets])
    model, r = _overlay_for(cfg, family_overlay(cfg.family, cfg.family_sign))
    _attach_overlay(report, name, table, model, r)
    report.counts = counts
    report.extra_csv["curves.csv"] = (
        ("a", "b", "conductor", "root_number", "c_L", "central_order", "status"), _curve_rows(records))
    report.extra_csv["zeros.csv"] = (("curve", "j", "gamma", "bracket_width"), _zero_rows(ok))
    report.wall_time = time.perf_counter() - t0
    return report


def ec_mean_derivative(records, expected_order):
    """Mean L'(1/2) over curves whose central order equals the expected one."""
    vals = [r["derivative"] for r in records if r["status"] == "ok" and r["central_order"] == expected_order]
    if not vals:
        raise NumericalCheckError("no curve with the expected central order")
    mean, se = moment_estimator(vals, 1)
    return mean, se, len(vals)


def run_ec_moments(cfg, threads=1):
    """Mean L'(1/2)^k over a sign class at a ladder of X, with a log X fit."""
    cfg.validate()
    t0 = time.perf_counter()
    rungs = _moment_rungs(cfg)
    report = _new_report(cfg)
    expected = expected_central_order(cfg.family, cfg.family_sign)
    xs, means, ses = [], [], []
    for i, X in enumerate(rungs):
        sub = cfg.replace(X=float(X), grid=(0.0, 0.5, 1), T=cfg.T or 0.5)
        curves, counts = family_curves(sub, np.random.SeedSequence([cfg.seed, i]))
        records = analyse_curves(curves, cfg.family_sign, sub, threads, want_derivative=True)
        vals = [r["derivative"] for r in records
                if r["status"] == "ok" and r["central_order"] == expected]
        if not vals:
            raise NumericalCheckError(f"no usable curves at X={X}")
        mean, se = moment_estimator(np.abs(vals), cfg.k)
        report.moments.append({"X": float(X), "k": cfg.k, "mean": mean, "stderr": se,
                               "curves": len(vals), "selected": len(curves),
                               "excluded_order": sum(1 for r in records if r["status"] == "ok"
                                                     and r["central_order"] != expected)})
        xs.append(math.log(X))
        means.append(mean)
        ses.append(se)
    slope, half, icpt = fit_exponent(xs, means, ses)
    report.fits["exponent"] = {"value": slope, "ci95": [slope - half, slope + half],
                               "intercept": icpt, "regressor": "log X", "note": FIT_NOTE}
    report.notes.append(FIT_NOTE)
    report.wall_time = time.perf_counter() - t0
    return report


# --------------------------------------------------------------------------
# Comparison and analytic curves
# --------------------------------------------------------------------------

def compare(report_a, report_b):
    """Per-bin differences in pooled standard errors for tables with
    matching grids, plus a two-sample KS test on pooled unfolded zeros."""
    ta = list(report_a.tables.items())
    tb = list(report_b.tables.items())
    if not ta or len(ta) != len(tb):
        raise InputError("reports must contain the same number of tables")
    out = {}
    for (na, a), (nb, b) in zip(ta, tb):
        if a.edges.shape != b.edges.shape or not np.allclose(a.edges, b.edges, rtol=0, atol=1e-12):
            raise InputError(f"grid mismatch between {na} and {nb}")
        se = np.sqrt(a.stderr ** 2 + b.stderr ** 2)
        diff = a.heights - b.heights
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(se > 0, diff / se, np.where(diff == 0, 0.0, np.inf))
        entry = {"a": na, "b": nb, "edges": a.edges, "z": z, "max_abs_z": float(np.max(np.abs(z)))}
        ua, ub = report_a.unfolded.get(na), report_b.unfolded.get(nb)
        if ua is not None and ub is not None and ua.size and ub.size:
            ks = stats.ks_2samp(ua, ub)
            entry["ks_statistic"] = float(ks.statistic)
            entry["ks_pvalue"] = float(ks.pvalue)
        out[f"{na}__vs__{nb}"] = entry
    return out


def run_compare(cfg, threads=1):
    cfg.validate()
    if not cfg.report_a or not cfg.report_b:
        raise ConfigError("compare needs report_a and report_b directories")
    t0 = time.perf_counter()
    try:
        a, b = RunReport.from_dir(cfg.report_a), RunReport.from_dir(cfg.report_b)
    except OSError as e:
        raise ConfigError(f"cannot read report: {e}") from None
    report = _new_report(cfg)
    report.discrepancy = compare(a, b)
    report.wall_time = time.perf_counter() - t0
    return report


def run_analytic(cfg, threads=1):
    cfg.validate()
    t0 = time.perf_counter()
    model = cfg.overlay or cfg.kind
    r = cfg.overlay_r if cfg.overlay_r is not None else cfg.forced
    try:
        curve = PredictionCurve.for_model(model, r, cfg.grid)
    except InputError as e:
        raise ConfigError(str(e)) from None
    report = _new_report(cfg)
    report.overlays[curve.label] = curve
    report.wall_time = time.perf_counter() - t0
    return report


RUNNERS = {
    "sample": run_sample,
    "ensemble_density": run_ensemble_density,
    "ensemble_moments": run_ensemble_moments,
    "ec_density": run_ec_density,
    "ec_moments": run_ec_moments,
    "compare": run_compare,
    "analytic": run_analytic,
}


def run(cfg, threads=1):
    return RUNNERS[cfg.experiment](cfg, threads)
