"""Unfolding and binned spectral statistics with standard errors."""

from dataclasses import dataclass
import csv
import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_positive, make_grid
from .ensembles import EigenangleSample, Kind
from .exceptions import InputError


@dataclass(frozen=True, eq=False)
class UnfoldedZeros:
    """Unfolded positions of the non-critical zeros of one matrix or L-function.

    ``period`` is set when the values live on a circle (unitary samples), so
    pair statistics can use circular distances.
    """

    values: np.ndarray
    source: str = ""
    excluded_critical: int = 0
    period: float | None = None

    def __post_init__(self):
        arr = np.sort(np.asarray(self.values, dtype=float).ravel())
        if arr.size and arr[0] < 0:
            raise InputError("unfolded values must be nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True, eq=False)
class DensityTable:
    """Histogram estimate on a strictly increasing grid.

    ``sample_count`` is the normaliser (zero sets, reference points or
    spacings, depending on the statistic) and ``counted`` the number of
    items that fell inside the grid, so sum(height * width) equals
    counted / sample_count.
    """

    edges: np.ndarray
    heights: np.ndarray
    stderr: np.ndarray
    sample_count: int
    counted: int = 0
    label: str = ""

    def __post_init__(self):
        for name in ("edges", "heights", "stderr"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.heights.shape != (self.edges.size - 1,) or self.stderr.shape != self.heights.shape:
            raise InputError("heights/stderr must have one entry per bin")
        if np.any(self.heights < 0) or np.any(self.stderr < 0):
            raise InputError("heights and standard errors must be nonnegative")

    @property
    def widths(self):
        return np.diff(self.edges)

    @property
    def centers(self):
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def integral(self):
        return float(np.sum(self.heights * self.widths))

    def rows(self):
        return zip(self.edges[:-1], self.edges[1:], self.heights, self.stderr)

    def to_csv(self, path):
        write_table_csv(path, self.rows())

    @classmethod
    def from_csv(cls, path, sample_count=0, label=""):
        lo, hi, h, se = read_table_csv(path)
        edges = np.append(lo, hi[-1])
        return cls(edges, h, se, sample_count, label=label)


TABLE_COLUMNS = ("bin_left", "bin_right", "height", "stderr")


def write_table_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TABLE_COLUMNS)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])


def read_table_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TABLE_COLUMNS:
            raise InputError(f"{path}: expected columns {','.join(TABLE_COLUMNS)}")
        rows = [[float(r[c]) for c in TABLE_COLUMNS] for r in reader]
    if not rows:
        raise InputError(f"{path}: empty table")
    return tuple(np.array(col) for col in zip(*rows))


# --------------------------------------------------------------------------
# Unfolding
# --------------------------------------------------------------------------

def unfold(sample, total=None):
    """Scale free angles by M_total / (2 pi); forced zeros are dropped."""
    spec = sample.spec
    total = spec.total_degree if total is None else check_positive(total, "total")
    values = np.asarray(sample.angles) * total / (2 * math.pi)
    period = float(total) if spec.kind is Kind.UNITARY else None
    return UnfoldedZeros(values, spec.kind.value, sample.forced_zero_multiplicity, period)


def unfold_angles(angles, spec):
    """Unfold many samples given as an (n, K) array; returns a list of zero sets."""
    angles = np.atleast_2d(np.asarray(angles, dtype=float))
    total = spec.total_degree
    scaled = angles * total / (2 * math.pi)
    period = float(total) if spec.kind is Kind.UNITARY else None
    m = spec.forced_zero_multiplicity
    return [UnfoldedZeros(row, spec.kind.value, m, period) for row in scaled]


def unfold_lzeros(gammas, refined_conductor, central_tol=1e-6, counting=None, source="L"):
    """Unfold L-function zero ordinates.

    Default scaling is gamma * c(L) / (2 pi). ``counting`` may instead be a
    smooth zero-counting function N(t), in which case gamma -> N(gamma).
    Ordinates within ``central_tol`` of 0 are treated as critical zeros and
    excluded.
    """
    c = check_positive(refined_conductor, "refined conductor")
    g = np.asarray(gammas, dtype=float).ravel()
    central = np.abs(g) <= central_tol
    g = np.abs(g[~central])
    values = counting(g) if counting is not None else g * c / (2 * math.pi)
    return UnfoldedZeros(values, source, int(central.sum()))


class Unfolder(TransformerMixin, BaseEstimator):
    """Transformer from EigenangleSample objects (or an angle array) to zero sets."""

    def __init__(self, spec=None):
        self.spec = spec

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        if isinstance(X, np.ndarray):
            if self.spec is None:
                raise InputError("an angle array needs the ensemble spec")
            return unfold_angles(X, self.spec)
        out = []
        for s in X:
            if not isinstance(s, EigenangleSample):
                raise InputError("Unfolder expects EigenangleSample objects")
            out.append(unfold(s))
        return out


# --------------------------------------------------------------------------
# Binned statistics
# --------------------------------------------------------------------------

def _as_sets(zero_sets):
    sets = list(zero_sets)
    if not sets:
        raise InputError("need at least one zero set")
    for z in sets:
        if not isinstance(z, UnfoldedZeros):
            raise InputError("expected UnfoldedZeros instances")
    return sets


def _binomial_table(items, edges, normaliser, label):
    counts, _ = np.histogram(items, bins=edges)
    total = max(items.size, 1)
    width = np.diff(edges)
    p = counts / total
    heights = counts / (normaliser * width)
    stderr = np.sqrt(total * p * (1.0 - p)) / (normaliser * width)
    return DensityTable(edges, heights, stderr, normaliser, int(counts.sum()), label)


def one_level_density(zero_sets, grid=None, label="one_level"):
    """Mean number of unfolded zeros per unit length, bin by bin."""
    sets = _as_sets(zero_sets)
    edges = make_grid(grid)
    items = np.concatenate([z.values for z in sets])
    return _binomial_table(items, edges, len(sets), label)


def _pair_distances(z):
    x = z.values
    if x.size < 2:
        return np.empty(0)
    i, j = np.triu_indices(x.size, 1)
    d = np.abs(x[j] - x[i])
    if z.period is not None:
        d = np.minimum(d, z.period - d)
    return d


def pair_correlation(zero_sets, grid=None, label="pair_correlation"):
    """Unordered pair distances per reference point per unit length.

    The estimate tends to 1 for uncorrelated points. Circular distances are
    used for sets carrying a period.
    """
    sets = _as_sets(zero_sets)
    edges = make_grid(grid)
    dist = np.concatenate([_pair_distances(z) for z in sets])
    points = sum(len(z) for z in sets)
    if points == 0:
        raise InputError("zero sets are all empty")
    return _binomial_table(dist, edges, points, label)


def _spacings(z):
    x = z.values
    if x.size < 2:
        return np.empty(0)
    s = np.diff(x)
    if z.period is not None:
        s = np.append(s, x[0] + z.period - x[-1])
    return s


def nn_spacing(zero_sets, grid=None, label="nn_spacing"):
    """Probability density of consecutive spacings; sets with < 2 values are skipped."""
    sets = _as_sets(zero_sets)
    edges = make_grid(grid)
    sp = np.concatenate([_spacings(z) for z in sets])
    if sp.size == 0:
        raise InputError("no set has two or more values")
    return _binomial_table(sp, edges, sp.size, label)


def mean_spacing(zero_sets):
    sp = np.concatenate([_spacings(z) for z in _as_sets(zero_sets)])
    if sp.size == 0:
        raise InputError("no set has two or more values")
    return float(sp.mean())


def moment_estimator(values, k, blocks=None):
    """Mean of v**k with a jackknife standard error.

    ``blocks`` switches to a delete-one-block jackknife over that many
    contiguous blocks, which stays honest for autocorrelated streams.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise InputError("moment estimator needs at least one value")
    if int(k) != k or k < 1:
        raise InputError(f"k must be a positive integer, got {k!r}")
    p = v ** int(k)
    mean = float(p.mean())
    if np.ptp(p) == 0 or p.size == 1:
        return mean, 0.0
    if blocks is None:
        n = p.size
        loo = (p.sum() - p) / (n - 1)
        se = math.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2))
        return mean, se
    g = int(blocks)
    if not 2 <= g <= p.size:
        raise InputError("blocks must lie in [2, len(values)]")
    groups = np.array_split(p, g)
    sums = np.array([x.sum() for x in groups])
    sizes = np.array([x.size for x in groups])
    loo = (p.sum() - sums) / (p.size - sizes)
    se = math.sqrt((g - 1) / g * np.sum((loo - loo.mean()) ** 2))
    return mean, se


def discrepancy(table, reference, n_sets=None):
    """Per-bin |empirical - reference| in standard-error units.

    The error used is the larger of the empirical binomial error and the
    Poisson error implied by the reference height, so empty bins where the
    model is small do not divide by zero.
    """
    ref = np.asarray(reference, dtype=float)
    if ref.shape != table.heights.shape:
        raise InputError("reference must have one value per bin")
    n = table.sample_count if n_sets is None else n_sets
    model_se = np.sqrt(np.clip(ref, 0, None) / (n * table.widths))
    se = np.maximum(table.stderr, model_se)
    diff = np.abs(table.heights - ref)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, diff / se, np.where(diff > 0, np.inf, 0.0))
    return z


class OneLevelDensity(BaseEstimator):
    def __init__(self, grid=None):
        self.grid = grid

    def fit(self, zero_sets, y=None):
        self.table_ = one_level_density(zero_sets, self.grid)
        return self


class PairCorrelation(BaseEstimator):
    def __init__(self, grid=None):
        self.grid = grid

    def fit(self, zero_sets, y=None):
        self.table_ = pair_correlation(zero_sets, self.grid)
        return self


class NearestNeighborSpacing(BaseEstimator):
    def __init__(self, grid=None):
        self.grid = grid

    def fit(self, zero_sets, y=None):
        self.table_ = nn_spacing(zero_sets, self.grid)
        return self
