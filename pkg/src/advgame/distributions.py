"""Synthetic data distributions: Gaussian-mixture class conditionals.

The ground truth is a label prior nu together with one Gaussian mixture per
class (diagonal covariance). Everything downstream is grounded in this module:
sampling, exact interval masses on the line, and a trapezoid quadrature oracle
for arbitrary expectations in d <= 2.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr
from scipy.optimize import brentq

from .errors import DimensionMismatch, InvalidInput, UnsupportedDimension
from . import intervals as iv

WEIGHT_TOL = 1e-12
_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianComponent:
    weight: float
    mean: tuple[float, ...]
    var: tuple[float, ...]  # diagonal covariance

    def __post_init__(self):
        if self.weight < 0:
            raise InvalidInput(f"component weight must be >= 0, got {self.weight}")
        if len(self.mean) != len(self.var):
            raise InvalidInput("mean and var must have the same length")
        if any(v <= 0 for v in self.var):
            raise InvalidInput(f"all variances must be > 0, got {self.var}")


@dataclass(frozen=True)
class DistributionSpec:
    """Class prior P(Y=+1) plus per-class Gaussian-mixture conditionals."""

    prior_pos: float
    dimension: int
    components_pos: tuple[GaussianComponent, ...]
    components_neg: tuple[GaussianComponent, ...]

    def __post_init__(self):
        if not 0.0 < self.prior_pos < 1.0:
            raise InvalidInput(f"prior_pos must be in (0, 1), got {self.prior_pos}")
        if self.dimension < 1:
            raise InvalidInput("dimension must be >= 1")
        for name, comps in (("pos", self.components_pos), ("neg", self.components_neg)):
            if not comps:
                raise InvalidInput(f"components_{name} must be nonempty")
            if any(len(c.mean) != self.dimension for c in comps):
                raise InvalidInput(f"components_{name} dimension mismatch")
            total = sum(c.weight for c in comps)
            if abs(total - 1.0) > WEIGHT_TOL:
                raise InvalidInput(
                    f"components_{name} weights sum to {total}, expected 1 within {WEIGHT_TOL}"
                )

    def prior(self, label: int) -> float:
        return self.prior_pos if label == 1 else 1.0 - self.prior_pos

    def components(self, label: int) -> tuple[GaussianComponent, ...]:
        return self.components_pos if label == 1 else self.components_neg

    def bounds(self, k_sigma: float = 8.0) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned box covering k_sigma standard deviations of every component."""
        comps = list(self.components_pos) + list(self.components_neg)
        means = np.array([c.mean for c in comps])
        sds = np.sqrt(np.array([c.var for c in comps]))
        return (means - k_sigma * sds).min(axis=0), (means + k_sigma * sds).max(axis=0)


def two_gaussians_1d(mean_neg: float = -1.0, mean_pos: float = 1.0,
                     var: float = 1.0, prior_pos: float = 0.5) -> DistributionSpec:
    """The workhorse instance: one Gaussian per class on the line."""
    return DistributionSpec(
        prior_pos=prior_pos,
        dimension=1,
        components_pos=(GaussianComponent(1.0, (mean_pos,), (var,)),),
        components_neg=(GaussianComponent(1.0, (mean_neg,), (var,)),),
    )


def _as_points(x, dimension: int) -> tuple[np.ndarray, bool]:
    """Coerce x to an (n, d) array. Returns (points, was_single)."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
        single = True
    elif arr.ndim == 1:
        if dimension == 1 and arr.shape[0] != 1:
            # a batch of scalar points
            arr = arr.reshape(-1, 1)
            single = False
        else:
            arr = arr.reshape(1, -1)
            single = True
    elif arr.ndim == 2:
        single = False
    else:
        raise InvalidInput(f"points must have ndim <= 2, got {arr.ndim}")
    if arr.shape[1] != dimension:
        raise DimensionMismatch(
            f"points have dimension {arr.shape[1]}, spec has {dimension}"
        )
    return arr, single


def density(spec: DistributionSpec, label: int, x) -> float | np.ndarray:
    """Mixture-of-Gaussians density of the class conditional at x."""
    pts, single = _as_points(x, spec.dimension)
    out = np.zeros(pts.shape[0])
    for c in spec.components(label):
        mean = np.asarray(c.mean)
        var = np.asarray(c.var)
        z2 = ((pts - mean) ** 2 / var).sum(axis=1)
        norm = np.prod(np.sqrt(2.0 * math.pi * var))
        out += c.weight * np.exp(-0.5 * z2) / norm
    return float(out[0]) if single else out


def posterior(spec: DistributionSpec, x) -> float | np.ndarray:
    """P(Y=+1 | X=x); 0.5 where both class densities vanish (tie convention)."""
    pts, single = _as_points(x, spec.dimension)
    num = spec.prior_pos * np.asarray(density(spec, +1, pts))
    den = num + (1.0 - spec.prior_pos) * np.asarray(density(spec, -1, pts))
    out = np.where(den > 0.0, np.divide(num, den, out=np.full_like(num, 0.5), where=den > 0.0), 0.5)
    return float(out[0]) if single else out


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LabeledSample:
    point: np.ndarray  # length d
    label: int

    def __post_init__(self):
        if self.label not in (-1, 1):
            raise InvalidInput(f"label must be -1 or +1, got {self.label}")
        object.__setattr__(self, "point", np.atleast_1d(np.asarray(self.point, dtype=float)))


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Labeled sample with the seed that produced it (bit-reproducible)."""

    points: np.ndarray  # (n, d)
    labels: np.ndarray  # (n,) in {-1, +1}
    seed: int | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        labs = np.asarray(self.labels, dtype=int)
        if pts.ndim != 2 or labs.ndim != 1 or pts.shape[0] != labs.shape[0]:
            raise InvalidInput("points must be (n, d) and labels (n,)")
        if not np.all(np.isin(labs, (-1, 1))):
            raise InvalidInput("labels must be in {-1, +1}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labs)

    def __len__(self) -> int:
        return self.points.shape[0]

    def __getitem__(self, i: int) -> LabeledSample:
        return LabeledSample(self.points[i], int(self.labels[i]))

    @property
    def dimension(self) -> int:
        return self.points.shape[1]


def sample_labeled(spec: DistributionSpec, n: int, seed: int) -> EmpiricalMeasure:
    """n i.i.d. draws from the joint; label stream then point stream, in index order."""
    if n < 1:
        raise InvalidInput(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    labels = np.where(rng.random(n) < spec.prior_pos, 1, -1)
    comp_u = rng.random(n)
    normals = rng.standard_normal((n, spec.dimension))
    points = np.empty((n, spec.dimension))
    for label in (1, -1):
        mask = labels == label
        if not mask.any():
            continue
        comps = spec.components(label)
        cumw = np.cumsum([c.weight for c in comps])
        idx = np.searchsorted(cumw, comp_u[mask], side="right").clip(0, len(comps) - 1)
        means = np.array([c.mean for c in comps])[idx]
        sds = np.sqrt(np.array([c.var for c in comps]))[idx]
        points[mask] = means + sds * normals[mask]
    return EmpiricalMeasure(points, labels, seed)


def pushforward_empirical(measure: EmpiricalMeasure, attack) -> EmpiricalMeasure:
    """Replace each point by its per-class attack image; labels and order kept.

    Raises BudgetViolation if any point moves farther than the attack budget
    (plus 1e-9 tolerance) in the attack's norm.
    """
    from .game import check_budget  # local import to keep layering one-way

    moved = np.array(measure.points, copy=True)
    for label in (-1, 1):
        mask = measure.labels == label
        if mask.any():
            moved[mask] = attack.apply(measure.points[mask], label)
    check_budget(measure.points, moved, attack)
    return EmpiricalMeasure(moved, measure.labels, measure.seed)


# ---------------------------------------------------------------------------
# Quadrature oracle
# ---------------------------------------------------------------------------

DEFAULT_RESOLUTION_1D = 2 ** 14
DEFAULT_RESOLUTION_2D = 2 ** 9


@dataclass(frozen=True)
class GridSpec:
    """Uniform-grid description for the quadrature oracle."""

    resolution: int | None = None  # points per axis
    bounds: tuple | None = None    # ((lo, hi), ...) per axis
    k_sigma: float = 8.0


def integrate(f, spec: DistributionSpec, label: int, grid: GridSpec | None = None) -> float:
    """Trapezoid estimate of E[f(X)] for X ~ class conditional, d <= 2.

    f must be vectorized over an (n, d) array of points. Bounds default to
    +-8 sigma of every component on each axis.
    """
    if spec.dimension > 2:
        raise UnsupportedDimension("quadrature oracle only supports d <= 2")
    grid = grid or GridSpec()
    res = grid.resolution or (
        DEFAULT_RESOLUTION_1D if spec.dimension == 1 else DEFAULT_RESOLUTION_2D
    )
    if grid.bounds is not None:
        bounds = [(float(lo), float(hi)) for lo, hi in grid.bounds]
    else:
        lo, hi = spec.bounds(grid.k_sigma)
        bounds = list(zip(lo.tolist(), hi.tolist()))
    axes = [np.linspace(lo, hi, res) for lo, hi in bounds]
    if spec.dimension == 1:
        pts = axes[0].reshape(-1, 1)
        vals = np.asarray(f(pts), dtype=float) * np.asarray(density(spec, label, pts))
        return float(np.trapezoid(vals, axes[0]))
    xx, yy = np.meshgrid(axes[0], axes[1], indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    vals = (np.asarray(f(pts), dtype=float) * np.asarray(density(spec, label, pts))).reshape(xx.shape)
    return float(np.trapezoid(np.trapezoid(vals, axes[1], axis=1), axes[0]))


# ---------------------------------------------------------------------------
# Exact 1-D interval integrals (the closed-form layer)
# ---------------------------------------------------------------------------

def _check_1d(spec: DistributionSpec):
    if spec.dimension != 1:
        raise UnsupportedDimension("closed-form interval integrals need d = 1")


def interval_mass(spec: DistributionSpec, label: int, ivs: list[iv.Iv]) -> float:
    """mu_label(union of intervals), exact via the Gaussian CDF."""
    _check_1d(spec)
    total = 0.0
    for lo, hi in iv.normalize(list(ivs)):
        for c in spec.components(label):
            m, s = c.mean[0], math.sqrt(c.var[0])
            total += c.weight * (ndtr((hi - m) / s) - ndtr((lo - m) / s))
    return float(total)


def _comp_partial_first(m: float, s: float, lo: float, hi: float) -> float:
    """int_lo^hi x dN(m, s^2)(x), exact."""
    a, b = (lo - m) / s, (hi - m) / s
    pdf_a = 0.0 if not math.isfinite(a) else math.exp(-0.5 * a * a) / _SQRT2PI
    pdf_b = 0.0 if not math.isfinite(b) else math.exp(-0.5 * b * b) / _SQRT2PI
    return m * (ndtr(b) - ndtr(a)) + s * (pdf_a - pdf_b)


def interval_first_moment(spec: DistributionSpec, label: int, ivs: list[iv.Iv]) -> float:
    """int over the set of x dmu_label(x), exact."""
    _check_1d(spec)
    total = 0.0
    for lo, hi in iv.normalize(list(ivs)):
        for c in spec.components(label):
            total += c.weight * _comp_partial_first(c.mean[0], math.sqrt(c.var[0]), lo, hi)
    return float(total)


def interval_affine_moment(spec: DistributionSpec, label: int, ivs: list[iv.Iv],
                           const: float, slope: float) -> float:
    """int over the set of (const + slope * x) dmu_label(x), exact."""
    return const * interval_mass(spec, label, ivs) + slope * interval_first_moment(spec, label, ivs)


def interval_abs_moment(spec: DistributionSpec, label: int, ivs: list[iv.Iv], c: float) -> float:
    """int over the set of |x - c| dmu_label(x), exact (split at c)."""
    _check_1d(spec)
    total = 0.0
    for lo, hi in iv.normalize(list(ivs)):
        if hi <= c:
            total += interval_affine_moment(spec, label, [(lo, hi)], c, -1.0)
        elif lo >= c:
            total += interval_affine_moment(spec, label, [(lo, hi)], -c, 1.0)
        else:
            total += interval_affine_moment(spec, label, [(lo, c)], c, -1.0)
            total += interval_affine_moment(spec, label, [(c, hi)], -c, 1.0)
    return float(total)


def bayes_roots(spec: DistributionSpec, scan_points: int = 4097) -> list[float]:
    """Sign changes of nu1*mu1 - nu-1*mu-1 on the line (the Bayes boundary)."""
    _check_1d(spec)
    lo, hi = spec.bounds()
    xs = np.linspace(float(lo[0]), float(hi[0]), scan_points)

    def f(x):
        pts = np.atleast_1d(np.asarray(x, dtype=float)).reshape(-1, 1)
        vals = spec.prior_pos * np.asarray(density(spec, 1, pts)) - (
            1.0 - spec.prior_pos
        ) * np.asarray(density(spec, -1, pts))
        return vals if np.ndim(x) else float(vals[0])

    vals = f(xs)
    roots = []
    sign = np.sign(vals)
    for i in range(len(xs) - 1):
        if sign[i] == 0:
            roots.append(float(xs[i]))
        elif sign[i] * sign[i + 1] < 0:
            roots.append(float(brentq(f, xs[i], xs[i + 1], xtol=1e-14)))
    # dedupe near-identical roots from flat crossings
    out: list[float] = []
    for r in roots:
        if not out or r - out[-1] > 1e-12:
            out.append(r)
    return out


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def spec_to_dict(spec: DistributionSpec) -> dict:
    def comps(cs):
        return [{"weight": c.weight, "mean": list(c.mean), "var": list(c.var)} for c in cs]

    return {
        "prior_pos": spec.prior_pos,
        "dimension": spec.dimension,
        "components_pos": comps(spec.components_pos),
        "components_neg": comps(spec.components_neg),
    }


def spec_from_dict(d: dict) -> DistributionSpec:
    def comps(raw):
        return tuple(
            GaussianComponent(float(c["weight"]), tuple(c["mean"]), tuple(c["var"]))
            for c in raw
        )

    known = {"prior_pos", "dimension", "components_pos", "components_neg"}
    unknown = set(d) - known
    if unknown:
        raise InvalidInput(f"unknown distribution fields: {sorted(unknown)}")
    return DistributionSpec(
        prior_pos=float(d["prior_pos"]),
        dimension=int(d["dimension"]),
        components_pos=comps(d["components_pos"]),
        components_neg=comps(d["components_neg"]),
    )


def spec_to_json(spec: DistributionSpec) -> str:
    return json.dumps(spec_to_dict(spec), indent=2)


def spec_from_json(text: str) -> DistributionSpec:
    return spec_from_dict(json.loads(text))


def measure_to_csv(measure: EmpiricalMeasure, path) -> None:
    d = measure.dimension
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(d)] + ["label"])
        for p, lab in zip(measure.points, measure.labels):
            writer.writerow([repr(float(v)) for v in p] + [int(lab)])


def measure_from_csv(path) -> EmpiricalMeasure:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[-1] != "label" or not all(h == f"x{i}" for i, h in enumerate(header[:-1])):
            raise InvalidInput(f"unexpected CSV header: {header}")
        pts, labs = [], []
        for row in reader:
            pts.append([float(v) for v in row[:-1]])
            labs.append(int(row[-1]))
    return EmpiricalMeasure(np.array(pts), np.array(labs))
