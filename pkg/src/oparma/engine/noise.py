"""Innovation sampling with exact log-space magnitudes for heavy tails.

The heavy-tailed kinds produce magnitudes like e^P with P Pareto(1),
which overflows double precision with probability around 1/700 per
draw.  Every path therefore carries the exact log-magnitudes alongside
linear values; the linear values are clamped at e^700 so downstream
linear algebra saturates instead of producing inf*0 = nan, and every
statistical computation that cares about tails reads the log channel.

Streams are counter-based (Philox) and keyed by (seed, stream): one
stream per replicate makes replicated runs bitwise reproducible no
matter how replicates are chunked or threaded, as long as each
replicate's draws stay sequential within its own stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import exp1

from ..errors import SpecificationError, WindowError

NOISE_KINDS = (
    "gaussian",
    "componentwise_gaussian",
    "pareto_exp",
    "gamma_inv_tail",
    "point_mass",
)

#: kinds sampled as direction * magnitude with an exact log channel
HEAVY_KINDS = ("pareto_exp", "gamma_inv_tail")

#: linear sample magnitudes are clamped at e^CLAMP_LOG
CLAMP_LOG = 700.0

#: direction vectors must be unit to this tolerance
UNIT_TOL = 1e-12

_E_TO_E = math.exp(math.e)


@dataclass(frozen=True)
class NoiseSpec:
    """Innovation distribution: kind, dimension, parameters, base seed.

    Kinds:

    - ``gaussian``: independent N(0, sigma_i^2) components; ``sigma`` may
      be a scalar (broadcast) or a length-d list.
    - ``componentwise_gaussian``: same law, but ``sigmas`` must be the
      full per-component list (the explicit-profile variant).
    - ``pareto_exp``: Z = x * e^P with fixed unit direction x and P
      Pareto of index 1 on [1, inf).  log||Z|| = P, so the log-log
      moment is finite while the log moment is not.
    - ``gamma_inv_tail``: Z = x * X with scalar X drawn from the density
      proportional to 1/(x (log x)^2 log log x) on [x_1, inf), x_1 >= e^e.
      Its log moment diverges, yet slower than any power: the
      gamma-inverse moment is finite.
    - ``point_mass``: the fixed vector ``value``, every draw.
    """

    kind: str
    dim: int
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise SpecificationError(f"unknown noise kind {self.kind!r}")
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise SpecificationError(f"dim must be a positive integer, got {self.dim!r}")
        _validate_params(self.kind, self.dim, self.params)


def _unit_direction(params, d, key="direction"):
    if key in params:
        x = np.asarray(params[key], dtype=complex)
        if x.shape != (d,):
            raise SpecificationError(f"direction must have length {d}, got {x.shape}")
        nrm = np.linalg.norm(x)
        if abs(nrm - 1.0) > UNIT_TOL:
            raise SpecificationError(
                f"direction must be unit norm (got ||x|| = {nrm!r}); normalize it first"
            )
        return x
    x = np.zeros(d, dtype=complex)
    x[0] = 1.0
    return x


def _sigma_vector(params, d, key, allow_scalar):
    raw = params.get(key, 1.0 if allow_scalar else None)
    if raw is None:
        raise SpecificationError(f"missing required param {key!r}")
    arr = np.asarray(raw, dtype=float)
    if arr.ndim == 0:
        if not allow_scalar:
            raise SpecificationError(f"{key!r} must be a per-component list")
        arr = np.full(d, float(arr))
    if arr.shape != (d,):
        raise SpecificationError(f"{key!r} must have length {d}, got {arr.shape}")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise SpecificationError(f"{key!r} entries must be finite and >= 0")
    return arr


def _validate_params(kind, d, params):
    if kind == "gaussian":
        _sigma_vector(params, d, "sigma", allow_scalar=True)
    elif kind == "componentwise_gaussian":
        _sigma_vector(params, d, "sigmas", allow_scalar=False)
    elif kind == "pareto_exp":
        if float(params.get("alpha", 1.0)) != 1.0:
            raise SpecificationError("pareto_exp supports only index alpha = 1")
        _unit_direction(params, d)
    elif kind == "gamma_inv_tail":
        x1 = float(params.get("x1", _E_TO_E))
        if x1 < _E_TO_E * (1 - 1e-12):
            raise SpecificationError(
                f"gamma_inv_tail needs x1 >= e^e ~ {_E_TO_E:.4f} so that "
                f"log log x stays positive; got {x1}"
            )
        _unit_direction(params, d)
    elif kind == "point_mass":
        v = np.asarray(params.get("value", None), dtype=complex)
        if v.shape != (d,):
            raise SpecificationError(f"point_mass needs a length-{d} 'value' vector")


@dataclass
class NoisePath:
    """A contiguous window of innovations Z_t for t_start <= t < t_start + n.

    ``values[i]`` is Z_{t_start + i} with magnitudes clamped at e^700;
    ``log_mags[i]`` is the exact log ||Z_t|| for the scalar-amplitude
    kinds (None for Gaussian kinds, where linear norms are safe).
    ``n_clamped`` counts draws whose linear representation saturated.
    """

    t_start: int
    values: np.ndarray
    log_mags: np.ndarray | None = None
    n_clamped: int = 0

    def __len__(self):
        return self.values.shape[0]

    @property
    def t_stop(self) -> int:
        """One past the last covered time index."""
        return self.t_start + len(self)

    def at(self, t: int) -> np.ndarray:
        if not self.t_start <= t < self.t_stop:
            raise WindowError(
                f"t={t} outside noise window [{self.t_start}, {self.t_stop})"
            )
        return self.values[t - self.t_start]

    def window(self, t0: int, t1: int) -> np.ndarray:
        """Values for t in [t0, t1] (inclusive)."""
        if t0 < self.t_start or t1 >= self.t_stop:
            raise WindowError(
                f"requested [{t0}, {t1}] not covered by noise window "
                f"[{self.t_start}, {self.t_stop})"
            )
        return self.values[t0 - self.t_start : t1 - self.t_start + 1]

    def lognorms(self) -> np.ndarray:
        if self.log_mags is not None:
            return self.log_mags
        nrm = np.linalg.norm(self.values, axis=1)
        with np.errstate(divide="ignore"):
            return np.log(nrm)


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for (seed, stream), platform independent."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


@lru_cache(maxsize=8)
def _gamma_tail_grid(x1: float):
    """Inverse-CDF interpolation table for the gamma_inv_tail law.

    With Y = log X, the tail is P(Y > y) = exp1(log y) / exp1(log y_1)
    exactly (differentiate exp1(log y) to see the density 1/(y^2 log y)
    appear).  Sampling therefore reduces to inverting exp1 on a grid of
    t = log y; the grid spans tail probabilities down to ~1e-17.
    """
    t1 = math.log(math.log(x1))
    t_grid = np.linspace(t1, 40.0, 8192)
    neg_log_tail = -np.log(exp1(t_grid) / exp1(t1))
    return t_grid, neg_log_tail


def _sample_gamma_inv_tail_logmag(rng, n, x1):
    t_grid, neg_log_tail = _gamma_tail_grid(x1)
    v = 1.0 - rng.random(n)  # in (0, 1], avoids -log(0)
    target = -np.log(v)
    t = np.interp(target, neg_log_tail, t_grid)
    return np.exp(t)  # Y = log X = e^t


def sample_path(
    spec: NoiseSpec, count: int, t_start: int = 0, stream: int = 0
) -> NoisePath:
    """Draw ``count`` i.i.d. innovations as a window starting at ``t_start``."""
    if count < 1:
        raise SpecificationError("count must be >= 1")
    d = spec.dim
    p = spec.params
    rng = make_rng(spec.seed, stream)
    if spec.kind in ("gaussian", "componentwise_gaussian"):
        key = "sigma" if spec.kind == "gaussian" else "sigmas"
        sig = _sigma_vector(p, d, key, allow_scalar=spec.kind == "gaussian")
        vals = (rng.standard_normal((count, d)) * sig).astype(complex)
        return NoisePath(t_start=t_start, values=vals)
    if spec.kind == "point_mass":
        v = np.asarray(p["value"], dtype=complex)
        vals = np.tile(v, (count, 1))
        logm = np.full(count, _safe_log(np.linalg.norm(v)))
        return NoisePath(t_start=t_start, values=vals, log_mags=logm)
    if spec.kind == "pareto_exp":
        x = _unit_direction(p, d)
        pareto = 1.0 / (1.0 - rng.random(count))  # inverse CDF of index-1 Pareto
        logm = pareto  # log ||Z|| = P exactly (unit direction)
        clamped = int((pareto > CLAMP_LOG).sum())
        vals = np.exp(np.minimum(pareto, CLAMP_LOG))[:, None] * x[None, :]
        return NoisePath(t_start=t_start, values=vals, log_mags=logm, n_clamped=clamped)
    # gamma_inv_tail
    x = _unit_direction(p, d)
    x1 = float(p.get("x1", _E_TO_E))
    logm = _sample_gamma_inv_tail_logmag(rng, count, x1)
    clamped = int((logm > CLAMP_LOG).sum())
    vals = np.exp(np.minimum(logm, CLAMP_LOG))[:, None] * x[None, :]
    return NoisePath(t_start=t_start, values=vals, log_mags=logm, n_clamped=clamped)


def _safe_log(v: float) -> float:
    return math.log(v) if v > 0 else -math.inf


def heavy_direction(spec: NoiseSpec) -> np.ndarray:
    """The fixed unit direction of a direction * magnitude kind."""
    if spec.kind not in HEAVY_KINDS:
        raise SpecificationError(
            f"kind {spec.kind!r} has no fixed direction (one of {HEAVY_KINDS} does)"
        )
    return _unit_direction(spec.params, spec.dim)


def sample_noise(spec: NoiseSpec, count: int) -> np.ndarray:
    """Plain i.i.d. draws as an (count, d) array (stream 0, window at 0)."""
    return sample_path(spec, count).values


def log_magnitude_samples(spec: NoiseSpec, count: int, stream: int = 0) -> np.ndarray:
    """Exact log ||Z|| draws, free of linear-scale overflow."""
    return sample_path(spec, count, stream=stream).lognorms()
