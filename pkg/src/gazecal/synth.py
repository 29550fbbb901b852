"""Synthetic miscalibration scenarios with known ground truth.

Latent gaze means are drawn uniformly from ``[-mean_range, mean_range]``;
the truth adds Gaussian or Student-t noise scaled by ``sigma_true``. The
simulated predictor reports ``latent + mean_bias`` with variance
``(variance_scale * sigma_true)**2``, so it is exactly calibrated only when
the scale is 1, the bias is 0 and the noise is Gaussian.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
import math
from typing import Optional

import numpy as np

from gazecal import rng
from gazecal.distributions import std_normal_cdf, std_normal_quantile
from gazecal.predictions import PredictionSet

__all__ = [
    "CHUNK_SIZE",
    "SCENARIOS",
    "SynthConfig",
    "analytic_coverage_variance_scaled",
    "generate_scenario",
    "scenario",
]

# samples per independent random stream; part of the reproducibility contract
CHUNK_SIZE = 4096
_MAX_REDRAWS = 64
_LIMITS = np.array([math.pi / 2, math.pi])


@dataclass(frozen=True)
class SynthConfig:
    n_samples: int = 1000
    seed: int = 0
    noise: str = "gaussian"
    nu: float = 3.0
    sigma_true_pitch: float = 0.1
    sigma_true_yaw: float = 0.1
    variance_scale: float = 1.0
    mean_bias: tuple[float, float] = (0.0, 0.0)
    mean_range: float = 0.3

    def __post_init__(self):
        object.__setattr__(self, "mean_bias", tuple(float(b) for b in self.mean_bias))
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise ValueError(f"n_samples must be a positive integer, got {self.n_samples}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.noise not in ("gaussian", "student_t"):
            raise ValueError(f"noise must be 'gaussian' or 'student_t', got {self.noise!r}")
        if self.noise == "student_t" and not self.nu > 2:
            raise ValueError(f"student_t noise needs nu > 2, got {self.nu}")
        for name in ("sigma_true_pitch", "sigma_true_yaw", "variance_scale"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v}")
        if len(self.mean_bias) != 2 or not all(map(math.isfinite, self.mean_bias)):
            raise ValueError("mean_bias must be a finite (pitch, yaw) pair")
        if not (math.isfinite(self.mean_range) and self.mean_range >= 0):
            raise ValueError(f"mean_range must be finite and >= 0, got {self.mean_range}")
        if self.mean_range >= math.pi / 2:
            raise ValueError("mean_range must stay below pi/2 so pitch truths are valid")

    @property
    def sigma_true(self) -> np.ndarray:
        return np.array([self.sigma_true_pitch, self.sigma_true_yaw])

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mean_bias"] = list(self.mean_bias)
        return d


SCENARIOS = {
    "well_specified": {},
    "overconfident": {"variance_scale": 0.5},
    "underconfident": {"variance_scale": 2.0},
    "biased": {"mean_bias": (0.05, 0.05)},
    "heavy_tailed": {"noise": "student_t", "nu": 3.0},
}


def scenario(name: str, **overrides) -> SynthConfig:
    """Config for a named scenario from :data:`SCENARIOS`."""
    try:
        base = SCENARIOS[name]
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None
    return replace(SynthConfig(**base), **overrides)


def _noise(gen: np.random.Generator, cfg: SynthConfig, size) -> np.ndarray:
    if cfg.noise == "gaussian":
        return gen.standard_normal(size)
    return gen.standard_t(cfg.nu, size)


def _chunk(cfg: SynthConfig, index: int, size: int):
    gen = rng.stream(cfg.seed, index)
    latent = gen.uniform(-cfg.mean_range, cfg.mean_range, size=(size, 2))
    noise = _noise(gen, cfg, (size, 2))
    truth = latent + noise * cfg.sigma_true
    # heavy tails can leave the valid angle range; redraw those entries
    for _ in range(_MAX_REDRAWS):
        bad = np.abs(truth) > _LIMITS
        if not bad.any():
            break
        fresh = _noise(gen, cfg, int(bad.sum()))
        truth[bad] = latent[bad] + fresh * np.broadcast_to(cfg.sigma_true, truth.shape)[bad]
    else:
        raise ValueError("scenario keeps producing out-of-range angles; reduce sigma_true")
    return latent, truth


def generate_scenario(cfg: SynthConfig, workers: Optional[int] = None) -> PredictionSet:
    """Draw a labeled prediction set; identical for any ``workers`` value."""
    n = int(cfg.n_samples)
    sizes = [min(CHUNK_SIZE, n - start) for start in range(0, n, CHUNK_SIZE)]
    jobs = list(enumerate(sizes))
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: _chunk(cfg, *job), jobs))
    else:
        parts = [_chunk(cfg, *job) for job in jobs]
    latent = np.concatenate([p[0] for p in parts])
    truth = np.concatenate([p[1] for p in parts])
    mean = latent + np.asarray(cfg.mean_bias)
    var = np.broadcast_to((cfg.variance_scale * cfg.sigma_true) ** 2, (n, 2))
    width = len(str(n - 1))
    ids = tuple(f"s{i:0{width}d}" for i in range(n))
    return PredictionSet(ids, mean, var, truth)


def analytic_coverage_variance_scaled(alpha: float, p: float) -> float:
    """True one-sided coverage ``Phi(alpha * Phi^-1(p))`` of a quantile whose
    predicted standard deviation is ``alpha`` times the real one."""
    if not (math.isfinite(alpha) and alpha > 0):
        raise ValueError(f"alpha must be finite and > 0, got {alpha}")
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must satisfy 0 < p < 1, got {p}")
    return std_normal_cdf(alpha * std_normal_quantile(p))
