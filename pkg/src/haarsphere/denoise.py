"""Noise injection, shrinkage rules, PSNR, and the experiment harness.

All three shrinkage rules act on highpass planes only and treat each
direction plane of each level independently; the window statistics of
the local rules live on the per-face rasters of the plane and never
cross a face border.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, LevelRangeError
from .filterbank import FilterBank, spherical_bank
from .signals import SphericalSignal, grids_to_plane, plane_to_grids
from .transform import FrameletCoefficients, decompose_signal, reconstruct_signal

METHODS = ("soft", "localsoft", "bivariate")


@dataclass(frozen=True)
class NoiseSpec:
    """Additive Gaussian noise description; sigma = rate * peak."""

    rate: float
    sigma: float
    seed: int

    @classmethod
    def for_signal(cls, signal: SphericalSignal, rate: float, seed: int) -> "NoiseSpec":
        return cls(rate, rate * signal.peak, seed)


@dataclass(frozen=True)
class ShrinkageParams:
    """Hyperparameters of the shrinkage rules.

    `window_half` = 2 gives the 5x5 window; `r` = 0.3 and a unit filter
    norm match the spherical bank whose highpass rows all have unit
    2-norm.
    """

    method: str = "soft"
    lambda_s: float = None
    window_half: int = 2
    r: float = 0.3
    filter_norm: float = 1.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise DimensionMismatch(f"unknown method {self.method!r}")
        if self.lambda_s is not None and self.lambda_s < 0:
            raise DimensionMismatch("lambda_s must be nonnegative")
        if self.window_half < 1:
            raise DimensionMismatch("window_half must be at least 1")


def add_noise(signal: SphericalSignal, spec: NoiseSpec) -> SphericalSignal:
    """Add seeded i.i.d. Gaussian noise; rate 0 returns the input values."""
    if spec.sigma == 0.0:
        return signal.with_values(signal.values.copy())
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    noise = rng.normal(0.0, spec.sigma, size=signal.values.shape)
    return signal.with_values(signal.values + noise)


def soft_threshold(value, lam):
    """sgn(d) * max(|d| - lam, 0); works on scalars and arrays."""
    value = np.asarray(value, dtype=np.float64)
    out = np.sign(value) * np.maximum(np.abs(value) - lam, 0.0)
    return out if out.ndim else float(out)


def default_soft_lambda(rate: float, peak: float) -> float:
    """Global soft threshold 0.9 * rate * peak."""
    return 0.9 * rate * peak


def _box_mean(grids: np.ndarray, half: int) -> np.ndarray:
    """Mean over the (2*half+1)^2 window, clipped at the grid borders."""
    faces, side, _ = grids.shape
    integral = np.zeros((faces, side + 1, side + 1))
    integral[:, 1:, 1:] = np.cumsum(np.cumsum(grids, axis=1), axis=2)
    start = np.clip(np.arange(side) - half, 0, side)
    stop = np.clip(np.arange(side) + half + 1, 0, side)
    sums = (integral[:, stop[:, None], stop[None, :]]
            - integral[:, start[:, None], stop[None, :]]
            - integral[:, stop[:, None], start[None, :]]
            + integral[:, start[:, None], start[None, :]])
    counts = (stop - start)[:, None] * (stop - start)[None, :]
    return sums / counts


def _local_lambda(plane: np.ndarray, level: int, sigma: float,
                  params: ShrinkageParams) -> np.ndarray:
    """Per-coefficient local-soft threshold, +inf where the window
    energy does not exceed the noise floor (kill rule)."""
    grids = plane_to_grids(plane, level)
    sigma_b = sigma * params.filter_norm
    mean_sq = _box_mean(grids * grids, params.window_half)
    local_sd = np.sqrt(np.maximum(mean_sq - sigma_b * sigma_b, 0.0))
    lam = np.full_like(local_sd, np.inf)
    alive = local_sd > 0.0
    lam[alive] = params.r * sigma_b * sigma_b / local_sd[alive]
    return grids_to_plane(lam)


def _shrink(plane: np.ndarray, lam: np.ndarray) -> np.ndarray:
    killed = np.isinf(lam)
    out = np.where(killed, 0.0,
                   np.sign(plane) * np.maximum(np.abs(plane) - np.where(killed, 0.0, lam), 0.0))
    return out


def apply_soft(coeffs: FrameletCoefficients, lam: float) -> FrameletCoefficients:
    """Soft-threshold every highpass coefficient; lowpass untouched."""
    stacks = tuple(soft_threshold(planes, lam) for planes in coeffs.highpass)
    return FrameletCoefficients(coeffs.coarse_level, coeffs.fine_level,
                                coeffs.roots, coeffs.lowpass, stacks)


def local_soft(coeffs: FrameletCoefficients, sigma: float,
               params: ShrinkageParams) -> FrameletCoefficients:
    """Locally adaptive soft thresholding.

    For each coefficient the threshold is r * sigma_b^2 / sigma_i with
    sigma_i^2 the window mean square minus the noise floor, clamped at
    zero; a zero sigma_i zeroes the coefficient.
    """
    stacks = []
    for level, planes in zip(range(coeffs.coarse_level, coeffs.fine_level),
                             coeffs.highpass):
        new_planes = np.empty_like(planes)
        for s in range(planes.shape[0]):
            lam = _local_lambda(planes[s], level, sigma, params)
            new_planes[s] = _shrink(planes[s], lam)
        stacks.append(new_planes)
    return FrameletCoefficients(coeffs.coarse_level, coeffs.fine_level,
                                coeffs.roots, coeffs.lowpass, tuple(stacks))


def bivariate(coeffs: FrameletCoefficients, sigma: float,
              params: ShrinkageParams) -> FrameletCoefficients:
    """Parent-coupled shrinkage.

    The local-soft threshold is divided by sqrt(1 + (parent/child)^2),
    pairing each coefficient with the same-direction coefficient of its
    quadtree parent; the coarsest highpass level has no parent and
    falls back to the local-soft value.
    """
    stacks = []
    for level, planes in zip(range(coeffs.coarse_level, coeffs.fine_level),
                             coeffs.highpass):
        new_planes = np.empty_like(planes)
        parents = None
        if level > coeffs.coarse_level:
            parents = coeffs.level_planes(level - 1)
        for s in range(planes.shape[0]):
            child = planes[s]
            lam_ls = _local_lambda(child, level, sigma, params)
            if parents is None:
                parent = np.zeros_like(child)
            else:
                parent = np.repeat(parents[s], 4)
            zero_child = child == 0.0
            killed = np.isinf(lam_ls)
            denom = np.sqrt(child * child + parent * parent)
            denom[zero_child] = 1.0  # output is 0 there anyway
            lam = np.where(killed, 0.0, lam_ls) * np.abs(child) / denom
            lam[killed] = np.inf
            out = _shrink(child, lam)
            out[zero_child] = 0.0
            new_planes[s] = out
        stacks.append(new_planes)
    return FrameletCoefficients(coeffs.coarse_level, coeffs.fine_level,
                                coeffs.roots, coeffs.lowpass, tuple(stacks))


def psnr(reference: SphericalSignal, estimate: SphericalSignal) -> float:
    """10 log10(peak^2 / MSE) with the reference's peak; +inf when equal."""
    if reference.level != estimate.level:
        raise LevelRangeError(
            f"levels differ: {reference.level} vs {estimate.level}")
    diff = reference.values - estimate.values
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(reference.peak ** 2 / mse)


def denoise_signal(noisy: SphericalSignal, method: str, rate: float,
                   levels: int, params: ShrinkageParams = None,
                   bank: FilterBank = None) -> SphericalSignal:
    """Decompose `levels` steps, shrink with `method`, reconstruct.

    `rate` scales both the assumed noise deviation and the default
    global threshold via the signal's stored peak.
    """
    if params is None:
        params = ShrinkageParams(method=method)
    if bank is None:
        bank = spherical_bank()
    if not 1 <= levels <= noisy.level:
        raise LevelRangeError(
            f"levels must be in 1..{noisy.level}, got {levels}")
    coarse = noisy.level - levels
    coeffs = decompose_signal(noisy, bank, coarse)
    sigma = rate * noisy.peak
    if method == "soft":
        lam = params.lambda_s
        if lam is None:
            lam = default_soft_lambda(rate, noisy.peak)
        shrunk = apply_soft(coeffs, lam)
    elif method == "localsoft":
        shrunk = local_soft(coeffs, sigma, params)
    elif method == "bivariate":
        shrunk = bivariate(coeffs, sigma, params)
    else:
        raise DimensionMismatch(f"unknown method {method!r}")
    return reconstruct_signal(shrunk, bank, noisy.peak, noisy.provenance)


# ---------------------------------------------------------------------------
# Experiment harness


@dataclass(frozen=True)
class ExperimentCell:
    rate: float
    method: str
    psnr_before: tuple
    psnr_after: tuple

    @property
    def before_mean(self) -> float:
        return float(np.mean(self.psnr_before))

    @property
    def after_mean(self) -> float:
        return float(np.mean(self.psnr_after))

    @property
    def improvement(self) -> float:
        return self.after_mean - self.before_mean

    @property
    def variance(self) -> float:
        return float(np.var(self.psnr_after))


@dataclass(frozen=True)
class ExperimentReport:
    dataset: str
    seed: int
    levels: int
    cells: tuple = field(default_factory=tuple)

    def cell(self, rate: float, method: str) -> ExperimentCell:
        for cell in self.cells:
            if cell.method == method and cell.rate == rate:
                return cell
        raise KeyError((rate, method))

    def to_json(self) -> str:
        payload = {
            "dataset": self.dataset,
            "seed": self.seed,
            "cells": [
                {
                    "rate": cell.rate,
                    "method": cell.method,
                    "psnr_before_mean": cell.before_mean,
                    "psnr_after_mean": cell.after_mean,
                    "improvement": cell.improvement,
                    "variance": cell.variance,
                }
                for cell in self.cells
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _item_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                        spawn_key=(index,)))


def run_experiment(dataset, rates, methods, levels: int, seed: int = 0,
                   dataset_id: str = "dataset",
                   params: ShrinkageParams = None,
                   bank: FilterBank = None) -> ExperimentReport:
    """Noise/denoise each item at every (rate, method) and aggregate.

    The noise draw is derived per item from the master seed, so every
    method in a cell sees the same corrupted signal and reports are
    reproducible byte for byte.
    """
    if not dataset:
        raise DimensionMismatch("dataset must not be empty")
    if bank is None:
        bank = spherical_bank()
    draws = [
        _item_rng(seed, i).standard_normal(item.values.shape[0])
        for i, item in enumerate(dataset)
    ]
    cells = []
    for rate in rates:
        noisy_items = [
            item.with_values(item.values + rate * item.peak * eps)
            for item, eps in zip(dataset, draws)
        ]
        before = tuple(psnr(item, noisy)
                       for item, noisy in zip(dataset, noisy_items))
        for method in methods:
            after = []
            for item, noisy in zip(dataset, noisy_items):
                restored = denoise_signal(noisy, method, rate, levels,
                                          params=params, bank=bank)
                after.append(psnr(item, restored))
            cells.append(ExperimentCell(float(rate), method, before, tuple(after)))
    return ExperimentReport(dataset_id, seed, levels, tuple(cells))
