"""Training loop, evaluation, and dataset loading.

Datasets are directories of paired SPHS files (clean/ and noisy/)
produced by the core CLI; every face raster is an independent training
sample.  Evaluation reassembles the six denoised faces of each signal
and scores PSNR against the clean sphere with its stored peak.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .formats import FACES, read_signal, to_faces
from .model import ModelConfig, SphereDenoiser


@dataclass(frozen=True)
class FacePairs:
    """Flat arrays of matched noisy/clean face rasters."""

    noisy: np.ndarray  # (count, side, side)
    clean: np.ndarray
    peaks: np.ndarray  # per-source-signal peak, repeated per face

    def __len__(self):
        return self.noisy.shape[0]


def load_pairs(dataset_dir) -> FacePairs:
    """Read clean/NNN.sphs and noisy/NNN.sphs pairs into face stacks."""
    root = Path(dataset_dir)
    clean_paths = sorted((root / "clean").glob("*.sphs"))
    if not clean_paths:
        raise FileNotFoundError(f"no clean SPHS files under {root}")
    noisy_faces, clean_faces, peaks = [], [], []
    for clean_path in clean_paths:
        noisy_path = root / "noisy" / clean_path.name
        clean_sig = read_signal(clean_path)
        noisy_sig = read_signal(noisy_path)
        clean_faces.append(to_faces(clean_sig))
        noisy_faces.append(to_faces(noisy_sig))
        peaks.extend([clean_sig.peak] * FACES)
    return FacePairs(np.concatenate(noisy_faces), np.concatenate(clean_faces),
                     np.array(peaks))


def signal_pairs(dataset_dir):
    """Matched (clean, noisy) Signal lists for sphere-level scoring."""
    root = Path(dataset_dir)
    clean_paths = sorted((root / "clean").glob("*.sphs"))
    pairs = []
    for clean_path in clean_paths:
        pairs.append((read_signal(clean_path),
                      read_signal(root / "noisy" / clean_path.name)))
    return pairs


@dataclass
class TrainingCurve:
    epochs: list
    losses: list
    val_psnrs: list

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "loss", "val_psnr"])
            for row in zip(self.epochs, self.losses, self.val_psnrs):
                writer.writerow(row)


def _normalizer(pairs: FacePairs) -> float:
    # single scale for the whole run keeps the map linear-friendly
    return float(np.max(np.abs(pairs.noisy))) or 1.0


def train(model: SphereDenoiser, pairs: FacePairs, config: ModelConfig = None,
          val_pairs: FacePairs = None) -> TrainingCurve:
    """Adam + per-epoch exponential step decay on MSE against clean faces.

    Aborts if the loss goes non-finite.  Zero epochs return the model
    untouched with an empty curve.
    """
    if config is None:
        config = model.config
    curve = TrainingCurve([], [], [])
    if config.epochs == 0:
        return curve
    scale = _normalizer(pairs)
    noisy = torch.from_numpy(pairs.noisy[:, None, :, :] / scale).float()
    clean = torch.from_numpy(pairs.clean[:, None, :, :] / scale).float()
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    scheduler = torch.optim.lr_scheduler.ExponentialLR(optimizer,
                                                       gamma=config.decay)
    loss_fn = nn.MSELoss()
    generator = torch.Generator().manual_seed(config.seed)
    model.train()
    for epoch in range(config.epochs):
        order = torch.randperm(len(pairs), generator=generator)
        epoch_loss = 0.0
        batches = 0
        for start in range(0, len(pairs), config.batch_size):
            idx = order[start:start + config.batch_size]
            optimizer.zero_grad()
            out = model(noisy[idx])
            loss = loss_fn(out, clean[idx])
            if not torch.isfinite(loss):
                raise RuntimeError(f"training diverged at epoch {epoch}")
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.detach())
            batches += 1
        scheduler.step()
        val = math.nan
        if val_pairs is not None:
            val = float(np.mean(face_psnrs(model, val_pairs)))
        curve.epochs.append(epoch + 1)
        curve.losses.append(epoch_loss / max(batches, 1))
        curve.val_psnrs.append(val)
    model.eval()
    return curve


def denoise_faces(model: SphereDenoiser, faces: np.ndarray,
                  scale: float = None) -> np.ndarray:
    """Run the network on a stack of face rasters."""
    if scale is None:
        scale = float(np.max(np.abs(faces))) or 1.0
    with torch.no_grad():
        x = torch.from_numpy(faces[:, None, :, :] / scale).float()
        out = model(x).numpy()[:, 0] * scale
    return out.astype(np.float64)


def face_psnrs(model: SphereDenoiser, pairs: FacePairs) -> np.ndarray:
    out = denoise_faces(model, pairs.noisy)
    mse = np.mean((out - pairs.clean) ** 2, axis=(1, 2))
    return 10.0 * np.log10(pairs.peaks ** 2 / np.maximum(mse, 1e-300))


def sphere_psnr(clean_values: np.ndarray, estimate: np.ndarray,
                peak: float) -> float:
    """PSNR over all six faces jointly; +inf when the estimate is exact."""
    mse = float(np.mean((clean_values - estimate) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak ** 2 / mse)


def evaluate(model: SphereDenoiser, dataset_dir, rate: float,
             seeds_used=None) -> dict:
    """Score a paired dataset sphere by sphere; returns one report cell."""
    from .formats import from_faces

    before, after = [], []
    for clean_sig, noisy_sig in signal_pairs(dataset_dir):
        noisy_faces = to_faces(noisy_sig)
        denoised = denoise_faces(model, noisy_faces)
        before.append(sphere_psnr(clean_sig.values, noisy_sig.values,
                                  clean_sig.peak))
        after.append(sphere_psnr(clean_sig.values, from_faces(denoised),
                                 clean_sig.peak))
    return {
        "rate": rate,
        "method": "cnn",
        "psnr_before_mean": float(np.mean(before)),
        "psnr_after_mean": float(np.mean(after)),
        "improvement": float(np.mean(after) - np.mean(before)),
        "variance": float(np.var(after)),
    }


def write_report(path, dataset: str, seed: int, cells: list) -> None:
    payload = {"dataset": dataset, "seed": seed, "cells": cells}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_checkpoint(model: SphereDenoiser, path) -> None:
    torch.save(model.state_dict(), path)


def load_checkpoint(model: SphereDenoiser, path) -> SphereDenoiser:
    model.load_state_dict(torch.load(path, weights_only=True))
    model.eval()
    return model
