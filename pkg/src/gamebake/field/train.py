"""Field training: sample rays, render, six-term loss, Adam."""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from ..core import Adam, NanGradientError
from ..metrics import psnr
from ..scene.camera import all_pixel_grid
from .losses import LossWeights, total_loss
from .model import FieldConfig, RadianceField
from .render import RenderSettings, render_image


@dataclass
class TrainConfig:
    steps: int = 4000
    batch_size: int = 1024
    frames_per_batch: int = 8  # rays drawn from this many frames per step
    lr: float = 1e-2
    beta2: float = 0.99
    eps: float = 1e-15
    mlp_lr_scale: float = 0.3
    val_stride: int = 9  # every k-th frame held out (offset 4)
    val_every: int = 0  # 0 = only at the end
    val_frames_per_eval: int = 1
    log_every: int = 50
    snapshot_every: int = 250
    n_sparsity: int = 128
    normal_rays: int = 32
    normal_fd_h: float = 2e-3
    lr_final_scale: float = 0.1  # cosine decay floor as a fraction of lr
    field: FieldConfig = dc_field(default_factory=FieldConfig)
    render: RenderSettings = dc_field(default_factory=RenderSettings)
    weights: LossWeights = dc_field(default_factory=LossWeights)


def split_train_val(n_frames: int, stride: int, offset: int = 4):
    idx = np.arange(n_frames)
    if stride <= 0 or n_frames <= 1:
        return idx.tolist(), []
    val = idx[idx % stride == offset % stride]
    train = idx[idx % stride != offset % stride]
    return train.tolist(), val.tolist()


def build_ray_bank(dataset, frame_indices):
    """Flatten frames into per-ray training arrays (contiguous per frame;
    'spans' maps frame index -> (start, end) row range)."""
    spans = {}
    cursor = 0
    origins, dirs, rgb, frame_id = [], [], [], []
    depth, depth_valid = [], []
    normal, normal_valid = [], []
    sem, sem_valid = [], []
    any_depth = any(dataset.frames[i].has_depth for i in frame_indices)
    any_normal = any(dataset.frames[i].has_normal for i in frame_indices)
    any_sem = any(dataset.frames[i].has_semantic for i in frame_indices)
    for fi in frame_indices:
        fr = dataset.frames[fi]
        cam = fr.camera
        n = cam.width * cam.height
        spans[fi] = (cursor, cursor + n)
        cursor += n
        pixels = all_pixel_grid(cam.width, cam.height)
        dirs.append(cam.pixel_directions(pixels))
        origins.append(np.broadcast_to(cam.translation, (n, 3)).copy())
        rgb.append(fr.image.reshape(-1, 3))
        frame_id.append(np.full(n, fi, dtype=np.int64))
        if any_depth:
            d = fr.depth.reshape(-1) if fr.has_depth else np.zeros(n)
            depth.append(d)
            depth_valid.append((d > 0) if fr.has_depth else np.zeros(n, bool))
        if any_normal:
            if fr.has_normal:
                nw = fr.normal_world().reshape(-1, 3)
                nv = np.linalg.norm(nw, axis=-1) > 0.5
            else:
                nw, nv = np.zeros((n, 3)), np.zeros(n, bool)
            normal.append(nw)
            normal_valid.append(nv)
        if any_sem:
            sem.append(fr.semantic.reshape(-1) if fr.has_semantic else np.zeros(n, np.int64))
            sem_valid.append(np.full(n, fr.has_semantic))
    bank = {
        "origins": np.concatenate(origins),
        "dirs": np.concatenate(dirs),
        "rgb": np.concatenate(rgb),
        "frame": np.concatenate(frame_id),
    }
    if any_depth:
        bank["depth"] = np.concatenate(depth)
        bank["depth_valid"] = np.concatenate(depth_valid)
    if any_normal:
        bank["normal_world"] = np.concatenate(normal)
        bank["normal_valid"] = np.concatenate(normal_valid)
    if any_sem:
        bank["sem"] = np.concatenate(sem)
        bank["sem_valid"] = np.concatenate(sem_valid)
    bank["spans"] = spans
    return bank


def sample_batch_indices(bank, rng, batch_size, frames_per_batch):
    """Ray rows for one step, drawn from a few frames (keeps per-frame depth
    alignment well conditioned)."""
    spans = bank["spans"]
    frames = list(spans)
    k = min(frames_per_batch, len(frames)) or 1
    chosen = rng.choice(len(frames), size=k, replace=False)
    per = batch_size // k
    parts = []
    for j, ci in enumerate(chosen):
        a, b = spans[frames[ci]]
        count = per if j < k - 1 else batch_size - per * (k - 1)
        parts.append(rng.integers(a, b, size=count))
    return np.concatenate(parts)


def evaluate_psnr(field, dataset, indices, settings) -> float:
    if not indices:
        return float("nan")
    vals = []
    for fi in indices:
        fr = dataset.frames[fi]
        out = render_image(field, fr.camera, settings)
        vals.append(psnr(out["rgb"], fr.image))
    vals = [v for v in vals if np.isfinite(v)]
    return float(np.mean(vals)) if vals else float("inf")


def train(dataset, cfg: TrainConfig, seed: int = 0, trace_path=None, log=None):
    """Optimize a fresh field on `dataset`; returns (field, trace list).

    Deterministic for a fixed seed. A non-finite loss aborts and restores the
    last snapshot.
    """
    field = RadianceField(cfg.field, seed=seed)
    train_idx, val_idx = split_train_val(len(dataset.frames), cfg.val_stride)
    bank = build_ray_bank(dataset, train_idx)
    arrays = {k: v for k, v in bank.items() if k != "spans"}

    named = field.named_params()
    params = list(named.values())
    scales = [1.0 if name.endswith("tables") else cfg.mlp_lr_scale for name in named]
    opt = Adam(params, lr=cfg.lr, beta2=cfg.beta2, eps=cfg.eps, lr_scales=scales)

    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xB41]))
    trace = []
    trace_file = open(trace_path, "w") if trace_path else None
    snapshot = field.state_dict()
    snapshot = {k: v.copy() for k, v in snapshot.items()}

    def emit(rec):
        trace.append(rec)
        if trace_file:
            trace_file.write(json.dumps(rec) + "\n")
            trace_file.flush()
        if log:
            log(rec)

    try:
        for step in range(cfg.steps):
            if cfg.lr_final_scale < 1.0 and cfg.steps > 1:
                frac = step / (cfg.steps - 1)
                floor = cfg.lr_final_scale
                opt.lr = cfg.lr * (floor + (1.0 - floor) * 0.5 * (1.0 + np.cos(np.pi * frac)))
            idx = sample_batch_indices(bank, rng, cfg.batch_size, cfg.frames_per_batch)
            batch = {k: v[idx] for k, v in arrays.items()}
            loss, breakdown, _ = total_loss(
                field, batch, cfg.weights, cfg.render, rng,
                n_sparsity=cfg.n_sparsity, normal_rays=cfg.normal_rays,
                normal_fd_h=cfg.normal_fd_h,
            )
            if not np.isfinite(loss.data):
                field.load_state_dict(snapshot)
                emit({"step": step, "event": "abort_nan"})
                break
            opt.zero_grad()
            loss.backward()
            try:
                opt.step()
            except NanGradientError:
                field.load_state_dict(snapshot)
                emit({"step": step, "event": "abort_nan_grad"})
                break
            if (step + 1) % cfg.snapshot_every == 0:
                snapshot = {k: v.copy() for k, v in field.state_dict().items()}
            want_val = cfg.val_every and val_idx and (step + 1) % cfg.val_every == 0
            if step % cfg.log_every == 0 or step == cfg.steps - 1 or want_val:
                rec = {"step": step, "loss": float(loss.data)}
                rec.update({k: v for k, v in breakdown.items()})
                if want_val:
                    sub = val_idx[: cfg.val_frames_per_eval]
                    rec["psnr"] = evaluate_psnr(field, dataset, sub, cfg.render)
                emit(rec)
    finally:
        if trace_file:
            trace_file.close()
    return field, trace
