"""Networks: feature extractor with channel-gated blocks, meta learner,
depth estimator; deterministic initialization and single-file checkpoints.

The extractor has three blocks, each conv -> instance norm -> relu ->
2x2 average pool -> channel gate. The gate (an SE-style bottleneck)
splits a block's feature map F into a task branch F+ = a*F that feeds the
next block and a domain branch F- = (1-a)*F that is read only by the
domain-statistics machinery and the gate-entropy head.
"""

from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

EPSILON = 1e-5  # normalization/statistics epsilon, added inside the sqrt
REFERENCE_EXTRACTOR_SEED = 2128506  # frozen bootstrap extractor for epoch 1

CHECKPOINT_MAGIC = b"LDGCKPT1"


class NonFiniteActivationError(RuntimeError):
    """Raised when a forward pass produces NaN/inf activations."""


@dataclass(frozen=True)
class ArchitectureConfig:
    in_channels: int = 6
    channels: tuple[int, ...] = (16, 32, 64)
    reduction_ratio: int = 4
    adaptation_width: int = 32
    depth_size: tuple[int, int] = (8, 8)
    depth_hidden: int = 16

    def validate(self) -> None:
        for c in self.channels:
            if c % 2 != 0:
                raise ValueError(f"channel count {c} must be even for half-channel selection")
            if c % self.reduction_ratio != 0:
                raise ValueError(
                    f"channel count {c} not divisible by reduction ratio {self.reduction_ratio}"
                )


@dataclass
class BlockTrace:
    pre: torch.Tensor  # F, the gate input (post conv/norm/relu/pool)
    attention: torch.Tensor  # a, (N, C) in (0, 1)
    task: torch.Tensor  # F+ = a * F
    domain: torch.Tensor  # F- = (1 - a) * F


@dataclass
class ForwardTrace:
    blocks: list[BlockTrace]
    embedding: torch.Tensor  # (N, C_last), GAP of final task branch
    adaptation: torch.Tensor = None  # h, (N, d_h)
    prob: torch.Tensor = None  # p, (N,) in (0, 1)
    depth_pred: torch.Tensor = None  # (N, hd, wd)


class ChannelGate(nn.Module):
    """SE-style channel gate with an auxiliary class-probability head that
    reads the suppressed (domain) branch."""

    def __init__(self, channels: int, reduction_ratio: int):
        super().__init__()
        self.channels = channels
        self.squeeze = nn.Linear(channels, channels // reduction_ratio, bias=False)
        self.excite = nn.Linear(channels // reduction_ratio, channels, bias=False)
        self.probe = nn.Linear(channels, 1, bias=False)

    def attention(self, feat: torch.Tensor) -> torch.Tensor:
        pooled = feat.mean(dim=(2, 3))
        return torch.sigmoid(self.excite(F.relu(self.squeeze(pooled))))

    def forward(self, feat: torch.Tensor):
        if feat.shape[1] != self.channels:
            raise ValueError(f"expected {self.channels} channels, got {feat.shape[1]}")
        a = self.attention(feat)
        gate = a[:, :, None, None]
        return a, feat * gate, feat * (1.0 - gate)

    def probe_logit(self, f_minus: torch.Tensor) -> torch.Tensor:
        """Class logit computed from the domain branch (entropy-head input)."""
        return self.probe(f_minus.mean(dim=(2, 3))).squeeze(-1)


class ConvBlock(nn.Module):
    """conv3x3 -> instance norm (learnable scale/shift) -> relu -> avgpool2."""

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        self.conv = nn.Conv2d(in_channels, out_channels, kernel_size=3, padding=1)
        self.gamma = nn.Parameter(torch.ones(out_channels))
        self.eta = nn.Parameter(torch.zeros(out_channels))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.conv(x)
        mu = x.mean(dim=(2, 3), keepdim=True)
        var = x.var(dim=(2, 3), unbiased=False, keepdim=True)
        x = (x - mu) / torch.sqrt(var + EPSILON)
        x = self.gamma[None, :, None, None] * x + self.eta[None, :, None, None]
        return F.avg_pool2d(F.relu(x), 2)


class Extractor(nn.Module):
    """Three gated conv blocks; the task branch feeds forward, the domain
    branch is a side tap.

    The classifier embedding concatenates the per-channel spatial mean and
    standard deviation of the final task branch. The instance norm inside
    every block makes plain pooled means nearly sample-invariant, so the
    mean alone starves the classifier; the second-moment half restores a
    usable pathway.
    """

    def __init__(self, arch: ArchitectureConfig):
        super().__init__()
        arch.validate()
        self.arch = arch
        ins = (arch.in_channels,) + tuple(arch.channels[:-1])
        self.blocks = nn.ModuleList(ConvBlock(i, o) for i, o in zip(ins, arch.channels))
        self.gates = nn.ModuleList(ChannelGate(c, arch.reduction_ratio) for c in arch.channels)

    @property
    def embed_dim(self) -> int:
        return 2 * self.arch.channels[-1]

    def forward(self, x: torch.Tensor) -> tuple[list[BlockTrace], torch.Tensor]:
        traces = []
        h = x
        for j, (block, gate) in enumerate(zip(self.blocks, self.gates)):
            feat = block(h)
            if not torch.isfinite(feat).all():
                raise NonFiniteActivationError(f"non-finite activations in block {j + 1}")
            a, f_plus, f_minus = gate(feat)
            traces.append(BlockTrace(pre=feat, attention=a, task=f_plus, domain=f_minus))
            h = f_plus
        # 1e-12 inside the sqrt keeps the gradient finite on dead channels.
        spread = torch.sqrt(h.var(dim=(2, 3), unbiased=False) + 1e-12)
        embedding = torch.cat([h.mean(dim=(2, 3)), spread], dim=1)
        return traces, embedding


class MetaLearner(nn.Module):
    """Adaptation layer (hidden relu features h) followed by a scalar
    live-probability readout."""

    def __init__(self, embed_dim: int, adaptation_width: int):
        super().__init__()
        self.hidden = nn.Linear(embed_dim, adaptation_width)
        self.out = nn.Linear(adaptation_width, 1)

    def forward(self, embedding: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        if embedding.shape[-1] != self.hidden.in_features:
            raise ValueError(
                f"embedding width {embedding.shape[-1]} != {self.hidden.in_features}"
            )
        h = F.relu(self.hidden(embedding))
        p = torch.sigmoid(self.out(h).squeeze(-1))
        return h, p


class DepthHead(nn.Module):
    """Small conv head over mid-level task features, resized to the depth
    target resolution."""

    def __init__(self, in_channels: int, hidden: int, out_size: tuple[int, int]):
        super().__init__()
        self.conv1 = nn.Conv2d(in_channels, hidden, kernel_size=3, padding=1)
        self.conv2 = nn.Conv2d(hidden, 1, kernel_size=3, padding=1)
        self.out_size = tuple(out_size)

    def forward(self, feat: torch.Tensor) -> torch.Tensor:
        x = self.conv2(F.relu(self.conv1(feat)))
        if x.shape[-2:] != self.out_size:
            x = F.interpolate(x, size=self.out_size, mode="bilinear", align_corners=False)
        return x.squeeze(1)


class LivenessModel(nn.Module):
    """Extractor + meta learner + depth estimator.

    Parameter groups: ``extractor_parameters`` (theta_E, includes the gates
    and their probe heads), ``meta_parameters`` (theta_M), and
    ``depth_parameters`` (theta_D).
    """

    def __init__(self, arch: ArchitectureConfig | None = None, dtype: torch.dtype = torch.float32):
        super().__init__()
        self.arch = arch or ArchitectureConfig()
        self.extractor = Extractor(self.arch)
        self.meta = MetaLearner(self.extractor.embed_dim, self.arch.adaptation_width)
        self.depth_head = DepthHead(self.arch.channels[1], self.arch.depth_hidden, self.arch.depth_size)
        self.to(dtype)

    def forward(self, x: torch.Tensor) -> ForwardTrace:
        blocks, embedding = self.extractor(x)
        h, p = self.meta(embedding)
        depth = self.depth_head(blocks[1].task)
        return ForwardTrace(blocks=blocks, embedding=embedding, adaptation=h, prob=p, depth_pred=depth)

    def extractor_parameters(self):
        return list(self.extractor.parameters())

    def meta_parameters(self):
        return list(self.meta.parameters())

    def depth_parameters(self):
        return list(self.depth_head.parameters())


def to_input(images: np.ndarray, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """(N, H, W, 6) arrays -> (N, 6, H, W) tensors."""
    arr = np.ascontiguousarray(np.moveaxis(np.asarray(images), -1, 1))
    return torch.from_numpy(arr.copy()).to(dtype)


def init_parameters(module: nn.Module, seed: int) -> None:
    """Deterministic parameter init from a numpy stream, independent of
    torch's global RNG.

    Conv/linear weights get Kaiming-normal values (std = sqrt(2/fan_in)),
    biases zero; norm scales stay 1 and shifts 0.
    """
    named = sorted(module.named_parameters(), key=lambda kv: kv[0])
    for index, (name, param) in enumerate(named):
        rng = np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), index]))
        with torch.no_grad():
            if name.endswith("gamma"):
                param.fill_(1.0)
            elif name.endswith("eta") or name.endswith("bias"):
                param.zero_()
            else:
                fan_in = int(np.prod(param.shape[1:]))
                std = float(np.sqrt(2.0 / max(fan_in, 1)))
                values = rng.normal(0.0, std, size=tuple(param.shape))
                param.copy_(torch.from_numpy(values).to(param.dtype))


def build_model(
    arch: ArchitectureConfig | None = None,
    seed: int = 0,
    dtype: torch.dtype = torch.float32,
) -> LivenessModel:
    model = LivenessModel(arch, dtype=dtype)
    init_parameters(model, seed)
    return model


def reference_extractor(
    arch: ArchitectureConfig | None = None,
    seed: int = REFERENCE_EXTRACTOR_SEED,
    dtype: torch.dtype = torch.float32,
) -> Extractor:
    """The frozen randomly-initialized extractor used to bootstrap the first
    clustering pass; its parameters are never trained."""
    extractor = Extractor(arch or ArchitectureConfig()).to(dtype)
    init_parameters(extractor, seed)
    extractor.requires_grad_(False)
    extractor.eval()
    return extractor


def save_checkpoint(
    path: str,
    model: LivenessModel,
    epoch: int = 0,
    hyper: dict | None = None,
    extras: dict | None = None,
) -> None:
    """Single-file checkpoint: magic, u64 header length, JSON header, then
    one float32 little-endian blob per parameter tensor (header order)."""
    params = []
    blobs = io.BytesIO()
    offset = 0
    for name, p in sorted(model.named_parameters(), key=lambda kv: kv[0]):
        data = p.detach().cpu().numpy().astype("<f4").tobytes()
        params.append({"name": name, "shape": list(p.shape), "offset": offset, "nbytes": len(data)})
        blobs.write(data)
        offset += len(data)
    header = {
        "format_version": 1,
        "arch": {
            "in_channels": model.arch.in_channels,
            "channels": list(model.arch.channels),
            "reduction_ratio": model.arch.reduction_ratio,
            "adaptation_width": model.arch.adaptation_width,
            "depth_size": list(model.arch.depth_size),
            "depth_hidden": model.arch.depth_hidden,
        },
        "epoch": epoch,
        "hyper": hyper,
        "extras": extras or {},
        "params": params,
    }
    payload = json.dumps(header, sort_keys=True).encode("utf-8")
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(len(payload).to_bytes(8, "little"))
        f.write(payload)
        f.write(blobs.getvalue())
    os.replace(tmp, path)


def load_checkpoint(path: str, dtype: torch.dtype = torch.float32):
    """Returns (model, header). Parameter bytes round-trip exactly at
    float32."""
    with open(path, "rb") as f:
        magic = f.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"{path} is not a checkpoint file")
        header_len = int.from_bytes(f.read(8), "little")
        header = json.loads(f.read(header_len).decode("utf-8"))
        blob = f.read()

    arch = ArchitectureConfig(
        in_channels=header["arch"]["in_channels"],
        channels=tuple(header["arch"]["channels"]),
        reduction_ratio=header["arch"]["reduction_ratio"],
        adaptation_width=header["arch"]["adaptation_width"],
        depth_size=tuple(header["arch"]["depth_size"]),
        depth_hidden=header["arch"]["depth_hidden"],
    )
    model = LivenessModel(arch, dtype=dtype)
    named = dict(model.named_parameters())
    for desc in header["params"]:
        raw = blob[desc["offset"] : desc["offset"] + desc["nbytes"]]
        arr = np.frombuffer(raw, dtype="<f4").reshape(desc["shape"]).copy()
        with torch.no_grad():
            named[desc["name"]].copy_(torch.from_numpy(arr).to(dtype))
    return model, header
