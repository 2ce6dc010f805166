"""Frame encoder shared by the mask-prediction and completion heads.

Three conv stages at strides 1, 2, 2 expose skip features at full and half
resolution plus stride-4 base features; key/value projections hang off the
base features. The mask channel for value encoding is average-pooled down
to the token grid, while guidance downsampling (a separate op) max-pools,
deliberately dilating rather than shrinking objects at token scale.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, GeometryError
from .nn import Conv2d, Module
from .tensor import Tensor, concat, relu, resample, reshape


@dataclass
class EncoderOutput:
    """Per-frame (or frame-batched) features: base at stride 4 plus skip
    features at strides 1 and 2, all from one pass over the same frame."""
    base: Tensor   # (N, 32, H/4, W/4) or (32, H/4, W/4)
    skip1: Tensor  # (N, 16, H,   W)
    skip2: Tensor  # (N, 24, H/2, W/2)

    def frame(self, t):
        return EncoderOutput(self.base[t], self.skip1[t], self.skip2[t])

    @property
    def token_hw(self):
        return self.base.shape[-2], self.base.shape[-1]


class SharedEncoder(Module):
    def __init__(self, rng, channels=(16, 24, 32), c_k=16, c_v=32, dtype=np.float32):
        c1, c2, c3 = channels
        self.conv1 = Conv2d(3, c1, 3, rng, stride=1, dtype=dtype)
        self.conv2 = Conv2d(c1, c2, 3, rng, stride=2, dtype=dtype)
        self.conv3 = Conv2d(c2, c3, 3, rng, stride=2, dtype=dtype)
        self.key_proj = Conv2d(c3, c_k, 3, rng, dtype=dtype)
        self.value_proj = Conv2d(c3 + 1, c_v, 3, rng, dtype=dtype)
        self.c_k = c_k
        self.c_v = c_v

    def encode(self, frames):
        """frames: (N,3,H,W) or (3,H,W) in [0,1]."""
        h, w = frames.shape[-2], frames.shape[-1]
        if h % 4 or w % 4:
            raise GeometryError(f"frame size {h}x{w} must be divisible by 4")
        s1 = relu(self.conv1(frames))
        s2 = relu(self.conv2(s1))
        base = relu(self.conv3(s2))
        return EncoderOutput(base, s1, s2)

    def project_key(self, enc):
        """Base features -> key tokens (C_K, H'W') (leading N kept if batched)."""
        k = self.key_proj(enc.base)
        if k.ndim == 3:
            return reshape(k, (self.c_k, k.shape[1] * k.shape[2]))
        return reshape(k, (k.shape[0], self.c_k, k.shape[2] * k.shape[3]))

    def project_value(self, enc, mask):
        """Single frame: base + avg-pooled mask channel -> value tokens (C_V, H'W').

        mask: (H,W) Tensor, ground truth at frame 0, predicted soft mask later.
        """
        if enc.base.ndim != 3:
            raise DimensionError("project_value expects a single frame's features")
        hp, wp = enc.token_hw
        h, w = mask.shape[-2], mask.shape[-1]
        if (h, w) != (hp * 4, wp * 4):
            raise GeometryError(f"mask {h}x{w} does not match frame {hp * 4}x{wp * 4}")
        pooled = resample(reshape(mask, (1, h, w)), (hp, wp), "adaptive-avg-pool")
        v = self.value_proj(concat([enc.base, pooled], axis=0))
        return reshape(v, (self.c_v, hp * wp))


def downsample_mask_guidance(mask):
    """(H,W) mask in [0,1] -> flat token-level guidance (H'W',) by max
    pooling: a token counts as object if any covered pixel does."""
    if isinstance(mask, np.ndarray):
        mask = Tensor(mask)
    h, w = mask.shape
    pooled = resample(reshape(mask, (1, h, w)), (h // 4, w // 4), "max-pool")
    return reshape(pooled, ((h // 4) * (w // 4),))
