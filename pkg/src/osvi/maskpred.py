"""Memory-based one-shot mask propagation.

Key/value features of the initial frame and of every fifth frame are kept
in a growing memory; each query frame reads it with a query-wise softmax
over raw dot-product scores (no temperature, following the matching rule
as stated), and a skip-connected decoder with CBAM layers turns the read
values into two-class mask logits.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .nn import Cbam, Conv2d, Module
from .tensor import Tensor, concat, matmul, relu, reshape, resample, softmax


@dataclass
class KeyValueMemory:
    keys: Tensor            # (C_K, N*H'W')
    values: Tensor          # (C_V, N*H'W')
    frame_indices: tuple    # source frames, strictly increasing, [0] first

    @property
    def n_frames(self):
        return len(self.frame_indices)


def memory_append(mem, key, value, frame_index):
    """Append one frame's projected key/value tokens; returns a new memory."""
    if key.shape[1] != value.shape[1]:
        raise ContractError(f"key tokens {key.shape} vs value tokens {value.shape}")
    if mem is None:
        if frame_index != 0:
            raise ContractError("memory must start with frame 0")
        return KeyValueMemory(key, value, (0,))
    if frame_index in mem.frame_indices:
        raise ContractError(f"frame {frame_index} already in memory")
    if frame_index < mem.frame_indices[-1]:
        raise ContractError("memory frame indices must increase")
    return KeyValueMemory(
        concat([mem.keys, key], axis=1),
        concat([mem.values, value], axis=1),
        mem.frame_indices + (frame_index,),
    )


def memory_read(mem, query_key):
    """Query-wise softmax attention over memory.

    sim = softmax(K_M^T @ K_Q) normalized per query column; the returned
    V_Q = V_M @ sim carries memory value features to the query frame.
    """
    if mem is None or mem.keys.shape[1] == 0:
        raise ContractError("memory_read on empty memory")
    if query_key.shape[0] != mem.keys.shape[0]:
        raise ContractError(f"key channels {query_key.shape[0]} vs memory {mem.keys.shape[0]}")
    scores = matmul(mem.keys.transpose(), query_key)   # (N*H'W', H'W')
    sim = softmax(scores, axis=0)
    return matmul(mem.values, sim)


@dataclass
class MaskPrediction:
    soft: Tensor            # (H,W) foreground probability
    logits: Tensor = None   # (2,H,W); None for the frame-0 passthrough


class MaskDecoder(Module):
    """V_Q + base features -> two-class logits at full resolution, with a
    CBAM layer after each skip fusion."""

    def __init__(self, rng, c_v=32, c_base=32, skip_channels=(16, 24),
                 reduction=4, spatial_k=7, dtype=np.float32):
        s1, s2 = skip_channels
        self.conv_in = Conv2d(c_v + c_base, 32, 3, rng, dtype=dtype)
        self.conv_mid = Conv2d(32 + s2, 24, 3, rng, dtype=dtype)
        self.cbam_mid = Cbam(24, rng, reduction, spatial_k, dtype=dtype)
        self.conv_fine = Conv2d(24 + s1, 16, 3, rng, dtype=dtype)
        self.cbam_fine = Cbam(16, rng, reduction, spatial_k, dtype=dtype)
        self.conv_out = Conv2d(16, 2, 3, rng, w_std=0.01, dtype=dtype)
        # start biased toward background so early guidance does not mask
        # the whole token grid
        self.conv_out.b.data[:] = np.array([1.0, -1.0], dtype=dtype)

    def __call__(self, vq, enc_frame):
        """vq: (C_V, H'W'); enc_frame: single-frame EncoderOutput."""
        hp, wp = enc_frame.token_hw
        vq_map = reshape(vq, (vq.shape[0], hp, wp))
        x = relu(self.conv_in(concat([vq_map, enc_frame.base], axis=0)))
        x = resample(x, (hp * 2, wp * 2), "bilinear-up")
        x = relu(self.conv_mid(concat([x, enc_frame.skip2], axis=0)))
        x = self.cbam_mid(reshape(x, (1,) + x.shape))[0]
        x = resample(x, (hp * 4, wp * 4), "bilinear-up")
        x = relu(self.conv_fine(concat([x, enc_frame.skip1], axis=0)))
        x = self.cbam_fine(reshape(x, (1,) + x.shape))[0]
        return self.conv_out(x)


def logits_to_prediction(logits):
    """Two-class logits -> MaskPrediction with the foreground-probability
    soft mask."""
    probs = softmax(logits, axis=0)
    return MaskPrediction(soft=probs[1], logits=logits)
