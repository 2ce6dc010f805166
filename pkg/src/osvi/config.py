"""Run configuration: model geometry, training hyperparameters, ablation
flags, and the plain-text ``key = value`` config file format."""
from dataclasses import asdict, dataclass, field, fields

from .errors import ContractError, DataError


@dataclass
class ModelConfig:
    enc_channels: tuple = (16, 24, 32)
    c_k: int = 16
    c_v: int = 32
    c_t: int = 32
    heads: int = 4
    blocks: int = 4
    mlp_ratio: int = 2
    memory_interval: int = 5
    guidance_mode: str = "key-side"      # or "paper-literal"
    cbam_reduction: int = 4
    cbam_kernel: int = 7
    separate_encoders: bool = False
    disc_channels: tuple = (8, 16, 32)


@dataclass
class TrainConfig:
    batch: int = 4
    snippet_len: int = 7
    height: int = 48
    width: int = 80
    iterations: int = 2000
    lr: float = 1e-4
    seed: int = 0
    checkpoint_every: int = 100
    # ablation flags (one binary, flags select the variant)
    no_mask_loss: bool = False
    no_mask_guidance: bool = False
    stb_masked: bool = False
    detach_masks: bool = False
    separate_encoders: bool = False
    no_gan: bool = False
    guidance_mode: str = "key-side"
    # model size overrides
    c_t: int = 32
    heads: int = 4
    blocks: int = 4

    def __post_init__(self):
        if self.batch < 1:
            raise ContractError("batch must be >= 1")
        if self.snippet_len < 2:
            raise ContractError("snippet_len must be >= 2")

    def model_config(self):
        return ModelConfig(
            c_t=self.c_t, heads=self.heads, blocks=self.blocks,
            guidance_mode=self.guidance_mode,
            separate_encoders=self.separate_encoders,
        )

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise DataError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def _parse_value(field_type, raw):
    raw = raw.strip()
    if field_type is bool:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise DataError(f"not a boolean: {raw!r}")
    if field_type is int:
        return int(raw)
    if field_type is float:
        return float(raw)
    return raw


def load_config_file(path, base=None):
    """Parse ``key = value`` lines ('#' comments) into a TrainConfig."""
    cfg = base if base is not None else TrainConfig()
    types = {f.name: f.type for f in fields(TrainConfig)}
    pytypes = {"int": int, "float": float, "bool": bool, "str": str}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = (s.strip() for s in line.split("=", 1))
            if key not in types:
                raise DataError(f"{path}:{lineno}: unknown config key {key!r}")
            ftype = types[key]
            if isinstance(ftype, str):
                ftype = pytypes.get(ftype, str)
            setattr(cfg, key, _parse_value(ftype, raw))
    return cfg
