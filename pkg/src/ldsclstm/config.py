"""Run configuration stored as flat ``key = value`` text with ``#`` comments."""

from dataclasses import asdict, dataclass, fields


@dataclass
class Config:
    # sizes (tuned on validation data; these defaults suit the synthetic corpora)
    embedding_dim: int = 32
    encoder_hidden: int = 32
    decoder_hidden: int = 64
    decoder_layers: int = 1
    # optimisation
    learning_rate: float = 0.005
    batch_size: int = 16
    epochs: int = 200
    patience: int = 10
    dropout: float = 0.5
    min_count: int = 1
    valid_fraction: float = 0.10
    # model constants
    alpha: float = 1.0
    eta: float = 0.0001
    xi: float = 100.0
    lexical: bool = True
    max_acts: int = 10
    # decoding
    beam_width: int = 10
    max_len: int = 30
    err_lambda: float = 1000.0
    # sentence autoencoder
    ae_epochs: int = 30
    ae_encoder_hidden: int = 32
    ae_embedding_dim: int = 32
    pretrain_k: int = 5000
    seed: int = 0

    def __post_init__(self):
        for name in ("embedding_dim", "encoder_hidden", "decoder_hidden", "batch_size",
                     "beam_width", "max_len", "max_acts", "ae_encoder_hidden",
                     "ae_embedding_dim", "pretrain_k", "min_count"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.decoder_layers != 1:
            raise ValueError("only single-layer decoders are implemented")
        if self.epochs < 0 or self.ae_epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must lie in [0, 1)")
        if self.err_lambda < 0:
            raise ValueError("err_lambda must be >= 0")

    def replace(self, **changes):
        values = asdict(self)
        values.update(changes)
        return Config(**values)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


_ALIASES = {"lambda": "err_lambda"}


def _coerce(kind, raw):
    if kind is bool or kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind is int or kind == "int":
        return int(raw)
    return float(raw)


def _parse_pairs(text):
    types = {f.name: f.type for f in fields(Config)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = _ALIASES.get(key, key)
        if key not in types:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        values[key] = _coerce(types[key], raw)
    return values


def parse_config(text):
    return Config(**_parse_pairs(text))


def apply_overrides(cfg, items):
    """Apply ``key=value`` strings on top of ``cfg``."""
    return cfg.replace(**_parse_pairs("\n".join(items)))


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def format_config(cfg):
    lines = ["# ld-sc-LSTM run configuration"]
    for key, value in asdict(cfg).items():
        lines.append(f"{key} = {str(value).lower() if isinstance(value, bool) else value}")
    return "\n".join(lines) + "\n"


def save_config(cfg, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_config(cfg))
