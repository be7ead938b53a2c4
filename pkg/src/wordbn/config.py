"""Flat key=value run configuration with defaults and CLI overrides.

Config files hold one `key = value` pair per line; `#` starts a
comment. Unknown keys are rejected so typos fail loudly. Values typed
on the command line override the file, which overrides the defaults.
"""

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class PipelineConfig:
    """Every knob of the recognition pipelines in one place."""

    seed: int = 0
    classes: int = 18
    per_class: int = 200
    separability: float = 0.95
    image_height: int = 96
    image_width: int = 288
    train_fraction: float = 0.50
    validation_fraction: float = 0.25
    test_fraction: float = 0.25
    blocks: int = 3
    discretization: str = "per-attribute"
    codebook_k: int = 22
    pca_components: int = 0
    zernike_indices: str = "1,1;2,0;2,2;3,1;3,3"
    classifier: str = "fan"
    window: int = 16
    n_states: int = 5
    q_min: int = 0
    q_max: int = 0
    em_max_iters: int = 100
    em_tol: float = 1e-4
    em_restarts: int = 3

    def __post_init__(self):
        if self.classifier not in ("nb", "tan", "fan", "dbn"):
            raise ValueError(f"unknown classifier {self.classifier!r}")
        if self.discretization not in ("per-attribute", "per-vector"):
            raise ValueError(f"unknown discretization {self.discretization!r}")
        total = self.train_fraction + self.validation_fraction + self.test_fraction
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {total}")
        if (self.q_min == 0) != (self.q_max == 0):
            raise ValueError("q_min and q_max must be set together")
        if self.q_min and self.q_min > self.q_max:
            raise ValueError(f"empty state range {self.q_min}..{self.q_max}")
        self.zernike_index_pairs  # validate the notation eagerly

    @property
    def zernike_index_pairs(self) -> tuple[tuple[int, int], ...]:
        """Moment orders parsed from the `m,n;m,n;...` notation."""
        pairs = []
        for token in self.zernike_indices.split(";"):
            m_text, sep, n_text = token.partition(",")
            if not sep:
                raise ValueError(f"bad moment index {token!r}; expected m,n")
            pairs.append((int(m_text), int(n_text)))
        return tuple(pairs)

    @property
    def q_range(self) -> range | None:
        """Candidate state counts for model selection, or None if fixed."""
        if self.q_min == 0:
            return None
        return range(self.q_min, self.q_max + 1)

    @property
    def split_fractions(self) -> tuple[float, float, float]:
        return (self.train_fraction, self.validation_fraction, self.test_fraction)


_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def _parse_value(key: str, text: str):
    kind = _FIELD_TYPES[key]
    if kind in (int, "int"):
        return int(text)
    if kind in (float, "float"):
        return float(text)
    return text


def parse_config_text(text: str, base: PipelineConfig | None = None) -> PipelineConfig:
    """Apply `key = value` lines on top of a base configuration."""
    cfg = base if base is not None else PipelineConfig()
    overrides = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _FIELD_TYPES:
            raise ValueError(f"line {lineno}: unknown configuration key {key!r}")
        overrides[key] = _parse_value(key, value)
    return replace(cfg, **overrides)


def load_config(path, base: PipelineConfig | None = None) -> PipelineConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), base=base)


def apply_overrides(cfg: PipelineConfig, **overrides) -> PipelineConfig:
    """Override fields with keyword values; None values are ignored."""
    actual = {k: v for k, v in overrides.items() if v is not None}
    unknown = set(actual) - set(_FIELD_TYPES)
    if unknown:
        raise ValueError(f"unknown configuration key {sorted(unknown)[0]!r}")
    return replace(cfg, **actual)


def format_config(cfg: PipelineConfig) -> str:
    """Render a config as reloadable `key = value` lines."""
    lines = []
    for f in fields(PipelineConfig):
        value = getattr(cfg, f.name)
        lines.append(f"{f.name} = {value!r}" if isinstance(value, float) else f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
