"""Experiment configuration: flat key=value text with dotted prefixes.

Blank lines and `#` comments are ignored; every key must be known and
every value valid before any work starts. Example::

    seed = 0
    data.kind = blobs
    data.classes = 3
    model.blocks = 64,48,32,24
    train.backbone_epochs = 30
    attack.eps_grid = 0,0.05,0.1
    ui.subsets = all; 1,4
    ui.metrics = max_p,ent

Head subsets are semicolon-separated entries; each entry is `all` or a
comma list of 1-based head ids and `a-b` ranges.
"""

from dataclasses import dataclass, field

from .attack import AttackConfig
from .errors import ConfigError
from .train import TrainConfig

METRICS = ("max_p", "ent")


@dataclass
class DataConfig:
    kind: str = "blobs"
    classes: int = 3
    per_class: int = 400
    dim: int = 20
    spread: float = 0.08
    train_frac: float = 0.8
    images: str = ""  # idx kind only
    labels: str = ""
    max_n: int = 0  # 0 = no cap


@dataclass
class ModelConfig:
    blocks: list[int] = field(default_factory=lambda: [64, 48, 32, 24])
    head_hidden: int = 32


@dataclass
class ExperimentConfig:
    seed: int = 0
    output_dir: str = "runs/out"
    data: DataConfig = field(default_factory=DataConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    attack: AttackConfig = field(default_factory=AttackConfig)
    ui_subsets: list[tuple[int, ...]] = field(default_factory=list)  # empty = [all heads]
    ui_metrics: list[str] = field(default_factory=lambda: list(METRICS))
    ablate_subsets: list[tuple[int, ...]] = field(default_factory=list)  # empty = standard five

    @property
    def n_heads(self) -> int:
        return len(self.model.blocks)


def _parse_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None


def _parse_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None


def _parse_int_list(key: str, value: str) -> list[int]:
    return [_parse_int(key, part.strip()) for part in value.split(",") if part.strip()]


def _parse_float_list(key: str, value: str) -> list[float]:
    return [_parse_float(key, part.strip()) for part in value.split(",") if part.strip()]


def parse_subset(entry: str, n_heads: int) -> tuple[int, ...]:
    """One subset entry: `all` or comma ids/ranges like `1-3,10`."""
    entry = entry.strip()
    if entry == "all":
        return tuple(range(1, n_heads + 1))
    ids: list[int] = []
    for part in entry.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo_s, _, hi_s = part.partition("-")
            lo, hi = _parse_int("subset", lo_s), _parse_int("subset", hi_s)
            if lo > hi:
                raise ConfigError(f"subset range {part!r} is reversed")
            ids.extend(range(lo, hi + 1))
        else:
            ids.append(_parse_int("subset", part))
    if len(ids) != len(set(ids)):
        raise ConfigError(f"subset {entry!r} repeats head ids")
    if len(ids) < 2:
        raise ConfigError(f"subset {entry!r} needs at least 2 heads")
    for hid in ids:
        if not 1 <= hid <= n_heads:
            raise ConfigError(f"subset {entry!r}: head id {hid} outside 1..{n_heads}")
    return tuple(sorted(ids))


def _parse_subset_list(value: str, n_heads: int) -> list[tuple[int, ...]]:
    entries = [e for e in (part.strip() for part in value.split(";")) if e]
    if not entries:
        raise ConfigError("subset list is empty")
    return [parse_subset(e, n_heads) for e in entries]


def subset_label(subset: tuple[int, ...]) -> str:
    """Canonical CSV-safe membership string, e.g. `1+2+4`."""
    return "+".join(str(i) for i in subset)


def _round_half_up(x: float) -> int:
    return int(x + 0.5)


def default_ablation_subsets(n_heads: int) -> list[tuple[int, ...]]:
    """The standard five head combinations, scaled to the head count.

    shallow+final, deep 40%, deep 70%, shallow 60%+final, and all heads
    (for 10 heads: {1-3,10}, {7-10}, {4-10}, {1-6,10}, {1-10}).
    """
    n = n_heads
    shallow = max(1, _round_half_up(0.3 * n))
    deep_small = max(2, _round_half_up(0.4 * n))
    deep_large = max(2, _round_half_up(0.7 * n))
    shallow_wide = max(1, _round_half_up(0.6 * n))
    combos = [
        tuple(sorted(set(range(1, shallow + 1)) | {n})),
        tuple(range(n - deep_small + 1, n + 1)),
        tuple(range(n - deep_large + 1, n + 1)),
        tuple(sorted(set(range(1, shallow_wide + 1)) | {n})),
        tuple(range(1, n + 1)),
    ]
    return combos


_KNOWN_KEYS = (
    "seed",
    "output_dir",
    "data.kind",
    "data.classes",
    "data.per_class",
    "data.dim",
    "data.spread",
    "data.train_frac",
    "data.images",
    "data.labels",
    "data.max_n",
    "model.blocks",
    "model.head_hidden",
    "train.backbone_epochs",
    "train.backbone_lr_max",
    "train.cycle_frac",
    "train.head_epochs",
    "train.head_lr",
    "train.batch_size",
    "attack.eps_grid",
    "attack.domain_lo",
    "attack.domain_hi",
    "ui.subsets",
    "ui.metrics",
    "ablate.subsets",
)


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse and fully validate a configuration document."""
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = value

    cfg = ExperimentConfig()

    if "seed" in pairs:
        cfg.seed = _parse_int("seed", pairs["seed"])
        if cfg.seed < 0:
            raise ConfigError("seed must be >= 0")
    if "output_dir" in pairs:
        cfg.output_dir = pairs["output_dir"]

    d = cfg.data
    if "data.kind" in pairs:
        d.kind = pairs["data.kind"]
        if d.kind not in ("blobs", "idx"):
            raise ConfigError(f"data.kind must be blobs or idx, got {d.kind!r}")
    if "data.classes" in pairs:
        d.classes = _parse_int("data.classes", pairs["data.classes"])
    if "data.per_class" in pairs:
        d.per_class = _parse_int("data.per_class", pairs["data.per_class"])
    if "data.dim" in pairs:
        d.dim = _parse_int("data.dim", pairs["data.dim"])
    if "data.spread" in pairs:
        d.spread = _parse_float("data.spread", pairs["data.spread"])
    if "data.train_frac" in pairs:
        d.train_frac = _parse_float("data.train_frac", pairs["data.train_frac"])
    if "data.images" in pairs:
        d.images = pairs["data.images"]
    if "data.labels" in pairs:
        d.labels = pairs["data.labels"]
    if "data.max_n" in pairs:
        d.max_n = _parse_int("data.max_n", pairs["data.max_n"])
    if d.kind == "blobs":
        if d.classes < 2:
            raise ConfigError("data.classes must be >= 2")
        if d.per_class < 1:
            raise ConfigError("data.per_class must be >= 1")
        if d.dim < 2:
            raise ConfigError("data.dim must be >= 2")
        if d.spread < 0:
            raise ConfigError("data.spread must be >= 0")
    else:
        if not d.images or not d.labels:
            raise ConfigError("data.kind = idx requires data.images and data.labels")
        if d.max_n < 0:
            raise ConfigError("data.max_n must be >= 0")
    if not 0.0 < d.train_frac < 1.0:
        raise ConfigError("data.train_frac must lie strictly between 0 and 1")

    if "model.blocks" in pairs:
        cfg.model.blocks = _parse_int_list("model.blocks", pairs["model.blocks"])
    if len(cfg.model.blocks) < 2 or any(w < 1 for w in cfg.model.blocks):
        raise ConfigError("model.blocks needs >= 2 positive widths")
    if "model.head_hidden" in pairs:
        cfg.model.head_hidden = _parse_int("model.head_hidden", pairs["model.head_hidden"])
    if cfg.model.head_hidden < 1:
        raise ConfigError("model.head_hidden must be >= 1")

    t = {}
    if "train.backbone_epochs" in pairs:
        t["backbone_epochs"] = _parse_int("train.backbone_epochs", pairs["train.backbone_epochs"])
    if "train.backbone_lr_max" in pairs:
        t["backbone_lr_max"] = _parse_float("train.backbone_lr_max", pairs["train.backbone_lr_max"])
    if "train.cycle_frac" in pairs:
        t["cycle_frac"] = _parse_float("train.cycle_frac", pairs["train.cycle_frac"])
    if "train.head_epochs" in pairs:
        t["head_epochs"] = _parse_int("train.head_epochs", pairs["train.head_epochs"])
    if "train.head_lr" in pairs:
        t["head_lr"] = _parse_float("train.head_lr", pairs["train.head_lr"])
    if "train.batch_size" in pairs:
        t["batch_size"] = _parse_int("train.batch_size", pairs["train.batch_size"])
    try:
        cfg.train = TrainConfig(seed=cfg.seed, **t)
    except ValueError as exc:
        raise ConfigError(f"train section: {exc}") from exc

    a = {}
    if "attack.eps_grid" in pairs:
        a["eps_grid"] = _parse_float_list("attack.eps_grid", pairs["attack.eps_grid"])
        if not a["eps_grid"]:
            raise ConfigError("attack.eps_grid must list at least one value")
    if "attack.domain_lo" in pairs:
        a["domain_lo"] = _parse_float("attack.domain_lo", pairs["attack.domain_lo"])
    if "attack.domain_hi" in pairs:
        a["domain_hi"] = _parse_float("attack.domain_hi", pairs["attack.domain_hi"])
    try:
        cfg.attack = AttackConfig(**a)
    except ValueError as exc:
        raise ConfigError(f"attack section: {exc}") from exc

    n_heads = cfg.n_heads
    if "ui.subsets" in pairs:
        cfg.ui_subsets = _parse_subset_list(pairs["ui.subsets"], n_heads)
    else:
        cfg.ui_subsets = [tuple(range(1, n_heads + 1))]
    if "ui.metrics" in pairs:
        metrics = [m.strip() for m in pairs["ui.metrics"].split(",") if m.strip()]
        if not metrics or any(m not in METRICS for m in metrics):
            raise ConfigError(f"ui.metrics must pick from {METRICS}")
        cfg.ui_metrics = metrics
    if "ablate.subsets" in pairs:
        cfg.ablate_subsets = _parse_subset_list(pairs["ablate.subsets"], n_heads)
    else:
        cfg.ablate_subsets = default_ablation_subsets(n_heads)

    return cfg


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)
