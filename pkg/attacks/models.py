import math
from dataclasses import dataclass, field
from enum import Enum

from core.exceptions import ConfigError, InvalidRatio

METRICS = ("psnr", "ssim")
DOMAINS = ("scene", "message")


class AttackKind(Enum):
    OPACITY_PRUNE = "opacity-prune"
    # proxy for contribution-based pruning tools, ranked by accumulated blend weight
    CONTRIBUTION_PRUNE = "contribution-prune"
    SH_NOISE = "sh-noise"


def check_ratio(ratio: float) -> float:
    ratio = float(ratio)
    if not 0.0 <= ratio < 1.0:
        raise InvalidRatio(f"pruning ratio must lie in [0, 1), got {ratio}")
    return ratio


@dataclass(frozen=True)
class AttackSpec:
    kind: AttackKind = AttackKind.OPACITY_PRUNE
    ratio: float = 0.3
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", AttackKind(self.kind))
        object.__setattr__(self, "ratio", check_ratio(self.ratio))
        if not self.sigma >= 0.0 or math.isinf(self.sigma):
            raise ConfigError(f"noise sigma must be a finite value >= 0, got {self.sigma}")

    @property
    def label(self) -> str:
        if self.kind is AttackKind.SH_NOISE:
            return f"{self.kind.value} sigma={self.sigma:g}"
        return f"{self.kind.value} ratio={self.ratio:g}"


@dataclass(frozen=True)
class MetricScores:
    original: float
    attacked: float


@dataclass(frozen=True)
class RobustnessReport:
    """Scene and message quality before and after one attack.

    ``decay[domain][metric]`` is the relative decay; ``score[metric]`` is the
    scene-minus-message decay gap in percent.
    """

    attack: AttackSpec
    primitives: tuple[int, int]
    scene: dict[str, MetricScores]
    message: dict[str, MetricScores]
    decay: dict[str, dict[str, float]] = field(default_factory=dict)
    score: dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "attack": {"kind": self.attack.kind.value, "ratio": self.attack.ratio, "sigma": self.attack.sigma, "seed": self.attack.seed},
            "label": self.attack.label,
            "primitives": {"before": self.primitives[0], "after": self.primitives[1]},
            "scene": {m: vars(s) for m, s in self.scene.items()},
            "message": {m: vars(s) for m, s in self.message.items()},
            "decay": self.decay,
            "robustness_score": self.score,
        }

    def table_row(self) -> dict:
        row = {"attack": self.attack.label}
        for domain in DOMAINS:
            for metric in METRICS:
                row[f"{domain}_{metric}"] = getattr(self, domain)[metric].attacked
        for metric in METRICS:
            row[f"sr_{metric}"] = self.score[metric]
        return row
