from dataclasses import dataclass

from core.exceptions import ConfigError


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 500
    lambda_message: float = 1.0
    lambda_cons: float = 0.02
    # weight of the (1 - SSIM) term in both reconstruction losses
    ssim_weight: float = 0.2
    lr_opacity: float = 0.05
    lr_sh_dc: float = 0.0025
    lr_sh_rest: float = 0.000125
    visibility_every: int = 100
    background: tuple[float, float, float] = (0.0, 0.0, 0.0)
    seed: int = 0
    log_every: int = 100

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if min(self.lambda_message, self.lambda_cons) < 0:
            raise ConfigError("loss weights must be >= 0")
        if not 0.0 <= self.ssim_weight <= 1.0:
            raise ConfigError(f"ssim_weight must lie in [0, 1], got {self.ssim_weight}")
        if min(self.lr_opacity, self.lr_sh_dc, self.lr_sh_rest) < 0:
            raise ConfigError("learning rates must be >= 0")
        if self.visibility_every < 1:
            raise ConfigError(f"visibility_every must be >= 1, got {self.visibility_every}")
        object.__setattr__(self, "background", tuple(float(c) for c in self.background))
        if len(self.background) != 3:
            raise ConfigError("background needs three channels")


@dataclass(frozen=True)
class LossBreakdown:
    iteration: int
    scene: float
    message: float
    consistency: float
    total: float

    @classmethod
    def combine(cls, iteration: int, scene: float, message: float, consistency: float, cfg: TrainConfig) -> "LossBreakdown":
        total = scene + cfg.lambda_message * message + cfg.lambda_cons * consistency
        return cls(iteration, float(scene), float(message), float(consistency), float(total))

    def as_row(self) -> dict:
        return {
            "iteration": self.iteration,
            "scene": self.scene,
            "message": self.message,
            "consistency": self.consistency,
            "total": self.total,
        }
