"""Solver settings. Defaults follow the tuning shipped with the algorithm:
moderate accuracy (1e-3), relaxation 1.6, tiny primal regularization, and
an adaptive step-size that refactors only when iterations have amortized
the previous factorization.
"""

from dataclasses import dataclass, fields


@dataclass
class Settings:
    rho_bar: float = 0.1
    sigma: float = 1e-6
    alpha: float = 1.6
    eps_abs: float = 1e-3
    eps_rel: float = 1e-3
    eps_pinf: float = 1e-4
    eps_dinf: float = 1e-4
    max_iter: int = 4000
    time_limit: float | None = None
    check_termination_every: int = 25
    scaling_iters: int = 10
    scaling_eps: float = 1e-3
    adaptive_rho: bool = True
    adaptive_rho_time_fraction: float = 0.40
    adaptive_rho_change_factor: float = 5.0
    max_rho_updates: int = 50
    rho_min: float = 1e-6
    rho_max: float = 1e6
    equality_rho_multiplier: float = 1e3
    polish: bool = True
    polish_delta: float = 1e-6
    refine_steps: int = 3
    linsys_backend: str = "direct"   # "direct" | "indirect"
    ordering: str = "amd"            # "amd" | "natural"
    cg_tol: float = 1e-8
    cg_max_iter: int = 1000
    freeze_scaling: bool = False     # keep old D, E, c across matrix updates

    def validate(self):
        positive = ["rho_bar", "sigma", "eps_abs", "eps_rel", "eps_pinf",
                    "eps_dinf", "polish_delta", "cg_tol", "rho_min", "rho_max",
                    "equality_rho_multiplier", "scaling_eps",
                    "adaptive_rho_change_factor"]
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.alpha < 2.0:
            raise ValueError("alpha must lie in (0, 2)")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.check_termination_every < 1:
            raise ValueError("check_termination_every must be at least 1")
        if self.scaling_iters < 0 or self.refine_steps < 0:
            raise ValueError("iteration counts must be nonnegative")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time_limit must be positive when set")
        if self.linsys_backend not in ("direct", "indirect"):
            raise ValueError("linsys_backend must be 'direct' or 'indirect'")
        if self.ordering not in ("amd", "natural"):
            raise ValueError("ordering must be 'amd' or 'natural'")
        if self.rho_min > self.rho_max:
            raise ValueError("rho_min must not exceed rho_max")
        return self

    def replace(self, **kwargs):
        new = Settings(**{f.name: getattr(self, f.name) for f in fields(self)})
        for key, val in kwargs.items():
            if not hasattr(new, key):
                raise ValueError(f"unknown setting {key!r}")
            setattr(new, key, val)
        return new.validate()
