"""Run configuration: one JSON file, paths relative to the file, CLI flags override."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .blowup import VerifyConfig


@dataclass
class RunConfig:
    operator: str | None = None
    measure: str | None = None
    points: list = field(default_factory=list)
    seed: int = 0
    resolution: int = 64
    padding: float = 4.0
    eps_count: int = 6
    eps_start: int = 4
    cone_tol: float = 1e-10
    residual_tol: float = 1e-10
    certificate_tol: float = 1e-6
    pointwise_tol: float = 1e-10
    blowup_tol: float = 1e-8
    plancherel_tol: float = 1e-8
    p: float = 2.0
    q: float = 0.5
    strategy: str = "ball"
    samples: int = 64
    afree_resolution: int = 5
    method: str = "both"

    def validate(self):
        tols = [self.cone_tol, self.residual_tol, self.certificate_tol, self.pointwise_tol,
                self.blowup_tol, self.plancherel_tol]
        if any(t <= 0 for t in tols):
            raise ValueError("tolerances must be positive")
        if self.eps_count < 4:
            raise ValueError("the epsilon schedule needs at least 4 entries")
        if not (self.p > 1 and 0 < self.q < 1):
            raise ValueError("certificate exponents need p > 1 and 0 < q < 1")
        if self.method not in ("exact", "sampled", "both"):
            raise ValueError(f"unknown cone method {self.method!r}")
        return self

    @property
    def epsilons(self):
        return [2.0 ** -(self.eps_start + k) for k in range(self.eps_count)]

    def verify_config(self):
        return VerifyConfig(p=self.p, q=self.q, strategy=self.strategy, epsilons=self.epsilons,
                            samples=self.samples, seed=self.seed, resolution=self.resolution,
                            padding=self.padding, afree_resolution=self.afree_resolution,
                            residual_tol=self.residual_tol, certificate_tol=self.certificate_tol,
                            pointwise_tol=self.pointwise_tol, blowup_tol=self.blowup_tol,
                            plancherel_tol=self.plancherel_tol, cone_tol=max(self.cone_tol, 1e-8))

    def echo(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data, base=None):
        data = dict(data)
        flat = {}
        grid = data.pop("grid", {}) or {}
        flat.update({k: grid[k] for k in ("resolution", "padding") if k in grid})
        eps = data.pop("epsilons", {}) or {}
        if "count" in eps:
            flat["eps_count"] = eps["count"]
        if "start" in eps:
            flat["eps_start"] = eps["start"]
        tols = data.pop("tolerances", {}) or {}
        for key in ("cone", "residual", "certificate", "pointwise", "blowup", "plancherel"):
            if key in tols:
                flat[f"{key}_tol"] = tols[key]
        cert = data.pop("certificate", {}) or {}
        flat.update({k: cert[k] for k in ("p", "q", "strategy") if k in cert})
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        flat.update(data)
        cfg = cls(**flat)
        if base is not None:
            for attr in ("operator", "measure"):
                val = getattr(cfg, attr)
                if val is not None and not Path(val).is_absolute():
                    setattr(cfg, attr, str(Path(base) / val))
        cfg.points = [list(map(float, z)) for z in cfg.points]
        return cfg

    @classmethod
    def load(cls, path):
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text()), base=path.parent)
