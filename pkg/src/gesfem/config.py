"""Experiment configuration: one JSON document describing a whole run.

The same schema drives plain runs and convergence studies; convergence modes
additionally carry the refinement ladder and require the radially symmetric
setup (sphere, constant concentration, gradient-flow model) for which the
exact solution is known.
"""

import json
from dataclasses import asdict, dataclass, field

from .diagnostics import RadialSolution
from .errors import ValidationError

MODES = ("run", "converge-space", "converge-time")
SCHEMES = ("P1", "P2")
BOOTSTRAP_MODES = ("auto", "exact", "substep")


@dataclass
class ExperimentConfig:
    """Full description of one experiment."""

    surface: dict = field(default_factory=lambda: {"kind": "sphere", "params": {}})
    mesh_level: int = 2
    mesh_jiggle: float = 0.0
    degree: int = 2
    scheme: str = "P1"
    model: dict = field(
        default_factory=lambda: {"name": "gradient_flow",
                                 "params": {"alpha": 2.0, "D0": 1.0}}
    )
    u0: dict = field(
        default_factory=lambda: {"preset": "constant", "params": {"value": 1.0}}
    )
    bdf_order: int = 2
    tau: float = 1e-3
    t_end: float = 1.0
    output_every: int = 10
    output_dir: str = "out"
    mode: str = "run"
    bootstrap: str = "auto"
    cg_tol: float = 1e-10
    track_errors: bool = False
    write_vtk: bool = True
    levels: list = field(default_factory=list)  # converge-space ladder
    taus: list = field(default_factory=list)  # converge-time ladder

    def validate(self):
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.scheme not in SCHEMES:
            raise ValidationError(f"scheme must be one of {SCHEMES}")
        if self.degree not in (1, 2):
            raise ValidationError("degree must be 1 or 2")
        if not 1 <= self.bdf_order <= 5:
            raise ValidationError("bdf_order must be in 1..5")
        if not self.tau > 0:
            raise ValidationError("tau must be positive")
        if not self.t_end > 0:
            raise ValidationError("t_end must be positive")
        if self.output_every < 1:
            raise ValidationError("output_every must be >= 1")
        if not 0.0 <= self.mesh_jiggle < 0.5:
            raise ValidationError("mesh_jiggle must lie in [0, 0.5)")
        if self.bootstrap not in BOOTSTRAP_MODES:
            raise ValidationError(f"bootstrap must be one of {BOOTSTRAP_MODES}")
        if not isinstance(self.surface, dict) or "kind" not in self.surface:
            raise ValidationError("surface must be a dict with a 'kind'")
        if not isinstance(self.model, dict) or "name" not in self.model:
            raise ValidationError("model must be a dict with a 'name'")
        if not isinstance(self.u0, dict) or "preset" not in self.u0:
            raise ValidationError("u0 must be a dict with a 'preset'")
        if self.mode == "converge-space" and len(self.levels) < 2:
            raise ValidationError("converge-space needs at least two levels")
        if self.mode == "converge-time" and len(self.taus) < 2:
            raise ValidationError("converge-time needs at least two taus")
        if self.mode != "run" and not self.is_radial:
            raise ValidationError(
                "convergence modes require the radial setup: sphere surface, "
                "constant u0, gradient_flow model"
            )
        return self

    @property
    def is_radial(self):
        return (
            self.surface.get("kind") == "sphere"
            and self.u0.get("preset") == "constant"
            and self.model.get("name") == "gradient_flow"
        )

    def radial_solution(self):
        if not self.is_radial:
            return None
        radius = self.surface.get("params", {}).get("radius", 1.0)
        value = self.u0.get("params", {}).get("value", 1.0)
        alpha = self.model.get("params", {}).get("alpha", 0.0)
        return RadialSolution(R0=radius, u0=value, alpha=alpha)

    def to_json(self, indent=2):
        return json.dumps(asdict(self), indent=indent)

    @classmethod
    def from_dict(cls, data):
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data).validate()

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ValidationError(f"invalid JSON config: {err}") from None
        if not isinstance(data, dict):
            raise ValidationError("config root must be a JSON object")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json() + "\n")
