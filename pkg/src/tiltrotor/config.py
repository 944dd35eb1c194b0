"""Run configuration: YAML file -> validated pydantic tree -> runtime objects.

Every constant the model needs but the vehicle design does not pin down
(inertia, rotor torque ratio, servo lag, gains, scenario geometry, pass/fail
thresholds) lives in the config so tests can pin it explicitly.
"""

import copy
import math
from importlib import resources
from typing import Annotated, Dict, List, Optional

import numpy as np
import yaml
from pydantic import (
    AfterValidator,
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from .controller import ControllerConfig, GainSet
from .errors import ConfigError
from .sim.contact import CartModel, PerchSite
from .sim.metrics import Bound
from .sim.scenarios import BUILTIN_SCENARIOS, PerchSettings, builtin_scenario
from .vehicle import VehicleParams


def _vec3(v):
    if len(v) != 3 or not all(math.isfinite(x) for x in v):
        raise ValueError("expected three finite numbers")
    return v


Vec3 = Annotated[List[float], AfterValidator(_vec3)]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class VehicleSection(_Strict):
    mass: float = Field(gt=0)
    inertia: List[List[float]]
    L_h: float = Field(gt=0)
    L_v: float = Field(gt=0)
    k_f: float = Field(gt=0)
    g: float = 9.81
    F_max: float = Field(gt=0)
    servo_tau: float = Field(gt=0)

    @field_validator("inertia")
    @classmethod
    def _inertia(cls, v):
        I = np.array(v, dtype=float)
        if I.shape != (3, 3):
            raise ValueError("inertia must be a 3x3 matrix")
        if not np.allclose(I, I.T, rtol=0.0, atol=1e-12):
            raise ValueError("inertia must be symmetric")
        if np.min(np.linalg.eigvalsh(I)) <= 0.0:
            raise ValueError("inertia must be positive definite")
        return v

    def build(self):
        return VehicleParams(self.mass, np.array(self.inertia), self.L_h, self.L_v, self.k_f,
                             self.g, self.F_max, self.servo_tau)


class AxisGains(_Strict):
    K_p: float
    K_d: float
    K_i: float


class FullyActuatedGains(_Strict):
    """Diagonals of the five-axis gain matrices, ordered p~1, p~3, roll, pitch, yaw."""

    K_p: List[float] = Field(min_length=5, max_length=5)
    K_d: List[float] = Field(min_length=5, max_length=5)
    K_i: List[float] = Field(min_length=5, max_length=5)


class GainsSection(_Strict):
    underactuated: AxisGains
    fully_actuated: FullyActuatedGains

    def build(self):
        u, f = self.underactuated, self.fully_actuated
        return GainSet(u.K_p, u.K_d, u.K_i, f.K_p, f.K_d, f.K_i)


class ControllerSection(_Strict):
    gains: GainsSection
    margin: float = Field(0.02, gt=0, lt=0.5)
    integral_limit: float = Field(2.0, gt=0)
    derivative_cutoff: float = Field(20.0, gt=0)
    cond_max: float = Field(1e6, gt=1)
    fz_min: float = Field(0.5, gt=0)

    def build(self):
        return ControllerConfig(self.margin, self.integral_limit, self.derivative_cutoff,
                                self.cond_max)


class SimulationSection(_Strict):
    plant_dt: float = Field(2e-4, gt=0)
    control_dt: float = Field(2e-3, gt=0)
    settle_time: float = Field(1.0, ge=0)
    log_every: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _ratio(self):
        ratio = self.control_dt / self.plant_dt
        if round(ratio) < 1 or abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ValueError("control_dt must be an integer multiple of plant_dt")
        return self


class BoundSpec(_Strict):
    min: Optional[float] = None
    max: Optional[float] = None

    @model_validator(mode="after")
    def _one_side(self):
        if self.min is None and self.max is None:
            raise ValueError("a threshold needs min, max or both")
        return self


class _ScenarioBase(_Strict):
    duration: float = Field(gt=0)
    thresholds: Dict[str, BoundSpec] = Field(default_factory=dict)

    def scenario_kwargs(self):
        raise NotImplementedError


class HoverOffsetSection(_ScenarioBase):
    target: Vec3
    position_offset: float
    angle_offset_deg: float = Field(gt=-90, lt=90)

    def scenario_kwargs(self):
        return dict(target=tuple(self.target), position_offset=self.position_offset,
                    angle_offset=math.radians(self.angle_offset_deg))


class Yaw90Section(HoverOffsetSection):
    yaw_deg: float

    def scenario_kwargs(self):
        return dict(super().scenario_kwargs(), yaw=math.radians(self.yaw_deg))


class SquareSection(_ScenarioBase):
    side: float = Field(gt=0)
    period: float = Field(gt=0)
    altitude: float

    def scenario_kwargs(self):
        return dict(side=self.side, period=self.period, altitude=self.altitude)


class PitchSweepSection(_ScenarioBase):
    amplitude_deg: float = Field(ge=0, lt=90)
    period: float = Field(gt=0)
    position: Vec3

    def scenario_kwargs(self):
        return dict(amplitude=math.radians(self.amplitude_deg), period=self.period,
                    position=tuple(self.position))


class CartSection(_Strict):
    mass: float = Field(gt=0)
    static_friction: float = Field(ge=0)
    kinetic_friction: float = Field(ge=0)
    axis: Vec3

    @model_validator(mode="after")
    def _friction(self):
        if self.kinetic_friction > self.static_friction:
            raise ValueError("static_friction must be at least kinetic_friction")
        return self


class PerchSection(_ScenarioBase):
    start: Vec3
    start_yaw_deg: float
    site_point: Vec3
    site_normal: Vec3
    attach_radius: float = Field(gt=0)
    align_tolerance_deg: float = Field(gt=0, lt=90)
    cart: CartSection
    idle_thrust: float = Field(ge=0)
    push_thrust: float = Field(ge=0)
    rotate_time: float = Field(ge=0)
    max_speed: float = Field(gt=0)
    max_rate: float = Field(gt=0)
    min_duration: float = Field(ge=0)

    @field_validator("site_normal")
    @classmethod
    def _nonzero(cls, v):
        if not np.linalg.norm(v) > 0.0:
            raise ValueError("normal must be non-zero")
        return v

    def scenario_kwargs(self):
        site = PerchSite(self.site_point, self.site_normal, self.attach_radius,
                         math.radians(self.align_tolerance_deg))
        c = self.cart
        perch = PerchSettings(site, CartModel(c.mass, c.static_friction, c.kinetic_friction, c.axis),
                              self.idle_thrust, self.push_thrust, self.rotate_time,
                              self.max_speed, self.max_rate, self.min_duration)
        return dict(start=tuple(self.start), start_yaw=math.radians(self.start_yaw_deg),
                    perch=perch)


class ScenariosSection(_Strict):
    hover_offset: HoverOffsetSection
    yaw90_hover: Yaw90Section
    square_xy: SquareSection
    pitch_sweep: PitchSweepSection
    perch_push: PerchSection


class CertificateSection(_Strict):
    terminal: float = Field(1e-3, gt=0)
    coupling: float = Field(1e-3, gt=0)
    residual: float = Field(0.1, gt=0)
    window_fraction: float = Field(0.6, gt=0, le=1)


class RunConfig(_Strict):
    vehicle: VehicleSection
    controller: ControllerSection
    simulation: SimulationSection = Field(default_factory=SimulationSection)
    scenarios: ScenariosSection
    certificate: CertificateSection = Field(default_factory=CertificateSection)
    output_dir: str = "runs"

    # -- runtime objects ------------------------------------------------------

    def params(self):
        return self.vehicle.build()

    def gains(self):
        return self.controller.gains.build()

    def controller_config(self):
        return self.controller.build()

    def scenario_section(self, name):
        if name not in BUILTIN_SCENARIOS:
            raise ConfigError(f"unknown scenario {name!r}; choose from {', '.join(BUILTIN_SCENARIOS)}")
        return getattr(self.scenarios, name)

    def scenario(self, name):
        sec = self.scenario_section(name)
        sim = self.simulation
        return builtin_scenario(name, duration=sec.duration, plant_dt=sim.plant_dt,
                                control_dt=sim.control_dt, settle_time=sim.settle_time,
                                **sec.scenario_kwargs())

    def thresholds(self, name):
        return {k: Bound(b.min, b.max) for k, b in self.scenario_section(name).thresholds.items()}


# ----------------------------------------------------------------------------
# Loading
# ----------------------------------------------------------------------------


def default_config_text():
    return resources.files("tiltrotor").joinpath("default_config.yaml").read_text()


def _format_errors(exc):
    lines = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{path}: {err['msg']}")
    return "\n".join(lines)


def apply_override(tree, assignment):
    """Set ``a.b.c=value`` in a nested dict; the value is parsed as YAML."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form key=value")
    key, raw = assignment.split("=", 1)
    path = [p for p in key.strip().split(".") if p]
    if not path:
        raise ConfigError(f"override {assignment!r} has an empty key")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"override {key}: cannot parse value {raw!r}: {exc}") from None
    node = tree
    for part in path[:-1]:
        if not isinstance(node, dict):
            raise ConfigError(f"override {key}: {part!r} is not a mapping")
        node = node.setdefault(part, {})
    if not isinstance(node, dict):
        raise ConfigError(f"override {key}: parent is not a mapping")
    node[path[-1]] = value
    return tree


def parse_config(tree, overrides=()):
    tree = copy.deepcopy(tree) if tree is not None else {}
    if not isinstance(tree, dict):
        raise ConfigError("config root must be a mapping")
    for item in overrides:
        apply_override(tree, item)
    try:
        return RunConfig.model_validate(tree)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from None


def load_config(path=None, overrides=()):
    """Read and validate a YAML config; ``None`` loads the bundled default.

    Raises
    ------
    ConfigError
        With one ``field.path: message`` line per problem.
    """
    try:
        text = default_config_text() if path is None else open(path).read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path or 'default config'}: {exc}") from None
    return parse_config(tree, overrides)
