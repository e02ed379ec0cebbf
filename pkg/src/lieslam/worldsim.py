"""Ground-truth simulation and measurement synthesis.

A run is a rigid body moving through a field of static landmarks with a
body-mounted velocity sensor (biased, noisy), body-frame landmark
bearings-with-range, and a pair of inertial direction sensors that is
augmented to a full triad by cross products.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .liegroup import Pose, SlamState, Twist, se3_exp

# Configured reference directions closer than this angle (radians) cannot
# span a triad and are rejected at config time.
_COLLINEAR_TOL = 1e-3


class ConfigError(ValueError):
    """A configuration document failed validation."""


@dataclass(frozen=True)
class LinearProfile:
    """Vector-valued signal const + slope * t (slope defaults to zero)."""

    const: np.ndarray
    slope: np.ndarray

    def __call__(self, t: float) -> np.ndarray:
        return self.const + self.slope * t

    @classmethod
    def parse(cls, raw, key: str) -> "LinearProfile":
        """Accept either a plain 3-vector or {"const": ..., "slope": ...}."""
        if isinstance(raw, dict):
            unknown = set(raw) - {"const", "slope"}
            if unknown:
                raise ConfigError(f"{key}: unknown keys {sorted(unknown)}")
            const = _vec3(raw.get("const", [0.0, 0.0, 0.0]), f"{key}.const")
            slope = _vec3(raw.get("slope", [0.0, 0.0, 0.0]), f"{key}.slope")
            return cls(const, slope)
        return cls(_vec3(raw, key), np.zeros(3))


def _vec3(raw, key: str) -> np.ndarray:
    arr = np.asarray(raw, dtype=float)
    if arr.shape != (3,):
        raise ConfigError(f"{key}: expected 3 numbers, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class WorldConfig:
    """Scenario description: environment, true motion, sensor models."""

    landmarks: np.ndarray          # (n, 3)
    imu_refs: np.ndarray           # (m0, 3) as configured, m0 >= 2
    sensor_weights: np.ndarray     # (m0 + 1,) incl. the synthesized third
    omega_true: LinearProfile
    v_true: LinearProfile
    bias_omega: np.ndarray
    bias_v: np.ndarray
    noise_std_omega: float
    noise_std_v: float
    feature_noise_std: float
    dt: float
    duration: float
    rng_seed: int
    init_rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    init_position: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @property
    def n_landmarks(self) -> int:
        return self.landmarks.shape[0]

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    @classmethod
    def from_dict(cls, raw: dict) -> "WorldConfig":
        if not isinstance(raw, dict):
            raise ConfigError("world: expected an object")
        known = {
            "landmarks", "imu_refs", "sensor_weights", "omega_true", "v_true",
            "bias_omega", "bias_v", "noise_std_omega", "noise_std_v",
            "feature_noise_std", "dt", "duration", "rng_seed",
            "init_rotation", "init_position",
        }
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"world: unknown keys {sorted(unknown)}")
        for req in ("landmarks", "imu_refs", "dt", "duration"):
            if req not in raw:
                raise ConfigError(f"world.{req}: required")

        landmarks = np.asarray(raw["landmarks"], dtype=float)
        if landmarks.ndim != 2 or landmarks.shape[1] != 3:
            raise ConfigError("world.landmarks: expected a list of 3-vectors")
        if landmarks.shape[0] < 3:
            raise ConfigError(
                f"world.landmarks: need at least 3, got {landmarks.shape[0]}"
            )

        imu_refs = np.asarray(raw["imu_refs"], dtype=float)
        if imu_refs.ndim != 2 or imu_refs.shape[1] != 3:
            raise ConfigError("world.imu_refs: expected a list of 3-vectors")
        if imu_refs.shape[0] < 2:
            raise ConfigError("world.imu_refs: need at least 2 directions")
        augmented_refs(imu_refs)  # raises ConfigError if collinear

        n_dirs = imu_refs.shape[0] + 1
        weights = np.asarray(
            raw.get("sensor_weights", np.ones(n_dirs)), dtype=float
        )
        if weights.shape != (n_dirs,):
            raise ConfigError(
                f"world.sensor_weights: expected {n_dirs} weights "
                "(configured refs + synthesized third)"
            )
        if (weights < 0).any() or weights.sum() <= 0:
            raise ConfigError("world.sensor_weights: must be nonnegative, not all zero")
        weights = weights * (3.0 / weights.sum())

        dt = float(raw["dt"])
        duration = float(raw["duration"])
        if dt <= 0 or duration <= 0:
            raise ConfigError("world.dt and world.duration must be positive")

        init_rotation = np.asarray(
            raw.get("init_rotation", np.eye(3).ravel()), dtype=float
        )
        if init_rotation.size != 9:
            raise ConfigError("world.init_rotation: expected 9 scalars (row-major)")
        init_rotation = init_rotation.reshape(3, 3)

        return cls(
            landmarks=landmarks,
            imu_refs=imu_refs,
            sensor_weights=weights,
            omega_true=LinearProfile.parse(raw.get("omega_true", [0, 0, 0]), "world.omega_true"),
            v_true=LinearProfile.parse(raw.get("v_true", [0, 0, 0]), "world.v_true"),
            bias_omega=_vec3(raw.get("bias_omega", [0, 0, 0]), "world.bias_omega"),
            bias_v=_vec3(raw.get("bias_v", [0, 0, 0]), "world.bias_v"),
            noise_std_omega=float(raw.get("noise_std_omega", 0.0)),
            noise_std_v=float(raw.get("noise_std_v", 0.0)),
            feature_noise_std=float(raw.get("feature_noise_std", 0.0)),
            dt=dt,
            duration=duration,
            rng_seed=int(raw.get("rng_seed", 0)),
            init_rotation=init_rotation,
            init_position=_vec3(raw.get("init_position", [0, 0, 0]), "world.init_position"),
        )


@dataclass(frozen=True)
class TrueState(SlamState):
    """Ground-truth pose + (static) landmarks at time t."""

    t: float = 0.0


@dataclass(frozen=True)
class MeasurementBundle:
    """Everything the filters see during one sample interval.

    ``imu_ref`` / ``imu_body`` hold the direction pairs row by row:
    row j is the pair (reference direction, body-frame observation).
    ``t`` labels the interval start; the measurement content itself is
    sampled at the interval midpoint (see ``simulate_world``).
    """

    u_m: Twist
    y: np.ndarray          # (n, 3) body-frame feature vectors
    imu_ref: np.ndarray    # (m, 3) unit rows
    imu_body: np.ndarray   # (m, 3) unit rows
    t: float


def initial_true_state(cfg: WorldConfig) -> TrueState:
    return TrueState(
        pose=Pose(cfg.init_rotation.copy(), cfg.init_position.copy()),
        landmarks=cfg.landmarks,
        t=0.0,
    )


def propagate_true(state: TrueState, u: Twist, dt: float) -> TrueState:
    """Advance the true pose by one interval; landmarks never move."""
    return TrueState(
        pose=state.pose.compose(se3_exp(u, dt)),
        landmarks=state.landmarks,
        t=state.t + dt,
    )


def sample_velocity(u_true: Twist, cfg: WorldConfig, rng: np.random.Generator) -> Twist:
    """Velocity readout: truth plus constant bias plus per-axis noise."""
    omega = u_true.omega + cfg.bias_omega + cfg.noise_std_omega * rng.standard_normal(3)
    v = u_true.v + cfg.bias_v + cfg.noise_std_v * rng.standard_normal(3)
    return Twist(omega, v)


def sample_features(state: TrueState, cfg: WorldConfig, rng: np.random.Generator) -> np.ndarray:
    """Body-frame landmark vectors y_i = R^T (p_i - P), optionally noisy."""
    rel = state.landmarks - state.pose.position
    y = rel @ state.pose.rotation  # row i is R^T (p_i - P)
    if cfg.feature_noise_std > 0.0:
        y = y + cfg.feature_noise_std * rng.standard_normal(y.shape)
    return y


def augmented_refs(imu_refs: np.ndarray) -> np.ndarray:
    """Normalized reference directions plus the synthesized third one.

    The extra direction is the renormalized cross product of the first
    two, which completes a rank-3 triad from two physical sensors.

    Raises
    ------
    ConfigError
        If the first two directions are within 1e-3 rad of collinear.
    """
    refs = np.asarray(imu_refs, dtype=float)
    norms = np.linalg.norm(refs, axis=1)
    if (norms == 0).any():
        raise ConfigError("imu_refs: zero vector is not a direction")
    unit = refs / norms[:, None]
    cross = np.cross(unit[0], unit[1])
    sin_angle = np.linalg.norm(cross)
    if sin_angle < _COLLINEAR_TOL:
        raise ConfigError(
            "imu_refs: first two directions are collinear "
            f"(separation ~{sin_angle:.1e} rad < {_COLLINEAR_TOL:g})"
        )
    return np.vstack([unit, cross / sin_angle])


def sample_imu(state: TrueState, cfg: WorldConfig, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Direction-sensor pairs (reference rows, body rows).

    Body rows are the noise-free transports R^T v of the normalized
    references; the synthesized third body row is the renormalized cross
    product of the first two body rows.  ``rng`` is accepted for
    interface symmetry with the other samplers — the direction sensors
    are modelled unbiased and noise-free.
    """
    refs = augmented_refs(cfg.imu_refs)
    r = state.pose.rotation
    body = refs[:-1] @ r  # row j is R^T ref_j, still unit
    third = np.cross(body[0], body[1])
    third = third / np.linalg.norm(third)
    return refs, np.vstack([body, third])


@dataclass(frozen=True)
class WorldTrace:
    """A full simulated run laid out as arrays.

    Truth is stored at every sample instant k = 0..K; measurement record
    k = 0..K-1 describes the interval [t_k, t_k + dt] and is sampled at
    its midpoint.  ``measurement_state(k)`` returns the truth the record
    was synthesized from; ``true_state(k)`` the truth at instant k.
    """

    cfg: WorldConfig
    times: np.ndarray         # (K + 1,)
    rotations: np.ndarray     # (K + 1, 3, 3)
    positions: np.ndarray     # (K + 1, 3)
    landmarks: np.ndarray     # (n, 3)
    u_m: np.ndarray           # (K, 6) measured twists
    y: np.ndarray             # (K, n, 3)
    imu_ref: np.ndarray       # (m, 3)
    imu_body: np.ndarray      # (K, m, 3)
    mid_rotations: np.ndarray  # (K, 3, 3) truth at interval midpoints
    mid_positions: np.ndarray  # (K, 3)

    def true_state(self, k: int) -> TrueState:
        return TrueState(
            pose=Pose(self.rotations[k], self.positions[k]),
            landmarks=self.landmarks,
            t=float(self.times[k]),
        )

    def measurement_state(self, k: int) -> TrueState:
        """Truth at the midpoint of interval k, where record k is sampled."""
        return TrueState(
            pose=Pose(self.mid_rotations[k], self.mid_positions[k]),
            landmarks=self.landmarks,
            t=float(self.times[k]) + 0.5 * self.cfg.dt,
        )

    def bundle(self, k: int) -> MeasurementBundle:
        return MeasurementBundle(
            u_m=Twist(self.u_m[k, :3], self.u_m[k, 3:]),
            y=self.y[k],
            imu_ref=self.imu_ref,
            imu_body=self.imu_body[k],
            t=float(self.times[k]),
        )


def simulate_world(cfg: WorldConfig, seed: int | None = None) -> WorldTrace:
    """Run the ground-truth propagation and synthesize all measurements.

    Every measurement in record k represents the interval
    [t_k, t_k + dt] through its midpoint: the true twist is sampled at
    the midpoint (which integrates the linear-in-time profiles exactly,
    so a noise-free, bias-free velocity stream reproduces the truth step
    for step), and features and directions are sampled from the
    midpoint pose.  Centering the records keeps the sampled system
    second-order consistent with the continuous one — holding a
    start-of-interval snapshot constant over the sample injects a
    one-sided O(dt) disturbance into any consumer that integrates
    across the interval, and that shows up as spurious energy growth.
    """
    rng = np.random.default_rng(cfg.rng_seed if seed is None else seed)
    k_steps = cfg.n_steps
    n = cfg.n_landmarks
    refs = augmented_refs(cfg.imu_refs)
    m = refs.shape[0]

    times = np.arange(k_steps + 1) * cfg.dt
    rotations = np.empty((k_steps + 1, 3, 3))
    positions = np.empty((k_steps + 1, 3))
    u_m = np.empty((k_steps, 6))
    y = np.empty((k_steps, n, 3))
    imu_body = np.empty((k_steps, m, 3))
    mid_rotations = np.empty((k_steps, 3, 3))
    mid_positions = np.empty((k_steps, 3))

    # One draw per noisy scalar, in the same stream order the samplers
    # would consume individually: (omega, v[, features]) for step k,
    # then step k+1.  Chunked draws read the identical normal sequence.
    if cfg.feature_noise_std > 0.0:
        noise = rng.standard_normal((k_steps, 6 + 3 * n))
        feat_noise = noise[:, 6:].reshape(k_steps, n, 3).copy()
    else:
        noise = rng.standard_normal((k_steps, 6))
        feat_noise = np.zeros((k_steps, 1, 3))
    _kernels.world_trace(
        cfg.init_rotation, cfg.init_position,
        np.ascontiguousarray(cfg.landmarks), refs,
        cfg.omega_true.const, cfg.omega_true.slope,
        cfg.v_true.const, cfg.v_true.slope,
        cfg.bias_omega, cfg.bias_v,
        cfg.noise_std_omega, cfg.noise_std_v, cfg.feature_noise_std,
        np.ascontiguousarray(noise[:, :6]), feat_noise, cfg.dt, k_steps,
        rotations, positions, u_m, y, imu_body, mid_rotations, mid_positions,
    )

    return WorldTrace(
        cfg=cfg,
        times=times,
        rotations=rotations,
        positions=positions,
        landmarks=cfg.landmarks,
        u_m=u_m,
        y=y,
        imu_ref=refs,
        imu_body=imu_body,
        mid_rotations=mid_rotations,
        mid_positions=mid_positions,
    )
