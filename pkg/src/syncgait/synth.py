"""Parametric synthetic subjects: physically consistent paired IMU and
keypoint streams with analytic ground truth, plus attack stream generators
(relay, hijack, mimicry).

The arm is a shoulder-elbow-wrist chain of phase-locked sinusoids; the phone
rides the wrist, so accelerometer/gyroscope/magnetometer follow from the
analytic wrist trajectory and phone orientation. Keypoints are the pinhole
projection of the walking body as seen from the hovering camera.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidDuration
from .gait import cycle_boundaries
from .orientation import EulerAngles, Quaternion, euler_to_quaternion
from .series import ImuSeries, KeypointFrame, KeypointSeries, Series1D

WALK_SPEED = 1.2          # m/s, default approach speed
MAG_WORLD = np.array([22.0, 0.0, -43.0])   # microtesla, mid-latitude field
GRAVITY_WORLD = np.array([0.0, 0.0, 9.81])


@dataclass(frozen=True)
class SubjectParams:
    cycle_period: float = 1.5       # s
    swing_amplitude: float = 0.4    # rad
    swing_phase: float = 0.0        # rad
    swing_azimuth: float = 0.35     # rad, cross-body tilt of the swing plane
    elbow_flexion: float = 0.35     # rad
    arm_length: float = 0.72        # m
    height: float = 1.72            # m
    imu_noise: float = 0.05         # m/s^2 std
    kp_noise: float = 0.5           # px std
    phone_tilt: EulerAngles = field(default_factory=lambda: EulerAngles(0.0, 0.0, 0.0))
    seed: int = 0

    def __post_init__(self):
        if not 0.8 <= self.cycle_period <= 2.5:
            raise ValueError("cycle_period outside [0.8, 2.5]")
        if self.imu_noise < 0 or self.kp_noise < 0:
            raise ValueError("noise std must be non-negative")

    def blend(self, other: "SubjectParams", w: float) -> "SubjectParams":
        """Linear interpolation of gait-shaping parameters toward `other`."""
        def mix(a, b):
            return (1 - w) * a + w * b
        tilt = EulerAngles(mix(self.phone_tilt.roll, other.phone_tilt.roll),
                           mix(self.phone_tilt.pitch, other.phone_tilt.pitch),
                           mix(self.phone_tilt.yaw, other.phone_tilt.yaw))
        return replace(self,
                       cycle_period=mix(self.cycle_period, other.cycle_period),
                       swing_amplitude=mix(self.swing_amplitude, other.swing_amplitude),
                       swing_phase=mix(self.swing_phase, other.swing_phase),
                       swing_azimuth=mix(self.swing_azimuth, other.swing_azimuth),
                       elbow_flexion=mix(self.elbow_flexion, other.elbow_flexion),
                       arm_length=mix(self.arm_length, other.arm_length),
                       height=mix(self.height, other.height),
                       phone_tilt=tilt)


@dataclass(frozen=True)
class CameraModel:
    hover_height: float = 4.0
    horizontal_distance: float = 18.0
    horizontal_angle: float = 0.0   # degrees, path deviation from camera axis
    focal: float = 2000.0           # px
    resolution: tuple[int, int] = (2704, 1520)
    fps: float = 60.0

    def __post_init__(self):
        if self.hover_height <= 0 or self.horizontal_distance <= 0:
            raise ValueError("camera geometry must be positive")
        if not 10 <= self.fps <= 60:
            raise ValueError("fps outside supported range")


@dataclass(frozen=True)
class RelayAttack:
    victim: SubjectParams
    decoy_subject: SubjectParams


@dataclass(frozen=True)
class HijackAttack:
    attacker: SubjectParams


@dataclass(frozen=True)
class MimicryAttack:
    attacker: SubjectParams
    victim: SubjectParams
    fidelity: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.fidelity <= 1.0:
            raise ValueError("fidelity must lie in [0,1]")


@dataclass
class GroundTruth:
    wrist_speed: Series1D          # body-relative hand speed, m/s, 100 Hz
    cycle_boundaries: list[float]  # seconds, phone clock
    clock_offset: float            # drone clock minus phone clock, s
    base_path: np.ndarray          # (n, 3) body base positions, world frame


class _ArmModel:
    """Analytic swing kinematics: angle, angular rate, wrist pos/vel/acc."""

    def __init__(self, p: SubjectParams, heading: float):
        self.p = p
        self.h = heading + p.swing_azimuth   # swing-plane azimuth
        self.omega = 2 * math.pi / p.cycle_period
        self.lu = 0.55 * p.arm_length
        self.lf = 0.45 * p.arm_length
        self.bob_amp = 0.018 * p.height / 1.7

    def theta(self, t: np.ndarray):
        a, w, ph = self.p.swing_amplitude, self.omega, self.p.swing_phase
        th = a * np.sin(w * t + ph)
        th_d = a * w * np.cos(w * t + ph)
        th_dd = -a * w * w * np.sin(w * t + ph)
        return th, th_d, th_dd

    def _seg(self, th, th_d, th_dd, length, extra):
        """Position/velocity/acceleration of one arm segment endpoint offset."""
        ang = th + extra
        ch, sh = math.cos(self.h), math.sin(self.h)
        s, c = np.sin(ang), np.cos(ang)
        pos = length * np.stack([s * ch, s * sh, -c], axis=1)
        vel = length * th_d[:, None] * np.stack([c * ch, c * sh, s], axis=1)
        acc = length * (th_dd[:, None] * np.stack([c * ch, c * sh, s], axis=1)
                        + th_d[:, None] ** 2 * np.stack([-s * ch, -s * sh, c], axis=1))
        return pos, vel, acc

    def wrist_relative(self, t: np.ndarray):
        """Wrist pos/vel/acc relative to the shoulder (bob excluded)."""
        th, th_d, th_dd = self.theta(t)
        p1, v1, a1 = self._seg(th, th_d, th_dd, self.lu, 0.0)
        p2, v2, a2 = self._seg(th, th_d, th_dd, self.lf, self.p.elbow_flexion)
        return p1 + p2, v1 + v2, a1 + a2

    def bob(self, t: np.ndarray):
        w = self.omega
        z = self.bob_amp * np.sin(w * t)
        z_d = self.bob_amp * w * np.cos(w * t)
        z_dd = -self.bob_amp * w * w * np.sin(w * t)
        return z, z_d, z_dd


def _phone_quaternions(p: SubjectParams, heading: float,
                       th: np.ndarray) -> list[Quaternion]:
    qz = Quaternion(math.cos(heading / 2), 0, 0, math.sin(heading / 2))
    q_tilt = euler_to_quaternion(p.phone_tilt)
    return [qz * Quaternion(math.cos(a / 2), 0, math.sin(a / 2), 0) * q_tilt
            for a in th]


def generate_session(p: SubjectParams, cam: CameraModel = CameraModel(),
                     duration: float = 8.0, clock_offset: float = 0.0,
                     walk_speed: float = WALK_SPEED,
                     imu_rate: float = 100.0,
                     seed_offset: int = 0) -> tuple[ImuSeries, KeypointSeries, GroundTruth]:
    """One walking session: paired IMU and keypoint streams + ground truth.

    Keypoint timestamps run on the drone clock (phone clock + clock_offset).
    seed_offset varies the noise stream without changing the subject.
    """
    if duration < 3.0:
        raise InvalidDuration("duration must be >= 3 s")
    rng = np.random.default_rng((p.seed, seed_offset))
    heading = math.radians(cam.horizontal_angle)
    arm = _ArmModel(p, heading)

    n = int(round(duration * imu_rate))
    t = np.arange(n) / imu_rate

    # body base walks toward the camera; camera sits at the world origin
    direction = np.array([math.cos(heading), math.sin(heading), 0.0])
    start = -direction * cam.horizontal_distance
    shoulder_h = 0.82 * p.height
    base = start[None, :] + direction[None, :] * (walk_speed * t)[:, None]
    bob_z, bob_zd, bob_zdd = arm.bob(t)

    rel_p, rel_v, rel_a = arm.wrist_relative(t)
    a_world = rel_a.copy()
    a_world[:, 2] += bob_zdd

    th, _, _ = arm.theta(t)
    quats = _phone_quaternions(p, arm.h, th)

    acc = np.empty((n, 3))
    gyro = np.empty((n, 3))
    mag = np.empty((n, 3))
    _, th_d, _ = arm.theta(t)
    omega_world = np.stack([-th_d * math.sin(arm.h),
                            th_d * math.cos(arm.h),
                            np.zeros(n)], axis=1)
    for k, q in enumerate(quats):
        r = q.to_matrix()
        acc[k] = r.T @ (a_world[k] + GRAVITY_WORLD)
        gyro[k] = r.T @ omega_world[k]
        mag[k] = r.T @ MAG_WORLD
    clean = ImuSeries(t=t.copy(), acc=acc.copy(), gyro=gyro.copy(),
                      mag=mag.copy(), sample_rate=imu_rate)
    acc += rng.normal(0.0, p.imu_noise, acc.shape)
    gyro += rng.normal(0.0, p.imu_noise * 0.05, gyro.shape)
    mag += rng.normal(0.0, p.imu_noise * 2.0, mag.shape)
    imu = ImuSeries(t=t, acc=acc, gyro=gyro, mag=mag, sample_rate=imu_rate)

    kp = _render_keypoints(p, cam, arm, duration, clock_offset, walk_speed,
                           start, direction, shoulder_h, rng)

    speed = np.linalg.norm(rel_v + np.stack(
        [np.zeros(n), np.zeros(n), bob_zd], axis=1), axis=1)
    # true boundaries: the cycle cuts of the noise-free twin stream, so the
    # ground truth pins the instants a perfect sensor would segment and any
    # deviation on the noisy stream measures noise robustness
    gt = GroundTruth(
        wrist_speed=Series1D(speed, t0=0.0, rate=imu_rate),
        cycle_boundaries=cycle_boundaries(clean),
        clock_offset=clock_offset,
        base_path=base,
    )
    return imu, kp, gt


def _render_keypoints(p, cam, arm, duration, clock_offset, walk_speed,
                      start, direction, shoulder_h, rng) -> KeypointSeries:
    n_frames = int(round(duration * cam.fps))
    tf = np.arange(n_frames) / cam.fps      # phone-clock sampling instants
    base = start[None, :] + direction[None, :] * (walk_speed * tf)[:, None]
    bob_z, _, _ = arm.bob(tf)
    th, th_d, th_dd = arm.theta(tf)

    lat = np.array([-direction[1], direction[0], 0.0])  # body left
    half_shoulder = 0.13 * p.height
    half_hip = 0.065 * p.height
    hip_h = 0.53 * p.height
    leg_amp = 0.55 * p.swing_amplitude + 0.12
    l_thigh = 0.245 * p.height
    l_shank = 0.246 * p.height

    joints_world: dict[str, np.ndarray] = {}
    for side, sgn, arm_sign in (("l", 1.0, -1.0), ("r", -1.0, 1.0)):
        sh = base + lat * sgn * half_shoulder
        sh[:, 2] += shoulder_h + bob_z
        th_s = arm_sign * th
        # elbow/wrist from the same chain as the IMU arm (right side drives
        # it); the swing plane is tilted cross-body by the azimuth
        heading = arm.h - p.swing_azimuth
        az = heading + arm_sign * p.swing_azimuth
        sdx, sdy = math.cos(az), math.sin(az)
        ang1 = th_s
        ang2 = th_s + p.elbow_flexion
        seg1 = arm.lu * np.stack([np.sin(ang1) * sdx,
                                  np.sin(ang1) * sdy,
                                  -np.cos(ang1)], axis=1)
        seg2 = arm.lf * np.stack([np.sin(ang2) * sdx,
                                  np.sin(ang2) * sdy,
                                  -np.cos(ang2)], axis=1)
        el = sh + seg1
        wr = el + seg2
        hip = base + lat * sgn * half_hip
        hip[:, 2] += hip_h + bob_z
        leg_ang = -arm_sign * leg_amp * np.sin(arm.omega * tf + p.swing_phase)
        thigh = l_thigh * np.stack([np.sin(leg_ang) * direction[0],
                                    np.sin(leg_ang) * direction[1],
                                    -np.cos(leg_ang)], axis=1)
        knee = hip + thigh
        shank_ang = leg_ang * 0.7
        shank = l_shank * np.stack([np.sin(shank_ang) * direction[0],
                                    np.sin(shank_ang) * direction[1],
                                    -np.cos(shank_ang)], axis=1)
        ankle = knee + shank
        joints_world[f"shoulder_{side}"] = sh
        joints_world[f"elbow_{side}"] = el
        joints_world[f"wrist_{side}"] = wr
        joints_world[f"hip_{side}"] = hip
        joints_world[f"knee_{side}"] = knee
        joints_world[f"ankle_{side}"] = ankle

    # pinhole camera fixed at the origin, aimed at the subject mid-path
    c = np.array([0.0, 0.0, cam.hover_height])
    mid = base[len(base) // 2].copy()
    mid[2] = 0.5 * p.height
    fwd = mid - c
    fwd /= np.linalg.norm(fwd)
    right = np.cross(fwd, np.array([0.0, 0.0, 1.0]))
    right /= np.linalg.norm(right)
    up = np.cross(right, fwd)

    w_px, h_px = cam.resolution
    frames = []
    for k in range(n_frames):
        joints = {}
        for name, traj in joints_world.items():
            d = traj[k] - c
            depth = float(d @ fwd)
            u = w_px / 2 + cam.focal * float(d @ right) / depth
            v = h_px / 2 - cam.focal * float(d @ up) / depth
            u += rng.normal(0.0, p.kp_noise)
            v += rng.normal(0.0, p.kp_noise)
            joints[name] = (u, v, 1.0)
        frames.append(KeypointFrame(t=float(tf[k] + clock_offset), joints=joints))
    return KeypointSeries(frames, frame_rate=cam.fps)


def generate_attack(spec, cam: CameraModel = CameraModel(),
                    duration: float = 8.0, clock_offset: float = 0.0,
                    seed_offset: int = 0):
    """Paired impostor streams for one attack attempt.

    Relay: victim's genuine IMU, decoy's keypoints (independent sessions).
    Hijack: attacker's own self-consistent streams.
    Mimicry: self-consistent streams from the attacker's parameters blended
    toward the victim with weight fidelity plus residual phase error.
    """
    if isinstance(spec, RelayAttack):
        imu, _, gt = generate_session(spec.victim, cam, duration,
                                      clock_offset, seed_offset=seed_offset)
        _, kp, _ = generate_session(spec.decoy_subject, cam, duration,
                                    clock_offset, seed_offset=seed_offset + 1)
        return imu, kp, gt
    if isinstance(spec, HijackAttack):
        return generate_session(spec.attacker, cam, duration, clock_offset,
                                seed_offset=seed_offset)
    if isinstance(spec, MimicryAttack):
        params = spec.attacker.blend(spec.victim, spec.fidelity)
        params = replace(params,
                         swing_phase=params.swing_phase
                         + (1.0 - spec.fidelity) * 0.3)
        return generate_session(params, cam, duration, clock_offset,
                                seed_offset=seed_offset)
    raise TypeError(f"unknown attack spec {type(spec).__name__}")


def make_cohort(size: int, seed: int = 0) -> list[SubjectParams]:
    """Sample a cohort of distinct subjects.

    Cycle periods are stratified over [1.15, 2.0] s with jitter inside each
    stratum, so any two subjects keep a guaranteed cadence separation; iid
    draws routinely produce near-identical cadences, which makes mismatched
    stream pairings spuriously correlated over a short sample window.
    """
    rng = np.random.default_rng(seed)
    if size == 1:
        bases = np.array([1.5])
        gap = 0.2
    else:
        bases = np.linspace(1.15, 2.0, size)
        gap = float(bases[1] - bases[0])
    order = rng.permutation(size)
    cohort = []
    for k in range(size):
        period = float(bases[order[k]] + rng.uniform(-0.3, 0.3) * gap)
        tilt = EulerAngles(float(rng.normal(0.0, 0.12)),
                           float(rng.normal(0.0, 0.12)),
                           float(rng.normal(0.0, 0.2)))
        cohort.append(SubjectParams(
            cycle_period=period,
            swing_amplitude=float(rng.uniform(0.42, 0.6)),
            swing_phase=float(rng.uniform(-math.pi, math.pi)),
            swing_azimuth=float(rng.uniform(0.3, 0.5)),
            elbow_flexion=float(rng.uniform(0.25, 0.6)),
            arm_length=float(rng.uniform(0.64, 0.8)),
            height=float(rng.uniform(1.55, 1.9)),
            imu_noise=0.05,
            kp_noise=0.3,
            phone_tilt=tilt,
            seed=int(rng.integers(0, 2 ** 31)) ^ k,
        ))
    return cohort
