"""Temporal co-registration of the two modalities.

Two-way clock-offset estimation with Kalman drift tracking, hand-speed
extraction from keypoints and from body-relative IMU velocities, and
alignment of both speed channels onto one timeline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (InsufficientFrames, InsufficientOverlap,
                     NegativeRoundTrip)
from .series import KeypointSeries, Series1D, normalize_or_flag

DEFAULT_COMMON_RATE = 50.0
MIN_OVERLAP_S = 2.0
SYNC_EXCHANGE_PERIOD = 0.5   # seconds between two-way exchanges


@dataclass(frozen=True)
class ClockOffsetEstimate:
    offset: float     # seconds, remote clock minus local clock
    variance: float   # seconds^2
    round_trip: float  # seconds

    def __post_init__(self):
        if self.round_trip < 0:
            raise NegativeRoundTrip(f"round trip {self.round_trip}")
        if self.variance < 0:
            raise ValueError("variance must be non-negative")


@dataclass
class AlignedPair:
    imu_speed: Series1D
    video_speed: Series1D
    common_rate: float
    window: float

    def __post_init__(self):
        if len(self.imu_speed) != len(self.video_speed):
            raise ValueError("aligned channels must have equal length")


def two_way_offset(t1: float, t2: float, t3: float, t4: float) -> ClockOffsetEstimate:
    """Offset from one two-way timestamp exchange.

    t1 local send, t2 remote receive, t3 remote send, t4 local receive.
    Exact whenever forward and return delays are symmetric.
    """
    if t4 < t1 or t3 < t2:
        raise NegativeRoundTrip("timestamps out of order")
    offset = ((t2 - t1) + (t3 - t4)) / 2.0
    rtt = (t4 - t1) - (t3 - t2)
    if rtt < 0:
        raise NegativeRoundTrip(f"round trip {rtt}")
    return ClockOffsetEstimate(offset=offset, variance=(rtt / 2.0) ** 2,
                               round_trip=rtt)


def kalman_track_offset(estimates: list[ClockOffsetEstimate],
                        drift_noise: float = 1e-8,
                        dt: float = SYNC_EXCHANGE_PERIOD) -> list[ClockOffsetEstimate]:
    """Scalar Kalman filter over (offset, drift rate) with constant drift."""
    if not estimates:
        raise ValueError("need at least one estimate")
    if len(estimates) == 1:
        return list(estimates)

    x = np.array([estimates[0].offset, 0.0])
    p = np.diag([max(estimates[0].variance, 1e-12), 1e-6])
    f = np.array([[1.0, dt], [0.0, 1.0]])
    q = drift_noise * np.array([[dt ** 3 / 3, dt ** 2 / 2], [dt ** 2 / 2, dt]])
    h = np.array([[1.0, 0.0]])

    out = [ClockOffsetEstimate(float(x[0]), float(p[0, 0]), estimates[0].round_trip)]
    for est in estimates[1:]:
        x = f @ x
        p = f @ p @ f.T + q
        r = max(est.variance, 1e-12)
        s = float(p[0, 0] + r)
        k = (p @ h.T / s).ravel()
        x = x + k * (est.offset - x[0])
        p = (np.eye(2) - np.outer(k, h.ravel())) @ p
        out.append(ClockOffsetEstimate(float(x[0]), float(p[0, 0]), est.round_trip))
    return out


def video_hand_speed(kp: KeypointSeries, side: str = "r") -> Series1D:
    """Central-difference wrist speed in px/s, z-score normalized.

    A static wrist yields a zero series flagged as degenerate.
    """
    if len(kp.frames) < 3:
        raise InsufficientFrames("need >= 3 frames")
    side = side[0].lower()
    t, u, v, _ = kp.joint_track(f"wrist_{side}")
    du = np.gradient(u, t)
    dv = np.gradient(v, t)
    speed = np.hypot(du, dv)
    return normalize_or_flag(Series1D(speed, t0=float(t[0]), rate=kp.frame_rate))


def imu_hand_speed(v_body: np.ndarray, rate: float = 100.0, t0: float = 0.0) -> Series1D:
    """Euclidean norm of body-relative velocities, z-score normalized."""
    v = np.atleast_2d(np.asarray(v_body, dtype=float))
    speed = np.linalg.norm(v, axis=1)
    return normalize_or_flag(Series1D(speed, t0=t0, rate=rate))


def align(imu: Series1D, video: Series1D, offset: ClockOffsetEstimate,
          common_rate: float = DEFAULT_COMMON_RATE,
          imu_valid: np.ndarray | None = None,
          video_valid: np.ndarray | None = None) -> AlignedPair:
    """Shift the video timeline by the tracked offset and co-register both
    channels on a common grid; grid points without a valid source sample
    within half a sample period on both sides are dropped.
    """
    t_imu = imu.times
    t_video = video.times - offset.offset
    lo = max(t_imu[0], t_video[0])
    hi = min(t_imu[-1], t_video[-1])
    if hi - lo < MIN_OVERLAP_S:
        raise InsufficientOverlap(f"overlap {hi - lo:.3f} s")

    n = int(np.floor((hi - lo) * common_rate)) + 1
    grid = lo + np.arange(n) / common_rate
    imu_g = np.interp(grid, t_imu, imu.values)
    vid_g = np.interp(grid, t_video, video.values)

    keep = np.ones(n, dtype=bool)
    half = 0.5 / common_rate
    for t_src, valid in ((t_imu, imu_valid), (t_video, video_valid)):
        if valid is None:
            continue
        t_ok = t_src[np.asarray(valid, dtype=bool)]
        if len(t_ok) == 0:
            keep[:] = False
            break
        idx = np.searchsorted(t_ok, grid)
        left = np.abs(grid - t_ok[np.clip(idx - 1, 0, len(t_ok) - 1)])
        right = np.abs(t_ok[np.clip(idx, 0, len(t_ok) - 1)] - grid)
        src_period = np.median(np.diff(t_src)) if len(t_src) > 1 else half
        keep &= np.minimum(left, right) <= max(half, src_period)
    if keep.sum() < MIN_OVERLAP_S * common_rate:
        raise InsufficientOverlap("too few temporally matched pairs")

    return AlignedPair(
        imu_speed=Series1D(imu_g[keep], t0=float(grid[0]), rate=common_rate),
        video_speed=Series1D(vid_g[keep], t0=float(grid[0]), rate=common_rate),
        common_rate=common_rate,
        window=float(hi - lo),
    )
