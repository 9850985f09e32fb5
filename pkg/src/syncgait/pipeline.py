"""End-to-end composition: raw paired streams -> speed channels -> aligned
consistency features -> per-user models and signed decision scores.

The video chain is calibrate (adaptive DCT smoothing + cooperative Kalman),
differentiate the wrist, band-pass. The IMU chain is denoise, orientation,
gravity removal, velocity integration with per-cycle drift resets,
body-relative projection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classify import OcSvmModel, train_ocsvm, train_ocsvm_calibrated
from .errors import SeriesTooShort, TooFewSamples
from .features import (FeatureVector, FisherReport, compute_features,
                       fisher_select)
from .gait import (SegmentationConfig, _denoise_imu, cycle_feature_vector,
                   gait_representation)
from .orientation import (GRAVITY, ahrs_stream, integrate_velocity,
                          project_body_relative, quaternion_to_euler)
from .posture import (GAIT_BAND_HI, GAIT_BAND_LO, AdctConfig, MjckfConfig,
                      SpectralBand, adaptive_bandpass, adct_smooth,
                      mjckf_correct)
from .series import (MISSING_CONF, ImuSeries, KeypointFrame, KeypointSeries,
                     Series1D, normalize_or_flag)
from .syncing import AlignedPair, ClockOffsetEstimate, align, imu_hand_speed

HEADING_SMOOTH_S = 0.5
_CHAIN_JOINTS = ("wrist", "elbow", "shoulder")


def _gait_band(rate: float) -> SpectralBand:
    return SpectralBand(GAIT_BAND_LO, min(GAIT_BAND_HI, 0.45 * rate))


def _bandpass_components(comps: np.ndarray, rate: float) -> np.ndarray:
    """Band-pass each velocity component in the gait band; the residual
    oscillation isolates the limb swing from translation and drift."""
    band = _gait_band(rate)
    out = np.empty_like(comps)
    for k in range(comps.shape[1]):
        out[:, k] = adaptive_bandpass(Series1D(comps[:, k], rate=rate),
                                      band).values
    return out


@dataclass
class PipelineConfig:
    adct: AdctConfig = field(default_factory=AdctConfig)
    mjckf: MjckfConfig = field(default_factory=MjckfConfig)
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    side: str = "r"


def _fill_gaps(t: np.ndarray, x: np.ndarray, conf: np.ndarray) -> np.ndarray:
    """Interpolate coordinates across missing detections before smoothing."""
    ok = conf >= MISSING_CONF
    if ok.all():
        return x
    if not ok.any():
        return x
    return np.interp(t, t[ok], x[ok])


def calibrate_keypoints(kp: KeypointSeries, cfg: PipelineConfig) -> KeypointSeries:
    """Adaptive DCT smoothing of each chain-joint track, then the cooperative
    Kalman correction pass (which also bridges low-confidence frames)."""
    smoothed = [KeypointFrame(f.t, dict(f.joints)) for f in kp.frames]
    for side in ("l", "r"):
        for joint in _CHAIN_JOINTS:
            name = f"{joint}_{side}"
            t, u, v, c = kp.joint_track(name)
            u = _fill_gaps(t, u, c)
            v = _fill_gaps(t, v, c)
            if len(u) >= 4:
                u = adct_smooth(Series1D(u, rate=kp.frame_rate), cfg.adct).values
                v = adct_smooth(Series1D(v, rate=kp.frame_rate), cfg.adct).values
            for i, frame in enumerate(smoothed):
                frame.joints[name] = (float(u[i]), float(v[i]), c[i])
    return mjckf_correct(KeypointSeries(smoothed, kp.frame_rate), cfg.mjckf)


def _torso_scale(kp: KeypointSeries) -> np.ndarray:
    """Smoothed per-frame torso length in pixels (shoulder midpoint to hip
    midpoint); the apparent-size reference that cancels perspective growth
    as the subject approaches the camera."""
    mids = []
    for upper, lower in (("shoulder", "hip"),):
        pts = {}
        for name in (f"{upper}_l", f"{upper}_r", f"{lower}_l", f"{lower}_r"):
            t, u, v, c = kp.joint_track(name)
            pts[name] = (_fill_gaps(t, u, c), _fill_gaps(t, v, c))
        su = 0.5 * (pts[f"{upper}_l"][0] + pts[f"{upper}_r"][0])
        sv = 0.5 * (pts[f"{upper}_l"][1] + pts[f"{upper}_r"][1])
        hu = 0.5 * (pts[f"{lower}_l"][0] + pts[f"{lower}_r"][0])
        hv = 0.5 * (pts[f"{lower}_l"][1] + pts[f"{lower}_r"][1])
        mids.append(np.hypot(su - hu, sv - hv))
    scale = mids[0]
    if len(scale) >= 4:
        scale = adct_smooth(Series1D(scale, rate=kp.frame_rate),
                            AdctConfig(f_base=0.02, alpha=0.0)).values
    return np.maximum(scale, 1e-6)


def video_speed_channel(kp: KeypointSeries,
                        cfg: PipelineConfig = PipelineConfig()
                        ) -> tuple[Series1D, np.ndarray]:
    """Wrist swing speed from calibrated keypoints plus a validity mask.

    Pixel velocities are divided by the smoothed torso scale (cancelling
    the perspective amplitude growth of the approaching subject) and
    band-passed per component in the gait band before taking the magnitude,
    which strips the slow translation drift. Frames whose wrist detection
    fell below the missing-confidence level are marked invalid (bridged,
    not measured).
    """
    corrected = calibrate_keypoints(kp, cfg)
    t, u, v, _ = corrected.joint_track(f"wrist_{cfg.side[0]}")
    scale = _torso_scale(kp)
    vel = np.column_stack([np.gradient(u, t) / scale,
                           np.gradient(v, t) / scale])
    vel = _bandpass_components(vel, kp.frame_rate)
    speed = normalize_or_flag(Series1D(np.hypot(vel[:, 0], vel[:, 1]),
                                       t0=float(t[0]), rate=kp.frame_rate))
    _, _, _, conf = kp.joint_track(f"wrist_{cfg.side[0]}")
    valid = conf >= MISSING_CONF
    return speed, valid


def imu_speed_channel(imu: ImuSeries,
                      cfg: PipelineConfig = PipelineConfig()) -> Series1D:
    """Body-relative hand speed from the IMU alone.

    Orientation comes from the attitude filter; the world-frame acceleration
    (gravity removed) is integrated to velocity, the components are
    band-passed in the gait band (which suppresses integration drift far
    more cleanly than hard velocity resets), and the result is projected
    into the body frame using the smoothed heading and reduced to a
    z-scored speed magnitude.
    """
    if len(imu) < 3:
        raise SeriesTooShort("need >= 3 IMU samples")
    denoised = _denoise_imu(imu)
    quats = ahrs_stream(denoised)
    n = len(denoised)
    a_world = np.empty((n, 3))
    for k, q in enumerate(quats):
        a_world[k] = q.to_matrix() @ denoised.acc[k]
    a_world[:, 2] -= GRAVITY

    v_world = integrate_velocity(a_world, denoised.sample_rate)
    v_world = _bandpass_components(v_world, denoised.sample_rate)

    yaw = np.unwrap([quaternion_to_euler(q).yaw for q in quats])
    win = max(int(HEADING_SMOOTH_S * denoised.sample_rate), 1)
    kernel = np.ones(win) / win
    pad = np.concatenate([np.full(win // 2, yaw[0]), yaw,
                          np.full(win - 1 - win // 2, yaw[-1])])
    heading = np.convolve(pad, kernel, mode="valid")

    v_body = project_body_relative(v_world, heading)
    return imu_hand_speed(v_body, rate=denoised.sample_rate,
                          t0=float(denoised.t[0]))


def aligned_speeds(imu: ImuSeries, kp: KeypointSeries,
                   offset: ClockOffsetEstimate,
                   cfg: PipelineConfig = PipelineConfig(),
                   imu_valid: np.ndarray | None = None) -> AlignedPair:
    imu_speed = imu_speed_channel(imu, cfg)
    video_speed, video_valid = video_speed_channel(kp, cfg)
    return align(imu_speed, video_speed, offset,
                 imu_valid=imu_valid, video_valid=video_valid)


def consistency_vector(imu: ImuSeries, kp: KeypointSeries,
                       offset: ClockOffsetEstimate,
                       cfg: PipelineConfig = PipelineConfig(),
                       imu_valid: np.ndarray | None = None) -> FeatureVector:
    """The 6-feature cross-modal consistency vector for one session."""
    return compute_features(aligned_speeds(imu, kp, offset, cfg, imu_valid))


def _window_pairs(pair: AlignedPair, window_s: float = 3.0) -> list[AlignedPair]:
    """The full aligned pair plus half-overlapping sub-windows; enrollment
    trains on all of them so the boundary covers short-window variance."""
    out = [pair]
    n = len(pair.imu_speed)
    w = int(window_s * pair.common_rate)
    step = max(w // 2, 1)
    if n >= w + step:
        for a in range(0, n - w + 1, step):
            out.append(AlignedPair(
                imu_speed=Series1D(pair.imu_speed.values[a:a + w],
                                   t0=pair.imu_speed.t0 + a / pair.common_rate,
                                   rate=pair.common_rate),
                video_speed=Series1D(pair.video_speed.values[a:a + w],
                                     t0=pair.video_speed.t0 + a / pair.common_rate,
                                     rate=pair.common_rate),
                common_rate=pair.common_rate,
                window=w / pair.common_rate,
            ))
    return out


MISALIGN_SHIFTS_S = (0.3, 0.55, 0.8)
CONSISTENCY_STD_FLOOR = 0.2
CONSISTENCY_BALANCE = 0.3
GAIT_RHO_MARGIN = 0.05


def _shifted_pairs(pair: AlignedPair,
                   shifts_s: tuple[float, ...] = MISALIGN_SHIFTS_S
                   ) -> list[AlignedPair]:
    """Misaligned surrogate negatives: the video channel circularly shifted
    by a fraction of a gait cycle, breaking the cross-modal phase lock while
    keeping every marginal statistic of both channels."""
    out = []
    for s in shifts_s:
        k = int(s * pair.common_rate)
        out.append(AlignedPair(
            imu_speed=pair.imu_speed,
            video_speed=Series1D(np.roll(pair.video_speed.values, k),
                                 pair.video_speed.t0, pair.common_rate),
            common_rate=pair.common_rate,
            window=pair.window,
        ))
    return out


def gait_vectors(imu: ImuSeries,
                 cfg: PipelineConfig = PipelineConfig()) -> np.ndarray:
    """Per-cycle gait feature rows for one session."""
    cycles = gait_representation(imu, cfg.segmentation)
    return np.array([cycle_feature_vector(c) for c in cycles])


@dataclass
class Enrollment:
    """Per-user models: cross-modal consistency and IMU gait signature.

    feature_mask selects the consistency features that discriminate aligned
    from misaligned pairs (Fisher-scored at enrollment); the remaining
    features carry mostly subject-specific channel quality, which the
    consistency check must not key on."""

    consistency_model: OcSvmModel
    gait_model: OcSvmModel
    feature_mask: np.ndarray
    fisher: FisherReport | None = None


def enroll(sessions: list[tuple[ImuSeries, KeypointSeries, ClockOffsetEstimate]],
           cfg: PipelineConfig = PipelineConfig(), seed: int = 0) -> Enrollment:
    """Train both one-class models from genuine enrollment sessions.

    The consistency model is calibrated against misaligned surrogate
    negatives (time-shifted channel pairings of the same sessions), so its
    threshold separates "streams agree" from "streams disagree" rather than
    hugging this user's training cloud.
    """
    pos_vecs: list[FeatureVector] = []
    neg_vecs: list[FeatureVector] = []
    gaits = []
    for imu, kp, offset in sessions:
        pair = aligned_speeds(imu, kp, offset, cfg)
        pos_vecs.extend(compute_features(p) for p in _window_pairs(pair))
        neg_vecs.extend(compute_features(p) for p in _shifted_pairs(pair))
        gaits.append(gait_vectors(imu, cfg))
    if len(pos_vecs) < 2 or len(neg_vecs) < 2:
        raise TooFewSamples("enrollment sessions yield too few feature "
                            "windows; record more or longer sessions")
    fisher = fisher_select(pos_vecs, neg_vecs)
    mask = fisher.selected.copy()
    if mask.sum() < 2:   # degenerate selection: keep the two strongest
        mask = fisher.normalized >= np.sort(fisher.normalized)[-2]
    pos = np.array([v.as_array() for v in pos_vecs])[:, mask]
    neg = np.array([v.as_array() for v in neg_vecs])[:, mask]
    cons = train_ocsvm_calibrated(pos, neg,
                                  std_floor=CONSISTENCY_STD_FLOOR,
                                  balance=CONSISTENCY_BALANCE)
    gait = train_ocsvm(np.vstack(gaits), seed=seed)
    # fresh-session cycles sit slightly outside the enrollment cloud while
    # other subjects score far below; widen the boundary by a fixed margin
    # that absorbs the generalization gap without approaching impostors
    gait.rho -= GAIT_RHO_MARGIN
    return Enrollment(consistency_model=cons, gait_model=gait,
                      feature_mask=mask, fisher=fisher)


def consistency_score(enrollment: Enrollment, imu: ImuSeries,
                      kp: KeypointSeries, offset: ClockOffsetEstimate,
                      cfg: PipelineConfig = PipelineConfig(),
                      imu_valid: np.ndarray | None = None) -> float:
    vec = consistency_vector(imu, kp, offset, cfg, imu_valid).as_array()
    return enrollment.consistency_model.score(vec[enrollment.feature_mask])


def gait_score(enrollment: Enrollment, imu: ImuSeries,
               cfg: PipelineConfig = PipelineConfig()) -> float:
    """Median per-cycle decision value for one session."""
    rows = gait_vectors(imu, cfg)
    return float(np.median(enrollment.gait_model.scores(rows)))
