"""Mutual-authentication session simulator over a lossy channel.

A session walks through hello, clock synchronization, chunked cross-exchange
of the two sensor streams, and dual verification: both peers check the
cross-modal consistency of what they hold, and the phone side additionally
checks the gait signature. The transport drops and delays messages
independently in both directions; every delivered or dropped message is
logged to a transcript.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .classify import OcSvmModel
from .errors import EnrollmentMissing, SyncGaitError
from .pipeline import Enrollment, PipelineConfig, consistency_score, gait_score
from .series import ImuSeries, KeypointFrame, KeypointSeries
from .syncing import (SYNC_EXCHANGE_PERIOD, ClockOffsetEstimate,
                      kalman_track_offset, two_way_offset)

CHUNK_S = 0.1          # stream exchange chunk length
ARQ_ROUNDS = 20        # bounded selective-repeat retransmission rounds


class SessionState(enum.Enum):
    IDLE = "idle"
    HELLO = "hello"
    TIME_SYNC = "time_sync"
    EXCHANGE = "exchange"
    VERIFY = "verify"
    ACCEPTED = "accepted"
    FAILED = "failed"


@dataclass(frozen=True)
class ChannelModel:
    loss_rate: float = 0.0
    delay_mean: float = 0.004    # seconds one way
    delay_jitter: float = 0.001
    asymmetry: float = 1.0       # return-path delay multiplier

    def __post_init__(self):
        if not 0.0 <= self.loss_rate <= 0.6:
            raise ValueError("loss_rate must lie in [0, 0.6]")
        if self.delay_mean < 0 or self.delay_jitter < 0:
            raise ValueError("delays must be non-negative")

    def delay(self, rng: np.random.Generator, reverse: bool = False) -> float:
        d = self.delay_mean * (self.asymmetry if reverse else 1.0)
        return max(0.0, d + self.delay_jitter * rng.normal())

    def dropped(self, rng: np.random.Generator) -> bool:
        return bool(rng.random() < self.loss_rate)


@dataclass
class SessionConfig:
    max_attempts: int = 3
    sample_duration: float = 8.0
    channel: ChannelModel = field(default_factory=ChannelModel)
    clock_offset: float = 0.0    # true drone clock minus phone clock
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.sample_duration < 3.0:
            raise ValueError("sample_duration must be >= 3 s")


@dataclass
class DecisionRecord:
    attempt: int
    consistency_score_drone: float
    consistency_score_phone: float
    gait_score: float
    offset_estimate: float
    accepted: bool

    @property
    def consistency_pass(self) -> bool:
        return (self.consistency_score_drone >= 0
                and self.consistency_score_phone >= 0)

    @property
    def gait_pass(self) -> bool:
        return self.gait_score >= 0


@dataclass
class SessionResult:
    state: SessionState
    record: DecisionRecord | None
    attempts: int
    transcript: list[dict]

    def transcript_jsonl(self) -> str:
        return "\n".join(json.dumps(e, sort_keys=True)
                         for e in self.transcript) + "\n"


class _Transcript:
    def __init__(self):
        self.events: list[dict] = []

    def log(self, t: float, actor: str, event: str, **detail):
        entry = {"t": round(float(t), 6), "actor": actor, "event": event}
        if detail:
            entry["detail"] = detail
        self.events.append(entry)


def inject_loss(chunks: list, channel: ChannelModel,
                rng: np.random.Generator) -> list[tuple[int, float]]:
    """Which chunks survive the channel and when they arrive.

    Returns (index, arrival_delay) for delivered chunks; arrival order is
    monotone (a transport with in-order delivery), drops are independent.
    """
    delivered = []
    t_arr = 0.0
    for i in range(len(chunks)):
        if channel.dropped(rng):
            continue
        t_arr = max(t_arr, channel.delay(rng))
        delivered.append((i, t_arr))
    return delivered


def exchange_with_arq(chunks: list, channel: ChannelModel,
                      rng: np.random.Generator,
                      rounds: int = ARQ_ROUNDS) -> tuple[set[int], int]:
    """Selective-repeat transfer: the initial burst plus up to `rounds`
    retransmission rounds for whatever is still missing. Returns the set of
    delivered chunk indices and the number of rounds actually used."""
    delivered = {i for i, _ in inject_loss(chunks, channel, rng)}
    used = 0
    missing = [i for i in range(len(chunks)) if i not in delivered]
    while missing and used < rounds:
        used += 1
        again = inject_loss(missing, channel, rng)
        delivered.update(missing[j] for j, _ in again)
        missing = [i for i in range(len(chunks)) if i not in delivered]
    return delivered, used


def _chunk_imu(imu: ImuSeries, chunk_s: float = CHUNK_S) -> list[np.ndarray]:
    """Index arrays for consecutive fixed-length chunks."""
    per = max(int(round(chunk_s * imu.sample_rate)), 1)
    return [np.arange(a, min(a + per, len(imu)))
            for a in range(0, len(imu), per)]

def _chunk_frames(kp: KeypointSeries, chunk_s: float = CHUNK_S) -> list[np.ndarray]:
    per = max(int(round(chunk_s * kp.frame_rate)), 1)
    return [np.arange(a, min(a + per, len(kp.frames)))
            for a in range(0, len(kp.frames), per)]


def _received_imu(imu: ImuSeries, kept: set[int],
                  chunks: list[np.ndarray]) -> tuple[ImuSeries, np.ndarray]:
    """Reassemble the receiver's view: full timeline with lost spans linearly
    interpolated, plus a per-sample validity mask."""
    valid = np.zeros(len(imu), dtype=bool)
    for i in kept:
        valid[chunks[i]] = True
    if valid.all():
        return imu, valid
    t = imu.t

    def fill(block: np.ndarray) -> np.ndarray:
        out = block.copy()
        for k in range(block.shape[1]):
            out[~valid, k] = np.interp(t[~valid], t[valid], block[valid, k])
        return out

    return (ImuSeries(t.copy(), fill(imu.acc), fill(imu.gyro), fill(imu.mag),
                      imu.sample_rate), valid)


def _received_keypoints(kp: KeypointSeries, kept: set[int],
                        chunks: list[np.ndarray]) -> KeypointSeries:
    """Receiver's view: lost frames stay on the timeline with confidence 0,
    so the calibration stage bridges them like any occlusion."""
    valid = np.zeros(len(kp.frames), dtype=bool)
    for i in kept:
        valid[chunks[i]] = True
    frames = []
    for k, f in enumerate(kp.frames):
        if valid[k]:
            frames.append(KeypointFrame(f.t, dict(f.joints)))
        else:
            frames.append(KeypointFrame(
                f.t, {n: (u, v, 0.0) for n, (u, v, _) in f.joints.items()}))
    return KeypointSeries(frames, kp.frame_rate)


def _time_sync(cfg: SessionConfig, rng: np.random.Generator,
               log: _Transcript, t0: float) -> ClockOffsetEstimate | None:
    """Periodic two-way exchanges filtered to one offset estimate.

    Each exchange needs both the request and the reply to survive.
    """
    n = max(int(cfg.sample_duration / SYNC_EXCHANGE_PERIOD), 1)
    estimates = []
    ch = cfg.channel
    for seq in range(n):
        t1 = t0 + seq * SYNC_EXCHANGE_PERIOD
        if ch.dropped(rng):
            log.log(t1, "phone", "sync_request_lost", seq=seq)
            continue
        t2 = t1 + ch.delay(rng) + cfg.clock_offset
        t3 = t2 + 0.001
        if ch.dropped(rng):
            log.log(t1, "drone", "sync_reply_lost", seq=seq)
            continue
        t4 = t3 - cfg.clock_offset + ch.delay(rng, reverse=True)
        try:
            est = two_way_offset(t1, t2, t3, t4)
        except SyncGaitError:
            continue
        estimates.append(est)
        log.log(t4, "phone", "sync_sample", seq=seq,
                offset=round(est.offset, 6))
    if not estimates:
        return None
    tracked = kalman_track_offset(estimates)
    return tracked[-1]


def run_session(cfg: SessionConfig, enrollment: Enrollment,
                imu_source, keypoint_source, seed: int = 0) -> SessionResult:
    """Simulate one full mutual-authentication session with retries.

    imu_source(attempt) and keypoint_source(attempt) supply the raw streams
    captured during the given attempt (phone clock / drone clock).
    """
    if enrollment is None or enrollment.consistency_model is None \
            or enrollment.gait_model is None:
        raise EnrollmentMissing("both user models are required")
    rng = np.random.default_rng(seed)
    log = _Transcript()
    t = 0.0
    log.log(t, "phone", "state", state=SessionState.HELLO.value)
    record = None

    for attempt in range(1, cfg.max_attempts + 1):
        log.log(t, "phone", "attempt_start", attempt=attempt)
        imu = imu_source(attempt)
        kp = keypoint_source(attempt)

        log.log(t, "phone", "state", state=SessionState.TIME_SYNC.value)
        offset = _time_sync(cfg, rng, log, t)
        t += cfg.sample_duration
        if offset is None:
            log.log(t, "phone", "attempt_failed", reason="no sync exchange")
            continue
        log.log(t, "phone", "offset_tracked",
                offset=round(offset.offset, 6))

        log.log(t, "phone", "state", state=SessionState.EXCHANGE.value)
        imu_chunks = _chunk_imu(imu)
        kp_chunks = _chunk_frames(kp)
        got_imu, imu_rounds = exchange_with_arq(imu_chunks, cfg.channel, rng)
        got_kp, kp_rounds = exchange_with_arq(kp_chunks, cfg.channel, rng)
        log.log(t, "drone", "imu_received", chunks=len(got_imu),
                sent=len(imu_chunks), retransmit_rounds=imu_rounds)
        log.log(t, "phone", "keypoints_received", chunks=len(got_kp),
                sent=len(kp_chunks), retransmit_rounds=kp_rounds)
        imu_at_drone, imu_valid = _received_imu(imu, got_imu, imu_chunks)
        kp_at_phone = _received_keypoints(kp, got_kp, kp_chunks)

        log.log(t, "phone", "state", state=SessionState.VERIFY.value)
        try:
            s_drone = consistency_score(enrollment, imu_at_drone, kp,
                                        offset, cfg.pipeline,
                                        imu_valid=imu_valid)
            s_phone = consistency_score(enrollment, imu, kp_at_phone,
                                        offset, cfg.pipeline)
            s_gait = gait_score(enrollment, imu, cfg.pipeline)
        except SyncGaitError as exc:
            log.log(t, "phone", "attempt_failed",
                    reason=type(exc).__name__)
            continue

        record = DecisionRecord(
            attempt=attempt,
            consistency_score_drone=s_drone,
            consistency_score_phone=s_phone,
            gait_score=s_gait,
            offset_estimate=offset.offset,
            accepted=s_drone >= 0 and s_phone >= 0 and s_gait >= 0,
        )
        log.log(t, "drone", "decision", score=round(s_drone, 6),
                passed=s_drone >= 0)
        log.log(t, "phone", "decision", consistency=round(s_phone, 6),
                gait=round(s_gait, 6), accepted=record.accepted)
        if record.accepted:
            log.log(t, "phone", "state", state=SessionState.ACCEPTED.value)
            return SessionResult(SessionState.ACCEPTED, record, attempt,
                                 log.events)
        log.log(t, "phone", "attempt_failed", reason="verification")

    log.log(t, "phone", "state", state=SessionState.FAILED.value)
    return SessionResult(SessionState.FAILED, record,
                         cfg.max_attempts, log.events)
