"""End-to-end acceptance suite.

Each criterion prints one PASS/FAIL line on the real stdout (bypassing
pytest capture) and asserts its thresholds. The heavyweight fixtures
(10-subject cohort and its enrollments) are shared across criteria.
"""

import json
import math
import sys
import time

import numpy as np
import pytest

from syncgait.cli import main as cli_main
from syncgait.metrics import evaluate
from syncgait.orientation import (Quaternion, integrate_velocity,
                                  quaternion_to_euler, rotate_to_world)
from syncgait.pipeline import consistency_score, enroll, gait_score
from syncgait.posture import AdctConfig, adct_cutoff, adct_smooth, \
    histogram_entropy
from syncgait.protocol import ChannelModel, SessionConfig, SessionState, \
    run_session
from syncgait.gait import gait_representation, segment_cycles
from syncgait.series import ImuSeries, Series1D
from syncgait.syncing import kalman_track_offset, two_way_offset
from syncgait.synth import (HijackAttack, MimicryAttack, RelayAttack,
                            SubjectParams, generate_attack, generate_session,
                            make_cohort)

CLOCK_OFFSET = 0.08

_CAPTURE_MANAGER = None


@pytest.fixture(autouse=True)
def _live_reporting(request):
    """Expose the capture manager so report() can write to the real stdout."""
    global _CAPTURE_MANAGER
    _CAPTURE_MANAGER = request.config.pluginmanager.getplugin("capturemanager")
    yield


def report(num: int, name: str, ok: bool, detail: str) -> None:
    line = f"[criterion {num}] {'PASS' if ok else 'FAIL'} {name}: {detail}"
    if _CAPTURE_MANAGER is not None:
        with _CAPTURE_MANAGER.global_and_fixture_disabled():
            print(line, flush=True)
    else:
        print(line, file=sys.__stdout__, flush=True)
    assert ok, line


# --- shared heavy fixtures -----------------------------------------------------

@pytest.fixture(scope="module")
def cohort():
    return make_cohort(10, seed=11)


@pytest.fixture(scope="module")
def offset_estimate():
    from syncgait.syncing import ClockOffsetEstimate
    return ClockOffsetEstimate(CLOCK_OFFSET, 1e-6, 0.005)


@pytest.fixture(scope="module")
def enrollments(cohort, offset_estimate):
    out = {}
    for vi, subject in enumerate(cohort):
        sessions = []
        for so in range(10, 26):
            imu, kp, _ = generate_session(subject, clock_offset=CLOCK_OFFSET,
                                          seed_offset=so)
            sessions.append((imu, kp, offset_estimate))
        out[vi] = enroll(sessions, seed=0)
    return out


# --- criterion 1: orientation core ---------------------------------------------

def _rodrigues(axis, angle):
    k = axis / np.linalg.norm(axis)
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + math.sin(angle) * kx + (1 - math.cos(angle)) * kx @ kx


def test_criterion_1_orientation():
    t0 = time.time()
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(1000):
        axis = rng.normal(size=3)
        angle = rng.uniform(-math.pi, math.pi)
        v = rng.normal(size=3)
        k = axis / np.linalg.norm(axis)
        s = math.sin(angle / 2)
        q = Quaternion(math.cos(angle / 2), k[0] * s, k[1] * s, k[2] * s)
        err = np.max(np.abs(rotate_to_world(q, v) - _rodrigues(axis, angle) @ v))
        worst = max(worst, err)
    ok_rot = worst < 1e-9

    # Euler extraction by direct substitution on single-axis quaternions
    h = math.pi / 10
    e_roll = quaternion_to_euler(Quaternion(math.cos(h), math.sin(h), 0, 0))
    e_pitch = quaternion_to_euler(Quaternion(math.cos(h), 0, math.sin(h), 0))
    e_yaw = quaternion_to_euler(Quaternion(math.cos(h), 0, 0, math.sin(h)))
    ok_euler = (abs(e_roll.roll - 2 * h) < 1e-12
                and abs(e_roll.pitch) < 1e-12 and abs(e_roll.yaw) < 1e-12
                and abs(e_pitch.pitch + 2 * h) < 1e-12
                and abs(e_yaw.yaw - 2 * h) < 1e-12)

    # velocity integration against closed forms, 2% tolerance
    f_s, n = 100.0, 600
    t = np.arange(n) / f_s
    a_const = np.tile([1.5, -0.7, 0.2], (n, 1))
    v_const = integrate_velocity(a_const, f_s)
    err_const = np.max(np.abs(v_const - np.outer(t, a_const[0])))
    scale_const = np.abs(np.outer(t, a_const[0])).max()

    w = 2 * np.pi * 1.2
    a_sin = (0.9 * w * np.cos(w * t))[:, None] * np.array([[1.0, 0, 0]])
    v_sin = integrate_velocity(a_sin, f_s)[:, 0]
    err_sin = np.max(np.abs(v_sin - 0.9 * np.sin(w * t)))
    ok_vel = (err_const <= 0.02 * scale_const and err_sin <= 0.02 * 0.9)

    elapsed = time.time() - t0
    ok = ok_rot and ok_euler and ok_vel and elapsed < 5.0
    report(1, "orientation core", ok,
           f"rotation err {worst:.2e}, euler exact {ok_euler}, "
           f"integration err {err_sin / 0.9 * 100:.2f}%, {elapsed:.2f}s")


# --- criterion 2: adaptive smoothing cutoff --------------------------------------

def _entropy_oracle(v, bins):
    counts, _ = np.histogram(v, bins=bins, range=(v.min(), v.max()))
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log2(p)).sum())


def test_criterion_2_adaptive_cutoff():
    rng = np.random.default_rng(2)
    cfg = AdctConfig(f_base=0.1, alpha=0.2, bins=256)
    ok_formula = True
    for _ in range(20):
        n = int(rng.integers(64, 4096))
        v = rng.normal(size=n)
        h = _entropy_oracle(v, 256)
        expected = max(1, min(n, math.floor(n * (0.1 + 0.2 * h / math.log2(n)))))
        if adct_cutoff(n, histogram_entropy(v, 256), cfg) != expected:
            ok_formula = False

    ok_mono = True
    for _ in range(100):
        n = int(rng.integers(16, 4096))
        h1, h2 = sorted(rng.uniform(0.0, math.log2(n), 2))
        if adct_cutoff(n, h1, cfg) > adct_cutoff(n, h2, cfg):
            ok_mono = False

    const = Series1D(np.full(256, -1.75), rate=100.0)
    ok_const = bool(np.allclose(adct_smooth(const).values, -1.75, atol=1e-12))

    ok = ok_formula and ok_mono and ok_const
    report(2, "adaptive smoothing cutoff", ok,
           f"formula {ok_formula}, monotone {ok_mono}, "
           f"constant identity {ok_const}")


# --- criterion 3: clock synchronization ------------------------------------------

def test_criterion_3_clock_sync():
    exact = True
    for offset in np.linspace(-0.5, 0.5, 25):
        for delay in np.linspace(0.001, 0.25, 20):
            t1 = 3.0
            t2 = t1 + delay + offset
            t3 = t2 + 0.002
            t4 = t3 - offset + delay
            if abs(two_way_offset(t1, t2, t3, t4).offset - offset) > 1e-12:
                exact = False

    true_offset = 0.08
    hits = 0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        ests = []
        for _ in range(20):
            fwd = 0.004 + abs(rng.normal(0, 0.005))
            back = 0.004 + abs(rng.normal(0, 0.005))
            t1 = rng.uniform(0, 60)
            t2 = t1 + fwd + true_offset
            t3 = t2 + 0.001
            t4 = t3 - true_offset + back
            ests.append(two_way_offset(t1, t2, t3, t4))
        if abs(kalman_track_offset(ests)[-1].offset - true_offset) < 0.002:
            hits += 1

    ok = exact and hits >= 48   # 95% of 50 seeds
    report(3, "clock synchronization", ok,
           f"symmetric exact over 500 combos {exact}, "
           f"tracked <2ms in {hits}/50 seeds")


# --- criterion 4: gait segmentation ------------------------------------------------

def test_criterion_4_segmentation(cohort):
    # noise-free 1.5 s bobbing: every cycle within 150 +/- 3 samples
    rate = 100.0
    t = np.arange(int(12.0 * rate)) / rate
    w = 2 * np.pi / 1.5
    az = 9.81 - 0.5 * w * w * np.sin(w * t)
    imu = ImuSeries(t, np.column_stack([0 * t, 0 * t, az]),
                    np.zeros((len(t), 3)),
                    np.tile([22.0, 0.0, -43.0], (len(t), 1)), rate)
    lengths = [round((b - a) * rate) for a, b in segment_cycles(imu)]
    ok_sine = all(147 <= n <= 153 for n in lengths) and len(lengths) >= 5

    # cohort boundary error vs the noise-free ground truth
    errs = []
    for i, subject in enumerate(cohort):
        s_imu, _, gt = generate_session(subject, clock_offset=CLOCK_OFFSET,
                                        seed_offset=40 + i)
        cycles = gait_representation(s_imu)
        bounds = [c.t_start for c in cycles] + [cycles[-1].t_end]
        gtb = np.array(gt.cycle_boundaries)
        errs.extend(float(np.min(np.abs(gtb - b))) for b in bounds)
    errs = np.array(errs)
    frac = float(np.mean(errs < 0.05))
    ok = ok_sine and frac >= 0.95
    report(4, "gait segmentation", ok,
           f"sine lengths {min(lengths)}..{max(lengths)} samples, "
           f"boundary err <0.05s for {frac * 100:.1f}% of {len(errs)} cycles")


# --- criterion 5: cohort verification accuracy --------------------------------------

def _impostor_scores(cohort, enrollments, offset_estimate, vi, k):
    """One impostor trio against victim vi: mismatched streams for the
    consistency channel, the impostor's own signals for the gait channel."""
    imp = (vi + 1 + k) % len(cohort)
    r_imu, r_kp, _ = generate_attack(RelayAttack(cohort[vi], cohort[imp]),
                                     clock_offset=CLOCK_OFFSET,
                                     seed_offset=300 + k)
    cons_i = consistency_score(enrollments[vi], r_imu, r_kp, offset_estimate)
    i_imu, i_kp, _ = generate_session(cohort[imp], clock_offset=CLOCK_OFFSET,
                                      seed_offset=330 + k)
    gait_i = gait_score(enrollments[vi], i_imu)
    cons_h = consistency_score(enrollments[vi], i_imu, i_kp, offset_estimate)
    return cons_i, gait_i, min(cons_h, gait_i)


def test_criterion_5_cohort_accuracy(cohort, enrollments, offset_estimate):
    t0 = time.time()
    cons_g, gait_g, fus_g = [], [], []
    cons_i, gait_i, fus_i = [], [], []
    for vi in range(10):
        for k in range(2):
            imu, kp, _ = generate_session(cohort[vi],
                                          clock_offset=CLOCK_OFFSET,
                                          seed_offset=60 + k)
            c = consistency_score(enrollments[vi], imu, kp, offset_estimate)
            g = gait_score(enrollments[vi], imu)
            cons_g.append(c)
            gait_g.append(g)
            fus_g.append(min(c, g))
            ci, gi, fi = _impostor_scores(cohort, enrollments,
                                          offset_estimate, vi, k)
            cons_i.append(ci)
            gait_i.append(gi)
            fus_i.append(fi)
    eer_c = evaluate(cons_g, cons_i).eer
    eer_g = evaluate(gait_g, gait_i).eer
    eer_f = evaluate(fus_g, fus_i).eer
    elapsed = time.time() - t0
    ok = eer_c <= 0.05 and eer_g <= 0.05 and eer_f <= 0.02 and elapsed < 300
    report(5, "cohort verification accuracy", ok,
           f"20+20 sessions: consistency EER {eer_c * 100:.2f}%, "
           f"gait EER {eer_g * 100:.2f}%, fused EER {eer_f * 100:.2f}%, "
           f"{elapsed:.0f}s")


# --- criterion 6: attack resistance ---------------------------------------------------

def test_criterion_6_attacks(cohort, enrollments, offset_estimate):
    counts = {k: {"cons": 0, "gait": 0, "fused": 0, "n": 0}
              for k in ("relay", "hijack", "mimicry")}
    genuine = {"cons": 0, "gait": 0, "fused": 0, "n": 0}
    for vi in range(10):
        for j in range(5):
            di = (vi + 1 + j) % 10
            specs = (("relay", RelayAttack(cohort[vi], cohort[di])),
                     ("hijack", HijackAttack(cohort[di])),
                     ("mimicry", MimicryAttack(cohort[di], cohort[vi], 0.5)))
            for name, spec in specs:
                imu, kp, _ = generate_attack(spec, clock_offset=CLOCK_OFFSET,
                                             seed_offset=900 + 10 * vi + j)
                c = consistency_score(enrollments[vi], imu, kp,
                                      offset_estimate)
                g = gait_score(enrollments[vi], imu)
                d = counts[name]
                d["cons"] += c >= 0
                d["gait"] += g >= 0
                d["fused"] += (c >= 0 and g >= 0)
                d["n"] += 1
        imu, kp, _ = generate_session(cohort[vi], clock_offset=CLOCK_OFFSET,
                                      seed_offset=60)
        c = consistency_score(enrollments[vi], imu, kp, offset_estimate)
        g = gait_score(enrollments[vi], imu)
        genuine["cons"] += c >= 0
        genuine["gait"] += g >= 0
        genuine["fused"] += (c >= 0 and g >= 0)
        genuine["n"] += 1

    def rate(d, key):
        return d[key] / d["n"]

    relay, hijack, mimic = counts["relay"], counts["hijack"], counts["mimicry"]
    ok_relay = rate(relay, "gait") >= 0.95 and rate(relay, "fused") <= 0.02
    ok_hijack = rate(hijack, "cons") >= 0.95 and rate(hijack, "fused") <= 0.02
    ok_mimic = rate(mimic, "fused") <= 0.05
    # conjunction invariant: on every decision set the fused accept rate is
    # bounded by both module accept rates, exactly
    ok_bound = all(d["fused"] <= min(d["cons"], d["gait"])
                   for d in (relay, hijack, mimic, genuine))
    ok = ok_relay and ok_hijack and ok_mimic and ok_bound
    report(6, "attack resistance", ok,
           f"relay gait {rate(relay, 'gait') * 100:.0f}% fused "
           f"{rate(relay, 'fused') * 100:.0f}%; hijack consistency "
           f"{rate(hijack, 'cons') * 100:.0f}% fused "
           f"{rate(hijack, 'fused') * 100:.0f}%; mimicry(0.5) fused "
           f"{rate(mimic, 'fused') * 100:.0f}%; AND-bound exact {ok_bound}")


# --- criterion 7: packet-loss robustness ------------------------------------------------

def test_criterion_7_loss_robustness(cohort, enrollments):
    rates = {}
    for loss in (0.0, 0.6):
        accepted = 0
        n = 100
        for k in range(n):
            vi = k % 10
            imu, kp, _ = generate_session(cohort[vi],
                                          clock_offset=CLOCK_OFFSET,
                                          seed_offset=700 + k)
            cfg = SessionConfig(channel=ChannelModel(loss_rate=loss),
                                clock_offset=CLOCK_OFFSET)
            result = run_session(cfg, enrollments[vi],
                                 lambda a, i=imu: i, lambda a, p=kp: p,
                                 seed=5000 + k + int(loss * 10) * 100000)
            accepted += result.state == SessionState.ACCEPTED
        rates[loss] = accepted / n
    drop = rates[0.0] - rates[0.6]
    ok = drop <= 0.05
    report(7, "packet-loss robustness", ok,
           f"genuine acceptance {rates[0.0] * 100:.0f}% at 0% loss vs "
           f"{rates[0.6] * 100:.0f}% at 60% loss ({drop * 100:+.1f} pp)")


# --- criterion 8: evaluation metrics ----------------------------------------------------

def _oracle_eer_auc(g, i):
    uniq = np.unique(np.concatenate([g, i]))
    thr = np.concatenate([[uniq[0] - 1], uniq, [uniq[-1] + 1]])
    far = np.array([(i >= t).mean() for t in thr])
    frr = np.array([(g < t).mean() for t in thr])
    diff = far - frr
    eer = (far[-1] + frr[-1]) / 2
    for k in range(len(thr)):
        if diff[k] <= 0:
            if diff[k] == 0 or k == 0:
                eer = (far[k] + frr[k]) / 2
            else:
                w = diff[k - 1] / (diff[k - 1] - diff[k])
                eer = (1 - w) * far[k - 1] + w * far[k]
            break
    pts = sorted(zip(far, 1 - frr))
    auc = sum((x1 - x0) * (y0 + y1) / 2
              for (x0, y0), (x1, y1) in zip(pts, pts[1:]))
    return eer, auc


def test_criterion_8_metrics_oracle():
    rng = np.random.default_rng(8)
    ok = True
    worst = 0.0
    for _ in range(50):
        g = rng.normal(0.4, 0.6, rng.integers(5, 80))
        i = rng.normal(-0.4, 0.6, rng.integers(5, 80))
        rep = evaluate(g, i)
        eer_o, auc_o = _oracle_eer_auc(g, i)
        worst = max(worst, abs(rep.eer - eer_o), abs(rep.auc - auc_o))
        if abs(rep.eer - eer_o) > 1e-12 or abs(rep.auc - auc_o) > 1e-12:
            ok = False
    report(8, "evaluation metrics", ok,
           f"EER/AUC match the exhaustive-threshold oracle on 50 random "
           f"score sets (max deviation {worst:.2e})")


# --- criterion 9: reproducible evaluation -------------------------------------------------

def test_criterion_9_reproducible_evaluation(tmp_path):
    config = {"cohort_size": 3, "enroll_sessions": 4, "genuine_trials": 1,
              "attack_trials": 1, "duration": 8.0}
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(config))
    outputs = []
    for run in ("r1", "r2"):
        out = tmp_path / run
        code = cli_main(["evaluate", "--config", str(cfg_path),
                         "--seed", "17", "--out", str(out)])
        assert code == 0
        blob = {}
        for name in ("report.json", "roc_consistency.csv", "roc_gait.csv",
                     "roc_fused.csv"):
            blob[name] = (out / name).read_bytes()
        outputs.append(blob)
    identical = {name: outputs[0][name] == outputs[1][name]
                 for name in outputs[0]}
    ok = all(identical.values())
    report(9, "reproducible evaluation", ok,
           f"two seeded runs byte-identical: "
           + ", ".join(f"{n} {v}" for n, v in identical.items()))
