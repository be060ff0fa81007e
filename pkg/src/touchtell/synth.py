"""Synthetic touch-and-sound study generator.

A trial is rendered as an activation movie on a 9x9 skin patch whose
central 5x5 block is the sensor. Contacts that land partly off the sensor
are lost to the tactile channel but still heard by the microphone, which
is what makes the two channels complementary. Audio is derived from the
same movie: one decaying noise burst per contact onset, friction noise
while a contact moves, and a constant noise floor.

Every random draw comes from generators seeded by (study seed, participant,
round, label), so a dataset is a pure function of its configuration and
does not depend on generation order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import signal

from .core import (AUDIO_SAMPLES, EMOTIONS, GESTURES, GRID, NOMINAL_DURATION_S,
                   NOMINAL_RATE_HZ, SAMPLE_RATE_HZ, AudioClip, DatasetManifest, TrialRecord,
                   ensure_dir, labels_for, read_manifest, write_manifest, write_recording_csv,
                   write_wav)
from .errors import ConfigurationError, ValidationError
from .sensor import TransductionConfig, scan_movie

MARGIN = 2
PATCH = GRID + 2 * MARGIN
MOTIONS = ("static", "oscillating", "jittered")
DBFS_LIMIT = 10 ** (-1 / 20)
SUSTAINED_S = 1.0
ATTACK_S = 0.1  # longest rise of a contact; brief contacts rise over a third of their length
CONTROL_RATE_HZ = 1000.0  # time grid the microphone model sees


@dataclass(frozen=True)
class GestureTemplate:
    gesture: str
    event_rate_hz: float
    event_duration_s: float
    peak_activation: float
    contact_radius_taxels: int
    motion: str
    placement_scatter: float = 0.6  # std of the contact centre around the preferred point

    def __post_init__(self):
        if min(self.event_rate_hz, self.event_duration_s, self.peak_activation) <= 0:
            raise ValidationError(f"{self.gesture}: template values must be positive")
        if self.placement_scatter < 0:
            raise ValidationError(f"{self.gesture}: placement_scatter must be >= 0")
        if self.contact_radius_taxels < 0 or self.motion not in MOTIONS:
            raise ValidationError(f"{self.gesture}: bad radius or motion")


@dataclass(frozen=True)
class EmotionRecipe:
    emotion: str
    weights: tuple  # over GESTURES, in vocabulary order
    intensity: float
    tempo: float
    attack_s: float = ATTACK_S  # rise time of each contact, mostly below one sensor frame

    def __post_init__(self):
        if min(self.intensity, self.tempo, self.attack_s) <= 0:
            raise ValidationError(f"{self.emotion}: intensity, tempo and attack must be > 0")
        w = np.asarray(self.weights)
        if len(w) != len(GESTURES) or np.any(w < 0) or abs(w.sum() - 1) > 1e-9:
            raise ValidationError(f"{self.emotion}: weights must be 6 non-negative values "
                                  "summing to 1")


def load_recipes(path=None):
    """Return ({gesture: GestureTemplate}, {emotion: EmotionRecipe})."""
    if path is None:
        text = resources.files("touchtell").joinpath("data/recipes.json").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    obj = json.loads(text)
    templates = {g: GestureTemplate(g, **obj["gestures"][g]) for g in GESTURES}
    recipes = {}
    for e in EMOTIONS:
        spec = obj["emotions"][e]
        weights = tuple(float(spec["weights"].get(g, 0.0)) for g in GESTURES)
        recipes[e] = EmotionRecipe(e, weights, float(spec["intensity"]), float(spec["tempo"]),
                                   float(spec.get("attack_s", ATTACK_S)))
    return templates, recipes


@dataclass(frozen=True)
class AudioSynthConfig:
    burst_gain: float = 1.0e-3  # peak amplitude per unit/s of aggregate activation rise
    friction_gain: float = 6.0e-3  # RMS amplitude per taxel/s of contact motion
    noise_floor: float = 4.0e-2  # RMS of the constant background noise
    mic_gain_std: float = 0.5  # between-participant log std of microphone gain
    onset_level: float = 0.05  # aggregate activation that counts as contact


@dataclass(frozen=True)
class SynthConfig:
    n_participants: int = 28
    n_rounds: int = 3
    between_participant_std: float = 0.15
    within_round_std: float = 0.07
    tempo_jitter_ratio: float = 2.5  # tempo jitter std = ratio * within_round_std
    round_drift: float = 0.2
    area_bias_std: float = 0.25
    seed: int = 0
    duration_s: float = NOMINAL_DURATION_S
    rate_hz: float = NOMINAL_RATE_HZ
    frame_jitter_ms: float = 3.0
    sensor: TransductionConfig = field(default_factory=TransductionConfig)
    audio: AudioSynthConfig = field(default_factory=AudioSynthConfig)
    recipes_path: str | None = None

    def __post_init__(self):
        if self.n_participants < 2:
            raise ConfigurationError("n_participants must be >= 2")
        if self.n_rounds < 1:
            raise ConfigurationError("n_rounds must be >= 1")
        if min(self.between_participant_std, self.within_round_std, self.area_bias_std,
               self.tempo_jitter_ratio) < 0:
            raise ConfigurationError("standard deviations must be >= 0")

    @property
    def n_frames(self):
        return int(round(self.duration_s * self.rate_hz))

    def with_seed(self, seed):
        return replace(self, seed=seed)

    def to_dict(self):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__
             if k not in ("sensor", "audio")}
        d["sensor"] = self.sensor.__dict__.copy()
        d["audio"] = self.audio.__dict__.copy()
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        sensor = TransductionConfig(**d.pop("sensor", {}))
        audio = AudioSynthConfig(**d.pop("audio", {}))
        return cls(sensor=sensor, audio=audio, **d)


@dataclass(frozen=True)
class ParticipantProfile:
    participant_id: str
    amplitude_scale: float
    tempo_scale: float
    area_bias: int
    seed: int
    center: tuple = (2.0, 2.0)  # preferred contact point, sensor coordinates
    mic_gain: float = 1.0

    def __post_init__(self):
        if self.amplitude_scale <= 0 or self.tempo_scale <= 0 or self.mic_gain <= 0:
            raise ValidationError("profile scales must be positive")

    @classmethod
    def default(cls, seed=0):
        return cls("P00", 1.0, 1.0, 0, seed)


def participant_id(index):
    return f"P{index + 1:02d}"


def make_profile(study_seed, participant_index, cfg=SynthConfig()):
    if not 0 <= participant_index < cfg.n_participants:
        raise ConfigurationError("participant index out of range")
    rng = np.random.default_rng([study_seed, 1, participant_index])
    sd = cfg.between_participant_std
    amp, tempo = np.exp(rng.normal(0.0, sd, 2)) if sd > 0 else (1.0, 1.0)
    bias = rng.normal(0.0, cfg.area_bias_std) if sd > 0 else 0.0
    center = tuple(rng.uniform(1.0, 3.0, 2)) if sd > 0 else (2.0, 2.0)
    mic = float(np.exp(rng.normal(0.0, cfg.audio.mic_gain_std))) if sd > 0 else 1.0
    seed = int(rng.integers(0, 2 ** 63 - 1))
    return ParticipantProfile(participant_id(participant_index), float(amp), float(tempo),
                              int(np.clip(np.round(bias), -1, 1)), seed,
                              (float(center[0]), float(center[1])), mic)


# ---------------------------------------------------------------------------
# rendering


def frame_times_ms(cfg, rng):
    period = 1000.0 / cfg.rate_hz
    gaps = period + rng.uniform(-cfg.frame_jitter_ms, cfg.frame_jitter_ms, cfg.n_frames - 1)
    return np.round(np.concatenate([[0.0], np.cumsum(gaps)])).astype(np.int64)


def _schedule(template, tempo, end_s, rng):
    rate = template.event_rate_hz * tempo
    # sustained contacts last as instructed; brief ones follow the rhythm
    sustained = template.event_duration_s >= SUSTAINED_S
    dur = template.event_duration_s if sustained else template.event_duration_s / tempo
    spread = 0.02 if sustained else 0.1
    onset = rng.uniform(0.15, 0.15 + min(1.0 / rate, 0.6))
    events = []
    while end_s - 0.05 - onset >= 0.5 * dur:
        d = min(dur * np.exp(rng.normal(0.0, spread)), end_s - 0.05 - onset)
        if d < 0.02:
            break
        events.append((onset, d, np.exp(rng.normal(0.0, 0.8 * spread))))
        onset = onset + max(d + 0.1, np.exp(rng.normal(0.0, 0.2)) / rate)
    return events


def _envelope(u_s, dur, attack_s=ATTACK_S):
    rise = min(attack_s, dur / 3.0)
    fall = min(ATTACK_S, dur / 3.0)
    up = np.clip(u_s / rise, 0.0, 1.0)
    down = np.clip((dur - u_s) / fall, 0.0, 1.0)
    return 0.5 - 0.5 * np.cos(np.pi * np.minimum(up, down))


@dataclass(frozen=True)
class Contact:
    onset: float
    duration: float
    peak: float
    center: tuple
    axis: tuple
    phase: float


def plan_contacts(template, amplitude, tempo, center, end_s, rng):
    """Draw every random quantity of a trial's contacts up front."""
    contacts = []
    for onset, dur, level in _schedule(template, tempo, end_s, rng):
        peak = min(1.0, template.peak_activation * amplitude * level)
        c0 = np.asarray(center) + rng.normal(0.0, template.placement_scatter, 2)
        axis = rng.normal(0.0, 1.0, 2)
        axis /= np.linalg.norm(axis) + 1e-12
        phase = rng.uniform(0, 2 * np.pi)
        contacts.append(Contact(onset, dur, peak, tuple(c0), tuple(axis), phase))
    return contacts


def render_contacts(contacts, template, tempo, area_bias, times_s, attack_s=ATTACK_S):
    """Activation on the 9x9 patch at the given times, in [0, 1]."""
    coords = np.arange(PATCH) - MARGIN
    rows, cols = np.meshgrid(coords, coords, indexing="ij")
    movie = np.zeros((len(times_s), PATCH, PATCH))
    radius = max(0, template.contact_radius_taxels + area_bias) + 0.5
    for c in contacts:
        sel = np.flatnonzero((times_s >= c.onset) & (times_s <= c.onset + c.duration))
        if sel.size == 0:
            continue
        u = times_s[sel] - c.onset
        env = c.peak * _envelope(u, c.duration, attack_s)
        if template.motion == "oscillating":
            sway = 1.0 * np.sin(2 * np.pi * 1.2 * tempo * u + c.phase)
            cr = c.center[0] + sway * c.axis[0]
            cc = c.center[1] + sway * c.axis[1]
        else:
            cr = np.full(sel.size, c.center[0])
            cc = np.full(sel.size, c.center[1])
        dist = np.hypot(rows[None] - cr[:, None, None], cols[None] - cc[:, None, None])
        spatial = np.where(dist <= radius, 1.0, np.exp(-((dist - radius) / 0.35) ** 2))
        movie[sel] = np.maximum(movie[sel], env[:, None, None] * spatial)
    return np.clip(movie, 0.0, 1.0)


def render_movie(template, amplitude, tempo, area_bias, center, times_s, rng,
                 attack_s=ATTACK_S):
    """Activation on the 9x9 patch at each frame time, in [0, 1]."""
    contacts = plan_contacts(template, amplitude, tempo, center, times_s[-1], rng)
    return render_contacts(contacts, template, tempo, area_bias, times_s, attack_s)


def sensor_view(movie):
    return movie[:, MARGIN:MARGIN + GRID, MARGIN:MARGIN + GRID]


# ---------------------------------------------------------------------------
# audio

_BANDS = {  # (low Hz, high Hz, decay s) by contact size at onset
    "click": (2500.0, 9000.0, 0.015),
    "tap": (700.0, 3000.0, 0.030),
    "thud": (120.0, 900.0, 0.050),
}
_SOS = {name: signal.butter(2, (lo, hi), btype="band", fs=SAMPLE_RATE_HZ, output="sos")
        for name, (lo, hi, _) in _BANDS.items()}
_FRICTION_SOS = signal.butter(2, (1000.0, 6000.0), btype="band", fs=SAMPLE_RATE_HZ,
                              output="sos")


@dataclass(frozen=True)
class Onset:
    frame: int
    time_s: float
    rise_rate: float  # max aggregate activation derivative during the rise, 1/s
    area: int  # patch cells above a quarter of the rise peak
    band: str


def detect_onsets(movie, times_s, level=0.05):
    agg = movie.reshape(len(movie), -1).sum(axis=1)
    contact = agg > level
    dt = np.diff(times_s)
    deriv = np.diff(agg) / dt
    out = []
    for f in np.flatnonzero(contact & ~np.concatenate([[False], contact[:-1]])):
        stop = f
        while stop + 1 < len(agg) and agg[stop + 1] > agg[stop]:
            stop += 1
        lo = max(f - 1, 0)
        rise = float(deriv[lo:max(stop, lo + 1)].max()) if len(deriv) else 0.0
        peak_frame = movie[stop]
        area = int(np.count_nonzero(peak_frame > 0.25 * peak_frame.max()))
        band = "click" if area <= 2 else ("tap" if area <= 9 else "thud")
        out.append(Onset(int(f), float(times_s[f]), max(rise, 0.0), area, band))
    return out


def contact_speed(movie, times_s, level=0.05):
    """Centroid speed of the activation (patch cells per second) per frame."""
    flat = movie.reshape(len(movie), -1)
    agg = flat.sum(axis=1)
    coords = np.arange(PATCH, dtype=np.float64)
    rr, cc = np.meshgrid(coords, coords, indexing="ij")
    safe = np.where(agg > 0, agg, 1.0)
    cen = np.stack([flat @ rr.ravel(), flat @ cc.ravel()], axis=1) / safe[:, None]
    speed = np.zeros(len(movie))
    both = (agg[1:] > level) & (agg[:-1] > level)
    step = np.linalg.norm(np.diff(cen, axis=0), axis=1) / np.diff(times_s)
    speed[1:] = np.where(both, step, 0.0)
    return speed


def synth_audio_signal(movie, times_s, cfg=AudioSynthConfig(), rng=None, gain=1.0,
                       n_samples=AUDIO_SAMPLES):
    """Float signal before normalisation and quantisation."""
    rng = np.random.default_rng(0) if rng is None else rng
    sr = SAMPLE_RATE_HZ
    out = np.zeros(n_samples)
    for onset in detect_onsets(movie, times_s, cfg.onset_level):
        lo, hi, tau = _BANDS[onset.band]
        length = int(6 * tau * sr)
        start = int(round(onset.time_s * sr))
        if start >= n_samples:
            continue
        noise = signal.sosfilt(_SOS[onset.band], rng.standard_normal(length + 256))[256:]
        burst = noise / noise.std() * np.exp(-np.arange(length) / (tau * sr))
        amp = gain * cfg.burst_gain * onset.rise_rate
        end = min(start + length, n_samples)
        out[start:end] += amp * burst[:end - start]
    speed = contact_speed(movie, times_s, cfg.onset_level)
    if cfg.friction_gain > 0 and speed.max() > 0:
        t = np.arange(n_samples) / sr
        env = np.interp(t, times_s, speed)
        noise = signal.sosfilt(_FRICTION_SOS, rng.standard_normal(n_samples))
        out += gain * cfg.friction_gain * env * noise / (noise.std() + 1e-12)
    if cfg.noise_floor > 0:
        out += cfg.noise_floor * rng.standard_normal(n_samples)
    return out


def normalize_peak(x, limit=DBFS_LIMIT):
    peak = np.abs(x).max() if len(x) else 0.0
    return x * (limit / peak) if peak > limit else x


def synth_audio_from_events(movie, times_s, cfg=AudioSynthConfig(), rng=None, gain=1.0,
                            n_samples=AUDIO_SAMPLES):
    x = synth_audio_signal(movie, times_s, cfg, rng, gain, n_samples)
    return AudioClip.from_float(normalize_peak(x))


# ---------------------------------------------------------------------------
# trials


@dataclass
class Trial:
    recording: object
    audio: AudioClip
    gesture: str  # gesture actually rendered
    movie: np.ndarray = field(repr=False, default=None)


_RECIPE_CACHE = {}


def _recipes(cfg):
    key = cfg.recipes_path
    if key not in _RECIPE_CACHE:
        _RECIPE_CACHE[key] = load_recipes(key)
    return _RECIPE_CACHE[key]


def _round_factor(cfg, round_index):
    return float(np.exp(cfg.round_drift * (round_index - (cfg.n_rounds + 1) / 2.0)))


def _render_trial(gesture, amplitude, tempo, profile, cfg, rng, keep_movie=False,
                  attack_s=ATTACK_S):
    template = _recipes(cfg)[0][gesture]
    times_ms = frame_times_ms(cfg, rng)
    times_s = times_ms / 1000.0
    contacts = plan_contacts(template, amplitude, tempo, profile.center, times_s[-1], rng)
    movie = render_contacts(contacts, template, tempo, profile.area_bias, times_s, attack_s)
    recording = scan_movie(sensor_view(movie), times_ms, cfg.sensor, rng)
    recording.nominal_rate_hz = cfg.rate_hz
    # the microphone follows the same contacts on a finer grid, so it hears
    # rises the sensor frames cannot resolve
    fine_s = np.arange(int(times_s[-1] * CONTROL_RATE_HZ) + 1) / CONTROL_RATE_HZ
    fine = render_contacts(contacts, template, tempo, profile.area_bias, fine_s, attack_s)
    audio = synth_audio_from_events(fine, fine_s, cfg.audio, rng, profile.mic_gain)
    return Trial(recording, audio, gesture, movie if keep_movie else None)


def _trial_scales(profile, round_index, cfg, rng):
    sd = cfg.within_round_std
    jitter = (np.exp(rng.normal(0.0, [sd, cfg.tempo_jitter_ratio * sd])) if sd > 0
              else np.ones(2))
    amplitude = profile.amplitude_scale * _round_factor(cfg, round_index) * jitter[0]
    return amplitude, profile.tempo_scale * jitter[1]


def gesture_trial(gesture, profile, round_index, cfg=SynthConfig(), keep_movie=False):
    code = GESTURES.index(gesture)
    rng = np.random.default_rng([profile.seed, 2, round_index, code])
    amplitude, tempo = _trial_scales(profile, round_index, cfg, rng)
    return _render_trial(gesture, amplitude, tempo, profile, cfg, rng, keep_movie)


def sample_emotion_gesture(emotion, rng, cfg=SynthConfig()):
    _, recipes = _recipes(cfg)
    return GESTURES[int(rng.choice(len(GESTURES), p=recipes[emotion].weights))]


def emotion_trial(emotion, profile, round_index, cfg=SynthConfig(), keep_movie=False):
    code = EMOTIONS.index(emotion)
    rng = np.random.default_rng([profile.seed, 3, round_index, code])
    recipe = _recipes(cfg)[1][emotion]
    gesture = sample_emotion_gesture(emotion, rng, cfg)
    amplitude, tempo = _trial_scales(profile, round_index, cfg, rng)
    return _render_trial(gesture, amplitude * recipe.intensity, tempo * recipe.tempo,
                         profile, cfg, rng, keep_movie, recipe.attack_s)


def gen_gesture_recording(gesture, profile, round_index, cfg=SynthConfig()):
    t = gesture_trial(gesture, profile, round_index, cfg)
    return t.recording, t.audio


def gen_emotion_recording(emotion, profile, round_index, cfg=SynthConfig()):
    t = emotion_trial(emotion, profile, round_index, cfg)
    return t.recording, t.audio


def trial_specs(cfg, task):
    """(participant index, round, label) in canonical manifest order."""
    labels = labels_for(task)
    return [(p, r, label) for p in range(cfg.n_participants)
            for r in range(1, cfg.n_rounds + 1) for label in labels]


def make_trial(cfg, task, p_index, round_index, label, profiles=None):
    profile = (profiles or {}).get(p_index) or make_profile(cfg.seed, p_index, cfg)
    if task == "emotion":
        return emotion_trial(label, profile, round_index, cfg)
    return gesture_trial(label, profile, round_index, cfg)


def trial_paths(task, pid, round_index, label):
    base = f"trials/{task}/{pid}/r{round_index}_{label}"
    return base + ".csv", base + ".wav"


def _write_one(args):
    cfg, task, out_dir, p, r, label = args
    trial = make_trial(cfg, task, p, r, label)
    csv_rel, wav_rel = trial_paths(task, participant_id(p), r, label)
    ensure_dir((out_dir / csv_rel).parent)
    write_recording_csv(trial.recording, out_dir / csv_rel)
    write_wav(trial.audio, out_dir / wav_rel)
    return TrialRecord(participant_id(p), r, task, label, csv_rel, wav_rel)


def gen_dataset(cfg, task, out_dir, jobs=1):
    """Write CSV + WAV per trial and (re)write ``manifest.jsonl``.

    Trials of other tasks already listed in the manifest are kept.
    """
    out_dir = ensure_dir(out_dir)
    labels_for(task)
    jobs_args = [(cfg, task, out_dir, p, r, label) for p, r, label in trial_specs(cfg, task)]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(jobs) as pool:
            records = list(pool.map(_write_one, jobs_args, chunksize=8))
    else:
        records = [_write_one(a) for a in jobs_args]
    manifest_path = out_dir / "manifest.jsonl"
    kept = []
    if manifest_path.exists():
        kept = [t for t in read_manifest(manifest_path).trials if t.task != task]
    trials = sorted(kept + records, key=lambda t: (t.task, t.participant_id, t.round,
                                                   labels_for(t.task).index(t.label)))
    manifest = DatasetManifest(trials, cfg.seed, root=out_dir)
    write_manifest(manifest, manifest_path)
    (out_dir / "synth_config.json").write_text(
        json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest
