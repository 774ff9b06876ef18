"""
Scene synthesis for ad-hoc arrays: shoebox rooms, image-source impulse
responses, diffuse / point noise at a target SNRatO, and per-device delays.
Also hosts the source-to-array distance Monte Carlo study.
"""

import json
import os
from dataclasses import dataclass, field, asdict
from functools import lru_cache

import numpy as np
from scipy.signal import fftconvolve

from .spectral import DEFAULT_FS, TimeSignal

SOUND_SPEED = 343.0
EARLY_MS = 50.0
MAX_DEVICE_DELAY_S = 0.5
RIR_LENGTH_FACTOR = 1.2


@dataclass(frozen=True)
class RoomSpec:
    """Shoebox room. ``decay_model`` picks how t60 maps to the wall
    reflection coefficient: "sabine" uses Sabine's formula directly,
    "calibrated" (default) corrects it so the generated responses decay
    at the requested rate."""
    length: float
    width: float
    height: float
    t60: float
    sound_speed: float = SOUND_SPEED
    decay_model: str = "calibrated"

    def __post_init__(self):
        if min(self.length, self.width, self.height) <= 0:
            raise ValueError("room dimensions must be positive")
        if self.t60 < 0:
            raise ValueError("t60 must be nonnegative")
        if self.decay_model not in ("sabine", "calibrated"):
            raise ValueError(f"unknown decay model {self.decay_model!r}")

    @property
    def dims(self):
        return np.array([self.length, self.width, self.height])

    def contains(self, p):
        p = np.asarray(p, dtype=float)
        return bool(np.all(p > 0) and np.all(p < self.dims))

    def sabine_reflection(self):
        if self.t60 == 0:
            return 0.0
        L, W, H = self.dims
        volume = L * W * H
        surface = 2 * (L * W + L * H + W * H)
        alpha = 24 * np.log(10) * volume / (self.sound_speed * surface * self.t60)
        if alpha >= 1:
            return 0.0
        return float(np.sqrt(1 - alpha))

    def reflection_coefficient(self):
        if self.decay_model == "sabine":
            return self.sabine_reflection()
        return _calibrated_reflection(self)


@dataclass
class ArrayGeometry:
    mic_positions: np.ndarray
    kind: str = "adhoc"
    aperture_m: float = 0.10

    def __post_init__(self):
        self.mic_positions = np.atleast_2d(np.asarray(self.mic_positions, dtype=float))
        if self.mic_positions.shape[1] != 3 or self.mic_positions.shape[0] < 1:
            raise ValueError("mic_positions must be M x 3 with M >= 1")
        if self.kind not in ("adhoc", "linear"):
            raise ValueError(f"unknown array kind {self.kind!r}")

    @property
    def n_mics(self):
        return self.mic_positions.shape[0]

    @property
    def centroid(self):
        return self.mic_positions.mean(axis=0)


# ---------------------------------------------------------------------------
# impulse responses

def _axis_images(src_coord, dim, mic_coord, radius):
    """1-D image offsets (relative to the mic) and wall-hit counts along one
    axis (Allen & Berkley): x = (1 - 2q) s + 2 m L, hits |m - q| + |m|."""
    n_max = int(np.ceil(radius / (2 * dim))) + 1
    m = np.arange(-n_max, n_max + 1)
    pos = np.concatenate([src_coord + 2 * m * dim, -src_coord + 2 * m * dim])
    hits = np.concatenate([2 * np.abs(m), np.abs(m - 1) + np.abs(m)])
    off = pos - mic_coord
    keep = np.abs(off) <= radius
    return off[keep], hits[keep]


_CHUNK = 1 << 20


def _image_rir(dims, src, mic, beta, fs, c, length, max_order=None):
    h = np.zeros(length)
    radius = (length - 0.5) / fs * c
    dx, ox = _axis_images(src[0], dims[0], mic[0], radius)
    dy, oy = _axis_images(src[1], dims[1], mic[1], radius)
    dz, oz = _axis_images(src[2], dims[2], mic[2], radius)
    d2yz = (dy[:, None]**2 + dz[None, :]**2).ravel()
    oyz = (oy[:, None] + oz[None, :]).ravel()
    keep = d2yz <= radius**2
    if max_order is not None:
        keep &= oyz <= max_order
    d2yz, oyz = d2yz[keep], oyz[keep]
    log_beta = np.log(beta)
    step = max(1, _CHUNK // max(1, d2yz.size))
    for i in range(0, dx.size, step):
        dist = np.sqrt(dx[i:i + step, None]**2 + d2yz[None, :])
        order = ox[i:i + step, None] + oyz[None, :]
        taps = np.rint(dist * (fs / c)).astype(np.int64)
        ok = taps < length
        if max_order is not None:
            ok &= order <= max_order
        amp = np.exp(order[ok] * log_beta) / (4 * np.pi * dist[ok])
        h += np.bincount(taps[ok], weights=amp, minlength=length)
    return h


@lru_cache(maxsize=256)
def _calibrated_reflection(room, fs=DEFAULT_FS, iters=4):
    # decay rate of the image lattice is close to linear in -log(beta);
    # rescale from Sabine's value until the fitted T60 hits the target
    beta = room.sabine_reflection()
    if beta == 0:
        return 0.0
    a = -np.log(beta)
    src = room.dims * np.array([1 / 3, 0.3, 0.4])
    mic = room.dims * np.array([0.62, 0.7, 0.55])
    length = int(2 * room.t60 * fs)
    for _ in range(iters):
        h = _image_rir(room.dims, src, mic, np.exp(-a), fs, room.sound_speed, length)
        a *= estimate_t60(TimeSignal(h, fs)) / room.t60
    return float(np.exp(-a))


def rir_length(room, distance, fs=DEFAULT_FS):
    first = int(round(distance / room.sound_speed * fs))
    return first + 1 + int(np.ceil(RIR_LENGTH_FACTOR * room.t60 * fs))


def image_source_rir(room, src, mic, fs=DEFAULT_FS, max_order=None, length=None):
    """Room impulse response from ``src`` to ``mic`` by the image method.

    Each image contributes ``beta**k / (4 pi d)`` at the integer tap
    ``round(d / c * fs)``, k being its number of wall reflections. With
    ``t60 == 0`` only the direct path is kept. By default every image within
    ``c * 1.2 * t60`` of the direct path is included; ``max_order`` caps the
    reflection count instead.
    """
    src = np.asarray(src, dtype=float)
    mic = np.asarray(mic, dtype=float)
    if not (room.contains(src) and room.contains(mic)):
        raise ValueError("source and microphone must lie strictly inside the room")
    d0 = float(np.linalg.norm(src - mic))
    if d0 == 0:
        raise ValueError("source and microphone coincide")
    if length is None:
        length = rir_length(room, d0, fs)
    beta = room.reflection_coefficient() if room.t60 > 0 else 0.0
    if beta == 0 or max_order == 0:
        h = np.zeros(length)
        first = int(round(d0 / room.sound_speed * fs))
        if first < length:
            h[first] = 1 / (4 * np.pi * d0)
        return TimeSignal(h, fs)
    h = _image_rir(room.dims, src, mic, beta, fs, room.sound_speed, length, max_order)
    return TimeSignal(h, fs)


def first_arrival(room, src, mic, fs=DEFAULT_FS):
    d = np.linalg.norm(np.asarray(src, float) - np.asarray(mic, float))
    return int(round(d / room.sound_speed * fs))


def split_rir(rir, boundary_ms=EARLY_MS, first_tap=None):
    """Split into (direct + early, late) at ``boundary_ms`` after the first
    arrival. The two parts sum to ``rir`` exactly."""
    if boundary_ms <= 0:
        raise ValueError("boundary_ms must be positive")
    h = rir.samples
    if first_tap is None:
        nz = np.flatnonzero(h)
        first_tap = int(nz[0]) if nz.size else 0
    cut = min(h.size, first_tap + int(round(boundary_ms * rir.sample_rate / 1000)) + 1)
    early = np.zeros_like(h)
    late = np.zeros_like(h)
    early[:cut] = h[:cut]
    late[cut:] = h[cut:]
    return TimeSignal(early, rir.sample_rate), TimeSignal(late, rir.sample_rate)


def schroeder_decay_db(rir):
    """Backward-integrated energy decay curve in dB (0 dB at t = 0)."""
    e = np.cumsum(rir.samples[::-1]**2)[::-1]
    with np.errstate(divide="ignore"):
        return 10 * np.log10(e / e[0])


def estimate_t60(rir, lo_db=-5.0, hi_db=-35.0):
    """T60 by a linear fit of the decay curve between ``lo_db`` and
    ``hi_db``, extrapolated to -60 dB."""
    edc = schroeder_decay_db(rir)
    t = np.arange(edc.size) / rir.sample_rate
    sel = (edc <= lo_db) & (edc >= hi_db)
    slope, _ = np.polyfit(t[sel], edc[sel], 1)
    return -60.0 / slope


# ---------------------------------------------------------------------------
# geometry sampling

TEST_ROOM_RANGES = {"length": (10.0, 20.0), "width": (10.0, 20.0),
                    "height": (2.7, 3.5), "t60": (0.4, 0.8)}
TRAIN_ROOM_RANGES = {"length": (5.0, 30.0), "width": (5.0, 30.0),
                     "height": (2.5, 4.0), "t60": (0.0, 1.0)}


def sample_test_room(rng, ranges=TEST_ROOM_RANGES):
    """Uniformly sampled shoebox room and T60."""
    rng = np.random.default_rng(rng)
    vals = {k: float(rng.uniform(*ranges[k])) for k in ("length", "width", "height", "t60")}
    return RoomSpec(**vals)


def sample_point(room, rng, margin=0.3):
    lo = np.full(3, margin)
    hi = room.dims - margin
    return rng.uniform(lo, hi)


def sample_array(room, n_mics, rng, kind="adhoc", source=None, margin=0.3,
                 min_distance=0.3, aperture_m=0.10):
    """Ad-hoc: i.i.d. uniform mics. Linear: uniform spacing ``aperture_m``
    along a random horizontal direction around a uniform center."""
    for _ in range(1000):
        if kind == "adhoc":
            pos = np.stack([sample_point(room, rng, margin) for _ in range(n_mics)])
        elif kind == "linear":
            center = sample_point(room, rng, margin)
            az = rng.uniform(0, 2 * np.pi)
            u = np.array([np.cos(az), np.sin(az), 0.0])
            offs = (np.arange(n_mics) - (n_mics - 1) / 2) * aperture_m
            pos = center + offs[:, None] * u
        else:
            raise ValueError(f"unknown array kind {kind!r}")
        inside = np.all(pos > margin, axis=1) & np.all(pos < room.dims - margin, axis=1)
        if not inside.all():
            continue
        if source is not None and np.min(np.linalg.norm(pos - source, axis=1)) < min_distance:
            continue
        return ArrayGeometry(pos, kind, aperture_m)
    raise RuntimeError("could not place the array inside the room")


# ---------------------------------------------------------------------------
# scenes

@dataclass
class SceneConfig:
    n_mics: int = 16
    array_kind: str = "adhoc"
    noise_kind: str = "diffuse"
    noise_type: str = "babble"
    snrato_db: float = 10.0
    duration_s: float = 3.0
    fs: int = DEFAULT_FS
    max_device_delay_s: float = MAX_DEVICE_DELAY_S
    early_ms: float = EARLY_MS
    min_distance: float = 0.3

    def __post_init__(self):
        if self.noise_kind not in ("diffuse", "point"):
            raise ValueError(f"noise_kind must be diffuse or point, got {self.noise_kind!r}")
        if self.n_mics < 1:
            raise ValueError("n_mics must be >= 1")

    @property
    def n_samples(self):
        return int(round(self.duration_s * self.fs))

    @property
    def max_delay_samples(self):
        return int(round(self.max_device_delay_s * self.fs))


@dataclass
class Scene:
    """Per-channel decomposition of a simulated recording.

    ``direct``, ``tail`` and ``noise`` are (M, n) arrays on the acoustic time
    base; the observed channel m is their sum delayed by
    ``device_delay_samples[m]`` inside a buffer of ``n + max_delay`` samples.
    """
    direct: np.ndarray
    tail: np.ndarray
    noise: np.ndarray
    device_delay_samples: np.ndarray
    first_tap: np.ndarray
    room: RoomSpec
    source_pos: np.ndarray
    geometry: ArrayGeometry
    snrato_db: float
    noise_kind: str
    fs: int = DEFAULT_FS
    max_delay_samples: int = int(MAX_DEVICE_DELAY_S * DEFAULT_FS)
    noise_pos: np.ndarray | None = None
    noise_offsets: list | None = None
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        shapes = {self.direct.shape, self.tail.shape, self.noise.shape}
        if len(shapes) != 1:
            raise ValueError(f"component shapes differ: {shapes}")
        d = np.asarray(self.device_delay_samples)
        if np.any(d < 0) or np.any(d > self.max_delay_samples):
            raise ValueError("device delays outside [0, max_delay]")

    @property
    def n_mics(self):
        return self.direct.shape[0]

    @property
    def n_samples(self):
        return self.direct.shape[1]

    @property
    def device_delay_s(self):
        return np.asarray(self.device_delay_samples) / self.fs

    @property
    def arrival_samples(self):
        """Device delay plus acoustic direct-path delay, per channel."""
        return np.asarray(self.device_delay_samples) + np.asarray(self.first_tap)

    def delayed(self, component):
        """(M, n + max_delay) copy of a component on the observed time base."""
        x = getattr(self, component) if isinstance(component, str) else component
        out = np.zeros((x.shape[0], self.n_samples + self.max_delay_samples))
        for m, d in enumerate(self.device_delay_samples):
            out[m, d:d + self.n_samples] = x[m]
        return out

    def observed(self):
        return self.delayed(self.direct + self.tail + self.noise)

    def manifest(self):
        return {
            "fs": self.fs,
            "n_mics": self.n_mics,
            "n_samples": self.n_samples,
            "max_delay_samples": self.max_delay_samples,
            "room": asdict(self.room),
            "source_pos": np.asarray(self.source_pos).tolist(),
            "mic_positions": self.geometry.mic_positions.tolist(),
            "array_kind": self.geometry.kind,
            "noise_kind": self.noise_kind,
            "noise_pos": None if self.noise_pos is None else np.asarray(self.noise_pos).tolist(),
            "noise_offsets": self.noise_offsets,
            "snrato_db": self.snrato_db,
            "device_delay_samples": np.asarray(self.device_delay_samples).tolist(),
            "device_delay_s": self.device_delay_s.tolist(),
            "first_tap": np.asarray(self.first_tap).tolist(),
            "seed": self.seed,
            **self.meta,
        }


def scale_for_snrato(speech_power_ref, noise, snrato_db, kind):
    """Scale noise to the SNR at the origin.

    diffuse: ``speech_power_ref`` is the direct-sound power 1 m from the
    source; every row of ``noise`` (one per mic) is scaled to the same power
    ``speech_power_ref / 10**(snrato/10)``.
    point: ``speech_power_ref`` is the source-signal power; the noise source
    signal is scaled so the source-level ratio equals ``snrato_db``.
    """
    if speech_power_ref <= 0:
        raise ValueError("reference speech power must be positive")
    target = speech_power_ref / 10 ** (snrato_db / 10)
    noise = np.asarray(noise, dtype=float)
    if kind == "diffuse":
        rows = np.atleast_2d(noise)
        p = np.mean(rows**2, axis=-1)
        if np.any(p <= 0):
            raise ValueError("zero-power noise segment")
        out = rows * np.sqrt(target / p)[:, None]
        return out.reshape(noise.shape)
    if kind == "point":
        p = np.mean(noise**2)
        if p <= 0:
            raise ValueError("zero-power noise source")
        return noise * np.sqrt(target / p)
    raise ValueError(f"unknown noise kind {kind!r}")


def _convolve_rows(x, rirs, n):
    return np.stack([fftconvolve(x, h)[:n] for h in rirs])


def diffuse_segments(bank, n_mics, n_samples, rng):
    """Pick ``n_mics`` pairwise non-overlapping length-``n_samples`` slices."""
    slots = len(bank) // n_samples
    if slots < n_mics:
        raise ValueError(
            f"noise bank of {len(bank)} samples holds {slots} segments of "
            f"{n_samples}, need {n_mics}")
    picked = np.sort(rng.choice(slots, size=n_mics, replace=False))
    rng.shuffle(picked)
    slack = len(bank) - slots * n_samples
    shift = int(rng.integers(0, slack + 1))
    offsets = [int(shift + k * n_samples) for k in picked]
    return np.stack([bank[o:o + n_samples] for o in offsets]), offsets


def synthesize_scene(speech, noise_src, cfg=SceneConfig(), rng=None, room=None,
                     source_pos=None, geometry=None, noise_pos=None,
                     device_delays=None):
    """Build a Scene. Anything not given (room, positions, delays) is drawn
    from ``rng`` in that order.

    ``noise_src`` is a noise bank for diffuse noise (cut into non-overlapping
    per-mic segments) or the point-source signal for point noise.
    """
    seed = rng if isinstance(rng, (int, np.integer)) else None
    rng = np.random.default_rng(rng)
    fs = cfg.fs
    x = speech.samples if isinstance(speech, TimeSignal) else np.asarray(speech, float)
    nz = noise_src.samples if isinstance(noise_src, TimeSignal) else np.asarray(noise_src, float)
    n = cfg.n_samples
    if x.size < n:
        raise ValueError(f"speech has {x.size} samples, need {n}")
    x = x[:n]

    if room is None:
        room = sample_test_room(rng)
    if source_pos is None:
        source_pos = sample_point(room, rng)
    source_pos = np.asarray(source_pos, dtype=float)
    if geometry is None:
        geometry = sample_array(room, cfg.n_mics, rng, cfg.array_kind, source_pos,
                                min_distance=cfg.min_distance)
    mics = geometry.mic_positions
    M = geometry.n_mics

    early, late, taps = [], [], []
    for m in range(M):
        h = image_source_rir(room, source_pos, mics[m], fs)
        tap = first_arrival(room, source_pos, mics[m], fs)
        e, l = split_rir(h, cfg.early_ms, first_tap=tap)
        early.append(e.samples)
        late.append(l.samples)
        taps.append(tap)
    direct = _convolve_rows(x, early, n)
    tail = _convolve_rows(x, late, n)

    speech_power = float(np.mean(x**2))
    offsets = None
    if cfg.noise_kind == "diffuse":
        segs, offsets = diffuse_segments(nz, M, n, rng)
        # direct sound 1 m from the source has gain 1 / (4 pi)
        ref = speech_power / (4 * np.pi) ** 2
        noise = scale_for_snrato(ref, segs, cfg.snrato_db, "diffuse") if ref > 0 else segs
        noise_pos = None
    else:
        if nz.size < n:
            raise ValueError(f"noise source has {nz.size} samples, need {n}")
        src_noise = nz[:n]
        if noise_pos is None:
            for _ in range(1000):
                noise_pos = sample_point(room, rng)
                ok = np.linalg.norm(noise_pos - source_pos) >= cfg.min_distance
                ok &= np.min(np.linalg.norm(mics - noise_pos, axis=1)) >= cfg.min_distance
                if ok:
                    break
        noise_pos = np.asarray(noise_pos, dtype=float)
        if speech_power > 0:
            src_noise = scale_for_snrato(speech_power, src_noise, cfg.snrato_db, "point")
        rirs = [image_source_rir(room, noise_pos, mics[m], fs).samples for m in range(M)]
        noise = _convolve_rows(src_noise, rirs, n)

    if device_delays is None:
        tau = rng.uniform(0, cfg.max_device_delay_s, size=M)
        device_delays = np.rint(tau * fs).astype(int)
    device_delays = np.asarray(device_delays, dtype=int)

    return Scene(direct=direct, tail=tail, noise=noise,
                 device_delay_samples=device_delays, first_tap=np.array(taps),
                 room=room, source_pos=source_pos, geometry=geometry,
                 snrato_db=cfg.snrato_db, noise_kind=cfg.noise_kind, fs=fs,
                 max_delay_samples=cfg.max_delay_samples, noise_pos=noise_pos,
                 noise_offsets=offsets, seed=None if seed is None else int(seed))


def export_scene(scene, out_dir):
    """Write observed / direct / tail / noise WAVs (float32, multichannel,
    observed time base) and ``manifest.json``."""
    from .wavio import write_wav
    os.makedirs(out_dir, exist_ok=True)
    write_wav(os.path.join(out_dir, "observed.wav"), scene.observed(), scene.fs, "FLOAT")
    for comp in ("direct", "tail", "noise"):
        write_wav(os.path.join(out_dir, f"{comp}.wav"), scene.delayed(comp), scene.fs, "FLOAT")
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(scene.manifest(), f, indent=2)


def load_scene(scene_dir):
    """Inverse of :func:`export_scene`."""
    from .wavio import read_wav
    with open(os.path.join(scene_dir, "manifest.json")) as f:
        man = json.load(f)
    comps = {}
    delays = np.asarray(man["device_delay_samples"], dtype=int)
    n = man["n_samples"]
    for comp in ("direct", "tail", "noise"):
        x, _ = read_wav(os.path.join(scene_dir, f"{comp}.wav"))
        x = np.atleast_2d(x)
        comps[comp] = np.stack([x[m, d:d + n] for m, d in enumerate(delays)])
    room = RoomSpec(**man["room"])
    geom = ArrayGeometry(np.asarray(man["mic_positions"]), man["array_kind"])
    known = {"fs", "n_mics", "n_samples", "max_delay_samples", "room", "source_pos",
             "mic_positions", "array_kind", "noise_kind", "noise_pos", "noise_offsets",
             "snrato_db", "device_delay_samples", "device_delay_s", "first_tap", "seed"}
    return Scene(direct=comps["direct"], tail=comps["tail"], noise=comps["noise"],
                 device_delay_samples=delays, first_tap=np.asarray(man["first_tap"]),
                 room=room, source_pos=np.asarray(man["source_pos"]), geometry=geom,
                 snrato_db=man["snrato_db"], noise_kind=man["noise_kind"], fs=man["fs"],
                 max_delay_samples=man["max_delay_samples"],
                 noise_pos=None if man["noise_pos"] is None else np.asarray(man["noise_pos"]),
                 noise_offsets=man["noise_offsets"], seed=man["seed"],
                 meta={k: v for k, v in man.items() if k not in known})


# ---------------------------------------------------------------------------
# distance Monte Carlo

@dataclass
class DistanceStats:
    mean_m: float
    std_m: float
    cdf_x: np.ndarray
    cdf_y: np.ndarray
    samples: np.ndarray = field(repr=False, default=None)

    @classmethod
    def from_samples(cls, d, grid=None):
        d = np.asarray(d, dtype=float)
        if grid is None:
            grid = np.linspace(0, max(20.0, float(d.max())), 201)
        cdf = np.searchsorted(np.sort(d), grid, side="right") / d.size
        return cls(float(d.mean()), float(d.std()), grid, cdf, d)

    def prob_greater(self, x):
        return float(np.mean(self.samples > x))


ROOM_SHAPES = ("square", "rectangle", "circle")
MC_BLOCK = 10000


def _uniform_in_shape(shape, n, rng, max_distance):
    """n uniform 2-D points in a floor plan whose largest internal distance
    is ``max_distance``."""
    if shape == "square":
        side = max_distance / np.sqrt(2)
        return rng.uniform(0, side, size=(n, 2))
    if shape == "rectangle":
        # 2:1 aspect
        w = max_distance / np.sqrt(5)
        return rng.uniform(0, 1, size=(n, 2)) * np.array([2 * w, w])
    if shape == "circle":
        r = max_distance / 2 * np.sqrt(rng.uniform(0, 1, n))
        th = rng.uniform(0, 2 * np.pi, n)
        return np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
    raise ValueError(f"unknown room shape {shape!r}")


def distance_trials(shape, n_mics, n_trials, rng, max_distance=20.0):
    """Per-trial distances: (speaker to conventional-array center,
    mean speaker to ad-hoc mic, speaker to closest ad-hoc mic)."""
    spk = _uniform_in_shape(shape, n_trials, rng, max_distance)
    arr = _uniform_in_shape(shape, n_trials, rng, max_distance)
    mics = _uniform_in_shape(shape, n_trials * n_mics, rng, max_distance)
    mics = mics.reshape(n_trials, n_mics, 2)
    d_conv = np.linalg.norm(spk - arr, axis=1)
    d_mics = np.linalg.norm(mics - spk[:, None, :], axis=2)
    return d_conv, d_mics.mean(axis=1), d_mics.min(axis=1)


def monte_carlo_distances(n_mics=16, n_trials=100_000, seed=0, shape="square",
                          max_distance=20.0):
    """Distance distributions of a conventional array vs an ad-hoc array.

    Trials run in blocks of ``MC_BLOCK`` seeded by ``(seed, block)``, so the
    result does not depend on how blocks are scheduled.
    Returns ``(conventional, adhoc_avg, adhoc_best, per_trial)`` where
    ``per_trial`` is an (n_trials, 3) array.
    """
    if n_mics < 1 or n_trials < 1:
        raise ValueError("n_mics and n_trials must be >= 1")
    shapes = ROOM_SHAPES if shape == "mixed" else (shape,)
    chunks = []
    for b, start in enumerate(range(0, n_trials, MC_BLOCK)):
        rng = np.random.default_rng(np.random.SeedSequence([seed, b]))
        cnt = min(MC_BLOCK, n_trials - start)
        sh = shapes[b % len(shapes)]
        chunks.append(np.stack(distance_trials(sh, n_mics, cnt, rng, max_distance), axis=1))
    per_trial = np.concatenate(chunks)
    stats = [DistanceStats.from_samples(per_trial[:, k]) for k in range(3)]
    return stats[0], stats[1], stats[2], per_trial
