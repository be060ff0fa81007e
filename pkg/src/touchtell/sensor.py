"""Piezoresistive taxel transduction and the framed wire protocol.

Chain per taxel: activation -> Velostat resistance -> divider voltage at the
analog pin (1.4 kOhm pulldown, 3.3 V drive) -> 12-bit ADC count.

Wire frame (59 bytes, little-endian)::

    A5 5A | seq u16 | timestamp_ms u32 | 25 x count u16 | crc8

CRC-8 uses polynomial 0x07, init 0x00, over the 58 preceding bytes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .core import ADC_MAX, GRID, N_TAXELS, SensorFrame, TouchRecording
from .errors import (DomainError, FramingError, IntegrityError, LengthError,
                     RangeError, ShapeError, ValidationError)

MAGIC = b"\xa5\x5a"
FRAME_BYTES = 59
_BODY = struct.Struct("<2sHI25H")


@dataclass(frozen=True)
class TransductionConfig:
    v_supply: float = 3.3
    r_pulldown: float = 1400.0
    r_max: float = 200_000.0
    r_min: float = 1_000.0
    adc_bits: int = 12
    noise_std_counts: float = 2.0

    def __post_init__(self):
        if not self.r_max > self.r_min > 0:
            raise ValidationError("need r_max > r_min > 0")
        if self.v_supply <= 0:
            raise ValidationError("v_supply must be positive")
        if not 8 <= self.adc_bits <= 16:
            raise ValidationError("adc_bits must lie in [8, 16]")
        if self.noise_std_counts < 0:
            raise ValidationError("noise_std_counts must be >= 0")

    @property
    def full_scale(self):
        return (1 << self.adc_bits) - 1


def resistance_from_activation(a, cfg=TransductionConfig()):
    """Log-linear law between ``r_max`` (a=0) and ``r_min`` (a=1)."""
    a_arr = np.asarray(a, dtype=np.float64)
    if np.any(~np.isfinite(a_arr)) or np.any(a_arr < 0) or np.any(a_arr > 1):
        raise DomainError("activation must lie in [0, 1]")
    r = cfg.r_max * (cfg.r_min / cfg.r_max) ** a_arr
    return float(r) if np.ndim(a) == 0 else r


def taxel_voltage(r_x, cfg=TransductionConfig()):
    r_arr = np.asarray(r_x, dtype=np.float64)
    if np.any(np.isnan(r_arr)) or np.any(r_arr < 0):
        raise DomainError("resistance must be >= 0")
    v = cfg.r_pulldown / (cfg.r_pulldown + r_arr) * cfg.v_supply
    return float(v) if np.ndim(r_x) == 0 else v


def adc_quantize(v, cfg=TransductionConfig()):
    """Round half up to the nearest code, clamped to the converter range."""
    x = np.asarray(v, dtype=np.float64) / cfg.v_supply * cfg.full_scale
    code = np.clip(np.floor(x + 0.5), 0, cfg.full_scale).astype(np.int64)
    return int(code) if np.ndim(v) == 0 else code


def activation_to_count(a, cfg=TransductionConfig()):
    """Noise-free composition of the three stages."""
    return adc_quantize(taxel_voltage(resistance_from_activation(a, cfg), cfg), cfg)


def _noisy_counts(field, noise, cfg):
    clean = activation_to_count(field, cfg)
    if cfg.noise_std_counts == 0:
        return clean
    noisy = np.floor(clean + cfg.noise_std_counts * noise + 0.5)
    return np.clip(noisy, 0, cfg.full_scale).astype(np.int64)


def scan_field(field, seq, timestamp_ms, cfg=TransductionConfig(), rng=None):
    """Read all 25 taxels of one activation field into a frame.

    The row/column scan is instantaneous at frame level; one standard-normal
    draw per taxel is always consumed so the RNG stream does not depend on
    the noise level.
    """
    field = np.asarray(field, dtype=np.float64)
    if field.shape != (GRID, GRID):
        raise ShapeError(f"activation field must be 5x5, got {field.shape}")
    rng = np.random.default_rng(0) if rng is None else rng
    noise = rng.standard_normal(N_TAXELS).reshape(GRID, GRID)
    return SensorFrame(int(seq), int(timestamp_ms), _noisy_counts(field, noise, cfg))


def scan_movie(movie, timestamps_ms, cfg=TransductionConfig(), rng=None, seq_start=0):
    """Vectorised :func:`scan_field` over a (T, 5, 5) movie.

    Consumes the RNG exactly like T successive ``scan_field`` calls.
    """
    movie = np.asarray(movie, dtype=np.float64)
    if movie.ndim != 3 or movie.shape[1:] != (GRID, GRID):
        raise ShapeError(f"movie must be (T, 5, 5), got {movie.shape}")
    rng = np.random.default_rng(0) if rng is None else rng
    noise = rng.standard_normal((len(movie), N_TAXELS)).reshape(movie.shape)
    counts = _noisy_counts(movie, noise, cfg)
    seq = np.arange(seq_start, seq_start + len(movie))
    return TouchRecording(seq, timestamps_ms, counts)


# ---------------------------------------------------------------------------
# Wire codec


def _crc8_table():
    table = []
    for byte in range(256):
        crc = byte
        for _ in range(8):
            crc = ((crc << 1) ^ 0x07) & 0xFF if crc & 0x80 else (crc << 1) & 0xFF
        table.append(crc)
    return bytes(table)


_CRC_TABLE = _crc8_table()


def crc8(data):
    crc = 0
    for b in data:
        crc = _CRC_TABLE[crc ^ b]
    return crc


def encode_frame(frame):
    counts = np.asarray(frame.counts).reshape(-1)
    if counts.size != N_TAXELS:
        raise ShapeError("frame must carry 25 counts")
    if counts.min() < 0 or counts.max() > ADC_MAX:
        raise RangeError(f"count ∉ [0,{ADC_MAX}]")
    if not 0 <= frame.seq <= 0xFFFF:
        raise RangeError("seq does not fit in u16")
    if not 0 <= frame.timestamp_ms <= 0xFFFFFFFF:
        raise RangeError("timestamp_ms does not fit in u32")
    body = _BODY.pack(MAGIC, frame.seq, frame.timestamp_ms, *counts.tolist())
    return body + bytes([crc8(body)])


def decode_frame(data):
    data = bytes(data)
    if len(data) != FRAME_BYTES:
        raise LengthError(f"frame must be {FRAME_BYTES} bytes, got {len(data)}")
    if data[:2] != MAGIC:
        raise FramingError("bad magic")
    if crc8(data[:-1]) != data[-1]:
        raise IntegrityError("crc mismatch")
    _, seq, ts, *counts = _BODY.unpack(data[:-1])
    if max(counts) > ADC_MAX:
        raise RangeError(f"count ∉ [0,{ADC_MAX}]")
    return SensorFrame(seq, ts, np.array(counts, dtype=np.int64))


@dataclass(frozen=True)
class StreamSchedule:
    """Wire bytes plus the emission time (ms since session start) of each frame."""
    emit_ms: np.ndarray
    data: bytes

    def __len__(self):
        return len(self.emit_ms)

    def chunks(self):
        for k in range(len(self.emit_ms)):
            yield int(self.emit_ms[k]), self.data[k * FRAME_BYTES:(k + 1) * FRAME_BYTES]


def stream_session(recording):
    """Encode a recording for transmission; pacing is the caller's business."""
    data = b"".join(encode_frame(f) for f in recording.frames)
    return StreamSchedule(recording.timestamp_ms.copy(), data)


def decode_stream(data, nominal_rate_hz=45.0):
    data = bytes(data)
    if len(data) % FRAME_BYTES:
        raise LengthError(f"stream length {len(data)} is not a multiple of {FRAME_BYTES}")
    frames = [decode_frame(data[k:k + FRAME_BYTES]) for k in range(0, len(data), FRAME_BYTES)]
    return TouchRecording.from_frames(frames, nominal_rate_hz=nominal_rate_hz)


def write_wire_log(recording, path):
    sched = stream_session(recording)
    with open(path, "wb") as fh:
        fh.write(sched.data)
    return sched


def read_wire_log(path):
    with open(path, "rb") as fh:
        return decode_stream(fh.read())
