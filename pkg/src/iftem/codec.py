"""Interval quantization and the compressed record stream.

Three schemes share one midrise cell rule:

* uniform     — K levels across the whole interval range [dt_min, dt_max]
* ccif        — the range is first tiled by a constant number L of windows,
                K levels inside the active window; the window index is
                transmitted only when it changes
* dcif        — like ccif but L adapts online from the variance of the
                trailing m decoded intervals, recomputed every l samples

The dcif estimator consumes quantized-reconstructed intervals on both sides
(quantizer in the loop), so the decoder replays the identical window-count
sequence without side information.
"""

from __future__ import annotations

import math
import struct
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import TemParams, TimeBounds, time_bounds
from .errors import CounterOverflowError, MalformedStreamError

__all__ = [
    "QuantizerConfig",
    "WindowPartition",
    "EstimatorState",
    "Record",
    "StreamHeader",
    "CompressedStream",
    "BitReport",
    "uniform_quantize",
    "const_window_count",
    "running_stats",
    "uniform_encode",
    "ccif_encode",
    "dcif_encode",
    "decode_stream",
    "replay_window_counts",
    "bit_cost",
    "counter_encode",
    "counter_decode",
    "write_stream",
    "read_stream",
    "dump_intervals",
]

MODES = ("uniform", "ccif", "dcif")
ACCOUNTING_MODES = ("paper", "self-delimiting")


def _code_bits(n: int) -> int:
    """ceil(log2 n) as exact integer arithmetic; 0 for n = 1."""
    if n < 1:
        raise ValueError(f"count must be >= 1, got {n}")
    return (n - 1).bit_length()


def _cell_index(value: float, lo: float, width: float, count: int) -> int:
    """Clamped midrise cell index of value in `count` cells of `width` above lo."""
    if count == 1 or width <= 0.0:  # degenerate range: everything in cell 0
        return 0
    idx = int(math.floor((value - lo) / width))
    return min(max(idx, 0), count - 1)


def _cell_value(lo: float, window_width: float, step: float,
                w: int, r: int) -> float:
    """Reconstruction point: window offset plus residual cell center.

    The exact expression shape matters: encoder and decoder both call this,
    so reconstructed values agree bit-for-bit.
    """
    return lo + w * window_width + (r + 0.5) * step


@dataclass(frozen=True)
class QuantizerConfig:
    """Uniform K-level quantizer over the interval range."""

    levels: int
    bounds: TimeBounds

    def __post_init__(self):
        if not (isinstance(self.levels, int) and self.levels >= 1):
            raise ValueError(f"levels must be a positive integer, got {self.levels}")

    @property
    def step(self) -> float:
        return self.bounds.spread / self.levels


@dataclass(frozen=True)
class WindowPartition:
    """Equal tiling of the interval range into `count` windows."""

    count: int
    bounds: TimeBounds

    def __post_init__(self):
        if not (isinstance(self.count, int) and self.count >= 1):
            raise ValueError(f"count must be a positive integer, got {self.count}")

    @property
    def width(self) -> float:
        return self.bounds.spread / self.count

    def index_of(self, value: float) -> int:
        return _cell_index(value, self.bounds.dt_min, self.width, self.count)


def uniform_quantize(value: float, cfg: QuantizerConfig) -> tuple[int, float]:
    """Midrise code and reconstruction point; out-of-range values clamp."""
    lo = cfg.bounds.dt_min
    step = cfg.step
    code = _cell_index(value, lo, step, cfg.levels)
    return code, _cell_value(lo, 0.0, step, 0, code)


def const_window_count(variance: float, bounds: TimeBounds, max_count: int) -> int:
    """Window count ceil(spread / (2*sqrt(variance))), clamped to [1, max_count].

    Zero variance would blow up, so it maps to the cap.
    """
    if variance < 0:
        raise ValueError(f"variance must be nonnegative, got {variance}")
    if not max_count >= 1:
        raise ValueError(f"max_count must be >= 1, got {max_count}")
    if variance == 0:
        return max_count
    count = math.ceil(bounds.spread / (2.0 * math.sqrt(variance)))
    return min(max(count, 1), max_count)


def running_stats(buffer) -> tuple[float, float]:
    """Population mean and variance of the buffer."""
    buf = np.asarray(buffer, dtype=float)
    if buf.size <= 1:
        raise ValueError(f"need at least 2 samples, got {buf.size}")
    mu = float(buf.mean())
    var = float(np.mean((buf - mu) ** 2))
    return mu, var


@dataclass
class EstimatorState:
    """Online window-count estimator over the trailing decoded intervals.

    Statistics refresh once samples_seen >= m and samples_seen is a
    multiple of l; until then window_count stays at L_init.  Both codec
    sides feed it the same quantized values, keeping them in lockstep.
    """

    m: int = 40
    l: int = 5
    L_init: int = 4
    L_max: int = 64
    window_count: int | None = None
    buffer: deque = field(default_factory=deque)
    mu_hat: float | None = None
    sigma_hat: float | None = None
    samples_seen: int = 0

    def __post_init__(self):
        if not (isinstance(self.m, int) and self.m >= 2):
            raise ValueError(f"m must be an integer > 1, got {self.m}")
        if not (isinstance(self.l, int) and self.l >= 1):
            raise ValueError(f"l must be a positive integer, got {self.l}")
        if not (isinstance(self.L_max, int) and self.L_max >= 1):
            raise ValueError(f"L_max must be >= 1, got {self.L_max}")
        if not (isinstance(self.L_init, int) and 1 <= self.L_init <= self.L_max):
            raise ValueError(
                f"L_init must lie in [1, {self.L_max}], got {self.L_init}"
            )
        if self.window_count is None:
            self.window_count = self.L_init
        self.buffer = deque(self.buffer, maxlen=self.m)

    def fresh_clone(self) -> "EstimatorState":
        """Same parameters, pristine runtime state."""
        return EstimatorState(m=self.m, l=self.l, L_init=self.L_init,
                              L_max=self.L_max)

    def observe(self, value: float, bounds: TimeBounds) -> bool:
        """Feed one decoded interval; True when the window count changed."""
        self.buffer.append(float(value))
        self.samples_seen += 1
        if self.samples_seen < self.m or self.samples_seen % self.l != 0:
            return False
        self.mu_hat, self.sigma_hat = running_stats(self.buffer)
        new_count = const_window_count(self.sigma_hat, bounds, self.L_max)
        changed = new_count != self.window_count
        self.window_count = new_count
        return changed


@dataclass(frozen=True)
class Record:
    """One quantized interval: residual code plus optional window index."""

    residual: int
    window: int | None = None


@dataclass(frozen=True)
class StreamHeader:
    mode: str
    levels: int
    bounds: TimeBounds
    t0: float
    params: TemParams | None = None
    window_count: int = 1  # L for uniform/ccif; estimator L_init for dcif
    estimator: EstimatorState | None = None  # parameters only, dcif mode
    signal_digest: int | None = None
    self_delimiting: bool = False  # producer's intended bit accounting

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if not (isinstance(self.levels, int) and self.levels >= 1):
            raise ValueError(f"levels must be a positive integer, got {self.levels}")
        if self.mode == "dcif" and self.estimator is None:
            raise ValueError("dcif header requires estimator parameters")


@dataclass
class CompressedStream:
    header: StreamHeader
    records: list
    window_counts: list  # window count in effect at each record

    def __post_init__(self):
        if len(self.records) != len(self.window_counts):
            raise ValueError("records and window_counts must align")

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class BitReport:
    total_bits: int
    residual_bits: int
    window_bits: int
    flag_bits: int
    overhead_percent: float
    accounting: str


def _resolve_bounds(fs, bounds: TimeBounds | None) -> TimeBounds:
    if bounds is not None:
        return bounds
    return fs.bounds()


def _const_window_stream(fs, windows: int, levels: int,
                         bounds: TimeBounds | None, mode: str) -> CompressedStream:
    if not (isinstance(windows, int) and windows >= 1):
        raise ValueError(f"windows must be a positive integer, got {windows}")
    if not (isinstance(levels, int) and levels >= 1):
        raise ValueError(f"levels must be a positive integer, got {levels}")
    bounds = _resolve_bounds(fs, bounds)
    lo = bounds.dt_min
    width = bounds.spread / windows
    step = width / levels
    records = []
    prev_w = None
    for value in fs.intervals:
        w = _cell_index(value, lo, width, windows)
        r = _cell_index(value, lo + w * width, step, levels)
        emit = prev_w is None or w != prev_w
        records.append(Record(residual=r, window=w if emit else None))
        prev_w = w
    header = StreamHeader(mode=mode, levels=levels, bounds=bounds, t0=fs.t0,
                          params=fs.params, window_count=windows)
    return CompressedStream(header=header, records=records,
                            window_counts=[windows] * len(records))


def uniform_encode(fs, levels: int, bounds: TimeBounds | None = None) -> CompressedStream:
    """K-level baseline over the whole range (single window)."""
    return _const_window_stream(fs, 1, levels, bounds, "uniform")


def ccif_encode(fs, windows: int, levels: int,
                bounds: TimeBounds | None = None) -> CompressedStream:
    """Constant-window scheme; window index emitted only on change."""
    return _const_window_stream(fs, windows, levels, bounds, "ccif")


def dcif_encode(fs, levels: int, est: EstimatorState | None = None,
                bounds: TimeBounds | None = None) -> CompressedStream:
    """Dynamic-window scheme.

    Estimator parameters are taken from `est`; encoding always starts from
    the pristine state so the decoder can replay it from the header alone.
    After every window-count change the next record carries its window
    index unconditionally.
    """
    if not (isinstance(levels, int) and levels >= 1):
        raise ValueError(f"levels must be a positive integer, got {levels}")
    state = (est if est is not None else EstimatorState()).fresh_clone()
    bounds = _resolve_bounds(fs, bounds)
    lo = bounds.dt_min
    records = []
    window_counts = []
    prev_w = None
    force = True
    for value in fs.intervals:
        count = state.window_count
        width = bounds.spread / count
        step = width / levels
        w = _cell_index(value, lo, width, count)
        r = _cell_index(value, lo + w * width, step, levels)
        emit = force or prev_w is None or w != prev_w
        records.append(Record(residual=r, window=w if emit else None))
        window_counts.append(count)
        prev_w = w
        force = state.observe(_cell_value(lo, width, step, w, r), bounds)
    header = StreamHeader(mode="dcif", levels=levels, bounds=bounds, t0=fs.t0,
                          params=fs.params, window_count=state.L_init,
                          estimator=state.fresh_clone())
    return CompressedStream(header=header, records=records,
                            window_counts=window_counts)


def _replay(cs: CompressedStream) -> tuple[np.ndarray, list]:
    """Decode values and the decoder-side window-count sequence."""
    h = cs.header
    lo = h.bounds.dt_min
    levels = h.levels
    values = np.empty(len(cs.records))
    counts = []
    state = h.estimator.fresh_clone() if h.mode == "dcif" else None
    w_cur = None
    expect_window = True
    for i, rec in enumerate(cs.records):
        count = state.window_count if state is not None else h.window_count
        width = h.bounds.spread / count
        step = width / levels
        if rec.window is not None:
            if not 0 <= rec.window < count:
                raise MalformedStreamError(
                    f"record {i}: window {rec.window} out of range [0, {count})"
                )
            w_cur = rec.window
        elif w_cur is None or expect_window:
            raise MalformedStreamError(
                f"record {i}: window index required but absent"
            )
        if not 0 <= rec.residual < levels:
            raise MalformedStreamError(
                f"record {i}: residual {rec.residual} out of range [0, {levels})"
            )
        value = _cell_value(lo, width, step, w_cur, rec.residual)
        values[i] = value
        counts.append(count)
        expect_window = state.observe(value, h.bounds) if state is not None else False
    return values, counts


def decode_stream(cs: CompressedStream) -> np.ndarray:
    """Reconstructed interval values, window indices carried forward."""
    return _replay(cs)[0]


def replay_window_counts(cs: CompressedStream) -> list:
    """Decoder-side window counts; must equal the encoder's sequence."""
    return _replay(cs)[1]


def bit_cost(cs: CompressedStream, accounting: str = "paper") -> BitReport:
    """Exact bit accounting of the stream.

    'paper' counts ceil(log2 K) per residual plus ceil(log2 L) per window
    emission; 'self-delimiting' adds a one-bit change flag per record so
    the stream is decodable without external framing.
    """
    if accounting not in ACCOUNTING_MODES:
        raise ValueError(f"unknown accounting mode {accounting!r}")
    n = len(cs.records)
    residual_bits = n * _code_bits(cs.header.levels)
    window_bits = sum(
        _code_bits(cs.window_counts[i])
        for i, rec in enumerate(cs.records)
        if rec.window is not None
    )
    flag_bits = n if accounting == "self-delimiting" else 0
    total = residual_bits + window_bits + flag_bits
    overhead = (100.0 * (window_bits + flag_bits) / residual_bits
                if residual_bits else 0.0)
    return BitReport(total_bits=total, residual_bits=residual_bits,
                     window_bits=window_bits, flag_bits=flag_bits,
                     overhead_percent=overhead, accounting=accounting)


def counter_encode(value: float, f_clk: float, residual_bits: int,
                   counter_bits: int = 64) -> tuple[int, int]:
    """Hardware-counter view: high bits select the window, low bits the residual."""
    if not value >= 0:
        raise ValueError(f"value must be nonnegative, got {value}")
    if not f_clk > 0:
        raise ValueError(f"f_clk must be positive, got {f_clk}")
    if not (isinstance(residual_bits, int) and residual_bits >= 0):
        raise ValueError(f"residual_bits must be >= 0, got {residual_bits}")
    if not (isinstance(counter_bits, int) and counter_bits > residual_bits):
        raise ValueError(
            f"counter_bits must exceed residual_bits, got {counter_bits}"
        )
    ticks = int(math.floor(value * f_clk))
    if ticks >= 1 << counter_bits:
        raise CounterOverflowError(
            f"{ticks} ticks exceed the {counter_bits}-bit counter"
        )
    return ticks >> residual_bits, ticks & ((1 << residual_bits) - 1)


def counter_decode(w: int, r: int, residual_bits: int) -> int:
    """Inverse of counter_encode at tick resolution."""
    if w < 0 or r < 0 or r >= 1 << residual_bits:
        raise ValueError(f"invalid counter split ({w}, {r})")
    return (w << residual_bits) | r


# ---------------------------------------------------------------------------
# binary stream format
#
# 64-byte little-endian header:
#   magic 'IFT1', version u8, mode u8, flags u8, pad u8,
#   K u16, L u16, m u16, l u16, L_init u16, L_max u16, n_records u32,
#   dt_min f64, dt_max f64, t0 f64, bias f64, kappa*delta f64
# then bit-packed records, MSB first: change flag (1 bit), window index
# (ceil(log2 L) bits when flagged), residual (ceil(log2 K) bits).

_MAGIC = b"IFT1"
_VERSION = 1
_HEADER = struct.Struct("<4s4B6HI5d")
_MODE_CODES = {"uniform": 0, "ccif": 1, "dcif": 2}
_MODE_NAMES = {v: k for k, v in _MODE_CODES.items()}
_FLAG_SELF_DELIMITING = 1


class BitWriter:
    """MSB-first bit packer."""

    def __init__(self):
        self._out = bytearray()
        self._acc = 0
        self._nbits = 0

    def write(self, value: int, nbits: int) -> None:
        if nbits < 0 or value < 0 or value >= 1 << max(nbits, 1):
            raise ValueError(f"value {value} does not fit in {nbits} bits")
        if nbits == 0:
            return
        self._acc = (self._acc << nbits) | value
        self._nbits += nbits
        while self._nbits >= 8:
            self._nbits -= 8
            self._out.append((self._acc >> self._nbits) & 0xFF)
        self._acc &= (1 << self._nbits) - 1

    def getvalue(self) -> bytes:
        out = bytes(self._out)
        if self._nbits:
            out += bytes([(self._acc << (8 - self._nbits)) & 0xFF])
        return out


class BitReader:
    """MSB-first bit unpacker; raises MalformedStreamError past the end."""

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0  # bit position

    def read(self, nbits: int) -> int:
        if nbits == 0:
            return 0
        end = self._pos + nbits
        if end > 8 * len(self._data):
            raise MalformedStreamError("truncated stream")
        value = 0
        pos = self._pos
        while pos < end:
            byte = self._data[pos >> 3]
            take = min(8 - (pos & 7), end - pos)
            shift = 8 - (pos & 7) - take
            value = (value << take) | ((byte >> shift) & ((1 << take) - 1))
            pos += take
        self._pos = end
        return value


def write_stream(cs: CompressedStream, path=None) -> bytes:
    """Serialize to the binary format; writes to path when given."""
    h = cs.header
    n = len(cs.records)
    if n >= 1 << 32:
        raise ValueError(f"too many records: {n}")
    if h.levels >= 1 << 16:
        raise ValueError(f"levels {h.levels} exceed the 16-bit header field")
    est = h.estimator
    m, l, l_init, l_max = ((est.m, est.l, est.L_init, est.L_max)
                           if est is not None else (0, 0, 0, 0))
    for name, val in (("L", h.window_count), ("m", m), ("l", l),
                      ("L_init", l_init), ("L_max", l_max)):
        if val >= 1 << 16:
            raise ValueError(f"{name} = {val} exceeds the 16-bit header field")
    bias = h.params.bias if h.params is not None else 0.0
    kd = h.params.kappa_delta if h.params is not None else 0.0
    flags = _FLAG_SELF_DELIMITING if h.self_delimiting else 0
    header = _HEADER.pack(_MAGIC, _VERSION, _MODE_CODES[h.mode], flags, 0,
                          h.levels, h.window_count, m, l, l_init, l_max, n,
                          h.bounds.dt_min, h.bounds.dt_max, h.t0, bias, kd)
    rbits = _code_bits(h.levels)
    writer = BitWriter()
    for rec, count in zip(cs.records, cs.window_counts):
        if rec.window is not None:
            writer.write(1, 1)
            writer.write(rec.window, _code_bits(count))
        else:
            writer.write(0, 1)
        writer.write(rec.residual, rbits)
    blob = header + writer.getvalue()
    if path is not None:
        Path(path).write_bytes(blob)
    return blob


def read_stream(source) -> CompressedStream:
    """Parse the binary format from bytes or a path.

    Parsing replays the dcif estimator because record widths depend on the
    window count in effect; ranges are validated along the way.
    """
    data = source if isinstance(source, (bytes, bytearray)) else Path(source).read_bytes()
    if len(data) < _HEADER.size:
        raise MalformedStreamError(f"header truncated: {len(data)} bytes")
    (magic, version, mode_code, flags, _pad, levels, window_count, m, l,
     l_init, l_max, n, dt_min, dt_max, t0, bias, kd) = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise MalformedStreamError(f"bad magic {magic!r}")
    if version != _VERSION:
        raise MalformedStreamError(f"unsupported version {version}")
    if mode_code not in _MODE_NAMES:
        raise MalformedStreamError(f"unknown mode code {mode_code}")
    mode = _MODE_NAMES[mode_code]
    if levels < 1:
        raise MalformedStreamError(f"invalid level count {levels}")
    try:
        bounds = TimeBounds(dt_min=dt_min, dt_max=dt_max)
    except ValueError as exc:
        raise MalformedStreamError(f"invalid bounds in header: {exc}") from exc
    params = (TemParams(bias=bias, kappa=1.0, delta=kd)
              if bias > 0 and kd > 0 else None)
    if mode == "dcif":
        try:
            estimator = EstimatorState(m=m, l=l, L_init=l_init, L_max=l_max)
        except ValueError as exc:
            raise MalformedStreamError(
                f"invalid estimator parameters in header: {exc}"
            ) from exc
    else:
        estimator = None
    header = StreamHeader(mode=mode, levels=levels, bounds=bounds, t0=t0,
                          params=params, window_count=window_count,
                          estimator=estimator,
                          self_delimiting=bool(flags & _FLAG_SELF_DELIMITING))

    reader = BitReader(data[_HEADER.size:])
    rbits = _code_bits(levels)
    lo = bounds.dt_min
    state = estimator.fresh_clone() if estimator is not None else None
    records = []
    window_counts = []
    w_cur = None
    expect_window = True
    for i in range(n):
        count = state.window_count if state is not None else window_count
        flagged = reader.read(1)
        if flagged:
            w = reader.read(_code_bits(count))
            if w >= count:
                raise MalformedStreamError(
                    f"record {i}: window {w} out of range [0, {count})"
                )
            w_cur = w
        elif w_cur is None or expect_window:
            raise MalformedStreamError(f"record {i}: window index required but absent")
        r = reader.read(rbits)
        if r >= levels:
            raise MalformedStreamError(
                f"record {i}: residual {r} out of range [0, {levels})"
            )
        records.append(Record(residual=r, window=w_cur if flagged else None))
        window_counts.append(count)
        if state is not None:
            width = bounds.spread / count
            step = width / levels
            expect_window = state.observe(
                _cell_value(lo, width, step, w_cur, r), bounds
            )
        else:
            expect_window = False
    return CompressedStream(header=header, records=records,
                            window_counts=window_counts)


def dump_intervals(values, path) -> None:
    """Debug CSV of decoded intervals, one per line."""
    Path(path).write_text(
        "interval\n" + "\n".join(repr(float(v)) for v in values) + "\n"
    )
