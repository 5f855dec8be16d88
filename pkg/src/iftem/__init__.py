"""Integrate-and-fire time encoding: simulation, compression, reconstruction."""

from .core import (
    SignalSpec,
    TemParams,
    TimeBounds,
    amplitude_bound,
    ccif_step,
    check_density,
    iftem_step,
    time_bounds,
)
from .errors import (
    CounterOverflowError,
    IftemError,
    InfeasibleSamplerError,
    InsufficientDataError,
    InternalConsistencyError,
    MalformedStreamError,
    ReconstructionError,
)
from .signals import BandlimitedSignal, generate, load_signal, save_signal
from .encoder import (
    FiringSequence,
    encode,
    load_firing,
    measurements,
    oversampling_factor,
    save_firing,
)
from .codec import (
    BitReport,
    CompressedStream,
    EstimatorState,
    QuantizerConfig,
    Record,
    StreamHeader,
    WindowPartition,
    bit_cost,
    ccif_encode,
    const_window_count,
    counter_decode,
    counter_encode,
    dcif_encode,
    decode_stream,
    read_stream,
    replay_window_counts,
    running_stats,
    uniform_encode,
    uniform_quantize,
    write_stream,
)
from .decoder import (
    ReconstructedSignal,
    ReconstructionConfig,
    firing_times,
    mse_db,
    reconstruct,
)
from .bench import TrialConfig, TrialMetrics, make_grid, run_trial, sweep, table1

__version__ = "0.1.0"

__all__ = [
    "SignalSpec", "TemParams", "TimeBounds", "amplitude_bound", "ccif_step",
    "check_density", "iftem_step", "time_bounds",
    "CounterOverflowError", "IftemError", "InfeasibleSamplerError",
    "InsufficientDataError", "InternalConsistencyError", "MalformedStreamError",
    "ReconstructionError",
    "BandlimitedSignal", "generate", "load_signal", "save_signal",
    "FiringSequence", "encode", "load_firing", "measurements",
    "oversampling_factor", "save_firing",
    "BitReport", "CompressedStream", "EstimatorState", "QuantizerConfig",
    "Record", "StreamHeader", "WindowPartition", "bit_cost", "ccif_encode",
    "const_window_count", "counter_decode", "counter_encode", "dcif_encode",
    "decode_stream", "read_stream", "replay_window_counts", "running_stats",
    "uniform_encode", "uniform_quantize", "write_stream",
    "ReconstructedSignal", "ReconstructionConfig", "firing_times", "mse_db",
    "reconstruct",
    "TrialConfig", "TrialMetrics", "make_grid", "run_trial", "sweep", "table1",
    "__version__",
]
