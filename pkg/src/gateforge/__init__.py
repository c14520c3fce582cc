"""Unitary-to-circuit synthesis with a fixed-point dataflow emulator.

The package decomposes small unitaries (up to roughly seven qubits) into
U3 and CX gates by continuously optimizing a layered controlled-rotation
ansatz and then compressing it gate by gate.  Two evaluation backends
share one circuit representation: a double-precision reference simulator
and a functional emulator of a fixed-point streaming accelerator.
"""

from .gates import (
    Circuit,
    Gate,
    GateKind,
    circuit_matrix,
    expand_cry,
    gate_matrix,
    reduce_angle,
)
from .simulator import (
    CostReport,
    Unitary,
    apply_circuit,
    apply_gate_columnwise,
    cost,
    cost_and_gradient,
    gradient,
)
from .dfe import (
    CycleReport,
    DfeConfig,
    fx_decode,
    fx_encode,
    predict_time,
    quantize_matrix,
    run_chain,
)
from .optimizer import (
    AdamState,
    OptimizeTrace,
    OptimizerConfig,
    adam_init,
    adam_step,
    expand_layers,
    optimize,
    plateau_escape,
)
from .compressor import (
    AnsatzSpec,
    CompressionConfig,
    FailedToConverge,
    adaptive_compress,
    build_ansatz,
    classify_cry,
    compress_round,
    finalize,
)
from .toolkit import (
    MetricsReport,
    QasmError,
    UnitaryFormatError,
    cx_count,
    depth,
    export_qasm,
    haar_random_unitary,
    import_qasm,
    metrics_report,
    read_unitary,
    write_unitary,
)
from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "AnsatzSpec",
    "Circuit",
    "CompressionConfig",
    "CostReport",
    "CycleReport",
    "DfeConfig",
    "FailedToConverge",
    "Gate",
    "GateKind",
    "KERNEL_BACKEND",
    "MetricsReport",
    "OptimizeTrace",
    "OptimizerConfig",
    "QasmError",
    "Unitary",
    "UnitaryFormatError",
    "adam_init",
    "adam_step",
    "adaptive_compress",
    "apply_circuit",
    "apply_gate_columnwise",
    "build_ansatz",
    "circuit_matrix",
    "classify_cry",
    "compress_round",
    "cost",
    "cost_and_gradient",
    "cx_count",
    "depth",
    "expand_cry",
    "expand_layers",
    "export_qasm",
    "finalize",
    "fx_decode",
    "fx_encode",
    "gate_matrix",
    "gradient",
    "haar_random_unitary",
    "import_qasm",
    "metrics_report",
    "optimize",
    "plateau_escape",
    "predict_time",
    "quantize_matrix",
    "read_unitary",
    "reduce_angle",
    "run_chain",
    "write_unitary",
]
