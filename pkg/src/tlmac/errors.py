"""Exception types shared across the toolchain."""


class TlmacError(Exception):
    """Base class for all toolchain errors."""


class QWeightsFormatError(TlmacError):
    """A QWeights or activation tensor file cannot be parsed."""


class NetlistFormatError(TlmacError):
    """A netlist file is malformed or internally inconsistent."""


class ValidationError(TlmacError):
    """Loaded data violates a declared invariant (range, width, shape)."""


class PlacementError(TlmacError):
    """A placement or mapping request is infeasible."""


class ConfigMismatchError(TlmacError):
    """A PE configuration does not match the layer geometry it is applied to."""


class AccumulatorOverflowError(TlmacError):
    """A partial sum left the representable accumulator range."""

    def __init__(self, step: int, output: int, value: int, acc_bits: int):
        self.step = step
        self.output = output
        self.value = value
        self.acc_bits = acc_bits
        super().__init__(
            f"accumulator overflow at step {step}, output {output}: "
            f"value {value} exceeds signed {acc_bits}-bit range"
        )
