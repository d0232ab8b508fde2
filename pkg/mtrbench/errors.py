class MtrBenchError(RuntimeError):
    """Base class for failures raised by the benchmark."""


class XsFormatError(MtrBenchError):
    """Raised when a cross-section library record is missing or malformed."""

    def __init__(self, material: str, field: str, detail: str) -> None:
        super().__init__(f"material {material!r}, field {field!r}: {detail}")
        self.material = material
        self.field = field


class XsConsistencyError(MtrBenchError):
    """Raised when sigma_t differs from sigma_a plus the scattering row sum."""

    def __init__(self, material: str, group: int, detail: str) -> None:
        super().__init__(f"material {material!r}, group {group}: {detail}")
        self.material = material
        self.group = group


class MissingMaterialError(MtrBenchError):
    """Raised when a library lacks a material the unit cell needs."""


class ParamBoundsError(MtrBenchError):
    """Raised when a (U, W) point lies outside the parameter box."""


class DegenerateMediumError(MtrBenchError):
    """Raised when a medium cannot support a finite transport solution."""


class TransportError(MtrBenchError):
    """Raised when particle histories fail to terminate."""


class UpdateRejectedError(MtrBenchError):
    """Raised when a PPO update produces a non-finite loss or gradient."""


class ConfigError(MtrBenchError):
    """Raised for unreadable or invalid run configuration."""


class OptimizationAborted(MtrBenchError):
    """Raised when an optimizer stops early; carries the partial run."""

    def __init__(self, message: str, run) -> None:
        super().__init__(message)
        self.run = run
