class MdcVanetError(Exception):
    """Base class; ``category`` is the machine-readable tag printed by the CLI."""

    category = "error"
    exit_code = 1


class TraceError(MdcVanetError):
    category = "trace"
    exit_code = 3

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        super().__init__(message)
        self.line = line
        self.path = path

    def __str__(self) -> str:
        msg = super().__str__()
        return f"{self.path}: {msg}" if self.path else msg


class ConfigError(MdcVanetError):
    category = "config"
    exit_code = 2

    def __init__(self, message: str, path: str | None = None, field: str | None = None):
        super().__init__(message)
        self.path = path
        self.field = field

    def __str__(self) -> str:
        where = ":".join(x for x in (self.path, self.field) if x)
        msg = super().__str__()
        return f"{where}: {msg}" if where else msg


class IntegrityError(MdcVanetError):
    """Delivery records and packets disagree."""

    category = "integrity"
    exit_code = 4


class DistortionModeError(MdcVanetError):
    """PSNR was requested but the trace carries no distortion columns."""

    category = "distortion-mode"
    exit_code = 5


class OutputError(MdcVanetError):
    category = "io"
    exit_code = 6


class InputError(MdcVanetError):
    """Unreadable or malformed input outside traces and configs (e.g. raw frames)."""

    category = "input"
    exit_code = 7
