"""Exception hierarchy shared by every stage of the toolkit."""


class FrictionForgeError(Exception):
    """Base class; the CLI maps any subclass to a JSON error report."""

    kind = "error"

    def to_dict(self):
        return {"error": self.kind, "message": str(self)}


class ParameterError(FrictionForgeError, ValueError):
    kind = "parameter_error"


class IngestionError(FrictionForgeError):
    """Raised when an input file violates its format; carries every offender."""

    kind = "ingestion_error"

    def __init__(self, message, offenders=()):
        super().__init__(message)
        self.offenders = list(offenders)

    def __str__(self):
        base = super().__str__()
        if not self.offenders:
            return base
        lines = "; ".join(f"line {ln}: {msg}" for ln, msg in self.offenders)
        return f"{base}: {lines}"

    def to_dict(self):
        out = super().to_dict()
        out["offenders"] = [{"line": ln, "message": msg} for ln, msg in self.offenders]
        return out


class CalibrationError(FrictionForgeError):
    kind = "calibration_error"
