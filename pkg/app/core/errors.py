"""Exception hierarchy; every error carries the CLI exit code it maps to."""

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class CoopGraspError(Exception):
    exit_code = EXIT_RUNTIME


class ConfigurationError(CoopGraspError):
    """Invalid or unparsable configuration."""

    exit_code = EXIT_USAGE


class UsageError(CoopGraspError):
    exit_code = EXIT_USAGE


class InputError(CoopGraspError):
    """Non-finite or out-of-domain input to a simulation step."""


class SequencingError(CoopGraspError):
    """Force frames combined out of timestamp order."""


class LifecycleError(CoopGraspError):
    """Environment used outside its reset/step lifecycle."""


class ShapeError(CoopGraspError):
    pass


class CompositionError(CoopGraspError):
    """Actor/critic input assembled from mismatched parts."""


class IntegrityError(CoopGraspError):
    """Checkpoint or table file does not match its declared format."""


class TrainingAbortedError(CoopGraspError):
    def __init__(self, message: str, last_checkpoint: str | None = None):
        super().__init__(message)
        self.last_checkpoint = last_checkpoint
