"""Exception hierarchy shared by all visemekit modules."""


class VisemeKitError(Exception):
    """Base class for every error raised by this package."""


class ParseError(VisemeKitError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class OOVError(VisemeKitError, KeyError):
    """A word is not present in the pronunciation lexicon."""

    def __init__(self, word):
        self.word = word
        super().__init__(f"out-of-vocabulary word: {word!r}")

    def __str__(self):
        return self.args[0]


class MappingError(VisemeKitError):
    """A phoneme has no entry in the viseme mapping."""


class TotalityError(MappingError):
    def __init__(self, missing):
        self.missing = sorted(missing)
        super().__init__("mapping does not cover phonemes: " + " ".join(self.missing))


class ConfigError(VisemeKitError):
    pass


class DegenerateInputError(VisemeKitError, ValueError):
    pass


class ContractViolation(VisemeKitError):
    """A caller broke a documented precondition (e.g. forgot to filter OOV)."""


class InputError(VisemeKitError, ValueError):
    pass


class NumericError(VisemeKitError, FloatingPointError):
    pass


class CheckpointError(VisemeKitError):
    pass


class VersionMismatchError(CheckpointError):
    pass
