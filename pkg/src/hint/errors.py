"""Exception types shared across the package."""


class HintError(Exception):
    """Base class for all package errors."""


# --- dataset / corpus ---

class MalformedRecord(HintError):
    def __init__(self, line_no: int, detail: str = ""):
        self.line_no = line_no
        super().__init__(f"malformed record at line {line_no}: {detail}")


class DuplicateId(HintError):
    def __init__(self, example_id: str):
        self.example_id = example_id
        super().__init__(f"duplicate example id: {example_id!r}")


class TargetKindMismatch(HintError):
    pass


class IoFailure(HintError):
    pass


class EmptyInput(HintError):
    pass


class EmptyLabeledSet(HintError):
    pass


# --- retrieval ---

class EmptyCorpus(HintError):
    pass


class KindMismatch(HintError):
    pass


class EmptyFirstSequence(HintError):
    pass


class IndexMismatch(HintError):
    pass


# --- objective / models ---

class InvalidDistribution(HintError):
    pass


class ShapeMismatch(HintError):
    pass


class LengthMismatch(HintError):
    pass


class NonFiniteLoss(HintError):
    pass


class TaskMismatch(HintError):
    pass


# --- metrics ---

class EmptyGold(HintError):
    pass


# --- external adapter ---

class AdapterCrashed(HintError):
    def __init__(self, exit_code: int, stderr: str = ""):
        self.exit_code = exit_code
        super().__init__(f"adapter exited with code {exit_code}: {stderr[-500:]}")


class ProtocolViolation(HintError):
    pass


class AdapterTimeout(HintError):
    pass
