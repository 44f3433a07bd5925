"""Exception types shared across the toolkit.

Every data-level failure raises a subclass of :class:`PadBenchError` so the
CLI can map them to a single exit code; message text carries the offending
identifier or line number.
"""

from __future__ import annotations


class PadBenchError(Exception):
    """Base class for all toolkit errors."""


# manifest ---------------------------------------------------------------

class MalformedRow(PadBenchError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class DuplicateId(PadBenchError):
    def __init__(self, sample_id: str):
        super().__init__(f"duplicate sample_id {sample_id!r}")
        self.sample_id = sample_id


class UnknownMaterial(PadBenchError):
    def __init__(self, name: str):
        super().__init__(f"unknown material {name!r}")
        self.name = name


class InconsistentLabel(PadBenchError):
    def __init__(self, sample_id: str, reason: str = ""):
        super().__init__(f"{sample_id!r}: {reason or 'label and PAI columns disagree'}")
        self.sample_id = sample_id


# partitioner ------------------------------------------------------------

class InfeasibleBalance(PadBenchError):
    """Too few samples of one class to satisfy the requested split sizes."""


class InfeasibleSubjectSplit(PadBenchError):
    """No subject assignment can keep bona fide test subjects disjoint."""


class EmptyTrainingAttacks(PadBenchError):
    """The held-out group covers every attack, leaving nothing to train on."""


class UnknownGroup(PadBenchError):
    def __init__(self, token: str):
        super().__init__(f"unknown leave-one-out group {token!r}")
        self.token = token


class UnknownSample(PadBenchError):
    def __init__(self, sample_id: str):
        super().__init__(f"sample_id {sample_id!r} not in manifest")
        self.sample_id = sample_id


# scores -----------------------------------------------------------------

class DuplicateSample(PadBenchError):
    def __init__(self, sample_id: str):
        super().__init__(f"duplicate score row for {sample_id!r}")
        self.sample_id = sample_id


class NonFiniteScore(PadBenchError):
    def __init__(self, sample_id: str):
        super().__init__(f"non-finite score for {sample_id!r}")
        self.sample_id = sample_id


# metrics ----------------------------------------------------------------

class MissingScores(PadBenchError):
    def __init__(self, missing_ids):
        ids = sorted(missing_ids)
        preview = ", ".join(ids[:5]) + ("..." if len(ids) > 5 else "")
        super().__init__(f"{len(ids)} sample(s) have no score: {preview}")
        self.missing_ids = ids


class EmptyClass(PadBenchError):
    """The evaluated id set lacks attacks or bona fides."""


# fusion -----------------------------------------------------------------

class WeightSumInvalid(PadBenchError):
    """Fusion weights are negative or do not sum to one."""


class MissingComponent(PadBenchError):
    def __init__(self, algorithm_id: str):
        super().__init__(f"no score set for fusion component {algorithm_id!r}")
        self.algorithm_id = algorithm_id


# synth ------------------------------------------------------------------

class MissingProfile(PadBenchError):
    def __init__(self, key: str):
        super().__init__(f"no material profile for {key!r}")
        self.key = key


class MissingDistribution(PadBenchError):
    def __init__(self, algorithm_id: str, key: str):
        super().__init__(f"no score distribution for algorithm {algorithm_id!r}, class {key!r}")
        self.algorithm_id = algorithm_id
        self.key = key


# oneclass ---------------------------------------------------------------

class TooFewSamples(PadBenchError):
    """Not enough training cubes for the requested latent dimension."""


class ShapeMismatch(PadBenchError):
    def __init__(self, expected, got):
        super().__init__(f"cube shape {got} does not match {expected}")
        self.expected = expected
        self.got = got
