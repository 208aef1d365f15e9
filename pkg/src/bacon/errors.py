"""Exception types shared across the toolkit."""


class BaconError(Exception):
    """Base class for all toolkit errors."""


# bundle I/O

class FormatError(BaconError):
    """Manifest is missing, unparseable, or structurally malformed."""


class IntegrityError(BaconError):
    """Payload bytes do not match the manifest's declared shape/dtype."""


class ValidationError(BaconError):
    """Bundle content violates a domain invariant (labels, finiteness, ...)."""


class IoError(BaconError):
    """Filesystem failure while writing a bundle."""


# geometry

class DegenerateVectorError(BaconError):
    """Zero-magnitude activation or weight vector; the export is unusable."""


class ShapeError(BaconError):
    """Matrix dimensions do not agree."""


class ConsistencyError(BaconError):
    """Reconstructed logits disagree with the exported logits tensor."""


# distribution fitting

class InsufficientDataError(BaconError):
    """Too few samples to fit a distribution."""


class DegenerateSpreadError(InsufficientDataError):
    """All samples identical; no valid scale parameter exists."""


class DomainError(BaconError):
    """Sample outside the support of the requested family."""


class NoModelError(BaconError):
    """Every candidate family failed to fit."""


# calibration and metrics

class CalibrationError(BaconError):
    """Hold-out set empty or otherwise unusable for parameter tuning."""


class MetricError(BaconError):
    """Metric undefined for the given binning (e.g. all bins empty)."""


# experiment harness

class SamplingError(BaconError):
    """Requested class counts exceed the available pool."""


class AggregationError(BaconError):
    """No runs available to aggregate."""


class ExperimentError(BaconError):
    """Every seed of an experiment failed."""
