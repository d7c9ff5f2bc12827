"""Exception hierarchy.

Domain errors (bad data or configuration semantics) derive from
:class:`SynergyError`; the CLI maps them to exit code 1. Each class carries a
short ``code`` used as the reason string in reports.
"""


class SynergyError(Exception):
    code = "SynergyError"

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        cls.code = cls.__name__

    def __str__(self):
        # KeyError subclasses would otherwise repr() their message
        return Exception.__str__(self)


class ConfigError(SynergyError):
    pass


class IngestError(SynergyError):
    pass


class MissingColumn(IngestError):
    """Schema names a column absent from the header."""


class EmptyInput(IngestError):
    """Input has a header but no data rows."""


class MalformedCode(IngestError, ValueError):
    """A NACE code that does not parse."""


class DuplicatePrefix(ConfigError):
    pass


class RegionNotCovered(ConfigError):
    pass


class UnknownRegion(ConfigError):
    pass


class PartitionOverlap(ConfigError):
    """A region listed in two groups of the same partition."""


class UnknownPartition(ConfigError, KeyError):
    pass


class UnknownSector(ConfigError, KeyError):
    pass


class UnresolvableGeo(SynergyError, KeyError):
    """No postal prefix in the taxonomy matches a geo code."""


class EmptyDistribution(SynergyError, ValueError):
    pass


class EmptyTensor(SynergyError, ValueError):
    pass


class EmptyDataset(SynergyError, ValueError):
    pass


class EmptySubset(SynergyError, ValueError):
    pass


class DegenerateTotal(SynergyError, ZeroDivisionError):
    """Total synergy is exactly zero, so percentage shares are undefined."""


class LengthMismatch(SynergyError, ValueError):
    pass


class ConstantVector(SynergyError, ValueError):
    pass


class InvalidSpec(SynergyError, ValueError):
    pass
