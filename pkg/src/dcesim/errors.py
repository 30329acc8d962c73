"""Exception hierarchy.

Every error carries the process exit code the command line front end maps it to.
"""


class DceError(Exception):
    exit_code = 1


class ConfigError(DceError):
    exit_code = 2


class PlanInvalid(ConfigError):
    pass


class SpectrumError(DceError):
    exit_code = 3


class ConvergenceFailure(SpectrumError):
    pass


class InsufficientRoots(SpectrumError):
    pass


class IntegrationError(DceError):
    exit_code = 4


class StepTooLarge(IntegrationError):
    pass


class NonFiniteState(IntegrationError):
    pass


class PreStaticRegion(DceError):
    exit_code = 4


class WindowTooShort(DceError):
    exit_code = 4


class CaseUnmatched(DceError):
    exit_code = 5


class ComparisonFailure(DceError):
    exit_code = 5


class PeakAtBoundary(DceError):
    pass


class DegenerateWidth(DceError):
    pass
