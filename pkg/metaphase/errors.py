class Error(Exception):
    #: process exit status used when the error reaches the command line
    exit_code = 1


class ConfigError(Error):
    exit_code = 2


class DimensionError(Error):
    exit_code = 2


class NotSymplectic(Error):
    exit_code = 2


class NotSymmetric(Error):
    exit_code = 2


class NotPositiveDefinite(Error):
    exit_code = 2


class DegenerateEndpoint(Error):
    """det(S - I) vanishes, so the Cayley transform does not exist"""


class DegenerateProduct(Error):
    """det(SS' - I) vanishes for a pair whose factors are non-degenerate"""


class DegenerateTime(Error):
    """the requested time is a multiple of a half period"""


class NotFree(Error):
    """the upper right block of a symplectic matrix is singular"""


class UnresolvedCrossing(Error):
    pass


class SearchFailed(Error):
    pass


class InadmissibleState(Error):
    exit_code = 3

    def __init__(self, msg, symplectic_eigenvalue):
        super().__init__(msg)
        self.symplectic_eigenvalue = symplectic_eigenvalue


class OracleError(Error):
    pass


class TruncationError(OracleError):
    def __init__(self, msg, truncation_error):
        super().__init__(msg)
        self.truncation_error = truncation_error


class OracleDisagreement(OracleError):
    exit_code = 4

    def __init__(self, msg, residual):
        super().__init__(msg)
        self.residual = residual


class SingularForm(Error):
    """a quadratic form whose signature was requested has a zero eigenvalue"""


class IndexMismatch(Error):
    """an index does not have the parity forced by the matrix it labels"""


class OutOfRange(Error):
    pass


class NotCentered(Error):
    """the closed-form homogeneous trace needs a state with zero mean"""
