from django.core.exceptions import ValidationError


class ChiGridError(Exception):
    pass


class NumericalError(ChiGridError):
    pass


class EmbeddingNotPSD(NumericalError):
    def __init__(self, clipped_ratio, circulant_size):
        self.clipped_ratio = clipped_ratio
        self.circulant_size = circulant_size
        super().__init__(
            "Circulant embedding of size %s has relative negative mass %.3g"
            % (circulant_size, clipped_ratio)
        )


class GridFinerThanMesh(NumericalError):
    def __init__(self, nominal, mesh):
        self.nominal = nominal
        self.mesh = mesh
        super().__init__(
            "Grid spacing %.6g is finer than the lattice mesh %.6g, refine the mesh"
            % (nominal, mesh)
        )


class DegenerateZeroVector(NumericalError):
    pass


class FrechetViolation(NumericalError):
    pass


class OutputExistsError(ChiGridError, FileExistsError):
    pass


class ConfigParseError(ValidationError):
    def __init__(self, message, path=""):
        self.path = path
        if path:
            message = "%s: %s" % (path, message)
        super().__init__(message, code="parse")


class ConfigValidationError(ValidationError):
    def __init__(self, message, path=""):
        self.path = path
        if path:
            message = "%s: %s" % (path, message)
        super().__init__(message, code="invalid")
