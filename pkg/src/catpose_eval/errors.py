"""Exception hierarchy shared by every module of the toolkit."""


class CatposeError(Exception):
    """Base class for all toolkit errors."""


class EmptyInput(CatposeError, ValueError):
    pass


class InvalidPolytope(CatposeError, ValueError):
    pass


class DegenerateMesh(CatposeError, ValueError):
    pass


class TooFewPoints(CatposeError, ValueError):
    pass


class DegenerateDiameter(CatposeError, ValueError):
    pass


class MissingField(CatposeError, KeyError):
    def __str__(self):
        # KeyError repr-quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class UnsortedGrid(CatposeError, ValueError):
    pass


class EmptyFrames(CatposeError, ValueError):
    pass


class ResolutionTooCoarse(CatposeError, ValueError):
    pass


class EmptyMesh(CatposeError, ValueError):
    pass


class InputError(CatposeError):
    """Errors caused by user-supplied files; the CLI maps these to exit code 2."""


class ParseError(InputError, ValueError):
    def __init__(self, message, path=None, line=None, offset=None):
        self.path = path
        self.line = line
        self.offset = offset
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"byte {offset}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class SchemaVersionError(InputError, ValueError):
    pass


class ValidationError(InputError, ValueError):
    pass


class UnsupportedFormat(InputError, ValueError):
    pass
