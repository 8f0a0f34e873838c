"""Exception types raised across the package."""


class VariantSceneError(Exception):
    """Base class for all errors raised by this package."""


# --- geometry -------------------------------------------------------------

class PlyError(VariantSceneError, ValueError):
    """Base class for PLY parse failures. ``line`` is 1-based."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MalformedHeader(PlyError):
    pass


class UnsupportedProperty(PlyError):
    pass


class TruncatedBody(PlyError):
    pass


class MalformedBody(PlyError):
    """A body row is present but holds a non-numeric or out-of-range value."""


class EmptyCloud(VariantSceneError, ValueError):
    pass


class DegenerateCloud(VariantSceneError, ValueError):
    pass


class TooFewPoints(VariantSceneError, ValueError):
    pass


# --- pool / scenes --------------------------------------------------------

class InsufficientCandidates(VariantSceneError):
    def __init__(self, found, needed):
        self.found = found
        self.needed = needed
        super().__init__(f"found {found} qualifying candidates, needed {needed}")


class UnknownInstance(VariantSceneError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class ArityMismatch(VariantSceneError, ValueError):
    pass


class PlacementInfeasible(VariantSceneError):
    pass


class CaseViolation(VariantSceneError, ValueError):
    pass


# --- annotation -----------------------------------------------------------

class ClientFailure(VariantSceneError):
    def __init__(self, message, round=None, view=None):
        self.round = round
        self.view = view
        where = []
        if round is not None:
            where.append(f"round {round}")
        if view is not None:
            where.append(f"view {view}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class NonUniqueDescription(VariantSceneError):
    def __init__(self, message, matches=()):
        self.matches = list(matches)
        super().__init__(message)


# --- evaluation -----------------------------------------------------------

class DuplicatePrediction(VariantSceneError, ValueError):
    def __init__(self, scene_id):
        self.scene_id = scene_id
        super().__init__(f"duplicate prediction for scene {scene_id!r}")


class LengthMismatch(VariantSceneError, ValueError):
    pass
