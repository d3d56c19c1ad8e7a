class MarsOpsError(Exception):
    """Base class for simulator errors."""


class RosterError(MarsOpsError):
    pass


class UnknownAssetError(RosterError, KeyError):
    def __init__(self, asset):
        super().__init__(f"{asset!r} is not an asset in the roster")
        self.asset = asset

    def __str__(self):
        return self.args[0]


class RoutingError(MarsOpsError):
    pass


class ConsensusError(MarsOpsError):
    pass


class TranslationError(MarsOpsError):
    pass


class ScenarioError(MarsOpsError):
    pass


class InconsistentLogError(MarsOpsError):
    """Recounted metrics disagree with the reported ones."""
