"""Exception types shared by every module."""


class NetShareError(ValueError):
    """Raised for domain errors; ``code`` is a short machine-readable tag."""

    def __init__(self, code, message=""):
        self.code = code
        super().__init__(f"{code}: {message}" if message else code)


class InfeasibleScheduleError(NetShareError):
    """No sharpness in [0, 1] keeps the CHSH value above the margin.

    ``round_index`` is the 1-based observer that could not be served,
    ``gammas`` the sharpness values chosen before it, and ``reports`` is
    filled in by the network drivers with the rounds computed so far.
    """

    def __init__(self, round_index, gammas=(), message=""):
        self.round_index = round_index
        self.gammas = list(gammas)
        self.reports = []
        super().__init__("infeasible", message or f"no sharpness works at round {round_index}")
