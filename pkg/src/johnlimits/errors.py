class GeometryError(ValueError):
    """Raised when an input violates an operation's precondition.

    ``code`` is a short stable identifier such as ``"empty-space"`` or
    ``"no-john-curve"``; tests and the CLI match on it.
    """

    def __init__(self, code, detail=None):
        self.code = code
        self.detail = detail
        msg = code if detail is None else f"{code}: {detail}"
        super().__init__(msg)
