class InputError(ValueError):
    """Invalid user-supplied input: bad ids, malformed files, inconsistent sizes."""


class GeneratorSyntaxError(InputError):
    """A generator expression failed to parse."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset
