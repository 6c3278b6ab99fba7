"""Exception types raised across the package."""


class LdscError(Exception):
    pass


class ShapeMismatch(LdscError, ValueError):
    pass


class NonFiniteGradient(LdscError, FloatingPointError):
    def __init__(self, name):
        super().__init__(f"non-finite gradient in parameter {name!r}")
        self.name = name


class SchemaError(LdscError, ValueError):
    pass


class ParseError(LdscError, ValueError):
    def __init__(self, lineno, reason):
        super().__init__(f"line {lineno}: {reason}")
        self.lineno = lineno
        self.reason = reason


class EmptyDataset(LdscError, ValueError):
    pass


class EmptyInput(LdscError, ValueError):
    pass


class ValueNotFound(LdscError, ValueError):
    def __init__(self, act, slot):
        super().__init__(f"value of {act}-{slot} does not occur in the text")
        self.act, self.slot = act, slot


class OverlappingValues(LdscError, ValueError):
    def __init__(self, act, slot):
        super().__init__(f"value of {act}-{slot} only occurs overlapping another value")
        self.act, self.slot = act, slot


class UnboundPlaceholder(LdscError, KeyError):
    def __init__(self, token):
        super().__init__(token)
        self.token = token

    def __str__(self):
        return f"no value left for placeholder {self.token}"


class UnknownActSlot(LdscError, KeyError):
    def __init__(self, act, slot):
        super().__init__(f"{act}-{slot}")
        self.act, self.slot = act, slot


class UnknownGrammar(LdscError, ValueError):
    pass


class SequenceTooLong(LdscError, ValueError):
    pass


class AlignmentError(LdscError, ValueError):
    pass


class EmptyCorpus(LdscError, ValueError):
    pass


class CorpusTooSmall(LdscError, ValueError):
    pass


class EmptyBeam(LdscError, RuntimeError):
    pass
