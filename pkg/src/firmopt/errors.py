"""Exception hierarchy shared by every firmopt module."""


class FirmoptError(Exception):
    pass


# -- GXL input -------------------------------------------------------------

class GxlError(FirmoptError):
    """Base class for problems reading a GXL document."""


class MalformedXml(GxlError):
    pass


class MissingTypeRef(GxlError):
    pass


class BadAttrPayload(GxlError):
    pass


# -- model queries ---------------------------------------------------------

class UnknownNode(FirmoptError, KeyError):
    def __str__(self):
        return "unknown node %r" % (self.args[0],)


class UnknownElement(FirmoptError, KeyError):
    pass


class NoOwnerBlock(FirmoptError):
    pass


class AmbiguousOwner(FirmoptError):
    pass


class MissingPosition(FirmoptError):
    pass


class NoDefaultGraph(FirmoptError):
    pass


# -- folding ---------------------------------------------------------------

class FoldError(FirmoptError):
    """A single rule match could not be applied; the graph is left as it was."""


class DivisionByZero(FoldError, ZeroDivisionError):
    pass


class ArithmeticOverflow(FoldError, OverflowError):
    pass


class UnsupportedOp(FoldError, ValueError):
    pass


class MissingRelationAttr(FoldError):
    pass


class MissingCondUser(FoldError):
    pass


class UnlabeledBranch(FoldError):
    pass


class PositionMismatch(FoldError):
    pass


# -- instruction selection -------------------------------------------------

class BadTypeRef(FirmoptError, ValueError):
    pass


class BadPivot(FirmoptError, ValueError):
    pass


# -- driver ----------------------------------------------------------------

class NonConvergence(FirmoptError):
    def __init__(self, msg, summary=None):
        super().__init__(msg)
        self.summary = summary


class NonPureSubgraph(FirmoptError):
    pass
