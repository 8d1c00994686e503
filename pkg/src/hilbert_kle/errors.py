"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`KleError`,
which itself is a :class:`ValueError`. The CLI maps the three groups below
onto its exit codes.
"""


class KleError(ValueError):
    """Base class for all package errors."""


class InputError(KleError):
    """Malformed or inconsistent input data (CLI exit code 2)."""


class NumericError(KleError):
    """Numerically invalid input, e.g. an indefinite Gram matrix (exit 3)."""


class InfeasibleError(KleError):
    """A requested truncation level cannot be realised (exit 4)."""


# hilbert_space
class NonSPDGram(NumericError):
    pass


class BlockMismatch(InputError):
    pass


class DimMismatch(InputError):
    pass


class DegenerateBasis(NumericError):
    pass


# ensemble / kle_engine
class InvalidWeights(InputError):
    pass


class NonFiniteInput(NumericError):
    pass


class MOutOfRange(InfeasibleError):
    pass


# vector_field
class NoBlocks(InputError):
    pass


class R0OutOfRange(InfeasibleError):
    pass


class CrossBlockGram(NumericError):
    pass


# data_io
class MalformedRow(InputError):
    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class MissingCell(InputError):
    def __init__(self, year, age, region):
        super().__init__(f"missing cell (year={year}, age={age}, region={region!r})")
        self.year = year
        self.age = age
        self.region = region

    @property
    def cell(self):
        return (self.year, self.age, self.region)


class DuplicateCell(InputError):
    def __init__(self, year, age, region, line):
        super().__init__(
            f"line {line}: duplicate cell (year={year}, age={age}, region={region!r})"
        )
        self.year = year
        self.age = age
        self.region = region
        self.line = line


class NegativeValue(InputError):
    def __init__(self, line, value):
        super().__init__(f"line {line}: negative value {value!r}")
        self.line = line
        self.value = value


class SpectrumTooLong(InputError):
    pass


class BadMagic(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class MaxvalZero(InputError):
    pass
