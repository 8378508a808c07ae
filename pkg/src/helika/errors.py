"""Exception hierarchy shared by all helika modules."""


class HelikaError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(HelikaError):
    """Invalid physical constants or run configuration."""


class BoxContainsOrigin(HelikaError):
    """A Cartesian k-space box was requested that contains k = 0."""


class DegenerateAxis(HelikaError):
    """A box axis has non-positive half width."""


class BadShellBounds(HelikaError):
    """Spherical shell bounds violate 0 < k_min < k_max."""


class GridTooCoarse(HelikaError):
    """Grid has fewer points than the differentiation stencil needs."""


class GridMismatch(HelikaError):
    """Two objects that must share a grid do not."""


class MaskMismatch(HelikaError):
    """Grid mask does not protect the singular line of the requested axis."""


class MaskInsufficient(HelikaError):
    """Grid mask does not cover the singular lines of both frame axes."""


class SingularLine(HelikaError):
    """Wavevector lies (numerically) on the singular line k parallel to I."""


class NotTransverse(HelikaError):
    """Vector wavefunction violates the transversality constraint."""


class NotEigenstate(HelikaError):
    """State is not the required helicity eigenstate."""


class AmplitudeTooSmall(HelikaError):
    """Phase extraction requested where the amplitude is below the floor."""


class EnvelopeClipped(HelikaError):
    """Too much of the envelope's norm lies outside the grid."""


class BoxLeakage(HelikaError):
    """Real-space field has not decayed at the box boundary."""


class NyquistViolation(HelikaError):
    """k-grid nodes are not commensurate with the FFT reciprocal lattice."""
