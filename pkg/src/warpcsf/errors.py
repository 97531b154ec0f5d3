"""Exception hierarchy shared across the package.

Flow degeneracies that occur *during* a run are reported as terminal events
on the trajectory, not exceptions; the classes below are for misuse of the
API or for single-step calls where there is no event log to attach to.
"""


class WarpcsfError(Exception):
    """Base class for all package errors."""


class InvalidParams(WarpcsfError):
    """Constructor or preset arguments outside their documented range."""


class DomainExceeded(WarpcsfError):
    """A height value z lies at or above the domain's upper bound."""


class OrderUnavailable(WarpcsfError):
    """A derivative order beyond what the warp family supports analytically."""


class DegenerateEdge(WarpcsfError):
    """An edge of the discrete curve is shorter than 1e-12 * L / n."""


class NotClosed(WarpcsfError):
    """closure_offset is not an integer multiple of 2*pi within 1e-6."""


class Collapse(WarpcsfError):
    """Curve length fell below 1e-4 of its initial value."""


class Blowup(WarpcsfError):
    """max|kappa| * min ds exceeded 1, the resolution limit of the mesh."""


class InsufficientSamples(WarpcsfError):
    """A residual needs three equally spaced samples and got fewer."""


class RemeshInWindow(WarpcsfError):
    """Vertex correspondence across a residual window was broken by a remesh."""


class ThetaTooSmall(WarpcsfError):
    """v = 1/Theta is requested while min Theta < 0.1 somewhere in the window."""


class HypothesisNotMet(WarpcsfError):
    """A conditional bound was queried at a state where its hypothesis fails."""


class InitialOrderViolated(WarpcsfError):
    """Comparison baselines do not sandwich the initial curve strictly."""


class ParseError(WarpcsfError):
    """Scenario config could not be parsed or validated.

    ``errors`` collects every individual problem found, not just the first.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in self.errors))


class UnknownFamily(ParseError):
    """Warp family name not recognised (a close match is suggested if any)."""


class UnknownPreset(ParseError):
    """Initial-curve preset name not recognised."""


class UnknownCheck(ParseError):
    """Check name not recognised."""
