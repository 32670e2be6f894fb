"""
 Copyright 2026 Google LLC

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
 """

from __future__ import annotations


class HomcellError(Exception):
    """Base class for all errors raised by homcell.

    Attributes:
        certification: True when the error means the numerics could not certify
            a result (as opposed to a configuration or usage problem).
    """

    certification = False

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class ExpressionSyntaxError(HomcellError):
    """Raised when an expression does not match the map grammar."""

    def __init__(self, message: str, offset: int, expected: frozenset[str]):
        super().__init__(
            f"{message} at byte offset {offset}; expected one of {sorted(expected)}",
            offset=offset,
            expected=sorted(expected),
        )
        self.offset = offset
        self.expected = expected


class UnknownFunctionError(HomcellError):
    pass


class UnknownIdentifierError(HomcellError):
    pass


class MapDomainError(HomcellError):
    """Raised when a map is evaluated at a singularity of its formula."""


class IntegrationError(HomcellError):
    """Raised when the ODE integrator fails to reach the requested time."""


class ConfigError(HomcellError):
    pass


class NewtonFailure(HomcellError):
    pass


class NoInverse(HomcellError):
    pass


class NotASaddle(HomcellError):
    pass


class OutOfRange(HomcellError):
    pass


class HypothesisUnmet(HomcellError):
    pass


class ChartInconsistency(HomcellError):
    pass


class FixedPointOnCurve(HomcellError):
    certification = True


class RefinementExhausted(HomcellError):
    """Raised when adaptive refinement cannot meet its resolution targets.

    Attributes:
        partial: The best result obtained before giving up, when one exists
            (for manifold growth, the partially grown branch).
    """

    certification = True

    def __init__(self, message: str, partial=None, **diagnostics):
        super().__init__(message, **diagnostics)
        self.partial = partial


class LeftWorkingRectangle(RefinementExhausted):
    pass


class NotIsolated(HomcellError):
    certification = True


class DegenerateLoop(HomcellError):
    certification = True


class AmbiguousSign(HomcellError):
    certification = True


class NoHomoclinicPoint(HomcellError):
    certification = True
