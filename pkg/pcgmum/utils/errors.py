from typing import Any, Dict, Optional


class PcgError(ValueError):
    """Base class for every domain failure raised by the toolkit"""

    code = "domain_error"

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.message = message
        self.context = context

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {"error": self.code, "detail": self.message}
        if self.context:
            payload["context"] = self.context
        return payload


class DomainError(PcgError):
    code = "domain_error"


class DegenerateAngleError(PcgError):
    code = "degenerate_angle"


class BoundError(PcgError):
    code = "bound_exceeded"


class ConstructionError(PcgError):
    code = "construction_failed"

    def __init__(self, message: str, pair: Optional[tuple] = None, **context: Any):
        if pair is not None:
            context["pair"] = list(pair)
        super().__init__(message, **context)
        self.pair = pair


class ResolutionError(PcgError):
    code = "unresolvable_width"


class GridTooSmallError(PcgError):
    code = "grid_too_small"


class EmptyPreparationError(PcgError):
    code = "empty_preparation"


class SearchSpaceError(PcgError):
    code = "search_space_overflow"
