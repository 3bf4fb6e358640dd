"""Exception types shared across the package."""

__all__ = ["LayoutError", "ConfigError", "NumericalDivergenceError"]


class LayoutError(ValueError):
    """Matrix block layout cannot be realized (e.g. indivisible sizes)."""


class ConfigError(ValueError):
    """Invalid experiment configuration; carries the offending field path."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class NumericalDivergenceError(RuntimeError):
    """Solver produced a non-finite quantity; carries the iteration index."""

    def __init__(self, iteration: int, what: str = "state"):
        self.iteration = iteration
        super().__init__(f"non-finite {what} at iteration {iteration}")
