from typing import Any, Iterable, List, Optional, Sequence, Tuple


class RolloutMixError(Exception):
    """Base class for every error raised by this package"""


class ValidationError(RolloutMixError, ValueError):
    """Input rejected: cover, population, schema or configuration is invalid"""


class ResourceGuardError(RolloutMixError):
    """A configured resource bound was hit before the computation finished"""


class NotCovering(ValidationError):
    def __init__(self, uncovered: Iterable[Any]):
        self.uncovered: List[Any] = list(uncovered)
        super().__init__(f"Cover sets do not cover states: {self.uncovered}")


class EmptyCoverSet(ValidationError):
    def __init__(self, set_id: Any):
        self.set_id = set_id
        super().__init__(f"Cover set {set_id!r} is empty")


class UnknownState(ValidationError):
    def __init__(self, state: Any):
        self.state = state
        super().__init__(f"Unknown state {state!r}")


class AmbiguousCoverSetId(ValidationError):
    """Cover set ids must stay distinct once joined into class ids"""

    def __init__(self, set_id: Any, detail: str):
        self.set_id = set_id
        self.detail = detail
        super().__init__(f"Cover set id {set_id!r} {detail}")


class UnknownCoverSet(ValidationError):
    def __init__(self, set_id: Any, message: Optional[str] = None):
        self.set_id = set_id
        super().__init__(message or f"Unknown cover set {set_id!r}")


class UnknownSchemaSymbol(UnknownCoverSet):
    """Schema path entry that is neither a cover set nor a class"""

    def __init__(self, symbol: Any):
        super().__init__(symbol, f"Schema symbol {symbol!r} is neither a cover set nor a class")


class PseudometricAxiomViolation(ValidationError):
    def __init__(self, axiom: str, witness: Tuple[Any, ...]):
        self.axiom = axiom
        self.witness = witness
        super().__init__(f"Pseudometric violates {axiom} at {witness}")


class DuplicateState(ValidationError):
    def __init__(self, state: Any, positions: Sequence[Tuple[int, int]]):
        self.state = state
        self.positions = list(positions)
        super().__init__(f"State {state!r} occurs more than once at (rollout, position) {self.positions}")


class DuplicateTerminal(ValidationError):
    def __init__(self, label: Any):
        self.label = label
        super().__init__(f"Terminal label {label!r} ends more than one rollout")


class UnknownReference(ValidationError):
    def __init__(self, kind: str, ref: Any):
        self.kind = kind
        self.ref = ref
        super().__init__(f"Population references undeclared {kind} {ref!r}")


class EmptyRollout(ValidationError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"Rollout {index} has no states")


class StateNotInPopulation(ValidationError):
    def __init__(self, states: Iterable[Any]):
        self.states = list(states)
        super().__init__(f"Declared states missing from the population: {self.states}")


class IncompatibleTriple(ValidationError):
    def __init__(self, set_id: Any, u: Any, v: Any):
        self.set_id = set_id
        self.u = u
        self.v = v
        super().__init__(f"({set_id!r}, {u!r}, {v!r}) is not a recombination-compatible triple")


class MissingPayoff(ValidationError):
    def __init__(self, label: Any):
        self.label = label
        super().__init__(f"No payoff declared for terminal {label!r}")


class TerminalUnreachable(ValidationError):
    def __init__(self, class_id: Any):
        self.class_id = class_id
        super().__init__(f"No terminal label is reachable from class {class_id!r}")


class AllTruncated(ValidationError):
    def __init__(self, samples: int, height_cap: int):
        self.samples = samples
        self.height_cap = height_cap
        super().__init__(f"All {samples} samples reached the height cap {height_cap}")


class ParseError(ValidationError):
    def __init__(self, location: str, detail: Optional[str] = None):
        self.location = location
        self.detail = detail
        message = f"Parse error at {location}"
        if detail:
            message += f": {detail}"
        super().__init__(message)


class ConfigError(ValidationError):
    def __init__(self, field: str, detail: str):
        self.field = field
        self.detail = detail
        super().__init__(f"Invalid {field}: {detail}")


class ClassTooLarge(ResourceGuardError):
    def __init__(self, bound: int):
        self.bound = bound
        super().__init__(f"Equivalence class exceeds the bound of {bound} populations")
