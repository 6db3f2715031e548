"""Exception types shared across the pipeline."""


class RevmineError(Exception):
    """Base class for all pipeline errors."""


class ParseError(RevmineError):
    """A file could not be parsed; message names the offending line."""


class ConflictError(RevmineError):
    """An identifier collided with one already registered."""


class SchemaError(RevmineError):
    """A label, rule, or curation entry violates the declared schema."""


class ConfigError(RevmineError):
    """A configuration value is out of its allowed range."""


class ContractError(RevmineError):
    """A caller violated an operation precondition."""


class SplitError(RevmineError):
    """The dataset is too small for the requested split; names the shortfall."""


class PipelineError(RevmineError):
    """A subcommand ran before its prerequisite artifact existed."""
