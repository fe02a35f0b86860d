from jsonschema import Draft7Validator
from jsonschema.exceptions import best_match

from .exceptions import ConfigValidationError
from .schema import EXPERIMENT_SCHEMA

experiment_validator = Draft7Validator(EXPERIMENT_SCHEMA)


def error_path(error):
    return ".".join(str(part) for part in error.absolute_path)


def validate_experiment_schema(val):
    error = best_match(experiment_validator.iter_errors(val))
    if error is not None:
        raise ConfigValidationError(error.message, path=error_path(error))
