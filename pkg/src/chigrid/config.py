import dataclasses
import enum
import json
import math
from dataclasses import dataclass, field

from .chiproc import GridKind, GridSpec, pickands_scale
from .exceptions import ConfigParseError, ConfigValidationError
from .gaussim import CorrelationFamily, CorrelationModel
from .pickands import EstimatorMethod, default_window
from .settings import CHIGRID_CONSTANTS_REPLICATIONS
from .validators import validate_experiment_schema

DEFAULT_ETA = 0.05
DEFAULT_EVAL_POINTS = tuple(
    (float(x), float(y)) for x in range(-2, 4) for y in range(-2, 4)
)


class ConstantsSource(enum.Enum):
    ESTIMATE = "estimate"
    PROVIDED = "provided"


@dataclass(frozen=True)
class ConstantsConfig:
    source: ConstantsSource = ConstantsSource.ESTIMATE
    H_alpha: float | None = None
    H_D_alpha: float | None = None
    pickands_term: dict | None = None
    n_rep: int = CHIGRID_CONSTANTS_REPLICATIONS
    lambda_: float | None = None
    method: EstimatorMethod = EstimatorMethod.NORMALIZED

    def to_dict(self):
        data = {
            "source": self.source.value,
            "n_rep": self.n_rep,
            "lambda": self.lambda_,
            "method": self.method.value,
        }
        if self.H_alpha is not None:
            data["H_alpha"] = self.H_alpha
        if self.H_D_alpha is not None:
            data["H_D_alpha"] = self.H_D_alpha
        if self.pickands_term is not None:
            data["pickands_term"] = [
                {"x": x, "y": y, "value": value}
                for (x, y), value in self.pickands_term.items()
            ]
        return data


@dataclass(frozen=True)
class ExperimentConfig:
    m: int
    alpha: float
    r: float
    T: float
    grid: GridSpec
    n_rep: int
    master_seed: int
    eta: float = DEFAULT_ETA
    eval_points: tuple = DEFAULT_EVAL_POINTS
    family: CorrelationFamily = CorrelationFamily.EXP_POWER
    constants: ConstantsConfig = field(default_factory=ConstantsConfig)

    @property
    def mesh(self):
        """Lattice spacing eta * (2 ln T)^(-1/alpha) for the continuous maximum."""
        return self.eta * pickands_scale(self.T, self.alpha)

    @property
    def correlation_model(self):
        if self.family == CorrelationFamily.STRONG_MIXTURE:
            return CorrelationModel.strong_mixture(self.alpha, self.r, self.T)
        return CorrelationModel.exp_power(self.alpha)

    def with_seed(self, master_seed):
        return dataclasses.replace(self, master_seed=master_seed)

    def to_dict(self):
        return {
            "m": self.m,
            "alpha": self.alpha,
            "r": self.r,
            "T": self.T,
            "family": self.family.value,
            "grid": self.grid.to_dict(),
            "eta": self.eta,
            "n_rep": self.n_rep,
            "master_seed": self.master_seed,
            "eval_points": [list(point) for point in self.eval_points],
            "constants": self.constants.to_dict(),
        }


class _JSONObject(dict):
    duplicates = ()


def _collect_pairs(pairs):
    obj = _JSONObject()
    duplicates = []
    for key, value in pairs:
        if key in obj:
            duplicates.append(key)
        obj[key] = value
    obj.duplicates = duplicates
    return obj


def _find_duplicate(value, path=()):
    if isinstance(value, _JSONObject):
        if value.duplicates:
            return path + (value.duplicates[0],)
        children = value.items()
    elif isinstance(value, list):
        children = enumerate(value)
    else:
        return None
    for key, child in children:
        found = _find_duplicate(child, path + (key,))
        if found:
            return found
    return None


def load_document(document):
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ConfigParseError("document is not UTF-8: %s" % e) from None
    try:
        data = json.loads(document, object_pairs_hook=_collect_pairs)
    except json.JSONDecodeError as e:
        raise ConfigParseError(
            "%s at line %s column %s" % (e.msg, e.lineno, e.colno)
        ) from None
    duplicate = _find_duplicate(data)
    if duplicate:
        raise ConfigParseError(
            "duplicate key", path=".".join(str(part) for part in duplicate)
        )
    if not isinstance(data, dict):
        raise ConfigParseError("experiment document must be a JSON object")
    return data


def parse_config(document):
    return config_from_dict(load_document(document))


def _grid_from_dict(data):
    kind = GridKind(data["kind"])
    if kind == GridKind.PICKANDS and "D" not in data:
        raise ConfigValidationError("a Pickands grid needs D", path="grid.D")
    if kind != GridKind.PICKANDS and "D" in data:
        raise ConfigValidationError("D only applies to Pickands grids", path="grid.D")
    if kind != GridKind.SPARSE and "delta0" in data:
        raise ConfigValidationError(
            "delta0 only applies to sparse grids", path="grid.delta0"
        )
    return GridSpec(kind=kind, D=data.get("D"), delta0=data.get("delta0", 1.0))


def _constants_from_dict(data, alpha, grid, eval_points):
    source = ConstantsSource(data.get("source", ConstantsSource.ESTIMATE.value))
    supplied = [key for key in ("H_alpha", "H_D_alpha", "pickands_term") if key in data]
    if source == ConstantsSource.ESTIMATE and supplied:
        raise ConfigValidationError(
            "constant values are only read when source is provided",
            path="constants.%s" % supplied[0],
        )

    pickands_term = None
    if source == ConstantsSource.PROVIDED:
        if "H_alpha" not in data:
            raise ConfigValidationError(
                "provided constants need H_alpha", path="constants.H_alpha"
            )
        if grid.kind == GridKind.PICKANDS:
            if "H_D_alpha" not in data:
                raise ConfigValidationError(
                    "a Pickands grid needs H_D_alpha", path="constants.H_D_alpha"
                )
            pickands_term = {
                (float(item["x"]), float(item["y"])): float(item["value"])
                for item in data.get("pickands_term", [])
            }
            missing = [point for point in eval_points if point not in pickands_term]
            if missing:
                raise ConfigValidationError(
                    "no Pickands grid constant for eval point %s" % (missing[0],),
                    path="constants.pickands_term",
                )

    return ConstantsConfig(
        source=source,
        H_alpha=data.get("H_alpha"),
        H_D_alpha=data.get("H_D_alpha") if grid.kind == GridKind.PICKANDS else None,
        pickands_term=pickands_term,
        n_rep=data.get("n_rep", CHIGRID_CONSTANTS_REPLICATIONS),
        lambda_=data.get("lambda", default_window(alpha)[0]),
        method=EstimatorMethod(data.get("method", EstimatorMethod.NORMALIZED.value)),
    )


def config_from_dict(data):
    validate_experiment_schema(data)

    T = float(data["T"])
    if not T > math.e:
        raise ConfigValidationError("T must exceed e so that ln T > 1", path="T")
    alpha = float(data["alpha"])
    r = float(data["r"])

    default_family = (
        CorrelationFamily.STRONG_MIXTURE if r > 0 else CorrelationFamily.EXP_POWER
    )
    family = CorrelationFamily(data.get("family", default_family.value))
    if family == CorrelationFamily.EXP_POWER and r > 0:
        raise ConfigValidationError(
            "r > 0 needs the strong_mixture family", path="family"
        )
    if family == CorrelationFamily.STRONG_MIXTURE and r / math.log(T) >= 1:
        raise ConfigValidationError("r / ln T must be below 1", path="r")

    grid = _grid_from_dict(data["grid"])
    eval_points = tuple(
        (float(x), float(y)) for x, y in data.get("eval_points", DEFAULT_EVAL_POINTS)
    )
    constants = _constants_from_dict(
        data.get("constants", {}), alpha, grid, eval_points
    )

    return ExperimentConfig(
        m=data["m"],
        alpha=alpha,
        r=r,
        T=T,
        grid=grid,
        n_rep=data["n_rep"],
        master_seed=data["master_seed"],
        eta=float(data.get("eta", DEFAULT_ETA)),
        eval_points=eval_points,
        family=family,
        constants=constants,
    )
