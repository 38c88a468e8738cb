import argparse
import json
import logging

from src.base.config.settings import Settings
from src.base.core.exceptions import InvalidInputError
from src.base.core.router import CommandRouter
from src.base.decorators.command_endpoint import command_endpoint
from src.domain.models.config import CLAIMS, Ceilings, RunConfig
from src.domain.models.reports import CommandResult

router = CommandRouter(
    prog="hormander",
    description="Lie-algebraic checks and numerical certification for sums of squares of vector fields",
)
logger = logging.getLogger(__name__)


# --- argument parsing ---------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _points(text: str) -> list[list[float]]:
    """'x1,x2;y1,y2' -> [[x1, x2], [y1, y2]]."""
    return [_floats(p) for p in text.split(";") if p.strip()]


def _names(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _json_object(text: str) -> dict:
    try:
        value = json.loads(text)
    except json.JSONDecodeError as e:
        raise argparse.ArgumentTypeError(f"--params is not valid JSON: {e}") from None
    if not isinstance(value, dict):
        raise argparse.ArgumentTypeError("--params must be a JSON object")
    return value


router.argument("--system", help="path to a system file")
router.argument("--builtin", help="name of a registry system")
router.argument("--params", type=_json_object, help='builtin parameters as JSON, e.g. \'{"k": 2}\'')
router.argument("--grid", type=_ints, help="ladder of nodes per axis (default 65,129,257; 33,65 in three or more dimensions)")
router.argument("--eps-ladder", type=_floats, help="relaxation eps per level in grid-spacing units (default 0.2 halved per level)")
router.argument("--boundary", choices=["periodic", "truncated", "embedded"], help="grid mode for box systems")
router.argument("--padding", type=float, help="embedding padding in core half-widths")
router.argument("--stencil", type=int, choices=[1, 2, 3], help="metric stencil radius")
router.argument("--method", choices=["eigen", "krylov", "implicit-midpoint"], help="semigroup method")
router.argument("--sources", type=_points, help="sample points 'x1,x2;y1,y2'")
router.argument("--radii", type=_floats, help="ball radii")
router.argument("--times", type=_floats, help="kernel times")
router.argument("--seed", type=int, help="random seed (default 0)")
router.argument("--claims", type=_names, help=f"claim subset: {', '.join(CLAIMS)}")
router.argument("--ceilings", dest="ceilings_file", help="JSON file overriding pass thresholds")
router.argument("--out", help="output directory")
router.argument("--workers", type=int, help="Monte-Carlo worker threads")
router.argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")

DISTANCE_ARGS = [(("--target",), {"type": _floats, "help": "point at which to read the distance"})]
GAUSSIAN_ARGS = [
    (("--c-low",), {"type": float, "help": "lower-bound exponent constant"}),
    (("--c-up",), {"type": float, "help": "upper-bound exponent constant"}),
]
FUNCTION_ARGS = [(("--n-functions",), {"type": int, "help": "random band-limited test functions"})]
RIESZ_ARGS = FUNCTION_ARGS + [(("--p-list",), {"type": _floats, "help": "exponents p != 2"})]
PATH_ARGS = [
    (("--n-paths",), {"type": int, "help": "simulated paths"}),
    (("--n-steps",), {"type": int, "help": "Euler-Maruyama steps"}),
]
WORD_ARGS = [
    (("--n-words",), {"type": int, "help": "random words"}),
    (("--max-len",), {"type": float, "help": "longest word length"}),
]


def build_config(args: argparse.Namespace, settings: Settings) -> RunConfig:
    values = {k: v for k, v in vars(args).items() if v is not None and k in RunConfig.model_fields}
    if getattr(args, "ceilings_file", None):
        try:
            values["ceilings"] = Ceilings.from_file(args.ceilings_file)
        except OSError as e:
            raise InvalidInputError(f"cannot read ceilings file: {e}") from e
    values.setdefault("workers", settings.workers)
    values.setdefault("log_level", settings.log_level)
    return RunConfig(**values)


# --- commands -----------------------------------------------------------


@router.command("analyze", help="Lie closure, nilpotency, type (R) and Hormander verdicts")
@command_endpoint(build_config)
def analyze(config: RunConfig, services) -> CommandResult:
    system = services.systems.resolve(config)
    analysis = services.analysis.analyze(system, config.seed, config.sources)
    return CommandResult(result=analysis.report(system).model_dump(mode="json"))


@router.command("distance", help="control distance field from the first source", arguments=DISTANCE_ARGS)
@command_endpoint(build_config)
def distance(config: RunConfig, services) -> CommandResult:
    system = services.systems.resolve(config)
    return services.metric.distance(system, config)


@router.command("volumes", help="ball volumes, volume growth exponent and doubling ratios")
@command_endpoint(build_config)
def volumes(config: RunConfig, services) -> CommandResult:
    system = services.systems.resolve(config)
    return services.metric.volumes(system, config)


@router.command("heat-verify", help="heat kernel diagnostics and Gaussian bounds", arguments=GAUSSIAN_ARGS)
@command_endpoint(build_config)
def heat_verify(config: RunConfig, services) -> CommandResult:
    system = services.systems.resolve(config)
    return services.heat.heat_verify(system, config).to_result(system)


@router.command("poisson-verify", help="Poisson kernel by subordination, its bounds and the Harnack fit")
@command_endpoint(build_config)
def poisson_verify(config: RunConfig, services) -> CommandResult:
    system = services.systems.resolve(config)
    return services.heat.poisson_verify(system, config).to_result(system)


@router.command("poincare", help="ball-wise Poincare constants", arguments=FUNCTION_ARGS)
@command_endpoint(build_config)
def poincare(config: RunConfig, services) -> CommandResult:
    system = services.systems.resolve(config)
    return services.heat.poincare(system, config).to_result(system)


@router.command("riesz", help="Riesz transform norms", arguments=RIESZ_ARGS)
@command_endpoint(build_config)
def riesz(config: RunConfig, services) -> CommandResult:
    system = services.systems.resolve(config)
    return services.heat.riesz(system, config).to_result(system)


@router.command("mc-compare", help="Monte-Carlo paths against the PDE heat kernel", arguments=PATH_ARGS)
@command_endpoint(build_config)
def mc_compare(config: RunConfig, services) -> CommandResult:
    system = services.systems.resolve(config)
    return services.oracle.mc_compare(system, config).to_result(system)


@router.command("transference", help="word flows against the control distance", arguments=WORD_ARGS)
@command_endpoint(build_config)
def transference(config: RunConfig, services) -> CommandResult:
    system = services.systems.resolve(config)
    return services.oracle.transference(system, config).to_result(system)


@router.command(
    "certify",
    help="full pipeline: hypotheses, then doubling, kernel bounds, Poincare, Riesz and the oracles",
    arguments=GAUSSIAN_ARGS + RIESZ_ARGS + PATH_ARGS + WORD_ARGS,
)
@command_endpoint(build_config)
def certify(config: RunConfig, services) -> CommandResult:
    system = services.systems.resolve(config)
    return services.certify.certify(system, config)
