"""
Factory for building maps, potentials and inducing schemes from run records.
"""
import logging
from fractions import Fraction
from typing import Any, Callable, Dict, Optional, Tuple

from abstractions.tail_model import TailModel
from contracts.run_config import MapSpec, PotentialSpec, RunConfig
from core.inducing import InducingScheme, doubling_scheme, first_return_scheme
from core.interval_map import Interval, PiecewiseMonotoneMap
from core.map_families import MAP_FAMILIES
from core.potential import Potential, constant, hofbauer_keller, neg_log_deriv
from families.hofbauer_keller import HKFamily
from families.manneville_pomeau import mp_potential, mp_scheme
from families.regularity_examples import example1, example2

logger = logging.getLogger(__name__)


def _number(value: Any) -> Any:
    """"p/q" strings become Fractions so that dyadic maps stay exact."""
    if isinstance(value, str):
        try:
            return Fraction(value)
        except ValueError:
            return value
    if isinstance(value, list):
        return [_number(v) for v in value]
    if isinstance(value, dict):
        return {k: _number(v) for k, v in value.items()}
    return value


def _hk_K(params: Dict[str, Any]) -> Optional[int]:
    K = params.get("K", 2)
    return None if K in (None, "inf") else int(K)


POTENTIALS: Dict[str, Callable[..., Potential]] = {
    "constant": lambda fmap, c=0.0: constant(float(c)),
    "hk": lambda fmap, b, K=2: hofbauer_keller(float(b), _hk_K({"K": K})),
    "example1": lambda fmap: example1(),
    "example2": lambda fmap, amplitude_base=4: example2(int(amplitude_base)),
    "neg_log_deriv": lambda fmap, t=1.0: neg_log_deriv(fmap, float(t)),
    "mp": lambda fmap, alpha, p1, p2, b: mp_potential(
        float(alpha), float(p1), float(p2), float(b)
    ),
}


class RunFactory:
    """
    Builds the objects a command works on from the ``RunConfig`` records.
    """

    @staticmethod
    def create_map(spec: MapSpec) -> PiecewiseMonotoneMap:
        """
        Instantiate a map family.

        Args:
            spec (MapSpec): Family name and keyword arguments.

        Returns:
            PiecewiseMonotoneMap: The map.

        Raises:
            ValueError: If the family is unknown.
        """
        family = MAP_FAMILIES.get(spec.family)
        if family is None:
            raise ValueError(
                f"Unsupported map family: {spec.family}. "
                f"Supported families: {sorted(MAP_FAMILIES)}"
            )
        logger.info(f"Creating map {spec.family} with {spec.params}")
        return family(**_number(spec.params))

    @staticmethod
    def create_potential(spec: PotentialSpec, fmap: PiecewiseMonotoneMap) -> Potential:
        """
        Instantiate a named potential.

        Raises:
            ValueError: If the name is unknown or its parameters do not fit.
        """
        builder = POTENTIALS.get(spec.name)
        if builder is None:
            raise ValueError(
                f"Unsupported potential: {spec.name}. "
                f"Supported potentials: {sorted(POTENTIALS)}"
            )
        try:
            return builder(fmap, **spec.params)
        except TypeError as e:
            raise ValueError(f"bad parameters for potential {spec.name}: {e}") from e

    @staticmethod
    def create_tail(spec: PotentialSpec) -> Optional[TailModel]:
        """Closed-form tail for potentials that have one; None lets inducing decide."""
        if spec.name == "hk":
            return HKFamily(float(spec.params["b"]), _hk_K(spec.params)).tail()
        return None

    @staticmethod
    def create_scheme(config: RunConfig, fmap: PiecewiseMonotoneMap) -> InducingScheme:
        scheme = config.scheme
        if scheme.kind == "doubling":
            return doubling_scheme(fmap, scheme.n_max)
        if scheme.kind == "mp":
            params = config.map.params
            alpha = float(params.get("alpha", config.potential.params.get("alpha")))
            return mp_scheme(alpha, scheme.n_max, fmap)
        interval = interval_from(scheme.interval, fmap, closed_right=True)
        return first_return_scheme(fmap, interval, scheme.n_max)

    @staticmethod
    def potential_family(
        spec: PotentialSpec, fmap: PiecewiseMonotoneMap, param: str
    ) -> Tuple[Callable[[float], Potential], Callable[[float], Optional[TailModel]]]:
        """φ_t and its tail as functions of one potential parameter."""

        def with_value(value: float) -> PotentialSpec:
            return PotentialSpec(name=spec.name, params={**spec.params, param: value})

        return (
            lambda value: RunFactory.create_potential(with_value(value), fmap),
            lambda value: RunFactory.create_tail(with_value(value)),
        )


def interval_from(
    bounds: Tuple[float, float], fmap: PiecewiseMonotoneMap, closed_right: bool = False
) -> Interval:
    """Config bounds as an interval in the map's arithmetic (exact for dyadic maps)."""
    left, right = (fmap.coerce(Fraction(str(b))) for b in bounds)
    return Interval(left, right, True, closed_right)
