# engine/two_cells.py
"""The functor F_G H = (Y -> H) . G on coutility-free games and their morphisms."""
from .carriers import UNIT_ELEMENT
from .conditioning import condition
from .errors import BoundaryMismatch
from .morphisms import CoutilityFreeGame, GameMorphism, require_valid
from .open_game import compose, reindex_state


def fg_object(stage: CoutilityFreeGame, h: CoutilityFreeGame, guard: int = None) -> CoutilityFreeGame:
    """F_G H = (Y -> H) . G with strategies Σ_G x (Y -> Σ_H)."""
    if stage.utilities != h.utilities:
        raise BoundaryMismatch(f"{stage.name} and {h.name} have different utility sets")
    conditioned = condition(stage.moves, h.game, guard)
    fitted = reindex_state(conditioned, stage.moves, lambda y: (y, UNIT_ELEMENT))
    return CoutilityFreeGame(compose(stage.game, fitted))


def fg_morphism(stage: CoutilityFreeGame, alpha: GameMorphism, h, h_prime, **check_options) -> GameMorphism:
    """F_G(alpha): (σ, f) -> (σ, α_Σ . f) on strategies, (y, z) -> (y, α_Y z) on moves."""
    require_valid(alpha, h, h_prime, **check_options)
    source = fg_object(stage, h)
    alpha_y = {(y, z): (y, alpha.alpha_y[z]) for (y, z) in source.moves}
    alpha_sigma = {
        (sigma, f): (sigma, f.mapped(lambda s: alpha.alpha_sigma[s])) for (sigma, f) in source.strategies
    }
    return GameMorphism(alpha_y, alpha_sigma)
