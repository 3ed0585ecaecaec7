from .carriers import REALS, UNIT, FinSet, ProductCarrier, Reals, product
from .conditioning import ConditionedStrategy, condition, condition_on_morphism
from .errors import OpenGameError
from .iteration import FiniteCoalgebra, IteratedGame, Verdict, VerdictStatus, iterate_game
from .library import Bimatrix, argmax_decision, bimatrix_game, bimatrix_stage, builtin_strategy
from .morphisms import CoutilityFreeGame, GameMorphism, check_morphism
from .open_game import Continuation, OpenGame, compose, equilibrium_set, identity_game, tensor
from .strategies import DepthTable, StrategyTransducer
from .two_cells import fg_morphism, fg_object
from .utility import UtilityFunctional, UtilityKind, evaluate_prefix, shift
