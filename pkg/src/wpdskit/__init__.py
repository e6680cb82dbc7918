"""Weighted pushdown reachability over idempotent semirings with infinite
descending chains, with witness detection instead of non-termination."""
from .fixpoint import (AllWitnesses, GreatestFixedPoint, Monomial, PolynomialSystem, Var,
                       Witness, all_witnesses, derivation_tree_value, evaluate, safe_kleene)
from .nfa import Nfa
from .semiring import (BOOL, BOTTOM, MAX_PLUS, MAX_TIMES, MIN_PLUS, Semiring, SemiringError,
                       axiom_suite, get_semiring)
from .wautomata import (UNREACHABLE, WAutomaton, accepted_weight, bellman_ford_extremal,
                        from_post_star, from_pre_star, product_with_unweighted,
                        unweighted_pre_star)
from .wpds import (Configuration, Rule, Wpds, WpdsError, brute_force_movp, build_post_star_system,
                   build_pre_star_system, movp, normalize, reduce_regular_target, reverse_wpds,
                   solve_post_star, solve_pre_star)
from .analyses import (Cfg, LabelledWpds, Tag, Verdict, cfg_to_wpds, check_correspondence,
                       check_memory_safety, check_shape_balancedness)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
