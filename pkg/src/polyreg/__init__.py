"""Polyregular string functions from three angles.

For-programs, string-to-string FO/MSO interpretations, and definable
enumerators, together with the constructive machinery (factorization
forests, rank types, dominating coordinates) that turns a definable
enumerator into an ordered enumeration procedure.
"""

from .errors import PolyregError
from .logic import eval_formula, parse_formula, quantifier_rank, to_sexpr
from .structures import (
    ef_equivalent,
    linear_order,
    ordered_model,
    ordered_product,
    rank_type_id,
    successor_model,
    threshold_signature,
)
from .semigroup import (
    Homomorphism,
    Semigroup,
    build_forest,
    height_bound,
    is_aperiodic,
    type_monoid,
    validate_forest,
)
from .interpretation import (
    Interpretation,
    compose_fo,
    evaluate_interpretation,
    validate_order,
)
from .forprog import (
    ForProgram,
    check_first_order,
    compile_formula_to_program,
    parse_program,
    run_boolean,
    run_enumerator,
    run_program,
)
from .rational import RationalTransducer, chain, check_unambiguous, eval_rational
from .domination import (
    find_domination,
    rational_dominating_coordinate,
    rational_order_table,
)
from .pipeline import (
    DefinableEnumerator,
    compile_enumeration,
    enumerate_definable,
    induced_enumerator,
    interpret_via_pipeline,
    merge_enumerations,
)

__version__ = "0.1.0"

__all__ = [
    "PolyregError",
    "parse_formula", "to_sexpr", "eval_formula", "quantifier_rank",
    "ordered_model", "successor_model", "ordered_product", "linear_order",
    "ef_equivalent", "threshold_signature", "rank_type_id",
    "Semigroup", "Homomorphism", "is_aperiodic", "type_monoid",
    "build_forest", "validate_forest", "height_bound",
    "Interpretation", "evaluate_interpretation", "validate_order", "compose_fo",
    "ForProgram", "parse_program", "run_program", "run_enumerator", "run_boolean",
    "check_first_order", "compile_formula_to_program",
    "RationalTransducer", "eval_rational", "check_unambiguous", "chain",
    "rational_order_table", "rational_dominating_coordinate", "find_domination",
    "DefinableEnumerator", "enumerate_definable", "compile_enumeration",
    "merge_enumerations", "induced_enumerator", "interpret_via_pipeline",
]
