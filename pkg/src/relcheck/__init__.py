"""Deciding whether relational points type multiplicative proof structures.

The token machine (`relcheck.machine`) answers membership queries in time
linear in the structure; the exhaustive oracle (`relcheck.relsem`) answers the
same queries by brute-force search over experiments and is used to cross-check
the machine.  `relcheck.lam` carries the analogous multiset-refinement checker
for simply typed lambda terms.
"""

from .errors import InputError, ParseError, RelcheckError, ValidationError
from .lam import (
    BoolVerdict,
    boolean_eval,
    check_judgment,
    check_point,
    normalize,
    parse_rpoint,
    parse_term,
    parse_type,
    typecheck,
)
from .machine import (
    check,
    delta_instances,
    initial_config,
    normal_run,
    render_trace,
    replay_trace,
    series_add,
    step_displacement,
    step_unification,
)
from .mll import (
    dual,
    format_formula,
    format_structure,
    load_structure,
    parse_formula,
    parse_proof_structure,
    validate,
)
from .relsem import (
    apply_subst,
    enumerate_web,
    experiment_result,
    mgu,
    oracle_check,
    parse_point,
    parse_point_list,
    verify_experiment,
    web_member,
)

__version__ = "0.1.0"
