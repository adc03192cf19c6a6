"""Binary cubic forms over the integers and 3-torsion in quadratic orders."""

__version__ = "0.1.0"

from .forms import CubicForm, Flavor, act, disc, hessian, is_projective, is_reducible, rational_root, reduced_disc
from .reduction import canonical, reduce_neg, reduce_pos
from .correspondence import Triple, compose, form_to_triple, identity_form, triple_to_form
from .quad_orders import cl3_count, class_number, ideal3_count, is_maximal_disc, sigma_factor, u3_correction
from .enumeration import ClassFilter, classes_with_disc, count_classes, cubic_census_squarefree
from .local_mass import FamilySpec, LocalRingSpec, mass, mass_factor, mu_maximal, mu_projective
from .harness import StatsRow, family_contains, scan, verify_identities

__all__ = [
    "CubicForm",
    "Flavor",
    "act",
    "disc",
    "hessian",
    "is_projective",
    "is_reducible",
    "rational_root",
    "reduced_disc",
    "canonical",
    "reduce_neg",
    "reduce_pos",
    "Triple",
    "compose",
    "form_to_triple",
    "identity_form",
    "triple_to_form",
    "cl3_count",
    "class_number",
    "ideal3_count",
    "is_maximal_disc",
    "sigma_factor",
    "u3_correction",
    "ClassFilter",
    "classes_with_disc",
    "count_classes",
    "cubic_census_squarefree",
    "FamilySpec",
    "LocalRingSpec",
    "mass",
    "mass_factor",
    "mu_maximal",
    "mu_projective",
    "StatsRow",
    "family_contains",
    "scan",
    "verify_identities",
]
