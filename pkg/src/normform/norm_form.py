"""Norm form polynomials, bounded solution enumeration, equivalence classes.

The norm form is expanded exactly: the coordinates are formal variables and
the determinant of the generic multiplication matrix is taken over k, so
every coefficient is an exact k-element.  Enumeration walks a coordinate
box; equivalence of two solutions is decided numerically on the unit-log
system and then verified exactly in the field.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .module_order import FullModule, RelativeUnitSystem, is_torsion_unit, torsion_units
from .number_field import FieldElement, embed_k_in_l, is_algebraic_integer, relative_norm
from .places_heights import archimedean_log_vector
from .reduction import ReductionReport, reduce_solution

__all__ = ["NormFormPoly", "Solution", "SolutionClass", "SolutionSet",
           "norm_form_poly", "check_solution", "enumerate_solutions",
           "partition_classes"]

BOX_CAP = 10 ** 8


@dataclass(frozen=True)
class NormFormPoly:
    """Homogeneous degree-e form in e variables with exact k-coefficients."""

    module: FullModule
    monomials: tuple  # ((exponent tuple, k-element), ...)

    @property
    def degree(self) -> int:
        return self.module.tower.e

    def evaluate(self, nu) -> FieldElement:
        """Exact value at a vector of k-elements."""
        tower = self.module.tower
        nu = [v if isinstance(v, FieldElement) else tower.k_element([v]) for v in nu]
        acc = tower.zero("k")
        for expo, coeff in self.monomials:
            term = coeff
            for v, p in zip(nu, expo):
                for _ in range(p):
                    term = term * v
            acc = acc + term
        return acc

    def as_strings(self):
        return [("*".join([f"x{i+1}^{p}" for i, p in enumerate(expo) if p]) or "1",
                 coeff.as_string()) for expo, coeff in self.monomials]


@dataclass(frozen=True)
class Solution:
    coords: tuple          # integer coordinates over the Z-basis of M
    nu: tuple              # the e coordinates over O_k, as k-elements
    mu: FieldElement
    zeta: FieldElement


@dataclass(frozen=True)
class SolutionClass:
    member_indices: tuple
    representative: ReductionReport


@dataclass(frozen=True)
class SolutionSet:
    beta: FieldElement
    solutions: tuple
    search_box: int
    classes: tuple = None


def _mul_by_linear(poly, linear, zero):
    """Multiply a monomial dict by a linear form (list of k-coeffs per var)."""
    out = {}
    for expo, coeff in poly.items():
        for i, c in enumerate(linear):
            if c.is_zero:
                continue
            new = list(expo)
            new[i] += 1
            key = tuple(new)
            prev = out.get(key)
            term = coeff * c
            out[key] = term if prev is None else prev + term
    return {k: v for k, v in out.items() if not v.is_zero}


def norm_form_poly(module: FullModule) -> NormFormPoly:
    """Expand the norm form exactly as a generic multiplication determinant."""
    tower = module.tower
    e = tower.e
    # c[i][n][m]: k-coefficient of omega_m in omega_i * omega_n
    coeffs = []
    for om_i in module.omega_basis:
        row = []
        for om_n in module.omega_basis:
            x = module.coordinates(om_i * om_n)
            per_m = []
            for m in range(e):
                c = tower.zero("k")
                for j, psi in enumerate(tower.psi_basis):
                    c = c + x[m * tower.f + j] * psi
                per_m.append(c)
            row.append(per_m)
        coeffs.append(row)
    # entry (m, n) of the generic matrix is the linear form sum_i c[i][n][m] x_i
    entry = [[[coeffs[i][n][m] for i in range(e)] for n in range(e)] for m in range(e)]
    zero = tower.zero("k")
    one_poly = {tuple([0] * e): tower.one("k")}
    memo = {}

    def minor(row, cols):
        if not cols:
            return one_poly
        key = cols
        if key in memo:
            return memo[key]
        acc = {}
        sign = 1
        for pos, col in enumerate(sorted(cols)):
            sub = minor(row + 1, cols - frozenset([col]))
            term = _mul_by_linear(sub, entry[row][col], zero)
            for expo, coeff in term.items():
                signed = coeff if sign > 0 else -coeff
                prev = acc.get(expo)
                acc[expo] = signed if prev is None else prev + signed
            sign = -sign
        acc = {k: v for k, v in acc.items() if not v.is_zero}
        memo[key] = acc
        return acc

    form = minor(0, frozenset(range(e)))
    monomials = tuple(sorted(form.items(), key=lambda kv: kv[0], reverse=True))
    return NormFormPoly(module, monomials)


def check_solution(nu, beta: FieldElement, module: FullModule,
                   zeta_mode: str = "any_torsion"):
    """Test one coordinate vector: returns (is_solution, zeta or None)."""
    tower = module.tower
    if beta.is_zero or not is_algebraic_integer(beta):
        raise ValueError("beta must be a nonzero algebraic integer")
    nu = [v if isinstance(v, FieldElement) else tower.k_element([v]) for v in nu]
    if len(nu) != tower.e:
        raise ValueError("coordinate vector has the wrong length")
    if all(v.is_zero for v in nu):
        raise ValueError("zero vector is not a solution candidate")
    for v in nu:
        if not is_algebraic_integer(v):
            raise ValueError("coordinates must be algebraic integers in k")
    mu = tower.zero("l")
    for om, v in zip(module.omega_basis, nu):
        mu = mu + om * embed_k_in_l(v)
    zeta = relative_norm(mu) / beta
    if zeta_mode == "one":
        return (zeta == 1), (zeta if zeta == 1 else None)
    if is_torsion_unit(zeta) is None:
        return False, None
    return True, zeta


def enumerate_solutions(module: FullModule, beta: FieldElement, coeff_bound: int,
                        zeta_mode: str = "any_torsion") -> SolutionSet:
    """All solutions whose Z-basis coordinates are bounded by coeff_bound.

    Completeness is only relative to the box; the box is recorded in the
    result so callers can enlarge it.
    """
    tower = module.tower
    if beta.is_zero or not is_algebraic_integer(beta):
        raise ValueError("beta must be a nonzero algebraic integer")
    if coeff_bound < 1:
        raise ValueError("coeff_bound must be positive")
    n = module.rank
    if (2 * coeff_bound + 1) ** n > BOX_CAP:
        raise ValueError("search box too large")
    form = norm_form_poly(module)
    torsion = torsion_units(tower, "k")
    if zeta_mode == "one":
        targets = [(beta, tower.one("k"))]
    else:
        targets = [(t * beta, t) for t in torsion]
    solutions = []
    rng = range(-coeff_bound, coeff_bound + 1)
    for coords in itertools.product(rng, repeat=n):
        if not any(coords):
            continue
        nu = []
        for i in range(tower.e):
            c = tower.zero("k")
            for j, psi in enumerate(tower.psi_basis):
                c = c + coords[i * tower.f + j] * psi
            nu.append(c)
        value = form.evaluate(nu)
        for target, zeta in targets:
            if value == target:
                mu = module.element_from_coordinates(coords)
                solutions.append(Solution(tuple(coords), tuple(nu), mu, zeta))
                break
    return SolutionSet(beta, tuple(solutions), coeff_bound)


def _unit_exponents_of(quotient: FieldElement, system: RelativeUnitSystem):
    """Integer exponents m with quotient / prod eps^m torsion, or None."""
    from .module_order import _solve_least_squares

    s = len(system.epsilons)
    logs = list(archimedean_log_vector(quotient))
    if s == 0:
        m = ()
    else:
        u, residual = _solve_least_squares([list(r) for r in system.log_matrix], logs)
        if residual > 1e-6:
            return None
        m = tuple(round(x) for x in u)
    rest = quotient
    for eps, mj in zip(system.epsilons, m):
        rest = rest * eps ** (-mj)
    if is_torsion_unit(rest) is None:
        return None
    if not system.module.stabilized_by(rest):
        return None
    return m


def equivalent_solutions(a: FieldElement, b: FieldElement,
                         system: RelativeUnitSystem) -> bool:
    """True iff b/a is a torsion multiple of an exact relative-unit power."""
    return _unit_exponents_of(b / a, system) is not None


def partition_classes(solution_set: SolutionSet,
                      system: RelativeUnitSystem) -> SolutionSet:
    """Group solutions into equivalence classes and reduce a representative."""
    if not solution_set.solutions:
        raise ValueError("cannot partition an empty solution set")
    module = system.module
    classes = []       # list of (witness index, [member indices])
    for idx, sol in enumerate(solution_set.solutions):
        for entry in classes:
            witness = solution_set.solutions[entry[0]]
            if equivalent_solutions(witness.mu, sol.mu, system):
                entry[1].append(idx)
                break
        else:
            classes.append((idx, [idx]))
    out = []
    for witness_idx, members in classes:
        witness = solution_set.solutions[witness_idx]
        report = reduce_solution(witness.mu, solution_set.beta, module, system)
        out.append(SolutionClass(tuple(members), report))
    return SolutionSet(solution_set.beta, solution_set.solutions,
                       solution_set.search_box, tuple(out))
