import math

import numpy as np
import pytest
import sympy as sp

from pgfad.lns import LogReal
from pgfad.nested import nested_diff, record_inner_orders
from pgfad.series import PerturbationConfusionError, exp, lift_var

from conftest import assert_series_close, scalar_float


class TestBasics:
    def test_square_first_derivative(self):
        out = nested_diff(lambda v, pi: v * v, lift_var(3.0, 2), 1)
        assert_series_close(out, [6.0, 2.0, 0.0], rtol=1e-12)

    def test_scalar_argument_returns_scalar(self):
        v = nested_diff(lambda u, pi: u * u * u, 2.0, 2)
        assert v == pytest.approx(12.0)
        w = nested_diff(lambda u, pi: u * u * u, LogReal.from_real(2.0), 2)
        assert w.to_real() == pytest.approx(12.0)

    def test_order_zero_matches_direct_evaluation(self):
        u = exp(lift_var(0.4, 5))

        def g(v, pi):
            return exp(v) * v

        direct = g(u, ())
        via_node = nested_diff(g, u, 0)
        for a, b in zip(direct.coeffs(), via_node.coeffs()):
            assert scalar_float(b) == pytest.approx(scalar_float(a), rel=1e-11)

    def test_two_level_nesting(self):
        # d/du [ d/dw w^3 at w = u^2 ] = d/du 3u^4 = 12u^3; at u = 2: 96, 144
        def inner(w, pi):
            return w * w * w

        def outer(u, pi):
            return nested_diff(inner, u * u, 1, pi)

        out = nested_diff(outer, lift_var(2.0, 1), 1)
        assert_series_close(out, [96.0, 144.0], rtol=1e-11)

    def test_constant_inner_function(self):
        out = nested_diff(lambda v, pi: 5.0, lift_var(1.0, 2), 0)
        assert_series_close(out, [5.0, 0.0, 0.0])

    def test_param_with_outer_tag_rejected(self):
        u = lift_var(1.0, 2)
        with pytest.raises(PerturbationConfusionError):
            nested_diff(lambda v, pi: v, u, 1, (u + 1.0,))


class TestOrderBudget:
    def test_inner_order_is_exactly_q_plus_p(self):
        with record_inner_orders() as orders:
            nested_diff(lambda v, pi: v * v, lift_var(1.0, 3), 2)
        assert orders == [("fwd", 2, 3, 5)]

    def test_recursive_orders_accumulate(self):
        def inner(w, pi):
            return w * w

        def outer(u, pi):
            return nested_diff(inner, u * u, 3, pi)

        with record_inner_orders() as orders:
            nested_diff(outer, lift_var(1.0, 2), 1)
        assert orders[0] == ("fwd", 1, 2, 3)
        assert orders[1] == ("fwd", 3, 3, 6)


def random_poly(rng, degree):
    return [round(float(c), 3) for c in rng.uniform(-1.5, 1.5, size=degree + 1)]


def poly_eval(coeffs, v):
    out = None
    for c in reversed(coeffs):
        out = c if out is None else out * v + c
    return out


def build_chain(rng, depth):
    """A random nested-derivative chain and its sympy mirror.

    Level 0 is a plain polynomial; level i multiplies a polynomial by the
    q_i-th derivative of the previous level taken at a polynomial argument.
    """
    w = sp.Symbol("w")
    base = random_poly(rng, 3)
    sym = sp.Poly(list(reversed(base)), w).as_expr()

    def f0(v, pi):
        return poly_eval(base, v)

    chain = f0
    for _ in range(depth):
        q = int(rng.integers(1, 3))
        arg = random_poly(rng, 2)
        mul = random_poly(rng, 1)
        prev = chain
        sym_d = sp.diff(sym, w, q).subs(w, sp.Poly(list(reversed(arg)), w).as_expr())
        sym = sp.Poly(list(reversed(mul)), w).as_expr() * sym_d

        def level(v, pi, prev=prev, q=q, arg=arg, mul=mul):
            return poly_eval(mul, v) * nested_diff(prev, poly_eval(arg, v), q, pi)

        chain = level
    return chain, sp.lambdify(w, sym), sp.lambdify(w, sp.diff(sym, w))


class TestSymbolicOracle:
    @pytest.mark.parametrize("depth", [1, 2, 3, 4])
    def test_matches_sympy(self, depth):
        rng = np.random.default_rng(900 + depth)
        for _ in range(4):
            chain, val_fn, dval_fn = build_chain(rng, depth)
            x0 = float(rng.uniform(0.4, 0.9))
            out = nested_diff(chain, lift_var(LogReal.from_real(x0), 1), 0)
            got_v = scalar_float(out.coeff(0))
            got_d = scalar_float(out.coeff(1))
            ref_v, ref_d = float(val_fn(x0)), float(dval_fn(x0))
            assert got_v == pytest.approx(ref_v, rel=1e-9, abs=1e-9)
            assert got_d == pytest.approx(ref_d, rel=1e-9, abs=1e-9)
