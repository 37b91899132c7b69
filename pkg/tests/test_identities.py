from __future__ import annotations

import math
from fractions import Fraction as F

import pytest

from nkpoly.errors import ConstraintError, UnknownIdentityError
from nkpoly.families import ParamSet, fnkp_first, fnkp_second
from nkpoly.identities import (
    KINDS,
    Evaluation,
    IdentityDescriptor,
    Variant,
    check_identity,
    expand_grid,
    identity_ids,
    list_identities,
    lookup,
    run_grid,
    variant_search,
)
from nkpoly.identities import core
from nkpoly.quadrature import WeightDescriptor, gamma_moment_integral

HAND = ParamSet(p=5, q=0, upsilon=1, s=1)

# printed form fails; the named variant is the unique one that passes
CORRECTED = {
    "rel_ngenl": "t^(p-s-1)",
    "rel_ngenl_inv": "t^(p+s)",
    "genfun_1": "k=1,e=0",
    "genfun_2": "k=1,e=0,joint",
    "genfun_3": "k=1,e=0",
    "genfun_4": "k=1,e=1",
    "op_rep_shift": "multiply_first",
    "remark_laguerre00": "reciprocal_laguerre",
    "fourier_image_1": "both",
}


class TestCatalog:
    def test_size_and_kinds(self):
        descs = list_identities()
        assert len(descs) >= 40
        assert all(d.kind in KINDS for d in descs)
        assert len(set(identity_ids())) == len(descs)

    def test_lookup(self):
        assert lookup("fnkp_biorth").kind == "orthogonality"
        with pytest.raises(UnknownIdentityError):
            lookup("no_such_identity")

    def test_required_ids_present(self):
        ids = set(identity_ids())
        required = {f"rec_{i}" for i in range(1, 13)} | {f"genfun_{i}" for i in range(1, 5)}
        required |= {"pde_2", "pde_3", "pde_second_set", "rel_ngenl", "fnkp_biorth", "fourier_biorth"}
        assert required <= ids

    @pytest.mark.parametrize("identity_id", identity_ids())
    def test_grid_accepted_by_constraint(self, identity_id):
        d = lookup(identity_id)
        pts = expand_grid(d)
        assert pts, identity_id
        assert all(d.constraint(P) for P in pts)


class TestHandAnchors:
    def test_rec_1(self):
        assert check_identity("rec_1", HAND).status == "exact_pass"

    def test_rec_11(self):
        assert check_identity("rec_11", HAND).status == "exact_pass"

    def test_fnkp_biorth_diagonal(self):
        r = check_identity("fnkp_biorth", HAND.replace(n=1))
        assert r.status == "exact_pass"
        f, g = fnkp_first(1, 5, 0, 1), fnkp_second(1, 5, 0, 1)
        assert gamma_moment_integral(f * g, WeightDescriptor.product(5, 0)) == pytest.approx(3.0, rel=1e-15)

    def test_laplace_1d(self):
        r = check_identity("laplace_1d", HAND.replace(y=1.0, a=2.0))
        assert r.status == "exact_pass"

    def test_rel_ngenl_s0(self):
        r = check_identity("rel_ngenl", ParamSet(p=5, q=0, upsilon=1, s=0))
        assert r.status == "discrepancy_corrected"
        assert r.variant == "t^(p-s-1)"
        assert r.residual <= 1e-12 < r.printed_residual

    def test_constraint_violation(self):
        with pytest.raises(ConstraintError):
            check_identity("fnkp_biorth", ParamSet(p=5, s=2, n=0))


class TestFirstSetBiorthogonality:
    """The pairing matrix is lower triangular rather than diagonal."""

    @pytest.mark.parametrize("p", [F(9), F(25, 2)])
    @pytest.mark.parametrize("q", [F(0), F(3, 4)])
    @pytest.mark.parametrize("u", [1, 2, 3])
    def test_upper_triangle_and_diagonal_pass(self, p, q, u):
        for s in range(4):
            for n in range(s, 4):
                P = ParamSet(p=p, q=q, upsilon=u, s=s, n=n)
                assert check_identity("fnkp_biorth", P).status in ("exact_pass", "tol_pass"), P

    @pytest.mark.parametrize("p", [F(9), F(25, 2), F(7)])
    @pytest.mark.parametrize("q", [F(0), F(3, 4)])
    @pytest.mark.parametrize("u", [1, 3])
    def test_first_subdiagonal_value(self, p, q, u):
        # the pairing of N_1 with the constant second-set member is -Gamma(p-1), not 0
        v = gamma_moment_integral(fnkp_first(1, p, q, u) * fnkp_second(0, p, q, u), WeightDescriptor.product(p, q))
        assert v == pytest.approx(-math.gamma(float(p) - 1), rel=1e-13)
        r = check_identity("fnkp_biorth", ParamSet(p=p, q=q, upsilon=u, s=1, n=0))
        assert r.status == "fail"

    def test_triangular_moments(self):
        rep = run_grid({"identities": ["biorth_triangular"]})
        assert rep.ok()


class TestDiscrepancies:
    @pytest.mark.parametrize("identity_id,variant", sorted(CORRECTED.items()))
    def test_corrected_variant(self, identity_id, variant):
        rep = run_grid({"identities": [identity_id]})
        assert rep.ok()
        corrected = [r for r in rep.results if r.status == "discrepancy_corrected"]
        assert corrected
        assert {r.variant for r in corrected} == {variant}
        assert all(r.chain_consistent in (True, None) for r in corrected)
        assert [e["id"] for e in rep.discrepancies()] == [identity_id]

    @pytest.mark.parametrize("identity_id", ["genfun_1", "genfun_2", "genfun_3", "genfun_4", "rel_ngenl_inv"])
    def test_chain_prediction_agrees(self, identity_id):
        d = lookup(identity_id)
        assert d.predicted is not None and d.predicted() == CORRECTED[identity_id]
        r = check_identity(identity_id, expand_grid(d)[0])
        assert r.chain_consistent is True

    def test_passing_identity_skips_search(self, monkeypatch):
        calls = []
        monkeypatch.setattr(core, "variant_search", lambda *a: calls.append(a))
        assert check_identity("rec_1", HAND).status == "exact_pass"
        assert calls == []

    def test_variant_search_direct(self):
        assert variant_search("rel_ngenl", ParamSet(p=5, q=0, upsilon=1, s=1))[0] == "t^(p-s-1)"

    def test_second_image_as_printed(self):
        rep = run_grid({"identities": ["fourier_image_2"]})
        assert rep.summary["exact_pass"] + rep.summary["tol_pass"] == len(rep.results)


class TestFourier:
    def test_diagonal_needs_confirmed_variant(self):
        P = ParamSet(p1=6, p2=6, q1=1, q2=1, upsilon=1, s=1, n=1)
        r = check_identity("fourier_biorth", P)
        assert r.status == "discrepancy_corrected" and r.variant == "both"

    def test_upper_triangle(self):
        P = ParamSet(p1=6, p2=6, q1=1, q2=1, upsilon=2, s=0, n=2)
        assert check_identity("fourier_biorth", P).status in ("exact_pass", "tol_pass", "discrepancy_corrected")

    def test_weight_positive(self):
        rep = run_grid({"identities": ["fourier_weight_pos"]})
        assert rep.ok()


class TestRunGrid:
    def test_empty_suite(self):
        rep = run_grid({"identities": []})
        assert rep.results == [] and all(v == 0 for v in rep.summary.values())

    def test_grid_override(self):
        rep = run_grid({"identities": ["rec_1"], "grids": {"p": [F(11)], "upsilon": [2]}})
        assert rep.results and all(r.params["p"] == "11" and r.params["upsilon"] == 2 for r in rep.results)

    def test_parallel_matches_serial(self):
        suite = {"identities": ["rec_1", "laplace_1d", "rel_ngenl"]}
        a, b = run_grid(suite), run_grid(suite, jobs=2)
        assert [r.to_dict() for r in a.results] == [r.to_dict() for r in b.results]

    def test_tolerance_override(self):
        rep = run_grid({"identities": ["fnkp_biorth"], "grids": {"p": [F(9)], "q": [F(0)], "upsilon": [1]},
                        "tolerances": {"fnkp_biorth": 1e6}})
        assert rep.summary["fail"] == 0

    def test_infra_fail_is_distinct(self):
        def ev(P, v):
            return Evaluation(1.0, 1.0, oracle=(1.0, 1.1))

        desc = IdentityDescriptor("zz_broken_oracle", "transform", "scalar", "oracles disagree", ev,
                                  lambda: [ParamSet()])
        core._REGISTRY[desc.id] = desc
        try:
            r = check_identity(desc.id, ParamSet())
        finally:
            del core._REGISTRY[desc.id]
        assert r.status == "infra_fail"

    def test_ambiguous_variants_rejected(self):
        def ev(P, v):
            return Evaluation(1.0 if v is None else 2.0, 2.0)

        desc = IdentityDescriptor("zz_ambiguous", "transform", "scalar", "two variants pass", ev,
                                  lambda: [ParamSet()], variants=(Variant("a", "a"), Variant("b", "b")))
        core._REGISTRY[desc.id] = desc
        try:
            r = check_identity(desc.id, ParamSet())
        finally:
            del core._REGISTRY[desc.id]
        assert r.status == "fail"

    def test_report_schema(self):
        rep = run_grid({"name": "x", "identities": ["rel_ngenl"], "grids": {"s": [0]}})
        d = rep.to_dict()
        assert set(d) >= {"suite", "results", "summary"}
        assert set(d["results"][0]) >= {"id", "params", "status", "residual", "variant"}
        assert set(d["summary"]) == {"exact_pass", "tol_pass", "discrepancy_corrected", "fail", "infra_fail"}
        assert [e["id"] for e in d["discrepancies"]] == ["rel_ngenl"]
