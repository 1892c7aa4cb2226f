import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from osmtcr.analysis import (
    PhysicalParams,
    RawPair,
    ScaledRobin,
    StandardRobin,
    frequency_band,
    max_rho_on_band,
)
from osmtcr.optimizer import optimal_p_closed_form
from osmtcr.schwarz import (
    IterationRecord,
    IterationTrace,
    OsmConfig,
    UnsupportedSpecError,
    direct_interface_data,
    observed_contraction,
    pseudo_energy,
    run_osm,
    two_layer_problems,
    update_interface_data,
)
from osmtcr.subdomain import SubdomainProblem, layered_domains

TABLE1 = PhysicalParams(2.0, 0.01, r_c=0.01)


def _record(e1, e2, q1, q2, n=1):
    return IterationRecord(n, 0.0, 0.0, 0.0, math.nan, np.asarray(e1), np.asarray(e2),
                           np.asarray(q1), np.asarray(q2))


def _trace(errors, converged=False):
    cfg = OsmConfig(TABLE1, StandardRobin(1.0))
    recs = [IterationRecord(i + 1, e, e, math.inf, math.nan, None, None, None, None)
            for i, e in enumerate(errors)]
    return IterationTrace(cfg, recs, converged, len(recs))


def test_config_validation():
    with pytest.raises(ValueError):
        OsmConfig(TABLE1, StandardRobin(1.0), tol=0.0)
    with pytest.raises(ValueError):
        OsmConfig(TABLE1, StandardRobin(1.0), max_iter=0)
    with pytest.raises(ValueError):
        OsmConfig(TABLE1, StandardRobin(1.0), update_mode="gauss_seidel")
    with pytest.raises(ValueError):
        OsmConfig(TABLE1, StandardRobin(1.0), criterion="relative")


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 100), st.floats(0.1, 100), st.floats(0, 1), st.integers(0, 1000))
def test_derivative_free_update_equals_direct(t12, t21, rc, seed):
    # with fluxes from the Robin identity q = g - tau T, both updates coincide
    rng = np.random.default_rng(seed)
    t1, t2, g1, g2 = rng.normal(size=(4, 7))
    a = update_interface_data(t12, t21, rc, t1, t2, g1, g2)
    b = direct_interface_data(t12, t21, rc, t1, t2, g1 - t12 * t1, g2 - t21 * t2)
    assert np.allclose(a[0], b[0], rtol=1e-12, atol=1e-9)
    assert np.allclose(a[1], b[1], rtol=1e-12, atol=1e-9)


def test_update_rejects_mismatched_lengths():
    with pytest.raises(ValueError):
        update_interface_data(1, 1, 0, np.zeros(3), np.zeros(4), np.zeros(3), np.zeros(3))
    with pytest.raises(ValueError):
        direct_interface_data(1, 1, 0, np.zeros(3), np.zeros(3), np.zeros(2), np.zeros(3))


def test_zero_initial_data_converges_immediately():
    h = 1 / 16
    tr = run_osm(two_layer_problems(TABLE1, h), OsmConfig(TABLE1, StandardRobin(10.0)),
                 initial=(np.zeros(15), np.zeros(15)))
    assert tr.converged and tr.iterations_used == 1
    assert observed_contraction(tr) == 0.0


def test_pseudo_energy_examples():
    n = 99
    ds = 1 / (n + 1)
    zero = _record(np.zeros(n), np.zeros(n), np.zeros(n), np.zeros(n))
    assert pseudo_energy(zero, 2.0, ds) == 0.0
    one = _record(np.ones(n + 2), np.zeros(n + 2), np.zeros(n + 2), np.zeros(n + 2))
    assert pseudo_energy(one, 2.0, ds, pad=False) == pytest.approx(4.0)
    assert pseudo_energy(one, (2.0, 2.0), ds, pad=False) == pytest.approx(4.0)
    with pytest.raises(UnsupportedSpecError):
        pseudo_energy(one, (2.0, 3.0), ds)


def test_observed_contraction_examples():
    r = 0.3
    assert observed_contraction(_trace([r ** (i / 2) for i in range(12)])) == pytest.approx(r)
    assert observed_contraction(_trace([1.0, 1e-9], converged=True)) == 0.0
    with pytest.raises(ValueError):
        observed_contraction(_trace([1.0, 0.5, 0.2]))


def test_table1_scaled_run_and_contraction():
    h = 1 / 64
    band = frequency_band(1.0, h)
    spec = ScaledRobin(optimal_p_closed_form(TABLE1, band, h).p_star)
    tr = run_osm(two_layer_problems(TABLE1, h), OsmConfig(TABLE1, spec))
    assert tr.converged and tr.errors[-1] < 1e-6
    assert tr.iterations_used <= 500
    assert np.all(np.isnan(tr.energies))
    assert observed_contraction(tr) <= max_rho_on_band(spec, TABLE1, band)[1] + 0.1


def test_standard_robin_energy_decreases():
    h = 1 / 32
    p = 0.5 / TABLE1.r_c
    tr = run_osm(two_layer_problems(TABLE1, h), OsmConfig(TABLE1, StandardRobin(p), seed=3))
    e = tr.energies
    assert tr.converged
    assert np.all(e[1:] <= e[:-1] * (1 + 1e-10))


@pytest.mark.parametrize("frac", [0.1, 0.5, 1.0, 1.2])
def test_standard_robin_converges_below_two_over_rc(frac):
    h = 1 / 32
    cfg = OsmConfig(TABLE1, StandardRobin(frac / TABLE1.r_c))
    assert run_osm(two_layer_problems(TABLE1, h), cfg).converged


@pytest.mark.parametrize("frac", [1.5, 1.9])
def test_standard_robin_near_bound_still_contracts(frac):
    # max rho tends to 1 as p -> 2/Rc, so only the decay itself is checked
    h = 1 / 32
    spec = StandardRobin(frac / TABLE1.r_c)
    tr = run_osm(two_layer_problems(TABLE1, h), OsmConfig(TABLE1, spec, max_iter=200))
    e = tr.errors
    assert np.all(e[3:] < e[1:-2])
    assert observed_contraction(tr) < 1.0


def test_scaled_robin_converges_for_random_p():
    h = 1 / 32
    band = frequency_band(1.0, h)
    rng = np.random.default_rng(7)
    for p in np.exp(rng.uniform(np.log(band.k_min), np.log(band.k_max), 5)):
        assert run_osm(two_layer_problems(TABLE1, h), OsmConfig(TABLE1, ScaledRobin(p))).converged


def test_large_resistance_contraction():
    h = 1 / 64
    prm = TABLE1.replace(r_c=1e3)
    band = frequency_band(1.0, h)
    spec = ScaledRobin(optimal_p_closed_form(prm, band, h).p_star)
    tr = run_osm(two_layer_problems(prm, h), OsmConfig(prm, spec))
    assert tr.converged and tr.iterations_used <= 4
    e = tr.errors
    assert e[2] / e[0] < 1e-5


@pytest.mark.parametrize("mode", ["derivative_free", "direct"])
def test_piecewise_affine_exact_solution(mode):
    # T1 = A + B x, T2 = C + D x with kappa1 B = kappa2 D and T1(0) - T2(0) = -Rc kappa2 D
    prm = PhysicalParams(2.0, 0.5, r_c=0.3)
    B = 1.0
    D = prm.kappa1 * B / prm.kappa2
    A = 1.0
    C = A + prm.r_c * prm.kappa2 * D
    h = 1 / 16
    d1, d2 = layered_domains(h)
    probs = (SubdomainProblem(d1, prm.kappa1, 0.0, 1.0, lambda X, Y: A + B * X),
             SubdomainProblem(d2, prm.kappa2, 0.0, 1.0, lambda X, Y: C + D * X))
    band = frequency_band(1.0, h)
    spec = ScaledRobin(optimal_p_closed_form(prm, band, h).p_star)
    cfg = OsmConfig(prm, spec, tol=1e-11, criterion="difference", update_mode=mode)
    tr = run_osm(probs, cfg, keep_fields=True)
    assert tr.converged
    f1, f2 = tr.fields
    X1, _ = np.meshgrid(d1.x, d1.y)
    X2, _ = np.meshgrid(d2.x, d2.y)
    assert np.max(np.abs(f1.values - (A + B * X1))) < 1e-8
    assert np.max(np.abs(f2.values - (C + D * X2))) < 1e-8


def test_raw_pair_runs_and_exports(tmp_path):
    h = 1 / 16
    tau12, tau21 = 3.0, 3.0
    tr = run_osm(two_layer_problems(TABLE1, h), OsmConfig(TABLE1, RawPair(tau12, tau21)))
    assert np.all(np.isfinite(tr.energies))
    tr.to_csv(tmp_path / "t.csv")
    tr.to_json(tmp_path / "t.json")
    head = (tmp_path / "t.csv").read_text().splitlines()[0]
    assert head == "n,err1_inf,err2_inf,pseudo_energy"
    s = json.loads((tmp_path / "t.json").read_text())
    assert s["config"]["transmission"] == {"kind": "raw_pair", "tau12": 3.0, "tau21": 3.0}
    assert s["iterations_used"] == tr.iterations_used


def test_runs_are_deterministic():
    h = 1 / 16
    cfg = OsmConfig(TABLE1, StandardRobin(20.0), seed=11)
    a = run_osm(two_layer_problems(TABLE1, h), cfg)
    b = run_osm(two_layer_problems(TABLE1, h), cfg)
    assert np.array_equal(a.errors, b.errors)


def test_mismatched_interfaces_rejected():
    d1, _ = layered_domains(1 / 8)
    _, d2 = layered_domains(1 / 16)
    probs = (SubdomainProblem(d1, 1.0), SubdomainProblem(d2, 1.0))
    with pytest.raises(ValueError):
        run_osm(probs, OsmConfig(TABLE1, StandardRobin(1.0)))
