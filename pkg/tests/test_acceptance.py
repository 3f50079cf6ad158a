"""Acceptance suite: one test per acceptance criterion, stated tolerances.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS/FAIL line
per criterion.  The heavy radial configurations are shared session fixtures;
the whole suite takes a few minutes.

Criteria 1 and 2 (EOC windows on the radial benchmark) FAIL by measurement
and are left red deliberately: the harness measures errors against the
interpolated exact solution, and for degree-2 elements that discrete error
is superclose (EOC ~ 3-4.7 for x, n, u instead of the generic 2), while the
velocity error sits on its BDF2 transient floor at the pinned step sizes.
The failure messages carry the measured tables; the README discusses it.
"""

import numpy as np
import pytest

from gesfem.config import ExperimentConfig
from gesfem.diagnostics import mean_radius
from gesfem.runner import converge, run

SQRT02 = np.sqrt(0.2)
R13 = 13.0**-0.5

_LINES = []


def report(num, passed, detail):
    line = f"ACCEPTANCE {num}: {'PASS' if passed else 'FAIL'} — {detail}"
    _LINES.append(line)
    print(line)
    return passed


@pytest.fixture(scope="session", autouse=True)
def summary():
    yield
    print("\n" + "\n".join(_LINES))


def radial_dict(**overrides):
    base = dict(
        surface={"kind": "sphere", "params": {"radius": 1.0}},
        mesh_level=3,
        degree=2,
        scheme="P1",
        model={"name": "gradient_flow", "params": {"alpha": 2.0, "D0": 1.0}},
        u0={"preset": "constant", "params": {"value": 1.0}},
        bdf_order=2,
        tau=1e-3,
        t_end=1.0,
        output_every=20,
        output_dir="",
        mode="run",
    )
    base.update(overrides)
    return base


@pytest.fixture(scope="session")
def space_ladder():
    """Criterion 1 configuration: levels {1,2,3}, tau = 5e-4, T = 1."""
    cfg = ExperimentConfig.from_dict(radial_dict(
        mode="converge-space", levels=[1, 2, 3], tau=5e-4, mesh_level=3,
    ))
    return converge(cfg, quiet=True)


@pytest.fixture(scope="session")
def time_ladder():
    """Criterion 2 configuration: level 3, tau in {0.02, 0.01, 0.005, 0.0025}."""
    cfg = ExperimentConfig.from_dict(radial_dict(
        mode="converge-time", taus=[0.02, 0.01, 0.005, 0.0025],
        output_every=4,
    ))
    return converge(cfg, quiet=True)


@pytest.fixture(scope="session")
def radial_alpha2_run():
    """Criterion 3/5/6 radial run: alpha = 2, level 3, tau = 1e-3, T = 1."""
    return run(ExperimentConfig.from_dict(radial_dict()), quiet=True)


@pytest.fixture(scope="session")
def alpha0_runs():
    """Criterion 3/9 classical flow: alpha = 0 to t = 0.2, both schemes."""
    results = {}
    for scheme in ("P1", "P2"):
        cfg = ExperimentConfig.from_dict(radial_dict(
            scheme=scheme, t_end=0.2,
            model={"name": "gradient_flow", "params": {"alpha": 0.0, "D0": 1.0}},
        ))
        results[scheme] = run(cfg, quiet=True)
    return results


@pytest.fixture(scope="session")
def mass_ladder():
    """Criterion 4: final-time mass drift under tau halving (level 2)."""
    taus = [4e-3, 2e-3, 1e-3]
    drifts = []
    for tau in taus:
        res = run(ExperimentConfig.from_dict(radial_dict(
            mesh_level=2, tau=tau, output_every=50,
        )), quiet=True)
        masses = [row.mass for row in res.rows]
        drifts.append(abs(masses[-1] / masses[0] - 1.0))
    return taus, drifts


@pytest.fixture(scope="session")
def ellipsoid_run():
    """Criterion 5/6/7: elongated ellipsoid, tip-concentrated u0."""
    cfg = ExperimentConfig.from_dict(dict(
        surface={"kind": "ellipsoid", "params": {"a": 2.0, "b": 1.0, "c": 1.0}},
        mesh_level=2, degree=2, scheme="P1",
        model={"name": "gradient_flow", "params": {"alpha": 2.0, "D0": 1.0}},
        u0={"preset": "tips",
            "params": {"peak": 5.0, "valley": 1.0, "half_length": 2.0}},
        bdf_order=2, tau=1e-3, t_end=0.5, output_every=10,
        output_dir="", mode="run", bootstrap="substep",
    ))
    return run(cfg, quiet=True)


@pytest.fixture(scope="session")
def dumbbell_run():
    """Criterion 5/6: dumbbell with slow diffusion across the neck."""
    cfg = ExperimentConfig.from_dict(dict(
        surface={"kind": "dumbbell",
                 "params": {"length": 2.0, "r_neck": 0.4, "r_bulb": 1.0}},
        mesh_level=2, degree=2, scheme="P1",
        model={"name": "gradient_flow", "params": {"alpha": 1.0, "D0": 0.1}},
        u0={"preset": "neck_split",
            "params": {"high": 0.8, "low": 0.4, "center": 0.0, "band": 0.5}},
        bdf_order=2, tau=2.5e-4, t_end=0.02, output_every=10,
        output_dir="", mode="run", bootstrap="substep",
    ))
    return run(cfg, quiet=True)


@pytest.fixture(scope="session")
def cup_run():
    """Criterion 6: self-intersecting cup flow, g(u) = 5 u^-4."""
    cfg = ExperimentConfig.from_dict(dict(
        surface={"kind": "cup", "params": {}},
        mesh_level=2, degree=2, scheme="P1",
        model={"name": "gradient_flow", "params": {"alpha": 4.0, "D0": 1.0}},
        u0={"preset": "cup_bottom",
            "params": {"base": 10.0, "low": 1.0, "z_low": -0.8, "band": 0.35}},
        bdf_order=2, tau=1e-3, t_end=0.1, output_every=10,
        output_dir="", mode="run", bootstrap="substep",
    ))
    return run(cfg, quiet=True)


def _eoc_table(result):
    lines = []
    for var in ("x", "v", "n", "V", "u"):
        errs = " ".join(f"{e:.3e}" for e in result.errors[var])
        orders = " ".join(f"{o:.2f}" for o in result.orders[var])
        lines.append(f"    {var}: errors [{errs}] EOC [{orders}]")
    return "\n".join(lines)


def test_criterion_1_spatial_convergence(space_ladder):
    """Per-variable spatial EOC in [1.7, 2.6] between successive levels."""
    window = (1.7, 2.6)
    bad = {}
    for var in ("x", "v", "n", "V", "u"):
        orders = space_ladder.orders[var]
        if not all(window[0] <= o <= window[1] for o in orders):
            bad[var] = [round(o, 2) for o in orders]
    ok = not bad
    report(1, ok, f"spatial EOC window {window}; out-of-window: {bad or 'none'}")
    assert ok, (
        "spatial EOCs outside the stated window (superclose interpolation "
        "errors / BDF2 velocity floor; see the module docstring and README):\n"
        + _eoc_table(space_ladder)
    )


def test_criterion_2_temporal_convergence(space_ladder, time_ladder):
    """EOC in [1.7, 2.3] on the two finest pairs where the spatial floor
    is sub-dominant (floor taken from the criterion-1 level-3 errors)."""
    window = (1.7, 2.3)
    bad, skipped = {}, []
    for var in ("x", "v", "n", "V", "u"):
        floor = space_ladder.errors[var][-1]
        if time_ladder.errors[var][-1] < 2.0 * floor:
            skipped.append(var)  # spatial error dominant; premise false
            continue
        finest = time_ladder.orders[var][-2:]
        if not all(window[0] <= o <= window[1] for o in finest):
            bad[var] = [round(o, 2) for o in finest]
    ok = not bad
    report(2, ok,
           f"temporal EOC window {window} on two finest pairs; "
           f"out-of-window: {bad or 'none'}; floor-dominated: {skipped}")
    assert ok, (
        "temporal EOCs outside the stated window (stiff t=0 transient is "
        "preasymptotic on the pinned ladder; see the module docstring):\n"
        + _eoc_table(time_ladder)
    )


def test_criterion_3_exact_radius_tracking(radial_alpha2_run, alpha0_runs):
    r_a2 = mean_radius(radial_alpha2_run.final_state)
    rel_a2 = abs(r_a2 - R13) / R13
    r_a0 = mean_radius(alpha0_runs["P1"].final_state)
    rel_a0 = abs(r_a0 - SQRT02) / SQRT02
    ok = rel_a2 <= 0.01 and rel_a0 <= 0.01
    report(3, ok,
           f"alpha=2 radius {r_a2:.6f} vs 13^-1/2 (rel {rel_a2:.2e}); "
           f"alpha=0 radius {r_a0:.6f} vs sqrt(0.2) (rel {rel_a0:.2e})")
    assert rel_a2 <= 0.01
    assert rel_a0 <= 0.01


def test_criterion_3b_normal_length_drift(radial_alpha2_run):
    """Stepper invariant on the finest radial run: | |n| - 1 | < 0.1."""
    drift = max(max(abs(r.nu_min - 1.0), abs(r.nu_max - 1.0))
                for r in radial_alpha2_run.rows)
    ok = drift < 0.1
    report("3b", ok, f"normal-length drift {drift:.3e} < 0.1 (no renormalising)")
    assert ok


def test_criterion_4_mass_conservation(mass_ladder):
    taus, drifts = mass_ladder
    orders = [np.log(drifts[i] / drifts[i + 1]) / np.log(taus[i] / taus[i + 1])
              for i in range(len(taus) - 1)]
    ok = all(o >= 2.0 - 0.05 for o in orders) and drifts[-1] <= 1e-4
    report(4, ok,
           f"final-time mass drift {['%.2e' % d for d in drifts]} at "
           f"tau {taus}; orders {['%.2f' % o for o in orders]}; "
           f"drift(tau=1e-3) = {drifts[-1]:.2e} <= 1e-4")
    assert drifts[-1] <= 1e-4
    assert all(o >= 2.0 - 0.05 for o in orders), orders


def test_criterion_5_weak_maximum_principle(radial_alpha2_run, ellipsoid_run,
                                            dumbbell_run):
    mins = {
        "radial": min(r.u_min for r in radial_alpha2_run.rows),
        "ellipsoid": min(r.u_min for r in ellipsoid_run.rows),
        "dumbbell": min(r.u_min for r in dumbbell_run.rows),
    }
    ok = all(v >= 0.0 for v in mins.values())
    report(5, ok, "min u over runs: "
           + ", ".join(f"{k} {v:.4g}" for k, v in mins.items()))
    assert ok, mins


def _energy_nonincreasing(rows):
    energy = np.array([r.energy for r in rows])
    return bool((np.diff(energy) <= 1e-10 * np.abs(energy[:-1])).all())


def test_criterion_6_energy_decay(radial_alpha2_run, alpha0_runs,
                                  ellipsoid_run, dumbbell_run, cup_run):
    checks = {
        "radial_a2": _energy_nonincreasing(radial_alpha2_run.rows),
        "radial_a0_P1": _energy_nonincreasing(alpha0_runs["P1"].rows),
        "radial_a0_P2": _energy_nonincreasing(alpha0_runs["P2"].rows),
        "ellipsoid": _energy_nonincreasing(ellipsoid_run.rows),
        "dumbbell": _energy_nonincreasing(dumbbell_run.rows),
        "cup": _energy_nonincreasing(cup_run.rows),
    }
    ok = all(checks.values())
    report(6, ok, f"energy non-increasing (1e-10 rel roundoff): {checks}")
    assert ok, checks


def test_criterion_7_mean_convexity(ellipsoid_run):
    h_min = min(r.H_min for r in ellipsoid_run.rows)
    ok = h_min >= 0.0
    report(7, ok,
           f"ellipsoid H-proxy minimum {h_min:.4g} >= 0 over the horizon; "
           "loss of convexity recorded qualitatively (monitor/VTK), "
           "not asserted")
    assert ok


def test_criterion_8_assembly_oracles():
    from gesfem.assembly import assemble_mass, assemble_stiffness
    from gesfem.mesh import SurfaceMesh
    from gesfem.reference import quadrature, reference_monomial_integral
    from gesfem.stepper import bdf_coefficients

    nodes = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    tri = SurfaceMesh(nodes, np.array([[0, 1, 2]]), 1, validate=False)
    mass_err = np.abs(
        assemble_mass(tri).toarray()
        - np.array([[2.0, 1, 1], [1, 2, 1], [1, 1, 2]]) / 24.0
    ).max()
    stiff_err = np.abs(
        assemble_stiffness(tri).toarray()
        - np.array([[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]])
    ).max()

    quad_err = 0.0
    for exactness in (2, 4, 6):
        rule = quadrature(exactness)
        x, y = rule.points[:, 0], rule.points[:, 1]
        for p in range(exactness + 1):
            for q in range(exactness + 1 - p):
                approx = (rule.weights * x**p * y**q).sum()
                quad_err = max(
                    quad_err, abs(approx - reference_monomial_integral(p, q))
                )

    expected = {
        1: ([1.0, -1.0], [1.0]),
        2: ([1.5, -2.0, 0.5], [2.0, -1.0]),
        3: ([11.0 / 6.0, -3.0, 1.5, -1.0 / 3.0], [3.0, -3.0, 1.0]),
        4: ([25.0 / 12.0, -4.0, 3.0, -4.0 / 3.0, 0.25], [4.0, -6.0, 4.0, -1.0]),
        5: ([137.0 / 60.0, -5.0, 5.0, -10.0 / 3.0, 1.25, -0.2],
            [5.0, -10.0, 10.0, -5.0, 1.0]),
    }
    bdf_exact = all(
        bdf_coefficients(q)[0].tolist() == d and
        bdf_coefficients(q)[1].tolist() == g
        for q, (d, g) in expected.items()
    )

    ok = mass_err < 1e-13 and stiff_err < 1e-13 and quad_err < 1e-13 and bdf_exact
    report(8, ok,
           f"element mass err {mass_err:.1e}, stiffness err {stiff_err:.1e}, "
           f"quadrature err {quad_err:.1e} (all < 1e-13); BDF q=1..5 exact: "
           f"{bdf_exact}")
    assert ok


def test_criterion_9_scheme_cross_check(alpha0_runs):
    r_p1 = mean_radius(alpha0_runs["P1"].final_state)
    r_p2 = mean_radius(alpha0_runs["P2"].final_state)
    tol = 0.02 * SQRT02  # sum of the two 1% tolerances of criterion 3
    ok = abs(r_p1 - r_p2) <= tol
    report(9, ok,
           f"alpha=0 at t=0.2: P1 {r_p1:.6f} vs P2 {r_p2:.6f}, "
           f"|diff| {abs(r_p1 - r_p2):.2e} <= {tol:.2e}")
    assert ok


def test_criterion_10_exclusions_documented():
    # absolute reference error magnitudes depend on external, irreproducible
    # mesh generators and are deliberately not asserted; the property suite
    # above (rates, conservation, positivity, decay, cross-checks) stands in.
    report(10, True, "absolute reference error magnitudes excluded by design; "
           "property suites cover the behaviour")
    assert True
