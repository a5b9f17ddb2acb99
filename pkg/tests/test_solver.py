"""Tests for the spectral transmission solver.

The mode projections and norms are cross-checked against an independent
single-layer quadrature route: a periodic log-singular rule (trigonometric
weights for the ln(4 sin^2) factor plus trapezoid for the smooth remainder)
evaluates the S-pairing directly from curve samples, never touching the
closed-form Gram matrices.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from calr_lab import (
    ChargePair,
    Coefficients,
    ConfocalGeometry,
    Dipole,
    EllipticPoint,
    OverflowGuard,
    ShellConfig,
    TruncationWarning,
    adaptive_n_max,
    boundary_forcing,
    calr_classify,
    critical_radius,
    dissipated_power_direct,
    dissipated_power_spectral,
    eval_gradient_shell,
    eval_potential,
    metric_factor,
    mode_projections,
    mode_table,
    newtonian_coefficients,
    newtonian_gradient,
    solve_densities,
    sweep,
    z_param,
)
from calr_lab.solver import BoundaryForcing, ModeProjection, SweepRecord

TWO_PI = 2.0 * math.pi

THIN = ConfocalGeometry(1.0, 0.5, 0.8)
THICK = ConfocalGeometry(1.0, 0.2, 1.0)
THIN_REGIME = critical_radius(THIN.rho_i, THIN.rho_e)
THICK_REGIME = critical_radius(THICK.rho_i, THICK.rho_e)
PROBES_THIN = [EllipticPoint(1.2, 0.6), EllipticPoint(1.2, 2.8)]


# ---------------------------------------------------------------------------
# Independent S-pairing quadrature oracle.


def _log_rule(m):
    """Quadrature weights R[i, j] with sum_j R[i, j] f(s_j) approximating
    the periodic integral of ln(4 sin^2((t_i - s)/2)) f(s)."""
    half = m // 2
    d = TWO_PI * np.arange(m) / m
    k = np.arange(1, half)
    r = -(2.0 * TWO_PI / m) * (np.cos(np.outer(d, k)) @ (1.0 / k))
    r -= (TWO_PI / (half * m)) * np.cos(half * d)
    idx = (np.arange(m)[:, None] - np.arange(m)[None, :]) % m
    return r[idx]


def _curve(g, rho0, m):
    om = TWO_PI * np.arange(m) / m
    ch, sh = math.cosh(rho0), math.sinh(rho0)
    x = np.column_stack([g.R * np.cos(om) * ch, g.R * np.sin(om) * sh])
    xi = np.asarray(metric_factor(g.R, rho0, om))
    return om, x, xi


def _single_layer_same(g, rho0, dens_vals, m):
    """S[phi] on the carrying curve, splitting off the log singularity."""
    om, x, xi = _curve(g, rho0, m)
    fw = dens_vals * xi
    d1 = x[:, 0:1] - x[None, :, 0]
    d2 = x[:, 1:2] - x[None, :, 1]
    r2 = d1 * d1 + d2 * d2
    sin2 = 4.0 * np.sin((om[:, None] - om[None, :]) / 2.0) ** 2
    np.fill_diagonal(r2, 1.0)
    np.fill_diagonal(sin2, 1.0)
    smooth = 0.5 * np.log(r2 / sin2)
    np.fill_diagonal(smooth, np.log(xi))
    return (_log_rule(m) @ fw / 2.0 + (TWO_PI / m) * (smooth @ fw)) / TWO_PI


def _single_layer_cross(g, rho_src, dens_vals, m, targets):
    _, x, xi = _curve(g, rho_src, m)
    fw = dens_vals * xi
    d1 = targets[:, 0:1] - x[None, :, 0]
    d2 = targets[:, 1:2] - x[None, :, 1]
    return (TWO_PI / m) * ((0.5 * np.log(d1 * d1 + d2 * d2)) @ fw) / TWO_PI


def _s_pairing(g, u_i, u_e, v_i, v_e, m):
    """-<u, S v> accumulated over both interfaces (density samples in omega)."""
    _, xi_pts, xii = _curve(g, g.rho_i, m)
    _, xe_pts, xie = _curve(g, g.rho_e, m)
    s_on_i = (_single_layer_same(g, g.rho_i, v_i, m)
              + _single_layer_cross(g, g.rho_e, v_e, m, xi_pts))
    s_on_e = (_single_layer_same(g, g.rho_e, v_e, m)
              + _single_layer_cross(g, g.rho_i, v_i, m, xe_pts))
    w_i = xii * (TWO_PI / m)
    w_e = xie * (TWO_PI / m)
    return -(np.sum(u_i * s_on_i * w_i) + np.sum(u_e * s_on_e * w_e))


def test_log_rule_against_harmonics():
    # Exact: integral of ln(4 sin^2((t-s)/2)) cos(ks) ds = -(2 pi / k) cos(kt).
    m = 128
    om = TWO_PI * np.arange(m) / m
    rule = _log_rule(m)
    for k in (1, 3, 10):
        got = rule @ np.cos(k * om)
        want = -(TWO_PI / k) * np.cos(k * om)
        assert np.max(np.abs(got - want)) < 1e-12


def test_mode_norms_against_quadrature():
    """The closed-form mode norms match the independent S-pairing
    quadrature to 1e-8 for n up to 10."""
    m = 256
    om = TWO_PI * np.arange(m) / m
    xii = np.asarray(metric_factor(1.0, THIN.rho_i, om))
    xie = np.asarray(metric_factor(1.0, THIN.rho_e, om))
    table = mode_table(THIN, 10)
    for n in range(1, 11):
        row = table.row(n)
        families = (
            ((row.a1, row.b), np.cos(n * om), row.norm_1p),
            ((row.b, row.a2), np.sin(n * om), row.norm_1m),
            ((row.a2, row.b), np.cos(n * om), row.norm_2p),
            ((row.b, row.a1), np.sin(n * om), row.norm_2m),
        )
        for (c_i, c_e), trig, want in families:
            u_i = c_i * trig / xii
            u_e = c_e * trig / xie
            got = _s_pairing(THIN, u_i, u_e, u_i, u_e, m)
            assert abs(got - want) < 1e-8 * want


def test_mode_projections_against_quadrature():
    """mode_projections equals the direct S-pairing of the boundary forcing
    with each eigenfunction, for every family and n up to 10."""
    m = 256
    om = TWO_PI * np.arange(m) / m
    xii = np.asarray(metric_factor(1.0, THIN.rho_i, om))
    xie = np.asarray(metric_factor(1.0, THIN.rho_e, om))
    src = Dipole(EllipticPoint(1.2, 0.7), np.array([1.0, 0.5]))
    sc = newtonian_coefficients(src, 10, 1.0, rho_e=THIN.rho_e)
    forcing = boundary_forcing(sc, THIN)
    proj = mode_projections(forcing, mode_table(THIN, 10))
    nn = np.arange(1, 11)
    g_i = (forcing.gc_i[:, None] * np.cos(np.outer(nn, om))
           + forcing.gs_i[:, None] * np.sin(np.outer(nn, om))).sum(axis=0) / xii
    g_e = (forcing.gc_e[:, None] * np.cos(np.outer(nn, om))
           + forcing.gs_e[:, None] * np.sin(np.outer(nn, om))).sum(axis=0) / xie
    table = mode_table(THIN, 10)
    for n in range(1, 11):
        row = table.row(n)
        families = (
            ((row.a1, row.b), np.cos(n * om), proj.proj_1p[n - 1]),
            ((row.b, row.a2), np.sin(n * om), proj.proj_1m[n - 1]),
            ((row.a2, row.b), np.cos(n * om), proj.proj_2p[n - 1]),
            ((row.b, row.a1), np.sin(n * om), proj.proj_2m[n - 1]),
        )
        for (c_i, c_e), trig, want in families:
            v_i = c_i * trig / xii
            v_e = c_e * trig / xie
            got = _s_pairing(THIN, g_i, g_e, v_i, v_e, m)
            assert abs(got - want) < 1e-8 * max(abs(want), 1e-12)


# ---------------------------------------------------------------------------
# Spectral parameter and configuration.


def test_z_param_values():
    assert z_param(0.0) == 0.0
    for delta in (1e-2, 1e-3, 1e-6, 1e-8):
        z = z_param(delta)
        denom = 4.0 + delta * delta
        want = complex(-delta * delta / (2.0 * denom), delta / denom)
        assert abs(z - want) <= 1e-16
        assert 0.24 <= abs(z) / delta <= 0.26
        assert z_param(-delta) == z.conjugate()
    with pytest.raises(ValueError):
        z_param(math.inf)
    with pytest.raises(ValueError):
        z_param(math.nan)


def test_adaptive_n_max():
    width = THIN.rho_e - THIN.rho_i
    for delta in (1e-2, 1e-4, 1e-6):
        want = math.ceil(2.0 * math.log(1.0 / delta) / width) + 40
        assert adaptive_n_max(delta, THIN) == want
    assert adaptive_n_max(1e-3, THIN, margin=100) == adaptive_n_max(1e-3, THIN) + 60
    with pytest.raises(ValueError):
        adaptive_n_max(0.0, THIN)
    with pytest.raises(ValueError):
        adaptive_n_max(1.5, THIN)
    with pytest.raises(OverflowGuard):
        adaptive_n_max(1e-60, THIN)


def test_shell_config_validation():
    ShellConfig(THIN, -1e-3, 40)  # negative loss is allowed (conjugate branch)
    with pytest.raises(ValueError):
        ShellConfig(THIN, 0.0, 40)
    with pytest.raises(ValueError):
        ShellConfig(THIN, math.nan, 40)
    with pytest.raises(ValueError):
        ShellConfig(THIN, 1e-3, 0)
    with pytest.raises(OverflowGuard):
        ShellConfig(THIN, 1e-3, 400)


# ---------------------------------------------------------------------------
# Boundary forcing.


def test_boundary_forcing_constant_source():
    sc = newtonian_coefficients(
        Coefficients(c=3.0, f_plus=np.zeros(6), f_minus=np.zeros(6)), 6, 1.0
    )
    forcing = boundary_forcing(sc, THIN)
    for arr in (forcing.gc_i, forcing.gs_i, forcing.gc_e, forcing.gs_e):
        assert np.all(arr == 0.0)


def test_boundary_forcing_single_mode():
    sc = newtonian_coefficients(
        Coefficients(c=0.0, f_plus=np.array([1.0]), f_minus=np.array([0.0])),
        1, 1.0,
    )
    forcing = boundary_forcing(sc, THIN)
    assert math.isclose(forcing.gc_i[0], math.sinh(0.5), rel_tol=1e-15)
    assert math.isclose(forcing.gc_e[0], -math.sinh(0.8), rel_tol=1e-15)
    assert forcing.gs_i[0] == 0.0
    assert forcing.gs_e[0] == 0.0


def test_boundary_forcing_against_fourier_oracle():
    """The forcing equals (+/-) the normal-derivative Fourier data of the
    source potential on each interface: inner interface keeps the sign of
    d/d rho, the outer one flips it."""
    src = Dipole(EllipticPoint(1.2, 0.7), np.array([1.0, 0.5]))
    n_max = 20
    sc = newtonian_coefficients(src, n_max, 1.0, rho_e=THIN.rho_e)
    forcing = boundary_forcing(sc, THIN)
    m = 1024
    om = TWO_PI * np.arange(m) / m
    for rho_t, g_cos, g_sin, sign in (
        (THIN.rho_i, forcing.gc_i, forcing.gs_i, 1.0),
        (THIN.rho_e, forcing.gc_e, forcing.gs_e, -1.0),
    ):
        ch, sh = math.cosh(rho_t), math.sinh(rho_t)
        pts = np.column_stack([np.cos(om) * ch, np.sin(om) * sh])
        grads = np.array([newtonian_gradient(src, p, 1.0) for p in pts])
        t_rho = np.column_stack([np.cos(om) * sh, np.sin(om) * ch])
        d_rho = np.sum(grads * t_rho, axis=1)
        spec = np.fft.rfft(d_rho)
        a_n = 2.0 * spec[1:n_max + 1].real / m
        b_n = -2.0 * spec[1:n_max + 1].imag / m
        scale = max(np.max(np.abs(g_cos)), np.max(np.abs(g_sin)))
        assert np.max(np.abs(sign * g_cos - a_n)) < 1e-9 * scale
        assert np.max(np.abs(sign * g_sin - b_n)) < 1e-9 * scale


def test_projection_of_missing_mode_is_zero():
    f_plus = np.zeros(6)
    f_plus[0] = 1.0
    f_plus[4] = 0.3
    sc = newtonian_coefficients(
        Coefficients(c=0.0, f_plus=f_plus, f_minus=np.zeros(6)), 6, 1.0
    )
    proj = mode_projections(boundary_forcing(sc, THIN), mode_table(THIN, 6))
    for k in (1, 2, 3, 5):  # modes 2, 3, 4, 6 carry no forcing
        assert proj.proj_1p[k] == 0.0
        assert proj.proj_2p[k] == 0.0
        assert proj.proj_1m[k] == 0.0
        assert proj.proj_2m[k] == 0.0


def test_projection_thin_ratio_approaches_half_pi():
    """For a cosine forcing with coefficients F e^{n rho_i}, the first-family
    projection divided by F e^{n rho_i} settles at pi/2 in the thin regime."""
    n_max = 60
    n = np.arange(1, n_max + 1)
    f_plus = np.exp(-1.2 * n)
    forcing = BoundaryForcing(
        THIN,
        gc_i=n * f_plus * np.sinh(n * THIN.rho_i),
        gs_i=np.zeros(n_max),
        gc_e=-n * f_plus * np.sinh(n * THIN.rho_e),
        gs_e=np.zeros(n_max),
    )
    proj = mode_projections(forcing, mode_table(THIN, n_max))
    ratio = proj.proj_1p / (f_plus * np.exp(n * THIN.rho_i))
    window = ratio[19:60]
    assert np.max(np.abs(window - math.pi / 2)) < 1e-3 * (math.pi / 2)


# ---------------------------------------------------------------------------
# Density solve.


def test_solve_densities_zero_source():
    sc = newtonian_coefficients(
        Coefficients(c=0.0, f_plus=np.zeros(8), f_minus=np.zeros(8)), 8, 1.0
    )
    dc = solve_densities(sc, ShellConfig(THIN, 1e-3, 8))
    for arr in (dc.p_cos, dc.p_sin, dc.q_cos, dc.q_sin):
        assert np.all(arr == 0.0)


def test_resolvent_magnitude_closed_form():
    table = mode_table(THIN, 40)
    for delta in (1e-2, 1e-3, 1e-5):
        z = z_param(delta)
        denom = 4.0 + delta * delta
        re_z = -delta * delta / (2.0 * denom)
        im_z = delta / denom
        for lam in np.concatenate([table.lambda1, table.lambda2]):
            for sign in (1.0, -1.0):
                got = abs(sign * lam + z)
                want = math.hypot(sign * lam + re_z, im_z)
                assert abs(got - want) <= 1e-14 * want


def test_dominant_mode_at_expected_resonance():
    """At delta = 1e-3 the resonant inner-density coefficients peak near
    n = ln(1/delta)/(rho_e - rho_i), about 23."""
    src = Dipole(EllipticPoint(0.9, 0.9), np.array([1.0, 0.4]))
    n_max = 270
    sc = newtonian_coefficients(src, n_max, 1.0, rho_e=THIN.rho_e)
    dc = solve_densities(sc, ShellConfig(THIN, 1e-3, n_max))
    target = math.log(1e3) / (THIN.rho_e - THIN.rho_i)
    for arr in (dc.p_cos, dc.p_sin):
        n_star = int(np.argmax(np.abs(arr))) + 1
        assert abs(n_star - target) <= 2.0


def test_truncation_warning_for_tight_budget():
    src = Dipole(EllipticPoint(0.85, 0.9), np.array([1.0, 0.4]))
    sc = newtonian_coefficients(src, 60, 1.0, rho_e=THIN.rho_e)
    with pytest.warns(TruncationWarning):
        solve_densities(sc, ShellConfig(THIN, 1e-3, 60))


def _solved_case(g, rho0, delta, margin=40):
    src = Dipole(EllipticPoint(rho0, 0.9), np.array([1.0, 0.4]))
    n_max = adaptive_n_max(delta, g, margin=margin)
    sc = newtonian_coefficients(src, n_max, g.R, rho_e=g.rho_e)
    config = ShellConfig(g, delta, n_max)
    return src, sc, config, solve_densities(sc, config)


# ---------------------------------------------------------------------------
# Potential evaluation.


def test_eval_potential_zero_source():
    sc = newtonian_coefficients(
        Coefficients(c=0.0, f_plus=np.zeros(8), f_minus=np.zeros(8)), 8, 1.0
    )
    config = ShellConfig(THIN, 1e-3, 8)
    dc = solve_densities(sc, config)
    for p in (EllipticPoint(0.2, 1.0), EllipticPoint(0.65, 2.0),
              EllipticPoint(1.5, 4.0)):
        assert eval_potential(sc, dc, config, p) == 0.0


def test_potential_continuity_across_interfaces():
    src, _, config, dc = _solved_case(THIN, 1.3, 1e-3)
    omegas = np.linspace(0.07, 6.2, 12)
    for rho_t in (THIN.rho_i, THIN.rho_e):
        worst, scale = 0.0, 0.0
        for om in omegas:
            v_in = eval_potential(src, dc, config, EllipticPoint(rho_t - 1e-6, om))
            v_out = eval_potential(src, dc, config, EllipticPoint(rho_t + 1e-6, om))
            worst = max(worst, abs(v_in - v_out))
            scale = max(scale, abs(v_in))
        assert worst < 1e-6 * scale


def test_flux_continuity_across_interfaces():
    """epsilon-weighted normal flux is continuous: checked with one-sided
    sixth-order difference stencils on both sides of each interface."""
    src, _, config, dc = _solved_case(THIN, 1.3, 1e-3)
    delta = config.delta
    stencil = np.array([-49.0 / 20, 6.0, -15.0 / 2, 20.0 / 3,
                        -15.0 / 4, 6.0 / 5, -1.0 / 6])
    h = 1e-4
    eps_shell = complex(-1.0, delta)
    for rho_t, eps_in, eps_out in (
        (THIN.rho_i, 1.0 + 0.0j, eps_shell),
        (THIN.rho_e, eps_shell, 1.0 + 0.0j),
    ):
        worst, scale = 0.0, 0.0
        for om in np.linspace(0.07, 6.2, 12):
            d_in = -sum(
                c * eval_potential(src, dc, config, EllipticPoint(rho_t - k * h, om))
                for k, c in enumerate(stencil)
            ) / h
            d_out = sum(
                c * eval_potential(src, dc, config, EllipticPoint(rho_t + k * h, om))
                for k, c in enumerate(stencil)
            ) / h
            f_in = eps_in * d_in
            f_out = eps_out * d_out
            worst = max(worst, abs(f_in - f_out))
            scale = max(scale, abs(f_in), abs(f_out))
        assert worst < 1e-8 * scale


def test_reality_symmetry_in_delta():
    src, sc, config, dc = _solved_case(THIN, 1.3, 1e-3)
    conj_config = ShellConfig(THIN, -config.delta, config.n_max)
    dc_conj = solve_densities(sc, conj_config)
    for p in (EllipticPoint(0.3, 1.0), EllipticPoint(0.65, 2.0),
              EllipticPoint(1.0, 4.0)):
        v = eval_potential(src, dc, config, p)
        v_conj = eval_potential(src, dc_conj, conj_config, p)
        assert abs(v_conj - v.conjugate()) <= 1e-13 * abs(v)


def test_potential_decays_far_from_shell():
    for src_spec in (
        Dipole(EllipticPoint(1.3, 0.9), np.array([1.0, 0.4])),
        ChargePair(EllipticPoint(1.4, 0.3), EllipticPoint(1.6, 2.0), 2.0),
    ):
        n_max = adaptive_n_max(1e-3, THIN)
        sc = newtonian_coefficients(src_spec, n_max, 1.0, rho_e=THIN.rho_e)
        config = ShellConfig(THIN, 1e-3, n_max)
        dc = solve_densities(sc, config)
        omegas = np.linspace(0.0, 6.0, 9)
        far = max(abs(eval_potential(src_spec, dc, config, EllipticPoint(8.0, om)))
                  for om in omegas)
        near = max(abs(eval_potential(src_spec, dc, config, EllipticPoint(1.3, om)))
                   for om in omegas)
        assert far < 1e-2 * near


# ---------------------------------------------------------------------------
# Shell gradient.


def test_gradient_zero_source():
    sc = newtonian_coefficients(
        Coefficients(c=0.0, f_plus=np.zeros(8), f_minus=np.zeros(8)), 8, 1.0
    )
    config = ShellConfig(THIN, 1e-3, 8)
    dc = solve_densities(sc, config)
    d_rho, d_om = eval_gradient_shell(sc, dc, config, 0.65, 1.0)
    assert d_rho == 0.0 and d_om == 0.0


def test_gradient_matches_finite_differences():
    src, _, config, dc = _solved_case(THIN, 1.3, 1e-3)
    h = 1e-6
    for rho in (0.55, 0.65, 0.75):
        for om in np.linspace(0.2, 6.0, 6):
            d_rho, d_om = eval_gradient_shell(src, dc, config, rho, om)
            fd_rho = (eval_potential(src, dc, config, EllipticPoint(rho + h, om))
                      - eval_potential(src, dc, config, EllipticPoint(rho - h, om))
                      ) / (2.0 * h)
            fd_om = (eval_potential(src, dc, config, EllipticPoint(rho, om + h))
                     - eval_potential(src, dc, config, EllipticPoint(rho, om - h))
                     ) / (2.0 * h)
            scale = abs(d_rho) + abs(d_om)
            assert abs(d_rho - fd_rho) < 1e-6 * scale
            assert abs(d_om - fd_om) < 1e-6 * scale


def test_shell_field_is_harmonic():
    """Xi^-2 times the 5-point (rho, omega) Laplacian stencil of V must
    vanish relative to the field scale inside the shell.

    A second-order stencil cannot certify 1e-6 on a strongly resonant
    field (the h^2 n^4 truncation floor sits near 8e-7 for the delta = 1e-3
    resonance), so this test drives a smooth off-resonance configuration;
    the resonant case is certified by the fourth-order stencil below.
    """
    src, _, config, dc = _solved_case(THIN, 2.0, 1e-3)
    h = 2e-4
    residuals, scale = [], 0.0
    for rho in (0.58, 0.68):
        for om in np.linspace(0.1, 6.1, 7):
            v0 = eval_potential(src, dc, config, EllipticPoint(rho, om))
            lap = (
                eval_potential(src, dc, config, EllipticPoint(rho + h, om))
                + eval_potential(src, dc, config, EllipticPoint(rho - h, om))
                + eval_potential(src, dc, config, EllipticPoint(rho, om + h))
                + eval_potential(src, dc, config, EllipticPoint(rho, om - h))
                - 4.0 * v0
            ) / (h * h)
            xi2 = float(metric_factor(1.0, rho, om)) ** 2
            residuals.append(abs(lap) / xi2)
            scale = max(scale, abs(v0))
    assert max(residuals) < 1e-6 * scale


def _laplacian_residual_4th(src, dc, config, points, h=5e-4):
    """Worst Xi^-2 stencil-Laplacian residual over a batch, relative to
    the batch field scale, with fourth-order 9-point differences."""
    c4 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
    offs = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    worst, scale = 0.0, 0.0
    for rho, om in points:
        vr = [eval_potential(src, dc, config, EllipticPoint(rho + k * h, om))
              for k in offs]
        vo = [eval_potential(src, dc, config, EllipticPoint(rho, om + k * h))
              for k in offs]
        lap = (np.dot(c4, vr) + np.dot(c4, vo)) / (h * h)
        xi2 = float(metric_factor(1.0, rho, om)) ** 2
        worst = max(worst, abs(lap) / xi2)
        scale = max(scale, abs(vr[2]))
    return worst, scale


def test_resonant_field_is_harmonic_everywhere():
    """The resonant delta = 1e-3 field satisfies the PDE in the core, the
    shell, and the exterior (away from the source)."""
    src, _, config, dc = _solved_case(THIN, 1.3, 1e-3)
    regions = {
        "core": [(0.2, om) for om in np.linspace(0.3, 5.9, 5)],
        "shell": [(0.65, om) for om in np.linspace(0.3, 5.9, 5)],
        "exterior": [(1.0, om) for om in np.linspace(2.0, 5.5, 5)],
    }
    for points in regions.values():
        worst, scale = _laplacian_residual_4th(src, dc, config, points)
        assert worst < 1e-6 * scale


def test_gradient_requires_shell_point():
    src, _, config, dc = _solved_case(THIN, 1.3, 1e-3)
    with pytest.raises(ValueError):
        eval_gradient_shell(src, dc, config, 0.3, 1.0)
    with pytest.raises(ValueError):
        eval_gradient_shell(src, dc, config, 0.9, 1.0)


# ---------------------------------------------------------------------------
# Dissipated power.


def test_dissipated_power_zero_source():
    sc = newtonian_coefficients(
        Coefficients(c=0.0, f_plus=np.zeros(8), f_minus=np.zeros(8)), 8, 1.0
    )
    config = ShellConfig(THIN, 1e-3, 8)
    dc = solve_densities(sc, config)
    assert dissipated_power_direct(sc, dc, config) == 0.0
    proj = mode_projections(boundary_forcing(sc, THIN), mode_table(THIN, 8))
    assert dissipated_power_spectral(proj, mode_table(THIN, 8), 1e-3) == 0.0


def test_dissipated_power_quadrature_doubling():
    src, _, config, dc = _solved_case(THIN, 1.3, 1e-3)
    base = dissipated_power_direct(src, dc, config)
    fine = dissipated_power_direct(
        src, dc, config,
        n_omega=2 * max(4 * config.n_max + 2, 512), n_panels=8,
    )
    assert abs(base - fine) <= 1e-8 * abs(fine)


def test_dissipated_power_spectral_single_mode():
    table = mode_table(THIN, 12)
    n_star = 5
    proj_val = 0.7
    arr = np.zeros(12)
    arr[n_star - 1] = proj_val
    proj = ModeProjection(
        proj_1p=arr, proj_1m=np.zeros(12), proj_2p=np.zeros(12), proj_2m=np.zeros(12)
    )
    row = table.row(n_star)
    for delta in (1e-2, 1e-3, 1e-4):
        want = delta * proj_val**2 / ((row.lambda1**2 + delta**2) * row.norm_1p)
        got = dissipated_power_spectral(proj, table, delta)
        assert abs(got - want) <= 1e-14 * want


def test_dissipated_power_peaks_at_eigenvalue():
    """Sweeping delta across |lambda_1| of an isolated forced mode, the
    spectral power is maximal where delta matches the eigenvalue."""
    table = mode_table(THIN, 12)
    n_star = 5
    arr = np.zeros(12)
    arr[n_star - 1] = 1.0
    proj = ModeProjection(
        proj_1p=arr, proj_1m=np.zeros(12), proj_2p=np.zeros(12), proj_2m=np.zeros(12)
    )
    lam = abs(table.row(n_star).lambda1)
    grid = lam * np.logspace(-1.0, 1.0, 17)
    powers = [dissipated_power_spectral(proj, table, float(d)) for d in grid]
    k_peak = int(np.argmax(powers))
    k_near = int(np.argmin(np.abs(np.log(grid) - math.log(lam))))
    assert abs(k_peak - k_near) <= 1


def test_dissipated_power_validation():
    table = mode_table(THIN, 4)
    proj = ModeProjection(
        proj_1p=np.zeros(4), proj_1m=np.zeros(4),
        proj_2p=np.zeros(4), proj_2m=np.zeros(4),
    )
    with pytest.raises(ValueError):
        dissipated_power_spectral(proj, table, 0.0)


def test_surrogate_tracks_direct_energy():
    src = Dipole(EllipticPoint(0.88, 0.9), np.array([1.0, 0.4]))
    records = sweep(src, THIN, [1e-2, 1e-4, 1e-6], PROBES_THIN)
    ratios = [r.e_direct / r.e_spectral for r in records]
    assert max(ratios) / min(ratios) <= 10.0


def test_solve_runtime_budget():
    start = time.time()
    _solved_case(THIN, 1.3, 1e-3)
    assert time.time() - start < 1.0


# ---------------------------------------------------------------------------
# Sweeps and classification.


def test_sweep_inside_source_blows_up():
    src = Dipole(EllipticPoint(0.88, 0.9), np.array([1.0, 0.4]))
    deltas = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8]
    records = sweep(src, THIN, deltas, PROBES_THIN)
    energies = np.array([r.e_direct for r in records])
    assert np.all(np.diff(energies) > 0.0)
    norm_far = np.array([np.exp(np.mean(np.log(r.normalized_far))) for r in records])
    assert np.all(np.diff(norm_far) < 0.0)
    far = np.array([np.max(np.abs(r.far_samples)) for r in records])
    assert far.max() / far.min() < 2.0
    diag = calr_classify(records, THIN_REGIME)
    assert diag.verdict.value == "CALR"
    assert diag.energy_increasing
    assert diag.visibility_decreasing
    assert diag.growth_exponent > 0.05


def test_sweep_outside_source_stays_bounded():
    src = Dipole(EllipticPoint(1.10, 0.9), np.array([1.0, 0.4]))
    deltas = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8]
    records = sweep(src, THIN, deltas, PROBES_THIN)
    energies = np.array([r.e_direct for r in records])
    assert np.all(np.diff(energies) < 0.0)
    diag = calr_classify(records, THIN_REGIME)
    assert diag.verdict.value == "NoCALR"
    assert diag.growth_exponent < -0.05


def test_sweep_preserves_order_and_threads_agree():
    src = Dipole(EllipticPoint(0.88, 0.9), np.array([1.0, 0.4]))
    deltas = [1e-3, 1e-2, 1e-5, 1e-4]
    serial = sweep(src, THIN, deltas, PROBES_THIN)
    assert [r.delta for r in serial] == deltas
    threaded = sweep(src, THIN, deltas, PROBES_THIN, threads=3)
    for a, b in zip(serial, threaded):
        assert a.delta == b.delta
        assert a.e_direct == b.e_direct
        assert a.e_spectral == b.e_spectral
        assert np.array_equal(a.far_samples, b.far_samples)
        assert np.array_equal(a.normalized_far, b.normalized_far)


def test_sweep_validation():
    src = Dipole(EllipticPoint(0.88, 0.9), np.array([1.0, 0.4]))
    with pytest.raises(ValueError):
        sweep(src, THIN, [], PROBES_THIN)
    with pytest.raises(ValueError):
        sweep(src, THIN, [1e-3], [EllipticPoint(0.7, 0.0)])


def _record(delta, energy, norm_far):
    samples = np.array([norm_far, norm_far])
    return SweepRecord(
        delta=delta, n_max=10, e_direct=energy, e_spectral=energy,
        far_samples=samples, normalized_far=samples,
    )


def test_classify_synthetic_sweeps():
    deltas = [1e-2, 1e-3, 1e-4, 1e-5]
    growing = [_record(d, 10.0 ** (2 * k), 8.0 / 2**k)
               for k, d in enumerate(deltas)]
    assert calr_classify(growing, THIN_REGIME).verdict.value == "CALR"

    flat = [_record(d, e, 1.0)
            for d, e in zip(deltas, [1.0, 1.1, 1.05, 1.08])]
    assert calr_classify(flat, THIN_REGIME).verdict.value == "NoCALR"

    short = [_record(1e-2, 1.0, 1.0), _record(1e-3, 2.0, 1.0)]
    assert calr_classify(short, THIN_REGIME).verdict.value == "Indeterminate"

    broken = [_record(1e-2, 1.0, 1.0), _record(1e-3, math.inf, 1.0),
              _record(1e-4, 2.0, 1.0)]
    assert calr_classify(broken, THIN_REGIME).verdict.value == "Indeterminate"

    # Energy spikes without any visibility drop: neither CALR nor NoCALR.
    spiky = [_record(1e-2, 1.0, 1.0), _record(1e-3, 100.0, 1.0),
             _record(1e-4, 3.0, 1.0)]
    assert calr_classify(spiky, THIN_REGIME).verdict.value == "Indeterminate"
