import numpy as np
import pytest

from hodgeqi.bench.fields import builtin_field
from hodgeqi.bounded_scheme import (
    BoundedConfig, EmptyRing, LerayQI, build_leray_qi, eval_mesh, leray_decompose, ring_mask, sample_box,
    select_H,
)
from hodgeqi.boundary_interp import eval_interpolant
from hodgeqi.lattice_qi import GridField, project_curl, project_div

BD = builtin_field("bd_full")


def test_select_H_example():
    assert select_H(0.1, 2, 2, 1e-3, 0.05) == pytest.approx(0.05 * 0.1 ** (1 / 5.999), rel=1e-14)
    assert select_H(0.1, 2, 2, 1e-3, 0.05) == pytest.approx(0.03406, abs=5e-6)


def test_select_H_unit_spacing_and_linearity():
    assert select_H(1.0, 3, 2, 0.5, 0.7) == pytest.approx(0.7)
    assert select_H(0.01, 2, 2, 0.1, 0.2) == pytest.approx(2 * select_H(0.01, 2, 2, 0.1, 0.1))


@pytest.mark.parametrize("kw", [dict(eps=0.0), dict(eps=1.0), dict(C=0.0), dict(C=-1.0)])
def test_select_H_rejects(kw):
    args = dict(h=0.1, k=2, dim=2, eps=0.01, C=0.05) | kw
    with pytest.raises(ValueError):
        select_H(**args)


@pytest.mark.parametrize("kw", [
    dict(v_lo=(0.0, 0.1)),
    dict(v_lo=(0.5, 0.5), v_hi=(0.4, 0.9)),
    dict(omega_lo=(-2.0, -2.0), omega_hi=(3.0, 3.0)),
    dict(h=0.0),
])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        BoundedConfig(**kw)


def test_config_defaults():
    cfg = BoundedConfig(h=0.05)
    assert cfg.margin == pytest.approx(0.1)
    assert cfg.matern_shape() == pytest.approx(60.0)
    assert BoundedConfig(h=0.05, H=0.3).kernel_scale() == 0.3


def test_ring_mask_counts_nodes_outside_closed_V():
    cfg = BoundedConfig(h=0.1)
    nodes = sample_box(BD, cfg).nodes().reshape(-1, 2)
    assert ring_mask(nodes, cfg).sum() == 121 - 81


def test_empty_ring():
    cfg = BoundedConfig(h=0.1)
    g = GridField.sample(BD, np.array([0.3, 0.3]), 0.1, (3, 3))
    with pytest.raises(EmptyRing):
        build_leray_qi(g, cfg)


def test_spacing_mismatch():
    cfg = BoundedConfig(h=0.1)
    with pytest.raises(ValueError):
        build_leray_qi(GridField.on_box(BD, (0, 0), (1, 1), 0.05), cfg)


def test_bad_part():
    cfg = BoundedConfig(h=0.1)
    with pytest.raises(ValueError):
        build_leray_qi(sample_box(BD, cfg), cfg, "full")


def test_zero_field_gives_zero():
    cfg = BoundedConfig(h=0.1, shape=8.0)
    qi = build_leray_qi(sample_box(lambda x: np.zeros(x.shape), cfg), cfg)
    assert np.all(qi(eval_mesh((0, 0), (1, 1), 5)) == 0.0)


def test_zero_residual_leaves_only_interpolant():
    cfg = BoundedConfig(h=0.1, shape=8.0)
    qi = build_leray_qi(sample_box(BD, cfg), cfg)
    pts = eval_mesh((0, 0), (1, 1), 6, 0.1).reshape(-1, 2)
    bare = LerayQI(cfg, "div", qi.H, qi.interp, qi.nodes, np.zeros_like(qi.residual))
    np.testing.assert_array_equal(bare(pts), eval_interpolant(qi.interp, pts, "div"))


def test_residual_vanishes_on_ring():
    cfg = BoundedConfig(h=0.1, shape=8.0)
    qi = build_leray_qi(sample_box(BD, cfg), cfg)
    ring = ring_mask(qi.nodes, cfg)
    assert np.max(np.abs(qi.residual[ring])) <= 1e-8


@pytest.mark.parametrize("part", ["div", "curl"])
def test_unit_ratio_matches_lattice_sum(part):
    # with H = h the smoothing term is the plain lattice quasi-interpolant of the residual
    cfg = BoundedConfig(h=0.1, shape=8.0, H=0.1)
    data = sample_box(BD, cfg)
    qi = build_leray_qi(data, cfg, part)
    g = GridField(data.origin, data.spacing, qi.residual.reshape(data.values.shape))
    pts = np.array([[0.43, 0.51], [0.6, 0.35]])
    ref = (project_div if part == "div" else project_curl)(g, 2, 2, pts)
    assert np.max(np.abs(qi.smoothing_term(pts) - ref)) <= 1e-12 * np.max(np.abs(ref))


def test_structure_preservation():
    cfg = BoundedConfig(h=0.1, shape=8.0, C=0.055)
    data = sample_box(BD, cfg)
    pts = np.random.default_rng(0).uniform(0.15, 0.85, (100, 2))
    qd = build_leray_qi(data, cfg, "div")
    qc = LerayQI(cfg, "curl", qd.H, qd.interp, qd.nodes, qd.residual)
    div = qd(pts, (1, 0))[:, 0] + qd(pts, (0, 1))[:, 1]
    curl = qc(pts, (1, 0))[:, 1] - qc(pts, (0, 1))[:, 0]
    scale = np.abs(qd(pts, (1, 0))).max()
    assert np.max(np.abs(div)) <= 1e-6 * scale
    assert np.max(np.abs(curl)) <= 1e-6 * np.abs(qc(pts, (1, 0))).max()


def test_decomposition_shares_interpolant_and_reconstructs():
    cfg = BoundedConfig(h=0.1, shape=8.0, C=0.055)
    data = sample_box(BD, cfg)
    pts = eval_mesh((0, 0), (1, 1), 6, 0.1).reshape(-1, 2)
    dec = leray_decompose(data, cfg, pts)
    err_div = np.sqrt(np.mean((dec.div - builtin_field("bd_div")(pts)) ** 2))
    err_curl = np.sqrt(np.mean((dec.curl - builtin_field("bd_curl")(pts)) ** 2))
    err_full = np.sqrt(np.mean((dec.reconstruction - BD(pts)) ** 2))
    assert err_full <= err_div + err_curl + 1e-15
    np.testing.assert_allclose(dec.reconstruction, dec.div + dec.curl)


def test_eval_mesh_margin():
    m = eval_mesh((0, 0), (1, 1), 3, 0.1)
    assert m.shape == (3, 3, 2)
    np.testing.assert_allclose(m[0, 0], [0.1, 0.1])
    np.testing.assert_allclose(m[-1, -1], [0.9, 0.9])
