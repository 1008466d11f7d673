import math

import numpy as np
import pytest

from oracles import expm_series
from stransport import TensorComponents, TransportLaw, transport_matrix, transport_tensor, verify_axioms
from stransport.engine import Probes
from stransport.geometry import (
    ConnectionField,
    Curve,
    DeformationField,
    MetricField,
    VectorField,
    accelerated_worldline,
    christoffels_from_metric,
    circular_worldline,
    covariant_acceleration,
    euclidean,
    fermi_B,
    fermi_walker_B,
    great_circle,
    jaumann_B,
    latitude_circle,
    law_with_deformation,
    line,
    manifold,
    minkowski,
    named_law,
    parallel_law,
    polar_plane,
    rotation_angle,
    sigma_of_X,
    sphere2,
    truesdell_B,
    vorticity,
    wrap_angle,
)
from stransport.geometry.curves import CURVES
from stransport.geometry.metric import MANIFOLDS


def rot(a):
    return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])


# -- metrics and connections ------------------------------------------------


def test_euclidean_christoffels_vanish():
    m = euclidean(3).metric
    assert np.all(christoffels_from_metric(m, [0.3, -1.0, 2.0]) == 0)


def test_sphere_christoffels():
    th = 0.7
    C = christoffels_from_metric(sphere2().metric, [th, 1.1])
    expected = np.zeros((2, 2, 2))
    expected[0, 1, 1] = -math.sin(th) * math.cos(th)
    expected[1, 0, 1] = expected[1, 1, 0] = 1 / math.tan(th)
    np.testing.assert_allclose(C, expected, atol=1e-14)


def test_polar_christoffels():
    r = 1.7
    C = christoffels_from_metric(polar_plane().metric, [r, 0.4])
    expected = np.zeros((2, 2, 2))
    expected[0, 1, 1] = -r
    expected[1, 0, 1] = expected[1, 1, 0] = 1 / r
    np.testing.assert_allclose(C, expected, atol=1e-14)


def test_finite_difference_metric_derivatives():
    analytic = sphere2().metric
    numeric = MetricField(2, analytic.g)
    x = [0.9, 0.2]
    np.testing.assert_allclose(christoffels_from_metric(numeric, x), christoffels_from_metric(analytic, x), atol=1e-9)


def test_singular_metric():
    m = MetricField(2, lambda x: np.diag([1.0, x[0] ** 2]), sample_point=(1.0, 0.0))
    with pytest.raises(ValueError, match="singular"):
        christoffels_from_metric(m, [0.0, 0.0])


def test_constant_metric_validation():
    with pytest.raises(ValueError, match="symmetric"):
        MetricField.constant([[1, 2], [0, 1]])
    with pytest.raises(ValueError, match="degenerate"):
        MetricField.constant([[1, 1], [1, 1]])
    assert MetricField.constant(np.diag([-1.0, 1.0, 1.0])).signature == (-1, 1, 1)


def test_metric_check_detects_signature_change():
    m = MetricField(2, lambda x: np.diag([1.0, x[0]]), sample_point=(1.0, 0.0))
    m.check([[1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(ValueError, match="signature"):
        m.check([[-1.0, 0.0]])


@pytest.mark.parametrize("name", ["sphere-2", "polar-plane"])
def test_levi_civita_is_compatible_and_torsion_free(name):
    mani = manifold(name)
    conn = mani.connection
    for x in ([0.8, 0.3], [1.3, 2.0]):
        assert conn.metric_compatibility(mani.metric, x) < 1e-12
        assert np.max(np.abs(conn.torsion_at(x))) == 0.0


def test_explicit_torsion_is_used():
    T = np.zeros((2, 2, 2))
    T[0, 0, 1], T[0, 1, 0] = 1.0, -1.0
    conn = ConnectionField(2, lambda x: np.zeros((2, 2, 2)), torsion=lambda x: T)
    np.testing.assert_array_equal(conn.torsion_at([0, 0]), T)


def test_catalog_lookup():
    assert manifold("euclidean-n", 4).dim == 4
    assert manifold("minkowski-3").metric.signature == (-1, 1, 1)
    with pytest.raises(KeyError, match="unknown catalog id"):
        manifold("sphere-3")
    with pytest.raises(ValueError):
        manifold("euclidean-n")
    assert set(MANIFOLDS) == {"euclidean-n", "sphere-2", "minkowski-n", "polar-plane"}
    assert "circular-worldline" in CURVES


def test_periodic_closure():
    mani = sphere2()
    assert mani.same_point([1.0, 0.0], [1.0, 2 * math.pi])
    assert not mani.same_point([1.0, 0.0], [1.0, math.pi])


# -- curves -----------------------------------------------------------------


@pytest.mark.parametrize(
    "curve",
    [
        line([0.0, 1.0], [2.0, -1.0]),
        latitude_circle(0.5),
        accelerated_worldline(0.7, dim=3),
        circular_worldline(1.0, 0.6),
    ],
    ids=lambda c: c.name,
)
def test_catalog_velocity_matches_position(curve):
    assert curve.velocity_defect() < 1e-6


def test_tabulated_curve_is_spline():
    s = np.linspace(0, 1, 9)
    c = Curve.tabulated(s, np.column_stack([s, s**2]))
    np.testing.assert_allclose(c.x(0.5), [0.5, 0.25], atol=1e-3)
    assert c.velocity_defect() < 1e-6
    assert c.breakpoints == tuple(s[1:-1])


def test_curve_validation():
    with pytest.raises(ValueError):
        latitude_circle(0.0)
    with pytest.raises(ValueError):
        circular_worldline(1.0, 1.2)
    with pytest.raises(ValueError):
        Curve.tabulated([0, 1, 1], np.zeros((3, 2)))
    with pytest.raises(ValueError):
        line([0, 0], [1, 0, 0])


# -- parallel laws ----------------------------------------------------------


def test_flat_parallel_law_is_zero():
    law = parallel_law(line([0, 0, 0], [1, 2, 3]), euclidean(3).connection)
    assert np.all(law(0.4) == 0)


def test_latitude_law_is_constant():
    th = 0.6
    law = parallel_law(latitude_circle(th), sphere2().connection)
    expected = np.array([[0.0, -math.sin(th) * math.cos(th)], [1 / math.tan(th), 0.0]])
    for s in (0.0, 1.0, 5.0):
        np.testing.assert_allclose(law(s), expected, atol=1e-14)


def test_polar_line_reproduces_cartesian_vector():
    # Cartesian line p(s) = (1, s), s in [-1, 2], expressed in polar coordinates
    pos = lambda s: np.array([math.hypot(1.0, s), math.atan2(s, 1.0)])
    vel = lambda s: np.array([s / math.hypot(1.0, s), 1.0 / (1.0 + s * s)])
    c = Curve((-1.0, 2.0), 2, pos, vel)
    law = parallel_law(c, polar_plane().connection)
    w = np.array([0.3, -1.2])

    def polar_components(s):
        r, phi = pos(s)
        rhat = np.array([math.cos(phi), math.sin(phi)])
        phihat = np.array([-math.sin(phi), math.cos(phi)])
        return np.array([w @ rhat, (w @ phihat) / r])

    for t in (0.0, 1.0, 2.0):
        tm = transport_matrix(law, -1.0, t, 1e-3)
        np.testing.assert_allclose(tm.H @ polar_components(-1.0), polar_components(t), atol=1e-10)


def test_geodesic_self_transport():
    c = great_circle()
    law = parallel_law(c, sphere2().connection)
    tm = transport_matrix(law, 0.0, 2.5, 1e-3)
    np.testing.assert_allclose(tm.H @ c.u(0.0), c.u(2.5), atol=1e-7)


@pytest.mark.parametrize("theta0", [math.pi / 6, math.pi / 4, math.pi / 3])
def test_latitude_holonomy(theta0):
    c = latitude_circle(theta0)
    law = parallel_law(c, sphere2().connection)
    tm = transport_matrix(law, *c.domain, 1e-3)
    angle = rotation_angle(tm.H, sphere2().metric.at(c.start))
    assert abs(wrap_angle(angle + 2 * math.pi * math.cos(theta0))) < 1e-6


@pytest.mark.parametrize("name", ["sphere-2", "polar-plane"])
def test_parallel_transport_is_isometric(name):
    mani = manifold(name)
    pos = lambda s: np.array([1.0 + 0.3 * math.sin(s), 2 * s])
    vel = lambda s: np.array([0.3 * math.cos(s), 2.0])
    c = Curve((0.0, 1.5), 2, pos, vel)
    law = parallel_law(c, mani.connection)
    rng = np.random.default_rng(2)
    v, w = rng.uniform(-1, 1, (2, 2))
    g0 = mani.metric.inner(c.x(0.0), v, w)
    for t in (0.5, 1.5):
        H = transport_matrix(law, 0.0, t, 1e-3).H
        assert abs(mani.metric.inner(c.x(t), H @ v, H @ w) - g0) < 1e-7


def test_parallel_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        parallel_law(line([0, 0], [1, 0]), euclidean(3).connection)


# -- deformations -----------------------------------------------------------


def test_zero_deformation_is_parallel():
    c = latitude_circle(0.9)
    conn = sphere2().connection
    d = DeformationField.constant(np.zeros((2, 2)), c.domain)
    np.testing.assert_array_equal(law_with_deformation(c, conn, d)(1.0), parallel_law(c, conn)(1.0))


def test_constant_deformation_in_flat_space():
    B = np.array([[0.2, -0.5], [0.1, 0.3]])
    c = line([0, 0], [1, 1])
    law = law_with_deformation(c, euclidean(2).connection, DeformationField.constant(B, c.domain))
    np.testing.assert_allclose(transport_matrix(law, 0.1, 0.9, 1e-3).H, expm_series(-0.8 * B), atol=1e-10)


def test_scalar_deformation_scales():
    c = line([0, 0], [1, 0])
    law = law_with_deformation(c, euclidean(2).connection, DeformationField.constant(0.5 * np.eye(2), c.domain))
    out = transport_tensor(transport_matrix(law, 0.0, 1.0, 1e-3), TensorComponents.vector([1.0, 2.0]))
    np.testing.assert_allclose(out.values, math.exp(-0.5) * np.array([1.0, 2.0]), atol=1e-12)


def test_deformation_domain_mismatch():
    c = line([0, 0], [1, 0])
    with pytest.raises(ValueError, match="domain"):
        law_with_deformation(c, euclidean(2).connection, DeformationField.constant(np.eye(2), (0, 2)))


def test_sigma_of_constant_field_vanishes():
    X = VectorField.affine(np.zeros((2, 2)), [1.0, 2.0])
    assert np.all(sigma_of_X(euclidean(2).connection, X, [0.3, 0.4]) == 0)


def test_sigma_of_first_coordinate_field():
    X = VectorField.affine([[1.0, 0.0], [0.0, 0.0]])
    np.testing.assert_allclose(sigma_of_X(euclidean(2).connection, X, [0.3, 0.4]), [[1, 0], [0, 0]])


def test_sigma_relates_covariant_and_lie_derivatives():
    X = VectorField(2, lambda x: np.array([x[0] * x[1], x[1] ** 2 - x[0]]))
    Y = lambda x: np.array([x[0] ** 2, 3 * x[0] - x[1] ** 3])
    DY = lambda x: np.array([[2 * x[0], 0.0], [3.0, -3 * x[1] ** 2]])
    DX = lambda x: np.array([[x[1], x[0]], [-1.0, 2 * x[1]]])
    p = np.array([0.7, -0.4])
    nabla = DY(p) @ X.at(p)
    lie = DY(p) @ X.at(p) - DX(p) @ Y(p)
    sigma = sigma_of_X(euclidean(2).connection, X, p)
    np.testing.assert_allclose(nabla - lie, sigma @ Y(p), atol=1e-10)


def test_sigma_includes_explicit_torsion():
    T = np.zeros((2, 2, 2))
    T[0, 1, 0], T[0, 0, 1] = 1.0, -1.0
    conn = ConnectionField(2, lambda x: np.zeros((2, 2, 2)), torsion=lambda x: T)
    X = VectorField.affine(np.zeros((2, 2)), [0.0, 2.0])
    # T^i_{kj} X^k with X = (0, 2): row 0 = (T^0_{10}, T^0_{11}) * 2
    np.testing.assert_allclose(sigma_of_X(conn, X, [0, 0]), [[2.0, 0.0], [0.0, 0.0]])


def test_fermi_walker_on_geodesic_is_parallel():
    c = great_circle()
    m = sphere2().metric
    B = fermi_walker_B(c, m)
    for s in (0.0, 2.0, 4.0):
        assert np.max(np.abs(B(s))) < 1e-12


def test_fermi_walker_keeps_velocity_and_norms():
    c = accelerated_worldline(1.0, dim=3)
    m = minkowski(3).metric
    law = named_law("fermi-walker", c, m)
    H = transport_matrix(law, 0.0, 1.0, 1e-3).H
    np.testing.assert_allclose(H @ c.u(0.0), c.u(1.0), atol=1e-8)
    v = np.array([0.0, 0.0, 1.0])
    w = np.array([0.3, 0.0, -0.5])
    w_perp = w + m.inner(c.x(0), w, c.u(0)) * c.u(0)
    eta = m.at(0)
    assert abs((H @ v) @ eta @ (H @ v) - 1.0) < 1e-7
    assert abs((H @ w_perp) @ eta @ (H @ w_perp) - w_perp @ eta @ w_perp) < 1e-7


def test_fermi_matches_fermi_walker_for_unit_timelike():
    c = accelerated_worldline(0.8)
    m = minkowski(2).metric
    for s in (0.0, 0.5, 1.0):
        np.testing.assert_allclose(fermi_B(c, m)(s), fermi_walker_B(c, m)(s), atol=1e-14)


def test_fermi_preserves_pairing():
    c = circular_worldline(1.0, 0.6)
    m = minkowski(3).metric
    law = named_law("fermi", c, m)
    e1, e2 = np.array([0.0, 1.0, 0.0]), np.array([0.75, 0.0, 1.25])
    H = transport_matrix(law, 0.0, 3.0, 1e-3).H
    eta = m.at(0)
    assert abs((H @ e1) @ eta @ (H @ e2) - e1 @ eta @ e2) < 1e-8


def test_fermi_rejects_non_unit_velocity():
    c = accelerated_worldline(1.0)
    fast = Curve(c.domain, 2, c.position, lambda s: 2 * c.u(s), c.acceleration)
    with pytest.raises(ValueError, match="unit timelike"):
        fermi_B(fast, minkowski(2).metric)


def test_fermi_walker_errors():
    m = minkowski(2).metric
    null = Curve((0, 1), 2, lambda s: np.array([s, s]), lambda s: np.array([1.0, 1.0]), lambda s: np.zeros(2))
    with pytest.raises(ValueError, match="null"):
        fermi_walker_B(null, m)
    bare = Curve((0, 1), 2, lambda s: np.array([s, 0.0]), lambda s: np.array([1.0, 0.0]))
    with pytest.raises(ValueError, match="acceleration"):
        fermi_walker_B(bare, m)


def test_covariant_acceleration_of_latitude_circle():
    th = 0.5
    a = covariant_acceleration(latitude_circle(th), sphere2().connection, 0.0)
    np.testing.assert_allclose(a, [-math.sin(th) * math.cos(th), 0.0], atol=1e-14)


def test_truesdell_translation_is_parallel():
    c = line([0, 0], [1, 0])
    B = truesdell_B(c, euclidean(2).metric, VectorField.affine(np.zeros((2, 2)), [1.0, 0.0]))
    assert np.all(B(0.5) == 0)


def test_truesdell_radial_field():
    c = line([1, 0], [1, 0])
    m = euclidean(2).metric
    B = truesdell_B(c, m, VectorField.affine(np.eye(2)))
    np.testing.assert_allclose(B(0.3), np.eye(2))
    law = named_law("truesdell", c, m, VectorField.affine(np.eye(2)))
    np.testing.assert_allclose(transport_matrix(law, 0.0, 0.7, 1e-3).H, math.exp(-0.7) * np.eye(2), atol=1e-12)


def test_truesdell_needs_field():
    with pytest.raises(ValueError, match="derivatives"):
        truesdell_B(line([0, 0], [1, 0]), euclidean(2).metric, None)
    with pytest.raises(ValueError, match="derivatives"):
        jaumann_B(line([0, 0], [1, 0]), euclidean(2).metric, None)


def test_jaumann_gradient_flow_is_parallel():
    X = VectorField(2, lambda x: np.array([2 * x[0] + x[1], x[0] - 3 * x[1]]))
    B = jaumann_B(line([0, 0], [1, 1]), euclidean(2).metric, X)
    assert np.max(np.abs(B(0.4))) < 1e-9


def test_jaumann_rigid_rotation():
    X = VectorField.affine([[0.0, -1.0], [1.0, 0.0]])
    m = euclidean(2).metric
    conn = euclidean(2).connection
    np.testing.assert_allclose(vorticity(m, conn, X, [0.2, 0.1]), [[0, -1], [1, 0]])
    c = line([1, 0], [0, 1])
    law = named_law("jaumann", c, m, X)
    H = transport_matrix(law, 0.0, 1.0, 1e-3).H
    np.testing.assert_allclose(H, rot(1.0), atol=1e-12)
    v = np.array([0.6, -0.8])
    assert abs(np.linalg.norm(H @ v) - 1.0) < 1e-8


def test_unknown_transport():
    with pytest.raises(KeyError):
        named_law("lie", line([0, 0], [1, 0]), euclidean(2).metric)


@pytest.mark.parametrize(
    "kind, curve, metric, field",
    [
        ("parallel", latitude_circle(1.0), sphere2().metric, None),
        ("fermi-walker", accelerated_worldline(1.0), minkowski(2).metric, None),
        ("fermi", accelerated_worldline(1.0), minkowski(2).metric, None),
        ("truesdell", line([1, 0], [0.5, 1]), euclidean(2).metric, VectorField.affine([[1.0, 2.0], [0.0, -1.0]])),
        ("jaumann", line([1, 0], [0.5, 1]), euclidean(2).metric, VectorField.affine([[1.0, 2.0], [0.0, -1.0]])),
    ],
)
def test_geometric_laws_satisfy_axioms(kind, curve, metric, field):
    law = named_law(kind, curve, metric, field)
    report = verify_axioms(law, Probes.random(law, 3, seed=1), tol=1e-6)
    assert report.passed, report.residuals


# -- holonomy angles --------------------------------------------------------


@pytest.mark.parametrize("a", [0.0, 0.4, -2.5, math.pi])
def test_rotation_angle_of_rotation(a):
    assert abs(wrap_angle(rotation_angle(rot(a)) - a)) < 1e-14


def test_rotation_angle_with_metric():
    g = np.diag([1.0, 4.0])
    L = np.diag([1.0, 2.0])
    H = np.linalg.inv(L.T) @ rot(0.3) @ L.T
    assert rotation_angle(H, g) == pytest.approx(0.3, abs=1e-14)


def test_rotation_angle_shape():
    with pytest.raises(ValueError):
        rotation_angle(np.eye(3))


def test_wrap_angle():
    assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(2 * math.pi + 0.1) == pytest.approx(0.1)
