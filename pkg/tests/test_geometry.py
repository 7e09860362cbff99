import math

import numpy as np
import pytest

from cortico.geometry import (
    CorticalPoint,
    TangentVector5,
    curve_fan,
    horizontal_frame,
    integrate_curve,
    lie_bracket,
    one_form_eval,
    spanning_matrix,
)


def P(x=0.0, y=0.0, theta=0.0, f=1.0, s=0.0):
    return CorticalPoint(x, y, theta, f, s)


RNG = np.random.default_rng(2301)


def random_points(n):
    pts = []
    for _ in range(n):
        pts.append(P(x=RNG.uniform(-5, 5), y=RNG.uniform(-5, 5),
                     theta=RNG.uniform(0, math.pi), f=RNG.uniform(0.3, 6.0),
                     s=RNG.uniform(0, 2 * math.pi)))
    return pts


class TestPoint:
    def test_reduction(self):
        p = CorticalPoint(1.0, 2.0, math.pi + 0.3, 2.0, 2 * math.pi + 0.5)
        assert p.theta == pytest.approx(0.3)
        assert p.s == pytest.approx(0.5)

    def test_rejects_nonpositive_frequency(self):
        with pytest.raises(ValueError):
            CorticalPoint(0, 0, 0, 0.0, 0)
        with pytest.raises(ValueError):
            CorticalPoint(0, 0, 0, -1.0, 0)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            CorticalPoint(np.nan, 0, 0, 1.0, 0)


class TestOneForm:
    def test_kills_first_frame_field(self):
        p = P(f=2.0)
        x1 = horizontal_frame(p)[0]
        assert one_form_eval(p, x1) == 0.0

    def test_reads_ds_term(self):
        v = TangentVector5(0, 0, 0, 0, 1)
        for p in random_points(5):
            assert one_form_eval(p, v) == pytest.approx(-1.0)

    def test_dy_term_scales_with_frequency(self):
        p = P(f=2.0)
        assert one_form_eval(p, TangentVector5(0, 1, 0, 0, 0)) == pytest.approx(2.0)

    def test_horizontality_of_frame(self):
        # Every frame field lies in the kernel of the one-form.
        for p in random_points(25):
            for v in horizontal_frame(p):
                assert abs(one_form_eval(p, v)) <= 1e-12


class TestFrame:
    def test_axis_aligned(self):
        x1, x2, x3, x4 = horizontal_frame(P(theta=0.0, f=1.0))
        assert x1 == TangentVector5(1, 0, 0, 0, 0)
        assert x3 == TangentVector5(0, 1, 0, 0, 1)
        assert x2 == TangentVector5(0, 0, 1, 0, 0)
        assert x4 == TangentVector5(0, 0, 0, 1, 0)

    def test_quarter_turn(self):
        x1, _, x3, _ = horizontal_frame(P(theta=math.pi / 2, f=3.0))
        np.testing.assert_allclose(x1.as_array(), [0, 1, 0, 0, 0], atol=1e-12)
        np.testing.assert_allclose(x3.as_array(), [-1, 0, 0, 0, 3], atol=1e-12)


def flow(p, field, t, n_sub=50):
    """Flow p along +/-X_field for time |t| with an accurate integrator."""
    coeffs = [0.0, 0.0, 0.0, 0.0]
    coeffs[field - 1] = math.copysign(1.0, t)
    curve = integrate_curve(p, coeffs, abs(t) / n_sub, abs(t), method="rk4")
    return CorticalPoint.from_array(curve.endpoint_state())


def flow_commutator(i, j, p, t):
    """Displacement of the closed flow rectangle, one BCH order in t^2."""
    q = flow(p, i, t)
    q = flow(q, j, t)
    q = flow(q, i, -t)
    q = flow(q, j, -t)
    return q.as_array() - p.as_array()


def bracket_oracle(i, j, p, h=1e-4):
    """Flow-commutator estimate of [Xi, Xj](p).

    The plain rectangle displacement divided by h carries an O(sqrt(h))
    remainder from the third BCH order, far above the target accuracy, so
    the estimate symmetrizes over +/-sqrt(h) (cancels odd orders) and does
    one Richardson step in sqrt(h) (cancels the remaining h term), leaving
    O(h^2).
    """
    t = math.sqrt(h)

    def g(tt):
        sym = 0.5 * (flow_commutator(i, j, p, tt) + flow_commutator(i, j, p, -tt))
        return sym / tt ** 2

    return (4.0 * g(t / 2) - g(t)) / 3.0


class TestBrackets:
    def test_paper_values(self):
        b12 = lie_bracket(1, 2, P(theta=0.0))
        np.testing.assert_allclose(b12.as_array(), [0, -1, 0, 0, 0], atol=1e-15)
        for p in random_points(3):
            b34 = lie_bracket(3, 4, p)
            np.testing.assert_allclose(b34.as_array(), [0, 0, 0, 0, -1], atol=1e-15)

    def test_commuting_pairs_vanish(self):
        p = P(theta=0.7, f=1.5)
        for (i, j) in [(1, 3), (1, 4), (2, 4)]:
            assert lie_bracket(i, j, p) == TangentVector5(0, 0, 0, 0, 0)
        for i in range(1, 5):
            assert lie_bracket(i, i, p) == TangentVector5(0, 0, 0, 0, 0)

    def test_antisymmetry(self):
        p = P(theta=1.1, f=2.2)
        for i in range(1, 5):
            for j in range(1, 5):
                vij = lie_bracket(i, j, p).as_array()
                vji = lie_bracket(j, i, p).as_array()
                np.testing.assert_allclose(vij, -vji, atol=1e-15)

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            lie_bracket(0, 2, P())
        with pytest.raises(IndexError):
            lie_bracket(1, 5, P())

    @pytest.mark.parametrize("i,j", [(i, j) for i in range(1, 5)
                                     for j in range(1, 5) if i < j])
    def test_against_flow_commutator(self, i, j):
        # Interior point: small flows never hit the angle seams or f floor.
        p = P(x=0.3, y=-0.4, theta=0.8, f=1.3, s=2.0)
        est = bracket_oracle(i, j, p)
        np.testing.assert_allclose(est, lie_bracket(i, j, p).as_array(),
                                   atol=1e-6)


class TestBracketGeneration:
    @pytest.mark.parametrize("f", [0.5, 1.0, 2.0, 4.0, 8.0])
    def test_full_rank_over_frequency_range(self, f):
        for theta in np.linspace(0, math.pi, 7, endpoint=False):
            m = spanning_matrix(P(theta=theta, f=f))
            sv = np.linalg.svd(m, compute_uv=False)
            assert sv.min() > 1e-8
            assert np.linalg.matrix_rank(m) == 5


class TestIntegration:
    def test_straight_line(self):
        c = integrate_curve(P(), (1, 0, 0, 0), step=1e-2, duration=1.0)
        np.testing.assert_allclose(c.endpoint_state(), [1, 0, 0, 1, 0], atol=1e-12)

    def test_unicycle_circle_closed_form(self):
        # theta(t) = t, x = sin t, y = 1 - cos t.
        c = integrate_curve(P(), (1, 1, 0, 0), step=1e-3, duration=math.pi)
        np.testing.assert_allclose(c.endpoint_state(), [0, 2, math.pi, 1, 0],
                                   atol=1e-6)

    def test_x3_plus_x4_closed_form(self):
        # At theta=0: x const, y = t, f = 1 + t, s = t + t^2/2.
        c = integrate_curve(P(), (0, 0, 1, 1), step=1e-3, duration=1.0)
        np.testing.assert_allclose(c.endpoint_state(), [0, 1, 0, 2, 1.5],
                                   atol=1e-6)

    def test_rk4_fourth_order(self):
        target = np.array([0, 2, math.pi, 1, 0])

        def endpoint_error(step):
            c = integrate_curve(P(), (1, 1, 0, 0), step=step,
                                duration=math.pi, method="rk4")
            return np.linalg.norm(c.endpoint_state() - target)

        e1 = endpoint_error(math.pi / 40)
        e2 = endpoint_error(math.pi / 80)
        assert 14.0 <= e1 / e2 <= 18.0

    def test_euler_first_order(self):
        target = np.array([0, 2, math.pi, 1, 0])

        def endpoint_error(step):
            c = integrate_curve(P(), (1, 1, 0, 0), step=step,
                                duration=math.pi, method="euler")
            return np.linalg.norm(c.endpoint_state() - target)

        assert endpoint_error(math.pi / 100) / endpoint_error(math.pi / 200) == \
            pytest.approx(2.0, rel=0.1)

    def test_samples_uniformly_spaced_and_anchored(self):
        start = P(x=1.0, y=2.0, theta=0.5, f=1.5, s=0.25)
        c = integrate_curve(start, (1, 0.2, 0, 0), step=0.01, duration=0.5)
        assert c.times[0] == 0.0
        np.testing.assert_allclose(np.diff(c.times), c.step, atol=1e-15)
        t0, p0 = c.samples[0]
        assert t0 == 0.0 and p0 == start

    def test_truncates_at_frequency_floor(self):
        c = integrate_curve(P(f=0.5), (0, 0, 0, -1), step=1e-3, duration=1.0)
        assert c.truncated
        assert (c.states[:, 3] > 0).all()
        assert c.times[-1] < 1.0

    def test_validation(self):
        with pytest.raises(ValueError):
            integrate_curve(P(), (1, 0, 0, 0), step=-0.1, duration=1.0)
        with pytest.raises(ValueError):
            integrate_curve(P(), (1, 0, 0, 0), step=2.0, duration=1.0)
        with pytest.raises(ValueError):
            integrate_curve(P(), (np.inf, 0, 0, 0), step=0.1, duration=1.0)
        with pytest.raises(ValueError):
            integrate_curve(P(), (1, 0, 0, 0), step=0.1, duration=1.0,
                            method="midpoint")

    def test_circular_projection_radius(self):
        # The (x, y) projection of an X1 + c2*X2 curve is an arc of radius
        # 1/|c2| around a center one radius to the left of the start heading.
        for c2 in (0.5, -0.25, 2.0):
            start = P(theta=0.3)
            c = integrate_curve(start, (1, c2, 0, 0), step=1e-3, duration=2.0)
            center = np.array([start.x - math.sin(start.theta) / c2,
                               start.y + math.cos(start.theta) / c2])
            radii = np.hypot(c.states[:, 0] - center[0],
                             c.states[:, 1] - center[1])
            np.testing.assert_allclose(radii, 1.0 / abs(c2), atol=1e-6)


class TestCurveFan:
    def test_middle_curve_is_straight(self):
        fan = curve_fan(P(), 1, 2, [-0.5, 0.0, 0.5], step=1e-2, duration=1.0)
        assert len(fan) == 3
        mid = fan[1]
        np.testing.assert_allclose(mid.endpoint_state(), [1, 0, 0, 1, 0],
                                   atol=1e-12)

    def test_frequency_sweep_monotone(self):
        fan = curve_fan(P(), 3, 4, [-0.2, 0.2], step=1e-2, duration=1.0)
        assert (np.diff(fan[0].states[:, 3]) < 0).all()
        assert (np.diff(fan[1].states[:, 3]) > 0).all()

    def test_shared_origin(self):
        start = P(x=0.5, y=-1.0, theta=1.0, f=2.0, s=0.3)
        fan = curve_fan(start, 1, 2, [-1, 0, 1, 2], step=1e-2, duration=0.5)
        for c in fan:
            assert c.samples[0][1] == start

    def test_empty_coefficients_rejected(self):
        with pytest.raises(ValueError):
            curve_fan(P(), 1, 2, [], step=1e-2, duration=1.0)


class TestCsvExport:
    def test_format_and_roundtrip(self, tmp_path):
        c = integrate_curve(P(), (1, 1, 0, 0), step=0.1, duration=1.0)
        path = tmp_path / "curve.csv"
        c.to_csv(path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "t,x,y,theta,f,s"
        assert len(lines) == len(c.times) + 1
        parsed = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
        # 17 significant digits round-trip doubles exactly.
        np.testing.assert_array_equal(parsed[:, 0], c.times)
        np.testing.assert_array_equal(parsed[:, 1:], c.states)
