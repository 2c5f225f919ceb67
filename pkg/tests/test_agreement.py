import math

import numpy as np
import pytest
from scipy import special, stats

from posebench.agreement import (
    DegenerateRatingsError,
    SpreadStat,
    annotation_spread,
    consensus_pose,
    f_quantile,
    icc,
    icc_confidence,
    model_vs_human_icc,
    percentile,
)
from posebench.skeleton import KEYPOINTS, KeypointId
from posebench.types import FrameMeta, Point, PoseAnnotation

from conftest import grid_pose, manifest_for, random_pose

# ---------------------------------------------------------------------------
# Independent oracles, written before the implementations they check.
# ---------------------------------------------------------------------------


def anova_oracle(matrix):
    """Sums-of-squares ANOVA via explicit double loops."""
    m = np.asarray(matrix, dtype=float)
    n, k = m.shape
    grand = m.sum() / (n * k)
    ss_rows = sum(k * (m[i].mean() - grand) ** 2 for i in range(n))
    ss_cols = sum(n * (m[:, j].mean() - grand) ** 2 for j in range(k))
    ss_total = sum((m[i, j] - grand) ** 2 for i in range(n) for j in range(k))
    ss_err = ss_total - ss_rows - ss_cols
    return ss_rows / (n - 1), ss_cols / (k - 1), ss_err / ((n - 1) * (k - 1))


def icc_oracle(matrix):
    msr, msc, mse = anova_oracle(matrix)
    n, k = np.asarray(matrix).shape
    c1 = (msr - mse) / (msr + (k - 1) * mse)
    a1 = (msr - mse) / (msr + (k - 1) * mse + (k / n) * (msc - mse))
    return a1, c1


def f_quantile_bisect(p, df1, df2):
    """Invert the F CDF (regularized incomplete beta) by bisection."""

    def cdf(x):
        return special.betainc(df1 / 2, df2 / 2, df1 * x / (df1 * x + df2))

    lo, hi = 0.0, 1.0
    while cdf(hi) < p:
        hi *= 2
    for _ in range(200):
        mid = (lo + hi) / 2
        if cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def agreement_ci_oracle(matrix, alpha=0.05):
    """Agreement CI in the vn/vd parametrization used by the R packages;
    algebraically equivalent to the a/b Satterthwaite form but computed
    along a different path."""
    msr, msc, mse = anova_oracle(matrix)
    n, k = np.asarray(matrix).shape
    r = (msr - mse) / (msr + (k - 1) * mse + (k / n) * (msc - mse))
    fj = msc / mse
    vn = (k - 1) * (n - 1) * (k * r * fj + n * (1 + (k - 1) * r) - k * r) ** 2
    vd = (n - 1) * k**2 * r**2 * fj**2 + (n * (1 + (k - 1) * r) - k * r) ** 2
    v = vn / vd
    f_lo = stats.f.ppf(1 - alpha / 2, n - 1, v)
    f_hi = stats.f.ppf(1 - alpha / 2, v, n - 1)
    lower = n * (msr - f_lo * mse) / (
        f_lo * (k * msc + (k * n - k - n) * mse) + n * msr
    )
    upper = n * (f_hi * msr - mse) / (
        k * msc + (k * n - k - n) * mse + n * f_hi * msr
    )
    return lower, upper


# ---------------------------------------------------------------------------
# consensus_pose
# ---------------------------------------------------------------------------


class TestConsensus:
    def test_midpoint_of_two_raters(self):
        points_a = {k: Point(0.0, 0.0) for k in KEYPOINTS}
        points_b = {k: Point(2.0, 0.0) for k in KEYPOINTS}
        consensus = consensus_pose(
            [PoseAnnotation("f1", "a", points_a), PoseAnnotation("f1", "b", points_b)]
        )
        assert all(consensus[k] == Point(1.0, 0.0) for k in KEYPOINTS)

    def test_identical_annotations_are_a_fixed_point(self):
        pose = grid_pose("f1", "a")
        annotations = [
            PoseAnnotation("f1", f"a{i}", pose.points) for i in range(5)
        ]
        consensus = consensus_pose(annotations)
        assert consensus == dict(pose.points)

    def test_matches_coordinate_mean_oracle(self, rng):
        annotations = [random_pose("f1", f"a{i}", rng) for i in range(10)]
        consensus = consensus_pose(annotations)
        for k in KEYPOINTS:
            xs = [a.points[k].x for a in annotations]
            ys = [a.points[k].y for a in annotations]
            assert consensus[k].x == pytest.approx(np.mean(xs), abs=1e-12)
            assert consensus[k].y == pytest.approx(np.mean(ys), abs=1e-12)

    def test_rejects_single_annotation_and_mixed_frames(self):
        with pytest.raises(ValueError, match="at least 2"):
            consensus_pose([grid_pose("f1", "a")])
        with pytest.raises(ValueError, match="mixed"):
            consensus_pose([grid_pose("f1", "a"), grid_pose("f2", "b")])


# ---------------------------------------------------------------------------
# percentile
# ---------------------------------------------------------------------------


class TestPercentile:
    def test_median_of_five(self):
        assert percentile([1, 2, 3, 4, 5], 0.5) == 3

    def test_singleton(self):
        for p in (0.0, 0.31, 0.95, 1.0):
            assert percentile([7.0], p) == 7.0

    def test_hand_computed_interpolation(self):
        # rank = 0.95 * 3 = 2.85 -> 30 + 0.85 * 10
        assert percentile([10, 20, 30, 40], 0.95) == pytest.approx(38.5)

    def test_extremes_hit_min_and_max(self):
        sample = [4.0, -1.0, 9.0, 2.0]
        assert percentile(sample, 0.0) == -1.0
        assert percentile(sample, 1.0) == 9.0

    def test_matches_numpy_linear_interpolation(self, rng):
        for _ in range(50):
            sample = rng.normal(size=rng.integers(1, 40)).tolist()
            p = float(rng.uniform())
            assert percentile(sample, p) == pytest.approx(
                float(np.percentile(sample, p * 100)), abs=1e-12
            )

    def test_monotone_in_p_and_bounded(self, rng):
        sample = rng.normal(size=25).tolist()
        values = [percentile(sample, p) for p in np.linspace(0, 1, 21)]
        assert values == sorted(values)
        assert values[0] == min(sample) and values[-1] == max(sample)

    def test_rejects_empty_and_bad_p(self):
        with pytest.raises(ValueError):
            percentile([], 0.5)
        with pytest.raises(ValueError):
            percentile([1.0], 1.5)


# ---------------------------------------------------------------------------
# annotation_spread
# ---------------------------------------------------------------------------


def shift_pose(pose, dx, dy):
    return PoseAnnotation(
        pose.frame_id,
        pose.annotator_id,
        {k: Point(p.x + dx, p.y + dy) for k, p in pose.points.items()},
    )


class TestAnnotationSpread:
    def test_two_raters_two_pixels_apart(self):
        # raters at (0,0) and (2,0): each 1 px from the mean, diagonal 1000
        base = {k: Point(0.0, 0.0) for k in KEYPOINTS}
        other = {k: Point(2.0, 0.0) for k in KEYPOINTS}
        manifest = manifest_for([FrameMeta("f1", "v1", 800, 600)])
        baseline = annotation_spread(
            {
                "f1": [
                    PoseAnnotation("f1", "a", base),
                    PoseAnnotation("f1", "b", other),
                ]
            },
            manifest,
        )
        for k in KEYPOINTS:
            assert baseline.per_keypoint[k].h == pytest.approx(0.001)
        assert baseline.n_raters == 2 and baseline.n_frames == 1

    def test_identical_raters_give_zero_spread(self):
        pose = grid_pose("f1", "a")
        manifest = manifest_for([FrameMeta("f1", "v1", 800, 600)])
        baseline = annotation_spread(
            {"f1": [PoseAnnotation("f1", f"r{i}", pose.points) for i in range(4)]},
            manifest,
        )
        for k in KEYPOINTS:
            assert baseline.per_keypoint[k] == SpreadStat(0.0, 0.0)

    def test_matches_rayleigh_expectation_for_gaussian_raters(self, rng):
        # E[|x - mean|] for N raters with per-axis sigma is
        # sigma * sqrt(pi (N-1) / (2N)); checked by direct simulation.
        sigma, n_raters, n_frames = 2.0, 10, 400
        width, height = 4000, 3000
        frames = [FrameMeta(f"f{i:04d}", "v1", width, height) for i in range(n_frames)]
        manifest = manifest_for(frames)
        interrater = {}
        for f in frames:
            center = grid_pose(f.frame_id, "gt", width, height)
            interrater[f.frame_id] = [
                shift_pose(
                    PoseAnnotation(f.frame_id, f"r{j}", center.points),
                    rng.normal(0, sigma),
                    rng.normal(0, sigma),
                )
                for j in range(n_raters)
            ]
        baseline = annotation_spread(interrater, manifest)
        expected = sigma * math.sqrt(math.pi * (n_raters - 1) / (2 * n_raters)) / 5000
        overall = baseline.overall().h
        assert overall == pytest.approx(expected, rel=0.02)

    def test_translation_of_a_frame_leaves_spread_unchanged(self, rng):
        frames = [FrameMeta("f1", "v1", 2000, 2000)]
        manifest = manifest_for(frames)
        annotations = [
            shift_pose(grid_pose("f1", f"r{j}", 1000, 1000), rng.uniform(0, 5), rng.uniform(0, 5))
            for j in range(5)
        ]
        before = annotation_spread({"f1": annotations}, manifest)
        shifted = [shift_pose(a, 100.0, 50.0) for a in annotations]
        after = annotation_spread({"f1": shifted}, manifest)
        for k in KEYPOINTS:
            assert after.per_keypoint[k].h == pytest.approx(
                before.per_keypoint[k].h, abs=1e-12
            )

    def test_permutation_invariance_over_raters_and_frames(self, rng):
        frames = [FrameMeta(f"f{i}", "v1", 1000, 1000) for i in range(4)]
        manifest = manifest_for(frames)
        interrater = {
            f.frame_id: [random_pose(f.frame_id, f"r{j}", rng, 1000, 1000) for j in range(4)]
            for f in frames
        }
        base = annotation_spread(interrater, manifest)
        scrambled = {
            fid: list(reversed(poses)) for fid, poses in reversed(interrater.items())
        }
        assert annotation_spread(scrambled, manifest) == base

    def test_unequal_rater_counts_rejected(self):
        manifest = manifest_for([FrameMeta("f1", "v1", 800, 600), FrameMeta("f2", "v1", 800, 600)])
        interrater = {
            "f1": [grid_pose("f1", "a"), grid_pose("f1", "b")],
            "f2": [grid_pose("f2", "a"), grid_pose("f2", "b"), grid_pose("f2", "c")],
        }
        with pytest.raises(ValueError, match="expected 2"):
            annotation_spread(interrater, manifest)

    def test_fewer_than_two_raters_rejected(self):
        manifest = manifest_for([FrameMeta("f1", "v1", 800, 600)])
        with pytest.raises(ValueError, match="at least 2"):
            annotation_spread({"f1": [grid_pose("f1", "a")]}, manifest)


# ---------------------------------------------------------------------------
# ICC
# ---------------------------------------------------------------------------


class TestIcc:
    def test_fixture_matrix_mean_squares_and_coefficients(self):
        result = icc([[1, 2], [3, 4], [5, 6]])
        assert result.ms_rows == pytest.approx(8.0, abs=1e-12)
        assert result.ms_cols == pytest.approx(1.5, abs=1e-12)
        assert result.ms_err == pytest.approx(0.0, abs=1e-12)
        assert result.icc_c1 == pytest.approx(1.0, abs=1e-9)
        assert result.icc_a1 == pytest.approx(8.0 / 9.0, abs=1e-9)

    def test_offset_rater_keeps_consistency_at_one(self, rng):
        subjects = rng.normal(0, 3, size=12)
        matrix = np.column_stack([subjects, subjects + 1.0])
        result = icc(matrix)
        assert result.icc_c1 == pytest.approx(1.0, abs=1e-9)
        assert result.icc_a1 < 1.0

    def test_identical_raters_give_both_ones(self, rng):
        subjects = rng.normal(0, 3, size=10)
        result = icc(np.column_stack([subjects, subjects]))
        assert result.icc_a1 == pytest.approx(1.0, abs=1e-9)
        assert result.icc_c1 == pytest.approx(1.0, abs=1e-9)

    def test_matches_hand_anova_oracle_on_random_matrices(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 12))
            k = int(rng.integers(2, 6))
            matrix = rng.normal(0, 2, size=(n, k))
            result = icc(matrix)
            a1, c1 = icc_oracle(matrix)
            assert result.icc_a1 == pytest.approx(a1, abs=1e-10)
            assert result.icc_c1 == pytest.approx(c1, abs=1e-10)

    def test_offset_to_one_rater_strictly_decreases_agreement(self, rng):
        # needs genuine subject variance (MSR > MSE); with a negative point
        # estimate the larger denominator would move the ratio toward zero
        for _ in range(25):
            subjects = rng.normal(0, 3, size=(8, 1))
            matrix = subjects + rng.normal(0, 0.5, size=(8, 3))
            base = icc(matrix)
            shifted = matrix.copy()
            shifted[:, 0] += 5.0
            moved = icc(shifted)
            assert moved.icc_a1 < base.icc_a1
            assert moved.icc_c1 == pytest.approx(base.icc_c1, abs=1e-9)

    def test_invariant_under_common_positive_affine_transform(self, rng):
        matrix = rng.normal(0, 2, size=(10, 4))
        base = icc(matrix)
        transformed = icc(matrix * 3.7 + 11.0)
        assert transformed.icc_a1 == pytest.approx(base.icc_a1, abs=1e-9)
        assert transformed.icc_c1 == pytest.approx(base.icc_c1, abs=1e-9)

    def test_constant_matrix_reported_degenerate(self):
        with pytest.raises(DegenerateRatingsError):
            icc(np.full((5, 3), 2.0))

    def test_rejects_undersized_matrices(self):
        with pytest.raises(ValueError):
            icc([[1.0, 2.0]])
        with pytest.raises(ValueError):
            icc([[1.0], [2.0]])


class TestFQuantile:
    def test_matches_scipy_and_bisection_oracles(self, rng):
        for _ in range(40):
            p = float(rng.uniform(0.01, 0.99))
            df1 = float(rng.integers(1, 40))
            df2 = float(rng.integers(1, 40))
            ours = f_quantile(p, df1, df2)
            assert ours == pytest.approx(float(stats.f.ppf(p, df1, df2)), rel=1e-9)
            assert ours == pytest.approx(f_quantile_bisect(p, df1, df2), rel=1e-10)

    def test_round_trips_through_the_cdf(self):
        q = f_quantile(0.975, 2, 18)
        assert float(stats.f.cdf(q, 2, 18)) == pytest.approx(0.975, abs=1e-12)


class TestIccConfidence:
    def test_zero_error_case_upper_bound_is_one(self):
        result = icc_confidence(icc([[1, 2], [3, 4], [5, 6]]))
        assert result.ci_c1 == (1.0, 1.0)
        assert result.ci_a1 is not None
        lo, hi = result.ci_a1
        assert lo <= 8.0 / 9.0 <= hi

    def test_fixture_interval_matches_hand_computed_bounds(self):
        # With MS_err = 0 the Satterthwaite df collapses to k-1 = 1 and the
        # agreement bounds reduce to n*MSR / (F * k * MSC + n * MSR) and
        # n*F*MSR / (k*MSC + n*F*MSR); computed here with scipy quantiles.
        result = icc_confidence(icc([[1, 2], [3, 4], [5, 6]]))
        f_lo = float(stats.f.ppf(0.975, 2, 1))
        f_hi = float(stats.f.ppf(0.975, 1, 2))
        expected_lo = 3 * 8.0 / (f_lo * 2 * 1.5 + 3 * 8.0)
        expected_hi = 3 * f_hi * 8.0 / (2 * 1.5 + 3 * f_hi * 8.0)
        assert result.ci_a1[0] == pytest.approx(expected_lo, rel=1e-9)
        assert result.ci_a1[1] == pytest.approx(expected_hi, rel=1e-9)

    def test_alpha_one_gives_zero_width_at_point_estimates(self, rng):
        result = icc_confidence(icc(rng.normal(size=(9, 3))), alpha=1.0)
        assert result.ci_a1 == (result.icc_a1, result.icc_a1)
        assert result.ci_c1 == (result.icc_c1, result.icc_c1)

    def test_intervals_bracket_point_estimates(self, rng):
        for _ in range(60):
            n = int(rng.integers(3, 15))
            k = int(rng.integers(2, 6))
            result = icc_confidence(icc(rng.normal(0, 2, size=(n, k))))
            assert result.ci_a1[0] <= result.icc_a1 + 1e-9
            assert result.icc_a1 <= result.ci_a1[1] + 1e-9
            assert result.ci_c1[0] <= result.icc_c1 + 1e-9
            assert result.icc_c1 <= result.ci_c1[1] + 1e-9

    def test_consistency_interval_coverage_under_the_null_model(self, rng):
        # Two-way model with known rho_C: subject effect + rater effect +
        # noise. The 95% interval should cover the true consistency about
        # 95% of the time.
        sigma_subject, sigma_rater, sigma_noise = 2.0, 1.0, 1.0
        true_c = sigma_subject**2 / (sigma_subject**2 + sigma_noise**2)
        n, k, trials = 30, 4, 400
        covered = 0
        for _ in range(trials):
            subjects = rng.normal(0, sigma_subject, size=(n, 1))
            raters = rng.normal(0, sigma_rater, size=(1, k))
            noise = rng.normal(0, sigma_noise, size=(n, k))
            result = icc_confidence(icc(subjects + raters + noise))
            if result.ci_c1[0] <= true_c <= result.ci_c1[1]:
                covered += 1
        assert covered / trials == pytest.approx(0.95, abs=0.035)

    def test_agreement_bounds_match_independent_transcription(self, rng):
        for _ in range(50):
            n = int(rng.integers(3, 20))
            k = int(rng.integers(2, 6))
            matrix = rng.normal(0, 1, (n, 1)) * 2 + rng.normal(0, 1, (n, k))
            result = icc_confidence(icc(matrix))
            lower, upper = agreement_ci_oracle(matrix)
            assert result.ci_a1[0] == pytest.approx(lower, rel=1e-9, abs=1e-12)
            assert result.ci_a1[1] == pytest.approx(upper, rel=1e-9, abs=1e-12)

    def test_agreement_interval_coverage_under_the_null_model(self, rng):
        # The agreement interval rests on a Satterthwaite approximation
        # whose accuracy degrades when few raters carry a large rater
        # effect, so coverage is checked where the approximation is sound:
        # a small rater effect.
        sigma_subject, sigma_rater, sigma_noise = 2.0, 0.1, 1.0
        true_a = sigma_subject**2 / (
            sigma_subject**2 + sigma_rater**2 + sigma_noise**2
        )
        n, k, trials = 30, 4, 400
        covered = 0
        for _ in range(trials):
            subjects = rng.normal(0, sigma_subject, size=(n, 1))
            raters = rng.normal(0, sigma_rater, size=(1, k))
            noise = rng.normal(0, sigma_noise, size=(n, k))
            result = icc_confidence(icc(subjects + raters + noise))
            if result.ci_a1[0] <= true_a <= result.ci_a1[1]:
                covered += 1
        assert covered / trials == pytest.approx(0.95, abs=0.04)


class TestModelVsHuman:
    def test_equal_vectors_give_perfect_agreement(self, rng):
        values = {k: float(rng.uniform(0.002, 0.01)) for k in KEYPOINTS}
        result = model_vs_human_icc(values, values)
        assert result.icc_a1 == pytest.approx(1.0, abs=1e-9)
        assert result.icc_c1 == pytest.approx(1.0, abs=1e-9)

    def test_constant_offset_keeps_consistency_but_not_agreement(self, rng):
        human = {k: float(rng.uniform(0.002, 0.01)) for k in KEYPOINTS}
        model = {k: v + 0.002 for k, v in human.items()}
        result = model_vs_human_icc(model, human)
        assert result.icc_c1 == pytest.approx(1.0, abs=1e-9)
        assert result.icc_a1 < 1.0

    def test_matches_hand_anova_oracle(self, rng):
        human = {k: float(rng.uniform(0.002, 0.01)) for k in KEYPOINTS}
        model = {k: float(rng.uniform(0.002, 0.02)) for k in KEYPOINTS}
        result = model_vs_human_icc(model, human)
        matrix = np.column_stack(
            [[model[k] for k in KEYPOINTS], [human[k] for k in KEYPOINTS]]
        )
        a1, c1 = icc_oracle(matrix)
        assert result.icc_a1 == pytest.approx(a1, abs=1e-10)
        assert result.icc_c1 == pytest.approx(c1, abs=1e-10)

    def test_unit_mismatch_heuristic(self):
        human = {k: 0.005 + 0.0001 * k.value for k in KEYPOINTS}
        model_mm = {k: 1000 * v for k, v in human.items()}
        with pytest.raises(ValueError, match="unit mismatch"):
            model_vs_human_icc(model_mm, human)

    def test_missing_keypoint_rejected(self):
        partial = {k: 0.005 for k in KEYPOINTS if k is not KeypointId.NOSE}
        full = {k: 0.005 + 0.0001 * k.value for k in KEYPOINTS}
        with pytest.raises(ValueError, match="nose"):
            model_vs_human_icc(partial, full)
