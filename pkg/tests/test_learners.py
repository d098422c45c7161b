import numpy as np
import pytest

from smoothgame.learners import (
    LinintLearner,
    ProtocolViolationError,
    StagedLearner,
    interval_of,
    median_center,
)


class TestLinint:
    def test_zero_before_feedback(self):
        assert LinintLearner().predict(0.7) == 0.0

    def test_midpoint(self):
        lnr = LinintLearner()
        lnr.observe(0.0, 0.0)
        lnr.observe(1.0, 1.0)
        assert lnr.predict(0.5) == pytest.approx(0.5)

    def test_constant_extension(self):
        lnr = LinintLearner()
        lnr.observe(0.3, 0.7)
        assert lnr.predict(0.9) == 0.7

    def test_reconsistency(self):
        rng = np.random.default_rng(0)
        lnr = LinintLearner()
        seen = []
        for _ in range(30):
            x, y = float(rng.uniform()), float(rng.normal())
            lnr.observe(x, y)
            seen.append((x, y))
        for x, y in seen:
            assert lnr.predict(x) == y

    def test_repeated_input_keeps_first(self):
        lnr = LinintLearner()
        lnr.observe(0.5, 1.0)
        lnr.observe(0.5, -3.0)
        assert lnr.predict(0.5) == 1.0

    def test_prediction_scales_with_values(self):
        # interpolation is linear in the observed values
        rng = np.random.default_rng(1)
        pts = [(float(rng.uniform()), float(rng.normal())) for _ in range(10)]
        a, b = LinintLearner(), LinintLearner()
        for x, y in pts:
            a.observe(x, y)
            b.observe(x, 2.5 * y)
        for x in rng.uniform(0, 1, 20):
            assert b.predict(float(x)) == pytest.approx(2.5 * a.predict(float(x)))


class TestIntervalOf:
    @pytest.mark.parametrize(
        "x,expected",
        [(0.0, 1), (0.2499, 1), (0.25, 2), (0.49, 2), (0.5, 3), (0.74, 3), (0.75, 4), (1.0, 4)],
    )
    def test_boundaries(self, x, expected):
        assert interval_of(x) == expected

    def test_domain(self):
        with pytest.raises(ValueError):
            interval_of(1.5)


class TestMedianCenter:
    def test_sorted_median(self):
        assert median_center([0.0, 5.0, 0.0], 1) == 0.0

    def test_all_equal(self):
        assert median_center([2.0, 2.0, 2.0], 1) == 2.0

    def test_five_values(self):
        assert median_center([-1.0, -1.0, 1.0, 1.0, 3.0], 2) == 1.0

    def test_count_check(self):
        with pytest.raises(ValueError):
            median_center([1.0, 2.0], 1)


def make_learner(eta=1, p=2.0):
    return StagedLearner(eta=eta, p=p)


def feed_initial(lnr, values, xs=None):
    xs = xs if xs is not None else [0.01 * (i + 1) for i in range(len(values))]
    for x, y in zip(xs, values):
        assert lnr.predict(x) == 0.0
        lnr.observe(x, y)


class TestStagedInitialPhase:
    def test_center_is_median(self):
        lnr = make_learner(eta=1)
        feed_initial(lnr, [1.0, 5.0, 2.0])
        assert lnr.global_center == 2.0

    def test_staged_calls_before_init_error(self):
        lnr = make_learner()
        with pytest.raises(ProtocolViolationError):
            lnr.staged_predict(0.3)
        with pytest.raises(ProtocolViolationError):
            lnr.staged_observe(0.3, 0.0)

    def test_certification_guard(self):
        with pytest.raises(ValueError):
            StagedLearner(eta=1, p=1.5)
        lnr = StagedLearner(eta=1, p=1.5, threshold=4.0)  # experimental mode
        assert lnr.threshold == 4.0


class TestStagedPrediction:
    def test_sparse_interval_predicts_center(self):
        lnr = make_learner(eta=1)
        feed_initial(lnr, [2.0, 2.0, 2.0])
        # two points in interval 2 is below the 2*eta+1 = 3 threshold
        for x in (0.3, 0.31):
            yhat, mimicked = lnr.staged_predict(x)
            assert (yhat, mimicked) == (2.0, False)
            lnr.staged_observe(x, 2.0)

    def test_full_interval_mimics_inner(self):
        lnr = make_learner(eta=1)
        feed_initial(lnr, [2.0, 2.0, 2.0])
        for x, y in [(0.3, 2.0), (0.31, 2.1), (0.32, 1.9)]:
            lnr.staged_predict(x)
            lnr.staged_observe(x, y)
        yhat, mimicked = lnr.staged_predict(0.35)
        assert mimicked
        # interval center is 2.0; inner interpolates within the band
        assert 1.5 <= yhat <= 2.5
        assert lnr.centers[1] == 2.0

    def test_clamped_prediction_stays_in_band(self):
        lnr = make_learner(eta=1)
        feed_initial(lnr, [0.0, 0.0, 0.0])
        # inner learner knows points far below the interval band
        for x, y in [(0.3, 0.4), (0.31, 0.5), (0.32, 0.45)]:
            lnr.staged_predict(x)
            lnr.staged_observe(x, y)
        # interval center 0.45; inner predicts its hull, already in band
        yhat, mimicked = lnr.staged_predict(0.33)
        c = lnr.centers[1]
        assert mimicked and c - 0.5 <= yhat <= c + 0.5


class TestStagedEvents:
    def fill_interval(self, lnr, base=2.0):
        for x, y in [(0.3, base), (0.31, base + 0.1), (0.32, base - 0.1)]:
            lnr.predict(x)
            lnr.observe(x, y)

    def test_out_of_band_revelation_resets(self):
        lnr = make_learner(eta=1)
        feed_initial(lnr, [2.0, 2.0, 2.0])
        self.fill_interval(lnr)
        lnr.staged_predict(0.35)
        reset = lnr.staged_observe(0.35, 2.0 + 0.8)  # outside [c - 1/2, c + 1/2]
        assert reset
        assert lnr.stage_index == 2
        assert lnr.stores == [[], [], [], []]
        assert lnr.centers == [None, None, None, None]
        # immediately after a reset the prediction is the global center
        yhat, mimicked = lnr.staged_predict(0.35)
        assert (yhat, mimicked) == (2.0, False)

    def test_perceived_budget_resets(self):
        lnr = make_learner(eta=1)
        feed_initial(lnr, [0.0, 0.0, 0.0])
        self.fill_interval(lnr, base=0.0)
        resets = 0
        # in-band lies force perceived error past the unit threshold
        rng = np.random.default_rng(3)
        for k in range(60):
            x = 0.26 + 0.2 * float(rng.uniform())
            if any(x == u for u, _ in lnr.stores[1]):
                continue
            yhat, mimicked = lnr.staged_predict(x)
            c = lnr.centers[1]
            if not mimicked:
                lnr.staged_observe(x, 0.0)
                continue
            y = c + 0.49 if (k % 2 == 0) else c - 0.49
            if lnr.staged_observe(x, y):
                resets += 1
                break
        assert resets == 1

    def test_stage_resets_counted(self):
        lnr = make_learner(eta=2)
        assert lnr.stage_resets == 0
        feed_initial(lnr, [1.0] * 5)
        assert lnr.stage_index == 1

    def test_observe_must_match_predict(self):
        lnr = make_learner(eta=1)
        feed_initial(lnr, [0.0, 0.0, 0.0])
        lnr.staged_predict(0.3)
        with pytest.raises(ProtocolViolationError):
            lnr.staged_observe(0.9, 0.0)

    def test_non_mimicked_never_resets(self):
        lnr = make_learner(eta=1)
        feed_initial(lnr, [0.0, 0.0, 0.0])
        lnr.staged_predict(0.8)
        assert not lnr.staged_observe(0.8, 100.0)  # wild value, but not mimicked
        assert lnr.stage_index == 1
