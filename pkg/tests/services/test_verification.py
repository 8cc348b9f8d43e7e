"""
Tests for the verification suite, including its sensitivity to injected bugs.
"""
import pytest

from app.core.config import TREG_CONFIG
from app.core.exceptions import InputValidationError
from app.services import mst_engine
from app.services.mst_engine import MstGradient
from app.services.verification import (
    CHECKS,
    check_gradients,
    check_lemma1,
    check_oracle,
    check_simplex,
    check_uniformity,
    run_verification,
)


def flipped_gradient(original):
    """An MST gradient with the sign error a careless derivation would make."""
    def wrapper(cloud, mst):
        gradient = original(cloud, mst)
        return MstGradient(grads=-gradient.grads, duplicate_flags=gradient.duplicate_flags)
    return wrapper


class TestBlocks:
    """Individual blocks pass on a correct implementation."""

    def test_oracle(self):
        result = check_oracle(seed=0, clouds=40)
        assert result.passed
        assert result.cases == 40
        assert result.failures == 0

    def test_lemma1(self):
        assert check_lemma1(seed=1, clouds=100).passed

    def test_gradients(self):
        result = check_gradients(seed=2, clouds=5)
        assert result.passed
        # MST, row sums, loss_s, loss_mse and loss_var_cov per cloud
        assert result.cases == 25

    def test_uniformity(self):
        assert check_uniformity(seed=3, clouds=10).passed

    def test_simplex(self):
        result = check_simplex(seed=4, trials=20)
        assert result.passed
        assert result.cases == 40

    def test_block_seeds_are_reproducible(self):
        """The same seed gives the same outcome."""
        assert check_lemma1(seed=7, clouds=20) == check_lemma1(seed=7, clouds=20)


class TestMutationSensitivity:
    """Injected bugs are caught."""

    def test_sign_flipped_gradient_fails(self, monkeypatch):
        """A negated MST gradient fails the gradient block."""
        monkeypatch.setattr(mst_engine, "mst_length_gradient", flipped_gradient(mst_engine.mst_length_gradient))
        result = check_gradients(seed=0, clouds=5)
        assert not result.passed
        assert result.failures >= 5
        assert result.detail

    def test_wrong_tree_fails_oracle(self, monkeypatch):
        """A builder that misreports the tree length is caught."""
        original = mst_engine.kruskal_mst

        def inflated(dist):
            mst = original(dist)
            return mst_engine.Mst(edges=mst.edges, total_length=mst.total_length * 1.01, n=mst.n)

        monkeypatch.setattr(mst_engine, "kruskal_mst", inflated)
        assert not check_oracle(seed=0, clouds=10).passed

    def test_detail_is_capped(self, monkeypatch):
        """At most five failure descriptions are kept."""
        monkeypatch.setattr(mst_engine, "mst_length_gradient", flipped_gradient(mst_engine.mst_length_gradient))
        result = check_gradients(seed=0, clouds=10)
        assert len(result.detail) == 5


class TestRunVerification:
    """Block selection and the aggregate report."""

    def test_filter(self, monkeypatch):
        """Only the selected blocks run."""
        monkeypatch.setitem(TREG_CONFIG["verification"], "lemma1_clouds", 50)
        report = run_verification(seed=0, only=["lemma1"])
        assert [check.name for check in report.checks] == ["lemma1"]
        assert report.passed
        assert report.seed == 0

    def test_failure_propagates(self, monkeypatch):
        """One failing block fails the report."""
        monkeypatch.setitem(TREG_CONFIG["verification"], "lemma1_clouds", 20)
        monkeypatch.setitem(TREG_CONFIG["verification"], "gradient_clouds", 3)
        monkeypatch.setattr(mst_engine, "mst_length_gradient", flipped_gradient(mst_engine.mst_length_gradient))
        report = run_verification(seed=0, only=["lemma1", "gradients"])
        assert not report.passed
        assert [check.passed for check in report.checks] == [True, False]

    @pytest.mark.parametrize("only", [["bogus"], ["lemma1", "nope"], []])
    def test_unknown_blocks(self, only):
        """Unknown or empty selections are input errors."""
        with pytest.raises(InputValidationError):
            run_verification(only=only)

    def test_block_names(self):
        assert list(CHECKS) == ["oracle", "lemma1", "gradients", "uniformity", "density", "simplex"]


@pytest.mark.slow
class TestFullSuite:
    """The complete suite with its configured case counts."""

    def test_fresh_checkout_passes(self):
        report = run_verification(seed=0)
        assert report.passed, [check.detail for check in report.checks if not check.passed]
        assert len(report.checks) == len(CHECKS)
