import numpy as np
import pytest

from spamprof.email_model import RawEmail
from spamprof.metrics import (
    confusion,
    fnr_at_fpr,
    fpr_fnr,
    header_line_histogram,
    header_line_histograms,
    roc,
    write_header_histogram_csv,
    write_roc_csv,
)


def _pair_count_auc(scores, labels, positive="spam"):
    """Independent oracle: probability a random spam/ham pair is ranked
    correctly, ties counted one half."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.array([l == positive for l in labels])
    pos = s[y][:, None]
    neg = s[~y][None, :]
    greater = np.sum(pos > neg)
    equal = np.sum(pos == neg)
    return (greater + 0.5 * equal) / (pos.size * neg.size / 1)


# ---------------------------------------------------------------------------
# confusion and rates


def test_confusion_by_hand():
    true = ["spam", "spam", "ham"] + ["ham"] * 7
    pred = ["spam", "spam", "spam"] + ["ham"] * 7
    cm = confusion(true, pred, ("ham", "spam"))
    assert cm.counts.tolist() == [[7, 1], [0, 2]]
    assert cm.total == 10


def test_confusion_diagonal_when_perfect():
    labels = ["a", "b", "c", "a", "b"]
    cm = confusion(labels, labels, ("a", "b", "c"))
    assert np.array_equal(cm.counts, np.diag([2, 2, 1]))


def test_confusion_marginals():
    rng = np.random.default_rng(0)
    classes = ("a", "b", "c")
    true = [classes[i] for i in rng.integers(0, 3, 60)]
    pred = [classes[i] for i in rng.integers(0, 3, 60)]
    cm = confusion(true, pred, classes)
    for i, cls in enumerate(classes):
        assert cm.counts[i].sum() == true.count(cls)
        assert cm.counts[:, i].sum() == pred.count(cls)


def test_confusion_rejects_unknown_label():
    with pytest.raises(ValueError, match="notaclass"):
        confusion(["notaclass"], ["ham"], ("ham", "spam"))
    with pytest.raises(ValueError, match="length|vs"):
        confusion(["ham"], ["ham", "spam"], ("ham", "spam"))


def test_fpr_fnr_arithmetic():
    counts = np.array([[199, 1], [3, 97]])
    cm = confusion(
        ["ham"] * 200 + ["spam"] * 100,
        ["ham"] * 199 + ["spam"] + ["ham"] * 3 + ["spam"] * 97,
        ("ham", "spam"),
    )
    assert np.array_equal(cm.counts, counts)
    rates = fpr_fnr(cm)
    assert rates.fpr == pytest.approx(0.005)
    assert rates.fnr == pytest.approx(0.03)
    assert rates.fpr_defined and rates.fnr_defined


def test_fpr_fnr_perfect_classifier():
    cm = confusion(["ham", "spam"], ["ham", "spam"], ("ham", "spam"))
    rates = fpr_fnr(cm)
    assert (rates.fpr, rates.fnr) == (0.0, 0.0)


def test_fpr_flagged_when_no_ham():
    cm = confusion(["spam", "spam"], ["spam", "ham"], ("ham", "spam"))
    rates = fpr_fnr(cm)
    assert rates.fpr == 0.0
    assert not rates.fpr_defined
    assert rates.fnr == pytest.approx(0.5)


def test_fpr_fnr_rejects_non_binary():
    cm = confusion(["a"], ["a"], ("a", "b", "c"))
    with pytest.raises(ValueError, match="binary"):
        fpr_fnr(cm)


# ---------------------------------------------------------------------------
# ROC / AUC


def test_roc_perfect_separation():
    curve = roc([0.9, 0.8, 0.3, 0.1], ["spam", "spam", "ham", "ham"])
    assert curve.auc == 1.0
    assert (curve.fpr[0], curve.tpr[0]) == (0.0, 0.0)
    assert (curve.fpr[-1], curve.tpr[-1]) == (1.0, 1.0)


def test_roc_all_scores_equal():
    curve = roc([0.4, 0.4, 0.4], ["spam", "ham", "spam"])
    assert curve.fpr.tolist() == [0.0, 1.0]
    assert curve.tpr.tolist() == [0.0, 1.0]
    assert curve.auc == 0.5


def test_roc_rejects_single_class_and_bad_scores():
    with pytest.raises(ValueError, match="both classes"):
        roc([0.1, 0.2], ["spam", "spam"])
    with pytest.raises(ValueError, match="finite"):
        roc([np.nan, 0.2], ["spam", "ham"])


def test_roc_monotone_axes():
    rng = np.random.default_rng(1)
    scores = rng.random(200)
    labels = ["spam" if v else "ham" for v in rng.integers(0, 2, 200)]
    curve = roc(scores, labels)
    assert (np.diff(curve.fpr) >= 0).all()
    assert (np.diff(curve.tpr) >= 0).all()
    assert (np.diff(curve.thresholds) < 0).all()


def test_auc_equals_pair_counting_sampled():
    rng = np.random.default_rng(2)
    for _ in range(50):
        n = int(rng.integers(2, 120))
        labels = ["spam" if v else "ham" for v in rng.integers(0, 2, n)]
        if "spam" not in labels:
            labels[0] = "spam"
        if "ham" not in labels:
            labels[-1] = "ham"
        scores = rng.choice(np.linspace(0, 1, 9), size=n)  # heavy ties
        curve = roc(scores, labels)
        assert curve.auc == pytest.approx(_pair_count_auc(scores, labels), abs=1e-12)


def test_roc_invariant_under_increasing_transform():
    rng = np.random.default_rng(3)
    scores = rng.random(80)
    labels = ["spam" if v else "ham" for v in rng.integers(0, 2, 80)]
    labels[0], labels[-1] = "spam", "ham"
    a = roc(scores, labels)
    b = roc(np.exp(3.0 * scores), labels)
    assert np.array_equal(a.fpr, b.fpr)
    assert np.array_equal(a.tpr, b.tpr)
    assert a.auc == pytest.approx(b.auc, abs=1e-12)


# ---------------------------------------------------------------------------
# operating points


def test_fnr_at_fpr_perfect_scores():
    op = fnr_at_fpr([0.9, 0.8, 0.3, 0.1], ["spam", "spam", "ham", "ham"], 0.005)
    assert op.fnr == 0.0
    assert op.achieved_fpr == 0.0


def test_fnr_at_fpr_hand_enumerated():
    # thresholds inf, 0.9, 0.8, 0.7 give fpr 0, 0, 1, 1; only 0.9 helps
    op = fnr_at_fpr([0.9, 0.8, 0.7], ["spam", "ham", "spam"], 0.4)
    assert op.threshold == 0.9
    assert op.fnr == pytest.approx(0.5)
    assert op.achieved_fpr == 0.0


def test_fnr_at_fpr_degenerate_returns_all_ham_threshold():
    # every threshold that catches any spam also misfires on all hams
    op = fnr_at_fpr([0.9, 0.1], ["ham", "spam"], 0.3)
    assert op.fnr == 1.0
    assert op.threshold == np.inf
    assert op.achieved_fpr == 0.0


def test_fnr_at_fpr_monotone_in_target():
    rng = np.random.default_rng(4)
    scores = rng.random(150)
    labels = ["spam" if v else "ham" for v in rng.integers(0, 2, 150)]
    labels[0], labels[-1] = "spam", "ham"
    previous = 1.0
    for target in (0.01, 0.05, 0.1, 0.2, 0.5, 0.9):
        op = fnr_at_fpr(scores, labels, target)
        assert op.achieved_fpr <= target
        assert op.fnr <= previous + 1e-15
        previous = op.fnr


def test_fnr_at_fpr_rejects_bad_target():
    with pytest.raises(ValueError):
        fnr_at_fpr([0.1, 0.9], ["ham", "spam"], 0.0)
    with pytest.raises(ValueError):
        fnr_at_fpr([0.1, 0.9], ["ham", "spam"], 1.0)


# ---------------------------------------------------------------------------
# header line histogram


def _email(label, header_lines):
    header = b"".join(b"X: y\n" for _ in range(header_lines))
    return RawEmail(data=header + b"\nbody", label=label)


def test_histogram_single_class():
    emails = [_email("ham", 2), _email("ham", 2), _email("ham", 2)]
    assert header_line_histogram(emails, "ham") == {2: 3}


def test_histogram_empty_class():
    assert header_line_histogram([_email("ham", 1)], "spam") == {}


def test_histograms_separate_classes():
    emails = [_email("ham", 3), _email("ham", 4), _email("spam", 12)]
    hists = header_line_histograms(emails)
    assert hists == {"ham": {3: 1, 4: 1}, "spam": {12: 1}}


def test_histogram_csv_format(tmp_path):
    path = tmp_path / "hist.csv"
    write_header_histogram_csv({"spam": {12: 1}, "ham": {3: 2}}, path)
    assert path.read_text() == (
        "class,line_count,email_count\nham,3,2\nspam,12,1\n"
    )


def test_roc_csv_format(tmp_path):
    curve = roc([0.9, 0.1], ["spam", "ham"])
    path = tmp_path / "roc.csv"
    write_roc_csv(curve, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "fpr,tpr,threshold"
    assert lines[1] == "0.0,0.0,inf"
    assert len(lines) == 1 + len(curve.fpr)
