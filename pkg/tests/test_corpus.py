import numpy as np
import pytest

from spamprof.corpus import (
    ClassSpec,
    Dataset,
    IndexFormatError,
    SyntheticSpec,
    chronological_split,
    generate_synthetic,
    iter_emails,
    load,
    parse_index,
    preset_spec,
    read_index,
)
from spamprof.email_model import RawEmail, Scope, count_header_lines
from spamprof.profiles import ProfileKind, profile_email


# ---------------------------------------------------------------------------
# index parsing


def test_parse_index_order_preserved():
    index = parse_index("spam ../data/inmail.1\nham ../data/inmail.2")
    assert index.entries == (("spam", "../data/inmail.1"), ("ham", "../data/inmail.2"))


def test_parse_index_empty():
    assert len(parse_index("")) == 0
    assert len(parse_index("\n\n")) == 0


def test_parse_index_rejects_line_without_whitespace():
    with pytest.raises(IndexFormatError, match="line 1"):
        parse_index("onlyonefield")


def test_parse_index_reports_correct_line_number():
    with pytest.raises(IndexFormatError, match="line 3"):
        parse_index("ham a\n\nbroken")


def test_parse_index_path_may_contain_spaces():
    index = parse_index("ham some dir/file name.eml")
    assert index.entries == (("ham", "some dir/file name.eml"),)


def test_class_counts():
    index = parse_index("ham a\nspam b\nham c")
    assert index.class_counts() == {"ham": 2, "spam": 1}


# ---------------------------------------------------------------------------
# loading


def _write_corpus(tmp_path, emails):
    (tmp_path / "data").mkdir()
    lines = []
    for i, (label, data) in enumerate(emails):
        rel = f"data/mail.{i}"
        (tmp_path / rel).write_bytes(data)
        lines.append(f"{label} {rel}")
    index_path = tmp_path / "index"
    index_path.write_text("\n".join(lines) + "\n")
    return index_path


def test_load_shapes_and_order(tmp_path):
    index_path = _write_corpus(tmp_path, [("ham", b"a\n\nb"), ("spam", b"XX\n\nYY")])
    ds = load(read_index(index_path), tmp_path, ProfileKind.CP)
    assert ds.features.shape == (2, 256)
    assert ds.labels == ["ham", "spam"]
    assert ds.skipped == []


def test_load_is_deterministic(tmp_path):
    index_path = _write_corpus(tmp_path, [("ham", b"a\nbb\n"), ("spam", b"ccc\n")])
    index = read_index(index_path)
    a = load(index, tmp_path, ProfileKind.LP, Scope.FULL, 10)
    b = load(index, tmp_path, ProfileKind.LP, Scope.FULL, 10)
    assert np.array_equal(a.features, b.features)
    assert a.labels == b.labels


def test_load_skips_missing_files(tmp_path):
    index_path = _write_corpus(tmp_path, [("ham", b"a"), ("spam", b"b")])
    text = index_path.read_text() + "spam data/missing.eml\n"
    index_path.write_text(text)
    ds = load(read_index(index_path), tmp_path, ProfileKind.CP)
    assert len(ds) == 2
    assert len(ds.skipped) == 1
    assert ds.skipped[0].endswith("missing.eml")


def test_load_rejects_missing_root(tmp_path):
    index = parse_index("ham a")
    with pytest.raises(FileNotFoundError, match="root"):
        load(index, tmp_path / "nope", ProfileKind.CP)


def test_load_matches_direct_profiling(tmp_path):
    emails = [("ham", b"one\ntwo\n\nbody\n"), ("spam", b"S\n\nBBBB\n")]
    index_path = _write_corpus(tmp_path, emails)
    ds = load(read_index(index_path), tmp_path, ProfileKind.LP, Scope.BODY, 20)
    for i, (_, data) in enumerate(emails):
        direct = profile_email(RawEmail(data=data), ProfileKind.LP, Scope.BODY, 20)
        assert np.array_equal(ds.features[i], direct.values)


def test_dataset_row_alignment_enforced():
    with pytest.raises(ValueError, match="counts differ"):
        Dataset(features=np.zeros((2, 3)), labels=["a"], ids=["x", "y"])


def test_dataset_csv_round_trip(tmp_path):
    ds = Dataset(features=np.arange(6, dtype=np.int64).reshape(2, 3),
                 labels=["ham", "spam"], ids=["a", "b"])
    path = tmp_path / "cache.csv"
    ds.to_csv(path)
    back = Dataset.from_csv(path)
    assert np.array_equal(back.features, ds.features)
    assert back.labels == ds.labels


# ---------------------------------------------------------------------------
# chronological split


def test_split_preserves_order():
    ds = Dataset(features=np.arange(10)[:, None], labels=[str(i) for i in range(10)],
                 ids=[str(i) for i in range(10)])
    train, test = chronological_split(ds, 7)
    assert len(train) == 7 and len(test) == 3
    assert train.labels == [str(i) for i in range(7)]
    assert test.labels == ["7", "8", "9"]


@pytest.mark.parametrize("n_train", [0, 10, 11, -1])
def test_split_rejects_out_of_range(n_train):
    ds = Dataset(features=np.zeros((10, 1)), labels=["x"] * 10, ids=["y"] * 10)
    with pytest.raises(ValueError):
        chronological_split(ds, n_train)


def test_split_sizes_match_published_corpora():
    # 75 419 = 25 220 + 50 199 emails, first 50 000 train
    assert 75_419 - 50_000 == 25_419
    # 137 705 = 27 126 + 110 579 emails, first 90 000 train
    assert 137_705 - 90_000 == 47_705
    ds = Dataset(features=np.zeros((75_419, 1), dtype=np.int64),
                 labels=["x"] * 75_419, ids=["y"] * 75_419)
    train, test = chronological_split(ds, 50_000)
    assert (len(train), len(test)) == (50_000, 25_419)


# ---------------------------------------------------------------------------
# synthetic corpora


def test_generate_is_seed_deterministic(tmp_path):
    spec = preset_spec("lp-signal", seed=77)
    a_dir = tmp_path / "a"
    b_dir = tmp_path / "b"
    index_a = generate_synthetic(spec, 30, a_dir)
    index_b = generate_synthetic(spec, 30, b_dir)
    assert index_a.entries == index_b.entries
    for _, rel in index_a.entries:
        assert (a_dir / rel).read_bytes() == (b_dir / rel).read_bytes()
    assert (a_dir / "index").read_bytes() == (b_dir / "index").read_bytes()


def test_generate_different_seeds_differ(tmp_path):
    a = generate_synthetic(preset_spec("lp-signal", seed=1), 10, tmp_path / "a")
    b = generate_synthetic(preset_spec("lp-signal", seed=2), 10, tmp_path / "b")
    bytes_a = b"".join((tmp_path / "a" / rel).read_bytes() for _, rel in a.entries)
    bytes_b = b"".join((tmp_path / "b" / rel).read_bytes() for _, rel in b.entries)
    assert bytes_a != bytes_b


def test_header_leak_preset_separates_header_counts(tmp_path):
    index = generate_synthetic(preset_spec("header-leak", seed=5), 60, tmp_path)
    counts = {"ham": [], "spam": []}
    for email in iter_emails(index, tmp_path):
        counts[email.label].append(count_header_lines(email))
    assert max(counts["ham"]) < min(counts["spam"])


def test_mixture_weights_must_sum_to_one():
    cls = ClassSpec("ham", 0.6, (1, 2), byte_weights=tuple([1 / 256] * 256))
    with pytest.raises(ValueError, match="sum to 1"):
        SyntheticSpec(classes=(cls,), seed=0)


def test_class_spec_validation():
    weights = tuple([1 / 256] * 256)
    with pytest.raises(ValueError, match="whitespace"):
        ClassSpec("bad name", 1.0, (1, 2), byte_weights=weights)
    with pytest.raises(ValueError, match="256"):
        ClassSpec("ham", 1.0, (1, 2), byte_weights=(0.5, 0.5))
    with pytest.raises(ValueError, match="header line range"):
        ClassSpec("ham", 1.0, (5, 2), byte_weights=weights)


def test_unknown_preset_rejected():
    with pytest.raises(ValueError, match="unknown preset"):
        preset_spec("nope")


def test_generate_rejects_unwritable_target(tmp_path):
    blocker = tmp_path / "occupied"
    blocker.write_text("not a directory")
    with pytest.raises(OSError):
        generate_synthetic(preset_spec("lp-signal", seed=1), 5, blocker / "sub")


def test_generated_emails_have_blank_line_structure(tmp_path):
    index = generate_synthetic(preset_spec("four-class", seed=9), 20, tmp_path)
    for email in iter_emails(index, tmp_path):
        assert b"\n\n" in email.data
        assert count_header_lines(email) >= 3


def test_disjoint_byte_palettes_make_cp_separable(tmp_path):
    from spamprof.forest import ForestParams, predict_scores_matrix, train
    from spamprof.metrics import roc

    index = generate_synthetic(preset_spec("separable-cp", seed=15), 200, tmp_path)
    ds = load(index, tmp_path, ProfileKind.CP)
    train_ds, test_ds = chronological_split(ds, 120)
    forest = train(train_ds.features, train_ds.labels,
                   ForestParams(n_trees=60, seed=8))
    spam_col = forest.classes.index("spam")
    scores = predict_scores_matrix(forest, test_ds.features)[:, spam_col]
    assert roc(scores, test_ds.labels).auc >= 0.99
